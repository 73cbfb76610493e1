use flowgeom::expr::Params;
use flowgeom::flows::FlowSpec;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::flow::FlowArgs;
use crate::Failure;

/// Run description written ahead of the data. Keys come out sorted.
#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub flow: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub params: Params,
    pub t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<String>,
    pub version: &'static str,
    pub eps_sing: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_s: Option<f64>,
}

impl Manifest {
    pub fn new(command: &str, args: &FlowArgs, spec: &FlowSpec, params: &Params) -> Manifest {
        Manifest {
            command: command.into(),
            flow: spec.name.clone(),
            source: args.source_text(),
            params: params.clone(),
            t: args.t,
            grid: None,
            points: None,
            fields: vec![],
            version: env!("CARGO_PKG_VERSION"),
            eps_sing: args.eps_sing,
            timing_s: None,
        }
    }

    pub fn to_value(&self) -> Result<Value, Failure> {
        serde_json::to_value(self).map_err(|e| Failure::Runtime(e.to_string()))
    }

    /// `# key: value` lines, values as compact JSON.
    pub fn header_lines(&self) -> Result<String, Failure> {
        let Value::Object(map) = self.to_value()? else { unreachable!("manifest is a struct") };
        let mut s = String::new();
        for (k, v) in map {
            s += &format!("# {k}: {v}\n");
        }
        Ok(s)
    }
}

pub struct Table {
    pub manifest: Manifest,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn render(&self) -> Result<String, Failure> {
        let mut s = self.manifest.header_lines()?;
        s += &self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s += &r.join(",");
            s.push('\n');
        }
        Ok(s)
    }
}

/// Evaluates `f` on `0..n`, in parallel when `jobs != 1`; results stay in
/// index order.
pub fn sweep<T, F>(n: usize, jobs: usize, f: F) -> Result<Vec<T>, Failure>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if jobs == 1 {
        return Ok((0..n).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| Failure::Runtime(e.to_string()))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}
