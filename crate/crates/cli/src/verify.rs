use std::collections::BTreeMap;
use std::io::Write;

use clap::Args;
use flowgeom::background::{christoffels, covariant_derivative, values, Tensor};
use flowgeom::diagnostics::{fhat_phase_jet, kinematics, traces};
use flowgeom::flows::{catalog, FlowSpec, CATALOG};
use flowgeom::io::parse_params;
use flowgeom::reduction::{moment_maps, reduced_constraint_residuals, reduced_metrics, reduced_traces};
use flowgeom::structures::{build_structure, pullback_forms, verify_structure};
use flowgeom::Result;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use crate::flow::default_params;
use crate::Failure;

#[derive(Args)]
pub struct VerifyCmd {
    /// Catalog flow; every catalog flow when absent.
    #[arg(long, conflicts_with_all = ["psi", "velocity"])]
    flow: Option<String>,
    /// User stream function instead of a catalog flow.
    #[arg(long, conflicts_with = "velocity", allow_hyphen_values = true)]
    psi: Option<String>,
    /// User covariant velocity components separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    velocity: Option<String>,
    /// Parameters `k=v,...` over the catalog defaults.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    params: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    /// Points per flow.
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
}

/// A random point where the flow is regular.
pub fn sample_point(spec: &FlowSpec, r: &mut StdRng) -> Vec<f64> {
    match spec.name.as_str() {
        "moffatt" => {
            let y: f64 = r.gen_range(0.1..2.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            vec![r.gen_range(-2.0..2.0), y]
        }
        "abc" => (0..3).map(|_| r.gen_range(-3.0..3.0)).collect(),
        "hill-interior" | "hicks-interior" => loop {
            let p = vec![r.gen_range(0.1..0.95), r.gen_range(-0.95..0.95), r.gen_range(0.0..6.0)];
            if p[0] * p[0] + p[1] * p[1] < 0.9 {
                return p;
            }
        },
        "hicks-exterior" => loop {
            let p = vec![r.gen_range(0.1..2.5), r.gen_range(-2.5..2.5), r.gen_range(0.0..6.0)];
            if p[0] * p[0] + p[1] * p[1] > 1.2 {
                return p;
            }
        },
        _ => (0..spec.dim()).map(|_| r.gen_range(-1.5..1.5)).collect(),
    }
}

struct Stat {
    max: f64,
    tol: f64,
    ratio: f64,
}

/// Worst residual-to-tolerance ratio per check, grouped by suite.
#[derive(Default)]
struct Suites(BTreeMap<&'static str, BTreeMap<String, Stat>>);

impl Suites {
    fn record(&mut self, suite: &'static str, key: &str, residual: f64, tol: f64) {
        let ratio = if residual.is_nan() { f64::INFINITY } else { residual / tol };
        let s = self.0.entry(suite).or_default().entry(key.to_string()).or_insert(Stat { max: residual, tol, ratio });
        if ratio > s.ratio {
            *s = Stat { max: residual, tol, ratio };
        }
    }

    fn pass(&self) -> bool {
        self.0.values().flat_map(|m| m.values()).all(|s| s.ratio <= 1.0)
    }

    fn to_json(&self) -> Value {
        let mut out = serde_json::Map::new();
        for (suite, checks) in &self.0 {
            let m: serde_json::Map<String, Value> = checks
                .iter()
                .map(|(k, s)| (k.clone(), json!({"max": s.max, "tol": s.tol, "pass": s.ratio <= 1.0})))
                .collect();
            out.insert(suite.to_string(), Value::Object(m));
        }
        Value::Object(out)
    }
}

fn structures(spec: &FlowSpec, x: &[f64], r: &mut StdRng, out: &mut Suites) -> Result<bool> {
    let mut q: Vec<f64> = spec.jets_at(x, 0)?.v.iter().map(|c| c.value()).collect();
    for c in q.iter_mut() {
        *c += r.gen_range(-0.5..0.5);
    }
    let fh = fhat_phase_jet(spec, x, &q, 0)?.value();
    if fh.abs() <= 1e-3 {
        return Ok(false);
    }
    let p = build_structure(spec, x, &q, fh)?;
    let scale = p.metric_coords()?.abs().max().max(1.0);
    for (k, v) in verify_structure(&p, spec) {
        let tol = if k.starts_with("metric") { 1e-10 * scale } else { 1e-8 * fh.abs().max(1.0) };
        out.record("structures", &k, v, tol);
    }
    Ok(true)
}

fn background(spec: &FlowSpec, x: &[f64], out: &mut Suites) -> Result<()> {
    let g = spec.geometry.metric_at(x, 3)?;
    let gamma = christoffels(&g)?;
    let g1: Vec<Vec<_>> = g.iter().map(|row| row.iter().map(|c| c.truncate(1)).collect()).collect();
    let dg = covariant_derivative(&Tensor::from_matrix(&g1, [true, true]), &gamma)?;
    let compat = dg.comps.iter().map(|c| c.value().abs()).fold(0.0, f64::max);
    out.record("background", "metric_compatibility", compat, 1e-12);
    let curv = flowgeom::background::curvature(&g)?;
    let ric = values(&curv.ricci);
    out.record("background", "ricci_symmetry", (&ric - ric.transpose()).abs().max(), 1e-10 * ric.abs().max().max(1.0));
    let kin = kinematics(spec, x)?;
    let gi = values(&g).try_inverse().ok_or(flowgeom::Error::DegenerateMetric)?;
    let (z2, s2) = traces(&kin, &gi);
    out.record("background", "f_identity", (kin.f - 0.5 * (z2 - s2)).abs(), 1e-10 * kin.f.abs().max(1.0));
    let div: f64 = (0..kin.dim).flat_map(|i| (0..kin.dim).map(move |j| (i, j))).map(|(i, j)| gi[(i, j)] * kin.gradient[(i, j)]).sum();
    out.record("background", "divergence", div.abs(), 1e-10 * kin.gradient.abs().max().max(1.0));
    let pf = pullback_forms(spec, x)?;
    out.record("pullback", "varpi", pf.varpi.abs(), 1e-9);
    out.record("pullback", "alpha", pf.alpha.abs(), 1e-9 * kin.f.abs().max(1.0));
    Ok(())
}

fn reduction(spec: &FlowSpec, x: &[f64], out: &mut Suites) -> Result<()> {
    let res = reduced_constraint_residuals(spec, x)?;
    out.record("reduction", "continuity", res.divergence.abs(), 1e-9);
    if let Some(p) = res.pressure {
        out.record("reduction", "pressure_equation", p.abs(), 1e-8);
    }
    let tr = reduced_traces(spec, x)?;
    if !tr.f3_check.is_nan() {
        out.record("reduction", "trace_identity", tr.f3_check, 1e-8 * tr.zeta2.abs().max(tr.strain2.abs()).max(1.0));
    }
    match reduced_metrics(spec, x, 1e-6) {
        Ok(m) => out.record("reduction", "metric_forms", m.form_mismatch(), 1e-9 * m.pullback.matrix.abs().max().max(1.0)),
        Err(flowgeom::Error::SingularStructure) | Err(flowgeom::Error::MissingPressure) => {}
        Err(e) => return Err(e),
    }
    out.record("reduction", "moment_level_set", moment_maps(spec, x, 1.0)?.level_set_residual, 1e-9);
    Ok(())
}

fn verify_flow(spec: &FlowSpec, n: usize, seed: u64) -> Value {
    let mut r = StdRng::seed_from_u64(seed);
    let mut suites = Suites::default();
    let (mut done, mut skipped, mut errors) = (0usize, 0usize, BTreeMap::<&str, usize>::new());
    let mut attempts = 0;
    while done < n && attempts < 20 * n.max(1) {
        attempts += 1;
        let x = sample_point(spec, &mut r);
        let step = (|| -> Result<bool> {
            if !structures(spec, &x, &mut r, &mut suites)? {
                return Ok(false);
            }
            background(spec, &x, &mut suites)?;
            if spec.is_reduced() {
                reduction(spec, &x, &mut suites)?;
            }
            Ok(true)
        })();
        match step {
            Ok(true) => done += 1,
            Ok(false) => skipped += 1,
            Err(e) => {
                skipped += 1;
                *errors.entry(e.kind()).or_default() += 1;
            }
        }
    }
    let pass = suites.pass() && done == n;
    json!({"points": done, "skipped": skipped, "errors": errors, "suites": suites.to_json(), "pass": pass})
}

pub fn run(cmd: &VerifyCmd) -> std::result::Result<(), Failure> {
    let user = parse_params(&cmd.params)?;
    let mut specs = Vec::new();
    if let Some(psi) = &cmd.psi {
        specs.push(FlowSpec::custom_stream(psi, &user, cmd.t)?);
    } else if let Some(v) = &cmd.velocity {
        specs.push(FlowSpec::custom_velocity(&v.split(';').collect::<Vec<_>>(), &user, cmd.t)?);
    } else {
        let names: Vec<&str> = match &cmd.flow {
            Some(f) => vec![f.as_str()],
            None => CATALOG.to_vec(),
        };
        for name in names {
            let mut params = default_params(name);
            params.extend(user.clone());
            specs.push(catalog(name, &params, cmd.t)?);
        }
    }
    let mut flows = serde_json::Map::new();
    let mut pass = true;
    for spec in &specs {
        let report = verify_flow(spec, cmd.n, cmd.seed);
        pass &= report["pass"] == Value::Bool(true);
        flows.insert(spec.name.clone(), report);
    }
    let report = json!({
        "flows": flows,
        "n": cmd.n,
        "seed": cmd.seed,
        "pass": pass,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&report).map_err(|e| Failure::Runtime(e.to_string()))?);
    match &cmd.out {
        Some(p) => std::fs::write(p, &text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::Verification("one or more residuals exceed their tolerance".into()))
    }
}
