use clap::Args;
use flowgeom::diagnostics::EPS_SING;
use flowgeom::expr::Params;
use flowgeom::flows::{catalog, FlowSpec};
use flowgeom::io::{parse_params, GridSpec};

use crate::Failure;

#[derive(Args, Clone)]
pub struct FlowArgs {
    /// Catalog flow name (see `flowgeom list`).
    #[arg(long, required_unless_present_any = ["psi", "velocity"], conflicts_with_all = ["psi", "velocity"])]
    pub flow: Option<String>,
    /// User stream function ψ(x, y, t) on the flat plane.
    #[arg(long, conflicts_with = "velocity", allow_hyphen_values = true)]
    pub psi: Option<String>,
    /// User covariant velocity components separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    pub velocity: Option<String>,
    /// Time parameter.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Parameters `k=v,...`; catalog defaults fill the rest.
    #[arg(long, default_value = "", allow_hyphen_values = true)]
    pub params: String,
    /// Threshold below which |f| or a determinant counts as singular.
    #[arg(long = "eps-sing", default_value_t = EPS_SING)]
    pub eps_sing: f64,
}

/// Representative parameters for catalog flows.
pub fn default_params(name: &str) -> Params {
    let kv: &[(&str, f64)] = match name {
        "larcheveque" => &[("a", 1.0), ("b", 2.0)],
        "taylor-green" => &[("a", 1.0), ("b", 1.0), ("F", 1.0)],
        "burgers" => &[("α", 0.3), ("β", 0.5), ("γ", -0.8), ("σ₃", 0.2), ("ζ₃", 0.7)],
        "abc" => &[("A", 1.5), ("B", 1.0)],
        "hicks-interior" => &[("κ", 10.0)],
        "hicks-exterior" => &[("κ", 0.0)],
        _ => &[],
    };
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl FlowArgs {
    /// The flow and the parameters it was resolved with.
    pub fn build(&self) -> Result<(FlowSpec, Params), Failure> {
        if !(self.eps_sing >= 0.0 && self.eps_sing.is_finite()) {
            return Err(Failure::Usage("--eps-sing must be a finite non-negative number".into()));
        }
        let mut params = parse_params(&self.params)?;
        let spec = match (&self.flow, &self.psi, &self.velocity) {
            (Some(name), _, _) => {
                for (k, v) in default_params(name) {
                    params.entry(k).or_insert(v);
                }
                catalog(name, &params, self.t)?
            }
            (None, Some(psi), _) => FlowSpec::custom_stream(psi, &params, self.t)?,
            (None, None, Some(v)) => {
                let comps: Vec<&str> = v.split(';').collect();
                FlowSpec::custom_velocity(&comps, &params, self.t)?
            }
            (None, None, None) => return Err(Failure::Usage("one of --flow, --psi, --velocity is required".into())),
        };
        Ok((spec, params))
    }

    pub fn source_text(&self) -> Option<String> {
        self.psi.clone().or_else(|| self.velocity.clone())
    }
}

/// For each flow coordinate, the grid axis that carries it. The symmetry
/// coordinate of a reduction may be left out and is then held at 0.
pub fn coordinate_map(spec: &FlowSpec, grid: &GridSpec) -> Result<Vec<Option<usize>>, Failure> {
    let coords = spec.coord_names();
    for a in &grid.axes {
        if !coords.contains(&a.name) {
            return Err(Failure::Usage(format!("grid axis `{}` is not a coordinate; flow coordinates: {}", a.name, coords.join(", "))));
        }
    }
    coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let pos = grid.axes.iter().position(|a| &a.name == c);
            if pos.is_none() && !(spec.is_reduced() && i == 2) {
                return Err(Failure::Usage(format!("grid lacks axis `{c}`")));
            }
            Ok(pos)
        })
        .collect()
}

pub fn point_from(map: &[Option<usize>], grid_point: &[f64]) -> Vec<f64> {
    map.iter().map(|m| m.map_or(0.0, |k| grid_point[k])).collect()
}
