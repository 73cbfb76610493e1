use flowgeom::background::values;
use flowgeom::diagnostics::{
    classify_value, flow_field, helicity_density, kinematics, phase_scalar_curvature, pullback_eigenvalues,
    pullback_metric, pullback_scalar_curvature, traces, Eigenvalues,
};
use flowgeom::flows::FlowSpec;
use flowgeom::io::format_float;
use flowgeom::reduction::{
    fhat3, h_plus_minus, moment_maps, reduced_constraint_residuals, reduced_curvatures, reduced_metrics, reduced_traces,
};
use flowgeom::{Error, Result};
use nalgebra::DMatrix;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(&'static str),
    Nan,
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_float(*v),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.to_string(),
            Cell::Nan => "nan".into(),
        }
    }
}

type Eval = fn(&FlowSpec, &[f64], f64) -> Result<Cell>;

pub struct Field {
    pub name: &'static str,
    pub help: &'static str,
    applies: fn(&FlowSpec) -> bool,
    eval: Eval,
}

const fn field(name: &'static str, help: &'static str, applies: fn(&FlowSpec) -> bool, eval: Eval) -> Field {
    Field { name, help, applies, eval }
}

fn any(_: &FlowSpec) -> bool {
    true
}

fn has_psi(s: &FlowSpec) -> bool {
    s.is_stream() || s.is_reduced()
}

fn two_d(s: &FlowSpec) -> bool {
    s.dim() == 2 || s.is_reduced()
}

fn three_d(s: &FlowSpec) -> bool {
    s.dim() == 3
}

fn full_3d(s: &FlowSpec) -> bool {
    s.dim() == 3 && !s.is_reduced()
}

fn num(v: f64) -> Result<Cell> {
    Ok(Cell::Num(v))
}

fn psi(s: &FlowSpec, p: &[f64], _: f64) -> Result<Cell> {
    num(s.jets_at(p, 0)?.psi.ok_or(Error::UnknownField("psi".into()))?.value())
}

fn velocity(s: &FlowSpec, p: &[f64], i: usize) -> Result<Cell> {
    num(s.jets_at(p, 0)?.v[i].value())
}

fn divergence(s: &FlowSpec, p: &[f64], _: f64) -> Result<Cell> {
    let ff = flow_field(s, p, 0)?;
    let n = ff.dim();
    num((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| ff.ginv[i][j].value() * ff.a[i][j].value()).sum())
}

fn background(s: &FlowSpec, p: &[f64]) -> Result<DMatrix<f64>> {
    Ok(values(&s.geometry.metric_at(p, 0)?))
}

fn eigen(s: &FlowSpec, p: &[f64], eps: f64) -> Result<Eigenvalues> {
    let g = pullback_metric(s, p, eps)?;
    Ok(pullback_eigenvalues(&g, &background(s, p)?, Some(&kinematics(s, p)?)))
}

fn eigen_at(s: &FlowSpec, p: &[f64], eps: f64, k: usize) -> Result<Cell> {
    num(eigen(s, p, eps)?.values[k])
}

fn metric_entry(s: &FlowSpec, p: &[f64], eps: f64, i: usize, j: usize) -> Result<Cell> {
    num(pullback_metric(s, p, eps)?.matrix[(i, j)])
}

fn trace_pair(s: &FlowSpec, p: &[f64]) -> Result<(f64, f64)> {
    let kin = kinematics(s, p)?;
    let gi = background(s, p)?.try_inverse().ok_or(Error::DegenerateMetric)?;
    Ok(traces(&kin, &gi))
}

pub fn diagnose() -> Vec<Field> {
    vec![
        field("psi", "stream function", has_psi, psi),
        field("v1", "covariant velocity component 1", any, |s, p, _| velocity(s, p, 0)),
        field("v2", "covariant velocity component 2", any, |s, p, _| velocity(s, p, 1)),
        field("v3", "covariant velocity component 3", three_d, |s, p, _| velocity(s, p, 2)),
        field("zeta", "scalar vorticity of the planar part", two_d, |s, p, _| {
            num(kinematics(s, p)?.scalar_vorticity.ok_or(Error::Dimension(s.dim()))?)
        }),
        field("f", "pressure diagnostic f = (|zeta|^2 - |S|^2)/2", any, |s, p, _| num(kinematics(s, p)?.f)),
        field("class", "elliptic, hyperbolic or parabolic by the sign of f", any, |s, p, eps| {
            Ok(Cell::Text(classify_value(kinematics(s, p)?.f, eps).name()))
        }),
        field("Rhat", "scalar curvature of the phase-space metric", any, |s, p, _| num(phase_scalar_curvature(s, p)?)),
        field("R", "scalar curvature of the pullback metric", any, |s, p, eps| num(pullback_scalar_curvature(s, p, eps)?.r)),
        field("Rtilde", "scalar curvature of the Hessian metric", has_psi, |s, p, eps| {
            num(pullback_scalar_curvature(s, p, eps)?.rtilde.ok_or(Error::DegenerateHessian)?)
        }),
        field("g11", "pullback metric component", any, |s, p, e| metric_entry(s, p, e, 0, 0)),
        field("g12", "pullback metric component", any, |s, p, e| metric_entry(s, p, e, 0, 1)),
        field("g22", "pullback metric component", any, |s, p, e| metric_entry(s, p, e, 1, 1)),
        field("g13", "pullback metric component", full_3d, |s, p, e| metric_entry(s, p, e, 0, 2)),
        field("g23", "pullback metric component", full_3d, |s, p, e| metric_entry(s, p, e, 1, 2)),
        field("g33", "pullback metric component", full_3d, |s, p, e| metric_entry(s, p, e, 2, 2)),
        field("signature", "signature of the pullback metric", any, |s, p, eps| {
            Ok(Cell::Text(pullback_metric(s, p, eps)?.signature.name()))
        }),
        field("E+", "largest pullback eigenvalue relative to the background", any, |s, p, e| eigen_at(s, p, e, 0)),
        field("E-", "smallest pullback eigenvalue relative to the background", two_d, |s, p, e| {
            let ev = eigen(s, p, e)?;
            num(*ev.values.last().expect("nonempty spectrum"))
        }),
        field("E1", "pullback eigenvalues, descending", any, |s, p, e| eigen_at(s, p, e, 0)),
        field("E2", "pullback eigenvalues, descending", any, |s, p, e| eigen_at(s, p, e, 1)),
        field("E3", "pullback eigenvalues, descending", full_3d, |s, p, e| eigen_at(s, p, e, 2)),
        field("DR", "sqrt(zeta^2 - 4f)", |s| s.dim() == 2, |s, p, e| num(eigen(s, p, e)?.dr.ok_or(Error::Dimension(s.dim()))?)),
        field("zeta2", "vorticity trace zeta_ij zeta^ij", any, |s, p, _| num(trace_pair(s, p)?.0)),
        field("S2", "strain trace S_ij S^ij", any, |s, p, _| num(trace_pair(s, p)?.1)),
        field("helicity", "helicity density v . curl v", three_d, |s, p, _| num(helicity_density(s, p)?)),
        field("div", "divergence of the velocity", any, divergence),
    ]
}

pub fn sample() -> Vec<Field> {
    let d = diagnose();
    let mut out: Vec<Field> = d.into_iter().filter(|f| ["psi", "v1", "v2", "v3", "div"].contains(&f.name)).collect();
    out.insert(
        out.len() - 1,
        field("p", "pressure", any, |s, p, _| num(s.pressure_at(p, 0)?.value())),
    );
    out
}

fn reduced_eigen(s: &FlowSpec, p: &[f64], eps: f64, k: usize) -> Result<Cell> {
    let m = reduced_metrics(s, p, eps)?;
    let (base, _) = s.geometry.warp_parts().ok_or(Error::Dimension(s.dim()))?;
    let gb = values(&base.metric_at(&p[..2], 0)?);
    num(pullback_eigenvalues(&m.pullback, &gb, None).values[k])
}

fn reduced_entry(s: &FlowSpec, p: &[f64], eps: f64, i: usize, j: usize) -> Result<Cell> {
    num(reduced_metrics(s, p, eps)?.pullback.matrix[(i, j)])
}

pub fn reduce() -> Vec<Field> {
    vec![
        field("fhat2", "reduced pressure diagnostic", any, |s, p, _| num(fhat3(s, p)? - h_plus_minus(s, p)?.0)),
        field("h+", "warp correction h+", any, |s, p, _| num(h_plus_minus(s, p)?.0)),
        field("h-", "warp correction h-", any, |s, p, _| num(h_plus_minus(s, p)?.1)),
        field("fhat2+h", "fhat2 + h+", any, |s, p, _| num(fhat3(s, p)?)),
        field("fhat3", "three-dimensional fhat on the section", any, |s, p, _| num(fhat3(s, p)?)),
        field("Rhat2", "scalar curvature of the reduced phase metric", any, |s, p, e| num(reduced_curvatures(s, p, e)?.rhat)),
        field("R2", "scalar curvature of the reduced pullback metric", any, |s, p, e| num(reduced_curvatures(s, p, e)?.r)),
        field("g11", "reduced pullback metric component", any, |s, p, e| reduced_entry(s, p, e, 0, 0)),
        field("g12", "reduced pullback metric component", any, |s, p, e| reduced_entry(s, p, e, 0, 1)),
        field("g22", "reduced pullback metric component", any, |s, p, e| reduced_entry(s, p, e, 1, 1)),
        field("E+", "larger reduced pullback eigenvalue", any, |s, p, e| reduced_eigen(s, p, e, 0)),
        field("E-", "smaller reduced pullback eigenvalue", any, |s, p, e| reduced_eigen(s, p, e, 1)),
        field("zeta2", "vorticity trace of the three-dimensional flow", any, |s, p, _| num(reduced_traces(s, p)?.zeta2)),
        field("S2", "strain trace of the three-dimensional flow", any, |s, p, _| num(reduced_traces(s, p)?.strain2)),
        field("mu", "symplectic moment map at lambda = 1", any, |s, p, _| num(moment_maps(s, p, 1.0)?.symplectic)),
        field("mu1", "2-plectic moment map component", any, |s, p, _| num(moment_maps(s, p, 1.0)?.two_plectic[0])),
        field("mu2", "2-plectic moment map component", any, |s, p, _| num(moment_maps(s, p, 1.0)?.two_plectic[1])),
        field("div_res", "residual of the reduced continuity equation", any, |s, p, _| {
            num(reduced_constraint_residuals(s, p)?.divergence)
        }),
        field("p_res", "residual of the reduced pressure equation", any, |s, p, _| {
            num(reduced_constraint_residuals(s, p)?.pressure.ok_or(Error::MissingPressure)?)
        }),
    ]
}

/// Fields named in `list`, in that order.
pub fn select<'a>(registry: &'a [Field], list: &str, spec: &FlowSpec) -> std::result::Result<Vec<&'a Field>, Failure> {
    let valid = || registry.iter().map(|f| f.name).collect::<Vec<_>>().join(", ");
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim) {
        let f = registry
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Failure::Unknown(format!("unknown field `{name}`; valid fields: {}", valid())))?;
        if !(f.applies)(spec) {
            return Err(Failure::Unknown(format!("field `{name}` is not defined for flow `{}`", spec.name)));
        }
        out.push(f);
    }
    Ok(out)
}

/// Cells for one point followed by the flag cell, which lists the error
/// kinds met, in field order.
pub fn evaluate(fields: &[&Field], spec: &FlowSpec, point: &[f64], eps: f64) -> Vec<String> {
    let mut flags: Vec<&'static str> = Vec::new();
    let mut row: Vec<String> = fields
        .iter()
        .map(|f| {
            let kind = match (f.eval)(spec, point, eps) {
                Ok(Cell::Num(v)) if v.is_nan() => "NonFinite",
                Ok(c) => return c.render(),
                Err(e) => e.kind(),
            };
            if !flags.contains(&kind) {
                flags.push(kind);
            }
            Cell::Nan.render()
        })
        .collect();
    row.push(flags.join(";"));
    row
}
