//! Legendre duality for two-dimensional stream functions.
//!
//! The dual coordinates are `x′ = ∇ψ(x)` and `ψ′ = x′·x − ψ`. The map is a
//! local diffeomorphism exactly where `det Hess ψ` does not vanish; the sign
//! of that determinant labels the sheet of the (possibly multivalued) dual.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::flows::FlowSpec;
use crate::jet::Jet;

pub const EPS_FOLD_REL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LegendrePoint {
    pub primal: [f64; 2],
    pub dual: [f64; 2],
    pub psi_dual: f64,
    pub hessian: Matrix2<f64>,
    pub det_hessian: f64,
    pub sheet: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualDiagnostics {
    /// `g̃′ = Hess ψ′` in the dual coordinates.
    pub hessian_metric: Matrix2<f64>,
    /// `ζ′ = f Δ′ψ′`.
    pub zeta: f64,
    /// `g′ = ζ′ g̃′` and its inverse.
    pub metric: Matrix2<f64>,
    pub metric_inv: Option<Matrix2<f64>>,
    pub f: f64,
}

fn check_planar(spec: &FlowSpec) -> Result<()> {
    if spec.dim() != 2 || !spec.is_stream() || !spec.geometry.is_flat_cartesian() {
        return Err(Error::Domain("Legendre duality needs a stream function on the flat plane".into()));
    }
    Ok(())
}

fn psi_jet(spec: &FlowSpec, x: &[f64; 2], order: usize) -> Result<Jet> {
    spec.psi_on(&Jet::seed_point(x, order)?)
}

fn hessian_of(j: &Jet) -> Matrix2<f64> {
    Matrix2::new(j.d2(0, 0), j.d2(0, 1), j.d2(1, 0), j.d2(1, 1))
}

fn sheet_of(det: f64) -> i8 {
    if det > 0.0 {
        1
    } else {
        -1
    }
}

fn fold_check(h: &Matrix2<f64>) -> Result<f64> {
    let det = h.determinant();
    if !det.is_finite() || det.abs() <= EPS_FOLD_REL * h.norm() || h.norm() == 0.0 {
        return Err(Error::FoldSingularity);
    }
    Ok(det)
}

pub fn to_dual(spec: &FlowSpec, point: &[f64]) -> Result<LegendrePoint> {
    check_planar(spec)?;
    let x = [point[0], point[1]];
    let psi = psi_jet(spec, &x, 2)?;
    let hessian = hessian_of(&psi);
    let det_hessian = fold_check(&hessian)?;
    let dual = [psi.d1(0), psi.d1(1)];
    Ok(LegendrePoint {
        primal: x,
        dual,
        psi_dual: dual[0] * x[0] + dual[1] * x[1] - psi.value(),
        hessian,
        det_hessian,
        sheet: sheet_of(det_hessian),
    })
}

/// Inverts `x′ = ∇ψ(x)` on the given sheet by damped Newton iteration,
/// started from `seed` or from the best point of a coarse grid over
/// `[-4, 4]²`.
pub fn from_dual(spec: &FlowSpec, dual: &[f64], sheet: i8, seed: Option<&[f64]>) -> Result<LegendrePoint> {
    check_planar(spec)?;
    let target = [dual[0], dual[1]];
    let residual = |x: &[f64; 2]| -> Option<(f64, Jet)> {
        let j = psi_jet(spec, x, 2).ok()?;
        let r = ((j.d1(0) - target[0]).powi(2) + (j.d1(1) - target[1]).powi(2)).sqrt();
        r.is_finite().then_some((r, j))
    };
    let on_sheet = |j: &Jet| {
        let h = hessian_of(j);
        fold_check(&h).is_ok() && (sheet == 0 || sheet_of(h.determinant()) == sheet)
    };
    let mut x = match seed {
        Some(s) => [s[0], s[1]],
        None => {
            let mut best: Option<([f64; 2], f64)> = None;
            for a in 0..40 {
                for b in 0..40 {
                    let p = [-3.9 + 0.2 * a as f64, -3.9 + 0.2 * b as f64];
                    if let Some((r, j)) = residual(&p) {
                        if on_sheet(&j) && best.is_none_or(|(_, rb)| r < rb) {
                            best = Some((p, r));
                        }
                    }
                }
            }
            best.ok_or(Error::OutsideSheetDomain)?.0
        }
    };
    let (mut r, mut j) = residual(&x).ok_or(Error::OutsideSheetDomain)?;
    for _ in 0..200 {
        let scale = target[0].abs().max(target[1].abs()).max(1.0);
        if r <= 1e-14 * scale {
            break;
        }
        let h = hessian_of(&j);
        let Some(inv) = h.try_inverse() else { break };
        let g = nalgebra::Vector2::new(j.d1(0) - target[0], j.d1(1) - target[1]);
        let step = inv * g;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-6 {
            let cand = [x[0] - lambda * step[0], x[1] - lambda * step[1]];
            if let Some((rc, jc)) = residual(&cand) {
                if rc < r && on_sheet(&jc) {
                    x = cand;
                    r = rc;
                    j = jc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let scale = target[0].abs().max(target[1].abs()).max(1.0);
    if r > 1e-10 * scale {
        return Err(Error::OutsideSheetDomain);
    }
    let p = to_dual(spec, &x)?;
    if sheet != 0 && p.sheet != sheet {
        return Err(Error::OutsideSheetDomain);
    }
    Ok(p)
}

/// Hessian of `ψ′` at a dual point: from the closed-form sheet when the flow
/// carries one, otherwise `(Hess ψ)⁻¹` at the inverted point.
fn dual_hessian(spec: &FlowSpec, dual: &[f64], sheet: i8, primal: &LegendrePoint) -> Result<Matrix2<f64>> {
    match spec.dual.iter().find(|d| d.sheet == sheet || d.sheet == 0) {
        Some(d) => {
            let j = spec
                .eval_expr(&d.psi, &Jet::seed_point(dual, 2)?)
                .map_err(|_| Error::OutsideSheetDomain)?;
            let h = hessian_of(&j);
            if !h.iter().all(|v| v.is_finite()) {
                return Err(Error::OutsideSheetDomain);
            }
            Ok(h)
        }
        None => primal.hessian.try_inverse().ok_or(Error::FoldSingularity),
    }
}

/// Closed-form dual stream function on a sheet, if the flow carries one.
pub fn dual_psi(spec: &FlowSpec, dual: &[f64], sheet: i8) -> Option<Result<f64>> {
    let d = spec.dual.iter().find(|d| d.sheet == sheet || d.sheet == 0)?;
    Some(
        Jet::seed_point(dual, 0)
            .and_then(|x| spec.eval_expr(&d.psi, &x))
            .map(|j| j.value())
            .map_err(|_| Error::OutsideSheetDomain),
    )
}

pub fn dual_diagnostics(spec: &FlowSpec, dual: &[f64], sheet: i8) -> Result<DualDiagnostics> {
    let p = from_dual(spec, dual, sheet, None)?;
    let h = dual_hessian(spec, dual, sheet, &p)?;
    let f = p.det_hessian;
    let zeta = f * h.trace();
    let metric = h * zeta;
    Ok(DualDiagnostics { hessian_metric: h, zeta, metric, metric_inv: metric.try_inverse(), f })
}

/// `|f·det Hess ψ′ − 1|` at the dual image of a primal point. Without a
/// closed-form sheet the dual Hessian is `∂x/∂x′`, differentiated through
/// the numerical inverse.
pub fn dual_ma_residual(spec: &FlowSpec, point: &[f64]) -> Result<f64> {
    let p = to_dual(spec, point)?;
    let f = p.det_hessian;
    let h = if spec.dual.iter().any(|d| d.sheet == p.sheet || d.sheet == 0) {
        dual_hessian(spec, &p.dual, p.sheet, &p)?
    } else {
        numeric_inverse_jacobian(spec, &p)?
    };
    Ok((f * h.determinant() - 1.0).abs())
}

fn numeric_inverse_jacobian(spec: &FlowSpec, p: &LegendrePoint) -> Result<Matrix2<f64>> {
    let mut m = Matrix2::zeros();
    for k in 0..2 {
        let h = 1e-3 * p.dual[k].abs().max(1.0);
        let at = |s: f64| -> Result<[f64; 2]> {
            let mut d = p.dual;
            d[k] += s * h;
            Ok(from_dual(spec, &d, p.sheet, Some(&p.primal))?.primal)
        };
        let (a2, a1, b1, b2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
        for i in 0..2 {
            m[(i, k)] = (-a2[i] + 8.0 * a1[i] - 8.0 * b1[i] + b2[i]) / (12.0 * h);
        }
    }
    Ok(m)
}
