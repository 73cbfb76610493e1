//! Reduction of three-dimensional flows with a `∂/∂x³` symmetry on warped
//! products `ḡ₂ + e^{2φ} dx³⊗dx³`.
//!
//! Every quantity is evaluated in the adapted coordinates of the warped
//! geometry: base indices run over the first two axes, `q_i = v_i(x)` and
//! `q₃ = v₃(x)` on the section.

use nalgebra::DMatrix;

use crate::background::{invert, values, JetMatrix};
use crate::diagnostics::{phase_curvature_flat, phase_metric_matrix, MetricContext, MetricValue};
use crate::error::{Error, Result};
use crate::exterior::{hodge_star, Form};
use crate::flows::FlowSpec;
use crate::jet::Jet;

/// Jets of the reduced data at one point, all truncated to a common order.
struct Fields {
    g: JetMatrix,
    gi: JetMatrix,
    phi: Jet,
    dphi: Vec<Jet>,
    /// `∇_i ∂_j φ`
    hphi: JetMatrix,
    v: Vec<Jet>,
    /// `a[i][j] = ∇_j v_i`
    a: JetMatrix,
    v3: Jet,
    dv3: Vec<Jet>,
    dpsi: Vec<Jet>,
    /// `∇_i ∂_j ψ`
    hpsi: JetMatrix,
    /// `∂_i p` and `Δ̄p`, or why they are unavailable.
    pressure: std::result::Result<(Vec<Jet>, Jet), Error>,
    /// `R̄^{ij}` of the base.
    ric_up: JetMatrix,
    rbar: Jet,
}

fn point3(spec: &FlowSpec, point: &[f64]) -> Result<[f64; 3]> {
    if !spec.is_reduced() {
        return Err(Error::Domain(format!("{} is not a reduced flow", spec.name)));
    }
    match point.len() {
        2 => Ok([point[0], point[1], 0.0]),
        3 => Ok([point[0], point[1], point[2]]),
        n => Err(Error::DimensionMismatch(format!("expected 2 or 3 coordinates, got {n}"))),
    }
}

fn sum2<F: Fn(usize, usize) -> Jet>(like: &Jet, f: F) -> Jet {
    let mut s = like.constant_like(0.0);
    for i in 0..2 {
        for j in 0..2 {
            s = &s + &f(i, j);
        }
    }
    s
}

fn covariant_hessian(d: &[Jet], gamma: &[Vec<Vec<Jet>>], order: usize) -> Result<JetMatrix> {
    let mut h = vec![vec![d[0].truncate(order); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = d[j].derivative(i)?.truncate(order);
            for k in 0..2 {
                s = &s - &(&gamma[i][j][k].truncate(order) * &d[k].truncate(order));
            }
            h[i][j] = s;
        }
    }
    Ok(h)
}

fn fields(spec: &FlowSpec, point: &[f64], order: usize) -> Result<Fields> {
    let p3 = point3(spec, point)?;
    let (base, phi_fn) = spec.geometry.warp_parts().ok_or_else(|| Error::Domain("reduced flows need a warped geometry".into()))?;
    let n = order + 2;
    let x = Jet::seed_point(&p3, n)?;
    let g_full = base.metric(&x[..2])?;
    let gamma = crate::background::christoffels(&g_full)?;
    let tr = |j: &Jet| j.truncate(order);
    let g: JetMatrix = g_full.iter().map(|r| r.iter().map(tr).collect()).collect();
    let gi = invert(&g)?;
    let phi_n = phi_fn(&x[..2])?;
    let dphi_n: Vec<Jet> = (0..2).map(|k| phi_n.derivative(k)).collect::<Result<_>>()?;
    let hphi = covariant_hessian(&dphi_n, &gamma, order)?;
    let psi_n = spec.psi_on(&x)?;
    let dpsi_n: Vec<Jet> = (0..2).map(|k| psi_n.derivative(k)).collect::<Result<_>>()?;
    let hpsi = covariant_hessian(&dpsi_n, &gamma, order)?;
    let fj = spec.jets_at(&p3, order + 1)?;
    let mut a = vec![vec![tr(&fj.v[0]); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut s = tr(&fj.v[i].derivative(j)?);
            for k in 0..2 {
                s = &s - &(&tr(&gamma[j][i][k]) * &tr(&fj.v[k]));
            }
            a[i][j] = s;
        }
    }
    let pressure = match spec.pressure_at(&p3, n) {
        Ok(p) => {
            let dp: Vec<Jet> = (0..2).map(|k| p.derivative(k)).collect::<Result<_>>()?;
            let hp = covariant_hessian(&dp, &gamma, order)?;
            let lap = sum2(&hp[0][0], |i, j| &gi[i][j] * &hp[i][j]);
            Ok((dp.iter().map(tr).collect(), lap))
        }
        Err(e @ (Error::MissingPressure | Error::OrderExceeded)) => Err(e),
        Err(e) => return Err(e),
    };
    let curv = base.curvature_at(&p3[..2], order)?;
    let ric_up = crate::background::mat_mul(&crate::background::mat_mul(&gi, &lift(&curv.ricci, &g[0][0])?), &gi);
    Ok(Fields {
        phi: tr(&phi_n),
        dphi: dphi_n.iter().map(tr).collect(),
        hphi,
        v: fj.v[..2].iter().map(tr).collect(),
        a,
        v3: tr(&fj.v[2]),
        dv3: vec![tr(&fj.v[2].derivative(0)?), tr(&fj.v[2].derivative(1)?)],
        dpsi: dpsi_n.iter().map(tr).collect(),
        hpsi,
        pressure,
        ric_up,
        rbar: lift_one(&curv.scalar, &g[0][0])?,
        g,
        gi,
    })
}

/// Base curvature comes in two variables; re-embed it among the three.
fn lift_one(j: &Jet, like: &Jet) -> Result<Jet> {
    if j.dim() == like.dim() {
        return Ok(j.clone());
    }
    j.embed(like.dim(), &[0, 1])
}

fn lift(m: &JetMatrix, like: &Jet) -> Result<JetMatrix> {
    m.iter().map(|r| r.iter().map(|c| lift_one(c, like)).collect()).collect()
}

impl Fields {
    fn zero(&self) -> Jet {
        self.phi.constant_like(0.0)
    }

    fn up(&self, d: &[Jet], k: usize) -> Jet {
        &(&self.gi[k][0] * &d[0]) + &(&self.gi[k][1] * &d[1])
    }

    fn dot(&self, a: &[Jet], b: &[Jet]) -> Jet {
        sum2(&self.phi, |i, j| &self.gi[i][j] * &(&a[i] * &b[j]))
    }

    fn lap(&self, h: &JetMatrix) -> Jet {
        sum2(&self.phi, |i, j| &self.gi[i][j] * &h[i][j])
    }

    fn e2(&self) -> Jet {
        self.phi.scale(-2.0).exp()
    }

    /// `(ĥ₊, ĥ₋)` as jets.
    fn h_pm(&self) -> Result<(Jet, Jet)> {
        let (dp, _) = self.pressure.as_ref().map_err(Clone::clone)?;
        let base = self.dot(&self.dphi, dp);
        let up_v: Vec<Jet> = (0..2).map(|k| self.up(&self.v, k)).collect();
        let hh = sum2(&self.phi, |i, j| &self.hphi[i][j] * &(&up_v[i] * &up_v[j]));
        let pv = self.dot(&self.dphi, &self.v);
        let pv2 = &pv * &pv;
        let lap_phi = self.lap(&self.hphi);
        let grad2 = self.dot(&self.dphi, &self.dphi);
        let q3 = &(&self.e2() * &self.v3) * &self.v3;
        let h = |s: f64| -> Jet {
            let quad = &hh + &pv2.scale(s);
            let warp = &q3 * &(&lap_phi + &grad2.scale(s));
            (&(&base - &quad) - &warp).scale(0.5)
        };
        Ok((h(1.0), h(-1.0)))
    }

    /// `f̂₂ = ½Δ̄p + ½R̄^{ij} q_i q_j` on the base.
    fn fhat2(&self) -> Result<Jet> {
        let (_, lap) = self.pressure.as_ref().map_err(Clone::clone)?;
        let rq = sum2(&self.phi, |i, j| &self.ric_up[i][j] * &(&self.v[i] * &self.v[j]));
        Ok((lap + &rq).scale(0.5))
    }

    fn fhat3(&self) -> Result<Jet> {
        Ok(&self.fhat2()? + &self.h_pm()?.0)
    }

    /// `(ζ³_{IJ}ζ³^{IJ}, S³_{IJ}S³^{IJ})` from the base data.
    fn traces(&self) -> (Jet, Jet) {
        let at = crate::background::transpose(&self.a);
        let part = |s: f64| -> JetMatrix {
            (0..2).map(|i| (0..2).map(|j| (&at[i][j] + &self.a[i][j].scale(s)).scale(0.5)).collect()).collect()
        };
        let sq = |m: &JetMatrix| {
            let up = crate::background::mat_mul(&crate::background::mat_mul(&self.gi, m), &self.gi);
            sum2(&self.phi, |i, j| &m[i][j] * &up[i][j])
        };
        let e2 = self.e2();
        let dv3 = self.dot(&self.dv3, &self.dv3);
        let zeta2 = &sq(&part(-1.0)) + &(&dv3 * &e2).scale(0.5);
        let vphi = self.dot(&self.v, &self.dphi);
        let cross = &self.dot(&self.dv3, &self.dphi) * &self.v3;
        let grad = &self.dot(&self.dphi, &self.dphi) * &(&self.v3 * &self.v3);
        let warp = &(&dv3.scale(0.5) - &cross.scale(2.0)) + &grad.scale(2.0);
        let strain2 = &(&sq(&part(1.0)) + &(&e2 * &warp)) + &(&vphi * &vphi);
        (zeta2, strain2)
    }

    /// `F = f̂₂+ĥ₊`; a Bernoulli pressure beyond the jet order falls back to
    /// `½(ζ² − S²)`, which equals it for exact flows.
    fn fhat3_or_kinematic(&self) -> Result<Jet> {
        match self.fhat3() {
            Err(Error::OrderExceeded) => {
                let (z, s) = self.traces();
                Ok((&z - &s).scale(0.5))
            }
            r => r,
        }
    }

    /// `F ḡ + Aᵀ ḡ⁻¹ A`.
    fn pullback_direct(&self, f: &Jet) -> JetMatrix {
        let aa = crate::background::mat_mul(&crate::background::mat_mul(&crate::background::transpose(&self.a), &self.gi), &self.a);
        (0..2).map(|i| (0..2).map(|j| &(f * &self.g[i][j]) + &aa[i][j]).collect()).collect()
    }

    /// `g₂ = (Δψ Hess ψ + T) e^{−2φ}`.
    fn pullback_t_form(&self) -> JetMatrix {
        let t = self.t_tensor();
        let lap_psi = self.lap(&self.hpsi);
        let e2 = self.e2();
        (0..2).map(|i| (0..2).map(|j| &(&(&lap_psi * &self.hpsi[i][j]) + &t[i][j]) * &e2).collect()).collect()
    }

    fn t_tensor(&self) -> JetMatrix {
        let lap_psi = self.lap(&self.hpsi);
        let pp = self.dot(&self.dphi, &self.dpsi);
        let phi2 = self.dot(&self.dphi, &self.dphi);
        let psi2 = self.dot(&self.dpsi, &self.dpsi);
        let up_phi: Vec<Jet> = (0..2).map(|k| self.up(&self.dphi, k)).collect();
        let up_psi: Vec<Jet> = (0..2).map(|k| self.up(&self.dpsi, k)).collect();
        let mut bracket = self.zero();
        for k in 0..2 {
            let mut inner = &(&self.dv3[k] - &(&self.v3 * &self.dphi[k])) * &self.v3;
            for l in 0..2 {
                inner = &inner + &(&up_psi[l] * &self.hpsi[k][l]);
            }
            bracket = &bracket + &(&up_phi[k] * &inner);
        }
        let scalar = &(&(&pp * &(&pp - &lap_psi)) - &(&phi2 * &psi2)) + &bracket;
        (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| {
                        let mut s = &(&self.g[i][j] * &scalar) + &(&(&self.dphi[i] * &self.dphi[j]) * &psi2);
                        for k in 0..2 {
                            let m = &(&self.dphi[i] * &self.hpsi[j][k]) + &(&self.dphi[j] * &self.hpsi[i][k]);
                            s = &s - &(&up_psi[k] * &m);
                        }
                        s
                    })
                    .collect()
            })
            .collect()
    }

    /// `F ḡ + e^{−2φ}{∇^k∂_iψ ∇_k∂_jψ + ∂_iφ∂_jφ|∇ψ|² − 2∂_kψ ∇^k∂_(iψ ∂_j)φ}`.
    fn pullback_v2(&self, f: &Jet) -> JetMatrix {
        let psi2 = self.dot(&self.dpsi, &self.dpsi);
        let up_psi: Vec<Jet> = (0..2).map(|k| self.up(&self.dpsi, k)).collect();
        let e2 = self.e2();
        (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| {
                        let hh = sum2(&self.phi, |k, l| &self.gi[k][l] * &(&self.hpsi[k][i] * &self.hpsi[l][j]));
                        let mut s = &hh + &(&(&self.dphi[i] * &self.dphi[j]) * &psi2);
                        for k in 0..2 {
                            let m = &(&self.hpsi[k][i] * &self.dphi[j]) + &(&self.hpsi[k][j] * &self.dphi[i]);
                            s = &s - &(&up_psi[k] * &m);
                        }
                        &(f * &self.g[i][j]) + &(&e2 * &s)
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn h_plus_minus(spec: &FlowSpec, point: &[f64]) -> Result<(f64, f64)> {
    let (h, l) = fields(spec, point, 0)?.h_pm()?;
    Ok((h.value(), l.value()))
}

/// `f̂₂ + ĥ₊`, the three-dimensional `f̂` seen from the base.
pub fn fhat3(spec: &FlowSpec, point: &[f64]) -> Result<f64> {
    Ok(fields(spec, point, 0)?.fhat3()?.value())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedResiduals {
    pub divergence: f64,
    /// `None` when the flow carries no pressure.
    pub pressure: Option<f64>,
}

/// Residuals of `∇_i v^i = −v^i ∂_iφ` and of the reduced pressure equation.
pub fn reduced_constraint_residuals(spec: &FlowSpec, point: &[f64]) -> Result<ReducedResiduals> {
    let fl = fields(spec, point, 0)?;
    let div = fl.lap(&fl.a);
    let vphi = fl.dot(&fl.v, &fl.dphi);
    let divergence = (&div + &vphi).value();
    let pressure = match &fl.pressure {
        Err(_) => None,
        Ok((dp, lap)) => {
            let up = crate::background::mat_mul(&crate::background::mat_mul(&fl.gi, &fl.a), &fl.gi);
            let aa = sum2(&fl.phi, |k, l| &fl.a[k][l] * &up[l][k]);
            let v2 = fl.dot(&fl.v, &fl.v);
            let lhs = &(lap + &aa) + &(&v2 * &fl.rbar).scale(0.5);
            let up_v: Vec<Jet> = (0..2).map(|k| fl.up(&fl.v, k)).collect();
            let vvh = sum2(&fl.phi, |i, j| &fl.hphi[i][j] * &(&up_v[i] * &up_v[j]));
            let warp = &(&(&fl.lap(&fl.hphi) - &fl.dot(&fl.dphi, &fl.dphi)) * &(&fl.v3 * &fl.v3))
                + &(&fl.v3 * &fl.dot(&fl.dphi, &fl.dv3)).scale(2.0);
            let rhs = &(&(-&fl.dot(&fl.dphi, dp)) + &vvh) + &(&fl.e2() * &warp);
            Some((&lhs - &rhs).value())
        }
    };
    Ok(ReducedResiduals { divergence, pressure })
}

#[derive(Debug, Clone)]
pub struct ReducedMetrics {
    /// `f̂₂ + ĥ₊`.
    pub fhat: f64,
    /// `ĝ₂` on `(x¹, x², q₁, q₂)`.
    pub phase: MetricValue,
    /// `g₂ = (f̂₂+ĥ₊)ḡ + Aᵀḡ⁻¹A`.
    pub pullback: MetricValue,
    /// `g₂` from the `T` form.
    pub pullback_t: DMatrix<f64>,
    /// `g₂` with the velocity written through `ψ`.
    pub pullback_v2: DMatrix<f64>,
}

impl ReducedMetrics {
    /// Largest entrywise disagreement among the three forms of `g₂`.
    pub fn form_mismatch(&self) -> f64 {
        let d1 = (&self.pullback.matrix - &self.pullback_t).abs().max();
        let d2 = (&self.pullback.matrix - &self.pullback_v2).abs().max();
        d1.max(d2)
    }
}

pub fn reduced_metrics(spec: &FlowSpec, point: &[f64], eps: f64) -> Result<ReducedMetrics> {
    let p3 = point3(spec, point)?;
    let fl = fields(spec, point, 0)?;
    let f = fl.fhat3()?;
    let fv = f.value();
    if !fv.is_finite() || fv.abs() <= eps {
        return Err(Error::SingularStructure);
    }
    let (base, _) = spec.geometry.warp_parts().expect("checked by fields");
    let q: Vec<f64> = fl.v.iter().map(|c| c.value()).collect();
    let phase = MetricValue {
        matrix: phase_metric_matrix(base, &p3[..2], &q, fv)?,
        signature: if fv > 0.0 { crate::diagnostics::Signature::Riemannian } else { crate::diagnostics::Signature::Kleinian },
        context: MetricContext::ReducedPhase,
    };
    Ok(ReducedMetrics {
        fhat: fv,
        phase,
        pullback: MetricValue::new(values(&fl.pullback_direct(&f)), MetricContext::ReducedPullback, eps),
        pullback_t: values(&fl.pullback_t_form()),
        pullback_v2: values(&fl.pullback_v2(&f)),
    })
}

/// `T_ij`, which vanishes identically when φ = 0.
pub fn t_tensor(spec: &FlowSpec, point: &[f64]) -> Result<DMatrix<f64>> {
    Ok(values(&fields(spec, point, 0)?.t_tensor()))
}

/// Jets of order 2 of `g₂` over the two base coordinates.
pub fn reduced_pullback_jets(spec: &FlowSpec, point: &[f64]) -> Result<JetMatrix> {
    let fl = fields(spec, point, 2)?;
    let f = fl.fhat3_or_kinematic()?;
    fl.pullback_direct(&f).iter().map(|r| r.iter().map(|c| drop_axis(c)).collect()).collect()
}

/// Restrict a three-variable jet that is independent of `x³` to the base.
fn drop_axis(j: &Jet) -> Result<Jet> {
    let order = j.order();
    let mut coeffs = Vec::new();
    let probe = Jet::constant(0.0, 2, order);
    for k in probe.multi_indices() {
        coeffs.push(j.coeff(&[k[0], k[1], 0])?);
    }
    Jet::from_coeffs(2, order, coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedCurvatures {
    pub rhat: f64,
    pub r: f64,
}

/// `R̂₂` from the flat-background formula with `f ↦ f̂₂+ĥ₊`, and `R₂` of `g₂`.
pub fn reduced_curvatures(spec: &FlowSpec, point: &[f64], eps: f64) -> Result<ReducedCurvatures> {
    let (base, _) = spec.geometry.warp_parts().ok_or_else(|| Error::Domain("reduced flows need a warped geometry".into()))?;
    if !base.is_flat_cartesian() {
        return Err(Error::Domain("reduced curvature needs a flat base".into()));
    }
    let fl = fields(spec, point, 2)?;
    let f = fl.fhat3_or_kinematic()?;
    if !f.value().is_finite() || f.value().abs() <= eps {
        return Err(Error::SingularStructure);
    }
    let rhat = phase_curvature_flat(&drop_axis(&f)?, 2);
    let g: JetMatrix = fl.pullback_direct(&f).iter().map(|r| r.iter().map(drop_axis).collect()).collect::<Result<_>>()?;
    if values(&g).determinant().abs() <= eps {
        return Err(Error::VanishingVorticity);
    }
    let r = crate::diagnostics::metric_curvature_oracle(&g)?;
    Ok(ReducedCurvatures { rhat, r })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedTraces {
    /// `ζ³_{IJ} ζ³^{IJ}`.
    pub zeta2: f64,
    /// `S³_{IJ} S³^{IJ}`.
    pub strain2: f64,
    /// `|½(ζ² − S²) − (f̂₂+ĥ₊)|`, NaN without a pressure.
    pub f3_check: f64,
}

pub fn reduced_traces(spec: &FlowSpec, point: &[f64]) -> Result<ReducedTraces> {
    let fl = fields(spec, point, 0)?;
    let (z, st) = fl.traces();
    let (zeta2, strain2) = (z.value(), st.value());
    let f3_check = match fl.fhat3() {
        Ok(f) => (0.5 * (zeta2 - strain2) - f.value()).abs(),
        Err(Error::MissingPressure) => f64::NAN,
        Err(e) => return Err(e),
    };
    Ok(ReducedTraces { zeta2, strain2, f3_check })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentMaps {
    /// `λ q₃`.
    pub symplectic: f64,
    /// Components of `⋆(e^φ q_i dx^i)` on the base.
    pub two_plectic: [f64; 2],
    /// `max_i |μ_i + ∂_iψ|`.
    pub level_set_residual: f64,
}

pub fn moment_maps(spec: &FlowSpec, point: &[f64], lambda: f64) -> Result<MomentMaps> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::VanishingLambda);
    }
    let fl = fields(spec, point, 0)?;
    let w = fl.phi.value().exp();
    let theta = Form::one_form(&[w * fl.v[0].value(), w * fl.v[1].value()]);
    let star = hodge_star(&theta, &values(&fl.g), &Form::basis(2, &[0, 1], 1.0))?;
    let mu = [star.get(&[0]), star.get(&[1])];
    let level_set_residual = (0..2).map(|i| (mu[i] + fl.dpsi[i].value()).abs()).fold(0.0, f64::max);
    Ok(MomentMaps { symplectic: lambda * fl.v3.value(), two_plectic: mu, level_set_residual })
}
