//! Pointwise diagnostics: kinematics, phase and pullback metrics, their
//! curvature scalars, eigenvalues, classification and helicity.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::background::{
    christoffels, covariant_derivative, curvature, determinant, invert, mat_mul, scalar_curvature, transpose,
    truncate_matrix, values, Christoffels, Geometry, JetMatrix, Tensor,
};
use crate::error::{Error, Result};
use crate::flows::FlowSpec;
use crate::jet::Jet;

pub const EPS_SING: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signature {
    Riemannian,
    Kleinian,
    Degenerate,
}

impl Signature {
    pub fn name(self) -> &'static str {
        match self {
            Signature::Riemannian => "riemannian",
            Signature::Kleinian => "kleinian",
            Signature::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricContext {
    Phase,
    Pullback,
    Hessian,
    ReducedPhase,
    ReducedPullback,
    LegendreDual,
}

#[derive(Debug, Clone)]
pub struct MetricValue {
    pub matrix: DMatrix<f64>,
    pub signature: Signature,
    pub context: MetricContext,
}

impl MetricValue {
    pub fn new(matrix: DMatrix<f64>, context: MetricContext, eps: f64) -> MetricValue {
        let signature = signature_of(&matrix, eps);
        MetricValue { matrix, signature, context }
    }
}

/// Definite matrices count as Riemannian, indefinite ones as Kleinian.
pub fn signature_of(m: &DMatrix<f64>, eps: f64) -> Signature {
    let sym = (m + m.transpose()) * 0.5;
    let ev = SymmetricEigen::new(sym).eigenvalues;
    if ev.iter().any(|e| e.abs() <= eps || !e.is_finite()) {
        return Signature::Degenerate;
    }
    if ev.iter().all(|&e| e > 0.0) || ev.iter().all(|&e| e < 0.0) {
        Signature::Riemannian
    } else {
        Signature::Kleinian
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

impl Class {
    pub fn name(self) -> &'static str {
        match self {
            Class::Elliptic => "elliptic",
            Class::Hyperbolic => "hyperbolic",
            Class::Parabolic => "parabolic",
        }
    }
}

/// Background and velocity jets at a point, all of one order.
#[derive(Debug, Clone)]
pub struct FlowField {
    pub g: JetMatrix,
    pub ginv: JetMatrix,
    pub gamma: Christoffels,
    pub v: Vec<Jet>,
    /// `a[i][j] = ∇̄_j v_i`
    pub a: JetMatrix,
    /// One order above the rest.
    pub psi: Option<Jet>,
}

pub fn flow_field(spec: &FlowSpec, point: &[f64], order: usize) -> Result<FlowField> {
    let n = spec.dim();
    let fj = spec.jets_at(point, order + 1)?;
    let g1 = spec.geometry.metric_at(point, order + 1)?;
    let gamma = christoffels(&g1)?;
    let g = truncate_matrix(&g1, order);
    let ginv = invert(&g)?;
    let v: Vec<Jet> = fj.v.iter().map(|c| c.truncate(order)).collect();
    let mut a = vec![vec![v[0].constant_like(0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = fj.v[i].derivative(j)?;
            for k in 0..n {
                s = &s - &(&gamma[j][i][k] * &v[k]);
            }
            a[i][j] = s;
        }
    }
    Ok(FlowField { g, ginv, gamma, v, a, psi: fj.psi })
}

impl FlowField {
    pub fn dim(&self) -> usize {
        self.v.len()
    }

    /// `A^{ij}` with both indices raised.
    pub fn a_up(&self) -> JetMatrix {
        mat_mul(&mat_mul(&self.ginv, &self.a), &self.ginv)
    }

    /// `f = −½ A_{kl} A^{lk}`.
    pub fn f(&self) -> Jet {
        let up = self.a_up();
        let n = self.dim();
        let mut s = self.a[0][0].constant_like(0.0);
        for k in 0..n {
            for l in 0..n {
                s = &s + &(&self.a[k][l] * &up[l][k]);
            }
        }
        s.scale(-0.5)
    }

    /// `g_ij = f ḡ_ij + A_ki ḡ^{kl} A_lj` on the first `m` coordinates.
    pub fn pullback(&self, f: &Jet, m: usize) -> JetMatrix {
        let blk = |x: &JetMatrix| -> JetMatrix { x[..m].iter().map(|r| r[..m].to_vec()).collect() };
        let a = blk(&self.a);
        let g = blk(&self.g);
        let gi = invert(&g).expect("background metric is nondegenerate");
        let aa = mat_mul(&mat_mul(&transpose(&a), &gi), &a);
        (0..m).map(|i| (0..m).map(|j| &(f * &g[i][j]) + &aa[i][j]).collect()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct KinematicState {
    pub dim: usize,
    pub velocity: Vec<f64>,
    pub gradient: DMatrix<f64>,
    pub zeta: DMatrix<f64>,
    pub strain: DMatrix<f64>,
    pub scalar_vorticity: Option<f64>,
    pub f: f64,
}

fn base_vorticity(ff: &FlowField) -> Result<Jet> {
    let gb: JetMatrix = ff.g[..2].iter().map(|r| r[..2].to_vec()).collect();
    (&ff.a[1][0] - &ff.a[0][1]).div(&determinant(&gb).sqrt()?)
}

pub fn kinematics(spec: &FlowSpec, point: &[f64]) -> Result<KinematicState> {
    let ff = flow_field(spec, point, 0)?;
    let n = ff.dim();
    let gradient = values(&ff.a);
    let strain = (&gradient + gradient.transpose()) * 0.5;
    let zeta = (gradient.transpose() - &gradient) * 0.5;
    let scalar_vorticity = if spec.is_stream() || spec.is_reduced() { Some(base_vorticity(&ff)?.value()) } else { None };
    Ok(KinematicState {
        dim: n,
        velocity: ff.v.iter().map(|c| c.value()).collect(),
        gradient,
        zeta,
        strain,
        scalar_vorticity,
        f: ff.f().value(),
    })
}

/// Traces `ζ_ij ζ^ij` and `S_ij S^ij` at a point.
pub fn traces(kin: &KinematicState, ginv: &DMatrix<f64>) -> (f64, f64) {
    let tr = |m: &DMatrix<f64>| {
        let up = ginv * m * ginv;
        m.component_mul(&up).sum()
    };
    (tr(&kin.zeta), tr(&kin.strain))
}

pub fn classify_value(f: f64, eps: f64) -> Class {
    if f > eps {
        Class::Elliptic
    } else if f < -eps {
        Class::Hyperbolic
    } else {
        Class::Parabolic
    }
}

pub fn classify(spec: &FlowSpec, point: &[f64], eps: f64) -> Result<Class> {
    Ok(classify_value(kinematics(spec, point)?.f, eps))
}

/// `v_i ζ^i` with `ζ^i = (1/√ḡ) ε^{ijk} ∂_j v_k`.
pub fn helicity_density(spec: &FlowSpec, point: &[f64]) -> Result<f64> {
    if spec.dim() != 3 {
        return Err(Error::Dimension(spec.dim()));
    }
    let ff = flow_field(spec, point, 0)?;
    let a = values(&ff.a);
    let sq = values(&ff.g).determinant().sqrt();
    let curl = |j: usize, k: usize| a[(k, j)] - a[(j, k)];
    let w = [curl(1, 2) / sq, curl(2, 0) / sq, curl(0, 1) / sq];
    Ok((0..3).map(|i| ff.v[i].value() * w[i]).sum())
}

// ---------------------------------------------------------------------------
// Phase space

/// Seeds for the phase point `(x, q)` in `2m` variables.
pub fn phase_seeds(x: &[f64], q: &[f64], order: usize) -> Result<Vec<Jet>> {
    let mut p = x.to_vec();
    p.extend_from_slice(q);
    Jet::seed_point(&p, order)
}

fn embed_base(j: &Jet, m: usize) -> Result<Jet> {
    j.embed(2 * m, &(0..j.dim()).collect::<Vec<_>>())
}

/// `f̂(x, q) = ½Δ̄p + ½R̄^{ij} q_i q_j` as a jet in `2m` phase variables, with
/// `½Δ̄p` taken from the kinematic identity `f = ½(Δ̄p + R̄_ij v^i v^j)`.
pub fn fhat_phase_jet(spec: &FlowSpec, x: &[f64], q: &[f64], order: usize) -> Result<Jet> {
    let m = spec.dim();
    let ff = flow_field(spec, x, order)?;
    let f = ff.f();
    let ric_up = ricci_up(&spec.geometry, x, order)?;
    let mut half_lap = f;
    for i in 0..m {
        for j in 0..m {
            half_lap = &half_lap - &(&ric_up[i][j] * &(&ff.v[i] * &ff.v[j])).scale(0.5);
        }
    }
    let seeds = phase_seeds(x, q, order)?;
    let mut out = embed_base(&half_lap, m)?;
    for i in 0..m {
        for j in 0..m {
            let r = embed_base(&ric_up[i][j], m)?;
            out = &out + &(&r * &(&seeds[m + i] * &seeds[m + j])).scale(0.5);
        }
    }
    Ok(out)
}

fn ricci_up(geom: &Geometry, x: &[f64], order: usize) -> Result<JetMatrix> {
    let c = geom.curvature_at(x, order)?;
    let gi = invert(&geom.metric_at(x, order)?)?;
    Ok(mat_mul(&mat_mul(&gi, &c.ricci), &gi))
}

/// Coordinate matrix of `ĝ = f̂ ḡ_ij dx dx + ḡ^{ij} ∇q_i ∇q_j`; `seeds` are the
/// phase jets (one order above the result) and `fhat` has the result order.
pub fn phase_metric_jets(geom: &Geometry, seeds: &[Jet], fhat: &Jet) -> Result<JetMatrix> {
    let m = geom.dim();
    let order = fhat.order();
    let g1 = geom.metric(&seeds[..m])?;
    let gam = christoffels(&g1)?;
    let g = truncate_matrix(&g1, order);
    let gi = invert(&g)?;
    let q: Vec<Jet> = seeds[m..].iter().map(|s| s.truncate(order)).collect();
    let z = fhat.constant_like(0.0);
    // C[a][i] = Γ_ai^k q_k
    let c: JetMatrix = (0..m)
        .map(|a| (0..m).map(|i| (0..m).fold(z.clone(), |s, k| &s + &(&gam[a][i][k].truncate(order) * &q[k]))).collect())
        .collect();
    let cgi = mat_mul(&c, &gi);
    let cgc = mat_mul(&cgi, &transpose(&c));
    let mut out = vec![vec![z.clone(); 2 * m]; 2 * m];
    for a in 0..m {
        for b in 0..m {
            out[a][b] = &(fhat * &g[a][b]) + &cgc[a][b];
            out[a][m + b] = -&cgi[a][b];
            out[m + b][a] = -&cgi[a][b];
            out[m + a][m + b] = gi[a][b].clone();
        }
    }
    Ok(out)
}

pub fn phase_metric_matrix(geom: &Geometry, x: &[f64], q: &[f64], fhat: f64) -> Result<DMatrix<f64>> {
    let seeds = phase_seeds(x, q, 1)?;
    let fh = seeds[0].constant_like(fhat).truncate(0);
    Ok(values(&phase_metric_jets(geom, &seeds, &fh)?))
}

/// Phase metric at `(x, v(x))` for a given `f̂`.
pub fn phase_metric(spec: &FlowSpec, point: &[f64], fhat: f64, eps: f64) -> Result<MetricValue> {
    if !fhat.is_finite() || fhat.abs() <= eps {
        return Err(Error::SingularStructure);
    }
    let q: Vec<f64> = spec.jets_at(point, 0)?.v.iter().map(|c| c.value()).collect();
    let matrix = phase_metric_matrix(&spec.geometry, point, &q, fhat)?;
    let signature = if fhat > 0.0 { Signature::Riemannian } else { Signature::Kleinian };
    Ok(MetricValue { matrix, signature, context: MetricContext::Phase })
}

/// `R̂ = (m−1)/(4f³)·[(6−m)|∂f|² − 4fΔf]` for f depending on x only, flat background.
pub fn phase_curvature_flat(f: &Jet, m: usize) -> f64 {
    let fv = f.value();
    let grad2: f64 = (0..m).map(|i| f.d1(i).powi(2)).sum();
    let lap: f64 = (0..m).map(|i| f.d2(i, i)).sum();
    let mf = m as f64;
    (mf - 1.0) / (4.0 * fv.powi(3)) * ((6.0 - mf) * grad2 - 4.0 * fv * lap)
}

/// Closed-form scalar curvature of `ĝ` for `f̂` given as a phase jet of order ≥ 2.
pub fn phase_curvature_closed(geom: &Geometry, x: &[f64], q: &[f64], fhat: &Jet) -> Result<f64> {
    let m = geom.dim();
    let mf = m as f64;
    if fhat.value().abs() <= EPS_SING {
        return Err(Error::SingularStructure);
    }
    let seeds = phase_seeds(x, q, 3)?;
    let g3 = geom.metric(&seeds[..m])?;
    let gam = christoffels(&g3)?;
    let g2 = truncate_matrix(&g3, 2);
    let curv = curvature(&g2)?;
    let gi0 = values(&invert(&g2)?);
    let g0 = values(&g2);
    let fh = fhat.truncate(2);
    let fv = fh.value();
    let l = fh.log_abs()?;
    // Laplacian of ĝ: ∂_A(ĝ^{AB}∂_B L) + (m/2)∂_A L ĝ^{AB} ∂_B L
    let seeds2: Vec<Jet> = phase_seeds(x, q, 2)?;
    let ghat1 = phase_metric_jets(geom, &seeds2, &fh.truncate(1))?;
    let ghi = invert(&ghat1)?;
    let dl: Vec<Jet> = (0..2 * m).map(|b| l.derivative(b)).collect::<Result<_>>()?;
    let mut lap = 0.0;
    for a in 0..2 * m {
        let mut flux = dl[0].constant_like(0.0);
        for b in 0..2 * m {
            flux = &flux + &(&ghi[a][b] * &dl[b]);
        }
        lap += flux.derivative(a)?.value() + 0.5 * mf * dl[a].value() * flux.value();
    }
    let dq: Vec<f64> = (0..m).map(|k| l.d1(m + k)).collect();
    let dx: Vec<f64> = (0..m)
        .map(|i| l.d1(i) + (0..m).map(|k| (0..m).map(|ll| gam[i][k][ll].value() * q[ll]).sum::<f64>() * dq[k]).sum::<f64>())
        .collect();
    let mut dd = 0.0;
    let mut qq_hess = 0.0;
    let mut qq_grad = 0.0;
    for i in 0..m {
        for j in 0..m {
            dd += gi0[(i, j)] * dx[i] * dx[j];
            qq_hess += g0[(i, j)] * l.d2(m + i, m + j);
            qq_grad += g0[(i, j)] * dq[i] * dq[j];
        }
    }
    // R̄_ijk^l R̄^{ijkm} q_l q_m
    let rv = |i: usize, j: usize, k: usize, l: usize| curv.riemann[i][j][k][l].value();
    let mut rr = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let lo: f64 = (0..m).map(|l| rv(i, j, k, l) * q[l]).sum();
                if lo == 0.0 {
                    continue;
                }
                let mut up = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        for c in 0..m {
                            let w = gi0[(i, a)] * gi0[(j, b)] * gi0[(k, c)];
                            if w != 0.0 {
                                up += w * (0..m).map(|mm| rv(a, b, c, mm) * q[mm]).sum::<f64>();
                            }
                        }
                    }
                }
                rr += lo * up;
            }
        }
    }
    let rbar = curv.scalar.value();
    Ok(rbar / fv - rr / (4.0 * fv * fv) - (mf - 1.0) * lap - qq_hess
        + (mf - 1.0) * (mf - 2.0) * dd / (4.0 * fv)
        + 0.25 * mf * (mf - 3.0) * qq_grad)
}

/// Scalar curvature of `ĝ` from its Christoffel symbols; `fhat` of order ≥ 2.
pub fn phase_curvature_oracle(geom: &Geometry, x: &[f64], q: &[f64], fhat: &Jet) -> Result<f64> {
    let seeds = phase_seeds(x, q, 3)?;
    let gh = phase_metric_jets(geom, &seeds, &fhat.truncate(2))?;
    scalar_curvature(&gh)
}

/// `R̂` at `(x, v(x))`.
pub fn phase_scalar_curvature(spec: &FlowSpec, point: &[f64]) -> Result<f64> {
    let m = spec.dim();
    if spec.geometry.is_flat_cartesian() {
        let f = flow_field(spec, point, 2)?.f();
        if f.value().abs() <= EPS_SING {
            return Err(Error::SingularStructure);
        }
        return Ok(phase_curvature_flat(&f, m));
    }
    let q: Vec<f64> = spec.jets_at(point, 0)?.v.iter().map(|c| c.value()).collect();
    let fh = fhat_phase_jet(spec, point, &q, 2)?;
    phase_curvature_closed(&spec.geometry, point, &q, &fh)
}

// ---------------------------------------------------------------------------
// Pullback metric

/// Pullback metric jets: `f ḡ + Aᵀḡ⁻¹A`, or its base block with the full
/// 3D `f` for reduced flows.
pub fn pullback_metric_jets(spec: &FlowSpec, point: &[f64], order: usize) -> Result<JetMatrix> {
    let ff = flow_field(spec, point, order)?;
    let f = ff.f();
    let m = if spec.is_reduced() { 2 } else { spec.dim() };
    Ok(ff.pullback(&f, m))
}

pub fn pullback_metric(spec: &FlowSpec, point: &[f64], eps: f64) -> Result<MetricValue> {
    let context = if spec.is_reduced() { MetricContext::ReducedPullback } else { MetricContext::Pullback };
    Ok(MetricValue::new(values(&pullback_metric_jets(spec, point, 0)?), context, eps))
}

/// Eigenvalues of a 2×2 symmetric matrix, descending.
pub fn sym_eigen2(a: f64, b: f64, d: f64) -> [f64; 2] {
    let m = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [m + r, m - r]
}

/// Eigenvalues of a 3×3 symmetric matrix by the trigonometric Cardano form, descending.
pub fn sym_eigen3(m: &DMatrix<f64>) -> [f64; 3] {
    let p1 = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
    let q = m.trace() / 3.0;
    if p1 == 0.0 {
        let mut e = [m[(0, 0)], m[(1, 1)], m[(2, 2)]];
        e.sort_by(|a, b| b.partial_cmp(a).unwrap());
        return e;
    }
    let p2 = (m[(0, 0)] - q).powi(2) + (m[(1, 1)] - q).powi(2) + (m[(2, 2)] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b = (m - DMatrix::identity(3, 3) * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [e1, 3.0 * q - e1 - e3, e3]
}

#[derive(Debug, Clone)]
pub struct Eigenvalues {
    /// Descending.
    pub values: Vec<f64>,
    /// `D_R = √(ζ² − 4f)` for 2D stream flows.
    pub dr: Option<f64>,
}

/// Eigenvalues of `g` relative to the background metric `ḡ`.
pub fn pullback_eigenvalues(metric: &MetricValue, background: &DMatrix<f64>, kin: Option<&KinematicState>) -> Eigenvalues {
    let n = metric.matrix.nrows();
    let gb = background.view((0, 0), (n, n)).into_owned();
    let rel = match gb.clone().cholesky() {
        Some(ch) => {
            let li = ch.l().try_inverse().unwrap_or_else(|| DMatrix::identity(n, n));
            &li * &metric.matrix * li.transpose()
        }
        None => metric.matrix.clone(),
    };
    let values = match n {
        2 => sym_eigen2(rel[(0, 0)], 0.5 * (rel[(0, 1)] + rel[(1, 0)]), rel[(1, 1)]).to_vec(),
        3 => sym_eigen3(&((&rel + rel.transpose()) * 0.5)).to_vec(),
        _ => {
            let mut e: Vec<f64> = SymmetricEigen::new(rel).eigenvalues.iter().copied().collect();
            e.sort_by(|a, b| b.partial_cmp(a).unwrap());
            e
        }
    };
    let dr = kin.filter(|k| k.dim == 2).and_then(|k| k.scalar_vorticity.map(|z| (z * z - 4.0 * k.f).max(0.0).sqrt()));
    Eigenvalues { values, dr }
}

#[derive(Debug, Clone, Copy)]
pub struct PullbackCurvature {
    pub r: f64,
    pub rtilde: Option<f64>,
}

/// Curvature of the Hessian metric `g̃ = ∇̄∂ψ` and the conformal curvature of
/// `g = ζ g̃` on a 2D background; `psi` is a jet of order ≥ 4 in the two
/// coordinates.
pub fn hessian_curvatures(geom: &Geometry, point: &[f64], psi: &Jet, eps: f64) -> Result<(f64, f64)> {
    let n = 2;
    let seeds = Jet::seed_point(&point[..2], 4)?;
    let g4 = geom.metric(&seeds)?;
    let gam3 = christoffels(&g4)?;
    let curv = curvature(&g4)?; // order 2
    let psi = psi.truncate(4);
    let dpsi: Vec<Jet> = (0..n).map(|k| psi.derivative(k)).collect::<Result<_>>()?; // order 3
    let gam2: Christoffels = gam3.iter().map(|a| a.iter().map(|b| b.iter().map(|c| c.truncate(2)).collect()).collect()).collect();
    let mut h = vec![vec![dpsi[0].truncate(2); n]; n];
    for j in 0..n {
        for k in 0..n {
            let mut s = dpsi[k].derivative(j)?;
            for l in 0..n {
                s = &s - &(&gam2[j][k][l] * &dpsi[l].truncate(2));
            }
            h[j][k] = s;
        }
    }
    let zeta = {
        let gi = invert(&truncate_matrix(&g4, 2))?;
        let mut s = h[0][0].constant_like(0.0);
        for i in 0..n {
            for j in 0..n {
                s = &s + &(&gi[i][j] * &h[i][j]);
            }
        }
        s
    };
    if zeta.value().abs() <= eps {
        return Err(Error::VanishingVorticity);
    }
    let hdet = determinant(&h);
    if hdet.value().abs() <= eps {
        return Err(Error::DegenerateHessian);
    }
    let th = covariant_derivative(&Tensor::from_matrix(&h, [true, true]), &gam2)?; // order 1
    let t = |i: usize, j: usize, k: usize| th.get(&[i, j, k]).value();
    let p3 = |i: usize, j: usize, k: usize| (t(i, j, k) + t(j, k, i) + t(k, i, j)) / 3.0;
    let rv = |i: usize, j: usize, k: usize, l: usize| curv.riemann[i][j][k][l].value();
    let rs = |j: usize, k: usize, l: usize, nn: usize| 0.5 * (rv(j, k, l, nn) + rv(j, l, k, nn));
    let p1: Vec<f64> = dpsi.iter().map(|d| d.value()).collect();
    let ups = |i: usize, j: usize, k: usize| p3(i, j, k) + 4.0 / 3.0 * (0..n).map(|l| p1[l] * rs(k, i, j, l)).sum::<f64>();
    let riem_t = Tensor {
        n,
        slots: vec![true, true, true, false],
        comps: curv.riemann.iter().flatten().flatten().flatten().cloned().collect(),
    };
    let gam1: Christoffels = gam3.iter().map(|a| a.iter().map(|b| b.iter().map(|c| c.truncate(2)).collect()).collect()).collect();
    let drie = covariant_derivative(&riem_t, &gam1)?;
    let dr = |i: usize, j: usize, k: usize, l: usize, m: usize| drie.get(&[i, j, k, l, m]).value();
    let drs = |i: usize, j: usize, k: usize, l: usize, m: usize| 0.5 * (dr(i, j, k, l, m) + dr(i, j, l, k, m));
    let h0 = values(&h);
    let hi = h0.clone().try_inverse().ok_or(Error::DegenerateHessian)?;
    let g0 = values(&truncate_matrix(&g4, 0));
    let rbar = curv.scalar.value();
    let mut rt = 0.0;
    for i in 0..n {
        for j in 0..n {
            rt += 0.5 * hi[(i, j)] * g0[(i, j)] * rbar;
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        for nn in 0..n {
                            rt -= 0.25
                                * hi[(i, j)]
                                * hi[(k, l)]
                                * hi[(m, nn)]
                                * (ups(i, j, m) * ups(k, l, nn) - ups(i, k, m) * ups(j, l, nn));
                        }
                    }
                    let mut br = 0.0;
                    for m in 0..n {
                        for nn in 0..n {
                            let di = if m == i { 1.0 } else { 0.0 };
                            let dj = if m == j { 1.0 } else { 0.0 };
                            br += h0[(m, nn)] * (di * rs(j, k, l, nn) - dj * rs(l, i, k, nn));
                        }
                        br += p1[m] * (drs(i, j, k, l, m) - drs(j, l, i, k, m));
                    }
                    rt += 2.0 / 3.0 * hi[(i, j)] * hi[(k, l)] * br;
                }
            }
        }
    }
    // conformal term: (1/√|det g̃|) ∂_i(√|det g̃| g̃^{ij} ∂_j log|ζ|)
    let h1 = truncate_matrix(&h, 1);
    let hi1 = invert(&h1)?;
    let sq = determinant(&h1).log_abs()?.scale(0.5).exp();
    let lz = zeta.log_abs()?;
    let dlz: Vec<Jet> = (0..n).map(|j| lz.derivative(j)).collect::<Result<_>>()?;
    let mut div = 0.0;
    for i in 0..n {
        let mut flux = dlz[0].constant_like(0.0);
        for j in 0..n {
            flux = &flux + &(&hi1[i][j] * &dlz[j]);
        }
        div += (&sq * &flux).derivative(i)?.value();
    }
    let r = (rt - div / sq.value()) / zeta.value();
    Ok((r, rt))
}

/// Scalar curvature of a 2×2 (or 3×3) metric field given as jets of order ≥ 2.
pub fn metric_curvature_oracle(g: &JetMatrix) -> Result<f64> {
    scalar_curvature(g)
}

fn psi_jet_2d(spec: &FlowSpec, point: &[f64], order: usize) -> Result<Jet> {
    let seeds = Jet::seed_point(&point[..2], order)?;
    spec.psi_on(&seeds)
}

pub fn pullback_scalar_curvature(spec: &FlowSpec, point: &[f64], eps: f64) -> Result<PullbackCurvature> {
    if spec.is_stream() {
        let psi = psi_jet_2d(spec, point, 4)?;
        let (r, rt) = hessian_curvatures(&spec.geometry, point, &psi, eps)?;
        return Ok(PullbackCurvature { r, rtilde: Some(rt) });
    }
    let g = pullback_metric_jets(spec, point, 2)?;
    let gv = values(&g);
    if gv.determinant().abs() <= eps {
        return Err(Error::DegenerateMetric);
    }
    let r = metric_curvature_oracle(&g)?;
    let rtilde = if spec.is_reduced() {
        let (base, _) = spec.geometry.warp_parts().expect("reduced flows are warped");
        let psi = psi_jet_2d(spec, point, 4)?;
        hessian_curvatures(base, point, &psi, eps).ok().map(|(_, rt)| rt)
    } else {
        None
    };
    Ok(PullbackCurvature { r, rtilde })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use crate::flows::catalog;

    fn moffatt() -> FlowSpec {
        catalog("moffatt", &Params::new(), -1.0).unwrap()
    }

    #[test]
    fn moffatt_kinematics() {
        let k = kinematics(&moffatt(), &[0.3, -1.0]).unwrap();
        assert!((k.f - 12.0).abs() < 1e-12);
        let k0 = kinematics(&moffatt(), &[0.3, 0.0]).unwrap();
        assert!((k0.scalar_vorticity.unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn moffatt_pullback_metric() {
        let g = pullback_metric(&moffatt(), &[0.7, 0.2], EPS_SING).unwrap();
        assert!((g.matrix[(0, 0)] - 1.6).abs() < 1e-12);
        assert!((g.matrix[(1, 1)] + 0.96).abs() < 1e-12);
        assert_eq!(g.signature, Signature::Kleinian);
    }

    #[test]
    fn moffatt_curvatures() {
        let s = moffatt();
        let rh = phase_scalar_curvature(&s, &[0.2, -1.0]).unwrap();
        assert!((rh - 1.0 / 12.0).abs() < 1e-12);
        let pc = pullback_scalar_curvature(&s, &[0.2, -1.0], EPS_SING).unwrap();
        assert!((pc.r - 0.01953125).abs() < 1e-12);
        assert!(pc.rtilde.unwrap().abs() < 1e-12);
    }

    #[test]
    fn phase_metric_signature() {
        let s = moffatt();
        assert_eq!(phase_metric(&s, &[0.0, 1.0], -12.0, EPS_SING).unwrap().signature, Signature::Kleinian);
        assert!(matches!(phase_metric(&s, &[0.0, 0.0], 0.0, EPS_SING), Err(Error::SingularStructure)));
    }

    #[test]
    fn cardano_matches_sorted_diagonal() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let e = sym_eigen3(&m);
        assert!((e[0] - 5.0).abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12 && (e[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classification() {
        let s = moffatt();
        assert_eq!(classify(&s, &[0.0, -0.5], EPS_SING).unwrap(), Class::Elliptic);
        assert_eq!(classify(&s, &[0.0, 0.5], EPS_SING).unwrap(), Class::Hyperbolic);
        assert_eq!(classify(&s, &[0.0, 0.0], EPS_SING).unwrap(), Class::Parabolic);
    }
}
