//! Monge–Ampère data on the cotangent bundle: the symplectic forms ω and ϖ,
//! the effective form α, the Liouville form θ, the compatible two-forms K
//! and the almost (para-)complex structure J.
//!
//! Frame ordering is `(x¹…x^m, q₁…q_m)`. Pointwise forms are expressed in
//! the coframe `(dx^i, ∇q_i)` with `∇q_i = dq_i − Γ̄_{ji}{}^k q_k dx^j`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::background::{christoffels, determinant, invert, truncate_matrix, Geometry, JetMatrix};
use crate::diagnostics::{fhat_phase_jet, flow_field, phase_metric_matrix, phase_seeds, EPS_SING};
use crate::error::{Error, Result};
use crate::exterior::{effective_decompose, hodge_star, interior, pfaffian, Form, JetForm};
use crate::flows::FlowSpec;
use crate::jet::Jet;

#[derive(Debug, Clone)]
pub struct MAPoint {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub geometry: Geometry,
    pub fhat: f64,
    pub omega: Form,
    pub varpi: Form,
    pub alpha: Form,
    pub theta: Form,
    /// Pairs with `j`: `−√|f̂| ∇q_i∧⋆dx^i` in 2D, `√|f̂| ω` in 3D.
    pub k: Form,
    /// `α/√|f̂| = J⌟ω` in 2D; the ε-contraction in 3D.
    pub j: DMatrix<f64>,
    /// 2D only: the structure built on ϖ, `α/√|f̂| = 𝒥⌟ϖ`, with `𝒦 = √|f̂| ω`.
    pub j_alt: Option<DMatrix<f64>>,
    pub k_alt: Option<Form>,
}

impl MAPoint {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `K(X, JY)` in the frame.
    pub fn metric_frame(&self) -> DMatrix<f64> {
        self.k.to_matrix() * &self.j
    }

    /// `K(X, JY)` in coordinates `(x, q)`.
    pub fn metric_coords(&self) -> Result<DMatrix<f64>> {
        let t = coframe_matrix(&self.geometry, &self.x, &self.q)?;
        Ok(t.transpose() * self.metric_frame() * t)
    }
}

/// `T` with `θ^a = T^a_μ dz^μ` for the coframe `(dx, ∇q)`.
pub fn coframe_matrix(geom: &Geometry, x: &[f64], q: &[f64]) -> Result<DMatrix<f64>> {
    let m = geom.dim();
    let gam = geom.christoffels_at(x, 0)?;
    let mut t = DMatrix::identity(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            t[(m + i, j)] = -(0..m).map(|k| gam[j][i][k].value() * q[k]).sum::<f64>();
        }
    }
    Ok(t)
}

struct Pieces {
    omega: JetForm,
    varpi: JetForm,
    alpha: JetForm,
    theta: JetForm,
}

fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    (0usize..1 << m)
        .filter(|s| s.count_ones() as usize == k)
        .map(|s| (0..m).filter(|i| s & (1 << i) != 0).collect())
        .collect()
}

fn perm_sign(idx: &[usize]) -> f64 {
    let mut s = 1.0;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            if idx[a] > idx[b] {
                s = -s;
            }
        }
    }
    s
}

/// `⋆(dx^I) = √ḡ Σ_K det(ḡ^{IK}) sgn(K, Kᶜ) dx^{Kᶜ}` on the base.
fn base_star(idx: &[usize], dx: &[JetForm], ginv: &JetMatrix, sqrtg: &Jet) -> JetForm {
    let m = dx.len();
    let n = dx[0].dim();
    let mut out = JetForm::new(n);
    for kk in subsets(m, idx.len()) {
        let minor = if idx.is_empty() {
            sqrtg.constant_like(1.0)
        } else {
            let sub: JetMatrix = idx.iter().map(|&a| kk.iter().map(|&b| ginv[a][b].clone()).collect()).collect();
            determinant(&sub)
        };
        if minor.max_abs() == 0.0 {
            continue;
        }
        let comp: Vec<usize> = (0..m).filter(|r| !kk.contains(r)).collect();
        let mut order = kk.clone();
        order.extend(&comp);
        let mut w = JetForm::new(n);
        w.add_term(&[], (&minor * sqrtg).scale(perm_sign(&order)));
        for &r in &comp {
            w = w.wedge(&dx[r]);
        }
        out = out.add(&w);
    }
    out
}

fn assemble(dx: &[JetForm], nq: &[JetForm], q: &[Jet], ginv: &JetMatrix, sqrtg: &Jet, fhat: &Jet) -> Pieces {
    let m = dx.len();
    let n = 2 * m;
    let mut omega = JetForm::new(n);
    let mut varpi = JetForm::new(n);
    let mut alpha = JetForm::new(n);
    let mut theta = JetForm::new(n);
    for i in 0..m {
        omega = omega.add(&nq[i].wedge(&dx[i]));
        varpi = varpi.add(&nq[i].wedge(&base_star(&[i], dx, ginv, sqrtg)));
        theta = theta.add(&dx[i].times(&q[i]));
        for j in i + 1..m {
            alpha = alpha.add(&nq[i].wedge(&nq[j]).wedge(&base_star(&[i, j], dx, ginv, sqrtg)));
        }
    }
    let vol = base_star(&[], dx, ginv, sqrtg);
    alpha = alpha.sub(&vol.times(fhat));
    Pieces { omega, varpi, alpha, theta }
}

struct BaseJets {
    gamma_q: JetMatrix,
    ginv: JetMatrix,
    sqrtg: Jet,
    q: Vec<Jet>,
}

/// Background data as first-order jets in the `2m` phase variables.
fn base_jets(geom: &Geometry, x: &[f64], q: &[f64]) -> Result<BaseJets> {
    let m = geom.dim();
    let seeds = phase_seeds(x, q, 2)?;
    let g2 = geom.metric(&seeds[..m])?;
    let gam = christoffels(&g2)?;
    let g = truncate_matrix(&g2, 1);
    let ginv = invert(&g)?;
    let sqrtg = determinant(&g).sqrt()?;
    let qj: Vec<Jet> = seeds[m..].iter().map(|s| s.truncate(1)).collect();
    // gamma_q[j][i] = Γ_ji^k q_k
    let gamma_q = (0..m)
        .map(|j| {
            (0..m)
                .map(|i| (0..m).fold(qj[0].constant_like(0.0), |s, k| &s + &(&gam[j][i][k] * &qj[k])))
                .collect()
        })
        .collect();
    Ok(BaseJets { gamma_q, ginv, sqrtg, q: qj })
}

fn basis_one(n: usize, a: usize, like: &Jet) -> JetForm {
    let mut f = JetForm::new(n);
    f.add_term(&[a], like.constant_like(1.0));
    f
}

fn check_fhat(fhat: f64) -> Result<f64> {
    if !fhat.is_finite() || fhat.abs() <= EPS_SING {
        return Err(Error::SingularStructure);
    }
    Ok(fhat.abs().sqrt())
}

/// Solves `a/s = J⌟w`, i.e. `w(JX, Y) = a(X, Y)/s`.
fn j_from_pair(w: &Form, a: &Form, s: f64) -> Result<DMatrix<f64>> {
    let wm = w.to_matrix();
    let wi = wm.try_inverse().ok_or(Error::DegenerateReference)?;
    Ok(wi * a.to_matrix() / s)
}

/// `J X = c ε⌟ρ(X)` with the vector read off as `λ(JX) = c ε⌟(λ∧ρ(X))`; `ε` is
/// normalized against `ω^m/m!`.
fn j_from_contraction<F>(omega: &Form, rho: F, c: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Form,
{
    let n = omega.dim();
    let m = n / 2;
    let mut top = omega.clone();
    for _ in 1..m {
        top = top.wedge(omega);
    }
    let liouville = top.top() / (1..=m).product::<usize>() as f64;
    if liouville.abs() < 1e-300 {
        return Err(Error::DegenerateReference);
    }
    let mut j = DMatrix::zeros(n, n);
    for b in 0..n {
        let mut e = vec![0.0; n];
        e[b] = 1.0;
        let r = rho(&e);
        for a in 0..n {
            j[(a, b)] = c * Form::basis(n, &[a], 1.0).wedge(&r).top() / liouville;
        }
    }
    Ok(j)
}

/// `𝒥X = −(1/(2√|f̂|)) ε⌟(α∧X⌟α)`.
pub fn j_three_form(omega: &Form, alpha: &Form, s: f64) -> Result<DMatrix<f64>> {
    j_from_contraction(omega, |e| alpha.wedge(&interior(e, alpha)), -0.5 / s)
}

/// `𝒥X = (1/√|f̂|) ε⌟(ϖ∧X⌟α)` in dimension four.
pub fn j_rewritten_2d(omega: &Form, varpi: &Form, alpha: &Form, s: f64) -> Result<DMatrix<f64>> {
    j_from_contraction(omega, |e| varpi.wedge(&interior(e, alpha)), 1.0 / s)
}

pub fn build_structure(spec: &FlowSpec, x: &[f64], q: &[f64], fhat: f64) -> Result<MAPoint> {
    build_structure_on(&spec.geometry, x, q, fhat)
}

pub fn build_structure_on(geom: &Geometry, x: &[f64], q: &[f64], fhat: f64) -> Result<MAPoint> {
    let m = geom.dim();
    if !(2..=3).contains(&m) {
        return Err(Error::Dimension(m));
    }
    if x.len() != m || q.len() != m {
        return Err(Error::DimensionMismatch(format!("phase point needs {m}+{m} coordinates")));
    }
    let s = check_fhat(fhat)?;
    let b = base_jets(geom, x, q)?;
    let n = 2 * m;
    let like = &b.sqrtg;
    let dx: Vec<JetForm> = (0..m).map(|i| basis_one(n, i, like)).collect();
    let nq: Vec<JetForm> = (0..m).map(|i| basis_one(n, m + i, like)).collect();
    let p = assemble(&dx, &nq, &b.q, &b.ginv, &b.sqrtg, &like.constant_like(fhat));
    let (omega, varpi, alpha, theta) = (p.omega.value(), p.varpi.value(), p.alpha.value(), p.theta.value());
    let (j, k, j_alt, k_alt) = if m == 2 {
        let j = j_from_pair(&omega, &alpha, s)?;
        let j_alt = j_from_pair(&varpi, &alpha, s)?;
        (j, varpi.scale(-s), Some(j_alt), Some(omega.scale(s)))
    } else {
        (j_three_form(&omega, &alpha, s)?, omega.scale(s), None, None)
    };
    Ok(MAPoint { x: x.to_vec(), q: q.to_vec(), geometry: geom.clone(), fhat, omega, varpi, alpha, theta, k, j, j_alt, k_alt })
}

/// Coordinate-coframe fields of ω, ϖ, α around `(x, q)` with first-order
/// jet coefficients, `f̂` given as a phase jet.
fn coordinate_fields(geom: &Geometry, x: &[f64], q: &[f64], fhat: &Jet) -> Result<Pieces> {
    let m = geom.dim();
    let n = 2 * m;
    let b = base_jets(geom, x, q)?;
    let like = &b.sqrtg;
    let dx: Vec<JetForm> = (0..m).map(|i| basis_one(n, i, like)).collect();
    let nq: Vec<JetForm> = (0..m)
        .map(|i| {
            let mut f = basis_one(n, m + i, like);
            for j in 0..m {
                f.add_term(&[j], -&b.gamma_q[j][i]);
            }
            f
        })
        .collect();
    Ok(assemble(&dx, &nq, &b.q, &b.ginv, &b.sqrtg, &fhat.truncate(1)))
}

fn j_squared_residual(j: &DMatrix<f64>, fhat: f64) -> f64 {
    let n = j.nrows();
    let target = DMatrix::<f64>::identity(n, n) * (-fhat.signum());
    (j * j - target).abs().max()
}

fn antisymmetry_residual(k: &Form, j: &DMatrix<f64>) -> f64 {
    let km = k.to_matrix();
    (j.transpose() * &km + &km * j).abs().max()
}

/// Residuals of the structure identities; the `f̂` field for closure is
/// taken from the flow.
pub fn verify_structure(p: &MAPoint, spec: &FlowSpec) -> BTreeMap<String, f64> {
    let mut r = BTreeMap::new();
    let m = p.dim();
    r.insert("alpha_wedge_omega".into(), p.alpha.wedge(&p.omega).max_abs());
    r.insert("varpi_wedge_omega".into(), p.varpi.wedge(&p.omega).max_abs());
    r.insert("alpha_wedge_varpi".into(), if m == 2 { p.alpha.wedge(&p.varpi).max_abs() } else { 0.0 });
    let record = |r: &mut BTreeMap<String, f64>, key: &str, v: Result<f64>| {
        r.insert(key.into(), v.unwrap_or(f64::NAN));
    };
    let closure = fhat_phase_jet(spec, &p.x, &p.q, 1)
        .and_then(|fh| coordinate_fields(&p.geometry, &p.x, &p.q, &fh))
        .and_then(|c| Ok((c.alpha.d()?.value().max_abs(), c.varpi.d()?.value().max_abs(), c.omega.d()?.value().max_abs())));
    record(&mut r, "d_alpha", closure.clone().map(|c| c.0));
    record(&mut r, "d_varpi", closure.clone().map(|c| c.1));
    record(&mut r, "d_omega", closure.map(|c| c.2));
    if m == 2 {
        record(&mut r, "pfaffian", pfaffian(&p.alpha, &p.omega).map(|pf| (pf - p.fhat).abs()));
    }
    r.insert("j_squared".into(), j_squared_residual(&p.j, p.fhat));
    r.insert("k_antisymmetry".into(), antisymmetry_residual(&p.k, &p.j));
    let ghat = phase_metric_matrix(&p.geometry, &p.x, &p.q, p.fhat);
    let metric = p.metric_coords().and_then(|g| ghat.map(|h| (g - h).abs().max()));
    record(&mut r, "metric", metric);
    if let (Some(ja), Some(ka)) = (&p.j_alt, &p.k_alt) {
        r.insert("j_alt_squared".into(), j_squared_residual(ja, p.fhat));
        r.insert("k_alt_antisymmetry".into(), antisymmetry_residual(ka, ja));
        let t = coframe_matrix(&p.geometry, &p.x, &p.q);
        let g_alt = t.map(|t| t.transpose() * (ka.to_matrix() * ja) * t);
        let ghat = phase_metric_matrix(&p.geometry, &p.x, &p.q, p.fhat);
        record(&mut r, "metric_alt", g_alt.and_then(|g| ghat.map(|h| (g - h).abs().max())));
        let s = p.fhat.abs().sqrt();
        let rw = j_rewritten_2d(&p.omega, &p.varpi, &p.alpha, s).map(|jr| (jr - ja).abs().max());
        record(&mut r, "j_alt_rewritten", rw);
    }
    r
}

/// `(J⌟w)(X, Y) = w(JX, Y)`.
pub fn j_contract(j: &DMatrix<f64>, w: &Form) -> Form {
    Form::from_matrix(&(j.transpose() * w.to_matrix()))
}

/// Removes the ω and Jω components of `seed`; fails if nothing non-degenerate
/// remains.
pub fn construct_k_from_seed(omega: &Form, j_omega: &Form, seed: &Form) -> Result<Form> {
    if omega.dim() != 4 || j_omega.dim() != 4 || seed.dim() != 4 {
        return Err(Error::Dimension(omega.dim()));
    }
    if j_omega.wedge(j_omega).top().abs() < 1e-300 {
        return Err(Error::DegenerateReference);
    }
    let (rho0, _) = effective_decompose(seed, omega)?;
    let (rho1, _) = effective_decompose(&rho0, j_omega)?;
    let scale = seed.max_abs().max(1e-300);
    if rho1.max_abs() <= 1e-10 * scale || rho1.wedge(&rho1).top().abs() <= 1e-8 * scale * scale {
        return Err(Error::SeedDependent);
    }
    Ok(rho1)
}

/// Tries the basis two-forms in lexicographic order as seeds.
pub fn construct_k(omega: &Form, j_omega: &Form) -> Result<Form> {
    let n = omega.dim();
    let mut last = Error::SeedDependent;
    for a in 0..n {
        for b in a + 1..n {
            match construct_k_from_seed(omega, j_omega, &Form::basis(n, &[a, b], 1.0)) {
                Ok(k) => return Ok(k),
                Err(e @ Error::SeedDependent) => last = e,
                Err(e) => return Err(e),
            }
        }
    }
    Err(last)
}

/// Residuals of `ι*ϖ` and `ι*α` as multiples of the volume form along
/// `x ↦ (x, v(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullbackResiduals {
    pub varpi: f64,
    pub alpha: f64,
}

fn pulled_coframe(spec: &FlowSpec, point: &[f64]) -> Result<(Vec<Form>, DMatrix<f64>, Form)> {
    let m = spec.dim();
    let ff = flow_field(spec, point, 0)?;
    let g = crate::background::values(&ff.g);
    let nq = (0..m).map(|i| Form::one_form(&(0..m).map(|j| ff.a[i][j].value()).collect::<Vec<_>>())).collect();
    let orient = Form::basis(m, &(0..m).collect::<Vec<_>>(), 1.0);
    Ok((nq, g, orient))
}

/// `ι*ω` on the base; in 2D its coefficient is `∂₁v₂ − ∂₂v₁`.
pub fn pullback_omega(spec: &FlowSpec, point: &[f64]) -> Result<Form> {
    let m = spec.dim();
    let (nq, _, _) = pulled_coframe(spec, point)?;
    let mut w = Form::zero(m);
    for (i, n) in nq.iter().enumerate() {
        w = w.add(&n.wedge(&Form::basis(m, &[i], 1.0)));
    }
    Ok(w)
}

pub fn pullback_forms(spec: &FlowSpec, point: &[f64]) -> Result<PullbackResiduals> {
    let m = spec.dim();
    if !(2..=3).contains(&m) {
        return Err(Error::Dimension(m));
    }
    let (nq, g, orient) = pulled_coframe(spec, point)?;
    let vol = hodge_star(&Form::scalar(m, 1.0), &g, &orient)?.top();
    let dx = |i: usize| Form::basis(m, &[i], 1.0);
    let mut varpi = Form::zero(m);
    let mut quad = Form::zero(m);
    for i in 0..m {
        varpi = varpi.add(&nq[i].wedge(&hodge_star(&dx(i), &g, &orient)?));
        for j in i + 1..m {
            let star = hodge_star(&dx(i).wedge(&dx(j)), &g, &orient)?;
            quad = quad.add(&nq[i].wedge(&nq[j]).wedge(&star));
        }
    }
    let fhat = match spec.pressure_at(point, 2) {
        Ok(p) => half_laplacian(spec, point, &p)? + half_ricci_vv(spec, point)?,
        Err(Error::MissingPressure) => flow_field(spec, point, 0)?.f().value(),
        Err(e) => return Err(e),
    };
    Ok(PullbackResiduals { varpi: varpi.top() / vol, alpha: quad.top() / vol - fhat })
}

fn half_laplacian(spec: &FlowSpec, point: &[f64], p: &Jet) -> Result<f64> {
    let m = spec.dim();
    let g = spec.geometry.metric_at(point, 1)?;
    let gam = christoffels(&g)?;
    let gi = crate::background::values(&invert(&truncate_matrix(&g, 0))?);
    let mut lap = 0.0;
    for i in 0..m {
        for j in 0..m {
            let h = p.d2(i, j) - (0..m).map(|k| gam[i][j][k].value() * p.d1(k)).sum::<f64>();
            lap += gi[(i, j)] * h;
        }
    }
    Ok(0.5 * lap)
}

fn half_ricci_vv(spec: &FlowSpec, point: &[f64]) -> Result<f64> {
    let m = spec.dim();
    let c = spec.geometry.curvature_at(point, 0)?;
    let v: Vec<f64> = spec.jets_at(point, 0)?.v.iter().map(|j| j.value()).collect();
    let gi = crate::background::values(&c.ginv);
    let vu: Vec<f64> = (0..m).map(|i| (0..m).map(|j| gi[(i, j)] * v[j]).sum()).collect();
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += c.ricci[i][j].value() * vu[i] * vu[j];
        }
    }
    Ok(0.5 * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;
    use crate::flows::catalog;

    #[test]
    fn flat_elliptic_and_hyperbolic() {
        let g = Geometry::flat(2);
        for f in [1.0, -1.0] {
            let p = build_structure_on(&g, &[0.1, 0.2], &[0.3, -0.4], f).unwrap();
            assert!(j_squared_residual(&p.j, f) < 1e-12);
        }
    }

    #[test]
    fn flat_3d_complex() {
        let p = build_structure_on(&Geometry::flat(3), &[0.0; 3], &[0.3, -1.2, 0.7], 2.0).unwrap();
        assert!(j_squared_residual(&p.j, 2.0) < 1e-9);
    }

    #[test]
    fn moffatt_pfaffian() {
        let s = catalog("moffatt", &Params::new(), -1.0).unwrap();
        let x = [0.3, -1.0];
        let q: Vec<f64> = s.jets_at(&x, 0).unwrap().v.iter().map(|c| c.value()).collect();
        let p = build_structure(&s, &x, &q, 12.0).unwrap();
        assert!((pfaffian(&p.alpha, &p.omega).unwrap() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn singular_fhat_rejected() {
        let r = build_structure_on(&Geometry::flat(2), &[0.0; 2], &[0.0; 2], 0.0);
        assert_eq!(r.unwrap_err(), Error::SingularStructure);
    }
}

