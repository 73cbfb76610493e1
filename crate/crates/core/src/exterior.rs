//! Exterior algebra over a real vector space of dimension at most 8.
//!
//! Components are stored densely, one slot per subset of basis indices
//! (a bitmask), so a single value may mix grades.

use crate::error::{Error, Result};
use crate::jet::Jet;
use nalgebra::DMatrix;

pub const MAX_FORM_DIM: usize = 8;

fn grade_of(mask: usize) -> usize {
    mask.count_ones() as usize
}

fn indices(mask: usize) -> Vec<usize> {
    (0..MAX_FORM_DIM).filter(|i| mask & (1 << i) != 0).collect()
}

/// Sign of the shuffle that sorts the concatenation of `a` and `b`.
fn merge_sign(a: usize, b: usize) -> f64 {
    let mut swaps = 0;
    for j in indices(b) {
        swaps += (a >> (j + 1)).count_ones();
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Mask with the given indices; `None` if an index repeats.
pub fn mask_of(idx: &[usize]) -> Option<usize> {
    let mut m = 0usize;
    for &i in idx {
        if m & (1 << i) != 0 {
            return None;
        }
        m |= 1 << i;
    }
    Some(m)
}

/// Sign of the permutation sorting `idx` (all entries distinct).
fn sort_sign(idx: &[usize]) -> f64 {
    let mut s = 1.0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] > idx[j] {
                s = -s;
            }
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    dim: usize,
    c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyVector {
    dim: usize,
    c: Vec<f64>,
}

fn check_dim(dim: usize) {
    assert!((1..=MAX_FORM_DIM).contains(&dim), "form dimension {dim} out of range");
}

macro_rules! shared_impl {
    ($t:ident) => {
        impl $t {
            pub fn zero(dim: usize) -> $t {
                check_dim(dim);
                $t { dim, c: vec![0.0; 1 << dim] }
            }

            pub fn scalar(dim: usize, v: f64) -> $t {
                let mut z = $t::zero(dim);
                z.c[0] = v;
                z
            }

            /// Single basis element with coefficient `v`; indices in any order.
            pub fn basis(dim: usize, idx: &[usize], v: f64) -> $t {
                let mut z = $t::zero(dim);
                z.add_term(idx, v);
                z
            }

            pub fn add_term(&mut self, idx: &[usize], v: f64) {
                assert!(idx.iter().all(|&i| i < self.dim), "basis index out of range");
                if let Some(m) = mask_of(idx) {
                    self.c[m] += sort_sign(idx) * v;
                }
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            /// Coefficient of the sorted basis element `idx`, with permutation sign.
            pub fn get(&self, idx: &[usize]) -> f64 {
                match mask_of(idx) {
                    Some(m) => sort_sign(idx) * self.c[m],
                    None => 0.0,
                }
            }

            pub fn top(&self) -> f64 {
                self.c[(1 << self.dim) - 1]
            }

            /// Nonzero components as (sorted indices, coefficient).
            pub fn terms(&self) -> Vec<(Vec<usize>, f64)> {
                self.c
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(m, v)| (indices(m), *v))
                    .collect()
            }

            pub fn grade_part(&self, k: usize) -> $t {
                let mut z = $t::zero(self.dim);
                for (m, v) in self.c.iter().enumerate() {
                    if grade_of(m) == k {
                        z.c[m] = *v;
                    }
                }
                z
            }

            pub fn scale(&self, s: f64) -> $t {
                $t { dim: self.dim, c: self.c.iter().map(|v| v * s).collect() }
            }

            pub fn add(&self, o: &$t) -> $t {
                assert_eq!(self.dim, o.dim);
                $t { dim: self.dim, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
            }

            pub fn sub(&self, o: &$t) -> $t {
                self.add(&o.scale(-1.0))
            }

            pub fn wedge(&self, o: &$t) -> $t {
                assert_eq!(self.dim, o.dim, "wedge of different dimensions");
                let mut z = $t::zero(self.dim);
                for (a, va) in self.c.iter().enumerate() {
                    if *va == 0.0 {
                        continue;
                    }
                    for (b, vb) in o.c.iter().enumerate() {
                        if *vb == 0.0 || a & b != 0 {
                            continue;
                        }
                        z.c[a | b] += merge_sign(a, b) * va * vb;
                    }
                }
                z
            }

            pub fn max_abs(&self) -> f64 {
                self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
        }
    };
}

shared_impl!(Form);
shared_impl!(PolyVector);

impl Form {
    /// 2-form from an antisymmetric matrix `m[i][j] = a(e_i, e_j)`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Form {
        let n = m.nrows();
        let mut f = Form::zero(n);
        for i in 0..n {
            for j in i + 1..n {
                f.add_term(&[i, j], m[(i, j)]);
            }
        }
        f
    }

    /// Matrix of the grade-2 part: `a(e_i, e_j)`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { self.get(&[i, j]) })
    }

    /// 1-form from components.
    pub fn one_form(c: &[f64]) -> Form {
        let mut f = Form::zero(c.len());
        for (i, v) in c.iter().enumerate() {
            f.add_term(&[i], *v);
        }
        f
    }

    /// Evaluates the grade-k part on `k` vectors.
    pub fn eval(&self, vectors: &[Vec<f64>]) -> f64 {
        let mut f = self.grade_part(vectors.len());
        for v in vectors {
            f = interior(v, &f);
        }
        f.c[0]
    }
}

/// Contraction into the leftmost slot: `(X⌟a)(Y, …) = a(X, Y, …)`.
pub fn interior(x: &[f64], a: &Form) -> Form {
    assert_eq!(x.len(), a.dim, "vector/form dimension mismatch");
    let mut z = Form::zero(a.dim);
    for (m, v) in a.c.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        for (pos, i) in indices(m).into_iter().enumerate() {
            if x[i] == 0.0 {
                continue;
            }
            let s = if pos % 2 == 0 { 1.0 } else { -1.0 };
            z.c[m & !(1 << i)] += s * x[i] * v;
        }
    }
    z
}

/// Contraction of a poly-vector: `(X₁∧…∧X_k)⌟a = a(X₁, …, X_k, …)`.
pub fn interior_poly(p: &PolyVector, a: &Form) -> Form {
    assert_eq!(p.dim, a.dim, "poly-vector/form dimension mismatch");
    let n = a.dim;
    let mut z = Form::zero(n);
    for (m, v) in p.c.iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        let mut f = a.scale(*v);
        for i in indices(m) {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            f = interior(&e, &f);
        }
        z = z.add(&f);
    }
    z
}

/// Components of the inner product on k-forms: minors of the inverse metric.
fn minor(ginv: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    if k == 0 {
        return 1.0;
    }
    DMatrix::from_fn(k, k, |a, b| ginv[(rows[a], cols[b])]).determinant()
}

fn inverse_metric(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = g.determinant();
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if d.abs() <= 1e-14 * scale.powi(g.nrows() as i32) {
        return Err(Error::DegenerateMetric);
    }
    g.clone().try_inverse().ok_or(Error::DegenerateMetric)
}

/// Metric pairing of forms, summed over grades.
pub fn inner(a: &Form, b: &Form, g: &DMatrix<f64>) -> Result<f64> {
    let ginv = inverse_metric(g)?;
    let mut s = 0.0;
    for (ma, va) in a.c.iter().enumerate() {
        if *va == 0.0 {
            continue;
        }
        for (mb, vb) in b.c.iter().enumerate() {
            if *vb == 0.0 || grade_of(ma) != grade_of(mb) {
                continue;
            }
            s += va * vb * minor(&ginv, &indices(ma), &indices(mb));
        }
    }
    Ok(s)
}

/// Hodge star with `a∧⋆b = ⟨a,b⟩ vol`; `orientation` is any top form of the
/// desired sign.
pub fn hodge_star(a: &Form, g: &DMatrix<f64>, orientation: &Form) -> Result<Form> {
    let n = a.dim;
    if g.nrows() != n || orientation.dim != n {
        return Err(Error::DimensionMismatch("hodge star".into()));
    }
    let ginv = inverse_metric(g)?;
    let o = orientation.top();
    if o == 0.0 {
        return Err(Error::DegenerateReference);
    }
    let vol = g.determinant().abs().sqrt() * o.signum();
    let full = (1usize << n) - 1;
    let mut z = Form::zero(n);
    for (mi, vi) in a.c.iter().enumerate() {
        if *vi == 0.0 {
            continue;
        }
        let k = grade_of(mi);
        let ii = indices(mi);
        for mk in 0..=full {
            if grade_of(mk) != k {
                continue;
            }
            let p = minor(&ginv, &indices(mk), &ii);
            if p == 0.0 {
                continue;
            }
            let comp = full & !mk;
            z.c[comp] += vi * p * vol / merge_sign(mk, comp);
        }
    }
    Ok(z)
}

/// Scalar `Pf` with `a∧a = Pf · ω∧ω` in dimension 4.
pub fn pfaffian(a: &Form, omega: &Form) -> Result<f64> {
    if a.dim != 4 || omega.dim != 4 {
        return Err(Error::Dimension(a.dim));
    }
    let w = omega.wedge(omega).top();
    if w.abs() < 1e-300 {
        return Err(Error::DegenerateReference);
    }
    Ok(a.wedge(a).top() / w)
}

/// Splits `rho = rho0 + lambda0·ω` with `rho0∧ω = 0` (dimension 4).
pub fn effective_decompose(rho: &Form, omega: &Form) -> Result<(Form, f64)> {
    if rho.dim != 4 || omega.dim != 4 {
        return Err(Error::Dimension(rho.dim));
    }
    let w = omega.wedge(omega).top();
    if w.abs() < 1e-300 {
        return Err(Error::DegenerateReference);
    }
    let lambda = rho.wedge(omega).top() / w;
    Ok((rho.sub(&omega.scale(lambda)), lambda))
}

/// Form whose coefficients are jets over the base coordinates.
#[derive(Debug, Clone)]
pub struct JetForm {
    dim: usize,
    terms: Vec<(usize, Jet)>,
}

impl JetForm {
    pub fn new(dim: usize) -> JetForm {
        check_dim(dim);
        JetForm { dim, terms: Vec::new() }
    }

    /// Adds `coef · dx^{idx}`; indices in any order.
    pub fn add_term(&mut self, idx: &[usize], coef: Jet) {
        if let Some(m) = mask_of(idx) {
            let c = coef.scale(sort_sign(idx));
            match self.terms.iter_mut().find(|(k, _)| *k == m) {
                Some((_, j)) => *j = &*j + &c,
                None => self.terms.push((m, c)),
            }
        }
    }

    /// Exterior derivative; coefficient jets lose one order.
    pub fn d(&self) -> Result<JetForm> {
        let mut out = JetForm::new(self.dim);
        for (m, c) in &self.terms {
            for i in 0..c.dim() {
                if m & (1 << i) != 0 {
                    continue;
                }
                let s = merge_sign(1 << i, *m);
                out.add_mask(m | (1 << i), c.derivative(i)?.scale(s));
            }
        }
        Ok(out)
    }

    fn add_mask(&mut self, m: usize, c: Jet) {
        match self.terms.iter_mut().find(|(k, _)| *k == m) {
            Some((_, j)) => *j = &*j + &c,
            None => self.terms.push((m, c)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&self, o: &JetForm) -> JetForm {
        let mut z = self.clone();
        for (m, c) in &o.terms {
            z.add_mask(*m, c.clone());
        }
        z
    }

    pub fn sub(&self, o: &JetForm) -> JetForm {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> JetForm {
        JetForm { dim: self.dim, terms: self.terms.iter().map(|(m, c)| (*m, c.scale(s))).collect() }
    }

    /// Multiplies every coefficient by the jet `s`.
    pub fn times(&self, s: &Jet) -> JetForm {
        JetForm { dim: self.dim, terms: self.terms.iter().map(|(m, c)| (*m, c * s)).collect() }
    }

    pub fn wedge(&self, o: &JetForm) -> JetForm {
        assert_eq!(self.dim, o.dim, "wedge of different dimensions");
        let mut z = JetForm::new(self.dim);
        for (a, ca) in &self.terms {
            for (b, cb) in &o.terms {
                if a & b != 0 {
                    continue;
                }
                z.add_mask(a | b, (ca * cb).scale(merge_sign(*a, *b)));
            }
        }
        z
    }

    /// Constant terms as a plain form.
    pub fn value(&self) -> Form {
        let mut f = Form::zero(self.dim);
        for (m, c) in &self.terms {
            f.c[*m] += c.value();
        }
        f
    }
}

/// `d` of a jet-valued form field at `point`, from exact first partials.
pub fn numeric_exterior_derivative<F>(field: F, point: &[f64]) -> Result<Form>
where
    F: Fn(&[Jet]) -> Result<JetForm>,
{
    let x = Jet::seed_point(point, 1)?;
    Ok(field(&x)?.d()?.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anticommuting_one_forms() {
        let a = Form::basis(2, &[0], 1.0).wedge(&Form::basis(2, &[1], 1.0));
        let b = Form::basis(2, &[1], 1.0).wedge(&Form::basis(2, &[0], 1.0));
        assert_eq!(a.get(&[0, 1]), 1.0);
        assert_eq!(b.get(&[0, 1]), -1.0);
    }

    #[test]
    fn interior_slot_signs() {
        let a = Form::basis(2, &[0, 1], 1.0);
        assert_eq!(interior(&[1.0, 0.0], &a), Form::basis(2, &[1], 1.0));
        assert_eq!(interior(&[0.0, 1.0], &a), Form::basis(2, &[0], -1.0));
    }

    #[test]
    fn grade_overflow_vanishes() {
        let a = Form::basis(4, &[0, 1, 2], 1.0);
        let b = Form::basis(4, &[1, 3], 1.0);
        assert_eq!(a.wedge(&b).max_abs(), 0.0);
    }

    #[test]
    fn euclidean_star_2d() {
        let g = DMatrix::identity(2, 2);
        let vol = Form::basis(2, &[0, 1], 1.0);
        assert_eq!(hodge_star(&Form::basis(2, &[0], 1.0), &g, &vol).unwrap(), Form::basis(2, &[1], 1.0));
        assert_eq!(hodge_star(&Form::basis(2, &[1], 1.0), &g, &vol).unwrap(), Form::basis(2, &[0], -1.0));
    }

    #[test]
    fn star_in_cylindrical_coordinates() {
        let r = 2.0;
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, r * r]));
        let vol = Form::basis(3, &[0, 1, 2], 1.0);
        let s = hodge_star(&Form::basis(3, &[0], 1.0), &g, &vol).unwrap();
        assert!((s.get(&[1, 2]) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_metric_rejected() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let vol = Form::basis(2, &[0, 1], 1.0);
        assert!(matches!(hodge_star(&Form::basis(2, &[0], 1.0), &g, &vol), Err(Error::DegenerateMetric)));
    }

    #[test]
    fn pfaffian_basics() {
        let mut w = Form::zero(4);
        w.add_term(&[2, 0], 1.0);
        w.add_term(&[3, 1], 1.0);
        assert_eq!(pfaffian(&w, &w).unwrap(), 1.0);
        assert_eq!(pfaffian(&Form::zero(4), &w).unwrap(), 0.0);
        assert!(matches!(pfaffian(&w, &Form::zero(4)), Err(Error::DegenerateReference)));
        let (r0, l) = effective_decompose(&w, &w).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(r0.max_abs(), 0.0);
    }

    #[test]
    fn d_of_x_dy() {
        let d = numeric_exterior_derivative(
            |x| {
                let mut f = JetForm::new(2);
                f.add_term(&[1], x[0].clone());
                Ok(f)
            },
            &[0.4, 0.9],
        )
        .unwrap();
        assert_eq!(d, Form::basis(2, &[0, 1], 1.0));
    }
}
