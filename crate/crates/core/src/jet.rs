//! Truncated multivariate Taylor series.
//!
//! A `Jet` of dimension `d` and order `n` stores the normalized Taylor
//! coefficients `c_k = ∂^k u / k!` for every multi-index `k` with `|k| ≤ n`.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 6;
pub const MAX_ORDER: usize = 4;

/// Smallest divisor constant term accepted by `div` and `recip`.
pub const EPS_DIV: f64 = 1e-300;

type Mono = [u8; MAX_DIM];

struct Layout {
    monos: Vec<Mono>,
    // (i, j, k): coefficient k receives c_i * c_j
    mul: Vec<(u16, u16, u16)>,
    // per axis: for every monomial of the order-1 layout, (source index, factor)
    deriv: Vec<Vec<(u16, f64)>>,
}

fn degree(m: &Mono) -> usize {
    m.iter().map(|&e| e as usize).sum()
}

fn monomials(dim: usize, order: usize) -> Vec<Mono> {
    let mut out = Vec::new();
    for deg in 0..=order {
        let mut cur = [0u8; MAX_DIM];
        fill(dim, 0, deg, &mut cur, &mut out);
    }
    out
}

fn fill(dim: usize, axis: usize, left: usize, cur: &mut Mono, out: &mut Vec<Mono>) {
    if axis + 1 == dim {
        cur[axis] = left as u8;
        out.push(*cur);
        cur[axis] = 0;
        return;
    }
    for e in (0..=left).rev() {
        cur[axis] = e as u8;
        fill(dim, axis + 1, left - e, cur, out);
    }
    cur[axis] = 0;
}

fn find(monos: &[Mono], m: &Mono) -> Option<usize> {
    monos.iter().position(|x| x == m)
}

impl Layout {
    fn build(dim: usize, order: usize) -> Layout {
        let monos = monomials(dim, order);
        let mut mul = Vec::new();
        for (i, a) in monos.iter().enumerate() {
            for (j, b) in monos.iter().enumerate() {
                if degree(a) + degree(b) > order {
                    continue;
                }
                let mut s = [0u8; MAX_DIM];
                for t in 0..MAX_DIM {
                    s[t] = a[t] + b[t];
                }
                let k = find(&monos, &s).unwrap();
                mul.push((i as u16, j as u16, k as u16));
            }
        }
        let mut deriv = Vec::new();
        if order > 0 {
            let lower = monomials(dim, order - 1);
            for axis in 0..dim {
                let mut table = Vec::with_capacity(lower.len());
                for m in &lower {
                    let mut up = *m;
                    up[axis] += 1;
                    let src = find(&monos, &up).unwrap();
                    table.push((src as u16, up[axis] as f64));
                }
                deriv.push(table);
            }
        }
        Layout { monos, mul, deriv }
    }
}

fn layout(dim: usize, order: usize) -> &'static Layout {
    static TABLES: OnceLock<Vec<Layout>> = OnceLock::new();
    let all = TABLES.get_or_init(|| {
        let mut v = Vec::new();
        for d in 1..=MAX_DIM {
            for n in 0..=MAX_ORDER {
                v.push(Layout::build(d, n));
            }
        }
        v
    });
    &all[(dim - 1) * (MAX_ORDER + 1) + order]
}

/// Number of coefficients of a jet with the given shape.
pub fn coeff_count(dim: usize, order: usize) -> usize {
    layout(dim, order).monos.len()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    dim: usize,
    order: usize,
    c: Vec<f64>,
}

fn check_shape(dim: usize, order: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::DimensionMismatch(format!("jet dimension {dim} not in 1..={MAX_DIM}")));
    }
    if order > MAX_ORDER {
        return Err(Error::OrderExceeded);
    }
    Ok(())
}

impl Jet {
    pub fn constant(value: f64, dim: usize, order: usize) -> Jet {
        check_shape(dim, order).expect("invalid jet shape");
        let mut c = vec![0.0; coeff_count(dim, order)];
        c[0] = value;
        Jet { dim, order, c }
    }

    /// Coordinate jet `x_index` expanded about `value`.
    pub fn seed_variable(index: usize, value: f64, dim: usize, order: usize) -> Result<Jet> {
        check_shape(dim, order)?;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        let mut j = Jet::constant(value, dim, order);
        if order > 0 {
            j.c[1 + index] = 1.0;
        }
        Ok(j)
    }

    /// Seeds a full point: one coordinate jet per component.
    pub fn seed_point(point: &[f64], order: usize) -> Result<Vec<Jet>> {
        let d = point.len();
        (0..d).map(|i| Jet::seed_variable(i, point[i], d, order)).collect()
    }

    pub fn from_coeffs(dim: usize, order: usize, coeffs: Vec<f64>) -> Result<Jet> {
        check_shape(dim, order)?;
        if coeffs.len() != coeff_count(dim, order) {
            return Err(Error::DimensionMismatch("coefficient count".into()));
        }
        Ok(Jet { dim, order, c: coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Multi-indices in storage order.
    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        layout(self.dim, self.order)
            .monos
            .iter()
            .map(|m| m[..self.dim].iter().map(|&e| e as usize).collect())
            .collect()
    }

    fn index_of(&self, k: &[usize]) -> Result<usize> {
        if k.len() != self.dim {
            return Err(Error::DimensionMismatch("multi-index length".into()));
        }
        if k.iter().sum::<usize>() > self.order {
            return Err(Error::OrderExceeded);
        }
        let mut m = [0u8; MAX_DIM];
        for (t, &e) in k.iter().enumerate() {
            m[t] = e as u8;
        }
        Ok(find(&layout(self.dim, self.order).monos, &m).unwrap())
    }

    /// Normalized coefficient of the monomial `k`.
    pub fn coeff(&self, k: &[usize]) -> Result<f64> {
        Ok(self.c[self.index_of(k)?])
    }

    /// Partial derivative `∂^k` at the expansion point.
    pub fn extract_partial(&self, k: &[usize]) -> Result<f64> {
        let c = self.coeff(k)?;
        let fact: f64 = k.iter().map(|&e| (1..=e).product::<usize>() as f64).product();
        Ok(c * fact)
    }

    /// First derivative along `i`.
    pub fn d1(&self, i: usize) -> f64 {
        self.c[1 + i]
    }

    /// Second derivative along `i`, `j`.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let mut k = vec![0usize; self.dim];
        k[i] += 1;
        k[j] += 1;
        self.extract_partial(&k).expect("order >= 2 required")
    }

    /// Exact partial derivative as a jet of one lower order.
    pub fn derivative(&self, axis: usize) -> Result<Jet> {
        if axis >= self.dim {
            return Err(Error::IndexOutOfRange { index: axis, dim: self.dim });
        }
        if self.order == 0 {
            return Err(Error::OrderExceeded);
        }
        let table = &layout(self.dim, self.order).deriv[axis];
        let c = table.iter().map(|&(s, f)| f * self.c[s as usize]).collect();
        Ok(Jet { dim: self.dim, order: self.order - 1, c })
    }

    /// Drops all terms above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        let n = coeff_count(self.dim, order);
        Jet { dim: self.dim, order, c: self.c[..n].to_vec() }
    }

    /// Reinterprets this jet in `new_dim` variables, axis `i` mapping to `axes[i]`.
    pub fn embed(&self, new_dim: usize, axes: &[usize]) -> Result<Jet> {
        check_shape(new_dim, self.order)?;
        if axes.len() != self.dim || axes.iter().any(|&a| a >= new_dim) {
            return Err(Error::DimensionMismatch("embedding axes".into()));
        }
        let src = layout(self.dim, self.order);
        let dst = layout(new_dim, self.order);
        let mut c = vec![0.0; dst.monos.len()];
        for (i, m) in src.monos.iter().enumerate() {
            let mut t = [0u8; MAX_DIM];
            for (a, &e) in m[..self.dim].iter().enumerate() {
                t[axes[a]] += e;
            }
            c[find(&dst.monos, &t).unwrap()] += self.c[i];
        }
        Ok(Jet { dim: new_dim, order: self.order, c })
    }

    fn same_shape(&self, o: &Jet) {
        assert!(
            self.dim == o.dim && self.order == o.order,
            "jet shape mismatch: ({}, {}) vs ({}, {})",
            self.dim,
            self.order,
            o.dim,
            o.order
        );
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { dim: self.dim, order: self.order, c: self.c.iter().map(|v| v * s).collect() }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    pub fn constant_like(&self, value: f64) -> Jet {
        Jet::constant(value, self.dim, self.order)
    }

    fn mul_ref(&self, o: &Jet) -> Jet {
        self.same_shape(o);
        let lay = layout(self.dim, self.order);
        let mut c = vec![0.0; self.c.len()];
        for &(i, j, k) in &lay.mul {
            c[k as usize] += self.c[i as usize] * o.c[j as usize];
        }
        Jet { dim: self.dim, order: self.order, c }
    }

    /// Evaluates `Σ d_k/k! h^k` with `h` the nonconstant part and `d_k` the
    /// derivatives of a scalar function at the constant term.
    fn compose(&self, d: &[f64]) -> Jet {
        let n = self.order;
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut fact = 1.0;
        let mut coef = vec![0.0; n + 1];
        for k in 0..=n {
            if k > 0 {
                fact *= k as f64;
            }
            coef[k] = d[k] / fact;
        }
        let mut r = self.constant_like(coef[n]);
        for k in (0..n).rev() {
            r = r.mul_ref(&h);
            r.c[0] += coef[k];
        }
        r
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.c[0];
        if a.abs() < EPS_DIV {
            return Err(Error::DivisionBySingularJet);
        }
        let mut d = vec![0.0; self.order + 1];
        let mut v = 1.0 / a;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = v;
            v *= -((k + 1) as f64) / a;
        }
        Ok(self.compose(&d))
    }

    pub fn div(&self, o: &Jet) -> Result<Jet> {
        self.same_shape(o);
        Ok(self.mul_ref(&o.recip()?))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        self.compose(&cycle4(&[s, c, -s, -c], self.order))
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        self.compose(&cycle4(&[c, -s, -c, s], self.order))
    }

    pub fn tan(&self) -> Result<Jet> {
        if self.c[0].cos().abs() < 1e-300 {
            return Err(Error::Domain("tan at a pole".into()));
        }
        let t = self.c[0].tan();
        let u = 1.0 + t * t;
        let d = [t, u, 2.0 * t * u, 2.0 * u * (1.0 + 3.0 * t * t), 8.0 * t * u * (2.0 + 3.0 * t * t)];
        Ok(self.compose(&d))
    }

    pub fn exp(&self) -> Jet {
        let e = self.c[0].exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn log(&self) -> Result<Jet> {
        let a = self.c[0];
        if !(a > 0.0) {
            return Err(Error::Domain(format!("log of nonpositive value {a}")));
        }
        let mut d = vec![a.ln()];
        let mut v = 1.0 / a;
        for k in 1..=self.order {
            d.push(v);
            v *= -(k as f64) / a;
        }
        Ok(self.compose(&d))
    }

    /// `log|u|`, analytic wherever the constant term is nonzero.
    pub fn log_abs(&self) -> Result<Jet> {
        if self.c[0] < 0.0 {
            (-self).log()
        } else {
            self.log()
        }
    }

    pub fn sqrt(&self) -> Result<Jet> {
        if !(self.c[0] > 0.0) {
            return Err(Error::Domain(format!("sqrt of nonpositive value {}", self.c[0])));
        }
        Ok(self.powf_positive(0.5))
    }

    fn powf_positive(&self, p: f64) -> Jet {
        let a = self.c[0];
        let mut d = Vec::with_capacity(self.order + 1);
        let mut coef = 1.0;
        for k in 0..=self.order {
            d.push(coef * a.powf(p - k as f64));
            coef *= p - k as f64;
        }
        self.compose(&d)
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = self.constant_like(1.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_ref(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul_ref(&sq);
            }
        }
        Ok(acc)
    }

    /// Real power; integral exponents are exact for any sign of the base.
    pub fn pow(&self, p: f64) -> Result<Jet> {
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            return self.powi(p as i32);
        }
        if !(self.c[0] > 0.0) {
            return Err(Error::Domain(format!("non-integer power of nonpositive value {}", self.c[0])));
        }
        Ok(self.powf_positive(p))
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        self.compose(&cycle4(&[s, c, s, c], self.order))
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        self.compose(&cycle4(&[c, s, c, s], self.order))
    }

    pub fn atan(&self) -> Jet {
        let x = self.c[0];
        let u = 1.0 + x * x;
        let d = [
            x.atan(),
            1.0 / u,
            -2.0 * x / (u * u),
            (6.0 * x * x - 2.0) / (u * u * u),
            24.0 * x * (1.0 - x * x) / (u * u * u * u),
        ];
        self.compose(&d)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn cycle4(base: &[f64; 4], order: usize) -> Vec<f64> {
    (0..=order).map(|k| base[k % 4]).collect()
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        self.same_shape(o);
        Jet { dim: self.dim, order: self.order, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        self.same_shape(o);
        Jet { dim: self.dim, order: self.order, c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        self.mul_ref(o)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                (&self).$m(&o)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                (&self).$m(o)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$m(&o)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a>(it: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut it = it.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, j| &acc + j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_has_unit_slope() {
        let j = Jet::seed_variable(0, 2.0, 2, 2).unwrap();
        assert_eq!(j.coeff(&[0, 0]).unwrap(), 2.0);
        assert_eq!(j.coeff(&[1, 0]).unwrap(), 1.0);
        assert_eq!(j.coeff(&[0, 1]).unwrap(), 0.0);
        assert_eq!(j.coeff(&[2, 0]).unwrap(), 0.0);
        let k = Jet::seed_variable(1, 0.0, 2, 4).unwrap();
        assert_eq!(k.coeff(&[0, 1]).unwrap(), 1.0);
        assert!(Jet::seed_variable(2, 0.0, 2, 2).is_err());
    }

    #[test]
    fn square_of_x() {
        let x = Jet::seed_variable(0, 1.0, 1, 2).unwrap();
        let y = &x * &x;
        assert_eq!(y.coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn sin_maclaurin() {
        let x = Jet::seed_variable(0, 0.0, 1, 4).unwrap();
        let s = x.sin();
        let d: Vec<f64> = (0..=4).map(|k| s.extract_partial(&[k]).unwrap()).collect();
        for (a, b) in d.iter().zip([0.0, 1.0, 0.0, -1.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn x2y_partial() {
        let p = Jet::seed_point(&[1.0, 1.0], 3).unwrap();
        let f = &(&p[0] * &p[0]) * &p[1];
        assert_eq!(f.extract_partial(&[2, 1]).unwrap(), 2.0);
        assert_eq!(f.extract_partial(&[0, 0]).unwrap(), 1.0);
        assert!(matches!(f.extract_partial(&[2, 2]), Err(Error::OrderExceeded)));
    }

    #[test]
    fn division_guard() {
        let z = Jet::constant(0.0, 2, 2);
        let one = Jet::constant(1.0, 2, 2);
        assert!(matches!(one.div(&z), Err(Error::DivisionBySingularJet)));
        assert!(matches!(z.log(), Err(Error::Domain(_))));
        assert!(matches!(z.sqrt(), Err(Error::Domain(_))));
    }

    #[test]
    fn derivative_lowers_order() {
        let p = Jet::seed_point(&[0.3, -0.7], 4).unwrap();
        let f = (&p[0] * &p[1]).sin();
        let fx = f.derivative(0).unwrap();
        assert_eq!(fx.order(), 3);
        let fxy = fx.derivative(1).unwrap();
        assert!((fxy.value() - f.d2(0, 1)).abs() < 1e-14);
    }

    #[test]
    fn embed_preserves_partials() {
        let p = Jet::seed_point(&[0.3, -0.7], 3).unwrap();
        let f = (&p[0] * &p[1]).exp();
        let g = f.embed(4, &[2, 0]).unwrap();
        assert!((g.extract_partial(&[1, 0, 2, 0]).unwrap() - f.extract_partial(&[2, 1]).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn integer_power_of_negative_base() {
        let x = Jet::seed_variable(0, -2.0, 1, 3).unwrap();
        let c = x.pow(3.0).unwrap();
        assert_eq!(c.value(), -8.0);
        assert_eq!(c.extract_partial(&[1]).unwrap(), 12.0);
        assert!(x.pow(1.5).is_err());
    }
}
