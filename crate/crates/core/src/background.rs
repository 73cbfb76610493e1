//! Background Riemannian geometries and the jet-based curvature machinery
//! shared by every metric in the crate.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet;

pub type JetMatrix = Vec<Vec<Jet>>;

/// `gamma[i][j][k] = Γ_{ij}{}^k`.
pub type Christoffels = Vec<Vec<Vec<Jet>>>;

/// Scalar field of the base coordinates, evaluated on jets.
pub type ScalarFn = Arc<dyn Fn(&[Jet]) -> Result<Jet> + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Flat,
    Sphere(f64),
    Warped { base: Box<Geometry>, phi: ScalarFn },
}

#[derive(Clone)]
pub struct Geometry {
    name: String,
    dim: usize,
    coords: Vec<String>,
    kind: Kind,
}

impl fmt::Debug for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Geometry({}, dim {})", self.name, self.dim)
    }
}

fn default_coords(dim: usize) -> Vec<String> {
    ["x", "y", "z"][..dim].iter().map(|s| s.to_string()).collect()
}

impl Geometry {
    pub fn flat(dim: usize) -> Geometry {
        assert!((1..=3).contains(&dim));
        Geometry { name: format!("flat{dim}"), dim, coords: default_coords(dim), kind: Kind::Flat }
    }

    /// Round sphere `ρ²(dx² + sin²x dy²)`.
    pub fn sphere(radius: f64) -> Geometry {
        Geometry { name: "sphere".into(), dim: 2, coords: default_coords(2), kind: Kind::Sphere(radius) }
    }

    /// `base + e^{2φ} dx_{m+1}²` with φ a function of the base coordinates.
    pub fn warped(name: &str, base: Geometry, phi: ScalarFn, extra_coord: &str) -> Geometry {
        let mut coords = base.coords.clone();
        coords.push(extra_coord.to_string());
        Geometry { name: name.into(), dim: base.dim + 1, coords, kind: Kind::Warped { base: Box::new(base), phi } }
    }

    /// Euclidean space in coordinates (r, z, θ): `dr² + dz² + r² dθ²`.
    pub fn cylindrical() -> Geometry {
        let base = Geometry { name: "meridian".into(), dim: 2, coords: vec!["r".into(), "z".into()], kind: Kind::Flat };
        Geometry::warped("cylindrical", base, Arc::new(|x: &[Jet]| x[0].log()), "theta")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn is_flat_cartesian(&self) -> bool {
        matches!(self.kind, Kind::Flat)
    }

    /// The base geometry and warp of a warped product.
    pub fn warp_parts(&self) -> Option<(&Geometry, &ScalarFn)> {
        match &self.kind {
            Kind::Warped { base, phi } => Some((base, phi)),
            _ => None,
        }
    }

    /// Metric components as jets; `x` supplies one coordinate jet per axis.
    pub fn metric(&self, x: &[Jet]) -> Result<JetMatrix> {
        if x.len() < self.dim {
            return Err(Error::DimensionMismatch("too few coordinates".into()));
        }
        let z = x[0].constant_like(0.0);
        let one = x[0].constant_like(1.0);
        let n = self.dim;
        let mut g = vec![vec![z.clone(); n]; n];
        match &self.kind {
            Kind::Flat => {
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = one.clone();
                }
            }
            Kind::Sphere(rho) => {
                let s = x[0].sin();
                g[0][0] = one.scale(rho * rho);
                g[1][1] = (&s * &s).scale(rho * rho);
            }
            Kind::Warped { base, phi } => {
                let m = base.dim;
                let gb = base.metric(&x[..m])?;
                for i in 0..m {
                    for j in 0..m {
                        g[i][j] = gb[i][j].clone();
                    }
                }
                g[m][m] = phi(&x[..m])?.scale(2.0).exp();
            }
        }
        Ok(g)
    }

    /// Metric jets of the given order at a plain point.
    pub fn metric_at(&self, point: &[f64], order: usize) -> Result<JetMatrix> {
        self.metric(&Jet::seed_point(&point[..self.dim], order)?)
    }

    pub fn christoffels_at(&self, point: &[f64], order: usize) -> Result<Christoffels> {
        christoffels(&self.metric_at(point, order + 1)?)
    }

    pub fn curvature_at(&self, point: &[f64], order: usize) -> Result<Curvature> {
        curvature(&self.metric_at(point, order + 2)?)
    }
}

pub fn zero_matrix(n: usize, like: &Jet) -> JetMatrix {
    vec![vec![like.constant_like(0.0); n]; n]
}

pub fn values(m: &JetMatrix) -> nalgebra::DMatrix<f64> {
    let n = m.len();
    nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j].value())
}

pub fn truncate_matrix(m: &JetMatrix, order: usize) -> JetMatrix {
    m.iter().map(|r| r.iter().map(|j| j.truncate(order)).collect()).collect()
}

pub fn transpose(m: &JetMatrix) -> JetMatrix {
    let n = m.len();
    (0..n).map(|i| (0..n).map(|j| m[j][i].clone()).collect()).collect()
}

pub fn mat_mul(a: &JetMatrix, b: &JetMatrix) -> JetMatrix {
    let n = a.len();
    let mut out = zero_matrix(n, &a[0][0]);
    for i in 0..n {
        for j in 0..n {
            let mut s = a[i][0].constant_like(0.0);
            for k in 0..n {
                s = &s + &(&a[i][k] * &b[k][j]);
            }
            out[i][j] = s;
        }
    }
    out
}

/// Inverse of a matrix of jets by Gauss–Jordan elimination.
pub fn invert(m: &JetMatrix) -> Result<JetMatrix> {
    let n = m.len();
    let vals = values(m);
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 || vals.determinant().abs() <= 1e-13 * scale.powi(n as i32) {
        return Err(Error::DegenerateMetric);
    }
    let mut a = m.clone();
    let like = &m[0][0];
    let mut inv = zero_matrix(n, like);
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = like.constant_like(1.0);
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].value().abs().partial_cmp(&a[q][col].value().abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip().map_err(|_| Error::DegenerateMetric)?;
        for k in 0..n {
            a[col][k] = &a[col][k] * &r;
            inv[col][k] = &inv[col][k] * &r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.max_abs() == 0.0 {
                continue;
            }
            for k in 0..n {
                a[row][k] = &a[row][k] - &(&f * &a[col][k]);
                inv[row][k] = &inv[row][k] - &(&f * &inv[col][k]);
            }
        }
    }
    Ok(inv)
}

/// Determinant of a small matrix of jets by cofactor expansion.
pub fn determinant(m: &JetMatrix) -> Jet {
    let n = m.len();
    match n {
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        _ => {
            let mut acc = m[0][0].constant_like(0.0);
            for c in 0..n {
                let minor: JetMatrix = (1..n)
                    .map(|r| (0..n).filter(|&k| k != c).map(|k| m[r][k].clone()).collect())
                    .collect();
                let t = &m[0][c] * &determinant(&minor);
                acc = if c % 2 == 0 { &acc + &t } else { &acc - &t };
            }
            acc
        }
    }
}

/// Levi-Civita connection of a metric given by jets; output loses one order.
pub fn christoffels(g: &JetMatrix) -> Result<Christoffels> {
    let n = g.len();
    let order = g[0][0].order();
    if order == 0 {
        return Err(Error::OrderExceeded);
    }
    let ginv: JetMatrix = invert(g)?.iter().map(|r| r.iter().map(|j| j.truncate(order - 1)).collect()).collect();
    let dg: Vec<JetMatrix> = (0..n)
        .map(|l| {
            g.iter()
                .map(|row| row.iter().map(|e| e.derivative(l)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let z = ginv[0][0].constant_like(0.0);
    let mut gam = vec![vec![vec![z.clone(); n]; n]; n];
    for i in 0..n {
        for j in i..n {
            // lowered symbol Γ_{ijl}
            let low: Vec<Jet> = (0..n).map(|l| (&dg[i][j][l] + &dg[j][i][l] - &dg[l][i][j]).scale(0.5)).collect();
            for k in 0..n {
                let mut s = z.clone();
                for (l, lo) in low.iter().enumerate() {
                    s = &s + &(&ginv[k][l] * lo);
                }
                gam[i][j][k] = s.clone();
                gam[j][i][k] = s;
            }
        }
    }
    Ok(gam)
}

/// Riemann, Ricci and scalar curvature as jets (two orders below the metric).
pub struct Curvature {
    /// `riemann[i][j][k][l] = R_{ijk}{}^l`
    pub riemann: Vec<Vec<Vec<Vec<Jet>>>>,
    /// `ricci[i][j] = R_{kij}{}^k`
    pub ricci: JetMatrix,
    pub scalar: Jet,
    pub ginv: JetMatrix,
}

pub fn curvature(g: &JetMatrix) -> Result<Curvature> {
    let n = g.len();
    let order = g[0][0].order();
    if order < 2 {
        return Err(Error::OrderExceeded);
    }
    let gam = christoffels(g)?;
    let o = order - 2;
    let dgam: Vec<Christoffels> = (0..n)
        .map(|a| {
            gam.iter()
                .map(|x| x.iter().map(|y| y.iter().map(|e| e.derivative(a)).collect()).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let gt: Christoffels =
        gam.iter().map(|x| x.iter().map(|y| y.iter().map(|e| e.truncate(o)).collect()).collect()).collect();
    let z = gt[0][0][0].constant_like(0.0);
    let mut riem = vec![vec![vec![vec![z.clone(); n]; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    let mut s = &dgam[i][j][k][l] - &dgam[j][i][k][l];
                    for m in 0..n {
                        s = &s - &(&gt[i][k][m] * &gt[j][m][l]);
                        s = &s + &(&gt[j][k][m] * &gt[i][m][l]);
                    }
                    riem[i][j][k][l] = s;
                }
            }
        }
    }
    let mut ric = zero_matrix(n, &z);
    for i in 0..n {
        for j in 0..n {
            let mut s = z.clone();
            for k in 0..n {
                s = &s + &riem[k][i][j][k];
            }
            ric[i][j] = s;
        }
    }
    let ginv: JetMatrix = invert(g)?.iter().map(|r| r.iter().map(|j| j.truncate(o)).collect()).collect();
    let mut sc = z.clone();
    for i in 0..n {
        for j in 0..n {
            sc = &sc + &(&ginv[i][j] * &ric[i][j]);
        }
    }
    Ok(Curvature { riemann: riem, ricci: ric, scalar: sc, ginv })
}

/// Scalar curvature at the expansion point of a metric given to order ≥ 2.
pub fn scalar_curvature(g: &JetMatrix) -> Result<f64> {
    let g2: JetMatrix = g.iter().map(|r| r.iter().map(|j| j.truncate(2)).collect()).collect();
    Ok(curvature(&g2)?.scalar.value())
}

/// Tensor with jet components; `slots[a]` is true for a covariant index.
/// Components are stored row-major in the index order.
#[derive(Debug, Clone)]
pub struct Tensor {
    pub n: usize,
    pub slots: Vec<bool>,
    pub comps: Vec<Jet>,
}

impl Tensor {
    pub fn scalar(j: Jet) -> Tensor {
        Tensor { n: j.dim(), slots: vec![], comps: vec![j] }
    }

    pub fn covector(c: Vec<Jet>) -> Tensor {
        Tensor { n: c.len(), slots: vec![true], comps: c }
    }

    pub fn from_matrix(m: &JetMatrix, slots: [bool; 2]) -> Tensor {
        let n = m.len();
        Tensor { n, slots: slots.to_vec(), comps: m.iter().flatten().cloned().collect() }
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.flat(idx)]
    }

    fn unflat(&self, mut f: usize) -> Vec<usize> {
        let mut idx = vec![0; self.rank()];
        for a in (0..self.rank()).rev() {
            idx[a] = f % self.n;
            f /= self.n;
        }
        idx
    }

    pub fn to_matrix(&self) -> JetMatrix {
        assert_eq!(self.rank(), 2);
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(&[i, j]).clone()).collect()).collect()
    }

    pub fn truncate(&self, order: usize) -> Tensor {
        Tensor { n: self.n, slots: self.slots.clone(), comps: self.comps.iter().map(|c| c.truncate(order)).collect() }
    }
}

/// `∇_i T`: the new covariant index is placed first; the result loses one order.
pub fn covariant_derivative(t: &Tensor, gamma: &Christoffels) -> Result<Tensor> {
    let n = t.n;
    let order = t.comps[0].order();
    if order == 0 {
        return Err(Error::OrderExceeded);
    }
    let o = order - 1;
    let mut slots = vec![true];
    slots.extend(&t.slots);
    let mut out = Vec::with_capacity(n * t.comps.len());
    for i in 0..n {
        for f in 0..t.comps.len() {
            let idx = t.unflat(f);
            let mut s = t.comps[f].derivative(i)?;
            for (a, &cov) in t.slots.iter().enumerate() {
                for m in 0..n {
                    let mut j = idx.clone();
                    j[a] = m;
                    let tm = t.get(&j).truncate(o);
                    if cov {
                        s = &s - &(&gamma[i][idx[a]][m].truncate(o) * &tm);
                    } else {
                        s = &s + &(&gamma[i][m][idx[a]].truncate(o) * &tm);
                    }
                }
            }
            out.push(s);
        }
    }
    Ok(Tensor { n, slots, comps: out })
}
