//! Local Gauss–Bonnet on two-dimensional pullback metrics: curves, geodesic
//! curvature, area quadrature and the Euler number of disc-like regions.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{Matrix2, Vector2};

use crate::background::{christoffels, values, JetMatrix};
use crate::diagnostics::{kinematics, metric_curvature_oracle, pullback_metric_jets};
use crate::error::{Error, Result};
use crate::flows::FlowSpec;
use crate::jet::Jet;

/// Below this `f` a sampled region point counts as near-singular.
pub const EPS_REGION: f64 = 1e-6;

pub type CurveMap = Arc<dyn Fn(&Jet) -> Result<[Jet; 2]> + Send + Sync>;
type MetricFn = Arc<dyn Fn(&[f64; 2]) -> Result<JetMatrix> + Send + Sync>;

/// A metric field on the plane, evaluated as jets of order 2 in two variables.
#[derive(Clone)]
pub struct MetricField {
    eval: MetricFn,
}

impl MetricField {
    pub fn new(eval: impl Fn(&[f64; 2]) -> Result<JetMatrix> + Send + Sync + 'static) -> MetricField {
        MetricField { eval: Arc::new(eval) }
    }

    pub fn constant(m: Matrix2<f64>) -> MetricField {
        MetricField::new(move |_| {
            let z = Jet::constant(0.0, 2, 2);
            Ok((0..2).map(|i| (0..2).map(|j| z.constant_like(m[(i, j)])).collect()).collect())
        })
    }

    pub fn flat() -> MetricField {
        MetricField::constant(Matrix2::identity())
    }

    /// Conformally flat `e^{2u} δ` with `u` given on jets.
    pub fn conformal(u: impl Fn(&[Jet]) -> Result<Jet> + Send + Sync + 'static) -> MetricField {
        MetricField::new(move |x| {
            let s = Jet::seed_point(x, 2)?;
            let w = u(&s)?.scale(2.0).exp();
            let z = w.constant_like(0.0);
            Ok(vec![vec![w.clone(), z.clone()], vec![z, w]])
        })
    }

    /// The pullback metric of a flow on its two base coordinates.
    pub fn pullback(spec: &FlowSpec) -> Result<MetricField> {
        let s = spec.clone();
        if spec.is_stream() {
            Ok(MetricField::new(move |x| pullback_metric_jets(&s, x, 2)))
        } else if spec.is_reduced() {
            Ok(MetricField::new(move |x| crate::reduction::reduced_pullback_jets(&s, x)))
        } else {
            Err(Error::Dimension(spec.dim()))
        }
    }

    pub fn jets(&self, x: &[f64; 2]) -> Result<JetMatrix> {
        (self.eval)(x)
    }

    pub fn at(&self, x: &[f64; 2]) -> Result<Matrix2<f64>> {
        let m = values(&self.jets(x)?);
        Ok(Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
    }

    fn negated(&self) -> MetricField {
        let inner = self.clone();
        MetricField::new(move |x| Ok(inner.jets(x)?.iter().map(|r| r.iter().map(|c| -c).collect()).collect()))
    }
}

/// Metric value and Christoffel symbols `Γ^k_{ij}` (as `gam[i][j][k]`) at a point.
fn metric_and_gamma(g: &MetricField, x: &[f64; 2]) -> Result<(Matrix2<f64>, [[[f64; 2]; 2]; 2])> {
    let jets = g.jets(x)?;
    let gv = values(&jets);
    let gm = Matrix2::new(gv[(0, 0)], gv[(0, 1)], gv[(1, 0)], gv[(1, 1)]);
    if !gm.iter().all(|v| v.is_finite()) || gm.determinant().abs() <= 1e-300 {
        return Err(Error::DegenerateMetric);
    }
    let gam = christoffels(&jets).map_err(|_| Error::DegenerateMetric)?;
    let mut out = [[[0.0; 2]; 2]; 2];
    for (i, a) in gam.iter().enumerate() {
        for (j, b) in a.iter().enumerate() {
            for (k, c) in b.iter().enumerate() {
                out[i][j][k] = c.value();
            }
        }
    }
    Ok((gm, out))
}

/// One smooth piece `t ∈ [t0, t1]` of a curve.
#[derive(Clone)]
pub struct Piece {
    pub map: CurveMap,
    pub t0: f64,
    pub t1: f64,
}

impl Piece {
    pub fn new(map: impl Fn(&Jet) -> Result<[Jet; 2]> + Send + Sync + 'static, t0: f64, t1: f64) -> Piece {
        Piece { map: Arc::new(map), t0, t1 }
    }

    /// Position, velocity and acceleration at `t`.
    pub fn frame(&self, t: f64) -> Result<([f64; 2], Vector2<f64>, Vector2<f64>)> {
        let tj = Jet::seed_variable(0, t, 1, 2)?;
        let [x, y] = (self.map)(&tj)?;
        Ok(([x.value(), y.value()], Vector2::new(x.d1(0), y.d1(0)), Vector2::new(x.d2(0, 0), y.d2(0, 0))))
    }
}

/// A piecewise smooth curve; consecutive pieces meet at corners.
#[derive(Clone)]
pub struct Curve {
    pub pieces: Vec<Piece>,
    pub closed: bool,
}

impl Curve {
    pub fn smooth(map: impl Fn(&Jet) -> Result<[Jet; 2]> + Send + Sync + 'static, t0: f64, t1: f64, closed: bool) -> Curve {
        Curve { pieces: vec![Piece::new(map, t0, t1)], closed }
    }

    /// Counter-clockwise circle.
    pub fn circle(center: [f64; 2], radius: f64) -> Curve {
        Curve::ellipse(center, radius, radius)
    }

    /// Counter-clockwise axis-aligned ellipse with semi-axes `a`, `b`.
    pub fn ellipse(center: [f64; 2], a: f64, b: f64) -> Curve {
        Curve::smooth(
            move |t| Ok([t.cos().scale(a).add_scalar(center[0]), t.sin().scale(b).add_scalar(center[1])]),
            0.0,
            2.0 * PI,
            true,
        )
    }

    /// Closed polygon through `vertices`, reoriented counter-clockwise.
    pub fn polygon(vertices: &[[f64; 2]]) -> Result<Curve> {
        if vertices.len() < 3 {
            return Err(Error::Domain("a polygon needs at least three vertices".into()));
        }
        let mut v = vertices.to_vec();
        if signed_area(&v) < 0.0 {
            v.reverse();
        }
        let n = v.len();
        let pieces = (0..n)
            .map(|i| {
                let (p, q) = (v[i], v[(i + 1) % n]);
                Piece::new(
                    move |t| Ok([t.scale(q[0] - p[0]).add_scalar(p[0]), t.scale(q[1] - p[1]).add_scalar(p[1])]),
                    0.0,
                    1.0,
                )
            })
            .collect();
        Ok(Curve { pieces, closed: true })
    }

    pub fn start(&self) -> Result<[f64; 2]> {
        let p = &self.pieces[0];
        Ok(p.frame(p.t0)?.0)
    }

    pub fn end(&self) -> Result<[f64; 2]> {
        let p = self.pieces.last().expect("curves have pieces");
        Ok(p.frame(p.t1)?.0)
    }

    /// Exterior angles at the joints, measured in `g`. For a closed curve the
    /// joint between the last and first piece is included.
    pub fn corners(&self, g: &MetricField) -> Result<Vec<(usize, f64)>> {
        let n = self.pieces.len();
        let joints = if self.closed { n } else { n - 1 };
        let mut out = Vec::new();
        for k in 0..joints {
            let a = &self.pieces[k];
            let b = &self.pieces[(k + 1) % n];
            let (x, ua, _) = a.frame(a.t1)?;
            let (_, ub, _) = b.frame(b.t0)?;
            let gm = g.at(&x)?;
            let sq = gm.determinant().abs().sqrt();
            let cross = sq * (ua[0] * ub[1] - ua[1] * ub[0]);
            let dot = (ua.transpose() * gm * ub)[0];
            let phi = cross.atan2(dot);
            if phi.abs() > 1e-12 {
                out.push((k, phi));
            }
        }
        Ok(out)
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>()
}

fn speed(gm: &Matrix2<f64>, u: &Vector2<f64>) -> Result<f64> {
    let s2 = (u.transpose() * gm * u)[0];
    if !(s2 > 0.0) || !s2.is_finite() {
        return Err(Error::NonRiemannianAlongCurve);
    }
    Ok(s2.sqrt())
}

/// Geodesic curvature `√|det g| ε_ij ẏ^i(ÿ^j + Γ^j_kl ẏ^k ẏ^l)/|ẏ|³` of a
/// piece at parameter `t`; for unit-speed curves the denominator is one.
pub fn geodesic_curvature_at(piece: &Piece, t: f64, g: &MetricField) -> Result<f64> {
    let (x, u, a) = piece.frame(t)?;
    let (gm, gam) = metric_and_gamma(g, &x)?;
    let mut acc = a;
    for j in 0..2 {
        for k in 0..2 {
            for l in 0..2 {
                acc[j] += gam[k][l][j] * u[k] * u[l];
            }
        }
    }
    let num = gm.determinant().abs().sqrt() * (u[0] * acc[1] - u[1] * acc[0]);
    let s2 = (u.transpose() * gm * u)[0];
    if s2 == 0.0 {
        return Err(Error::DegenerateMetric);
    }
    Ok(num / s2.abs().powf(1.5))
}

/// Geodesic curvature of an arc-length curve at arc length `s`.
pub fn geodesic_curvature(curve: &Curve, s: f64, g: &MetricField) -> Result<f64> {
    let (k, t) = locate(curve, s)?;
    geodesic_curvature_at(&curve.pieces[k], t, g)
}

fn locate(curve: &Curve, s: f64) -> Result<(usize, f64)> {
    let mut rest = s;
    for (k, p) in curve.pieces.iter().enumerate() {
        let len = p.t1 - p.t0;
        if rest <= len || k + 1 == curve.pieces.len() {
            return Ok((k, p.t0 + rest.clamp(0.0, len)));
        }
        rest -= len;
    }
    Err(Error::Domain("empty curve".into()))
}

fn rule(n: usize) -> GaussLegendre {
    GaussLegendre::new(NonZeroUsize::new(n).expect("positive degree"))
}

/// `∫_a^b f` on `panels` equal panels of a fixed Gauss–Legendre rule.
fn composite(gl: &GaussLegendre, a: f64, b: f64, panels: usize, f: &mut dyn FnMut(f64) -> Result<f64>) -> Result<f64> {
    let h = (b - a) / panels as f64;
    let mut err = None;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        total += gl.integrate(lo, lo + h, |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        });
    }
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// Composite Gauss–Legendre with panel doubling until successive values agree.
fn integrate(a: f64, b: f64, tol: f64, what: &str, f: &mut dyn FnMut(f64) -> Result<f64>) -> Result<f64> {
    let gl = rule(10);
    let mut prev = composite(&gl, a, b, 1, f)?;
    let mut panels = 2;
    while panels <= 1024 {
        let cur = composite(&gl, a, b, panels, f)?;
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
        panels *= 2;
    }
    Err(Error::QuadratureFailure(what.into()))
}

/// Length of each piece under `g`.
pub fn curve_lengths(curve: &Curve, g: &MetricField) -> Result<Vec<f64>> {
    curve
        .pieces
        .iter()
        .map(|p| {
            integrate(p.t0, p.t1, 1e-13, "curve length", &mut |t| {
                let (x, u, _) = p.frame(t)?;
                speed(&g.at(&x)?, &u)
            })
        })
        .collect()
}

/// Cumulative-length table of one piece, refined until each cell is resolved.
struct LengthTable {
    t: Vec<f64>,
    l: Vec<f64>,
}

fn length_table(p: &Piece, g: &MetricField) -> Result<LengthTable> {
    let gl = rule(10);
    let sigma = |t: f64| -> Result<f64> {
        let (x, u, _) = p.frame(t)?;
        speed(&g.at(&x)?, &u)
    };
    let cell = |a: f64, b: f64| -> Result<f64> { composite(&gl, a, b, 1, &mut |t| sigma(t)) };
    let mut stack = Vec::new();
    let cells = 32;
    let h = (p.t1 - p.t0) / cells as f64;
    for k in (0..cells).rev() {
        stack.push((p.t0 + h * k as f64, p.t0 + h * (k + 1) as f64, 0));
    }
    let mut t = vec![p.t0];
    let mut l = vec![0.0];
    while let Some((a, b, depth)) = stack.pop() {
        let whole = cell(a, b)?;
        let m = 0.5 * (a + b);
        let halves = cell(a, m)? + cell(m, b)?;
        if (whole - halves).abs() > 1e-14 * halves.abs().max(1e-3) && depth < 20 {
            stack.push((m, b, depth + 1));
            stack.push((a, m, depth + 1));
            continue;
        }
        if (whole - halves).abs() > 1e-10 * halves.abs().max(1e-3) {
            return Err(Error::QuadratureFailure("arc length".into()));
        }
        t.push(b);
        l.push(l.last().unwrap() + halves);
    }
    Ok(LengthTable { t, l })
}

impl LengthTable {
    fn total(&self) -> f64 {
        *self.l.last().unwrap()
    }

    /// Parameter with cumulative length `s`, by Newton within a cell.
    fn invert(&self, s: f64, p: &Piece, g: &MetricField) -> Result<f64> {
        let k = match self.l.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(k) => return Ok(self.t[k]),
            Err(k) => k.clamp(1, self.l.len() - 1) - 1,
        };
        let (ta, tb) = (self.t[k], self.t[k + 1]);
        let gl = rule(10);
        let sigma = |t: f64| -> Result<f64> {
            let (x, u, _) = p.frame(t)?;
            speed(&g.at(&x)?, &u)
        };
        let frac = (s - self.l[k]) / (self.l[k + 1] - self.l[k]);
        let mut t = ta + frac * (tb - ta);
        for _ in 0..50 {
            let r = self.l[k] + composite(&gl, ta, t, 1, &mut |x| sigma(x))? - s;
            let dt = r / sigma(t)?;
            t -= dt;
            if dt.abs() <= 1e-15 * (tb - ta).abs().max(1.0) {
                break;
            }
        }
        Ok(t)
    }
}

/// Arc-length reparametrization under `g`. The new pieces are exact through
/// second derivatives, which is all the curvature formulas use.
pub fn arclength_reparam(curve: &Curve, g: &MetricField) -> Result<Curve> {
    let mut pieces = Vec::new();
    for p in &curve.pieces {
        let table = Arc::new(length_table(p, g)?);
        let total = table.total();
        let (p2, g2) = (p.clone(), g.clone());
        let map = move |s: &Jet| -> Result<[Jet; 2]> {
            let s0 = s.value();
            let t0 = table.invert(s0, &p2, &g2)?;
            let (x, u, a) = p2.frame(t0)?;
            let jets = g2.jets(&x)?;
            let gm = values(&jets);
            let gm = Matrix2::new(gm[(0, 0)], gm[(0, 1)], gm[(1, 0)], gm[(1, 1)]);
            let sig = speed(&gm, &u)?;
            // σ' = (2 ÿ·g·ẏ + ẏ^k ẏ·∂_k g·ẏ) / 2σ
            let mut dg = 0.0;
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        dg += u[k] * u[i] * u[j] * jets[i][j].d1(k);
                    }
                }
            }
            let dsig = (2.0 * (a.transpose() * gm * u)[0] + dg) / (2.0 * sig);
            let t1 = 1.0 / sig;
            let t2 = -dsig / sig.powi(3);
            let ds = s.add_scalar(-s0);
            let t = &(&ds.scale(t1) + &(&ds * &ds).scale(0.5 * t2)).add_scalar(t0);
            (p2.map)(t)
        };
        pieces.push(Piece::new(map, 0.0, total));
    }
    Ok(Curve { pieces, closed: curve.closed })
}

/// `∮ κ ds` over all pieces, in the invariant form `∫ κ |ẏ|_g dt`.
pub fn total_geodesic_curvature(curve: &Curve, g: &MetricField) -> Result<f64> {
    let mut total = 0.0;
    for p in &curve.pieces {
        total += integrate(p.t0, p.t1, 1e-11, "boundary term", &mut |t| {
            let (x, u, _) = p.frame(t)?;
            let sp = speed(&g.at(&x)?, &u)?;
            Ok(geodesic_curvature_at(p, t, g)? * sp)
        })?;
    }
    Ok(total)
}

/// A region star-shaped about `center`, bounded by `r = radius(θ)`.
#[derive(Clone)]
pub struct Region {
    pub boundary: Vec<Curve>,
    pub center: [f64; 2],
    radius: Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>,
}

impl Region {
    pub fn disc(center: [f64; 2], radius: f64) -> Region {
        Region { boundary: vec![Curve::circle(center, radius)], center, radius: Arc::new(move |_| Ok(radius)) }
    }

    /// The polygon with the given vertices, star-shaped about their centroid.
    pub fn polygon(vertices: &[[f64; 2]]) -> Result<Region> {
        let curve = Curve::polygon(vertices)?;
        let n = vertices.len() as f64;
        let c = [vertices.iter().map(|v| v[0]).sum::<f64>() / n, vertices.iter().map(|v| v[1]).sum::<f64>() / n];
        let v = vertices.to_vec();
        let radius = move |th: f64| -> Result<f64> {
            let d = [th.cos(), th.sin()];
            let m = v.len();
            let mut best: Option<f64> = None;
            for i in 0..m {
                let (p, q) = (v[i], v[(i + 1) % m]);
                let e = [q[0] - p[0], q[1] - p[1]];
                let det = d[0] * (-e[1]) + e[0] * d[1];
                if det.abs() < 1e-300 {
                    continue;
                }
                let w = [p[0] - c[0], p[1] - c[1]];
                let r = (w[0] * (-e[1]) + e[0] * w[1]) / det;
                let s = (d[0] * w[1] - d[1] * w[0]) / det;
                if r > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
                    best = Some(best.map_or(r, |b: f64| b.min(r)));
                }
            }
            best.ok_or_else(|| Error::Domain("polygon is not star-shaped about its centroid".into()))
        };
        Ok(Region { boundary: vec![curve], center: c, radius: Arc::new(radius) })
    }

    /// The component of `ψ < level` (or `> level`) containing `seed`, traced
    /// along rays from the seed.
    pub fn level_set(spec: &FlowSpec, level: f64, seed: [f64; 2]) -> Result<Region> {
        let s = Arc::new(spec.clone());
        let psi_at = {
            let s = s.clone();
            move |x: &[f64; 2]| -> Result<f64> { Ok(s.psi_on(&Jet::seed_point(x, 0)?)?.value()) }
        };
        let inside = psi_at(&seed)? - level;
        if inside == 0.0 {
            return Err(Error::Domain("seed lies on the level set".into()));
        }
        let ray = {
            let psi_at = psi_at.clone();
            move |th: f64| -> Result<f64> {
                let d = [th.cos(), th.sin()];
                let at = |r: f64| psi_at(&[seed[0] + r * d[0], seed[1] + r * d[1]]).map(|v| v - level);
                let h = 1e-2;
                let mut lo = 0.0;
                let mut r = h;
                while r < 50.0 {
                    if at(r)? * inside <= 0.0 {
                        break;
                    }
                    lo = r;
                    r += h;
                }
                if r >= 50.0 {
                    return Err(Error::Domain("level set does not enclose the seed".into()));
                }
                let mut hi = r;
                for _ in 0..200 {
                    let m = 0.5 * (lo + hi);
                    if at(m)? * inside > 0.0 {
                        lo = m;
                    } else {
                        hi = m;
                    }
                    if hi - lo <= 1e-15 * hi {
                        break;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        };
        let ray = Arc::new(ray);
        let map = {
            let ray = ray.clone();
            let s = s.clone();
            move |th: &Jet| -> Result<[Jet; 2]> {
                let t0 = th.value();
                let r0 = ray(t0)?;
                let d0 = [t0.cos(), t0.sin()];
                let p0 = [seed[0] + r0 * d0[0], seed[1] + r0 * d0[1]];
                let grad = s.psi_on(&Jet::seed_point(&p0, 1)?)?;
                let dr = grad.d1(0) * d0[0] + grad.d1(1) * d0[1];
                if dr == 0.0 {
                    return Err(Error::Domain("level set tangent to a ray".into()));
                }
                let (c, sn) = (th.cos(), th.sin());
                let mut r = th.constant_like(r0);
                for _ in 0..=th.order() + 1 {
                    let x = [(&r * &c).add_scalar(seed[0]), (&r * &sn).add_scalar(seed[1])];
                    let f = s.psi_on(&x)?.add_scalar(-level);
                    r = &r - &f.scale(1.0 / dr);
                }
                Ok([(&r * &c).add_scalar(seed[0]), (&r * &sn).add_scalar(seed[1])])
            }
        };
        let curve = Curve::smooth(map, 0.0, 2.0 * PI, true);
        Ok(Region { boundary: vec![curve], center: seed, radius: Arc::new(move |th| ray(th)) })
    }

    pub fn radius(&self, theta: f64) -> Result<f64> {
        (self.radius)(theta)
    }

    pub fn contains(&self, p: &[f64; 2]) -> Result<bool> {
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        Ok(dx.hypot(dy) < self.radius(dy.atan2(dx))?)
    }

    /// Points on a polar grid covering the region, including its boundary.
    pub fn sample(&self, n_theta: usize, n_r: usize) -> Result<Vec<[f64; 2]>> {
        let mut out = vec![self.center];
        for a in 0..n_theta {
            let th = 2.0 * PI * a as f64 / n_theta as f64;
            let rho = self.radius(th)?;
            for b in 1..=n_r {
                let r = rho * b as f64 / n_r as f64;
                out.push([self.center[0] + r * th.cos(), self.center[1] + r * th.sin()]);
            }
        }
        Ok(out)
    }
}

/// `½ ∫ R dvol_g` over the region in polar coordinates about its center.
pub fn area_term(region: &Region, g: &MetricField, tol: f64) -> Result<f64> {
    let c = region.center;
    let integrand = |x: &[f64; 2]| -> Result<f64> {
        let jets = g.jets(x)?;
        let det = values(&jets).determinant();
        Ok(0.5 * metric_curvature_oracle(&jets)? * det.abs().sqrt())
    };
    let inner = |th: f64| -> Result<f64> {
        let rho = region.radius(th)?;
        let (ct, st) = (th.cos(), th.sin());
        integrate(0.0, rho, tol * 1e-2, "area term (radial)", &mut |r| {
            Ok(integrand(&[c[0] + r * ct, c[1] + r * st])? * r)
        })
    };
    // periodic trapezoid in θ, doubling and reusing nodes
    let mut n = 16;
    let mut sum: f64 = (0..n).map(|k| inner(2.0 * PI * k as f64 / n as f64)).collect::<Result<Vec<_>>>()?.iter().sum();
    let mut prev = sum * 2.0 * PI / n as f64;
    while n <= 4096 {
        let extra: f64 = (0..n)
            .map(|k| inner(2.0 * PI * (k as f64 + 0.5) / n as f64))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum();
        sum += extra;
        n *= 2;
        let cur = sum * 2.0 * PI / n as f64;
        if (cur - prev).abs() <= tol * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureFailure("area term (angular)".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerBreakdown {
    pub chi: f64,
    pub area_term: f64,
    pub boundary_term: f64,
    pub corner_term: f64,
}

/// `(½∫R dvol + Σ∮κ ds + Σφ)/2π` for a region under an arbitrary metric,
/// which must be definite at every sampled point.
pub fn euler_number_with(region: &Region, g: &MetricField) -> Result<EulerBreakdown> {
    let mut sign = 0.0;
    for p in region.sample(24, 6)? {
        let m = g.at(&p)?;
        let (d, tr) = (m.determinant(), m.trace());
        if !(d > 0.0) || tr == 0.0 {
            return Err(Error::MixedSignature);
        }
        if sign == 0.0 {
            sign = tr.signum();
        } else if tr.signum() != sign {
            return Err(Error::MixedSignature);
        }
    }
    let g = if sign < 0.0 { g.negated() } else { g.clone() };
    let area_term = area_term(region, &g, 1e-9)?;
    let mut boundary_term = 0.0;
    let mut corner_term = 0.0;
    for c in &region.boundary {
        boundary_term += total_geodesic_curvature(c, &g)?;
        corner_term += c.corners(&g)?.iter().map(|(_, a)| a).sum::<f64>();
    }
    let chi = (area_term + boundary_term + corner_term) / (2.0 * PI);
    Ok(EulerBreakdown { chi, area_term, boundary_term, corner_term })
}

/// Euler number of a region under the pullback metric of a flow; the region
/// must lie where `f > 0`.
pub fn euler_number(region: &Region, spec: &FlowSpec) -> Result<EulerBreakdown> {
    for p in region.sample(24, 6)? {
        let f = if spec.is_reduced() { crate::reduction::fhat3(spec, &p)? } else { kinematics(spec, &p)?.f };
        if !(f > EPS_REGION) {
            return Err(Error::MixedSignature);
        }
    }
    euler_number_with(region, &MetricField::pullback(spec)?)
}
