//! Analytic flows: the built-in catalog plus user expressions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::background::{determinant, invert, Geometry};
use crate::error::{Error, Result};
use crate::expr::{parse_with_params, Env, Expr, Params, Var};
use crate::jet::Jet;

#[derive(Debug, Clone)]
pub enum Source {
    /// Stream function on a 2D geometry.
    Stream(Expr),
    /// Covariant velocity components.
    Velocity(Vec<Expr>),
    /// Stream function and covariant `v₃` on a warped product over a 2D base.
    Reduced { psi: Expr, v3: Expr },
}

#[derive(Debug, Clone)]
pub enum Pressure {
    Expr(Expr),
    /// `p = H'·ψ − ½|v|²` with constant head slope `H'`.
    Bernoulli(f64),
}

/// One sheet of a closed-form Legendre dual, in the dual coordinates (x, y).
#[derive(Debug, Clone)]
pub struct DualSheet {
    pub sheet: i8,
    pub psi: Expr,
}

#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub name: String,
    pub geometry: Geometry,
    pub source: Source,
    pub params: Params,
    pub t: f64,
    pub pressure: Option<Pressure>,
    pub dual: Vec<DualSheet>,
}

/// Jets of a flow at a point, all in the geometry's coordinates.
#[derive(Debug, Clone)]
pub struct FlowJets {
    pub psi: Option<Jet>,
    /// Covariant components `v_i`.
    pub v: Vec<Jet>,
}

pub const CATALOG: [&str; 8] = [
    "larcheveque",
    "moffatt",
    "taylor-green",
    "burgers",
    "abc",
    "hill-interior",
    "hicks-interior",
    "hicks-exterior",
];

/// ASCII spellings accepted for Greek parameter names.
const ALIASES: [(&str, &str); 8] = [
    ("kappa", "κ"),
    ("alpha", "α"),
    ("beta", "β"),
    ("gamma", "γ"),
    ("sigma3", "σ₃"),
    ("zeta3", "ζ₃"),
    ("σ3", "σ₃"),
    ("ζ3", "ζ₃"),
];

pub fn canonical_param(name: &str) -> String {
    ALIASES.iter().find(|(a, _)| *a == name).map(|(_, g)| g.to_string()).unwrap_or_else(|| name.to_string())
}

/// Spherical Bessel-type closed forms of J_{3/2} and J_{5/2}.
pub fn bessel_j32(x: f64) -> f64 {
    (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos())
}

pub fn bessel_j52(x: f64) -> f64 {
    (2.0 / (PI * x)).sqrt() * ((3.0 / (x * x) - 1.0) * x.sin() - 3.0 * x.cos() / x)
}

fn require(params: &Params, names: &[&str]) -> Result<()> {
    for n in names {
        if !params.contains_key(*n) {
            return Err(Error::MissingParameter(n.to_string()));
        }
    }
    Ok(())
}

fn ex(text: &str, params: &[&str]) -> Expr {
    parse_with_params(text, params).expect("catalog expression")
}

fn normalize(params: &Params) -> Params {
    params.iter().map(|(k, v)| (canonical_param(k), *v)).collect()
}

/// Built-in flow by name.
pub fn catalog(name: &str, params: &Params, t: f64) -> Result<FlowSpec> {
    let mut p = normalize(params);
    let flat2 = Geometry::flat(2);
    let spec = |geometry: Geometry, source: Source, p: Params| FlowSpec {
        name: name.to_string(),
        geometry,
        source,
        params: p,
        t,
        pressure: None,
        dual: vec![],
    };
    let s = match name {
        "larcheveque" => {
            require(&p, &["a", "b"])?;
            let mut s = spec(flat2, Source::Stream(ex("0.5*(a*x^2 + b*y^2)", &["a", "b"])), p);
            s.dual = vec![DualSheet { sheet: 0, psi: ex("0.5*(x^2/a + y^2/b)", &["a", "b"]) }];
            s
        }
        "moffatt" => {
            let mut s = spec(flat2, Source::Stream(ex("-(x^2) + 3*y*t + y^3", &[])), p);
            let k = "(2/(3*sqrt(3)))*(y - 3*t)^1.5";
            s.dual = vec![
                DualSheet { sheet: -1, psi: ex(&format!("-0.25*x^2 + {k}"), &[]) },
                DualSheet { sheet: 1, psi: ex(&format!("-0.25*x^2 - {k}"), &[]) },
            ];
            s
        }
        "taylor-green" => {
            require(&p, &["a", "b", "F"])?;
            spec(flat2, Source::Stream(ex("-F*cos(a*x)*cos(b*y)", &["a", "b", "F"])), p)
        }
        "burgers" => {
            let names = ["α", "β", "γ", "σ₃", "ζ₃"];
            require(&p, &names)?;
            let sum = p["α"] + p["β"] + p["γ"];
            let scale = p["α"].abs() + p["β"].abs() + p["γ"].abs();
            if sum.abs() > 1e-9 * scale.max(1.0) {
                return Err(Error::Domain(format!("burgers requires α+β+γ = 0, got {sum}")));
            }
            let v = vec![ex("α*x + (σ₃ - ζ₃)*y", &names), ex("(σ₃ + ζ₃)*x + β*y", &names), ex("γ*z", &names)];
            spec(Geometry::flat(3), Source::Velocity(v), p)
        }
        "abc" => {
            require(&p, &["A", "B"])?;
            let geom = Geometry::warped("flat3", Geometry::flat(2), Arc::new(|x: &[Jet]| Ok(x[0].constant_like(0.0))), "z");
            let psi = ex("A*cos(y) + B*sin(x)", &["A", "B"]);
            let mut s = spec(geom, Source::Reduced { psi: psi.clone(), v3: psi }, p);
            s.pressure = Some(Pressure::Bernoulli(0.0));
            s
        }
        "hill-interior" => {
            let psi = ex("0.75*r^2*(r^2 + z^2 - 1)", &[]);
            let mut s = spec(Geometry::cylindrical(), Source::Reduced { psi, v3: Expr::num(0.0) }, p);
            s.pressure = Some(Pressure::Bernoulli(7.5));
            s
        }
        "hicks-interior" => {
            require(&p, &["κ"])?;
            let k = p["κ"];
            if k <= 0.0 {
                return Err(Error::Domain("hicks-interior needs κ > 0; use hill-interior for κ = 0".into()));
            }
            let b = bessel_j32(k) / (k * bessel_j52(k));
            let c = k.sqrt() / bessel_j52(k);
            p.insert("_b".into(), b);
            p.insert("_c".into(), c);
            let names = ["κ", "_b", "_c"];
            let u = "(κ*sqrt(r^2 + z^2))";
            let psi = ex(&format!("1.5*r^2*(_b - _c*sqrt(2/pi)*(sin({u}) - {u}*cos({u}))/{u}^3)"), &names);
            let v3 = Expr::Bin(crate::expr::BinOp::Mul, Box::new(Expr::Param("κ".into())), Box::new(psi.clone()));
            let mut s = spec(Geometry::cylindrical(), Source::Reduced { psi, v3 }, p);
            s.pressure = Some(Pressure::Bernoulli(1.5 * k * k * b));
            s
        }
        "hicks-exterior" => {
            require(&p, &["κ"])?;
            let psi = ex("0.5*r^2*(1 - 1/(r^2 + z^2)^1.5)", &[]);
            let v3 = Expr::Bin(crate::expr::BinOp::Mul, Box::new(Expr::Param("κ".into())), Box::new(psi.clone()));
            let swirl = p["κ"] != 0.0;
            let mut s = spec(Geometry::cylindrical(), Source::Reduced { psi, v3 }, p);
            if !swirl {
                s.pressure = Some(Pressure::Bernoulli(0.0));
            }
            s
        }
        other => return Err(Error::UnknownFlow(other.to_string())),
    };
    s.validate()?;
    Ok(s)
}

impl FlowSpec {
    /// Flow on an arbitrary geometry; expressions are checked against its coordinates.
    pub fn new(name: &str, geometry: Geometry, source: Source, params: &Params, t: f64) -> Result<FlowSpec> {
        let s = FlowSpec {
            name: name.into(),
            geometry,
            source,
            params: normalize(params),
            t,
            pressure: None,
            dual: vec![],
        };
        s.validate()?;
        Ok(s)
    }

    /// User stream function on flat 2D space.
    pub fn custom_stream(text: &str, params: &Params, t: f64) -> Result<FlowSpec> {
        let p = normalize(params);
        let names: Vec<&str> = p.keys().map(|s| s.as_str()).collect();
        let s = FlowSpec {
            name: "custom".into(),
            geometry: Geometry::flat(2),
            source: Source::Stream(parse_with_params(text, &names)?),
            params: p.clone(),
            t,
            pressure: None,
            dual: vec![],
        };
        s.validate()?;
        Ok(s)
    }

    /// User covariant velocity on flat 2D or 3D space.
    pub fn custom_velocity(components: &[&str], params: &Params, t: f64) -> Result<FlowSpec> {
        let p = normalize(params);
        let names: Vec<&str> = p.keys().map(|s| s.as_str()).collect();
        let n = components.len();
        if !(2..=3).contains(&n) {
            return Err(Error::DimensionMismatch(format!("{n} velocity components")));
        }
        let v = components.iter().map(|c| parse_with_params(c, &names)).collect::<Result<Vec<_>>>()?;
        let s = FlowSpec {
            name: "custom".into(),
            geometry: Geometry::flat(n),
            source: Source::Velocity(v),
            params: p.clone(),
            t,
            pressure: None,
            dual: vec![],
        };
        s.validate()?;
        Ok(s)
    }

    fn base_dim(&self) -> usize {
        match &self.source {
            Source::Reduced { .. } => 2,
            _ => self.geometry.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        let coords: Vec<Option<Var>> =
            self.geometry.coords()[..self.base_dim()].iter().map(|c| Var::from_name(c)).collect();
        let exprs: Vec<&Expr> = match &self.source {
            Source::Stream(e) => vec![e],
            Source::Velocity(v) => v.iter().collect(),
            Source::Reduced { psi, v3 } => vec![psi, v3],
        };
        if let (Source::Stream(_), d) = (&self.source, self.geometry.dim()) {
            if d != 2 {
                return Err(Error::Dimension(d));
            }
        }
        if let Source::Velocity(v) = &self.source {
            if v.len() != self.geometry.dim() {
                return Err(Error::DimensionMismatch("velocity component count".into()));
            }
        }
        for e in exprs.iter().copied().chain(self.pressure_expr()) {
            for v in e.variables() {
                if v != Var::T && !coords.contains(&Some(v)) {
                    return Err(Error::UnknownIdentifier { name: v.name().into(), offset: 0 });
                }
            }
            for p in e.parameters() {
                if !self.params.contains_key(&p) {
                    return Err(Error::MissingParameter(p));
                }
            }
        }
        Ok(())
    }

    fn pressure_expr(&self) -> Option<&Expr> {
        match &self.pressure {
            Some(Pressure::Expr(e)) => Some(e),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn is_stream(&self) -> bool {
        matches!(self.source, Source::Stream(_))
    }

    pub fn is_reduced(&self) -> bool {
        matches!(self.source, Source::Reduced { .. })
    }

    pub fn coord_names(&self) -> Vec<String> {
        self.geometry.coords().to_vec()
    }

    pub(crate) fn eval_expr(&self, e: &Expr, x: &[Jet]) -> Result<Jet> {
        let bound: Vec<(Var, Jet)> = self
            .geometry
            .coords()
            .iter()
            .zip(x)
            .filter_map(|(name, j)| Var::from_name(name).map(|v| (v, j.clone())))
            .collect();
        e.eval(&Env { coords: &bound, t: self.t, params: &self.params })
    }

    /// Stream function on arbitrary coordinate jets.
    pub fn psi_on(&self, x: &[Jet]) -> Result<Jet> {
        match &self.source {
            Source::Stream(e) | Source::Reduced { psi: e, .. } => self.eval_expr(e, x),
            Source::Velocity(_) => Err(Error::Domain("flow has no stream function".into())),
        }
    }

    /// Flow jets of the given order at `point` (one coordinate per axis).
    pub fn jets_at(&self, point: &[f64], order: usize) -> Result<FlowJets> {
        let n = self.dim();
        if point.len() != n {
            return Err(Error::DimensionMismatch(format!("expected {n} coordinates, got {}", point.len())));
        }
        match &self.source {
            Source::Velocity(v) => {
                let x = Jet::seed_point(point, order)?;
                let v = v.iter().map(|e| self.eval_expr(e, &x)).collect::<Result<Vec<_>>>()?;
                Ok(FlowJets { psi: None, v })
            }
            Source::Stream(e) => {
                let xh = Jet::seed_point(point, order + 1)?;
                let psi = self.eval_expr(e, &xh)?;
                let x = Jet::seed_point(point, order)?;
                let v = stream_velocity(&self.geometry, &x, &psi, None)?;
                Ok(FlowJets { psi: Some(psi.truncate(order)), v })
            }
            Source::Reduced { psi, v3 } => {
                let (base, phi) = self.geometry.warp_parts().expect("reduced flows live on warped products");
                let xh = Jet::seed_point(point, order + 1)?;
                let psi = self.eval_expr(psi, &xh)?;
                let x = Jet::seed_point(point, order)?;
                let ph = phi(&x[..2])?;
                let mut v = stream_velocity(base, &x, &psi, Some(&ph))?;
                v.push(self.eval_expr(v3, &x)?);
                Ok(FlowJets { psi: Some(psi.truncate(order)), v })
            }
        }
    }

    /// Pressure jets, when the flow carries a pressure.
    pub fn pressure_at(&self, point: &[f64], order: usize) -> Result<Jet> {
        match &self.pressure {
            None => Err(Error::MissingPressure),
            Some(Pressure::Expr(e)) => self.eval_expr(e, &Jet::seed_point(point, order)?),
            Some(Pressure::Bernoulli(h)) => {
                let fj = self.jets_at(point, order)?;
                let g = self.geometry.metric_at(point, order)?;
                let gi = invert(&g)?;
                let n = self.dim();
                let mut kin = fj.v[0].constant_like(0.0);
                for i in 0..n {
                    for j in 0..n {
                        kin = &kin + &(&gi[i][j] * &(&fj.v[i] * &fj.v[j]));
                    }
                }
                let psi = fj.psi.ok_or(Error::MissingPressure)?;
                Ok(&psi.scale(*h) - &kin.scale(0.5))
            }
        }
    }
}

/// `v_i = −√det(ḡ) e^{−φ} ε_{ij} ḡ^{jk} ∂_kψ` over a 2D base; `x` has the
/// target order and `psi` one order more.
fn stream_velocity(base: &Geometry, x: &[Jet], psi: &Jet, phi: Option<&Jet>) -> Result<Vec<Jet>> {
    let g = base.metric(&x[..2])?;
    let gi = invert(&g)?;
    let det = determinant(&g);
    let mut pre = det.sqrt()?;
    if let Some(ph) = phi {
        pre = &pre * &(-ph).exp();
    }
    let dpsi: Vec<Jet> = (0..2).map(|k| psi.derivative(k)).collect::<Result<_>>()?;
    // ε_{12} = 1
    let up = |j: usize| &(&gi[j][0] * &dpsi[0]) + &(&gi[j][1] * &dpsi[1]);
    let v1 = -(&pre * &up(1));
    let v2 = &pre * &up(0);
    Ok(vec![v1, v2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(kv: &[(&str, f64)]) -> Params {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn abc_velocity_at_origin() {
        let s = catalog("abc", &params(&[("A", 1.5), ("B", 1.0)]), 0.0).unwrap();
        let j = s.jets_at(&[0.0, 0.0, 0.0], 1).unwrap();
        let v: Vec<f64> = j.v.iter().map(|c| c.value()).collect();
        assert!(v[0].abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15 && (v[2] - 1.5).abs() < 1e-15);
        assert!((j.v[2].value() - j.psi.unwrap().value()).abs() < 1e-15);
    }

    #[test]
    fn moffatt_velocity() {
        let s = catalog("moffatt", &Params::new(), 0.0).unwrap();
        let j = s.jets_at(&[1.0, 0.0], 1).unwrap();
        assert!(j.v[0].value().abs() < 1e-15);
        assert!((j.v[1].value() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn hill_velocity() {
        let s = catalog("hill-interior", &Params::new(), 0.0).unwrap();
        let j = s.jets_at(&[0.5, 0.5, 0.0], 1).unwrap();
        assert!((j.v[0].value() + 0.375).abs() < 1e-14);
        assert!((j.v[1].value() + 0.375).abs() < 1e-14);
        assert_eq!(j.v[2].value(), 0.0);
    }

    #[test]
    fn taylor_green_stream() {
        let s = catalog("taylor-green", &params(&[("a", 1.0), ("b", 1.0), ("F", 1.0)]), 0.0).unwrap();
        let j = s.jets_at(&[0.3, 0.4], 0).unwrap();
        assert!((j.psi.unwrap().value() + 0.3f64.cos() * 0.4f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(catalog("nope", &Params::new(), 0.0), Err(Error::UnknownFlow(_))));
        assert!(matches!(catalog("taylor-green", &params(&[("a", 1.0)]), 0.0), Err(Error::MissingParameter(_))));
        let bad = params(&[("alpha", 1.0), ("beta", 1.0), ("gamma", 1.0), ("sigma3", 0.0), ("zeta3", 0.0)]);
        assert!(matches!(catalog("burgers", &bad, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn custom_flows_check_identifiers() {
        assert!(FlowSpec::custom_stream("x*y + w", &Params::new(), 0.0).is_err());
        assert!(FlowSpec::custom_stream("x*y + w", &params(&[("w", 1.0)]), 0.0).is_ok());
        assert!(FlowSpec::custom_stream("x*z", &Params::new(), 0.0).is_err());
    }
}
