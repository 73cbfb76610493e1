#![allow(dead_code)]

use flowgeom::expr::Params;
use flowgeom::flows::{catalog, FlowSpec};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn params(kv: &[(&str, f64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn burgers() -> FlowSpec {
    catalog("burgers", &params(&[("alpha", 0.3), ("beta", 0.5), ("gamma", -0.8), ("sigma3", 0.2), ("zeta3", 0.7)]), 0.0).unwrap()
}

/// Every catalog flow with representative parameters.
pub fn catalog_flows() -> Vec<FlowSpec> {
    vec![
        catalog("larcheveque", &params(&[("a", 1.0), ("b", 2.0)]), 0.0).unwrap(),
        catalog("moffatt", &Params::new(), -1.0).unwrap(),
        catalog("taylor-green", &params(&[("a", 1.0), ("b", 1.0), ("F", 1.0)]), 0.0).unwrap(),
        burgers(),
        catalog("abc", &params(&[("A", 1.5), ("B", 1.0)]), 0.0).unwrap(),
        catalog("hill-interior", &Params::new(), 0.0).unwrap(),
        catalog("hicks-interior", &params(&[("kappa", 10.0)]), 0.0).unwrap(),
        catalog("hicks-exterior", &params(&[("kappa", 0.0)]), 0.0).unwrap(),
    ]
}

/// A random point in a region where the flow is defined.
pub fn sample_point(spec: &FlowSpec, r: &mut StdRng) -> Vec<f64> {
    match spec.name.as_str() {
        "moffatt" => {
            let y: f64 = r.gen_range(0.1..2.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
            vec![r.gen_range(-2.0..2.0), y]
        }
        "abc" => vec![r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)],
        "hill-interior" | "hicks-interior" => loop {
            let p = vec![r.gen_range(0.1..0.95), r.gen_range(-0.95..0.95), r.gen_range(0.0..6.0)];
            if p[0] * p[0] + p[1] * p[1] < 0.9 {
                return p;
            }
        },
        "hicks-exterior" => loop {
            let p = vec![r.gen_range(0.1..2.5), r.gen_range(-2.5..2.5), r.gen_range(0.0..6.0)];
            if p[0] * p[0] + p[1] * p[1] > 1.2 {
                return p;
            }
        },
        _ => (0..spec.dim()).map(|_| r.gen_range(-1.5..1.5)).collect(),
    }
}

pub fn velocity(spec: &FlowSpec, x: &[f64]) -> Vec<f64> {
    spec.jets_at(x, 0).unwrap().v.iter().map(|c| c.value()).collect()
}
