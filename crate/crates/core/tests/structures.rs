mod common;

use std::sync::Arc;

use common::*;
use flowgeom::background::Geometry;
use flowgeom::diagnostics::fhat_phase_jet;
use flowgeom::exterior::{pfaffian, Form};
use flowgeom::expr::{parse_expression, Params};
use flowgeom::flows::{catalog, FlowSpec, Source};
use flowgeom::structures::*;
use flowgeom::{Error, Jet};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn phase_point(spec: &FlowSpec, r: &mut rand::rngs::StdRng) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let x = sample_point(spec, r);
    let mut q = velocity(spec, &x);
    for c in q.iter_mut() {
        *c += r.gen_range(-0.5..0.5);
    }
    let fh = fhat_phase_jet(spec, &x, &q, 0).ok()?.value();
    (fh.abs() > 1e-3).then_some((x, q, fh))
}

#[test]
fn structure_identities_on_catalog_flows() {
    let mut r = rng(11);
    for spec in catalog_flows() {
        let mut n = 0;
        while n < 20 {
            let Some((x, q, fh)) = phase_point(&spec, &mut r) else { continue };
            let p = build_structure(&spec, &x, &q, fh).unwrap();
            let res = verify_structure(&p, &spec);
            let scale = p.metric_coords().unwrap().abs().max().max(1.0);
            for (k, v) in &res {
                let tol = if k.starts_with("metric") { 1e-10 * scale } else { 1e-8 * fh.abs().max(1.0) };
                assert!(*v < tol, "{} at {x:?}: {k} = {v}", spec.name);
            }
            n += 1;
        }
    }
}

#[test]
fn closure_on_curved_and_flat_backgrounds() {
    let psi = parse_expression("cos(x) + 0.3*sin(x)^2*cos(y)").unwrap();
    let s = FlowSpec::new("sphere", Geometry::sphere(1.3), Source::Stream(psi), &Params::new(), 0.0).unwrap();
    let (x, q) = ([0.9, 0.4], [0.3, -0.2]);
    let fh = fhat_phase_jet(&s, &x, &q, 0).unwrap().value();
    let p = build_structure(&s, &x, &q, fh).unwrap();
    let res = verify_structure(&p, &s);
    assert!(res["d_alpha"] < 1e-12 && res["d_varpi"] < 1e-12);
    let flat = FlowSpec::new("flat", Geometry::flat(2), Source::Stream(parse_expression("x*y").unwrap()), &Params::new(), 0.0).unwrap();
    let pf = build_structure(&flat, &x, &q, -1.0).unwrap();
    assert!(verify_structure(&pf, &flat)["d_alpha"] < 1e-14);
}

#[test]
fn moffatt_pfaffian_is_twelve() {
    let s = catalog("moffatt", &Params::new(), -1.0).unwrap();
    for x0 in [-1.0, 0.0, 0.7] {
        let x = [x0, -1.0];
        let q = velocity(&s, &x);
        let fh = fhat_phase_jet(&s, &x, &q, 0).unwrap().value();
        assert!((fh - 12.0).abs() < 1e-12);
        let p = build_structure(&s, &x, &q, fh).unwrap();
        assert!((pfaffian(&p.alpha, &p.omega).unwrap() - 12.0).abs() < 1e-12);
    }
}

#[test]
fn pullback_of_omega_is_vorticity() {
    let s = catalog("moffatt", &Params::new(), -1.0).unwrap();
    // ψ = −x² − 3y + y³: Δψ = −2 + 6y
    for (x, zeta) in [([0.4, 1.0 / 3.0], 0.0), ([0.1, 1.0], 4.0), ([-0.3, -0.5], -5.0)] {
        let w = pullback_omega(&s, &x).unwrap();
        assert!((w.get(&[0, 1]) - zeta).abs() < 1e-12, "{x:?}");
    }
}

#[test]
fn pullback_residuals_vanish_with_exact_pressures() {
    let mut r = rng(5);
    let abc = catalog("abc", &params(&[("A", 1.5), ("B", 1.0)]), 0.0).unwrap();
    let hill = catalog("hill-interior", &Params::new(), 0.0).unwrap();
    let hicks = catalog("hicks-interior", &params(&[("kappa", 3.0)]), 0.0).unwrap();
    for s in [&abc, &hill, &hicks] {
        for _ in 0..20 {
            let x = sample_point(s, &mut r);
            let res = pullback_forms(s, &x).unwrap();
            assert!(res.varpi.abs() < 1e-9 && res.alpha.abs() < 1e-9, "{} {x:?} {res:?}", s.name);
        }
    }
}

#[test]
fn abc_pressure_laplacian() {
    let (a, b) = (1.5, 1.0);
    let s = catalog("abc", &params(&[("A", a), ("B", b)]), 0.0).unwrap();
    let mut r = rng(9);
    for _ in 0..20 {
        let x = sample_point(&s, &mut r);
        let p = s.pressure_at(&x, 2).unwrap();
        let lap = p.d2(0, 0) + p.d2(1, 1) + p.d2(2, 2);
        assert!((lap - 2.0 * a * b * x[0].sin() * x[1].cos()).abs() < 1e-12);
    }
}

#[test]
fn hill_pressure_laplacian() {
    let s = catalog("hill-interior", &Params::new(), 0.0).unwrap();
    let mut r = rng(4);
    for _ in 0..20 {
        let x = sample_point(&s, &mut r);
        let p = s.pressure_at(&x, 2).unwrap();
        let half_lap = 0.5 * (p.d2(0, 0) + p.d2(1, 1) + p.d1(0) / x[0]);
        let (rr, z) = (x[0], x[1]);
        let expect = 2.25 * (4.0 * rr * rr - 3.0 * z * z);
        assert!((half_lap - expect).abs() < 1e-12 * expect.abs().max(1.0), "{half_lap} {expect}");
        assert!(pullback_forms(&s, &x).unwrap().alpha.abs() < 1e-9);
    }
}

#[test]
fn perturbed_velocity_violates_constraints() {
    let good = FlowSpec::custom_velocity(&["sin(y)", "cos(x)"], &Params::new(), 0.0).unwrap();
    let bad = FlowSpec::custom_velocity(&["sin(y) + 0.1*x", "cos(x)"], &Params::new(), 0.0).unwrap();
    let x = [0.3, 0.2];
    let rg = pullback_forms(&good, &x).unwrap();
    let rb = pullback_forms(&bad, &x).unwrap();
    assert!(rg.varpi.abs() < 1e-15 && rg.alpha.abs() < 1e-15);
    assert!((rb.varpi - 0.1).abs() < 1e-14);
    // ½(div v)² is what remains of α
    assert!((rb.alpha - 0.005).abs() < 1e-14);
}

#[test]
fn three_d_structure_restricts_to_two_d() {
    let sphere_line = Geometry::warped("sphere-line", Geometry::sphere(1.3), Arc::new(|x: &[Jet]| Ok(x[0].constant_like(0.0))), "z");
    let mut r = rng(3);
    for _ in 0..20 {
        let x = [r.gen_range(0.3..2.8), r.gen_range(-3.0..3.0)];
        let q = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
        let f = r.gen_range(0.2..3.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
        let p2 = build_structure_on(&Geometry::sphere(1.3), &x, &q, f).unwrap();
        let p3 = build_structure_on(&sphere_line, &[x[0], x[1], 0.4], &[q[0], q[1], r.gen_range(-1.0..1.0)], f).unwrap();
        let idx = [0, 1, 3, 4];
        let j2 = p2.j_alt.unwrap();
        for a in 0..4 {
            for b in 0..4 {
                assert!((p3.j[(idx[a], idx[b])] - j2[(a, b)]).abs() < 1e-9);
            }
        }
        // the restricted block is invariant
        for a in [2, 5] {
            for b in idx {
                assert!(p3.j[(a, b)].abs() < 1e-9);
            }
        }
    }
}

#[test]
fn construct_k_from_flat_structure() {
    let p = build_structure_on(&Geometry::flat(2), &[0.1, 0.2], &[0.3, -0.4], 2.0).unwrap();
    let jw = j_contract(&p.j, &p.omega);
    assert!((&jw.sub(&p.alpha.scale(1.0 / 2f64.sqrt()))).max_abs() < 1e-12);
    let k = construct_k(&p.omega, &jw).unwrap();
    assert!(k.wedge(&p.omega).max_abs() < 1e-12);
    assert!(k.wedge(&jw).max_abs() < 1e-12);
    assert!(k.wedge(&k).top().abs() > 1e-8);
    // seeding with K̂ plus multiples of ω and Jω gives back K̂
    let seed = p.k.add(&p.omega.scale(0.7)).add(&jw.scale(-1.3));
    let k2 = construct_k_from_seed(&p.omega, &jw, &seed).unwrap();
    let ratio = k2.wedge(&k2).top() / p.k.wedge(&p.k).top();
    assert!((k2.sub(&p.k.scale(ratio.sqrt()))).max_abs() < 1e-12 || (k2.add(&p.k.scale(ratio.sqrt()))).max_abs() < 1e-12);
    assert_eq!(construct_k_from_seed(&p.omega, &jw, &p.omega.scale(2.0)).unwrap_err(), Error::SeedDependent);
}

#[test]
fn flat_constant_structures() {
    let g = Geometry::flat(2);
    let id = DMatrix::<f64>::identity(4, 4);
    let e = build_structure_on(&g, &[0.0; 2], &[0.0; 2], 1.0).unwrap();
    assert!((&e.j * &e.j + &id).abs().max() < 1e-14);
    let h = build_structure_on(&g, &[0.0; 2], &[0.0; 2], -1.0).unwrap();
    assert!((&h.j * &h.j - &id).abs().max() < 1e-14);
    let mut r = rng(1);
    let q: Vec<f64> = (0..3).map(|_| r.gen_range(-2.0..2.0)).collect();
    let p = build_structure_on(&Geometry::flat(3), &[0.0; 3], &q, 2.0).unwrap();
    assert!((&p.j * &p.j + DMatrix::<f64>::identity(6, 6)).abs().max() < 1e-9);
    assert_eq!(p.theta, Form::zero(6).add(&Form::basis(6, &[0], q[0])).add(&Form::basis(6, &[1], q[1])).add(&Form::basis(6, &[2], q[2])));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn j_squares_to_minus_sign_of_fhat(
        x in prop::collection::vec(0.3f64..2.8, 3),
        q in prop::collection::vec(-2.0f64..2.0, 3),
        f in 0.05f64..5.0,
        flip in any::<bool>(),
    ) {
        let f = if flip { -f } else { f };
        let geoms = [
            Geometry::sphere(0.8),
            Geometry::warped("sphere-line", Geometry::sphere(0.8), Arc::new(|x: &[Jet]| Ok(x[0].constant_like(0.0))), "z"),
            Geometry::cylindrical(),
        ];
        for g in &geoms {
            let m = g.dim();
            let p = build_structure_on(g, &x[..m], &q[..m], f).unwrap();
            let n = 2 * m;
            let target = DMatrix::<f64>::identity(n, n) * (-f.signum());
            prop_assert!((&p.j * &p.j - &target).abs().max() < 1e-9);
            if let Some(ja) = &p.j_alt {
                prop_assert!((ja * ja - &target).abs().max() < 1e-9);
            }
        }
    }

    #[test]
    fn pfaffian_equals_fhat_flat(x in prop::collection::vec(-3.0f64..3.0, 2), q in prop::collection::vec(-3.0f64..3.0, 2), f in -10.0f64..10.0) {
        prop_assume!(f.abs() > 1e-3);
        let p = build_structure_on(&Geometry::flat(2), &x, &q, f).unwrap();
        let pf = pfaffian(&p.alpha, &p.omega).unwrap();
        prop_assert!((pf - f).abs() < 1e-10 * f.abs());
    }
}
