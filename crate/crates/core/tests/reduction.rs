mod common;

use common::*;
use flowgeom::background::{invert, values};
use flowgeom::diagnostics::{kinematics, traces, EPS_SING};
use flowgeom::expr::{parse_expression, Params};
use flowgeom::flows::{catalog, FlowSpec, Pressure, Source};
use flowgeom::reduction::*;
use flowgeom::Error;
use std::f64::consts::PI;

fn hill() -> FlowSpec {
    catalog("hill-interior", &Params::new(), 0.0).unwrap()
}

fn abc() -> FlowSpec {
    catalog("abc", &params(&[("A", 1.5), ("B", 1.0)]), 0.0).unwrap()
}

fn hicks() -> FlowSpec {
    catalog("hicks-interior", &params(&[("kappa", 10.0)]), 0.0).unwrap()
}

const HILL_P: &str = "5.625*r^2*(r^2 + z^2 - 1) - 0.5*((1.5*r*z)^2 + (1.5*(2*r^2 + z^2 - 1))^2)";

fn hill_with_swirl(v3: &str) -> FlowSpec {
    let h = hill();
    let psi = parse_expression("0.75*r^2*(r^2 + z^2 - 1)").unwrap();
    let mut s = FlowSpec::new(
        "hill-swirl",
        h.geometry.clone(),
        Source::Reduced { psi, v3: parse_expression(v3).unwrap() },
        &Params::new(),
        0.0,
    )
    .unwrap();
    s.pressure = Some(Pressure::Expr(parse_expression(HILL_P).unwrap()));
    s
}

/// `½Δp` on the full three-dimensional geometry.
fn half_laplacian_3d(spec: &FlowSpec, x: &[f64]) -> f64 {
    let p = spec.pressure_at(x, 2).unwrap();
    let gi = values(&invert(&spec.geometry.metric_at(x, 0).unwrap()).unwrap());
    let gam = spec.geometry.christoffels_at(x, 0).unwrap();
    let mut s = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            let mut h = p.d2(a, b);
            for c in 0..3 {
                h -= gam[a][b][c].value() * p.d1(c);
            }
            s += gi[(a, b)] * h;
        }
    }
    0.5 * s
}

fn points(spec: &FlowSpec, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n).map(|_| sample_point(spec, &mut r)).collect()
}

#[test]
fn h_vanishes_without_warp() {
    let s = abc();
    for x in points(&s, 10, 1) {
        assert_eq!(h_plus_minus(&s, &x).unwrap(), (0.0, 0.0));
    }
}

#[test]
fn hill_h_plus_is_radial_pressure_gradient() {
    let s = hill();
    for x in points(&s, 10, 2) {
        let p = s.pressure_at(&x, 1).unwrap();
        let (hp, _) = h_plus_minus(&s, &x).unwrap();
        let expect = p.d1(0) / (2.0 * x[0]);
        assert!((hp - expect).abs() < 1e-12 * expect.abs().max(1.0), "{hp} {expect}");
    }
}

#[test]
fn h_branches_differ_by_gradient_terms() {
    let s = hicks();
    for x in points(&s, 10, 3) {
        let (hp, hm) = h_plus_minus(&s, &x).unwrap();
        let v: Vec<f64> = s.jets_at(&x, 0).unwrap().v.iter().map(|c| c.value()).collect();
        let r = x[0];
        // ∂φ = (1/r, 0), e^{−2φ} = 1/r²
        let expect = -(v[0] / r).powi(2) - v[2] * v[2] / (r * r) * (1.0 / (r * r));
        assert!((hp - hm - expect).abs() < 1e-10 * expect.abs().max(1.0), "{} {expect}", hp - hm);
    }
}

#[test]
fn missing_pressure_is_reported() {
    let s = catalog("hicks-exterior", &params(&[("kappa", 2.0)]), 0.0).unwrap();
    let x = [1.2, 0.8, 0.0];
    assert_eq!(h_plus_minus(&s, &x).unwrap_err(), Error::MissingPressure);
    assert_eq!(reduced_metrics(&s, &x, EPS_SING).unwrap_err(), Error::MissingPressure);
    let res = reduced_constraint_residuals(&s, &x).unwrap();
    assert!(res.divergence.abs() < 1e-12 && res.pressure.is_none());
    assert!(reduced_traces(&s, &x).unwrap().f3_check.is_nan());
}

#[test]
fn constraint_residuals_vanish_on_catalog_reductions() {
    for s in [abc(), hill(), hicks(), catalog("hicks-exterior", &params(&[("kappa", 0.0)]), 0.0).unwrap()] {
        for x in points(&s, 20, 4) {
            let r = reduced_constraint_residuals(&s, &x).unwrap();
            let scale = half_laplacian_3d(&s, &x).abs().max(1.0);
            assert!(r.divergence.abs() < 1e-10, "{} div {}", s.name, r.divergence);
            assert!(r.pressure.unwrap().abs() < 1e-9 * scale, "{} at {x:?}: {}", s.name, r.pressure.unwrap());
        }
    }
}

#[test]
fn swirl_perturbation_only_breaks_the_pressure_equation() {
    let base = hill_with_swirl("0");
    let pert = hill_with_swirl("0.3*r^2 + 0.1*z");
    for x in points(&hill(), 10, 5) {
        let a = reduced_constraint_residuals(&base, &x).unwrap();
        let b = reduced_constraint_residuals(&pert, &x).unwrap();
        assert!(a.pressure.unwrap().abs() < 1e-9);
        assert_eq!(a.divergence, b.divergence);
        assert!(b.pressure.unwrap().abs() > 1e-3);
    }
}

#[test]
fn hill_reduced_metrics_at_reference_point() {
    let m = reduced_metrics(&hill(), &[0.5, 0.0], EPS_SING).unwrap();
    assert!((m.fhat - 2.25).abs() < 1e-12);
    let g = &m.pullback.matrix;
    assert!((g[(0, 0)] - 11.25).abs() < 1e-12 && (g[(1, 1)] - 2.8125).abs() < 1e-12 && g[(0, 1)].abs() < 1e-12);
    assert!(m.form_mismatch() < 1e-10);
    let ph = &m.phase.matrix;
    assert!((ph[(0, 0)] - 2.25).abs() < 1e-12 && (ph[(2, 2)] - 1.0).abs() < 1e-15);
}

#[test]
fn hill_pullback_matches_closed_form_everywhere() {
    let s = hill();
    for x in points(&s, 20, 6) {
        let (r, z) = (x[0], x[1]);
        let f = 2.25 * (4.0 * r * r - 3.0 * z * z);
        assert!((fhat3(&s, &x).unwrap() - f).abs() < 1e-11);
        let Ok(m) = reduced_metrics(&s, &x, EPS_SING) else { continue };
        let g = &m.pullback.matrix;
        let c = 2.25;
        let e = [[c * (20.0 * r * r - 2.0 * z * z), c * 9.0 * r * z], [c * 9.0 * r * z, c * (5.0 * r * r + z * z)]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - e[i][j]).abs() < 1e-10, "{i}{j} {} {}", g[(i, j)], e[i][j]);
            }
        }
        let ev = flowgeom::diagnostics::sym_eigen2(g[(0, 0)], g[(0, 1)], g[(1, 1)]);
        let sig = (r * r + z * z).sqrt();
        let root = 3.0 * sig * (25.0 * r * r + z * z).sqrt();
        let mut want = [1.125 * (25.0 * r * r - z * z + root), 1.125 * (25.0 * r * r - z * z - root)];
        let mut got = ev;
        want.sort_by(f64::total_cmp);
        got.sort_by(f64::total_cmp);
        assert!((got[0] - want[0]).abs() < 1e-10 && (got[1] - want[1]).abs() < 1e-10);
    }
}

#[test]
fn abc_reduced_metrics_at_reference_point() {
    let m = reduced_metrics(&abc(), &[PI / 2.0, 0.0], EPS_SING).unwrap();
    let g = &m.pullback.matrix;
    assert!((g[(0, 0)] - 2.5).abs() < 1e-12 && (g[(1, 1)] - 3.75).abs() < 1e-12 && g[(0, 1)].abs() < 1e-12);
    assert!((m.fhat - 1.5).abs() < 1e-12);
}

#[test]
fn metric_forms_agree_on_catalog_reductions() {
    for s in [abc(), hill(), hicks()] {
        for x in points(&s, 20, 7) {
            let Ok(m) = reduced_metrics(&s, &x, EPS_SING) else { continue };
            let scale = m.pullback.matrix.abs().max().max(1.0);
            assert!(m.form_mismatch() < 1e-10 * scale, "{} at {x:?}: {}", s.name, m.form_mismatch());
        }
    }
}

#[test]
fn t_tensor_vanishes_without_warp() {
    let s = abc();
    for x in points(&s, 10, 8) {
        assert_eq!(t_tensor(&s, &x).unwrap().abs().max(), 0.0);
    }
}

#[test]
fn reduced_curvatures_at_reference_points() {
    let c = reduced_curvatures(&abc(), &[PI / 2.0, 0.0], EPS_SING).unwrap();
    assert!(rel(c.rhat, 4.0 / 3.0) < 1e-10, "{}", c.rhat);
    assert!(rel(c.r, 0.32) < 1e-8, "{}", c.r);
    let c = reduced_curvatures(&hill(), &[0.5, 0.0], EPS_SING).unwrap();
    assert!(rel(c.rhat, 56.0 / 9.0) < 1e-10, "{}", c.rhat);
    // scalar curvature of (9/4)[[20r²−2z², 9rz], [9rz, 5r²+z²]] at (½, 0)
    assert!(rel(c.r, 224.0 / 225.0) < 1e-8, "{}", c.r);
}

#[test]
fn reduced_curvatures_match_closed_forms() {
    let mut seen = 0;
    let s = hill();
    for x in points(&s, 10, 9) {
        let (r, z) = (x[0], x[1]);
        let Ok(c) = reduced_curvatures(&s, &x, 1e-6) else { continue };
        seen += 1;
        let d = 4.0 * r * r - 3.0 * z * z;
        let rhat = 56.0 * (4.0 * r * r + 3.0 * z * z) / (9.0 * d.powi(3));
        let e = 100.0 * r.powi(4) - 71.0 * r * r * z * z - 2.0 * z.powi(4);
        let r2 = 112.0 * (50.0 * r.powi(4) + z.powi(4)) / (9.0 * e * e);
        assert!(rel(c.rhat, rhat) < 1e-8, "{} {rhat}", c.rhat);
        assert!(rel(c.r, r2) < 1e-6, "{} {r2}", c.r);
    }
    let s = abc();
    let (a, b) = (1.5, 1.0);
    for x in points(&s, 10, 10) {
        let Ok(c) = reduced_curvatures(&s, &x, 1e-6) else { continue };
        seen += 1;
        let (sx, cy) = (x[0].sin(), x[1].cos());
        let rhat = (sx * sx + cy * cy) / (a * b * sx.powi(3) * cy.powi(3));
        let r2 = (b * sx * (sx * sx + 3.0 * cy * cy) + a * cy * (cy * cy + 3.0 * sx * sx))
            / (2.0 * sx * sx * cy * cy * (b * sx + a * cy).powi(3));
        assert!(rel(c.rhat, rhat) < 1e-8, "{} {rhat}", c.rhat);
        assert!(rel(c.r, r2) < 1e-6, "{} {r2}", c.r);
    }
    assert!(seen >= 15, "{seen}");
}

#[test]
fn reduced_r2_matches_metric_oracle() {
    let mut seen = 0;
    for s in [abc(), hill(), hicks()] {
        for x in points(&s, 10, 11) {
            let Ok(c) = reduced_curvatures(&s, &x, 1e-6) else { continue };
            seen += 1;
            let g = reduced_pullback_jets(&s, &x).unwrap();
            let o = flowgeom::diagnostics::metric_curvature_oracle(&g).unwrap();
            assert!(rel(c.r, o) < 1e-6, "{} {} {o}", s.name, c.r);
        }
    }
    assert!(seen >= 20, "{seen}");
}

#[test]
fn fhat3_matches_unreduced_evaluation() {
    for s in [abc(), hill(), hicks()] {
        for x in points(&s, 20, 12) {
            let reduced = fhat3(&s, &x).unwrap();
            let full = half_laplacian_3d(&s, &x);
            let kin = kinematics(&s, &x).unwrap().f;
            let scale = full.abs().max(1.0);
            assert!((reduced - full).abs() < 1e-9 * scale, "{} {reduced} {full}", s.name);
            assert!((reduced - kin).abs() < 1e-9 * scale, "{} {reduced} {kin}", s.name);
        }
    }
}

#[test]
fn traces_match_three_dimensional_kinematics() {
    for s in [hill(), hicks(), abc()] {
        for x in points(&s, 20, 13) {
            let t = reduced_traces(&s, &x).unwrap();
            let k = kinematics(&s, &x).unwrap();
            let gi = values(&invert(&s.geometry.metric_at(&x, 0).unwrap()).unwrap());
            let (z, st) = traces(&k, &gi);
            let scale = z.abs().max(st.abs()).max(1.0);
            assert!((t.zeta2 - z).abs() < 1e-9 * scale, "{} {} {z}", s.name, t.zeta2);
            assert!((t.strain2 - st).abs() < 1e-9 * scale, "{} {} {st}", s.name, t.strain2);
            assert!(t.f3_check < 1e-8 * scale, "{} {}", s.name, t.f3_check);
        }
    }
}

#[test]
fn constant_swirl_without_warp_gives_planar_traces() {
    let g = abc().geometry.clone();
    let s = FlowSpec::new(
        "planar",
        g,
        Source::Reduced { psi: parse_expression("sin(x)*cos(y)").unwrap(), v3: parse_expression("2").unwrap() },
        &Params::new(),
        0.0,
    )
    .unwrap();
    let p = FlowSpec::custom_stream("sin(x)*cos(y)", &Params::new(), 0.0).unwrap();
    for x in [[0.3, 0.4], [1.1, -0.7]] {
        let t = reduced_traces(&s, &x).unwrap();
        let k = kinematics(&p, &x).unwrap();
        let (z, st) = traces(&k, &nalgebra::DMatrix::identity(2, 2));
        assert!((t.zeta2 - z).abs() < 1e-14 && (t.strain2 - st).abs() < 1e-14);
    }
}

#[test]
fn moment_maps_on_catalog_reductions() {
    let s = abc();
    let x = [0.4, 1.3, 0.0];
    let m = moment_maps(&s, &x, 1.0).unwrap();
    let v3 = s.jets_at(&x, 0).unwrap().v[2].value();
    assert_eq!(m.symplectic, v3);
    assert_eq!(moment_maps(&s, &x, 0.0).unwrap_err(), Error::VanishingLambda);
    let h = hill();
    for x in points(&h, 10, 14) {
        let m = moment_maps(&h, &x, 1.0).unwrap();
        let v = h.jets_at(&x, 0).unwrap().v;
        let r = x[0];
        assert!((m.two_plectic[0] + r * v[1].value()).abs() < 1e-12);
        assert!((m.two_plectic[1] - r * v[0].value()).abs() < 1e-12);
    }
    for s in [abc(), hill(), hicks()] {
        for x in points(&s, 10, 15) {
            assert!(moment_maps(&s, &x, 1.0).unwrap().level_set_residual < 1e-10);
        }
    }
}

#[test]
fn symmetry_coordinate_is_ignored() {
    let s = hicks();
    let a = reduced_metrics(&s, &[0.4, 0.2, 0.0], EPS_SING).unwrap();
    let b = reduced_metrics(&s, &[0.4, 0.2, 2.0], EPS_SING).unwrap();
    assert_eq!(a.pullback.matrix, b.pullback.matrix);
}
