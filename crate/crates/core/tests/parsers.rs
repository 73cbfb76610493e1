use std::fs;
use std::path::Path;

use flowgeom::expr::parse_expression;
use flowgeom::io::{format_float, parse_grid, parse_params, parse_points_csv};
use proptest::prelude::*;

fn corpus(target: &str) -> Vec<String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    fs::read_dir(dir).unwrap().map(|e| fs::read_to_string(e.unwrap().path()).unwrap()).collect()
}

#[test]
fn fuzz_seeds_parse_without_panicking() {
    let expr = corpus("expr");
    assert!(expr.iter().filter(|s| parse_expression(s).is_ok()).count() >= 5);
    let grids = corpus("grid");
    assert!(grids.iter().filter(|s| parse_grid(s).is_ok()).count() >= 3);
    assert!(corpus("params").iter().all(|s| parse_params(s).is_ok()));
    let pts = corpus("points_csv");
    assert!(pts.iter().filter(|s| parse_points_csv(s).is_ok()).count() >= 3);
}

#[test]
fn grid_total_is_capped() {
    assert!(parse_grid("x=0:1:10000,y=0:1:1000").is_ok());
    assert!(parse_grid("x=0:1:10000,y=0:1:1001").is_err());
    assert!(parse_grid("x=0:1:18446744073709551615,y=0:1:2").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn parsers_never_panic(s in "[-+*/^(),.:=;#\"xyzrtpiae0-9 \n]{0,40}") {
        let _ = parse_expression(&s);
        let _ = parse_grid(&s);
        let _ = parse_params(&s);
        let _ = parse_points_csv(&s);
    }

    #[test]
    fn arbitrary_unicode_never_panics(s in "\\PC{0,24}") {
        let _ = parse_expression(&s);
        let _ = parse_grid(&s);
        let _ = parse_params(&s);
        let _ = parse_points_csv(&s);
    }

    #[test]
    fn grids_round_trip(a in -1e3f64..1e3, w in 1e-3f64..1e3, n in 2usize..50, m in 2usize..50) {
        let text = format!("x={}:{}:{n},y=0:{}:{m}", format_float(a), format_float(a + w), format_float(w));
        let g = parse_grid(&text).unwrap();
        prop_assert_eq!(g.len(), n * m);
        prop_assert_eq!(g.point(0)[0], a);
        prop_assert_eq!(g.point(n * m - 1)[0], a + w);
        prop_assert_eq!(parse_grid(&g.to_string()).unwrap(), g);
    }

    #[test]
    fn float_text_round_trips(v in proptest::num::f64::ANY) {
        let s = format_float(v);
        if v.is_nan() {
            prop_assert_eq!(s, "nan");
        } else {
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
