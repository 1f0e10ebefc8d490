use frade_cli::expr::Expr;
use proptest::prelude::*;

proptest! {
    #[test]
    fn polynomial_text_matches_direct_evaluation(
        c in proptest::collection::vec(-5.0f64..5.0, 1..5),
        x in -2.0f64..2.0,
        t in 0.0f64..2.0,
    ) {
        let text: Vec<String> = c.iter().enumerate().map(|(k, a)| format!("({a:e}) * x^{k} * (1 + t)")).collect();
        let e = Expr::parse(&text.join(" + ")).unwrap();
        let direct: f64 = c.iter().enumerate().map(|(k, a)| a * x.powi(k as i32) * (1.0 + t)).sum();
        prop_assert!((e.eval(x, 0.0, t) - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }

    #[test]
    fn constant_text_round_trips(v in -1e6f64..1e6) {
        let e = Expr::parse(&format!("{v:e}")).unwrap();
        prop_assert_eq!(e.as_constant(), Some(v));
    }
}
