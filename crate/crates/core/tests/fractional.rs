use frade_core::frac_calc::family::SMOOTH_FAMILY;
use frade_core::frac_calc::{caputo_derivative, gamma_fn, rl_derivative, rl_integral};
use frade_core::{TimeGrid, TimeSeries};
use proptest::prelude::*;

/// Adaptive Simpson on `[a, b]`.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 40)
}

fn derivative(h: fn(f64) -> f64, t: f64) -> f64 {
    let e = 1e-3;
    (8.0 * (h(t + e) - h(t - e)) - (h(t + 2.0 * e) - h(t - 2.0 * e))) / (12.0 * e)
}

/// Caputo derivative from its defining integral, with `v = (t - tau)^(1 - alpha)`
/// removing the kernel singularity.
fn caputo_oracle(h: fn(f64) -> f64, alpha: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let p = 1.0 / (1.0 - alpha);
    let f = |v: f64| derivative(h, t - v.powf(p));
    simpson(&f, 0.0, t.powf(1.0 - alpha), 1e-12) / gamma_fn(2.0 - alpha).unwrap()
}

fn series(h: fn(f64) -> f64, n: usize) -> TimeSeries {
    TimeSeries::from_fn(TimeGrid::new(1.0, n).unwrap(), h)
}

fn max_err_vs_oracle(h: fn(f64) -> f64, alpha: f64, n: usize) -> f64 {
    let d = caputo_derivative(&series(h, n), alpha).unwrap();
    // a fixed set of comparison times shared by all grids
    (1..=8)
        .map(|k| {
            let t = k as f64 / 8.0;
            let i = d.grid().nearest(t);
            (d.values()[i] - caputo_oracle(h, alpha, t)).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn oracle_reproduces_monomial_formula() {
    let g = gamma_fn(3.0).unwrap() / gamma_fn(3.0 - 0.33).unwrap();
    let v = caputo_oracle(|t| t * t, 0.33, 0.7);
    assert!((v - g * 0.7f64.powf(1.67)).abs() < 1e-9, "{v}");
}

#[test]
fn l1_converges_to_oracle_on_smooth_family() {
    for alpha in [0.25, 0.5, 0.75] {
        for (name, h) in SMOOTH_FAMILY.iter().skip(1).step_by(3) {
            let e1 = max_err_vs_oracle(*h, alpha, 129);
            let e2 = max_err_vs_oracle(*h, alpha, 513);
            let order = (e1 / e2).log2() / 2.0;
            assert!(order >= 2.0 - alpha - 0.1 || e2 < 1e-9, "{name} alpha={alpha}: order {order} ({e1:e} -> {e2:e})");
        }
    }
}

#[test]
fn integral_semigroup_defect_shrinks() {
    for (p1, p2) in [(0.25, 0.5), (0.33, 0.33), (0.5, 0.5), (0.25, 0.75)] {
        for (name, h) in SMOOTH_FAMILY.iter().step_by(4) {
            let defect = |n: usize| {
                let s = series(*h, n);
                let lhs = rl_integral(&rl_integral(&s, p2).unwrap(), p1).unwrap();
                let rhs = rl_integral(&s, p1 + p2).unwrap();
                lhs.max_abs_diff_from(&rhs, 0.0)
            };
            let (a, b) = (defect(257), defect(513));
            assert!(a / b >= 1.7 || b < 1e-12, "{name} ({p1},{p2}): {a:e} -> {b:e}");
        }
    }
}

#[test]
fn caputo_and_riemann_liouville_agree_for_zero_start() {
    for (name, h) in SMOOTH_FAMILY {
        let a = series(h, 513);
        let c = caputo_derivative(&a, 0.5).unwrap();
        let r = rl_derivative(&a, 0.5).unwrap();
        let defect = c.max_abs_diff_from(&r, 0.25);
        assert!(defect < 2e-3, "{name}: {defect:e}");
    }
}

proptest! {
    #[test]
    fn operators_are_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, alpha in 0.05f64..0.95, i in 0usize..20, j in 0usize..20) {
        let g = TimeGrid::new(1.0, 65).unwrap();
        let (f, h) = (SMOOTH_FAMILY[i].1, SMOOTH_FAMILY[j].1);
        let combo = TimeSeries::from_fn(g, |t| a * f(t) + b * h(t));
        let (sf, sh) = (TimeSeries::from_fn(g, f), TimeSeries::from_fn(g, h));
        for op in [
            |s: &TimeSeries, al: f64| caputo_derivative(s, al).unwrap(),
            |s: &TimeSeries, al: f64| rl_integral(s, al).unwrap(),
            |s: &TimeSeries, al: f64| rl_derivative(s, al).unwrap(),
        ] {
            let lhs = op(&combo, alpha);
            let (x, y) = (op(&sf, alpha), op(&sh, alpha));
            for k in 0..65 {
                let want = a * x.values()[k] + b * y.values()[k];
                prop_assert!((lhs.values()[k] - want).abs() <= 1e-9 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn integral_preserves_sign(alpha in 0.05f64..1.0, c in 0.0f64..5.0) {
        let g = TimeGrid::new(2.0, 33).unwrap();
        let s = TimeSeries::from_fn(g, |t| c * (1.0 + t * t));
        prop_assert!(rl_integral(&s, alpha).unwrap().values().iter().all(|v| *v >= 0.0));
    }
}
