use std::f64::consts::PI;

use frade_core::fade::{solve_fade, FadeProblem};
use frade_core::geometry::{Face, Pseudoconvexity};
use frade_core::inverse::*;
use frade_core::{Axis, GridFunction, SpaceField, SpaceGrid, SpaceTimeGrid, TimeGrid};
use proptest::prelude::*;
use statrs::function::gamma::gamma;

fn line(nx: usize, nt: usize) -> SpaceTimeGrid {
    SpaceTimeGrid::new(SpaceGrid::line(Axis::new(0.0, 1.0, nx).unwrap()), TimeGrid::new(1.0, nt).unwrap())
}

const OBSERVED_LEFT: Pseudoconvexity = Pseudoconvexity::Affine { origin: 0.0, sign: 1.0 };

fn max_masked_error(est: &SourceEstimate, f: impl Fn(f64) -> f64) -> f64 {
    let sg = est.grid();
    (0..sg.len()).filter(|&i| est.mask()[i]).map(|i| (est.values()[i] - f(sg.point(i)[0])).abs()).fold(0.0, f64::max)
}

// u = t^2 sin(pi x), R = t: the source at t0 = 1 follows from the Caputo
// derivative of t^2, 2 t^(2-a) / Gamma(3-a), and u_t - u_xx by hand.
#[test]
fn manufactured_history_gives_closed_form_source() {
    let alpha = 0.5;
    let exact = |x: f64| (2.0 + 2.0 / gamma(3.0 - alpha) + PI * PI) * (PI * x).sin();
    let mut errs = Vec::new();
    for (nx, nt) in [(41, 81), (81, 161)] {
        let g = line(nx, nt);
        let prob = FadeProblem::builder(g).isotropic(1.0).fractional(alpha, 1.0).build().unwrap();
        let u = GridFunction::from_fn(g, |[x, _], t| t * t * (PI * x).sin());
        let r = GridFunction::from_fn(g, |_, t| t);
        let opts = IspOptions { t0: 1.0, eps: 0.02, r0: 0.5 };
        let est = reconstruct_source(&u, &r, &prob, &OBSERVED_LEFT, opts).unwrap();
        assert!(est.mask().iter().filter(|m| **m).count() > nx / 2);
        errs.push(max_masked_error(&est, exact));
    }
    assert!(errs[1] < 2e-2, "{errs:?}");
    assert!(errs[0] / errs[1] > 1.9, "{errs:?}");
}

#[test]
fn closed_loop_recovers_source_on_coarse_grid() {
    let g = line(51, 201);
    let prob = FadeProblem::builder(g).isotropic(1.0).advection(0.3, 0.0).reaction(0.5).fractional(0.6, 1.0).build().unwrap();
    let r = GridFunction::from_fn(g, |[x, _], t| t * t * (1.0 + 0.5 * x));
    let truth = SpaceField::from_fn(g.space(), |[x, _]| x * (1.0 - x) * (3.0 * x).cos());
    let u = synthesize_history(&prob, &r, &truth).unwrap();
    check_isp_hypotheses(&u, &r, 1e-2).unwrap();
    let est = reconstruct_source(&u, &r, &prob, &OBSERVED_LEFT, IspOptions { t0: 1.0, eps: 0.05, r0: 0.5 }).unwrap();
    let err = est.relative_error(&truth).unwrap();
    assert!(err < 1e-3, "relative error {err}");

    let mut csv = Vec::new();
    est.write_csv(&mut csv, &truth).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "x,f_hat,f_true,abs_err");
}

#[test]
fn history_noise_leaves_initial_slice_and_scales_error() {
    let g = line(41, 81);
    let prob = FadeProblem::builder(g).isotropic(1.0).fractional(0.4, 1.0).build().unwrap();
    let r = GridFunction::from_fn(g, |_, t| t);
    let truth = SpaceField::from_fn(g.space(), |[x, _]| (PI * x).sin());
    let u = synthesize_history(&prob, &r, &truth).unwrap();
    let noisy = add_history_noise(&u, 1e-3, 3).unwrap();
    assert_eq!(noisy.slice(0), u.slice(0));
    let opts = IspOptions { t0: 1.0, eps: 0.05, r0: 0.5 };
    let err = |d: f64| {
        let v = add_history_noise(&u, d, 3).unwrap();
        reconstruct_source(&v, &r, &prob, &OBSERVED_LEFT, opts).unwrap().relative_error(&truth).unwrap()
    };
    let (small, large) = (err(1e-5), err(1e-3));
    assert!(large > 10.0 * small, "{small} {large}");
}

fn cauchy_truth(nx: usize, nt: usize) -> (FadeProblem, GridFunction) {
    let g = line(nx, nt);
    let prob = FadeProblem::builder(g)
        .isotropic(1.0)
        .fractional(0.3, 1.0)
        .boundary_fn(|[x, _], t| if x < 0.5 { t * t } else { 0.5 * t })
        .initial_fn(|_| 0.0)
        .build()
        .unwrap();
    let u = solve_fade(&prob).unwrap();
    (prob, u)
}

#[test]
fn tikhonov_errors_shrink_with_regularization_on_clean_data() {
    let (prob, truth) = cauchy_truth(41, 65);
    let data = CauchyData::from_solution(&prob, &truth, Face::XHi).unwrap();
    let target = Target { x: (0.5, 1.0), t: (0.2, 1.0) };
    let errs: Vec<f64> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&reg| relative_error_on(&lateral_cauchy_solve(&prob, &data, reg).unwrap().u, &truth, target).unwrap())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[2] < 1e-2, "{errs:?}");
}

#[test]
fn cauchy_noise_study_is_reproducible_and_fits_a_power_law() {
    let (prob, truth) = cauchy_truth(31, 65);
    let data = CauchyData::from_solution(&prob, &truth, Face::XHi).unwrap();
    let target = Target { x: (0.5, 1.0), t: (0.2, 1.0) };
    let run = |d: f64, seed: u64| -> frade_core::Result<f64> {
        let rec = lateral_cauchy_solve(&prob, &data.with_noise(d, seed)?, 1e-6)?;
        relative_error_on(&rec.u, &truth, target)
    };
    let deltas = [1e-4, 1e-3, 1e-2, 1e-1];
    let a = noise_study(&deltas, &[1, 2, 3], run).unwrap();
    let b = noise_study(&deltas, &[1, 2, 3], run).unwrap();
    assert_eq!(a.samples, b.samples);
    assert!(a.fit.theta > 0.0 && a.fit.theta <= THETA_MAX, "{:?}", a.fit);
    assert!(a.mean_errors.windows(2).all(|w| w[1] > w[0]));
    let mut csv = Vec::new();
    a.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn noise_is_bounded_and_seeded(vals in prop::collection::vec(-10.0f64..10.0, 1..64), delta in 0.0f64..0.5, seed in any::<u64>()) {
        let a = add_noise(&vals, delta, seed).unwrap();
        prop_assert_eq!(&a, &add_noise(&vals, delta, seed).unwrap());
        let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.iter().zip(&vals) {
            prop_assert!((x - y).abs() <= delta * sup * (1.0 + 1e-12));
        }
    }

    #[test]
    fn reconstruction_is_linear_in_history(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 1.0f64..4.0) {
        let g = line(21, 21);
        let prob = FadeProblem::builder(g).isotropic(1.0).advection(0.2, 0.0).fractional(0.5, 1.0).build().unwrap();
        let r = GridFunction::from_fn(g, |_, t| t);
        let u1 = GridFunction::from_fn(g, |[x, _], t| t * t * (PI * x).sin());
        let u2 = GridFunction::from_fn(g, |[x, _], t| t * t * t * (k * x).cos());
        let mix = GridFunction::new(g, u1.values().iter().zip(u2.values()).map(|(p, q)| a * p + b * q).collect()).unwrap();
        let opts = IspOptions { t0: 1.0, eps: 0.02, r0: 0.5 };
        let rec = |u: &GridFunction| reconstruct_source(u, &r, &prob, &OBSERVED_LEFT, opts).unwrap().values().to_vec();
        let (f1, f2, fm) = (rec(&u1), rec(&u2), rec(&mix));
        for i in 0..fm.len() {
            let want = a * f1[i] + b * f2[i];
            prop_assert!((fm[i] - want).abs() <= 1e-10 * (1.0 + want.abs()));
        }
    }
}
