//! Fixtures shared by the frade benchmarks.

use std::f64::consts::PI;

use frade_core::carleman::{Region, SubDiffusionEstimate};
use frade_core::fade::FadeProblem;
use frade_core::geometry::{build_d, choose_beta, BetaRule, Domain, Face, Weight, WeightParams, DEFAULT_DILATION};
use frade_core::{Axis, GridFunction, SpaceGrid, SpaceTimeGrid, TimeGrid};

pub fn line_grid(nx: usize, nt: usize) -> SpaceTimeGrid {
    SpaceTimeGrid::new(SpaceGrid::line(Axis::new(0.0, 1.0, nx).unwrap()), TimeGrid::new(1.0, nt).unwrap())
}

/// Advection-reaction problem with a single fractional term and a smooth source.
pub fn forward_problem(nx: usize, nt: usize, order: f64) -> FadeProblem {
    FadeProblem::builder(line_grid(nx, nt))
        .advection(0.5, 0.0)
        .reaction(1.0)
        .fractional(order, 1.0)
        .source_fn(|[x, _], t| (1.0 + t) * (PI * x).sin())
        .build()
        .unwrap()
}

/// Sub-diffusion estimate on a compact bump, observed at `x = 1`.
pub fn sub_estimate(n: usize) -> SubDiffusionEstimate {
    let g = line_grid(n, n);
    let dom = Domain::interval(0.0, 1.0, &[Face::XHi]).unwrap().with_dilation(DEFAULT_DILATION).unwrap();
    let d = build_d(&dom).unwrap();
    let beta = choose_beta(BetaRule::SubCauchy { horizon: 1.0, alpha1: 0.3 }, d.sup_norm(&dom)).unwrap();
    let w = Weight::new(d, WeightParams::sub(1.0, 8.0, beta, 0.3).unwrap());
    let bump = |v: f64, a: f64, b: f64| if v > a && v < b { ((v - a) * (b - v) * 4.0 / ((b - a) * (b - a))).powi(4) } else { 0.0 };
    let u = GridFunction::from_fn(g, |[x, _], t| bump(x, 0.3, 0.7) * bump(t, 0.12, 0.38));
    let p = FadeProblem::builder(g).advection(0.5, 0.0).reaction(1.0).fractional(0.3, 1.0).build().unwrap();
    SubDiffusionEstimate::new(&u, &p, &w, &Region::boxed((0.25, 0.75), (0.1, 0.4))).unwrap()
}
