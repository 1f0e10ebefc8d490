//! Inverse problems on top of the forward solver: source reconstruction from
//! a solution history, lateral Cauchy continuation by Tikhonov least squares,
//! seeded noise and power-law stability fits.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, FradeError, Result};
use crate::fade::{boundary_flux, operator_without_dt_at, solve_fade, Coefficient, FadeProblem};
use crate::frac_calc::TimeSeries;
use crate::geometry::{Face, Pseudoconvexity};
use crate::grid::{GridFunction, SpaceField, SpaceGrid, SpaceTimeGrid};

/// Adds i.i.d. uniform noise of amplitude `delta * max|values|` to every entry.
pub fn add_noise(values: &[f64], delta: f64, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    noisy_with(&mut rng, values, delta)
}

fn noisy_with(rng: &mut ChaCha8Rng, values: &[f64], delta: f64) -> Result<Vec<f64>> {
    ensure!(delta >= 0.0 && delta.is_finite(), Parameter, "noise level must be >= 0, got {delta}");
    if delta == 0.0 {
        return Ok(values.to_vec());
    }
    let amp = delta * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(values.iter().map(|v| v + amp * rng.random_range(-1.0..=1.0)).collect())
}

/// Noisy copy of a solution history; the initial slice is left untouched
/// because it is prescribed, not measured.
pub fn add_history_noise(u: &GridFunction, delta: f64, seed: u64) -> Result<GridFunction> {
    let ns = u.grid().space().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp_ref = u.max_abs();
    let mut v = u.values().to_vec();
    ensure!(delta >= 0.0 && delta.is_finite(), Parameter, "noise level must be >= 0, got {delta}");
    if delta > 0.0 {
        for x in &mut v[ns..] {
            *x += delta * amp_ref * rng.random_range(-1.0..=1.0);
        }
    }
    GridFunction::new(u.grid(), v)
}

/// Reconstruction settings for the source problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IspOptions {
    /// Observation time; must be a grid node with at least two steps before it.
    pub t0: f64,
    /// Reconstruction is restricted to `{d > 4 eps}`.
    pub eps: f64,
    /// Lower bound required for `|R(., t0)|` on the target nodes.
    pub r0: f64,
}

/// Reconstructed spatial factor on the nodes of `{d > 4 eps}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEstimate {
    grid: SpaceGrid,
    mask: Vec<bool>,
    values: Vec<f64>,
}

impl SourceEstimate {
    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    /// Whether node `i` belongs to the reconstruction region.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Zero outside the mask.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Relative discrete `L2` error over the mask.
    pub fn relative_error(&self, truth: &SpaceField) -> Result<f64> {
        ensure!(truth.grid() == self.grid, Shape, "truth lives on a different grid");
        let (mut num, mut den) = (0.0, 0.0);
        for ((&m, &v), &t) in self.mask.iter().zip(&self.values).zip(truth.values()) {
            if m {
                num += (v - t) * (v - t);
                den += t * t;
            }
        }
        ensure!(den > 0.0, Input, "true source vanishes on the reconstruction region");
        Ok((num / den).sqrt())
    }

    /// Writes `x[,y],f_hat,f_true,abs_err` for the masked nodes.
    pub fn write_csv<W: Write>(&self, mut out: W, truth: &SpaceField) -> Result<()> {
        ensure!(truth.grid() == self.grid, Shape, "truth lives on a different grid");
        let two = self.grid.dim() == 2;
        writeln!(out, "{}", if two { "x,y,f_hat,f_true,abs_err" } else { "x,f_hat,f_true,abs_err" })?;
        for i in (0..self.grid.len()).filter(|&i| self.mask[i]) {
            let p = self.grid.point(i);
            let (f, t) = (self.values[i], truth.values()[i]);
            if two {
                writeln!(out, "{},{},{f},{t},{}", p[0], p[1], (f - t).abs())?;
            } else {
                writeln!(out, "{},{f},{t},{}", p[0], (f - t).abs())?;
            }
        }
        Ok(())
    }
}

fn time_index(grid: SpaceTimeGrid, t: f64) -> Result<usize> {
    let tg = grid.time();
    let n = tg.nearest(t);
    ensure!((tg.node(n) - t).abs() <= 1e-9 * tg.horizon(), Grid, "time {t} is not a grid node");
    Ok(n)
}

/// `f = [u_t + sum q D^alpha u - div(A grad u) + b.grad u + c u](., t0) / R(., t0)`
/// with a three-point backward difference for `u_t`.
pub fn reconstruct_source(
    u: &GridFunction,
    r: &GridFunction,
    problem: &FadeProblem,
    d: &Pseudoconvexity,
    opts: IspOptions,
) -> Result<SourceEstimate> {
    let grid = problem.grid();
    ensure!(u.grid() == grid && r.grid() == grid, Shape, "history, R and problem must share one grid");
    ensure!(opts.eps > 0.0 && opts.r0 > 0.0, Parameter, "eps and r0 must be positive");
    let n0 = time_index(grid, opts.t0)?;
    ensure!(n0 >= 2, Grid, "t0 = {} leaves fewer than two steps for the backward difference", opts.t0);
    let r_start = r.slice(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure!(r_start <= 1e-12 * r.max_abs().max(1.0), Hypothesis, "R(., 0) must vanish (max |R(., 0)| = {r_start})");
    let sg = grid.space();
    let mask: Vec<bool> = (0..sg.len()).map(|i| !sg.is_boundary(i) && d.value(sg.point(i)) > 4.0 * opts.eps).collect();
    ensure!(mask.iter().any(|&m| m), Parameter, "no interior node satisfies d > 4 eps = {}", 4.0 * opts.eps);
    for i in (0..sg.len()).filter(|&i| mask[i]) {
        let rv = r.at(n0, i);
        ensure!(rv.abs() >= opts.r0, Hypothesis, "|R(x, t0)| = {} < r0 = {} at x = {:?}", rv.abs(), opts.r0, sg.point(i));
    }
    let dt = grid.time().step();
    let rest = operator_without_dt_at(problem, u, n0);
    let values = (0..sg.len())
        .map(|i| {
            if !mask[i] {
                return 0.0;
            }
            let ut = (3.0 * u.at(n0, i) - 4.0 * u.at(n0 - 1, i) + u.at(n0 - 2, i)) / (2.0 * dt);
            (ut + rest[i]) / r.at(n0, i)
        })
        .collect();
    Ok(SourceEstimate { grid: sg, mask, values })
}

/// Checks the source-problem hypotheses on a clean history:
/// `R(., 0) = 0`, `u(., 0) = 0` and `u_t(., 0) = 0`, the last two relative to
/// the size of `u` and `u_t` over the history.
pub fn check_isp_hypotheses(u: &GridFunction, r: &GridFunction, tol: f64) -> Result<()> {
    let max0 = |g: &GridFunction| g.slice(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    ensure!(max0(r) <= 1e-12 * r.max_abs().max(1.0), Hypothesis, "R(., 0) must vanish");
    let scale = u.max_abs();
    ensure!(max0(u) <= tol * scale, Hypothesis, "u(., 0) must vanish (max |u(., 0)| = {})", max0(u));
    let ut = u.dt();
    let slope = max0(&ut);
    ensure!(slope <= tol * ut.max_abs(), Hypothesis, "u_t(., 0) must vanish (max |u_t(., 0)| = {slope}, max |u_t| = {})", ut.max_abs());
    Ok(())
}

/// Solves the forward problem with source `R f`.
pub fn synthesize_history(problem: &FadeProblem, r: &GridFunction, f: &SpaceField) -> Result<GridFunction> {
    let grid = problem.grid();
    ensure!(r.grid() == grid && f.grid() == grid.space(), Shape, "R and f must live on the problem grid");
    let ns = grid.space().len();
    let src: Vec<f64> = r.values().iter().enumerate().map(|(k, rv)| rv * f.values()[k % ns]).collect();
    solve_fade(&problem.with_source(Coefficient::SpaceTime(src))?)
}

/// Lateral data on one observed face of a 1-D domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    pub face: Face,
    /// `u` on the face.
    pub trace: TimeSeries,
    /// Conormal derivative on the face.
    pub flux: TimeSeries,
    /// Known initial value, if any; otherwise the problem's own.
    pub initial: Option<Vec<f64>>,
}

impl CauchyData {
    /// Exact data read off a solution.
    pub fn from_solution(problem: &FadeProblem, u: &GridFunction, face: Face) -> Result<Self> {
        ensure!(problem.grid().space().dim() == 1, UnsupportedGeometry, "lateral Cauchy data is implemented in 1-D");
        let node = face.nodes(u.grid().space())?[0];
        let flux = boundary_flux(problem, u, face)?.remove(0);
        Ok(Self { face, trace: u.trace(node), flux, initial: Some(u.slice(0).to_vec()) })
    }

    /// Independent uniform noise on trace and flux, each scaled to its own sup norm.
    pub fn with_noise(&self, delta: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = self.trace.grid();
        let trace = TimeSeries::new(grid, noisy_with(&mut rng, self.trace.values(), delta)?)?;
        let flux = TimeSeries::new(grid, noisy_with(&mut rng, self.flux.values(), delta)?)?;
        Ok(Self { trace, flux, ..self.clone() })
    }
}

/// Continuation result: the fitted boundary values and the resulting field.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyReconstruction {
    pub u: GridFunction,
    /// Values on the unobserved endpoint.
    pub boundary: TimeSeries,
}

/// `eps = T / (2 M)` with `M = N^{1/(2 - 2 alpha1)}`.
pub fn cauchy_epsilon(horizon: f64, levels: u32, alpha1: f64) -> Result<f64> {
    ensure!(horizon > 0.0, Parameter, "horizon must be positive");
    ensure!(levels > 4, Parameter, "level count must exceed 4, got {levels}");
    ensure!(alpha1 > 0.0 && alpha1 < 0.5, FamilyMismatch, "needs alpha1 in (0, 1/2), got {alpha1}");
    let m = (levels as f64).powf(1.0 / (2.0 - 2.0 * alpha1));
    Ok(horizon / (2.0 * m))
}

fn with_endpoint_values(problem: &FadeProblem, obs: usize, obs_vals: &[f64], free: usize, free_vals: &[f64]) -> Result<FadeProblem> {
    let grid = problem.grid();
    let ns = grid.space().len();
    let mut g = vec![0.0; grid.len()];
    for n in 0..grid.time().nodes() {
        g[n * ns + obs] = obs_vals[n];
        g[n * ns + free] = free_vals[n];
    }
    problem.with_boundary(Coefficient::SpaceTime(g))
}

/// Fits the unobserved endpoint values `h` by minimizing
/// `|flux(h) - g1|^2 + reg |h|_{H^1}^2` (time-discrete norms), with `g0`
/// imposed as Dirichlet data on the observed face, then solves forward.
pub fn lateral_cauchy_solve(problem: &FadeProblem, data: &CauchyData, reg: f64) -> Result<CauchyReconstruction> {
    ensure!(reg > 0.0 && reg.is_finite(), Parameter, "regularization weight must be positive, got {reg}");
    let grid = problem.grid();
    let sg = grid.space();
    ensure!(sg.dim() == 1, UnsupportedGeometry, "lateral Cauchy continuation is implemented in 1-D");
    ensure!(matches!(data.face, Face::XLo | Face::XHi), Parameter, "1-D faces are x_lo and x_hi");
    let tg = grid.time();
    ensure!(data.trace.grid() == tg && data.flux.grid() == tg, Shape, "data and problem time grids differ");
    let nt = tg.nodes();
    let dt = tg.step();
    let (obs, free) = match data.face {
        Face::XHi => (sg.len() - 1, 0),
        _ => (0, sg.len() - 1),
    };
    let base = match &data.initial {
        Some(u0) => problem.with_initial(u0.clone())?,
        None => problem.clone(),
    };
    let h0 = base.initial()[free];

    // affine part: observed data and h = 0 for t > 0
    let mut zero_free = vec![0.0; nt];
    zero_free[0] = h0;
    let offset = solve_fade(&with_endpoint_values(&base, obs, data.trace.values(), free, &zero_free)?)?;
    let b = boundary_flux(&base, &offset, data.face)?.remove(0);

    // unit responses of the flux to h at each step
    let hom = base.homogeneous();
    let zeros = vec![0.0; nt];
    let unit = |j: usize| -> Result<Vec<f64>> {
        let mut e = vec![0.0; nt];
        e[j] = 1.0;
        let u = solve_fade(&with_endpoint_values(&hom, obs, &zeros, free, &e)?)?;
        Ok(boundary_flux(&hom, &u, data.face)?.remove(0).into_values())
    };
    let m = nt - 1;
    let mut a = DMatrix::<f64>::zeros(m, m);
    if base.is_time_invariant() {
        // the scheme is shift invariant: responses are a lower-triangular Toeplitz matrix
        let r = unit(1)?;
        for col in 0..m {
            for row in col..m {
                a[(row, col)] = r[row - col + 1];
            }
        }
    } else {
        let cols: Vec<Vec<f64>> = (1..nt).into_par_iter().map(unit).collect::<Result<_>>()?;
        for (col, r) in cols.iter().enumerate() {
            for row in 0..m {
                a[(row, col)] = r[row + 1];
            }
        }
    }
    let y = DVector::from_iterator(m, (1..nt).map(|n| data.flux.values()[n] - b.values()[n]));

    // discrete H^1 penalty on h_1..h_{nt-1}, with h_0 known
    let mut p = DMatrix::<f64>::identity(m, m) * dt;
    let mut q = DVector::<f64>::zeros(m);
    for k in 0..m {
        p[(k, k)] += 1.0 / dt;
        if k + 1 < m {
            p[(k, k)] += 1.0 / dt;
            p[(k, k + 1)] -= 1.0 / dt;
            p[(k + 1, k)] -= 1.0 / dt;
        }
    }
    q[0] = h0 / dt;
    let normal = a.transpose() * &a * dt + p * reg;
    let rhs = a.transpose() * y * dt + q * reg;
    let chol = normal.cholesky().ok_or_else(|| FradeError::Numerical("normal equations are not positive definite".into()))?;
    let h = chol.solve(&rhs);
    ensure!(h.iter().all(|v| v.is_finite()), Numerical, "non-finite boundary reconstruction");
    let mut hv = vec![h0; nt];
    hv[1..].copy_from_slice(h.as_slice());
    let u = solve_fade(&with_endpoint_values(&base, obs, data.trace.values(), free, &hv)?)?;
    Ok(CauchyReconstruction { u, boundary: TimeSeries::new(tg, hv)? })
}

/// Space-time box `x in [x0, x1]`, `t in [t0, t1]` (closed), the target of a
/// continuation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Target {
    pub x: (f64, f64),
    pub t: (f64, f64),
}

/// Relative discrete `L2` error of `u` against `truth` over the target nodes.
pub fn relative_error_on(u: &GridFunction, truth: &GridFunction, target: Target) -> Result<f64> {
    ensure!(u.grid() == truth.grid(), Shape, "fields live on different grids");
    let grid = u.grid();
    let sg = grid.space();
    let (mut num, mut den) = (0.0, 0.0);
    for (n, t) in grid.time().iter().enumerate() {
        if t < target.t.0 || t > target.t.1 {
            continue;
        }
        for i in 0..sg.len() {
            let x = sg.point(i)[0];
            if x < target.x.0 || x > target.x.1 {
                continue;
            }
            let (a, b) = (u.at(n, i), truth.at(n, i));
            num += (a - b) * (a - b);
            den += b * b;
        }
    }
    ensure!(den > 0.0, Input, "reference field vanishes on the target region");
    Ok((num / den).sqrt())
}

/// Least-squares fit of `log e = theta log delta + log C`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityFit {
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
    pub theta: f64,
    pub log_c: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    /// `theta` inside `(0, 1.05]`.
    pub holder_consistent: bool,
}

/// Upper end of the accepted exponent window.
pub const THETA_MAX: f64 = 1.05;

pub fn fit_holder(deltas: &[f64], errors: &[f64]) -> Result<StabilityFit> {
    ensure!(deltas.len() == errors.len(), Input, "delta and error lists differ in length");
    ensure!(deltas.len() >= 4, Input, "need at least 4 points, got {}", deltas.len());
    ensure!(deltas.iter().chain(errors).all(|v| *v > 0.0 && v.is_finite()), Input, "noise levels and errors must be positive");
    ensure!(deltas.windows(2).all(|w| w[0] < w[1]), Input, "noise levels must be strictly increasing");
    let x: Vec<f64> = deltas.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let theta = sxy / sxx;
    let log_c = my - theta * mx;
    let residual = (x.iter().zip(&y).map(|(a, b)| (b - log_c - theta * a).powi(2)).sum::<f64>() / n).sqrt();
    Ok(StabilityFit {
        deltas: deltas.to_vec(),
        errors: errors.to_vec(),
        theta,
        log_c,
        residual,
        holder_consistent: theta > 0.0 && theta <= THETA_MAX,
    })
}

/// One closed-loop run of a noise study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSample {
    pub delta: f64,
    pub seed: u64,
    pub error: f64,
}

/// All runs of a noise study plus the fit on seed-averaged errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseStudy {
    pub samples: Vec<NoiseSample>,
    pub mean_errors: Vec<f64>,
    pub fit: StabilityFit,
}

impl NoiseStudy {
    /// Writes `delta,seed,error`, sorted by `(delta, seed)`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "delta,seed,error")?;
        for s in &self.samples {
            writeln!(out, "{},{},{}", s.delta, s.seed, s.error)?;
        }
        Ok(())
    }
}

/// Runs `run(delta, seed)` for every pair in parallel and fits the
/// seed-averaged errors.
pub fn noise_study<F>(deltas: &[f64], seeds: &[u64], run: F) -> Result<NoiseStudy>
where
    F: Fn(f64, u64) -> Result<f64> + Sync,
{
    ensure!(!seeds.is_empty(), Input, "need at least one seed");
    let pairs: Vec<(f64, u64)> = deltas.iter().flat_map(|&d| seeds.iter().map(move |&s| (d, s))).collect();
    let samples: Vec<NoiseSample> =
        pairs.par_iter().map(|&(delta, seed)| run(delta, seed).map(|error| NoiseSample { delta, seed, error })).collect::<Result<_>>()?;
    let mean_errors: Vec<f64> = samples.chunks(seeds.len()).map(|c| c.iter().map(|s| s.error).sum::<f64>() / c.len() as f64).collect();
    let fit = fit_holder(deltas, &mean_errors)?;
    Ok(NoiseStudy { samples, mean_errors, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac_calc::TimeGrid;
    use crate::grid::Axis;
    use approx::assert_relative_eq;

    fn line_grid(nx: usize, nt: usize) -> SpaceTimeGrid {
        SpaceTimeGrid::new(SpaceGrid::line(Axis::new(0.0, 1.0, nx).unwrap()), TimeGrid::new(1.0, nt).unwrap())
    }

    #[test]
    fn noise_is_bounded_deterministic_and_zero_at_zero() {
        let v: Vec<f64> = (0..200).map(|i| (i as f64 * 0.1).sin() * 3.0).collect();
        assert_eq!(add_noise(&v, 0.0, 7).unwrap(), v);
        let a = add_noise(&v, 0.01, 7).unwrap();
        assert_eq!(a, add_noise(&v, 0.01, 7).unwrap());
        assert_ne!(a, add_noise(&v, 0.01, 8).unwrap());
        let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(a.iter().zip(&v).all(|(x, y)| (x - y).abs() <= 0.01 * sup));
        assert!(add_noise(&v, -1.0, 1).is_err());
    }

    #[test]
    fn exact_power_laws() {
        let d = [1e-4, 1e-3, 1e-2, 1e-1];
        let f = fit_holder(&d, &d.map(|x: f64| x.sqrt())).unwrap();
        assert_relative_eq!(f.theta, 0.5, epsilon = 1e-12);
        assert!(f.residual < 1e-12 && f.holder_consistent);
        let f = fit_holder(&d, &d.map(|x| 3.0 * x)).unwrap();
        assert_relative_eq!(f.theta, 1.0, epsilon = 1e-12);
        assert_relative_eq!(f.log_c.exp(), 3.0, epsilon = 1e-10);
        assert!(fit_holder(&d[..3], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_holder(&d, &[1.0, 0.0, 1.0, 1.0]).is_err());
        let f = fit_holder(&d, &d.map(|x| x * x)).unwrap();
        assert!(!f.holder_consistent);
    }

    #[test]
    fn zero_history_gives_zero_source() {
        let grid = line_grid(21, 21);
        let prob = FadeProblem::builder(grid).fractional(0.75, 1.0).build().unwrap();
        let r = GridFunction::from_fn(grid, |_, t| t);
        let d = Pseudoconvexity::Affine { origin: 0.0, sign: 1.0 };
        let opts = IspOptions { t0: 1.0, eps: 0.02, r0: 0.1 };
        let est = reconstruct_source(&GridFunction::zeros(grid), &r, &prob, &d, opts).unwrap();
        assert!(est.values().iter().all(|v| *v == 0.0));
        assert!(est.mask()[10] && !est.mask()[1]);
    }

    #[test]
    fn source_hypotheses_are_enforced() {
        let grid = line_grid(21, 21);
        let prob = FadeProblem::builder(grid).build().unwrap();
        let d = Pseudoconvexity::Affine { origin: 0.0, sign: 1.0 };
        let u = GridFunction::zeros(grid);
        let opts = IspOptions { t0: 1.0, eps: 0.02, r0: 0.1 };
        let shifted = GridFunction::from_fn(grid, |_, t| t + 1.0);
        assert!(matches!(reconstruct_source(&u, &shifted, &prob, &d, opts), Err(FradeError::Hypothesis(_))));
        let vanishing = GridFunction::from_fn(grid, |[x, _], t| t * (x - 0.5));
        assert!(matches!(reconstruct_source(&u, &vanishing, &prob, &d, opts), Err(FradeError::Hypothesis(_))));
        let r = GridFunction::from_fn(grid, |_, t| t);
        let early = IspOptions { t0: 0.05, ..opts };
        assert!(matches!(reconstruct_source(&u, &r, &prob, &d, early), Err(FradeError::Grid(_))));
        let nonzero_start = GridFunction::from_fn(grid, |[x, _], _| x);
        assert!(matches!(check_isp_hypotheses(&nonzero_start, &r, 1e-3), Err(FradeError::Hypothesis(_))));
    }

    #[test]
    fn zero_cauchy_data_reconstructs_zero() {
        let grid = line_grid(21, 33);
        let prob = FadeProblem::builder(grid).fractional(0.33, 1.0).build().unwrap();
        let zero = TimeSeries::zeros(grid.time());
        let data = CauchyData { face: Face::XHi, trace: zero.clone(), flux: zero, initial: None };
        let rec = lateral_cauchy_solve(&prob, &data, 1e-6).unwrap();
        assert_eq!(rec.u.max_abs(), 0.0);
        assert!(lateral_cauchy_solve(&prob, &data, 0.0).is_err());
    }

    #[test]
    fn epsilon_formula() {
        let e = cauchy_epsilon(1.0, 16, 0.25).unwrap();
        assert_relative_eq!(e, 1.0 / (2.0 * 16f64.powf(1.0 / 1.5)), epsilon = 1e-14);
        assert!(cauchy_epsilon(1.0, 4, 0.25).is_err());
    }
}
