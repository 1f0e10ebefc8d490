//! Finite-difference solver for the multi-term time-fractional
//! advection-diffusion equation
//!
//! ```text
//! u_t + sum_j q_j D^{alpha_j} u - sum a_ij u_ij + b . grad u + c u = F
//! ```
//!
//! with Dirichlet data. Time stepping is backward Euler for `u_t` with the L1
//! history of each Caputo term moved to the right-hand side; space uses
//! second-order central differences and one banded direct solve per step.

use std::io::{Read, Write};

use crate::banded::{BandLu, BandMatrix};
use crate::error::{ensure, FradeError, Result};
use crate::frac_calc::{l1_scale, l1_weights, rl_derivative, TimeGrid, TimeSeries};
use crate::geometry::Face;
use crate::grid::{Axis, GridFunction, SpaceGrid, SpaceTimeGrid};

/// Coefficient field sampled on a space-time grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Const(f64),
    /// One value per space node.
    Space(Vec<f64>),
    /// One value per space-time node, time-major.
    SpaceTime(Vec<f64>),
}

impl Coefficient {
    pub fn space(sg: SpaceGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        Coefficient::Space((0..sg.len()).map(|i| f(sg.point(i))).collect())
    }

    pub fn space_time(grid: SpaceTimeGrid, f: impl Fn([f64; 2], f64) -> f64) -> Self {
        Coefficient::SpaceTime(GridFunction::from_fn(grid, f).into_values())
    }

    #[inline]
    pub fn at(&self, n: usize, i: usize, ns: usize) -> f64 {
        match self {
            Coefficient::Const(v) => *v,
            Coefficient::Space(v) => v[i],
            Coefficient::SpaceTime(v) => v[n * ns + i],
        }
    }

    pub fn is_time_invariant(&self) -> bool {
        !matches!(self, Coefficient::SpaceTime(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Const(v) => *v == 0.0,
            Coefficient::Space(v) | Coefficient::SpaceTime(v) => v.iter().all(|x| *x == 0.0),
        }
    }

    fn check(&self, grid: SpaceTimeGrid, name: &str) -> Result<()> {
        let ok = match self {
            Coefficient::Const(v) => v.is_finite(),
            Coefficient::Space(v) => v.len() == grid.space().len() && v.iter().all(|x| x.is_finite()),
            Coefficient::SpaceTime(v) => v.len() == grid.len() && v.iter().all(|x| x.is_finite()),
        };
        ensure!(ok, Shape, "coefficient '{name}' has the wrong length or non-finite entries");
        Ok(())
    }
}

impl From<f64> for Coefficient {
    fn from(v: f64) -> Self {
        Coefficient::Const(v)
    }
}

/// One fractional term `q D^order u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FracTerm {
    pub order: f64,
    pub coeff: Coefficient,
}

/// Discrete forward problem on a fixed space-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FadeProblem {
    grid: SpaceTimeGrid,
    a11: Coefficient,
    a12: Coefficient,
    a22: Coefficient,
    bx: Coefficient,
    by: Coefficient,
    c: Coefficient,
    terms: Vec<FracTerm>,
    source: Coefficient,
    initial: Vec<f64>,
    boundary: Coefficient,
}

/// Which time operator replaces the fractional terms in [`apply_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorForm {
    /// L1 Caputo terms.
    Caputo,
    /// Riemann-Liouville derivatives of the traces.
    RiemannLiouville,
    /// Fractional terms dropped.
    Truncated,
}

/// Builder for [`FadeProblem`]; everything defaults to zero except `a = I`.
#[derive(Debug, Clone)]
pub struct FadeProblemBuilder {
    p: FadeProblem,
}

impl FadeProblemBuilder {
    pub fn diffusion(mut self, a11: impl Into<Coefficient>, a12: impl Into<Coefficient>, a22: impl Into<Coefficient>) -> Self {
        self.p.a11 = a11.into();
        self.p.a12 = a12.into();
        self.p.a22 = a22.into();
        self
    }

    /// Scalar diffusion `a_ij = a delta_ij`.
    pub fn isotropic(self, a: impl Into<Coefficient>) -> Self {
        let a = a.into();
        self.diffusion(a.clone(), 0.0, a)
    }

    pub fn advection(mut self, bx: impl Into<Coefficient>, by: impl Into<Coefficient>) -> Self {
        self.p.bx = bx.into();
        self.p.by = by.into();
        self
    }

    pub fn reaction(mut self, c: impl Into<Coefficient>) -> Self {
        self.p.c = c.into();
        self
    }

    pub fn fractional(mut self, order: f64, q: impl Into<Coefficient>) -> Self {
        self.p.terms.push(FracTerm { order, coeff: q.into() });
        self
    }

    pub fn source(mut self, f: impl Into<Coefficient>) -> Self {
        self.p.source = f.into();
        self
    }

    pub fn source_fn(self, f: impl Fn([f64; 2], f64) -> f64) -> Self {
        let g = self.p.grid;
        self.source(Coefficient::space_time(g, f))
    }

    pub fn initial_fn(mut self, f: impl Fn([f64; 2]) -> f64) -> Self {
        let sg = self.p.grid.space();
        self.p.initial = (0..sg.len()).map(|i| f(sg.point(i))).collect();
        self
    }

    pub fn boundary_fn(mut self, f: impl Fn([f64; 2], f64) -> f64) -> Self {
        self.p.boundary = Coefficient::space_time(self.p.grid, f);
        self
    }

    pub fn boundary(mut self, g: impl Into<Coefficient>) -> Self {
        self.p.boundary = g.into();
        self
    }

    pub fn build(self) -> Result<FadeProblem> {
        self.p.validate()?;
        Ok(self.p)
    }
}

impl FadeProblem {
    pub fn builder(grid: SpaceTimeGrid) -> FadeProblemBuilder {
        FadeProblemBuilder {
            p: FadeProblem {
                grid,
                a11: 1.0.into(),
                a12: 0.0.into(),
                a22: 1.0.into(),
                bx: 0.0.into(),
                by: 0.0.into(),
                c: 0.0.into(),
                terms: Vec::new(),
                source: 0.0.into(),
                initial: vec![0.0; grid.space().len()],
                boundary: 0.0.into(),
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let g = self.grid;
        for (c, name) in [
            (&self.a11, "a11"),
            (&self.a12, "a12"),
            (&self.a22, "a22"),
            (&self.bx, "bx"),
            (&self.by, "by"),
            (&self.c, "c"),
            (&self.source, "source"),
            (&self.boundary, "boundary"),
        ] {
            c.check(g, name)?;
        }
        for t in &self.terms {
            t.coeff.check(g, "q")?;
            ensure!(t.order > 0.0 && t.order < 1.0, Domain, "fractional orders must lie in (0,1), got {}", t.order);
        }
        ensure!(self.terms.windows(2).all(|w| w[0].order > w[1].order), Parameter, "fractional orders must be strictly decreasing");
        ensure!(
            self.initial.len() == g.space().len() && self.initial.iter().all(|v| v.is_finite()),
            Shape,
            "initial value has the wrong length or non-finite entries"
        );
        let rho = self.ellipticity();
        ensure!(rho > 0.0, Hypothesis, "diffusion matrix is not uniformly elliptic (min eigenvalue {rho})");
        Ok(())
    }

    /// Smallest eigenvalue of the diffusion matrix over all nodes.
    pub fn ellipticity(&self) -> f64 {
        let ns = self.grid.space().len();
        let nt = self.grid.time().nodes();
        let planar = self.grid.space().dim() == 2;
        let mut rho = f64::INFINITY;
        for n in 0..nt {
            for i in 0..ns {
                let a = self.a11.at(n, i, ns);
                let e = if planar {
                    let b = self.a12.at(n, i, ns);
                    let d = self.a22.at(n, i, ns);
                    0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
                } else {
                    a
                };
                rho = rho.min(e);
            }
            if self.is_time_invariant() {
                break;
            }
        }
        rho
    }

    pub fn grid(&self) -> SpaceTimeGrid {
        self.grid
    }

    pub fn terms(&self) -> &[FracTerm] {
        &self.terms
    }

    pub fn source(&self) -> &Coefficient {
        &self.source
    }

    pub fn boundary(&self) -> &Coefficient {
        &self.boundary
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    /// Diffusion entries `(a11, a12, a22)` at a node.
    pub fn diffusion_at(&self, n: usize, i: usize) -> (f64, f64, f64) {
        let ns = self.grid.space().len();
        (self.a11.at(n, i, ns), self.a12.at(n, i, ns), self.a22.at(n, i, ns))
    }

    pub fn advection_at(&self, n: usize, i: usize) -> (f64, f64) {
        let ns = self.grid.space().len();
        (self.bx.at(n, i, ns), self.by.at(n, i, ns))
    }

    pub fn reaction_at(&self, n: usize, i: usize) -> f64 {
        self.c.at(n, i, self.grid.space().len())
    }

    /// True when no operator coefficient depends on time.
    pub fn is_time_invariant(&self) -> bool {
        [&self.a11, &self.a12, &self.a22, &self.bx, &self.by, &self.c]
            .into_iter()
            .chain(self.terms.iter().map(|t| &t.coeff))
            .all(Coefficient::is_time_invariant)
    }

    pub fn with_source(&self, f: Coefficient) -> Result<Self> {
        let mut p = self.clone();
        p.source = f;
        p.validate()?;
        Ok(p)
    }

    pub fn with_boundary(&self, g: Coefficient) -> Result<Self> {
        let mut p = self.clone();
        p.boundary = g;
        p.validate()?;
        Ok(p)
    }

    pub fn with_initial(&self, u0: Vec<f64>) -> Result<Self> {
        let mut p = self.clone();
        p.initial = u0;
        p.validate()?;
        Ok(p)
    }

    /// Same operator with zero source, initial value and boundary data.
    pub fn homogeneous(&self) -> Self {
        let mut p = self.clone();
        p.source = 0.0.into();
        p.boundary = 0.0.into();
        p.initial = vec![0.0; self.initial.len()];
        p
    }

    /// Spatial operator `-a:D^2 u + b.grad u + c u` at an interior node.
    fn spatial_at(&self, u: &[f64], n: usize, i: usize) -> f64 {
        let sg = self.grid.space();
        let hx = sg.x().step();
        let (a11, a12, a22) = self.diffusion_at(n, i);
        let (bx, by) = self.advection_at(n, i);
        let c = self.reaction_at(n, i);
        let uxx = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (hx * hx);
        let ux = (u[i + 1] - u[i - 1]) / (2.0 * hx);
        let mut out = -a11 * uxx + bx * ux + c * u[i];
        if let Some(ay) = sg.y() {
            let hy = ay.step();
            let nx = sg.nx();
            let uyy = (u[i + nx] - 2.0 * u[i] + u[i - nx]) / (hy * hy);
            let uy = (u[i + nx] - u[i - nx]) / (2.0 * hy);
            let uxy = (u[i + nx + 1] - u[i + nx - 1] - u[i - nx + 1] + u[i - nx - 1]) / (4.0 * hx * hy);
            out += -a22 * uyy - 2.0 * a12 * uxy + by * uy;
        }
        out
    }

    /// Assembles `diag * I + spatial operator` at time node `n`, identity on boundary rows.
    #[allow(clippy::needless_range_loop)]
    fn assemble(&self, n: usize, diag: &[f64]) -> BandMatrix {
        let sg = self.grid.space();
        let ns = sg.len();
        let nx = sg.nx();
        let bw = if sg.dim() == 2 { nx + 1 } else { 1 };
        let mut m = BandMatrix::zeros(ns, bw, bw);
        let hx = sg.x().step();
        for i in 0..ns {
            if sg.is_boundary(i) {
                m.add(i, i, 1.0);
                continue;
            }
            let (a11, a12, a22) = self.diffusion_at(n, i);
            let (bx, by) = self.advection_at(n, i);
            let c = self.reaction_at(n, i);
            let kx = a11 / (hx * hx);
            m.add(i, i, diag[i] + 2.0 * kx + c);
            m.add(i, i - 1, -kx - bx / (2.0 * hx));
            m.add(i, i + 1, -kx + bx / (2.0 * hx));
            if let Some(ay) = sg.y() {
                let hy = ay.step();
                let ky = a22 / (hy * hy);
                m.add(i, i, 2.0 * ky);
                m.add(i, i - nx, -ky - by / (2.0 * hy));
                m.add(i, i + nx, -ky + by / (2.0 * hy));
                let kxy = -2.0 * a12 / (4.0 * hx * hy);
                m.add(i, i + nx + 1, kxy);
                m.add(i, i + nx - 1, -kxy);
                m.add(i, i - nx + 1, -kxy);
                m.add(i, i - nx - 1, kxy);
            }
        }
        m
    }
}

/// Discrete `L u` at interior space nodes and time nodes `n >= 1`; zero elsewhere.
///
/// `u_t` is a backward difference, Caputo terms use the L1 scheme and space
/// derivatives are central differences.
pub fn apply_l(problem: &FadeProblem, u: &GridFunction) -> Result<GridFunction> {
    apply_operator(problem, u, OperatorForm::Caputo)
}

pub fn apply_operator(problem: &FadeProblem, u: &GridFunction, form: OperatorForm) -> Result<GridFunction> {
    ensure!(u.grid() == problem.grid, Shape, "grid function and problem live on different grids");
    let g = problem.grid;
    let sg = g.space();
    let ns = sg.len();
    let nt = g.time().nodes();
    let dt = g.time().step();
    let mut out = vec![0.0; g.len()];
    for n in 1..nt {
        let cur = u.slice(n);
        let prev = u.slice(n - 1);
        for i in (0..ns).filter(|&i| !sg.is_boundary(i)) {
            out[n * ns + i] = (cur[i] - prev[i]) / dt + problem.spatial_at(cur, n, i);
        }
    }
    if form != OperatorForm::Truncated {
        for term in &problem.terms {
            let frac = match form {
                OperatorForm::Caputo => caputo_field(u, term.order),
                _ => u.map_traces(|tr| rl_derivative(tr, term.order))?,
            };
            for n in 1..nt {
                for i in (0..ns).filter(|&i| !sg.is_boundary(i)) {
                    out[n * ns + i] += term.coeff.at(n, i, ns) * frac.at(n, i);
                }
            }
        }
    }
    Ok(GridFunction::from_raw(g, out))
}

/// The operator evaluated at every node from nodal derivative fields.
///
/// Same operator as [`apply_operator`], but time derivatives are central
/// (one-sided at the ends) and space derivatives fall back to one-sided
/// stencils on the boundary, so the result is defined on the closed grid.
pub fn apply_operator_closed(problem: &FadeProblem, u: &GridFunction, form: OperatorForm) -> Result<GridFunction> {
    ensure!(u.grid() == problem.grid, Shape, "grid function and problem live on different grids");
    let g = problem.grid;
    let ns = g.space().len();
    let planar = g.space().dim() == 2;
    let (ut, ux, uxx) = (u.dt(), u.dx(), u.dxx());
    let (uy, uyy, uxy) =
        if planar { (u.dy(), u.dyy(), u.dxy()) } else { (GridFunction::zeros(g), GridFunction::zeros(g), GridFunction::zeros(g)) };
    let mut out = vec![0.0; g.len()];
    for n in 0..g.time().nodes() {
        for i in 0..ns {
            let k = n * ns + i;
            let (a11, a12, a22) = problem.diffusion_at(n, i);
            let (bx, by) = problem.advection_at(n, i);
            let c = problem.reaction_at(n, i);
            let v = |f: &GridFunction| f.values()[k];
            out[k] = v(&ut) - a11 * v(&uxx) - 2.0 * a12 * v(&uxy) - a22 * v(&uyy) + bx * v(&ux) + by * v(&uy) + c * u.values()[k];
        }
    }
    if form != OperatorForm::Truncated {
        for term in &problem.terms {
            let frac = match form {
                OperatorForm::Caputo => caputo_field(u, term.order),
                _ => u.map_traces(|tr| rl_derivative(tr, term.order))?,
            };
            for (k, o) in out.iter_mut().enumerate() {
                *o += term.coeff.at(k / ns, k % ns, ns) * frac.values()[k];
            }
        }
    }
    Ok(GridFunction::from_raw(g, out))
}

/// Spatial operator plus L1 Caputo terms at time node `n` (interior nodes only).
///
/// The time derivative is left to the caller.
pub(crate) fn operator_without_dt_at(problem: &FadeProblem, u: &GridFunction, n: usize) -> Vec<f64> {
    let g = problem.grid;
    let sg = g.space();
    let ns = sg.len();
    let dt = g.time().step();
    let cur = u.slice(n);
    let mut out = vec![0.0; ns];
    for i in (0..ns).filter(|&i| !sg.is_boundary(i)) {
        out[i] = problem.spatial_at(cur, n, i);
    }
    for term in &problem.terms {
        let b = l1_weights(term.order, n.max(1));
        let kappa = l1_scale(term.order, dt);
        for i in (0..ns).filter(|&i| !sg.is_boundary(i)) {
            let hist: f64 = (0..n).map(|k| b[k] * (u.at(n - k, i) - u.at(n - k - 1, i))).sum();
            out[i] += term.coeff.at(n, i, ns) * kappa * hist;
        }
    }
    out
}

/// L1 Caputo derivative of every spatial trace.
pub fn caputo_field(u: &GridFunction, alpha: f64) -> GridFunction {
    let g = u.grid();
    let ns = g.space().len();
    let nt = g.time().nodes();
    let b = l1_weights(alpha, nt);
    let kappa = l1_scale(alpha, g.time().step());
    let v = u.values();
    let mut inc = vec![0.0; g.len()];
    for n in 1..nt {
        for i in 0..ns {
            inc[n * ns + i] = v[n * ns + i] - v[(n - 1) * ns + i];
        }
    }
    let mut out = vec![0.0; g.len()];
    for n in 1..nt {
        let row = &mut out[n * ns..(n + 1) * ns];
        for (k, bk) in b.iter().enumerate().take(n) {
            let src = &inc[(n - k) * ns..(n - k + 1) * ns];
            for (o, s) in row.iter_mut().zip(src) {
                *o += bk * s;
            }
        }
        row.iter_mut().for_each(|o| *o *= kappa);
    }
    GridFunction::from_raw(g, out)
}

/// Marches the scheme from the initial value; boundary nodes take the Dirichlet data.
pub fn solve_fade(problem: &FadeProblem) -> Result<GridFunction> {
    let g = problem.grid;
    let sg = g.space();
    let ns = sg.len();
    let nt = g.time().nodes();
    let dt = g.time().step();
    let weights: Vec<(Vec<f64>, f64)> = problem.terms.iter().map(|t| (l1_weights(t.order, nt), l1_scale(t.order, dt))).collect();
    let boundary: Vec<usize> = (0..ns).filter(|&i| sg.is_boundary(i)).collect();

    let diag_at = |n: usize| -> Vec<f64> {
        (0..ns)
            .map(|i| 1.0 / dt + problem.terms.iter().zip(&weights).map(|(t, (_, kappa))| t.coeff.at(n, i, ns) * kappa).sum::<f64>())
            .collect()
    };

    let mut u = vec![0.0; g.len()];
    u[..ns].copy_from_slice(&problem.initial);
    for &i in &boundary {
        u[i] = problem.boundary.at(0, i, ns);
    }
    let invariant = problem.is_time_invariant();
    let mut lu: Option<BandLu> = None;
    let mut diag = diag_at(1);
    let mut hist = vec![0.0; ns];
    let mut rhs = vec![0.0; ns];
    for n in 1..nt {
        if !invariant || lu.is_none() {
            if !invariant {
                diag = diag_at(n);
            }
            lu = Some(problem.assemble(n, &diag).factor()?);
        }
        for i in 0..ns {
            rhs[i] = problem.source.at(n, i, ns) + diag[i] * u[(n - 1) * ns + i];
        }
        for (t, (b, kappa)) in problem.terms.iter().zip(&weights) {
            hist.iter_mut().for_each(|h| *h = 0.0);
            for (k, bk) in b.iter().enumerate().take(n).skip(1) {
                let m = n - k;
                let (cur, prev) = (&u[m * ns..(m + 1) * ns], &u[(m - 1) * ns..m * ns]);
                for i in 0..ns {
                    hist[i] += bk * (cur[i] - prev[i]);
                }
            }
            for i in 0..ns {
                rhs[i] -= t.coeff.at(n, i, ns) * kappa * hist[i];
            }
        }
        for &i in &boundary {
            rhs[i] = problem.boundary.at(n, i, ns);
        }
        lu.as_ref().expect("factored above").solve_in_place(&mut rhs);
        ensure!(rhs.iter().all(|v| v.is_finite()), Numerical, "non-finite solution at time step {n}");
        u[n * ns..(n + 1) * ns].copy_from_slice(&rhs);
    }
    Ok(GridFunction::from_raw(g, u))
}

/// Conormal derivative `sum a_ij nu_i d_j u` on a face, one series per face node.
///
/// The normal derivative uses the second-order one-sided stencil, the
/// tangential one central differences (one-sided at corners).
pub fn boundary_flux(problem: &FadeProblem, u: &GridFunction, face: Face) -> Result<Vec<TimeSeries>> {
    ensure!(u.grid() == problem.grid, Shape, "grid function and problem live on different grids");
    let g = problem.grid;
    let sg = g.space();
    let nodes = face.nodes(sg)?;
    let nt = g.time().nodes();
    let ux = u.dx();
    let uy = u.dy();
    let hx = sg.x().step();
    let hy = sg.y().map_or(1.0, |a| a.step());
    let nx = sg.nx();
    let mut out = Vec::with_capacity(nodes.len());
    for &i in &nodes {
        let mut v = vec![0.0; nt];
        for (n, slot) in v.iter_mut().enumerate() {
            let s = u.slice(n);
            let (a11, a12, a22) = problem.diffusion_at(n, i);
            *slot = match face {
                Face::XHi => a11 * (3.0 * s[i] - 4.0 * s[i - 1] + s[i - 2]) / (2.0 * hx) + a12 * uy.at(n, i),
                Face::XLo => -(a11 * (-3.0 * s[i] + 4.0 * s[i + 1] - s[i + 2]) / (2.0 * hx) + a12 * uy.at(n, i)),
                Face::YHi => a22 * (3.0 * s[i] - 4.0 * s[i - nx] + s[i - 2 * nx]) / (2.0 * hy) + a12 * ux.at(n, i),
                Face::YLo => -(a22 * (-3.0 * s[i] + 4.0 * s[i + nx] - s[i + 2 * nx]) / (2.0 * hy) + a12 * ux.at(n, i)),
            };
        }
        out.push(TimeSeries::from_raw(g.time(), v));
    }
    Ok(out)
}

/// Writes `x[,y],t,u` rows, time-major.
pub fn write_solution_csv<W: Write>(mut out: W, u: &GridFunction) -> Result<()> {
    let g = u.grid();
    let sg = g.space();
    let two = sg.dim() == 2;
    writeln!(out, "{}", if two { "x,y,t,u" } else { "x,t,u" })?;
    for (n, t) in g.time().iter().enumerate() {
        for (i, v) in u.slice(n).iter().enumerate() {
            let p = sg.point(i);
            if two {
                writeln!(out, "{},{},{t},{v}", p[0], p[1])?;
            } else {
                writeln!(out, "{},{t},{v}", p[0])?;
            }
        }
    }
    Ok(())
}

/// Magic bytes opening a binary grid-function dump.
pub const BINARY_MAGIC: &[u8; 8] = b"FRADEGF1";

/// Binary dump, all little-endian:
/// magic `FRADEGF1`, `u32` space dimension, `f64` extents (`x_lo x_hi [y_lo y_hi]`),
/// `f64` horizon, `u64` node counts (`nx [ny] nt`), then the values time-major
/// with `x` fastest.
pub fn write_binary<W: Write>(mut out: W, u: &GridFunction) -> Result<()> {
    let g = u.grid();
    let sg = g.space();
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&(sg.dim() as u32).to_le_bytes())?;
    let mut axes = vec![sg.x()];
    axes.extend(sg.y());
    for a in &axes {
        out.write_all(&a.lo().to_le_bytes())?;
        out.write_all(&a.hi().to_le_bytes())?;
    }
    out.write_all(&g.time().horizon().to_le_bytes())?;
    for a in &axes {
        out.write_all(&(a.nodes() as u64).to_le_bytes())?;
    }
    out.write_all(&(g.time().nodes() as u64).to_le_bytes())?;
    for v in u.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<GridFunction> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    ensure!(&magic == BINARY_MAGIC, Input, "not a grid-function dump (bad magic)");
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    ensure!(dim == 1 || dim == 2, Input, "unsupported dimension {dim} in dump");
    let mut b8 = [0u8; 8];
    let mut f64_next = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    let mut ext = Vec::new();
    for _ in 0..dim {
        ext.push((f64_next(&mut input)?, f64_next(&mut input)?));
    }
    let horizon = f64_next(&mut input)?;
    let mut counts = Vec::new();
    for _ in 0..=dim {
        let mut c = [0u8; 8];
        input.read_exact(&mut c)?;
        counts.push(u64::from_le_bytes(c) as usize);
    }
    let x = Axis::new(ext[0].0, ext[0].1, counts[0])?;
    let sg = if dim == 2 { SpaceGrid::rect(x, Axis::new(ext[1].0, ext[1].1, counts[1])?) } else { SpaceGrid::line(x) };
    let grid = SpaceTimeGrid::new(sg, TimeGrid::new(horizon, counts[dim])?);
    let mut raw = vec![0u8; grid.len() * 8];
    input.read_exact(&mut raw).map_err(|e| FradeError::Input(format!("truncated dump: {e}")))?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    GridFunction::new(grid, values)
}
