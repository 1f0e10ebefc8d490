//! Both sides of the weighted (Carleman-type) inequalities, evaluated as
//! itemized quadratures on a space-time grid.
//!
//! Volume and face terms are summed cell by cell. Fields are averaged over the
//! cell corners. The weight uses an exponentially fitted rule: `phi` is taken
//! linear across the cell, so the cell mean of `exp(2 s phi)` is the center
//! value times a product of `sinh(a)/a` factors. A plain midpoint rule misses
//! the peak of the weight once `s |grad phi| h` is large and the ratios then
//! collapse. Every weighted term is accumulated in log space because
//! `exp(2 s phi)` overflows long before the sweeps end.
//!
//! Boundary terms enter the ratio with the weight of the matching volume
//! term, evaluated on the faces, in place of the unspecified `C e^{C s}`
//! factor. Their unweighted face integrals are reported alongside.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ensure, FradeError, Result};
use crate::fade::{apply_operator_closed, caputo_field, FadeProblem, OperatorForm};
use crate::frac_calc::{diff1, gcd, rl_derivative, rl_integral, FractionalOrder, TimeSeries};
use crate::geometry::{Cutoff, Weight, WeightFamily};
use crate::grid::{Axis, GridFunction, SpaceTimeGrid};

/// Running `ln(sum exp(l_i))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSum {
    max: f64,
    acc: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self { max: f64::NEG_INFINITY, acc: 0.0 }
    }
}

impl LogSum {
    pub fn add_ln(&mut self, l: f64) {
        if l == f64::NEG_INFINITY {
            return;
        }
        if l <= self.max {
            self.acc += (l - self.max).exp();
        } else {
            self.acc = self.acc * (self.max - l).exp() + 1.0;
            self.max = l;
        }
    }

    pub fn merge(&mut self, other: LogSum) {
        if other.max == f64::NEG_INFINITY {
            return;
        }
        self.add_ln(other.max + other.acc.ln());
    }

    /// `-inf` for an empty sum.
    pub fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.acc.ln()
        }
    }
}

/// Side of the inequality a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lhs,
    Rhs,
    Boundary,
}

/// One named integral, stored as its logarithm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub side: Side,
    pub ln_value: f64,
}

impl Term {
    /// May be `inf` when the logarithm exceeds the `f64` range.
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// Which inequality a report belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    /// Sub-diffusion weight, full space-time estimate for the truncated operator.
    SubDiffusion,
    /// Caputo term bounded by the weighted first time derivative.
    FractionalBound,
    /// Parabolic estimate with a power `tau` of the weight.
    WeightedParabolic,
    /// Rational-order estimate with the exponent ladder and a cut-off.
    RationalOrder,
}

/// Itemized evaluation of one inequality at one `(s, lambda)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarlemanReport {
    pub kind: EstimateKind,
    pub s: f64,
    pub lambda: f64,
    pub beta: f64,
    pub family: &'static str,
    pub order: Option<(u32, u32)>,
    pub tau: Option<i32>,
    pub terms: Vec<Term>,
    /// Face integrals without any weight, per boundary term name.
    pub raw_boundary: Vec<(String, f64)>,
    pub ln_lhs: f64,
    /// Includes the weighted boundary terms.
    pub ln_rhs: f64,
}

impl CarlemanReport {
    /// `LHS / RHS`, undefined when the right-hand side vanishes.
    pub fn ratio(&self) -> Option<f64> {
        if self.ln_rhs == f64::NEG_INFINITY {
            None
        } else {
            Some((self.ln_lhs - self.ln_rhs).exp())
        }
    }

    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }
}

/// Cell selection: an axis-aligned box snapped to whole cells, optionally
/// intersected with a superlevel set `{phi > c}` tested at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Region {
    pub x: Option<(f64, f64)>,
    pub y: Option<(f64, f64)>,
    pub t: Option<(f64, f64)>,
    pub phi_above: Option<f64>,
}

impl Region {
    pub fn whole() -> Self {
        Self::default()
    }

    pub fn boxed(x: (f64, f64), t: (f64, f64)) -> Self {
        Self { x: Some(x), t: Some(t), ..Self::default() }
    }

    pub fn with_y(self, y: (f64, f64)) -> Self {
        Self { y: Some(y), ..self }
    }

    pub fn above(c: f64) -> Self {
        Self { phi_above: Some(c), ..Self::default() }
    }

    fn contains(&self, p: [f64; 2], t: f64, phi: f64) -> bool {
        let inside = |iv: Option<(f64, f64)>, v: f64| iv.is_none_or(|(a, b)| a < v && v < b);
        inside(self.x, p[0]) && inside(self.y, p[1]) && inside(self.t, t) && self.phi_above.is_none_or(|c| phi > c)
    }
}

/// Node index range `[lo, hi]` spanned by the cells whose centers lie in `(a, b)`.
fn snap(nodes: usize, center: impl Fn(usize) -> f64, iv: Option<(f64, f64)>) -> Option<(usize, usize)> {
    let Some((a, b)) = iv else {
        return Some((0, nodes - 1));
    };
    let cells: Vec<usize> = (0..nodes - 1).filter(|&c| a < center(c) && center(c) < b).collect();
    Some((*cells.first()?, cells.last()? + 1))
}

/// Node box `[n0, n1] x [i0, i1] x [j0, j1]` of a region.
#[derive(Debug, Clone, Copy, PartialEq)]
struct NodeBox {
    t: (usize, usize),
    x: (usize, usize),
    y: (usize, usize),
}

fn node_box(grid: SpaceTimeGrid, region: &Region) -> Result<NodeBox> {
    let tg = grid.time();
    let sg = grid.space();
    let mid = |a: Axis| move |c: usize| 0.5 * (a.node(c) + a.node(c + 1));
    let t = snap(tg.nodes(), |c| 0.5 * (tg.node(c) + tg.node(c + 1)), region.t);
    let x = snap(sg.nx(), mid(sg.x()), region.x);
    let y = match sg.y() {
        Some(a) => snap(a.nodes(), mid(a), region.y),
        None => Some((0, 0)),
    };
    match (t, x, y) {
        (Some(t), Some(x), Some(y)) => Ok(NodeBox { t, x, y }),
        _ => Err(FradeError::Parameter("region contains no grid cell".into())),
    }
}

/// One grid node on the faces of a node box.
#[derive(Debug, Clone, Copy)]
struct FaceNode {
    n: usize,
    i: usize,
    /// On the `t = 0` face.
    initial: bool,
}

/// One cell of a box face: its corner nodes, center and half extent per axis
/// (zero along the face normal).
#[derive(Debug, Clone)]
struct FaceCell {
    corners: Vec<FaceNode>,
    center: ([f64; 2], f64),
    half: [f64; 3],
}

/// Cells tiling the faces of a node box.
fn box_faces(grid: SpaceTimeGrid, b: &NodeBox) -> Vec<FaceCell> {
    let sg = grid.space();
    let tg = grid.time();
    let planar = sg.dim() == 2;
    let (xa, ya) = (sg.x(), sg.y());
    let mut out = Vec::new();
    let mut push = |ts: &[(usize, bool)], xs: &[(usize, bool)], ys: &[(usize, bool)]| {
        // each entry is (index, spans): spans means the cell [index, index+1]
        for &(n, tspan) in ts {
            for &(iy, yspan) in ys {
                for &(ix, xspan) in xs {
                    let mut corners = Vec::with_capacity(4);
                    for dn in 0..=usize::from(tspan) {
                        for dy in 0..=usize::from(yspan) {
                            for dx in 0..=usize::from(xspan) {
                                let nn = n + dn;
                                corners.push(FaceNode { n: nn, i: sg.index(ix + dx, iy + dy), initial: nn == 0 });
                            }
                        }
                    }
                    let mid = |a: Axis, k: usize, span: bool| if span { 0.5 * (a.node(k) + a.node(k + 1)) } else { a.node(k) };
                    let x = mid(xa, ix, xspan);
                    let y = ya.map_or(0.0, |a| mid(a, iy, yspan));
                    let t = if tspan { 0.5 * (tg.node(n) + tg.node(n + 1)) } else { tg.node(n) };
                    let h = |span: bool, step: f64| if span { 0.5 * step } else { 0.0 };
                    let half = [h(xspan, xa.step()), ya.map_or(0.0, |a| h(yspan, a.step())), h(tspan, tg.step())];
                    out.push(FaceCell { corners, center: ([x, y], t), half });
                }
            }
        }
    };
    let span = |lo: usize, hi: usize| (lo..hi).map(|k| (k, true)).collect::<Vec<_>>();
    let fixed = |lo: usize, hi: usize| vec![(lo, false), (hi, false)];
    let ys_span = if planar { span(b.y.0, b.y.1) } else { vec![(0, false)] };
    push(&fixed(b.t.0, b.t.1), &span(b.x.0, b.x.1), &ys_span);
    push(&span(b.t.0, b.t.1), &fixed(b.x.0, b.x.1), &ys_span);
    if planar {
        push(&span(b.t.0, b.t.1), &span(b.x.0, b.x.1), &fixed(b.y.0, b.y.1));
    }
    out
}

/// Weight law `s^a lambda^b phi^c` of one integrand.
#[derive(Debug, Clone)]
struct Integrand {
    name: String,
    side: Side,
    powers: [f64; 3],
}

fn it(name: impl Into<String>, side: Side, powers: [f64; 3]) -> Integrand {
    Integrand { name: name.into(), side, powers }
}

/// Quadrature points with `ln phi`, `phi` and one value per integrand,
/// quadrature weights already folded into the values.
#[derive(Debug, Clone, Default)]
struct Points {
    ln_phi: Vec<f64>,
    phi: Vec<f64>,
    vals: Vec<f64>,
    /// Half the change of phi across the cell along each axis.
    spread: Vec<[f64; 3]>,
    integrands: Vec<Integrand>,
}

/// `ln(sinh(a) / a)`, stable for large `a`.
fn ln_sinhc(a: f64) -> f64 {
    let a = a.abs();
    if a < 1e-4 {
        a * a / 6.0
    } else {
        a - (2.0 * a).ln() + (-(-2.0 * a).exp()).ln_1p()
    }
}

impl Points {
    fn new(integrands: Vec<Integrand>) -> Self {
        Self { integrands, ..Self::default() }
    }

    fn push(&mut self, ln_phi: f64, spread: [f64; 3], vals: &[f64]) {
        debug_assert_eq!(vals.len(), self.integrands.len());
        self.spread.push(spread);
        self.ln_phi.push(ln_phi);
        self.phi.push(ln_phi.exp());
        self.vals.extend_from_slice(vals);
    }

    fn sums(&self, s: f64, lambda: f64) -> Vec<LogSum> {
        let slots = self.integrands.len();
        let (ln_s, ln_l) = (s.ln(), lambda.ln());
        // cell average of exp(2 s phi) with phi linear across the cell
        let fit: Vec<f64> = self.spread.iter().map(|g| g.iter().map(|&h| ln_sinhc(2.0 * s * h)).sum()).collect();
        (0..slots)
            .map(|k| {
                let [a, b, c] = self.integrands[k].powers;
                let base = a * ln_s + b * ln_l;
                let mut acc = LogSum::default();
                for (q, (&lp, &p)) in self.ln_phi.iter().zip(&self.phi).enumerate() {
                    let v = self.vals[q * slots + k];
                    if v > 0.0 {
                        acc.add_ln(base + c * lp + 2.0 * s * p + fit[q] + v.ln());
                    }
                }
                acc
            })
            .collect()
    }

    /// Unweighted integral of every named integrand.
    fn raw(&self) -> Vec<(String, f64)> {
        let slots = self.integrands.len();
        let mut out: Vec<(String, f64)> = Vec::new();
        for (k, ig) in self.integrands.iter().enumerate() {
            let v: f64 = self.vals.iter().skip(k).step_by(slots.max(1)).sum();
            match out.iter_mut().find(|(n, _)| *n == ig.name) {
                Some(slot) => slot.1 += v,
                None => out.push((ig.name.clone(), v)),
            }
        }
        out
    }
}

/// Everything independent of `s`.
#[derive(Debug, Clone)]
struct Prepared {
    kind: EstimateKind,
    weight: Weight,
    order: Option<(u32, u32)>,
    tau: Option<i32>,
    volume: Points,
    faces: Points,
}

impl Prepared {
    fn report(&self, s: f64) -> Result<CarlemanReport> {
        ensure!(s >= 1.0 && s.is_finite(), Parameter, "s must be >= 1, got {s}");
        let lambda = self.weight.params.lambda;
        let mut named: Vec<(String, Side, LogSum)> = Vec::new();
        let (mut lhs, mut rhs) = (LogSum::default(), LogSum::default());
        for pts in [&self.volume, &self.faces] {
            for (ig, sum) in pts.integrands.iter().zip(pts.sums(s, lambda)) {
                match ig.side {
                    Side::Lhs => lhs.merge(sum),
                    _ => rhs.merge(sum),
                }
                match named.iter_mut().find(|(n, _, _)| *n == ig.name) {
                    Some(slot) => slot.2.merge(sum),
                    None => named.push((ig.name.clone(), ig.side, sum)),
                }
            }
        }
        let terms = named.into_iter().map(|(name, side, sum)| Term { name, side, ln_value: sum.ln() }).collect();
        let family = match self.weight.params.family {
            WeightFamily::Sub { .. } => "sub",
            WeightFamily::Regular { .. } => "regular",
        };
        Ok(CarlemanReport {
            kind: self.kind,
            s,
            lambda,
            beta: self.weight.params.beta,
            family,
            order: self.order,
            tau: self.tau,
            terms,
            raw_boundary: self.faces.raw(),
            ln_lhs: lhs.ln(),
            ln_rhs: rhs.ln(),
        })
    }
}

/// Anything that can be evaluated at a given `s`.
pub trait Estimate: Sync {
    fn report(&self, s: f64) -> Result<CarlemanReport>;
}

/// Cell-center geometry and corner averages of nodal fields.
struct Cells {
    centers: Vec<([f64; 2], f64)>,
    corners: Vec<[usize; 8]>,
    n_corners: usize,
}

fn cells_of(grid: SpaceTimeGrid, region: &Region, weight: &Weight) -> Cells {
    let sg = grid.space();
    let tg = grid.time();
    let ns = sg.len();
    let planar = sg.dim() == 2;
    let (nx, ny) = (sg.nx(), sg.ny());
    let ycells = if planar { ny - 1 } else { 1 };
    let mut centers = Vec::new();
    let mut corners = Vec::new();
    for n in 0..tg.nodes() - 1 {
        let t = 0.5 * (tg.node(n) + tg.node(n + 1));
        for iy in 0..ycells {
            for ix in 0..nx - 1 {
                let x = 0.5 * (sg.x().node(ix) + sg.x().node(ix + 1));
                let y = sg.y().map_or(0.0, |a| 0.5 * (a.node(iy) + a.node(iy + 1)));
                let p = [x, y];
                if !region.contains(p, t, weight.phi(p, t)) {
                    continue;
                }
                let i = sg.index(ix, iy);
                let mut c = [0usize; 8];
                let base = [n * ns + i, (n + 1) * ns + i];
                for (q, b) in base.iter().enumerate() {
                    c[4 * q] = *b;
                    c[4 * q + 1] = b + 1;
                    if planar {
                        c[4 * q + 2] = b + nx;
                        c[4 * q + 3] = b + nx + 1;
                    }
                }
                if !planar {
                    c = [c[0], c[1], c[4], c[5], 0, 0, 0, 0];
                }
                centers.push((p, t));
                corners.push(c);
            }
        }
    }
    Cells { centers, corners, n_corners: if planar { 8 } else { 4 } }
}

impl Cells {
    fn avg(&self, cell: usize, f: &[f64]) -> f64 {
        let c = &self.corners[cell];
        c[..self.n_corners].iter().map(|&k| f[k]).sum::<f64>() / self.n_corners as f64
    }

    fn avg_sq(&self, cell: usize, f: &[f64]) -> f64 {
        let a = self.avg(cell, f);
        a * a
    }

    /// Fills `pts` with one point per cell; `vals(cell, out)` writes the integrands.
    fn fill(&self, grid: SpaceTimeGrid, weight: &Weight, pts: &mut Points, mut vals: impl FnMut(usize, &mut Vec<f64>)) {
        let vol = grid.time().step() * grid.space().cell_volume();
        let lam = weight.params.lambda;
        let mut buf = Vec::with_capacity(pts.integrands.len());
        let hx = 0.5 * grid.space().x().step();
        let hy = grid.space().y().map_or(0.0, |a| 0.5 * a.step());
        let ht = 0.5 * grid.time().step();
        for (c, &(p, t)) in self.centers.iter().enumerate() {
            buf.clear();
            vals(c, &mut buf);
            buf.iter_mut().for_each(|v| *v *= vol);
            let half = |q: [f64; 2], r: f64, q2: [f64; 2], r2: f64| 0.5 * (weight.phi(q, r) - weight.phi(q2, r2));
            let spread = [
                half([p[0] + hx, p[1]], t, [p[0] - hx, p[1]], t),
                if hy > 0.0 { half([p[0], p[1] + hy], t, [p[0], p[1] - hy], t) } else { 0.0 },
                half(p, t + ht, p, t - ht),
            ];
            pts.push(lam * weight.psi(p, t), spread, &buf);
        }
    }
}

/// Fills `pts` with the face cells of `b`; `vals(node, out)` writes the
/// integrands at one corner node, averaged over the cell.
fn fill_faces(grid: SpaceTimeGrid, b: &NodeBox, weight: &Weight, pts: &mut Points, mut vals: impl FnMut(&FaceNode, &mut Vec<f64>)) {
    let lam = weight.params.lambda;
    let slots = pts.integrands.len();
    let mut buf = Vec::with_capacity(slots);
    let mut acc = vec![0.0; slots];
    for cell in box_faces(grid, b) {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for node in &cell.corners {
            buf.clear();
            vals(node, &mut buf);
            acc.iter_mut().zip(&buf).for_each(|(a, v)| *a += v);
        }
        let area: f64 = cell.half.iter().filter(|h| **h > 0.0).map(|h| 2.0 * h).product();
        let scale = area / cell.corners.len() as f64;
        acc.iter_mut().for_each(|a| *a *= scale);
        let (p, t) = cell.center;
        let [hx, hy, ht] = cell.half;
        let spread = [
            0.5 * (weight.phi([p[0] + hx, p[1]], t) - weight.phi([p[0] - hx, p[1]], t)),
            0.5 * (weight.phi([p[0], p[1] + hy], t) - weight.phi([p[0], p[1] - hy], t)),
            0.5 * (weight.phi(p, t + ht) - weight.phi(p, t - ht)),
        ];
        pts.push(lam * weight.psi(p, t), spread, &acc);
    }
}

fn check_grid(u: &GridFunction, problem: &FadeProblem) -> Result<()> {
    ensure!(u.grid() == problem.grid(), Shape, "grid function and problem live on different grids");
    Ok(())
}

/// Estimate with the sub-diffusion weight on a box `D` of cells:
///
/// LHS: `1/(s phi) |u_t|^2 + s lambda^2 phi |grad u|^2 + s^3 lambda^4 phi^3 u^2`,
/// RHS: `|L~u|^2` (fractional terms dropped) plus boundary terms
/// `int_dD (|grad u|^2 + u^2)` and `int_{dD minus t=0} |u_t|^2`.
pub struct SubDiffusionEstimate(Prepared);

impl SubDiffusionEstimate {
    pub fn new(u: &GridFunction, problem: &FadeProblem, weight: &Weight, region: &Region) -> Result<Self> {
        check_grid(u, problem)?;
        ensure!(weight.params.is_sub(), FamilyMismatch, "this estimate needs the sub-diffusion weight");
        ensure!(region.phi_above.is_none(), Parameter, "the region must be a box of cells");
        let grid = u.grid();
        let b = node_box(grid, region)?;
        let cells = cells_of(grid, region, weight);
        let (ut, ux, uy) = (u.dt(), u.dx(), u.dy());
        let lu = apply_operator_closed(problem, u, OperatorForm::Truncated)?;
        let mut volume = Points::new(vec![
            it("lhs_dt", Side::Lhs, [-1.0, 0.0, -1.0]),
            it("lhs_grad", Side::Lhs, [1.0, 2.0, 1.0]),
            it("lhs_u", Side::Lhs, [3.0, 4.0, 3.0]),
            it("rhs_source", Side::Rhs, [0.0, 0.0, 0.0]),
        ]);
        cells.fill(grid, weight, &mut volume, |c, out| {
            out.extend([
                cells.avg_sq(c, ut.values()),
                cells.avg_sq(c, ux.values()) + cells.avg_sq(c, uy.values()),
                cells.avg_sq(c, u.values()),
                cells.avg_sq(c, lu.values()),
            ])
        });
        // face terms carry the weights of the matching volume terms
        let mut faces = Points::new(vec![
            it("rhs_bdy", Side::Boundary, [1.0, 2.0, 1.0]),
            it("rhs_bdy", Side::Boundary, [3.0, 4.0, 3.0]),
            it("rhs_bdy_dt", Side::Boundary, [-1.0, 0.0, -1.0]),
        ]);
        let ns = grid.space().len();
        fill_faces(grid, &b, weight, &mut faces, |f, out| {
            let k = f.n * ns + f.i;
            let v = |g: &GridFunction| g.values()[k];
            out.extend([v(&ux).powi(2) + v(&uy).powi(2), v(u).powi(2), if f.initial { 0.0 } else { v(&ut).powi(2) }])
        });
        Ok(Self(Prepared { kind: EstimateKind::SubDiffusion, weight: *weight, order: None, tau: None, volume, faces }))
    }
}

impl Estimate for SubDiffusionEstimate {
    fn report(&self, s: f64) -> Result<CarlemanReport> {
        self.0.report(s)
    }
}

/// Caputo derivative against the weighted classical derivative:
/// `int_{phi > c1} |D^alpha u|^2 e^{2 s phi}` versus
/// `int_{phi > c2} 1/(s lambda phi) |u_t|^2 e^{2 s phi}` with `c2 < c1`.
pub struct FractionalBoundEstimate(Prepared);

impl FractionalBoundEstimate {
    pub fn new(u: &GridFunction, alpha: f64, weight: &Weight, c1: f64, c2: f64) -> Result<Self> {
        let WeightFamily::Sub { alpha1 } = weight.params.family else {
            return Err(FradeError::FamilyMismatch("this estimate needs the sub-diffusion weight".into()));
        };
        ensure!(alpha > 0.0 && alpha <= alpha1, Hypothesis, "need 0 < alpha <= alpha1, got alpha = {alpha}, alpha1 = {alpha1}");
        ensure!(c2 < c1, Parameter, "level thresholds need c2 < c1, got c1 = {c1}, c2 = {c2}");
        let grid = u.grid();
        let outer = Region::above(c2);
        let cells = cells_of(grid, &outer, weight);
        let cap = caputo_field(u, alpha);
        let ut = u.dt();
        let mut volume = Points::new(vec![it("lhs_frac", Side::Lhs, [0.0, 0.0, 0.0]), it("rhs_dt", Side::Rhs, [-1.0, -1.0, -1.0])]);
        cells.fill(grid, weight, &mut volume, |c, out| {
            let (p, t) = cells.centers[c];
            let inner = weight.phi(p, t) > c1;
            out.extend([if inner { cells.avg_sq(c, cap.values()) } else { 0.0 }, cells.avg_sq(c, ut.values())])
        });
        Ok(Self(Prepared {
            kind: EstimateKind::FractionalBound,
            weight: *weight,
            order: None,
            tau: None,
            volume,
            faces: Points::default(),
        }))
    }
}

impl Estimate for FractionalBoundEstimate {
    fn report(&self, s: f64) -> Result<CarlemanReport> {
        self.0.report(s)
    }
}

/// Exact check that the sub-diffusion weight does not increase in time at
/// every grid node.
pub fn weight_is_time_monotone(weight: &Weight, grid: SpaceTimeGrid) -> bool {
    let sg = grid.space();
    (0..sg.len()).all(|i| {
        let p = sg.point(i);
        let vals: Vec<f64> = grid.time().iter().map(|t| weight.phi(p, t)).collect();
        vals.windows(2).all(|w| w[1] <= w[0])
    })
}

/// Parabolic estimate with weight power `tau` over the whole grid, for `F = L~u`:
///
/// LHS: `s^{tau-1} lambda^tau phi^{tau-1} (|u_t|^2 + |D^2 u|^2)
///       + s^{tau+1} lambda^{tau+2} phi^{tau+1} |grad u|^2
///       + s^{tau+3} lambda^{tau+4} phi^{tau+3} u^2`,
/// RHS: `(s lambda phi)^tau |F|^2` and `s^tau int_dQ (|grad_{x,t} u|^2 + u^2)`.
pub struct WeightedParabolicEstimate(Prepared);

impl WeightedParabolicEstimate {
    pub fn new(u: &GridFunction, problem: &FadeProblem, weight: &Weight, tau: i32) -> Result<Self> {
        check_grid(u, problem)?;
        ensure!(!weight.params.is_sub(), FamilyMismatch, "this estimate needs the regular weight");
        ensure!((-4..=0).contains(&tau), Parameter, "tau must lie in [-4, 0], got {tau}");
        let grid = u.grid();
        let region = Region::whole();
        let b = node_box(grid, &region)?;
        let cells = cells_of(grid, &region, weight);
        let (ut, ux, uy, uxx, uxy, uyy) = (u.dt(), u.dx(), u.dy(), u.dxx(), u.dxy(), u.dyy());
        let f = apply_operator_closed(problem, u, OperatorForm::Truncated)?;
        let tf = tau as f64;
        let mut volume = Points::new(vec![
            it("lhs_dt_hess", Side::Lhs, [tf - 1.0, tf, tf - 1.0]),
            it("lhs_grad", Side::Lhs, [tf + 1.0, tf + 2.0, tf + 1.0]),
            it("lhs_u", Side::Lhs, [tf + 3.0, tf + 4.0, tf + 3.0]),
            it("rhs_source", Side::Rhs, [tf, tf, tf]),
        ]);
        cells.fill(grid, weight, &mut volume, |c, out| {
            let hess = cells.avg_sq(c, uxx.values()) + 2.0 * cells.avg_sq(c, uxy.values()) + cells.avg_sq(c, uyy.values());
            out.extend([
                cells.avg_sq(c, ut.values()) + hess,
                cells.avg_sq(c, ux.values()) + cells.avg_sq(c, uy.values()),
                cells.avg_sq(c, u.values()),
                cells.avg_sq(c, f.values()),
            ])
        });
        let mut faces = Points::new(vec![
            it("rhs_bdy", Side::Boundary, [tf - 1.0, tf, tf - 1.0]),
            it("rhs_bdy", Side::Boundary, [tf + 1.0, tf + 2.0, tf + 1.0]),
            it("rhs_bdy", Side::Boundary, [tf + 3.0, tf + 4.0, tf + 3.0]),
        ]);
        let ns = grid.space().len();
        fill_faces(grid, &b, weight, &mut faces, |node, out| {
            let k = node.n * ns + node.i;
            let v = |g: &GridFunction| g.values()[k];
            out.extend([v(&ut).powi(2), v(&ux).powi(2) + v(&uy).powi(2), v(u).powi(2)])
        });
        Ok(Self(Prepared { kind: EstimateKind::WeightedParabolic, weight: *weight, order: None, tau: Some(tau), volume, faces }))
    }
}

impl Estimate for WeightedParabolicEstimate {
    fn report(&self, s: f64) -> Result<CarlemanReport> {
        self.0.report(s)
    }
}

/// Index ladder of the rational-order estimate for `alpha = m/k`.
///
/// `j_l = -k/2 + ((-1)^k - 1)/4 + l` for `l = 1..k`; the left-hand side runs
/// over `j_1..=j_k + k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExponentLadder {
    pub k: u32,
    pub m: u32,
    pub j1: i32,
}

/// Largest order the rational-order estimate admits.
pub const MAX_RATIONAL_ORDER: f64 = 0.75;

impl ExponentLadder {
    pub fn new(m: u32, k: u32) -> Result<Self> {
        ensure!(m > 0 && k > 0, Domain, "order m/k needs positive m and k");
        ensure!(gcd(m, k) == 1, Domain, "order {m}/{k} is not in lowest terms");
        ensure!(
            (m as f64) / (k as f64) <= MAX_RATIONAL_ORDER,
            Hypothesis,
            "order m/k = {m}/{k} exceeds 3/4; the rational-order estimate requires alpha = m/k <= 3/4"
        );
        Ok(Self { k, m, j1: Self::first_index(k) })
    }

    /// `j_1` for a given `k`.
    pub fn first_index(k: u32) -> i32 {
        let sign = if k.is_multiple_of(2) { 1 } else { -1 };
        // 4 j_1 = -2k + (sign - 1) + 4
        (-2 * k as i32 + (sign - 1) + 4) / 4
    }

    pub fn order(&self) -> FractionalOrder {
        FractionalOrder::rational(self.m, self.k).expect("validated in new")
    }

    /// `j_1..=j_k`.
    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j1..=self.j1 + self.k as i32 - 1
    }

    /// `j_1..=j_k + k`.
    pub fn lhs_indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j1..=self.j1 + 2 * self.k as i32 - 1
    }

    pub fn lhs_exponent(&self, j: i32) -> f64 {
        3.0 - self.rhs_shift(j)
    }

    pub fn rhs_exponent(&self, j: i32) -> f64 {
        -self.rhs_shift(j)
    }

    fn rhs_shift(&self, j: i32) -> f64 {
        4.0 * (j - self.j1) as f64 / self.k as f64
    }

    pub fn hessian_exponent(&self) -> f64 {
        4.0 * self.j1 as f64 / self.k as f64 - 1.0
    }

    pub fn gradient_exponent(&self) -> f64 {
        4.0 * self.j1 as f64 / self.k as f64 + 1.0
    }
}

/// `D^{j/k} h` on a trace: fractional integral for `j < 0`, Riemann-Liouville
/// derivative for `0 <= j < k`, classical time derivatives of
/// `D^{(j mod k)/k} h` for `j >= k`.
pub fn ladder_derivative(h: &TimeSeries, j: i32, k: u32) -> Result<TimeSeries> {
    let k = k as i32;
    if j < 0 {
        ensure!(-j <= k, Domain, "fractional integral order {}/{k} exceeds 1", -j);
        return rl_integral(h, -j as f64 / k as f64);
    }
    let base = if j % k == 0 { h.clone() } else { rl_derivative(h, (j % k) as f64 / k as f64)? };
    let mut out = base;
    for _ in 0..j / k {
        let g = out.grid();
        let d = diff1(out.values(), g.step());
        out = TimeSeries::new(g, d)?;
    }
    Ok(out)
}

/// Regular-weight estimate for a rational order with the exponent ladder,
/// the cut-off `chi`, the lower-order term built from derivatives of `chi`
/// and the boundary term on `dQ`.
pub struct RationalOrderEstimate(Prepared);

impl RationalOrderEstimate {
    /// `problem` must carry a single fractional term of order `m/k`;
    /// `F = L u` is computed from it.
    pub fn new(u: &GridFunction, problem: &FadeProblem, ladder: ExponentLadder, weight: &Weight, cut: Cutoff) -> Result<Self> {
        check_grid(u, problem)?;
        ensure!(!weight.params.is_sub(), FamilyMismatch, "this estimate needs the regular weight");
        let alpha = ladder.m as f64 / ladder.k as f64;
        ensure!(
            problem.terms().len() == 1 && (problem.terms()[0].order - alpha).abs() < 1e-12,
            Parameter,
            "problem must have exactly one fractional term of order {}/{}",
            ladder.m,
            ladder.k
        );
        let scale = u.max_abs();
        let first = u.slice(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        ensure!(first <= 1e-12 * scale.max(1.0), Hypothesis, "u(., 0) must vanish (max |u(., 0)| = {first})");
        let grid = u.grid();
        let planar = grid.space().dim() == 2;
        let f = apply_operator_closed(problem, u, OperatorForm::Caputo)?;
        let lhs_js: Vec<i32> = ladder.lhs_indices().collect();
        let rhs_js: Vec<i32> = ladder.indices().collect();
        let du: Vec<GridFunction> = lhs_js.iter().map(|&j| u.map_traces(|h| ladder_derivative(h, j, ladder.k))).collect::<Result<_>>()?;
        let df: Vec<GridFunction> = rhs_js.iter().map(|&j| f.map_traces(|h| ladder_derivative(h, j, ladder.k))).collect::<Result<_>>()?;
        // spatial gradients of the low-order ladder, which occupies the first k slots of du
        let nk = rhs_js.len();
        let dgrad: Vec<(GridFunction, GridFunction, GridFunction)> = du[..nk].iter().map(|g| (g.dx(), g.dy(), g.dt())).collect();
        let (ux, uy, uxx, uxy, uyy) = (u.dx(), u.dy(), u.dxx(), u.dxy(), u.dyy());

        let region = Region::whole();
        let b = node_box(grid, &region)?;
        let cells = cells_of(grid, &region, weight);
        let mut ints = vec![
            it("lhs_hess", Side::Lhs, [ladder.hessian_exponent(), 0.0, ladder.hessian_exponent()]),
            it("lhs_grad", Side::Lhs, [ladder.gradient_exponent(), 0.0, ladder.gradient_exponent()]),
        ];
        for &j in &lhs_js {
            let e = ladder.lhs_exponent(j);
            ints.push(it(format!("lhs_ladder_{j}"), Side::Lhs, [e, 0.0, e]));
        }
        for &j in &rhs_js {
            let e = ladder.rhs_exponent(j);
            ints.push(it(format!("rhs_source_{j}"), Side::Rhs, [e, 0.0, e]));
        }
        ints.push(it("low", Side::Rhs, [1.0, 0.0, 0.0]));
        let mut volume = Points::new(ints);
        cells.fill(grid, weight, &mut volume, |c, out| {
            let (p, t) = cells.centers[c];
            let jet = cut.jet(&weight.jet(p, t));
            let chi2 = jet.chi * jet.chi;
            let hess = cells.avg_sq(c, uxx.values()) + 2.0 * cells.avg_sq(c, uxy.values()) + cells.avg_sq(c, uyy.values());
            out.push(chi2 * hess);
            out.push(chi2 * (cells.avg_sq(c, ux.values()) + cells.avg_sq(c, uy.values())));
            out.extend(du.iter().map(|g| chi2 * cells.avg_sq(c, g.values())));
            out.extend(df.iter().map(|g| chi2 * cells.avg_sq(c, g.values())));
            let energy = if planar { jet.derivative_energy() } else { jet.t * jet.t + jet.x * jet.x + jet.xx * jet.xx };
            let low = if energy > 0.0 {
                (0..nk)
                    .map(|q| cells.avg_sq(c, dgrad[q].0.values()) + cells.avg_sq(c, dgrad[q].1.values()) + cells.avg_sq(c, du[q].values()))
                    .sum::<f64>()
            } else {
                0.0
            };
            out.push(energy * low);
        });

        let ns = grid.space().len();
        let sg = grid.space();
        let tgrid = grid.time();
        let mut faces = Points::new(vec![it("bdy", Side::Boundary, [1.0, 0.0, 0.0])]);
        fill_faces(grid, &b, weight, &mut faces, |node, out| {
            let jet = cut.jet(&weight.jet(sg.point(node.i), tgrid.node(node.n)));
            let e = jet.t * jet.t + jet.x * jet.x + jet.y * jet.y + jet.chi * jet.chi;
            let k = node.n * ns + node.i;
            let sum: f64 = if e == 0.0 {
                0.0
            } else {
                (0..nk)
                    .map(|q| {
                        let (gx, gy, gt) = &dgrad[q];
                        gx.values()[k].powi(2) + gy.values()[k].powi(2) + gt.values()[k].powi(2) + du[q].values()[k].powi(2)
                    })
                    .sum()
            };
            out.push(e * sum);
        });
        Ok(Self(Prepared {
            kind: EstimateKind::RationalOrder,
            weight: *weight,
            order: Some((ladder.m, ladder.k)),
            tau: None,
            volume,
            faces,
        }))
    }
}

impl Estimate for RationalOrderEstimate {
    fn report(&self, s: f64) -> Result<CarlemanReport> {
        self.0.report(s)
    }
}

/// One report per `s` plus the empirical constant and growth factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub reports: Vec<CarlemanReport>,
    /// Largest ratio, `None` when some ratio is undefined.
    pub c_hat: Option<f64>,
    /// Last ratio over first ratio.
    pub growth: Option<f64>,
}

impl Sweep {
    pub fn ratios(&self) -> Vec<Option<f64>> {
        self.reports.iter().map(CarlemanReport::ratio).collect()
    }

    /// Bounded-ratio criterion: growth at most `max_growth` and `c_hat <= threshold`.
    pub fn is_bounded(&self, max_growth: f64, threshold: f64) -> bool {
        matches!((self.c_hat, self.growth), (Some(c), Some(g)) if c <= threshold && g <= max_growth)
    }
}

/// Evaluates `est` for every `s` in parallel; the output keeps the input order.
pub fn sweep_s<E: Estimate + ?Sized>(est: &E, s_list: &[f64]) -> Result<Sweep> {
    ensure!(!s_list.is_empty(), Parameter, "empty s list");
    ensure!(s_list.windows(2).all(|w| w[0] < w[1]), Parameter, "s list must be strictly increasing");
    ensure!(s_list[0] >= 1.0, Parameter, "s values must be >= 1");
    let reports: Vec<CarlemanReport> = s_list.par_iter().map(|&s| est.report(s)).collect::<Result<_>>()?;
    let ratios: Vec<Option<f64>> = reports.iter().map(CarlemanReport::ratio).collect();
    let c_hat = ratios.iter().try_fold(0.0f64, |m, r| r.map(|r| m.max(r)));
    let growth = match (ratios.first().copied().flatten(), ratios.last().copied().flatten()) {
        (Some(a), Some(b)) if a > 0.0 => Some(b / a),
        _ => None,
    };
    Ok(Sweep { reports, c_hat, growth })
}

/// Writes `s,lambda,term_name,value,ratio,log_value`, one row per term.
pub fn write_sweep_csv<W: Write>(mut out: W, sweep: &Sweep) -> Result<()> {
    writeln!(out, "s,lambda,term_name,value,ratio,log_value")?;
    for r in &sweep.reports {
        let ratio = r.ratio().map_or(String::new(), |v| v.to_string());
        for t in &r.terms {
            writeln!(out, "{},{},{},{},{},{}", r.s, r.lambda, t.name, t.value(), ratio, t.ln_value)?;
        }
    }
    Ok(())
}
