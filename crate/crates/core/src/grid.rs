//! Uniform tensor grids in space and time, and the fields that live on them.
//!
//! Space nodes are numbered with `x` fastest: node `(ix, iy)` has flat index
//! `ix + nx * iy`. Space-time values are stored time-major, so the value at
//! time node `n` and space node `i` sits at `n * ns + i`.

use crate::error::{ensure, Result};
use crate::frac_calc::{diff1, diff2, TimeGrid, TimeSeries};

/// Uniform nodes on a closed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    lo: f64,
    hi: f64,
    nodes: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        ensure!(lo.is_finite() && hi.is_finite() && hi > lo, Grid, "axis needs lo < hi, got [{lo}, {hi}]");
        ensure!(nodes >= 4, Grid, "axis needs at least 4 nodes, got {nodes}");
        Ok(Self { lo, hi, nodes })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn refined(&self) -> Self {
        Self { nodes: 2 * (self.nodes - 1) + 1, ..*self }
    }
}

/// A 1-D interval or 2-D rectangle of nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceGrid {
    x: Axis,
    y: Option<Axis>,
}

impl SpaceGrid {
    pub fn line(x: Axis) -> Self {
        Self { x, y: None }
    }

    pub fn rect(x: Axis, y: Axis) -> Self {
        Self { x, y: Some(y) }
    }

    pub fn dim(&self) -> usize {
        if self.y.is_some() {
            2
        } else {
            1
        }
    }

    pub fn x(&self) -> Axis {
        self.x
    }

    pub fn y(&self) -> Option<Axis> {
        self.y
    }

    pub fn nx(&self) -> usize {
        self.x.nodes
    }

    pub fn ny(&self) -> usize {
        self.y.map_or(1, |a| a.nodes)
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + self.nx() * iy
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nx(), i / self.nx())
    }

    /// Physical position of node `i`; `y` is 0 on a line.
    pub fn point(&self, i: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(i);
        [self.x.node(ix), self.y.map_or(0.0, |a| a.node(iy))]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        let (ix, iy) = self.coords(i);
        let on_x = ix == 0 || ix + 1 == self.nx();
        let on_y = self.y.is_some() && (iy == 0 || iy + 1 == self.ny());
        on_x || on_y
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.x.step() * self.y.map_or(1.0, |a| a.step())
    }

    pub fn refined(&self) -> Self {
        Self { x: self.x.refined(), y: self.y.map(|a| a.refined()) }
    }
}

/// Product of a space grid and a time grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeGrid {
    space: SpaceGrid,
    time: TimeGrid,
}

impl SpaceTimeGrid {
    pub fn new(space: SpaceGrid, time: TimeGrid) -> Self {
        Self { space, time }
    }

    pub fn space(&self) -> SpaceGrid {
        self.space
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn len(&self) -> usize {
        self.space.len() * self.time.nodes()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn refined(&self) -> Self {
        Self { space: self.space.refined(), time: self.time.refined() }
    }
}

/// Values on a space grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceField {
    grid: SpaceGrid,
    values: Vec<f64>,
}

impl SpaceField {
    pub fn new(grid: SpaceGrid, values: Vec<f64>) -> Result<Self> {
        ensure!(values.len() == grid.len(), Shape, "field has {} values for {} nodes", values.len(), grid.len());
        ensure!(values.iter().all(|v| v.is_finite()), Domain, "field contains non-finite values");
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: SpaceGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> SpaceGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Values on every node of a [`SpaceTimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: SpaceTimeGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: SpaceTimeGrid, values: Vec<f64>) -> Result<Self> {
        ensure!(values.len() == grid.len(), Shape, "grid function has {} values for {} nodes", values.len(), grid.len());
        ensure!(values.iter().all(|v| v.is_finite()), Domain, "grid function contains non-finite values");
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: SpaceTimeGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// Samples `f([x, y], t)`.
    pub fn from_fn(grid: SpaceTimeGrid, f: impl Fn([f64; 2], f64) -> f64) -> Self {
        let sg = grid.space;
        let pts: Vec<[f64; 2]> = (0..sg.len()).map(|i| sg.point(i)).collect();
        let mut values = Vec::with_capacity(grid.len());
        for t in grid.time.iter() {
            values.extend(pts.iter().map(|&p| f(p, t)));
        }
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: SpaceTimeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> SpaceTimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, n: usize, i: usize) -> f64 {
        self.values[n * self.grid.space.len() + i]
    }

    /// Spatial slice at time node `n`.
    pub fn slice(&self, n: usize) -> &[f64] {
        let ns = self.grid.space.len();
        &self.values[n * ns..(n + 1) * ns]
    }

    pub fn slice_field(&self, n: usize) -> SpaceField {
        SpaceField { grid: self.grid.space, values: self.slice(n).to_vec() }
    }

    /// History of space node `i`.
    pub fn trace(&self, i: usize) -> TimeSeries {
        let ns = self.grid.space.len();
        let v = (0..self.grid.time.nodes()).map(|n| self.values[n * ns + i]).collect();
        TimeSeries::from_raw(self.grid.time, v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, gamma: f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|v| gamma * v).collect() }
    }

    /// Applies a per-node time operator to every spatial trace.
    pub fn map_traces(&self, op: impl Fn(&TimeSeries) -> Result<TimeSeries>) -> Result<Self> {
        let ns = self.grid.space.len();
        let nt = self.grid.time.nodes();
        let mut out = vec![0.0; self.values.len()];
        for i in 0..ns {
            let r = op(&self.trace(i))?;
            for (n, v) in r.values().iter().enumerate() {
                out[n * ns + i] = *v;
            }
        }
        debug_assert_eq!(out.len(), nt * ns);
        Ok(Self { grid: self.grid, values: out })
    }

    /// Applies a spatial operator to every time slice.
    pub fn map_slices(&self, op: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for n in 0..self.grid.time.nodes() {
            values.extend(op(self.slice(n)));
        }
        Self { grid: self.grid, values }
    }

    /// Time derivative by central differences, one-sided at the ends.
    pub fn dt(&self) -> Self {
        let ns = self.grid.space.len();
        let nt = self.grid.time.nodes();
        let h = self.grid.time.step();
        let mut out = vec![0.0; self.values.len()];
        for i in 0..ns {
            let tr: Vec<f64> = (0..nt).map(|n| self.values[n * ns + i]).collect();
            for (n, v) in diff1(&tr, h).into_iter().enumerate() {
                out[n * ns + i] = v;
            }
        }
        Self { grid: self.grid, values: out }
    }

    /// Second time derivative; needs at least 4 time nodes.
    pub fn dtt(&self) -> Self {
        let ns = self.grid.space.len();
        let nt = self.grid.time.nodes();
        let h = self.grid.time.step();
        let mut out = vec![0.0; self.values.len()];
        for i in 0..ns {
            let tr: Vec<f64> = (0..nt).map(|n| self.values[n * ns + i]).collect();
            for (n, v) in diff2(&tr, h).into_iter().enumerate() {
                out[n * ns + i] = v;
            }
        }
        Self { grid: self.grid, values: out }
    }

    pub fn dx(&self) -> Self {
        let sg = self.grid.space;
        self.map_slices(|s| space_diff(s, sg, Dir::X))
    }

    pub fn dxx(&self) -> Self {
        let sg = self.grid.space;
        self.map_slices(|s| space_diff2(s, sg, Dir::X))
    }

    /// Zero on a line.
    pub fn dy(&self) -> Self {
        let sg = self.grid.space;
        self.map_slices(|s| space_diff(s, sg, Dir::Y))
    }

    pub fn dyy(&self) -> Self {
        let sg = self.grid.space;
        self.map_slices(|s| space_diff2(s, sg, Dir::Y))
    }

    pub fn dxy(&self) -> Self {
        let sg = self.grid.space;
        self.map_slices(|s| space_diff(&space_diff(s, sg, Dir::X), sg, Dir::Y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Dir {
    X,
    Y,
}

fn lines(sg: SpaceGrid, dir: Dir) -> Option<(usize, usize, usize, f64)> {
    // (line count, line length, stride, step)
    match dir {
        Dir::X => Some((sg.ny(), sg.nx(), 1, sg.x.step())),
        Dir::Y => sg.y.map(|a| (sg.nx(), a.nodes, sg.nx(), a.step())),
    }
}

fn line_start(sg: SpaceGrid, dir: Dir, l: usize) -> usize {
    match dir {
        Dir::X => l * sg.nx(),
        Dir::Y => l,
    }
}

pub(crate) fn space_diff(v: &[f64], sg: SpaceGrid, dir: Dir) -> Vec<f64> {
    apply_lines(v, sg, dir, diff1)
}

pub(crate) fn space_diff2(v: &[f64], sg: SpaceGrid, dir: Dir) -> Vec<f64> {
    apply_lines(v, sg, dir, diff2)
}

fn apply_lines(v: &[f64], sg: SpaceGrid, dir: Dir, op: fn(&[f64], f64) -> Vec<f64>) -> Vec<f64> {
    let Some((count, len, stride, h)) = lines(sg, dir) else {
        return vec![0.0; v.len()];
    };
    let mut out = vec![0.0; v.len()];
    let mut buf = vec![0.0; len];
    for l in 0..count {
        let s = line_start(sg, dir, l);
        for (k, b) in buf.iter_mut().enumerate() {
            *b = v[s + k * stride];
        }
        for (k, d) in op(&buf, h).into_iter().enumerate() {
            out[s + k * stride] = d;
        }
    }
    out
}
