//! Domains, the pseudoconvexity function `d`, the two exponential weight
//! families and the level sets and cut-offs built from them.

use std::io::Write;

use crate::error::{ensure, FradeError, Result};
use crate::frac_calc::{TimeGrid, TimeSeries};
use crate::grid::{GridFunction, SpaceField, SpaceGrid, SpaceTimeGrid};

/// A face of the interval or rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Face {
    XLo,
    XHi,
    YLo,
    YHi,
}

impl Face {
    /// Outward normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Face::XLo => [-1.0, 0.0],
            Face::XHi => [1.0, 0.0],
            Face::YLo => [0.0, -1.0],
            Face::YHi => [0.0, 1.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Face::XLo => "x_lo",
            Face::XHi => "x_hi",
            Face::YLo => "y_lo",
            Face::YHi => "y_hi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "x_lo" => Ok(Face::XLo),
            "x_hi" => Ok(Face::XHi),
            "y_lo" => Ok(Face::YLo),
            "y_hi" => Ok(Face::YHi),
            other => Err(FradeError::Input(format!("unknown face tag '{other}'"))),
        }
    }

    /// Space nodes lying on this face.
    pub fn nodes(self, sg: SpaceGrid) -> Result<Vec<usize>> {
        let (nx, ny) = (sg.nx(), sg.ny());
        ensure!(sg.dim() == 2 || matches!(self, Face::XLo | Face::XHi), Input, "face {} does not exist on a 1-D grid", self.name());
        Ok(match self {
            Face::XLo => (0..ny).map(|iy| sg.index(0, iy)).collect(),
            Face::XHi => (0..ny).map(|iy| sg.index(nx - 1, iy)).collect(),
            Face::YLo => (0..nx).map(|ix| sg.index(ix, 0)).collect(),
            Face::YHi => (0..nx).map(|ix| sg.index(ix, ny - 1)).collect(),
        })
    }
}

/// Axis-aligned extents `[x_lo, x_hi] (x [y_lo, y_hi])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extents {
    pub x: (f64, f64),
    pub y: Option<(f64, f64)>,
}

impl Extents {
    fn corners(&self) -> Vec<[f64; 2]> {
        match self.y {
            None => vec![[self.x.0, 0.0], [self.x.1, 0.0]],
            Some(y) => vec![[self.x.0, y.0], [self.x.1, y.0], [self.x.0, y.1], [self.x.1, y.1]],
        }
    }

    fn contains_strictly(&self, inner: &Extents) -> bool {
        let le = |a: (f64, f64), b: (f64, f64)| a.0 <= b.0 && b.1 <= a.1;
        let x_ok = le(self.x, inner.x);
        let y_ok = match (self.y, inner.y) {
            (Some(a), Some(b)) => le(a, b),
            (None, None) => true,
            _ => false,
        };
        x_ok && y_ok && self != inner
    }
}

/// Spatial domain with its observation sub-boundary and optional enlargement.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    extents: Extents,
    gamma: Vec<Face>,
    enlarged: Option<Extents>,
}

/// Relative growth of each observed face when the enlarged domain is built.
pub const DEFAULT_DILATION: f64 = 0.1;

impl Domain {
    pub fn interval(lo: f64, hi: f64, gamma: &[Face]) -> Result<Self> {
        Self::build(Extents { x: (lo, hi), y: None }, gamma)
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), gamma: &[Face]) -> Result<Self> {
        Self::build(Extents { x, y: Some(y) }, gamma)
    }

    fn build(extents: Extents, gamma: &[Face]) -> Result<Self> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        ensure!(ok(extents.x) && extents.y.is_none_or(ok), Domain, "domain extents must satisfy lo < hi");
        ensure!(!gamma.is_empty(), Domain, "observation boundary must be nonempty");
        let mut g = gamma.to_vec();
        g.sort();
        g.dedup();
        ensure!(g.len() == gamma.len(), Domain, "duplicate face in observation boundary");
        if extents.y.is_none() {
            ensure!(g.iter().all(|f| matches!(f, Face::XLo | Face::XHi)), Domain, "1-D domain only has faces x_lo and x_hi");
        }
        Ok(Self { extents, gamma: g, enlarged: None })
    }

    /// Adds the enlarged domain obtained by pushing every observed face outward
    /// by `fraction` of the domain length along that axis.
    pub fn with_dilation(mut self, fraction: f64) -> Result<Self> {
        ensure!(fraction > 0.0 && fraction.is_finite(), Parameter, "dilation must be positive");
        let mut e = self.extents;
        let lx = e.x.1 - e.x.0;
        for f in &self.gamma {
            match f {
                Face::XLo => e.x.0 -= fraction * lx,
                Face::XHi => e.x.1 += fraction * lx,
                Face::YLo | Face::YHi => {
                    let y = e.y.as_mut().expect("validated 2-D face");
                    let ly = self.extents.y.map_or(0.0, |(a, b)| b - a);
                    if *f == Face::YLo {
                        y.0 -= fraction * ly;
                    } else {
                        y.1 += fraction * ly;
                    }
                }
            }
        }
        self.enlarged = Some(e);
        Ok(self)
    }

    /// Explicit enlarged domain, which must strictly contain the domain.
    pub fn with_enlarged(mut self, enlarged: Extents) -> Result<Self> {
        ensure!(enlarged.contains_strictly(&self.extents), Domain, "enlarged domain must strictly contain the domain");
        self.enlarged = Some(enlarged);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        if self.extents.y.is_some() {
            2
        } else {
            1
        }
    }

    pub fn extents(&self) -> Extents {
        self.extents
    }

    pub fn enlarged(&self) -> Option<Extents> {
        self.enlarged
    }

    pub fn gamma(&self) -> &[Face] {
        &self.gamma
    }

    pub fn all_faces(&self) -> Vec<Face> {
        if self.dim() == 1 {
            vec![Face::XLo, Face::XHi]
        } else {
            vec![Face::XLo, Face::XHi, Face::YLo, Face::YHi]
        }
    }

    pub fn gamma_is_whole_boundary(&self) -> bool {
        self.gamma.len() == self.all_faces().len()
    }
}

/// Explicit pseudoconvexity function for the supported geometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pseudoconvexity {
    /// `sign * (x - origin)`, vanishing at the unobserved endpoint.
    Affine { origin: f64, sign: f64 },
    /// `|p - center|^2 - rho0` with the center outside the closed domain.
    /// On a line `planar` is false and the `y` entries are unused.
    Radial { center: [f64; 2], rho0: f64, planar: bool },
}

impl Pseudoconvexity {
    pub fn value(&self, p: [f64; 2]) -> f64 {
        match *self {
            Pseudoconvexity::Affine { origin, sign } => sign * (p[0] - origin),
            Pseudoconvexity::Radial { center, rho0, .. } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy - rho0
            }
        }
    }

    pub fn gradient(&self, p: [f64; 2]) -> [f64; 2] {
        match *self {
            Pseudoconvexity::Affine { sign, .. } => [sign, 0.0],
            Pseudoconvexity::Radial { center, .. } => [2.0 * (p[0] - center[0]), 2.0 * (p[1] - center[1])],
        }
    }

    /// Entries `(dxx, dxy, dyy)`.
    pub fn hessian(&self, _p: [f64; 2]) -> (f64, f64, f64) {
        match *self {
            Pseudoconvexity::Affine { .. } => (0.0, 0.0, 0.0),
            Pseudoconvexity::Radial { planar, .. } => (2.0, 0.0, if planar { 2.0 } else { 0.0 }),
        }
    }

    pub fn sample(&self, sg: SpaceGrid) -> SpaceField {
        SpaceField::from_fn(sg, |p| self.value(p))
    }

    /// Maximum of `d` over the closed enlarged domain (or the domain itself).
    ///
    /// `d` is convex on every supported geometry, so the maximum sits at a corner.
    pub fn sup_norm(&self, domain: &Domain) -> f64 {
        let ext = domain.enlarged.unwrap_or(domain.extents);
        ext.corners().into_iter().map(|c| self.value(c).abs()).fold(0.0, f64::max)
    }
}

/// Builds `d` for a supported domain.
///
/// * 1-D, one observed endpoint: affine, zero at the other endpoint.
/// * Observed whole boundary: `|p - p0|^2 - rho0`, `p0` one domain length to
///   the left of the domain and `rho0` half the squared distance to it.
/// * 2-D with a proper observed sub-boundary: unsupported.
pub fn build_d(domain: &Domain) -> Result<Pseudoconvexity> {
    let (lo, hi) = domain.extents.x;
    let len = hi - lo;
    if domain.gamma_is_whole_boundary() {
        let yc = domain.extents.y.map_or(0.0, |(a, b)| 0.5 * (a + b));
        return Ok(Pseudoconvexity::Radial { center: [lo - len, yc], rho0: 0.5 * len * len, planar: domain.dim() == 2 });
    }
    ensure!(
        domain.dim() == 1,
        UnsupportedGeometry,
        "2-D domains need the whole boundary observed; proper sub-boundaries are not supported"
    );
    Ok(match domain.gamma[0] {
        Face::XHi => Pseudoconvexity::Affine { origin: lo, sign: 1.0 },
        _ => Pseudoconvexity::Affine { origin: hi, sign: -1.0 },
    })
}

/// Time profile of the weight exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFamily {
    /// `psi = d - beta * t^(2 - 2 alpha1)`, for `alpha1 < 1/2`.
    Sub { alpha1: f64 },
    /// `psi = d - beta (t - t0)^2 + c0`.
    Regular { t0: f64, c0: f64 },
}

/// Parameters of `phi = exp(lambda * psi)` and the large parameter `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub lambda: f64,
    pub s: f64,
    pub beta: f64,
    pub family: WeightFamily,
}

fn check_common(lambda: f64, s: f64, beta: f64) -> Result<()> {
    ensure!(lambda >= 1.0 && lambda.is_finite(), Parameter, "lambda must be >= 1, got {lambda}");
    ensure!(s >= 1.0 && s.is_finite(), Parameter, "s must be >= 1, got {s}");
    ensure!(beta > 0.0 && beta.is_finite(), Parameter, "beta must be positive, got {beta}");
    Ok(())
}

impl WeightParams {
    pub fn sub(lambda: f64, s: f64, beta: f64, alpha1: f64) -> Result<Self> {
        check_common(lambda, s, beta)?;
        ensure!(alpha1 > 0.0, Domain, "alpha1 must be positive, got {alpha1}");
        ensure!(alpha1 < 0.5, FamilyMismatch, "the sub-diffusion weight needs alpha1 < 1/2, got {alpha1}");
        Ok(Self { lambda, s, beta, family: WeightFamily::Sub { alpha1 } })
    }

    /// Regular weight with the smallest admissible shift `c0`.
    pub fn regular(lambda: f64, s: f64, beta: f64, t0: f64, horizon: f64) -> Result<Self> {
        Self::regular_with_shift(lambda, s, beta, t0, horizon, required_shift(beta, t0, horizon))
    }

    /// Regular weight with an explicit shift, checked against the required one.
    pub fn regular_with_shift(lambda: f64, s: f64, beta: f64, t0: f64, horizon: f64, c0: f64) -> Result<Self> {
        check_common(lambda, s, beta)?;
        ensure!(t0 > 0.0 && t0 < horizon, Parameter, "t0 must lie in (0, T), got {t0}");
        let need = required_shift(beta, t0, horizon);
        ensure!(c0 >= need, Parameter, "shift c0 = {c0} is below the required max(beta t0^2, beta (T-t0)^2) = {need}");
        Ok(Self { lambda, s, beta, family: WeightFamily::Regular { t0, c0 } })
    }

    pub fn with_s(self, s: f64) -> Self {
        Self { s, ..self }
    }

    pub fn is_sub(&self) -> bool {
        matches!(self.family, WeightFamily::Sub { .. })
    }

    /// Time part of `psi` and its first two time derivatives.
    pub fn time_part(&self, t: f64) -> (f64, f64, f64) {
        let b = self.beta;
        match self.family {
            WeightFamily::Sub { alpha1 } => {
                let p = 2.0 - 2.0 * alpha1;
                if t <= 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                (-b * t.powf(p), -b * p * t.powf(p - 1.0), -b * p * (p - 1.0) * t.powf(p - 2.0))
            }
            WeightFamily::Regular { t0, c0 } => {
                let r = t - t0;
                (c0 - b * r * r, -2.0 * b * r, -2.0 * b)
            }
        }
    }

    pub fn psi(&self, d: f64, t: f64) -> f64 {
        d + self.time_part(t).0
    }

    pub fn phi(&self, d: f64, t: f64) -> f64 {
        (self.lambda * self.psi(d, t)).exp()
    }
}

/// `max(beta t0^2, beta (T - t0)^2)`.
pub fn required_shift(beta: f64, t0: f64, horizon: f64) -> f64 {
    (beta * t0 * t0).max(beta * (horizon - t0) * (horizon - t0))
}

/// Sub-diffusion weight value at a point where `d` takes the value `d`.
pub fn phi1(d: f64, t: f64, params: &WeightParams) -> Result<f64> {
    match params.family {
        WeightFamily::Sub { .. } => {
            ensure!(t >= 0.0, Domain, "time must be non-negative");
            Ok(params.phi(d, t))
        }
        WeightFamily::Regular { .. } => Err(FradeError::FamilyMismatch("phi1 needs the sub-diffusion family".into())),
    }
}

/// Regular weight value at a point where `d` takes the value `d`.
pub fn phi2(d: f64, t: f64, params: &WeightParams) -> Result<f64> {
    match params.family {
        WeightFamily::Regular { .. } => Ok(params.phi(d, t)),
        WeightFamily::Sub { .. } => Err(FradeError::FamilyMismatch("phi2 needs the regular family".into())),
    }
}

/// Weight evaluated through an explicit `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub d: Pseudoconvexity,
    pub params: WeightParams,
}

/// `phi` and its partial derivatives up to order two at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhiJet {
    pub psi: f64,
    pub phi: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub tt: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Weight {
    pub fn new(d: Pseudoconvexity, params: WeightParams) -> Self {
        Self { d, params }
    }

    pub fn with_s(self, s: f64) -> Self {
        Self { params: self.params.with_s(s), ..self }
    }

    pub fn psi(&self, p: [f64; 2], t: f64) -> f64 {
        self.params.psi(self.d.value(p), t)
    }

    pub fn phi(&self, p: [f64; 2], t: f64) -> f64 {
        self.params.phi(self.d.value(p), t)
    }

    pub fn jet(&self, p: [f64; 2], t: f64) -> PhiJet {
        let l = self.params.lambda;
        let dv = self.d.value(p);
        let (tp, tp1, tp2) = self.params.time_part(t);
        let psi = dv + tp;
        let phi = (l * psi).exp();
        let [gx, gy] = self.d.gradient(p);
        let (hxx, hxy, hyy) = self.d.hessian(p);
        PhiJet {
            psi,
            phi,
            t: l * phi * tp1,
            x: l * phi * gx,
            y: l * phi * gy,
            tt: l * phi * (l * tp1 * tp1 + tp2),
            xx: l * phi * (l * gx * gx + hxx),
            xy: l * phi * (l * gx * gy + hxy),
            yy: l * phi * (l * gy * gy + hyy),
        }
    }

    pub fn sample_phi(&self, grid: SpaceTimeGrid) -> GridFunction {
        GridFunction::from_fn(grid, |p, t| self.phi(p, t))
    }
}

/// Rule used to turn the inequality constraints on `beta` into one value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaRule {
    /// Midpoint of `(|d| / T^q, |d| / (T/2)^q)`, `q = 2 - 2 alpha1`.
    SubCauchy { horizon: f64, alpha1: f64 },
    /// `|d| / (1.5 eps^2)`, so that `beta eps^2 <= |d| <= 2 beta eps^2`.
    Eps { eps: f64 },
    /// `|d| / delta^2` with `delta = min(t0, T - t0)`.
    Isp { horizon: f64, t0: f64 },
}

pub fn choose_beta(rule: BetaRule, d_norm: f64) -> Result<f64> {
    ensure!(d_norm > 0.0 && d_norm.is_finite(), Parameter, "|d| must be positive, got {d_norm}");
    match rule {
        BetaRule::SubCauchy { horizon, alpha1 } => {
            ensure!(horizon > 0.0, Parameter, "horizon must be positive");
            ensure!(alpha1 > 0.0 && alpha1 < 0.5, FamilyMismatch, "sub rule needs alpha1 in (0, 1/2)");
            let q = 2.0 - 2.0 * alpha1;
            let lo = d_norm / horizon.powf(q);
            let hi = d_norm / (0.5 * horizon).powf(q);
            ensure!(lo < hi, Numerical, "empty admissible beta interval");
            Ok(0.5 * (lo + hi))
        }
        BetaRule::Eps { eps } => {
            ensure!(eps > 0.0, Parameter, "eps must be positive");
            Ok(d_norm / (1.5 * eps * eps))
        }
        BetaRule::Isp { horizon, t0 } => {
            ensure!(t0 > 0.0 && t0 < horizon, Parameter, "t0 must lie in (0, T)");
            let delta = t0.min(horizon - t0);
            Ok(d_norm / (delta * delta))
        }
    }
}

/// Which time scale enters the level values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelAnchor {
    /// Sub family: uses `beta (T/2)^(2 - 2 alpha1)`.
    Horizon(f64),
    /// Regular family: uses `beta eps^2` and the shift `c0`.
    Epsilon(f64),
}

/// Increasing level values `mu_1 < ... < mu_4` of the weight.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    mu: [f64; 4],
    n: u32,
}

impl LevelSet {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn values(&self) -> &[f64; 4] {
        &self.mu
    }

    /// `mu_k` for `k` in `1..=4`.
    pub fn mu(&self, k: usize) -> f64 {
        self.mu[k - 1]
    }

    /// Strict membership `phi > mu_k`.
    pub fn contains(&self, k: usize, phi: f64) -> bool {
        phi > self.mu(k)
    }
}

pub fn level_values(params: &WeightParams, d_norm: f64, n: u32, anchor: LevelAnchor) -> Result<LevelSet> {
    ensure!(n > 4, Parameter, "level spacing needs N > 4, got {n}");
    ensure!(d_norm > 0.0, Parameter, "|d| must be positive");
    let nf = n as f64;
    let (shift, base) = match (params.family, anchor) {
        (WeightFamily::Sub { alpha1 }, LevelAnchor::Horizon(horizon)) => (params.beta * (0.5 * horizon).powf(2.0 - 2.0 * alpha1) / nf, 0.0),
        (WeightFamily::Regular { c0, .. }, LevelAnchor::Epsilon(eps)) => (params.beta * eps * eps / nf, c0),
        _ => {
            return Err(FradeError::FamilyMismatch(
                "level anchor does not match the weight family (sub uses the horizon, regular uses eps)".into(),
            ))
        }
    };
    let mu = std::array::from_fn(|k| (params.lambda * ((k + 1) as f64 * d_norm / nf - shift + base)).exp());
    Ok(LevelSet { mu, n })
}

/// `S(r) = 6r^5 - 15r^4 + 10r^3` clamped to `[0, 1]`.
pub fn smoothstep(r: f64) -> f64 {
    let r = r.clamp(0.0, 1.0);
    r * r * r * (r * (6.0 * r - 15.0) + 10.0)
}

pub fn smoothstep_d1(r: f64) -> f64 {
    if !(0.0..=1.0).contains(&r) {
        return 0.0;
    }
    30.0 * r * r * (r - 1.0) * (r - 1.0)
}

pub fn smoothstep_d2(r: f64) -> f64 {
    if !(0.0..=1.0).contains(&r) {
        return 0.0;
    }
    60.0 * r * (r - 1.0) * (2.0 * r - 1.0)
}

/// `max |S'| = 15/8`.
pub const SMOOTHSTEP_D1_MAX: f64 = 1.875;
/// `max |S''| = 10 / sqrt(3)`.
pub const SMOOTHSTEP_D2_MAX: f64 = 5.773_502_691_896_258;

/// Cut-off rising from 0 at `phi <= low` to 1 at `phi >= high`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    low: f64,
    high: f64,
}

/// Cut-off value and derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CutoffJet {
    pub chi: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl CutoffJet {
    /// `chi_t^2 + |grad chi|^2 + sum of squared second space derivatives`.
    pub fn derivative_energy(&self) -> f64 {
        self.t * self.t + self.x * self.x + self.y * self.y + self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy
    }
}

impl Cutoff {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        ensure!(low.is_finite() && high.is_finite() && low < high, Parameter, "cut-off needs low < high, got {low}, {high}");
        Ok(Self { low, high })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }

    fn r(&self, phi: f64) -> f64 {
        (phi - self.low) / (self.high - self.low)
    }

    pub fn value(&self, phi: f64) -> f64 {
        smoothstep(self.r(phi))
    }

    /// Chain rule through the analytic derivatives of `phi`.
    pub fn jet(&self, w: &PhiJet) -> CutoffJet {
        let r = self.r(w.phi);
        let inv = 1.0 / (self.high - self.low);
        let s1 = smoothstep_d1(r) * inv;
        let s2 = smoothstep_d2(r) * inv * inv;
        CutoffJet {
            chi: smoothstep(r),
            t: s1 * w.t,
            x: s1 * w.x,
            y: s1 * w.y,
            xx: s2 * w.x * w.x + s1 * w.xx,
            xy: s2 * w.x * w.y + s1 * w.xy,
            yy: s2 * w.y * w.y + s1 * w.yy,
        }
    }
}

/// Applies a cut-off to sampled weight values.
pub fn cutoff(phi_values: &GridFunction, mu_low: f64, mu_high: f64) -> Result<GridFunction> {
    let c = Cutoff::new(mu_low, mu_high)?;
    let v = phi_values.values().iter().map(|&p| c.value(p)).collect();
    Ok(GridFunction::from_raw(phi_values.grid(), v))
}

/// Cut-off and all derivatives sampled on a grid.
#[derive(Debug, Clone)]
pub struct CutoffField {
    pub chi: GridFunction,
    pub t: GridFunction,
    pub x: GridFunction,
    pub y: GridFunction,
    pub xx: GridFunction,
    pub xy: GridFunction,
    pub yy: GridFunction,
}

pub fn cutoff_field(weight: &Weight, grid: SpaceTimeGrid, mu_low: f64, mu_high: f64) -> Result<CutoffField> {
    let c = Cutoff::new(mu_low, mu_high)?;
    let jets: Vec<CutoffJet> = {
        let sg = grid.space();
        let mut v = Vec::with_capacity(grid.len());
        for t in grid.time().iter() {
            v.extend((0..sg.len()).map(|i| c.jet(&weight.jet(sg.point(i), t))));
        }
        v
    };
    let pick = |f: fn(&CutoffJet) -> f64| GridFunction::from_raw(grid, jets.iter().map(f).collect());
    Ok(CutoffField {
        chi: pick(|j| j.chi),
        t: pick(|j| j.t),
        x: pick(|j| j.x),
        y: pick(|j| j.y),
        xx: pick(|j| j.xx),
        xy: pick(|j| j.xy),
        yy: pick(|j| j.yy),
    })
}

/// Plateau function: 1 on `[t0 - delta/2, t0 + delta/2]`, 0 outside
/// `(t0 - delta, t0 + delta)`, quintic shoulders between.
pub fn time_cutoff_eta(grid: TimeGrid, t0: f64, delta: f64) -> Result<TimeSeries> {
    ensure!(t0 > 0.0 && t0 < grid.horizon(), Parameter, "t0 must lie in (0, T)");
    ensure!(delta > 0.0 && delta < t0.min(grid.horizon() - t0), Parameter, "delta = {delta} must lie in (0, min(t0, T - t0))");
    Ok(TimeSeries::from_fn(grid, |t| eta_value(t, t0, delta)))
}

pub fn eta_value(t: f64, t0: f64, delta: f64) -> f64 {
    let dist = (t - t0).abs();
    smoothstep((delta - dist) / (0.5 * delta))
}

/// Membership in `{ psi > eps + c0 }` for the regular family.
pub fn in_q_eps(params: &WeightParams, d: f64, t: f64, eps: f64) -> bool {
    match params.family {
        WeightFamily::Regular { c0, .. } => params.psi(d, t) > eps + c0,
        WeightFamily::Sub { .. } => false,
    }
}

/// Writes `x[,y],t,psi,phi,chi` rows for every grid node.
pub fn write_weight_csv<W: Write>(mut out: W, grid: SpaceTimeGrid, weight: &Weight, cut: Option<&Cutoff>) -> Result<()> {
    let sg = grid.space();
    let two = sg.dim() == 2;
    writeln!(out, "{}", if two { "x,y,t,psi,phi,chi" } else { "x,t,psi,phi,chi" })?;
    for t in grid.time().iter() {
        for i in 0..sg.len() {
            let p = sg.point(i);
            let psi = weight.psi(p, t);
            let phi = weight.phi(p, t);
            let chi = cut.map_or(1.0, |c| c.value(phi));
            if two {
                writeln!(out, "{},{},{t},{psi},{phi},{chi}", p[0], p[1])?;
            } else {
                writeln!(out, "{},{t},{psi},{phi},{chi}", p[0])?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use approx::assert_relative_eq;

    #[test]
    fn d_for_one_dimensional_endpoints() {
        let right = build_d(&Domain::interval(0.0, 1.0, &[Face::XHi]).unwrap()).unwrap();
        assert_eq!(right.value([0.0, 0.0]), 0.0);
        assert_eq!(right.gradient([0.3, 0.0]), [1.0, 0.0]);
        let left = build_d(&Domain::interval(0.0, 1.0, &[Face::XLo]).unwrap()).unwrap();
        assert_eq!(left.value([1.0, 0.0]), 0.0);
        assert_eq!(left.value([0.5, 0.0]), 0.5);
    }

    #[test]
    fn d_for_square_with_full_boundary() {
        let dom = Domain::rectangle((0.0, 1.0), (0.0, 1.0), &[Face::XLo, Face::XHi, Face::YLo, Face::YHi]).unwrap();
        let d = build_d(&dom).unwrap();
        assert_eq!(d, Pseudoconvexity::Radial { center: [-1.0, 0.5], rho0: 0.5, planar: true });
        let sg = SpaceGrid::rect(Axis::new(0.0, 1.0, 21).unwrap(), Axis::new(0.0, 1.0, 21).unwrap());
        let min_grad = (0..sg.len())
            .map(|i| {
                let [a, b] = d.gradient(sg.point(i));
                a.hypot(b)
            })
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min_grad, 2.0, epsilon = 1e-12);
        assert!(d.sample(sg).values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn proper_sub_boundary_in_2d_rejected() {
        let dom = Domain::rectangle((0.0, 1.0), (0.0, 1.0), &[Face::XHi]).unwrap();
        assert!(matches!(build_d(&dom), Err(FradeError::UnsupportedGeometry(_))));
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::interval(0.0, 1.0, &[]).is_err());
        assert!(Domain::interval(0.0, 1.0, &[Face::YLo]).is_err());
        assert!(Domain::interval(1.0, 0.0, &[Face::XLo]).is_err());
        let dom = Domain::interval(0.0, 1.0, &[Face::XHi]).unwrap().with_dilation(0.1).unwrap();
        assert_eq!(dom.enlarged().unwrap().x, (0.0, 1.1));
        let d = build_d(&dom).unwrap();
        assert_relative_eq!(d.sup_norm(&dom), 1.1, epsilon = 1e-15);
        let bad = Extents { x: (0.0, 1.0), y: None };
        assert!(Domain::interval(0.0, 1.0, &[Face::XHi]).unwrap().with_enlarged(bad).is_err());
    }

    #[test]
    fn phi1_examples() {
        let p = WeightParams::sub(2.0, 1.0, 1.0, 0.25).unwrap();
        assert_relative_eq!(phi1(0.5, 1.0, &p).unwrap(), (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(phi1(0.5, 0.0, &p).unwrap(), 1.0f64.exp(), max_relative = 1e-14);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let v = phi1(0.5, i as f64 * 0.02, &p).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(matches!(WeightParams::sub(2.0, 1.0, 1.0, 0.5), Err(FradeError::FamilyMismatch(_))));
    }

    #[test]
    fn phi2_examples() {
        let p = WeightParams::regular(1.0, 1.0, 2.0, 0.5, 1.0).unwrap();
        assert_relative_eq!(phi2(0.3, 0.75, &p).unwrap(), 0.675f64.exp(), max_relative = 1e-14);
        assert_relative_eq!(phi2(0.0, 0.0, &p).unwrap(), 1.0, epsilon = 1e-15);
        assert!(phi1(0.0, 0.0, &p).is_err());
        assert!(WeightParams::regular_with_shift(1.0, 1.0, 2.0, 0.5, 1.0, 0.4).is_err());
    }

    #[test]
    fn beta_rules() {
        let b = choose_beta(BetaRule::Isp { horizon: 1.0, t0: 0.5 }, 1.0).unwrap();
        assert_eq!(b, 4.0);
        let b = choose_beta(BetaRule::Eps { eps: 0.5 }, 1.0).unwrap();
        assert!(b * 0.25 <= 1.0 && 1.0 <= 2.0 * b * 0.25);
        assert_relative_eq!(b, 1.0 / 0.375, max_relative = 1e-14);
        let b = choose_beta(BetaRule::SubCauchy { horizon: 1.0, alpha1: 0.25 }, 1.0).unwrap();
        assert_relative_eq!(b, 0.5 * (1.0 + 2f64.powf(1.5)), max_relative = 1e-14);
        assert!(b * 0.5f64.powf(1.5) < 1.0);
    }

    #[test]
    fn level_values_example() {
        // beta (T/2)^{2-2a} = 0.5 with alpha1 = 0.25, T = 2 => beta = 0.5
        let p = WeightParams::sub(1.0, 1.0, 0.5, 0.25).unwrap();
        let l = level_values(&p, 1.0, 10, LevelAnchor::Horizon(2.0)).unwrap();
        for k in 1..=4 {
            assert_relative_eq!(l.mu(k), ((k as f64 - 0.5) / 10.0).exp(), max_relative = 1e-14);
        }
        assert!(l.contains(1, l.mu(2)) && !l.contains(2, l.mu(2)));
        assert!(level_values(&p, 1.0, 4, LevelAnchor::Horizon(2.0)).is_err());
        assert!(level_values(&p, 1.0, 10, LevelAnchor::Epsilon(0.1)).is_err());
    }

    #[test]
    fn smoothstep_shape() {
        assert_eq!(smoothstep(0.5), 0.5);
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(2.0), 1.0);
        let r = (3.0 - 3f64.sqrt()) / 6.0;
        assert_relative_eq!(smoothstep_d2(r).abs(), SMOOTHSTEP_D2_MAX, max_relative = 1e-12);
        assert_relative_eq!(smoothstep_d1(0.5), SMOOTHSTEP_D1_MAX, max_relative = 1e-14);
    }

    #[test]
    fn cutoff_constant_fields() {
        let sg = SpaceGrid::line(Axis::new(0.0, 1.0, 5).unwrap());
        let g = SpaceTimeGrid::new(sg, TimeGrid::new(1.0, 4).unwrap());
        let hi = GridFunction::from_fn(g, |_, _| 3.0);
        assert!(cutoff(&hi, 1.0, 2.0).unwrap().values().iter().all(|&c| c == 1.0));
        assert!(cutoff(&hi, 4.0, 5.0).unwrap().values().iter().all(|&c| c == 0.0));
        assert!(cutoff(&hi, 2.0, 2.0).is_err());
        let jet = Cutoff::new(1.0, 2.0).unwrap().jet(&PhiJet { phi: 3.0, x: 1.0, ..Default::default() });
        assert_eq!(jet.x, 0.0);
    }

    #[test]
    fn eta_examples() {
        let g = TimeGrid::new(1.0, 401).unwrap();
        let eta = time_cutoff_eta(g, 0.5, 0.2).unwrap();
        assert_eq!(eta.values()[200], 1.0);
        assert_eq!(eta.values()[0], 0.0);
        assert_eq!(eta.values()[400], 0.0);
        assert_relative_eq!(eta_value(0.5 - 0.15, 0.5, 0.2), 0.5, epsilon = 1e-12);
        assert!(time_cutoff_eta(g, 0.5, 0.5).is_err());
    }

    #[test]
    fn jet_matches_finite_differences() {
        let dom = Domain::rectangle((0.0, 1.0), (0.0, 1.0), &[Face::XLo, Face::XHi, Face::YLo, Face::YHi]).unwrap();
        let w = Weight::new(build_d(&dom).unwrap(), WeightParams::regular(1.5, 1.0, 2.0, 0.4, 1.0).unwrap());
        let (p, t, h) = ([0.3, 0.6], 0.7, 1e-5);
        let j = w.jet(p, t);
        let fd_x = (w.phi([p[0] + h, p[1]], t) - w.phi([p[0] - h, p[1]], t)) / (2.0 * h);
        let fd_t = (w.phi(p, t + h) - w.phi(p, t - h)) / (2.0 * h);
        let fd_yy = (w.phi([p[0], p[1] + h], t) - 2.0 * j.phi + w.phi([p[0], p[1] - h], t)) / (h * h);
        assert_relative_eq!(j.x, fd_x, max_relative = 1e-7);
        assert_relative_eq!(j.t, fd_t, max_relative = 1e-7);
        assert_relative_eq!(j.yy, fd_yy, max_relative = 1e-4);
    }
}
