//! Built-in experiment presets and the constructs each one exercises.

use std::fmt;

use crate::config::{Config, ConfigError};

/// A mathematical object or claim a preset exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Construct {
    CaputoL1,
    RlSemigroup,
    ForwardSolver,
    SubDiffusionEstimate,
    FractionalBound,
    ParabolicEstimate,
    RationalOrderEstimate,
    CauchyShortTime,
    CauchyInterior,
    SourceReconstruction,
    HolderFit,
}

impl Construct {
    pub const ALL: [Construct; 11] = [
        Construct::CaputoL1,
        Construct::RlSemigroup,
        Construct::ForwardSolver,
        Construct::SubDiffusionEstimate,
        Construct::FractionalBound,
        Construct::ParabolicEstimate,
        Construct::RationalOrderEstimate,
        Construct::CauchyShortTime,
        Construct::CauchyInterior,
        Construct::SourceReconstruction,
        Construct::HolderFit,
    ];
}

impl fmt::Display for Construct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Construct::CaputoL1 => "L1 Caputo derivative vs monomial closed forms",
            Construct::RlSemigroup => "Riemann-Liouville integral semigroup property",
            Construct::ForwardSolver => "forward solver on manufactured solutions",
            Construct::SubDiffusionEstimate => "sub-diffusion Carleman estimate",
            Construct::FractionalBound => "Caputo-derivative bound under the sub-diffusion weight",
            Construct::ParabolicEstimate => "tau-weighted parabolic Carleman estimate",
            Construct::RationalOrderEstimate => "rational-order estimate with the exponent ladder",
            Construct::CauchyShortTime => "lateral Cauchy stability near t = 0",
            Construct::CauchyInterior => "lateral Cauchy stability on an interior time window",
            Construct::SourceReconstruction => "source reconstruction from one time slice",
            Construct::HolderFit => "Hoelder exponent fit of error vs noise",
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub kind: &'static str,
    pub constructs: &'static [Construct],
    pub config: &'static str,
}

impl Preset {
    /// The preset's config; the caller supplies `output.dir`.
    pub fn parse(&self) -> Result<Config, ConfigError> {
        Config::parse(self.config)
    }
}

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// `name  kind  constructs`, one preset per line.
pub fn listing() -> String {
    let width = PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
    let kind_width = PRESETS.iter().map(|p| p.kind.len()).max().unwrap_or(0);
    let mut out = String::new();
    for p in PRESETS {
        let what: Vec<String> = p.constructs.iter().map(ToString::to_string).collect();
        out.push_str(&format!("{:width$}  {:kind_width$}  {}\n", p.name, p.kind, what.join("; ")));
    }
    out
}

pub static PRESETS: &[Preset] = &[
    Preset {
        name: "caputo-check",
        kind: "caputo-check",
        constructs: &[Construct::CaputoL1, Construct::RlSemigroup],
        config: "\
kind = caputo-check

[caputo]
alphas = 0.25, 0.33, 0.5, 0.75
powers = 1, 2
nodes = 257, 513, 1025, 2049

[semigroup]
p1 = 0.3
p2 = 0.45
",
    },
    Preset {
        name: "forward-mms-time",
        kind: "forward",
        constructs: &[Construct::ForwardSolver],
        config: "\
kind = forward

[grid]
nx = 201
nt = 129

[equation]
advection_x = 0.5
reaction = 1
orders = 0.75
source = (2*t + gamma(3)/gamma(2.25) * t^1.25 + (pi^2 + 1) * t^2) * sin(pi*x) + 0.5*pi*t^2*cos(pi*x)

[check]
exact = t^2 * sin(pi*x)
time_levels = 129, 257, 513, 1025
",
    },
    Preset {
        name: "forward-mms-space",
        kind: "forward",
        constructs: &[Construct::ForwardSolver],
        config: "\
kind = forward

[grid]
nx = 26
nt = 33

[equation]
advection_x = 0.5
reaction = 1
orders = 0.75
source = (1 + gamma(2)/gamma(1.25) * t^0.25 + (pi^2 + 1) * t) * sin(pi*x) + 0.5*pi*t*cos(pi*x)

[check]
exact = t * sin(pi*x)
space_levels = 26, 51, 101, 201
",
    },
    Preset {
        name: "forward-two-term",
        kind: "forward",
        constructs: &[Construct::ForwardSolver],
        config: "\
kind = forward

[grid]
nx = 201
nt = 129

[equation]
advection_x = 0.5
reaction = 1
orders = 0.45, 0.2
q = 1, 1
source = (2*t + gamma(3)/gamma(2.55) * t^1.55 + gamma(3)/gamma(2.8) * t^1.8 + (pi^2 + 1) * t^2) * sin(pi*x) + 0.5*pi*t^2*cos(pi*x)

[check]
exact = t^2 * sin(pi*x)
time_levels = 129, 257, 513, 1025
",
    },
    Preset {
        name: "thm11-sweep",
        kind: "carleman-thm11",
        constructs: &[Construct::SubDiffusionEstimate],
        config: "\
kind = carleman-thm11

[grid]
nx = 81
nt = 81

[domain]
gamma = x_hi

[equation]
advection_x = 0.5
reaction = 1
orders = 0.3

[weight]
lambda = 1
alpha1 = 0.3

[region]
x = 0.25, 0.75
t = 0.1, 0.4

[field]
# compact support inside the region
u = (25 * pos((x - 0.3) * (0.7 - x)))^4 * (4 / 0.26^2 * pos((t - 0.12) * (0.38 - t)))^4

[sweep]
s = 8, 16, 32, 64
threshold = 0.1
",
    },
    Preset {
        name: "lemma21-sweep",
        kind: "carleman-lemma21",
        constructs: &[Construct::FractionalBound],
        config: "\
kind = carleman-lemma21

[grid]
nx = 81
nt = 81

[domain]
gamma = x_hi

[weight]
lambda = 1
alpha1 = 0.4

[estimate]
alphas = 0.2, 0.3
c1 = 1
c2 = 0.5

[field]
u = t^2 * sin(pi*x)

[sweep]
s = 8, 16, 32, 64
threshold = 0.5
",
    },
    Preset {
        name: "parabolic-sweep",
        kind: "carleman-parabolic",
        constructs: &[Construct::ParabolicEstimate],
        config: "\
kind = carleman-parabolic

[grid]
nx = 321
nt = 513

[domain]
gamma = x_hi

[equation]
advection_x = 0.5
reaction = 1

[weight]
lambda = 1
eps = 0.25
t0 = 0.5

[estimate]
tau = 0

[field]
u = (pos((x - 0.5) * (0.95 - x)) / 0.050625)^4 * (pos((t - 0.3) * (0.7 - t)) / 0.04)^4

[sweep]
s = 8, 16, 32, 64
",
    },
    Preset {
        name: "thm13-sweep",
        kind: "carleman-thm13",
        constructs: &[Construct::RationalOrderEstimate],
        config: "\
kind = carleman-thm13

[grid]
nx = 321
nt = 513

[domain]
gamma = x_hi

[equation]
advection_x = 0.5

[estimate]
order = 1/2

[weight]
lambda = 1
eps = 0.25
t0 = 0.5
levels = 8
cutoff = 1, 2

[field]
u = t^2 * sin(pi*x) * (25 / 16 * pos((x - 0.1) * (0.9 - x)))^4

[sweep]
s = 8, 16, 32, 64
",
    },
    Preset {
        name: "cauchy-short-time",
        kind: "cauchy",
        constructs: &[Construct::CauchyShortTime, Construct::HolderFit],
        config: "\
kind = cauchy
seed = 1

[grid]
nx = 81
nt = 257

[equation]
advection_x = 0.5
orders = 0.33, 0.15
q = 1, 0.5
boundary = t^2 * (1 - x) + 0.5 * t * x

[cauchy]
face = x_hi
alpha1 = 0.33
levels = 8
window = initial
target_x = 0.5, 1
reg = 1e-6

[noise]
deltas = 1e-4, 1e-3, 1e-2, 1e-1
seeds = 5
",
    },
    Preset {
        name: "cauchy-interior",
        kind: "cauchy",
        constructs: &[Construct::CauchyInterior, Construct::HolderFit],
        config: "\
kind = cauchy
seed = 1

[grid]
nx = 81
nt = 257

[equation]
advection_x = 0.5
orders = 0.6
boundary = sin(3*t) * (1 - x) + t * x

[cauchy]
face = x_hi
eps = 0.1
window = interior
target_x = 0.5, 1
reg = 1e-6

[noise]
deltas = 1e-4, 1e-3, 1e-2, 1e-1
seeds = 5
",
    },
    Preset {
        name: "isp-closed-loop",
        kind: "isp",
        constructs: &[Construct::SourceReconstruction, Construct::HolderFit],
        config: "\
kind = isp
seed = 1

[grid]
nx = 101
nt = 513

[domain]
gamma = x_hi

[equation]
advection_x = 0.3
orders = 0.5

[isp]
r = t
f = sin(2*pi*x)
t0 = 1
eps = 0.05
r0 = 0.5
hypothesis_tol = 0.05

[noise]
deltas = 1e-4, 1e-3, 1e-2, 1e-1
seeds = 5
",
    },
    Preset {
        name: "holder-fit",
        kind: "holder-fit",
        constructs: &[Construct::HolderFit],
        config: "\
kind = holder-fit

[fit]
deltas = 1e-4, 1e-3, 1e-2, 1e-1
errors = 3.1e-2, 9.4e-2, 0.31, 0.97
",
    },
];
