use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::model::HyperParams;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Admissible values, sorted ascending.
    Grid(Vec<f64>),
    Continuous {
        lo: f64,
        hi: f64,
        log: bool,
    },
}

impl Domain {
    pub fn grid(values: &[f64]) -> Result<Domain> {
        if values.is_empty() {
            return Err(Error::EmptyGrid("domain"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid", "values must be finite"));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        v.dedup();
        Ok(Domain::Grid(v))
    }

    pub fn linear(lo: f64, hi: f64) -> Result<Domain> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(
                "interval",
                format!("[{lo}, {hi}] is not a finite non-empty interval"),
            ));
        }
        Ok(Domain::Continuous { lo, hi, log: false })
    }

    pub fn log(lo: f64, hi: f64) -> Result<Domain> {
        if !(lo > 0.0) {
            return Err(invalid("interval", "log-scaled bounds must be positive"));
        }
        Domain::linear(lo, hi).map(|_| Domain::Continuous { lo, hi, log: true })
    }

    /// Whether mutation happens on a log2 axis.
    fn log_axis(&self) -> bool {
        match self {
            Domain::Grid(v) => v[0] > 0.0,
            Domain::Continuous { log, .. } => *log,
        }
    }

    /// Maps a value to the coordinate in which steps are taken.
    pub fn to_internal(&self, v: f64) -> f64 {
        if self.log_axis() {
            math::log2(v)
        } else {
            v
        }
    }

    /// Inverse of [`Domain::to_internal`], clamped and snapped into the domain.
    pub fn from_internal(&self, z: f64) -> f64 {
        let v = if self.log_axis() {
            math::powf(2.0, z)
        } else {
            z
        };
        self.project(v)
    }

    /// Nearest admissible value (nearest on the mutation axis for grids).
    pub fn project(&self, v: f64) -> f64 {
        match self {
            Domain::Continuous { lo, hi, .. } => {
                if v.is_nan() {
                    *lo
                } else {
                    v.clamp(*lo, *hi)
                }
            }
            Domain::Grid(g) => {
                let z = self.to_internal(v);
                let dist = |a: f64| {
                    let d = self.to_internal(a) - z;
                    if d.is_nan() {
                        f64::INFINITY
                    } else {
                        d.abs()
                    }
                };
                g.iter()
                    .copied()
                    .min_by(|a, b| dist(*a).total_cmp(&dist(*b)))
                    .unwrap_or(v)
            }
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        match self {
            Domain::Continuous { lo, hi, .. } => (*lo..=*hi).contains(&v),
            Domain::Grid(g) => g.contains(&v),
        }
    }

    /// Default initial mutation scale on the internal axis.
    pub fn default_sigma0(&self) -> f64 {
        match self {
            // One octave.
            Domain::Grid(_) if self.log_axis() => 1.0,
            Domain::Grid(g) => (g[g.len() - 1] - g[0]).max(1.0) / 4.0,
            Domain::Continuous { lo, hi, .. } => {
                (self.to_internal(*hi) - self.to_internal(*lo)) / 4.0
            }
        }
    }

    /// Uniform draw: uniform index for grids, log-uniform for log intervals.
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            Domain::Grid(g) => g[rng.below(g.len())],
            Domain::Continuous { lo, hi, .. } => {
                let (a, b) = (self.to_internal(*lo), self.to_internal(*hi));
                self.from_internal(rng.uniform_in(a, b))
            }
        }
    }

    /// Position in `[0, 1]` along the internal axis.
    pub fn normalise(&self, v: f64) -> f64 {
        let (a, b) = self.internal_bounds();
        if b > a {
            (self.to_internal(v) - a) / (b - a)
        } else {
            0.0
        }
    }

    pub fn internal_bounds(&self) -> (f64, f64) {
        match self {
            Domain::Grid(g) => (self.to_internal(g[0]), self.to_internal(g[g.len() - 1])),
            Domain::Continuous { lo, hi, .. } => (self.to_internal(*lo), self.to_internal(*hi)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub domain: Domain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchSpace {
    pub params: Vec<Param>,
}

impl SearchSpace {
    pub fn new(params: Vec<Param>) -> Result<Self> {
        if params.is_empty() {
            return Err(invalid("search space", "no parameters"));
        }
        for (i, p) in params.iter().enumerate() {
            if matches!(&p.domain, Domain::Grid(g) if g.is_empty()) {
                return Err(Error::EmptyGrid("search space"));
            }
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(invalid(
                    "search space",
                    format!("duplicate parameter `{}`", p.name),
                ));
            }
        }
        Ok(SearchSpace { params })
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.params)
            .map(|(&v, p)| p.domain.project(v))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.params)
                .all(|(&v, p)| p.domain.contains(v))
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.params.iter().map(|p| p.domain.sample(rng)).collect()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.dim(),
            });
        }
        Ok(())
    }

    /// The twelve-parameter model space, named as in [`HyperParams::NAMES`].
    pub fn hyperparams() -> SearchSpace {
        let pow2 =
            |lo: u32, hi: u32| Domain::Grid((lo..=hi).map(|e| f64::from(1u32 << e)).collect());
        let mut params = Vec::with_capacity(HyperParams::DIM);
        let mut push = |name: &str, domain: Domain| {
            params.push(Param {
                name: name.into(),
                domain,
            })
        };
        for n in &HyperParams::NAMES[0..4] {
            push(n, pow2(3, 9));
        }
        for n in &HyperParams::NAMES[4..6] {
            push(n, pow2(2, 7));
        }
        for n in &HyperParams::NAMES[6..8] {
            push(
                n,
                Domain::Continuous {
                    lo: 0.0,
                    hi: 0.5,
                    log: false,
                },
            );
        }
        push("batch_size", pow2(5, 10));
        push("learning_rate", Domain::Grid(vec![1e-5, 1e-4, 1e-3, 1e-2]));
        push(
            "attention_dim",
            Domain::Grid(vec![8.0, 16.0, 32.0, 48.0, 64.0, 80.0, 96.0, 128.0]),
        );
        push(
            "l2_reg",
            Domain::Continuous {
                lo: 1e-6,
                hi: 1e-2,
                log: true,
            },
        );
        SearchSpace { params }
    }
}
