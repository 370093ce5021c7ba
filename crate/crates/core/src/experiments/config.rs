//! Sweep configuration, read from TOML.
//!
//! ```toml
//! protocol = "ARA"
//! p = 3
//! gamma = 1.0
//! q = [1.0, 0.5]
//! spins = [10, 20, 30, 40, 50]
//! fractions = [0.7, 0.9]
//! taus = [1.0]
//! orders = [0, 1, 2, 3]
//!
//! [grids]
//! cost_points = 201
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::dynamics::{EvolveOptions, Integrator};
use crate::error::{Error, Result};
use crate::model::{AnnealParams, Protocol, MAX_ORDER};
use crate::sector::SpinSector;

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

/// Grid sizes of the derived observables.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// θ points of the cost quadrature (odd, at least 201).
    pub cost_points: usize,
    /// θ points of the norm traces.
    pub trace_points: usize,
    /// θ points of the minimum-gap scan (at least 400).
    pub gap_points: usize,
    /// λ points of gap maps.
    pub map_lambda: usize,
    /// s points of gap maps.
    pub map_s: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            cost_points: 201,
            trace_points: 201,
            gap_points: 400,
            map_lambda: 64,
            map_s: 64,
        }
    }
}

/// Convergence settings forwarded to the integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Solver {
    pub integrator: Integrator,
    pub initial_steps: usize,
    pub max_steps: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for Solver {
    fn default() -> Self {
        let o = EvolveOptions::default();
        Self {
            integrator: o.integrator,
            initial_steps: o.initial_steps,
            max_steps: o.max_steps,
            abs_tol: o.abs_tol,
            rel_tol: o.rel_tol,
        }
    }
}

impl Solver {
    pub fn options(&self) -> EvolveOptions {
        EvolveOptions {
            integrator: self.integrator,
            initial_steps: self.initial_steps,
            max_steps: self.max_steps,
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            ..EvolveOptions::default()
        }
    }
}

fn default_protocol() -> Protocol {
    Protocol::Ara
}
fn default_p() -> u32 {
    3
}
fn default_one() -> f64 {
    1.0
}
fn default_q() -> Vec<f64> {
    vec![1.0]
}
fn default_taus() -> Vec<f64> {
    vec![1.0]
}
fn default_orders() -> Vec<usize> {
    vec![0]
}
fn default_pd() -> f64 {
    0.99
}

/// One sweep over `N × c × q × τ × K` at fixed `p`, `Γ` and `E₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default = "default_protocol")]
    pub protocol: Protocol,
    #[serde(default = "default_p")]
    pub p: u32,
    #[serde(default = "default_one")]
    pub gamma: f64,
    #[serde(default = "default_one")]
    pub e0: f64,
    /// Path exponents; a single number is accepted.
    #[serde(default = "default_q", deserialize_with = "one_or_many")]
    pub q: Vec<f64>,
    #[serde(alias = "N")]
    pub spins: Vec<usize>,
    /// Initial up fractions; ignored for QA.
    #[serde(default, alias = "c")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_taus", alias = "tau")]
    pub taus: Vec<f64>,
    /// Nested-commutator orders K.
    #[serde(default = "default_orders", alias = "K")]
    pub orders: Vec<usize>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub solver: Solver,
    /// Target probability of the time to solution.
    #[serde(default = "default_pd")]
    pub p_d: f64,
    /// Also compute trace-norm costs (one SVD per θ point).
    #[serde(default)]
    pub trace_norm: bool,
    /// Output directory used when `--out` is not given.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    /// A spec with defaults everywhere except the given grids.
    pub fn new(protocol: Protocol, spins: Vec<usize>, fractions: Vec<f64>) -> Self {
        Self {
            protocol,
            p: default_p(),
            gamma: 1.0,
            e0: 1.0,
            q: default_q(),
            spins,
            fractions,
            taus: default_taus(),
            orders: default_orders(),
            grids: Grids::default(),
            solver: Solver::default(),
            p_d: default_pd(),
            trace_norm: false,
            output: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serializes")
    }

    /// Parameters of a run at one grid point.
    pub fn params(&self, protocol: Protocol, q: f64, tau: f64, order: usize) -> AnnealParams {
        AnnealParams {
            protocol,
            p: self.p,
            gamma: self.gamma,
            q,
            tau,
            e0: self.e0,
            order,
        }
    }

    /// Path exponents actually swept; QA has no λ path.
    pub fn effective_q(&self, protocol: Protocol) -> Vec<f64> {
        match protocol {
            Protocol::Ara => self.q.clone(),
            Protocol::Qa => vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.spins.is_empty() {
            return bad("spins list is empty".into());
        }
        if self.taus.is_empty() {
            return bad("taus list is empty".into());
        }
        if self.orders.is_empty() {
            return bad("orders list is empty".into());
        }
        if self.q.is_empty() {
            return bad("q list is empty".into());
        }
        if self.protocol == Protocol::Ara && self.fractions.is_empty() {
            return bad("fractions list is empty".into());
        }
        if let Some(&k) = self.orders.iter().find(|&&k| k > MAX_ORDER) {
            return bad(format!("order {k} exceeds {MAX_ORDER}"));
        }
        if !(self.p_d > 0.0 && self.p_d < 1.0) {
            return bad(format!("p_d must lie in (0, 1), got {}", self.p_d));
        }
        if self.grids.cost_points < 201 || self.grids.cost_points.is_multiple_of(2) {
            return bad("grids.cost_points must be odd and at least 201".into());
        }
        if self.grids.gap_points < 400 {
            return bad("grids.gap_points must be at least 400".into());
        }
        if self.grids.trace_points < 2 {
            return bad("grids.trace_points must be at least 2".into());
        }
        if self.grids.map_lambda < 64 || self.grids.map_s < 64 {
            return bad("gap map grids need at least 64 points per axis".into());
        }
        for &q in &self.q {
            for &tau in &self.taus {
                for &k in &self.orders {
                    self.params(self.protocol, q, tau, k)
                        .validate()
                        .map_err(|e| Error::Config(e.to_string()))?;
                }
            }
        }
        if self.protocol == Protocol::Ara {
            for &n in &self.spins {
                for &c in &self.fractions {
                    SpinSector::new(n, c).map_err(|e| Error::Config(e.to_string()))?;
                }
            }
        } else if self.spins.contains(&0) {
            return bad("spins must be positive".into());
        }
        Ok(())
    }
}
