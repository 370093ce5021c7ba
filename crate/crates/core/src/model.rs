//! Run parameters and the time-dependent Hamiltonian of one anneal.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{BandOperator, SectorOperators};
use crate::schedule::{check_q, Quintic, ScheduleSample};
use crate::sector::SpinSector;

/// Highest nested-commutator order supported.
pub const MAX_ORDER: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    /// Reverse annealing from the biased classical state.
    Ara,
    /// Forward annealing from the transverse-field ground state.
    Qa,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Ara => "ARA",
            Protocol::Qa => "QA",
        })
    }
}

/// Parameters defining one anneal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealParams {
    pub protocol: Protocol,
    /// Odd interaction order of the p-spin problem.
    pub p: u32,
    /// Transverse-field strength Γ.
    pub gamma: f64,
    /// Path exponent in `λ = s^q` (unused for QA).
    pub q: f64,
    /// Total anneal time τ in units of `1/E₀`.
    pub tau: f64,
    /// Energy scale `E₀`.
    pub e0: f64,
    /// Nested-commutator order K; 0 disables counterdiabatic driving.
    pub order: usize,
}

impl Default for AnnealParams {
    fn default() -> Self {
        Self {
            protocol: Protocol::Ara,
            p: 3,
            gamma: 1.0,
            q: 1.0,
            tau: 1.0,
            e0: 1.0,
            order: 0,
        }
    }
}

impl AnnealParams {
    pub fn ara(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    pub fn qa(order: usize) -> Self {
        Self {
            protocol: Protocol::Qa,
            order,
            ..Self::default()
        }
    }

    pub fn with_tau(self, tau: f64) -> Self {
        Self { tau, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_q(self, q: f64) -> Self {
        Self { q, ..self }
    }

    pub fn with_p(self, p: u32) -> Self {
        Self { p, ..self }
    }

    pub fn with_order(self, order: usize) -> Self {
        Self { order, ..self }
    }

    /// Protocol label used in tables: ARA, CRA1…, QA, QA1….
    pub fn label(&self) -> String {
        match (self.protocol, self.order) {
            (Protocol::Ara, 0) => "ARA".into(),
            (Protocol::Ara, k) => format!("CRA{k}"),
            (Protocol::Qa, 0) => "QA".into(),
            (Protocol::Qa, k) => format!("QA{k}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::sector::check_exponent(self.p)?;
        check_q(self.q)?;
        let positive = [("gamma", self.gamma), ("tau", self.tau), ("e0", self.e0)];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        if self.order > MAX_ORDER {
            return Err(Error::InvalidParameter(format!(
                "nested-commutator order must be at most {MAX_ORDER}, got {}",
                self.order
            )));
        }
        Ok(())
    }

    /// The sector a run with these parameters lives in.
    pub fn sector(&self, spins: usize, fraction: f64) -> Result<SpinSector> {
        match self.protocol {
            Protocol::Ara => SpinSector::new(spins, fraction),
            Protocol::Qa => SpinSector::ladder(spins),
        }
    }
}

/// Coefficients of `(V_TF, H₀, H_P)` in a Hamiltonian or its derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mixture {
    pub driver: f64,
    pub bias: f64,
    pub problem: f64,
}

/// A sector together with the fixed operators and parameters of one anneal.
#[derive(Clone, Debug)]
pub struct AnnealModel {
    pub params: AnnealParams,
    ops: SectorOperators,
}

impl AnnealModel {
    pub fn new(sector: &SpinSector, params: &AnnealParams) -> Result<Self> {
        params.validate()?;
        if params.protocol == Protocol::Qa && sector.down() != 0 {
            return Err(Error::InvalidParameter(
                "forward annealing runs on the single j = N/2 ladder".into(),
            ));
        }
        Ok(Self {
            params: *params,
            ops: SectorOperators::new(sector, params.p, params.gamma, params.e0)?,
        })
    }

    pub fn sector(&self) -> &SpinSector {
        &self.ops.sector
    }

    pub fn operators(&self) -> &SectorOperators {
        &self.ops
    }

    pub fn sample(&self, theta: f64) -> ScheduleSample {
        ScheduleSample::new(&Quintic, theta, self.params.q)
    }

    /// Coefficients of `H(θ)`.
    pub fn hamiltonian_mixture(&self, sample: &ScheduleSample) -> Mixture {
        let s = sample.s;
        match self.params.protocol {
            Protocol::Ara => Mixture {
                driver: (1.0 - s) * sample.lambda,
                bias: (1.0 - s) * (1.0 - sample.lambda),
                problem: s,
            },
            Protocol::Qa => Mixture {
                driver: 1.0 - s,
                bias: 0.0,
                problem: s,
            },
        }
    }

    /// Coefficients of `dH/dθ`, the exact derivative along the path.
    pub fn derivative_mixture(&self, sample: &ScheduleSample) -> Mixture {
        let ScheduleSample {
            s,
            s_dot,
            lambda,
            lambda_dot,
            ..
        } = *sample;
        match self.params.protocol {
            Protocol::Ara => Mixture {
                driver: lambda_dot * (1.0 - s) - s_dot * lambda,
                bias: -lambda_dot * (1.0 - s) - s_dot * (1.0 - lambda),
                problem: s_dot,
            },
            Protocol::Qa => Mixture {
                driver: -s_dot,
                bias: 0.0,
                problem: s_dot,
            },
        }
    }

    fn assemble(&self, m: Mixture) -> BandOperator {
        self.ops.combine(m.driver, m.bias, m.problem)
    }

    /// `H(θ)` in band form.
    pub fn hamiltonian(&self, theta: f64) -> BandOperator {
        self.assemble(self.hamiltonian_mixture(&self.sample(theta)))
    }

    /// `dH/dθ` in band form.
    pub fn dh_dtheta(&self, theta: f64) -> BandOperator {
        self.assemble(self.derivative_mixture(&self.sample(theta)))
    }

    /// Hamiltonian and derivative at `θ` in one call.
    pub fn hamiltonian_and_derivative(&self, theta: f64) -> (BandOperator, BandOperator) {
        let sample = self.sample(theta);
        (
            self.assemble(self.hamiltonian_mixture(&sample)),
            self.assemble(self.derivative_mixture(&sample)),
        )
    }

    /// Dense `H(λ, s)` at an arbitrary point of the control plane.
    pub fn hamiltonian_at(&self, lambda: f64, s: f64) -> DMatrix<f64> {
        let m = match self.params.protocol {
            Protocol::Ara => Mixture {
                driver: (1.0 - s) * lambda,
                bias: (1.0 - s) * (1.0 - lambda),
                problem: s,
            },
            Protocol::Qa => Mixture {
                driver: 1.0 - s,
                bias: 0.0,
                problem: s,
            },
        };
        self.assemble(m).to_dense()
    }
}

/// `dH/dθ` for a sector and parameters, dense.
pub fn dh_dtheta(sector: &SpinSector, theta: f64, params: &AnnealParams) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "normalized time must lie in [0, 1], got {theta}"
        )));
    }
    Ok(AnnealModel::new(sector, params)?.dh_dtheta(theta).to_dense())
}
