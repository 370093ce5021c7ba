//! Time evolution of annealing runs and the ground-state fidelity.
//!
//! In normalized time `θ = t/τ` the Schrödinger equation with the
//! counterdiabatic term reads `i dψ/dθ = M(θ)ψ`, where
//! `M = τ·H(θ) + i·R(θ)` and `R` is the real generator of the gauge
//! potential built from `dH/dθ`. `M` is Hermitian because `R` is
//! antisymmetric.
//!
//! Runs are integrated with a fixed number of steps which is doubled until
//! the fidelity stabilizes. The default stepper is the fourth-order
//! commutator-free Magnus scheme with Lanczos exponentials; classical RK4 is
//! kept as a reference.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{self, variational_coefficients, NormTracePoint};
use crate::krylov::expm_apply;
use crate::model::{AnnealModel, AnnealParams, Mixture, Protocol};
use crate::operator::{BandOperator, OperatorAlgebra};
use crate::sector::{initial_state, ln_binomial, qa_initial_state, target_state, SpinSector, StateVector};

/// Fidelities below this value are reported but flagged as untrustworthy.
pub const TRUST_FLOOR: f64 = 1e-30;

/// Largest spin count accepted by [`evolve_full_space`].
pub const FULL_SPACE_MAX_SPINS: usize = 8;

/// Which counterdiabatic term accompanies the Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Driving {
    /// Variational nested-commutator gauge of the order in the parameters.
    Variational,
    /// Spectral gauge restricted to the ground-state couplings.
    ExactGroundState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    Magnus4,
    Rk4,
}

/// Convergence contract of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub integrator: Integrator,
    pub driving: Driving,
    /// Step count of the first pass.
    pub initial_steps: usize,
    /// Budget for the finest pass.
    pub max_steps: usize,
    /// Accept when the fidelity change between passes is below this...
    pub abs_tol: f64,
    /// ...and below this fraction of the fidelity itself.
    pub rel_tol: f64,
    /// Largest tolerated `|‖ψ(1)‖ − 1|`.
    pub norm_tol: f64,
    /// Points of the optional norm trace; 0 skips it.
    pub trace_points: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            integrator: Integrator::Magnus4,
            driving: Driving::Variational,
            initial_steps: 64,
            max_steps: 1 << 16,
            abs_tol: 1e-9,
            rel_tol: 1e-4,
            norm_tol: 1e-8,
            trace_points: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunFlag {
    /// `P_GS` is below [`TRUST_FLOOR`].
    BelowTrustFloor,
}

/// Outcome of one converged run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunResult {
    pub params: AnnealParams,
    pub spins: usize,
    pub fraction: f64,
    /// `|⟨ψ_P|ψ(1)⟩|²`.
    pub p_gs: f64,
    #[serde(skip)]
    pub final_state: StateVector,
    /// `|‖ψ(1)‖ − 1|`.
    pub norm_drift: f64,
    /// Steps of the accepted pass.
    pub steps: usize,
    /// Fidelity change between the two last passes.
    pub last_change: f64,
    pub norm_trace: Option<Vec<NormTracePoint>>,
    pub flags: Vec<RunFlag>,
}

/// Real operator in band or dense storage.
#[derive(Clone, Debug)]
pub enum Operator {
    Band(BandOperator),
    Dense(DMatrix<f64>),
}

impl Operator {
    /// `out ← out + factor·self·psi`.
    pub fn apply_add(&self, factor: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        match self {
            Operator::Band(op) => op.apply_add(factor, psi, out),
            Operator::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row: Complex64 = m.row(i).iter().zip(psi).map(|(a, p)| p * *a).sum();
                    *o += factor * row;
                }
            }
        }
    }
}

/// `M(θ) = τ·H(θ) + i·R(θ)` frozen at one θ.
#[derive(Clone, Debug)]
pub struct Frame {
    /// `τ·H(θ)`.
    pub hamiltonian: Operator,
    /// Gauge generator `R(θ)`, absent without driving.
    pub gauge: Option<Operator>,
}

impl Frame {
    /// `out ← out + weight·M·psi`.
    pub fn apply_add(&self, weight: f64, psi: &[Complex64], out: &mut [Complex64]) {
        self.hamiltonian.apply_add(Complex64::new(weight, 0.0), psi, out);
        if let Some(r) = &self.gauge {
            r.apply_add(Complex64::new(0.0, weight), psi, out);
        }
    }
}

/// Source of the θ-dependent generator of a run.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    fn frame(&self, theta: f64) -> Result<Frame>;

    /// Exponent `m` of the time variable `u` with `θ = u^m` in which the
    /// generator is smooth.
    fn warp(&self) -> i32 {
        1
    }
}

/// `λ = s^q` behaves like `θ^{3q}` at the start of the path, which is not
/// smooth unless `3q` is an integer. Stepping in `u = √θ` restores
/// smoothness for half-integer `3q`.
fn warp_for(q: f64) -> i32 {
    let x = 3.0 * q;
    if (x - x.round()).abs() < 1e-12 {
        1
    } else {
        2
    }
}

/// Generator on the two-ladder sector.
pub struct SectorGenerator {
    model: AnnealModel,
    driving: Driving,
}

impl SectorGenerator {
    pub fn new(model: AnnealModel, driving: Driving) -> Self {
        Self { model, driving }
    }
}

impl Generator for SectorGenerator {
    fn dim(&self) -> usize {
        self.model.sector().dim()
    }

    fn warp(&self) -> i32 {
        warp_for(self.model.params.q)
    }

    fn frame(&self, theta: f64) -> Result<Frame> {
        let params = &self.model.params;
        let (h, dh) = self.model.hamiltonian_and_derivative(theta);
        let gauge = match self.driving {
            Driving::Variational if params.order > 0 => Some(Operator::Band(
                variational_coefficients(&h, &dh, params.order)?.generator,
            )),
            Driving::Variational => None,
            Driving::ExactGroundState => Some(Operator::Dense(gauge::ground_state_gauge_potential(
                &h.to_dense(),
                &dh.to_dense(),
            )?)),
        };
        Ok(Frame {
            hamiltonian: Operator::Band(h.scaled(params.tau)),
            gauge,
        })
    }
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6
const MAGNUS_A1: f64 = 0.25 - GAUSS_OFFSET;
const MAGNUS_A2: f64 = 0.25 + GAUSS_OFFSET;

fn zeros(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); n]
}

/// Frame at `u` together with the chain-rule factor `dθ/du`.
fn warped_frame<G: Generator + ?Sized>(generator: &G, u: f64) -> Result<(Frame, f64)> {
    let m = generator.warp();
    let theta = u.powi(m).clamp(0.0, 1.0);
    let jacobian = m as f64 * u.powi(m - 1);
    Ok((generator.frame(theta)?, jacobian))
}

/// Propagates `psi` from θ = 0 to 1 in `steps` equal steps of the
/// generator's time variable.
pub fn propagate<G: Generator + ?Sized>(
    generator: &G,
    psi: &mut [Complex64],
    steps: usize,
    integrator: Integrator,
) -> Result<()> {
    let h = 1.0 / steps as f64;
    let n = psi.len();
    match integrator {
        Integrator::Magnus4 => {
            for step in 0..steps {
                let u = step as f64 * h;
                let (f1, j1) = warped_frame(generator, u + (0.5 - GAUSS_OFFSET) * h)?;
                let (f2, j2) = warped_frame(generator, u + (0.5 + GAUSS_OFFSET) * h)?;
                for (w1, w2) in [(MAGNUS_A2, MAGNUS_A1), (MAGNUS_A1, MAGNUS_A2)] {
                    let apply = |x: &[Complex64], y: &mut [Complex64]| {
                        f1.apply_add(w1 * j1, x, y);
                        f2.apply_add(w2 * j2, x, y);
                    };
                    expm_apply(&apply, psi, h);
                }
            }
        }
        Integrator::Rk4 => {
            // dψ/du = −i·θ'(u)·M·ψ
            let deriv = |(frame, jac): &(Frame, f64), x: &[Complex64]| {
                let mut y = zeros(n);
                frame.apply_add(*jac, x, &mut y);
                y.iter_mut().for_each(|v| *v = Complex64::new(v.im, -v.re));
                y
            };
            let mut start = warped_frame(generator, 0.0)?;
            for step in 0..steps {
                let u = step as f64 * h;
                let mid = warped_frame(generator, u + 0.5 * h)?;
                let end = warped_frame(generator, u + h)?;
                let k1 = deriv(&start, psi);
                let tmp: Vec<_> = psi.iter().zip(&k1).map(|(p, k)| p + k * (0.5 * h)).collect();
                let k2 = deriv(&mid, &tmp);
                let tmp: Vec<_> = psi.iter().zip(&k2).map(|(p, k)| p + k * (0.5 * h)).collect();
                let k3 = deriv(&mid, &tmp);
                let tmp: Vec<_> = psi.iter().zip(&k3).map(|(p, k)| p + k * h).collect();
                let k4 = deriv(&end, &tmp);
                for i in 0..n {
                    psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                }
                start = end;
            }
        }
    }
    Ok(())
}

/// Output of the step-doubling controller.
#[derive(Clone, Debug)]
pub struct Converged {
    pub state: StateVector,
    pub fidelity: f64,
    pub steps: usize,
    pub last_change: f64,
    pub norm_drift: f64,
}

/// Propagates from `initial` with step doubling until the fidelity with
/// `target` meets the tolerances of `options`.
pub fn converge<G: Generator + ?Sized>(
    generator: &G,
    initial: &StateVector,
    target: &StateVector,
    options: &EvolveOptions,
) -> Result<Converged> {
    if options.initial_steps == 0 || options.max_steps < options.initial_steps {
        return Err(Error::InvalidParameter(
            "step budget must be at least the initial step count".into(),
        ));
    }
    let run = |steps: usize| -> Result<(Vec<Complex64>, f64, f64)> {
        let mut psi: Vec<Complex64> = initial.iter().copied().collect();
        propagate(generator, &mut psi, steps, options.integrator)?;
        let overlap: Complex64 = target.iter().zip(&psi).map(|(t, p)| t.conj() * p).sum();
        let norm = psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        Ok((psi, overlap.norm_sqr(), (norm - 1.0).abs()))
    };
    let mut steps = options.initial_steps;
    let (_, mut previous, _) = run(steps)?;
    let mut last_change = f64::INFINITY;
    while steps * 2 <= options.max_steps {
        steps *= 2;
        let (psi, fidelity, drift) = run(steps)?;
        last_change = (fidelity - previous).abs();
        if last_change <= options.abs_tol && last_change <= options.rel_tol * fidelity && drift <= options.norm_tol {
            return Ok(Converged {
                state: DVector::from_vec(psi),
                fidelity: fidelity.clamp(0.0, 1.0),
                steps,
                last_change,
                norm_drift: drift,
            });
        }
        previous = fidelity;
    }
    Err(Error::NonConverged {
        max_steps: options.max_steps,
        last_change,
    })
}

fn finish(
    params: &AnnealParams,
    spins: usize,
    fraction: f64,
    run: Converged,
    norm_trace: Option<Vec<NormTracePoint>>,
) -> RunResult {
    let mut flags = Vec::new();
    if run.fidelity < TRUST_FLOOR {
        flags.push(RunFlag::BelowTrustFloor);
    }
    RunResult {
        params: *params,
        spins,
        fraction,
        p_gs: run.fidelity,
        final_state: run.state,
        norm_drift: run.norm_drift,
        steps: run.steps,
        last_change: run.last_change,
        norm_trace,
        flags,
    }
}

/// Runs one anneal on its sector and returns the ground-state fidelity.
///
/// ARA starts from the classical state `m↑ = j↑, m↓ = −j↓`; QA starts from
/// the transverse-field ground state on the ladder. Both end on the
/// ferromagnetic ground state of `H_P`.
pub fn evolve(sector: &SpinSector, params: &AnnealParams, options: &EvolveOptions) -> Result<RunResult> {
    let model = AnnealModel::new(sector, params)?;
    let initial = match params.protocol {
        Protocol::Ara => initial_state(sector),
        Protocol::Qa => qa_initial_state(sector.spins())?,
    };
    let target = target_state(sector);
    let norm_trace = if options.trace_points >= 2 && params.order > 0 {
        let grid = gauge::uniform_grid(options.trace_points);
        Some(gauge::norm_trace(&model, params.order, params.tau, &grid, false)?)
    } else {
        None
    };
    let generator = SectorGenerator::new(model, options.driving);
    let run = converge(&generator, &initial, &target, options)?;
    Ok(finish(params, sector.spins(), sector.fraction(), run, norm_trace))
}

/// Long uncorrected run whose fidelity approaches one by the adiabatic theorem.
pub fn adiabatic_check(sector: &SpinSector, params: &AnnealParams, options: &EvolveOptions) -> Result<RunResult> {
    let options = EvolveOptions {
        driving: Driving::Variational,
        ..*options
    };
    evolve(sector, &params.with_order(0), &options)
}

/// Spin operators of the full `2^N` space, with bit `i` set when spin `i`
/// points down.
struct FullSpace {
    spins: usize,
    up: usize,
}

impl FullSpace {
    fn dim(&self) -> usize {
        1 << self.spins
    }

    fn sigma_z(&self, state: usize, spin: usize) -> f64 {
        if state >> spin & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// `Σᵢ σᶻᵢ`, optionally restricted to one sublattice with a sign.
    fn z_sum(&self, weight: impl Fn(usize) -> f64) -> Vec<f64> {
        (0..self.dim())
            .map(|x| (0..self.spins).map(|i| weight(i) * self.sigma_z(x, i)).sum())
            .collect()
    }

    /// `−Γ Σᵢ σˣᵢ`.
    fn transverse(&self, gamma: f64) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for x in 0..self.dim() {
            for i in 0..self.spins {
                m[(x ^ (1 << i), x)] -= gamma;
            }
        }
        m
    }

    /// `−N·E₀·(Σᵢ σᶻᵢ / N)^p`.
    fn problem(&self, p: u32, e0: f64) -> Vec<f64> {
        let n = self.spins as f64;
        self.z_sum(|_| 1.0)
            .into_iter()
            .map(|z| -n * e0 * (z / n).powi(p as i32))
            .collect()
    }

    /// `E₀(−Σ_{up} σᶻᵢ + Σ_{down} σᶻᵢ)`.
    fn bias(&self, e0: f64) -> Vec<f64> {
        self.z_sum(|i| if i < self.up { -e0 } else { e0 })
    }
}

/// Isometry from the sector into the full `2^N` space: basis state
/// `(k↑, k↓)` maps to the normalized symmetric superposition of all
/// configurations with `k↑` flipped spins in the first sublattice and `k↓`
/// in the second.
pub fn embed_state(sector: &SpinSector, psi: &StateVector) -> Result<StateVector> {
    if sector.spins() > FULL_SPACE_MAX_SPINS {
        return Err(Error::DimensionTooLarge {
            spins: sector.spins(),
            max: FULL_SPACE_MAX_SPINS,
        });
    }
    let space = FullSpace {
        spins: sector.spins(),
        up: sector.up(),
    };
    let up_mask = (1usize << sector.up()) - 1;
    Ok(StateVector::from_fn(space.dim(), |x, _| {
        let k_up = (x & up_mask).count_ones() as usize;
        let k_down = (x & !up_mask).count_ones() as usize;
        let norm = (ln_binomial(sector.up(), k_up) + ln_binomial(sector.down(), k_down))
            .exp()
            .sqrt();
        psi[sector.index(k_up, k_down)] / norm
    }))
}

struct FullSpaceGenerator {
    model: AnnealModel,
    driver: DMatrix<f64>,
    bias: DVector<f64>,
    problem: DVector<f64>,
}

impl FullSpaceGenerator {
    fn assemble(&self, m: Mixture) -> DMatrix<f64> {
        let mut h = &self.driver * m.driver;
        for i in 0..h.nrows() {
            h[(i, i)] += m.bias * self.bias[i] + m.problem * self.problem[i];
        }
        h
    }
}

impl Generator for FullSpaceGenerator {
    fn dim(&self) -> usize {
        self.driver.nrows()
    }

    fn warp(&self) -> i32 {
        warp_for(self.model.params.q)
    }

    fn frame(&self, theta: f64) -> Result<Frame> {
        let params = &self.model.params;
        let sample = self.model.sample(theta);
        let h = self.assemble(self.model.hamiltonian_mixture(&sample));
        let gauge = if params.order > 0 {
            // coefficients from the sector, operators from the full space
            let (hs, dhs) = self.model.hamiltonian_and_derivative(theta);
            let alphas = variational_coefficients(&hs, &dhs, params.order)?.alphas;
            let dh = self.assemble(self.model.derivative_mixture(&sample));
            let mut r = dh.zeros_like();
            let mut power = dh;
            for (k, alpha) in alphas.iter().enumerate() {
                power = h.commutator(&power);
                r += &power * *alpha;
                if k + 1 < alphas.len() {
                    power = h.commutator(&power);
                }
            }
            Some(Operator::Dense(r))
        } else {
            None
        };
        Ok(Frame {
            hamiltonian: Operator::Dense(h * params.tau),
            gauge,
        })
    }
}

/// Brute-force propagation in the full `2^N` space with the Hamiltonians
/// built spin by spin. Counterdiabatic coefficients are taken from the
/// sector so the two propagations use the same gauge operator.
pub fn evolve_full_space(
    spins: usize,
    fraction: f64,
    params: &AnnealParams,
    options: &EvolveOptions,
) -> Result<RunResult> {
    if spins > FULL_SPACE_MAX_SPINS {
        return Err(Error::DimensionTooLarge {
            spins,
            max: FULL_SPACE_MAX_SPINS,
        });
    }
    let sector = params.sector(spins, fraction)?;
    let model = AnnealModel::new(&sector, params)?;
    let space = FullSpace { spins, up: sector.up() };
    let dim = space.dim();
    let generator = FullSpaceGenerator {
        driver: space.transverse(params.gamma),
        bias: DVector::from_vec(space.bias(params.e0)),
        problem: DVector::from_vec(space.problem(params.p, params.e0)),
        model,
    };
    let initial = match params.protocol {
        // up sublattice aligned, down sublattice anti-aligned
        Protocol::Ara => {
            let down_bits = (dim - 1) & !((1usize << sector.up()) - 1);
            let mut psi = StateVector::zeros(dim);
            psi[down_bits] = Complex64::new(1.0, 0.0);
            psi
        }
        Protocol::Qa => StateVector::from_element(dim, Complex64::new((dim as f64).sqrt().recip(), 0.0)),
    };
    let mut target = StateVector::zeros(dim);
    target[0] = Complex64::new(1.0, 0.0);
    let run = converge(&generator, &initial, &target, options)?;
    Ok(finish(params, spins, fraction, run, None))
}
