//! Approximate adiabatic gauge potentials from the nested-commutator
//! expansion, the exact spectral gauge potential used as an oracle, and the
//! norms and cost of the resulting counterdiabatic term.
//!
//! With `L(X) = [H, X]` the expansion reads
//!
//! ```text
//! A* = i Σ_{k=1..K} α_k L^{2k−1}(∂H)
//! ```
//!
//! For real symmetric `H` and `∂H` every odd power `L^{2k−1}(∂H)` is real
//! antisymmetric, so `A*` is purely imaginary. Throughout this module the
//! gauge potential is therefore carried as its real generator `R` with
//! `A = iR`. The residual of the gauge equation is
//! `G = ∂H + i[A, H] = ∂H + Σ α_k L^{2k}(∂H)` and the coefficients minimize
//! its Frobenius norm.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnnealModel, MAX_ORDER};
use crate::operator::{BandOperator, OperatorAlgebra};
use crate::spectra::eig_symmetric;

/// Eigenvalues of the equilibrated Gram matrix below this fraction of the
/// largest are dropped from the pseudo-inverse.
const GRAM_CUTOFF: f64 = 1e-12;

/// `L^m(X)` with `L(Y) = [H, Y]`.
pub fn nested_commutator<O: OperatorAlgebra>(h: &O, x: &O, m: usize) -> O {
    let mut out = x.clone();
    for _ in 0..m {
        out = h.commutator(&out);
    }
    out
}

/// Variationally optimal nested-commutator gauge potential of order K.
#[derive(Clone, Debug)]
pub struct GaugeExpansion<O> {
    /// `α_k`, in units of `E₀^{−2k}`.
    pub alphas: Vec<f64>,
    /// Real generator `R` of `A* = iR`.
    pub generator: O,
    /// Residual `G = ∂H + Σ α_k L^{2k}(∂H)`.
    pub residual: O,
    /// Set when the Gram system vanished and `α = 0` was returned.
    pub degenerate: bool,
    /// Number of Gram directions kept by the pseudo-inverse.
    pub rank: usize,
}

impl<O: OperatorAlgebra> GaugeExpansion<O> {
    pub fn residual_norm(&self) -> f64 {
        self.residual.frobenius_norm()
    }
}

/// Minimizes `‖∂H + Σ_k α_k L^{2k}(∂H)‖_F` over `α ∈ ℝ^K`.
///
/// The normal equations `M α = −b`, `M_kl = ⟨L^{2k}∂H, L^{2l}∂H⟩`,
/// `b_k = ⟨L^{2k}∂H, ∂H⟩`, are solved after rescaling `H` by its row-sum
/// norm and equilibrating `M` to unit diagonal, with a truncated spectral
/// pseudo-inverse. When `M` vanishes (`∂H` commutes with `H`) the result is
/// `α = 0` with [`GaugeExpansion::degenerate`] set.
pub fn variational_coefficients<O: OperatorAlgebra>(h: &O, dh: &O, order: usize) -> Result<GaugeExpansion<O>> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "expansion order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    let scale = h.max_row_sum();
    let dh_norm = dh.frobenius_norm();
    let zero = || GaugeExpansion {
        alphas: vec![0.0; order],
        generator: dh.zeros_like(),
        residual: dh.clone(),
        degenerate: true,
        rank: 0,
    };
    if scale == 0.0 || dh_norm == 0.0 {
        return Ok(zero());
    }
    let hs = h.scaled(1.0 / scale);

    // powers[m] = L_s^m(∂H) with the rescaled H
    let mut powers = Vec::with_capacity(2 * order + 1);
    powers.push(dh.clone());
    for m in 1..=2 * order {
        let next = hs.commutator(&powers[m - 1]);
        powers.push(next);
    }

    let gram = DMatrix::from_fn(order, order, |k, l| {
        powers[2 * k + 2].frobenius_inner(&powers[2 * l + 2])
    });
    let rhs = DVector::from_fn(order, |k, _| powers[2 * k + 2].frobenius_inner(dh));

    let diag: Vec<f64> = (0..order).map(|k| gram[(k, k)]).collect();
    let floor = dh_norm * dh_norm * 1e-28;
    if diag.iter().all(|&d| d <= floor) {
        return Ok(zero());
    }
    let inv_sqrt: Vec<f64> = diag
        .iter()
        .map(|&d| if d > floor { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let equilibrated = DMatrix::from_fn(order, order, |k, l| gram[(k, l)] * inv_sqrt[k] * inv_sqrt[l]);
    let eig = SymmetricEigen::new(equilibrated);
    let largest = eig.eigenvalues.max();
    let mut scaled_alphas = DVector::zeros(order);
    let mut rank = 0;
    for (i, &value) in eig.eigenvalues.iter().enumerate() {
        if value > GRAM_CUTOFF * largest {
            rank += 1;
            let v = eig.eigenvectors.column(i);
            let projection: f64 = (0..order).map(|k| v[k] * rhs[k] * inv_sqrt[k]).sum();
            scaled_alphas -= v * (projection / value);
        }
    }
    for k in 0..order {
        scaled_alphas[k] *= inv_sqrt[k];
    }

    // α_k = α'_k / scale^{2k};  α_k L^{2k−1} = (α'_k / scale) L_s^{2k−1}
    let mut generator = dh.zeros_like();
    let mut residual = dh.clone();
    let mut alphas = Vec::with_capacity(order);
    for k in 0..order {
        let a = scaled_alphas[k];
        generator.add_scaled(a / scale, &powers[2 * k + 1]);
        residual.add_scaled(a, &powers[2 * k + 2]);
        alphas.push(a / scale.powi(2 * (k as i32 + 1)));
    }
    Ok(GaugeExpansion {
        alphas,
        generator,
        residual,
        degenerate: false,
        rank,
    })
}

/// `G = ∂H + i[A, H]` for `A = iR`, i.e. `∂H + [H, R]`.
pub fn gauge_residual<O: OperatorAlgebra>(h: &O, dh: &O, generator: &O) -> O {
    let mut g = dh.clone();
    g.add_scaled(1.0, &h.commutator(generator));
    g
}

/// Smallest level spacing accepted by the spectral oracle.
pub const SPECTRAL_SPACING_THRESHOLD: f64 = 1e-10;

/// Exact gauge potential, returned as the real generator `R` of `A = iR`.
///
/// In the eigenbasis of `H`, `A_mn = i⟨m|∂H|n⟩/(E_n − E_m)` for `m ≠ n` and
/// `A_mm = 0`. Requires every level spacing to exceed
/// [`SPECTRAL_SPACING_THRESHOLD`].
pub fn exact_gauge_potential(h: &DMatrix<f64>, dh: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (energies, vectors) = eig_symmetric(h);
    let spacing = energies
        .as_slice()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if spacing < SPECTRAL_SPACING_THRESHOLD {
        return Err(Error::DegenerateSpectrum {
            spacing,
            threshold: SPECTRAL_SPACING_THRESHOLD,
        });
    }
    let dh_eigen = vectors.transpose() * dh * &vectors;
    let n = energies.len();
    let r = DMatrix::from_fn(n, n, |m, k| {
        if m == k {
            0.0
        } else {
            dh_eigen[(m, k)] / (energies[k] - energies[m])
        }
    });
    Ok(&vectors * r * vectors.transpose())
}

/// Gauge potential restricted to the couplings of the instantaneous ground
/// state, as a real generator `R`.
///
/// `A₀ = i Σ_{n≠0} (|n⟩⟨n|∂H|0⟩⟨0| / (E₀ − E_n) − h.c.)` satisfies
/// `A₀|0⟩ = i|∂0⟩`, so it transports the ground state exactly while only
/// requiring the ground level to be isolated.
pub fn ground_state_gauge_potential(h: &DMatrix<f64>, dh: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (energies, vectors) = eig_symmetric(h);
    if energies.len() < 2 {
        return Ok(DMatrix::zeros(h.nrows(), h.ncols()));
    }
    let spacing = energies[1] - energies[0];
    if spacing < SPECTRAL_SPACING_THRESHOLD {
        return Err(Error::DegenerateSpectrum {
            spacing,
            threshold: SPECTRAL_SPACING_THRESHOLD,
        });
    }
    let ground = vectors.column(0).into_owned();
    let coupling = vectors.transpose() * (dh * &ground);
    let mut w = DVector::zeros(h.nrows());
    for n in 1..energies.len() {
        w += vectors.column(n) * (coupling[n] / (energies[0] - energies[n]));
    }
    Ok(&w * ground.transpose() - &ground * w.transpose())
}

/// Counterdiabatic generator `R_θ / τ` of `cd_term = v̇·A = (i/τ) R_θ` at θ.
///
/// `R_θ` is the variational generator built from `H(θ)` and `dH/dθ`; the
/// factor `1/τ` converts the θ-derivative into a time derivative.
pub fn cd_term(model: &AnnealModel, theta: f64, order: usize, tau: f64) -> Result<BandOperator> {
    if order == 0 {
        return Ok(BandOperator::zeros(model.sector()));
    }
    let (h, dh) = model.hamiltonian_and_derivative(theta);
    let expansion = variational_coefficients(&h, &dh, order)?;
    Ok(expansion.generator.scaled(1.0 / tau))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Frobenius,
    Trace,
}

/// Norms of the counterdiabatic term at one normalized time, in units of `E₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormTracePoint {
    pub theta: f64,
    pub frob_norm: f64,
    /// Sum of singular values; `None` when only the Frobenius norm was requested.
    pub trace_norm: Option<f64>,
}

/// Sum of singular values of a dense real matrix.
pub fn trace_norm(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    m.clone().singular_values().sum()
}

fn norm_point(model: &AnnealModel, theta: f64, order: usize, tau: f64, with_trace: bool) -> Result<NormTracePoint> {
    let cd = cd_term(model, theta, order, tau)?;
    Ok(NormTracePoint {
        theta,
        frob_norm: cd.frobenius_norm(),
        trace_norm: with_trace.then(|| trace_norm(&cd.to_dense())),
    })
}

/// Frobenius and (optionally) trace norms of `v̇·A` on a θ grid.
pub fn norm_trace(
    model: &AnnealModel,
    order: usize,
    tau: f64,
    grid: &[f64],
    with_trace: bool,
) -> Result<Vec<NormTracePoint>> {
    use rayon::prelude::*;
    grid.par_iter()
        .map(|&theta| norm_point(model, theta, order, tau, with_trace))
        .collect()
}

/// Uniform grid of `points` values on `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

/// Composite Simpson rule on a uniform grid with an odd number of points.
pub fn simpson(values: &[f64], step: f64) -> f64 {
    assert!(
        values.len() >= 3 && values.len() % 2 == 1,
        "Simpson needs an odd number of points"
    );
    let n = values.len() - 1;
    let inner: f64 = values[1..n]
        .iter()
        .enumerate()
        .map(|(i, v)| if i % 2 == 0 { 4.0 * v } else { 2.0 * v })
        .sum();
    (values[0] + values[n] + inner) * step / 3.0
}

/// Default number of θ points for cost integrals.
pub const COST_POINTS: usize = 201;

/// Energetic cost `(1/τ)∫₀^τ ‖v̇·A‖ dt = ∫₀¹ ‖A_θ/τ‖ dθ`, by Simpson's rule on
/// `points` (odd, at least 201) uniform θ values.
pub fn cd_cost(model: &AnnealModel, order: usize, tau: f64, kind: NormKind, points: usize) -> Result<f64> {
    if order == 0 {
        return Ok(0.0);
    }
    if points < COST_POINTS || points.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "cost quadrature needs an odd number of points >= {COST_POINTS}, got {points}"
        )));
    }
    let grid = uniform_grid(points);
    let trace = norm_trace(model, order, tau, &grid, kind == NormKind::Trace)?;
    let values: Vec<f64> = trace
        .iter()
        .map(|p| match kind {
            NormKind::Frobenius => p.frob_norm,
            NormKind::Trace => p.trace_norm.unwrap_or(0.0),
        })
        .collect();
    Ok(simpson(&values, 1.0 / (points - 1) as f64))
}

/// Both costs from one pass over the grid.
pub fn cd_costs(
    model: &AnnealModel,
    order: usize,
    tau: f64,
    points: usize,
    with_trace: bool,
) -> Result<(f64, Option<f64>)> {
    if order == 0 {
        return Ok((0.0, with_trace.then_some(0.0)));
    }
    let grid = uniform_grid(points);
    let trace = norm_trace(model, order, tau, &grid, with_trace)?;
    let step = 1.0 / (points - 1) as f64;
    let frob: Vec<f64> = trace.iter().map(|p| p.frob_norm).collect();
    let tr: Option<Vec<f64>> = trace.iter().map(|p| p.trace_norm).collect();
    Ok((simpson(&frob, step), tr.map(|v| simpson(&v, step))))
}
