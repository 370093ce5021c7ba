//! Annealing schedule `s(θ)`, the path `λ = s^q`, and the short-time
//! fidelity estimate built on the effective tunnelling amplitude.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A schedule `s(θ)` on normalized time `θ = t/τ ∈ [0, 1]` with `s(0) = 0`
/// and `s(1) = 1`.
pub trait Schedule: Send + Sync {
    fn s(&self, theta: f64) -> f64;
    /// `ds/dθ`.
    fn s_dot(&self, theta: f64) -> f64;
}

/// Quintic ramp `6θ⁵ − 15θ⁴ + 10θ³`, whose first and second derivatives
/// vanish at both ends.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Quintic;

impl Schedule for Quintic {
    fn s(&self, theta: f64) -> f64 {
        theta * theta * theta * (10.0 + theta * (-15.0 + 6.0 * theta))
    }

    fn s_dot(&self, theta: f64) -> f64 {
        let u = theta * (1.0 - theta);
        30.0 * u * u
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "normalized time must lie in [0, 1], got {theta}"
        )));
    }
    Ok(())
}

/// Quintic `s(θ)`; rejects `θ` outside `[0, 1]`.
pub fn s_of_theta(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(Quintic.s(theta))
}

/// Quintic `ds/dθ`.
pub fn s_dot(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(Quintic.s_dot(theta))
}

/// `λ = s^q` and `dλ/dθ = q s^{q−1} ṡ`.
///
/// At `s = 0` the derivative is taken as its limit, `0`: `ṡ` vanishes like
/// `θ²` while `s^{q−1}` diverges at most like `θ^{3(q−1)}`, and for `q > 1/3`
/// the product goes to zero.
pub fn lambda_and_dot(s: f64, s_dot: f64, q: f64) -> (f64, f64) {
    if s <= 0.0 {
        return (0.0, 0.0);
    }
    let lambda = s.powf(q);
    (lambda, q * lambda / s * s_dot)
}

/// Schedule quantities at one normalized time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSample {
    pub theta: f64,
    pub s: f64,
    pub s_dot: f64,
    pub lambda: f64,
    pub lambda_dot: f64,
    pub q: f64,
}

impl ScheduleSample {
    pub fn new(schedule: &dyn Schedule, theta: f64, q: f64) -> Self {
        let s = schedule.s(theta);
        let s_dot = schedule.s_dot(theta);
        let (lambda, lambda_dot) = lambda_and_dot(s, s_dot, q);
        Self {
            theta,
            s,
            s_dot,
            lambda,
            lambda_dot,
            q,
        }
    }

    /// Sample of the quintic schedule, validating `θ` and `q`.
    pub fn quintic(theta: f64, q: f64) -> Result<Self> {
        check_theta(theta)?;
        check_q(q)?;
        Ok(Self::new(&Quintic, theta, q))
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "path exponent q must be positive, got {q}"
        )));
    }
    Ok(())
}

/// Effective tunnelling amplitude `Γ̃ = τΓ ∫₀¹ λ(θ)(1 − s(θ)) dθ`.
pub fn effective_gamma(tau: f64, gamma: f64, q: f64) -> Result<f64> {
    if !(tau > 0.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau and gamma must be positive, got tau = {tau}, gamma = {gamma}"
        )));
    }
    check_q(q)?;
    let integral = integrate(
        |theta| {
            let s = Quintic.s(theta);
            s.powf(q) * (1.0 - s)
        },
        0.0,
        1.0,
        1e-12,
    );
    Ok(tau * gamma * integral)
}

/// Short-time estimate `P_GS ≈ Γ̃^{2N(1−c)}`, one factor `Γ̃²` per spin to flip.
pub fn perturbative_pgs(spins: usize, fraction: f64, effective_gamma: f64) -> f64 {
    let flips = spins as f64 * (1.0 - fraction);
    if flips <= 0.0 {
        return 1.0;
    }
    (2.0 * flips * effective_gamma.ln()).exp()
}

/// Predicted exponent γ of `P_GS ∼ 2^{−γN}`: `2(1 − c)|log₂ Γ̃|`.
pub fn predicted_exponent(fraction: f64, effective_gamma: f64) -> f64 {
    2.0 * (1.0 - fraction) * effective_gamma.log2().abs()
}

// 15-point Kronrod nodes on [0, 1] half-interval and weights, with the
// embedded 7-point Gauss weights.
const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = KRONROD_WEIGHTS[7] * fc;
    let mut gauss = GAUSS_WEIGHTS[3] * fc;
    for i in 0..7 {
        let dx = half * KRONROD_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature to an absolute tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, error) = kronrod_15(f, a, b);
        if error <= tol || depth == 0 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth - 1) + recurse(f, mid, b, 0.5 * tol, depth - 1)
    }
    recurse(&f, a, b, abs_tol, 40)
}
