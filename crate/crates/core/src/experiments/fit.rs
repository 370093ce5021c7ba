//! Least-squares scaling fits in log space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fidelities below this value are excluded from exponent fits.
pub const FIT_FLOOR: f64 = 1e-25;

/// Fewest points a fit accepts.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// γ in `P ∼ 2^{−γN}` or α in `C ∼ N^α`.
    pub exponent: f64,
    /// Intercept of the fitted line in the fit's log space.
    pub intercept: f64,
    /// Root-mean-square residual in the fit's log space.
    pub residual_rms: f64,
    /// Smallest and largest N used.
    pub n_range: (f64, f64),
    pub points_used: usize,
    /// N values dropped because the fidelity was below [`FIT_FLOOR`] or
    /// not finite.
    pub excluded: Vec<f64>,
}

/// Unweighted least-squares line `y = a + b·x`; returns `(b, a, rms)`.
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

fn distinct(xs: &[f64]) -> usize {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// γ from the slope of `log₂ P_GS` against N; `γ = −slope`.
///
/// Points with `P_GS < 1e-25` are excluded and listed in the result.
pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<FitResult> {
    let (kept, dropped): (Vec<_>, Vec<_>) = points.iter().partition(|(_, p)| p.is_finite() && *p >= FIT_FLOOR);
    let xs: Vec<f64> = kept.iter().map(|(n, _)| *n).collect();
    if distinct(&xs) < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_FIT_POINTS,
            got: distinct(&xs),
        });
    }
    let ys: Vec<f64> = kept.iter().map(|(_, p)| p.log2()).collect();
    let (slope, intercept, rms) = line_fit(&xs, &ys);
    Ok(FitResult {
        exponent: -slope,
        intercept,
        residual_rms: rms,
        n_range: range(&xs),
        points_used: xs.len(),
        excluded: dropped.iter().map(|(n, _)| *n).collect(),
    })
}

/// α from the slope of `ln C` against `ln N`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    let (kept, dropped): (Vec<_>, Vec<_>) = points.iter().partition(|(n, c)| c.is_finite() && *c > 0.0 && *n > 0.0);
    let xs: Vec<f64> = kept.iter().map(|(n, _)| n.ln()).collect();
    if distinct(&xs) < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_FIT_POINTS,
            got: distinct(&xs),
        });
    }
    let ys: Vec<f64> = kept.iter().map(|(_, c)| c.ln()).collect();
    let (slope, intercept, rms) = line_fit(&xs, &ys);
    let ns: Vec<f64> = kept.iter().map(|(n, _)| *n).collect();
    Ok(FitResult {
        exponent: slope,
        intercept,
        residual_rms: rms,
        n_range: range(&ns),
        points_used: ns.len(),
        excluded: dropped.iter().map(|(n, _)| *n).collect(),
    })
}

fn range(xs: &[f64]) -> (f64, f64) {
    (
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}
