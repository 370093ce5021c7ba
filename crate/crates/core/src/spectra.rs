//! Spectra of sector Hamiltonians: gaps along annealing paths and
//! inverse-gap maps over the `(λ, s)` control plane.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AnnealModel;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// as columns.
pub fn eig_symmetric(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Ascending eigenvalues only.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `E₁ − E₀` of a symmetric matrix; zero in one dimension.
pub fn spectral_gap(m: &DMatrix<f64>) -> f64 {
    let values = eigenvalues(m);
    if values.len() < 2 {
        return 0.0;
    }
    (values[1] - values[0]).max(0.0)
}

/// Gap of the model Hamiltonian at an arbitrary point `(λ, s)`.
pub fn gap(model: &AnnealModel, lambda: f64, s: f64) -> f64 {
    spectral_gap(&model.hamiltonian_at(lambda, s))
}

/// Gap of `H(θ)` along the model's path.
pub fn path_gap(model: &AnnealModel, theta: f64) -> f64 {
    spectral_gap(&model.hamiltonian(theta).to_dense())
}

/// Location and size of the smallest gap along a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathMinimum {
    pub theta: f64,
    pub s: f64,
    pub lambda: f64,
    pub gap: f64,
}

/// Smallest grid resolution accepted by [`min_gap_along_path`].
pub const MIN_PATH_POINTS: usize = 400;

/// Minimum of the path gap: a scan over `points` uniform θ values followed
/// by golden-section refinement between the neighbours of the best node.
pub fn min_gap_along_path(model: &AnnealModel, points: usize) -> Result<PathMinimum> {
    use rayon::prelude::*;
    if points < MIN_PATH_POINTS {
        return Err(Error::InvalidParameter(format!(
            "path scan needs at least {MIN_PATH_POINTS} points, got {points}"
        )));
    }
    let step = 1.0 / (points - 1) as f64;
    let gaps: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|i| path_gap(model, i as f64 * step))
        .collect();
    let best = (0..points).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap_or(0);
    let (mut a, mut b) = (
        best.saturating_sub(1) as f64 * step,
        (best + 1).min(points - 1) as f64 * step,
    );
    let (mut theta, mut value) = (best as f64 * step, gaps[best]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (path_gap(model, x1), path_gap(model, x2));
    while b - a > 1e-10 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = path_gap(model, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = path_gap(model, x2);
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f < value {
            theta = x;
            value = f;
        }
    }
    let sample = model.sample(theta);
    Ok(PathMinimum {
        theta,
        s: sample.s,
        lambda: sample.lambda,
        gap: value,
    })
}

/// Rescaled inverse gap over the `(λ, s)` plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapMap {
    pub lambda_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    /// `1/Δ` divided by its largest value, indexed `[λ][s]`.
    pub values: Vec<Vec<f64>>,
    /// Unscaled `1/Δ`, indexed like `values`.
    pub inverse_gaps: Vec<Vec<f64>>,
    /// Smallest gap on the grid, in units of `E₀`.
    pub raw_min_gap: f64,
    /// `(λ*, s*)` of the smallest gap.
    pub argmin: (f64, f64),
}

/// Summary written next to the CSV export of a [`GapMap`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapMapSidecar {
    pub raw_min_gap: f64,
    pub argmin: ArgMin,
    pub n_lambda: usize,
    pub n_s: usize,
    /// Paths `Λ(s) = s^q` drawn over the map, as `(s, λ)` pairs.
    pub paths: Vec<PathCurve>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ArgMin {
    pub lambda: f64,
    pub s: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathCurve {
    pub q: f64,
    pub points: Vec<(f64, f64)>,
}

/// Smallest grid accepted by [`gap_map`] along either axis.
pub const MIN_MAP_POINTS: usize = 64;

/// Gaps at or below this value are treated as level crossings.
pub const CROSSING_GAP: f64 = 1e-12;

fn uniform(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Inverse gap on an `n_lambda × n_s` uniform grid of `[0, 1]²`, rescaled so
/// that its maximum is exactly one. Cells whose gap is at most
/// [`CROSSING_GAP`] are set to one.
pub fn gap_map(model: &AnnealModel, n_lambda: usize, n_s: usize) -> Result<GapMap> {
    use rayon::prelude::*;
    if n_lambda < MIN_MAP_POINTS || n_s < MIN_MAP_POINTS {
        return Err(Error::InvalidParameter(format!(
            "gap maps need at least {MIN_MAP_POINTS} points per axis, got {n_lambda}×{n_s}"
        )));
    }
    let lambda_grid = uniform(n_lambda);
    let s_grid = uniform(n_s);
    let gaps: Vec<Vec<f64>> = lambda_grid
        .par_iter()
        .map(|&l| s_grid.iter().map(|&s| gap(model, l, s)).collect())
        .collect();
    let mut raw_min_gap = f64::INFINITY;
    let mut argmin = (0.0, 0.0);
    for (i, row) in gaps.iter().enumerate() {
        for (j, &g) in row.iter().enumerate() {
            if g < raw_min_gap {
                raw_min_gap = g;
                argmin = (lambda_grid[i], s_grid[j]);
            }
        }
    }
    let inverse_gaps: Vec<Vec<f64>> = gaps
        .iter()
        .map(|row| {
            row.iter()
                .map(|&g| if g > CROSSING_GAP { 1.0 / g } else { f64::INFINITY })
                .collect()
        })
        .collect();
    // exact crossings (the classical λ = 0 edge has them) saturate at 1 and
    // the rest of the map is scaled by the largest finite value
    let max = inverse_gaps
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    let values = inverse_gaps
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| if v.is_infinite() || max == 0.0 { 1.0 } else { v / max })
                .collect()
        })
        .collect();
    Ok(GapMap {
        lambda_grid,
        s_grid,
        values,
        inverse_gaps,
        raw_min_gap,
        argmin,
    })
}

impl GapMap {
    pub fn sidecar(&self, path_exponents: &[f64]) -> GapMapSidecar {
        GapMapSidecar {
            raw_min_gap: self.raw_min_gap,
            argmin: ArgMin {
                lambda: self.argmin.0,
                s: self.argmin.1,
            },
            n_lambda: self.lambda_grid.len(),
            n_s: self.s_grid.len(),
            paths: path_exponents
                .iter()
                .map(|&q| PathCurve {
                    q,
                    points: self.s_grid.iter().map(|&s| (s, s.powf(q))).collect(),
                })
                .collect(),
        }
    }

    /// Writes `lambda,s,rescaled_inv_gap` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["lambda", "s", "rescaled_inv_gap"])?;
        for (i, &l) in self.lambda_grid.iter().enumerate() {
            for (j, &s) in self.s_grid.iter().enumerate() {
                csv.write_record([l.to_string(), s.to_string(), self.values[i][j].to_string()])?;
            }
        }
        csv.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn export(&self, dir: &Path, stem: &str, path_exponents: &[f64]) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        let json = serde_json::to_string_pretty(&self.sidecar(path_exponents))?;
        std::fs::write(dir.join(format!("{stem}.json")), json + "\n")?;
        Ok(())
    }
}
