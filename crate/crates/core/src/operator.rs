//! Sparse operators on the two-ladder sector.
//!
//! Every operator the propagation touches is built from collective spin
//! operators, so it only connects basis states whose ladder positions differ
//! by a bounded offset `(a, b)`. A [`BandOperator`] stores one vector per
//! offset: entry `r` of band `(a, b)` is the matrix element between
//! `r = (k↑, k↓)` and `(k↑ + a, k↓ + b)`. Entries whose column falls outside
//! the sector are kept at zero.
//!
//! Nested commutators of the Hamiltonian grow the set of offsets by one
//! Manhattan step per commutator, so even the highest-order gauge term used
//! here stays far sparser than the dense `d × d` matrix.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::sector::{h0_diagonal, hp_diagonal, ladder_sx_element, SpinSector};

/// Operations the variational gauge solver needs from an operator type.
///
/// Implemented for the sparse [`BandOperator`] used during propagation and
/// for dense `DMatrix<f64>` used by the oracles.
pub trait OperatorAlgebra: Clone {
    /// `[self, other] = self·other − other·self`.
    fn commutator(&self, other: &Self) -> Self;
    /// `Tr(selfᵀ other)`.
    fn frobenius_inner(&self, other: &Self) -> f64;
    /// `self ← self + factor·other`.
    fn add_scaled(&mut self, factor: f64, other: &Self);
    fn scaled(&self, factor: f64) -> Self;
    fn zeros_like(&self) -> Self;
    /// Maximum absolute row sum, an upper bound on the spectral norm.
    fn max_row_sum(&self) -> f64;

    fn frobenius_norm(&self) -> f64 {
        self.frobenius_inner(self).sqrt()
    }
}

impl OperatorAlgebra for DMatrix<f64> {
    fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    fn frobenius_inner(&self, other: &Self) -> f64 {
        self.dot(other)
    }

    fn add_scaled(&mut self, factor: f64, other: &Self) {
        *self += other * factor;
    }

    fn scaled(&self, factor: f64) -> Self {
        self * factor
    }

    fn zeros_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }

    fn max_row_sum(&self) -> f64 {
        self.row_iter()
            .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Operator on a two-ladder sector stored by ladder offsets.
#[derive(Clone, Debug, PartialEq)]
pub struct BandOperator {
    up_len: usize,
    down_len: usize,
    bands: BTreeMap<(i32, i32), Vec<f64>>,
}

impl BandOperator {
    pub fn zeros(sector: &SpinSector) -> Self {
        let (up_len, down_len) = sector.shape();
        Self {
            up_len,
            down_len,
            bands: BTreeMap::new(),
        }
    }

    pub fn diagonal(sector: &SpinSector, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), sector.dim());
        let mut op = Self::zeros(sector);
        op.bands.insert((0, 0), values);
        op
    }

    /// `S_x↑ + S_x↓`.
    pub fn sx_total(sector: &SpinSector) -> Self {
        let mut op = Self::zeros(sector);
        let (nu, nd) = (op.up_len, op.down_len);
        let dim = nu * nd;
        if nu > 1 {
            let mut plus = vec![0.0; dim];
            let mut minus = vec![0.0; dim];
            for ku in 0..nu - 1 {
                let element = ladder_sx_element(nu - 1, ku);
                for kd in 0..nd {
                    plus[ku * nd + kd] = element;
                    minus[(ku + 1) * nd + kd] = element;
                }
            }
            op.bands.insert((1, 0), plus);
            op.bands.insert((-1, 0), minus);
        }
        if nd > 1 {
            let mut plus = vec![0.0; dim];
            let mut minus = vec![0.0; dim];
            for kd in 0..nd - 1 {
                let element = ladder_sx_element(nd - 1, kd);
                for ku in 0..nu {
                    plus[ku * nd + kd] = element;
                    minus[ku * nd + kd + 1] = element;
                }
            }
            op.bands.insert((0, 1), plus);
            op.bands.insert((0, -1), minus);
        }
        op
    }

    pub fn dim(&self) -> usize {
        self.up_len * self.down_len
    }

    /// Number of stored offsets.
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn offsets(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        self.bands.keys().copied()
    }

    fn flat(&self, k_up: usize, k_down: usize) -> usize {
        k_up * self.down_len + k_down
    }

    /// Rows `k` for which `k + offset` stays inside a ladder of length `len`.
    fn valid_rows(len: usize, offset: i32) -> std::ops::Range<usize> {
        let start = (-offset).max(0) as usize;
        let end = (len as i32 - offset.max(0)).max(0) as usize;
        start..end.max(start)
    }

    fn same_shape(&self, other: &Self) {
        assert_eq!(
            (self.up_len, self.down_len),
            (other.up_len, other.down_len),
            "operators live on different sectors"
        );
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        let mut dense = DMatrix::zeros(dim, dim);
        for (&(a, b), values) in &self.bands {
            for ku in Self::valid_rows(self.up_len, a) {
                for kd in Self::valid_rows(self.down_len, b) {
                    let row = self.flat(ku, kd);
                    let col = self.flat((ku as i32 + a) as usize, (kd as i32 + b) as usize);
                    dense[(row, col)] = values[row];
                }
            }
        }
        dense
    }

    /// Reads the nonzero structure of a dense sector operator.
    ///
    /// Panics if the matrix couples states that no ladder offset can reach,
    /// which cannot happen for a square matrix of the sector dimension.
    pub fn from_dense(sector: &SpinSector, dense: &DMatrix<f64>) -> Self {
        let mut op = Self::zeros(sector);
        assert_eq!(dense.nrows(), op.dim());
        let nd = op.down_len;
        for row in 0..dense.nrows() {
            for col in 0..dense.ncols() {
                let value = dense[(row, col)];
                if value != 0.0 {
                    let a = (col / nd) as i32 - (row / nd) as i32;
                    let b = (col % nd) as i32 - (row % nd) as i32;
                    let dim = op.dim();
                    op.bands.entry((a, b)).or_insert_with(|| vec![0.0; dim])[row] = value;
                }
            }
        }
        op
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        self.same_shape(other);
        let (nu, nd) = (self.up_len, self.down_len);
        let dim = self.dim();
        let mut out: BTreeMap<(i32, i32), Vec<f64>> = BTreeMap::new();
        for (&(a1, b1), x) in &self.bands {
            for (&(a2, b2), y) in &other.bands {
                let (a, b) = (a1 + a2, b1 + b2);
                if a.unsigned_abs() as usize >= nu || b.unsigned_abs() as usize >= nd {
                    continue;
                }
                let acc = out.entry((a, b)).or_insert_with(|| vec![0.0; dim]);
                let rows_d = Self::valid_rows(nd, b1);
                for ku in Self::valid_rows(nu, a1) {
                    let base = ku * nd;
                    let col = ((ku as i32 + a1) as usize * nd) as i64 + b1 as i64;
                    let col = (col + rows_d.start as i64) as usize;
                    let len = rows_d.len();
                    let acc = &mut acc[base + rows_d.start..base + rows_d.end];
                    let xs = &x[base + rows_d.start..base + rows_d.end];
                    let ys = &y[col..col + len];
                    for ((o, &xv), &yv) in acc.iter_mut().zip(xs).zip(ys) {
                        *o += xv * yv;
                    }
                }
            }
        }
        out.retain(|_, v| v.iter().any(|&x| x != 0.0));
        Self {
            up_len: nu,
            down_len: nd,
            bands: out,
        }
    }

    pub fn transpose(&self) -> Self {
        let dim = self.dim();
        let mut bands = BTreeMap::new();
        for (&(a, b), values) in &self.bands {
            let mut t = vec![0.0; dim];
            for ku in Self::valid_rows(self.up_len, a) {
                for kd in Self::valid_rows(self.down_len, b) {
                    let row = self.flat(ku, kd);
                    let col = self.flat((ku as i32 + a) as usize, (kd as i32 + b) as usize);
                    t[col] = values[row];
                }
            }
            bands.insert((-a, -b), t);
        }
        Self {
            up_len: self.up_len,
            down_len: self.down_len,
            bands,
        }
    }

    /// `out ← out + factor · self · psi`.
    pub fn apply_add(&self, factor: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
        let nd = self.down_len;
        for (&(a, b), values) in &self.bands {
            let rows_d = Self::valid_rows(nd, b);
            for ku in Self::valid_rows(self.up_len, a) {
                let base = ku * nd;
                let col = ((ku as i32 + a) as usize * nd) as i64 + b as i64;
                let col = (col + rows_d.start as i64) as usize;
                let vs = &values[base + rows_d.start..base + rows_d.end];
                let ps = &psi[col..col + rows_d.len()];
                let os = &mut out[base + rows_d.start..base + rows_d.end];
                for ((o, &v), &p) in os.iter_mut().zip(vs).zip(ps) {
                    *o += factor * (p * v);
                }
            }
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.bands
            .values()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl OperatorAlgebra for BandOperator {
    fn commutator(&self, other: &Self) -> Self {
        let mut out = self.mul(other);
        out.add_scaled(-1.0, &other.mul(self));
        out.bands.retain(|_, v| v.iter().any(|&x| x != 0.0));
        out
    }

    fn frobenius_inner(&self, other: &Self) -> f64 {
        self.same_shape(other);
        self.bands
            .iter()
            .filter_map(|(key, x)| other.bands.get(key).map(|y| (x, y)))
            .map(|(x, y)| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    fn add_scaled(&mut self, factor: f64, other: &Self) {
        self.same_shape(other);
        let dim = self.dim();
        for (&key, y) in &other.bands {
            let x = self.bands.entry(key).or_insert_with(|| vec![0.0; dim]);
            for (a, b) in x.iter_mut().zip(y) {
                *a += factor * b;
            }
        }
    }

    fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in out.bands.values_mut() {
            v.iter_mut().for_each(|x| *x *= factor);
        }
        out
    }

    fn zeros_like(&self) -> Self {
        Self {
            up_len: self.up_len,
            down_len: self.down_len,
            bands: BTreeMap::new(),
        }
    }

    fn max_row_sum(&self) -> f64 {
        let mut sums = vec![0.0; self.dim()];
        for values in self.bands.values() {
            for (s, v) in sums.iter_mut().zip(values) {
                *s += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }
}

/// The three fixed operators from which every annealing Hamiltonian on a
/// sector is assembled.
#[derive(Clone, Debug)]
pub struct SectorOperators {
    pub sector: SpinSector,
    /// `V_TF` at the given field strength.
    pub driver: BandOperator,
    /// Bias `H₀`.
    pub bias: BandOperator,
    /// p-spin problem `H_P`.
    pub problem: BandOperator,
}

impl SectorOperators {
    pub fn new(sector: &SpinSector, p: u32, gamma: f64, e0: f64) -> crate::Result<Self> {
        crate::sector::check_exponent(p)?;
        if gamma.is_nan() || gamma <= 0.0 {
            return Err(crate::Error::InvalidParameter(format!(
                "transverse field must be positive, got {gamma}"
            )));
        }
        Ok(Self {
            sector: *sector,
            driver: BandOperator::sx_total(sector).scaled(-2.0 * gamma),
            bias: BandOperator::diagonal(sector, h0_diagonal(sector, e0)),
            problem: BandOperator::diagonal(sector, hp_diagonal(sector, p, e0)),
        })
    }

    /// `a·V_TF + b·H₀ + c·H_P`.
    pub fn combine(&self, driver: f64, bias: f64, problem: f64) -> BandOperator {
        let mut out = self.driver.zeros_like();
        for (coef, op) in [(driver, &self.driver), (bias, &self.bias), (problem, &self.problem)] {
            if coef != 0.0 {
                out.add_scaled(coef, op);
            }
        }
        out
    }
}
