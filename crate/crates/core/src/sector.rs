//! Collective-spin sector of the reverse-annealing problem.
//!
//! The bias Hamiltonian splits the spins into an up-biased set of `N↑` spins
//! and a down-biased set of `N↓` spins. The total spin of each set is
//! conserved, so the dynamics never leave the product of the two
//! maximal-spin ladders `j↑ = N↑/2` and `j↓ = N↓/2`, a space of dimension
//! `(N↑ + 1)(N↓ + 1)`.
//!
//! Basis ordering: each ladder is listed with `m` descending (`k = j − m`
//! runs from `0` to `2j`), and the flattened index is `k↑·(N↓ + 1) + k↓`,
//! so the up ladder is the outer index.
//!
//! Energies are in units of `E₀`. Every builder here returns a dense
//! real-symmetric [`OperatorMatrix`]; the propagation code works with the
//! sparse [`BandOperator`](crate::operator::BandOperator) equivalents.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense real matrix in the sector basis.
pub type OperatorMatrix = DMatrix<f64>;

/// Complex amplitudes in the sector basis.
pub type StateVector = DVector<Complex64>;

/// Tolerance used when checking that `c·N` is integral.
const FRACTION_TOLERANCE: f64 = 1e-9;

/// The reduced Hilbert space of `N` spins split into an up-biased and a
/// down-biased set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinSector {
    up: usize,
    down: usize,
}

impl SpinSector {
    /// Sector for `spins` spins of which a fraction `fraction` start up.
    ///
    /// Rejects grid points where `fraction·spins` is not an integer instead
    /// of rounding them.
    pub fn new(spins: usize, fraction: f64) -> Result<Self> {
        if spins < 2 {
            return Err(Error::InvalidParameter(format!(
                "a sector needs at least two spins, got {spins}"
            )));
        }
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "fraction c must lie in (0, 1], got {fraction}"
            )));
        }
        let up = up_count(spins, fraction)?;
        Ok(Self { up, down: spins - up })
    }

    /// Sector with explicit set sizes.
    pub fn from_counts(up: usize, down: usize) -> Result<Self> {
        if up + down == 0 {
            return Err(Error::InvalidParameter("empty sector".into()));
        }
        Ok(Self { up, down })
    }

    /// The single maximal-spin ladder `j = N/2` used by forward annealing.
    ///
    /// This is the sector with every spin in the up-biased set.
    pub fn ladder(spins: usize) -> Result<Self> {
        if spins == 0 {
            return Err(Error::InvalidParameter("a ladder needs at least one spin".into()));
        }
        Ok(Self { up: spins, down: 0 })
    }

    pub fn spins(&self) -> usize {
        self.up + self.down
    }

    /// Number of up-biased spins `N↑`.
    pub fn up(&self) -> usize {
        self.up
    }

    /// Number of down-biased spins `N↓`.
    pub fn down(&self) -> usize {
        self.down
    }

    /// Fraction `c = N↑ / N`.
    pub fn fraction(&self) -> f64 {
        self.up as f64 / self.spins() as f64
    }

    /// Hilbert-space dimension `(N↑ + 1)(N↓ + 1)`.
    pub fn dim(&self) -> usize {
        (self.up + 1) * (self.down + 1)
    }

    /// Ladder lengths `(N↑ + 1, N↓ + 1)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.up + 1, self.down + 1)
    }

    pub fn j_up(&self) -> f64 {
        self.up as f64 / 2.0
    }

    pub fn j_down(&self) -> f64 {
        self.down as f64 / 2.0
    }

    /// Hamming distance between the biased initial state and the all-up target.
    pub fn hamming_distance(&self) -> usize {
        self.down
    }

    /// Flattened index of ladder positions `(k↑, k↓)` where `k = j − m`.
    pub fn index(&self, k_up: usize, k_down: usize) -> usize {
        k_up * (self.down + 1) + k_down
    }

    /// Magnetic quantum numbers `(m↑, m↓)` of a flattened index.
    pub fn m_values(&self, index: usize) -> (f64, f64) {
        let (k_up, k_down) = (index / (self.down + 1), index % (self.down + 1));
        (self.j_up() - k_up as f64, self.j_down() - k_down as f64)
    }
}

fn up_count(spins: usize, fraction: f64) -> Result<usize> {
    let exact = fraction * spins as f64;
    let rounded = exact.round();
    if (exact - rounded).abs() > FRACTION_TOLERANCE {
        return Err(Error::NonIntegerFraction { spins, fraction });
    }
    Ok(rounded as usize)
}

/// `S_z` on a ladder of `n` spins, `m` descending.
pub fn ladder_sz(n: usize) -> DMatrix<f64> {
    let j = n as f64 / 2.0;
    DMatrix::from_diagonal(&DVector::from_fn(n + 1, |k, _| j - k as f64))
}

/// `S_x` on a ladder of `n` spins, `m` descending.
pub fn ladder_sx(n: usize) -> DMatrix<f64> {
    let mut sx = DMatrix::zeros(n + 1, n + 1);
    for k in 0..n {
        let element = ladder_sx_element(n, k);
        sx[(k, k + 1)] = element;
        sx[(k + 1, k)] = element;
    }
    sx
}

/// `⟨m|S_x|m − 1⟩` between positions `k` and `k + 1` of an `n`-spin ladder.
pub(crate) fn ladder_sx_element(n: usize, k: usize) -> f64 {
    let j = n as f64 / 2.0;
    let m = j - k as f64;
    0.5 * (j * (j + 1.0) - m * (m - 1.0)).sqrt()
}

/// Collective spin operators of the two sets, each acting as the identity
/// on the other factor.
#[derive(Clone, Debug)]
pub struct CollectiveOps {
    pub sz_up: OperatorMatrix,
    pub sz_down: OperatorMatrix,
    pub sx_up: OperatorMatrix,
    pub sx_down: OperatorMatrix,
}

pub fn collective_ops(sector: &SpinSector) -> CollectiveOps {
    let id_up = DMatrix::identity(sector.up + 1, sector.up + 1);
    let id_down = DMatrix::identity(sector.down + 1, sector.down + 1);
    CollectiveOps {
        sz_up: ladder_sz(sector.up).kronecker(&id_down),
        sz_down: id_up.kronecker(&ladder_sz(sector.down)),
        sx_up: ladder_sx(sector.up).kronecker(&id_down),
        sx_down: id_up.kronecker(&ladder_sx(sector.down)),
    }
}

pub(crate) fn check_exponent(p: u32) -> Result<()> {
    if p < 3 || p.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "p must be an odd integer >= 3, got {p}"
        )));
    }
    Ok(())
}

/// Diagonal of the p-spin Hamiltonian `−N E₀ (2(m↑ + m↓)/N)^p`.
pub(crate) fn hp_diagonal(sector: &SpinSector, p: u32, e0: f64) -> Vec<f64> {
    let n = sector.spins() as f64;
    let (_, down) = sector.shape();
    (0..sector.dim())
        .map(|i| {
            let flipped = (i / down + i % down) as f64;
            -n * e0 * (1.0 - 2.0 * flipped / n).powi(p as i32)
        })
        .collect()
}

/// Diagonal of the bias Hamiltonian `E₀(−2 S_z↑ + 2 S_z↓)`.
pub(crate) fn h0_diagonal(sector: &SpinSector, e0: f64) -> Vec<f64> {
    (0..sector.dim())
        .map(|i| {
            let (m_up, m_down) = sector.m_values(i);
            e0 * (-2.0 * m_up + 2.0 * m_down)
        })
        .collect()
}

/// Problem Hamiltonian `H_P = −N E₀ m^p`, diagonal in the sector basis.
pub fn build_hp(sector: &SpinSector, p: u32, e0: f64) -> Result<OperatorMatrix> {
    check_exponent(p)?;
    Ok(DMatrix::from_diagonal(&DVector::from_vec(hp_diagonal(sector, p, e0))))
}

/// Bias Hamiltonian `H₀` whose ground state is the classical initial state.
pub fn build_h0(sector: &SpinSector, e0: f64) -> OperatorMatrix {
    DMatrix::from_diagonal(&DVector::from_vec(h0_diagonal(sector, e0)))
}

/// Transverse-field driver `V_TF = −Γ Σ σˣ = −2Γ (S_x↑ + S_x↓)`.
pub fn build_vtf(sector: &SpinSector, gamma: f64) -> Result<OperatorMatrix> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "transverse field must be positive, got {gamma}"
        )));
    }
    let ops = collective_ops(sector);
    Ok((ops.sx_up + ops.sx_down) * (-2.0 * gamma))
}

fn check_unit(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter(format!(
            "{name} must lie in [0, 1], got {value}"
        )));
    }
    Ok(())
}

/// Reverse-annealing Hamiltonian
/// `(1 − s)λ V_TF + (1 − s)(1 − λ) H₀ + s H_P`.
pub fn ara_hamiltonian(
    sector: &SpinSector,
    lambda: f64,
    s: f64,
    p: u32,
    gamma: f64,
    e0: f64,
) -> Result<OperatorMatrix> {
    check_unit("lambda", lambda)?;
    check_unit("s", s)?;
    let vtf = build_vtf(sector, gamma)?;
    let h0 = build_h0(sector, e0);
    let hp = build_hp(sector, p, e0)?;
    Ok(vtf * ((1.0 - s) * lambda) + h0 * ((1.0 - s) * (1.0 - lambda)) + hp * s)
}

/// Forward-annealing Hamiltonian `(1 − s) V_TF + s H_P` on the `j = N/2` ladder.
pub fn qa_hamiltonian(spins: usize, s: f64, p: u32, gamma: f64, e0: f64) -> Result<OperatorMatrix> {
    check_unit("s", s)?;
    let ladder = SpinSector::ladder(spins)?;
    Ok(build_vtf(&ladder, gamma)? * (1.0 - s) + build_hp(&ladder, p, e0)? * s)
}

fn basis_state(dim: usize, index: usize) -> StateVector {
    let mut psi = StateVector::zeros(dim);
    psi[index] = Complex64::new(1.0, 0.0);
    psi
}

/// Classical initial state `m↑ = j↑, m↓ = −j↓`, the ground state of `H₀`.
pub fn initial_state(sector: &SpinSector) -> StateVector {
    basis_state(sector.dim(), sector.index(0, sector.down))
}

/// Ferromagnetic target `m↑ = j↑, m↓ = j↓`. On a ladder this is `m = N/2`.
pub fn target_state(sector: &SpinSector) -> StateVector {
    basis_state(sector.dim(), sector.index(0, 0))
}

/// Ground state of the transverse field on the `j = N/2` ladder: the
/// uniform superposition of all `2^N` configurations written in the Dicke
/// basis, with amplitude `√C(N, k) / 2^{N/2}` at `m = j − k`.
pub fn qa_initial_state(spins: usize) -> Result<StateVector> {
    if spins == 0 {
        return Err(Error::InvalidParameter("a ladder needs at least one spin".into()));
    }
    let log_norm = spins as f64 * std::f64::consts::LN_2 / 2.0;
    Ok(StateVector::from_fn(spins + 1, |k, _| {
        Complex64::new((0.5 * ln_binomial(spins, k) - log_norm).exp(), 0.0)
    }))
}

pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a * b - b * a
    }

    #[test]
    fn sector_dimensions() {
        let s = SpinSector::new(10, 0.7).unwrap();
        assert_eq!((s.up(), s.down(), s.dim()), (7, 3, 32));
        let s = SpinSector::new(10, 1.0).unwrap();
        assert_eq!((s.up(), s.down(), s.dim()), (10, 0, 11));
        let s = SpinSector::new(50, 0.9).unwrap();
        assert_eq!((s.up(), s.down(), s.dim()), (45, 5, 276));
    }

    #[test]
    fn non_integer_fraction_is_rejected() {
        assert!(matches!(
            SpinSector::new(15, 0.7),
            Err(Error::NonIntegerFraction { .. })
        ));
        assert!(SpinSector::new(1, 1.0).is_err());
        assert!(SpinSector::new(10, 0.0).is_err());
        assert!(SpinSector::new(10, 1.2).is_err());
    }

    #[test]
    fn spin_half_and_spin_one_ladders() {
        let sx = ladder_sx(1);
        assert_eq!(sx, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
        let sz = ladder_sz(2);
        assert_eq!(sz, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, -1.0])));
    }

    #[test]
    fn sublattice_operators_commute() {
        let ops = collective_ops(&SpinSector::new(10, 0.7).unwrap());
        assert_eq!(commutator(&ops.sx_up, &ops.sz_down).amax(), 0.0);
        assert_eq!(commutator(&ops.sx_down, &ops.sz_up).amax(), 0.0);
        // [Sz, Sx] = i Sy is nonzero within a ladder
        assert!(commutator(&ops.sz_up, &ops.sx_up).amax() > 0.1);
    }

    #[test]
    fn spin_algebra_casimir() {
        // [S_z, S_x] = i S_y is real antisymmetric here, so S_y² = −[S_z, S_x]²
        for n in 1..6 {
            let sx = ladder_sx(n);
            let sz = ladder_sz(n);
            let isy = commutator(&sz, &sx);
            let sy2 = -(&isy * &isy);
            let casimir = &sx * &sx + sy2 + &sz * &sz;
            let j = n as f64 / 2.0;
            let expected = DMatrix::identity(n + 1, n + 1) * (j * (j + 1.0));
            assert!((casimir - expected).amax() < 1e-12);
        }
    }

    #[test]
    fn hp_entries() {
        let ladder = SpinSector::from_counts(2, 0).unwrap();
        let hp = build_hp(&ladder, 3, 1.0).unwrap();
        assert_eq!(hp.diagonal().as_slice(), &[-2.0, 0.0, 2.0]);

        let s = SpinSector::new(10, 0.7).unwrap();
        let hp = build_hp(&s, 3, 1.0).unwrap();
        // m↑ = 3.5 (k↑ = 0), m↓ = −1.5 (k↓ = 3)
        assert_close(hp[(s.index(0, 3), s.index(0, 3))], -0.64, 1e-12);
        let min = hp.diagonal().min();
        assert_eq!(min, -10.0);
        let argmins: Vec<_> = (0..s.dim()).filter(|&i| hp[(i, i)] == min).collect();
        assert_eq!(argmins, vec![s.index(0, 0)]);
        assert!(build_hp(&s, 4, 1.0).is_err());
        assert!(build_hp(&s, 1, 1.0).is_err());
    }

    #[test]
    fn h0_extremes() {
        let s = SpinSector::new(10, 0.7).unwrap();
        let h0 = build_h0(&s, 1.0);
        let init = s.index(0, s.down());
        assert_eq!(h0[(init, init)], -10.0);
        assert_eq!(h0.diagonal().min(), -10.0);
        assert_eq!(h0.diagonal().max(), 10.0);

        let c1 = SpinSector::new(6, 1.0).unwrap();
        let ops = collective_ops(&c1);
        assert_eq!(build_h0(&c1, 1.0), ops.sz_up * -2.0);
        assert_eq!(initial_state(&c1), target_state(&c1));
    }

    #[test]
    fn vtf_structure() {
        let single = SpinSector::ladder(1).unwrap();
        let v = build_vtf(&single, 1.0).unwrap();
        assert_eq!(v, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]));
        let s = SpinSector::new(10, 0.7).unwrap();
        let v = build_vtf(&s, 1.5).unwrap();
        assert!(v.diagonal().iter().all(|&x| x == 0.0));
        assert_eq!(v, v.transpose());
        let eig = v.symmetric_eigenvalues();
        assert_close(eig.min(), -15.0, 1e-10);
        assert_close(eig.max(), 15.0, 1e-10);
        assert!(build_vtf(&s, 0.0).is_err());
    }

    #[test]
    fn ara_corners() {
        let s = SpinSector::new(10, 0.8).unwrap();
        let (p, g, e0) = (3, 1.3, 1.0);
        assert_eq!(ara_hamiltonian(&s, 0.0, 0.0, p, g, e0).unwrap(), build_h0(&s, e0));
        assert_eq!(
            ara_hamiltonian(&s, 1.0, 1.0, p, g, e0).unwrap(),
            build_hp(&s, p, e0).unwrap()
        );
        assert_eq!(
            ara_hamiltonian(&s, 1.0, 0.0, p, g, e0).unwrap(),
            build_vtf(&s, g).unwrap()
        );
        assert!(ara_hamiltonian(&s, 1.1, 0.0, p, g, e0).is_err());
    }

    #[test]
    fn ara_is_affine_in_each_parameter() {
        let s = SpinSector::new(8, 0.75).unwrap();
        let h = |l: f64, t: f64| ara_hamiltonian(&s, l, t, 3, 1.0, 1.0).unwrap();
        let (c00, c01, c10, c11) = (h(0.0, 0.0), h(0.0, 1.0), h(1.0, 0.0), h(1.0, 1.0));
        for &(l, t) in &[(0.3, 0.6), (0.9, 0.1), (0.5, 0.5)] {
            let bilinear =
                &c00 * ((1.0 - l) * (1.0 - t)) + &c01 * ((1.0 - l) * t) + &c10 * (l * (1.0 - t)) + &c11 * (l * t);
            assert!((bilinear - h(l, t)).amax() < 1e-12);
        }
    }

    #[test]
    fn qa_boundaries_and_midpoint() {
        let hp = qa_hamiltonian(6, 1.0, 3, 1.0, 1.0).unwrap();
        assert_close(hp.symmetric_eigenvalues().min(), -6.0, 1e-12);
        let v = qa_hamiltonian(6, 0.0, 3, 1.0, 1.0).unwrap();
        assert_close(v.symmetric_eigenvalues().min(), -6.0, 1e-10);
        // N=2, s=1/2: ½[[-2, -√2, 0], [-√2, 0, -√2], [0, -√2, 2]] has the
        // characteristic polynomial −x³ + 2x, so eigenvalues are 0, ±√2
        let h = qa_hamiltonian(2, 0.5, 3, 1.0, 1.0).unwrap();
        let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        let r2 = 2f64.sqrt();
        for (a, b) in e.iter().zip([-r2, 0.0, r2]) {
            assert_close(*a, b, 1e-12);
        }
    }

    #[test]
    fn states() {
        let s = SpinSector::new(10, 0.7).unwrap();
        let psi0 = initial_state(&s);
        let target = target_state(&s);
        let h0 = build_h0(&s, 1.0).map(|x| Complex64::new(x, 0.0));
        let e = (psi0.adjoint() * &h0 * &psi0)[(0, 0)].re;
        assert_eq!(e, -10.0);
        assert_eq!(psi0.dotc(&target).norm(), 0.0);
        assert_eq!(s.hamming_distance(), 3);
        let i0 = psi0.iter().position(|a| a.re == 1.0).unwrap();
        let (m_up, m_down) = s.m_values(i0);
        assert_close(2.0 * (m_up + m_down) / 10.0, 0.4, 1e-15);

        let hp = build_hp(&s, 3, 1.0).unwrap().map(|x| Complex64::new(x, 0.0));
        assert_eq!((target.adjoint() * &hp * &target)[(0, 0)].re, -10.0);
    }

    #[test]
    fn qa_initial_state_amplitudes() {
        let one = qa_initial_state(1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(one[0].re, h, 1e-15);
        assert_close(one[1].re, h, 1e-15);
        let two = qa_initial_state(2).unwrap();
        for (a, b) in two.iter().zip([0.5, h, 0.5]) {
            assert_close(a.re, b, 1e-15);
        }
        for n in [3, 10, 50] {
            assert_close(qa_initial_state(n).unwrap().norm(), 1.0, 1e-12);
        }
    }

    #[test]
    fn qa_initial_state_is_vtf_ground_state() {
        for n in [1, 4, 9, 20] {
            let ladder = SpinSector::ladder(n).unwrap();
            let eig = build_vtf(&ladder, 1.0).unwrap().symmetric_eigen();
            let (imin, emin) = eig.eigenvalues.argmin();
            let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            sorted.sort_by(f64::total_cmp);
            assert!(sorted[1] - sorted[0] > 1.0, "ground state is unique");
            assert_close(emin, -(n as f64), 1e-10);
            let ground = eig.eigenvectors.column(imin);
            let psi = qa_initial_state(n).unwrap();
            let overlap: f64 = psi.iter().zip(ground.iter()).map(|(a, g)| a.re * g).sum();
            assert_close(overlap.abs(), 1.0, 1e-10);
        }
    }

    #[test]
    fn h0_and_hp_ground_states_match_the_named_states() {
        for (n, c) in [(4, 0.75), (10, 0.7), (10, 0.9), (20, 0.8)] {
            let s = SpinSector::new(n, c).unwrap();
            for (op, state) in [
                (build_h0(&s, 1.0), initial_state(&s)),
                (build_hp(&s, 3, 1.0).unwrap(), target_state(&s)),
            ] {
                let diag = op.diagonal();
                let (imin, _) = diag.argmin();
                assert_eq!(state[imin].re, 1.0);
                let unique = diag.iter().filter(|&&x| x == diag[imin]).count();
                assert_eq!(unique, 1);
            }
        }
    }
}
