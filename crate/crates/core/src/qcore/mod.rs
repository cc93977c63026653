//! Dense linear algebra for small quantum systems.
//!
//! Operators, states and thermal (Gibbs) states of a `d`-level probe, plus the
//! expectation, covariance and parallel/orthogonal split used by the weak-value
//! identities. Dimensions are unrestricted here; qubit-only closed forms live
//! in the modules that need them.

mod matrix;
mod state;

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub use matrix::{eigh, CMatrix};
pub use state::{
    bloch_to_state, haar_random_state, haar_random_state_with, AsMatrix, DensityMatrix, HermitianOperator,
    PureState, QuantumState,
};

const UNITARY_TOL: f64 = 1e-12;

/// Probe Hamiltonian in its eigenbasis (`k_B = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    levels: Vec<f64>,
    eigenbasis: CMatrix,
}

impl EnergySpectrum {
    /// Levels must be non-decreasing and the basis (columns = eigenstates) unitary.
    pub fn new(levels: Vec<f64>, eigenbasis: CMatrix) -> Result<Self> {
        eigenbasis.check_dim(levels.len())?;
        if levels.windows(2).any(|w| !(w[0] <= w[1])) || levels.iter().any(|e| !e.is_finite()) {
            return Err(Error::Domain { what: "energy levels must be finite and sorted", value: f64::NAN });
        }
        let deviation = (&(&eigenbasis.adjoint() * &eigenbasis) - &CMatrix::identity(levels.len())).max_abs();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { levels, eigenbasis })
    }

    /// Hamiltonian diagonal in the computational basis. Levels are sorted and
    /// the basis permuted to match, so `|ψ_1⟩` is always the ground state.
    pub fn diagonal(levels: &[f64]) -> Result<Self> {
        let mut order: Vec<usize> = (0..levels.len()).collect();
        order.sort_by(|&a, &b| levels[a].partial_cmp(&levels[b]).unwrap_or(core::cmp::Ordering::Equal));
        let sorted = order.iter().map(|&i| levels[i]).collect();
        let basis = CMatrix::from_fn(levels.len(), |i, j| {
            if i == order[j] {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(sorted, basis)
    }

    pub fn from_hamiltonian(h: &HermitianOperator) -> Result<Self> {
        let (levels, basis) = eigh(h.matrix());
        Self::new(levels, basis)
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn eigenbasis(&self) -> &CMatrix {
        &self.eigenbasis
    }

    pub fn eigenstate(&self, n: usize) -> PureState {
        PureState::new(self.eigenbasis.column(n)).expect("columns of a unitary are normalized")
    }

    /// `E_2 - E_1` of a qubit.
    pub fn gap(&self) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::RequiresQubit { dim: self.dim() });
        }
        Ok(self.levels[1] - self.levels[0])
    }

    /// `Z = Σ e^{-βE_n}` with the raw (unshifted) energies.
    pub fn partition_function(&self, beta: f64) -> f64 {
        self.levels.iter().map(|e| (-beta * e).exp()).sum()
    }

    /// Boltzmann populations, computed after shifting by the ground energy.
    pub fn populations(&self, beta: f64) -> Result<Vec<f64>> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Domain { what: "inverse temperature must be finite and non-negative", value: beta });
        }
        let e0 = self.levels[0];
        let w: Vec<f64> = self.levels.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = w.iter().sum();
        Ok(w.into_iter().map(|x| x / z).collect())
    }

    pub fn hamiltonian(&self) -> HermitianOperator {
        self.spectral_sum(&self.levels)
    }

    /// `cos(θ/2)|ψ_1⟩ + e^{iφ} sin(θ/2)|ψ_2⟩` in this qubit's energy basis.
    pub fn bloch_state(&self, theta: f64, phi: f64) -> Result<PureState> {
        if self.dim() != 2 {
            return Err(Error::RequiresQubit { dim: self.dim() });
        }
        let local = bloch_to_state(theta, phi);
        PureState::normalized(self.eigenbasis.apply(local.amplitudes()))
    }

    /// `-i|ψ_1⟩⟨ψ_2| + i|ψ_2⟩⟨ψ_1|`, the σ_y of the energy basis.
    pub fn sigma_y(&self) -> Result<HermitianOperator> {
        if self.dim() != 2 {
            return Err(Error::RequiresQubit { dim: self.dim() });
        }
        let (p1, p2) = (self.eigenbasis.column(0), self.eigenbasis.column(1));
        let a = CMatrix::outer(&p1, &p2).scale(Complex64::new(0.0, -1.0));
        let b = CMatrix::outer(&p2, &p1).scale(Complex64::new(0.0, 1.0));
        HermitianOperator::new(&a + &b)
    }

    fn spectral_sum(&self, diag: &[f64]) -> HermitianOperator {
        let v = &self.eigenbasis;
        let m = &(v * &CMatrix::diagonal(diag)) * &v.adjoint();
        // exact Hermitian symmetrization of rounding noise
        let sym = CMatrix::from_fn(m.dim(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        HermitianOperator::new(sym).expect("spectral sum of real weights is Hermitian")
    }
}

/// Thermal state `Σ_n e^{-βE_n}|ψ_n⟩⟨ψ_n| / Z`.
pub fn gibbs_state(spec: &EnergySpectrum, beta: f64) -> Result<DensityMatrix> {
    let pops = spec.populations(beta)?;
    DensityMatrix::new(spec.spectral_sum(&pops).into_matrix())
}

/// `⟨ψ|A|ψ⟩` or `Tr(Aρ)`; the imaginary rounding residue is dropped.
pub fn expectation<S: QuantumState + ?Sized>(a: &HermitianOperator, state: &S) -> Result<f64> {
    a.matrix().check_dim(state.dim())?;
    Ok(state.expect(a.matrix()).re)
}

/// `⟨ψ|AB|ψ⟩ - ⟨ψ|A|ψ⟩⟨ψ|B|ψ⟩`, complex in general.
pub fn covariance<A: AsMatrix + ?Sized, B: AsMatrix + ?Sized>(a: &A, b: &B, psi: &PureState) -> Result<Complex64> {
    let (a, b) = (a.matrix(), b.matrix());
    a.check_dim(psi.dim())?;
    b.check_dim(psi.dim())?;
    let amps = psi.amplitudes();
    let ab = (a * b).sandwich(amps, amps);
    Ok(ab - a.sandwich(amps, amps) * b.sandwich(amps, amps))
}

/// `A|ψ⟩ = ⟨A⟩|ψ⟩ + ΔA|ψ̄⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct VaidmanDecomposition {
    pub mean: f64,
    pub deviation: f64,
    /// Unit vector orthogonal to `ψ`; absent when `ψ` is an eigenvector.
    pub orthogonal: Option<PureState>,
}

pub fn vaidman_decompose<A: AsMatrix + ?Sized>(a: &A, psi: &PureState) -> Result<VaidmanDecomposition> {
    let a = a.matrix();
    a.check_dim(psi.dim())?;
    let amps = psi.amplitudes();
    let a_psi = a.apply(amps);
    let mean: f64 = amps.iter().zip(&a_psi).map(|(p, q)| p.conj() * q).sum::<Complex64>().re;
    let residual: Vec<Complex64> = a_psi.iter().zip(amps).map(|(q, p)| q - p * mean).collect();
    let deviation = residual.iter().map(|r| r.norm_sqr()).sum::<f64>().sqrt();
    let orthogonal = if deviation > 1e-10 {
        Some(PureState::normalized(residual)?)
    } else {
        None
    };
    Ok(VaidmanDecomposition { mean, deviation, orthogonal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn plus() -> PureState {
        bloch_to_state(FRAC_PI_2, 0.0)
    }

    fn qubit01() -> EnergySpectrum {
        EnergySpectrum::diagonal(&[0.0, 1.0]).unwrap()
    }

    #[test]
    fn gibbs_infinite_temperature() {
        let rho = gibbs_state(&qubit01(), 0.0).unwrap();
        assert!((rho.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((rho.matrix()[(1, 1)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gibbs_unit_beta() {
        let rho = gibbs_state(&qubit01(), 1.0).unwrap();
        let p0 = 1.0 / (1.0 + (-1.0_f64).exp());
        assert!((rho.matrix()[(0, 0)].re - p0).abs() < 1e-15);
        assert!((rho.matrix()[(0, 0)].re - 0.7311).abs() < 1e-4);
        assert!((rho.matrix()[(1, 1)].re - 0.2689).abs() < 1e-4);
    }

    #[test]
    fn gibbs_near_ground_state() {
        let rho = gibbs_state(&qubit01(), 50.0).unwrap();
        let excited = rho.matrix()[(1, 1)].re;
        assert!(excited > 0.0 && (excited - (-50.0_f64).exp()).abs() < 1e-30);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        // huge β with large energies stays finite thanks to the shift
        let spec = EnergySpectrum::diagonal(&[500.0, 501.0, 510.0]).unwrap();
        assert!(gibbs_state(&spec, 1000.0).is_ok());
    }

    #[test]
    fn gibbs_rejects_negative_beta() {
        assert!(matches!(gibbs_state(&qubit01(), -0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn expectations_on_plus() {
        let psi = plus();
        assert!(expectation(&HermitianOperator::pauli_y(), &psi).unwrap().abs() < 1e-15);
        let h = qubit01().hamiltonian();
        assert!((expectation(&h, &psi).unwrap() - 0.5).abs() < 1e-15);
        let rho = gibbs_state(&qubit01(), 0.7).unwrap();
        assert!((expectation(&HermitianOperator::identity(2), &rho).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            expectation(&HermitianOperator::identity(3), &psi),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn covariance_sigma_y_hamiltonian() {
        let c = covariance(&HermitianOperator::pauli_y(), &qubit01().hamiltonian(), &plus()).unwrap();
        assert!((c - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn covariance_with_gibbs_matches_direct_products() {
        let rho = gibbs_state(&qubit01(), 1.0).unwrap();
        let a = HermitianOperator::pauli_y();
        let psi = plus();
        let c = covariance(&a, &rho, &psi).unwrap();
        // direct: ⟨+|σ_y ρ|+⟩ - ⟨+|σ_y|+⟩⟨+|ρ|+⟩ with ρ = diag(p, 1-p)
        let p = 1.0 / (1.0 + (-1.0_f64).exp());
        let direct = Complex64::new(0.0, (2.0 * p - 1.0) / 2.0);
        assert!((c - direct).norm() < 1e-15);
    }

    #[test]
    fn vaidman_sigma_y_on_plus() {
        let psi = plus();
        let a = HermitianOperator::pauli_y();
        let v = vaidman_decompose(&a, &psi).unwrap();
        assert!(v.mean.abs() < 1e-15);
        assert!((v.deviation - 1.0).abs() < 1e-15);
        let orth = v.orthogonal.unwrap();
        assert!(psi.inner(&orth).norm() < 1e-10);
        let rebuilt: Vec<Complex64> = psi
            .amplitudes()
            .iter()
            .zip(orth.amplitudes())
            .map(|(p, o)| p * v.mean + o * v.deviation)
            .collect();
        let direct = a.matrix().apply(psi.amplitudes());
        for (x, y) in rebuilt.iter().zip(direct) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn vaidman_eigenstate_has_no_orthogonal_part() {
        let v = vaidman_decompose(&HermitianOperator::pauli_z(), &PureState::basis(2, 0)).unwrap();
        assert_eq!(v.mean, 1.0);
        assert_eq!(v.deviation, 0.0);
        assert!(v.orthogonal.is_none());
    }

    #[test]
    fn vaidman_hamiltonian_on_plus() {
        let v = vaidman_decompose(&qubit01().hamiltonian(), &plus()).unwrap();
        assert!((v.mean - 0.5).abs() < 1e-15);
        assert!((v.deviation - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bloch_states() {
        let s = bloch_to_state(0.0, 1.234);
        assert!((s.inner(&PureState::basis(2, 0)).norm() - 1.0).abs() < 1e-15);
        let p = bloch_to_state(FRAC_PI_2, 0.0);
        assert!((p.amplitudes()[1] - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        let q = bloch_to_state(FRAC_PI_2, FRAC_PI_2);
        assert!((q.amplitudes()[1] - Complex64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        // wrapped angles describe the same ray
        let w = bloch_to_state(2.0 * core::f64::consts::PI - 1.0, 0.3);
        let r = bloch_to_state(1.0, 0.3 + core::f64::consts::PI);
        assert!((w.inner(&r).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn haar_sampling_is_normalized_and_deterministic() {
        let a = haar_random_state(3, 42).unwrap();
        let b = haar_random_state(3, 42).unwrap();
        assert_eq!(a, b);
        let n: f64 = a.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(haar_random_state(1, 0).is_err());
    }

    #[test]
    fn haar_mean_bloch_vector_vanishes() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut acc = [0.0; 3];
        let n = 100_000;
        for _ in 0..n {
            let r = haar_random_state_with(2, &mut rng).unwrap().bloch_vector().unwrap();
            for k in 0..3 {
                acc[k] += r[k] / n as f64;
            }
        }
        let mag = (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt();
        assert!(mag <= 0.02, "{mag}");
    }

    #[test]
    fn diagonal_spectrum_sorts_levels() {
        let s = EnergySpectrum::diagonal(&[1.0, 0.0]).unwrap();
        assert_eq!(s.levels(), &[0.0, 1.0]);
        assert!((s.eigenstate(0).amplitudes()[1].re - 1.0).abs() < 1e-15);
        assert!((s.gap().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn spectrum_from_hamiltonian_round_trips() {
        let h = HermitianOperator::linear_combination(&[
            (0.3, &HermitianOperator::pauli_x()),
            (-0.8, &HermitianOperator::pauli_z()),
        ])
        .unwrap();
        let s = EnergySpectrum::from_hamiltonian(&h).unwrap();
        assert!((&s.hamiltonian().into_matrix() - h.matrix()).max_abs() < 1e-12);
        let gap = 2.0 * (0.3_f64.powi(2) + 0.8_f64.powi(2)).sqrt();
        assert!((s.gap().unwrap() - gap).abs() < 1e-12);
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::new(CMatrix::diagonal(&[0.6, 0.6])).is_err());
        assert!(DensityMatrix::new(CMatrix::diagonal(&[1.1, -0.1])).is_err());
        let mut m = CMatrix::diagonal(&[0.5, 0.5]);
        m[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian { .. })));
        assert!(PureState::new(alloc::vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]).is_err());
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn hermitian(dim: usize, entries: &[f64]) -> HermitianOperator {
        let m = CMatrix::from_fn(dim, |i, j| {
            let k = 2 * (i * dim + j);
            Complex64::new(entries[k], entries[k + 1])
        });
        let sym = CMatrix::from_fn(dim, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
        HermitianOperator::new(sym).unwrap()
    }

    prop_compose! {
        fn setup()(dim in 2usize..5)
            (dim in Just(dim),
             h in prop::collection::vec(-2.0..2.0f64, 2 * dim * dim),
             a in prop::collection::vec(-2.0..2.0f64, 2 * dim * dim),
             seed in any::<u64>())
            -> (HermitianOperator, HermitianOperator, PureState)
        {
            (hermitian(dim, &h), hermitian(dim, &a), haar_random_state(dim, seed).unwrap())
        }
    }

    proptest! {
        #[test]
        fn gibbs_commutes_with_hamiltonian((h, _, _) in setup(), beta in 0.0..20.0f64) {
            let spec = EnergySpectrum::from_hamiltonian(&h).unwrap();
            let rho = gibbs_state(&spec, beta).unwrap();
            prop_assert!(rho.matrix().commutator(h.matrix()).max_abs() <= 1e-12);
        }

        #[test]
        fn populations_non_increasing((h, _, _) in setup(), beta in 1e-3..50.0f64) {
            let spec = EnergySpectrum::from_hamiltonian(&h).unwrap();
            let p = spec.populations(beta).unwrap();
            prop_assert!(p.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn vaidman_reconstructs((_, a, psi) in setup()) {
            let v = vaidman_decompose(&a, &psi).unwrap();
            if let Some(orth) = &v.orthogonal {
                let direct = a.matrix().apply(psi.amplitudes());
                let err: f64 = direct
                    .iter()
                    .zip(psi.amplitudes())
                    .zip(orth.amplitudes())
                    .map(|((d, p), o)| (d - p * v.mean - o * v.deviation).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                prop_assert!(err <= 1e-10);
                prop_assert!(psi.inner(orth).norm() <= 1e-10);
            }
        }

        #[test]
        fn self_covariance_is_variance((_, a, psi) in setup()) {
            let c = covariance(&a, &a, &psi).unwrap();
            let v = vaidman_decompose(&a, &psi).unwrap();
            prop_assert!(c.im.abs() <= 1e-10);
            prop_assert!((c.re - v.deviation * v.deviation).abs() <= 1e-10);
        }
    }
}
