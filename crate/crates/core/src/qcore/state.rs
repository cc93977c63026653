use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{eigh, CMatrix};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-10;

/// Anything that is backed by a square complex matrix.
pub trait AsMatrix {
    fn matrix(&self) -> &CMatrix;
}

impl AsMatrix for CMatrix {
    fn matrix(&self) -> &CMatrix {
        self
    }
}

/// Observable: a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMatrix);

impl HermitianOperator {
    pub fn new(m: CMatrix) -> Result<Self> {
        let deviation = m.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { what: "observable", deviation });
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    pub fn pauli_x() -> Self {
        Self(CMatrix::from_fn(2, |i, j| if i != j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }))
    }

    pub fn pauli_y() -> Self {
        Self(CMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => Complex64::new(0.0, -1.0),
            (1, 0) => Complex64::new(0.0, 1.0),
            _ => Complex64::new(0.0, 0.0),
        }))
    }

    pub fn pauli_z() -> Self {
        Self(CMatrix::diagonal(&[1.0, -1.0]))
    }

    /// `Σ a_k O_k` for real coefficients.
    pub fn linear_combination(terms: &[(f64, &HermitianOperator)]) -> Result<Self> {
        let dim = terms.first().map_or(0, |(_, o)| o.dim());
        let mut m = CMatrix::zeros(dim);
        for (a, o) in terms {
            m.check_dim(o.dim())?;
            m = &m + &o.0.scale(Complex64::new(*a, 0.0));
        }
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }
}

impl AsMatrix for HermitianOperator {
    fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps amplitudes that are already normalized to within `1e-12`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !(norm_sqr > 0.0) || !norm_sqr.is_finite() {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let s = 1.0 / norm_sqr.sqrt();
        for a in amplitudes.iter_mut() {
            *a *= s;
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = alloc::vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        let w = Complex64::from_polar(1.0, phase);
        Self { amplitudes: self.amplitudes.iter().map(|a| a * w).collect() }
    }

    pub fn projector(&self) -> CMatrix {
        CMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    /// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of a qubit state.
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::RequiresQubit { dim: self.dim() });
        }
        let (a, b) = (self.amplitudes[0], self.amplitudes[1]);
        let cross = a.conj() * b;
        Ok([2.0 * cross.re, 2.0 * cross.im, a.norm_sqr() - b.norm_sqr()])
    }
}

/// Unit-trace positive semidefinite Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let deviation = m.hermitian_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { what: "density matrix", deviation });
        }
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidDensity { reason: "trace differs from one", value: tr });
        }
        let (vals, _) = eigh(&m);
        if let Some(&min) = vals.first() {
            if min < PSD_TOL {
                return Err(Error::InvalidDensity { reason: "negative eigenvalue", value: min });
            }
        }
        Ok(Self(m))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self(psi.projector())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)))
    }

    /// `(1 - weight)·self + weight·other`, validated.
    pub fn mix(&self, weight: f64, other: &DensityMatrix) -> Result<Self> {
        self.0.check_dim(other.dim())?;
        let a = self.0.scale(Complex64::new(1.0 - weight, 0.0));
        let b = other.0.scale(Complex64::new(weight, 0.0));
        Self::new(&a + &b)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn overlap(&self, psi: &PureState) -> f64 {
        self.0.sandwich(psi.amplitudes(), psi.amplitudes()).re
    }

    /// Spectral decomposition: ascending eigenvalues with eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, CMatrix) {
        eigh(&self.0)
    }
}

impl AsMatrix for DensityMatrix {
    fn matrix(&self) -> &CMatrix {
        &self.0
    }
}

/// States whose expectation values can be taken.
pub trait QuantumState {
    fn dim(&self) -> usize;
    /// `⟨ψ|M|ψ⟩` or `Tr(Mρ)`.
    fn expect(&self, m: &CMatrix) -> Complex64;
}

impl QuantumState for PureState {
    fn dim(&self) -> usize {
        self.amplitudes.len()
    }
    fn expect(&self, m: &CMatrix) -> Complex64 {
        m.sandwich(&self.amplitudes, &self.amplitudes)
    }
}

impl QuantumState for DensityMatrix {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn expect(&self, m: &CMatrix) -> Complex64 {
        (m * &self.0).trace()
    }
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`, with angles folded onto θ ∈ [0, π], φ ∈ [0, 2π).
pub fn bloch_to_state(theta: f64, phi: f64) -> PureState {
    let (theta, phi) = canonical_angles(theta, phi);
    let (s, c) = (theta / 2.0).sin_cos();
    PureState { amplitudes: alloc::vec![Complex64::new(c, 0.0), Complex64::from_polar(s, phi)] }
}

pub(crate) fn canonical_angles(theta: f64, phi: f64) -> (f64, f64) {
    let mut theta = wrap_angle(theta);
    let mut phi = phi;
    if theta > PI {
        theta = 2.0 * PI - theta;
        phi += PI;
    }
    (theta, wrap_angle(phi))
}

fn wrap_angle(x: f64) -> f64 {
    let r = x % (2.0 * PI);
    if r < 0.0 {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Haar-random pure state from a seeded generator.
pub fn haar_random_state(dim: usize, seed: u64) -> Result<PureState> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    haar_random_state_with(dim, &mut rng)
}

/// Haar-random pure state drawn from `rng` (normalized complex Gaussian vector).
pub fn haar_random_state_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::Domain { what: "Haar sampling needs dimension >= 2", value: dim as f64 });
    }
    let amps = (0..dim)
        .map(|_| Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)))
        .collect();
    PureState::normalized(amps)
}
