//! Weak values of an observable on a thermal probe and their inversion to temperature.
//!
//! A probe with Hamiltonian `H` is thermalized at inverse temperature `β`,
//! weakly coupled to a pointer through `A` and post-selected on `|ψ_f⟩`. The
//! pointer shift encodes `A_w = ⟨ψ_f|Aρ_T|ψ_f⟩ / ⟨ψ_f|ρ_T|ψ_f⟩`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::complex_arctanh;
use crate::qcore::{
    bloch_to_state, covariance, gibbs_state, haar_random_state_with, vaidman_decompose, AsMatrix, CMatrix,
    DensityMatrix, EnergySpectrum, HermitianOperator, PureState,
};

const DENOMINATOR_FLOOR: f64 = 1e-12;
const COMMUTATOR_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakValueMethod {
    Exact,
    HighTemperature,
    ReadoutEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    pub value: Complex64,
    pub method: WeakValueMethod,
}

impl WeakValue {
    pub fn new(value: Complex64, method: WeakValueMethod) -> Result<Self> {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::NonFinite { x: if value.re.is_finite() { value.im } else { value.re } });
        }
        Ok(Self { value, method })
    }

    /// `|Re(A_w) - ⟨A⟩|`.
    pub fn anomalous_part(&self, mean: f64) -> f64 {
        (self.value.re - mean).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetupWarning {
    /// `[A, H]` vanishes; `A_w` is then a real classical conditional mean.
    CommutingObservable { commutator_norm: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermometrySetup {
    spectrum: EnergySpectrum,
    observable: HermitianOperator,
    post_selection: PureState,
    commutator_norm: f64,
}

impl ThermometrySetup {
    pub fn new(spectrum: EnergySpectrum, observable: HermitianOperator, post_selection: PureState) -> Result<Self> {
        let d = spectrum.dim();
        observable.matrix().check_dim(d)?;
        if post_selection.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: post_selection.dim() });
        }
        let commutator_norm = observable.matrix().commutator(spectrum.hamiltonian().matrix()).max_abs();
        Ok(Self { spectrum, observable, post_selection, commutator_norm })
    }

    /// Qubit with levels `E_1`, `E_2` on `|0⟩`, `|1⟩`, observable
    /// `-i|ψ_1⟩⟨ψ_2| + i|ψ_2⟩⟨ψ_1|` and post-selection `(|ψ_1⟩ + |ψ_2⟩)/√2`.
    pub fn qubit_sigma_y(e1: f64, e2: f64) -> Result<Self> {
        Self::qubit(e1, e2, HermitianOperator::pauli_y(), core::f64::consts::FRAC_PI_2, 0.0)
    }

    /// Qubit with post-selection `cos(ξ/2)|ψ_1⟩ + e^{iν} sin(ξ/2)|ψ_2⟩`.
    pub fn qubit(e1: f64, e2: f64, observable: HermitianOperator, xi: f64, nu: f64) -> Result<Self> {
        let spectrum = labelled_qubit(e1, e2)?;
        Self::new(spectrum, observable, bloch_to_state(xi, nu))
    }

    pub fn spectrum(&self) -> &EnergySpectrum {
        &self.spectrum
    }

    pub fn observable(&self) -> &HermitianOperator {
        &self.observable
    }

    pub fn post_selection(&self) -> &PureState {
        &self.post_selection
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    /// Max-entry norm of `[A, H]`.
    pub fn commutator_norm(&self) -> f64 {
        self.commutator_norm
    }

    pub fn warnings(&self) -> Vec<SetupWarning> {
        let mut out = Vec::new();
        if self.commutator_norm <= COMMUTATOR_FLOOR {
            out.push(SetupWarning::CommutingObservable { commutator_norm: self.commutator_norm });
        }
        out
    }

    /// Complex `⟨ψ_f|M|ψ_f⟩`.
    pub(crate) fn expect_f(&self, m: &CMatrix) -> Complex64 {
        let f = self.post_selection.amplitudes();
        m.sandwich(f, f)
    }

    /// `⟨ψ_f|A|ψ_f⟩`.
    pub fn mean_observable(&self) -> f64 {
        self.expect_f(self.observable.matrix()).re
    }
}

/// Diagonal qubit Hamiltonian that keeps `|0⟩ ↔ E_1` even when `E_1 > E_2`.
fn labelled_qubit(e1: f64, e2: f64) -> Result<EnergySpectrum> {
    if !e1.is_finite() || !e2.is_finite() {
        return Err(Error::NonFinite { x: if e1.is_finite() { e2 } else { e1 } });
    }
    EnergySpectrum::diagonal(&[e1, e2])
}

/// Exact weak value on the Gibbs state at `β`.
pub fn weak_value(setup: &ThermometrySetup, beta: f64) -> Result<WeakValue> {
    let rho = gibbs_state(setup.spectrum(), beta)?;
    weak_value_on_state(setup, &rho)
}

/// Exact weak value with an arbitrary probe state in place of `ρ_T`.
pub fn weak_value_on_state(setup: &ThermometrySetup, rho: &DensityMatrix) -> Result<WeakValue> {
    rho.matrix().check_dim(setup.dim())?;
    let denominator = setup.expect_f(rho.matrix()).re;
    if !(denominator > DENOMINATOR_FLOOR) {
        return Err(Error::DegeneratePostSelection { probability: denominator });
    }
    let numerator = setup.expect_f(&(setup.observable().matrix() * rho.matrix()));
    WeakValue::new(numerator / denominator, WeakValueMethod::Exact)
}

/// `i tanh(β(E_2 - E_1)/2)` for the σ_y / `|+⟩` qubit.
pub fn weak_value_qubit_closed_form(beta: f64, e1: f64, e2: f64) -> WeakValue {
    WeakValue { value: Complex64::new(0.0, (0.5 * beta * (e2 - e1)).tanh()), method: WeakValueMethod::Exact }
}

/// First order in `β`: `⟨A⟩ + β(⟨A⟩⟨H⟩ - ⟨AH⟩)`, all in `ψ_f`.
pub fn weak_value_high_temperature(setup: &ThermometrySetup, beta: f64) -> WeakValue {
    let (mean_a, slope) = high_temperature_terms(setup);
    WeakValue { value: mean_a + slope * beta, method: WeakValueMethod::HighTemperature }
}

fn high_temperature_terms(setup: &ThermometrySetup) -> (Complex64, Complex64) {
    let a = setup.observable().matrix();
    let h = setup.spectrum().hamiltonian();
    let mean_a = setup.expect_f(a);
    let mean_h = setup.expect_f(h.matrix());
    let mean_ah = setup.expect_f(&(a * h.matrix()));
    (mean_a, mean_a * mean_h - mean_ah)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighTemperatureInversion {
    pub beta: f64,
    /// `|Im|` of the quotient, dropped when taking `β` real.
    pub imag_residual: f64,
}

/// `β ≈ (A_w - ⟨A⟩)/(⟨A⟩⟨H⟩ - ⟨AH⟩)`.
pub fn invert_beta_high_temperature(aw: &WeakValue, setup: &ThermometrySetup) -> Result<HighTemperatureInversion> {
    let (mean_a, slope) = high_temperature_terms(setup);
    if slope.norm() <= DENOMINATOR_FLOOR {
        return Err(Error::Uninformative { what: "high-temperature slope", value: slope.norm() });
    }
    let q = (aw.value - mean_a) / slope;
    Ok(HighTemperatureInversion { beta: q.re, imag_residual: q.im.abs() })
}

/// Qubit form `β ≈ -2iA_w/(E_2 - E_1)` (real part).
pub fn invert_beta_high_temperature_qubit(aw: &WeakValue, gap: f64) -> Result<f64> {
    if gap == 0.0 || !gap.is_finite() {
        return Err(Error::Domain { what: "energy gap", value: gap });
    }
    Ok((Complex64::new(0.0, -2.0) * aw.value / gap).re)
}

/// `β̃ = (2/Δ) artanh(-iA_w)`; real whenever `A_w` is purely imaginary.
pub fn invert_beta_exact_qubit(aw: &WeakValue, gap: f64) -> Result<Complex64> {
    if gap == 0.0 || !gap.is_finite() {
        return Err(Error::Domain { what: "energy gap", value: gap });
    }
    let z = Complex64::new(0.0, -1.0) * aw.value;
    if (z - 1.0).norm() <= DENOMINATOR_FLOOR || (z + 1.0).norm() <= DENOMINATOR_FLOOR {
        return Err(Error::InfiniteTemperatureLimit { re: aw.value.re, im: aw.value.im });
    }
    Ok(complex_arctanh(z)? * (2.0 / gap))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureBound {
    /// `⟨H⟩ / (1 - |Cov(A,ρ_T)|/(Z δA))`.
    pub bound: f64,
    /// `1/β_true ≥ bound - 1e-9`.
    pub satisfied: bool,
    /// False when `β⟨H⟩ ≥ 1` or the denominator is not positive.
    pub applicable: bool,
    pub anomalous: f64,
}

/// Temperature lower bound from the anomalous part of the weak value.
pub fn temperature_lower_bound(setup: &ThermometrySetup, beta_true: f64) -> Result<TemperatureBound> {
    let aw = weak_value(setup, beta_true)?;
    let anomalous = aw.anomalous_part(setup.mean_observable());
    if !(anomalous > DENOMINATOR_FLOOR) {
        return Err(Error::BoundUndefined { anomalous });
    }
    let rho = gibbs_state(setup.spectrum(), beta_true)?;
    let cov = covariance(setup.observable(), &rho, setup.post_selection())?;
    let mean_h = setup.expect_f(setup.spectrum().hamiltonian().matrix()).re;
    let z = setup.spectrum().partition_function(beta_true);
    let denominator = 1.0 - cov.norm() / (z * anomalous);
    let bound = mean_h / denominator;
    let applicable = denominator > 0.0 && beta_true * mean_h < 1.0;
    let temperature = 1.0 / beta_true;
    Ok(TemperatureBound { bound, satisfied: temperature >= bound - 1e-9, applicable, anomalous })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundAuditRow {
    pub beta: f64,
    pub samples: usize,
    pub undefined: usize,
    pub applicable: usize,
    pub satisfied: usize,
}

impl BoundAuditRow {
    /// Share of applicable cases where the bound holds.
    pub fn satisfaction_rate(&self) -> f64 {
        if self.applicable == 0 {
            f64::NAN
        } else {
            self.satisfied as f64 / self.applicable as f64
        }
    }
}

/// Random qubit with levels (0, 1), a unit Bloch-direction observable and a
/// Haar post-selection.
pub fn random_qubit_setup<R: Rng + ?Sized>(rng: &mut R) -> Result<ThermometrySetup> {
    let n = haar_random_state_with(2, rng)?.bloch_vector()?;
    let observable = HermitianOperator::linear_combination(&[
        (n[0], &HermitianOperator::pauli_x()),
        (n[1], &HermitianOperator::pauli_y()),
        (n[2], &HermitianOperator::pauli_z()),
    ])?;
    let post = haar_random_state_with(2, rng)?;
    ThermometrySetup::new(EnergySpectrum::diagonal(&[0.0, 1.0])?, observable, post)
}

/// Monte-Carlo audit of the lower bound over random qubit setups.
pub fn audit_temperature_bound(betas: &[f64], samples: usize, seed: u64) -> Result<Vec<BoundAuditRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas {
        let mut row = BoundAuditRow { beta, samples, undefined: 0, applicable: 0, satisfied: 0 };
        for _ in 0..samples {
            let setup = random_qubit_setup(&mut rng)?;
            match temperature_lower_bound(&setup, beta) {
                Ok(b) if b.applicable => {
                    row.applicable += 1;
                    row.satisfied += b.satisfied as usize;
                }
                Ok(_) => {}
                Err(Error::BoundUndefined { .. }) | Err(Error::DegeneratePostSelection { .. }) => row.undefined += 1,
                Err(e) => return Err(e),
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `|RHS - β|` for `β = -ΔA Δρ_T / (Cov(A,H) ⟨ψ_f|ρ_T|ψ_f⟩)` on a qubit.
pub fn qubit_beta_identity_residual(setup: &ThermometrySetup, beta: f64) -> Result<f64> {
    if setup.dim() != 2 {
        return Err(Error::RequiresQubit { dim: setup.dim() });
    }
    let h = setup.spectrum().hamiltonian();
    let cov_ah = covariance(setup.observable(), &h, setup.post_selection())?;
    if cov_ah.norm() <= DENOMINATOR_FLOOR {
        return Err(Error::IdentityInapplicable { magnitude: cov_ah.norm() });
    }
    let rho = gibbs_state(setup.spectrum(), beta)?;
    let spread_a = vaidman_decompose(setup.observable(), setup.post_selection())?.deviation;
    let spread_rho = vaidman_decompose(&rho, setup.post_selection())?.deviation;
    let overlap = setup.expect_f(rho.matrix()).re;
    let rhs = -(spread_a * spread_rho) / (cov_ah * overlap);
    Ok((rhs - beta).norm())
}
