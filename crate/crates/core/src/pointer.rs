//! Discretized pointer for the full weak-measurement protocol.
//!
//! The pointer lives on a periodic position grid; momentum is diagonal after
//! an FFT, so `exp(-igτ a P)` is a phase multiplication. The probe-pointer
//! evolution is exact: `A` is diagonalized and each eigenvalue translates
//! the pointer. Mixed states are kept as weighted ensembles of grid vectors
//! (rank at most the probe dimension), never as dense `N×N` matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;

use crate::error::{Error, Result};
use crate::numerics::{fft, ifft};
use crate::qcore::{eigh, gibbs_state, AsMatrix, CMatrix, DensityMatrix, PureState};
use crate::weakproto::{invert_beta_exact_qubit, ThermometrySetup, WeakValue, WeakValueMethod};

const NORM_TOL: f64 = 1e-10;
const MAX_JOINT_DIM: usize = 4096;
const WEAK_LIMIT: f64 = 0.1;
const GAUSSIAN_KURTOSIS_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerGrid {
    half_width: f64,
    n_points: usize,
}

impl PointerGrid {
    /// `x_j = -L + j·dx`, `dx = 2L/N`, `j = 0..N`.
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidGrid { reason: "half-width must be positive and finite" });
        }
        if n_points < 64 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid { reason: "point count must be a power of two, at least 64" });
        }
        Ok(Self { half_width, n_points })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_points as f64
    }

    pub fn position(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    /// Momentum of FFT bin `k` (standard ordering, Nyquist bin negative).
    pub fn momentum(&self, k: usize) -> f64 {
        let n = self.n_points;
        let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
        2.0 * PI * signed / (n as f64 * self.dx())
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.position(j)).collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.momentum(k)).collect()
    }

    /// `e^{-i s P}` on a grid vector, i.e. `φ(x) → φ(x - s)` with periodic wrap.
    fn translate_complex(&self, amplitudes: &[Complex64], s: Complex64) -> Vec<Complex64> {
        let mut buf = amplitudes.to_vec();
        fft(&mut buf);
        for (k, v) in buf.iter_mut().enumerate() {
            *v *= (Complex64::new(0.0, -1.0) * s * self.momentum(k)).exp();
        }
        ifft(&mut buf);
        buf
    }
}

impl Default for PointerGrid {
    fn default() -> Self {
        Self { half_width: 20.0, n_points: 512 }
    }
}

/// Position and momentum Born distributions plus the moments derived from them.
pub trait PointerMoments {
    fn grid(&self) -> &PointerGrid;
    /// `p_j = ⟨x_j|ρ|x_j⟩ dx`, summing to one.
    fn position_probabilities(&self) -> Vec<f64>;
    /// Probabilities of the FFT momentum bins, summing to one.
    fn momentum_probabilities(&self) -> Vec<f64>;

    fn mean_x(&self) -> f64 {
        weighted_mean(&self.position_probabilities(), &self.grid().positions())
    }

    fn var_x(&self) -> f64 {
        weighted_central(&self.position_probabilities(), &self.grid().positions(), 2)
    }

    fn mean_p(&self) -> f64 {
        weighted_mean(&self.momentum_probabilities(), &self.grid().momenta())
    }

    fn var_p(&self) -> f64 {
        weighted_central(&self.momentum_probabilities(), &self.grid().momenta(), 2)
    }

    /// `μ_4/σ^4 - 3` of the position distribution.
    fn excess_kurtosis_x(&self) -> f64 {
        let p = self.position_probabilities();
        let x = self.grid().positions();
        let v = weighted_central(&p, &x, 2);
        weighted_central(&p, &x, 4) / (v * v) - 3.0
    }

    /// Born probability of `x > 0`, the grid point at the origin counting half.
    fn positive_position_probability(&self) -> f64 {
        let g = *self.grid();
        self.position_probabilities().iter().enumerate().map(|(j, p)| p * half_line_weight(&g, j)).sum()
    }
}

fn half_line_weight(g: &PointerGrid, j: usize) -> f64 {
    let x = g.position(j);
    if x.abs() < 0.5 * g.dx() {
        0.5
    } else if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn weighted_mean(p: &[f64], v: &[f64]) -> f64 {
    p.iter().zip(v).map(|(p, v)| p * v).sum()
}

fn weighted_central(p: &[f64], v: &[f64], order: i32) -> f64 {
    let m = weighted_mean(p, v);
    p.iter().zip(v).map(|(p, v)| p * (v - m).powi(order)).sum()
}

fn norm_sqr(amplitudes: &[Complex64], dx: f64) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dx
}

fn momentum_power(amplitudes: &[Complex64]) -> Vec<f64> {
    let mut buf = amplitudes.to_vec();
    fft(&mut buf);
    buf.iter().map(|c| c.norm_sqr()).collect()
}

fn normalize_probabilities(mut p: Vec<f64>) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointerWavefunction {
    grid: PointerGrid,
    amplitudes: Vec<Complex64>,
}

impl PointerWavefunction {
    /// Requires `Σ|φ_j|² dx = 1` within 1e-10.
    pub fn new(grid: PointerGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::DimensionMismatch { expected: grid.n_points(), found: amplitudes.len() });
        }
        let n = norm_sqr(&amplitudes, grid.dx());
        if !((n - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(Self { grid, amplitudes })
    }

    fn normalized(grid: PointerGrid, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let n = norm_sqr(&amplitudes, grid.dx());
        if !(n > 1e-12) || !n.is_finite() {
            return Err(Error::UnphysicalAmplification { norm_sqr: n });
        }
        let s = 1.0 / n.sqrt();
        amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(Self { grid, amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_density(self) -> PointerDensity {
        PointerDensity { grid: self.grid, components: vec![(1.0, self.amplitudes)] }
    }
}

impl PointerMoments for PointerWavefunction {
    fn grid(&self) -> &PointerGrid {
        &self.grid
    }

    fn position_probabilities(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        normalize_probabilities(self.amplitudes.iter().map(|a| a.norm_sqr() * dx).collect())
    }

    fn momentum_probabilities(&self) -> Vec<f64> {
        normalize_probabilities(momentum_power(&self.amplitudes))
    }
}

/// `ρ = Σ_i w_i |φ_i⟩⟨φ_i|` with unit-norm `φ_i` and `Σ w_i = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointerDensity {
    grid: PointerGrid,
    components: Vec<(f64, Vec<Complex64>)>,
}

impl PointerDensity {
    pub fn components(&self) -> &[(f64, Vec<Complex64>)] {
        &self.components
    }

    pub fn trace(&self) -> f64 {
        let dx = self.grid.dx();
        self.components.iter().map(|(w, v)| w * norm_sqr(v, dx)).sum()
    }

    /// `½‖ρ - |ψ⟩⟨ψ|‖_1`, evaluated exactly on the span of all vectors involved.
    pub fn trace_distance_to_pure(&self, psi: &PointerWavefunction) -> Result<f64> {
        if psi.grid != self.grid {
            return Err(Error::DimensionMismatch { expected: self.grid.n_points(), found: psi.grid.n_points() });
        }
        let scale = self.grid.dx().sqrt();
        let to_l2 = |v: &[Complex64]| v.iter().map(|a| a * scale).collect::<Vec<_>>();
        let mut terms: Vec<(f64, Vec<Complex64>)> = vec![(-1.0, to_l2(psi.amplitudes()))];
        terms.extend(self.components.iter().map(|(w, v)| (*w, to_l2(v))));
        let basis = orthonormal_basis(terms.iter().map(|(_, v)| v.as_slice()));
        let m = basis.len();
        let mut small = CMatrix::zeros(m);
        for (w, v) in &terms {
            let coeffs: Vec<Complex64> = basis.iter().map(|b| inner(b, v)).collect();
            for i in 0..m {
                for j in 0..m {
                    small[(i, j)] += coeffs[i] * coeffs[j].conj() * *w;
                }
            }
        }
        let (eigenvalues, _) = eigh(&small);
        Ok(0.5 * eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
    }

    pub fn to_dense(&self) -> CMatrix {
        let dx = self.grid.dx();
        let n = self.grid.n_points();
        let mut out = CMatrix::zeros(n);
        for (w, v) in &self.components {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += v[i] * v[j].conj() * (*w * dx);
                }
            }
        }
        out
    }
}

impl PointerMoments for PointerDensity {
    fn grid(&self) -> &PointerGrid {
        &self.grid
    }

    fn position_probabilities(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        let mut p = vec![0.0; self.grid.n_points()];
        for (w, v) in &self.components {
            for (pj, a) in p.iter_mut().zip(v) {
                *pj += w * a.norm_sqr() * dx;
            }
        }
        normalize_probabilities(p)
    }

    fn momentum_probabilities(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.grid.n_points()];
        for (w, v) in &self.components {
            for (pk, q) in p.iter_mut().zip(momentum_power(v)) {
                *pk += w * q;
            }
        }
        normalize_probabilities(p)
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
fn orthonormal_basis<'a, I: Iterator<Item = &'a [Complex64]>>(vectors: I) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for v in vectors {
        let scale = inner(v, v).re.sqrt();
        let mut r = v.to_vec();
        for _ in 0..2 {
            for b in &basis {
                let c = inner(b, &r);
                r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let n = inner(&r, &r).re.sqrt();
        if n > 1e-10 * scale.max(1e-300) {
            r.iter_mut().for_each(|x| *x /= n);
            basis.push(r);
        }
    }
    basis
}

/// Probe ⊗ pointer state as a weighted ensemble of `d·N` vectors (probe-major blocks).
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    system_dim: usize,
    grid: PointerGrid,
    components: Vec<(f64, Vec<Complex64>)>,
}

impl JointState {
    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn trace(&self) -> f64 {
        let dx = self.grid.dx();
        self.components.iter().map(|(w, v)| w * norm_sqr(v, dx)).sum()
    }

    pub fn to_dense(&self) -> CMatrix {
        let dx = self.grid.dx();
        let n = self.system_dim * self.grid.n_points();
        let mut out = CMatrix::zeros(n);
        for (w, v) in &self.components {
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += v[i] * v[j].conj() * (*w * dx);
                }
            }
        }
        out
    }

    /// Projects the probe on `|ψ_f⟩`; returns the normalized pointer state and
    /// the success probability.
    pub fn postselect(&self, psi_f: &PureState) -> Result<(PointerDensity, f64)> {
        if psi_f.dim() != self.system_dim {
            return Err(Error::DimensionMismatch { expected: self.system_dim, found: psi_f.dim() });
        }
        let n = self.grid.n_points();
        let dx = self.grid.dx();
        let mut raw = Vec::with_capacity(self.components.len());
        let mut success = 0.0;
        for (w, v) in &self.components {
            let mut chi = vec![Complex64::new(0.0, 0.0); n];
            for (s, f) in psi_f.amplitudes().iter().enumerate() {
                let fc = f.conj();
                chi.iter_mut().zip(&v[s * n..(s + 1) * n]).for_each(|(c, x)| *c += fc * x);
            }
            let norm = norm_sqr(&chi, dx);
            success += w * norm;
            raw.push((w * norm, chi, norm));
        }
        if !(success > 1e-12) {
            return Err(Error::DegeneratePostSelection { probability: success });
        }
        let components = raw
            .into_iter()
            .filter(|(weight, _, _)| *weight > 0.0)
            .map(|(weight, mut chi, norm)| {
                let s = 1.0 / norm.sqrt();
                chi.iter_mut().for_each(|c| *c *= s);
                (weight / success, chi)
            })
            .collect();
        Ok((PointerDensity { grid: self.grid, components }, success))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    g: f64,
    tau: f64,
}

impl CouplingParams {
    /// `g, τ ≥ 0`; zero coupling is allowed and means no interaction.
    pub fn new(g: f64, tau: f64) -> Result<Self> {
        for v in [g, tau] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain { what: "coupling constant and duration must be finite and >= 0", value: v });
            }
        }
        Ok(Self { g, tau })
    }

    pub fn from_strength(g_tau: f64) -> Result<Self> {
        Self::new(g_tau, 1.0)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn strength(&self) -> f64 {
        self.g * self.tau
    }

    pub fn is_weak(&self) -> bool {
        self.strength() <= WEAK_LIMIT
    }
}

/// `φ(x) ∝ exp(-x²/4σ²)`, so `Var(X) = σ²`.
pub fn gaussian_pointer(grid: PointerGrid, sigma: f64) -> Result<PointerWavefunction> {
    let dx = grid.dx();
    if !(sigma >= 4.0 * dx && sigma <= grid.half_width() / 4.0) {
        return Err(Error::GridMismatch { sigma, dx, half_width: grid.half_width() });
    }
    let amps = grid.positions().iter().map(|x| Complex64::new((-x * x / (4.0 * sigma * sigma)).exp(), 0.0)).collect();
    PointerWavefunction::normalized(grid, amps)
}

/// Applies `exp(-igτ A⊗P)` to `ρ ⊗ |φ⟩⟨φ|`.
pub fn evolve_joint(
    rho: &DensityMatrix,
    setup: &ThermometrySetup,
    pointer: &PointerWavefunction,
    cp: CouplingParams,
) -> Result<JointState> {
    let d = setup.dim();
    rho.matrix().check_dim(d)?;
    let grid = *pointer.grid();
    let n = grid.n_points();
    if d * n > MAX_JOINT_DIM {
        return Err(Error::Domain { what: "joint dimension d*N exceeds 4096", value: (d * n) as f64 });
    }
    let (a_vals, a_vecs) = eigh(setup.observable().matrix());
    // pointer translated by gτ·a for each eigenvalue a of A
    let shifted: Vec<Vec<Complex64>> = a_vals
        .iter()
        .map(|&a| grid.translate_complex(pointer.amplitudes(), Complex64::new(cp.strength() * a, 0.0)))
        .collect();
    let (probs, states) = rho.eigen();
    let mut components = Vec::new();
    for (k, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let psi_k = states.column(k);
        let mut v = vec![Complex64::new(0.0, 0.0); d * n];
        for (m, phi_m) in shifted.iter().enumerate() {
            let a_m = a_vecs.column(m);
            let proj: Complex64 = a_m.iter().zip(&psi_k).map(|(a, s)| a.conj() * s).sum();
            for s in 0..d {
                let c = a_m[s] * proj;
                v[s * n..(s + 1) * n].iter_mut().zip(phi_m).for_each(|(x, y)| *x += c * y);
            }
        }
        components.push((p, v));
    }
    Ok(JointState { system_dim: d, grid, components })
}

/// Exact evolution followed by post-selection on the setup's `|ψ_f⟩`.
pub fn evolve_and_postselect(
    rho: &DensityMatrix,
    setup: &ThermometrySetup,
    pointer: &PointerWavefunction,
    cp: CouplingParams,
) -> Result<(PointerDensity, f64)> {
    evolve_joint(rho, setup, pointer, cp)?.postselect(setup.post_selection())
}

/// `e^{-igτ A_w P}|φ⟩`, renormalized.
pub fn first_order_pointer_state(
    aw: &WeakValue,
    pointer: &PointerWavefunction,
    cp: CouplingParams,
) -> Result<PointerWavefunction> {
    let grid = *pointer.grid();
    let v = grid.translate_complex(pointer.amplitudes(), aw.value * cp.strength());
    PointerWavefunction::normalized(grid, v)
}

/// `Re A_w = ΔX/gτ`, `Im A_w = ΔP/(2gτ Var_in(P))` for a Gaussian input pointer.
pub fn jozsa_readout<O: PointerMoments + ?Sized, I: PointerMoments + ?Sized>(
    pointer_out: &O,
    pointer_in: &I,
    cp: CouplingParams,
) -> Result<WeakValue> {
    let gt = cp.strength();
    if !(gt > 0.0 && gt <= WEAK_LIMIT) {
        return Err(Error::WeakRegime { strength: gt });
    }
    let kurt = pointer_in.excess_kurtosis_x();
    if !(kurt.abs() <= GAUSSIAN_KURTOSIS_TOL) {
        return Err(Error::UnsupportedReadout { excess_kurtosis: kurt });
    }
    readout_from_moments(
        pointer_out.mean_x() - pointer_in.mean_x(),
        pointer_out.mean_p() - pointer_in.mean_p(),
        pointer_in.var_p(),
        gt,
    )
}

fn readout_from_moments(dx_shift: f64, dp_shift: f64, var_p_in: f64, gt: f64) -> Result<WeakValue> {
    WeakValue::new(
        Complex64::new(dx_shift / gt, dp_shift / (2.0 * gt * var_p_in)),
        WeakValueMethod::ReadoutEstimate,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementBasis {
    Position,
    Momentum,
}

/// I.i.d. grid indices drawn from the Born distribution in `basis`.
fn sample_indices<S: PointerMoments + ?Sized>(
    state: &S,
    basis: MeasurementBasis,
    n_shots: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let p = match basis {
        MeasurementBasis::Position => state.position_probabilities(),
        MeasurementBasis::Momentum => state.momentum_probabilities(),
    };
    let dist = WeightedIndex::new(&p).map_err(|_| Error::InvalidDensity { reason: "Born weights", value: f64::NAN })?;
    Ok((0..n_shots).map(|_| dist.sample(rng)).collect())
}

/// Position or momentum outcomes of `n_shots` projective measurements.
pub fn sample_pointer_measurements<S: PointerMoments + ?Sized>(
    state: &S,
    basis: MeasurementBasis,
    n_shots: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_shots == 0 {
        return Err(Error::Domain { what: "shot count must be at least 1", value: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = sample_indices(state, basis, n_shots, &mut rng)?;
    let g = state.grid();
    Ok(idx
        .into_iter()
        .map(|k| match basis {
            MeasurementBasis::Position => g.position(k),
            MeasurementBasis::Momentum => g.momentum(k),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerConfig {
    pub grid: PointerGrid,
    pub sigma: f64,
}

impl Default for PointerConfig {
    fn default() -> Self {
        Self { grid: PointerGrid::default(), sigma: 1.0 }
    }
}

pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureEstimate {
    pub t_hat: f64,
    pub beta_hat: f64,
    /// Bootstrap standard error of `T̂` (zero on the moment-exact path).
    pub stderr: f64,
    /// `β̂ ≤ 0` or the inversion failed; `t_hat` then holds the raw `1/β̂`.
    pub failed: bool,
    pub bootstrap_failures: usize,
    pub weak_value: WeakValue,
    /// Fraction of position outcomes with `x > 0` (outcomes at the origin count half).
    pub pointer_moment: f64,
    pub success_probability: f64,
}

/// Thermalize, couple, post-select, read out and invert.
///
/// `n_shots = 0` uses exact grid moments. Otherwise `⌊n/2⌋` shots go to the
/// position basis and the rest to momentum, and the input pointer moments are
/// taken as calibrated.
pub fn estimate_temperature_end_to_end(
    t_true: f64,
    setup: &ThermometrySetup,
    pointer_cfg: PointerConfig,
    cp: CouplingParams,
    n_shots: usize,
    seed: u64,
) -> Result<TemperatureEstimate> {
    if !(t_true > 0.0) || !t_true.is_finite() {
        return Err(Error::Domain { what: "temperature must be positive and finite", value: t_true });
    }
    let gap = setup.spectrum().gap()?;
    let pointer = gaussian_pointer(pointer_cfg.grid, pointer_cfg.sigma)?;
    let rho = gibbs_state(setup.spectrum(), 1.0 / t_true)?;
    let (out, success) = evolve_and_postselect(&rho, setup, &pointer, cp)?;

    if n_shots == 0 {
        let aw = jozsa_readout(&out, &pointer, cp)?;
        let (beta_hat, failed) = invert(&aw, gap);
        return Ok(TemperatureEstimate {
            t_hat: 1.0 / beta_hat,
            beta_hat,
            stderr: 0.0,
            failed,
            bootstrap_failures: 0,
            weak_value: aw,
            pointer_moment: out.positive_position_probability(),
            success_probability: success,
        });
    }

    let n_x = n_shots / 2;
    let n_p = n_shots - n_x;
    if n_x == 0 {
        return Err(Error::Domain { what: "need at least two shots to cover both bases", value: n_shots as f64 });
    }
    // readout preconditions checked once against the exact state
    jozsa_readout(&out, &pointer, cp)?;
    let grid = pointer_cfg.grid;
    let (x, p) = (grid.positions(), grid.momenta());
    let (x_in, p_in, var_p_in) = (pointer.mean_x(), pointer.mean_p(), pointer.var_p());
    let gt = cp.strength();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hx = histogram(&sample_indices(&out, MeasurementBasis::Position, n_x, &mut rng)?, grid.n_points());
    let hp = histogram(&sample_indices(&out, MeasurementBasis::Momentum, n_p, &mut rng)?, grid.n_points());

    let estimate = |hx: &[u64], hp: &[u64]| -> Result<(WeakValue, f64, bool)> {
        let aw = readout_from_moments(
            histogram_mean(hx, &x) - x_in,
            histogram_mean(hp, &p) - p_in,
            var_p_in,
            gt,
        )?;
        let (beta, failed) = invert(&aw, gap);
        Ok((aw, beta, failed))
    };
    let (aw, beta_hat, failed) = estimate(&hx, &hp)?;
    let positive: f64 = hx.iter().enumerate().map(|(j, &c)| c as f64 * half_line_weight(&grid, j)).sum();

    let mut temps = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut bootstrap_failures = 0;
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let bx = resample(&hx, &mut rng)?;
        let bp = resample(&hp, &mut rng)?;
        let (_, b, f) = estimate(&bx, &bp)?;
        if f {
            bootstrap_failures += 1;
        } else {
            temps.push(1.0 / b);
        }
    }

    Ok(TemperatureEstimate {
        t_hat: 1.0 / beta_hat,
        beta_hat,
        stderr: sample_std(&temps),
        failed,
        bootstrap_failures,
        weak_value: aw,
        pointer_moment: positive / n_x as f64,
        success_probability: success,
    })
}

/// Real part of the exact qubit inversion and a failure flag.
fn invert(aw: &WeakValue, gap: f64) -> (f64, bool) {
    match invert_beta_exact_qubit(aw, gap) {
        Ok(b) if b.re > 0.0 && b.re.is_finite() => (b.re, false),
        Ok(b) => (b.re, true),
        Err(_) => (f64::NAN, true),
    }
}

fn histogram(indices: &[usize], n: usize) -> Vec<u64> {
    let mut h = vec![0u64; n];
    indices.iter().for_each(|&i| h[i] += 1);
    h
}

fn histogram_mean(h: &[u64], values: &[f64]) -> f64 {
    let total: u64 = h.iter().sum();
    h.iter().zip(values).map(|(&c, v)| c as f64 * v).sum::<f64>() / total as f64
}

/// Multinomial resample of a histogram through a chain of binomials.
fn resample(h: &[u64], rng: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    let total: u64 = h.iter().sum();
    let mut remaining_n = total;
    let mut remaining_mass = total;
    let mut out = vec![0u64; h.len()];
    for (o, &c) in out.iter_mut().zip(h) {
        if c == 0 || remaining_n == 0 {
            continue;
        }
        let k = if c >= remaining_mass {
            remaining_n
        } else {
            let prob = c as f64 / remaining_mass as f64;
            Binomial::new(remaining_n, prob)
                .map_err(|_| Error::Domain { what: "binomial probability", value: prob })?
                .sample(rng)
        };
        *o = k;
        remaining_n -= k;
        remaining_mass -= c;
    }
    Ok(out)
}

fn sample_std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weakproto::{weak_value, weak_value_qubit_closed_form};

    fn default_pointer() -> PointerWavefunction {
        gaussian_pointer(PointerGrid::default(), 1.0).unwrap()
    }

    fn canonical() -> ThermometrySetup {
        ThermometrySetup::qubit_sigma_y(0.0, 1.0).unwrap()
    }

    fn exact_vs_first_order(beta: f64, gt: f64) -> f64 {
        let s = canonical();
        let rho = gibbs_state(s.spectrum(), beta).unwrap();
        let phi = default_pointer();
        let cp = CouplingParams::from_strength(gt).unwrap();
        let (out, _) = evolve_and_postselect(&rho, &s, &phi, cp).unwrap();
        let eta = first_order_pointer_state(&weak_value(&s, beta).unwrap(), &phi, cp).unwrap();
        out.trace_distance_to_pure(&eta).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(PointerGrid::new(20.0, 500).is_err());
        assert!(PointerGrid::new(20.0, 32).is_err());
        assert!(PointerGrid::new(0.0, 512).is_err());
        let g = PointerGrid::default();
        assert_eq!(g.position(0), -20.0);
        assert!((g.position(256)).abs() < 1e-15);
        assert!((g.momentum(1) - 2.0 * PI / 40.0).abs() < 1e-15);
        assert!(g.momentum(256) < 0.0);
    }

    #[test]
    fn gaussian_moments() {
        let phi = default_pointer();
        assert!(phi.mean_x().abs() < 1e-12);
        assert!((phi.var_x() - 1.0).abs() < 0.01);
        assert!((phi.var_p() - 0.25).abs() < 0.01);
        assert!(phi.excess_kurtosis_x().abs() < 1e-6);
        assert!(matches!(gaussian_pointer(PointerGrid::default(), 0.01), Err(Error::GridMismatch { .. })));
        assert!(matches!(gaussian_pointer(PointerGrid::default(), 6.0), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn wavefunction_requires_normalization() {
        let g = PointerGrid::default();
        assert!(matches!(
            PointerWavefunction::new(g, vec![Complex64::new(1.0, 0.0); 512]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn no_coupling_leaves_pointer() {
        let s = canonical();
        let rho = gibbs_state(s.spectrum(), 1.0).unwrap();
        let phi = default_pointer();
        let (out, p) = evolve_and_postselect(&rho, &s, &phi, CouplingParams::new(0.0, 1.0).unwrap()).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
        assert!(out.trace_distance_to_pure(&phi).unwrap() < 1e-7);
    }

    #[test]
    fn success_probability_matches_overlap_at_zero_coupling() {
        let s = ThermometrySetup::qubit(0.0, 1.0, crate::qcore::HermitianOperator::pauli_x(), 0.7, 0.3).unwrap();
        let rho = gibbs_state(s.spectrum(), 1.3).unwrap();
        let (_, p) = evolve_and_postselect(&rho, &s, &default_pointer(), CouplingParams::new(0.0, 0.0).unwrap()).unwrap();
        assert!((p - rho.overlap(s.post_selection())).abs() < 1e-14);
    }

    #[test]
    fn joint_evolution_is_trace_preserving() {
        let s = canonical();
        let rho = gibbs_state(s.spectrum(), 1.0).unwrap();
        for gt in [0.0, 0.01, 0.5, 2.0] {
            let j = evolve_joint(&rho, &s, &default_pointer(), CouplingParams::from_strength(gt).unwrap()).unwrap();
            assert!((j.trace() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn joint_dense_is_a_density_matrix() {
        let g = PointerGrid::new(8.0, 64).unwrap();
        let phi = gaussian_pointer(g, 1.0).unwrap();
        let s = canonical();
        let rho = gibbs_state(s.spectrum(), 1.0).unwrap();
        let j = evolve_joint(&rho, &s, &phi, CouplingParams::from_strength(0.3).unwrap()).unwrap();
        let m = j.to_dense();
        assert!(m.hermitian_deviation() < 1e-12);
        assert!((m.trace().re - 1.0).abs() < 1e-9);
        let (ev, _) = eigh(&m);
        assert!(ev[0] > -1e-8);
    }

    #[test]
    fn first_order_accuracy() {
        assert!(exact_vs_first_order(1.0, 0.01) <= 1e-3);
        assert!(exact_vs_first_order(1.0, 0.5) > 1e-2);
    }

    #[test]
    fn first_order_error_is_quadratic() {
        let d: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&g| exact_vs_first_order(1.0, g)).collect();
        assert!(d[0] / d[1] >= 3.5 && d[1] / d[2] >= 3.5, "{d:?}");
    }

    #[test]
    fn real_weak_value_translates() {
        let aw = WeakValue::new(Complex64::new(1.0, 0.0), WeakValueMethod::Exact).unwrap();
        let cp = CouplingParams::from_strength(0.01).unwrap();
        let eta = first_order_pointer_state(&aw, &default_pointer(), cp).unwrap();
        assert!((eta.mean_x() - 0.01).abs() < 1e-4);
        let r = jozsa_readout(&eta, &default_pointer(), cp).unwrap();
        assert!((r.value.re - 1.0).abs() < 0.01 && r.value.im.abs() < 0.01);
    }

    #[test]
    fn imaginary_weak_value_kicks_momentum() {
        let aw = WeakValue::new(Complex64::new(0.0, 0.4621), WeakValueMethod::Exact).unwrap();
        let cp = CouplingParams::from_strength(0.01).unwrap();
        let phi = default_pointer();
        let eta = first_order_pointer_state(&aw, &phi, cp).unwrap();
        let shift = eta.mean_p() - phi.mean_p();
        assert!((shift - 2.0 * 0.01 * 0.4621 * phi.var_p()).abs() < 1e-5);
        let r = jozsa_readout(&eta, &phi, cp).unwrap();
        assert_eq!(r.method, WeakValueMethod::ReadoutEstimate);
        assert!((r.value - aw.value).norm() / aw.value.norm() < 0.01);
    }

    #[test]
    fn zero_weak_value_is_identity() {
        let phi = default_pointer();
        let zero = WeakValue::new(Complex64::new(0.0, 0.0), WeakValueMethod::Exact).unwrap();
        let eta = first_order_pointer_state(&zero, &phi, CouplingParams::from_strength(0.01).unwrap()).unwrap();
        for (a, b) in eta.amplitudes().iter().zip(phi.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
        let r = jozsa_readout(&phi, &phi, CouplingParams::from_strength(0.01).unwrap()).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn readout_regime_and_shape_checks() {
        let phi = default_pointer();
        assert!(matches!(
            jozsa_readout(&phi, &phi, CouplingParams::from_strength(0.2).unwrap()),
            Err(Error::WeakRegime { .. })
        ));
        let g = PointerGrid::default();
        let flat: Vec<Complex64> =
            g.positions().iter().map(|x| Complex64::new(if x.abs() < 3.0 { 1.0 } else { 0.0 }, 0.0)).collect();
        let boxy = PointerWavefunction::normalized(g, flat).unwrap();
        assert!(matches!(
            jozsa_readout(&boxy, &boxy, CouplingParams::from_strength(0.01).unwrap()),
            Err(Error::UnsupportedReadout { .. })
        ));
    }

    #[test]
    fn strong_amplification_is_rejected() {
        let aw = WeakValue::new(Complex64::new(0.0, 1e4), WeakValueMethod::Exact).unwrap();
        let r = first_order_pointer_state(&aw, &default_pointer(), CouplingParams::from_strength(1.0).unwrap());
        assert!(matches!(r, Err(Error::UnphysicalAmplification { .. })));
    }

    #[test]
    fn readout_closes_loop_on_exact_pointer() {
        let s = canonical();
        let phi = default_pointer();
        let cp = CouplingParams::from_strength(0.01).unwrap();
        for beta in [0.5, 1.0, 2.0] {
            let rho = gibbs_state(s.spectrum(), beta).unwrap();
            let (out, _) = evolve_and_postselect(&rho, &s, &phi, cp).unwrap();
            let r = jozsa_readout(&out, &phi, cp).unwrap();
            let expected = weak_value_qubit_closed_form(beta, 0.0, 1.0).value;
            assert!((r.value - expected).norm() / expected.norm() < 0.01);
        }
    }

    #[test]
    fn sampling_statistics_and_determinism() {
        let phi = default_pointer();
        let xs = sample_pointer_measurements(&phi, MeasurementBasis::Position, 100_000, 5).unwrap();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
        assert!(m.abs() < 0.01 && (v - 1.0).abs() < 0.02);
        assert_eq!(xs, sample_pointer_measurements(&phi, MeasurementBasis::Position, 100_000, 5).unwrap());
        assert!(sample_pointer_measurements(&phi, MeasurementBasis::Position, 0, 5).is_err());
    }

    #[test]
    fn narrow_state_samples_one_neighbourhood() {
        let g = PointerGrid::default();
        let mut amps = vec![Complex64::new(0.0, 0.0); 512];
        amps[300] = Complex64::new(1.0 / g.dx().sqrt(), 0.0);
        let spike = PointerWavefunction::new(g, amps).unwrap();
        let xs = sample_pointer_measurements(&spike, MeasurementBasis::Position, 1000, 1).unwrap();
        assert!(xs.iter().all(|&x| (x - g.position(300)).abs() <= g.dx()));
    }

    #[test]
    fn sampled_moments_converge() {
        let s = canonical();
        let rho = gibbs_state(s.spectrum(), 1.0).unwrap();
        let (out, _) =
            evolve_and_postselect(&rho, &s, &default_pointer(), CouplingParams::from_strength(0.05).unwrap()).unwrap();
        let exact = out.mean_p();
        let sd = out.var_p().sqrt();
        for (i, n) in [1_000usize, 10_000, 100_000].into_iter().enumerate() {
            let ps = sample_pointer_measurements(&out, MeasurementBasis::Momentum, n, 11 + i as u64).unwrap();
            let m = ps.iter().sum::<f64>() / n as f64;
            assert!((m - exact).abs() <= 4.0 * sd / (n as f64).sqrt());
        }
    }

    #[test]
    fn moment_exact_pipeline_recovers_temperature() {
        let est = estimate_temperature_end_to_end(
            1.0,
            &canonical(),
            PointerConfig::default(),
            CouplingParams::from_strength(0.01).unwrap(),
            0,
            0,
        )
        .unwrap();
        assert!(!est.failed);
        assert!((est.t_hat - 1.0).abs() <= 1e-3, "{}", est.t_hat);
        assert!((est.pointer_moment - 0.5).abs() < 0.01);
    }

    #[test]
    fn shot_pipeline_is_deterministic_and_reports_stderr() {
        let run = |seed| {
            estimate_temperature_end_to_end(
                1.0,
                &canonical(),
                PointerConfig::default(),
                CouplingParams::from_strength(0.1).unwrap(),
                20_000,
                seed,
            )
            .unwrap()
        };
        let a = run(3);
        assert_eq!(a, run(3));
        assert!(a.stderr.is_finite() && a.stderr > 0.0);
        assert!(a.bootstrap_failures < BOOTSTRAP_RESAMPLES);
    }

    #[test]
    fn hot_bath_completes() {
        let est = estimate_temperature_end_to_end(
            100.0,
            &canonical(),
            PointerConfig::default(),
            CouplingParams::from_strength(0.01).unwrap(),
            10_000,
            1,
        )
        .unwrap();
        assert!(est.failed || est.stderr.is_nan() || est.stderr > 1.0);
    }

    #[test]
    fn resample_preserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = vec![0, 5, 10, 0, 85];
        let r = resample(&h, &mut rng).unwrap();
        assert_eq!(r.iter().sum::<u64>(), 100);
        assert_eq!(r[0] + r[3], 0);
    }
}
