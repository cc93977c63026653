//! Error models for weak thermometry and the resulting precision windows.
//!
//! Two perturbations of the ideal protocol are analysed for the σ_y qubit:
//! a thermal state contaminated by a pure state `χ`, and a post-selection
//! blurred by white noise. Closed forms use a unit gap; the numeric paths take
//! the gap from the setup.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fisher::{daw_dt_analytic, scaled_precision, PostSelectionAngles};
use crate::numerics::{
    complex_arctanh, find_root, minimize_golden, minimize_on_grid, Bracket, SphereQuadrature,
};
use crate::qcore::{gibbs_state, haar_random_state_with, AsMatrix, DensityMatrix, PureState};
use crate::weakproto::{invert_beta_exact_qubit, weak_value, weak_value_on_state, ThermometrySetup, WeakValue, WeakValueMethod};

const ROOT_TOL: f64 = 1e-13;
const ROOT_ITER: usize = 500;
const FLAT_PRECISION: f64 = 1e-12;

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::Domain { what: "inverse temperature must be positive", value: beta });
    }
    Ok(())
}

/// `ρ_T^(δ) = (1-δ)ρ_T + δ|χ⟩⟨χ|` with `δ ∈ [0, 0.2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImperfectThermalization {
    delta: f64,
    chi: PureState,
}

impl ImperfectThermalization {
    pub fn new(delta: f64, chi: PureState) -> Result<Self> {
        if !(0.0..=0.2).contains(&delta) {
            return Err(Error::Domain { what: "contamination weight outside [0, 0.2]", value: delta });
        }
        Ok(Self { delta, chi })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn chi(&self) -> &PureState {
        &self.chi
    }

    pub fn contaminate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.mix(self.delta, &DensityMatrix::from_pure(&self.chi))
    }
}

/// `ρ_f^(ε) = (1-ε)|ψ_f⟩⟨ψ_f| + (ε/2)𝟙` with `ε ∈ [0, 0.5]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnsharpPostSelection {
    epsilon: f64,
    psi_f: PureState,
}

impl UnsharpPostSelection {
    pub fn new(epsilon: f64, psi_f: PureState) -> Result<Self> {
        if !(0.0..=0.5).contains(&epsilon) {
            return Err(Error::Domain { what: "post-selection blur outside [0, 0.5]", value: epsilon });
        }
        if psi_f.dim() != 2 {
            return Err(Error::RequiresQubit { dim: psi_f.dim() });
        }
        Ok(Self { epsilon, psi_f })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn effect(&self) -> Result<DensityMatrix> {
        DensityMatrix::from_pure(&self.psi_f).mix(self.epsilon, &DensityMatrix::maximally_mixed(2))
    }
}

/// `v_1 = |⟨ψ_f|χ⟩|²/D` and `v_2 = ⟨ψ_f|A|χ⟩⟨χ|ψ_f⟩/D`, `D = ⟨ψ_f|ρ_T|ψ_f⟩`.
fn contamination_coefficients(setup: &ThermometrySetup, beta: f64, chi: &PureState) -> Result<(f64, Complex64)> {
    let rho = gibbs_state(setup.spectrum(), beta)?;
    let f = setup.post_selection().amplitudes();
    let d = rho.matrix().sandwich(f, f).re;
    if !(d > 1e-12) {
        return Err(Error::DegeneratePostSelection { probability: d });
    }
    let fc = setup.post_selection().inner(chi);
    let a_chi = setup.observable().matrix().sandwich(f, chi.amplitudes());
    Ok((fc.norm_sqr() / d, a_chi * fc.conj() / d))
}

/// Apparent inverse temperature `(2/Δ) artanh(c_1 tanh(βΔ/2) - i c_2)` with
/// `c_1 = 1 - δ v_1`, `c_2 = δ v_2`.
pub fn apparent_beta_imperfect(beta: f64, setup: &ThermometrySetup, model: &ImperfectThermalization) -> Result<Complex64> {
    let gap = setup.spectrum().gap()?;
    let (v1, v2) = contamination_coefficients(setup, beta, model.chi())?;
    linearized_apparent_beta(beta, gap, model.delta(), v1, v2)
}

fn linearized_apparent_beta(beta: f64, gap: f64, delta: f64, v1: f64, v2: Complex64) -> Result<Complex64> {
    let z = Complex64::new((1.0 - delta * v1) * (0.5 * beta * gap).tanh(), 0.0) - Complex64::new(0.0, 1.0) * v2 * delta;
    if (z - 1.0).norm() <= 1e-12 || (z + 1.0).norm() <= 1e-12 {
        return Err(Error::DivergentApparentTemperature { re: z.re, im: z.im });
    }
    Ok(complex_arctanh(z)? * (2.0 / gap))
}

/// Apparent inverse temperature from the exact weak value on `ρ_T^(δ)`.
pub fn apparent_beta_imperfect_exact(
    beta: f64,
    setup: &ThermometrySetup,
    model: &ImperfectThermalization,
) -> Result<Complex64> {
    let gap = setup.spectrum().gap()?;
    let rho = model.contaminate(&gibbs_state(setup.spectrum(), beta)?)?;
    invert_beta_exact_qubit(&weak_value_on_state(setup, &rho)?, gap)
}

fn cosh2_half(beta: f64) -> f64 {
    let c = (0.5 * beta).cosh();
    c * c
}

// `1 - tanh²(x)` without the cancellation at large `x`
fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

/// Closed-form RMS relative error for post-selection at Bloch angles `(ξ, ν)`, unit gap:
///
/// `√((13 - cos2ν)cosh β - 4cos2ξ sin²ν cosh²(β/2) - (3 + cos2ν))
///  / (3β[cosh(β/2) + cos ξ sinh(β/2)][1 - tanh²(β/2)])`.
pub fn rms_error_thermalization_closed(beta: f64, xi: f64, nu: f64) -> Result<f64> {
    check_beta(beta)?;
    let c2n = (2.0 * nu).cos();
    let sn = nu.sin();
    let num = (13.0 - c2n) * beta.cosh() - 4.0 * (2.0 * xi).cos() * sn * sn * cosh2_half(beta) - (3.0 + c2n);
    let den = 3.0 * beta * ((0.5 * beta).cosh() + xi.cos() * (0.5 * beta).sinh()) * sech2(0.5 * beta);
    Ok(num.sqrt() / den)
}

/// `√((1 + 4cosh β + 3cosh 2β)/(9β²))`, the `|+⟩` case.
pub fn rms_error_plus(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(((1.0 + 4.0 * beta.cosh() + 3.0 * (2.0 * beta).cosh()) / (9.0 * beta * beta)).sqrt())
}

/// First-order spherical average computed directly from the linearized integrand.
///
/// Averaging `4|v_1 t + i v_2|²/(β²(1-t²)²)` over a uniformly random `χ`
/// gives `8(1 + 2t² + n_y²)/(3β²(1-t²)²(1 + n_z t)²)` with `n` the Bloch vector
/// of `ψ_f` and `t = tanh(β/2)`. This is `√3` times the closed form above.
pub fn rms_error_thermalization_first_order(beta: f64, xi: f64, nu: f64) -> Result<f64> {
    check_beta(beta)?;
    let t = (0.5 * beta).tanh();
    let nz = xi.cos();
    let ny = xi.sin() * nu.sin();
    let n2 = 8.0 * (1.0 + 2.0 * t * t + ny * ny) / (3.0 * beta * beta * sech2(0.5 * beta).powi(2) * (1.0 + nz * t).powi(2));
    Ok(n2.sqrt())
}

/// How the contaminated weak value is formed at each contaminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContaminantRoute {
    /// `artanh(c_1 tanh(βΔ/2) - i c_2)` with the first-order coefficients.
    Linearized,
    /// Exact weak value on `ρ_T^(δ)`, then exact inversion.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SphereSampling<'a> {
    Quadrature(&'a SphereQuadrature),
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericRms {
    pub value: f64,
    /// Monte-Carlo standard error of `value` (delta method); `None` for quadrature.
    pub stderr: Option<f64>,
    /// Nodes (or samples) where `β̃` diverged; they are left out of the average.
    pub divergent_nodes: Vec<usize>,
}

impl NumericRms {
    pub fn flagged(&self) -> bool {
        !self.divergent_nodes.is_empty()
    }
}

/// Spherical average of `|β̃ - β|²/(β²δ²)` over the contaminant, without expanding `β̃`.
pub fn rms_error_thermalization_numeric(
    beta: f64,
    setup: &ThermometrySetup,
    delta: f64,
    sampling: SphereSampling<'_>,
    route: ContaminantRoute,
) -> Result<NumericRms> {
    check_beta(beta)?;
    if !(delta > 0.0 && delta <= 0.2) {
        return Err(Error::Domain { what: "contamination weight outside (0, 0.2]", value: delta });
    }
    let spectrum = setup.spectrum();
    let integrand = |chi: PureState| -> Result<f64> {
        let model = ImperfectThermalization::new(delta, chi)?;
        let bt = match route {
            ContaminantRoute::Linearized => apparent_beta_imperfect(beta, setup, &model)?,
            ContaminantRoute::Exact => apparent_beta_imperfect_exact(beta, setup, &model)?,
        };
        let r = (bt - beta).norm() / (beta * delta);
        if r.is_finite() {
            Ok(r * r)
        } else {
            Err(Error::NonFinite { x: r })
        }
    };
    let mut divergent = Vec::new();
    match sampling {
        SphereSampling::Quadrature(quad) => {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (i, node) in quad.nodes().iter().enumerate() {
                match integrand(spectrum.bloch_state(node.theta, node.phi)?) {
                    Ok(v) => {
                        acc += node.weight * v;
                        wsum += node.weight;
                    }
                    Err(_) => divergent.push(i),
                }
            }
            Ok(NumericRms { value: (acc / wsum).sqrt(), stderr: None, divergent_nodes: divergent })
        }
        SphereSampling::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::Domain { what: "Monte-Carlo sample count must be at least 2", value: samples as f64 });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut s1, mut s2, mut n) = (0.0, 0.0, 0usize);
            for i in 0..samples {
                let local = haar_random_state_with(2, &mut rng)?;
                let chi = PureState::normalized(spectrum.eigenbasis().apply(local.amplitudes()))?;
                match integrand(chi) {
                    Ok(v) => {
                        s1 += v;
                        s2 += v * v;
                        n += 1;
                    }
                    Err(_) => divergent.push(i),
                }
            }
            let nf = n as f64;
            let mean = s1 / nf;
            let var = (s2 / nf - mean * mean) * nf / (nf - 1.0);
            let value = mean.sqrt();
            let se_mean = (var / nf).sqrt();
            Ok(NumericRms { value, stderr: Some(se_mean / (2.0 * value)), divergent_nodes: divergent })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalTemperature {
    pub t_opt: f64,
    pub beta_opt: f64,
    /// Minimal RMS error (the reciprocal of the peak precision).
    pub n_min: f64,
    /// The grid minimum sat at an end of `β ∈ [0.01, 50]`.
    pub at_boundary: bool,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Minimizes the closed-form error over `β ∈ [0.01, 50]`.
pub fn optimal_temperature_thermalization(xi: f64, nu: f64) -> Result<OptimalTemperature> {
    let grid = log_grid(0.01, 50.0, 400);
    let found = minimize_on_grid(|b| rms_error_thermalization_closed(b, xi, nu).unwrap_or(f64::NAN), &grid, 1e-10)
        .ok_or(Error::NoConvergence { best: f64::NAN, iterations: grid.len() })?;
    let b = found.minimum.x;
    Ok(OptimalTemperature { t_opt: 1.0 / b, beta_opt: b, n_min: found.minimum.value, at_boundary: found.at_boundary })
}

/// Stationarity of the `|+⟩` error: `β(3 sinh β - 2 tanh(β/2)) = 3 cosh β - 1`.
pub fn stationarity_plus(beta: f64) -> f64 {
    beta * (3.0 * beta.sinh() - 2.0 * (0.5 * beta).tanh()) - (3.0 * beta.cosh() - 1.0)
}

/// Root of [`stationarity_plus`]; returns `β*`.
pub fn solve_stationarity_plus() -> Result<f64> {
    let mut f = stationarity_plus;
    let bracket = Bracket::new(&mut f, 0.5, 5.0)?;
    find_root(f, bracket, ROOT_TOL, ROOT_ITER)
}

/// The three routes to the blurred-post-selection weak value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnsharpWeakValues {
    /// `A_w + ε(Tr(Aρ_T) - 1)/⟨ψ_f|ρ_T|ψ_f⟩`, as commonly quoted.
    pub quoted_first_order: WeakValue,
    /// `A_w + ε(Tr(Aρ_T) - A_w)/(2⟨ψ_f|ρ_T|ψ_f⟩)`, the actual first-order term.
    pub first_order: WeakValue,
    /// `Tr(ρ_f^(ε) A ρ_T) / Tr(ρ_f^(ε) ρ_T)`.
    pub exact: WeakValue,
}

pub fn perturbed_weak_value_unsharp(setup: &ThermometrySetup, beta: f64, eps: f64) -> Result<UnsharpWeakValues> {
    let blur = UnsharpPostSelection::new(eps, setup.post_selection().clone())?;
    let rho = gibbs_state(setup.spectrum(), beta)?;
    let aw = weak_value(setup, beta)?.value;
    let f = setup.post_selection().amplitudes();
    let d = rho.matrix().sandwich(f, f).re;
    let a_rho = setup.observable().matrix() * rho.matrix();
    let tr_a_rho = a_rho.trace();

    let effect = blur.effect()?;
    let num = (effect.matrix() * &a_rho).trace();
    let den = (effect.matrix() * rho.matrix()).trace().re;
    if !(den > 1e-12) {
        return Err(Error::DegeneratePostSelection { probability: den });
    }
    Ok(UnsharpWeakValues {
        quoted_first_order: WeakValue::new(aw + (tr_a_rho - 1.0) * (eps / d), WeakValueMethod::Exact)?,
        first_order: WeakValue::new(aw + (tr_a_rho - aw) * (eps / (2.0 * d)), WeakValueMethod::Exact)?,
        exact: WeakValue::new(num / den, WeakValueMethod::Exact)?,
    })
}

/// `4/(Δβ[1 - tanh²(βΔ/2)](1 + cos ξ tanh(βΔ/2)))`.
pub fn rms_error_postselection(beta: f64, gap: f64, xi: f64) -> Result<f64> {
    check_beta(beta)?;
    let t = (0.5 * beta * gap).tanh();
    Ok(4.0 / (gap * beta * sech2(0.5 * beta * gap) * (1.0 + xi.cos() * t)))
}

/// `(2/(Δβ(1 - t²))) |(Tr(Aρ_T) - 1)/⟨ψ_f|ρ_T|ψ_f⟩|` for any qubit setup.
pub fn rms_error_postselection_general(setup: &ThermometrySetup, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let gap = setup.spectrum().gap()?;
    let rho = gibbs_state(setup.spectrum(), beta)?;
    let f = setup.post_selection().amplitudes();
    let d = rho.matrix().sandwich(f, f).re;
    let tr = (setup.observable().matrix() * rho.matrix()).trace();
    Ok(2.0 / (gap * beta * sech2(0.5 * beta * gap)) * ((tr - 1.0) / d).norm())
}

/// Stationarity of the blurred-post-selection precision in `T`, multiplied
/// through by its (sign-changing) denominator.
pub fn postselection_stationarity(t: f64, xi: f64) -> f64 {
    let u = 1.0 / t;
    let (s, c) = (u.sinh(), u.cosh());
    (-u).exp() * (xi.cos() * (t * s - c + 2.0) - (s - t * (1.0 + c)))
}

/// Root of [`postselection_stationarity`] in `T ∈ [0.1, 5]`.
pub fn optimal_temperature_postselection(xi: f64) -> Result<f64> {
    if !(0.0..=core::f64::consts::PI).contains(&xi) {
        return Err(Error::Domain { what: "polar angle outside [0, pi]", value: xi });
    }
    let (lo, hi) = (0.1, 5.0);
    let grid: Vec<f64> = (0..=490).map(|i| lo + 0.01 * i as f64).collect();
    let f = |t: f64| postselection_stationarity(t, xi);
    for w in grid.windows(2) {
        let (fa, fb) = (f(w[0]), f(w[1]));
        if fa == 0.0 {
            return Ok(w[0]);
        }
        if fa * fb < 0.0 {
            let bracket = Bracket::from_values(w[0], w[1], fa, fb)?;
            return find_root(f, bracket, ROOT_TOL, ROOT_ITER);
        }
    }
    Err(Error::SearchWindow { lo, hi })
}

/// Maximizer of `β(1 - tanh²(β/2))(1 + cos ξ tanh(β/2))`, mapped to `T`.
pub fn optimal_temperature_postselection_argmax(xi: f64) -> Result<f64> {
    let grid = log_grid(0.05, 20.0, 400);
    let found = minimize_on_grid(|b| -1.0 / rms_error_postselection(b, 1.0, xi).unwrap_or(f64::INFINITY), &grid, 1e-12)
        .ok_or(Error::NoConvergence { best: f64::NAN, iterations: grid.len() })?;
    Ok(1.0 / found.minimum.x)
}

/// Peak of the strong-measurement qubit thermometer: `e^{1/T} = (1 + 2T)/(1 - 2T)`.
///
/// Solved as `1/T - ln((1 + 2T)/(1 - 2T)) = 0` on `[0.25, 0.49]`.
pub fn strong_scheme_reference() -> Result<f64> {
    let mut f = strong_scheme_residual;
    let bracket = Bracket::new(&mut f, 0.25, 0.49)?;
    find_root(f, bracket, ROOT_TOL, ROOT_ITER)
}

pub fn strong_scheme_residual(t: f64) -> f64 {
    1.0 / t - ((1.0 + 2.0 * t) / (1.0 - 2.0 * t)).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrecisionModel {
    /// Contaminated thermal state, closed form; post-selection at `(ξ, ν)`.
    Thermalization { xi: f64, nu: f64 },
    /// Blurred post-selection at polar angle `ξ`, unit gap.
    Postselection { xi: f64 },
    /// Scaled QFI precision `|dA_w/dT|` for `σ_y`, post-selection `(θ, φ)`, unit gap.
    Qfi { theta: f64, phi: f64 },
    /// `|dA_w/dT|` of an arbitrary setup.
    Sensitivity(ThermometrySetup),
}

impl PrecisionModel {
    /// Precision at temperature `t`; 0 where the model carries no information.
    pub fn precision(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain { what: "temperature must be positive", value: t });
        }
        let beta = 1.0 / t;
        match self {
            Self::Thermalization { xi, nu } => Ok(1.0 / rms_error_thermalization_closed(beta, *xi, *nu)?),
            Self::Postselection { xi } => Ok(1.0 / rms_error_postselection(beta, 1.0, *xi)?),
            Self::Qfi { theta, phi } => scaled_precision(t, 1.0, PostSelectionAngles::new(*theta, *phi)?),
            Self::Sensitivity(setup) => Ok(daw_dt_analytic(setup, t)?.norm()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Thermalization { .. } => "thermalization",
            Self::Postselection { .. } => "postselection",
            Self::Qfi { .. } => "qfi",
            Self::Sensitivity(_) => "sensitivity",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionCurve {
    pub model: PrecisionModel,
    pub t_grid: Vec<f64>,
    /// `1/precision`; infinite where the precision is below `1e-12`.
    pub error: Vec<f64>,
    pub precision: Vec<f64>,
    pub t_opt: f64,
    pub peak_value: f64,
    pub peak_at_boundary: bool,
    /// Precision is zero across the whole grid.
    pub flat: bool,
}

/// Samples `model` on `t_grid` and refines the peak between grid neighbours.
pub fn build_precision_curve(model: PrecisionModel, t_grid: &[f64]) -> Result<PrecisionCurve> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[0] < w[1])) || !(t_grid[0] > 0.0) {
        return Err(Error::InvalidTemperatureGrid);
    }
    let precision = t_grid.iter().map(|&t| model.precision(t)).collect::<Result<Vec<f64>>>()?;
    let error = precision.iter().map(|&p| if p > FLAT_PRECISION { 1.0 / p } else { f64::INFINITY }).collect();
    let flat = precision.iter().all(|&p| p <= FLAT_PRECISION);
    let (mut i_best, mut best) = (0, f64::NEG_INFINITY);
    for (i, &p) in precision.iter().enumerate() {
        if p > best {
            i_best = i;
            best = p;
        }
    }
    let peak_at_boundary = i_best == 0 || i_best + 1 == t_grid.len();
    let (t_opt, peak_value) = if flat || peak_at_boundary {
        (t_grid[i_best], best)
    } else {
        let m = minimize_golden(|t| -model.precision(t).unwrap_or(0.0), t_grid[i_best - 1], t_grid[i_best + 1], 1e-10);
        (m.x, -m.value)
    };
    Ok(PrecisionCurve { model, t_grid: t_grid.to_vec(), error, precision, t_opt, peak_value, peak_at_boundary, flat })
}


#[cfg(test)]
mod properties {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn plus_specialization(beta in 0.01f64..50.0) {
            let a = rms_error_thermalization_closed(beta, FRAC_PI_2, 0.0).unwrap();
            let b = rms_error_plus(beta).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }

        #[test]
        fn closed_form_is_positive(beta in 0.01f64..30.0, xi in 0.0f64..PI, nu in 0.0f64..(2.0 * PI)) {
            let n = rms_error_thermalization_closed(beta, xi, nu).unwrap();
            prop_assert!(n.is_finite() && n > 0.0);
        }

        #[test]
        fn postselection_root_is_stationary(xi in 0.0f64..PI) {
            let t = optimal_temperature_postselection(xi).unwrap();
            let d = crate::numerics::central_difference(|x| 1.0 / rms_error_postselection(1.0 / x, 1.0, xi).unwrap(), t, 1e-5);
            prop_assert!(d.abs() < 1e-8);
        }

        #[test]
        fn postselection_error_is_antitone_in_cos_xi(beta in 0.05f64..20.0, a in 0.0f64..PI, b in 0.0f64..PI) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(rms_error_postselection(beta, 1.0, lo).unwrap() <= rms_error_postselection(beta, 1.0, hi).unwrap() * (1.0 + 1e-12));
        }
    }
}
