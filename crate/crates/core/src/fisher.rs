//! Quantum Fisher information for temperature and the Cramér–Rao floor.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::pointer::{CouplingParams, PointerGrid, PointerMoments, PointerWavefunction};
use crate::qcore::{gibbs_state, AsMatrix, CMatrix};
use crate::weakproto::ThermometrySetup;

/// Post-selection `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostSelectionAngles {
    theta: f64,
    phi: f64,
}

impl PostSelectionAngles {
    /// `θ ∈ [0, π]`, `φ ∈ [0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=core::f64::consts::PI).contains(&theta) {
            return Err(Error::Domain { what: "polar angle outside [0, pi]", value: theta });
        }
        if !(0.0..2.0 * core::f64::consts::PI).contains(&phi) {
            return Err(Error::Domain { what: "azimuth outside [0, 2pi)", value: phi });
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiNumeric {
    pub value: f64,
    /// Halving the step moved the estimate by more than 1%.
    pub step_warning: bool,
}

/// `4⟨ψ̇|ψ̇⟩ - 4|⟨ψ|ψ̇⟩|²` for a pointer family, by central differences.
///
/// Uses `h` and `h/2`; the `h/2` value is returned. Tiny negative results
/// from cancellation are clamped to zero.
pub fn qfi_pure_numeric<F>(mut family: F, t: f64, h: f64) -> Result<QfiNumeric>
where
    F: FnMut(f64) -> Result<PointerWavefunction>,
{
    if !(h > 0.0) || !(t - h).is_finite() {
        return Err(Error::Domain { what: "finite-difference step", value: h });
    }
    let centre = family(t)?;
    let mut eval = |h: f64| -> Result<f64> {
        let up = family(t + h)?;
        let down = family(t - h)?;
        let dx = centre.grid().dx();
        let dot: Vec<Complex64> =
            up.amplitudes().iter().zip(down.amplitudes()).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let dd: f64 = dot.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
        let overlap: Complex64 = centre.amplitudes().iter().zip(&dot).map(|(a, b)| a.conj() * b).sum::<Complex64>() * dx;
        Ok(4.0 * dd - 4.0 * overlap.norm_sqr())
    };
    let coarse = eval(h)?;
    let fine = eval(0.5 * h)?;
    let step_warning = (fine - coarse).abs() > 0.01 * fine.abs().max(1e-300);
    if fine < -1e-8 {
        return Err(Error::NonFinite { x: fine });
    }
    Ok(QfiNumeric { value: fine.max(0.0), step_warning })
}

/// `dρ_T/dT = (H - ⟨H⟩_ρ) ρ_T / T²`.
fn gibbs_derivative(setup: &ThermometrySetup, t: f64) -> Result<(CMatrix, CMatrix)> {
    let rho = gibbs_state(setup.spectrum(), 1.0 / t)?;
    let levels = setup.spectrum().levels();
    let pops = setup.spectrum().populations(1.0 / t)?;
    let mean_e: f64 = levels.iter().zip(&pops).map(|(e, p)| e * p).sum();
    // in the energy basis dρ/dT is diagonal: p_n (E_n - ⟨E⟩)/T²
    let diag: Vec<f64> = levels.iter().zip(&pops).map(|(e, p)| p * (e - mean_e) / (t * t)).collect();
    let v = setup.spectrum().eigenbasis();
    let drho = &(v * &CMatrix::diagonal(&diag)) * &v.adjoint();
    Ok((rho.matrix().clone(), drho))
}

/// `dA_w/dT` from the quotient rule on `⟨ψ_f|Aρ_T|ψ_f⟩ / ⟨ψ_f|ρ_T|ψ_f⟩`.
pub fn daw_dt_analytic(setup: &ThermometrySetup, t: f64) -> Result<Complex64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain { what: "temperature must be positive", value: t });
    }
    let (rho, drho) = gibbs_derivative(setup, t)?;
    let a = setup.observable().matrix();
    let f = setup.post_selection().amplitudes();
    let d = rho.sandwich(f, f).re;
    if !(d > 1e-12) {
        return Err(Error::DegeneratePostSelection { probability: d });
    }
    let num = (a * &rho).sandwich(f, f);
    let dnum = (a * &drho).sandwich(f, f);
    let dd = drho.sandwich(f, f);
    Ok(dnum / d - dd * num / (d * d))
}

/// `F_T = (gτ)² |dA_w/dT|² (ξ - ξ²)`.
pub fn qfi_temperature(cp: CouplingParams, daw_dt: Complex64, pointer_moment: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pointer_moment) {
        return Err(Error::MomentConvention { value: pointer_moment });
    }
    let gt = cp.strength();
    Ok(gt * gt * daw_dt.norm_sqr() * (pointer_moment - pointer_moment * pointer_moment))
}

/// Closed form of `|dA_w/dT|` for `A = σ_y`, levels `(0, Δ)`.
///
/// Evaluated as `2e^{-x}Δ sinθ S / (T²[(1-cosθ)e^{-x} + 1 + cosθ]²)` with
/// `x = Δ/T`, which is the textbook expression divided through by `e^{2x}`.
pub fn scaled_precision(t: f64, gap: f64, angles: PostSelectionAngles) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain { what: "temperature must be positive", value: t });
    }
    let (st, ct) = angles.theta.sin_cos();
    let (sp, cp) = angles.phi.sin_cos();
    let s = (cp * cp + ct * ct * sp * sp).sqrt();
    let e = (-gap / t).exp();
    let den = (1.0 - ct) * e + (1.0 + ct);
    Ok((2.0 * e * gap * st * s / (t * t * den * den)).abs())
}

/// `1/√(nF)`.
pub fn qcrb(fisher: f64, n_runs: u64) -> Result<f64> {
    if !(fisher > 0.0) {
        return Err(Error::UnboundedVariance { fisher });
    }
    if n_runs == 0 {
        return Err(Error::Domain { what: "run count must be at least 1", value: 0.0 });
    }
    Ok(1.0 / (n_runs as f64 * fisher).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiResult {
    pub t: f64,
    pub qfi: f64,
    /// `|dA_w/dT|`.
    pub scaled: f64,
    pub pointer_moment: f64,
    /// `None` when `F_T = 0`.
    pub qcrb: Option<f64>,
}

pub fn qfi_result(
    setup: &ThermometrySetup,
    cp: CouplingParams,
    t: f64,
    pointer_moment: f64,
    n_runs: u64,
) -> Result<QfiResult> {
    let d = daw_dt_analytic(setup, t)?;
    let qfi = qfi_temperature(cp, d, pointer_moment)?;
    let bound = match qcrb(qfi, n_runs) {
        Ok(b) => Some(b),
        Err(Error::UnboundedVariance { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(QfiResult { t, qfi, scaled: d.norm(), pointer_moment, qcrb: bound })
}

/// `T ↦ η(T)`, the first-order pointer state of the setup at temperature `T`.
pub fn first_order_family(
    setup: &ThermometrySetup,
    grid: PointerGrid,
    sigma: f64,
    cp: CouplingParams,
) -> impl FnMut(f64) -> Result<PointerWavefunction> + '_ {
    move |t: f64| {
        let pointer = crate::pointer::gaussian_pointer(grid, sigma)?;
        let aw = crate::weakproto::weak_value(setup, 1.0 / t)?;
        crate::pointer::first_order_pointer_state(&aw, &pointer, cp)
    }
}
