//! Linear stability of the uniform, field-free state.
//!
//! Small perturbations of `(B₁, a)` grow as `e^{λτ}` with
//! `(λ + κ)(λ + D) = i`. The root with the larger real part sets the gain
//! and the frequency shift of the backscattered field.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::params::{derive_scaled, rho_at_threshold, PhysicalParams};

const MAX_BISECTIONS: usize = 200;
const MARGIN_TOL: f64 = 1e-12;

/// Largest threshold `κ` accepted as "good cavity" by [`verify_scaling`].
pub const GOOD_CAVITY_MAX_KAPPA: f64 = 1e-2;
/// Smallest threshold `κ` accepted as "bad cavity" by [`verify_scaling`].
pub const BAD_CAVITY_MIN_KAPPA: f64 = 1e2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionResult {
    pub kappa: f64,
    pub diffusion: f64,
    /// Root with the larger real part.
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    /// `G/κ_c = Re λ₊/κ`.
    pub gain_over_kc: f64,
    /// `Δω/κ_c = Im λ₊/κ`.
    pub shift_over_kc: f64,
    /// `κD(D+κ)²`.
    pub margin: f64,
    pub unstable: bool,
}

fn check_kappa_d(kappa: f64, d: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return domain(format!("kappa must be finite and positive, got {kappa}"));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return domain(format!("D must be finite and nonnegative, got {d}"));
    }
    Ok(())
}

/// Roots of `λ² + (κ+D)λ + (κD − i) = 0`.
///
/// `λ₋ = −(κ+D)/2 − √(C² + i)` has no cancellation; `λ₊` then follows from
/// the product of the roots, `λ₊λ₋ = κD − i`, which keeps `Re λ₊` accurate
/// near threshold even when `κ` and `D` differ by many decades.
pub fn dispersion_roots(kappa: f64, d: f64) -> Result<DispersionResult> {
    check_kappa_d(kappa, d)?;
    let c = 0.5 * (kappa - d);
    let root = Complex64::new(c * c, 1.0).sqrt();
    let lambda_minus = Complex64::from(-0.5 * (kappa + d)) - root;
    let lambda_plus = Complex64::new(kappa * d, -1.0) / lambda_minus;
    let margin = threshold_margin(kappa, d);
    Ok(DispersionResult {
        kappa,
        diffusion: d,
        lambda_plus,
        lambda_minus,
        gain_over_kc: lambda_plus.re / kappa,
        shift_over_kc: lambda_plus.im / kappa,
        margin,
        unstable: lambda_plus.re > 0.0,
    })
}

/// `(Re λ₊, Im λ₊)` from the explicit gain and frequency-shift formulas,
/// with `C = (κ − D)/2`.
pub fn closed_form_growth(kappa: f64, d: f64) -> (f64, f64) {
    let c = 0.5 * (kappa - d);
    let c2 = c * c;
    let s = (1.0 + c2 * c2).sqrt();
    let re = (0.5 * (c2 + s)).sqrt() - 0.5 * (kappa + d);
    let im = 1.0 / (std::f64::consts::SQRT_2 * (s + c2).sqrt());
    (re, im)
}

/// `κD(D+κ)²`. Values below one mark the unstable region.
pub fn threshold_margin(kappa: f64, d: f64) -> f64 {
    let s = kappa + d;
    kappa * d * s * s
}

/// The diffusion `D_th(κ)` where the margin equals one.
pub fn threshold_d(kappa: f64) -> Result<f64> {
    check_kappa_d(kappa, 0.0)?;
    let mut lo = 0.0;
    let mut hi = kappa.powf(-1.0 / 3.0).max(kappa.powi(-3));
    while threshold_margin(kappa, hi) < 1.0 {
        hi *= 2.0;
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = threshold_margin(kappa, mid);
        if (m - 1.0).abs() < MARGIN_TOL * 1e-4 {
            return Ok(mid);
        }
        if m < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (m_lo, m_hi) = (threshold_margin(kappa, lo), threshold_margin(kappa, hi));
    let best = if (m_lo - 1.0).abs() < (m_hi - 1.0).abs() {
        lo
    } else {
        hi
    };
    let residual = threshold_margin(kappa, best) - 1.0;
    if residual.abs() > MARGIN_TOL {
        return Err(Error::Convergence {
            what: "threshold D bisection",
            iterations: MAX_BISECTIONS,
            residual,
        });
    }
    Ok(best)
}

/// Dispersion results over a `κ × D` grid, `κ` outermost.
#[derive(Debug, Clone)]
pub struct InstabilityMap {
    pub kappas: Vec<f64>,
    pub diffusions: Vec<f64>,
    pub cells: Vec<DispersionResult>,
}

impl InstabilityMap {
    pub fn cell(&self, i_kappa: usize, i_d: usize) -> &DispersionResult {
        &self.cells[i_kappa * self.diffusions.len() + i_d]
    }
}

pub fn instability_map(kappas: &[f64], diffusions: &[f64]) -> Result<InstabilityMap> {
    if kappas.is_empty() || diffusions.is_empty() {
        return domain("instability map needs non-empty kappa and D grids");
    }
    let cells = kappas
        .iter()
        .flat_map(|&k| diffusions.iter().map(move |&d| dispersion_roots(k, d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(InstabilityMap {
        kappas: kappas.to_vec(),
        diffusions: diffusions.to_vec(),
        cells,
    })
}

/// `n` points spaced evenly in `ln` between `start` and `end`, inclusive.
pub fn log_space(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), end.ln());
            (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Temperature,
    CavityLoss,
    Friction,
    AtomCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavityRegime {
    Good,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    /// Value of the swept laboratory parameter.
    pub value: f64,
    pub rho_th: f64,
    pub kappa_th: f64,
    pub d_th: f64,
    /// Threshold pump power up to a constant: `ρ_th³/N`.
    pub pump_proxy: f64,
    /// `Δω_th/κ_c`.
    pub shift_over_kc: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub sweep: SweepParam,
    pub regime: CavityRegime,
    /// Log-log slope of the threshold pump proxy.
    pub pump_exponent: f64,
    /// Log-log slope of the threshold frequency shift.
    pub shift_exponent: f64,
    pub points: Vec<ScalingPoint>,
}

fn with_swept(phys: &PhysicalParams, sweep: SweepParam, value: f64) -> PhysicalParams {
    let mut p = *phys;
    match sweep {
        SweepParam::Temperature => p.temperature = value,
        SweepParam::CavityLoss => p.kappa_c = value,
        SweepParam::Friction => p.gamma_f = value,
        SweepParam::AtomCount => p.atom_count = value,
    }
    p
}

fn swept_value(phys: &PhysicalParams, sweep: SweepParam) -> f64 {
    match sweep {
        SweepParam::Temperature => phys.temperature,
        SweepParam::CavityLoss => phys.kappa_c,
        SweepParam::Friction => phys.gamma_f,
        SweepParam::AtomCount => phys.atom_count,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Sweeps one laboratory parameter over one decade upward from its value
/// in `phys_base` and fits threshold scaling exponents.
pub fn verify_scaling(phys_base: &PhysicalParams, sweep: SweepParam, regime: CavityRegime) -> Result<ScalingFit> {
    let base = swept_value(phys_base, sweep);
    verify_scaling_over(phys_base, sweep, regime, &log_space(base, 10.0 * base, 9))
}

pub fn verify_scaling_over(
    phys_base: &PhysicalParams,
    sweep: SweepParam,
    regime: CavityRegime,
    values: &[f64],
) -> Result<ScalingFit> {
    if values.len() < 2 {
        return domain("scaling sweep needs at least two points");
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-12) {
        return domain(format!(
            "scaling sweep must be positive and span a decade, got [{lo}, {hi}]"
        ));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let phys = with_swept(phys_base, sweep, value);
        let rho_th = rho_at_threshold(&phys)?;
        let s = derive_scaled(&phys, rho_th)?;
        let in_regime = match regime {
            CavityRegime::Good => s.kappa <= GOOD_CAVITY_MAX_KAPPA,
            CavityRegime::Bad => s.kappa >= BAD_CAVITY_MIN_KAPPA,
        };
        if !in_regime {
            return Err(Error::Regime(format!(
                "threshold kappa = {:.4e} at {sweep:?} = {value:e} is outside the {regime:?}-cavity regime",
                s.kappa
            )));
        }
        let disp = dispersion_roots(s.kappa, s.diffusion)?;
        points.push(ScalingPoint {
            value,
            rho_th,
            kappa_th: s.kappa,
            d_th: s.diffusion,
            pump_proxy: rho_th.powi(3) / phys.atom_count,
            shift_over_kc: disp.shift_over_kc,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.value).collect();
    let pumps: Vec<f64> = points.iter().map(|p| p.pump_proxy).collect();
    let shifts: Vec<f64> = points.iter().map(|p| p.shift_over_kc).collect();
    Ok(ScalingFit {
        sweep,
        regime,
        pump_exponent: log_log_slope(&xs, &pumps),
        shift_exponent: log_log_slope(&xs, &shifts),
        points,
    })
}

/// Laboratory parameters whose threshold sits deep in the good-cavity
/// regime (`κ_th ~ 10⁻⁴`): the ring-cavity setup with a hundredfold
/// narrower cavity.
pub fn good_cavity_example() -> PhysicalParams {
    let base = PhysicalParams::rb87_ring_cavity();
    let kappa_c = base.kappa_c / 100.0;
    PhysicalParams {
        kappa_c,
        gamma_f: 9.0 * kappa_c,
        ..base
    }
}

/// Laboratory parameters whose threshold sits deep in the bad-cavity
/// regime (`κ_th ≳ 10²`): a 10⁴ times broader cavity and sub-μK atoms.
pub fn bad_cavity_example() -> PhysicalParams {
    let base = PhysicalParams::rb87_ring_cavity();
    let kappa_c = base.kappa_c * 1e4;
    PhysicalParams {
        kappa_c,
        gamma_f: 9.0 * kappa_c,
        temperature: 0.15e-6,
        ..base
    }
}
