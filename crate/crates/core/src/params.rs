//! Laboratory parameters and their mapping onto the scaled model.
//!
//! Every other module works with the two numbers `κ` (scaled cavity loss)
//! and `D` (scaled diffusion). They follow from the laboratory quantities and
//! the CARL parameter `ρ`:
//!
//! ```text
//! ω_r = 2ħk²/m          K = κ_c/(ω_r ρ)      γ̄ = γ_f/(ω_r ρ)
//! σ   = c·k·v_T/(ω_r ρ)  κ = √γ̄ K            D = σ²/√γ̄
//! ```
//!
//! with `v_T = √(k_B T/m)` and `c = 2` by default. Both `κ` and `D` scale as
//! `ρ^{-3/2}`, so the threshold margin `κD(D+κ)²` falls as `ρ^{-6}` and the
//! threshold `ρ` is unique.

use crate::error::{domain, Error, Result};
use crate::stability::threshold_margin;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817_00e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649_000_00e-23;
/// Mass of a rubidium-87 atom, kg.
pub const RB87_MASS: f64 = 1.443_160_648e-25;
/// Rb-87 D2 line, m.
pub const RB87_D2_WAVELENGTH: f64 = 780.241e-9;

const RHO_BRACKET: (f64, f64) = (1e-3, 1e6);
const RHO_REL_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 200;

/// Quantities that only enter the definition of `ρ`. They are carried for
/// bookkeeping; no implemented equation consumes them directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpGroup {
    /// Pump detuning from resonance, rad/s.
    pub detuning: f64,
    /// Pump Rabi frequency, rad/s.
    pub rabi_frequency: f64,
    /// Electric dipole moment, C·m.
    pub dipole: f64,
    /// Cavity mode volume, m³.
    pub mode_volume: f64,
    /// Intracavity pump power, W.
    pub pump_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Cavity loss rate, rad/s.
    pub kappa_c: f64,
    /// Molasses friction rate, rad/s.
    pub gamma_f: f64,
    /// Atom temperature, K.
    pub temperature: f64,
    /// Atom mass, kg.
    pub atom_mass: f64,
    /// Pump wavenumber, 1/m.
    pub wavenumber: f64,
    /// Number of atoms.
    pub atom_count: f64,
    /// Prefactor `c` in `σ = c·k·v_T/(ω_r ρ)`.
    pub spread_prefactor: f64,
    pub pump: Option<PumpGroup>,
}

impl PhysicalParams {
    /// Rb-87 on the 780 nm line with the cavity and molasses of the Tübingen
    /// ring-cavity experiment: `κ_c = 2π·22 kHz`, `γ_f = 9κ_c`, `T = 150 μK`.
    pub fn rb87_ring_cavity() -> Self {
        let kappa_c = 2.0 * std::f64::consts::PI * 22e3;
        Self {
            kappa_c,
            gamma_f: 9.0 * kappa_c,
            temperature: 150e-6,
            atom_mass: RB87_MASS,
            wavenumber: 2.0 * std::f64::consts::PI / RB87_D2_WAVELENGTH,
            atom_count: 1e6,
            spread_prefactor: 2.0,
            pump: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("kappa_c", self.kappa_c),
            ("gamma_f", self.gamma_f),
            ("temperature", self.temperature),
            ("atom_mass", self.atom_mass),
            ("wavenumber", self.wavenumber),
            ("atom_count", self.atom_count),
            ("spread_prefactor", self.spread_prefactor),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return domain(format!("{name} must be finite and positive, got {value}"));
            }
        }
        if let Some(pump) = &self.pump {
            let fields = [
                ("rabi_frequency", pump.rabi_frequency),
                ("dipole", pump.dipole),
                ("mode_volume", pump.mode_volume),
                ("pump_power", pump.pump_power),
            ];
            for (name, value) in fields {
                if !(value.is_finite() && value > 0.0) {
                    return domain(format!("{name} must be finite and positive, got {value}"));
                }
            }
            if !pump.detuning.is_finite() || pump.detuning == 0.0 {
                return domain(format!("detuning must be finite and nonzero, got {}", pump.detuning));
            }
        }
        Ok(())
    }

    /// Recoil frequency `ω_r = 2ħk²/m`, rad/s.
    pub fn recoil_frequency(&self) -> f64 {
        2.0 * HBAR * self.wavenumber * self.wavenumber / self.atom_mass
    }

    /// One-dimensional rms thermal velocity `√(k_B T/m)`, m/s.
    pub fn thermal_velocity(&self) -> f64 {
        (K_B * self.temperature / self.atom_mass).sqrt()
    }
}

/// Dimensionless parameters at a given CARL parameter `ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledParams {
    pub rho: f64,
    /// CARL bandwidth `ω_r ρ`, rad/s.
    pub omega_r_rho: f64,
    /// Scaled cavity loss `K`.
    pub k_loss: f64,
    /// Scaled friction `γ̄`.
    pub gamma_bar: f64,
    /// Momentum spread in units of `ω_r ρ`.
    pub sigma: f64,
    /// `κ = √γ̄·K`.
    pub kappa: f64,
    /// `D = σ²/√γ̄`.
    pub diffusion: f64,
}

impl ScaledParams {
    /// Builds the scaled set from `(K, γ̄, σ)`, deriving `κ` and `D`.
    pub fn from_primitive(rho: f64, omega_r_rho: f64, k_loss: f64, gamma_bar: f64, sigma: f64) -> Result<Self> {
        if !(gamma_bar > 0.0 && gamma_bar.is_finite()) {
            return domain(format!("gamma_bar must be positive, got {gamma_bar}"));
        }
        if !(k_loss > 0.0 && k_loss.is_finite()) {
            return domain(format!("K must be positive, got {k_loss}"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return domain(format!("sigma must be nonnegative, got {sigma}"));
        }
        let root = gamma_bar.sqrt();
        Ok(Self {
            rho,
            omega_r_rho,
            k_loss,
            gamma_bar,
            sigma,
            kappa: root * k_loss,
            diffusion: sigma * sigma / root,
        })
    }

    /// Momentum diffusion coefficient `D_p = γ̄σ²`.
    pub fn momentum_diffusion(&self) -> f64 {
        self.gamma_bar * self.sigma * self.sigma
    }

    /// Spatial diffusion coefficient `D_θ = σ²/γ̄`.
    pub fn spatial_diffusion(&self) -> f64 {
        self.sigma * self.sigma / self.gamma_bar
    }

    /// `κD(D+κ)²`; below one the uniform state is unstable.
    pub fn margin(&self) -> f64 {
        threshold_margin(self.kappa, self.diffusion)
    }
}

pub fn derive_scaled(phys: &PhysicalParams, rho: f64) -> Result<ScaledParams> {
    phys.validate()?;
    if !(rho > 0.0 && rho.is_finite()) {
        return domain(format!("rho must be finite and positive, got {rho}"));
    }
    let bandwidth = phys.recoil_frequency() * rho;
    let sigma = phys.spread_prefactor * phys.wavenumber * phys.thermal_velocity() / bandwidth;
    ScaledParams::from_primitive(
        rho,
        bandwidth,
        phys.kappa_c / bandwidth,
        phys.gamma_f / bandwidth,
        sigma,
    )
}

fn margin_at(phys: &PhysicalParams, rho: f64) -> Result<f64> {
    Ok(derive_scaled(phys, rho)?.margin())
}

/// The `ρ` at which `κ(ρ)D(ρ)(D(ρ)+κ(ρ))² = 1`, by bisection in `ln ρ`.
pub fn rho_at_threshold(phys: &PhysicalParams) -> Result<f64> {
    phys.validate()?;
    let (mut lo, mut hi) = (RHO_BRACKET.0.ln(), RHO_BRACKET.1.ln());
    let (m_lo, m_hi) = (margin_at(phys, lo.exp())?, margin_at(phys, hi.exp())?);
    // margin decreases with rho: stable (>1) at the low end, unstable at the high end.
    if !(m_lo > 1.0 && m_hi < 1.0) {
        return Err(Error::Convergence {
            what: "threshold rho bracket",
            iterations: 0,
            residual: if m_lo <= 1.0 { m_lo - 1.0 } else { m_hi - 1.0 },
        });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if margin_at(phys, mid.exp())? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < RHO_REL_TOL * 1e-3 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Scaled parameters at pump power `P₀ = p_ratio·P_T`. Since `ρ ∝ P₀^{1/3}`,
/// `ρ = ρ_th·p_ratio^{1/3}`.
pub fn pump_ratio_to_params(phys: &PhysicalParams, p_ratio: f64) -> Result<ScaledParams> {
    if !(p_ratio > 0.0 && p_ratio.is_finite()) {
        return domain(format!("pump ratio must be finite and positive, got {p_ratio}"));
    }
    let rho_th = rho_at_threshold(phys)?;
    derive_scaled(phys, rho_th * p_ratio.cbrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recoil_frequency_rb87() {
        let phys = PhysicalParams {
            atom_mass: 1.443e-25,
            wavenumber: 2.0 * std::f64::consts::PI / 780e-9,
            ..PhysicalParams::rb87_ring_cavity()
        };
        // 2ħk²/m evaluated by hand: k = 8.0554e6 /m.
        let k: f64 = 2.0 * std::f64::consts::PI / 780e-9;
        let expected = 2.0 * 1.054_571_817e-34 * k * k / 1.443e-25;
        assert_relative_eq!(phys.recoil_frequency(), expected, max_relative = 1e-12);
        assert!((phys.recoil_frequency() - 9.5e4).abs() < 0.01 * 9.5e4);
    }

    #[test]
    fn threshold_pair_at_rho_14_6() {
        let s = derive_scaled(&PhysicalParams::rb87_ring_cavity(), 14.6).unwrap();
        assert!((s.kappa - 0.095).abs() < 0.002, "kappa = {}", s.kappa);
        assert!((s.diffusion - 2.05).abs() < 0.02, "D = {}", s.diffusion);
        assert!((s.kappa - 0.1).abs() / 0.1 < 0.06);
        assert!((s.diffusion - 2.1).abs() / 2.1 < 0.05);
    }

    #[test]
    fn unit_identity() {
        let mut phys = PhysicalParams::rb87_ring_cavity();
        let rho = 10.0;
        let bw = phys.recoil_frequency() * rho;
        phys.gamma_f = bw;
        phys.kappa_c = bw;
        // sigma = 2 k v_T / bw = 1  =>  v_T = bw / (2k)
        let v_t = bw / (2.0 * phys.wavenumber);
        phys.temperature = v_t * v_t * phys.atom_mass / K_B;
        let s = derive_scaled(&phys, rho).unwrap();
        for v in [s.k_loss, s.gamma_bar, s.kappa, s.diffusion, s.sigma] {
            assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let phys = PhysicalParams::rb87_ring_cavity();
        assert!(matches!(derive_scaled(&phys, 0.0), Err(Error::Domain(_))));
        assert!(matches!(derive_scaled(&phys, -3.0), Err(Error::Domain(_))));
        let bad = PhysicalParams {
            temperature: 0.0,
            ..phys
        };
        assert!(matches!(derive_scaled(&bad, 1.0), Err(Error::Domain(_))));
        assert!(matches!(rho_at_threshold(&bad), Err(Error::Domain(_))));
        assert!(matches!(pump_ratio_to_params(&phys, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn threshold_rho_is_near_fourteen() {
        let rho = rho_at_threshold(&PhysicalParams::rb87_ring_cavity()).unwrap();
        assert!((rho - 14.6).abs() / 14.6 < 0.10, "rho_th = {rho}");
        let s = derive_scaled(&PhysicalParams::rb87_ring_cavity(), rho).unwrap();
        assert!((s.margin() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn margin_at_unit_rho_is_definition() {
        let phys = PhysicalParams::rb87_ring_cavity();
        let s = derive_scaled(&phys, 1.0).unwrap();
        let k = s.kappa;
        let d = s.diffusion;
        assert_relative_eq!(s.margin(), k * d * (d + k) * (d + k), max_relative = 1e-14);
    }

    #[test]
    fn threshold_rho_missing_bracket() {
        // Enormous temperature keeps the system stable across the whole bracket.
        let phys = PhysicalParams {
            temperature: 1e30,
            ..PhysicalParams::rb87_ring_cavity()
        };
        assert!(matches!(rho_at_threshold(&phys), Err(Error::Convergence { .. })));
    }

    #[test]
    fn pump_ratio_mapping() {
        let phys = PhysicalParams::rb87_ring_cavity();
        let at_one = pump_ratio_to_params(&phys, 1.0).unwrap();
        assert!((at_one.margin() - 1.0).abs() < 1e-8);

        let at_eight = pump_ratio_to_params(&phys, 8.0).unwrap();
        assert_relative_eq!(at_eight.rho, 2.0 * at_one.rho, max_relative = 1e-12);
        let factor = 8f64.powf(-0.5);
        assert_relative_eq!(at_eight.kappa, factor * at_one.kappa, max_relative = 1e-12);
        assert_relative_eq!(at_eight.diffusion, factor * at_one.diffusion, max_relative = 1e-12);

        let huge = pump_ratio_to_params(&phys, 1e12).unwrap();
        assert!(huge.margin() < 1e-10);
    }

    #[test]
    fn diffusion_coefficients() {
        let s = derive_scaled(&PhysicalParams::rb87_ring_cavity(), 14.6).unwrap();
        assert_relative_eq!(s.momentum_diffusion(), s.gamma_bar * s.sigma.powi(2));
        assert_relative_eq!(
            s.diffusion,
            s.gamma_bar.sqrt() * s.spatial_diffusion(),
            max_relative = 1e-14
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kappa_and_d_scale_as_rho_minus_three_halves(rho in 0.1f64..100.0, c in 0.1f64..10.0) {
                let phys = PhysicalParams::rb87_ring_cavity();
                let a = derive_scaled(&phys, rho).unwrap();
                let b = derive_scaled(&phys, c * rho).unwrap();
                let f = c.powf(-1.5);
                prop_assert!((b.kappa - f * a.kappa).abs() <= 1e-12 * a.kappa.max(b.kappa));
                prop_assert!((b.diffusion - f * a.diffusion).abs() <= 1e-12 * a.diffusion.max(b.diffusion));
            }

            #[test]
            fn self_consistency(rho in 0.01f64..1000.0, t in 1e-6f64..1e-2, g in 1.0f64..50.0) {
                let phys = PhysicalParams {
                    temperature: t,
                    gamma_f: g * 2.0 * std::f64::consts::PI * 22e3,
                    ..PhysicalParams::rb87_ring_cavity()
                };
                let s = derive_scaled(&phys, rho).unwrap();
                prop_assert!(s.kappa > 0.0 && s.diffusion >= 0.0 && s.gamma_bar > 0.0);
                prop_assert!((s.kappa - s.gamma_bar.sqrt() * s.k_loss).abs() <= 1e-15 * s.kappa);
                prop_assert!((s.diffusion - s.sigma * s.sigma / s.gamma_bar.sqrt()).abs() <= 1e-15 * s.diffusion);
            }

            #[test]
            fn threshold_round_trip(t in 1e-5f64..1e-3, kc in 1e3f64..1e6) {
                let phys = PhysicalParams {
                    temperature: t,
                    kappa_c: kc,
                    gamma_f: 9.0 * kc,
                    ..PhysicalParams::rb87_ring_cavity()
                };
                let rho = rho_at_threshold(&phys).unwrap();
                let s = derive_scaled(&phys, rho).unwrap();
                prop_assert!((s.margin() - 1.0).abs() < 1e-8);
            }
        }
    }
}
