//! Stochastic particle simulation of the friction + noise model.
//!
//! Two dynamics are available:
//!
//! - the full model in `(t̄, A)` variables,
//!   `dθ = p̄ dt̄`, `dp̄ = [−(Ae^{iθ} + c.c.) − γ̄p̄] dt̄ + √(2γ̄σ²) dW`,
//!   `dA = [⟨e^{−iθ}⟩ − KA] dt̄`;
//! - the overdamped limit in `(τ, a)` variables,
//!   `dθ = −(ae^{iθ} + c.c.) dτ + √(2D) dW`, `da = [⟨e^{−iθ}⟩ − κa] dτ`,
//!   which is the Langevin form of the Fokker-Planck hierarchy in
//!   [`crate::fpmodes`].
//!
//! Both use Euler-Maruyama. Each particle owns a PCG stream selected by its
//! index, with its starting state drawn from a ChaCha generator keyed by the
//! seed, so a run is reproducible from `(seed, N)` alone. PCG keeps the
//! per-particle state at 32 bytes; at `N = 10⁵` the generators stay in cache.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand_pcg::Pcg64;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    /// Unwrapped phases.
    pub theta: Vec<f64>,
    /// Scaled momenta `p̄`; `None` for the overdamped model.
    pub p_bar: Option<Vec<f64>>,
    rngs: Vec<Pcg64>,
    seed: u64,
}

fn streams(n: usize, seed: u64) -> Vec<Pcg64> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|j| Pcg64::new(master.gen::<u128>(), j as u128)).collect()
}

impl ParticleEnsemble {
    /// Thermal start: uniform phases and Gaussian momenta of width `σ`.
    pub fn new(n: usize, sigma: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return domain("ensemble needs at least one particle");
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return domain(format!("sigma must be finite and nonnegative, got {sigma}"));
        }
        let mut rngs = streams(n, seed);
        let mut theta = Vec::with_capacity(n);
        let mut p_bar = Vec::with_capacity(n);
        for rng in rngs.iter_mut() {
            theta.push(rng.gen::<f64>() * 2.0 * PI);
            let xi: f64 = rng.sample(StandardNormal);
            p_bar.push(sigma * xi);
        }
        Ok(Self {
            theta,
            p_bar: Some(p_bar),
            rngs,
            seed,
        })
    }

    /// Uniform random phases without momenta, for the overdamped model.
    pub fn overdamped(n: usize, seed: u64) -> Result<Self> {
        let mut ens = Self::new(n, 0.0, seed)?;
        ens.p_bar = None;
        Ok(ens)
    }

    /// Explicit initial condition. Noise streams are still derived from `seed`.
    pub fn from_parts(theta: Vec<f64>, p_bar: Option<Vec<f64>>, seed: u64) -> Result<Self> {
        if theta.is_empty() {
            return domain("ensemble needs at least one particle");
        }
        if let Some(p) = &p_bar {
            if p.len() != theta.len() {
                return domain(format!("{} momenta for {} phases", p.len(), theta.len()));
            }
        }
        let mut rngs = streams(theta.len(), seed);
        // Skip the draws `new` would have spent on the initial condition.
        for rng in rngs.iter_mut() {
            let _: f64 = rng.gen();
            let _: f64 = rng.sample(StandardNormal);
        }
        Ok(Self {
            theta,
            p_bar,
            rngs,
            seed,
        })
    }

    /// Deterministic phases at the quantiles `(j + ½)/N` of the density
    /// with harmonics `modes` (`B_0..`), plus momenta of width `σ` when
    /// given. The shot noise of random sampling is absent, so the measured
    /// harmonics match `modes` to `O(1/N²)`.
    pub fn quantile_start(n: usize, modes: &[Complex64], sigma: Option<f64>, seed: u64) -> Result<Self> {
        if n == 0 {
            return domain("ensemble needs at least one particle");
        }
        let cdf = |t: f64| {
            let mut acc = t;
            for (k, b) in modes.iter().enumerate().skip(1) {
                let kf = k as f64;
                // 2 Re(B_k (e^{ikt} − 1)/(ik))
                let e = Complex64::from_polar(1.0, kf * t) - 1.0;
                acc += 2.0 * (b * e / Complex64::new(0.0, kf)).re;
            }
            acc / (2.0 * PI)
        };
        let theta: Vec<f64> = (0..n)
            .map(|j| {
                let target = (j as f64 + 0.5) / n as f64;
                let (mut lo, mut hi) = (0.0, 2.0 * PI);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if cdf(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect();
        let mut ens = Self::from_parts(theta, None, seed)?;
        if let Some(sigma) = sigma {
            let p = ens
                .rngs
                .iter_mut()
                .map(|rng| {
                    let xi: f64 = rng.sample(StandardNormal);
                    sigma * xi
                })
                .collect();
            ens.p_bar = Some(p);
        }
        Ok(ens)
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `⟨e^{−iθ}⟩`.
    pub fn bunching(&self) -> Complex64 {
        self.harmonic(1)
    }

    /// `⟨e^{−inθ}⟩`, the ensemble estimate of `B_n`.
    pub fn harmonic(&self, n: i32) -> Complex64 {
        let nf = n as f64;
        let (mut c, mut s) = (0.0, 0.0);
        for &t in &self.theta {
            let (sn, cs) = (nf * t).sin_cos();
            c += cs;
            s += sn;
        }
        let inv = 1.0 / self.theta.len() as f64;
        Complex64::new(c * inv, -s * inv)
    }

    pub fn theta_variance(&self) -> f64 {
        variance(&self.theta)
    }

    pub fn momentum_variance(&self) -> Option<f64> {
        self.p_bar.as_deref().map(variance)
    }

    pub fn mean_momentum(&self) -> Option<f64> {
        self.p_bar.as_deref().map(|p| p.iter().sum::<f64>() / p.len() as f64)
    }

    /// One standard-normal draw per particle from its own stream.
    pub fn draw_kicks(&mut self, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.rngs.iter_mut().map(|rng| rng.sample::<f64, _>(StandardNormal)));
    }

    /// One Euler-Maruyama step of the full model in `(t̄, A)` variables. The
    /// phase update uses the momentum from the start of the step.
    pub fn step_full(&mut self, field: &mut Complex64, model: &FullModel, dt_bar: f64) -> Result<()> {
        let mut kicks = Vec::with_capacity(self.len());
        self.draw_kicks(&mut kicks);
        self.step_full_with(field, model, dt_bar, &kicks)
    }

    /// [`Self::step_full`] driven by caller-supplied standard-normal kicks.
    pub fn step_full_with(
        &mut self,
        field: &mut Complex64,
        model: &FullModel,
        dt_bar: f64,
        kicks: &[f64],
    ) -> Result<()> {
        if !(dt_bar > 0.0) {
            return domain(format!("dt_bar must be positive, got {dt_bar}"));
        }
        if kicks.len() != self.theta.len() {
            return domain(format!("{} kicks for {} particles", kicks.len(), self.theta.len()));
        }
        let p_bar = self
            .p_bar
            .as_mut()
            .ok_or_else(|| Error::Domain("full-model step needs momenta".into()))?;
        let inv = 1.0 / self.theta.len() as f64;
        let noise = (2.0 * model.gamma_bar * model.sigma * model.sigma * dt_bar).sqrt();
        let (ar, ai) = (field.re, field.im);
        let (mut c, mut s) = (0.0, 0.0);
        for ((t, p), xi) in self.theta.iter_mut().zip(p_bar.iter_mut()).zip(kicks) {
            let (sn, cs) = t.sin_cos();
            c += cs;
            s += sn;
            let force = -2.0 * (ar * cs - ai * sn);
            let p_old = *p;
            *p += (force - model.gamma_bar * p_old) * dt_bar + noise * xi;
            *t += p_old * dt_bar;
        }
        let b = Complex64::new(c * inv, -s * inv);
        *field += (b - model.k_loss * *field) * dt_bar;
        check_field(field)
    }

    /// One Euler-Maruyama step of the overdamped model in `(τ, a)` variables.
    pub fn step_overdamped(&mut self, field: &mut Complex64, d: f64, kappa: f64, dtau: f64) -> Result<()> {
        let mut kicks = Vec::with_capacity(self.len());
        self.draw_kicks(&mut kicks);
        self.step_overdamped_with(field, d, kappa, dtau, &kicks)
    }

    /// [`Self::step_overdamped`] driven by caller-supplied kicks.
    pub fn step_overdamped_with(
        &mut self,
        field: &mut Complex64,
        d: f64,
        kappa: f64,
        dtau: f64,
        kicks: &[f64],
    ) -> Result<()> {
        if !(dtau > 0.0) {
            return domain(format!("dtau must be positive, got {dtau}"));
        }
        if kicks.len() != self.theta.len() {
            return domain(format!("{} kicks for {} particles", kicks.len(), self.theta.len()));
        }
        let inv = 1.0 / self.theta.len() as f64;
        let noise = (2.0 * d * dtau).sqrt();
        let (ar, ai) = (field.re, field.im);
        let (mut c, mut s) = (0.0, 0.0);
        for (t, xi) in self.theta.iter_mut().zip(kicks) {
            let (sn, cs) = t.sin_cos();
            c += cs;
            s += sn;
            let drift = -2.0 * (ar * cs - ai * sn);
            *t += drift * dtau + noise * xi;
        }
        let b = Complex64::new(c * inv, -s * inv);
        *field += (b - kappa * *field) * dtau;
        check_field(field)
    }
}

fn check_field(field: &Complex64) -> Result<()> {
    if field.re.is_finite() && field.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            what: "cavity field".into(),
            tau: f64::NAN,
        })
    }
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Parameters of the full model in `(t̄, A)` scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullModel {
    pub gamma_bar: f64,
    pub sigma: f64,
    /// Scaled cavity loss `K`.
    pub k_loss: f64,
}

impl FullModel {
    /// The full-model parameters that reduce to `(κ, D)` in the overdamped
    /// limit: `K = κ/√γ̄`, `σ² = D√γ̄`.
    pub fn from_kappa_d(kappa: f64, d: f64, gamma_bar: f64) -> Result<Self> {
        if !(gamma_bar > 0.0 && kappa > 0.0 && d >= 0.0) {
            return domain(format!(
                "need gamma_bar > 0, kappa > 0, D >= 0; got {gamma_bar}, {kappa}, {d}"
            ));
        }
        let root = gamma_bar.sqrt();
        Ok(Self {
            gamma_bar,
            sigma: (d * root).sqrt(),
            k_loss: kappa / root,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.gamma_bar.sqrt() * self.k_loss
    }

    pub fn diffusion(&self) -> f64 {
        self.sigma * self.sigma / self.gamma_bar.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSample {
    pub tau: f64,
    /// Field in `(τ, a)` scaling.
    pub field: Complex64,
    pub abs_a_sq: f64,
    pub bunching: f64,
    pub mean_p: f64,
    pub omega_inst: f64,
    /// Variance of `p̄`; NaN in the overdamped model.
    pub var_p: f64,
    pub var_theta: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EnsembleTrajectory {
    pub samples: Vec<EnsembleSample>,
    pub n_particles: usize,
    pub seed: u64,
}

pub const ENSEMBLE_CSV_HEADER: &str =
    "tau,re_a,im_a,abs_a_sq,bunching,mean_p,omega_inst,var_p,var_theta,n_particles,seed";

impl EnsembleTrajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{ENSEMBLE_CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{},{}",
                s.tau,
                s.field.re,
                s.field.im,
                s.abs_a_sq,
                s.bunching,
                s.mean_p,
                s.omega_inst,
                s.var_p,
                s.var_theta,
                self.n_particles,
                self.seed
            )?;
        }
        Ok(())
    }

    pub fn taus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tau).collect()
    }
}

fn field_frequency(b: Complex64, a: Complex64) -> f64 {
    let n = a.norm_sqr();
    if n == 0.0 {
        0.0
    } else {
        (b * a.conj()).im / n
    }
}

fn overdamped_sample(ens: &ParticleEnsemble, a: Complex64, tau: f64) -> EnsembleSample {
    let b = ens.bunching();
    EnsembleSample {
        tau,
        field: a,
        abs_a_sq: a.norm_sqr(),
        bunching: b.norm(),
        mean_p: -2.0 * (a * b.conj()).re,
        omega_inst: field_frequency(b, a),
        var_p: f64::NAN,
        var_theta: ens.theta_variance(),
    }
}

/// Runs the overdamped model for `t_end`, sampling every `sample_every` steps.
/// Returns the trajectory and the final field.
pub fn simulate_overdamped(
    ens: &mut ParticleEnsemble,
    a0: Complex64,
    kappa: f64,
    d: f64,
    dtau: f64,
    t_end: f64,
    sample_every: usize,
) -> Result<(EnsembleTrajectory, Complex64)> {
    if sample_every == 0 || !(t_end > 0.0) {
        return domain("need sample_every >= 1 and t_end > 0");
    }
    let steps = (t_end / dtau).round().max(1.0) as usize;
    let mut a = a0;
    let mut traj = EnsembleTrajectory {
        samples: vec![overdamped_sample(ens, a, 0.0)],
        n_particles: ens.len(),
        seed: ens.seed(),
    };
    for step in 1..=steps {
        ens.step_overdamped(&mut a, d, kappa, dtau)?;
        if step % sample_every == 0 || step == steps {
            traj.samples.push(overdamped_sample(ens, a, step as f64 * dtau));
        }
    }
    Ok((traj, a))
}

fn full_sample(ens: &ParticleEnsemble, model: &FullModel, big_a: Complex64, tau: f64) -> EnsembleSample {
    let root = model.gamma_bar.sqrt();
    let a = big_a / root;
    let b = ens.bunching();
    EnsembleSample {
        tau,
        field: a,
        abs_a_sq: a.norm_sqr(),
        bunching: b.norm(),
        mean_p: root * ens.mean_momentum().unwrap_or(f64::NAN),
        omega_inst: field_frequency(b, a),
        var_p: ens.momentum_variance().unwrap_or(f64::NAN),
        var_theta: ens.theta_variance(),
    }
}

/// Runs the full model. Time and field are reported in `(τ, a)` scaling:
/// `τ = t̄/√γ̄`, `a = A/√γ̄`. `a0` and `tau_end` are given in that scaling too.
pub fn simulate_full(
    ens: &mut ParticleEnsemble,
    a0: Complex64,
    model: &FullModel,
    dt_bar: f64,
    tau_end: f64,
    sample_every: usize,
) -> Result<(EnsembleTrajectory, Complex64)> {
    if sample_every == 0 || !(tau_end > 0.0) {
        return domain("need sample_every >= 1 and tau_end > 0");
    }
    let root = model.gamma_bar.sqrt();
    let steps = (tau_end * root / dt_bar).round().max(1.0) as usize;
    let mut big_a = a0 * root;
    let mut traj = EnsembleTrajectory {
        samples: vec![full_sample(ens, model, big_a, 0.0)],
        n_particles: ens.len(),
        seed: ens.seed(),
    };
    for step in 1..=steps {
        ens.step_full(&mut big_a, model, dt_bar)?;
        if step % sample_every == 0 || step == steps {
            traj.samples
                .push(full_sample(ens, model, big_a, step as f64 * dt_bar / root));
        }
    }
    Ok((traj, big_a / root))
}

/// Output of [`simulate_paired`], both trajectories in `(τ, a)` scaling on
/// the same sample times.
#[derive(Debug, Clone)]
pub struct PairedRun {
    pub overdamped: EnsembleTrajectory,
    pub full: EnsembleTrajectory,
}

/// Runs the overdamped model and the full model at `gamma_bar` side by side
/// from the same phases and field, driven by the same Brownian paths.
///
/// Each overdamped step `dτ` is split into `substeps` full-model steps. The
/// full model's kicks within the step are `ξ/√m + (z_k − z̄)`, where `ξ` is
/// the overdamped kick and `z_k` are fresh normals: they are i.i.d. standard
/// normal, so the full model keeps its own law, but they sum to `√m ξ`, so
/// both models see the same long-time phase diffusion. Differences between
/// the two trajectories then reflect the models rather than sampling noise.
#[allow(clippy::too_many_arguments)]
pub fn simulate_paired(
    theta0: &[f64],
    a0: Complex64,
    kappa: f64,
    d: f64,
    gamma_bar: f64,
    dtau: f64,
    substeps: usize,
    tau_end: f64,
    sample_every: usize,
    seed: u64,
) -> Result<PairedRun> {
    if substeps == 0 || sample_every == 0 || !(tau_end > 0.0) || !(dtau > 0.0) {
        return domain("need substeps >= 1, sample_every >= 1, dtau > 0 and tau_end > 0");
    }
    let model = FullModel::from_kappa_d(kappa, d, gamma_bar)?;
    let root = gamma_bar.sqrt();
    let dt_bar = dtau * root / substeps as f64;
    let mut od = ParticleEnsemble::from_parts(theta0.to_vec(), None, seed)?;
    // A distinct key keeps the bridge normals independent of the shared kicks.
    let mut full = ParticleEnsemble::from_parts(theta0.to_vec(), None, seed ^ 0x9E37_79B9_7F4A_7C15)?;
    let mut p0 = Vec::with_capacity(theta0.len());
    full.draw_kicks(&mut p0);
    full.p_bar = Some(p0.iter().map(|x| model.sigma * x).collect());

    let n = theta0.len();
    let m = substeps;
    let inv_sqrt_m = 1.0 / (m as f64).sqrt();
    let mut a = a0;
    let mut big_a = a0 * root;
    let mut out = PairedRun {
        overdamped: EnsembleTrajectory {
            samples: vec![overdamped_sample(&od, a, 0.0)],
            n_particles: n,
            seed,
        },
        full: EnsembleTrajectory {
            samples: vec![full_sample(&full, &model, big_a, 0.0)],
            n_particles: n,
            seed,
        },
    };
    let mut shared = Vec::with_capacity(n);
    let mut bridge = vec![0.0; n * m];
    let mut z = Vec::with_capacity(n);
    let steps = (tau_end / dtau).round().max(1.0) as usize;
    for step in 1..=steps {
        od.draw_kicks(&mut shared);
        for k in 0..m {
            full.draw_kicks(&mut z);
            bridge[k * n..(k + 1) * n].copy_from_slice(&z);
        }
        for j in 0..n {
            let mean = (0..m).map(|k| bridge[k * n + j]).sum::<f64>() / m as f64;
            let offset = shared[j] * inv_sqrt_m - mean;
            for k in 0..m {
                bridge[k * n + j] += offset;
            }
        }
        for k in 0..m {
            full.step_full_with(&mut big_a, &model, dt_bar, &bridge[k * n..(k + 1) * n])?;
        }
        od.step_overdamped_with(&mut a, d, kappa, dtau, &shared)?;
        if step % sample_every == 0 || step == steps {
            let tau = step as f64 * dtau;
            out.overdamped.samples.push(overdamped_sample(&od, a, tau));
            out.full.samples.push(full_sample(&full, &model, big_a, tau));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn thermal_initial_condition() {
        let ens = ParticleEnsemble::new(10_000, 1.0, 7).unwrap();
        let var = ens.momentum_variance().unwrap();
        assert!((var - 1.0).abs() < 0.05, "{var}");
        let b = ens.bunching().norm();
        assert!(b < 4.0 / 100.0, "{b}");
        assert!(ens.theta.iter().all(|t| (0.0..2.0 * PI).contains(t)));

        let cold = ParticleEnsemble::new(100, 0.0, 7).unwrap();
        assert!(cold.p_bar.unwrap().iter().all(|p| *p == 0.0));
        assert!(matches!(ParticleEnsemble::new(0, 1.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn bunching_of_special_configurations() {
        let ens = ParticleEnsemble::from_parts(vec![0.0; 16], None, 1).unwrap();
        assert_eq!(ens.bunching(), Complex64::new(1.0, 0.0));
        let n = 37;
        let even: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let ens = ParticleEnsemble::from_parts(even, None, 1).unwrap();
        assert!(ens.bunching().norm() < 1e-14);
    }

    #[test]
    fn same_seed_same_path() {
        let run = || {
            let mut ens = ParticleEnsemble::overdamped(500, 99).unwrap();
            let (traj, a) = simulate_overdamped(&mut ens, Complex64::new(1e-3, 0.0), 0.1, 1.0, 0.01, 2.0, 10).unwrap();
            (traj.samples, a, ens.theta)
        };
        let (s1, a1, t1) = run();
        let (s2, a2, t2) = run();
        assert_eq!(a1, a2);
        assert_eq!(t1, t2);
        assert_eq!(s1.len(), s2.len());
        for (x, y) in s1.iter().zip(&s2) {
            assert_eq!(x.bunching.to_bits(), y.bunching.to_bits());
        }
    }

    #[test]
    fn free_streaming() {
        let theta = vec![0.1, 1.0, 2.0, -0.5];
        let p = vec![0.3, -0.2, 1.5, 0.0];
        let mut ens = ParticleEnsemble::from_parts(theta.clone(), Some(p.clone()), 3).unwrap();
        let model = FullModel {
            gamma_bar: 0.0,
            sigma: 0.0,
            k_loss: 1.0,
        };
        let mut a = Complex64::new(0.0, 0.0);
        let dt = 0.01;
        for _ in 0..100 {
            ens.step_full(&mut a, &model, dt).unwrap();
            // keep the field switched off
            a = Complex64::new(0.0, 0.0);
        }
        for j in 0..4 {
            assert!((ens.theta[j] - (theta[j] + p[j] * 1.0)).abs() < 1e-12);
            assert_eq!(ens.p_bar.as_ref().unwrap()[j], p[j]);
        }
    }

    #[test]
    fn gradient_flow_without_noise() {
        // a real and constant: θ' = −2a cos θ has its stable point at θ = −π/2.
        let theta: Vec<f64> = (0..50).map(|j| 0.2 + 0.05 * j as f64).collect();
        let mut ens = ParticleEnsemble::from_parts(theta, None, 5).unwrap();
        for _ in 0..5000 {
            let mut a = Complex64::new(0.5, 0.0);
            ens.step_overdamped(&mut a, 0.0, 0.1, 0.01).unwrap();
        }
        for t in &ens.theta {
            assert!((t.sin() + 1.0).abs() < 1e-6, "{t}");
        }
    }

    #[test]
    fn full_model_mapping() {
        let m = FullModel::from_kappa_d(0.075, 1.49, 30.0).unwrap();
        assert_relative_eq!(m.kappa(), 0.075, max_relative = 1e-14);
        assert_relative_eq!(m.diffusion(), 1.49, max_relative = 1e-14);
    }

    #[test]
    fn overdamped_step_needs_positive_dt() {
        let mut ens = ParticleEnsemble::overdamped(4, 1).unwrap();
        let mut a = Complex64::new(0.0, 0.0);
        assert!(ens.step_overdamped(&mut a, 1.0, 0.1, 0.0).is_err());
        assert!(ens
            .step_full(&mut a, &FullModel::from_kappa_d(0.1, 1.0, 10.0).unwrap(), 0.01)
            .is_err());
    }

    #[test]
    fn csv_has_extra_columns() {
        let mut ens = ParticleEnsemble::overdamped(10, 2).unwrap();
        let (traj, _) = simulate_overdamped(&mut ens, Complex64::new(1e-3, 0.0), 0.1, 1.0, 0.01, 0.05, 1).unwrap();
        let mut out = Vec::new();
        traj.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), ENSEMBLE_CSV_HEADER);
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row.len(), 11);
        assert_eq!(row[9], "10");
        assert_eq!(row[10], "2");
    }
}
