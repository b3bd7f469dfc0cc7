//! Fourier-harmonic hierarchy of the Fokker-Planck equation.
//!
//! The density is expanded as `P(θ) = (1/2π) Σ B_n e^{inθ}` and evolves as
//!
//! ```text
//! dB_n/dτ = in(a B_{n−1} + a* B_{n+1}) − n²D B_n
//! da/dτ   = B₁ − κa
//! ```
//!
//! with `B₀ = 1`, `B_{−n} = B_n*` and the hard closure `B_{n_max+1} = 0`.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::ops::Range;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

/// Default truncation order.
pub const DEFAULT_N_MAX: usize = 32;
/// Default requested time step; [`FpSettings::clamped`] lowers it when the
/// stiffness guard requires.
pub const DEFAULT_DT: f64 = 0.01;
/// `|B_{n_max}|` above this marks the run as under-resolved.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;
/// Seed field used for the time-domain figure.
pub const DEFAULT_SEED_FIELD: f64 = 1e-5;
/// Stiffness guard constant: `dt·n_max²·D` must stay below this.
pub const STIFFNESS_BOUND: f64 = 2.5;
/// Negative density below this flags a truncation failure.
pub const DENSITY_FLOOR: f64 = -1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct FourierState {
    /// `B_0..=B_{n_max}`.
    pub modes: Vec<Complex64>,
    pub field: Complex64,
    pub tau: f64,
}

impl FourierState {
    /// Uniform density with a seeded field.
    pub fn new(n_max: usize, a0: Complex64) -> Result<Self> {
        if n_max < 2 {
            return domain(format!("n_max must be at least 2, got {n_max}"));
        }
        let mut modes = vec![Complex64::new(0.0, 0.0); n_max + 1];
        modes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            modes,
            field: a0,
            tau: 0.0,
        })
    }

    pub fn n_max(&self) -> usize {
        self.modes.len() - 1
    }

    /// `b = |B₁|`.
    pub fn bunching(&self) -> f64 {
        self.modes[1].norm()
    }

    pub fn intensity(&self) -> f64 {
        self.field.norm_sqr()
    }

    /// `⟨p⟩ = −2 Re(a B₁*)`.
    pub fn mean_momentum(&self) -> f64 {
        -2.0 * (self.field * self.modes[1].conj()).re
    }

    /// Rate of change of `arg a`, `Im(B₁/a)`; zero when the field vanishes.
    pub fn field_frequency(&self) -> f64 {
        let n = self.field.norm_sqr();
        if n == 0.0 {
            0.0
        } else {
            (self.modes[1] * self.field.conj()).im / n
        }
    }

    pub fn tail(&self) -> f64 {
        self.modes[self.n_max()].norm()
    }

    /// Translates the density by `θ₀`: `a → a e^{−iθ₀}`, `B_n → B_n e^{−inθ₀}`.
    pub fn translated(&self, theta0: f64) -> Self {
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(n, b)| b * Complex64::from_polar(1.0, -(n as f64) * theta0))
            .collect();
        Self {
            modes,
            field: self.field * Complex64::from_polar(1.0, -theta0),
            tau: self.tau,
        }
    }

    /// Copy with a different truncation order, zero-padding or cutting the tail.
    pub fn resized(&self, n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return domain(format!("n_max must be at least 2, got {n_max}"));
        }
        let mut modes = self.modes.clone();
        modes.resize(n_max + 1, Complex64::new(0.0, 0.0));
        Ok(Self { modes, ..*self })
    }

    fn check_finite(&self) -> Result<()> {
        if !(self.field.re.is_finite() && self.field.im.is_finite()) {
            return Err(Error::NonFinite {
                what: "cavity field".into(),
                tau: self.tau,
            });
        }
        if let Some(n) = self.modes.iter().position(|b| !(b.re.is_finite() && b.im.is_finite())) {
            return Err(Error::NonFinite {
                what: format!("harmonic B_{n}"),
                tau: self.tau,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub modes: Vec<Complex64>,
    pub field: Complex64,
}

/// Writes `dB_n/dτ` into `out` and returns `da/dτ`.
fn rhs_into(modes: &[Complex64], field: Complex64, kappa: f64, d: f64, out: &mut [Complex64]) -> Complex64 {
    let n_max = modes.len() - 1;
    let conj = field.conj();
    out[0] = Complex64::new(0.0, 0.0);
    for n in 1..=n_max {
        let upper = if n < n_max {
            modes[n + 1]
        } else {
            Complex64::new(0.0, 0.0)
        };
        let nf = n as f64;
        let coupling = field * modes[n - 1] + conj * upper;
        out[n] = Complex64::new(0.0, nf) * coupling - nf * nf * d * modes[n];
    }
    modes[1] - kappa * field
}

pub fn derivative(state: &FourierState, kappa: f64, d: f64) -> Derivative {
    let mut modes = vec![Complex64::new(0.0, 0.0); state.modes.len()];
    let field = rhs_into(&state.modes, state.field, kappa, d, &mut modes);
    Derivative { modes, field }
}

/// Linearisation of `(dB₁/dτ, da/dτ)` about the uniform state, acting on
/// `(B₁, a)`: `[[−D, i], [1, −κ]]`.
pub fn linearized_matrix(kappa: f64, d: f64) -> [[Complex64; 2]; 2] {
    [
        [Complex64::new(-d, 0.0), Complex64::i()],
        [Complex64::new(1.0, 0.0), Complex64::new(-kappa, 0.0)],
    ]
}

/// Largest `dt` allowed by the stiffness guard `dt < 2.5/(n_max²·D)`.
pub fn stiffness_limit(n_max: usize, d: f64) -> f64 {
    if d <= 0.0 {
        f64::INFINITY
    } else {
        STIFFNESS_BOUND / ((n_max * n_max) as f64 * d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpSettings {
    pub dt: f64,
    pub t_end: f64,
    /// Record an observable sample every this many steps.
    pub sample_every: usize,
    pub tail_tolerance: f64,
}

impl FpSettings {
    pub fn new(dt: f64, t_end: f64, sample_every: usize) -> Self {
        Self {
            dt,
            t_end,
            sample_every,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }

    /// Same settings with `dt` lowered to 80% of the stiffness limit if needed.
    pub fn clamped(mut self, n_max: usize, d: f64) -> Self {
        self.dt = self.dt.min(0.8 * stiffness_limit(n_max, d));
        self
    }

    fn validate(&self, n_max: usize, d: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return domain(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return domain(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.sample_every == 0 {
            return domain("sample_every must be at least 1");
        }
        let limit = stiffness_limit(n_max, d);
        if self.dt >= limit {
            return domain(format!(
                "dt = {} violates the stiffness guard dt < {limit:.3e} for n_max = {n_max}, D = {d}",
                self.dt
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub tau: f64,
    pub field: Complex64,
    pub abs_a_sq: f64,
    pub bunching: f64,
    pub phase: f64,
    pub mean_p: f64,
    pub omega_inst: f64,
}

impl Sample {
    pub fn of(state: &FourierState) -> Self {
        Self {
            tau: state.tau,
            field: state.field,
            abs_a_sq: state.intensity(),
            bunching: state.bunching(),
            phase: state.field.arg(),
            mean_p: state.mean_momentum(),
            omega_inst: state.field_frequency(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "tau,re_a,im_a,abs_a_sq,bunching,mean_p,omega_inst";

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tau).collect()
    }

    fn push(&mut self, s: Sample) {
        if self.samples.last().is_none_or(|l| s.tau > l.tau) {
            self.samples.push(s);
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRAJECTORY_CSV_HEADER}")?;
        for s in &self.samples {
            writeln!(
                w,
                "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}",
                s.tau, s.field.re, s.field.im, s.abs_a_sq, s.bunching, s.mean_p, s.omega_inst
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FpRun {
    pub trajectory: Trajectory,
    pub final_state: FourierState,
    /// Largest `|B_{n_max}|` seen at any step.
    pub max_tail: f64,
    pub under_resolved: bool,
    /// Set by [`integrate_until_steady`] when the stopping test fired.
    pub steady: bool,
    pub dt: f64,
}

struct Rk4 {
    k: [Vec<Complex64>; 4],
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(len: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); len];
        Self {
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            tmp: z,
        }
    }

    fn step(&mut self, state: &mut FourierState, kappa: f64, d: f64, dt: f64) {
        let len = state.modes.len();
        let half = 0.5 * dt;
        let ka0 = rhs_into(&state.modes, state.field, kappa, d, &mut self.k[0]);

        for i in 0..len {
            self.tmp[i] = state.modes[i] + half * self.k[0][i];
        }
        let ka1 = rhs_into(&self.tmp, state.field + half * ka0, kappa, d, &mut self.k[1]);

        for i in 0..len {
            self.tmp[i] = state.modes[i] + half * self.k[1][i];
        }
        let ka2 = rhs_into(&self.tmp, state.field + half * ka1, kappa, d, &mut self.k[2]);

        for i in 0..len {
            self.tmp[i] = state.modes[i] + dt * self.k[2][i];
        }
        let ka3 = rhs_into(&self.tmp, state.field + dt * ka2, kappa, d, &mut self.k[3]);

        let sixth = dt / 6.0;
        // B_0 has zero derivative in every stage, so it is never touched.
        for i in 1..len {
            state.modes[i] += sixth * (self.k[0][i] + 2.0 * (self.k[1][i] + self.k[2][i]) + self.k[3][i]);
        }
        state.field += sixth * (ka0 + 2.0 * (ka1 + ka2) + ka3);
    }
}

#[allow(clippy::too_many_arguments)]
fn run_steps(
    state: &mut FourierState,
    kappa: f64,
    d: f64,
    dt: f64,
    steps: usize,
    sample_every: usize,
    trajectory: &mut Trajectory,
    max_tail: &mut f64,
) -> Result<()> {
    let tau0 = state.tau;
    let mut rk = Rk4::new(state.modes.len());
    for step in 1..=steps {
        rk.step(state, kappa, d, dt);
        state.tau = tau0 + step as f64 * dt;
        let tail = state.tail();
        if !tail.is_finite() || !state.field.norm_sqr().is_finite() {
            state.check_finite()?;
        }
        *max_tail = max_tail.max(tail);
        if step % sample_every == 0 || step == steps {
            state.check_finite()?;
            trajectory.push(Sample::of(state));
        }
    }
    Ok(())
}

/// Fixed-step classical Runge-Kutta integration over `settings.t_end`.
pub fn integrate(state: FourierState, kappa: f64, d: f64, settings: &FpSettings) -> Result<FpRun> {
    if !(kappa > 0.0) || !(d >= 0.0) {
        return domain(format!("need kappa > 0 and D >= 0, got kappa = {kappa}, D = {d}"));
    }
    settings.validate(state.n_max(), d)?;
    state.check_finite()?;
    let mut state = state;
    let mut trajectory = Trajectory::default();
    trajectory.push(Sample::of(&state));
    let steps = (settings.t_end / settings.dt).round().max(1.0) as usize;
    let mut max_tail = state.tail();
    run_steps(
        &mut state,
        kappa,
        d,
        settings.dt,
        steps,
        settings.sample_every,
        &mut trajectory,
        &mut max_tail,
    )?;
    Ok(FpRun {
        trajectory,
        under_resolved: state.tail() > settings.tail_tolerance,
        final_state: state,
        max_tail,
        steady: false,
        dt: settings.dt,
    })
}

/// Re-runs from `initial` with doubled `n_max` (and a step size clamped to
/// the new stiffness limit) until the final tail is below tolerance or
/// `n_max_cap` is reached.
pub fn integrate_resolved(
    initial: FourierState,
    kappa: f64,
    d: f64,
    settings: &FpSettings,
    n_max_cap: usize,
) -> Result<FpRun> {
    let mut n_max = initial.n_max();
    loop {
        let s = settings.clamped(n_max, d);
        let run = integrate(initial.resized(n_max)?, kappa, d, &s)?;
        if !run.under_resolved || 2 * n_max > n_max_cap {
            return Ok(run);
        }
        n_max *= 2;
    }
}

/// Steady-state stopping rule: relative change of `b` and `|a|` over
/// `window` time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyCriterion {
    pub rel_tol: f64,
    pub window: f64,
    pub max_tau: f64,
}

impl Default for SteadyCriterion {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            window: 10.0,
            max_tau: 5000.0,
        }
    }
}

fn rel_change(new: f64, old: f64) -> f64 {
    let scale = new.abs().max(old.abs());
    if scale == 0.0 {
        0.0
    } else {
        (new - old).abs() / scale
    }
}

/// Integrates in windows until `b` and `|a|` both change by less than
/// `criterion.rel_tol` (relative) across one window, or `max_tau` is reached.
pub fn integrate_until_steady(
    state: FourierState,
    kappa: f64,
    d: f64,
    dt: f64,
    sample_every: usize,
    criterion: &SteadyCriterion,
) -> Result<FpRun> {
    let settings = FpSettings::new(dt, criterion.window, sample_every);
    if !(criterion.window > 0.0 && criterion.max_tau > 0.0) {
        return domain("steady criterion needs positive window and max_tau");
    }
    if !(kappa > 0.0) || !(d >= 0.0) {
        return domain(format!("need kappa > 0 and D >= 0, got kappa = {kappa}, D = {d}"));
    }
    settings.validate(state.n_max(), d)?;
    state.check_finite()?;
    let mut state = state;
    let mut trajectory = Trajectory::default();
    trajectory.push(Sample::of(&state));
    let steps = (criterion.window / dt).round().max(1.0) as usize;
    let mut max_tail = state.tail();
    let mut steady = false;
    let start = state.tau;
    while state.tau - start < criterion.max_tau {
        let (b0, a0) = (state.bunching(), state.field.norm());
        run_steps(
            &mut state,
            kappa,
            d,
            dt,
            steps,
            sample_every,
            &mut trajectory,
            &mut max_tail,
        )?;
        let (b1, a1) = (state.bunching(), state.field.norm());
        if rel_change(b1, b0) < criterion.rel_tol && rel_change(a1, a0) < criterion.rel_tol {
            steady = true;
            break;
        }
    }
    Ok(FpRun {
        trajectory,
        under_resolved: state.tail() > settings.tail_tolerance,
        final_state: state,
        max_tail,
        steady,
        dt,
    })
}

/// Least-squares slope of the unwrapped field phase over `window`.
pub fn instantaneous_frequency(traj: &Trajectory, window: Range<usize>, min_field: f64) -> Result<f64> {
    if window.end > traj.len() || window.len() < 2 {
        return domain(format!(
            "window {window:?} must hold at least two samples of a {}-sample trajectory",
            traj.len()
        ));
    }
    let samples = &traj.samples[window.clone()];
    for (i, s) in samples.iter().enumerate() {
        let magnitude = s.field.norm();
        if !(magnitude >= min_field) {
            return Err(Error::UndefinedPhase {
                index: window.start + i,
                magnitude,
                threshold: min_field,
            });
        }
    }
    let mut unwrapped = Vec::with_capacity(samples.len());
    let mut offset = 0.0;
    let mut prev = samples[0].phase;
    for s in samples {
        let mut jump = s.phase - prev;
        while jump > PI {
            jump -= 2.0 * PI;
            offset -= 2.0 * PI;
        }
        while jump < -PI {
            jump += 2.0 * PI;
            offset += 2.0 * PI;
        }
        unwrapped.push(s.phase + offset);
        prev = s.phase;
    }
    let n = samples.len() as f64;
    let mt = samples.iter().map(|s| s.tau).sum::<f64>() / n;
    let mp = unwrapped.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (s, p) in samples.iter().zip(&unwrapped) {
        sxy += (s.tau - mt) * (p - mp);
        sxx += (s.tau - mt) * (s.tau - mt);
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub theta: Vec<f64>,
    pub density: Vec<f64>,
    pub min_value: f64,
    /// A value dropped below [`DENSITY_FLOOR`].
    pub truncation_failure: bool,
}

impl DensityProfile {
    /// Trapezoid integral assuming `theta` is a uniform periodic grid on
    /// `[0, 2π)`.
    pub fn periodic_integral(&self) -> f64 {
        2.0 * PI / self.density.len() as f64 * self.density.iter().sum::<f64>()
    }
}

/// `n` uniformly spaced angles on `[0, 2π)`.
pub fn periodic_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// `P(θ) = (1/2π)(1 + 2 Σ_{n≥1} Re(B_n e^{inθ}))`.
pub fn reconstruct_density(state: &FourierState, theta: &[f64]) -> DensityProfile {
    let density: Vec<f64> = theta
        .iter()
        .map(|&t| {
            let sum: f64 = state
                .modes
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, b)| (b * Complex64::from_polar(1.0, n as f64 * t)).re)
                .sum();
            (1.0 + 2.0 * sum) / (2.0 * PI)
        })
        .collect();
    let min_value = density.iter().cloned().fold(f64::INFINITY, f64::min);
    DensityProfile {
        theta: theta.to_vec(),
        density,
        min_value,
        truncation_failure: min_value < DENSITY_FLOOR,
    }
}
