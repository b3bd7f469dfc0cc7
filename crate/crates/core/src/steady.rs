//! Rotating steady states of the mode hierarchy.
//!
//! Above threshold the system settles into `a = α e^{iωτ}`,
//! `B_n = β_n e^{inωτ}` with
//!
//! ```text
//! (ω − inD) β_n = α β_{n−1} + α* β_{n+1},    α = β₁/(κ + iω),   β₀ = 1.
//! ```
//!
//! Fixing the gauge `β₁ = b ≥ 0`, the ratio `β₁/β₀` comes from a continued
//! fraction and the pair `(b, ω)` from the self-consistency `r₁ = b`.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::params::{pump_ratio_to_params, PhysicalParams};
use crate::stability::{dispersion_roots, threshold_d, threshold_margin};

const CF_START_DEPTH: usize = 64;
const CF_MAX_DEPTH: usize = 4096;
/// Relative convergence tolerance of the continued fraction.
pub const CF_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 200;
/// Newton stops once `|G|` falls below this.
pub const NEWTON_TOL: f64 = 1e-13;
const FD_REL_STEP: f64 = 1e-6;
/// Bunching below this is reported as the trivial branch.
pub const TRIVIAL_BUNCHING: f64 = 1e-10;
const GAUSSIAN_MAX_ITER: usize = 10_000;
const GAUSSIAN_TOL: f64 = 1e-12;

/// Steady state with perfect bunching and no diffusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfectBunching {
    pub mean_p: f64,
    pub a_sq: f64,
    pub omega: f64,
}

/// Unique nonnegative root of `x(κ² + x²) = rhs` for `rhs ≥ 0`.
fn rotation_cubic_root(kappa: f64, rhs: f64) -> f64 {
    if rhs <= 0.0 {
        return 0.0;
    }
    let f = |x: f64| x * (kappa * kappa + x * x) - rhs;
    let mut lo = 0.0;
    let mut hi = rhs.cbrt().min(rhs / (kappa * kappa)).max(f64::MIN_POSITIVE);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() < f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Real root of `⟨p⟩(κ² + ⟨p⟩²) = −2κ`, with `|a|² = 1/(κ² + ⟨p⟩²)` and
/// `ω = −⟨p⟩`.
pub fn perfect_bunching(kappa: f64) -> Result<PerfectBunching> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return domain(format!("kappa must be finite and positive, got {kappa}"));
    }
    let omega = rotation_cubic_root(kappa, 2.0 * kappa);
    Ok(PerfectBunching {
        mean_p: -omega,
        a_sq: 1.0 / (kappa * kappa + omega * omega),
        omega,
    })
}

fn singular(n: usize, den: Complex64) -> Error {
    Error::Singular(format!("continued-fraction denominator {den} at level {n}"))
}

/// `r₁ = β₁/β₀` by downward recursion `r_n = α / ((ω − inD) − α* r_{n+1})`
/// from `r_{depth+1} = 0`.
pub fn continued_fraction_ratio(alpha: Complex64, omega: f64, d: f64, depth: usize) -> Result<Complex64> {
    if depth < 2 {
        return domain(format!("continued-fraction depth must be at least 2, got {depth}"));
    }
    if !(d > 0.0) {
        return domain(format!("D must be positive, got {d}"));
    }
    let conj = alpha.conj();
    let mut r = Complex64::new(0.0, 0.0);
    for n in (1..=depth).rev() {
        let den = Complex64::new(omega, -(n as f64) * d) - conj * r;
        if !(den.norm() > f64::MIN_POSITIVE) || !den.re.is_finite() || !den.im.is_finite() {
            return Err(singular(n, den));
        }
        r = alpha / den;
    }
    Ok(r)
}

/// Denominators `q_n = (ω − inD) − |α|²/q_{n+1}` for `n = 1..=depth`
/// (index 0 unused). `r_n = α/q_n`, so the tail depends on `α` only through
/// `|α|²`.
fn denominators(alpha_sq: f64, omega: f64, d: f64, depth: usize) -> Result<Vec<Complex64>> {
    let mut q = vec![Complex64::new(0.0, 0.0); depth + 1];
    let mut next: Option<Complex64> = None;
    for n in (1..=depth).rev() {
        let base = Complex64::new(omega, -(n as f64) * d);
        let den = match next {
            Some(qn) => base - alpha_sq / qn,
            None => base,
        };
        if !(den.norm() > f64::MIN_POSITIVE) || !den.re.is_finite() || !den.im.is_finite() {
            return Err(singular(n, den));
        }
        q[n] = den;
        next = Some(den);
    }
    Ok(q)
}

/// Depth-converged denominators: doubles from 64 until `q₁` moves by less
/// than `1e-12` (relative), up to depth 4096.
fn converged_denominators(alpha_sq: f64, omega: f64, d: f64) -> Result<Vec<Complex64>> {
    let mut depth = CF_START_DEPTH;
    let mut prev = denominators(alpha_sq, omega, d, depth)?;
    while depth < CF_MAX_DEPTH {
        depth *= 2;
        let cur = denominators(alpha_sq, omega, d, depth)?;
        if (cur[1] - prev[1]).norm() <= CF_TOL * cur[1].norm().max(1e-300) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Convergence {
        what: "continued fraction depth doubling",
        iterations: CF_MAX_DEPTH,
        residual: f64::NAN,
    })
}

/// Depth-converged `r₁`.
pub fn converged_ratio(alpha: Complex64, omega: f64, d: f64) -> Result<Complex64> {
    if !(d > 0.0) {
        return domain(format!("D must be positive, got {d}"));
    }
    let q = converged_denominators(alpha.norm_sqr(), omega, d)?;
    Ok(alpha / q[1])
}

/// Self-consistency in `(s, ω)` with `s = b²`:
/// `G = r₁/b − 1 = 1/((κ + iω) q₁) − 1`. Well defined at `s = 0`, where it
/// reduces to the marginal-stability condition.
fn consistency(kappa: f64, d: f64, s: f64, omega: f64) -> Result<Complex64> {
    let alpha_sq = s / (kappa * kappa + omega * omega);
    let q = converged_denominators(alpha_sq, omega, d)?;
    Ok(1.0 / (Complex64::new(kappa, omega) * q[1]) - 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateSolution {
    pub kappa: f64,
    pub diffusion: f64,
    /// `b = |β₁|`, with `β₁` real in the chosen gauge.
    pub bunching: f64,
    pub omega: f64,
    pub alpha: Complex64,
    /// `β_0..`, truncated once the harmonics drop below `1e-18`.
    pub beta: Vec<Complex64>,
    /// `−2κb²/(κ² + ω²)`.
    pub mean_p: f64,
    pub converged: bool,
    /// `|G|` at the returned point.
    pub residual: f64,
    pub below_threshold: bool,
    pub iterations: usize,
}

impl SteadyStateSolution {
    pub fn a_sq(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    fn trivial(kappa: f64, d: f64) -> Result<Self> {
        // The uniform state carries no rotation of its own; report the
        // oscillation frequency of the least damped linear mode instead.
        let omega = dispersion_roots(kappa, d)?.lambda_plus.im;
        Ok(Self {
            kappa,
            diffusion: d,
            bunching: 0.0,
            omega,
            alpha: Complex64::new(0.0, 0.0),
            beta: vec![Complex64::new(1.0, 0.0)],
            mean_p: 0.0,
            converged: true,
            residual: 0.0,
            below_threshold: true,
            iterations: 0,
        })
    }

    /// `max_n |(ω − inD)β_n − αβ_{n−1} − α*β_{n+1}|` over the stored harmonics.
    pub fn recurrence_residual(&self) -> f64 {
        let zero = Complex64::new(0.0, 0.0);
        let len = self.beta.len();
        (1..len)
            .map(|n| {
                let upper = if n + 1 < len { self.beta[n + 1] } else { zero };
                let lhs = Complex64::new(self.omega, -(n as f64) * self.diffusion) * self.beta[n];
                (lhs - self.alpha * self.beta[n - 1] - self.alpha.conj() * upper).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `|α − β₁/(κ + iω)|`.
    pub fn field_residual(&self) -> f64 {
        let b1 = self.beta.get(1).copied().unwrap_or_default();
        (self.alpha - b1 / Complex64::new(self.kappa, self.omega)).norm()
    }
}

fn build_solution(
    kappa: f64,
    d: f64,
    s: f64,
    omega: f64,
    residual: f64,
    iterations: usize,
) -> Result<SteadyStateSolution> {
    let b = s.max(0.0).sqrt();
    let alpha = Complex64::new(b, 0.0) / Complex64::new(kappa, omega);
    let q = converged_denominators(alpha.norm_sqr(), omega, d)?;
    let mut beta = vec![Complex64::new(1.0, 0.0), Complex64::new(b, 0.0)];
    for qn in q.iter().skip(2) {
        let next = *beta.last().unwrap() * alpha / qn;
        if next.norm() < 1e-18 {
            break;
        }
        beta.push(next);
    }
    Ok(SteadyStateSolution {
        kappa,
        diffusion: d,
        bunching: b,
        omega,
        alpha,
        beta,
        mean_p: -2.0 * kappa * s / (kappa * kappa + omega * omega),
        converged: true,
        residual,
        below_threshold: false,
        iterations,
    })
}

fn residual_vec(kappa: f64, d: f64, x: [f64; 2]) -> Result<[f64; 2]> {
    let g = consistency(kappa, d, x[0], x[1])?;
    Ok([g.re, g.im])
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

/// Damped Newton on `(s, ω)` with a central-difference Jacobian.
fn newton(kappa: f64, d: f64, guess: [f64; 2]) -> Result<([f64; 2], f64, usize)> {
    let mut x = guess;
    let mut f = residual_vec(kappa, d, x)?;
    let mut fn_ = norm2(f);
    for it in 0..NEWTON_MAX_ITER {
        if fn_ < NEWTON_TOL {
            return Ok((x, fn_, it));
        }
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = FD_REL_STEP * x[j].abs().max(1e-3);
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fp = residual_vec(kappa, d, xp)?;
            let fm = residual_vec(kappa, d, xm)?;
            for i in 0..2 {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(Error::Singular(format!(
                "Newton Jacobian determinant {det} at s = {}, omega = {}",
                x[0], x[1]
            )));
        }
        let dx = [
            -(jac[1][1] * f[0] - jac[0][1] * f[1]) / det,
            -(-jac[1][0] * f[0] + jac[0][0] * f[1]) / det,
        ];
        let mut step = 1.0;
        let mut accepted = false;
        while step > 1e-10 {
            let trial = [x[0] + step * dx[0], x[1] + step * dx[1]];
            if let Ok(ft) = residual_vec(kappa, d, trial) {
                let nt = norm2(ft);
                if nt.is_finite() && nt < fn_ {
                    x = trial;
                    f = ft;
                    fn_ = nt;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // Stuck at round-off level: accept if already tiny.
            if fn_ < 1e3 * NEWTON_TOL {
                return Ok((x, fn_, it));
            }
            return Err(Error::Convergence {
                what: "steady-state Newton line search",
                iterations: it,
                residual: fn_,
            });
        }
    }
    if fn_ < 1e3 * NEWTON_TOL {
        return Ok((x, fn_, NEWTON_MAX_ITER));
    }
    Err(Error::Convergence {
        what: "steady-state Newton",
        iterations: NEWTON_MAX_ITER,
        residual: fn_,
    })
}

fn check_kappa_d(kappa: f64, d: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return domain(format!("kappa must be finite and positive, got {kappa}"));
    }
    if !(d > 0.0 && d.is_finite()) {
        return domain(format!("D must be finite and positive, got {d}"));
    }
    Ok(())
}

/// Newton from an explicit `(b, ω)` starting point.
pub fn solve_steady_from(kappa: f64, d: f64, b_guess: f64, omega_guess: f64) -> Result<SteadyStateSolution> {
    check_kappa_d(kappa, d)?;
    if threshold_margin(kappa, d) >= 1.0 {
        return SteadyStateSolution::trivial(kappa, d);
    }
    let (x, residual, iterations) = newton(kappa, d, [b_guess * b_guess, omega_guess])?;
    if x[0] < TRIVIAL_BUNCHING * TRIVIAL_BUNCHING {
        return SteadyStateSolution::trivial(kappa, d);
    }
    build_solution(kappa, d, x[0], x[1], residual, iterations)
}

fn default_guess(kappa: f64, d: f64) -> Result<(f64, f64)> {
    let pb = perfect_bunching(kappa)?;
    let d_th = threshold_d(kappa)?;
    if d < 0.5 * d_th {
        return Ok((1.0, pb.omega));
    }
    // b² falls roughly linearly to zero at threshold, where ω meets the
    // linear oscillation frequency.
    let w_th = dispersion_roots(kappa, d_th)?.lambda_plus.im;
    let s = (1.0 - d / d_th).clamp(1e-6, 1.0);
    Ok((s.sqrt(), w_th + (pb.omega - w_th) * s))
}

/// Exact rotating steady state at `(κ, D)`. Below threshold the trivial
/// branch `b = 0` is returned with `below_threshold = true`.
pub fn solve_steady(kappa: f64, d: f64) -> Result<SteadyStateSolution> {
    check_kappa_d(kappa, d)?;
    if threshold_margin(kappa, d) >= 1.0 {
        return SteadyStateSolution::trivial(kappa, d);
    }
    let (b0, w0) = default_guess(kappa, d)?;
    match solve_steady_from(kappa, d, b0, w0) {
        Ok(sol) => Ok(sol),
        Err(first) => {
            // Continue in D from the well-bunched side.
            let d_th = threshold_d(kappa)?;
            let start = 0.25 * d_th;
            if d <= start {
                return Err(first);
            }
            let pb = perfect_bunching(kappa)?;
            let mut sol = solve_steady_from(kappa, start, 1.0, pb.omega)?;
            let steps = 32;
            for i in 1..=steps {
                let di = start + (d - start) * i as f64 / steps as f64;
                sol = solve_steady_from(kappa, di, sol.bunching.max(1e-4), sol.omega)?;
            }
            Ok(sol)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSolution {
    pub bunching: f64,
    pub omega: f64,
    pub iterations: usize,
}

/// Steady state under a Gaussian density ansatz:
/// `ω(κ² + ω²) = 2κb²` and `b = exp(−D√κ / (2√(2ω − κω²)))`, iterated on `b`
/// from perfect bunching.
pub fn gaussian_approx(kappa: f64, d: f64) -> Result<GaussianSolution> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return domain(format!("kappa must be finite and positive, got {kappa}"));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return domain(format!("D must be finite and nonnegative, got {d}"));
    }
    let mut b = 1.0;
    let mut omega = perfect_bunching(kappa)?.omega;
    for it in 1..=GAUSSIAN_MAX_ITER {
        let width = 2.0 * omega - kappa * omega * omega;
        if !(width > 0.0) {
            return Err(Error::DomainExit(format!(
                "2ω − κω² = {width:e} ≤ 0 at ω = {omega}, b = {b}"
            )));
        }
        let b_new = (-d * kappa.sqrt() / (2.0 * width.sqrt())).exp();
        let omega_new = rotation_cubic_root(kappa, 2.0 * kappa * b_new * b_new);
        let change = (b_new - b).abs().max((omega_new - omega).abs());
        b = b_new;
        omega = omega_new;
        if change < GAUSSIAN_TOL {
            return Ok(GaussianSolution {
                bunching: b,
                omega,
                iterations: it,
            });
        }
    }
    Err(Error::Convergence {
        what: "Gaussian-ansatz fixed point",
        iterations: GAUSSIAN_MAX_ITER,
        residual: f64::NAN,
    })
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub diffusion: f64,
    pub exact: Result<SteadyStateSolution>,
    pub gaussian: Result<GaussianSolution>,
    /// A different converged `(b, ω)` found from the perfect-bunching guess.
    pub second_root: Option<(f64, f64)>,
}

/// Exact and Gaussian steady states along an ascending `D` grid, continuing
/// each exact solve from the previous point.
pub fn sweep_d(kappa: f64, d_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return domain(format!("kappa must be finite and positive, got {kappa}"));
    }
    if d_grid.is_empty() || d_grid.iter().any(|d| !(*d > 0.0)) || d_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("D grid must be non-empty, positive and strictly ascending");
    }
    let d_th = threshold_d(kappa)?;
    let pb = perfect_bunching(kappa)?;
    let mut prev: Option<(f64, f64)> = None;
    let mut out = Vec::with_capacity(d_grid.len());
    for &d in d_grid {
        let exact = match prev {
            Some((b, w)) => solve_steady_from(kappa, d, b, w).or_else(|_| solve_steady(kappa, d)),
            None => solve_steady(kappa, d),
        };
        let mut second_root = None;
        if let Ok(sol) = &exact {
            if prev.is_some() && d < 0.5 * d_th && !sol.below_threshold {
                if let Ok(alt) = solve_steady_from(kappa, d, 1.0, pb.omega) {
                    let differs = (alt.bunching - sol.bunching).abs() > 1e-6 || (alt.omega - sol.omega).abs() > 1e-6;
                    if differs && !alt.below_threshold {
                        second_root = Some((alt.bunching, alt.omega));
                    }
                }
            }
            prev = if sol.below_threshold {
                None
            } else {
                Some((sol.bunching, sol.omega))
            };
        }
        out.push(SweepPoint {
            diffusion: d,
            exact,
            gaussian: gaussian_approx(kappa, d),
            second_root,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampPoint {
    pub ratio: f64,
    pub kappa: f64,
    pub diffusion: f64,
    pub bunching: f64,
    pub omega_over_kappa: f64,
    pub a_sq: f64,
    pub below_threshold: bool,
}

/// Steady response as the pump is scanned through threshold. Below
/// `P₀/P_T = 1` the field and bunching vanish and `ω/κ` is the linear
/// oscillation frequency.
pub fn ramp_scan(phys: &PhysicalParams, ratios: &[f64]) -> Result<Vec<RampPoint>> {
    if ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return domain("pump ratios must be finite and positive");
    }
    ratios
        .iter()
        .map(|&ratio| {
            let s = pump_ratio_to_params(phys, ratio)?;
            let sol = solve_steady(s.kappa, s.diffusion)?;
            Ok(RampPoint {
                ratio,
                kappa: s.kappa,
                diffusion: s.diffusion,
                bunching: sol.bunching,
                omega_over_kappa: sol.omega / s.kappa,
                a_sq: sol.a_sq(),
                below_threshold: sol.below_threshold,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Real root of `p³ + κ²p + 2κ = 0` from Cardano's formula.
    fn cardano_root(kappa: f64) -> f64 {
        let (p, q) = (kappa * kappa, 2.0 * kappa);
        let disc = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        // Take the cube root without cancellation; the partner is −p/(3u).
        let u = (-q / 2.0 - disc).cbrt();
        u - p / (3.0 * u)
    }

    #[test]
    fn perfect_bunching_matches_cardano() {
        for kappa in [1e-3, 0.01, 0.1, 1.0, 10.0, 100.0] {
            let pb = perfect_bunching(kappa).unwrap();
            assert_relative_eq!(pb.mean_p, cardano_root(kappa), max_relative = 1e-9);
            assert_relative_eq!(pb.omega, -pb.mean_p);
        }
    }

    #[test]
    fn perfect_bunching_limits() {
        let pb = perfect_bunching(1e-3).unwrap();
        let g = (2e-3f64).cbrt();
        assert!((pb.mean_p.abs() / g - 1.0).abs() < 0.01);
        assert!((pb.a_sq / g.powi(-2) - 1.0).abs() < 0.01);

        let pb = perfect_bunching(10.0).unwrap();
        assert!((pb.mean_p + 0.1999).abs() < 1e-4, "{}", pb.mean_p);
        assert!((pb.a_sq * 100.0 - 1.0).abs() < 0.005);

        // p³ + 0.01p + 0.2 = 0 has its real root at −0.57910.
        let pb = perfect_bunching(0.1).unwrap();
        assert!((pb.mean_p + 0.5791).abs() < 1e-4, "{}", pb.mean_p);
        assert!((pb.a_sq - 2.8955).abs() < 1e-3, "{}", pb.a_sq);
    }

    #[test]
    fn continued_fraction_edge_cases() {
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(continued_fraction_ratio(zero, 0.5, 1.0, 10).unwrap(), zero);
        let alpha = Complex64::new(0.3, -0.2);
        let r = continued_fraction_ratio(alpha, 0.4, 1e8, 10).unwrap();
        let leading = alpha / Complex64::new(0.4, -1e8);
        assert!((r - leading).norm() < 1e-12 * leading.norm());
        assert!(r.norm() < 1e-8);
        assert!(matches!(
            continued_fraction_ratio(alpha, 0.4, 1.0, 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            continued_fraction_ratio(alpha, 0.4, 0.0, 8),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn continued_fraction_singularity() {
        // For D > 0 every denominator has Im q_n < −nD, so only non-finite
        // input can break the recursion.
        let alpha = Complex64::new(f64::INFINITY, 0.0);
        let err = continued_fraction_ratio(alpha, 0.3, 0.5, 8);
        assert!(matches!(err, Err(Error::Singular(_))), "{err:?}");
    }

    #[test]
    fn continued_fraction_converges_with_depth() {
        let sol = solve_steady(0.1, 1.0).unwrap();
        for depth in [40, 64, 128] {
            let a = continued_fraction_ratio(sol.alpha, sol.omega, 1.0, depth).unwrap();
            let b = continued_fraction_ratio(sol.alpha, sol.omega, 1.0, 2 * depth).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn steady_solution_invariants() {
        for (k, d) in [
            (0.1, 0.3),
            (0.1, 1.0),
            (0.1, 2.0),
            (0.075, 1.49),
            (1.0, 0.2),
            (0.5, 0.4),
        ] {
            let sol = solve_steady(k, d).unwrap();
            assert!(!sol.below_threshold && sol.converged);
            assert!(sol.bunching > 0.0 && sol.bunching <= 1.0);
            assert!(
                sol.recurrence_residual() < 1e-9,
                "{k} {d} {}",
                sol.recurrence_residual()
            );
            assert!(sol.field_residual() < 1e-12);
            let mp = -2.0 * (sol.alpha * sol.beta[1].conj()).re;
            assert!((mp - sol.mean_p).abs() < 1e-9);
            let r1 = converged_ratio(sol.alpha, sol.omega, d).unwrap();
            assert!((r1 - sol.beta[1]).norm() < 1e-9);
        }
    }

    #[test]
    fn small_diffusion_approaches_perfect_bunching() {
        let sol = solve_steady(0.1, 0.01).unwrap();
        let pb = perfect_bunching(0.1).unwrap();
        assert!(sol.bunching > 0.99, "{}", sol.bunching);
        assert!(
            (sol.omega / pb.omega - 1.0).abs() < 0.01,
            "{} vs {}",
            sol.omega,
            pb.omega
        );
        assert!((sol.omega - 0.585).abs() < 0.01);
    }

    #[test]
    fn below_threshold_is_trivial() {
        let sol = solve_steady(0.1, 2.5).unwrap();
        assert!(sol.below_threshold && sol.converged);
        assert_eq!(sol.bunching, 0.0);
        assert_eq!(sol.a_sq(), 0.0);
        assert!(matches!(solve_steady(0.1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(solve_steady(-0.1, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn near_threshold_frequency() {
        let d_th = threshold_d(0.1).unwrap();
        let sol = solve_steady(0.1, d_th * (1.0 - 1e-6)).unwrap();
        assert!(sol.bunching < 1e-2, "{}", sol.bunching);
        assert!((sol.omega / 0.1 - 4.55).abs() < 0.1, "{}", sol.omega / 0.1);
        let lin = dispersion_roots(0.1, d_th).unwrap().lambda_plus.im;
        assert!((sol.omega / lin - 1.0).abs() < 0.01);
    }

    #[test]
    fn gaussian_examples() {
        let g = gaussian_approx(0.1, 0.0).unwrap();
        let pb = perfect_bunching(0.1).unwrap();
        assert_eq!(g.bunching, 1.0);
        assert_relative_eq!(g.omega, pb.omega, max_relative = 1e-12);

        let g = gaussian_approx(0.1, 0.5).unwrap();
        assert!((g.bunching - 0.93).abs() < 0.01, "{}", g.bunching);
        assert!((g.omega - 0.55).abs() < 0.01, "{}", g.omega);
        let exact = solve_steady(0.1, 0.5).unwrap();
        assert!((g.bunching / exact.bunching - 1.0).abs() < 0.05);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        assert!(matches!(sweep_d(0.1, &[]), Err(Error::Domain(_))));
        assert!(matches!(sweep_d(0.1, &[0.5, 0.4]), Err(Error::Domain(_))));
        assert!(matches!(sweep_d(0.1, &[0.0, 0.4]), Err(Error::Domain(_))));
    }

    #[test]
    fn ramp_below_and_at_threshold() {
        let phys = PhysicalParams::rb87_ring_cavity();
        let pts = ramp_scan(&phys, &[0.5, 0.9, 1.0]).unwrap();
        for p in &pts {
            assert_eq!(p.a_sq, 0.0);
            assert_eq!(p.bunching, 0.0);
        }
        // The reconstructed laboratory mapping puts threshold at κ = 0.0974,
        // D = 2.109, where Δω/κ_c = 4.65.
        let at = pts[2];
        assert!((at.omega_over_kappa - 4.6).abs() < 0.1, "{}", at.omega_over_kappa);
    }

    #[test]
    fn ramp_far_above_threshold() {
        let phys = PhysicalParams::rb87_ring_cavity();
        let p = ramp_scan(&phys, &[1e4]).unwrap()[0];
        assert!(p.bunching > 0.99, "{}", p.bunching);
        let pb = perfect_bunching(p.kappa).unwrap();
        assert!((p.omega_over_kappa * p.kappa / pb.omega - 1.0).abs() < 0.01);
    }
}
