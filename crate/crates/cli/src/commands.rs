use anyhow::Result;
use num_complex::Complex64;

use carl_core::ensemble::{self, FullModel, ParticleEnsemble};
use carl_core::fpmodes::{self, FourierState, FpRun, FpSettings};
use carl_core::params::{derive_scaled, rho_at_threshold, PhysicalParams};
use carl_core::stability::{
    self, bad_cavity_example, dispersion_roots, good_cavity_example, instability_map, log_space, threshold_d,
    CavityRegime, SweepParam,
};
use carl_core::steady::{self, ramp_scan, solve_steady, sweep_d};

use crate::config::RunConfig;
use crate::output::{num, Run};

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.to_string()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn stability(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let r = dispersion_roots(cfg.model.kappa, cfg.model.d)?;
    let row = vec![
        num(r.kappa),
        num(r.diffusion),
        num(r.margin),
        num(r.lambda_plus.re),
        num(r.lambda_plus.im),
        num(r.gain_over_kc),
        num(r.shift_over_kc),
        flag(r.unstable),
    ];
    run.table(
        "stability.csv",
        "kappa,D,margin,re_lambda,im_lambda,gain_over_kc,shift_over_kc,unstable",
        [row],
    )?;
    println!(
        "kappa = {}, D = {}: margin = {:.6}, G/kappa_c = {:.6}, shift/kappa_c = {:.6}, {}",
        r.kappa,
        r.diffusion,
        r.margin,
        r.gain_over_kc,
        r.shift_over_kc,
        if r.unstable { "unstable" } else { "stable" }
    );
    Ok(())
}

pub fn threshold(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let mut rows = Vec::new();
    for &k in &cfg.threshold.kappas {
        let d = threshold_d(k)?;
        let r = dispersion_roots(k, d)?;
        println!("kappa = {k}: D_th = {d:.10}, shift/kappa_c = {:.6}", r.shift_over_kc);
        rows.push(vec![num(k), num(d), num(r.shift_over_kc)]);
    }
    run.table("threshold.csv", "kappa,D_th,shift_over_kc", rows)?;

    let phys = cfg.physical.to_params();
    let rho = rho_at_threshold(&phys)?;
    let s = derive_scaled(&phys, rho)?;
    let shift = dispersion_roots(s.kappa, s.diffusion)?.shift_over_kc;
    println!(
        "laboratory parameters: rho_th = {rho:.6}, kappa = {:.6}, D = {:.6}",
        s.kappa, s.diffusion
    );
    run.table(
        "threshold_physical.csv",
        "rho_th,kappa,D,gamma_bar,shift_over_kc",
        [vec![
            num(rho),
            num(s.kappa),
            num(s.diffusion),
            num(s.gamma_bar),
            num(shift),
        ]],
    )
}

fn fp_run(cfg: &RunConfig, run: &mut Run) -> Result<FpRun> {
    let fp = &cfg.fp;
    let (k, d) = (cfg.model.kappa, cfg.model.d);
    let mut settings = FpSettings::new(fp.dt, fp.t_end, 1).clamped(fp.n_max, d);
    settings.tail_tolerance = fp.tail_tolerance;
    settings.sample_every = ((fp.sample_interval / settings.dt).round() as usize).max(1);
    run.note("run.dt", settings.dt);
    run.note("run.sample_every", settings.sample_every);
    let init = FourierState::new(fp.n_max, Complex64::new(fp.seed_field, 0.0))?;
    let result = fpmodes::integrate(init, k, d, &settings)?;
    run.note("run.max_tail", result.max_tail);
    run.note("run.under_resolved", result.under_resolved);
    if result.under_resolved {
        eprintln!(
            "warning: final |B_n_max| = {:.3e} exceeds fp.tail_tolerance; raise fp.n_max",
            result.final_state.tail()
        );
    }
    let f = &result.final_state;
    println!(
        "tau = {}: |a|^2 = {:.10}, b = {:.10}, omega = {:.10}, <p> = {:.10}",
        f.tau,
        f.intensity(),
        f.bunching(),
        f.field_frequency(),
        f.mean_momentum()
    );
    Ok(result)
}

fn density_rows(cfg: &RunConfig, state: &FourierState) -> Vec<Vec<String>> {
    let profile = fpmodes::reconstruct_density(state, &fpmodes::periodic_grid(cfg.fp.density_points));
    if profile.truncation_failure {
        eprintln!(
            "warning: reconstructed density dips to {:.3e}; the mode truncation is too coarse",
            profile.min_value
        );
    }
    profile
        .theta
        .iter()
        .zip(&profile.density)
        .map(|(t, p)| vec![num(*t), num(*p)])
        .collect()
}

pub fn simulate_fp(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let result = fp_run(cfg, run)?;
    run.with_file("fp_trajectory.csv", |w| result.trajectory.write_csv(w))?;
    run.table(
        "fp_density.csv",
        "theta,density",
        density_rows(cfg, &result.final_state),
    )
}

pub fn fig2(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let result = fp_run(cfg, run)?;
    let k = cfg.model.kappa;
    let samples = &result.trajectory.samples;
    run.table(
        "fig2a_intensity.csv",
        "tau,abs_a_sq",
        samples.iter().map(|s| vec![num(s.tau), num(s.abs_a_sq)]),
    )?;
    run.table(
        "fig2b_bunching.csv",
        "tau,bunching",
        samples.iter().map(|s| vec![num(s.tau), num(s.bunching)]),
    )?;
    run.table(
        "fig2c_frequency.csv",
        "tau,omega_over_kappa,minus_p_over_kappa",
        samples
            .iter()
            .map(|s| vec![num(s.tau), num(s.omega_inst / k), num(-s.mean_p / k)]),
    )?;
    run.table(
        "fig2d_density.csv",
        "theta,density",
        density_rows(cfg, &result.final_state),
    )
}

pub fn simulate_sde(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let sde = &cfg.sde;
    let (k, d) = (cfg.model.kappa, cfg.model.d);
    let a0 = Complex64::new(sde.seed_field, 0.0);
    let every = ((sde.sample_interval / sde.dtau).round() as usize).max(1);
    let (traj, a) = if sde.gamma_bar == 0.0 {
        let mut ens = ParticleEnsemble::overdamped(sde.particles, cfg.seed)?;
        ensemble::simulate_overdamped(&mut ens, a0, k, d, sde.dtau, sde.t_end, every)?
    } else {
        let model = FullModel::from_kappa_d(k, d, sde.gamma_bar)?;
        let dt_bar = sde.dtau * sde.gamma_bar.sqrt();
        run.note("run.dt_bar", dt_bar);
        run.note("run.sigma", model.sigma);
        run.note("run.k_loss", model.k_loss);
        let mut ens = ParticleEnsemble::new(sde.particles, model.sigma, cfg.seed)?;
        ensemble::simulate_full(&mut ens, a0, &model, dt_bar, sde.t_end, every)?
    };
    let last = traj.samples.last().expect("trajectory has the initial sample");
    println!(
        "tau = {}: |a|^2 = {:.6}, b = {:.6} ({} particles)",
        last.tau,
        a.norm_sqr(),
        last.bunching,
        traj.n_particles
    );
    run.with_file("sde_trajectory.csv", |w| traj.write_csv(w))
}

pub fn steady_state(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let sol = solve_steady(cfg.model.kappa, cfg.model.d)?;
    println!(
        "b = {:.12}, omega = {:.12}, |a|^2 = {:.12}, <p> = {:.12}{}",
        sol.bunching,
        sol.omega,
        sol.a_sq(),
        sol.mean_p,
        if sol.below_threshold { " (below threshold)" } else { "" }
    );
    run.note("run.residual", sol.residual);
    run.note("run.iterations", sol.iterations);
    run.table(
        "steady.csv",
        "kappa,D,bunching,omega,a_sq,mean_p,re_alpha,im_alpha,residual,iterations,below_threshold",
        [vec![
            num(sol.kappa),
            num(sol.diffusion),
            num(sol.bunching),
            num(sol.omega),
            num(sol.a_sq()),
            num(sol.mean_p),
            num(sol.alpha.re),
            num(sol.alpha.im),
            num(sol.residual),
            sol.iterations.to_string(),
            flag(sol.below_threshold),
        ]],
    )?;
    run.table(
        "steady_harmonics.csv",
        "n,re_beta,im_beta",
        sol.beta
            .iter()
            .enumerate()
            .map(|(n, b)| vec![n.to_string(), num(b.re), num(b.im)]),
    )
}

struct SweepRow {
    d: f64,
    bunching: f64,
    omega: f64,
    mean_p: f64,
    a_sq: f64,
    below: bool,
    gauss_b: f64,
    gauss_omega: f64,
    ok: bool,
}

fn sweep_rows(kappa: f64, grid: &[f64], run: &mut Run) -> Result<Vec<SweepRow>> {
    let points = sweep_d(kappa, grid)?;
    let mut failed = 0;
    let rows = points
        .into_iter()
        .map(|p| {
            let (gauss_b, gauss_omega) = p
                .gaussian
                .as_ref()
                .map(|g| (g.bunching, g.omega))
                .unwrap_or((f64::NAN, f64::NAN));
            match p.exact {
                Ok(s) => SweepRow {
                    d: p.diffusion,
                    bunching: s.bunching,
                    omega: s.omega,
                    mean_p: s.mean_p,
                    a_sq: s.a_sq(),
                    below: s.below_threshold,
                    gauss_b,
                    gauss_omega,
                    ok: true,
                },
                Err(e) => {
                    failed += 1;
                    eprintln!("warning: D = {}: {e}", p.diffusion);
                    SweepRow {
                        d: p.diffusion,
                        bunching: f64::NAN,
                        omega: f64::NAN,
                        mean_p: f64::NAN,
                        a_sq: f64::NAN,
                        below: false,
                        gauss_b,
                        gauss_omega,
                        ok: false,
                    }
                }
            }
        })
        .collect();
    run.note("run.failed_points", failed);
    Ok(rows)
}

pub fn sweep(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let s = &cfg.sweep;
    let k = s.kappa;
    let rows = sweep_rows(k, &linspace(s.d_min, s.d_max, s.points), run)?;
    run.table(
        "sweep_d.csv",
        "D,bunching,omega_over_kappa,minus_p_over_kappa,a_sq,below_threshold,gaussian_bunching,gaussian_omega_over_kappa,converged",
        rows.iter().map(|r| {
            vec![
                num(r.d),
                num(r.bunching),
                num(r.omega / k),
                num(-r.mean_p / k),
                num(r.a_sq),
                flag(r.below),
                num(r.gauss_b),
                num(r.gauss_omega / k),
                flag(r.ok),
            ]
        }),
    )?;
    println!("{} points written, D_th = {:.10}", rows.len(), threshold_d(k)?);
    Ok(())
}

pub fn fig3(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let s = &cfg.sweep;
    let k = s.kappa;
    let rows = sweep_rows(k, &linspace(s.d_min, s.d_max, s.points), run)?;
    run.table(
        "fig3a_bunching.csv",
        "D,bunching,gaussian_bunching",
        rows.iter().map(|r| vec![num(r.d), num(r.bunching), num(r.gauss_b)]),
    )?;
    run.table(
        "fig3b_frequency.csv",
        "D,omega_over_kappa,minus_p_over_kappa",
        rows.iter()
            .map(|r| vec![num(r.d), num(r.omega / k), num(-r.mean_p / k)]),
    )
}

fn ramp_points(cfg: &RunConfig) -> Result<Vec<steady::RampPoint>> {
    let r = &cfg.ramp;
    Ok(ramp_scan(
        &cfg.physical.to_params(),
        &linspace(r.ratio_min, r.ratio_max, r.points),
    )?)
}

pub fn ramp(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let points = ramp_points(cfg)?;
    run.table(
        "ramp.csv",
        "ratio,kappa,D,bunching,omega_over_kappa,a_sq,below_threshold",
        points.iter().map(|p| {
            vec![
                num(p.ratio),
                num(p.kappa),
                num(p.diffusion),
                num(p.bunching),
                num(p.omega_over_kappa),
                num(p.a_sq),
                flag(p.below_threshold),
            ]
        }),
    )?;
    println!("{} pump ratios written", points.len());
    Ok(())
}

pub fn fig4(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let points = ramp_points(cfg)?;
    run.table(
        "fig4a_frequency.csv",
        "ratio,omega_over_kappa",
        points.iter().map(|p| vec![num(p.ratio), num(p.omega_over_kappa)]),
    )?;
    run.table(
        "fig4b_power.csv",
        "ratio,a_sq",
        points.iter().map(|p| vec![num(p.ratio), num(p.a_sq)]),
    )
}

pub fn fig1(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let m = &cfg.map;
    let kappas = log_space(m.kappa_min, m.kappa_max, m.points);
    let ds = log_space(m.d_min, m.d_max, m.points);
    let map = instability_map(&kappas, &ds)?;
    let mut rows = Vec::with_capacity(kappas.len() * ds.len());
    for i in 0..kappas.len() {
        for j in 0..ds.len() {
            let c = map.cell(i, j);
            rows.push(vec![
                num(c.kappa),
                num(c.diffusion),
                num(c.margin),
                num(c.lambda_plus.re),
                flag(c.unstable),
            ]);
        }
    }
    run.table("fig1_region.csv", "kappa,D,margin,re_lambda,unstable", rows)?;
    let curve = kappas
        .iter()
        .map(|&k| Ok(vec![num(k), num(threshold_d(k)?)]))
        .collect::<Result<Vec<_>>>()?;
    run.table("fig1_threshold.csv", "kappa,D_th", curve)
}

fn swept_value(phys: &PhysicalParams, sweep: SweepParam) -> f64 {
    match sweep {
        SweepParam::Temperature => phys.temperature,
        SweepParam::CavityLoss => phys.kappa_c,
        SweepParam::Friction => phys.gamma_f,
        SweepParam::AtomCount => phys.atom_count,
    }
}

pub fn verify_scaling(cfg: &RunConfig, run: &mut Run) -> Result<()> {
    let sc = &cfg.scaling;
    let sweep: SweepParam = sc.sweep.into();
    let mut points = Vec::new();
    let mut fits = Vec::new();
    for regime in sc.regime.regimes() {
        let (label, base) = match regime {
            CavityRegime::Good => ("good", good_cavity_example()),
            CavityRegime::Bad => ("bad", bad_cavity_example()),
        };
        let v0 = swept_value(&base, sweep);
        let values = log_space(v0, v0 * 10f64.powf(sc.decades), sc.points);
        let fit = stability::verify_scaling_over(&base, sweep, regime, &values)?;
        println!(
            "{label} cavity: pump exponent {:.6}, shift exponent {:.6}",
            fit.pump_exponent, fit.shift_exponent
        );
        for p in &fit.points {
            points.push(vec![
                label.to_string(),
                num(p.value),
                num(p.rho_th),
                num(p.kappa_th),
                num(p.d_th),
                num(p.pump_proxy),
                num(p.shift_over_kc),
            ]);
        }
        fits.push(vec![label.to_string(), num(fit.pump_exponent), num(fit.shift_exponent)]);
    }
    run.table(
        "scaling_points.csv",
        "regime,value,rho_th,kappa_th,D_th,pump_proxy,shift_over_kc",
        points,
    )?;
    run.table("scaling_fit.csv", "regime,pump_exponent,shift_exponent", fits)
}
