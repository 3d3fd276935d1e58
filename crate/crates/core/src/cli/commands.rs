use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::output::{self, Checkpoint, RngState, RunSummary, CHECKPOINT_VERSION};
use super::{plot, Cli, CliError, Command, OptimizeArgs, PulseArgs};
use crate::control::{
    self, compare_gradients, gradient_with, GradientMode, IterationRecord, LossKind, Optimizer,
};
use crate::dynamics::TimeGrid;
use crate::fock::{run_scenario, Scenario};
use crate::optomech::{sideband_limit, CoupledState, CoupledSystem, DriveWaveforms};

const RNG_ALGORITHM: &str = "chacha20";

struct Context {
    cfg: ExperimentConfig,
    out: PathBuf,
    quiet: bool,
    plot: bool,
}

impl Context {
    fn new(cli: &Cli, cfg: ExperimentConfig) -> Result<Self, CliError> {
        let mut cfg = cfg;
        if let Some(seed) = cli.seed {
            cfg.experiment.seed = seed;
        }
        cfg.optimizer.seed = cfg.experiment.seed;
        let out = cli
            .out
            .clone()
            .or_else(|| cfg.experiment.out.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&out)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out.display())))?;
        Ok(Self {
            cfg,
            out,
            quiet: cli.quiet,
            plot: cli.plot,
        })
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn pulse(&self, args: &PulseArgs) -> Result<DriveWaveforms, CliError> {
        let path = args
            .pulse
            .clone()
            .or_else(|| self.cfg.experiment.pulse.clone())
            .unwrap_or_else(|| self.path("pulse.csv"));
        output::read_pulse(&path)
    }

    /// Integration grid matching the knots of `drives`.
    fn grid_for(&self, drives: &DriveWaveforms) -> Result<TimeGrid, CliError> {
        Ok(TimeGrid::new(
            drives.t_end(),
            self.cfg.grid.steps_per_knot * (drives.len() - 1),
        )?)
    }
}

pub(super) fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let cfg = match (&cli.config, &cli.command) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Command::OracleCompare { scenario }) => {
            return oracle_compare(cli, scenario.as_deref(), None)
        }
        (None, _) => {
            return Err(CliError::Config(
                "--config is required for this command".into(),
            ))
        }
    };
    if let Command::OracleCompare { scenario } = &cli.command {
        return oracle_compare(cli, scenario.as_deref(), Some(&cfg));
    }
    let ctx = Context::new(cli, cfg)?;
    match &cli.command {
        Command::Cool(args) => optimize(&ctx, "cool", LossKind::MeanPhonon, args, None),
        Command::Entangle(args) => optimize(&ctx, "entangle", LossKind::EtaMinus, args, None),
        Command::Resume => {
            let cp = output::read_checkpoint(&ctx.path("checkpoint.json"))?;
            let hash = ctx.cfg.hash();
            if cp.config_hash != hash {
                return Err(CliError::Config(format!(
                    "checkpoint was written for config {} but the current config hashes to {hash}",
                    cp.config_hash
                )));
            }
            let verb = cp.verb.clone();
            let kind = cp.loss_kind;
            optimize(
                &ctx,
                &verb,
                kind,
                &OptimizeArgs { halt_after: None },
                Some(cp),
            )
        }
        Command::GradCheck => grad_check(&ctx),
        Command::SweepDeviation(args) => sweep_deviation(&ctx, args),
        Command::InjectNoise(args) => inject_noise(&ctx, args),
        Command::FreeEvolve { pulse, extension } => free_evolve(&ctx, pulse, *extension),
        Command::OracleCompare { .. } => unreachable!(),
    }
}

fn simulate(
    ctx: &Context,
    drives: &DriveWaveforms,
    grid: &TimeGrid,
) -> Result<Vec<CoupledState>, CliError> {
    let initial = ctx.cfg.initial_state()?;
    Ok(control::simulate(
        &ctx.cfg.physical,
        drives,
        grid,
        &initial,
    )?)
}

fn checkpoint(
    ctx: &Context,
    verb: &str,
    kind: LossKind,
    opt: &Optimizer,
    records: &[IterationRecord],
) -> Result<(), CliError> {
    let cp = Checkpoint {
        version: CHECKPOINT_VERSION,
        config_hash: ctx.cfg.hash(),
        verb: verb.to_string(),
        loss_kind: kind,
        rng: RngState {
            algorithm: RNG_ALGORITHM.into(),
            seed: ctx.cfg.experiment.seed,
        },
        state: opt.state().clone(),
        records: records.to_vec(),
    };
    output::write_json(&ctx.path("checkpoint.json"), &cp)
}

fn optimize(
    ctx: &Context,
    verb: &str,
    kind: LossKind,
    args: &OptimizeArgs,
    resume: Option<Checkpoint>,
) -> Result<(), CliError> {
    let clock = Instant::now();
    let cfg = &ctx.cfg;
    let grid = cfg.grid.time_grid()?;
    let initial = cfg.initial_state()?;
    let (mut opt, mut records) = match resume {
        None => {
            let drives0 = cfg.initial_drives(kind)?;
            let (opt, first) = Optimizer::new(
                &cfg.physical,
                &drives0,
                &grid,
                &initial,
                kind,
                &cfg.optimizer,
            )?;
            (opt, vec![first])
        }
        Some(cp) => {
            let opt = Optimizer::resume(
                &cfg.physical,
                &grid,
                &initial,
                kind,
                &cfg.optimizer,
                cp.state,
            )?;
            (opt, cp.records)
        }
    };
    ctx.say(format!(
        "{verb}: iteration {} loss {:.6e}",
        opt.state().iter,
        opt.state().loss
    ));
    checkpoint(ctx, verb, kind, &opt, &records)?;
    let mut failure = None;
    while args.halt_after.is_none_or(|h| opt.state().iter < h) {
        match opt.step() {
            Ok(Some(r)) => {
                if r.iter % 10 == 0 {
                    ctx.say(format!("{verb}: iteration {} loss {:.6e}", r.iter, r.loss));
                }
                records.push(r);
                checkpoint(ctx, verb, kind, &opt, &records)?;
            }
            Ok(None) => break,
            Err(e) => {
                log::warn!("optimization stopped: {e}");
                failure = Some(e);
                break;
            }
        }
    }

    let drives = opt.drives().clone();
    let states = simulate(ctx, &drives, &grid)?;
    let rows = output::trajectory_rows(&cfg.physical, Some(&drives), &grid, 0.0, &states)?;
    output::write_trajectory(&ctx.path("trajectory.csv"), &rows)?;
    output::write_pulse(&ctx.path("pulse.csv"), &drives)?;
    output::write_optlog(&ctx.path("optlog.csv"), &records)?;
    let last = output::observables(&states[grid.n_steps()])?;
    let summary = RunSummary {
        verb: verb.to_string(),
        loss_kind: kind,
        final_loss: opt.state().loss,
        n_b: last.n_b,
        eta_minus: last.eta_minus,
        log_negativity: last.log_negativity,
        iterations: opt.state().iter,
        sideband_limit: sideband_limit(&cfg.physical)?,
        wall_s: clock.elapsed().as_secs_f64(),
        config_hash: cfg.hash(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    output::write_json(&ctx.path("summary.json"), &summary)?;
    if ctx.plot {
        plot::loss_curve(&ctx.path("loss.svg"), &records)?;
        let column = if kind == LossKind::MeanPhonon { 1 } else { 3 };
        let label = if kind == LossKind::MeanPhonon {
            "n_b"
        } else {
            "E_N"
        };
        plot::time_series(&ctx.path("observable.svg"), label, &rows, column)?;
    }
    ctx.say(format!(
        "{verb}: {} iterations, loss {:.6e}, n_b {:.6e}, E_N {:.6e}, sideband limit {:.6e}",
        summary.iterations,
        summary.final_loss,
        summary.n_b,
        summary.log_negativity,
        summary.sideband_limit
    ));
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn grad_check(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let kind = cfg.experiment.loss;
    let grid = cfg.grid.time_grid()?;
    let initial = cfg.initial_state()?;
    let base = cfg.initial_drives(kind)?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.experiment.seed);
    let omega = base
        .omega()
        .iter()
        .map(|o| o * rng.gen_range(0.5..1.5))
        .collect();
    let phi = (0..base.len())
        .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
        .collect();
    let drives = base.with_values(omega, phi)?;
    let grad = |mode| {
        gradient_with(
            &cfg.physical,
            &drives,
            &grid,
            &initial,
            kind,
            mode,
            cfg.optimizer.fd_step,
        )
    };
    let adjoint = grad(GradientMode::Adjoint)?;
    let forward = grad(GradientMode::ForwardSensitivity)?;
    let fd = grad(GradientMode::FiniteDifference)?;

    let mut w = csv::Writer::from_path(ctx.path("gradcheck.csv"))?;
    w.write_record(["channel", "knot", "adjoint", "forward", "fd"])?;
    for (name, pick) in [("omega", 0), ("phi", 1)] {
        let col = |r: &control::GradientReport| {
            if pick == 0 {
                r.d_omega.clone()
            } else {
                r.d_phi.clone()
            }
        };
        let (a, f, d) = (col(&adjoint), col(&forward), col(&fd));
        for j in 0..a.len() {
            w.write_record([
                name.to_string(),
                j.to_string(),
                output::fmt(a[j]),
                output::fmt(f[j]),
                output::fmt(d[j]),
            ])?;
        }
    }
    w.flush()?;

    let tol = cfg.experiment.grad_check_tol;
    let pairs = [
        (
            "adjoint vs forward",
            compare_gradients(&adjoint, &forward),
            1e-8,
        ),
        ("adjoint vs fd", compare_gradients(&adjoint, &fd), tol),
        ("forward vs fd", compare_gradients(&forward, &fd), tol),
    ];
    let mut failed = Vec::new();
    for (name, d, limit) in pairs {
        let channel = if d.phase { "phi" } else { "omega" };
        let ok = d.max_rel <= limit;
        ctx.say(format!(
            "{name}: max relative discrepancy {:.3e} (limit {limit:.1e}) at {channel} knot {} {}",
            d.max_rel,
            d.knot,
            if ok { "ok" } else { "FAIL" }
        ));
        if !ok {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "gradient mismatch: {}",
            failed.join(", ")
        )))
    }
}

fn oracle_compare(
    cli: &Cli,
    scenario: Option<&str>,
    cfg: Option<&ExperimentConfig>,
) -> Result<(), CliError> {
    let name = scenario
        .map(str::to_string)
        .or_else(|| cfg.map(|c| c.experiment.scenario.clone()))
        .unwrap_or_else(|| "all".into());
    let dims = cfg.and_then(|c| c.experiment.fock_dims.clone());
    let scenarios: Vec<Scenario> = if name == "all" {
        Scenario::ALL.to_vec()
    } else {
        vec![Scenario::from_name(&name).ok_or_else(|| {
            let known: Vec<_> = Scenario::ALL.iter().map(|s| s.name()).collect();
            CliError::Config(format!(
                "unknown scenario {name:?}; expected one of {} or all",
                known.join(", ")
            ))
        })?]
    };
    let mut failed = Vec::new();
    for s in scenarios {
        let report = run_scenario(s, dims.clone())?;
        let ok = report.within_tolerance();
        if !cli.quiet {
            println!(
                "{}: mean error {:.3e}, covariance relative error {:.3e}, trace error {:.3e}, hermiticity error {:.3e} {}",
                s.name(),
                report.max_mean_abs_error,
                report.max_cov_rel_error,
                report.max_trace_error,
                report.max_hermiticity_error,
                if ok { "ok" } else { "FAIL" }
            );
        }
        if !ok {
            failed.push(s.name());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "oracle mismatch: {}",
            failed.join(", ")
        )))
    }
}

fn sweep_deviation(ctx: &Context, args: &PulseArgs) -> Result<(), CliError> {
    let drives = ctx.pulse(args)?;
    let grid = ctx.grid_for(&drives)?;
    let kind = ctx.cfg.experiment.loss;
    let initial = ctx.cfg.initial_state()?;
    let zetas = ctx.cfg.experiment.deviation.values()?;
    let jobs: Vec<(&str, f64)> = ["amplitude", "phase"]
        .iter()
        .flat_map(|c| zetas.iter().map(move |z| (*c, *z)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(channel, zeta)| {
            let scale = |v: &[f64]| v.iter().map(|x| x * (1.0 + zeta)).collect::<Vec<_>>();
            let d = if channel == "amplitude" {
                drives.with_values(scale(drives.omega()), drives.phi().to_vec())?
            } else {
                drives.with_values(drives.omega().to_vec(), scale(drives.phi()))?
            };
            let loss = control::loss_value(&ctx.cfg.physical, &d, &grid, &initial, kind)?;
            Ok((channel, zeta, loss))
        })
        .collect::<Result<Vec<_>, crate::Error>>()?;
    output::write_deviation(&ctx.path("deviation.csv"), &rows)?;
    for (channel, zeta, loss) in &rows {
        if *zeta == 0.0 {
            ctx.say(format!("{channel}: loss at zero deviation {loss:.6e}"));
        }
    }
    Ok(())
}

fn inject_noise(ctx: &Context, args: &PulseArgs) -> Result<(), CliError> {
    let drives = ctx.pulse(args)?;
    let grid = ctx.grid_for(&drives)?;
    let e = &ctx.cfg.experiment;
    let kind = e.loss;
    let observable = |states: &[CoupledState]| -> Result<Vec<f64>, CliError> {
        states
            .iter()
            .map(|s| {
                let o = output::observables(s)?;
                Ok(if kind == LossKind::MeanPhonon {
                    o.n_b
                } else {
                    o.log_negativity
                })
            })
            .collect()
    };
    let clean = observable(&simulate(ctx, &drives, &grid)?)?;
    let times: Vec<f64> = grid.times().collect();
    let samples: Vec<(f64, f64)> = times.iter().map(|t| drives.sample(*t)).collect();
    let normal = |std: f64| Normal::new(0.0, std).map_err(|err| CliError::Config(err.to_string()));
    let channels = [
        ("amplitude", normal(e.noise.omega_std)?),
        ("phase", normal(e.noise.phi_std)?),
    ];
    let mut out = Vec::new();
    for (c, (name, dist)) in channels.iter().enumerate() {
        let runs = (0..e.noise.runs)
            .into_par_iter()
            .map(|run| {
                let mut rng = ChaCha20Rng::seed_from_u64(e.seed);
                rng.set_stream((run * channels.len() + c) as u64);
                let (mut omega, mut phi): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
                let target = if c == 0 { &mut omega } else { &mut phi };
                for v in target.iter_mut() {
                    *v += dist.sample(&mut rng);
                }
                let noisy = DriveWaveforms::new(times.clone(), omega, phi)?;
                observable(&simulate(ctx, &noisy, &grid)?)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let last = grid.n_steps();
        let mean = runs.iter().map(|r| r[last]).sum::<f64>() / runs.len() as f64;
        ctx.say(format!(
            "{name} noise: final value clean {:.6e}, mean over {} runs {mean:.6e}",
            clean[last],
            runs.len()
        ));
        out.push((*name, runs));
    }
    output::write_noise(&ctx.path("noise_runs.csv"), &times, &out)
}

fn free_evolve(ctx: &Context, args: &PulseArgs, extension: Option<f64>) -> Result<(), CliError> {
    let drives = ctx.pulse(args)?;
    let grid = ctx.grid_for(&drives)?;
    let ext = extension.unwrap_or(ctx.cfg.experiment.free_extension);
    if !(ext.is_finite() && ext >= 0.0) {
        return Err(CliError::Config(format!(
            "extension must be >= 0, got {ext}"
        )));
    }
    let states = simulate(ctx, &drives, &grid)?;
    let t0 = grid.t_end();
    let y0 = states[grid.n_steps()];
    let steps = (ext / grid.dt()).round() as usize;
    let (free_grid, free_states) = if steps == 0 {
        (TimeGrid::new(1.0, 1)?, vec![y0])
    } else {
        let g = TimeGrid::new(ext, steps)?;
        let off = DriveWaveforms::uniform(t0 + ext, 2, 0.0, 0.0)?;
        let s = CoupledSystem::new(&ctx.cfg.physical, &off)?.simulate_from(&g, t0, y0)?;
        (g, s)
    };
    let rows = output::trajectory_rows(&ctx.cfg.physical, None, &free_grid, t0, &free_states)?;
    output::write_trajectory(&ctx.path("free.csv"), &rows)?;
    if ctx.plot {
        let (column, label) = match ctx.cfg.experiment.loss {
            LossKind::MeanPhonon => (1, "n_b"),
            LossKind::EtaMinus => (3, "E_N"),
        };
        plot::time_series(&ctx.path("free.svg"), label, &rows, column)?;
    }
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    ctx.say(format!(
        "free evolution over {ext}: n_b {:.6e} -> {:.6e}, E_N {:.6e} -> {:.6e}",
        first[1], last[1], first[3], last[3]
    ));
    Ok(())
}
