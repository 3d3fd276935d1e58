//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lgq_core::control::{
    default_initial_state, gradient, loss_value, GradientMode, GradientReport, LossKind, Optimizer,
    OptimizerConfig,
};
use lgq_core::dynamics::{lyapunov_steady_state, propagate_moments, ConstantGenerator, TimeGrid};
use lgq_core::fock::{constant_classical, propagate_lindblad, DensityOperator, FockConfig};
use lgq_core::gaussian::{negativity_of, thermal_state};
use lgq_core::optomech::{
    dissipation_matrices, drift, sideband_limit, CoupledState, CoupledSystem, DriveWaveforms,
    OptomechParams, C64,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Fourth-order central differences
/// `(8[L(θ+h) - L(θ-h)] - [L(θ+2h) - L(θ-2h)]) / 12h` with `h = rel·max(1, |θ|)`.
fn central_difference(
    p: &OptomechParams,
    d: &DriveWaveforms,
    grid: &TimeGrid,
    kind: LossKind,
    rel: f64,
) -> Vec<f64> {
    let init = default_initial_state(p).unwrap();
    let n = d.len();
    (0..2 * n)
        .map(|j| {
            let theta = if j < n { d.omega()[j] } else { d.phi()[j - n] };
            let h = rel * theta.abs().max(1.0);
            let loss = |s: f64| {
                let (mut o, mut ph) = (d.omega().to_vec(), d.phi().to_vec());
                let v = if j < n { &mut o[j] } else { &mut ph[j - n] };
                *v = theta + s * h;
                loss_value(p, &d.with_values(o, ph).unwrap(), grid, &init, kind).unwrap()
            };
            (8.0 * (loss(1.0) - loss(-1.0)) - (loss(2.0) - loss(-2.0))) / (12.0 * h)
        })
        .collect()
}

fn max_rel_error(g: &GradientReport, oracle: &[f64]) -> f64 {
    let scale = oracle.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    g.flat()
        .iter()
        .zip(oracle)
        .filter(|(_, y)| y.abs() > 1e-8 * scale)
        .map(|(x, y)| (x - y).abs() / y.abs())
        .fold(0.0, f64::max)
}

fn gradient_fidelity() -> Outcome {
    let clock = Instant::now();
    let p = OptomechParams::cooling_reference();
    let init = default_initial_state(&p).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let k = 8;
        let knots = (0..k).map(|i| 2.0 * i as f64 / (k - 1) as f64).collect();
        let omega = (0..k).map(|_| rng.gen_range(100.0..1500.0)).collect();
        let phi = (0..k)
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let d = DriveWaveforms::new(knots, omega, phi).unwrap();
        let grid = TimeGrid::new(2.0, 20 * (k - 1)).unwrap();
        let kind = if seed % 2 == 0 {
            LossKind::MeanPhonon
        } else {
            LossKind::EtaMinus
        };
        let oracle = central_difference(&p, &d, &grid, kind, 1e-3);
        for mode in [GradientMode::Adjoint, GradientMode::ForwardSensitivity] {
            let g = gradient(&p, &d, &grid, &init, kind, mode).unwrap();
            worst = worst.max(max_rel_error(&g, &oracle));
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-4 && secs < 60.0,
        format!("max relative error {worst:.2e} over 10 configurations in {secs:.1} s"),
    )
}

fn fock_equivalence() -> Outcome {
    let clock = Instant::now();
    let params = OptomechParams {
        kappa: 0.2,
        n_bar_m: 0.5,
        ..OptomechParams::cooling_reference()
    };
    let (delta, g) = (1.0, C64::new(0.05, 0.0));
    let grid = TimeGrid::new(10.0, 1000).unwrap();
    let config = FockConfig::new(vec![10, 20], grid).unwrap();
    let rho0 = DensityOperator::thermal(&[10, 20], &[0.0, params.n_bar_m]).unwrap();
    let classical = constant_classical(&params, &grid, delta, g);
    let fock = propagate_lindblad(&config, &params, &classical, &rho0).unwrap();
    let (_, e) = dissipation_matrices(&params);
    let a = drift(delta, g, &params);
    let gen = ConstantGenerator::homogeneous(
        DMatrix::from_fn(4, 4, |r, c| a[(r, c)]),
        DMatrix::from_fn(4, 4, |r, c| e[(r, c)]),
    )
    .unwrap();
    let gauss =
        propagate_moments(&gen, &thermal_state(&[0.0, params.n_bar_m]).unwrap(), &grid).unwrap();
    let (mut mean_err, mut cov_err): (f64, f64) = (0.0, 0.0);
    for (f, (m, v)) in fock.moments.iter().zip(gauss.means.iter().zip(&gauss.covs)) {
        mean_err = mean_err.max((f.mean() - m).amax());
        cov_err = cov_err.max((f.cov() - v).amax() / v.amax());
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        fock.moments.len() == grid.n_nodes() && mean_err <= 1e-6 && cov_err <= 1e-3 && secs < 120.0,
        format!("mean error {mean_err:.2e}, covariance relative error {cov_err:.2e}, {secs:.1} s"),
    )
}

fn lyapunov_residuals() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let n = 2 + 2 * (i % 3);
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let c = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let a = (&m - m.transpose()) * 2.0 - &b * b.transpose() - DMatrix::identity(n, n) * 0.05;
        let e = &c * c.transpose();
        let v = lyapunov_steady_state(&a, &e).unwrap();
        let residual = &a * &v + &v * a.transpose() + &e;
        worst = worst.max(residual.norm() / e.norm());
    }
    let (gamma, nbar) = (0.2, 3.0);
    let a = DMatrix::from_row_slice(2, 2, &[-gamma / 2.0, 1.0, -1.0, -gamma / 2.0]);
    let e = DMatrix::identity(2, 2) * (gamma * (nbar + 0.5));
    let thermal = lyapunov_steady_state(&a, &e).unwrap();
    let thermal_err = (thermal - DMatrix::identity(2, 2) * (nbar + 0.5)).amax();
    outcome(
        worst <= 1e-10 && thermal_err <= 1e-10,
        format!("max relative residual {worst:.2e}, thermal error {thermal_err:.2e}"),
    )
}

fn random_single_mode(rng: &mut ChaCha8Rng) -> Matrix2<f64> {
    let (th, r, n) = (
        rng.gen_range(0.0..6.3f64),
        rng.gen_range(-1.0..1.0f64),
        rng.gen_range(0.0..5.0f64),
    );
    let rot = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
    let sq = Matrix2::new(r.exp(), 0.0, 0.0, (-r).exp());
    let s = rot * sq;
    s * s.transpose() * (n + 0.5)
}

fn negativity_analytics() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in [0.1f64, 0.5, 1.0] {
        let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
        let v = Matrix4::new(
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        );
        worst = worst.max((negativity_of(&v).unwrap().log_negativity - 2.0 * r).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut max_product: f64 = 0.0;
    for _ in 0..200 {
        let mut v = Matrix4::zeros();
        v.fixed_view_mut::<2, 2>(0, 0)
            .copy_from(&random_single_mode(&mut rng));
        v.fixed_view_mut::<2, 2>(2, 2)
            .copy_from(&random_single_mode(&mut rng));
        max_product = max_product.max(negativity_of(&v).unwrap().log_negativity);
    }
    outcome(
        worst <= 1e-10 && max_product == 0.0,
        format!("two-mode squeezed error {worst:.2e}, max product-state E_N {max_product:.2e}"),
    )
}

struct Optimized {
    drives: DriveWaveforms,
    loss: f64,
    iters: usize,
    secs: f64,
    history: Vec<f64>,
}

impl Optimized {
    fn first_below(&self, level: f64) -> Option<usize> {
        self.history.iter().position(|l| *l <= level)
    }
}

fn run_optimizer(
    p: &OptomechParams,
    t_end: f64,
    knots: usize,
    omega0: f64,
    kind: LossKind,
    max_iters: usize,
    done: impl Fn(f64) -> bool,
) -> Optimized {
    let clock = Instant::now();
    let grid = TimeGrid::new(t_end, 40 * (knots - 1)).unwrap();
    let d0 = DriveWaveforms::uniform(t_end, knots, omega0, 0.0).unwrap();
    let init = default_initial_state(p).unwrap();
    let cfg = OptimizerConfig {
        max_iters,
        ..OptimizerConfig::default()
    };
    let (mut opt, first) = Optimizer::new(p, &d0, &grid, &init, kind, &cfg).unwrap();
    let mut history = vec![first.loss];
    while !done(opt.state().loss) {
        match opt.step().unwrap() {
            Some(r) => history.push(r.loss),
            None => break,
        }
    }
    Optimized {
        drives: opt.drives().clone(),
        loss: opt.state().loss,
        iters: opt.state().iter,
        secs: clock.elapsed().as_secs_f64(),
        history,
    }
}

fn cooling(run: &Optimized) -> Outcome {
    let reached = run.first_below(1.0);
    let at = |i: Option<usize>| i.map_or("never".to_string(), |i| format!("at iteration {i}"));
    outcome(
        reached.is_some_and(|i| i <= 500),
        format!(
            "<b†b>(T) <= 1 {}; <= 0.15 (stretch) {}; {:.4} after {} iterations ({:.1} s)",
            at(reached),
            at(run.first_below(0.15)),
            run.loss,
            run.iters,
            run.secs
        ),
    )
}

fn entanglement() -> Outcome {
    let p = OptomechParams::entanglement_reference();
    let target = (-0.5f64).exp() / 2.0;
    let run = run_optimizer(&p, 80.0, 400, 1000.0, LossKind::EtaMinus, 1000, |eta| {
        eta <= target
    });
    let grid = TimeGrid::new(80.0, 40 * 399).unwrap();
    let init = default_initial_state(&p).unwrap();
    let states = CoupledSystem::new(&p, &run.drives)
        .unwrap()
        .simulate(&grid, coupled(&init))
        .unwrap();
    let e_n = negativity_of(&states[grid.n_steps()].cov)
        .unwrap()
        .log_negativity;
    outcome(
        e_n >= 0.3 && run.iters <= 1000,
        format!(
            "E_N(T) = {e_n:.4} after {} iterations ({:.1} s); stretch goal 0.5 {}",
            run.iters,
            run.secs,
            if e_n >= 0.5 { "met" } else { "not met" }
        ),
    )
}

fn coupled(init: &lgq_core::gaussian::GaussianState) -> CoupledState {
    CoupledState {
        alpha: C64::new(0.0, 0.0),
        beta: C64::new(0.0, 0.0),
        cov: init.cov4().unwrap(),
    }
}

fn sideband() -> Outcome {
    let n_f = sideband_limit(&OptomechParams::cooling_reference()).unwrap();
    outcome(n_f == 0.15, format!("n_f = {n_f:?}"))
}

fn robustness(run: &Optimized) -> Outcome {
    let p = OptomechParams::cooling_reference();
    let grid = TimeGrid::new(38.0, 40 * (run.drives.len() - 1)).unwrap();
    let init = default_initial_state(&p).unwrap();
    let scaled = |zeta: f64| {
        let omega = run
            .drives
            .omega()
            .iter()
            .map(|o| o * (1.0 + zeta))
            .collect();
        let d = run
            .drives
            .with_values(omega, run.drives.phi().to_vec())
            .unwrap();
        loss_value(&p, &d, &grid, &init, LossKind::MeanPhonon).unwrap()
    };
    let (l0, lm, lp) = (scaled(0.0), scaled(-0.1), scaled(0.1));
    let sweep_ok = lm > l0 && lp > l0;

    let states = CoupledSystem::new(&p, &run.drives)
        .unwrap()
        .simulate(&grid, coupled(&init))
        .unwrap();
    let y_t = states[grid.n_steps()];
    let period = std::f64::consts::TAU;
    let free_grid = TimeGrid::new(period, (period / grid.dt()).round() as usize).unwrap();
    let off = DriveWaveforms::uniform(38.0 + period, 2, 0.0, 0.0).unwrap();
    let free = CoupledSystem::new(&p, &off)
        .unwrap()
        .simulate_from(&free_grid, 38.0, y_t)
        .unwrap();
    let n_b: Vec<f64> = free
        .iter()
        .map(|s| 0.5 * (s.cov[(2, 2)] + s.cov[(3, 3)] - 1.0))
        .collect();
    let first_drop = n_b.windows(2).position(|w| w[1] <= w[0]);
    let free_ok = first_drop.is_none();
    let free_detail = match first_drop {
        None => format!(
            "<b†b> rises from {:.3} to {:.3} over one period",
            n_b[0],
            n_b[n_b.len() - 1]
        ),
        Some(k) => {
            let peak = n_b[k];
            format!(
                "<b†b> rises from {:.3} to {peak:.3} until t = T + {:.3}, then falls to {:.3} at T + 2π",
                n_b[0],
                free_grid.time(k),
                n_b[n_b.len() - 1]
            )
        }
    };
    outcome(
        sweep_ok && free_ok,
        format!(
            "deviation loss(-0.1) = {lm:.3}, loss(0) = {l0:.4}, loss(+0.1) = {lp:.3} [{}]; free evolution: {free_detail} [{}]",
            if sweep_ok { "ok" } else { "fail" },
            if free_ok { "ok" } else { "fail" }
        ),
    )
}

fn lgqctl(cfg: &Path, out: &Path, verb: &str) -> bool {
    Command::new(env!("CARGO_BIN_EXE_lgqctl"))
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "-q",
            verb,
        ])
        .status()
        .unwrap()
        .success()
}

fn strip_wall_time(text: &str) -> String {
    text.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(
        &cfg,
        "[physical]\ng0 = 4e-5\nkappa = 0.02\ngamma_m = 3e-6\ndelta_c = 1.0\nn_bar_m = 1000.0\n\n\
         [grid]\nt_end = 38.0\nn_knots = 40\n\n[optimizer]\nmax_iters = 15\n\n[experiment]\nseed = 11\n",
    )
    .unwrap();
    let verbs = ["cool", "sweep-deviation", "inject-noise", "free-evolve"];
    let dirs = [tmp.path().join("a"), tmp.path().join("b")];
    for dir in &dirs {
        for verb in verbs {
            if !lgqctl(&cfg, dir, verb) {
                return outcome(false, format!("lgqctl {verb} failed"));
            }
        }
    }
    let files = [
        "trajectory.csv",
        "pulse.csv",
        "deviation.csv",
        "noise_runs.csv",
        "free.csv",
    ];
    let mut differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| fs::read(dirs[0].join(f)).unwrap() != fs::read(dirs[1].join(f)).unwrap())
        .collect();
    let log = |d: &Path| strip_wall_time(&fs::read_to_string(d.join("optlog.csv")).unwrap());
    if log(&dirs[0]) != log(&dirs[1]) {
        differing.push("optlog.csv");
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "{} CSV files identical across two runs (optlog compared without wall_s)",
                files.len() + 1
            )
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    let cooling_run = run_optimizer(
        &OptomechParams::cooling_reference(),
        38.0,
        200,
        500.0,
        LossKind::MeanPhonon,
        500,
        |_| false,
    );
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("gradient fidelity", Box::new(gradient_fidelity)),
        ("Gaussian vs Fock equivalence", Box::new(fock_equivalence)),
        ("Lyapunov residual", Box::new(lyapunov_residuals)),
        ("negativity analytics", Box::new(negativity_analytics)),
        ("cooling threshold", Box::new(|| cooling(&cooling_run))),
        ("entanglement threshold", Box::new(entanglement)),
        ("sideband limit", Box::new(sideband)),
        ("robustness", Box::new(|| robustness(&cooling_run))),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "criterion {} {name}: {} ({})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
