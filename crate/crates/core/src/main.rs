//! Command-line driver for the experiment harness.
//!
//! Every subcommand loads a JSON config (or its built-in default), runs the
//! experiment, writes `summary.csv`, detail CSVs and `run-manifest.json`
//! into the output directory, and exits nonzero iff any assertion of the
//! selected experiment failed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wasep_lab::error::Result;
use wasep_lab::harness::{
    run_bg_decay, run_entropy_growth, run_equilibrium_clt, run_flow_sweep, run_hydro_rate,
    ExperimentConfig, ExperimentOutcome, RunWriter,
};
use wasep_lab::hydro::solve_hydro;
use wasep_lab::lattice::Torus;
use wasep_lab::master::{adjoint_one, AdjointMode, MasterSystem};
use wasep_lab::rng::{stream_rng, Stream};
use wasep_lab::wasep::{
    build_rates, sample_profile_measure, simulate, write_snapshots_binary, write_snapshots_csv,
};

const DEFAULTS_HELP: &str = "\
Built-in defaults (override with --config FILE; every run echoes its exact \
config into run-manifest.json):
  hydro-rate     d=1, n=[32,64,128,256], T=0.05, 200 replicas, seed 7,
                 F = sin(2pi x) (fourier), u0 = 0.5 + 0.2 cos(2pi x)
  clt            d=1, n=[256], T=0.1, 2000 replicas, seed 21,
                 F = const 1.0, u0 = 0.5
  bg             d=1, n=[64,128,256], T=0.1, 120 replicas, seed 13,
                 F = const 1.0, u0 = 0.5
  entropy        d=1, n=[6,8,10,12], T=0.05, seed 17, F = 0,
                 u0 = 0.5 + 0.2 cos(2pi x)
  flows          sweeps d=1..3 with top scales l = [64,64,32]
  simulate       clt defaults at n=64, 17 snapshots
  solve-pde      hydro-rate defaults at n=64
  master-oracle  entropy defaults at n=8

Config keys: experiment, d, n_list, t_final, dt (optional), field, u0,
replicas, seed, mode_cutoff (default 16/8/5 by dimension), ell (default
auto). See README.md for the field and profile JSON schemas.";

#[derive(Parser)]
#[command(
    name = "wasep-lab",
    about = "Simulation and verification laboratory for the weakly asymmetric exclusion process",
    version,
    after_help = DEFAULTS_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment configuration; defaults are built in per subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for summary.csv, detail CSVs and run-manifest.json.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for the replica farm (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Single-worker mode: fixed reduction order for golden outputs.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo speed-of-convergence slope of the hydrodynamic limit.
    HydroRate,
    /// Equilibrium CLT: variance, normality, quadratic variation,
    /// martingale property.
    Clt,
    /// Boltzmann-Gibbs decay of the time-integrated quadratic field.
    Bg,
    /// Exact relative-entropy sweep with the Yau-inequality slack.
    Entropy,
    /// Flow-lemma sweep: exact divergences and energy ratios.
    Flows,
    /// Simulate one trajectory and write snapshot CSV + binary.
    Simulate,
    /// Solve the hydrodynamic equation and write the density trajectory.
    SolvePde,
    /// Exact master-equation oracle: entropy report and the two-route
    /// adjoint identity.
    MasterOracle,
}

fn load_config(cli: &Cli, default: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => default,
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn write_outcome(cli: &Cli, config: &ExperimentConfig, outcome: &ExperimentOutcome) -> Result<()> {
    let mut writer = RunWriter::new(&cli.out, config)?;
    writer.write_summary(&outcome.rows)?;
    for (name, body) in &outcome.details {
        writer.write_detail(name, body)?;
    }
    writer.finalize()?;
    for row in &outcome.rows {
        println!(
            "{:<12} {:<10} {:<24} {:>14.6e}  (se {:.3e}, replicas {})",
            row.experiment, row.point, row.statistic, row.value, row.se, row.replicas
        );
    }
    Ok(())
}

fn run_simulate(cli: &Cli, config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let torus = Torus::new(config.d, config.n_list[0])?;
    let u0 = config.u0.build(torus)?;
    let rates = build_rates(&config.field, &torus);
    let mut init = stream_rng(config.seed, 0, Stream::InitialCondition);
    let eta0 = sample_profile_measure(&u0, &mut init);
    let mut dynamics = stream_rng(config.seed, 0, Stream::Dynamics);
    let snapshots: Vec<f64> = (0..=16).map(|i| config.t_final * i as f64 / 16.0).collect();
    let traj = simulate(
        &eta0,
        &rates,
        config.t_final,
        &mut dynamics,
        &snapshots,
        false,
    )?;
    let mut csv = Vec::new();
    write_snapshots_csv(&traj, &mut csv)?;
    std::fs::create_dir_all(&cli.out)?;
    let mut bin = Vec::new();
    write_snapshots_binary(&traj, config.seed, &mut bin)?;
    std::fs::write(cli.out.join("trajectory.bin"), bin)?;
    let mut outcome = ExperimentOutcome::default();
    outcome.details.push((
        "snapshots.csv".into(),
        String::from_utf8(csv).expect("csv is utf8"),
    ));
    outcome.rows.push(wasep_lab::harness::SummaryRow::new(
        "simulate",
        format!("n={}", config.n_list[0]),
        "final_particles",
        traj.final_configuration().particles() as f64,
        0.0,
        1,
    ));
    Ok(outcome)
}

fn run_solve_pde(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let torus = Torus::new(config.d, config.n_list[0])?;
    let u0 = config.u0.build(torus)?;
    let sol = solve_hydro(&u0, &config.field, config.t_final, config.dt)?;
    let mut body = String::from("t,site,u\n");
    let times = 16usize;
    for i in 0..=times {
        let t = config.t_final * i as f64 / times as f64;
        let u = sol.at(t);
        for (site, v) in u.iter().enumerate() {
            body.push_str(&format!("{t},{site},{v}\n"));
        }
    }
    let mut outcome = ExperimentOutcome::default();
    outcome.details.push(("density.csv".into(), body));
    outcome.rows.push(wasep_lab::harness::SummaryRow::new(
        "solve-pde",
        format!("n={}", config.n_list[0]),
        "final_mass",
        sol.at(config.t_final).iter().sum::<f64>(),
        0.0,
        1,
    ));
    Ok(outcome)
}

fn run_master_oracle(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let n = config.n_list[0];
    let torus = Torus::new(config.d, n)?;
    let u0 = config.u0.build(torus)?;
    let sol = solve_hydro(&u0, &config.field, config.t_final, config.dt)?;
    let system = MasterSystem::new(build_rates(&config.field, &torus))?;
    let report = wasep_lab::master::yau_check(&sol, &system, config.t_final, 100)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;

    // Two-route adjoint identity at the final time.
    let u = wasep_lab::hydro::DensityField::new(torus, sol.at(config.t_final))?;
    let u_dot = sol.time_derivative(config.t_final);
    let brute = adjoint_one(&u, sol.dual(), &u_dot, &system, AdjointMode::Brute)?;
    let closed = adjoint_one(&u, sol.dual(), &u_dot, &system, AdjointMode::Closed)?;
    let max_diff = brute
        .iter()
        .zip(&closed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    let mut outcome = ExperimentOutcome::default();
    outcome.details.push((
        format!("entropy_n{n}.csv"),
        String::from_utf8(csv).expect("csv is utf8"),
    ));
    outcome.rows.push(wasep_lab::harness::SummaryRow::new(
        "master-oracle",
        format!("n={n}"),
        "sup_entropy",
        report.max_entropy(),
        0.0,
        1,
    ));
    outcome.rows.push(wasep_lab::harness::SummaryRow::new(
        "master-oracle",
        format!("n={n}"),
        "max_yau_slack",
        report.max_slack(),
        0.0,
        1,
    ));
    outcome.rows.push(wasep_lab::harness::SummaryRow::new(
        "master-oracle",
        format!("n={n}"),
        "adjoint_route_max_diff",
        max_diff,
        0.0,
        1,
    ));
    if max_diff > 1e-10 {
        outcome.failures.push(format!(
            "adjoint routes disagree: max config-wise diff {max_diff:.3e} > 1e-10"
        ));
    }
    if report.max_slack() > 1e-6 {
        outcome
            .failures
            .push(format!("Yau slack {:.3e} > 1e-6", report.max_slack()));
    }
    Ok(outcome)
}

fn dispatch(cli: &Cli) -> Result<(ExperimentConfig, ExperimentOutcome)> {
    Ok(match cli.command {
        Command::HydroRate => {
            let config = load_config(cli, ExperimentConfig::default_hydro_rate())?;
            let outcome = run_hydro_rate(&config)?;
            (config, outcome)
        }
        Command::Clt => {
            let config = load_config(cli, ExperimentConfig::default_clt())?;
            let outcome = run_equilibrium_clt(&config)?;
            (config, outcome)
        }
        Command::Bg => {
            let config = load_config(cli, ExperimentConfig::default_bg())?;
            let outcome = run_bg_decay(&config)?;
            (config, outcome)
        }
        Command::Entropy => {
            let config = load_config(cli, ExperimentConfig::default_entropy())?;
            let outcome = run_entropy_growth(&config)?;
            (config, outcome)
        }
        Command::Flows => {
            let config = load_config(cli, ExperimentConfig::default_flows())?;
            let outcome = run_flow_sweep(&config)?;
            (config, outcome)
        }
        Command::Simulate => {
            let config = load_config(cli, {
                let mut c = ExperimentConfig::default_clt();
                c.experiment = "simulate".into();
                c.n_list = vec![64];
                c
            })?;
            let outcome = run_simulate(cli, &config)?;
            (config, outcome)
        }
        Command::SolvePde => {
            let config = load_config(cli, {
                let mut c = ExperimentConfig::default_hydro_rate();
                c.experiment = "solve-pde".into();
                c.n_list = vec![64];
                c
            })?;
            let outcome = run_solve_pde(&config)?;
            (config, outcome)
        }
        Command::MasterOracle => {
            let config = load_config(cli, {
                let mut c = ExperimentConfig::default_entropy();
                c.experiment = "master-oracle".into();
                c.n_list = vec![8];
                c
            })?;
            let outcome = run_master_oracle(&config)?;
            (config, outcome)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = if cli.deterministic {
        1
    } else {
        cli.workers.unwrap_or_else(num_cpus)
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .ok();

    match dispatch(&cli).and_then(|(config, outcome)| {
        write_outcome(&cli, &config, &outcome)?;
        Ok(outcome)
    }) {
        Ok(outcome) => {
            if outcome.passed() {
                println!("all assertions passed");
                ExitCode::SUCCESS
            } else {
                for failure in &outcome.failures {
                    eprintln!("FAILED: {failure}");
                }
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn num_cpus() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}
