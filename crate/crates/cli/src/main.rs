//! Command-line driver: parses a JSON config, dispatches to the matching
//! runner, writes CSV/JSON outputs plus a run manifest, and maps failures
//! to exit codes (1 = validation, 2 = numerical failure).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kawasaki_gf::bounds::{
    existence_time, general_hop_bound, kawasaki_operator_bound, operator_gap_bound,
    verify_bound_randomized, BoundVariant, ScaleParameters,
};
use kawasaki_gf::harness::{self, write_manifest};
use kawasaki_gf::{Error, Result};

#[derive(Parser)]
#[command(name = "kawagf", version, about = "Hopping-dynamics and mean-field toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicated event-driven simulation of the hopping dynamics.
    Simulate(ConfigArg),
    /// Solve the mean-field kinetic equation on a periodic grid.
    Vlasov(ConfigArg),
    /// Generating-functional checks: operator sweep, functional-equation
    /// residual, Poisson chaos comparison.
    GfCheck(ConfigArg),
    /// Particles-versus-kinetic-equation scaling experiment.
    Scaling(ConfigArg),
    /// Norm-bound table and randomized falsification harness.
    Bounds(BoundsArgs),
    /// Two-particle reversibility check against the pair Gibbs density.
    Equilibrium(ConfigArg),
}

#[derive(Args)]
struct ConfigArg {
    /// Path to the JSON config for this subcommand.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    alpha0: f64,
    /// L1 norm of the hopping kernel.
    #[arg(long = "a-l1")]
    a_l1: f64,
    /// L1 norm of the pair potential.
    #[arg(long = "phi-l1")]
    phi_l1: f64,
    /// Defaults to alpha.
    #[arg(long = "alpha-prime")]
    alpha_prime: Option<f64>,
    /// Defaults to alpha0.
    #[arg(long = "alpha-dprime")]
    alpha_dprime: Option<f64>,
    /// Scaling parameter for the gap bound.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Sup norm of the pair potential (enables the gap bound row).
    #[arg(long = "phi-linf")]
    phi_linf: Option<f64>,
    /// JSON config for the randomized bound verifier.
    #[arg(long = "verify-config")]
    verify_config: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<(T, Vec<u8>)> {
    let bytes = std::fs::read(path)?;
    let parsed = serde_json::from_slice(&bytes)?;
    Ok((parsed, bytes))
}

fn run_simulate(arg: &ConfigArg) -> Result<()> {
    let (cfg, bytes): (harness::SimulateConfig, _) = load_config(&arg.config)?;
    let output = harness::run_simulate(&cfg)?;
    harness::write_simulate_outputs(&cfg, &output)?;
    write_manifest(&cfg.out_dir, "simulate", &bytes, cfg.seed)?;
    println!(
        "simulate: {} replicas x {} snapshots written to {}",
        output.snapshots.len(),
        cfg.snapshot_times.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn run_vlasov(arg: &ConfigArg) -> Result<()> {
    let (cfg, bytes): (harness::VlasovConfig, _) = load_config(&arg.config)?;
    let traj = harness::run_vlasov(&cfg)?;
    harness::write_vlasov_outputs(&cfg, &traj)?;
    write_manifest(&cfg.out_dir, "vlasov", &bytes, 0)?;
    println!(
        "vlasov: {} output times written to {}",
        traj.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn run_gf_check(arg: &ConfigArg) -> Result<()> {
    let (cfg, bytes): (harness::GfCheckConfig, _) = load_config(&arg.config)?;
    let report = harness::run_gf_check(&cfg)?;
    harness::write_gf_check_outputs(&cfg, &report)?;
    write_manifest(&cfg.out_dir, "gf-check", &bytes, cfg.seed)?;
    println!(
        "gf-check: gap slope {:.4}, consistency residual {:.3e} (relative {:.3e}), \
         chaos error {:.3e} (stderr {:.3e})",
        report.slope,
        report.consistency.residual,
        report.consistency.relative_residual,
        report.chaos.abs_error,
        report.chaos.stderr
    );
    Ok(())
}

fn run_scaling(arg: &ConfigArg) -> Result<()> {
    let (cfg, bytes): (harness::ScalingConfig, _) = load_config(&arg.config)?;
    let report = harness::run_scaling_experiment(&cfg)?;
    harness::write_scaling_outputs(&cfg, &report)?;
    write_manifest(&cfg.out_dir, "scaling", &bytes, cfg.seed)?;
    println!(
        "scaling: {} epsilon values x {} times written to {}",
        report.epsilons.len(),
        report.observation_times.len(),
        cfg.out_dir.display()
    );
    for rec in &report.density_errors {
        println!(
            "  epsilon {:.4} t {:.4}: L1 {:.4e}  Linf {:.4e}",
            rec.epsilon, rec.time, rec.l1_error, rec.linf_error
        );
    }
    Ok(())
}

fn run_equilibrium(arg: &ConfigArg) -> Result<()> {
    let (cfg, bytes): (harness::EquilibriumConfig, _) = load_config(&arg.config)?;
    cfg.validate()?;
    let torus = cfg.torus.build()?;
    let (a, phi) = cfg.kernels()?;
    let report = harness::run_equilibrium_check(
        torus,
        a,
        phi,
        cfg.epsilon,
        cfg.t_burn,
        cfg.t_sample,
        cfg.sample_interval,
        cfg.bins,
        cfg.seed,
    )?;
    harness::write_equilibrium_outputs(&cfg, &report)?;
    write_manifest(&cfg.out_dir, "equilibrium", &bytes, cfg.seed)?;
    println!(
        "equilibrium: chi-square {:.3} vs threshold {:.3} (dof {}) -> {}",
        report.chi_square,
        report.threshold,
        report.dof,
        if report.passed { "pass" } else { "FAIL" }
    );
    if !report.passed {
        return Err(Error::Stats("equilibrium histogram failed the chi-square test".into()));
    }
    Ok(())
}

fn run_bounds(args: &BoundsArgs) -> Result<()> {
    let alpha_prime = args.alpha_prime.unwrap_or(args.alpha);
    let alpha_dprime = args.alpha_dprime.unwrap_or(args.alpha0);
    let params = ScaleParameters::new(
        args.alpha,
        alpha_prime,
        alpha_dprime,
        args.alpha0,
        args.epsilon,
    )?;
    let mut rows: Vec<(String, f64)> = Vec::new();
    rows.push((
        "existence time T (conservative estimate)".into(),
        existence_time(args.alpha, args.alpha0, args.a_l1, args.phi_l1)?,
    ));
    rows.push((
        "hop operator bound".into(),
        kawasaki_operator_bound(&params, args.a_l1, args.phi_l1)?,
    ));
    if alpha_prime < alpha_dprime {
        rows.push((
            "general hop bound (c0 = 1, c1 = ||phi||_L1)".into(),
            general_hop_bound(1.0, args.phi_l1, alpha_dprime, alpha_prime, args.a_l1)?,
        ));
    }
    if let (Some(_), Some(phi_linf)) = (args.epsilon, args.phi_linf) {
        rows.push((
            "operator gap bound".into(),
            operator_gap_bound(&params, args.a_l1, args.phi_l1, phi_linf, 1.0)?,
        ));
    }
    println!("{:<48} {:>16}", "formula", "value");
    for (name, value) in &rows {
        println!("{name:<48} {value:>16.6}");
    }

    let mut checks = Vec::new();
    if let Some(path) = &args.verify_config {
        let (cfg, _bytes): (harness::BoundsVerifyConfig, _) = load_config(path)?;
        cfg.validate()?;
        let torus = cfg.torus.build()?;
        let grid = kawasaki_gf::vlasov::Grid::new(torus, cfg.grid_n)?;
        let (a, phi) = cfg.kernels()?;
        let rho = cfg.rho0.build(grid)?;
        let vparams = ScaleParameters::new(
            cfg.alpha,
            cfg.alpha_prime,
            cfg.alpha_dprime,
            cfg.alpha0,
            cfg.epsilon,
        )?;
        let variants = [
            BoundVariant::GeneralHop,
            BoundVariant::KawasakiOperator,
            BoundVariant::OperatorGap,
        ];
        for variant in variants {
            if variant == BoundVariant::OperatorGap && cfg.epsilon.is_none() {
                continue;
            }
            let check =
                verify_bound_randomized(variant, &rho, &vparams, &a, &phi, cfg.n_theta, cfg.seed)?;
            println!(
                "verify {:<24} max ratio {:.6} over {} samples (seed {})",
                check.variant, check.max_ratio, check.n_samples, check.seed
            );
            if check.max_ratio > 1.0 {
                return Err(Error::Numerics(format!(
                    "bound violated: {} ratio {} > 1",
                    check.variant, check.max_ratio
                )));
            }
            checks.push(check);
        }
    }

    if let Some(out) = &args.out {
        #[derive(serde::Serialize)]
        struct BoundsReport {
            table: Vec<(String, f64)>,
            checks: Vec<kawasaki_gf::bounds::BoundCheck>,
        }
        let report = BoundsReport { table: rows, checks };
        if let Some(parent) = out.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = std::fs::File::create(out)?;
        serde_json::to_writer_pretty(file, &report)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(arg) => run_simulate(arg),
        Command::Vlasov(arg) => run_vlasov(arg),
        Command::GfCheck(arg) => run_gf_check(arg),
        Command::Scaling(arg) => run_scaling(arg),
        Command::Bounds(args) => run_bounds(args),
        Command::Equilibrium(arg) => run_equilibrium(arg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
