//! Experiment orchestration: runners behind the CLI subcommands, ensemble
//! management, persistence, and deterministic reporting.

pub mod config;
pub mod equilibrium;
pub mod persist;
pub mod scaling;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::poisson_sample;
use crate::gf::{apply_operator, gf_time_consistency, EmpiricalGf, ExponentialGf, OperatorVariant};
use crate::kmc::KawasakiSystem;
use crate::stats;
use crate::vlasov::{integrate, DensityField, Grid};

pub use config::{
    BoundsVerifyConfig, EquilibriumConfig, GfCheckConfig, Rho0Spec, ScalingConfig, SimulateConfig,
    TorusSpec, VlasovConfig,
};
pub use equilibrium::{run_equilibrium_check, EquilibriumReport};
pub use persist::{fmt_float, fnv1a_hex, write_manifest};
pub use scaling::{run_scaling_experiment, ScalingReport};

/// Density observable of a `simulate` run: per snapshot time, per bin.
#[derive(Debug, Clone, Serialize)]
pub struct DensityObservable {
    pub time: f64,
    pub bin_center: f64,
    pub value: f64,
    pub stderr: f64,
}

/// Outcome of the `simulate` subcommand before persistence.
pub struct SimulateOutput {
    /// Snapshots indexed `[replica][snapshot_time]`.
    pub snapshots: Vec<Vec<crate::kmc::Snapshot>>,
    pub observables: Vec<DensityObservable>,
}

/// Run replicated hopping trajectories from Poisson initial data.
///
/// Replica r uses the seed `config.seed + r`; aggregation is replica-
/// ordered, so results do not depend on scheduling.
pub fn run_simulate(cfg: &SimulateConfig) -> Result<SimulateOutput> {
    cfg.validate()?;
    let torus = cfg.torus.build()?;
    let grid = Grid::new(torus, cfg.grid_n)?;
    let (a, phi) = cfg.kernels()?;
    let rho0 = cfg.rho0.build(grid)?;
    if rho0.quadrature() > config::MAX_EXPECTED_PARTICLES {
        return Err(Error::Config(
            "expected particle count exceeds the desk-scale guard".into(),
        ));
    }
    let snapshots: Result<Vec<Vec<crate::kmc::Snapshot>>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
            let init = poisson_sample(torus, &rho0, &mut rng)?;
            let mut sys = KawasakiSystem::with_rng(init, a, phi, cfg.epsilon, rng)?;
            sys.simulate(cfg.t_end, &cfg.snapshot_times)
        })
        .collect();
    let snapshots = snapshots?;

    let mut observables = Vec::new();
    for (t_idx, &time) in cfg.snapshot_times.iter().enumerate() {
        for b in 0..grid.num_cells() {
            let series: Vec<f64> = snapshots
                .iter()
                .map(|rep| {
                    let config = &rep[t_idx].config;
                    let mut count = 0.0;
                    for p in config.iter_points() {
                        if grid.cell_of_point(p) == b {
                            count += 1.0;
                        }
                    }
                    count / grid.cell_volume()
                })
                .collect();
            let (value, stderr) = stats::mean_stderr(&series);
            observables.push(DensityObservable {
                time,
                bin_center: grid.position(b)[0],
                value,
                stderr,
            });
        }
    }
    Ok(SimulateOutput { snapshots, observables })
}

/// Persist a `simulate` run: per-replica per-time snapshot CSVs plus the
/// density observables CSV.
pub fn write_simulate_outputs(cfg: &SimulateConfig, out: &SimulateOutput) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    for (r, rep) in out.snapshots.iter().enumerate() {
        for (t_idx, snap) in rep.iter().enumerate() {
            let path = cfg.out_dir.join(format!("snapshots_r{r:04}_t{t_idx:03}.csv"));
            let file = std::fs::File::create(path)?;
            let mut w = std::io::BufWriter::new(file);
            snap.config.write_csv(&mut w)?;
        }
    }
    persist::write_csv(
        &cfg.out_dir.join("observables.csv"),
        "time,bin_center,value,stderr",
        out.observables.iter().map(|o| {
            format!(
                "{},{},{},{}",
                fmt_float(o.time),
                fmt_float(o.bin_center),
                fmt_float(o.value),
                fmt_float(o.stderr)
            )
        }),
    )
}

/// Solve the kinetic equation per config and return the trajectory.
pub fn run_vlasov(cfg: &VlasovConfig) -> Result<Vec<(f64, DensityField)>> {
    cfg.validate()?;
    let torus = cfg.torus.build()?;
    let grid = Grid::new(torus, cfg.grid_n)?;
    let (a, phi) = cfg.kernels()?;
    let rho0 = cfg.rho0.build(grid)?;
    integrate(&rho0, cfg.t_end, cfg.dt, &cfg.output_times, &a, &phi)
}

/// Persist a kinetic-equation trajectory: `time,index,x,rho` rows.
pub fn write_vlasov_outputs(cfg: &VlasovConfig, traj: &[(f64, DensityField)]) -> Result<()> {
    let rows = traj.iter().flat_map(|(t, rho)| {
        let grid = rho.grid();
        rho.values()
            .iter()
            .enumerate()
            .map(move |(i, &v)| {
                format!(
                    "{},{},{},{}",
                    fmt_float(*t),
                    i,
                    fmt_float(grid.position(i)[0]),
                    fmt_float(v)
                )
            })
            .collect::<Vec<_>>()
    });
    persist::write_csv(&cfg.out_dir.join("rho.csv"), "time,index,x,rho", rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct GfSweepRecord {
    pub variant: String,
    pub epsilon: f64,
    pub value: f64,
    /// |scaled renormalized - limit| at this epsilon.
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GfConsistencyRecord {
    pub time: f64,
    pub dt_fd: f64,
    pub residual: f64,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GfChaosRecord {
    pub theta_id: String,
    pub b_empirical: f64,
    pub b_exponential: f64,
    pub stderr: f64,
    pub abs_error: f64,
}

/// Report of the `gf-check` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct GfCheckReport {
    pub vlasov_value: f64,
    pub sweep: Vec<GfSweepRecord>,
    /// Log-log slope of the gap against epsilon.
    pub slope: f64,
    pub consistency: GfConsistencyRecord,
    pub chaos: GfChaosRecord,
}

/// Run the generating-functional checks: the epsilon sweep of the operator
/// gap, the functional-equation consistency residual, and the empirical
/// Poisson ensemble against the exponential functional.
pub fn run_gf_check(cfg: &GfCheckConfig) -> Result<GfCheckReport> {
    cfg.validate()?;
    let torus = cfg.torus.build()?;
    let grid = Grid::new(torus, cfg.grid_n)?;
    let (a, phi) = cfg.kernels()?;
    let rho0 = cfg.rho0.build(grid)?;
    cfg.theta.validate(torus)?;

    let vlasov_value = apply_operator(&rho0, &cfg.theta, OperatorVariant::Vlasov, &a, &phi)?;
    let mut sweep = Vec::new();
    let mut ln_eps = Vec::new();
    let mut ln_gap = Vec::new();
    for &eps in &cfg.epsilons {
        let value = apply_operator(
            &rho0,
            &cfg.theta,
            OperatorVariant::ScaledRenormalized { epsilon: eps },
            &a,
            &phi,
        )?;
        let gap = (value - vlasov_value).abs();
        if gap > 0.0 {
            ln_eps.push(eps.ln());
            ln_gap.push(gap.ln());
        }
        sweep.push(GfSweepRecord {
            variant: "scaled-renormalized".into(),
            epsilon: eps,
            value,
            gap,
        });
    }
    let slope = if ln_eps.len() >= 2 {
        stats::linear_slope(&ln_eps, &ln_gap)
    } else {
        f64::NAN
    };

    // Functional-equation residual at the requested time.
    let times = [
        cfg.consistency_time - cfg.dt_fd,
        cfg.consistency_time,
        cfg.consistency_time + cfg.dt_fd,
    ];
    let traj = integrate(
        &rho0,
        cfg.consistency_time + cfg.dt_fd,
        cfg.pde_dt,
        &times,
        &a,
        &phi,
    )?;
    let residual = gf_time_consistency(&traj, &cfg.theta, cfg.consistency_time, cfg.dt_fd, &a, &phi)?;
    let rho_t = &traj[1].1;
    let op = apply_operator(rho_t, &cfg.theta, OperatorVariant::Vlasov, &a, &phi)?;
    let consistency = GfConsistencyRecord {
        time: cfg.consistency_time,
        dt_fd: cfg.dt_fd,
        residual,
        relative_residual: residual / op.abs().max(f64::MIN_POSITIVE),
    };

    // Poisson chaos at t = 0: empirical versus exponential.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ensemble: Result<Vec<_>> = (0..cfg.chaos_replicas)
        .map(|_| poisson_sample(torus, &rho0, &mut rng))
        .collect();
    let empirical = EmpiricalGf::new(ensemble?)?;
    let (b_empirical, stderr) = empirical.evaluate_with_stderr(&cfg.theta)?;
    let b_exponential = ExponentialGf::new(rho0)?.evaluate(&cfg.theta)?;
    let chaos = GfChaosRecord {
        theta_id: cfg.theta.label().to_string(),
        b_empirical,
        b_exponential,
        stderr,
        abs_error: (b_empirical - b_exponential).abs(),
    };

    Ok(GfCheckReport { vlasov_value, sweep, slope, consistency, chaos })
}

pub fn write_gf_check_outputs(cfg: &GfCheckConfig, report: &GfCheckReport) -> Result<()> {
    persist::write_json(&cfg.out_dir.join("gf_check.json"), report)
}

/// Persist a scaling run: density CSV, gf CSV, report JSON.
pub fn write_scaling_outputs(cfg: &ScalingConfig, report: &ScalingReport) -> Result<()> {
    let density_rows = report.density_profiles.iter().flat_map(|profile| {
        profile
            .centers
            .iter()
            .zip(profile.emp.iter().zip(&profile.pde))
            .map(move |(&x, (&emp, &pde))| {
                format!(
                    "{},{},{},{},{},{}",
                    fmt_float(profile.epsilon),
                    fmt_float(profile.time),
                    fmt_float(x),
                    fmt_float(emp),
                    fmt_float(pde),
                    fmt_float((emp - pde).abs())
                )
            })
            .collect::<Vec<_>>()
    });
    persist::write_csv(
        &cfg.out_dir.join("density.csv"),
        "epsilon,time,x,rho_emp,rho_pde,abs_err",
        density_rows,
    )?;
    persist::write_csv(
        &cfg.out_dir.join("gf.csv"),
        "epsilon,time,theta_id,b_emp,b_pde,stderr",
        report.gf_records.iter().map(|r| {
            format!(
                "{},{},{},{},{},{}",
                fmt_float(r.epsilon),
                fmt_float(r.time),
                r.theta_id,
                fmt_float(r.b_emp),
                fmt_float(r.b_pde),
                fmt_float(r.stderr)
            )
        }),
    )?;
    persist::write_json(&cfg.out_dir.join("report.json"), report)?;
    for (phase, seconds) in &report.runtimes {
        eprintln!("[scaling] {phase}: {seconds:.3}s");
    }
    Ok(())
}

/// Persist an equilibrium run: histogram CSV plus the report JSON.
pub fn write_equilibrium_outputs(cfg: &EquilibriumConfig, report: &EquilibriumReport) -> Result<()> {
    persist::write_csv(
        &cfg.out_dir.join("histogram.csv"),
        "r_lo,r_hi,observed,expected",
        (0..report.observed.len()).map(|b| {
            format!(
                "{},{},{},{}",
                fmt_float(report.bin_edges[b]),
                fmt_float(report.bin_edges[b + 1]),
                report.observed[b],
                fmt_float(report.expected[b])
            )
        }),
    )?;
    persist::write_json(&cfg.out_dir.join("equilibrium.json"), report)
}
