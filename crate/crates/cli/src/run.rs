//! Command execution, exit codes and report assembly.

use std::path::PathBuf;

use ecomdo_core::design::DesignVector;
use ecomdo_core::materials::{ashby_indices, co2_per_kg, InterpolationMode};
use ecomdo_core::optimizer::{
    co2_ratio_sweep, evaluate, multi_start, optimize, MaterialChoice, MultiStartOutcome, Objective, Problem, RunResult,
    RunStatus,
};
use ecomdo_core::Error as CoreError;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::report::{write_report, IndexRow, MassShares, Metadata, Optimum, Report, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Mass minimization with the validation material frozen.
    Validate,
    /// One two-phase optimization.
    Optimize,
    /// Every start of the multi-start plan.
    Multistart,
    /// Material selection against the CO2 ratio of two materials.
    Sweep,
    /// Buckling and strength eco-indices of the catalogue.
    Indices,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Validate => "validate",
            Self::Optimize => "optimize",
            Self::Multistart => "multistart",
            Self::Sweep => "sweep",
            Self::Indices => "indices",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub objective: Option<Objective>,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("no feasible design: {0}")]
    Infeasible(String),
    #[error("analysis failed: {0}")]
    Analysis(String),
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Infeasible(_) => 3,
            Self::Analysis(_) | Self::Io(_) => 4,
        }
    }
}

fn core_error(e: CoreError) -> CliError {
    match e {
        CoreError::AllRunsFailed { ref statuses } if statuses.iter().any(|s| s != "mda_failed") => {
            CliError::Infeasible(e.to_string())
        }
        CoreError::InvalidInput(_) | CoreError::InvalidCatalogue(_) | CoreError::InvalidMaterial { .. } => {
            CliError::Config(ConfigError::Invalid {
                field: "input".into(),
                message: e.to_string(),
            })
        }
        _ => CliError::Analysis(e.to_string()),
    }
}

/// Result of a command: the report, where it went and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub dir: PathBuf,
    pub exit_code: i32,
}

/// Run `cmd`, write its report and return the outcome. Failures that
/// happen after the report directory is known still write a report with
/// the diagnostic before returning the error's exit code.
pub fn run_command(cmd: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    let objective = opts.objective.unwrap_or(cfg.objective);
    let hash = cfg.hash();
    let now = chrono::Utc::now();
    let run_id = format!("{}-{}-{}", cmd.name(), now.format("%Y%m%dT%H%M%S%3f"), &hash[..8]);
    let dir = opts.out.clone().unwrap_or_else(|| cfg.output.dir.clone()).join(&run_id);
    let metadata = Metadata {
        command: cmd.name().into(),
        run_id,
        config_hash: hash,
        timestamp: now.to_rfc3339(),
        seed: opts.seed,
        jobs: opts.jobs,
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let mut report = Report {
        metadata,
        objective: match (cmd, objective) {
            (Command::Validate, _) | (_, Objective::Mass) => "mass".into(),
            _ => "co2".into(),
        },
        runs: Vec::new(),
        best: None,
        best_so_far: Vec::new(),
        sweep: None,
        flip_threshold: None,
        indices: Vec::new(),
        diagnostic: None,
    };
    let mut runs = Vec::new();
    let result = execute(cmd, cfg, opts, objective, &mut report, &mut runs);
    if let Err(e) = &result {
        report.diagnostic = Some(e.to_string());
    }
    let files = write_report(&dir, &report, &runs, &cfg.to_toml())?;
    for f in &files {
        log::info!("wrote {}", f.display());
    }
    let exit_code = match result {
        Ok(()) => match &report.best {
            Some(b) if matches!(b.status, RunStatus::Infeasible | RunStatus::MdaFailed) => 3,
            _ => 0,
        },
        Err(e) => e.exit_code(),
    };
    Ok(Outcome {
        report,
        dir,
        exit_code,
    })
}

fn execute(
    cmd: Command,
    cfg: &RunConfig,
    opts: &RunOptions,
    objective: Objective,
    report: &mut Report,
    runs: &mut Vec<RunResult>,
) -> Result<(), CliError> {
    let catalogue = cfg.catalogue()?;
    match cmd {
        Command::Indices => {
            report.indices = catalogue
                .records()
                .iter()
                .map(|r| IndexRow {
                    name: r.name.clone(),
                    density_kg_m3: r.density,
                    co2_kg_per_kg: co2_per_kg(r),
                    indices: ashby_indices(r),
                })
                .collect();
            Ok(())
        }
        Command::Validate => {
            let rec = catalogue.get(&cfg.validation.material).expect("checked at load");
            let material = MaterialChoice::Frozen {
                spar_density: rec.density,
                skin_density: rec.density,
            };
            let problem = cfg.problem(Objective::Mass, material)?;
            let start = cfg
                .validation
                .start
                .clone()
                .unwrap_or_else(|| DesignVector::validation_case(rec.density));
            let r = optimize(&problem, &start, &cfg.optimizer).map_err(core_error)?;
            finish_single(&problem, cfg.optimizer.penalty, r, report, runs)
        }
        Command::Optimize => {
            let problem = cfg.problem(objective, cfg.material_choice(&catalogue)?)?;
            let start = match &cfg.start.design {
                Some(d) => d.clone(),
                None => cfg.multistart.plan().enumerate().map_err(core_error)?.remove(0),
            };
            let r = optimize(&problem, &start, &cfg.optimizer).map_err(core_error)?;
            finish_single(&problem, cfg.optimizer.penalty, r, report, runs)
        }
        Command::Multistart => {
            let problem = cfg.problem(objective, cfg.material_choice(&catalogue)?)?;
            let starts = starts(cfg, opts.seed)?;
            log::info!("running {} starts", starts.len());
            let out = multi_start(&problem, &starts, &cfg.optimizer, opts.jobs);
            match out {
                Ok(out) => {
                    record_outcome(&problem, cfg.optimizer.penalty, &out, report)?;
                    *runs = out.runs;
                    Ok(())
                }
                Err(e) => Err(core_error(e)),
            }
        }
        Command::Sweep => {
            let problem = cfg.problem(Objective::Co2, MaterialChoice::Free)?;
            let low = catalogue.get(&cfg.sweep.low).expect("checked at load");
            let high = catalogue.get(&cfg.sweep.high).expect("checked at load");
            let starts = starts(cfg, opts.seed)?;
            let s = co2_ratio_sweep(&problem, low, high, &cfg.sweep.ratios, &starts, &cfg.optimizer, opts.jobs)
                .map_err(core_error)?;
            report.flip_threshold = s.flip_threshold();
            report.sweep = Some(s);
            Ok(())
        }
    }
}

/// Plan starts, optionally a seeded random subset.
fn starts(cfg: &RunConfig, seed: u64) -> Result<Vec<DesignVector<f64>>, CliError> {
    let mut all = cfg.multistart.plan().enumerate().map_err(core_error)?;
    if let Some(n) = cfg.multistart.sample {
        if n < all.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx: Vec<usize> = (0..all.len()).collect();
            idx.shuffle(&mut rng);
            idx.truncate(n);
            idx.sort_unstable();
            all = idx.into_iter().map(|i| all[i].clone()).collect();
        }
    }
    Ok(all)
}

/// Re-run the analysis at the reported design with the interpolation the
/// optimizer finished with.
fn optimum(problem: &Problem, penalty: f64, index: usize, r: &RunResult) -> Result<Option<Optimum>, CliError> {
    let Some(e) = &r.evaluation else {
        return Ok(None);
    };
    let again = evaluate(problem, &e.design, InterpolationMode::Penalized { p: penalty }).map_err(core_error)?;
    Ok(Some(Optimum {
        run: index,
        status: r.status,
        spar_material: r.spar_material.clone(),
        skin_material: r.skin_material.clone(),
        evaluation: e.clone(),
        mass_shares: MassShares::new(&e.mass),
        revalidated_objective: again.objective,
        revalidation_error: ((again.objective - e.objective) / e.objective).abs(),
    }))
}

fn finish_single(problem: &Problem, penalty: f64, r: RunResult, report: &mut Report, runs: &mut Vec<RunResult>) -> Result<(), CliError> {
    report.runs.push(RunSummary::new(0, &r));
    report.best = optimum(problem, penalty, 0, &r)?;
    report.best_so_far = vec![r.is_feasible().then(|| r.objective()).flatten()];
    let status = r.status;
    runs.push(r);
    match status {
        RunStatus::MdaFailed => Err(CliError::Analysis("the coupled analysis failed at the start design".into())),
        _ => Ok(()),
    }
}

fn record_outcome(problem: &Problem, penalty: f64, out: &MultiStartOutcome, report: &mut Report) -> Result<(), CliError> {
    report.runs = out.runs.iter().enumerate().map(|(k, r)| RunSummary::new(k, r)).collect();
    report.best = optimum(problem, penalty, out.best, out.best_run())?;
    report.best_so_far = out.best_so_far.clone();
    Ok(())
}
