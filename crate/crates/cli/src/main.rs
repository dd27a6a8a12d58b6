use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use ecomdo::{load_config, run_command, Command, RunOptions};
use ecomdo_core::optimizer::Objective;

/// Eco-design optimization of a solar HALE wing.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for multi-start runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output root; reports go to <DIR>/<run-id>/.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the configured objective.
    #[arg(long, value_parser = parse_objective)]
    objective: Option<Objective>,
    /// Seed for sampled multi-start plans.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    match s {
        "mass" => Ok(Objective::Mass),
        "co2" => Ok(Objective::Co2),
        _ => Err(format!("expected `mass` or `co2`, got `{s}`")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ECOMDO_LOG", "warn")).init();
    let args = Args::parse();
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: configuration: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        jobs: args.jobs,
        out: args.out,
        objective: args.objective,
        seed: args.seed,
    };
    match run_command(args.command, &cfg, &opts) {
        Ok(out) => {
            print_summary(&out);
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn print_summary(out: &ecomdo::Outcome) {
    let r = &out.report;
    if let Some(d) = &r.diagnostic {
        eprintln!("error: {d}");
    }
    for row in &r.indices {
        println!(
            "{:<12} {:>8.1} kg/m3  buckling {:.4}  strength {:.0}",
            row.name, row.density_kg_m3, row.indices.buckling, row.indices.strength
        );
    }
    if let Some(s) = &r.sweep {
        for p in &s.points {
            println!(
                "ratio {:.3}: spar {}, skin {}, {:.1} kgCO2",
                p.ratio,
                p.spar_material.as_deref().unwrap_or("-"),
                p.skin_material.as_deref().unwrap_or("-"),
                p.objective
            );
        }
        match r.flip_threshold {
            Some(t) => println!("flip threshold {t:.3}"),
            None => println!("no flip inside the sampled ratios"),
        }
    }
    if let Some(b) = &r.best {
        let e = &b.evaluation;
        println!(
            "best run {} ({:?}): {} {:.3}, spar {}, skin {}",
            b.run,
            b.status,
            r.objective,
            e.objective,
            b.spar_material.as_deref().unwrap_or("-"),
            b.skin_material.as_deref().unwrap_or("-")
        );
        println!(
            "mass {:.1} kg (wing {:.1}, batteries {:.1}, solar {:.1}, propulsion {:.1}), CO2 {:.1} kg",
            e.mass.total, e.mass.wing, e.mass.batteries, e.mass.solar_panels, e.mass.propulsion, e.co2.total
        );
        println!(
            "span {:.2} m, root chord {:.2} m, CL {:.3}, power {:.0} W",
            e.design.span, e.design.root_chord, e.performance.cl, e.performance.power_needed_w
        );
    }
    println!("report: {}", out.dir.display());
}
