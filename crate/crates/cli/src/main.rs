//! Command-line front end: run a scenario through the pipeline, or scan a
//! built-in family for a condition threshold, and emit CSV/SVG artifacts.
//!
//! Exit codes: 0 = requested stages passed, 2 = an admissibility condition
//! is violated (witnesses in the report), 1 = input or geometry error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lgot_core::admissibility::ConditionId;
use lgot_core::emit;
use lgot_core::pipeline::{self, RunOptions};
use lgot_core::scenario::Scenario;

#[derive(Parser)]
#[command(name = "lgot", about = "planar least gradient solver via optimal transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in (builtin:NAME) through the pipeline.
    Run {
        /// Path to a scenario file, or builtin:NAME.
        scenario: String,
        /// Numeric parameter overrides, repeatable: -p delta=0.25
        #[arg(short, long = "param", value_parser = parse_kv)]
        param: Vec<(String, f64)>,
        /// Stop after the admissibility checks.
        #[arg(long)]
        check_only: bool,
        /// Solve the discrete assignment oracle as well.
        #[arg(long)]
        oracle: bool,
        /// Split pair arcs at singular boundary points before mapping.
        #[arg(long)]
        repartition: bool,
        /// Raster / reconstruction grid resolution.
        #[arg(long)]
        grid: Option<usize>,
        /// Number of plan atoms.
        #[arg(long)]
        atoms: Option<usize>,
        /// Seed for sampled probes.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated artifact kinds: csv, svg.
        #[arg(long, value_delimiter = ',')]
        emit: Vec<String>,
    },
    /// Bisect a built-in family for a condition threshold.
    Scan {
        /// Built-in family name (e.g. delta_square).
        family: String,
        /// Parameter to vary.
        param: String,
        /// Lower end of the range.
        lo: f64,
        /// Upper end of the range.
        hi: f64,
        /// Condition id: H2, H3, L2, A2, A3, A3~.
        condition: String,
        /// Fixed numeric parameters, repeatable: -p b=0.5
        #[arg(short = 'p', long = "param", value_parser = parse_kv)]
        fixed: Vec<(String, f64)>,
        /// Refinement cap for partition conditions.
        #[arg(long, default_value_t = 64)]
        refine_max: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for the scan CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {s}"))?;
    let v: f64 = v.parse().map_err(|e| format!("{k}: {e}"))?;
    Ok((k.to_string(), v))
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            param,
            check_only,
            oracle,
            repartition,
            grid,
            atoms,
            seed,
            out,
            emit,
        } => {
            let over: BTreeMap<String, f64> = param.into_iter().collect();
            let sc = load_scenario(&scenario, &over)?;
            let mut opts = RunOptions::from_scenario(&sc);
            opts.check_only = check_only;
            opts.with_oracle = oracle;
            opts.repartition = repartition;
            if let Some(g) = grid {
                opts.grid = g;
            }
            if let Some(a) = atoms {
                opts.atoms = a;
            }
            if let Some(s) = seed {
                opts.seed = s;
            }
            let outcome = pipeline::run(&sc, &opts).map_err(|e| e.to_string())?;
            print!("{}", emit::report_text(&outcome));
            if let Some(dir) = out {
                write_artifacts(&outcome, &dir, &emit)?;
            }
            Ok(if outcome.violated {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Scan {
            family,
            param,
            lo,
            hi,
            condition,
            fixed,
            refine_max,
            seed,
            out,
        } => {
            let cond = ConditionId::from_label(&condition)
                .ok_or_else(|| format!("unknown condition {condition}"))?;
            let base: BTreeMap<String, f64> = fixed.into_iter().collect();
            let scan = pipeline::scan_builtin(
                &family,
                &param,
                lo,
                hi,
                cond,
                &base,
                refine_max,
                seed.unwrap_or(42),
            )
            .map_err(|e| e.to_string())?;
            println!(
                "{family} {param} in [{lo}, {hi}] / condition {}: frontier = {:.12e}",
                cond.label(),
                scan.frontier
            );
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
                let path = dir.join(format!("scan_{family}_{param}.csv"));
                std::fs::write(&path, emit::scan_csv(&scan.rows)).map_err(|e| e.to_string())?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_scenario(spec: &str, over: &BTreeMap<String, f64>) -> Result<Scenario, String> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return Scenario::builtin(name, over).map_err(|e| e.to_string());
    }
    let text = std::fs::read_to_string(spec).map_err(|e| format!("{spec}: {e}"))?;
    let sc = Scenario::from_toml_str(&text).map_err(|e| e.to_string())?;
    if !over.is_empty() {
        return Err("parameter overrides apply to built-ins only".into());
    }
    Ok(sc)
}

fn write_artifacts(
    outcome: &pipeline::RunOutcome,
    dir: &Path,
    kinds: &[String],
) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let write = |name: &str, content: String| -> Result<(), String> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| e.to_string())?;
        println!("wrote {}", path.display());
        Ok(())
    };
    let kinds: Vec<&str> = if kinds.is_empty() {
        vec!["csv", "svg"]
    } else {
        kinds.iter().map(|s| s.as_str()).collect()
    };
    write("report.txt", emit::report_text(outcome))?;
    if kinds.contains(&"csv") {
        write("verdicts.csv", emit::verdicts_csv(outcome))?;
        write("decomposition.csv", emit::decomposition_csv(outcome))?;
        write("rays.csv", emit::rays_csv(outcome))?;
        if let Some(r) = &outcome.raster {
            write("raster.csv", emit::raster_csv(r))?;
        }
        if let Some(f) = &outcome.field {
            write("u.csv", emit::u_csv(f))?;
        }
        if outcome.oracle_cost.is_some() {
            write("oracle.csv", emit::oracle_csv(outcome))?;
        }
        if let Some(m) = &outcome.cross_cell {
            write("cross_cell.csv", emit::cross_cell_csv(m))?;
        }
    }
    if kinds.contains(&"svg") {
        write("figure.svg", emit::svg(outcome, 15))?;
    }
    Ok(())
}
