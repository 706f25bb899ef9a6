//! Batch experiment runner for the funvol toolkit.
//!
//! Subcommands: `run` executes a JSON experiment spec, `list-corpus`
//! prints the built-in densities and functions, `check` runs the full
//! verification suite. Exit codes: 0 all assertions passed, 1 a numeric
//! assertion failed, 2 spec/descriptor parse errors.

mod runner;
mod spec;

use clap::{Parser, Subcommand};
use funvol::corpus;
use funvol::suite::{self, SuiteConfig};
use runner::{ExperimentResult, RunDefaults};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "funvol", version, about = "Functional intrinsic volume experiments")]
struct Cli {
    /// Worker threads for experiment execution (0 = rayon default).
    /// Results are independent of this setting.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiments of a JSON spec file.
    Run {
        /// Path to the experiment spec (JSON).
        spec_file: PathBuf,
        /// Output directory for per-experiment JSON and the aggregate CSV.
        #[arg(long, default_value = "funvol-out")]
        out_dir: PathBuf,
        /// Default RNG seed for experiments that do not set one.
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Default Grassmannian sample count.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Print the built-in density and function corpus.
    ListCorpus,
    /// Run the full verification suite and write its artifacts.
    Check {
        #[arg(long, default_value = "funvol-check")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Grassmannian samples for the cross-route criterion.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        // A fixed-size pool; the per-sample and per-experiment reductions
        // are index-ordered, so the worker count never changes results.
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            eprintln!("warning: could not configure {} worker(s): {e}", cli.jobs);
        }
    }
    match cli.command {
        Command::Run {
            spec_file,
            out_dir,
            seed,
            samples,
        } => run_command(&spec_file, &out_dir, seed, samples),
        Command::ListCorpus => {
            list_corpus();
            ExitCode::SUCCESS
        }
        Command::Check {
            out_dir,
            seed,
            samples,
        } => check_command(&out_dir, seed, samples),
    }
}

fn run_command(spec_file: &PathBuf, out_dir: &PathBuf, seed: u64, samples: usize) -> ExitCode {
    let spec = match spec::ExperimentSpec::load(spec_file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let base = spec_file
        .parent()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    let defaults = RunDefaults {
        seed,
        sample_count: samples,
    };
    let results = match runner::run_spec(&spec, &base, out_dir, &defaults) {
        Ok(r) => r,
        Err(e) => {
            // Distinguish descriptor/parse problems (exit 2) from numeric
            // failures (propagated through assertion results below).
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let csv_path = out_dir.join("results.csv");
    if let Err(e) = runner::write_csv(&csv_path, &results) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    report_and_exit(&results)
}

fn report_and_exit(results: &[ExperimentResult]) -> ExitCode {
    let mut failed = Vec::new();
    for r in results {
        match r.passed {
            Some(true) => println!("{}: pass (value {:e})", r.id, r.value),
            Some(false) => {
                println!(
                    "{}: FAIL (value {:e}, discrepancy {:e}, tolerance {:e})",
                    r.id,
                    r.value,
                    r.discrepancy.unwrap_or(f64::NAN),
                    r.tolerance.unwrap_or(f64::NAN)
                );
                failed.push(r.id.clone());
            }
            None => println!("{}: value {:e}", r.id, r.value),
        }
    }
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed experiments: {}", failed.join(", "));
        ExitCode::from(1)
    }
}

fn list_corpus() {
    println!("densities:");
    for (id, description) in corpus::density_catalog() {
        println!("  {id:<16} {description}");
    }
    println!("functions:");
    for (id, description) in corpus::function_catalog() {
        println!("  {id:<20} {description}");
    }
}

fn check_command(out_dir: &PathBuf, seed: u64, samples: usize) -> ExitCode {
    let cfg = SuiteConfig {
        seed,
        cross_route_samples: samples,
    };
    let runs = match suite::run_all(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(2);
    }
    let mut all_passed = true;
    let mut rows = Vec::new();
    for run in &runs {
        let ok = run.passed();
        all_passed &= ok;
        println!(
            "criterion {:2} ({}): {}",
            run.index,
            run.name,
            if ok { "PASS" } else { "FAIL" }
        );
        for o in &run.outcomes {
            if !o.passed {
                println!(
                    "    {}: discrepancy {:e} > tolerance {:e}",
                    o.id, o.discrepancy, o.tolerance
                );
            }
            if let Err(e) = runner::write_json_atomic(out_dir, &format!("{}.json", o.id), o) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            rows.push(outcome_to_result(o));
        }
    }
    let csv_path = out_dir.join("results.csv");
    if let Err(e) = runner::write_csv(&csv_path, &rows) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn outcome_to_result(o: &suite::CheckOutcome) -> ExperimentResult {
    ExperimentResult {
        id: o.id.clone(),
        operation: o.operation.clone(),
        j: o.j,
        n: o.n,
        value: o.value,
        stderr: o.stderr,
        oracle: o.oracle,
        discrepancy: Some(o.discrepancy),
        tolerance: Some(o.tolerance),
        passed: Some(o.passed),
        seconds: o.seconds,
        config: spec::ExperimentDef {
            id: o.id.clone(),
            operation: o.operation.clone(),
            density: None,
            function: None,
            function2: None,
            j: o.j,
            n: o.n,
            k: None,
            l: None,
            t: None,
            x: None,
            z: None,
            axes: None,
            region: None,
            seed: None,
            sample_count: None,
            resolution: None,
            expect: None,
        },
    }
}
