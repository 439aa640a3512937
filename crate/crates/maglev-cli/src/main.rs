//! Scenario-driven command line for the maglev conveyor simulator.
//!
//! Exit codes are a stable contract: 0 success, 1 domain error
//! (invalid scenario, unknown node, failed run), 2 I/O or parse
//! error (unreadable file, malformed JSON, malformed flag values).

use clap::{Parser, Subcommand};
use maglev_cli::sweep::{parse_values, set_numeric_field};
use maglev_cli::Failure;
use maglev_sim::dispatch::{route, CongestionMap};
use maglev_sim::scenario::{run_scenario, Scenario, ScenarioError, SimOutput};
use maglev_sim::telemetry::write_csv;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "maglev", version, about = "Deterministic maglev conveyor-line simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a scenario file; prints one diagnostic per line.
    Validate { file: PathBuf },
    /// Run a scenario and write trajectory.csv, events.json and
    /// summary.json into the output directory.
    Simulate {
        file: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the minimum-time route between two nodes as JSON.
    Route {
        file: PathBuf,
        /// Origin node id.
        #[arg(long)]
        from: String,
        /// Destination node id.
        #[arg(long)]
        to: String,
    },
    /// Re-run a scenario once per value of one numeric field,
    /// writing per-value subdirectories and a combined sweep.csv.
    Sweep {
        file: PathBuf,
        /// Dotted path of the field to vary, e.g. line.min_headway
        /// or line.segments.0.v_limit.
        #[arg(long)]
        param: String,
        /// Comma-separated numbers to substitute.
        #[arg(long)]
        values: String,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Cmd::Validate { file } => cmd_validate(file),
        Cmd::Simulate { file, out } => cmd_simulate(file, out),
        Cmd::Route { file, from, to } => cmd_route(file, from, to),
        Cmd::Sweep {
            file,
            param,
            values,
            out,
        } => cmd_sweep(file, param, values, out),
        Cmd::Version => {
            println!("maglev {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(message)) => {
            eprintln!("{message}");
            ExitCode::from(1)
        }
        Err(Failure::Io(message)) => {
            eprintln!("{message}");
            ExitCode::from(2)
        }
    }
}

fn load_scenario(file: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(file)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", file.display())))?;
    Scenario::from_json(&text).map_err(|e| match e {
        ScenarioError::Malformed(_) => Failure::Io(format!("{}: {e}", file.display())),
        other => Failure::Domain(format!("{}: {other}", file.display())),
    })
}

fn run_failure(err: ScenarioError) -> Failure {
    match err {
        ScenarioError::Malformed(_) => Failure::Io(err.to_string()),
        other => Failure::Domain(other.to_string()),
    }
}

fn cmd_validate(file: &Path) -> Result<(), Failure> {
    let scenario = load_scenario(file)?;
    let diagnostics = scenario.diagnostics();
    if diagnostics.is_empty() {
        Ok(())
    } else {
        Err(Failure::Domain(diagnostics.join("\n")))
    }
}

fn cmd_simulate(file: &Path, out: &Path) -> Result<(), Failure> {
    let scenario = load_scenario(file)?;
    let output = run_scenario(&scenario).map_err(run_failure)?;
    write_outputs(out, &output)?;
    println!(
        "simulated {} s: {} events, {} jobs completed",
        scenario.t_end,
        output.events.len(),
        output.summary.jobs_completed
    );
    Ok(())
}

fn cmd_route(file: &Path, from: &str, to: &str) -> Result<(), Failure> {
    let scenario = load_scenario(file)?;
    let found = route(&scenario.line_config(), from, to, &CongestionMap::default())
        .map_err(|e| Failure::Domain(e.to_string()))?;
    // route: null means the destination is not reachable
    let doc = serde_json::json!({ "from": from, "to": to, "route": found });
    println!(
        "{}",
        serde_json::to_string_pretty(&doc).expect("route serializes")
    );
    Ok(())
}

fn cmd_sweep(file: &Path, param: &str, values: &str, out: &Path) -> Result<(), Failure> {
    let values = parse_values(values)?;
    let text = fs::read_to_string(file)
        .map_err(|e| Failure::Io(format!("cannot read {}: {e}", file.display())))?;
    let base: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Io(format!("{}: not valid JSON: {e}", file.display())))?;

    let mut rows = Vec::new();
    for &value in &values {
        let mut doc = base.clone();
        set_numeric_field(&mut doc, param, value)?;
        let scenario: Scenario = serde_json::from_value(doc)
            .map_err(|e| Failure::Domain(format!("{param} = {value}: {e}")))?;
        let output = run_scenario(&scenario).map_err(run_failure)?;
        write_outputs(&out.join(value.to_string()), &output)?;
        rows.push((value, output.summary));
    }

    let mut csv = String::from(
        "value,jobs_completed,throughput,energy_proxy,headway_interventions,distance_total\n",
    );
    for (value, summary) in &rows {
        let distance_total: f64 = summary.distance_traveled.values().sum();
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            value,
            summary.jobs_completed,
            summary.throughput,
            summary.energy_proxy,
            summary.headway_interventions,
            distance_total
        ));
    }
    write_file(&out.join("sweep.csv"), csv.as_bytes())?;
    println!("swept {param} over {} values", rows.len());
    Ok(())
}

fn write_outputs(dir: &Path, output: &SimOutput) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Io(format!("cannot create {}: {e}", dir.display())))?;

    let mut csv = Vec::new();
    write_csv(&output.records, &mut csv)
        .map_err(|e| Failure::Io(format!("trajectory.csv: {e}")))?;
    write_file(&dir.join("trajectory.csv"), &csv)?;

    let events =
        serde_json::to_string_pretty(&output.events).expect("events serialize");
    write_file(&dir.join("events.json"), format!("{events}\n").as_bytes())?;

    let summary =
        serde_json::to_string_pretty(&output.summary).expect("summary serializes");
    write_file(&dir.join("summary.json"), format!("{summary}\n").as_bytes())?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}
