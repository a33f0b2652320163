use std::process::ExitCode;

use clap::Parser;
use glitch_cli::args::{fixture_spec, Cli, Cmd};
use glitch_cli::{cmd_check_invariant, cmd_compare, cmd_gen_fixture, cmd_reconstruct, CliError, EXIT_USAGE, EXIT_VIOLATION};

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GLITCH_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GLITCH_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Cmd::Reconstruct { input, common } => {
            let out = cmd_reconstruct(&input, &common.to_config()?)?;
            println!("{} cuboids, {} points -> {}", out.report.input.cuboids.unwrap_or(0), out.cloud.len(), common.out.display());
            Ok(true)
        }
        Cmd::Compare { a, b, rotate, common } => {
            let out = cmd_compare(&a, &b, rotate, &common.to_config()?)?;
            let c = out.report.raw.cells;
            println!("{} numeric, {} none, {} inf cells -> {}", c.num, c.none, c.inf, common.out.display());
            Ok(true)
        }
        Cmd::CheckInvariant { original, rotated, rotate, tolerance, slicer_cmd, common } => {
            let mut cfg = common.to_config()?;
            cfg.tolerance = tolerance;
            cfg.slicer_cmd = slicer_cmd;
            let out = cmd_check_invariant(&original, &rotated, &rotate, &cfg)?;
            let verdict = out.report.verdict.as_ref().expect("check-invariant sets a verdict");
            println!("{}: {}", if verdict.pass { "PASS" } else { "FAIL" }, verdict.reason);
            Ok(verdict.pass)
        }
        Cmd::GenFixture { kind, size, spacing, nozzle_diameter, layer_height, hole, rotate_z, output } => {
            let spec = fixture_spec(kind, size, spacing, nozzle_diameter, layer_height, hole, rotate_z)?;
            let lines = cmd_gen_fixture(&spec, &output)?;
            println!("{lines} lines -> {}", output.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let result = init_threads().and_then(|()| dispatch(cli));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VIOLATION as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
