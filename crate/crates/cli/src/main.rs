mod args;
mod commands;
mod meta;
mod verify;

use clap::Parser;

use args::{Cli, Command};
use commands::CliResult;

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Binarize(a) => commands::binarize(a),
        Command::SimulateGrid(a) => commands::simulate_grid(a),
        Command::Measure(a) => commands::measure(a),
        Command::Scc(a) => commands::scc(a),
        Command::EtaSweep(a) => commands::eta(a),
        Command::Waypoints(a) => commands::waypoints(a),
        Command::Epochs(a) => commands::epochs(a),
        Command::ExportDot(a) => commands::export_dot(a),
        Command::Verify(a) => verify::verify(a),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind, e.message);
            std::process::exit(e.code);
        }
    }
}
