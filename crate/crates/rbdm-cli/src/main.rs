use clap::Parser;

use rbdm_cli::config::{Cli, RunConfig};
use rbdm_cli::error::CliError;
use rbdm_cli::run::run;

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    let config = match RunConfig::try_from(cli) {
        Ok(config) => config,
        Err(e) => fail(&e),
    };
    match run(&config) {
        Ok(outcome) => {
            println!(
                "analyzed {} observations ({} retained draws); wrote {} files to {}",
                outcome.t_len,
                outcome.n_draws,
                outcome.files.len(),
                outcome.out_dir.display()
            );
            if outcome.events.is_empty() {
                println!("no weights fell below the flag threshold");
            }
            for e in &outcome.events {
                println!(
                    "flagged {} at {} (posterior weight {:.4}, rank {})",
                    e.kind, e.timestamp, e.omega_mean, e.rank
                );
            }
        }
        Err(e) => fail(&e),
    }
}

/// Prints a machine-readable error record to stderr and exits nonzero.
fn fail(e: &CliError) -> ! {
    let record = serde_json::json!({
        "error": { "kind": e.kind(), "message": e.to_string() }
    });
    eprintln!("{record}");
    std::process::exit(1);
}
