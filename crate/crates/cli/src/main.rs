use clap::Parser;
use std::process::ExitCode;

mod commands;

/// Annealed SMC sampler for low-temperature Gibbs measures, with
/// quadrature/spectral oracles and verification workflows.
#[derive(Parser)]
#[command(name = "asmc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,

    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// Worker thread cap (defaults to the machine's core count).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    match commands::run(cli.command, cli.json) {
        Ok(status) => status,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.to_string(),
                "kind": commands::error_kind(&err),
            });
            eprintln!("{payload}");
            commands::exit_code_for(&err)
        }
    }
}
