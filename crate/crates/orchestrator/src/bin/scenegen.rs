use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Render a synthetic RGB-D sequence with ground truth.
#[derive(Parser)]
#[command(name = "scenegen")]
struct Args {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EMPATHD_LOG", "info")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match empathd_orchestrator::scenegen(&args.config, &args.out) {
        Ok(n) => {
            println!("wrote {n} frames to {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
