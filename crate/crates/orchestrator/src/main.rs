use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};
use empathd_appsim::Scenario;
use empathd_orchestrator::agent::{run_agent, AgentOptions};
use empathd_orchestrator::api::{run_serve, ServeOptions};
use empathd_orchestrator::bench::{bench, BenchOptions, DEFAULT_TRIALS};
use empathd_orchestrator::config::{DEFAULT_AGENT_PORT, DEFAULT_API_PORT, DEFAULT_SINK_PORT};
use empathd_orchestrator::live::resolve;
use empathd_orchestrator::sink::{Sink, SinkOptions};
use empathd_orchestrator::{run_live, run_offline, scenegen, Error, Mode, PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "empathd", version, about = "Split-interaction impairment pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline offline over a frame sequence, or as the live
    /// orchestrator tier.
    Run {
        #[arg(long, default_value = "offline")]
        mode: String,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// RGB-D sequence; overrides the scenario's `frames`.
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_AGENT_PORT)]
        agent_port: u16,
        #[arg(long, default_value_t = DEFAULT_SINK_PORT)]
        sink_port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        sink_host: String,
        /// Mesh sampling stride in pixels.
        #[arg(long)]
        stride: Option<u32>,
        /// Exponential pose smoothing factor in (0, 1].
        #[arg(long)]
        smoothing: Option<f64>,
    },
    /// Measure touch or hand latency over localhost and write a report.
    Bench {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Serve the dashboard API.
    Serve {
        #[arg(long, default_value_t = DEFAULT_API_PORT)]
        port: u16,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long)]
        frames: Option<PathBuf>,
    },
    /// Render a synthetic RGB-D sequence.
    Scenegen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a touch trace to a live orchestrator.
    Agent {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = DEFAULT_AGENT_PORT)]
        port: u16,
        /// Scenario supplying the trace and the IO forwarding delay.
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run the display sink.
    Sink {
        #[arg(long, default_value_t = DEFAULT_SINK_PORT)]
        port: u16,
        /// Scenario supplying the sink render delay.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Write displayed frames here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn stop_on_signal() -> Result<Arc<AtomicBool>> {
    let stop = Arc::new(AtomicBool::new(false));
    let flag = stop.clone();
    ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst))
        .map_err(|e| Error::Runtime(format!("cannot install signal handler: {e}")))?;
    Ok(stop)
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run {
            mode,
            scenario,
            profile,
            out,
            frames,
            agent_port,
            sink_port,
            sink_host,
            stride,
            smoothing,
        } => {
            let mode: Mode = mode.parse()?;
            let mut cfg = PipelineConfig::new(mode, scenario, out);
            cfg.profile = profile;
            cfg.frames = frames;
            cfg.ports.agent = agent_port;
            cfg.ports.sink = sink_port;
            cfg.sink_host = sink_host;
            if let Some(s) = stride {
                cfg.mesh.stride = s;
            }
            cfg.pose_smoothing = smoothing;
            match mode {
                Mode::Offline => {
                    let run = run_offline(&cfg)?;
                    println!(
                        "{} of {} frames composited into {}",
                        run.outputs.len(),
                        run.frames_in,
                        cfg.out.display()
                    );
                    print!("{}", run.report.to_table());
                }
                Mode::Live => {
                    let stop = stop_on_signal()?;
                    let report = run_live(&cfg, &stop)?;
                    print!("{}", report.to_table());
                }
            }
        }
        Command::Bench {
            scenario,
            out,
            trials,
        } => {
            let report = bench(&scenario, BenchOptions { trials, gap: None })?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            report.write_json(&out)?;
            print!("{}", report.to_table());
        }
        Command::Serve {
            port,
            scenario,
            profile,
            frames,
        } => {
            let stop = stop_on_signal()?;
            run_serve(
                &ServeOptions {
                    port,
                    scenario,
                    profile,
                    frames,
                },
                stop,
            )?;
        }
        Command::Scenegen { config, out } => {
            let n = scenegen(&config, &out)?;
            println!("wrote {n} frames to {}", out.display());
        }
        Command::Agent {
            host,
            port,
            scenario,
        } => {
            let scenario = Scenario::load(&scenario)?;
            let trace = scenario
                .trace
                .as_ref()
                .ok_or_else(|| Error::Config("scenario has no trace".into()))?;
            let events = empathd_wire::read_trace(trace)?;
            let mut opts = AgentOptions::new(resolve(&host, port)?);
            opts.io_delay_ms = scenario.stage_delays_ms.io_event_forward;
            let stop = stop_on_signal()?;
            let summary = run_agent(&opts, &events, &stop)?;
            println!("sent {} events ({} reconnects)", summary.sent, summary.reconnects);
        }
        Command::Sink {
            port,
            scenario,
            out,
        } => {
            let delays = match &scenario {
                Some(p) => Scenario::load(p)?.stage_delays_ms,
                None => Default::default(),
            };
            let sink = Sink::spawn(
                SocketAddr::from(([0, 0, 0, 0], port)),
                SinkOptions {
                    delays,
                    out_dir: out,
                    ..Default::default()
                },
            )?;
            let stop = stop_on_signal()?;
            while !stop.load(Ordering::SeqCst) {
                std::thread::sleep(Duration::from_millis(100));
            }
            sink.shutdown();
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EMPATHD_LOG", "info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
