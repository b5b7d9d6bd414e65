use std::net::SocketAddr;
use std::path::Path;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;
use std::time::Duration;

use empathd_appsim::{Scenario, StageDelays};
use empathd_wire::{digest, scale_display, TouchAction, TouchEvent};

use crate::agent::{run_agent, AgentOptions};
use crate::live::{HandFeed, HandTrial, LiveEngine, LiveOptions};
use crate::report::{LatencyReport, Recorder};
use crate::sink::{Sink, SinkOptions, ACK_FRAME, ACK_MESH};
use crate::{Error, Result};

/// Fewest repetitions per measurement for a meaningful mean.
pub const MIN_TRIALS: usize = 20;
pub const DEFAULT_TRIALS: usize = 25;
const TAP_HOLD: Duration = Duration::from_millis(40);
const MIN_GAP: Duration = Duration::from_millis(300);

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub trials: usize,
    /// Time between taps; derived from the stage delays when unset.
    pub gap: Option<Duration>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            trials: DEFAULT_TRIALS,
            gap: None,
        }
    }
}

/// Spacing that lets each tap's frame clear the pipeline before the next.
pub fn tap_gap(delays: &StageDelays) -> Duration {
    let busy = Duration::from_secs_f64((delays.emulation + delays.sink_render) / 1000.0);
    MIN_GAP.max(busy + Duration::from_millis(100))
}

/// Tap trace in which every tap changes what the app shows. Each tap is a
/// `down` followed by an `up` `TAP_HOLD` later.
pub fn bench_trace(scenario: &Scenario, taps: usize, gap: Duration) -> Result<Vec<TouchEvent>> {
    let mut app = scenario.build_app();
    let shown = |a: &empathd_appsim::AppScreen| digest(&scale_display(&a.render(), &scenario.display_config).image);
    let mut last = shown(&app);
    let mut events = Vec::with_capacity(taps * 2);
    let mut cursor = 0;
    for i in 0..taps {
        let t = gap.as_micros() as u64 * i as u64;
        let n = app.widgets.len();
        let mut found = None;
        for k in 0..n {
            let w = &app.widgets[(cursor + k) % n];
            let cx = w.rect.x as f64 + w.rect.w as f64 / 2.0;
            let cy = w.rect.y as f64 + w.rect.h as f64 / 2.0;
            let (x, y) = app.mapping.to_io(cx, cy);
            let up = TouchEvent {
                x,
                y,
                action: TouchAction::Up,
                t_micros: t + TAP_HOLD.as_micros() as u64,
            };
            let mut trial = app.clone();
            if trial.handle_touch(&up).changed {
                let d = shown(&trial);
                if d != last {
                    found = Some((trial, up, d));
                    cursor = (cursor + k + 1) % n;
                    break;
                }
            }
        }
        let (next, up, d) = found.ok_or_else(|| Error::Runtime(format!("no tap changes the screen at tap {i}")))?;
        events.push(TouchEvent {
            action: TouchAction::Down,
            t_micros: t,
            ..up
        });
        events.push(up);
        app = next;
        last = d;
    }
    Ok(events)
}

/// Loads a scenario file and benchmarks it.
pub fn bench(path: &Path, opts: BenchOptions) -> Result<LatencyReport> {
    let scenario = Scenario::load(path)?;
    bench_scenario(&scenario, opts, Arc::new(Recorder::new()))
}

/// Runs all three tiers over localhost. Scenarios with a frame sequence
/// measure the hand path, others the touch path.
pub fn bench_scenario(scenario: &Scenario, opts: BenchOptions, rec: Arc<Recorder>) -> Result<LatencyReport> {
    if opts.trials == 0 {
        return Err(Error::Config("bench needs at least one trial".into()));
    }
    if opts.trials < MIN_TRIALS {
        log::warn!("{} trials is below the recommended {MIN_TRIALS}", opts.trials);
    }
    let loopback = SocketAddr::from(([127, 0, 0, 1], 0));
    let sink = Sink::spawn(
        loopback,
        SinkOptions {
            delays: scenario.stage_delays_ms,
            recorder: Some(rec.clone()),
            ..Default::default()
        },
    )?;
    let mut lopts = LiveOptions::new(scenario.clone(), loopback, sink.addr());
    lopts.recorder = rec;
    if let Some(dir) = &scenario.frames {
        lopts.hand = HandFeed::Triggered(dir.clone());
    }
    let engine = LiveEngine::start(lopts)?;
    engine.wait_ready(Duration::from_secs(10))?;
    let outcome = match &scenario.frames {
        Some(_) => hand_trials(&engine, opts.trials),
        None => touch_trials(&engine, scenario, opts),
    };
    let report = engine.stop();
    sink.shutdown();
    outcome?;
    Ok(report)
}

fn touch_trials(engine: &LiveEngine, scenario: &Scenario, opts: BenchOptions) -> Result<()> {
    let gap = opts.gap.unwrap_or_else(|| tap_gap(&scenario.stage_delays_ms));
    let events = bench_trace(scenario, opts.trials, gap)?;
    let mut agent = AgentOptions::new(engine.agent_addr());
    agent.io_delay_ms = scenario.stage_delays_ms.io_event_forward;
    let stop = AtomicBool::new(false);
    run_agent(&agent, &events, &stop)?;
    if !engine.wait_for_ack(ACK_FRAME, opts.trials as u64, Duration::from_secs(10)) {
        return Err(Error::Runtime("not every tap's frame was displayed".into()));
    }
    Ok(())
}

fn hand_trials(engine: &LiveEngine, trials: usize) -> Result<()> {
    let mut done = 0;
    let mut attempts = 0;
    while done < trials {
        attempts += 1;
        if attempts > trials * 2 {
            return Err(Error::Runtime(format!(
                "only {done} of {trials} hand frames could be tracked"
            )));
        }
        match engine.trigger_hand(Duration::from_secs(10))? {
            HandTrial::Sent(seq) => {
                if !engine.wait_for_ack(ACK_MESH, seq, Duration::from_secs(10)) {
                    return Err(Error::Runtime(format!("mesh {seq} was never displayed")));
                }
                done += 1;
            }
            HandTrial::Skipped => {}
        }
    }
    Ok(())
}
