use std::net::{SocketAddr, TcpStream};
use std::sync::atomic::AtomicBool;
use std::time::{Duration, Instant};

use empathd_appsim::{AppKind, Scenario};
use empathd_core::impairments::apply_visual;
use empathd_core::{ColorImage, FilterSpec, ImpairmentProfile};
use empathd_orchestrator::agent::{run_agent, AgentOptions};
use empathd_orchestrator::bench::{bench_trace, BenchOptions};
use empathd_orchestrator::link::Backoff;
use empathd_orchestrator::report::LinkState;
use empathd_orchestrator::sink::{Sink, SinkOptions, SinkStats, ACK_FRAME};
use empathd_orchestrator::{LiveEngine, LiveOptions};
use empathd_wire::{scale_display, write_message, TouchAction, TouchEvent, WireMessage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loopback() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 0))
}

struct Rig {
    sink: Sink,
    engine: LiveEngine,
    scenario: Scenario,
}

fn rig(scenario: Scenario) -> Rig {
    rig_with(scenario, |_| {})
}

fn rig_with(scenario: Scenario, tweak: impl FnOnce(&mut LiveOptions)) -> Rig {
    let sink = Sink::spawn(
        loopback(),
        SinkOptions {
            delays: scenario.stage_delays_ms,
            ..Default::default()
        },
    )
    .unwrap();
    let mut opts = LiveOptions::new(scenario.clone(), loopback(), sink.addr());
    opts.backoff = Backoff {
        initial: Duration::from_millis(20),
        max: Duration::from_millis(200),
    };
    tweak(&mut opts);
    let engine = LiveEngine::start(opts).unwrap();
    engine.wait_ready(Duration::from_secs(10)).unwrap();
    Rig {
        sink,
        engine,
        scenario,
    }
}

fn wait_for(what: &str, timeout: Duration, mut cond: impl FnMut() -> bool) {
    let deadline = Instant::now() + timeout;
    while !cond() {
        assert!(Instant::now() < deadline, "timed out waiting for {what}");
        std::thread::sleep(Duration::from_millis(10));
    }
}

fn replay(rig: &Rig, events: &[TouchEvent]) {
    let mut opts = AgentOptions::new(rig.engine.agent_addr());
    opts.io_delay_ms = rig.scenario.stage_delays_ms.io_event_forward;
    let sent = run_agent(&opts, events, &AtomicBool::new(false)).unwrap();
    assert_eq!(sent.sent as usize, events.len());
}

/// Random taps, some on keys and some on empty background.
fn random_taps(n: usize, seed: u64) -> Vec<TouchEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for i in 0..n as u64 {
        let (x, y) = (rng.gen_range(0.0..1080.0), rng.gen_range(0.0..1920.0));
        let t = i * 12_000;
        out.push(TouchEvent {
            x,
            y,
            action: TouchAction::Down,
            t_micros: t,
        });
        out.push(TouchEvent {
            x,
            y,
            action: TouchAction::Up,
            t_micros: t + 4_000,
        });
    }
    out
}

#[test]
fn hundred_taps_are_delivered_and_diff_gated() {
    let rig = rig(Scenario::new(AppKind::Grid));
    let events = random_taps(100, 11);
    // Oracle: replay on an independent app instance.
    let mut app = rig.scenario.build_app();
    let changes = events.iter().filter(|e| app.handle_touch(e).changed).count() as u64;
    assert!(changes > 10 && changes < 100, "trace should mix hits and misses: {changes}");

    replay(&rig, &events);
    let rec = rig.engine.recorder().clone();
    wait_for("all up events", Duration::from_secs(20), || rec.counters().up_events == 100);
    assert!(rig.engine.wait_for_ack(ACK_FRAME, changes, Duration::from_secs(20)));
    let report = rig.engine.stop();
    let c = report.counters;
    assert_eq!(c.touches_received, 200);
    assert_eq!(c.up_events, 100);
    assert_eq!(c.seq_gaps, 0);
    assert_eq!(c.frames_emitted, 1 + changes);
    let st = rig.sink.stats();
    assert_eq!(SinkStats::get(&st.frames_received), 1 + changes);
    assert_eq!(SinkStats::get(&st.seq_gaps), 0);
}

#[test]
fn static_screen_sends_one_frame() {
    let rig = rig(Scenario::new(AppKind::Pointing));
    std::thread::sleep(Duration::from_millis(500));
    // Down events and taps on nothing leave the screen alone.
    let idle = [
        TouchEvent { x: 5.0, y: 5.0, action: TouchAction::Down, t_micros: 0 },
        TouchEvent { x: 5.0, y: 5.0, action: TouchAction::Up, t_micros: 20_000 },
    ];
    replay(&rig, &idle);
    let rec = rig.engine.recorder().clone();
    wait_for("idle tap", Duration::from_secs(5), || rec.counters().up_events == 1);
    std::thread::sleep(Duration::from_millis(200));
    let report = rig.engine.stop();
    assert_eq!(report.counters.frames_emitted, 1);
    assert_eq!(SinkStats::get(&rig.sink.stats().frames_received), 1);
}

#[test]
fn injected_network_delay_is_attributed_to_network() {
    let mut s = Scenario::new(AppKind::Grid);
    s.stage_delays_ms.network = 87.0;
    let rig = rig(s);
    let events = bench_trace(&rig.scenario, 6, Duration::from_millis(150)).unwrap();
    replay(&rig, &events);
    assert!(rig.engine.wait_for_ack(ACK_FRAME, 6, Duration::from_secs(10)));
    let report = rig.engine.stop();
    let net = report.stages["network"];
    assert_eq!(net.count, 6);
    assert!((net.mean_ms - 87.0).abs() <= 5.0, "network {:.2} ms", net.mean_ms);
    let e2e = report.end_to_end_touch.unwrap();
    assert_eq!(e2e.count, 6);
    assert!(e2e.mean_ms >= 87.0, "{e2e:?}");
    assert!(report.violations().is_empty(), "{:?}", report.violations());
}

#[test]
fn profile_change_reaches_the_sink_before_the_next_frame() {
    let mut store = None;
    let rig = rig_with(Scenario::new(AppKind::Grid), |o| store = Some(o.profile.clone()));
    let store = store.unwrap();
    let profile = ImpairmentProfile::new(vec![FilterSpec::cataract_from_severity(0.7)]);
    store.update(profile.clone()).unwrap();
    let sink_profile = rig.sink.profile().clone();
    wait_for("profile at sink", Duration::from_secs(2), || {
        sink_profile.snapshot().profile == profile
    });

    let events = bench_trace(&rig.scenario, 1, Duration::from_millis(50)).unwrap();
    let mut app = rig.scenario.build_app();
    for e in &events {
        app.handle_touch(e);
    }
    replay(&rig, &events);
    assert!(rig.engine.wait_for_ack(ACK_FRAME, 1, Duration::from_secs(5)));

    let sent = scale_display(&app.render(), &rig.scenario.display_config).image;
    let sent = ColorImage::decode_png(&sent.encode_png().unwrap()).unwrap();
    let expect = apply_visual(&sent, &profile);
    let shown = rig.sink.stats().last_frame.lock().unwrap().clone().unwrap();
    assert_eq!(shown, expect);
    assert_ne!(shown, sent);
    rig.engine.stop();
}

#[test]
fn sink_restart_is_survived() {
    let rig = rig(Scenario::new(AppKind::Grid));
    let addr = rig.sink.addr();
    rig.sink.shutdown();
    let rec = rig.engine.recorder().clone();
    wait_for("link down", Duration::from_secs(5), || {
        rec.report().links.get("sink") == Some(&LinkState::Down)
    });
    let sink = Sink::spawn(addr, SinkOptions::default()).unwrap();
    wait_for("reconnect", Duration::from_secs(10), || rec.counters().reconnects == 1);
    // The current frame is replayed so the new sink is not blank.
    wait_for("frame replay", Duration::from_secs(5), || {
        SinkStats::get(&sink.stats().frames_displayed) == 1
    });
    assert_eq!(rec.report().links.get("sink"), Some(&LinkState::Up));
    rig.engine.stop();
}

#[test]
fn garbage_from_agent_resets_the_connection() {
    let rig = rig(Scenario::new(AppKind::Grid));
    let mut raw = TcpStream::connect(rig.engine.agent_addr()).unwrap();
    use std::io::Write;
    raw.write_all(&[0x00; 16]).unwrap();
    let rec = rig.engine.recorder().clone();
    wait_for("protocol reset", Duration::from_secs(5), || rec.counters().protocol_resets == 1);

    // A well-behaved agent still gets through afterwards.
    let events = bench_trace(&rig.scenario, 2, Duration::from_millis(30)).unwrap();
    replay(&rig, &events);
    assert!(rig.engine.wait_for_ack(ACK_FRAME, 2, Duration::from_secs(5)));
    rig.engine.stop();
}

#[test]
fn sink_drops_oldest_when_rendering_lags() {
    let sink = Sink::spawn(
        loopback(),
        SinkOptions {
            delays: empathd_appsim::StageDelays {
                sink_render: 60.0,
                ..Default::default()
            },
            ..Default::default()
        },
    )
    .unwrap();
    let mut s = TcpStream::connect(sink.addr()).unwrap();
    let img = ColorImage::new(8, 8, [0.5; 3]);
    let mut gate = empathd_wire::DiffGate::new();
    for i in 0..10u32 {
        let mut frame = img.clone();
        frame.set(0, 0, [i as f32 * 20.0 / 255.0, 0.0, 0.0]);
        let upd = gate.offer(&frame, 0).unwrap().unwrap();
        write_message(&mut s, &WireMessage::Frame(upd)).unwrap();
    }
    let st = sink.stats().clone();
    wait_for("queue drained", Duration::from_secs(5), || {
        SinkStats::get(&st.frames_displayed) + SinkStats::get(&st.dropped) == 10
    });
    assert_eq!(SinkStats::get(&st.frames_received), 10);
    assert!(SinkStats::get(&st.dropped) >= 5, "dropped {}", SinkStats::get(&st.dropped));
    // The newest frame always survives.
    let last = st.last_frame.lock().unwrap().clone().unwrap();
    assert_eq!(last.get(0, 0), [180.0 / 255.0, 0.0, 0.0]);
    drop(s);
    sink.shutdown();
}

#[test]
fn bench_options_default_to_enough_trials() {
    assert!(BenchOptions::default().trials >= empathd_orchestrator::bench::MIN_TRIALS);
}
