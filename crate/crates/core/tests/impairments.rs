use std::time::Instant;

use empathd_core::impairments::{apply_profile, AudioBuffer};
use empathd_core::meshgen::HandMesh;
use empathd_core::{ColorImage, FilterSpec, ImpairmentProfile};

#[test]
fn full_profile_sustains_thirty_fps_at_stream_resolution() {
    let (w, h) = (485, 863);
    let mut img = ColorImage::new(w, h, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            img.set(x, y, [(x % 17) as f32 / 16.0, (y % 23) as f32 / 22.0, 0.5]);
        }
    }
    let mesh = HandMesh {
        vertices: vec![[0.0, 0.0, 0.37]; 1200],
        triangles: vec![],
        uv: vec![[0.0, 0.0]; 1200],
        source_frame_id: 0,
    };
    let audio = AudioBuffer::sine(48000, 4000.0, 0.3, 1600);
    let profile = ImpairmentProfile {
        filters: vec![
            FilterSpec::glaucoma_from_severity(0.5),
            FilterSpec::cataract_from_severity(0.5),
            FilterSpec::Tremor {
                frequency_hz: 5.0,
                amplitude_mm: 3.0,
            },
            FilterSpec::hearing_loss(40.0),
        ],
    };
    apply_profile(&img, &mesh, &audio, &profile, 0.0).unwrap();
    let n = 30;
    let t0 = Instant::now();
    for i in 0..n {
        let (out, _, _) = apply_profile(&img, &mesh, &audio, &profile, i as f64 / 30.0).unwrap();
        assert_eq!((out.width, out.height), (w, h));
    }
    let fps = n as f64 / t0.elapsed().as_secs_f64();
    println!("impairment throughput {fps:.1} fps at {w}x{h}");
    assert!(fps >= 30.0, "{fps} fps");
}
