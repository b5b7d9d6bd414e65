use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::meshgen::HandMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TremorParams {
    pub frequency_hz: f64,
    pub amplitude_mm: f64,
}

/// Tremor displacement in metres at time `t` seconds. The y axis lags x by
/// a third of a cycle.
pub fn tremor_offset(p: &TremorParams, t: f64) -> [f64; 3] {
    let a = p.amplitude_mm / 1000.0;
    let phase = 2.0 * PI * p.frequency_hz * t;
    [a * phase.sin(), a * (phase + 2.0 * PI / 3.0).sin(), 0.0]
}

/// Rigidly shifts every vertex by the tremor displacement at `t`.
pub fn apply_tremor(mesh: &HandMesh, p: &TremorParams, t: f64) -> HandMesh {
    let d = tremor_offset(p, t);
    let mut out = mesh.clone();
    if d == [0.0; 3] {
        return out;
    }
    for v in &mut out.vertices {
        for k in 0..3 {
            v[k] += d[k];
        }
    }
    out
}
