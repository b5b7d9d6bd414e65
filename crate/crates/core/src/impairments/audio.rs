use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mono PCM audio with samples nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AudioBuffer {
    pub sample_rate_hz: u32,
    pub samples: Vec<f64>,
}

impl AudioBuffer {
    pub fn new(sample_rate_hz: u32, samples: Vec<f64>) -> Self {
        AudioBuffer {
            sample_rate_hz,
            samples,
        }
    }

    pub fn sine(sample_rate_hz: u32, freq_hz: f64, amplitude: f64, len: usize) -> Self {
        let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate_hz as f64;
        AudioBuffer::new(
            sample_rate_hz,
            (0..len).map(|i| amplitude * (w * i as f64).sin()).collect(),
        )
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn read_wav(path: &Path) -> Result<Self> {
        let mut reader = hound::WavReader::open(path)
            .map_err(|e| Error::format(path, e.to_string()))?;
        let spec = reader.spec();
        if spec.channels != 1 || spec.bits_per_sample != 16 {
            return Err(Error::format(path, "expected 16-bit mono PCM"));
        }
        let samples = reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, e.to_string()))?;
        Ok(AudioBuffer::new(spec.sample_rate, samples))
    }

    pub fn write_wav(&self, path: &Path) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate_hz,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let fail = |e: hound::Error| Error::format(path, e.to_string());
        let mut w = hound::WavWriter::create(path, spec).map_err(fail)?;
        for s in &self.samples {
            w.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)
                .map_err(fail)?;
        }
        w.finalize().map_err(fail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HearingLossParams {
    pub low_hz: f64,
    pub high_hz: f64,
    pub attenuation_db: f64,
}

pub const FRAME_LEN: usize = 1024;

/// Gain in dB: full attenuation inside `[low, high]`, unity below `low/2`
/// and above `1.5·high`, linear in dB between.
pub fn band_gain_db(p: &HearingLossParams, f: f64) -> f64 {
    let (lo_edge, hi_edge) = (p.low_hz / 2.0, 1.5 * p.high_hz);
    let a = -p.attenuation_db;
    if f <= lo_edge || f >= hi_edge {
        0.0
    } else if f < p.low_hz {
        a * (f - lo_edge) / (p.low_hz - lo_edge)
    } else if f <= p.high_hz {
        a
    } else {
        a * (hi_edge - f) / (hi_edge - p.high_hz)
    }
}

/// Short-time Fourier attenuation with square-root Hann analysis and
/// synthesis windows at 50% overlap. Output length equals input length.
pub fn apply_hearing_loss(audio: &AudioBuffer, p: &HearingLossParams) -> Result<AudioBuffer> {
    let sr = audio.sample_rate_hz as f64;
    if !(sr > 2.0 * p.high_hz) {
        return Err(Error::Config(format!(
            "sample rate {sr} Hz cannot represent {} Hz",
            p.high_hz
        )));
    }
    if !(p.low_hz > 0.0 && p.low_hz < p.high_hz) {
        return Err(Error::Config("hearing-loss band must satisfy 0 < low < high".into()));
    }
    if audio.samples.iter().all(|s| *s == 0.0) {
        return Ok(audio.clone());
    }
    let n = FRAME_LEN;
    let hop = n / 2;
    let window: Vec<f64> = (0..n)
        .map(|i| (0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()).sqrt())
        .collect();
    let gains: Vec<f64> = (0..n)
        .map(|k| {
            let bin = k.min(n - k) as f64 * sr / n as f64;
            10f64.powf(band_gain_db(p, bin) / 20.0)
        })
        .collect();

    let len = audio.samples.len();
    let frames = (len + hop).div_ceil(hop);
    let padded_len = frames * hop + hop;
    let mut padded = vec![0.0; padded_len];
    padded[hop..hop + len].copy_from_slice(&audio.samples);
    let mut out = vec![0.0; padded_len];

    let mut planner = FftPlanner::<f64>::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(n);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for f in 0..frames {
        let start = f * hop;
        if start + n > padded_len {
            break;
        }
        for i in 0..n {
            buf[i] = Complex::new(padded[start + i] * window[i], 0.0);
        }
        fwd.process(&mut buf);
        for (b, g) in buf.iter_mut().zip(&gains) {
            *b *= *g;
        }
        inv.process(&mut buf);
        for i in 0..n {
            out[start + i] += buf[i].re / n as f64 * window[i];
        }
    }
    Ok(AudioBuffer::new(
        audio.sample_rate_hz,
        out[hop..hop + len].to_vec(),
    ))
}
