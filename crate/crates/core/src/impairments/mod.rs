//! Impairment filters, applied after everything else has been rendered.
//! Visual filters act on the composited frame, tremor on the hand mesh and
//! hearing loss on the app's audio.

mod audio;
mod blur;
mod tremor;
mod visual;

pub use audio::{apply_hearing_loss, band_gain_db, AudioBuffer, HearingLossParams, FRAME_LEN};
pub use blur::{gaussian_blur, gaussian_kernel};
pub use tremor::{apply_tremor, tremor_offset, TremorParams};
pub use visual::{
    apply_cataract, apply_glaucoma, radial_fraction, vignette_weight, CataractParams,
    GlaucomaParams,
};

use crate::meshgen::HandMesh;
use crate::model::{validate_profile, ColorImage, FilterSpec, ImpairmentProfile};
use crate::{Error, Result};

/// Runs the visual filters of `profile` over `image`, in order.
pub fn apply_visual(image: &ColorImage, profile: &ImpairmentProfile) -> ColorImage {
    let mut img = image.clone();
    for f in &profile.filters {
        match *f {
            FilterSpec::Glaucoma {
                inner_radius_frac,
                outer_radius_frac,
                blur_sigma_px,
            } => {
                img = apply_glaucoma(
                    &img,
                    &GlaucomaParams {
                        inner_radius_frac,
                        outer_radius_frac,
                        blur_sigma_px,
                    },
                )
            }
            FilterSpec::Cataract {
                blur_sigma_px,
                contrast_factor,
            } => {
                img = apply_cataract(
                    &img,
                    &CataractParams {
                        blur_sigma_px,
                        contrast_factor,
                    },
                )
            }
            _ => {}
        }
    }
    img
}

pub fn apply_mesh(mesh: &HandMesh, profile: &ImpairmentProfile, t: f64) -> HandMesh {
    let mut out = mesh.clone();
    for f in &profile.filters {
        if let FilterSpec::Tremor {
            frequency_hz,
            amplitude_mm,
        } = *f
        {
            out = apply_tremor(
                &out,
                &TremorParams {
                    frequency_hz,
                    amplitude_mm,
                },
                t,
            );
        }
    }
    out
}

pub fn apply_audio(audio: &AudioBuffer, profile: &ImpairmentProfile) -> Result<AudioBuffer> {
    let mut out = audio.clone();
    for f in &profile.filters {
        if let FilterSpec::HearingLoss {
            low_hz,
            high_hz,
            attenuation_db,
        } = *f
        {
            out = apply_hearing_loss(
                &out,
                &HearingLossParams {
                    low_hz,
                    high_hz,
                    attenuation_db,
                },
            )?;
        }
    }
    Ok(out)
}

/// Applies every filter in `profile` to its own modality. `t` is the
/// presentation time in seconds, used by tremor.
pub fn apply_profile(
    image: &ColorImage,
    mesh: &HandMesh,
    audio: &AudioBuffer,
    profile: &ImpairmentProfile,
    t: f64,
) -> Result<(ColorImage, HandMesh, AudioBuffer)> {
    let violations = validate_profile(profile);
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(|v| format!("{}: {v}", v.field)).collect();
        return Err(Error::Config(msg.join("; ")));
    }
    Ok((
        apply_visual(image, profile),
        apply_mesh(mesh, profile, t),
        apply_audio(audio, profile)?,
    ))
}
