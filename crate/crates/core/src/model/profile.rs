use std::fmt;

use serde::{Deserialize, Serialize};

/// One stage of the impairment stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum FilterSpec {
    #[serde(rename_all = "camelCase")]
    Glaucoma {
        /// Fractions of the image half-diagonal.
        inner_radius_frac: f64,
        outer_radius_frac: f64,
        blur_sigma_px: f64,
    },
    #[serde(rename_all = "camelCase")]
    Cataract {
        blur_sigma_px: f64,
        contrast_factor: f64,
    },
    #[serde(rename_all = "camelCase")]
    Tremor { frequency_hz: f64, amplitude_mm: f64 },
    #[serde(rename_all = "camelCase")]
    HearingLoss {
        low_hz: f64,
        high_hz: f64,
        attenuation_db: f64,
    },
}

impl FilterSpec {
    /// Dashboard severity in `[0, 1]` mapped onto vignette radii.
    pub fn glaucoma_from_severity(severity: f64) -> Self {
        let s = severity.clamp(0.0, 1.0);
        let inner = 0.45 * (1.0 - s) + 0.05;
        FilterSpec::Glaucoma {
            inner_radius_frac: inner,
            outer_radius_frac: inner + 0.25,
            blur_sigma_px: 2.0 + 4.0 * s,
        }
    }

    /// Dashboard severity in `[0, 1]` mapped onto blur and contrast loss.
    pub fn cataract_from_severity(severity: f64) -> Self {
        let s = severity.clamp(0.0, 1.0);
        FilterSpec::Cataract {
            blur_sigma_px: 8.0 * s,
            contrast_factor: 1.0 - 0.6 * s,
        }
    }

    pub fn hearing_loss(attenuation_db: f64) -> Self {
        FilterSpec::HearingLoss {
            low_hz: 2000.0,
            high_hz: 8000.0,
            attenuation_db,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterSpec::Glaucoma { .. } => "Glaucoma",
            FilterSpec::Cataract { .. } => "Cataract",
            FilterSpec::Tremor { .. } => "Tremor",
            FilterSpec::HearingLoss { .. } => "HearingLoss",
        }
    }

    pub fn is_visual(&self) -> bool {
        matches!(self, FilterSpec::Glaucoma { .. } | FilterSpec::Cataract { .. })
    }
}

/// Ordered filter stack. An empty stack is the identity.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentProfile {
    pub filters: Vec<FilterSpec>,
}

impl ImpairmentProfile {
    pub fn new(filters: Vec<FilterSpec>) -> Self {
        ImpairmentProfile { filters }
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

/// A broken profile invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Path of the offending field, e.g. `filters[0].innerRadiusFrac`.
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated", self.rule)
    }
}

pub fn validate_profile(profile: &ImpairmentProfile) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, spec) in profile.filters.iter().enumerate() {
        let mut check = |ok: bool, field: &str, rule: &str| {
            if !ok {
                out.push(Violation {
                    field: format!("filters[{i}].{field}"),
                    rule: rule.to_string(),
                });
            }
        };
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        match *spec {
            FilterSpec::Glaucoma {
                inner_radius_frac,
                outer_radius_frac,
                blur_sigma_px,
            } => {
                check(unit(inner_radius_frac), "innerRadiusFrac", "0 <= innerRadiusFrac <= 1");
                check(unit(outer_radius_frac), "outerRadiusFrac", "0 <= outerRadiusFrac <= 1");
                check(
                    inner_radius_frac < outer_radius_frac,
                    "innerRadiusFrac",
                    "innerRadiusFrac < outerRadiusFrac",
                );
                check(
                    blur_sigma_px.is_finite() && blur_sigma_px >= 0.0,
                    "blurSigmaPx",
                    "blurSigmaPx >= 0",
                );
            }
            FilterSpec::Cataract {
                blur_sigma_px,
                contrast_factor,
            } => {
                check(
                    blur_sigma_px.is_finite() && blur_sigma_px >= 0.0,
                    "blurSigmaPx",
                    "blurSigmaPx >= 0",
                );
                check(unit(contrast_factor), "contrastFactor", "0 <= contrastFactor <= 1");
            }
            FilterSpec::Tremor {
                frequency_hz,
                amplitude_mm,
            } => {
                check(
                    frequency_hz.is_finite() && frequency_hz > 0.0,
                    "frequencyHz",
                    "frequencyHz > 0",
                );
                check(
                    amplitude_mm.is_finite() && amplitude_mm >= 0.0,
                    "amplitudeMm",
                    "amplitudeMm >= 0",
                );
            }
            FilterSpec::HearingLoss {
                low_hz,
                high_hz,
                attenuation_db,
            } => {
                check(low_hz.is_finite() && low_hz > 0.0, "lowHz", "lowHz > 0");
                check(low_hz < high_hz, "lowHz", "lowHz < highHz");
                check(
                    attenuation_db.is_finite() && attenuation_db >= 0.0,
                    "attenuationDb",
                    "attenuationDb >= 0",
                );
            }
        }
    }
    out
}
