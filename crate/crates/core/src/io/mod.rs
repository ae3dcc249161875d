//! File formats: scenario configs (TOML), Touchstone two-port files,
//! spectrum CSV, and field-map CSV. These definitions are the normative wire
//! contract for the toolchain; parsers reject malformed input with
//! positional diagnostics and never panic on arbitrary bytes.

mod fieldmap_csv;
mod spectrum_csv;
mod touchstone;

pub use fieldmap_csv::{read_fieldmap_csv, write_fieldmap_csv, FieldMapCsvError};
pub use spectrum_csv::{read_spectrum_csv, write_spectrum_csv, SpectrumCsvError};
pub use touchstone::{
    parse_touchstone, write_touchstone, FrequencyUnit, TouchstoneDocument, TouchstoneError,
    TouchstoneFormat,
};

use serde::Deserialize;
use thiserror::Error;

use crate::cascade::{CascadeElement, PropagationModel};
use crate::dispersion::{DispersionError, GrooveGeometry};
use crate::model::{
    magnon_frequency, FrequencyGrid, MagnetConfig, ModelError, ResonatorParams,
    DEFAULT_GYRO_HZ_PER_T,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum IoError {
    /// TOML-level failure; the message carries the location and, for unknown
    /// keys, the offending name.
    #[error("scenario config: {message}")]
    Config { message: String },
    #[error("resonator {index} needs either f_m_ghz or from_field = true")]
    MissingFrequency { index: usize },
    #[error("invalid scenario: {reason}")]
    InvalidScenario { reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
}

/// Corrugated-waveguide geometry plus its physical length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideGeometry {
    pub groove: GrooveGeometry,
    pub length_mm: f64,
}

/// One resonator of a scenario, with its optional placement along the guide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioResonator {
    pub params: ResonatorParams,
    pub position_mm: Option<f64>,
}

/// A fully validated simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub waveguide: WaveguideGeometry,
    pub magnet: MagnetConfig,
    pub resonators: Vec<ScenarioResonator>,
    pub sweep: FrequencyGrid,
    pub propagation: PropagationModel,
}

fn default_gyro() -> f64 {
    DEFAULT_GYRO_HZ_PER_T
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    waveguide: RawWaveguide,
    magnet: Option<RawMagnet>,
    #[serde(default)]
    resonators: Vec<RawResonator>,
    sweep: RawSweep,
    propagation: Option<RawPropagation>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWaveguide {
    p_mm: f64,
    h_mm: f64,
    a_mm: Option<f64>,
    length_mm: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMagnet {
    #[serde(rename = "B_T")]
    b_t: f64,
    #[serde(rename = "B_A_T", default)]
    b_a_t: f64,
    #[serde(default = "default_gyro")]
    gyro_hz_per_t: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResonator {
    f_m_ghz: Option<f64>,
    #[serde(default)]
    from_field: bool,
    gamma_i_mhz: f64,
    kappa_r_mhz: f64,
    kappa_l_mhz: f64,
    position_mm: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    f_start_ghz: f64,
    f_stop_ghz: f64,
    n_points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPropagation {
    mode: String,
    effective_index: Option<f64>,
}

/// Parses and validates a TOML scenario. Unknown keys are rejected to catch
/// typos. Returns the config together with non-fatal warnings (currently:
/// explicit `f_m_ghz` overriding `from_field`).
pub fn load_scenario(text: &str) -> Result<(ScenarioConfig, Vec<String>), IoError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| IoError::Config {
        message: e.to_string().trim().replace('\n', " "),
    })?;
    let mut warnings = Vec::new();

    let groove = GrooveGeometry {
        p_mm: raw.waveguide.p_mm,
        h_mm: raw.waveguide.h_mm,
        a_mm: raw.waveguide.a_mm.unwrap_or(0.5 * raw.waveguide.p_mm),
    };
    groove.validate()?;
    if !(raw.waveguide.length_mm.is_finite() && raw.waveguide.length_mm >= 0.0) {
        return Err(IoError::InvalidScenario {
            reason: format!(
                "waveguide.length_mm = {}, must be finite and >= 0",
                raw.waveguide.length_mm
            ),
        });
    }
    let waveguide = WaveguideGeometry {
        groove,
        length_mm: raw.waveguide.length_mm,
    };

    let magnet = match raw.magnet {
        Some(m) => MagnetConfig {
            b_t: m.b_t,
            b_a_t: m.b_a_t,
            gyro_hz_per_t: m.gyro_hz_per_t,
        },
        None => MagnetConfig::default(),
    };
    magnet.validate()?;

    let mut resonators = Vec::with_capacity(raw.resonators.len());
    for (index, r) in raw.resonators.iter().enumerate() {
        let f_m_hz = match (r.f_m_ghz, r.from_field) {
            (Some(f), true) => {
                warnings.push(format!(
                    "resonator {index}: explicit f_m_ghz = {f} overrides from_field"
                ));
                f * 1e9
            }
            (Some(f), false) => f * 1e9,
            (None, true) => magnon_frequency(&magnet)?,
            (None, false) => return Err(IoError::MissingFrequency { index }),
        };
        let params = ResonatorParams::new(
            f_m_hz,
            r.gamma_i_mhz * 1e6,
            r.kappa_r_mhz * 1e6,
            r.kappa_l_mhz * 1e6,
        );
        params.validate()?;
        if let Some(pos) = r.position_mm {
            if !(pos.is_finite() && pos >= 0.0 && pos <= waveguide.length_mm) {
                return Err(IoError::InvalidScenario {
                    reason: format!(
                        "resonator {index}: position_mm = {pos} outside the waveguide [0, {}]",
                        waveguide.length_mm
                    ),
                });
            }
        }
        resonators.push(ScenarioResonator {
            params,
            position_mm: r.position_mm,
        });
    }
    let with_pos = resonators
        .iter()
        .filter(|r| r.position_mm.is_some())
        .count();
    if with_pos != 0 && with_pos != resonators.len() {
        return Err(IoError::InvalidScenario {
            reason: "either every resonator or none must carry position_mm".into(),
        });
    }
    for (i, pair) in resonators.windows(2).enumerate() {
        if let (Some(a), Some(b)) = (pair[0].position_mm, pair[1].position_mm) {
            if b < a {
                return Err(IoError::InvalidScenario {
                    reason: format!(
                        "resonator positions must be non-decreasing: position {} follows {} at index {}",
                        b,
                        a,
                        i + 1
                    ),
                });
            }
        }
    }

    let sweep = FrequencyGrid::new(
        raw.sweep.f_start_ghz * 1e9,
        raw.sweep.f_stop_ghz * 1e9,
        raw.sweep.n_points,
    )?;

    let propagation = match raw.propagation {
        None => PropagationModel::Sspp { geometry: groove },
        Some(p) => match p.mode.as_str() {
            "sspp" => {
                if p.effective_index.is_some() {
                    return Err(IoError::InvalidScenario {
                        reason: "propagation.effective_index is only valid with mode = \"linear\""
                            .into(),
                    });
                }
                PropagationModel::Sspp { geometry: groove }
            }
            "linear" => {
                let n_eff = p.effective_index.ok_or_else(|| IoError::InvalidScenario {
                    reason: "propagation.mode = \"linear\" requires effective_index".into(),
                })?;
                if !(n_eff.is_finite() && n_eff > 0.0) {
                    return Err(IoError::InvalidScenario {
                        reason: format!(
                            "propagation.effective_index = {n_eff}, must be finite and > 0"
                        ),
                    });
                }
                PropagationModel::LinearPhase {
                    effective_index: n_eff,
                }
            }
            other => {
                return Err(IoError::InvalidScenario {
                    reason: format!(
                        "propagation.mode = \"{other}\", expected \"sspp\" or \"linear\""
                    ),
                })
            }
        },
    };

    Ok((
        ScenarioConfig {
            waveguide,
            magnet,
            resonators,
            sweep,
            propagation,
        },
        warnings,
    ))
}

impl ScenarioConfig {
    /// Expands the scenario into a cascade chain. Positioned resonators get
    /// propagation segments between them and to both waveguide ends; without
    /// positions the resonators compose back-to-back. An empty resonator
    /// list yields the bare waveguide.
    pub fn build_chain(&self) -> Vec<CascadeElement> {
        let segment = |length_mm: f64| CascadeElement::Propagation {
            length_mm,
            model: self.propagation.clone(),
        };
        if self.resonators.is_empty() {
            return vec![segment(self.waveguide.length_mm)];
        }
        if self.resonators[0].position_mm.is_none() {
            return self
                .resonators
                .iter()
                .map(|r| CascadeElement::Resonator(r.params))
                .collect();
        }
        let mut chain = Vec::new();
        let mut cursor = 0.0;
        for r in &self.resonators {
            let pos = r.position_mm.unwrap();
            if pos > cursor {
                chain.push(segment(pos - cursor));
            }
            chain.push(CascadeElement::Resonator(r.params));
            cursor = pos;
        }
        if self.waveguide.length_mm > cursor {
            chain.push(segment(self.waveguide.length_mm - cursor));
        }
        chain
    }
}
