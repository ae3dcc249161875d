//! Dispersion relation of a corrugated (groove-array) waveguide supporting
//! spoof surface plasmon polaritons, in the deep-subwavelength limit:
//!
//! ```text
//! beta(f) = k0 * sqrt(1 + (a/p)^2 * tan^2(k0 * h)),   k0 = 2*pi*f / c
//! ```
//!
//! The asymptote `k0*h -> pi/2` sets the cutoff `f_c = c / (4h)`; approaching
//! it the group velocity collapses, which is what lets a magnon sample a
//! strongly transverse-spinning local field.

use thiserror::Error;

use crate::cascade::C0;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum DispersionError {
    #[error("invalid groove geometry: {reason}")]
    InvalidGeometry { reason: String },
    #[error("frequency {f_hz} Hz is at or above cutoff {f_c_hz} Hz")]
    AboveCutoff { f_hz: f64, f_c_hz: f64 },
    #[error("frequency must be positive, got {f_hz} Hz")]
    NonPositiveFrequency { f_hz: f64 },
}

/// Groove-array geometry of the corrugated waveguide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrooveGeometry {
    /// Groove period (mm).
    pub p_mm: f64,
    /// Groove depth (mm).
    pub h_mm: f64,
    /// Groove width (mm).
    pub a_mm: f64,
}

impl GrooveGeometry {
    /// Geometry with the conventional half-period groove width, a = p/2.
    pub fn with_default_width(p_mm: f64, h_mm: f64) -> Self {
        Self {
            p_mm,
            h_mm,
            a_mm: 0.5 * p_mm,
        }
    }

    pub fn validate(&self) -> Result<(), DispersionError> {
        let check = |name: &str, v: f64| -> Result<(), DispersionError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(DispersionError::InvalidGeometry {
                    reason: format!("{name} = {v}, must be finite and > 0"),
                })
            }
        };
        check("p_mm", self.p_mm)?;
        check("h_mm", self.h_mm)?;
        check("a_mm", self.a_mm)?;
        if self.a_mm > self.p_mm {
            return Err(DispersionError::InvalidGeometry {
                reason: format!(
                    "groove width a_mm = {} exceeds period p_mm = {}",
                    self.a_mm, self.p_mm
                ),
            });
        }
        Ok(())
    }

    /// Asymptotic cutoff frequency `f_c = c / (4h)` in Hz.
    pub fn cutoff_hz(&self) -> f64 {
        C0 / (4.0 * self.h_mm * 1e-3)
    }
}

/// Propagation constant beta(f) in rad/m for `f` strictly below cutoff.
pub fn beta(f_hz: f64, geom: &GrooveGeometry) -> Result<f64, DispersionError> {
    geom.validate()?;
    if !(f_hz.is_finite() && f_hz > 0.0) {
        return Err(DispersionError::NonPositiveFrequency { f_hz });
    }
    let f_c = geom.cutoff_hz();
    if f_hz >= f_c {
        return Err(DispersionError::AboveCutoff { f_hz, f_c_hz: f_c });
    }
    let k0 = 2.0 * std::f64::consts::PI * f_hz / C0;
    let ratio = geom.a_mm / geom.p_mm;
    let t = (k0 * geom.h_mm * 1e-3).tan();
    Ok(k0 * (1.0 + ratio * ratio * t * t).sqrt())
}

/// Group velocity `v_g = d(omega)/d(beta)` in m/s via a centered finite
/// difference with relative frequency step 1e-6 (clipped to stay below
/// cutoff).
pub fn group_velocity(f_hz: f64, geom: &GrooveGeometry) -> Result<f64, DispersionError> {
    geom.validate()?;
    if !(f_hz.is_finite() && f_hz > 0.0) {
        return Err(DispersionError::NonPositiveFrequency { f_hz });
    }
    let f_c = geom.cutoff_hz();
    if f_hz >= f_c {
        return Err(DispersionError::AboveCutoff { f_hz, f_c_hz: f_c });
    }
    let mut df = 1e-6 * f_hz;
    // Keep the upper evaluation strictly below cutoff.
    if f_hz + df >= f_c {
        df = 0.5 * (f_c - f_hz);
    }
    let f_plus = f_hz + df;
    let f_minus = f_hz - df;
    let b_plus = beta(f_plus, geom)?;
    let b_minus = beta(f_minus, geom)?;
    Ok(2.0 * std::f64::consts::PI * (f_plus - f_minus) / (b_plus - b_minus))
}

/// Tabulated dispersion curve for plotting and export.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCurve {
    pub f_hz: Vec<f64>,
    /// rad/m
    pub beta: Vec<f64>,
    /// m/s
    pub v_g: Vec<f64>,
    pub cutoff_hz: f64,
}

/// Samples beta and v_g on `n` points from `f_start_hz` to `f_stop_hz`
/// (endpoints included; the stop must stay below cutoff).
pub fn dispersion_curve(
    f_start_hz: f64,
    f_stop_hz: f64,
    n: usize,
    geom: &GrooveGeometry,
) -> Result<DispersionCurve, DispersionError> {
    geom.validate()?;
    if n < 2 {
        return Err(DispersionError::InvalidGeometry {
            reason: format!("need at least 2 samples, got {n}"),
        });
    }
    if f_start_hz.is_nan() || f_stop_hz.is_nan() || f_stop_hz <= f_start_hz {
        return Err(DispersionError::InvalidGeometry {
            reason: format!("empty frequency range [{f_start_hz}, {f_stop_hz}]"),
        });
    }
    let mut curve = DispersionCurve {
        f_hz: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        v_g: Vec::with_capacity(n),
        cutoff_hz: geom.cutoff_hz(),
    };
    for k in 0..n {
        let t = k as f64 / (n - 1) as f64;
        let f = f_start_hz * (1.0 - t) + f_stop_hz * t;
        curve.f_hz.push(f);
        curve.beta.push(beta(f, geom)?);
        curve.v_g.push(group_velocity(f, geom)?);
    }
    Ok(curve)
}
