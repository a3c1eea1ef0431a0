//! Mode reconstruction from pixel records, shot-noise and Cramér-Rao
//! sensitivity bounds, SNR-slope sensitivity extraction and homodyne
//! covariance tomography.

mod covariance;
mod series;

pub use covariance::{reconstruct_covariance, ReconstructedCovariance, MIN_SAMPLES};
pub use series::{
    exclude_dead_pixels, reconstruct_mode_series, snr_curve, snr_point, SnrCurve, SnrPoint,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shot-noise bound on an energy displacement, `√N` photons/√Hz.
pub fn sql_energy<T: Real>(photon_rate: T) -> T {
    debug_assert!(photon_rate > T::zero());
    photon_rate.sqrt()
}

/// Shot-noise bound on a central-frequency displacement, `Δω/√N`.
pub fn sql_frequency<T: Real>(photon_rate: T, delta_omega: T) -> T {
    debug_assert!(photon_rate > T::zero() && delta_omega > T::zero());
    delta_omega / photon_rate.sqrt()
}

/// Bound for a measured mode with quadrature variance `var_mode` detected
/// with amplitude efficiency `eta`: `sql·√var/η`.
pub fn crb_noise_scaled<T: Real>(sql: T, var_mode: T, eta: T) -> T {
    debug_assert!(var_mode > T::zero() && eta > T::zero() && eta <= T::one() + T::lit(1e-12));
    sql * var_mode.sqrt() / eta
}

/// Sensitivity within one measurement event of bandwidth `bandwidth`.
pub fn per_event<T: Real>(sens_per_rt_hz: T, bandwidth: T) -> T {
    debug_assert!(bandwidth > T::zero());
    sens_per_rt_hz * bandwidth.sqrt()
}

/// Estimated displacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    CentralFrequency,
    MeanEnergy,
}

impl Parameter {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CentralFrequency => "central_frequency",
            Self::MeanEnergy => "mean_energy",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Self::CentralFrequency => "rad/s",
            Self::MeanEnergy => "photons",
        }
    }
}

/// Sensitivity extracted from an SNR curve.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult<T> {
    pub parameter: Parameter,
    /// SNR per unit modulation depth.
    pub snr_slope: T,
    pub sensitivity_per_rtHz: T,
    pub sensitivity_per_event: T,
    /// Shot-noise sensitivity divided by this one; 1 when no reference was
    /// supplied.
    pub enhancement_vs_sql: T,
}

#[allow(non_snake_case)]
impl<T: Real> EstimationResult<T> {
    /// Depth at which the fitted SNR reaches 1, per event and per √Hz of
    /// the measurement `bandwidth`.
    pub fn from_slope(
        parameter: Parameter,
        snr_slope: T,
        bandwidth: T,
        sql_per_rt_hz: Option<T>,
    ) -> Result<Self> {
        if !(snr_slope > T::zero()) {
            return Err(Error::Numeric(format!(
                "SNR slope {} is not positive",
                snr_slope.as_f64()
            )));
        }
        if !(bandwidth > T::zero()) {
            return Err(Error::Domain("bandwidth must be positive".into()));
        }
        let sensitivity_per_event = snr_slope.recip();
        let sensitivity_per_rtHz = sensitivity_per_event / bandwidth.sqrt();
        Ok(Self {
            parameter,
            snr_slope,
            sensitivity_per_rtHz,
            sensitivity_per_event,
            enhancement_vs_sql: sql_per_rt_hz.map_or(T::one(), |s| s / sensitivity_per_rtHz),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
