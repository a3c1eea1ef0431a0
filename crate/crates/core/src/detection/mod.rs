//! Synthetic detector records: modulated direct detection on every pixel,
//! multi-pixel balanced homodyne, and the lock-in chain that turns raw
//! photocurrents into baseband streams.

mod direct;
mod dsp;
mod homodyne;
pub mod rng;
mod schedule;

pub use direct::{synthesize_direct, DirectScene, ModulationConfig};
pub use dsp::{demodulate, DspChain, LowPass};
pub use homodyne::{synthesize_homodyne, synthesize_homodyne_scheduled, HomodynePhase};
pub use schedule::{acquisition_windows, AcquisitionSchedule, MeasurementWindow};

use crate::scalar::Real;

/// Raw per-pixel fluctuation currents `δI_i` at the simulation rate.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotocurrentRecord<T> {
    /// One stream per pixel, all of equal length.
    pub samples: Vec<Vec<T>>,
    pub alpha: Vec<T>,
    pub raw_rate: f64,
    /// Leading samples reserved for the filter to settle; time zero is the
    /// first sample after them.
    pub settle_samples: usize,
    pub f_m: f64,
    pub seed: u64,
    pub stream: u64,
}

/// Baseband streams after demodulation, one sample per acquisition period.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodulatedRecord<T> {
    pub streams: Vec<Vec<T>>,
    pub alpha: Vec<T>,
    pub output_rate: f64,
    pub seed: u64,
    pub stream: u64,
}

/// Balanced-homodyne difference currents `I⁻_i = 2|α_i|·o_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomodyneRecord<T> {
    pub samples: Vec<Vec<T>>,
    pub lo_alpha: Vec<T>,
    pub phase: HomodynePhase,
    /// Acquisition time of every sample (s).
    pub times: Vec<f64>,
    pub seed: u64,
}

/// Common view used by the CSV exporters.
pub trait SampledRecord<T> {
    fn channels(&self) -> &[Vec<T>];
    fn times(&self) -> Vec<f64>;
    /// Key–value pairs for the metadata sidecar.
    fn metadata(&self) -> Vec<(String, String)>;

    fn n_samples(&self) -> usize {
        self.channels().first().map_or(0, Vec::len)
    }
}

fn join<T: Real>(v: &[T]) -> String {
    v.iter()
        .map(|a| format!("{:e}", a.as_f64()))
        .collect::<Vec<_>>()
        .join(",")
}

impl<T: Real> SampledRecord<T> for PhotocurrentRecord<T> {
    fn channels(&self) -> &[Vec<T>] {
        &self.samples
    }

    fn times(&self) -> Vec<f64> {
        let s = self.settle_samples as f64;
        (0..self.n_samples())
            .map(|j| (j as f64 - s) / self.raw_rate)
            .collect()
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("kind".into(), "photocurrent".into()),
            ("seed".into(), self.seed.to_string()),
            ("stream".into(), self.stream.to_string()),
            ("raw_rate".into(), self.raw_rate.to_string()),
            ("settle_samples".into(), self.settle_samples.to_string()),
            ("f_m".into(), self.f_m.to_string()),
            ("alpha".into(), join(&self.alpha)),
        ]
    }
}

impl<T: Real> SampledRecord<T> for DemodulatedRecord<T> {
    fn channels(&self) -> &[Vec<T>] {
        &self.streams
    }

    fn times(&self) -> Vec<f64> {
        (0..self.n_samples())
            .map(|k| k as f64 / self.output_rate)
            .collect()
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("kind".into(), "demodulated".into()),
            ("seed".into(), self.seed.to_string()),
            ("stream".into(), self.stream.to_string()),
            ("output_rate".into(), self.output_rate.to_string()),
            ("alpha".into(), join(&self.alpha)),
        ]
    }
}

impl<T: Real> SampledRecord<T> for HomodyneRecord<T> {
    fn channels(&self) -> &[Vec<T>] {
        &self.samples
    }

    fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    fn metadata(&self) -> Vec<(String, String)> {
        vec![
            ("kind".into(), "homodyne".into()),
            ("seed".into(), self.seed.to_string()),
            ("phase".into(), self.phase.to_string()),
            ("lo_alpha".into(), join(&self.lo_alpha)),
        ]
    }
}
