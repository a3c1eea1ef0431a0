use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shutter cycle alternating a calibration interval (locks engaged) with a
/// measurement window. Each period starts with calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSchedule {
    pub shutter_rate: f64,
    pub window: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementWindow {
    pub start: f64,
    pub end: f64,
}

pub fn acquisition_windows(shutter_rate: f64, window: f64) -> Result<AcquisitionSchedule> {
    AcquisitionSchedule::new(shutter_rate, window)
}

impl AcquisitionSchedule {
    pub fn new(shutter_rate: f64, window: f64) -> Result<Self> {
        if !(shutter_rate.is_finite() && shutter_rate > 0.0) {
            return Err(Error::Schedule("shutter rate must be positive".into()));
        }
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::Schedule("window must be positive".into()));
        }
        let duty = window * shutter_rate;
        if duty >= 1.0 - 1e-12 {
            return Err(Error::Schedule(format!(
                "window {window} s at {shutter_rate} Hz leaves no calibration time (duty {duty})"
            )));
        }
        Ok(Self {
            shutter_rate,
            window,
        })
    }

    pub fn period(&self) -> f64 {
        1.0 / self.shutter_rate
    }

    pub fn duty_cycle(&self) -> f64 {
        self.window * self.shutter_rate
    }

    pub fn calibration_time(&self) -> f64 {
        self.period() - self.window
    }

    /// Measurement windows fully contained in `[0, duration]`.
    pub fn windows(&self, duration: f64) -> Vec<MeasurementWindow> {
        let p = self.period();
        let count = ((duration / p) * (1.0 + 1e-12)).floor() as usize;
        (0..count)
            .map(|k| {
                let end = (k + 1) as f64 * p;
                MeasurementWindow {
                    start: end - self.window,
                    end,
                }
            })
            .collect()
    }

    /// Samples acquired in one window at `rate`.
    pub fn samples_per_window(&self, rate: f64) -> usize {
        (self.window * rate + 1e-9).floor() as usize
    }

    /// Acquisition times at `rate` inside the windows of `[0, duration]`.
    pub fn sample_times(&self, rate: f64, duration: f64) -> Vec<f64> {
        let per = self.samples_per_window(rate);
        self.windows(duration)
            .iter()
            .flat_map(|w| (0..per).map(move |i| w.start + i as f64 / rate))
            .collect()
    }

    pub fn is_measuring(&self, t: f64) -> bool {
        let phase = t.rem_euclid(self.period());
        phase >= self.calibration_time() - 1e-15
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_duty_rejected() {
        assert!(matches!(acquisition_windows(10.0, 0.1), Err(Error::Schedule(_))));
        assert!(acquisition_windows(10.0, 0.2).is_err());
        assert!(acquisition_windows(0.0, 0.1).is_err());
    }

    #[test]
    fn half_duty_cycle() {
        let s = acquisition_windows(10.0, 0.05).unwrap();
        assert!((s.duty_cycle() - 0.5).abs() < 1e-12);
        let w = s.windows(2.0);
        assert_eq!(w.len(), 20);
        assert!((w[0].start - 0.05).abs() < 1e-12 && (w[0].end - 0.1).abs() < 1e-12);
        assert!(s.is_measuring(0.07) && !s.is_measuring(0.02));
    }

    #[test]
    fn short_windows() {
        // 100 Hz with 5 ms windows: 100 windows per second, 500 in 5 s
        let s = acquisition_windows(100.0, 0.005).unwrap();
        assert_eq!(s.windows(1.0).len(), 100);
        assert_eq!(s.windows(5.0).len(), 500);
        assert_eq!(s.samples_per_window(2e4), 100);
        let t = s.sample_times(2e4, 1.0);
        assert_eq!(t.len(), 100 * 100);
        assert!(t.iter().all(|&x| s.is_measuring(x)));
    }
}
