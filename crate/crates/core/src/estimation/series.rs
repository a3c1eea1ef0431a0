use serde::{Deserialize, Serialize};

use crate::detection::DemodulatedRecord;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::Projection;

/// `δx^m(t) = (1/η) Σ_i m_i δI_i(t)/α_i` over the demodulated streams.
pub fn reconstruct_mode_series<T: Real>(
    record: &DemodulatedRecord<T>,
    proj: &Projection<T>,
) -> Result<Vec<T>> {
    let n = record.streams.len();
    if proj.len() != n || record.alpha.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: proj.len(),
        });
    }
    if !(proj.eta > T::zero()) {
        return Err(Error::Numeric(format!(
            "projection onto {} has zero efficiency",
            proj.target_name
        )));
    }
    let mut weights = Vec::with_capacity(n);
    for (i, (&m, &a)) in proj.m.iter().zip(&record.alpha).enumerate() {
        if m == T::zero() {
            weights.push(T::zero());
        } else if a == T::zero() {
            return Err(Error::DeadPixel(i));
        } else {
            weights.push(m / (a * proj.eta));
        }
    }
    let len = record.streams.first().map_or(0, Vec::len);
    if record.streams.iter().any(|s| s.len() != len) {
        return Err(Error::Domain("pixel streams differ in length".into()));
    }
    Ok((0..len)
        .map(|k| {
            record
                .streams
                .iter()
                .zip(&weights)
                .fold(T::zero(), |acc, (s, &w)| acc + w * s[k])
        })
        .collect())
}

/// Drops pixels with zero amplitude from a projection; `η` is recomputed
/// from the remaining coefficients.
pub fn exclude_dead_pixels<T: Real>(proj: &Projection<T>, alpha: &[T]) -> Result<Projection<T>> {
    let keep: Vec<bool> = alpha.iter().map(|&a| a != T::zero()).collect();
    proj.restricted(&keep)
}

/// Amplitude SNR of one reconstructed series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint<T> {
    pub depth: T,
    pub mean: T,
    pub std: T,
    pub snr: T,
}

/// `|mean|/std` with the unbiased sample deviation.
pub fn snr_point<T: Real>(depth: T, series: &[T]) -> Result<SnrPoint<T>> {
    if series.len() < 2 {
        return Err(Error::Numeric("SNR needs at least two samples".into()));
    }
    let n = T::from_usize(series.len()).unwrap_or_else(T::one);
    let mean = series.iter().fold(T::zero(), |a, &v| a + v) / n;
    let var = series
        .iter()
        .fold(T::zero(), |a, &v| a + (v - mean) * (v - mean))
        / (n - T::one());
    if !(var > T::zero()) {
        return Err(Error::Numeric("series has zero variance".into()));
    }
    let std = var.sqrt();
    Ok(SnrPoint {
        depth,
        mean,
        std,
        snr: mean.abs() / std,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrCurve<T> {
    pub points: Vec<SnrPoint<T>>,
    /// Least-squares slope of SNR against depth through the origin.
    pub slope: T,
}

impl<T: Real> SnrCurve<T> {
    /// Depth at which the fitted SNR equals one.
    pub fn sensitivity(&self) -> T {
        self.slope.recip()
    }
}

pub fn snr_curve<T: Real>(points: Vec<SnrPoint<T>>) -> Result<SnrCurve<T>> {
    let mut depths: Vec<f64> = points.iter().map(|p| p.depth.as_f64()).collect();
    depths.sort_by(f64::total_cmp);
    depths.dedup();
    if depths.iter().filter(|&&d| d > 0.0).count() < 3 {
        return Err(Error::Domain("SNR curve needs at least three positive depths".into()));
    }
    let (sxy, sxx) = points.iter().fold((T::zero(), T::zero()), |(xy, xx), p| {
        (xy + p.depth * p.snr, xx + p.depth * p.depth)
    });
    Ok(SnrCurve {
        slope: sxy / sxx,
        points,
    })
}
