use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::rng::stream_rng;
use super::schedule::AcquisitionSchedule;
use super::HomodyneRecord;
use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, Quadrature};
use crate::scalar::Real;

/// Acquisition rate assigned to unscheduled homodyne records.
pub const DEFAULT_SAMPLE_RATE: f64 = 2e4;

/// Local-oscillator phase: 0 reads the amplitude quadrature, π/2 the phase
/// quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HomodynePhase {
    X,
    P,
}

impl HomodynePhase {
    pub fn angle(self) -> f64 {
        match self {
            Self::X => 0.0,
            Self::P => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Accepts only 0 or π/2 (to 1e-9 rad).
    pub fn from_angle(theta: f64) -> Result<Self> {
        if theta.abs() < 1e-9 {
            Ok(Self::X)
        } else if (theta - std::f64::consts::FRAC_PI_2).abs() < 1e-9 {
            Ok(Self::P)
        } else {
            Err(Error::Domain(format!("homodyne phase {theta} is neither 0 nor π/2")))
        }
    }

    pub fn quadrature(self) -> Quadrature {
        match self {
            Self::X => Quadrature::Amplitude,
            Self::P => Quadrature::Phase,
        }
    }
}

impl fmt::Display for HomodynePhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::X => "x",
            Self::P => "p",
        })
    }
}

fn draw<T: Real>(
    state: &GaussianState<T>,
    lo_alpha: &[T],
    phase: HomodynePhase,
    times: Vec<f64>,
    seed: u64,
) -> Result<HomodyneRecord<T>> {
    let n = state.n_modes();
    if lo_alpha.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: lo_alpha.len(),
        });
    }
    if lo_alpha.iter().any(|a| !a.is_finite()) {
        return Err(Error::Domain("LO amplitudes must be finite".into()));
    }
    let q = phase.quadrature();
    let block = state.block(q);
    let l = block
        .cholesky()
        .ok_or_else(|| Error::Numeric("quadrature block is not positive definite".into()))?
        .l();
    let mean = state.mean_block(q);
    let gain: Vec<T> = lo_alpha.iter().map(|a| T::lit(2.0) * a.abs()).collect();
    // the two phases draw from distinct streams so x and p records sharing a
    // seed stay independent
    let mut rng = stream_rng(seed, phase as u64);
    let mut samples = vec![Vec::with_capacity(times.len()); n];
    let mut z = DVector::<T>::zeros(n);
    let mut o = DVector::<T>::zeros(n);
    for _ in 0..times.len() {
        z.iter_mut().for_each(|v| *v = T::standard_normal(&mut rng));
        l.mul_to(&z, &mut o);
        for i in 0..n {
            samples[i].push(gain[i] * (mean[i] + o[i]));
        }
    }
    Ok(HomodyneRecord {
        samples,
        lo_alpha: lo_alpha.to_vec(),
        phase,
        times,
        seed,
    })
}

/// I.i.d. homodyne samples `I⁻_i = 2|α_i|·o_i`, with `o` drawn from the
/// state's quadrature block at `phase`.
pub fn synthesize_homodyne<T: Real>(
    state: &GaussianState<T>,
    lo_alpha: &[T],
    phase: HomodynePhase,
    n_samples: usize,
    seed: u64,
) -> Result<HomodyneRecord<T>> {
    let times = (0..n_samples)
        .map(|k| k as f64 / DEFAULT_SAMPLE_RATE)
        .collect();
    draw(state, lo_alpha, phase, times, seed)
}

/// Like [`synthesize_homodyne`], sampling at `rate` only inside the
/// measurement windows of `schedule` over `[0, duration]`.
pub fn synthesize_homodyne_scheduled<T: Real>(
    state: &GaussianState<T>,
    lo_alpha: &[T],
    phase: HomodynePhase,
    schedule: &AcquisitionSchedule,
    rate: f64,
    duration: f64,
    seed: u64,
) -> Result<HomodyneRecord<T>> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Schedule("sample rate must be positive".into()));
    }
    let times = schedule.sample_times(rate, duration);
    if times.is_empty() {
        return Err(Error::Schedule(format!(
            "no complete measurement window fits in {duration} s"
        )));
    }
    draw(state, lo_alpha, phase, times, seed)
}
