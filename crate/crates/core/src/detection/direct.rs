use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dsp::{reference, DspChain};
use super::rng::stream_rng;
use super::PhotocurrentRecord;
use crate::error::{Error, Result};
use crate::gaussian::GaussianState;
use crate::scalar::Real;
use crate::spectral::{PixelModes, Projection};

/// Sinusoidal modulation applied to the bright beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationConfig<T> {
    pub f_m: f64,
    /// Central-frequency depth `δω` (rad/s).
    pub depth_omega: T,
    /// Energy depth `δN` (photons/s).
    pub depth_n: T,
}

impl<T: Real> ModulationConfig<T> {
    pub fn new(f_m: f64, depth_omega: T, depth_n: T) -> Result<Self> {
        if !(f_m.is_finite() && f_m > 0.0) {
            return Err(Error::Domain("modulation frequency must be positive".into()));
        }
        if !(depth_omega >= T::zero() && depth_n >= T::zero()) {
            return Err(Error::Domain("modulation depths must be non-negative".into()));
        }
        Ok(Self {
            f_m,
            depth_omega,
            depth_n,
        })
    }
}

/// Everything about the bright beam a direct-detection record depends on
/// besides the noise state.
#[derive(Debug, Clone)]
pub struct DirectScene<T> {
    /// Detected pixel amplitudes per measurement event.
    pub alpha: Vec<T>,
    /// Pixel coefficients of the mean-field mode.
    pub mean_field: Vec<T>,
    /// Pixel coefficients of the derivative mode.
    pub derivative: Vec<T>,
    /// Incident photons per measurement event.
    pub photons_per_event: T,
    /// Intensity transmission between source and detector.
    pub transmission: T,
    pub delta_omega: T,
}

impl<T: Real> DirectScene<T> {
    /// Scene for a beam of `photon_rate` photons/s observed through `dsp`,
    /// one event lasting the filter's measurement time.
    pub fn new(
        pixels: &PixelModes<T>,
        mean_field: &Projection<T>,
        derivative: &Projection<T>,
        photon_rate: T,
        transmission: T,
        delta_omega: T,
        dsp: &DspChain,
    ) -> Result<Self> {
        let n = pixels.len();
        for p in [mean_field, derivative] {
            if p.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: p.len(),
                });
            }
        }
        if !(transmission > T::zero() && transmission <= T::one()) {
            return Err(Error::Domain("transmission must lie in (0, 1]".into()));
        }
        if !(photon_rate > T::zero() && delta_omega > T::zero()) {
            return Err(Error::Domain("photon rate and bandwidth must be positive".into()));
        }
        let photons_per_event = photon_rate * T::lit(dsp.measurement_time());
        Ok(Self {
            alpha: pixels.alpha_for(transmission * photons_per_event),
            mean_field: mean_field.m.clone(),
            derivative: derivative.m.clone(),
            photons_per_event,
            transmission,
            delta_omega,
        })
    }

    /// Quadrature displacement amplitudes `(A_ω, A_N)` per event:
    /// `A_ω = √(tN)·δω/Δω` along the derivative mode and
    /// `A_N = √t·δN/√N` along the mean-field mode.
    pub fn displacements(&self, modulation: &ModulationConfig<T>, dsp: &DspChain) -> (T, T) {
        let n = self.photons_per_event;
        let st = self.transmission.sqrt();
        let a_omega = st * n.sqrt() * modulation.depth_omega / self.delta_omega;
        let dn = modulation.depth_n * T::lit(dsp.measurement_time());
        let a_n = st * dn / n.sqrt();
        (a_omega, a_n)
    }

    /// Per-pixel signal amplitude `s_i` multiplying `sin(2π f_m t)`.
    pub fn signal(&self, modulation: &ModulationConfig<T>, dsp: &DspChain) -> Vec<T> {
        let (a_omega, a_n) = self.displacements(modulation, dsp);
        self.derivative
            .iter()
            .zip(&self.mean_field)
            .map(|(&d, &m)| a_omega * d + a_n * m)
            .collect()
    }
}

/// Noise factor `L` with `L Lᵀ = C_x`; `None` when `C_x` is diagonal.
fn noise_factor<T: Real>(cx: &DMatrix<T>) -> Result<(Vec<T>, Option<DMatrix<T>>)> {
    let n = cx.nrows();
    let diag: Vec<T> = (0..n).map(|i| cx[(i, i)].sqrt()).collect();
    let off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .fold(T::zero(), |m, (i, j)| m.max(cx[(i, j)].abs()));
    if off == T::zero() {
        return Ok((diag, None));
    }
    let l = cx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("amplitude block is not positive definite".into()))?
        .l();
    Ok((diag, Some(l)))
}

/// Raw photocurrents `δI_i(t) = α_i[s_i sin(2π f_m t) + n_i(t)]`.
///
/// `n(t)` is white with covariance `C_x / g`, where `g` is the exact noise
/// gain of the lock-in chain, so the demodulated streams carry the state's
/// amplitude-quadrature covariance.
pub fn synthesize_direct<T: Real>(
    state: &GaussianState<T>,
    scene: &DirectScene<T>,
    modulation: &ModulationConfig<T>,
    dsp: &DspChain,
    seed: u64,
    stream: u64,
) -> Result<PhotocurrentRecord<T>> {
    let n = state.n_modes();
    for len in [scene.alpha.len(), scene.mean_field.len(), scene.derivative.len()] {
        if len != n {
            return Err(Error::Dimension {
                expected: n,
                found: len,
            });
        }
    }
    dsp.validate(modulation.f_m)?;
    let (diag, full) = noise_factor(&state.x_block())?;
    let sigma = T::lit(dsp.noise_gain().recip().sqrt());
    let signal = scene.signal(modulation, dsp);
    let len = dsp.raw_len();
    let settle = dsp.settle_samples();
    let carrier: Vec<T> = reference(len, settle, modulation.f_m, dsp.raw_rate);

    let mut rng = stream_rng(seed, stream);
    let mut samples = vec![Vec::with_capacity(len); n];
    let mut z = DVector::<T>::zeros(n);
    let mut w = DVector::<T>::zeros(n);
    for &c in &carrier {
        z.iter_mut().for_each(|v| *v = T::standard_normal(&mut rng));
        match &full {
            Some(l) => l.mul_to(&z, &mut w),
            None => z.iter().zip(&diag).zip(w.iter_mut()).for_each(|((&a, &d), o)| *o = a * d),
        }
        for i in 0..n {
            samples[i].push(scene.alpha[i] * (signal[i] * c + sigma * w[i]));
        }
    }
    Ok(PhotocurrentRecord {
        samples,
        alpha: scene.alpha.clone(),
        raw_rate: dsp.raw_rate,
        settle_samples: settle,
        f_m: modulation.f_m,
        seed,
        stream,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::demodulate;
    use crate::gaussian::vacuum_state;

    fn scene() -> DirectScene<f64> {
        // four pixels carrying 0.1, 0.4, 0.4, 0.1 of the beam
        let p = [0.1, 0.4, 0.4, 0.1];
        let mf: Vec<f64> = p.iter().map(|v: &f64| v.sqrt()).collect();
        let d = vec![0.5, 0.5, -0.5, -0.5];
        let n_evt: f64 = 8e11;
        DirectScene {
            alpha: p.iter().map(|v| (v * n_evt).sqrt()).collect(),
            mean_field: mf,
            derivative: d,
            photons_per_event: n_evt,
            transmission: 1.0,
            delta_omega: 1e13,
        }
    }

    fn project(rec: &super::super::DemodulatedRecord<f64>, m: &[f64]) -> Vec<f64> {
        let k = rec.streams[0].len();
        (0..k)
            .map(|t| {
                (0..m.len())
                    .map(|i| m[i] * rec.streams[i][t] / rec.alpha[i])
                    .sum()
            })
            .collect()
    }

    fn stats(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn vacuum_streams_are_shot_noise_calibrated() {
        let dsp = DspChain::default();
        let sc = scene();
        let m = ModulationConfig::new(1.5e6, 0.0, 0.0).unwrap();
        let rec = synthesize_direct(&vacuum_state(4).unwrap(), &sc, &m, &dsp, 3, 0).unwrap();
        let out = demodulate(&rec, 1.5e6, &dsp).unwrap();
        for (i, s) in out.streams.iter().enumerate() {
            let x: Vec<f64> = s.iter().map(|v| v / sc.alpha[i]).collect();
            let (mean, var) = stats(&x);
            // samples 50 μs apart are nearly independent: σ(var) ≈ √(2/n)
            let sigma = (2.0 / x.len() as f64).sqrt();
            assert!((var - 1.0).abs() < 5.0 * sigma, "pixel {i}: {var}");
            assert!(mean.abs() < 5.0 / (x.len() as f64).sqrt());
        }
    }

    #[test]
    fn frequency_signal_is_linear_in_depth() {
        let dsp = DspChain::default();
        let sc = scene();
        let vac = vacuum_state(4).unwrap();
        let mean_for = |depth: f64, seed| {
            let m = ModulationConfig::new(1.5e6, depth, 0.0).unwrap();
            let rec = synthesize_direct(&vac, &sc, &m, &dsp, seed, 0).unwrap();
            let out = demodulate(&rec, 1.5e6, &dsp).unwrap();
            stats(&project(&out, &sc.derivative))
        };
        let (m0, v0) = mean_for(0.0, 5);
        let (m1, v1) = mean_for(3e7, 5);
        let (m2, v2) = mean_for(6e7, 5);
        // identical seed → identical noise, so the means differ only by the signal
        assert!(((m2 - m1) / (m1 - m0) - 1.0).abs() < 1e-9, "{m0} {m1} {m2}");
        assert!((v1 - v0).abs() < 1e-9 * v0 && (v2 - v0).abs() < 1e-9 * v0);
        // analytic displacement √N δω/Δω
        let expected = 8e11_f64.sqrt() * 3e7 / 1e13;
        assert!(((m1 - m0) / expected - 1.0).abs() < 1e-3, "{} vs {expected}", m1 - m0);
        // mean independent of seed within statistics
        let (m3, _) = mean_for(3e7, 9);
        assert!((m3 - m1).abs() < 5.0 * (2.0 / 1000.0_f64).sqrt());
    }

    #[test]
    fn records_are_reproducible() {
        let dsp = DspChain {
            n_output: 10,
            ..DspChain::default()
        };
        let sc = scene();
        let m = ModulationConfig::new(1.5e6, 1e7, 1e12).unwrap();
        let vac = vacuum_state(4).unwrap();
        let a = synthesize_direct(&vac, &sc, &m, &dsp, 42, 7).unwrap();
        let b = synthesize_direct(&vac, &sc, &m, &dsp, 42, 7).unwrap();
        let c = synthesize_direct(&vac, &sc, &m, &dsp, 42, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn dimension_checked() {
        let sc = scene();
        let m = ModulationConfig::new(1.5e6, 0.0, 0.0).unwrap();
        let r = synthesize_direct(&vacuum_state(3).unwrap(), &sc, &m, &DspChain::default(), 0, 0);
        assert!(matches!(r, Err(Error::Dimension { .. })));
        assert!(ModulationConfig::new(0.0, 1.0, 1.0).is_err());
        assert!(ModulationConfig::new(1.0, -1.0, 1.0).is_err());
    }
}
