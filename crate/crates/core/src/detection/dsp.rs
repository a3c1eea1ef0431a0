//! Lock-in chain: reference multiplication, cascaded one-pole low-pass and
//! decimation to the acquisition rate.

use serde::{Deserialize, Serialize};

use super::{DemodulatedRecord, PhotocurrentRecord};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sampling and filtering parameters of the acquisition chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspChain {
    /// Simulated analog sample rate (samples/s).
    pub raw_rate: f64,
    /// Pole frequency of each low-pass section (Hz).
    pub lowpass_cutoff: f64,
    pub lowpass_order: usize,
    /// Acquisition rate after decimation (samples/s).
    pub output_rate: f64,
    /// Acquired samples per record.
    pub n_output: usize,
}

impl Default for DspChain {
    fn default() -> Self {
        Self {
            raw_rate: 12e6,
            lowpass_cutoff: 5e4,
            lowpass_order: 4,
            output_rate: 2e4,
            n_output: 1000,
        }
    }
}

impl DspChain {
    /// `(field, message)` for every violated constraint.
    pub fn diagnostics(&self, f_m: f64) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.raw_rate) {
            out.push(("raw_rate", "must be positive".to_string()));
        } else if !(self.raw_rate > 4.0 * f_m) {
            out.push((
                "raw_rate",
                format!("{} Hz must exceed 4·f_m = {} Hz", self.raw_rate, 4.0 * f_m),
            ));
        }
        if !positive(self.lowpass_cutoff) {
            out.push(("lowpass_cutoff", "must be positive".to_string()));
        }
        if self.lowpass_order == 0 {
            out.push(("lowpass_order", "must be at least 1".to_string()));
        }
        if !positive(self.output_rate) {
            out.push(("output_rate", "must be positive".to_string()));
        } else if self.output_rate > 2.0 * self.lowpass_cutoff {
            out.push((
                "output_rate",
                format!(
                    "{} samples/s exceeds 2·cutoff = {}",
                    self.output_rate,
                    2.0 * self.lowpass_cutoff
                ),
            ));
        } else if positive(self.raw_rate) {
            let ratio = self.raw_rate / self.output_rate;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
                out.push((
                    "output_rate",
                    format!("raw_rate/output_rate = {ratio} is not an integer"),
                ));
            }
        }
        if self.n_output == 0 {
            out.push(("n_output", "must be positive".to_string()));
        }
        out
    }

    pub fn validate(&self, f_m: f64) -> Result<()> {
        match self.diagnostics(f_m).into_iter().next() {
            Some((field, msg)) => Err(Error::Config(format!("dsp.{field}: {msg}"))),
            None => Ok(()),
        }
    }

    /// Raw samples per acquired sample.
    pub fn decimation(&self) -> usize {
        (self.raw_rate / self.output_rate).round() as usize
    }

    /// Duration of one measurement event, set by the filter bandwidth.
    pub fn measurement_time(&self) -> f64 {
        1.0 / self.lowpass_cutoff
    }

    /// Acquisition periods discarded while the filter settles.
    pub fn settle_outputs(&self) -> usize {
        let tau = self.lowpass_order as f64 / (2.0 * std::f64::consts::PI * self.lowpass_cutoff);
        ((30.0 * tau * self.output_rate).ceil() as usize).max(1)
    }

    pub fn settle_samples(&self) -> usize {
        self.settle_outputs() * self.decimation()
    }

    /// Raw samples a record needs to yield `n_output` settled outputs.
    pub fn raw_len(&self) -> usize {
        self.settle_samples() + self.n_output * self.decimation()
    }

    /// Variance of the demodulated output per unit variance of white raw
    /// input: the reference `2 sin` doubles the power, the filter keeps
    /// `Σh²` of it.
    pub fn noise_gain(&self) -> f64 {
        2.0 * impulse_energy(self.lowpass_cutoff, self.raw_rate, self.lowpass_order)
    }
}

/// Cascade of identical one-pole low-pass sections,
/// `y ← y + a (x - y)` with `a = 1 - exp(-2π f_c / f_s)`.
#[derive(Debug, Clone)]
pub struct LowPass<T> {
    coeff: T,
    state: Vec<T>,
}

impl<T: Real> LowPass<T> {
    pub fn new(cutoff: f64, rate: f64, order: usize) -> Self {
        let a = 1.0 - (-2.0 * std::f64::consts::PI * cutoff / rate).exp();
        Self {
            coeff: T::lit(a),
            state: vec![T::zero(); order],
        }
    }

    #[inline]
    pub fn step(&mut self, x: T) -> T {
        let mut v = x;
        for y in &mut self.state {
            *y += self.coeff * (v - *y);
            v = *y;
        }
        v
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|y| *y = T::zero());
    }
}

/// `Σ h[k]²` of the cascade's impulse response.
fn impulse_energy(cutoff: f64, rate: f64, order: usize) -> f64 {
    let mut f = LowPass::<f64>::new(cutoff, rate, order);
    let mut total = 0.0;
    let mut x = 1.0;
    let mut k = 0usize;
    loop {
        let h = f.step(x);
        x = 0.0;
        total += h * h;
        k += 1;
        let settled = f.state.iter().all(|y| y.abs() < 1e-13);
        if (k > 16 && settled) || k > 100_000_000 {
            return total;
        }
    }
}

/// Reference `sin(2π f_m t)` on the raw time base of a record.
pub(crate) fn reference<T: Real>(len: usize, settle: usize, f_m: f64, rate: f64) -> Vec<T> {
    let w = 2.0 * std::f64::consts::PI * f_m / rate;
    (0..len)
        .map(|j| T::lit((w * (j as f64 - settle as f64)).sin()))
        .collect()
}

/// Multiplies each pixel stream by `2 sin(2π f_m t)`, low-passes it and
/// keeps one sample per acquisition period after the settling prefix.
pub fn demodulate<T: Real>(
    record: &PhotocurrentRecord<T>,
    f_m: f64,
    dsp: &DspChain,
) -> Result<DemodulatedRecord<T>> {
    if !(dsp.raw_rate > 4.0 * f_m) {
        return Err(Error::Config(format!(
            "raw rate {} Hz aliases the {} Hz modulation",
            dsp.raw_rate, f_m
        )));
    }
    dsp.validate(f_m)?;
    if (record.raw_rate - dsp.raw_rate).abs() > 1e-9 * dsp.raw_rate {
        return Err(Error::Config("record and chain disagree on the raw rate".into()));
    }
    let settle = record.settle_samples;
    let dec = dsp.decimation();
    let len = record.samples.first().map_or(0, Vec::len);
    if len < settle + dsp.n_output * dec {
        return Err(Error::Config(format!(
            "record holds {len} raw samples, chain needs {}",
            settle + dsp.n_output * dec
        )));
    }
    let reference: Vec<T> = reference::<T>(len, settle, f_m, dsp.raw_rate);
    let two = T::lit(2.0);
    let mut filter = LowPass::<T>::new(dsp.lowpass_cutoff, dsp.raw_rate, dsp.lowpass_order);
    let streams = record
        .samples
        .iter()
        .map(|raw| {
            filter.reset();
            let mut out = Vec::with_capacity(dsp.n_output);
            let last = settle + (dsp.n_output - 1) * dec;
            for (j, (&x, &r)) in raw.iter().zip(&reference).enumerate().take(last + 1) {
                let y = filter.step(two * r * x);
                if j >= settle && (j - settle) % dec == 0 {
                    out.push(y);
                }
            }
            out
        })
        .collect();
    Ok(DemodulatedRecord {
        streams,
        alpha: record.alpha.clone(),
        output_rate: dsp.output_rate,
        seed: record.seed,
        stream: record.stream,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::rng::stream_rng;

    fn tone_record(amp: f64, freq: f64, dsp: &DspChain, f_m: f64) -> PhotocurrentRecord<f64> {
        let settle = dsp.settle_samples();
        let w = 2.0 * std::f64::consts::PI * freq / dsp.raw_rate;
        let samples = (0..dsp.raw_len())
            .map(|j| amp * (w * (j as f64 - settle as f64)).sin())
            .collect();
        PhotocurrentRecord {
            samples: vec![samples],
            alpha: vec![1.0],
            raw_rate: dsp.raw_rate,
            settle_samples: settle,
            f_m,
            seed: 0,
            stream: 0,
        }
    }

    #[test]
    fn pure_tone_demodulates_to_its_amplitude() {
        let dsp = DspChain {
            n_output: 50,
            ..DspChain::default()
        };
        let rec = tone_record(2.5, 1.5e6, &dsp, 1.5e6);
        let out = demodulate(&rec, 1.5e6, &dsp).unwrap();
        for v in &out.streams[0] {
            assert!((v / 2.5 - 1.0).abs() < 0.01, "{v}");
        }
    }

    #[test]
    fn off_band_tone_is_rejected() {
        let dsp = DspChain {
            n_output: 50,
            ..DspChain::default()
        };
        let f = 1.5e6 + 10.0 * dsp.lowpass_cutoff;
        let rec = tone_record(1.0, f, &dsp, 1.5e6);
        let out = demodulate(&rec, 1.5e6, &dsp).unwrap();
        let peak = out.streams[0].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(20.0 * peak.log10() < -40.0, "attenuation {} dB", 20.0 * peak.log10());
    }

    #[test]
    fn white_noise_follows_enbw() {
        // oracle: output variance ≈ σ²·2·cutoff/raw_rate
        let dsp = DspChain {
            n_output: 4000,
            ..DspChain::default()
        };
        let sigma2: f64 = 3.0;
        let mut rng = stream_rng(11, 0);
        let samples: Vec<f64> = (0..dsp.raw_len())
            .map(|_| sigma2.sqrt() * f64::standard_normal(&mut rng))
            .collect();
        let rec = PhotocurrentRecord {
            samples: vec![samples],
            alpha: vec![1.0],
            raw_rate: dsp.raw_rate,
            settle_samples: dsp.settle_samples(),
            f_m: 1.5e6,
            seed: 11,
            stream: 0,
        };
        let out = demodulate(&rec, 1.5e6, &dsp).unwrap();
        let s = &out.streams[0];
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let var = s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s.len() - 1) as f64;
        let enbw = sigma2 * 2.0 * dsp.lowpass_cutoff / dsp.raw_rate;
        assert!((var / enbw - 1.0).abs() < 0.1, "var {var} vs {enbw}");
        // the exact gain used for calibration sits within 2% of the ENBW figure
        let exact = sigma2 * dsp.noise_gain();
        assert!((exact / enbw - 1.0).abs() < 0.02);
    }

    #[test]
    fn aliasing_configuration_rejected() {
        let dsp = DspChain {
            raw_rate: 2e6,
            output_rate: 2e4,
            ..DspChain::default()
        };
        let rec = PhotocurrentRecord::<f64> {
            samples: vec![vec![0.0; 10]],
            alpha: vec![1.0],
            raw_rate: 2e6,
            settle_samples: 0,
            f_m: 1.5e6,
            seed: 0,
            stream: 0,
        };
        assert!(matches!(demodulate(&rec, 1.5e6, &dsp), Err(Error::Config(_))));
        let fields: Vec<_> = dsp.diagnostics(1.5e6).into_iter().map(|d| d.0).collect();
        assert!(fields.contains(&"raw_rate"));
    }

    #[test]
    fn chain_constraints() {
        let ok = DspChain::default();
        assert!(ok.diagnostics(1.5e6).is_empty());
        assert_eq!(ok.decimation(), 600);
        assert!((ok.measurement_time() - 20e-6).abs() < 1e-15);
        let fast = DspChain {
            output_rate: 2e5,
            ..ok
        };
        assert_eq!(fast.diagnostics(1.5e6)[0].0, "output_rate");
        let odd = DspChain {
            output_rate: 7e3,
            ..ok
        };
        assert_eq!(odd.diagnostics(1.5e6)[0].0, "output_rate");
    }
}
