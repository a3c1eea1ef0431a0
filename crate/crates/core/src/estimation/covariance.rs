use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::detection::{HomodynePhase, HomodyneRecord};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_SAMPLES: usize = 100;

/// Covariance estimated from an amplitude and a phase homodyne record.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedCovariance<T: Real> {
    /// `2n×2n`, ordered `(x_1..x_n, p_1..p_n)`; the x–p block is zero.
    pub cov: DMatrix<T>,
    /// Smaller of the two record lengths.
    pub n_samples: usize,
    /// Standard error of each entry (zero in the x–p block).
    pub stderr: DMatrix<T>,
}

fn nested<T: Real>(m: &DMatrix<T>) -> Value {
    Value::Array(
        m.row_iter()
            .map(|r| Value::Array(r.iter().map(|v| json!(v.as_f64())).collect()))
            .collect(),
    )
}

fn from_nested<T: Real>(v: &Value, what: &str) -> Result<DMatrix<T>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("{what}: expected an array of rows")))?;
    let n = rows.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, r) in rows.iter().enumerate() {
        let r = r
            .as_array()
            .filter(|r| r.len() == n)
            .ok_or_else(|| Error::Parse(format!("{what}: row {i} is not of length {n}")))?;
        for (j, x) in r.iter().enumerate() {
            m[(i, j)] = T::lit(
                x.as_f64()
                    .ok_or_else(|| Error::Parse(format!("{what}[{i}][{j}] is not a number")))?,
            );
        }
    }
    Ok(m)
}

impl<T: Real> ReconstructedCovariance<T> {
    pub fn n_modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "n_modes": self.n_modes(),
            "n_samples": self.n_samples,
            "covariance": nested(&self.cov),
            "stderr": nested(&self.stderr),
        })
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let n_samples = v["n_samples"]
            .as_u64()
            .ok_or_else(|| Error::Parse("n_samples missing".into()))? as usize;
        let cov = from_nested(&v["covariance"], "covariance")?;
        let stderr = from_nested(&v["stderr"], "stderr")?;
        if cov.nrows() % 2 != 0 || stderr.shape() != cov.shape() {
            return Err(Error::Parse("covariance and stderr shapes disagree".into()));
        }
        Ok(Self {
            cov,
            n_samples,
            stderr,
        })
    }
}

/// Normalized quadrature samples `o_i = I⁻_i/(2|α_i|)` and their
/// centered second moments.
fn block<T: Real>(rec: &HomodyneRecord<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let n = rec.samples.len();
    let len = rec.samples.first().map_or(0, Vec::len);
    if len < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "{len} samples per pixel, at least {MIN_SAMPLES} needed"
        )));
    }
    let mut o: Vec<Vec<T>> = Vec::with_capacity(n);
    for (i, (s, &a)) in rec.samples.iter().zip(&rec.lo_alpha).enumerate() {
        if s.len() != len {
            return Err(Error::Domain("pixel records differ in length".into()));
        }
        if a == T::zero() {
            return Err(Error::DeadPixel(i));
        }
        let g = T::lit(2.0) * a.abs();
        let mean = s.iter().fold(T::zero(), |acc, &v| acc + v) / T::lit(len as f64);
        o.push(s.iter().map(|&v| (v - mean) / g).collect());
    }
    let nf = T::lit(len as f64);
    let mut cov = DMatrix::zeros(n, n);
    let mut err = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let (a, b) = (&o[i], &o[j]);
            let (s1, s2) = a.iter().zip(b).fold((T::zero(), T::zero()), |(s1, s2), (&x, &y)| {
                let p = x * y;
                (s1 + p, s2 + p * p)
            });
            let c = s1 / (nf - T::one());
            let m = s1 / nf;
            let var_p = (s2 / nf - m * m).max(T::zero()) * nf / (nf - T::one());
            let e = (var_p / nf).sqrt();
            cov[(i, j)] = c;
            cov[(j, i)] = c;
            err[(i, j)] = e;
            err[(j, i)] = e;
        }
    }
    Ok((cov, err))
}

/// Amplitude and phase blocks from separate records; the x–p block is not
/// observable from them and is set to zero.
pub fn reconstruct_covariance<T: Real>(
    x_records: &HomodyneRecord<T>,
    p_records: &HomodyneRecord<T>,
) -> Result<ReconstructedCovariance<T>> {
    if x_records.phase != HomodynePhase::X || p_records.phase != HomodynePhase::P {
        return Err(Error::Domain("expected one record at phase 0 and one at π/2".into()));
    }
    let n = x_records.samples.len();
    if p_records.samples.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: p_records.samples.len(),
        });
    }
    if x_records.lo_alpha.len() != n || x_records.lo_alpha != p_records.lo_alpha {
        return Err(Error::Domain("LO amplitudes differ between the two records".into()));
    }
    let (cx, ex) = block(x_records)?;
    let (cp, ep) = block(p_records)?;
    let mut cov = DMatrix::zeros(2 * n, 2 * n);
    let mut stderr = DMatrix::zeros(2 * n, 2 * n);
    cov.view_mut((0, 0), (n, n)).copy_from(&cx);
    cov.view_mut((n, n), (n, n)).copy_from(&cp);
    stderr.view_mut((0, 0), (n, n)).copy_from(&ex);
    stderr.view_mut((n, n), (n, n)).copy_from(&ep);
    Ok(ReconstructedCovariance {
        cov,
        n_samples: x_records.samples[0].len().min(p_records.samples[0].len()),
        stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::synthesize_homodyne;
    use crate::gaussian::vacuum_state;

    #[test]
    fn vacuum_reconstructs_identity() {
        let v = vacuum_state::<f64>(4).unwrap();
        let alpha = [1.0, 2.0, 3.0, 4.0];
        let x = synthesize_homodyne(&v, &alpha, HomodynePhase::X, 100_000, 5).unwrap();
        let p = synthesize_homodyne(&v, &alpha, HomodynePhase::P, 100_000, 5).unwrap();
        let r = reconstruct_covariance(&x, &p).unwrap();
        assert_eq!(r.n_samples, 100_000);
        let truth = DMatrix::<f64>::identity(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                let d = (r.cov[(i, j)] - truth[(i, j)]).abs();
                if (i < 4) == (j < 4) {
                    assert!(d <= 3.0 * r.stderr[(i, j)] + 1e-12, "({i},{j}) {d}");
                } else {
                    assert_eq!(r.cov[(i, j)], 0.0);
                }
            }
        }
        assert_eq!(r.cov, r.cov.transpose());
    }

    #[test]
    fn mismatches_rejected() {
        let v = vacuum_state::<f64>(2).unwrap();
        let x = synthesize_homodyne(&v, &[1.0, 1.0], HomodynePhase::X, 200, 1).unwrap();
        let p = synthesize_homodyne(&v, &[1.0, 2.0], HomodynePhase::P, 200, 1).unwrap();
        assert!(reconstruct_covariance(&x, &p).is_err());
        assert!(reconstruct_covariance(&x, &x).is_err());
        let short = synthesize_homodyne(&v, &[1.0, 1.0], HomodynePhase::P, 50, 1).unwrap();
        assert!(reconstruct_covariance(&x, &short).is_err());
        let v3 = vacuum_state::<f64>(3).unwrap();
        let p3 = synthesize_homodyne(&v3, &[1.0; 3], HomodynePhase::P, 200, 1).unwrap();
        assert!(matches!(reconstruct_covariance(&x, &p3), Err(Error::Dimension { .. })));
    }

    #[test]
    fn json_round_trip() {
        let v = vacuum_state::<f64>(2).unwrap();
        let x = synthesize_homodyne(&v, &[1.0, 1.0], HomodynePhase::X, 500, 1).unwrap();
        let p = synthesize_homodyne(&v, &[1.0, 1.0], HomodynePhase::P, 500, 1).unwrap();
        let r = reconstruct_covariance(&x, &p).unwrap();
        let text = serde_json::to_string(&r.to_json_value()).unwrap();
        let back = ReconstructedCovariance::<f64>::from_json_value(&serde_json::from_str(&text).unwrap())
            .unwrap();
        assert_eq!(back, r);
    }
}
