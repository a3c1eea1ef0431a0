use nalgebra::{DMatrix, DVector};
use std::cmp::Ordering;

use super::variance_to_db;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One eigenmode of the amplitude covariance block.
#[derive(Debug, Clone)]
pub struct Supermode<T: Real> {
    /// Unit vector over pixel modes; its largest component is positive.
    pub vector: DVector<T>,
    pub var_x: T,
    /// `vᵀ C_p v`.
    pub var_p: T,
    pub db_x: T,
    pub db_p: T,
}

impl<T: Real> Supermode<T> {
    /// dB of the less noisy quadrature.
    pub fn squeezing_db(&self) -> T {
        self.db_x.min(self.db_p)
    }

    pub fn is_amplitude_squeezed(&self) -> bool {
        self.var_x <= self.var_p
    }
}

#[derive(Debug, Clone)]
pub struct SupermodeOptions<T: Real> {
    /// Allowed `‖C_xp‖∞` relative to the largest diagonal entry.
    pub cross_tolerance: T,
    /// Reference shapes (e.g. Hermite-Gauss overlap vectors) used to order
    /// degenerate eigenvectors.
    pub reference: Vec<DVector<T>>,
}

impl<T: Real> Default for SupermodeOptions<T> {
    fn default() -> Self {
        Self {
            cross_tolerance: T::lit(1e-6),
            reference: Vec::new(),
        }
    }
}

fn canonical_sign<T: Real>(v: &mut DVector<T>) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() + T::tolerance(1e-12) {
            best = i;
        }
    }
    if v[best] < T::zero() {
        v.neg_mut();
    }
}

fn argmax_abs<T: Real>(v: &DVector<T>) -> usize {
    v.iter()
        .enumerate()
        .fold((0, T::zero()), |(bi, bv), (i, &x)| {
            if x.abs() > bv + T::tolerance(1e-12) {
                (i, x.abs())
            } else {
                (bi, bv)
            }
        })
        .0
}

fn reference_score<T: Real>(v: &DVector<T>, reference: &[DVector<T>]) -> T {
    reference.iter().fold(T::zero(), |best, r| {
        let nr = r.norm();
        if nr > T::zero() {
            best.max((v.dot(r) / nr).abs())
        } else {
            best
        }
    })
}

/// Eigenmodes of the x block of a covariance with negligible x–p
/// correlations, sorted by ascending x-variance.
pub fn supermode_extract<T: Real>(
    cov: &DMatrix<T>,
    options: &SupermodeOptions<T>,
) -> Result<Vec<Supermode<T>>> {
    let dim = cov.nrows();
    if dim == 0 || dim % 2 != 0 || cov.ncols() != dim {
        return Err(Error::Domain("covariance must be 2n×2n".into()));
    }
    let n = dim / 2;
    let cx = cov.view((0, 0), (n, n)).into_owned();
    let cp = cov.view((n, n), (n, n)).into_owned();
    let cross = cov.view((0, n), (n, n)).amax();
    let diag_max = cov.diagonal().amax();
    let tolerance = options.cross_tolerance * diag_max;
    if cross > tolerance {
        return Err(Error::CrossBlock {
            norm: cross.as_f64(),
            tolerance: tolerance.as_f64(),
        });
    }
    let cx = (&cx + cx.transpose()) * T::lit(0.5);
    let eig = cx.symmetric_eigen();
    let mut modes: Vec<Supermode<T>> = (0..n)
        .map(|k| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            canonical_sign(&mut v);
            let var_x = eig.eigenvalues[k];
            let var_p = v.dot(&(&cp * &v));
            Supermode {
                db_x: variance_to_db(var_x),
                db_p: variance_to_db(var_p),
                vector: v,
                var_x,
                var_p,
            }
        })
        .collect();

    let tie = T::tolerance(1e-9) * diag_max.max(T::one());
    modes.sort_by(|a, b| {
        if (a.var_x - b.var_x).abs() > tie {
            return a.var_x.partial_cmp(&b.var_x).unwrap_or(Ordering::Equal);
        }
        let (sa, sb) = (
            reference_score(&a.vector, &options.reference),
            reference_score(&b.vector, &options.reference),
        );
        if (sa - sb).abs() > T::tolerance(1e-9) {
            return sb.partial_cmp(&sa).unwrap_or(Ordering::Equal);
        }
        argmax_abs(&a.vector).cmp(&argmax_abs(&b.vector))
    });
    Ok(modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{state_from_pixel_supermodes, vacuum_state, PixelSupermode};

    #[test]
    fn vacuum_modes_are_shot_noise() {
        let v = vacuum_state::<f64>(8).unwrap();
        let modes = supermode_extract(v.cov(), &SupermodeOptions::default()).unwrap();
        assert_eq!(modes.len(), 8);
        for m in modes {
            assert!(m.db_x.abs() < 1e-12 && m.db_p.abs() < 1e-12);
        }
    }

    #[test]
    fn cross_block_is_refused() {
        let mut cov = DMatrix::<f64>::identity(4, 4) * 2.0;
        cov[(0, 2)] = 0.3;
        cov[(2, 0)] = 0.3;
        assert!(matches!(
            supermode_extract(&cov, &SupermodeOptions::default()),
            Err(Error::CrossBlock { .. })
        ));
    }

    #[test]
    fn degenerate_pair_spans_same_subspace() {
        let s = 0.5_f64.sqrt();
        let a = DVector::from_vec(vec![s, s, 0.0, 0.0]);
        let b = DVector::from_vec(vec![0.0, 0.0, s, -s]);
        let state = state_from_pixel_supermodes(
            4,
            &[
                PixelSupermode { vector: a.clone(), var_x: 0.5, var_p: 2.0 },
                PixelSupermode { vector: b.clone(), var_x: 0.5, var_p: 2.0 },
            ],
        )
        .unwrap();
        let modes = supermode_extract(state.cov(), &SupermodeOptions::default()).unwrap();
        let truth = &a * a.transpose() + &b * b.transpose();
        let got = &modes[0].vector * modes[0].vector.transpose()
            + &modes[1].vector * modes[1].vector.transpose();
        assert!((truth - got).amax() < 1e-10);
        assert!((modes[0].var_p - 2.0).abs() < 1e-10);
    }

    #[test]
    fn reference_orders_degenerate_modes() {
        let e = |i: usize| DVector::<f64>::from_fn(3, |k, _| if k == i { 1.0 } else { 0.0 });
        let state = state_from_pixel_supermodes(
            3,
            &[
                PixelSupermode { vector: e(0), var_x: 0.5, var_p: 2.0 },
                PixelSupermode { vector: e(2), var_x: 0.5, var_p: 2.0 },
            ],
        )
        .unwrap();
        let opts = SupermodeOptions {
            reference: vec![e(2)],
            ..SupermodeOptions::default()
        };
        let modes = supermode_extract(state.cov(), &opts).unwrap();
        assert!((modes[0].vector[2] - 1.0).abs() < 1e-12);
        let plain = supermode_extract(state.cov(), &SupermodeOptions::default()).unwrap();
        assert!((plain[0].vector[0] - 1.0).abs() < 1e-12);
    }
}
