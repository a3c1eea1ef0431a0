//! Williamson normal form and Bloch-Messiah factorization.
//!
//! Both routes reduce to symmetric eigenproblems: `AᵀA` with
//! `A = C^{-1/2} J C^{-1/2}` for Williamson, and `S Sᵀ` for Bloch-Messiah.
//! Eigenvectors are paired greedily into symplectic (e, f) couples, which
//! keeps degenerate spectra (vacuum, thermal) well defined.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// `J = [[0, I], [-I, 0]]` in `(x.., p..)` ordering.
pub fn symplectic_form<T: Real>(n: usize) -> DMatrix<T> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = T::one();
        j[(n + i, i)] = -T::one();
    }
    j
}

fn check_square_even<T: Real>(m: &DMatrix<T>) -> Result<usize> {
    let d = m.nrows();
    if d == 0 || d % 2 != 0 || m.ncols() != d {
        return Err(Error::Domain(format!(
            "expected a 2n×2n matrix, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(d / 2)
}

/// `C^{1/2}` and `C^{-1/2}` of a symmetric positive-definite matrix.
pub fn symmetric_sqrt<T: Real>(c: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let sym = (c + c.transpose()) * T::lit(0.5);
    let eig = sym.symmetric_eigen();
    let scale = eig.eigenvalues.amax();
    if eig.eigenvalues.iter().any(|&l| !(l > T::tolerance(1e-14) * scale)) {
        return Err(Error::Domain("matrix is not positive definite".into()));
    }
    let v = &eig.eigenvectors;
    let root = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.sqrt())) * v.transpose();
    let inv = v * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| T::one() / l.sqrt())) * v.transpose();
    Ok((root, inv))
}

/// Symplectic eigenvalues of a covariance matrix, descending.
pub fn symplectic_eigenvalues<T: Real>(cov: &DMatrix<T>) -> Result<Vec<T>> {
    let n = check_square_even(cov)?;
    let (root, _) = symmetric_sqrt(cov)?;
    // B = C^{1/2} J C^{1/2} is antisymmetric; BᵀB has eigenvalues ν², twice each.
    let b = &root * symplectic_form::<T>(n) * &root;
    let g = b.transpose() * &b;
    let g = (&g + g.transpose()) * T::lit(0.5);
    let mut ev: Vec<T> = g.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ev
        .chunks(2)
        .map(|p| ((p[0] + p[1]) * T::lit(0.5)).max(T::zero()).sqrt())
        .collect())
}

/// `S = O1 · diag(κ, 1/κ) · O2` with `O1`, `O2` orthogonal and symplectic.
#[derive(Debug, Clone)]
pub struct BlochMessiah<T: Real> {
    pub o1: DMatrix<T>,
    /// Squeezing factors `κ_k ≥ 1`, descending; `K = diag(κ, 1/κ)`.
    pub kappa: Vec<T>,
    pub o2: DMatrix<T>,
}

impl<T: Real> BlochMessiah<T> {
    pub fn squeezer(&self) -> DMatrix<T> {
        let n = self.kappa.len();
        DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            if i != j {
                T::zero()
            } else if i < n {
                self.kappa[i]
            } else {
                T::one() / self.kappa[i - n]
            }
        })
    }
}

/// `C = S (D ⊕ D) Sᵀ` with symplectic `S`.
#[derive(Debug, Clone)]
pub struct SymplecticDecomposition<T: Real> {
    /// Symplectic eigenvalues, descending.
    pub nu: Vec<T>,
    pub s: DMatrix<T>,
    pub bloch_messiah: BlochMessiah<T>,
}

impl<T: Real> SymplecticDecomposition<T> {
    /// `S (D ⊕ D) Sᵀ`.
    pub fn reconstruct(&self) -> DMatrix<T> {
        let d = DVector::from_iterator(
            2 * self.nu.len(),
            self.nu.iter().chain(self.nu.iter()).copied(),
        );
        &self.s * DMatrix::from_diagonal(&d) * self.s.transpose()
    }
}

/// Removes the components of `v` along `basis`, twice for stability.
fn residual<T: Real>(v: &DVector<T>, basis: &[DVector<T>]) -> DVector<T> {
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(&r);
            r.axpy(-c, b, T::one());
        }
    }
    r
}

/// Picks the candidate with the largest component outside `basis`, scanning
/// in `order` so that earlier candidates win ties.
fn pick_next<T: Real>(
    candidates: &[DVector<T>],
    order: &[usize],
    basis: &[DVector<T>],
) -> Option<DVector<T>> {
    let mut best: Option<(T, DVector<T>)> = None;
    for &i in order {
        let r = residual(&candidates[i], basis);
        let nr = r.norm();
        // accept the first clearly independent candidate
        if nr > T::lit(0.9) {
            return Some(r / nr);
        }
        if best.as_ref().is_none_or(|(b, _)| nr > *b) {
            best = Some((nr, r));
        }
    }
    best.and_then(|(nr, r)| (nr > T::lit(1e-6)).then(|| r / nr))
}

fn columns<T: Real>(m: &DMatrix<T>) -> Vec<DVector<T>> {
    m.column_iter().map(|c| c.into_owned()).collect()
}

fn from_columns<T: Real>(cols: &[DVector<T>]) -> DMatrix<T> {
    DMatrix::from_columns(cols)
}

/// Williamson decomposition of a symmetric positive-definite covariance.
pub fn williamson<T: Real>(cov: &DMatrix<T>) -> Result<SymplecticDecomposition<T>> {
    let n = check_square_even(cov)?;
    let scale = cov.amax().max(T::one());
    if (cov - cov.transpose()).amax() > T::tolerance(1e-10) * scale {
        return Err(Error::Domain("covariance is not symmetric".into()));
    }
    let (root, inv_root) = symmetric_sqrt(cov)?;
    let a = &inv_root * symplectic_form::<T>(n) * &inv_root;
    let a = (&a - a.transpose()) * T::lit(0.5);
    let g = a.transpose() * &a;
    let g = (&g + g.transpose()) * T::lit(0.5);
    let eig = g.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    // ascending 1/ν² == descending ν
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let cand = columns(&eig.eigenvectors);

    let mut pairs: Vec<(T, DVector<T>, DVector<T>)> = Vec::with_capacity(n);
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let e = pick_next(&cand, &order, &basis)
            .ok_or_else(|| Error::Numeric("Williamson pairing failed".into()))?;
        let inv_nu2 = e.dot(&(&g * &e));
        let nu = T::one() / inv_nu2.sqrt();
        // A e = -(1/ν) f
        let f = residual(&(&a * &e * (-nu)), &basis);
        let f = residual(&f, std::slice::from_ref(&e));
        let nf = f.norm();
        if nf < T::lit(0.5) {
            return Err(Error::Numeric("Williamson partner vector degenerate".into()));
        }
        let f = f / nf;
        basis.push(e.clone());
        basis.push(f.clone());
        pairs.push((nu, e, f));
    }
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));

    let nu: Vec<T> = pairs.iter().map(|p| p.0).collect();
    let mut cols: Vec<DVector<T>> = pairs.iter().map(|p| p.1.clone()).collect();
    cols.extend(pairs.iter().map(|p| p.2.clone()));
    let o = from_columns(&cols);
    let inv_sqrt_d = DVector::from_iterator(
        2 * n,
        nu.iter().chain(nu.iter()).map(|&v| T::one() / v.sqrt()),
    );
    let s = root * o * DMatrix::from_diagonal(&inv_sqrt_d);
    let bm = bloch_messiah(&s)?;
    Ok(SymplecticDecomposition {
        nu,
        s,
        bloch_messiah: bm,
    })
}

/// Bloch-Messiah factorization of a symplectic matrix.
pub fn bloch_messiah<T: Real>(s: &DMatrix<T>) -> Result<BlochMessiah<T>> {
    let n = check_square_even(s)?;
    let j = symplectic_form::<T>(n);
    let m = s * s.transpose();
    let m = (&m + m.transpose()) * T::lit(0.5);
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&i, &k| {
        eig.eigenvalues[k]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let cand = columns(&eig.eigenvectors);

    let mut pairs: Vec<(T, DVector<T>, DVector<T>)> = Vec::with_capacity(n);
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let e = pick_next(&cand, &order, &basis)
            .ok_or_else(|| Error::Numeric("Bloch-Messiah pairing failed".into()))?;
        // column n+k of an orthogonal symplectic matrix is Jᵀ e_k
        let f = j.transpose() * &e;
        let lambda = e.dot(&(&m * &e));
        let (e, f, lambda) = if lambda >= T::one() {
            (e, f, lambda)
        } else {
            // e sits on the anti-squeezed side; use its partner instead
            let lam_f = f.dot(&(&m * &f));
            let e2 = f.clone();
            (e2.clone(), j.transpose() * &e2, lam_f)
        };
        basis.push(e.clone());
        basis.push(f.clone());
        pairs.push((lambda.max(T::tolerance(1e-300)).sqrt(), e, f));
    }
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
    let kappa: Vec<T> = pairs.iter().map(|p| p.0).collect();
    let mut cols: Vec<DVector<T>> = pairs.iter().map(|p| p.1.clone()).collect();
    cols.extend(pairs.iter().map(|p| p.2.clone()));
    let o1 = from_columns(&cols);
    let k_inv = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        if r != c {
            T::zero()
        } else if r < n {
            T::one() / kappa[r]
        } else {
            kappa[r - n]
        }
    });
    let o2 = k_inv * o1.transpose() * s;
    Ok(BlochMessiah { o1, kappa, o2 })
}
