//! Multimode Gaussian states over pixel modes.
//!
//! Quadratures are ordered `(x_1..x_n, p_1..p_n)` with `x = a + a†`, so the
//! vacuum covariance is the identity and shot noise equals one.

mod supermode;
mod symplectic;

pub use supermode::{supermode_extract, Supermode, SupermodeOptions};
pub use symplectic::{
    bloch_messiah, symmetric_sqrt, symplectic_eigenvalues, symplectic_form, williamson, BlochMessiah,
    SymplecticDecomposition,
};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{hermite_gaussian_mode, overlap, SpectralMode};

/// Lower bound on symplectic eigenvalues accepted as physical.
pub const PHYSICALITY_TOL: f64 = 1e-8;

/// Converts a variance in shot-noise units to dB.
pub fn variance_to_db<T: Real>(v: T) -> T {
    T::lit(10.0) * v.log10()
}

pub fn db_to_variance<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Amplitude,
    Phase,
}

/// Gaussian state: mean quadratures and symmetric covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState<T: Real> {
    mean: DVector<T>,
    cov: DMatrix<T>,
}

impl<T: Real> GaussianState<T> {
    /// Validated constructor: square `2n×2n` covariance, matching mean,
    /// symmetric and physical.
    pub fn new(mean: DVector<T>, cov: DMatrix<T>) -> Result<Self> {
        let dim = cov.nrows();
        if dim == 0 || dim % 2 != 0 || cov.ncols() != dim {
            return Err(Error::Domain(format!(
                "covariance must be 2n×2n, got {}×{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: mean.len(),
            });
        }
        let scale = cov.amax().max(T::one());
        if (&cov - cov.transpose()).amax() > T::tolerance(1e-10) * scale {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        let state = Self {
            mean,
            cov: (&cov + cov.transpose()) * T::lit(0.5),
        };
        state.check_physical()?;
        Ok(state)
    }

    /// State with zero cross block built from its quadrature blocks.
    pub fn from_blocks(cx: &DMatrix<T>, cp: &DMatrix<T>) -> Result<Self> {
        let n = cx.nrows();
        if cx.ncols() != n || cp.nrows() != n || cp.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                found: cp.nrows(),
            });
        }
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        cov.view_mut((0, 0), (n, n)).copy_from(cx);
        cov.view_mut((n, n), (n, n)).copy_from(cp);
        Self::new(DVector::zeros(2 * n), cov)
    }

    pub fn n_modes(&self) -> usize {
        self.cov.nrows() / 2
    }

    pub fn mean(&self) -> &DVector<T> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<T> {
        &self.cov
    }

    pub fn x_block(&self) -> DMatrix<T> {
        let n = self.n_modes();
        self.cov.view((0, 0), (n, n)).into_owned()
    }

    pub fn p_block(&self) -> DMatrix<T> {
        let n = self.n_modes();
        self.cov.view((n, n), (n, n)).into_owned()
    }

    /// The `⟨x p⟩` block.
    pub fn cross_block(&self) -> DMatrix<T> {
        let n = self.n_modes();
        self.cov.view((0, n), (n, n)).into_owned()
    }

    pub fn block(&self, q: Quadrature) -> DMatrix<T> {
        match q {
            Quadrature::Amplitude => self.x_block(),
            Quadrature::Phase => self.p_block(),
        }
    }

    pub fn mean_block(&self, q: Quadrature) -> DVector<T> {
        let n = self.n_modes();
        match q {
            Quadrature::Amplitude => self.mean.rows(0, n).into_owned(),
            Quadrature::Phase => self.mean.rows(n, n).into_owned(),
        }
    }

    /// Variance of the given quadrature of the mode `v` (pixel-space unit
    /// vector).
    pub fn quadrature_variance(&self, v: &DVector<T>, q: Quadrature) -> Result<T> {
        let n = self.n_modes();
        if v.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: v.len(),
            });
        }
        let block = self.block(q);
        Ok(v.dot(&(&block * v)))
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<T>> {
        symplectic_eigenvalues(&self.cov)
    }

    fn check_physical(&self) -> Result<()> {
        let nu = self.symplectic_eigenvalues().map_err(|_| Error::Unphysical {
            nu_min: f64::NAN,
        })?;
        let nu_min = nu.iter().copied().fold(T::max_value().unwrap(), |a, b| a.min(b));
        if nu_min < T::one() - T::tolerance(PHYSICALITY_TOL) {
            return Err(Error::Unphysical {
                nu_min: nu_min.as_f64(),
            });
        }
        Ok(())
    }

    /// Uniform loss: `cov → t·cov + (1-t)·I`, `mean → √t·mean`.
    pub fn apply_loss(&self, t: T) -> Result<Self> {
        self.apply_loss_per_mode(&vec![t; self.n_modes()])
    }

    /// Independent loss channel on every mode.
    pub fn apply_loss_per_mode(&self, t: &[T]) -> Result<Self> {
        let n = self.n_modes();
        if t.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: t.len(),
            });
        }
        if t.iter().any(|&ti| !(ti >= T::zero() && ti <= T::one())) {
            return Err(Error::Domain("transmission must lie in [0, 1]".into()));
        }
        let g = DVector::from_fn(2 * n, |i, _| t[i % n].sqrt());
        let mut cov = self.cov.clone();
        for i in 0..2 * n {
            for j in 0..2 * n {
                cov[(i, j)] *= g[i] * g[j];
            }
            cov[(i, i)] += T::one() - t[i % n];
        }
        Ok(Self {
            mean: self.mean.component_mul(&g),
            cov,
        })
    }

    /// Combines this state (the squeezer) with a bright coherent beam of
    /// pixel amplitudes `alpha` on a beamsplitter of reflectivity `R`.
    ///
    /// The output keeps `R` of the squeezer fluctuations and carries the
    /// transmitted bright mean `⟨x_i⟩ = 2√(1-R)·α_i`.
    pub fn mix_synthetic_beam(&self, alpha: &[T], reflectivity: T) -> Result<Self> {
        let n = self.n_modes();
        if alpha.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: alpha.len(),
            });
        }
        if !(reflectivity >= T::zero() && reflectivity <= T::one()) {
            return Err(Error::Domain("reflectivity must lie in [0, 1]".into()));
        }
        let mut out = self.apply_loss(reflectivity)?;
        let tb = (T::one() - reflectivity).sqrt();
        for (i, &a) in alpha.iter().enumerate() {
            out.mean[i] += T::lit(2.0) * tb * a;
        }
        Ok(out)
    }

    /// Same phase-space rotation on every mode:
    /// `(x, p) → (x cosθ + p sinθ, -x sinθ + p cosθ)`.
    pub fn rotate_global_quadrature(&self, theta: T) -> Self {
        let n = self.n_modes();
        let (s, c) = theta.sin_cos();
        let mut r = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            r[(i, i)] = c;
            r[(i, n + i)] = s;
            r[(n + i, i)] = -s;
            r[(n + i, n + i)] = c;
        }
        let cov = &r * &self.cov * r.transpose();
        Self {
            mean: &r * &self.mean,
            cov: (&cov + cov.transpose()) * T::lit(0.5),
        }
    }

    /// `mean → S·mean`, `cov → S·cov·Sᵀ`; `S` must satisfy `S J Sᵀ = J`.
    pub fn apply_symplectic(&self, s: &DMatrix<T>) -> Result<Self> {
        let dim = self.cov.nrows();
        if s.nrows() != dim || s.ncols() != dim {
            return Err(Error::Dimension {
                expected: dim,
                found: s.nrows(),
            });
        }
        let j = symplectic_form::<T>(dim / 2);
        let defect = (s * &j * s.transpose() - &j).amax();
        if defect > T::tolerance(1e-8) * s.amax().max(T::one()).powi(2) {
            return Err(Error::Domain(format!(
                "matrix is not symplectic (‖SJSᵀ - J‖ = {:e})",
                defect.as_f64()
            )));
        }
        let cov = s * &self.cov * s.transpose();
        Ok(Self {
            mean: s * &self.mean,
            cov: (&cov + cov.transpose()) * T::lit(0.5),
        })
    }

    /// Beamsplitter of intensity transmission `t` between modes `a` and `b`.
    pub fn beamsplitter(&self, a: usize, b: usize, t: T) -> Result<Self> {
        let n = self.n_modes();
        if a >= n || b >= n || a == b {
            return Err(Error::Domain(format!("invalid beamsplitter ports {a}, {b}")));
        }
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::Domain("transmission must lie in [0, 1]".into()));
        }
        let (c, s) = (t.sqrt(), (T::one() - t).sqrt());
        let mut m = DMatrix::identity(2 * n, 2 * n);
        for off in [0, n] {
            let (i, j) = (a + off, b + off);
            m[(i, i)] = c;
            m[(i, j)] = s;
            m[(j, i)] = -s;
            m[(j, j)] = c;
        }
        self.apply_symplectic(&m)
    }
}

/// Vacuum on `n` modes.
pub fn vacuum_state<T: Real>(n: usize) -> Result<GaussianState<T>> {
    if n == 0 {
        return Err(Error::Domain("mode count must be positive".into()));
    }
    Ok(GaussianState {
        mean: DVector::zeros(2 * n),
        cov: DMatrix::identity(2 * n, 2 * n),
    })
}

/// One squeezed supermode of the comb, addressed by Hermite-Gauss order.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupermodeEntry {
    pub order: usize,
    /// Variance of the squeezed quadrature in dB (≤ 0).
    pub squeezing_db: f64,
    /// Variance of the conjugate quadrature in dB; `None` means pure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antisqueezing_db: Option<f64>,
    pub quadrature: Quadrature,
}

impl SupermodeEntry {
    pub fn antisqueezing(&self) -> f64 {
        self.antisqueezing_db.unwrap_or(-self.squeezing_db)
    }

    /// `(var_x, var_p)` in shot-noise units.
    pub fn variances<T: Real>(&self) -> (T, T) {
        let s = db_to_variance(T::lit(self.squeezing_db));
        let a = db_to_variance(T::lit(self.antisqueezing()));
        match self.quadrature {
            Quadrature::Amplitude => (s, a),
            Quadrature::Phase => (a, s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SupermodeSpec {
    pub modes: Vec<SupermodeEntry>,
}

impl SupermodeSpec {
    /// Four leading supermodes at -2.9, -2.2, -1.7 and -1.4 dB, alternating
    /// between amplitude and phase squeezing starting with amplitude on HG₀.
    pub fn reference_ladder() -> Self {
        let q = [Quadrature::Amplitude, Quadrature::Phase];
        Self {
            modes: [-2.9, -2.2, -1.7, -1.4]
                .iter()
                .enumerate()
                .map(|(k, &db)| SupermodeEntry {
                    order: k,
                    squeezing_db: db,
                    antisqueezing_db: None,
                    quadrature: q[k % 2],
                })
                .collect(),
        }
    }

    /// `(entry index, field, message)` for every offending entry.
    pub fn diagnostics(&self) -> Vec<(usize, &'static str, String)> {
        let mut out = Vec::new();
        for (i, m) in self.modes.iter().enumerate() {
            if !m.squeezing_db.is_finite() || m.squeezing_db > 0.0 {
                out.push((i, "squeezing_db", format!("{} dB must be ≤ 0", m.squeezing_db)));
            }
            if m.antisqueezing() < -m.squeezing_db - 1e-12 {
                out.push((
                    i,
                    "antisqueezing_db",
                    format!(
                        "{} dB is below the pure-state bound {} dB",
                        m.antisqueezing(),
                        -m.squeezing_db
                    ),
                ));
            }
            if m.order > 10 {
                out.push((i, "order", format!("{} exceeds 10", m.order)));
            }
            if self.modes[..i].iter().any(|o| o.order == m.order) {
                out.push((i, "order", format!("{} repeated", m.order)));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().into_iter().next() {
            Some((i, field, msg)) => Err(Error::Domain(format!("modes[{i}].{field}: {msg}"))),
            None => Ok(()),
        }
    }
}

/// How supermodes are mapped onto a finite pixel basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaptureModel {
    /// Each supermode enters through its overlap vector `b_k`; the part not
    /// seen by the pixels is replaced by vacuum.
    #[default]
    Projected,
    /// Supermodes are the symmetrically orthonormalized pixel-space
    /// projections `b_k/|b_k|`, i.e. the squeezing values describe what the
    /// pixel array itself resolves.
    Matched,
}

/// Overlap vectors `b_k[i] = ⟨u_i|HG_k⟩` for every supermode in `spec`.
pub fn supermode_overlaps<T: Real>(
    spec: &SupermodeSpec,
    pixel_modes: &[SpectralMode<T>],
    omega0: T,
    delta_omega: T,
) -> Result<Vec<DVector<T>>> {
    let grid = pixel_modes
        .first()
        .ok_or_else(|| Error::Domain("empty pixel basis".into()))?
        .grid();
    spec.modes
        .iter()
        .map(|m| {
            let hg = hermite_gaussian_mode(grid, m.order, omega0, delta_omega)?;
            let mut b = DVector::zeros(pixel_modes.len());
            for (i, p) in pixel_modes.iter().enumerate() {
                b[i] = overlap(p, &hg)?.re;
            }
            Ok(b)
        })
        .collect()
}

/// Löwdin (symmetric) orthonormalization of the given vectors.
pub fn symmetric_orthonormalize<T: Real>(vectors: &[DVector<T>]) -> Result<Vec<DVector<T>>> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    let k = vectors.len();
    let gram = DMatrix::from_fn(k, k, |i, j| vectors[i].dot(&vectors[j]));
    let eig = gram.symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| l <= T::tolerance(1e-12)) {
        return Err(Error::Numeric("supermode vectors are linearly dependent".into()));
    }
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| T::one() / l.sqrt()))
        * eig.eigenvectors.transpose();
    Ok((0..k)
        .map(|i| {
            let mut v = DVector::zeros(vectors[0].len());
            for j in 0..k {
                v += &vectors[j] * inv_sqrt[(j, i)];
            }
            v
        })
        .collect())
}

/// A pixel-space mode with prescribed quadrature variances.
#[derive(Debug, Clone)]
pub struct PixelSupermode<T: Real> {
    pub vector: DVector<T>,
    pub var_x: T,
    pub var_p: T,
}

/// Zero-mean state `C = I + Σ_k v_k v_kᵀ (V_k - 1)` per quadrature block.
///
/// The mode vectors must be orthonormal.
pub fn state_from_pixel_supermodes<T: Real>(
    n: usize,
    modes: &[PixelSupermode<T>],
) -> Result<GaussianState<T>> {
    for (i, a) in modes.iter().enumerate() {
        if a.vector.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: a.vector.len(),
            });
        }
        for b in &modes[..=i] {
            let expect = if std::ptr::eq(a, b) { T::one() } else { T::zero() };
            if (a.vector.dot(&b.vector) - expect).abs() > T::tolerance(1e-9) {
                return Err(Error::Domain("supermode vectors must be orthonormal".into()));
            }
        }
    }
    build_blocks(n, modes.iter().map(|m| (&m.vector, m.var_x, m.var_p)))
}

fn build_blocks<'a, T: Real>(
    n: usize,
    modes: impl Iterator<Item = (&'a DVector<T>, T, T)>,
) -> Result<GaussianState<T>> {
    let mut cx = DMatrix::identity(n, n);
    let mut cp = DMatrix::identity(n, n);
    for (b, vx, vp) in modes {
        let outer = b * b.transpose();
        cx += &outer * (vx - T::one());
        cp += &outer * (vp - T::one());
    }
    GaussianState::from_blocks(&cx, &cp)
}

/// Multimode squeezed vacuum of Hermite-Gauss supermodes expressed in the
/// pixel basis.
pub fn build_squeezed_comb<T: Real>(
    spec: &SupermodeSpec,
    pixel_modes: &[SpectralMode<T>],
    omega0: T,
    delta_omega: T,
    capture: CaptureModel,
) -> Result<GaussianState<T>> {
    spec.validate()?;
    let n = pixel_modes.len();
    if n == 0 {
        return Err(Error::Domain("empty pixel basis".into()));
    }
    let mut b = supermode_overlaps(spec, pixel_modes, omega0, delta_omega)?;
    if capture == CaptureModel::Matched {
        for v in &mut b {
            let norm = v.norm();
            if norm <= T::zero() {
                return Err(Error::Numeric("supermode invisible to the pixel array".into()));
            }
            *v /= norm;
        }
        b = symmetric_orthonormalize(&b)?;
    }
    let vars: Vec<(T, T)> = spec.modes.iter().map(|m| m.variances()).collect();
    build_blocks(n, b.iter().zip(vars).map(|(v, (vx, vp))| (v, vx, vp)))
}
