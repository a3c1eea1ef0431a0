//! Spectral field model: frequency grids, normalized spectral modes, the
//! pixel geometry of the spectrally resolved detector and the projection of
//! a target mode onto the pixel basis.
//!
//! Angular frequency (rad/s) is the only unit used internally. Grids store
//! their samples as offsets from a reference frequency so that `f32` runs keep
//! sub-step resolution at optical frequencies.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum fraction of the analytic norm a grid must capture before a mode
/// built on it is renormalized.
const MIN_CAPTURE: f64 = 0.999;

/// Converts a centre wavelength and an intensity-spectrum FWHM (both in
/// metres) to the centre angular frequency and the rms width `Δω` of `|u|²`.
pub fn wavelength_to_angular<T: Real>(lambda0: T, fwhm_lambda: T) -> Result<(T, T)> {
    let (l0, fw) = (lambda0.as_f64(), fwhm_lambda.as_f64());
    if !(l0.is_finite() && fw.is_finite()) || l0 <= 0.0 || fw <= 0.0 {
        return Err(Error::Domain(format!(
            "wavelength and bandwidth must be positive and finite (got {l0}, {fw})"
        )));
    }
    if fw >= l0 {
        return Err(Error::Domain(format!(
            "bandwidth {fw} must be much smaller than the centre wavelength {l0}"
        )));
    }
    let omega0 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / l0;
    let fwhm_omega = omega0 * fw / l0;
    let delta_omega = fwhm_omega / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    Ok((T::lit(omega0), T::lit(delta_omega)))
}

/// Resolution of a grid built around a Gaussian of width `Δω`.
///
/// Grid cell boundaries fall on integer multiples of `Δω / points_per_width`
/// from the centre, so pixel edges placed on that lattice are resolved
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points_per_width: usize,
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        // 4096 points at Δω/340 spacing span ±6.02 Δω.
        Self {
            points_per_width: 340,
            n_points: 4096,
        }
    }
}

impl GridSpec {
    /// Same span at twice the resolution.
    pub fn refined(self) -> Self {
        Self {
            points_per_width: 2 * self.points_per_width,
            n_points: 2 * self.n_points,
        }
    }
}

/// Uniformly spaced angular-frequency samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<T> {
    omega0: T,
    step: T,
    offsets: Vec<T>,
}

impl<T: Real> FrequencyGrid<T> {
    /// Builds `n` samples at `omega0 + first_offset + i * step`.
    pub fn uniform(omega0: T, first_offset: T, step: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain("a grid needs at least two points".into()));
        }
        if step <= T::zero() || !step.is_finite() || !omega0.is_finite() {
            return Err(Error::Domain("grid step must be positive and finite".into()));
        }
        let offsets = (0..n)
            .map(|i| first_offset + T::lit(i as f64) * step)
            .collect();
        Ok(Self {
            omega0,
            step,
            offsets,
        })
    }

    /// Symmetric grid around `omega0`; see [`GridSpec`].
    pub fn centered(omega0: T, delta_omega: T, spec: GridSpec) -> Result<Self> {
        if delta_omega <= T::zero() {
            return Err(Error::Domain("spectral width must be positive".into()));
        }
        if spec.points_per_width == 0 {
            return Err(Error::Domain("points_per_width must be positive".into()));
        }
        let step = delta_omega / T::lit(spec.points_per_width as f64);
        let first = -T::lit((spec.n_points as f64 - 1.0) / 2.0) * step;
        Self::uniform(omega0, first, step, spec.n_points)
    }

    pub fn omega0(&self) -> T {
        self.omega0
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Detuning of sample `i` from `omega0`.
    pub fn offset(&self, i: usize) -> T {
        self.offsets[i]
    }

    pub fn offsets(&self) -> &[T] {
        &self.offsets
    }

    /// Absolute angular frequencies.
    pub fn points(&self) -> Vec<T> {
        self.offsets.iter().map(|&o| self.omega0 + o).collect()
    }

    /// Trapezoidal quadrature weight of sample `i`.
    pub fn weight(&self, i: usize) -> T {
        if i == 0 || i + 1 == self.offsets.len() {
            self.step * T::lit(0.5)
        } else {
            self.step
        }
    }

    /// Lowest and highest absolute frequency covered by the sample cells.
    pub fn span(&self) -> (T, T) {
        let half = self.step * T::lit(0.5);
        (
            self.omega0 + self.offsets[0] - half,
            self.omega0 + self.offsets[self.offsets.len() - 1] + half,
        )
    }
}

/// Sign convention for the derivative mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSign {
    /// `u_d = +2Δω ∂u/∂ω`.
    #[default]
    Positive,
    /// `u_d = -2Δω ∂u/∂ω`: a positive centre-frequency shift displaces the
    /// field along `+u_d`.
    ShiftConsistent,
}

impl DerivativeSign {
    fn factor<T: Real>(self) -> T {
        match self {
            DerivativeSign::Positive => T::one(),
            DerivativeSign::ShiftConsistent => -T::one(),
        }
    }
}

/// Where a mode's samples came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeShape<T> {
    Gaussian { center: T, width: T },
    HermiteGauss { order: usize, center: T, width: T },
    Derivative,
    PixelSlice { index: usize },
    Sampled,
}

impl<T: Real> fmt::Display for ModeShape<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeShape::Gaussian { .. } => f.write_str("mean_field"),
            ModeShape::HermiteGauss { order, .. } => write!(f, "hg{order}"),
            ModeShape::Derivative => f.write_str("derivative"),
            ModeShape::PixelSlice { index } => write!(f, "pixel{}", index + 1),
            ModeShape::Sampled => f.write_str("sampled"),
        }
    }
}

/// Complex spectral amplitude sampled on a [`FrequencyGrid`], in units of
/// (rad/s)^-1/2 so that `∫|u|² dω` is dimensionless.
#[derive(Debug, Clone)]
pub struct SpectralMode<T> {
    grid: Arc<FrequencyGrid<T>>,
    amplitude: Vec<Complex<T>>,
    shape: ModeShape<T>,
}

impl<T: Real> SpectralMode<T> {
    /// Wraps raw samples; no normalization is applied.
    pub fn from_samples(grid: Arc<FrequencyGrid<T>>, amplitude: Vec<Complex<T>>) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                found: amplitude.len(),
            });
        }
        Ok(Self {
            grid,
            amplitude,
            shape: ModeShape::Sampled,
        })
    }

    pub fn grid(&self) -> &Arc<FrequencyGrid<T>> {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex<T>] {
        &self.amplitude
    }

    pub fn shape(&self) -> ModeShape<T> {
        self.shape
    }

    pub fn name(&self) -> String {
        self.shape.to_string()
    }

    /// `∫|u|² dω`.
    pub fn norm_sqr(&self) -> T {
        self.amplitude
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, a)| acc + self.grid.weight(i) * a.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// True when every sample is zero (an empty pixel slice).
    pub fn is_null(&self) -> bool {
        self.amplitude.iter().all(|a| a.re == T::zero() && a.im == T::zero())
    }

    fn scaled(mut self, s: T) -> Self {
        for a in &mut self.amplitude {
            *a = a.scale(s);
        }
        self
    }

    fn normalized(self) -> Result<Self> {
        let n = self.norm();
        if n <= T::zero() || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a null mode".into()));
        }
        Ok(self.scaled(T::one() / n))
    }

    fn check_unit(&self, what: &str) -> Result<()> {
        let n = self.norm_sqr();
        if (n - T::one()).abs() > T::tolerance(1e-8) {
            return Err(Error::Domain(format!(
                "{what} must be unit-norm (norm² = {})",
                n.as_f64()
            )));
        }
        Ok(())
    }
}

/// Trapezoidal `∫ a*(ω) b(ω) dω`.
pub fn overlap<T: Real>(a: &SpectralMode<T>, b: &SpectralMode<T>) -> Result<Complex<T>> {
    if !Arc::ptr_eq(&a.grid, &b.grid) && a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    for (i, (x, y)) in a.amplitude.iter().zip(&b.amplitude).enumerate() {
        acc += (x.conj() * y).scale(a.grid.weight(i));
    }
    Ok(acc)
}

/// Unnormalized Gaussian envelope `exp(-(ω-ωc)²/4Δω²)/(2πΔω²)^¼` and the
/// corresponding reduced detuning `(ω-ωc)/Δω` on every grid sample.
fn gaussian_envelope<T: Real>(grid: &FrequencyGrid<T>, center: T, width: T) -> (Vec<T>, Vec<T>) {
    let shift = center - grid.omega0();
    let peak = (T::two_pi() * width * width).powf(T::lit(-0.25));
    grid.offsets()
        .iter()
        .map(|&o| {
            let x = (o - shift) / width;
            (peak * (-x * x * T::lit(0.25)).exp(), x)
        })
        .unzip()
}

fn check_coverage<T: Real>(grid: &FrequencyGrid<T>, samples: &[T]) -> Result<T> {
    let captured = samples
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &s)| acc + grid.weight(i) * s * s);
    if captured.as_f64() < MIN_CAPTURE {
        return Err(Error::Coverage {
            captured: captured.as_f64(),
            required: MIN_CAPTURE,
        });
    }
    Ok(captured)
}

fn real_mode<T: Real>(
    grid: &Arc<FrequencyGrid<T>>,
    samples: Vec<T>,
    norm_sqr: T,
    shape: ModeShape<T>,
) -> SpectralMode<T> {
    let s = T::one() / norm_sqr.sqrt();
    SpectralMode {
        grid: Arc::clone(grid),
        amplitude: samples
            .into_iter()
            .map(|v| Complex::new(v * s, T::zero()))
            .collect(),
        shape,
    }
}

/// Gaussian mean-field mode centred at `omega0`, renormalized on the grid.
pub fn gaussian_mode<T: Real>(
    grid: &Arc<FrequencyGrid<T>>,
    omega0: T,
    delta_omega: T,
) -> Result<SpectralMode<T>> {
    if delta_omega <= T::zero() || !delta_omega.is_finite() {
        return Err(Error::Domain("spectral width must be positive".into()));
    }
    let (env, _) = gaussian_envelope(grid, omega0, delta_omega);
    let captured = check_coverage(grid, &env)?;
    Ok(real_mode(
        grid,
        env,
        captured,
        ModeShape::Gaussian {
            center: omega0,
            width: delta_omega,
        },
    ))
}

/// Hermite-Gauss mode of order `k`.
///
/// Uses `HG_k = (-1)^k He_k(x)/√k! · u(ω)` with `x = (ω-ω₀)/Δω`, so that
/// `HG₀` is the Gaussian mode and `HG₁` its derivative mode under the default
/// sign convention.
pub fn hermite_gaussian_mode<T: Real>(
    grid: &Arc<FrequencyGrid<T>>,
    k: usize,
    omega0: T,
    delta_omega: T,
) -> Result<SpectralMode<T>> {
    if k > 10 {
        return Err(Error::Domain(format!("Hermite-Gauss order {k} exceeds 10")));
    }
    if delta_omega <= T::zero() || !delta_omega.is_finite() {
        return Err(Error::Domain("spectral width must be positive".into()));
    }
    let (env, xs) = gaussian_envelope(grid, omega0, delta_omega);
    let sign = if k % 2 == 0 { T::one() } else { -T::one() };
    let samples: Vec<T> = env
        .iter()
        .zip(&xs)
        .map(|(&e, &x)| sign * normalized_hermite(k, x) * e)
        .collect();
    let captured = check_coverage(grid, &samples)?;
    let shape = if k == 0 {
        ModeShape::Gaussian {
            center: omega0,
            width: delta_omega,
        }
    } else {
        ModeShape::HermiteGauss {
            order: k,
            center: omega0,
            width: delta_omega,
        }
    };
    Ok(real_mode(grid, samples, captured, shape))
}

/// Probabilists' Hermite polynomial divided by `√k!`.
fn normalized_hermite<T: Real>(k: usize, x: T) -> T {
    let mut prev = T::zero();
    let mut cur = T::one();
    for j in 0..k {
        let jf = T::lit(j as f64);
        let next = (x * cur - jf.sqrt() * prev) / (jf + T::one()).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Derivative mode `2Δω ∂u/∂ω` with the default sign convention.
pub fn derivative_mode<T: Real>(mode: &SpectralMode<T>) -> Result<SpectralMode<T>> {
    derivative_mode_with(mode, DerivativeSign::default())
}

/// Normalized spectral derivative of `mode`, Gram-Schmidt orthogonalized
/// against it.
///
/// Gaussian parents are differentiated analytically; anything else uses
/// central differences (one-sided at the grid ends).
pub fn derivative_mode_with<T: Real>(
    mode: &SpectralMode<T>,
    sign: DerivativeSign,
) -> Result<SpectralMode<T>> {
    mode.check_unit("parent mode")?;
    let grid = &mode.grid;
    let s: T = sign.factor();
    let amplitude: Vec<Complex<T>> = match mode.shape {
        ModeShape::Gaussian { center, width } => {
            // 2Δω ∂u/∂ω = -((ω-ωc)/Δω) u
            let shift = center - grid.omega0();
            grid.offsets()
                .iter()
                .zip(&mode.amplitude)
                .map(|(&o, a)| a.scale(-s * (o - shift) / width))
                .collect()
        }
        _ => {
            let n = mode.amplitude.len();
            let h = grid.step();
            let a = &mode.amplitude;
            (0..n)
                .map(|i| {
                    let d = if i == 0 {
                        (a[1] - a[0]).unscale(h)
                    } else if i + 1 == n {
                        (a[n - 1] - a[n - 2]).unscale(h)
                    } else {
                        (a[i + 1] - a[i - 1]).unscale(h + h)
                    };
                    d.scale(s)
                })
                .collect()
        }
    };
    let mut d = SpectralMode {
        grid: Arc::clone(grid),
        amplitude,
        shape: ModeShape::Derivative,
    };
    let c = overlap(mode, &d)?;
    for (x, p) in d.amplitude.iter_mut().zip(&mode.amplitude) {
        *x -= p * c;
    }
    d.normalized()
}

/// Ascending pixel bin edges (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct PixelArray<T> {
    edges: Vec<T>,
}

impl<T: Real> PixelArray<T> {
    pub fn new(edges: Vec<T>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Domain("a pixel array needs at least one bin".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("pixel edges must be finite and strictly ascending".into()));
        }
        Ok(Self { edges })
    }

    /// `n` equal-width bins covering `center ± half_span`.
    pub fn uniform(center: T, half_span: T, n: usize) -> Result<Self> {
        if n == 0 || half_span <= T::zero() {
            return Err(Error::Domain("pixel array needs n > 0 and a positive span".into()));
        }
        let width = (half_span + half_span) / T::lit(n as f64);
        Self::new(
            (0..=n)
                .map(|i| center - half_span + T::lit(i as f64) * width)
                .collect(),
        )
    }

    /// Eight equal bins over `±3Δω`.
    pub fn default_for(omega0: T, delta_omega: T) -> Result<Self> {
        Self::uniform(omega0, T::lit(3.0) * delta_omega, 8)
    }

    pub fn edges(&self) -> &[T] {
        &self.edges
    }

    pub fn n_pixels(&self) -> usize {
        self.edges.len() - 1
    }

    /// Bin containing absolute frequency `omega`, if any.
    pub fn bin_of(&self, omega: T) -> Option<usize> {
        if omega < self.edges[0] || omega >= self.edges[self.edges.len() - 1] {
            return None;
        }
        let idx = self.edges.partition_point(|&e| e <= omega);
        Some(idx - 1)
    }
}

/// Pixel-mode basis of a detector illuminated by a mean field.
#[derive(Debug, Clone)]
pub struct PixelModes<T> {
    pub modes: Vec<SpectralMode<T>>,
    /// Mean-field amplitude on each pixel, `α_i = √(N ∫_bin |u|²)`.
    pub alpha: Vec<T>,
    /// Photon number `N` the amplitudes were computed for.
    pub photons: T,
}

impl<T: Real> PixelModes<T> {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Fraction of the mean-field energy landing on each pixel.
    pub fn energy_fractions(&self) -> Vec<T> {
        self.alpha
            .iter()
            .map(|&a| a * a / self.photons)
            .collect()
    }

    /// Amplitudes rescaled to a different photon number.
    pub fn alpha_for(&self, photons: T) -> Vec<T> {
        let s = (photons / self.photons).sqrt();
        self.alpha.iter().map(|&a| a * s).collect()
    }
}

/// Slices `mean_field` into pixel modes.
///
/// Each grid sample is assigned to the bin containing its frequency. Slices
/// with no captured energy come back as null modes with `α = 0`.
pub fn pixel_modes<T: Real>(
    mean_field: &SpectralMode<T>,
    pixels: &PixelArray<T>,
    photons: T,
) -> Result<PixelModes<T>> {
    if photons <= T::zero() {
        return Err(Error::Domain("photon number must be positive".into()));
    }
    let grid = &mean_field.grid;
    let (lo, hi) = grid.span();
    let edges = pixels.edges();
    let tol = grid.step() * T::lit(1e-6);
    if edges[0] < lo - tol || edges[edges.len() - 1] > hi + tol {
        return Err(Error::Domain("pixel array extends beyond the frequency grid".into()));
    }
    let n = pixels.n_pixels();
    let mut slices = vec![vec![Complex::new(T::zero(), T::zero()); grid.len()]; n];
    let mut energy = vec![T::zero(); n];
    for (i, &o) in grid.offsets().iter().enumerate() {
        if let Some(b) = pixels.bin_of(grid.omega0() + o) {
            let a = mean_field.amplitude[i];
            slices[b][i] = a;
            energy[b] += grid.weight(i) * a.norm_sqr();
        }
    }
    let mut modes = Vec::with_capacity(n);
    let mut alpha = Vec::with_capacity(n);
    for (index, (samples, e)) in slices.into_iter().zip(energy).enumerate() {
        let mut m = SpectralMode {
            grid: Arc::clone(grid),
            amplitude: samples,
            shape: ModeShape::PixelSlice { index },
        };
        if e > T::zero() {
            m = m.scaled(T::one() / e.sqrt());
            alpha.push((photons * e).sqrt());
        } else {
            alpha.push(T::zero());
        }
        modes.push(m);
    }
    Ok(PixelModes {
        modes,
        alpha,
        photons,
    })
}

/// Real projection coefficients of a target mode on the pixel basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T> {
    pub m: Vec<T>,
    pub eta: T,
    pub target_name: String,
}

impl<T: Real> Projection<T> {
    pub fn from_coefficients(m: Vec<T>, target_name: impl Into<String>) -> Self {
        let eta = m.iter().fold(T::zero(), |acc, &c| acc + c * c).sqrt();
        Self {
            m,
            eta,
            target_name: target_name.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Drops the pixels where `keep` is false and recomputes `η`.
    pub fn restricted(&self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.m.len() {
            return Err(Error::Dimension {
                expected: self.m.len(),
                found: keep.len(),
            });
        }
        let m = self
            .m
            .iter()
            .zip(keep)
            .map(|(&c, &k)| if k { c } else { T::zero() })
            .collect();
        Ok(Self::from_coefficients(m, self.target_name.clone()))
    }

    /// Unit vector `m/η` describing the measured mode in pixel space.
    pub fn unit_vector(&self) -> Result<Vec<T>> {
        if self.eta <= T::zero() {
            return Err(Error::Numeric(format!(
                "projection onto {} has zero efficiency",
                self.target_name
            )));
        }
        Ok(self.m.iter().map(|&c| c / self.eta).collect())
    }
}

/// `m_i = ∫ u_i* v dω` for every pixel mode, with `η = √Σm_i²`.
pub fn project_coefficients<T: Real>(
    target: &SpectralMode<T>,
    pixel_modes: &[SpectralMode<T>],
) -> Result<Projection<T>> {
    target.check_unit("target mode")?;
    let mut m = Vec::with_capacity(pixel_modes.len());
    for (index, p) in pixel_modes.iter().enumerate() {
        let c = overlap(p, target)?;
        if c.im.abs() > T::tolerance(1e-6) {
            return Err(Error::PhaseModel {
                index,
                imag: c.im.as_f64(),
            });
        }
        m.push(c.re);
    }
    Ok(Projection::from_coefficients(m, target.name()))
}
