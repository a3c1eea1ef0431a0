#![allow(dead_code)]

use combsense::detection::rng::{stream_rng, TrialRng};
use combsense::gaussian::GaussianState;
use combsense::scenario::Optics;
use combsense::spectral::GridSpec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

pub const OMEGA0: f64 = 2.369e15;
pub const DELTA_OMEGA: f64 = 1.1137e13;

pub fn rng(seed: u64) -> TrialRng {
    stream_rng(seed, 0xC0FFEE)
}

pub fn normal(rng: &mut TrialRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Haar-random unitary embedded as an orthogonal symplectic matrix
/// `[[Re U, -Im U], [Im U, Re U]]`.
pub fn random_passive(n: usize, rng: &mut TrialRng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| Complex::new(normal(rng), normal(rng)));
    let u = g.qr().q();
    let mut o = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = u[(i, j)];
            o[(i, j)] = z.re;
            o[(i, n + j)] = -z.im;
            o[(n + i, j)] = z.im;
            o[(n + i, n + j)] = z.re;
        }
    }
    o
}

/// `O₁ · diag(e^r, e^-r) · O₂` with squeezing `|r| ≤ r_max`.
pub fn random_symplectic(n: usize, r_max: f64, rng: &mut TrialRng) -> DMatrix<f64> {
    let r: Vec<f64> = (0..n).map(|_| rng.random_range(-r_max..=r_max)).collect();
    let z = DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i == j, i < n) {
        (false, _) => 0.0,
        (true, true) => r[i].exp(),
        (true, false) => (-r[i - n]).exp(),
    });
    random_passive(n, rng) * z * random_passive(n, rng)
}

/// Random mixed state `S (ν ⊕ ν) Sᵀ` with `1 ≤ ν ≤ 2` and a random mean.
pub fn random_state(n: usize, rng: &mut TrialRng) -> GaussianState<f64> {
    let s = random_symplectic(n, 1.0, rng);
    let nu: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..2.0)).collect();
    let d = DMatrix::from_fn(2 * n, 2 * n, |i, j| if i == j { nu[i % n] } else { 0.0 });
    let cov = &s * d * s.transpose();
    let mean = DVector::from_fn(2 * n, |_, _| normal(rng));
    GaussianState::new(mean, (&cov + cov.transpose()) * 0.5).unwrap()
}

/// Optics at the default source and grid with `count` equal pixels over
/// `±half_span·Δω`.
pub fn optics(count: usize, half_span: f64) -> Optics<f64> {
    let setup = combsense::scenario::Setup::default();
    let layout = combsense::scenario::PixelLayout { count, half_span };
    Optics::build(&setup.source, &layout, GridSpec::default(), Default::default()).unwrap()
}

pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}
