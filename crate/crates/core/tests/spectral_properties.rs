mod common;

use std::sync::Arc;

use combsense::spectral::{
    derivative_mode, gaussian_mode, hermite_gaussian_mode, overlap, pixel_modes, project_coefficients,
    FrequencyGrid, GridSpec, PixelArray, SpectralMode,
};
use common::{DELTA_OMEGA as DW, OMEGA0 as W0};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Continuous, Normal};

fn grid(spec: GridSpec) -> Arc<FrequencyGrid<f64>> {
    Arc::new(FrequencyGrid::centered(W0, DW, spec).unwrap())
}

fn gram_defect(modes: &[SpectralMode<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in modes.iter().enumerate() {
        for (j, b) in modes.iter().enumerate() {
            let o = overlap(a, b).unwrap();
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((o.re - expect).abs()).max(o.im.abs());
        }
    }
    worst
}

/// Derivative-mode coefficients of equal pixels over `±half_span·Δω`,
/// straight from the normal pdf/cdf.
fn derivative_oracle(n: usize, half_span: f64) -> Vec<f64> {
    let z = Normal::standard();
    let w = 2.0 * half_span / n as f64;
    (0..n)
        .map(|i| {
            let a = -half_span + i as f64 * w;
            let b = a + w;
            -(z.pdf(a) - z.pdf(b)) / (z.cdf(b) - z.cdf(a)).sqrt()
        })
        .collect()
}

#[test]
fn hermite_gauss_and_pixel_modes_are_orthonormal() {
    let wide = grid(GridSpec {
        points_per_width: 340,
        n_points: 8192,
    });
    let hg: Vec<_> = (0..=10)
        .map(|k| hermite_gaussian_mode(&wide, k, W0, DW).unwrap())
        .collect();
    assert!(gram_defect(&hg) < 1e-9, "{}", gram_defect(&hg));

    let g = grid(GridSpec::default());
    let u = gaussian_mode(&g, W0, DW).unwrap();
    for (n, span) in [(8, 3.0), (16, 4.0), (40, 5.0), (68, 5.0)] {
        let px = pixel_modes(&u, &PixelArray::uniform(W0, span * DW, n).unwrap(), 1.0).unwrap();
        assert!(gram_defect(&px.modes) < 1e-9, "{n} pixels");
        for m in &px.modes {
            assert!((m.norm() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn derivative_efficiency_matches_normal_oracle() {
    let g = grid(GridSpec::default());
    let u = gaussian_mode(&g, W0, DW).unwrap();
    let d = derivative_mode(&u).unwrap();
    for (n, span) in [(8, 3.0), (16, 4.0), (40, 5.0), (68, 5.0)] {
        let px = pixel_modes(&u, &PixelArray::uniform(W0, span * DW, n).unwrap(), 1.0).unwrap();
        let proj = project_coefficients(&d, &px.modes).unwrap();
        let oracle = derivative_oracle(n, span);
        let eta_oracle = oracle.iter().map(|m| m * m).sum::<f64>().sqrt();
        for (m, o) in proj.m.iter().zip(&oracle) {
            // midpoint rule inside each pixel: O(h²) with h = Δω/340
            assert!((m.abs() - o.abs()).abs() < 1e-6, "{n} px: {m} vs {o}");
        }
        assert!((proj.eta - eta_oracle).abs() < 1e-6, "{n} px: {} vs {eta_oracle}", proj.eta);
    }
    let px = pixel_modes(&u, &PixelArray::default_for(W0, DW).unwrap(), 1.0).unwrap();
    let eta = project_coefficients(&d, &px.modes).unwrap().eta;
    assert!((eta - 0.9623028).abs() < 1e-6, "{eta}");
    let exact: f64 = derivative_oracle(8, 3.0).iter().map(|m| m * m).sum::<f64>().sqrt();
    assert!((exact - 0.9623028).abs() < 5e-8, "{exact}");
}

#[test]
fn pixel_capture_matches_erf() {
    let g = grid(GridSpec::default());
    let u = gaussian_mode(&g, W0, DW).unwrap();
    let px = pixel_modes(&u, &PixelArray::default_for(W0, DW).unwrap(), 1.0).unwrap();
    let captured: f64 = px.energy_fractions().iter().sum();
    let oracle = statrs::function::erf::erf(3.0 / 2f64.sqrt());
    assert!((captured - oracle).abs() < 1e-6, "{captured} vs {oracle}");
    assert!((captured - 0.9973).abs() < 1e-4);
    let mf = project_coefficients(&u, &px.modes).unwrap();
    assert!((mf.eta * mf.eta - captured).abs() < 1e-12);
}

#[test]
fn derivative_of_gaussian_is_x_times_gaussian() {
    let g = grid(GridSpec::default());
    let u = gaussian_mode(&g, W0, DW).unwrap();
    let d = derivative_mode(&u).unwrap();
    let xu: Vec<f64> = g
        .offsets()
        .iter()
        .zip(u.amplitude())
        .map(|(&o, a)| o / DW * a.re)
        .collect();
    let dist = |sign: f64| {
        d.amplitude()
            .iter()
            .zip(&xu)
            .enumerate()
            .map(|(i, (a, &b))| g.weight(i) * (a.re - sign * b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    assert!(dist(1.0).min(dist(-1.0)) < 1e-6);
    let hg1 = hermite_gaussian_mode(&g, 1, W0, DW).unwrap();
    assert!((overlap(&d, &hg1).unwrap().re - 1.0).abs() < 1e-9);
}

#[test]
fn grid_refinement_converges() {
    let eta_at = |spec: GridSpec| {
        let g = grid(spec);
        let u = gaussian_mode(&g, W0, DW).unwrap();
        let d = derivative_mode(&u).unwrap();
        let px = pixel_modes(&u, &PixelArray::default_for(W0, DW).unwrap(), 1.0).unwrap();
        let shifted = gaussian_mode(&g, W0 + 0.3 * DW, DW).unwrap();
        (
            project_coefficients(&d, &px.modes).unwrap().m,
            overlap(&u, &shifted).unwrap().re,
        )
    };
    let (coarse, oc) = eta_at(GridSpec::default());
    let (fine, of) = eta_at(GridSpec::default().refined());
    for (a, b) in coarse.iter().zip(&fine) {
        assert!((a - b).abs() < 1e-6);
    }
    assert!((oc - of).abs() < 1e-6);
}

fn random_edges(cuts: &[f64]) -> Vec<f64> {
    let mut e: Vec<f64> = cuts.iter().map(|c| W0 + c * DW).collect();
    e.sort_by(f64::total_cmp);
    e.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * DW);
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shifted_gaussian_overlap(delta in -1.5f64..1.5) {
        // ±12Δω so that tail truncation stays far below the tolerance
        let g = grid(GridSpec { points_per_width: 340, n_points: 8192 });
        let u = gaussian_mode(&g, W0, DW).unwrap();
        let v = gaussian_mode(&g, W0 + delta * DW, DW).unwrap();
        let o = overlap(&u, &v).unwrap();
        prop_assert!((o.re - (-delta * delta / 8.0).exp()).abs() < 1e-9);
        prop_assert!(o.im.abs() < 1e-15);
    }

    #[test]
    fn parseval_and_refinement_monotonicity(
        cuts in prop::collection::vec(-5.5f64..5.5, 3..14),
        split in 0.05f64..0.95,
        which in any::<prop::sample::Index>(),
        center in -1.5f64..1.5,
        width in 0.6f64..1.4,
    ) {
        let edges = random_edges(&cuts);
        prop_assume!(edges.len() >= 2);
        let g = grid(GridSpec::default());
        let u = gaussian_mode(&g, W0, DW).unwrap();
        let target = gaussian_mode(&g, W0 + center * DW, width * DW).unwrap();
        let coarse = pixel_modes(&u, &PixelArray::new(edges.clone()).unwrap(), 1.0).unwrap();
        let eta = project_coefficients(&target, &coarse.modes).unwrap().eta;
        prop_assert!(eta * eta <= 1.0 + 1e-9);

        let k = which.index(edges.len() - 1);
        let mut finer = edges.clone();
        finer.insert(k + 1, edges[k] + split * (edges[k + 1] - edges[k]));
        let fine = pixel_modes(&u, &PixelArray::new(finer).unwrap(), 1.0).unwrap();
        let eta_fine = project_coefficients(&target, &fine.modes).unwrap().eta;
        prop_assert!(eta_fine * eta_fine <= 1.0 + 1e-9);
        prop_assert!(eta_fine >= eta - 1e-9, "{eta_fine} < {eta}");
    }
}
