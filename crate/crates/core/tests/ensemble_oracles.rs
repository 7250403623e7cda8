//! Mixture ensemble against closed-form references.

use mice_core::ensemble::{fit_mm, ClassDensity, Gaussian, MixtureEnsemble, MmConfig};
use mice_core::linalg::Matrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bivariate normal density from the explicit inverse and determinant.
fn pdf2(x: [f64; 2], m: [f64; 2], c: [[f64; 2]; 2]) -> f64 {
    let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    let inv = [[c[1][1] / det, -c[0][1] / det], [-c[1][0] / det, c[0][0] / det]];
    let d = [x[0] - m[0], x[1] - m[1]];
    let q = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
    (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = r.gen_range(1e-12..1.0);
    let u2: f64 = r.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn posterior_matches_brute_force_densities() {
    let m0 = [-0.5, 0.3];
    let c0 = [[1.0, 0.3], [0.3, 0.5]];
    let m1 = [1.0, -0.2];
    let c1 = [[0.7, -0.2], [-0.2, 1.2]];
    let g = |m: [f64; 2], c: [[f64; 2]; 2]| {
        Gaussian::new(m.to_vec(), Matrix::from_vec(2, 2, vec![c[0][0], c[0][1], c[1][0], c[1][1]])).unwrap()
    };
    let e = MixtureEnsemble {
        classes: [ClassDensity::single(g(m0, c0), 0.7, 70), ClassDensity::single(g(m1, c1), 0.3, 30)],
    };
    for x in [[0.0, 0.0], [2.0, -1.0], [-1.5, 1.0], [0.3, 0.7]] {
        let a = pdf2(x, m0, c0) * 0.7 * 70.0;
        let b = pdf2(x, m1, c1) * 0.3 * 30.0;
        let p = e.posterior(&x).unwrap();
        assert!((p[1] - b / (a + b)).abs() < 1e-12, "{x:?}");
        assert!((e.classes[0].log_density(&x) - pdf2(x, m0, c0).ln()).abs() < 1e-12);
    }
}

#[test]
fn single_component_covariance_is_sample_covariance_plus_ridge() {
    let pts = [[1.0, 2.0], [3.0, 1.0], [2.0, 4.0], [0.0, 1.0]];
    // mean (1.5, 2); deviations (−.5,0) (1.5,−1) (.5,2) (−1.5,−1)
    // Σxx = (.25+2.25+.25+2.25)/4 = 1.25, Σxy = (0−1.5+1+1.5)/4 = 0.25,
    // Σyy = (0+1+4+1)/4 = 1.5
    let mut lat: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
    let mut y = vec![true; 4];
    lat.extend([vec![10.0, 10.0], vec![11.0, 9.0], vec![9.0, 12.0], vec![10.0, 8.0]]);
    y.extend([false; 4]);
    let e = fit_mm(&lat, &y, &MmConfig::default()).unwrap();
    let g = &e.classes[1].components[0];
    assert_eq!(g.mean(), &[1.5, 2.0]);
    let c = g.covariance();
    for (got, want) in c.as_slice().iter().zip([1.25 + 1e-6, 0.25, 0.25, 1.5 + 1e-6]) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn two_components_fit_bimodal_data_better() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut sample = |n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let c = if i % 2 == 0 { -3.0 } else { 3.0 };
                vec![c + 0.5 * normal(&mut r), 0.5 * normal(&mut r)]
            })
            .collect()
    };
    let train = sample(200);
    let held_out = sample(200);
    let mut lat = train.clone();
    let mut y = vec![true; train.len()];
    lat.extend((0..50).map(|i| vec![0.1 * i as f64, 5.0 + 0.01 * i as f64]));
    y.extend([false; 50]);
    let ll = |k: usize| {
        let e = fit_mm(&lat, &y, &MmConfig { components: k, seed: 1, ..Default::default() }).unwrap();
        held_out.iter().map(|u| e.classes[1].log_density(u)).sum::<f64>()
    };
    let (one, two) = (ll(1), ll(2));
    assert!(two > one + 50.0, "K=1 {one}, K=2 {two}");
}

#[test]
fn shared_covariance_gives_linear_discriminant() {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let mut lat = Vec::new();
    let mut y = Vec::new();
    for i in 0..120 {
        let pos = i % 3 == 0;
        let (mx, my) = if pos { (1.0, 0.5) } else { (-0.5, -0.3) };
        let a = normal(&mut r);
        let b = normal(&mut r);
        lat.push(vec![mx + a, my + 0.6 * a + 0.8 * b]);
        y.push(pos);
    }
    let e = fit_mm(&lat, &y, &MmConfig { shared_covariance: true, ..Default::default() }).unwrap();

    // Independent LDA: class means, pooled ML covariance, closed-form inverse.
    let n = lat.len() as f64;
    let mean = |c: bool| {
        let pts: Vec<&Vec<f64>> = lat.iter().zip(&y).filter(|(_, &t)| t == c).map(|(u, _)| u).collect();
        let k = pts.len() as f64;
        ([pts.iter().map(|u| u[0]).sum::<f64>() / k, pts.iter().map(|u| u[1]).sum::<f64>() / k], k)
    };
    let (m0, n0) = mean(false);
    let (m1, n1) = mean(true);
    let mut s = [[0.0; 2]; 2];
    for (u, &t) in lat.iter().zip(&y) {
        let m = if t { m1 } else { m0 };
        let d = [u[0] - m[0], u[1] - m[1]];
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] += d[i] * d[j] / n;
            }
        }
    }
    s[0][0] += 1e-6;
    s[1][1] += 1e-6;
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
    let w = [
        inv[0][0] * (m1[0] - m0[0]) + inv[0][1] * (m1[1] - m0[1]),
        inv[1][0] * (m1[0] - m0[0]) + inv[1][1] * (m1[1] - m0[1]),
    ];
    let quad = |m: [f64; 2]| {
        m[0] * (inv[0][0] * m[0] + inv[0][1] * m[1]) + m[1] * (inv[1][0] * m[0] + inv[1][1] * m[1])
    };
    // Prior weight γ·n = n²/N for each class.
    let bias = -0.5 * (quad(m1) - quad(m0)) + ((n1 * n1) / (n0 * n0)).ln();

    let mut agree = 0;
    for _ in 0..200 {
        let u = [r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0)];
        let score = w[0] * u[0] + w[1] * u[1] + bias;
        let p = e.posterior(&u).unwrap();
        let logit = (p[1] / p[0]).ln();
        assert!((logit - score).abs() < 1e-6 * (1.0 + score.abs()), "{logit} vs {score}");
        agree += usize::from((p[1] > 0.5) == (score > 0.0));
    }
    assert_eq!(agree, 200);
}

fn mirrored() -> MixtureEnsemble {
    let cov = Matrix::from_vec(2, 2, vec![1.0, 0.2, 0.2, 0.8]);
    MixtureEnsemble {
        classes: [
            ClassDensity::single(Gaussian::new(vec![-1.0, -0.5], cov.clone()).unwrap(), 0.5, 40),
            ClassDensity::single(Gaussian::new(vec![1.0, 0.5], cov).unwrap(), 0.5, 40),
        ],
    }
}

#[test]
fn mirrored_classes_are_even_at_origin() {
    let p = mirrored().posterior(&[0.0, 0.0]).unwrap();
    assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
}

proptest! {
    #[test]
    fn posterior_is_a_distribution(a in -8.0f64..8.0, b in -8.0f64..8.0) {
        let p = mirrored().posterior(&[a, b]).unwrap();
        prop_assert!(p[0] > 0.0 && p[1] > 0.0);
        prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_prior_scaling_is_invisible(a in -5.0f64..5.0, b in -5.0f64..5.0, k in 1usize..50) {
        let e = mirrored();
        let mut scaled = e.clone();
        scaled.classes[0].count *= k;
        scaled.classes[1].count *= k;
        let p = e.posterior(&[a, b]).unwrap();
        let q = scaled.posterior(&[a, b]).unwrap();
        prop_assert!((p[1] - q[1]).abs() < 1e-12);
    }
}
