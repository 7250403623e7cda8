//! SVM accuracy against an exhaustive search over 2-D linear separators.

use mice_core::baseline::{train_svm, SparseVec, SvmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(seed: u64, n: usize) -> (Vec<[f64; 2]>, Vec<bool>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let y = i % 2 == 0;
        let c = if y { [1.2, 0.8] } else { [-1.0, -0.9] };
        // Sum of uniforms: roughly Gaussian with sd 0.5.
        let noise = |r: &mut ChaCha8Rng| (0..3).map(|_| r.gen_range(-0.5..0.5)).sum::<f64>();
        pts.push([c[0] + noise(&mut r), c[1] + noise(&mut r)]);
        ys.push(y);
    }
    (pts, ys)
}

/// Best accuracy of `sign(cos θ·x + sin θ·y − b)` over a fine grid.
fn grid_search_accuracy(pts: &[[f64; 2]], ys: &[bool]) -> f64 {
    let mut best = 0.0f64;
    for a in 0..360 {
        let th = (a as f64).to_radians();
        let (c, s) = (th.cos(), th.sin());
        for k in -60..=60 {
            let b = k as f64 * 0.05;
            let hits = pts
                .iter()
                .zip(ys)
                .filter(|(p, &y)| (c * p[0] + s * p[1] - b >= 0.0) == y)
                .count();
            best = best.max(hits as f64 / ys.len() as f64);
        }
    }
    best
}

#[test]
fn blobs_match_exhaustive_separator() {
    for seed in 0..3 {
        let (pts, ys) = blobs(seed, 300);
        let feats: Vec<SparseVec> = pts.iter().map(|p| SparseVec::dense(p)).collect();
        let svm = train_svm(&feats, &ys, 2, &SvmParams { seed, ..Default::default() }).unwrap();
        let acc = feats.iter().zip(&ys).filter(|(x, &y)| svm.predict(x) == y).count() as f64 / ys.len() as f64;
        let oracle = grid_search_accuracy(&pts, &ys);
        assert!(acc >= 0.95, "seed {seed}: accuracy {acc}");
        assert!(acc >= oracle - 0.02, "seed {seed}: accuracy {acc} vs best separator {oracle}");
        let objective = svm.objective(&feats, &ys);
        assert!(objective.is_finite());
    }
}
