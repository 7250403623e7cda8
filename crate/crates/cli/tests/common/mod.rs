//! Helpers shared by the integration tests: scalar references for the GRU
//! and a runner for the `mice` binary.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use mice_core::linalg::Matrix;
use mice_core::model::{BiGru, GruCell};

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One GRU step, index by index.
pub fn scalar_step(c: &GruCell, x: &[f64], hp: &[f64]) -> Vec<f64> {
    let (h, d) = (hp.len(), x.len());
    let lin = |w: &Matrix, u: &Matrix, b: &[f64], i: usize, hv: &[f64]| {
        let mut s = b[i];
        for j in 0..d {
            s += w[(i, j)] * x[j];
        }
        for j in 0..h {
            s += u[(i, j)] * hv[j];
        }
        s
    };
    let z: Vec<f64> = (0..h).map(|i| sig(lin(&c.w_z, &c.u_z, &c.b_z, i, hp))).collect();
    let r: Vec<f64> = (0..h).map(|i| sig(lin(&c.w_r, &c.u_r, &c.b_r, i, hp))).collect();
    let rh: Vec<f64> = (0..h).map(|i| r[i] * hp[i]).collect();
    (0..h)
        .map(|i| z[i] * hp[i] + (1.0 - z[i]) * lin(&c.w_h, &c.u_h, &c.b_h, i, &rh).tanh())
        .collect()
}

pub fn fixed_cell(offset: f64) -> GruCell {
    let m = |a: f64, b: f64, c: f64, d: f64| Matrix::from_vec(2, 2, vec![a + offset, b, c, d - offset]);
    GruCell {
        w_z: m(0.1, -0.2, 0.3, 0.05),
        u_z: m(0.2, 0.1, -0.1, 0.3),
        b_z: vec![0.01, -0.02],
        w_r: m(-0.3, 0.2, 0.1, 0.4),
        u_r: m(0.05, -0.15, 0.25, 0.1),
        b_r: vec![0.0, 0.1],
        w_h: m(0.5, -0.4, 0.3, 0.2),
        u_h: m(-0.2, 0.3, 0.1, -0.1),
        b_h: vec![0.05, 0.0],
    }
}

/// H = D = 2 model with hand-picked weights.
pub fn fixture_model() -> BiGru {
    let mut m = BiGru::zeros(2, 2, 0.5);
    m.forward = fixed_cell(0.0);
    m.backward = fixed_cell(0.1);
    m.token_head.weight = Matrix::from_vec(2, 4, vec![0.3, -0.2, 0.1, 0.4, -0.1, 0.5, -0.3, 0.2]);
    m.token_head.bias = vec![0.05, -0.05];
    m.sentence_head.weight = Matrix::from_vec(2, 4, vec![-0.4, 0.1, 0.2, -0.3, 0.6, -0.2, 0.1, 0.3]);
    m.sentence_head.bias = vec![0.0, 0.1];
    m
}

pub fn fixture_inputs() -> Matrix {
    Matrix::from_vec(3, 2, vec![0.5, -1.0, 0.2, 0.8, -0.6, 0.3])
}

/// Per-token `[f_t; b_t]` states and the pooled `[f_T; b_1]`.
pub fn reference_encode(m: &BiGru, x: &Matrix) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = x.rows();
    let h = m.hidden();
    let mut f = vec![vec![0.0; h]];
    for t in 0..n {
        let next = scalar_step(&m.forward, x.row(t), &f[t]);
        f.push(next);
    }
    let mut b = vec![vec![0.0; h]; n + 1];
    for t in (0..n).rev() {
        b[t] = scalar_step(&m.backward, x.row(t), &b[t + 1]);
    }
    let states = (0..n).map(|t| [f[t + 1].clone(), b[t].clone()].concat()).collect();
    (states, [f[n].clone(), b[0].clone()].concat())
}

pub fn reference_softmax(w: &Matrix, bias: &[f64], s: &[f64]) -> [f64; 2] {
    let l: Vec<f64> = (0..2)
        .map(|k| bias[k] + (0..s.len()).map(|j| w[(k, j)] * s[j]).sum::<f64>())
        .collect();
    let (e0, e1) = (l[0].exp(), l[1].exp());
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

/// Runs the `mice` binary in `dir` with logging silenced.
pub fn mice(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mice"))
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .args(args)
        .output()
        .expect("mice binary runs")
}

/// Like [`mice`] but panics with stderr on a non-zero exit.
pub fn mice_ok(dir: &Path, args: &[&str]) -> String {
    let out = mice(dir, args);
    assert!(
        out.status.success(),
        "mice {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}
