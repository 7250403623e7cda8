//! A single GRU cell.
//!
//! ```text
//! z_t = σ(W_z x_t + U_z h_{t-1} + b_z)
//! r_t = σ(W_r x_t + U_r h_{t-1} + b_r)
//! h_t = z_t ⊙ h_{t-1} + (1 − z_t) ⊙ tanh(W_h x_t + U_h (r_t ⊙ h_{t-1}) + b_h)
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{sigmoid, Matrix};
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub w_z: Matrix,
    pub u_z: Matrix,
    pub b_z: Vec<f64>,
    pub w_r: Matrix,
    pub u_r: Matrix,
    pub b_r: Vec<f64>,
    pub w_h: Matrix,
    pub u_h: Matrix,
    pub b_h: Vec<f64>,
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    /// Candidate state, `tanh(...)`.
    pub candidate: Vec<f64>,
    /// `r ⊙ h_prev`
    pub reset_hidden: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) fn glorot(rows: usize, cols: usize, rng: &mut StreamRng) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-limit..limit)).collect())
}

impl GruCell {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        GruCell {
            w_z: Matrix::zeros(hidden, input_dim),
            u_z: Matrix::zeros(hidden, hidden),
            b_z: vec![0.0; hidden],
            w_r: Matrix::zeros(hidden, input_dim),
            u_r: Matrix::zeros(hidden, hidden),
            b_r: vec![0.0; hidden],
            w_h: Matrix::zeros(hidden, input_dim),
            u_h: Matrix::zeros(hidden, hidden),
            b_h: vec![0.0; hidden],
        }
    }

    /// Glorot-uniform matrices, zero biases.
    pub fn glorot(input_dim: usize, hidden: usize, rng: &mut StreamRng) -> Self {
        GruCell {
            w_z: glorot(hidden, input_dim, rng),
            u_z: glorot(hidden, hidden, rng),
            b_z: vec![0.0; hidden],
            w_r: glorot(hidden, input_dim, rng),
            u_r: glorot(hidden, hidden, rng),
            b_r: vec![0.0; hidden],
            w_h: glorot(hidden, input_dim, rng),
            u_h: glorot(hidden, hidden, rng),
            b_h: vec![0.0; hidden],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_z.cols()
    }

    pub fn hidden(&self) -> usize {
        self.b_z.len()
    }

    pub(crate) fn tensors(&self) -> [(&'static str, &[f64]); 9] {
        [
            ("w_z", self.w_z.as_slice()),
            ("u_z", self.u_z.as_slice()),
            ("b_z", &self.b_z),
            ("w_r", self.w_r.as_slice()),
            ("u_r", self.u_r.as_slice()),
            ("b_r", &self.b_r),
            ("w_h", self.w_h.as_slice()),
            ("u_h", self.u_h.as_slice()),
            ("b_h", &self.b_h),
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> [(&'static str, &mut [f64]); 9] {
        [
            ("w_z", self.w_z.as_mut_slice()),
            ("u_z", self.u_z.as_mut_slice()),
            ("b_z", &mut self.b_z),
            ("w_r", self.w_r.as_mut_slice()),
            ("u_r", self.u_r.as_mut_slice()),
            ("b_r", &mut self.b_r),
            ("w_h", self.w_h.as_mut_slice()),
            ("u_h", self.u_h.as_mut_slice()),
            ("b_h", &mut self.b_h),
        ]
    }

    pub(crate) fn shapes(&self) -> [(usize, usize); 9] {
        let (h, d) = (self.hidden(), self.input_dim());
        [(h, d), (h, h), (1, h), (h, d), (h, h), (1, h), (h, d), (h, h), (1, h)]
    }

    /// One step without bookkeeping; checks inputs are finite.
    pub fn step(&self, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() || h_prev.len() != self.hidden() {
            return Err(Error::Shape(format!(
                "cell expects x of {} and h of {}, got {} and {}",
                self.input_dim(),
                self.hidden(),
                x.len(),
                h_prev.len()
            )));
        }
        if x.iter().chain(h_prev).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GRU step input".into()));
        }
        Ok(self.step_cached(x, h_prev).h)
    }

    pub(crate) fn step_cached(&self, x: &[f64], h_prev: &[f64]) -> StepCache {
        let n = self.hidden();
        let mut z = self.b_z.clone();
        self.w_z.matvec_acc(x, &mut z);
        self.u_z.matvec_acc(h_prev, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut r = self.b_r.clone();
        self.w_r.matvec_acc(x, &mut r);
        self.u_r.matvec_acc(h_prev, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));

        let reset_hidden: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut candidate = self.b_h.clone();
        self.w_h.matvec_acc(x, &mut candidate);
        self.u_h.matvec_acc(&reset_hidden, &mut candidate);
        candidate.iter_mut().for_each(|v| *v = v.tanh());

        let h = (0..n)
            .map(|i| z[i] * h_prev[i] + (1.0 - z[i]) * candidate[i])
            .collect();
        StepCache {
            z,
            r,
            candidate,
            reset_hidden,
            h,
        }
    }

    /// Accumulates parameter gradients of one step into `grads` and writes
    /// the gradient with respect to `h_prev` into `dh_prev`.
    pub(crate) fn backward_step(
        &self,
        x: &[f64],
        h_prev: &[f64],
        cache: &StepCache,
        dh: &[f64],
        grads: &mut GruCell,
        dh_prev: &mut [f64],
    ) {
        let n = self.hidden();
        let mut dz_pre = vec![0.0; n];
        let mut dc_pre = vec![0.0; n];
        for i in 0..n {
            let (z, c) = (cache.z[i], cache.candidate[i]);
            dz_pre[i] = dh[i] * (h_prev[i] - c) * z * (1.0 - z);
            dc_pre[i] = dh[i] * (1.0 - z) * (1.0 - c * c);
            dh_prev[i] = dh[i] * z;
        }

        grads.w_h.outer_acc(&dc_pre, x);
        grads.u_h.outer_acc(&dc_pre, &cache.reset_hidden);
        add_assign(&mut grads.b_h, &dc_pre);
        let mut d_reset_hidden = vec![0.0; n];
        self.u_h.matvec_t_acc(&dc_pre, &mut d_reset_hidden);

        let mut dr_pre = vec![0.0; n];
        for i in 0..n {
            let r = cache.r[i];
            dr_pre[i] = d_reset_hidden[i] * h_prev[i] * r * (1.0 - r);
            dh_prev[i] += d_reset_hidden[i] * r;
        }

        grads.w_z.outer_acc(&dz_pre, x);
        grads.u_z.outer_acc(&dz_pre, h_prev);
        add_assign(&mut grads.b_z, &dz_pre);
        self.u_z.matvec_t_acc(&dz_pre, dh_prev);

        grads.w_r.outer_acc(&dr_pre, x);
        grads.u_r.outer_acc(&dr_pre, h_prev);
        add_assign(&mut grads.b_r, &dr_pre);
        self.u_r.matvec_t_acc(&dr_pre, dh_prev);
    }
}

fn add_assign(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

/// One GRU step: the new hidden state for input `x` and state `h_prev`.
pub fn gru_cell_step(params: &GruCell, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    params.step(x, h_prev)
}
