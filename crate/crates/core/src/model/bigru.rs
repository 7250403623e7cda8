//! Bidirectional GRU encoder with token-level and sentence-level softmax heads.
//!
//! The per-token state is `[forward_t ; backward_t]`; the pooled sentence
//! state is `[forward_T ; backward_1]` (final state of each direction).
//! Dropout acts on the state vector fed to a head, with inverted scaling so
//! evaluation mode is the identity.

use rand::Rng;

use super::gru::{glorot, GruCell, StepCache};
use super::Task;
use crate::error::{Error, Result};
use crate::linalg::{softmax_in_place, Matrix};
use crate::rng::{self, StreamRng};

/// Probabilities are clamped to `[PROB_FLOOR, 1 − PROB_FLOOR]` inside logs.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `2 × 2H`
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(outputs: usize, inputs: usize) -> Self {
        Dense {
            weight: Matrix::zeros(outputs, inputs),
            bias: vec![0.0; outputs],
        }
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        self.weight.matvec_acc(x, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiGru {
    pub forward: GruCell,
    pub backward: GruCell,
    pub token_head: Dense,
    pub sentence_head: Dense,
    pub dropout_rate: f64,
}

/// Whether a prediction runs with dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout masks drawn from the given seed.
    Train { seed: u64 },
}

/// Per-position encoder output plus the activations needed by `backward`.
#[derive(Debug, Clone)]
pub struct Encoded {
    /// `T × 2H`
    pub states: Matrix,
    /// `2H`
    pub pooled: Vec<f64>,
    forward_steps: Vec<StepCache>,
    /// Indexed by position, not by processing order.
    backward_steps: Vec<StepCache>,
}

/// Multiplicative dropout factors (`0` or `1 / (1 − rate)`), one row of
/// width `2H` per predicted unit.
pub type DropoutMasks = Vec<Vec<f64>>;

impl BiGru {
    pub fn zeros(input_dim: usize, hidden: usize, dropout_rate: f64) -> Self {
        BiGru {
            forward: GruCell::zeros(input_dim, hidden),
            backward: GruCell::zeros(input_dim, hidden),
            token_head: Dense::zeros(2, 2 * hidden),
            sentence_head: Dense::zeros(2, 2 * hidden),
            dropout_rate,
        }
    }

    /// Glorot-uniform matrices and zero biases, drawn from the `"init"`
    /// substream of `seed`.
    pub fn glorot(input_dim: usize, hidden: usize, dropout_rate: f64, seed: u64) -> Self {
        let mut rng = rng::substream(seed, "init");
        BiGru {
            forward: GruCell::glorot(input_dim, hidden, &mut rng),
            backward: GruCell::glorot(input_dim, hidden, &mut rng),
            token_head: Dense {
                weight: glorot(2, 2 * hidden, &mut rng),
                bias: vec![0.0; 2],
            },
            sentence_head: Dense {
                weight: glorot(2, 2 * hidden, &mut rng),
                bias: vec![0.0; 2],
            },
            dropout_rate,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim()
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    pub fn zeros_like(&self) -> Self {
        BiGru::zeros(self.input_dim(), self.hidden(), self.dropout_rate)
    }

    /// Every trainable tensor, in a fixed order, with its name and shape.
    pub fn tensors(&self) -> Vec<(String, (usize, usize), &[f64])> {
        let mut out = Vec::with_capacity(22);
        for (prefix, cell) in [("forward", &self.forward), ("backward", &self.backward)] {
            for ((name, data), shape) in cell.tensors().into_iter().zip(cell.shapes()) {
                out.push((format!("{prefix}.{name}"), shape, data));
            }
        }
        for (prefix, head) in [("token_head", &self.token_head), ("sentence_head", &self.sentence_head)] {
            out.push((format!("{prefix}.weight"), (head.weight.rows(), head.weight.cols()), head.weight.as_slice()));
            out.push((format!("{prefix}.bias"), (1, head.bias.len()), &head.bias[..]));
        }
        out
    }

    /// Mutable view in the same order as [`BiGru::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(22);
        for cell in [&mut self.forward, &mut self.backward] {
            out.extend(cell.tensors_mut().into_iter().map(|(_, t)| t));
        }
        for head in [&mut self.token_head, &mut self.sentence_head] {
            out.push(head.weight.as_mut_slice());
            out.push(&mut head.bias[..]);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|(_, _, t)| t.len()).sum()
    }

    fn head(&self, task: Task) -> &Dense {
        match task {
            Task::Token => &self.token_head,
            Task::Sentence => &self.sentence_head,
        }
    }

    /// Runs both directions over `inputs` (`T × D`, `T ≥ 1`).
    pub fn encode(&self, inputs: &Matrix) -> Result<Encoded> {
        let (t_len, d) = (inputs.rows(), inputs.cols());
        if t_len == 0 {
            return Err(Error::invalid("cannot encode an empty sequence"));
        }
        if d != self.input_dim() {
            return Err(Error::Shape(format!(
                "inputs have dim {d} but the model expects {}",
                self.input_dim()
            )));
        }
        let h = self.hidden();
        let zero = vec![0.0; h];

        let mut forward_steps: Vec<StepCache> = Vec::with_capacity(t_len);
        for t in 0..t_len {
            let prev = forward_steps.last().map_or(&zero[..], |c| &c.h[..]);
            let step = self.forward.step_cached(inputs.row(t), prev);
            forward_steps.push(step);
        }
        let mut backward_rev: Vec<StepCache> = Vec::with_capacity(t_len);
        for t in (0..t_len).rev() {
            let prev = backward_rev.last().map_or(&zero[..], |c| &c.h[..]);
            let step = self.backward.step_cached(inputs.row(t), prev);
            backward_rev.push(step);
        }
        backward_rev.reverse();
        let backward_steps = backward_rev;

        let mut states = Matrix::zeros(t_len, 2 * h);
        for t in 0..t_len {
            let row = states.row_mut(t);
            row[..h].copy_from_slice(&forward_steps[t].h);
            row[h..].copy_from_slice(&backward_steps[t].h);
        }
        let mut pooled = forward_steps[t_len - 1].h.clone();
        pooled.extend_from_slice(&backward_steps[0].h);
        if states.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("encoder state".into()));
        }
        Ok(Encoded {
            states,
            pooled,
            forward_steps,
            backward_steps,
        })
    }

    /// Draws `units` dropout masks of width `2H`.
    pub fn sample_masks(&self, units: usize, rng: &mut StreamRng) -> DropoutMasks {
        let width = 2 * self.hidden();
        let keep = 1.0 - self.dropout_rate;
        (0..units)
            .map(|_| {
                (0..width)
                    .map(|_| {
                        if self.dropout_rate == 0.0 || rng.gen_bool(keep) {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn masks_for(&self, mode: Mode, units: usize) -> Option<DropoutMasks> {
        match mode {
            Mode::Eval => None,
            Mode::Train { seed } => Some(self.sample_masks(units, &mut rng::from_seed(seed))),
        }
    }

    /// Class probabilities `(literal, idiomatic)` for each unit of `encoded`.
    pub fn head_probabilities(&self, encoded: &Encoded, task: Task, masks: Option<&DropoutMasks>) -> Vec<[f64; 2]> {
        let head = self.head(task);
        let states: Vec<&[f64]> = match task {
            Task::Token => (0..encoded.states.rows()).map(|t| encoded.states.row(t)).collect(),
            Task::Sentence => vec![&encoded.pooled[..]],
        };
        states
            .into_iter()
            .enumerate()
            .map(|(u, s)| {
                let mut logits = match masks {
                    Some(m) => head.logits(&apply_mask(s, &m[u])),
                    None => head.logits(s),
                };
                softmax_in_place(&mut logits);
                [logits[0], logits[1]]
            })
            .collect()
    }

    /// `T × 2` rows of `(literal, idiomatic)` probabilities.
    pub fn predict_tokens(&self, inputs: &Matrix, mode: Mode) -> Result<Matrix> {
        let enc = self.encode(inputs)?;
        let masks = self.masks_for(mode, inputs.rows());
        let probs = self.head_probabilities(&enc, Task::Token, masks.as_ref());
        Ok(Matrix::from_vec(probs.len(), 2, probs.into_iter().flatten().collect()))
    }

    /// `(literal, idiomatic)` probabilities for the whole sentence.
    pub fn predict_sentence(&self, inputs: &Matrix, mode: Mode) -> Result<[f64; 2]> {
        let enc = self.encode(inputs)?;
        let masks = self.masks_for(mode, 1);
        Ok(self.head_probabilities(&enc, Task::Sentence, masks.as_ref())[0])
    }

    /// Positive-class probabilities per unit in evaluation mode.
    pub fn predict_positive(&self, inputs: &Matrix, task: Task) -> Result<Vec<f64>> {
        let enc = self.encode(inputs)?;
        Ok(self.head_probabilities(&enc, task, None).into_iter().map(|p| p[1]).collect())
    }

    /// Summed cross-entropy of one sequence and the number of units it
    /// contributes. `labels` has one entry per unit.
    pub fn sequence_loss(
        &self,
        inputs: &Matrix,
        labels: &[bool],
        task: Task,
        masks: Option<&DropoutMasks>,
    ) -> Result<(f64, usize)> {
        let enc = self.encode(inputs)?;
        let probs = self.head_probabilities(&enc, task, masks);
        check_units(labels.len(), probs.len())?;
        let loss = probs
            .iter()
            .zip(labels)
            .map(|(p, &y)| unit_loss(p[1], y))
            .sum();
        Ok((loss, probs.len()))
    }

    /// Adds the gradient of the summed cross-entropy of one sequence to
    /// `grads` and returns `(summed loss, units)`. Callers divide by the
    /// total unit count of the batch.
    pub fn accumulate_gradients(
        &self,
        inputs: &Matrix,
        labels: &[bool],
        task: Task,
        masks: Option<&DropoutMasks>,
        grads: &mut BiGru,
    ) -> Result<(f64, usize)> {
        let enc = self.encode(inputs)?;
        let probs = self.head_probabilities(&enc, task, masks);
        check_units(labels.len(), probs.len())?;
        let h = self.hidden();
        let t_len = inputs.rows();
        let head = self.head(task);
        let head_grad = match task {
            Task::Token => &mut grads.token_head,
            Task::Sentence => &mut grads.sentence_head,
        };

        // Gradient with respect to each (pre-dropout) head input.
        let mut d_states = Matrix::zeros(probs.len(), 2 * h);
        let mut loss = 0.0;
        for (u, (p, &y)) in probs.iter().zip(labels).enumerate() {
            loss += unit_loss(p[1], y);
            let target = [f64::from(!y), f64::from(y)];
            let d_logits = [p[0] - target[0], p[1] - target[1]];
            let state = match task {
                Task::Token => enc.states.row(u),
                Task::Sentence => &enc.pooled[..],
            };
            let dropped;
            let head_input = match masks {
                Some(m) => {
                    dropped = apply_mask(state, &m[u]);
                    &dropped[..]
                }
                None => state,
            };
            head_grad.weight.outer_acc(&d_logits, head_input);
            head_grad.bias[0] += d_logits[0];
            head_grad.bias[1] += d_logits[1];
            let ds = d_states.row_mut(u);
            head.weight.matvec_t_acc(&d_logits, ds);
            if let Some(m) = masks {
                ds.iter_mut().zip(&m[u]).for_each(|(d, k)| *d *= k);
            }
        }

        // Route head gradients onto the per-direction hidden states.
        let mut dh_forward = Matrix::zeros(t_len, h);
        let mut dh_backward = Matrix::zeros(t_len, h);
        match task {
            Task::Token => {
                for t in 0..t_len {
                    dh_forward.row_mut(t).copy_from_slice(&d_states.row(t)[..h]);
                    dh_backward.row_mut(t).copy_from_slice(&d_states.row(t)[h..]);
                }
            }
            Task::Sentence => {
                dh_forward.row_mut(t_len - 1).copy_from_slice(&d_states.row(0)[..h]);
                dh_backward.row_mut(0).copy_from_slice(&d_states.row(0)[h..]);
            }
        }

        let zero = vec![0.0; h];
        let mut carry = vec![0.0; h];
        let mut dh_prev = vec![0.0; h];
        // Forward direction: positions T-1 .. 0.
        for t in (0..t_len).rev() {
            let dh: Vec<f64> = dh_forward.row(t).iter().zip(&carry).map(|(a, b)| a + b).collect();
            let h_prev = if t > 0 { &enc.forward_steps[t - 1].h[..] } else { &zero[..] };
            self.forward
                .backward_step(inputs.row(t), h_prev, &enc.forward_steps[t], &dh, &mut grads.forward, &mut dh_prev);
            std::mem::swap(&mut carry, &mut dh_prev);
        }
        // Backward direction was processed T-1 .. 0, so unroll 0 .. T-1.
        carry.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..t_len {
            let dh: Vec<f64> = dh_backward.row(t).iter().zip(&carry).map(|(a, b)| a + b).collect();
            let h_prev = if t + 1 < t_len { &enc.backward_steps[t + 1].h[..] } else { &zero[..] };
            self.backward
                .backward_step(inputs.row(t), h_prev, &enc.backward_steps[t], &dh, &mut grads.backward, &mut dh_prev);
            std::mem::swap(&mut carry, &mut dh_prev);
        }
        Ok((loss, probs.len()))
    }
}

fn apply_mask(state: &[f64], mask: &[f64]) -> Vec<f64> {
    state.iter().zip(mask).map(|(s, m)| s * m).collect()
}

fn check_units(labels: usize, units: usize) -> Result<()> {
    if labels != units {
        return Err(Error::Shape(format!("{labels} labels for {units} predicted units")));
    }
    Ok(())
}

/// `−[y ln p + (1 − y) ln(1 − p)]` with `p` clamped away from 0 and 1.
pub fn unit_loss(p_positive: f64, y: bool) -> f64 {
    let p = p_positive.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    if y {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Mean binary cross-entropy of positive-class probabilities.
pub fn bce_loss(probabilities: &[f64], labels: &[bool]) -> f64 {
    if probabilities.is_empty() {
        return 0.0;
    }
    probabilities
        .iter()
        .zip(labels)
        .map(|(&p, &y)| unit_loss(p, y))
        .sum::<f64>()
        / probabilities.len() as f64
}
