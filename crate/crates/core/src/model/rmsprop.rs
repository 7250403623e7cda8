//! RMSProp with per-parameter mean-square accumulators.

use super::bigru::BiGru;

/// Running `E[g²]`, shaped like the model it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RmspropState {
    pub mean_square: BiGru,
}

impl RmspropState {
    pub fn new(model: &BiGru) -> Self {
        RmspropState {
            mean_square: model.zeros_like(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmspropConfig {
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for RmspropConfig {
    fn default() -> Self {
        RmspropConfig {
            learning_rate: 0.001,
            rho: 0.9,
            epsilon: 1e-7,
        }
    }
}

/// `E ← ρE + (1−ρ)g²; θ ← θ − lr·g/(√E + ε)` on flat slices.
pub fn rmsprop_update(params: &mut [f64], grads: &[f64], mean_square: &mut [f64], cfg: &RmspropConfig) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), mean_square.len());
    for ((p, &g), e) in params.iter_mut().zip(grads).zip(mean_square.iter_mut()) {
        *e = cfg.rho * *e + (1.0 - cfg.rho) * g * g;
        *p -= cfg.learning_rate * g / (e.sqrt() + cfg.epsilon);
    }
}

/// Applies one update to every tensor of `model`.
pub fn rmsprop_step(model: &mut BiGru, grads: &BiGru, state: &mut RmspropState, cfg: &RmspropConfig) {
    let g: Vec<&[f64]> = grads.tensors().into_iter().map(|(_, _, t)| t).collect();
    for ((p, g), e) in model
        .tensors_mut()
        .into_iter()
        .zip(g)
        .zip(state.mean_square.tensors_mut())
    {
        rmsprop_update(p, g, e, cfg);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut m = BiGru::glorot(3, 2, 0.5, 1);
        let before = m.clone();
        let mut s = RmspropState::new(&m);
        let g = m.zeros_like();
        rmsprop_step(&mut m, &g, &mut s, &RmspropConfig::default());
        assert_eq!(m, before);
    }

    #[test]
    fn scalar_first_step() {
        let (mut p, mut e) = ([1.0], [0.0]);
        rmsprop_update(&mut p, &[1.0], &mut e, &RmspropConfig::default());
        assert!((e[0] - 0.1).abs() < 1e-15);
        let hand = 1.0 - 0.001 / (0.1f64.sqrt() + 1e-7);
        assert_eq!(p[0], hand);
        assert!((p[0] - 0.9968377).abs() < 1e-7);
    }

    #[test]
    fn two_constant_steps() {
        let (mut p, mut e) = ([0.5], [0.0]);
        let cfg = RmspropConfig::default();
        rmsprop_update(&mut p, &[2.0], &mut e, &cfg);
        rmsprop_update(&mut p, &[2.0], &mut e, &cfg);
        // E1 = 0.4, E2 = 0.9·0.4 + 0.1·4 = 0.76
        let hand = 0.5 - 0.001 * 2.0 / (0.4f64.sqrt() + 1e-7) - 0.001 * 2.0 / (0.76f64.sqrt() + 1e-7);
        assert!((e[0] - 0.76).abs() < 1e-15);
        assert!((p[0] - hand).abs() < 1e-15);
    }

    #[test]
    fn accumulators_stay_nonnegative() {
        let mut m = BiGru::glorot(2, 2, 0.0, 1);
        let mut s = RmspropState::new(&m);
        let mut g = m.clone();
        g.tensors_mut().into_iter().for_each(|t| t.iter_mut().for_each(|v| *v = -*v));
        rmsprop_step(&mut m, &g, &mut s, &RmspropConfig::default());
        assert!(s.mean_square.tensors().iter().all(|(_, _, t)| t.iter().all(|&v| v >= 0.0)));
    }
}
