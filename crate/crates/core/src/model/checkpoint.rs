//! Checkpoint files: every parameter tensor, the optimiser accumulators and
//! the training configuration.

use std::path::Path;

use super::bigru::BiGru;
use super::rmsprop::RmspropState;
use super::train::TrainConfig;
use super::Task;
use crate::container::TensorFile;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"MICECKP1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: BiGru,
    pub optimizer: Option<RmspropState>,
    pub config: TrainConfig,
    pub task: Task,
    pub provider_tag: String,
}

impl Checkpoint {
    fn to_tensor_file(&self) -> Result<TensorFile> {
        let mut f = TensorFile::new();
        f.set("task", self.task);
        f.set("input_dim", self.model.input_dim());
        f.set("hidden", self.model.hidden());
        f.set("dropout", self.model.dropout_rate);
        f.set("provider", &self.provider_tag);
        let cfg = serde_json::to_string(&self.config).map_err(|e| Error::Format(e.to_string()))?;
        f.set("train_config", cfg);
        push_model(&mut f, "param", &self.model);
        if let Some(opt) = &self.optimizer {
            push_model(&mut f, "rmsprop", &opt.mean_square);
        }
        Ok(f)
    }

    fn from_tensor_file(f: &TensorFile) -> Result<Self> {
        let task: Task = f.meta_parse("task")?;
        let input_dim: usize = f.meta_parse("input_dim")?;
        let hidden: usize = f.meta_parse("hidden")?;
        let dropout: f64 = f.meta_parse("dropout")?;
        let config: TrainConfig =
            serde_json::from_str(f.meta("train_config")?).map_err(|e| Error::Format(e.to_string()))?;
        let mut model = BiGru::zeros(input_dim, hidden, dropout);
        read_model(f, "param", &mut model)?;
        let optimizer = if f.tensors.iter().any(|(n, _)| n.starts_with("rmsprop.")) {
            let mut state = RmspropState::new(&model);
            read_model(f, "rmsprop", &mut state.mean_square)?;
            Some(state)
        } else {
            None
        };
        Ok(Checkpoint {
            model,
            optimizer,
            config,
            task,
            provider_tag: f.meta("provider")?.to_string(),
        })
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        self.to_tensor_file()?.encode(CHECKPOINT_MAGIC)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::decode(bytes, CHECKPOINT_MAGIC)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_tensor_file()?.write(path, CHECKPOINT_MAGIC)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_tensor_file(&TensorFile::read(path, CHECKPOINT_MAGIC)?)
    }
}

fn push_model(f: &mut TensorFile, prefix: &str, model: &BiGru) {
    for (name, (rows, cols), data) in model.tensors() {
        f.push(format!("{prefix}.{name}"), Matrix::from_vec(rows, cols, data.to_vec()));
    }
}

fn read_model(f: &TensorFile, prefix: &str, model: &mut BiGru) -> Result<()> {
    let names: Vec<(String, (usize, usize))> = model.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
    for ((name, shape), dst) in names.into_iter().zip(model.tensors_mut()) {
        let src = f.tensor(&format!("{prefix}.{name}"))?;
        if (src.rows(), src.cols()) != shape {
            return Err(Error::Format(format!(
                "tensor {prefix}.{name} has shape {}x{}, expected {}x{}",
                src.rows(),
                src.cols(),
                shape.0,
                shape.1
            )));
        }
        if !src.is_finite() {
            return Err(Error::NonFinite(format!("tensor {prefix}.{name}")));
        }
        dst.copy_from_slice(src.as_slice());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let model = BiGru::glorot(3, 4, 0.5, 9);
        let mut opt = RmspropState::new(&model);
        opt.mean_square.forward.b_z[1] = 0.25;
        Checkpoint {
            model,
            optimizer: Some(opt),
            config: TrainConfig { seed: 9, hidden: 4, clip_norm: Some(5.0), ..Default::default() },
            task: Task::Token,
            provider_tag: "synthetic(dim=3)".into(),
        }
    }

    #[test]
    fn round_trip() {
        let c = sample();
        assert_eq!(Checkpoint::decode(&c.encode().unwrap()).unwrap(), c);
        let mut bare = sample();
        bare.optimizer = None;
        assert_eq!(Checkpoint::decode(&bare.encode().unwrap()).unwrap(), bare);
    }

    #[test]
    fn wrong_magic() {
        let mut bytes = sample().encode().unwrap();
        bytes[0] = b'X';
        assert!(Checkpoint::decode(&bytes).is_err());
    }
}
