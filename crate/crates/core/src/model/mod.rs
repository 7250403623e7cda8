//! Bidirectional GRU classifier, its loss, gradients and training loop.

mod bigru;
mod checkpoint;
mod gru;
mod rmsprop;
mod train;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use bigru::{bce_loss, unit_loss, BiGru, Dense, DropoutMasks, Encoded, Mode, PROB_FLOOR};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC};
pub use gru::{gru_cell_step, GruCell};
pub use rmsprop::{rmsprop_step, rmsprop_update, RmspropConfig, RmspropState};
pub use train::{gather_inputs, predict_all, train, train_from, unit_labels, TrainConfig, TrainOutcome};

/// What the classifier predicts: one label per token or one per sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Token,
    Sentence,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Token => "token",
            Task::Sentence => "sentence",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "token" => Ok(Task::Token),
            "sentence" => Ok(Task::Sentence),
            other => Err(format!("unknown task `{other}` (expected token or sentence)")),
        }
    }
}
