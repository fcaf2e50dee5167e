use serde::{Deserialize, Serialize};

/// Everything needed to repeat a training run, stored as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Resolved inputs in their `key = value` file formats.
    pub scenario: String,
    pub env_config: String,
    pub train_config: String,
    pub outputs: Outputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    pub metrics: String,
    pub final_checkpoint: String,
    pub checkpoint_pattern: String,
}
