use crate::NnError;

/// Network widths. The paper fixes the four-layer GCN and the attention
/// decoder but not the hidden sizes; these defaults are configurable
/// everywhere they matter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NnConfig {
    /// Padded node-feature width of the scenario subgraphs.
    pub in_features: usize,
    /// Output width of the first low-level GCN layer.
    pub hidden_low: usize,
    /// Scenario embedding width after the low-level GCN (readout input).
    pub f1: usize,
    /// Hidden width of the high-level GCN.
    pub hidden_high: usize,
    /// Final scenario embedding width.
    pub f_prime: usize,
    /// Attention heads in the decoder glimpse.
    pub heads: usize,
    /// Hidden width of the critic's perceptron.
    pub critic_hidden: usize,
}

impl Default for NnConfig {
    fn default() -> Self {
        NnConfig {
            in_features: 4,
            hidden_low: 64,
            f1: 64,
            hidden_high: 128,
            f_prime: 128,
            heads: 8,
            critic_hidden: 64,
        }
    }
}

impl NnConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.in_features == 0
            || self.hidden_low == 0
            || self.f1 == 0
            || self.hidden_high == 0
            || self.f_prime == 0
            || self.heads == 0
            || self.critic_hidden == 0
        {
            return Err(NnError::Config("all widths must be positive".into()));
        }
        if self.f_prime % self.heads != 0 {
            return Err(NnError::Config(format!(
                "f_prime {} must be divisible by heads {}",
                self.f_prime, self.heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.f_prime / self.heads
    }
}
