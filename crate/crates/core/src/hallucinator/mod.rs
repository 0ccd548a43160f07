//! Conditional WGAN-GP embedding hallucinator.
//!
//! The generator maps `[z ‖ onehot(c)]` through four
//! affine → batch-norm → LeakyReLU blocks and a final affine layer to a flat
//! `L·E` vector, read as an `L×E` embedding sequence. The critic scores
//! flattened sequences (optionally with the one-hot label appended) through
//! three blocks and a scalar head.

mod collect;
mod networks;
mod train;

pub use collect::{collect_real_embeddings, RealEmbeddings};
pub use networks::{Critic, Generator};
pub use train::{gradient_penalty, history_csv, train_hallucinator, EpochStats, TrainedHallucinator};
pub(crate) use train::BatchCycle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Where the class label enters the GAN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Conditioning {
    /// One-hot label concatenated to the generator input and the critic input.
    #[default]
    Both,
    GeneratorOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    #[default]
    BatchNorm,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub noise_dim: usize,
    pub num_classes: usize,
    pub hidden_dims: Vec<usize>,
    /// Token positions per generated sequence (`L`).
    pub output_len: usize,
    /// Width of each position (`E`).
    pub embed_dim: usize,
    pub leaky_slope: f64,
    pub conditioning: Conditioning,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self::desk(2)
    }
}

impl GeneratorConfig {
    pub fn full_scale(num_classes: usize) -> Self {
        GeneratorConfig {
            noise_dim: 100,
            num_classes,
            hidden_dims: vec![128, 256, 512, 1024],
            output_len: 128,
            embed_dim: 1024,
            leaky_slope: 0.2,
            conditioning: Conditioning::Both,
        }
    }

    pub fn desk(num_classes: usize) -> Self {
        GeneratorConfig {
            hidden_dims: vec![16, 32, 64, 128],
            output_len: 16,
            embed_dim: 32,
            ..Self::full_scale(num_classes)
        }
    }

    pub fn output_width(&self) -> usize {
        self.output_len * self.embed_dim
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(Error::Config("generator hidden_dims must be nonempty and positive".into()));
        }
        if self.noise_dim == 0 || self.num_classes == 0 || self.output_width() == 0 {
            return Err(Error::Config(
                "generator noise_dim, num_classes, output_len and embed_dim must be positive".into(),
            ));
        }
        check_slope(self.leaky_slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticConfig {
    pub hidden_dims: Vec<usize>,
    /// Flattened embedding width `L·E`.
    pub input_width: usize,
    pub num_classes: usize,
    pub norm_kind: NormKind,
    pub leaky_slope: f64,
    pub conditioning: Conditioning,
}

impl Default for CriticConfig {
    fn default() -> Self {
        Self::desk(2)
    }
}

impl CriticConfig {
    pub fn full_scale(num_classes: usize) -> Self {
        CriticConfig {
            hidden_dims: vec![512, 512, 512],
            input_width: 128 * 1024,
            num_classes,
            norm_kind: NormKind::BatchNorm,
            leaky_slope: 0.2,
            conditioning: Conditioning::Both,
        }
    }

    pub fn desk(num_classes: usize) -> Self {
        CriticConfig {
            hidden_dims: vec![128, 128, 128],
            input_width: 16 * 32,
            norm_kind: NormKind::None,
            ..Self::full_scale(num_classes)
        }
    }

    /// Critic matching a generator's output width, class count and conditioning.
    pub fn for_generator(gen: &GeneratorConfig, hidden_dims: Vec<usize>) -> Self {
        CriticConfig {
            hidden_dims,
            input_width: gen.output_width(),
            num_classes: gen.num_classes,
            norm_kind: NormKind::BatchNorm,
            leaky_slope: gen.leaky_slope,
            conditioning: gen.conditioning,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) {
            return Err(Error::Config("critic hidden_dims must be nonempty and positive".into()));
        }
        if self.input_width == 0 || self.num_classes == 0 {
            return Err(Error::Config("critic input_width and num_classes must be positive".into()));
        }
        check_slope(self.leaky_slope)
    }
}

fn check_slope(slope: f64) -> Result<()> {
    if slope > 0.0 && slope < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("leaky slope {slope} outside (0, 1)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HallucTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gp_weight: f64,
    pub n_critic: usize,
}

impl Default for HallucTrainConfig {
    fn default() -> Self {
        HallucTrainConfig {
            epochs: 150,
            batch_size: 64,
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            gp_weight: 100.0,
            n_critic: 5,
        }
    }
}

impl HallucTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gp_weight >= 0.0) {
            return Err(Error::Config("gp_weight must be ≥ 0".into()));
        }
        if self.n_critic == 0 || self.batch_size == 0 {
            return Err(Error::Config("n_critic and batch_size must be ≥ 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config("lr must be positive".into()));
        }
        Ok(())
    }
}

/// A generated embedding sequence with its condition label and, after
/// calibration, the teacher's soft label.
#[derive(Debug, Clone, PartialEq)]
pub struct HallucSample {
    pub embedding: Tensor,
    pub condition_label: usize,
    pub soft_label: Option<Vec<f64>>,
}

impl HallucSample {
    pub fn with_soft_label(mut self, probs: Vec<f64>) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::Distribution(format!(
                "soft label sums to {total} or has negative entries"
            )));
        }
        self.soft_label = Some(probs);
        Ok(self)
    }
}
