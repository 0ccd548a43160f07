//! The few-shot learner and its two-phase fine-tuning.
//!
//! A teacher is fine-tuned on the real few-shot set. A student starting
//! from the same initialization alternates real steps with steps on an
//! auxiliary source: hallucinated embeddings (optionally relabeled by the
//! teacher) or, for the pseudo-labeling baseline, pseudo-labeled sentences.

mod finetune;
mod model;

pub use finetune::{
    evaluate, finetune_student, finetune_teacher, finetune_with_aux, pseudo_label, step_log_csv,
    AuxBatch, AuxSource, FinetuneOutcome, HallucinationSource, Selection, StepRecord,
};
pub use model::{EncoderKind, LearnerConfig, LearnerModel};
pub(crate) use model::stack_rows;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LossCombination {
    /// Separate optimizer steps for the real and auxiliary losses.
    #[default]
    TwoStep,
    /// One step on `L_real + L_aux`.
    Summed,
}

/// Tokens and gold label of one training sentence.
pub type Labeled = (Vec<usize>, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinetuneConfig {
    pub max_steps: usize,
    pub real_lr: f64,
    pub halluc_lr: f64,
    pub real_batch: usize,
    pub halluc_batch: usize,
    pub eval_interval: usize,
    pub label_calibration: bool,
    pub loss_combination: LossCombination,
    /// Validation-select the teacher as well as the student.
    pub select_teacher: bool,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        FinetuneConfig {
            max_steps: 1000,
            real_lr: 1e-5,
            halluc_lr: 1e-5,
            real_batch: 8,
            halluc_batch: 8,
            eval_interval: 100,
            label_calibration: true,
            loss_combination: LossCombination::TwoStep,
            select_teacher: false,
        }
    }
}

impl FinetuneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.real_lr > 0.0) || !(self.halluc_lr > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.real_batch == 0 {
            return Err(Error::Config("real_batch must be ≥ 1".into()));
        }
        if self.eval_interval == 0 || self.max_steps % self.eval_interval != 0 {
            return Err(Error::Config(format!(
                "eval_interval {} must be positive and divide max_steps {}",
                self.eval_interval, self.max_steps
            )));
        }
        Ok(())
    }
}
