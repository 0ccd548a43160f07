//! Comparison augmenters: EDA lexical edits and pseudo-labeling of an
//! unlabeled pool.

mod eda;
mod ssl;
mod synonyms;

pub use eda::{apply_op, eda_augment, eda_variants, EdaMode, EdaOp, EdaParams, EdaStats};
pub use ssl::{ssl_pseudo_label_pipeline, LabeledTokenSource, SslOutcome, UnlabeledPool};
pub use synonyms::SynonymTable;
