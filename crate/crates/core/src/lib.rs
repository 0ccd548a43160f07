//! Few-shot text classification with hallucinated sentence embeddings.
//!
//! A conditional Wasserstein GAN with gradient penalty learns the
//! class-conditional distribution of token-embedding sequences from a
//! 16-shot training set. A teacher learner is fine-tuned on the real data;
//! a student is then fine-tuned on real batches interleaved with
//! hallucinated batches, optionally with soft labels from the teacher
//! (label calibration). EDA and pseudo-labeling baselines and an
//! experiment harness with grid search and multi-seed reporting round out
//! the pipeline.

pub mod augment;
pub mod autodiff;
pub mod checkpoint;
pub mod dataio;
pub mod error;
pub mod hallucinator;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
