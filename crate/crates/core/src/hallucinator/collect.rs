use crate::error::Result;
use crate::learner::{Labeled, LearnerModel};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct RealEmbeddings {
    pub samples: Vec<(Tensor, usize)>,
    /// Sentences with no tokens, emitted as all-zero sequences.
    pub empty_count: usize,
}

/// Token-table rows for each sentence, truncated or zero-padded to `len`
/// positions. No encoder block is applied.
pub fn collect_real_embeddings(
    model: &LearnerModel,
    examples: &[Labeled],
    len: usize,
) -> Result<RealEmbeddings> {
    let mut samples = Vec::with_capacity(examples.len());
    let mut empty_count = 0;
    for (tokens, label) in examples {
        if tokens.is_empty() {
            empty_count += 1;
        }
        samples.push((model.embed_tokens(tokens, len)?, *label));
    }
    if empty_count > 0 {
        log::warn!("{empty_count} empty sentence(s) collected as zero embeddings");
    }
    Ok(RealEmbeddings {
        samples,
        empty_count,
    })
}
