use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::hallucinator::BatchCycle;
use crate::learner::{
    finetune_with_aux, AuxBatch, AuxSource, FinetuneConfig, FinetuneOutcome, Labeled, LearnerModel,
    Selection,
};
use crate::nn::one_hot;
use crate::rng::{self, Rng};

/// Token sequences with no labels attached.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct UnlabeledPool {
    sentences: Vec<Vec<usize>>,
}

impl UnlabeledPool {
    pub fn new(sentences: Vec<Vec<usize>>) -> Self {
        UnlabeledPool { sentences }
    }

    pub fn sentences(&self) -> &[Vec<usize>] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Labeled sentences served as auxiliary batches with one-hot targets,
/// cycling through a reshuffled order.
pub struct LabeledTokenSource {
    items: Vec<Labeled>,
    classes: usize,
    cycle: Option<BatchCycle>,
    rng: Rng,
}

impl LabeledTokenSource {
    pub fn new(items: Vec<Labeled>, classes: usize, seed: u64) -> Self {
        LabeledTokenSource {
            items,
            classes,
            cycle: None,
            rng: rng::stream(seed, "aux-sample"),
        }
    }
}

impl AuxSource for LabeledTokenSource {
    fn next_batch(&mut self, n: usize) -> Result<AuxBatch> {
        if self.items.is_empty() {
            return Err(Error::Data("auxiliary sentence set is empty".into()));
        }
        let len = self.items.len();
        let idx = self
            .cycle
            .get_or_insert_with(|| BatchCycle::new(len, n))
            .next(&mut self.rng);
        let inputs = idx.iter().map(|&i| self.items[i].0.clone()).collect();
        let labels: Vec<usize> = idx.iter().map(|&i| self.items[i].1).collect();
        Ok(AuxBatch::Tokens {
            inputs,
            targets: one_hot(&labels, self.classes)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SslOutcome {
    pub outcome: FinetuneOutcome,
    /// Hard label given to each pool sentence, in pool order.
    pub pseudo_labels: Vec<usize>,
}

/// Fine-tune on `train`, label the pool with the argmax of that model,
/// then fine-tune a fresh copy of `model_init` on `train` plus the
/// pseudo-labeled pool (pool batches at `halluc_lr` / `halluc_batch`).
pub fn ssl_pseudo_label_pipeline(
    model_init: &LearnerModel,
    train: &[Labeled],
    pool: &UnlabeledPool,
    cfg: &FinetuneConfig,
    seed: u64,
    selection: Option<Selection<'_>>,
) -> Result<SslOutcome> {
    let train_text: HashSet<&[usize]> = train.iter().map(|(t, _)| t.as_slice()).collect();
    let shared = pool
        .sentences
        .iter()
        .filter(|s| train_text.contains(s.as_slice()))
        .count();
    if shared > 0 {
        return Err(Error::Contamination(shared));
    }
    if pool.is_empty() {
        let outcome = finetune_with_aux(model_init.clone(), train, None, cfg, seed, selection)?;
        return Ok(SslOutcome {
            outcome,
            pseudo_labels: Vec::new(),
        });
    }

    let phase1 = finetune_with_aux(model_init.clone(), train, None, cfg, seed, selection)?;
    let pseudo_labels = phase1.model.predict(&pool.sentences)?;
    let items: Vec<Labeled> = pool.sentences.iter().cloned().zip(pseudo_labels.iter().copied()).collect();
    let mut source = LabeledTokenSource::new(items, model_init.config().num_classes, seed);
    let outcome = finetune_with_aux(model_init.clone(), train, Some(&mut source), cfg, seed, selection)?;
    Ok(SslOutcome {
        outcome,
        pseudo_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::LearnerConfig;

    fn model() -> LearnerModel {
        LearnerModel::new(
            LearnerConfig {
                vocab_size: 12,
                embed_dim: 8,
                max_len: 4,
                ffn_dim: 8,
                ..Default::default()
            },
            0,
        )
        .unwrap()
    }

    fn cfg() -> FinetuneConfig {
        FinetuneConfig {
            max_steps: 6,
            eval_interval: 3,
            real_lr: 1e-2,
            halluc_lr: 1e-2,
            real_batch: 2,
            halluc_batch: 2,
            ..Default::default()
        }
    }

    #[test]
    fn overlap_is_contamination() {
        let train = vec![(vec![4, 5], 0), (vec![6, 7], 1)];
        let pool = UnlabeledPool::new(vec![vec![8], vec![6, 7]]);
        let r = ssl_pseudo_label_pipeline(&model(), &train, &pool, &cfg(), 1, None);
        assert!(matches!(r, Err(Error::Contamination(1))));
    }

    #[test]
    fn every_pool_sentence_gets_one_label() {
        let train = vec![(vec![4, 5], 0), (vec![6, 7], 1)];
        let pool = UnlabeledPool::new(vec![vec![4, 4], vec![6], vec![9, 10]]);
        let out = ssl_pseudo_label_pipeline(&model(), &train, &pool, &cfg(), 1, None).unwrap();
        assert_eq!(out.pseudo_labels.len(), 3);
        assert!(out.pseudo_labels.iter().all(|&y| y < 2));
        assert!(out.outcome.log.iter().all(|r| r.l_halluc.is_some()));
    }
}
