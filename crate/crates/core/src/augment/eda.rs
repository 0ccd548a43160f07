use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SynonymTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdaOp {
    SynonymReplacement,
    RandomSwap,
    RandomDeletion,
    RandomInsertion,
}

impl EdaOp {
    pub const ALL: [EdaOp; 4] = [
        EdaOp::SynonymReplacement,
        EdaOp::RandomSwap,
        EdaOp::RandomDeletion,
        EdaOp::RandomInsertion,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EdaMode {
    /// One uniformly chosen enabled op per augmented sentence.
    #[default]
    OneOp,
    /// One variant per enabled op.
    AllOps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdaParams {
    pub alpha: f64,
    pub ops: Vec<EdaOp>,
    pub mode: EdaMode,
    /// Augmented sentences produced per input sentence in one-op mode.
    pub per_sentence: usize,
}

impl Default for EdaParams {
    fn default() -> Self {
        EdaParams {
            alpha: 0.1,
            ops: EdaOp::ALL.to_vec(),
            mode: EdaMode::OneOp,
            per_sentence: 4,
        }
    }
}

impl EdaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("EDA alpha {} outside (0, 1)", self.alpha)));
        }
        if self.ops.is_empty() {
            return Err(Error::Config("no EDA operation enabled".into()));
        }
        Ok(())
    }

    /// Tokens edited by replacement, swap and insertion.
    pub fn edit_count(&self, len: usize) -> usize {
        ((self.alpha * len as f64).round() as usize).max(1)
    }
}

/// Counters for edits that could not act as requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdaStats {
    /// Synonym replacements that found no table hit and left the sentence unchanged.
    pub noop_replacements: u64,
    /// Insertions that fell back to copying a sentence token for lack of synonyms.
    pub insertion_fallbacks: u64,
}

/// Applies one uniformly chosen enabled op.
pub fn eda_augment<R: Rng + ?Sized>(
    sentence: &[String],
    params: &EdaParams,
    table: &SynonymTable,
    stats: &mut EdaStats,
    rng: &mut R,
) -> Result<Vec<String>> {
    params.validate()?;
    let op = *params.ops.choose(rng).expect("ops validated nonempty");
    apply_op(op, sentence, params, table, stats, rng)
}

/// Augmented variants of one sentence according to `params.mode`.
pub fn eda_variants<R: Rng + ?Sized>(
    sentence: &[String],
    params: &EdaParams,
    table: &SynonymTable,
    stats: &mut EdaStats,
    rng: &mut R,
) -> Result<Vec<Vec<String>>> {
    params.validate()?;
    match params.mode {
        EdaMode::OneOp => (0..params.per_sentence)
            .map(|_| eda_augment(sentence, params, table, stats, rng))
            .collect(),
        EdaMode::AllOps => params
            .ops
            .iter()
            .map(|&op| apply_op(op, sentence, params, table, stats, rng))
            .collect(),
    }
}

pub fn apply_op<R: Rng + ?Sized>(
    op: EdaOp,
    sentence: &[String],
    params: &EdaParams,
    table: &SynonymTable,
    stats: &mut EdaStats,
    rng: &mut R,
) -> Result<Vec<String>> {
    if sentence.is_empty() {
        return Err(Error::Data("EDA needs a nonempty sentence".into()));
    }
    let n = params.edit_count(sentence.len());
    let mut out = sentence.to_vec();
    match op {
        EdaOp::SynonymReplacement => {
            let mut hits: Vec<usize> = (0..out.len()).filter(|&i| table.has_synonyms(&out[i])).collect();
            if hits.is_empty() {
                stats.noop_replacements += 1;
                return Ok(out);
            }
            hits.shuffle(rng);
            for &i in hits.iter().take(n) {
                out[i] = table.get(&sentence[i]).choose(rng).expect("hit").clone();
            }
        }
        EdaOp::RandomSwap => {
            if out.len() >= 2 {
                for _ in 0..n {
                    let i = rng.random_range(0..out.len());
                    // Second index uniform over the other positions.
                    let mut j = rng.random_range(0..out.len() - 1);
                    if j >= i {
                        j += 1;
                    }
                    out.swap(i, j);
                }
            }
        }
        EdaOp::RandomDeletion => {
            let kept: Vec<String> = out.iter().filter(|_| rng.random::<f64>() >= params.alpha).cloned().collect();
            out = if kept.is_empty() {
                vec![sentence.choose(rng).expect("nonempty").clone()]
            } else {
                kept
            };
        }
        EdaOp::RandomInsertion => {
            for _ in 0..n {
                let sources: Vec<&String> = out.iter().filter(|w| table.has_synonyms(w)).collect();
                let word = match sources.choose(rng) {
                    Some(w) => table.get(w).choose(rng).expect("has synonyms").clone(),
                    None => {
                        stats.insertion_fallbacks += 1;
                        out.choose(rng).expect("nonempty").clone()
                    }
                };
                let at = rng.random_range(0..=out.len());
                out.insert(at, word);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn swap_ten_tokens_moves_one_pair() {
        let s = words("a b c d e f g h i j");
        let p = EdaParams::default();
        for seed in 0..20 {
            let out = apply_op(
                EdaOp::RandomSwap,
                &s,
                &p,
                &SynonymTable::default(),
                &mut EdaStats::default(),
                &mut rng::stream(seed, "eda"),
            )
            .unwrap();
            let moved = s.iter().zip(&out).filter(|(a, b)| a != b).count();
            assert_eq!(moved, 2);
        }
    }

    #[test]
    fn identical_tokens_swap_is_identity() {
        let s = words("x x x x x");
        let out = apply_op(
            EdaOp::RandomSwap,
            &s,
            &EdaParams::default(),
            &SynonymTable::default(),
            &mut EdaStats::default(),
            &mut rng::stream(1, "eda"),
        )
        .unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn replacement_without_hits_counts_noop() {
        let s = words("p q r");
        let mut stats = EdaStats::default();
        let table = SynonymTable::parse("z\ty\n").unwrap();
        let out = apply_op(
            EdaOp::SynonymReplacement,
            &s,
            &EdaParams::default(),
            &table,
            &mut stats,
            &mut rng::stream(1, "eda"),
        )
        .unwrap();
        assert_eq!(out, s);
        assert_eq!(stats.noop_replacements, 1);
    }

    #[test]
    fn empty_sentence_is_data_error() {
        let r = eda_augment(
            &[],
            &EdaParams::default(),
            &SynonymTable::default(),
            &mut EdaStats::default(),
            &mut rng::stream(1, "eda"),
        );
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn all_ops_mode_gives_one_variant_per_op() {
        let params = EdaParams {
            mode: EdaMode::AllOps,
            ..Default::default()
        };
        let v = eda_variants(
            &words("a b c"),
            &params,
            &SynonymTable::default(),
            &mut EdaStats::default(),
            &mut rng::stream(2, "eda"),
        )
        .unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v[3].len(), 4);
    }

    #[test]
    fn alpha_bounds() {
        for alpha in [0.0, 1.0, -0.1, f64::NAN] {
            let p = EdaParams {
                alpha,
                ..Default::default()
            };
            assert!(p.validate().is_err());
        }
    }
}
