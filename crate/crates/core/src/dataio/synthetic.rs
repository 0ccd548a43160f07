use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vocab::Vocab;
use super::{Example, TaskDataset, TaskKind};
use crate::augment::SynonymTable;
use crate::error::{Error, Result};
use crate::metrics::MetricKind;
use crate::rng;

const NUM_SPECIALS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub name: String,
    pub num_classes: usize,
    /// Total vocabulary including the four special tokens.
    pub vocab_size: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub size: usize,
    /// Probability mass each class spreads uniformly over all words; 0
    /// gives disjoint class supports.
    pub overlap: f64,
    /// Words per synonym cluster inside a class's signature words.
    pub synonym_group: usize,
    /// Explicit class-conditional word distributions (`C` rows over the
    /// non-special words), replacing the signature/overlap construction.
    pub class_distributions: Option<Vec<Vec<f64>>>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            name: "synthetic".into(),
            num_classes: 2,
            vocab_size: 64,
            min_len: 4,
            max_len: 12,
            size: 1000,
            overlap: 0.5,
            synonym_group: 3,
            class_distributions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub dataset: TaskDataset,
    pub vocab: Vocab,
    pub synonyms: SynonymTable,
    /// Class-conditional unigram distribution over `words`.
    pub centroids: Vec<Vec<f64>>,
    pub words: Vec<String>,
}

impl SyntheticSpec {
    fn centroids(&self, words: usize) -> Result<Vec<Vec<f64>>> {
        let c = self.num_classes;
        if let Some(given) = &self.class_distributions {
            if given.len() != c || given.iter().any(|row| row.len() != words) {
                return Err(Error::Spec(format!(
                    "class_distributions must be {c} rows of {words} probabilities"
                )));
            }
            for row in given {
                let total: f64 = row.iter().sum();
                if row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::Spec("class distribution is not a probability vector".into()));
                }
            }
            return Ok(given.clone());
        }
        Ok((0..c)
            .map(|class| {
                let own = (0..words).filter(|j| j % c == class).count() as f64;
                (0..words)
                    .map(|j| {
                        let base = self.overlap / words as f64;
                        if j % c == class {
                            base + (1.0 - self.overlap) / own
                        } else {
                            base
                        }
                    })
                    .collect()
            })
            .collect())
    }

    fn validate(&self) -> Result<usize> {
        if self.vocab_size <= NUM_SPECIALS {
            return Err(Error::Spec(format!(
                "vocab_size {} leaves no room beside the {NUM_SPECIALS} special tokens",
                self.vocab_size
            )));
        }
        let words = self.vocab_size - NUM_SPECIALS;
        if self.num_classes == 0 || words < self.num_classes {
            return Err(Error::Spec(format!(
                "{} classes need at least as many words, have {words}",
                self.num_classes
            )));
        }
        if self.min_len == 0 || self.max_len < self.min_len {
            return Err(Error::Spec("sentence length range must satisfy 1 ≤ min ≤ max".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Spec("overlap must lie in [0, 1]".into()));
        }
        if self.size == 0 {
            return Err(Error::Data("synthetic task of size 0 is empty".into()));
        }
        Ok(words)
    }
}

/// Samples a labeled corpus from class-conditional unigram distributions,
/// with a synonym table clustering each class's signature words.
pub fn synthetic_task(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticTask> {
    let n_words = spec.validate()?;
    let centroids = spec.centroids(n_words)?;
    let words: Vec<String> = (0..n_words).map(|j| format!("w{j}")).collect();
    let mut rng = rng::stream(seed, "data");

    let samplers = centroids
        .iter()
        .map(|row| WeightedIndex::new(row).map_err(|e| Error::Spec(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut examples: Vec<Example> = (0..spec.size)
        .map(|i| {
            let label = i % spec.num_classes;
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let text = (0..len)
                .map(|_| words[samplers[label].sample(&mut rng)].as_str())
                .collect::<Vec<_>>()
                .join(" ");
            Example {
                text,
                text2: None,
                label,
            }
        })
        .collect();
    examples.shuffle(&mut rng);

    let mut synonyms = SynonymTable::default();
    let group = spec.synonym_group.max(1);
    for class in 0..spec.num_classes {
        let own: Vec<&String> = words
            .iter()
            .enumerate()
            .filter(|(j, _)| j % spec.num_classes == class)
            .map(|(_, w)| w)
            .collect();
        for cluster in own.chunks(group).filter(|c| c.len() > 1) {
            for w in cluster {
                let syns = cluster.iter().filter(|s| *s != w).map(|s| s.to_string()).collect();
                synonyms.insert(w.to_string(), syns)?;
            }
        }
    }

    let dataset = TaskDataset {
        name: spec.name.clone(),
        kind: TaskKind::Single,
        examples,
        label_names: (0..spec.num_classes).map(|c| c.to_string()).collect(),
        metric: MetricKind::Accuracy,
    };
    Ok(SyntheticTask {
        dataset,
        vocab: Vocab::from_words(&words),
        synonyms,
        centroids,
        words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_errors() {
        let tiny = SyntheticSpec {
            vocab_size: 4,
            ..Default::default()
        };
        assert!(matches!(synthetic_task(&tiny, 0), Err(Error::Spec(_))));
        let empty = SyntheticSpec {
            size: 0,
            ..Default::default()
        };
        assert!(matches!(synthetic_task(&empty, 0), Err(Error::Data(_))));
    }

    #[test]
    fn deterministic_and_valid() {
        let spec = SyntheticSpec::default();
        let a = synthetic_task(&spec, 5).unwrap();
        assert_eq!(a, synthetic_task(&spec, 5).unwrap());
        a.dataset.validate().unwrap();
        for row in &a.centroids {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn synonyms_stay_inside_a_class() {
        let task = synthetic_task(&SyntheticSpec::default(), 1).unwrap();
        for (word, syns) in task.synonyms.entries() {
            let class = |w: &str| w[1..].parse::<usize>().unwrap() % 2;
            assert!(!syns.is_empty());
            assert!(syns.iter().all(|s| class(s) == class(word) && s != word));
        }
    }
}
