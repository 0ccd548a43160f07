use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Example, TaskDataset};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    /// Unlabeled pool per class; 0 skips the pool requirement.
    pub pool: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        SplitSizes {
            train: 16,
            validation: 16,
            pool: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FewShotSplit {
    pub train: Vec<Example>,
    pub validation: Vec<Example>,
    /// Pool examples keep their labels here for oracle checks; the SSL
    /// pipeline only ever sees their text.
    pub pool: Vec<Example>,
    pub test: Vec<Example>,
    pub seed: u64,
}

/// Class-balanced train / validation / pool draws with the remainder as
/// test. Examples with repeated text are dropped (first occurrence kept)
/// so no sentence can land in two partitions.
pub fn sample_few_shot(dataset: &TaskDataset, sizes: SplitSizes, seed: u64) -> Result<FewShotSplit> {
    dataset.validate()?;
    let mut seen = HashSet::new();
    let unique: Vec<&Example> = dataset
        .examples
        .iter()
        .filter(|e| seen.insert((e.text.as_str(), e.text2.as_deref())))
        .collect();
    let dropped = dataset.examples.len() - unique.len();
    if dropped > 0 {
        log::info!("split: dropped {dropped} duplicate-text example(s)");
    }

    let mut rng = rng::stream(seed, "data");
    let need = sizes.train + sizes.validation + sizes.pool;
    let mut split = FewShotSplit {
        train: Vec::new(),
        validation: Vec::new(),
        pool: Vec::new(),
        test: Vec::new(),
        seed,
    };
    for class in 0..dataset.num_classes() {
        let mut members: Vec<&Example> = unique.iter().copied().filter(|e| e.label == class).collect();
        if members.len() < need {
            return Err(Error::Capacity {
                class: dataset.label_names[class].clone(),
                available: members.len(),
                required: need,
            });
        }
        members.shuffle(&mut rng);
        let mut rest = members.into_iter().cloned();
        split.train.extend(rest.by_ref().take(sizes.train));
        split.validation.extend(rest.by_ref().take(sizes.validation));
        split.pool.extend(rest.by_ref().take(sizes.pool));
        split.test.extend(rest);
    }
    split.train.shuffle(&mut rng);
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::TaskKind;
    use crate::metrics::MetricKind;

    fn dataset(per_class: usize) -> TaskDataset {
        let examples = (0..2 * per_class)
            .map(|i| Example {
                text: format!("s{i}"),
                text2: None,
                label: i % 2,
            })
            .collect();
        TaskDataset {
            name: "d".into(),
            kind: TaskKind::Single,
            examples,
            label_names: vec!["a".into(), "b".into()],
            metric: MetricKind::Accuracy,
        }
    }

    #[test]
    fn sizes_and_determinism() {
        let d = dataset(120);
        let s = sample_few_shot(&d, SplitSizes::default(), 3).unwrap();
        assert_eq!(s.train.len(), 32);
        assert_eq!(s.validation.len(), 32);
        assert_eq!(s.pool.len(), 128);
        assert_eq!(s.test.len(), 240 - 192);
        assert_eq!(s, sample_few_shot(&d, SplitSizes::default(), 3).unwrap());
    }

    #[test]
    fn insufficient_class_names_the_class() {
        let d = dataset(50);
        let err = sample_few_shot(&d, SplitSizes::default(), 1).unwrap_err();
        assert!(matches!(err, Error::Capacity { ref class, available: 50, required: 96 } if class == "a"));
        let no_pool = SplitSizes {
            pool: 0,
            ..Default::default()
        };
        assert!(sample_few_shot(&d, no_pool, 1).is_ok());
    }

    #[test]
    fn duplicates_are_dropped() {
        let mut d = dataset(100);
        d.examples.push(d.examples[0].clone());
        let s = sample_few_shot(&d, SplitSizes::default(), 9).unwrap();
        let total = s.train.len() + s.validation.len() + s.pool.len() + s.test.len();
        assert_eq!(total, 200);
    }
}
