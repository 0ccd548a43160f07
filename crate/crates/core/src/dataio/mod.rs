//! Task datasets: TSV files, tokenization, few-shot splits and a synthetic
//! task with known generating distributions.

mod split;
mod synthetic;
mod vocab;

pub use split::{sample_few_shot, FewShotSplit, SplitSizes};
pub use synthetic::{synthetic_task, SyntheticSpec, SyntheticTask};
pub use vocab::{detokenize, tokenize, Vocab, CLS, PAD, SEP, UNK};

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::Labeled;
use crate::metrics::MetricKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    #[default]
    Single,
    Pair,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Example {
    pub text: String,
    pub text2: Option<String>,
    pub label: usize,
}

/// How to read a dataset file: column layout and the label strings, whose
/// order defines class ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    #[serde(default)]
    pub kind: TaskKind,
    pub labels: Vec<String>,
    #[serde(default)]
    pub metric: MetricKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDataset {
    pub name: String,
    pub kind: TaskKind,
    pub examples: Vec<Example>,
    pub label_names: Vec<String>,
    pub metric: MetricKind,
}

impl TaskDataset {
    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn schema(&self) -> Schema {
        Schema {
            name: self.name.clone(),
            kind: self.kind,
            labels: self.label_names.clone(),
            metric: self.metric,
        }
    }

    /// Labels in range and every class present.
    pub fn validate(&self) -> Result<()> {
        if self.examples.is_empty() {
            return Err(Error::Data(format!("dataset {} is empty", self.name)));
        }
        let c = self.num_classes();
        let mut seen = BTreeSet::new();
        for e in &self.examples {
            if e.label >= c {
                return Err(Error::Index {
                    what: "label",
                    index: e.label,
                    bound: c,
                });
            }
            if e.text2.is_some() != (self.kind == TaskKind::Pair) {
                return Err(Error::Data("example layout does not match task kind".into()));
            }
            seen.insert(e.label);
        }
        let missing: Vec<usize> = (0..c).filter(|k| !seen.contains(k)).collect();
        if !missing.is_empty() {
            return Err(Error::Coverage(missing));
        }
        Ok(())
    }
}

/// Parses TSV rows (`text<TAB>label` or `text1<TAB>text2<TAB>label`).
/// Blank lines are skipped; line numbers are 1-based.
pub fn parse_tsv(input: &str, schema: &Schema) -> Result<TaskDataset> {
    if schema.labels.is_empty() {
        return Err(Error::Config("schema declares no labels".into()));
    }
    let columns = match schema.kind {
        TaskKind::Single => 2,
        TaskKind::Pair => 3,
    };
    let mut examples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != columns {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected {columns} tab-separated fields, found {}", fields.len()),
            });
        }
        let raw = fields[columns - 1].trim();
        let label = schema
            .labels
            .iter()
            .position(|l| l == raw)
            .ok_or_else(|| Error::Label {
                line: line_no,
                label: raw.to_string(),
            })?;
        examples.push(Example {
            text: fields[0].to_string(),
            text2: (columns == 3).then(|| fields[1].to_string()),
            label,
        });
    }
    Ok(TaskDataset {
        name: schema.name.clone(),
        kind: schema.kind,
        examples,
        label_names: schema.labels.clone(),
        metric: schema.metric,
    })
}

pub fn load_dataset(path: &Path, schema: &Schema) -> Result<TaskDataset> {
    let text = std::fs::read_to_string(path)?;
    parse_tsv(&text, schema)
}

pub fn to_tsv(dataset: &TaskDataset) -> Result<String> {
    let mut out = String::new();
    for e in &dataset.examples {
        let fields = std::iter::once(&e.text).chain(e.text2.as_ref());
        for f in fields {
            if f.contains(['\t', '\n', '\r']) {
                return Err(Error::Data(format!("text {f:?} contains a tab or newline")));
            }
            out.push_str(f);
            out.push('\t');
        }
        let name = dataset.label_names.get(e.label).ok_or(Error::Index {
            what: "label",
            index: e.label,
            bound: dataset.label_names.len(),
        })?;
        out.push_str(name);
        out.push('\n');
    }
    Ok(out)
}

pub fn save_dataset(dataset: &TaskDataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_tsv(dataset)?)?;
    Ok(())
}

/// Token ids and labels; pair examples become `text1 SEP text2`.
pub fn encode(examples: &[Example], vocab: &Vocab) -> Vec<Labeled> {
    examples.iter().map(|e| (vocab.encode_example(e), e.label)).collect()
}
