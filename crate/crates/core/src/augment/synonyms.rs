use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// `word → synonyms`, never listing a word as its own synonym.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynonymTable {
    map: BTreeMap<String, Vec<String>>,
}

impl SynonymTable {
    pub fn insert(&mut self, word: String, synonyms: Vec<String>) -> Result<()> {
        if synonyms.contains(&word) {
            return Err(Error::Data(format!("{word:?} listed as its own synonym")));
        }
        self.map.insert(word, synonyms);
        Ok(())
    }

    pub fn get(&self, word: &str) -> &[String] {
        self.map.get(word).map_or(&[], Vec::as_slice)
    }

    pub fn has_synonyms(&self, word: &str) -> bool {
        !self.get(word).is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.map.iter()
    }

    /// Parses `word<TAB>syn1,syn2,...` lines. Blank lines are skipped.
    pub fn parse(input: &str) -> Result<Self> {
        let mut table = SynonymTable::default();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (word, rest) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: line_no,
                msg: "expected word<TAB>synonyms".into(),
            })?;
            let word = word.trim();
            if word.is_empty() || rest.contains('\t') {
                return Err(Error::Parse {
                    line: line_no,
                    msg: "expected exactly one non-empty word and one synonym list".into(),
                });
            }
            if table.map.contains_key(word) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("duplicate entry for {word:?}"),
                });
            }
            let syns: Vec<String> = rest
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            if syns.iter().any(|s| s == word) {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("{word:?} listed as its own synonym"),
                });
            }
            table.map.insert(word.to_string(), syns);
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        self.map
            .iter()
            .map(|(w, s)| format!("{w}\t{}\n", s.join(",")))
            .collect()
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
