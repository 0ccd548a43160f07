//! Checkpoint directories: `manifest.txt` (format version, model kind,
//! config echo, parameter names and shapes) and `params.bin` (every
//! parameter as little-endian f64, concatenated in manifest order).

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hallucinator::{Critic, CriticConfig, Generator, GeneratorConfig};
use crate::learner::{LearnerConfig, LearnerModel};
use crate::nn::ParamStore;
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "embedhalluc-checkpoint";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const DATA_FILE: &str = "params.bin";

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub trainable: bool,
    pub shape: Vec<usize>,
}

impl ParamEntry {
    fn count(&self) -> Option<usize> {
        self.shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub version: u32,
    pub kind: String,
    pub config: serde_json::Value,
    pub params: Vec<ParamEntry>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

impl Manifest {
    pub fn parse(input: &str) -> Result<Self> {
        let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| parse_err(0, format!("manifest ends before {what}")))
        };

        let (n, header) = next("header")?;
        let version = header
            .strip_prefix(MAGIC)
            .and_then(|v| v.trim().parse::<u32>().ok())
            .ok_or_else(|| parse_err(n, "not a checkpoint manifest"))?;
        if version != FORMAT_VERSION {
            return Err(parse_err(n, format!("unsupported format version {version}")));
        }
        let (n, kind_line) = next("kind")?;
        let kind = kind_line
            .strip_prefix("kind ")
            .filter(|k| !k.is_empty() && !k.contains(char::is_whitespace))
            .ok_or_else(|| parse_err(n, "expected `kind <name>`"))?
            .to_string();
        let (n, config_line) = next("config")?;
        let config = config_line
            .strip_prefix("config ")
            .ok_or_else(|| parse_err(n, "expected `config <json>`"))
            .and_then(|raw| serde_json::from_str(raw).map_err(|e| parse_err(n, e.to_string())))?;
        let (n, count_line) = next("params")?;
        let count: usize = count_line
            .strip_prefix("params ")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| parse_err(n, "expected `params <count>`"))?;

        let mut params = Vec::new();
        for _ in 0..count {
            let (n, line) = next("parameter list")?;
            let fields: Vec<&str> = line.split(' ').collect();
            let [tag, name, role, shape] = fields[..] else {
                return Err(parse_err(n, "expected `param <name> <trainable|buffer> <shape>`"));
            };
            if tag != "param" || name.is_empty() {
                return Err(parse_err(n, "expected `param <name> <trainable|buffer> <shape>`"));
            }
            let trainable = match role {
                "trainable" => true,
                "buffer" => false,
                other => return Err(parse_err(n, format!("unknown parameter role {other:?}"))),
            };
            let shape = shape
                .split('x')
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| parse_err(n, format!("bad shape {shape:?}")))?;
            let entry = ParamEntry {
                name: name.to_string(),
                trainable,
                shape,
            };
            if entry.count().is_none() {
                return Err(parse_err(n, "shape overflows"));
            }
            params.push(entry);
        }
        if let Some((n, extra)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(parse_err(n, format!("unexpected trailing line {extra:?}")));
        }
        Ok(Manifest {
            version,
            kind,
            config,
            params,
        })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MAGIC} {}\nkind {}\nconfig {}\nparams {}\n",
            self.version,
            self.kind,
            self.config,
            self.params.len()
        );
        for p in &self.params {
            let shape: Vec<String> = p.shape.iter().map(usize::to_string).collect();
            let role = if p.trainable { "trainable" } else { "buffer" };
            out.push_str(&format!("param {} {role} {}\n", p.name, shape.join("x")));
        }
        out
    }

    /// Byte length `params.bin` must have.
    pub fn data_len(&self) -> Option<usize> {
        self.params
            .iter()
            .try_fold(0usize, |acc, p| acc.checked_add(p.count()?.checked_mul(8)?))
    }
}

pub fn encode_params(store: &ParamStore) -> (Vec<ParamEntry>, Vec<u8>) {
    let mut bytes = Vec::new();
    let entries = store
        .entries()
        .iter()
        .map(|p| {
            for v in p.value.data() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            ParamEntry {
                name: p.name.clone(),
                trainable: p.trainable,
                shape: p.value.shape().to_vec(),
            }
        })
        .collect();
    (entries, bytes)
}

pub fn decode_params(manifest: &Manifest, bytes: &[u8]) -> Result<ParamStore> {
    let expected = manifest
        .data_len()
        .ok_or_else(|| Error::Data("parameter sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Data(format!(
            "parameter data has {} bytes, manifest describes {expected}",
            bytes.len()
        )));
    }
    let mut store = ParamStore::new();
    let mut chunks = bytes.chunks_exact(8);
    for p in &manifest.params {
        let count = p.count().expect("checked by data_len");
        let data: Vec<f64> = chunks
            .by_ref()
            .take(count)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        if store.find(&p.name).is_some() {
            return Err(Error::Data(format!("duplicate parameter {}", p.name)));
        }
        store.add(p.name.clone(), Tensor::new(p.shape.clone(), data)?, p.trainable);
    }
    Ok(store)
}

pub fn save_checkpoint<C: Serialize>(dir: &Path, kind: &str, config: &C, store: &ParamStore) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let (params, bytes) = encode_params(store);
    let manifest = Manifest {
        version: FORMAT_VERSION,
        kind: kind.to_string(),
        config: serde_json::to_value(config)?,
        params,
    };
    std::fs::write(dir.join(MANIFEST_FILE), manifest.to_text())?;
    std::fs::write(dir.join(DATA_FILE), bytes)?;
    Ok(())
}

/// Reads a checkpoint, checking its kind. A missing directory is a
/// dependency error.
pub fn load_checkpoint(dir: &Path, kind: &str) -> Result<(Manifest, ParamStore)> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::Dependency(format!("no checkpoint at {}", dir.display())));
    }
    let manifest = Manifest::parse(&std::fs::read_to_string(manifest_path)?)?;
    if manifest.kind != kind {
        return Err(Error::Data(format!(
            "checkpoint at {} holds a {}, expected a {kind}",
            dir.display(),
            manifest.kind
        )));
    }
    let store = decode_params(&manifest, &std::fs::read(dir.join(DATA_FILE))?)?;
    Ok((manifest, store))
}

fn typed<C: DeserializeOwned>(dir: &Path, kind: &str) -> Result<(C, ParamStore)> {
    let (manifest, store) = load_checkpoint(dir, kind)?;
    let cfg = serde_json::from_value(manifest.config)?;
    Ok((cfg, store))
}

pub fn save_generator(dir: &Path, gen: &Generator) -> Result<()> {
    save_checkpoint(dir, "generator", gen.config(), gen.params())
}

pub fn load_generator(dir: &Path) -> Result<Generator> {
    let (cfg, store): (GeneratorConfig, _) = typed(dir, "generator")?;
    Generator::from_parts(cfg, store)
}

pub fn save_critic(dir: &Path, critic: &Critic) -> Result<()> {
    save_checkpoint(dir, "critic", critic.config(), critic.params())
}

pub fn load_critic(dir: &Path) -> Result<Critic> {
    let (cfg, store): (CriticConfig, _) = typed(dir, "critic")?;
    Critic::from_parts(cfg, store)
}

pub fn save_learner(dir: &Path, model: &LearnerModel) -> Result<()> {
    save_checkpoint(dir, "learner", model.config(), model.params())
}

pub fn load_learner(dir: &Path) -> Result<LearnerModel> {
    let (cfg, store): (LearnerConfig, _) = typed(dir, "learner")?;
    LearnerModel::from_parts(cfg, store)
}
