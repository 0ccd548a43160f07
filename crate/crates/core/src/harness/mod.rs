//! Experiment orchestration: per-seed splits, method pipelines, grid
//! search with validation-selected checkpoints, and multi-seed reports.

mod grid;
mod report;

pub use grid::{grid_search, GridCell, GridOutcome};
pub use report::{
    emit_report, format_mean_std, mean_std, parse_report_csv, parse_report_json, render_report,
    render_table, CsvRow, ReportFormat, RunReport, SeedResult, SeedStatus, STD_CONVENTION,
};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::augment::{eda_variants, EdaParams, EdaStats, LabeledTokenSource, SynonymTable};
use crate::checkpoint;
use crate::dataio::{
    self, encode, sample_few_shot, synthetic_task, Example, Schema, SplitSizes, SyntheticSpec,
    TaskDataset, Vocab, PAD,
};
use crate::error::{Error, Result};
use crate::hallucinator::{
    collect_real_embeddings, history_csv, train_hallucinator, CriticConfig, GeneratorConfig,
    HallucTrainConfig,
};
use crate::learner::{
    evaluate, finetune_student, finetune_teacher, finetune_with_aux, step_log_csv, FinetuneConfig,
    FinetuneOutcome, Labeled, LearnerConfig, LearnerModel, Selection,
};
use crate::metrics::MetricKind;
use crate::rng::{self, child_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "finetune")]
    Finetune,
    #[serde(rename = "embedhalluc")]
    Embedhalluc,
    #[serde(rename = "embedhalluc+labelcalib")]
    EmbedhallucLabelcalib,
    #[serde(rename = "eda")]
    Eda,
    #[serde(rename = "ssl")]
    Ssl,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Finetune,
        Method::Embedhalluc,
        Method::EmbedhallucLabelcalib,
        Method::Eda,
        Method::Ssl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Finetune => "finetune",
            Method::Embedhalluc => "embedhalluc",
            Method::EmbedhallucLabelcalib => "embedhalluc+labelcalib",
            Method::Eda => "eda",
            Method::Ssl => "ssl",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

/// What checkpoint selection maximizes on the validation split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMetric {
    /// The task's own metric (Matthews, F1 or accuracy).
    #[default]
    Task,
    /// Plain accuracy on every task.
    Accuracy,
}

/// Either a synthetic task or a TSV file with its schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub synthetic: Option<SyntheticSpec>,
    /// Corpus seed for synthetic tasks; splits use the experiment seeds.
    pub data_seed: u64,
    pub path: Option<PathBuf>,
    pub schema: Option<Schema>,
    pub synonyms: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub lrs: Vec<f64>,
    pub batches: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            lrs: vec![1e-5, 5e-6, 1e-6],
            batches: vec![4, 6, 8],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskConfig,
    pub method: Method,
    pub seeds: Vec<u64>,
    pub learner: LearnerConfig,
    pub finetune: FinetuneConfig,
    /// Auxiliary-batch grid (hallucination, EDA or pseudo-label batches).
    pub grid: GridConfig,
    /// Baseline learning rates; more than one runs a validation sweep.
    pub baseline_lrs: Vec<f64>,
    /// Multiplies every fine-tuning learning rate, including the grid.
    pub lr_scale: f64,
    pub generator: GeneratorConfig,
    pub critic: CriticConfig,
    pub halluc_train: HallucTrainConfig,
    pub eda: EdaParams,
    pub split: SplitSizes,
    pub selection: SelectionMetric,
    pub threads: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: TaskConfig {
                synthetic: Some(SyntheticSpec::default()),
                ..Default::default()
            },
            method: Method::Finetune,
            seeds: vec![1, 2, 3, 4, 5],
            learner: LearnerConfig::default(),
            finetune: FinetuneConfig::default(),
            grid: GridConfig::default(),
            baseline_lrs: vec![1e-5],
            lr_scale: 100.0,
            generator: GeneratorConfig::default(),
            critic: CriticConfig::default(),
            halluc_train: HallucTrainConfig::default(),
            eda: EdaParams::default(),
            split: SplitSizes::default(),
            selection: SelectionMetric::Task,
            threads: 1,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        // Task files resolve relative to the config file.
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.task.path, &mut cfg.task.synonyms].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.task.synthetic, &self.task.path) {
            (Some(_), None) => {}
            (None, Some(_)) if self.task.schema.is_some() => {}
            (None, Some(_)) => return Err(Error::Config("task.path needs a task.schema".into())),
            _ => return Err(Error::Config("set exactly one of task.synthetic and task.path".into())),
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if !(self.lr_scale > 0.0) {
            return Err(Error::Config("lr_scale must be positive".into()));
        }
        if self.baseline_lrs.is_empty() || self.baseline_lrs.iter().any(|lr| !(*lr > 0.0)) {
            return Err(Error::Config("baseline_lrs must be nonempty and positive".into()));
        }
        self.finetune.validate()?;
        match self.method {
            Method::Finetune => {}
            Method::Embedhalluc | Method::EmbedhallucLabelcalib => {
                self.halluc_train.validate()?;
                self.check_grid()?;
            }
            Method::Eda => {
                self.eda.validate()?;
                self.check_grid()?;
                if self.task.path.is_some() && self.task.synonyms.is_none() {
                    return Err(Error::Config("eda on a file task needs task.synonyms".into()));
                }
            }
            Method::Ssl => {
                self.check_grid()?;
                if self.split.pool == 0 {
                    log::warn!("ssl with an empty pool reduces to plain fine-tuning");
                }
            }
        }
        Ok(())
    }

    fn check_grid(&self) -> Result<()> {
        if self.grid.lrs.is_empty() || self.grid.batches.is_empty() {
            return Err(Error::Config("grid.lrs and grid.batches must be nonempty".into()));
        }
        if self.grid.lrs.iter().any(|lr| !(*lr > 0.0)) {
            return Err(Error::Config("grid learning rates must be positive".into()));
        }
        Ok(())
    }
}

/// A loaded task: dataset, vocabulary and synonym table.
#[derive(Debug, Clone)]
pub struct LoadedTask {
    pub dataset: TaskDataset,
    pub vocab: Vocab,
    pub synonyms: SynonymTable,
}

pub fn load_task(task: &TaskConfig) -> Result<LoadedTask> {
    if let Some(spec) = &task.synthetic {
        let t = synthetic_task(spec, task.data_seed)?;
        return Ok(LoadedTask {
            dataset: t.dataset,
            vocab: t.vocab,
            synonyms: t.synonyms,
        });
    }
    let path = task.path.as_ref().ok_or_else(|| Error::Config("task has no source".into()))?;
    let schema = task.schema.as_ref().ok_or_else(|| Error::Config("task.path needs a task.schema".into()))?;
    let dataset = dataio::load_dataset(path, schema)?;
    dataset.validate()?;
    let synonyms = match &task.synonyms {
        Some(p) => SynonymTable::load(p)?,
        None => SynonymTable::default(),
    };
    let vocab = Vocab::from_examples(&dataset.examples);
    Ok(LoadedTask {
        dataset,
        vocab,
        synonyms,
    })
}

/// Failures that mark one seed as failed rather than aborting the run.
fn is_seed_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::Training(_) | Error::Distribution(_) | Error::DegenerateBatch(_) | Error::Capability(_)
    )
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let task = load_task(&cfg.task)?;
    run_on_task(cfg, &task)
}

/// Runs every seed of `cfg` on an already loaded task.
pub fn run_on_task(cfg: &ExperimentConfig, task: &LoadedTask) -> Result<RunReport> {
    cfg.validate()?;
    let threads = cfg.threads.clamp(1, cfg.seeds.len());
    let results: Mutex<Vec<(usize, Result<SeedResult>)>> = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(&seed) = cfg.seeds.get(i) else { break };
        let r = run_seed(cfg, task, seed);
        results.lock().expect("results lock").push((i, r));
    };
    if threads == 1 {
        worker();
    } else {
        std::thread::scope(|s| {
            for _ in 0..threads {
                s.spawn(worker);
            }
        });
    }
    let mut results = results.into_inner().expect("results lock");
    results.sort_by_key(|(i, _)| *i);

    let mut seeds = Vec::with_capacity(results.len());
    for ((_, r), &seed) in results.into_iter().zip(&cfg.seeds) {
        match r {
            Ok(s) => seeds.push(s),
            Err(e) if is_seed_failure(&e) => {
                log::error!("seed {seed} failed: {e}");
                seeds.push(SeedResult {
                    seed,
                    status: SeedStatus::Failed(e.to_string()),
                    test_score: None,
                    best_cell: None,
                    selected_step: None,
                    grid: Vec::new(),
                    phase_seconds: BTreeMap::new(),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let report = RunReport::assemble(task.dataset.name.clone(), cfg.method, task.dataset.metric, seeds)?;
    if let Some(dir) = &cfg.out_dir {
        emit_report(&report, ReportFormat::Json, &dir.join("report.json"))?;
        emit_report(&report, ReportFormat::Csv, &dir.join("report.csv"))?;
        emit_report(&report, ReportFormat::Table, &dir.join("report.txt"))?;
    }
    Ok(report)
}

/// Learner shape for a task: vocabulary and class count come from the data.
pub fn learner_config_for(cfg: &LearnerConfig, vocab: &Vocab, num_classes: usize) -> LearnerConfig {
    LearnerConfig {
        vocab_size: vocab.len(),
        num_classes,
        pad_id: PAD,
        ..cfg.clone()
    }
}

/// Generator and critic shapes matched to the learner.
pub fn gan_configs_for(cfg: &ExperimentConfig, learner: &LearnerConfig) -> (GeneratorConfig, CriticConfig) {
    let gen = GeneratorConfig {
        num_classes: learner.num_classes,
        output_len: learner.max_len,
        embed_dim: learner.embed_dim,
        ..cfg.generator.clone()
    };
    let critic = CriticConfig {
        input_width: gen.output_width(),
        num_classes: gen.num_classes,
        ..cfg.critic.clone()
    };
    (gen, critic)
}

struct SeedRun<'a> {
    cfg: &'a ExperimentConfig,
    init: LearnerModel,
    train: Vec<Labeled>,
    validation: Vec<Labeled>,
    metric: MetricKind,
    phases: BTreeMap<String, f64>,
    out: Option<PathBuf>,
}

impl SeedRun<'_> {
    fn selection(&self) -> Selection<'_> {
        Selection {
            validation: &self.validation,
            metric: self.metric,
        }
    }

    fn scaled(&self, lr: f64) -> f64 {
        lr * self.cfg.lr_scale
    }

    fn real_cfg(&self, real_lr: f64) -> FinetuneConfig {
        FinetuneConfig {
            real_lr: self.scaled(real_lr),
            halluc_lr: self.scaled(self.cfg.finetune.halluc_lr),
            ..self.cfg.finetune.clone()
        }
    }

    fn cell_cfg(&self, lr: f64, batch: usize) -> FinetuneConfig {
        FinetuneConfig {
            halluc_lr: lr,
            halluc_batch: batch,
            ..self.real_cfg(self.cfg.finetune.real_lr)
        }
    }

    fn timed<T>(&mut self, phase: &str, f: impl FnOnce(&Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let r = f(self);
        *self.phases.entry(phase.to_string()).or_default() += start.elapsed().as_secs_f64();
        r
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        if let Some(dir) = &self.out {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }

    /// Grid over auxiliary LR and batch, each cell validation-selected.
    fn aux_grid<F>(&mut self, mut train_cell: F) -> Result<GridOutcome<FinetuneOutcome>>
    where
        F: FnMut(&Self, FinetuneConfig) -> Result<FinetuneOutcome>,
    {
        let lrs: Vec<f64> = self.cfg.grid.lrs.iter().map(|&lr| self.scaled(lr)).collect();
        let batches = self.cfg.grid.batches.clone();
        self.timed("students", |run| {
            grid_search(&lrs, &batches, |lr, batch| {
                let out = train_cell(run, run.cell_cfg(lr, batch))?;
                Ok((out.best_val.unwrap_or(f64::NEG_INFINITY), out))
            })
        })
    }
}

fn run_seed(cfg: &ExperimentConfig, task: &LoadedTask, seed: u64) -> Result<SeedResult> {
    let start = Instant::now();
    let split = sample_few_shot(&task.dataset, cfg.split, child_seed(seed, "data"))?;
    let learner_cfg = learner_config_for(&cfg.learner, &task.vocab, task.dataset.num_classes());
    let init = LearnerModel::new(learner_cfg.clone(), child_seed(seed, "teacher"))?;
    let metric = match cfg.selection {
        SelectionMetric::Task => task.dataset.metric,
        SelectionMetric::Accuracy => MetricKind::Accuracy,
    };
    let mut run = SeedRun {
        cfg,
        init,
        train: encode(&split.train, &task.vocab),
        validation: encode(&split.validation, &task.vocab),
        metric,
        phases: BTreeMap::new(),
        out: cfg.out_dir.as_ref().map(|d| d.join(format!("seed-{seed}"))),
    };
    run.phases.insert("split".into(), start.elapsed().as_secs_f64());
    let teacher_seed = child_seed(seed, "teacher");
    let student_seed = child_seed(seed, "student");

    let (selected, grid): (FinetuneOutcome, Option<GridOutcome<()>>) = match cfg.method {
        Method::Finetune => {
            let lrs = cfg.baseline_lrs.clone();
            let g = run.timed("teacher", |run| {
                grid_search(&lrs, &[cfg.finetune.real_batch], |lr, _| {
                    let out = finetune_with_aux(
                        run.init.clone(),
                        &run.train,
                        None,
                        &run.real_cfg(lr),
                        teacher_seed,
                        Some(run.selection()),
                    )?;
                    Ok((out.best_val.unwrap_or(f64::NEG_INFINITY), out))
                })
            })?;
            let cells = (lrs.len() > 1).then(|| strip(&g));
            (g.best_value, cells)
        }
        Method::Embedhalluc | Method::EmbedhallucLabelcalib => {
            let (gcfg, ccfg) = gan_configs_for(cfg, &learner_cfg);
            let trained = run.timed("hallucinator", |run| {
                let real = collect_real_embeddings(&run.init, &run.train, learner_cfg.max_len)?;
                train_hallucinator(&real.samples, &gcfg, &ccfg, &cfg.halluc_train, child_seed(seed, "halluc"))
            })?;
            run.write("loss_history.csv", &history_csv(&trained.history))?;
            if let Some(dir) = &run.out {
                checkpoint::save_generator(&dir.join("generator"), &trained.generator)?;
            }
            let teacher = run.timed("teacher", |run| {
                finetune_teacher(
                    run.init.clone(),
                    &run.train,
                    &run.real_cfg(cfg.finetune.real_lr),
                    teacher_seed,
                    Some(run.selection()),
                )
            })?;
            let calibrate = cfg.method == Method::EmbedhallucLabelcalib;
            let g = run.aux_grid(|run, cell| {
                let cell = FinetuneConfig {
                    label_calibration: calibrate,
                    ..cell
                };
                finetune_student(
                    run.init.clone(),
                    &teacher.model,
                    &run.train,
                    Some(&trained.generator),
                    &cell,
                    student_seed,
                    Some(run.selection()),
                )
            })?;
            let cells = strip(&g);
            (g.best_value, Some(cells))
        }
        Method::Eda => {
            let augmented = eda_augment_set(&split.train, &cfg.eda, &task.synonyms, &task.vocab, child_seed(seed, "eda"))?;
            let classes = learner_cfg.num_classes;
            let g = run.aux_grid(|run, cell| {
                let mut source = LabeledTokenSource::new(augmented.clone(), classes, child_seed(seed, "eda"));
                finetune_with_aux(run.init.clone(), &run.train, Some(&mut source), &cell, student_seed, Some(run.selection()))
            })?;
            let cells = strip(&g);
            (g.best_value, Some(cells))
        }
        Method::Ssl => {
            let pool: Vec<Vec<usize>> = split.pool.iter().map(|e| task.vocab.encode_example(e)).collect();
            let train_set: std::collections::HashSet<&Vec<usize>> = run.train.iter().map(|(t, _)| t).collect();
            let shared = pool.iter().filter(|s| train_set.contains(s)).count();
            if shared > 0 {
                return Err(Error::Contamination(shared));
            }
            if pool.is_empty() {
                let out = run.timed("teacher", |run| {
                    finetune_with_aux(
                        run.init.clone(),
                        &run.train,
                        None,
                        &run.real_cfg(cfg.finetune.real_lr),
                        student_seed,
                        Some(run.selection()),
                    )
                })?;
                (out, None)
            } else {
                let phase1 = run.timed("teacher", |run| {
                    finetune_with_aux(
                        run.init.clone(),
                        &run.train,
                        None,
                        &run.real_cfg(cfg.finetune.real_lr),
                        student_seed,
                        Some(run.selection()),
                    )
                })?;
                let labels = phase1.model.predict(&pool)?;
                let items: Vec<Labeled> = pool.into_iter().zip(labels).collect();
                let classes = learner_cfg.num_classes;
                let g = run.aux_grid(|run, cell| {
                    let mut source = LabeledTokenSource::new(items.clone(), classes, student_seed);
                    finetune_with_aux(run.init.clone(), &run.train, Some(&mut source), &cell, student_seed, Some(run.selection()))
                })?;
                let cells = strip(&g);
                (g.best_value, Some(cells))
            }
        }
    };

    run.write("step_log.csv", &step_log_csv(&selected.log))?;
    if let Some(dir) = &run.out {
        checkpoint::save_learner(&dir.join("model"), &selected.model)?;
    }
    let test = encode(&split.test, &task.vocab);
    let test_score = run.timed("evaluate", |_| evaluate(&selected.model, &test, task.dataset.metric))?;
    Ok(SeedResult {
        seed,
        status: SeedStatus::Ok,
        test_score: Some(100.0 * test_score),
        best_cell: grid.as_ref().map(|g| g.best),
        selected_step: selected.selected_step,
        grid: grid.map(|g| g.cells).unwrap_or_default(),
        phase_seconds: run.phases,
    })
}

fn strip<T>(g: &GridOutcome<T>) -> GridOutcome<()> {
    GridOutcome {
        best: g.best,
        best_value: (),
        cells: g.cells.clone(),
    }
}

/// EDA variants of every sentence. Pair tasks augment both sides
/// independently; empty sentences are skipped.
pub fn eda_augment_examples(
    examples: &[Example],
    params: &EdaParams,
    table: &SynonymTable,
    seed: u64,
) -> Result<Vec<Example>> {
    let mut rng = rng::stream(seed, "eda");
    let mut stats = EdaStats::default();
    let words = |t: &str| -> Vec<String> { t.split_whitespace().map(str::to_lowercase).collect() };
    let mut out = Vec::new();
    for e in examples {
        let first = words(&e.text);
        if first.is_empty() {
            continue;
        }
        let variants = eda_variants(&first, params, table, &mut stats, &mut rng)?;
        let seconds = match &e.text2 {
            Some(t2) if !words(t2).is_empty() => Some(eda_variants(&words(t2), params, table, &mut stats, &mut rng)?),
            _ => None,
        };
        for (i, v) in variants.into_iter().enumerate() {
            out.push(Example {
                text: v.join(" "),
                text2: match &seconds {
                    Some(s) => Some(s[i].join(" ")),
                    None => e.text2.clone(),
                },
                label: e.label,
            });
        }
    }
    if stats.noop_replacements > 0 || stats.insertion_fallbacks > 0 {
        log::info!(
            "eda: {} replacement(s) without synonym hits, {} insertion fallback(s)",
            stats.noop_replacements,
            stats.insertion_fallbacks
        );
    }
    Ok(out)
}

/// EDA variants of every training sentence, tokenized.
pub fn eda_augment_set(
    train: &[Example],
    params: &EdaParams,
    table: &SynonymTable,
    vocab: &Vocab,
    seed: u64,
) -> Result<Vec<Labeled>> {
    Ok(encode(&eda_augment_examples(train, params, table, seed)?, vocab))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ExperimentConfig::from_toml("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml("seeds = []"), Err(Error::Config(_))));
        let both = "[task]\npath = \"x.tsv\"\n[task.synthetic]\nsize = 10\n";
        assert!(matches!(ExperimentConfig::from_toml(both), Err(Error::Config(_))));
        let eda_file = "method = \"eda\"\n[task]\npath = \"x.tsv\"\n[task.schema]\nname = \"x\"\nlabels = [\"a\"]\n";
        assert!(matches!(ExperimentConfig::from_toml(eda_file), Err(Error::Config(_))));
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        let cfg = ExperimentConfig::from_toml("method = \"embedhalluc+labelcalib\"").unwrap();
        assert_eq!(cfg.method, Method::EmbedhallucLabelcalib);
    }
}
