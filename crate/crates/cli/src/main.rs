use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use embedhalluc::augment::SynonymTable;
use embedhalluc::checkpoint;
use embedhalluc::dataio::{self, encode, sample_few_shot, synthetic_task, Schema, TaskKind};
use embedhalluc::hallucinator::{collect_real_embeddings, history_csv, train_hallucinator};
use embedhalluc::harness::{
    self, eda_augment_examples, gan_configs_for, learner_config_for, load_task, parse_report_json,
    render_report, render_table, ExperimentConfig, Method, ReportFormat, RunReport,
};
use embedhalluc::learner::LearnerModel;
use embedhalluc::rng::child_seed;
use embedhalluc::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "embedhalluc", version, about = "Few-shot fine-tuning with hallucinated embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed. Replaces the config's seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[arg(long, global = true)]
    method: Option<Method>,

    /// Seeds trained concurrently.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic task (dataset, synonyms, task config) to the output directory.
    GenData,
    /// Train the hallucinator on one seed's few-shot split.
    TrainHalluc,
    /// Run the configured method on a single seed.
    Finetune,
    /// Run the configured method on every seed and aggregate.
    Run,
    /// Augment a TSV file with EDA.
    Eda {
        input: PathBuf,
        #[arg(long)]
        synonyms: Option<PathBuf>,
        /// Output TSV; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Re-render saved JSON reports.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = "table")]
        format: ReportFormat,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = Some(dir.clone());
    }
    if let Some(method) = cli.method {
        cfg.method = method;
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenData => gen_data(&load_config(cli)?, cli.seed),
        Command::TrainHalluc => train_halluc(&load_config(cli)?),
        Command::Finetune => {
            let mut cfg = load_config(cli)?;
            cfg.seeds.truncate(1);
            print_report(&harness::run_experiment(&cfg)?)
        }
        Command::Run => print_report(&harness::run_experiment(&load_config(cli)?)?),
        Command::Eda {
            input,
            synonyms,
            output,
        } => eda(cli, input, synonyms.as_deref(), output.as_deref()),
        Command::Report {
            inputs,
            format,
            output,
        } => report(inputs, *format, output.as_deref()),
    }
}

fn print_report(report: &RunReport) -> Result<()> {
    print!("{}", render_report(report, ReportFormat::Table)?);
    if !report.failed_seeds.is_empty() {
        println!("failed seeds: {:?}", report.failed_seeds);
    }
    Ok(())
}

fn gen_data(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<()> {
    let spec = cfg
        .task
        .synthetic
        .as_ref()
        .ok_or_else(|| Error::Config("gen-data needs a [task.synthetic] section".into()))?;
    let task = synthetic_task(spec, seed.unwrap_or(cfg.task.data_seed))?;
    let dir = out_dir(cfg);
    std::fs::create_dir_all(&dir)?;
    let data_path = dir.join("dataset.tsv");
    let syn_path = dir.join("synonyms.tsv");
    dataio::save_dataset(&task.dataset, &data_path)?;
    std::fs::write(&syn_path, task.synonyms.to_text())?;

    let mut file_cfg = cfg.clone();
    file_cfg.task.synthetic = None;
    file_cfg.task.path = Some(PathBuf::from("dataset.tsv"));
    file_cfg.task.synonyms = Some(PathBuf::from("synonyms.tsv"));
    file_cfg.task.schema = Some(task.dataset.schema());
    file_cfg.out_dir = None;
    std::fs::write(dir.join("task.toml"), file_cfg.to_toml()?)?;
    println!(
        "wrote {} examples to {}",
        task.dataset.examples.len(),
        data_path.display()
    );
    Ok(())
}

fn train_halluc(cfg: &ExperimentConfig) -> Result<()> {
    let seed = cfg.seeds[0];
    let task = load_task(&cfg.task)?;
    let split = sample_few_shot(&task.dataset, cfg.split, child_seed(seed, "data"))?;
    let learner_cfg = learner_config_for(&cfg.learner, &task.vocab, task.dataset.num_classes());
    let init = LearnerModel::new(learner_cfg.clone(), child_seed(seed, "teacher"))?;
    let real = collect_real_embeddings(&init, &encode(&split.train, &task.vocab), learner_cfg.max_len)?;
    let (gcfg, ccfg) = gan_configs_for(cfg, &learner_cfg);
    let trained = train_hallucinator(&real.samples, &gcfg, &ccfg, &cfg.halluc_train, child_seed(seed, "halluc"))?;

    let dir = out_dir(cfg);
    checkpoint::save_generator(&dir.join("generator"), &trained.generator)?;
    checkpoint::save_critic(&dir.join("critic"), &trained.critic)?;
    std::fs::write(dir.join("loss_history.csv"), history_csv(&trained.history))?;
    if let Some(last) = trained.history.last() {
        println!(
            "epoch {}: critic {:.4} generator {:.4} wasserstein {:.4}",
            last.epoch, last.critic_loss, last.gen_loss, last.wasserstein_estimate
        );
    }
    Ok(())
}

/// Labels are the distinct last fields in order of appearance.
fn infer_schema(text: &str, name: &str) -> Result<Schema> {
    let mut labels: Vec<String> = Vec::new();
    let mut width = None;
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split('\t').collect();
        if *width.get_or_insert(fields.len()) != fields.len() {
            return Err(Error::Parse {
                line: i + 1,
                msg: "inconsistent column count".into(),
            });
        }
        let label = fields[fields.len() - 1].trim();
        if !labels.iter().any(|l| l == label) {
            labels.push(label.to_string());
        }
    }
    let kind = match width {
        Some(2) => TaskKind::Single,
        Some(3) => TaskKind::Pair,
        Some(n) => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected 2 or 3 columns, found {n}"),
            })
        }
        None => return Err(Error::Data("input has no examples".into())),
    };
    Ok(Schema {
        name: name.to_string(),
        kind,
        labels,
        metric: Default::default(),
    })
}

fn eda(cli: &Cli, input: &Path, synonyms: Option<&Path>, output: Option<&Path>) -> Result<()> {
    let cfg = load_config(cli)?;
    let text = std::fs::read_to_string(input)?;
    let name = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut dataset = dataio::parse_tsv(&text, &infer_schema(&text, &name)?)?;
    let table = match synonyms.or(cfg.task.synonyms.as_deref()) {
        Some(p) => SynonymTable::load(p)?,
        None => {
            log::warn!("no synonym table; synonym replacement and insertion fall back to no-ops");
            SynonymTable::default()
        }
    };
    let augmented = eda_augment_examples(&dataset.examples, &cfg.eda, &table, child_seed(cfg.seeds[0], "eda"))?;
    dataset.examples.extend(augmented);
    let out = dataio::to_tsv(&dataset)?;
    match output {
        Some(p) => std::fs::write(p, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn report(inputs: &[PathBuf], format: ReportFormat, output: Option<&Path>) -> Result<()> {
    let reports = inputs
        .iter()
        .map(|p| parse_report_json(&std::fs::read_to_string(p)?))
        .collect::<Result<Vec<_>>>()?;
    let text = match (format, reports.as_slice()) {
        (ReportFormat::Table, _) => render_table(&reports),
        (_, [single]) => render_report(single, format)?,
        _ => return Err(Error::Config("json and csv output take exactly one report".into())),
    };
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
