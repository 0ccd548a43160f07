use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{stack_rows, FinetuneConfig, Labeled, LearnerModel, LossCombination};
use crate::autodiff::{kl_divergence, softmax_cross_entropy, Adam, AdamConfig, Graph, Var};
use crate::error::{Error, Result};
use crate::hallucinator::{BatchCycle, Generator, HallucSample};
use crate::metrics::MetricKind;
use crate::nn::Grads;
use crate::rng::{self, Rng};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub l_real: f64,
    pub l_halluc: Option<f64>,
    pub val_metric: Option<f64>,
}

/// Validation data for checkpoint selection at every `eval_interval` steps.
#[derive(Debug, Clone, Copy)]
pub struct Selection<'a> {
    pub validation: &'a [Labeled],
    pub metric: MetricKind,
}

#[derive(Debug, Clone)]
pub struct FinetuneOutcome {
    /// Final model, or the selected checkpoint when selection was requested.
    pub model: LearnerModel,
    pub log: Vec<StepRecord>,
    pub selected_step: Option<usize>,
    pub best_val: Option<f64>,
    /// Mean wall time of one training iteration, excluding evaluation.
    pub step_seconds: f64,
}

/// Inputs and target distributions for one auxiliary step.
#[derive(Debug, Clone)]
pub enum AuxBatch {
    Embeddings { inputs: Vec<Tensor>, targets: Tensor },
    Tokens { inputs: Vec<Vec<usize>>, targets: Tensor },
}

impl AuxBatch {
    fn len(&self) -> usize {
        match self {
            AuxBatch::Embeddings { inputs, .. } => inputs.len(),
            AuxBatch::Tokens { inputs, .. } => inputs.len(),
        }
    }
}

/// Supplies auxiliary batches to the student loop. Sources own their rng.
pub trait AuxSource {
    fn next_batch(&mut self, n: usize) -> Result<AuxBatch>;
}

/// Hallucinated embeddings with round-robin condition labels. With a
/// teacher the targets are its soft labels, otherwise one-hot.
pub struct HallucinationSource<'a> {
    generator: &'a Generator,
    teacher: Option<&'a LearnerModel>,
    rng: Rng,
    next_label: usize,
}

impl<'a> HallucinationSource<'a> {
    pub fn new(generator: &'a Generator, teacher: Option<&'a LearnerModel>, seed: u64) -> Self {
        HallucinationSource {
            generator,
            teacher,
            rng: rng::stream(seed, "halluc-sample"),
            next_label: 0,
        }
    }
}

impl AuxSource for HallucinationSource<'_> {
    fn next_batch(&mut self, n: usize) -> Result<AuxBatch> {
        let classes = self.generator.config().num_classes;
        let labels: Vec<usize> = (0..n).map(|i| (self.next_label + i) % classes).collect();
        self.next_label = (self.next_label + n) % classes;
        let inputs: Vec<Tensor> = self
            .generator
            .generate_labels(&labels, &mut self.rng)?
            .into_iter()
            .map(|s| s.embedding)
            .collect();
        let targets = match self.teacher {
            Some(teacher) => teacher.logits_embeddings(&inputs)?.softmax_rows(),
            None => crate::nn::one_hot(&labels, classes)?,
        };
        Ok(AuxBatch::Embeddings { inputs, targets })
    }
}

/// Attaches the teacher's softmax over the hallucinated embedding.
pub fn pseudo_label(teacher: &LearnerModel, sample: HallucSample) -> Result<HallucSample> {
    let probs = teacher
        .logits_embeddings(std::slice::from_ref(&sample.embedding))?
        .softmax_rows()
        .into_data();
    sample.with_soft_label(probs)
}

pub fn evaluate(model: &LearnerModel, data: &[Labeled], metric: MetricKind) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Data("evaluation set is empty".into()));
    }
    let tokens: Vec<Vec<usize>> = data.iter().map(|(t, _)| t.clone()).collect();
    let labels: Vec<usize> = data.iter().map(|(_, y)| *y).collect();
    metric.score(&model.predict(&tokens)?, &labels)
}

/// Fine-tunes on real data only. The teacher is validation-selected only
/// when `cfg.select_teacher` is set.
pub fn finetune_teacher(
    model: LearnerModel,
    train: &[Labeled],
    cfg: &FinetuneConfig,
    seed: u64,
    selection: Option<Selection<'_>>,
) -> Result<FinetuneOutcome> {
    let selection = selection.filter(|_| cfg.select_teacher);
    finetune_with_aux(model, train, None, cfg, seed, selection)
}

/// Real steps interleaved with hallucination steps. `generator` may be
/// absent only when `halluc_batch` is 0.
pub fn finetune_student(
    student: LearnerModel,
    teacher: &LearnerModel,
    train: &[Labeled],
    generator: Option<&Generator>,
    cfg: &FinetuneConfig,
    seed: u64,
    selection: Option<Selection<'_>>,
) -> Result<FinetuneOutcome> {
    if cfg.halluc_batch == 0 {
        return finetune_with_aux(student, train, None, cfg, seed, selection);
    }
    let generator = generator.ok_or_else(|| {
        Error::Dependency("student training needs a trained generator".into())
    })?;
    let (gc, lc) = (generator.config(), student.config());
    if gc.output_len != lc.max_len || gc.embed_dim != lc.embed_dim {
        return Err(Error::dim(
            "finetune_student",
            &[gc.output_len, gc.embed_dim],
            &[lc.max_len, lc.embed_dim],
        ));
    }
    if gc.num_classes != lc.num_classes || teacher.config().num_classes != lc.num_classes {
        return Err(Error::Config("generator, teacher and student class counts differ".into()));
    }
    let teacher = cfg.label_calibration.then_some(teacher);
    let mut source = HallucinationSource::new(generator, teacher, seed);
    finetune_with_aux(student, train, Some(&mut source), cfg, seed, selection)
}

/// The shared fine-tuning loop.
///
/// Real batches come from the `"sample"` stream of `seed` and real and
/// auxiliary updates use separate Adam states, so an absent source (or
/// `halluc_batch = 0`) reproduces plain fine-tuning exactly.
pub fn finetune_with_aux(
    mut model: LearnerModel,
    train: &[Labeled],
    mut aux: Option<&mut dyn AuxSource>,
    cfg: &FinetuneConfig,
    seed: u64,
    selection: Option<Selection<'_>>,
) -> Result<FinetuneOutcome> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let mut rng = rng::stream(seed, "sample");
    let mut cycle = BatchCycle::new(train.len(), cfg.real_batch);
    let mut real_opt = Adam::new(AdamConfig {
        lr: cfg.real_lr,
        ..AdamConfig::default()
    });
    let mut aux_opt = Adam::new(AdamConfig {
        lr: cfg.halluc_lr,
        ..AdamConfig::default()
    });
    let aux_batch = if aux.is_some() { cfg.halluc_batch } else { 0 };

    let mut log = Vec::with_capacity(cfg.max_steps);
    let mut best: Option<(f64, usize, crate::nn::ParamStore)> = None;
    let mut train_secs = 0.0;

    for step in 1..=cfg.max_steps {
        let started = Instant::now();
        let idx = cycle.next(&mut rng);
        let tokens: Vec<Vec<usize>> = idx.iter().map(|&i| train[i].0.clone()).collect();
        let labels: Vec<usize> = idx.iter().map(|&i| train[i].1).collect();
        let batch = match aux.as_deref_mut() {
            Some(src) if aux_batch > 0 => Some(src.next_batch(aux_batch)?),
            _ => None,
        };

        let (l_real, l_aux) = match cfg.loss_combination {
            LossCombination::TwoStep => {
                let l_real = {
                    let g = Graph::new();
                    let p = model.params().bind(&g, true);
                    let loss = softmax_cross_entropy(model.forward_tokens(&p, &tokens)?, &labels)?;
                    let grads = p.grads(loss)?;
                    let value = finite(loss, step)?;
                    apply(&mut model, grads, &mut real_opt)?;
                    value
                };
                let l_aux = match &batch {
                    Some(b) => {
                        let g = Graph::new();
                        let p = model.params().bind(&g, true);
                        let loss = aux_loss(&model, &p, b)?;
                        let grads = p.grads(loss)?;
                        let value = finite(loss, step)?;
                        apply(&mut model, grads, &mut aux_opt)?;
                        Some(value)
                    }
                    None => None,
                };
                (l_real, l_aux)
            }
            LossCombination::Summed => {
                let g = Graph::new();
                let p = model.params().bind(&g, true);
                let real = softmax_cross_entropy(model.forward_tokens(&p, &tokens)?, &labels)?;
                let l_real = finite(real, step)?;
                let (total, l_aux) = match &batch {
                    Some(b) => {
                        let extra = aux_loss(&model, &p, b)?;
                        (real.add(extra)?, Some(finite(extra, step)?))
                    }
                    None => (real, None),
                };
                let grads = p.grads(total)?;
                apply(&mut model, grads, &mut real_opt)?;
                (l_real, l_aux)
            }
        };
        train_secs += started.elapsed().as_secs_f64();

        let mut record = StepRecord {
            step,
            l_real,
            l_halluc: l_aux,
            val_metric: None,
        };
        if let Some(sel) = selection {
            if step % cfg.eval_interval == 0 {
                let score = evaluate(&model, sel.validation, sel.metric)?;
                record.val_metric = Some(score);
                if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
                    best = Some((score, step, model.params().clone()));
                }
            }
        }
        log.push(record);
    }

    let (selected_step, best_val) = match best {
        Some((score, step, params)) => {
            model.params_mut().load_matching(&params)?;
            (Some(step), Some(score))
        }
        None => (None, None),
    };
    Ok(FinetuneOutcome {
        model,
        log,
        selected_step,
        best_val,
        step_seconds: if cfg.max_steps == 0 { 0.0 } else { train_secs / cfg.max_steps as f64 },
    })
}

fn aux_loss<'g>(model: &LearnerModel, p: &crate::nn::Bound<'g>, batch: &AuxBatch) -> Result<Var<'g>> {
    let n = batch.len();
    match batch {
        AuxBatch::Embeddings { inputs, targets } => {
            let emb = p.graph().constant(stack_rows(inputs)?);
            kl_divergence(targets, model.forward_embeddings(p, emb, n)?)
        }
        AuxBatch::Tokens { inputs, targets } => kl_divergence(targets, model.forward_tokens(p, inputs)?),
    }
}

fn finite(loss: Var<'_>, step: usize) -> Result<f64> {
    let value = loss.value().item();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Training(format!("non-finite loss {value} at step {step}")))
    }
}

/// Adam step with the padding row of the token table held fixed.
fn apply(model: &mut LearnerModel, mut grads: Grads, opt: &mut Adam) -> Result<()> {
    let (table, pad, e) = (model.token_embed_id(), model.config().pad_id, model.config().embed_dim);
    if let Some(g) = grads[table].as_mut() {
        g.data_mut()[pad * e..(pad + 1) * e].fill(0.0);
    }
    model.params_mut().adam_step(&grads, opt)
}

/// Step log as CSV: `step,L_real,L_halluc,val_metric`; absent values are empty.
pub fn step_log_csv(log: &[StepRecord]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("step,L_real,L_halluc,val_metric\n");
    for r in log {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.step,
            r.l_real,
            opt(r.l_halluc),
            opt(r.val_metric)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hallucinator::GeneratorConfig;
    use crate::learner::LearnerConfig;

    fn small_model(seed: u64) -> LearnerModel {
        LearnerModel::new(
            LearnerConfig {
                vocab_size: 12,
                embed_dim: 8,
                max_len: 4,
                num_classes: 2,
                ffn_dim: 16,
                ..Default::default()
            },
            seed,
        )
        .unwrap()
    }

    fn toy() -> Vec<Labeled> {
        vec![(vec![4, 5, 6], 0), (vec![7, 8, 9], 1)]
    }

    fn cfg(steps: usize) -> FinetuneConfig {
        FinetuneConfig {
            max_steps: steps,
            real_lr: 1e-2,
            halluc_lr: 1e-2,
            real_batch: 2,
            halluc_batch: 2,
            eval_interval: steps.max(1),
            ..Default::default()
        }
    }

    #[test]
    fn zero_steps_leaves_model_unchanged() {
        let m = small_model(1);
        let out = finetune_teacher(m.clone(), &toy(), &cfg(0), 3, None).unwrap();
        assert_eq!(out.model, m);
        assert!(out.log.is_empty());
    }

    #[test]
    fn empty_train_set_is_data_error() {
        assert!(matches!(
            finetune_teacher(small_model(1), &[], &cfg(5), 3, None),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn toy_set_is_overfit_and_pad_row_stays_zero() {
        let out = finetune_teacher(small_model(1), &toy(), &cfg(200), 3, None).unwrap();
        assert!(out.log.last().unwrap().l_real < 0.05);
        let table = out.model.params().get(out.model.token_embed_id());
        assert!(table.row(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn missing_generator_is_dependency_error() {
        let m = small_model(1);
        let r = finetune_student(m.clone(), &m, &toy(), None, &cfg(4), 3, None);
        assert!(matches!(r, Err(Error::Dependency(_))));
    }

    #[test]
    fn generator_shape_must_match_learner() {
        let m = small_model(1);
        let gen = Generator::new(GeneratorConfig::desk(2), 0).unwrap();
        let r = finetune_student(m.clone(), &m, &toy(), Some(&gen), &cfg(4), 3, None);
        assert!(matches!(r, Err(Error::Dimension { .. })));
    }

    #[test]
    fn selection_only_at_eval_steps() {
        let c = FinetuneConfig {
            eval_interval: 5,
            ..cfg(20)
        };
        let data = toy();
        let sel = Selection {
            validation: &data,
            metric: MetricKind::Accuracy,
        };
        let out = finetune_with_aux(small_model(2), &data, None, &c, 1, Some(sel)).unwrap();
        assert_eq!(out.selected_step.unwrap() % 5, 0);
        for r in &out.log {
            assert_eq!(r.val_metric.is_some(), r.step % 5 == 0);
        }
    }

    #[test]
    fn step_log_csv_layout() {
        let csv = step_log_csv(&[
            StepRecord {
                step: 1,
                l_real: 0.5,
                l_halluc: None,
                val_metric: None,
            },
            StepRecord {
                step: 2,
                l_real: 0.25,
                l_halluc: Some(0.125),
                val_metric: Some(1.0),
            },
        ]);
        assert_eq!(csv, "step,L_real,L_halluc,val_metric\n1,0.5,,\n2,0.25,0.125,1\n");
    }

    #[test]
    fn zero_head_gives_uniform_soft_label() {
        let mut teacher = small_model(1);
        let head_w = teacher.params().find("head.weight").unwrap();
        let head_b = teacher.params().find("head.bias").unwrap();
        teacher.params_mut().get_mut(head_w).data_mut().fill(0.0);
        teacher.params_mut().get_mut(head_b).data_mut().fill(0.0);
        let sample = HallucSample {
            embedding: Tensor::full(&[4, 8], 0.3),
            condition_label: 1,
            soft_label: None,
        };
        let labeled = pseudo_label(&teacher, sample).unwrap();
        assert_eq!(labeled.soft_label, Some(vec![0.5, 0.5]));
    }
}
