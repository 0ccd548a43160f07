use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Critic, CriticConfig, Generator, GeneratorConfig, HallucTrainConfig};
use crate::autodiff::{input_gradient, Adam, AdamConfig, Graph, Var};
use crate::error::{Error, Result};
use crate::nn::NormMode;
use crate::rng;
use crate::tensor::Tensor;

/// Floor inside `‖g‖ = √(Σg² + floor)` so the norm stays differentiable at 0.
const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub critic_loss: f64,
    pub gen_loss: f64,
    pub wasserstein_estimate: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedHallucinator {
    pub generator: Generator,
    pub critic: Critic,
    pub history: Vec<EpochStats>,
}

/// `λ·mean_i (‖∇ₓ critic(x̂ᵢ)‖₂ − 1)²` over random interpolates
/// `x̂ᵢ = εᵢ·realᵢ + (1−εᵢ)·fakeᵢ`, `εᵢ ~ U(0,1)`.
///
/// The result stays differentiable with respect to whatever parameters
/// `critic` closes over.
pub fn gradient_penalty<'g, F, R>(
    graph: &'g Graph,
    critic: F,
    real: &Tensor,
    fake: &Tensor,
    lambda: f64,
    rng: &mut R,
) -> Result<Var<'g>>
where
    F: FnOnce(Var<'g>) -> Result<Var<'g>>,
    R: Rng + ?Sized,
{
    if real.shape() != fake.shape() {
        return Err(Error::dim("gradient_penalty", real.shape(), fake.shape()));
    }
    let cols = real.cols();
    let mut mixed = real.clone();
    for r in 0..real.rows() {
        let eps: f64 = rng.random();
        let (a, b) = (real.row(r), fake.row(r));
        for (j, m) in mixed.data_mut()[r * cols..(r + 1) * cols].iter_mut().enumerate() {
            *m = eps * a[j] + (1.0 - eps) * b[j];
        }
    }
    let (_, grad) = input_gradient(graph, &mixed, critic)?;
    let norms = grad.square()?.sum_cols()?.offset(NORM_FLOOR).sqrt();
    Ok(norms.offset(-1.0).square()?.mean_all().scale(lambda))
}

/// Trains the conditional WGAN-GP on real `(L×E embedding, class)` pairs.
///
/// One epoch is `⌈N / batch⌉` generator updates, each preceded by
/// `n_critic` critic updates on fresh real batches drawn from a reshuffled
/// cycle over the data. The recorded Wasserstein estimate is the epoch mean
/// of `mean critic(real) − mean critic(fake)` over critic updates.
pub fn train_hallucinator(
    real: &[(Tensor, usize)],
    gcfg: &GeneratorConfig,
    ccfg: &CriticConfig,
    tcfg: &HallucTrainConfig,
    seed: u64,
) -> Result<TrainedHallucinator> {
    gcfg.validate()?;
    ccfg.validate()?;
    tcfg.validate()?;
    if ccfg.input_width != gcfg.output_width() || ccfg.num_classes != gcfg.num_classes {
        return Err(Error::Config(format!(
            "critic expects width {} / {} classes, generator emits {} / {}",
            ccfg.input_width,
            ccfg.num_classes,
            gcfg.output_width(),
            gcfg.num_classes
        )));
    }

    let present: BTreeSet<usize> = real.iter().map(|(_, c)| *c).collect();
    let missing: Vec<usize> = (0..gcfg.num_classes).filter(|c| !present.contains(c)).collect();
    if !missing.is_empty() {
        return Err(Error::Coverage(missing));
    }
    let width = gcfg.output_width();
    let mut flat = Vec::with_capacity(real.len() * width);
    let mut labels = Vec::with_capacity(real.len());
    for (emb, c) in real {
        if emb.shape() != [gcfg.output_len, gcfg.embed_dim] {
            return Err(Error::dim(
                "train_hallucinator",
                emb.shape(),
                &[gcfg.output_len, gcfg.embed_dim],
            ));
        }
        if *c >= gcfg.num_classes {
            return Err(Error::Index {
                what: "class",
                index: *c,
                bound: gcfg.num_classes,
            });
        }
        flat.extend_from_slice(emb.data());
        labels.push(*c);
    }
    let data = Tensor::matrix(real.len(), width, flat)?;

    let mut generator = Generator::new(gcfg.clone(), rng::child_seed(seed, "generator"))?;
    let mut critic = Critic::new(ccfg.clone(), rng::child_seed(seed, "critic"))?;
    let mut rng = rng::stream(seed, "halluc-train");
    let adam = AdamConfig {
        lr: tcfg.lr,
        beta1: tcfg.beta1,
        beta2: tcfg.beta2,
        eps: 1e-8,
    };
    let mut gen_opt = Adam::new(adam);
    let mut critic_opt = Adam::new(adam);

    let batch = tcfg.batch_size.min(real.len());
    let iters_per_epoch = real.len().div_ceil(batch);
    let mut batches = BatchCycle::new(real.len(), batch);
    let mut history = Vec::with_capacity(tcfg.epochs);

    for epoch in 0..tcfg.epochs {
        let mut critic_sum = 0.0;
        let mut w_sum = 0.0;
        let mut gen_sum = 0.0;
        for _ in 0..iters_per_epoch {
            for _ in 0..tcfg.n_critic {
                let idx = batches.next(&mut rng);
                let (c_loss, w_est) =
                    critic_step(&mut generator, &mut critic, &mut critic_opt, &data, &labels, &idx, tcfg.gp_weight, &mut rng)?;
                critic_sum += c_loss;
                w_sum += w_est;
            }
            let idx = batches.next(&mut rng);
            let batch_labels: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let real_batch = gather_rows(&data, &idx)?;
            gen_sum += generator_step(&mut generator, &critic, &mut gen_opt, &real_batch, &batch_labels, &mut rng)?;
        }
        let critic_steps = (iters_per_epoch * tcfg.n_critic) as f64;
        let stats = EpochStats {
            epoch,
            critic_loss: critic_sum / critic_steps,
            gen_loss: gen_sum / iters_per_epoch as f64,
            wasserstein_estimate: w_sum / critic_steps,
        };
        if !(stats.critic_loss.is_finite() && stats.gen_loss.is_finite()) {
            return Err(Error::Training(format!("non-finite GAN loss at epoch {epoch}: {stats:?}")));
        }
        log::debug!(
            "halluc epoch {epoch}: critic {:.4} gen {:.4} W {:.4}",
            stats.critic_loss,
            stats.gen_loss,
            stats.wasserstein_estimate
        );
        history.push(stats);
    }

    Ok(TrainedHallucinator {
        generator,
        critic,
        history,
    })
}

#[allow(clippy::too_many_arguments)]
fn critic_step<R: Rng + ?Sized>(
    generator: &mut Generator,
    critic: &mut Critic,
    opt: &mut Adam,
    data: &Tensor,
    labels: &[usize],
    idx: &[usize],
    gp_weight: f64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let real = gather_rows(data, idx)?;
    let batch_labels: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
    let noise = generator.sample_noise(idx.len(), rng);

    let g = Graph::new();
    let pg = generator.params().bind(&g, false);
    let pc = critic.params().bind(&g, true);
    let fake = generator.forward(&pg, g.constant(noise), &batch_labels, NormMode::Train)?;
    let fake_value = (*fake.value()).clone();

    let b = idx.len();
    let joint_labels: Vec<usize> = batch_labels.iter().chain(&batch_labels).copied().collect();
    let scores = critic.forward(
        &pc,
        Var::concat_rows(&[g.constant(real.clone()), fake])?,
        &joint_labels,
        NormMode::Train,
    )?;
    let d_real = scores.slice_rows(0, b)?.mean_all();
    let d_fake = scores.slice_rows(b, b)?.mean_all();
    let gp = gradient_penalty(
        &g,
        |x| critic.forward(&pc, x, &batch_labels, NormMode::Eval),
        &real,
        &fake_value,
        gp_weight,
        rng,
    )?;
    let loss = d_fake.sub(d_real)?.add(gp)?;
    let w_est = d_real.value().item() - d_fake.value().item();
    let loss_value = loss.value().item();

    let grads = pc.grads(loss)?;
    let critic_updates = pc.take_updates();
    let gen_updates = pg.take_updates();
    drop(pc);
    drop(pg);
    critic.params_mut().adam_step(&grads, opt)?;
    critic.params_mut().apply_updates(critic_updates);
    generator.params_mut().apply_updates(gen_updates);
    Ok((loss_value, w_est))
}

fn generator_step<R: Rng + ?Sized>(
    generator: &mut Generator,
    critic: &Critic,
    opt: &mut Adam,
    real: &Tensor,
    labels: &[usize],
    rng: &mut R,
) -> Result<f64> {
    let b = labels.len();
    let noise = generator.sample_noise(b, rng);
    let g = Graph::new();
    let pg = generator.params().bind(&g, true);
    let pc = critic.params().bind(&g, false);
    let fake = generator.forward(&pg, g.constant(noise), labels, NormMode::Train)?;
    let joint_labels: Vec<usize> = labels.iter().chain(labels).copied().collect();
    let scores = critic.forward(
        &pc,
        Var::concat_rows(&[g.constant(real.clone()), fake])?,
        &joint_labels,
        NormMode::Train,
    )?;
    let loss = scores.slice_rows(b, b)?.mean_all().scale(-1.0);
    let value = loss.value().item();
    let grads = pg.grads(loss)?;
    let updates = pg.take_updates();
    drop(pg);
    generator.params_mut().adam_step(&grads, opt)?;
    generator.params_mut().apply_updates(updates);
    Ok(value)
}

fn gather_rows(data: &Tensor, idx: &[usize]) -> Result<Tensor> {
    let cols = data.cols();
    let mut out = Vec::with_capacity(idx.len() * cols);
    for &i in idx {
        out.extend_from_slice(data.row(i));
    }
    Tensor::matrix(idx.len(), cols, out)
}

/// Endless stream of batches over a reshuffled permutation.
pub(crate) struct BatchCycle {
    order: Vec<usize>,
    pos: usize,
    batch: usize,
}

impl BatchCycle {
    pub(crate) fn new(n: usize, batch: usize) -> Self {
        BatchCycle {
            order: (0..n).collect(),
            pos: n,
            batch,
        }
    }

    pub(crate) fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.batch);
        while out.len() < self.batch {
            if self.pos == self.order.len() {
                self.order.shuffle(rng);
                self.pos = 0;
            }
            let take = (self.batch - out.len()).min(self.order.len() - self.pos);
            out.extend_from_slice(&self.order[self.pos..self.pos + take]);
            self.pos += take;
        }
        out
    }
}

/// Loss history as CSV: `epoch,critic_loss,gen_loss,wasserstein_estimate`.
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,critic_loss,gen_loss,wasserstein_estimate\n");
    for s in history {
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.epoch, s.critic_loss, s.gen_loss, s.wasserstein_estimate
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hallucinator::NormKind;
    use crate::nn::{Linear, ParamStore};

    #[test]
    fn linear_critic_penalty_is_analytic() {
        // ∇ₓ(w·x + b) = w = (3, 4) everywhere ⇒ λ(‖w‖ − 1)² = 100·16
        let mut rng = rng::stream(1, "gp");
        let real = Tensor::randn(&[6, 2], 1.0, &mut rng);
        let fake = Tensor::randn(&[6, 2], 3.0, &mut rng);
        let g = Graph::new();
        let w = g.param(Tensor::from_rows(&[vec![3.0], vec![4.0]]).unwrap());
        let b = g.param(Tensor::scalar(-2.0));
        let gp = gradient_penalty(
            &g,
            |x| x.matmul(w)?.add(b.expand(&[6, 1])?),
            &real,
            &fake,
            100.0,
            &mut rng,
        )
        .unwrap();
        assert!((gp.value().item() - 1600.0).abs() < 1e-9);
    }

    #[test]
    fn unit_gradient_critic_has_zero_penalty() {
        let mut rng = rng::stream(2, "gp");
        let real = Tensor::randn(&[4, 3], 1.0, &mut rng);
        let fake = Tensor::randn(&[4, 3], 1.0, &mut rng);
        let g = Graph::new();
        let pick = g.constant(Tensor::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]).unwrap());
        let gp = gradient_penalty(&g, |x| x.matmul(pick), &real, &fake, 100.0, &mut rng).unwrap();
        assert!(gp.value().item().abs() < 1e-9);
    }

    #[test]
    fn penalty_shape_mismatch() {
        let g = Graph::new();
        let mut rng = rng::stream(0, "gp");
        let err = gradient_penalty(
            &g,
            |x| Ok(x),
            &Tensor::zeros(&[2, 3]),
            &Tensor::zeros(&[3, 3]),
            1.0,
            &mut rng,
        );
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }

    #[test]
    fn zero_weight_penalty_contributes_no_gradient() {
        let mut rng = rng::stream(3, "gp");
        let mut store = ParamStore::new();
        let l1 = Linear::new(&mut store, "a", 4, 5, &mut rng);
        let l2 = Linear::new(&mut store, "b", 5, 1, &mut rng);
        let real = Tensor::randn(&[3, 4], 1.0, &mut rng);
        let fake = Tensor::randn(&[3, 4], 1.0, &mut rng);
        let g = Graph::new();
        let p = store.bind(&g, true);
        let gp = gradient_penalty(
            &g,
            |x| l2.forward(&p, l1.forward(&p, x)?.leaky_relu(0.2)),
            &real,
            &fake,
            0.0,
            &mut rng,
        )
        .unwrap();
        for grad in p.grads(gp).unwrap().into_iter().flatten() {
            assert!(grad.data().iter().all(|&v| v == 0.0));
        }
    }

    fn tiny_configs() -> (GeneratorConfig, CriticConfig) {
        let g = GeneratorConfig {
            noise_dim: 4,
            num_classes: 2,
            hidden_dims: vec![8, 8, 8, 8],
            output_len: 2,
            embed_dim: 3,
            leaky_slope: 0.2,
            conditioning: Default::default(),
        };
        let c = CriticConfig::for_generator(&g, vec![8, 8, 8]);
        (g, c)
    }

    fn tiny_data(n: usize) -> Vec<(Tensor, usize)> {
        let mut rng = rng::stream(0, "data");
        (0..n)
            .map(|i| (Tensor::randn(&[2, 3], 1.0, &mut rng), i % 2))
            .collect()
    }

    #[test]
    fn zero_epochs_returns_initialized_networks() {
        let (g, c) = tiny_configs();
        let tcfg = HallucTrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let trained = train_hallucinator(&tiny_data(8), &g, &c, &tcfg, 5).unwrap();
        assert!(trained.history.is_empty());
        let fresh = Generator::new(g, rng::child_seed(5, "generator")).unwrap();
        assert_eq!(trained.generator.params(), fresh.params());
    }

    #[test]
    fn missing_class_is_a_coverage_error() {
        let (g, c) = tiny_configs();
        let data: Vec<_> = tiny_data(6).into_iter().filter(|(_, c)| *c == 0).collect();
        let err = train_hallucinator(&data, &g, &c, &HallucTrainConfig::default(), 0).unwrap_err();
        assert!(matches!(err, Error::Coverage(ref m) if m == &vec![1]));
    }

    #[test]
    fn short_run_is_finite_and_deterministic() {
        let (g, mut c) = tiny_configs();
        c.norm_kind = NormKind::BatchNorm;
        let tcfg = HallucTrainConfig {
            epochs: 3,
            batch_size: 4,
            n_critic: 2,
            ..Default::default()
        };
        let a = train_hallucinator(&tiny_data(10), &g, &c, &tcfg, 11).unwrap();
        let b = train_hallucinator(&tiny_data(10), &g, &c, &tcfg, 11).unwrap();
        assert_eq!(a.history.len(), 3);
        assert_eq!(a.history, b.history);
        assert_eq!(a.generator.params(), b.generator.params());
        assert!(a.history.iter().all(|s| s.critic_loss.is_finite() && s.gen_loss.is_finite()));
        let csv = history_csv(&a.history);
        assert!(csv.starts_with("epoch,critic_loss,gen_loss,wasserstein_estimate\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn batch_cycle_covers_every_index_each_pass() {
        let mut rng = rng::stream(0, "cycle");
        let mut cycle = BatchCycle::new(5, 2);
        let mut seen: Vec<usize> = (0..5).flat_map(|_| cycle.next(&mut rng)).collect();
        seen.truncate(10);
        let mut first: Vec<usize> = seen[..5].to_vec();
        first.sort_unstable();
        assert_eq!(first, vec![0, 1, 2, 3, 4]);
    }
}
