use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Conditioning, CriticConfig, GeneratorConfig, HallucSample, NormKind};
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::nn::{one_hot, BatchNorm, Bound, Linear, NormMode, ParamStore};
use crate::rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    cfg: GeneratorConfig,
    params: ParamStore,
    blocks: Vec<(Linear, BatchNorm)>,
    head: Linear,
}

impl Generator {
    pub fn new(cfg: GeneratorConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::stream(seed, "generator-init");
        let mut params = ParamStore::new();
        let mut width = cfg.noise_dim + cfg.num_classes;
        let mut blocks = Vec::with_capacity(cfg.hidden_dims.len());
        for (i, &h) in cfg.hidden_dims.iter().enumerate() {
            let lin = Linear::new(&mut params, &format!("gen.block{i}.fc"), width, h, &mut rng);
            let bn = BatchNorm::new(&mut params, &format!("gen.block{i}.bn"), h);
            blocks.push((lin, bn));
            width = h;
        }
        let head = Linear::new(&mut params, "gen.head", width, cfg.output_width(), &mut rng);
        Ok(Generator {
            cfg,
            params,
            blocks,
            head,
        })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// `b×noise_dim` noise and `b` labels → `b×(L·E)` flat embeddings.
    pub fn forward<'g>(
        &self,
        p: &Bound<'g>,
        noise: Var<'g>,
        labels: &[usize],
        mode: NormMode,
    ) -> Result<Var<'g>> {
        let onehot = p.graph().constant(one_hot(labels, self.cfg.num_classes)?);
        let mut h = noise.concat_cols(onehot)?;
        for (lin, bn) in &self.blocks {
            h = lin.forward(p, h)?;
            h = bn.forward(p, h, mode)?;
            h = h.leaky_relu(self.cfg.leaky_slope);
        }
        self.head.forward(p, h)
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Tensor {
        let data = (0..n * self.cfg.noise_dim)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        Tensor::matrix(n, self.cfg.noise_dim, data).expect("shape")
    }

    /// Eval-mode samples for the given labels, as a `b×(L·E)` matrix.
    pub fn sample_flat<R: Rng + ?Sized>(&self, labels: &[usize], rng: &mut R) -> Result<Tensor> {
        for &c in labels {
            if c >= self.cfg.num_classes {
                return Err(Error::Index {
                    what: "class",
                    index: c,
                    bound: self.cfg.num_classes,
                });
            }
        }
        if labels.is_empty() {
            return Tensor::matrix(0, self.cfg.output_width(), vec![]);
        }
        let noise = self.sample_noise(labels.len(), rng);
        let g = Graph::new();
        let p = self.params.bind(&g, false);
        let z = g.constant(noise);
        let out = self.forward(&p, z, labels, NormMode::Eval)?;
        let value = (*out.value()).clone();
        Ok(value)
    }

    /// `n` hallucinated `L×E` embeddings conditioned on class `class`.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        class: usize,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<HallucSample>> {
        self.generate_labels(&vec![class; n], rng)
    }

    /// One sample per entry of `labels`.
    pub fn generate_labels<R: Rng + ?Sized>(
        &self,
        labels: &[usize],
        rng: &mut R,
    ) -> Result<Vec<HallucSample>> {
        let flat = self.sample_flat(labels, rng)?;
        let (l, e) = (self.cfg.output_len, self.cfg.embed_dim);
        labels
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                Ok(HallucSample {
                    embedding: Tensor::matrix(l, e, flat.row(i).to_vec())?,
                    condition_label: c,
                    soft_label: None,
                })
            })
            .collect()
    }

    pub(crate) fn from_parts(cfg: GeneratorConfig, params: ParamStore) -> Result<Self> {
        let mut built = Generator::new(cfg, 0)?;
        built.params.load_matching(&params)?;
        Ok(built)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    cfg: CriticConfig,
    params: ParamStore,
    blocks: Vec<(Linear, Option<BatchNorm>)>,
    head: Linear,
}

impl Critic {
    pub fn new(cfg: CriticConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::stream(seed, "critic-init");
        let mut params = ParamStore::new();
        let mut width = cfg.input_width
            + match cfg.conditioning {
                Conditioning::Both => cfg.num_classes,
                Conditioning::GeneratorOnly => 0,
            };
        let mut blocks = Vec::with_capacity(cfg.hidden_dims.len());
        for (i, &h) in cfg.hidden_dims.iter().enumerate() {
            let lin = Linear::new(&mut params, &format!("critic.block{i}.fc"), width, h, &mut rng);
            let bn = match cfg.norm_kind {
                NormKind::BatchNorm => Some(BatchNorm::new(&mut params, &format!("critic.block{i}.bn"), h)),
                NormKind::None => None,
            };
            blocks.push((lin, bn));
            width = h;
        }
        let head = Linear::new(&mut params, "critic.head", width, 1, &mut rng);
        Ok(Critic {
            cfg,
            params,
            blocks,
            head,
        })
    }

    pub fn config(&self) -> &CriticConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// `b×(L·E)` embeddings → `b×1` unbounded scores.
    pub fn forward<'g>(
        &self,
        p: &Bound<'g>,
        x: Var<'g>,
        labels: &[usize],
        mode: NormMode,
    ) -> Result<Var<'g>> {
        let width = x.with_value(Tensor::cols);
        if width != self.cfg.input_width {
            return Err(Error::dim("critic", &x.shape(), &[labels.len(), self.cfg.input_width]));
        }
        let mut h = match self.cfg.conditioning {
            Conditioning::Both => {
                let onehot = p.graph().constant(one_hot(labels, self.cfg.num_classes)?);
                x.concat_cols(onehot)?
            }
            Conditioning::GeneratorOnly => x,
        };
        for (lin, bn) in &self.blocks {
            h = lin.forward(p, h)?;
            if let Some(bn) = bn {
                h = bn.forward(p, h, mode)?;
            }
            h = h.leaky_relu(self.cfg.leaky_slope);
        }
        self.head.forward(p, h)
    }

    /// Eval-mode scores as plain numbers.
    pub fn score(&self, x: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
        let g = Graph::new();
        let p = self.params.bind(&g, false);
        let out = self.forward(&p, g.constant(x.clone()), labels, NormMode::Eval)?;
        let value = out.value();
        Ok(value.data().to_vec())
    }

    pub(crate) fn from_parts(cfg: CriticConfig, params: ParamStore) -> Result<Self> {
        let mut built = Critic::new(cfg, 0)?;
        built.params.load_matching(&params)?;
        Ok(built)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_generator_output_shape() {
        let gen = Generator::new(GeneratorConfig::desk(2), 1).unwrap();
        let mut rng = rng::stream(0, "t");
        let samples = gen.generate(1, 3, &mut rng).unwrap();
        assert_eq!(samples.len(), 3);
        for s in &samples {
            assert_eq!(s.embedding.shape(), &[16, 32]);
            assert_eq!(s.condition_label, 1);
            assert!(s.soft_label.is_none());
        }
        // 4 blocks of (weight, bias, gamma, beta, running mean, running var) + head
        assert_eq!(gen.params().len(), 4 * 6 + 2);
    }

    #[test]
    fn same_seed_same_parameters() {
        let a = Generator::new(GeneratorConfig::desk(3), 9).unwrap();
        let b = Generator::new(GeneratorConfig::desk(3), 9).unwrap();
        let c = Generator::new(GeneratorConfig::desk(3), 10).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn generate_edge_cases() {
        let gen = Generator::new(GeneratorConfig::desk(2), 1).unwrap();
        let mut rng = rng::stream(0, "t");
        assert!(gen.generate(0, 0, &mut rng).unwrap().is_empty());
        assert!(matches!(
            gen.generate(2, 1, &mut rng),
            Err(Error::Index { index: 2, .. })
        ));
        let first = gen.generate(0, 4, &mut rng::stream(5, "s")).unwrap();
        let again = gen.generate(0, 4, &mut rng::stream(5, "s")).unwrap();
        assert_eq!(first, again);
    }

    #[test]
    fn critic_scores_one_per_row() {
        let critic = Critic::new(CriticConfig::desk(2), 3).unwrap();
        let x = Tensor::zeros(&[5, 512]);
        let scores = critic.score(&x, &[0, 1, 0, 1, 1]).unwrap();
        assert_eq!(scores.len(), 5);
        assert!(scores.iter().all(|s| s.is_finite()));
    }

    #[test]
    fn critic_without_norm_has_no_batch_norm_params() {
        let cfg = CriticConfig {
            norm_kind: NormKind::None,
            ..CriticConfig::desk(2)
        };
        let critic = Critic::new(cfg, 3).unwrap();
        assert!(critic.params().entries().iter().all(|p| !p.name.contains(".bn")));
        assert_eq!(critic.params().len(), 3 * 2 + 2);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = GeneratorConfig::desk(2);
        cfg.hidden_dims.clear();
        assert!(Generator::new(cfg, 0).is_err());
        let mut cfg = CriticConfig::desk(2);
        cfg.leaky_slope = 1.5;
        assert!(Critic::new(cfg, 0).is_err());
    }
}
