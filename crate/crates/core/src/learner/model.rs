use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::nn::{Bound, LayerNorm, Linear, ParamId, ParamStore};
use crate::rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    /// Single-head self-attention + feed-forward, pre-norm residual blocks.
    #[default]
    Attention,
    /// Each position is mixed with its sequence mean instead of attention.
    MeanPool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Token positions after truncation/padding (`L`); the CLS row is extra.
    pub max_len: usize,
    pub num_classes: usize,
    pub num_blocks: usize,
    pub ffn_dim: usize,
    pub encoder: EncoderKind,
    pub embed_init_std: f64,
    /// Token id whose embedding row is pinned to zero.
    pub pad_id: usize,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            vocab_size: 64,
            embed_dim: 32,
            max_len: 16,
            num_classes: 2,
            num_blocks: 2,
            ffn_dim: 64,
            encoder: EncoderKind::Attention,
            embed_init_std: 1.0,
            pad_id: 0,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0
            || self.embed_dim == 0
            || self.max_len == 0
            || self.num_classes == 0
            || self.ffn_dim == 0
        {
            return Err(Error::Config("learner dimensions must be positive".into()));
        }
        if self.pad_id >= self.vocab_size {
            return Err(Error::Config("pad_id outside vocabulary".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Block {
    norm1: LayerNorm,
    query: Linear,
    key: Linear,
    value: Linear,
    out: Linear,
    norm2: LayerNorm,
    ff1: Linear,
    ff2: Linear,
}

const FFN_SLOPE: f64 = 0.1;

/// Token table + CLS row + positional table + encoder + classifier.
///
/// Everything above the token table is shared between the token path and
/// the embedding path, so `forward_tokens(s)` and
/// `forward_embeddings(embed_tokens(s))` compute the same function.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerModel {
    cfg: LearnerConfig,
    params: ParamStore,
    token_embed: ParamId,
    cls: ParamId,
    pos: ParamId,
    blocks: Vec<Block>,
    final_norm: LayerNorm,
    head: Linear,
}

impl LearnerModel {
    pub fn new(cfg: LearnerConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::stream(seed, "learner-init");
        let mut params = ParamStore::new();
        let (v, e) = (cfg.vocab_size, cfg.embed_dim);

        let mut table = Tensor::randn(&[v, e], cfg.embed_init_std, &mut rng);
        table.data_mut()[cfg.pad_id * e..(cfg.pad_id + 1) * e].fill(0.0);
        let token_embed = params.add("embed.tokens", table, true);
        let cls = params.add("encoder.cls", Tensor::randn(&[1, e], cfg.embed_init_std, &mut rng), true);
        let pos = params.add("encoder.pos", Tensor::randn(&[cfg.max_len + 1, e], 0.1, &mut rng), true);

        let mut blocks = Vec::with_capacity(cfg.num_blocks);
        for i in 0..cfg.num_blocks {
            let name = |part: &str| format!("encoder.block{i}.{part}");
            blocks.push(Block {
                norm1: LayerNorm::new(&mut params, &name("norm1"), e),
                query: Linear::new(&mut params, &name("query"), e, e, &mut rng),
                key: Linear::new(&mut params, &name("key"), e, e, &mut rng),
                value: Linear::new(&mut params, &name("value"), e, e, &mut rng),
                out: Linear::new(&mut params, &name("out"), e, e, &mut rng),
                norm2: LayerNorm::new(&mut params, &name("norm2"), e),
                ff1: Linear::new(&mut params, &name("ff1"), e, cfg.ffn_dim, &mut rng),
                ff2: Linear::new(&mut params, &name("ff2"), cfg.ffn_dim, e, &mut rng),
            });
        }
        let final_norm = LayerNorm::new(&mut params, "encoder.final_norm", e);
        let head = Linear::new(&mut params, "head", e, cfg.num_classes, &mut rng);
        Ok(LearnerModel {
            cfg,
            params,
            token_embed,
            cls,
            pos,
            blocks,
            final_norm,
            head,
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub(crate) fn token_embed_id(&self) -> ParamId {
        self.token_embed
    }

    /// Ids truncated or padded with `pad_id` to exactly `max_len`.
    fn fixed_length(&self, ids: &[usize]) -> Result<Vec<usize>> {
        let l = self.cfg.max_len;
        let mut out = Vec::with_capacity(l);
        for &id in ids.iter().take(l) {
            if id >= self.cfg.vocab_size {
                return Err(Error::Index {
                    what: "token",
                    index: id,
                    bound: self.cfg.vocab_size,
                });
            }
            out.push(id);
        }
        out.resize(l, self.cfg.pad_id);
        Ok(out)
    }

    /// Embedding-layer output for one sentence: `len×E` rows of the token
    /// table, truncated to `len` and zero-padded.
    pub fn embed_tokens(&self, ids: &[usize], len: usize) -> Result<Tensor> {
        let e = self.cfg.embed_dim;
        let table = self.params.get(self.token_embed);
        let mut out = vec![0.0; len * e];
        for (pos, &id) in ids.iter().take(len).enumerate() {
            if id >= self.cfg.vocab_size {
                return Err(Error::Index {
                    what: "token",
                    index: id,
                    bound: self.cfg.vocab_size,
                });
            }
            out[pos * e..(pos + 1) * e].copy_from_slice(table.row(id));
        }
        Tensor::matrix(len, e, out)
    }

    /// Logits for a batch of token-id sequences.
    pub fn forward_tokens<'g>(&self, p: &Bound<'g>, batch: &[Vec<usize>]) -> Result<Var<'g>> {
        let mut ids = Vec::with_capacity(batch.len() * self.cfg.max_len);
        for seq in batch {
            ids.extend(self.fixed_length(seq)?);
        }
        let ids: Rc<[usize]> = ids.into();
        let emb = p.var(self.token_embed).gather_rows(ids)?;
        self.encode(p, emb, batch.len())
    }

    /// Logits for `n` stacked `L×E` embedding sequences (`(n·L)×E`), bypassing
    /// the token table.
    pub fn forward_embeddings<'g>(&self, p: &Bound<'g>, emb: Var<'g>, n: usize) -> Result<Var<'g>> {
        let shape = emb.shape();
        let expected = [n * self.cfg.max_len, self.cfg.embed_dim];
        if shape != expected {
            return Err(Error::dim("forward_embeddings", &shape, &expected));
        }
        self.encode(p, emb, n)
    }

    fn encode<'g>(&self, p: &Bound<'g>, emb: Var<'g>, n: usize) -> Result<Var<'g>> {
        let l = self.cfg.max_len;
        let s = l + 1;
        let stacked = Var::concat_rows(&[p.var(self.cls), emb])?;
        let mut order = Vec::with_capacity(n * s);
        let mut positions = Vec::with_capacity(n * s);
        for i in 0..n {
            order.push(0);
            order.extend((0..l).map(|t| 1 + i * l + t));
            positions.extend(0..s);
        }
        let seq = stacked.gather_rows(order.into())?;
        let pos = p.var(self.pos).gather_rows(positions.into())?;
        let mut h = seq.add(pos)?;
        for block in &self.blocks {
            h = self.block_forward(p, block, h, n, s)?;
        }
        let h = self.final_norm.forward(p, h)?;
        let cls_rows = h.gather_rows((0..n).map(|i| i * s).collect())?;
        self.head.forward(p, cls_rows)
    }

    fn block_forward<'g>(
        &self,
        p: &Bound<'g>,
        block: &Block,
        h: Var<'g>,
        n: usize,
        s: usize,
    ) -> Result<Var<'g>> {
        let a = block.norm1.forward(p, h)?;
        let mixed = match self.cfg.encoder {
            EncoderKind::Attention => {
                let q = block.query.forward(p, a)?;
                let k = block.key.forward(p, a)?;
                let v = block.value.forward(p, a)?;
                let scale = 1.0 / (self.cfg.embed_dim as f64).sqrt();
                let mut outs = Vec::with_capacity(n);
                for i in 0..n {
                    let qi = q.slice_rows(i * s, s)?;
                    let ki = k.slice_rows(i * s, s)?;
                    let vi = v.slice_rows(i * s, s)?;
                    let weights = qi.matmul(ki.transpose()?)?.scale(scale).softmax_rows();
                    outs.push(weights.matmul(vi)?);
                }
                Var::concat_rows(&outs)?
            }
            EncoderKind::MeanPool => {
                let v = block.value.forward(p, a)?;
                let mut outs = Vec::with_capacity(n);
                for i in 0..n {
                    let vi = v.slice_rows(i * s, s)?;
                    outs.push(vi.sum_rows()?.scale(1.0 / s as f64).broadcast_rows(s)?);
                }
                Var::concat_rows(&outs)?
            }
        };
        let h = h.add(block.out.forward(p, mixed)?)?;
        let f = block.norm2.forward(p, h)?;
        let f = block.ff1.forward(p, f)?.leaky_relu(FFN_SLOPE);
        h.add(block.ff2.forward(p, f)?)
    }

    /// Eval-mode logits for token sequences, in chunks.
    pub fn logits_tokens(&self, batch: &[Vec<usize>]) -> Result<Tensor> {
        let mut data = Vec::with_capacity(batch.len() * self.cfg.num_classes);
        for chunk in batch.chunks(64) {
            let g = Graph::new();
            let p = self.params.bind(&g, false);
            let out = self.forward_tokens(&p, chunk)?;
            data.extend_from_slice(out.value().data());
        }
        Tensor::matrix(batch.len(), self.cfg.num_classes, data)
    }

    /// Eval-mode logits for `L×E` embedding sequences.
    pub fn logits_embeddings(&self, embeddings: &[Tensor]) -> Result<Tensor> {
        let mut data = Vec::with_capacity(embeddings.len() * self.cfg.num_classes);
        for chunk in embeddings.chunks(64) {
            let g = Graph::new();
            let p = self.params.bind(&g, false);
            let stacked = stack_rows(chunk)?;
            let out = self.forward_embeddings(&p, g.constant(stacked), chunk.len())?;
            data.extend_from_slice(out.value().data());
        }
        Tensor::matrix(embeddings.len(), self.cfg.num_classes, data)
    }

    pub fn predict(&self, batch: &[Vec<usize>]) -> Result<Vec<usize>> {
        Ok(self.logits_tokens(batch)?.argmax_rows())
    }

    pub(crate) fn from_parts(cfg: LearnerConfig, params: ParamStore) -> Result<Self> {
        let mut built = LearnerModel::new(cfg, 0)?;
        built.params.load_matching(&params)?;
        Ok(built)
    }
}

/// Vertically stacks matrices with a common column count.
pub(crate) fn stack_rows(parts: &[Tensor]) -> Result<Tensor> {
    let cols = parts.first().map_or(0, Tensor::cols);
    let mut data = Vec::new();
    let mut rows = 0;
    for t in parts {
        if t.cols() != cols {
            return Err(Error::dim("stack_rows", &[rows, cols], t.shape()));
        }
        rows += t.rows();
        data.extend_from_slice(t.data());
    }
    Tensor::matrix(rows, cols, data)
}
