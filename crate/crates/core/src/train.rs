//! Triple training with a pairwise hinge loss.
//!
//! Gradients are derived by hand through score -> distance -> ball point ->
//! radial clamp -> sum pooling -> ReLU -> linear layer. In
//! [`GradientMode::Riemannian`] the gradient arriving at each pooled ball
//! point is rescaled by `(1 - ||y||^2)^2 / 4` before it is pushed further
//! back; the parameters themselves are Euclidean and take plain SGD steps.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{sample_negative, EmbeddingStore, TripleDataset};
use crate::error::{Error, Result};
use crate::geometry::{self, GeometryConfig};
use crate::model::{pool_traced, ModelConfig, ModelParams, PoolTrace, Role, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    /// Rescale gradients at pooled ball points by the inverse metric.
    #[default]
    Riemannian,
    /// Exact gradient of the batch loss.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub margin: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub gradient_mode: GradientMode,
    /// Draw fresh negatives from the training pool after the first epoch.
    pub resample_negatives: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            lr: 0.05,
            epochs: 50,
            batch_size: 64,
            seed: 0,
            geometry: GeometryConfig::default(),
            gradient_mode: GradientMode::Riemannian,
            resample_negatives: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "margin must be positive, got {}",
                self.margin
            )));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        self.geometry.validate()
    }
}

/// One training example by reference.
#[derive(Debug, Clone, Copy)]
pub struct TripleRef<'a> {
    pub question: &'a TokenSequence,
    pub positive: &'a TokenSequence,
    pub negative: &'a TokenSequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w_p: Vec<f64>,
    pub b_p: Vec<f64>,
    pub w_f: f64,
    pub b_f: f64,
}

impl Gradients {
    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            w_p: vec![0.0; d * n],
            b_p: vec![0.0; d],
            w_f: 0.0,
            b_f: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w_p.iter().chain(&self.b_p).all(|g| g.is_finite())
            && self.w_f.is_finite()
            && self.b_f.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.w_p.iter().chain(&self.b_p).all(|&g| g == 0.0) && self.w_f == 0.0 && self.b_f == 0.0
    }
}

/// `max(0, s_pos + margin - s_neg)`.
pub fn hinge_loss(s_pos: f64, s_neg: f64, margin: f64) -> f64 {
    (s_pos + margin - s_neg).max(0.0)
}

struct ItemForward {
    q: PoolTrace,
    pos: PoolTrace,
    neg: PoolTrace,
    d_pos: f64,
    d_neg: f64,
    /// `s_pos + margin - s_neg`
    slack: f64,
}

fn forward_item(
    params: &ModelParams,
    item: &TripleRef<'_>,
    cfg: &TrainConfig,
) -> Result<ItemForward> {
    let eps = cfg.geometry.eps_ball;
    let q = pool_traced(params, item.question, eps)?;
    let pos = pool_traced(params, item.positive, eps)?;
    let neg = pool_traced(params, item.negative, eps)?;
    let d_pos = geometry::hyperbolic_distance(q.embedding.as_slice(), pos.embedding.as_slice())?;
    let d_neg = geometry::hyperbolic_distance(q.embedding.as_slice(), neg.embedding.as_slice())?;
    let s_pos = params.w_f * d_pos + params.b_f;
    let s_neg = params.w_f * d_neg + params.b_f;
    Ok(ItemForward {
        q,
        pos,
        neg,
        d_pos,
        d_neg,
        slack: s_pos + cfg.margin - s_neg,
    })
}

/// Mean hinge loss over the batch.
pub fn batch_loss(params: &ModelParams, batch: &[TripleRef<'_>], cfg: &TrainConfig) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::Empty("triple batch"));
    }
    let mut total = 0.0;
    for item in batch {
        total += forward_item(params, item, cfg)?.slack.max(0.0);
    }
    Ok(total / batch.len() as f64)
}

/// Pushes `grad_y` (gradient at the pooled ball point) back into the
/// projection-layer gradients.
fn backprop_pool(
    params: &ModelParams,
    seq: &TokenSequence,
    trace: &PoolTrace,
    mut grad_y: Vec<f64>,
    cfg: &TrainConfig,
    grads: &mut Gradients,
) -> Result<()> {
    if cfg.gradient_mode == GradientMode::Riemannian {
        let s = geometry::riemannian_scale(trace.embedding.as_slice())?;
        grad_y.iter_mut().for_each(|g| *g *= s);
    }
    // y = r * sum / ||sum|| with r = 1 - eps_ball when the clamp fired.
    let grad_sum = match trace.clamped_norm {
        Some(norm) => {
            let r = 1.0 - cfg.geometry.eps_ball;
            let along = geometry::dot(&trace.sum, &grad_y) / (norm * norm);
            grad_y
                .iter()
                .zip(&trace.sum)
                .map(|(g, s)| r / norm * (g - along * s))
                .collect()
        }
        None => grad_y,
    };
    let (n, d) = (params.n, params.d);
    for (t, z) in seq.rows().enumerate() {
        let gate = &trace.active[t * d..(t + 1) * d];
        for r in 0..d {
            if !gate[r] {
                continue;
            }
            let g = grad_sum[r];
            grads.b_p[r] += g;
            let row = &mut grads.w_p[r * n..(r + 1) * n];
            for (w, zc) in row.iter_mut().zip(z) {
                *w += g * zc;
            }
        }
    }
    Ok(())
}

/// Mean hinge loss and its (sub)gradient. The hinge contributes nothing
/// when `s_pos + margin - s_neg <= 0`.
pub fn loss_and_gradients(
    params: &ModelParams,
    batch: &[TripleRef<'_>],
    cfg: &TrainConfig,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Empty("triple batch"));
    }
    let scale = 1.0 / batch.len() as f64;
    let eps_sing = cfg.geometry.eps_sing;
    let mut grads = Gradients::zeros(params.n, params.d);
    let mut total = 0.0;
    for item in batch {
        let f = forward_item(params, item, cfg)?;
        if f.slack <= 0.0 {
            continue;
        }
        total += f.slack;
        // ds_pos = +scale, ds_neg = -scale; b_f enters both with opposite signs.
        grads.w_f += scale * (f.d_pos - f.d_neg);
        let dd = scale * params.w_f;
        let q = f.q.embedding.as_slice();
        let p = f.pos.embedding.as_slice();
        let ng = f.neg.embedding.as_slice();

        let gq_pos = geometry::distance_gradient(q, p, eps_sing)?;
        let gq_neg = geometry::distance_gradient(q, ng, eps_sing)?;
        let grad_q: Vec<f64> = gq_pos
            .iter()
            .zip(&gq_neg)
            .map(|(a, b)| dd * (a - b))
            .collect();
        let grad_pos: Vec<f64> = geometry::distance_gradient(p, q, eps_sing)?
            .into_iter()
            .map(|g| dd * g)
            .collect();
        let grad_neg: Vec<f64> = geometry::distance_gradient(ng, q, eps_sing)?
            .into_iter()
            .map(|g| -dd * g)
            .collect();

        backprop_pool(params, item.question, &f.q, grad_q, cfg, &mut grads)?;
        backprop_pool(params, item.positive, &f.pos, grad_pos, cfg, &mut grads)?;
        backprop_pool(params, item.negative, &f.neg, grad_neg, cfg, &mut grads)?;
    }
    Ok((total * scale, grads))
}

pub fn backward(
    params: &ModelParams,
    batch: &[TripleRef<'_>],
    cfg: &TrainConfig,
) -> Result<Gradients> {
    loss_and_gradients(params, batch, cfg).map(|(_, g)| g)
}

/// `params -= lr * grads`. Rejects non-finite gradients without touching
/// the parameters.
pub fn sgd_step(params: &mut ModelParams, grads: &Gradients, lr: f64) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradients"));
    }
    if grads.w_p.len() != params.w_p.len() || grads.b_p.len() != params.b_p.len() {
        return Err(Error::DimensionMismatch {
            expected: params.w_p.len() + params.b_p.len(),
            got: grads.w_p.len() + grads.b_p.len(),
        });
    }
    for (w, g) in params.w_p.iter_mut().zip(&grads.w_p) {
        *w -= lr * g;
    }
    for (b, g) in params.b_p.iter_mut().zip(&grads.b_p) {
        *b -= lr * g;
    }
    params.w_f -= lr * grads.w_f;
    params.b_f -= lr * grads.b_f;
    Ok(())
}

/// Token sequences of a triple dataset resolved against the stores.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub questions: Vec<TokenSequence>,
    pub answers: Vec<TokenSequence>,
    /// `(question, positive answer, negative answer)` indices.
    pub triples: Vec<(usize, usize, usize)>,
    /// Answer indices eligible as resampled negatives.
    pub negative_pool: Vec<usize>,
}

impl TrainingSet {
    pub fn from_stores<'a>(
        dataset: &'a TripleDataset,
        descriptions: &EmbeddingStore,
        codes: &EmbeddingStore,
        model: &ModelConfig,
    ) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Empty("training triples"));
        }
        for store in [descriptions, codes] {
            if store.dim() != model.n {
                return Err(Error::DimensionMismatch {
                    expected: model.n,
                    got: store.dim(),
                });
            }
        }
        let answer_seq = |id: &str| -> Result<TokenSequence> {
            let m = codes.require(id)?;
            TokenSequence::from_f32(Role::Answer, model.n, m.data(), model.max_a_len)
        };
        let mut questions = Vec::new();
        let mut answers = Vec::new();
        let mut q_index: HashMap<&'a str, usize> = HashMap::new();
        let mut a_index: HashMap<&'a str, usize> = HashMap::new();
        let mut negative_pool = Vec::new();
        let mut pooled = std::collections::HashSet::new();

        let mut triples = Vec::with_capacity(dataset.len());
        for t in &dataset.triples {
            let qi = match q_index.get(t.qid.as_str()) {
                Some(&i) => i,
                None => {
                    let m = descriptions.require(&t.qid)?;
                    questions.push(TokenSequence::from_f32(
                        Role::Question,
                        model.n,
                        m.data(),
                        model.max_q_len,
                    )?);
                    q_index.insert(&t.qid, questions.len() - 1);
                    questions.len() - 1
                }
            };
            let mut resolve = |id: &'a str| -> Result<usize> {
                if let Some(&i) = a_index.get(id) {
                    return Ok(i);
                }
                answers.push(answer_seq(id)?);
                a_index.insert(id, answers.len() - 1);
                Ok(answers.len() - 1)
            };
            let pi = resolve(&t.pos_id)?;
            let ni = resolve(&t.neg_id)?;
            if pooled.insert(pi) {
                negative_pool.push(pi);
            }
            triples.push((qi, pi, ni));
        }
        Ok(Self {
            questions,
            answers,
            triples,
            negative_pool,
        })
    }

    fn refs(&self, idx: &[(usize, usize, usize)]) -> Vec<TripleRef<'_>> {
        idx.iter()
            .map(|&(q, p, n)| TripleRef {
                question: &self.questions[q],
                positive: &self.answers[p],
                negative: &self.answers[n],
            })
            .collect()
    }

    /// All triples by reference, in dataset order.
    pub fn batch(&self) -> Vec<TripleRef<'_>> {
        self.refs(&self.triples)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean hinge loss per epoch, measured on the fly before each update.
    pub loss_trace: Vec<f64>,
    /// Largest pooled-embedding norm seen in any forward pass.
    pub max_pooled_norm: f64,
}

fn check_ball(norm: f64, eps_ball: f64, seen: &mut f64) -> Result<()> {
    let limit = 1.0 - eps_ball / 2.0;
    if norm > limit {
        return Err(Error::BallInvariant { norm, limit });
    }
    *seen = seen.max(norm);
    Ok(())
}

/// Trains from a freshly initialized model.
///
/// Fully determined by `(set, model, cfg)`: initialization, per-epoch
/// shuffles, and negative resampling all derive from `cfg.seed`.
pub fn train(set: &TrainingSet, model: &ModelConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    model.validate()?;
    let params = ModelParams::init(model.n, model.d, cfg.seed)?;
    train_from(set, params, cfg)
}

pub fn train_from(
    set: &TrainingSet,
    mut params: ModelParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    params.validate()?;
    if set.triples.is_empty() {
        return Err(Error::Empty("training triples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut max_norm = 0.0f64;
    let mut triples = set.triples.clone();
    let pool = &set.negative_pool;
    let eps = cfg.geometry.eps_ball;

    for epoch in 0..cfg.epochs {
        if epoch > 0 && cfg.resample_negatives && pool.len() >= 2 {
            for t in &mut triples {
                if let Some(pos_slot) = pool.iter().position(|&a| a == t.1) {
                    t.2 = pool[sample_negative(&mut rng, pool.len(), pos_slot)];
                }
            }
        }
        let mut order = triples.clone();
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = set.refs(chunk);
            for item in &batch {
                for seq in [item.question, item.positive, item.negative] {
                    let y = crate::model::pool_and_normalize(&params, seq, eps)?;
                    check_ball(y.point.norm(), eps, &mut max_norm)?;
                }
            }
            let (loss, grads) = loss_and_gradients(&params, &batch, cfg)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch: epoch + 1,
                    loss,
                });
            }
            epoch_loss += loss * chunk.len() as f64;
            sgd_step(&mut params, &grads, cfg.lr).map_err(|_| Error::Diverged {
                epoch: epoch + 1,
                loss: f64::NAN,
            })?;
        }
        let mean = epoch_loss / order.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                loss: mean,
            });
        }
        loss_trace.push(mean);
    }
    Ok(TrainOutcome {
        params,
        loss_trace,
        max_pooled_norm: max_norm,
    })
}

/// Writes `epoch,mean_loss` rows, epochs numbered from 1.
pub fn write_loss_csv(trace: &[f64], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "mean_loss"])?;
    for (i, loss) in trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), loss.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_loss_csv(trace: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_loss_csv(trace, std::fs::File::create(path)?)
}
