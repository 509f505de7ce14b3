//! The matching network.
//!
//! Every token vector `z` goes through one shared layer `x = relu(W_p z + b_p)`,
//! the token outputs are summed, the sum is pulled back inside the unit ball,
//! and a pair is scored by `s(q, a) = w_f d(q, a) + b_f` where `d` is the
//! Poincaré distance. Question and answer paths share the same parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{self, PoincarePoint};

pub const DEFAULT_DIM: usize = 128;
pub const DEFAULT_MAX_Q_LEN: usize = 64;
pub const DEFAULT_MAX_A_LEN: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Relu => 0,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Shapes and sequence limits of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Input (token embedding) dimension.
    pub n: usize,
    /// Output (ball) dimension.
    pub d: usize,
    pub max_q_len: usize,
    pub max_a_len: usize,
}

impl ModelConfig {
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            max_q_len: DEFAULT_MAX_Q_LEN,
            max_a_len: DEFAULT_MAX_A_LEN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.max_q_len == 0 || self.max_a_len == 0 {
            return Err(Error::InvalidConfig(format!(
                "model sizes must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    pub fn max_len(&self, role: Role) -> usize {
        match role {
            Role::Question => self.max_q_len,
            Role::Answer => self.max_a_len,
        }
    }
}

/// Trainable parameters, one copy shared by both sides of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n: usize,
    pub d: usize,
    /// `d x n`, row-major.
    pub w_p: Vec<f64>,
    pub b_p: Vec<f64>,
    pub w_f: f64,
    pub b_f: f64,
    pub activation: Activation,
}

impl ModelParams {
    /// Glorot-uniform projection weights, zero bias, `w_f = 1`, `b_f = 0`.
    ///
    /// `w_f` starts positive so a smaller distance gives a smaller score,
    /// which is the direction the hinge loss pushes positives.
    pub fn init(n: usize, d: usize, seed: u64) -> Result<Self> {
        ModelConfig::new(n, d).validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = (6.0 / (n + d) as f64).sqrt();
        let w_p = (0..d * n)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Ok(Self {
            n,
            d,
            w_p,
            b_p: vec![0.0; d],
            w_f: 1.0,
            b_f: 0.0,
            activation: Activation::Relu,
        })
    }

    pub fn zeros(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            w_p: vec![0.0; d * n],
            b_p: vec![0.0; d],
            w_f: 0.0,
            b_f: 0.0,
            activation: Activation::Relu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidConfig(
                "model dimensions must be positive".into(),
            ));
        }
        if self.w_p.len() != self.d * self.n {
            return Err(Error::DimensionMismatch {
                expected: self.d * self.n,
                got: self.w_p.len(),
            });
        }
        if self.b_p.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: self.b_p.len(),
            });
        }
        let finite = self.w_p.iter().chain(&self.b_p).all(|v| v.is_finite())
            && self.w_f.is_finite()
            && self.b_f.is_finite();
        if !finite {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.w_p.len() + self.b_p.len() + 2
    }

    /// Pre-activation `W_p z + b_p` written into `out`.
    fn affine_into(&self, z: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.w_p[r * self.n..(r + 1) * self.n];
            *o = geometry::dot(row, z) + self.b_p[r];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Question,
    Answer,
}

/// Static token embeddings of one text, `M x n` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    role: Role,
    n: usize,
    data: Vec<f64>,
}

impl TokenSequence {
    pub fn new(role: Role, n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig(
                "token dimension must be positive".into(),
            ));
        }
        if data.is_empty() {
            return Err(Error::Empty("token sequence"));
        }
        if !data.len().is_multiple_of(n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: data.len() % n,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("token embeddings"));
        }
        Ok(Self { role, n, data })
    }

    /// Builds from a float32 matrix, keeping at most `max_len` leading rows.
    pub fn from_f32(role: Role, n: usize, rows: &[f32], max_len: usize) -> Result<Self> {
        if max_len == 0 {
            return Err(Error::InvalidConfig(
                "max sequence length must be positive".into(),
            ));
        }
        let keep = rows.len().min(max_len * n);
        Self::new(
            role,
            n,
            rows[..keep].iter().map(|&v| f64::from(v)).collect(),
        )
    }

    pub fn truncated(mut self, max_len: usize) -> Self {
        let keep = (max_len.max(1) * self.n).min(self.data.len());
        self.data.truncate(keep);
        self
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.n)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

/// Pooled representation of a question or answer.
#[derive(Debug, Clone, PartialEq)]
pub struct QAEmbedding {
    pub point: PoincarePoint,
}

impl QAEmbedding {
    pub fn as_slice(&self) -> &[f64] {
        self.point.as_slice()
    }
}

/// `relu(W_p z + b_p)`.
pub fn project_word(params: &ModelParams, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            got: z.len(),
        });
    }
    let mut x = vec![0.0; params.d];
    params.affine_into(z, &mut x);
    for v in &mut x {
        *v = v.max(0.0);
    }
    Ok(x)
}

/// Everything the backward pass needs from one pooled forward pass.
#[derive(Debug, Clone)]
pub(crate) struct PoolTrace {
    /// Raw token sum before normalization.
    pub sum: Vec<f64>,
    /// Norm of `sum` when the radial clamp fired.
    pub clamped_norm: Option<f64>,
    /// ReLU gate per token and output unit, `M x d`.
    pub active: Vec<bool>,
    pub embedding: QAEmbedding,
}

pub(crate) fn pool_traced(
    params: &ModelParams,
    seq: &TokenSequence,
    eps_ball: f64,
) -> Result<PoolTrace> {
    if seq.dim() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            got: seq.dim(),
        });
    }
    if seq.is_empty() {
        return Err(Error::Empty("token sequence"));
    }
    let d = params.d;
    let mut sum = vec![0.0; d];
    let mut pre = vec![0.0; d];
    let mut active = Vec::with_capacity(seq.len() * d);
    for z in seq.rows() {
        params.affine_into(z, &mut pre);
        for (s, &p) in sum.iter_mut().zip(&pre) {
            let on = p > 0.0;
            active.push(on);
            if on {
                *s += p;
            }
        }
    }
    let norm = geometry::norm_sq(&sum).sqrt();
    let normalized: Vec<f64> = if norm > 1.0 {
        sum.iter().map(|v| v / norm).collect()
    } else {
        sum.clone()
    };
    let point = geometry::retract(&normalized, eps_ball)?;
    let clamped_norm = (norm > 1.0 - eps_ball).then_some(norm);
    Ok(PoolTrace {
        sum,
        clamped_norm,
        active,
        embedding: QAEmbedding { point },
    })
}

/// Sum of projected tokens, rescaled onto the unit sphere when its norm
/// exceeds 1 and then retracted to norm at most `1 - eps_ball`.
///
/// Tokens are accumulated in sequence order, so the result for a given
/// sequence is bitwise reproducible.
pub fn pool_and_normalize(
    params: &ModelParams,
    seq: &TokenSequence,
    eps_ball: f64,
) -> Result<QAEmbedding> {
    pool_traced(params, seq, eps_ball).map(|t| t.embedding)
}

/// `w_f d(q, a) + b_f`; lower is a better match while `w_f > 0`.
pub fn score(params: &ModelParams, q: &QAEmbedding, a: &QAEmbedding) -> Result<f64> {
    let d = geometry::hyperbolic_distance(q.as_slice(), a.as_slice())?;
    Ok(params.w_f * d + params.b_f)
}
