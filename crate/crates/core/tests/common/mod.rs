//! Finite-difference machinery shared by the gradient and acceptance suites.

#![allow(dead_code)]

use hypermatch::{
    backward, batch_loss, pool_and_normalize, score, ModelParams, Role, TokenSequence, TrainConfig,
    TripleRef,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f64 = 1e-6;
/// Nothing non-smooth may sit closer than this to the evaluation point.
pub const CLEARANCE: f64 = 1e-4;

pub type Owned = Vec<(TokenSequence, TokenSequence, TokenSequence)>;

pub fn random_seq(
    role: Role,
    n: usize,
    m: usize,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> TokenSequence {
    let data = (0..n * m)
        .map(|_| scale * rng.random_range(-1.0..1.0))
        .collect();
    TokenSequence::new(role, n, data).unwrap()
}

pub fn refs(owned: &Owned) -> Vec<TripleRef<'_>> {
    owned
        .iter()
        .map(|(q, p, n)| TripleRef {
            question: q,
            positive: p,
            negative: n,
        })
        .collect()
}

/// Returns whether any ReLU, norm clamp, or hinge kink lies within
/// `CLEARANCE` of the current parameters, and whether a clamp is active.
pub fn smoothness(params: &ModelParams, owned: &Owned, cfg: &TrainConfig) -> (bool, bool) {
    let eps = cfg.geometry.eps_ball;
    let mut near_kink = false;
    let mut clamped = false;
    for (q, p, n) in owned {
        for seq in [q, p, n] {
            let mut sum = vec![0.0; params.d];
            for z in seq.rows() {
                for r in 0..params.d {
                    let mut pre = params.b_p[r];
                    for c in 0..params.n {
                        pre += params.w_p[r * params.n + c] * z[c];
                    }
                    near_kink |= pre.abs() < CLEARANCE;
                    if pre > 0.0 {
                        sum[r] += pre;
                    }
                }
            }
            let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
            near_kink |= (norm - (1.0 - eps)).abs() < CLEARANCE || (norm - 1.0).abs() < CLEARANCE;
            clamped |= norm > 1.0 - eps;
        }
        let eq = pool_and_normalize(params, q, eps).unwrap();
        let ep = pool_and_normalize(params, p, eps).unwrap();
        let en = pool_and_normalize(params, n, eps).unwrap();
        let slack =
            score(params, &eq, &ep).unwrap() + cfg.margin - score(params, &eq, &en).unwrap();
        near_kink |= slack.abs() < CLEARANCE;
    }
    (near_kink, clamped)
}

fn flatten(params: &ModelParams) -> Vec<f64> {
    let mut v = params.w_p.clone();
    v.extend(&params.b_p);
    v.extend([params.w_f, params.b_f]);
    v
}

fn unflatten(template: &ModelParams, v: &[f64]) -> ModelParams {
    let wn = template.w_p.len();
    let dn = template.b_p.len();
    ModelParams {
        w_p: v[..wn].to_vec(),
        b_p: v[wn..wn + dn].to_vec(),
        w_f: v[wn + dn],
        b_f: v[wn + dn + 1],
        ..template.clone()
    }
}

pub fn max_rel_error(params: &ModelParams, owned: &Owned, cfg: &TrainConfig) -> f64 {
    let batch = refs(owned);
    let g = backward(params, &batch, cfg).unwrap();
    let mut analytic = g.w_p.clone();
    analytic.extend(&g.b_p);
    analytic.extend([g.w_f, g.b_f]);

    let base = flatten(params);
    let mut worst = 0.0f64;
    for (i, a) in analytic.iter().enumerate() {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += STEP;
        minus[i] -= STEP;
        let lp = batch_loss(&unflatten(params, &plus), &batch, cfg).unwrap();
        let lm = batch_loss(&unflatten(params, &minus), &batch, cfg).unwrap();
        let fd = (lp - lm) / (2.0 * STEP);
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

pub fn check_configurations(cfg: &TrainConfig, allow_clamp: bool, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut with_clamp = 0;
    let mut attempts = 0;
    while checked < 20 {
        attempts += 1;
        assert!(attempts < 1000, "could not find smooth configurations");
        let mut params = ModelParams::init(8, 4, rng.random()).unwrap();
        params.b_p = (0..4).map(|_| rng.random_range(-0.1..0.1)).collect();
        params.w_f = rng.random_range(0.5..2.0);
        params.b_f = rng.random_range(-0.5..0.5);
        let scale = if allow_clamp && checked % 2 == 1 {
            1.5
        } else {
            0.25
        };
        let owned: Owned = (0..2)
            .map(|_| {
                (
                    random_seq(Role::Question, 8, 3, scale, &mut rng),
                    random_seq(Role::Answer, 8, 3, scale, &mut rng),
                    random_seq(Role::Answer, 8, 3, scale, &mut rng),
                )
            })
            .collect();
        let (near_kink, clamped) = smoothness(&params, &owned, cfg);
        if near_kink
            || (clamped && !allow_clamp)
            || batch_loss(&params, &refs(&owned), cfg).unwrap() == 0.0
        {
            continue;
        }
        let err = max_rel_error(&params, &owned, cfg);
        assert!(
            err < 1e-3,
            "relative error {err} at configuration {checked}"
        );
        checked += 1;
        with_clamp += usize::from(clamped);
    }
    with_clamp
}
