//! Poincaré-ball geometry.
//!
//! The ball is the open unit ball `{x : ||x|| < 1}` with the conformal metric
//! `g_x = lambda(x)^2 g_E`, `lambda(x) = 2 / (1 - ||x||^2)`. Everything here
//! is a pure function on `f64` slices; [`PoincarePoint`] is the validated
//! owner type handed between the model layers.

use crate::error::{Error, Result};

/// Default clearance kept between ball points and the unit sphere.
pub const DEFAULT_EPS_BALL: f64 = 1e-5;
/// Default threshold on `gamma - 1` below which the distance gradient is zero.
pub const DEFAULT_EPS_SING: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    pub eps_ball: f64,
    pub eps_sing: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            eps_ball: DEFAULT_EPS_BALL,
            eps_sing: DEFAULT_EPS_SING,
        }
    }
}

impl GeometryConfig {
    pub fn new(eps_ball: f64, eps_sing: f64) -> Result<Self> {
        let cfg = Self { eps_ball, eps_sing };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_ball > 0.0 && self.eps_ball < 0.1) {
            return Err(Error::InvalidConfig(format!(
                "eps_ball must lie in (0, 0.1), got {}",
                self.eps_ball
            )));
        }
        if !(self.eps_sing > 0.0 && self.eps_sing < 1e-3) {
            return Err(Error::InvalidConfig(format!(
                "eps_sing must lie in (0, 1e-3), got {}",
                self.eps_sing
            )));
        }
        Ok(())
    }
}

/// A point strictly inside the open unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct PoincarePoint(Vec<f64>);

impl PoincarePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("point coordinates"));
        }
        check_inside(&coords)?;
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm_sq(&self.0).sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for PoincarePoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

fn check_inside(x: &[f64]) -> Result<f64> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ball point"));
    }
    let n2 = norm_sq(x);
    if n2 >= 1.0 {
        return Err(Error::Domain { norm: n2.sqrt() });
    }
    Ok(n2)
}

fn check_same_dim(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// `lambda(x) = 2 / (1 - ||x||^2)`.
pub fn conformal_factor(x: &[f64]) -> Result<f64> {
    let n2 = check_inside(x)?;
    Ok(2.0 / (1.0 - n2))
}

/// `u = gamma - 1 = 2 ||q - a||^2 / ((1 - ||q||^2)(1 - ||a||^2))`.
fn gamma_minus_one(q: &[f64], a: &[f64], q_n2: f64, a_n2: f64) -> f64 {
    let diff2: f64 = q.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
    2.0 * diff2 / ((1.0 - q_n2) * (1.0 - a_n2))
}

/// `arcosh(1 + u)` evaluated as `ln(1 + u + sqrt(u (u + 2)))` so small `u`
/// keeps full relative precision.
#[inline]
pub(crate) fn arcosh_one_plus(u: f64) -> f64 {
    (u + (u * (u + 2.0)).sqrt()).ln_1p()
}

/// Hyperbolic distance `arcosh(1 + 2||q-a||^2 / ((1-||q||^2)(1-||a||^2)))`.
pub fn hyperbolic_distance(q: &[f64], a: &[f64]) -> Result<f64> {
    check_same_dim(q, a)?;
    let q_n2 = check_inside(q)?;
    let a_n2 = check_inside(a)?;
    Ok(arcosh_one_plus(gamma_minus_one(q, a, q_n2, a_n2)))
}

/// Gradient of `d(theta, x)` with respect to `theta`.
///
/// With `alpha = 1 - ||theta||^2`, `beta = 1 - ||x||^2` and
/// `gamma = 1 + 2 ||theta - x||^2 / (alpha beta)`:
///
/// ```text
/// 4 / (beta sqrt(gamma^2 - 1)) * ((||x||^2 - 2<theta, x> + 1) / alpha^2 * theta - x / alpha)
/// ```
///
/// The distance has a cusp at `theta = x`; when `gamma - 1 < eps_sing` the
/// zero vector is returned (a valid subgradient).
pub fn distance_gradient(theta: &[f64], x: &[f64], eps_sing: f64) -> Result<Vec<f64>> {
    check_same_dim(theta, x)?;
    let t_n2 = check_inside(theta)?;
    let x_n2 = check_inside(x)?;
    let u = gamma_minus_one(theta, x, t_n2, x_n2);
    if u < eps_sing {
        return Ok(vec![0.0; theta.len()]);
    }
    let alpha = 1.0 - t_n2;
    let beta = 1.0 - x_n2;
    // gamma^2 - 1 = u (u + 2)
    let scale = 4.0 / (beta * (u * (u + 2.0)).sqrt());
    let theta_coef = (x_n2 - 2.0 * dot(theta, x) + 1.0) / (alpha * alpha);
    Ok(theta
        .iter()
        .zip(x)
        .map(|(t, xi)| scale * (theta_coef * t - xi / alpha))
        .collect())
}

/// Scale factor `(1 - ||theta||^2)^2 / 4` turning a Euclidean gradient at
/// `theta` into the Riemannian one.
pub fn riemannian_scale(theta: &[f64]) -> Result<f64> {
    let n2 = check_inside(theta)?;
    let a = 1.0 - n2;
    Ok(a * a / 4.0)
}

pub fn riemannian_rescale(theta: &[f64], euclidean_grad: &[f64]) -> Result<Vec<f64>> {
    check_same_dim(theta, euclidean_grad)?;
    let s = riemannian_scale(theta)?;
    Ok(euclidean_grad.iter().map(|g| s * g).collect())
}

/// Radial projection onto the closed ball of radius `1 - eps_ball`.
///
/// Vectors already inside are returned unchanged, so the map is idempotent.
pub fn retract(v: &[f64], eps_ball: f64) -> Result<PoincarePoint> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("retraction input"));
    }
    if !(eps_ball > 0.0 && eps_ball < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "eps_ball must lie in (0, 1), got {eps_ball}"
        )));
    }
    let limit = 1.0 - eps_ball;
    let norm = norm_sq(v).sqrt();
    if norm <= limit {
        return Ok(PoincarePoint(v.to_vec()));
    }
    let mut factor = limit / norm;
    let mut out: Vec<f64> = v.iter().map(|x| x * factor).collect();
    // Rounding can leave the scaled norm a few ulps above the limit.
    while norm_sq(&out).sqrt() > limit {
        factor *= 1.0 - f64::EPSILON;
        out = v.iter().map(|x| x * factor).collect();
    }
    Ok(PoincarePoint(out))
}
