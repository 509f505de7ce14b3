//! Positive/negative pair features reduced to 2-D for plotting.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{self, dot};
use crate::model::{pool_and_normalize, ModelParams};
use crate::train::TripleRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairLabel {
    Positive,
    Negative,
}

impl PairLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::Positive => "positive",
            PairLabel::Negative => "negative",
        }
    }
}

/// `q ++ a ++ [d(q, a), ||q||, ||a||]`, length `2d + 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeature {
    pub label: PairLabel,
    pub feature: Vec<f64>,
}

impl PairFeature {
    /// The hyperbolic distance component.
    pub fn distance(&self) -> f64 {
        let d = (self.feature.len() - 3) / 2;
        self.feature[2 * d]
    }
}

/// Two features per triple: question with its positive, then with its
/// negative.
pub fn extract_pair_features(
    params: &ModelParams,
    triples: &[TripleRef<'_>],
    eps_ball: f64,
) -> Result<Vec<PairFeature>> {
    if triples.is_empty() {
        return Err(Error::Empty("triples"));
    }
    let mut out = Vec::with_capacity(2 * triples.len());
    for t in triples {
        let q = pool_and_normalize(params, t.question, eps_ball)?;
        for (label, seq) in [
            (PairLabel::Positive, t.positive),
            (PairLabel::Negative, t.negative),
        ] {
            let a = pool_and_normalize(params, seq, eps_ball)?;
            let dist = geometry::hyperbolic_distance(q.as_slice(), a.as_slice())?;
            let mut feature = Vec::with_capacity(2 * params.d + 3);
            feature.extend_from_slice(q.as_slice());
            feature.extend_from_slice(a.as_slice());
            feature.extend([dist, q.point.norm(), a.point.norm()]);
            out.push(PairFeature { label, feature });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection2d {
    pub points: Vec<[f64; 2]>,
    /// Unit principal directions in feature space.
    pub components: [Vec<f64>; 2],
    /// Share of total variance along each component.
    pub explained_variance_ratio: [f64; 2],
}

const POWER_SEED: u64 = 0x005e_ed2d;
const POWER_MAX_ITERS: usize = 20_000;
const POWER_TOL: f64 = 1e-14;

fn mat_vec(c: &[f64], dim: usize, v: &[f64]) -> Vec<f64> {
    c.chunks_exact(dim).map(|row| dot(row, v)).collect()
}

fn orthonormalize(v: &mut [f64], against: &[Vec<f64>]) -> f64 {
    for u in against {
        let p = dot(v, u);
        v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
    }
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Leading eigenvector of the symmetric matrix `c`, restricted to the
/// orthogonal complement of `found`.
fn power_iteration(c: &[f64], dim: usize, found: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    orthonormalize(&mut v, found);
    for _ in 0..POWER_MAX_ITERS {
        let mut next = mat_vec(c, dim, &v);
        if orthonormalize(&mut next, found) == 0.0 {
            // No variance left in this subspace; any orthogonal direction will do.
            return v;
        }
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        v = next;
        if delta < POWER_TOL {
            break;
        }
    }
    v
}

/// Projects features onto their top two principal directions.
///
/// Power iteration with a fixed seed and deflation; each component is signed
/// so its largest-magnitude loading is positive.
pub fn pca_2d(features: &[Vec<f64>]) -> Result<Projection2d> {
    if features.len() < 2 {
        return Err(Error::Empty("at least two features are required"));
    }
    let dim = features[0].len();
    if dim == 0 {
        return Err(Error::Empty("feature vector"));
    }
    if let Some(f) = features.iter().find(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: f.len(),
        });
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("features"));
    }
    let m = features.len() as f64;
    let mut mean = vec![0.0; dim];
    for f in features {
        mean.iter_mut().zip(f).for_each(|(a, b)| *a += b);
    }
    mean.iter_mut().for_each(|a| *a /= m);
    let centered: Vec<Vec<f64>> = features
        .iter()
        .map(|f| f.iter().zip(&mean).map(|(a, b)| a - b).collect())
        .collect();

    let mut cov = vec![0.0; dim * dim];
    for row in &centered {
        for i in 0..dim {
            if row[i] == 0.0 {
                continue;
            }
            let ri = row[i];
            let out = &mut cov[i * dim..(i + 1) * dim];
            out.iter_mut().zip(row).for_each(|(c, rj)| *c += ri * rj);
        }
    }
    let total: f64 = (0..dim).map(|i| cov[i * dim + i]).sum();
    if total <= 0.0 {
        return Err(Error::ZeroVariance);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut comps: Vec<Vec<f64>> = Vec::with_capacity(2);
    let mut explained = [0.0; 2];
    for k in 0..2 {
        let mut v = if dim > k {
            power_iteration(&cov, dim, &comps, &mut rng)
        } else {
            vec![0.0; dim]
        };
        let lead = v.iter().copied().fold(
            0.0f64,
            |best, x| if x.abs() > best.abs() { x } else { best },
        );
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let lambda = dot(&v, &mat_vec(&cov, dim, &v));
        explained[k] = (lambda / total).max(0.0);
        comps.push(v);
    }
    let points = centered
        .iter()
        .map(|row| [dot(row, &comps[0]), dot(row, &comps[1])])
        .collect();
    let second = comps.pop().unwrap();
    let first = comps.pop().unwrap();
    Ok(Projection2d {
        points,
        components: [first, second],
        explained_variance_ratio: explained,
    })
}

/// `label,x,y` with a header row.
pub fn write_projection_csv(
    features: &[PairFeature],
    projection: &Projection2d,
    out: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "x", "y"])?;
    for (f, p) in features.iter().zip(&projection.points) {
        w.write_record([f.label.as_str(), &p[0].to_string(), &p[1].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `label,f_0,...,f_{k-1}` with a header row.
pub fn write_features_csv(features: &[PairFeature], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let width = features.first().map_or(0, |f| f.feature.len());
    let mut header = vec!["label".to_string()];
    header.extend((0..width).map(|i| format!("f_{i}")));
    w.write_record(&header)?;
    for f in features {
        let mut rec = vec![f.label.as_str().to_string()];
        rec.extend(f.feature.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Role, TokenSequence};
    use rand::Rng;

    fn gram(points: &[[f64; 2]]) -> Vec<f64> {
        let mut out = Vec::new();
        for a in points {
            for b in points {
                out.push(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        out
    }

    #[test]
    fn two_dimensional_input_is_an_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut pts: Vec<Vec<f64>> = (0..30)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-1.0..1.0)])
            .collect();
        let mean: Vec<f64> = (0..2)
            .map(|j| pts.iter().map(|p| p[j]).sum::<f64>() / 30.0)
            .collect();
        for p in &mut pts {
            p[0] -= mean[0];
            p[1] -= mean[1];
        }
        let proj = pca_2d(&pts).unwrap();
        let original: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
        for (a, b) in gram(&original).iter().zip(gram(&proj.points)) {
            assert!((a - b).abs() < 1e-6);
        }
        let total: f64 = proj.explained_variance_ratio.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rank_two_data_is_fully_captured() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let b1: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b2: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let feats: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let (s, t): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                b1.iter()
                    .zip(&b2)
                    .map(|(x, y)| s * x + t * y + 0.5)
                    .collect()
            })
            .collect();
        let proj = pca_2d(&feats).unwrap();
        let total: f64 = proj.explained_variance_ratio.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        assert!(proj.explained_variance_ratio[0] >= proj.explained_variance_ratio[1]);
        for c in &proj.components {
            let lead = c
                .iter()
                .copied()
                .fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(lead > 0.0);
            assert!((dot(c, c) - 1.0).abs() < 1e-12);
        }
        assert!(dot(&proj.components[0], &proj.components[1]).abs() < 1e-9);
    }

    #[test]
    fn duplicated_points_project_identically() {
        let base = vec![
            vec![1.0, 0.0, 2.0],
            vec![0.0, 1.0, -1.0],
            vec![3.0, 3.0, 0.5],
        ];
        let mut doubled = base.clone();
        doubled.extend(base.clone());
        let proj = pca_2d(&doubled).unwrap();
        for i in 0..3 {
            assert_eq!(proj.points[i], proj.points[i + 3]);
        }
        assert_eq!(pca_2d(&doubled).unwrap(), proj);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            pca_2d(&[vec![1.0, 2.0], vec![1.0, 2.0]]),
            Err(Error::ZeroVariance)
        ));
        assert!(pca_2d(&[vec![1.0, 2.0]]).is_err());
        assert!(pca_2d(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        // rank one: second component carries no variance but is still unit
        let proj = pca_2d(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]).unwrap();
        assert!(proj.explained_variance_ratio[1].abs() < 1e-12);
        assert!(proj.points.iter().all(|p| p[1].abs() < 1e-12));
    }

    #[test]
    fn features_per_triple() {
        let params = ModelParams::init(4, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut make = |role| {
            let data = (0..8)
                .map(|_| {
                    0.3 * {
                        let x: f64 = StandardNormal.sample(&mut rng);
                        x
                    }
                })
                .collect();
            TokenSequence::new(role, 4, data).unwrap()
        };
        let owned: Vec<_> = (0..10)
            .map(|_| (make(Role::Question), make(Role::Answer), make(Role::Answer)))
            .collect();
        let mut refs: Vec<TripleRef<'_>> = owned
            .iter()
            .map(|(q, p, n)| TripleRef {
                question: q,
                positive: p,
                negative: n,
            })
            .collect();
        let feats = extract_pair_features(&params, &refs, 1e-5).unwrap();
        assert_eq!(feats.len(), 20);
        let positives = feats
            .iter()
            .filter(|f| f.label == PairLabel::Positive)
            .count();
        assert_eq!(positives, 10);
        assert!(feats.iter().all(|f| f.feature.len() == 2 * 3 + 3));

        refs[0].positive = refs[0].question;
        let feats = extract_pair_features(&params, &refs, 1e-5).unwrap();
        assert_eq!(feats[0].distance(), 0.0);
        assert!(extract_pair_features(&params, &[], 1e-5).is_err());
    }

    #[test]
    fn csv_headers() {
        let feats = vec![
            PairFeature {
                label: PairLabel::Positive,
                feature: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            },
            PairFeature {
                label: PairLabel::Negative,
                feature: vec![0.5, 0.1, 0.9, 0.4, 0.2],
            },
        ];
        let rows: Vec<Vec<f64>> = feats.iter().map(|f| f.feature.clone()).collect();
        let proj = pca_2d(&rows).unwrap();
        let mut buf = Vec::new();
        write_projection_csv(&feats, &proj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,x,y\npositive,"));
        assert_eq!(text.lines().count(), 3);

        let mut buf = Vec::new();
        write_features_csv(&feats, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("label,f_0,f_1,f_2,f_3,f_4\n"));
    }
}
