//! k-means state abstraction: min-max normalization, feature weighting,
//! k-means++ seeding and Lloyd iterations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::FeatureVector;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the dataset size {n}")]
    TooFewPoints { k: usize, n: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feature weights differ between rows")]
    WeightMismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl NormParams {
    pub fn fit(rows: &[Vec<f64>]) -> NormParams {
        let dim = rows.first().map_or(0, Vec::len);
        let mut min = vec![f64::INFINITY; dim];
        let mut max = vec![f64::NEG_INFINITY; dim];
        for r in rows {
            for (i, x) in r.iter().enumerate() {
                min[i] = min[i].min(*x);
                max[i] = max[i].max(*x);
            }
        }
        NormParams { min, max }
    }

    /// Maps into [0, 1] on the fitted range; constant columns map to 0.
    /// Values outside the range are not clamped.
    pub fn normalize(&self, i: usize, x: f64) -> f64 {
        let span = self.max[i] - self.min[i];
        if span > 0.0 {
            (x - self.min[i]) / span
        } else {
            0.0
        }
    }
}

/// Running mean of the turn at which episodes occupy a cluster.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterTurn {
    pub mean: f64,
    pub count: u64,
}

impl ClusterTurn {
    pub fn fold(&mut self, x: f64) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub weights: Vec<f64>,
    pub norm_params: NormParams,
    /// In normalized, weighted space.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub iterations: usize,
    pub cluster_turns: Vec<ClusterTurn>,
}

/// Lloyd's result in whatever space the points were given in.
#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid, lowest index on ties.
pub fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

/// k-means++ seeding. The first centre is a uniform index; each further
/// centre is drawn with probability proportional to the squared distance
/// to the closest centre chosen so far.
pub fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centres = vec![points[rng.gen_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centres[0])).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, d) in d2.iter().enumerate() {
                if *d <= 0.0 {
                    continue;
                }
                acc += d;
                if r < acc {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave r just past the last bucket
            pick.unwrap_or_else(|| d2.iter().rposition(|d| *d > 0.0).expect("total > 0"))
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[pick].clone();
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c));
        }
        centres.push(c);
    }
    centres
}

fn assign_all(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centroids)).collect()
}

/// Lloyd's algorithm from k-means++ seeds. Stops when assignments no longer
/// change or after `max_iter` update steps. A cluster left empty by an
/// update is moved onto the point farthest from its current centroid.
pub fn lloyd(
    points: &[Vec<f64>],
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<KMeans, ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if k > points.len() {
        return Err(ClusterError::TooFewPoints { k, n: points.len() });
    }
    let dim = points[0].len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(ClusterError::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(points, k, &mut rng);
    let mut assign = assign_all(points, &centroids);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assign) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut taken = vec![false; points.len()];
        let mut next = Vec::with_capacity(k);
        for j in 0..k {
            if counts[j] > 0 {
                next.push(sums[j].iter().map(|s| s / counts[j] as f64).collect());
            } else {
                let mut far = None;
                let mut far_d = f64::NEG_INFINITY;
                for (i, p) in points.iter().enumerate() {
                    let d = sq_dist(p, &centroids[assign[i]]);
                    if !taken[i] && d > far_d {
                        far = Some(i);
                        far_d = d;
                    }
                }
                let i = far.expect("k <= n leaves a free point");
                taken[i] = true;
                next.push(points[i].clone());
            }
        }
        centroids = next;
        let new_assign = assign_all(points, &centroids);
        let done = new_assign == assign;
        assign = new_assign;
        if done {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&assign)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum();
    Ok(KMeans {
        centroids,
        assignments: assign,
        inertia,
        iterations,
    })
}

impl ClusterModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Normalized and weighted coordinates of a raw feature row.
    pub fn transform(&self, values: &[f64]) -> Result<Vec<f64>, ClusterError> {
        if values.len() != self.dim() {
            return Err(ClusterError::DimensionMismatch {
                expected: self.dim(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .enumerate()
            .map(|(i, x)| self.weights[i] * self.norm_params.normalize(i, *x))
            .collect())
    }

    /// Centroids mapped back to raw feature units. Columns with zero weight
    /// or zero range come back as the column minimum.
    pub fn centroids_raw(&self) -> Vec<Vec<f64>> {
        self.centroids
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .map(|(i, y)| {
                        let (lo, hi, w) = (
                            self.norm_params.min[i],
                            self.norm_params.max[i],
                            self.weights[i],
                        );
                        if w > 0.0 {
                            lo + y / w * (hi - lo)
                        } else {
                            lo
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Fits normalization on the dataset, then clusters the weighted rows.
pub fn fit_clusters(
    dataset: &[FeatureVector],
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<ClusterModel, ClusterError> {
    if k == 0 {
        return Err(ClusterError::ZeroK);
    }
    if k > dataset.len() {
        return Err(ClusterError::TooFewPoints {
            k,
            n: dataset.len(),
        });
    }
    let weights = dataset[0].weights.clone();
    for v in dataset {
        if v.values.len() != weights.len() {
            return Err(ClusterError::DimensionMismatch {
                expected: weights.len(),
                got: v.values.len(),
            });
        }
        if v.weights != weights {
            return Err(ClusterError::WeightMismatch);
        }
    }
    let raw: Vec<Vec<f64>> = dataset.iter().map(|v| v.values.clone()).collect();
    let mut model = ClusterModel {
        k,
        weights,
        norm_params: NormParams::fit(&raw),
        centroids: Vec::new(),
        inertia: 0.0,
        iterations: 0,
        cluster_turns: vec![ClusterTurn::default(); k],
    };
    let points = raw
        .iter()
        .map(|r| model.transform(r))
        .collect::<Result<Vec<_>, _>>()?;
    let km = lloyd(&points, k, max_iter, seed)?;
    model.centroids = km.centroids;
    model.inertia = km.inertia;
    model.iterations = km.iterations;
    Ok(model)
}

/// Closest centroid in weighted space; ties go to the lowest cluster id.
pub fn assign_cluster(vector: &FeatureVector, model: &ClusterModel) -> Result<usize, ClusterError> {
    Ok(nearest(&model.transform(&vector.values)?, &model.centroids))
}
