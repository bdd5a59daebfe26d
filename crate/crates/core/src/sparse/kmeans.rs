use super::SparseError;
use crate::prec::Rng;

/// Largest number of clusters addressable by an 8-bit id.
pub const MAX_CLUSTERS: usize = 256;

/// Result of [`kmeans1d_detailed`].
#[derive(Debug, Clone)]
pub struct KMeans1d {
    /// Sorted ascending.
    pub centers: Vec<f64>,
    /// Sum of squared distances to the assigned center: after seeding, then
    /// after every Lloyd update.
    pub objective: Vec<f64>,
    pub iterations: usize,
}

/// Sorted cluster centers of `values`.
///
/// When `values` has no more than `k` distinct entries the distinct values
/// themselves are returned.
pub fn kmeans1d(values: &[f64], k: usize, max_iters: usize, rng: &mut Rng) -> Result<Vec<f64>, SparseError> {
    kmeans1d_detailed(values, k, max_iters, rng).map(|r| r.centers)
}

/// k-means++ seeding followed by Lloyd iterations on scalars.
pub fn kmeans1d_detailed(values: &[f64], k: usize, max_iters: usize, rng: &mut Rng) -> Result<KMeans1d, SparseError> {
    if k == 0 || k > MAX_CLUSTERS {
        return Err(SparseError::InvalidParameter(format!("k must lie in 1..={MAX_CLUSTERS}, got {k}")));
    }
    if values.is_empty() {
        return Err(SparseError::DegenerateInput { distinct: 0, k });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SparseError::InvalidParameter("values must be finite".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= k {
        return Ok(KMeans1d {
            objective: vec![0.0],
            centers: distinct,
            iterations: 0,
        });
    }

    let mut centers = seed(&sorted, k, rng);
    centers.sort_by(f64::total_cmp);
    let mut assign: Vec<usize> = sorted.iter().map(|&v| nearest(&centers, v)).collect();
    let mut objective = vec![cost(&sorted, &centers, &assign)];
    let mut iterations = 0;
    for _ in 0..max_iters {
        let mut sum = vec![0.0; k];
        let mut count = vec![0usize; k];
        for (&v, &c) in sorted.iter().zip(&assign) {
            sum[c] += v;
            count[c] += 1;
        }
        for c in 0..k {
            if count[c] > 0 {
                centers[c] = sum[c] / count[c] as f64;
            }
        }
        // Means of ordered, disjoint groups stay ordered; the sort only
        // guards against empty clusters keeping a stale position.
        centers.sort_by(f64::total_cmp);
        iterations += 1;
        let next: Vec<usize> = sorted.iter().map(|&v| nearest(&centers, v)).collect();
        let changed = next != assign;
        assign = next;
        objective.push(cost(&sorted, &centers, &assign));
        if !changed {
            break;
        }
    }
    Ok(KMeans1d {
        centers,
        objective,
        iterations,
    })
}

/// k-means++: each new center is drawn with probability proportional to the
/// squared distance to the nearest center chosen so far.
fn seed(sorted: &[f64], k: usize, rng: &mut Rng) -> Vec<f64> {
    let mut centers = vec![sorted[rng.index(sorted.len())]];
    let mut d2: Vec<f64> = sorted.iter().map(|&v| (v - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut idx = d2.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    idx = i;
                    break;
                }
            }
            // Rounding in the running sum can land on a zero-weight tail entry.
            while d2[idx] == 0.0 {
                idx -= 1;
            }
            idx
        } else {
            break;
        };
        let c = sorted[pick];
        centers.push(c);
        for (w, &v) in d2.iter_mut().zip(sorted) {
            *w = w.min((v - c).powi(2));
        }
    }
    centers
}

/// Index of the center nearest to `v` in a sorted slice; ties go to the
/// lower index.
pub fn nearest(centers: &[f64], v: f64) -> usize {
    let hi = centers.partition_point(|&c| c < v);
    if hi == 0 {
        return 0;
    }
    if hi == centers.len() {
        return hi - 1;
    }
    if v - centers[hi - 1] <= centers[hi] - v {
        hi - 1
    } else {
        hi
    }
}

fn cost(values: &[f64], centers: &[f64], assign: &[usize]) -> f64 {
    values.iter().zip(assign).map(|(&v, &c)| (v - centers[c]).powi(2)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_masses() {
        let c = kmeans1d(&[0.0, 0.0, 1.0, 1.0], 2, 50, &mut Rng::new(1)).unwrap();
        assert_eq!(c, vec![0.0, 1.0]);
    }

    #[test]
    fn two_pairs() {
        for seed in 0..20 {
            let c = kmeans1d(&[0.9, 1.1, 1.9, 2.1], 2, 50, &mut Rng::new(seed)).unwrap();
            assert!((c[0] - 1.0).abs() < 1e-15 && (c[1] - 2.0).abs() < 1e-15, "seed {seed}: {c:?}");
        }
    }

    #[test]
    fn single_cluster_is_mean() {
        let v = [1.0, 2.0, 4.0, 9.0];
        let c = kmeans1d(&v, 1, 10, &mut Rng::new(0)).unwrap();
        assert_eq!(c, vec![4.0]);
    }

    #[test]
    fn degenerate_returns_distinct_values() {
        let c = kmeans1d(&[3.0, 1.0, 3.0], 5, 10, &mut Rng::new(0)).unwrap();
        assert_eq!(c, vec![1.0, 3.0]);
        assert!(kmeans1d(&[], 1, 10, &mut Rng::new(0)).is_err());
        assert!(kmeans1d(&[1.0], 0, 10, &mut Rng::new(0)).is_err());
        assert!(kmeans1d(&[1.0], 257, 10, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn nearest_breaks_ties_low() {
        let c = [0.0, 1.0, 3.0];
        assert_eq!(nearest(&c, 0.5), 0);
        assert_eq!(nearest(&c, 2.0), 1);
        assert_eq!(nearest(&c, 2.1), 2);
        assert_eq!(nearest(&c, -5.0), 0);
        assert_eq!(nearest(&c, 9.0), 2);
    }
}
