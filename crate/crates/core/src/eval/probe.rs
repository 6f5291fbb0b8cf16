//! Non-uniqueness probe: sample pairs whose curves nearly coincide while
//! their profiles differ substantially.

use serde::{Deserialize, Serialize};

use crate::dataset::Sample;

/// One near-duplicate-curve pair, by sample index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePair {
    pub i: usize,
    pub j: usize,
    /// `2 |y_i - y_j| / (|y_i| + |y_j|)`.
    pub rel_dy: f64,
    /// `2 |x_i - x_j| / (|x_i| + |x_j|)`.
    pub rel_dx: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn rel_distance(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    2.0 * d / (norm(a) + norm(b))
}

/// Finds all pairs with `rel_dy < radius_y` and `rel_dx > threshold_x`.
///
/// Samples are scanned in a window sorted by the first curve value: two
/// curves within `radius_y` relative distance can differ in any single
/// entry by at most `radius_y * max |y|`, which bounds the window width.
/// Pairs come back ordered by `(i, j)`.
pub fn nonuniqueness_probe(samples: &[Sample], radius_y: f64, threshold_x: f64) -> Vec<ProbePair> {
    let n = samples.len();
    if n < 2 {
        return Vec::new();
    }
    let max_norm = samples.iter().map(|s| norm(&s.y)).fold(0.0f64, f64::max);
    let window = radius_y * max_norm;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        samples[a].y[0]
            .partial_cmp(&samples[b].y[0])
            .expect("finite curves")
    });
    let mut pairs = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        for &j in order[pos + 1..].iter() {
            if samples[j].y[0] - samples[i].y[0] > window {
                break;
            }
            let rel_dy = rel_distance(&samples[i].y, &samples[j].y);
            if rel_dy >= radius_y {
                continue;
            }
            let rel_dx = rel_distance(&samples[i].x, &samples[j].x);
            if rel_dx > threshold_x {
                pairs.push(ProbePair {
                    i: i.min(j),
                    j: i.max(j),
                    rel_dy,
                    rel_dx,
                });
            }
        }
    }
    pairs.sort_by_key(|p| (p.i, p.j));
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: Vec<f64>, y: Vec<f64>) -> Sample {
        Sample { x, y }
    }

    #[test]
    fn identical_samples_yield_no_pairs() {
        let s = sample(vec![3.0, 4.0], vec![2.8, 2.9, 3.0]);
        let data = vec![s.clone(), s.clone(), s];
        assert!(nonuniqueness_probe(&data, 0.01, 0.05).is_empty());
    }

    #[test]
    fn close_curves_with_distant_profiles_are_found() {
        let data = vec![
            sample(vec![3.0, 5.0], vec![3.00, 3.10, 3.20]),
            sample(vec![4.0, 4.0], vec![3.001, 3.101, 3.201]),
            sample(vec![3.0, 5.0], vec![9.0, 9.0, 9.0]),
        ];
        let pairs = nonuniqueness_probe(&data, 0.01, 0.05);
        assert_eq!(pairs.len(), 1);
        assert_eq!((pairs[0].i, pairs[0].j), (0, 1));
        assert!(pairs[0].rel_dy < 0.001);
        assert!(pairs[0].rel_dx > 0.2);
    }

    #[test]
    fn windowed_scan_matches_the_exhaustive_oracle() {
        // pseudo-random small dataset; compare against the O(n^2) scan
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let n = 400;
        let samples: Vec<Sample> = (0..n)
            .map(|_| {
                let base = 3.0 + next();
                sample(
                    vec![3.0 + next(), 3.5 + next()],
                    (0..5).map(|d| base + 0.002 * next() + 0.01 * d as f64).collect(),
                )
            })
            .collect();
        let (radius, threshold) = (0.002, 0.1);
        let fast = nonuniqueness_probe(&samples, radius, threshold);
        // oracle: exhaustive pair scan
        let mut slow = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let rel_dy = rel_distance(&samples[i].y, &samples[j].y);
                let rel_dx = rel_distance(&samples[i].x, &samples[j].x);
                if rel_dy < radius && rel_dx > threshold {
                    slow.push(ProbePair {
                        i,
                        j,
                        rel_dy,
                        rel_dx,
                    });
                }
            }
        }
        slow.sort_by_key(|p| (p.i, p.j));
        assert_eq!(fast, slow);
        assert!(!fast.is_empty(), "fixture should produce at least one pair");
    }
}
