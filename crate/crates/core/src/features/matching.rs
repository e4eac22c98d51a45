//! Ratio-test descriptor matching and match-cluster concentration.

use rayon::prelude::*;

use super::{DescriptorSet, Match, MatchSet};

/// Lowe-style ratio matching: for every query descriptor find the nearest and
/// second-nearest train descriptors by Euclidean distance and keep the pair
/// iff `d1 / d2 < ratio`.
///
/// Semantics are pinned for oracle comparison: distances accumulate in index
/// order as `f32`, the first train index wins ties, and the stored distance
/// is the square root of the accumulated squared distance. Queries are
/// scanned independently, so the internal parallelism cannot change the
/// result.
pub fn match_ratio(query: &DescriptorSet, train: &DescriptorSet, ratio: f32) -> MatchSet {
    assert!(ratio > 0.0 && ratio < 1.0, "ratio must be in (0, 1)");
    if train.descriptors.len() < 2 {
        return MatchSet {
            matches: Vec::new(),
            insufficient_train: true,
        };
    }
    let matches: Vec<Match> = query
        .descriptors
        .par_iter()
        .enumerate()
        .filter_map(|(qi, q)| {
            let mut best = f32::INFINITY;
            let mut best_idx = 0usize;
            let mut second = f32::INFINITY;
            for (ti, t) in train.descriptors.iter().enumerate() {
                let d = q.distance_sq(t);
                if d < best {
                    second = best;
                    best = d;
                    best_idx = ti;
                } else if d < second {
                    second = d;
                }
            }
            let d1 = best.sqrt();
            let d2 = second.sqrt();
            if d1 < ratio * d2 {
                Some(Match {
                    query: qi,
                    train: best_idx,
                    distance: d1,
                })
            } else {
                None
            }
        })
        .collect();
    MatchSet {
        matches,
        insufficient_train: false,
    }
}

/// Result of [`concentration_score`].
#[derive(Debug, Clone, Copy)]
pub struct Concentration {
    /// Fraction of matched points within `1.5 * expected_radius` of the
    /// centroid; 0 when there are no matches.
    pub score: f64,
    /// Centroid of the matched frame points; `None` for an empty match set.
    pub centroid: Option<(f64, f64)>,
}

/// How tightly the matched points cluster in the frame.
///
/// `frame_points` is indexed by train descriptor index and gives the frame
/// position of each train descriptor (typically the train keypoint position).
pub fn concentration_score(
    matches: &MatchSet,
    frame_points: &[(f64, f64)],
    expected_radius: f64,
) -> Concentration {
    if matches.matches.is_empty() {
        return Concentration {
            score: 0.0,
            centroid: None,
        };
    }
    let pts: Vec<(f64, f64)> = matches
        .matches
        .iter()
        .map(|m| frame_points[m.train])
        .collect();
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let limit = 1.5 * expected_radius;
    let inside = pts
        .iter()
        .filter(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt() <= limit)
        .count();
    Concentration {
        score: inside as f64 / n,
        centroid: Some((cx, cy)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Descriptor, DESCRIPTOR_LEN};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_descriptor_set(rng: &mut ChaCha8Rng, n: usize) -> DescriptorSet {
        let mut set = DescriptorSet::default();
        for i in 0..n {
            let mut v = [0.0f32; DESCRIPTOR_LEN];
            for x in &mut v {
                *x = rng.gen::<f32>();
            }
            let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
            for x in &mut v {
                *x /= norm;
            }
            set.descriptors.push(Descriptor(v));
            set.keypoint_index.push(i);
        }
        set
    }

    #[test]
    fn identical_sets_self_match_at_distance_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let set = random_descriptor_set(&mut rng, 24);
        let out = match_ratio(&set, &set, 0.75);
        assert_eq!(out.matches.len(), 24);
        for m in &out.matches {
            assert_eq!(m.query, m.train);
            assert_eq!(m.distance, 0.0);
        }
    }

    #[test]
    fn noise_train_set_rarely_survives_ratio() {
        // Random unit vectors in 128 dims concentrate distances tightly, so
        // the nearest/second-nearest gap is small and the ratio test prunes
        // nearly everything.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let q = random_descriptor_set(&mut rng, 200);
        let t = random_descriptor_set(&mut rng, 200);
        let out = match_ratio(&q, &t, 0.75);
        assert!(
            (out.matches.len() as f64) < 0.05 * 200.0,
            "{} of 200 noise queries survived",
            out.matches.len()
        );
    }

    #[test]
    fn tiny_train_set_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_descriptor_set(&mut rng, 5);
        let t = random_descriptor_set(&mut rng, 1);
        let out = match_ratio(&q, &t, 0.75);
        assert!(out.insufficient_train);
        assert!(out.matches.is_empty());
    }

    #[test]
    fn concentration_degenerate_cases() {
        let mk = |n: usize| MatchSet {
            matches: (0..n)
                .map(|i| Match {
                    query: i,
                    train: i,
                    distance: 0.0,
                })
                .collect(),
            insufficient_train: false,
        };
        // All matches at one point.
        let pts = vec![(10.0, 20.0); 6];
        let c = concentration_score(&mk(6), &pts, 5.0);
        assert_eq!(c.score, 1.0);
        assert_eq!(c.centroid, Some((10.0, 20.0)));
        // Single match.
        let c = concentration_score(&mk(1), &[(3.0, 4.0)], 2.0);
        assert_eq!(c.score, 1.0);
        assert_eq!(c.centroid, Some((3.0, 4.0)));
        // Empty.
        let c = concentration_score(&mk(0), &[], 2.0);
        assert_eq!(c.score, 0.0);
        assert!(c.centroid.is_none());
    }

    #[test]
    fn concentration_half_cluster_half_spread() {
        // Cluster at the frame center so the uniform half does not drag the
        // centroid away from it.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1000usize;
        let mut pts = Vec::new();
        for i in 0..n {
            if i < n / 2 {
                pts.push((
                    1000.0 + rng.gen_range(-2.0..2.0),
                    1000.0 + rng.gen_range(-2.0..2.0),
                ));
            } else {
                pts.push((rng.gen_range(0.0..2000.0), rng.gen_range(0.0..2000.0)));
            }
        }
        let matches = MatchSet {
            matches: (0..n)
                .map(|i| Match {
                    query: i,
                    train: i,
                    distance: 0.0,
                })
                .collect(),
            insufficient_train: false,
        };
        let c = concentration_score(&matches, &pts, 60.0);
        assert!(
            (c.score - 0.5).abs() <= 0.1,
            "expected ~0.5 concentration, got {}",
            c.score
        );
    }

    #[test]
    fn concentration_is_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect();
        let shifted: Vec<(f64, f64)> = pts.iter().map(|p| (p.0 + 311.5, p.1 - 40.25)).collect();
        let matches = MatchSet {
            matches: (0..50)
                .map(|i| Match {
                    query: i,
                    train: i,
                    distance: 0.0,
                })
                .collect(),
            insufficient_train: false,
        };
        let a = concentration_score(&matches, &pts, 10.0);
        let b = concentration_score(&matches, &shifted, 10.0);
        assert_eq!(a.score, b.score);
    }
}
