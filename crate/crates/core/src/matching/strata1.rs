//! Greedy one-to-one descriptor pairing with a nearest/second-nearest ratio test.

use crate::keypoint::{descriptor_distance, KeypointSet};

use super::types::{MatchPair, MatchSet, Stratum};

/// Pairs gallery and probe keypoints greedily.
///
/// Each round accepts the unpaired `(i, j)` with the smallest descriptor
/// distance (ties by `i`, then `j`) that passes the ratio test: its distance
/// is at most `ratio` times the distance from `i` to the second-nearest
/// unpaired probe keypoint. A gallery keypoint with a single unpaired
/// candidate left has nothing to compare against and passes. Both
/// keypoints are then removed. Rounds continue until no unpaired pair passes.
///
/// A pair that fails the test in one round can pass later, once removals
/// push the second-nearest candidate further away.
pub fn strata1_match(gallery: &KeypointSet, probe: &KeypointSet, ratio: f64) -> MatchSet {
    let (m, n) = (gallery.cardinality(), probe.cardinality());
    if m == 0 || n == 0 {
        return MatchSet::empty(Stratum::R);
    }

    let dist: Vec<Vec<f64>> = gallery
        .keypoints
        .iter()
        .map(|g| {
            probe
                .keypoints
                .iter()
                .map(|p| descriptor_distance(&g.descriptor, &p.descriptor))
                .collect()
        })
        .collect();

    // per gallery keypoint, probe indices by ascending (distance, index)
    let order: Vec<Vec<usize>> = dist
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut gallery_free = vec![true; m];
    let mut probe_free = vec![true; n];
    let mut cursor = vec![0usize; m];
    let mut pairs = Vec::new();

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in (0..m).filter(|&i| gallery_free[i]) {
            let ord = &order[i];
            while cursor[i] < n && !probe_free[ord[cursor[i]]] {
                cursor[i] += 1;
            }
            let Some(&j) = ord.get(cursor[i]) else {
                continue;
            };
            let d1 = dist[i][j];
            let second = ord[cursor[i] + 1..]
                .iter()
                .find(|&&k| probe_free[k])
                .map(|&k| dist[i][k]);
            let passes = match second {
                Some(d2) => d1 <= ratio * d2,
                None => true,
            };
            if !passes {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bi, bj)) => d1.total_cmp(&bd).then(i.cmp(&bi)).then(j.cmp(&bj)).is_lt(),
            };
            if better {
                best = Some((d1, i, j));
            }
        }
        let Some((d, i, j)) = best else { break };
        gallery_free[i] = false;
        probe_free[j] = false;
        pairs.push(MatchPair::new(i, j, d));
    }
    MatchSet::new(Stratum::R, pairs)
}
