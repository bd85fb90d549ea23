//! K-means grouping of IoT devices and group-to-UAV matching.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::mix_seed;

/// Independent k-means++ restarts; the lowest-SSE run wins.
pub const KMEANS_RESTARTS: u64 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub centroids: Vec<Vec2>,
    /// Group index per input point.
    pub assignment: Vec<usize>,
    /// Sum of squared distances to assigned centroids (m²).
    pub sse: f64,
    /// SSE after every Lloyd iteration of the winning restart.
    pub sse_history: Vec<f64>,
}

fn nearest_centroid(p: Vec2, centroids: &[Vec2]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = (p - *c).norm_sq();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn sse(points: &[Vec2], centroids: &[Vec2], assignment: &[usize]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &g)| (*p - centroids[g]).norm_sq())
        .sum()
}

fn plus_plus_seeds(points: &[Vec2], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec2> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| (*p - centroids[0]).norm_sq()).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[next];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min((*p - c).norm_sq());
        }
    }
    centroids
}

fn update_centroids(points: &[Vec2], assignment: &[usize], centroids: &mut [Vec2]) {
    let k = centroids.len();
    let mut sums = vec![Vec2::ZERO; k];
    let mut counts = vec![0usize; k];
    for (p, &g) in points.iter().zip(assignment) {
        sums[g] += *p;
        counts[g] += 1;
    }
    for g in 0..k {
        if counts[g] > 0 {
            centroids[g] = sums[g] / counts[g] as f64;
        }
    }
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken from a cluster that still has more than one member.
fn repair_empty(points: &[Vec2], centroids: &mut [Vec2], assignment: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &g in assignment.iter() {
            counts[g] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else { return };
        let donor = (0..points.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .max_by(|&a, &b| {
                let da = (points[a] - centroids[assignment[a]]).norm_sq();
                let db = (points[b] - centroids[assignment[b]]).norm_sq();
                // ties resolve to the lower point index
                da.total_cmp(&db).then(b.cmp(&a))
            });
        let Some(i) = donor else { return };
        assignment[i] = empty;
        centroids[empty] = points[i];
    }
}

/// Moves single points between clusters while a move lowers the SSE,
/// updating both means exactly. Lloyd fixed points are not always global
/// optima; this pass escapes many of them.
fn single_moves(points: &[Vec2], centroids: &mut [Vec2], assignment: &mut [usize], history: &mut Vec<f64>) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &g in assignment.iter() {
        counts[g] += 1;
    }
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            let from = assignment[i];
            if counts[from] < 2 {
                continue;
            }
            let nf = counts[from] as f64;
            let loss = nf / (nf - 1.0) * (*p - centroids[from]).norm_sq();
            for to in (0..k).filter(|&g| g != from) {
                let nt = counts[to] as f64;
                let delta = nt / (nt + 1.0) * (*p - centroids[to]).norm_sq() - loss;
                if delta < -1e-12 * loss.max(1.0) && best.is_none_or(|(d, _, _)| delta < d) {
                    best = Some((delta, i, to));
                }
            }
        }
        let Some((_, i, to)) = best else { return };
        let from = assignment[i];
        assignment[i] = to;
        counts[from] -= 1;
        counts[to] += 1;
        update_centroids(points, assignment, centroids);
        history.push(sse(points, centroids, assignment));
    }
}

fn lloyd(points: &[Vec2], mut centroids: Vec<Vec2>, max_iters: usize) -> Partition {
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest_centroid(*p, &centroids)).collect();
    repair_empty(points, &mut centroids, &mut assignment);
    let mut history = vec![sse(points, &centroids, &assignment)];
    for _ in 0..max_iters {
        update_centroids(points, &assignment, &mut centroids);
        let mut next: Vec<usize> = points.iter().map(|p| nearest_centroid(*p, &centroids)).collect();
        repair_empty(points, &mut centroids, &mut next);
        history.push(sse(points, &centroids, &next));
        let stable = next == assignment;
        assignment = next;
        if stable {
            break;
        }
    }
    // leave centroids as the means of the final groups
    update_centroids(points, &assignment, &mut centroids);
    history.push(sse(points, &centroids, &assignment));
    single_moves(points, &mut centroids, &mut assignment, &mut history);
    let final_sse = *history.last().unwrap();
    Partition {
        centroids,
        assignment,
        sse: final_sse,
        sse_history: history,
    }
}

/// K-means with k-means++ seeding and Lloyd iterations, best of
/// [`KMEANS_RESTARTS`] seeded restarts. Deterministic given its inputs.
pub fn kmeans(points: &[Vec2], k: usize, seed: u64, max_iters: usize) -> Result<Partition> {
    if points.is_empty() {
        return Err(Error::config("kmeans needs at least one point"));
    }
    if k == 0 || k > points.len() {
        return Err(Error::config(format!(
            "kmeans needs 1 <= K <= |points|, got K={k} with {} points",
            points.len()
        )));
    }
    let mut best: Option<Partition> = None;
    for restart in 0..KMEANS_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, restart));
        let seeds = plus_plus_seeds(points, k, &mut rng);
        let run = lloyd(points, seeds, max_iters);
        if best.as_ref().map_or(true, |b| run.sse < b.sse) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Greedy matching of T1 start positions to group centroids: repeatedly take
/// the globally closest unmatched (UAV, group) pair. Returns `(uav index, group)`.
pub fn assign_groups(centroids: &[Vec2], uav_positions: &[Vec2]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(centroids.len() * uav_positions.len());
    for (u, p) in uav_positions.iter().enumerate() {
        for (g, c) in centroids.iter().enumerate() {
            pairs.push(((*p - *c).norm(), u, g));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut uav_used = vec![false; uav_positions.len()];
    let mut group_used = vec![false; centroids.len()];
    let mut out = Vec::new();
    for (_, u, g) in pairs {
        if !uav_used[u] && !group_used[g] {
            uav_used[u] = true;
            group_used[g] = true;
            out.push((u, g));
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = [Vec2::new(0.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(1.0, 3.0)];
        let p = kmeans(&pts, 1, 1, 50).unwrap();
        assert!((p.centroids[0] - Vec2::new(1.0, 1.0)).norm() < 1e-12);
        let expected: f64 = pts.iter().map(|q| (*q - Vec2::new(1.0, 1.0)).norm_sq()).sum();
        assert!((p.sse - expected).abs() < 1e-12);
    }

    #[test]
    fn separated_pairs() {
        let pts = [
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(10.0, 0.0),
            Vec2::new(10.0, 1.0),
        ];
        let p = kmeans(&pts, 2, 3, 50).unwrap();
        assert_eq!(p.assignment[0], p.assignment[1]);
        assert_eq!(p.assignment[2], p.assignment[3]);
        assert_ne!(p.assignment[0], p.assignment[2]);
        assert!((p.sse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_many_clusters_rejected() {
        let pts = [Vec2::ZERO, Vec2::new(1.0, 1.0)];
        assert!(matches!(kmeans(&pts, 3, 0, 10), Err(Error::Config(_))));
        assert!(kmeans(&[], 1, 0, 10).is_err());
        assert!(kmeans(&pts, 0, 0, 10).is_err());
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = [Vec2::ZERO; 4];
        let p = kmeans(&pts, 3, 9, 10).unwrap();
        for g in 0..3 {
            assert!(p.assignment.contains(&g));
        }
    }

    #[test]
    fn deterministic_and_nearest() {
        let pts: Vec<Vec2> = (0..30)
            .map(|i| Vec2::new((i * 37 % 101) as f64, (i * 53 % 89) as f64))
            .collect();
        let a = kmeans(&pts, 4, 11, 100).unwrap();
        let b = kmeans(&pts, 4, 11, 100).unwrap();
        assert_eq!(a, b);
        for (p, &g) in pts.iter().zip(&a.assignment) {
            assert_eq!(nearest_centroid(*p, &a.centroids), g);
        }
        for w in a.sse_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
    }

    #[test]
    fn assign_groups_by_proximity() {
        assert_eq!(assign_groups(&[Vec2::new(3.0, 3.0)], &[Vec2::ZERO]), vec![(0, 0)]);
        let m = assign_groups(
            &[Vec2::new(90.0, 0.0), Vec2::new(5.0, 0.0)],
            &[Vec2::new(0.0, 0.0), Vec2::new(100.0, 0.0)],
        );
        assert_eq!(m, vec![(0, 1), (1, 0)]);
    }
}
