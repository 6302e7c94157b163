//! Density-based clustering over 2-D points.

use std::collections::HashMap;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mark {
    Unvisited,
    Noise,
    Cluster(usize),
}

struct Grid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn key(&self, p: [f64; 2]) -> (i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64)
    }

    fn build(points: &[[f64; 2]], cell: f64) -> Self {
        let mut grid = Grid { cell, buckets: HashMap::new() };
        for (i, &p) in points.iter().enumerate() {
            let k = grid.key(p);
            grid.buckets.entry(k).or_default().push(i);
        }
        grid
    }

    fn region(&self, points: &[[f64; 2]], i: usize, eps2: f64, out: &mut Vec<usize>) {
        out.clear();
        let p = points[i];
        let (kx, ky) = self.key(p);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let Some(bucket) = self.buckets.get(&(kx + dx, ky + dy)) else {
                    continue;
                };
                for &j in bucket {
                    let q = points[j];
                    let (ex, ey) = (q[0] - p[0], q[1] - p[1]);
                    if ex * ex + ey * ey <= eps2 {
                        out.push(j);
                    }
                }
            }
        }
    }
}

/// Labels each point with its cluster index, or `None` for noise.
///
/// A point is core when at least `min_pts` points, itself included, lie
/// within Euclidean distance `eps`. Cluster indices follow the order in which
/// their first core point appears; a border point joins the first cluster
/// that reaches it.
pub fn dbscan<T: Scalar>(points: &[[T; 2]], eps: T, min_pts: usize) -> Vec<Option<usize>> {
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0].as_f64(), p[1].as_f64()]).collect();
    let eps = eps.as_f64();
    if pts.is_empty() || !(eps > 0.0) {
        return vec![None; pts.len()];
    }
    let grid = Grid::build(&pts, eps);
    let eps2 = eps * eps;
    let mut marks = vec![Mark::Unvisited; pts.len()];
    let mut next = 0;
    let mut region = Vec::new();
    let mut queue = Vec::new();

    for i in 0..pts.len() {
        if marks[i] != Mark::Unvisited {
            continue;
        }
        grid.region(&pts, i, eps2, &mut region);
        if region.len() < min_pts {
            marks[i] = Mark::Noise;
            continue;
        }
        let c = next;
        next += 1;
        marks[i] = Mark::Cluster(c);
        queue.clear();
        queue.extend_from_slice(&region);
        while let Some(j) = queue.pop() {
            match marks[j] {
                Mark::Noise => {
                    marks[j] = Mark::Cluster(c);
                    continue;
                }
                Mark::Cluster(_) => continue,
                Mark::Unvisited => marks[j] = Mark::Cluster(c),
            }
            grid.region(&pts, j, eps2, &mut region);
            if region.len() >= min_pts {
                queue.extend(region.iter().copied().filter(|&k| !matches!(marks[k], Mark::Cluster(_))));
            }
        }
    }

    marks
        .into_iter()
        .map(|m| match m {
            Mark::Cluster(c) => Some(c),
            _ => None,
        })
        .collect()
}
