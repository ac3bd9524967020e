use std::collections::VecDeque;

/// Label of points that belong to no cluster.
pub const NOISE: i32 = -1;

/// DBSCAN over points of any dimension (`data.len() / dim` points).
///
/// A point is core when at least `min_points` points, itself included, lie
/// within Euclidean distance `eps` (inclusive). Clusters are numbered from 0
/// in the order the input scan discovers them; a border point reachable
/// from several clusters joins the first one.
pub fn dbscan_nd(data: &[f64], dim: usize, eps: f64, min_points: usize) -> Vec<i32> {
    let n = data.len().checked_div(dim).unwrap_or(0);
    let eps2 = eps * eps;
    let point = |i: usize| &data[i * dim..(i + 1) * dim];
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| {
                    let d2: f64 = point(i).iter().zip(point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    d2 <= eps2
                })
                .collect()
        })
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_points).collect();

    let mut labels: Vec<Option<i32>> = vec![None; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if labels[start].is_some() || !is_core[start] {
            continue;
        }
        let id = next;
        next += 1;
        labels[start] = Some(id);
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if labels[q].is_none() {
                    labels[q] = Some(id);
                    if is_core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
    }
    labels.into_iter().map(|l| l.unwrap_or(NOISE)).collect()
}

/// DBSCAN on planar points.
pub fn dbscan(points: &[[f64; 2]], eps: f64, min_points: usize) -> Vec<i32> {
    let flat: Vec<f64> = points.iter().flat_map(|p| p.iter().copied()).collect();
    dbscan_nd(&flat, 2, eps, min_points)
}
