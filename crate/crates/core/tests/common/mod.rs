//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use agv_estimation::traffic_graph::{load_graph, CostMap, TrafficGraph};
use agv_estimation::{ArcId, NodeId};
use rand::Rng;

/// Least squares by Gaussian elimination with partial pivoting on the
/// normal equations. `None` when the system is singular.
pub fn batch_least_squares(rows: &[Vec<f64>], ys: &[f64]) -> Option<Vec<f64>> {
    batch_ridge(rows, ys, 0.0)
}

/// Minimiser of Σ(y − xᵀθ)² + ridge·|θ|², which is what recursive least
/// squares started from θ = 0, P = I/ridge and λ = 1 computes exactly.
pub fn batch_ridge(rows: &[Vec<f64>], ys: &[f64], ridge: f64) -> Option<Vec<f64>> {
    let n = rows.first()?.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = ridge;
    }
    for (x, &y) in rows.iter().zip(ys) {
        for i in 0..n {
            for j in 0..n {
                a[i][j] += x[i] * x[j];
            }
            a[i][n] += x[i] * y;
        }
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=n {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Sum of costs along `arcs`, left to right.
pub fn seq_cost(costs: &CostMap, arcs: &[ArcId]) -> f64 {
    arcs.iter().fold(0.0, |acc, a| acc + costs[a])
}

/// Every simple path from `src` to `dst`, sorted by (cost, arc sequence).
pub fn all_simple_paths(
    graph: &TrafficGraph,
    costs: &CostMap,
    src: &NodeId,
    dst: &NodeId,
) -> Vec<(f64, Vec<ArcId>)> {
    fn dfs(
        graph: &TrafficGraph,
        node: &NodeId,
        dst: &NodeId,
        visited: &mut Vec<NodeId>,
        arcs: &mut Vec<ArcId>,
        out: &mut Vec<Vec<ArcId>>,
    ) {
        if node == dst {
            out.push(arcs.clone());
            return;
        }
        for arc in graph.outgoing(node) {
            if visited.contains(&arc.to) {
                continue;
            }
            visited.push(arc.to.clone());
            arcs.push(arc.id.clone());
            dfs(graph, &arc.to, dst, visited, arcs, out);
            arcs.pop();
            visited.pop();
        }
    }
    let mut out = Vec::new();
    dfs(
        graph,
        src,
        dst,
        &mut vec![src.clone()],
        &mut Vec::new(),
        &mut out,
    );
    let mut scored: Vec<(f64, Vec<ArcId>)> =
        out.into_iter().map(|p| (seq_cost(costs, &p), p)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    scored
}

/// Random directed graph with 2..=`max_nodes` nodes. Costs are integers in
/// 1..=9 when `integer` is set, otherwise uniform in [0.5, 10).
pub fn random_graph<R: Rng>(
    rng: &mut R,
    max_nodes: usize,
    integer: bool,
) -> (TrafficGraph, CostMap) {
    let n = rng.gen_range(2..=max_nodes);
    let mut doc = String::new();
    for i in 0..n {
        doc += &format!("node v{i}\n");
    }
    let mut costs = CostMap::new();
    let mut k = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.35) {
                let len: f64 = rng.gen_range(0.5..5.0);
                doc += &format!("arc e{k:02} v{i} v{j} {len}\n");
                let c = if integer {
                    rng.gen_range(1..=9) as f64
                } else {
                    rng.gen_range(0.5..10.0)
                };
                costs.insert(ArcId::from(format!("e{k:02}")), c);
                k += 1;
            }
        }
    }
    (load_graph(&doc).expect("generated graph is valid"), costs)
}

/// Phase checks of a noise-free traversal-time curve: a strictly falling
/// start, a plateau within ±2 % covering at least half the samples, a
/// non-decreasing rise, and a final 5 % whose maximum is at least twice the
/// plateau value. Returns the plateau value.
pub fn check_fall_plateau_rise(d: &[f64]) -> Result<f64, String> {
    let n = d.len();
    if n < 100 {
        return Err(format!("only {n} samples"));
    }
    let mut fall_end = 0;
    while fall_end + 1 < n && d[fall_end + 1] < d[fall_end] {
        fall_end += 1;
    }
    if fall_end < n / 100 {
        return Err(format!("falling phase covers only {fall_end} samples"));
    }
    let plateau = d[fall_end];
    let mut plateau_end = fall_end;
    while plateau_end + 1 < n && (d[plateau_end + 1] - plateau).abs() <= 0.02 * plateau {
        plateau_end += 1;
    }
    let plateau_len = plateau_end - fall_end + 1;
    if plateau_len < n / 2 {
        return Err(format!("plateau covers only {plateau_len} of {n} samples"));
    }
    if let Some(i) = (plateau_end + 1..n).find(|&i| d[i] < d[i - 1]) {
        return Err(format!("curve falls again at sample {i} after the plateau"));
    }
    let tail = &d[n - n / 20..];
    let peak = tail.iter().cloned().fold(f64::MIN, f64::max);
    if peak < 2.0 * plateau {
        return Err(format!(
            "tail maximum {peak} below twice the plateau {plateau}"
        ));
    }
    Ok(plateau)
}
