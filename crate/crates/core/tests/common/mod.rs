//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's solvers or traversals; the point is to recompute answers by
//! a different route.

#![allow(dead_code)]

use dcm_core::{Digraph, SccReport};
use rand::Rng;

/// Smallest root of `h(z) = z` on `[0, 1)` for a supercritical PGF, by
/// bisection on the sign of `h(z) − z`. `h(0) > 0` and `h(z) < z` just below
/// the root, so the bracket `[0, hi]` with `h(hi) < hi` isolates it.
pub fn bisect_fixed_point(h: impl Fn(f64) -> f64) -> f64 {
    let mut hi = 1.0 - 1e-3;
    while h(hi) - hi >= 0.0 {
        hi = 1.0 - (1.0 - hi) / 2.0;
        assert!(hi < 1.0, "no root below 1");
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Principal branch of Lambert W on `[-1/e, 0]` by Halley steps.
pub fn lambert_w0(x: f64) -> f64 {
    assert!((-1.0 / std::f64::consts::E..=0.0).contains(&x));
    let mut w = if x > -0.3 {
        x
    } else {
        -1.0 + (2.0 * (1.0 + std::f64::consts::E * x)).sqrt()
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    w
}

/// Extinction probability of Poisson(ν) offspring: `−W₀(−ν e^{−ν}) / ν`.
pub fn poisson_extinction(nu: f64) -> f64 {
    -lambert_w0(-nu * (-nu).exp()) / nu
}

/// Canonical partition: each class sorted, classes sorted by their first node.
pub fn partition_from_labels(labels: &[usize]) -> Vec<Vec<usize>> {
    let mut classes: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (v, &c) in labels.iter().enumerate() {
        classes.entry(c).or_default().push(v);
    }
    let mut out: Vec<Vec<usize>> = classes.into_values().collect();
    out.sort();
    out
}

/// Strong components from a boolean transitive closure (Warshall).
pub fn closure_partition(g: &Digraph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut reach = vec![vec![false; n]; n];
    for (v, row) in reach.iter_mut().enumerate() {
        row[v] = true;
    }
    for &(u, v) in g.arcs() {
        reach[u][v] = true;
    }
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut() {
            if row[k] {
                for (cell, &through) in row.iter_mut().zip(&via) {
                    *cell |= through;
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    for v in 0..n {
        if label[v] == usize::MAX {
            for u in v..n {
                if reach[v][u] && reach[u][v] {
                    label[u] = v;
                }
            }
        }
    }
    partition_from_labels(&label)
}

pub fn report_partition(r: &SccReport) -> Vec<Vec<usize>> {
    partition_from_labels(&r.component_ids)
}

/// Simple cycles by length, found by testing every nonempty arc subset: a
/// subset is one cycle iff every touched node has exactly one outgoing and one
/// incoming subset arc and following the arcs from any one of them visits all.
/// Index `k − 1` holds the count for length `k`.
pub fn cycles_by_arc_subsets(g: &Digraph, max_length: usize) -> Vec<u64> {
    let arcs = g.arcs();
    let m = arcs.len();
    assert!(m <= 20, "subset oracle is exponential in the arc count");
    let mut counts = vec![0u64; max_length];
    for mask in 1u32..(1u32 << m) {
        let len = mask.count_ones() as usize;
        if len > max_length {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..m)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| arcs[i])
            .collect();
        let mut out_deg = std::collections::HashMap::new();
        let mut in_deg = std::collections::HashMap::new();
        let mut next = std::collections::HashMap::new();
        for &(u, v) in &chosen {
            *out_deg.entry(u).or_insert(0) += 1;
            *in_deg.entry(v).or_insert(0) += 1;
            next.insert(u, v);
        }
        let regular = out_deg.len() == in_deg.len()
            && out_deg
                .iter()
                .all(|(u, &d)| d == 1 && in_deg.get(u) == Some(&1));
        if !regular {
            continue;
        }
        let start = chosen[0].0;
        let mut v = next[&start];
        let mut steps = 1;
        while v != start {
            v = next[&v];
            steps += 1;
        }
        if steps == len {
            counts[len - 1] += 1;
        }
    }
    counts
}

/// `m` arcs with endpoints uniform on `[0, n)`, loops and repeats allowed.
pub fn random_multidigraph<R: Rng>(n: usize, m: usize, rng: &mut R) -> Digraph {
    let arcs = (0..m)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n)))
        .collect();
    Digraph::from_arcs(n, arcs).expect("endpoints are in range")
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

pub fn sample_variance(values: &[f64]) -> f64 {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
}
