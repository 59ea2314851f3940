//! Strongly connected components and short-cycle census.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::generator::Digraph;

/// The quadratic-memory reachability oracle refuses graphs above this order.
pub const ORACLE_MAX_NODES: usize = 256;

pub const DEFAULT_MAX_CYCLE_LENGTH: usize = 12;
pub const DEFAULT_WORK_CAP: u64 = 100_000_000;

/// Component labels in Tarjan emission order: if an arc goes from component
/// `a` to component `b ≠ a`, then `b < a`.
#[derive(Debug, Clone)]
pub(crate) struct Condensation {
    pub comp: Vec<usize>,
    pub count: usize,
}

/// Iterative lowlink search; no recursion, so depth is bounded only by memory.
pub(crate) fn tarjan(g: &Digraph) -> Condensation {
    const UNVISITED: usize = usize::MAX;
    let n = g.n();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNVISITED; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0;
    let mut count = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, 0));

        while let Some(frame) = call.last_mut() {
            let v = frame.0;
            let nbrs = g.out_neighbors(v);
            if frame.1 < nbrs.len() {
                let w = nbrs[frame.1];
                frame.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp[w] = count;
                    if w == v {
                        break;
                    }
                }
                count += 1;
            }
        }
    }
    Condensation { comp, count }
}

/// Strongly connected components of one graph and the largest one's order and size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SccReport {
    /// Component label per node; labels are numbered in order of each
    /// component's smallest node id.
    pub component_ids: Vec<usize>,
    pub component_count: usize,
    /// Label of the giant: a component of maximal order, ties to the smallest node id.
    pub giant_label: Option<usize>,
    /// `v(giant)`.
    pub giant_order: usize,
    /// `e(giant)`: arcs with both endpoints in the giant, loops and parallels included.
    pub giant_size: usize,
    pub second_order: usize,
}

impl SccReport {
    fn from_labels(g: &Digraph, raw: &[usize]) -> Self {
        let n = g.n();
        let mut relabel: Vec<usize> = vec![usize::MAX; n];
        let mut component_ids = vec![0usize; n];
        let mut count = 0;
        for v in 0..n {
            let r = raw[v];
            if relabel[r] == usize::MAX {
                relabel[r] = count;
                count += 1;
            }
            component_ids[v] = relabel[r];
        }
        let mut orders = vec![0usize; count];
        for &c in &component_ids {
            orders[c] += 1;
        }
        // Labels follow smallest node id, so the first maximum wins ties.
        let giant_label = (0..count).fold(None, |best: Option<usize>, c| match best {
            Some(b) if orders[b] >= orders[c] => Some(b),
            _ => Some(c),
        });
        let giant_order = giant_label.map_or(0, |c| orders[c]);
        let second_order = giant_label.map_or(0, |gl| {
            (0..count)
                .filter(|&c| c != gl)
                .map(|c| orders[c])
                .max()
                .unwrap_or(0)
        });
        let giant_size = giant_label.map_or(0, |gl| {
            g.arcs()
                .iter()
                .filter(|&&(u, v)| component_ids[u] == gl && component_ids[v] == gl)
                .count()
        });
        Self {
            component_ids,
            component_count: count,
            giant_label,
            giant_order,
            giant_size,
            second_order,
        }
    }

    pub fn giant_members(&self) -> Vec<usize> {
        match self.giant_label {
            Some(gl) => (0..self.component_ids.len())
                .filter(|&v| self.component_ids[v] == gl)
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn component_orders(&self) -> Vec<usize> {
        let mut orders = vec![0usize; self.component_count];
        for &c in &self.component_ids {
            orders[c] += 1;
        }
        orders
    }
}

pub fn strongly_connected_components(g: &Digraph) -> SccReport {
    let cond = tarjan(g);
    SccReport::from_labels(g, &cond.comp)
}

/// Mutual-reachability classes from the full reachability relation. Used to
/// check [`strongly_connected_components`]; limited to small graphs.
pub fn reachability_oracle(g: &Digraph) -> Result<SccReport> {
    let n = g.n();
    if n > ORACLE_MAX_NODES {
        return Err(Error::TooLarge {
            n,
            limit: ORACLE_MAX_NODES,
        });
    }
    let mut reach = vec![vec![false; n]; n];
    for (s, row) in reach.iter_mut().enumerate() {
        row[s] = true;
        let mut queue = vec![s];
        while let Some(u) = queue.pop() {
            for &w in g.out_neighbors(u) {
                if !row[w] {
                    row[w] = true;
                    queue.push(w);
                }
            }
        }
    }
    let raw: Vec<usize> = (0..n)
        .map(|v| {
            (0..n)
                .find(|&u| reach[u][v] && reach[v][u])
                .expect("every node reaches itself")
        })
        .collect();
    Ok(SccReport::from_labels(g, &raw))
}

/// Number of directed simple cycles of each length up to a cutoff.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleCensus {
    /// Length to count, for every length `1..=max_length`.
    pub counts: BTreeMap<usize, u64>,
    pub max_length: usize,
    /// Set when the enumeration stopped at the work cap; counts are then lower bounds.
    pub truncated: bool,
    pub states_expanded: u64,
}

impl CycleCensus {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, length: usize) -> u64 {
        self.counts.get(&length).copied().unwrap_or(0)
    }

    pub fn longest(&self) -> usize {
        self.counts
            .iter()
            .rev()
            .find(|(_, &c)| c > 0)
            .map_or(0, |(&k, _)| k)
    }
}

/// Counts directed simple cycles of length at most `max_length`.
///
/// A cycle is an arc sequence up to rotation, so parallel arcs give distinct
/// cycles and every loop is a cycle of length 1. Each cycle is found once, from
/// its smallest node, by a backtracking path search confined to that node's
/// strongly connected component.
pub fn cycle_census(g: &Digraph, max_length: usize, work_cap: u64) -> CycleCensus {
    let n = g.n();
    let max_length = max_length.max(1);
    let cond = tarjan(g);
    let mut comp_order = vec![0usize; cond.count];
    for &c in &cond.comp {
        comp_order[c] += 1;
    }
    let mut counts = vec![0u64; max_length + 1];
    let mut on_path = vec![false; n];
    let mut path: Vec<(usize, usize)> = Vec::new();
    let mut work: u64 = 0;
    let mut truncated = false;

    'starts: for s in 0..n {
        let cs = cond.comp[s];
        if comp_order[cs] == 1 && !g.out_neighbors(s).contains(&s) {
            continue;
        }
        on_path[s] = true;
        path.push((s, 0));
        while let Some(&(u, cursor)) = path.last() {
            let nbrs = g.out_neighbors(u);
            if cursor == nbrs.len() {
                on_path[u] = false;
                path.pop();
                continue;
            }
            path.last_mut().unwrap().1 += 1;
            let w = nbrs[cursor];
            let len = path.len();
            if w == s {
                counts[len] += 1;
                #[cfg(debug_assertions)]
                check_closed_simple(g, &path, s);
                continue;
            }
            if w < s || on_path[w] || cond.comp[w] != cs || len >= max_length {
                continue;
            }
            work += 1;
            if work > work_cap {
                truncated = true;
                for &(v, _) in &path {
                    on_path[v] = false;
                }
                path.clear();
                break 'starts;
            }
            on_path[w] = true;
            path.push((w, 0));
        }
    }

    CycleCensus {
        counts: (1..=max_length).map(|k| (k, counts[k])).collect(),
        max_length,
        truncated,
        states_expanded: work,
    }
}

#[cfg(debug_assertions)]
fn check_closed_simple(g: &Digraph, path: &[(usize, usize)], start: usize) {
    let mut nodes: Vec<usize> = path.iter().map(|&(v, _)| v).collect();
    for pair in nodes.windows(2) {
        assert!(g.out_neighbors(pair[0]).contains(&pair[1]), "broken cycle");
    }
    assert!(g.out_neighbors(*nodes.last().unwrap()).contains(&start));
    nodes.sort_unstable();
    assert!(
        nodes.windows(2).all(|w| w[0] != w[1]),
        "cycle repeats a node"
    );
}
