//! Breadth-first expansion on realized graphs and the linear core.
//!
//! Level `t` of a forward expansion counts the arcs leaving the nodes at arc
//! distance `t − 1` from the start set, i.e. the tails at distance `t`; so the
//! first level is the out-degree of the start set. Backward expansion is the
//! same on in-arcs. The expansion time `t_ω` is the first level holding at
//! least `ω` half-edges.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::Digraph;
use crate::scc::{strongly_connected_components, tarjan, Condensation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Traversal {
    Forward,
    Backward,
}

/// How membership in the linear core is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreCriterion {
    /// Both expansions from `v` reach a level of at least `ω` half-edges.
    LevelThreshold,
    /// Both expansions from `v` reach at least `ω` half-edges in total.
    ReachableCount,
}

impl std::str::FromStr for CoreCriterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "level-threshold" | "level" => Ok(CoreCriterion::LevelThreshold),
            "reachable-count" | "reach" => Ok(CoreCriterion::ReachableCount),
            other => Err(Error::InvalidConfig(format!(
                "unknown core criterion {other:?}"
            ))),
        }
    }
}

/// `⌈ln² n⌉`, the working expansion threshold at desk scale.
pub fn default_omega(n: usize) -> u64 {
    let l = (n.max(2) as f64).ln();
    (l * l).ceil().max(1.0) as u64
}

/// `ln⁶ n`, the asymptotic threshold; larger than `n` for any practical graph.
pub fn asymptotic_omega(n: usize) -> f64 {
    (n.max(2) as f64).ln().powi(6)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionProfile {
    pub direction: Traversal,
    pub omega: u64,
    /// `level_sizes[i]` is the number of half-edges at distance `i + 1`.
    pub level_sizes: Vec<u64>,
    /// Expansion time, if some level reached `ω`.
    pub t_omega: Option<usize>,
    /// Half-edges counted over all recorded levels.
    pub reachable_halfedges: u64,
}

/// Reusable BFS scratch; `stamp` avoids clearing a visited array per search.
struct Explorer {
    stamp: Vec<u32>,
    epoch: u32,
    frontier: Vec<usize>,
    next: Vec<usize>,
}

enum Stop {
    /// Stop once a level holds at least this many half-edges.
    Level(u64),
    /// Stop once the running total reaches this many half-edges.
    Total(u64),
}

impl Explorer {
    fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            epoch: 0,
            frontier: Vec::new(),
            next: Vec::new(),
        }
    }

    fn bump(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    /// Runs the level-by-level search, calling `on_level` with each level
    /// size; returns whether the stop condition fired.
    fn run(
        &mut self,
        g: &Digraph,
        starts: &[usize],
        direction: Traversal,
        stop: Stop,
        t_max: usize,
        mut on_level: impl FnMut(u64),
    ) -> bool {
        self.bump();
        let epoch = self.epoch;
        self.frontier.clear();
        for &s in starts {
            if self.stamp[s] != epoch {
                self.stamp[s] = epoch;
                self.frontier.push(s);
            }
        }
        let mut total = 0u64;
        let mut t = 1;
        while !self.frontier.is_empty() && t <= t_max {
            self.next.clear();
            let mut level = 0u64;
            for &u in &self.frontier {
                let nbrs = match direction {
                    Traversal::Forward => g.out_neighbors(u),
                    Traversal::Backward => g.in_neighbors(u),
                };
                level += nbrs.len() as u64;
                for &w in nbrs {
                    if self.stamp[w] != epoch {
                        self.stamp[w] = epoch;
                        self.next.push(w);
                    }
                }
            }
            total += level;
            on_level(level);
            match stop {
                Stop::Level(omega) if level >= omega => return true,
                Stop::Total(omega) if total >= omega => return true,
                _ => {}
            }
            std::mem::swap(&mut self.frontier, &mut self.next);
            t += 1;
        }
        false
    }
}

/// Level-by-level expansion from `start_nodes`. Stops at the first level with
/// at least `ω` half-edges. An empty frontier or the `t_max` cap also ends it.
pub fn expand(
    g: &Digraph,
    start_nodes: &[usize],
    direction: Traversal,
    omega: u64,
    t_max: usize,
) -> Result<ExpansionProfile> {
    if start_nodes.is_empty() {
        return Err(Error::OutOfRange("start set is empty".into()));
    }
    if omega == 0 {
        return Err(Error::OutOfRange("omega must be at least 1".into()));
    }
    if let Some(&v) = start_nodes.iter().find(|&&v| v >= g.n()) {
        return Err(Error::OutOfRange(format!("node {v} not in 0..{}", g.n())));
    }
    let mut level_sizes = Vec::new();
    let hit = Explorer::new(g.n()).run(
        g,
        start_nodes,
        direction,
        Stop::Level(omega),
        t_max,
        |level| level_sizes.push(level),
    );
    Ok(ExpansionProfile {
        direction,
        omega,
        t_omega: hit.then_some(level_sizes.len()),
        reachable_halfedges: level_sizes.iter().sum(),
        level_sizes,
    })
}

/// Nodes whose forward and backward expansions both grow past `ω`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinearCore {
    pub members: Vec<usize>,
    pub omega: u64,
    pub criterion: CoreCriterion,
    /// Arcs with both endpoints in the core.
    pub core_edges: usize,
}

impl LinearCore {
    fn from_flags(g: &Digraph, flags: &[bool], omega: u64, criterion: CoreCriterion) -> Self {
        let members = (0..g.n()).filter(|&v| flags[v]).collect();
        let core_edges = g
            .arcs()
            .iter()
            .filter(|&&(u, v)| flags[u] && flags[v])
            .count();
        Self {
            members,
            omega,
            criterion,
            core_edges,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// For each node, whether the half-edges reachable in `direction` (its own
/// included) number at least `omega`. Aggregated over the condensation DAG
/// with capped reachable sets, so the cost is about `O((n + m) · ω)` at worst.
fn reach_at_least(g: &Digraph, cond: &Condensation, direction: Traversal, omega: u64) -> Vec<bool> {
    let k = cond.count;
    let mut weight = vec![0u64; k];
    let mut start = vec![0usize; k + 1];
    for v in 0..g.n() {
        let c = cond.comp[v];
        weight[c] += match direction {
            Traversal::Forward => g.out_degree(v),
            Traversal::Backward => g.in_degree(v),
        } as u64;
        start[c + 1] += 1;
    }
    for c in 0..k {
        start[c + 1] += start[c];
    }
    let mut members = vec![0usize; g.n()];
    let mut cursor = start.clone();
    for v in 0..g.n() {
        let c = cond.comp[v];
        members[cursor[c]] = v;
        cursor[c] += 1;
    }

    // None = saturated; Some(list) = reachable positive-weight components, total < ω.
    let mut state: Vec<Option<Vec<u32>>> = vec![Some(Vec::new()); k];
    let mut mark = vec![usize::MAX; k];
    // Forward successors have smaller labels, so ascending order sees them first.
    let order: Box<dyn Iterator<Item = usize>> = match direction {
        Traversal::Forward => Box::new(0..k),
        Traversal::Backward => Box::new((0..k).rev()),
    };
    for c in order {
        let mut list: Vec<u32> = Vec::new();
        let mut total = weight[c];
        let mut saturated = total >= omega;
        mark[c] = c;
        if weight[c] > 0 {
            list.push(c as u32);
        }
        'nodes: for &v in &members[start[c]..start[c + 1]] {
            if saturated {
                break;
            }
            let nbrs = match direction {
                Traversal::Forward => g.out_neighbors(v),
                Traversal::Backward => g.in_neighbors(v),
            };
            for &w in nbrs {
                let d = cond.comp[w];
                if d == c {
                    continue;
                }
                match &state[d] {
                    None => {
                        saturated = true;
                        break 'nodes;
                    }
                    Some(reached) => {
                        for &e in reached {
                            let e = e as usize;
                            if mark[e] != c {
                                mark[e] = c;
                                list.push(e as u32);
                                total += weight[e];
                                if total >= omega {
                                    saturated = true;
                                    break 'nodes;
                                }
                            }
                        }
                    }
                }
            }
        }
        state[c] = if saturated { None } else { Some(list) };
    }
    (0..g.n()).map(|v| state[cond.comp[v]].is_none()).collect()
}

/// The linear core. Reachable half-edge totals come from the condensation;
/// for the level criterion, only nodes passing that filter (a level never
/// exceeds the total) are searched level by level, in parallel.
pub fn linear_core(g: &Digraph, omega: u64, criterion: CoreCriterion) -> LinearCore {
    let omega = omega.max(1);
    let cond = tarjan(g);
    let fwd = reach_at_least(g, &cond, Traversal::Forward, omega);
    let bwd = reach_at_least(g, &cond, Traversal::Backward, omega);
    let candidates: Vec<bool> = fwd.iter().zip(&bwd).map(|(a, b)| *a && *b).collect();
    let flags = match criterion {
        CoreCriterion::ReachableCount => candidates,
        CoreCriterion::LevelThreshold => (0..g.n())
            .into_par_iter()
            .map_init(
                || Explorer::new(g.n()),
                |ex, v| {
                    candidates[v]
                        && ex.run(
                            g,
                            &[v],
                            Traversal::Forward,
                            Stop::Level(omega),
                            usize::MAX,
                            |_| {},
                        )
                        && ex.run(
                            g,
                            &[v],
                            Traversal::Backward,
                            Stop::Level(omega),
                            usize::MAX,
                            |_| {},
                        )
                },
            )
            .collect(),
    };
    LinearCore::from_flags(g, &flags, omega, criterion)
}

/// The linear core by the definition: two independent searches per node.
pub fn linear_core_direct(g: &Digraph, omega: u64, criterion: CoreCriterion) -> LinearCore {
    let omega = omega.max(1);
    let stop = || match criterion {
        CoreCriterion::LevelThreshold => Stop::Level(omega),
        CoreCriterion::ReachableCount => Stop::Total(omega),
    };
    let mut ex = Explorer::new(g.n());
    let flags: Vec<bool> = (0..g.n())
        .map(|v| {
            ex.run(g, &[v], Traversal::Forward, stop(), usize::MAX, |_| {})
                && ex.run(g, &[v], Traversal::Backward, stop(), usize::MAX, |_| {})
        })
        .collect();
    LinearCore::from_flags(g, &flags, omega, criterion)
}

/// Sizes of `core \ giant` and `giant \ core`, using the level criterion.
pub fn core_vs_giant(g: &Digraph, omega: u64) -> (usize, usize) {
    let core = linear_core(g, omega, CoreCriterion::LevelThreshold);
    let giant = strongly_connected_components(g).giant_members();
    symmetric_difference(&core.members, &giant)
}

/// `(|a \ b|, |b \ a|)` for sorted node lists.
pub fn symmetric_difference(a: &[usize], b: &[usize]) -> (usize, usize) {
    let (mut i, mut j) = (0, 0);
    let (mut only_a, mut only_b) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                only_a += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                only_b += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    (only_a + a.len() - i, only_b + b.len() - j)
}
