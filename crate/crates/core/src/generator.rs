//! Random digraph generation.
//!
//! [`pair_configuration`] realizes the directed configuration model. Every node
//! gets `d⁻` heads and `d⁺` tails; after shuffling the head slots, tail `i` is
//! matched with head `i`. Loops and parallel arcs are kept.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::degree_model::BiDegreeSequence;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

/// Directed multigraph on nodes `0..n` with forward and reverse adjacency.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Digraph {
    n: usize,
    /// Arcs as `(tail, head)` in generation order.
    arcs: Vec<(usize, usize)>,
    #[serde(skip)]
    out_offsets: Vec<usize>,
    #[serde(skip)]
    out_targets: Vec<usize>,
    #[serde(skip)]
    in_offsets: Vec<usize>,
    #[serde(skip)]
    in_sources: Vec<usize>,
}

impl Digraph {
    pub fn from_arcs(n: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(u, v)) = arcs.iter().find(|&&(u, v)| u >= n || v >= n) {
            return Err(Error::InvalidGraph(format!(
                "arc ({u}, {v}) has an endpoint outside 0..{n}"
            )));
        }
        Ok(Self::from_valid_arcs(n, arcs))
    }

    fn from_valid_arcs(n: usize, arcs: Vec<(usize, usize)>) -> Self {
        let (out_offsets, out_targets) = csr(n, arcs.iter().map(|&(u, v)| (u, v)), arcs.len());
        let (in_offsets, in_sources) = csr(n, arcs.iter().map(|&(u, v)| (v, u)), arcs.len());
        Self {
            n,
            arcs,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    pub fn empty(n: usize) -> Self {
        Self::from_valid_arcs(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self) -> &[(usize, usize)] {
        &self.arcs
    }

    /// Heads of the arcs leaving `v`, one entry per arc.
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_targets[self.out_offsets[v]..self.out_offsets[v + 1]]
    }

    /// Tails of the arcs entering `v`, one entry per arc.
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_offsets[v + 1] - self.out_offsets[v]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    /// The graph with every arc turned around.
    pub fn reversed(&self) -> Self {
        Self::from_valid_arcs(self.n, self.arcs.iter().map(|&(u, v)| (v, u)).collect())
    }

    /// Realized `(d⁻, d⁺)` per node.
    pub fn degree_sequence(&self) -> Result<BiDegreeSequence> {
        BiDegreeSequence::new(
            (0..self.n)
                .map(|v| (self.in_degree(v) as u32, self.out_degree(v) as u32))
                .collect(),
        )
    }

    pub fn loop_count(&self) -> usize {
        self.arcs.iter().filter(|&&(u, v)| u == v).count()
    }

    /// Arcs beyond the first between each ordered pair.
    pub fn parallel_excess(&self) -> usize {
        let mut excess = 0;
        let mut scratch = Vec::new();
        for v in 0..self.n {
            scratch.clear();
            scratch.extend_from_slice(self.out_neighbors(v));
            scratch.sort_unstable();
            excess += scratch.windows(2).filter(|w| w[0] == w[1]).count();
        }
        excess
    }

    /// No loops and no parallel arcs.
    pub fn is_simple(&self) -> bool {
        let mut scratch = Vec::new();
        for v in 0..self.n {
            scratch.clear();
            scratch.extend_from_slice(self.out_neighbors(v));
            if scratch.contains(&v) {
                return false;
            }
            scratch.sort_unstable();
            if scratch.windows(2).any(|w| w[0] == w[1]) {
                return false;
            }
        }
        true
    }
}

fn csr(
    n: usize,
    pairs: impl Iterator<Item = (usize, usize)> + Clone,
    m: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = vec![0usize; n + 1];
    for (u, _) in pairs.clone() {
        offsets[u + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut targets = vec![0usize; m];
    for (u, v) in pairs {
        targets[cursor[u]] = v;
        cursor[u] += 1;
    }
    (offsets, targets)
}

/// Uniform pairing of tails with heads. Every perfect matching of the `m`
/// tails to the `m` heads is equally likely; arcs come out in tail order.
pub fn pair_configuration<R: Rng + ?Sized>(seq: &BiDegreeSequence, rng: &mut R) -> Digraph {
    let m = seq.m() as usize;
    let mut tails = Vec::with_capacity(m);
    let mut heads = Vec::with_capacity(m);
    for (v, &(d_in, d_out)) in seq.pairs().iter().enumerate() {
        tails.extend(std::iter::repeat_n(v, d_out as usize));
        heads.extend(std::iter::repeat_n(v, d_in as usize));
    }
    heads.shuffle(rng);
    Digraph::from_valid_arcs(seq.n(), tails.into_iter().zip(heads).collect())
}

/// Rejection sampling until the pairing is simple, which yields a uniform
/// simple digraph with the given degrees.
pub fn generate_simple<R: Rng + ?Sized>(
    seq: &BiDegreeSequence,
    rng: &mut R,
    max_attempts: usize,
) -> Result<Digraph> {
    simple_with_attempts(seq, rng, max_attempts).map(|(g, _)| g)
}

/// As [`generate_simple`], also returning how many pairings were drawn.
pub fn simple_with_attempts<R: Rng + ?Sized>(
    seq: &BiDegreeSequence,
    rng: &mut R,
    max_attempts: usize,
) -> Result<(Digraph, usize)> {
    for attempt in 1..=max_attempts {
        let g = pair_configuration(seq, rng);
        if g.is_simple() {
            return Ok((g, attempt));
        }
    }
    Err(Error::AttemptsExhausted {
        attempts: max_attempts,
    })
}

/// Each ordered pair `(u, v)`, `u ≠ v`, is an arc independently with
/// probability `p`. Gaps between successive arcs are drawn geometrically, so
/// the cost is proportional to the number of arcs rather than `n²`.
pub fn binomial_digraph<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Digraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("probability {p} not in [0, 1]")));
    }
    let slots = (n as u64) * (n.saturating_sub(1) as u64);
    let mut arcs = Vec::new();
    if p == 0.0 || slots == 0 {
        return Ok(Digraph::empty(n));
    }
    // Slot s encodes tail s / (n-1) and the (s % (n-1))-th other node as head.
    let to_arc = |s: u64| {
        let u = (s / (n as u64 - 1)) as usize;
        let r = (s % (n as u64 - 1)) as usize;
        (u, if r >= u { r + 1 } else { r })
    };
    if p == 1.0 {
        arcs.extend((0..slots).map(to_arc));
        return Ok(Digraph::from_valid_arcs(n, arcs));
    }
    let log_q = (1.0 - p).ln();
    let mut s: u64 = 0;
    loop {
        let u: f64 = rng.random();
        // 1 - u lies in (0, 1], so the log is finite.
        let skip = ((1.0 - u).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (slots - s) as f64 {
            break;
        }
        s += skip as u64;
        arcs.push(to_arc(s));
        s += 1;
        if s >= slots {
            break;
        }
    }
    Ok(Digraph::from_valid_arcs(n, arcs))
}
