//! Bi-degree distributions and sequences.
//!
//! A [`BiDegreeDistribution`] is a finitely supported law of `(in, out)` degree
//! pairs with equal means. Infinite families are truncated so that the discarded
//! tail mass is below a caller-chosen bound and then renormalized, which keeps
//! every downstream sum finite and exact.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for total mass and mean balance of a validated distribution.
pub const VALIDITY_TOLERANCE: f64 = 1e-9;

/// Default tail mass discarded when truncating infinite-support families.
pub const DEFAULT_TRUNCATION_TAIL: f64 = 1e-12;

/// Explicit tables may be off from unit mass by at most this before renormalizing.
const TABLE_MASS_SLACK: f64 = 1e-6;

/// Largest Poisson mean accepted; `e^-mean` must stay representable.
const MAX_POISSON_MEAN: f64 = 500.0;

/// A degree pair `(in, out)`, i.e. `(d⁻, d⁺)`.
pub type DegreePair = (u32, u32);

/// Which half-edge a size-biased law is drawn through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Reached through a uniformly chosen head: weight by in-degree.
    In,
    /// Reached through a uniformly chosen tail: weight by out-degree.
    Out,
}

/// A law on the nonnegative integers used as one marginal of a product family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnivariateLaw {
    Poisson { mean: f64 },
    Constant { value: u32 },
    Table { mass: Vec<(u32, f64)> },
}

impl UnivariateLaw {
    /// Point masses `(k, p)` with the tail beyond the returned support below `tail`,
    /// renormalized to unit mass.
    pub fn truncated_mass(&self, tail: f64) -> Result<Vec<(u32, f64)>> {
        match self {
            UnivariateLaw::Constant { value } => Ok(vec![(*value, 1.0)]),
            UnivariateLaw::Table { mass } => {
                let mut merged: BTreeMap<u32, f64> = BTreeMap::new();
                for &(k, p) in mass {
                    if !p.is_finite() || p < 0.0 {
                        return Err(Error::InvalidDistribution(format!(
                            "negative or non-finite mass {p} at {k}"
                        )));
                    }
                    *merged.entry(k).or_default() += p;
                }
                let total: f64 = merged.values().sum();
                if total <= 0.0 {
                    return Err(Error::InvalidDistribution("empty support".into()));
                }
                if (total - 1.0).abs() > TABLE_MASS_SLACK {
                    return Err(Error::InvalidDistribution(format!(
                        "table mass sums to {total}, expected 1"
                    )));
                }
                Ok(merged
                    .into_iter()
                    .filter(|&(_, p)| p > 0.0)
                    .map(|(k, p)| (k, p / total))
                    .collect())
            }
            UnivariateLaw::Poisson { mean } => poisson_truncated(*mean, tail),
        }
    }
}

fn poisson_truncated(mean: f64, tail: f64) -> Result<Vec<(u32, f64)>> {
    if !(0.0..=MAX_POISSON_MEAN).contains(&mean) {
        return Err(Error::InvalidDistribution(format!(
            "Poisson mean {mean} outside [0, {MAX_POISSON_MEAN}]"
        )));
    }
    if mean == 0.0 {
        return Ok(vec![(0, 1.0)]);
    }
    let mut out = Vec::new();
    let mut p = (-mean).exp();
    let mut k: u32 = 0;
    loop {
        out.push((k, p));
        let next = p * mean / f64::from(k + 1);
        // Once k+2 > mean the tail is dominated by a geometric series with
        // ratio mean/(k+2); bound the discarded second moment, not just the
        // mass, so truncated moments stay within `tail` of the closed forms.
        let kk = f64::from(k + 2);
        if kk > 2.0 * mean {
            let r = mean / kk;
            let bound = next * (kk - 1.0).powi(2) / (1.0 - r).powi(3);
            if bound < tail {
                break;
            }
        }
        p = next;
        k += 1;
    }
    let total: f64 = out.iter().map(|&(_, p)| p).sum();
    Ok(out
        .into_iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(k, p)| (k, p / total))
        .collect())
}

/// How to build a [`BiDegreeDistribution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Explicit mass table over `(in, out)` pairs.
    Table { mass: Vec<(DegreePair, f64)> },
    /// In- and out-degree independent with the given marginals.
    Product {
        minus: UnivariateLaw,
        plus: UnivariateLaw,
    },
    /// Two independent Poisson laws with mean `nu`; the degree law of a binomial digraph with `np → nu`.
    PoissonPair { nu: f64 },
    /// Every node has in- and out-degree `d`.
    Regular { d: u32 },
}

impl DistributionSpec {
    pub fn build(&self, truncation_tail: f64) -> Result<BiDegreeDistribution> {
        BiDegreeDistribution::build(self, truncation_tail)
    }
}

impl fmt::Display for UnivariateLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnivariateLaw::Poisson { mean } => write!(f, "poisson:{mean}"),
            UnivariateLaw::Constant { value } => write!(f, "const:{value}"),
            UnivariateLaw::Table { mass } => {
                write!(f, "table:")?;
                for (i, (k, p)) in mass.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}={p}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::PoissonPair { nu } => write!(f, "poisson-pair:{nu}"),
            DistributionSpec::Regular { d } => write!(f, "regular:{d}"),
            DistributionSpec::Product { minus, plus } => write!(f, "product:{minus}/{plus}"),
            DistributionSpec::Table { mass } => {
                write!(f, "table:")?;
                for (i, ((k, l), p)) in mass.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{k},{l}={p}")?;
                }
                Ok(())
            }
        }
    }
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidDistribution(format!("cannot parse {what} from {s:?}")))
}

impl FromStr for UnivariateLaw {
    type Err = Error;

    /// `poisson:MEAN`, `const:K`, or `table:K=P,K=P,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidDistribution(format!("missing ':' in law {s:?}")))?;
        match kind.trim() {
            "poisson" => Ok(UnivariateLaw::Poisson {
                mean: parse_num(rest, "Poisson mean")?,
            }),
            "const" | "constant" => Ok(UnivariateLaw::Constant {
                value: parse_num(rest, "constant")?,
            }),
            "table" => {
                let mut mass = Vec::new();
                for item in rest.split(',').filter(|t| !t.trim().is_empty()) {
                    let (k, p) = item.split_once('=').ok_or_else(|| {
                        Error::InvalidDistribution(format!("expected K=P, got {item:?}"))
                    })?;
                    mass.push((parse_num(k, "value")?, parse_num(p, "probability")?));
                }
                Ok(UnivariateLaw::Table { mass })
            }
            other => Err(Error::InvalidDistribution(format!("unknown law {other:?}"))),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// `poisson-pair:NU`, `regular:D`, `product:LAW/LAW`, or `table:K,L=P;K,L=P;...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidDistribution(format!("missing ':' in family {s:?}")))?;
        match kind.trim() {
            "poisson-pair" | "poisson_pair" => Ok(DistributionSpec::PoissonPair {
                nu: parse_num(rest, "nu")?,
            }),
            "regular" => Ok(DistributionSpec::Regular {
                d: parse_num(rest, "d")?,
            }),
            "product" => {
                let (minus, plus) = rest.split_once('/').ok_or_else(|| {
                    Error::InvalidDistribution("product needs IN_LAW/OUT_LAW".into())
                })?;
                Ok(DistributionSpec::Product {
                    minus: minus.parse()?,
                    plus: plus.parse()?,
                })
            }
            "table" => {
                let mut mass = Vec::new();
                for item in rest.split(';').filter(|t| !t.trim().is_empty()) {
                    let (kl, p) = item.split_once('=').ok_or_else(|| {
                        Error::InvalidDistribution(format!("expected K,L=P, got {item:?}"))
                    })?;
                    let (k, l) = kl.split_once(',').ok_or_else(|| {
                        Error::InvalidDistribution(format!("expected K,L, got {kl:?}"))
                    })?;
                    mass.push((
                        (parse_num(k, "in-degree")?, parse_num(l, "out-degree")?),
                        parse_num(p, "probability")?,
                    ));
                }
                Ok(DistributionSpec::Table { mass })
            }
            other => Err(Error::InvalidDistribution(format!(
                "unknown family {other:?}"
            ))),
        }
    }
}

/// First and second moments of a bi-degree law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `E[D⁻] = E[D⁺]`.
    pub lambda: f64,
    /// `E[D⁻ D⁺]`.
    pub cross: f64,
    /// `E[(D⁻)²]`.
    pub second_in: f64,
    /// `E[(D⁺)²]`.
    pub second_out: f64,
    /// `E[D⁻ D⁺] / λ`, the mean offspring of either size-biased exploration.
    pub nu: f64,
}

/// Generating function value and partial derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgfValue {
    pub f: f64,
    pub df_dz: f64,
    pub df_dw: f64,
}

/// A validated probability law on `(in, out)` degree pairs with finite support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiDegreeDistribution {
    /// Support points sorted ascending, each with positive mass.
    support: Vec<DegreePair>,
    probs: Vec<f64>,
    moments: Moments,
}

impl BiDegreeDistribution {
    /// Instantiates a family, truncating infinite supports at tail mass below
    /// `truncation_tail` (which must lie in `(0, 1e-6]`).
    pub fn build(spec: &DistributionSpec, truncation_tail: f64) -> Result<Self> {
        if !(truncation_tail > 0.0 && truncation_tail <= 1e-6) {
            return Err(Error::OutOfRange(format!(
                "truncation tail {truncation_tail} not in (0, 1e-6]"
            )));
        }
        match spec {
            DistributionSpec::Regular { d } => Self::from_normalized(vec![((*d, *d), 1.0)]),
            DistributionSpec::PoissonPair { nu } => {
                let law = UnivariateLaw::Poisson { mean: *nu };
                Self::product(&law, &law, truncation_tail)
            }
            DistributionSpec::Product { minus, plus } => {
                Self::product(minus, plus, truncation_tail)
            }
            DistributionSpec::Table { mass } => Self::from_table(mass, truncation_tail),
        }
    }

    fn product(minus: &UnivariateLaw, plus: &UnivariateLaw, tail: f64) -> Result<Self> {
        let a = minus.truncated_mass(tail / 2.0)?;
        let b = plus.truncated_mass(tail / 2.0)?;
        let mut entries = Vec::with_capacity(a.len() * b.len());
        for &(k, p) in &a {
            for &(l, q) in &b {
                entries.push(((k, l), p * q));
            }
        }
        Self::from_normalized(entries)
    }

    /// Explicit table. Means must agree within `mean_tolerance` before
    /// renormalization; unequal means are rejected rather than rescaled.
    pub fn from_table(mass: &[(DegreePair, f64)], mean_tolerance: f64) -> Result<Self> {
        let mut merged: BTreeMap<DegreePair, f64> = BTreeMap::new();
        for &(pair, p) in mass {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "negative or non-finite mass {p} at {pair:?}"
                )));
            }
            *merged.entry(pair).or_default() += p;
        }
        merged.retain(|_, p| *p > 0.0);
        if merged.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > TABLE_MASS_SLACK {
            return Err(Error::InvalidDistribution(format!(
                "table mass sums to {total}, expected 1"
            )));
        }
        let mean_in: f64 = merged.iter().map(|(&(k, _), p)| f64::from(k) * p).sum();
        let mean_out: f64 = merged.iter().map(|(&(_, l), p)| f64::from(l) * p).sum();
        if (mean_in - mean_out).abs() > mean_tolerance {
            return Err(Error::UnbalancedMeans {
                mean_in,
                mean_out,
                tolerance: mean_tolerance,
            });
        }
        Self::from_normalized(merged.into_iter().map(|(k, p)| (k, p / total)).collect())
    }

    fn from_normalized(entries: Vec<(DegreePair, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<DegreePair, f64> = BTreeMap::new();
        for (pair, p) in entries {
            if p > 0.0 {
                *merged.entry(pair).or_default() += p;
            }
        }
        if merged.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let (support, probs): (Vec<_>, Vec<_>) = merged.into_iter().unzip();
        let moments = compute_moments(&support, &probs);
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > VALIDITY_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} not within {VALIDITY_TOLERANCE} of 1"
            )));
        }
        if moments.lambda.is_nan() || moments.lambda <= 0.0 {
            return Err(Error::InvalidDistribution(
                "mean degree is zero; all mass at (0, 0)".into(),
            ));
        }
        let mean_out: f64 = support
            .iter()
            .zip(&probs)
            .map(|(&(_, l), p)| f64::from(l) * p)
            .sum();
        if (moments.lambda - mean_out).abs() > VALIDITY_TOLERANCE {
            return Err(Error::UnbalancedMeans {
                mean_in: moments.lambda,
                mean_out,
                tolerance: VALIDITY_TOLERANCE,
            });
        }
        Ok(Self {
            support,
            probs,
            moments,
        })
    }

    /// The empirical law of a realized sequence: mass `n_{k,ℓ}/n` at `(k, ℓ)`.
    pub fn empirical(seq: &BiDegreeSequence) -> Result<Self> {
        let mut counts: BTreeMap<DegreePair, u64> = BTreeMap::new();
        for &pair in seq.pairs() {
            *counts.entry(pair).or_default() += 1;
        }
        let n = seq.n() as f64;
        Self::from_normalized(counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (DegreePair, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn probability(&self, pair: DegreePair) -> f64 {
        self.support
            .binary_search(&pair)
            .map(|i| self.probs[i])
            .unwrap_or(0.0)
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    pub fn lambda(&self) -> f64 {
        self.moments.lambda
    }

    pub fn nu(&self) -> f64 {
        self.moments.nu
    }

    pub fn max_degree(&self) -> u32 {
        self.support
            .iter()
            .map(|&(k, l)| k.max(l))
            .max()
            .unwrap_or(0)
    }

    /// `f(z, w) = Σ λ_{k,ℓ} z^k w^ℓ` and both partial derivatives by direct summation.
    pub fn pgf(&self, z: f64, w: f64) -> Result<PgfValue> {
        if !(0.0..=1.0).contains(&z) || !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfRange(format!(
                "generating function arguments ({z}, {w}) outside [0,1]²"
            )));
        }
        Ok(self.pgf_unchecked(z, w))
    }

    pub(crate) fn pgf_unchecked(&self, z: f64, w: f64) -> PgfValue {
        let mut out = PgfValue {
            f: 0.0,
            df_dz: 0.0,
            df_dw: 0.0,
        };
        for (&(k, l), &p) in self.support.iter().zip(&self.probs) {
            let zk = z.powi(k as i32);
            let wl = w.powi(l as i32);
            out.f += p * zk * wl;
            if k > 0 {
                out.df_dz += p * f64::from(k) * z.powi(k as i32 - 1) * wl;
            }
            if l > 0 {
                out.df_dw += p * f64::from(l) * zk * w.powi(l as i32 - 1);
            }
        }
        out
    }

    /// The law of the degrees of a node reached through a uniform head (`In`)
    /// or tail (`Out`), with that half-edge removed.
    pub fn size_biased(&self, direction: Direction) -> SizeBiasedLaw {
        let lambda = self.moments.lambda;
        let mut mass: BTreeMap<DegreePair, f64> = BTreeMap::new();
        for (&(k, l), &p) in self.support.iter().zip(&self.probs) {
            match direction {
                Direction::In if k > 0 => {
                    *mass.entry((k - 1, l)).or_default() += f64::from(k) * p / lambda;
                }
                Direction::Out if l > 0 => {
                    *mass.entry((k, l - 1)).or_default() += f64::from(l) * p / lambda;
                }
                _ => {}
            }
        }
        let width = mass
            .keys()
            .map(|&(k, l)| match direction {
                Direction::In => l,
                Direction::Out => k,
            })
            .max()
            .unwrap_or(0) as usize
            + 1;
        let mut offspring = vec![0.0; width];
        for (&(k, l), &p) in &mass {
            let idx = match direction {
                Direction::In => l,
                Direction::Out => k,
            };
            offspring[idx as usize] += p;
        }
        SizeBiasedLaw {
            direction,
            mass: mass.into_iter().collect(),
            offspring,
        }
    }

    /// Total-variation distance `½ Σ |p − q|` over the union of supports.
    pub fn total_variation(&self, other: &Self) -> f64 {
        let mut diff: BTreeMap<DegreePair, f64> = BTreeMap::new();
        for (pair, p) in self.iter() {
            *diff.entry(pair).or_default() += p;
        }
        for (pair, q) in other.iter() {
            *diff.entry(pair).or_default() -= q;
        }
        0.5 * diff.values().map(|d| d.abs()).sum::<f64>()
    }

    /// Draws `n` independent pairs, then balances the head and tail totals by
    /// adding single half-edges to uniformly chosen nodes on the deficient side.
    pub fn sample_sequence<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
    ) -> Result<BiDegreeSequence> {
        if n == 0 {
            return Err(Error::InvalidSequence("n must be at least 1".into()));
        }
        let cumulative: Vec<f64> = self
            .probs
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let last = self.support.len() - 1;
        let mut pairs = Vec::with_capacity(n);
        let (mut heads, mut tails) = (0i64, 0i64);
        for _ in 0..n {
            let u: f64 = rng.random();
            let idx = cumulative.partition_point(|&c| c <= u).min(last);
            let pair = self.support[idx];
            heads += i64::from(pair.0);
            tails += i64::from(pair.1);
            pairs.push(pair);
        }
        let mut excess = tails - heads;
        while excess != 0 {
            let v = rng.random_range(0..n);
            if excess > 0 {
                pairs[v].0 += 1;
                excess -= 1;
            } else {
                pairs[v].1 += 1;
                excess += 1;
            }
        }
        BiDegreeSequence::new(pairs)
    }
}

fn compute_moments(support: &[DegreePair], probs: &[f64]) -> Moments {
    let mut lambda = 0.0;
    let mut cross = 0.0;
    let mut second_in = 0.0;
    let mut second_out = 0.0;
    for (&(k, l), &p) in support.iter().zip(probs) {
        let (k, l) = (f64::from(k), f64::from(l));
        lambda += k * p;
        cross += k * l * p;
        second_in += k * k * p;
        second_out += l * l * p;
    }
    Moments {
        lambda,
        cross,
        second_in,
        second_out,
        nu: if lambda > 0.0 { cross / lambda } else { 0.0 },
    }
}

/// A size-biased bi-degree law together with its offspring marginal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeBiasedLaw {
    pub direction: Direction,
    /// Mass on `(in, out)` after removing the half-edge used to arrive.
    pub mass: Vec<(DegreePair, f64)>,
    /// For `In`, the law of the out-degree; for `Out`, the law of the in-degree.
    /// Index is the offspring count.
    pub offspring: Vec<f64>,
}

impl SizeBiasedLaw {
    pub fn total_mass(&self) -> f64 {
        self.mass.iter().map(|(_, p)| p).sum()
    }

    pub fn offspring_mean(&self) -> f64 {
        self.offspring
            .iter()
            .enumerate()
            .map(|(l, p)| l as f64 * p)
            .sum()
    }
}

/// Concrete per-node `(d⁻, d⁺)` pairs with equal head and tail totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiDegreeSequence {
    pairs: Vec<DegreePair>,
    m: u64,
}

impl BiDegreeSequence {
    pub fn new(pairs: Vec<DegreePair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidSequence("n must be at least 1".into()));
        }
        let heads: u64 = pairs.iter().map(|&(k, _)| u64::from(k)).sum();
        let tails: u64 = pairs.iter().map(|&(_, l)| u64::from(l)).sum();
        if heads != tails {
            return Err(Error::InvalidSequence(format!(
                "in-degree total {heads} differs from out-degree total {tails}"
            )));
        }
        Ok(Self { pairs, m: heads })
    }

    /// Every node gets `(d, d)`.
    pub fn regular(n: usize, d: u32) -> Result<Self> {
        Self::new(vec![(d, d); n])
    }

    pub fn pairs(&self) -> &[DegreePair] {
        &self.pairs
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    /// Half-edges per side.
    pub fn m(&self) -> u64 {
        self.m
    }

    /// `Δ_n`, the largest in- or out-degree.
    pub fn max_degree(&self) -> u32 {
        self.pairs.iter().map(|&(k, l)| k.max(l)).max().unwrap_or(0)
    }

    /// `n_{k,ℓ}`, the number of nodes with degree pair `(k, ℓ)`.
    pub fn count(&self, pair: DegreePair) -> usize {
        self.pairs.iter().filter(|&&p| p == pair).count()
    }
}
