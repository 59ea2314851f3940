//! Galton-Watson processes: survival probabilities and expansion-time experiments.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::criticality::{smallest_fixed_point, Regime};
use crate::degree_model::{SizeBiasedLaw, UnivariateLaw, VALIDITY_TOLERANCE};
use crate::error::{Error, Result};
use crate::experiment::derive_trial_seed;
use crate::stream_from_seed;

pub const DEFAULT_POPULATION_CAP: u64 = 100_000_000;

/// Offspring distribution on `0..mass.len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffspringLaw {
    mass: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
    mean: f64,
}

impl OffspringLaw {
    pub fn from_mass(mut mass: Vec<f64>) -> Result<Self> {
        if mass.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(
                "offspring mass must be nonnegative".into(),
            ));
        }
        while mass.last() == Some(&0.0) {
            mass.pop();
        }
        if mass.is_empty() {
            return Err(Error::InvalidDistribution("empty offspring law".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > VALIDITY_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "offspring mass sums to {total}"
            )));
        }
        let cumulative: Vec<f64> = mass
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let mean = mass.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        Ok(Self {
            mass,
            cumulative,
            mean,
        })
    }

    pub fn constant(value: u32) -> Self {
        let mut mass = vec![0.0; value as usize + 1];
        mass[value as usize] = 1.0;
        Self::from_mass(mass).expect("point mass is valid")
    }

    pub fn from_univariate(law: &UnivariateLaw, tail: f64) -> Result<Self> {
        let points = law.truncated_mass(tail)?;
        let width = points.iter().map(|&(k, _)| k).max().unwrap_or(0) as usize + 1;
        let mut mass = vec![0.0; width];
        for (k, p) in points {
            mass[k as usize] += p;
        }
        Self::from_mass(mass)
    }

    /// The offspring marginal of a size-biased degree law.
    pub fn from_size_biased(law: &SizeBiasedLaw) -> Result<Self> {
        Self::from_mass(law.offspring.clone())
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `h(z) = Σ p_k z^k`.
    pub fn pgf(&self, z: f64) -> f64 {
        self.mass.iter().rev().fold(0.0, |acc, &p| acc * z + p)
    }

    fn point_mass(&self) -> Option<u64> {
        (self.mass.last() == Some(&1.0)).then(|| self.mass.len() as u64 - 1)
    }

    /// Inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.mass.len() - 1) as u64
    }

    /// Total offspring of `parents` independent individuals.
    fn sample_sum<R: Rng + ?Sized>(&self, parents: u64, rng: &mut R) -> u64 {
        if let Some(c) = self.point_mass() {
            return parents.saturating_mul(c);
        }
        (0..parents).map(|_| self.sample(rng)).sum()
    }

    /// `s = 1 − ρ`, with `ρ` the smallest root of `z = h(z)` in `[0, 1]`.
    pub fn survival_probability(&self) -> Result<f64> {
        Ok(1.0 - smallest_fixed_point(self.mean, |z| self.pgf(z))?.root)
    }
}

/// Generation totals of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GenerationRun {
    /// `sizes[t]` is the total population at generation `t`; `sizes[0] = x`.
    pub sizes: Vec<u64>,
    pub extinct: bool,
    /// The last generation exceeded the population cap and the run stopped.
    pub capped: bool,
}

fn evolve<R: Rng + ?Sized>(
    law: &OffspringLaw,
    x: u64,
    max_generations: usize,
    population_cap: u64,
    stop_at: Option<u64>,
    rng: &mut R,
) -> GenerationRun {
    let mut sizes = vec![x];
    let mut current = x;
    let reached = |c: u64| stop_at.is_some_and(|w| c >= w);
    let mut capped = current > population_cap;
    while current > 0 && !capped && !reached(current) && sizes.len() <= max_generations {
        current = law.sample_sum(current, rng);
        sizes.push(current);
        capped = current > population_cap;
    }
    GenerationRun {
        extinct: current == 0,
        capped,
        sizes,
    }
}

/// Evolves `x` independent processes for up to `max_generations` generations.
pub fn simulate_generations<R: Rng + ?Sized>(
    law: &OffspringLaw,
    x: u64,
    max_generations: usize,
    population_cap: u64,
    rng: &mut R,
) -> GenerationRun {
    evolve(law, x, max_generations, population_cap, None, rng)
}

/// One run of `x` processes watched until their combined generation reaches `ω`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpansionTrial {
    pub x: u64,
    pub omega: u64,
    /// `T_ω`: first generation whose total is at least `ω`, if seen.
    pub hit_generation: Option<usize>,
    pub generation_sizes: Vec<u64>,
}

pub fn expansion_trial<R: Rng + ?Sized>(
    law: &OffspringLaw,
    x: u64,
    omega: u64,
    max_generations: usize,
    rng: &mut R,
) -> ExpansionTrial {
    let run = evolve(
        law,
        x,
        max_generations,
        DEFAULT_POPULATION_CAP.max(omega),
        Some(omega),
        rng,
    );
    let hit_generation = run.sizes.iter().position(|&s| s >= omega);
    ExpansionTrial {
        x,
        omega,
        hit_generation,
        generation_sizes: run.sizes,
    }
}

/// Generation cutoff `⌊(1+ε) log_ν ω⌋ + 1`.
pub fn hitting_threshold(mean: f64, omega: u64, epsilon: f64) -> usize {
    ((1.0 + epsilon) * (omega as f64).ln() / mean.ln()).floor() as usize + 1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionOutcome {
    /// Fraction of trials with `T_ω` at or below the threshold.
    pub empirical: f64,
    /// `1 − (1 − s)^x`.
    pub theoretical: f64,
    /// `√(θ(1−θ)/trials)` for the theoretical value `θ`.
    pub stderr: f64,
    pub threshold: usize,
    pub trials: u64,
    pub hits: u64,
    pub survival: f64,
}

/// Runs `trials` independent expansion trials with per-trial streams derived
/// from `(master_seed, x, trial)` and compares the hitting frequency with the
/// multi-process survival limit.
pub fn expansion_experiment(
    law: &OffspringLaw,
    x: u64,
    omega: u64,
    epsilon: f64,
    trials: u64,
    master_seed: u64,
) -> Result<ExpansionOutcome> {
    if Regime::classify(law.mean()) != Regime::Supercritical {
        return Err(Error::OutOfRange(format!(
            "offspring mean {} is not above 1",
            law.mean()
        )));
    }
    if x == 0 || trials == 0 {
        return Err(Error::OutOfRange("x and trials must be positive".into()));
    }
    if omega < 2 {
        return Err(Error::OutOfRange(format!(
            "omega {omega} must be at least 2"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::OutOfRange(format!(
            "epsilon {epsilon} not in (0, 1/2)"
        )));
    }
    let threshold = hitting_threshold(law.mean(), omega, epsilon);
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = stream_from_seed(derive_trial_seed(master_seed, x, t));
            expansion_trial(law, x, omega, threshold, &mut rng)
                .hit_generation
                .is_some_and(|g| g <= threshold)
        })
        .count() as u64;
    let survival = law.survival_probability()?;
    let theoretical = 1.0 - (1.0 - survival).powi(x as i32);
    Ok(ExpansionOutcome {
        empirical: hits as f64 / trials as f64,
        theoretical,
        stderr: (theoretical * (1.0 - theoretical) / trials as f64).sqrt(),
        threshold,
        trials,
        hits,
        survival,
    })
}
