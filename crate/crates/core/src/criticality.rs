//! Analytic predictions for the largest strongly connected component.
//!
//! The backward and forward explorations from a node are approximated by
//! branching processes whose offspring generating functions are
//! `(1/λ) ∂f/∂w (z, 1)` and `(1/λ) ∂f/∂z (1, w)`. Their extinction
//! probabilities `ρ₋`, `ρ₊` are the smallest nonnegative fixed points, found by
//! monotone iteration from 0. A node with degrees `(i, j)` belongs to the giant
//! asymptotically with probability `(1 − ρ₋^i)(1 − ρ₊^j)`.

use serde::{Deserialize, Serialize};

use crate::degree_model::BiDegreeDistribution;
use crate::error::{Error, Result};

/// `ν` within this distance of 1 is labelled critical.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Iteration stops once successive iterates differ by less than this.
pub const STEP_TOLERANCE: f64 = 1e-14;

pub const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl Regime {
    pub fn classify(nu: f64) -> Self {
        if nu > 1.0 + TIE_TOLERANCE {
            Regime::Supercritical
        } else if nu < 1.0 - TIE_TOLERANCE {
            Regime::Subcritical
        } else {
            Regime::Critical
        }
    }
}

/// Result of one monotone fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub root: f64,
    pub iterations: usize,
    /// `|h(root) − root|` at the returned root.
    pub residual: f64,
}

/// Smallest fixed point of a probability generating function `h` on `[0, 1]`,
/// by iterating `z ← h(z)` from 0. `mean` is `h'(1)`; at or below criticality
/// the root is 1 and the iteration (which may be arbitrarily slow there) is skipped.
pub fn smallest_fixed_point(mean: f64, h: impl Fn(f64) -> f64) -> Result<FixedPoint> {
    if Regime::classify(mean) != Regime::Supercritical {
        return Ok(FixedPoint {
            root: 1.0,
            iterations: 0,
            residual: (h(1.0) - 1.0).abs(),
        });
    }
    let mut z = 0.0f64;
    let mut change = f64::INFINITY;
    for step in 1..=MAX_ITERATIONS {
        let next = h(z).min(1.0);
        debug_assert!(next + 1e-15 >= z, "iteration not monotone: {z} -> {next}");
        change = (next - z).abs();
        z = next.max(z);
        if change < STEP_TOLERANCE {
            return Ok(FixedPoint {
                root: z,
                iterations: step,
                residual: (h(z) - z).abs(),
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        residual: change,
    })
}

/// `(ρ₋, ρ₊)` with their iteration counts and residuals.
pub fn solve_extinction(dist: &BiDegreeDistribution) -> Result<(FixedPoint, FixedPoint)> {
    let lambda = dist.lambda();
    let nu = dist.nu();
    let minus = smallest_fixed_point(nu, |z| dist.pgf_unchecked(z, 1.0).df_dw / lambda)?;
    let plus = smallest_fixed_point(nu, |w| dist.pgf_unchecked(1.0, w).df_dz / lambda)?;
    Ok((minus, plus))
}

/// Everything the limit theorem predicts about the giant for one distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub lambda: f64,
    pub nu: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    /// Limiting fraction of nodes in the giant.
    pub eta: f64,
    /// `η` evaluated by the series `Σ λ_{i,j}(1 − ρ₋^i)(1 − ρ₊^j)`, before clamping.
    pub eta_series: f64,
    /// `η` evaluated by `1 + f(ρ₋,ρ₊) − f(ρ₋,1) − f(1,ρ₊)`, before clamping.
    pub eta_closed_form: f64,
    /// Limiting arcs in the giant per node, `λ s₋ s₊`.
    pub edge_density: f64,
    pub regime: Regime,
    pub iterations_minus: usize,
    pub iterations_plus: usize,
    pub residual_minus: f64,
    pub residual_plus: f64,
}

pub fn predict(dist: &BiDegreeDistribution) -> Result<CriticalityReport> {
    let nu = dist.nu();
    let lambda = dist.lambda();
    let regime = Regime::classify(nu);
    let (minus, plus) = solve_extinction(dist)?;
    let (rho_minus, rho_plus) = (minus.root, plus.root);

    let eta_series: f64 = dist
        .iter()
        .map(|((i, j), p)| p * (1.0 - rho_minus.powi(i as i32)) * (1.0 - rho_plus.powi(j as i32)))
        .sum();
    let eta_closed_form = 1.0 + dist.pgf_unchecked(rho_minus, rho_plus).f
        - dist.pgf_unchecked(rho_minus, 1.0).f
        - dist.pgf_unchecked(1.0, rho_plus).f;

    let (eta, edge_density, s_minus, s_plus) = if regime == Regime::Supercritical {
        let (s_minus, s_plus) = (1.0 - rho_minus, 1.0 - rho_plus);
        (
            eta_closed_form.clamp(0.0, 1.0),
            lambda * s_minus * s_plus,
            s_minus,
            s_plus,
        )
    } else {
        (0.0, 0.0, 0.0, 0.0)
    };

    Ok(CriticalityReport {
        lambda,
        nu,
        rho_minus,
        rho_plus,
        s_minus,
        s_plus,
        eta,
        eta_series,
        eta_closed_form,
        edge_density,
        regime,
        iterations_minus: minus.iterations,
        iterations_plus: plus.iterations,
        residual_minus: minus.residual,
        residual_plus: plus.residual,
    })
}

/// Extinction probability for the Poisson-pair family: the root of
/// `ρ = e^{−ν(1−ρ)}` in `(0, 1)`, by bisection.
pub fn karp_rho(nu: f64) -> Result<f64> {
    if !nu.is_finite() || nu <= 1.0 {
        return Err(Error::OutOfRange(format!(
            "karp_rho needs nu > 1, got {nu}"
        )));
    }
    let g = |r: f64| r - (-nu * (1.0 - r)).exp();
    // g is concave with g(0) < 0 and its maximum at 1 − ln(ν)/ν, where it is positive.
    let mut lo = 0.0;
    let mut hi = 1.0 - nu.ln() / nu;
    if g(hi) <= 0.0 {
        // ν so close to 1 that the bracket collapsed in floating point.
        return Ok(hi);
    }
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree_model::{DistributionSpec, UnivariateLaw};

    fn build(spec: DistributionSpec) -> BiDegreeDistribution {
        spec.build(1e-12).unwrap()
    }

    /// Independent bisection on ρ − e^{−ν(1−ρ)} over [0, 1 − 1e-9].
    fn bisect_oracle(nu: f64) -> f64 {
        let g = |r: f64| r - (-nu * (1.0 - r)).exp();
        let (mut lo, mut hi) = (0.0f64, 0.5f64);
        while g(hi) < 0.0 {
            hi = 0.5 * (hi + 1.0);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    #[test]
    fn regular_has_full_giant() {
        for d in [2, 3, 5] {
            let r = predict(&build(DistributionSpec::Regular { d })).unwrap();
            assert_eq!((r.rho_minus, r.rho_plus), (0.0, 0.0));
            assert_eq!(r.eta, 1.0);
            assert_eq!(r.edge_density, f64::from(d));
            assert_eq!(r.regime, Regime::Supercritical);
        }
    }

    #[test]
    fn poisson_pair_two_matches_oracle() {
        let oracle = bisect_oracle(2.0);
        assert!((oracle - 0.203188).abs() < 1e-6);
        let r = predict(&build(DistributionSpec::PoissonPair { nu: 2.0 })).unwrap();
        assert!((r.rho_minus - oracle).abs() < 1e-10);
        assert!((r.rho_plus - oracle).abs() < 1e-10);
        assert!((r.eta - 0.634910).abs() < 1e-6);
        assert!((r.edge_density - 1.269820).abs() < 1e-6);
        assert!(r.residual_minus < 1e-12 && r.residual_plus < 1e-12);
        // Independent marginals: η factorizes.
        assert!((r.eta - (1.0 - r.rho_minus) * (1.0 - r.rho_plus)).abs() < 1e-9);
    }

    #[test]
    fn subcritical_extinction_is_certain() {
        let r = predict(&build(DistributionSpec::PoissonPair { nu: 0.5 })).unwrap();
        assert_eq!((r.rho_minus, r.rho_plus), (1.0, 1.0));
        assert_eq!((r.eta, r.edge_density), (0.0, 0.0));
        assert_eq!(r.regime, Regime::Subcritical);
    }

    #[test]
    fn two_point_table_eta_by_hand() {
        let d = build(DistributionSpec::Table {
            mass: vec![((2, 2), 0.2), ((0, 0), 0.8)],
        });
        let r = predict(&d).unwrap();
        assert_eq!((r.rho_minus, r.rho_plus), (0.0, 0.0));
        assert!((r.eta - 0.2).abs() < 1e-12);
        assert!((r.eta_series - r.eta_closed_form).abs() < 1e-9);
        assert!((r.edge_density - 0.4).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_product_series_matches_closed_form() {
        let d = build(DistributionSpec::Product {
            minus: UnivariateLaw::Table {
                mass: vec![(0, 0.5), (6, 0.5)],
            },
            plus: UnivariateLaw::Poisson { mean: 3.0 },
        });
        let r = predict(&d).unwrap();
        assert_eq!(r.regime, Regime::Supercritical);
        assert!((r.eta_series - r.eta_closed_form).abs() < 1e-9);
        assert!((r.eta - (1.0 - r.rho_minus) * (1.0 - r.rho_plus)).abs() < 1e-9);
        assert!(r.rho_minus != r.rho_plus);
    }

    #[test]
    fn critical_is_reported_not_guessed() {
        let r = predict(&build(DistributionSpec::Regular { d: 1 })).unwrap();
        assert_eq!(r.regime, Regime::Critical);
        assert_eq!(r.eta, 0.0);
    }

    #[test]
    fn karp_examples() {
        assert!(karp_rho(1.0).is_err());
        assert!(karp_rho(0.3).is_err());
        assert!((karp_rho(2.0).unwrap() - bisect_oracle(2.0)).abs() < 1e-12);
        let r4 = karp_rho(4.0).unwrap();
        assert!(r4 < 0.03);
        assert!((r4 - (-4.0 * (1.0 - r4)).exp()).abs() < 1e-12);
        let near = karp_rho(1.0 + 1e-6).unwrap();
        assert!(near > 0.999);
    }

    #[test]
    fn karp_agrees_with_iteration() {
        for nu in [1.2, 2.0, 4.0] {
            let (m, p) = solve_extinction(&build(DistributionSpec::PoissonPair { nu })).unwrap();
            let k = karp_rho(nu).unwrap();
            assert!((m.root - k).abs() < 1e-9, "nu={nu}: {} vs {k}", m.root);
            assert!((p.root - k).abs() < 1e-9);
        }
    }
}
