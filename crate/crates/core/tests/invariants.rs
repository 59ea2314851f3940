mod common;

use dcm_core::branching::{expansion_trial, OffspringLaw};
use dcm_core::criticality::{predict, solve_extinction};
use dcm_core::experiment::{derive_trial_seed, run_experiment};
use dcm_core::exploration::{expand, linear_core, linear_core_direct};
use dcm_core::generator::{generate_simple, pair_configuration};
use dcm_core::scc::{cycle_census, strongly_connected_components};
use dcm_core::{
    stream_from_seed, BiDegreeDistribution, BiDegreeSequence, CoreCriterion, Digraph, Direction,
    DistributionSpec, ExperimentConfig, GraphMode, OmegaPolicy, Regime, Traversal, UnivariateLaw,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn families() -> impl Strategy<Value = DistributionSpec> {
    prop_oneof![
        (0.05f64..4.0).prop_map(|nu| DistributionSpec::PoissonPair { nu }),
        (1u32..5).prop_map(|d| DistributionSpec::Regular { d }),
        Just(DistributionSpec::Table {
            mass: vec![((1, 0), 0.5), ((0, 1), 0.5)]
        }),
        (0.1f64..3.0).prop_map(|m| DistributionSpec::Product {
            minus: UnivariateLaw::Poisson { mean: m },
            plus: UnivariateLaw::Poisson { mean: m },
        }),
    ]
}

/// Tables symmetric under swapping in- and out-degree, so the means agree.
/// A `(1, 1)` cell keeps the mean degree positive.
fn symmetric_tables() -> impl Strategy<Value = Vec<((u32, u32), f64)>> {
    let cells = prop::collection::vec(((0u32..5, 0u32..5), 0.01f64..1.0), 0..8);
    (cells, 0.01f64..1.0).prop_map(|(cells, w11)| {
        let mut mass = vec![((1, 1), w11)];
        for ((k, l), w) in cells {
            mass.push(((k, l), w));
            mass.push(((l, k), w));
        }
        let total: f64 = mass.iter().map(|(_, w)| w).sum();
        mass.into_iter().map(|(kl, w)| (kl, w / total)).collect()
    })
}

fn small_graphs(max_n: usize, max_m: usize) -> impl Strategy<Value = Digraph> {
    (1..=max_n, 0..=max_m, any::<u64>())
        .prop_map(|(n, m, seed)| common::random_multidigraph(n, m, &mut stream_from_seed(seed)))
}

fn relabel(g: &Digraph, perm: &[usize], arc_order_seed: u64) -> Digraph {
    let mut arcs: Vec<(usize, usize)> = g.arcs().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
    arcs.shuffle(&mut stream_from_seed(arc_order_seed));
    Digraph::from_arcs(g.n(), arcs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_sequences_balance(spec in families(), n in 1usize..3000, seed in any::<u64>()) {
        let dist = spec.build(1e-12).unwrap();
        let seq = dist.sample_sequence(n, &mut stream_from_seed(seed)).unwrap();
        let total_in: u64 = seq.pairs().iter().map(|p| p.0 as u64).sum();
        let total_out: u64 = seq.pairs().iter().map(|p| p.1 as u64).sum();
        prop_assert_eq!(seq.n(), n);
        prop_assert_eq!(total_in, total_out);
        prop_assert_eq!(total_in, seq.m());
    }

    #[test]
    fn pgf_normalization_and_size_bias(mass in symmetric_tables()) {
        let dist = BiDegreeDistribution::from_table(&mass, 1e-12).unwrap();
        let at_one = dist.pgf(1.0, 1.0).unwrap();
        prop_assert!((at_one.f - 1.0).abs() < 1e-9);
        prop_assert!((at_one.df_dz - dist.lambda()).abs() < 1e-9);
        prop_assert!((at_one.df_dw - dist.lambda()).abs() < 1e-9);
        let biased = dist.size_biased(Direction::In);
        prop_assert!((biased.offspring_mean() - dist.nu()).abs() < 1e-9);
    }

    #[test]
    fn eta_forms_agree_and_extinction_is_certain_iff_not_supercritical(mass in symmetric_tables()) {
        let dist = BiDegreeDistribution::from_table(&mass, 1e-12).unwrap();
        prop_assume!((dist.nu() - 1.0).abs() > 1e-3);
        let report = predict(&dist).unwrap();
        prop_assert!((report.eta_series - report.eta_closed_form).abs() < 1e-9);
        let (minus, plus) = solve_extinction(&dist).unwrap();
        let certain = minus.root == 1.0 && plus.root == 1.0;
        prop_assert_eq!(certain, Regime::classify(dist.nu()) != Regime::Supercritical);
        prop_assert!((0.0..=1.0).contains(&report.eta));
    }

    #[test]
    fn product_families_factorize(a in 0.2f64..4.0, c in 1u32..4) {
        // Poisson(c) in-degrees with constant c out-degrees: equal means.
        let spec = DistributionSpec::Product {
            minus: UnivariateLaw::Poisson { mean: c as f64 },
            plus: UnivariateLaw::Constant { value: c },
        };
        let dist = spec.build(1e-12).unwrap();
        prop_assert!((dist.nu() - dist.lambda()).abs() < 1e-9);
        let report = predict(&dist).unwrap();
        let factorized = (1.0 - report.rho_minus) * (1.0 - report.rho_plus);
        prop_assert!((report.eta - factorized).abs() < 1e-9);

        let pair = DistributionSpec::PoissonPair { nu: a }.build(1e-12).unwrap();
        prop_assert!((pair.nu() - pair.lambda()).abs() < 1e-9);
    }

    #[test]
    fn scc_partition_matches_closure(g in small_graphs(30, 60)) {
        let report = strongly_connected_components(&g);
        prop_assert_eq!(common::report_partition(&report), common::closure_partition(&g));
    }

    #[test]
    fn scc_partition_survives_relabeling(g in small_graphs(40, 80), seed in any::<u64>()) {
        let mut perm: Vec<usize> = (0..g.n()).collect();
        perm.shuffle(&mut stream_from_seed(seed));
        let h = relabel(&g, &perm, seed ^ 1);
        let original = common::report_partition(&strongly_connected_components(&g));
        let mut mapped: Vec<Vec<usize>> = original
            .iter()
            .map(|class| {
                let mut c: Vec<usize> = class.iter().map(|&v| perm[v]).collect();
                c.sort();
                c
            })
            .collect();
        mapped.sort();
        let relabeled = strongly_connected_components(&h);
        prop_assert_eq!(common::report_partition(&relabeled), mapped);
        prop_assert_eq!(relabeled.giant_order, strongly_connected_components(&g).giant_order);
    }

    #[test]
    fn giant_size_recounts(g in small_graphs(60, 150)) {
        let report = strongly_connected_components(&g);
        let members = report.giant_members();
        prop_assert_eq!(members.len(), report.giant_order);
        let mut inside = vec![false; g.n()];
        for &v in &members {
            inside[v] = true;
        }
        let induced = g.arcs().iter().filter(|&&(u, v)| inside[u] && inside[v]).count();
        prop_assert_eq!(report.giant_size, induced);
        if report.giant_order >= 2 {
            prop_assert!(report.giant_size >= report.giant_order);
        }
        prop_assert!(report.giant_order >= 1);
        prop_assert!(report.second_order <= report.giant_order);
    }

    #[test]
    fn census_matches_arc_subsets(g in small_graphs(7, 12)) {
        let census = cycle_census(&g, 12, u64::MAX);
        prop_assert!(!census.truncated);
        let counted: Vec<u64> = census.counts.values().copied().collect();
        prop_assert_eq!(counted, common::cycles_by_arc_subsets(&g, 12));
    }

    #[test]
    fn forward_on_graph_is_backward_on_reversal(
        g in small_graphs(80, 200),
        omega in 1u64..40,
        start in any::<prop::sample::Index>(),
    ) {
        let v = start.index(g.n());
        let forward = expand(&g, &[v], Traversal::Forward, omega, usize::MAX).unwrap();
        let backward = expand(&g.reversed(), &[v], Traversal::Backward, omega, usize::MAX).unwrap();
        prop_assert_eq!(&forward.level_sizes, &backward.level_sizes);
        prop_assert_eq!(forward.t_omega, backward.t_omega);
        prop_assert_eq!(forward.reachable_halfedges, backward.reachable_halfedges);
        if let Some(t) = forward.t_omega {
            prop_assert_eq!(t, forward.level_sizes.len());
            prop_assert!(forward.level_sizes[t - 1] >= omega);
            prop_assert!(forward.level_sizes[..t - 1].iter().all(|&s| s < omega));
        }
    }

    #[test]
    fn larger_omega_gives_smaller_core(g in small_graphs(120, 260), w1 in 1u64..30, extra in 0u64..30) {
        let w2 = w1 + extra;
        for criterion in [CoreCriterion::LevelThreshold, CoreCriterion::ReachableCount] {
            let big = linear_core(&g, w1, criterion);
            let small = linear_core(&g, w2, criterion);
            prop_assert!(small.members.iter().all(|v| big.members.binary_search(v).is_ok()));
            prop_assert!(big.core_edges <= g.arc_count());
        }
    }

    #[test]
    fn condensation_core_matches_direct(g in small_graphs(80, 200), omega in 1u64..50) {
        for criterion in [CoreCriterion::LevelThreshold, CoreCriterion::ReachableCount] {
            prop_assert_eq!(linear_core(&g, omega, criterion), linear_core_direct(&g, omega, criterion));
        }
    }

    #[test]
    fn giant_with_enough_arcs_lies_in_reachable_core(g in small_graphs(60, 150), omega in 1u64..40) {
        let report = strongly_connected_components(&g);
        prop_assume!(report.giant_size as u64 >= omega);
        let core = linear_core(&g, omega, CoreCriterion::ReachableCount);
        for v in report.giant_members() {
            prop_assert!(core.members.binary_search(&v).is_ok());
        }
    }

    #[test]
    fn pairing_preserves_degrees(
        pairs in prop::collection::vec((0u32..4, 0u32..4), 1..40),
        seed in any::<u64>(),
    ) {
        // Move surplus half-edges onto node 0 so the totals agree.
        let mut pairs = pairs;
        let ins: u32 = pairs.iter().map(|p| p.0).sum();
        let outs: u32 = pairs.iter().map(|p| p.1).sum();
        if ins > outs { pairs[0].1 += ins - outs } else { pairs[0].0 += outs - ins }
        let seq = BiDegreeSequence::new(pairs).unwrap();
        let g = pair_configuration(&seq, &mut stream_from_seed(seed));
        prop_assert_eq!(g.degree_sequence().unwrap(), seq);
    }

    #[test]
    fn simple_outputs_are_simple(n in 10usize..400, seed in any::<u64>()) {
        let dist = DistributionSpec::PoissonPair { nu: 1.5 }.build(1e-12).unwrap();
        let mut rng = stream_from_seed(seed);
        let seq = dist.sample_sequence(n, &mut rng).unwrap();
        if let Ok(g) = generate_simple(&seq, &mut rng, 1000) {
            prop_assert_eq!(g.loop_count(), 0);
            prop_assert_eq!(g.parallel_excess(), 0);
            prop_assert_eq!(g.degree_sequence().unwrap(), seq);
        }
    }

    #[test]
    fn expansion_trial_stops_at_first_crossing(
        mean in 1.1f64..3.0,
        x in 1u64..5,
        omega in 2u64..500,
        seed in any::<u64>(),
    ) {
        let law = OffspringLaw::from_univariate(&UnivariateLaw::Poisson { mean }, 1e-12).unwrap();
        let trial = expansion_trial(&law, x, omega, 200, &mut stream_from_seed(seed));
        prop_assert_eq!(trial.generation_sizes[0], x);
        if let Some(t) = trial.hit_generation {
            prop_assert!(trial.generation_sizes[t] >= omega);
            prop_assert!(trial.generation_sizes[..t].iter().all(|&s| s < omega));
        }
    }
}

#[test]
fn experiment_records_are_reproducible_and_complete() {
    let config = ExperimentConfig::new(
        DistributionSpec::PoissonPair { nu: 1.5 },
        vec![200, 800],
        6,
        99,
    )
    .with_core(OmegaPolicy::LogSquared)
    .with_census(6);
    let a = run_experiment(&config).unwrap();
    let b = run_experiment(&config).unwrap();
    assert_eq!(a.records.len(), 2 * 6);
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!(x.same_measurements(y));
        assert_eq!(x.seed, derive_trial_seed(99, x.n as u64, x.trial));
        assert!((0.0..=1.0).contains(&x.v_ratio));
    }
    let mut other = config.clone();
    other.seed = 100;
    let c = run_experiment(&other).unwrap();
    assert!(a
        .records
        .iter()
        .zip(&c.records)
        .any(|(x, y)| !x.same_measurements(y)));

    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    a.write_csv(&mut csv_a).unwrap();
    b.write_csv(&mut csv_b).unwrap();
    let strip = |bytes: &[u8]| -> Vec<String> {
        String::from_utf8(bytes.to_vec())
            .unwrap()
            .lines()
            .map(|l| l.rsplitn(3, ',').nth(2).unwrap().to_string())
            .collect()
    };
    assert_eq!(strip(&csv_a), strip(&csv_b));
}

#[test]
fn simple_mode_experiment_runs() {
    let mut config =
        ExperimentConfig::new(DistributionSpec::PoissonPair { nu: 1.5 }, vec![300], 3, 5);
    config.mode = GraphMode::Simple;
    let outcome = run_experiment(&config).unwrap();
    assert_eq!(outcome.records.len(), 3);
}
