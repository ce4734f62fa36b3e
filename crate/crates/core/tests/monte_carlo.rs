//! Seeded Monte-Carlo checks of the sampler and the cascade simulator.

use spreader_core::features::{normalize_out_weights, WeightSource};
use spreader_core::sampler::{sample, SamplerConfig, SamplerMode};
use spreader_core::seed::{derive, derive_index};
use spreader_core::synth::{generate_sbm, seeds_per_community, simulate_cascade, CascadeConfig, SbmConfig};
use spreader_core::tsm::{compute_believability, compute_tsm, TsmConfig};
use spreader_core::{DirectedGraph, NodeId};

fn star(weights: &[f64]) -> DirectedGraph {
    let edges = weights.iter().enumerate().map(|(i, &w)| (0, i as u32 + 1, w));
    DirectedGraph::from_edges(weights.len() + 1, edges).unwrap().0
}

/// First-pick counts per leaf over `draws` single-draw samples.
fn first_picks(g: &DirectedGraph, mode: SamplerMode, draws: u64, stream: u64) -> Vec<u64> {
    let w = normalize_out_weights(g, g.weights(), WeightSource::Graph).unwrap();
    let mut counts = vec![0u64; g.out_degree(NodeId(0))];
    for d in 0..draws {
        let cfg = SamplerConfig {
            depth: 1,
            sample_size: 1,
            mode,
            seed: derive_index(stream, d),
        };
        let v = sample(NodeId(0), &w, &cfg).unwrap().drawn(NodeId(0))[0];
        counts[v.index() - 1] += 1;
    }
    counts
}

#[test]
fn weighted_first_pick_matches_weights() {
    let weights = [0.5, 0.3, 0.2];
    let draws = 100_000;
    let counts = first_picks(&star(&weights), SamplerMode::Weighted, draws, derive(3, "tv"));
    let tv: f64 = 0.5
        * counts
            .iter()
            .zip(weights)
            .map(|(&c, w)| (c as f64 / draws as f64 - w).abs())
            .sum::<f64>();
    assert!(tv < 0.01, "total variation {tv}");
}

#[test]
fn uniform_mode_matches_weighted_mode_on_equal_weights() {
    let g = star(&[1.0; 10]);
    let draws = 10_000;
    let a = first_picks(&g, SamplerMode::Weighted, draws, derive(4, "weighted"));
    let b = first_picks(&g, SamplerMode::Uniform, draws, derive(4, "uniform"));
    // two-sample chi-square homogeneity statistic, equal sample sizes
    let chi2: f64 = a
        .iter()
        .zip(&b)
        .filter(|(x, y)| **x + **y > 0)
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2) / (x + y) as f64)
        .sum();
    // 99th percentile of chi-square with 9 degrees of freedom
    assert!(chi2 < 21.666, "chi-square {chi2}");
}

#[test]
fn cascade_mean_is_stable_across_streams() {
    let (g, planted) = generate_sbm(&SbmConfig::uniform(4, 25, 0.15, 0.02, 17)).unwrap();
    assert_eq!(g.node_count(), 100);
    let scores = compute_tsm(&g, &TsmConfig::default()).unwrap();
    let bel = compute_believability(&g, &scores).unwrap();
    let seeds = seeds_per_community(&planted, 1, 17);
    let replications = 10_000u64;
    let mean_spreaders = |stream: u64| {
        let total: usize = (0..replications)
            .map(|r| {
                let cfg = CascadeConfig {
                    seeds: seeds.clone(),
                    beta: 0.3,
                    seed: derive_index(stream, r),
                    ..CascadeConfig::default()
                };
                simulate_cascade(&g, &bel, &cfg).unwrap().spreaders().len()
            })
            .sum();
        total as f64 / replications as f64
    };
    let a = mean_spreaders(derive(17, "stream-a"));
    let b = mean_spreaders(derive(17, "stream-b"));
    assert!(a > seeds.len() as f64, "cascade never spreads: mean {a}");
    assert!((a - b).abs() / b < 0.02, "means {a} and {b} differ by more than 2%");
}
