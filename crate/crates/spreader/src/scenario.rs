//! Synthetic world: planted-block graph, trust scores, a believability
//! cascade and activity records consistent with both.

use log::info;
use spreader_core::experiment::{prepare, ExperimentConfig, SeedSchedule};
use spreader_core::features::ActivityTable;
use spreader_core::seed;
use spreader_core::synth::{
    calibrate_beta, generate_activity, generate_sbm, seeds_per_community, simulate_cascade, spreader_fraction,
    ActivityConfig, CascadeConfig, CascadeTrace, SbmConfig,
};
use spreader_core::tsm::{compute_believability, compute_tsm, BelievabilityScores, TrustScores};
use spreader_core::DirectedGraph;

use crate::config::{Beta, SynthSettings};
use crate::error::Result;

/// Bisection steps allowed when calibrating the cascade scale.
pub const CALIBRATION_STEPS: u32 = 60;

#[derive(Clone, Debug)]
pub struct Scenario {
    pub graph: DirectedGraph,
    pub planted: Vec<u32>,
    pub scores: TrustScores,
    pub believability: BelievabilityScores,
    pub beta: f64,
    pub trace: CascadeTrace,
    pub activity: ActivityTable,
    /// Spreader fraction among the boundary nodes the pipeline will see.
    pub boundary_spreader_fraction: f64,
}

/// Builds a scenario from `settings`; every stream derives from `master_seed`.
///
/// With `Beta::Auto` the cascade scale is bisected until the boundary
/// spreader fraction lies in the target window. Boundary nodes are taken
/// from the same community pass the pipeline runs under `exp`.
pub fn build_scenario(settings: &SynthSettings, exp: &ExperimentConfig, master_seed: u64) -> Result<Scenario> {
    let sbm = SbmConfig::uniform(
        settings.communities,
        settings.community_size,
        settings.p_in,
        settings.p_out,
        seed::derive(master_seed, "sbm"),
    );
    let (graph, planted) = generate_sbm(&sbm)?;
    info!("generated {} nodes, {} edges", graph.node_count(), graph.edge_count());
    let scores = compute_tsm(&graph, &exp.tsm)?;
    let believability = compute_believability(&graph, &scores)?;
    let base = CascadeConfig {
        seeds: seeds_per_community(
            &planted,
            settings.seeds_per_community,
            seed::derive(master_seed, "cascade-seeds"),
        ),
        seed: seed::derive(master_seed, "cascade"),
        ..CascadeConfig::default()
    };

    // roles depend only on the graph, so any trace of the right size will do
    let placeholder = CascadeTrace::from_status(
        vec![spreader_core::synth::NodeStatus::Unexposed; graph.node_count()],
        vec![None; graph.node_count()],
    )?;
    let exp = ExperimentConfig {
        master_seed,
        ..exp.clone()
    };
    let boundary = prepare(&graph, &placeholder, &exp, &SeedSchedule::new(master_seed))?
        .cha
        .boundary_nodes();

    let (beta, trace) = match settings.beta {
        Beta::Fixed(beta) => (
            beta,
            simulate_cascade(&graph, &believability, &CascadeConfig { beta, ..base })?,
        ),
        Beta::Auto => calibrate_beta(
            &graph,
            &believability,
            &base,
            &boundary,
            settings.target_low,
            settings.target_high,
            CALIBRATION_STEPS,
        )?,
    };
    let boundary_spreader_fraction = spreader_fraction(&trace, &boundary);
    info!("cascade scale {beta:.6}, boundary spreader fraction {boundary_spreader_fraction:.3}");
    let activity = generate_activity(
        &graph,
        &believability,
        &trace,
        &ActivityConfig {
            timeline_size: settings.timeline_size,
            trials: settings.trials,
            seed: seed::derive(master_seed, "activity"),
        },
    )?;
    Ok(Scenario {
        graph,
        planted,
        scores,
        believability,
        beta,
        trace,
        activity,
        boundary_spreader_fraction,
    })
}
