#![allow(dead_code)]

use cogatr_core::cognition::{
    check_confidence, run_trial, Banks, CognitivePolicy, Confidence, ProcessingVariant, TrialOutcome, TrialState,
};
use cogatr_core::config::ExperimentConfig;
use cogatr_core::harness::{target_seed, Harness};
use cogatr_core::scene::{make_target, Geometry, RadarBand, TargetModel};
use cogatr_core::TargetClass;

/// One elevation, 5 degree training grid, `trials` test trials per class.
pub fn small_config(trials: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.experiment.elevations_deg = vec![12.0];
    c.experiment.train_azimuth_step_deg = 5.0;
    c.experiment.test_trials_per_class = trials;
    c
}

pub fn small_harness(trials: usize) -> Harness {
    Harness::new(small_config(trials), None).unwrap()
}

pub fn targets(master_seed: u64) -> Vec<TargetModel> {
    TargetClass::ALL
        .iter()
        .map(|&c| make_target(c, target_seed(master_seed, c)))
        .collect()
}

/// Violations of the loop invariants for one finished trial; empty if none.
/// Re-runs the trial to check determinism and first-majority stopping.
#[allow(clippy::too_many_arguments)]
pub fn invariant_violations(
    outcome: &TrialOutcome,
    target: &TargetModel,
    start: &Geometry,
    band: &RadarBand,
    banks: &Banks,
    policy: &CognitivePolicy,
    snr_db: f64,
    noise_seed: u64,
) -> Vec<String> {
    let mut v = Vec::new();
    let p = outcome.perspectives_used;
    let m = policy.profiles_per_perspective as u32;
    let total = outcome.total_votes;

    if outcome.votes.iter().sum::<u32>() != total {
        v.push(format!("votes {:?} do not sum to {total}", outcome.votes));
    }
    if p == 0 || p > policy.max_perspectives {
        v.push(format!("{p} perspectives with K = {}", policy.max_perspectives));
    }
    let pm = p as u32 * m;
    let conserved = match policy.variant {
        ProcessingVariant::TimeOnly => total == pm,
        ProcessingVariant::TimeFreqSimultaneous => total == 2 * pm,
        ProcessingVariant::TimeThenFreq => (pm..=2 * pm).contains(&total),
    };
    if !conserved {
        v.push(format!("{total} votes after {p} perspectives of {m} profiles"));
    }

    let state = TrialState::with_votes(outcome.votes);
    let majority = check_confidence(&state, policy).unwrap() == Confidence::Confident;
    match outcome.declared_class {
        None => {
            if p != policy.max_perspectives || majority || outcome.confidence != Confidence::NotConfident {
                v.push("unclassified without exhausting K or despite a majority".into());
            }
        }
        Some(c) => {
            if !majority || outcome.confidence != Confidence::Confident {
                v.push("declared without a majority".into());
            }
            if c != outcome.leading_class {
                v.push("declared class is not the leading class".into());
            }
        }
    }
    if outcome.correct != (outcome.declared_class == Some(target.class)) {
        v.push("correct flag disagrees with declaration".into());
    }

    let again = run_trial(target, start, band, banks, policy, snr_db, noise_seed).unwrap();
    if &again != outcome {
        v.push("rerun with the same seed differs".into());
    }
    if p > 1 {
        let shorter = CognitivePolicy {
            max_perspectives: p - 1,
            ..*policy
        };
        let early = run_trial(target, start, band, banks, &shorter, snr_db, noise_seed).unwrap();
        if early.declared_class.is_some() {
            v.push(format!("a majority already existed after {} perspectives", p - 1));
        }
    }
    v
}
