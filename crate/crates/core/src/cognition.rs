//! The cognitive perspective loop.
//!
//! Every perspective contributes votes, one per scored feature vector. The
//! trial stops as soon as one class holds a strict majority of all votes
//! cast so far. Otherwise the transmitter steps by `delta_theta_deg` in
//! azimuth and another perspective is collected, up to `max_perspectives`;
//! running out of perspectives without a majority leaves the target
//! unclassified.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classifier::TemplateBank;
use crate::dsp::{features_from_kspace, Domain, FeatureVector};
use crate::scene::{Geometry, Look, RadarBand, TargetModel};
use crate::seed;
use crate::{Error, Result, TargetClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ProcessingVariant {
    /// Range-profile votes only.
    #[serde(rename = "TIME_ONLY")]
    TimeOnly,
    /// One range and one frequency vote per profile.
    #[serde(rename = "TIME_FREQ_SIMULTANEOUS")]
    TimeFreqSimultaneous,
    /// Range votes first; frequency votes for the same profiles only when
    /// the range votes leave the trial without a majority.
    #[serde(rename = "TIME_THEN_FREQ")]
    TimeThenFreq,
}

impl ProcessingVariant {
    pub const ALL: [ProcessingVariant; 3] = [
        ProcessingVariant::TimeOnly,
        ProcessingVariant::TimeFreqSimultaneous,
        ProcessingVariant::TimeThenFreq,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProcessingVariant::TimeOnly => "TIME_ONLY",
            ProcessingVariant::TimeFreqSimultaneous => "TIME_FREQ_SIMULTANEOUS",
            ProcessingVariant::TimeThenFreq => "TIME_THEN_FREQ",
        }
    }

    pub fn domains(self) -> &'static [Domain] {
        match self {
            ProcessingVariant::TimeOnly => &[Domain::Range],
            _ => &[Domain::Range, Domain::Frequency],
        }
    }

    /// Profiles per perspective: two for the single-channel variant, one
    /// when both channels vote, so every variant casts two votes per
    /// perspective.
    pub fn default_profiles_per_perspective(self) -> usize {
        match self {
            ProcessingVariant::TimeOnly => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ProcessingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProcessingVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown processing variant `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CognitivePolicy {
    pub delta_theta_deg: f64,
    pub max_perspectives: usize,
    pub profiles_per_perspective: usize,
    pub majority_fraction: f64,
    /// Votes the leading class needs, on top of the majority, before the
    /// decision counts as confident. A lone vote is never a consensus.
    pub min_votes: u32,
    pub variant: ProcessingVariant,
}

impl CognitivePolicy {
    pub const DEFAULT_MAX_PERSPECTIVES: usize = 10;
    pub const DEFAULT_MAJORITY_FRACTION: f64 = 0.5;
    pub const DEFAULT_MIN_VOTES: u32 = 2;

    pub fn for_variant(variant: ProcessingVariant, delta_theta_deg: f64) -> Self {
        Self {
            delta_theta_deg,
            max_perspectives: Self::DEFAULT_MAX_PERSPECTIVES,
            profiles_per_perspective: variant.default_profiles_per_perspective(),
            majority_fraction: Self::DEFAULT_MAJORITY_FRACTION,
            min_votes: Self::DEFAULT_MIN_VOTES,
            variant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |field, message: String| Err(Error::Policy { field, message });
        if !(self.delta_theta_deg.is_finite() && self.delta_theta_deg >= 0.0) {
            return invalid(
                "delta_theta_deg",
                format!("must be finite and non-negative, got {}", self.delta_theta_deg),
            );
        }
        if self.max_perspectives == 0 {
            return invalid("max_perspectives", "must be at least 1".into());
        }
        if self.profiles_per_perspective == 0 {
            return invalid("profiles_per_perspective", "must be at least 1".into());
        }
        if !(self.majority_fraction > 0.0 && self.majority_fraction <= 1.0) {
            return invalid(
                "majority_fraction",
                format!("must lie in (0, 1], got {}", self.majority_fraction),
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Confidence {
    Confident,
    NotConfident,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialStatus {
    InProgress,
    Classified,
    Unclassified,
}

/// Template banks keyed by domain.
#[derive(Debug, Clone, Default)]
pub struct Banks {
    range: Option<TemplateBank>,
    frequency: Option<TemplateBank>,
}

impl Banks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, bank: TemplateBank) -> Option<TemplateBank> {
        let slot = match bank.domain() {
            Domain::Range => &mut self.range,
            Domain::Frequency => &mut self.frequency,
        };
        slot.replace(bank)
    }

    pub fn with(mut self, bank: TemplateBank) -> Self {
        self.insert(bank);
        self
    }

    pub fn get(&self, domain: Domain) -> Result<&TemplateBank> {
        match domain {
            Domain::Range => self.range.as_ref(),
            Domain::Frequency => self.frequency.as_ref(),
        }
        .ok_or(Error::MissingBank(domain.label()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialState {
    votes: [u32; TargetClass::COUNT],
    total_votes: u32,
    /// Summed per-class log-likelihood over every scored feature; breaks vote ties.
    evidence: [f64; TargetClass::COUNT],
    perspectives_used: usize,
    current_tx_azimuth_deg: f64,
    confidence: Confidence,
    status: TrialStatus,
}

impl TrialState {
    pub fn new(start_tx_azimuth_deg: f64) -> Self {
        Self {
            votes: [0; TargetClass::COUNT],
            total_votes: 0,
            evidence: [0.0; TargetClass::COUNT],
            perspectives_used: 0,
            current_tx_azimuth_deg: start_tx_azimuth_deg,
            confidence: Confidence::NotConfident,
            status: TrialStatus::InProgress,
        }
    }

    /// State holding the given tally and nothing else.
    pub fn with_votes(votes: [u32; TargetClass::COUNT]) -> Self {
        Self {
            votes,
            total_votes: votes.iter().sum(),
            ..Self::new(0.0)
        }
    }

    pub fn votes(&self, class: TargetClass) -> u32 {
        self.votes[class.index()]
    }

    pub fn vote_tally(&self) -> [u32; TargetClass::COUNT] {
        self.votes
    }

    pub fn total_votes(&self) -> u32 {
        self.total_votes
    }

    pub fn perspectives_used(&self) -> usize {
        self.perspectives_used
    }

    pub fn current_tx_azimuth_deg(&self) -> f64 {
        self.current_tx_azimuth_deg
    }

    pub fn confidence(&self) -> Confidence {
        self.confidence
    }

    pub fn status(&self) -> TrialStatus {
        self.status
    }

    /// Scores every feature against the bank of its domain and adds one
    /// vote per feature. Nothing changes if any feature fails to score.
    pub fn cast_votes(&mut self, features: &[FeatureVector], banks: &Banks) -> Result<()> {
        let scores = features
            .iter()
            .map(|f| banks.get(f.domain)?.score(f))
            .collect::<Result<Vec<_>>>()?;
        for s in scores {
            self.votes[s.best_class.index()] += 1;
            self.total_votes += 1;
            for (acc, ll) in self.evidence.iter_mut().zip(s.log_likelihood) {
                *acc += ll;
            }
        }
        Ok(())
    }

    /// Class with the most votes; ties go to the larger summed
    /// log-likelihood, then to the earlier class.
    pub fn leading_class(&self) -> TargetClass {
        let mut best = TargetClass::Apc;
        for class in TargetClass::ALL.into_iter().skip(1) {
            let (c, b) = (class.index(), best.index());
            if self.votes[c] > self.votes[b] || (self.votes[c] == self.votes[b] && self.evidence[c] > self.evidence[b])
            {
                best = class;
            }
        }
        best
    }
}

/// Strict-majority test: CONFIDENT iff the top class holds more than
/// `majority_fraction` of all votes and at least `min_votes` of them.
pub fn check_confidence(state: &TrialState, policy: &CognitivePolicy) -> Result<Confidence> {
    if state.total_votes == 0 {
        return Err(Error::NoVotes);
    }
    let top = state.votes.iter().copied().max().unwrap_or(0);
    let majority = f64::from(top) > policy.majority_fraction * f64::from(state.total_votes);
    Ok(if majority && top >= policy.min_votes {
        Confidence::Confident
    } else {
        Confidence::NotConfident
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// `None` means unclassified.
    pub declared_class: Option<TargetClass>,
    pub confidence: Confidence,
    pub perspectives_used: usize,
    pub true_class: TargetClass,
    pub correct: bool,
    /// The maximum-vote class even when nothing was declared.
    pub leading_class: TargetClass,
    pub votes: [u32; TargetClass::COUNT],
    pub total_votes: u32,
}

impl TrialOutcome {
    fn from_state(state: &TrialState, declared_class: Option<TargetClass>, true_class: TargetClass) -> Self {
        Self {
            declared_class,
            confidence: state.confidence,
            perspectives_used: state.perspectives_used,
            true_class,
            correct: declared_class == Some(true_class),
            leading_class: state.leading_class(),
            votes: state.votes,
            total_votes: state.total_votes,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Gate {
    /// Stop on the first majority, unclassified at exhaustion.
    Majority,
    /// Always take every perspective and declare the leading class.
    Exhaust,
}

/// Runs one cognitive trial from `start`.
///
/// Profile `j` of perspective `p` uses noise seed `derive(noise_seed, [p, j])`.
pub fn run_trial(
    target: &TargetModel,
    start: &Geometry,
    band: &RadarBand,
    banks: &Banks,
    policy: &CognitivePolicy,
    snr_db: f64,
    noise_seed: u64,
) -> Result<TrialOutcome> {
    run(target, start, band, banks, policy, snr_db, noise_seed, Gate::Majority)
}

/// Non-cognitive multi-look baseline: always collects exactly
/// `policy.max_perspectives` perspectives and declares the class with the
/// most cumulative votes.
pub fn run_fixed_perspectives(
    target: &TargetModel,
    start: &Geometry,
    band: &RadarBand,
    banks: &Banks,
    policy: &CognitivePolicy,
    snr_db: f64,
    noise_seed: u64,
) -> Result<TrialOutcome> {
    run(target, start, band, banks, policy, snr_db, noise_seed, Gate::Exhaust)
}

#[allow(clippy::too_many_arguments)]
fn run(
    target: &TargetModel,
    start: &Geometry,
    band: &RadarBand,
    banks: &Banks,
    policy: &CognitivePolicy,
    snr_db: f64,
    noise_seed: u64,
    gate: Gate,
) -> Result<TrialOutcome> {
    policy.validate()?;
    for &domain in policy.variant.domains() {
        banks.get(domain)?;
    }

    let mut state = TrialState::new(start.tx_azimuth_deg());
    let mut geometry = *start;
    loop {
        let p = state.perspectives_used as u64;
        let kspaces = (0..policy.profiles_per_perspective as u64)
            .map(|j| Look::acquire(target, geometry, band, snr_db, seed::derive(noise_seed, &[p, j])).map(|l| l.kspace))
            .collect::<Result<Vec<_>>>()?;
        let features = |domain: Domain| {
            kspaces
                .iter()
                .map(|k| features_from_kspace(k, domain))
                .collect::<Result<Vec<_>>>()
        };
        state.perspectives_used += 1;

        match policy.variant {
            ProcessingVariant::TimeOnly => state.cast_votes(&features(Domain::Range)?, banks)?,
            ProcessingVariant::TimeFreqSimultaneous => {
                state.cast_votes(&features(Domain::Range)?, banks)?;
                state.cast_votes(&features(Domain::Frequency)?, banks)?;
            }
            ProcessingVariant::TimeThenFreq => {
                state.cast_votes(&features(Domain::Range)?, banks)?;
                if check_confidence(&state, policy)? == Confidence::NotConfident {
                    state.cast_votes(&features(Domain::Frequency)?, banks)?;
                }
            }
        }
        state.confidence = check_confidence(&state, policy)?;

        if gate == Gate::Majority && state.confidence == Confidence::Confident {
            state.status = TrialStatus::Classified;
            return Ok(TrialOutcome::from_state(
                &state,
                Some(state.leading_class()),
                target.class,
            ));
        }
        if state.perspectives_used >= policy.max_perspectives {
            return Ok(match gate {
                Gate::Majority => {
                    state.status = TrialStatus::Unclassified;
                    TrialOutcome::from_state(&state, None, target.class)
                }
                Gate::Exhaust => {
                    state.status = TrialStatus::Classified;
                    TrialOutcome::from_state(&state, Some(state.leading_class()), target.class)
                }
            });
        }
        geometry = geometry.rotated(policy.delta_theta_deg);
        state.current_tx_azimuth_deg = geometry.tx_azimuth_deg();
    }
}
