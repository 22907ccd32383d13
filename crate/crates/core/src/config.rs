//! Experiment configuration.
//!
//! The file is TOML with three flat sections: `[experiment]`, `[band]` and
//! `[policy]`. Every key has a default, unknown keys are rejected, and
//! `section.key=value` overrides are applied on top of the file before
//! validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{sector_of, NUM_SECTORS};
use crate::cognition::{CognitivePolicy, ProcessingVariant};
use crate::scene::{RadarBand, TargetClass, MAX_BISTATIC_ANGLE_DEG, MAX_ELEVATION_DEG, MIN_ELEVATION_DEG};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub band: BandSection,
    pub policy: PolicySection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub master_seed: u64,
    pub beta_deg: f64,
    pub elevations_deg: Vec<f64>,
    pub classes: Vec<TargetClass>,
    pub train_azimuth_step_deg: f64,
    pub test_trials_per_class: usize,
    pub snr_grid_db: Vec<f64>,
    pub delta_theta_grid_deg: Vec<f64>,
    /// SNR at which the delta-theta sweep runs.
    pub dtheta_sweep_snr_db: f64,
    /// Fixed step used by the SNR sweep.
    pub snr_sweep_delta_theta_deg: f64,
    pub baseline_delta_theta_deg: f64,
    pub variants: Vec<ProcessingVariant>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            master_seed: 20_100_531,
            beta_deg: 30.0,
            elevations_deg: vec![10.0, 11.7, 13.3, 15.0],
            classes: TargetClass::ALL.to_vec(),
            train_azimuth_step_deg: 2.5,
            test_trials_per_class: 1000,
            snr_grid_db: vec![-20.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 30.0, f64::INFINITY],
            delta_theta_grid_deg: vec![0.0, 1.8, 3.6, 5.0, 7.2, 10.0, 14.4],
            dtheta_sweep_snr_db: 10.0,
            snr_sweep_delta_theta_deg: 3.6,
            baseline_delta_theta_deg: 5.0,
            variants: ProcessingVariant::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandSection {
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub num_frequency_samples: usize,
}

impl Default for BandSection {
    fn default() -> Self {
        let band = RadarBand::default();
        Self {
            center_frequency_hz: band.center_frequency_hz(),
            bandwidth_hz: band.bandwidth_hz(),
            num_frequency_samples: band.num_frequency_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub delta_theta_deg: f64,
    pub max_perspectives: usize,
    /// Unset means the variant's own default (2 for TIME_ONLY, else 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles_per_perspective: Option<usize>,
    pub majority_fraction: f64,
    pub min_votes: u32,
    pub variant: ProcessingVariant,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            delta_theta_deg: 3.6,
            max_perspectives: CognitivePolicy::DEFAULT_MAX_PERSPECTIVES,
            profiles_per_perspective: None,
            majority_fraction: CognitivePolicy::DEFAULT_MAJORITY_FRACTION,
            min_votes: CognitivePolicy::DEFAULT_MIN_VOTES,
            variant: ProcessingVariant::TimeFreqSimultaneous,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config(error_key(&e), e.message().to_string()))?;
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        let config: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(error_key(&e), e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn band(&self) -> Result<RadarBand> {
        RadarBand::new(
            self.band.center_frequency_hz,
            self.band.bandwidth_hz,
            self.band.num_frequency_samples,
        )
        .map_err(|e| Error::config("band", e.to_string()))
    }

    /// Policy for `variant` at step `delta_theta_deg`, other fields from `[policy]`.
    pub fn policy(&self, variant: ProcessingVariant, delta_theta_deg: f64) -> CognitivePolicy {
        CognitivePolicy {
            delta_theta_deg,
            max_perspectives: self.policy.max_perspectives,
            profiles_per_perspective: self
                .policy
                .profiles_per_perspective
                .unwrap_or_else(|| variant.default_profiles_per_perspective()),
            majority_fraction: self.policy.majority_fraction,
            min_votes: self.policy.min_votes,
            variant,
        }
    }

    /// Whether `section.key` names a configuration field.
    pub fn is_known_key(key: &str) -> bool {
        let Some((section, field)) = key.split_once('.') else {
            return false;
        };
        if section == "policy" && field == "profiles_per_perspective" {
            return true;
        }
        let defaults: toml::Table = ExperimentConfig::default()
            .to_toml_string()
            .parse()
            .expect("default config parses");
        defaults
            .get(section)
            .and_then(toml::Value::as_table)
            .is_some_and(|t| t.contains_key(field))
    }

    /// Training grid azimuths `k * step` for `k = 0 .. 360/step`.
    pub fn training_azimuths(&self) -> Vec<f64> {
        let step = self.experiment.train_azimuth_step_deg;
        let n = (360.0 / step).round() as usize;
        (0..n).map(|k| k as f64 * step).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        self.band()?;
        if !(0.0..MAX_BISTATIC_ANGLE_DEG).contains(&e.beta_deg) {
            return Err(Error::config(
                "experiment.beta_deg",
                format!("must lie in [0, {MAX_BISTATIC_ANGLE_DEG}), got {}", e.beta_deg),
            ));
        }
        if e.elevations_deg.is_empty() {
            return Err(Error::config("experiment.elevations_deg", "must not be empty"));
        }
        if let Some(el) = e
            .elevations_deg
            .iter()
            .find(|el| !(MIN_ELEVATION_DEG..=MAX_ELEVATION_DEG).contains(*el))
        {
            return Err(Error::config(
                "experiment.elevations_deg",
                format!("{el} is outside [{MIN_ELEVATION_DEG}, {MAX_ELEVATION_DEG}]"),
            ));
        }
        let mut classes = e.classes.clone();
        classes.sort();
        classes.dedup();
        if classes != TargetClass::ALL || e.classes.len() != TargetClass::COUNT {
            return Err(Error::config(
                "experiment.classes",
                "must list APC, MBT, MSL and STR exactly once each",
            ));
        }

        let step = e.train_azimuth_step_deg;
        let n = (360.0 / step).round();
        if !(step.is_finite() && step > 0.0 && (n * step - 360.0).abs() < 1e-9) {
            return Err(Error::config(
                "experiment.train_azimuth_step_deg",
                format!("{step} does not divide 360 evenly"),
            ));
        }
        let mut per_sector = [0usize; NUM_SECTORS];
        // templates are binned by the bisector azimuth
        for az in self.training_azimuths() {
            per_sector[sector_of(az + e.beta_deg / 2.0).value()] += 1;
        }
        if let Some(s) = per_sector.iter().position(|&c| c < 2) {
            return Err(Error::config(
                "experiment.train_azimuth_step_deg",
                format!(
                    "step {step} leaves sector {s} with {} training azimuth(s); every sector needs at least 2",
                    per_sector[s]
                ),
            ));
        }

        if e.test_trials_per_class == 0 {
            return Err(Error::config("experiment.test_trials_per_class", "must be positive"));
        }
        check_snrs("experiment.snr_grid_db", &e.snr_grid_db)?;
        check_snrs("experiment.dtheta_sweep_snr_db", &[e.dtheta_sweep_snr_db])?;
        check_steps("experiment.delta_theta_grid_deg", &e.delta_theta_grid_deg)?;
        check_steps("experiment.snr_sweep_delta_theta_deg", &[e.snr_sweep_delta_theta_deg])?;
        check_steps("experiment.baseline_delta_theta_deg", &[e.baseline_delta_theta_deg])?;
        if e.variants.is_empty() {
            return Err(Error::config("experiment.variants", "must not be empty"));
        }

        for variant in ProcessingVariant::ALL {
            self.policy(variant, self.policy.delta_theta_deg)
                .validate()
                .map_err(|err| match err {
                    Error::Policy { field, message } => Error::config(format!("policy.{field}"), message),
                    other => other,
                })?;
        }
        Ok(())
    }
}

fn check_snrs(key: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(key, "must not be empty"));
    }
    if let Some(v) = values.iter().find(|v| v.is_nan() || **v == f64::NEG_INFINITY) {
        return Err(Error::config(key, format!("{v} is not a usable SNR")));
    }
    Ok(())
}

fn check_steps(key: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(key, "must not be empty"));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::config(key, format!("{v} is not a non-negative angle")));
    }
    Ok(())
}

fn error_key(e: &toml::de::Error) -> String {
    // toml reports the offending key in the message; fall back to the file
    e.message()
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "<config>".to_string())
}

fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let (section, field) = key
        .split_once('.')
        .filter(|(s, f)| !s.is_empty() && !f.is_empty() && !f.contains('.'))
        .ok_or_else(|| Error::config(key, "overrides take the form section.key=value"))?;
    if !matches!(section, "experiment" | "band" | "policy") {
        return Err(Error::config(key, format!("unknown section `{section}`")));
    }
    let value = parse_value(raw);
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let section_table = entry
        .as_table_mut()
        .ok_or_else(|| Error::config(section, "is not a section"))?;
    section_table.insert(field.to_string(), value);
    Ok(())
}

/// Reads an override value as a TOML literal, or as a bare string when it
/// is not one (`policy.variant=TIME_ONLY`).
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
