//! Dataset generation, training, and Monte Carlo sweeps.
//!
//! Every random draw is derived from the configured master seed, and
//! trials are reduced in index order, so the bytes of every output file are
//! independent of the worker count. Test draws (start azimuth, elevation,
//! noise seed) depend only on the class and trial index: the same trials
//! are replayed across variants, steps and SNRs, which makes comparisons
//! between rows paired.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::classifier::{self, TemplateBank, TrainingSample};
use crate::cognition::{self, Banks, CognitivePolicy, ProcessingVariant, TrialOutcome};
use crate::config::ExperimentConfig;
use crate::dsp::{features_from_kspace, Domain};
use crate::scene::{angle_difference_deg, make_target, synthesize_kspace, Geometry, RadarBand, TargetModel};
use crate::seed;
use crate::{Error, Result, TargetClass};

pub const DATASET_FORMAT: &str = "cogatr-ds-v1";
pub const CSV_HEADER: &str =
    "variant,delta_theta_deg,snr_db,pcc_percent,unclassified_percent,median_perspectives,trials";

/// Test start azimuths stay at least this far from any training azimuth.
pub const MIN_TRAIN_OFFSET_DEG: f64 = 0.1;

const TAG_TARGET: u64 = 1;
const TAG_TRIAL: u64 = 2;

pub fn target_seed(master_seed: u64, class: TargetClass) -> u64 {
    seed::derive(master_seed, &[TAG_TARGET, class.index() as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub num_frequency_samples: usize,
    pub master_seed: u64,
}

/// One look as stored in the dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub class: TargetClass,
    pub target_seed: u64,
    pub tx_az_deg: f64,
    pub beta_deg: f64,
    pub elev_deg: f64,
    #[serde(serialize_with = "ser_snr", deserialize_with = "de_snr")]
    pub snr_db: f64,
    pub kspace_re: Vec<f64>,
    pub kspace_im: Vec<f64>,
}

impl DatasetRecord {
    pub fn kspace(&self) -> Vec<Complex64> {
        self.kspace_re
            .iter()
            .zip(&self.kspace_im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect()
    }
}

// JSON has no infinity; noiseless looks carry the string "inf".
fn ser_snr<S: Serializer>(snr: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *snr == f64::INFINITY {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*snr)
    }
}

fn de_snr<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Snr {
        Number(f64),
        Text(String),
    }
    match Snr::deserialize(d)? {
        Snr::Number(v) => Ok(v),
        Snr::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Snr::Text(t) => Err(serde::de::Error::custom(format!("bad snr_db `{t}`"))),
    }
}

/// Noiseless training looks for every class, elevation and grid azimuth.
pub fn training_records(config: &ExperimentConfig) -> Result<Vec<DatasetRecord>> {
    let band = config.band()?;
    let e = &config.experiment;
    let azimuths = config.training_azimuths();
    let mut jobs: Vec<(TargetClass, f64, f64)> = Vec::new();
    for &class in &e.classes {
        for &elev in &e.elevations_deg {
            jobs.extend(azimuths.iter().map(|&az| (class, elev, az)));
        }
    }
    let targets: Vec<TargetModel> = TargetClass::ALL
        .iter()
        .map(|&c| make_target(c, target_seed(e.master_seed, c)))
        .collect();
    jobs.into_par_iter()
        .map(|(class, elev, az)| {
            let target = &targets[class.index()];
            let geometry = Geometry::new(az, e.beta_deg, elev)?;
            let kspace = synthesize_kspace(target, &geometry, &band);
            Ok(DatasetRecord {
                class,
                target_seed: target.seed,
                tx_az_deg: az,
                beta_deg: e.beta_deg,
                elev_deg: elev,
                snr_db: f64::INFINITY,
                kspace_re: kspace.iter().map(|z| z.re).collect(),
                kspace_im: kspace.iter().map(|z| z.im).collect(),
            })
        })
        .collect()
}

pub fn dataset_header(config: &ExperimentConfig) -> Result<DatasetHeader> {
    let band = config.band()?;
    Ok(DatasetHeader {
        format: DATASET_FORMAT.to_string(),
        center_frequency_hz: band.center_frequency_hz(),
        bandwidth_hz: band.bandwidth_hz(),
        num_frequency_samples: band.num_frequency_samples(),
        master_seed: config.experiment.master_seed,
    })
}

/// Writes the training dataset as newline-delimited JSON: one header line,
/// then one line per look.
pub fn generate_dataset(config: &ExperimentConfig, path: &Path) -> Result<usize> {
    let header = dataset_header(config)?;
    let records = training_records(config)?;
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in &records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    write_atomically(path, out.as_bytes())?;
    Ok(records.len())
}

pub fn read_dataset(path: &Path) -> Result<(RadarBand, Vec<DatasetRecord>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, message: String| Error::Format {
        what: "dataset",
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| bad(1, "empty file".into()))?
        .map_err(|e| Error::io(path, e))?;
    let header: DatasetHeader = serde_json::from_str(&first).map_err(|e| bad(1, e.to_string()))?;
    if header.format != DATASET_FORMAT {
        return Err(bad(1, format!("unsupported format `{}`", header.format)));
    }
    let band = RadarBand::new(
        header.center_frequency_hz,
        header.bandwidth_hz,
        header.num_frequency_samples,
    )
    .map_err(|e| bad(1, e.to_string()))?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DatasetRecord = serde_json::from_str(&line).map_err(|e| bad(i + 2, e.to_string()))?;
        if record.kspace_re.len() != band.num_frequency_samples()
            || record.kspace_im.len() != band.num_frequency_samples()
        {
            return Err(bad(i + 2, "k-space length does not match the header band".into()));
        }
        records.push(record);
    }
    Ok((band, records))
}

/// Template banks for one elevation.
#[derive(Debug, Clone)]
pub struct ElevationBanks {
    pub elevation_deg: f64,
    pub banks: Banks,
}

/// Trains one bank per (elevation, domain). Elevations come out sorted.
pub fn train_banks(band: RadarBand, records: &[DatasetRecord]) -> Result<Vec<ElevationBanks>> {
    let mut elevations: Vec<f64> = records.iter().map(|r| r.elev_deg).collect();
    elevations.sort_by(f64::total_cmp);
    elevations.dedup();
    elevations
        .into_iter()
        .map(|elevation_deg| {
            let subset: Vec<&DatasetRecord> = records.iter().filter(|r| r.elev_deg == elevation_deg).collect();
            let mut banks = Banks::new();
            for domain in Domain::ALL {
                let samples = subset
                    .iter()
                    .map(|r| {
                        Ok(TrainingSample {
                            feature: features_from_kspace(&r.kspace(), domain)?,
                            class: r.class,
                            azimuth_deg: r.tx_az_deg + r.beta_deg / 2.0,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                banks.insert(classifier::train(band, &samples)?);
            }
            Ok(ElevationBanks { elevation_deg, banks })
        })
        .collect()
}

fn bank_file_name(elevation_deg: f64, domain: Domain) -> String {
    format!("bank_el{elevation_deg}_{}.txt", domain.label().to_ascii_lowercase())
}

pub fn save_banks(dir: &Path, model: &[ElevationBanks]) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for eb in model {
        for domain in Domain::ALL {
            let path = dir.join(bank_file_name(eb.elevation_deg, domain));
            write_atomically(&path, eb.banks.get(domain)?.to_text().as_bytes())?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Loads banks saved by [`save_banks`] for the given elevations.
pub fn load_banks(dir: &Path, elevations_deg: &[f64]) -> Result<Vec<ElevationBanks>> {
    let mut elevations = elevations_deg.to_vec();
    elevations.sort_by(f64::total_cmp);
    elevations.dedup();
    elevations
        .into_iter()
        .map(|elevation_deg| {
            let mut banks = Banks::new();
            for domain in Domain::ALL {
                let path = dir.join(bank_file_name(elevation_deg, domain));
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                banks.insert(TemplateBank::from_text(&text)?);
            }
            Ok(ElevationBanks { elevation_deg, banks })
        })
        .collect()
}

/// Random draws of one test trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialPlan {
    pub class: TargetClass,
    pub index: usize,
    pub start_tx_azimuth_deg: f64,
    pub elevation_deg: f64,
    pub noise_seed: u64,
}

/// Deterministic test draws, class-major then trial index.
pub fn plan_trials(config: &ExperimentConfig) -> Vec<TrialPlan> {
    let e = &config.experiment;
    let step = e.train_azimuth_step_deg;
    TargetClass::ALL
        .iter()
        .flat_map(|&class| (0..e.test_trials_per_class).map(move |index| (class, index)))
        .map(|(class, index)| {
            let mut rng = seed::rng(seed::derive(
                e.master_seed,
                &[TAG_TRIAL, class.index() as u64, index as u64],
            ));
            let start_tx_azimuth_deg = loop {
                let az: f64 = rng.random_range(0.0..360.0);
                let offset = angle_difference_deg(az, (az / step).round() * step).abs();
                if offset >= MIN_TRAIN_OFFSET_DEG {
                    break az;
                }
            };
            let elevation_deg = e.elevations_deg[rng.random_range(0..e.elevations_deg.len())];
            TrialPlan {
                class,
                index,
                start_tx_azimuth_deg,
                elevation_deg,
                noise_seed: rng.random(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variant: ProcessingVariant,
    pub delta_theta_deg: f64,
    pub snr_db: f64,
    pub pcc_percent: f64,
    pub unclassified_percent: f64,
    pub misclassified_percent: f64,
    pub median_perspectives: f64,
    pub trials: usize,
}

impl SweepRow {
    pub fn from_outcomes(
        variant: ProcessingVariant,
        delta_theta_deg: f64,
        snr_db: f64,
        outcomes: &[TrialOutcome],
    ) -> Self {
        let trials = outcomes.len();
        let correct = outcomes.iter().filter(|o| o.correct).count();
        let unclassified = outcomes.iter().filter(|o| o.declared_class.is_none()).count();
        let wrong = trials - correct - unclassified;
        let pct = |n: usize| {
            if trials == 0 {
                0.0
            } else {
                100.0 * n as f64 / trials as f64
            }
        };
        let mut used: Vec<usize> = outcomes.iter().map(|o| o.perspectives_used).collect();
        used.sort_unstable();
        Self {
            variant,
            delta_theta_deg,
            snr_db,
            pcc_percent: pct(correct),
            unclassified_percent: pct(unclassified),
            misclassified_percent: pct(wrong),
            median_perspectives: median(&used),
            trials,
        }
    }

    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.variant,
            self.delta_theta_deg,
            fmt_snr(self.snr_db),
            self.pcc_percent,
            self.unclassified_percent,
            self.median_perspectives,
            self.trials
        )
    }

    pub fn summary(&self) -> String {
        format!(
            "{:<22} dtheta={:>5} deg  snr={:>5} dB  Pcc={:6.2}%  unclassified={:6.2}%  median_perspectives={}  trials={}",
            self.variant.label(),
            self.delta_theta_deg,
            fmt_snr(self.snr_db),
            self.pcc_percent,
            self.unclassified_percent,
            self.median_perspectives,
            self.trials
        )
    }
}

fn fmt_snr(snr_db: f64) -> String {
    if snr_db == f64::INFINITY {
        "inf".to_string()
    } else {
        snr_db.to_string()
    }
}

/// Median of a sorted slice; the mean of the middle pair for even lengths.
pub fn median(sorted: &[usize]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2] as f64,
        n => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// Writes to a sibling temp file and renames, so readers never see a
/// partial file.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("not a file path")))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Gnuplot script plotting Pcc against `x_column` (1-based) per variant.
pub fn plot_script(csv_file: &str, x_column: usize, x_label: &str, title: &str) -> String {
    let variants: Vec<String> = ProcessingVariant::ALL
        .iter()
        .map(|v| format!("'{csv_file}' using (strcol(1) eq '{v}' ? ${x_column} : NaN):4 with linespoints title '{v}'"))
        .collect();
    format!(
        "# gnuplot script\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title '{title}'\n\
         set xlabel '{x_label}'\n\
         set ylabel 'Pcc (%)'\n\
         set yrange [0:100]\n\
         set grid\n\
         set terminal pngcairo size 900,600\n\
         set output '{}.png'\n\
         plot {}\n",
        csv_file.trim_end_matches(".csv"),
        variants.join(", \\\n     ")
    )
}

/// Which loop a sweep point runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialMode {
    Cognitive,
    /// Exactly `max_perspectives` perspectives, no confidence gating.
    Fixed,
}

/// Trained state shared by every sweep: targets, banks and the trial plan.
pub struct Harness {
    config: ExperimentConfig,
    band: RadarBand,
    targets: Vec<TargetModel>,
    model: Vec<ElevationBanks>,
    plans: Vec<TrialPlan>,
    pool: rayon::ThreadPool,
}

impl Harness {
    /// Generates the training looks in memory and trains the banks.
    pub fn new(config: ExperimentConfig, threads: Option<usize>) -> Result<Self> {
        config.validate()?;
        let pool = build_pool(threads)?;
        let records = pool.install(|| training_records(&config))?;
        let model = train_banks(config.band()?, &records)?;
        Self::with_model(config, model, threads)
    }

    /// Uses banks trained elsewhere (for instance loaded from disk).
    pub fn with_model(config: ExperimentConfig, model: Vec<ElevationBanks>, threads: Option<usize>) -> Result<Self> {
        config.validate()?;
        let band = config.band()?;
        for &el in &config.experiment.elevations_deg {
            if !model.iter().any(|m| m.elevation_deg == el) {
                return Err(Error::config(
                    "experiment.elevations_deg",
                    format!("no trained banks for elevation {el}"),
                ));
            }
        }
        let targets = TargetClass::ALL
            .iter()
            .map(|&c| make_target(c, target_seed(config.experiment.master_seed, c)))
            .collect();
        let plans = plan_trials(&config);
        Ok(Self {
            band,
            targets,
            model,
            plans,
            pool: build_pool(threads)?,
            config,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn model(&self) -> &[ElevationBanks] {
        &self.model
    }

    pub fn plans(&self) -> &[TrialPlan] {
        &self.plans
    }

    fn banks_for(&self, elevation_deg: f64) -> &Banks {
        &self
            .model
            .iter()
            .find(|m| m.elevation_deg == elevation_deg)
            .expect("checked at construction")
            .banks
    }

    /// Outcomes of every planned trial under `policy`, in plan order.
    pub fn run_trials(&self, policy: &CognitivePolicy, snr_db: f64, mode: TrialMode) -> Result<Vec<TrialOutcome>> {
        policy.validate()?;
        self.pool.install(|| {
            self.plans
                .par_iter()
                .map(|plan| {
                    let start = Geometry::new(
                        plan.start_tx_azimuth_deg,
                        self.config.experiment.beta_deg,
                        plan.elevation_deg,
                    )?;
                    let target = &self.targets[plan.class.index()];
                    let banks = self.banks_for(plan.elevation_deg);
                    match mode {
                        TrialMode::Cognitive => {
                            cognition::run_trial(target, &start, &self.band, banks, policy, snr_db, plan.noise_seed)
                        }
                        TrialMode::Fixed => cognition::run_fixed_perspectives(
                            target,
                            &start,
                            &self.band,
                            banks,
                            policy,
                            snr_db,
                            plan.noise_seed,
                        ),
                    }
                })
                .collect()
        })
    }

    pub fn run_point(&self, policy: &CognitivePolicy, snr_db: f64, mode: TrialMode) -> Result<SweepRow> {
        let outcomes = self.run_trials(policy, snr_db, mode)?;
        Ok(SweepRow::from_outcomes(
            policy.variant,
            policy.delta_theta_deg,
            snr_db,
            &outcomes,
        ))
    }

    /// Every variant over the step grid at the configured sweep SNR.
    pub fn run_sweep_dtheta(&self) -> Result<Vec<SweepRow>> {
        let e = &self.config.experiment;
        let mut rows = Vec::new();
        for &variant in &e.variants {
            for &dtheta in &e.delta_theta_grid_deg {
                let policy = self.config.policy(variant, dtheta);
                rows.push(self.run_point(&policy, e.dtheta_sweep_snr_db, TrialMode::Cognitive)?);
            }
        }
        Ok(rows)
    }

    /// Every variant over the SNR grid at the configured fixed step.
    pub fn run_sweep_snr(&self) -> Result<Vec<SweepRow>> {
        let e = &self.config.experiment;
        let mut rows = Vec::new();
        for &variant in &e.variants {
            for &snr in &e.snr_grid_db {
                let policy = self.config.policy(variant, e.snr_sweep_delta_theta_deg);
                rows.push(self.run_point(&policy, snr, TrialMode::Cognitive)?);
            }
        }
        Ok(rows)
    }

    /// Two perspectives `delta_theta_deg` apart, always, fused by cumulative
    /// vote, for the configured policy variant at the sweep SNR.
    pub fn fixed_two_perspective_baseline(&self, delta_theta_deg: f64) -> Result<SweepRow> {
        let mut policy = self.config.policy(self.config.policy.variant, delta_theta_deg);
        policy.max_perspectives = 2;
        self.run_point(&policy, self.config.experiment.dtheta_sweep_snr_db, TrialMode::Fixed)
    }

    /// The configured policy for each configured variant at the sweep SNR.
    pub fn evaluate(&self) -> Result<Vec<SweepRow>> {
        self.config
            .experiment
            .variants
            .iter()
            .map(|&v| {
                let policy = self.config.policy(v, self.config.policy.delta_theta_deg);
                self.run_point(
                    &policy,
                    self.config.experiment.dtheta_sweep_snr_db,
                    TrialMode::Cognitive,
                )
            })
            .collect()
    }
}

fn build_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::config("COGATR_THREADS", "must be a positive integer"));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::config("COGATR_THREADS", e.to_string()))
}
