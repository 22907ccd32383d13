//! Sectored naive-Gaussian decision maker.
//!
//! Each class is represented by one mean template per 14.4° azimuth sector.
//! All templates share a single diagonal covariance, so the log-likelihood
//! ordering is the ordering of variance-weighted squared distances: the
//! classifier is a nearest-template matcher. The viewing aspect is unknown
//! at test time and each class scores with its best sector.

use std::fmt::Write as _;

use crate::dsp::{Domain, FeatureVector};
use crate::scene::{wrap_degrees, RadarBand, TargetClass};
use crate::{Error, Result};

pub const NUM_SECTORS: usize = 25;
pub const SECTOR_WIDTH_DEG: f64 = 360.0 / NUM_SECTORS as f64;
pub const VARIANCE_FLOOR: f64 = 1e-12;
const NUM_CELLS: usize = TargetClass::COUNT * NUM_SECTORS;

pub const BANK_FORMAT: &str = "cogatr-bank-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SectorIndex(usize);

impl SectorIndex {
    pub fn new(value: usize) -> Option<Self> {
        (value < NUM_SECTORS).then_some(Self(value))
    }

    pub fn value(self) -> usize {
        self.0
    }

    pub fn all() -> impl Iterator<Item = SectorIndex> {
        (0..NUM_SECTORS).map(SectorIndex)
    }
}

pub fn sector_of(azimuth_deg: f64) -> SectorIndex {
    let az = wrap_degrees(azimuth_deg);
    SectorIndex(((az / SECTOR_WIDTH_DEG).floor() as usize).min(NUM_SECTORS - 1))
}

fn cell(class: TargetClass, sector: SectorIndex) -> usize {
    class.index() * NUM_SECTORS + sector.0
}

#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub feature: FeatureVector,
    pub class: TargetClass,
    pub azimuth_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateBank {
    band: RadarBand,
    domain: Domain,
    /// Row-major `[cell][dimension]`, cell = class * 25 + sector.
    means: Vec<f64>,
    shared_variance: Vec<f64>,
    training_counts: Vec<usize>,
    dimension: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub log_likelihood: [f64; TargetClass::COUNT],
    pub best_sectors: [SectorIndex; TargetClass::COUNT],
    pub best_class: TargetClass,
    pub best_sector: SectorIndex,
}

impl ClassScores {
    pub fn of(&self, class: TargetClass) -> f64 {
        self.log_likelihood[class.index()]
    }
}

/// Fits cell means and the pooled diagonal variance.
pub fn train(band: RadarBand, samples: &[TrainingSample]) -> Result<TemplateBank> {
    let first = samples.first().ok_or_else(|| {
        Error::EmptyCell(
            TargetClass::ALL
                .into_iter()
                .flat_map(|c| (0..NUM_SECTORS).map(move |s| (c, s)))
                .collect(),
        )
    })?;
    let domain = first.feature.domain;
    let dimension = first.feature.len();
    for s in samples {
        if s.feature.domain != domain {
            return Err(Error::MixedDomain);
        }
        if s.feature.len() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: s.feature.len(),
            });
        }
    }

    let cell_of = |s: &TrainingSample| cell(s.class, sector_of(s.azimuth_deg));
    let mut counts = vec![0usize; NUM_CELLS];
    let mut means = vec![0.0; NUM_CELLS * dimension];
    for s in samples {
        let c = cell_of(s);
        counts[c] += 1;
        for (m, x) in means[c * dimension..(c + 1) * dimension]
            .iter_mut()
            .zip(&s.feature.values)
        {
            *m += x;
        }
    }

    let empty: Vec<(TargetClass, usize)> = (0..NUM_CELLS)
        .filter(|&c| counts[c] == 0)
        .map(|c| (TargetClass::from_index(c / NUM_SECTORS).unwrap(), c % NUM_SECTORS))
        .collect();
    if !empty.is_empty() {
        return Err(Error::EmptyCell(empty));
    }

    for (c, &n) in counts.iter().enumerate() {
        means[c * dimension..(c + 1) * dimension]
            .iter_mut()
            .for_each(|m| *m /= n as f64);
    }

    let mut residual_ss = vec![0.0; dimension];
    for s in samples {
        let c = cell_of(s);
        let mean = &means[c * dimension..(c + 1) * dimension];
        for ((acc, x), m) in residual_ss.iter_mut().zip(&s.feature.values).zip(mean) {
            *acc += (x - m) * (x - m);
        }
    }
    let dof = samples.len().saturating_sub(NUM_CELLS);
    let shared_variance = residual_ss
        .into_iter()
        .map(|ss| {
            if dof == 0 {
                VARIANCE_FLOOR
            } else {
                (ss / dof as f64).max(VARIANCE_FLOOR)
            }
        })
        .collect();

    Ok(TemplateBank {
        band,
        domain,
        means,
        shared_variance,
        training_counts: counts,
        dimension,
    })
}

impl TemplateBank {
    /// Builds a bank from explicit parameters. `means` is indexed by
    /// `class.index() * 25 + sector`.
    pub fn from_parts(
        band: RadarBand,
        domain: Domain,
        means: Vec<Vec<f64>>,
        shared_variance: Vec<f64>,
        training_counts: Vec<usize>,
    ) -> Result<Self> {
        let dimension = shared_variance.len();
        if means.len() != NUM_CELLS || training_counts.len() != NUM_CELLS {
            return Err(Error::DimensionMismatch {
                expected: NUM_CELLS,
                actual: means.len().min(training_counts.len()),
            });
        }
        if let Some(bad) = means.iter().find(|m| m.len() != dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                actual: bad.len(),
            });
        }
        if shared_variance.iter().any(|v| !(v.is_finite() && *v >= VARIANCE_FLOOR)) {
            return Err(Error::Bank(format!(
                "shared variance entries must be finite and at least {VARIANCE_FLOOR}"
            )));
        }
        Ok(Self {
            band,
            domain,
            means: means.into_iter().flatten().collect(),
            shared_variance,
            training_counts,
            dimension,
        })
    }

    pub fn band(&self) -> &RadarBand {
        &self.band
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn mean(&self, class: TargetClass, sector: SectorIndex) -> &[f64] {
        let c = cell(class, sector);
        &self.means[c * self.dimension..(c + 1) * self.dimension]
    }

    pub fn shared_variance(&self) -> &[f64] {
        &self.shared_variance
    }

    pub fn training_count(&self, class: TargetClass, sector: SectorIndex) -> usize {
        self.training_counts[cell(class, sector)]
    }

    /// Copy with every variance multiplied by `factor`.
    pub fn with_scaled_variance(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.shared_variance.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn score(&self, feature: &FeatureVector) -> Result<ClassScores> {
        if feature.domain != self.domain {
            return Err(Error::DomainMismatch(feature.domain.label(), self.domain.label()));
        }
        if feature.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: feature.len(),
            });
        }
        let precision: Vec<f64> = self.shared_variance.iter().map(|v| 1.0 / v).collect();
        let mut log_likelihood = [f64::NEG_INFINITY; TargetClass::COUNT];
        let mut best_sectors = [SectorIndex(0); TargetClass::COUNT];
        for class in TargetClass::ALL {
            for sector in SectorIndex::all() {
                let d2: f64 = self
                    .mean(class, sector)
                    .iter()
                    .zip(&feature.values)
                    .zip(&precision)
                    .map(|((m, x), p)| (x - m) * (x - m) * p)
                    .sum();
                let ll = -0.5 * d2;
                if ll > log_likelihood[class.index()] {
                    log_likelihood[class.index()] = ll;
                    best_sectors[class.index()] = sector;
                }
            }
        }
        let mut best_class = TargetClass::Apc;
        for class in TargetClass::ALL {
            if log_likelihood[class.index()] > log_likelihood[best_class.index()] {
                best_class = class;
            }
        }
        Ok(ClassScores {
            log_likelihood,
            best_sectors,
            best_class,
            best_sector: best_sectors[best_class.index()],
        })
    }

    /// Text serialization; floats carry 17 significant digits so a
    /// round trip is bit-exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "format {BANK_FORMAT}").unwrap();
        writeln!(out, "domain {}", self.domain).unwrap();
        writeln!(out, "n_f {}", self.dimension).unwrap();
        writeln!(
            out,
            "band {} {} {}",
            fmt_f64(self.band.center_frequency_hz()),
            fmt_f64(self.band.bandwidth_hz()),
            self.band.num_frequency_samples()
        )
        .unwrap();
        write!(out, "variance").unwrap();
        for v in &self.shared_variance {
            write!(out, " {}", fmt_f64(*v)).unwrap();
        }
        out.push('\n');
        for class in TargetClass::ALL {
            for sector in SectorIndex::all() {
                write!(out, "mean {class} {} {}", sector.0, self.training_count(class, sector)).unwrap();
                for m in self.mean(class, sector) {
                    write!(out, " {}", fmt_f64(*m)).unwrap();
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Format {
            what: "template bank",
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut header = |key: &str| -> Result<(usize, Vec<&str>)> {
            let (n, line) = lines.next().ok_or_else(|| bad(0, format!("missing `{key}` line")))?;
            let mut fields = line.split_whitespace();
            if fields.next() != Some(key) {
                return Err(bad(n, format!("expected `{key}`")));
            }
            Ok((n, fields.collect()))
        };

        let (n, format) = header("format")?;
        if format != [BANK_FORMAT] {
            return Err(bad(n, format!("unsupported format {format:?}")));
        }
        let (n, domain) = header("domain")?;
        let domain: Domain = domain
            .first()
            .ok_or_else(|| bad(n, "missing domain".into()))?
            .parse()
            .map_err(|e| bad(n, e))?;
        let (n, dim) = header("n_f")?;
        let dimension: usize = parse_field(dim.first().copied(), n, &bad)?;
        let (n, band) = header("band")?;
        if band.len() != 3 {
            return Err(bad(n, "expected centre, bandwidth and sample count".into()));
        }
        let band = RadarBand::new(
            parse_field(Some(band[0]), n, &bad)?,
            parse_field(Some(band[1]), n, &bad)?,
            parse_field(Some(band[2]), n, &bad)?,
        )
        .map_err(|e| bad(n, e.to_string()))?;
        let (n, variance) = header("variance")?;
        let shared_variance = variance
            .iter()
            .map(|v| parse_field(Some(*v), n, &bad))
            .collect::<Result<Vec<f64>>>()?;
        if shared_variance.len() != dimension {
            return Err(bad(
                n,
                format!("expected {dimension} variances, found {}", shared_variance.len()),
            ));
        }

        let mut means = vec![None; NUM_CELLS];
        let mut counts = vec![0; NUM_CELLS];
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 + dimension || fields[0] != "mean" {
                return Err(bad(n, "expected `mean <class> <sector> <count> <values...>`".into()));
            }
            let class: TargetClass = fields[1].parse().map_err(|e| bad(n, e))?;
            let sector = parse_field::<usize>(Some(fields[2]), n, &bad)
                .and_then(|s| SectorIndex::new(s).ok_or_else(|| bad(n, format!("sector {s} out of range"))))?;
            let c = cell(class, sector);
            counts[c] = parse_field(Some(fields[3]), n, &bad)?;
            means[c] = Some(
                fields[4..]
                    .iter()
                    .map(|v| parse_field(Some(*v), n, &bad))
                    .collect::<Result<Vec<f64>>>()?,
            );
        }
        let missing = means.iter().position(Option::is_none);
        if let Some(c) = missing {
            return Err(bad(
                0,
                format!(
                    "no template for ({}, {})",
                    TargetClass::from_index(c / NUM_SECTORS).unwrap(),
                    c % NUM_SECTORS
                ),
            ));
        }
        Self::from_parts(
            band,
            domain,
            means.into_iter().flatten().collect(),
            shared_variance,
            counts,
        )
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_field<T: std::str::FromStr>(
    field: Option<&str>,
    line: usize,
    bad: &impl Fn(usize, String) -> Error,
) -> Result<T> {
    let field = field.ok_or_else(|| bad(line, "missing value".into()))?;
    field.parse().map_err(|_| bad(line, format!("cannot parse `{field}`")))
}
