//! Range-domain and frequency-domain feature extraction.

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::scene::{Look, RadarBand};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "RANGE")]
    Range,
    #[serde(rename = "FREQUENCY")]
    Frequency,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::Range, Domain::Frequency];

    pub fn label(self) -> &'static str {
        match self {
            Domain::Range => "RANGE",
            Domain::Frequency => "FREQUENCY",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|d| d.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown domain `{s}`"))
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unitary forward DFT, `X_k = N^{-1/2} sum_n x_n exp(-j 2 pi k n / N)`.
pub fn dft(input: &[Complex64]) -> Vec<Complex64> {
    let n = input.len();
    if n == 0 {
        return Vec::new();
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    let mut buf = input.to_vec();
    fft.process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= scale);
    buf
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub samples: Vec<Complex64>,
    pub bin_spacing_m: f64,
}

impl RangeProfile {
    pub fn from_kspace(kspace: &[Complex64], band: &RadarBand) -> Self {
        Self {
            samples: dft(kspace),
            bin_spacing_m: band.range_bin_spacing_m(),
        }
    }
}

/// Unit-norm magnitude features in one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub domain: Domain,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn extract_features(look: &Look, domain: Domain) -> Result<FeatureVector> {
    features_from_kspace(&look.kspace, domain)
}

/// RANGE: `|dft(F)|`, FREQUENCY: `|F|`, both scaled to unit L2 norm.
pub fn features_from_kspace(kspace: &[Complex64], domain: Domain) -> Result<FeatureVector> {
    if kspace.is_empty() {
        return Err(Error::DegenerateSignal("empty k-space vector"));
    }
    let magnitudes: Vec<f64> = match domain {
        Domain::Range => dft(kspace).iter().map(|z| z.norm()).collect(),
        Domain::Frequency => kspace.iter().map(|z| z.norm()).collect(),
    };
    let norm = magnitudes.iter().map(|m| m * m).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateSignal("cannot normalize an all-zero look"));
    }
    Ok(FeatureVector {
        domain,
        values: magnitudes.into_iter().map(|m| m / norm).collect(),
    })
}
