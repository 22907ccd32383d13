//! Surrogate targets and bistatic stepped-frequency returns.
//!
//! Each target is a cloud of point scatterers. A scatterer's amplitude
//! depends on the bistatic bisector azimuth through a Gaussian lobe, which
//! gives the returns the strong aspect dependence real vehicles show. The
//! far-field return at frequency `f` is
//!
//! ```text
//! F(f) = sum_m A_m(geom) * exp(-j 2 pi f (k_tx + k_rx) . x_m / c)
//! ```
//!
//! with `k_tx`, `k_rx` the unit vectors from the scene origin towards the
//! transmitter and receiver.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Bistatic angles at or above this are rejected.
pub const MAX_BISTATIC_ANGLE_DEG: f64 = 60.0;

pub const MIN_ELEVATION_DEG: f64 = 10.0;
pub const MAX_ELEVATION_DEG: f64 = 15.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TargetClass {
    #[serde(rename = "APC")]
    Apc,
    #[serde(rename = "MBT")]
    Mbt,
    #[serde(rename = "MSL")]
    Msl,
    #[serde(rename = "STR")]
    Str,
}

impl TargetClass {
    /// All classes in tie-break order.
    pub const ALL: [TargetClass; 4] = [TargetClass::Apc, TargetClass::Mbt, TargetClass::Msl, TargetClass::Str];

    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            TargetClass::Apc => "APC",
            TargetClass::Mbt => "MBT",
            TargetClass::Msl => "MSL",
            TargetClass::Str => "STR",
        }
    }
}

impl fmt::Display for TargetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TargetClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown target class `{s}`"))
    }
}

/// Stepped-frequency sweep.
///
/// Samples sit at `fc - B/2 + n B / N` for `n = 0..N`, so the DFT bin
/// spacing is exactly `c / 2B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarBand {
    center_frequency_hz: f64,
    bandwidth_hz: f64,
    num_frequency_samples: usize,
}

impl RadarBand {
    pub fn new(center_frequency_hz: f64, bandwidth_hz: f64, num_frequency_samples: usize) -> Result<Self> {
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::Band(format!("bandwidth must be positive, got {bandwidth_hz}")));
        }
        if !(center_frequency_hz.is_finite() && center_frequency_hz > bandwidth_hz / 2.0) {
            return Err(Error::Band(format!(
                "center frequency {center_frequency_hz} Hz must exceed half the bandwidth ({} Hz)",
                bandwidth_hz / 2.0
            )));
        }
        if num_frequency_samples < 2 {
            return Err(Error::Band(format!(
                "need at least 2 frequency samples, got {num_frequency_samples}"
            )));
        }
        Ok(Self {
            center_frequency_hz,
            bandwidth_hz,
            num_frequency_samples,
        })
    }

    pub fn center_frequency_hz(&self) -> f64 {
        self.center_frequency_hz
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn num_frequency_samples(&self) -> usize {
        self.num_frequency_samples
    }

    pub fn frequency_step_hz(&self) -> f64 {
        self.bandwidth_hz / self.num_frequency_samples as f64
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        let start = self.center_frequency_hz - self.bandwidth_hz / 2.0;
        let step = self.frequency_step_hz();
        (0..self.num_frequency_samples).map(move |n| start + n as f64 * step)
    }

    /// Monostatic range resolution `c / 2B`.
    pub fn range_bin_spacing_m(&self) -> f64 {
        SPEED_OF_LIGHT / (2.0 * self.bandwidth_hz)
    }
}

impl Default for RadarBand {
    /// 1 GHz centre, 500 MHz (0.3 m resolution), 64 samples.
    fn default() -> Self {
        Self {
            center_frequency_hz: 1.0e9,
            bandwidth_hz: 5.0e8,
            num_frequency_samples: 64,
        }
    }
}

/// Transmitter/receiver geometry for one look. The receiver always sits
/// `bistatic_angle_deg` further round in azimuth than the transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    tx_azimuth_deg: f64,
    bistatic_angle_deg: f64,
    elevation_deg: f64,
}

impl Geometry {
    pub fn new(tx_azimuth_deg: f64, bistatic_angle_deg: f64, elevation_deg: f64) -> Result<Self> {
        if !tx_azimuth_deg.is_finite() {
            return Err(Error::Geometry(format!("azimuth must be finite, got {tx_azimuth_deg}")));
        }
        if !(0.0..MAX_BISTATIC_ANGLE_DEG).contains(&bistatic_angle_deg) {
            return Err(Error::Geometry(format!(
                "bistatic angle must lie in [0, {MAX_BISTATIC_ANGLE_DEG}) degrees, got {bistatic_angle_deg}"
            )));
        }
        if !(MIN_ELEVATION_DEG..=MAX_ELEVATION_DEG).contains(&elevation_deg) {
            return Err(Error::Geometry(format!(
                "elevation must lie in [{MIN_ELEVATION_DEG}, {MAX_ELEVATION_DEG}] degrees, got {elevation_deg}"
            )));
        }
        Ok(Self {
            tx_azimuth_deg: wrap_degrees(tx_azimuth_deg),
            bistatic_angle_deg,
            elevation_deg,
        })
    }

    pub fn tx_azimuth_deg(&self) -> f64 {
        self.tx_azimuth_deg
    }

    pub fn bistatic_angle_deg(&self) -> f64 {
        self.bistatic_angle_deg
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    pub fn rx_azimuth_deg(&self) -> f64 {
        wrap_degrees(self.tx_azimuth_deg + self.bistatic_angle_deg)
    }

    pub fn bisector_azimuth_deg(&self) -> f64 {
        wrap_degrees(self.tx_azimuth_deg + self.bistatic_angle_deg / 2.0)
    }

    /// Same geometry with the transmitter moved by `delta_deg` in azimuth.
    pub fn rotated(&self, delta_deg: f64) -> Self {
        Self {
            tx_azimuth_deg: wrap_degrees(self.tx_azimuth_deg + delta_deg),
            ..*self
        }
    }

    /// Sum of the unit line-of-sight vectors towards transmitter and receiver.
    pub fn phase_direction(&self) -> [f64; 3] {
        let tx = unit_vector(self.tx_azimuth_deg, self.elevation_deg);
        let rx = unit_vector(self.rx_azimuth_deg(), self.elevation_deg);
        [tx[0] + rx[0], tx[1] + rx[1], tx[2] + rx[2]]
    }
}

/// Reduces an angle to `[0, 360)`.
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Signed angular difference `a - b` reduced to `[-180, 180)`.
pub fn angle_difference_deg(a: f64, b: f64) -> f64 {
    (a - b + 180.0).rem_euclid(360.0) - 180.0
}

fn unit_vector(azimuth_deg: f64, elevation_deg: f64) -> [f64; 3] {
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub position: [f64; 3],
    pub base_amplitude: f64,
    pub directivity_center_deg: f64,
    pub directivity_width_deg: f64,
    /// Amplitude scales as `(f / fc)^frequency_exponent`. Zero is an ideal
    /// point scatterer; half-integers model edges, curved surfaces, plates.
    pub frequency_exponent: f64,
}

impl Scatterer {
    /// Amplitude seen from the given bisector azimuth.
    pub fn amplitude(&self, bisector_azimuth_deg: f64) -> f64 {
        let off = angle_difference_deg(bisector_azimuth_deg, self.directivity_center_deg);
        let w = self.directivity_width_deg;
        self.base_amplitude * (-(off * off) / (2.0 * w * w)).exp()
    }

    /// Copy rotated about the vertical axis by `delta_deg`.
    pub fn rotated(&self, delta_deg: f64) -> Self {
        let (s, c) = delta_deg.to_radians().sin_cos();
        let [x, y, z] = self.position;
        Self {
            position: [c * x - s * y, s * x + c * y, z],
            directivity_center_deg: wrap_degrees(self.directivity_center_deg + delta_deg),
            ..*self
        }
    }
}

/// Layout parameters of one target class.
#[derive(Debug, Clone, Copy)]
pub struct ClassLayout {
    pub scatterer_count: (usize, usize),
    /// Length, width, height in meters. The box is centred on the origin in
    /// the horizontal plane and sits on the ground (`z >= 0`).
    pub extent_m: [f64; 3],
    /// Fraction of scatterers that are flat-plate returns locked to a hull face.
    pub plate_fraction: f64,
    pub plate_width_deg: (f64, f64),
    pub point_width_deg: (f64, f64),
    /// Probabilities of each of [`FREQUENCY_EXPONENTS`] for non-plate scatterers.
    pub exponent_weights: [f64; 5],
}

/// Frequency exponents of canonical scattering mechanisms: corner
/// diffraction, edge, point/sphere, curved surface, flat plate or dihedral.
pub const FREQUENCY_EXPONENTS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
const PLATE_EXPONENT: f64 = 1.0;

impl ClassLayout {
    pub fn for_class(class: TargetClass) -> Self {
        match class {
            TargetClass::Apc => ClassLayout {
                scatterer_count: (12, 16),
                extent_m: [7.0, 3.0, 2.4],
                plate_fraction: 0.35,
                plate_width_deg: (4.0, 9.0),
                point_width_deg: (20.0, 50.0),
                exponent_weights: [0.0, 0.1, 0.2, 0.3, 0.4],
            },
            TargetClass::Mbt => ClassLayout {
                scatterer_count: (18, 24),
                extent_m: [10.0, 3.6, 2.6],
                plate_fraction: 0.3,
                plate_width_deg: (3.0, 8.0),
                point_width_deg: (15.0, 45.0),
                exponent_weights: [0.1, 0.3, 0.3, 0.2, 0.1],
            },
            TargetClass::Msl => ClassLayout {
                scatterer_count: (14, 18),
                extent_m: [9.0, 3.0, 3.6],
                plate_fraction: 0.4,
                plate_width_deg: (4.0, 10.0),
                point_width_deg: (25.0, 60.0),
                exponent_weights: [0.0, 0.1, 0.3, 0.5, 0.1],
            },
            TargetClass::Str => ClassLayout {
                scatterer_count: (8, 12),
                extent_m: [5.5, 2.6, 3.2],
                plate_fraction: 0.25,
                plate_width_deg: (5.0, 12.0),
                point_width_deg: (30.0, 70.0),
                exponent_weights: [0.2, 0.4, 0.3, 0.1, 0.0],
            },
        }
    }

    pub fn contains(&self, position: [f64; 3]) -> bool {
        let [l, w, h] = self.extent_m;
        position[0].abs() <= l / 2.0 && position[1].abs() <= w / 2.0 && (0.0..=h).contains(&position[2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetModel {
    pub class: TargetClass,
    pub seed: u64,
    pub scatterers: Vec<Scatterer>,
}

/// Builds the deterministic surrogate for `(class, seed)`.
pub fn make_target(class: TargetClass, seed: u64) -> TargetModel {
    let layout = ClassLayout::for_class(class);
    let mut rng = seed::rng(seed::derive(seed, &[0x7461_7267, class.index() as u64]));
    let [l, w, h] = layout.extent_m;
    let (lo, hi) = layout.scatterer_count;
    let count = rng.random_range(lo..=hi);

    let scatterers = (0..count)
        .map(|_| {
            let position = [
                rng.random_range(-l / 2.0..=l / 2.0),
                rng.random_range(-w / 2.0..=w / 2.0),
                rng.random_range(0.0..=h),
            ];
            let base_amplitude = rng.random_range(0.5..1.5);
            let (directivity_center_deg, directivity_width_deg, frequency_exponent) =
                if rng.random_bool(layout.plate_fraction) {
                    // face normals at 0, 90, 180, 270 with a little tilt
                    let face = rng.random_range(0..4) as f64 * 90.0;
                    let tilt = rng.random_range(-6.0..6.0);
                    let width = rng.random_range(layout.plate_width_deg.0..layout.plate_width_deg.1);
                    (wrap_degrees(face + tilt), width, PLATE_EXPONENT)
                } else {
                    let width = rng.random_range(layout.point_width_deg.0..layout.point_width_deg.1);
                    let kind = WeightedIndex::new(layout.exponent_weights).expect("valid class weights");
                    (
                        rng.random_range(0.0..360.0),
                        width,
                        FREQUENCY_EXPONENTS[kind.sample(&mut rng)],
                    )
                };
            Scatterer {
                position,
                base_amplitude,
                directivity_center_deg,
                directivity_width_deg,
                frequency_exponent,
            }
        })
        .collect();

    TargetModel {
        class,
        seed,
        scatterers,
    }
}

/// Noiseless k-space samples of `target` seen from `geom`.
pub fn synthesize_kspace(target: &TargetModel, geom: &Geometry, band: &RadarBand) -> Vec<Complex64> {
    let direction = geom.phase_direction();
    let bisector = geom.bisector_azimuth_deg();
    let terms: Vec<(f64, f64, f64)> = target
        .scatterers
        .iter()
        .map(|s| {
            let path = direction[0] * s.position[0] + direction[1] * s.position[1] + direction[2] * s.position[2];
            (s.amplitude(bisector), path, s.frequency_exponent)
        })
        .collect();

    let fc = band.center_frequency_hz();
    band.frequencies()
        .map(|f| {
            let k = -2.0 * std::f64::consts::PI * f / SPEED_OF_LIGHT;
            terms
                .iter()
                .map(|&(amp, path, exponent)| {
                    let amp = if exponent == 0.0 {
                        amp
                    } else {
                        amp * (f / fc).powf(exponent)
                    };
                    Complex64::from_polar(amp, k * path)
                })
                .sum()
        })
        .collect()
}

/// Mean squared magnitude.
pub fn mean_power(samples: &[Complex64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64
}

/// Adds circular complex Gaussian noise at the requested per-sample SNR.
/// `f64::INFINITY` returns the input unchanged.
pub fn add_noise(kspace: &[Complex64], snr_db: f64, noise_seed: u64) -> Result<Vec<Complex64>> {
    if kspace.is_empty() {
        return Err(Error::DegenerateSignal("empty k-space vector"));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::config(
            "snr_db",
            format!("SNR must be a number or +inf, got {snr_db}"),
        ));
    }
    if snr_db == f64::INFINITY {
        return Ok(kspace.to_vec());
    }
    let signal_power = mean_power(kspace);
    if signal_power == 0.0 {
        return Err(Error::DegenerateSignal("SNR is undefined for a zero-power signal"));
    }
    let noise_power = signal_power / 10f64.powf(snr_db / 10.0);
    let normal = Normal::new(0.0, (noise_power / 2.0).sqrt()).expect("finite, non-negative std dev");
    let mut rng = seed::rng(noise_seed);
    Ok(kspace
        .iter()
        .map(|&z| z + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect())
}

/// One bistatic acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct Look {
    pub geometry: Geometry,
    pub kspace: Vec<Complex64>,
    pub snr_db: f64,
}

impl Look {
    pub fn acquire(
        target: &TargetModel,
        geometry: Geometry,
        band: &RadarBand,
        snr_db: f64,
        noise_seed: u64,
    ) -> Result<Self> {
        let clean = synthesize_kspace(target, &geometry, band);
        let kspace = add_noise(&clean, snr_db, noise_seed)?;
        Ok(Self {
            geometry,
            kspace,
            snr_db,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(position: [f64; 3], amplitude: f64) -> TargetModel {
        TargetModel {
            class: TargetClass::Apc,
            seed: 0,
            scatterers: vec![Scatterer {
                position,
                base_amplitude: amplitude,
                directivity_center_deg: 0.0,
                directivity_width_deg: 1.0e12,
                frequency_exponent: 0.0,
            }],
        }
    }

    #[test]
    fn band_validation() {
        assert!(RadarBand::new(1e9, 0.0, 64).is_err());
        assert!(RadarBand::new(1e8, 5e8, 64).is_err());
        assert!(RadarBand::new(1e9, 5e8, 1).is_err());
        let band = RadarBand::new(1e9, 5e8, 4).unwrap();
        let f: Vec<f64> = band.frequencies().collect();
        assert_eq!(f, vec![0.75e9, 0.875e9, 1.0e9, 1.125e9]);
    }

    #[test]
    fn geometry_rejects_wide_bistatic_angles() {
        assert!(matches!(Geometry::new(0.0, 60.0, 12.0), Err(Error::Geometry(_))));
        assert!(matches!(Geometry::new(0.0, 75.0, 12.0), Err(Error::Geometry(_))));
        assert!(matches!(Geometry::new(0.0, -1.0, 12.0), Err(Error::Geometry(_))));
        assert!(Geometry::new(0.0, 59.999, 12.0).is_ok());
        assert!(Geometry::new(0.0, 10.0, 9.0).is_err());
    }

    #[test]
    fn receiver_follows_transmitter() {
        let g = Geometry::new(350.0, 20.0, 10.0).unwrap();
        assert_eq!(g.rx_azimuth_deg(), 10.0);
        assert_eq!(g.bisector_azimuth_deg(), 0.0);
        let r = g.rotated(-355.0);
        assert!((r.tx_azimuth_deg() - 355.0).abs() < 1e-9);
        assert!((r.rx_azimuth_deg() - 15.0).abs() < 1e-9);
    }

    #[test]
    fn monostatic_phase_is_twice_line_of_sight() {
        let g = Geometry::new(33.0, 0.0, 12.5).unwrap();
        let d = g.phase_direction();
        let u = unit_vector(33.0, 12.5);
        for i in 0..3 {
            assert_eq!(d[i], 2.0 * u[i]);
        }
    }

    #[test]
    fn targets_are_deterministic_and_class_distinct() {
        let a = make_target(TargetClass::Apc, 7);
        assert_eq!(a, make_target(TargetClass::Apc, 7));
        let m = make_target(TargetClass::Mbt, 7);
        assert_ne!(a.scatterers, m.scatterers);
        let a8 = make_target(TargetClass::Apc, 8);
        assert_ne!(a.scatterers, a8.scatterers);
    }

    #[test]
    fn targets_respect_class_layout() {
        for class in TargetClass::ALL {
            let layout = ClassLayout::for_class(class);
            for seed in 0..50 {
                let t = make_target(class, seed);
                let n = t.scatterers.len();
                assert!((layout.scatterer_count.0..=layout.scatterer_count.1).contains(&n));
                for s in &t.scatterers {
                    assert!(layout.contains(s.position), "{class} seed {seed}: {:?}", s.position);
                    assert!(s.base_amplitude >= 0.0 && s.directivity_width_deg > 0.0);
                }
            }
            let [l, w, h] = layout.extent_m;
            assert!(l <= 12.0 && w <= 4.0 && h <= 4.0);
        }
    }

    #[test]
    fn scatterer_at_origin_has_flat_spectrum() {
        let band = RadarBand::default();
        let t = single([0.0; 3], 0.7);
        for (az, beta) in [(0.0, 0.0), (123.4, 45.0), (359.0, 59.0)] {
            let g = Geometry::new(az, beta, 13.0).unwrap();
            for z in synthesize_kspace(&t, &g, &band) {
                assert!((z.norm() - 0.7).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_amplitude_gives_zero_spectrum() {
        let band = RadarBand::default();
        let g = Geometry::new(10.0, 30.0, 10.0).unwrap();
        let k = synthesize_kspace(&single([1.0, 2.0, 0.5], 0.0), &g, &band);
        assert!(k.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn noise_passthrough_and_degenerate_input() {
        let k = vec![Complex64::new(1.0, -2.0); 8];
        assert_eq!(add_noise(&k, f64::INFINITY, 3).unwrap(), k);
        let zero = vec![Complex64::new(0.0, 0.0); 8];
        assert!(matches!(add_noise(&zero, 10.0, 3), Err(Error::DegenerateSignal(_))));
        assert!(matches!(add_noise(&[], 10.0, 3), Err(Error::DegenerateSignal(_))));
        assert_eq!(add_noise(&k, 5.0, 11).unwrap(), add_noise(&k, 5.0, 11).unwrap());
        assert_ne!(add_noise(&k, 5.0, 11).unwrap(), add_noise(&k, 5.0, 12).unwrap());
    }

    #[test]
    fn angle_helpers() {
        assert_eq!(wrap_degrees(-1e-18), 0.0);
        assert_eq!(wrap_degrees(720.5), 0.5);
        assert_eq!(angle_difference_deg(350.0, 10.0), -20.0);
        assert_eq!(angle_difference_deg(10.0, 350.0), 20.0);
    }
}
