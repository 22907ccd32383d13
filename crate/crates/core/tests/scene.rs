use cogatr_core::dsp::dft;
use cogatr_core::scene::{
    add_noise, make_target, mean_power, synthesize_kspace, Geometry, RadarBand, Scatterer, TargetModel, SPEED_OF_LIGHT,
};
use cogatr_core::TargetClass;
use num_complex::Complex64;
use proptest::prelude::*;

fn isotropic(position: [f64; 3]) -> Scatterer {
    Scatterer {
        position,
        base_amplitude: 1.0,
        directivity_center_deg: 0.0,
        directivity_width_deg: 1e12,
        frequency_exponent: 0.0,
    }
}

fn model(scatterers: Vec<Scatterer>) -> TargetModel {
    TargetModel {
        class: TargetClass::Apc,
        seed: 0,
        scatterers,
    }
}

#[test]
fn two_scatterers_one_bin_apart_give_adjacent_peaks() {
    let band = RadarBand::default();
    let geom = Geometry::new(37.0, 0.0, 12.0).unwrap();
    let p = geom.phase_direction();
    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    let d = SPEED_OF_LIGHT / (2.0 * band.bandwidth_hz());
    assert!((d - 0.3).abs() < 1e-3);
    let far = [d * p[0] / norm, d * p[1] / norm, d * p[2] / norm];

    let profile = dft(&synthesize_kspace(
        &model(vec![isotropic([0.0; 3]), isotropic(far)]),
        &geom,
        &band,
    ));
    let n = band.num_frequency_samples();
    let mags: Vec<f64> = profile.iter().map(|z| z.norm()).collect();
    let expected = (n as f64).sqrt();
    let peaks: Vec<usize> = (0..n).filter(|&k| mags[k] > 0.5 * expected).collect();
    assert_eq!(peaks.len(), 2, "{mags:?}");
    let gap = (peaks[1] - peaks[0]).min(n - (peaks[1] - peaks[0]));
    assert_eq!(gap, 1);
    for (k, m) in mags.iter().enumerate() {
        let want = if peaks.contains(&k) { expected } else { 0.0 };
        assert!((m - want).abs() < 1e-9 * expected, "bin {k}: {m}");
    }
}

#[test]
fn monostatic_path_is_twice_line_of_sight() {
    let band = RadarBand::new(1e9, 5e8, 8).unwrap();
    let geom = Geometry::new(0.0, 0.0, 10.0).unwrap();
    let el = 10f64.to_radians();
    let x = 2.5;
    let k = synthesize_kspace(&model(vec![isotropic([x, 0.0, 0.0])]), &geom, &band);
    for (z, f) in k.iter().zip(band.frequencies()) {
        let want = Complex64::from_polar(
            1.0,
            -2.0 * std::f64::consts::PI * f * 2.0 * x * el.cos() / SPEED_OF_LIGHT,
        );
        assert!((z - want).norm() < 1e-9);
    }
}

#[test]
fn frequency_exponent_scales_amplitude() {
    let band = RadarBand::default();
    let geom = Geometry::new(0.0, 20.0, 12.0).unwrap();
    let mut s = isotropic([0.0; 3]);
    s.frequency_exponent = 0.5;
    let k = synthesize_kspace(&model(vec![s]), &geom, &band);
    for (z, f) in k.iter().zip(band.frequencies()) {
        assert!((z.norm() - (f / band.center_frequency_hz()).sqrt()).abs() < 1e-12);
    }
}

#[test]
fn noise_calibration_within_half_db() {
    let band = RadarBand::new(1e9, 5e8, 100_000).unwrap();
    let target = make_target(TargetClass::Mbt, 5);
    let clean = synthesize_kspace(&target, &Geometry::new(40.0, 30.0, 12.0).unwrap(), &band);
    let signal = mean_power(&clean);
    for snr in [0.0, 10.0, 30.0] {
        let noisy = add_noise(&clean, snr, 99).unwrap();
        let noise: Vec<Complex64> = noisy.iter().zip(&clean).map(|(a, b)| a - b).collect();
        let measured = 10.0 * (signal / mean_power(&noise)).log10();
        assert!(
            (measured - snr).abs() <= 0.5,
            "requested {snr} dB, measured {measured:.3} dB"
        );
    }
}

#[test]
fn synthesis_is_bit_exact_across_calls() {
    let band = RadarBand::default();
    let geom = Geometry::new(123.4, 30.0, 13.3).unwrap();
    for class in TargetClass::ALL {
        let a = synthesize_kspace(&make_target(class, 77), &geom, &band);
        let b = synthesize_kspace(&make_target(class, 77), &geom, &band);
        let bits = |v: &[Complex64]| {
            v.iter()
                .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(add_noise(&a, 5.0, 3).unwrap(), add_noise(&b, 5.0, 3).unwrap());
    }
}

proptest! {
    #[test]
    fn rotating_target_and_sensors_together_preserves_magnitude(
        seed in any::<u64>(),
        class in 0usize..4,
        az in 0.0f64..360.0,
        beta in 0.0f64..59.0,
        el in 10.0f64..=15.0,
        delta in -180.0f64..180.0,
    ) {
        let band = RadarBand::default();
        let target = make_target(TargetClass::from_index(class).unwrap(), seed);
        let rotated = TargetModel {
            scatterers: target.scatterers.iter().map(|s| s.rotated(delta)).collect(),
            ..target.clone()
        };
        let geom = Geometry::new(az, beta, el).unwrap();
        let a = synthesize_kspace(&target, &geom, &band);
        let b = synthesize_kspace(&rotated, &geom.rotated(delta), &band);
        let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.norm() - y.norm()).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn every_geometry_in_range_is_accepted(az in -720.0f64..720.0, beta in 0.0f64..60.0, el in 10.0f64..=15.0) {
        let g = Geometry::new(az, beta, el).unwrap();
        prop_assert!((0.0..360.0).contains(&g.tx_azimuth_deg()));
        prop_assert!((0.0..360.0).contains(&g.rx_azimuth_deg()));
    }
}
