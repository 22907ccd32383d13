use cogatr_core::classifier::{
    sector_of, train, SectorIndex, TemplateBank, TrainingSample, NUM_SECTORS, SECTOR_WIDTH_DEG,
};
use cogatr_core::dsp::{Domain, FeatureVector};
use cogatr_core::scene::RadarBand;
use cogatr_core::{seed, TargetClass};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

const DIM: usize = 16;

fn random_bank(seed: u64) -> TemplateBank {
    let mut rng = seed::rng(seed);
    let means = (0..TargetClass::COUNT * NUM_SECTORS)
        .map(|_| (0..DIM).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    let variance = (0..DIM).map(|_| rng.random_range(0.01..2.0)).collect();
    TemplateBank::from_parts(
        RadarBand::default(),
        Domain::Range,
        means,
        variance,
        vec![1; TargetClass::COUNT * NUM_SECTORS],
    )
    .unwrap()
}

/// Smallest variance-weighted squared distance over all 100 cells.
fn nearest_template(bank: &TemplateBank, x: &[f64]) -> (TargetClass, usize) {
    let mut best = (TargetClass::Apc, 0, f64::INFINITY);
    for class in TargetClass::ALL {
        for s in 0..NUM_SECTORS {
            let m = bank.mean(class, SectorIndex::new(s).unwrap());
            let d: f64 = (0..DIM)
                .map(|i| (x[i] - m[i]).powi(2) / bank.shared_variance()[i])
                .sum();
            if d < best.2 {
                best = (class, s, d);
            }
        }
    }
    (best.0, best.1)
}

#[test]
fn argmax_equals_exhaustive_nearest_template() {
    let mut agree = 0;
    for case in 0..1000u64 {
        let bank = random_bank(case);
        let mut rng = seed::rng(seed::derive(case, &[1]));
        let x: Vec<f64> = (0..DIM).map(|_| rng.random_range(0.0..1.0)).collect();
        let scores = bank
            .score(&FeatureVector {
                domain: Domain::Range,
                values: x.clone(),
            })
            .unwrap();
        let (class, sector) = nearest_template(&bank, &x);
        if scores.best_class == class && scores.best_sector.value() == sector {
            agree += 1;
        }
    }
    assert_eq!(agree, 1000);
}

#[test]
fn recovers_known_gaussian_means() {
    let dim = 8;
    let sigma = 0.05;
    let per_cell = 10;
    let mut rng = seed::rng(2024);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut truth = Vec::new();
    let mut samples = Vec::new();
    for class in TargetClass::ALL {
        for s in 0..NUM_SECTORS {
            let mu: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..1.0)).collect();
            for i in 0..per_cell {
                let az = (s as f64 + (i as f64 + 0.5) / per_cell as f64) * SECTOR_WIDTH_DEG;
                samples.push(TrainingSample {
                    feature: FeatureVector {
                        domain: Domain::Frequency,
                        values: mu.iter().map(|m| m + noise.sample(&mut rng)).collect(),
                    },
                    class,
                    azimuth_deg: az,
                });
            }
            truth.push((class, s, mu));
        }
    }
    let bank = train(RadarBand::default(), &samples).unwrap();
    let bound = 3.0 * sigma / (per_cell as f64).sqrt();
    let mut within = 0;
    let mut coords = 0;
    for (class, s, mu) in &truth {
        let sector = SectorIndex::new(*s).unwrap();
        assert_eq!(bank.training_count(*class, sector), per_cell);
        for (m, t) in bank.mean(*class, sector).iter().zip(mu) {
            coords += 1;
            if (m - t).abs() <= bound {
                within += 1;
            }
        }
    }
    assert!(within as f64 >= 0.95 * coords as f64, "{within}/{coords}");
    for v in bank.shared_variance() {
        assert!((v / (sigma * sigma) - 1.0).abs() < 0.25, "variance {v}");
    }
}

#[test]
fn every_sector_is_reachable() {
    let mut seen = [false; NUM_SECTORS];
    for tenth in 0..3600 {
        seen[sector_of(tenth as f64 / 10.0).value()] = true;
    }
    assert!(seen.iter().all(|&s| s));
}

proptest! {
    #[test]
    fn decision_ignores_variance_scale(seed in any::<u64>(), factor in 1e-3f64..1e3) {
        let bank = random_bank(seed);
        let scaled = bank.with_scaled_variance(factor);
        let mut rng = seed::rng(seed ^ 0x55);
        let f = FeatureVector {
            domain: Domain::Range,
            values: (0..DIM).map(|_| rng.random_range(0.0..1.0)).collect(),
        };
        let a = bank.score(&f).unwrap();
        let b = scaled.score(&f).unwrap();
        prop_assert_eq!(a.best_class, b.best_class);
        prop_assert_eq!(a.best_sector, b.best_sector);
        for class in TargetClass::ALL {
            prop_assert!((a.of(class) - factor * b.of(class)).abs() <= 1e-9 * a.of(class).abs().max(1.0));
        }
    }

    #[test]
    fn sector_of_wraps(az in -1e4f64..1e4) {
        let s = sector_of(az).value();
        prop_assert!(s < NUM_SECTORS);
        prop_assert_eq!(s, sector_of(az + 360.0).value());
    }

    #[test]
    fn text_round_trip_is_exact(seed in any::<u64>()) {
        let bank = random_bank(seed);
        let back = TemplateBank::from_text(&bank.to_text()).unwrap();
        prop_assert_eq!(back, bank);
    }
}
