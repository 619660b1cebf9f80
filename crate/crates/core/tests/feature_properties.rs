mod support;

use emg_affect::features::{aac, dasdv, extract_slot, mav, mavslp, maxp, paaf, rms, wl, ExtractOptions};
use emg_affect::signal::{generate_synthetic, SynthGenerator, SynthProfile};
use emg_affect::Label;
use proptest::prelude::*;
use support::{mav_oracle, mavslp_oracle, rms_two_pass};

fn adc_slot() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u16..=999, 3..600).prop_map(|v| v.into_iter().map(f64::from).collect())
}

fn real_slot() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e4f64..1e4, 4..400)
}

fn ulps(a: f64, b: f64) -> u64 {
    (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
}

proptest! {
    #![proptest_config(support::cases(10_000))]

    #[test]
    fn waveform_length_identities(x in adc_slot()) {
        let (w, a, d) = (wl(&x).unwrap(), aac(&x).unwrap(), dasdv(&x).unwrap());
        let steps = (x.len() - 1) as f64;
        // aac is defined as wl/(N-1); the product back is exact up to rounding
        prop_assert_eq!(a.to_bits(), (w / steps).to_bits());
        prop_assert!(ulps(steps * a, w) <= 1, "wl {} vs (N-1)aac {}", w, steps * a);
        prop_assert!(d >= a, "dasdv {} < aac {}", d, a);
    }

    #[test]
    fn constant_series_features(c in 0u16..=999, n in 3usize..600) {
        let c = f64::from(c);
        let x = vec![c; n];
        let row = extract_slot(&x, &ExtractOptions::default()).unwrap();
        prop_assert_eq!(row, [c, c, 0.0, 0.0, c, 0.0, 0.0, 0.0]);
    }
}

proptest! {
    #![proptest_config(support::cases(1_000))]

    #[test]
    fn mav_matches_summation_oracle(x in real_slot()) {
        prop_assert!((mav(&x).unwrap() - mav_oracle(&x)).abs() <= 1e-12 * mav_oracle(&x).max(1.0));
    }

    #[test]
    fn mav_of_adc_counts_is_the_mean(x in adc_slot()) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        prop_assert_eq!(mav(&x).unwrap(), mean);
    }

    #[test]
    fn mavslp_matches_mean_of_differences(x in real_slot()) {
        let got = mavslp(&x, 4).unwrap();
        let scale = mav(&x).unwrap().max(1.0);
        prop_assert!((got - mavslp_oracle(&x, 4)).abs() <= 1e-12 * scale, "{} vs {}", got, mavslp_oracle(&x, 4));
    }

    #[test]
    fn rms_matches_two_pass(x in real_slot()) {
        let got = rms(&x).unwrap();
        prop_assert!((got - rms_two_pass(&x)).abs() <= 1e-10 * got.max(1.0));
    }

    #[test]
    fn dasdv_dominates_aac_on_reals(x in real_slot()) {
        let (d, a) = (dasdv(&x).unwrap(), aac(&x).unwrap());
        prop_assert!(d >= a * (1.0 - 1e-12));
    }

    #[test]
    fn outputs_are_finite(x in real_slot()) {
        let row = extract_slot(&x, &ExtractOptions::default()).unwrap();
        prop_assert!(row.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn positive_homogeneity(x in adc_slot(), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let fs: [fn(&[f64]) -> f64; 6] = [
            |x| maxp(x).unwrap(),
            |x| mav(x).unwrap(),
            |x| rms(x).unwrap(),
            |x| aac(x).unwrap(),
            |x| dasdv(x).unwrap(),
            |x| wl(x).unwrap(),
        ];
        for f in fs {
            let (a, b) = (f(&scaled), c * f(&x));
            prop_assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0), "{} vs {}", a, b);
        }
        let (a, b) = (mavslp(&scaled, 3).unwrap(), c * mavslp(&x, 3).unwrap());
        prop_assert!((a - b).abs() <= 1e-11 * (c * mav(&x).unwrap()).max(1.0));
    }

    #[test]
    fn mav_and_rms_are_homogeneous_for_any_sign(x in real_slot(), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let (m, r) = (mav(&x).unwrap(), rms(&x).unwrap());
        prop_assert!((mav(&scaled).unwrap() - c * m).abs() <= 1e-11 * (c * m).max(1.0));
        prop_assert!((rms(&scaled).unwrap() - c * r).abs() <= 1e-11 * (c * r).max(1.0));
    }

    #[test]
    fn peak_count_is_scale_invariant(x in adc_slot(), e in -6i32..6) {
        // powers of two scale without rounding, so every comparison is preserved
        let c = 2f64.powi(e);
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        prop_assert_eq!(paaf(&scaled).unwrap(), paaf(&x).unwrap());
    }

    #[test]
    fn generator_stays_in_adc_range(
        seed in any::<u64>(),
        baseline in 0.0f64..999.0,
        noise_sd in 0.0f64..200.0,
        spike_rate_hz in 0.0f64..20.0,
        spike_amplitude_mean in 0.0f64..2000.0,
        rate in 1u32..1000,
    ) {
        let profile = SynthProfile {
            baseline,
            noise_sd,
            spike_rate_hz,
            spike_amplitude_mean,
            ..SynthProfile::angry(seed)
        };
        let series = generate_synthetic(&profile, 1.0, rate).unwrap();
        prop_assert!(series.samples().iter().all(|&v| v <= 999));
    }
}

#[test]
fn angry_slots_peak_higher_than_relaxed() {
    // one default slot: 45 s of activity over 10 slots at 200 Hz
    let slot_s = 4.5;
    let trials = 1000u64;
    let wins = (0..trials)
        .filter(|&seed| {
            let peak = |label| {
                let s = generate_synthetic(&SynthProfile::for_label(label, seed), slot_s, 200).unwrap();
                maxp(&s.to_f64()).unwrap()
            };
            peak(Label::Angry) >= peak(Label::Relaxed)
        })
        .count() as u64;
    eprintln!("angry maxp >= relaxed maxp in {wins}/{trials} trials");
    assert!(wins * 10 >= trials * 9, "{wins}/{trials}");
}

#[test]
fn angry_signal_has_more_variance() {
    let var = |label| {
        let x = generate_synthetic(&SynthProfile::for_label(label, 7), 60.0, 200).unwrap().to_f64();
        let m = x.iter().sum::<f64>() / x.len() as f64;
        x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
    };
    assert!(var(Label::Angry) > var(Label::Relaxed));
}

#[test]
fn generator_is_an_endless_seeded_stream() {
    let take = |seed| SynthGenerator::new(SynthProfile::relaxed(seed), 200).unwrap().take(500).collect::<Vec<u16>>();
    assert_eq!(take(3), take(3));
    assert_ne!(take(3), take(4));
}
