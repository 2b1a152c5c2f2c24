use ffsonar::classify::model_io::{Classifier, SavedModel};
use ffsonar::classify::{stratified_folds, MlpModel};
use ffsonar::features::Standardizer;
use ffsonar::inversion::estimate_range;
use ffsonar::io::{read_raw, write_raw};
use ffsonar::physics::FormFunction;
use ffsonar::signal::Waveform;
use ffsonar::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn range_is_linear_in_delay(t in 1e-4f64..1e-2, s in 0.1f64..10.0, c in 300.0f64..2000.0) {
        let r = estimate_range(t, c).unwrap();
        let scaled = estimate_range(s * t, c).unwrap();
        prop_assert!((scaled - s * r).abs() <= 1e-12 * scaled.abs());
        prop_assert!((r - t * c / 2.0).abs() <= 1e-15 * r);
    }

    #[test]
    fn standardized_training_columns_have_zero_mean_unit_std(
        data in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..40)
    ) {
        let raw: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let st = Standardizer::fit(&raw).unwrap();
        let out: Vec<Vec<f64>> = data.iter().map(|r| st.transform(r)).collect();
        let n = out.len() as f64;
        for j in 0..3 {
            let mean = out.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = out.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            if st.std[j] > 1e-6 {
                prop_assert!((var - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn folds_partition_with_balanced_classes(
        labels in prop::collection::vec(0usize..2, 6..120),
        k in 2usize..6,
        seed in any::<u64>(),
    ) {
        let counts = [0, 1].map(|c| labels.iter().filter(|&&l| l == c).count());
        let folds = stratified_folds(&labels, k, seed);
        if counts.iter().any(|&n| n < k) {
            prop_assert!(folds.is_err());
            return Ok(());
        }
        let folds = folds.unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0; labels.len()];
        for f in &folds {
            for &i in f {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
        for c in [0, 1] {
            let per: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == c).count()).collect();
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn mlp_file_roundtrip_is_exact(
        hidden in prop::collection::vec(1usize..9, 1..4),
        input in 1usize..12,
        seed in any::<u64>(),
    ) {
        let mut sizes = vec![input];
        sizes.extend(hidden);
        sizes.push(1);
        let saved = SavedModel {
            classifier: Classifier::Mlp(MlpModel::init(&sizes, 0.5, seed).unwrap()),
            standardizer: None,
        };
        let back = SavedModel::from_bytes(&saved.to_bytes().unwrap()).unwrap();
        prop_assert_eq!(back, saved);
    }

    #[test]
    fn raw_samples_roundtrip_through_f32(
        samples in prop::collection::vec(-1e6f64..1e6, 0..200),
        rate in 1.0f64..1e7,
    ) {
        let w = Waveform::new(samples, rate).unwrap();
        let mut buf = Vec::new();
        write_raw(&w, &mut buf).unwrap();
        let back = read_raw(buf.as_slice()).unwrap();
        prop_assert_eq!(back.sample_rate_hz, rate);
        prop_assert_eq!(back.len(), w.len());
        for (a, b) in w.samples.iter().zip(&back.samples) {
            prop_assert_eq!(*b, *a as f32 as f64);
        }
    }

    #[test]
    fn interpolation_stays_between_neighbours(
        mags in prop::collection::vec(0.0f64..5.0, 2..30),
        t in 0.0f64..1.0,
    ) {
        let n = mags.len();
        let freq: Vec<f64> = (0..n).map(|i| 1e3 * (i + 1) as f64).collect();
        let values: Vec<Complex64> = mags.iter().map(|&m| Complex64::new(m, 0.0)).collect();
        let ff = FormFunction::new(freq.clone(), values, None).unwrap();
        let x = freq[0] + t * (freq[n - 1] - freq[0]);
        let v = ff.interpolate(x).re;
        let hi = freq.partition_point(|&f| f < x).clamp(1, n - 1);
        let (a, b) = (mags[hi - 1], mags[hi]);
        prop_assert!(v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12);
        prop_assert_eq!(ff.interpolate(freq[n - 1] + 1.0), Complex64::new(0.0, 0.0));
    }
}
