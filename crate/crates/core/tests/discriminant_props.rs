mod oracle;

use goaround::corpus::{Label, Sample};
use goaround::discriminant::{sweep_scores, ClassModel, DiscriminantModel, Standardizer, Threshold};
use goaround::features::FeatureVector;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: f64, spread: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|j| shift + spread * (1.0 + j as f64 * 0.1) * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

fn samples(rows: Vec<Vec<f64>>, label: Label) -> Vec<Sample> {
    rows.into_iter()
        .enumerate()
        .map(|(i, values)| Sample { features: FeatureVector { minute: i as i64, values }, label })
        .collect()
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ridge_shifts_every_eigenvalue(seed in any::<u64>(), d in 1usize..8, lambda in 0.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = normal_rows(&mut rng, d + 20, d, 0.0, 1.0);
        let plain = ClassModel::fit(&rows, 0.0, 0).unwrap();
        let ridged = ClassModel::fit(&rows, lambda, 0).unwrap();
        let shift = lambda * plain.covariance.trace() / d as f64;
        let mut a: Vec<f64> = SymmetricEigen::new(plain.covariance.clone()).eigenvalues.iter().copied().collect();
        let mut b: Vec<f64> = SymmetricEigen::new(ridged.covariance.clone()).eigenvalues.iter().copied().collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y - x - shift).abs() <= 1e-9 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn json_round_trip_keeps_scores(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train = samples(normal_rows(&mut rng, 30, d, 0.0, 1.0), Label::Nominal);
        train.extend(samples(normal_rows(&mut rng, 30, d, 0.5, 1.5), Label::Ga));
        let model = DiscriminantModel::fit(&train, 1e-3).unwrap();
        let back = DiscriminantModel::from_json(&model.to_json()).unwrap();
        for s in &train {
            prop_assert_eq!(model.score(&s.features.values).unwrap(), back.score(&s.features.values).unwrap());
        }
    }

    #[test]
    fn standardized_fit_matches_manual_standardization(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train = samples(normal_rows(&mut rng, 25, d, 10.0, 4.0), Label::Nominal);
        train.extend(samples(normal_rows(&mut rng, 25, d, 12.0, 6.0), Label::Ga));
        let model = DiscriminantModel::fit(&train, 1e-2).unwrap();
        let rows: Vec<&[f64]> = train.iter().map(|s| s.features.values.as_slice()).collect();
        let st = Standardizer::fit(&rows).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| st.apply(r)).collect();
        let zr: Vec<&[f64]> = z.iter().map(Vec::as_slice).collect();
        let labels: Vec<Label> = train.iter().map(|s| s.label).collect();
        let manual = DiscriminantModel::fit_rows(&zr, &labels, Standardizer::identity(d), 1e-2).unwrap();
        for (s, zs) in train.iter().zip(&z) {
            let (a, b) = (model.score(&s.features.values).unwrap(), manual.score(zs).unwrap());
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn classify_agrees_with_score(seed in any::<u64>(), t in -20.0f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut train = samples(normal_rows(&mut rng, 20, 3, 0.0, 1.0), Label::Nominal);
        train.extend(samples(normal_rows(&mut rng, 20, 3, 1.0, 2.0), Label::Ga));
        let model = DiscriminantModel::fit(&train, 1e-3).unwrap();
        let th = Threshold::new(t).unwrap();
        for s in &train {
            let score = model.score(&s.features.values).unwrap();
            let want = if score < t { Label::Nominal } else { Label::Ga };
            prop_assert_eq!(model.classify(&s.features.values, th).unwrap(), want);
        }
        prop_assert_eq!(model.classify(&train[0].features.values, Threshold::HIGH).unwrap(), Label::Nominal);
        prop_assert_eq!(model.classify(&train[0].features.values, Threshold::LOW).unwrap(), Label::Ga);
    }

    #[test]
    fn sweep_is_monotone(scores in prop::collection::vec(-5i32..5, 2..200), flags in prop::collection::vec(any::<bool>(), 200)) {
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let mut labels: Vec<Label> = flags[..scores.len()].iter().map(|&g| if g { Label::Ga } else { Label::Nominal }).collect();
        labels[0] = Label::Ga;
        labels[1] = Label::Nominal;
        let sweep = sweep_scores(&scores, &labels).unwrap();
        prop_assert_eq!((sweep[0].alert_fraction, sweep[0].capture_fraction), (0.0, 0.0));
        let last = sweep.last().unwrap();
        prop_assert_eq!((last.alert_fraction, last.capture_fraction), (1.0, 1.0));
        for w in sweep.windows(2) {
            prop_assert!(w[1].alert_fraction >= w[0].alert_fraction);
            prop_assert!(w[1].capture_fraction >= w[0].capture_fraction);
            prop_assert!(w[1].threshold.value() <= w[0].threshold.value());
        }
        for p in &sweep[1..sweep.len() - 1] {
            let t = p.threshold.value();
            let alerted = scores.iter().filter(|&&s| s >= t).count() as f64 / scores.len() as f64;
            prop_assert_eq!(p.alert_fraction, alerted);
        }
    }
}

#[test]
fn high_dimensional_fit_recovers_parameters() {
    let (n, d) = (4000, 135);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rows = normal_rows(&mut rng, n, d, 3.0, 1.0);
    let m = ClassModel::fit(&rows, 0.0, 0).unwrap();
    for j in 0..d {
        let sigma = 1.0 + j as f64 * 0.1;
        let tol = 5.0 * sigma / (n as f64).sqrt();
        assert!((m.mean[j] - 3.0).abs() < tol, "mean {j}: {}", m.mean[j]);
        let var = sigma * sigma;
        // the variance estimate has sd sigma^2 * sqrt(2/(n-1))
        assert!((m.covariance[(j, j)] - var).abs() < 5.0 * var * (2.0 / (n as f64 - 1.0)).sqrt(), "var {j}");
    }
    assert!(m.log_det.is_finite());
}

#[test]
fn fitted_model_scores_match_fresh_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let d = 5;
    let n0 = normal_rows(&mut rng, 200, d, 0.0, 1.0);
    let n1 = normal_rows(&mut rng, 80, d, 0.8, 1.7);
    let c0 = ClassModel::fit(&n0, 0.05, 0).unwrap();
    let c1 = ClassModel::fit(&n1, 0.05, 1).unwrap();
    let model = DiscriminantModel { class0: c0.clone(), class1: c1.clone(), standardizer: Standardizer::identity(d), ridge_lambda: 0.05 };
    for x in normal_rows(&mut rng, 50, d, 0.4, 2.0) {
        let (want, scale) = oracle::score(
            c0.mean.as_slice(),
            &to_rows(&c0.covariance),
            c1.mean.as_slice(),
            &to_rows(&c1.covariance),
            &x,
        );
        let got = model.score(&x).unwrap();
        assert!((got - want).abs() <= 1e-9 * scale, "{got} vs {want}");
    }
}

#[test]
fn rejects_degenerate_input() {
    let rows = vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]];
    assert!(ClassModel::fit(&rows, 0.0, 0).is_err());
    assert!(ClassModel::fit(&rows, 0.1, 0).is_ok());
    assert!(ClassModel::fit(&rows[..1], 0.1, 0).is_err());
    assert!(Threshold::new(f64::NAN).is_err());
}
