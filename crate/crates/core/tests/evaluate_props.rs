use goaround::corpus::{Label, Sample};
use goaround::discriminant::{sweep_scores, Threshold};
use goaround::evaluate::{capture_at, histogram_pair, lift_curve, lift_ratio, rank_features, LiftPoint};
use goaround::features::FeatureVector;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normals(rng: &mut ChaCha8Rng, n: usize, mu: f64) -> Vec<f64> {
    (0..n).map(|_| mu + rng.sample::<f64, _>(StandardNormal)).collect()
}

#[test]
fn gaussian_shift_divergence() {
    // Total variation between N(0,1) and N(3,1) is 2Φ(1.5) − 1.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let exact = 2.0 * statrs_cdf(1.5) - 1.0;
    assert!((exact - 0.8664).abs() < 1e-4);
    let (_, p, q, tv) = histogram_pair(&normals(&mut rng, 100_000, 0.0), &normals(&mut rng, 100_000, 3.0), 50, false).unwrap();
    assert!((tv - exact).abs() < 0.02, "tv {tv}");
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12 && (q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn statrs_cdf(x: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

#[test]
fn permuted_labels_give_no_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let scores = normals(&mut rng, 8000, 0.0);
    let mut labels: Vec<Label> = (0..8000).map(|i| if i % 5 == 0 { Label::Ga } else { Label::Nominal }).collect();
    let mut total = 0.0;
    for _ in 0..20 {
        labels.shuffle(&mut rng);
        let curve = lift_curve(&sweep_scores(&scores, &labels).unwrap());
        total += capture_at(&curve, 0.2).unwrap().1;
    }
    assert!((total / 20.0 - 0.2).abs() < 0.03);
}

fn sample(minute: i64, values: Vec<f64>, label: Label) -> Sample {
    Sample { features: FeatureVector { minute, values }, label }
}

#[test]
fn driver_ranks_first_and_twins_tie() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut samples = Vec::new();
    for i in 0..3000 {
        let label = if i % 3 == 0 { Label::Ga } else { Label::Nominal };
        let shift = if label == Label::Ga { 2.5 } else { 0.0 };
        let mut values: Vec<f64> = normals(&mut rng, 135, 0.0);
        values[6] = shift + rng.sample::<f64, _>(StandardNormal);
        values[40] = values[20];
        samples.push(sample(i, values, label));
    }
    let ranked = rank_features(&samples, 50).unwrap();
    assert_eq!(ranked.len(), 135);
    assert_eq!(ranked[0].index, 7);
    assert!(ranked.windows(2).all(|w| w[0].divergence >= w[1].divergence));
    let a = ranked.iter().position(|f| f.index == 21).unwrap();
    let b = ranked.iter().position(|f| f.index == 41).unwrap();
    assert_eq!(ranked[a].divergence, ranked[b].divergence);
    // stable sort keeps catalog order between equal divergences
    assert!(a < b);
    assert!(ranked[a..=b].iter().all(|f| f.divergence == ranked[a].divergence));
}

#[test]
fn constant_feature_has_zero_divergence() {
    let (edges, p, q, tv) = histogram_pair(&[2.0; 10], &[2.0; 4], 50, true).unwrap();
    assert_eq!((edges.len(), p, q, tv), (2, vec![1.0], vec![1.0], 0.0));
}

fn curve_from(points: &[(f64, f64)]) -> Vec<LiftPoint> {
    points
        .iter()
        .enumerate()
        .map(|(i, &(f, g))| LiftPoint {
            threshold: Threshold::new(-(i as f64)).unwrap(),
            alert_fraction: f,
            capture_fraction: g,
            lift_ratio: lift_ratio(f, g),
            simple_ratio: 0.0,
        })
        .collect()
}

proptest! {
    #[test]
    fn capture_at_is_monotone(steps in prop::collection::vec((0.0f64..0.2, 0.0f64..0.2), 1..30), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (mut f, mut g) = (0.0, 0.0);
        let mut pts = vec![(0.0, 0.0)];
        for (df, dg) in steps {
            f = (f + df).min(1.0);
            g = (g + dg).min(1.0);
            pts.push((f, g));
        }
        pts.push((1.0, 1.0));
        let curve = curve_from(&pts);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (t_lo, g_lo) = capture_at(&curve, lo).unwrap();
        let (t_hi, g_hi) = capture_at(&curve, hi).unwrap();
        prop_assert!(g_lo <= g_hi + 1e-12);
        prop_assert!(t_lo.value() >= t_hi.value());
        prop_assert!((0.0..=1.0).contains(&g_lo));
    }

    #[test]
    fn lift_ratio_is_one_on_the_diagonal(f in 0.001f64..0.999) {
        prop_assert!((lift_ratio(f, f) - 1.0).abs() < 1e-12);
        prop_assert!(lift_ratio(f, (f + 0.1).min(0.9999)) >= 1.0);
    }

    #[test]
    fn histograms_are_distributions(a in prop::collection::vec(-100.0f64..100.0, 1..100), b in prop::collection::vec(-100.0f64..100.0, 1..100), bins in 1usize..80) {
        let (edges, p, q, tv) = histogram_pair(&a, &b, bins, false).unwrap();
        prop_assert_eq!(p.len(), edges.len() - 1);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&tv));
        prop_assert!(edges.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn lift_ratio_edges() {
    assert_eq!(lift_ratio(0.0, 0.0), f64::INFINITY);
    assert_eq!(lift_ratio(0.3, 1.0), f64::INFINITY);
    assert_eq!(lift_ratio(1.0, 1.0), 1.0);
    assert!((lift_ratio(0.15, 0.3) - (2.0 / (0.7 / 0.85))).abs() < 1e-12);
}

#[test]
fn permuted_corpus_sits_inside_the_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut samples: Vec<Sample> = (0..1500)
        .map(|i| {
            let label = if i % 4 == 0 { Label::Ga } else { Label::Nominal };
            let mut values = normals(&mut rng, 135, 0.0);
            if label == Label::Ga {
                values[2] += 1.5;
            }
            sample(i, values, label)
        })
        .collect();
    let real = rank_features(&samples, 50).unwrap()[0].divergence;
    let mut labels: Vec<Label> = samples.iter().map(|s| s.label).collect();
    let mut max_div = |rng: &mut ChaCha8Rng, samples: &mut Vec<Sample>| {
        labels.shuffle(rng);
        for (s, l) in samples.iter_mut().zip(&labels) {
            s.label = *l;
        }
        rank_features(samples, 50).unwrap()[0].divergence
    };
    let mut null: Vec<f64> = (0..100).map(|_| max_div(&mut rng, &mut samples)).collect();
    null.sort_by(f64::total_cmp);
    let p99 = null[98];
    let fresh = max_div(&mut rng, &mut samples);
    assert!(fresh < p99, "permuted max divergence {fresh} vs null p99 {p99}");
    assert!(real > null[99], "driver divergence {real} should exceed the null");
}
