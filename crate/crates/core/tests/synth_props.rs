use std::collections::HashMap;

use goaround::detect::DetectorConfig;
use goaround::ingest::{parse_tracks, RadarConfig};
use goaround::pipeline::{detect_all, run_synth};
use goaround::synth::{self, HazardConfig, ScenarioConfig};
use goaround::Airport;
use proptest::prelude::*;

fn scenario(seed: u64, days: u32, hazard: HazardConfig) -> ScenarioConfig {
    ScenarioConfig { duration_days: days, seed, hazard, ..ScenarioConfig::default() }
}

#[test]
fn more_traffic_means_more_go_arounds() {
    let hazard = |coef| HazardConfig { base_probability: 0.03, inbound_coef: coef, inbound_center: 5.0, ..HazardConfig::default() };
    for seed in 0..10 {
        let flat = synth::generate(&scenario(seed, 2, hazard(0.0))).unwrap().truth;
        let steep = synth::generate(&scenario(seed, 2, hazard(0.4))).unwrap().truth;
        // same traffic and weather, only the hazard differs
        assert_eq!(flat.exposures.len(), steep.exposures.len());
        let rate = |t: &synth::GroundTruth, busy: bool| {
            let pick: Vec<_> = t.exposures.iter().filter(|e| (e.inbound > 5.0) == busy).collect();
            pick.iter().filter(|e| e.injected).count() as f64 / pick.len().max(1) as f64
        };
        assert!(rate(&steep, true) > rate(&steep, false), "seed {seed}");
        for (a, b) in flat.exposures.iter().zip(&steep.exposures) {
            assert_eq!(a.inbound, b.inbound);
            assert_eq!(a.probability <= b.probability, a.inbound >= 5.0, "seed {seed}");
        }
    }
}

#[test]
fn injected_events_are_recovered() {
    let mut total = 0;
    let mut seed = 100;
    while total < 1000 {
        let s = synth::generate(&scenario(seed, 3, HazardConfig { base_probability: 0.3, ..HazardConfig::default() })).unwrap();
        let found = detect_all(&s.tracks, &DetectorConfig::default(), Some(Airport::Sfo));
        let by_flight: HashMap<&str, Vec<f64>> = found.iter().fold(HashMap::new(), |mut m, e| {
            m.entry(e.flight_id.as_str()).or_default().push(e.t_ga);
            m
        });
        assert_eq!(found.len(), s.truth.events.len(), "seed {seed}");
        for ev in &s.truth.events {
            assert_eq!(by_flight.get(ev.flight_id.as_str()), Some(&vec![ev.t_ga]), "seed {seed} flight {}", ev.flight_id);
        }
        total += s.truth.events.len();
        seed += 1;
    }
}

#[test]
fn tracks_stay_inside_radar_coverage() {
    let s = synth::generate(&scenario(3, 1, HazardConfig { base_probability: 0.2, ..HazardConfig::default() })).unwrap();
    let radar = RadarConfig::default();
    assert!(s.tracks.iter().all(|t| t.points.iter().all(|p| radar.contains(p))));
    assert!(s.tracks.iter().all(|t| t.points.windows(2).all(|w| w[0].t < w[1].t)));
}

#[test]
fn csv_output_is_byte_identical() {
    let cfg = scenario(77, 1, HazardConfig { base_probability: 0.1, ..HazardConfig::default() });
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_synth(&cfg, a.path()).unwrap();
    run_synth(&cfg, b.path()).unwrap();
    for f in ["tracks.csv", "flights.csv", "weather.csv", "ground_truth.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let parsed = parse_tracks(std::fs::File::open(a.path().join("tracks.csv")).unwrap(), &RadarConfig::default()).unwrap();
    assert_eq!(parsed.tracks.len(), synth::generate(&cfg).unwrap().tracks.len());
}

proptest! {
    #[test]
    fn probability_is_monotone(inbound in 0.0f64..20.0, vis in 0.0f64..10.0, coef in 0.0f64..1.0, p0 in 0.001f64..0.5) {
        let h = HazardConfig { base_probability: p0, inbound_coef: coef, lowvis_coef: coef, ..HazardConfig::default() };
        let p = h.probability(inbound, vis, 12);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(h.probability(inbound + 1.0, vis, 12) >= p);
        prop_assert!(h.probability(inbound, (vis - 1.0).max(0.0), 12) >= p);
        let at_center = h.probability(h.inbound_center, 10.0, 12);
        prop_assert!((at_center - p0).abs() < 1e-12);
    }
}
