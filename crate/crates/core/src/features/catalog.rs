//! The ordered list of 135 per-minute fields.
//!
//! Each entry carries a recipe (`Quantity` + `Stat`) so the computation is
//! driven entirely by the catalog.

use std::sync::OnceLock;

use crate::airport::{Airport, WeightClass};

pub const FEATURE_COUNT: usize = 135;
pub const WINDOWS: [u32; 3] = [5, 10, 15];
pub const ELAPSED_K: [usize; 3] = [4, 8, 12];
pub const DELAY_THRESHOLDS: [f64; 5] = [0.0, 10.0, 20.0, 30.0, 45.0];
/// Longest look-back any field needs, in minutes.
pub const MAX_LOOKBACK: i64 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

/// A per-minute airport-state quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    TimeOfDay,
    Inbound(Airport),
    Outbound(Airport),
    TaxiIn,
    TaxiOut,
    /// Landings at an airport, optionally restricted to one weight class.
    Landings(Airport, Option<WeightClass>),
    Takeoffs(Airport, Option<WeightClass>),
    DelayTotal(Direction),
    /// Aircraft delayed strictly more than the threshold (minutes).
    DelayedOver(Direction, f64),
    DelayMean(Direction),
    Vmc,
    Ceiling,
    Visibility,
    Temperature,
    WindAngle,
    WindSpeed,
    Headwind,
    Crosswind,
    ArrRunways,
    DepRunways,
}

/// How the quantity is reduced over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stat {
    Instant,
    /// Mean of the instant value over minutes `(t - w, t]`.
    Average(u32),
    /// `instant(t) - instant(t - w)`.
    Variation(u32),
    /// Events in `(t - w, t]` divided by `w`.
    Rate(u32),
    /// Events in `(t - w, t]`.
    Count(u32),
    /// Minutes since the k-th most recent event, capped.
    Elapsed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Instant,
    Average,
    Variation,
    Rate,
    Elapsed,
    Count,
    Weather,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    /// 1-based index.
    pub index: usize,
    pub name: String,
    pub unit: &'static str,
    pub window: Option<u32>,
    pub kind: FeatureKind,
    pub quantity: Quantity,
    pub stat: Stat,
}

/// Named index ranges of the catalog (inclusive, 1-based).
pub const GROUPS: [(&str, usize, usize); 11] = [
    ("time_of_day", 1, 1),
    ("sfo_airborne", 2, 15),
    ("oak_airborne", 16, 29),
    ("sjc_airborne", 30, 43),
    ("sfo_movements", 44, 55),
    ("oak_movements", 56, 67),
    ("sjc_movements", 68, 79),
    ("sfo_weight_classes", 80, 97),
    ("taxi", 98, 111),
    ("delays", 112, 125),
    ("weather", 126, 135),
];

struct Builder {
    specs: Vec<FeatureSpec>,
}

impl Builder {
    fn push(&mut self, name: String, unit: &'static str, quantity: Quantity, stat: Stat, weather: bool) {
        let (kind, window) = match stat {
            Stat::Instant if weather => (FeatureKind::Weather, None),
            Stat::Instant => (FeatureKind::Instant, None),
            Stat::Average(w) => (FeatureKind::Average, Some(w)),
            Stat::Variation(w) => (FeatureKind::Variation, Some(w)),
            Stat::Rate(w) => (FeatureKind::Rate, Some(w)),
            Stat::Count(w) => (FeatureKind::Count, Some(w)),
            Stat::Elapsed(_) => (FeatureKind::Elapsed, None),
        };
        let index = self.specs.len() + 1;
        self.specs.push(FeatureSpec { index, name, unit, window, kind, quantity, stat });
    }

    /// current, average 5/10/15, variation 5/10/15
    fn counted(&mut self, prefix: &str, quantity: Quantity) {
        self.push(format!("{prefix}_current"), "aircraft", quantity, Stat::Instant, false);
        for w in WINDOWS {
            self.push(format!("{prefix}_avg_{w}"), "aircraft", quantity, Stat::Average(w), false);
        }
        for w in WINDOWS {
            self.push(format!("{prefix}_var_{w}"), "aircraft", quantity, Stat::Variation(w), false);
        }
    }

    fn movements(&mut self, airport: Airport) {
        let code = airport.code().to_ascii_lowercase();
        for (label, verb, quantity) in [
            ("landing", "land", Quantity::Landings(airport, None)),
            ("takeoff", "takeoff", Quantity::Takeoffs(airport, None)),
        ] {
            for w in WINDOWS {
                self.push(format!("{code}_{label}_rate_{w}"), "aircraft/min", quantity, Stat::Rate(w), false);
            }
            for k in ELAPSED_K {
                self.push(format!("{code}_{verb}_elapsed_{k}"), "min", quantity, Stat::Elapsed(k), false);
            }
        }
    }

    fn delays(&mut self, dir: Direction) {
        let tag = match dir {
            Direction::Out => "out",
            Direction::In => "in",
        };
        self.push(format!("delay_{tag}_total"), "min", Quantity::DelayTotal(dir), Stat::Instant, false);
        for th in DELAY_THRESHOLDS {
            self.push(
                format!("delay_{tag}_over_{}", th as u32),
                "aircraft",
                Quantity::DelayedOver(dir, th),
                Stat::Instant,
                false,
            );
        }
        self.push(format!("delay_{tag}_mean"), "min", Quantity::DelayMean(dir), Stat::Instant, false);
    }
}

fn build() -> Vec<FeatureSpec> {
    let mut b = Builder { specs: Vec::with_capacity(FEATURE_COUNT) };
    b.push("time_of_day".into(), "min", Quantity::TimeOfDay, Stat::Instant, false);
    for airport in Airport::ALL {
        let code = airport.code().to_ascii_lowercase();
        b.counted(&format!("{code}_inbound"), Quantity::Inbound(airport));
        b.counted(&format!("{code}_outbound"), Quantity::Outbound(airport));
    }
    for airport in Airport::ALL {
        b.movements(airport);
    }
    for (label, make) in [
        ("landing", Quantity::Landings as fn(Airport, Option<WeightClass>) -> Quantity),
        ("takeoff", Quantity::Takeoffs),
    ] {
        for class in WeightClass::ALL {
            for w in WINDOWS {
                b.push(
                    format!("sfo_{label}_{}_{w}", class.name()),
                    "aircraft",
                    make(Airport::Sfo, Some(class)),
                    Stat::Count(w),
                    false,
                );
            }
        }
    }
    b.counted("taxi_in", Quantity::TaxiIn);
    b.counted("taxi_out", Quantity::TaxiOut);
    b.delays(Direction::Out);
    b.delays(Direction::In);
    for (name, unit, q) in [
        ("vmc", "flag", Quantity::Vmc),
        ("ceiling", "ft", Quantity::Ceiling),
        ("visibility", "nmi", Quantity::Visibility),
        ("temperature", "deg", Quantity::Temperature),
        ("wind_angle", "deg", Quantity::WindAngle),
        ("wind_speed", "kt", Quantity::WindSpeed),
        ("headwind", "kt", Quantity::Headwind),
        ("crosswind", "kt", Quantity::Crosswind),
        ("arr_runways", "runways", Quantity::ArrRunways),
        ("dep_runways", "runways", Quantity::DepRunways),
    ] {
        b.push(name.into(), unit, q, Stat::Instant, true);
    }
    b.specs
}

/// The feature catalog, indexed `0..135` (entry `i` has index `i + 1`).
pub fn catalog() -> &'static [FeatureSpec] {
    static CATALOG: OnceLock<Vec<FeatureSpec>> = OnceLock::new();
    CATALOG.get_or_init(build)
}

/// Catalog indices (1-based) whose values are integer counts.
pub fn is_integer_valued(spec: &FeatureSpec) -> bool {
    matches!(spec.stat, Stat::Instant | Stat::Variation(_) | Stat::Count(_))
        && matches!(
            spec.quantity,
            Quantity::Inbound(_)
                | Quantity::Outbound(_)
                | Quantity::TaxiIn
                | Quantity::TaxiOut
                | Quantity::Landings(..)
                | Quantity::Takeoffs(..)
                | Quantity::DelayedOver(..)
                | Quantity::Vmc
                | Quantity::ArrRunways
                | Quantity::DepRunways
                | Quantity::TimeOfDay
        )
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn cardinality_and_contiguity() {
        let cat = catalog();
        assert_eq!(cat.len(), FEATURE_COUNT);
        for (i, spec) in cat.iter().enumerate() {
            assert_eq!(spec.index, i + 1);
        }
        let names: HashSet<_> = cat.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names.len(), FEATURE_COUNT);
    }

    #[test]
    fn group_boundaries() {
        let cat = catalog();
        let at = |i: usize| &cat[i - 1];
        assert_eq!(at(1).quantity, Quantity::TimeOfDay);
        assert_eq!(at(2).name, "sfo_inbound_current");
        assert_eq!(at(5).stat, Stat::Average(15));
        assert_eq!(at(8).stat, Stat::Variation(15));
        assert_eq!(at(9).name, "sfo_outbound_current");
        assert_eq!(at(16).name, "oak_inbound_current");
        assert_eq!(at(30).name, "sjc_inbound_current");
        assert_eq!(at(43).name, "sjc_outbound_var_15");
        assert_eq!(at(44).name, "sfo_landing_rate_5");
        assert_eq!(at(47).name, "sfo_land_elapsed_4");
        assert_eq!(at(50).name, "sfo_takeoff_rate_5");
        assert_eq!(at(55).name, "sfo_takeoff_elapsed_12");
        assert_eq!(at(56).name, "oak_landing_rate_5");
        assert_eq!(at(68).name, "sjc_landing_rate_5");
        assert_eq!(at(79).name, "sjc_takeoff_elapsed_12");
        assert_eq!(at(80).name, "sfo_landing_small_5");
        assert_eq!(at(88).name, "sfo_landing_heavy_15");
        assert_eq!(at(89).name, "sfo_takeoff_small_5");
        assert_eq!(at(97).name, "sfo_takeoff_heavy_15");
        assert_eq!(at(98).name, "taxi_in_current");
        assert_eq!(at(105).name, "taxi_out_current");
        assert_eq!(at(111).name, "taxi_out_var_15");
        assert_eq!(at(112).name, "delay_out_total");
        assert_eq!(at(117).name, "delay_out_over_45");
        assert_eq!(at(118).name, "delay_out_mean");
        assert_eq!(at(119).name, "delay_in_total");
        assert_eq!(at(125).name, "delay_in_mean");
        assert_eq!(at(126).name, "vmc");
        assert_eq!(at(128).name, "visibility");
        assert_eq!(at(132).name, "headwind");
        assert_eq!(at(135).name, "dep_runways");
        for (_, lo, hi) in GROUPS {
            assert!(lo <= hi && hi <= FEATURE_COUNT);
        }
        let covered: usize = GROUPS.iter().map(|(_, lo, hi)| hi - lo + 1).sum();
        assert_eq!(covered, FEATURE_COUNT);
    }
}
