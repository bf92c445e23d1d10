//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use goaround::ingest::{RadarTrack, SynchronizedDataset};
use goaround::{Airport, WeightClass};
use goaround::features::{FeatureOptions, WeightClassMap};

/// (point_index, climb_end_index) of every go-around, by direct window scan.
pub fn detect(track: &RadarTrack, descent_run: usize, climb_run: usize, max_range: f64, max_alt: f64) -> Vec<(usize, usize)> {
    let p = &track.points;
    let n = p.len();
    let mut out: Vec<(usize, usize)> = Vec::new();
    for i in 1..n {
        if i < descent_run + 1 || i + climb_run > n {
            continue;
        }
        let climbs = (0..climb_run).all(|k| p[i + k].alt > p[i + k - 1].alt);
        let descends = (1..=descent_run).all(|k| p[i - k].alt < p[i - k - 1].alt);
        let terminal = p[i].x.hypot(p[i].y) <= max_range && p[i].alt <= max_alt;
        if !(climbs && descends && terminal) {
            continue;
        }
        let mut end = i;
        while end + 1 < n && p[end + 1].alt > p[end].alt {
            end += 1;
        }
        if let Some(&(_, last_end)) = out.last() {
            if i <= last_end {
                continue;
            }
        }
        out.push((i, end));
    }
    out
}

/// Determinant by cofactor expansion along the first row.
pub fn det(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    let mut total = 0.0;
    for c in 0..n {
        let minor: Vec<Vec<f64>> =
            m[1..].iter().map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect()).collect();
        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * m[0][c] * det(&minor);
    }
    total
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &v)| row.iter().copied().chain([v]).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        let pivot = m[col].clone();
        for row in m.iter_mut().skip(col + 1) {
            let f = row[col] / pivot[col];
            for (v, p) in row.iter_mut().zip(&pivot).skip(col) {
                *v -= f * p;
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    x
}

/// `(x-μ)ᵀ Σ⁻¹ (x-μ)` and `ln|Σ|` by explicit solve and expansion.
pub fn gaussian_terms(mean: &[f64], cov: &[Vec<f64>], x: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let y = solve(cov, &d);
    let q = d.iter().zip(&y).map(|(a, b)| a * b).sum();
    (q, det(cov).ln())
}

/// Discriminant score and the sum of magnitudes of its four terms.
pub fn score(m0: &[f64], c0: &[Vec<f64>], m1: &[f64], c1: &[Vec<f64>], x: &[f64]) -> (f64, f64) {
    let (q0, l0) = gaussian_terms(m0, c0, x);
    let (q1, l1) = gaussian_terms(m1, c1, x);
    (q0 + l0 - q1 - l1, q0.abs() + l0.abs() + q1.abs() + l1.abs())
}

/// Brute-force recount of all 135 fields at `minute` from the raw sources.
pub struct Recount<'a> {
    pub ds: &'a SynchronizedDataset,
    pub classes: &'a WeightClassMap,
    pub options: &'a FeatureOptions,
}

const AIRPORTS: [Airport; 3] = [Airport::Sfo, Airport::Oak, Airport::Sjc];
const CLASSES: [WeightClass; 3] = [WeightClass::Small, WeightClass::Large, WeightClass::Heavy];

fn floor_min(t: f64) -> i64 {
    (t / 60.0).floor() as i64
}

impl Recount<'_> {
    fn airborne(&self, airport: Airport, inbound: bool, m: i64) -> f64 {
        self.ds
            .tracks
            .iter()
            .filter(|t| {
                let code = if inbound { &t.destination } else { &t.origin };
                code == airport.code()
            })
            .filter(|t| floor_min(t.points[0].t) <= m && floor_min(t.points[t.points.len() - 1].t) >= m)
            .filter(|t| t.points.iter().any(|p| floor_min(p.t) == m))
            .count() as f64
    }

    fn movements(&self, airport: Airport, landing: bool, class: Option<WeightClass>, lo: i64, hi: i64) -> f64 {
        self.ds
            .flights
            .iter()
            .filter(|f| f.airport == airport)
            .filter(|f| class.is_none_or(|c| self.classes.class_of(f.aircraft_type.as_deref()) == c))
            .filter_map(|f| if landing { f.act_wheels_on } else { f.act_wheels_off })
            .filter(|&t| (lo..=hi).contains(&floor_min(t)))
            .count() as f64
    }

    fn elapsed(&self, airport: Airport, landing: bool, m: i64, k: usize) -> f64 {
        let now = ((m + 1) * 60) as f64;
        let mut times: Vec<f64> = self
            .ds
            .flights
            .iter()
            .filter(|f| f.airport == airport)
            .filter_map(|f| if landing { f.act_wheels_on } else { f.act_wheels_off })
            .filter(|&t| t < now)
            .collect();
        times.sort_by(|a, b| b.total_cmp(a));
        match times.get(k - 1) {
            Some(&t) => ((now - t) / 60.0).min(self.options.elapsed_cap_min),
            None => self.options.elapsed_cap_min,
        }
    }

    /// Delays of SFO aircraft taxiing at `m` (`None` entries have no delay).
    fn taxiing(&self, inbound: bool, m: i64) -> Vec<Option<f64>> {
        let mut out = Vec::new();
        for f in self.ds.flights.iter().filter(|f| f.airport == Airport::Sfo) {
            if inbound {
                let Some(on) = f.act_wheels_on else { continue };
                let gate = f.act_gate_in.unwrap_or(on + self.options.default_taxi_in_min * 60.0);
                if floor_min(on) <= m && m < floor_min(gate) {
                    out.push(f.sched_wheels_on.map(|s| ((on - s) / 60.0).max(0.0)));
                }
            } else {
                let (Some(o), Some(off)) = (f.act_gate_out, f.act_wheels_off) else { continue };
                if floor_min(o) <= m && m < floor_min(off) {
                    out.push(f.sched_gate_out.map(|s| ((o - s) / 60.0).max(0.0)));
                }
            }
        }
        out
    }

    fn seven(&self, v: impl Fn(i64) -> f64, m: i64) -> Vec<f64> {
        let mut out = vec![v(m)];
        for w in [5, 10, 15] {
            out.push((m - w + 1..=m).map(&v).sum::<f64>() / w as f64);
        }
        for w in [5, 10, 15] {
            out.push(v(m) - v(m - w));
        }
        out
    }

    pub fn fields(&self, m: i64) -> Vec<f64> {
        let mut f = Vec::with_capacity(135);
        f.push((m + self.options.utc_offset_min).rem_euclid(1440) as f64);
        for a in AIRPORTS {
            f.extend(self.seven(|x| self.airborne(a, true, x), m));
            f.extend(self.seven(|x| self.airborne(a, false, x), m));
        }
        for a in AIRPORTS {
            for landing in [true, false] {
                for w in [5i64, 10, 15] {
                    f.push(self.movements(a, landing, None, m - w + 1, m) / w as f64);
                }
                for k in [4, 8, 12] {
                    f.push(self.elapsed(a, landing, m, k));
                }
            }
        }
        for landing in [true, false] {
            for c in CLASSES {
                for w in [5i64, 10, 15] {
                    f.push(self.movements(Airport::Sfo, landing, Some(c), m - w + 1, m));
                }
            }
        }
        f.extend(self.seven(|x| self.taxiing(true, x).len() as f64, m));
        f.extend(self.seven(|x| self.taxiing(false, x).len() as f64, m));
        for inbound in [false, true] {
            let known: Vec<f64> = self.taxiing(inbound, m).into_iter().flatten().collect();
            f.push(known.iter().sum());
            for th in [0.0, 10.0, 20.0, 30.0, 45.0] {
                f.push(known.iter().filter(|&&d| d > th).count() as f64);
            }
            f.push(if known.is_empty() { 0.0 } else { known.iter().sum::<f64>() / known.len() as f64 });
        }
        let w = &self.ds.weather[&m];
        let rel = (w.wind_angle - self.options.runway_heading_deg).to_radians();
        f.extend([
            if w.vmc { 1.0 } else { 0.0 },
            w.ceiling,
            w.visibility,
            w.temperature.unwrap(),
            w.wind_angle,
            w.wind_speed,
            w.wind_speed * rel.cos(),
            (w.wind_speed * rel.sin()).abs(),
            w.arr_runways as f64,
            w.dep_runways as f64,
        ]);
        f
    }
}
