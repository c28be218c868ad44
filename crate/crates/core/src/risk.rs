//! Shortfall and surplus risk of a reserve profile against the empirical
//! distribution of historical net-demand deviations, and reserve sizing to a
//! risk ceiling.
//!
//! Risk is the probability of a deviation beyond the reserve times the
//! distance from the reserve to the most extreme deviation observed:
//!
//! ```text
//! ρ_short(r) = P(ε > r) · (max ε − r)      for r < max ε, else 0
//! ρ_long(r)  = P(ε < −r) · (−r − min ε)    for −r > min ε, else 0
//! ```

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::HistoricalSeries;
use crate::reserve::{Direction, ReserveParams, ReserveProfile};

pub const DEFAULT_RHO_LIMIT: f64 = 100.0;

/// How deviations are grouped into separate distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupKey {
    #[default]
    HourOfDay,
    /// A single distribution for all intervals.
    Whole,
}

impl GroupKey {
    pub fn group_count(self) -> usize {
        match self {
            GroupKey::HourOfDay => 24,
            GroupKey::Whole => 1,
        }
    }

    pub fn group_of(self, t: NaiveDateTime) -> usize {
        match self {
            GroupKey::HourOfDay => t.hour() as usize,
            GroupKey::Whole => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationGroup {
    /// Sorted ascending.
    pub samples: Vec<f64>,
    /// Set when the group had no samples of its own and took a neighbour's.
    pub borrowed_from: Option<usize>,
}

impl DeviationGroup {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.samples[0]
    }

    pub fn max(&self) -> f64 {
        self.samples[self.samples.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationDistribution {
    key: GroupKey,
    groups: Vec<DeviationGroup>,
}

impl DeviationDistribution {
    /// Groups the forecast errors of `history` by `key`. Empty hour groups
    /// borrow the samples of the nearest populated hour (circular distance,
    /// earlier hour on ties).
    pub fn build(history: &HistoricalSeries, key: GroupKey) -> Result<Self> {
        let pairs: Vec<(NaiveDateTime, f64)> = history
            .records()
            .iter()
            .map(|r| (r.timestamp, r.actual - r.forecast))
            .collect();
        Self::from_deviations(&pairs, key)
    }

    pub fn from_deviations(deviations: &[(NaiveDateTime, f64)], key: GroupKey) -> Result<Self> {
        if deviations.is_empty() {
            return Err(Error::invalid("deviation distribution needs at least one record"));
        }
        let n = key.group_count();
        let mut own: Vec<Vec<f64>> = vec![Vec::new(); n];
        for &(t, e) in deviations {
            if !e.is_finite() {
                return Err(Error::invalid(format!("non-finite deviation at {t}")));
            }
            own[key.group_of(t)].push(e);
        }
        for g in &mut own {
            g.sort_by(f64::total_cmp);
        }
        let groups = (0..n)
            .map(|g| {
                if !own[g].is_empty() {
                    return DeviationGroup {
                        samples: own[g].clone(),
                        borrowed_from: None,
                    };
                }
                let source = nearest_populated(&own, g);
                log::warn!("deviation group {g} is empty; borrowing group {source}");
                DeviationGroup {
                    samples: own[source].clone(),
                    borrowed_from: Some(source),
                }
            })
            .collect();
        Ok(Self { key, groups })
    }

    /// Single-group distribution over raw samples.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let t = NaiveDateTime::default();
        let pairs: Vec<(NaiveDateTime, f64)> = samples.iter().map(|&e| (t, e)).collect();
        Self::from_deviations(&pairs, GroupKey::Whole)
    }

    pub fn key(&self) -> GroupKey {
        self.key
    }

    pub fn groups(&self) -> &[DeviationGroup] {
        &self.groups
    }

    pub fn group_for(&self, t: NaiveDateTime) -> &DeviationGroup {
        &self.groups[self.key.group_of(t)]
    }
}

fn nearest_populated(groups: &[Vec<f64>], g: usize) -> usize {
    let n = groups.len();
    (1..n)
        .find_map(|dist| {
            let earlier = (g + n - dist) % n;
            let later = (g + dist) % n;
            let mut candidates = [earlier, later];
            candidates.sort_unstable();
            candidates.into_iter().find(|&c| !groups[c].is_empty())
        })
        .expect("at least one populated group")
}

/// Upward (shortfall) risk of reserve `r` for sorted `samples`.
pub fn risk_short(samples: &[f64], r: f64) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let max = samples[n - 1];
    if r >= max {
        return 0.0;
    }
    let above = n - samples.partition_point(|&e| e <= r);
    above as f64 / n as f64 * (max - r)
}

/// Downward (surplus) risk of reserve `r` for sorted `samples`.
pub fn risk_long(samples: &[f64], r: f64) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let min = samples[0];
    let threshold = -r;
    if threshold <= min {
        return 0.0;
    }
    let below = samples.partition_point(|&e| e < threshold);
    below as f64 / n as f64 * (threshold - min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub timestamps: Vec<NaiveDateTime>,
    pub rho_short: Vec<f64>,
    pub rho_long: Vec<f64>,
}

impl RiskProfile {
    pub fn horizon(&self) -> usize {
        self.timestamps.len()
    }
}

/// Risk of `profile` at each of `timestamps`, using the deviation group of
/// each timestamp.
pub fn risk(dist: &DeviationDistribution, profile: &ReserveProfile, timestamps: &[NaiveDateTime]) -> Result<RiskProfile> {
    if profile.horizon() != timestamps.len() {
        return Err(Error::HorizonMismatch {
            expected: timestamps.len(),
            found: profile.horizon(),
        });
    }
    let mut rho_short = Vec::with_capacity(timestamps.len());
    let mut rho_long = Vec::with_capacity(timestamps.len());
    for (t, &ts) in timestamps.iter().enumerate() {
        let g = dist.group_for(ts);
        rho_short.push(risk_short(&g.samples, profile.up[t]));
        rho_long.push(risk_long(&g.samples, profile.down[t]));
    }
    Ok(RiskProfile {
        timestamps: timestamps.to_vec(),
        rho_short,
        rho_long,
    })
}

/// Smallest `r ≥ 0` with `risk_short(samples, r) ≤ limit`.
///
/// Between consecutive sample values the exceedance count is constant, so
/// risk is linear there; pieces are scanned from `r = 0` upward and the first
/// one reaching the limit is solved exactly.
pub fn min_reserve_short(samples: &[f64], limit: f64) -> f64 {
    let n = samples.len();
    if n == 0 || risk_short(samples, 0.0) <= limit {
        return 0.0;
    }
    let max = samples[n - 1];
    let mut start = 0.0_f64;
    let mut idx = samples.partition_point(|&e| e <= 0.0);
    while idx < n {
        // piece [start, samples[idx]) with constant count n - first index above start
        let above = n - samples.partition_point(|&e| e <= start);
        let end = samples[idx];
        if risk_short(samples, start) <= limit {
            return start;
        }
        let mut r = max - limit * n as f64 / above as f64;
        if r < end {
            r = r.max(start);
            while risk_short(samples, r) > limit {
                r = r.next_up();
            }
            return r;
        }
        start = end;
        idx = samples.partition_point(|&e| e <= end);
    }
    max.max(0.0)
}

/// Smallest `r ≥ 0` with `risk_long(samples, r) ≤ limit`.
pub fn min_reserve_long(samples: &[f64], limit: f64) -> f64 {
    let mut negated: Vec<f64> = samples.iter().map(|e| -e).collect();
    negated.sort_by(f64::total_cmp);
    min_reserve_short(&negated, limit)
}

/// Minimal reserve per deviation group so the risk in `direction` does not
/// exceed `limit`.
pub fn size_to_risk(dist: &DeviationDistribution, limit: f64, direction: Direction) -> Result<Vec<f64>> {
    if !(limit >= 0.0) {
        return Err(Error::invalid(format!("risk limit {limit} must be >= 0")));
    }
    Ok(dist
        .groups()
        .iter()
        .map(|g| match direction {
            Direction::Up => min_reserve_short(&g.samples, limit),
            Direction::Down => min_reserve_long(&g.samples, limit),
        })
        .collect())
}

/// Up and down reserves sized to `limit` at each of `timestamps`.
pub fn size_profile(dist: &DeviationDistribution, limit: f64, timestamps: &[NaiveDateTime]) -> Result<ReserveProfile> {
    let up = size_to_risk(dist, limit, Direction::Up)?;
    let down = size_to_risk(dist, limit, Direction::Down)?;
    let key = dist.key();
    let profile = ReserveProfile::new(
        timestamps.iter().map(|&t| up[key.group_of(t)]).collect(),
        timestamps.iter().map(|&t| down[key.group_of(t)]).collect(),
        "risk",
    )?;
    Ok(profile.with_params(ReserveParams {
        rho_limit: Some(limit),
        ..ReserveParams::default()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;
    use proptest::prelude::*;

    const SIX: [f64; 6] = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];

    fn t0() -> NaiveDateTime {
        NaiveDateTime::parse_from_str("2020-07-01 00:00:00", "%Y-%m-%d %H:%M:%S").unwrap()
    }

    #[test]
    fn empirical_risk_examples() {
        assert!((risk_short(&SIX, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((risk_long(&SIX, 1.0) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(risk_short(&SIX, 3.0), 0.0);
        assert_eq!(risk_long(&SIX, 2.0), 0.0);
    }

    #[test]
    fn sizing_examples() {
        let r = min_reserve_short(&SIX, 1.0 / 3.0);
        assert!((r - 2.0).abs() < 1e-12, "{r}");
        assert!(risk_short(&SIX, r) <= 1.0 / 3.0);
        assert!(risk_short(&SIX, r - 1e-6) > 1.0 / 3.0);
        assert_eq!(min_reserve_short(&SIX, 0.0), 3.0);
        assert_eq!(min_reserve_short(&SIX, 10.0), 0.0);
        assert_eq!(min_reserve_long(&SIX, 0.0), 2.0);
        assert_eq!(min_reserve_short(&[-3.0, -1.0], 0.0), 0.0);
    }

    #[test]
    fn sizing_solves_inside_piece() {
        // at r in [1,2): (2/6)(3 - r) = 0.5 -> r = 1.5
        let r = min_reserve_short(&SIX, 0.5);
        assert!((r - 1.5).abs() < 1e-12);
    }

    #[test]
    fn empty_hours_borrow_nearest() {
        let at = |h: i64| t0() + Duration::hours(h);
        let d = DeviationDistribution::from_deviations(&[(at(11), 4.0)], GroupKey::HourOfDay).unwrap();
        assert_eq!(d.groups()[11].borrowed_from, None);
        assert_eq!(d.groups()[12].borrowed_from, Some(11));
        assert_eq!(d.groups()[12].samples, vec![4.0]);

        // hour 0 is 2 from 22 and 2 from 2: earlier hour index wins
        let d = DeviationDistribution::from_deviations(&[(at(2), 1.0), (at(22), 9.0)], GroupKey::HourOfDay).unwrap();
        assert_eq!(d.groups()[0].borrowed_from, Some(2));
        assert_eq!(d.groups()[12].borrowed_from, Some(2));
        assert_eq!(d.groups()[23].borrowed_from, Some(22));
        assert!(DeviationDistribution::from_deviations(&[], GroupKey::HourOfDay).is_err());
    }

    #[test]
    fn two_days_give_two_samples_per_hour() {
        let devs: Vec<(NaiveDateTime, f64)> = (0..48).map(|h| (t0() + Duration::hours(h), 0.0)).collect();
        let d = DeviationDistribution::from_deviations(&devs, GroupKey::HourOfDay).unwrap();
        for g in d.groups() {
            assert_eq!(g.len(), 2);
            assert_eq!((g.min(), g.max()), (0.0, 0.0));
        }
    }

    #[test]
    fn risk_profile_uses_hour_groups() {
        let at = |h: i64| t0() + Duration::hours(h);
        let devs: Vec<(NaiveDateTime, f64)> = SIX.iter().map(|&e| (at(5), e)).collect();
        let d = DeviationDistribution::from_deviations(&devs, GroupKey::HourOfDay).unwrap();
        let p = ReserveProfile::new(vec![1.0], vec![1.0], "x").unwrap();
        let r = risk(&d, &p, &[at(5)]).unwrap();
        assert!((r.rho_short[0] - 2.0 / 3.0).abs() < 1e-15);
        let sized = size_profile(&d, 0.0, &[at(5), at(6)]).unwrap();
        assert_eq!(sized.up, vec![3.0, 3.0]);
        assert_eq!(sized.down, vec![2.0, 2.0]);
    }

    proptest! {
        #[test]
        fn risk_non_increasing(mut s in proptest::collection::vec(-100.0..100.0f64, 1..40),
                               a in 0.0..150.0f64, b in 0.0..150.0f64) {
            s.sort_by(f64::total_cmp);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(risk_short(&s, hi) <= risk_short(&s, lo));
            prop_assert!(risk_long(&s, hi) <= risk_long(&s, lo));
            prop_assert!(risk_short(&s, lo) >= 0.0 && risk_long(&s, lo) >= 0.0);
        }

        #[test]
        fn sized_reserve_is_minimal(mut s in proptest::collection::vec(-100.0..100.0f64, 1..40),
                                    limit in 0.0..60.0f64) {
            s.sort_by(f64::total_cmp);
            let range = (s[s.len() - 1] - s[0]).max(1.0);
            let r = min_reserve_short(&s, limit);
            prop_assert!(r >= 0.0);
            prop_assert!(risk_short(&s, r) <= limit);
            if r > 0.0 {
                prop_assert!(risk_short(&s, r - 1e-6 * range) > limit);
            }
        }
    }
}
