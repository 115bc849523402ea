use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EventKind;
use crate::detectors::{classify_good, count_configs, is_good as good_counts};
use crate::dynamics::{above_threshold, evolve, evolve_fast};
use crate::error::{Error, Result};
use crate::rng::replica_rng;
use crate::torus::{sample_initial, Configuration, TorusShape};

/// Largest torus that [`exact_probability`] will enumerate.
pub const EXACT_VERTEX_LIMIT: usize = 22;

/// `P_p(event)` by summing over all `2^(n^d)` initial configurations, with
/// the dynamics run by the reference engine.
pub fn exact_probability(shape: TorusShape, p: f64, event: EventKind) -> Result<f64> {
    let total = shape.vertex_count();
    if total > EXACT_VERTEX_LIMIT {
        return Err(Error::resource(format!(
            "exact enumeration needs n^d <= {EXACT_VERTEX_LIMIT}, got {total}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    if !event.is_binary() {
        return Err(Error::domain(format!("{event} is not a yes/no event")));
    }
    // hits[k] = number of k-subsets on which the event holds
    let mut hits = vec![0u64; total + 1];
    for mask in 0u64..(1u64 << total) {
        let config = Configuration::from_words(shape, vec![mask]);
        if holds(&config, event)? {
            hits[mask.count_ones() as usize] += 1;
        }
    }
    Ok(hits
        .iter()
        .enumerate()
        .map(|(k, &h)| h as f64 * p.powi(k as i32) * (1.0 - p).powi((total - k) as i32))
        .sum())
}

fn holds(config: &Configuration, event: EventKind) -> Result<bool> {
    Ok(match event {
        EventKind::AboveThreshold => above_threshold(config),
        EventKind::Good => classify_good(config)?.is_good(),
        EventKind::GoodSpanMismatch => {
            let good = good_counts(&count_configs(config)?);
            good != evolve(config)?.spanned
        }
        EventKind::Spanned => evolve(config)?.spanned,
        EventKind::OpenLine => evolve(config)?.open_line_found,
        EventKind::OpenPlane => evolve(config)?.open_plane_found,
        EventKind::PartialGrowth => evolve(config)?.stalled(),
        EventKind::GoodClassHistogram | EventKind::ConfigCountMeans => unreachable!(),
    })
}

/// Outcome of comparing the two engines on random instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineBattery {
    pub instances: u64,
    pub mismatches: u64,
    /// `(d, n, theta, replica)` of the first disagreement.
    pub first_mismatch: Option<(usize, usize, usize, u64)>,
}

/// Run [`evolve`] and [`evolve_fast`] on `instances` random tori with
/// `d` in {2, 3}, `n` in 4..=12, `theta` in 1..=6 and a random density, and
/// count disagreements in the final configuration or round count.
pub fn engine_battery(instances: u64, seed: u64) -> Result<EngineBattery> {
    let mut mismatches = 0;
    let mut first_mismatch = None;
    for i in 0..instances {
        let mut rng = replica_rng(seed, i);
        let d = rng.random_range(2..=3usize);
        let n = rng.random_range(4..=12usize);
        let theta = rng.random_range(1..=6usize);
        let p = rng.random_range(0.0..0.35f64).powi(2).max(0.005);
        let shape = TorusShape::new(d, n, theta)?;
        let initial = sample_initial(shape, p, &mut rng)?;
        let slow = evolve(&initial)?;
        let fast = evolve_fast(&initial)?;
        if slow != fast {
            mismatches += 1;
            first_mismatch.get_or_insert((d, n, theta, i));
        }
    }
    Ok(EngineBattery { instances, mismatches, first_mismatch })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_one_spans_iff_nonempty() {
        let shape = TorusShape::new(2, 3, 1).unwrap();
        for p in [0.0, 0.05, 0.2, 0.7, 1.0] {
            let exact = exact_probability(shape, p, EventKind::Spanned).unwrap();
            let closed = 1.0 - (1.0f64 - p).powi(9);
            assert!((exact - closed).abs() < 1e-14, "p={p}");
        }
    }

    #[test]
    fn engines_agree_on_a_small_battery() {
        let b = engine_battery(60, 5).unwrap();
        assert_eq!(b.mismatches, 0, "{b:?}");
    }

    #[test]
    fn endpoints() {
        let shape = TorusShape::new(2, 3, 2).unwrap();
        assert_eq!(exact_probability(shape, 0.0, EventKind::Spanned).unwrap(), 0.0);
        assert_eq!(exact_probability(shape, 1.0, EventKind::Spanned).unwrap(), 1.0);
    }

    #[test]
    fn rejects_large_or_invalid() {
        let big = TorusShape::new(2, 5, 2).unwrap();
        assert!(matches!(exact_probability(big, 0.1, EventKind::Spanned), Err(Error::Resource(_))));
        let shape = TorusShape::new(2, 3, 2).unwrap();
        assert!(exact_probability(shape, 1.1, EventKind::Spanned).is_err());
        assert!(exact_probability(shape, 0.1, EventKind::ConfigCountMeans).is_err());
    }

    #[test]
    fn spanning_is_increasing_in_p() {
        let shape = TorusShape::new(2, 4, 2).unwrap();
        let mut prev = 0.0;
        for i in 1..10 {
            let v = exact_probability(shape, 0.1 * i as f64, EventKind::Spanned).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }
}
