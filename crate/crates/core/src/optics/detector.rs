use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Single-photon detector (avalanche photodiode) response model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSpec {
    pub efficiency: f64,
    pub dark_count_probability: f64,
    pub number_resolving: bool,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_probability: 0.0,
            number_resolving: true,
        }
    }
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidValue {
                param: "efficiency".into(),
                message: format!("{} not in [0, 1]", self.efficiency),
            });
        }
        if !(0.0..=1.0).contains(&self.dark_count_probability) {
            return Err(Error::InvalidValue {
                param: "dark_count_probability".into(),
                message: format!("{} not in [0, 1]", self.dark_count_probability),
            });
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.efficiency == 1.0 && self.dark_count_probability == 0.0
    }
}

/// Samples the click count for `photons` incident photons.
pub fn detect<R: Rng + ?Sized>(spec: &DetectorSpec, photons: u32, rng: &mut R) -> u32 {
    let mut clicks = if spec.efficiency >= 1.0 {
        photons
    } else {
        (0..photons)
            .filter(|_| rng.random::<f64>() < spec.efficiency)
            .count() as u32
    };
    if spec.dark_count_probability > 0.0 && rng.random::<f64>() < spec.dark_count_probability {
        clicks += 1;
    }
    if !spec.number_resolving {
        clicks = clicks.min(1);
    }
    clicks
}

/// Exact click-count distribution for `photons` incident photons; index is
/// the number of clicks.
pub fn click_distribution(spec: &DetectorSpec, photons: u32) -> Vec<f64> {
    let n = photons as usize;
    let eta = spec.efficiency;
    // binomial(n, η)
    let mut dist = vec![0.0; n + 2];
    let mut binom = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            binom = binom * (n - k + 1) as f64 / k as f64;
        }
        dist[k] = binom * eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32);
    }
    let d = spec.dark_count_probability;
    if d > 0.0 {
        let mut shifted = vec![0.0; n + 2];
        for k in 0..=n {
            shifted[k] += dist[k] * (1.0 - d);
            shifted[k + 1] += dist[k] * d;
        }
        dist = shifted;
    }
    if !spec.number_resolving {
        let any: f64 = dist[1..].iter().sum();
        dist = vec![dist[0], any];
    }
    while dist.len() > 1 && dist.last() == Some(&0.0) {
        dist.pop();
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ideal_detector_counts_photons() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = DetectorSpec::default();
        assert_eq!(detect(&spec, 1, &mut rng), 1);
        assert_eq!(detect(&spec, 0, &mut rng), 0);
        assert_eq!(detect(&spec, 3, &mut rng), 3);
        let bucket = DetectorSpec {
            number_resolving: false,
            ..spec
        };
        assert_eq!(detect(&bucket, 3, &mut rng), 1);
    }

    #[test]
    fn half_efficiency_is_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let spec = DetectorSpec {
            efficiency: 0.5,
            ..Default::default()
        };
        let n = 100_000u32;
        let clicks: u32 = (0..n).map(|_| detect(&spec, 1, &mut rng)).sum();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((clicks as f64 - 0.5 * n as f64).abs() < 5.0 * sigma);
    }

    #[test]
    fn exact_distribution_sums_to_one() {
        let spec = DetectorSpec {
            efficiency: 0.7,
            dark_count_probability: 0.1,
            number_resolving: true,
        };
        for n in 0..5 {
            let d = click_distribution(&spec, n);
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(
            click_distribution(&DetectorSpec::default(), 2),
            vec![0.0, 0.0, 1.0]
        );
    }

    #[test]
    fn validation_ranges() {
        assert!(DetectorSpec {
            efficiency: 1.1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DetectorSpec {
            dark_count_probability: -0.1,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
