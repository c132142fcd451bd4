use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Environment, Fingerprint, GridSpec, RadioMap};
use crate::error::{Error, Result};

/// Log-distance path loss with wall attenuation on the direct path.
///
/// `rss = tx_dbm - 10 n log10(max(d, d0)) - sum(crossed wall attenuation)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationModel {
    pub exponent: f64,
    pub ref_distance: f64,
}

impl Default for PropagationModel {
    fn default() -> Self {
        Self {
            exponent: 2.2,
            ref_distance: 0.5,
        }
    }
}

impl PropagationModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.exponent > 0.0 && self.exponent.is_finite()) {
            return Err(Error::config(format!(
                "path loss exponent must be > 0, got {}",
                self.exponent
            )));
        }
        if !(self.ref_distance > 0.0 && self.ref_distance.is_finite()) {
            return Err(Error::config(format!(
                "reference distance must be > 0, got {}",
                self.ref_distance
            )));
        }
        Ok(())
    }

    /// Noise-free received power at `distance` meters behind `wall_loss` dB.
    pub fn rss(&self, tx_dbm: f64, distance: f64, wall_loss: f64) -> f64 {
        tx_dbm - 10.0 * self.exponent * distance.max(self.ref_distance).log10() - wall_loss
    }
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::config(format!("noise sigma must be >= 0, got {sigma}")));
    }
    Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))
}

/// Simulates the RSS of every access point at every grid point, adding
/// i.i.d. shadowing noise `N(0, noise_sigma^2)` drawn in (grid, AP) order.
pub fn simulate_radio_map(
    env: &Environment,
    grid: &GridSpec,
    model: &PropagationModel,
    noise_sigma: f64,
    seed: u64,
) -> Result<RadioMap> {
    env.validate()?;
    model.validate()?;
    let noise = normal(noise_sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = grid
        .positions()
        .iter()
        .map(|&p| {
            let rss = env
                .aps
                .iter()
                .map(|ap| {
                    let clean = model.rss(
                        ap.tx_dbm,
                        ap.position.distance(&p),
                        env.plan.wall_loss(ap.position, p),
                    );
                    clean + noise.sample(&mut rng)
                })
                .collect();
            Fingerprint { position: p, rss }
        })
        .collect();
    RadioMap::new(entries)
}

/// One noisy reading at grid point `position_index`.
pub fn sample_observation(
    map: &RadioMap,
    position_index: usize,
    obs_sigma: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    sample_observation_with(map, position_index, obs_sigma, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn sample_observation_with<R: Rng + ?Sized>(
    map: &RadioMap,
    position_index: usize,
    obs_sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let noise = normal(obs_sigma)?;
    let entry = map.entries().get(position_index).ok_or_else(|| {
        Error::structural(format!(
            "observation index {position_index} out of range for a {}-point map",
            map.len()
        ))
    })?;
    Ok(entry.rss.iter().map(|v| v + noise.sample(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{build_grid, AccessPoint, FloorPlan, Position, Wall};

    fn single_ap_env(walls: Vec<Wall>, ap: Position) -> Environment {
        let plan = FloorPlan::new(10.0, 10.0, walls).unwrap();
        let ap = AccessPoint { id: 1, position: ap, tx_dbm: 0.0 };
        Environment::new(plan, vec![ap], None).unwrap()
    }

    fn clean_model() -> PropagationModel {
        PropagationModel { exponent: 2.0, ref_distance: 0.5 }
    }

    #[test]
    fn rss_at_ap_and_decay_along_ray() {
        let env = single_ap_env(vec![], Position::new(0.0, 0.0));
        let grid = build_grid(&env.plan, 1.0, None).unwrap();
        let map = simulate_radio_map(&env, &grid, &clean_model(), 0.0, 1).unwrap();
        let at_ap = map.rss(0)[0];
        assert!((at_ap - (-20.0 * 0.5f64.log10())).abs() < 1e-12);
        // along the x axis, row 0
        let row: Vec<f64> = (0..=10).map(|c| map.rss(c)[0]).collect();
        assert!(row.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn radial_symmetry() {
        let env = single_ap_env(vec![], Position::new(5.0, 5.0));
        let grid = build_grid(&env.plan, 1.0, None).unwrap();
        let map = simulate_radio_map(&env, &grid, &clean_model(), 0.0, 1).unwrap();
        let at = |x: usize, y: usize| map.rss(grid.index_at(y, x).unwrap())[0];
        assert_eq!(at(2, 5), at(8, 5));
        assert_eq!(at(5, 1), at(9, 5));
        assert_eq!(at(3, 4), at(4, 7));
    }

    #[test]
    fn wall_costs_its_attenuation() {
        let wall = Wall { x1: 7.0, y1: 3.0, x2: 7.0, y2: 7.0, atten_db: 10.0, dissociating: false };
        let env = single_ap_env(vec![wall], Position::new(5.0, 5.0));
        let grid = build_grid(&env.plan, 1.0, None).unwrap();
        let map = simulate_radio_map(&env, &grid, &clean_model(), 0.0, 1).unwrap();
        let at = |x: usize, y: usize| map.rss(grid.index_at(y, x).unwrap())[0];
        assert!((at(2, 5) - at(8, 5) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_seed() {
        let env = single_ap_env(vec![], Position::new(5.0, 5.0));
        let grid = build_grid(&env.plan, 1.0, None).unwrap();
        let a = simulate_radio_map(&env, &grid, &clean_model(), 3.0, 9).unwrap();
        let b = simulate_radio_map(&env, &grid, &clean_model(), 3.0, 9).unwrap();
        let c = simulate_radio_map(&env, &grid, &clean_model(), 3.0, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_model_rejected() {
        let env = single_ap_env(vec![], Position::new(5.0, 5.0));
        let grid = build_grid(&env.plan, 1.0, None).unwrap();
        let bad = PropagationModel { exponent: 0.0, ref_distance: 0.5 };
        assert!(simulate_radio_map(&env, &grid, &bad, 0.0, 1).is_err());
        let bad = PropagationModel { exponent: 2.0, ref_distance: 0.0 };
        assert!(simulate_radio_map(&env, &grid, &bad, 0.0, 1).is_err());
    }

    #[test]
    fn observation_sampling() {
        let env = single_ap_env(vec![], Position::new(5.0, 5.0));
        let grid = build_grid(&env.plan, 1.0, None).unwrap();
        let map = simulate_radio_map(&env, &grid, &clean_model(), 0.0, 1).unwrap();

        assert_eq!(sample_observation(&map, 7, 0.0, 3).unwrap(), map.rss(7));
        assert_eq!(
            sample_observation(&map, 7, 2.0, 3).unwrap(),
            sample_observation(&map, 7, 2.0, 3).unwrap()
        );
        assert!(matches!(
            sample_observation(&map, map.len(), 1.0, 3),
            Err(Error::Structural(_))
        ));
        assert!(sample_observation(&map, 0, -1.0, 3).is_err());
    }

    #[test]
    fn observation_mean_converges() {
        let env = single_ap_env(vec![], Position::new(5.0, 5.0));
        let grid = build_grid(&env.plan, 1.0, None).unwrap();
        let map = simulate_radio_map(&env, &grid, &clean_model(), 0.0, 1).unwrap();
        let sigma = 4.0;
        let draws = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut sum = 0.0;
        for _ in 0..draws {
            sum += sample_observation_with(&map, 12, sigma, &mut rng).unwrap()[0];
        }
        let mean = sum / draws as f64;
        assert!((mean - map.rss(12)[0]).abs() <= 3.0 * sigma / 100.0);
    }
}
