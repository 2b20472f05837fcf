//! DE/rand/1/bin with bound clipping.
//!
//! Trial vectors are drawn sequentially from one seeded generator and then
//! scored in parallel, so results depend only on the seed.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeConfig {
    /// Population size per free parameter.
    pub population_factor: usize,
    /// Explicit population size, overriding the factor.
    pub population: Option<usize>,
    /// Differential weight.
    pub f: f64,
    /// Crossover probability.
    pub cr: f64,
    pub generations: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population_factor: 15,
            population: None,
            f: 0.7,
            cr: 0.9,
            generations: 200,
        }
    }
}

impl DeConfig {
    pub fn population_size(&self, dims: usize) -> usize {
        self.population.unwrap_or(self.population_factor * dims)
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        let np = self.population_size(dims);
        if np < 4 {
            return Err(Error::validation(format!(
                "population of {np} is too small, need at least 4"
            )));
        }
        if !(self.f > 0.0 && self.f <= 2.0) {
            return Err(Error::validation(format!("F = {} outside (0, 2]", self.f)));
        }
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::validation(format!("CR = {} outside [0, 1]", self.cr)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    /// Final population with costs, in member order.
    pub population: Vec<(Vec<f64>, f64)>,
    /// Best cost so far after initialization and after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

fn clip(x: f64, (lo, hi): (f64, f64)) -> f64 {
    x.clamp(lo, hi)
}

pub fn minimize<F>(cost: F, bounds: &[(f64, f64)], config: &DeConfig, seed: u64) -> Result<DeOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dims = bounds.len();
    if dims == 0 {
        return Err(Error::validation("no free parameters"));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::validation(format!("bad bounds [{lo}, {hi}]")));
        }
    }
    config.validate(dims)?;
    let np = config.population_size(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut members: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) })
                .collect()
        })
        .collect();
    let mut costs: Vec<f64> = members.par_iter().map(|x| cost(x)).collect();
    let mut evaluations = np;
    let best = |c: &[f64]| c.iter().copied().fold(f64::INFINITY, f64::min);
    let mut history = vec![best(&costs)];

    for _ in 0..config.generations {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let picks: Vec<usize> = sample(&mut rng, np - 1, 3)
                    .into_iter()
                    .map(|r| if r >= i { r + 1 } else { r })
                    .collect();
                let (a, b, c) = (&members[picks[0]], &members[picks[1]], &members[picks[2]]);
                let forced = rng.random_range(0..dims);
                (0..dims)
                    .map(|j| {
                        if j == forced || rng.random::<f64>() < config.cr {
                            clip(a[j] + config.f * (b[j] - c[j]), bounds[j])
                        } else {
                            members[i][j]
                        }
                    })
                    .collect()
            })
            .collect();
        let trial_costs: Vec<f64> = trials.par_iter().map(|x| cost(x)).collect();
        evaluations += np;
        for (i, (t, tc)) in trials.into_iter().zip(trial_costs).enumerate() {
            if tc <= costs[i] {
                members[i] = t;
                costs[i] = tc;
            }
        }
        history.push(best(&costs).min(*history.last().unwrap()));
    }

    Ok(DeOutcome {
        population: members.into_iter().zip(costs).collect(),
        history,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum()
    }

    #[test]
    fn finds_sphere_minimum() {
        let cfg = DeConfig {
            generations: 150,
            ..Default::default()
        };
        let out = minimize(sphere, &[(-2.0, 2.0); 3], &cfg, 1).unwrap();
        let (x, c) = out
            .population
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert!(*c < 1e-10, "{c}");
        assert!(x.iter().all(|v| (v - 0.3).abs() < 1e-5));
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.evaluations, 45 * 151);
    }

    #[test]
    fn respects_bounds() {
        let cfg = DeConfig {
            generations: 30,
            f: 1.5,
            ..Default::default()
        };
        let bounds = [(0.5, 1.0), (-1.0, -0.9)];
        let out = minimize(|x| -x[0] - x[1], &bounds, &cfg, 4).unwrap();
        for (x, _) in &out.population {
            for (v, &(lo, hi)) in x.iter().zip(&bounds) {
                assert!(*v >= lo && *v <= hi);
            }
        }
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = DeConfig {
            generations: 20,
            ..Default::default()
        };
        let a = minimize(sphere, &[(-1.0, 1.0); 2], &cfg, 9).unwrap();
        let b = minimize(sphere, &[(-1.0, 1.0); 2], &cfg, 9).unwrap();
        let c = minimize(sphere, &[(-1.0, 1.0); 2], &cfg, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.population, c.population);
    }

    #[test]
    fn rejects_tiny_population() {
        let cfg = DeConfig {
            population: Some(3),
            ..Default::default()
        };
        assert!(minimize(sphere, &[(0.0, 1.0)], &cfg, 0).is_err());
    }
}
