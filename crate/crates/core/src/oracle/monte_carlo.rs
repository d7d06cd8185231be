//! Windowed homodyne post-selection sampled by inverse CDF.
//!
//! Outcomes are drawn from the homodyne marginal of the reflected mode; an
//! outcome inside `[Q_c − δ, Q_c + δ]` is accepted and contributes the
//! normalized conditional output at that outcome. Partitions draw from
//! independent ChaCha streams `(seed, partition)` and are reduced in order,
//! so a report is reproducible for a fixed `(seed, partitions)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::homodyne::{
    beam_splitter_state, homodyne_density, normalize_block, quadrature_bra, simpson,
};
use crate::error::{Error, Result};
use crate::qubit::{DensityMatrix2, SingleRailQubit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    /// Half-width `δ` of the acceptance window.
    pub window: f64,
    pub samples: usize,
    pub seed: u64,
    pub partitions: usize,
    pub truncation: usize,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            window: 0.01,
            samples: 1_000_000,
            seed: 0,
            partitions: 8,
            truncation: 4,
            grid_min: -8.0,
            grid_max: 8.0,
            grid_points: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub samples: usize,
    pub acceptances: usize,
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub stderr: f64,
    pub seed: u64,
    /// Quadrature of the homodyne marginal over the window.
    pub expected_rate: f64,
    /// Binomial standard error at `expected_rate`.
    pub expected_stderr: f64,
    /// Mean conditioned state; `None` when nothing was accepted.
    pub conditioned: Option<DensityMatrix2>,
    /// Largest standard error of the mean over the conditioned entries.
    pub conditioned_stderr: f64,
}

/// Piecewise-linear inverse CDF of a tabulated density.
struct InverseCdf {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn new<F: Fn(f64) -> Result<f64>>(
        density: F,
        min: f64,
        max: f64,
        points: usize,
    ) -> Result<Self> {
        if points < 2 || !(max > min) {
            return Err(Error::InvalidArgument(
                "sampling grid needs two or more points on a nonempty range".into(),
            ));
        }
        let h = (max - min) / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|k| min + h * k as f64).collect();
        let values = grid
            .iter()
            .map(|&q| density(q))
            .collect::<Result<Vec<f64>>>()?;
        let mut cdf = Vec::with_capacity(points);
        cdf.push(0.0);
        for k in 1..points {
            let prev = cdf[k - 1];
            cdf.push(prev + 0.5 * h * (values[k - 1] + values[k]));
        }
        let total = cdf[points - 1];
        if !(total > 0.0) {
            return Err(Error::ZeroProbability(
                "homodyne marginal vanishes on the grid".into(),
            ));
        }
        for c in &mut cdf {
            *c /= total;
        }
        Ok(InverseCdf { grid, cdf })
    }

    fn sample(&self, u: f64) -> f64 {
        let k = self
            .cdf
            .partition_point(|&c| c < u)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let (q0, q1) = (self.grid[k - 1], self.grid[k]);
        if c1 > c0 {
            q0 + (q1 - q0) * (u - c0) / (c1 - c0)
        } else {
            q0
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    accepted: usize,
    // rho00, Re rho01, Im rho01
    sum: [f64; 3],
    sum_sq: [f64; 3],
}

pub fn monte_carlo_conversion(
    q: &SingleRailQubit,
    t: f64,
    q_center: f64,
    phi: f64,
    config: &MonteCarloConfig,
) -> Result<MonteCarloReport> {
    if !(config.window > 0.0) {
        return Err(Error::InvalidArgument(
            "window half-width must be positive".into(),
        ));
    }
    if config.samples == 0 {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    let partitions = config.partitions.max(1);
    let state = beam_splitter_state(q, t, config.truncation)?;
    let sampler = InverseCdf::new(
        |x| homodyne_density(&state, 0, x, phi),
        config.grid_min,
        config.grid_max,
        config.grid_points,
    )?;
    let (lo, hi) = (q_center - config.window, q_center + config.window);

    let tallies: Vec<Result<Tally>> = (0..partitions)
        .into_par_iter()
        .map(|part| {
            let count =
                config.samples / partitions + usize::from(part < config.samples % partitions);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(part as u64);
            let mut tally = Tally::default();
            for _ in 0..count {
                let x = sampler.sample(rng.random::<f64>());
                if x < lo || x > hi {
                    continue;
                }
                let projected = state.project(0, &quadrature_bra(config.truncation, x, phi))?;
                let out = normalize_block(&projected.reduced_density(0)?)?.state;
                let entries = [out.rho00(), out.rho01().re, out.rho01().im];
                tally.accepted += 1;
                for (i, x) in entries.into_iter().enumerate() {
                    tally.sum[i] += x;
                    tally.sum_sq[i] += x * x;
                }
            }
            Ok(tally)
        })
        .collect();
    let mut total = Tally::default();
    for t in tallies {
        let t = t?;
        total.accepted += t.accepted;
        for i in 0..3 {
            total.sum[i] += t.sum[i];
            total.sum_sq[i] += t.sum_sq[i];
        }
    }

    let m = config.samples as f64;
    let rate = total.accepted as f64 / m;
    // marginal tails beyond the sampling grid are below 1e-25
    let (qa, qb) = (lo.max(config.grid_min), hi.min(config.grid_max));
    let expected_rate = if qb > qa {
        let intervals = 200 + ((qb - qa) * 1000.0).ceil() as usize;
        simpson(
            |x| homodyne_density(&state, 0, x, phi).unwrap_or(0.0),
            qa,
            qb,
            intervals,
        )
    } else {
        0.0
    };
    let (conditioned, conditioned_stderr) = if total.accepted == 0 {
        (None, 0.0)
    } else {
        let n = total.accepted as f64;
        let mean: Vec<f64> = total.sum.iter().map(|s| s / n).collect();
        let stderr = (0..3)
            .map(|i| {
                let var = (total.sum_sq[i] / n - mean[i] * mean[i]).max(0.0);
                (var / n).sqrt()
            })
            .fold(0.0, f64::max);
        let coh = num_complex::Complex64::new(mean[1], mean[2]);
        (
            Some(DensityMatrix2::from_parts(mean[0], coh, 1.0 - mean[0])),
            stderr,
        )
    };
    Ok(MonteCarloReport {
        samples: config.samples,
        acceptances: total.accepted,
        rate,
        stderr: (rate * (1.0 - rate) / m).sqrt(),
        seed: config.seed,
        expected_rate,
        expected_stderr: (expected_rate * (1.0 - expected_rate) / m).sqrt(),
        conditioned,
        conditioned_stderr,
    })
}
