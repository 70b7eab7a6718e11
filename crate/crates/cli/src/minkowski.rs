//! Minkowski vertex scaling: exact `f_0` of multi-head Newton polytope sums
//! for Gaussian key clouds, against the combinatorial upper bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use tropgeom::bounds::minkowski_vertex_upper_bound;
use tropgeom::polytope::{convex_hull, minkowski_sum, Polytope};
use tropgeom::rng::CounterRng;

use crate::config::{OutputFormat, RunSettings};
use crate::io::{self, Csv};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinkowskiParams {
    pub dim: usize,
    pub h_list: Vec<u64>,
    pub n_list: Vec<u64>,
    pub trials: u64,
}

impl Default for MinkowskiParams {
    fn default() -> Self {
        Self {
            dim: 4,
            h_list: vec![1, 2, 3],
            n_list: vec![2, 3, 4, 5, 6, 7],
            trials: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MinkowskiRow {
    pub heads: u64,
    pub n_tokens: u64,
    pub trials: u64,
    pub mean_f0: f64,
    pub max_f0: u64,
    pub bound: String,
}

/// Gaussian head polytopes for one `(H, N, trial)` cell.
pub fn sample_parts(
    rng: &CounterRng,
    heads: u64,
    n_tokens: u64,
    dim: usize,
    trial: u64,
) -> Vec<Polytope<f64>> {
    let r = rng
        .derive(heads.wrapping_mul(1_000_003) ^ n_tokens.wrapping_mul(10_007))
        .derive(trial);
    (0..heads)
        .map(|h| {
            let pts: Vec<Vec<f64>> = (0..n_tokens)
                .map(|j| {
                    (0..dim)
                        .map(|a| r.gaussian(h, j * dim as u64 + a as u64))
                        .collect()
                })
                .collect();
            convex_hull(&pts, dim).expect("head polytope")
        })
        .collect()
}

pub fn run_minkowski_scaling(
    params: &MinkowskiParams,
    settings: &RunSettings,
) -> Result<Vec<MinkowskiRow>, CliError> {
    if params.dim == 0 || params.dim > 8 {
        return Err(CliError::Usage("dim must be in 1..=8".into()));
    }
    let rng = CounterRng::new(settings.seed);
    let mut rows = Vec::new();
    for &h in &params.h_list {
        for &n in &params.n_list {
            let counts: Vec<u64> = (0..params.trials)
                .into_par_iter()
                .map(|trial| {
                    let parts = sample_parts(&rng, h, n, params.dim, trial);
                    minkowski_sum(&parts).expect("sum within guard").vertex_count() as u64
                })
                .collect();
            let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
            let max = *counts.iter().max().unwrap();
            rows.push(MinkowskiRow {
                heads: h,
                n_tokens: n,
                trials: params.trials,
                mean_f0: mean,
                max_f0: max,
                bound: minkowski_vertex_upper_bound(n, h, params.dim as u64).to_string(),
            });
        }
    }

    if let Some(dir) = &settings.out {
        match settings.format {
            OutputFormat::Csv => {
                let mut csv = Csv::new(
                    "minkowski_scaling",
                    &["H", "N", "trials", "mean_f0", "max_f0", "bound"],
                );
                for r in &rows {
                    csv.row(&[
                        r.heads.to_string(),
                        r.n_tokens.to_string(),
                        r.trials.to_string(),
                        io::fmt_f64(r.mean_f0),
                        r.max_f0.to_string(),
                        r.bound.clone(),
                    ]);
                }
                csv.write(&dir.join("minkowski_scaling.csv"))?;
            }
            OutputFormat::Json => io::write_json(&dir.join("minkowski_scaling.json"), &rows)?,
        }
    }
    Ok(rows)
}
