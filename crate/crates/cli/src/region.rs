//! Region-count scaling: Monte Carlo signature censuses of random
//! Gaussian-weight block networks across sequence length and depth, with a
//! log-log slope fit per depth.

use serde::{Deserialize, Serialize};

use tropgeom::bounds::{region_lower_bound, region_upper_bound};
use tropgeom::census::{monte_carlo_census, BlockNetwork};
use tropgeom::rng::mix64;

use crate::config::{OutputFormat, RunSettings};
use crate::io::{self, Csv};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionParams {
    pub dim: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub l_list: Vec<usize>,
    pub n_list: Vec<u64>,
    pub n_samples: u64,
    pub n_seeds: u64,
    #[serde(rename = "box")]
    pub domain: [f64; 2],
}

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            dim: 2,
            heads: 2,
            d_ff: 4,
            l_list: vec![1, 2],
            n_list: vec![2, 3, 4, 5],
            n_samples: 2_000_000,
            n_seeds: 5,
            domain: [-4.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionRow {
    pub n_tokens: u64,
    pub dim: usize,
    pub heads: usize,
    pub d_ff: usize,
    pub depth: usize,
    pub n_samples: u64,
    pub seed: u64,
    pub n_distinct: u64,
    pub n_boundary: u64,
    pub lower: String,
    pub upper: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionSummary {
    pub rows: Vec<RegionRow>,
    /// Least-squares slope of `ln(mean count)` against `ln N`, per depth.
    pub slopes: Vec<(usize, f64)>,
    /// Seed-averaged distinct counts, keyed `(depth, n_tokens)`.
    pub mean_counts: Vec<(usize, u64, f64)>,
}

/// Weight seed for one `(N, seed index)` cell. Depth is deliberately not
/// mixed in: the depth-2 network extends the depth-1 network layer by
/// layer, so deeper censuses refine shallower ones draw for draw.
fn weight_seed(master: u64, n_tokens: u64, seed_idx: u64) -> u64 {
    mix64(master ^ mix64(n_tokens) ^ mix64(seed_idx.wrapping_mul(0x9e37)))
}

pub fn run_region_scaling(
    params: &RegionParams,
    settings: &RunSettings,
) -> Result<RegionSummary, CliError> {
    if params.dim == 0 || params.heads == 0 {
        return Err(CliError::Usage("dim and heads must be positive".into()));
    }
    let value_dim = (params.dim / params.heads).max(1);
    if value_dim * params.heads != params.dim {
        return Err(CliError::Usage(
            "heads must divide dim (value dimension = dim / heads)".into(),
        ));
    }
    let domain: Vec<(f64, f64)> = vec![(params.domain[0], params.domain[1]); params.dim];

    let mut rows = Vec::new();
    for &depth in &params.l_list {
        for &n in &params.n_list {
            for seed_idx in 0..params.n_seeds {
                let wseed = weight_seed(settings.seed, n, seed_idx);
                let net = BlockNetwork::<f64>::random_gaussian(
                    params.dim,
                    n as usize,
                    params.heads,
                    value_dim,
                    params.d_ff,
                    depth,
                    wseed,
                )
                .map_err(|e| CliError::Usage(format!("network: {e}")))?;
                let report = monte_carlo_census(&net, &domain, params.n_samples, wseed)
                    .map_err(|e| CliError::Usage(format!("census: {e}")))?;
                let lower = region_lower_bound(n, params.dim as u64, params.d_ff as u64, depth as u64)
                    .map(|b| b.to_string())
                    .unwrap_or_else(|_| "-".into());
                let upper = region_upper_bound(
                    n,
                    params.heads as u64,
                    params.dim as u64,
                    params.d_ff as u64,
                    depth as u64,
                )
                .to_string();
                rows.push(RegionRow {
                    n_tokens: n,
                    dim: params.dim,
                    heads: params.heads,
                    d_ff: params.d_ff,
                    depth,
                    n_samples: params.n_samples,
                    seed: wseed,
                    n_distinct: report.n_distinct,
                    n_boundary: report.n_boundary_discarded,
                    lower,
                    upper,
                });
            }
        }
    }

    // seed-averaged counts and the log-log slope per depth
    let mut mean_counts = Vec::new();
    let mut slopes = Vec::new();
    for &depth in &params.l_list {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &n in &params.n_list {
            let counts: Vec<f64> = rows
                .iter()
                .filter(|r| r.depth == depth && r.n_tokens == n)
                .map(|r| r.n_distinct as f64)
                .collect();
            let mean = counts.iter().sum::<f64>() / counts.len() as f64;
            mean_counts.push((depth, n, mean));
            xs.push((n as f64).ln());
            ys.push(mean.max(1.0).ln());
        }
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            num += (x - mx) * (y - my);
            den += (x - mx) * (x - mx);
        }
        slopes.push((depth, if den > 0.0 { num / den } else { 0.0 }));
    }

    let summary = RegionSummary {
        rows,
        slopes,
        mean_counts,
    };
    if let Some(dir) = &settings.out {
        match settings.format {
            OutputFormat::Csv => {
                let mut csv = Csv::new(
                    "region_scaling",
                    &[
                        "N", "d", "H", "d_ff", "L", "n", "seed", "n_distinct", "n_boundary",
                        "lower", "upper",
                    ],
                );
                for r in &summary.rows {
                    csv.row(&[
                        r.n_tokens.to_string(),
                        r.dim.to_string(),
                        r.heads.to_string(),
                        r.d_ff.to_string(),
                        r.depth.to_string(),
                        r.n_samples.to_string(),
                        r.seed.to_string(),
                        r.n_distinct.to_string(),
                        r.n_boundary.to_string(),
                        r.lower.clone(),
                        r.upper.clone(),
                    ]);
                }
                csv.write(&dir.join("region_scaling.csv"))?;
                let mut csv = Csv::new("region_slopes", &["L", "slope"]);
                for (l, s) in &summary.slopes {
                    csv.row(&[l.to_string(), io::fmt_f64(*s)]);
                }
                csv.write(&dir.join("region_slopes.csv"))?;
            }
            OutputFormat::Json => {
                io::write_json(&dir.join("region_scaling.json"), &summary)?;
            }
        }
    }
    Ok(summary)
}
