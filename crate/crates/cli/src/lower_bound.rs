//! Lower-bound verification: census the explicit sawtooth construction over
//! a parameter grid and compare against the exact breakpoint/product oracle
//! and the bound formulas. Any measured count below the exact count is an
//! assertion failure.

use serde::{Deserialize, Serialize};

use tropgeom::census::census_vs_theory;

use crate::config::{OutputFormat, RunSettings};
use crate::io::Csv;
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowerBoundParams {
    /// `(N, d, d_ff, L)` tuples.
    pub cases: Vec<(u64, usize, usize, usize)>,
    pub n_samples: u64,
}

impl Default for LowerBoundParams {
    fn default() -> Self {
        Self {
            cases: vec![(2, 1, 2, 1), (3, 1, 2, 1), (2, 1, 2, 2), (2, 2, 4, 1)],
            n_samples: 100_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundRow {
    pub n_tokens: u64,
    pub dim: usize,
    pub d_ff: usize,
    pub depth: usize,
    pub teeth: u32,
    pub exact: u64,
    pub measured: u64,
    pub lower: String,
    pub upper: String,
    pub pass: bool,
}

pub fn run_lower_bound_verify(
    params: &LowerBoundParams,
    settings: &RunSettings,
) -> Result<Vec<LowerBoundRow>, CliError> {
    let mut rows = Vec::new();
    for &(n, d, d_ff, l) in &params.cases {
        let out = census_vs_theory::<f64>(n, d, d_ff, l, params.n_samples, settings.seed)
            .map_err(|e| CliError::Usage(format!("census ({n},{d},{d_ff},{l}): {e}")))?;
        rows.push(LowerBoundRow {
            n_tokens: n,
            dim: d,
            d_ff,
            depth: l,
            teeth: out.teeth,
            exact: out.exact,
            measured: out.measured,
            lower: out.lower,
            upper: out.upper,
            pass: out.measured >= out.exact,
        });
    }

    if let Some(dir) = &settings.out {
        match settings.format {
            OutputFormat::Csv => {
                let mut csv = Csv::new(
                    "lower_bound_verify",
                    &[
                        "N", "d", "d_ff", "L", "w", "exact", "measured", "lower", "upper", "pass",
                    ],
                );
                for r in &rows {
                    csv.row(&[
                        r.n_tokens.to_string(),
                        r.dim.to_string(),
                        r.d_ff.to_string(),
                        r.depth.to_string(),
                        r.teeth.to_string(),
                        r.exact.to_string(),
                        r.measured.to_string(),
                        r.lower.clone(),
                        r.upper.clone(),
                        r.pass.to_string(),
                    ]);
                }
                csv.write(&dir.join("lower_bound_verify.csv"))?;
            }
            OutputFormat::Json => {
                crate::io::write_json(&dir.join("lower_bound_verify.json"), &rows)?
            }
        }
    }

    if let Some(bad) = rows.iter().find(|r| !r.pass) {
        return Err(CliError::Assertion(format!(
            "census undercounts construction at (N={}, d={}, d_ff={}, L={}): measured {} < exact {}",
            bad.n_tokens, bad.dim, bad.d_ff, bad.depth, bad.measured, bad.exact
        )));
    }
    Ok(rows)
}
