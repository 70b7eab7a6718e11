//! Stability certification command: certify score vectors (inline or from a
//! JSON file) and export the report as JSON and a CSV row.

use serde::{Deserialize, Serialize};

use tropgeom::stability::{certify, hessian_envelope, StabilityReport};

use crate::config::{OutputFormat, RunSettings};
use crate::io::{self, Csv};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilityParams {
    pub scores: Option<Vec<f64>>,
    pub scores_file: Option<std::path::PathBuf>,
    pub tau: f64,
    pub probe: Option<Vec<f64>>,
}

impl Default for StabilityParams {
    fn default() -> Self {
        Self {
            scores: None,
            scores_file: None,
            tau: 0.125,
            probe: None,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScoresFile {
    Bare(Vec<f64>),
    Tagged { scores: Vec<f64>, tau: Option<f64> },
}

pub fn run_stability(
    params: &StabilityParams,
    settings: &RunSettings,
) -> Result<StabilityReport<f64>, CliError> {
    let mut tau = params.tau;
    let scores: Vec<f64> = if let Some(s) = &params.scores {
        s.clone()
    } else if let Some(path) = &params.scores_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        match serde_json::from_str::<ScoresFile>(&text)
            .map_err(|e| CliError::Usage(format!("scores file: {e}")))?
        {
            ScoresFile::Bare(s) => s,
            ScoresFile::Tagged { scores, tau: t } => {
                if let Some(t) = t {
                    tau = t;
                }
                scores
            }
        }
    } else {
        return Err(CliError::Usage(
            "stability needs scores (params.scores or params.scores_file)".into(),
        ));
    };

    let report = certify(&scores, tau, params.probe.as_deref(), settings.seed)
        .map_err(|e| CliError::Usage(format!("certify: {e}")))?;

    if let Some(dir) = &settings.out {
        io::write_json(&dir.join("stability_report.json"), &report)?;
        if settings.format == OutputFormat::Csv {
            let mut csv = Csv::new(
                "stability",
                &[
                    "N",
                    "tau",
                    "delta",
                    "value_gap",
                    "value_bound",
                    "grad_l1_gap",
                    "grad_bound",
                    "hess_norm",
                    "hess_bound",
                    "affine_residual",
                    "affine_bound",
                    "in_stable_region",
                    "bound_underflow",
                ],
            );
            let opt = |x: Option<f64>| x.map(io::fmt_f64).unwrap_or_default();
            csv.row(&[
                report.n.to_string(),
                io::fmt_f64(report.tau),
                io::fmt_f64(report.delta),
                io::fmt_f64(report.value_gap),
                opt(report.value_bound),
                io::fmt_f64(report.grad_l1_gap),
                opt(report.grad_bound),
                io::fmt_f64(report.hess_norm),
                opt(report.hess_bound),
                io::fmt_f64(report.affine_residual),
                opt(report.affine_bound),
                report.in_stable_region.to_string(),
                report.bound_underflow.to_string(),
            ]);
            csv.write(&dir.join("stability_report.csv"))?;
        }
    }

    // Violations of the provable envelopes are assertion failures.
    if report.in_stable_region {
        let within = |got: f64, bound: Option<f64>| {
            got <= bound.unwrap_or(f64::INFINITY) * (1.0 + 1e-9) + 1e-300
        };
        let mut ok = within(report.value_gap, report.value_bound)
            && within(report.grad_l1_gap, report.grad_bound);
        if let Some((hess_env, affine_env)) = hessian_envelope(&report) {
            ok = ok
                && within(report.hess_norm, Some(hess_env))
                && within(report.affine_residual, Some(affine_env));
        }
        if !ok {
            return Err(CliError::Assertion(format!(
                "stability bounds violated: {report:?}"
            )));
        }
    }
    Ok(report)
}
