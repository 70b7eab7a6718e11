//! Dequantization field experiment: soft-attention RGB fields over a dense
//! query grid at several temperatures, next to the zero-temperature winner
//! map.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use tropgeom::attention::{attention_masses, hard_routing, soft_attention, HeadData};
use tropgeom::rng::CounterRng;
use tropgeom::trop::Temperature;

use crate::config::{OutputFormat, RunSettings};
use crate::io::{self, Csv};
use crate::CliError;

/// Categorical palette for value vectors (RGB in [0, 1]); keys beyond the
/// palette get evenly spaced hues.
const PALETTE: [[f64; 3]; 5] = [
    [0.894, 0.102, 0.110],
    [0.216, 0.494, 0.722],
    [0.302, 0.686, 0.290],
    [0.596, 0.306, 0.639],
    [1.000, 0.498, 0.000],
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldParams {
    pub grid: usize,
    #[serde(rename = "box")]
    pub domain: [[f64; 2]; 2],
    pub taus: Vec<f64>,
    pub n_keys: usize,
    pub keys: Option<Vec<Vec<f64>>>,
    pub values: Option<Vec<Vec<f64>>>,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            grid: 256,
            domain: [[-4.0, 4.0], [-4.0, 4.0]],
            taus: vec![1.0, 0.5, 0.1, 0.001],
            n_keys: 5,
            keys: None,
            values: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TauField {
    pub tau: f64,
    /// Count of distinct dominant winners over the grid.
    pub distinct_dominant: usize,
    /// Fraction of cells whose RGB matches the zero-temperature winner's
    /// value within 1e-2 in max-norm.
    pub winner_match_fraction: f64,
    #[serde(skip)]
    pub rgb: Vec<[f64; 3]>,
    #[serde(skip)]
    pub dominant: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    pub grid: usize,
    pub seed: u64,
    pub n_keys: usize,
    pub keys: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub fields: Vec<TauField>,
    /// Zero-temperature winner per cell (ties carry the smallest index).
    #[serde(skip)]
    pub winner_map: Vec<usize>,
    pub distinct_winners_tau0: usize,
}

fn palette_color(i: usize) -> [f64; 3] {
    if i < PALETTE.len() {
        PALETTE[i]
    } else {
        // evenly spaced hues at full saturation
        let h = (i as f64 * 0.618_033_988_749_895).fract() * 6.0;
        let x = 1.0 - (h % 2.0 - 1.0).abs();
        match h as usize % 6 {
            0 => [1.0, x, 0.0],
            1 => [x, 1.0, 0.0],
            2 => [0.0, 1.0, x],
            3 => [0.0, x, 1.0],
            4 => [x, 0.0, 1.0],
            _ => [1.0, 0.0, x],
        }
    }
}

/// Grid cell centers, row-major with the first row at the top of the box
/// (image convention).
fn cell_center(params: &FieldParams, ix: usize, iy: usize) -> [f64; 2] {
    let [bx, by] = params.domain;
    let g = params.grid as f64;
    [
        bx[0] + (ix as f64 + 0.5) / g * (bx[1] - bx[0]),
        by[1] - (iy as f64 + 0.5) / g * (by[1] - by[0]),
    ]
}

pub fn run_field(
    params: &FieldParams,
    settings: &RunSettings,
) -> Result<FieldSummary, CliError> {
    if params.grid < 16 {
        return Err(CliError::Usage("field grid must be at least 16".into()));
    }
    if params.taus.is_empty() {
        return Err(CliError::Usage("field needs at least one tau".into()));
    }
    let rng = CounterRng::new(settings.seed);
    let keys: Vec<Vec<f64>> = match &params.keys {
        Some(k) => k.clone(),
        None => (0..params.n_keys)
            .map(|j| vec![rng.gaussian(0, 2 * j as u64), rng.gaussian(0, 2 * j as u64 + 1)])
            .collect(),
    };
    let n = keys.len();
    let values: Vec<Vec<f64>> = match &params.values {
        Some(v) => v.clone(),
        None => (0..n).map(|j| palette_color(j).to_vec()).collect(),
    };
    let head = HeadData::new(keys.clone(), values.clone())
        .map_err(|e| CliError::Usage(format!("field head: {e}")))?;

    let g = params.grid;
    // zero-temperature winner map
    let winner_map: Vec<usize> = (0..g * g)
        .into_par_iter()
        .map(|cell| {
            let q = cell_center(params, cell % g, cell / g);
            hard_routing(&q, &keys).expect("routing").winner
        })
        .collect();
    let mut seen0 = vec![false; n];
    for &w in &winner_map {
        seen0[w] = true;
    }
    let distinct_winners_tau0 = seen0.iter().filter(|x| **x).count();

    let mut fields = Vec::new();
    for &tau in &params.taus {
        let temp = Temperature::finite(tau)
            .map_err(|e| CliError::Usage(format!("tau {tau}: {e}")))?;
        let cells: Vec<([f64; 3], usize)> = (0..g * g)
            .into_par_iter()
            .map(|cell| {
                let q = cell_center(params, cell % g, cell / g);
                let out = soft_attention(&q, &head, &temp).expect("soft attention");
                let masses = attention_masses(&q, &head, tau).expect("masses");
                let mut best = 0;
                for (i, m) in masses.iter().enumerate().skip(1) {
                    if *m > masses[best] {
                        best = i;
                    }
                }
                ([out[0], out[1], out[2]], best)
            })
            .collect();
        let mut seen = vec![false; n];
        let mut matches = 0usize;
        for (cell, (rgb, dom)) in cells.iter().enumerate() {
            seen[*dom] = true;
            let wv = &values[winner_map[cell]];
            let gap = rgb
                .iter()
                .zip(wv)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if gap <= 1e-2 {
                matches += 1;
            }
        }
        fields.push(TauField {
            tau,
            distinct_dominant: seen.iter().filter(|x| **x).count(),
            winner_match_fraction: matches as f64 / (g * g) as f64,
            rgb: cells.iter().map(|(c, _)| *c).collect(),
            dominant: cells.iter().map(|(_, d)| *d).collect(),
        });
    }

    let summary = FieldSummary {
        grid: g,
        seed: settings.seed,
        n_keys: n,
        keys,
        values,
        fields,
        winner_map,
        distinct_winners_tau0,
    };
    if let Some(dir) = &settings.out {
        write_outputs(&summary, params, dir, settings.format)?;
    }
    Ok(summary)
}

fn write_outputs(
    s: &FieldSummary,
    params: &FieldParams,
    dir: &Path,
    format: OutputFormat,
) -> Result<(), CliError> {
    let g = s.grid;
    for f in &s.fields {
        let name = format!("field_tau{}", f.tau);
        match format {
            OutputFormat::Csv => {
                let mut csv = Csv::new("field", &["ix", "iy", "qx", "qy", "r", "g", "b"]);
                for iy in 0..g {
                    for ix in 0..g {
                        let q = cell_center(params, ix, iy);
                        let rgb = f.rgb[iy * g + ix];
                        csv.row(&[
                            ix.to_string(),
                            iy.to_string(),
                            io::fmt_f64(q[0]),
                            io::fmt_f64(q[1]),
                            io::fmt_f64(rgb[0]),
                            io::fmt_f64(rgb[1]),
                            io::fmt_f64(rgb[2]),
                        ]);
                    }
                }
                csv.write(&dir.join(format!("{name}.csv")))?;
            }
            OutputFormat::Json => {
                let rows: Vec<serde_json::Value> = f
                    .rgb
                    .iter()
                    .map(|c| serde_json::json!([c[0], c[1], c[2]]))
                    .collect();
                io::write_json(&dir.join(format!("{name}.json")), &rows)?;
            }
        }
        let bytes: Vec<u8> = f
            .rgb
            .iter()
            .flat_map(|c| c.iter().map(|x| (x.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect();
        io::write_ppm(&dir.join(format!("{name}.ppm")), g, g, &bytes)?;
    }

    // winner map at zero temperature
    let mut csv = Csv::new("field_winner", &["ix", "iy", "winner"]);
    for iy in 0..g {
        for ix in 0..g {
            csv.row(&[
                ix.to_string(),
                iy.to_string(),
                s.winner_map[iy * g + ix].to_string(),
            ]);
        }
    }
    csv.write(&dir.join("winner_tau0.csv"))?;
    let denom = (s.n_keys.max(2) - 1) as f64;
    let gray: Vec<u8> = s
        .winner_map
        .iter()
        .map(|w| ((*w as f64 / denom) * 255.0).round() as u8)
        .collect();
    io::write_pgm(&dir.join("winner_tau0.pgm"), g, g, &gray)?;
    io::write_json(&dir.join("field_summary.json"), s)?;
    Ok(())
}
