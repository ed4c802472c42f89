//! Cross-product parameter sweeps over a base scenario.
//!
//! A grid is written `key=v1,v2,...;key=...`, for example
//! `mu=0.05,0.1,0.2;b1=1.0,1.5`. The first key varies slowest.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::runner::{run_scenario, RunOutput};
use crate::scenario::{validate_scenario, BoundsConfig, Scenario, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GridKey {
    Mu,
    B0,
    B1,
    A1,
    A2,
    UMin,
    UMax,
}

impl GridKey {
    pub const ALL: [GridKey; 7] = [
        GridKey::Mu,
        GridKey::B0,
        GridKey::B1,
        GridKey::A1,
        GridKey::A2,
        GridKey::UMin,
        GridKey::UMax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GridKey::Mu => "mu",
            GridKey::B0 => "b0",
            GridKey::B1 => "b1",
            GridKey::A1 => "a1",
            GridKey::A2 => "a2",
            GridKey::UMin => "u_min",
            GridKey::UMax => "u_max",
        }
    }

    /// Overrides the parameter in every schedule segment (for `mu`, `b0`, `b1`).
    pub fn apply(self, cfg: &mut ScenarioConfig, value: f64) {
        match self {
            GridKey::Mu => cfg.schedule.iter_mut().for_each(|s| s.mu = value),
            GridKey::B0 => cfg.schedule.iter_mut().for_each(|s| s.b0 = value),
            GridKey::B1 => cfg.schedule.iter_mut().for_each(|s| s.b1 = value),
            GridKey::A1 => cfg.a_nominal.a1 = value,
            GridKey::A2 => cfg.a_nominal.a2 = value,
            GridKey::UMin | GridKey::UMax => {
                let b = cfg.bounds.get_or_insert(BoundsConfig {
                    u_min: f64::NEG_INFINITY,
                    u_max: f64::INFINITY,
                });
                if self == GridKey::UMin {
                    b.u_min = value;
                } else {
                    b.u_max = value;
                }
            }
        }
    }
}

impl fmt::Display for GridKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GridKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GridKey::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(
                    "grid",
                    format!("unknown key {s:?}; expected one of mu, b0, b1, a1, a2, u_min, u_max"),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub dims: Vec<(GridKey, Vec<f64>)>,
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let mut dims: Vec<(GridKey, Vec<f64>)> = Vec::new();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, vals) = part
                .split_once('=')
                .ok_or_else(|| Error::config("grid", format!("missing '=' in {part:?}")))?;
            let key: GridKey = k.trim().parse()?;
            if dims.iter().any(|(d, _)| *d == key) {
                return Err(Error::config("grid", format!("key {key} given twice")));
            }
            let values = vals
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::config("grid", format!("{key}: {v:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            dims.push((key, values));
        }
        if dims.is_empty() {
            return Err(Error::config("grid", "empty grid"));
        }
        Ok(Grid { dims })
    }
}

impl Grid {
    pub fn len(&self) -> usize {
        self.dims.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameter assignments in row-major order.
    pub fn cells(&self) -> Vec<Vec<(GridKey, f64)>> {
        let mut cells = vec![Vec::new()];
        for (key, values) in &self.dims {
            cells = cells
                .into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut c = prefix.clone();
                        c.push((*key, v));
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Ok { metrics: Metrics },
    ConfigError { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub params: BTreeMap<String, f64>,
    #[serde(flatten)]
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub row: SweepRow,
    pub run: Option<(Scenario, RunOutput)>,
}

fn run_cell(base: &ScenarioConfig, index: usize, cell: &[(GridKey, f64)]) -> SweepCell {
    let mut cfg = base.clone();
    for &(k, v) in cell {
        k.apply(&mut cfg, v);
    }
    let params = cell
        .iter()
        .map(|(k, v)| (k.name().to_string(), *v))
        .collect();
    match validate_scenario(&cfg) {
        Err(e) => SweepCell {
            row: SweepRow {
                cell: index,
                params,
                outcome: CellOutcome::ConfigError {
                    message: e.to_string(),
                },
            },
            run: None,
        },
        Ok(s) => {
            let out = run_scenario(&s);
            SweepCell {
                row: SweepRow {
                    cell: index,
                    params,
                    outcome: CellOutcome::Ok {
                        metrics: out.metrics.clone(),
                    },
                },
                run: Some((s, out)),
            }
        }
    }
}

pub fn sweep(base: &Scenario, grid: &Grid) -> Vec<SweepCell> {
    let base = base.to_config();
    let cells = grid.cells();
    #[cfg(feature = "parallel")]
    let iter = cells.par_iter().enumerate();
    #[cfg(not(feature = "parallel"))]
    let iter = cells.iter().enumerate();
    iter.map(|(i, c)| run_cell(&base, i, c)).collect()
}

/// One line per cell: grid values, then the scenario aggregate.
pub fn sweep_table_csv(grid: &Grid, rows: &[SweepRow]) -> String {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = vec!["cell".into()];
    header.extend(grid.dims.iter().map(|(k, _)| k.name().to_string()));
    header.extend(
        [
            "status",
            "trajectories",
            "converged",
            "failed",
            "all_converged",
            "max_convergence_time",
            "max_abs_u",
            "clamp_count",
            "min_dtheta_dt",
            "message",
        ]
        .map(String::from),
    );
    wr.write_record(&header).expect("in-memory csv");
    for row in rows {
        let mut rec = vec![row.cell.to_string()];
        rec.extend(
            grid.dims
                .iter()
                .map(|(k, _)| format!("{:.16e}", row.params[k.name()])),
        );
        match &row.outcome {
            CellOutcome::Ok { metrics } => {
                let a = &metrics.aggregate;
                rec.push("ok".into());
                rec.push(a.trajectories.to_string());
                rec.push(a.converged.to_string());
                rec.push(a.failed.to_string());
                rec.push(a.all_converged.to_string());
                rec.push(
                    a.max_convergence_time
                        .map_or(String::new(), |t| format!("{t:.16e}")),
                );
                rec.push(format!("{:.16e}", a.max_abs_u));
                rec.push(a.clamp_count.to_string());
                rec.push(format!("{:.16e}", a.min_dtheta_dt));
                rec.push(String::new());
            }
            CellOutcome::ConfigError { message } => {
                rec.push("config_error".into());
                rec.extend(std::iter::repeat_n(String::new(), 8));
                rec.push(message.replace('\n', "; "));
            }
        }
        wr.write_record(&rec).expect("in-memory csv");
    }
    String::from_utf8(wr.into_inner().expect("in-memory csv")).expect("ascii")
}
