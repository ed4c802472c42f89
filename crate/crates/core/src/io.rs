//! Trajectory CSV, metrics JSON and run-directory layout.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses back
//! to the identical `f64`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrator::Sample;
use crate::metrics::Metrics;
use crate::scenario::ScenarioConfig;

pub const CSV_HEADER: [&str; 14] = [
    "t",
    "r",
    "theta",
    "x",
    "y",
    "v",
    "u_raw",
    "u_applied",
    "clamped",
    "b0",
    "b1",
    "mu",
    "a1",
    "a2",
];

pub const SCENARIO_FILE: &str = "scenario.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const PORTRAIT_POLAR_FILE: &str = "portrait_polar.svg";
pub const PORTRAIT_CARTESIAN_FILE: &str = "portrait_cartesian.svg";
pub const CONTROL_FILE: &str = "control_vs_theta.svg";

pub fn trajectory_file_name(k: usize) -> String {
    format!("trajectory_{k}.csv")
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_trajectory_csv<W: Write>(w: W, samples: &[Sample]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER).map_err(csv_err)?;
    for s in samples {
        let row = [
            fmt(s.t),
            fmt(s.r),
            fmt(s.theta),
            fmt(s.x),
            fmt(s.y),
            fmt(s.v),
            fmt(s.u_raw),
            fmt(s.u_applied),
            if s.clamped { "1" } else { "0" }.to_string(),
            fmt(s.b0),
            fmt(s.b1),
            fmt(s.mu),
            fmt(s.a1),
            fmt(s.a2),
        ];
        wr.write_record(&row).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn trajectory_csv_string(samples: &[Sample]) -> String {
    let mut buf = Vec::new();
    write_trajectory_csv(&mut buf, samples).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ascii")
}

pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<Sample>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected header {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|e| {
                Error::Parse(format!("row {}, column {}: {e}", line + 1, CSV_HEADER[i]))
            })
        };
        let clamped = match &rec[8] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse(format!(
                    "row {}, column clamped: expected 0 or 1, got {other:?}",
                    line + 1
                )))
            }
        };
        out.push(Sample {
            t: f(0)?,
            r: f(1)?,
            theta: f(2)?,
            x: f(3)?,
            y: f(4)?,
            v: f(5)?,
            u_raw: f(6)?,
            u_applied: f(7)?,
            clamped,
            b0: f(9)?,
            b1: f(10)?,
            mu: f(11)?,
            a1: f(12)?,
            a2: f(13)?,
        });
    }
    Ok(out)
}

pub fn metrics_json(m: &Metrics) -> String {
    serde_json::to_string_pretty(m).expect("metrics serialize")
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes a file into the run directory, creating the directory if needed.
pub fn write_in(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    write_file(&p, contents)?;
    Ok(p)
}

/// Contents of a run directory needed to re-render it.
#[derive(Debug, Clone)]
pub struct RunDirContents {
    pub config: ScenarioConfig,
    pub trajectories: Vec<Vec<Sample>>,
}

pub fn read_run_dir(dir: &Path) -> Result<RunDirContents> {
    let config = ScenarioConfig::from_json(&read_file(&dir.join(SCENARIO_FILE))?)?;
    let mut trajectories = Vec::new();
    for k in 0.. {
        let p = dir.join(trajectory_file_name(k));
        if !p.exists() {
            break;
        }
        let f = fs::File::open(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        trajectories.push(read_trajectory_csv(f)?);
    }
    Ok(RunDirContents {
        config,
        trajectories,
    })
}
