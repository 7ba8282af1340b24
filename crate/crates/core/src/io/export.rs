//! Full-period trajectory export (CSV and JSON) and reimport.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::SymmetryProblem;
use crate::path::{extend_to_period, DiscretizedPath, PathCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    Csv,
    Json,
}

impl TrajectoryFormat {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "csv" => Ok(TrajectoryFormat::Csv),
            "json" => Ok(TrajectoryFormat::Json),
            other => Err(Error::validation(format!(
                "unknown export format {other:?}; expected csv or json"
            ))),
        }
    }
}

/// A reimported trajectory with its grid metadata.
#[derive(Debug, Clone)]
pub struct ImportedTrajectory {
    pub path: DiscretizedPath,
    pub segments: usize,
    pub samples_per_segment: usize,
    pub bodies: usize,
    pub dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryJson {
    symmetry: String,
    period: f64,
    segments: usize,
    samples_per_segment: usize,
    bodies: usize,
    dim: usize,
    /// trajectories[body][sample][coordinate]
    trajectories: Vec<Vec<Vec<f64>>>,
}

/// Samples the full-period orbit (S samples per fundamental domain) and
/// writes it out. CSV rows are one per (time index, body): columns
/// `h, t, body, c0..c{d-1}`; headers carry the period T = |Ḡ|·π and S.
pub fn export_trajectory(
    problem: &SymmetryProblem,
    coeffs: &PathCoefficients,
    s: usize,
    format: TrajectoryFormat,
    out: impl AsRef<Path>,
) -> Result<()> {
    let path = extend_to_period(coeffs, problem, s)?;
    let text = match format {
        TrajectoryFormat::Csv => trajectory_csv(problem, &path, s),
        TrajectoryFormat::Json => trajectory_json(problem, &path, s)?,
    };
    fs::write(out.as_ref(), text)
        .map_err(|e| Error::io(format!("writing {}", out.as_ref().display()), e))
}

fn trajectory_csv(problem: &SymmetryProblem, path: &DiscretizedPath, s: usize) -> String {
    let n = problem.bodies();
    let d = problem.dim();
    let mut out = String::new();
    out.push_str(&format!("# symmetry = {}\n", problem.name()));
    out.push_str(&format!("# period = {}\n", problem.period()));
    out.push_str(&format!("# segments = {}\n", problem.quotient_order()));
    out.push_str(&format!("# samples_per_segment = {s}\n"));
    out.push_str(&format!("# bodies = {n}\n"));
    out.push_str(&format!("# dim = {d}\n"));
    out.push_str("h,t,body");
    for a in 0..d {
        out.push_str(&format!(",c{a}"));
    }
    out.push('\n');
    for (h, sample) in path.samples.iter().enumerate() {
        let t = h as f64 * path.dt;
        for i in 0..n {
            out.push_str(&format!("{h},{t},{}", i + 1));
            for a in 0..d {
                out.push_str(&format!(",{}", sample[(i, a)]));
            }
            out.push('\n');
        }
    }
    out
}

fn trajectory_json(
    problem: &SymmetryProblem,
    path: &DiscretizedPath,
    s: usize,
) -> Result<String> {
    let n = problem.bodies();
    let d = problem.dim();
    let trajectories: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            path.samples
                .iter()
                .map(|sample| (0..d).map(|a| sample[(i, a)]).collect())
                .collect()
        })
        .collect();
    let doc = TrajectoryJson {
        symmetry: problem.name().to_string(),
        period: problem.period(),
        segments: problem.quotient_order(),
        samples_per_segment: s,
        bodies: n,
        dim: d,
        trajectories,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Schema {
        context: "serializing trajectory".into(),
        expected: "serializable trajectory".into(),
        actual: e.to_string(),
    })
}

/// Reads back a CSV produced by [`export_trajectory`].
pub fn import_trajectory_csv(path: impl AsRef<Path>) -> Result<ImportedTrajectory> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let mut segments = None;
    let mut samples_per_segment = None;
    let mut bodies = None;
    let mut dim = None;
    let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some((key, value)) = meta.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "segments" => segments = value.parse().ok(),
                    "samples_per_segment" => samples_per_segment = value.parse().ok(),
                    "bodies" => bodies = value.parse().ok(),
                    "dim" => dim = value.parse().ok(),
                    _ => {}
                }
            }
            continue;
        }
        if line.starts_with('h') {
            continue; // column header
        }
        let mut fields = line.split(',');
        let parse_err = || Error::Parse {
            path: path.to_path_buf(),
            message: format!("bad CSV row {line:?}"),
        };
        let h: usize = fields.next().ok_or_else(parse_err)?.parse().map_err(|_| parse_err())?;
        let _t = fields.next().ok_or_else(parse_err)?;
        let body: usize = fields
            .next()
            .ok_or_else(parse_err)?
            .parse()
            .map_err(|_| parse_err())?;
        let coords: Vec<f64> = fields
            .map(|f| f.parse().map_err(|_| parse_err()))
            .collect::<Result<_>>()?;
        rows.push((h, body - 1, coords));
    }
    let (Some(segments), Some(samples_per_segment), Some(bodies), Some(dim)) =
        (segments, samples_per_segment, bodies, dim)
    else {
        return Err(Error::Schema {
            context: format!("CSV header in {}", path.display()),
            expected: "segments, samples_per_segment, bodies and dim metadata".into(),
            actual: "missing keys".into(),
        });
    };
    let total = segments * samples_per_segment;
    let expected_rows = total * bodies;
    if rows.len() != expected_rows {
        return Err(Error::Schema {
            context: format!("CSV body in {}", path.display()),
            expected: format!("{expected_rows} rows"),
            actual: format!("{} rows", rows.len()),
        });
    }
    let mut samples = vec![DMatrix::<f64>::zeros(bodies, dim); total];
    for (h, body, coords) in rows {
        if h >= total || body >= bodies || coords.len() != dim {
            return Err(Error::Schema {
                context: format!("CSV body in {}", path.display()),
                expected: format!("h < {total}, body <= {bodies}, {dim} coordinates"),
                actual: format!("h = {h}, body = {}, {} coordinates", body + 1, coords.len()),
            });
        }
        for (a, &c) in coords.iter().enumerate() {
            samples[h][(body, a)] = c;
        }
    }
    Ok(ImportedTrajectory {
        path: DiscretizedPath {
            samples,
            dt: std::f64::consts::PI / samples_per_segment as f64,
        },
        segments,
        samples_per_segment,
        bodies,
        dim,
    })
}
