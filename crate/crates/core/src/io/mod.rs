//! Problem files, result files and trajectory exports.
//!
//! Problem files are TOML with the established key set (`NOB`, `dim`, `m`,
//! `action_type`, `kern`, `rotV`, `rotS`, `refV`, `refS`, `F`, `Omega`).
//! Matrix literals are accepted both as nested-array strings and as native
//! TOML arrays; permutations use 1-based cycle notation.

pub mod export;
pub mod render;

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsReport, OrbitVerification, RotatingCircleVerdict};
use crate::error::{Error, Result};
use crate::group::{ActionType, GroupElement, Permutation, SymmetryProblem, SymmetryProblemSpec};
use crate::optim::{Method, MinimizationResult, OptimizerOptions, Termination};
use crate::path::{CoeffLayout, PathCoefficients};
use crate::potential::{PotentialModel, PotentialShape};

/// A matrix literal: either a nested-list string like `"[[1, 0], [0, 1]]"`
/// or a native array of rows. Problem files use both styles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixLit {
    Text(String),
    Rows(Vec<Vec<f64>>),
}

impl MatrixLit {
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let rows = match self {
            MatrixLit::Text(text) => parse_matrix_literal(text)?,
            MatrixLit::Rows(rows) => rows.clone(),
        };
        if rows.is_empty() {
            return Err(Error::validation("matrix literal has no rows"));
        }
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::validation(format!(
                "matrix literal {rows:?} has ragged rows"
            )));
        }
        Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
    }
}

/// Parses a nested-list matrix string, whitespace-insensitive.
pub fn parse_matrix_literal(text: &str) -> Result<Vec<Vec<f64>>> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = compact
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| {
            Error::validation(format!("matrix literal {text:?} must be wrapped in [..]"))
        })?;
    let mut rows = Vec::new();
    let mut rest = inner;
    while !rest.is_empty() {
        let rest2 = rest.strip_prefix(',').unwrap_or(rest);
        let body = rest2.strip_prefix('[').ok_or_else(|| {
            Error::validation(format!("matrix literal {text:?}: expected '[' at {rest2:?}"))
        })?;
        let end = body.find(']').ok_or_else(|| {
            Error::validation(format!("matrix literal {text:?}: unclosed row"))
        })?;
        let row: Vec<f64> = if body[..end].is_empty() {
            Vec::new()
        } else {
            body[..end]
                .split(',')
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::validation(format!(
                            "matrix literal {text:?}: bad number {tok:?}"
                        ))
                    })
                })
                .collect::<Result<_>>()?
        };
        rows.push(row);
        rest = &body[end + 1..];
    }
    if rows.is_empty() {
        return Err(Error::validation(format!("matrix literal {text:?} is empty")));
    }
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::validation(format!(
            "matrix literal {text:?} has ragged rows"
        )));
    }
    Ok(rows)
}

/// Kernel specification: the token `"TrivialKerTau(d)"` or an explicit list
/// of generator pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernSpec {
    Token(String),
    Pairs(Vec<KernPair>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernPair {
    #[serde(rename = "V")]
    pub v: MatrixLit,
    #[serde(rename = "S")]
    pub s: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub shape: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub softening: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MethodSpec {
    One(String),
    Chain(Vec<String>),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OptimizerSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// The on-disk problem schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub symmetry_name: String,
    #[serde(rename = "NOB")]
    pub nob: usize,
    pub dim: usize,
    pub m: Vec<f64>,
    pub action_type: i64,
    pub kern: KernSpec,
    #[serde(rename = "rotV")]
    pub rot_v: MatrixLit,
    #[serde(rename = "rotS")]
    pub rot_s: String,
    #[serde(rename = "refV", default, skip_serializing_if = "Option::is_none")]
    pub ref_v: Option<MatrixLit>,
    #[serde(rename = "refS", default, skip_serializing_if = "Option::is_none")]
    pub ref_s: Option<String>,
    #[serde(rename = "F")]
    pub fourier_modes: usize,
    #[serde(rename = "Omega")]
    pub omega: MatrixLit,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSpec>,
}

impl ProblemFile {
    pub fn from_str_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: PathBuf::from("<string>"),
            message: e.to_string(),
        })
    }

    /// Builds the validated problem.
    pub fn to_problem(&self) -> Result<SymmetryProblem> {
        let n = self.nob;
        let d = self.dim;
        let action_type = ActionType::from_code(self.action_type)?;

        let kernel_generators = match &self.kern {
            KernSpec::Token(token) => {
                let inner = token
                    .trim()
                    .strip_prefix("TrivialKerTau(")
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| {
                        Error::validation(format!(
                            "kern token {token:?} not understood; expected \
                             \"TrivialKerTau(d)\" or a list of generator pairs"
                        ))
                    })?;
                let token_dim: usize = inner.trim().parse().map_err(|_| {
                    Error::validation(format!("kern token {token:?}: bad dimension"))
                })?;
                if token_dim != d {
                    return Err(Error::validation(format!(
                        "kern token names dimension {token_dim}, problem has dim = {d}"
                    )));
                }
                Vec::new()
            }
            KernSpec::Pairs(pairs) => pairs
                .iter()
                .map(|p| {
                    GroupElement::new(p.v.to_matrix()?, Permutation::parse_cycles(&p.s, n)?)
                })
                .collect::<Result<Vec<_>>>()?,
        };

        let rot_gen =
            GroupElement::new(self.rot_v.to_matrix()?, Permutation::parse_cycles(&self.rot_s, n)?)?;
        let ref_gen = match (&self.ref_v, &self.ref_s) {
            (Some(v), Some(s)) => Some(GroupElement::new(
                v.to_matrix()?,
                Permutation::parse_cycles(s, n)?,
            )?),
            (None, None) => None,
            _ => {
                return Err(Error::validation(
                    "refV and refS must be given together",
                ))
            }
        };

        let potential = match &self.potential {
            None => PotentialModel::newtonian(),
            Some(spec) => {
                let mut model = match spec.shape.as_str() {
                    "newtonian" => PotentialModel::newtonian(),
                    "power" => PotentialModel::power(spec.alpha.unwrap_or(1.0)),
                    "none" => PotentialModel::none(),
                    other => {
                        return Err(Error::validation(format!(
                            "unknown potential shape {other:?}; expected \
                             \"newtonian\", \"power\" or \"none\""
                        )))
                    }
                };
                if let Some(eps) = spec.softening {
                    if eps < 0.0 {
                        return Err(Error::validation("softening must be non-negative"));
                    }
                    model.softening = eps;
                }
                model
            }
        };

        let samples = self.samples.unwrap_or(200);
        if samples < 2 * self.fourier_modes.max(1) {
            return Err(Error::validation(format!(
                "S = {samples} is too small for F = {} (need S >= 2F)",
                self.fourier_modes
            )));
        }

        SymmetryProblemSpec {
            name: self.symmetry_name.clone(),
            bodies: n,
            dim: d,
            masses: self.m.clone(),
            action_type,
            kernel_generators,
            rot_gen,
            ref_gen,
            omega: self.omega.to_matrix()?,
            fourier_modes: self.fourier_modes,
            potential,
            samples,
            closure_cap: crate::group::DEFAULT_CLOSURE_CAP,
        }
        .validate()
    }

    /// Optimizer options with the file's overrides applied.
    pub fn optimizer_options(&self) -> Result<OptimizerOptions> {
        let mut opts = OptimizerOptions::default();
        if let Some(spec) = &self.optimizer {
            if let Some(method) = &spec.method {
                opts.methods = match method {
                    MethodSpec::One(name) => vec![Method::parse(name)?],
                    MethodSpec::Chain(names) => names
                        .iter()
                        .map(|n| Method::parse(n))
                        .collect::<Result<Vec<_>>>()?,
                };
            }
            if let Some(it) = spec.max_iterations {
                opts.max_iterations = it;
            }
            if let Some(tol) = spec.gradient_tolerance {
                opts.gradient_tolerance = tol;
            }
            if let Some(seed) = spec.seed {
                opts.seed = seed;
            }
        }
        Ok(opts)
    }
}

/// Normalized file form of a validated problem (used for result echoes).
pub fn problem_to_file(problem: &SymmetryProblem) -> ProblemFile {
    let matrix_text = |m: &DMatrix<f64>| -> String {
        let rows: Vec<String> = (0..m.nrows())
            .map(|r| {
                let cells: Vec<String> =
                    (0..m.ncols()).map(|c| format!("{}", m[(r, c)])).collect();
                format!("[{}]", cells.join(", "))
            })
            .collect();
        format!("[{}]", rows.join(", "))
    };
    let kern = if problem.kernel().order() == 1 {
        KernSpec::Token(format!("TrivialKerTau({})", problem.dim()))
    } else {
        KernSpec::Pairs(
            problem
                .kernel()
                .elements()
                .iter()
                .skip(1)
                .map(|e| KernPair {
                    v: MatrixLit::Text(matrix_text(e.rho())),
                    s: e.sigma().to_cycles(),
                })
                .collect(),
        )
    };
    let potential = match &problem.potential().shape {
        PotentialShape::None => Some(PotentialSpec {
            shape: "none".into(),
            alpha: None,
            softening: None,
        }),
        PotentialShape::Power { alpha } => Some(PotentialSpec {
            shape: "power".into(),
            alpha: Some(*alpha),
            softening: (problem.potential().softening != 0.0)
                .then_some(problem.potential().softening),
        }),
        PotentialShape::Custom { name, .. } => Some(PotentialSpec {
            shape: format!("custom:{name}"),
            alpha: None,
            softening: None,
        }),
    };
    ProblemFile {
        symmetry_name: problem.name().to_string(),
        nob: problem.bodies(),
        dim: problem.dim(),
        m: problem.masses().to_vec(),
        action_type: problem.action_type().code(),
        kern,
        rot_v: MatrixLit::Text(matrix_text(problem.rot_gen().rho())),
        rot_s: problem.rot_gen().sigma().to_cycles(),
        ref_v: problem
            .ref_gen()
            .map(|r| MatrixLit::Text(matrix_text(r.rho()))),
        ref_s: problem.ref_gen().map(|r| r.sigma().to_cycles()),
        fourier_modes: problem.fourier_modes(),
        omega: MatrixLit::Rows(
            (0..problem.dim())
                .map(|r| (0..problem.dim()).map(|c| problem.omega()[(r, c)]).collect())
                .collect(),
        ),
        samples: Some(problem.samples()),
        potential,
        optimizer: None,
    }
}

/// A parsed problem together with its structural diagnostics and resolved
/// optimizer options.
pub struct LoadedProblem {
    pub problem: SymmetryProblem,
    pub diagnostics: DiagnosticsReport,
    pub optimizer: OptimizerOptions,
}

/// Reads, validates and diagnoses a problem file.
pub fn parse_problem(path: impl AsRef<Path>) -> Result<LoadedProblem> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let file: ProblemFile = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let problem = file.to_problem()?;
    let diagnostics = diagnostics::analyze(&problem)?;
    let optimizer = file.optimizer_options()?;
    Ok(LoadedProblem {
        problem,
        diagnostics,
        optimizer,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultSection {
    pub action: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub termination: String,
    pub method: String,
    /// Flattened (F+2)×(n-1)×d coefficients, mode-major, then body, then
    /// coordinate.
    pub fourier_coeff: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictSection {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotatingCircleSection {
    pub subgroup: String,
    pub verdict: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsSection {
    pub tau_sigma_trivial: VerdictSection,
    pub rho_sigma_bounded: VerdictSection,
    pub tau_rho_trivial: VerdictSection,
    pub coercive: bool,
    pub fixed_space_dimension: usize,
    pub bound_to_collisions_risk: bool,
    pub rotating_circle: Vec<RotatingCircleSection>,
    pub spatial_span_dimension: usize,
    pub notes: Vec<String>,
}

impl From<&DiagnosticsReport> for DiagnosticsSection {
    fn from(r: &DiagnosticsReport) -> Self {
        let verdict = |v: &crate::diagnostics::Verdict| VerdictSection {
            ok: v.ok,
            witness: v.witness.clone(),
        };
        DiagnosticsSection {
            tau_sigma_trivial: verdict(&r.admissibility.tau_sigma_trivial),
            rho_sigma_bounded: verdict(&r.admissibility.rho_sigma_bounded),
            tau_rho_trivial: verdict(&r.admissibility.tau_rho_trivial),
            coercive: r.coercive,
            fixed_space_dimension: r.fixed_space_dimension,
            bound_to_collisions_risk: r.bound_to_collisions_risk,
            rotating_circle: r
                .rotating_circle
                .iter()
                .map(|rc| RotatingCircleSection {
                    subgroup: rc.subgroup.clone(),
                    verdict: rc.verdict.name().to_string(),
                    detail: rc.detail.clone(),
                })
                .collect(),
            spatial_span_dimension: r.spatial_span_dimension,
            notes: r.notes.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationSection {
    pub max_equation_residual: f64,
    pub min_pairwise_distance: f64,
    pub junction_velocity_mismatch: f64,
    pub energy_drift: f64,
    pub dense_samples: usize,
}

impl From<&OrbitVerification> for VerificationSection {
    fn from(v: &OrbitVerification) -> Self {
        VerificationSection {
            max_equation_residual: v.max_equation_residual,
            min_pairwise_distance: v.min_pairwise_distance,
            junction_velocity_mismatch: v.junction_velocity_mismatch,
            energy_drift: v.energy_drift,
            dense_samples: v.dense_samples,
        }
    }
}

/// The on-disk result schema, versioned in the header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub schema: String,
    pub tool_version: String,
    pub problem: ProblemFile,
    pub result: ResultSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationSection>,
}

impl ResultFile {
    pub fn new(
        result: &MinimizationResult,
        problem: &SymmetryProblem,
        diagnostics: Option<&DiagnosticsReport>,
        verification: Option<&OrbitVerification>,
    ) -> Self {
        ResultFile {
            schema: "1".to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            problem: problem_to_file(problem),
            result: ResultSection {
                action: result.action_value,
                gradient_norm: result.gradient_norm,
                iterations: result.iterations,
                termination: result.termination.name().to_string(),
                method: result
                    .trace
                    .iter()
                    .map(|s| s.method.name())
                    .collect::<Vec<_>>()
                    .join("+"),
                fourier_coeff: result.fourier_coeff.flat().as_slice().to_vec(),
            },
            diagnostics: diagnostics.map(DiagnosticsSection::from),
            verification: verification.map(VerificationSection::from),
        }
    }
}

/// Writes a result file named after the action value (4 decimal places)
/// into a directory named after the symmetry. Distinct orbits that round
/// to the same name get `-1`, `-2`, ... suffixes.
pub fn store_result(
    result: &MinimizationResult,
    problem: &SymmetryProblem,
    diagnostics: Option<&DiagnosticsReport>,
    verification: Option<&OrbitVerification>,
    directory: impl AsRef<Path>,
) -> Result<PathBuf> {
    let dir = directory.as_ref().join(problem.name());
    fs::create_dir_all(&dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let base = format!("{:.4}", result.action_value);
    let mut path = dir.join(format!("{base}.toml"));
    let mut suffix = 0usize;
    while path.exists() {
        suffix += 1;
        path = dir.join(format!("{base}-{suffix}.toml"));
    }
    let file = ResultFile::new(result, problem, diagnostics, verification);
    let text = toml::to_string_pretty(&file).map_err(|e| Error::Schema {
        context: "serializing result".into(),
        expected: "serializable result".into(),
        actual: e.to_string(),
    })?;
    fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}

/// Reads a stored result file.
pub fn read_result_file(path: impl AsRef<Path>) -> Result<ResultFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a stored result and returns the problem together with the
/// coefficients, checking the (F+2)×(n-1)×d count.
pub fn read_path_from_file(
    path: impl AsRef<Path>,
) -> Result<(SymmetryProblem, PathCoefficients)> {
    let file = read_result_file(&path)?;
    let problem = file.problem.to_problem()?;
    let layout = CoeffLayout::of(&problem);
    if file.result.fourier_coeff.len() != layout.len() {
        return Err(Error::Schema {
            context: format!("fourier_coeff in {}", path.as_ref().display()),
            expected: format!(
                "{} values ({} x {} x {})",
                layout.len(),
                layout.blocks(),
                layout.free_bodies,
                layout.dim
            ),
            actual: format!("{} values", file.result.fourier_coeff.len()),
        });
    }
    let coeffs = PathCoefficients::from_vec(layout, file.result.fourier_coeff.clone())?;
    Ok((problem, coeffs))
}

/// Rebuilds a `MinimizationResult` from a stored file (for verification and
/// export flows).
pub fn result_from_file(file: &ResultFile, problem: &SymmetryProblem) -> Result<MinimizationResult> {
    let layout = CoeffLayout::of(problem);
    let coeffs = PathCoefficients::from_vec(layout, file.result.fourier_coeff.clone())?;
    Ok(MinimizationResult {
        fourier_coeff: coeffs,
        action_value: file.result.action,
        gradient_norm: file.result.gradient_norm,
        iterations: file.result.iterations,
        termination: Termination::parse(&file.result.termination)?,
        trace: Vec::new(),
    })
}

pub fn rotating_circle_verdict_name(v: RotatingCircleVerdict) -> &'static str {
    v.name()
}
