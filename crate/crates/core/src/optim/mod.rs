//! First-order minimization and second-order critical-point solves of the
//! projected action, with restarts and method chaining.

mod methods;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::action::ActionEvaluator;
use crate::error::{Error, Result};
use crate::group::SymmetryProblem;
use crate::path::{CoeffLayout, PathCoefficients};

pub use methods::newton_step_direction;

/// Available solvers. First-order methods minimize the action; the Newton
/// variants solve ∇A = 0 and accept saddle points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GradientDescent,
    ConjugateGradient,
    Bfgs,
    NewtonLineSearch,
    NewtonTrustRegion,
}

impl Method {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "gradient_descent" | "gd" => Ok(Method::GradientDescent),
            "conjugate_gradient" | "cg" => Ok(Method::ConjugateGradient),
            "bfgs" => Ok(Method::Bfgs),
            "newton_linesearch" | "newton" => Ok(Method::NewtonLineSearch),
            "newton_trustregion" | "newton_tr" => Ok(Method::NewtonTrustRegion),
            other => Err(Error::validation(format!(
                "unknown method {other:?}; expected one of gradient_descent, \
                 conjugate_gradient, bfgs, newton_linesearch, newton_trustregion"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::GradientDescent => "gradient_descent",
            Method::ConjugateGradient => "conjugate_gradient",
            Method::Bfgs => "bfgs",
            Method::NewtonLineSearch => "newton_linesearch",
            Method::NewtonTrustRegion => "newton_trustregion",
        }
    }

    pub fn is_second_order(&self) -> bool {
        matches!(self, Method::NewtonLineSearch | Method::NewtonTrustRegion)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Options shared by all methods. `methods` is an ordered chain; each stage
/// starts from the previous stage's output and runs with the same per-stage
/// iteration budget. The final stage's tolerance governs the converged
/// verdict.
#[derive(Debug, Clone)]
pub struct OptimizerOptions {
    pub methods: Vec<Method>,
    /// Iteration budget per stage.
    pub max_iterations: usize,
    /// Convergence threshold on the projected-gradient 2-norm.
    pub gradient_tolerance: f64,
    /// Initial line-search step.
    pub initial_step: f64,
    /// Initial trust-region radius.
    pub trust_radius: f64,
    /// Number of independent restarts in a multi-start run.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            methods: vec![Method::Bfgs],
            max_iterations: 200,
            gradient_tolerance: 1e-8,
            initial_step: 1.0,
            trust_radius: 1.0,
            restarts: 1,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.methods.is_empty() {
            issues.push("method chain is empty".to_string());
        }
        if self.max_iterations == 0 {
            issues.push("max_iterations must be at least 1".to_string());
        }
        for (name, value) in [
            ("gradient_tolerance", self.gradient_tolerance),
            ("initial_step", self.initial_step),
            ("trust_radius", self.trust_radius),
        ] {
            if !(value > 0.0) {
                issues.push(format!("{name} must be positive, got {value}"));
            }
        }
        if self.restarts == 0 {
            issues.push("restarts must be at least 1".to_string());
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation { issues })
        }
    }
}

/// Why a stage stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    CollisionAbort,
    Stagnation,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iters",
            Termination::CollisionAbort => "collision_abort",
            Termination::Stagnation => "stagnation",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "converged" => Ok(Termination::Converged),
            "max_iters" => Ok(Termination::MaxIterations),
            "collision_abort" => Ok(Termination::CollisionAbort),
            "stagnation" => Ok(Termination::Stagnation),
            other => Err(Error::validation(format!(
                "unknown termination {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-stage summary within a method chain.
#[derive(Debug, Clone)]
pub struct StageTrace {
    pub method: Method,
    pub iterations: usize,
    pub value: f64,
    pub gradient_norm: f64,
    pub termination: Termination,
}

/// Outcome of one minimization run. Coefficients are projected and the
/// gradient norm is recorded at the returned point.
#[derive(Debug, Clone)]
pub struct MinimizationResult {
    pub fourier_coeff: PathCoefficients,
    pub action_value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Vec<StageTrace>,
}

impl MinimizationResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Anything the solvers can evaluate: value, gradient and optionally the
/// Hessian at a point. Gradients and Hessians are expected to be already
/// projected onto the feasible subspace.
pub trait Objective: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> Result<f64>;
    fn value_grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)>;
    fn value_grad_hess(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)>;

    /// Optional quasi-Newton seed: an approximation of the inverse Hessian
    /// on the feasible subspace. Defaults to none (identity seeding).
    fn inverse_hessian_seed(&self) -> Option<DMatrix<f64>> {
        None
    }
}

impl Objective for ActionEvaluator {
    fn dim(&self) -> usize {
        self.layout().len()
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        ActionEvaluator::value(self, x)
    }

    fn value_grad(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        ActionEvaluator::value_grad(self, x)
    }

    fn value_grad_hess(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        ActionEvaluator::value_grad_hess(self, x)
    }

    /// The kinetic quadratic form is the stiff, exactly-known part of the
    /// Hessian; seeding BFGS with its (floored) inverse on the projected
    /// subspace removes the k² conditioning of the sine modes.
    fn inverse_hessian_seed(&self) -> Option<DMatrix<f64>> {
        Some(self.kinetic_preconditioner().clone())
    }
}

/// Starting-path families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessKind {
    Random,
    Circular,
}

/// Draws a starting coefficient vector and projects it. Random guesses use
/// i.i.d. uniform [-1, 1] entries with a 1/k² amplitude decay on mode k;
/// circular guesses place the bodies equally spaced on a unit circle
/// sweeping an arc of 2π/|Ḡ| across the fundamental domain.
pub fn initial_guess(
    problem: &SymmetryProblem,
    kind: GuessKind,
    seed: u64,
) -> Result<PathCoefficients> {
    let layout = CoeffLayout::of(problem);
    let raw = match kind {
        GuessKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut coeffs = PathCoefficients::zeros(layout);
            for k in 0..layout.blocks() {
                let decay = if k == 0 || k == layout.fourier_modes + 1 {
                    1.0
                } else {
                    1.0 / (k * k) as f64
                };
                for i in 0..layout.free_bodies {
                    for a in 0..layout.dim {
                        coeffs.set(k, i, a, decay * rng.gen_range(-1.0..=1.0));
                    }
                }
            }
            coeffs
        }
        GuessKind::Circular => circular_guess(problem)?,
    };
    let projector = crate::projectors::CoefficientProjector::for_problem(problem)?;
    Ok(projector.project_coefficients(&raw))
}

/// Bodies equally spaced on the unit circle in the first two coordinates,
/// rotating by one fundamental-domain arc over I (clockwise, which matches
/// generators whose relabeling sends each body to its successor). Sampled
/// and fitted back onto the coefficient basis before projection.
fn circular_guess(problem: &SymmetryProblem) -> Result<PathCoefficients> {
    let layout = CoeffLayout::of(problem);
    if problem.dim() < 2 {
        return Err(Error::validation(
            "circular guesses need spatial dimension >= 2",
        ));
    }
    let n = problem.bodies();
    let arc = -2.0 * PI / problem.quotient_order() as f64;
    let fit_s = (2 * layout.fourier_modes + 2).max(64);
    let mut samples = Vec::with_capacity(fit_s + 1);
    for h in 0..=fit_s {
        let phase = arc * h as f64 / fit_s as f64;
        let mut cfg = DMatrix::zeros(layout.free_bodies, layout.dim);
        for i in 0..layout.free_bodies {
            let angle = 2.0 * PI * i as f64 / n as f64 + phase;
            cfg[(i, 0)] = angle.cos();
            cfg[(i, 1)] = angle.sin();
        }
        samples.push(cfg);
    }
    crate::path::fit_coefficients(layout, &samples)
}

/// Runs a method chain from `start`, which must already be projected.
/// Iterates stay in the projected subspace because every gradient, Hessian
/// and therefore every step direction is projected.
pub fn minimize_with(
    objective: &dyn Objective,
    start: &PathCoefficients,
    opts: &OptimizerOptions,
) -> MinimizationResult {
    run_chain(objective, start, opts, &opts.methods)
}

/// Convenience wrapper building the evaluator from the problem.
pub fn minimize(
    problem: &SymmetryProblem,
    start: &PathCoefficients,
    opts: &OptimizerOptions,
) -> Result<MinimizationResult> {
    opts.validate()?;
    let evaluator = ActionEvaluator::for_problem(problem)?;
    Ok(minimize_with(&evaluator, start, opts))
}

/// Second-order refinement of a (near-)critical point: solves the projected
/// ∇A = 0 system. Saddle points are acceptable targets.
pub fn newton_refine(
    problem: &SymmetryProblem,
    start: &PathCoefficients,
    opts: &OptimizerOptions,
) -> Result<MinimizationResult> {
    opts.validate()?;
    let evaluator = ActionEvaluator::for_problem(problem)?;
    let methods = if opts.methods.iter().any(Method::is_second_order) {
        opts.methods.clone()
    } else {
        vec![Method::NewtonLineSearch]
    };
    Ok(run_chain(&evaluator, start, opts, &methods))
}

fn run_chain(
    objective: &dyn Objective,
    start: &PathCoefficients,
    opts: &OptimizerOptions,
    methods: &[Method],
) -> MinimizationResult {
    let layout = start.layout();
    let mut x = start.flat().clone();
    let mut trace = Vec::with_capacity(methods.len());
    let mut total_iterations = 0;
    for method in methods {
        let stage = methods::run_stage(objective, &x, *method, opts);
        x = stage.x;
        total_iterations += stage.trace.iterations;
        trace.push(stage.trace);
    }
    let last = trace.last().expect("at least one stage");
    MinimizationResult {
        fourier_coeff: PathCoefficients::from_flat(layout, x).expect("layout preserved"),
        action_value: last.value,
        gradient_norm: last.gradient_norm,
        iterations: total_iterations,
        termination: last.termination,
        trace,
    }
}

/// Multi-start driver: runs `opts.restarts` independent minimizations from
/// seeded guesses in parallel, collecting results in submission order so a
/// fixed seed reproduces the same output.
pub fn multi_start(
    problem: &SymmetryProblem,
    opts: &OptimizerOptions,
    kind: GuessKind,
) -> Result<Vec<MinimizationResult>> {
    opts.validate()?;
    let evaluator = ActionEvaluator::new(Arc::new(problem.clone()), problem.samples())?;
    let runs: Vec<Result<MinimizationResult>> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let guess = initial_guess(problem, kind, opts.seed.wrapping_add(i as u64))?;
            Ok(minimize_with(&evaluator, &guess, opts))
        })
        .collect();
    runs.into_iter().collect()
}

/// The best converged run (lowest action), if any.
pub fn best_converged(results: &[MinimizationResult]) -> Option<&MinimizationResult> {
    results
        .iter()
        .filter(|r| r.converged())
        .min_by(|a, b| a.action_value.total_cmp(&b.action_value))
}
