//! The individual solvers behind the shared evaluate contract.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;

use super::{Method, Objective, OptimizerOptions, StageTrace, Termination};

/// Armijo sufficient-decrease constant.
const ARMIJO_C: f64 = 1e-4;
/// Backtracking shrink factor.
const SHRINK: f64 = 0.5;
/// Backtracking budget per line search.
const MAX_BACKTRACKS: usize = 40;
/// Relative threshold below which restricted Hessian eigenvalues are
/// treated as null directions of the projector range.
const EIG_NULL_REL: f64 = 1e-10;

pub(super) struct StageOutcome {
    pub x: DVector<f64>,
    pub trace: StageTrace,
}

enum SearchOutcome {
    Accepted { step: f64, x: DVector<f64>, value: f64 },
    Exhausted { saw_collision: bool },
    Failed,
}

/// Backtracking Armijo line search on an arbitrary merit function.
/// Collision errors count as rejections so the search can retreat from a
/// step that crossed a near-collision.
fn line_search(
    merit: &mut dyn FnMut(&DVector<f64>) -> Result<f64, Error>,
    x: &DVector<f64>,
    f0: f64,
    slope: f64,
    direction: &DVector<f64>,
    initial_step: f64,
) -> SearchOutcome {
    let mut step = initial_step;
    let mut saw_collision = false;
    for _ in 0..MAX_BACKTRACKS {
        let trial = x + direction * step;
        match merit(&trial) {
            Ok(value) if value <= f0 + ARMIJO_C * step * slope => {
                return SearchOutcome::Accepted {
                    step,
                    x: trial,
                    value,
                };
            }
            Ok(_) => {}
            Err(e) if e.is_collision() => saw_collision = true,
            Err(_) => return SearchOutcome::Failed,
        }
        step *= SHRINK;
    }
    SearchOutcome::Exhausted { saw_collision }
}

pub(super) fn run_stage(
    objective: &dyn Objective,
    x0: &DVector<f64>,
    method: Method,
    opts: &OptimizerOptions,
) -> StageOutcome {
    match method {
        Method::GradientDescent => first_order(objective, x0, method, opts),
        Method::ConjugateGradient => first_order(objective, x0, method, opts),
        Method::Bfgs => first_order(objective, x0, method, opts),
        Method::NewtonLineSearch => newton_linesearch(objective, x0, opts),
        Method::NewtonTrustRegion => newton_trust_region(objective, x0, opts),
    }
}

fn stage_outcome(
    method: Method,
    x: DVector<f64>,
    value: f64,
    gradient_norm: f64,
    iterations: usize,
    termination: Termination,
) -> StageOutcome {
    StageOutcome {
        x,
        trace: StageTrace {
            method,
            iterations,
            value,
            gradient_norm,
            termination,
        },
    }
}

/// Gradient descent, Polak-Ribière+ conjugate gradient and BFGS share one
/// skeleton: pick a descent direction, backtrack with Armijo, update state.
fn first_order(
    objective: &dyn Objective,
    x0: &DVector<f64>,
    method: Method,
    opts: &OptimizerOptions,
) -> StageOutcome {
    let dim = objective.dim();
    let (mut value, mut grad) = match objective.value_grad(x0) {
        Ok(vg) => vg,
        Err(e) => {
            let term = if e.is_collision() {
                Termination::CollisionAbort
            } else {
                Termination::Stagnation
            };
            return stage_outcome(method, x0.clone(), f64::NAN, f64::NAN, 0, term);
        }
    };
    let mut x = x0.clone();
    let (mut inv_hessian, mut bfgs_scaled) = match objective.inverse_hessian_seed() {
        Some(seed) if method == Method::Bfgs => (seed, true),
        _ => (DMatrix::<f64>::identity(dim, dim), false),
    };
    let mut prev_grad: Option<DVector<f64>> = None;
    let mut prev_direction: Option<DVector<f64>> = None;
    let mut prev_step = opts.initial_step;

    for iteration in 0..=opts.max_iterations {
        let gnorm = grad.norm();
        if gnorm < opts.gradient_tolerance {
            return stage_outcome(method, x, value, gnorm, iteration, Termination::Converged);
        }
        if iteration == opts.max_iterations {
            return stage_outcome(
                method,
                x,
                value,
                gnorm,
                iteration,
                Termination::MaxIterations,
            );
        }

        let (direction, initial_step) = match method {
            Method::GradientDescent => {
                let step = if prev_direction.is_none() {
                    opts.initial_step / gnorm.max(1.0)
                } else {
                    (prev_step * 2.0).min(1e6)
                };
                (-&grad, step)
            }
            Method::ConjugateGradient => {
                let mut dir = -&grad;
                if let (Some(pg), Some(pd)) = (prev_grad.as_ref(), prev_direction.as_ref()) {
                    let beta = (grad.dot(&(&grad - pg)) / pg.norm_squared()).max(0.0);
                    dir += pd * beta;
                    // restart on loss of descent
                    if dir.dot(&grad) >= -1e-12 * dir.norm() * gnorm {
                        dir = -&grad;
                    }
                }
                let step = if prev_direction.is_none() {
                    opts.initial_step / gnorm.max(1.0)
                } else {
                    (prev_step * 2.0).min(1.0_f64.max(prev_step))
                };
                (dir, step)
            }
            Method::Bfgs => (-(&inv_hessian * &grad), opts.initial_step),
            _ => unreachable!(),
        };

        let slope = direction.dot(&grad);
        if slope >= 0.0 {
            return stage_outcome(method, x, value, gnorm, iteration, Termination::Stagnation);
        }
        let mut merit = |p: &DVector<f64>| objective.value(p);
        match line_search(&mut merit, &x, value, slope, &direction, initial_step) {
            SearchOutcome::Accepted {
                step,
                x: x_new,
                value: v_new,
            } => {
                let (_, g_new) = match objective.value_grad(&x_new) {
                    Ok(vg) => vg,
                    Err(e) => {
                        let term = if e.is_collision() {
                            Termination::CollisionAbort
                        } else {
                            Termination::Stagnation
                        };
                        return stage_outcome(method, x, value, gnorm, iteration, term);
                    }
                };
                if method == Method::Bfgs {
                    let s = &x_new - &x;
                    let y = &g_new - &grad;
                    let sy = s.dot(&y);
                    // cautious update: skip when the curvature condition fails
                    if sy > 1e-10 * s.norm() * y.norm() {
                        if !bfgs_scaled {
                            let scale = sy / y.norm_squared();
                            inv_hessian *= scale;
                            bfgs_scaled = true;
                        }
                        let hy = &inv_hessian * &y;
                        let yhy = y.dot(&hy);
                        let c1 = (sy + yhy) / (sy * sy);
                        for r in 0..dim {
                            for c in 0..dim {
                                inv_hessian[(r, c)] += c1 * s[r] * s[c]
                                    - (hy[r] * s[c] + s[r] * hy[c]) / sy;
                            }
                        }
                    }
                }
                prev_grad = Some(std::mem::replace(&mut grad, g_new));
                prev_direction = Some(direction);
                prev_step = step;
                x = x_new;
                value = v_new;
            }
            SearchOutcome::Exhausted { saw_collision } => {
                let term = if saw_collision {
                    Termination::CollisionAbort
                } else {
                    Termination::Stagnation
                };
                return stage_outcome(method, x, value, gnorm, iteration, term);
            }
            SearchOutcome::Failed => {
                return stage_outcome(
                    method,
                    x,
                    value,
                    gnorm,
                    iteration,
                    Termination::Stagnation,
                );
            }
        }
    }
    unreachable!("loop returns before exhausting the iteration range");
}

/// Solves H d = -g restricted to the projector range: eigen-directions with
/// |λ| below a relative floor are null directions of the composite
/// projector (or internal degeneracies) and are excluded, pseudo-inverse
/// style. Returns `None` when the restricted system is singular.
pub fn newton_step_direction(
    hessian: &DMatrix<f64>,
    gradient: &DVector<f64>,
) -> Option<DVector<f64>> {
    let eig = hessian.clone().symmetric_eigen();
    let max_abs = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, &l| acc.max(l.abs()));
    if max_abs == 0.0 {
        return None;
    }
    let floor = EIG_NULL_REL * max_abs;
    let mut direction = DVector::zeros(gradient.len());
    let mut used = 0;
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= floor {
            continue;
        }
        used += 1;
        let v = eig.eigenvectors.column(j);
        let coeff = v.dot(gradient) / lambda;
        direction.axpy(-coeff, &v.clone_owned(), 1.0);
    }
    (used > 0).then_some(direction)
}

/// Newton iteration with a line search on the merit ½‖∇A‖²; targets
/// critical points of any Morse index.
fn newton_linesearch(
    objective: &dyn Objective,
    x0: &DVector<f64>,
    opts: &OptimizerOptions,
) -> StageOutcome {
    let method = Method::NewtonLineSearch;
    let mut x = x0.clone();
    let (mut value, mut grad, mut hess) = match objective.value_grad_hess(&x) {
        Ok(t) => t,
        Err(e) => {
            let term = if e.is_collision() {
                Termination::CollisionAbort
            } else {
                Termination::Stagnation
            };
            return stage_outcome(method, x, f64::NAN, f64::NAN, 0, term);
        }
    };
    for iteration in 0..=opts.max_iterations {
        let gnorm = grad.norm();
        if gnorm < opts.gradient_tolerance {
            return stage_outcome(method, x, value, gnorm, iteration, Termination::Converged);
        }
        if iteration == opts.max_iterations {
            return stage_outcome(
                method,
                x,
                value,
                gnorm,
                iteration,
                Termination::MaxIterations,
            );
        }
        let Some(direction) = newton_step_direction(&hess, &grad) else {
            return stage_outcome(method, x, value, gnorm, iteration, Termination::Stagnation);
        };
        // merit m = ½‖∇A‖²; ∇m = H g, so the Newton direction has slope
        // -gᵀ(restricted)g <= 0
        let merit0 = 0.5 * gnorm * gnorm;
        let slope = (&hess * &grad).dot(&direction);
        let slope = slope.min(-1e-16 * merit0.max(1.0));
        let mut merit = |p: &DVector<f64>| {
            objective
                .value_grad(p)
                .map(|(_, g)| 0.5 * g.norm_squared())
        };
        match line_search(&mut merit, &x, merit0, slope, &direction, 1.0) {
            SearchOutcome::Accepted { x: x_new, .. } => {
                match objective.value_grad_hess(&x_new) {
                    Ok((v, g, h)) => {
                        x = x_new;
                        value = v;
                        grad = g;
                        hess = h;
                    }
                    Err(e) => {
                        let term = if e.is_collision() {
                            Termination::CollisionAbort
                        } else {
                            Termination::Stagnation
                        };
                        return stage_outcome(method, x, value, gnorm, iteration, term);
                    }
                }
            }
            SearchOutcome::Exhausted { saw_collision } => {
                let term = if saw_collision {
                    Termination::CollisionAbort
                } else {
                    Termination::Stagnation
                };
                return stage_outcome(method, x, value, gnorm, iteration, term);
            }
            SearchOutcome::Failed => {
                return stage_outcome(
                    method,
                    x,
                    value,
                    gnorm,
                    iteration,
                    Termination::Stagnation,
                );
            }
        }
    }
    unreachable!()
}

/// Trust-region Newton on ∇A = 0: steps are clamped to the radius and only
/// accepted when the gradient norm strictly decreases, so ‖∇A‖ never
/// increases between accepted steps.
fn newton_trust_region(
    objective: &dyn Objective,
    x0: &DVector<f64>,
    opts: &OptimizerOptions,
) -> StageOutcome {
    let method = Method::NewtonTrustRegion;
    let mut x = x0.clone();
    let mut radius = opts.trust_radius;
    let (mut value, mut grad, mut hess) = match objective.value_grad_hess(&x) {
        Ok(t) => t,
        Err(e) => {
            let term = if e.is_collision() {
                Termination::CollisionAbort
            } else {
                Termination::Stagnation
            };
            return stage_outcome(method, x, f64::NAN, f64::NAN, 0, term);
        }
    };
    const MAX_REJECTS: usize = 30;
    for iteration in 0..=opts.max_iterations {
        let gnorm = grad.norm();
        if gnorm < opts.gradient_tolerance {
            return stage_outcome(method, x, value, gnorm, iteration, Termination::Converged);
        }
        if iteration == opts.max_iterations {
            return stage_outcome(
                method,
                x,
                value,
                gnorm,
                iteration,
                Termination::MaxIterations,
            );
        }
        let Some(newton_dir) = newton_step_direction(&hess, &grad) else {
            return stage_outcome(method, x, value, gnorm, iteration, Termination::Stagnation);
        };
        let mut accepted = false;
        for _ in 0..MAX_REJECTS {
            let mut step = newton_dir.clone();
            let len = step.norm();
            let clamped = len > radius;
            if clamped {
                step *= radius / len;
            }
            let trial = &x + &step;
            match objective.value_grad_hess(&trial) {
                Ok((v, g, h)) if g.norm() < gnorm => {
                    x = trial;
                    value = v;
                    grad = g;
                    hess = h;
                    if !clamped {
                        radius = (radius * 2.0).min(1e6);
                    }
                    accepted = true;
                    break;
                }
                Ok(_) => radius *= 0.25,
                Err(e) if e.is_collision() => radius *= 0.25,
                Err(_) => {
                    return stage_outcome(
                        method,
                        x,
                        value,
                        gnorm,
                        iteration,
                        Termination::Stagnation,
                    );
                }
            }
        }
        if !accepted {
            return stage_outcome(method, x, value, gnorm, iteration, Termination::Stagnation);
        }
    }
    unreachable!()
}
