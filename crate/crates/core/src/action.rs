//! The restricted action, its gradient and Hessian over flattened
//! coefficients: an exact kinetic quadratic form plus numerically integrated
//! potential terms.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::group::SymmetryProblem;
use crate::path::{reconstruct_nth, BasisTables, CoeffLayout, PathCoefficients};
use crate::potential::PotentialModel;
use crate::projectors::CoefficientProjector;

/// Closed-form integrals of the basis b_0 = 1 - t/π, b_k = sin(kt),
/// b_{F+1} = t/π over [0, π]:
///
/// * `lin[j][k]   =  ∫ b_j' b_k' dt`
/// * `centr[j][k] = -∫ b_j b_k dt`
/// * `cor[j][k]   =  ∫ (b_j' b_k - b_j b_k') dt`
pub struct KineticScalarBlocks {
    pub lin: DMatrix<f64>,
    pub centr: DMatrix<f64>,
    pub cor: DMatrix<f64>,
}

pub fn kinetic_scalar_blocks(fourier_modes: usize) -> KineticScalarBlocks {
    let f = fourier_modes;
    let last = f + 1;
    let size = f + 2;
    let mut lin = DMatrix::zeros(size, size);
    let mut centr = DMatrix::zeros(size, size);
    let mut cor = DMatrix::zeros(size, size);

    lin[(0, 0)] = 1.0 / PI;
    lin[(last, last)] = 1.0 / PI;
    lin[(0, last)] = -1.0 / PI;
    lin[(last, 0)] = -1.0 / PI;

    centr[(0, 0)] = -PI / 3.0;
    centr[(last, last)] = -PI / 3.0;
    centr[(0, last)] = -PI / 6.0;
    centr[(last, 0)] = -PI / 6.0;

    cor[(0, last)] = -1.0;
    cor[(last, 0)] = 1.0;

    for k in 1..=f {
        let kf = k as f64;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let odd = if k % 2 == 1 { 2.0 } else { 0.0 };
        lin[(k, k)] = kf * kf * PI / 2.0;
        centr[(k, k)] = -PI / 2.0;
        centr[(0, k)] = -1.0 / kf;
        centr[(k, 0)] = -1.0 / kf;
        centr[(last, k)] = sign / kf;
        centr[(k, last)] = sign / kf;
        cor[(0, k)] = -2.0 * odd / (PI * kf);
        cor[(k, 0)] = 2.0 * odd / (PI * kf);
        cor[(last, k)] = 2.0 * odd / (PI * kf);
        cor[(k, last)] = -2.0 * odd / (PI * kf);
        for j in 1..=f {
            if j != k && (j + k) % 2 == 1 {
                let jf = j as f64;
                cor[(j, k)] = 4.0 * jf * kf / (kf * kf - jf * jf);
            }
        }
    }

    KineticScalarBlocks { lin, centr, cor }
}

/// Reduced mass matrix over the n-1 free bodies after folding in the
/// center-of-mass constraint: M̃_ij = m_i δ_ij + m_i m_j / m_n.
pub fn reduced_mass_matrix(masses: &[f64]) -> DMatrix<f64> {
    let n = masses.len();
    let mn = masses[n - 1];
    let mut m = DMatrix::zeros(n - 1, n - 1);
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            m[(i, j)] = masses[i] * masses[j] / mn;
        }
        m[(i, i)] += masses[i];
    }
    m
}

/// The full quadratic form of the kinetic part over flattened coefficients.
/// ½ Aᵀ K A equals the time integral of ½ Σ m_i ‖ẏ_i - Ω y_i‖² along the
/// reconstructed n-body path; the gradient is K·A and the Hessian is K.
#[derive(Debug, Clone)]
pub struct KineticForm {
    matrix: DMatrix<f64>,
}

impl KineticForm {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn value(&self, coeffs: &DVector<f64>) -> f64 {
        0.5 * coeffs.dot(&(&self.matrix * coeffs))
    }

    pub fn gradient(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.matrix * coeffs
    }
}

/// Kronecker assembly of the kinetic form:
/// K = lin ⊗ M̃ ⊗ I_d + centr ⊗ M̃ ⊗ Ω² - cor ⊗ M̃ ⊗ Ω.
/// The Coriolis sign is fixed by requiring the assembled form to reproduce
/// the expanded rotating-frame kinetic energy (checked against quadrature
/// in the tests).
pub fn assemble_kinetic(problem: &SymmetryProblem) -> KineticForm {
    let layout = CoeffLayout::of(problem);
    let blocks = kinetic_scalar_blocks(problem.fourier_modes());
    let mred = reduced_mass_matrix(problem.masses());
    let d = problem.dim();
    let omega = problem.omega();
    let omega2 = omega * omega;
    let eye = DMatrix::<f64>::identity(d, d);
    let nb = layout.blocks();
    let nf = layout.free_bodies;

    let mut k = DMatrix::zeros(layout.len(), layout.len());
    for kb in 0..nb {
        for lb in 0..nb {
            let lin = blocks.lin[(kb, lb)];
            let centr = blocks.centr[(kb, lb)];
            let cor = blocks.cor[(kb, lb)];
            if lin == 0.0 && centr == 0.0 && cor == 0.0 {
                continue;
            }
            for i in 0..nf {
                for j in 0..nf {
                    let mij = mred[(i, j)];
                    for a in 0..d {
                        for b in 0..d {
                            let spatial = lin * eye[(a, b)] + centr * omega2[(a, b)]
                                - cor * omega[(a, b)];
                            if spatial != 0.0 {
                                k[(layout.idx(kb, i, a), layout.idx(lb, j, b))] +=
                                    mij * spatial;
                            }
                        }
                    }
                }
            }
        }
    }
    KineticForm { matrix: k }
}

/// Pointwise potential data at one configuration.
pub struct PotentialPoint {
    pub value: f64,
    /// ∂U/∂y_i per body, n×d; present when requested.
    pub gradient: Option<DMatrix<f64>>,
    /// Full (n·d)×(n·d) second derivative; present when requested.
    pub hessian: Option<DMatrix<f64>>,
    pub min_distance: f64,
}

/// U(y) = Σ_{i<j} m_i m_j / f(‖y_i - y_j‖) with its derivatives.
///
/// The mixed second-derivative block for a pair is
/// (m_i m_j / (f² r²)) [ (y_ij ⊗ y_ij)(f'' - f'/r - 2 f'²/f) + (f'·r) I ];
/// diagonal blocks accumulate the negatives over partners.
pub fn potential_point(
    y: &DMatrix<f64>,
    model: &PotentialModel,
    masses: &[f64],
    want_gradient: bool,
    want_hessian: bool,
) -> Result<PotentialPoint> {
    let n = y.nrows();
    let d = y.ncols();
    let mut value = 0.0;
    let mut gradient = want_gradient.then(|| DMatrix::zeros(n, d));
    let mut hessian = want_hessian.then(|| DMatrix::zeros(n * d, n * d));
    let mut min_distance = f64::INFINITY;

    let interacting = !model.is_none();
    let mut rvec = vec![0.0; d];
    for i in 0..n {
        for j in i + 1..n {
            let mut r2 = 0.0;
            for (a, rv) in rvec.iter_mut().enumerate() {
                *rv = y[(i, a)] - y[(j, a)];
                r2 += *rv * *rv;
            }
            let r = r2.sqrt();
            min_distance = min_distance.min(r);
            if !interacting {
                continue;
            }
            if r < model.collision_tolerance {
                return Err(Error::Collision {
                    sample: 0,
                    i,
                    j,
                    tol: model.collision_tolerance,
                });
            }
            let (f, df, ddf) = model.eval(r);
            let mm = masses[i] * masses[j];
            value += mm / f;
            if let Some(grad) = gradient.as_mut() {
                let scale = -mm * df / (f * f) / r;
                for (a, rv) in rvec.iter().enumerate() {
                    grad[(i, a)] += scale * rv;
                    grad[(j, a)] -= scale * rv;
                }
            }
            if let Some(hess) = hessian.as_mut() {
                let pref = mm / (f * f * r2);
                let aniso = ddf - df / r - 2.0 * df * df / f;
                let iso = df * r;
                for a in 0..d {
                    for b in 0..d {
                        let block = pref
                            * (rvec[a] * rvec[b] * aniso + if a == b { iso } else { 0.0 });
                        hess[(i * d + a, j * d + b)] += block;
                        hess[(j * d + a, i * d + b)] += block;
                        hess[(i * d + a, i * d + b)] -= block;
                        hess[(j * d + a, j * d + b)] -= block;
                    }
                }
            }
        }
    }
    Ok(PotentialPoint {
        value,
        gradient,
        hessian,
        min_distance,
    })
}

fn kinetic_inverse_on_subspace(
    kinetic: &KineticForm,
    projector: &CoefficientProjector,
) -> DMatrix<f64> {
    let projected = projector.project_hessian(kinetic.matrix());
    let n = projected.nrows();
    let eig = projected.symmetric_eigen();
    let mut out = DMatrix::zeros(n, n);
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let inv = 1.0 / lambda.max(1.0);
        let v = eig.eigenvectors.column(j);
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += inv * v[r] * v[c];
            }
        }
    }
    out
}

/// How much of the derivative information an evaluation should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalOrder {
    Value,
    Gradient,
    Hessian,
}

/// One action evaluation.
pub struct ActionEval {
    pub value: f64,
    pub gradient: Option<DVector<f64>>,
    pub hessian: Option<DMatrix<f64>>,
}

/// Evaluates the restricted action ½AᵀKA + ∫ U(y(t)) dt on the fundamental
/// domain, with composite-trapezoid quadrature on the S+1 grid. Gradients
/// and Hessians are chained through the n-th-body reconstruction and handed
/// back already projected.
pub struct ActionEvaluator {
    problem: Arc<SymmetryProblem>,
    samples: usize,
    basis: BasisTables,
    kinetic: KineticForm,
    projector: CoefficientProjector,
    layout: CoeffLayout,
    preconditioner: DMatrix<f64>,
}

impl ActionEvaluator {
    pub fn new(problem: Arc<SymmetryProblem>, samples: usize) -> Result<Self> {
        let layout = CoeffLayout::of(&problem);
        if samples < 2 * layout.fourier_modes.max(1) {
            return Err(Error::Alias {
                s: samples,
                f: layout.fourier_modes,
            });
        }
        let basis = BasisTables::new(layout.fourier_modes, samples);
        let kinetic = assemble_kinetic(&problem);
        let projector = CoefficientProjector::for_problem(&problem)?;
        let preconditioner = kinetic_inverse_on_subspace(&kinetic, &projector);
        Ok(ActionEvaluator {
            problem,
            samples,
            basis,
            kinetic,
            projector,
            layout,
            preconditioner,
        })
    }

    /// Inverse of the projected kinetic form, with eigenvalues floored at
    /// one so the directions the quadratic form leaves flat (constant
    /// shifts, potential-dominated modes) keep unit scaling.
    pub fn kinetic_preconditioner(&self) -> &DMatrix<f64> {
        &self.preconditioner
    }

    pub fn for_problem(problem: &SymmetryProblem) -> Result<Self> {
        Self::new(Arc::new(problem.clone()), problem.samples())
    }

    pub fn problem(&self) -> &SymmetryProblem {
        &self.problem
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn layout(&self) -> CoeffLayout {
        self.layout
    }

    pub fn projector(&self) -> &CoefficientProjector {
        &self.projector
    }

    pub fn kinetic(&self) -> &KineticForm {
        &self.kinetic
    }

    pub fn basis(&self) -> &BasisTables {
        &self.basis
    }

    pub fn eval(&self, coeffs: &DVector<f64>, order: EvalOrder) -> Result<ActionEval> {
        let want_grad = order != EvalOrder::Value;
        let want_hess = order == EvalOrder::Hessian;
        let n = self.problem.bodies();
        let d = self.problem.dim();
        let nf = n - 1;
        let masses = self.problem.masses();
        let model = self.problem.potential();

        let mut value = self.kinetic.value(coeffs);
        let mut gradient = want_grad.then(|| self.kinetic.gradient(coeffs));
        let mut hessian = want_hess.then(|| self.kinetic.matrix().clone());

        if !model.is_none() {
            let blocks = self.layout.blocks();
            let mut free = DMatrix::zeros(nf, d);
            let mut reduced_grad = vec![0.0; nf * d];
            let mut reduced_hess = DMatrix::zeros(nf * d, nf * d);
            for h in 0..=self.samples {
                free.fill(0.0);
                for k in 0..blocks {
                    let w = self.basis.value[(k, h)];
                    if w == 0.0 {
                        continue;
                    }
                    for i in 0..nf {
                        for a in 0..d {
                            free[(i, a)] += w * coeffs[self.layout.idx(k, i, a)];
                        }
                    }
                }
                let full = reconstruct_nth(&free, masses);
                let point = potential_point(&full, model, masses, want_grad, want_hess)
                    .map_err(|e| match e {
                        Error::Collision { i, j, tol, .. } => Error::Collision {
                            sample: h,
                            i,
                            j,
                            tol,
                        },
                        other => other,
                    })?;
                let wq = self.basis.weights[h];
                value += wq * point.value;

                if let (Some(grad), Some(pg)) = (gradient.as_mut(), point.gradient.as_ref())
                {
                    // chain rule through the reconstruction:
                    // ĝ_i = G_i - (m_i / m_n) G_n
                    for i in 0..nf {
                        let ci = masses[i] / masses[n - 1];
                        for a in 0..d {
                            reduced_grad[i * d + a] = pg[(i, a)] - ci * pg[(n - 1, a)];
                        }
                    }
                    for k in 0..blocks {
                        let w = wq * self.basis.value[(k, h)];
                        if w == 0.0 {
                            continue;
                        }
                        for (p, rg) in reduced_grad.iter().enumerate() {
                            grad[k * nf * d + p] += w * rg;
                        }
                    }
                }

                if let (Some(hess), Some(ph)) = (hessian.as_mut(), point.hessian.as_ref()) {
                    for i in 0..nf {
                        let ci = masses[i] / masses[n - 1];
                        for a in 0..d {
                            for j in 0..nf {
                                let cj = masses[j] / masses[n - 1];
                                for b in 0..d {
                                    reduced_hess[(i * d + a, j * d + b)] = ph
                                        [(i * d + a, j * d + b)]
                                        - cj * ph[(i * d + a, (n - 1) * d + b)]
                                        - ci * ph[((n - 1) * d + a, j * d + b)]
                                        + ci * cj * ph[((n - 1) * d + a, (n - 1) * d + b)];
                                }
                            }
                        }
                    }
                    let block_len = nf * d;
                    for k in 0..blocks {
                        let wk = self.basis.value[(k, h)];
                        if wk == 0.0 {
                            continue;
                        }
                        for l in 0..blocks {
                            let w = wq * wk * self.basis.value[(l, h)];
                            if w == 0.0 {
                                continue;
                            }
                            for p in 0..block_len {
                                for q in 0..block_len {
                                    hess[(k * block_len + p, l * block_len + q)] +=
                                        w * reduced_hess[(p, q)];
                                }
                            }
                        }
                    }
                }
            }
        }

        let gradient = gradient.map(|g| self.projector.project_gradient(&g));
        let hessian = hessian.map(|h| self.projector.project_hessian(&h));
        Ok(ActionEval {
            value,
            gradient,
            hessian,
        })
    }

    pub fn value(&self, coeffs: &DVector<f64>) -> Result<f64> {
        Ok(self.eval(coeffs, EvalOrder::Value)?.value)
    }

    pub fn value_grad(&self, coeffs: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let out = self.eval(coeffs, EvalOrder::Gradient)?;
        Ok((out.value, out.gradient.unwrap()))
    }

    pub fn value_grad_hess(
        &self,
        coeffs: &DVector<f64>,
    ) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let out = self.eval(coeffs, EvalOrder::Hessian)?;
        Ok((out.value, out.gradient.unwrap(), out.hessian.unwrap()))
    }

    /// Projects a coefficient vector into the feasible subspace.
    pub fn project(&self, coeffs: &PathCoefficients) -> PathCoefficients {
        self.projector.project_coefficients(coeffs)
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::group::tests::{d6_generators, d6_problem, d6_problem_with_modes};
    use crate::group::{GroupElement, SymmetryProblem, SymmetryProblemSpec};
    use crate::path::{extend_to_period_with_velocity, fit_coefficients};
    use crate::projectors::{embedding_matrix, restriction_matrix};

    /// Adaptive Simpson quadrature, independent of the closed forms it
    /// checks. Subdivision starts from 64 uniform panels so oscillatory
    /// integrands cannot alias to zero on the initial sample points.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, panel_tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: usize,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, tol / 2.0, depth - 1)
                    + recurse(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        let panels = 64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + (b - a) * p as f64 / panels as f64;
            let hi = a + (b - a) * (p + 1) as f64 / panels as f64;
            total += recurse(f, lo, hi, simpson(f, lo, hi), panel_tol, 20);
        }
        total
    }

    /// Basis functions written down independently of `BasisTables`.
    fn basis_fn(f: usize, j: usize, t: f64) -> f64 {
        if j == 0 {
            1.0 - t / PI
        } else if j == f + 1 {
            t / PI
        } else {
            (j as f64 * t).sin()
        }
    }

    fn basis_fn_deriv(f: usize, j: usize, t: f64) -> f64 {
        if j == 0 {
            -1.0 / PI
        } else if j == f + 1 {
            1.0 / PI
        } else {
            j as f64 * (j as f64 * t).cos()
        }
    }

    pub(crate) fn kinetic_blocks_match_quadrature(fourier_modes: usize, tol: f64) {
        let f = fourier_modes;
        let blocks = kinetic_scalar_blocks(f);
        for j in 0..f + 2 {
            for k in 0..f + 2 {
                let lin = adaptive_simpson(
                    &|t| basis_fn_deriv(f, j, t) * basis_fn_deriv(f, k, t),
                    0.0,
                    PI,
                    1e-13,
                );
                let centr = -adaptive_simpson(
                    &|t| basis_fn(f, j, t) * basis_fn(f, k, t),
                    0.0,
                    PI,
                    1e-13,
                );
                let cor = adaptive_simpson(
                    &|t| {
                        basis_fn_deriv(f, j, t) * basis_fn(f, k, t)
                            - basis_fn(f, j, t) * basis_fn_deriv(f, k, t)
                    },
                    0.0,
                    PI,
                    1e-13,
                );
                assert!(
                    (blocks.lin[(j, k)] - lin).abs() < tol,
                    "lin[{j},{k}]: closed {} vs quadrature {lin}",
                    blocks.lin[(j, k)]
                );
                assert!(
                    (blocks.centr[(j, k)] - centr).abs() < tol,
                    "centr[{j},{k}]: closed {} vs quadrature {centr}",
                    blocks.centr[(j, k)]
                );
                assert!(
                    (blocks.cor[(j, k)] - cor).abs() < tol,
                    "cor[{j},{k}]: closed {} vs quadrature {cor}",
                    blocks.cor[(j, k)]
                );
            }
        }
    }

    #[test]
    fn kinetic_blocks_against_quadrature_oracle() {
        kinetic_blocks_match_quadrature(6, 1e-10);
    }

    #[test]
    fn kinetic_block_spot_values() {
        let blocks = kinetic_scalar_blocks(3);
        // sine-sine: diagonal k² π/2, off-diagonal zero; sine-segment zero
        assert!((blocks.lin[(2, 2)] - 4.0 * PI / 2.0).abs() < 1e-14);
        assert_eq!(blocks.lin[(1, 2)], 0.0);
        assert_eq!(blocks.lin[(0, 2)], 0.0);
        // segment-segment 2x2: 1/π diagonal, -1/π off-diagonal
        assert!((blocks.lin[(0, 0)] - 1.0 / PI).abs() < 1e-15);
        assert!((blocks.lin[(0, 4)] + 1.0 / PI).abs() < 1e-15);
    }

    fn trivial_problem(
        bodies: usize,
        fourier_modes: usize,
        masses: Vec<f64>,
        omega: DMatrix<f64>,
    ) -> SymmetryProblem {
        SymmetryProblemSpec {
            masses,
            omega,
            ..SymmetryProblemSpec::unconstrained("free", bodies, 2, fourier_modes)
        }
        .validate()
        .unwrap()
    }

    fn random_coeffs(layout: crate::path::CoeffLayout, seed: u64) -> PathCoefficients {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = PathCoefficients::zeros(layout);
        for v in c.flat_mut().iter_mut() {
            *v = rng.gen_range(-1.0..=1.0);
        }
        c
    }

    #[test]
    fn reduced_mass_of_equal_pair_doubles() {
        let m = reduced_mass_matrix(&[1.0, 1.0]);
        assert_eq!(m.nrows(), 1);
        assert!((m[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn straight_segment_kinetic_cost_is_exact() {
        // F = 0, Ω = 0: only the segment block survives and the action of a
        // straight segment is the exact two-point cost ‖Δ‖²/π
        let problem = trivial_problem(2, 0, vec![1.0, 1.0], DMatrix::zeros(2, 2));
        let kinetic = assemble_kinetic(&problem);
        let layout = crate::path::CoeffLayout::of(&problem);
        let mut coeffs = PathCoefficients::zeros(layout);
        coeffs.set(0, 0, 0, 0.25);
        coeffs.set(0, 0, 1, -1.0);
        coeffs.set(1, 0, 0, 1.25);
        coeffs.set(1, 0, 1, 0.5);
        let delta = [1.0, 1.5];
        let expected = (delta[0] * delta[0] + delta[1] * delta[1]) / PI;
        assert!((kinetic.value(coeffs.flat()) - expected).abs() < 1e-13);
    }

    /// Trapezoid quadrature of the rotating-frame kinetic energy of the
    /// reconstructed n-body path, as an independent oracle for the
    /// assembled quadratic form.
    fn kinetic_energy_quadrature(
        problem: &SymmetryProblem,
        coeffs: &PathCoefficients,
        s: usize,
    ) -> f64 {
        let (path, velocity) =
            crate::path::build_path_with_velocity(coeffs, s, problem).unwrap();
        let omega = problem.omega();
        let mut total = 0.0;
        let dt = PI / s as f64;
        for h in 0..=s {
            let w = if h == 0 || h == s { 0.5 * dt } else { dt };
            let mut energy = 0.0;
            for i in 0..problem.bodies() {
                for a in 0..problem.dim() {
                    let mut v = velocity[h][(i, a)];
                    for b in 0..problem.dim() {
                        v -= omega[(a, b)] * path.samples[h][(i, b)];
                    }
                    energy += 0.5 * problem.masses()[i] * v * v;
                }
            }
            total += w * energy;
        }
        total
    }

    #[test]
    fn assembled_form_matches_energy_quadrature_without_rotation() {
        let problem = trivial_problem(3, 3, vec![1.0, 2.0, 0.5], DMatrix::zeros(2, 2));
        let kinetic = assemble_kinetic(&problem);
        let coeffs = random_coeffs(crate::path::CoeffLayout::of(&problem), 5);
        let exact = kinetic.value(coeffs.flat());
        let quad = kinetic_energy_quadrature(&problem, &coeffs, 4096);
        assert!(
            (exact - quad).abs() < 1e-6 * exact.abs().max(1.0),
            "exact {exact} vs quadrature {quad}"
        );
    }

    #[test]
    fn assembled_form_matches_energy_quadrature_with_rotation() {
        let omega = DMatrix::from_row_slice(2, 2, &[0.0, -0.7, 0.7, 0.0]);
        let problem = trivial_problem(3, 3, vec![1.0, 2.0, 0.5], omega);
        let kinetic = assemble_kinetic(&problem);
        let coeffs = random_coeffs(crate::path::CoeffLayout::of(&problem), 6);
        let exact = kinetic.value(coeffs.flat());
        let quad = kinetic_energy_quadrature(&problem, &coeffs, 4096);
        assert!(
            (exact - quad).abs() < 1e-6 * exact.abs().max(1.0),
            "exact {exact} vs quadrature {quad}"
        );
    }

    #[test]
    fn kinetic_form_is_symmetric() {
        let omega = DMatrix::from_row_slice(2, 2, &[0.0, 1.3, -1.3, 0.0]);
        let problem = trivial_problem(3, 4, vec![1.0, 1.0, 1.0], omega);
        let kinetic = assemble_kinetic(&problem);
        let defect = (kinetic.matrix() - kinetic.matrix().transpose()).abs().max();
        assert!(defect < 1e-12);
    }

    #[test]
    fn potential_point_two_body_example() {
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let model = PotentialModel::newtonian();
        let point = potential_point(&y, &model, &[1.0, 1.0], true, false).unwrap();
        assert!((point.value - 1.0).abs() < 1e-15);
        let grad = point.gradient.unwrap();
        assert!((grad[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(grad[(0, 1)].abs() < 1e-14);
        assert!((grad[(1, 0)] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn potential_scales_inversely_with_distance() {
        let model = PotentialModel::newtonian();
        let y = DMatrix::from_row_slice(2, 2, &[0.3, -0.4, -0.2, 0.9]);
        let base = potential_point(&y, &model, &[1.0, 1.0], false, false)
            .unwrap()
            .value;
        let scaled = potential_point(&(&y * 2.5), &model, &[1.0, 1.0], false, false)
            .unwrap()
            .value;
        assert!((scaled - base / 2.5).abs() < 1e-14);
    }

    #[test]
    fn potential_gradient_sums_to_zero_over_bodies() {
        let model = PotentialModel::power(1.3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = DMatrix::from_fn(4, 3, |_, _| rng.gen_range(-1.0..=1.0));
        let masses = [1.0, 2.0, 0.7, 1.1];
        let grad = potential_point(&y, &model, &masses, true, false)
            .unwrap()
            .gradient
            .unwrap();
        for a in 0..3 {
            let total: f64 = (0..4).map(|i| grad[(i, a)]).sum();
            assert!(total.abs() < 1e-12, "translation invariance violated");
        }
    }

    #[test]
    fn potential_gradient_matches_finite_differences() {
        let model = PotentialModel::newtonian();
        let masses = [1.0, 2.0, 0.5];
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let y = DMatrix::from_fn(3, 2, |_, _| rng.gen_range(-1.0..=1.0));
        let point = potential_point(&y, &model, &masses, true, true).unwrap();
        let grad = point.gradient.unwrap();
        let hess = point.hessian.unwrap();
        let eps = 1e-6;
        for i in 0..3 {
            for a in 0..2 {
                let mut plus = y.clone();
                plus[(i, a)] += eps;
                let mut minus = y.clone();
                minus[(i, a)] -= eps;
                let vp = potential_point(&plus, &model, &masses, true, false).unwrap();
                let vm = potential_point(&minus, &model, &masses, true, false).unwrap();
                let fd = (vp.value - vm.value) / (2.0 * eps);
                assert!(
                    (grad[(i, a)] - fd).abs() < 1e-7 * (1.0 + fd.abs()),
                    "gradient[{i},{a}]"
                );
                // columns of the Hessian against gradient differences
                let gp = vp.gradient.unwrap();
                let gm = vm.gradient.unwrap();
                for j in 0..3 {
                    for b in 0..2 {
                        let fd2 = (gp[(j, b)] - gm[(j, b)]) / (2.0 * eps);
                        assert!(
                            (hess[(j * 2 + b, i * 2 + a)] - fd2).abs()
                                < 1e-5 * (1.0 + fd2.abs()),
                            "hessian[({j},{b}),({i},{a})]"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn collision_detected_below_tolerance() {
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1e-12, 0.0]);
        let model = PotentialModel::newtonian();
        match potential_point(&y, &model, &[1.0, 1.0], false, false) {
            Err(Error::Collision { i: 0, j: 1, .. }) => {}
            Err(other) => panic!("expected collision, got {other:?}"),
            Ok(_) => panic!("expected collision, got a value"),
        }
    }

    #[test]
    fn zero_potential_action_is_pure_kinetic() {
        let problem = SymmetryProblemSpec {
            potential: PotentialModel::none(),
            ..SymmetryProblemSpec::unconstrained("free", 2, 2, 4)
        }
        .validate()
        .unwrap();
        let evaluator = ActionEvaluator::new(Arc::new(problem), 64).unwrap();
        let coeffs = random_coeffs(evaluator.layout(), 3);
        let value = evaluator.value(coeffs.flat()).unwrap();
        assert_eq!(value, evaluator.kinetic().value(coeffs.flat()));
    }

    /// Random projected coefficients whose path keeps the bodies apart, so
    /// finite-difference truncation stays far below the comparison
    /// tolerance.
    pub(crate) fn well_separated_coeffs(
        evaluator: &ActionEvaluator,
        seed: u64,
        min_distance: f64,
    ) -> DVector<f64> {
        for attempt in 0..100 {
            let raw = random_coeffs(evaluator.layout(), seed + 1000 * attempt);
            let coeffs = evaluator.projector().project_flat(raw.flat());
            let path = crate::path::build_path(
                &PathCoefficients::from_flat(evaluator.layout(), coeffs.clone()).unwrap(),
                evaluator.samples(),
                evaluator.problem(),
            )
            .unwrap();
            let separated = path.samples.iter().all(|y| {
                potential_point(y, &PotentialModel::none(), evaluator.problem().masses(), false, false)
                    .unwrap()
                    .min_distance
                    >= min_distance
            });
            if separated {
                return coeffs;
            }
        }
        panic!("no well-separated random path found");
    }

    /// Central finite differences evaluated through the projector, so both
    /// sides of the comparison live on the feasible subspace.
    pub(crate) fn fd_gradient(
        evaluator: &ActionEvaluator,
        coeffs: &DVector<f64>,
        eps: f64,
    ) -> DVector<f64> {
        let n = coeffs.len();
        let mut grad = DVector::zeros(n);
        for i in 0..n {
            let mut plus = coeffs.clone();
            plus[i] += eps;
            let mut minus = coeffs.clone();
            minus[i] -= eps;
            let vp = evaluator
                .value(&evaluator.projector().project_flat(&plus))
                .unwrap();
            let vm = evaluator
                .value(&evaluator.projector().project_flat(&minus))
                .unwrap();
            grad[i] = (vp - vm) / (2.0 * eps);
        }
        grad
    }

    #[test]
    fn action_gradient_matches_finite_differences() {
        let problem = d6_problem_with_modes(4);
        let evaluator = ActionEvaluator::new(Arc::new(problem), 64).unwrap();
        let mut worst: f64 = 0.0;
        for seed in 0..3 {
            let coeffs = well_separated_coeffs(&evaluator, 100 + seed, 0.3);
            let (_, grad) = evaluator.value_grad(&coeffs).unwrap();
            let fd = fd_gradient(&evaluator, &coeffs, 1e-6);
            for i in 0..coeffs.len() {
                worst = worst.max((grad[i] - fd[i]).abs() / (1.0 + grad[i].abs()));
            }
        }
        assert!(worst < 1e-6, "worst relative gradient error {worst}");
    }

    #[test]
    fn action_hessian_matches_finite_differences_and_is_symmetric() {
        let problem = d6_problem_with_modes(4);
        let evaluator = ActionEvaluator::new(Arc::new(problem), 48).unwrap();
        let coeffs = well_separated_coeffs(&evaluator, 7, 0.3);
        let (_, _, hess) = evaluator.value_grad_hess(&coeffs).unwrap();
        assert!((&hess - hess.transpose()).abs().max() < 1e-10);
        let eps = 1e-5;
        let mut worst: f64 = 0.0;
        for i in 0..coeffs.len() {
            let mut plus = coeffs.clone();
            plus[i] += eps;
            let mut minus = coeffs.clone();
            minus[i] -= eps;
            let (_, gp) = evaluator
                .value_grad(&evaluator.projector().project_flat(&plus))
                .unwrap();
            let (_, gm) = evaluator
                .value_grad(&evaluator.projector().project_flat(&minus))
                .unwrap();
            for j in 0..coeffs.len() {
                let fd = (gp[j] - gm[j]) / (2.0 * eps);
                worst = worst.max((hess[(j, i)] - fd).abs() / (1.0 + fd.abs()));
            }
        }
        assert!(worst < 1e-5, "worst relative Hessian error {worst}");
    }

    /// Time reversal on the fundamental domain: swap the endpoint blocks
    /// and flip the sign of the even sine modes.
    fn reverse_coefficients(coeffs: &DVector<f64>, layout: crate::path::CoeffLayout) -> DVector<f64> {
        let mut out = coeffs.clone();
        let block = layout.block_len();
        let last = layout.fourier_modes + 1;
        for p in 0..block {
            out[p] = coeffs[last * block + p];
            out[last * block + p] = coeffs[p];
        }
        for k in 1..=layout.fourier_modes {
            let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
            for p in 0..block {
                out[k * block + p] = sign * coeffs[k * block + p];
            }
        }
        out
    }

    /// Blockwise configuration action of a group element on reduced
    /// coefficients.
    fn blockwise_action(
        coeffs: &DVector<f64>,
        layout: crate::path::CoeffLayout,
        element: &GroupElement,
        masses: &[f64],
    ) -> DVector<f64> {
        let d = layout.dim;
        let reduced = restriction_matrix(masses.len(), d)
            * element.config_matrix()
            * embedding_matrix(masses, d);
        let block = layout.block_len();
        let mut out = DVector::zeros(coeffs.len());
        for k in 0..layout.blocks() {
            let slice = coeffs.rows(k * block, block).clone_owned();
            let mapped = &reduced * slice;
            out.rows_mut(k * block, block).copy_from(&mapped);
        }
        out
    }

    #[test]
    fn action_is_invariant_under_the_induced_group_maps() {
        let problem = d6_problem();
        let masses = problem.masses().to_vec();
        let evaluator = ActionEvaluator::new(Arc::new(problem.clone()), 96).unwrap();
        let layout = evaluator.layout();
        let raw = random_coeffs(layout, 77);
        let coeffs = evaluator.projector().project_flat(raw.flat());
        let base = evaluator.value(&coeffs).unwrap();

        let (rot, refl) = d6_generators();
        let id = GroupElement::identity(3, 2);
        let r2 = rot.compose(&rot).unwrap();
        let sr = refl.compose(&rot).unwrap();
        let sr2 = refl.compose(&r2).unwrap();
        // rotation-type elements act blockwise; reflection-type elements
        // additionally reverse time across the fundamental domain
        let cases: Vec<(GroupElement, bool)> = vec![
            (id, false),
            (rot, false),
            (r2, false),
            (refl, true),
            (sr, true),
            (sr2, true),
        ];
        for (element, reversed) in cases {
            let mut mapped = blockwise_action(&coeffs, layout, &element, &masses);
            if reversed {
                mapped = reverse_coefficients(&mapped, layout);
            }
            let value = evaluator.value(&mapped).unwrap();
            assert!(
                (value - base).abs() < 1e-10 * (1.0 + base.abs()),
                "element changed the action: {base} -> {value}"
            );
        }
    }

    #[test]
    fn projected_gradient_is_orthogonal_to_the_projector_kernel() {
        let problem = d6_problem_with_modes(4);
        let evaluator = ActionEvaluator::new(Arc::new(problem), 48).unwrap();
        let coeffs = well_separated_coeffs(&evaluator, 44, 0.3);
        let (_, grad) = evaluator.value_grad(&coeffs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let w = DVector::from_fn(coeffs.len(), |_, _| rng.gen_range(-1.0..=1.0));
            let kernel_part = &w - evaluator.projector().project_flat(&w);
            assert!(grad.dot(&kernel_part).abs() < 1e-10 * (1.0 + grad.norm()));
        }
    }

    #[test]
    fn kinetic_value_is_independent_of_sample_count() {
        let problem = SymmetryProblemSpec {
            potential: PotentialModel::none(),
            ..SymmetryProblemSpec::unconstrained("free", 2, 2, 4)
        }
        .validate()
        .unwrap();
        let coarse = ActionEvaluator::new(Arc::new(problem.clone()), 16).unwrap();
        let fine = ActionEvaluator::new(Arc::new(problem), 64).unwrap();
        let coeffs = random_coeffs(coarse.layout(), 15);
        let a = coarse.value(coeffs.flat()).unwrap();
        let b = fine.value(coeffs.flat()).unwrap();
        assert_eq!(a, b);
    }

    /// A smooth, well-separated three-body path under cyclic symmetry,
    /// used wherever the quadrature needs a collision-free integrand.
    fn smooth_cyclic_setup() -> (SymmetryProblem, PathCoefficients) {
        let rot = GroupElement::new(
            DMatrix::identity(2, 2),
            crate::group::Permutation::parse_cycles("(1,2,3)", 3).unwrap(),
        )
        .unwrap();
        let problem = SymmetryProblemSpec {
            action_type: crate::group::ActionType::Cyclic,
            rot_gen: rot,
            fourier_modes: 6,
            ..SymmetryProblemSpec::unconstrained("z3", 3, 2, 6)
        }
        .validate()
        .unwrap();
        let layout = crate::path::CoeffLayout::of(&problem);
        let fit_s = 128;
        let mut samples = Vec::with_capacity(fit_s + 1);
        for h in 0..=fit_s {
            // sweep matches the relabeling 1 -> 2 -> 3 of the generator, so
            // the boundary projector leaves the path intact
            let phase = -2.0 * PI / 3.0 * h as f64 / fit_s as f64;
            let mut cfg = DMatrix::zeros(2, 2);
            for i in 0..2 {
                let angle = 2.0 * PI * i as f64 / 3.0 + phase;
                cfg[(i, 0)] = angle.cos();
                cfg[(i, 1)] = angle.sin();
            }
            samples.push(cfg);
        }
        let coeffs = fit_coefficients(layout, &samples).unwrap();
        let projector = crate::projectors::CoefficientProjector::for_problem(&problem).unwrap();
        (problem.clone(), projector.project_coefficients(&coeffs))
    }

    #[test]
    fn quadrature_error_decays_at_second_order() {
        let (problem, coeffs) = smooth_cyclic_setup();
        let problem = Arc::new(problem);
        let value = |s: usize| {
            ActionEvaluator::new(problem.clone(), s)
                .unwrap()
                .value(coeffs.flat())
                .unwrap()
        };
        let d1 = (value(64) - value(128)).abs();
        let d2 = (value(128) - value(256)).abs();
        let ratio = d1 / d2;
        assert!(
            (2.5..8.0).contains(&ratio),
            "expected ~4x error reduction per refinement, got {ratio}"
        );
    }

    #[test]
    fn full_period_action_is_quotient_order_times_restricted() {
        let (problem, coeffs) = smooth_cyclic_setup();
        let s = 256;
        let evaluator = ActionEvaluator::new(Arc::new(problem.clone()), s).unwrap();
        let restricted = evaluator.value(coeffs.flat()).unwrap();

        // independent full-period quadrature over the extended orbit
        let (ext, vel) = extend_to_period_with_velocity(&coeffs, &problem, s).unwrap();
        let total = ext.samples.len();
        let mut full = 0.0;
        for h in 0..total {
            let mut lagrangian = 0.0;
            for i in 0..problem.bodies() {
                for a in 0..problem.dim() {
                    lagrangian += 0.5 * problem.masses()[i] * vel[h][(i, a)] * vel[h][(i, a)];
                }
            }
            lagrangian += potential_point(
                &ext.samples[h],
                problem.potential(),
                problem.masses(),
                false,
                false,
            )
            .unwrap()
            .value;
            full += lagrangian * ext.dt;
        }
        let expected = problem.quotient_order() as f64 * restricted;
        assert!(
            (full - expected).abs() < 1e-6 * expected.abs(),
            "full {full} vs |G/ker tau| * restricted {expected}"
        );
    }
}
