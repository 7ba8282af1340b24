//! Structural validation of group actions and dynamical verification of
//! found orbits.

use nalgebra::{DMatrix, DVector};

use crate::action::potential_point;
use crate::error::{Error, Result};
use crate::group::{ActionType, FiniteGroup, GroupElement, SymmetryProblem};
use crate::path::{extend_to_period, DiscretizedPath, PathCoefficients};
use crate::projectors::{
    embedding_matrix, fixed_space_projector, orthogonal_range_projector, reduce_config_map,
    unstack_config,
};

const TOL: f64 = 1e-10;

/// A named check outcome; failures carry a concrete witness.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub ok: bool,
    pub witness: Option<String>,
}

impl Verdict {
    fn pass() -> Self {
        Verdict {
            ok: true,
            witness: None,
        }
    }

    fn fail(witness: String) -> Self {
        Verdict {
            ok: false,
            witness: Some(witness),
        }
    }
}

/// Element of the quotient time group Ḡ, modeled as the dihedral group over
/// the rotation order m: `(reflect, k)` stands for s^reflect · r^k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TimePart {
    reflect: bool,
    k: usize,
    m: usize,
}

impl TimePart {
    fn identity(m: usize) -> Self {
        TimePart {
            reflect: false,
            k: 0,
            m,
        }
    }

    fn compose(&self, other: &TimePart) -> TimePart {
        debug_assert_eq!(self.m, other.m);
        let m = self.m;
        let k = if other.reflect {
            (other.k + m - self.k % m) % m
        } else {
            (self.k + other.k) % m
        };
        TimePart {
            reflect: self.reflect ^ other.reflect,
            k,
            m,
        }
    }

    fn is_identity(&self) -> bool {
        !self.reflect && self.k == 0
    }
}

/// The group with time annotations: pairs (configuration element, quotient
/// time element), closed under the product. The time part of each element
/// is derived from its generator word; reflection generators contribute
/// parity one.
struct TimedGroup {
    elements: Vec<(GroupElement, TimePart)>,
}

impl TimedGroup {
    fn build(problem: &SymmetryProblem, cap: usize) -> Result<Self> {
        let n = problem.bodies();
        let d = problem.dim();
        let m = problem.rot_order();
        let mut generators: Vec<(GroupElement, TimePart)> = Vec::new();
        for k in problem.kernel().elements() {
            generators.push((k.clone(), TimePart::identity(m)));
        }
        generators.push((
            problem.rot_gen().clone(),
            TimePart {
                reflect: false,
                k: 1 % m.max(1),
                m,
            },
        ));
        if let Some(r) = problem.ref_gen() {
            generators.push((
                r.clone(),
                TimePart {
                    reflect: true,
                    k: 0,
                    m,
                },
            ));
        }
        let mut elements = vec![(GroupElement::identity(n, d), TimePart::identity(m))];
        let mut frontier = vec![0usize];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &idx in &frontier {
                for (gen, gen_t) in &generators {
                    let pair = elements[idx].0.compose(gen)?;
                    let time = elements[idx].1.compose(gen_t);
                    let exists = elements
                        .iter()
                        .any(|(p, t)| *t == time && p.approx_eq(&pair, crate::group::MATRIX_EQ_TOL));
                    if !exists {
                        if elements.len() >= cap {
                            return Err(Error::ClosureOverflow { cap });
                        }
                        next.push(elements.len());
                        elements.push((pair, time));
                    }
                }
            }
            frontier = next;
        }
        Ok(TimedGroup { elements })
    }
}

fn describe_element(e: &GroupElement, t: Option<&TimePart>) -> String {
    let rho: Vec<Vec<f64>> = (0..e.dim())
        .map(|r| (0..e.dim()).map(|c| e.rho()[(r, c)]).collect())
        .collect();
    let time = match t {
        Some(tp) if tp.reflect => format!(", time = reflection·r^{}", tp.k),
        Some(tp) => format!(", time = r^{}", tp.k),
        None => String::new(),
    };
    format!("rho = {rho:?}, sigma = {}{time}", e.sigma())
}

fn rho_is_identity(e: &GroupElement) -> bool {
    let d = e.dim();
    (e.rho() - DMatrix::<f64>::identity(d, d)).abs().max() <= TOL
}

/// The three admissibility conditions on the action.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    /// ker τ ∩ ker σ = 1.
    pub tau_sigma_trivial: Verdict,
    /// |ker ρ ∩ ker σ| <= 2, with the nontrivial element (if any) acting as
    /// a reflection in time.
    pub rho_sigma_bounded: Verdict,
    /// ker τ ∩ ker ρ = 1; failure makes the action bound to collisions.
    pub tau_rho_trivial: Verdict,
}

impl AdmissibilityReport {
    pub fn all_ok(&self) -> bool {
        self.tau_sigma_trivial.ok && self.rho_sigma_bounded.ok && self.tau_rho_trivial.ok
    }
}

pub fn check_admissibility(problem: &SymmetryProblem) -> Result<AdmissibilityReport> {
    let timed = TimedGroup::build(problem, crate::group::DEFAULT_CLOSURE_CAP)?;

    let mut tau_sigma = Verdict::pass();
    for (e, t) in &timed.elements {
        if t.is_identity() && e.sigma().is_identity() && !rho_is_identity(e) {
            tau_sigma = Verdict::fail(describe_element(e, Some(t)));
            break;
        }
    }

    let mut rho_sigma = Verdict::pass();
    let trivial_pairs: Vec<&(GroupElement, TimePart)> = timed
        .elements
        .iter()
        .filter(|(e, _)| e.sigma().is_identity() && rho_is_identity(e))
        .collect();
    if trivial_pairs.len() > 2 {
        rho_sigma = Verdict::fail(format!(
            "|ker rho ∩ ker sigma| = {} > 2",
            trivial_pairs.len()
        ));
    } else if let Some((e, t)) = trivial_pairs
        .iter()
        .find(|(_, t)| !t.is_identity() && !t.reflect)
    {
        rho_sigma = Verdict::fail(format!(
            "non-trivial element of ker rho ∩ ker sigma acts as a time rotation: {}",
            describe_element(e, Some(t))
        ));
    }

    let mut tau_rho = Verdict::pass();
    for (e, t) in &timed.elements {
        if t.is_identity() && rho_is_identity(e) && !e.sigma().is_identity() {
            tau_rho = Verdict::fail(describe_element(e, Some(t)));
            break;
        }
    }

    Ok(AdmissibilityReport {
        tau_sigma_trivial: tau_sigma,
        rho_sigma_bounded: rho_sigma,
        tau_rho_trivial: tau_rho,
    })
}

/// Coercivity of the restricted action: holds exactly when no nonzero
/// zero-center-of-mass configuration is fixed by the whole group.
#[derive(Debug, Clone)]
pub struct CoercivityReport {
    pub coercive: bool,
    /// Dimension of the fixed subspace within zero-center-of-mass
    /// configurations.
    pub fixed_space_dimension: usize,
    /// A nonzero fixed configuration (n×d) when not coercive.
    pub witness: Option<DMatrix<f64>>,
}

/// Dimension of the subspace of zero-center-of-mass configurations fixed
/// by every element of the group.
pub fn fixed_subspace_dimension(group: &FiniteGroup, masses: &[f64]) -> usize {
    let d = group.dim();
    let reduced = reduce_config_map(fixed_space_projector(group).matrix(), masses, d);
    orthogonal_range_projector(&reduced).trace().round() as usize
}

pub fn check_coercivity(problem: &SymmetryProblem) -> CoercivityReport {
    let d = problem.dim();
    let masses = problem.masses();
    let full = fixed_space_projector(problem.full_group());
    let reduced = reduce_config_map(full.matrix(), masses, d);
    let ortho = orthogonal_range_projector(&reduced);
    let rank = ortho.trace().round() as usize;
    let witness = (rank > 0).then(|| {
        let col = (0..ortho.ncols())
            .max_by(|&a, &b| {
                ortho.column(a).norm().total_cmp(&ortho.column(b).norm())
            })
            .unwrap();
        let reduced_vec = ortho.column(col).clone_owned();
        let stacked = embedding_matrix(masses, d) * reduced_vec;
        unstack_config(&stacked, problem.bodies(), d)
    });
    CoercivityReport {
        coercive: rank == 0,
        fixed_space_dimension: rank,
        witness,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotatingCircleVerdict {
    Holds,
    Fails,
    Unknown,
}

impl RotatingCircleVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            RotatingCircleVerdict::Holds => "holds",
            RotatingCircleVerdict::Fails => "fails",
            RotatingCircleVerdict::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RotatingCircleReport {
    pub subgroup: String,
    pub verdict: RotatingCircleVerdict,
    pub detail: String,
}

/// Decides the rotating-circle property for one subgroup.
///
/// The trivial subgroup holds trivially. In the plane the procedure is
/// complete: a circle rotating for body i exists exactly when every element
/// acts by a rotation and the isotropy group of i acts trivially. For
/// d >= 3 invariant 2-planes are searched among the rotation planes of the
/// subgroup elements and the common fixed subspace; an inconclusive search
/// reports `Unknown`.
fn rotating_circle_for(h: &FiniteGroup, label: &str) -> RotatingCircleReport {
    let n = h.bodies();
    let d = h.dim();
    if h.order() == 1 {
        return RotatingCircleReport {
            subgroup: label.to_string(),
            verdict: RotatingCircleVerdict::Holds,
            detail: "trivial subgroup".to_string(),
        };
    }
    if d == 2 {
        let all_rotations = h
            .elements()
            .iter()
            .all(|e| e.rho().determinant() > 0.0);
        if !all_rotations {
            return RotatingCircleReport {
                subgroup: label.to_string(),
                verdict: RotatingCircleVerdict::Fails,
                detail: "an element acts as a spatial reflection, which no circle \
                         survives as a rotation"
                    .to_string(),
            };
        }
        let mut good = 0;
        for i in 0..n {
            let isotropy_trivial = h
                .elements()
                .iter()
                .filter(|e| e.sigma().apply(i) == i)
                .all(rho_is_identity);
            if isotropy_trivial {
                good += 1;
            }
        }
        if good >= n - 1 {
            RotatingCircleReport {
                subgroup: label.to_string(),
                verdict: RotatingCircleVerdict::Holds,
                detail: format!("{good}/{n} indices admit a rotating circle in the plane"),
            }
        } else {
            RotatingCircleReport {
                subgroup: label.to_string(),
                verdict: RotatingCircleVerdict::Fails,
                detail: format!(
                    "only {good}/{n} indices admit a rotating circle, need {}",
                    n - 1
                ),
            }
        }
    } else {
        match rotating_circle_high_dim(h) {
            Some(good) if good >= n - 1 => RotatingCircleReport {
                subgroup: label.to_string(),
                verdict: RotatingCircleVerdict::Holds,
                detail: format!("invariant rotation plane found for {good}/{n} indices"),
            },
            _ => RotatingCircleReport {
                subgroup: label.to_string(),
                verdict: RotatingCircleVerdict::Unknown,
                detail: "eigenplane search inconclusive".to_string(),
            },
        }
    }
}

/// Searches invariant 2-planes for d >= 3; returns the best count of
/// indices covered by a single plane.
fn rotating_circle_high_dim(h: &FiniteGroup) -> Option<usize> {
    let n = h.bodies();
    let d = h.dim();
    let mut candidates: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();

    // rotation planes of individual elements, from eigenspaces of rho+rho^T
    for e in h.elements() {
        let sym = e.rho() + e.rho().transpose();
        let eig = sym.clone().symmetric_eigen();
        let mut antipodal: Vec<DVector<f64>> = Vec::new();
        for j in 0..d {
            if eig.eigenvalues[j].abs() < 2.0 - 1e-8 {
                let v = eig.eigenvectors.column(j).clone_owned();
                let rv = e.rho() * &v;
                let mut w = &rv - &v * v.dot(&rv);
                let norm = w.norm();
                if norm > 1e-8 {
                    w /= norm;
                    candidates.push((v, w));
                }
            } else if eig.eigenvalues[j] < 0.0 {
                // -1 eigenvectors pair up into half-turn planes
                antipodal.push(eig.eigenvectors.column(j).clone_owned());
            }
        }
        for pair in antipodal.windows(2) {
            candidates.push((pair[0].clone(), pair[1].clone()));
        }
    }
    // the common fixed subspace, where every element rotates by zero
    let avg = fixed_rho_projector(h);
    let eig = avg.symmetric_eigen();
    let fixed: Vec<DVector<f64>> = (0..d)
        .filter(|&j| eig.eigenvalues[j] > 0.5)
        .map(|j| eig.eigenvectors.column(j).clone_owned())
        .collect();
    if fixed.len() >= 2 {
        candidates.push((fixed[0].clone(), fixed[1].clone()));
    }

    let mut best: Option<usize> = None;
    for (u1, u2) in &candidates {
        if !plane_rotates_under(h, u1, u2) {
            continue;
        }
        let mut good = 0;
        for i in 0..n {
            let fixed_by_isotropy = h
                .elements()
                .iter()
                .filter(|e| e.sigma().apply(i) == i)
                .all(|e| {
                    (e.rho() * u1 - u1).norm() <= 1e-8 && (e.rho() * u2 - u2).norm() <= 1e-8
                });
            if fixed_by_isotropy {
                good += 1;
            }
        }
        best = Some(best.map_or(good, |b: usize| b.max(good)));
    }
    best
}

/// Average of the spatial parts only: projector onto the common rho-fixed
/// subspace of R^d.
fn fixed_rho_projector(h: &FiniteGroup) -> DMatrix<f64> {
    let d = h.dim();
    let mut sum = DMatrix::zeros(d, d);
    for e in h.elements() {
        sum += e.rho();
    }
    sum / h.order() as f64
}

fn plane_rotates_under(h: &FiniteGroup, u1: &DVector<f64>, u2: &DVector<f64>) -> bool {
    for e in h.elements() {
        let v1 = e.rho() * u1;
        let v2 = e.rho() * u2;
        // stay in the plane
        let p1 = u1 * v1.dot(u1) + u2 * v1.dot(u2);
        let p2 = u1 * v2.dot(u1) + u2 * v2.dot(u2);
        if (&v1 - &p1).norm() > 1e-8 || (&v2 - &p2).norm() > 1e-8 {
            return false;
        }
        // restriction must be orientation-preserving
        let det = v1.dot(u1) * v2.dot(u2) - v1.dot(u2) * v2.dot(u1);
        if det < 0.0 {
            return false;
        }
    }
    true
}

/// Rotating-circle verdicts for the kernel and, for brake/dihedral
/// actions, the boundary subgroups.
pub fn check_rotating_circle(problem: &SymmetryProblem) -> Vec<RotatingCircleReport> {
    let mut out = vec![rotating_circle_for(problem.kernel(), "ker_tau")];
    if problem.action_type() != ActionType::Cyclic {
        out.push(rotating_circle_for(problem.h0(), "H0"));
        out.push(rotating_circle_for(problem.h1(), "H1"));
    }
    out
}

/// Full structural report on a problem's group action.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub admissibility: AdmissibilityReport,
    pub coercive: bool,
    pub fixed_space_dimension: usize,
    pub coercivity_witness: Option<DMatrix<f64>>,
    pub bound_to_collisions_risk: bool,
    pub rotating_circle: Vec<RotatingCircleReport>,
    /// Rank of the spatial span of projected paths; below d the action
    /// confines every equivariant loop to a proper subspace.
    pub spatial_span_dimension: usize,
    pub notes: Vec<String>,
}

pub fn analyze(problem: &SymmetryProblem) -> Result<DiagnosticsReport> {
    let admissibility = check_admissibility(problem)?;
    let coercivity = check_coercivity(problem);
    let rc = check_rotating_circle(problem);
    let spatial_span_dimension = spatial_span_dimension(problem)?;
    let mut notes = Vec::new();
    if spatial_span_dimension < problem.dim() {
        notes.push(format!(
            "equivariant paths span only a {spatial_span_dimension}-dimensional subspace \
             of R^{}; the spatial representation could be reduced",
            problem.dim()
        ));
    }
    notes.push(
        "minimality of the period over the symmetry class is not checked; it is \
         undecidable from the generator data alone"
            .to_string(),
    );
    Ok(DiagnosticsReport {
        bound_to_collisions_risk: !admissibility.tau_rho_trivial.ok,
        admissibility,
        coercive: coercivity.coercive,
        fixed_space_dimension: coercivity.fixed_space_dimension,
        coercivity_witness: coercivity.witness,
        rotating_circle: rc,
        spatial_span_dimension,
        notes,
    })
}

/// Rank of the set of spatial vectors reachable by projected coefficient
/// blocks.
fn spatial_span_dimension(problem: &SymmetryProblem) -> Result<usize> {
    let projector = crate::projectors::CoefficientProjector::for_problem(problem)?;
    let d = problem.dim();
    let nf = problem.free_bodies();
    let mut slices: Vec<DVector<f64>> = Vec::new();
    let mut harvest = |m: &DMatrix<f64>| {
        for c in 0..m.ncols() {
            let col = m.column(c);
            for start in (0..m.nrows()).step_by(d) {
                let v = DVector::from_fn(d, |a, _| col[start + a]);
                if v.norm() > 1e-12 {
                    slices.push(v);
                }
            }
        }
    };
    harvest(projector.interior_block());
    harvest(projector.endpoint_block());
    // the reconstructed n-th body is a combination of the free ones, so it
    // adds nothing to the span
    let _ = nf;
    if slices.is_empty() {
        return Ok(0);
    }
    let mut m = DMatrix::zeros(d, slices.len());
    for (j, v) in slices.iter().enumerate() {
        m.set_column(j, v);
    }
    Ok(m.svd(false, false).rank(1e-8))
}

/// Numerical verdict on whether a path solves the equations of motion.
#[derive(Debug, Clone)]
pub struct OrbitVerification {
    /// max over samples and bodies of
    /// ‖m_i(ẍ_i - 2Ω ẋ_i + Ω² x_i) - ∂U/∂x_i‖ / (1 + ‖∂U/∂x_i‖),
    /// with derivatives by second-order central differences. Stencils
    /// centered on a gluing seam are excluded: they read the C¹ defect
    /// divided by the step instead of the equations, and that defect is
    /// reported by `junction_velocity_mismatch`.
    pub max_equation_residual: f64,
    pub min_pairwise_distance: f64,
    /// Largest disagreement of one-sided velocities across the seams where
    /// fundamental-domain copies are glued.
    pub junction_velocity_mismatch: f64,
    /// Relative spread of the conserved energy along the period.
    pub energy_drift: f64,
    pub dense_samples: usize,
}

/// Reconstructs the whole orbit at `dense_s` samples per fundamental domain
/// and measures how well it satisfies the equations of motion.
pub fn verify_orbit(
    coeffs: &PathCoefficients,
    problem: &SymmetryProblem,
    dense_s: usize,
) -> Result<OrbitVerification> {
    let path = extend_to_period(coeffs, problem, dense_s)?;
    verify_samples(&path, problem, dense_s)
}

/// Same verdict computed from an already-sampled full-period path with
/// `samples_per_segment` samples per fundamental domain.
pub fn verify_samples(
    path: &DiscretizedPath,
    problem: &SymmetryProblem,
    samples_per_segment: usize,
) -> Result<OrbitVerification> {
    let total = path.samples.len();
    let dt = path.dt;
    let n = problem.bodies();
    let d = problem.dim();
    let masses = problem.masses();
    let model = problem.potential();
    let omega = problem.omega();
    let omega2 = omega * omega;
    let rotating = problem.has_rotating_frame();

    let at = |h: isize| -> &DMatrix<f64> {
        let idx = h.rem_euclid(total as isize) as usize;
        &path.samples[idx]
    };

    let mut max_residual = 0.0_f64;
    let mut min_distance = f64::INFINITY;
    let mut energy_min = f64::INFINITY;
    let mut energy_max = f64::NEG_INFINITY;
    let mut energy_sum = 0.0;

    for h in 0..total {
        let y = &path.samples[h];
        let prev = at(h as isize - 1);
        let next = at(h as isize + 1);
        let vel = (next - prev) / (2.0 * dt);
        let acc = (next - y * 2.0 + prev) / (dt * dt);
        let point = potential_point(y, model, masses, true, false)?;
        min_distance = min_distance.min(point.min_distance);
        let grad = point.gradient.unwrap();

        // a central stencil centered on a gluing seam differentiates across
        // the C¹ defect and reads the junction mismatch divided by dt, not
        // the equations of motion; the seam samples belong to the junction
        // metric below
        let crosses_seam = h % samples_per_segment == 0;
        if !crosses_seam {
            for i in 0..n {
                let mut force_term = DVector::zeros(d);
                let mut v_i = DVector::zeros(d);
                let mut y_i = DVector::zeros(d);
                for a in 0..d {
                    v_i[a] = vel[(i, a)];
                    y_i[a] = y[(i, a)];
                    force_term[a] = acc[(i, a)];
                }
                if rotating {
                    force_term -= omega * &v_i * 2.0;
                    force_term += &omega2 * &y_i;
                }
                let mut residual = 0.0;
                let mut grad_norm = 0.0;
                for a in 0..d {
                    let r = masses[i] * force_term[a] - grad[(i, a)];
                    residual += r * r;
                    grad_norm += grad[(i, a)] * grad[(i, a)];
                }
                max_residual =
                    max_residual.max(residual.sqrt() / (1.0 + grad_norm.sqrt()));
            }
        }

        let mut energy = 0.0;
        for i in 0..n {
            let mut v_i = DVector::zeros(d);
            let mut y_i = DVector::zeros(d);
            for a in 0..d {
                v_i[a] = vel[(i, a)];
                y_i[a] = y[(i, a)];
            }
            energy += 0.5 * masses[i] * (v_i.norm_squared() + y_i.dot(&(&omega2 * &y_i)));
        }
        energy -= point.value;
        energy_min = energy_min.min(energy);
        energy_max = energy_max.max(energy);
        energy_sum += energy;
    }

    let energy_mean = energy_sum / total as f64;
    let energy_drift = (energy_max - energy_min) / (1.0 + energy_mean.abs());

    // one-sided second-order velocities across each gluing seam
    let mut junction = 0.0_f64;
    let segments = total / samples_per_segment;
    for seg in 0..segments {
        let p = (seg * samples_per_segment) as isize;
        let forward = (at(p) * -3.0 + at(p + 1) * 4.0 - at(p + 2)) / (2.0 * dt);
        let backward = (at(p) * 3.0 - at(p - 1) * 4.0 + at(p - 2)) / (2.0 * dt);
        let diff = &forward - &backward;
        for i in 0..n {
            let mut norm = 0.0;
            for a in 0..d {
                norm += diff[(i, a)] * diff[(i, a)];
            }
            junction = junction.max(norm.sqrt());
        }
    }

    Ok(OrbitVerification {
        max_equation_residual: max_residual,
        min_pairwise_distance: min_distance,
        junction_velocity_mismatch: junction,
        energy_drift,
        dense_samples: samples_per_segment,
    })
}
