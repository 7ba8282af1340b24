//! Paths on the fundamental domain I = [0, π] as segment + truncated sine
//! series over the n-1 free bodies, plus evaluation on a time grid,
//! reconstruction of the n-th body and extension to the whole period.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::group::{ActionType, GroupElement, SymmetryProblem};

/// Shape of a flattened coefficient vector.
///
/// Blocks are stored mode-major, then body, then coordinate:
/// `idx(k, i, a) = (k * free_bodies + i) * dim + a` with k in 0..F+2.
/// Block 0 is the initial configuration, block F+1 the final one, blocks
/// 1..=F the sine amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoeffLayout {
    pub fourier_modes: usize,
    pub free_bodies: usize,
    pub dim: usize,
}

impl CoeffLayout {
    pub fn of(problem: &SymmetryProblem) -> Self {
        CoeffLayout {
            fourier_modes: problem.fourier_modes(),
            free_bodies: problem.free_bodies(),
            dim: problem.dim(),
        }
    }

    pub fn blocks(&self) -> usize {
        self.fourier_modes + 2
    }

    pub fn block_len(&self) -> usize {
        self.free_bodies * self.dim
    }

    pub fn len(&self) -> usize {
        self.blocks() * self.block_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, k: usize, body: usize, coord: usize) -> usize {
        debug_assert!(k < self.blocks() && body < self.free_bodies && coord < self.dim);
        (k * self.free_bodies + body) * self.dim + coord
    }

    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        let start = k * self.block_len();
        start..start + self.block_len()
    }
}

/// The optimization variable: endpoint configurations A_0, A_{F+1} and
/// Fourier amplitudes A_1..A_F, each an (n-1)×d block, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCoefficients {
    layout: CoeffLayout,
    data: DVector<f64>,
}

impl PathCoefficients {
    pub fn zeros(layout: CoeffLayout) -> Self {
        PathCoefficients {
            layout,
            data: DVector::zeros(layout.len()),
        }
    }

    pub fn from_vec(layout: CoeffLayout, data: Vec<f64>) -> Result<Self> {
        if data.len() != layout.len() {
            return Err(Error::Schema {
                context: "coefficient vector".into(),
                expected: format!(
                    "{} values ((F+2) x (n-1) x d = {} x {} x {})",
                    layout.len(),
                    layout.blocks(),
                    layout.free_bodies,
                    layout.dim
                ),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(PathCoefficients {
            layout,
            data: DVector::from_vec(data),
        })
    }

    pub fn from_flat(layout: CoeffLayout, data: DVector<f64>) -> Result<Self> {
        Self::from_vec(layout, data.as_slice().to_vec())
    }

    pub fn layout(&self) -> CoeffLayout {
        self.layout
    }

    pub fn flat(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut DVector<f64> {
        &mut self.data
    }

    pub fn into_flat(self) -> DVector<f64> {
        self.data
    }

    pub fn get(&self, k: usize, body: usize, coord: usize) -> f64 {
        self.data[self.layout.idx(k, body, coord)]
    }

    pub fn set(&mut self, k: usize, body: usize, coord: usize, value: f64) {
        let idx = self.layout.idx(k, body, coord);
        self.data[idx] = value;
    }

    /// Block k as an (n-1)×d matrix.
    pub fn block(&self, k: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.layout.free_bodies, self.layout.dim);
        for i in 0..self.layout.free_bodies {
            for a in 0..self.layout.dim {
                m[(i, a)] = self.get(k, i, a);
            }
        }
        m
    }

    pub fn set_block(&mut self, k: usize, block: &DMatrix<f64>) {
        for i in 0..self.layout.free_bodies {
            for a in 0..self.layout.dim {
                self.set(k, i, a, block[(i, a)]);
            }
        }
    }
}

/// Precomputed basis values on the grid t_h = h·π/S:
/// `value[(k, h)] = b_k(t_h)` and `deriv[(k, h)] = b_k'(t_h)` for the basis
/// b_0 = 1 - t/π, b_k = sin(kt) (1 <= k <= F), b_{F+1} = t/π.
/// A deterministic function of (F, S).
#[derive(Debug, Clone)]
pub struct BasisTables {
    pub fourier_modes: usize,
    pub samples: usize,
    /// (F+2) × (S+1)
    pub value: DMatrix<f64>,
    /// (F+2) × (S+1)
    pub deriv: DMatrix<f64>,
    pub times: Vec<f64>,
    /// Composite-trapezoid weights (endpoints half-weighted), summing to π.
    pub weights: Vec<f64>,
}

impl BasisTables {
    pub fn new(fourier_modes: usize, samples: usize) -> Self {
        let f = fourier_modes;
        let s = samples;
        let dt = PI / s as f64;
        let mut value = DMatrix::zeros(f + 2, s + 1);
        let mut deriv = DMatrix::zeros(f + 2, s + 1);
        let mut times = Vec::with_capacity(s + 1);
        for h in 0..=s {
            let frac = h as f64 / s as f64;
            let t = h as f64 * PI / s as f64;
            times.push(t);
            value[(0, h)] = 1.0 - frac;
            deriv[(0, h)] = -1.0 / PI;
            value[(f + 1, h)] = frac;
            deriv[(f + 1, h)] = 1.0 / PI;
            for k in 1..=f {
                // sines vanish identically at both endpoints; pin them so the
                // endpoint samples reproduce A_0 and A_{F+1} bit for bit
                let kf = k as f64;
                value[(k, h)] = if h == 0 || h == s { 0.0 } else { (kf * t).sin() };
                deriv[(k, h)] = kf * (kf * t).cos();
            }
        }
        let mut weights = vec![dt; s + 1];
        weights[0] = 0.5 * dt;
        weights[s] = 0.5 * dt;
        BasisTables {
            fourier_modes: f,
            samples: s,
            value,
            deriv,
            times,
            weights,
        }
    }
}

/// A path sampled on a uniform grid; each sample is a full n×d
/// configuration with the n-th body reconstructed.
#[derive(Debug, Clone)]
pub struct DiscretizedPath {
    pub samples: Vec<DMatrix<f64>>,
    pub dt: f64,
}

impl DiscretizedPath {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Appends the n-th body so the mass-weighted sum of all positions is zero:
/// x_n = -(1/m_n) Σ_{i<n} m_i x_i.
pub fn reconstruct_nth(free: &DMatrix<f64>, masses: &[f64]) -> DMatrix<f64> {
    let n = masses.len();
    let d = free.ncols();
    debug_assert_eq!(free.nrows(), n - 1);
    let mut full = DMatrix::zeros(n, d);
    for a in 0..d {
        let mut acc = 0.0;
        for i in 0..n - 1 {
            full[(i, a)] = free[(i, a)];
            acc += masses[i] * free[(i, a)];
        }
        full[(n - 1, a)] = -acc / masses[n - 1];
    }
    full
}

fn free_samples(
    coeffs: &PathCoefficients,
    basis: &BasisTables,
) -> Vec<DMatrix<f64>> {
    let layout = coeffs.layout();
    let s = basis.samples;
    let mut out = Vec::with_capacity(s + 1);
    for h in 0..=s {
        let mut cfg = DMatrix::zeros(layout.free_bodies, layout.dim);
        for k in 0..layout.blocks() {
            let w = basis.value[(k, h)];
            if w == 0.0 {
                continue;
            }
            for i in 0..layout.free_bodies {
                for a in 0..layout.dim {
                    cfg[(i, a)] += w * coeffs.get(k, i, a);
                }
            }
        }
        out.push(cfg);
    }
    out
}

fn free_velocities(
    coeffs: &PathCoefficients,
    basis: &BasisTables,
) -> Vec<DMatrix<f64>> {
    let layout = coeffs.layout();
    let s = basis.samples;
    let mut out = Vec::with_capacity(s + 1);
    for h in 0..=s {
        let mut cfg = DMatrix::zeros(layout.free_bodies, layout.dim);
        for k in 0..layout.blocks() {
            let w = basis.deriv[(k, h)];
            for i in 0..layout.free_bodies {
                for a in 0..layout.dim {
                    cfg[(i, a)] += w * coeffs.get(k, i, a);
                }
            }
        }
        out.push(cfg);
    }
    out
}

fn check_alias(coeffs: &PathCoefficients, s: usize) -> Result<()> {
    let f = coeffs.layout().fourier_modes;
    if s < 2 * f.max(1) {
        return Err(Error::Alias { s, f });
    }
    Ok(())
}

/// Samples the path on t_h = h·π/S, h = 0..=S, reconstructing the n-th
/// body at every sample. Endpoints reproduce A_0 and A_{F+1} exactly.
pub fn build_path(
    coeffs: &PathCoefficients,
    s: usize,
    problem: &SymmetryProblem,
) -> Result<DiscretizedPath> {
    check_alias(coeffs, s)?;
    let basis = BasisTables::new(coeffs.layout().fourier_modes, s);
    let samples = free_samples(coeffs, &basis)
        .iter()
        .map(|free| reconstruct_nth(free, problem.masses()))
        .collect();
    Ok(DiscretizedPath {
        samples,
        dt: PI / s as f64,
    })
}

/// Positions together with analytic velocities on the same grid.
pub fn build_path_with_velocity(
    coeffs: &PathCoefficients,
    s: usize,
    problem: &SymmetryProblem,
) -> Result<(DiscretizedPath, Vec<DMatrix<f64>>)> {
    check_alias(coeffs, s)?;
    let basis = BasisTables::new(coeffs.layout().fourier_modes, s);
    let samples: Vec<_> = free_samples(coeffs, &basis)
        .iter()
        .map(|free| reconstruct_nth(free, problem.masses()))
        .collect();
    let velocities: Vec<_> = free_velocities(coeffs, &basis)
        .iter()
        .map(|free| reconstruct_nth(free, problem.masses()))
        .collect();
    Ok((
        DiscretizedPath {
            samples,
            dt: PI / s as f64,
        },
        velocities,
    ))
}

/// Group maps applied segment by segment when a fundamental-domain path is
/// unfolded to the whole period.
#[derive(Debug, Clone)]
pub struct ExtensionPlan {
    /// Reflection applied at the t = π seam for brake/dihedral actions.
    pub reflect: Option<GroupElement>,
    /// Element advancing the path by one translation block (one segment for
    /// cyclic actions, two for dihedral) together with the block count.
    pub advance: Option<(GroupElement, usize)>,
    /// Total number of fundamental segments |Ḡ| in the period.
    pub segments: usize,
}

impl ExtensionPlan {
    pub fn for_problem(problem: &SymmetryProblem) -> Result<Self> {
        match problem.action_type() {
            ActionType::Cyclic => Ok(ExtensionPlan {
                reflect: None,
                advance: Some((problem.rot_gen().clone(), problem.rot_order())),
                segments: problem.quotient_order(),
            }),
            ActionType::Brake => Ok(ExtensionPlan {
                reflect: Some(problem.ref_gen().unwrap().clone()),
                advance: None,
                segments: 2,
            }),
            ActionType::Dihedral => {
                let s0 = problem.ref_gen().unwrap();
                let s1 = problem.rot_gen().compose(s0)?;
                // shifting time by a full doubled segment acts by s1 ∘ s0
                let advance = s1.compose(s0)?;
                Ok(ExtensionPlan {
                    reflect: Some(s1),
                    advance: Some((advance, problem.rot_order())),
                    segments: problem.quotient_order(),
                })
            }
        }
    }
}

fn extend_samples(
    base: &[DMatrix<f64>],
    plan: &ExtensionPlan,
    flip_sign_on_reflect: bool,
) -> Vec<DMatrix<f64>> {
    let s = base.len() - 1;
    // first translation block: the fundamental segment, reflected once for
    // brake/dihedral actions
    let mut block: Vec<DMatrix<f64>> = base[..s].to_vec();
    if let Some(reflect) = &plan.reflect {
        for k in 0..s {
            let mut img = reflect.act_config(&base[s - k]);
            if flip_sign_on_reflect {
                img.neg_mut();
            }
            block.push(img);
        }
    }
    let mut out = block.clone();
    if let Some((advance, count)) = &plan.advance {
        let mut mapped = block;
        for _ in 1..*count {
            for sample in &mut mapped {
                *sample = advance.act_config(sample);
            }
            out.extend(mapped.iter().cloned());
        }
    }
    out
}

/// Unfolds an optimized fundamental-domain path to the whole period
/// T = |Ḡ|·π by the symmetries of the group. The result holds |Ḡ|·S
/// samples; index |Ḡ|·S wraps around to index 0.
pub fn extend_to_period(
    coeffs: &PathCoefficients,
    problem: &SymmetryProblem,
    s: usize,
) -> Result<DiscretizedPath> {
    let base = build_path(coeffs, s, problem)?;
    let plan = ExtensionPlan::for_problem(problem)?;
    Ok(DiscretizedPath {
        samples: extend_samples(&base.samples, &plan, false),
        dt: base.dt,
    })
}

/// Full-period positions and velocities. Velocities pick up a sign flip on
/// reflected segments (the chain rule through t ↦ 2π - t).
pub fn extend_to_period_with_velocity(
    coeffs: &PathCoefficients,
    problem: &SymmetryProblem,
    s: usize,
) -> Result<(DiscretizedPath, Vec<DMatrix<f64>>)> {
    let (base, vel) = build_path_with_velocity(coeffs, s, problem)?;
    let plan = ExtensionPlan::for_problem(problem)?;
    Ok((
        DiscretizedPath {
            samples: extend_samples(&base.samples, &plan, false),
            dt: base.dt,
        },
        extend_samples(&vel, &plan, true),
    ))
}

/// Least-squares-free fit: interpolates `target` (free-body configurations
/// at t_h = h·π/S_fit) by endpoint blocks plus a discrete sine transform of
/// the residual. Exact for paths already in the basis span when
/// F <= S_fit - 1.
pub fn fit_coefficients(
    layout: CoeffLayout,
    target: &[DMatrix<f64>],
) -> Result<PathCoefficients> {
    let s = target.len() - 1;
    if s < layout.fourier_modes + 1 {
        return Err(Error::Alias {
            s,
            f: layout.fourier_modes,
        });
    }
    let mut coeffs = PathCoefficients::zeros(layout);
    coeffs.set_block(0, &target[0]);
    coeffs.set_block(layout.fourier_modes + 1, &target[s]);
    for k in 1..=layout.fourier_modes {
        let mut block = DMatrix::zeros(layout.free_bodies, layout.dim);
        for (h, sample) in target.iter().enumerate().take(s).skip(1) {
            let frac = h as f64 / s as f64;
            let segment = &target[0] * (1.0 - frac) + &target[s] * frac;
            let residual = sample - segment;
            let w = (k as f64 * h as f64 * PI / s as f64).sin();
            block += residual * w;
        }
        block *= 2.0 / s as f64;
        coeffs.set_block(k, &block);
    }
    Ok(coeffs)
}
