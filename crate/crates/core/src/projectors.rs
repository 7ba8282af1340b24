//! Averaging projectors onto fixed subspaces of configuration space and the
//! boundary-condition projector, applied to coefficients, gradients and
//! Hessians.
//!
//! Projectors are materialized as dense matrices once per problem; sizes are
//! at most (n·d)² in full space, so evaluation cost is dominated by the
//! potential integral, never by projection.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::group::{ActionType, FiniteGroup, GroupElement, SymmetryProblem};
use crate::path::{CoeffLayout, PathCoefficients};

/// Orthogonal projector onto the subspace of stacked configurations fixed
/// by a subgroup: (1/|H|) Σ_h B(h), with B(h) the configuration action.
#[derive(Debug, Clone)]
pub struct ConfigurationProjector {
    matrix: DMatrix<f64>,
}

impl ConfigurationProjector {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Applies the projector to an n×d configuration.
    pub fn apply_config(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let d = x.ncols();
        let stacked = stack_config(x);
        let projected = &self.matrix * stacked;
        unstack_config(&projected, n, d)
    }
}

pub fn stack_config(x: &DMatrix<f64>) -> DVector<f64> {
    let (n, d) = (x.nrows(), x.ncols());
    let mut v = DVector::zeros(n * d);
    for i in 0..n {
        for a in 0..d {
            v[i * d + a] = x[(i, a)];
        }
    }
    v
}

pub fn unstack_config(v: &DVector<f64>, n: usize, d: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        for a in 0..d {
            x[(i, a)] = v[i * d + a];
        }
    }
    x
}

/// The averaging projector onto the H-fixed configuration subspace.
/// Idempotent and symmetric because the group acts orthogonally.
pub fn fixed_space_projector(h: &FiniteGroup) -> ConfigurationProjector {
    let nd = h.bodies() * h.dim();
    let mut sum = DMatrix::zeros(nd, nd);
    for e in h.elements() {
        sum += e.config_matrix();
    }
    sum /= h.order() as f64;
    ConfigurationProjector { matrix: sum }
}

/// Endpoint boundary conditions: independent fixed-space projections for
/// brake/dihedral actions, or the coupled pair projector
/// π_g(v, w) = (½(v + g⁻¹w), ½(gv + w)) for cyclic ones.
#[derive(Debug, Clone)]
pub enum BoundaryProjector {
    Split {
        h0: ConfigurationProjector,
        h1: ConfigurationProjector,
    },
    Cyclic {
        generator: GroupElement,
    },
}

impl BoundaryProjector {
    pub fn for_problem(problem: &SymmetryProblem) -> Self {
        match problem.action_type() {
            ActionType::Cyclic => BoundaryProjector::Cyclic {
                generator: problem.rot_gen().clone(),
            },
            _ => BoundaryProjector::Split {
                h0: fixed_space_projector(problem.h0()),
                h1: fixed_space_projector(problem.h1()),
            },
        }
    }
}

/// Projects a pair of endpoint configurations onto the boundary manifold.
/// For the cyclic kind the output satisfies g·out₀ = out₁.
pub fn project_boundary(
    v: &DMatrix<f64>,
    w: &DMatrix<f64>,
    bc: &BoundaryProjector,
) -> (DMatrix<f64>, DMatrix<f64>) {
    match bc {
        BoundaryProjector::Split { h0, h1 } => (h0.apply_config(v), h1.apply_config(w)),
        BoundaryProjector::Cyclic { generator } => {
            let g_inv = generator.inverse();
            let a = (v + g_inv.act_config(w)) * 0.5;
            let b = (generator.act_config(v) + w) * 0.5;
            (a, b)
        }
    }
}

/// Mass-weighted embedding of the n-1 free bodies into full configuration
/// space: the n-th body keeps the center of mass at the origin.
pub fn embedding_matrix(masses: &[f64], d: usize) -> DMatrix<f64> {
    let n = masses.len();
    let mut e = DMatrix::zeros(n * d, (n - 1) * d);
    for i in 0..n - 1 {
        for a in 0..d {
            e[(i * d + a, i * d + a)] = 1.0;
            e[((n - 1) * d + a, i * d + a)] = -masses[i] / masses[n - 1];
        }
    }
    e
}

/// Drops the n-th body.
pub fn restriction_matrix(n: usize, d: usize) -> DMatrix<f64> {
    let mut r = DMatrix::zeros((n - 1) * d, n * d);
    for i in 0..(n - 1) * d {
        r[(i, i)] = 1.0;
    }
    r
}

/// Orthogonal projector onto the column space of a (possibly oblique)
/// projector matrix. Nonzero singular values of a projector are >= 1, so
/// rank detection at 0.5 is unambiguous.
pub fn orthogonal_range_projector(p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    let svd = p.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let mut out = DMatrix::zeros(n, n);
    for (j, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma > 0.5 {
            let col = u.column(j);
            for r in 0..n {
                for c in 0..n {
                    out[(r, c)] += col[r] * col[c];
                }
            }
        }
    }
    out
}

/// Conjugates a full-space linear map with the center-of-mass embedding:
/// the induced map on free-body coordinates. Exact on the zero-center-of-
/// mass subspace.
pub fn reduce_config_map(full: &DMatrix<f64>, masses: &[f64], d: usize) -> DMatrix<f64> {
    let n = masses.len();
    restriction_matrix(n, d) * full * embedding_matrix(masses, d)
}

/// The composite projector on flattened coefficient vectors.
///
/// Interior sine blocks are projected onto the kernel-fixed subspace; the
/// endpoint pair additionally satisfies the boundary conditions. All blocks
/// act in reduced (free-body) coordinates, where the projector is taken to
/// be the Euclidean-orthogonal projector onto the reduced subspace so that
/// point and tangent projections coincide and a vanishing projected
/// gradient certifies criticality of the restricted action.
#[derive(Debug, Clone)]
pub struct CoefficientProjector {
    layout: CoeffLayout,
    /// Orthogonal projector for interior blocks, (n-1)d square.
    interior: DMatrix<f64>,
    /// Orthogonal projector for the stacked endpoint pair, 2(n-1)d square.
    endpoints: DMatrix<f64>,
    /// Full composite on coefficient space, N×N.
    full: DMatrix<f64>,
}

impl CoefficientProjector {
    pub fn for_problem(problem: &SymmetryProblem) -> Result<Self> {
        let layout = CoeffLayout::of(problem);
        let d = problem.dim();
        let masses = problem.masses();
        let nd = problem.bodies() * d;
        let block = layout.block_len();

        let kernel_full = fixed_space_projector(problem.kernel()).matrix.clone();
        let interior =
            orthogonal_range_projector(&reduce_config_map(&kernel_full, masses, d));

        let endpoints_full: DMatrix<f64> = match problem.action_type() {
            ActionType::Cyclic => {
                // blockdiag(P_ker, P_ker) · π_g; the factors commute because
                // ker τ is normal
                let g = problem.rot_gen();
                let b = g.config_matrix();
                let b_inv = g.inverse().config_matrix();
                let mut pair = DMatrix::zeros(2 * nd, 2 * nd);
                let half_ker = 0.5 * &kernel_full;
                pair.view_mut((0, 0), (nd, nd)).copy_from(&half_ker);
                pair.view_mut((nd, nd), (nd, nd)).copy_from(&half_ker);
                pair.view_mut((0, nd), (nd, nd))
                    .copy_from(&(0.5 * &kernel_full * b_inv));
                pair.view_mut((nd, 0), (nd, nd))
                    .copy_from(&(0.5 * &kernel_full * b));
                pair
            }
            _ => {
                let h0 = fixed_space_projector(problem.h0()).matrix;
                let h1 = fixed_space_projector(problem.h1()).matrix;
                let mut pair = DMatrix::zeros(2 * nd, 2 * nd);
                pair.view_mut((0, 0), (nd, nd)).copy_from(&h0);
                pair.view_mut((nd, nd), (nd, nd)).copy_from(&h1);
                pair
            }
        };
        let e = embedding_matrix(masses, d);
        let r = restriction_matrix(problem.bodies(), d);
        let mut e2 = DMatrix::zeros(2 * nd, 2 * block);
        e2.view_mut((0, 0), (nd, block)).copy_from(&e);
        e2.view_mut((nd, block), (nd, block)).copy_from(&e);
        let mut r2 = DMatrix::zeros(2 * block, 2 * nd);
        r2.view_mut((0, 0), (block, nd)).copy_from(&r);
        r2.view_mut((block, nd), (block, nd)).copy_from(&r);
        let endpoints = orthogonal_range_projector(&(r2 * endpoints_full * e2));

        let mut full = DMatrix::zeros(layout.len(), layout.len());
        for k in 1..=layout.fourier_modes {
            let range = layout.block_range(k);
            full.view_mut((range.start, range.start), (block, block))
                .copy_from(&interior);
        }
        let start0 = layout.block_range(0).start;
        let start1 = layout.block_range(layout.fourier_modes + 1).start;
        for (bi, bstart) in [(0usize, start0), (1usize, start1)] {
            for (bj, cstart) in [(0usize, start0), (1usize, start1)] {
                full.view_mut((bstart, cstart), (block, block)).copy_from(
                    &endpoints.view((bi * block, bj * block), (block, block)),
                );
            }
        }

        Ok(CoefficientProjector {
            layout,
            interior,
            endpoints,
            full,
        })
    }

    pub fn layout(&self) -> CoeffLayout {
        self.layout
    }

    /// The N×N composite matrix (symmetric, idempotent).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.full
    }

    pub fn interior_block(&self) -> &DMatrix<f64> {
        &self.interior
    }

    pub fn endpoint_block(&self) -> &DMatrix<f64> {
        &self.endpoints
    }

    /// Dimension of the projected subspace.
    pub fn rank(&self) -> usize {
        self.full.trace().round() as usize
    }

    pub fn project_flat(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.full * v
    }

    /// Endpoints pass through the boundary projector and the kernel
    /// projector, Fourier blocks through the kernel projector only; the
    /// path depends linearly on the coefficients, so projecting them
    /// projects the whole path.
    pub fn project_coefficients(&self, coeffs: &PathCoefficients) -> PathCoefficients {
        PathCoefficients::from_flat(self.layout, self.project_flat(coeffs.flat()))
            .expect("layout preserved")
    }

    /// Tangent vectors use the same matrices as points: the group acts
    /// linearly and orthogonally, so no separate pullback is needed.
    pub fn project_gradient(&self, grad: &DVector<f64>) -> DVector<f64> {
        self.project_flat(grad)
    }

    /// P · H · Pᵀ over coefficient space.
    pub fn project_hessian(&self, hess: &DMatrix<f64>) -> DMatrix<f64> {
        &self.full * hess * &self.full
    }
}
