//! Finite symmetry groups acting on configurations.
//!
//! A group element is stored as a pair (orthogonal d×d matrix, permutation of
//! the n body labels). The time component of the action is not stored per
//! element; it lives in the quotient metadata of [`SymmetryProblem`]
//! (action type, quotient order and generator roles), which is all the
//! numerical pipeline needs.

mod problem;

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use problem::{ActionType, SymmetryProblem, SymmetryProblemSpec};

/// Entry tolerance when comparing matrices for group-element identity.
/// Entries are products of user-supplied literals, so drift stays far below
/// this.
pub const MATRIX_EQ_TOL: f64 = 1e-12;

/// Orthogonality / determinant tolerance for validating generator matrices.
pub const ORTHO_TOL: f64 = 1e-10;

/// Default cap on closure size. Practical symmetry groups stay well below
/// this; hitting the cap signals a generator of infinite order.
pub const DEFAULT_CLOSURE_CAP: usize = 10_000;

/// A permutation of `{0, .., n-1}` stored by images: `images[i] = sigma(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n).collect(),
        }
    }

    /// Builds a permutation from its images, checking bijectivity.
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &img in &images {
            if img >= n || seen[img] {
                return Err(Error::validation(format!(
                    "permutation images {images:?} are not a bijection on 0..{n}"
                )));
            }
            seen[img] = true;
        }
        Ok(Permutation { images })
    }

    /// Parses disjoint-cycle notation with 1-based indices, e.g. `"(1,2,3)"`
    /// or `"(1,2)(3,4)"`. Whitespace is ignored and fixed points are
    /// omitted; an empty string or `"()"` is the identity.
    pub fn parse_cycles(text: &str, n: usize) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut images: Vec<usize> = (0..n).collect();
        let mut moved = vec![false; n];
        let mut rest = compact.as_str();
        while !rest.is_empty() {
            let Some(stripped) = rest.strip_prefix('(') else {
                return Err(Error::validation(format!(
                    "cycle notation {text:?}: expected '(' at {rest:?}"
                )));
            };
            let Some(end) = stripped.find(')') else {
                return Err(Error::validation(format!(
                    "cycle notation {text:?}: unclosed cycle"
                )));
            };
            let body = &stripped[..end];
            rest = &stripped[end + 1..];
            if body.is_empty() {
                continue;
            }
            let mut cycle = Vec::new();
            for tok in body.split(',') {
                let idx: usize = tok.parse().map_err(|_| {
                    Error::validation(format!(
                        "cycle notation {text:?}: bad index {tok:?}"
                    ))
                })?;
                if idx == 0 || idx > n {
                    return Err(Error::validation(format!(
                        "cycle notation {text:?}: index {idx} out of range 1..={n}"
                    )));
                }
                cycle.push(idx - 1);
            }
            for w in 0..cycle.len() {
                let from = cycle[w];
                let to = cycle[(w + 1) % cycle.len()];
                if moved[from] {
                    return Err(Error::validation(format!(
                        "cycle notation {text:?}: index {} appears twice",
                        from + 1
                    )));
                }
                moved[from] = true;
                images[from] = to;
            }
        }
        Ok(Permutation { images })
    }

    /// Renders the permutation in 1-based cycle notation.
    pub fn to_cycles(&self) -> String {
        let n = self.images.len();
        let mut seen = vec![false; n];
        let mut out = String::new();
        for start in 0..n {
            if seen[start] || self.images[start] == start {
                seen[start] = true;
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut cur = self.images[start];
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = self.images[cur];
            }
            out.push('(');
            out.push_str(
                &cycle
                    .iter()
                    .map(|i| (i + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
            out.push(')');
        }
        if out.is_empty() {
            out.push_str("()");
        }
        out
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &img)| i == img)
    }

    /// Composition `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            images: (0..self.images.len())
                .map(|i| self.images[other.images[i]])
                .collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.images.len()];
        for (i, &img) in self.images.iter().enumerate() {
            images[img] = i;
        }
        Permutation { images }
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_cycles())
    }
}

/// Validates that `m` is orthogonal with |det| = 1 within [`ORTHO_TOL`].
pub fn check_orthogonal(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::validation(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = m.nrows();
    let gram = m.transpose() * m;
    let defect = (&gram - DMatrix::<f64>::identity(d, d)).abs().max();
    if defect > ORTHO_TOL {
        return Err(Error::validation(format!(
            "matrix is not orthogonal (|M^T M - I| = {defect:.3e})"
        )));
    }
    let det = m.determinant();
    if (det.abs() - 1.0).abs() > ORTHO_TOL {
        return Err(Error::validation(format!(
            "matrix determinant {det} is not +-1"
        )));
    }
    Ok(())
}

/// One symmetry: an orthogonal matrix acting on space together with a
/// relabeling of the bodies. Acting on a configuration `x`,
/// `(g x)_i = rho(g) x_{sigma(g)^{-1} i}`.
#[derive(Debug, Clone)]
pub struct GroupElement {
    rho: DMatrix<f64>,
    sigma: Permutation,
}

impl GroupElement {
    pub fn new(rho: DMatrix<f64>, sigma: Permutation) -> Result<Self> {
        check_orthogonal(&rho)?;
        Ok(GroupElement { rho, sigma })
    }

    pub fn identity(n: usize, d: usize) -> Self {
        GroupElement {
            rho: DMatrix::identity(d, d),
            sigma: Permutation::identity(n),
        }
    }

    pub fn rho(&self) -> &DMatrix<f64> {
        &self.rho
    }

    pub fn sigma(&self) -> &Permutation {
        &self.sigma
    }

    /// Space dimension d.
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    /// Number of bodies n.
    pub fn bodies(&self) -> usize {
        self.sigma.len()
    }

    /// Componentwise composition `self ∘ other`.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        if self.dim() != other.dim() || self.bodies() != other.bodies() {
            return Err(Error::DimensionMismatch(format!(
                "composing elements over (n={}, d={}) and (n={}, d={})",
                self.bodies(),
                self.dim(),
                other.bodies(),
                other.dim()
            )));
        }
        Ok(GroupElement {
            rho: &self.rho * &other.rho,
            sigma: self.sigma.compose(&other.sigma),
        })
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            rho: self.rho.transpose(),
            sigma: self.sigma.inverse(),
        }
    }

    pub fn approx_eq(&self, other: &GroupElement, tol: f64) -> bool {
        self.sigma == other.sigma && (&self.rho - &other.rho).abs().max() <= tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.sigma.is_identity()
            && (&self.rho - DMatrix::<f64>::identity(self.dim(), self.dim()))
                .abs()
                .max()
                <= tol
    }

    /// Applies the configuration action to an n×d configuration
    /// (row i = position of body i).
    pub fn act_config(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.bodies();
        let d = self.dim();
        debug_assert_eq!(x.nrows(), n);
        debug_assert_eq!(x.ncols(), d);
        let sigma_inv = self.sigma.inverse();
        let mut out = DMatrix::zeros(n, d);
        for i in 0..n {
            let src = sigma_inv.apply(i);
            for a in 0..d {
                let mut acc = 0.0;
                for b in 0..d {
                    acc += self.rho[(a, b)] * x[(src, b)];
                }
                out[(i, a)] = acc;
            }
        }
        out
    }

    /// The (n·d)×(n·d) matrix of the configuration action on stacked
    /// coordinates (body-major: index = i*d + a).
    pub fn config_matrix(&self) -> DMatrix<f64> {
        let n = self.bodies();
        let d = self.dim();
        let mut m = DMatrix::zeros(n * d, n * d);
        let sigma_inv = self.sigma.inverse();
        for i in 0..n {
            let j = sigma_inv.apply(i);
            for a in 0..d {
                for b in 0..d {
                    m[(i * d + a, j * d + b)] = self.rho[(a, b)];
                }
            }
        }
        m
    }
}

/// A finite group of configuration symmetries, closed under composition.
///
/// Elements are stored in deterministic breadth-first order from the
/// identity (generator order as given), so any matrix assembled by summing
/// over the group is reproducible bit-for-bit.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    elements: Vec<GroupElement>,
    n: usize,
    d: usize,
    // exact permutation -> candidate element indices, for fast membership
    perm_buckets: HashMap<Vec<usize>, Vec<usize>>,
}

impl FiniteGroup {
    /// The trivial group.
    pub fn trivial(n: usize, d: usize) -> Self {
        let mut g = FiniteGroup {
            elements: Vec::new(),
            n,
            d,
            perm_buckets: HashMap::new(),
        };
        g.push(GroupElement::identity(n, d));
        g
    }

    fn push(&mut self, e: GroupElement) {
        let idx = self.elements.len();
        self.perm_buckets
            .entry(e.sigma().images().to_vec())
            .or_default()
            .push(idx);
        self.elements.push(e);
    }

    /// Index of an element equal to `e` within [`MATRIX_EQ_TOL`], if any.
    pub fn find(&self, e: &GroupElement) -> Option<usize> {
        let bucket = self.perm_buckets.get(e.sigma().images())?;
        bucket
            .iter()
            .copied()
            .find(|&i| self.elements[i].approx_eq(e, MATRIX_EQ_TOL))
    }

    pub fn contains(&self, e: &GroupElement) -> bool {
        self.find(e).is_some()
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn identity(&self) -> &GroupElement {
        &self.elements[0]
    }

    pub fn bodies(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Smallest set containing the generators and the identity, closed
    /// under composition. Breadth-first from the identity; fails with
    /// [`Error::ClosureOverflow`] past `cap` elements.
    pub fn closure(generators: &[GroupElement], cap: usize) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::validation("closure of an empty generator set"));
        };
        let (n, d) = (first.bodies(), first.dim());
        for g in generators {
            if g.bodies() != n || g.dim() != d {
                return Err(Error::DimensionMismatch(
                    "generators mix body counts or space dimensions".into(),
                ));
            }
        }
        let mut group = FiniteGroup::trivial(n, d);
        let mut frontier = vec![0usize];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &idx in &frontier {
                for gen in generators {
                    let prod = group.elements[idx].compose(gen)?;
                    if group.find(&prod).is_none() {
                        if group.order() >= cap {
                            return Err(Error::ClosureOverflow { cap });
                        }
                        next.push(group.order());
                        group.push(prod);
                    }
                }
            }
            frontier = next;
        }
        Ok(group)
    }

    /// True when every element of `self` belongs to `other`.
    pub fn is_subgroup_of(&self, other: &FiniteGroup) -> bool {
        self.elements.iter().all(|e| other.contains(e))
    }
}

/// Smallest `m >= 1` with `rot^m` in `kernel`. For a cyclic action this is
/// the quotient order |Ḡ|; for a dihedral one it is |Ḡ|/2. The quotient
/// time rotation advances the loop by one fundamental segment.
pub fn quotient_order(rot: &GroupElement, kernel: &FiniteGroup, cap: usize) -> Result<usize> {
    let mut power = rot.clone();
    for m in 1..=cap {
        if kernel.contains(&power) {
            return Ok(m);
        }
        power = power.compose(rot)?;
    }
    Err(Error::ClosureOverflow { cap })
}

/// First mass-compatibility violation, if any: a group element whose
/// relabeling interchanges bodies of unequal mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MassViolation {
    pub element_index: usize,
    pub body_i: usize,
    pub body_j: usize,
    pub mass_i: f64,
    pub mass_j: f64,
}

impl fmt::Display for MassViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "element #{} maps body {} (mass {}) to body {} (mass {})",
            self.element_index,
            self.body_i + 1,
            self.mass_i,
            self.body_j + 1,
            self.mass_j
        )
    }
}

/// Checks that only bodies of equal mass are interchanged by the group.
/// Masses are compared exactly as parsed.
pub fn check_mass_compatibility(
    masses: &[f64],
    group: &FiniteGroup,
) -> std::result::Result<(), MassViolation> {
    for (idx, g) in group.elements().iter().enumerate() {
        let sigma_inv = g.sigma().inverse();
        for i in 0..masses.len() {
            let j = sigma_inv.apply(i);
            if j != i && masses[i] != masses[j] {
                return Err(MassViolation {
                    element_index: idx,
                    body_i: i,
                    body_j: j,
                    mass_i: masses[i],
                    mass_j: masses[j],
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests;
