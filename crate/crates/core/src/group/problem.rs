use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::potential::PotentialModel;

use super::{
    check_mass_compatibility, quotient_order, FiniteGroup, GroupElement, DEFAULT_CLOSURE_CAP,
};

/// Classification of the quotient time action: a finite subgroup of O(2) is
/// either a rotation group, a single reflection, or dihedral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionType {
    Cyclic,
    Dihedral,
    Brake,
}

impl ActionType {
    /// Integer codes used by problem files: 0 = cyclic, 1 = dihedral,
    /// 2 = brake.
    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            0 => Ok(ActionType::Cyclic),
            1 => Ok(ActionType::Dihedral),
            2 => Ok(ActionType::Brake),
            other => Err(Error::validation(format!(
                "action_type must be 0 (cyclic), 1 (dihedral) or 2 (brake), got {other}"
            ))),
        }
    }

    pub fn code(&self) -> i64 {
        match self {
            ActionType::Cyclic => 0,
            ActionType::Dihedral => 1,
            ActionType::Brake => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ActionType::Cyclic => "cyclic",
            ActionType::Dihedral => "dihedral",
            ActionType::Brake => "brake",
        }
    }
}

/// Raw ingredients of a symmetry problem, before validation.
#[derive(Debug, Clone)]
pub struct SymmetryProblemSpec {
    pub name: String,
    pub bodies: usize,
    pub dim: usize,
    pub masses: Vec<f64>,
    pub action_type: ActionType,
    pub kernel_generators: Vec<GroupElement>,
    pub rot_gen: GroupElement,
    pub ref_gen: Option<GroupElement>,
    pub omega: DMatrix<f64>,
    pub fourier_modes: usize,
    pub potential: PotentialModel,
    /// Default number of quadrature sub-intervals on the fundamental domain.
    pub samples: usize,
    pub closure_cap: usize,
}

impl SymmetryProblemSpec {
    /// A spec with trivial symmetry: useful as a starting point for
    /// programmatic problem construction.
    pub fn unconstrained(name: &str, bodies: usize, dim: usize, fourier_modes: usize) -> Self {
        SymmetryProblemSpec {
            name: name.to_string(),
            bodies,
            dim,
            masses: vec![1.0; bodies],
            action_type: ActionType::Cyclic,
            kernel_generators: Vec::new(),
            rot_gen: GroupElement::identity(bodies, dim),
            ref_gen: None,
            omega: DMatrix::zeros(dim, dim),
            fourier_modes,
            potential: PotentialModel::newtonian(),
            samples: 200,
            closure_cap: DEFAULT_CLOSURE_CAP,
        }
    }

    pub fn validate(self) -> Result<SymmetryProblem> {
        SymmetryProblem::from_spec(self)
    }
}

/// A fully validated problem instance: group closures, boundary subgroups,
/// quotient metadata, masses, rotating frame and potential.
///
/// Immutable after construction; safe to share across parallel optimization
/// workers.
#[derive(Debug, Clone)]
pub struct SymmetryProblem {
    name: String,
    bodies: usize,
    dim: usize,
    masses: Vec<f64>,
    action_type: ActionType,
    kernel: FiniteGroup,
    full_group: FiniteGroup,
    rot_gen: GroupElement,
    ref_gen: Option<GroupElement>,
    /// |Ḡ|: number of fundamental segments in the whole period T = |Ḡ|·π.
    quotient_order: usize,
    /// Order of the rotation generator in the quotient.
    rot_order: usize,
    h0: FiniteGroup,
    h1: FiniteGroup,
    omega: DMatrix<f64>,
    fourier_modes: usize,
    potential: PotentialModel,
    samples: usize,
}

impl SymmetryProblem {
    fn from_spec(spec: SymmetryProblemSpec) -> Result<Self> {
        let mut issues: Vec<String> = Vec::new();
        let n = spec.bodies;
        let d = spec.dim;

        if n < 2 {
            issues.push(format!("need at least 2 bodies, got {n}"));
        }
        if d < 1 {
            issues.push(format!("space dimension must be positive, got {d}"));
        }
        if spec.masses.len() != n {
            issues.push(format!(
                "expected {n} masses, got {}",
                spec.masses.len()
            ));
        }
        for (i, &m) in spec.masses.iter().enumerate() {
            if !(m > 0.0) {
                issues.push(format!("mass of body {} must be positive, got {m}", i + 1));
            }
        }
        if spec.omega.nrows() != d || spec.omega.ncols() != d {
            issues.push(format!(
                "Omega must be {d}x{d}, got {}x{}",
                spec.omega.nrows(),
                spec.omega.ncols()
            ));
        } else {
            // antisymmetry is required exactly as parsed
            let defect = (&spec.omega + spec.omega.transpose()).abs().max();
            if defect != 0.0 {
                issues.push(format!(
                    "Omega is not antisymmetric (|Omega + Omega^T| = {defect:.3e})"
                ));
            }
        }
        let check_elem = |label: &str, e: &GroupElement, issues: &mut Vec<String>| {
            if e.bodies() != n || e.dim() != d {
                issues.push(format!(
                    "{label} generator is over (n={}, d={}), problem is (n={n}, d={d})",
                    e.bodies(),
                    e.dim()
                ));
            }
        };
        check_elem("rotation", &spec.rot_gen, &mut issues);
        if let Some(r) = &spec.ref_gen {
            check_elem("reflection", r, &mut issues);
        }
        for k in &spec.kernel_generators {
            check_elem("kernel", k, &mut issues);
        }
        if spec.ref_gen.is_none()
            && matches!(spec.action_type, ActionType::Dihedral | ActionType::Brake)
        {
            issues.push(format!(
                "{} actions need a reflection generator",
                spec.action_type.name()
            ));
        }
        if !issues.is_empty() {
            return Err(Error::Validation { issues });
        }

        let cap = spec.closure_cap;
        let mut kernel_gens = spec.kernel_generators.clone();
        kernel_gens.push(GroupElement::identity(n, d));
        let kernel = FiniteGroup::closure(&kernel_gens, cap)?;

        let rot_order = quotient_order(&spec.rot_gen, &kernel, cap)?;
        if spec.action_type == ActionType::Brake && rot_order != 1 {
            issues.push(format!(
                "brake action requires the rotation generator to lie in the kernel \
                 (its quotient order is {rot_order}); declare the action dihedral instead"
            ));
        }
        let quotient_order = match spec.action_type {
            ActionType::Cyclic => rot_order,
            ActionType::Dihedral => 2 * rot_order,
            ActionType::Brake => 2,
        };

        let mut all_gens = kernel_gens.clone();
        all_gens.push(spec.rot_gen.clone());
        if let Some(r) = &spec.ref_gen {
            all_gens.push(r.clone());
        }
        let full_group = FiniteGroup::closure(&all_gens, cap)?;

        // Boundary subgroups. Convention: t0 is fixed by the reflection
        // generator, t1 by rot ∘ ref.
        let (h0, h1) = match spec.action_type {
            ActionType::Cyclic => (kernel.clone(), kernel.clone()),
            ActionType::Brake => {
                let r = spec.ref_gen.as_ref().unwrap();
                let mut gens = kernel_gens.clone();
                gens.push(r.clone());
                let h = FiniteGroup::closure(&gens, cap)?;
                (h.clone(), h)
            }
            ActionType::Dihedral => {
                let r = spec.ref_gen.as_ref().unwrap();
                let mut gens0 = kernel_gens.clone();
                gens0.push(r.clone());
                let h0 = FiniteGroup::closure(&gens0, cap)?;
                let mut gens1 = kernel_gens.clone();
                gens1.push(spec.rot_gen.compose(r)?);
                let h1 = FiniteGroup::closure(&gens1, cap)?;
                (h0, h1)
            }
        };

        if let Err(v) = check_mass_compatibility(&spec.masses, &full_group) {
            issues.push(format!("masses are not compatible with the group: {v}"));
        }
        if !issues.is_empty() {
            return Err(Error::Validation { issues });
        }

        Ok(SymmetryProblem {
            name: spec.name,
            bodies: n,
            dim: d,
            masses: spec.masses,
            action_type: spec.action_type,
            kernel,
            full_group,
            rot_gen: spec.rot_gen,
            ref_gen: spec.ref_gen,
            quotient_order,
            rot_order,
            h0,
            h1,
            omega: spec.omega,
            fourier_modes: spec.fourier_modes,
            potential: spec.potential,
            samples: spec.samples,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bodies(&self) -> usize {
        self.bodies
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Free bodies after center-of-mass reduction: n - 1.
    pub fn free_bodies(&self) -> usize {
        self.bodies - 1
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn action_type(&self) -> ActionType {
        self.action_type
    }

    pub fn kernel(&self) -> &FiniteGroup {
        &self.kernel
    }

    pub fn full_group(&self) -> &FiniteGroup {
        &self.full_group
    }

    pub fn rot_gen(&self) -> &GroupElement {
        &self.rot_gen
    }

    pub fn ref_gen(&self) -> Option<&GroupElement> {
        self.ref_gen.as_ref()
    }

    /// |Ḡ|: the whole period is T = |Ḡ|·π and consists of |Ḡ| images of the
    /// fundamental domain.
    pub fn quotient_order(&self) -> usize {
        self.quotient_order
    }

    /// Order of the rotation generator in the quotient (|Ḡ| for cyclic,
    /// |Ḡ|/2 for dihedral actions).
    pub fn rot_order(&self) -> usize {
        self.rot_order
    }

    pub fn period(&self) -> f64 {
        self.quotient_order as f64 * PI
    }

    pub fn h0(&self) -> &FiniteGroup {
        &self.h0
    }

    pub fn h1(&self) -> &FiniteGroup {
        &self.h1
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn has_rotating_frame(&self) -> bool {
        self.omega.abs().max() != 0.0
    }

    pub fn fourier_modes(&self) -> usize {
        self.fourier_modes
    }

    pub fn potential(&self) -> &PotentialModel {
        &self.potential
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Flattened coefficient-vector length: (F+2)·(n-1)·d.
    pub fn coeff_len(&self) -> usize {
        (self.fourier_modes + 2) * self.free_bodies() * self.dim
    }

    /// Stable fingerprint of the problem inputs, used to confirm that a
    /// stored result was produced by an identical problem.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = Fnv1a::default();
        self.name.hash(&mut hasher);
        self.bodies.hash(&mut hasher);
        self.dim.hash(&mut hasher);
        for m in &self.masses {
            m.to_bits().hash(&mut hasher);
        }
        self.action_type.code().hash(&mut hasher);
        let hash_elem = |e: &GroupElement, h: &mut Fnv1a| {
            for v in e.rho().iter() {
                v.to_bits().hash(h);
            }
            e.sigma().images().hash(h);
        };
        for e in &self.kernelgens_for_hash() {
            hash_elem(e, &mut hasher);
        }
        hash_elem(&self.rot_gen, &mut hasher);
        if let Some(r) = &self.ref_gen {
            hash_elem(r, &mut hasher);
        }
        for v in self.omega.iter() {
            v.to_bits().hash(&mut hasher);
        }
        self.fourier_modes.hash(&mut hasher);
        self.potential.descriptor().hash(&mut hasher);
        hasher.finish()
    }

    fn kernelgens_for_hash(&self) -> Vec<GroupElement> {
        self.kernel.elements().to_vec()
    }
}

/// Minimal FNV-1a hasher: keeps fingerprints stable across platforms and
/// std versions, unlike `DefaultHasher`.
#[derive(Debug)]
struct Fnv1a(u64);

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }
}

impl Hasher for Fnv1a {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
}
