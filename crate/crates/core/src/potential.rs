//! Interaction potentials U = Σ_{i<j} m_i m_j / f(r_ij).
//!
//! The denominator shape f is pluggable: the Newtonian problem uses
//! f(r) = r, α-homogeneous variants use f(r) = r^α, and arbitrary shapes
//! can be supplied as callables.

use std::fmt;
use std::sync::Arc;

/// f(r) together with f'(r) and f''(r).
pub type ShapeFn = dyn Fn(f64) -> (f64, f64, f64) + Send + Sync;

#[derive(Clone)]
pub enum PotentialShape {
    /// No interaction at all: the action reduces to its kinetic part.
    None,
    /// f(r) = r^alpha. alpha = 1 is the Newtonian problem.
    Power { alpha: f64 },
    /// User-supplied f, f', f''. Not representable in problem files.
    Custom { name: String, eval: Arc<ShapeFn> },
}

impl fmt::Debug for PotentialShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialShape::None => write!(f, "None"),
            PotentialShape::Power { alpha } => write!(f, "Power {{ alpha: {alpha} }}"),
            PotentialShape::Custom { name, .. } => write!(f, "Custom {{ name: {name:?} }}"),
        }
    }
}

/// Potential model: the shape f plus a softening length (diagnostic only)
/// and the distance below which evaluation reports a collision.
#[derive(Debug, Clone)]
pub struct PotentialModel {
    pub shape: PotentialShape,
    pub softening: f64,
    pub collision_tolerance: f64,
}

pub const DEFAULT_COLLISION_TOL: f64 = 1e-9;

impl PotentialModel {
    pub fn newtonian() -> Self {
        PotentialModel {
            shape: PotentialShape::Power { alpha: 1.0 },
            softening: 0.0,
            collision_tolerance: DEFAULT_COLLISION_TOL,
        }
    }

    pub fn power(alpha: f64) -> Self {
        PotentialModel {
            shape: PotentialShape::Power { alpha },
            softening: 0.0,
            collision_tolerance: DEFAULT_COLLISION_TOL,
        }
    }

    pub fn none() -> Self {
        PotentialModel {
            shape: PotentialShape::None,
            softening: 0.0,
            collision_tolerance: 0.0,
        }
    }

    pub fn custom(name: &str, eval: Arc<ShapeFn>) -> Self {
        PotentialModel {
            shape: PotentialShape::Custom {
                name: name.to_string(),
                eval,
            },
            softening: 0.0,
            collision_tolerance: DEFAULT_COLLISION_TOL,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.shape, PotentialShape::None)
    }

    /// (f, f', f'') at separation r > 0, with softening folded in:
    /// the shape is evaluated at sqrt(r² + ε²) and differentiated in r.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        let raw = |r: f64| -> (f64, f64, f64) {
            match &self.shape {
                PotentialShape::None => (f64::INFINITY, 0.0, 0.0),
                PotentialShape::Power { alpha } => {
                    let a = *alpha;
                    (
                        r.powf(a),
                        a * r.powf(a - 1.0),
                        a * (a - 1.0) * r.powf(a - 2.0),
                    )
                }
                PotentialShape::Custom { eval, .. } => eval(r),
            }
        };
        if self.softening == 0.0 {
            return raw(r);
        }
        let eps = self.softening;
        let rs = (r * r + eps * eps).sqrt();
        let (f, df, ddf) = raw(rs);
        let drs = r / rs;
        let ddrs = 1.0 / rs - r * r / (rs * rs * rs);
        (f, df * drs, ddf * drs * drs + df * ddrs)
    }

    /// Short stable description, used in file echoes and fingerprints.
    pub fn descriptor(&self) -> String {
        let base = match &self.shape {
            PotentialShape::None => "none".to_string(),
            PotentialShape::Power { alpha } => format!("power(alpha={alpha})"),
            PotentialShape::Custom { name, .. } => format!("custom({name})"),
        };
        if self.softening != 0.0 {
            format!("{base}+soft({})", self.softening)
        } else {
            base
        }
    }
}
