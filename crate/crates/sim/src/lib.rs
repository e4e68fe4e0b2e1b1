//! Numerical ergodic averages on torus rotation systems.
//!
//! Every integral is evaluated in closed form on characters, so the only
//! sampling is over the box `[-N, N]^L`. Summation order is fixed, which makes
//! repeated runs bit identical.

pub mod average;
pub mod null;
pub mod seminorm;
pub mod system;
pub mod torus;

pub use average::{joint_ergodicity_test, multi_average, AverageResult, IntPolyMap, JointResult};
pub use null::{besicovitch_null_test, counterexample_sequence, doubling_demo, herglotz_split, ks_uniform, HerglotzSplit, NullTest};
pub use seminorm::{hk_seminorm_char, is_generic, vdc_bound_check, Kron2Check, SeminormValue};
pub use system::{parse_expr, SystemFile};
pub use torus::{dirichlet, e, frac_mul, Character, TorusSystem, TrigPoly};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("polynomial value leaves the 128-bit range")]
    Overflow,
    #[error("iterate is not integer valued at n = {0:?}")]
    NotIntegerValued(Vec<i64>),
    #[error("line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
}
