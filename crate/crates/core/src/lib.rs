//! Exact symbolic machinery for PET induction on polynomial families.
//!
//! The crate is organised in four layers:
//!
//! - [`polycore`]: sparse polynomial vectors over formal coefficient symbols
//! - [`lattice`]: subgroups of `Z^d` in Hermite normal form, with saturation
//! - [`pet`]: van der Corput reduction, type/symbol bookkeeping, subgroup data
//! - [`report`]: ergodicity hypotheses rendered as condition sets
//!
//! Coefficients are arbitrary precision rationals and lattices are integer
//! matrices. Reduction schedules are planned on modular fingerprints and then
//! replayed exactly.

pub mod lattice;
pub mod pet;
pub mod polycore;
pub mod report;
mod sketch;

pub use lattice::{Index, IntLattice, LatticeError};
pub use pet::{GroupReport, Plan, Reduction, LevelData, PetError, PetTuple, Slot, StepBound};
pub use polycore::{ExpVec, FormalCoeff, Monomial, NumericInstance, PolyError, PolyVec, Symbol};
pub use report::{ConditionSet, ReportError, Theorem};
