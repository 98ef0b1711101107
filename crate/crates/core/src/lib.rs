//! Exact symbolic toolkit for the dp-rank of abelian groups.
//!
//! Groups are described by Szmielew data ([`SzmielewDescription`]): multiplicities
//! of the cyclic groups `Z(p^n)`, the p-local groups `Z_(p)`, the Prüfer groups
//! `Z(p^inf)` and `Q`, plus two finite devices for infinite data (per-prime cyclic
//! tails and a shape applied to every unlisted prime).
//!
//! The crate computes:
//! * strict normal forms and elementary equivalence ([`normalize`]),
//! * exact subgroup profiles of positive-primitive formulas ([`ppeval`]),
//! * dp-rank, strongness and vc-density by closed form ([`rank`]),
//! * the same dp-rank by exhaustive inp-pattern search ([`oracle`]),
//! * shatter functions of coset families in small finite groups ([`shatter`]).

pub mod arith;
pub mod core;
pub mod corpus;
pub mod dsl;
pub mod normalize;
pub mod oracle;
pub mod ppeval;
pub mod rank;
pub mod shatter;

pub use crate::core::{
    Atom, IndexClass, Mult, PPFormula, PrimeTailShape, SzmielewDescription, TailSpec, Violation,
};
