//! Finite product domains, relations, fibers, Boolean expressions and exact
//! product measures.

pub mod domain;
pub mod expr;
pub mod fiber;
pub mod measure;
pub mod set;

pub use domain::{mixed_radix, ProductDomain};
pub use expr::{
    eval_expr, Atom, AtomResolver, BoolExpr, Dnf, FamilyResolver, FiberAtom, FiberSource, Literal,
};
pub use fiber::{cylinder_expand, FiberSpec};
pub use measure::{measure_of, symdiff_measure, ProductMeasure};
pub use set::{Relation, SetFamily};
