//! Term ordering diagrams: post-ordering checks for unit equalities under
//! KBO and LPO, specialized lazily to the substitutions they are asked about.

pub mod forcing;
pub mod harness;
pub mod index;
pub mod linear;
pub mod ordering;
pub mod terms;
pub mod tod;

pub use forcing::{PartialOrdering, Relation, TermConstraint, TpoId, TpoStore};
pub use index::{IndexError, IndexMode, PostOrderingIndex, Stats};
pub use linear::{LinearExpr, Sign3};
pub use ordering::{ClosureTerm, Cmp3, OrderKind, TermOrder};
pub use terms::{RawTerm, Signature, SymId, Substitution, Term, TermBank, TermError, VarId};
pub use tod::{EdgeLabel, EqId, NodeId, NodeKind, Tod, TodCounters, TodError, Want};
