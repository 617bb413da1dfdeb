//! The forcing function used during retrieval.
//!
//! For term comparison nodes, the facts collected along the unique root
//! path are closed under the transitivity axioms
//!
//! ```text
//! x = y ∧ y = z → x = z
//! x ≤ y ∧ y < z → x < z
//! x < y ∧ y ≤ z → x < z
//! x ≱ y ∧ y ≤ z → x ≱ z
//! x ≤ y ∧ y ≱ z → x ≱ z
//! ```
//!
//! inside a [`PartialOrdering`] over the top-level terms of the path.
//! Partial orderings are stored as triangular arrays and perfectly shared
//! in a [`TpoStore`], so nodes with the same knowledge hold the same id.
//!
//! Positivity nodes are forced by static sign analysis only.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linear::{LinearExpr, Sign3};
use crate::ordering::{Cmp3, TermOrder};
use crate::terms::{Signature, Term};
use crate::tod::EdgeLabel;

/// Knowledge about the pair `(a, b)`, read as "a REL b".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Relation {
    #[default]
    Unknown,
    Greater,
    Less,
    Equal,
    /// `a ≱ b`
    NotGeq,
    /// `a ≰ b`
    NotLeq,
    /// `a ≱ b ∧ a ≰ b`
    Incomparable,
}

const GT: u8 = 1;
const LT: u8 = 2;
const EQ: u8 = 4;
const NGEQ: u8 = 8;
const NLEQ: u8 = 16;

impl Relation {
    fn bits(self) -> u8 {
        match self {
            Relation::Unknown => 0,
            Relation::Greater => GT | NLEQ,
            Relation::Less => LT | NGEQ,
            Relation::Equal => EQ,
            Relation::NotGeq => NGEQ,
            Relation::NotLeq => NLEQ,
            Relation::Incomparable => NGEQ | NLEQ,
        }
    }

    fn from_bits(bits: u8) -> Option<Self> {
        let bits = bits | if bits & GT != 0 { NLEQ } else { 0 } | if bits & LT != 0 { NGEQ } else { 0 };
        let conflict = (bits & EQ != 0 && bits != EQ)
            || (bits & GT != 0 && bits & NGEQ != 0)
            || (bits & LT != 0 && bits & NLEQ != 0);
        if conflict {
            return None;
        }
        Some(match bits {
            0 => Relation::Unknown,
            EQ => Relation::Equal,
            b if b & GT != 0 => Relation::Greater,
            b if b & LT != 0 => Relation::Less,
            b if b == NGEQ | NLEQ => Relation::Incomparable,
            NGEQ => Relation::NotGeq,
            _ => Relation::NotLeq,
        })
    }

    /// The same fact read from the other side.
    pub fn flip(self) -> Self {
        match self {
            Relation::Greater => Relation::Less,
            Relation::Less => Relation::Greater,
            Relation::NotGeq => Relation::NotLeq,
            Relation::NotLeq => Relation::NotGeq,
            other => other,
        }
    }

    fn is_eq(self) -> bool {
        self == Relation::Equal
    }
    fn is_lt(self) -> bool {
        self == Relation::Less
    }
    fn is_le(self) -> bool {
        matches!(self, Relation::Less | Relation::Equal)
    }
    fn is_ngeq(self) -> bool {
        matches!(self, Relation::NotGeq | Relation::Less | Relation::Incomparable)
    }

    /// Facts about `(x, z)` implied by `x REL_xy y` and `y REL_yz z`.
    fn compose(xy: Relation, yz: Relation) -> Relation {
        if xy.is_eq() && yz.is_eq() {
            return Relation::Equal;
        }
        if (xy.is_le() && yz.is_lt()) || (xy.is_lt() && yz.is_le()) {
            return Relation::Less;
        }
        if (xy.is_ngeq() && yz.is_le()) || (xy.is_le() && yz.is_ngeq()) {
            return Relation::NotGeq;
        }
        Relation::Unknown
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Unknown => "?",
            Relation::Greater => ">",
            Relation::Less => "<",
            Relation::Equal => "=",
            Relation::NotGeq => "≱",
            Relation::NotLeq => "≰",
            Relation::Incomparable => "⋈",
        })
    }
}

/// `lhs REL rhs` as recorded by a traversed term comparison edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermConstraint {
    pub lhs: Term,
    pub rhs: Term,
    pub relation: Cmp3,
}

impl TermConstraint {
    pub fn new(lhs: Term, relation: Cmp3, rhs: Term) -> Self {
        Self { lhs, rhs, relation }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("term constraints on a reachable path are inconsistent")]
pub struct Inconsistent;

/// Transitively closed relation matrix over a sequence of terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct PartialOrdering {
    elements: Vec<Term>,
    // strict upper triangle: (i, j) with i < j at j*(j-1)/2 + i
    matrix: Vec<Relation>,
}

fn tri(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

impl PartialOrdering {
    pub fn elements(&self) -> &[Term] {
        &self.elements
    }

    pub fn index_of(&self, t: &Term) -> Option<usize> {
        self.elements.iter().position(|e| e == t)
    }

    pub fn get(&self, a: usize, b: usize) -> Relation {
        use std::cmp::Ordering::*;
        match a.cmp(&b) {
            Equal => Relation::Equal,
            Less => self.matrix[tri(a, b)],
            Greater => self.matrix[tri(b, a)].flip(),
        }
    }

    /// Relation between two terms, `Unknown` if either is not an element.
    pub fn relation(&self, s: &Term, t: &Term) -> Relation {
        if s == t {
            return Relation::Equal;
        }
        match (self.index_of(s), self.index_of(t)) {
            (Some(a), Some(b)) => self.get(a, b),
            _ => Relation::Unknown,
        }
    }

    fn set(&mut self, a: usize, b: usize, rel: Relation) {
        if a < b {
            self.matrix[tri(a, b)] = rel;
        } else {
            self.matrix[tri(b, a)] = rel.flip();
        }
    }

    fn push_element(&mut self, t: Term) -> usize {
        let n = self.elements.len();
        self.elements.push(t);
        self.matrix.extend(std::iter::repeat_n(Relation::Unknown, n));
        n
    }

    /// Merges `rel` into `(a, b)`; returns whether anything changed.
    fn add_fact(&mut self, a: usize, b: usize, rel: Relation) -> Result<bool, Inconsistent> {
        if a == b {
            return match rel {
                Relation::Unknown | Relation::Equal => Ok(false),
                _ => Err(Inconsistent),
            };
        }
        let cur = self.get(a, b);
        let merged = Relation::from_bits(cur.bits() | rel.bits()).ok_or(Inconsistent)?;
        if merged == cur {
            return Ok(false);
        }
        self.set(a, b, merged);
        Ok(true)
    }

    /// Applies the transitivity axioms to every triple that has a pair from
    /// `queue` as one of its premises, until nothing new follows.
    fn close_from(&mut self, mut queue: VecDeque<(usize, usize)>) -> Result<(), Inconsistent> {
        let n = self.elements.len();
        while let Some((a, b)) = queue.pop_front() {
            for c in 0..n {
                if c == a || c == b {
                    continue;
                }
                for (p, q) in [(a, b), (b, a)] {
                    // (p, q) as the first premise: p ? q, q ? c  ⇒  p ? c
                    let rel = Relation::compose(self.get(p, q), self.get(q, c));
                    if rel != Relation::Unknown && self.add_fact(p, c, rel)? {
                        queue.push_back((p, c));
                    }
                    // (p, q) as the second premise: c ? p, p ? q  ⇒  c ? q
                    let rel = Relation::compose(self.get(c, p), self.get(p, q));
                    if rel != Relation::Unknown && self.add_fact(c, q, rel)? {
                        queue.push_back((c, q));
                    }
                }
            }
        }
        Ok(())
    }

    /// Naive fixpoint over all triples. Used to check that incrementally
    /// built orderings are already closed.
    pub fn closed_from_scratch(&self) -> Result<PartialOrdering, Inconsistent> {
        let mut po = self.clone();
        let n = po.elements.len();
        loop {
            let mut changed = false;
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        if x == y || y == z || x == z {
                            continue;
                        }
                        let rel = Relation::compose(po.get(x, y), po.get(y, z));
                        if rel != Relation::Unknown {
                            changed |= po.add_fact(x, z, rel)?;
                        }
                    }
                }
            }
            if !changed {
                return Ok(po);
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closed_from_scratch().is_ok_and(|po| &po == self)
    }

    /// Adds `t` as an element if missing, together with the static facts
    /// `t > e` / `e > t` that hold for every instance. Returns its index
    /// and whether the element is new.
    fn ensure_element(
        &mut self,
        t: &Term,
        order: &TermOrder,
        queue: &mut VecDeque<(usize, usize)>,
    ) -> Result<usize, Inconsistent> {
        if let Some(i) = self.index_of(t) {
            return Ok(i);
        }
        let idx = self.push_element(t.clone());
        for j in 0..idx {
            let other = self.elements[j].clone();
            let rel = if order.greater_plain(t, &other) {
                Relation::Greater
            } else if order.greater_plain(&other, t) {
                Relation::Less
            } else {
                continue;
            };
            if self.add_fact(idx, j, rel)? {
                queue.push_back((idx, j));
            }
        }
        Ok(idx)
    }

    /// Copy of `self` extended with `elements` and `constraints`, closed.
    pub fn extended(
        &self,
        elements: &[Term],
        constraints: &[TermConstraint],
        order: &TermOrder,
    ) -> Result<PartialOrdering, Inconsistent> {
        let mut po = self.clone();
        let mut queue = VecDeque::new();
        for t in elements {
            po.ensure_element(t, order, &mut queue)?;
        }
        for c in constraints {
            let a = po.ensure_element(&c.lhs, order, &mut queue)?;
            let b = po.ensure_element(&c.rhs, order, &mut queue)?;
            let rel = match c.relation {
                Cmp3::Greater => Relation::Greater,
                Cmp3::Equal => Relation::Equal,
                Cmp3::NotGeq => Relation::NotGeq,
            };
            if po.add_fact(a, b, rel)? {
                queue.push_back((a, b));
            }
        }
        po.close_from(queue)?;
        Ok(po)
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> impl fmt::Display + 'a {
        DisplayPo { po: self, sig }
    }
}

struct DisplayPo<'a> {
    po: &'a PartialOrdering,
    sig: &'a Signature,
}

impl fmt::Display for DisplayPo<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let els = &self.po.elements;
        let mut first = true;
        for j in 0..els.len() {
            for i in 0..j {
                let rel = self.po.get(i, j);
                if rel != Relation::Unknown {
                    if !first {
                        write!(f, ", ")?;
                    }
                    first = false;
                    write!(f, "{} {} {}", els[i].display(self.sig), rel, els[j].display(self.sig))?;
                }
            }
        }
        Ok(())
    }
}

/// Handle to a shared partial ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TpoId(u32);

impl TpoId {
    /// The empty ordering associated with the root.
    pub const EMPTY: TpoId = TpoId(0);
}

/// Perfect-sharing store for partial orderings.
#[derive(Debug)]
pub struct TpoStore {
    items: Vec<Arc<PartialOrdering>>,
    table: HashMap<Arc<PartialOrdering>, TpoId>,
}

impl Default for TpoStore {
    fn default() -> Self {
        Self::new()
    }
}

impl TpoStore {
    // terms hash by identity; their weight cache does not take part
    #[allow(clippy::mutable_key_type)]
    pub fn new() -> Self {
        let empty = Arc::new(PartialOrdering::default());
        let mut table = HashMap::new();
        table.insert(empty.clone(), TpoId::EMPTY);
        Self {
            items: vec![empty],
            table,
        }
    }

    pub fn get(&self, id: TpoId) -> &PartialOrdering {
        &self.items[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn intern(&mut self, po: PartialOrdering) -> TpoId {
        if let Some(id) = self.table.get(&po) {
            return *id;
        }
        let id = TpoId(self.items.len() as u32);
        let po = Arc::new(po);
        self.items.push(po.clone());
        self.table.insert(po, id);
        id
    }

    /// Shared ordering for `base` plus new elements and constraints.
    /// Only facts derivable through the additions are recomputed.
    pub fn extend(
        &mut self,
        base: TpoId,
        elements: &[Term],
        constraints: &[TermConstraint],
        order: &TermOrder,
    ) -> Result<TpoId, Inconsistent> {
        let cur = self.get(base);
        let nothing_new = constraints.is_empty() && elements.iter().all(|e| cur.index_of(e).is_some());
        if nothing_new {
            return Ok(base);
        }
        let po = cur.extended(elements, constraints, order)?;
        Ok(self.intern(po))
    }
}

/// One step of a root path as seen by the term formula.
#[derive(Clone, Debug)]
pub enum PathStep {
    Compare { lhs: Term, rhs: Term, outcome: Cmp3 },
    Positivity,
}

/// Conjunction of term constraints describing a path.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TermFormula {
    /// Top-level terms in first-appearance order.
    pub top_level: Vec<Term>,
    pub constraints: Vec<TermConstraint>,
}

/// Term formula for a path ending in `current` (a term comparison label,
/// or `None` for a positivity node). Contains the outcome of every
/// traversed comparison plus `s > t` for every pair of top-level terms
/// with `s ≻ t` statically.
pub fn term_formula(path: &[PathStep], current: Option<(&Term, &Term)>, order: &TermOrder) -> TermFormula {
    let mut top_level: Vec<Term> = Vec::new();
    let mut push = |t: &Term| {
        if !top_level.contains(t) {
            top_level.push(t.clone());
        }
    };
    let mut constraints = Vec::new();
    for step in path {
        if let PathStep::Compare { lhs, rhs, outcome } = step {
            push(lhs);
            push(rhs);
            constraints.push(TermConstraint::new(lhs.clone(), *outcome, rhs.clone()));
        }
    }
    if let Some((s, t)) = current {
        push(s);
        push(t);
    }
    for s in &top_level {
        for t in &top_level {
            if s != t && order.greater_plain(s, t) {
                constraints.push(TermConstraint::new(s.clone(), Cmp3::Greater, t.clone()));
            }
        }
    }
    TermFormula {
        top_level,
        constraints,
    }
}

/// Builds the closed ordering for a formula in one go.
pub fn formula_ordering(formula: &TermFormula, order: &TermOrder) -> Result<PartialOrdering, Inconsistent> {
    PartialOrdering::default().extended(&formula.top_level, &formula.constraints, order)
}

/// Label forced at a term comparison node `s ∘ t`, given the closed
/// ordering of its path (which must contain `s` and `t`).
pub fn force_term(po: &PartialOrdering, s: &Term, t: &Term) -> Option<EdgeLabel> {
    match po.relation(s, t) {
        Relation::Greater => Some(EdgeLabel::Gt),
        Relation::Equal => Some(EdgeLabel::Eq),
        Relation::NotGeq | Relation::Less | Relation::Incomparable => Some(EdgeLabel::Ngeq),
        Relation::Unknown | Relation::NotLeq => None,
    }
}

/// Label forced at a positivity node `e ⊵ 0` for every query substitution.
///
/// `e > 0` stays positive under any substitution and so does `-e > 0`.
/// `e ≳ 0` is only stable when `e` is the constant 0: any variable with a
/// positive coefficient can be instantiated to a heavier term.
pub fn force_positivity(e: &LinearExpr, w0: i64) -> Option<EdgeLabel> {
    if e.is_constant() {
        return Some(match e.constant_part() {
            c if c > 0 => EdgeLabel::Gt,
            0 => EdgeLabel::Geq,
            _ => EdgeLabel::Ngeq,
        });
    }
    if e.sign(w0) == Sign3::Positive {
        return Some(EdgeLabel::Gt);
    }
    if (-e).sign(w0) == Sign3::Positive {
        return Some(EdgeLabel::Ngeq);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::script::parse_term;
    use crate::ordering::OrderKind;
    use crate::terms::{TermBank, VarId};

    fn setup() -> (TermBank, TermOrder) {
        let sig = Arc::new(
            Signature::new([("f", 1, 1, 3), ("g", 1, 1, 2), ("a", 0, 1, 1)]).unwrap(),
        );
        let order = TermOrder::new(OrderKind::Kbo, sig.clone());
        (TermBank::new(sig), order)
    }

    fn t(bank: &TermBank, s: &str) -> Term {
        let mut names = vec!["x".to_string(), "y".to_string(), "z".to_string()];
        bank.intern(&parse_term(s).unwrap(), &mut names).unwrap()
    }

    #[test]
    fn relation_merging() {
        let m = |a: Relation, b: Relation| Relation::from_bits(a.bits() | b.bits());
        assert_eq!(m(Relation::NotGeq, Relation::NotLeq), Some(Relation::Incomparable));
        assert_eq!(m(Relation::NotGeq, Relation::Less), Some(Relation::Less));
        assert_eq!(m(Relation::Greater, Relation::NotGeq), None);
        assert_eq!(m(Relation::Equal, Relation::NotGeq), None);
        assert_eq!(m(Relation::Greater, Relation::Less), None);
        assert_eq!(m(Relation::Greater, Relation::NotLeq), Some(Relation::Greater));
    }

    #[test]
    fn worked_forcing_example() {
        // path: f(x) ∘ y via ≱, g(y) ∘ z via =, current node x ∘ z
        let (bank, order) = setup();
        let (fx, x, y, gy, z) = (t(&bank, "f(x)"), t(&bank, "x"), t(&bank, "y"), t(&bank, "g(y)"), t(&bank, "z"));
        let path = vec![
            PathStep::Compare { lhs: fx.clone(), rhs: y.clone(), outcome: Cmp3::NotGeq },
            PathStep::Compare { lhs: gy.clone(), rhs: z.clone(), outcome: Cmp3::Equal },
        ];
        let formula = term_formula(&path, Some((&x, &z)), &order);
        assert_eq!(formula.top_level, vec![fx.clone(), y.clone(), gy.clone(), z.clone(), x.clone()]);
        let expected = vec![
            TermConstraint::new(fx.clone(), Cmp3::NotGeq, y.clone()),
            TermConstraint::new(gy.clone(), Cmp3::Equal, z.clone()),
            TermConstraint::new(fx.clone(), Cmp3::Greater, x.clone()),
            TermConstraint::new(gy.clone(), Cmp3::Greater, y.clone()),
        ];
        assert_eq!(formula.constraints.len(), expected.len());
        for c in &expected {
            assert!(formula.constraints.contains(c), "missing {c:?}");
        }

        let po = formula_ordering(&formula, &order).unwrap();
        assert!(po.relation(&x, &y).is_ngeq()); // derivation 1
        assert_eq!(po.relation(&z, &y), Relation::Greater); // derivation 2
        assert!(po.relation(&x, &z).is_ngeq()); // derivation 3
        assert_eq!(force_term(&po, &x, &z), Some(EdgeLabel::Ngeq));
        assert!(po.is_closed());
    }

    #[test]
    fn incremental_extension_matches_from_scratch() {
        let (bank, order) = setup();
        let (fx, x, y, gy, z) = (t(&bank, "f(x)"), t(&bank, "x"), t(&bank, "y"), t(&bank, "g(y)"), t(&bank, "z"));
        let mut store = TpoStore::new();
        let step1 = store
            .extend(TpoId::EMPTY, &[fx.clone(), y.clone()], &[], &order)
            .unwrap();
        let step2 = store
            .extend(
                step1,
                &[gy.clone(), z.clone()],
                &[TermConstraint::new(fx.clone(), Cmp3::NotGeq, y.clone())],
                &order,
            )
            .unwrap();
        let step3 = store
            .extend(
                step2,
                &[x.clone(), z.clone()],
                &[TermConstraint::new(gy.clone(), Cmp3::Equal, z.clone())],
                &order,
            )
            .unwrap();
        let po = store.get(step3);
        assert!(po.is_closed());
        assert_eq!(force_term(po, &x, &z), Some(EdgeLabel::Ngeq));
        assert_eq!(store.extend(step3, &[], &[], &order).unwrap(), step3);
        assert_eq!(store.extend(step3, std::slice::from_ref(&x), &[], &order).unwrap(), step3);
    }

    #[test]
    fn equal_knowledge_is_shared() {
        let (bank, order) = setup();
        let (x, y) = (t(&bank, "x"), t(&bank, "y"));
        let mut store = TpoStore::new();
        let a = store
            .extend(TpoId::EMPTY, &[x.clone(), y.clone()], &[TermConstraint::new(x.clone(), Cmp3::Equal, y.clone())], &order)
            .unwrap();
        let b0 = store.extend(TpoId::EMPTY, &[x.clone(), y.clone()], &[], &order).unwrap();
        let b = store
            .extend(b0, &[], &[TermConstraint::new(y.clone(), Cmp3::Equal, x.clone())], &order)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(force_term(store.get(a), &y, &x), Some(EdgeLabel::Eq));
    }

    #[test]
    fn positivity_forcing() {
        assert_eq!(force_positivity(&LinearExpr::zero(), 1), Some(EdgeLabel::Geq));
        assert_eq!(force_positivity(&LinearExpr::constant(2), 1), Some(EdgeLabel::Gt));
        assert_eq!(force_positivity(&LinearExpr::constant(-1), 1), Some(EdgeLabel::Ngeq));
        let x = LinearExpr::var(VarId(0));
        let y = LinearExpr::var(VarId(1));
        assert_eq!(force_positivity(&(&y - &x), 1), None);
        let mut x_plus_1 = x.clone();
        x_plus_1.add_constant(1);
        assert_eq!(force_positivity(&x_plus_1, 1), Some(EdgeLabel::Gt));
        assert_eq!(force_positivity(&(-&x_plus_1), 1), Some(EdgeLabel::Ngeq));
        // x - 1 is ≳ 0 but becomes > 0 for heavier instances of x
        let mut x_minus_1 = x.clone();
        x_minus_1.add_constant(-1);
        assert_eq!(force_positivity(&x_minus_1, 1), None);
    }

    #[test]
    fn empty_path_has_only_static_pairs() {
        let (bank, order) = setup();
        let (fx, x) = (t(&bank, "f(x)"), t(&bank, "x"));
        let formula = term_formula(&[], Some((&fx, &x)), &order);
        assert_eq!(formula.constraints, vec![TermConstraint::new(fx.clone(), Cmp3::Greater, x.clone())]);
        let formula = term_formula(&[PathStep::Positivity], None, &order);
        assert!(formula.constraints.is_empty());
    }
}
