//! Signatures, perfectly shared first-order terms, and substitutions.
//!
//! Terms are hash-consed inside a [`TermBank`]: two structurally equal
//! terms built through the same bank are the same allocation, so equality,
//! hashing and ordering of [`Term`] only look at the interned id.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::linear::LinearExpr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("symbol `{name}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("symbols `{0}` and `{1}` share a precedence value")]
    DuplicatePrecedence(String, String),
    #[error("symbol `{0}` has weight 0; all weights must be at least 1")]
    ZeroWeight(String),
    #[error("signature has no constant")]
    NoConstant,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub id: SymId,
    pub name: String,
    pub arity: usize,
    pub weight: u32,
    pub precedence: u32,
}

/// A finite signature with a KBO weight function and a total precedence.
#[derive(Clone, Debug)]
pub struct Signature {
    symbols: Vec<Symbol>,
    by_name: HashMap<String, SymId>,
    w0: u32,
}

impl Signature {
    /// Builds a signature from `(name, arity, weight, precedence)` tuples.
    /// A larger precedence value means a bigger symbol.
    pub fn new<S: Into<String>>(
        decls: impl IntoIterator<Item = (S, usize, u32, u32)>,
    ) -> Result<Self, TermError> {
        let mut symbols: Vec<Symbol> = Vec::new();
        let mut by_name = HashMap::new();
        let mut by_prec: HashMap<u32, String> = HashMap::new();
        for (name, arity, weight, precedence) in decls {
            let name = name.into();
            if by_name.contains_key(&name) {
                return Err(TermError::DuplicateSymbol(name));
            }
            if weight == 0 {
                return Err(TermError::ZeroWeight(name));
            }
            if let Some(other) = by_prec.insert(precedence, name.clone()) {
                return Err(TermError::DuplicatePrecedence(other, name));
            }
            let id = SymId(symbols.len() as u32);
            by_name.insert(name.clone(), id);
            symbols.push(Symbol {
                id,
                name,
                arity,
                weight,
                precedence,
            });
        }
        let w0 = symbols
            .iter()
            .filter(|s| s.arity == 0)
            .map(|s| s.weight)
            .min()
            .ok_or(TermError::NoConstant)?;
        Ok(Self {
            symbols,
            by_name,
            w0,
        })
    }

    pub fn symbol(&self, id: SymId) -> &Symbol {
        &self.symbols[id.0 as usize]
    }

    pub fn lookup(&self, name: &str) -> Option<SymId> {
        self.by_name.get(name).copied()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Smallest weight of a constant.
    pub fn w0(&self) -> i64 {
        i64::from(self.w0)
    }

    pub fn weight(&self, f: SymId) -> i64 {
        i64::from(self.symbol(f).weight)
    }

    /// `f ≫ g`
    pub fn prec_greater(&self, f: SymId, g: SymId) -> bool {
        self.symbol(f).precedence > self.symbol(g).precedence
    }
}

/// Either a variable or an application of a symbol to interned arguments.
#[derive(Debug)]
pub enum TermNode {
    Var(VarId),
    App(SymId, Box<[Term]>),
}

#[derive(Debug)]
struct TermData {
    id: u32,
    node: TermNode,
    ground: bool,
    weight: OnceLock<LinearExpr>,
}

/// An interned term. Cheap to clone; compared by identity.
#[derive(Clone)]
pub struct Term(Arc<TermData>);

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}
impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.id.hash(state)
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.id.cmp(&other.0.id)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.node {
            TermNode::Var(v) => write!(f, "{v}"),
            TermNode::App(s, args) => {
                write!(f, "#{}", s.0)?;
                if !args.is_empty() {
                    f.debug_list().entries(args.iter()).finish()?;
                }
                Ok(())
            }
        }
    }
}

impl Term {
    /// Interning id, unique within one bank.
    pub fn id(&self) -> u32 {
        self.0.id
    }

    pub fn node(&self) -> &TermNode {
        &self.0.node
    }

    pub fn as_var(&self) -> Option<VarId> {
        match self.0.node {
            TermNode::Var(v) => Some(v),
            TermNode::App(..) => None,
        }
    }

    pub fn head(&self) -> Option<SymId> {
        match self.0.node {
            TermNode::App(f, _) => Some(f),
            TermNode::Var(_) => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match &self.0.node {
            TermNode::App(_, args) => args,
            TermNode::Var(_) => &[],
        }
    }

    pub fn is_var(&self) -> bool {
        self.as_var().is_some()
    }

    pub fn is_ground(&self) -> bool {
        self.0.ground
    }

    /// Variables in left-to-right first-occurrence order.
    pub fn vars(&self) -> Vec<VarId> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<VarId>) {
        if self.is_ground() {
            return;
        }
        match &self.0.node {
            TermNode::Var(v) => {
                if !out.contains(v) {
                    out.push(*v);
                }
            }
            TermNode::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn occurs(&self, v: VarId) -> bool {
        !self.is_ground()
            && match &self.0.node {
                TermNode::Var(w) => *w == v,
                TermNode::App(_, args) => args.iter().any(|a| a.occurs(v)),
            }
    }

    /// Number of symbol and variable positions.
    pub fn size(&self) -> usize {
        1 + self.args().iter().map(Term::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.args().iter().map(Term::depth).max().unwrap_or(0)
    }

    /// Proper subterms, each listed once, in pre-order.
    pub fn proper_subterms(&self) -> Vec<Term> {
        let mut out: Vec<Term> = Vec::new();
        let mut stack: Vec<&Term> = self.args().iter().rev().collect();
        while let Some(t) = stack.pop() {
            if !out.contains(t) {
                out.push(t.clone());
            }
            stack.extend(t.args().iter().rev());
        }
        out
    }

    /// `|t|_f`
    pub fn sym_occurrences(&self, f: SymId) -> usize {
        let own = usize::from(self.head() == Some(f));
        own + self
            .args()
            .iter()
            .map(|a| a.sym_occurrences(f))
            .sum::<usize>()
    }

    /// `|t|_x`
    pub fn var_occurrences(&self, x: VarId) -> usize {
        match &self.0.node {
            TermNode::Var(v) => usize::from(*v == x),
            TermNode::App(_, args) => args.iter().map(|a| a.var_occurrences(x)).sum(),
        }
    }

    /// `|t| = Σ_f |t|_f·w(f) + Σ_x |t|_x·x`, computed from scratch.
    pub fn weight(&self, sig: &Signature) -> LinearExpr {
        let mut e = LinearExpr::zero();
        self.add_weight(sig, &mut e);
        e
    }

    fn add_weight(&self, sig: &Signature, acc: &mut LinearExpr) {
        match &self.0.node {
            TermNode::Var(v) => acc.add_var(*v, 1),
            TermNode::App(f, args) => {
                acc.add_constant(sig.weight(*f));
                args.iter().for_each(|a| a.add_weight(sig, acc));
            }
        }
    }

    /// Weight memoized in the shared term. The bank is tied to one
    /// signature, so the cached value never goes stale.
    pub fn memo_weight(&self, sig: &Signature) -> &LinearExpr {
        self.0.weight.get_or_init(|| match &self.0.node {
            TermNode::Var(v) => LinearExpr::var(*v),
            TermNode::App(f, args) => {
                let mut e = LinearExpr::constant(sig.weight(*f));
                for a in args.iter() {
                    e.add_scaled(a.memo_weight(sig), 1);
                }
                e
            }
        })
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> DisplayTerm<'a> {
        DisplayTerm { term: self, sig }
    }
}

pub struct DisplayTerm<'a> {
    term: &'a Term,
    sig: &'a Signature,
}

impl fmt::Display for DisplayTerm<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.term.node() {
            TermNode::Var(v) => write!(f, "{v}"),
            TermNode::App(s, args) => {
                write!(f, "{}", self.sig.symbol(*s).name)?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{}", a.display(self.sig))?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// A symbol or a variable, for occurrence counting.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Occ {
    Sym(SymId),
    Var(VarId),
}

/// `|t|_p`
pub fn occurrences(t: &Term, p: Occ) -> usize {
    match p {
        Occ::Sym(f) => t.sym_occurrences(f),
        Occ::Var(x) => t.var_occurrences(x),
    }
}

/// Un-interned term tree, as written in scripts. Heads are names; a name
/// is resolved against a signature when interned.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RawTerm {
    pub head: String,
    pub args: Vec<RawTerm>,
}

impl RawTerm {
    pub fn leaf(name: impl Into<String>) -> Self {
        Self {
            head: name.into(),
            args: Vec::new(),
        }
    }

    pub fn app(name: impl Into<String>, args: Vec<RawTerm>) -> Self {
        Self {
            head: name.into(),
            args,
        }
    }
}

impl fmt::Display for RawTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Var(VarId),
    App(SymId, Vec<u32>),
}

#[derive(Default)]
struct BankInner {
    table: HashMap<Key, Term>,
}

/// Hash-consing store for terms over one signature.
///
/// Interning takes an internal lock, so a bank can be shared behind an
/// `Arc`; reads of interned terms never touch the bank.
pub struct TermBank {
    sig: Arc<Signature>,
    inner: Mutex<BankInner>,
}

impl TermBank {
    pub fn new(sig: Arc<Signature>) -> Self {
        Self {
            sig,
            inner: Mutex::new(BankInner::default()),
        }
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    /// Number of distinct terms interned so far.
    pub fn len(&self) -> usize {
        self.inner.lock().expect("term bank poisoned").table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn intern_node(&self, key: Key, node: impl FnOnce() -> TermNode) -> Term {
        let mut inner = self.inner.lock().expect("term bank poisoned");
        if let Some(t) = inner.table.get(&key) {
            return t.clone();
        }
        let node = node();
        let ground = match &node {
            TermNode::Var(_) => false,
            TermNode::App(_, args) => args.iter().all(Term::is_ground),
        };
        let term = Term(Arc::new(TermData {
            id: inner.table.len() as u32,
            node,
            ground,
            weight: OnceLock::new(),
        }));
        inner.table.insert(key, term.clone());
        term
    }

    pub fn var(&self, v: VarId) -> Term {
        self.intern_node(Key::Var(v), || TermNode::Var(v))
    }

    pub fn app(&self, f: SymId, args: Vec<Term>) -> Result<Term, TermError> {
        let sym = self.sig.symbol(f);
        if sym.arity != args.len() {
            return Err(TermError::ArityMismatch {
                name: sym.name.clone(),
                expected: sym.arity,
                got: args.len(),
            });
        }
        Ok(self.app_unchecked(f, args))
    }

    fn app_unchecked(&self, f: SymId, args: Vec<Term>) -> Term {
        let key = Key::App(f, args.iter().map(Term::id).collect());
        self.intern_node(key, || TermNode::App(f, args.into_boxed_slice()))
    }

    pub fn constant(&self, name: &str) -> Result<Term, TermError> {
        let f = self
            .sig
            .lookup(name)
            .ok_or_else(|| TermError::UnknownSymbol(name.to_string()))?;
        self.app(f, Vec::new())
    }

    /// Interns a raw tree. `var_of` maps names that are not symbols to
    /// variables; returning `None` makes the name an unknown symbol.
    pub fn intern_with(
        &self,
        raw: &RawTerm,
        var_of: &mut impl FnMut(&str) -> Option<VarId>,
    ) -> Result<Term, TermError> {
        match self.sig.lookup(&raw.head) {
            Some(f) => {
                let args = raw
                    .args
                    .iter()
                    .map(|a| self.intern_with(a, var_of))
                    .collect::<Result<Vec<_>, _>>()?;
                self.app(f, args)
            }
            None if raw.args.is_empty() => match var_of(&raw.head) {
                Some(v) => Ok(self.var(v)),
                None => Err(TermError::UnknownSymbol(raw.head.clone())),
            },
            None => Err(TermError::UnknownSymbol(raw.head.clone())),
        }
    }

    /// Interns a raw tree, numbering undeclared names in first-occurrence
    /// order through `names`.
    pub fn intern(&self, raw: &RawTerm, names: &mut Vec<String>) -> Result<Term, TermError> {
        self.intern_with(raw, &mut |name| {
            let idx = match names.iter().position(|n| n == name) {
                Some(i) => i,
                None => {
                    names.push(name.to_string());
                    names.len() - 1
                }
            };
            Some(VarId(idx as u32))
        })
    }

    /// `tσ`
    pub fn apply(&self, t: &Term, subst: &Substitution) -> Term {
        if t.is_ground() || subst.is_empty() {
            return t.clone();
        }
        match t.node() {
            TermNode::Var(v) => subst.get(*v).cloned().unwrap_or_else(|| t.clone()),
            TermNode::App(f, args) => {
                let new_args: Vec<Term> = args.iter().map(|a| self.apply(a, subst)).collect();
                if new_args.iter().zip(args.iter()).all(|(a, b)| a == b) {
                    t.clone()
                } else {
                    self.app_unchecked(*f, new_args)
                }
            }
        }
    }

    /// Renames variables by `map`; unmapped variables stay put.
    pub fn rename(&self, t: &Term, map: &BTreeMap<VarId, VarId>) -> Term {
        let subst = Substitution::from_iter(map.iter().map(|(from, to)| (*from, self.var(*to))));
        self.apply(t, &subst)
    }
}

/// A finite mapping from variables to terms. Identity bindings are dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<VarId, Term>,
}

/// The empty substitution ε.
pub static EPSILON: Substitution = Substitution::new();

impl Substitution {
    pub const fn new() -> Self {
        Self {
            map: BTreeMap::new(),
        }
    }

    pub fn empty() -> Self {
        Self::new()
    }

    pub fn bind(&mut self, v: VarId, t: Term) {
        if t.as_var() == Some(v) {
            self.map.remove(&v);
        } else {
            self.map.insert(v, t);
        }
    }

    pub fn get(&self, v: VarId) -> Option<&Term> {
        self.map.get(&v)
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Term)> {
        self.map.iter().map(|(v, t)| (*v, t))
    }

    /// `σ(e)`: replaces every variable `x` in `e` by `|xσ|`.
    pub fn apply_linear(&self, e: &LinearExpr, sig: &Signature) -> LinearExpr {
        if self.is_empty() {
            return e.clone();
        }
        let mut out = LinearExpr::constant(e.constant_part());
        for (v, c) in e.coeffs() {
            match self.get(v) {
                Some(t) => out.add_scaled(t.memo_weight(sig), c),
                None => out.add_var(v, c),
            }
        }
        out
    }
}

impl FromIterator<(VarId, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (VarId, Term)>>(iter: I) -> Self {
        let mut s = Substitution::empty();
        for (v, t) in iter {
            s.bind(v, t);
        }
        s
    }
}

/// `σ(e)`, free-function form.
pub fn subst_linear(subst: &Substitution, e: &LinearExpr, sig: &Signature) -> LinearExpr {
    subst.apply_linear(e, sig)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(wf: u32) -> (Arc<Signature>, TermBank) {
        let sig = Arc::new(
            Signature::new([("f", 2, wf, 4), ("g", 1, 1, 3), ("a", 0, 1, 2), ("b", 0, 1, 1)])
                .unwrap(),
        );
        let bank = TermBank::new(sig.clone());
        (sig, bank)
    }

    fn t(bank: &TermBank, s: &str) -> Term {
        bank.intern(&crate::harness::script::parse_term(s).unwrap(), &mut vec!["x".into(), "y".into(), "z".into()])
            .unwrap()
    }

    #[test]
    fn interning_is_idempotent_and_shares_subterms() {
        let (_, bank) = setup(1);
        assert_eq!(t(&bank, "f(x,y)"), t(&bank, "f(x,y)"));
        assert_ne!(t(&bank, "f(x,y)"), t(&bank, "f(y,x)"));
        let l = t(&bank, "f(a,g(x))");
        let r = t(&bank, "g(a)");
        assert_eq!(l.args()[0].id(), r.args()[0].id());
    }

    #[test]
    fn arity_and_unknown_symbol_errors() {
        let (_, bank) = setup(1);
        let raw = RawTerm::app("f", vec![RawTerm::leaf("a")]);
        assert!(matches!(
            bank.intern(&raw, &mut vec![]),
            Err(TermError::ArityMismatch { expected: 2, got: 1, .. })
        ));
        let raw = RawTerm::app("h", vec![RawTerm::leaf("a")]);
        assert_eq!(
            bank.intern(&raw, &mut vec![]),
            Err(TermError::UnknownSymbol("h".into()))
        );
    }

    #[test]
    fn signature_rejects_bad_declarations() {
        assert!(matches!(
            Signature::new([("a", 0, 0, 1)]),
            Err(TermError::ZeroWeight(_))
        ));
        assert!(matches!(
            Signature::new([("a", 0, 1, 1), ("b", 0, 1, 1)]),
            Err(TermError::DuplicatePrecedence(..))
        ));
        assert_eq!(
            Signature::new([("g", 1, 1, 1)]).unwrap_err(),
            TermError::NoConstant
        );
        let sig = Signature::new([("g", 1, 1, 1), ("a", 0, 3, 2), ("b", 0, 2, 3)]).unwrap();
        assert_eq!(sig.w0(), 2);
    }

    #[test]
    fn apply_examples() {
        let (_, bank) = setup(1);
        let x = VarId(0);
        let y = VarId(1);
        let s: Substitution = [(x, t(&bank, "a"))].into_iter().collect();
        assert_eq!(bank.apply(&t(&bank, "f(x,x)"), &s), t(&bank, "f(a,a)"));
        assert_eq!(bank.apply(&t(&bank, "x"), &Substitution::empty()), t(&bank, "x"));
        let s: Substitution = [(x, t(&bank, "g(y)"))].into_iter().collect();
        assert_eq!(bank.apply(&t(&bank, "f(x,y)"), &s), t(&bank, "f(g(y),y)"));
        let s: Substitution = [(y, t(&bank, "y"))].into_iter().collect();
        assert!(s.is_empty());
    }

    #[test]
    fn occurrence_examples() {
        let (sig, bank) = setup(1);
        let fxx = t(&bank, "f(x,x)");
        let f = sig.lookup("f").unwrap();
        assert_eq!(occurrences(&fxx, Occ::Sym(f)), 1);
        assert_eq!(occurrences(&fxx, Occ::Var(VarId(0))), 2);
        assert_eq!(occurrences(&fxx, Occ::Var(VarId(1))), 0);
    }

    #[test]
    fn weight_examples() {
        let (sig, bank) = setup(2);
        let mut expect = LinearExpr::constant(2);
        expect.add_var(VarId(0), 2);
        assert_eq!(t(&bank, "f(x,x)").weight(&sig), expect);
        assert_eq!(t(&bank, "a").weight(&sig), LinearExpr::constant(1));

        let (sig, bank) = setup(1);
        let mut expect = LinearExpr::constant(3);
        expect.add_var(VarId(0), 1);
        let e = t(&bank, "f(a,g(x))");
        assert_eq!(e.weight(&sig), expect);
        assert_eq!(e.memo_weight(&sig), &expect);
    }

    #[test]
    fn subst_linear_examples() {
        let (sig, bank) = setup(2);
        let x = VarId(0);
        let y = VarId(1);
        let fxx = t(&bank, "f(x,x)").weight(&sig);
        let s: Substitution = [(x, t(&bank, "a"))].into_iter().collect();
        assert_eq!(subst_linear(&s, &fxx, &sig), LinearExpr::constant(4));
        assert_eq!(subst_linear(&Substitution::empty(), &fxx, &sig), fxx);

        let (sig, bank) = setup(1);
        let e = &LinearExpr::var(x) - &LinearExpr::var(y);
        let s: Substitution = [(x, t(&bank, "g(y)"))].into_iter().collect();
        assert_eq!(subst_linear(&s, &e, &sig), LinearExpr::constant(1));
    }

    #[test]
    fn vars_in_first_occurrence_order() {
        let (_, bank) = setup(1);
        assert_eq!(t(&bank, "f(y,g(x))").vars(), vec![VarId(1), VarId(0)]);
        assert!(t(&bank, "f(a,b)").is_ground());
        assert_eq!(t(&bank, "f(x,g(x))").proper_subterms().len(), 2);
    }
}
