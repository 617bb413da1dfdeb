//! KBO and LPO over terms and over closure terms.
//!
//! Three routes compute the same relation:
//! - [`TermOrder::compare`] follows the textbook clauses on plain terms,
//! - [`TermOrder::compare_closure`] follows the same clauses on closure terms
//!   `s·σ` without building `sσ`,
//! - [`TermOrder::greater`] is a fail-fast variant that only certifies `>`
//!   (reporting equality on the way) and reuses weights memoized in the
//!   shared term representation.

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use crate::linear::{LinearExpr, Sign3};
use crate::terms::{Signature, Substitution, Term, TermNode, EPSILON};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderKind {
    Kbo,
    Lpo,
}

impl fmt::Display for OrderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderKind::Kbo => "kbo",
            OrderKind::Lpo => "lpo",
        })
    }
}

/// Result of checking `s ≻ t`: greater, equal, or neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cmp3 {
    Greater,
    Equal,
    NotGeq,
}

/// A term paired with a substitution, standing for `term·subst`.
#[derive(Clone, Copy, Debug)]
pub struct ClosureTerm<'a> {
    pub term: &'a Term,
    pub subst: &'a Substitution,
}

impl<'a> ClosureTerm<'a> {
    pub fn new(term: &'a Term, subst: &'a Substitution) -> Self {
        Self { term, subst }
    }

    pub fn plain(term: &'a Term) -> Self {
        Self {
            term,
            subst: &EPSILON,
        }
    }

    /// Steps through a variable into its binding (cases 2/3 of the closure
    /// definitions). An unbound variable stands for itself under ε.
    fn deref(self) -> Self {
        match self.term.node() {
            TermNode::Var(x) if !self.subst.is_empty() => match self.subst.get(*x) {
                Some(u) => ClosureTerm::plain(u),
                None => ClosureTerm::plain(self.term),
            },
            _ => self,
        }
    }
}

/// `s·σ = t·θ`, decided without instantiating either side.
pub fn closure_equal(s: ClosureTerm<'_>, t: ClosureTerm<'_>) -> bool {
    if (s.subst.is_empty() && t.subst.is_empty()) || (s.term.is_ground() && t.term.is_ground()) {
        return s.term == t.term;
    }
    if !s.subst.is_empty() && s.term.is_var() {
        return closure_equal(s.deref(), t);
    }
    if !t.subst.is_empty() && t.term.is_var() {
        return closure_equal(s, t.deref());
    }
    match (s.term.node(), t.term.node()) {
        (TermNode::App(f, ss), TermNode::App(g, ts)) if f == g => ss
            .iter()
            .zip(ts.iter())
            .all(|(a, b)| closure_equal(ClosureTerm::new(a, s.subst), ClosureTerm::new(b, t.subst))),
        _ => false,
    }
}

/// `|s·σ|`, following the closure weight recursion.
pub fn closure_weight(s: ClosureTerm<'_>, sig: &Signature) -> LinearExpr {
    let mut acc = LinearExpr::zero();
    add_closure_weight(s, sig, &mut acc);
    acc
}

fn add_closure_weight(s: ClosureTerm<'_>, sig: &Signature, acc: &mut LinearExpr) {
    match s.term.node() {
        TermNode::Var(x) => match s.subst.get(*x) {
            Some(u) => acc.add_scaled(&u.weight(sig), 1),
            None => acc.add_var(*x, 1),
        },
        TermNode::App(f, args) => {
            acc.add_constant(sig.weight(*f));
            for a in args.iter() {
                add_closure_weight(ClosureTerm::new(a, s.subst), sig, acc);
            }
        }
    }
}

/// Fail-fast verdict: `Fail` covers both "less" and "incomparable".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Uni {
    Greater,
    Equal,
    Fail,
}

/// A KBO or LPO instance over one signature.
#[derive(Clone, Debug)]
pub struct TermOrder {
    kind: OrderKind,
    sig: Arc<Signature>,
    memoize: bool,
}

impl TermOrder {
    pub fn new(kind: OrderKind, sig: Arc<Signature>) -> Self {
        Self {
            kind,
            sig,
            memoize: true,
        }
    }

    /// Turns weight memoization in shared terms on or off. Results are
    /// identical either way.
    pub fn with_memoization(mut self, memoize: bool) -> Self {
        self.memoize = memoize;
        self
    }

    pub fn kind(&self) -> OrderKind {
        self.kind
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn w0(&self) -> i64 {
        self.sig.w0()
    }

    fn weight_of<'t>(&self, t: &'t Term) -> Cow<'t, LinearExpr> {
        if self.memoize {
            Cow::Borrowed(t.memo_weight(&self.sig))
        } else {
            Cow::Owned(t.weight(&self.sig))
        }
    }

    /// `|s| - |t|`
    pub fn weight_diff(&self, s: &Term, t: &Term) -> LinearExpr {
        self.weight_of(s).as_ref() - self.weight_of(t).as_ref()
    }

    pub fn compare(&self, s: &Term, t: &Term) -> Cmp3 {
        if s == t {
            return Cmp3::Equal;
        }
        let greater = match self.kind {
            OrderKind::Kbo => self.kbo_greater(s, t),
            OrderKind::Lpo => self.lpo_greater(s, t),
        };
        if greater {
            Cmp3::Greater
        } else {
            Cmp3::NotGeq
        }
    }

    pub fn greater_plain(&self, s: &Term, t: &Term) -> bool {
        self.compare(s, t) == Cmp3::Greater
    }

    // weight, then precedence, then arguments; with a variable on either side only the weight test can hold
    fn kbo_greater(&self, s: &Term, t: &Term) -> bool {
        let sign = self.weight_diff(s, t).sign(self.w0());
        if sign == Sign3::Positive {
            return true;
        }
        if sign != Sign3::NonNegative {
            return false;
        }
        match (s.node(), t.node()) {
            (TermNode::App(f, ss), TermNode::App(g, ts)) => {
                if self.sig.prec_greater(*f, *g) {
                    return true;
                }
                if f != g {
                    return false;
                }
                match ss.iter().zip(ts.iter()).position(|(a, b)| a != b) {
                    Some(i) => self.kbo_greater(&ss[i], &ts[i]),
                    None => false,
                }
            }
            _ => false,
        }
    }

    fn lpo_greater(&self, s: &Term, t: &Term) -> bool {
        let TermNode::App(f, ss) = s.node() else {
            return false;
        };
        // some argument is at least t
        if ss.iter().any(|si| si == t || self.lpo_greater(si, t)) {
            return true;
        }
        let TermNode::App(g, ts) = t.node() else {
            return false;
        };
        if f == g {
            // the first differing argument decides the lexicographic step
            if let Some(i) = ss.iter().zip(ts.iter()).position(|(a, b)| a != b) {
                if self.lpo_greater(&ss[i], &ts[i])
                    && ts[i + 1..].iter().all(|tk| self.lpo_greater(s, tk))
                {
                    return true;
                }
            }
            false
        } else {
            // bigger head
            self.sig.prec_greater(*f, *g) && ts.iter().all(|tk| self.lpo_greater(s, tk))
        }
    }

    /// Compares `s·σ` with `t·θ`, equal to comparing `sσ` with `tθ`.
    pub fn compare_closure(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>) -> Cmp3 {
        if (s.subst.is_empty() && t.subst.is_empty()) || (s.term.is_ground() && t.term.is_ground())
        {
            return self.compare(s.term, t.term);
        }
        if !s.subst.is_empty() && s.term.is_var() {
            return self.compare_closure(s.deref(), t);
        }
        if !t.subst.is_empty() && t.term.is_var() {
            return self.compare_closure(s, t.deref());
        }
        if closure_equal(s, t) {
            return Cmp3::Equal;
        }
        let greater = match self.kind {
            OrderKind::Kbo => self.kbo_closure_greater(s, t),
            OrderKind::Lpo => self.lpo_closure_greater(s, t),
        };
        if greater {
            Cmp3::Greater
        } else {
            Cmp3::NotGeq
        }
    }

    fn closure_greater(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>) -> bool {
        self.compare_closure(s, t) == Cmp3::Greater
    }

    // weight, then precedence, then arguments, on closures
    fn kbo_closure_greater(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>) -> bool {
        let diff = &closure_weight(s, &self.sig) - &closure_weight(t, &self.sig);
        let sign = diff.sign(self.w0());
        if sign == Sign3::Positive {
            return true;
        }
        if sign != Sign3::NonNegative {
            return false;
        }
        match (s.term.node(), t.term.node()) {
            (TermNode::App(f, ss), TermNode::App(g, ts)) => {
                if self.sig.prec_greater(*f, *g) {
                    return true;
                }
                if f != g {
                    return false;
                }
                for (a, b) in ss.iter().zip(ts.iter()) {
                    let a = ClosureTerm::new(a, s.subst);
                    let b = ClosureTerm::new(b, t.subst);
                    if !closure_equal(a, b) {
                        return self.closure_greater(a, b);
                    }
                }
                false
            }
            _ => false,
        }
    }

    fn lpo_closure_greater(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>) -> bool {
        let TermNode::App(f, ss) = s.term.node() else {
            return false;
        };
        // some argument is at least t
        if ss
            .iter()
            .any(|si| self.compare_closure(ClosureTerm::new(si, s.subst), t) != Cmp3::NotGeq)
        {
            return true;
        }
        let TermNode::App(g, ts) = t.term.node() else {
            return false;
        };
        let all_args_below = |from: usize| {
            ts[from..]
                .iter()
                .all(|tk| self.closure_greater(s, ClosureTerm::new(tk, t.subst)))
        };
        if f == g {
            // same head: lexicographic
            for (i, (a, b)) in ss.iter().zip(ts.iter()).enumerate() {
                let a = ClosureTerm::new(a, s.subst);
                let b = ClosureTerm::new(b, t.subst);
                if !closure_equal(a, b) {
                    return self.closure_greater(a, b) && all_args_below(i + 1);
                }
            }
            false
        } else {
            // bigger head
            self.sig.prec_greater(*f, *g) && all_args_below(0)
        }
    }

    /// Unidirectional `s·σ ≻ t·θ`.
    pub fn greater(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>) -> bool {
        let mut steps = 0;
        self.greater_counted(s, t, &mut steps)
    }

    /// Like [`greater`](Self::greater); adds the number of recursive
    /// comparison steps taken to `steps`.
    pub fn greater_counted(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>, steps: &mut u64) -> bool {
        self.uni(s, t, steps) == Uni::Greater
    }

    /// Unidirectional check that also reports equality, which falls out of
    /// the lexicographic scan at no extra cost.
    pub fn greater_or_equal(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>) -> Cmp3 {
        let mut steps = 0;
        match self.uni(s, t, &mut steps) {
            Uni::Greater => Cmp3::Greater,
            Uni::Equal => Cmp3::Equal,
            Uni::Fail => Cmp3::NotGeq,
        }
    }

    fn uni(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>, steps: &mut u64) -> Uni {
        *steps += 1;
        let s = s.deref();
        let t = t.deref();
        let plain =
            (s.subst.is_empty() && t.subst.is_empty()) || (s.term.is_ground() && t.term.is_ground());
        if plain && s.term == t.term {
            return Uni::Equal;
        }
        match self.kind {
            OrderKind::Kbo => self.kbo_uni(s, t, steps),
            OrderKind::Lpo => self.lpo_uni(s, t, steps),
        }
    }

    /// `σ(|s|)` from the memoized `|s|` and the memoized weights of the
    /// bindings.
    fn closure_weight_memo<'t>(&self, s: ClosureTerm<'t>) -> Cow<'t, LinearExpr> {
        if s.subst.is_empty() || s.term.is_ground() {
            return self.weight_of(s.term);
        }
        if self.memoize {
            Cow::Owned(s.subst.apply_linear(s.term.memo_weight(&self.sig), &self.sig))
        } else {
            Cow::Owned(closure_weight(s, &self.sig))
        }
    }

    fn kbo_uni(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>, steps: &mut u64) -> Uni {
        let diff = self.closure_weight_memo(s).as_ref() - self.closure_weight_memo(t).as_ref();
        match diff.sign(self.w0()) {
            Sign3::Positive => return Uni::Greater,
            Sign3::NotNonNegative => return Uni::Fail,
            Sign3::NonNegative => {}
        }
        match (s.term.node(), t.term.node()) {
            (TermNode::App(f, ss), TermNode::App(g, ts)) => {
                if f != g {
                    return if self.sig.prec_greater(*f, *g) {
                        Uni::Greater
                    } else {
                        Uni::Fail
                    };
                }
                for (a, b) in ss.iter().zip(ts.iter()) {
                    match self.uni(ClosureTerm::new(a, s.subst), ClosureTerm::new(b, t.subst), steps) {
                        Uni::Equal => continue,
                        other => return other,
                    }
                }
                Uni::Equal
            }
            (TermNode::Var(x), TermNode::Var(y)) if x == y => Uni::Equal,
            _ => Uni::Fail,
        }
    }

    fn lpo_uni(&self, s: ClosureTerm<'_>, t: ClosureTerm<'_>, steps: &mut u64) -> Uni {
        let (f, ss) = match s.term.node() {
            TermNode::App(f, ss) => (*f, ss),
            TermNode::Var(x) => {
                return if t.term.as_var() == Some(*x) {
                    Uni::Equal
                } else {
                    Uni::Fail
                };
            }
        };
        let some_arg_geq = |from: usize, steps: &mut u64| {
            ss[from..]
                .iter()
                .any(|si| self.uni(ClosureTerm::new(si, s.subst), t, steps) != Uni::Fail)
        };
        let verdict = |b: bool| if b { Uni::Greater } else { Uni::Fail };
        let (g, ts) = match t.term.node() {
            TermNode::App(g, ts) => (*g, ts),
            TermNode::Var(_) => return verdict(some_arg_geq(0, steps)),
        };
        let above_all = |from: usize, steps: &mut u64| {
            ts[from..]
                .iter()
                .all(|tk| self.uni(s, ClosureTerm::new(tk, t.subst), steps) == Uni::Greater)
        };
        if f == g {
            for (i, (a, b)) in ss.iter().zip(ts.iter()).enumerate() {
                match self.uni(ClosureTerm::new(a, s.subst), ClosureTerm::new(b, t.subst), steps) {
                    Uni::Equal => continue,
                    Uni::Greater => return verdict(above_all(i + 1, steps)),
                    // s_i ⋡ t_i, so s_j ⪰ t for j ≤ i is impossible
                    Uni::Fail => return verdict(some_arg_geq(i + 1, steps)),
                }
            }
            Uni::Equal
        } else if self.sig.prec_greater(f, g) {
            verdict(above_all(0, steps))
        } else {
            verdict(some_arg_geq(0, steps))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::script::parse_term;
    use crate::terms::{TermBank, VarId};

    struct Fx {
        bank: TermBank,
        names: Vec<String>,
    }

    impl Fx {
        fn new(decls: &[(&str, usize, u32, u32)]) -> Self {
            let sig = Arc::new(Signature::new(decls.iter().copied()).unwrap());
            Self {
                bank: TermBank::new(sig),
                names: ["x", "y", "z", "u"].iter().map(|s| s.to_string()).collect(),
            }
        }
        fn t(&mut self, s: &str) -> Term {
            self.bank.intern(&parse_term(s).unwrap(), &mut self.names).unwrap()
        }
        fn order(&self, kind: OrderKind) -> TermOrder {
            TermOrder::new(kind, self.bank.signature().clone())
        }
        fn subst(&mut self, binds: &[(&str, &str)]) -> Substitution {
            binds
                .iter()
                .map(|(v, t)| {
                    let var = self.t(v).as_var().unwrap();
                    (var, self.t(t))
                })
                .collect()
        }
    }

    fn std_fx() -> Fx {
        // g ≫ f ≫ b ≫ a, all weights 1
        Fx::new(&[("g", 1, 1, 4), ("f", 2, 1, 3), ("b", 0, 1, 2), ("a", 0, 1, 1)])
    }

    #[test]
    fn kbo_examples() {
        let mut fx = std_fx();
        let kbo = fx.order(OrderKind::Kbo);
        let (fxy, fyx) = (fx.t("f(x,y)"), fx.t("f(y,x)"));
        assert_eq!(kbo.compare(&fxy, &fyx), Cmp3::NotGeq);
        let (fxx, x) = (fx.t("f(x,x)"), fx.t("x"));
        assert_eq!(kbo.compare(&fxx, &x), Cmp3::Greater);
        let (ga, faa) = (fx.t("g(a)"), fx.t("f(a,a)"));
        assert_eq!(kbo.compare(&ga, &faa), Cmp3::NotGeq);
        assert_eq!(kbo.compare(&faa, &ga), Cmp3::Greater);
        assert_eq!(kbo.compare(&x, &x), Cmp3::Equal);
    }

    #[test]
    fn lpo_examples() {
        let mut fx = std_fx();
        let lpo = fx.order(OrderKind::Lpo);
        let (fab, a) = (fx.t("f(a,b)"), fx.t("a"));
        assert_eq!(lpo.compare(&fab, &a), Cmp3::Greater);
        let (fxy, fyx) = (fx.t("f(x,y)"), fx.t("f(y,x)"));
        assert_eq!(lpo.compare(&fxy, &fyx), Cmp3::NotGeq);
        let (gx, fxx) = (fx.t("g(x)"), fx.t("f(x,x)"));
        assert_eq!(lpo.compare(&gx, &fxx), Cmp3::Greater);
        let (x, y) = (fx.t("x"), fx.t("y"));
        assert_eq!(lpo.compare(&x, &y), Cmp3::NotGeq);
        assert_eq!(lpo.compare(&x, &x), Cmp3::Equal);
        assert_eq!(lpo.compare(&x, &gx), Cmp3::NotGeq);
    }

    #[test]
    fn closure_equality_examples() {
        let mut fx = std_fx();
        let (l, r) = (fx.t("f(x,b)"), fx.t("f(a,y)"));
        let sigma = fx.subst(&[("x", "a")]);
        let theta = fx.subst(&[("y", "b")]);
        assert!(closure_equal(ClosureTerm::new(&l, &sigma), ClosureTerm::new(&r, &theta)));
        assert!(closure_equal(ClosureTerm::plain(&l), ClosureTerm::plain(&l)));
        let (x, b) = (fx.t("x"), fx.t("b"));
        assert!(!closure_equal(ClosureTerm::new(&x, &sigma), ClosureTerm::plain(&b)));
    }

    #[test]
    fn closure_weight_examples() {
        let mut fx = std_fx();
        let sig = fx.bank.signature().clone();
        let x = fx.t("x");
        let sigma = fx.subst(&[("x", "f(y,z)")]);
        let mut expect = LinearExpr::constant(1);
        expect.add_var(VarId(1), 1);
        expect.add_var(VarId(2), 1);
        assert_eq!(closure_weight(ClosureTerm::new(&x, &sigma), &sig), expect);

        let fxa = fx.t("f(x,a)");
        let sigma = fx.subst(&[("x", "g(y)")]);
        let mut expect = LinearExpr::constant(3);
        expect.add_var(VarId(1), 1);
        assert_eq!(closure_weight(ClosureTerm::new(&fxa, &sigma), &sig), expect);
        let a = fx.t("a");
        assert_eq!(closure_weight(ClosureTerm::plain(&a), &sig), LinearExpr::constant(1));
    }

    #[test]
    fn lpo_closure_worked_example() {
        // f ≫ everything else is irrelevant here; only f, z, u appear
        let mut fx = std_fx();
        let lpo = fx.order(OrderKind::Lpo);
        let fxy = fx.t("f(x,y)");
        let sigma = fx.subst(&[("x", "f(z,u)"), ("y", "z")]);
        let theta = fx.subst(&[("x", "z"), ("y", "f(u,z)")]);
        let s = ClosureTerm::new(&fxy, &sigma);
        let t = ClosureTerm::new(&fxy, &theta);
        assert_eq!(lpo.compare_closure(s, t), Cmp3::Greater);
        assert!(lpo.greater(s, t));
        let (si, ti) = (fx.bank.apply(&fxy, &sigma), fx.bank.apply(&fxy, &theta));
        assert_eq!(lpo.compare(&si, &ti), Cmp3::Greater);
    }

    #[test]
    fn closure_kbo_examples() {
        let mut fx = std_fx();
        let kbo = fx.order(OrderKind::Kbo);
        let t = fx.t("f(x,y)");
        assert_eq!(
            kbo.compare_closure(ClosureTerm::plain(&t), ClosureTerm::plain(&t)),
            Cmp3::Equal
        );
        let (x, y) = (fx.t("x"), fx.t("y"));
        let sigma = fx.subst(&[("x", "f(a,a)")]);
        let theta = fx.subst(&[("y", "a")]);
        assert_eq!(
            kbo.compare_closure(ClosureTerm::new(&x, &sigma), ClosureTerm::new(&y, &theta)),
            Cmp3::Greater
        );
    }

    #[test]
    fn unidirectional_examples() {
        let mut fx = std_fx();
        let kbo = fx.order(OrderKind::Kbo);
        let t = fx.t("g(f(x,a))");
        assert!(!kbo.greater(ClosureTerm::plain(&t), ClosureTerm::plain(&t)));
        assert_eq!(
            kbo.greater_or_equal(ClosureTerm::plain(&t), ClosureTerm::plain(&t)),
            Cmp3::Equal
        );
        let (fxx, x) = (fx.t("f(x,x)"), fx.t("x"));
        assert!(kbo.greater(ClosureTerm::plain(&fxx), ClosureTerm::plain(&x)));
        let mut steps = 0;
        kbo.greater_counted(ClosureTerm::plain(&fxx), ClosureTerm::plain(&x), &mut steps);
        assert_eq!(steps, 1);
    }

    #[test]
    fn variable_cases_under_kbo() {
        let mut fx = std_fx();
        let kbo = fx.order(OrderKind::Kbo);
        let (gy, x) = (fx.t("g(y)"), fx.t("x"));
        assert_eq!(kbo.compare(&gy, &x), Cmp3::NotGeq);
        let (x, y) = (fx.t("x"), fx.t("y"));
        assert_eq!(kbo.compare(&x, &y), Cmp3::NotGeq);
        // f(x,a) ≻ f(a,x)? equal weights, same head, x vs a undecided
        let (l, r) = (fx.t("f(x,a)"), fx.t("f(a,x)"));
        assert_eq!(kbo.compare(&l, &r), Cmp3::NotGeq);
    }
}
