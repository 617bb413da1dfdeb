//! Reference orderings, random terms and a plain script interpreter used
//! as oracles by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use tod::harness::{Command, Script};
use tod::terms::TermNode;
use tod::{Cmp3, OrderKind, RawTerm, Signature, Substitution, Term, TermBank, VarId};

/// Textbook KBO with variable weight w0 and the variable condition.
pub fn ref_kbo_greater(sig: &Signature, s: &Term, t: &Term) -> bool {
    if s == t {
        return false;
    }
    let mut vs = Vec::new();
    collect_vars(s, &mut vs);
    let mut vt = Vec::new();
    collect_vars(t, &mut vt);
    for x in vt.iter().collect::<BTreeSet<_>>() {
        let cs = vs.iter().filter(|v| *v == x).count();
        let ct = vt.iter().filter(|v| *v == x).count();
        if cs < ct {
            return false;
        }
    }
    let (ws, wt) = (num_weight(sig, s), num_weight(sig, t));
    if ws != wt {
        return ws > wt;
    }
    match (s.node(), t.node()) {
        (TermNode::Var(_), _) => false,
        (TermNode::App(..), TermNode::Var(_)) => false,
        (TermNode::App(f, sa), TermNode::App(g, ta)) => {
            if f != g {
                return sig.prec_greater(*f, *g);
            }
            for (a, b) in sa.iter().zip(ta.iter()) {
                if a != b {
                    return ref_kbo_greater(sig, a, b);
                }
            }
            false
        }
    }
}

/// Textbook LPO.
pub fn ref_lpo_greater(sig: &Signature, s: &Term, t: &Term) -> bool {
    let TermNode::App(f, sa) = s.node() else {
        return false;
    };
    if s == t {
        return false;
    }
    if sa.iter().any(|si| si == t || ref_lpo_greater(sig, si, t)) {
        return true;
    }
    match t.node() {
        TermNode::Var(_) => false,
        TermNode::App(g, ta) => {
            let dominates = || ta.iter().all(|tj| ref_lpo_greater(sig, s, tj));
            if f == g {
                for (a, b) in sa.iter().zip(ta.iter()) {
                    if a != b {
                        return ref_lpo_greater(sig, a, b) && dominates();
                    }
                }
                false
            } else {
                sig.prec_greater(*f, *g) && dominates()
            }
        }
    }
}

pub fn ref_compare(kind: OrderKind, sig: &Signature, s: &Term, t: &Term) -> Cmp3 {
    if s == t {
        return Cmp3::Equal;
    }
    let greater = match kind {
        OrderKind::Kbo => ref_kbo_greater(sig, s, t),
        OrderKind::Lpo => ref_lpo_greater(sig, s, t),
    };
    if greater {
        Cmp3::Greater
    } else {
        Cmp3::NotGeq
    }
}

fn collect_vars(t: &Term, out: &mut Vec<VarId>) {
    match t.node() {
        TermNode::Var(v) => out.push(*v),
        TermNode::App(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
    }
}

fn num_weight(sig: &Signature, t: &Term) -> i64 {
    match t.node() {
        TermNode::Var(_) => sig.w0(),
        TermNode::App(f, args) => sig.weight(*f) + args.iter().map(|a| num_weight(sig, a)).sum::<i64>(),
    }
}

/// Random signature over f/2, g/1, h/3 and constants a, b, c with weights
/// in 1..=3 and a shuffled precedence.
pub fn random_signature(rng: &mut impl Rng) -> Arc<Signature> {
    let decls = [("f", 2), ("g", 1), ("h", 3), ("a", 0), ("b", 0), ("c", 0)];
    let mut prec: Vec<u32> = (1..=decls.len() as u32).collect();
    prec.shuffle(rng);
    Arc::new(
        Signature::new(
            decls
                .iter()
                .zip(prec)
                .map(|((n, a), p)| (*n, *a, rng.gen_range(1..=3u32), p)),
        )
        .expect("valid signature"),
    )
}

pub fn random_term(rng: &mut impl Rng, bank: &TermBank, depth: usize, n_vars: u32) -> Term {
    let sig = bank.signature().clone();
    if depth <= 1 || rng.gen_bool(0.3) {
        if n_vars > 0 && rng.gen_bool(0.5) {
            return bank.var(VarId(rng.gen_range(0..n_vars)));
        }
        let consts: Vec<_> = sig.symbols().iter().filter(|s| s.arity == 0).collect();
        return bank.app(consts.choose(rng).unwrap().id, Vec::new()).unwrap();
    }
    let sym = sig.symbols().choose(rng).unwrap().clone();
    let args = (0..sym.arity).map(|_| random_term(rng, bank, depth - 1, n_vars)).collect();
    bank.app(sym.id, args).unwrap()
}

pub fn random_subst(rng: &mut impl Rng, bank: &TermBank, n_vars: u32, depth: usize, image_vars: u32) -> Substitution {
    (0..n_vars)
        .map(|v| (VarId(v), random_term(rng, bank, depth, image_vars)))
        .collect()
}

/// Replaces variable leaves by their bindings.
pub fn raw_apply(t: &RawTerm, bindings: &[(String, RawTerm)]) -> RawTerm {
    if t.args.is_empty() {
        if let Some((_, img)) = bindings.iter().find(|(v, _)| *v == t.head) {
            return img.clone();
        }
        return t.clone();
    }
    RawTerm::app(t.head.clone(), t.args.iter().map(|a| raw_apply(a, bindings)).collect())
}

/// Answers every query of `script` by comparing the instances of all live
/// equalities with the reference ordering. Results are sorted ids.
pub fn oracle_answers(script: &Script, kind: OrderKind) -> Vec<(String, Vec<String>)> {
    let sig = Arc::new(script.signature().unwrap());
    let bank = TermBank::new(sig.clone());
    let mut live: Vec<(String, RawTerm, RawTerm)> = Vec::new();
    let mut out = Vec::new();
    for cmd in script.commands() {
        match cmd {
            Command::Eq { id, lhs, rhs } => live.push((id.clone(), lhs.clone(), rhs.clone())),
            Command::Del(id) => live.retain(|(e, _, _)| e != id),
            Command::Query { id, bindings } => {
                let mut found = Vec::new();
                for (eq, l, r) in &live {
                    let mut names = Vec::new();
                    let ls = bank.intern(&raw_apply(l, bindings), &mut names).unwrap();
                    let rs = bank.intern(&raw_apply(r, bindings), &mut names).unwrap();
                    if ref_compare(kind, &sig, &ls, &rs) == Cmp3::Greater {
                        found.push(eq.clone());
                    }
                }
                found.sort();
                out.push((id.clone(), found));
            }
            _ => {}
        }
    }
    out
}
