//! Benchmark script families.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::harness::script::{Command, Script};
use crate::ordering::{Cmp3, OrderKind, TermOrder};
use crate::terms::{RawTerm, TermBank};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Swap,
    Poly,
}

impl Family {
    pub fn script(self, n: usize, seed: u64) -> Script {
        match self {
            Family::Swap => swap_script(n, seed),
            Family::Poly => poly_script(n, seed),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Swap => "swap",
            Family::Poly => "poly",
        }
    }
}

fn sig(name: &str, arity: usize, weight: u32, precedence: u32) -> Command {
    Command::Sig {
        name: name.into(),
        arity,
        weight: Some(weight),
        precedence,
    }
}

fn ground(rng: &mut ChaCha8Rng, syms: &[(&str, usize)], depth: usize) -> RawTerm {
    let pool: Vec<&(&str, usize)> = if depth <= 1 || rng.gen_bool(0.25) {
        syms.iter().filter(|s| s.1 == 0).collect()
    } else {
        syms.iter().collect()
    };
    let (name, arity) = **pool.choose(rng).expect("non-empty pool");
    RawTerm::app(name, (0..arity).map(|_| ground(rng, syms, depth - 1)).collect())
}

fn var_term(rng: &mut ChaCha8Rng, syms: &[(&str, usize)], vars: &[&str], depth: usize) -> RawTerm {
    if depth <= 1 || rng.gen_bool(0.35) {
        if rng.gen_bool(0.75) {
            return RawTerm::leaf(*vars.choose(rng).expect("variables"));
        }
        let consts: Vec<&str> = syms.iter().filter(|s| s.1 == 0).map(|s| s.0).collect();
        return RawTerm::leaf(*consts.choose(rng).expect("constants"));
    }
    let funs: Vec<&(&str, usize)> = syms.iter().filter(|s| s.1 > 0).collect();
    let (name, arity) = **funs.choose(rng).expect("functions");
    RawTerm::app(name, (0..arity).map(|_| var_term(rng, syms, vars, depth - 1)).collect())
}

/// The commutativity/absorption pair on `f(x,y)` queried with `n` random
/// ground substitutions.
pub fn swap_script(n: usize, seed: u64) -> Script {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let syms = [("f", 2), ("a", 0), ("b", 0)];
    let mut commands = vec![sig("f", 2, 1, 3), sig("a", 0, 1, 1), sig("b", 0, 1, 2), Command::Ord(OrderKind::Kbo)];
    let fxy = RawTerm::app("f", vec![RawTerm::leaf("x"), RawTerm::leaf("y")]);
    commands.push(Command::Eq {
        id: "e1".into(),
        lhs: fxy.clone(),
        rhs: RawTerm::app("f", vec![RawTerm::leaf("y"), RawTerm::leaf("x")]),
    });
    commands.push(Command::Eq {
        id: "e2".into(),
        lhs: fxy,
        rhs: RawTerm::app("f", vec![RawTerm::leaf("x"), RawTerm::leaf("x")]),
    });
    for i in 0..n {
        let x = ground(&mut rng, &syms, 4);
        let y = if rng.gen_bool(0.1) { x.clone() } else { ground(&mut rng, &syms, 4) };
        commands.push(Command::Query {
            id: format!("q{}", i + 1),
            bindings: vec![("x".into(), x), ("y".into(), y)],
        });
    }
    Script::from_commands(commands).expect("swap script is well formed")
}

/// Unordered KBO equalities on one left-hand side whose weight difference
/// is a nonconstant linear expression, queried with `n` ground substitutions.
pub fn poly_script(n: usize, seed: u64) -> Script {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let syms = [("f", 3), ("g", 1), ("h", 2), ("a", 0), ("b", 0)];
    let mut commands = vec![
        sig("f", 3, 1, 5),
        sig("g", 1, 2, 3),
        sig("h", 2, 1, 4),
        sig("a", 0, 1, 1),
        sig("b", 0, 2, 2),
        Command::Ord(OrderKind::Kbo),
    ];
    let header = Script::from_commands(commands.clone()).expect("poly header is well formed");
    let sig_arc = Arc::new(header.signature().expect("poly signature is valid"));
    let bank = TermBank::new(sig_arc.clone());
    let order = TermOrder::new(OrderKind::Kbo, sig_arc);
    let lhs = RawTerm::app("f", vec![RawTerm::leaf("x"), RawTerm::leaf("y"), RawTerm::leaf("z")]);
    let mut names = Vec::new();
    let l = bank.intern(&lhs, &mut names).expect("lhs interns");
    let vars = ["x", "y", "z"];
    let mut seen = Vec::new();
    let mut attempts = 0;
    while seen.len() < 6 && attempts < 10_000 {
        attempts += 1;
        let rhs = var_term(&mut rng, &syms, &vars, 4);
        let mut local = names.clone();
        let r = bank.intern(&rhs, &mut local).expect("rhs interns");
        if local.len() > names.len() || seen.contains(&rhs) || r == l {
            continue;
        }
        let unordered = order.compare(&l, &r) == Cmp3::NotGeq && order.compare(&r, &l) == Cmp3::NotGeq;
        if unordered && !order.weight_diff(&l, &r).is_constant() {
            seen.push(rhs);
        }
    }
    for (i, rhs) in seen.into_iter().enumerate() {
        commands.push(Command::Eq {
            id: format!("e{}", i + 1),
            lhs: lhs.clone(),
            rhs,
        });
    }
    for i in 0..n {
        let bindings = vars
            .iter()
            .map(|v| (v.to_string(), ground(&mut rng, &syms, 3)))
            .collect();
        commands.push(Command::Query {
            id: format!("q{}", i + 1),
            bindings,
        });
    }
    Script::from_commands(commands).expect("poly script is well formed")
}
