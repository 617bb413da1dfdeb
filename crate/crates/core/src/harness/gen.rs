//! Seeded random scripts.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::harness::script::{Command, Script};
use crate::ordering::OrderKind;
use crate::terms::RawTerm;

#[derive(Clone, Debug)]
pub struct GenParams {
    /// Number of symbols, constants included (2..=5).
    pub symbols: usize,
    pub max_arity: usize,
    pub depth: usize,
    pub equalities: usize,
    pub queries: usize,
    /// Number of distinct left-hand sides.
    pub groups: usize,
    /// Chance of a `del` after each command.
    pub delete_prob: f64,
    /// Chance that a query binds a variable to a ground term.
    pub ground_prob: f64,
    pub order: OrderKind,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            symbols: 4,
            max_arity: 2,
            depth: 3,
            equalities: 6,
            queries: 50,
            groups: 1,
            delete_prob: 0.1,
            ground_prob: 0.7,
            order: OrderKind::Kbo,
        }
    }
}

const FUNCTIONS: [&str; 4] = ["f", "g", "h", "k"];
const CONSTANTS: [&str; 2] = ["a", "b"];
const LHS_VARS: [&str; 3] = ["x", "y", "z"];
const IMAGE_VARS: [&str; 2] = ["u", "v"];

struct Gen {
    rng: ChaCha8Rng,
    syms: Vec<(String, usize)>,
}

impl Gen {
    fn term(&mut self, depth: usize, vars: &[&str]) -> RawTerm {
        let leaf = depth <= 1 || self.rng.gen_bool(0.3);
        if leaf {
            let constants: Vec<&(String, usize)> = self.syms.iter().filter(|s| s.1 == 0).collect();
            if !vars.is_empty() && self.rng.gen_bool(0.6) {
                return RawTerm::leaf(*vars.choose(&mut self.rng).expect("non-empty"));
            }
            return RawTerm::leaf(constants.choose(&mut self.rng).expect("a constant").0.clone());
        }
        let (name, arity) = self.syms.choose(&mut self.rng).expect("symbols").clone();
        let args = (0..arity).map(|_| self.term(depth - 1, vars)).collect();
        RawTerm::app(name, args)
    }

    fn compound(&mut self, depth: usize, vars: &[&str]) -> RawTerm {
        for _ in 0..32 {
            let t = self.term(depth, vars);
            if !t.args.is_empty() && has_var(&t) {
                return t;
            }
        }
        let (name, arity) = self
            .syms
            .iter()
            .find(|s| s.1 > 0)
            .expect("a function symbol")
            .clone();
        RawTerm::app(name, (0..arity).map(|i| RawTerm::leaf(vars[i % vars.len()])).collect())
    }
}

fn has_var(t: &RawTerm) -> bool {
    if t.args.is_empty() {
        LHS_VARS.contains(&t.head.as_str())
    } else {
        t.args.iter().any(has_var)
    }
}

fn vars_of(t: &RawTerm, out: &mut Vec<String>) {
    if t.args.is_empty() {
        if LHS_VARS.contains(&t.head.as_str()) && !out.contains(&t.head) {
            out.push(t.head.clone());
        }
    } else {
        t.args.iter().for_each(|a| vars_of(a, out));
    }
}

/// Renames variables to x, y, z in order of first occurrence, so that
/// left-hand sides equal up to renaming become identical.
fn canonical(t: &RawTerm) -> RawTerm {
    let mut vars = Vec::new();
    vars_of(t, &mut vars);
    rename(t, &vars)
}

fn rename(t: &RawTerm, order: &[String]) -> RawTerm {
    if t.args.is_empty() {
        match order.iter().position(|v| *v == t.head) {
            Some(i) => RawTerm::leaf(LHS_VARS[i]),
            None => t.clone(),
        }
    } else {
        RawTerm::app(t.head.clone(), t.args.iter().map(|a| rename(a, order)).collect())
    }
}

/// Reproducible random script: the same seed and parameters always give
/// the same text.
pub fn gen_random_script(seed: u64, params: &GenParams) -> Script {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_symbols = params.symbols.clamp(2, 5);
    let n_constants = if n_symbols > 2 && rng.gen_bool(0.5) { 2 } else { 1 };
    let mut precedences: Vec<u32> = (1..=n_symbols as u32).collect();
    precedences.shuffle(&mut rng);
    let mut commands = Vec::new();
    let mut syms = Vec::new();
    for i in 0..n_symbols {
        let (name, arity) = if i < n_constants {
            (CONSTANTS[i].to_string(), 0)
        } else {
            let arity = rng.gen_range(1..=params.max_arity.clamp(1, 3));
            (FUNCTIONS[i - n_constants].to_string(), arity)
        };
        let weight = match params.order {
            OrderKind::Kbo => Some(rng.gen_range(1..=3)),
            OrderKind::Lpo => None,
        };
        commands.push(Command::Sig {
            name: name.clone(),
            arity,
            weight,
            precedence: precedences[i],
        });
        syms.push((name, arity));
    }
    commands.push(Command::Ord(params.order));
    let mut g = Gen { rng, syms };

    let depth = params.depth.clamp(1, 4);
    let groups: Vec<RawTerm> = (0..params.groups.max(1))
        .map(|_| {
            let n_vars = 2 + usize::from(g.rng.gen_bool(0.3));
            canonical(&g.compound(depth.max(2), &LHS_VARS[..n_vars]))
        })
        .collect();

    let mut live: Vec<String> = Vec::new();
    let mut live_pairs: HashSet<(String, String)> = HashSet::new();
    let mut pair_of = std::collections::HashMap::new();
    let (mut eqs_left, mut queries_left) = (params.equalities, params.queries);
    let (mut next_eq, mut next_query) = (1, 1);
    while eqs_left + queries_left > 0 {
        let insert = eqs_left > 0 && (queries_left == 0 || live.is_empty() || g.rng.gen_bool(0.3));
        if insert {
            eqs_left -= 1;
            let lhs = groups.choose(&mut g.rng).expect("a group").clone();
            let mut vars = Vec::new();
            vars_of(&lhs, &mut vars);
            let vars: Vec<&str> = vars.iter().map(String::as_str).collect();
            for _ in 0..8 {
                let rhs = g.term(depth, &vars);
                let pair = (lhs.to_string(), rhs.to_string());
                if rhs == lhs || live_pairs.contains(&pair) {
                    continue;
                }
                let id = format!("e{next_eq}");
                next_eq += 1;
                live_pairs.insert(pair.clone());
                pair_of.insert(id.clone(), pair);
                live.push(id.clone());
                commands.push(Command::Eq { id, lhs, rhs });
                break;
            }
        } else {
            queries_left -= 1;
            let bindings = LHS_VARS
                .iter()
                .map(|v| {
                    let image_vars: &[&str] = if g.rng.gen_bool(params.ground_prob) { &[] } else { &IMAGE_VARS };
                    (v.to_string(), g.term(depth, image_vars))
                })
                .collect();
            commands.push(Command::Query {
                id: format!("q{next_query}"),
                bindings,
            });
            next_query += 1;
        }
        if !live.is_empty() && g.rng.gen_bool(params.delete_prob.clamp(0.0, 1.0)) {
            let i = g.rng.gen_range(0..live.len());
            let id = live.remove(i);
            live_pairs.remove(&pair_of[&id]);
            commands.push(Command::Del(id));
        }
    }
    Script::from_commands(commands).expect("generated scripts are well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::script::parse_script;

    #[test]
    fn same_seed_same_text() {
        let p = GenParams::default();
        assert_eq!(gen_random_script(7, &p).to_string(), gen_random_script(7, &p).to_string());
        assert_ne!(gen_random_script(7, &p).to_string(), gen_random_script(8, &p).to_string());
    }

    #[test]
    fn zero_queries_gives_insert_only_script() {
        let p = GenParams {
            queries: 0,
            delete_prob: 0.0,
            ..Default::default()
        };
        let s = gen_random_script(3, &p);
        assert!(s.commands().iter().all(|c| !matches!(c, Command::Query { .. } | Command::Del(_))));
        assert!(s.commands().iter().any(|c| matches!(c, Command::Eq { .. })));
    }

    #[test]
    fn deletes_appear_when_requested() {
        let p = GenParams {
            delete_prob: 0.5,
            ..Default::default()
        };
        let s = gen_random_script(11, &p);
        assert!(s.commands().iter().any(|c| matches!(c, Command::Del(_))));
    }

    #[test]
    fn printed_scripts_parse_back() {
        for seed in 0..50 {
            let p = GenParams {
                order: if seed % 2 == 0 { OrderKind::Kbo } else { OrderKind::Lpo },
                groups: 1 + seed as usize % 3,
                ..Default::default()
            };
            let s = gen_random_script(seed, &p);
            assert_eq!(parse_script(&s.to_string()).unwrap(), s);
        }
    }
}
