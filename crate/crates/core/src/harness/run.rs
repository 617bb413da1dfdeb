//! Executes scripts against one or all index modes.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::harness::script::{Command, Script};
use crate::index::{IndexError, IndexMode, PostOrderingIndex, Stats};
use crate::ordering::{OrderKind, TermOrder};
use crate::terms::{RawTerm, Substitution, Term, TermBank, TermError, VarId};
use crate::tod::{EqId, Want};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunMode {
    Off,
    On,
    Shared,
    /// All three modes, compared query by query.
    Crosscheck,
}

impl RunMode {
    pub fn index_modes(self) -> Vec<IndexMode> {
        match self {
            RunMode::Off => vec![IndexMode::Off],
            RunMode::On => vec![IndexMode::PerEquality],
            RunMode::Shared => vec![IndexMode::SharedByLhs],
            RunMode::Crosscheck => IndexMode::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub mode: RunMode,
    pub want: Want,
    pub order_override: Option<OrderKind>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            mode: RunMode::Crosscheck,
            want: Want::All,
            order_override: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("equality `{id}`: {source}")]
    Index { id: String, source: IndexError },
    #[error("query `{id}`: {source}")]
    Query { id: String, source: IndexError },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryResult {
    pub id: String,
    pub eqs: Vec<String>,
}

/// Results and final counters of one index mode.
#[derive(Clone, Debug)]
pub struct ModeRun {
    pub mode: IndexMode,
    pub results: Vec<QueryResult>,
    pub stats: Stats,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectOutcome {
    pub mode: IndexMode,
    pub query: String,
    pub expected: Vec<String>,
    pub actual: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub query: String,
    pub results: Vec<(IndexMode, Vec<String>)>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub order: OrderKind,
    pub want: Want,
    pub runs: Vec<ModeRun>,
    pub expects: Vec<ExpectOutcome>,
    pub divergences: Vec<Divergence>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.divergences.is_empty() && self.expects.iter().all(|e| e.passed)
    }

    pub fn run(&self, mode: IndexMode) -> Option<&ModeRun> {
        self.runs.iter().find(|r| r.mode == mode)
    }
}

pub fn run(script: &Script, opts: &RunOptions) -> Result<RunReport, RunError> {
    let order = opts.order_override.unwrap_or_else(|| script.order());
    let modes = opts.mode.index_modes();
    let outcomes: Vec<Result<(ModeRun, Vec<ExpectOutcome>), RunError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = modes
            .iter()
            .map(|mode| scope.spawn(move || run_mode(script, order, *mode, opts.want)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("mode runner panicked"))
            .collect()
    });
    let mut runs = Vec::new();
    let mut expects = Vec::new();
    for outcome in outcomes {
        let (run, exp) = outcome?;
        runs.push(run);
        expects.extend(exp);
    }
    let divergences = compare_runs(&runs, opts.want);
    Ok(RunReport {
        order,
        want: opts.want,
        runs,
        expects,
        divergences,
    })
}

fn compare_runs(runs: &[ModeRun], want: Want) -> Vec<Divergence> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let key = |eqs: &[String]| -> Vec<String> {
        match want {
            Want::All => eqs.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect(),
            Want::First => eqs.to_vec(),
        }
    };
    let mut out = Vec::new();
    for (i, q) in first.results.iter().enumerate() {
        let reference = key(&q.eqs);
        if runs[1..].iter().any(|r| key(&r.results[i].eqs) != reference) {
            out.push(Divergence {
                query: q.id.clone(),
                results: runs.iter().map(|r| (r.mode, r.results[i].eqs.clone())).collect(),
            });
        }
    }
    out
}

fn expect_holds(want: Want, expected: &[String], actual: &[String]) -> bool {
    let expected: BTreeSet<&String> = expected.iter().collect();
    match want {
        Want::All => actual.iter().collect::<BTreeSet<_>>() == expected && actual.len() == expected.len(),
        Want::First => match actual {
            [] => expected.is_empty(),
            [one] => expected.contains(one),
            _ => false,
        },
    }
}

struct Session {
    bank: Arc<TermBank>,
    names: Vec<String>,
}

impl Session {
    fn var_of(&mut self, name: &str) -> VarId {
        let idx = match self.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        };
        VarId(idx as u32)
    }

    fn term(&mut self, raw: &RawTerm) -> Result<Term, TermError> {
        let bank = self.bank.clone();
        bank.intern_with(raw, &mut |name| Some(self.var_of(name)))
    }
}

/// Runs every command of `script` on a fresh index in `mode`.
///
/// A `query` line names no left-hand side, so it is posed to every group
/// in creation order and the results are concatenated.
pub fn run_mode(
    script: &Script,
    order: OrderKind,
    mode: IndexMode,
    want: Want,
) -> Result<(ModeRun, Vec<ExpectOutcome>), RunError> {
    let sig = Arc::new(script.signature()?);
    let bank = Arc::new(TermBank::new(sig.clone()));
    let mut index = PostOrderingIndex::new(mode, TermOrder::new(order, sig), bank.clone());
    let mut session = Session { bank, names: Vec::new() };
    let mut eq_ids: HashMap<String, EqId> = HashMap::new();
    let mut eq_names: HashMap<EqId, String> = HashMap::new();
    let mut groups: Vec<(Term, Term)> = Vec::new();
    let mut results: Vec<QueryResult> = Vec::new();
    let mut expects = Vec::new();
    for cmd in script.commands() {
        match cmd {
            Command::Sig { .. } | Command::Ord(_) => {}
            Command::Eq { id, lhs, rhs } => {
                let (l, r) = (session.term(lhs)?, session.term(rhs)?);
                let eq = index.insert(&l, &r).map_err(|source| RunError::Index {
                    id: id.clone(),
                    source,
                })?;
                let key = index.canonical_lhs(&l);
                if !groups.iter().any(|(k, _)| *k == key) {
                    groups.push((key, l));
                }
                eq_ids.insert(id.clone(), eq);
                eq_names.insert(eq, id.clone());
            }
            Command::Del(id) => {
                let eq = eq_ids[id];
                index.remove(eq).map_err(|source| RunError::Index {
                    id: id.clone(),
                    source,
                })?;
            }
            Command::Query { id, bindings } => {
                let mut subst = Substitution::empty();
                for (v, t) in bindings {
                    let var = session.var_of(v);
                    subst.bind(var, session.term(t)?);
                }
                let mut found = Vec::new();
                for (_, lhs) in &groups {
                    let got = index.query(lhs, &subst, want).map_err(|source| RunError::Query {
                        id: id.clone(),
                        source,
                    })?;
                    found.extend(got.into_iter().map(|e| eq_names[&e].clone()));
                    if want == Want::First && !found.is_empty() {
                        break;
                    }
                }
                results.push(QueryResult {
                    id: id.clone(),
                    eqs: found,
                });
            }
            Command::Expect { query, ids } => {
                let actual = results
                    .iter()
                    .find(|r| r.id == *query)
                    .map(|r| r.eqs.clone())
                    .unwrap_or_default();
                expects.push(ExpectOutcome {
                    mode,
                    query: query.clone(),
                    expected: ids.clone(),
                    passed: expect_holds(want, ids, &actual),
                    actual,
                });
            }
        }
    }
    let run = ModeRun {
        mode,
        results,
        stats: index.snapshot_stats(),
    };
    Ok((run, expects))
}
