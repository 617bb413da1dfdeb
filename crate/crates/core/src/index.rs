//! The post-ordering index: equalities grouped by left-hand side, queried
//! with substitutions for the ones that become ordered.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::forcing::TpoStore;
use crate::ordering::{ClosureTerm, TermOrder};
use crate::terms::{Substitution, Term, TermBank, VarId};
use crate::tod::{EqId, Equality, NodeCounts, Tod, TodCounters, TodError, Want};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IndexMode {
    /// Plain comparison of every equality.
    Off,
    /// One diagram per equality.
    PerEquality,
    /// One diagram per left-hand side.
    SharedByLhs,
}

impl IndexMode {
    pub const ALL: [IndexMode; 3] = [IndexMode::Off, IndexMode::PerEquality, IndexMode::SharedByLhs];
}

impl fmt::Display for IndexMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexMode::Off => "off",
            IndexMode::PerEquality => "on",
            IndexMode::SharedByLhs => "shared",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub queries: u64,
    /// Retrieved equalities, counting an empty retrieval once.
    pub answers: u64,
    /// Live equalities.
    pub demodulators: u64,
    pub tods: u64,
    pub created: NodeCounts,
    pub processed: NodeCounts,
    pub traversed: NodeCounts,
    /// Recursive comparison steps spent by plain checks.
    pub naive_comparisons: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("right-hand side has a variable that does not occur on the left")]
    UnboundRhsVariable,
    #[error("equality duplicates {0}")]
    Duplicate(EqId),
    #[error("unknown equality {0}")]
    UnknownEquality(EqId),
    #[error(transparent)]
    Tod(#[from] TodError),
}

#[derive(Debug)]
struct Entry {
    lhs: Term,
    rhs: Term,
    group: usize,
    deleted: bool,
    tod: Option<Tod>,
}

#[derive(Debug)]
struct Group {
    key: Term,
    members: Vec<EqId>,
    tod: Option<Tod>,
}

/// Renaming of the variables of `terms` to `x0, x1, ...` in
/// first-occurrence order.
pub fn canonical_renaming(terms: &[&Term]) -> BTreeMap<VarId, VarId> {
    let mut map = BTreeMap::new();
    for t in terms {
        for v in t.vars() {
            let next = VarId(map.len() as u32);
            map.entry(v).or_insert(next);
        }
    }
    map
}

pub struct PostOrderingIndex {
    mode: IndexMode,
    order: TermOrder,
    bank: Arc<TermBank>,
    store: TpoStore,
    entries: Vec<Entry>,
    groups: Vec<Group>,
    by_key: HashMap<Term, usize>,
    live_pairs: HashMap<(Term, Term), EqId>,
    stats: Stats,
    counters: TodCounters,
}

impl PostOrderingIndex {
    pub fn new(mode: IndexMode, order: TermOrder, bank: Arc<TermBank>) -> Self {
        Self {
            mode,
            order,
            bank,
            store: TpoStore::new(),
            entries: Vec::new(),
            groups: Vec::new(),
            by_key: HashMap::new(),
            live_pairs: HashMap::new(),
            stats: Stats::default(),
            counters: TodCounters::default(),
        }
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn order(&self) -> &TermOrder {
        &self.order
    }

    pub fn bank(&self) -> &Arc<TermBank> {
        &self.bank
    }

    pub fn tpo_store(&self) -> &TpoStore {
        &self.store
    }

    /// Group key of a left-hand side.
    pub fn canonical_lhs(&self, lhs: &Term) -> Term {
        self.bank.rename(lhs, &canonical_renaming(&[lhs]))
    }

    /// Canonical `(lhs, rhs, deleted)` of an equality.
    pub fn equality(&self, id: EqId) -> Option<(&Term, &Term, bool)> {
        self.entries
            .get(id.0 as usize)
            .map(|e| (&e.lhs, &e.rhs, e.deleted))
    }

    /// Group keys in creation order.
    pub fn group_keys(&self) -> impl Iterator<Item = &Term> {
        self.groups.iter().map(|g| &g.key)
    }

    /// Every diagram owned by the index.
    pub fn tods(&self) -> impl Iterator<Item = &Tod> {
        self.groups
            .iter()
            .filter_map(|g| g.tod.as_ref())
            .chain(self.entries.iter().filter_map(|e| e.tod.as_ref()))
    }

    /// The shared diagram of the group with this left-hand side.
    pub fn group_tod(&self, lhs: &Term) -> Option<&Tod> {
        let key = self.canonical_lhs(lhs);
        self.by_key.get(&key).and_then(|g| self.groups[*g].tod.as_ref())
    }

    /// The diagram of a single equality in per-equality mode.
    pub fn equality_tod(&self, id: EqId) -> Option<&Tod> {
        self.entries.get(id.0 as usize).and_then(|e| e.tod.as_ref())
    }

    pub fn insert(&mut self, lhs: &Term, rhs: &Term) -> Result<EqId, IndexError> {
        let lhs_vars = lhs.vars();
        if rhs.vars().iter().any(|v| !lhs_vars.contains(v)) {
            return Err(IndexError::UnboundRhsVariable);
        }
        let renaming = canonical_renaming(&[lhs, rhs]);
        let lhs = self.bank.rename(lhs, &renaming);
        let rhs = self.bank.rename(rhs, &renaming);
        let pair = (lhs.clone(), rhs.clone());
        if let Some(existing) = self.live_pairs.get(&pair) {
            return Err(IndexError::Duplicate(*existing));
        }
        let id = EqId(self.entries.len() as u32);
        let group = match self.by_key.get(&lhs) {
            Some(g) => *g,
            None => {
                let tod = (self.mode == IndexMode::SharedByLhs).then(|| {
                    self.stats.tods += 1;
                    Tod::new(self.order.clone())
                });
                self.groups.push(Group {
                    key: lhs.clone(),
                    members: Vec::new(),
                    tod,
                });
                self.by_key.insert(lhs.clone(), self.groups.len() - 1);
                self.groups.len() - 1
            }
        };
        let eq = Equality::new(id, lhs.clone(), rhs.clone());
        let own_tod = match self.mode {
            IndexMode::Off => None,
            IndexMode::PerEquality => {
                let mut tod = Tod::new(self.order.clone());
                tod.insert(eq, &mut self.counters)?;
                self.stats.tods += 1;
                Some(tod)
            }
            IndexMode::SharedByLhs => {
                let tod = self.groups[group].tod.as_mut().expect("shared group has a diagram");
                tod.insert(eq, &mut self.counters)?;
                None
            }
        };
        self.groups[group].members.push(id);
        self.entries.push(Entry {
            lhs,
            rhs,
            group,
            deleted: false,
            tod: own_tod,
        });
        self.live_pairs.insert(pair, id);
        self.stats.demodulators += 1;
        Ok(id)
    }

    /// Lazy deletion. Removing an equality twice is a no-op.
    pub fn remove(&mut self, id: EqId) -> Result<(), IndexError> {
        let entry = self
            .entries
            .get_mut(id.0 as usize)
            .ok_or(IndexError::UnknownEquality(id))?;
        if entry.deleted {
            return Ok(());
        }
        entry.deleted = true;
        self.live_pairs.remove(&(entry.lhs.clone(), entry.rhs.clone()));
        self.stats.demodulators -= 1;
        let tod = match self.mode {
            IndexMode::Off => None,
            IndexMode::PerEquality => entry.tod.as_mut(),
            IndexMode::SharedByLhs => self.groups[entry.group].tod.as_mut(),
        };
        if let Some(tod) = tod {
            tod.mark_deleted(id)?;
        }
        Ok(())
    }

    /// Equalities `l ≃ r` of the group of `lhs` with `lσ ≻ rσ`, in
    /// insertion order. An unknown `lhs` yields nothing.
    pub fn query(&mut self, lhs: &Term, subst: &Substitution, want: Want) -> Result<Vec<EqId>, IndexError> {
        let renaming = canonical_renaming(&[lhs]);
        let key = self.bank.rename(lhs, &renaming);
        let Some(&group) = self.by_key.get(&key) else {
            return Ok(Vec::new());
        };
        // σ over the canonical variables: x_canon ↦ xσ
        let canon_subst: Substitution = renaming
            .iter()
            .map(|(from, to)| {
                let image = subst.get(*from).cloned().unwrap_or_else(|| self.bank.var(*from));
                (*to, image)
            })
            .collect();
        self.stats.queries += 1;
        let mut out = Vec::new();
        match self.mode {
            IndexMode::Off => {
                for id in &self.groups[group].members {
                    let entry = &self.entries[id.0 as usize];
                    if entry.deleted {
                        continue;
                    }
                    let greater = self.order.greater_counted(
                        ClosureTerm::new(&entry.lhs, &canon_subst),
                        ClosureTerm::new(&entry.rhs, &canon_subst),
                        &mut self.stats.naive_comparisons,
                    );
                    if greater {
                        out.push(*id);
                        if want == Want::First {
                            break;
                        }
                    }
                }
                self.stats.answers += (out.len() as u64).max(1);
            }
            IndexMode::PerEquality => {
                for id in &self.groups[group].members {
                    let entry = &mut self.entries[id.0 as usize];
                    if entry.deleted {
                        continue;
                    }
                    let tod = entry.tod.as_mut().expect("per-equality diagram");
                    let found = tod.retrieve(&canon_subst, want, &mut self.store, &mut self.counters)?;
                    self.stats.answers += (found.len() as u64).max(1);
                    out.extend(found);
                    if want == Want::First && !out.is_empty() {
                        break;
                    }
                }
            }
            IndexMode::SharedByLhs => {
                let tod = self.groups[group].tod.as_mut().expect("shared group has a diagram");
                out = tod.retrieve(&canon_subst, want, &mut self.store, &mut self.counters)?;
                self.stats.answers += (out.len() as u64).max(1);
            }
        }
        Ok(out)
    }

    pub fn snapshot_stats(&self) -> Stats {
        Stats {
            created: self.counters.created,
            processed: self.counters.processed,
            traversed: self.counters.traversed,
            ..self.stats
        }
    }

    /// Runs the structural checks on every diagram.
    pub fn check(&self) -> Result<(), String> {
        self.tods().try_for_each(Tod::check)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::script::parse_term;
    use crate::ordering::OrderKind;
    use crate::terms::Signature;

    fn index(mode: IndexMode) -> PostOrderingIndex {
        let sig = Arc::new(Signature::new([("f", 2, 1, 3), ("a", 0, 1, 1), ("b", 0, 1, 2)]).unwrap());
        let bank = Arc::new(TermBank::new(sig.clone()));
        PostOrderingIndex::new(mode, TermOrder::new(OrderKind::Kbo, sig), bank)
    }

    fn t(idx: &PostOrderingIndex, s: &str, names: &[&str]) -> Term {
        let mut names: Vec<String> = names.iter().map(|n| n.to_string()).collect();
        idx.bank().intern(&parse_term(s).unwrap(), &mut names).unwrap()
    }

    fn xy(idx: &PostOrderingIndex, s: &str) -> Term {
        t(idx, s, &["x", "y"])
    }

    fn subst(idx: &PostOrderingIndex, x: &str, y: &str) -> Substitution {
        Substitution::from_iter([(VarId(0), xy(idx, x)), (VarId(1), xy(idx, y))])
    }

    #[test]
    fn fresh_index_has_zero_stats() {
        assert_eq!(index(IndexMode::SharedByLhs).snapshot_stats(), Stats::default());
    }

    #[test]
    fn one_insert_in_shared_mode() {
        let mut idx = index(IndexMode::SharedByLhs);
        let (l, r) = (xy(&idx, "f(x,y)"), xy(&idx, "f(y,x)"));
        idx.insert(&l, &r).unwrap();
        let s = idx.snapshot_stats();
        assert_eq!((s.tods, s.demodulators), (1, 1));
        assert_eq!((s.created.term, s.created.success), (1, 1));
    }

    #[test]
    fn modes_create_expected_diagrams() {
        for (mode, tods) in [(IndexMode::Off, 0), (IndexMode::PerEquality, 2), (IndexMode::SharedByLhs, 1)] {
            let mut idx = index(mode);
            let l = xy(&idx, "f(x,y)");
            idx.insert(&l, &xy(&idx, "f(y,x)")).unwrap();
            idx.insert(&l, &xy(&idx, "f(x,x)")).unwrap();
            assert_eq!(idx.snapshot_stats().tods, tods, "{mode}");
            assert_eq!(idx.tods().count() as u64, tods);
            assert_eq!(idx.group_keys().count(), 1);
        }
    }

    #[test]
    fn renamed_duplicate_is_rejected() {
        let mut idx = index(IndexMode::SharedByLhs);
        let first = idx.insert(&xy(&idx, "f(x,y)"), &xy(&idx, "f(y,x)")).unwrap();
        let (l, r) = (t(&idx, "f(u,v)", &["u", "v"]), t(&idx, "f(v,u)", &["u", "v"]));
        assert_eq!(idx.insert(&l, &r), Err(IndexError::Duplicate(first)));
        // after deletion the same equality may come back under a new id
        idx.remove(first).unwrap();
        let again = idx.insert(&l, &r).unwrap();
        assert_ne!(again, first);
        let s = subst(&idx, "b", "a");
        assert_eq!(idx.query(&l, &s, Want::All).unwrap(), vec![again]);
    }

    #[test]
    fn unbound_rhs_variable_is_rejected() {
        let mut idx = index(IndexMode::Off);
        let l = t(&idx, "f(x,a)", &["x", "y"]);
        let r = t(&idx, "f(y,a)", &["x", "y"]);
        assert_eq!(idx.insert(&l, &r), Err(IndexError::UnboundRhsVariable));
    }

    #[test]
    fn swap_pair_queries_agree_across_modes() {
        let cases = [
            (("a", "f(a,a)"), vec![1]),
            (("a", "a"), vec![]),
            (("f(a,a)", "a"), vec![0]),
        ];
        for mode in IndexMode::ALL {
            let mut idx = index(mode);
            let l = xy(&idx, "f(x,y)");
            idx.insert(&l, &xy(&idx, "f(y,x)")).unwrap();
            idx.insert(&l, &xy(&idx, "f(x,x)")).unwrap();
            for ((x, y), want) in &cases {
                let s = subst(&idx, x, y);
                let got = idx.query(&l, &s, Want::All).unwrap();
                let want: Vec<EqId> = want.iter().map(|i| EqId(*i)).collect();
                assert_eq!(got, want, "{mode} {x} {y}");
            }
            idx.check().unwrap();
            assert_eq!(idx.snapshot_stats().queries, 3);
        }
    }

    #[test]
    fn query_on_renamed_lhs_and_unknown_lhs() {
        let mut idx = index(IndexMode::SharedByLhs);
        let l = xy(&idx, "f(x,y)");
        idx.insert(&l, &xy(&idx, "f(y,x)")).unwrap();
        // same group, other variable names: u ↦ f(a,a), v ↦ a
        let names = ["x", "y", "u", "v"];
        let l2 = t(&idx, "f(u,v)", &names);
        let s = Substitution::from_iter([
            (VarId(2), t(&idx, "f(a,a)", &names)),
            (VarId(3), t(&idx, "a", &names)),
        ]);
        assert_eq!(idx.query(&l2, &s, Want::All).unwrap(), vec![EqId(0)]);
        let other = xy(&idx, "f(x,a)");
        assert!(idx.query(&other, &s, Want::All).unwrap().is_empty());
        assert_eq!(idx.snapshot_stats().queries, 1);
    }

    #[test]
    fn removal_is_lazy_and_idempotent() {
        let mut idx = index(IndexMode::SharedByLhs);
        let l = xy(&idx, "f(x,y)");
        let id = idx.insert(&l, &xy(&idx, "f(y,x)")).unwrap();
        let before = idx.snapshot_stats();
        idx.remove(id).unwrap();
        idx.remove(id).unwrap();
        let after = idx.snapshot_stats();
        assert_eq!(after.demodulators, 0);
        assert_eq!(after.created, before.created);
        let s = subst(&idx, "f(a,a)", "a");
        assert!(idx.query(&l, &s, Want::All).unwrap().is_empty());
        assert_eq!(idx.remove(EqId(9)), Err(IndexError::UnknownEquality(EqId(9))));
    }

    #[test]
    fn first_mode_returns_prefix() {
        for mode in IndexMode::ALL {
            let mut idx = index(mode);
            let l = xy(&idx, "f(x,y)");
            idx.insert(&l, &xy(&idx, "x")).unwrap();
            idx.insert(&l, &xy(&idx, "y")).unwrap();
            let s = subst(&idx, "a", "b");
            let all = idx.query(&l, &s, Want::All).unwrap();
            let first = idx.query(&l, &s, Want::First).unwrap();
            assert_eq!(all.len(), 2);
            assert_eq!(first, all[..1].to_vec(), "{mode}");
        }
    }
}
