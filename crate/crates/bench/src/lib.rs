//! Pre-interned retrieval workloads built from the benchmark families.

use std::sync::Arc;

use tod::harness::{Command, Family};
use tod::{
    EqId, IndexMode, OrderKind, PostOrderingIndex, Stats, Substitution, Term, TermBank, TermOrder, VarId, Want,
};

/// Equalities and query substitutions of one family, interned once.
pub struct Workload {
    bank: Arc<TermBank>,
    order: OrderKind,
    equalities: Vec<(Term, Term)>,
    queries: Vec<Substitution>,
}

impl Workload {
    pub fn new(family: Family, n: usize, seed: u64) -> Self {
        let script = family.script(n, seed);
        let sig = Arc::new(script.signature().expect("family signatures are valid"));
        let bank = Arc::new(TermBank::new(sig));
        let mut names: Vec<String> = Vec::new();
        let mut equalities = Vec::new();
        let mut queries = Vec::new();
        for cmd in script.commands() {
            match cmd {
                Command::Eq { lhs, rhs, .. } => {
                    let l = bank.intern(lhs, &mut names).expect("lhs interns");
                    let r = bank.intern(rhs, &mut names).expect("rhs interns");
                    equalities.push((l, r));
                }
                Command::Query { bindings, .. } => {
                    let mut subst = Substitution::empty();
                    for (v, t) in bindings {
                        let var = names.iter().position(|n| n == v).expect("bound variables occur in lhs");
                        subst.bind(VarId(var as u32), bank.intern(t, &mut names).expect("image interns"));
                    }
                    queries.push(subst);
                }
                _ => {}
            }
        }
        Self {
            bank,
            order: script.order(),
            equalities,
            queries,
        }
    }

    pub fn queries(&self) -> usize {
        self.queries.len()
    }

    /// A fresh index in `mode` holding every equality.
    pub fn index(&self, mode: IndexMode) -> PostOrderingIndex {
        let order = TermOrder::new(self.order, self.bank.signature().clone());
        let mut index = PostOrderingIndex::new(mode, order, self.bank.clone());
        for (l, r) in &self.equalities {
            index.insert(l, r).expect("family equalities are distinct");
        }
        index
    }

    /// Poses every query once and returns the number of retrieved equalities.
    pub fn replay(&self, index: &mut PostOrderingIndex, want: Want) -> usize {
        let lhs = &self.equalities[0].0;
        self.queries
            .iter()
            .map(|s| index.query(lhs, s, want).expect("retrieval stays under the step cap").len())
            .sum()
    }

    /// Counters after one replay on a fresh index.
    pub fn stats(&self, mode: IndexMode) -> Stats {
        let mut index = self.index(mode);
        self.replay(&mut index, Want::All);
        index.snapshot_stats()
    }

    pub fn results(&self, mode: IndexMode) -> Vec<Vec<EqId>> {
        let mut index = self.index(mode);
        let lhs = self.equalities[0].0.clone();
        self.queries
            .iter()
            .map(|s| index.query(&lhs, s, Want::All).expect("retrieval stays under the step cap"))
            .collect()
    }
}
