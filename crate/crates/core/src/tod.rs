//! Term ordering diagrams.
//!
//! A [`Tod`] is a rooted DAG of term comparison, positivity check and
//! success nodes. Retrieving with a substitution walks it from the root,
//! rewriting unvisited nodes on the way into cheaper equivalent subgraphs.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::forcing::{force_positivity, force_term, Inconsistent, TermConstraint, TpoId, TpoStore};
use crate::linear::{LinearExpr, Sign3};
use crate::ordering::{ClosureTerm, Cmp3, OrderKind, TermOrder};
use crate::terms::{Substitution, Term, TermNode};

/// Upper bound on loop iterations of one retrieval.
pub const STEP_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EqId(pub u32);

impl fmt::Display for EqId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    Gt,
    Eq,
    Geq,
    Ngeq,
    /// The single edge leaving the root or a success node.
    Next,
}

impl EdgeLabel {
    /// Position of the edge in a node's successor array.
    pub fn slot(self) -> usize {
        match self {
            EdgeLabel::Gt | EdgeLabel::Next => 0,
            EdgeLabel::Eq | EdgeLabel::Geq => 1,
            EdgeLabel::Ngeq => 2,
        }
    }

    pub fn of_cmp(c: Cmp3) -> Self {
        match c {
            Cmp3::Greater => EdgeLabel::Gt,
            Cmp3::Equal => EdgeLabel::Eq,
            Cmp3::NotGeq => EdgeLabel::Ngeq,
        }
    }

    pub fn of_sign(s: Sign3) -> Self {
        match s {
            Sign3::Positive => EdgeLabel::Gt,
            Sign3::NonNegative => EdgeLabel::Geq,
            Sign3::NotNonNegative => EdgeLabel::Ngeq,
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeLabel::Gt => ">",
            EdgeLabel::Eq => "=",
            EdgeLabel::Geq => "≥",
            EdgeLabel::Ngeq => "≱",
            EdgeLabel::Next => "→",
        })
    }
}

const TERM_LABELS: [EdgeLabel; 3] = [EdgeLabel::Gt, EdgeLabel::Eq, EdgeLabel::Ngeq];
const POS_LABELS: [EdgeLabel; 3] = [EdgeLabel::Gt, EdgeLabel::Geq, EdgeLabel::Ngeq];
const CMP_OF_SLOT: [Cmp3; 3] = [Cmp3::Greater, Cmp3::Equal, Cmp3::NotGeq];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Root,
    Exit,
    TermComparison { lhs: Term, rhs: Term },
    PositivityCheck(LinearExpr),
    Success(EqId),
}

impl NodeKind {
    pub fn labels(&self) -> &'static [EdgeLabel] {
        match self {
            NodeKind::Root | NodeKind::Success(_) => &[EdgeLabel::Next],
            NodeKind::Exit => &[],
            NodeKind::TermComparison { .. } => &TERM_LABELS,
            NodeKind::PositivityCheck(_) => &POS_LABELS,
        }
    }

    pub fn is_evaluation(&self) -> bool {
        matches!(self, NodeKind::TermComparison { .. } | NodeKind::PositivityCheck(_))
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    kind: NodeKind,
    succ: [Option<NodeId>; 3],
    parents: Vec<(NodeId, u8)>,
    visited: bool,
    alive: bool,
    tpo: Option<TpoId>,
}

impl Node {
    fn new(kind: NodeKind) -> Self {
        Self {
            kind,
            succ: [None; 3],
            parents: Vec::new(),
            visited: false,
            alive: true,
            tpo: None,
        }
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn is_visited(&self) -> bool {
        self.visited
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    pub fn in_degree(&self) -> usize {
        self.parents.len()
    }

    /// Incoming edges as `(source, slot)`.
    pub fn parents(&self) -> &[(NodeId, u8)] {
        &self.parents
    }

    /// Ordering knowledge stored when the node was visited.
    pub fn tpo(&self) -> Option<TpoId> {
        self.tpo
    }

    pub fn successor(&self, label: EdgeLabel) -> Option<NodeId> {
        if !self.kind.labels().contains(&label) {
            return None;
        }
        self.succ[label.slot()]
    }

    pub fn edges(&self) -> impl Iterator<Item = (EdgeLabel, NodeId)> + '_ {
        self.kind
            .labels()
            .iter()
            .filter_map(|l| self.succ[l.slot()].map(|n| (*l, n)))
    }
}

/// Node counts split by node type.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NodeCounts {
    pub term: u64,
    pub success: u64,
    pub pos: u64,
}

impl NodeCounts {
    fn bump(&mut self, kind: &NodeKind) {
        match kind {
            NodeKind::TermComparison { .. } => self.term += 1,
            NodeKind::PositivityCheck(_) => self.pos += 1,
            NodeKind::Success(_) => self.success += 1,
            NodeKind::Root | NodeKind::Exit => {}
        }
    }

    pub fn total(&self) -> u64 {
        self.term + self.success + self.pos
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TodCounters {
    pub created: NodeCounts,
    pub processed: NodeCounts,
    pub traversed: NodeCounts,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TodError {
    #[error("retrieval exceeded {0} steps")]
    StepCap(u64),
    #[error(transparent)]
    Inconsistent(#[from] Inconsistent),
    #[error("equality {0} is already in this diagram")]
    Duplicate(EqId),
    #[error("unknown equality {0}")]
    UnknownEquality(EqId),
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
}

/// Whether a retrieval stops at the first match.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Want {
    First,
    All,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equality {
    pub id: EqId,
    pub lhs: Term,
    pub rhs: Term,
    pub deleted: bool,
}

impl Equality {
    pub fn new(id: EqId, lhs: Term, rhs: Term) -> Self {
        Self {
            id,
            lhs,
            rhs,
            deleted: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Tod {
    order: TermOrder,
    nodes: Vec<Node>,
    root: NodeId,
    exit: NodeId,
    eqs: BTreeMap<EqId, Equality>,
}

impl Tod {
    pub fn new(order: TermOrder) -> Self {
        let mut tod = Self {
            order,
            nodes: Vec::new(),
            root: NodeId(0),
            exit: NodeId(1),
            eqs: BTreeMap::new(),
        };
        let root = tod.alloc(NodeKind::Root);
        let exit = tod.alloc(NodeKind::Exit);
        tod.nodes[root.index()].visited = true;
        tod.nodes[root.index()].tpo = Some(TpoId::EMPTY);
        tod.link(root, 0, exit);
        tod
    }

    pub fn order(&self) -> &TermOrder {
        &self.order
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn exit(&self) -> NodeId {
        self.exit
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    /// Target of the root's only edge.
    pub fn root_successor(&self) -> NodeId {
        self.succ(self.root, 0)
    }

    pub fn live_nodes(&self) -> impl Iterator<Item = (NodeId, &Node)> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.alive)
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn live_node_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    pub fn equalities(&self) -> impl Iterator<Item = &Equality> {
        self.eqs.values()
    }

    pub fn equality(&self, id: EqId) -> Option<&Equality> {
        self.eqs.get(&id)
    }

    fn alloc(&mut self, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node::new(kind));
        id
    }

    fn create(&mut self, kind: NodeKind, counters: &mut TodCounters) -> NodeId {
        counters.created.bump(&kind);
        self.alloc(kind)
    }

    fn succ(&self, n: NodeId, slot: usize) -> NodeId {
        self.nodes[n.index()].succ[slot].expect("missing edge")
    }

    fn link(&mut self, from: NodeId, slot: usize, to: NodeId) {
        self.nodes[from.index()].succ[slot] = Some(to);
        self.nodes[to.index()].parents.push((from, slot as u8));
    }

    fn drop_parent(&mut self, child: NodeId, edge: (NodeId, u8)) {
        let parents = &mut self.nodes[child.index()].parents;
        if let Some(i) = parents.iter().position(|e| *e == edge) {
            parents.swap_remove(i);
        }
    }

    /// Points edge `(from, slot)` at `to`.
    fn redirect(&mut self, from: NodeId, slot: usize, to: NodeId) {
        if let Some(old) = self.nodes[from.index()].succ[slot] {
            self.drop_parent(old, (from, slot as u8));
        }
        self.link(from, slot, to);
    }

    fn unlink_out(&mut self, n: NodeId) -> [Option<NodeId>; 3] {
        let old = std::mem::take(&mut self.nodes[n.index()].succ);
        for (slot, c) in old.iter().enumerate() {
            if let Some(c) = c {
                self.drop_parent(*c, (n, slot as u8));
            }
        }
        old
    }

    /// Removes `n` and, breadth-first, every node left without incoming
    /// edges. The exit node is never removed.
    fn remove_cascade(&mut self, n: NodeId) {
        let mut queue = VecDeque::from([n]);
        self.nodes[n.index()].alive = false;
        while let Some(m) = queue.pop_front() {
            self.nodes[m.index()].parents.clear();
            for c in self.unlink_out(m).into_iter().flatten() {
                let child = &mut self.nodes[c.index()];
                if c != self.exit && child.alive && child.parents.is_empty() {
                    child.alive = false;
                    queue.push_back(c);
                }
            }
        }
    }

    fn collect_orphans(&mut self, candidates: &[NodeId]) {
        for &c in candidates {
            let node = &self.nodes[c.index()];
            if c != self.exit && node.alive && node.parents.is_empty() {
                self.remove_cascade(c);
            }
        }
    }

    /// Splices `l ∘ r` in front of the exit node: every edge into exit
    /// now enters the new node, whose `>` edge leads to a success node.
    pub fn insert(&mut self, eq: Equality, counters: &mut TodCounters) -> Result<NodeId, TodError> {
        if self.eqs.contains_key(&eq.id) {
            return Err(TodError::Duplicate(eq.id));
        }
        let cmp = self.create(
            NodeKind::TermComparison {
                lhs: eq.lhs.clone(),
                rhs: eq.rhs.clone(),
            },
            counters,
        );
        let success = self.create(NodeKind::Success(eq.id), counters);
        let incoming = std::mem::take(&mut self.nodes[self.exit.index()].parents);
        for (p, slot) in incoming {
            self.link(p, slot as usize, cmp);
        }
        self.link(cmp, 0, success);
        self.link(cmp, 1, self.exit);
        self.link(cmp, 2, self.exit);
        self.link(success, 0, self.exit);
        self.eqs.insert(eq.id, eq);
        Ok(cmp)
    }

    /// Lazy deletion: the structure is untouched, retrievals skip it.
    pub fn mark_deleted(&mut self, id: EqId) -> Result<(), TodError> {
        match self.eqs.get_mut(&id) {
            Some(eq) => {
                eq.deleted = true;
                Ok(())
            }
            None => Err(TodError::UnknownEquality(id)),
        }
    }

    /// Label of the edge `σ` takes out of an evaluation node.
    pub fn evaluate_node(&self, n: NodeId, subst: &Substitution) -> Result<EdgeLabel, TodError> {
        match &self.nodes[n.index()].kind {
            NodeKind::TermComparison { lhs, rhs } => Ok(EdgeLabel::of_cmp(
                self.order
                    .greater_or_equal(ClosureTerm::new(lhs, subst), ClosureTerm::new(rhs, subst)),
            )),
            NodeKind::PositivityCheck(e) => {
                let sig = self.order.signature();
                Ok(EdgeLabel::of_sign(subst.apply_linear(e, sig).sign(sig.w0())))
            }
            _ => Err(TodError::Precondition("not an evaluation node")),
        }
    }

    /// Ordering knowledge of paths that reach the target of `(p, slot)`.
    fn arrival_tpo(&self, p: NodeId, slot: usize, store: &mut TpoStore) -> Result<TpoId, TodError> {
        let node = &self.nodes[p.index()];
        let base = node.tpo.expect("traversal left an unvisited node");
        match &node.kind {
            NodeKind::TermComparison { lhs, rhs } => {
                let c = TermConstraint::new(lhs.clone(), CMP_OF_SLOT[slot], rhs.clone());
                Ok(store.extend(base, &[], &[c], &self.order)?)
            }
            _ => Ok(base),
        }
    }

    /// Runs the retrieval steps for `subst`, transforming the diagram on
    /// the way, and returns the non-deleted equalities of the success
    /// nodes passed.
    pub fn retrieve(
        &mut self,
        subst: &Substitution,
        want: Want,
        store: &mut TpoStore,
        counters: &mut TodCounters,
    ) -> Result<Vec<EqId>, TodError> {
        let mut result = Vec::new();
        let (mut p, mut slot) = (self.root, 0usize);
        let mut arrival: Option<((NodeId, usize), TpoId)> = None;
        let mut steps = 0u64;
        loop {
            steps += 1;
            if steps > STEP_CAP {
                return Err(TodError::StepCap(STEP_CAP));
            }
            let n = self.succ(p, slot);
            if n == self.exit {
                return Ok(result);
            }
            if !self.nodes[n.index()].visited {
                self.replicate_node(n, (p, slot as u8), counters)?;
                counters.processed.bump(&self.nodes[n.index()].kind);
                let base = match arrival {
                    Some((edge, tpo)) if edge == (p, slot) => tpo,
                    _ => {
                        let tpo = self.arrival_tpo(p, slot, store)?;
                        arrival = Some(((p, slot), tpo));
                        tpo
                    }
                };
                let node_tpo = match &self.nodes[n.index()].kind {
                    NodeKind::TermComparison { lhs, rhs } => {
                        let (lhs, rhs) = (lhs.clone(), rhs.clone());
                        let tpo = store.extend(base, &[lhs.clone(), rhs.clone()], &[], &self.order)?;
                        if let Some(label) = force_term(store.get(tpo), &lhs, &rhs) {
                            self.remove_forced(n, label)?;
                            continue;
                        }
                        if self.transform(n, counters)? {
                            continue;
                        }
                        tpo
                    }
                    NodeKind::PositivityCheck(e) => {
                        if let Some(label) = force_positivity(e, self.order.w0()) {
                            self.remove_forced(n, label)?;
                            continue;
                        }
                        base
                    }
                    _ => base,
                };
                let node = &mut self.nodes[n.index()];
                node.visited = true;
                node.tpo = Some(node_tpo);
            }
            counters.traversed.bump(&self.nodes[n.index()].kind);
            let next_slot = match &self.nodes[n.index()].kind {
                NodeKind::Success(id) => {
                    if !self.eqs[id].deleted {
                        result.push(*id);
                        if want == Want::First {
                            return Ok(result);
                        }
                    }
                    0
                }
                _ => self.evaluate_node(n, subst)?.slot(),
            };
            p = n;
            slot = next_slot;
        }
    }

    /// Gives every incoming edge of `n` except `keep` to a fresh copy of
    /// `n` with the same outgoing edges. Returns the copy, if one was made.
    pub fn replicate_node(
        &mut self,
        n: NodeId,
        keep: (NodeId, u8),
        counters: &mut TodCounters,
    ) -> Result<Option<NodeId>, TodError> {
        let node = &self.nodes[n.index()];
        if matches!(node.kind, NodeKind::Root | NodeKind::Exit) {
            return Err(TodError::Precondition("root and exit are never replicated"));
        }
        let Some(pos) = node.parents.iter().position(|e| *e == keep) else {
            return Err(TodError::Precondition("kept edge does not enter the node"));
        };
        if node.parents.len() <= 1 {
            return Ok(None);
        }
        let mut others = node.parents.clone();
        others.remove(pos);
        let kind = node.kind.clone();
        let succ = node.succ;
        let copy = self.create(kind, counters);
        for (q, t) in others {
            self.nodes[q.index()].succ[t as usize] = Some(copy);
            self.nodes[copy.index()].parents.push((q, t));
        }
        self.nodes[n.index()].parents = vec![keep];
        for (slot, c) in succ.iter().enumerate() {
            if let Some(c) = c {
                self.link(copy, slot, *c);
            }
        }
        Ok(Some(copy))
    }

    /// Redundant node removal: `n` forces `label`, so its incoming edge
    /// goes straight to the `label` successor. Returns that successor.
    pub fn remove_forced(&mut self, n: NodeId, label: EdgeLabel) -> Result<NodeId, TodError> {
        let node = &self.nodes[n.index()];
        if !node.kind.is_evaluation() || !node.kind.labels().contains(&label) {
            return Err(TodError::Precondition("forced label does not fit the node"));
        }
        if node.parents.len() != 1 || node.visited {
            return Err(TodError::Precondition("forced node must be unvisited with one parent"));
        }
        let (p, slot) = node.parents[0];
        let target = self.succ(n, label.slot());
        self.redirect(p, slot as usize, target);
        self.remove_cascade(n);
        Ok(target)
    }

    /// Applies the KBO or LPO transformation to a term comparison between
    /// two non-variable terms. Returns false when none applies.
    pub fn transform(&mut self, n: NodeId, counters: &mut TodCounters) -> Result<bool, TodError> {
        let node = &self.nodes[n.index()];
        let NodeKind::TermComparison { lhs, rhs } = &node.kind else {
            return Ok(false);
        };
        if lhs.is_var() || rhs.is_var() {
            return Ok(false);
        }
        if node.parents.len() != 1 || node.visited {
            return Err(TodError::Precondition("transformed node must be unvisited with one parent"));
        }
        let (lhs, rhs) = (lhs.clone(), rhs.clone());
        match self.order.kind() {
            OrderKind::Kbo => self.transform_kbo(n, &lhs, &rhs, counters),
            OrderKind::Lpo => self.transform_lpo(n, &lhs, &rhs, counters),
        }
        Ok(true)
    }

    fn term_node(&mut self, lhs: &Term, rhs: &Term, counters: &mut TodCounters) -> NodeId {
        self.create(
            NodeKind::TermComparison {
                lhs: lhs.clone(),
                rhs: rhs.clone(),
            },
            counters,
        )
    }

    fn wire(&mut self, n: NodeId, targets: [NodeId; 3]) {
        for (slot, t) in targets.into_iter().enumerate() {
            self.link(n, slot, t);
        }
    }

    // in place: n becomes |s| - |t| ⊵ 0
    fn transform_kbo(&mut self, n: NodeId, s: &Term, t: &Term, counters: &mut TodCounters) {
        let [n1, n2, n3] = self.unlink_out(n).map(|x| x.expect("missing edge"));
        let sig = self.order.signature().clone();
        let (TermNode::App(f, ss), TermNode::App(g, ts)) = (s.node(), t.node()) else {
            unreachable!("checked by caller");
        };
        let kind = NodeKind::PositivityCheck(self.order.weight_diff(s, t));
        counters.created.bump(&kind);
        self.nodes[n.index()].kind = kind;
        if sig.prec_greater(*f, *g) {
            self.wire(n, [n1, n1, n3]);
        } else if sig.prec_greater(*g, *f) {
            self.wire(n, [n1, n3, n3]);
        } else {
            let mut next = n2;
            for (si, ti) in ss.iter().zip(ts.iter()).rev() {
                let c = self.term_node(si, ti, counters);
                self.wire(c, [n1, next, n3]);
                next = c;
            }
            self.wire(n, [n1, next, n3]);
        }
        self.collect_orphans(&[n1, n2, n3]);
    }

    fn transform_lpo(&mut self, n: NodeId, s: &Term, t: &Term, counters: &mut TodCounters) {
        let [n1, n2, n3] = self.nodes[n.index()].succ.map(|x| x.expect("missing edge"));
        let sig = self.order.signature().clone();
        let (TermNode::App(f, ss), TermNode::App(g, ts)) = (s.node(), t.node()) else {
            unreachable!("checked by caller");
        };
        let entry = if sig.prec_greater(*f, *g) {
            // s ≻ t_j for all j
            let mut next = n1;
            for tj in ts.iter().rev() {
                let c = self.term_node(s, tj, counters);
                self.wire(c, [next, n3, n3]);
                next = c;
            }
            next
        } else if sig.prec_greater(*g, *f) {
            // s_i ⪰ t for some i
            let mut next = n3;
            for si in ss.iter().rev() {
                let c = self.term_node(si, t, counters);
                self.wire(c, [n1, n1, next]);
                next = c;
            }
            next
        } else if ss.is_empty() {
            n2
        } else {
            let (mut all_gt, mut some_geq, mut arg) = (n1, n3, n2);
            for j in (1..ss.len()).rev() {
                let a = self.term_node(s, &ts[j], counters);
                self.wire(a, [all_gt, n3, n3]);
                let b = self.term_node(&ss[j], t, counters);
                self.wire(b, [n1, n1, some_geq]);
                let c = self.term_node(&ss[j], &ts[j], counters);
                self.wire(c, [all_gt, arg, some_geq]);
                (all_gt, some_geq, arg) = (a, b, c);
            }
            let top = self.term_node(&ss[0], &ts[0], counters);
            self.wire(top, [all_gt, arg, some_geq]);
            top
        };
        let (p, slot) = self.nodes[n.index()].parents[0];
        self.redirect(p, slot as usize, entry);
        self.remove_cascade(n);
    }

    /// The unique path from the root to `n` as `(node, slot)` steps, or
    /// `None` if `n` has several.
    pub fn root_path(&self, n: NodeId) -> Option<Vec<(NodeId, u8)>> {
        let mut path = Vec::new();
        let mut cur = n;
        while cur != self.root {
            let node = &self.nodes[cur.index()];
            if node.parents.len() != 1 || path.len() > self.nodes.len() {
                return None;
            }
            path.push(node.parents[0]);
            cur = node.parents[0].0;
        }
        path.reverse();
        Some(path)
    }

    /// Root paths of all visited nodes.
    pub fn visited_paths(&self) -> BTreeMap<NodeId, Option<Vec<(NodeId, u8)>>> {
        self.live_nodes()
            .filter(|(id, n)| n.visited && *id != self.root)
            .map(|(id, _)| (id, self.root_path(id)))
            .collect()
    }

    /// Checks the structural invariants: edge/parent consistency,
    /// out-degrees, acyclicity, reachability in both directions, and a
    /// unique root path through visited nodes for every visited node.
    pub fn check(&self) -> Result<(), String> {
        let root = &self.nodes[self.root.index()];
        if !root.alive || root.kind != NodeKind::Root || !root.parents.is_empty() {
            return Err("bad root".into());
        }
        let exit = &self.nodes[self.exit.index()];
        if !exit.alive || exit.kind != NodeKind::Exit || exit.succ.iter().any(Option::is_some) {
            return Err("bad exit".into());
        }
        let mut expected_parents: BTreeMap<NodeId, Vec<(NodeId, u8)>> = BTreeMap::new();
        for (id, node) in self.live_nodes() {
            let labels = node.kind.labels();
            for slot in 0..3 {
                let wanted = labels.iter().any(|l| l.slot() == slot);
                match node.succ[slot] {
                    Some(c) if wanted => {
                        if !self.nodes[c.index()].alive {
                            return Err(format!("{id} has an edge to removed node {c}"));
                        }
                        expected_parents.entry(c).or_default().push((id, slot as u8));
                    }
                    None if !wanted => {}
                    _ => return Err(format!("{id} has wrong out-degree")),
                }
            }
            if id != self.root && node.parents.is_empty() {
                return Err(format!("{id} has no incoming edge"));
            }
        }
        for (id, node) in self.live_nodes() {
            let mut have = node.parents.clone();
            let mut want = expected_parents.remove(&id).unwrap_or_default();
            have.sort();
            want.sort();
            if have != want {
                return Err(format!("{id} has stale parent records"));
            }
        }
        // acyclicity and reachability from the root
        let mut state = vec![0u8; self.nodes.len()];
        let mut stack = vec![(self.root, 0usize)];
        state[self.root.index()] = 1;
        while let Some((n, i)) = stack.pop() {
            let succ: Vec<NodeId> = self.nodes[n.index()].succ.iter().flatten().copied().collect();
            if i < succ.len() {
                stack.push((n, i + 1));
                let c = succ[i];
                match state[c.index()] {
                    0 => {
                        state[c.index()] = 1;
                        stack.push((c, 0));
                    }
                    1 => return Err(format!("cycle through {c}")),
                    _ => {}
                }
            } else {
                state[n.index()] = 2;
            }
        }
        for (id, _) in self.live_nodes() {
            if state[id.index()] != 2 {
                return Err(format!("{id} is unreachable from the root"));
            }
        }
        // every live node reaches exit
        let mut reaches = HashSet::from([self.exit]);
        let mut queue = VecDeque::from([self.exit]);
        while let Some(n) = queue.pop_front() {
            for (p, _) in &self.nodes[n.index()].parents {
                if reaches.insert(*p) {
                    queue.push_back(*p);
                }
            }
        }
        for (id, _) in self.live_nodes() {
            if !reaches.contains(&id) {
                return Err(format!("exit is unreachable from {id}"));
            }
        }
        for (id, node) in self.live_nodes() {
            if !node.visited || id == self.root {
                continue;
            }
            let Some(path) = self.root_path(id) else {
                return Err(format!("visited node {id} has several root paths"));
            };
            if path.iter().any(|(q, _)| !self.nodes[q.index()].visited) {
                return Err(format!("visited node {id} is below an unvisited node"));
            }
        }
        Ok(())
    }

    pub fn node_label(&self, n: NodeId) -> String {
        let sig = self.order.signature();
        match &self.nodes[n.index()].kind {
            NodeKind::Root => "root".into(),
            NodeKind::Exit => "exit".into(),
            NodeKind::TermComparison { lhs, rhs } => {
                format!("{} ∘ {}", lhs.display(sig), rhs.display(sig))
            }
            NodeKind::PositivityCheck(e) => format!("{e} ⊵ 0"),
            NodeKind::Success(id) => format!("success {id}"),
        }
    }

    /// Every root-to-exit path as a sequence of `label edge` strings.
    /// Exponential in general; meant for small diagrams.
    pub fn label_paths(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.collect_paths(self.root_successor(), &mut prefix, &mut out);
        out.sort();
        out
    }

    fn collect_paths(&self, n: NodeId, prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        if n == self.exit {
            out.push(prefix.clone());
            return;
        }
        for (label, c) in self.nodes[n.index()].edges() {
            prefix.push(format!("{} {}", self.node_label(n), label));
            self.collect_paths(c, prefix, out);
            prefix.pop();
        }
    }

    /// Deterministic text rendering of the live nodes, in depth-first
    /// order from the root.
    pub fn dump(&self) -> String {
        use fmt::Write;
        let mut seen = HashSet::new();
        let mut stack = vec![self.root];
        let mut out = String::new();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            let node = &self.nodes[n.index()];
            let mark = if node.visited { "*" } else { "" };
            let _ = write!(out, "{n}{mark} [{}]", self.node_label(n));
            for (label, c) in node.edges() {
                let _ = write!(out, " {label}{c}");
            }
            out.push('\n');
            let succ: Vec<NodeId> = node.edges().map(|(_, c)| c).collect();
            stack.extend(succ.into_iter().rev());
        }
        out
    }
}
