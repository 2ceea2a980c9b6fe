use std::collections::{BTreeSet, HashMap};

use crate::bitblast::Var;

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const(bool),
    Input(Var),
    Not(NodeId),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Ite(NodeId, NodeId, NodeId),
}

/// Structurally hashed Boolean circuit over propositional variables.
///
/// Nodes are stored in topological order: children always precede parents.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    nodes: Vec<Node>,
    cache: HashMap<Node, NodeId>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Node {
        self.nodes[id]
    }

    fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.cache.get(&n) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(n);
        self.cache.insert(n, id);
        id
    }

    fn as_const(&self, id: NodeId) -> Option<bool> {
        match self.nodes[id] {
            Node::Const(b) => Some(b),
            _ => None,
        }
    }

    pub fn constant(&mut self, b: bool) -> NodeId {
        self.intern(Node::Const(b))
    }

    pub fn input(&mut self, v: Var) -> NodeId {
        self.intern(Node::Input(v))
    }

    /// Input literal in DIMACS convention.
    pub fn literal(&mut self, lit: i32) -> NodeId {
        let v = self.input(lit.unsigned_abs());
        if lit < 0 {
            self.not(v)
        } else {
            v
        }
    }

    pub fn not(&mut self, a: NodeId) -> NodeId {
        match self.nodes[a] {
            Node::Const(b) => self.constant(!b),
            Node::Not(x) => x,
            _ => self.intern(Node::Not(a)),
        }
    }

    pub fn and(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(false), _) | (_, Some(false)) => self.constant(false),
            (Some(true), _) => b,
            (_, Some(true)) => a,
            _ if a == b => a,
            _ => self.intern(Node::And(a.min(b), a.max(b))),
        }
    }

    pub fn or(&mut self, a: NodeId, b: NodeId) -> NodeId {
        match (self.as_const(a), self.as_const(b)) {
            (Some(true), _) | (_, Some(true)) => self.constant(true),
            (Some(false), _) => b,
            (_, Some(false)) => a,
            _ if a == b => a,
            _ => self.intern(Node::Or(a.min(b), a.max(b))),
        }
    }

    pub fn and_all(&mut self, xs: impl IntoIterator<Item = NodeId>) -> NodeId {
        let mut acc = self.constant(true);
        for x in xs {
            acc = self.and(acc, x);
        }
        acc
    }

    pub fn or_all(&mut self, xs: impl IntoIterator<Item = NodeId>) -> NodeId {
        let mut acc = self.constant(false);
        for x in xs {
            acc = self.or(acc, x);
        }
        acc
    }

    pub fn ite(&mut self, c: NodeId, t: NodeId, e: NodeId) -> NodeId {
        if t == e {
            return t;
        }
        match (self.as_const(c), self.as_const(t), self.as_const(e)) {
            (Some(true), _, _) => t,
            (Some(false), _, _) => e,
            (_, Some(true), Some(false)) => c,
            (_, Some(false), Some(true)) => self.not(c),
            _ => self.intern(Node::Ite(c, t, e)),
        }
    }

    /// Reduced Shannon decision tree for a truth table. Row `r` gives the
    /// value when `deps[k]` equals bit `k` of `r`.
    pub fn from_table(&mut self, deps: &[Var], rows: &[bool]) -> NodeId {
        assert_eq!(rows.len(), 1 << deps.len());
        let leaves: Vec<NodeId> = rows.iter().map(|&b| self.constant(b)).collect();
        self.shannon(deps, &leaves)
    }

    fn shannon(&mut self, deps: &[Var], level: &[NodeId]) -> NodeId {
        // Combine on the lowest dependency first; rows are paired (even, odd).
        let mut cur = level.to_vec();
        for &v in deps {
            let sel = self.input(v);
            cur = cur.chunks(2).map(|p| self.ite(sel, p[1], p[0])).collect();
        }
        cur[0]
    }

    /// Values of all nodes up to and including `upto`.
    pub fn eval_all(&self, upto: NodeId, value: &dyn Fn(Var) -> bool) -> Vec<bool> {
        let mut vals: Vec<bool> = Vec::with_capacity(upto + 1);
        for n in &self.nodes[..=upto] {
            let v = match *n {
                Node::Const(b) => b,
                Node::Input(x) => value(x),
                Node::Not(a) => !vals[a],
                Node::And(a, b) => vals[a] && vals[b],
                Node::Or(a, b) => vals[a] || vals[b],
                Node::Ite(c, t, e) => {
                    if vals[c] {
                        vals[t]
                    } else {
                        vals[e]
                    }
                }
            };
            vals.push(v);
        }
        vals
    }

    pub fn eval(&self, root: NodeId, value: &dyn Fn(Var) -> bool) -> bool {
        self.eval_all(root, value)[root]
    }

    /// Nodes reachable from `root`, in increasing order.
    pub fn reachable(&self, root: NodeId) -> Vec<NodeId> {
        let mut seen = vec![false; root + 1];
        seen[root] = true;
        for id in (0..=root).rev() {
            if !seen[id] {
                continue;
            }
            match self.nodes[id] {
                Node::Const(_) | Node::Input(_) => {}
                Node::Not(a) => seen[a] = true,
                Node::And(a, b) | Node::Or(a, b) => {
                    seen[a] = true;
                    seen[b] = true;
                }
                Node::Ite(c, t, e) => {
                    seen[c] = true;
                    seen[t] = true;
                    seen[e] = true;
                }
            }
        }
        (0..=root).filter(|&i| seen[i]).collect()
    }

    pub fn inputs(&self, root: NodeId) -> BTreeSet<Var> {
        self.reachable(root)
            .into_iter()
            .filter_map(|id| match self.nodes[id] {
                Node::Input(v) => Some(v),
                _ => None,
            })
            .collect()
    }
}
