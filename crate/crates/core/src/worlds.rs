//! Brute-force possible-worlds semantics: the ground truth every other module
//! is checked against.
//!
//! A world is identified by a bitmask over the document's optional edges. A
//! mask is canonical when it marks only edges whose parent exists and picks at
//! most one child per MUX node; each canonical mask with positive probability
//! is one deterministic document.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::prxml::{DeweyCode, NodeId, NodeKind, PrxmlDocument, PROB_EPS};

pub const DEFAULT_BUDGET: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PossibleWorld {
    /// Bit `i` set iff the i-th optional edge is present.
    pub mask: u64,
    pub prob: f64,
}

/// Optional-edge layout of a document.
#[derive(Debug, Clone)]
pub struct EdgeLayout {
    edges: Vec<NodeId>,
    bit_of: Vec<Option<usize>>,
}

impl EdgeLayout {
    pub fn new(doc: &PrxmlDocument) -> Self {
        let edges = doc.optional_edges();
        let mut bit_of = vec![None; doc.len()];
        for (i, e) in edges.iter().enumerate() {
            bit_of[e.0] = Some(i);
        }
        EdgeLayout { edges, bit_of }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Node presence for `mask`, or `None` when the mask is not canonical.
    pub fn presence(&self, doc: &PrxmlDocument, mask: u64) -> Option<Vec<bool>> {
        let mut present = vec![false; doc.len()];
        present[0] = true;
        let mut mux_taken = vec![false; doc.len()];
        for node in &doc.nodes()[1..] {
            let p = node.parent.expect("non-root");
            let on = match self.bit_of[node.id.0] {
                None => true,
                Some(b) => mask >> b & 1 == 1,
            };
            if !present[p.0] {
                if on && self.bit_of[node.id.0].is_some() {
                    return None;
                }
                continue;
            }
            if on {
                if matches!(doc.node(p).kind, NodeKind::Mux) {
                    if mux_taken[p.0] {
                        return None;
                    }
                    mux_taken[p.0] = true;
                }
                present[node.id.0] = true;
            }
        }
        Some(present)
    }

    /// Probability of the world with the given presence vector.
    pub fn world_prob(&self, doc: &PrxmlDocument, present: &[bool]) -> f64 {
        let mut prob = 1.0;
        for node in doc.nodes() {
            if !present[node.id.0] {
                continue;
            }
            match node.kind {
                NodeKind::Mux => {
                    let chosen = node.children.iter().find(|c| present[c.0]);
                    prob *= match chosen {
                        Some(c) => doc.node(*c).edge_prob,
                        None => {
                            let s: f64 = node.children.iter().map(|c| doc.node(*c).edge_prob).sum();
                            let none = 1.0 - s;
                            if none <= PROB_EPS {
                                0.0
                            } else {
                                none
                            }
                        }
                    };
                }
                _ => {
                    for &c in &node.children {
                        if self.bit_of[c.0].is_some() {
                            let l = doc.node(c).edge_prob;
                            prob *= if present[c.0] { l } else { 1.0 - l };
                        }
                    }
                }
            }
        }
        prob
    }
}

fn check_budget(layout: &EdgeLayout, budget: usize) -> Result<()> {
    if layout.len() > budget || layout.len() >= 63 {
        return Err(Error::BudgetExceeded {
            edges: layout.len(),
            budget,
        });
    }
    Ok(())
}

/// All worlds of `doc` with positive probability, in mask order.
pub fn enumerate_worlds(doc: &PrxmlDocument, budget: usize) -> Result<Vec<PossibleWorld>> {
    let layout = EdgeLayout::new(doc);
    check_budget(&layout, budget)?;
    Ok(enumerate_with(doc, &layout)
        .into_iter()
        .map(|(w, _)| w)
        .collect())
}

fn enumerate_with(doc: &PrxmlDocument, layout: &EdgeLayout) -> Vec<(PossibleWorld, Vec<bool>)> {
    let mut out = Vec::new();
    for mask in 0..(1u64 << layout.len()) {
        if let Some(present) = layout.presence(doc, mask) {
            let prob = layout.world_prob(doc, &present);
            if prob > 0.0 {
                out.push((PossibleWorld { mask, prob }, present));
            }
        }
    }
    out
}

/// Bit position of each query keyword.
fn keyword_mask(terms: &[String], query: &[String]) -> u32 {
    let mut m = 0u32;
    for (i, k) in query.iter().enumerate() {
        if terms.iter().any(|t| t == k) {
            m |= 1 << i;
        }
    }
    m
}

/// Per-node keyword coverage of one deterministic world: (subtree keyword
/// mask, whether some ordinary proper descendant covers all keywords).
fn coverage(doc: &PrxmlDocument, present: &[bool], query: &[String]) -> (Vec<u32>, Vec<bool>) {
    let full = (1u32 << query.len()) - 1;
    let n = doc.len();
    let mut contains = vec![0u32; n];
    let mut full_below = vec![false; n];
    for node in doc.nodes().iter().rev() {
        if !present[node.id.0] {
            continue;
        }
        let mut m = keyword_mask(node.kind.terms(), query);
        let mut below = false;
        for &c in &node.children {
            if !present[c.0] {
                continue;
            }
            m |= contains[c.0];
            below |= full_below[c.0]
                || (doc.node(c).kind.is_ordinary() && contains[c.0] == full);
        }
        contains[node.id.0] = m;
        full_below[node.id.0] = below;
    }
    (contains, full_below)
}

/// SLCA nodes of one deterministic world. Only ordinary nodes are candidates;
/// distributional nodes are transparent.
pub fn slca(doc: &PrxmlDocument, present: &[bool], query: &[String]) -> Vec<DeweyCode> {
    if query.is_empty() {
        return Vec::new();
    }
    let full = (1u32 << query.len()) - 1;
    let (contains, full_below) = coverage(doc, present, query);
    doc.nodes()
        .iter()
        .filter(|n| {
            present[n.id.0] && n.kind.is_ordinary() && contains[n.id.0] == full && !full_below[n.id.0]
        })
        .map(|n| n.dewey.clone())
        .collect()
}

/// Fixed-length bitset over world indices.
#[derive(Debug, Clone, PartialEq, Eq)]
struct WorldSet(Vec<u64>);

impl WorldSet {
    fn empty(n: usize) -> Self {
        WorldSet(vec![0; n.div_ceil(64)])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn union_with(&mut self, o: &WorldSet) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a |= b;
        }
    }
    fn minus(&mut self, o: &WorldSet) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a &= !b;
        }
    }
    fn mass(&self, probs: &[f64]) -> f64 {
        let mut s = 0.0;
        for (w, &word) in self.0.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                s += probs[w * 64 + b];
                bits &= bits - 1;
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Claimed quasi-SLCA mass of every ordinary node with positive mass.
    pub per_node: BTreeMap<DeweyCode, f64>,
    pub qualified: Vec<DeweyCode>,
}

impl OracleResult {
    pub fn is_qualified(&self, d: &DeweyCode) -> bool {
        self.qualified.binary_search(d).is_ok()
    }
}

/// Enumerated worlds of one document plus per-world SLCA and coverage data
/// for one query. Reusable across thresholds.
pub struct Oracle<'a> {
    doc: &'a PrxmlDocument,
    query: Vec<String>,
    probs: Vec<f64>,
    worlds: Vec<PossibleWorld>,
    /// Worlds in which each node is an SLCA.
    slca_sets: Vec<WorldSet>,
    /// Worlds in which each node exists and its subtree covers the query.
    full_sets: Vec<WorldSet>,
    /// Worlds in which each node exists.
    exist_sets: Vec<WorldSet>,
}

impl<'a> Oracle<'a> {
    pub fn new(doc: &'a PrxmlDocument, query: &[String], budget: usize) -> Result<Self> {
        if query.is_empty() || query.len() > 31 {
            return Err(Error::QuerySize {
                got: query.len(),
                max: 31,
            });
        }
        let layout = EdgeLayout::new(doc);
        check_budget(&layout, budget)?;
        let all = enumerate_with(doc, &layout);
        let nw = all.len();
        let full = (1u32 << query.len()) - 1;
        let mut slca_sets = vec![WorldSet::empty(nw); doc.len()];
        let mut full_sets = vec![WorldSet::empty(nw); doc.len()];
        let mut exist_sets = vec![WorldSet::empty(nw); doc.len()];
        for (wi, (_, present)) in all.iter().enumerate() {
            let (contains, full_below) = coverage(doc, present, query);
            for node in doc.nodes() {
                let i = node.id.0;
                if !present[i] {
                    continue;
                }
                exist_sets[i].insert(wi);
                if contains[i] == full {
                    full_sets[i].insert(wi);
                    if node.kind.is_ordinary() && !full_below[i] {
                        slca_sets[i].insert(wi);
                    }
                }
            }
        }
        let probs = all.iter().map(|(w, _)| w.prob).collect();
        let worlds = all.into_iter().map(|(w, _)| w).collect();
        Ok(Oracle {
            doc,
            query: query.to_vec(),
            probs,
            worlds,
            slca_sets,
            full_sets,
            exist_sets,
        })
    }

    pub fn worlds(&self) -> &[PossibleWorld] {
        &self.worlds
    }

    pub fn query(&self) -> &[String] {
        &self.query
    }

    /// Global PrSLCA probability: total mass of worlds where `v` is an SLCA.
    pub fn prslca_global(&self, v: NodeId) -> f64 {
        self.slca_sets[v.0].mass(&self.probs)
    }

    /// Global probability that `v` exists and its subtree covers the query.
    pub fn full_mass(&self, v: NodeId) -> f64 {
        self.full_sets[v.0].mass(&self.probs)
    }

    /// Probability that `v` exists.
    pub fn existence(&self, v: NodeId) -> f64 {
        self.exist_sets[v.0].mass(&self.probs)
    }

    /// Quasi-SLCA claims for threshold `sigma`.
    ///
    /// Nodes are processed deepest first (document order within a depth).
    /// An ordinary node claims the worlds where it is an SLCA plus the worlds
    /// still pending from its descendants, minus worlds already claimed by a
    /// qualified descendant. If the claim reaches `sigma` the node qualifies
    /// and those worlds are retired; otherwise they stay pending for the
    /// parent. Distributional nodes pass everything through.
    pub fn quasi(&self, sigma: f64) -> OracleResult {
        let nw = self.worlds.len();
        let n = self.doc.len();
        let mut order: Vec<NodeId> = (0..n).map(NodeId).collect();
        order.sort_by_key(|id| (std::cmp::Reverse(self.doc.node(*id).depth()), *id));

        let mut pending: Vec<WorldSet> = vec![WorldSet::empty(nw); n];
        let mut dead: Vec<WorldSet> = vec![WorldSet::empty(nw); n];
        let mut per_node = BTreeMap::new();
        let mut qualified = Vec::new();

        for id in order {
            let node = self.doc.node(id);
            let mut pend = WorldSet::empty(nw);
            let mut gone = WorldSet::empty(nw);
            for &c in &node.children {
                pend.union_with(&pending[c.0]);
                gone.union_with(&dead[c.0]);
            }
            if node.kind.is_ordinary() {
                let mut claim = self.slca_sets[id.0].clone();
                claim.union_with(&pend);
                claim.minus(&gone);
                let mass = claim.mass(&self.probs);
                if mass > 0.0 {
                    per_node.insert(node.dewey.clone(), mass);
                }
                if mass > 0.0 && mass >= sigma - PROB_EPS {
                    qualified.push(node.dewey.clone());
                    gone.union_with(&claim);
                    pend = WorldSet::empty(nw);
                } else {
                    pend = claim;
                }
            }
            pending[id.0] = pend;
            dead[id.0] = gone;
        }
        qualified.sort();
        OracleResult {
            per_node,
            qualified,
        }
    }
}

/// Global PrSLCA probability of a single node.
pub fn prslca_global(doc: &PrxmlDocument, query: &[String], v: &DeweyCode, budget: usize) -> Result<f64> {
    let id = doc.lookup(v)?;
    Ok(Oracle::new(doc, query, budget)?.prslca_global(id))
}

pub fn quasi_oracle(doc: &PrxmlDocument, query: &[String], sigma: f64, budget: usize) -> Result<OracleResult> {
    Ok(Oracle::new(doc, query, budget)?.quasi(sigma))
}
