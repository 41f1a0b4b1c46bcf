//! Bound bookkeeping across emissions.

use std::collections::HashMap;

use crate::bounds::BoundPair;
use crate::prxml::{DeweyCode, NodeId, NodeKind, PrxmlDocument};

/// Emitted result as seen by its ancestors: the claimed probability is known
/// to lie in `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Emitted {
    node: NodeId,
    low: f64,
    high: f64,
}

/// Two maps: base bounds per node, and the emitted descendants of each
/// ancestor. Effective bounds subtract the probability that the subtree
/// already holds an emitted result.
///
/// Emitted claims are disjoint, and the children of an ordinary or IND node
/// are independent, so that probability is computed bottom-up over the
/// emitted nodes: a MUX node adds its children's values, any other node
/// with existence probability `P` combines them as `P (1 - Π(1 - u/P))`, and
/// an emitted node adds its own claim to that of its descendants. Upper
/// bounds use the `low` ends and lower bounds the `high` ends. With a single
/// emitted descendant this is plain subtraction.
#[derive(Debug, Default)]
pub struct UpdateStore {
    base: HashMap<DeweyCode, BoundPair>,
    emitted: HashMap<DeweyCode, Vec<Emitted>>,
}

impl UpdateStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn base(&self, node: &DeweyCode) -> Option<&BoundPair> {
        self.base.get(node)
    }

    pub fn set_base(&mut self, bounds: BoundPair) {
        self.base.insert(bounds.node.clone(), bounds);
    }

    /// Records an emission of `node` with a claim in `[low, high]` for all of
    /// its ordinary ancestors.
    pub fn record(&mut self, doc: &PrxmlDocument, node: NodeId, low: f64, high: f64) {
        let e = Emitted { node, low, high };
        let mut at = doc.node(node).parent;
        while let Some(a) = at {
            let n = doc.node(a);
            if n.kind.is_ordinary() {
                self.emitted.entry(n.dewey.clone()).or_default().push(e);
            }
            at = n.parent;
        }
    }

    /// Emitted descendants recorded for `node` with their claim ranges.
    pub fn emitted_below(&self, node: &DeweyCode) -> Vec<(NodeId, f64, f64)> {
        self.emitted
            .get(node)
            .map(|v| v.iter().map(|e| (e.node, e.low, e.high)).collect())
            .unwrap_or_default()
    }

    /// Base bounds minus emitted mass. `None` if no base is stored.
    pub fn effective(&self, doc: &PrxmlDocument, node: &DeweyCode) -> Option<BoundPair> {
        let base = self.base.get(node)?;
        let Some(list) = self.emitted.get(node).filter(|l| !l.is_empty()) else {
            return Some(base.clone());
        };
        let id = doc.lookup(node).ok()?;
        let low = union_mass(doc, id, list, |e| e.low);
        let high = union_mass(doc, id, list, |e| e.high);
        let ub = (base.ub - low).clamp(0.0, 1.0);
        let lb = (base.lb - high).clamp(0.0, ub);
        Some(BoundPair::new(node.clone(), lb, ub))
    }
}

/// Probability that the subtree of `v` holds one of `list` (all strict
/// descendants of `v`, or `v` itself).
fn union_mass(doc: &PrxmlDocument, v: NodeId, list: &[Emitted], value: impl Fn(&Emitted) -> f64 + Copy) -> f64 {
    let node = doc.node(v);
    let mut own = 0.0;
    let mut by_child: Vec<(NodeId, Vec<Emitted>)> = Vec::new();
    for e in list {
        if e.node == v {
            own += value(e);
            continue;
        }
        let c = child_towards(doc, v, e.node);
        match by_child.iter_mut().find(|(id, _)| *id == c) {
            Some((_, l)) => l.push(*e),
            None => by_child.push((c, vec![*e])),
        }
    }
    let parts: Vec<f64> = by_child
        .iter()
        .map(|(c, l)| union_mass(doc, *c, l, value))
        .collect();
    let below = match node.kind {
        NodeKind::Mux => parts.iter().sum(),
        _ => {
            let p = node.path_prob;
            if p <= 0.0 {
                0.0
            } else {
                p * (1.0 - parts.iter().map(|u| 1.0 - (u / p).min(1.0)).product::<f64>())
            }
        }
    };
    (own + below).min(node.path_prob)
}

fn child_towards(doc: &PrxmlDocument, anc: NodeId, desc: NodeId) -> NodeId {
    let mut at = desc;
    loop {
        let p = doc.node(at).parent.expect("descendant below ancestor");
        if p == anc {
            return at;
        }
        at = p;
    }
}
