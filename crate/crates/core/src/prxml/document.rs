use std::collections::HashMap;

use super::DeweyCode;
use crate::error::{Error, Result};

/// Tolerance used for every probability comparison in the crate.
pub const PROB_EPS: f64 = 1e-9;

/// Index of a node in document (pre-)order. Comparing ids compares document
/// positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistKind {
    Ind,
    Mux,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Ordinary { label: String, terms: Vec<String> },
    Ind,
    Mux,
}

impl NodeKind {
    pub fn is_ordinary(&self) -> bool {
        matches!(self, NodeKind::Ordinary { .. })
    }

    pub fn terms(&self) -> &[String] {
        match self {
            NodeKind::Ordinary { terms, .. } => terms,
            _ => &[],
        }
    }

    pub fn label(&self) -> &str {
        match self {
            NodeKind::Ordinary { label, .. } => label,
            NodeKind::Ind => "IND",
            NodeKind::Mux => "MUX",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrxmlNode {
    pub id: NodeId,
    pub dewey: DeweyCode,
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    /// Conditional probability of the edge from the parent; 1 for the root.
    pub edge_prob: f64,
    pub children: Vec<NodeId>,
    /// Id of the last node in this node's subtree (inclusive).
    pub subtree_end: NodeId,
    /// Product of edge probabilities from the root.
    pub path_prob: f64,
}

impl PrxmlNode {
    pub fn depth(&self) -> usize {
        self.dewey.depth()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KindCounts {
    pub ordinary: usize,
    pub ind: usize,
    pub mux: usize,
}

/// An immutable PrXML^{ind,mux} document. Nodes are stored in document order.
#[derive(Debug, Clone)]
pub struct PrxmlDocument {
    nodes: Vec<PrxmlNode>,
    by_dewey: HashMap<DeweyCode, NodeId>,
    counts: KindCounts,
}

impl PrxmlDocument {
    pub fn root(&self) -> &PrxmlNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[PrxmlNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &PrxmlNode {
        &self.nodes[id.0]
    }

    pub fn kind_counts(&self) -> &KindCounts {
        &self.counts
    }

    pub fn lookup(&self, dewey: &DeweyCode) -> Result<NodeId> {
        self.by_dewey
            .get(dewey)
            .copied()
            .ok_or_else(|| Error::UnknownNode(dewey.clone()))
    }

    /// Finds the first ordinary node (document order) carrying `label`.
    pub fn find_label(&self, label: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| matches!(&n.kind, NodeKind::Ordinary { label: l, .. } if l == label))
            .map(|n| n.id)
    }

    pub fn is_ancestor(&self, anc: NodeId, desc: NodeId) -> bool {
        anc < desc && desc <= self.nodes[anc.0].subtree_end
    }

    pub fn is_ancestor_or_self(&self, anc: NodeId, desc: NodeId) -> bool {
        anc == desc || self.is_ancestor(anc, desc)
    }

    /// Nearest ordinary proper ancestor.
    pub fn ordinary_parent(&self, id: NodeId) -> Option<NodeId> {
        let mut cur = self.nodes[id.0].parent;
        while let Some(p) = cur {
            if self.nodes[p.0].kind.is_ordinary() {
                return Some(p);
            }
            cur = self.nodes[p.0].parent;
        }
        None
    }

    /// Edges whose presence is uncertain: every child edge of a MUX node and
    /// every other edge with probability below 1.
    pub fn optional_edges(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| match n.parent {
                None => false,
                Some(p) => {
                    matches!(self.nodes[p.0].kind, NodeKind::Mux) || n.edge_prob < 1.0 - PROB_EPS
                }
            })
            .map(|n| n.id)
            .collect()
    }

    /// Probability that `dewey` exists in a random world.
    pub fn path_probability(&self, dewey: &DeweyCode) -> Result<f64> {
        Ok(self.nodes[self.lookup(dewey)?.0].path_prob)
    }
}

/// Mutable tree used to assemble documents before Dewey codes are assigned.
#[derive(Debug, Clone)]
pub struct DocumentBuilder {
    kinds: Vec<NodeKind>,
    probs: Vec<f64>,
    children: Vec<Vec<usize>>,
}

/// Handle to a node inside a [`DocumentBuilder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuilderNode(usize);

impl BuilderNode {
    pub const ROOT: BuilderNode = BuilderNode(0);
}

/// Lower-cases and splits text into distinct terms, keeping first occurrence
/// order.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut terms: Vec<String> = Vec::new();
    for tok in text.split_whitespace() {
        let t = tok.to_lowercase();
        if !terms.contains(&t) {
            terms.push(t);
        }
    }
    terms
}

impl DocumentBuilder {
    pub fn new(root_label: &str, root_text: &str) -> Self {
        DocumentBuilder {
            kinds: vec![NodeKind::Ordinary {
                label: root_label.to_string(),
                terms: tokenize(root_text),
            }],
            probs: vec![1.0],
            children: vec![Vec::new()],
        }
    }

    fn push(&mut self, parent: BuilderNode, kind: NodeKind, prob: f64) -> BuilderNode {
        let id = self.kinds.len();
        self.kinds.push(kind);
        self.probs.push(prob);
        self.children.push(Vec::new());
        self.children[parent.0].push(id);
        BuilderNode(id)
    }

    /// Adds an ordinary element; `text` is tokenized into terms.
    pub fn ordinary(&mut self, parent: BuilderNode, label: &str, text: &str, prob: f64) -> BuilderNode {
        self.push(
            parent,
            NodeKind::Ordinary {
                label: label.to_string(),
                terms: tokenize(text),
            },
            prob,
        )
    }

    pub fn dist(&mut self, parent: BuilderNode, kind: DistKind, prob: f64) -> BuilderNode {
        let k = match kind {
            DistKind::Ind => NodeKind::Ind,
            DistKind::Mux => NodeKind::Mux,
        };
        self.push(parent, k, prob)
    }

    pub fn node_count(&self) -> usize {
        self.kinds.len()
    }

    /// Validates the tree and lays it out in document order.
    pub fn finish(self) -> Result<PrxmlDocument> {
        let mut nodes: Vec<PrxmlNode> = Vec::with_capacity(self.kinds.len());
        let mut by_dewey = HashMap::with_capacity(self.kinds.len());
        let mut counts = KindCounts::default();

        // (builder index, parent id, dewey, path prob)
        let mut stack: Vec<(usize, Option<NodeId>, DeweyCode, f64)> =
            vec![(0, None, DeweyCode::root(), 1.0)];
        while let Some((b, parent, dewey, path)) = stack.pop() {
            let id = NodeId(nodes.len());
            let prob = if parent.is_none() { 1.0 } else { self.probs[b] };
            if !(prob > 0.0 && prob <= 1.0 + PROB_EPS) || prob.is_nan() {
                return Err(Error::ProbabilityOutOfRange {
                    node: dewey.to_string(),
                    prob,
                });
            }
            let prob = prob.min(1.0);
            let kind = self.kinds[b].clone();
            match &kind {
                NodeKind::Ordinary { .. } => counts.ordinary += 1,
                NodeKind::Ind => counts.ind += 1,
                NodeKind::Mux => counts.mux += 1,
            }
            if !kind.is_ordinary() {
                if parent.is_none() {
                    return Err(Error::InvalidDocument("root must be an ordinary element".into()));
                }
                if self.children[b].is_empty() {
                    return Err(Error::DistributionalLeaf(dewey.to_string()));
                }
            }
            if matches!(kind, NodeKind::Mux) {
                let sum: f64 = self.children[b].iter().map(|&c| self.probs[c]).sum();
                if sum > 1.0 + PROB_EPS {
                    return Err(Error::MuxSumExceeded {
                        node: dewey.to_string(),
                        sum,
                    });
                }
            }
            if let Some(p) = parent {
                nodes[p.0].children.push(id);
            }
            by_dewey.insert(dewey.clone(), id);
            let path_prob = path * prob;
            nodes.push(PrxmlNode {
                id,
                dewey: dewey.clone(),
                kind,
                parent,
                edge_prob: prob,
                children: Vec::new(),
                subtree_end: id,
                path_prob,
            });
            for (i, &c) in self.children[b].iter().enumerate().rev() {
                stack.push((c, Some(id), dewey.child(i as u32 + 1), path_prob));
            }
        }

        for i in (1..nodes.len()).rev() {
            let end = nodes[i].subtree_end;
            let p = nodes[i].parent.expect("non-root has parent");
            if nodes[p.0].subtree_end < end {
                nodes[p.0].subtree_end = end;
            }
        }

        Ok(PrxmlDocument {
            nodes,
            by_dewey,
            counts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_assigns_document_order() {
        let mut b = DocumentBuilder::new("r", "");
        let i = b.dist(BuilderNode::ROOT, DistKind::Ind, 1.0);
        b.ordinary(i, "x", "A b a", 0.5);
        b.ordinary(BuilderNode::ROOT, "y", "", 1.0);
        let doc = b.finish().unwrap();
        let deweys: Vec<String> = doc.nodes().iter().map(|n| n.dewey.to_string()).collect();
        assert_eq!(deweys, ["0", "0.1", "0.1.1", "0.2"]);
        assert_eq!(doc.node(NodeId(2)).kind.terms(), ["a", "b"]);
        assert_eq!(doc.root().subtree_end, NodeId(3));
        assert_eq!(doc.node(NodeId(1)).subtree_end, NodeId(2));
        assert_eq!(doc.ordinary_parent(NodeId(2)), Some(NodeId(0)));
        assert_eq!(doc.optional_edges(), vec![NodeId(2)]);
    }

    #[test]
    fn mux_sum_violation() {
        let mut b = DocumentBuilder::new("r", "");
        let m = b.dist(BuilderNode::ROOT, DistKind::Mux, 1.0);
        b.ordinary(m, "x", "", 0.6);
        b.ordinary(m, "y", "", 0.5);
        let err = b.finish().unwrap_err();
        assert!(err.to_string().contains("MUX sum exceeds 1"), "{err}");
    }

    #[test]
    fn distributional_leaf_rejected() {
        let mut b = DocumentBuilder::new("r", "");
        b.dist(BuilderNode::ROOT, DistKind::Ind, 1.0);
        assert!(matches!(b.finish(), Err(Error::DistributionalLeaf(_))));
    }

    #[test]
    fn probability_range() {
        let mut b = DocumentBuilder::new("r", "");
        b.ordinary(BuilderNode::ROOT, "x", "", 0.0);
        assert!(matches!(b.finish(), Err(Error::ProbabilityOutOfRange { .. })));
        let mut b = DocumentBuilder::new("r", "");
        b.ordinary(BuilderNode::ROOT, "x", "", 1.5);
        assert!(matches!(b.finish(), Err(Error::ProbabilityOutOfRange { .. })));
    }
}
