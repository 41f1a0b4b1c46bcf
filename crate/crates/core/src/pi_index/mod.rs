//! Probabilistic inverted (PI) index and keyword inverted (KI) index.
//!
//! Every ordinary node gets a [`NodeTermProfile`]: the probability that its
//! subtree contains each term, split into mutually exclusive parts whenever
//! MUX nodes below it make term occurrences exclusive. Parts are aligned
//! across terms: part `j` of every term describes the same exclusive branch
//! choice.

mod operators;
mod persist;

use std::collections::{BTreeMap, HashMap};

use sha2::{Digest, Sha256};

use crate::prxml::{serialize_prxml, DeweyCode, NodeId, NodeKind, PrxmlDocument};

pub use operators::{
    combine_ind_with_parts, cross_combine, op1_sibling_ind, op2_child_ind, op3_sibling_mux,
};
pub use persist::{load_ki, load_pi, save_ki, save_pi};

/// Parts beyond this count are merged pessimistically.
pub const MAX_PARTS: usize = 64;

pub type TermId = u32;

/// Term probabilities of one exclusive alternative. Absent terms have
/// probability 0; zeros are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Part {
    probs: BTreeMap<TermId, f64>,
}

impl Part {
    pub fn from_pairs(pairs: &[(TermId, f64)]) -> Self {
        let mut p = Part::default();
        for &(k, v) in pairs {
            p.set(k, v);
        }
        p
    }

    pub fn with(mut self, term: TermId, prob: f64) -> Self {
        self.set(term, prob);
        self
    }

    pub fn get(&self, term: TermId) -> f64 {
        self.probs.get(&term).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, term: TermId, prob: f64) {
        let p = prob.clamp(0.0, 1.0);
        if p > 0.0 {
            self.probs.insert(term, p);
        } else {
            self.probs.remove(&term);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = TermId> + '_ {
        self.probs.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.probs.iter().map(|(k, v)| (*k, *v))
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Per-term maximum of two parts.
    fn max_with(&mut self, other: &Part) {
        for (k, v) in other.iter() {
            if v > self.get(k) {
                self.set(k, v);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeTermProfile {
    pub node: DeweyCode,
    /// Probability that the node exists.
    pub path_prob: f64,
    pub parts: Vec<Part>,
    /// Exact probability that the subtree contains each term, given the node
    /// exists.
    pub marginals: Part,
    /// Set when parts were merged past [`MAX_PARTS`]; the merged part values
    /// are per-term maxima and no longer a sound source of lower bounds.
    pub approx: bool,
}

/// Sorted term dictionary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, TermId>,
}

impl Vocabulary {
    pub fn from_terms<I: IntoIterator<Item = String>>(terms: I) -> Self {
        let mut terms: Vec<String> = terms.into_iter().collect();
        terms.sort();
        terms.dedup();
        let ids = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        Vocabulary { terms, ids }
    }

    pub fn id(&self, term: &str) -> Option<TermId> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiIndex {
    pub checksum: u64,
    pub vocab: Vocabulary,
    pub profiles: BTreeMap<DeweyCode, NodeTermProfile>,
    /// Dewey-ascending nodes with positive probability for each term.
    pub per_term: Vec<Vec<DeweyCode>>,
}

impl PiIndex {
    pub fn profile(&self, node: &DeweyCode) -> Option<&NodeTermProfile> {
        self.profiles.get(node)
    }

    pub fn part_count(&self) -> usize {
        self.profiles.values().map(|p| p.parts.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KiIndex {
    pub checksum: u64,
    pub vocab: Vocabulary,
    /// Dewey-ascending ordinary nodes whose own terms include each term.
    pub per_term: Vec<Vec<DeweyCode>>,
}

impl KiIndex {
    pub fn list(&self, term: &str) -> &[DeweyCode] {
        match self.vocab.id(term) {
            Some(id) => &self.per_term[id as usize],
            None => &[],
        }
    }
}

/// Fingerprint of a document, stored in index headers.
pub fn document_checksum(doc: &PrxmlDocument) -> u64 {
    let digest = Sha256::digest(serialize_prxml(doc).as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

struct Summary {
    parts: Vec<Part>,
    marginals: Part,
    approx: bool,
}

fn own_part(kind: &NodeKind, vocab: &Vocabulary) -> Part {
    let mut p = Part::default();
    for t in kind.terms() {
        if let Some(id) = vocab.id(t) {
            p.set(id, 1.0);
        }
    }
    p
}

/// Keeps the first `MAX_PARTS - 1` parts and merges the rest into one.
fn cap_parts(parts: &mut Vec<Part>) -> bool {
    if parts.len() <= MAX_PARTS {
        return false;
    }
    let tail = parts.split_off(MAX_PARTS - 1);
    let mut merged = Part::default();
    for p in &tail {
        merged.max_with(p);
    }
    parts.push(merged);
    true
}

/// Builds both indexes in one bottom-up pass over the document.
pub fn build_indexes(doc: &PrxmlDocument) -> (PiIndex, KiIndex) {
    let vocab = Vocabulary::from_terms(
        doc.nodes()
            .iter()
            .flat_map(|n| n.kind.terms().iter().cloned()),
    );
    let checksum = document_checksum(doc);

    let mut summaries: Vec<Option<Summary>> = (0..doc.len()).map(|_| None).collect();
    let mut profiles = BTreeMap::new();
    for node in doc.nodes().iter().rev() {
        let mut take = |c: NodeId| summaries[c.0].take().expect("child summarized first");
        let summary = match &node.kind {
            NodeKind::Mux => {
                let mut parts = Vec::new();
                let mut marginals = Part::default();
                let mut approx = false;
                for &c in &node.children {
                    let lambda = doc.node(c).edge_prob;
                    let s = take(c);
                    approx |= s.approx;
                    parts.extend(
                        s.parts
                            .iter()
                            .map(|p| op2_child_ind(&Part::default(), p, lambda)),
                    );
                    for (k, v) in s.marginals.iter() {
                        marginals.set(k, marginals.get(k) + lambda * v);
                    }
                }
                // An empty branch is dominated by every other branch.
                parts.retain(|p| !p.is_empty());
                if parts.is_empty() {
                    parts.push(Part::default());
                }
                approx |= cap_parts(&mut parts);
                Summary {
                    parts,
                    marginals,
                    approx,
                }
            }
            _ => {
                let own = own_part(&node.kind, &vocab);
                let mut parts = vec![own.clone()];
                let mut marginals = own;
                let mut approx = false;
                for &c in &node.children {
                    let lambda = doc.node(c).edge_prob;
                    let s = take(c);
                    approx |= s.approx;
                    parts = parts
                        .iter()
                        .flat_map(|p| s.parts.iter().map(move |q| op2_child_ind(p, q, lambda)))
                        .collect();
                    approx |= cap_parts(&mut parts);
                    marginals = op2_child_ind(&marginals, &s.marginals, lambda);
                }
                Summary {
                    parts,
                    marginals,
                    approx,
                }
            }
        };
        if node.kind.is_ordinary() && !summary.marginals.is_empty() {
            profiles.insert(
                node.dewey.clone(),
                NodeTermProfile {
                    node: node.dewey.clone(),
                    path_prob: node.path_prob,
                    parts: summary.parts.clone(),
                    marginals: summary.marginals.clone(),
                    approx: summary.approx,
                },
            );
        }
        summaries[node.id.0] = Some(summary);
    }

    let mut pi_lists = vec![Vec::new(); vocab.len()];
    for (d, p) in &profiles {
        for k in p.marginals.terms() {
            pi_lists[k as usize].push(d.clone());
        }
    }
    let mut ki_lists = vec![Vec::new(); vocab.len()];
    for node in doc.nodes() {
        for t in node.kind.terms() {
            if let Some(k) = vocab.id(t) {
                ki_lists[k as usize].push(node.dewey.clone());
            }
        }
    }
    for l in &mut ki_lists {
        l.sort();
        l.dedup();
    }
    let pi = PiIndex {
        checksum,
        vocab: vocab.clone(),
        profiles,
        per_term: pi_lists,
    };
    let ki = KiIndex {
        checksum,
        vocab,
        per_term: ki_lists,
    };
    (pi, ki)
}
