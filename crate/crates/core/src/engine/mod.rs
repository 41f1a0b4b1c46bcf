//! Query evaluation: the baseline stack algorithm and the index-based
//! algorithm in exact and Gaussian-approximate modes.

mod baseline;
mod distribution;
mod gauss;
mod pi;
mod update;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::pi_index::KiIndex;
use crate::prxml::{DeweyCode, NodeId, NodeKind, PrxmlDocument};

pub use baseline::baseline_query;
pub use distribution::{
    combine_prob, emit_and_kill, KeywordDistribution, MuxAccumulator, Relation, MAX_KEYWORDS,
};
pub use gauss::{gauss_prob, phi, GaussParams};
pub use pi::{pi_query, ApproxParams, Mode};
pub use update::UpdateStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ExactBa,
    BoundEmit,
    ExactPi,
    GaussPi,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactBa => "exactBA",
            Method::BoundEmit => "boundEmit",
            Method::ExactPi => "exactPI",
            Method::GaussPi => "gaussPI",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiResult {
    pub node: DeweyCode,
    pub prob: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    /// Node distributions folded into a parent distribution.
    pub convolutions: u64,
    /// Nodes popped from the ancestor stack.
    pub popped: u64,
    pub pruned: u64,
    pub bound_emits: u64,
    /// Ordinary nodes whose distribution was computed on demand.
    pub computed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Decision {
    BoundEmit,
    Computed { prob: f64, emitted: bool },
    Pruned,
}

/// One decision on an ordinary node, in pop order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub node: DeweyCode,
    pub lb: f64,
    pub ub: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryOutcome {
    /// Sorted by Dewey code.
    pub results: Vec<QuasiResult>,
    pub counters: Counters,
    pub trace: Vec<TraceEvent>,
}

impl QueryOutcome {
    pub fn nodes(&self) -> Vec<DeweyCode> {
        self.results.iter().map(|r| r.node.clone()).collect()
    }
}

/// Query keywords resolved against a document.
pub(crate) struct QueryPlan {
    pub t: usize,
    pub keywords: Vec<String>,
    /// Keyword-bearing nodes in document order, or empty when a keyword does
    /// not occur at all.
    pub hits: Vec<NodeId>,
    own: HashMap<NodeId, u32>,
}

impl QueryPlan {
    pub fn new(ki: &KiIndex, doc: &PrxmlDocument, q: &[String]) -> Result<Self> {
        let mut keywords: Vec<String> = q.iter().map(|k| k.trim().to_lowercase()).collect();
        let mut seen = std::collections::HashSet::new();
        keywords.retain(|k| seen.insert(k.clone()));
        if keywords.is_empty() || keywords.len() > MAX_KEYWORDS {
            return Err(Error::QuerySize {
                got: keywords.len(),
                max: MAX_KEYWORDS,
            });
        }
        let mut own: HashMap<NodeId, u32> = HashMap::new();
        let mut missing = false;
        for (i, k) in keywords.iter().enumerate() {
            let list = ki.list(k);
            missing |= list.is_empty();
            for d in list {
                *own.entry(doc.lookup(d)?).or_default() |= 1 << i;
            }
        }
        let mut hits: Vec<NodeId> = if missing {
            Vec::new()
        } else {
            own.keys().copied().collect()
        };
        hits.sort();
        Ok(QueryPlan {
            t: keywords.len(),
            keywords,
            hits,
            own,
        })
    }

    pub fn own_mask(&self, n: NodeId) -> u32 {
        self.own.get(&n).copied().unwrap_or(0)
    }

    /// Pop order of the ancestor stack: every keyword node and all of its
    /// ancestors, children before parents, siblings in document order.
    pub fn pop_order(&self, doc: &PrxmlDocument) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = Vec::new();
        for &v in &self.hits {
            while let Some(&top) = stack.last() {
                if doc.is_ancestor(top, v) {
                    break;
                }
                out.push(stack.pop().unwrap());
            }
            let mut path = Vec::new();
            let mut at = Some(v);
            while let Some(a) = at {
                if stack.last() == Some(&a) {
                    break;
                }
                path.push(a);
                at = doc.node(a).parent;
            }
            stack.extend(path.into_iter().rev());
        }
        while let Some(n) = stack.pop() {
            out.push(n);
        }
        out
    }
}

/// Distribution of a node under construction.
pub(crate) enum Acc {
    Dist(KeywordDistribution),
    Mux(MuxAccumulator),
}

impl Acc {
    pub fn init(doc: &PrxmlDocument, n: NodeId, t: usize, own_mask: u32) -> Self {
        match doc.node(n).kind {
            NodeKind::Mux => Acc::Mux(MuxAccumulator::new(t)),
            NodeKind::Ind => Acc::Dist(KeywordDistribution::empty(t)),
            NodeKind::Ordinary { .. } => Acc::Dist(KeywordDistribution::point(t, own_mask)),
        }
    }

    pub fn absorb(&mut self, child: &KeywordDistribution, lambda: f64) {
        match self {
            Acc::Dist(d) => *d = combine_prob(child, lambda, d, Relation::Ind),
            Acc::Mux(m) => m.add(child, lambda),
        }
    }

    pub fn finish(self) -> KeywordDistribution {
        match self {
            Acc::Dist(d) => d,
            Acc::Mux(m) => m.finish(),
        }
    }
}

fn sort_results(results: &mut [QuasiResult]) {
    results.sort_by(|a, b| a.node.cmp(&b.node));
}
