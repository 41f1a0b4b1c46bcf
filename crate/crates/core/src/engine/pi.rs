use std::collections::hash_map::Entry as Slot;
use std::collections::{HashMap, HashSet};

use super::{
    gauss_prob, sort_results, Acc, Decision, GaussParams, KeywordDistribution, Method,
    QueryOutcome, QueryPlan, QuasiResult, TraceEvent, UpdateStore,
};
use crate::bounds::{can_emit, can_prune, query_bounds, BoundPair};
use crate::error::Result;
use crate::pi_index::{KiIndex, PiIndex, TermId};
use crate::prxml::{NodeId, PrxmlDocument, PROB_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxParams {
    /// Share of keyword-bearing descendants computed exactly.
    pub select_fraction: f64,
    /// Required absolute accuracy of the normal CDF.
    pub quad_tol: f64,
}

impl Default for ApproxParams {
    fn default() -> Self {
        ApproxParams {
            select_fraction: 0.5,
            quad_tol: 1e-9,
        }
    }
}

/// Cached descendants of nodes still on the ancestor stack, in pop order.
#[derive(Debug, Clone)]
enum Entry {
    /// Popped but not computed.
    Pending(NodeId),
    /// Distribution known; the node's descendants were consumed.
    Summarized(NodeId, KeywordDistribution),
    /// Emitted by its lower bound; its descendants are kept for a later
    /// computation of the distribution.
    Deferred(NodeId, Vec<Entry>),
}

impl Entry {
    fn node(&self) -> NodeId {
        match self {
            Entry::Pending(n) | Entry::Summarized(n, _) | Entry::Deferred(n, _) => *n,
        }
    }
}

/// Which suffix entries take part in an approximate computation.
struct Selection {
    active: HashSet<NodeId>,
    masked: HashSet<NodeId>,
}

struct Run<'a> {
    doc: &'a PrxmlDocument,
    pi: &'a PiIndex,
    plan: QueryPlan,
    terms: Vec<TermId>,
    params: ApproxParams,
    store: UpdateStore,
    out: QueryOutcome,
}

/// Index-based evaluation. Each popped ordinary node is emitted on its lower
/// bound, pruned on its upper bound, or computed from its cached descendants
/// (exactly, or from a selected share of them in approximate mode).
pub fn pi_query(
    ki: &KiIndex,
    pi: &PiIndex,
    doc: &PrxmlDocument,
    q: &[String],
    sigma: f64,
    mode: Mode,
    params: &ApproxParams,
) -> Result<QueryOutcome> {
    let plan = QueryPlan::new(ki, doc, q)?;
    let Some(terms) = plan
        .keywords
        .iter()
        .map(|k| pi.vocab.id(k))
        .collect::<Option<Vec<_>>>()
    else {
        return Ok(QueryOutcome::default());
    };
    let order = plan.pop_order(doc);
    let mut run = Run {
        doc,
        pi,
        plan,
        terms,
        params: *params,
        store: UpdateStore::new(),
        out: QueryOutcome::default(),
    };
    let mut s2: Vec<Entry> = Vec::new();
    for n in order {
        run.out.counters.popped += 1;
        let node = doc.node(n);
        if !node.kind.is_ordinary() {
            s2.push(Entry::Pending(n));
            continue;
        }
        let b = run.bounds(n);
        let start = s2
            .iter()
            .rposition(|e| !doc.is_ancestor(n, e.node()))
            .map_or(0, |i| i + 1);
        // Every descendant has been decided by now: emitted ones are
        // accounted for in `b`, the rest are known to fall below sigma.
        let decision = if b.lb > 0.0 && can_emit(&b, sigma, true) {
            run.out.counters.bound_emits += 1;
            run.store.record(doc, n, b.lb, b.ub);
            run.emit(n, b.lb, Method::BoundEmit);
            let suffix = s2.split_off(start);
            s2.push(Entry::Deferred(n, suffix));
            Decision::BoundEmit
        } else if b.ub > 0.0 && !can_prune(&b, sigma) {
            run.out.counters.computed += 1;
            let suffix = s2.split_off(start);
            let (prob, mut dist, method) = match mode {
                Mode::Exact => run.exact(n, &suffix),
                Mode::Approx => run.approx(n, &suffix, b.ub),
            };
            let emitted = prob > 0.0 && prob >= sigma - PROB_EPS;
            if emitted {
                dist.kill_full();
                run.store.record(doc, n, prob, prob);
                run.emit(n, prob, method);
            }
            s2.push(Entry::Summarized(n, dist));
            Decision::Computed { prob, emitted }
        } else {
            run.out.counters.pruned += 1;
            s2.push(Entry::Pending(n));
            Decision::Pruned
        };
        run.out.trace.push(TraceEvent {
            node: node.dewey.clone(),
            lb: b.lb,
            ub: b.ub,
            decision,
        });
    }
    sort_results(&mut run.out.results);
    Ok(run.out)
}

impl Run<'_> {
    fn bounds(&mut self, n: NodeId) -> BoundPair {
        let d = &self.doc.node(n).dewey;
        if self.store.base(d).is_none() {
            let base = match self.pi.profile(d) {
                Some(p) => query_bounds(p, &self.terms),
                None => BoundPair::new(d.clone(), 0.0, 0.0),
            };
            self.store.set_base(base);
        }
        self.store.effective(self.doc, d).expect("base stored")
    }

    fn emit(&mut self, n: NodeId, prob: f64, method: Method) {
        self.out.results.push(QuasiResult {
            node: self.doc.node(n).dewey.clone(),
            prob,
            method,
        });
    }

    fn exact(&mut self, x: NodeId, suffix: &[Entry]) -> (f64, KeywordDistribution, Method) {
        let dist = self.replay(x, suffix, None);
        (dist.full() * self.doc.node(x).path_prob, dist, Method::ExactPi)
    }

    fn approx(&mut self, x: NodeId, suffix: &[Entry], ub: f64) -> (f64, KeywordDistribution, Method) {
        let mut candidates: Vec<(f64, NodeId)> = suffix
            .iter()
            .filter_map(|e| match e {
                Entry::Pending(m) if self.plan.own_mask(*m) != 0 => Some((self.weight(*m), *m)),
                _ => None,
            })
            .collect();
        let total = candidates.len();
        let take = (self.params.select_fraction * total as f64).ceil() as usize;
        let sigma2 = 1.0 - take as f64 / total.max(1) as f64;
        if total == 0 || sigma2 <= 0.0 {
            return self.exact(x, suffix);
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let selected: HashSet<NodeId> = candidates[..take].iter().map(|c| c.1).collect();

        let mut seeds: Vec<NodeId> = selected.iter().copied().collect();
        seeds.extend(
            suffix
                .iter()
                .filter(|e| !matches!(e, Entry::Pending(_)))
                .map(Entry::node),
        );
        let in_suffix: HashSet<NodeId> = suffix.iter().map(Entry::node).collect();
        let mut active = HashSet::new();
        for s in seeds {
            let mut at = Some(s);
            while let Some(a) = at {
                if !in_suffix.contains(&a) || !active.insert(a) {
                    break;
                }
                at = self.doc.node(a).parent;
            }
        }
        let masked = active
            .iter()
            .copied()
            .filter(|a| !selected.contains(a))
            .collect();
        let sel = Selection { active, masked };
        let dist = self.replay(x, suffix, Some(&sel));
        let mu = dist.full() * self.doc.node(x).path_prob;
        let prob = gauss_prob(&GaussParams {
            mu,
            sigma2,
            t: self.plan.t,
            ub_limit: ub,
        });
        (prob, dist, Method::GaussPi)
    }

    /// Largest single-keyword global probability of a node's subtree.
    fn weight(&self, n: NodeId) -> f64 {
        let d = &self.doc.node(n).dewey;
        self.pi.profile(d).map_or(0.0, |p| {
            let m = self
                .terms
                .iter()
                .map(|&k| p.marginals.get(k))
                .fold(0.0, f64::max);
            p.path_prob * m
        })
    }

    /// Distribution of `x` rebuilt from its cached descendants.
    fn replay(&mut self, x: NodeId, entries: &[Entry], sel: Option<&Selection>) -> KeywordDistribution {
        let t = self.plan.t;
        let mut accs: HashMap<NodeId, Acc> = HashMap::new();
        for e in entries {
            let (m, dist) = match e {
                Entry::Pending(m) => {
                    if sel.is_some_and(|s| !s.active.contains(m)) {
                        continue;
                    }
                    let acc = accs.remove(m).unwrap_or_else(|| self.init(*m, sel));
                    (*m, acc.finish())
                }
                Entry::Summarized(m, d) => (*m, d.clone()),
                Entry::Deferred(m, sub) => {
                    let mut d = self.replay(*m, sub, None);
                    d.kill_full();
                    (*m, d)
                }
            };
            let node = self.doc.node(m);
            let parent = node.parent.expect("cached nodes lie below the computed node");
            let acc = match accs.entry(parent) {
                Slot::Occupied(o) => o.into_mut(),
                Slot::Vacant(v) => v.insert(Acc::init(self.doc, parent, t, self.own(parent, sel))),
            };
            acc.absorb(&dist, node.edge_prob);
            self.out.counters.convolutions += 1;
        }
        let acc = accs
            .remove(&x)
            .unwrap_or_else(|| Acc::init(self.doc, x, t, self.plan.own_mask(x)));
        acc.finish()
    }

    fn own(&self, n: NodeId, sel: Option<&Selection>) -> u32 {
        if sel.is_some_and(|s| s.masked.contains(&n)) {
            0
        } else {
            self.plan.own_mask(n)
        }
    }

    fn init(&self, n: NodeId, sel: Option<&Selection>) -> Acc {
        Acc::init(self.doc, n, self.plan.t, self.own(n, sel))
    }
}
