use std::collections::HashMap;

use super::{emit_and_kill, sort_results, Acc, Method, QueryOutcome, QueryPlan, QuasiResult};
use crate::error::Result;
use crate::pi_index::KiIndex;
use crate::prxml::{PrxmlDocument, PROB_EPS};

/// Scans the keyword lists once, building every keyword distribution
/// bottom-up and emitting each ordinary node whose remaining full-keyword
/// probability reaches `sigma`.
pub fn baseline_query(ki: &KiIndex, doc: &PrxmlDocument, q: &[String], sigma: f64) -> Result<QueryOutcome> {
    let plan = QueryPlan::new(ki, doc, q)?;
    let mut out = QueryOutcome::default();
    let mut accs: HashMap<_, Acc> = HashMap::new();
    for n in plan.pop_order(doc) {
        out.counters.popped += 1;
        let node = doc.node(n);
        let acc = accs
            .remove(&n)
            .unwrap_or_else(|| Acc::init(doc, n, plan.t, plan.own_mask(n)));
        let mut dist = acc.finish();
        if node.kind.is_ordinary() {
            let p = dist.full() * node.path_prob;
            if dist.full() > 0.0 && p >= sigma - PROB_EPS {
                let (p, killed) = emit_and_kill(&dist, node.path_prob, sigma)?;
                dist = killed;
                out.results.push(QuasiResult {
                    node: node.dewey.clone(),
                    prob: p,
                    method: Method::ExactBa,
                });
            }
        }
        if let Some(parent) = node.parent {
            let t = plan.t;
            let own = plan.own_mask(parent);
            accs.entry(parent)
                .or_insert_with(|| Acc::init(doc, parent, t, own))
                .absorb(&dist, node.edge_prob);
            out.counters.convolutions += 1;
        }
    }
    sort_results(&mut out.results);
    Ok(out)
}
