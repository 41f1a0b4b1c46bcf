//! Lower and upper bounds on quasi-SLCA probabilities, derived from PI
//! profiles, plus the pruning predicates and post-emission updates.

use crate::pi_index::{NodeTermProfile, TermId};
use crate::prxml::{DeweyCode, PROB_EPS};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPair {
    pub node: DeweyCode,
    pub lb: f64,
    pub ub: f64,
}

impl BoundPair {
    pub fn new(node: DeweyCode, lb: f64, ub: f64) -> Self {
        let ub = ub.clamp(0.0, 1.0);
        BoundPair {
            node,
            lb: lb.clamp(0.0, ub),
            ub,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        BoundPair::new(self.node.clone(), self.lb * factor, self.ub * factor)
    }
}

/// Local bounds (conditional on the node existing).
///
/// With one part: product and minimum of the keyword probabilities. With
/// several parts a single part supplies both bounds: the one with the largest
/// minimum among parts holding every keyword, lowest index on ties. If no
/// part holds every keyword both bounds are 0.
pub fn compute_bounds(profile: &NodeTermProfile, q: &[TermId]) -> BoundPair {
    assert!(!q.is_empty(), "empty query");
    let node = profile.node.clone();
    let stats = |i: usize| {
        let part = &profile.parts[i];
        let prod: f64 = q.iter().map(|&k| part.get(k)).product();
        let min = q.iter().map(|&k| part.get(k)).fold(1.0, f64::min);
        (prod, min)
    };
    if profile.parts.len() == 1 {
        let (prod, min) = stats(0);
        return BoundPair::new(node, prod, min);
    }
    let mut best: Option<(f64, f64)> = None;
    for i in 0..profile.parts.len() {
        let (prod, min) = stats(i);
        if prod > 0.0 && best.is_none_or(|(_, m)| min > m) {
            best = Some((prod, min));
        }
    }
    match best {
        Some((prod, min)) => BoundPair::new(node, prod, min),
        None => BoundPair::new(node, 0.0, 0.0),
    }
}

/// [`compute_bounds`] scaled by the node's existence probability.
pub fn global_bounds(profile: &NodeTermProfile, q: &[TermId]) -> BoundPair {
    compute_bounds(profile, q).scaled(profile.path_prob)
}

/// Bounds used by the query engine.
///
/// The upper bound is the smallest keyword marginal times the existence
/// probability: the subtree must contain every keyword, so it cannot contain
/// all of them more often than it contains the rarest one. Part-based upper
/// bounds can fall below the true value once a node has several MUX parts
/// that each hold every keyword, so they are not used for pruning. The lower
/// bound is the part-based one, dropped to 0 when parts were merged.
pub fn query_bounds(profile: &NodeTermProfile, q: &[TermId]) -> BoundPair {
    let min_marginal = q
        .iter()
        .map(|&k| profile.marginals.get(k))
        .fold(1.0, f64::min);
    let ub = profile.path_prob * min_marginal;
    let lb = if profile.approx {
        0.0
    } else {
        global_bounds(profile, q).lb
    };
    BoundPair::new(profile.node.clone(), lb.min(ub), ub)
}

pub fn can_prune(global: &BoundPair, sigma: f64) -> bool {
    global.ub < sigma - PROB_EPS
}

pub fn can_emit(global: &BoundPair, sigma: f64, descendants_all_below: bool) -> bool {
    global.lb >= sigma - PROB_EPS && descendants_all_below
}

/// Upper bound after qualified descendants with probabilities `probs` were
/// emitted.
pub fn update_upper(ub: f64, probs: &[f64]) -> f64 {
    let keep: f64 = probs.iter().map(|p| 1.0 - p).product();
    (ub - 1.0 + keep).clamp(0.0, 1.0)
}

pub fn update_lower(lb: f64, probs: &[f64]) -> f64 {
    (lb - probs.iter().sum::<f64>()).clamp(0.0, 1.0)
}
