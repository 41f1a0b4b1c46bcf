//! Promotion operators that fold keyword probabilities from children into
//! their parent while the index is built.

use super::{Part, TermId};
use crate::error::{Error, Result};
use crate::prxml::PROB_EPS;

fn ind_merge(a: &Part, la: f64, b: &Part, lb: f64) -> Part {
    let mut out = Part::default();
    let keys: std::collections::BTreeSet<TermId> = a.terms().chain(b.terms()).collect();
    for k in keys {
        let pa = la * a.get(k);
        let pb = lb * b.get(k);
        out.set(k, 1.0 - (1.0 - pa) * (1.0 - pb));
    }
    out
}

/// Two independent siblings promoted into their common parent.
pub fn op1_sibling_ind(p1: &Part, lambda1: f64, p2: &Part, lambda2: f64) -> Part {
    ind_merge(p1, lambda1, p2, lambda2)
}

/// An independent child promoted into a parent that already holds `parent`.
pub fn op2_child_ind(parent: &Part, child: &Part, lambda2: f64) -> Part {
    ind_merge(parent, 1.0, child, lambda2)
}

/// Mutually exclusive siblings: one part per sibling, in sibling order.
pub fn op3_sibling_mux(siblings: &[(Part, f64)]) -> Result<Vec<Part>> {
    let sum: f64 = siblings.iter().map(|(_, l)| l).sum();
    if sum > 1.0 + PROB_EPS {
        return Err(Error::MuxSumExceeded {
            node: "MUX siblings".into(),
            sum,
        });
    }
    Ok(siblings
        .iter()
        .map(|(p, l)| op2_child_ind(&Part::default(), p, *l))
        .collect())
}

/// An independent sibling combined with every part of a multi-part sibling.
pub fn combine_ind_with_parts(ind_part: &Part, lambda1: f64, multi: &[Part], lambda2: f64) -> Vec<Part> {
    multi
        .iter()
        .map(|p| op1_sibling_ind(ind_part, lambda1, p, lambda2))
        .collect()
}

/// Two multi-part independent siblings: pairwise combination across both part
/// sets, `a`-major.
pub fn cross_combine(a: &[Part], lambda1: f64, b: &[Part], lambda2: f64) -> Vec<Part> {
    a.iter()
        .flat_map(|pa| b.iter().map(move |pb| op1_sibling_ind(pa, lambda1, pb, lambda2)))
        .collect()
}
