use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::document::{BuilderNode, DistKind, DocumentBuilder, NodeKind, PrxmlDocument};
use super::NodeId;

/// Relative weights of IND, MUX and ordinary placements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindRatio {
    pub ind: f64,
    pub mux: f64,
    pub ordinary: f64,
}

impl Default for KindRatio {
    fn default() -> Self {
        KindRatio {
            ind: 3.0,
            mux: 3.0,
            ordinary: 4.0,
        }
    }
}

impl FromStr for KindRatio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad ratio {s:?}: {e}")))
            .collect::<Result<_, _>>()?;
        match parts.as_slice() {
            &[ind, mux, ordinary] if ind > 0.0 && mux > 0.0 && ordinary > 0.0 => Ok(KindRatio {
                ind,
                mux,
                ordinary,
            }),
            _ => Err(format!("ratio must be three positive weights IND:MUX:ORD, got {s:?}")),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Draw {
    Ind,
    Mux,
    Ordinary,
}

impl KindRatio {
    fn draw(&self, rng: &mut ChaCha8Rng) -> Draw {
        let total = self.ind + self.mux + self.ordinary;
        let x = rng.gen::<f64>() * total;
        if x < self.ind {
            Draw::Ind
        } else if x < self.ind + self.mux {
            Draw::Mux
        } else {
            Draw::Ordinary
        }
    }
}

/// Probability with two decimals in [0.10, 0.99].
fn random_edge_prob(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(10..=99) as f64 / 100.0
}

/// `n` MUX branch probabilities with two decimals, each >= 0.01, summing to
/// at most 1.
fn random_mux_probs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![random_edge_prob(rng)];
    }
    if n > 100 {
        return vec![1.0 / n as f64; n];
    }
    let budget = rng.gen_range(50.max(n as u32)..=100);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=10) as f64).collect();
    let wsum: f64 = weights.iter().sum();
    let mut cents: Vec<u32> = weights
        .iter()
        .map(|w| ((w / wsum) * budget as f64).floor().max(1.0) as u32)
        .collect();
    while cents.iter().sum::<u32>() > 100 {
        let i = (0..n).max_by_key(|&i| cents[i]).unwrap();
        cents[i] -= 1;
    }
    cents.into_iter().map(|c| c as f64 / 100.0).collect()
}

/// Kinds of wrappers around one original child, innermost first.
fn draw_chain(rng: &mut ChaCha8Rng, ratio: &KindRatio) -> Vec<DistKind> {
    let mut chain = Vec::new();
    loop {
        match ratio.draw(rng) {
            Draw::Ordinary => return chain,
            Draw::Ind => chain.push(DistKind::Ind),
            Draw::Mux => chain.push(DistKind::Mux),
        }
    }
}

/// Turns a deterministic tree into a PrXML document.
///
/// Nodes are visited in pre-order. Each original child of a visited node is
/// either kept as a direct child or wrapped in a chain of new IND/MUX nodes,
/// with the chain length and kinds drawn from `ratio`. Adjacent children whose
/// outermost wrappers share a kind are grouped under one distributional node
/// half of the time. Children of IND nodes get a random edge probability;
/// children of a MUX node get random probabilities summing to at most 1.
/// Identical inputs and seed give an identical document.
pub fn generate_prxml(det: &PrxmlDocument, seed: u64, ratio: KindRatio) -> PrxmlDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = det.root();
    let mut builder = DocumentBuilder::new(root.kind.label(), &root.kind.terms().join(" "));
    expand(det, root.id, BuilderNode::ROOT, &mut builder, &mut rng, &ratio);
    builder
        .finish()
        .expect("generator only produces valid documents")
}

struct Planned {
    child: NodeId,
    /// Wrapper kinds below the shared outermost one, outermost first.
    inner: Vec<DistKind>,
}

fn expand(
    det: &PrxmlDocument,
    src: NodeId,
    dst: BuilderNode,
    b: &mut DocumentBuilder,
    rng: &mut ChaCha8Rng,
    ratio: &KindRatio,
) {
    // Groups of children sharing an outermost wrapper (None = direct child).
    let mut groups: Vec<(Option<DistKind>, Vec<Planned>)> = Vec::new();
    for &c in &det.node(src).children {
        let mut chain = draw_chain(rng, ratio);
        chain.reverse();
        let outer = if chain.is_empty() { None } else { Some(chain.remove(0)) };
        let planned = Planned { child: c, inner: chain };
        match (outer, groups.last_mut()) {
            (Some(k), Some((Some(prev), members))) if *prev == k && rng.gen_bool(0.5) => {
                members.push(planned)
            }
            _ => groups.push((outer, vec![planned])),
        }
    }
    for (outer, members) in groups {
        match outer {
            None => {
                for m in members {
                    let p = det.node(m.child).edge_prob;
                    place(det, m, dst, p, b, rng, ratio);
                }
            }
            Some(kind) => {
                let top = b.dist(dst, kind, 1.0);
                let probs = child_probs(kind, members.len(), rng);
                for (m, p) in members.into_iter().zip(probs) {
                    place(det, m, top, p, b, rng, ratio);
                }
            }
        }
    }
}

fn child_probs(kind: DistKind, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match kind {
        DistKind::Ind => (0..n).map(|_| random_edge_prob(rng)).collect(),
        DistKind::Mux => random_mux_probs(rng, n),
    }
}

fn place(
    det: &PrxmlDocument,
    m: Planned,
    parent: BuilderNode,
    prob: f64,
    b: &mut DocumentBuilder,
    rng: &mut ChaCha8Rng,
    ratio: &KindRatio,
) {
    let mut at = parent;
    let mut p = prob;
    for kind in m.inner {
        at = b.dist(at, kind, p);
        p = random_edge_prob(rng);
    }
    let node = det.node(m.child);
    let me = match &node.kind {
        NodeKind::Ordinary { label, terms } => b.ordinary(at, label, &terms.join(" "), p),
        NodeKind::Ind => b.dist(at, DistKind::Ind, p),
        NodeKind::Mux => b.dist(at, DistKind::Mux, p),
    };
    expand(det, m.child, me, b, rng, ratio);
}

/// Shape parameters for [`random_det_tree`].
#[derive(Debug, Clone, PartialEq)]
pub struct TreeShape {
    pub nodes: usize,
    pub vocabulary: Vec<String>,
    /// Probability that a node carries any terms.
    pub term_prob: f64,
    pub max_terms: usize,
}

impl TreeShape {
    pub fn new(nodes: usize, vocabulary: &[&str]) -> Self {
        TreeShape {
            nodes,
            vocabulary: vocabulary.iter().map(|s| s.to_string()).collect(),
            term_prob: 0.5,
            max_terms: 2,
        }
    }
}

/// Random ordinary-only tree. Parents are picked either uniformly among
/// earlier nodes or among the few most recent ones, which mixes bushy and
/// deep shapes.
pub fn random_det_tree(seed: u64, shape: &TreeShape) -> PrxmlDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.nodes.max(1);
    let mut parents = vec![0usize; n];
    for (i, parent) in parents.iter_mut().enumerate().skip(1) {
        *parent = if rng.gen_bool(0.5) {
            rng.gen_range(0..i)
        } else {
            rng.gen_range(i.saturating_sub(3)..i)
        };
    }
    let mut texts = Vec::with_capacity(n);
    for _ in 0..n {
        let mut words: Vec<&str> = Vec::new();
        if !shape.vocabulary.is_empty() && rng.gen_bool(shape.term_prob) {
            let k = rng.gen_range(1..=shape.max_terms.max(1));
            for _ in 0..k {
                let w = &shape.vocabulary[rng.gen_range(0..shape.vocabulary.len())];
                words.push(w);
            }
        }
        texts.push(words.join(" "));
    }
    let mut b = DocumentBuilder::new("n0", &texts[0]);
    let mut handles = vec![BuilderNode::ROOT; n];
    for i in 1..n {
        handles[i] = b.ordinary(handles[parents[i]], &format!("n{i}"), &texts[i], 1.0);
    }
    b.finish().expect("ordinary-only trees are valid")
}
