//! Keyword distributions over subsets of the query.

use crate::error::{Error, Result};
use crate::prxml::PROB_EPS;

/// Largest supported query.
pub const MAX_KEYWORDS: usize = 12;

/// Distribution of which query keywords a subtree contains, conditional on
/// its root existing. Cell `S` (a bitmask over query positions) holds the
/// probability that the subtree contains exactly the keywords in `S` and no
/// emitted result. `dead` holds the probability that it contains an emitted
/// result.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordDistribution {
    cells: Vec<f64>,
    dead: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ind,
    MuxBranch,
}

impl KeywordDistribution {
    /// All mass on the keyword set `mask`.
    pub fn point(t: usize, mask: u32) -> Self {
        assert!(t <= MAX_KEYWORDS, "query too large");
        let mut cells = vec![0.0; 1 << t];
        cells[mask as usize] = 1.0;
        KeywordDistribution { cells, dead: 0.0 }
    }

    pub fn empty(t: usize) -> Self {
        Self::point(t, 0)
    }

    fn zero(t: usize) -> Self {
        KeywordDistribution {
            cells: vec![0.0; 1 << t],
            dead: 0.0,
        }
    }

    pub fn keywords(&self) -> usize {
        self.cells.len().trailing_zeros() as usize
    }

    pub fn full_mask(&self) -> u32 {
        (self.cells.len() - 1) as u32
    }

    pub fn cell(&self, mask: u32) -> f64 {
        self.cells[mask as usize]
    }

    /// Probability that the subtree contains every keyword and no emitted
    /// result.
    pub fn full(&self) -> f64 {
        self.cells[self.cells.len() - 1]
    }

    pub fn dead(&self) -> f64 {
        self.dead
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum::<f64>() + self.dead
    }

    /// The distribution seen from a parent when the edge has probability
    /// `lambda`: with probability `1 - lambda` nothing is contributed.
    pub fn lift(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        out.cells.iter_mut().for_each(|c| *c *= lambda);
        out.dead *= lambda;
        out.cells[0] += 1.0 - lambda;
        out
    }

    /// Union of two independent subtrees.
    pub fn combine_ind(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cells.len(), other.cells.len());
        let mut out = Self::zero(self.keywords());
        for (a, &pa) in self.cells.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for (b, &pb) in other.cells.iter().enumerate() {
                if pb != 0.0 {
                    out.cells[a | b] += pa * pb;
                }
            }
        }
        out.dead = self.dead + other.dead - self.dead * other.dead;
        out.clean();
        out
    }

    fn add_scaled(&mut self, other: &Self, lambda: f64) {
        for (c, o) in self.cells.iter_mut().zip(&other.cells) {
            *c += lambda * o;
        }
        self.dead += lambda * other.dead;
    }

    /// Marks the worlds where the subtree holds every keyword as claimed by
    /// an emitted result.
    pub fn kill_full(&mut self) {
        let i = self.cells.len() - 1;
        self.dead += self.cells[i];
        self.cells[i] = 0.0;
    }

    fn clean(&mut self) {
        for c in &mut self.cells {
            if *c < 0.0 {
                *c = 0.0;
            }
        }
        self.dead = self.dead.clamp(0.0, 1.0);
    }
}

/// Folds `child` (reached over an edge of probability `lambda`) into
/// `parent`. For `MuxBranch`, `parent` is the running sum of a MUX node's
/// alternatives; see [`MuxAccumulator`].
pub fn combine_prob(
    child: &KeywordDistribution,
    lambda: f64,
    parent: &KeywordDistribution,
    relation: Relation,
) -> KeywordDistribution {
    match relation {
        Relation::Ind => parent.combine_ind(&child.lift(lambda)),
        Relation::MuxBranch => {
            let mut out = parent.clone();
            out.add_scaled(child, lambda);
            out
        }
    }
}

/// Exclusive alternatives of one MUX node.
#[derive(Debug, Clone)]
pub struct MuxAccumulator {
    sum: KeywordDistribution,
    lambda: f64,
}

impl MuxAccumulator {
    pub fn new(t: usize) -> Self {
        MuxAccumulator {
            sum: KeywordDistribution::zero(t),
            lambda: 0.0,
        }
    }

    pub fn add(&mut self, child: &KeywordDistribution, lambda: f64) {
        self.sum = combine_prob(child, lambda, &self.sum, Relation::MuxBranch);
        self.lambda += lambda;
    }

    /// The MUX node's distribution: no branch is chosen with the remaining
    /// probability.
    pub fn finish(mut self) -> KeywordDistribution {
        self.sum.cells[0] += (1.0 - self.lambda).max(0.0);
        self.sum.clean();
        self.sum
    }
}

/// Emits the node owning `dist`: returns its global probability and the
/// distribution it passes upward.
pub fn emit_and_kill(
    dist: &KeywordDistribution,
    path_prob: f64,
    sigma: f64,
) -> Result<(f64, KeywordDistribution)> {
    let p = dist.full() * path_prob;
    if dist.full() <= 0.0 || p < sigma - PROB_EPS {
        return Err(Error::Emission(format!(
            "probability {p} does not reach threshold {sigma}"
        )));
    }
    let mut out = dist.clone();
    out.kill_full();
    Ok((p, out))
}
