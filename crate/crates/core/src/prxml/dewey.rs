use std::fmt;
use std::str::FromStr;

/// Hierarchical node label. The root has no components; the i-th child of a
/// node extends its parent's code with `i` (1-based).
///
/// The derived ordering is lexicographic on the component sequence, which is
/// exactly document (pre-)order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DeweyCode(Vec<u32>);

impl DeweyCode {
    pub fn root() -> Self {
        DeweyCode(Vec::new())
    }

    pub fn from_components(components: Vec<u32>) -> Self {
        debug_assert!(components.iter().all(|&c| c > 0));
        DeweyCode(components)
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, ordinal: u32) -> Self {
        let mut c = self.0.clone();
        c.push(ordinal);
        DeweyCode(c)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(DeweyCode(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn is_ancestor_or_self_of(&self, other: &DeweyCode) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_ancestor_of(&self, other: &DeweyCode) -> bool {
        self.0.len() < other.0.len() && self.is_ancestor_or_self_of(other)
    }
}

/// Rendered as `0` for the root and `0.c1.c2...` below it.
impl fmt::Display for DeweyCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("0")?;
        for c in &self.0 {
            write!(f, ".{c}")?;
        }
        Ok(())
    }
}

impl FromStr for DeweyCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('.');
        if parts.next() != Some("0") {
            return Err(format!("Dewey code must start with 0: {s:?}"));
        }
        let components = parts
            .map(|p| match p.parse::<u32>() {
                Ok(0) | Err(_) => Err(format!("bad Dewey component {p:?} in {s:?}")),
                Ok(v) => Ok(v),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DeweyCode(components))
    }
}
