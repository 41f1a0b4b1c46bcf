//! Probabilistic XML data model: documents with ordinary, IND and MUX nodes,
//! Dewey labelling, the text dialect, and a synthetic document generator.

mod dewey;
mod document;
pub mod fixtures;
mod generate;
mod parse;

pub use dewey::DeweyCode;
pub use document::{
    tokenize, BuilderNode, DistKind, DocumentBuilder, KindCounts, NodeId, NodeKind,
    PrxmlDocument, PrxmlNode, PROB_EPS,
};
pub use generate::{generate_prxml, random_det_tree, KindRatio, TreeShape};
pub use parse::{parse_prxml, serialize_prxml};
