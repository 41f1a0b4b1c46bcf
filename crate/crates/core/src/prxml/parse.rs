//! Reader and writer for the PrXML dialect.
//!
//! Ordinary nodes are plain elements whose tag is the label and whose direct
//! text is tokenized into terms. Distributional nodes are `<dist type="IND">`
//! or `<dist type="MUX">`. Any non-root element may carry `prob="p"`, the
//! conditional probability of the edge from its parent (default 1).

use std::fmt::Write as _;

use super::document::{BuilderNode, DistKind, DocumentBuilder, NodeKind, PrxmlDocument};
use crate::error::{Error, Result};

const DIST_TAG: &str = "dist";

pub fn parse_prxml(text: &str) -> Result<PrxmlDocument> {
    let xml = roxmltree::Document::parse(text).map_err(|e| Error::Xml(e.to_string()))?;
    let root = xml.root_element();
    if root.tag_name().name() == DIST_TAG {
        return Err(Error::InvalidDocument("root must be an ordinary element".into()));
    }
    if root.attribute("prob").is_some() {
        return Err(Error::InvalidDocument("root element must not carry prob".into()));
    }
    let mut builder = DocumentBuilder::new(root.tag_name().name(), &direct_text(root));
    for child in root.children().filter(|c| c.is_element()) {
        add_element(&mut builder, BuilderNode::ROOT, child)?;
    }
    builder.finish()
}

fn direct_text(node: roxmltree::Node<'_, '_>) -> String {
    let mut s = String::new();
    for t in node.children().filter(|c| c.is_text()) {
        s.push(' ');
        s.push_str(t.text().unwrap_or(""));
    }
    s
}

fn parse_prob(node: roxmltree::Node<'_, '_>) -> Result<f64> {
    match node.attribute("prob") {
        None => Ok(1.0),
        Some(raw) => {
            let p: f64 = raw.trim().parse().map_err(|_| {
                Error::Xml(format!("bad prob attribute {raw:?} on <{}>", node.tag_name().name()))
            })?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::ProbabilityOutOfRange {
                    node: format!("<{}>", node.tag_name().name()),
                    prob: p,
                });
            }
            Ok(p)
        }
    }
}

fn add_element(
    builder: &mut DocumentBuilder,
    parent: BuilderNode,
    node: roxmltree::Node<'_, '_>,
) -> Result<()> {
    let prob = parse_prob(node)?;
    let me = if node.tag_name().name() == DIST_TAG {
        let kind = match node.attribute("type") {
            Some("IND") => DistKind::Ind,
            Some("MUX") => DistKind::Mux,
            other => {
                return Err(Error::InvalidDocument(format!(
                    "dist element needs type=\"IND\" or type=\"MUX\", got {other:?}"
                )))
            }
        };
        if !direct_text(node).trim().is_empty() {
            return Err(Error::InvalidDocument(
                "distributional nodes cannot carry text".into(),
            ));
        }
        builder.dist(parent, kind, prob)
    } else {
        builder.ordinary(parent, node.tag_name().name(), &direct_text(node), prob)
    };
    for child in node.children().filter(|c| c.is_element()) {
        add_element(builder, me, child)?;
    }
    Ok(())
}

/// Writes the document in the dialect accepted by [`parse_prxml`]. Output is a
/// pure function of the document.
pub fn serialize_prxml(doc: &PrxmlDocument) -> String {
    let mut out = String::new();
    write_node(doc, doc.root().id, 0, &mut out);
    out
}

fn write_node(doc: &PrxmlDocument, id: super::NodeId, indent: usize, out: &mut String) {
    let node = doc.node(id);
    let pad = "  ".repeat(indent);
    let (tag, type_attr) = match &node.kind {
        NodeKind::Ordinary { label, .. } => (label.as_str(), None),
        NodeKind::Ind => (DIST_TAG, Some("IND")),
        NodeKind::Mux => (DIST_TAG, Some("MUX")),
    };
    let _ = write!(out, "{pad}<{tag}");
    if let Some(t) = type_attr {
        let _ = write!(out, " type=\"{t}\"");
    }
    if node.parent.is_some() && node.edge_prob < 1.0 {
        let _ = write!(out, " prob=\"{}\"", node.edge_prob);
    }
    let text = escape(&node.kind.terms().join(" "));
    if node.children.is_empty() {
        if text.is_empty() {
            out.push_str("/>\n");
        } else {
            let _ = writeln!(out, ">{text}</{tag}>");
        }
        return;
    }
    out.push('>');
    out.push_str(&text);
    out.push('\n');
    for &c in &node.children {
        write_node(doc, c, indent + 1, out);
    }
    let _ = writeln!(out, "{pad}</{tag}>");
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
