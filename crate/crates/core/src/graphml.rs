//! Minimal GraphML writer for undirected weighted graphs with node attributes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::table::fmt_num;

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Double(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl AttrValue {
    fn type_name(&self) -> &'static str {
        match self {
            AttrValue::Double(_) => "double",
            AttrValue::Int(_) => "long",
            AttrValue::Bool(_) => "boolean",
            AttrValue::Text(_) => "string",
        }
    }

    fn render(&self) -> String {
        match self {
            AttrValue::Double(v) => fmt_num(*v),
            AttrValue::Int(v) => v.to_string(),
            AttrValue::Bool(v) => v.to_string(),
            AttrValue::Text(s) => escape(s),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
        .replace('\'', "&apos;")
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    attr_names: Vec<String>,
    nodes: Vec<(String, Vec<AttrValue>)>,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    pub fn new<S: Into<String>>(attr_names: impl IntoIterator<Item = S>) -> Self {
        Graph {
            attr_names: attr_names.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn add_node(&mut self, id: impl Into<String>, attrs: Vec<AttrValue>) {
        assert_eq!(attrs.len(), self.attr_names.len(), "attribute count mismatch");
        self.nodes.push((id.into(), attrs));
    }

    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) {
        self.edges.push((a, b, weight));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
        for (i, name) in self.attr_names.iter().enumerate() {
            let ty = self
                .nodes
                .first()
                .map(|(_, a)| a[i].type_name())
                .unwrap_or("string");
            let _ = writeln!(
                out,
                "  <key id=\"n{i}\" for=\"node\" attr.name=\"{}\" attr.type=\"{ty}\"/>",
                escape(name)
            );
        }
        out.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
        out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
        for (id, attrs) in &self.nodes {
            let _ = writeln!(out, "    <node id=\"{}\">", escape(id));
            for (i, a) in attrs.iter().enumerate() {
                let _ = writeln!(out, "      <data key=\"n{i}\">{}</data>", a.render());
            }
            out.push_str("    </node>\n");
        }
        for (a, b, w) in &self.edges {
            let _ = writeln!(
                out,
                "    <edge source=\"{}\" target=\"{}\"><data key=\"weight\">{}</data></edge>",
                escape(&self.nodes[*a].0),
                escape(&self.nodes[*b].0),
                fmt_num(*w)
            );
        }
        out.push_str("  </graph>\n</graphml>\n");
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_nodes_edges_and_escapes() {
        let mut g = Graph::new(["importance", "cluster"]);
        g.add_node("a&b", vec![AttrValue::Double(0.5), AttrValue::Int(1)]);
        g.add_node("c", vec![AttrValue::Double(0.25), AttrValue::Int(0)]);
        g.add_edge(0, 1, 0.125);
        let xml = g.render();
        assert!(xml.contains("attr.name=\"importance\" attr.type=\"double\""));
        assert!(xml.contains("<node id=\"a&amp;b\">"));
        assert!(xml.contains("source=\"a&amp;b\" target=\"c\"><data key=\"weight\">0.125</data>"));
    }
}
