//! In-memory typed property graph holding the robot's world knowledge.
//!
//! Nodes carry a class and a property map; edges are `(source, relation,
//! target)` triples with their own property map. Iteration order is always
//! lexicographic so that anything rendered from a graph is reproducible.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Graph handle shared between the planning layer, the executor and oracle backends.
pub type SharedGraph = Arc<RwLock<KnowledgeGraph>>;

pub fn shared(graph: KnowledgeGraph) -> SharedGraph {
    Arc::new(RwLock::new(graph))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("node `{0}` already exists")]
    DuplicateId(String),
    #[error("edge ({0}) already exists")]
    DuplicateEdge(Triple),
    #[error("edge ({triple}) references missing node `{missing}`")]
    DanglingEndpoint { triple: Triple, missing: String },
    #[error("edge ({0}) not found")]
    NotFound(Triple),
    #[error("invalid identifier {0:?}: must be non-empty and contain no whitespace")]
    InvalidIdentifier(String),
    #[error("property `{0}` is not finite")]
    NonFinite(String),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("json: {0}")]
    Json(String),
    #[error("io: {0}")]
    Io(String),
}

/// A property value attached to a node or an edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PropertyValue {
    Bool(bool),
    Number(f64),
    Text(String),
    Point2([f64; 2]),
    Point3([f64; 3]),
}

impl PropertyValue {
    pub fn is_finite(&self) -> bool {
        match self {
            PropertyValue::Number(n) => n.is_finite(),
            PropertyValue::Point2(p) => p.iter().all(|c| c.is_finite()),
            PropertyValue::Point3(p) => p.iter().all(|c| c.is_finite()),
            _ => true,
        }
    }

    pub fn as_point2(&self) -> Option<[f64; 2]> {
        match self {
            PropertyValue::Point2(p) => Some(*p),
            _ => None,
        }
    }
}

impl fmt::Display for PropertyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyValue::Bool(b) => write!(f, "{b}"),
            PropertyValue::Number(n) => write!(f, "{n}"),
            PropertyValue::Text(s) => f.write_str(s),
            PropertyValue::Point2([x, y]) => write!(f, "[{x}, {y}]"),
            PropertyValue::Point3([x, y, z]) => write!(f, "[{x}, {y}, {z}]"),
        }
    }
}

impl From<&str> for PropertyValue {
    fn from(s: &str) -> Self {
        PropertyValue::Text(s.to_string())
    }
}

impl From<f64> for PropertyValue {
    fn from(n: f64) -> Self {
        PropertyValue::Number(n)
    }
}

impl From<bool> for PropertyValue {
    fn from(b: bool) -> Self {
        PropertyValue::Bool(b)
    }
}

impl From<[f64; 2]> for PropertyValue {
    fn from(p: [f64; 2]) -> Self {
        PropertyValue::Point2(p)
    }
}

pub type Properties = BTreeMap<String, PropertyValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    #[serde(rename = "class")]
    pub node_class: String,
    #[serde(default)]
    pub properties: Properties,
}

impl Node {
    pub fn new(id: impl Into<String>, node_class: impl Into<String>) -> Self {
        Node {
            id: id.into(),
            node_class: node_class.into(),
            properties: Properties::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<PropertyValue>) -> Self {
        self.properties.insert(key.into(), value.into());
        self
    }
}

/// Identity of an edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub source: String,
    pub relation: String,
    pub target: String,
}

impl Triple {
    pub fn new(
        source: impl Into<String>,
        relation: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        Triple {
            source: source.into(),
            relation: relation.into(),
            target: target.into(),
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.source, self.relation, self.target)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub relation: String,
    pub target: String,
    #[serde(default)]
    pub properties: Properties,
}

impl Edge {
    pub fn new(
        source: impl Into<String>,
        relation: impl Into<String>,
        target: impl Into<String>,
    ) -> Self {
        Edge {
            source: source.into(),
            relation: relation.into(),
            target: target.into(),
            properties: Properties::new(),
        }
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<PropertyValue>) -> Self {
        self.properties.insert(key.into(), value.into());
        self
    }

    pub fn triple(&self) -> Triple {
        Triple::new(&self.source, &self.relation, &self.target)
    }
}

/// `(source?, relation?, target?)` query; `None` is a wildcard.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Pattern {
    pub source: Option<String>,
    pub relation: Option<String>,
    pub target: Option<String>,
}

impl Pattern {
    pub fn any() -> Self {
        Pattern::default()
    }

    pub fn source(mut self, s: impl Into<String>) -> Self {
        self.source = Some(s.into());
        self
    }

    pub fn relation(mut self, r: impl Into<String>) -> Self {
        self.relation = Some(r.into());
        self
    }

    pub fn target(mut self, t: impl Into<String>) -> Self {
        self.target = Some(t.into());
        self
    }

    fn accepts(&self, t: &Triple) -> bool {
        self.source.as_deref().is_none_or(|s| s == t.source)
            && self.relation.as_deref().is_none_or(|r| r == t.relation)
            && self.target.as_deref().is_none_or(|x| x == t.target)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<Triple, Edge>,
    revision: u64,
}

fn check_identifier(s: &str) -> Result<(), GraphError> {
    if s.is_empty() || s.chars().any(char::is_whitespace) {
        return Err(GraphError::InvalidIdentifier(s.to_string()));
    }
    Ok(())
}

fn check_properties(props: &Properties) -> Result<(), GraphError> {
    for (k, v) in props {
        check_identifier(k)?;
        if !v.is_finite() {
            return Err(GraphError::NonFinite(k.clone()));
        }
    }
    Ok(())
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes in lexicographic id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    /// Edges in lexicographic `(source, relation, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn edge(&self, triple: &Triple) -> Option<&Edge> {
        self.edges.get(triple)
    }

    pub fn contains_edge(&self, triple: &Triple) -> bool {
        self.edges.contains_key(triple)
    }

    pub fn nodes_of_class<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a Node> + 'a {
        self.nodes.values().filter(move |n| n.node_class == class)
    }

    pub fn add_node(&mut self, node: Node) -> Result<(), GraphError> {
        check_identifier(&node.id)?;
        check_identifier(&node.node_class)?;
        check_properties(&node.properties)?;
        if self.nodes.contains_key(&node.id) {
            return Err(GraphError::DuplicateId(node.id));
        }
        self.nodes.insert(node.id.clone(), node);
        self.revision += 1;
        Ok(())
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        check_identifier(&edge.relation)?;
        check_properties(&edge.properties)?;
        let triple = edge.triple();
        for endpoint in [&edge.source, &edge.target] {
            if !self.nodes.contains_key(endpoint.as_str()) {
                return Err(GraphError::DanglingEndpoint {
                    missing: endpoint.clone(),
                    triple,
                });
            }
        }
        if self.edges.contains_key(&triple) {
            return Err(GraphError::DuplicateEdge(triple));
        }
        self.edges.insert(triple, edge);
        self.revision += 1;
        Ok(())
    }

    pub fn remove_edge(&mut self, source: &str, relation: &str, target: &str) -> Result<Edge, GraphError> {
        let triple = Triple::new(source, relation, target);
        match self.edges.remove(&triple) {
            Some(edge) => {
                self.revision += 1;
                Ok(edge)
            }
            None => Err(GraphError::NotFound(triple)),
        }
    }

    /// All edges matching `pattern`, ordered by `(source, relation, target)`.
    pub fn matches(&self, pattern: &Pattern) -> Vec<Triple> {
        // A concrete source narrows the scan to one contiguous key range.
        match &pattern.source {
            Some(src) => self
                .edges
                .range(Triple::new(src.as_str(), "", "")..)
                .take_while(|(t, _)| &t.source == src)
                .filter(|(t, _)| pattern.accepts(t))
                .map(|(t, _)| t.clone())
                .collect(),
            None => self
                .edges
                .keys()
                .filter(|t| pattern.accepts(t))
                .cloned()
                .collect(),
        }
    }

    /// Targets of `(source, relation, ?)`.
    pub fn targets(&self, source: &str, relation: &str) -> Vec<String> {
        self.matches(&Pattern::any().source(source).relation(relation))
            .into_iter()
            .map(|t| t.target)
            .collect()
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.values().cloned().collect(),
        }
    }

    pub fn from_document(doc: GraphDocument) -> Result<Self, GraphError> {
        let mut graph = KnowledgeGraph::new();
        for node in doc.nodes {
            graph.add_node(node)?;
        }
        for edge in doc.edges {
            graph.add_edge(edge)?;
        }
        Ok(graph)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        Self::from_document(doc)
    }

    /// Line-oriented form: `node <id> <class> [<json props>]` and
    /// `edge <source> <relation> <target> [<json props>]`. Blank lines and
    /// `#` comments are ignored.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let props = |p: &Properties| {
            if p.is_empty() {
                String::new()
            } else {
                format!(" {}", serde_json::to_string(p).expect("properties serialize"))
            }
        };
        for n in self.nodes.values() {
            out.push_str(&format!("node {} {}{}\n", n.id, n.node_class, props(&n.properties)));
        }
        for e in self.edges.values() {
            out.push_str(&format!(
                "edge {} {} {}{}\n",
                e.source,
                e.relation,
                e.target,
                props(&e.properties)
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut graph = KnowledgeGraph::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fail = |msg: String| GraphError::Format { line, msg };
            let mut rest = trimmed;
            let mut words = Vec::new();
            while words.len() < 4 && !rest.is_empty() && !rest.starts_with('{') {
                let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
                words.push(&rest[..end]);
                rest = rest[end..].trim_start();
            }
            let properties: Properties = if rest.is_empty() {
                Properties::new()
            } else {
                serde_json::from_str(rest).map_err(|e| fail(format!("bad properties: {e}")))?
            };
            let located = |e: GraphError| fail(e.to_string());
            match words.as_slice() {
                ["node", id, class] => graph
                    .add_node(Node {
                        id: id.to_string(),
                        node_class: class.to_string(),
                        properties,
                    })
                    .map_err(located)?,
                ["edge", s, r, t] => graph
                    .add_edge(Edge {
                        source: s.to_string(),
                        relation: r.to_string(),
                        target: t.to_string(),
                        properties,
                    })
                    .map_err(located)?,
                _ => return Err(fail(format!("unrecognized record `{trimmed}`"))),
            }
        }
        Ok(graph)
    }

    /// Loads a graph file, choosing the format from the content.
    pub fn load(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(e.to_string()))?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_text(&text)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}
