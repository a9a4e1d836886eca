//! World state generation: knowledge items rendered from the graph, an exact
//! cosine-similarity vector index over them, and goal-driven retrieval.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kgraph::{Edge, KnowledgeGraph, Node, Properties, Triple};
use crate::llm::{cosine, Embedder, Embedding, LlmError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldStateError {
    #[error("embedding failed: {0}")]
    EmbeddingFailed(String),
    #[error("retrieval needs k >= 1")]
    InvalidK,
}

impl From<LlmError> for WorldStateError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::EmbeddingFailed(msg) => WorldStateError::EmbeddingFailed(msg),
            other => WorldStateError::EmbeddingFailed(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Node(String),
    Edge(Triple),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeItem {
    pub text: String,
    pub origin: Origin,
}

fn properties_suffix(props: &Properties) -> String {
    if props.is_empty() {
        return String::new();
    }
    let pairs: Vec<String> = props.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!(" ({})", pairs.join(", "))
}

pub fn render_node(node: &Node) -> String {
    format!(
        "{} is a {}{}",
        node.id,
        node.node_class,
        properties_suffix(&node.properties)
    )
}

pub fn render_edge(edge: &Edge) -> String {
    format!(
        "{} {} {}{}",
        edge.source,
        edge.relation,
        edge.target,
        properties_suffix(&edge.properties)
    )
}

/// One item per node, then one per edge, each in lexicographic order.
pub fn render_items(graph: &KnowledgeGraph) -> Vec<KnowledgeItem> {
    let nodes = graph.nodes().map(|n| KnowledgeItem {
        text: render_node(n),
        origin: Origin::Node(n.id.clone()),
    });
    let edges = graph.edges().map(|e| KnowledgeItem {
        text: render_edge(e),
        origin: Origin::Edge(e.triple()),
    });
    nodes.chain(edges).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub item: KnowledgeItem,
    pub vector: Embedding,
}

/// In-memory exact-scan vector store. Entries are a multiset: duplicate
/// texts are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub item: KnowledgeItem,
    pub score: f64,
}

impl VectorIndex {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }
}

pub fn build_index(
    items: Vec<KnowledgeItem>,
    embedder: &dyn Embedder,
) -> Result<VectorIndex, WorldStateError> {
    let mut dimension = embedder.dimension();
    let mut entries = Vec::with_capacity(items.len());
    for item in items {
        let raw = embedder.embed(&item.text)?;
        if raw.values.iter().any(|v| !v.is_finite()) {
            return Err(WorldStateError::EmbeddingFailed(format!(
                "non-finite embedding for {:?}",
                item.text
            )));
        }
        if dimension == 0 {
            dimension = raw.values.len();
        }
        if raw.values.len() != dimension {
            return Err(WorldStateError::EmbeddingFailed(format!(
                "expected dimension {dimension}, got {} for {:?}",
                raw.values.len(),
                item.text
            )));
        }
        let vector = raw.normalized().ok_or_else(|| {
            WorldStateError::EmbeddingFailed(format!("zero embedding for {:?}", item.text))
        })?;
        entries.push(IndexEntry { item, vector });
    }
    Ok(VectorIndex { dimension, entries })
}

fn ranking(a: &Scored, b: &Scored) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.item.text.cmp(&b.item.text))
}

/// Top-`k` entries by cosine similarity to `query`; ties go to the
/// lexicographically smaller text.
pub fn retrieve(
    index: &VectorIndex,
    query: &str,
    k: usize,
    embedder: &dyn Embedder,
) -> Result<Vec<Scored>, WorldStateError> {
    if k == 0 {
        return Err(WorldStateError::InvalidK);
    }
    let q = embedder.embed(query)?;
    if !index.is_empty() && q.values.len() != index.dimension {
        return Err(WorldStateError::EmbeddingFailed(format!(
            "query dimension {} differs from index dimension {}",
            q.values.len(),
            index.dimension
        )));
    }
    let mut scored: Vec<Scored> = index
        .entries
        .iter()
        .map(|e| Scored {
            item: e.item.clone(),
            score: cosine(&q, &e.vector),
        })
        .collect();
    scored.sort_by(ranking);
    scored.truncate(k);
    Ok(scored)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Retrieved(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub items: Vec<String>,
    pub mode: Mode,
}

impl WorldState {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            writeln!(f, "{item}")?;
        }
        Ok(())
    }
}

/// Builds world states and keeps the vector index of the last graph
/// revision it saw, so repeated retrievals over an unchanged graph do not
/// re-embed every item.
#[derive(Debug, Default)]
pub struct WorldStateBuilder {
    cached: Option<(u64, Vec<String>, VectorIndex)>,
}

impl WorldStateBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn build(
        &mut self,
        graph: &KnowledgeGraph,
        query: &str,
        mode: Mode,
        embedder: &dyn Embedder,
    ) -> Result<WorldState, WorldStateError> {
        let items = render_items(graph);
        let k = match mode {
            Mode::Full => {
                return Ok(WorldState {
                    items: items.into_iter().map(|i| i.text).collect(),
                    mode,
                })
            }
            Mode::Retrieved(0) => return Err(WorldStateError::InvalidK),
            Mode::Retrieved(k) => k,
        };
        let texts: Vec<String> = items.iter().map(|i| i.text.clone()).collect();
        let hit = matches!(&self.cached, Some((rev, t, _)) if *rev == graph.revision() && *t == texts);
        if !hit {
            let index = build_index(items, embedder)?;
            self.cached = Some((graph.revision(), texts, index));
        }
        let (_, _, index) = self.cached.as_ref().expect("index cached above");
        let retrieved = retrieve(index, query, k, embedder)?;
        Ok(WorldState {
            items: retrieved.into_iter().map(|s| s.item.text).collect(),
            mode,
        })
    }
}

/// Uncached world state construction.
pub fn build_world_state(
    graph: &KnowledgeGraph,
    query: &str,
    mode: Mode,
    embedder: &dyn Embedder,
) -> Result<WorldState, WorldStateError> {
    WorldStateBuilder::new().build(graph, query, mode, embedder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apartment;
    use crate::llm::BagOfWordsEmbedder;
    use proptest::prelude::*;

    #[test]
    fn item_forms() {
        assert_eq!(render_node(&Node::new("rb1", "robot")), "rb1 is a robot");
        assert_eq!(render_edge(&Edge::new("angel", "at", "bedroom")), "angel at bedroom");
        let n = Node::new("bedroom", "room").with("waypoint", [4.0, 3.0]).with("area", 12.5);
        assert_eq!(render_node(&n), "bedroom is a room (area=12.5, waypoint=[4, 3])");
    }

    #[test]
    fn apartment_items() {
        let items = render_items(&apartment::initial_graph());
        assert_eq!(items.len(), 19);
        let texts: Vec<&str> = items.iter().map(|i| i.text.as_str()).collect();
        assert!(texts.contains(&"angel at bedroom"));
        assert!(texts.contains(&"rb1 at entrance"));
        assert!(texts.contains(&"granny_house is a house (name=GrannyHouse)"));
    }

    #[test]
    fn index_sizes() {
        let e = BagOfWordsEmbedder::default();
        let items = render_items(&apartment::initial_graph());
        assert_eq!(build_index(items.clone(), &e).unwrap().len(), 19);
        assert!(build_index(Vec::new(), &e).unwrap().is_empty());
        let mut dup = items[..2].to_vec();
        dup.push(items[0].clone());
        assert_eq!(build_index(dup, &e).unwrap().len(), 3);
    }

    #[test]
    fn retrieval_clamps_and_rejects_zero_k() {
        let e = BagOfWordsEmbedder::default();
        let index = build_index(render_items(&apartment::initial_graph()), &e).unwrap();
        assert_eq!(retrieve(&index, "greet angel", 10, &e).unwrap().len(), 10);
        assert_eq!(retrieve(&index, "greet angel", 25, &e).unwrap().len(), 19);
        assert_eq!(retrieve(&index, "x", 0, &e), Err(WorldStateError::InvalidK));
    }

    /// Independent scan: score every item, keep those scoring strictly above
    /// the k-th best score.
    fn brute_force_must_include(graph: &KnowledgeGraph, query: &str, k: usize) -> Vec<String> {
        let e = BagOfWordsEmbedder::default();
        let q = e.embed(query).unwrap();
        let mut scores: Vec<(f64, String)> = render_items(graph)
            .into_iter()
            .map(|i| (cosine(&q, &e.embed(&i.text).unwrap()), i.text))
            .collect();
        scores.sort_by(|a, b| b.0.total_cmp(&a.0));
        let kth = scores[k - 1].0;
        scores.into_iter().filter(|(s, _)| *s > kth).map(|(_, t)| t).collect()
    }

    #[test]
    fn greet_query_retrieves_person_items() {
        let g = apartment::initial_graph();
        let e = BagOfWordsEmbedder::default();
        let ws = build_world_state(&g, "greet angel", Mode::Retrieved(10), &e).unwrap();
        assert_eq!(ws.len(), 10);
        for expected in ["angel is a person", "angel at bedroom"] {
            assert!(ws.items.iter().any(|i| i == expected), "{expected} missing: {ws}");
        }
        for must in brute_force_must_include(&g, "greet angel", 10) {
            assert!(ws.items.contains(&must));
        }
    }

    #[test]
    fn full_and_empty_modes() {
        let e = BagOfWordsEmbedder::default();
        let g = apartment::initial_graph();
        assert_eq!(build_world_state(&g, "q", Mode::Full, &e).unwrap().len(), 19);
        let empty = KnowledgeGraph::new();
        assert!(build_world_state(&empty, "q", Mode::Full, &e).unwrap().is_empty());
        assert!(build_world_state(&empty, "q", Mode::Retrieved(10), &e).unwrap().is_empty());
    }

    #[test]
    fn cached_builder_tracks_revisions() {
        let e = BagOfWordsEmbedder::default();
        let mut g = apartment::initial_graph();
        let mut b = WorldStateBuilder::new();
        let first = b.build(&g, "greet angel", Mode::Retrieved(19), &e).unwrap();
        assert_eq!(first, b.build(&g, "greet angel", Mode::Retrieved(19), &e).unwrap());
        g.add_edge(Edge::new("rb1", "greeted", "angel")).unwrap();
        let after = b.build(&g, "greet angel", Mode::Retrieved(20), &e).unwrap();
        assert!(after.items.contains(&"rb1 greeted angel".to_string()));
    }

    fn arb_graph() -> impl Strategy<Value = KnowledgeGraph> {
        (
            proptest::collection::vec(("[a-d]{1,3}", 0usize..3), 0..10),
            proptest::collection::vec((0usize..10, 0usize..3, 0usize..10), 0..20),
        )
            .prop_map(|(nodes, edges)| {
                let classes = ["room", "person", "robot"];
                let rels = ["at", "in", "near"];
                let mut g = KnowledgeGraph::new();
                for (i, (name, c)) in nodes.iter().enumerate() {
                    let mut n = Node::new(format!("{name}{i}"), classes[*c]);
                    if i % 3 == 0 {
                        n = n.with("x", i as f64);
                    }
                    let _ = g.add_node(n);
                }
                let ids: Vec<String> = g.nodes().map(|n| n.id.clone()).collect();
                if !ids.is_empty() {
                    for (a, r, b) in edges {
                        let _ = g.add_edge(Edge::new(
                            ids[a % ids.len()].clone(),
                            rels[r],
                            ids[b % ids.len()].clone(),
                        ));
                    }
                }
                g
            })
    }

    proptest! {
        #[test]
        fn rendering_counts_and_origins(g in arb_graph()) {
            let items = render_items(&g);
            prop_assert_eq!(items.len(), g.node_count() + g.edge_count());
            let origins: std::collections::HashSet<&Origin> = items.iter().map(|i| &i.origin).collect();
            prop_assert_eq!(origins.len(), items.len());
            for i in &items {
                match &i.origin {
                    Origin::Node(id) => prop_assert!(g.contains_node(id)),
                    Origin::Edge(t) => {
                        prop_assert!(g.contains_edge(t));
                        prop_assert!(g.contains_node(&t.source) && g.contains_node(&t.target));
                    }
                }
            }
        }

        #[test]
        fn retrieval_is_sorted_subset(g in arb_graph(), query in "[a-d ]{0,8}", k in 1usize..25) {
            let e = BagOfWordsEmbedder::default();
            let items = render_items(&g);
            let index = build_index(items.clone(), &e).unwrap();
            for entry in index.entries() {
                prop_assert!((entry.vector.norm() - 1.0).abs() < 1e-6);
            }
            let out = retrieve(&index, &query, k, &e).unwrap();
            prop_assert_eq!(out.len(), k.min(items.len()));
            for w in out.windows(2) {
                prop_assert!(w[0].score >= w[1].score);
            }
            for s in &out {
                prop_assert!(items.contains(&s.item));
            }
            let all = retrieve(&index, &query, items.len().max(1), &e).unwrap();
            let mut got: Vec<String> = all.into_iter().map(|s| s.item.text).collect();
            let mut want: Vec<String> = items.into_iter().map(|i| i.text).collect();
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn world_state_is_deterministic(g in arb_graph(), k in 1usize..12) {
            let e = BagOfWordsEmbedder::default();
            let a = build_world_state(&g, "greet a1", Mode::Retrieved(k), &e).unwrap();
            let b = build_world_state(&g, "greet a1", Mode::Retrieved(k), &e).unwrap();
            prop_assert!(a.len() <= k);
            prop_assert_eq!(a.to_string(), b.to_string());
        }
    }
}
