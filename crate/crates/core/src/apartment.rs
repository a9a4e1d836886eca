//! The greeting scenario: a four-room apartment, four people and one robot.

use crate::kgraph::{Edge, KnowledgeGraph, Node};
use crate::sim::WorldMap;

pub const HOUSE: &str = "granny_house";
pub const ROBOT: &str = "rb1";
pub const ROOMS: [&str; 4] = ["entrance", "bathroom", "bedroom", "living_room"];
/// `(person, room)` placement of the initial graph.
pub const PEOPLE: [(&str, &str); 4] = [
    ("miguel", "entrance"),
    ("fran", "bathroom"),
    ("angel", "bedroom"),
    ("vicente", "living_room"),
];

pub fn person_ids() -> Vec<String> {
    let mut ids: Vec<String> = PEOPLE.iter().map(|(p, _)| p.to_string()).collect();
    ids.sort();
    ids
}

/// Initial knowledge graph with room waypoints taken from the default map.
pub fn initial_graph() -> KnowledgeGraph {
    graph_for_map(&WorldMap::default(), "entrance")
}

/// Initial knowledge graph with the robot placed in `robot_room`. Rooms carry
/// their waypoint from `map` when it has one.
pub fn graph_for_map(map: &WorldMap, robot_room: &str) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    g.add_node(Node::new(HOUSE, "house").with("name", "GrannyHouse"))
        .expect("fresh graph");
    for room in ROOMS {
        let mut node = Node::new(room, "room");
        if let Some(p) = map.waypoints.get(room) {
            node = node.with("waypoint", *p);
        }
        g.add_node(node).expect("unique room");
        g.add_edge(Edge::new(room, "in", HOUSE)).expect("room in house");
    }
    for (person, room) in PEOPLE {
        g.add_node(Node::new(person, "person")).expect("unique person");
        g.add_edge(Edge::new(person, "at", room)).expect("person placed");
    }
    g.add_node(Node::new(ROBOT, "robot")).expect("unique robot");
    g.add_edge(Edge::new(ROBOT, "at", robot_room)).expect("robot placed");
    g
}
