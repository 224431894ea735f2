use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::ids::{ArcId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    Corridor,
    PortApproach,
}

impl ArcKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArcKind::Corridor => "corridor",
            ArcKind::PortApproach => "port-approach",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub id: ArcId,
    pub from: NodeId,
    pub to: NodeId,
    /// Meters.
    pub length: f64,
    pub kind: ArcKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    Parse { line: usize, message: String },
    NoNodes,
    DuplicateNode { line: usize, node: NodeId },
    DuplicateArc { line: usize, arc: ArcId },
    DanglingEndpoint { arc: ArcId, node: NodeId },
    SelfLoop { arc: ArcId },
    InvalidLength { arc: ArcId, length: f64 },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::Parse { line, message } => write!(f, "line {line}: {message}"),
            GraphError::NoNodes => write!(f, "no nodes"),
            GraphError::DuplicateNode { line, node } => {
                write!(f, "line {line}: duplicate node id {node}")
            }
            GraphError::DuplicateArc { line, arc } => {
                write!(f, "line {line}: duplicate arc id {arc}")
            }
            GraphError::DanglingEndpoint { arc, node } => {
                write!(f, "arc {arc} references undeclared node {node}")
            }
            GraphError::SelfLoop { arc } => write!(f, "arc {arc} starts and ends at the same node"),
            GraphError::InvalidLength { arc, length } => {
                write!(f, "arc {arc} has non-positive length {length}")
            }
        }
    }
}

impl std::error::Error for GraphError {}

/// Directed transportation-floor graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficGraph {
    nodes: BTreeSet<NodeId>,
    arcs: BTreeMap<ArcId, Arc>,
    adjacency: BTreeMap<NodeId, Vec<ArcId>>,
}

impl TrafficGraph {
    /// Validates and builds a graph; arcs keep the order in which they are given
    /// only for duplicate detection, lookups are by id.
    pub fn new(nodes: Vec<NodeId>, arcs: Vec<Arc>) -> Result<Self, GraphError> {
        let mut builder = Builder::default();
        for (i, n) in nodes.into_iter().enumerate() {
            builder.add_node(i + 1, n)?;
        }
        for (i, a) in arcs.into_iter().enumerate() {
            builder.add_arc(i + 1, a)?;
        }
        builder.finish()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn contains_node(&self, node: &NodeId) -> bool {
        self.nodes.contains(node)
    }

    pub fn arc(&self, id: &ArcId) -> Option<&Arc> {
        self.arcs.get(id)
    }

    pub fn arcs(&self) -> impl Iterator<Item = &Arc> {
        self.arcs.values()
    }

    /// Outgoing arcs of `node`, sorted by id.
    pub fn outgoing(&self, node: &NodeId) -> impl Iterator<Item = &Arc> {
        self.adjacency
            .get(node)
            .into_iter()
            .flatten()
            .map(move |id| &self.arcs[id])
    }

    /// Emits the graph-spec grammar: nodes sorted, then arcs sorted by id.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&format!("node {n}\n"));
        }
        for a in self.arcs.values() {
            out.push_str(&format!("arc {} {} {} {}", a.id, a.from, a.to, a.length));
            if a.kind == ArcKind::PortApproach {
                out.push_str(" port-approach");
            }
            out.push('\n');
        }
        out
    }
}

impl FromStr for TrafficGraph {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        load_graph(s)
    }
}

/// Parses a graph-spec document:
///
/// ```text
/// # comment
/// node n1
/// node n2
/// arc a12 n1 n2 4.0
/// arc a21 n2 n1 4.0 port-approach
/// ```
pub fn load_graph(text: &str) -> Result<TrafficGraph, GraphError> {
    let mut builder = Builder::default();
    let mut seen_arc = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some((&keyword, args)) = tokens.split_first() else {
            continue;
        };
        let parse_err = |message: String| GraphError::Parse { line, message };
        match keyword {
            "node" => {
                if seen_arc {
                    return Err(parse_err("node declared after arcs".into()));
                }
                let [id] = args else {
                    return Err(parse_err(format!(
                        "expected `node <id>`, got {} argument(s)",
                        args.len()
                    )));
                };
                builder.add_node(line, NodeId::new(*id))?;
            }
            "arc" => {
                seen_arc = true;
                let (id, from, to, length, kind) = match args {
                    [id, from, to, length] => (id, from, to, length, ArcKind::Corridor),
                    [id, from, to, length, kind] => {
                        let kind = match *kind {
                            "corridor" => ArcKind::Corridor,
                            "port-approach" => ArcKind::PortApproach,
                            other => return Err(parse_err(format!("unknown arc kind '{other}'"))),
                        };
                        (id, from, to, length, kind)
                    }
                    _ => {
                        return Err(parse_err(format!(
                            "expected `arc <id> <from> <to> <length_m> [kind]`, got {} argument(s)",
                            args.len()
                        )))
                    }
                };
                let length: f64 = length
                    .parse()
                    .map_err(|_| parse_err(format!("invalid arc length '{length}'")))?;
                builder.add_arc(
                    line,
                    Arc {
                        id: ArcId::new(*id),
                        from: NodeId::new(*from),
                        to: NodeId::new(*to),
                        length,
                        kind,
                    },
                )?;
            }
            other => return Err(parse_err(format!("unknown directive '{other}'"))),
        }
    }
    builder.finish()
}

#[derive(Default)]
struct Builder {
    nodes: BTreeSet<NodeId>,
    arcs: BTreeMap<ArcId, Arc>,
}

impl Builder {
    fn add_node(&mut self, line: usize, node: NodeId) -> Result<(), GraphError> {
        if !self.nodes.insert(node.clone()) {
            return Err(GraphError::DuplicateNode { line, node });
        }
        Ok(())
    }

    fn add_arc(&mut self, line: usize, arc: Arc) -> Result<(), GraphError> {
        if self.arcs.contains_key(&arc.id) {
            return Err(GraphError::DuplicateArc { line, arc: arc.id });
        }
        if !(arc.length > 0.0 && arc.length.is_finite()) {
            return Err(GraphError::InvalidLength {
                arc: arc.id,
                length: arc.length,
            });
        }
        if arc.from == arc.to {
            return Err(GraphError::SelfLoop { arc: arc.id });
        }
        self.arcs.insert(arc.id.clone(), arc);
        Ok(())
    }

    fn finish(self) -> Result<TrafficGraph, GraphError> {
        if self.nodes.is_empty() {
            return Err(GraphError::NoNodes);
        }
        let mut adjacency: BTreeMap<NodeId, Vec<ArcId>> =
            self.nodes.iter().map(|n| (n.clone(), Vec::new())).collect();
        for arc in self.arcs.values() {
            for end in [&arc.from, &arc.to] {
                if !self.nodes.contains(end) {
                    return Err(GraphError::DanglingEndpoint {
                        arc: arc.id.clone(),
                        node: end.clone(),
                    });
                }
            }
            // arcs iterate in id order, so adjacency lists come out sorted
            adjacency
                .get_mut(&arc.from)
                .expect("endpoint checked")
                .push(arc.id.clone());
        }
        Ok(TrafficGraph {
            nodes: self.nodes,
            arcs: self.arcs,
            adjacency,
        })
    }
}
