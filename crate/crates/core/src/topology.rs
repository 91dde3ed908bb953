//! Directed network topologies and their shortest-path routing matrices.
//!
//! A topology is a strongly connected directed graph with weighted links.
//! Routing follows minimum-weight paths with a deterministic tie rule, and
//! the routing matrix `G` has one row per ordered node pair and one column
//! per link, with `G[i, j] = 1` when path `i` traverses link `j`. Metrics
//! that add along a route (delay, log of one minus loss) then satisfy
//! `y = G x` for per-link values `x`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One directed link. `id`s are dense (0..link_count) and index both
/// covariance entries and routing-matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: usize,
    /// Node index of the sending end.
    pub source: usize,
    /// Node index of the receiving end.
    pub target: usize,
    /// Routing weight; strictly positive.
    pub weight: f64,
}

/// A named directed graph. Construction validates every structural
/// invariant, so a `Topology` value is always well formed.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    name: String,
    nodes: Vec<String>,
    links: Vec<Link>,
}

impl Topology {
    /// Validates and builds a topology.
    ///
    /// Requirements: at least one node, unique node names, link ids equal to
    /// their position, endpoints in range, no self-loops, at most one link
    /// per ordered node pair, finite positive weights.
    pub fn new(name: impl Into<String>, nodes: Vec<String>, links: Vec<Link>) -> Result<Self> {
        let name = name.into();
        if nodes.is_empty() {
            return Err(Error::InvalidInput("topology has no nodes".into()));
        }
        let mut seen = HashSet::new();
        for node in &nodes {
            if node.is_empty() {
                return Err(Error::InvalidInput("empty node name".into()));
            }
            if !seen.insert(node.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate node name {node:?}")));
            }
        }
        let mut pairs = HashSet::new();
        for (idx, link) in links.iter().enumerate() {
            if link.id != idx {
                return Err(Error::InvalidInput(format!(
                    "link ids must be consecutive from 0: position {idx} has id {}",
                    link.id
                )));
            }
            if link.source >= nodes.len() || link.target >= nodes.len() {
                return Err(Error::InvalidInput(format!(
                    "link {idx} references a node index out of range"
                )));
            }
            if link.source == link.target {
                return Err(Error::InvalidInput(format!("link {idx} is a self-loop")));
            }
            if !(link.weight.is_finite() && link.weight > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "link {idx} weight must be finite and positive, got {}",
                    link.weight
                )));
            }
            if !pairs.insert((link.source, link.target)) {
                return Err(Error::InvalidInput(format!(
                    "duplicate link for node pair ({}, {})",
                    nodes[link.source], nodes[link.target]
                )));
            }
        }
        Ok(Topology { name, nodes, links })
    }

    /// Builds from (source, target, weight) triples, creating nodes in order
    /// of first appearance and numbering links by position.
    pub fn from_edge_list(name: impl Into<String>, edges: &[(&str, &str, f64)]) -> Result<Self> {
        let mut nodes: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |name: &str, nodes: &mut Vec<String>| -> usize {
            if let Some(&i) = index.get(name) {
                return i;
            }
            let i = nodes.len();
            nodes.push(name.to_string());
            index.insert(name.to_string(), i);
            i
        };
        let mut links = Vec::with_capacity(edges.len());
        for (id, &(src, dst, w)) in edges.iter().enumerate() {
            let source = intern(src, &mut nodes);
            let target = intern(dst, &mut nodes);
            links.push(Link {
                id,
                source,
                target,
                weight: w,
            });
        }
        Topology::new(name, nodes, links)
    }

    /// Parses the plain-text edge-list format. The header line
    /// `link_id,source,target,igp_weight` is required; ids must be
    /// consecutive from 0 in file order.
    pub fn from_csv_str(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::ParseError {
            line: 1,
            message: "empty topology file".into(),
        })?;
        if header.trim() != "link_id,source,target,igp_weight" {
            return Err(Error::ParseError {
                line: 1,
                message: format!(
                    "expected header 'link_id,source,target,igp_weight', got {:?}",
                    header.trim()
                ),
            });
        }
        let mut edges: Vec<(String, String, f64)> = Vec::new();
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::ParseError {
                    line: line_no,
                    message: format!("expected 4 fields, got {}", fields.len()),
                });
            }
            let id: usize = fields[0].trim().parse().map_err(|_| Error::ParseError {
                line: line_no,
                message: format!("bad link_id {:?}", fields[0]),
            })?;
            if id != edges.len() {
                return Err(Error::ParseError {
                    line: line_no,
                    message: format!("link ids must be consecutive from 0, got {id}"),
                });
            }
            if fields[1].trim().is_empty() {
                return Err(Error::MissingValue {
                    line: line_no,
                    column: 2,
                });
            }
            if fields[2].trim().is_empty() {
                return Err(Error::MissingValue {
                    line: line_no,
                    column: 3,
                });
            }
            let weight: f64 = fields[3].trim().parse().map_err(|_| Error::ParseError {
                line: line_no,
                message: format!("bad igp_weight {:?}", fields[3]),
            })?;
            edges.push((
                fields[1].trim().to_string(),
                fields[2].trim().to_string(),
                weight,
            ));
        }
        let borrowed: Vec<(&str, &str, f64)> = edges
            .iter()
            .map(|(s, t, w)| (s.as_str(), t.as_str(), *w))
            .collect();
        Topology::from_edge_list(name, &borrowed)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "topology".into());
        Topology::from_csv_str(name, &text)
    }

    /// Serializes back to the edge-list format accepted by `from_csv_str`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("link_id,source,target,igp_weight\n");
        for link in &self.links {
            out.push_str(&format!(
                "{},{},{},{}\n",
                link.id, self.nodes[link.source], self.nodes[link.target], link.weight
            ));
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    /// Link id for the directed pair of node names, if present.
    pub fn link_between(&self, source: &str, target: &str) -> Option<usize> {
        let s = self.node_index(source)?;
        let t = self.node_index(target)?;
        self.links
            .iter()
            .find(|l| l.source == s && l.target == t)
            .map(|l| l.id)
    }

    /// True when every node can reach every other node along directed links.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.nodes.len();
        if n <= 1 {
            return true;
        }
        let mut forward = vec![Vec::new(); n];
        let mut backward = vec![Vec::new(); n];
        for link in &self.links {
            forward[link.source].push(link.target);
            backward[link.target].push(link.source);
        }
        let reach = |adj: &Vec<Vec<usize>>| -> usize {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut count = 1;
            while let Some(u) = queue.pop_front() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        count += 1;
                        queue.push_back(v);
                    }
                }
            }
            count
        };
        reach(&forward) == n && reach(&backward) == n
    }
}

/// Returns a copy of the topology without the given links. Remaining links
/// are renumbered consecutively in their original order; nodes are kept even
/// if they lose all links.
pub fn delete_links(topology: &Topology, link_ids: &[usize]) -> Result<Topology> {
    let mut drop = HashSet::new();
    for &id in link_ids {
        if id >= topology.links.len() {
            return Err(Error::UnknownLink { id });
        }
        drop.insert(id);
    }
    let links: Vec<Link> = topology
        .links
        .iter()
        .filter(|l| !drop.contains(&l.id))
        .enumerate()
        .map(|(new_id, l)| Link { id: new_id, ..*l })
        .collect();
    let name = if link_ids.is_empty() {
        topology.name.clone()
    } else {
        let mut ids: Vec<usize> = drop.iter().copied().collect();
        ids.sort_unstable();
        let tags: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
        format!("{}-del{}", topology.name, tags.join("-"))
    };
    Topology::new(name, topology.nodes.clone(), links)
}

/// One routed source-destination path: endpoints plus the link ids walked,
/// in traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRoute {
    pub source: usize,
    pub target: usize,
    pub links: Vec<usize>,
}

/// The 0/1 path-by-link incidence matrix for a topology, with its path
/// bookkeeping. Rows follow the canonical path order: ascending source node
/// index, then ascending destination node index.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingMatrix {
    entries: DMatrix<f64>,
    paths: Vec<PathRoute>,
    node_names: Vec<String>,
    n_links: usize,
}

impl RoutingMatrix {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn n_links(&self) -> usize {
        self.n_links
    }

    /// The incidence matrix itself; entries are exactly 0.0 or 1.0.
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn paths(&self) -> &[PathRoute] {
        &self.paths
    }

    pub fn path(&self, path_id: usize) -> &PathRoute {
        &self.paths[path_id]
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn source_name(&self, path_id: usize) -> &str {
        &self.node_names[self.paths[path_id].source]
    }

    pub fn target_name(&self, path_id: usize) -> &str {
        &self.node_names[self.paths[path_id].target]
    }

    /// Row index of the path from `source` to `target`, by node name.
    pub fn path_id(&self, source: &str, target: &str) -> Option<usize> {
        let s = self.node_names.iter().position(|n| n == source)?;
        let t = self.node_names.iter().position(|n| n == target)?;
        self.paths
            .iter()
            .position(|p| p.source == s && p.target == t)
    }

    /// Row indices of every path that originates at the named node, in
    /// canonical order.
    pub fn origin_paths(&self, source: &str) -> Vec<usize> {
        match self.node_names.iter().position(|n| n == source) {
            None => Vec::new(),
            Some(s) => self
                .paths
                .iter()
                .enumerate()
                .filter(|(_, p)| p.source == s)
                .map(|(i, _)| i)
                .collect(),
        }
    }

    /// Submatrix keeping only the given rows, in the order supplied.
    pub fn restrict(&self, rows: &[usize]) -> Result<RoutingMatrix> {
        let mut seen = HashSet::new();
        for &r in rows {
            if r >= self.paths.len() {
                return Err(Error::InvalidInput(format!(
                    "path id {r} out of range ({} paths)",
                    self.paths.len()
                )));
            }
            if !seen.insert(r) {
                return Err(Error::InvalidInput(format!("duplicate path id {r}")));
            }
        }
        let mut entries = DMatrix::zeros(rows.len(), self.n_links);
        for (i, &r) in rows.iter().enumerate() {
            entries.set_row(i, &self.entries.row(r));
        }
        Ok(RoutingMatrix {
            entries,
            paths: rows.iter().map(|&r| self.paths[r].clone()).collect(),
            node_names: self.node_names.clone(),
            n_links: self.n_links,
        })
    }
}

/// Per-path metric values `y = G x` for per-link values `x`.
pub fn path_values(matrix: &RoutingMatrix, x: &[f64]) -> Result<DVector<f64>> {
    if x.len() != matrix.n_links {
        return Err(Error::DimensionMismatch {
            context: "link value vector",
            expected: matrix.n_links,
            got: x.len(),
        });
    }
    Ok(matrix.entries() * DVector::from_column_slice(x))
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    dist: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the BinaryHeap pops the smallest distance first; ties
        // broken by node id for determinism.
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-weight routes for every ordered node pair, keyed by
/// (source index, destination index), each as the traversed link ids.
///
/// Among equal-weight routes the one whose node-id sequence is
/// lexicographically smallest wins, independent of insertion order, so
/// rebuilding a topology always reproduces the same routes.
pub fn shortest_paths(topology: &Topology) -> Result<BTreeMap<(usize, usize), Vec<usize>>> {
    let n = topology.node_count();
    let mut out_adj: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n];
    let mut in_adj: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); n];
    for link in topology.links() {
        out_adj[link.source].push((link.id, link.target, link.weight));
        in_adj[link.target].push((link.id, link.source, link.weight));
    }
    // Smaller node ids first so the greedy walk below can take the first
    // tight candidate it sees.
    for adj in out_adj.iter_mut() {
        adj.sort_by_key(|&(_, to, _)| to);
    }

    let mut routes = BTreeMap::new();
    for dest in 0..n {
        // Distances to `dest`, from a Dijkstra pass over reversed links.
        let mut dist = vec![f64::INFINITY; n];
        dist[dest] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem {
            dist: 0.0,
            node: dest,
        });
        while let Some(HeapItem { dist: d, node }) = heap.pop() {
            if d > dist[node] {
                continue;
            }
            for &(_, from, w) in &in_adj[node] {
                let cand = d + w;
                if cand < dist[from] {
                    dist[from] = cand;
                    heap.push(HeapItem {
                        dist: cand,
                        node: from,
                    });
                }
            }
        }

        for src in 0..n {
            if src == dest {
                continue;
            }
            if !dist[src].is_finite() {
                return Err(Error::NotStronglyConnected(format!(
                    "no route from {} to {}",
                    topology.nodes()[src],
                    topology.nodes()[dest]
                )));
            }
            // Walk greedily toward `dest`, always taking the smallest next
            // node id among links that stay on a minimum-weight route. Every
            // tight link leads to a node that still reaches `dest` optimally,
            // so the walk cannot dead-end, and weights are positive, so it
            // cannot cycle.
            let mut links = Vec::new();
            let mut cur = src;
            while cur != dest {
                let tol = 1e-9 * dist[cur].max(1.0);
                let step = out_adj[cur]
                    .iter()
                    .find(|&&(_, to, w)| w + dist[to] <= dist[cur] + tol);
                match step {
                    Some(&(link_id, to, _)) => {
                        links.push(link_id);
                        cur = to;
                    }
                    None => {
                        return Err(Error::NumericalFailure(format!(
                            "shortest-path walk stalled at node {}",
                            topology.nodes()[cur]
                        )))
                    }
                }
                if links.len() > n {
                    return Err(Error::NumericalFailure(
                        "shortest-path walk exceeded node count".into(),
                    ));
                }
            }
            routes.insert((src, dest), links);
        }
    }
    Ok(routes)
}

/// Builds the routing matrix over all ordered node pairs.
pub fn build_routing_matrix(topology: &Topology) -> Result<RoutingMatrix> {
    let routes = shortest_paths(topology)?;
    let n_links = topology.link_count();
    let mut paths = Vec::with_capacity(routes.len());
    let mut entries = DMatrix::zeros(routes.len(), n_links);
    for (row, ((src, dest), links)) in routes.into_iter().enumerate() {
        for &l in &links {
            entries[(row, l)] = 1.0;
        }
        paths.push(PathRoute {
            source: src,
            target: dest,
            links,
        });
    }
    Ok(RoutingMatrix {
        entries,
        paths,
        node_names: topology.nodes().to_vec(),
        n_links,
    })
}
