//! Pixel-adjacency graphs built from skeleton images.
//!
//! Every skeleton pixel with at least one 8-neighbour in the skeleton becomes
//! a node; every 8-adjacent pair of such pixels becomes an edge. Node ids
//! follow row-major pixel order.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::imaging::{BinaryImage, RgbImage};
use crate::io::write_atomic;
use crate::skeleton::SkeletonImage;

pub const RED: [u8; 3] = [255, 0, 0];
pub const GREEN: [u8; 3] = [0, 255, 0];
pub const YELLOW: [u8; 3] = [255, 255, 0];
pub const WHITE: [u8; 3] = [255, 255, 255];
pub const BLACK: [u8; 3] = [0, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub id: usize,
    /// `(row, col)` in pixels.
    pub coord: (usize, usize),
    pub degree: usize,
}

/// Undirected simple graph over skeleton pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonGraph {
    dims: (usize, usize),
    nodes: Vec<Node>,
    edges: Vec<(usize, usize)>,
}

impl SkeletonGraph {
    /// Validates and assembles a graph. Edges are normalized to `u < v`
    /// and sorted; degrees must match edge incidence.
    pub fn from_parts(
        dims: (usize, usize),
        mut nodes: Vec<Node>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        nodes.sort_by_key(|n| n.id);
        if nodes.iter().enumerate().any(|(i, n)| n.id != i) {
            return Err(Error::Invalid(
                "node ids must be exactly 0..n, each once".into(),
            ));
        }
        let mut norm: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u == v {
                return Err(Error::Invalid(format!("self-loop at node {u}")));
            }
            if u.max(v) >= nodes.len() {
                return Err(Error::Invalid(format!("edge ({u}, {v}) references a missing node")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Invalid("duplicate edge".into()));
        }
        let mut degree = vec![0usize; nodes.len()];
        for &(u, v) in &norm {
            degree[u] += 1;
            degree[v] += 1;
        }
        if let Some(n) = nodes.iter().find(|n| n.degree != degree[n.id]) {
            return Err(Error::Invalid(format!(
                "node {} declares degree {} but has {} incident edges",
                n.id, n.degree, degree[n.id]
            )));
        }
        Ok(Self {
            dims,
            nodes,
            edges: norm,
        })
    }

    /// `(height, width)` of the source image.
    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Neighbour lists indexed by node id, each sorted ascending.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Returns the graph with node `i` renamed to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes.len(),
                actual: perm.len(),
            });
        }
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                id: perm[n.id],
                ..*n
            })
            .collect();
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Self::from_parts(self.dims, nodes, edges)
    }

    /// Disjoint union; `other`'s ids are shifted past this graph's nodes.
    pub fn disjoint_union(&self, other: &SkeletonGraph) -> Result<Self> {
        let offset = self.nodes.len();
        let nodes = self
            .nodes
            .iter()
            .copied()
            .chain(other.nodes.iter().map(|n| Node {
                id: n.id + offset,
                ..*n
            }))
            .collect();
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(u, v)| (u + offset, v + offset)))
            .collect();
        let dims = (self.dims.0.max(other.dims.0), self.dims.1.max(other.dims.1));
        Self::from_parts(dims, nodes, edges)
    }

    /// Canonical key-sorted JSON:
    /// `{"dims":[h,w],"edges":[[u,v]..],"nodes":[{"coord":[r,c],"degree":d,"id":i}..]}`.
    pub fn to_json(&self) -> String {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|n| json!({"id": n.id, "coord": [n.coord.0, n.coord.1], "degree": n.degree}))
            .collect();
        let edges: Vec<Value> = self.edges.iter().map(|&(u, v)| json!([u, v])).collect();
        json!({"dims": [self.dims.0, self.dims.1], "nodes": nodes, "edges": edges}).to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_at(Path::new("<memory>"), text)
    }

    fn from_json_at(path: &Path, text: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawNode {
            id: usize,
            coord: (usize, usize),
            degree: usize,
        }
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct RawGraph {
            dims: (usize, usize),
            nodes: Vec<RawNode>,
            edges: Vec<(usize, usize)>,
        }
        let raw: RawGraph =
            serde_json::from_str(text).map_err(|e| Error::parse(path, "graph json", e.to_string()))?;
        let nodes = raw
            .nodes
            .into_iter()
            .map(|n| Node {
                id: n.id,
                coord: n.coord,
                degree: n.degree,
            })
            .collect();
        Self::from_parts(raw.dims, nodes, raw.edges)
            .map_err(|e| Error::parse(path, "graph json", e.to_string()))
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_at(path, &text)
    }
}

const FORWARD: [(isize, isize); 4] = [(0, 1), (1, -1), (1, 0), (1, 1)];
const ALL: [(isize, isize); 8] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

fn has_skeleton_neighbour(img: &BinaryImage, row: usize, col: usize) -> bool {
    ALL.iter()
        .any(|&(dr, dc)| img.get_or_zero(row as isize + dr, col as isize + dc) == 1)
}

/// Number of skeleton pixels without any 8-neighbour; these are not nodes.
pub fn isolated_pixel_count(skel: &SkeletonImage) -> usize {
    let img = skel.image();
    (0..img.height())
        .flat_map(|r| (0..img.width()).map(move |c| (r, c)))
        .filter(|&(r, c)| img.get(r, c) == 1 && !has_skeleton_neighbour(img, r, c))
        .count()
}

pub fn build_pixel_graph(skel: &SkeletonImage) -> SkeletonGraph {
    let img = skel.image();
    let (h, w) = (img.height(), img.width());
    let mut ids = vec![usize::MAX; h * w];
    let mut coords = Vec::new();
    for row in 0..h {
        for col in 0..w {
            if img.get(row, col) == 1 && has_skeleton_neighbour(img, row, col) {
                ids[row * w + col] = coords.len();
                coords.push((row, col));
            }
        }
    }
    let isolated = img.count_ones() - coords.len();
    if isolated > 0 {
        log::debug!("excluded {isolated} isolated skeleton pixels");
    }

    let mut edges = Vec::new();
    let mut degree = vec![0usize; coords.len()];
    for (u, &(row, col)) in coords.iter().enumerate() {
        for (dr, dc) in FORWARD {
            let (r, c) = (row as isize + dr, col as isize + dc);
            if img.get_or_zero(r, c) == 1 {
                let v = ids[r as usize * w + c as usize];
                edges.push((u, v));
                degree[u] += 1;
                degree[v] += 1;
            }
        }
    }
    edges.sort_unstable();
    let nodes = coords
        .into_iter()
        .enumerate()
        .map(|(id, coord)| Node {
            id,
            coord,
            degree: degree[id],
        })
        .collect();
    SkeletonGraph {
        dims: (h, w),
        nodes,
        edges,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    /// Degree three or more.
    Branch,
    /// Degree two or less, which includes interior path pixels.
    Endpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeClass {
    pub node_id: usize,
    pub kind: NodeKind,
}

pub fn classify_nodes(g: &SkeletonGraph) -> Vec<NodeClass> {
    g.nodes
        .iter()
        .map(|n| NodeClass {
            node_id: n.id,
            kind: if n.degree >= 3 {
                NodeKind::Branch
            } else {
                NodeKind::Endpoint
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    /// Index into [`CondensedGraph::anchors`].
    pub id: usize,
    /// Id of the pixel-graph node this anchor stands for.
    pub pixel_node: usize,
    pub coord: (usize, usize),
    pub pixel_degree: usize,
    /// Set when the anchor is the stand-in for a junction-free cycle.
    pub cycle_representative: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchPath {
    pub from: usize,
    pub to: usize,
    /// Number of degree-2 pixels strictly between the two anchors.
    pub path_length_pixels: usize,
}

/// Junction/terminal graph: maximal runs of degree-2 pixels contracted to
/// single paths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondensedGraph {
    pub dims: (usize, usize),
    pub anchors: Vec<Anchor>,
    pub paths: Vec<BranchPath>,
}

impl CondensedGraph {
    pub fn mean_path_length(&self) -> f64 {
        if self.paths.is_empty() {
            return 0.0;
        }
        let total: usize = self.paths.iter().map(|p| p.path_length_pixels).sum();
        total as f64 / self.paths.len() as f64
    }

    /// Anchors as nodes and paths as edges, dropping self-paths and
    /// collapsing parallel paths, so the result can be embedded.
    pub fn to_skeleton_graph(&self) -> SkeletonGraph {
        let mut edges: Vec<(usize, usize)> = self
            .paths
            .iter()
            .filter(|p| p.from != p.to)
            .map(|p| (p.from.min(p.to), p.from.max(p.to)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut degree = vec![0usize; self.anchors.len()];
        for &(u, v) in &edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let nodes = self
            .anchors
            .iter()
            .map(|a| Node {
                id: a.id,
                coord: a.coord,
                degree: degree[a.id],
            })
            .collect();
        SkeletonGraph {
            dims: self.dims,
            nodes,
            edges,
        }
    }
}

pub fn condense_graph(g: &SkeletonGraph) -> CondensedGraph {
    let adj = g.adjacency();
    let n = g.node_count();
    let mut anchor_of = vec![usize::MAX; n];
    let mut anchors = Vec::new();
    for node in &g.nodes {
        if node.degree != 2 {
            anchor_of[node.id] = anchors.len();
            anchors.push(Anchor {
                id: anchors.len(),
                pixel_node: node.id,
                coord: node.coord,
                pixel_degree: node.degree,
                cycle_representative: false,
            });
        }
    }

    let mut visited = vec![false; n];
    let mut paths = Vec::new();
    for (a, anchor) in anchors.iter().enumerate() {
        let start = anchor.pixel_node;
        for &first in &adj[start] {
            if anchor_of[first] != usize::MAX {
                // Anchor-to-anchor contact: record once.
                if start < first {
                    paths.push(BranchPath {
                        from: a,
                        to: anchor_of[first],
                        path_length_pixels: 0,
                    });
                }
                continue;
            }
            if visited[first] {
                continue;
            }
            let (mut prev, mut cur, mut len) = (start, first, 0);
            while anchor_of[cur] == usize::MAX {
                visited[cur] = true;
                len += 1;
                let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
                prev = cur;
                cur = next;
            }
            paths.push(BranchPath {
                from: a,
                to: anchor_of[cur],
                path_length_pixels: len,
            });
        }
    }

    // Whatever remains unvisited is a cycle made only of degree-2 pixels.
    for start in 0..n {
        if visited[start] || anchor_of[start] != usize::MAX {
            continue;
        }
        let id = anchors.len();
        anchors.push(Anchor {
            id,
            pixel_node: start,
            coord: g.nodes[start].coord,
            pixel_degree: 2,
            cycle_representative: true,
        });
        visited[start] = true;
        let (mut prev, mut cur, mut len) = (start, adj[start][0], 0);
        while cur != start {
            visited[cur] = true;
            len += 1;
            let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
            prev = cur;
            cur = next;
        }
        paths.push(BranchPath {
            from: id,
            to: id,
            path_length_pixels: len,
        });
    }

    CondensedGraph {
        dims: g.dims,
        anchors,
        paths,
    }
}

/// Degree-class counts for reporting.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub branch_nodes: usize,
    /// Degree ≤ 2.
    pub endpoint_nodes: usize,
    /// Degree exactly 1.
    pub strict_endpoints: usize,
}

impl GraphStats {
    pub fn of(g: &SkeletonGraph) -> Self {
        let branch_nodes = g.nodes.iter().filter(|n| n.degree >= 3).count();
        Self {
            nodes: g.node_count(),
            edges: g.edges.len(),
            branch_nodes,
            endpoint_nodes: g.node_count() - branch_nodes,
            strict_endpoints: g.nodes.iter().filter(|n| n.degree == 1).count(),
        }
    }
}

fn draw_segment(img: &mut RgbImage, from: (usize, usize), to: (usize, usize), rgb: [u8; 3]) {
    let (mut r, mut c) = (from.0 as isize, from.1 as isize);
    let (r1, c1) = (to.0 as isize, to.1 as isize);
    let dc = (c1 - c).abs();
    let dr = -(r1 - r).abs();
    let (sc, sr) = ((c1 - c).signum(), (r1 - r).signum());
    let mut err = dc + dr;
    loop {
        img.set(r as usize, c as usize, rgb);
        if r == r1 && c == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dr {
            err += dr;
            c += sc;
        }
        if e2 <= dc {
            err += dc;
            r += sr;
        }
    }
}

/// Draws the binary image (foreground white), edge segments in yellow, then
/// branch nodes red and endpoints green on top.
pub fn render_overlay(
    bin: &BinaryImage,
    g: &SkeletonGraph,
    classes: &[NodeClass],
) -> Result<RgbImage> {
    let (h, w) = (bin.height(), bin.width());
    for n in &g.nodes {
        if n.coord.0 >= h || n.coord.1 >= w {
            return Err(Error::CoordinateOutOfBounds {
                node: n.id,
                row: n.coord.0,
                col: n.coord.1,
                height: h,
                width: w,
            });
        }
    }
    let mut out = RgbImage::new(w, h, BLACK);
    for row in 0..h {
        for col in 0..w {
            if bin.get(row, col) == 1 {
                out.set(row, col, WHITE);
            }
        }
    }
    for &(u, v) in &g.edges {
        draw_segment(&mut out, g.nodes[u].coord, g.nodes[v].coord, YELLOW);
    }
    let kinds: BTreeMap<usize, NodeKind> = classes.iter().map(|c| (c.node_id, c.kind)).collect();
    for n in &g.nodes {
        let rgb = match kinds.get(&n.id) {
            Some(NodeKind::Branch) => RED,
            Some(NodeKind::Endpoint) => GREEN,
            None => YELLOW,
        };
        out.set(n.coord.0, n.coord.1, rgb);
    }
    Ok(out)
}
