//! Disjoint communities (Louvain) and the per-community neighbor / boundary /
//! core split.
//!
//! Louvain works on the symmetrized graph: the undirected weight between `u`
//! and `v` is `w(u,v) + w(v,u)`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::graph::{DirectedGraph, NodeId};
use crate::seed;

#[derive(Clone, Debug, PartialEq)]
pub enum CommunityError {
    EmptyGraph,
    InvalidResolution(f64),
    AssignmentLength { assignment: usize, node_count: usize },
}

impl fmt::Display for CommunityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommunityError::EmptyGraph => write!(f, "community detection needs at least one node"),
            CommunityError::InvalidResolution(r) => write!(f, "resolution must be positive, got {r}"),
            CommunityError::AssignmentLength { assignment, node_count } => {
                write!(f, "assignment covers {assignment} nodes, graph has {node_count}")
            }
        }
    }
}

impl core::error::Error for CommunityError {}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LouvainConfig {
    pub resolution: f64,
    pub seed: u64,
    /// Cap on local-move sweeps per level.
    pub max_sweeps: usize,
    /// Cap on coarsening levels.
    pub max_levels: usize,
}

impl Default for LouvainConfig {
    fn default() -> Self {
        LouvainConfig {
            resolution: 1.0,
            seed: 0,
            max_sweeps: 1000,
            max_levels: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    /// Community id per node, contiguous `0..community_count`.
    pub assignment: Vec<u32>,
    pub community_count: usize,
    pub modularity: f64,
    /// Modularity before the first pass followed by the value after every pass.
    pub pass_modularity: Vec<f64>,
}

impl CommunityPartition {
    /// Wraps an externally supplied assignment (e.g. a planted partition),
    /// renumbering ids in order of first appearance.
    pub fn from_assignment(g: &DirectedGraph, assignment: &[u32], resolution: f64) -> Result<Self, CommunityError> {
        if assignment.len() != g.node_count() {
            return Err(CommunityError::AssignmentLength {
                assignment: assignment.len(),
                node_count: g.node_count(),
            });
        }
        let (assignment, community_count) = renumber(assignment);
        let modularity = modularity(g, &assignment, resolution);
        Ok(CommunityPartition {
            assignment,
            community_count,
            modularity,
            pass_modularity: vec![modularity],
        })
    }

    pub fn community_of(&self, v: NodeId) -> u32 {
        self.assignment[v.index()]
    }

    /// Members of every community, each list ascending.
    pub fn members(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c as usize].push(NodeId::new(v));
        }
        out
    }
}

/// Renumbers labels to `0..k` in order of first appearance.
fn renumber(labels: &[u32]) -> (Vec<u32>, usize) {
    let max = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut map = vec![u32::MAX; max];
    let mut next = 0u32;
    let out = labels
        .iter()
        .map(|&l| {
            let slot = &mut map[l as usize];
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
            *slot
        })
        .collect();
    (out, next as usize)
}

/// Undirected weighted graph used inside Louvain. `loops[i]` is the diagonal
/// entry `A_ii` (twice the weight of an undirected self-loop).
#[derive(Clone, Debug)]
struct Level {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    loops: Vec<f64>,
}

impl Level {
    fn node_count(&self) -> usize {
        self.loops.len()
    }

    fn symmetrized(g: &DirectedGraph) -> Level {
        let n = g.node_count();
        let mut pairs: Vec<(u32, u32, f64)> = Vec::with_capacity(2 * g.edge_count());
        for e in g.edges() {
            pairs.push((e.src.0, e.dst.0, e.weight));
            pairs.push((e.dst.0, e.src.0, e.weight));
        }
        Level::from_pairs(n, pairs, vec![0.0; n])
    }

    /// Builds CSR from directed half-entries, summing repeated pairs.
    fn from_pairs(n: usize, mut pairs: Vec<(u32, u32, f64)>, loops: Vec<f64>) -> Level {
        pairs.sort_by_key(|&(a, b, _)| (a, b));
        let mut offsets = vec![0usize; n + 1];
        let mut neighbors = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut last: Option<(u32, u32)> = None;
        for (a, b, w) in pairs {
            if last == Some((a, b)) {
                *weights.last_mut().expect("previous entry") += w;
                continue;
            }
            last = Some((a, b));
            offsets[a as usize + 1] += 1;
            neighbors.push(b);
            weights.push(w);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Level {
            offsets,
            neighbors,
            weights,
            loops,
        }
    }

    fn degrees(&self) -> Vec<f64> {
        (0..self.node_count())
            .map(|i| self.weights[self.offsets[i]..self.offsets[i + 1]].iter().sum::<f64>() + self.loops[i])
            .collect()
    }

    /// Modularity of `assignment` on this level.
    fn modularity(&self, assignment: &[u32], resolution: f64) -> f64 {
        let degrees = self.degrees();
        let two_m: f64 = degrees.iter().sum();
        if two_m <= 0.0 {
            return 0.0;
        }
        let k = assignment.iter().copied().max().map_or(0, |c| c as usize + 1);
        let mut internal = vec![0.0; k];
        let mut total = vec![0.0; k];
        for i in 0..self.node_count() {
            let ci = assignment[i] as usize;
            total[ci] += degrees[i];
            internal[ci] += self.loops[i];
            for p in self.offsets[i]..self.offsets[i + 1] {
                if assignment[self.neighbors[p] as usize] as usize == ci {
                    internal[ci] += self.weights[p];
                }
            }
        }
        internal
            .iter()
            .zip(&total)
            .map(|(&inn, &tot)| inn / two_m - resolution * (tot / two_m) * (tot / two_m))
            .sum()
    }

    /// Collapses communities into single nodes.
    fn aggregate(&self, assignment: &[u32], community_count: usize) -> Level {
        let mut loops = vec![0.0; community_count];
        let mut pairs = Vec::new();
        for i in 0..self.node_count() {
            let ci = assignment[i];
            loops[ci as usize] += self.loops[i];
            for p in self.offsets[i]..self.offsets[i + 1] {
                let cj = assignment[self.neighbors[p] as usize];
                if cj == ci {
                    loops[ci as usize] += self.weights[p];
                } else {
                    pairs.push((ci, cj, self.weights[p]));
                }
            }
        }
        Level::from_pairs(community_count, pairs, loops)
    }
}

/// Modularity of a node assignment on the symmetrized graph.
pub fn modularity(g: &DirectedGraph, assignment: &[u32], resolution: f64) -> f64 {
    Level::symmetrized(g).modularity(assignment, resolution)
}

/// Greedy local moves on one level. Returns the new assignment (renumbered)
/// and whether any node moved.
fn local_moves(level: &Level, resolution: f64, order: &[u32], max_sweeps: usize) -> (Vec<u32>, usize, bool) {
    let n = level.node_count();
    let degrees = level.degrees();
    let two_m: f64 = degrees.iter().sum();
    let mut assignment: Vec<u32> = (0..n as u32).collect();
    if two_m <= 0.0 {
        return (assignment, n, false);
    }
    let mut community_total = degrees.clone();
    let mut link = vec![0.0_f64; n];
    let mut seen = vec![false; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut moved_any = false;

    for _ in 0..max_sweeps {
        let mut moved = false;
        for &node in order {
            let i = node as usize;
            let current = assignment[i];
            let ki = degrees[i];

            for p in level.offsets[i]..level.offsets[i + 1] {
                let c = assignment[level.neighbors[p] as usize];
                if !seen[c as usize] {
                    seen[c as usize] = true;
                    touched.push(c);
                }
                link[c as usize] += level.weights[p];
            }

            community_total[current as usize] -= ki;
            let gain = |c: u32, link_c: f64| link_c - resolution * community_total[c as usize] * ki / two_m;
            let stay_gain = gain(current, link[current as usize]);
            let eps = 1e-12 * ki.max(1.0);

            let mut best = current;
            let mut best_gain = stay_gain;
            touched.sort_unstable();
            for &c in &touched {
                if c == current {
                    continue;
                }
                let g_c = gain(c, link[c as usize]);
                let better_than_stay = g_c > stay_gain + eps;
                if !better_than_stay {
                    continue;
                }
                // ascending visit: equal gains keep the lower id already chosen
                if best == current || g_c > best_gain + eps {
                    best = c;
                    best_gain = g_c;
                }
            }

            community_total[best as usize] += ki;
            if best != current {
                assignment[i] = best;
                moved = true;
                moved_any = true;
            }

            for &c in &touched {
                link[c as usize] = 0.0;
                seen[c as usize] = false;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
    }

    let (assignment, count) = renumber(&assignment);
    (assignment, count, moved_any)
}

pub fn louvain(g: &DirectedGraph, cfg: &LouvainConfig) -> Result<CommunityPartition, CommunityError> {
    if g.node_count() == 0 {
        return Err(CommunityError::EmptyGraph);
    }
    if !(cfg.resolution > 0.0 && cfg.resolution.is_finite()) {
        return Err(CommunityError::InvalidResolution(cfg.resolution));
    }
    let n = g.node_count();
    let mut rng = seed::rng(cfg.seed);
    let mut level = Level::symmetrized(g);
    let mut node_community: Vec<u32> = (0..n as u32).collect();
    let mut pass_modularity = vec![level.modularity(&node_community, cfg.resolution)];

    for _ in 0..cfg.max_levels {
        let mut order: Vec<u32> = (0..level.node_count() as u32).collect();
        order.shuffle(&mut rng);
        let (assignment, count, moved) = local_moves(&level, cfg.resolution, &order, cfg.max_sweeps);
        if !moved {
            break;
        }
        for c in node_community.iter_mut() {
            *c = assignment[*c as usize];
        }
        let q = modularity(g, &node_community, cfg.resolution);
        pass_modularity.push(q);
        if count == level.node_count() {
            break;
        }
        level = level.aggregate(&assignment, count);
    }

    let (assignment, community_count) = renumber(&node_community);
    let modularity = *pass_modularity.last().expect("at least the initial value");
    Ok(CommunityPartition {
        assignment,
        community_count,
        modularity,
        pass_modularity,
    })
}

/// Which edges make an outside node a neighbor of a community.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborDirection {
    /// Any edge between the outside node and a member.
    #[default]
    Either,
    /// Outside node follows a member (`x -> member`).
    In,
    /// A member follows the outside node (`member -> x`).
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Boundary,
    Core,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Boundary => "boundary",
            Role::Core => "core",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CommunityRoles {
    pub members: Vec<NodeId>,
    pub neighbors: Vec<NodeId>,
    pub boundary: Vec<NodeId>,
    pub core: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaPartition {
    pub communities: Vec<CommunityRoles>,
    community_of: Vec<u32>,
    roles: Vec<Role>,
}

impl ChaPartition {
    pub fn role(&self, v: NodeId) -> Role {
        self.roles[v.index()]
    }

    pub fn community_of(&self, v: NodeId) -> u32 {
        self.community_of[v.index()]
    }

    pub fn node_count(&self) -> usize {
        self.roles.len()
    }

    /// Every boundary node, ascending.
    pub fn boundary_nodes(&self) -> Vec<NodeId> {
        self.nodes_with(Role::Boundary)
    }

    /// Every core node, ascending.
    pub fn core_nodes(&self) -> Vec<NodeId> {
        self.nodes_with(Role::Core)
    }

    pub fn nodes_with(&self, role: Role) -> Vec<NodeId> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, &r)| r == role)
            .map(|(v, _)| NodeId::new(v))
            .collect()
    }
}

pub fn cha_partition(
    g: &DirectedGraph,
    p: &CommunityPartition,
    direction: NeighborDirection,
) -> Result<ChaPartition, CommunityError> {
    let n = g.node_count();
    if p.assignment.len() != n {
        return Err(CommunityError::AssignmentLength {
            assignment: p.assignment.len(),
            node_count: n,
        });
    }
    let members = p.members();
    // stamp[x] == c + 1 marks x as a neighbor of community c
    let mut stamp = vec![0u32; n];
    let mut roles = vec![Role::Core; n];
    let mut communities = Vec::with_capacity(members.len());

    for (c, nodes) in members.into_iter().enumerate() {
        let c32 = c as u32;
        let mark = c32 + 1;
        let mut neighbors = Vec::new();
        for &m in &nodes {
            if matches!(direction, NeighborDirection::Either | NeighborDirection::Out) {
                for &x in g.out_targets(m) {
                    if p.assignment[x.index()] != c32 && stamp[x.index()] != mark {
                        stamp[x.index()] = mark;
                        neighbors.push(x);
                    }
                }
            }
            if matches!(direction, NeighborDirection::Either | NeighborDirection::In) {
                for &x in g.in_sources(m) {
                    if p.assignment[x.index()] != c32 && stamp[x.index()] != mark {
                        stamp[x.index()] = mark;
                        neighbors.push(x);
                    }
                }
            }
        }
        neighbors.sort_unstable();

        let mut boundary = Vec::new();
        let mut core = Vec::new();
        for &m in &nodes {
            if g.out_targets(m).iter().any(|x| stamp[x.index()] == mark) {
                roles[m.index()] = Role::Boundary;
                boundary.push(m);
            } else {
                core.push(m);
            }
        }
        communities.push(CommunityRoles {
            members: nodes,
            neighbors,
            boundary,
            core,
        });
    }

    Ok(ChaPartition {
        communities,
        community_of: p.assignment.clone(),
        roles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cliques(k: usize, size: usize) -> Vec<(u32, u32, f64)> {
        let mut edges = Vec::new();
        for c in 0..k {
            let base = (c * size) as u32;
            for i in 0..size as u32 {
                for j in 0..size as u32 {
                    if i != j {
                        edges.push((base + i, base + j, 1.0));
                    }
                }
            }
        }
        edges
    }

    /// Q = 1/2m sum_ij (A_ij - k_i k_j / 2m) [c_i == c_j], by brute force.
    fn modularity_oracle(n: usize, edges: &[(u32, u32, f64)], assignment: &[u32]) -> f64 {
        let mut a = vec![vec![0.0; n]; n];
        for &(s, d, w) in edges {
            a[s as usize][d as usize] += w;
            a[d as usize][s as usize] += w;
        }
        let k: Vec<f64> = a.iter().map(|row| row.iter().sum()).collect();
        let two_m: f64 = k.iter().sum();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if assignment[i] == assignment[j] {
                    q += a[i][j] - k[i] * k[j] / two_m;
                }
            }
        }
        q / two_m
    }

    #[test]
    fn single_node_one_community() {
        let (g, _) = DirectedGraph::from_edges(1, []).unwrap();
        let p = louvain(&g, &LouvainConfig::default()).unwrap();
        assert_eq!(p.assignment, vec![0]);
        assert_eq!(p.community_count, 1);
        assert_eq!(p.modularity, 0.0);
    }

    #[test]
    fn empty_graph_refused() {
        assert_eq!(
            louvain(&DirectedGraph::empty(), &LouvainConfig::default()),
            Err(CommunityError::EmptyGraph)
        );
    }

    #[test]
    fn bridged_cliques_split_at_the_bridge() {
        let mut edges = cliques(2, 5);
        edges.push((4, 5, 1.0));
        let (g, _) = DirectedGraph::from_edges(10, edges.iter().copied()).unwrap();

        // exhaustive search over 2-partitions (node 0 pinned to side 0)
        let mut best = (f64::MIN, 0u32);
        for mask in 0..(1u32 << 9) {
            let assignment: Vec<u32> = (0..10)
                .map(|i| if i == 0 { 0 } else { (mask >> (i - 1)) & 1 })
                .collect();
            let q = modularity_oracle(10, &edges, &assignment);
            if q > best.0 + 1e-12 {
                best = (q, mask);
            }
        }
        let expected: Vec<u32> = (0..10)
            .map(|i| if i == 0 { 0 } else { (best.1 >> (i - 1)) & 1 })
            .collect();
        assert_eq!(expected, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);

        for seed in 0..10 {
            let p = louvain(
                &g,
                &LouvainConfig {
                    seed,
                    ..LouvainConfig::default()
                },
            )
            .unwrap();
            assert_eq!(p.assignment, expected, "seed {seed}");
            assert!((p.modularity - best.0).abs() < 1e-12);
        }
    }

    #[test]
    fn modularity_matches_pair_sum() {
        let edges = [
            (0, 1, 1.0),
            (1, 2, 2.0),
            (2, 0, 1.0),
            (3, 4, 1.0),
            (2, 3, 0.5),
            (4, 3, 1.0),
        ];
        let (g, _) = DirectedGraph::from_edges(5, edges).unwrap();
        for assignment in [[0, 0, 0, 1, 1], [0, 1, 2, 3, 4], [0, 0, 0, 0, 0], [0, 1, 0, 1, 0]] {
            let q = modularity(&g, &assignment, 1.0);
            assert!((q - modularity_oracle(5, &edges, &assignment)).abs() < 1e-12);
        }
    }

    #[test]
    fn disconnected_cliques_recovered() {
        let (g, _) = DirectedGraph::from_edges(12, cliques(3, 4)).unwrap();
        let p = louvain(&g, &LouvainConfig::default()).unwrap();
        assert_eq!(p.assignment, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
        assert!(p.pass_modularity.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn isolated_nodes_stay_apart() {
        let (g, _) = DirectedGraph::from_edges(4, [(0, 1, 1.0)]).unwrap();
        let p = louvain(&g, &LouvainConfig::default()).unwrap();
        assert_eq!(p.assignment[0], p.assignment[1]);
        assert_ne!(p.assignment[2], p.assignment[3]);
        assert_ne!(p.assignment[2], p.assignment[0]);
    }

    #[test]
    fn cha_small_example() {
        // community {a=0, b=1, c=2}, outsider x=3: a->x, b->a, c->b
        let (g, _) = DirectedGraph::from_edges(4, [(0, 3, 1.0), (1, 0, 1.0), (2, 1, 1.0)]).unwrap();
        let p = CommunityPartition::from_assignment(&g, &[0, 0, 0, 1], 1.0).unwrap();
        let cha = cha_partition(&g, &p, NeighborDirection::Either).unwrap();
        let com = &cha.communities[0];
        assert_eq!(com.neighbors, vec![NodeId(3)]);
        assert_eq!(com.boundary, vec![NodeId(0)]);
        assert_eq!(com.core, vec![NodeId(1), NodeId(2)]);
        assert_eq!(cha.role(NodeId(0)), Role::Boundary);
        // the outsider's own community sees a as an in-neighbor only
        assert_eq!(cha.communities[1].neighbors, vec![NodeId(0)]);
        assert!(cha.communities[1].boundary.is_empty());
    }

    #[test]
    fn cha_closed_community_is_all_core() {
        let (g, _) = DirectedGraph::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let p = CommunityPartition::from_assignment(&g, &[0, 0, 0], 1.0).unwrap();
        let cha = cha_partition(&g, &p, NeighborDirection::Either).unwrap();
        assert!(cha.communities[0].neighbors.is_empty());
        assert!(cha.communities[0].boundary.is_empty());
        assert_eq!(cha.communities[0].core.len(), 3);
    }

    #[test]
    fn neighbor_direction_switch() {
        // member 0 of {0,1}; 2 follows 0; 1 follows 2
        let (g, _) = DirectedGraph::from_edges(3, [(2, 0, 1.0), (1, 2, 1.0)]).unwrap();
        let p = CommunityPartition::from_assignment(&g, &[0, 0, 1], 1.0).unwrap();
        let either = cha_partition(&g, &p, NeighborDirection::Either).unwrap();
        assert_eq!(either.communities[0].boundary, vec![NodeId(1)]);
        let out = cha_partition(&g, &p, NeighborDirection::Out).unwrap();
        assert_eq!(out.communities[0].neighbors, vec![NodeId(2)]);
        let inn = cha_partition(&g, &p, NeighborDirection::In).unwrap();
        assert_eq!(inn.communities[0].neighbors, vec![NodeId(2)]);
        assert_eq!(inn.communities[0].boundary, vec![NodeId(1)]);
    }
}
