//! The twist-reduced rotation graph: vertices are canonical coupling trees,
//! bonds are single rotations (modulo twists). Construction, statistics, and
//! the Inverse Problem (shortest move sequence between two schemes).

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::tree::{CouplingTree, Direction, Move, MoveSequence, TreeError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GraphError {
    #[error("graph for n = {n} would have {vertices} vertices, over the limit of {limit}; build a smaller n")]
    TooLarge { n: u32, vertices: u64, limit: u64 },
    #[error("n must be at least 1, got {0}")]
    BadOrder(u32),
    #[error("tree has {got} leaves, graph expects {expected}")]
    LeafCountMismatch { got: u32, expected: u32 },
    #[error("tree error: {0}")]
    Tree(#[from] TreeError),
}

/// (2n-1)!! — the vertex count of the twist-reduced graph.
pub fn double_factorial_odd(n: u32) -> u64 {
    let mut acc = 1u64;
    let mut k = 1u64;
    while k <= 2 * n as u64 - 1 {
        acc *= k;
        k += 2;
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphVariant {
    /// Vertices are twist-equivalence classes; bonds are rotations.
    TwistReduced,
    /// Vertices are ordered trees; bonds are single rotations or twists.
    Full,
}

/// A built rotation graph with deterministic vertex numbering
/// (lexicographic by bracketing text).
pub struct RotationGraph {
    n: u32,
    variant: GraphVariant,
    brackets: Vec<Box<str>>,
    adj_off: Vec<u32>,
    adj: Vec<u32>,
}

const MAX_VERTICES: u64 = 2_100_000;

impl RotationGraph {
    /// Build the twist-reduced graph on n+1 leaves.
    pub fn build(n: u32) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::BadOrder(n));
        }
        let expected = double_factorial_odd(n);
        if expected > MAX_VERTICES {
            return Err(GraphError::TooLarge { n, vertices: expected, limit: MAX_VERTICES });
        }
        let start = CouplingTree::left_comb(n + 1).canonical_form();
        Ok(Self::closure(n, GraphVariant::TwistReduced, start))
    }

    /// Build the full twist-rotation graph (2^n times larger); practical for
    /// small n only.
    pub fn build_full(n: u32) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::BadOrder(n));
        }
        let expected = double_factorial_odd(n) << n;
        if expected > MAX_VERTICES {
            return Err(GraphError::TooLarge { n, vertices: expected, limit: MAX_VERTICES });
        }
        Ok(Self::closure(n, GraphVariant::Full, CouplingTree::left_comb(n + 1)))
    }

    fn closure(n: u32, variant: GraphVariant, start: CouplingTree) -> Self {
        let mut index: HashMap<Box<str>, u32> = HashMap::new();
        let mut brackets: Vec<Box<str>> = Vec::new();
        let mut rows: Vec<Vec<u32>> = Vec::new();
        let mut queue: VecDeque<u32> = VecDeque::new();

        let key: Box<str> = start.print().into();
        index.insert(key.clone(), 0);
        brackets.push(key);
        rows.push(Vec::new());
        queue.push_back(0);

        while let Some(vid) = queue.pop_front() {
            let tree = CouplingTree::parse(&brackets[vid as usize]).unwrap();
            let mut neigh = Vec::new();
            neighbor_trees(&tree, variant, |t| neigh.push(t));
            let mut ids = Vec::with_capacity(neigh.len());
            for nt in neigh {
                let key: Box<str> = nt.print().into();
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = brackets.len() as u32;
                        index.insert(key.clone(), id);
                        brackets.push(key);
                        rows.push(Vec::new());
                        queue.push_back(id);
                        id
                    }
                };
                ids.push(id);
            }
            rows[vid as usize] = ids;
        }

        // renumber lexicographically so golden outputs are stable
        let mut order: Vec<u32> = (0..brackets.len() as u32).collect();
        order.sort_by(|&a, &b| brackets[a as usize].cmp(&brackets[b as usize]));
        let mut rank = vec![0u32; brackets.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old as usize] = new as u32;
        }
        let sorted_brackets: Vec<Box<str>> =
            order.iter().map(|&old| brackets[old as usize].clone()).collect();
        let mut adj_off = Vec::with_capacity(brackets.len() + 1);
        let mut adj = Vec::new();
        adj_off.push(0u32);
        for &old in &order {
            let mut row: Vec<u32> =
                rows[old as usize].iter().map(|&x| rank[x as usize]).collect();
            row.sort_unstable();
            row.dedup();
            adj.extend_from_slice(&row);
            adj_off.push(adj.len() as u32);
        }

        RotationGraph { n, variant, brackets: sorted_brackets, adj_off, adj }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn variant(&self) -> GraphVariant {
        self.variant
    }

    pub fn order(&self) -> usize {
        self.brackets.len()
    }

    pub fn size(&self) -> usize {
        self.adj.len() / 2
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        let lo = self.adj_off[v as usize] as usize;
        let hi = self.adj_off[v as usize + 1] as usize;
        &self.adj[lo..hi]
    }

    pub fn bracket(&self, v: u32) -> &str {
        &self.brackets[v as usize]
    }

    pub fn tree(&self, v: u32) -> CouplingTree {
        CouplingTree::parse(&self.brackets[v as usize]).unwrap()
    }

    /// Vertex id of a tree (canonicalized first in the reduced variant).
    pub fn vertex_id(&self, t: &CouplingTree) -> Result<u32, GraphError> {
        if t.leaf_count() != self.n + 1 {
            return Err(GraphError::LeafCountMismatch {
                got: t.leaf_count(),
                expected: self.n + 1,
            });
        }
        let key = match self.variant {
            GraphVariant::TwistReduced => t.canonical_form().print(),
            GraphVariant::Full => t.print(),
        };
        Ok(self
            .brackets
            .binary_search_by(|b| b.as_ref().cmp(key.as_str()))
            .expect("every admissible tree is a vertex") as u32)
    }

    /// BFS distances from `v`, stopping early once `until` is settled.
    fn distances_from(&self, v: u32, until: Option<u32>) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.order()];
        let mut queue = VecDeque::new();
        dist[v as usize] = 0;
        queue.push_back(v);
        while let Some(u) = queue.pop_front() {
            if until == Some(u) {
                break;
            }
            for &w in self.neighbors(u) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[u as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn bfs_distances(&self, v: u32) -> Vec<u32> {
        self.distances_from(v, None)
    }

    /// Exact all-pairs statistics. Quadratic in the order; intended for the
    /// small n where the diameter study lives.
    pub fn stats(&self) -> GraphStats {
        let order = self.order();
        let (diameter, total): (u32, u64) = (0..order as u32)
            .into_par_iter()
            .map(|v| {
                let dist = self.bfs_distances(v);
                let mut far = 0u32;
                let mut sum = 0u64;
                for &d in &dist {
                    assert!(d != u32::MAX, "graph must be connected");
                    far = far.max(d);
                    sum += d as u64;
                }
                (far, sum)
            })
            .reduce(|| (0, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
        let mut histogram: Vec<(u32, u64)> = Vec::new();
        for v in 0..order as u32 {
            let deg = self.neighbors(v).len() as u32;
            match histogram.iter_mut().find(|(d, _)| *d == deg) {
                Some((_, c)) => *c += 1,
                None => histogram.push((deg, 1)),
            }
        }
        histogram.sort_unstable();
        let pairs = (order as u64) * (order as u64 - 1);
        GraphStats {
            order,
            size: self.size(),
            degree_histogram: histogram,
            diameter,
            mean_distance: if pairs == 0 { 0.0 } else { total as f64 / pairs as f64 },
        }
    }

    /// Diameter bound report for the Inverse Problem discussion: the
    /// empirical constants are reported, never asserted against a fixed value.
    pub fn distance_bound_check(&self) -> DistanceBoundReport {
        let stats = self.stats();
        let n = self.n as f64;
        DistanceBoundReport {
            n: self.n,
            order: stats.order,
            diameter: stats.diameter,
            ratio_over_n: stats.diameter as f64 / n,
            ratio_over_n_ln_n: if self.n >= 2 {
                stats.diameter as f64 / (n * n.ln())
            } else {
                f64::NAN
            },
        }
    }

    /// Minimum-rotation move sequence from `from` to `to`, with twists
    /// inserted as needed to realize class hops on ordered trees. Replaying
    /// the result lands exactly on `to`. Ties between equally short routes
    /// break toward the lexicographically smallest vertex id sequence.
    pub fn shortest_path(
        &self,
        from: &CouplingTree,
        to: &CouplingTree,
    ) -> Result<MoveSequence, GraphError> {
        assert_eq!(
            self.variant,
            GraphVariant::TwistReduced,
            "shortest_path runs on the twist-reduced graph"
        );
        let src = self.vertex_id(from)?;
        let dst = self.vertex_id(to)?;
        let dist = self.distances_from(dst, Some(src));
        let mut moves = MoveSequence::new();
        let mut cur_tree = from.clone();
        let mut cur = src;
        while cur != dst {
            let d = dist[cur as usize];
            let next = *self
                .neighbors(cur)
                .iter()
                .find(|&&w| dist[w as usize] == d - 1)
                .expect("connected graph always has a descent neighbor");
            let target_class = self.tree(next);
            let hop = realize_hop(&cur_tree, &target_class)
                .expect("adjacent classes are one rotation apart");
            for mv in hop {
                moves.push(mv);
                cur_tree = crate::tree::apply(&cur_tree, mv).unwrap();
            }
            cur = next;
        }
        // land on the exact ordered target
        moves.extend(twist_fixup(&mut cur_tree, to));
        debug_assert_eq!(&cur_tree, to);
        Ok(moves)
    }

    /// JSON-lines export: one `{"v": id, "tree": "...", "adj": [ids]}` per vertex.
    pub fn export_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            v: u32,
            tree: &'a str,
            adj: &'a [u32],
        }
        for v in 0..self.order() as u32 {
            let row = Row { v, tree: self.bracket(v), adj: self.neighbors(v) };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// DOT emission for figures.
    pub fn export_dot<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "graph rotation_graph_n{} {{", self.n)?;
        for v in 0..self.order() as u32 {
            writeln!(out, "  v{} [label=\"{}\"];", v, self.bracket(v))?;
        }
        for v in 0..self.order() as u32 {
            for &w in self.neighbors(v) {
                if v < w {
                    writeln!(out, "  v{} -- v{};", v, w)?;
                }
            }
        }
        writeln!(out, "}}")
    }
}

/// All neighbor trees of `tree` under the chosen variant, already in vertex
/// key form (canonical for the reduced graph, ordered for the full graph).
fn neighbor_trees<F: FnMut(CouplingTree)>(tree: &CouplingTree, variant: GraphVariant, mut emit: F) {
    let view = tree.view();
    match variant {
        GraphVariant::TwistReduced => {
            for edge in view.internal_edges() {
                let [a, b] = tree.reassociations(edge).unwrap();
                emit(a.canonical_form());
                emit(b.canonical_form());
            }
        }
        GraphVariant::Full => {
            for edge in view.internal_edges().collect::<Vec<_>>() {
                for dir in [Direction::L, Direction::R] {
                    if let Ok(t) = tree.rotate_at(edge, dir) {
                        emit(t);
                    }
                }
            }
            for node in view.internal_ids().collect::<Vec<_>>() {
                emit(tree.twist_at(node).unwrap().0);
            }
        }
    }
}

/// Ordered-tree realization of one canonical-graph hop: at most one twist
/// followed by one rotation.
fn realize_hop(cur: &CouplingTree, target_class: &CouplingTree) -> Option<Vec<Move>> {
    let view = cur.view();
    for edge in view.internal_edges() {
        let parent = view.nodes[edge].parent.unwrap();
        let dir = if view.nodes[parent].left == Some(edge) {
            Direction::R
        } else {
            Direction::L
        };
        // direct rotation
        let rotated = cur.rotate_at(edge, dir).unwrap();
        if &rotated.canonical_form() == target_class {
            return Some(vec![Move::Rot { edge, dir }]);
        }
        // twist the pivot child first; its post-order id is unchanged
        let (twisted, _) = cur.twist_at(edge).unwrap();
        let rotated = twisted.rotate_at(edge, dir).unwrap();
        if &rotated.canonical_form() == target_class {
            return Some(vec![Move::Tw { node: edge }, Move::Rot { edge, dir }]);
        }
    }
    None
}

/// Twists that bring `cur` (same class as `target`) to exactly `target`.
fn twist_fixup(cur: &mut CouplingTree, target: &CouplingTree) -> Vec<Move> {
    let mut moves = Vec::new();
    loop {
        if &*cur == target {
            return moves;
        }
        let cv = cur.view();
        let tv = target.view();
        // match internal nodes by cluster and find one with flipped children
        let mut by_cluster: HashMap<u32, usize> = HashMap::new();
        for id in tv.internal_ids() {
            by_cluster.insert(tv.nodes[id].cluster, id);
        }
        let mut fixed_one = false;
        for id in cv.internal_ids() {
            let t_id = by_cluster[&cv.nodes[id].cluster];
            let c_left = cv.nodes[cv.nodes[id].left.unwrap()].cluster;
            let t_left = tv.nodes[tv.nodes[t_id].left.unwrap()].cluster;
            if c_left != t_left {
                moves.push(Move::Tw { node: id });
                *cur = cur.twist_at(id).unwrap().0;
                fixed_one = true;
                break;
            }
        }
        assert!(fixed_one, "same-class trees differ only by twists");
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphStats {
    pub order: usize,
    pub size: usize,
    pub degree_histogram: Vec<(u32, u64)>,
    pub diameter: u32,
    pub mean_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceBoundReport {
    pub n: u32,
    pub order: usize,
    pub diameter: u32,
    pub ratio_over_n: f64,
    pub ratio_over_n_ln_n: f64,
}
