//! Binary coupling trees: the machine alphabet.
//!
//! A tree on leaves `1..=n+1` is one bracketing of the coupled state; the two
//! elementary moves are the rotation (re-association at an internal edge) and
//! the twist (swap of one coupling's members). Node and edge ids are
//! post-order traversal positions, which makes move sequences serializable
//! and replayable.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_LEAVES: u32 = 32;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TreeError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("arity error at byte {pos}: couplings are strictly binary")]
    Arity { pos: usize },
    #[error("leaf set error: {0}")]
    LeafSet(String),
    #[error("invalid node id {id}: {msg}")]
    InvalidNode { id: usize, msg: String },
    #[error("move sequence does not replay: {0}")]
    Replay(String),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Node {
    Leaf(u32),
    Pair(Box<Node>, Box<Node>),
}

impl Node {
    fn print_into(&self, out: &mut String) {
        match self {
            Node::Leaf(i) => out.push_str(&i.to_string()),
            Node::Pair(l, r) => {
                out.push('(');
                l.print_into(out);
                out.push(' ');
                r.print_into(out);
                out.push(')');
            }
        }
    }

    fn min_leaf(&self) -> u32 {
        match self {
            Node::Leaf(i) => *i,
            Node::Pair(l, r) => l.min_leaf().min(r.min_leaf()),
        }
    }

    fn canonical(&self) -> Node {
        match self {
            Node::Leaf(i) => Node::Leaf(*i),
            Node::Pair(l, r) => {
                let (cl, cr) = (l.canonical(), r.canonical());
                if cl.min_leaf() <= cr.min_leaf() {
                    Node::Pair(Box::new(cl), Box::new(cr))
                } else {
                    Node::Pair(Box::new(cr), Box::new(cl))
                }
            }
        }
    }

    fn leaf_count(&self) -> u32 {
        match self {
            Node::Leaf(_) => 1,
            Node::Pair(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }
}

/// A rooted strictly-binary coupling tree with distinct leaf indices
/// covering `1..=n+1`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CouplingTree {
    root: Node,
    leaves: u32,
}

impl CouplingTree {
    /// Parse the bracketing grammar
    /// `tree = leaf | "(", tree, " ", tree, ")"` with decimal leaf indices.
    pub fn parse(text: &str) -> Result<Self, TreeError> {
        let bytes = text.as_bytes();
        let mut pos = 0usize;
        let root = parse_node(bytes, &mut pos)?;
        skip_ws(bytes, &mut pos);
        if pos != bytes.len() {
            return Err(TreeError::Syntax {
                pos,
                msg: "trailing input after complete tree".into(),
            });
        }
        Self::from_root(root)
    }

    fn from_root(root: Node) -> Result<Self, TreeError> {
        let leaves = root.leaf_count();
        if leaves > MAX_LEAVES {
            return Err(TreeError::LeafSet(format!(
                "{} leaves exceeds the supported maximum of {}",
                leaves, MAX_LEAVES
            )));
        }
        let mut seen = vec![false; leaves as usize];
        let mut stack = vec![&root];
        while let Some(n) = stack.pop() {
            match n {
                Node::Leaf(i) => {
                    if *i == 0 || *i > leaves {
                        return Err(TreeError::LeafSet(format!(
                            "leaf index {} outside 1..={}",
                            i, leaves
                        )));
                    }
                    if seen[(*i - 1) as usize] {
                        return Err(TreeError::LeafSet(format!("duplicate leaf index {}", i)));
                    }
                    seen[(*i - 1) as usize] = true;
                }
                Node::Pair(l, r) => {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Ok(CouplingTree { root, leaves })
    }

    /// Left-comb tree `(((1 2) 3) ...)`; the conventional start vertex.
    pub fn left_comb(leaves: u32) -> Self {
        assert!(leaves >= 1 && leaves <= MAX_LEAVES);
        let mut node = Node::Leaf(1);
        for i in 2..=leaves {
            node = Node::Pair(Box::new(node), Box::new(Node::Leaf(i)));
        }
        CouplingTree { root: node, leaves }
    }

    pub fn leaf_count(&self) -> u32 {
        self.leaves
    }

    /// Number of internal nodes (the `n` of an `n+1`-leaf scheme).
    pub fn internal_count(&self) -> u32 {
        self.leaves - 1
    }

    /// Canonical bracketing text; `parse(print(t)) == t`.
    pub fn print(&self) -> String {
        let mut out = String::new();
        self.root.print_into(&mut out);
        out
    }

    /// Unique representative of the twist-equivalence class: every coupling
    /// puts the subtree with the smaller minimum leaf index on the left.
    pub fn canonical_form(&self) -> CouplingTree {
        CouplingTree { root: self.root.canonical(), leaves: self.leaves }
    }

    pub fn is_canonical(&self) -> bool {
        self.root == self.root.canonical()
    }

    /// Flattened post-order view with parent/child links and leaf clusters.
    pub fn view(&self) -> TreeView {
        let mut nodes = Vec::with_capacity((2 * self.leaves - 1) as usize);
        build_view(&self.root, None, &mut nodes);
        // fix parent links: build_view pushes children before parents
        TreeView { nodes }
    }

    fn replace_subtree(&self, id: usize, replacement: Node) -> CouplingTree {
        fn go(node: &Node, counter: &mut usize, target: usize, replacement: &Node) -> Node {
            match node {
                Node::Leaf(i) => {
                    let here = *counter;
                    *counter += 1;
                    if here == target {
                        replacement.clone()
                    } else {
                        Node::Leaf(*i)
                    }
                }
                Node::Pair(l, r) => {
                    let nl = go(l, counter, target, replacement);
                    let nr = go(r, counter, target, replacement);
                    let here = *counter;
                    *counter += 1;
                    if here == target {
                        replacement.clone()
                    } else {
                        Node::Pair(Box::new(nl), Box::new(nr))
                    }
                }
            }
        }
        let mut counter = 0usize;
        let root = go(&self.root, &mut counter, id, &replacement);
        CouplingTree { root, leaves: self.leaves }
    }

    fn subtree(&self, id: usize) -> Option<&Node> {
        fn go<'a>(node: &'a Node, counter: &mut usize, target: usize) -> Option<&'a Node> {
            if let Node::Pair(l, r) = node {
                if let Some(hit) = go(l, counter, target) {
                    return Some(hit);
                }
                if let Some(hit) = go(r, counter, target) {
                    return Some(hit);
                }
            }
            let here = *counter;
            *counter += 1;
            if here == target {
                Some(node)
            } else {
                None
            }
        }
        let mut counter = 0usize;
        go(&self.root, &mut counter, id)
    }

    /// Re-associate at the internal edge whose lower endpoint is node `edge`.
    ///
    /// `R` turns `((x y) s)` into `(x (y s))` (requires `edge` to be a left
    /// child); `L` turns `(s (x y))` into `((s x) y)` (right child).
    pub fn rotate_at(&self, edge: usize, dir: Direction) -> Result<CouplingTree, TreeError> {
        let view = self.view();
        let node = view.nodes.get(edge).ok_or(TreeError::InvalidNode {
            id: edge,
            msg: "no such node".into(),
        })?;
        if node.is_leaf() {
            return Err(TreeError::InvalidNode {
                id: edge,
                msg: "rotation edge must join two internal nodes".into(),
            });
        }
        let parent = node.parent.ok_or(TreeError::InvalidNode {
            id: edge,
            msg: "rotation edge must have an internal upper endpoint".into(),
        })?;
        let pnode = &view.nodes[parent];
        let is_left_child = pnode.left == Some(edge);
        let (x, y) = (node.left.unwrap(), node.right.unwrap());
        let replacement = match (dir, is_left_child) {
            (Direction::R, true) => {
                // ((x y) s) -> (x (y s))
                let s = pnode.right.unwrap();
                Node::Pair(
                    Box::new(self.subtree(x).unwrap().clone()),
                    Box::new(Node::Pair(
                        Box::new(self.subtree(y).unwrap().clone()),
                        Box::new(self.subtree(s).unwrap().clone()),
                    )),
                )
            }
            (Direction::L, false) => {
                // (s (x y)) -> ((s x) y)
                let s = pnode.left.unwrap();
                Node::Pair(
                    Box::new(Node::Pair(
                        Box::new(self.subtree(s).unwrap().clone()),
                        Box::new(self.subtree(x).unwrap().clone()),
                    )),
                    Box::new(self.subtree(y).unwrap().clone()),
                )
            }
            (Direction::R, false) => {
                return Err(TreeError::InvalidNode {
                    id: edge,
                    msg: "R rotation needs the lower endpoint on the left".into(),
                })
            }
            (Direction::L, true) => {
                return Err(TreeError::InvalidNode {
                    id: edge,
                    msg: "L rotation needs the lower endpoint on the right".into(),
                })
            }
        };
        Ok(self.replace_subtree(parent, replacement))
    }

    /// Swap the two members of the coupling at internal node `node`.
    ///
    /// The returned spec records the coupling's leaf clusters so that the
    /// phase `(-1)^(a+b-d)` can be evaluated once spins are bound.
    pub fn twist_at(&self, node: usize) -> Result<(CouplingTree, TwistPhase), TreeError> {
        let view = self.view();
        let vn = view.nodes.get(node).ok_or(TreeError::InvalidNode {
            id: node,
            msg: "no such node".into(),
        })?;
        let (l, r) = match (vn.left, vn.right) {
            (Some(l), Some(r)) => (l, r),
            _ => {
                return Err(TreeError::InvalidNode {
                    id: node,
                    msg: "twist target must be an internal node".into(),
                })
            }
        };
        let swapped = Node::Pair(
            Box::new(self.subtree(r).unwrap().clone()),
            Box::new(self.subtree(l).unwrap().clone()),
        );
        let phase = TwistPhase {
            left: view.nodes[l].cluster,
            right: view.nodes[r].cluster,
        };
        Ok((self.replace_subtree(node, swapped), phase))
    }

    /// Both re-associations available at an internal edge, as ordered trees:
    /// `{{x,s},y}` and `{{y,s},x}` for pivot `{{x,y},s}`. Used by the graph
    /// layer, which canonicalizes the results.
    pub fn reassociations(&self, edge: usize) -> Result<[CouplingTree; 2], TreeError> {
        let view = self.view();
        let node = view.nodes.get(edge).ok_or(TreeError::InvalidNode {
            id: edge,
            msg: "no such node".into(),
        })?;
        if node.is_leaf() || node.parent.is_none() {
            return Err(TreeError::InvalidNode {
                id: edge,
                msg: "re-association needs an internal non-root node".into(),
            });
        }
        let parent = node.parent.unwrap();
        let pnode = &view.nodes[parent];
        let sib = if pnode.left == Some(edge) {
            pnode.right.unwrap()
        } else {
            pnode.left.unwrap()
        };
        let (x, y) = (node.left.unwrap(), node.right.unwrap());
        let sub = |id: usize| Box::new(self.subtree(id).unwrap().clone());
        let a = Node::Pair(Box::new(Node::Pair(sub(x), sub(sib))), sub(y));
        let b = Node::Pair(Box::new(Node::Pair(sub(y), sub(sib))), sub(x));
        Ok([
            self.replace_subtree(parent, a),
            self.replace_subtree(parent, b),
        ])
    }
}

fn skip_ws(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() && bytes[*pos] == b' ' {
        *pos += 1;
    }
}

fn parse_node(bytes: &[u8], pos: &mut usize) -> Result<Node, TreeError> {
    skip_ws(bytes, pos);
    match bytes.get(*pos) {
        None => Err(TreeError::Syntax { pos: *pos, msg: "unexpected end of input".into() }),
        Some(b'(') => {
            *pos += 1;
            let left = parse_node(bytes, pos)?;
            skip_ws(bytes, pos);
            if bytes.get(*pos) == Some(&b')') {
                // "(x)" has one member, not two
                return Err(TreeError::Arity { pos: *pos });
            }
            let right = parse_node(bytes, pos)?;
            skip_ws(bytes, pos);
            match bytes.get(*pos) {
                Some(b')') => {
                    *pos += 1;
                    Ok(Node::Pair(Box::new(left), Box::new(right)))
                }
                Some(b) if b.is_ascii_digit() || *b == b'(' => {
                    Err(TreeError::Arity { pos: *pos })
                }
                _ => Err(TreeError::Syntax {
                    pos: *pos,
                    msg: "expected ')'".into(),
                }),
            }
        }
        Some(b) if b.is_ascii_digit() => {
            let start = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            let text = std::str::from_utf8(&bytes[start..*pos]).unwrap();
            let idx: u32 = text.parse().map_err(|_| TreeError::Syntax {
                pos: start,
                msg: format!("leaf index {} out of range", text),
            })?;
            if idx == 0 {
                return Err(TreeError::Syntax {
                    pos: start,
                    msg: "leaf indices start at 1".into(),
                });
            }
            Ok(Node::Leaf(idx))
        }
        Some(b) => Err(TreeError::Syntax {
            pos: *pos,
            msg: format!("unexpected byte {:?}", *b as char),
        }),
    }
}

fn build_view(node: &Node, parent: Option<usize>, nodes: &mut Vec<ViewNode>) -> usize {
    match node {
        Node::Leaf(i) => {
            let id = nodes.len();
            nodes.push(ViewNode {
                left: None,
                right: None,
                parent,
                leaf: Some(*i),
                cluster: 1u32 << (i - 1),
            });
            id
        }
        Node::Pair(l, r) => {
            // children first: post-order ids
            let lid = build_view(l, None, nodes);
            let rid = build_view(r, None, nodes);
            let id = nodes.len();
            let cluster = nodes[lid].cluster | nodes[rid].cluster;
            nodes.push(ViewNode {
                left: Some(lid),
                right: Some(rid),
                parent,
                leaf: None,
                cluster,
            });
            nodes[lid].parent = Some(id);
            nodes[rid].parent = Some(id);
            id
        }
    }
}

/// Post-order flattened tree: node ids are traversal positions, the root is
/// last. `cluster` is the bitmask of leaf indices below the node.
#[derive(Clone, Debug)]
pub struct TreeView {
    pub nodes: Vec<ViewNode>,
}

#[derive(Clone, Debug)]
pub struct ViewNode {
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub parent: Option<usize>,
    pub leaf: Option<u32>,
    pub cluster: u32,
}

impl ViewNode {
    pub fn is_leaf(&self) -> bool {
        self.leaf.is_some()
    }
}

impl TreeView {
    pub fn root_id(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Internal node ids in post-order.
    pub fn internal_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].is_leaf())
    }

    /// Ids of internal non-root nodes: the lower endpoints of internal edges.
    pub fn internal_edges(&self) -> impl Iterator<Item = usize> + '_ {
        let root = self.root_id();
        self.internal_ids().filter(move |&i| i != root)
    }
}

/// Symbolic twist phase: with spins (a, b) bound to the clusters and d to
/// their union, the state picks up `(-1)^(a+b-d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwistPhase {
    pub left: u32,
    pub right: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    L,
    R,
}

/// One elementary move. Ids refer to post-order positions in the tree the
/// move is applied to; a sequence therefore replays deterministically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum Move {
    #[serde(rename = "rot")]
    Rot { edge: usize, dir: Direction },
    #[serde(rename = "tw")]
    Tw { node: usize },
}

pub type MoveSequence = Vec<Move>;

/// Apply a move sequence from `t0`, validating each step.
pub fn replay(t0: &CouplingTree, moves: &[Move]) -> Result<CouplingTree, TreeError> {
    let mut cur = t0.clone();
    for (i, mv) in moves.iter().enumerate() {
        cur = apply(&cur, *mv)
            .map_err(|e| TreeError::Replay(format!("move {} ({:?}): {}", i, mv, e)))?;
    }
    Ok(cur)
}

pub fn apply(t: &CouplingTree, mv: Move) -> Result<CouplingTree, TreeError> {
    match mv {
        Move::Rot { edge, dir } => t.rotate_at(edge, dir),
        Move::Tw { node } => Ok(t.twist_at(node)?.0),
    }
}

impl fmt::Display for CouplingTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.print())
    }
}

impl fmt::Debug for CouplingTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.print())
    }
}

impl std::str::FromStr for CouplingTree {
    type Err = TreeError;
    fn from_str(s: &str) -> Result<Self, TreeError> {
        CouplingTree::parse(s)
    }
}

impl Serialize for CouplingTree {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CouplingTree {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
