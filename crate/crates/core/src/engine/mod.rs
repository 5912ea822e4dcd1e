//! Binding spins to trees, enumerating coupled bases, realizing elementary
//! moves as exact unitary matrices, and compiling move sequences into
//! transfer matrices (with Hermitian generator extraction).
//!
//! Bases are tree-specific: a matrix always carries both its source and its
//! target basis explicitly, so "same state, different coding" never becomes
//! an implicit identification.

mod generator;
mod matrix;

pub use generator::{hermitian_generator, HermitianGenerator};
pub use matrix::{
    check_path_independence, compile_path, elementary_rotation_matrix,
    elementary_rotation_matrix_free_j, elementary_twist_matrix, recoupling_matrix, EntryRepr,
    MatrixData, MatrixFile, MatrixMode, RecouplingMatrix,
};

use std::sync::Arc;

use thiserror::Error;

use crate::graph::GraphError;
use crate::numerics::{triangle_ok, HalfInt};
use crate::tree::{CouplingTree, TreeError, TreeView};


#[derive(Debug, Clone, Error)]
pub enum EngineError {
    #[error("binding has {got} spins, tree has {expected} leaves")]
    LeafCountMismatch { expected: usize, got: usize },
    #[error("invalid spin data: {0}")]
    InvalidSpin(String),
    #[error("tree error: {0}")]
    Tree(#[from] TreeError),
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("bases are not compatible: {0}")]
    BasisMismatch(String),
    #[error("matrix is not unitary: defect {defect:e} exceeds tolerance {tol:e}")]
    NotUnitary { defect: f64, tol: f64 },
    #[error("matrix import does not match its declared bases: {0}")]
    BadImport(String),
}

/// Leaf spins plus the sharp total; the projection `m` is tracked but inert
/// (recoupling matrices are reduced matrix elements).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinBinding {
    pub spins: Vec<HalfInt>,
    pub total_j: HalfInt,
    pub m: Option<HalfInt>,
}

impl SpinBinding {
    pub fn new(spins: Vec<HalfInt>, total_j: HalfInt) -> Result<Self, EngineError> {
        if spins.iter().any(|s| s.is_negative()) || total_j.is_negative() {
            return Err(EngineError::InvalidSpin(
                "spin magnitudes must be nonnegative".into(),
            ));
        }
        Ok(SpinBinding { spins, total_j, m: None })
    }

    pub fn with_m(mut self, m: HalfInt) -> Result<Self, EngineError> {
        if m.abs().twice() > self.total_j.twice()
            || (m.twice() - self.total_j.twice()) % 2 != 0
        {
            return Err(EngineError::InvalidSpin(format!(
                "projection {} is not a sublevel of j = {}",
                m, self.total_j
            )));
        }
        self.m = Some(m);
        Ok(self)
    }
}

/// One admissible assignment of intermediate spins: twice-values for the
/// internal non-root nodes in post-order (plus the root when the basis has a
/// free total).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisLabeling {
    pub ks: Vec<HalfInt>,
}

/// An ordered coupled basis over one tree and one spin binding.
#[derive(Clone, Debug)]
pub struct Basis {
    pub tree: CouplingTree,
    pub spins: Vec<HalfInt>,
    /// `None` means the root spin ranges freely (the direct sum over j).
    pub total_j: Option<HalfInt>,
    pub m: Option<HalfInt>,
    pub labelings: Vec<BasisLabeling>,
    pub(crate) view: TreeView,
    /// Post-order ids of the nodes that own a labeling slot.
    pub(crate) slots: Vec<usize>,
    pub(crate) slot_of_node: Vec<Option<usize>>,
}

impl Basis {
    /// Enumerate all admissible intermediate-spin assignments for a fixed
    /// total, ordered lexicographically by twice-values along post-order.
    pub fn enumerate(tree: &CouplingTree, binding: &SpinBinding) -> Result<Arc<Basis>, EngineError> {
        Self::build(tree, &binding.spins, Some(binding.total_j), binding.m)
    }

    /// Same, with the root spin free: the direct sum of all total-j sectors.
    pub fn enumerate_free_j(
        tree: &CouplingTree,
        spins: &[HalfInt],
    ) -> Result<Arc<Basis>, EngineError> {
        Self::build(tree, spins, None, None)
    }

    fn build(
        tree: &CouplingTree,
        spins: &[HalfInt],
        total_j: Option<HalfInt>,
        m: Option<HalfInt>,
    ) -> Result<Arc<Basis>, EngineError> {
        if spins.len() != tree.leaf_count() as usize {
            return Err(EngineError::LeafCountMismatch {
                expected: tree.leaf_count() as usize,
                got: spins.len(),
            });
        }
        if spins.iter().any(|s| s.is_negative()) {
            return Err(EngineError::InvalidSpin(
                "spin magnitudes must be nonnegative".into(),
            ));
        }
        let view = tree.view();
        let root = view.root_id();
        let mut slots: Vec<usize> = view
            .nodes
            .iter()
            .enumerate()
            .filter(|(id, n)| !n.is_leaf() && (*id != root || total_j.is_none()))
            .map(|(id, _)| id)
            .collect();
        slots.sort_unstable();
        let mut slot_of_node = vec![None; view.nodes.len()];
        for (slot, &id) in slots.iter().enumerate() {
            slot_of_node[id] = Some(slot);
        }

        // bottom-up enumeration: (top spin, slot assignments of the subtree)
        fn go(
            view: &TreeView,
            spins: &[HalfInt],
            id: usize,
        ) -> Vec<(HalfInt, Vec<HalfInt>)> {
            let node = &view.nodes[id];
            match node.leaf {
                Some(idx) => vec![(spins[(idx - 1) as usize], Vec::new())],
                None => {
                    let left = go(view, spins, node.left.unwrap());
                    let right = go(view, spins, node.right.unwrap());
                    let mut out = Vec::new();
                    for (ls, lks) in &left {
                        for (rs, rks) in &right {
                            for s in ls.couplings(*rs) {
                                let mut ks =
                                    Vec::with_capacity(lks.len() + rks.len() + 1);
                                ks.extend_from_slice(lks);
                                ks.extend_from_slice(rks);
                                ks.push(s);
                                out.push((s, ks));
                            }
                        }
                    }
                    out
                }
            }
        }

        let node = &view.nodes[root];
        let mut labelings: Vec<BasisLabeling> = Vec::new();
        if let Some(leaf) = node.leaf {
            // single-leaf degenerate tree: the basis is the leaf spin itself
            let spin = spins[(leaf - 1) as usize];
            if total_j.is_none() || total_j == Some(spin) {
                labelings.push(BasisLabeling { ks: vec![] });
            }
        } else {
            let left = go(&view, spins, node.left.unwrap());
            let right = go(&view, spins, node.right.unwrap());
            for (ls, lks) in &left {
                for (rs, rks) in &right {
                    match total_j {
                        Some(j) => {
                            if triangle_ok(*ls, *rs, j) {
                                let mut ks =
                                    Vec::with_capacity(lks.len() + rks.len());
                                ks.extend_from_slice(lks);
                                ks.extend_from_slice(rks);
                                labelings.push(BasisLabeling { ks });
                            }
                        }
                        None => {
                            for s in ls.couplings(*rs) {
                                let mut ks =
                                    Vec::with_capacity(lks.len() + rks.len() + 1);
                                ks.extend_from_slice(lks);
                                ks.extend_from_slice(rks);
                                ks.push(s);
                                labelings.push(BasisLabeling { ks });
                            }
                        }
                    }
                }
            }
        }
        labelings.sort_by(|a, b| {
            a.ks.iter()
                .map(|k| k.twice())
                .cmp(b.ks.iter().map(|k| k.twice()))
        });

        Ok(Arc::new(Basis {
            tree: tree.clone(),
            spins: spins.to_vec(),
            total_j,
            m,
            labelings,
            view,
            slots,
            slot_of_node,
        }))
    }

    pub fn len(&self) -> usize {
        self.labelings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labelings.is_empty()
    }

    /// Spin at a view node under one labeling.
    pub(crate) fn node_spin(&self, labeling: &BasisLabeling, node: usize) -> HalfInt {
        if let Some(slot) = self.slot_of_node[node] {
            return labeling.ks[slot];
        }
        let vn = &self.view.nodes[node];
        match vn.leaf {
            Some(idx) => self.spins[(idx - 1) as usize],
            None => self.total_j.expect("fixed-total basis"),
        }
    }

    /// Compatibility for composition: same tree, spins, total and labels.
    pub fn same_as(&self, other: &Basis) -> bool {
        self.tree == other.tree
            && self.spins == other.spins
            && self.total_j == other.total_j
            && self.labelings == other.labelings
    }

    /// Render each labeling as its k-list, for export.
    pub fn k_lists(&self) -> Vec<Vec<String>> {
        self.labelings
            .iter()
            .map(|l| l.ks.iter().map(|k| k.to_string()).collect())
            .collect()
    }
}
