use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::RotationGraph;
use crate::numerics::{
    phase_from_twice, HalfInt, Incommensurate, MPReal, QRoot, Scalar, DEFAULT_PRECISION,
};
use crate::tree::{apply, CouplingTree, Direction, Move};
use crate::wigner::{wigner6j, SixJArgs};

use super::{Basis, EngineError, SpinBinding};

/// Arithmetic mode for compiled matrices.
///
/// `Auto` keeps small machines (n <= 3) on the exact path and switches to
/// 64-digit reals above that; `Exact` holds the exact path as long as the
/// radicals allow and falls back only when a sum is incommensurate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixMode {
    Auto,
    Exact,
    Real(u32),
}

impl MatrixMode {
    fn resolve(self, n_internal: u32) -> (bool, u32) {
        match self {
            MatrixMode::Auto => (n_internal <= 3, DEFAULT_PRECISION),
            MatrixMode::Exact => (true, DEFAULT_PRECISION),
            MatrixMode::Real(p) => (false, p),
        }
    }
}

#[derive(Clone, Debug)]
pub enum MatrixData {
    Exact(Vec<QRoot>),
    Real { prec: u32, entries: Vec<MPReal> },
}

/// A transfer matrix between two coupled bases: rows index the target basis,
/// columns the source basis. All recoupling matrices are real.
#[derive(Clone, Debug)]
pub struct RecouplingMatrix {
    pub source: Arc<Basis>,
    pub target: Arc<Basis>,
    pub data: MatrixData,
}

impl RecouplingMatrix {
    pub fn identity(basis: Arc<Basis>) -> Self {
        let dim = basis.len();
        let mut entries = vec![QRoot::zero(); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = QRoot::one();
        }
        RecouplingMatrix { source: basis.clone(), target: basis, data: MatrixData::Exact(entries) }
    }

    pub fn rows(&self) -> usize {
        self.target.len()
    }

    pub fn cols(&self) -> usize {
        self.source.len()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.data, MatrixData::Exact(_))
    }

    pub fn precision(&self) -> Option<u32> {
        match &self.data {
            MatrixData::Exact(_) => None,
            MatrixData::Real { prec, .. } => Some(*prec),
        }
    }

    pub fn scalar(&self, row: usize, col: usize) -> Scalar {
        let idx = row * self.cols() + col;
        match &self.data {
            MatrixData::Exact(e) => Scalar::Exact(e[idx].clone()),
            MatrixData::Real { entries, .. } => Scalar::Real(entries[idx].clone()),
        }
    }

    pub fn entry_f64(&self, row: usize, col: usize) -> f64 {
        let idx = row * self.cols() + col;
        match &self.data {
            MatrixData::Exact(e) => e[idx].to_f64(),
            MatrixData::Real { entries, .. } => entries[idx].to_f64(),
        }
    }

    pub fn to_f64_entries(&self) -> Vec<f64> {
        match &self.data {
            MatrixData::Exact(e) => e.iter().map(|q| q.to_f64()).collect(),
            MatrixData::Real { entries, .. } => entries.iter().map(|x| x.to_f64()).collect(),
        }
    }

    pub fn to_real(&self, prec: u32) -> Self {
        let entries = match &self.data {
            MatrixData::Exact(e) => e.iter().map(|q| q.to_mpreal(prec)).collect(),
            MatrixData::Real { entries, .. } => {
                entries.iter().map(|x| x.clone().with_prec(prec)).collect()
            }
        };
        RecouplingMatrix {
            source: self.source.clone(),
            target: self.target.clone(),
            data: MatrixData::Real { prec, entries },
        }
    }

    /// `next` after `self`: the matrix of the composite program.
    pub fn then(&self, next: &RecouplingMatrix, fallback_prec: u32) -> Result<Self, EngineError> {
        if !next.source.same_as(&self.target) {
            return Err(EngineError::BasisMismatch(format!(
                "composition joins target {} to source {}",
                self.target.tree, next.source.tree
            )));
        }
        let (r, m, c) = (next.rows(), next.cols(), self.cols());
        debug_assert_eq!(m, self.rows());
        let data = match (&next.data, &self.data) {
            (MatrixData::Exact(b), MatrixData::Exact(a)) => {
                match matmul_exact(b, a, r, m, c) {
                    Ok(entries) => MatrixData::Exact(entries),
                    Err(Incommensurate) => {
                        let bb: Vec<MPReal> =
                            b.iter().map(|q| q.to_mpreal(fallback_prec)).collect();
                        let aa: Vec<MPReal> =
                            a.iter().map(|q| q.to_mpreal(fallback_prec)).collect();
                        MatrixData::Real {
                            prec: fallback_prec,
                            entries: matmul_real(&bb, &aa, r, m, c, fallback_prec),
                        }
                    }
                }
            }
            _ => {
                let prec = self
                    .precision()
                    .unwrap_or(fallback_prec)
                    .max(next.precision().unwrap_or(fallback_prec));
                let bb: Vec<MPReal> = match &next.data {
                    MatrixData::Exact(e) => e.iter().map(|q| q.to_mpreal(prec)).collect(),
                    MatrixData::Real { entries, .. } => entries.clone(),
                };
                let aa: Vec<MPReal> = match &self.data {
                    MatrixData::Exact(e) => e.iter().map(|q| q.to_mpreal(prec)).collect(),
                    MatrixData::Real { entries, .. } => entries.clone(),
                };
                MatrixData::Real { prec, entries: matmul_real(&bb, &aa, r, m, c, prec) }
            }
        };
        Ok(RecouplingMatrix { source: self.source.clone(), target: next.target.clone(), data })
    }

    /// `max |U^T U - I|` over the f64 image; recoupling matrices are real, so
    /// the conjugate transpose is the transpose.
    pub fn unitarity_defect(&self) -> f64 {
        let (r, c) = (self.rows(), self.cols());
        let u = self.to_f64_entries();
        let mut worst: f64 = 0.0;
        for i in 0..c {
            for j in 0..c {
                let mut g = 0.0;
                for k in 0..r {
                    g += u[k * c + i] * u[k * c + j];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - expect).abs());
            }
        }
        worst
    }

    /// Largest deviation of any row or column of `|U|^2` from summing to one.
    pub fn probability_defect(&self) -> f64 {
        let (r, c) = (self.rows(), self.cols());
        let u = self.to_f64_entries();
        let mut worst: f64 = 0.0;
        for i in 0..r {
            let s: f64 = (0..c).map(|j| u[i * c + j] * u[i * c + j]).sum();
            worst = worst.max((s - 1.0).abs());
        }
        for j in 0..c {
            let s: f64 = (0..r).map(|i| u[i * c + j] * u[i * c + j]).sum();
            worst = worst.max((s - 1.0).abs());
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &RecouplingMatrix) -> Result<f64, EngineError> {
        if !self.source.same_as(&other.source) || !self.target.same_as(&other.target) {
            return Err(EngineError::BasisMismatch(
                "matrices compare only over identical bases".into(),
            ));
        }
        let a = self.to_f64_entries();
        let b = other.to_f64_entries();
        Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
    }

    pub fn max_deviation_from_identity(&self) -> f64 {
        let (r, c) = (self.rows(), self.cols());
        let u = self.to_f64_entries();
        let mut worst: f64 = 0.0;
        for i in 0..r {
            for j in 0..c {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((u[i * c + j] - expect).abs());
            }
        }
        worst
    }

    pub fn to_file(&self) -> MatrixFile {
        let entries = (0..self.rows())
            .map(|i| {
                (0..self.cols())
                    .map(|j| match self.scalar(i, j) {
                        Scalar::Exact(q) => EntryRepr::Exact {
                            sgn: q.sign(),
                            sq: q.square().to_string(),
                        },
                        Scalar::Real(x) => EntryRepr::Real(x.to_decimal_string()),
                    })
                    .collect()
            })
            .collect();
        MatrixFile {
            mode: if self.is_exact() { "exact".into() } else { "real".into() },
            precision: self.precision().unwrap_or(DEFAULT_PRECISION),
            spins: self.source.spins.iter().map(|s| s.to_string()).collect(),
            j: self.source.total_j.map(|j| j.to_string()),
            m: self.source.m.map(|m| m.to_string()),
            source_tree: self.source.tree.print(),
            target_tree: self.target.tree.print(),
            source_basis: self.source.k_lists(),
            target_basis: self.target.k_lists(),
            entries,
        }
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self, EngineError> {
        let spins: Vec<HalfInt> = file
            .spins
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()
            .map_err(|e| EngineError::BadImport(format!("spin: {}", e)))?;
        let source_tree = CouplingTree::parse(&file.source_tree)?;
        let target_tree = CouplingTree::parse(&file.target_tree)?;
        let (source, target) = match file.j.as_deref() {
            Some(j) => {
                let j: HalfInt =
                    j.parse().map_err(|e| EngineError::BadImport(format!("j: {}", e)))?;
                let b = SpinBinding::new(spins.clone(), j)?;
                (Basis::enumerate(&source_tree, &b)?, Basis::enumerate(&target_tree, &b)?)
            }
            None => (
                Basis::enumerate_free_j(&source_tree, &spins)?,
                Basis::enumerate_free_j(&target_tree, &spins)?,
            ),
        };
        if source.k_lists() != file.source_basis || target.k_lists() != file.target_basis {
            return Err(EngineError::BadImport(
                "stored basis labelings disagree with re-enumeration".into(),
            ));
        }
        let (r, c) = (target.len(), source.len());
        if file.entries.len() != r || file.entries.iter().any(|row| row.len() != c) {
            return Err(EngineError::BadImport("entry grid has the wrong shape".into()));
        }
        let exact = file.mode == "exact";
        let data = if exact {
            let mut entries = Vec::with_capacity(r * c);
            for row in &file.entries {
                for e in row {
                    match e {
                        EntryRepr::Exact { sgn, sq } => {
                            let square: BigRational = sq
                                .parse()
                                .map_err(|_| EngineError::BadImport(format!("square {:?}", sq)))?;
                            entries.push(QRoot::new(*sgn, square));
                        }
                        EntryRepr::Real(_) => {
                            return Err(EngineError::BadImport(
                                "real entry in exact matrix".into(),
                            ))
                        }
                    }
                }
            }
            MatrixData::Exact(entries)
        } else {
            let mut entries = Vec::with_capacity(r * c);
            for row in &file.entries {
                for e in row {
                    match e {
                        EntryRepr::Real(s) => entries.push(
                            MPReal::parse(s, file.precision)
                                .map_err(|e| EngineError::BadImport(e.to_string()))?,
                        ),
                        EntryRepr::Exact { sgn, sq } => {
                            let square: BigRational = sq
                                .parse()
                                .map_err(|_| EngineError::BadImport(format!("square {:?}", sq)))?;
                            entries.push(QRoot::new(*sgn, square).to_mpreal(file.precision));
                        }
                    }
                }
            }
            MatrixData::Real { prec: file.precision, entries }
        };
        Ok(RecouplingMatrix { source, target, data })
    }
}

fn matmul_exact(
    b: &[QRoot],
    a: &[QRoot],
    r: usize,
    m: usize,
    c: usize,
) -> Result<Vec<QRoot>, Incommensurate> {
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            let mut acc = QRoot::zero();
            for k in 0..m {
                let term = &b[i * m + k] * &a[k * c + j];
                if !term.is_zero() {
                    acc = acc.sum_if_commensurate(&term)?;
                }
            }
            out.push(acc);
        }
    }
    Ok(out)
}

fn matmul_real(b: &[MPReal], a: &[MPReal], r: usize, m: usize, c: usize, prec: u32) -> Vec<MPReal> {
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            let mut acc = MPReal::zero(prec);
            for k in 0..m {
                acc = acc.add(&b[i * m + k].mul(&a[k * c + j]));
            }
            out.push(acc);
        }
    }
    out
}

/// Orientation-determined rotation direction at an internal edge.
fn rotation_direction(basis: &Basis, edge: usize) -> Result<Direction, EngineError> {
    let view = &basis.view;
    let node = view.nodes.get(edge).ok_or_else(|| {
        EngineError::Tree(crate::tree::TreeError::InvalidNode {
            id: edge,
            msg: "no such node".into(),
        })
    })?;
    if node.is_leaf() || node.parent.is_none() {
        return Err(EngineError::Tree(crate::tree::TreeError::InvalidNode {
            id: edge,
            msg: "rotation edge must join two internal nodes".into(),
        }));
    }
    let parent = node.parent.unwrap();
    Ok(if view.nodes[parent].left == Some(edge) {
        Direction::R
    } else {
        Direction::L
    })
}

/// The exact unitary of a single rotation at `edge`, identity on all
/// spectator labels. The direction is determined by the edge orientation.
pub fn elementary_rotation_matrix(
    t: &CouplingTree,
    edge: usize,
    b: &SpinBinding,
) -> Result<RecouplingMatrix, EngineError> {
    let source = Basis::enumerate(t, b)?;
    rotation_matrix_on(source, edge)
}

/// Rotation unitary over the direct sum of all total-j sectors; the tool for
/// exhaustive unitarity scans.
pub fn elementary_rotation_matrix_free_j(
    t: &CouplingTree,
    edge: usize,
    spins: &[HalfInt],
) -> Result<RecouplingMatrix, EngineError> {
    let source = Basis::enumerate_free_j(t, spins)?;
    rotation_matrix_on(source, edge)
}

fn rotation_matrix_on(source: Arc<Basis>, edge: usize) -> Result<RecouplingMatrix, EngineError> {
    let dir = rotation_direction(&source, edge)?;
    let t = &source.tree;
    let rotated = t.rotate_at(edge, dir)?;
    let target = match source.total_j {
        Some(j) => Basis::enumerate(
            &rotated,
            &SpinBinding { spins: source.spins.clone(), total_j: j, m: source.m },
        )?,
        None => Basis::enumerate_free_j(&rotated, &source.spins)?,
    };

    let sview = &source.view;
    let tview = &target.view;
    let parent = sview.nodes[edge].parent.unwrap();
    let (x_id, y_id) = (
        sview.nodes[edge].left.unwrap(),
        sview.nodes[edge].right.unwrap(),
    );
    let sib_id = if sview.nodes[parent].left == Some(edge) {
        sview.nodes[parent].right.unwrap()
    } else {
        sview.nodes[parent].left.unwrap()
    };
    // cluster of the re-associated pivot child in the target tree
    let new_cluster = match dir {
        Direction::R => sview.nodes[y_id].cluster | sview.nodes[sib_id].cluster,
        Direction::L => sview.nodes[sib_id].cluster | sview.nodes[x_id].cluster,
    };
    let c_prime = tview
        .nodes
        .iter()
        .position(|n| !n.is_leaf() && n.cluster == new_cluster)
        .expect("rotated tree contains the re-associated coupling");

    // spectator correspondence: target slot -> source node, by cluster
    let mut source_by_cluster: HashMap<u32, usize> = HashMap::new();
    for &id in &source.slots {
        source_by_cluster.insert(sview.nodes[id].cluster, id);
    }
    let mut spectators: Vec<(usize, usize)> = Vec::new(); // (target slot idx, source node)
    let mut c_prime_slot = usize::MAX;
    for (slot_idx, &id) in target.slots.iter().enumerate() {
        if id == c_prime {
            c_prime_slot = slot_idx;
            continue;
        }
        let src = source_by_cluster[&tview.nodes[id].cluster];
        spectators.push((slot_idx, src));
    }
    let c_slot = source.slot_of_node[edge].expect("pivot child owns a slot");

    // group source labelings by spectator signature
    let mut groups: HashMap<Vec<i32>, Vec<usize>> = HashMap::new();
    for (col, ls) in source.labelings.iter().enumerate() {
        let sig: Vec<i32> = spectators
            .iter()
            .map(|&(_, src)| source.node_spin(ls, src).twice())
            .collect();
        groups.entry(sig).or_default().push(col);
    }

    let (rows, cols) = (target.len(), source.len());
    debug_assert_eq!(rows, cols, "rotation preserves sector dimensions");
    let mut entries = vec![QRoot::zero(); rows * cols];
    for (row, lt) in target.labelings.iter().enumerate() {
        let sig: Vec<i32> = spectators
            .iter()
            .map(|&(slot_idx, _)| lt.ks[slot_idx].twice())
            .collect();
        let Some(group) = groups.get(&sig) else { continue };
        let e_spin = lt.ks[c_prime_slot];
        for &col in group {
            let ls = &source.labelings[col];
            let d_spin = ls.ks[c_slot];
            let x = source.node_spin(ls, x_id);
            let y = source.node_spin(ls, y_id);
            let s = source.node_spin(ls, sib_id);
            let f = source.node_spin(ls, parent);
            let six = match dir {
                Direction::R => wigner6j(SixJArgs::new([x, y, d_spin], [s, f, e_spin])),
                Direction::L => wigner6j(SixJArgs::new([s, x, e_spin], [y, f, d_spin])),
            };
            if six.is_zero() {
                continue;
            }
            let phase =
                phase_from_twice(x.twice() + y.twice() + s.twice() + f.twice());
            let dims = BigRational::from(BigInt::from(d_spin.dim() * e_spin.dim()));
            let weight = QRoot::new(phase as i8, dims);
            entries[row * cols + col] = &six * &weight;
        }
    }
    Ok(RecouplingMatrix { source, target, data: MatrixData::Exact(entries) })
}

/// The diagonal-up-to-reordering phase unitary of one twist.
pub fn elementary_twist_matrix(
    t: &CouplingTree,
    node: usize,
    b: &SpinBinding,
) -> Result<RecouplingMatrix, EngineError> {
    let source = Basis::enumerate(t, b)?;
    twist_matrix_on(source, node)
}

fn twist_matrix_on(source: Arc<Basis>, node: usize) -> Result<RecouplingMatrix, EngineError> {
    let t = &source.tree;
    let (twisted, _) = t.twist_at(node)?;
    let target = match source.total_j {
        Some(j) => Basis::enumerate(
            &twisted,
            &SpinBinding { spins: source.spins.clone(), total_j: j, m: source.m },
        )?,
        None => Basis::enumerate_free_j(&twisted, &source.spins)?,
    };
    let sview = &source.view;
    let tview = &target.view;
    let mut source_by_cluster: HashMap<u32, usize> = HashMap::new();
    for &id in &source.slots {
        source_by_cluster.insert(sview.nodes[id].cluster, id);
    }
    // every target slot matches a source node: twists preserve clusters
    let corr: Vec<usize> = target
        .slots
        .iter()
        .map(|&id| source_by_cluster[&tview.nodes[id].cluster])
        .collect();
    let mut row_of: HashMap<Vec<i32>, usize> = HashMap::new();
    for (row, lt) in target.labelings.iter().enumerate() {
        row_of.insert(lt.ks.iter().map(|k| k.twice()).collect(), row);
    }

    let (l_id, r_id) = (
        sview.nodes[node].left.unwrap(),
        sview.nodes[node].right.unwrap(),
    );
    let (rows, cols) = (target.len(), source.len());
    debug_assert_eq!(rows, cols);
    let mut entries = vec![QRoot::zero(); rows * cols];
    for (col, ls) in source.labelings.iter().enumerate() {
        let kt: Vec<i32> = corr.iter().map(|&src| source.node_spin(ls, src).twice()).collect();
        let row = row_of[&kt];
        let a = source.node_spin(ls, l_id);
        let bb = source.node_spin(ls, r_id);
        let d = source.node_spin(ls, node);
        let phase = phase_from_twice(a.twice() + bb.twice() - d.twice());
        entries[row * cols + col] = if phase > 0 { QRoot::one() } else { -QRoot::one() };
    }
    Ok(RecouplingMatrix { source, target, data: MatrixData::Exact(entries) })
}

/// Compile a move sequence into the ordered product of elementary unitaries.
pub fn compile_path(
    moves: &[Move],
    t0: &CouplingTree,
    b: &SpinBinding,
    mode: MatrixMode,
) -> Result<RecouplingMatrix, EngineError> {
    let (start_exact, prec) = mode.resolve(t0.internal_count());
    let basis0 = Basis::enumerate(t0, b)?;
    let mut acc = RecouplingMatrix::identity(basis0);
    if !start_exact {
        acc = acc.to_real(prec);
    }
    let mut cur = t0.clone();
    for mv in moves {
        let step = match *mv {
            Move::Rot { edge, dir } => {
                let expected = rotation_direction(&acc.target, edge)?;
                if dir != expected {
                    return Err(EngineError::Tree(crate::tree::TreeError::Replay(format!(
                        "rotation at edge {} must go {:?}",
                        edge, expected
                    ))));
                }
                rotation_matrix_on(acc.target.clone(), edge)?
            }
            Move::Tw { node } => twist_matrix_on(acc.target.clone(), node)?,
        };
        acc = acc.then(&step, prec)?;
        cur = apply(&cur, *mv)?;
        debug_assert_eq!(acc.target.tree, cur);
    }
    Ok(acc)
}

/// The recoupling unitary between two coupling schemes: compile the shortest
/// move sequence. `|entry|^2` is the transition probability between the
/// corresponding basis states.
pub fn recoupling_matrix(
    g: &RotationGraph,
    from: &CouplingTree,
    to: &CouplingTree,
    b: &SpinBinding,
    mode: MatrixMode,
) -> Result<RecouplingMatrix, EngineError> {
    let moves = g.shortest_path(from, to)?;
    compile_path(&moves, from, b, mode)
}

/// Compile the shortest path plus `trials` random detours and report the
/// largest entrywise disagreement: path independence made quantitative.
pub fn check_path_independence(
    g: &RotationGraph,
    from: &CouplingTree,
    to: &CouplingTree,
    b: &SpinBinding,
    trials: u32,
    seed: u64,
    mode: MatrixMode,
) -> Result<f64, EngineError> {
    let reference = recoupling_matrix(g, from, to, b, mode)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mid = g.tree(rng.gen_range(0..g.order() as u32));
        let mut detour = g.shortest_path(from, &mid)?;
        detour.extend(g.shortest_path(&mid, to)?);
        let alt = compile_path(&detour, from, b, mode)?;
        worst = worst.max(reference.max_abs_diff(&alt)?);
    }
    Ok(worst)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub mode: String,
    pub precision: u32,
    pub spins: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<String>,
    pub source_tree: String,
    pub target_tree: String,
    pub source_basis: Vec<Vec<String>>,
    pub target_basis: Vec<Vec<String>>,
    pub entries: Vec<Vec<EntryRepr>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EntryRepr {
    Exact { sgn: i8, sq: String },
    Real(String),
}
