//! Mixed-state machinery: statistical-tensor decomposition of density
//! operators, 9j-coupled composition of two subsystems, and sublevel-matrix
//! reconstruction.
//!
//! Conventions: reduced matrix elements are defined by
//! `<j'm'|rho|jm> = sum_{k,kappa} (j'||rho||j)^k_kappa C^{j k j'}_{m kappa m'}`
//! with Condon-Shortley Clebsch-Gordan coefficients, inverted through CG
//! orthogonality. Components live in double precision; the pipeline consumes
//! exact CG/9j values converted once.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{triangle_ok, HalfInt};
use crate::wigner::{clebsch_gordan, wigner9j, NineJArgs};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DensityError {
    #[error("sublevel grid incomplete: expected {expected_rows} x {expected_cols}, got {got_rows} x {got_cols}")]
    Incomplete {
        expected_rows: usize,
        expected_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("bad spin in file: {0}")]
    BadSpin(String),
}

/// Block labels (sigma', j', sigma, j): primes are bra-side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLabels {
    pub sigma_bra: String,
    pub j_bra: HalfInt,
    pub sigma_ket: String,
    pub j_ket: HalfInt,
}

/// Dense sublevel matrix `<j' m'|rho|j m>`, row-major with both projections
/// ascending from -j to j.
#[derive(Clone, Debug, PartialEq)]
pub struct SublevelMatrix {
    pub j_bra: HalfInt,
    pub j_ket: HalfInt,
    pub entries: Vec<Complex64>,
}

impl SublevelMatrix {
    pub fn zeros(j_bra: HalfInt, j_ket: HalfInt) -> Self {
        let n = (j_bra.dim() * j_ket.dim()) as usize;
        SublevelMatrix { j_bra, j_ket, entries: vec![Complex64::ZERO; n] }
    }

    pub fn rows(&self) -> usize {
        self.j_bra.dim() as usize
    }

    pub fn cols(&self) -> usize {
        self.j_ket.dim() as usize
    }

    fn idx(&self, m_bra: HalfInt, m_ket: HalfInt) -> usize {
        let r = ((m_bra.twice() + self.j_bra.twice()) / 2) as usize;
        let c = ((m_ket.twice() + self.j_ket.twice()) / 2) as usize;
        r * self.cols() + c
    }

    pub fn get(&self, m_bra: HalfInt, m_ket: HalfInt) -> Complex64 {
        self.entries[self.idx(m_bra, m_ket)]
    }

    pub fn set(&mut self, m_bra: HalfInt, m_ket: HalfInt, v: Complex64) {
        let i = self.idx(m_bra, m_ket);
        self.entries[i] = v;
    }

    pub fn trace(&self) -> Complex64 {
        if self.j_bra != self.j_ket {
            return Complex64::ZERO;
        }
        self.j_bra.projections().map(|m| self.get(m, m)).sum()
    }

    pub fn max_abs_diff(&self, other: &SublevelMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        assert_eq!(self.j_bra, self.j_ket);
        let mut worst: f64 = 0.0;
        for m1 in self.j_bra.projections() {
            for m2 in self.j_bra.projections() {
                worst = worst.max((self.get(m1, m2) - self.get(m2, m1).conj()).norm());
            }
        }
        worst
    }
}

/// Reduced matrix elements `(sigma' j'||rho||sigma j)^k_kappa`, indexed by
/// twice-values of (k, kappa) with k in |j-j'|..=j+j'.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityBlock {
    pub labels: BlockLabels,
    pub components: BTreeMap<(i32, i32), Complex64>,
}

impl DensityBlock {
    pub fn component(&self, k: HalfInt, kappa: HalfInt) -> Complex64 {
        self.components
            .get(&(k.twice(), kappa.twice()))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }
}

/// Coupled-system labels: the sigma pairs, constituent spins, and totals.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupledLabels {
    pub sigma1_bra: String,
    pub sigma2_bra: String,
    pub j1_bra: HalfInt,
    pub j2_bra: HalfInt,
    pub j_bra: HalfInt,
    pub sigma1_ket: String,
    pub sigma2_ket: String,
    pub j1_ket: HalfInt,
    pub j2_ket: HalfInt,
    pub j_ket: HalfInt,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledDensityBlock {
    pub labels: CoupledLabels,
    pub components: BTreeMap<(i32, i32), Complex64>,
}

impl CoupledDensityBlock {
    pub fn component(&self, k: HalfInt, kappa: HalfInt) -> Complex64 {
        self.components
            .get(&(k.twice(), kappa.twice()))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }
}

fn cg(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, j: HalfInt, m: HalfInt) -> f64 {
    clebsch_gordan(j1, m1, j2, m2, j, m).to_f64()
}

/// Invert the sublevel matrix into statistical-tensor components:
/// `A^k_kappa = (2k+1)/(2j'+1) sum_{m m'} rho[m',m] C^{j k j'}_{m kappa m'}`.
pub fn decompose_density(
    matrix: &SublevelMatrix,
    labels: BlockLabels,
) -> Result<DensityBlock, DensityError> {
    if matrix.j_bra != labels.j_bra || matrix.j_ket != labels.j_ket {
        return Err(DensityError::LabelMismatch(format!(
            "matrix is a ({}, {}) block, labels say ({}, {})",
            matrix.j_bra, matrix.j_ket, labels.j_bra, labels.j_ket
        )));
    }
    let expected_rows = labels.j_bra.dim() as usize;
    let expected_cols = labels.j_ket.dim() as usize;
    if matrix.entries.len() != expected_rows * expected_cols {
        return Err(DensityError::Incomplete {
            expected_rows,
            expected_cols,
            got_rows: matrix.entries.len() / expected_cols.max(1),
            got_cols: expected_cols,
        });
    }
    let (j, jp) = (labels.j_ket, labels.j_bra);
    let mut components = BTreeMap::new();
    for k in j.couplings(jp) {
        for kappa in k.projections() {
            let mut acc = Complex64::ZERO;
            for m in j.projections() {
                let mp = m + kappa;
                if mp.abs().twice() > jp.twice() {
                    continue;
                }
                acc += matrix.get(mp, m) * cg(j, m, k, kappa, jp, mp);
            }
            components.insert(
                (k.twice(), kappa.twice()),
                acc * (k.dim() as f64 / jp.dim() as f64),
            );
        }
    }
    Ok(DensityBlock { labels, components })
}

/// Rebuild the sublevel matrix of one block:
/// `rho[m',m] = sum_{k kappa} A^k_kappa C^{j k j'}_{m kappa m'}`.
pub fn reconstruct_density(block: &DensityBlock) -> SublevelMatrix {
    reconstruct_components(&block.components, block.labels.j_ket, block.labels.j_bra)
}

/// Sublevel matrix of a coupled block (same expansion, coupled labels).
pub fn reconstruct_coupled_matrix(block: &CoupledDensityBlock) -> SublevelMatrix {
    reconstruct_components(&block.components, block.labels.j_ket, block.labels.j_bra)
}

fn reconstruct_components(
    components: &BTreeMap<(i32, i32), Complex64>,
    j: HalfInt,
    jp: HalfInt,
) -> SublevelMatrix {
    let mut out = SublevelMatrix::zeros(jp, j);
    for (&(tk, tkappa), &a) in components {
        let (k, kappa) = (HalfInt::from_twice(tk), HalfInt::from_twice(tkappa));
        for m in j.projections() {
            let mp = m + kappa;
            if mp.abs().twice() > jp.twice() {
                continue;
            }
            let add = a * cg(j, m, k, kappa, jp, mp);
            let cur = out.get(mp, m);
            out.set(mp, m, cur + add);
        }
    }
    out
}

/// Couple two single-system blocks into the tensor-product block with totals
/// (j, j'):
/// `B^k_kappa = sum W * 9j{j1 j2 j; k1 k2 k; j'1 j'2 j'} * A1^{k1}_{kappa1}
/// * A2^{k2}_{kappa2} * C^{k1 k2 k}_{kappa1 kappa2 kappa}`,
/// `W = sqrt((2j+1)(2k+1)(2j'1+1)(2j'2+1))`.
pub fn couple_densities(
    b1: &DensityBlock,
    b2: &DensityBlock,
    j_ket: HalfInt,
    j_bra: HalfInt,
) -> Result<CoupledDensityBlock, DensityError> {
    let (j1, j1p) = (b1.labels.j_ket, b1.labels.j_bra);
    let (j2, j2p) = (b2.labels.j_ket, b2.labels.j_bra);
    if !triangle_ok(j1, j2, j_ket) {
        return Err(DensityError::LabelMismatch(format!(
            "total j = {} is not a coupling of {} and {}",
            j_ket, j1, j2
        )));
    }
    if !triangle_ok(j1p, j2p, j_bra) {
        return Err(DensityError::LabelMismatch(format!(
            "total j' = {} is not a coupling of {} and {}",
            j_bra, j1p, j2p
        )));
    }
    let labels = CoupledLabels {
        sigma1_bra: b1.labels.sigma_bra.clone(),
        sigma2_bra: b2.labels.sigma_bra.clone(),
        j1_bra: j1p,
        j2_bra: j2p,
        j_bra,
        sigma1_ket: b1.labels.sigma_ket.clone(),
        sigma2_ket: b2.labels.sigma_ket.clone(),
        j1_ket: j1,
        j2_ket: j2,
        j_ket,
    };
    let mut components = BTreeMap::new();
    for k in j_ket.couplings(j_bra) {
        let w = ((j_ket.dim() * k.dim() * j1p.dim() * j2p.dim()) as f64).sqrt();
        for kappa in k.projections() {
            let mut acc = Complex64::ZERO;
            for (&(tk1, tkap1), &a1) in &b1.components {
                let (k1, kap1) = (HalfInt::from_twice(tk1), HalfInt::from_twice(tkap1));
                for (&(tk2, tkap2), &a2) in &b2.components {
                    let (k2, kap2) = (HalfInt::from_twice(tk2), HalfInt::from_twice(tkap2));
                    if kap1 + kap2 != kappa {
                        continue;
                    }
                    let c = cg(k1, kap1, k2, kap2, k, kappa);
                    if c == 0.0 {
                        continue;
                    }
                    let nine = wigner9j(NineJArgs([
                        [j1, j2, j_ket],
                        [k1, k2, k],
                        [j1p, j2p, j_bra],
                    ]))
                    .to_f64();
                    if nine == 0.0 {
                        continue;
                    }
                    acc += a1 * a2 * (w * nine * c);
                }
            }
            components.insert((k.twice(), kappa.twice()), acc);
        }
    }
    Ok(CoupledDensityBlock { labels, components })
}

// ---------------------------------------------------------------------------
// File formats: labels plus row-major complex matrices as [re, im] pairs.

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityMatrixFile {
    pub sigma_bra: String,
    pub j_bra: String,
    pub sigma_ket: String,
    pub j_ket: String,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub k: String,
    pub kappa: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityBlockFile {
    pub sigma_bra: String,
    pub j_bra: String,
    pub sigma_ket: String,
    pub j_ket: String,
    pub components: Vec<ComponentEntry>,
}

impl DensityMatrixFile {
    pub fn to_parts(&self) -> Result<(SublevelMatrix, BlockLabels), DensityError> {
        let j_bra: HalfInt = self
            .j_bra
            .parse()
            .map_err(|e| DensityError::BadSpin(format!("{}", e)))?;
        let j_ket: HalfInt = self
            .j_ket
            .parse()
            .map_err(|e| DensityError::BadSpin(format!("{}", e)))?;
        let rows = j_bra.dim() as usize;
        let cols = j_ket.dim() as usize;
        if self.matrix.len() != rows || self.matrix.iter().any(|r| r.len() != cols) {
            return Err(DensityError::Incomplete {
                expected_rows: rows,
                expected_cols: cols,
                got_rows: self.matrix.len(),
                got_cols: self.matrix.first().map_or(0, |r| r.len()),
            });
        }
        let entries = self
            .matrix
            .iter()
            .flatten()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Ok((
            SublevelMatrix { j_bra, j_ket, entries },
            BlockLabels {
                sigma_bra: self.sigma_bra.clone(),
                j_bra,
                sigma_ket: self.sigma_ket.clone(),
                j_ket,
            },
        ))
    }

    pub fn from_parts(matrix: &SublevelMatrix, sigma_bra: &str, sigma_ket: &str) -> Self {
        let cols = matrix.cols();
        DensityMatrixFile {
            sigma_bra: sigma_bra.to_string(),
            j_bra: matrix.j_bra.to_string(),
            sigma_ket: sigma_ket.to_string(),
            j_ket: matrix.j_ket.to_string(),
            matrix: matrix
                .entries
                .chunks(cols)
                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

impl DensityBlockFile {
    pub fn from_block(b: &DensityBlock) -> Self {
        DensityBlockFile {
            sigma_bra: b.labels.sigma_bra.clone(),
            j_bra: b.labels.j_bra.to_string(),
            sigma_ket: b.labels.sigma_ket.clone(),
            j_ket: b.labels.j_ket.to_string(),
            components: b
                .components
                .iter()
                .map(|(&(tk, tkappa), z)| ComponentEntry {
                    k: HalfInt::from_twice(tk).to_string(),
                    kappa: HalfInt::from_twice(tkappa).to_string(),
                    re: z.re,
                    im: z.im,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h(s: &str) -> HalfInt {
        s.parse().unwrap()
    }

    fn labels(j_bra: &str, j_ket: &str) -> BlockLabels {
        BlockLabels {
            sigma_bra: "s".into(),
            j_bra: h(j_bra),
            sigma_ket: "s".into(),
            j_ket: h(j_ket),
        }
    }

    fn random_matrix(rng: &mut ChaCha8Rng, j_bra: HalfInt, j_ket: HalfInt) -> SublevelMatrix {
        let mut m = SublevelMatrix::zeros(j_bra, j_ket);
        for e in m.entries.iter_mut() {
            *e = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        m
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, j: HalfInt) -> SublevelMatrix {
        let m = random_matrix(rng, j, j);
        let mut out = SublevelMatrix::zeros(j, j);
        for m1 in j.projections() {
            for m2 in j.projections() {
                let v = (m.get(m1, m2) + m.get(m2, m1).conj()) * 0.5;
                out.set(m1, m2, v);
            }
        }
        out
    }

    /// Direct construction of `<(j1 j2) j' m'|rho1 x rho2|(j1 j2) j m>` by
    /// expanding both coupled states over product sublevels; the oracle the
    /// 9j pipeline must match.
    fn direct_coupled(
        rho1: &SublevelMatrix,
        rho2: &SublevelMatrix,
        j_ket: HalfInt,
        j_bra: HalfInt,
    ) -> SublevelMatrix {
        let (j1, j2) = (rho1.j_ket, rho2.j_ket);
        let mut out = SublevelMatrix::zeros(j_bra, j_ket);
        for mp in j_bra.projections() {
            for m in j_ket.projections() {
                let mut acc = Complex64::ZERO;
                for m1 in j1.projections() {
                    for m2 in j2.projections() {
                        if m1 + m2 != m {
                            continue;
                        }
                        for m1p in j1.projections() {
                            for m2p in j2.projections() {
                                if m1p + m2p != mp {
                                    continue;
                                }
                                acc += cg(j1, m1p, j2, m2p, j_bra, mp)
                                    * cg(j1, m1, j2, m2, j_ket, m)
                                    * rho1.get(m1p, m1)
                                    * rho2.get(m2p, m2);
                            }
                        }
                    }
                }
                out.set(mp, m, acc);
            }
        }
        out
    }

    #[test]
    fn maximally_mixed_is_scalar() {
        let j = h("1/2");
        let mut m = SublevelMatrix::zeros(j, j);
        for mm in j.projections() {
            m.set(mm, mm, Complex64::new(0.5, 0.0));
        }
        let block = decompose_density(&m, labels("1/2", "1/2")).unwrap();
        assert!((block.component(h("0"), h("0")) - 0.5).norm() < 1e-15);
        for (&(tk, tkap), z) in &block.components {
            if tk != 0 || tkap != 0 {
                assert!(z.norm() < 1e-15);
            }
        }
    }

    #[test]
    fn pure_up_state_components() {
        let j = h("1/2");
        let mut m = SublevelMatrix::zeros(j, j);
        m.set(h("1/2"), h("1/2"), Complex64::new(1.0, 0.0));
        let block = decompose_density(&m, labels("1/2", "1/2")).unwrap();
        // A^0_0 = 1/2 and A^1_0 = (3/2) C^{1/2 1 1/2}_{1/2 0 1/2} = sqrt(3)/2
        assert!((block.component(h("0"), h("0")) - 0.5).norm() < 1e-14);
        assert!(
            (block.component(h("1"), h("0")) - 0.75f64.sqrt()).norm() < 1e-14,
            "got {}",
            block.component(h("1"), h("0"))
        );
        assert!(block.component(h("1"), h("1")).norm() < 1e-15);
    }

    #[test]
    fn zero_density_gives_zero_components() {
        let m = SublevelMatrix::zeros(h("1"), h("1"));
        let block = decompose_density(&m, labels("1", "1")).unwrap();
        assert!(block.components.values().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn round_trip_identity_even_for_non_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (jb, jk) in [("1/2", "1/2"), ("1", "1"), ("3/2", "3/2"), ("1", "0"), ("3/2", "1/2")] {
            let m = random_matrix(&mut rng, h(jb), h(jk));
            let block = decompose_density(&m, labels(jb, jk)).unwrap();
            let back = reconstruct_density(&block);
            assert!(
                back.max_abs_diff(&m) < 1e-12,
                "block ({}, {}) off by {}",
                jb,
                jk,
                back.max_abs_diff(&m)
            );
        }
    }

    #[test]
    fn hermitian_iff_round_trip_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let j = h("3/2");
        let herm = random_hermitian(&mut rng, j);
        let block = decompose_density(&herm, labels("3/2", "3/2")).unwrap();
        assert!(reconstruct_density(&block).hermiticity_defect() < 1e-13);
        let skew = random_matrix(&mut rng, j, j);
        let block = decompose_density(&skew, labels("3/2", "3/2")).unwrap();
        assert!(reconstruct_density(&block).hermiticity_defect() > 1e-3);
    }

    #[test]
    fn coupled_identity_is_identity() {
        let j = h("1/2");
        let mut m = SublevelMatrix::zeros(j, j);
        for mm in j.projections() {
            m.set(mm, mm, Complex64::new(0.5, 0.0));
        }
        let b1 = decompose_density(&m, labels("1/2", "1/2")).unwrap();
        let b2 = b1.clone();
        for jt in ["0", "1"] {
            let coupled = couple_densities(&b1, &b2, h(jt), h(jt)).unwrap();
            let rec = reconstruct_coupled_matrix(&coupled);
            for mp in h(jt).projections() {
                for mk in h(jt).projections() {
                    let expect = if mp == mk { 0.25 } else { 0.0 };
                    assert!((rec.get(mp, mk) - expect).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn coupling_zero_gives_zero() {
        let j = h("1/2");
        let z = SublevelMatrix::zeros(j, j);
        let bz = decompose_density(&z, labels("1/2", "1/2")).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = decompose_density(&random_hermitian(&mut rng, j), labels("1/2", "1/2")).unwrap();
        let coupled = couple_densities(&bz, &b, h("1"), h("1")).unwrap();
        assert!(coupled.components.values().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn coupled_pipeline_matches_direct_tensor_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let r1 = random_hermitian(&mut rng, h("1/2"));
            let r2 = random_hermitian(&mut rng, h("1/2"));
            let b1 = decompose_density(&r1, labels("1/2", "1/2")).unwrap();
            let b2 = decompose_density(&r2, labels("1/2", "1/2")).unwrap();
            for jk in ["0", "1"] {
                for jb in ["0", "1"] {
                    let coupled = couple_densities(&b1, &b2, h(jk), h(jb)).unwrap();
                    let rec = reconstruct_coupled_matrix(&coupled);
                    let direct = direct_coupled(&r1, &r2, h(jk), h(jb));
                    assert!(
                        rec.max_abs_diff(&direct) < 1e-12,
                        "block (j'={}, j={}) off by {}",
                        jb,
                        jk,
                        rec.max_abs_diff(&direct)
                    );
                }
            }
        }
    }

    #[test]
    fn trace_multiplicativity_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r1 = random_hermitian(&mut rng, h("1/2"));
        let r2 = random_hermitian(&mut rng, h("1/2"));
        let b1 = decompose_density(&r1, labels("1/2", "1/2")).unwrap();
        let b2 = decompose_density(&r2, labels("1/2", "1/2")).unwrap();
        let mut tr = Complex64::ZERO;
        for jt in ["0", "1"] {
            let coupled = couple_densities(&b1, &b2, h(jt), h(jt)).unwrap();
            let rec = reconstruct_coupled_matrix(&coupled);
            assert!(rec.hermiticity_defect() < 1e-13);
            tr += rec.trace();
        }
        let expect = r1.trace() * r2.trace();
        assert!((tr - expect).norm() < 1e-12);
    }

    #[test]
    fn positive_inputs_stay_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        // rho = A A^dagger is positive semidefinite
        let psd = |rng: &mut ChaCha8Rng| {
            let j = h("1/2");
            let a = random_matrix(rng, j, j);
            let mut out = SublevelMatrix::zeros(j, j);
            for m1 in j.projections() {
                for m2 in j.projections() {
                    let mut acc = Complex64::ZERO;
                    for m3 in j.projections() {
                        acc += a.get(m1, m3) * a.get(m2, m3).conj();
                    }
                    out.set(m1, m2, acc);
                }
            }
            out
        };
        let r1 = psd(&mut rng);
        let r2 = psd(&mut rng);
        let b1 = decompose_density(&r1, labels("1/2", "1/2")).unwrap();
        let b2 = decompose_density(&r2, labels("1/2", "1/2")).unwrap();
        for jt in ["0", "1"] {
            let coupled = couple_densities(&b1, &b2, h(jt), h(jt)).unwrap();
            let rec = reconstruct_coupled_matrix(&coupled);
            let n = rec.rows();
            let dm = DMatrix::from_fn(n, n, |i, j| rec.entries[i * n + j]);
            let eig = dm.symmetric_eigen();
            for ev in eig.eigenvalues.iter() {
                assert!(*ev >= -1e-12, "eigenvalue {}", ev);
            }
        }
    }

    #[test]
    fn bilinearity_spot_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let r1a = random_hermitian(&mut rng, h("1/2"));
        let r1b = random_hermitian(&mut rng, h("1/2"));
        let r2 = random_hermitian(&mut rng, h("1/2"));
        let d = |m: &SublevelMatrix| decompose_density(m, labels("1/2", "1/2")).unwrap();
        let mut summed = SublevelMatrix::zeros(h("1/2"), h("1/2"));
        for m1 in h("1/2").projections() {
            for m2 in h("1/2").projections() {
                summed.set(m1, m2, r1a.get(m1, m2) + r1b.get(m1, m2));
            }
        }
        let lhs = reconstruct_coupled_matrix(
            &couple_densities(&d(&summed), &d(&r2), h("1"), h("1")).unwrap(),
        );
        let ra = reconstruct_coupled_matrix(
            &couple_densities(&d(&r1a), &d(&r2), h("1"), h("1")).unwrap(),
        );
        let rb = reconstruct_coupled_matrix(
            &couple_densities(&d(&r1b), &d(&r2), h("1"), h("1")).unwrap(),
        );
        let mut sum = SublevelMatrix::zeros(h("1"), h("1"));
        for m1 in h("1").projections() {
            for m2 in h("1").projections() {
                sum.set(m1, m2, ra.get(m1, m2) + rb.get(m1, m2));
            }
        }
        assert!(lhs.max_abs_diff(&sum) < 1e-12);
    }

    #[test]
    fn label_mismatch_is_reported() {
        let j = h("1/2");
        let z = SublevelMatrix::zeros(j, j);
        let b = decompose_density(&z, labels("1/2", "1/2")).unwrap();
        assert!(matches!(
            couple_densities(&b, &b, h("3"), h("0")),
            Err(DensityError::LabelMismatch(_))
        ));
    }

    #[test]
    fn file_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let m = random_hermitian(&mut rng, h("1"));
        let file = DensityMatrixFile::from_parts(&m, "a", "b");
        let json = serde_json::to_string(&file).unwrap();
        let back: DensityMatrixFile = serde_json::from_str(&json).unwrap();
        let (m2, lbl) = back.to_parts().unwrap();
        assert_eq!(lbl.sigma_bra, "a");
        assert!(m.max_abs_diff(&m2) == 0.0);
    }
}
