//! Large-spin asymptotics of the 6j symbol: the tetrahedral amplitude
//! `(12 pi V)^(-1/2) cos(sum_r l_r theta_r + pi/4)` with edge lengths
//! `l_r = j_r + 1/2`, and the exact-versus-asymptotic convergence study.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::numerics::HalfInt;
use crate::wigner::{wigner6j, SixJArgs};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("edge lengths must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("edge lengths do not span a Euclidean tetrahedron (Cayley-Menger {0} <= 0)")]
    Inadmissible(f64),
}

/// Euclidean tetrahedron spanned by six edge lengths in 6j order
/// `{l1 l2 l3 / l4 l5 l6}`: the face (l1,l2,l3) and opposite pairs
/// (l1,l4), (l2,l5), (l3,l6).
///
/// Vertex picture: AB=l1, AC=l2, BC=l3, CD=l4, BD=l5, AD=l6.
#[derive(Clone, Debug)]
pub struct Tetrahedron {
    pub lengths: [f64; 6],
    pub volume: f64,
    /// Outward-normal dihedral angles: pi minus the interior angle at each edge.
    pub dihedrals: [f64; 6],
    vertices: [[f64; 3]; 4],
}

/// Cayley-Menger determinant of the four points (with V^2 = CM / 288).
fn cayley_menger(sq: &[f64; 6]) -> f64 {
    let [l1, l2, l3, l4, l5, l6] = *sq;
    // rows/cols: affine 1s then A, B, C, D
    let m = [
        [0.0, 1.0, 1.0, 1.0, 1.0],
        [1.0, 0.0, l1, l2, l6],
        [1.0, l1, 0.0, l3, l5],
        [1.0, l2, l3, 0.0, l4],
        [1.0, l6, l5, l4, 0.0],
    ];
    det5(m)
}

fn det5(m: [[f64; 5]; 5]) -> f64 {
    // Gaussian elimination with partial pivoting
    let mut a = m;
    let mut det = 1.0;
    for col in 0..5 {
        let mut piv = col;
        for row in col + 1..5 {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..5 {
            let f = a[row][col] / a[col][col];
            for k in col..5 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}

/// Exact Cayley-Menger sign for rational edge lengths; used when the
/// floating determinant sits too close to zero to trust.
fn cayley_menger_sign_exact(lengths: &[BigRational; 6]) -> i8 {
    let sq: Vec<BigRational> = lengths.iter().map(|l| l * l).collect();
    let one = BigRational::from(BigInt::from(1));
    let zero = BigRational::zero();
    let idx = |r: usize, c: usize, m: &[Vec<BigRational>]| m[r][c].clone();
    let mut m: Vec<Vec<BigRational>> = vec![
        vec![zero.clone(), one.clone(), one.clone(), one.clone(), one.clone()],
        vec![one.clone(), zero.clone(), sq[0].clone(), sq[1].clone(), sq[5].clone()],
        vec![one.clone(), sq[0].clone(), zero.clone(), sq[2].clone(), sq[4].clone()],
        vec![one.clone(), sq[1].clone(), sq[2].clone(), zero.clone(), sq[3].clone()],
        vec![one.clone(), sq[5].clone(), sq[4].clone(), sq[3].clone(), zero.clone()],
    ];
    // fraction-free-ish elimination on rationals
    let mut sign = 1i8;
    let mut det = one.clone();
    for col in 0..5 {
        let mut piv = None;
        for row in col..5 {
            if !idx(row, col, &m).is_zero() {
                piv = Some(row);
                break;
            }
        }
        let piv = match piv {
            Some(p) => p,
            None => return 0,
        };
        if piv != col {
            m.swap(piv, col);
            sign = -sign;
        }
        det *= idx(col, col, &m);
        for row in col + 1..5 {
            let f = idx(row, col, &m) / idx(col, col, &m);
            for k in col..5 {
                let sub = &f * &m[col][k];
                m[row][k] -= sub;
            }
        }
    }
    let s = if det.is_negative() { -1 } else if det.is_zero() { 0 } else { 1 };
    s * if sign < 0 { -1 } else { 1 }
}

impl Tetrahedron {
    pub fn from_lengths(lengths: [f64; 6]) -> Result<Self, GeometryError> {
        Self::build(lengths, None)
    }

    /// Geometry from 6j arguments via `l_r = j_r + 1/2`; the Cayley-Menger
    /// sign is decided exactly when the floating value is ambiguous.
    pub fn from_spins(args: &SixJArgs) -> Result<Self, GeometryError> {
        let spins = [
            args.row1[0], args.row1[1], args.row1[2],
            args.row2[0], args.row2[1], args.row2[2],
        ];
        let mut lengths = [0.0; 6];
        let mut exact = [(); 6].map(|_| BigRational::zero());
        for (i, s) in spins.iter().enumerate() {
            lengths[i] = s.twice() as f64 / 2.0 + 0.5;
            exact[i] = BigRational::new(BigInt::from(s.twice() + 1), BigInt::from(2));
        }
        Self::build(lengths, Some(exact))
    }

    fn build(lengths: [f64; 6], exact: Option<[BigRational; 6]>) -> Result<Self, GeometryError> {
        for &l in &lengths {
            if !(l > 0.0) {
                return Err(GeometryError::NonPositiveLength(l));
            }
        }
        let sq = lengths.map(|l| l * l);
        let cm = cayley_menger(&sq);
        let scale: f64 = sq.iter().fold(1.0f64, |acc, s| acc.max(*s));
        let admissible = if cm.abs() < 1e-9 * scale.powi(5) {
            match &exact {
                Some(ls) => cayley_menger_sign_exact(ls) > 0,
                None => cm > 0.0,
            }
        } else {
            cm > 0.0
        };
        if !admissible {
            return Err(GeometryError::Inadmissible(cm));
        }
        let volume = (cm / 288.0).sqrt();

        // coordinate embedding: A at the origin, B on x, C in the xy plane
        let [l1, l2, l3, l4, l5, l6] = lengths;
        let a = [0.0, 0.0, 0.0];
        let b = [l1, 0.0, 0.0];
        let cx = (l1 * l1 + l2 * l2 - l3 * l3) / (2.0 * l1);
        let cy = (l2 * l2 - cx * cx).max(0.0).sqrt();
        let c = [cx, cy, 0.0];
        let dx = (l1 * l1 + l6 * l6 - l5 * l5) / (2.0 * l1);
        let dy = (cx * cx + cy * cy + l6 * l6 - l4 * l4 - 2.0 * dx * cx) / (2.0 * cy);
        let dz = (l6 * l6 - dx * dx - dy * dy).max(0.0).sqrt();
        let d = [dx, dy, dz];
        let vertices = [a, b, c, d];

        // interior dihedral at each edge, then flip to the outward-normal angle
        let edge_vertices: [(usize, usize, usize, usize); 6] = [
            (0, 1, 2, 3), // AB: faces ABC, ABD
            (0, 2, 1, 3), // AC
            (1, 2, 0, 3), // BC
            (2, 3, 0, 1), // CD
            (1, 3, 0, 2), // BD
            (0, 3, 1, 2), // AD
        ];
        let mut dihedrals = [0.0; 6];
        for (i, &(p, q, r, s)) in edge_vertices.iter().enumerate() {
            let interior = interior_dihedral(vertices[p], vertices[q], vertices[r], vertices[s]);
            dihedrals[i] = std::f64::consts::PI - interior;
        }
        Ok(Tetrahedron { lengths, volume, dihedrals, vertices })
    }

    /// |det[B-A, C-A, D-A]| / 6 from the embedded coordinates; a cross-check
    /// route against the Cayley-Menger volume.
    pub fn embedded_volume(&self) -> f64 {
        let [a, b, c, d] = self.vertices;
        let u = sub(b, a);
        let v = sub(c, a);
        let w = sub(d, a);
        (dot(u, cross(v, w)) / 6.0).abs()
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Interior dihedral along edge PQ between faces PQR and PQS.
fn interior_dihedral(p: [f64; 3], q: [f64; 3], r: [f64; 3], s: [f64; 3]) -> f64 {
    let u = sub(q, p);
    let un = norm(u);
    let u = [u[0] / un, u[1] / un, u[2] / un];
    let project = |v: [f64; 3]| {
        let t = dot(v, u);
        [v[0] - t * u[0], v[1] - t * u[1], v[2] - t * u[2]]
    };
    let v1 = project(sub(r, p));
    let v2 = project(sub(s, p));
    norm(cross(v1, v2)).atan2(dot(v1, v2))
}

/// Convenience: tetrahedron volume from raw lengths, or the inadmissibility error.
pub fn tetra_volume(lengths: [f64; 6]) -> Result<f64, GeometryError> {
    Tetrahedron::from_lengths(lengths).map(|t| t.volume)
}

pub fn dihedral_angles(lengths: [f64; 6]) -> Result<[f64; 6], GeometryError> {
    Tetrahedron::from_lengths(lengths).map(|t| t.dihedrals)
}

/// The asymptotic estimate `(12 pi V)^(-1/2) cos(sum l_r theta_r + pi/4)`.
pub fn pr_estimate(args: &SixJArgs) -> Result<f64, GeometryError> {
    let tetra = Tetrahedron::from_spins(args)?;
    Ok(envelope_of(&tetra) * phase_of(&tetra).cos())
}

/// The amplitude envelope `(12 pi V)^(-1/2)` alone.
pub fn pr_envelope(args: &SixJArgs) -> Result<f64, GeometryError> {
    Tetrahedron::from_spins(args).map(|t| envelope_of(&t))
}

fn envelope_of(t: &Tetrahedron) -> f64 {
    1.0 / (12.0 * std::f64::consts::PI * t.volume).sqrt()
}

fn phase_of(t: &Tetrahedron) -> f64 {
    let action: f64 = t
        .lengths
        .iter()
        .zip(t.dihedrals.iter())
        .map(|(l, th)| l * th)
        .sum();
    action + std::f64::consts::PI / 4.0
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct PrRow {
    pub lambda: u32,
    pub exact: f64,
    pub estimate: f64,
    pub envelope: f64,
    pub abs_err: f64,
    /// |exact - estimate| relative to the envelope amplitude.
    pub rel_env_err: f64,
    /// Scales of order one are outside the asymptotic regime.
    pub reliable: bool,
}

#[derive(Clone, Debug)]
pub struct PrTable {
    pub base: SixJArgs,
    pub rows: Vec<PrRow>,
}

/// Exact-versus-asymptotic comparison along the scaled family
/// `lambda * base_spins`.
pub fn pr_compare(base: &SixJArgs, scales: &[u32]) -> Result<PrTable, GeometryError> {
    let mut rows = Vec::with_capacity(scales.len());
    for &lambda in scales {
        let scaled = SixJArgs::new(
            base.row1.map(|j| j.scale(lambda as i32)),
            base.row2.map(|j| j.scale(lambda as i32)),
        );
        let exact = wigner6j(scaled).to_f64();
        let estimate = pr_estimate(&scaled)?;
        let envelope = pr_envelope(&scaled)?;
        let abs_err = (exact - estimate).abs();
        rows.push(PrRow {
            lambda,
            exact,
            estimate,
            envelope,
            abs_err,
            rel_env_err: abs_err / envelope,
            reliable: lambda >= 2,
        });
    }
    Ok(PrTable { base: *base, rows })
}

impl PrTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,exact,estimate,abs_err,rel_env_err\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.15e},{:.15e},{:.6e},{:.6e}\n",
                r.lambda, r.exact, r.estimate, r.abs_err, r.rel_env_err
            ));
        }
        out
    }

    /// Least-squares slope of log(envelope) versus log(lambda).
    pub fn log_envelope_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.envelope > 0.0)
            .map(|r| ((r.lambda as f64).ln(), r.envelope.ln()))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}

/// Six equal spins `j = lambda`: the equilateral family of the convergence
/// study.
pub fn equilateral(lambda: u32) -> SixJArgs {
    let j = HalfInt::from_int(lambda as i32);
    SixJArgs::new([j; 3], [j; 3])
}
