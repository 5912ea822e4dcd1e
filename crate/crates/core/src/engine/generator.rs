use nalgebra::{Complex, DMatrix};

use super::{EngineError, RecouplingMatrix};

type C64 = Complex<f64>;

/// The Hermitian generator of one compiled unitary: `U = exp(i H tau)` with
/// eigenphases on the principal branch `(-pi, pi]`.
#[derive(Clone, Debug)]
pub struct HermitianGenerator {
    pub h: DMatrix<C64>,
    pub eigenphases: Vec<f64>,
    pub tau: f64,
    q: DMatrix<C64>,
}

impl HermitianGenerator {
    /// `Q diag(e^{i phi}) Q^H`, the spectral reconstruction of the input.
    pub fn reconstruct_unitary(&self) -> DMatrix<C64> {
        let n = self.eigenphases.len();
        let d = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(0.0, self.eigenphases[i] * self.tau).exp()
            } else {
                C64::new(0.0, 0.0)
            }
        });
        &self.q * d * self.q.adjoint()
    }

    /// `max |H - H^dagger|`, a direct Hermiticity measure.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.h.adjoint();
        (&self.h - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Extract `H` with `exp(i H tau) = U` from a compiled recoupling matrix.
///
/// The input must be square and unitary within `tol`. Recoupling matrices
/// are real orthogonal, hence normal: the complex Schur form is diagonal and
/// its unitary factor carries the spectral decomposition.
pub fn hermitian_generator(
    u: &RecouplingMatrix,
    tau: f64,
    tol: f64,
) -> Result<HermitianGenerator, EngineError> {
    assert!(tau > 0.0, "time step must be positive");
    if u.rows() != u.cols() {
        return Err(EngineError::BasisMismatch(format!(
            "generator needs a square matrix, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let defect = u.unitarity_defect();
    if defect > tol {
        return Err(EngineError::NotUnitary { defect, tol });
    }
    let n = u.rows();
    let entries = u.to_f64_entries();
    let m = DMatrix::from_fn(n, n, |i, j| C64::new(entries[i * n + j], 0.0));
    if n == 0 {
        return Ok(HermitianGenerator {
            h: m.clone(),
            eigenphases: vec![],
            tau,
            q: m,
        });
    }
    let schur = m.schur();
    let (q, t) = schur.unpack();
    let eigenphases: Vec<f64> = (0..n).map(|i| t[(i, i)].arg() / tau).collect();
    let d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(eigenphases[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let h_raw = &q * d * q.adjoint();
    // symmetrize away the Schur round-off
    let h = (&h_raw + h_raw.adjoint()) * C64::new(0.5, 0.0);
    Ok(HermitianGenerator { h, eigenphases, tau, q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{
        compile_path, elementary_rotation_matrix, MatrixMode, RecouplingMatrix, SpinBinding,
    };
    use crate::engine::Basis;
    use crate::numerics::HalfInt;
    use crate::tree::CouplingTree;

    fn h(s: &str) -> HalfInt {
        s.parse().unwrap()
    }

    fn binding(spins: &[&str], j: &str) -> SpinBinding {
        SpinBinding::new(spins.iter().map(|s| h(s)).collect(), h(j)).unwrap()
    }

    /// Taylor-with-scaling matrix exponential; the reconstruction oracle kept
    /// independent of the spectral route used in production code.
    fn matrix_exp(a: &DMatrix<C64>) -> DMatrix<C64> {
        let n = a.nrows();
        let norm: f64 = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
        let squarings = norm.log2().ceil().max(0.0) as u32 + 4;
        let scaled = a * C64::new(1.0 / 2f64.powi(squarings as i32), 0.0);
        let mut term = DMatrix::<C64>::identity(n, n);
        let mut sum = DMatrix::<C64>::identity(n, n);
        for k in 1..30 {
            term = &term * &scaled * C64::new(1.0 / k as f64, 0.0);
            sum += &term;
        }
        let mut out = sum;
        for _ in 0..squarings {
            out = &out * &out;
        }
        out
    }

    fn exp_check(u: &RecouplingMatrix, tau: f64) -> f64 {
        let gen = hermitian_generator(u, tau, 1e-9).unwrap();
        assert!(gen.hermiticity_defect() < 1e-12);
        let ih = gen.h.map(|z| z * C64::new(0.0, tau));
        let rebuilt = matrix_exp(&ih);
        let n = u.rows();
        let entries = u.to_f64_entries();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((rebuilt[(i, j)] - C64::new(entries[i * n + j], 0.0)).norm());
            }
        }
        worst
    }

    #[test]
    fn identity_has_zero_generator() {
        let tree = CouplingTree::parse("((1 2) 3)").unwrap();
        let b = binding(&["1/2", "1/2", "1/2"], "1/2");
        let u = RecouplingMatrix::identity(Basis::enumerate(&tree, &b).unwrap());
        let gen = hermitian_generator(&u, 1.0, 1e-12).unwrap();
        assert!(gen.h.iter().all(|z| z.norm() < 1e-14));
        assert!(gen.eigenphases.iter().all(|p| p.abs() < 1e-14));
    }

    #[test]
    fn rotation_block_generator_reconstructs() {
        let tree = CouplingTree::parse("((1 2) 3)").unwrap();
        let b = binding(&["1/2", "1/2", "1/2"], "1/2");
        let u = elementary_rotation_matrix(&tree, 2, &b).unwrap();
        let dev = exp_check(&u, 1.0);
        assert!(dev < 1e-12, "exp reconstruction off by {}", dev);
        // 2x2 real orthogonal with det -1 has eigenphases {0, pi}
        let gen = hermitian_generator(&u, 1.0, 1e-9).unwrap();
        let mut phases = gen.eigenphases.clone();
        phases.sort_by(f64::total_cmp);
        assert!((phases[0] - 0.0).abs() < 1e-12);
        assert!((phases[1] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn reflection_eigenphase_is_principal_pi() {
        // diag(1, -1): the -1 branch picks phi = +pi, not -pi
        let tree = CouplingTree::parse("((1 2) 3)").unwrap();
        let b = binding(&["1/2", "1/2", "1/2"], "1/2");
        let twisted = compile_path(
            &[crate::tree::Move::Tw { node: 2 }],
            &tree,
            &b,
            MatrixMode::Auto,
        )
        .unwrap();
        // twist matrix is diag(-1, +1) up to basis order here
        let square = twisted.rows() == twisted.cols();
        assert!(square);
        let gen = hermitian_generator(&twisted, 1.0, 1e-9).unwrap();
        let mut phases = gen.eigenphases.clone();
        phases.sort_by(f64::total_cmp);
        assert!((phases[0]).abs() < 1e-12);
        assert!((phases[1] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn scaled_tau_scales_the_generator() {
        let tree = CouplingTree::parse("((1 2) 3)").unwrap();
        let b = binding(&["1/2", "1", "3/2"], "3/2");
        let u = elementary_rotation_matrix(&tree, 2, &b).unwrap();
        let g1 = hermitian_generator(&u, 1.0, 1e-9).unwrap();
        let g2 = hermitian_generator(&u, 2.0, 1e-9).unwrap();
        for (a, b) in g1.h.iter().zip(g2.h.iter()) {
            assert!((*a - *b * C64::new(2.0, 0.0)).norm() < 1e-12);
        }
        assert!(exp_check(&u, 2.0) < 1e-12);
    }

    #[test]
    fn non_unitary_input_is_rejected() {
        let tree = CouplingTree::parse("((1 2) 3)").unwrap();
        let b = binding(&["1/2", "1/2", "1/2"], "1/2");
        let u = elementary_rotation_matrix(&tree, 2, &b).unwrap();
        let mut bad = u.to_real(30);
        // corrupt one entry
        if let crate::engine::MatrixData::Real { entries, .. } = &mut bad.data {
            entries[0] = entries[0].add(&crate::numerics::MPReal::from_f64(0.25, 30));
        }
        assert!(matches!(
            hermitian_generator(&bad, 1.0, 1e-9),
            Err(EngineError::NotUnitary { .. })
        ));
    }
}
