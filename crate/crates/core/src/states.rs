//! Constructors for the protocol's pure states, the Bell basis, and
//! validated density matrices.
//!
//! Constructors produce real nonnegative amplitudes and validate eagerly:
//! out-of-range parameters are rejected rather than silently repaired.

use crate::error::{Error, Result};
use crate::qmat::{cholesky_psd_check, ComplexMatrix, Numerics, C64};

/// Normalized pure state over an n-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>, tol: &Numerics) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if amplitudes.len() != dim {
            return Err(Error::Dimension(format!(
                "{n_qubits}-qubit state needs {dim} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        for (k, z) in amplitudes.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: k, col: 0 });
            }
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > tol.atol {
            return Err(Error::NormNotOne { norm });
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        assert_eq!(
            self.n_qubits, other.n_qubits,
            "inner: register size mismatch"
        );
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Validated density matrix over an n-qubit register: Hermitian, unit
/// trace, and positive semidefinite, all within the policy's atol.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(n_qubits: usize, matrix: ComplexMatrix, tol: &Numerics) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if !matrix.is_square() || matrix.rows() != dim {
            return Err(Error::Dimension(format!(
                "{n_qubits}-qubit density matrix must be {dim}x{dim}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm_dev = matrix.hermiticity_deviation();
        if herm_dev > tol.atol {
            return Err(Error::NotHermitian {
                deviation: herm_dev,
            });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol.atol || trace.im.abs() > tol.atol {
            return Err(Error::TraceNotOne { trace: trace.re });
        }
        // Cholesky of (rho + atol I) succeeding certifies every eigenvalue
        // of rho exceeds -atol.
        if !cholesky_psd_check(&matrix, tol.atol) {
            return Err(Error::NotPositive);
        }
        Ok(Self { n_qubits, matrix })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    /// trace(rho^2)
    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).trace().re
    }
}

/// sqrt(a)|01> + sqrt(1-a)|10>
pub fn phi_pair(a: f64, tol: &Numerics) -> Result<PureState> {
    check_unit_interval("a", a)?;
    let amps = vec![
        C64::new(0.0, 0.0),
        C64::new(a.sqrt(), 0.0),
        C64::new((1.0 - a).sqrt(), 0.0),
        C64::new(0.0, 0.0),
    ];
    PureState::new(2, amps, tol)
}

/// sqrt(a)|10> + sqrt(1-a)|01> (the flipped partner pair)
pub fn phi_pair_flipped(a: f64, tol: &Numerics) -> Result<PureState> {
    check_unit_interval("a", a)?;
    let amps = vec![
        C64::new(0.0, 0.0),
        C64::new((1.0 - a).sqrt(), 0.0),
        C64::new(a.sqrt(), 0.0),
        C64::new(0.0, 0.0),
    ];
    PureState::new(2, amps, tol)
}

/// sqrt(A)|00> + sqrt(1-A)|11>
pub fn chi_pair(big_a: f64, tol: &Numerics) -> Result<PureState> {
    check_unit_interval("A", big_a)?;
    let amps = vec![
        C64::new(big_a.sqrt(), 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new((1.0 - big_a).sqrt(), 0.0),
    ];
    PureState::new(2, amps, tol)
}

/// The four Bell states, with the sign on the second term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellLabel {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BellLabel::PhiPlus => "Phi+",
            BellLabel::PhiMinus => "Phi-",
            BellLabel::PsiPlus => "Psi+",
            BellLabel::PsiMinus => "Psi-",
        }
    }

    pub fn sign(&self) -> f64 {
        match self {
            BellLabel::PhiPlus | BellLabel::PsiPlus => 1.0,
            BellLabel::PhiMinus | BellLabel::PsiMinus => -1.0,
        }
    }
}

impl std::fmt::Display for BellLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Phi+- = (|00> +- |11>)/sqrt(2), Psi+- = (|01> +- |10>)/sqrt(2)
pub fn bell(label: BellLabel) -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let plus = C64::new(s, 0.0);
    let signed = C64::new(s * label.sign(), 0.0);
    let amps = match label {
        BellLabel::PhiPlus | BellLabel::PhiMinus => vec![plus, z, z, signed],
        BellLabel::PsiPlus | BellLabel::PsiMinus => vec![z, plus, signed, z],
    };
    PureState {
        n_qubits: 2,
        amplitudes: amps,
    }
}

/// Outer product |s><s| as a validated density matrix.
pub fn to_density(s: &PureState, tol: &Numerics) -> Result<DensityMatrix> {
    let m = ComplexMatrix::outer(s.amplitudes(), s.amplitudes());
    DensityMatrix::new(s.n_qubits(), m, tol)
}

fn check_unit_interval(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            expected: "a real in [0, 1]",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: Numerics = Numerics::DEFAULT;

    #[test]
    fn phi_pair_boundary_and_symmetric_cases() {
        let s = phi_pair(1.0, &TOL).unwrap();
        assert_eq!(s.amplitudes()[1], C64::new(1.0, 0.0));
        let s = phi_pair(0.5, &TOL).unwrap();
        let psi_plus = bell(BellLabel::PsiPlus);
        assert!((s.inner(&psi_plus).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_pair_amplitudes_at_a_030() {
        let s = phi_pair(0.3, &TOL).unwrap();
        let a = s.amplitudes();
        assert!((a[1].re - 0.5477225575051661).abs() < 1e-12);
        assert!((a[2].re - 0.8366600265340756).abs() < 1e-12);
        assert_eq!(a[0], C64::new(0.0, 0.0));
        assert_eq!(a[3], C64::new(0.0, 0.0));
    }

    #[test]
    fn flipped_pair_swaps_basis_weights() {
        let s = phi_pair_flipped(1.0, &TOL).unwrap();
        assert_eq!(s.amplitudes()[2], C64::new(1.0, 0.0));
        assert!(
            (phi_pair_flipped(0.5, &TOL)
                .unwrap()
                .inner(&bell(BellLabel::PsiPlus))
                .norm()
                - 1.0)
                .abs()
                < 1e-15
        );

        for &a in &[0.07, 0.3, 0.62, 0.91] {
            let p = phi_pair(a, &TOL).unwrap();
            let f = phi_pair_flipped(a, &TOL).unwrap();
            assert_eq!(p.amplitudes()[1], f.amplitudes()[2]);
            assert_eq!(p.amplitudes()[2], f.amplitudes()[1]);
        }
    }

    #[test]
    fn chi_pair_values() {
        let s = chi_pair(1.0, &TOL).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        let s = chi_pair(0.5, &TOL).unwrap();
        assert!((s.inner(&bell(BellLabel::PhiPlus)).norm() - 1.0).abs() < 1e-15);
        let s = chi_pair(0.9, &TOL).unwrap();
        assert!((s.amplitudes()[0].re - 0.9486832980505138).abs() < 1e-12);
        assert!((s.amplitudes()[3].re - 0.31622776601683794).abs() < 1e-12);
    }

    #[test]
    fn bell_states_are_orthonormal() {
        for &x in &BellLabel::ALL {
            for &y in &BellLabel::ALL {
                let ip = bell(x).inner(&bell(y)).norm();
                if x == y {
                    assert!((ip - 1.0).abs() < 1e-15);
                } else {
                    assert!(ip < 1e-15);
                }
            }
        }
    }

    #[test]
    fn to_density_examples() {
        let zero = PureState::new(1, vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)], &TOL).unwrap();
        let rho = to_density(&zero, &TOL).unwrap();
        assert_eq!(rho.matrix().get(0, 0), C64::new(1.0, 0.0));
        assert_eq!(rho.matrix().get(1, 1), C64::new(0.0, 0.0));

        let psi = bell(BellLabel::PsiPlus);
        let rho = to_density(&psi, &TOL).unwrap();
        let mut half_count = 0;
        for i in 0..4 {
            for j in 0..4 {
                if (rho.matrix().get(i, j).re - 0.5).abs() < 1e-15 {
                    half_count += 1;
                }
            }
        }
        assert_eq!(half_count, 4);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constructors_reject_out_of_range() {
        assert!(phi_pair(-0.1, &TOL).is_err());
        assert!(phi_pair(1.1, &TOL).is_err());
        assert!(phi_pair(f64::NAN, &TOL).is_err());
        assert!(chi_pair(2.0, &TOL).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        // non-unit trace
        let m = ComplexMatrix::diag(&[C64::new(0.9, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(1, m, &TOL),
            Err(Error::TraceNotOne { .. })
        ));
        // non-Hermitian
        let m = ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new(0.5, 0.0),
                C64::new(0.3, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.5, 0.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            DensityMatrix::new(1, m, &TOL),
            Err(Error::NotHermitian { .. })
        ));
        // negative eigenvalue
        let m = ComplexMatrix::diag(&[C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]);
        assert!(matches!(
            DensityMatrix::new(1, m, &TOL),
            Err(Error::NotPositive)
        ));
    }

    #[test]
    fn pure_state_rejects_unnormalized() {
        let amps = vec![C64::new(0.5, 0.0), C64::new(0.5, 0.0)];
        assert!(matches!(
            PureState::new(1, amps, &TOL),
            Err(Error::NormNotOne { .. })
        ));
    }
}
