//! Kraus-operator quantum channels, applied to selected qubits of a
//! multi-qubit density matrix. Channels are kept extensionally as operator
//! lists, mirroring the map rho -> sum_mu K_mu rho K_mu^dag.

use crate::error::{Error, Result};
use crate::qmat::{embed_on_qubit, ComplexMatrix, Numerics, C64};
use crate::states::DensityMatrix;

/// A finite list of Kraus operators with a completeness certificate
/// sum K^dag K = I checked at construction.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    operators: Vec<ComplexMatrix>,
    label: String,
}

impl KrausChannel {
    pub fn new(
        operators: Vec<ComplexMatrix>,
        label: impl Into<String>,
        tol: &Numerics,
    ) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::InvalidConfig(
                "a channel needs at least one Kraus operator".into(),
            ));
        }
        let dim = operators[0].rows();
        for op in &operators {
            if !op.is_square() || op.rows() != dim {
                return Err(Error::Dimension(
                    "all Kraus operators must share one square shape".into(),
                ));
            }
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for op in &operators {
            sum = sum.add(&op.dagger().matmul(op));
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if dev > tol.atol {
            return Err(Error::CompletenessViolation { deviation: dev });
        }
        Ok(Self {
            operators,
            label: label.into(),
        })
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Max-norm deviation of sum K^dag K from the identity.
    pub fn completeness_deviation(&self) -> f64 {
        let dim = self.operators[0].rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for op in &self.operators {
            sum = sum.add(&op.dagger().matmul(op));
        }
        sum.max_abs_diff(&ComplexMatrix::identity(dim))
    }

    /// Apply the channel to one qubit of a multi-qubit state.
    pub fn apply(
        &self,
        rho: &DensityMatrix,
        target: usize,
        tol: &Numerics,
    ) -> Result<DensityMatrix> {
        let n = rho.n_qubits();
        if target >= n {
            return Err(Error::QubitOutOfRange {
                index: target,
                n_qubits: n,
            });
        }
        let dim = rho.dim();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for op in &self.operators {
            let full = embed_on_qubit(op, n, target)?;
            out = out.add(&full.matmul(rho.matrix()).matmul(&full.dagger()));
        }
        DensityMatrix::new(n, out, tol)
    }

    /// Apply the same single-qubit channel independently to both qubits of a
    /// two-qubit state (the order commutes).
    pub fn apply_local_pair(&self, rho: &DensityMatrix, tol: &Numerics) -> Result<DensityMatrix> {
        if rho.n_qubits() != 2 {
            return Err(Error::Dimension(format!(
                "apply_local_pair expects a 2-qubit state, got {} qubits",
                rho.n_qubits()
            )));
        }
        let once = self.apply(rho, 0, tol)?;
        self.apply(&once, 1, tol)
    }
}

/// Amplitude damping with decay probability p:
/// K1 = |0><0| + sqrt(1-p)|1><1|, K2 = sqrt(p)|0><1|.
pub fn amplitude_damping(p: f64, tol: &Numerics) -> Result<KrausChannel> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            expected: "a real in [0, 1]",
        });
    }
    let zero = C64::new(0.0, 0.0);
    let k1 = ComplexMatrix::new(
        2,
        2,
        vec![
            C64::new(1.0, 0.0),
            zero,
            zero,
            C64::new((1.0 - p).sqrt(), 0.0),
        ],
    )?;
    let k2 = ComplexMatrix::new(2, 2, vec![zero, C64::new(p.sqrt(), 0.0), zero, zero])?;
    KrausChannel::new(vec![k1, k2], format!("AD(p={p})"), tol)
}

/// Distinct channels per qubit; entry i is applied to qubit i. Supports
/// heterogeneous damping probabilities, unused by the symmetric protocol.
pub fn apply_per_qubit(
    channels: &[&KrausChannel],
    rho: &DensityMatrix,
    tol: &Numerics,
) -> Result<DensityMatrix> {
    if channels.len() != rho.n_qubits() {
        return Err(Error::Dimension(format!(
            "need one channel per qubit: got {} channels for {} qubits",
            channels.len(),
            rho.n_qubits()
        )));
    }
    let mut out = rho.clone();
    for (q, ch) in channels.iter().enumerate() {
        out = ch.apply(&out, q, tol)?;
    }
    Ok(out)
}
