//! Projective Bell measurement on a chosen qubit pair and weak
//! nondestructive measurements on a single qubit. Every outcome branch is
//! computed exactly; nothing is sampled.

use crate::error::{Error, Result};
use crate::qmat::{embed_on_qubit, partial_trace, qubit_bit, ComplexMatrix, Numerics, C64};
use crate::states::{bell, BellLabel, DensityMatrix};

/// One measurement branch. `post_state` is `None` for branches whose
/// probability is below atol (flagged zero branches) and for measurements
/// that consume the whole register.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub label: String,
    pub probability: f64,
    pub post_state: Option<DensityMatrix>,
}

/// Sign choice for a weak measurement branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakSign {
    Plus,
    Minus,
}

impl WeakSign {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeakSign::Plus => "M+",
            WeakSign::Minus => "M-",
        }
    }
}

impl std::fmt::Display for WeakSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The weak measurement pair
/// M+ = sqrt(b)|0><0| + sqrt(1-b)|1><1|,
/// M- = sqrt(1-b)|0><0| + sqrt(b)|1><1|,
/// with M+^dag M+ + M-^dag M- = I.
#[derive(Debug, Clone)]
pub struct WeakMeasurement {
    pub b: f64,
    pub m_plus: ComplexMatrix,
    pub m_minus: ComplexMatrix,
}

impl WeakMeasurement {
    /// b in the open interval (0, 1); the endpoints degenerate into
    /// projective measurements and are rejected.
    pub fn new(b: f64) -> Result<Self> {
        if !b.is_finite() || b <= 0.0 || b >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "b",
                value: b,
                expected: "a real strictly inside (0, 1)",
            });
        }
        let zero = C64::new(0.0, 0.0);
        let m_plus = ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new(b.sqrt(), 0.0),
                zero,
                zero,
                C64::new((1.0 - b).sqrt(), 0.0),
            ],
        )?;
        let m_minus = ComplexMatrix::new(
            2,
            2,
            vec![
                C64::new((1.0 - b).sqrt(), 0.0),
                zero,
                zero,
                C64::new(b.sqrt(), 0.0),
            ],
        )?;
        Ok(Self { b, m_plus, m_minus })
    }

    pub fn operator(&self, sign: WeakSign) -> &ComplexMatrix {
        match sign {
            WeakSign::Plus => &self.m_plus,
            WeakSign::Minus => &self.m_minus,
        }
    }

    pub fn completeness_deviation(&self) -> f64 {
        let sum = self
            .m_plus
            .dagger()
            .matmul(&self.m_plus)
            .add(&self.m_minus.dagger().matmul(&self.m_minus));
        sum.max_abs_diff(&ComplexMatrix::identity(2))
    }
}

/// Projector onto a Bell state of qubits (i, j), embedded in the full
/// register (identity on every other qubit).
pub fn bell_projector(
    label: BellLabel,
    n_qubits: usize,
    pair: (usize, usize),
) -> Result<ComplexMatrix> {
    let (i, j) = pair;
    if i >= n_qubits {
        return Err(Error::QubitOutOfRange { index: i, n_qubits });
    }
    if j >= n_qubits {
        return Err(Error::QubitOutOfRange { index: j, n_qubits });
    }
    if i == j {
        return Err(Error::Dimension(
            "bell measurement needs two distinct qubits".into(),
        ));
    }
    let c = bell(label);
    let amps = c.amplitudes();
    let dim = 1usize << n_qubits;
    let rest_mask: usize = (0..n_qubits)
        .filter(|&q| q != i && q != j)
        .map(|q| 1usize << (n_qubits - 1 - q))
        .sum();
    let mut p = ComplexMatrix::zeros(dim, dim);
    for k in 0..dim {
        let ck = amps[qubit_bit(k, n_qubits, i) * 2 + qubit_bit(k, n_qubits, j)];
        if ck.norm() == 0.0 {
            continue;
        }
        for l in 0..dim {
            if (k & rest_mask) != (l & rest_mask) {
                continue;
            }
            let cl = amps[qubit_bit(l, n_qubits, i) * 2 + qubit_bit(l, n_qubits, j)];
            p.set(k, l, ck * cl.conj());
        }
    }
    Ok(p)
}

/// Measure qubits (i, j) in the Bell basis. Returns all four branches in
/// the order Psi+, Psi-, Phi+, Phi-. Each post-state is the reduced state
/// of the unmeasured qubits (measured pair traced out); branch states are
/// independent of the order the pair is listed in.
pub fn bell_measure(
    rho: &DensityMatrix,
    pair: (usize, usize),
    tol: &Numerics,
) -> Result<Vec<MeasurementOutcome>> {
    let n = rho.n_qubits();
    if n < 2 {
        return Err(Error::Dimension(
            "bell_measure needs at least two qubits".into(),
        ));
    }
    let keep: Vec<usize> = (0..n).filter(|&q| q != pair.0 && q != pair.1).collect();
    let mut outcomes = Vec::with_capacity(4);
    for &label in &BellLabel::ALL {
        let p = bell_projector(label, n, pair)?;
        let projected = p.matmul(rho.matrix()).matmul(&p);
        let probability = projected.trace().re;
        let post_state = if probability > tol.atol && !keep.is_empty() {
            let reduced = partial_trace(&projected, n, &keep)?.scale_re(1.0 / probability);
            Some(DensityMatrix::new(keep.len(), reduced, tol)?)
        } else {
            None
        };
        outcomes.push(MeasurementOutcome {
            label: label.as_str().to_string(),
            probability: probability.max(0.0),
            post_state,
        });
    }
    Ok(outcomes)
}

/// Weak measurement of strength b on one qubit. Returns the M+ branch then
/// the M- branch; the register keeps its size (nondestructive).
pub fn weak_measure(
    rho: &DensityMatrix,
    target: usize,
    b: f64,
    tol: &Numerics,
) -> Result<Vec<MeasurementOutcome>> {
    let wm = WeakMeasurement::new(b)?;
    let mut outcomes = Vec::with_capacity(2);
    for sign in [WeakSign::Plus, WeakSign::Minus] {
        outcomes.push(weak_branch(rho, target, &wm, sign, tol)?);
    }
    Ok(outcomes)
}

/// A single weak-measurement branch (the caller picks the sign).
pub fn weak_branch(
    rho: &DensityMatrix,
    target: usize,
    wm: &WeakMeasurement,
    sign: WeakSign,
    tol: &Numerics,
) -> Result<MeasurementOutcome> {
    let n = rho.n_qubits();
    if target >= n {
        return Err(Error::QubitOutOfRange {
            index: target,
            n_qubits: n,
        });
    }
    let full = embed_on_qubit(wm.operator(sign), n, target)?;
    let raw = full.matmul(rho.matrix()).matmul(&full.dagger());
    let probability = raw.trace().re;
    let post_state = if probability > tol.atol {
        Some(DensityMatrix::new(n, raw.scale_re(1.0 / probability), tol)?)
    } else {
        None
    };
    Ok(MeasurementOutcome {
        label: sign.as_str().to_string(),
        probability: probability.max(0.0),
        post_state,
    })
}
