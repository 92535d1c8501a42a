//! Closed-form states and probabilities for the protocol families. These
//! live beside the exact simulator and every one of them is cross-validated
//! against it; neither route is trusted alone.

use crate::entanglement::phi_roundn_weights;
use crate::error::{Error, Result};
use crate::measure::WeakSign;
use crate::qmat::{ComplexMatrix, C64};
use crate::states::BellLabel;

fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            expected: "a real in [0, 1]",
        });
    }
    Ok(())
}

fn require_psi(label: BellLabel) -> Result<f64> {
    match label {
        BellLabel::PsiPlus => Ok(1.0),
        BellLabel::PsiMinus => Ok(-1.0),
        _ => Err(Error::InvalidConfig(
            "closed forms are printed for the Psi+- branches only".into(),
        )),
    }
}

/// Real X-structured matrix: diagonal plus the (01,10) and (00,11)
/// coherences.
fn x_state(diag: [f64; 4], coh_mid: f64, coh_corner: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (i, d) in diag.into_iter().enumerate() {
        m.set(i, i, C64::new(d, 0.0));
    }
    m.set(1, 2, C64::new(coh_mid, 0.0));
    m.set(2, 1, C64::new(coh_mid, 0.0));
    m.set(0, 3, C64::new(coh_corner, 0.0));
    m.set(3, 0, C64::new(coh_corner, 0.0));
    m
}

/// Mixture sqrt(c)|01> + s*sqrt(1-c)|10> as a projector matrix.
fn weighted_pair_projector(c: f64, sign: f64) -> ComplexMatrix {
    let amp01 = c.sqrt();
    let amp10 = sign * (1.0 - c).sqrt();
    x_state([0.0, c, 1.0 - c, 0.0], amp01 * amp10, 0.0)
}

/// The damped phi input pair p|00><00| + (1-p)|phi><phi| with
/// phi = sqrt(a)|01> + sqrt(1-a)|10> (or the flipped partner).
pub fn phi_input_pair(a: f64, p: f64, flipped: bool) -> Result<ComplexMatrix> {
    check_unit("a", a)?;
    check_unit("p", p)?;
    let c = if flipped { 1.0 - a } else { a };
    let mut m = weighted_pair_projector(c, 1.0).scale_re(1.0 - p);
    m.set(0, 0, m.get(0, 0) + C64::new(p, 0.0));
    Ok(m)
}

/// The damped chi input pair:
/// [A + (1-A)p^2]|00><00| + (1-A)p(1-p)(|01><01| + |10><10|)
/// + (1-A)(1-p)^2|11><11| + (1-p)sqrt(A(1-A))(|00><11| + h.c.).
pub fn chi_input_pair(big_a: f64, p: f64) -> Result<ComplexMatrix> {
    check_unit("A", big_a)?;
    check_unit("p", p)?;
    let q = 1.0 - p;
    Ok(x_state(
        [
            big_a + (1.0 - big_a) * p * p,
            (1.0 - big_a) * p * q,
            (1.0 - big_a) * p * q,
            (1.0 - big_a) * q * q,
        ],
        0.0,
        q * (big_a * (1.0 - big_a)).sqrt(),
    ))
}

/// Post-swap Alice-Charlie state for the symmetric phi family on a Psi+-
/// outcome: (2p(1-p)a|00><00| + 2(1-p)^2 a(1-a)|Psi><Psi|)/N.
/// Returns (branch probability N/2, normalized state).
pub fn phi_swap_state(a: f64, p: f64, label: BellLabel) -> Result<(f64, ComplexMatrix)> {
    check_unit("a", a)?;
    check_unit("p", p)?;
    let sign = require_psi(label)?;
    let q = 1.0 - p;
    let w00 = 2.0 * p * q * a;
    let wpsi = 2.0 * q * q * a * (1.0 - a);
    let n = w00 + wpsi;
    if n <= 0.0 {
        return Err(Error::NoEntanglement("degenerate swap normalizer".into()));
    }
    let mut m = x_state([w00, wpsi / 2.0, wpsi / 2.0, 0.0], sign * wpsi / 2.0, 0.0);
    m = m.scale_re(1.0 / n);
    Ok((n / 2.0, m))
}

/// Post-swap state for an asymmetric second pair (weight a_prime):
/// (1/M)(p(1-p)(a+a')|00><00| + (1-p)^2 a(1-a')|01><01|
///  + (1-p)^2 a'(1-a)|10><10| +- (1-p)^2 sqrt(aa'(1-a)(1-a')) (|01><10|+h.c.)).
///
/// Returns (branch probability M/2, normalized state).
pub fn phi_asymmetric_swap_state(
    a: f64,
    a_prime: f64,
    p: f64,
    label: BellLabel,
) -> Result<(f64, ComplexMatrix)> {
    check_unit("a", a)?;
    check_unit("a'", a_prime)?;
    check_unit("p", p)?;
    let sign = require_psi(label)?;
    let q2 = (1.0 - p) * (1.0 - p);
    let w00 = p * (1.0 - p) * (a + a_prime);
    let w01 = q2 * a * (1.0 - a_prime);
    let w10 = q2 * a_prime * (1.0 - a);
    let coh = q2 * (a * a_prime * (1.0 - a) * (1.0 - a_prime)).sqrt();
    let m_norm = w00 + w01 + w10;
    if m_norm <= 0.0 {
        return Err(Error::NoEntanglement(
            "degenerate asymmetric swap normalizer".into(),
        ));
    }
    let m = x_state([w00, w01, w10, 0.0], sign * coh, 0.0).scale_re(1.0 / m_norm);
    Ok((m_norm / 2.0, m))
}

/// The swapped state after a weak measurement of strength b on one qubit:
/// (2p(1-p)a c|00><00| + (1-p)^2 a(1-a)|v><v|)/N_c with c = b for M+ and
/// c = 1-b for M-, and |v| the re-weighted pair (flipped when the measured
/// qubit is Charlie's). Returns (branch probability N_c/N, normalized state).
pub fn phi_weak_state(
    a: f64,
    p: f64,
    b: f64,
    label: BellLabel,
    sign: WeakSign,
    measured_qubit: usize,
) -> Result<(f64, ComplexMatrix)> {
    check_unit("a", a)?;
    check_unit("p", p)?;
    if !b.is_finite() || b <= 0.0 || b >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            expected: "a real in (0, 1)",
        });
    }
    if measured_qubit > 1 {
        return Err(Error::QubitOutOfRange {
            index: measured_qubit,
            n_qubits: 2,
        });
    }
    let bell_sign = require_psi(label)?;
    let c = match sign {
        WeakSign::Plus => b,
        WeakSign::Minus => 1.0 - b,
    };
    let q = 1.0 - p;
    let w00 = 2.0 * p * q * a * c;
    let wv = q * q * a * (1.0 - a);
    let n_c = w00 + wv;
    let n = 2.0 * p * q * a + 2.0 * q * q * a * (1.0 - a);
    if n_c <= 0.0 || n <= 0.0 {
        return Err(Error::NoEntanglement(
            "degenerate weak-measurement normalizer".into(),
        ));
    }
    // Measuring qubit 0 keeps sqrt(c)|01> + sqrt(1-c)|10>; measuring qubit 1
    // flips the weights.
    let pair_weight = if measured_qubit == 0 { c } else { 1.0 - c };
    let mut m = weighted_pair_projector(pair_weight, bell_sign).scale_re(wv);
    m.set(0, 0, m.get(0, 0) + C64::new(w00, 0.0));
    Ok((n_c / n, m.scale_re(1.0 / n_c)))
}

/// The n-round chain state (a_n|00><00| + 2 b_n |Psi><Psi|)/(a_n + 2 b_n)
/// from the closed-form weights (both-M+ policy).
pub fn phi_roundn_state(a: f64, p: f64, b: f64, n: u32, label: BellLabel) -> Result<ComplexMatrix> {
    let sign = require_psi(label)?;
    let (a_n, b_n) = phi_roundn_weights(a, p, b, n)?;
    let norm = a_n + 2.0 * b_n;
    let m = x_state(
        [a_n / norm, b_n / norm, b_n / norm, 0.0],
        sign * b_n / norm,
        0.0,
    );
    Ok(m)
}

/// Post-swap Alice-Charlie state for the chi family on a Psi+- outcome.
/// Returns (branch probability = projector trace, normalized state).
pub fn chi_swap_state(big_a: f64, p: f64, label: BellLabel) -> Result<(f64, ComplexMatrix)> {
    check_unit("A", big_a)?;
    check_unit("p", p)?;
    let sign = require_psi(label)?;
    let q = 1.0 - p;
    let r = 1.0 - big_a;
    let u00 = r * p * q * (big_a + r * p * p);
    let umid = 0.5 * r * q * q * (big_a + 2.0 * r * p * p);
    let u11 = r * r * p * q * q * q;
    let coh = 0.5 * r * big_a * q * q;
    let prob = u00 + 2.0 * umid + u11;
    if prob <= 0.0 {
        return Err(Error::NoEntanglement(
            "degenerate chi swap normalizer".into(),
        ));
    }
    let m = x_state([u00, umid, umid, u11], sign * coh, 0.0).scale_re(1.0 / prob);
    Ok((prob, m))
}

/// The chi post-swap state after weak measurements of strength b on both
/// qubits: the |00> weight scales by c^2, the central block (diagonal and
/// coherence together) by c(1-c), and the |11> weight by (1-c)^2, with
/// c = b for both-M+ and c = 1-b for both-M-.
/// Returns (joint weak branch probability, normalized state).
pub fn chi_weak_state(
    big_a: f64,
    p: f64,
    b: f64,
    label: BellLabel,
    sign: WeakSign,
) -> Result<(f64, ComplexMatrix)> {
    if !b.is_finite() || b <= 0.0 || b >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            expected: "a real in (0, 1)",
        });
    }
    let (_, base) = chi_swap_state(big_a, p, label)?;
    let c = match sign {
        WeakSign::Plus => b,
        WeakSign::Minus => 1.0 - b,
    };
    let scale = [c * c, c * (1.0 - c), c * (1.0 - c), (1.0 - c) * (1.0 - c)];
    let mut m = ComplexMatrix::zeros(4, 4);
    for (i, &s) in scale.iter().enumerate() {
        m.set(i, i, base.get(i, i) * s);
    }
    m.set(1, 2, base.get(1, 2) * c * (1.0 - c));
    m.set(2, 1, base.get(2, 1) * c * (1.0 - c));
    let prob = m.trace().re;
    if prob <= 0.0 {
        return Err(Error::NoEntanglement(
            "degenerate chi weak normalizer".into(),
        ));
    }
    Ok((prob, m.scale_re(1.0 / prob)))
}
