//! Entanglement quantification: the concurrence for arbitrary two-qubit
//! density matrices, the protocol's closed-form concurrences, and a
//! fully-entangled-fraction helper.
//!
//! Closed forms live beside the general solver and are cross-validated
//! against it; neither route is trusted alone.

use crate::error::{Error, Result};
use crate::qmat::{eigenvalues, kron, ComplexMatrix, Numerics, C64};
use crate::states::DensityMatrix;

/// Concurrence value together with the audited spectrum of rho * rho_tilde.
#[derive(Debug, Clone)]
pub struct ConcurrenceReport {
    /// max(0, sqrt(l1) - sqrt(l2) - sqrt(l3) - sqrt(l4)), clamped to [0, 1].
    pub value: f64,
    /// The four clamped eigenvalues in descending order.
    pub lambdas: [f64; 4],
    /// Whether the negative clamp fired on any eigenvalue.
    pub clamped: bool,
}

pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::new(
        2,
        2,
        vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
    .expect("static 2x2")
}

/// The spin-flipped state sigma_y (x) sigma_y rho* sigma_y (x) sigma_y.
pub fn spin_flip(rho: &ComplexMatrix) -> ComplexMatrix {
    let syy = kron(&sigma_y(), &sigma_y());
    syy.matmul(&rho.conjugate()).matmul(&syy)
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// Eigenvalues of rho * rho_tilde with real part in [-atol, 0) are clamped
/// to zero; anything more negative, or an imaginary part beyond atol,
/// signals an upstream bug and is an error.
pub fn concurrence(rho: &DensityMatrix, tol: &Numerics) -> Result<ConcurrenceReport> {
    if rho.n_qubits() != 2 {
        return Err(Error::Dimension(format!(
            "concurrence is defined for 2-qubit states, got {} qubits",
            rho.n_qubits()
        )));
    }
    let product = rho.matrix().matmul(&spin_flip(rho.matrix()));
    let spectrum = eigenvalues(&product, tol)?;
    let noise_floor = tol.eig_zero_floor * product.max_abs().max(1.0);

    let mut lambdas = [0.0f64; 4];
    let mut clamped = false;
    for (k, z) in spectrum.eigenvalues.iter().enumerate() {
        if z.im.abs() > tol.atol {
            return Err(Error::EigenvalueBeyondClamp { value: z.im });
        }
        let re = z.re;
        if re < -tol.atol {
            return Err(Error::EigenvalueBeyondClamp { value: re });
        }
        if re < 0.0 {
            clamped = true;
        }
        lambdas[k] = if re.abs() <= noise_floor {
            0.0
        } else {
            re.max(0.0)
        };
    }
    // Descending real part is guaranteed by the solver; keep the clamped
    // values sorted as well.
    lambdas.sort_by(|x, y| y.total_cmp(x));

    let roots: Vec<f64> = lambdas.iter().map(|l| l.sqrt()).collect();
    let raw = roots[0] - roots[1] - roots[2] - roots[3];
    let mut value = raw.max(0.0);
    if value > 1.0 + tol.atol {
        return Err(Error::EigenvalueBeyondClamp { value });
    }
    value = value.min(1.0);
    Ok(ConcurrenceReport {
        value,
        lambdas,
        clamped,
    })
}

fn check_open_unit(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || v <= 0.0 || v >= 1.0 {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            expected: "a real in (0, 1)",
        });
    }
    Ok(())
}

fn check_damping(p: f64) -> Result<()> {
    if !p.is_finite() || !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            expected: "a real in [0, 1)",
        });
    }
    Ok(())
}

/// Concurrence of the damped input pair: 2(1-p) sqrt(a(1-a)).
pub fn concurrence_phi_initial(a: f64, p: f64) -> Result<f64> {
    check_open_unit("a", a)?;
    check_damping(p)?;
    Ok(2.0 * (1.0 - p) * (a * (1.0 - a)).sqrt())
}

/// Post-swap concurrence (2/N)(1-p)^2 a(1-a), equal to
/// (1-p)(1-a) / ((1-p)(1-a) + p).
pub fn concurrence_phi_round1(a: f64, p: f64) -> Result<f64> {
    check_open_unit("a", a)?;
    check_damping(p)?;
    let y = (1.0 - p) * (1.0 - a);
    Ok(y / (y + p))
}

/// Second-round concurrence after both-M+ weak measurements:
/// 2b(1-b)(1-p)^4 a^2 (1-a)^2 over the round-2 normalizer.
pub fn concurrence_phi_round2(a: f64, p: f64, b: f64) -> Result<f64> {
    check_open_unit("a", a)?;
    check_damping(p)?;
    check_open_unit("b", b)?;
    let q = 1.0 - p;
    let numer = 2.0 * b * (1.0 - b) * q.powi(4) * a * a * (1.0 - a) * (1.0 - a);
    let denom = 4.0 * p * q.powi(3) * b * b * a * a * (1.0 - a) + numer;
    if denom == 0.0 {
        return Err(Error::NoEntanglement(
            "degenerate round-2 normalizer".into(),
        ));
    }
    Ok(numer / denom)
}

/// Success probability the trade-off identity is stated against:
/// 2p(1-p)^3 b^2 a^2 (1-a) + b(1-b)(1-p)^4 a^2 (1-a)^2.
pub fn probability_phi_round2(a: f64, p: f64, b: f64) -> Result<f64> {
    check_open_unit("a", a)?;
    check_damping(p)?;
    check_open_unit("b", b)?;
    let q = 1.0 - p;
    Ok(2.0 * p * q.powi(3) * b * b * a * a * (1.0 - a)
        + b * (1.0 - b) * q.powi(4) * a * a * (1.0 - a) * (1.0 - a))
}

/// n-round closed-form bracket weights (a_n, b_n) for the both-M+, Psi+-
/// chain; the normalized state is (a_n|00><00| + 2 b_n |Psi><Psi|)/(a_n+2b_n).
/// Only usable while the powers stay representable (roughly n <= 9 for
/// mid-range parameters); the concurrence itself has a log-space route.
pub fn phi_roundn_weights(a: f64, p: f64, b: f64, n: u32) -> Result<(f64, f64)> {
    check_open_unit("a", a)?;
    check_damping(p)?;
    check_open_unit("b", b)?;
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            expected: "n >= 1",
        });
    }
    // 2^(n-1) overflows the exponent type long after the powers themselves
    // stop being representable; cut off well before the shift can wrap.
    if n > 24 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            expected: "small enough that the closed-form powers stay representable",
        });
    }
    let h = 1i32 << (n - 1); // 2^(n-1)
    let ni = n as i32;
    let a_n = 2f64.powi(ni)
        * p
        * b.powi(h + ni - 2)
        * (1.0 - b).powi(h - ni)
        * (1.0 - p).powi(2 * h - 1)
        * a.powi(h)
        * (1.0 - a).powi(h - 1);
    let b_n = b.powi(h - 1)
        * (1.0 - b).powi(h - 1)
        * (1.0 - p).powi(2 * h)
        * a.powi(h)
        * (1.0 - a).powi(h);
    if b_n == 0.0 || !a_n.is_finite() || !b_n.is_finite() {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            expected: "small enough that the closed-form powers stay representable",
        });
    }
    Ok((a_n, b_n))
}

/// n-round concurrence 2 b_n / (a_n + 2 b_n), evaluated through the weight
/// ratio in log space so arbitrarily large n never under- or overflows.
pub fn concurrence_phi_roundn(a: f64, p: f64, b: f64, n: u32) -> Result<f64> {
    check_open_unit("a", a)?;
    check_damping(p)?;
    check_open_unit("b", b)?;
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            expected: "n >= 1",
        });
    }
    if p == 0.0 {
        return Ok(1.0);
    }
    // r_n = a_n / (2 b_n) = p/((1-p)(1-a)) * (2b/(1-b))^(n-1)
    let ln_r = p.ln() - (1.0 - p).ln() - (1.0 - a).ln()
        + (n - 1) as f64 * (std::f64::consts::LN_2 + b.ln() - (1.0 - b).ln());
    Ok(if ln_r > 0.0 {
        let e = (-ln_r).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + ln_r.exp())
    })
}

/// Fully entangled fraction: the maximal overlap with any maximally
/// entangled state, via the largest eigenvalue of Re(rho) in the magic
/// basis {Phi+, i Phi-, i Psi+, Psi-}.
pub fn singlet_fraction(rho: &DensityMatrix, tol: &Numerics) -> Result<f64> {
    if rho.n_qubits() != 2 {
        return Err(Error::Dimension(
            "singlet_fraction needs a 2-qubit state".into(),
        ));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let magic: [[C64; 4]; 4] = [
        [C64::new(s, 0.0), z, z, C64::new(s, 0.0)],
        [C64::new(0.0, s), z, z, C64::new(0.0, -s)],
        [z, C64::new(0.0, s), C64::new(0.0, s), z],
        [z, C64::new(s, 0.0), C64::new(-s, 0.0), z],
    ];
    let m = rho.matrix();
    let mut re_m = ComplexMatrix::zeros(4, 4);
    for k in 0..4 {
        for l in 0..4 {
            let mut v = C64::new(0.0, 0.0);
            for i in 0..4 {
                for j in 0..4 {
                    v += magic[k][i].conj() * m.get(i, j) * magic[l][j];
                }
            }
            re_m.set(k, l, C64::new(v.re, 0.0));
        }
    }
    // Symmetrize exactly so the spectrum is real.
    let re_m = re_m.add(&re_m.dagger()).scale_re(0.5);
    let spec = eigenvalues(&re_m, tol)?;
    Ok(spec.eigenvalues[0].re)
}
