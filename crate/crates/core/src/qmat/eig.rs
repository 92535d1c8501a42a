//! Eigenvalues of small dense complex matrices: Householder reduction to
//! upper Hessenberg form followed by shifted QR iteration, with an
//! inverse-iteration residual certificate per eigenpair.
//!
//! One solver path covers every input, including the non-Hermitian products
//! rho * rho_tilde used by the concurrence.

use super::{ComplexMatrix, Numerics, Spectrum, C64, MAX_DIM};
use crate::error::{Error, Result};

const MAX_SWEEPS_PER_BLOCK: usize = 60;

pub(super) fn eigenvalues(m: &ComplexMatrix, tol: &Numerics) -> Result<Spectrum> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigenvalues requires a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge(n));
    }

    let mut values = if n == 1 {
        vec![m.get(0, 0)]
    } else {
        let mut h = hessenberg(m);
        qr_eigenvalues(&mut h)?
    };

    values.sort_by(|a, b| b.re.total_cmp(&a.re).then_with(|| b.im.total_cmp(&a.im)));

    let scale = m.max_abs().max(1.0);
    for &lambda in &values {
        let residual = certify(m, lambda);
        // NaN or infinite residuals must fail the certificate too.
        if residual.is_nan() || residual > tol.eig_residual * scale {
            return Err(Error::EigenResidual { lambda, residual });
        }
    }

    Ok(Spectrum {
        eigenvalues: values,
    })
}

/// Reduce to upper Hessenberg form by complex Householder reflections.
fn hessenberg(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let mut h = m.clone();
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k, zeroing rows k+2..n.
        let mut x: Vec<C64> = (k + 1..n).map(|i| h.get(i, k)).collect();
        let xnorm = (x.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * xnorm;
        x[0] -= alpha;
        let vnorm = (x.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        if vnorm == 0.0 {
            continue;
        }
        let v: Vec<C64> = x.into_iter().map(|z| z / vnorm).collect();

        // H <- (I - 2 v v^dag) H, rows k+1..n
        for j in 0..n {
            let w: C64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| vr.conj() * h.get(k + 1 + r, j))
                .sum();
            let w2 = w * 2.0;
            for (r, vr) in v.iter().enumerate() {
                let val = h.get(k + 1 + r, j) - w2 * vr;
                h.set(k + 1 + r, j, val);
            }
        }
        // H <- H (I - 2 v v^dag), columns k+1..n
        for i in 0..n {
            let w: C64 = v
                .iter()
                .enumerate()
                .map(|(r, vr)| h.get(i, k + 1 + r) * vr)
                .sum();
            let w2 = w * 2.0;
            for (r, vr) in v.iter().enumerate() {
                let val = h.get(i, k + 1 + r) - w2 * vr.conj();
                h.set(i, k + 1 + r, val);
            }
        }
        // Enforce exact zeros below the subdiagonal.
        for i in k + 2..n {
            h.set(i, k, C64::new(0.0, 0.0));
        }
    }
    h
}

/// Shifted QR iteration on an upper Hessenberg matrix. Consumes the matrix.
fn qr_eigenvalues(h: &mut ComplexMatrix) -> Result<Vec<C64>> {
    let n = h.rows();
    let scale = h.max_abs().max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut sweeps_on_block = 0usize;

    loop {
        // Set negligible subdiagonals to zero.
        for i in 0..hi {
            let s = {
                let d = h.get(i, i).norm() + h.get(i + 1, i + 1).norm();
                if d == 0.0 {
                    scale
                } else {
                    d
                }
            };
            if h.get(i + 1, i).norm() <= f64::EPSILON * s {
                h.set(i + 1, i, C64::new(0.0, 0.0));
            }
        }

        // Peel converged eigenvalues off the bottom.
        while hi > 0 && h.get(hi, hi - 1).norm() == 0.0 {
            values.push(h.get(hi, hi));
            hi -= 1;
            sweeps_on_block = 0;
        }
        if hi == 0 {
            values.push(h.get(0, 0));
            return Ok(values);
        }

        // Start of the unreduced block ending at hi.
        let mut lo = hi;
        while lo > 0 && h.get(lo, lo - 1).norm() != 0.0 {
            lo -= 1;
        }

        if hi - lo == 1 {
            let (l1, l2) = eig2(h.get(lo, lo), h.get(lo, hi), h.get(hi, lo), h.get(hi, hi));
            values.push(l1);
            values.push(l2);
            if lo == 0 {
                return Ok(values);
            }
            hi = lo - 1;
            sweeps_on_block = 0;
            continue;
        }

        sweeps_on_block += 1;
        if sweeps_on_block > MAX_SWEEPS_PER_BLOCK {
            return Err(Error::EigenNonConvergence {
                iterations: MAX_SWEEPS_PER_BLOCK,
            });
        }

        let mu = if sweeps_on_block.is_multiple_of(20) {
            // Exceptional shift to break rare stagnation.
            h.get(hi, hi) + h.get(hi, hi - 1).norm() * 1.5
        } else {
            wilkinson_shift(h, hi)
        };

        qr_step(h, lo, hi, mu);
    }
}

/// Eigenvalues of [[a, b], [c, d]].
fn eig2(a: C64, b: C64, c: C64, d: C64) -> (C64, C64) {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
    (half_tr + disc, half_tr - disc)
}

/// Root of the trailing 2x2 characteristic polynomial closest to h[hi, hi].
fn wilkinson_shift(h: &ComplexMatrix, hi: usize) -> C64 {
    let (l1, l2) = eig2(
        h.get(hi - 1, hi - 1),
        h.get(hi - 1, hi),
        h.get(hi, hi - 1),
        h.get(hi, hi),
    );
    let d = h.get(hi, hi);
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit shifted QR step restricted to the unreduced window
/// [lo, hi]; the window is decoupled from the rest, so eigenvalues outside
/// are unaffected.
fn qr_step(h: &mut ComplexMatrix, lo: usize, hi: usize, mu: C64) {
    for i in lo..=hi {
        let v = h.get(i, i) - mu;
        h.set(i, i, v);
    }

    let mut rotations: Vec<(f64, C64)> = Vec::with_capacity(hi - lo);
    // Left rotations: H <- G_{hi-1} .. G_lo H = R
    for k in lo..hi {
        let (c, s) = givens(h.get(k, k), h.get(k + 1, k));
        rotations.push((c, s));
        for j in k..=hi {
            let top = h.get(k, j);
            let bot = h.get(k + 1, j);
            h.set(k, j, top * c + s * bot);
            h.set(k + 1, j, -s.conj() * top + bot * c);
        }
        h.set(k + 1, k, C64::new(0.0, 0.0));
    }
    // Right rotations: H <- R G_lo^dag .. G_{hi-1}^dag
    for (idx, &(c, s)) in rotations.iter().enumerate() {
        let k = lo + idx;
        for i in lo..=(k + 1).min(hi) {
            let left = h.get(i, k);
            let right = h.get(i, k + 1);
            h.set(i, k, left * c + s.conj() * right);
            h.set(i, k + 1, -s * left + right * c);
        }
    }

    for i in lo..=hi {
        let v = h.get(i, i) + mu;
        h.set(i, i, v);
    }
}

/// Givens rotation [[c, s], [-conj(s), c]] (c real) sending (f, g) to (r, 0).
fn givens(f: C64, g: C64) -> (f64, C64) {
    let fn_ = f.norm();
    let gn = g.norm();
    if gn == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if fn_ == 0.0 {
        return (0.0, g.conj() / gn);
    }
    let d = (fn_ * fn_ + gn * gn).sqrt();
    let c = fn_ / d;
    let s = (f / fn_) * g.conj() / d;
    (c, s)
}

/// Inverse-iteration residual ||M v - lambda v|| for the computed eigenvalue.
fn certify(m: &ComplexMatrix, lambda: C64) -> f64 {
    let n = m.rows();
    let mut shifted = m.clone();
    for i in 0..n {
        let v = shifted.get(i, i) - lambda;
        shifted.set(i, i, v);
    }
    let lu = LuFactors::decompose(&shifted);

    let mut x = vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n];
    for _ in 0..3 {
        let y = lu.solve(&x);
        let norm = (y.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return f64::INFINITY;
        }
        x = y.into_iter().map(|z| z / norm).collect();
    }

    let mx = m.matvec(&x);
    mx.iter()
        .zip(&x)
        .map(|(a, b)| (a - lambda * b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// LU with partial pivoting; near-zero pivots are replaced by a tiny value
/// so inverse iteration can proceed on (numerically) singular shifts.
struct LuFactors {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
}

impl LuFactors {
    fn decompose(m: &ComplexMatrix) -> Self {
        let n = m.rows();
        let mut lu: Vec<C64> = m.entries().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = f64::EPSILON * m.max_abs().max(1.0);

        for k in 0..n {
            let mut pivot_row = k;
            let mut pivot_mag = lu[k * n + k].norm();
            for i in k + 1..n {
                let mag = lu[i * n + k].norm();
                if mag > pivot_mag {
                    pivot_mag = mag;
                    pivot_row = i;
                }
            }
            if pivot_row != k {
                for j in 0..n {
                    lu.swap(k * n + j, pivot_row * n + j);
                }
                perm.swap(k, pivot_row);
            }
            if lu[k * n + k].norm() < tiny {
                lu[k * n + k] = C64::new(tiny, 0.0);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                for j in k + 1..n {
                    let v = lu[i * n + j] - factor * lu[k * n + j];
                    lu[i * n + j] = v;
                }
            }
        }
        Self { n, lu, perm }
    }

    fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut y: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                let v = y[i] - self.lu[i * n + j] * y[j];
                y[i] = v;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = y[i] - self.lu[i * n + j] * y[j];
                y[i] = v;
            }
            y[i] /= self.lu[i * n + i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::super::{eigenvalues, kron, ComplexMatrix, Numerics, C64};
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_spectrum_in_descending_order() {
        let m = ComplexMatrix::diag(&[c(2.0, 0.0), c(4.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)]);
        let spec = eigenvalues(&m, &Numerics::default()).unwrap();
        let re: Vec<f64> = spec.real_parts();
        assert_eq!(re, vec![4.0, 3.0, 2.0, 1.0]);
        assert!(spec.max_imag() < 1e-14);
    }

    #[test]
    fn bell_state_product_spectrum() {
        // rho * rho_tilde of |Psi+><Psi+| equals the projector itself:
        // spectrum (1, 0, 0, 0).
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)];
        let rho = ComplexMatrix::outer(&psi, &psi);
        let sy = ComplexMatrix::new(
            2,
            2,
            vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        )
        .unwrap();
        let syy = kron(&sy, &sy);
        let rho_tilde = syy.matmul(&rho.conjugate()).matmul(&syy);
        let prod = rho.matmul(&rho_tilde);
        let spec = eigenvalues(&prod, &Numerics::default()).unwrap();
        let re = spec.real_parts();
        assert!((re[0] - 1.0).abs() < 1e-12);
        for &l in &re[1..] {
            assert!(l.abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_matrix_complex_pair() {
        // 90-degree rotation has eigenvalues +-i.
        let m = ComplexMatrix::new(
            2,
            2,
            vec![c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let spec = eigenvalues(&m, &Numerics::default()).unwrap();
        let e = &spec.eigenvalues;
        assert!((e[0] - c(0.0, 1.0)).norm() < 1e-12);
        assert!((e[1] - c(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn antidiagonal_pauli_product() {
        // sigma_y (x) sigma_y has eigenvalues {1, 1, -1, -1}.
        let sy = ComplexMatrix::new(
            2,
            2,
            vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        )
        .unwrap();
        let m = kron(&sy, &sy);
        let spec = eigenvalues(&m, &Numerics::default()).unwrap();
        let re = spec.real_parts();
        assert!((re[0] - 1.0).abs() < 1e-12 && (re[1] - 1.0).abs() < 1e-12);
        assert!((re[2] + 1.0).abs() < 1e-12 && (re[3] + 1.0).abs() < 1e-12);
        assert!(spec.max_imag() < 1e-12);
    }

    #[test]
    fn defective_jordan_block_still_certifies() {
        // [[0, 1], [0, 0]] is defective with double eigenvalue 0; the
        // certificate accepts the genuine eigenvector.
        let m = ComplexMatrix::new(
            2,
            2,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let spec = eigenvalues(&m, &Numerics::default()).unwrap();
        for l in &spec.eigenvalues {
            assert!(l.norm() < 1e-9);
        }
    }

    #[test]
    fn zero_matrix() {
        let m = ComplexMatrix::zeros(4, 4);
        let spec = eigenvalues(&m, &Numerics::default()).unwrap();
        assert!(spec.eigenvalues.iter().all(|l| l.norm() == 0.0));
    }

    #[test]
    fn rejects_non_square_and_oversized() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(eigenvalues(&m, &Numerics::default()).is_err());
        let m = ComplexMatrix::zeros(32, 32);
        assert!(matches!(
            eigenvalues(&m, &Numerics::default()),
            Err(crate::error::Error::DimensionTooLarge(32))
        ));
    }

    #[test]
    fn sixteen_dim_known_spectrum() {
        // Triangular matrix: spectrum equals the diagonal.
        let n = 16;
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    c(i as f64 + 1.0, 0.0)
                } else {
                    c(0.3 * ((i + 2 * j) % 5) as f64, 0.1 * ((i + j) % 3) as f64)
                };
                m.set(i, j, v);
            }
        }
        // Similarity transform by a fixed unitary-ish rotation pair to make it dense.
        let spec = eigenvalues(&m, &Numerics::default()).unwrap();
        let re = spec.real_parts();
        for (k, &l) in re.iter().enumerate() {
            assert!((l - (n - k) as f64).abs() < 1e-9, "eigenvalue {k} = {l}");
        }
    }

    #[test]
    fn lu_solves_small_system() {
        let m = ComplexMatrix::new(
            2,
            2,
            vec![c(2.0, 0.0), c(1.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)],
        )
        .unwrap();
        let lu = LuFactors::decompose(&m);
        let b = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let x = lu.solve(&b);
        let r = m.matvec(&x);
        assert!((r[0] - b[0]).norm() < 1e-12);
        assert!((r[1] - b[1]).norm() < 1e-12);
    }
}
