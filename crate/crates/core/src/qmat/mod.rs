//! Dense complex-matrix kernel: construction, algebra, Kronecker products,
//! partial trace and eigenvalue extraction for matrices up to 16x16.
//!
//! Qubit ordering convention (inherited by every other module): qubit 0 is
//! the leftmost tensor factor and the most significant bit of a basis index,
//! i.e. |q0 q1 .. q_{n-1}> maps to index q0*2^(n-1) + .. + q_{n-1}.

mod eig;

use crate::error::{Error, Result};
use num_complex::Complex64;

pub type C64 = Complex64;

pub const MAX_DIM: usize = 16;

/// Numerics policy threaded explicitly through every tolerance-sensitive
/// operation. Never global mutable state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    /// Absolute tolerance for structural checks (Hermiticity, trace,
    /// completeness, norms) and for the negative-eigenvalue clamp.
    pub atol: f64,
    /// Maximum accepted residual ||M v - lambda v|| per eigenpair.
    pub eig_residual: f64,
    /// Comparison tolerance for boundary predicates (enhancement regions,
    /// threshold checks).
    pub compare: f64,
    /// Spectral noise floor for the concurrence: eigenvalues of the
    /// rho * rho_tilde product whose magnitude is below this (times the
    /// matrix scale) are machine noise on an exact zero and are zeroed
    /// before the square root, which would otherwise amplify 1e-16 noise
    /// into 1e-8 concurrence error. Kept three orders above observed noise
    /// and four below the smallest genuine eigenvalue in the protocol
    /// families.
    pub eig_zero_floor: f64,
}

impl Numerics {
    pub const DEFAULT: Numerics = Numerics {
        atol: 1e-10,
        eig_residual: 1e-9,
        compare: 1e-9,
        eig_zero_floor: 1e-13,
    };
}

impl Default for Numerics {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<C64>,
}

impl ComplexMatrix {
    /// Build from row-major entries, rejecting size mismatches and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(
                "matrix dimensions must be positive".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                entries.len()
            )));
        }
        for (k, z) in entries.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite {
                    row: k / cols,
                    col: k % cols,
                });
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_real(rows: usize, cols: usize, reals: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            reals.iter().map(|&r| C64::new(r, 0.0)).collect(),
        )
    }

    pub fn diag(values: &[C64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Outer product |u><v| of two coefficient slices.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                m.set(i, j, ui * vj.conj());
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "add: shape mismatch"
        );
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "sub: shape mismatch"
        );
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn scale(&self, factor: C64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> ComplexMatrix {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul: inner dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matvec: dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// Entrywise complex conjugate.
    pub fn conjugate(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square(), "trace: matrix must be square");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "diff: shape mismatch"
        );
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square(), "hermiticity: matrix must be square");
        let mut dev = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, atol: f64) -> bool {
        self.hermiticity_deviation() <= atol
    }
}

/// Kronecker product with standard ordering:
/// `kron(a, b)[i*rb + k, j*cb + l] = a[i, j] * b[k, l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a.get(i, j);
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out.set(i * rb + k, j * cb + l, aij * b.get(k, l));
                }
            }
        }
    }
    out
}

/// Conjugate transpose as a free function, mirroring the method.
pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.dagger()
}

/// Value of qubit `q` in basis index `idx` of an `n`-qubit register
/// (qubit 0 = most significant bit).
#[inline]
pub fn qubit_bit(idx: usize, n_qubits: usize, q: usize) -> usize {
    (idx >> (n_qubits - 1 - q)) & 1
}

/// Embed a single-qubit operator on the given qubit of an `n`-qubit register:
/// I x .. x op x .. x I.
pub fn embed_on_qubit(op: &ComplexMatrix, n_qubits: usize, target: usize) -> Result<ComplexMatrix> {
    if op.rows() != 2 || op.cols() != 2 {
        return Err(Error::Dimension(
            "embed_on_qubit expects a 2x2 operator".into(),
        ));
    }
    if target >= n_qubits {
        return Err(Error::QubitOutOfRange {
            index: target,
            n_qubits,
        });
    }
    let left = ComplexMatrix::identity(1 << target);
    let right = ComplexMatrix::identity(1 << (n_qubits - 1 - target));
    Ok(kron(&kron(&left, op), &right))
}

/// Partial trace of a 2^n x 2^n matrix, keeping the qubits in `keep` in
/// their original register order. Trace is preserved.
pub fn partial_trace(m: &ComplexMatrix, n_qubits: usize, keep: &[usize]) -> Result<ComplexMatrix> {
    let dim = 1usize << n_qubits;
    if !m.is_square() || m.rows() != dim {
        return Err(Error::Dimension(format!(
            "partial_trace expects a {dim}x{dim} matrix for {n_qubits} qubits, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if keep.is_empty() {
        return Err(Error::Dimension(
            "partial_trace: keep set must be nonempty".into(),
        ));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    for &q in &keep {
        if q >= n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits });
        }
    }
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !keep.contains(q)).collect();
    let dk = 1usize << keep.len();
    let dt = 1usize << traced.len();
    let mut out = ComplexMatrix::zeros(dk, dk);

    // Precompute shifts of kept/traced qubits into the full index.
    let place = |bits: usize, qubits: &[usize]| -> usize {
        let mut full = 0usize;
        for (b, &q) in qubits.iter().enumerate() {
            full |= ((bits >> (qubits.len() - 1 - b)) & 1) << (n_qubits - 1 - q);
        }
        full
    };

    for ik in 0..dk {
        let fi_base = place(ik, &keep);
        for jk in 0..dk {
            let fj_base = place(jk, &keep);
            let mut sum = C64::new(0.0, 0.0);
            for it in 0..dt {
                let tr = place(it, &traced);
                sum += m.get(fi_base | tr, fj_base | tr);
            }
            out.set(ik, jk, sum);
        }
    }
    Ok(out)
}

/// Eigenvalues sorted by descending real part (ties broken by descending
/// imaginary part).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
}

impl Spectrum {
    /// Largest magnitude of an imaginary part in the spectrum.
    pub fn max_imag(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

/// Eigenvalues of a general complex square matrix (dimension <= 16) by
/// Hessenberg reduction and shifted QR iteration. Every returned eigenvalue
/// carries an inverse-iteration residual certificate
/// ||M v - lambda v|| <= eig_residual * max(1, max|M|); failure to certify
/// is reported as an error, never silently truncated.
pub fn eigenvalues(m: &ComplexMatrix, tol: &Numerics) -> Result<Spectrum> {
    eig::eigenvalues(m, tol)
}

/// Attempt a Cholesky factorization of `m + shift*I`; success certifies that
/// every eigenvalue of the Hermitian matrix `m` exceeds `-shift`.
pub fn cholesky_psd_check(m: &ComplexMatrix, shift: f64) -> bool {
    debug_assert!(m.is_square());
    let n = m.rows();
    let mut l = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let mut d = m.get(j, j).re + shift;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return false;
        }
        let dj = d.sqrt();
        l[j * n + j] = C64::new(dj, 0.0);
        for i in (j + 1)..n {
            let mut s = m.get(i, j)
                + if i == j {
                    C64::new(shift, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / dj;
        }
    }
    true
}
