//! Dense complex linear algebra for density matrices of at most five qubits.
//!
//! Qubit 0 is the most significant tensor factor: the basis index of
//! `|q0 q1 ... q(n-1)>` is `sum_k q_k * 2^(n-1-k)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, QdcError, Result};

pub type C64 = Complex64;

pub const MAX_QUBITS: usize = 5;
pub const MAX_DIM: usize = 1 << MAX_QUBITS;

/// Hermiticity tolerance for [`DensityMatrix`].
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Unit-trace tolerance for [`DensityMatrix`].
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `(-PSD_TOL, 0]` are numerical noise and clamp to zero.
pub const PSD_TOL: f64 = 1e-9;

const EIGEN_HERMITIAN_TOL: f64 = 1e-8;

/// Square complex matrix of dimension `2^n`, `1 <= n <= 5`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 || dim > MAX_DIM || !dim.is_power_of_two() {
        return Err(QdcError::Dimension(format!(
            "dimension {dim} is not 2^n with 1 <= n <= {MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        check_dim(dim)?;
        if data.len() != dim * dim {
            return Err(QdcError::Dimension(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QdcError::Numeric("matrix has non-finite entries".into()));
        }
        Ok(Self { dim, data })
    }

    /// Build from nested rows; handy for writing small literal matrices.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(QdcError::Dimension("rows are not square".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self::zeros_unchecked(dim))
    }

    pub(crate) fn zeros_unchecked(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        Ok(m)
    }

    pub fn from_diagonal(diag: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len())?;
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        Ok(m)
    }

    /// `|v><v|` for an amplitude vector `v`.
    pub fn outer(v: &[C64]) -> Result<Self> {
        let dim = v.len();
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim * dim);
        for a in v {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros_unchecked(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros_unchecked(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `M - M^dag`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        match self.dagger().matmul(self) {
            Ok(p) => p.max_abs_diff(&Self::identity(self.dim).expect("valid dim")) <= tol,
            Err(_) => false,
        }
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(QdcError::Dimension(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

/// Kronecker product; `(a (x) b)[i*P + k, j*P + l] = a[i,j] * b[k,l]` with `P = dim(b)`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let p = b.dim;
    let dim = a.dim * p;
    if dim > MAX_DIM {
        return Err(QdcError::Dimension(format!(
            "tensor product of dimension {dim} exceeds {MAX_DIM}"
        )));
    }
    let mut out = ComplexMatrix::zeros_unchecked(dim);
    for i in 0..a.dim {
        for j in 0..a.dim {
            let aij = a.get(i, j);
            for k in 0..p {
                for l in 0..p {
                    out.data[(i * p + k) * dim + j * p + l] = aij * b.get(k, l);
                }
            }
        }
    }
    Ok(out)
}

/// Lift a 2x2 operator onto qubit `q` of an `n`-qubit register with explicit
/// tensor products. Reference route for [`conjugate_qubit`].
pub fn embed_single_qubit(op: &ComplexMatrix, q: usize, n: usize) -> Result<ComplexMatrix> {
    if op.dim != 2 {
        return Err(QdcError::Dimension("embedded operator must be 2x2".into()));
    }
    if q >= n {
        return domain(format!("qubit {q} out of range for {n} qubits"));
    }
    let id = ComplexMatrix::identity(2)?;
    let mut acc = if q == 0 { op.clone() } else { id.clone() };
    for k in 1..n {
        acc = tensor(&acc, if k == q { op } else { &id })?;
    }
    Ok(acc)
}

/// `out += O_q M O_q^dag` where `O_q` acts as `op` on qubit `q` and as the identity elsewhere.
///
/// Works directly on the index pairs that differ in bit `q`, which is the same
/// map as lifting `op` with tensor products and multiplying.
pub(crate) fn accumulate_conjugated(m: &ComplexMatrix, op: &[C64; 4], q: usize, out: &mut ComplexMatrix) {
    let n = m.dim;
    let shift = m.n_qubits() - 1 - q;
    let bit = 1usize << shift;
    let [o00, o01, o10, o11] = *op;
    let (c00, c01, c10, c11) = (o00.conj(), o01.conj(), o10.conj(), o11.conj());
    // left = O_q M, computed row pair by row pair.
    let mut left = vec![C64::new(0.0, 0.0); n * n];
    for r0 in (0..n).filter(|r| r & bit == 0) {
        let r1 = r0 | bit;
        for c in 0..n {
            let a = m.data[r0 * n + c];
            let b = m.data[r1 * n + c];
            left[r0 * n + c] = o00 * a + o01 * b;
            left[r1 * n + c] = o10 * a + o11 * b;
        }
    }
    // out += left O_q^dag, column pair by column pair.
    for r in 0..n {
        let row = &left[r * n..(r + 1) * n];
        for c0 in (0..n).filter(|c| c & bit == 0) {
            let c1 = c0 | bit;
            let a = row[c0];
            let b = row[c1];
            out.data[r * n + c0] += a * c00 + b * c01;
            out.data[r * n + c1] += a * c10 + b * c11;
        }
    }
}

/// `O_q M O_q^dag` for a single-qubit operator `op` on qubit `q`.
pub fn conjugate_qubit(m: &ComplexMatrix, op: &ComplexMatrix, q: usize) -> Result<ComplexMatrix> {
    if op.dim != 2 {
        return Err(QdcError::Dimension("local operator must be 2x2".into()));
    }
    if q >= m.n_qubits() {
        return domain(format!("qubit {q} out of range for {} qubits", m.n_qubits()));
    }
    let mut out = ComplexMatrix::zeros_unchecked(m.dim);
    accumulate_conjugated(m, &op2(op), q, &mut out);
    Ok(out)
}

pub(crate) fn op2(op: &ComplexMatrix) -> [C64; 4] {
    [op.data[0], op.data[1], op.data[2], op.data[3]]
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(QdcError::NotHermitian(defect));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return domain(format!("trace {tr} differs from 1"));
        }
        let min = hermitian_eigenvalues(&m)?.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(QdcError::NotPsd(min));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be a valid state (output of a CPTP map on a state).
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    /// Pure state `|psi><psi|` from a normalized amplitude vector.
    pub fn pure(amplitudes: &[C64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TRACE_TOL {
            return domain(format!("state vector has squared norm {norm}"));
        }
        Ok(Self(ComplexMatrix::outer(amplitudes)?))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let m = ComplexMatrix::identity(dim)?.scale(C64::new(1.0 / dim as f64, 0.0));
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn n_qubits(&self) -> usize {
        self.0.n_qubits()
    }

    /// Maximum violation of the three state invariants, for diagnostics.
    pub fn invariant_report(&self) -> Result<(f64, f64, f64)> {
        let herm = self.0.hermiticity_defect();
        let tr = (self.0.trace() - C64::new(1.0, 0.0)).norm();
        let min = hermitian_eigenvalues(&self.0)?.last().copied().unwrap_or(0.0);
        Ok((herm, tr, min))
    }
}

fn bit_offsets(qubits: &[usize], n: usize) -> Vec<usize> {
    // Offsets of every assignment of `qubits`, enumerated big-endian in the given order.
    let k = qubits.len();
    (0..1usize << k)
        .map(|local| {
            qubits.iter().enumerate().fold(0usize, |acc, (pos, &q)| {
                let b = (local >> (k - 1 - pos)) & 1;
                acc | (b << (n - 1 - q))
            })
        })
        .collect()
}

/// Reduced state on `keep` (ascending qubit order), tracing out everything else.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    if keep.is_empty() {
        return domain("partial trace needs at least one kept qubit");
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != keep.len() || kept.iter().any(|&q| q >= n) {
        return domain(format!("invalid kept qubits {keep:?} for {n} qubits"));
    }
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let k_off = bit_offsets(&kept, n);
    let t_off = bit_offsets(&traced, n);
    let d = k_off.len();
    let m = rho.matrix();
    let mut out = ComplexMatrix::zeros_unchecked(d);
    for (i, ki) in k_off.iter().enumerate() {
        for (j, kj) in k_off.iter().enumerate() {
            out.data[i * d + j] = t_off.iter().map(|t| m.get(ki + t, kj + t)).sum();
        }
    }
    Ok(DensityMatrix(out))
}

/// Real eigenvalues of a Hermitian matrix, sorted descending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let defect = m.hermiticity_defect();
    if defect > EIGEN_HERMITIAN_TOL {
        return Err(QdcError::NotHermitian(defect));
    }
    let n = m.dim;
    let mat = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    let mut ev: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
    if ev.iter().any(|v| !v.is_finite()) {
        // Householder reduction can underflow into NaN when nearly all couplings are zero;
        // a unit shift keeps every intermediate away from the subnormal range.
        let shifted = DMatrix::from_fn(n, n, |i, j| if i == j { m.get(i, j) + 1.0 } else { m.get(i, j) });
        ev = shifted.symmetric_eigenvalues().iter().map(|v| v - 1.0).collect();
        if ev.iter().any(|v| !v.is_finite()) {
            return Err(QdcError::Numeric("eigensolver produced non-finite values".into()));
        }
    }
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// `-sum l log2 l` over a spectrum, clamping `(-PSD_TOL, 0]` to zero.
pub fn spectrum_entropy(spectrum: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in spectrum {
        if l < -PSD_TOL {
            return Err(QdcError::NotPsd(l));
        }
        if l > 0.0 {
            s -= l * l.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    spectrum_entropy(&hermitian_eigenvalues(rho.matrix())?)
}

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn real_diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&v.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>()).unwrap()
    }

    fn sigma_z() -> ComplexMatrix {
        real_diag(&[1.0, -1.0])
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2).unwrap();
        assert_eq!(tensor(&i2, &i2).unwrap(), ComplexMatrix::identity(4).unwrap());
    }

    #[test]
    fn tensor_sigma_z_identity() {
        let i2 = ComplexMatrix::identity(2).unwrap();
        let t = tensor(&sigma_z(), &i2).unwrap();
        assert_eq!(t, real_diag(&[1.0, 1.0, -1.0, -1.0]));
    }

    #[test]
    fn tensor_of_projectors_hits_basis_index_one() {
        let p0 = real_diag(&[1.0, 0.0]);
        let p1 = real_diag(&[0.0, 1.0]);
        let t = tensor(&p0, &p1).unwrap();
        assert_eq!(t, real_diag(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn tensor_rejects_oversized_result() {
        let a = ComplexMatrix::identity(8).unwrap();
        assert!(matches!(tensor(&a, &a), Err(QdcError::Dimension(_))));
    }

    #[test]
    fn constructor_rejects_bad_dims_and_nan() {
        assert!(ComplexMatrix::zeros(3).is_err());
        assert!(ComplexMatrix::zeros(64).is_err());
        assert!(ComplexMatrix::new(2, vec![c(f64::NAN, 0.0); 4]).is_err());
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = DensityMatrix::pure(&[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).unwrap();
        let r = partial_trace(&bell, &[1]).unwrap();
        assert!(r.matrix().max_abs_diff(&real_diag(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn ghz_receiver_marginal() {
        // x = 0.6 on |000>, 0.8 on |111>; the last qubit keeps diag(0.36, 0.64).
        let mut amp = vec![c(0.0, 0.0); 8];
        amp[0] = c(0.6, 0.0);
        amp[7] = c(0.8, 0.0);
        let rho = DensityMatrix::pure(&amp).unwrap();
        let r = partial_trace(&rho, &[2]).unwrap();
        assert!(r.matrix().max_abs_diff(&real_diag(&[0.36, 0.64])) < 1e-12);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = DensityMatrix::maximally_mixed(2).unwrap();
        assert!(partial_trace(&rho, &[]).is_err());
        assert!(partial_trace(&rho, &[2]).is_err());
        assert!(partial_trace(&rho, &[0, 0]).is_err());
    }

    #[test]
    fn eigenvalues_sorted_descending() {
        assert_eq!(hermitian_eigenvalues(&real_diag(&[0.5, 0.5])).unwrap(), vec![0.5, 0.5]);
        let ev = hermitian_eigenvalues(&real_diag(&[0.36, 0.64])).unwrap();
        assert_abs_diff_eq!(ev[0], 0.64, epsilon = 1e-15);
        assert_abs_diff_eq!(ev[1], 0.36, epsilon = 1e-15);
    }

    #[test]
    fn eigenvalues_reject_non_hermitian() {
        let m = ComplexMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]])
            .unwrap();
        assert!(matches!(hermitian_eigenvalues(&m), Err(QdcError::NotHermitian(_))));
    }

    #[test]
    fn entropy_reference_values() {
        let pure = DensityMatrix::new(real_diag(&[1.0, 0.0])).unwrap();
        assert_eq!(von_neumann_entropy(&pure).unwrap(), 0.0);
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert_abs_diff_eq!(von_neumann_entropy(&mixed).unwrap(), 2.0, epsilon = 1e-12);
        let t = 0.19 / 3.0;
        let s = spectrum_entropy(&[0.81, t, t, t]).unwrap();
        let direct = -(0.81f64 * 0.81f64.log2()) - 3.0 * t * t.log2();
        assert_abs_diff_eq!(s, direct, epsilon = 1e-15);
        assert_abs_diff_eq!(s, 1.002_614_335_020_917, epsilon = 1e-12);
        assert_abs_diff_eq!(s, 1.0027, epsilon = 1e-4);
    }

    #[test]
    fn entropy_clamps_tiny_negatives_and_rejects_large_ones() {
        assert_eq!(spectrum_entropy(&[1.0, -5e-10]).unwrap(), 0.0);
        assert!(matches!(spectrum_entropy(&[1.0, -1e-6]), Err(QdcError::NotPsd(_))));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(real_diag(&[0.6, 0.6])).is_err());
        assert!(matches!(DensityMatrix::new(real_diag(&[1.5, -0.5])), Err(QdcError::NotPsd(_))));
        let m = ComplexMatrix::from_rows(&[vec![c(0.5, 0.0), c(0.1, 0.0)], vec![c(0.2, 0.0), c(0.5, 0.0)]])
            .unwrap();
        assert!(matches!(DensityMatrix::new(m), Err(QdcError::NotHermitian(_))));
    }

    #[test]
    fn strided_conjugation_matches_tensor_lift() {
        let op = ComplexMatrix::from_rows(&[vec![c(0.3, 0.1), c(-0.2, 0.7)], vec![c(0.5, -0.4), c(0.0, 0.9)]])
            .unwrap();
        let mut m = ComplexMatrix::zeros(8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                m.set(i, j, c((i * 3 + j) as f64 * 0.1, (i as f64 - j as f64) * 0.05));
            }
        }
        for q in 0..3 {
            let lifted = embed_single_qubit(&op, q, 3).unwrap();
            let reference = lifted.matmul(&m).unwrap().matmul(&lifted.dagger()).unwrap();
            let fast = conjugate_qubit(&m, &op, q).unwrap();
            assert!(fast.max_abs_diff(&reference) < 1e-13, "qubit {q}");
        }
    }
}
