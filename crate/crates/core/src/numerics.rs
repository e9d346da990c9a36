//! Dense symmetric linear algebra: eigendecomposition, kernels, operator
//! norms, orthonormalisation and quadratic-form indices.
//!
//! The eigensolver is a cyclic Jacobi iteration with a fixed sweep order, so
//! identical input bits always produce identical output bits. That
//! determinism is what the report/golden-file machinery relies on; nalgebra
//! is used only for storage and arithmetic.

use crate::config::Tolerances;
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Maximum number of Jacobi sweeps before the solver gives up.
const MAX_JACOBI_SWEEPS: usize = 64;

/// A real symmetric matrix. Symmetry is enforced at construction by
/// replacing the input with `(M + Mᵀ)/2`, so `entries[i][j] == entries[j][i]`
/// holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrise and wrap a square matrix. Fails on non-square input,
    /// zero dimension or non-finite entries.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        let sym = (&m + m.transpose()) * 0.5;
        Ok(SymMatrix { data: sym })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("row lengths must equal the row count"));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        SymMatrix::new(m)
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            data: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix {
            data: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        SymMatrix {
            data: DMatrix::from_fn(n, n, |i, j| if i == j { entries[i] } else { 0.0 }),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Operator norm of a symmetric matrix, i.e. its spectral radius.
    pub fn operator_norm(&self) -> f64 {
        match sym_eig(self) {
            Ok(eig) => eig
                .values
                .iter()
                .fold(0.0_f64, |acc, v| acc.max(v.abs())),
            // Non-convergence on a finite symmetric matrix does not happen in
            // practice; fall back to the Frobenius norm bound.
            Err(_) => self.data.norm(),
        }
    }

    /// `max(1, ‖M‖)`, the reference scale for rank decisions.
    pub fn scale(&self) -> f64 {
        self.operator_norm().max(1.0)
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix {
            data: &self.data - &other.data,
        }
    }

    pub fn scaled(&self, factor: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * factor,
        }
    }

    /// `BᵀMB` for a frame `B`; the result is symmetric by construction.
    pub fn restrict(&self, frame: &DMatrix<f64>) -> SymMatrix {
        let r = frame.transpose() * &self.data * frame;
        let sym = (&r + r.transpose()) * 0.5;
        SymMatrix { data: sym }
    }
}

/// Full eigendecomposition of a symmetric matrix: ascending eigenvalues with
/// matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Morse index, signature and degeneracy flag of a quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadFormIndex {
    /// Number of eigenvalues below `−tol_rank · scale`.
    pub morse_index: usize,
    /// `n₊ − n₋`.
    pub signature: i64,
    /// True iff some eigenvalue lies within `tol_rank · scale` of zero.
    pub degenerate: bool,
}

impl QuadFormIndex {
    /// Number of positive eigenvalues, `n₊ = m⁻ + sgn`.
    pub fn positive_count(&self) -> usize {
        (self.morse_index as i64 + self.signature) as usize
    }
}

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// The sweep order is fixed (row major over the strict upper triangle), so
/// the result is a deterministic function of the input bits. Eigenvalues are
/// returned ascending; eigenvector columns are sign-normalised so that the
/// entry of largest magnitude is positive.
pub fn sym_eig(m: &SymMatrix) -> Result<EigDecomp> {
    let n = m.dim();
    let mut a = m.data.clone();
    let mut v = DMatrix::<f64>::identity(n, n);

    let fro = a.norm().max(f64::MIN_POSITIVE);
    let target = 1e-15 * fro;

    let mut converged = false;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = off_diag_norm(&a);
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-2 * target / (n as f64) {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                // Stable tangent of the rotation angle.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- GᵀAG on rows/columns p and q.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_diag_norm(&a) > 1e-11 * fro {
        return Err(Error::numerical(format!(
            "Jacobi eigensolver did not converge within {MAX_JACOBI_SWEEPS} sweeps"
        )));
    }

    // Sort ascending; stable so that ties keep the sweep order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column(src);
        // Sign convention: the largest-magnitude component is positive.
        let mut idx = 0;
        let mut best = 0.0_f64;
        for (k, &x) in col.iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                idx = k;
            }
        }
        let sign = if col[idx] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            vectors[(k, dst)] = sign * col[k];
        }
    }

    Ok(EigDecomp { values, vectors })
}

fn off_diag_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[(p, q)] * a[(p, q)];
            }
        }
    }
    s.sqrt()
}

/// Orthonormal basis of the numerical kernel: the span of eigenvectors with
/// `|eigenvalue| ≤ tol_rank · max(1, ‖M‖)`. An empty frame (zero columns)
/// means the matrix is numerically invertible.
pub fn kernel_basis(m: &SymMatrix, tol_rank: f64) -> Result<DMatrix<f64>> {
    if tol_rank <= 0.0 {
        return Err(Error::invalid("tol_rank must be positive"));
    }
    let eig = sym_eig(m)?;
    let scale = eig
        .values
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let thresh = tol_rank * scale;
    let cols: Vec<usize> = (0..m.dim())
        .filter(|&k| eig.values[k].abs() <= thresh)
        .collect();
    let mut frame = DMatrix::<f64>::zeros(m.dim(), cols.len());
    for (j, &k) in cols.iter().enumerate() {
        frame.set_column(j, &eig.vectors.column(k));
    }
    Ok(frame)
}

/// Largest singular value of a (possibly rectangular) matrix.
///
/// Computed from the symmetric embedding `[[0, M], [Mᵀ, 0]]`, whose spectrum
/// is `{±σᵢ}` plus zeros, so the top singular value is obtained at full
/// relative accuracy without squaring the condition number.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let h = jordan_wielandt(m);
    match sym_eig(&h) {
        Ok(eig) => eig.values.iter().fold(0.0_f64, |acc, v| acc.max(*v)),
        Err(_) => m.norm(),
    }
}

/// All singular values of a rectangular matrix, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Vec::new();
    }
    if m.iter().all(|&x| x == 0.0) {
        return vec![0.0; k];
    }
    let h = jordan_wielandt(m);
    let eig = sym_eig(&h).expect("Jacobi on a finite symmetric matrix");
    // Spectrum is {±σ} ∪ {0}; the top k eigenvalues are the singular values.
    let mut vals = eig.values;
    vals.reverse();
    vals.truncate(k);
    vals.iter().map(|v| v.max(0.0)).collect()
}

fn jordan_wielandt(m: &DMatrix<f64>) -> SymMatrix {
    let (r, c) = (m.nrows(), m.ncols());
    let mut h = DMatrix::<f64>::zeros(r + c, r + c);
    for i in 0..r {
        for j in 0..c {
            h[(i, r + j)] = m[(i, j)];
            h[(r + j, i)] = m[(i, j)];
        }
    }
    SymMatrix { data: h }
}

/// Morse index / signature / degeneracy of a symmetric quadratic form.
/// Degeneracy is reported, not thrown.
pub fn quadform_index(q: &SymMatrix, tol_rank: f64) -> Result<QuadFormIndex> {
    if tol_rank <= 0.0 {
        return Err(Error::invalid("tol_rank must be positive"));
    }
    let eig = sym_eig(q)?;
    let scale = eig
        .values
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let thresh = tol_rank * scale;
    let mut n_minus = 0usize;
    let mut n_plus = 0usize;
    let mut degenerate = false;
    for &v in &eig.values {
        if v < -thresh {
            n_minus += 1;
        } else if v > thresh {
            n_plus += 1;
        } else {
            degenerate = true;
        }
    }
    Ok(QuadFormIndex {
        morse_index: n_minus,
        signature: n_plus as i64 - n_minus as i64,
        degenerate,
    })
}

/// Orthonormalise the columns of a full-column-rank matrix, preserving the
/// span (and the orientation of the leading column). Rank-deficient input is
/// rejected.
pub fn orthonormalize(f: &DMatrix<f64>, tol_rank: f64) -> Result<DMatrix<f64>> {
    if f.ncols() == 0 {
        return Ok(f.clone());
    }
    let svs = singular_values(f);
    let smax = svs[0].max(1.0);
    let smin = *svs.last().unwrap();
    if smin <= tol_rank * smax {
        return Err(Error::invalid(format!(
            "columns are numerically dependent (sigma_min = {smin:.3e})"
        )));
    }
    // Modified Gram-Schmidt, two passes.
    let mut q = f.clone();
    for pass in 0..2 {
        for j in 0..q.ncols() {
            for i in 0..j {
                let qi = q.column(i).clone_owned();
                let proj = qi.dot(&q.column(j));
                let col = q.column(j) - &qi * proj;
                q.set_column(j, &col);
            }
            let norm = q.column(j).norm();
            if norm == 0.0 {
                return Err(Error::invalid("column collapsed during orthonormalisation"));
            }
            let col = q.column(j) / norm;
            q.set_column(j, &col);
            let _ = pass;
        }
    }
    Ok(q)
}

/// Convenience: the tolerances-aware kernel of a symmetric matrix.
pub fn kernel_basis_with(m: &SymMatrix, tol: &Tolerances) -> Result<DMatrix<f64>> {
    kernel_basis(m, tol.tol_rank)
}

/// Two-pass modified Gram-Schmidt without the rank certificate, for callers
/// whose input is full rank by construction (graph frames, symplectic
/// transports of frames).
pub(crate) fn mgs(f: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = f.clone();
    for _pass in 0..2 {
        for j in 0..q.ncols() {
            for i in 0..j {
                let qi = q.column(i).clone_owned();
                let proj = qi.dot(&q.column(j));
                let col = q.column(j) - &qi * proj;
                q.set_column(j, &col);
            }
            let norm = q.column(j).norm();
            assert!(norm > 0.0, "rank collapse in unchecked orthonormalisation");
            let col = q.column(j) / norm;
            q.set_column(j, &col);
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, dim: usize) -> SymMatrix {
        let m = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-2.0..2.0));
        SymMatrix::new(m).unwrap()
    }

    #[test]
    fn eig_diagonal_is_sorted() {
        let m = SymMatrix::diagonal(&[3.0, 1.0, 2.0]);
        let eig = sym_eig(&m).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn eig_identity() {
        let m = SymMatrix::identity(4);
        let eig = sym_eig(&m).unwrap();
        assert_eq!(eig.values, vec![1.0; 4]);
    }

    #[test]
    fn eig_swap_matrix() {
        // Characteristic polynomial of [[0,1],[1,0]] is λ² − 1.
        let m = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let eig = sym_eig(&m).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstruction_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..1000 {
            let dim = 1 + (trial % 12);
            let m = random_sym(&mut rng, dim);
            let eig = sym_eig(&m).unwrap();
            let d = DMatrix::from_fn(dim, dim, |i, j| {
                if i == j {
                    eig.values[i]
                } else {
                    0.0
                }
            });
            let rec = &eig.vectors * d * eig.vectors.transpose();
            let err = operator_norm(&(rec - m.as_matrix()));
            assert!(err <= 1e-10 * m.scale(), "dim {dim} err {err:.3e}");
            let orth = eig.vectors.transpose() * &eig.vectors - DMatrix::identity(dim, dim);
            assert!(operator_norm(&orth) <= 1e-10);
        }
    }

    #[test]
    fn eig_is_bit_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_sym(&mut rng, 9);
        let a = sym_eig(&m).unwrap();
        let b = sym_eig(&m).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn kernel_of_explicit_zeros() {
        let m = SymMatrix::diagonal(&[0.0, 0.0, 3.0]);
        let k = kernel_basis(&m, 1e-9).unwrap();
        assert_eq!(k.ncols(), 2);
        // Columns are eigenvectors for eigenvalue 0.
        let img = m.as_matrix() * &k;
        assert!(operator_norm(&img) <= 1e-12);
    }

    #[test]
    fn kernel_of_invertible_is_empty() {
        let k = kernel_basis(&SymMatrix::identity(3), 1e-9).unwrap();
        assert_eq!(k.ncols(), 0);
    }

    #[test]
    fn kernel_of_rank_one_plus() {
        // [[1,1],[1,1]] has eigenpairs (0, (1,-1)/√2) and (2, (1,1)/√2).
        let m = SymMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let k = kernel_basis(&m, 1e-9).unwrap();
        assert_eq!(k.ncols(), 1);
        let expect = 1.0 / 2.0_f64.sqrt();
        assert!((k[(0, 0)].abs() - expect).abs() < 1e-12);
        assert!((k[(0, 0)] + k[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_examples() {
        assert_eq!(operator_norm(&DMatrix::zeros(3, 2)), 0.0);
        let d = DMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                [-5.0, 2.0][i]
            } else {
                0.0
            }
        });
        assert!((operator_norm(&d) - 5.0).abs() < 1e-12);
        // Nilpotent Jordan block: singular values 1, 0.
        let n = dmatrix![0.0, 1.0; 0.0, 0.0];
        assert!((operator_norm(&n) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_transpose_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let r = rng.gen_range(1..6);
            let c = rng.gen_range(1..6);
            let m = DMatrix::from_fn(r, c, |_, _| rng.gen_range(-3.0..3.0));
            let a = operator_norm(&m);
            let b = operator_norm(&m.transpose());
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn quadform_examples() {
        let q = quadform_index(&SymMatrix::diagonal(&[-1.0, 2.0, -3.0]), 1e-9).unwrap();
        assert_eq!(q.morse_index, 2);
        assert_eq!(q.signature, -1);
        assert!(!q.degenerate);

        let q = quadform_index(&SymMatrix::diagonal(&[0.0, 1.0]), 1e-9).unwrap();
        assert!(q.degenerate);

        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let q = quadform_index(&m, 1e-9).unwrap();
        assert_eq!(q.morse_index, 0);
        assert_eq!(q.signature, 2);
    }

    #[test]
    fn quadform_sign_flip_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let dim = rng.gen_range(1..8);
            let m = random_sym(&mut rng, dim);
            let q = quadform_index(&m, 1e-9).unwrap();
            let qn = quadform_index(&m.scaled(-1.0), 1e-9).unwrap();
            assert_eq!(qn.morse_index, q.positive_count());
            assert_eq!(qn.signature, -q.signature);
        }
    }

    #[test]
    fn orthonormalize_identity_unchanged() {
        let id = DMatrix::<f64>::identity(4, 3);
        let q = orthonormalize(&id, 1e-9).unwrap();
        assert!(operator_norm(&(q - id)) < 1e-14);
    }

    #[test]
    fn orthonormalize_single_column() {
        let f = DMatrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let q = orthonormalize(&f, 1e-9).unwrap();
        assert!((q[(0, 0)] - 0.6).abs() < 1e-14);
        assert!((q[(1, 0)] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn orthonormalize_two_columns_spans_plane() {
        let f = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let q = orthonormalize(&f, 1e-9).unwrap();
        let gram = q.transpose() * &q;
        assert!(operator_norm(&(gram - DMatrix::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn orthonormalize_rejects_rank_deficient() {
        let f = DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]);
        assert!(matches!(
            orthonormalize(&f, 1e-9),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn orthonormalize_preserves_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let rows = rng.gen_range(2..7);
            let cols = rng.gen_range(1..=rows);
            let f = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
            let Ok(q) = orthonormalize(&f, 1e-9) else {
                continue;
            };
            // Principal angles between span(f) and span(q) all vanish:
            // projecting f onto span(q) reproduces f.
            let proj = &q * (q.transpose() * &f);
            assert!(operator_norm(&(proj - &f)) <= 1e-10 * operator_norm(&f).max(1.0));
        }
    }
}
