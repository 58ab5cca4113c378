//! Randomized truncated SVD of a sparse binary interaction matrix.
//!
//! The factorization follows the usual randomized range-finder recipe:
//! sketch `Y = A·Ω` with a Gaussian test matrix, orthonormalize, run a
//! couple of power iterations for spectral sharpening, then solve the small
//! projected problem exactly. Everything downstream of the sketch is
//! deterministic, and the sketch draws from a seeded stream, so the whole
//! factorization is reproducible from `(A, rank, seed)`.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Binary sparse matrix in compressed-sparse-row form; entries are
/// implicitly 1.0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrBinaryMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl CsrBinaryMatrix {
    /// Build from per-row column lists. Columns must be in range; duplicate
    /// columns within a row are collapsed.
    pub fn from_rows(rows: &[Vec<u32>], n_cols: usize) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows {
            let mut cols: Vec<u32> = row.clone();
            cols.sort_unstable();
            cols.dedup();
            if let Some(&bad) = cols.iter().find(|&&c| c as usize >= n_cols) {
                return Err(Error::Config(format!(
                    "column {bad} out of range for matrix with {n_cols} columns"
                )));
            }
            col_idx.extend_from_slice(&cols);
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            n_rows: rows.len(),
            n_cols,
            row_ptr,
            col_idx,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    /// Dense `A · B`, shape `n_rows × k`.
    pub fn mul_dense(&self, b: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(b.nrows(), self.n_cols);
        let mut out = Array2::zeros((self.n_rows, b.ncols()));
        for r in 0..self.n_rows {
            let mut acc = out.row_mut(r);
            for &c in self.row(r) {
                acc.scaled_add(1.0, &b.row(c as usize));
            }
        }
        out
    }

    /// Dense `Aᵀ · B`, shape `n_cols × k`.
    pub fn transpose_mul_dense(&self, b: &Array2<f64>) -> Array2<f64> {
        debug_assert_eq!(b.nrows(), self.n_rows);
        let mut out = Array2::zeros((self.n_cols, b.ncols()));
        for r in 0..self.n_rows {
            let src = b.row(r);
            for &c in self.row(r) {
                out.row_mut(c as usize).scaled_add(1.0, &src);
            }
        }
        out
    }

    /// Dense copy, for small oracles and tests.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.n_rows, self.n_cols));
        for r in 0..self.n_rows {
            for &c in self.row(r) {
                out[[r, c as usize]] = 1.0;
            }
        }
        out
    }
}

/// Rank-`k` factorization `A ≈ U·diag(σ)·Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSvd {
    /// `n_rows × rank`, orthonormal columns.
    pub u: Array2<f64>,
    /// Singular values, descending.
    pub singular_values: Array1<f64>,
    /// `rank × n_cols`; rows are the right singular vectors.
    pub vt: Array2<f64>,
}

/// Modified Gram-Schmidt with a re-orthogonalization pass. Columns that
/// collapse numerically are zeroed rather than renormalized.
fn orthonormalize_columns(columns: &mut [Array1<f64>]) {
    for j in 0..columns.len() {
        for _pass in 0..2 {
            for i in 0..j {
                let proj = columns[i].dot(&columns[j]);
                let (left, right) = columns.split_at_mut(j);
                right[0].scaled_add(-proj, &left[i]);
            }
        }
        let norm = columns[j].dot(&columns[j]).sqrt();
        if norm > 1e-12 {
            columns[j].mapv_inplace(|v| v / norm);
        } else {
            columns[j].fill(0.0);
        }
    }
}

fn to_columns(m: &Array2<f64>) -> Vec<Array1<f64>> {
    (0..m.ncols()).map(|j| m.column(j).to_owned()).collect()
}

fn from_columns(columns: &[Array1<f64>]) -> Array2<f64> {
    let rows = columns[0].len();
    let mut out = Array2::zeros((rows, columns.len()));
    for (j, col) in columns.iter().enumerate() {
        out.column_mut(j).assign(col);
    }
    out
}

fn orth(m: &Array2<f64>) -> Array2<f64> {
    let mut cols = to_columns(m);
    orthonormalize_columns(&mut cols);
    from_columns(&cols)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in descending order with matching eigenvector columns.
/// Intended for the small projected matrices of the randomized SVD.
pub(crate) fn jacobi_eigh(mut a: Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut v: Array2<f64> = Array2::eye(n);
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(f64::MIN_POSITIVE);

    for _sweep in 0..128 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]] * a[[p, q]])
            .sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let tau = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[[i, p]];
                    let aiq = a[[i, q]];
                    a[[i, p]] = c * aip - s * aiq;
                    a[[i, q]] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[[p, i]];
                    let aqi = a[[q, i]];
                    a[[p, i]] = c * api - s * aqi;
                    a[[q, i]] = s * api + c * aqi;
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]));
    let values: Vec<f64> = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&v.column(src));
    }
    (values, vectors)
}

/// Randomized truncated SVD with Gaussian range finding.
///
/// `oversample` extra sketch directions and `power_iters` subspace
/// iterations trade accuracy for work; the defaults used by the pipeline
/// are 10 and 2.
pub fn randomized_svd(
    a: &CsrBinaryMatrix,
    rank: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<TruncatedSvd> {
    let min_dim = a.n_rows().min(a.n_cols());
    if rank == 0 {
        return Err(Error::Config("SVD rank must be at least 1".into()));
    }
    if rank > min_dim {
        return Err(Error::Config(format!(
            "SVD rank {rank} exceeds min(rows, cols) = {min_dim}"
        )));
    }
    let sketch = (rank + oversample).min(min_dim);

    let mut rng = crate::rng::stream_rng(seed, &[0x53_56_44]);
    let omega = Array2::from_shape_fn((a.n_cols(), sketch), |_| StandardNormal.sample(&mut rng));

    let mut q = orth(&a.mul_dense(&omega));
    for _ in 0..power_iters {
        let z = orth(&a.transpose_mul_dense(&q));
        q = orth(&a.mul_dense(&z));
    }

    // Projected problem: B = Qᵀ A, decomposed through the k×k Gram matrix.
    let t = a.transpose_mul_dense(&q); // n_cols × k = Bᵀ
    let gram = t.t().dot(&t); // B Bᵀ
    let (eigenvalues, w) = jacobi_eigh(gram);

    let mut singular_values = Array1::zeros(rank);
    let mut vt = Array2::zeros((rank, a.n_cols()));
    let u_full = q.dot(&w); // n_rows × k
    let mut u = Array2::zeros((a.n_rows(), rank));
    for i in 0..rank {
        let sigma = eigenvalues[i].max(0.0).sqrt();
        singular_values[i] = sigma;
        u.column_mut(i).assign(&u_full.column(i));
        if sigma > 1e-12 {
            // v_i = Bᵀ w_i / σ_i
            let col = t.dot(&w.column(i));
            vt.row_mut(i).assign(&(&col / sigma));
        }
    }

    Ok(TruncatedSvd {
        u,
        singular_values,
        vt,
    })
}
