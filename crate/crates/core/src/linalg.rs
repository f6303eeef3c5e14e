//! Sparse CSR storage and the linear solvers used for the per-step systems.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from (row, col, value) triplets, summing
    /// duplicates. Triplets are sorted internally, so insertion order does
    /// not affect the structure (it can affect value rounding, which is why
    /// assembly scatters in deterministic cell order).
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_counts = vec![0usize; n_rows];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n_rows && c < n_cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_counts[r] += 1;
                last = Some((r, c));
            }
        }
        let mut row_ptr = vec![0usize; n_rows + 1];
        for i in 0..n_rows {
            row_ptr[i + 1] = row_ptr[i] + row_counts[i];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    /// Matrix-vector product y = A x.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "spmv: vector length {} vs {} columns",
                x.len(),
                self.n_cols
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            y[i] = s;
        }
        Ok(y)
    }

    /// A + B (same dimensions; structure is the union).
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        self.add_scaled(other, 1.0)
    }

    /// A + s * B.
    pub fn add_scaled(&self, other: &CsrMatrix, s: f64) -> Result<CsrMatrix> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::DimensionMismatch("matrix add".into()));
        }
        let mut triplets = Vec::with_capacity(self.values.len() + other.values.len());
        for i in 0..self.n_rows {
            let (c1, v1) = self.row(i);
            for (c, v) in c1.iter().zip(v1) {
                triplets.push((i, *c, *v));
            }
            let (c2, v2) = other.row(i);
            for (c, v) in c2.iter().zip(v2) {
                triplets.push((i, *c, s * *v));
            }
        }
        Ok(CsrMatrix::from_triplets(self.n_rows, self.n_cols, triplets))
    }

    /// Scales all values by s, in place.
    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Quadratic form x^T A y.
    pub fn quadratic_form(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let ay = self.spmv(y)?;
        Ok(x.iter().zip(&ay).map(|(a, b)| a * b).sum())
    }

    /// Replaces row i by the identity row (used for Dirichlet constraints).
    pub fn set_identity_row(&mut self, i: usize) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        let mut has_diag = false;
        for k in lo..hi {
            if self.col_idx[k] == i {
                self.values[k] = 1.0;
                has_diag = true;
            } else {
                self.values[k] = 0.0;
            }
        }
        assert!(has_diag, "row {i} has no diagonal entry");
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                d[i][*c] += v;
            }
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Dense LU with partial pivoting; only for dimension <= 2000.
    DirectSmall,
    /// Restarted GMRES(50) with ILU(0), Jacobi fallback on zero pivots.
    Gmres,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolveMethod::Gmres,
            tol: 1e-10,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationReport {
    pub iterations: usize,
    pub residual: f64,
    pub used_jacobi_fallback: bool,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dense LU with partial pivoting.
pub fn dense_lu_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("zero-dimension system".into()));
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (piv, _) = (k..n)
            .map(|i| (i, m[i][k].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if m[piv][k].abs() < 1e-300 {
            return Err(Error::SolverDiverged { residual: f64::INFINITY, iterations: 0 });
        }
        m.swap(k, piv);
        x.swap(k, piv);
        perm.swap(k, piv);
        for i in (k + 1)..n {
            let factor = m[i][k] / m[k][k];
            m[i][k] = factor;
            for j in (k + 1)..n {
                m[i][j] -= factor * m[k][j];
            }
            x[i] -= factor * x[k];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    Ok(x)
}

/// ILU(0) factorization on the sparsity pattern of A.
/// Returns None when a zero pivot is encountered.
struct Ilu0 {
    mat: CsrMatrix,
    diag_ptr: Vec<usize>,
}

impl Ilu0 {
    fn factor(a: &CsrMatrix) -> Option<Ilu0> {
        let n = a.n_rows;
        let mut m = a.clone();
        let mut diag_ptr = vec![usize::MAX; n];
        for i in 0..n {
            for k in m.row_ptr[i]..m.row_ptr[i + 1] {
                if m.col_idx[k] == i {
                    diag_ptr[i] = k;
                }
            }
            if diag_ptr[i] == usize::MAX {
                return None;
            }
        }
        // IKJ variant restricted to the pattern
        let mut work_pos = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (m.row_ptr[i], m.row_ptr[i + 1]);
            for k in lo..hi {
                work_pos[m.col_idx[k]] = k;
            }
            for kk in lo..hi {
                let k = m.col_idx[kk];
                if k >= i {
                    break;
                }
                let pivot = m.values[diag_ptr[k]];
                if pivot.abs() < 1e-300 {
                    for k2 in lo..hi {
                        work_pos[m.col_idx[k2]] = usize::MAX;
                    }
                    return None;
                }
                let factor = m.values[kk] / pivot;
                m.values[kk] = factor;
                for jj in (diag_ptr[k] + 1)..m.row_ptr[k + 1] {
                    let j = m.col_idx[jj];
                    let pos = work_pos[j];
                    if pos != usize::MAX {
                        m.values[pos] -= factor * m.values[jj];
                    }
                }
            }
            if m.values[diag_ptr[i]].abs() < 1e-300 {
                for k in lo..hi {
                    work_pos[m.col_idx[k]] = usize::MAX;
                }
                return None;
            }
            for k in lo..hi {
                work_pos[m.col_idx[k]] = usize::MAX;
            }
        }
        Some(Ilu0 { mat: m, diag_ptr })
    }

    /// z = (LU)^{-1} r.
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.mat.n_rows;
        // forward solve L z = r (unit diagonal)
        for i in 0..n {
            let mut s = r[i];
            for k in self.mat.row_ptr[i]..self.diag_ptr[i] {
                s -= self.mat.values[k] * z[self.mat.col_idx[k]];
            }
            z[i] = s;
        }
        // backward solve U z = z
        for i in (0..n).rev() {
            let mut s = z[i];
            for k in (self.diag_ptr[i] + 1)..self.mat.row_ptr[i + 1] {
                s -= self.mat.values[k] * z[self.mat.col_idx[k]];
            }
            z[i] = s / self.mat.values[self.diag_ptr[i]];
        }
    }
}

enum Precond {
    Ilu(Ilu0),
    Jacobi(Vec<f64>),
}

impl Precond {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::Ilu(ilu) => ilu.apply(r, z),
            Precond::Jacobi(d) => {
                for (i, zi) in z.iter_mut().enumerate() {
                    *zi = r[i] * d[i];
                }
            }
        }
    }
}

const GMRES_RESTART: usize = 50;

/// Right-preconditioned restarted GMRES.
fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, IterationReport)> {
    let n = a.n_rows;
    let bnorm = norm2(b).max(f64::MIN_POSITIVE);
    let (pc, used_jacobi) = match Ilu0::factor(a) {
        Some(ilu) => (Precond::Ilu(ilu), false),
        None => {
            let mut d = vec![1.0; n];
            for i in 0..n {
                let (cols, vals) = a.row(i);
                for (c, v) in cols.iter().zip(vals) {
                    if *c == i && v.abs() > 1e-300 {
                        d[i] = 1.0 / v;
                    }
                }
            }
            (Precond::Jacobi(d), true)
        }
    };
    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    let mut total_iter = 0usize;
    loop {
        let ax = a.spmv(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        if beta <= tol * bnorm {
            return Ok((
                x,
                IterationReport {
                    iterations: total_iter,
                    residual: beta,
                    used_jacobi_fallback: used_jacobi,
                },
            ));
        }
        if total_iter >= max_iter {
            return Err(Error::SolverDiverged {
                residual: beta / bnorm,
                iterations: total_iter,
            });
        }
        // Arnoldi with right preconditioning: A M^{-1}
        let m = GMRES_RESTART.min(max_iter - total_iter);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0f64; m]; m + 1];
        let mut cs = vec![0.0f64; m];
        let mut sn = vec![0.0f64; m];
        let mut g = vec![0.0f64; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        let mut z = vec![0.0; n];
        for k in 0..m {
            pc.apply(&v[k], &mut z);
            let mut w = a.spmv(&z)?;
            for i in 0..=k {
                let hik: f64 = w.iter().zip(&v[i]).map(|(a, b)| a * b).sum();
                h[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(&v[i]) {
                    *wj -= hik * vj;
                }
            }
            let hk1 = norm2(&w);
            h[k + 1][k] = hk1;
            // Givens rotations
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom < 1e-300 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / denom;
                sn[k] = h[k + 1][k] / denom;
            }
            h[k][k] = cs[k] * h[k][k] + sn[k] * h[k + 1][k];
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total_iter += 1;
            k_used = k + 1;
            let res = g[k + 1].abs();
            if res <= tol * bnorm || hk1 < 1e-300 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hk1).collect());
        }
        // solve the triangular system for the Krylov coefficients
        let mut y = vec![0.0f64; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i].abs() > 1e-300 { s / h[i][i] } else { 0.0 };
        }
        let mut dx = vec![0.0f64; n];
        for (j, yj) in y.iter().enumerate() {
            for (d, vj) in dx.iter_mut().zip(&v[j]) {
                *d += yj * vj;
            }
        }
        pc.apply(&dx.clone(), &mut dx);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
}

/// Solves A x = b with the configured method. `x0` (when given) seeds the
/// iterative solver.
pub fn solve(
    a: &CsrMatrix,
    b: &[f64],
    config: &SolverConfig,
    x0: Option<&[f64]>,
) -> Result<(Vec<f64>, IterationReport)> {
    if a.n_rows == 0 {
        return Err(Error::DimensionMismatch("zero-dimension system".into()));
    }
    if a.n_rows != a.n_cols {
        return Err(Error::DimensionMismatch("matrix not square".into()));
    }
    if b.len() != a.n_rows {
        return Err(Error::DimensionMismatch("rhs length".into()));
    }
    match config.method {
        SolveMethod::DirectSmall => {
            if a.n_rows > 2000 {
                return Err(Error::InvalidParameter(format!(
                    "DIRECT_SMALL limited to dimension 2000, got {}",
                    a.n_rows
                )));
            }
            let x = dense_lu_solve(&a.to_dense(), b)?;
            let ax = a.spmv(&x)?;
            let res = norm2(
                &b.iter()
                    .zip(&ax)
                    .map(|(bi, ai)| bi - ai)
                    .collect::<Vec<f64>>(),
            );
            Ok((
                x,
                IterationReport {
                    iterations: 0,
                    residual: res,
                    used_jacobi_fallback: false,
                },
            ))
        }
        SolveMethod::Gmres => gmres(a, b, x0, config.tol, config.max_iter),
    }
}
