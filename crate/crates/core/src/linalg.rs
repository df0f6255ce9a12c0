//! Compressed sparse row matrices and the iterative/dense solvers used by
//! the scheme: Jacobi-preconditioned CG for SPD systems, MINRES as the
//! symmetric-indefinite fallback, BiCGStab for the nonsymmetric variants,
//! and a small dense LU.
//!
//! All kernels are deterministic: row-parallel products write disjoint
//! outputs and reductions run serially in index order.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    /// y = A x (row parallel, bitwise deterministic).
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        let offsets = &self.row_offsets;
        let cols = &self.col_indices;
        let vals = &self.values;
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let mut acc = 0.0;
            for k in offsets[i]..offsets[i + 1] {
                acc += vals[k] * x[cols[k] as usize];
            }
            *yi = acc;
        });
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                if *c as usize == i {
                    d[i] = *v;
                }
            }
        }
        d
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0u32; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        let mut cursor = counts.clone();
        for i in 0..self.n_rows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let c = self.col_indices[k] as usize;
                cols[cursor[c]] = i as u32;
                vals[cursor[c]] = self.values[k];
                cursor[c] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets: counts,
            col_indices: cols,
            values: vals,
        }
    }

    /// max_ij |A_ij - A_ji| over the stored pattern.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = t.row(i);
            // Both rows are sorted by column; merge.
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let c1 = ca.get(p).copied().unwrap_or(u32::MAX);
                let c2 = cb.get(q).copied().unwrap_or(u32::MAX);
                if c1 == c2 {
                    worst = worst.max((va[p] - vb[q]).abs());
                    p += 1;
                    q += 1;
                } else if c1 < c2 {
                    worst = worst.max(va[p].abs());
                    p += 1;
                } else {
                    worst = worst.max(vb[q].abs());
                    q += 1;
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// A := A + s * B restricted to A's pattern; panics if B has an entry
    /// outside A's pattern.
    pub fn add_scaled_into_pattern(&mut self, s: f64, b: &CsrMatrix) {
        assert_eq!(self.n_rows, b.n_rows);
        for i in 0..b.n_rows {
            let (bc, bv) = b.row(i);
            let (start, end) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let ac = &self.col_indices[start..end];
            let mut k = 0;
            for (c, v) in bc.iter().zip(bv) {
                while ac[k] < *c {
                    k += 1;
                }
                assert_eq!(ac[k], *c, "pattern mismatch at row {i}");
                self.values[start + k] += s * v;
            }
        }
    }
}

/// Accumulates (row, col, value) triplets and compresses to CSR with
/// duplicates summed in insertion order; assembly order is fixed, so the
/// result is deterministic.
pub struct TripletBuilder {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<(u32, u32, f64)>,
}

impl TripletBuilder {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        TripletBuilder {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        TripletBuilder {
            n_rows,
            n_cols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n_rows && col < self.n_cols);
        self.entries.push((row as u32, col as u32, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        // Stable sort keeps insertion order among duplicates, making the
        // accumulation order (and hence rounding) reproducible.
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0usize; self.n_rows + 1];
        let mut col_indices: Vec<u32> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r as usize + 1] = col_indices.len();
                last = Some((r, c));
            }
        }
        // Fill offsets of empty rows.
        for i in 1..=self.n_rows {
            if row_offsets[i] < row_offsets[i - 1] {
                row_offsets[i] = row_offsets[i - 1];
            }
        }
        CsrMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets,
            col_indices,
            values,
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub struct IterativeOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients. Returns Err on breakdown
/// (non-positive curvature, i.e. the matrix is not SPD) or when `max_iter`
/// is exhausted before ||Ax - b|| <= tol * ||b||.
pub fn cg_jacobi(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<IterativeOutcome> {
    let n = a.n_rows;
    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(IterativeOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = tol * b_norm;

    let mut r = b.to_vec();
    if x0.is_some() {
        let ax = a.mul_vec(&x);
        for i in 0..n {
            r[i] -= ax[i];
        }
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 0..max_iter {
        let r_norm = norm2(&r);
        if r_norm <= target {
            return Ok(IterativeOutcome {
                x,
                iterations: it,
                residual: r_norm,
            });
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailure {
                message: format!("CG breakdown: p'Ap = {pap:.3e} (matrix not SPD)"),
                iterations: it,
            });
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let r_norm = norm2(&r);
    if r_norm <= target {
        Ok(IterativeOutcome {
            x,
            iterations: max_iter,
            residual: r_norm,
        })
    } else {
        Err(Error::SolverFailure {
            message: format!(
                "CG did not converge: |r| = {r_norm:.3e}, target {target:.3e}"
            ),
            iterations: max_iter,
        })
    }
}

/// MINRES for symmetric (possibly indefinite) systems, with Jacobi scaling
/// applied symmetrically. Used when the fully implicit Jacobian loses
/// positive definiteness.
pub fn minres(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<IterativeOutcome> {
    let n = a.n_rows;
    // Symmetric diagonal scaling keeps the operator symmetric.
    let scale: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d.abs() > 0.0 { 1.0 / d.abs().sqrt() } else { 1.0 })
        .collect();
    let bs: Vec<f64> = b.iter().zip(&scale).map(|(bi, s)| bi * s).collect();
    let apply = |v: &[f64], out: &mut [f64], tmp: &mut [f64]| {
        for i in 0..n {
            tmp[i] = v[i] * scale[i];
        }
        a.mul_vec_into(tmp, out);
        for i in 0..n {
            out[i] *= scale[i];
        }
    };

    let b_norm = norm2(&bs);
    if b_norm == 0.0 {
        return Ok(IterativeOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut tmp = vec![0.0; n];
    let mut v_prev = vec![0.0; n];
    let mut v = bs.clone();
    let mut beta = b_norm;
    for vi in v.iter_mut() {
        *vi /= beta;
    }
    let mut w = vec![0.0; n];
    let mut w_prev = vec![0.0; n];
    let mut x = vec![0.0; n];
    let (mut c, mut s) = (1.0f64, 0.0f64);
    let (mut c_prev, mut s_prev) = (1.0f64, 0.0f64);
    let mut eta = beta;
    let mut av = vec![0.0; n];

    for it in 0..max_iter {
        apply(&v, &mut av, &mut tmp);
        let alpha = dot(&v, &av);
        for i in 0..n {
            av[i] -= alpha * v[i] + beta * v_prev[i];
        }
        let beta_new = norm2(&av);

        // Apply previous rotations to the new tridiagonal column.
        let delta = c * alpha - c_prev * s * beta;
        let gamma2 = s * alpha + c_prev * c * beta;
        let epsilon = s_prev * beta;
        let gamma1 = (delta * delta + beta_new * beta_new).sqrt();
        if gamma1 == 0.0 {
            break;
        }
        let (c_new, s_new) = (delta / gamma1, beta_new / gamma1);

        for i in 0..n {
            let wi = (v[i] - gamma2 * w[i] - epsilon * w_prev[i]) / gamma1;
            w_prev[i] = w[i];
            w[i] = wi;
        }
        axpy(&mut x, c_new * eta, &w);
        eta = -s_new * eta;

        c_prev = c;
        s_prev = s;
        c = c_new;
        s = s_new;

        if beta_new == 0.0 || eta.abs() <= tol * b_norm {
            let xs: Vec<f64> = x.iter().zip(&scale).map(|(xi, sc)| xi * sc).collect();
            let res = {
                let ax = a.mul_vec(&xs);
                let d: Vec<f64> = ax.iter().zip(b).map(|(a, b)| a - b).collect();
                norm2(&d)
            };
            return Ok(IterativeOutcome {
                x: xs,
                iterations: it + 1,
                residual: res,
            });
        }
        std::mem::swap(&mut v_prev, &mut v);
        for i in 0..n {
            v[i] = av[i] / beta_new;
        }
        beta = beta_new;
    }
    Err(Error::SolverFailure {
        message: "MINRES did not converge".into(),
        iterations: max_iter,
    })
}

/// Jacobi-preconditioned BiCGStab for the nonsymmetric systems produced by
/// lambda = 0, +1.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<IterativeOutcome> {
    let n = a.n_rows;
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(IterativeOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let target = tol * b_norm;

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0f64, 1.0f64, 1.0f64);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut t = vec![0.0; n];

    for it in 0..max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            return Err(Error::SolverFailure {
                message: "BiCGStab breakdown (rho ~ 0)".into(),
                iterations: it,
            });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        for i in 0..n {
            ph[i] = p[i] * inv_diag[i];
        }
        a.mul_vec_into(&ph, &mut v);
        alpha = rho / dot(&r_hat, &v);
        let mut s = r.clone();
        axpy(&mut s, -alpha, &v);
        if norm2(&s) <= target {
            axpy(&mut x, alpha, &ph);
            return Ok(IterativeOutcome {
                x,
                iterations: it + 1,
                residual: norm2(&s),
            });
        }
        for i in 0..n {
            sh[i] = s[i] * inv_diag[i];
        }
        a.mul_vec_into(&sh, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) <= target {
            return Ok(IterativeOutcome {
                x,
                iterations: it + 1,
                residual: norm2(&r),
            });
        }
    }
    Err(Error::SolverFailure {
        message: "BiCGStab did not converge".into(),
        iterations: max_iter,
    })
}

/// Dense LU solve with partial pivoting; `a` is row-major n x n.
pub fn dense_solve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n);
    let mut lu = a.to_vec();
    let mut x = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut pivot = k;
        let mut best = lu[perm[k] * n + k].abs();
        for i in (k + 1)..n {
            let v = lu[perm[i] * n + k].abs();
            if v > best {
                best = v;
                pivot = i;
            }
        }
        if best == 0.0 {
            return Err(Error::SolverFailure {
                message: "singular dense system".into(),
                iterations: 0,
            });
        }
        perm.swap(k, pivot);
        let pk = perm[k];
        for i in (k + 1)..n {
            let pi = perm[i];
            let m = lu[pi * n + k] / lu[pk * n + k];
            lu[pi * n + k] = m;
            for j in (k + 1)..n {
                lu[pi * n + j] -= m * lu[pk * n + j];
            }
        }
    }
    // Forward/backward substitution on the permuted system.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = x[perm[i]];
        for j in 0..i {
            s -= lu[perm[i] * n + j] * y[j];
        }
        y[i] = s;
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s -= lu[perm[i] * n + j] * x[j];
        }
        x[i] = s / lu[perm[i] * n + i];
    }
    Ok(x)
}

/// Eigenvalues (ascending) and eigenvectors of a dense symmetric matrix via
/// cyclic Jacobi rotations. Columns of the returned matrix are eigenvectors.
pub fn dense_symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + norm2(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].partial_cmp(&m[j * n + j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + new_col] = v[k * n + old_col];
        }
    }
    (eigenvalues, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_csr() -> CsrMatrix {
        // [[4, 1, 0], [1, 3, -1], [0, -1, 2]]
        let mut t = TripletBuilder::new(3, 3);
        t.add(0, 0, 4.0);
        t.add(0, 1, 1.0);
        t.add(1, 0, 1.0);
        t.add(1, 1, 3.0);
        t.add(1, 2, -1.0);
        t.add(2, 1, -1.0);
        t.add(2, 2, 2.0);
        t.build()
    }

    #[test]
    fn triplets_merge_duplicates() {
        let mut t = TripletBuilder::new(2, 2);
        t.add(0, 0, 1.0);
        t.add(0, 0, 2.0);
        t.add(1, 1, 5.0);
        t.add(0, 1, -1.0);
        let m = t.build();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row(0).1, &[3.0, -1.0]);
        let cols: Vec<u32> = m.row(0).0.to_vec();
        assert_eq!(cols, vec![0, 1]);
    }

    #[test]
    fn columns_strictly_increasing() {
        let m = small_csr();
        for i in 0..m.n_rows {
            let (cols, _) = m.row(i);
            for w in cols.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let m = small_csr();
        let x = vec![1.0, -2.0, 0.5];
        let y = m.mul_vec(&x);
        assert_eq!(y, vec![2.0, -5.5, 3.0]);
    }

    #[test]
    fn cg_solves_spd() {
        let m = small_csr();
        let b = vec![1.0, 2.0, 3.0];
        let out = cg_jacobi(&m, &b, None, 1e-12, 100).unwrap();
        let r = m.mul_vec(&out.x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn cg_zero_rhs() {
        let m = small_csr();
        let out = cg_jacobi(&m, &[0.0; 3], None, 1e-12, 100).unwrap();
        assert_eq!(out.x, vec![0.0; 3]);
    }

    #[test]
    fn cg_detects_indefinite() {
        let mut t = TripletBuilder::new(2, 2);
        t.add(0, 0, 1.0);
        t.add(1, 1, -1.0);
        let m = t.build();
        assert!(cg_jacobi(&m, &[1.0, 1.0], None, 1e-12, 50).is_err());
    }

    #[test]
    fn minres_handles_indefinite() {
        let mut t = TripletBuilder::new(3, 3);
        t.add(0, 0, 2.0);
        t.add(1, 1, -3.0);
        t.add(2, 2, 1.0);
        t.add(0, 1, 0.5);
        t.add(1, 0, 0.5);
        let m = t.build();
        let b = vec![1.0, -1.0, 2.0];
        let out = minres(&m, &b, 1e-12, 200).unwrap();
        let r = m.mul_vec(&out.x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-9, "{:?}", r);
        }
    }

    #[test]
    fn bicgstab_solves_nonsymmetric() {
        let mut t = TripletBuilder::new(3, 3);
        t.add(0, 0, 3.0);
        t.add(0, 1, 1.0);
        t.add(1, 1, 4.0);
        t.add(1, 2, -2.0);
        t.add(2, 0, 0.5);
        t.add(2, 2, 5.0);
        let m = t.build();
        let b = vec![1.0, 0.0, -1.0];
        let out = bicgstab(&m, &b, 1e-12, 200).unwrap();
        let r = m.mul_vec(&out.x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_lu_random_spd_oracle() {
        // Random SPD 50x50 system: CG against the dense LU path.
        let n = 50;
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut g = vec![0.0; n * n];
        for v in g.iter_mut() {
            *v = rnd();
        }
        // A = G^T G + n I is SPD.
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += g[k * n + i] * g[k * n + j];
                }
                a[i * n + j] = s + if i == j { n as f64 } else { 0.0 };
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rnd()).collect();
        let x_dense = dense_solve(&a, &b).unwrap();

        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            for j in 0..n {
                t.add(i, j, a[i * n + j]);
            }
        }
        let m = t.build();
        let x_cg = cg_jacobi(&m, &b, None, 1e-13, 1000).unwrap().x;
        for i in 0..n {
            assert!((x_cg[i] - x_dense[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn jacobi_eigen_small() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let (vals, vecs) = dense_symmetric_eigen(&[2.0, 1.0, 1.0, 2.0], 2);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // Eigenvector for eigenvalue 1 is (1, -1)/sqrt(2) up to sign.
        let ratio = vecs[0] / vecs[2];
        assert!((ratio + 1.0).abs() < 1e-10);
    }

    #[test]
    fn transpose_roundtrip() {
        let m = small_csr();
        let tt = m.transpose().transpose();
        assert_eq!(m.row_offsets, tt.row_offsets);
        assert_eq!(m.col_indices, tt.col_indices);
        assert_eq!(m.values, tt.values);
    }
}
