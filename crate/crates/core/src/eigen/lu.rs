//! Left-looking sparse LU (Gilbert-Peierls) with threshold partial pivoting.
//!
//! Columns are taken in a fill-reducing order; each column of `L` and `U`
//! comes from a sparse triangular solve whose pattern is found by a
//! depth-first search in the graph of the partial `L`. Among rows that pass
//! the threshold test the diagonal is preferred, which keeps the factors
//! close to symmetric for structurally symmetric input.

use num_complex::Complex64;

use super::ordering::amd;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Compressed sparse column storage.
#[derive(Debug, Clone, Default)]
struct Csc {
    colptr: Vec<usize>,
    rowind: Vec<usize>,
    values: Vec<f64>,
}

impl Csc {
    fn with_capacity(n: usize, nnz: usize) -> Self {
        let mut colptr = Vec::with_capacity(n + 1);
        colptr.push(0);
        Csc { colptr, rowind: Vec::with_capacity(nnz), values: Vec::with_capacity(nnz) }
    }

    #[inline]
    fn col(&self, j: usize) -> std::ops::Range<usize> {
        self.colptr[j]..self.colptr[j + 1]
    }
}

#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    /// column order: step `k` factors original column `q[k]`
    q: Vec<usize>,
    /// original row -> pivot step
    pinv: Vec<usize>,
    /// unit lower factor, rows in pivot order, diagonal stored first
    l: Csc,
    /// upper factor, diagonal stored last
    u: Csc,
}

pub const DEFAULT_PIVOT_TOL: f64 = 0.1;

impl SparseLu {
    /// Factorizes `a` with an approximate minimum degree column order.
    pub fn factorize(a: &CsrMatrix) -> Result<Self> {
        let q = amd(a);
        Self::factorize_ordered(a, q, DEFAULT_PIVOT_TOL)
    }

    /// Factorizes `a(:, q)` with pivot threshold `tol` in `(0, 1]`.
    pub fn factorize_ordered(a: &CsrMatrix, q: Vec<usize>, tol: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || q.len() != n {
            return Err(Error::DimensionMismatch(format!("cannot factorize a {:?} matrix", a.shape())));
        }
        // columns of a are the rows of a^T
        let at = a.transpose();
        let anorm = a.max_abs();
        let small = f64::EPSILON * anorm;

        let guess = 4 * a.nnz() + n;
        let mut l = Csc::with_capacity(n, guess);
        let mut u = Csc::with_capacity(n, guess);
        const NONE: usize = usize::MAX;
        let mut pinv = vec![NONE; n];
        let mut x = vec![0.0f64; n];
        let mut xi = vec![0usize; n];
        let mut stack = vec![0usize; n];
        let mut pstack = vec![0usize; n];
        let mut mark = vec![NONE; n];

        for k in 0..n {
            let col = q[k];
            // reach: topological order of rows touched by L \ a(:, col)
            let mut top = n;
            for (i, _) in at.row(col) {
                if mark[i] == k {
                    continue;
                }
                // depth-first search from i
                let mut head: isize = 0;
                stack[0] = i;
                while head >= 0 {
                    let h = head as usize;
                    let j = stack[h];
                    let jnew = pinv[j];
                    if mark[j] != k {
                        mark[j] = k;
                        pstack[h] = if jnew == NONE { 0 } else { l.colptr[jnew] };
                    }
                    let end = if jnew == NONE { 0 } else { l.colptr[jnew + 1] };
                    let mut done = true;
                    let mut p = pstack[h];
                    while p < end {
                        let child = l.rowind[p];
                        p += 1;
                        if mark[child] != k {
                            pstack[h] = p;
                            stack[h + 1] = child;
                            head += 1;
                            done = false;
                            break;
                        }
                    }
                    if done {
                        head -= 1;
                        top -= 1;
                        xi[top] = j;
                    }
                }
            }
            // numerical solve
            for &i in &xi[top..n] {
                x[i] = 0.0;
            }
            for (i, v) in at.row(col) {
                x[i] += v;
            }
            for px in top..n {
                let j = xi[px];
                let jnew = pinv[j];
                if jnew == NONE {
                    continue;
                }
                let xj = x[j];
                // the diagonal of L is one and stored first
                for p in l.colptr[jnew] + 1..l.colptr[jnew + 1] {
                    x[l.rowind[p]] -= l.values[p] * xj;
                }
            }
            // pivot choice
            let mut ipiv = NONE;
            let mut amax = -1.0f64;
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    let t = x[i].abs();
                    if t > amax {
                        amax = t;
                        ipiv = i;
                    }
                } else {
                    u.rowind.push(pinv[i]);
                    u.values.push(x[i]);
                }
            }
            if ipiv == NONE || !(amax > small) {
                return Err(Error::SingularMatrix { column: col });
            }
            if pinv[col] == NONE && x[col].abs() >= amax * tol {
                ipiv = col;
            }
            let pivot = x[ipiv];
            u.rowind.push(k);
            u.values.push(pivot);
            u.colptr.push(u.rowind.len());
            pinv[ipiv] = k;
            l.rowind.push(ipiv);
            l.values.push(1.0);
            for &i in &xi[top..n] {
                if pinv[i] == NONE {
                    l.rowind.push(i);
                    l.values.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
            l.colptr.push(l.rowind.len());
        }
        // rows of L into pivot order
        for r in &mut l.rowind {
            *r = pinv[*r];
        }
        Ok(SparseLu { n, q, pinv, l, u })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries of `L` and `U` (including both diagonals).
    pub fn nnz(&self) -> usize {
        self.l.values.len() + self.u.values.len()
    }

    /// Solves `A x = b` in place, using `work` (length `n`) as scratch.
    pub fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        assert_eq!(work.len(), n);
        // work = P b
        for i in 0..n {
            work[self.pinv[i]] = b[i];
        }
        // L y = work
        for j in 0..n {
            let yj = work[j];
            if yj != 0.0 {
                for p in self.l.colptr[j] + 1..self.l.colptr[j + 1] {
                    work[self.l.rowind[p]] -= self.l.values[p] * yj;
                }
            }
        }
        // U z = y
        for j in (0..n).rev() {
            let r = self.u.col(j);
            let diag = r.end - 1;
            work[j] /= self.u.values[diag];
            let zj = work[j];
            if zj != 0.0 {
                for p in r.start..diag {
                    work[self.u.rowind[p]] -= self.u.values[p] * zj;
                }
            }
        }
        for k in 0..n {
            b[self.q[k]] = work[k];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        let mut work = vec![0.0; self.n];
        self.solve_in_place(&mut x, &mut work);
        x
    }

    /// Solves with a complex right-hand side; the factors are real so real
    /// and imaginary parts are solved separately.
    pub fn solve_complex(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut re: Vec<f64> = b.iter().map(|z| z.re).collect();
        let mut work = vec![0.0; self.n];
        self.solve_in_place(&mut re, &mut work);
        if b.iter().all(|z| z.im == 0.0) {
            return re.into_iter().map(|r| Complex64::new(r, 0.0)).collect();
        }
        let mut im: Vec<f64> = b.iter().map(|z| z.im).collect();
        self.solve_in_place(&mut im, &mut work);
        re.into_iter().zip(im).map(|(r, i)| Complex64::new(r, i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;
    use rand::{Rng, SeedableRng};

    fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.matvec(x);
        let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        r / b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn identity_solve() {
        let lu = SparseLu::factorize(&CsrMatrix::identity(4)).unwrap();
        assert_eq!(lu.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn needs_pivoting() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        let lu = SparseLu::factorize(&t.build()).unwrap();
        assert_eq!(lu.solve(&[1.0, 0.0]), vec![0.0, 1.0]);
    }

    #[test]
    fn singular_is_reported() {
        let mut t = TripletBuilder::new(3, 3);
        t.push(0, 0, 1.0);
        t.push(1, 1, 1.0);
        t.push(2, 0, 1.0);
        assert!(matches!(SparseLu::factorize(&t.build()), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn random_sparse_indefinite() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 300;
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, i, rng.random_range(-1.0..1.0));
            for _ in 0..3 {
                let j = rng.random_range(0..n);
                let v = rng.random_range(-1.0..1.0);
                t.push(i, j, v);
                t.push(j, i, v);
            }
        }
        // a saddle-point style dense row and column with zero diagonal
        let n2 = n + 1;
        let a = t.build();
        let mut t2 = TripletBuilder::new(n2, n2);
        t2.push_block(0, 0, &a);
        for i in 0..n {
            t2.push(i, n, 0.01);
            t2.push(n, i, 0.01);
        }
        let a = t2.build();
        let lu = SparseLu::factorize(&a).unwrap();
        let b: Vec<f64> = (0..n2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = lu.solve(&b);
        assert!(residual(&a, &x, &b) < 1e-10);
        let bc: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, -2.0 * v)).collect();
        let xc = lu.solve_complex(&bc);
        for (p, q) in xc.iter().zip(&x) {
            assert!((p.re - q).abs() < 1e-12 * (1.0 + q.abs()));
            assert!((p.im + 2.0 * q).abs() < 1e-12 * (1.0 + q.abs()));
        }
    }
}
