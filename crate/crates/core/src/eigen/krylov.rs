//! Complex Krylov-Schur iteration for the eigenvalues of largest modulus.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use super::dense::{self, CMat};
use crate::error::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A linear map on `C^n`.
pub trait Operator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64]) -> Vec<Complex64>;
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// wanted Ritz values
    pub nev: usize,
    /// basis size before a restart
    pub ncv: usize,
    /// Ritz values kept on restart
    pub keep: usize,
    /// relative Ritz residual `|b^T y| / |theta|`
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// operator applications on the random start vector
    pub warmup: usize,
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub theta: Complex64,
    pub vector: Vec<Complex64>,
    /// `|b^T y| / |theta|`
    pub estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct KrylovResult {
    /// wanted pairs, largest `|theta|` first
    pub pairs: Vec<RitzPair>,
    pub restarts: usize,
    pub applications: usize,
    pub converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthogonalizes `w` against `basis` with two passes of classical
/// Gram-Schmidt, returning the coefficients.
fn orthogonalize(basis: &[Vec<Complex64>], w: &mut [Complex64]) -> Vec<Complex64> {
    let mut h = vec![ZERO; basis.len()];
    for _ in 0..2 {
        for (k, v) in basis.iter().enumerate() {
            let c = dot(v, w);
            h[k] += c;
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
    }
    h
}

fn random_unit(n: usize, rng: &mut impl Rng, basis: &[Vec<Complex64>]) -> Vec<Complex64> {
    loop {
        let mut w: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
        orthogonalize(basis, &mut w);
        let nw = norm(&w);
        if nw > 1e-8 {
            w.iter_mut().for_each(|z| *z /= nw);
            return w;
        }
    }
}

/// Krylov-Schur iteration for the `nev` eigenvalues of `op` of largest
/// modulus.
pub fn krylov_schur(op: &dyn Operator, opts: &KrylovOptions) -> Result<KrylovResult> {
    let n = op.dim();
    let ncv = opts.ncv.min(n);
    let nev = opts.nev.min(ncv.saturating_sub(1)).max(1);
    let keep = opts.keep.clamp(nev, ncv.saturating_sub(1).max(nev));
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let mut applications = 0;

    let mut v0 = random_unit(n, &mut rng, &[]);
    // push the start vector into the range of the operator; this strips the
    // components along its null space (infinite eigenvalues of the pencil)
    for _ in 0..opts.warmup {
        v0 = op.apply(&v0);
        applications += 1;
        let nv = norm(&v0);
        if nv == 0.0 {
            v0 = random_unit(n, &mut rng, &[]);
        } else {
            v0.iter_mut().for_each(|z| *z /= nv);
        }
    }

    let mut basis: Vec<Vec<Complex64>> = vec![v0];
    // (ncv + 1) x ncv projected matrix
    let mut h = CMat::zeros(ncv + 1, ncv);
    let mut k = 0usize;
    let mut restarts = 0usize;

    loop {
        for j in k..ncv {
            let mut w = op.apply(&basis[j]);
            applications += 1;
            let coeff = orthogonalize(&basis, &mut w);
            let mut beta = norm(&w);
            let scale = norm(&coeff).max(beta);
            for (i, c) in coeff.into_iter().enumerate() {
                h[(i, j)] += c;
            }
            if beta <= 1e-13 * scale || j + 1 == n {
                // invariant subspace: continue with a fresh direction
                if j + 1 < n {
                    w = random_unit(n, &mut rng, &basis);
                }
                beta = 0.0;
            } else {
                w.iter_mut().for_each(|z| *z /= beta);
            }
            h[(j + 1, j)] = Complex64::new(beta, 0.0);
            basis.push(w);
        }

        let s = h.view((0, 0), (ncv, ncv)).into_owned();
        let b: Vec<Complex64> = (0..ncv).map(|j| h[(ncv, j)]).collect();
        let (mut t, mut y) = dense::schur(&s)?;
        let mut order: Vec<usize> = (0..ncv).collect();
        order.sort_by(|&a, &c| {
            let (ta, tc) = (t[(a, a)], t[(c, c)]);
            tc.norm().total_cmp(&ta.norm()).then_with(|| super::eqslantless_cmp(tc, ta))
        });
        dense::reorder(&mut t, &mut y, &order);

        let theta_max = (0..ncv).map(|i| t[(i, i)].norm()).fold(0.0, f64::max);
        let estimate = |i: usize, y: &CMat| -> f64 {
            let r: Complex64 = (0..ncv).map(|p| b[p] * y[(p, i)]).sum();
            r.norm() / t[(i, i)].norm().max(f64::MIN_POSITIVE * theta_max.max(1.0))
        };
        let nconv = (0..nev).filter(|&i| estimate(i, &y) <= opts.tol).count();

        if nconv >= nev || restarts >= opts.max_restarts {
            let pairs = extract(&basis, &t, &y, &b, nev, opts.tol);
            return Ok(KrylovResult { converged: nconv >= nev, pairs, restarts, applications });
        }

        // thick restart on the first `keep` Schur vectors
        restarts += 1;
        let mut kept = Vec::with_capacity(keep + 1);
        for i in 0..keep {
            kept.push(combine(&basis[..ncv], &y, i));
        }
        kept.push(basis.pop().unwrap());
        basis = kept;
        h = CMat::zeros(ncv + 1, ncv);
        for i in 0..keep {
            for jj in i..keep {
                h[(i, jj)] = t[(i, jj)];
            }
            h[(keep, i)] = (0..ncv).map(|p| b[p] * y[(p, i)]).sum();
        }
        k = keep;
    }
}

/// `sum_p basis[p] * y[p, col]`.
fn combine(basis: &[Vec<Complex64>], y: &CMat, col: usize) -> Vec<Complex64> {
    let n = basis[0].len();
    let mut out = vec![ZERO; n];
    for (p, v) in basis.iter().enumerate() {
        let c = y[(p, col)];
        if c != ZERO {
            for (o, vi) in out.iter_mut().zip(v) {
                *o += c * vi;
            }
        }
    }
    out
}

/// Ritz vectors for the leading `nev` diagonal entries of the ordered Schur
/// form `S = Y T Y^H`.
fn extract(basis: &[Vec<Complex64>], t: &CMat, y: &CMat, b: &[Complex64], nev: usize, tol: f64) -> Vec<RitzPair> {
    let ncv = t.nrows();
    let mut pairs = Vec::with_capacity(nev);
    for i in 0..nev {
        let e = dense::triangular_eigenvector(t, i);
        let ev = DMatrix::from_vec(ncv, 1, e);
        let z = y * ev;
        let zn = z.norm();
        let r: Complex64 = (0..ncv).map(|p| b[p] * z[p]).sum();
        let theta = t[(i, i)];
        let estimate = r.norm() / (zn * theta.norm()).max(f64::MIN_POSITIVE);
        let zc = DMatrix::from_column_slice(ncv, 1, z.as_slice());
        let mut vector = vec![ZERO; basis[0].len()];
        for (p, v) in basis[..ncv].iter().enumerate() {
            let c = zc[p] / zn;
            for (o, vi) in vector.iter_mut().zip(v) {
                *o += c * vi;
            }
        }
        pairs.push(RitzPair { theta, vector, estimate, converged: estimate <= tol });
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Diagonal(Vec<f64>);

    impl Operator for Diagonal {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
            x.iter().zip(&self.0).map(|(a, d)| a * d).collect()
        }
    }

    /// Real block-diagonal operator with 2x2 rotation blocks: complex pairs.
    struct Rotations(Vec<(f64, f64)>);

    impl Operator for Rotations {
        fn dim(&self) -> usize {
            2 * self.0.len()
        }
        fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
            let mut y = vec![ZERO; x.len()];
            for (k, &(a, b)) in self.0.iter().enumerate() {
                y[2 * k] = x[2 * k] * a - x[2 * k + 1] * b;
                y[2 * k + 1] = x[2 * k] * b + x[2 * k + 1] * a;
            }
            y
        }
    }

    fn opts(nev: usize) -> KrylovOptions {
        KrylovOptions { nev, ncv: 3 * nev + 20, keep: 2 * nev, tol: 1e-12, max_restarts: 200, seed: 1, warmup: 0 }
    }

    #[test]
    fn largest_of_diagonal() {
        let d: Vec<f64> = (1..=400).map(|i| 1.0 / i as f64).collect();
        let r = krylov_schur(&Diagonal(d), &opts(5)).unwrap();
        assert!(r.converged);
        for (i, p) in r.pairs.iter().enumerate() {
            assert!((p.theta - Complex64::new(1.0 / (i + 1) as f64, 0.0)).norm() < 1e-10, "{}", p.theta);
            assert!(p.vector[i].norm() > 1.0 - 1e-8);
        }
    }

    #[test]
    fn complex_pairs_of_real_operator() {
        let blocks: Vec<(f64, f64)> = (1..=150).map(|i| (1.0 / i as f64, 0.5 / i as f64)).collect();
        let r = krylov_schur(&Rotations(blocks), &opts(4)).unwrap();
        assert!(r.converged);
        let want = [Complex64::new(1.0, 0.5), Complex64::new(1.0, -0.5), Complex64::new(0.5, 0.25), Complex64::new(0.5, -0.25)];
        for w in want {
            assert!(r.pairs.iter().any(|p| (p.theta - w).norm() < 1e-10), "{w} missing");
        }
    }

    #[test]
    fn tiny_operator() {
        let r = krylov_schur(&Diagonal(vec![3.0, 2.0, 1.0]), &opts(2)).unwrap();
        assert!((r.pairs[0].theta.re - 3.0).abs() < 1e-12);
        assert!((r.pairs[1].theta.re - 2.0).abs() < 1e-12);
    }
}
