//! Dense complex eigenvalue routines.
//!
//! * `pencil_eigenvalues`: generalized eigenvalues of `(A, B)` by
//!   Hessenberg-triangular reduction and single-shift QZ, following the
//!   structure of LAPACK's `zgghrd` / `zhgeqz`. Infinite eigenvalues come out
//!   with `beta == 0`.
//! * `schur`: complex Schur form of a small matrix with Schur vectors, and
//!   `swap_adjacent` / `reorder` to move selected eigenvalues to the top.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Eigenvalues with `|lambda| > INFINITY_RATIO * median |lambda_finite|`
/// are classified as infinite.
pub const INFINITY_RATIO: f64 = 1e8;

/// `lambda = alpha / beta`; `beta` is real and non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseEigenvalue {
    pub alpha: Complex64,
    pub beta: f64,
}

impl DenseEigenvalue {
    pub fn value(&self) -> Option<Complex64> {
        (self.beta > 0.0).then(|| self.alpha / self.beta)
    }
}

#[inline]
fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Plane rotation `[c s; -conj(s) c]` mapping `(f, g)` to `(r, 0)`.
pub(crate) fn lartg(f: Complex64, g: Complex64) -> (f64, Complex64, Complex64) {
    if g == ZERO {
        return (1.0, ZERO, f);
    }
    if f == ZERO {
        let ga = g.norm();
        return (0.0, g.conj() / ga, Complex64::new(ga, 0.0));
    }
    let fa = f.norm();
    let ga = g.norm();
    let d = fa.hypot(ga);
    let phase = f / fa;
    (fa / d, phase * g.conj() / d, phase * d)
}

/// Rotates rows `i`, `j` over columns `cols`: `(x, y) <- (c x + s y, -conj(s) x + c y)`.
#[inline]
fn rot_rows(m: &mut CMat, i: usize, j: usize, cols: std::ops::RangeInclusive<usize>, c: f64, s: Complex64) {
    for k in cols {
        let x = m[(i, k)];
        let y = m[(j, k)];
        m[(i, k)] = x * c + s * y;
        m[(j, k)] = -s.conj() * x + y * c;
    }
}

/// Rotates columns `i`, `j` over rows `rows` with the same formula.
#[inline]
fn rot_cols(m: &mut CMat, i: usize, j: usize, rows: std::ops::RangeInclusive<usize>, c: f64, s: Complex64) {
    for k in rows {
        let x = m[(k, i)];
        let y = m[(k, j)];
        m[(k, i)] = x * c + s * y;
        m[(k, j)] = -s.conj() * x + y * c;
    }
}

fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Generalized eigenvalues of the real pencil `(A, B)`.
pub fn pencil_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<DenseEigenvalue>> {
    let n = a.nrows();
    if a.shape() != (n, n) || b.shape() != (n, n) {
        return Err(Error::DimensionMismatch("pencil matrices must be square and equal in size".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h: CMat = a.map(|x| Complex64::new(x, 0.0));
    let mut t: CMat = b.map(|x| Complex64::new(x, 0.0));
    hessenberg_triangular(&mut h, &mut t);
    qz(&mut h, &mut t)
}

/// Reduces `(H, T)` in place to upper Hessenberg / upper triangular form by
/// unitary equivalence.
fn hessenberg_triangular(h: &mut CMat, t: &mut CMat) {
    let n = h.nrows();
    // T = Q R by Householder reflections, H <- Q^H H
    for k in 0..n.saturating_sub(1) {
        let norm: f64 = (k..n).map(|i| t[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = t[(k, k)];
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<Complex64> = (k..n).map(|i| t[(i, k)]).collect();
        v[0] -= alpha;
        let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vn == 0.0 {
            continue;
        }
        // apply I - 2 v v^H / (v^H v)
        for m in [&mut *t, &mut *h] {
            for col in 0..n {
                let dot: Complex64 = v.iter().enumerate().map(|(r, vr)| vr.conj() * m[(k + r, col)]).sum();
                let f = dot * (2.0 / vn);
                for (r, vr) in v.iter().enumerate() {
                    m[(k + r, col)] -= vr * f;
                }
            }
        }
        for i in k + 1..n {
            t[(i, k)] = ZERO;
        }
    }
    // Givens reduction of H to Hessenberg while keeping T triangular
    for j in 0..n.saturating_sub(2) {
        for i in (j + 2..n).rev() {
            let (c, s, r) = lartg(h[(i - 1, j)], h[(i, j)]);
            h[(i - 1, j)] = r;
            h[(i, j)] = ZERO;
            rot_rows(h, i - 1, i, j + 1..=n - 1, c, s);
            rot_rows(t, i - 1, i, i - 1..=n - 1, c, s);
            // T(i, i-1) is now filled; remove it with a column rotation
            let (c, s, r) = lartg(t[(i, i)], t[(i, i - 1)]);
            t[(i, i)] = r;
            t[(i, i - 1)] = ZERO;
            rot_cols(h, i, i - 1, 0..=n - 1, c, s);
            rot_cols(t, i, i - 1, 0..=i - 1, c, s);
        }
    }
}

/// Single-shift QZ on a Hessenberg-triangular pair; eigenvalues only.
fn qz(h: &mut CMat, t: &mut CMat) -> Result<Vec<DenseEigenvalue>> {
    let n = h.nrows();
    let ulp = f64::EPSILON;
    let safmin = f64::MIN_POSITIVE;
    let anorm = frobenius(h);
    let bnorm = frobenius(t);
    let atol = safmin.max(ulp * anorm);
    let btol = safmin.max(ulp * bnorm);
    let ascale = 1.0 / safmin.max(anorm);
    let bscale = 1.0 / safmin.max(bnorm);

    let mut out = vec![DenseEigenvalue { alpha: ZERO, beta: 0.0 }; n];
    let ilo = 0usize;
    let mut ilast = n - 1;
    let mut ifrstm = ilo;
    let mut ilastm = ilast;
    let mut iiter = 0usize;
    let mut eshift = ZERO;
    let maxit = 30 * n.max(1);

    enum Next {
        Deflate,
        ZeroT,
        Sweep(usize),
    }

    let mut jiter = 0;
    loop {
        if jiter >= maxit {
            return Err(Error::DenseNoConvergence { iterations: jiter });
        }
        jiter += 1;

        let small = |h: &CMat, j: usize| abs1(h[(j, j - 1)]) <= safmin.max(ulp * (abs1(h[(j, j)]) + abs1(h[(j - 1, j - 1)])));

        let next = if ilast == ilo {
            Next::Deflate
        } else if small(h, ilast) {
            h[(ilast, ilast - 1)] = ZERO;
            Next::Deflate
        } else if t[(ilast, ilast)].norm() <= btol {
            t[(ilast, ilast)] = ZERO;
            Next::ZeroT
        } else {
            let mut found = None;
            for j in (ilo..ilast).rev() {
                let ilazro = if j == ilo {
                    true
                } else if small(h, j) {
                    h[(j, j - 1)] = ZERO;
                    true
                } else {
                    false
                };
                if t[(j, j)].norm() < btol {
                    t[(j, j)] = ZERO;
                    let mut ilazr2 = !ilazro
                        && abs1(h[(j, j - 1)]) * (ascale * abs1(h[(j + 1, j)])) <= abs1(h[(j, j)]) * (ascale * atol);
                    if ilazro || ilazr2 {
                        // rotate the zero on T's diagonal to the bottom of the block
                        let mut result = Next::ZeroT;
                        for jch in j..ilast {
                            let (c, s, r) = lartg(h[(jch, jch)], h[(jch + 1, jch)]);
                            h[(jch, jch)] = r;
                            h[(jch + 1, jch)] = ZERO;
                            rot_rows(h, jch, jch + 1, jch + 1..=ilastm, c, s);
                            rot_rows(t, jch, jch + 1, jch + 1..=ilastm, c, s);
                            if ilazr2 {
                                h[(jch, jch - 1)] *= c;
                            }
                            ilazr2 = false;
                            if abs1(t[(jch + 1, jch + 1)]) >= btol {
                                result = if jch + 1 >= ilast { Next::Deflate } else { Next::Sweep(jch + 1) };
                                break;
                            }
                            t[(jch + 1, jch + 1)] = ZERO;
                        }
                        found = Some(result);
                    } else {
                        // chase the zero down to T(ilast, ilast)
                        for jch in j..ilast {
                            let (c, s, r) = lartg(t[(jch, jch + 1)], t[(jch + 1, jch + 1)]);
                            t[(jch, jch + 1)] = r;
                            t[(jch + 1, jch + 1)] = ZERO;
                            if jch + 2 <= ilastm {
                                rot_rows(t, jch, jch + 1, jch + 2..=ilastm, c, s);
                            }
                            rot_rows(h, jch, jch + 1, jch - 1..=ilastm, c, s);
                            let (c, s, r) = lartg(h[(jch + 1, jch)], h[(jch + 1, jch - 1)]);
                            h[(jch + 1, jch)] = r;
                            h[(jch + 1, jch - 1)] = ZERO;
                            rot_cols(h, jch, jch - 1, ifrstm..=jch, c, s);
                            if jch > ifrstm {
                                rot_cols(t, jch, jch - 1, ifrstm..=jch - 1, c, s);
                            }
                        }
                        found = Some(Next::ZeroT);
                    }
                    break;
                } else if ilazro {
                    found = Some(Next::Sweep(j));
                    break;
                }
            }
            match found {
                Some(n) => n,
                None => return Err(Error::DenseNoConvergence { iterations: jiter }),
            }
        };

        let ifirst = match next {
            Next::ZeroT | Next::Deflate => {
                if let Next::ZeroT = next {
                    // T(ilast, ilast) = 0: zero H(ilast, ilast-1) with a column rotation
                    let (c, s, r) = lartg(h[(ilast, ilast)], h[(ilast, ilast - 1)]);
                    h[(ilast, ilast)] = r;
                    h[(ilast, ilast - 1)] = ZERO;
                    rot_cols(h, ilast, ilast - 1, ifrstm..=ilast - 1, c, s);
                    rot_cols(t, ilast, ilast - 1, ifrstm..=ilast - 1, c, s);
                }
                // 1x1 block at ilast: normalise beta to be real non-negative
                let tv = t[(ilast, ilast)];
                let absb = tv.norm();
                let mut alpha = h[(ilast, ilast)];
                let beta = if absb > safmin {
                    alpha *= tv.conj() / absb;
                    absb
                } else {
                    0.0
                };
                t[(ilast, ilast)] = Complex64::new(beta, 0.0);
                out[ilast] = DenseEigenvalue { alpha, beta };
                if ilast == ilo {
                    return Ok(out);
                }
                ilast -= 1;
                iiter = 0;
                eshift = ZERO;
                ilastm = ilast;
                if ifrstm > ilast {
                    ifrstm = ilo;
                }
                continue;
            }
            Next::Sweep(f) => f,
        };

        // QZ step on rows/columns ifirst..=ilast
        iiter += 1;
        ifrstm = ifirst;
        let shift = if iiter % 10 != 0 {
            let u12 = (t[(ilast - 1, ilast)] * bscale) / (t[(ilast, ilast)] * bscale);
            let ad11 = (h[(ilast - 1, ilast - 1)] * ascale) / (t[(ilast - 1, ilast - 1)] * bscale);
            let ad21 = (h[(ilast, ilast - 1)] * ascale) / (t[(ilast - 1, ilast - 1)] * bscale);
            let ad12 = (h[(ilast - 1, ilast)] * ascale) / (t[(ilast, ilast)] * bscale);
            let ad22 = (h[(ilast, ilast)] * ascale) / (t[(ilast, ilast)] * bscale);
            let abi22 = ad22 - u12 * ad21;
            let abi12 = ad12 - u12 * ad11;
            let mut shift = abi22;
            let ctemp = abi12.sqrt() * ad21.sqrt();
            if ctemp != ZERO {
                let x = (ad11 - shift) * 0.5;
                let temp2 = abs1(x);
                let temp = abs1(ctemp).max(temp2);
                let mut y = ((x / temp).powi(2) + (ctemp / temp).powi(2)).sqrt() * temp;
                if temp2 > 0.0 {
                    let xs = x / temp2;
                    if xs.re * y.re + xs.im * y.im < 0.0 {
                        y = -y;
                    }
                }
                shift -= ctemp * (ctemp / (x + y));
            }
            shift
        } else {
            if iiter % 20 == 0 && bscale * abs1(t[(ilast, ilast)]) > safmin {
                eshift += (h[(ilast, ilast)] * ascale) / (t[(ilast, ilast)] * bscale);
            } else {
                eshift += (h[(ilast, ilast - 1)] * ascale) / (t[(ilast - 1, ilast - 1)] * bscale);
            }
            eshift
        };

        // look for two consecutive small subdiagonals to start the sweep lower
        let mut istart = ifirst;
        let mut ctemp = h[(ifirst, ifirst)] * ascale - shift * (t[(ifirst, ifirst)] * bscale);
        for j in (ifirst + 1..ilast).rev() {
            let c0 = h[(j, j)] * ascale - shift * (t[(j, j)] * bscale);
            let mut temp = abs1(c0);
            let mut temp2 = ascale * abs1(h[(j + 1, j)]);
            let tempr = temp.max(temp2);
            if tempr < 1.0 && tempr != 0.0 {
                temp /= tempr;
                temp2 /= tempr;
            }
            if abs1(h[(j, j - 1)]) * temp2 <= temp * atol {
                istart = j;
                ctemp = c0;
                break;
            }
        }
        let ctemp2 = h[(istart + 1, istart)] * ascale;
        let (mut c, mut s, _) = lartg(ctemp, ctemp2);

        for j in istart..ilast {
            if j > istart {
                let (c1, s1, r) = lartg(h[(j, j - 1)], h[(j + 1, j - 1)]);
                h[(j, j - 1)] = r;
                h[(j + 1, j - 1)] = ZERO;
                c = c1;
                s = s1;
            }
            rot_rows(h, j, j + 1, j..=ilastm, c, s);
            rot_rows(t, j, j + 1, j..=ilastm, c, s);
            let (c2, s2, r) = lartg(t[(j + 1, j + 1)], t[(j + 1, j)]);
            t[(j + 1, j + 1)] = r;
            t[(j + 1, j)] = ZERO;
            rot_cols(h, j + 1, j, ifrstm..=(j + 2).min(ilast), c2, s2);
            rot_cols(t, j + 1, j, ifrstm..=j, c2, s2);
        }
    }
}

/// Splits eigenvalues into finite values and a count of infinite ones.
///
/// An eigenvalue is infinite when `beta == 0` or its modulus exceeds
/// `ratio` times the median modulus of the remaining values.
pub fn split_finite(values: &[DenseEigenvalue], ratio: f64) -> (Vec<Complex64>, usize) {
    let candidates: Vec<Complex64> = values.iter().filter_map(|v| v.value()).collect();
    let mut moduli: Vec<f64> = candidates.iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let median = if moduli.is_empty() { 0.0 } else { moduli[moduli.len() / 2] };
    let finite: Vec<Complex64> = candidates
        .into_iter()
        .filter(|z| z.norm().is_finite() && z.norm() <= ratio * median.max(f64::MIN_POSITIVE))
        .collect();
    let infinite = values.len() - finite.len();
    (finite, infinite)
}

/// Complex Schur form `A = Z T Z^H` with `T` upper triangular.
pub fn schur(a: &CMat) -> Result<(CMat, CMat)> {
    let n = a.nrows();
    let mut z = CMat::identity(n, n);
    let mut h = a.clone();
    if n == 0 {
        return Ok((h, z));
    }
    // Householder reduction to Hessenberg form
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0 == ZERO { ONE } else { x0 / x0.norm() };
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] += phase * norm;
        let vn: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vn == 0.0 {
            continue;
        }
        // H <- P H P, Z <- Z P with P = I - 2 v v^H / (v^H v)
        for col in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(r, vr)| vr.conj() * h[(k + 1 + r, col)]).sum();
            let f = dot * (2.0 / vn);
            for (r, vr) in v.iter().enumerate() {
                h[(k + 1 + r, col)] -= vr * f;
            }
        }
        for m in [&mut h, &mut z] {
            for row in 0..n {
                let dot: Complex64 = v.iter().enumerate().map(|(r, vr)| m[(row, k + 1 + r)] * vr).sum();
                let f = dot * (2.0 / vn);
                for (r, vr) in v.iter().enumerate() {
                    m[(row, k + 1 + r)] -= f * vr.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    hessenberg_qr(&mut h, &mut z)?;
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok((h, z))
}

/// Applies `G = [c s; -conj(s) c]` to rows `k, k+1` and `G^H` to columns
/// `k, k+1` of `h` (rows `0..=row_end`), accumulating into `z`.
fn similarity(h: &mut CMat, z: &mut CMat, k: usize, c: f64, s: Complex64) {
    let n = h.nrows();
    rot_rows(h, k, k + 1, 0..=n - 1, c, s);
    // column update with G^H: col_k <- c col_k + conj(s) col_{k+1}
    rot_cols(h, k, k + 1, 0..=n - 1, c, s.conj());
    rot_cols(z, k, k + 1, 0..=n - 1, c, s.conj());
}

/// Single-shift QR on an upper Hessenberg matrix, accumulating into `z`.
fn hessenberg_qr(h: &mut CMat, z: &mut CMat) -> Result<()> {
    let n = h.nrows();
    let ulp = f64::EPSILON;
    let mut ihi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    let maxit = 30 * n.max(10);
    while ihi > 0 {
        total += 1;
        if total > maxit {
            return Err(Error::DenseNoConvergence { iterations: total });
        }
        // find the active block ilo..=ihi
        let mut ilo = ihi;
        while ilo > 0 {
            let sub = abs1(h[(ilo, ilo - 1)]);
            let mut diag = abs1(h[(ilo, ilo)]) + abs1(h[(ilo - 1, ilo - 1)]);
            if diag == 0.0 {
                diag = (0..n).map(|i| abs1(h[(i, i)])).sum::<f64>().max(f64::MIN_POSITIVE);
            }
            if sub <= ulp * diag {
                h[(ilo, ilo - 1)] = ZERO;
                break;
            }
            ilo -= 1;
        }
        if ilo == ihi {
            ihi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        let shift = if its % 10 == 0 {
            // exceptional shift
            h[(ihi, ihi)] + Complex64::new(0.75 * abs1(h[(ihi, ihi - 1)]), 0.0)
        } else {
            // eigenvalue of the trailing 2x2 closest to H(ihi, ihi)
            let a = h[(ihi - 1, ihi - 1)];
            let b = h[(ihi - 1, ihi)];
            let c = h[(ihi, ihi - 1)];
            let d = h[(ihi, ihi)];
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let l1 = d + half + disc;
            let l2 = d + half - disc;
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };
        let (c, s, _) = lartg(h[(ilo, ilo)] - shift, h[(ilo + 1, ilo)]);
        similarity(h, z, ilo, c, s);
        for k in ilo + 1..ihi {
            let (c, s, r) = lartg(h[(k, k - 1)], h[(k + 1, k - 1)]);
            similarity(h, z, k, c, s);
            h[(k, k - 1)] = r;
            h[(k + 1, k - 1)] = ZERO;
        }
    }
    Ok(())
}

/// Swaps diagonal entries `k` and `k+1` of the upper triangular `t`,
/// updating the Schur vectors `z`.
pub fn swap_adjacent(t: &mut CMat, z: &mut CMat, k: usize) {
    let n = t.nrows();
    let t11 = t[(k, k)];
    let t22 = t[(k + 1, k + 1)];
    let (c, s, _) = lartg(t[(k, k + 1)], t22 - t11);
    if k + 2 < n {
        rot_rows(t, k, k + 1, k + 2..=n - 1, c, s);
    }
    if k > 0 {
        rot_cols(t, k, k + 1, 0..=k - 1, c, s.conj());
    }
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
    rot_cols(z, k, k + 1, 0..=n - 1, c, s.conj());
}

/// Reorders the Schur form so that the diagonal follows `order` (a
/// permutation of the current diagonal positions).
pub fn reorder(t: &mut CMat, z: &mut CMat, order: &[usize]) {
    let n = t.nrows();
    // current position of each original diagonal entry
    let mut pos: Vec<usize> = (0..n).collect();
    let mut at: Vec<usize> = (0..n).collect();
    for (target, &orig) in order.iter().enumerate() {
        let mut p = pos[orig];
        while p > target {
            swap_adjacent(t, z, p - 1);
            let other = at[p - 1];
            at.swap(p - 1, p);
            pos[orig] = p - 1;
            pos[other] = p;
            p -= 1;
        }
    }
}

/// Solves `(T - T[i,i] I) y = 0` for the eigenvector of triangular `T`
/// belonging to diagonal entry `i`, normalised with `y[i] = 1`.
pub fn triangular_eigenvector(t: &CMat, i: usize) -> Vec<Complex64> {
    let n = t.nrows();
    let lambda = t[(i, i)];
    let tnorm = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mut y = vec![ZERO; n];
    y[i] = ONE;
    for r in (0..i).rev() {
        let s: Complex64 = (r + 1..=i).map(|c| t[(r, c)] * y[c]).sum();
        let mut d = t[(r, r)] - lambda;
        if d.norm() < small {
            d = Complex64::new(small, 0.0);
        }
        y[r] = -s / d;
    }
    y
}
