//! Small dense linear algebra over [`Scalar`]: pivoted LU with iterative
//! refinement, and eigenvalues of upper-Hessenberg matrices by the
//! Francis double-shift QR iteration (used for companion matrices).

use std::ops::{Index, IndexMut};

use crate::error::{MixError, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Scalar> Lu<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        if a.rows != a.cols {
            return Err(MixError::InvalidArgument("LU needs a square matrix".into()));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::neg_infinity()), |b, c| if c.1 > b.1 { c } else { b });
            if pmax == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= f * v;
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            sign,
            singular,
        })
    }

    pub fn det(&self) -> T {
        (0..self.lu.rows).fold(self.sign, |acc, i| acc * self.lu[(i, i)])
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        if self.singular {
            return Err(MixError::Numerical("singular matrix".into()));
        }
        let n = self.lu.rows;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let v = x[j];
                x[i] -= self.lu[(i, j)] * v;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let v = x[j];
                x[i] -= self.lu[(i, j)] * v;
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Solution of a square system with its diagnostics.
#[derive(Debug, Clone)]
pub struct RefinedSolve<T> {
    pub x: Vec<T>,
    /// 1-norm condition number `||A|| ||A^-1||`.
    pub condition: T,
    /// Max-norm of the final residual `A x - b`.
    pub residual: T,
}

/// Solves `A x = b` by pivoted LU followed by a few steps of iterative
/// refinement.
pub fn solve_refined<T: Scalar>(a: &Matrix<T>, b: &[T], steps: usize) -> Result<RefinedSolve<T>> {
    let lu = Lu::new(a)?;
    let mut x = lu.solve(b)?;
    let residual_of = |x: &[T]| -> Vec<T> {
        a.mul_vec(x)
            .into_iter()
            .zip(b)
            .map(|(ax, &bi)| ax - bi)
            .collect()
    };
    let max_abs = |v: &[T]| v.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    let mut r = residual_of(&x);
    for _ in 0..steps {
        let dx = lu.solve(&r)?;
        let candidate: Vec<T> = x.iter().zip(&dx).map(|(&xi, &d)| xi - d).collect();
        let r_new = residual_of(&candidate);
        if max_abs(&r_new) >= max_abs(&r) {
            break;
        }
        x = candidate;
        r = r_new;
    }
    let n = a.rows();
    let mut inv_norm = T::zero();
    for j in 0..n {
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        let col = lu.solve(&e)?;
        inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
    }
    Ok(RefinedSolve {
        condition: a.norm1() * inv_norm,
        residual: max_abs(&r),
        x,
    })
}

pub fn determinant<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    Ok(Lu::new(a)?.det())
}

fn sign_of<T: Scalar>(a: T, b: T) -> T {
    if b >= T::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Diagonal similarity balancing (powers of two), in place.
pub fn balance<T: Scalar>(a: &mut Matrix<T>) {
    let n = a.rows;
    let radix = T::lit(2.0);
    let sqrdx = radix * radix;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = T::zero();
            let mut c = T::zero();
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != T::zero() && r != T::zero() {
                let mut g = r / radix;
                let mut f = T::one();
                let s = c + r;
                while c < g {
                    f *= radix;
                    c *= sqrdx;
                }
                g = r * radix;
                while c > g {
                    f /= radix;
                    c /= sqrdx;
                }
                if (c + r) / f < T::lit(0.95) * s {
                    done = false;
                    let g = T::one() / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Eigenvalues `(re, im)` of an upper-Hessenberg matrix by the Francis
/// double-shift QR algorithm. The matrix is destroyed.
pub fn hessenberg_eigenvalues<T: Scalar>(mut a: Matrix<T>) -> Result<Vec<(T, T)>> {
    let n = a.rows;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut wr = vec![T::zero(); n];
    let mut wi = vec![T::zero(); n];
    let mut anorm = T::zero();
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let half = T::lit(0.5);
    let mut nn: isize = n as isize - 1;
    let mut t = T::zero();
    let max_its = 60 * n;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == T::zero() {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() + s == s {
                    a[(l, l - 1)] = T::zero();
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = T::zero();
                nn -= 1;
                break;
            }
            let mut y = a[(nu - 1, nu - 1)];
            let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nu - 1 {
                let p = half * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= T::zero() {
                    z = p + sign_of(z, p);
                    wr[nu - 1] = x + z;
                    wr[nu] = x + z;
                    if z != T::zero() {
                        wr[nu] = x - w / z;
                    }
                    wi[nu - 1] = T::zero();
                    wi[nu] = T::zero();
                } else {
                    wr[nu - 1] = x + p;
                    wr[nu] = x + p;
                    wi[nu - 1] = -z;
                    wi[nu] = z;
                }
                nn -= 2;
                break;
            }
            if its >= max_its {
                return Err(MixError::Numerical("QR iteration did not converge".into()));
            }
            if its == 10 || its == 20 {
                t += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            its += 1;
            let mut p;
            let mut q;
            let mut r;
            let mut z;
            let mut m = nu - 2;
            loop {
                z = a[(m, m)];
                r = x - z;
                let s = y - z;
                p = (r * s - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - r - s;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                a[(i, i - 2)] = T::zero();
                if i != m + 2 {
                    a[(i, i - 3)] = T::zero();
                }
            }
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = T::zero();
                    if k != nu - 1 {
                        r = a[(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != T::zero() {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                if s != T::zero() {
                    if k == m {
                        if l != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        p = a[(k, j)] + q * a[(k + 1, j)];
                        if k != nu - 1 {
                            p += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= p * z;
                        }
                        a[(k + 1, j)] -= p * y;
                        a[(k, j)] -= p * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        p = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k != nu - 1 {
                            p += z * a[(i, k + 2)];
                            a[(i, k + 2)] -= p * r;
                        }
                        a[(i, k + 1)] -= p * q;
                        a[(i, k)] -= p;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).collect())
}

/// Roots of the monic polynomial `x^d + c[d-1] x^(d-1) + ... + c[0]`
/// as eigenvalues of its balanced companion matrix.
pub fn monic_roots<T: Scalar>(coeffs: &[T]) -> Result<Vec<(T, T)>> {
    let d = coeffs.len();
    if d == 0 {
        return Ok(Vec::new());
    }
    let mut c = Matrix::zeros(d, d);
    for j in 0..d {
        c[(0, j)] = -coeffs[d - 1 - j];
    }
    for i in 1..d {
        c[(i, i - 1)] = T::one();
    }
    balance(&mut c);
    hessenberg_eigenvalues(c)
}

/// Evaluates the monic polynomial and its derivative at `x`.
pub fn monic_eval<T: Scalar>(coeffs: &[T], x: T) -> (T, T) {
    let mut p = T::one();
    let mut dp = T::zero();
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_det_and_solve() {
        let a = Matrix::from_fn(3, 3, |i, j| [[2.0f64, 1.0, 1.0], [4.0, -6.0, 0.0], [-2.0, 7.0, 2.0]][i][j]);
        let lu = Lu::new(&a).unwrap();
        assert!((lu.det() + 16.0).abs() < 1e-12);
        let sol = solve_refined(&a, &[5.0, -2.0, 9.0], 2).unwrap();
        for (x, e) in sol.x.iter().zip([1.0, 1.0, 2.0]) {
            assert!((x - e).abs() < 1e-12);
        }
        assert!(sol.residual < 1e-12);
        assert!(sol.condition > 1.0);
    }

    #[test]
    fn singular_detected() {
        let a = Matrix::from_fn(2, 2, |i, j| [[1.0, 2.0], [2.0, 4.0]][i][j]);
        assert_eq!(determinant(&a).unwrap(), 0.0);
        assert!(Lu::new(&a).unwrap().solve(&[1.0, 1.0]).is_err());
    }

    fn sorted_real(mut r: Vec<(f64, f64)>) -> Vec<f64> {
        r.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        r.into_iter().map(|z| z.0).collect()
    }

    #[test]
    fn companion_real_roots() {
        // (x+2)(x-1)(x-3)(x-0.5) = x^4 - 2.5x^3 - 4x^2 + 8.5x - 3
        let roots = monic_roots(&[-3.0f64, 8.5, -4.0, -2.5]).unwrap();
        assert!(roots.iter().all(|z| z.1.abs() < 1e-12));
        for (r, e) in sorted_real(roots).iter().zip([-2.0, 0.5, 1.0, 3.0]) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    fn companion_complex_pair() {
        // x^2 + 1
        let roots = monic_roots(&[1.0, 0.0]).unwrap();
        let mut im: Vec<f64> = roots.iter().map(|z| z.1).collect();
        im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((im[0] + 1.0).abs() < 1e-14 && (im[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn companion_degree_eight() {
        let expect: Vec<f64> = (0..8).map(|k| -3.0 + 0.8 * k as f64).collect();
        // Expand prod (x - r) into monic coefficients, low to high.
        let mut poly = vec![1.0];
        for &r in &expect {
            let mut next = vec![0.0; poly.len() + 1];
            for (i, &c) in poly.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= r * c;
            }
            poly = next;
        }
        let coeffs = &poly[..8];
        let roots = monic_roots(coeffs).unwrap();
        for (r, e) in sorted_real(roots).iter().zip(&expect) {
            assert!((r - e).abs() < 1e-9);
        }
        let (p, dp) = monic_eval(coeffs, expect[2]);
        assert!(p.abs() < 1e-10 && dp.abs() > 1.0);
    }

    #[test]
    fn f32_roots() {
        let roots = monic_roots(&[2.0f32, -3.0]).unwrap(); // (x-1)(x-2)
        let mut r: Vec<f32> = roots.iter().map(|z| z.0).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((r[0] - 1.0).abs() < 1e-5 && (r[1] - 2.0).abs() < 1e-5);
    }
}
