//! Dense real linear algebra for small matrices.
//!
//! The general eigensolver follows the classical route: diagonal balancing,
//! orthogonal reduction to upper Hessenberg form, Francis double-shift QR to
//! real Schur form, then back-substitution for the eigenvectors. Gauged QES
//! matrices are not symmetric, so nothing here assumes symmetry except
//! [`sym_eigen`].

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{QesError, Result};

pub const MAX_EIG_DIM: usize = 512;
/// Residual bound every returned eigenpair must satisfy.
pub const EIG_RESIDUAL_BOUND: f64 = 1e-9;
/// `|R_kk| ≤ RANK_TOL·|R_00|` marks a numerically dependent column.
pub const RANK_TOL: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        self.add(&rhs.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues, right eigenvectors and per-pair relative residuals
/// `‖Av − λv‖ / (‖A‖·‖v‖)`, ordered by `(re, im)`.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<Complex64>,
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
}

impl EigenResult {
    pub fn max_imag(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }
}

/// Complete eigendecomposition of a general real square matrix.
pub fn eig(a: &Matrix) -> Result<EigenResult> {
    if !a.is_square() {
        return Err(QesError::Parameter(format!(
            "eig needs a square matrix, got {}×{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    if n > MAX_EIG_DIM {
        return Err(QesError::Parameter(format!(
            "eig dimension {n} exceeds {MAX_EIG_DIM}"
        )));
    }
    if !a.is_finite() {
        return Err(QesError::Numerical("non-finite matrix entry".into()));
    }
    if n == 0 {
        return Ok(EigenResult {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
        });
    }

    let mut h = a.clone();
    let scale = balance(&mut h);
    let mut v = hessenberg(&mut h);
    let (re, im) = hqr2(&mut h, &mut v)?;

    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = Vec::with_capacity(n);
    let mut j = 0;
    while j < n {
        if im[j] == 0.0 {
            let col: Vec<Complex64> = (0..n).map(|i| Complex64::new(scale[i] * v[(i, j)], 0.0)).collect();
            pairs.push((Complex64::new(re[j], 0.0), col));
            j += 1;
        } else {
            let col: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(scale[i] * v[(i, j)], scale[i] * v[(i, j + 1)]))
                .collect();
            let conj: Vec<Complex64> = col.iter().map(|z| z.conj()).collect();
            pairs.push((Complex64::new(re[j], im[j]), col));
            pairs.push((Complex64::new(re[j + 1], im[j + 1]), conj));
            j += 2;
        }
    }

    for (_, vec) in pairs.iter_mut() {
        let norm = vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            vec.iter_mut().for_each(|z| *z /= norm);
        }
    }
    pairs.sort_by(|x, y| {
        x.0.re
            .total_cmp(&y.0.re)
            .then(x.0.im.total_cmp(&y.0.im))
    });

    let anorm = a.frobenius();
    let residuals: Vec<f64> = pairs
        .iter()
        .map(|(lambda, vec)| {
            if anorm == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for i in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for (k, z) in vec.iter().enumerate() {
                    s += a[(i, k)] * z;
                }
                acc += (s - lambda * vec[i]).norm_sqr();
            }
            let vnorm = vec.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            acc.sqrt() / (anorm * vnorm.max(f64::MIN_POSITIVE))
        })
        .collect();

    let worst = residuals.iter().fold(0.0f64, |m, &r| m.max(r));
    if worst > EIG_RESIDUAL_BOUND {
        return Err(QesError::Numerical(format!(
            "eigenpair residual {worst:.3e} exceeds {EIG_RESIDUAL_BOUND:.0e}"
        )));
    }

    let (values, vectors) = pairs.into_iter().unzip();
    Ok(EigenResult {
        values,
        vectors,
        residuals,
    })
}

/// Diagonal similarity `D⁻¹AD` equalising row and column norms; returns `D`.
fn balance(a: &mut Matrix) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.rows;
    let mut scale = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                scale[i] *= f;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
    }
    scale
}

/// Householder reduction to upper Hessenberg form; returns the accumulated
/// orthogonal transformation.
fn hessenberg(h: &mut Matrix) -> Matrix {
    let n = h.rows;
    let high = n - 1;
    let mut ort = vec![0.0; n];
    let mut v = Matrix::identity(n);
    if n < 3 {
        return v;
    }

    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }

    for m in (1..high).rev() {
        if h[(m, m - 1)] == 0.0 {
            continue;
        }
        for i in m + 1..=high {
            ort[i] = h[(i, m - 1)];
        }
        for j in m..=high {
            let mut g = 0.0;
            for i in m..=high {
                g += ort[i] * v[(i, j)];
            }
            g = (g / ort[m]) / h[(m, m - 1)];
            for i in m..=high {
                v[(i, j)] += g * ort[i];
            }
        }
    }
    v
}

fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

/// Shifted double-QR on a Hessenberg matrix, accumulating into `v`, followed by
/// eigenvector back-substitution. Returns the real and imaginary parts.
#[allow(clippy::many_single_char_names)]
fn hqr2(h: &mut Matrix, v: &mut Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = h.rows as isize;
    let mut n = nn - 1;
    let low: isize = 0;
    let high = nn - 1;
    let eps = f64::EPSILON;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut t, mut w, mut x, mut y);
    let mut d = vec![0.0; nn as usize];
    let mut e = vec![0.0; nn as usize];

    macro_rules! hm {
        ($i:expr, $j:expr) => {
            h[(($i) as usize, ($j) as usize)]
        };
    }
    macro_rules! vm {
        ($i:expr, $j:expr) => {
            v[(($i) as usize, ($j) as usize)]
        };
    }

    let mut norm = 0.0;
    for i in 0..nn {
        for j in (i - 1).max(0)..nn {
            norm += hm!(i, j).abs();
        }
    }

    let mut iter = 0usize;
    let mut total_iter = 0usize;
    let max_total = 60 * nn.max(1) as usize;
    while n >= low {
        let mut l = n;
        while l > low {
            s = hm!(l - 1, l - 1).abs() + hm!(l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if hm!(l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            hm!(n, n) += exshift;
            d[n as usize] = hm!(n, n);
            e[n as usize] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            w = hm!(n, n - 1) * hm!(n - 1, n);
            p = (hm!(n - 1, n - 1) - hm!(n, n)) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            hm!(n, n) += exshift;
            hm!(n - 1, n - 1) += exshift;
            x = hm!(n, n);

            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[(n - 1) as usize] = x + z;
                d[n as usize] = d[(n - 1) as usize];
                if z != 0.0 {
                    d[n as usize] = x - w / z;
                }
                e[(n - 1) as usize] = 0.0;
                e[n as usize] = 0.0;
                x = hm!(n, n - 1);
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;

                for j in (n - 1)..nn {
                    z = hm!(n - 1, j);
                    hm!(n - 1, j) = q * z + p * hm!(n, j);
                    hm!(n, j) = q * hm!(n, j) - p * z;
                }
                for i in 0..=n {
                    z = hm!(i, n - 1);
                    hm!(i, n - 1) = q * z + p * hm!(i, n);
                    hm!(i, n) = q * hm!(i, n) - p * z;
                }
                for i in low..=high {
                    z = vm!(i, n - 1);
                    vm!(i, n - 1) = q * z + p * vm!(i, n);
                    vm!(i, n) = q * vm!(i, n) - p * z;
                }
            } else {
                d[(n - 1) as usize] = x + p;
                d[n as usize] = x + p;
                e[(n - 1) as usize] = z;
                e[n as usize] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            x = hm!(n, n);
            y = 0.0;
            w = 0.0;
            if l < n {
                y = hm!(n - 1, n - 1);
                w = hm!(n, n - 1) * hm!(n - 1, n);
            }

            // exceptional shifts
            if iter == 10 {
                exshift += x;
                for i in low..=n {
                    hm!(i, i) -= x;
                }
                s = hm!(n, n - 1).abs() + hm!(n - 1, n - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=n {
                        hm!(i, i) -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }

            iter += 1;
            total_iter += 1;
            if total_iter > max_total {
                return Err(QesError::Numerical(format!(
                    "QR iteration did not converge after {total_iter} sweeps"
                )));
            }

            let mut m = n - 2;
            while m >= l {
                z = hm!(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / hm!(m + 1, m) + hm!(m, m + 1);
                q = hm!(m + 1, m + 1) - z - r - s;
                r = hm!(m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if hm!(m, m - 1).abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (hm!(m - 1, m - 1).abs() + z.abs() + hm!(m + 1, m + 1).abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                hm!(i, i - 2) = 0.0;
                if i > m + 2 {
                    hm!(i, i - 3) = 0.0;
                }
            }

            let mut k = m;
            while k < n {
                let notlast = k != n - 1;
                if k != m {
                    p = hm!(k, k - 1);
                    q = hm!(k + 1, k - 1);
                    r = if notlast { hm!(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        hm!(k, k - 1) = -s * x;
                    } else if l != m {
                        hm!(k, k - 1) = -hm!(k, k - 1);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in k..nn {
                        p = hm!(k, j) + q * hm!(k + 1, j);
                        if notlast {
                            p += r * hm!(k + 2, j);
                            hm!(k + 2, j) -= p * z;
                        }
                        hm!(k, j) -= p * x;
                        hm!(k + 1, j) -= p * y;
                    }
                    for i in 0..=n.min(k + 3) {
                        p = x * hm!(i, k) + y * hm!(i, k + 1);
                        if notlast {
                            p += z * hm!(i, k + 2);
                            hm!(i, k + 2) -= p * r;
                        }
                        hm!(i, k) -= p;
                        hm!(i, k + 1) -= p * q;
                    }
                    for i in low..=high {
                        p = x * vm!(i, k) + y * vm!(i, k + 1);
                        if notlast {
                            p += z * vm!(i, k + 2);
                            vm!(i, k + 2) -= p * r;
                        }
                        vm!(i, k) -= p;
                        vm!(i, k + 1) -= p * q;
                    }
                }
                k += 1;
            }
        }
    }

    if norm == 0.0 {
        return Ok((d, e));
    }

    // Back-substitution on the quasi-triangular Schur form.
    for n in (0..nn).rev() {
        p = d[n as usize];
        q = e[n as usize];
        if q == 0.0 {
            let mut l = n;
            hm!(n, n) = 1.0;
            for i in (0..n).rev() {
                w = hm!(i, i) - p;
                r = 0.0;
                for j in l..=n {
                    r += hm!(i, j) * hm!(j, n);
                }
                if e[i as usize] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i as usize] == 0.0 {
                        hm!(i, n) = if w != 0.0 { -r / w } else { -r / (eps * norm) };
                    } else {
                        x = hm!(i, i + 1);
                        y = hm!(i + 1, i);
                        q = (d[i as usize] - p) * (d[i as usize] - p) + e[i as usize] * e[i as usize];
                        t = (x * s - z * r) / q;
                        hm!(i, n) = t;
                        hm!(i + 1, n) = if x.abs() > z.abs() {
                            (-r - w * t) / x
                        } else {
                            (-s - y * t) / z
                        };
                    }
                    t = hm!(i, n).abs();
                    if (eps * t) * t > 1.0 {
                        for j in i..=n {
                            hm!(j, n) /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 {
            let mut l = n - 1;
            if hm!(n, n - 1).abs() > hm!(n - 1, n).abs() {
                hm!(n - 1, n - 1) = q / hm!(n, n - 1);
                hm!(n - 1, n) = -(hm!(n, n) - p) / hm!(n, n - 1);
            } else {
                let (cr, ci) = cdiv(0.0, -hm!(n - 1, n), hm!(n - 1, n - 1) - p, q);
                hm!(n - 1, n - 1) = cr;
                hm!(n - 1, n) = ci;
            }
            hm!(n, n - 1) = 0.0;
            hm!(n, n) = 1.0;
            for i in (0..n - 1).rev() {
                let (mut ra, mut sa) = (0.0, 0.0);
                for j in l..=n {
                    ra += hm!(i, j) * hm!(j, n - 1);
                    sa += hm!(i, j) * hm!(j, n);
                }
                w = hm!(i, i) - p;
                if e[i as usize] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i as usize] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        hm!(i, n - 1) = cr;
                        hm!(i, n) = ci;
                    } else {
                        x = hm!(i, i + 1);
                        y = hm!(i + 1, i);
                        let di = d[i as usize] - p;
                        let mut vr = di * di + e[i as usize] * e[i as usize] - q * q;
                        let vi = di * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = eps * norm * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) = cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        hm!(i, n - 1) = cr;
                        hm!(i, n) = ci;
                        if x.abs() > z.abs() + q.abs() {
                            hm!(i + 1, n - 1) = (-ra - w * hm!(i, n - 1) + q * hm!(i, n)) / x;
                            hm!(i + 1, n) = (-sa - w * hm!(i, n) - q * hm!(i, n - 1)) / x;
                        } else {
                            let (cr, ci) = cdiv(-r - y * hm!(i, n - 1), -s - y * hm!(i, n), z, q);
                            hm!(i + 1, n - 1) = cr;
                            hm!(i + 1, n) = ci;
                        }
                    }
                    t = hm!(i, n - 1).abs().max(hm!(i, n).abs());
                    if (eps * t) * t > 1.0 {
                        for j in i..=n {
                            hm!(j, n - 1) /= t;
                            hm!(j, n) /= t;
                        }
                    }
                }
            }
        }
    }

    for j in (low..nn).rev() {
        for i in low..=high {
            z = 0.0;
            for k in low..=j.min(high) {
                z += vm!(i, k) * hm!(k, j);
            }
            vm!(i, j) = z;
        }
    }

    Ok((d, e))
}

/// Column-pivoted Householder QR, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    qr: Matrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn factor(a: &Matrix) -> Self {
        let (m, n) = (a.rows, a.cols);
        let mut qr = a.clone();
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..steps {
            // pivot on the largest remaining column norm
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let nrm: f64 = (k..m).map(|i| qr[(i, j)] * qr[(i, j)]).sum();
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            if best != k {
                perm.swap(k, best);
                for i in 0..m {
                    let tmp = qr[(i, k)];
                    qr[(i, k)] = qr[(i, best)];
                    qr[(i, best)] = tmp;
                }
            }

            let alpha_norm = best_norm.max(0.0).sqrt();
            if alpha_norm == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let alpha = if qr[(k, k)] > 0.0 { -alpha_norm } else { alpha_norm };
            let v0 = qr[(k, k)] - alpha;
            // v = (1, x_{k+1}/v0, ...), tau = (alpha − x_k)/alpha·(−1)
            for i in k + 1..m {
                qr[(i, k)] /= v0;
            }
            tau[k] = -v0 / alpha;
            qr[(k, k)] = alpha;

            for j in k + 1..n {
                let mut dot = qr[(k, j)];
                for i in k + 1..m {
                    dot += qr[(i, k)] * qr[(i, j)];
                }
                dot *= tau[k];
                qr[(k, j)] -= dot;
                for i in k + 1..m {
                    let vik = qr[(i, k)];
                    qr[(i, j)] -= dot * vik;
                }
            }
        }

        let r00 = if steps > 0 { qr[(0, 0)].abs() } else { 0.0 };
        let rank = (0..steps)
            .take_while(|&k| r00 > 0.0 && qr[(k, k)].abs() > RANK_TOL * r00)
            .count();
        PivotedQr { qr, tau, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn cols(&self) -> usize {
        self.qr.cols
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.qr.cols
    }

    /// Basic least-squares solution using the leading `rank` pivots; the
    /// remaining (dependent) coefficients are zero.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (m, n) = (self.qr.rows, self.qr.cols);
        assert_eq!(b.len(), m);
        let mut y = b.to_vec();
        for k in 0..self.tau.len() {
            let mut dot = y[k];
            for i in k + 1..m {
                dot += self.qr[(i, k)] * y[i];
            }
            dot *= self.tau[k];
            y[k] -= dot;
            for i in k + 1..m {
                y[i] -= dot * self.qr[(i, k)];
            }
        }
        let r = self.rank;
        let mut z = vec![0.0; n];
        for k in (0..r).rev() {
            let mut s = y[k];
            for j in k + 1..r {
                s -= self.qr[(k, j)] * z[j];
            }
            z[k] = s / self.qr[(k, k)];
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }
}

/// Least-squares coefficients with the relative misfit `‖b − Ax‖ / ‖b‖`
/// (zero when `b` vanishes).
#[derive(Debug, Clone, PartialEq)]
pub struct LstsqSolution {
    pub coefficients: Vec<f64>,
    pub residual: f64,
}

pub(crate) fn relative_misfit(a: &Matrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let num: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|q| q * q).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

pub fn lstsq(a: &Matrix, b: &[f64]) -> Result<LstsqSolution> {
    if a.rows < a.cols {
        return Err(QesError::Parameter(format!(
            "lstsq needs rows ≥ cols, got {}×{}",
            a.rows, a.cols
        )));
    }
    if b.len() != a.rows {
        return Err(QesError::Parameter("right-hand side length mismatch".into()));
    }
    let qr = PivotedQr::factor(a);
    if !qr.is_full_rank() {
        return Err(QesError::Conditioning {
            rank: qr.rank,
            cols: a.cols,
            nodes: format!("{} rows", a.rows),
        });
    }
    let x = qr.solve(b);
    let residual = relative_misfit(a, &x, b);
    Ok(LstsqSolution {
        coefficients: x,
        residual,
    })
}

/// Cyclic Jacobi eigensolver for symmetric matrices. Eigenvalues ascending,
/// eigenvectors as columns of the returned matrix.
pub fn sym_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if !a.is_square() {
        return Err(QesError::Parameter("sym_eigen needs a square matrix".into()));
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let scale = a.frobenius().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&x, &y| m[(x, x)].total_cmp(&m[(y, y)]));
            let vals = idx.iter().map(|&i| m[(i, i)]).collect();
            let vecs = Matrix::from_fn(n, n, |i, j| v[(i, idx[j])]);
            return Ok((vals, vecs));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
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
    Err(QesError::Numerical("Jacobi sweeps did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, m: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn sorted_re(r: &EigenResult) -> Vec<f64> {
        r.values.iter().map(|z| z.re).collect()
    }

    /// Complex Gauss–Jordan inverse, test-only.
    fn cinverse(a: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let n = a.len();
        let mut m: Vec<Vec<Complex64>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..n).map(|j| Complex64::new((i == j) as u8 as f64, 0.0)));
                r
            })
            .collect();
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| m[x][c].norm().total_cmp(&m[y][c].norm())).unwrap();
            m.swap(c, p);
            let piv = m[c][c];
            m[c].iter_mut().for_each(|z| *z /= piv);
            for r in 0..n {
                if r != c {
                    let f = m[r][c];
                    let row_c = m[c].clone();
                    m[r].iter_mut().zip(row_c).for_each(|(z, w)| *z -= f * w);
                }
            }
        }
        m.into_iter().map(|r| r[n..].to_vec()).collect()
    }

    #[test]
    fn two_by_two_symmetric() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let r = eig(&a).unwrap();
        let re = sorted_re(&r);
        assert!((re[0] - 1.0).abs() < 1e-14 && (re[1] - 3.0).abs() < 1e-14);
        assert_eq!(r.max_imag(), 0.0);
    }

    #[test]
    fn identity_multiplicity() {
        let r = eig(&Matrix::identity(6)).unwrap();
        assert_eq!(r.values.len(), 6);
        assert!(r.values.iter().all(|z| (z.re - 1.0).abs() < 1e-15 && z.im == 0.0));
    }

    #[test]
    fn transpose_has_same_spectrum() {
        for seed in 0..10 {
            let a = random(5, 5, seed);
            let x = eig(&a).unwrap();
            let y = eig(&a.transpose()).unwrap();
            for (p, q) in x.values.iter().zip(&y.values) {
                assert!((p - q).norm() < 1e-9, "{p} vs {q}");
            }
            assert!(x.max_residual() <= EIG_RESIDUAL_BOUND);
        }
    }

    #[test]
    fn rotation_gives_complex_pair() {
        let a = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let r = eig(&a).unwrap();
        assert!((r.values[0].im + 1.0).abs() < 1e-14 && (r.values[1].im - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jordan_block_is_handled() {
        let a = Matrix::from_rows(&[vec![0.0, -2.0, 0.0], vec![0.0, 0.0, -6.0], vec![0.0, 0.0, 0.0]]);
        let r = eig(&a).unwrap();
        assert!(r.values.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn symmetric_inputs_have_real_spectra() {
        for seed in 0..10 {
            let b = random(12, 12, 100 + seed);
            let a = b.add(&b.transpose());
            let r = eig(&a).unwrap();
            assert!(r.max_imag() <= 1e-10 * a.frobenius());
            let (vals, _) = sym_eigen(&a).unwrap();
            for (p, q) in sorted_re(&r).iter().zip(&vals) {
                assert!((p - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn reconstruction_of_diagonalizable_matrices() {
        for seed in 0..10 {
            let n = 7;
            let s = random(n, n, 200 + seed);
            let d: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
            // A = S·D·S⁻¹ through the complex inverse helper
            let sc: Vec<Vec<Complex64>> = s.to_rows().iter().map(|r| r.iter().map(|&x| x.into()).collect()).collect();
            let si = cinverse(&sc);
            let a = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| sc[i][k] * d[k] * si[k][j]).sum::<Complex64>().re);

            let r = eig(&a).unwrap();
            let vmat: Vec<Vec<Complex64>> = (0..n).map(|i| (0..n).map(|j| r.vectors[j][i]).collect()).collect();
            let vinv = cinverse(&vmat);
            let mut err = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let rec: Complex64 = (0..n).map(|k| vmat[i][k] * r.values[k] * vinv[k][j]).sum();
                    err += (rec - a[(i, j)]).norm_sqr();
                }
            }
            assert!(err.sqrt() <= 1e-8 * a.frobenius());
        }
    }

    #[test]
    fn non_square_and_oversized_rejected() {
        assert!(eig(&Matrix::zeros(2, 3)).is_err());
        assert!(eig(&Matrix::zeros(MAX_EIG_DIM + 1, MAX_EIG_DIM + 1)).is_err());
    }

    #[test]
    fn lstsq_exact_span() {
        let a = random(20, 5, 3);
        let x: Vec<f64> = vec![1.0, -2.0, 0.5, 3.0, 0.25];
        let b = a.mul_vec(&x);
        let s = lstsq(&a, &b).unwrap();
        assert!(s.residual <= 1e-10);
        for (p, q) in s.coefficients.iter().zip(&x) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn lstsq_perturbation_recovers_misfit() {
        // b = member + 0.01·(unit vector orthogonal to the columns), so the
        // relative misfit is 0.01/√(1 + 0.01²) by construction.
        let a = random(30, 4, 9);
        let member = a.mul_vec(&[0.3, -0.7, 1.1, 0.2]);
        let mnorm = member.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut w: Vec<f64> = random(30, 1, 10).column(0);
        // Gram–Schmidt against the columns of A (independent of the QR code)
        let mut basis: Vec<Vec<f64>> = vec![];
        for j in 0..4 {
            let mut c = a.column(j);
            for q in &basis {
                let d: f64 = c.iter().zip(q).map(|(x, y)| x * y).sum();
                c.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
            }
            let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            basis.push(c.iter().map(|x| x / n).collect());
        }
        for q in &basis {
            let d: f64 = w.iter().zip(q).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
        }
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let b: Vec<f64> = member.iter().zip(&w).map(|(m, p)| m + 0.01 * mnorm * p / wn).collect();
        let s = lstsq(&a, &b).unwrap();
        let expect = 0.01 / (1.0f64 + 1e-4).sqrt();
        assert!((s.residual - expect).abs() < 1e-10);
        assert!((1e-3..=1e-1).contains(&s.residual));
    }

    #[test]
    fn lstsq_rank_deficiency_is_reported() {
        let mut a = random(10, 3, 4);
        for i in 0..10 {
            a[(i, 2)] = 2.0 * a[(i, 0)] - a[(i, 1)];
        }
        let b = vec![1.0; 10];
        assert!(matches!(lstsq(&a, &b), Err(QesError::Conditioning { rank: 2, cols: 3, .. })));
        let qr = PivotedQr::factor(&a);
        assert_eq!(qr.rank(), 2);
        // the basic solution still reproduces a member of the span
        let target = a.mul_vec(&[1.0, 1.0, 0.0]);
        let x = qr.solve(&target);
        assert!(relative_misfit(&a, &x, &target) < 1e-12);
    }

    #[test]
    fn lstsq_unit_coefficient_on_constant_column() {
        let a = Matrix::from_fn(8, 3, |i, j| (0.1 * (i + 1) as f64).powi(j as i32));
        let s = lstsq(&a, &[1.0; 8]).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(s.coefficients[1].abs() < 1e-11 && s.coefficients[2].abs() < 1e-10);
    }

    #[test]
    fn jacobi_small_symmetric() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 2.0]]);
        let (vals, vecs) = sym_eigen(&a).unwrap();
        for (j, &l) in vals.iter().enumerate() {
            let v = vecs.column(j);
            let av = a.mul_vec(&v);
            for i in 0..3 {
                assert!((av[i] - l * v[i]).abs() < 1e-13);
            }
        }
        assert!((vals.iter().sum::<f64>() - 9.0).abs() < 1e-13);
    }
}
