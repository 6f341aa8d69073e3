//! Finite-difference reference eigensolvers for periodic Schrödinger operators.
//!
//! The periodic second-difference matrix lives on a ring of `M` sites. Pairing
//! site `j` with site `M − 1 − j` folds the ring into a chain of `M/2` blocks,
//! so the matrix becomes block tridiagonal without corner entries. Eigenvalues
//! are then located by bisection on the inertia of `A − λI`, which a block
//! LDLᵀ sweep delivers in `O(M)` (Sylvester's law of inertia).

use serde::Serialize;

use crate::error::{QesError, Result};

pub const MIN_POINTS: usize = 64;
pub const DEFAULT_POINTS: usize = 2048;
pub const DEFAULT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub period: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(period: f64, points: usize) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(QesError::Parameter(format!("grid period must be positive, got {period}")));
        }
        if points < MIN_POINTS || !points.is_multiple_of(2) {
            return Err(QesError::Parameter(format!(
                "grid needs an even number of points ≥ {MIN_POINTS}, got {points}"
            )));
        }
        Ok(GridSpec { period, points })
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.points as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.points).map(move |j| j as f64 * h)
    }

    pub fn refined(&self) -> GridSpec {
        GridSpec {
            period: self.period,
            points: 2 * self.points,
        }
    }
}

/// Symmetric block-tridiagonal `A` from the folded ring; `s` unknowns per block.
struct Folded {
    s: usize,
    /// Diagonal blocks, row-major `s × s`.
    diag: Vec<[f64; 16]>,
    /// Every off-diagonal block equals `offdiag · I`.
    offdiag: f64,
    lower: f64,
    upper: f64,
}

impl Folded {
    /// `values[j]` is the `c × c` potential at site `j`, row-major.
    fn new(grid: &GridSpec, c: usize, values: &[[f64; 4]]) -> Self {
        let m = grid.points;
        let half = m / 2;
        let s = 2 * c;
        let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        let mut diag = Vec::with_capacity(half);
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for blk in 0..half {
            let sites = [blk, m - 1 - blk];
            let mut d = [0.0; 16];
            for (a, &site) in sites.iter().enumerate() {
                for i in 0..c {
                    for j in 0..c {
                        d[(a * c + i) * s + a * c + j] = values[site][i * c + j];
                    }
                    d[(a * c + i) * s + a * c + i] += 2.0 * inv_h2;
                }
            }
            // the two sites of a block are neighbours at both ends of the chain
            if blk == 0 || blk == half - 1 {
                for i in 0..c {
                    d[i * s + c + i] -= inv_h2;
                    d[(c + i) * s + i] -= inv_h2;
                }
            }
            for r in 0..s {
                let off: f64 = (0..s).filter(|&q| q != r).map(|q| d[r * s + q].abs()).sum();
                let neighbours = if blk > 0 { inv_h2 } else { 0.0 } + if blk + 1 < half { inv_h2 } else { 0.0 };
                lower = lower.min(d[r * s + r] - off - neighbours);
                upper = upper.max(d[r * s + r] + off + neighbours);
            }
            diag.push(d);
        }
        Folded {
            s,
            diag,
            offdiag: -inv_h2,
            lower,
            upper,
        }
    }

    fn dim(&self) -> usize {
        self.s * self.diag.len()
    }

    /// Number of eigenvalues strictly below `lambda`.
    fn count_below(&self, lambda: f64) -> usize {
        let s = self.s;
        let tiny = f64::EPSILON * (self.upper.abs() + self.lower.abs()).max(1.0);
        let b2 = self.offdiag * self.offdiag;
        let mut prev_inv = [0.0; 16];
        let mut negatives = 0;
        for (blk, a) in self.diag.iter().enumerate() {
            let mut d = *a;
            for r in 0..s {
                d[r * s + r] -= lambda;
            }
            if blk > 0 {
                for i in 0..s * s {
                    d[i] -= b2 * prev_inv[i];
                }
            }
            let (neg, inv) = ldl_inertia_inverse(&d, s, tiny);
            negatives += neg;
            prev_inv = inv;
        }
        negatives
    }

    /// The lowest `count` eigenvalues by bisection.
    fn lowest(&self, count: usize) -> Vec<f64> {
        let count = count.min(self.dim());
        let span = (self.upper - self.lower).max(1.0);
        let mut out = Vec::with_capacity(count);
        let mut lo_bound = self.lower - 1e-9 * span;
        for i in 0..count {
            // eigenvalue i is the smallest λ with count_below(λ) > i
            let (mut lo, mut hi) = (lo_bound, self.upper + 1e-9 * span);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let value = 0.5 * (lo + hi);
            out.push(value);
            lo_bound = lo;
        }
        out
    }
}

/// Unpivoted LDLᵀ of a small symmetric block: number of negative pivots and
/// the inverse. Exactly-zero pivots are nudged to `tiny`.
fn ldl_inertia_inverse(a: &[f64; 16], s: usize, tiny: f64) -> (usize, [f64; 16]) {
    let mut l = [0.0; 16];
    let mut d = [0.0; 4];
    let mut neg = 0;
    for j in 0..s {
        let mut dj = a[j * s + j];
        for k in 0..j {
            dj -= l[j * s + k] * l[j * s + k] * d[k];
        }
        if dj == 0.0 {
            dj = tiny;
        }
        d[j] = dj;
        if dj < 0.0 {
            neg += 1;
        }
        l[j * s + j] = 1.0;
        for i in j + 1..s {
            let mut v = a[i * s + j];
            for k in 0..j {
                v -= l[i * s + k] * l[j * s + k] * d[k];
            }
            l[i * s + j] = v / dj;
        }
    }
    // columns of the inverse: solve L D Lᵀ x = e_c
    let mut inv = [0.0; 16];
    for c in 0..s {
        let mut y = [0.0; 4];
        for i in 0..s {
            let mut v = if i == c { 1.0 } else { 0.0 };
            for k in 0..i {
                v -= l[i * s + k] * y[k];
            }
            y[i] = v;
        }
        for i in 0..s {
            y[i] /= d[i];
        }
        for i in (0..s).rev() {
            let mut v = y[i];
            for k in i + 1..s {
                v -= l[k * s + i] * y[k];
            }
            y[i] = v;
        }
        for i in 0..s {
            inv[i * s + c] = y[i];
        }
    }
    (neg, inv)
}

/// Lowest `count` eigenvalues of the periodic scalar operator `−d² + V`.
pub fn fd_scalar(potential: &(dyn Fn(f64) -> f64 + Sync), grid: &GridSpec, count: usize) -> Result<Vec<f64>> {
    let values: Vec<[f64; 4]> = grid
        .nodes()
        .map(|x| {
            let v = potential(x);
            [v, 0.0, 0.0, 0.0]
        })
        .collect();
    check_finite(&values)?;
    Ok(Folded::new(grid, 1, &values).lowest(count))
}

/// Lowest `count` eigenvalues of the periodic two-channel operator
/// `−d²·I₂ + V(x)`; `V` must be exactly symmetric at every grid point.
pub fn fd_2channel(
    potential: &(dyn Fn(f64) -> [[f64; 2]; 2] + Sync),
    grid: &GridSpec,
    count: usize,
) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(grid.points);
    for x in grid.nodes() {
        let v = potential(x);
        if v[0][1] != v[1][0] {
            return Err(QesError::Parameter(format!(
                "two-channel potential is not symmetric at x = {x}: {} vs {}",
                v[0][1], v[1][0]
            )));
        }
        values.push([v[0][0], v[0][1], v[1][0], v[1][1]]);
    }
    check_finite(&values)?;
    Ok(Folded::new(grid, 2, &values).lowest(count))
}

fn check_finite(values: &[[f64; 4]]) -> Result<()> {
    if values.iter().flatten().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(QesError::Numerical("potential is not finite on the grid".into()))
    }
}

/// `(4·E(2M) − E(M)) / 3`, cancelling the leading `h²` error.
pub fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse.iter().zip(fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}

pub fn fd_scalar_extrapolated(
    potential: &(dyn Fn(f64) -> f64 + Sync),
    grid: &GridSpec,
    count: usize,
) -> Result<Vec<f64>> {
    let (coarse, fine) = rayon::join(
        || fd_scalar(potential, grid, count),
        || fd_scalar(potential, &grid.refined(), count),
    );
    Ok(richardson(&coarse?, &fine?))
}

pub fn fd_2channel_extrapolated(
    potential: &(dyn Fn(f64) -> [[f64; 2]; 2] + Sync),
    grid: &GridSpec,
    count: usize,
) -> Result<Vec<f64>> {
    let (coarse, fine) = rayon::join(
        || fd_2channel(potential, grid, count),
        || fd_2channel(potential, &grid.refined(), count),
    );
    Ok(richardson(&coarse?, &fine?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchVerdict {
    pub value: f64,
    pub reference: Option<f64>,
    pub abs_error: f64,
    pub pass: bool,
}

/// Pairs each algebraic value with the nearest unused reference value.
pub fn match_values(algebraic: &[f64], reference: &[f64], tol: f64) -> Vec<MatchVerdict> {
    let mut used = vec![false; reference.len()];
    algebraic
        .iter()
        .map(|&value| {
            let best = reference
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .min_by(|a, b| (a.1 - value).abs().total_cmp(&(b.1 - value).abs()));
            match best {
                Some((i, &r)) => {
                    used[i] = true;
                    let abs_error = (r - value).abs();
                    MatchVerdict {
                        value,
                        reference: Some(r),
                        abs_error,
                        pass: abs_error <= tol,
                    }
                }
                None => MatchVerdict {
                    value,
                    reference: None,
                    abs_error: f64::INFINITY,
                    pass: false,
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sym_eigen, Matrix};
    use std::f64::consts::PI;

    fn free_exact(count: usize) -> Vec<f64> {
        // 0, 1, 1, 4, 4, 9, 9, … on a 2π ring
        let mut v = vec![0.0];
        let mut j = 1.0f64;
        while v.len() < count {
            v.push(j * j);
            v.push(j * j);
            j += 1.0;
        }
        v.truncate(count);
        v
    }

    fn dense(grid: &GridSpec, c: usize, pot: &dyn Fn(f64) -> [f64; 4]) -> Matrix {
        let m = grid.points;
        let h2 = grid.spacing().powi(2);
        let mut a = Matrix::zeros(m * c, m * c);
        for (j, x) in grid.nodes().enumerate() {
            let v = pot(x);
            for p in 0..c {
                for q in 0..c {
                    a[(j * c + p, j * c + q)] += v[p * c + q];
                }
                a[(j * c + p, j * c + p)] += 2.0 / h2;
                a[(j * c + p, ((j + 1) % m) * c + p)] -= 1.0 / h2;
                a[(j * c + p, ((j + m - 1) % m) * c + p)] -= 1.0 / h2;
            }
        }
        a
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1.0, 62).is_err());
        assert!(GridSpec::new(1.0, 65).is_err());
        assert!(GridSpec::new(0.0, 64).is_err());
        assert_eq!(GridSpec::new(2.0, 64).unwrap().refined().points, 128);
    }

    #[test]
    fn free_particle_spectrum() {
        let g = GridSpec::new(2.0 * PI, 512).unwrap();
        let e = fd_scalar(&|_| 0.0, &g, 5).unwrap();
        for (a, b) in e.iter().zip(free_exact(5)) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn constant_shift_is_exact() {
        let g = GridSpec::new(2.0 * PI, 512).unwrap();
        let base = fd_scalar(&|x| x.sin(), &g, 8).unwrap();
        let shifted = fd_scalar(&|x| x.sin() + 2.5, &g, 8).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            assert!((b - a - 2.5).abs() <= 1e-12, "{}", b - a - 2.5);
        }
    }

    #[test]
    fn agrees_with_dense_solver() {
        let g = GridSpec::new(3.0, 64).unwrap();
        let pot = |x: f64| 5.0 * (2.0 * PI * x / 3.0).cos() + x * (3.0 - x);
        let fd = fd_scalar(&pot, &g, 64).unwrap();
        let (dense_vals, _) = sym_eigen(&dense(&g, 1, &|x| [pot(x), 0.0, 0.0, 0.0])).unwrap();
        for (a, b) in fd.iter().zip(&dense_vals) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }

        let vm = |x: f64| {
            let c = (2.0 * PI * x / 3.0).cos();
            [[3.0 * c, 1.5 * c * c], [1.5 * c * c, -2.0 + x]]
        };
        let fd = fd_2channel(&vm, &g, 128).unwrap();
        let (dense_vals, _) =
            sym_eigen(&dense(&g, 2, &|x| {
                let v = vm(x);
                [v[0][0], v[0][1], v[1][0], v[1][1]]
            }))
            .unwrap();
        for (a, b) in fd.iter().zip(&dense_vals) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn decoupled_channels_are_union_of_scalar_spectra() {
        let g = GridSpec::new(2.0 * PI, 256).unwrap();
        let (v1, v2) = (|x: f64| 2.0 * x.cos(), |x: f64| (2.0 * x).sin() + 0.5);
        let two = fd_2channel(&|x| [[v1(x), 0.0], [0.0, v2(x)]], &g, 12).unwrap();
        let mut union = fd_scalar(&v1, &g, 12).unwrap();
        union.extend(fd_scalar(&v2, &g, 12).unwrap());
        union.sort_by(f64::total_cmp);
        for (a, b) in two.iter().zip(&union) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn asymmetric_potential_rejected() {
        let g = GridSpec::new(1.0, 64).unwrap();
        assert!(fd_2channel(&|_| [[0.0, 1.0], [0.5, 0.0]], &g, 4).is_err());
        assert!(fd_scalar(&|_| f64::NAN, &g, 4).is_err());
    }

    #[test]
    fn second_order_convergence() {
        let exact = free_exact(11);
        let e1 = fd_scalar(&|_| 0.0, &GridSpec::new(2.0 * PI, 256).unwrap(), 11).unwrap();
        let e2 = fd_scalar(&|_| 0.0, &GridSpec::new(2.0 * PI, 512).unwrap(), 11).unwrap();
        // first five distinct nonzero levels
        for idx in [1, 3, 5, 7, 9] {
            let ratio = (e1[idx] - exact[idx]).abs() / (e2[idx] - exact[idx]).abs();
            assert!((3.5..=4.5).contains(&ratio), "level {idx}: {ratio}");
        }
    }

    #[test]
    fn richardson_tightens_free_particle_errors() {
        let g = GridSpec::new(2.0 * PI, 64).unwrap();
        let exact = free_exact(9);
        let plain = fd_scalar(&|_| 0.0, &g, 9).unwrap();
        let extra = fd_scalar_extrapolated(&|_| 0.0, &g, 9).unwrap();
        let worst = |v: &[f64]| v.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst(&plain) >= 3.0 * worst(&extra));
    }

    #[test]
    fn matching_rules() {
        let r = [0.0, 1.0, 2.0, 3.0];
        assert!(match_values(&r, &r, 1e-12).iter().all(|v| v.pass));
        let tol = 1e-3;
        let alg = [0.0, 1.0 + 2.0 * tol, 2.0, 3.0];
        let verdicts = match_values(&alg, &r, tol);
        assert_eq!(verdicts.iter().filter(|v| !v.pass).count(), 1);
        assert!(!verdicts[1].pass);
        // no reuse: two algebraic values near one reference value
        let verdicts = match_values(&[1.0, 1.0], &[1.0, 5.0], 0.1);
        assert_eq!(verdicts.iter().filter(|v| v.pass).count(), 1);
        assert_eq!(match_values(&[1.0], &[], 0.1)[0].reference, None);
    }
}
