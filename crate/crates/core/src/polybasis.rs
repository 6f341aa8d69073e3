//! Monomial spaces `P(n)` in one variable and symmetric spaces `V_m` in the
//! elementary symmetric variables `τ`, plus least-squares fitting of sampled
//! functions into them.

use std::ops::{Add, Mul, Sub};

use serde::Serialize;

use crate::error::{QesError, Result};
use crate::jets::Jet2;
use crate::linalg::{relative_misfit, Matrix, PivotedQr};

pub const MAX_UNI_DEGREE: usize = 12;
pub const MAX_SYM_DIM: usize = 200;

/// Minimal ring interface shared by plain reals and jets, so that the same
/// polynomial code serves sampling and differentiation.
pub trait Ring:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + From<f64>
{
}

impl Ring for f64 {}
impl Ring for Jet2 {}

/// `P(n)`: polynomials of degree at most `n`, spanned by `1, y, …, yⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct UniBasis {
    n: usize,
}

impl UniBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_UNI_DEGREE {
            return Err(QesError::Parameter(format!(
                "degree {n} exceeds the monomial cap {MAX_UNI_DEGREE}"
            )));
        }
        Ok(UniBasis { n })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// `[1, y, y², …, yⁿ]`.
    pub fn eval<T: Ring>(&self, y: T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.dim());
        let mut p = T::from(1.0);
        out.push(p);
        for _ in 0..self.n {
            p = p * y;
            out.push(p);
        }
        out
    }
}

/// `V_m`: polynomials in `τ_1..τ_N` of total degree at most `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymBasis {
    bodies: usize,
    m: usize,
    indices: Vec<Vec<usize>>,
}

impl SymBasis {
    pub fn new(bodies: usize, m: usize) -> Result<Self> {
        if bodies == 0 {
            return Err(QesError::Parameter("symmetric basis needs N ≥ 1".into()));
        }
        let dim = binomial(bodies + m, bodies);
        if dim > MAX_SYM_DIM as u128 {
            return Err(QesError::Parameter(format!(
                "dim V_m = C({}, {bodies}) = {dim} exceeds the cap {MAX_SYM_DIM}",
                bodies + m
            )));
        }
        Ok(SymBasis {
            bodies,
            m,
            indices: enumerate(bodies, m),
        })
    }

    pub fn bodies(&self) -> usize {
        self.bodies
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    /// Every monomial `Π τ_j^{l_j}` evaluated at the given `τ`.
    pub fn eval<T: Ring>(&self, tau: &[T]) -> Vec<T> {
        assert_eq!(tau.len(), self.bodies);
        // power tables τ_j^0..τ_j^m
        let powers: Vec<Vec<T>> = tau
            .iter()
            .map(|&t| UniBasis { n: self.m }.eval(t))
            .collect();
        self.indices
            .iter()
            .map(|l| {
                l.iter()
                    .enumerate()
                    .fold(T::from(1.0), |acc, (j, &e)| if e == 0 { acc } else { acc * powers[j][e] })
            })
            .collect()
    }
}

/// Elementary symmetric polynomials `τ_1..τ_N` of `z`.
pub fn tau_eval<T: Ring>(z: &[T]) -> Vec<T> {
    let n = z.len();
    // e[j] holds τ_j of the prefix processed so far; e[0] = 1.
    let mut e = vec![T::from(0.0); n + 1];
    e[0] = T::from(1.0);
    for (i, &zi) in z.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] = e[j] + e[j - 1] * zi;
        }
    }
    e.split_off(1)
}

/// Multi-indices `(l_1..l_N)` with `Σ l_j ≤ m`, by total degree and then
/// lexicographically descending within a degree.
pub fn enumerate(bodies: usize, m: usize) -> Vec<Vec<usize>> {
    fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            compositions(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=m {
        compositions(d, bodies, &mut Vec::with_capacity(bodies), &mut out);
    }
    out
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    /// `‖values − fit‖ / ‖values‖`, or the absolute misfit when `values = 0`.
    pub residual: f64,
}

/// Fits one sampled function given the `S × d` design matrix of basis values.
pub fn fit(design: &Matrix, values: &[f64]) -> Result<FitResult> {
    let qr = checked_factor(design)?;
    Ok(fit_with(&qr, design, values))
}

/// Fits several sampled functions (the columns of `values`) against one design.
pub fn fit_many(design: &Matrix, values: &Matrix) -> Result<Vec<FitResult>> {
    if values.rows() != design.rows() {
        return Err(QesError::Parameter("sample count mismatch".into()));
    }
    let qr = checked_factor(design)?;
    Ok((0..values.cols())
        .map(|j| fit_with(&qr, design, &values.column(j)))
        .collect())
}

fn checked_factor(design: &Matrix) -> Result<PivotedQr> {
    let (s, d) = (design.rows(), design.cols());
    if s < 2 * d {
        return Err(QesError::Parameter(format!(
            "need at least {} samples for {d} basis functions, got {s}",
            2 * d
        )));
    }
    let qr = PivotedQr::factor(design);
    if !qr.is_full_rank() {
        return Err(QesError::Conditioning {
            rank: qr.rank(),
            cols: d,
            nodes: format!("{s} sample rows"),
        });
    }
    Ok(qr)
}

fn fit_with(qr: &PivotedQr, design: &Matrix, values: &[f64]) -> FitResult {
    let coefficients = qr.solve(values);
    let residual = relative_misfit(design, &coefficients, values);
    FitResult {
        coefficients,
        residual,
    }
}
