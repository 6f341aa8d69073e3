//! The Lamé operator `−d²/dx² + N(N+1)k²sn²(x,k)` for even `N = 2n`.
//!
//! In the variable `y = sn²` the four gauge factors
//!
//! | gauge | factor   | space     |
//! |-------|----------|-----------|
//! | f₁    | 1        | P(n)      |
//! | f₂    | sn·cn    | P(n − 1)  |
//! | f₃    | sn·dn    | P(n − 1)  |
//! | f₄    | dn·cn    | P(n − 1)  |
//!
//! each leave a polynomial space invariant, giving `4n + 1` algebraic
//! eigenvalues in total.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebraise::{
    build_matrix, solve_sector, AlgebraisationProblem, Basis, GaugeSpec, HamiltonianSpec, SamplingDomain,
    SectorResult, SingularSet, VariableMap,
};
use crate::elliptic::{complete_k, jacobi, Modulus};
use crate::error::{QesError, Result};
use crate::jets::{jacobi_jet, Jet2};
use crate::linalg::{Matrix, PivotedQr};
use crate::polybasis::UniBasis;

/// Tolerance for flagging coincident eigenvalues from different sectors.
pub const MERGE_TOL: f64 = 1e-6;
pub const ENVELOPING_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LameParams {
    /// Half the Lamé index: `N = 2n`.
    pub n: usize,
    pub k: f64,
    /// Coefficient multiplying `k²sn²`; `N(N+1)` unless overridden.
    pub coupling: f64,
}

impl LameParams {
    pub fn new(n: usize, k: f64) -> Result<Self> {
        if n == 0 {
            return Err(QesError::Parameter("Lamé index needs n ≥ 1 (N = 2n ≥ 2)".into()));
        }
        Modulus::new(k)?;
        if k >= 1.0 {
            return Err(QesError::Domain(format!("modulus must satisfy 0 ≤ k < 1, got {k}")));
        }
        let big_n = (2 * n) as f64;
        Ok(LameParams {
            n,
            k,
            coupling: big_n * (big_n + 1.0),
        })
    }

    /// Constructor from the full index `N`; only even `N` has the four gauges.
    pub fn from_index(big_n: usize, k: f64) -> Result<Self> {
        if big_n % 2 == 1 {
            return Err(QesError::Parameter(format!(
                "N = {big_n} is odd; the four-gauge construction exists for even N = 2n only"
            )));
        }
        LameParams::new(big_n / 2, k)
    }

    /// Same operator with a different coupling, e.g. off the QES locus.
    pub fn with_coupling(self, coupling: f64) -> Self {
        LameParams { coupling, ..self }
    }

    pub fn modulus(&self) -> Modulus {
        Modulus::new(self.k).expect("validated at construction")
    }

    pub fn quarter_period(&self) -> f64 {
        complete_k(self.modulus()).expect("k < 1 validated at construction")
    }

    pub fn potential(&self, x: f64) -> f64 {
        let sn = jacobi(x, self.modulus()).sn;
        self.coupling * self.k * self.k * sn * sn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum GaugeId {
    F1,
    F2,
    F3,
    F4,
}

impl GaugeId {
    pub const ALL: [GaugeId; 4] = [GaugeId::F1, GaugeId::F2, GaugeId::F3, GaugeId::F4];

    pub fn from_index(a: usize) -> Result<Self> {
        match a {
            1 => Ok(GaugeId::F1),
            2 => Ok(GaugeId::F2),
            3 => Ok(GaugeId::F3),
            4 => Ok(GaugeId::F4),
            _ => Err(QesError::Parameter(format!("gauge index {a} not in 1..=4"))),
        }
    }

    pub fn index(self) -> usize {
        self as usize + 1
    }

    /// Degree bound `n_a` of the invariant space.
    pub fn degree(self, n: usize) -> usize {
        match self {
            GaugeId::F1 => n,
            _ => n - 1,
        }
    }

    pub fn factor_name(self) -> &'static str {
        match self {
            GaugeId::F1 => "1",
            GaugeId::F2 => "sn·cn",
            GaugeId::F3 => "sn·dn",
            GaugeId::F4 => "dn·cn",
        }
    }
}

impl fmt::Display for GaugeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.index())
    }
}

pub fn lame_problem(p: &LameParams, g: GaugeId) -> Result<AlgebraisationProblem> {
    let k = p.modulus();
    let kk = p.quarter_period();
    let params = *p;

    let factor = move |x: &[Jet2]| -> Result<Jet2> {
        let (sn, cn, dn) = jacobi_jet(x[0], k);
        Ok(match g {
            GaugeId::F1 => Jet2::constant(1.0),
            GaugeId::F2 => sn * cn,
            GaugeId::F3 => sn * dn,
            GaugeId::F4 => dn * cn,
        })
    };
    let sn_zeros = || SingularSet::lattice("sn = 0", 0.0, 2.0 * kk);
    let cn_zeros = || SingularSet::lattice("cn = 0", kk, 2.0 * kk);
    let singular = match g {
        GaugeId::F1 => vec![],
        GaugeId::F2 => vec![sn_zeros(), cn_zeros()],
        GaugeId::F3 => vec![sn_zeros()],
        GaugeId::F4 => vec![cn_zeros()],
    };

    Ok(AlgebraisationProblem {
        label: format!("lame n={} k={} {g}", p.n, p.k),
        hamiltonian: HamiltonianSpec::scalar(1, move |x| Ok(params.potential(x[0]))),
        gauge: GaugeSpec::scalar(g.factor_name(), factor, singular),
        variables: VariableMap::new("y = sn²", move |x: &[Jet2]| {
            let sn = jacobi_jet(x[0], k).0;
            Ok(vec![sn * sn])
        }),
        basis: Basis::Uni(UniBasis::new(g.degree(p.n))?),
        domain: SamplingDomain::Interval { lo: 0.0, hi: kk },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaggedEigenvalue {
    pub value: f64,
    pub gauge: GaugeId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LameSpectrum {
    pub params: LameParams,
    pub sectors: Vec<(GaugeId, SectorResult)>,
    /// All algebraic eigenvalues, sorted, each tagged with its sector.
    pub eigenvalues: Vec<TaggedEigenvalue>,
    /// Index pairs into `eigenvalues` from different sectors that coincide.
    pub coincidences: Vec<(usize, usize)>,
}

impl LameSpectrum {
    pub fn values(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|t| t.value).collect()
    }

    pub fn sector(&self, g: GaugeId) -> &SectorResult {
        &self.sectors.iter().find(|(id, _)| *id == g).expect("all four sectors present").1
    }
}

/// Certifies all four sectors (concurrently) and assembles the `4n + 1` values.
pub fn full_spectrum(p: &LameParams, seed: u64, tol: f64) -> Result<LameSpectrum> {
    let sectors: Vec<(GaugeId, SectorResult)> = GaugeId::ALL
        .par_iter()
        .map(|&g| Ok((g, solve_sector(&lame_problem(p, g)?, seed, tol)?)))
        .collect::<Result<_>>()?;

    let mut eigenvalues: Vec<TaggedEigenvalue> = sectors
        .iter()
        .flat_map(|(g, s)| s.eigenvalues.iter().map(move |&value| TaggedEigenvalue { value, gauge: *g }))
        .collect();
    eigenvalues.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.gauge.cmp(&b.gauge)));

    let mut coincidences = Vec::new();
    for i in 0..eigenvalues.len() {
        for j in i + 1..eigenvalues.len() {
            let (a, b) = (eigenvalues[i], eigenvalues[j]);
            if a.gauge != b.gauge && (a.value - b.value).abs() <= MERGE_TOL * (1.0 + a.value.abs()) {
                coincidences.push((i, j));
            }
        }
    }
    Ok(LameSpectrum {
        params: *p,
        sectors,
        eigenvalues,
        coincidences,
    })
}

/// `(J₊, J₀, J₋)` on the monomial basis of `P(n_a)`; column `j` is the image of `y^j`.
pub fn sl2_generators(n_a: usize) -> (Matrix, Matrix, Matrix) {
    let d = n_a + 1;
    let half = n_a as f64 / 2.0;
    let mut jp = Matrix::zeros(d, d);
    let mut j0 = Matrix::zeros(d, d);
    let mut jm = Matrix::zeros(d, d);
    for j in 0..d {
        j0[(j, j)] = j as f64 - half;
        if j > 0 {
            jm[(j - 1, j)] = j as f64;
        }
        if j + 1 < d {
            jp[(j + 1, j)] = j as f64 - n_a as f64;
        }
    }
    (jp, j0, jm)
}

pub const ENVELOPING_LABELS: [&str; 10] = [
    "J+J+", "J+J0", "J0J0", "J0J-", "J-J-", "J+", "J0", "J-", "J+J-", "1",
];

/// The ten enveloping-algebra elements, in [`ENVELOPING_LABELS`] order.
pub fn enveloping_elements(n_a: usize) -> Vec<Matrix> {
    let (jp, j0, jm) = sl2_generators(n_a);
    vec![
        jp.matmul(&jp),
        jp.matmul(&j0),
        j0.matmul(&j0),
        j0.matmul(&jm),
        jm.matmul(&jm),
        jp.clone(),
        j0.clone(),
        jm.clone(),
        jp.matmul(&jm),
        Matrix::identity(n_a + 1),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopingFit {
    pub gauge: GaugeId,
    pub coefficients: Vec<f64>,
    /// `‖M − Σ c_i E_i‖_F / ‖M‖_F`.
    pub residual: f64,
}

/// Expresses the gauged sector operator as a combination of the ten
/// enveloping elements. The elements are linearly dependent (the Casimir
/// relation), so the rank-revealing basic solution is returned.
pub fn enveloping_fit(p: &LameParams, g: GaugeId, seed: u64) -> Result<EnvelopingFit> {
    let op = build_matrix(&lame_problem(p, g)?, seed)?;
    if op.residual > crate::algebraise::INVARIANCE_TOL {
        return Err(QesError::NotQes {
            residual: op.residual,
            tolerance: crate::algebraise::INVARIANCE_TOL,
        });
    }
    let n_a = g.degree(p.n);
    let elems = enveloping_elements(n_a);
    let d2 = (n_a + 1) * (n_a + 1);
    let design = Matrix::from_fn(d2, elems.len(), |r, c| elems[c].as_slice()[r]);
    let target = op.matrix.as_slice().to_vec();
    let qr = PivotedQr::factor(&design);
    let coefficients = qr.solve(&target);
    let fitted = design.mul_vec(&coefficients);
    let miss = fitted.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm = op.matrix.frobenius();
    let residual = if norm == 0.0 { miss } else { miss / norm };
    if residual > ENVELOPING_TOL {
        return Err(QesError::Numerical(format!(
            "sector {g} is not quadratic in the sl(2) generators (residual {residual:.3e})"
        )));
    }
    Ok(EnvelopingFit {
        gauge: g,
        coefficients,
        residual,
    })
}

/// Eigenvalues of the four sectors at `k = 0`: the free Fourier modes they reduce to.
pub fn circular_limit(n: usize, g: GaugeId) -> Vec<f64> {
    let sq = |j: usize| (j * j) as f64;
    match g {
        GaugeId::F1 => (0..=n).map(|j| sq(2 * j)).collect(),
        GaugeId::F2 => (1..=n).map(|j| sq(2 * j)).collect(),
        GaugeId::F3 | GaugeId::F4 => (0..n).map(|j| sq(2 * j + 1)).collect(),
    }
}
