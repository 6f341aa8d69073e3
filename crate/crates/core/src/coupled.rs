//! The two-channel elliptic system
//!
//! ```text
//! V(x) = sn²·diag(A − 2b, A + 2b) + b·diag(1, −1) + θ·sn·cn·σ₁
//! ```
//!
//! with its `F` and `G` matrix algebraisations in `y = sn²`, and the
//! trigonometric operator `−d²/dx² + 2b·[[cos²x − ½, cos x sin x], [cos x sin x, sin²x − ½]]`
//! on `[0, 2Nπ]` with its two-dimensional Fourier blocks.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebraise::{
    solve_sector, AlgebraisationProblem, Basis, BasisFn, GaugeSpec, HamiltonianSpec, SamplingDomain, SectorResult,
    SingularSet, VariableMap,
};
use crate::elliptic::{complete_k, jacobi, Modulus};
use crate::error::{QesError, Result};
use crate::jets::{jacobi_jet, Jet2};
use crate::linalg::{sym_eigen, Matrix};
use crate::polybasis::UniBasis;

/// Fraction of `K` excluded at both ends of the sampling interval.
pub const EDGE_MARGIN: f64 = 0.02;

/// Constants of the potential together with the gauge parameter `κ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoupledParams {
    pub m: usize,
    pub k: f64,
    pub b: f64,
    pub a: f64,
    pub theta: f64,
    pub kappa1: f64,
}

/// `κ₁ = −θ / (2b + k²(1 + 4m))`.
pub fn kappa1(m: usize, k: f64, b: f64, theta: f64) -> Result<f64> {
    let den = 2.0 * b + k * k * (1.0 + 4.0 * m as f64);
    if den == 0.0 {
        return Err(QesError::Parameter("2b + k²(1+4m) = 0 leaves κ₁ undefined".into()));
    }
    Ok(-theta / den)
}

fn check_mkb(m: usize, k: f64, b: f64) -> Result<Modulus> {
    if m == 0 {
        return Err(QesError::Parameter("m must be a positive integer".into()));
    }
    if !b.is_finite() {
        return Err(QesError::Parameter("b must be finite".into()));
    }
    let md = Modulus::new(k)?;
    if k >= 1.0 {
        return Err(QesError::Domain("the elliptic system needs 0 ≤ k < 1".into()));
    }
    Ok(md)
}

impl CoupledParams {
    /// `A = (k²/2)(4m²+2m+1)` and `θ = 4b² − k⁴(4m+1)²`, taken literally.
    pub fn printed(m: usize, k: f64, b: f64) -> Result<Self> {
        check_mkb(m, k, b)?;
        let mf = m as f64;
        let k2 = k * k;
        let a = 0.5 * k2 * (4.0 * mf * mf + 2.0 * mf + 1.0);
        let theta = 4.0 * b * b - k2 * k2 * (4.0 * mf + 1.0).powi(2);
        Ok(CoupledParams { m, k, b, a, theta, kappa1: kappa1(m, k, b, theta)? })
    }

    /// The invariant locus: `A = k²(4m²+2m+1)`, `θ² = 4b² − k⁴(4m+1)²`, `θ ≥ 0`.
    pub fn qes(m: usize, k: f64, b: f64) -> Result<Self> {
        check_mkb(m, k, b)?;
        let mf = m as f64;
        let k2 = k * k;
        let a = k2 * (4.0 * mf * mf + 2.0 * mf + 1.0);
        let t2 = 4.0 * b * b - k2 * k2 * (4.0 * mf + 1.0).powi(2);
        if t2 < 0.0 {
            return Err(QesError::Domain(format!(
                "θ² = 4b² − k⁴(4m+1)² = {t2:.6} < 0: the invariant locus needs |b| ≥ k²(4m+1)/2 = {:.6} for a real potential",
                0.5 * k2 * (4.0 * mf + 1.0)
            )));
        }
        let theta = t2.sqrt();
        Ok(CoupledParams { m, k, b, a, theta, kappa1: kappa1(m, k, b, theta)? })
    }

    /// Same gauge data with a different `A`, used for negative controls.
    pub fn with_a(self, a: f64) -> Self {
        CoupledParams { a, ..self }
    }

    pub fn modulus(&self) -> Modulus {
        Modulus::new(self.k).expect("validated at construction")
    }

    pub fn quarter_period(&self) -> f64 {
        complete_k(self.modulus()).expect("k < 1")
    }

    pub fn potential(&self, x: f64) -> [[f64; 2]; 2] {
        let j = jacobi(x, self.modulus());
        potential_2x2(j.sn, j.cn, self)
    }
}

/// Potential entries from given `sn` and `cn` values, generic over jets.
pub fn potential_2x2<T>(sn: T, cn: T, p: &CoupledParams) -> [[T; 2]; 2]
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::Mul<T, Output = T> + std::ops::Add<f64, Output = T>,
{
    let s2 = sn * sn;
    let off = sn * cn * p.theta;
    [[s2 * (p.a - 2.0 * p.b) + p.b, off], [off, s2 * (p.a + 2.0 * p.b) + (-p.b)]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CoupledSector {
    F,
    G,
}

impl CoupledSector {
    pub const ALL: [CoupledSector; 2] = [CoupledSector::F, CoupledSector::G];

    /// Polynomial degrees of the two channel spaces.
    pub fn degrees(self, m: usize) -> (usize, usize) {
        match self {
            CoupledSector::F => (m - 1, m),
            CoupledSector::G => (m - 1, m - 1),
        }
    }

    pub fn dim(self, m: usize) -> usize {
        let (d0, d1) = self.degrees(m);
        d0 + d1 + 2
    }
}

impl fmt::Display for CoupledSector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoupledSector::F => "F",
            CoupledSector::G => "G",
        })
    }
}

/// `F = diag(sn, cn)·[[1, κ₁], [0, 1]]`.
pub fn gauge_f(p: &CoupledParams) -> GaugeSpec {
    let k = p.modulus();
    let kk = p.quarter_period();
    let kappa = p.kappa1;
    GaugeSpec::matrix(
        "F = diag(sn, cn)·[[1, κ₁], [0, 1]]",
        move |x: &[Jet2]| {
            let (sn, cn, _) = jacobi_jet(x[0], k);
            Ok([[sn, sn * kappa], [Jet2::constant(0.0), cn]])
        },
        singular_sets(kk),
    )
}

/// `G = diag(sn·cn·dn, dn)·[[1, 0], [−y/κ₁, 1]]`.
pub fn gauge_g(p: &CoupledParams) -> Result<GaugeSpec> {
    if p.kappa1 == 0.0 {
        return Err(QesError::Parameter("the G gauge needs κ₁ ≠ 0".into()));
    }
    let k = p.modulus();
    let kk = p.quarter_period();
    let inv = 1.0 / p.kappa1;
    Ok(GaugeSpec::matrix(
        "G = diag(sn·cn·dn, dn)·[[1, 0], [−y/κ₁, 1]]",
        move |x: &[Jet2]| {
            let (sn, cn, dn) = jacobi_jet(x[0], k);
            let y = sn * sn;
            Ok([[sn * cn * dn, Jet2::constant(0.0)], [-(y * dn * inv), dn]])
        },
        singular_sets(kk),
    ))
}

fn singular_sets(kk: f64) -> Vec<SingularSet> {
    vec![
        SingularSet::lattice("sn = 0", 0.0, 2.0 * kk),
        SingularSet::lattice("cn = 0", kk, 2.0 * kk),
    ]
}

pub fn coupled_problem(p: &CoupledParams, sector: CoupledSector) -> Result<AlgebraisationProblem> {
    let k = p.modulus();
    let kk = p.quarter_period();
    let params = *p;
    let gauge = match sector {
        CoupledSector::F => gauge_f(p),
        CoupledSector::G => gauge_g(p)?,
    };
    let (d0, d1) = sector.degrees(p.m);
    Ok(AlgebraisationProblem {
        label: format!("coupled m={} k={} b={} {sector}", p.m, p.k, p.b),
        hamiltonian: HamiltonianSpec::two_channel(move |x| Ok(params.potential(x[0]))),
        gauge,
        variables: VariableMap::new("y = sn²", move |x: &[Jet2]| {
            let sn = jacobi_jet(x[0], k).0;
            Ok(vec![sn * sn])
        }),
        basis: Basis::Channels(vec![UniBasis::new(d0)?, UniBasis::new(d1)?]),
        domain: SamplingDomain::Interval {
            lo: EDGE_MARGIN * kk,
            hi: (1.0 - EDGE_MARGIN) * kk,
        },
    })
}

pub fn coupled_spectrum(p: &CoupledParams, sector: CoupledSector, seed: u64, tol: f64) -> Result<SectorResult> {
    solve_sector(&coupled_problem(p, sector)?, seed, tol)
}

/// Both sectors, built concurrently.
pub fn coupled_sectors(p: &CoupledParams, seed: u64, tol: f64) -> Result<Vec<(CoupledSector, SectorResult)>> {
    CoupledSector::ALL
        .par_iter()
        .map(|&s| Ok((s, coupled_spectrum(p, s, seed, tol)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrigParams {
    pub n: usize,
    pub b: f64,
}

impl TrigParams {
    pub fn new(n: usize, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(QesError::Parameter("N must be ≥ 1".into()));
        }
        if !b.is_finite() {
            return Err(QesError::Parameter("b must be finite".into()));
        }
        Ok(TrigParams { n, b })
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.n as f64
    }

    pub fn potential(&self, x: f64) -> [[f64; 2]; 2] {
        let (s, c) = x.sin_cos();
        let b2 = 2.0 * self.b;
        [[b2 * (c * c - 0.5), b2 * c * s], [b2 * c * s, b2 * (s * s - 0.5)]]
    }
}

/// `E(q) = (cos qx/N, sin qx/N)` and `G(q) = (−sin qx/N, cos qx/N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TrigFamily {
    E,
    G,
}

impl fmt::Display for TrigFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrigFamily::E => "E",
            TrigFamily::G => "G",
        })
    }
}

/// Operator matrix on `span{F(N+p), F(N−p)}`, or on `span{F(N)}` when `p = 0`.
pub fn trig_block(t: &TrigParams, family: TrigFamily, p: usize) -> Matrix {
    let sign = match family {
        TrigFamily::E => 1.0,
        TrigFamily::G => -1.0,
    };
    let r = p as f64 / t.n as f64;
    if p == 0 {
        return Matrix::from_rows(&[vec![1.0 + sign * t.b]]);
    }
    Matrix::from_rows(&[
        vec![(1.0 + r).powi(2), sign * t.b],
        vec![sign * t.b, (1.0 - r).powi(2)],
    ])
}

/// Sorted eigenvalues of a trig block.
pub fn trig_block_eigenvalues(t: &TrigParams, family: TrigFamily, p: usize) -> Result<Vec<f64>> {
    let (mut w, _) = sym_eigen(&trig_block(t, family, p))?;
    w.sort_by(f64::total_cmp);
    Ok(w)
}

/// `1 − 2b + p²/N² ± sqrt(b² + 4p²/N²)`, returned as `(minus, plus)`.
pub fn trig_closed_form_spectrum(t: &TrigParams, p: usize) -> (f64, f64) {
    let r2 = (p as f64 / t.n as f64).powi(2);
    let root = (t.b * t.b + 4.0 * r2).sqrt();
    let centre = 1.0 - 2.0 * t.b + r2;
    (centre - root, centre + root)
}

/// The same block through the collocation engine, with the Fourier vectors as basis.
pub fn trig_problem(t: &TrigParams, family: TrigFamily, p: usize) -> AlgebraisationProblem {
    let tp = *t;
    let nf = t.n as f64;
    let vector = move |q: f64| -> BasisFn {
        std::sync::Arc::new(move |x: &[Jet2]| {
            let arg = x[0] * (q / nf);
            let (c, s) = (arg.cos(), arg.sin());
            match family {
                TrigFamily::E => vec![c, s],
                TrigFamily::G => vec![-s, c],
            }
        })
    };
    let mut elements = vec![vector(nf + p as f64)];
    if p > 0 {
        elements.push(vector(nf - p as f64));
    }
    AlgebraisationProblem {
        label: format!("trig N={} b={} {family}({}±{p})", t.n, t.b, t.n),
        hamiltonian: HamiltonianSpec::two_channel(move |x| Ok(tp.potential(x[0]))),
        gauge: GaugeSpec::identity(),
        variables: VariableMap::identity(),
        basis: Basis::Functions { channels: 2, elements },
        domain: SamplingDomain::Interval { lo: 0.0, hi: t.period() },
    }
}

/// Every block eigenvalue of both families for `p = 0..=pmax`, sorted, with multiplicity.
pub fn trig_spectrum(t: &TrigParams, pmax: usize) -> Result<Vec<f64>> {
    let mut all = Vec::new();
    for p in 0..=pmax {
        for fam in [TrigFamily::E, TrigFamily::G] {
            all.extend(trig_block_eigenvalues(t, fam, p)?);
        }
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebraise::{build_matrix, INVARIANCE_TOL};
    use crate::refsolver::{fd_2channel_extrapolated, match_values, GridSpec};

    #[test]
    fn printed_constants_substitution() {
        let p = CoupledParams::printed(1, 0.6, 0.3).unwrap();
        assert!((p.a - 1.26).abs() < 1e-12);
        assert!((p.theta + 2.88).abs() < 1e-12);
        assert!((p.kappa1 - 1.2).abs() < 1e-12);
    }

    #[test]
    fn potential_shape() {
        let p = CoupledParams::qes(1, 0.6, 1.0).unwrap();
        assert_eq!(p.potential(0.0), [[1.0, 0.0], [0.0, -1.0]]);
        let v = p.potential(p.quarter_period());
        assert!((v[0][0] + v[1][1] - 2.0 * p.a).abs() < 1e-12);
        assert!(v[0][1].abs() < 1e-12);
        for x in [0.1, 0.7, 1.9] {
            let v = p.potential(x);
            assert_eq!(v[0][1], v[1][0]);
        }
    }

    #[test]
    fn complex_locus_is_rejected() {
        assert!(matches!(CoupledParams::qes(1, 0.6, 0.3), Err(QesError::Domain(_))));
        assert!(CoupledParams::qes(0, 0.6, 1.0).is_err());
        assert!(CoupledParams::printed(1, 1.0, 1.0).is_err());
    }

    #[test]
    fn sector_dimensions() {
        for m in 1..=3 {
            assert_eq!(CoupledSector::F.dim(m), 2 * m + 1);
            assert_eq!(CoupledSector::G.dim(m), 2 * m);
        }
    }

    #[test]
    fn gauge_f_determinant() {
        let p = CoupledParams::qes(1, 0.6, 1.0).unwrap();
        let f = gauge_f(&p);
        let crate::algebraise::Gauge::Matrix(g) = &f.gauge else { panic!() };
        for x in [0.2, 0.9, 1.4] {
            let m = g(&[Jet2::constant(x)]).unwrap();
            let det = m[0][0].v * m[1][1].v - m[0][1].v * m[1][0].v;
            let j = jacobi(x, p.modulus());
            assert!((det - j.sn * j.cn).abs() < 1e-14);
        }
    }

    #[test]
    fn invariant_locus_certifies_both_sectors() {
        for (m, k, b) in [(1, 0.6, 1.0), (2, 0.5, 1.5), (1, 0.3, -0.8), (2, 0.8, 3.0)] {
            let p = CoupledParams::qes(m, k, b).unwrap();
            for s in CoupledSector::ALL {
                let r = coupled_spectrum(&p, s, 42, INVARIANCE_TOL).unwrap();
                assert_eq!(r.dim, s.dim(m));
                assert!(r.residual <= 1e-8, "{}: {}", r.label, r.residual);
            }
        }
    }

    #[test]
    fn printed_constants_are_refused() {
        let p = CoupledParams::printed(1, 0.6, 0.3).unwrap();
        for s in CoupledSector::ALL {
            let op = build_matrix(&coupled_problem(&p, s).unwrap(), 42).unwrap();
            assert!(op.residual >= 1e-3, "{s}: {}", op.residual);
        }
    }

    #[test]
    fn perturbed_a_is_refused() {
        let p = CoupledParams::qes(1, 0.6, 1.0).unwrap();
        let q = p.with_a(p.a + 0.1);
        for s in CoupledSector::ALL {
            let op = build_matrix(&coupled_problem(&q, s).unwrap(), 42).unwrap();
            assert!(op.residual >= 1e-3, "{s}: {}", op.residual);
        }
    }

    #[test]
    fn algebraic_levels_appear_in_fd_spectrum() {
        let p = CoupledParams::qes(1, 0.6, 1.0).unwrap();
        let grid = GridSpec::new(4.0 * p.quarter_period(), 1024).unwrap();
        let reference = fd_2channel_extrapolated(&|x| p.potential(x), &grid, 20).unwrap();
        let mut alg: Vec<f64> = Vec::new();
        for (_, r) in coupled_sectors(&p, 42, INVARIANCE_TOL).unwrap() {
            alg.extend(r.eigenvalues);
        }
        assert_eq!(alg.len(), 5);
        for v in match_values(&alg, &reference, 1e-3) {
            assert!(v.pass, "{v:?}");
        }
    }

    #[test]
    fn g_gauge_needs_nonzero_kappa() {
        let p = CoupledParams::qes(1, 0.6, 1.0).unwrap();
        let q = CoupledParams { kappa1: 0.0, ..p };
        assert!(matches!(gauge_g(&q), Err(QesError::Parameter(_))));
    }

    #[test]
    fn trig_p0_blocks() {
        let t = TrigParams::new(2, 0.2).unwrap();
        assert_eq!(trig_block(&t, TrigFamily::E, 0).to_rows(), vec![vec![1.2]]);
        assert_eq!(trig_block(&t, TrigFamily::G, 0).to_rows(), vec![vec![0.8]]);
    }

    #[test]
    fn trig_gap_and_isospectrality() {
        for n in 1..=3 {
            for b in [0.0, 0.2, 0.7] {
                let t = TrigParams::new(n, b).unwrap();
                for p in 1..=4 {
                    let e = trig_block_eigenvalues(&t, TrigFamily::E, p).unwrap();
                    let g = trig_block_eigenvalues(&t, TrigFamily::G, p).unwrap();
                    let r = p as f64 / n as f64;
                    let gap = 2.0 * (b * b + 4.0 * r * r).sqrt();
                    assert!((e[1] - e[0] - gap).abs() <= 1e-12);
                    assert!((e[0] - g[0]).abs() <= 1e-12 && (e[1] - g[1]).abs() <= 1e-12);
                    let (lo, hi) = trig_closed_form_spectrum(&t, p);
                    assert!((hi - lo - gap).abs() <= 1e-12);
                    assert!((e[0] - lo - 2.0 * b).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn trig_free_particle() {
        let t = TrigParams::new(1, 0.0).unwrap();
        assert_eq!(trig_closed_form_spectrum(&t, 1), (0.0, 4.0));
        assert_eq!(trig_block_eigenvalues(&t, TrigFamily::E, 0).unwrap(), vec![1.0]);
        let e = trig_block_eigenvalues(&t, TrigFamily::E, 2).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-14 && (e[1] - 9.0).abs() < 1e-14);
    }

    #[test]
    fn trig_engine_reproduces_blocks() {
        let t = TrigParams::new(3, 0.2).unwrap();
        for fam in [TrigFamily::E, TrigFamily::G] {
            for p in 0..=4 {
                let op = build_matrix(&trig_problem(&t, fam, p), 42).unwrap();
                assert!(op.residual <= 1e-10, "{fam} p={p}: {}", op.residual);
                let want = trig_block(&t, fam, p);
                for i in 0..want.rows() {
                    for j in 0..want.cols() {
                        assert!((op.matrix[(i, j)] - want[(i, j)]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn trig_blocks_in_fd_spectrum() {
        let t = TrigParams::new(2, 0.2).unwrap();
        let grid = GridSpec::new(t.period(), 512).unwrap();
        let reference = fd_2channel_extrapolated(&|x| t.potential(x), &grid, 24).unwrap();
        let alg = trig_spectrum(&t, 3).unwrap();
        let want: Vec<f64> = alg.into_iter().filter(|&e| e < reference[reference.len() - 1] - 0.1).collect();
        for v in match_values(&want, &reference, 1e-3) {
            assert!(v.pass, "{v:?}");
        }
    }
}
