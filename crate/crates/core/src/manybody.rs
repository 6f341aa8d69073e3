//! The N-body Weierstrass Hamiltonian
//!
//! ```text
//! H_N = −Δ_N + a(a−1) Σ_{j≠k} [℘(x_j+x_k) + ℘(x_j−x_k)]
//!            + 4b(b−1) Σ_k ℘(2x_k) + c Σ_k ℘(x_k+iβ)
//! ```
//!
//! on the ordered domain `0 < x_1 < … < x_N < α`. With `z_k = ℘(x_k+iβ)` and
//! the gauge `μ·μ̃`, the symmetric space `V_m̃` in the elementary symmetric
//! variables of `z` is invariant when `c` is the quantized coupling `c_m` and
//! `m̃ = m + (b − ½)·n_f` is a non-negative integer.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebraise::{
    solve_sector, AlgebraisationProblem, Basis, GaugeSpec, HamiltonianSpec, SamplingDomain, SectorResult,
    VariableMap,
};
use crate::elliptic::{wp_real, wp_shifted, WeierstrassRoots};
use crate::error::{QesError, Result};
use crate::jets::{wp_shifted_jet, wp_shifted_prime_jet, Jet2};
use crate::lame::{self, GaugeId, LameParams};
use crate::polybasis::{binomial, tau_eval, SymBasis};

pub const MAX_BODIES: usize = 3;
pub const MAX_SPACE_DEGREE: usize = 4;
/// Distance from an integer below which `m̃` counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-9;
/// Fraction of `α` kept clear of the domain walls and of coincident coordinates.
pub const DOMAIN_MARGIN: f64 = 0.02;

/// `c_m = [2m + 2a(N−1) + 4b]·[2m + 1 + 2a(N−1) + 2b]`.
pub fn coupling_cm(bodies: usize, a: f64, b: f64, m: f64) -> f64 {
    let t = 2.0 * a * (bodies as f64 - 1.0);
    (2.0 * m + t + 4.0 * b) * (2.0 * m + 1.0 + t + 2.0 * b)
}

/// Real solutions `m` of `coupling_cm(N, a, b, m) = c`, largest first.
pub fn invert_cm(bodies: usize, a: f64, b: f64, c: f64) -> Vec<f64> {
    let t = 2.0 * a * (bodies as f64 - 1.0);
    let p = t + 4.0 * b;
    let q = 1.0 + t + 2.0 * b;
    // (u + p)(u + q) = c with u = 2m
    let disc = (p - q) * (p - q) + 4.0 * c;
    if disc < 0.0 {
        return vec![];
    }
    let sum = p + q;
    let prod = p * q - c;
    if disc == 0.0 {
        return vec![-sum / 4.0];
    }
    let r = disc.sqrt();
    // stable pair: one root from the formula, the other from Vieta
    let big = if sum >= 0.0 { -(sum + r) / 2.0 } else { (-sum + r) / 2.0 };
    let other = if big != 0.0 { prod / big } else { -sum - big };
    let (hi, lo) = if big > other { (big, other) } else { (other, big) };
    vec![hi / 2.0, lo / 2.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManyBodyParams {
    pub bodies: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(skip)]
    pub roots: WeierstrassRoots,
}

impl ManyBodyParams {
    pub fn new(bodies: usize, a: f64, b: f64, c: f64, roots: WeierstrassRoots) -> Result<Self> {
        if bodies == 0 || bodies > MAX_BODIES {
            return Err(QesError::Parameter(format!("body count must be in 1..={MAX_BODIES}, got {bodies}")));
        }
        if !(a >= 0.0 && a.is_finite()) {
            return Err(QesError::Parameter(format!("a must be ≥ 0, got {a}")));
        }
        if !(0.0..0.5).contains(&b) {
            return Err(QesError::Parameter(format!("b must satisfy 0 ≤ b < 1/2, got {b}")));
        }
        if !c.is_finite() {
            return Err(QesError::Parameter("c must be finite".into()));
        }
        Ok(ManyBodyParams { bodies, a, b, c, roots })
    }

    /// Parameters with `c = c_m`.
    pub fn on_locus(bodies: usize, a: f64, b: f64, m: f64, roots: WeierstrassRoots) -> Result<Self> {
        ManyBodyParams::new(bodies, a, b, coupling_cm(bodies, a, b, m), roots)
    }

    pub fn with_c(self, c: f64) -> Self {
        ManyBodyParams { c, ..self }
    }

    pub fn potential(&self, x: &[f64]) -> Result<f64> {
        let r = &self.roots;
        let mut v = 0.0;
        let pair = self.a * (self.a - 1.0);
        if pair != 0.0 {
            for j in 0..x.len() {
                for k in j + 1..x.len() {
                    // ordered-pair sum: each unordered pair twice
                    v += 2.0 * pair * (wp_real(x[j] + x[k], r)? + wp_real(x[j] - x[k], r)?);
                }
            }
        }
        let wall = 4.0 * self.b * (self.b - 1.0);
        for &xk in x {
            if wall != 0.0 {
                v += wall * wp_real(2.0 * xk, r)?;
            }
            v += self.c * wp_shifted(xk, r);
        }
        Ok(v)
    }
}

/// One choice of root factors `(z − e_i)^{½−b}` together with the space degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorSpec {
    pub n_f: usize,
    /// `roots[i]` marks `ν_{i+1} = ½ − b`.
    pub roots: [bool; 3],
    pub m: f64,
    pub m_tilde: usize,
}

impl SectorSpec {
    pub fn root_label(&self) -> String {
        let names: Vec<String> = (0..3).filter(|&i| self.roots[i]).map(|i| format!("e{}", i + 1)).collect();
        format!("{{{}}}", names.join(","))
    }
}

impl fmt::Display for SectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n_f={} {} m̃={}", self.n_f, self.root_label(), self.m_tilde)
    }
}

const ROOT_SUBSETS: [[bool; 3]; 8] = [
    [false, false, false],
    [true, false, false],
    [false, true, false],
    [false, false, true],
    [true, true, false],
    [true, false, true],
    [false, true, true],
    [true, true, true],
];

/// Every root-factor choice for which some solution `m` of `c_m = c` gives an
/// integral `m̃ ≥ 0`. An empty list means no algebraic sector.
pub fn enumerate_sectors(p: &ManyBodyParams) -> Vec<SectorSpec> {
    let mut out: Vec<SectorSpec> = Vec::new();
    for m in invert_cm(p.bodies, p.a, p.b, p.c) {
        for roots in ROOT_SUBSETS {
            let n_f = roots.iter().filter(|&&r| r).count();
            let mt = m + (p.b - 0.5) * n_f as f64;
            let nearest = mt.round();
            if (mt - nearest).abs() <= INTEGRALITY_TOL && nearest >= 0.0 {
                let spec = SectorSpec {
                    n_f,
                    roots,
                    m,
                    m_tilde: nearest as usize,
                };
                if !out.iter().any(|s| s.roots == spec.roots && s.m_tilde == spec.m_tilde) {
                    out.push(spec);
                }
            }
        }
    }
    out
}

pub fn manybody_problem(p: &ManyBodyParams, s: &SectorSpec) -> Result<AlgebraisationProblem> {
    if s.m_tilde > MAX_SPACE_DEGREE {
        return Err(QesError::Parameter(format!(
            "space degree {} exceeds the cap {MAX_SPACE_DEGREE}",
            s.m_tilde
        )));
    }
    let params = *p;
    let roots = p.roots;
    let nu = 0.5 - p.b;
    let spec = *s;
    let (a, b) = (p.a, p.b);
    let e = roots.roots();

    let gauge = move |x: &[Jet2]| -> Result<Jet2> {
        let z: Vec<Jet2> = x.iter().map(|&xk| wp_shifted_jet(xk, &roots)).collect();
        let mut g = Jet2::constant(1.0);
        if a != 0.0 {
            for j in 0..z.len() {
                for k in j + 1..z.len() {
                    g *= (z[j] - z[k]).abs().powf(a)?;
                }
            }
        }
        for (k, &zk) in z.iter().enumerate() {
            if b != 0.0 {
                g *= wp_shifted_prime_jet(x[k], &roots).abs().powf(b)?;
            }
            if nu != 0.0 {
                for (&on, &ei) in spec.roots.iter().zip(e.iter()) {
                    if on {
                        g *= (zk - ei).abs().powf(nu)?;
                    }
                }
            }
        }
        Ok(g)
    };

    Ok(AlgebraisationProblem {
        label: format!("manybody N={} a={} b={} c={} {spec}", p.bodies, p.a, p.b, p.c),
        hamiltonian: HamiltonianSpec::scalar(p.bodies, move |x| params.potential(x)),
        gauge: GaugeSpec::scalar(format!("μ·μ̃ {}", spec.root_label()), gauge, vec![]),
        variables: VariableMap::new("τ(℘(x+iβ))", move |x: &[Jet2]| {
            let z: Vec<Jet2> = x.iter().map(|&xk| wp_shifted_jet(xk, &roots)).collect();
            Ok(tau_eval(&z))
        }),
        basis: Basis::Sym(SymBasis::new(p.bodies, s.m_tilde)?),
        domain: SamplingDomain::Ordered {
            bodies: p.bodies,
            lo: 0.0,
            hi: roots.alpha,
            margin: DOMAIN_MARGIN * roots.alpha,
        },
    })
}

pub fn sector_spectrum(p: &ManyBodyParams, s: &SectorSpec, seed: u64, tol: f64) -> Result<SectorResult> {
    solve_sector(&manybody_problem(p, s)?, seed, tol)
}

/// All coexisting sectors, certified concurrently.
pub fn all_sectors(p: &ManyBodyParams, seed: u64, tol: f64) -> Result<Vec<(SectorSpec, SectorResult)>> {
    enumerate_sectors(p)
        .par_iter()
        .map(|s| Ok((*s, sector_spectrum(p, s, seed, tol)?)))
        .collect()
}

/// Total algebraic states at `b = 0` over the coexisting sectors.
pub fn table1_count_b0(bodies: usize, m: usize) -> u128 {
    let n = bodies;
    binomial(n + m, n) + 3 * if m >= 1 { binomial(n - 1 + m, n) } else { 0 }
}

/// States of `N` decoupled Lamé operators, `(4m+1)^N`.
pub fn table1_count_decoupled(bodies: usize, m: usize) -> u128 {
    ((4 * m + 1) as u128).pow(bodies as u32)
}

/// Lamé gauge matching a root-factor choice once `a = b = 0`: the factors
/// `|z − e_i|^{1/2}` reduce to `|sn|`, `|cn|` or `dn` of `s·x`.
pub fn lame_gauge_for(roots: [bool; 3]) -> Option<GaugeId> {
    match roots {
        [false, false, false] => Some(GaugeId::F1),
        [false, true, true] => Some(GaugeId::F2),
        [true, false, true] => Some(GaugeId::F3),
        [true, true, false] => Some(GaugeId::F4),
        _ => None,
    }
}

/// Decoupled oracle for `a = b = 0`, `c = c_m`: every multiset sum of `N`
/// single-particle energies `s²·E_Lamé + c·e3` from the matching Lamé sector.
pub fn decoupled_oracle(p: &ManyBodyParams, s: &SectorSpec, seed: u64, tol: f64) -> Result<Vec<f64>> {
    if p.a != 0.0 || p.b != 0.0 {
        return Err(QesError::Parameter("decoupled oracle needs a = b = 0".into()));
    }
    let gauge = lame_gauge_for(s.roots)
        .ok_or_else(|| QesError::Parameter(format!("no single-particle sector for {}", s.root_label())))?;
    let m = s.m.round();
    if (s.m - m).abs() > INTEGRALITY_TOL || m < 0.0 {
        return Err(QesError::Parameter(format!("decoupled oracle needs integral m ≥ 0, got {}", s.m)));
    }
    let m = m as usize;
    let r = &p.roots;
    let single: Vec<f64> = if m == 0 {
        vec![p.c * r.e3]
    } else {
        let lp = LameParams::new(m, r.modulus.k())?;
        let sec = solve_sector(&lame::lame_problem(&lp, gauge)?, seed, tol)?;
        sec.eigenvalues
            .iter()
            .map(|e| r.scale * r.scale * e + p.c * r.e3)
            .collect()
    };
    let mut sums = Vec::new();
    multiset_sums(&single, p.bodies, 0, 0.0, &mut sums);
    sums.sort_by(f64::total_cmp);
    Ok(sums)
}

fn multiset_sums(vals: &[f64], left: usize, start: usize, acc: f64, out: &mut Vec<f64>) {
    if left == 0 {
        out.push(acc);
        return;
    }
    for i in start..vals.len() {
        multiset_sums(vals, left - 1, i, acc + vals[i], out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebraise::{build_matrix, gauged_action, INVARIANCE_TOL};
    use crate::elliptic::jacobi;

    fn roots() -> WeierstrassRoots {
        WeierstrassRoots::new(0.2, -1.0).unwrap()
    }

    #[test]
    fn coupling_values() {
        assert_eq!(coupling_cm(2, 0.0, 0.0, 1.0), 6.0);
        assert_eq!(coupling_cm(3, 1.0, 0.25, 2.0), 85.5);
        for n in 1..=4 {
            assert_eq!(coupling_cm(n, 0.0, 0.0, 0.0), 0.0);
        }
    }

    #[test]
    fn inversion_roundtrip() {
        assert_eq!(invert_cm(2, 0.0, 0.0, 6.0), vec![1.0, -1.5]);
        assert_eq!(invert_cm(2, 0.0, 0.0, 0.0), vec![0.0, -0.5]);
        assert!(invert_cm(2, 0.0, 0.0, -1.0).is_empty());
        for (n, a, b, m) in [(2, 2.0, 0.0, 1.0), (3, 0.7, 0.3, 2.5), (1, 0.0, 1.0 / 6.0, 3.0)] {
            let roots = invert_cm(n, a, b, coupling_cm(n, a, b, m));
            assert!(roots.iter().any(|r| (r - m).abs() < 1e-12));
            for r in roots {
                assert!((coupling_cm(n, a, b, r) - coupling_cm(n, a, b, m)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sectors_at_b0() {
        let p = ManyBodyParams::on_locus(2, 2.0, 0.0, 1.0, roots()).unwrap();
        assert_eq!(invert_cm(2, 2.0, 0.0, p.c), vec![1.0, -5.5]);
        let s = enumerate_sectors(&p);
        assert_eq!(s.len(), 4);
        assert_eq!((s[0].n_f, s[0].m_tilde), (0, 1));
        assert!(s[1..].iter().all(|x| x.n_f == 2 && x.m_tilde == 0));
    }

    #[test]
    fn sectors_at_b_sixth() {
        let p = ManyBodyParams::on_locus(2, 1.0, 1.0 / 6.0, 1.0, roots()).unwrap();
        let s = enumerate_sectors(&p);
        assert_eq!(s.len(), 2, "{s:?}");
        assert_eq!((s[0].n_f, s[0].m_tilde), (0, 1));
        assert_eq!((s[1].n_f, s[1].m_tilde), (3, 0));
    }

    #[test]
    fn generic_b_off_locus_is_empty() {
        let p = ManyBodyParams::new(2, 1.0, 0.23, 10.0, roots()).unwrap();
        assert!(enumerate_sectors(&p).is_empty());
    }

    #[test]
    fn parameter_validation() {
        assert!(ManyBodyParams::new(0, 0.0, 0.0, 1.0, roots()).is_err());
        assert!(ManyBodyParams::new(4, 0.0, 0.0, 1.0, roots()).is_err());
        assert!(ManyBodyParams::new(2, -1.0, 0.0, 1.0, roots()).is_err());
        assert!(ManyBodyParams::new(2, 0.0, 0.5, 1.0, roots()).is_err());
    }

    #[test]
    fn trivial_gauge_when_a_b_vanish() {
        let p = ManyBodyParams::on_locus(2, 0.0, 0.0, 1.0, roots()).unwrap();
        let s = enumerate_sectors(&p)[0];
        let prob = manybody_problem(&p, &s).unwrap();
        assert_eq!(prob.gauge.value(&[0.3, 0.8]).unwrap(), 1.0);
    }

    #[test]
    fn root_factors_reduce_to_sn_cn() {
        let r = roots();
        let p = ManyBodyParams::on_locus(2, 0.0, 0.0, 1.0, r).unwrap();
        let s = enumerate_sectors(&p).into_iter().find(|s| s.roots == [false, true, true]).unwrap();
        let prob = manybody_problem(&p, &s).unwrap();
        let ratio = |x: [f64; 2]| {
            let t: f64 = x
                .iter()
                .map(|&xk| {
                    let j = jacobi(r.scale * xk, r.modulus);
                    (j.sn * j.cn).abs()
                })
                .product();
            prob.gauge.value(&x).unwrap() / t
        };
        let r0 = ratio([0.2, 0.5]);
        for x in [[0.1, 0.9], [0.4, 0.45], [0.7, 1.1]] {
            assert!((ratio(x) / r0 - 1.0).abs() < 1e-12);
        }
        // (z − e2)(z − e3) = −(e2 − e3)² sn² cn² for one body
        assert!((r0 - (r.e2 - r.e3).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn pair_gauge_symmetry_and_vanishing_order() {
        let p = ManyBodyParams::on_locus(2, 2.0, 0.0, 1.0, roots()).unwrap();
        let s = enumerate_sectors(&p)[0];
        let prob = manybody_problem(&p, &s).unwrap();
        let g = |x: [f64; 2]| prob.gauge.value(&x).unwrap();
        assert_eq!(g([0.3, 0.7]), g([0.7, 0.3]));
        let x0 = 0.5;
        let q = |eps: f64| g([x0, x0 + eps]) / eps.powi(2);
        assert!((q(1e-4) / q(2e-4) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn certified_table1_row3_count() {
        for m in 1..=2usize {
            let p = ManyBodyParams::on_locus(2, 2.0, 0.0, m as f64, roots()).unwrap();
            let secs = all_sectors(&p, 42, INVARIANCE_TOL).unwrap();
            let total: usize = secs.iter().map(|(_, r)| r.dim).sum();
            assert_eq!(total as u128, table1_count_b0(2, m));
            for (_, r) in &secs {
                assert!(r.residual <= 1e-8, "{}: {}", r.label, r.residual);
            }
        }
    }

    #[test]
    fn decoupled_spectrum_matches_lame_sums() {
        for (n, m) in [(2, 1usize), (2, 2), (3, 1)] {
            let p = ManyBodyParams::on_locus(n, 0.0, 0.0, m as f64, roots()).unwrap();
            let sectors = enumerate_sectors(&p);
            assert_eq!(sectors.len(), 4);
            assert_eq!(sectors[0].n_f, 0);
            for s in &sectors {
                let got = sector_spectrum(&p, s, 42, INVARIANCE_TOL).unwrap();
                let want = decoupled_oracle(&p, s, 42, INVARIANCE_TOL).unwrap();
                assert_eq!(got.eigenvalues.len(), want.len());
                for (a, b) in got.eigenvalues.iter().zip(&want) {
                    assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "N={n} m={m} {s}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn off_locus_coupling_is_not_invariant() {
        let p = ManyBodyParams::on_locus(2, 2.0, 0.0, 1.0, roots()).unwrap();
        let s = enumerate_sectors(&p)[0];
        let op = build_matrix(&manybody_problem(&p.with_c(p.c + 1.0), &s).unwrap(), 42).unwrap();
        assert!(op.residual >= 1e-3, "{}", op.residual);
    }

    #[test]
    fn gauged_action_is_permutation_symmetric() {
        let p = ManyBodyParams::on_locus(3, 1.5, 0.2, 1.3, roots()).unwrap();
        let s = SectorSpec { n_f: 0, roots: [false; 3], m: 1.3, m_tilde: 1 };
        let prob = manybody_problem(&p, &s).unwrap();
        let x = [0.21, 0.52, 0.93];
        let base = gauged_action(&prob, &x).unwrap();
        for perm in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            let y: Vec<f64> = perm.iter().map(|&i| x[i]).collect();
            let other = gauged_action(&prob, &y).unwrap();
            for (u, v) in base.iter().flatten().zip(other.iter().flatten()) {
                assert!((u - v).abs() <= 1e-10 * (1.0 + u.abs()), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn counts_and_degenerate_limit() {
        assert_eq!(table1_count_b0(2, 1), 6);
        assert_eq!(table1_count_b0(2, 2), 6 + 3 * 3);
        assert_eq!(table1_count_decoupled(2, 1), 25);
        // e2 → e3: the shifted term flattens to the constant e3
        let r = WeierstrassRoots::new(-0.5 + 1e-11, -0.5 - 1e-11).unwrap();
        for x in [0.1, 0.7, 2.3] {
            assert!((wp_shifted(x, &r) - r.e3).abs() <= 1e-10);
        }
    }
}
