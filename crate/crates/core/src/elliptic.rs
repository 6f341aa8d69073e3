//! Complete elliptic integrals, Jacobi elliptic functions and the Weierstrass
//! function on the real axis and on the line shifted by the imaginary
//! half-period.
//!
//! Everything is real arithmetic. The Jacobi functions come from the
//! arithmetic-geometric mean followed by a descending Landen recursion for the
//! amplitude; ℘ is never summed over a lattice but read off the identities
//!
//! ```text
//! ℘(x)      = e3 + (e1 − e3) / sn²(s·x, k)
//! ℘(x + iβ) = e3 + (e2 − e3) · sn²(s·x, k)
//! ```
//!
//! with `s = √(e1 − e3)` and `k² = (e2 − e3)/(e1 − e3)`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{QesError, Result};

/// AGM / Landen iteration stops once the complementary sequence drops below this.
const AGM_TOL: f64 = 1e-15;
const AGM_MAX_STEPS: usize = 64;

/// Elliptic modulus `k`, with `0 ≤ k ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Modulus(f64);

impl Modulus {
    pub fn new(k: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&k) {
            return Err(QesError::Domain(format!("modulus k = {k} outside [0, 1]")));
        }
        Ok(Modulus(k))
    }

    #[inline]
    pub fn k(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn k2(self) -> f64 {
        self.0 * self.0
    }

    /// Complementary modulus `k' = √(1 − k²)`.
    pub fn complementary(self) -> f64 {
        ((1.0 - self.0) * (1.0 + self.0)).sqrt()
    }
}

/// Complete elliptic integral of the first kind, `K(k) = π / (2·agm(1, k'))`.
pub fn complete_k(k: Modulus) -> Result<f64> {
    if k.k() >= 1.0 {
        return Err(QesError::Divergence);
    }
    let mut a = 1.0;
    let mut b = k.complementary();
    for _ in 0..AGM_MAX_STEPS {
        if (a - b).abs() <= AGM_TOL * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    Ok(FRAC_PI_2 / a)
}

/// The triple `(sn, cn, dn)` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

/// Jacobi elliptic functions `sn, cn, dn` of real argument.
pub fn jacobi(x: f64, k: Modulus) -> JacobiTriple {
    let kk = k.k();
    if kk == 0.0 {
        let (s, c) = x.sin_cos();
        return JacobiTriple { sn: s, cn: c, dn: 1.0 };
    }
    if kk == 1.0 {
        let sech = 1.0 / x.cosh();
        return JacobiTriple {
            sn: x.tanh(),
            cn: sech,
            dn: sech,
        };
    }

    // Reduce into one real period so 2^N·a_N·x stays moderate.
    let quarter = complete_k(k).expect("k < 1 checked above");
    let period = 4.0 * quarter;
    let xr = x - period * (x / period).round();

    let mut a = [0.0f64; AGM_MAX_STEPS + 1];
    let mut c = [0.0f64; AGM_MAX_STEPS + 1];
    a[0] = 1.0;
    c[0] = kk;
    let mut b = k.complementary();
    let mut n = 0;
    while c[n].abs() > AGM_TOL && n < AGM_MAX_STEPS {
        a[n + 1] = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        n += 1;
    }

    let mut phi = (1u64 << n) as f64 * a[n] * xr;
    for j in (1..=n).rev() {
        let ratio = (c[j] / a[j] * phi.sin()).clamp(-1.0, 1.0);
        phi = 0.5 * (phi + ratio.asin());
    }
    let (sn, cn) = phi.sin_cos();
    // dn > 0 on the real axis for k < 1, and 1 − k²sn² ≥ 1 − k² > 0.
    let dn = (1.0 - k.k2() * sn * sn).sqrt();
    JacobiTriple { sn, cn, dn }
}

/// Real roots `e1 > e2 > e3` of `4t³ − g2·t − g3`, with the derived invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeierstrassRoots {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub g2: f64,
    pub g3: f64,
    pub modulus: Modulus,
    /// `s = √(e1 − e3)`.
    pub scale: f64,
    /// Real half-period `α = K(k)/s`.
    pub alpha: f64,
}

impl WeierstrassRoots {
    /// Builds the root triple from `(e2, e3)`; `e1 = −(e2 + e3)`.
    ///
    /// Inputs that violate `e1 > e2 > e3` are rejected, never reordered.
    pub fn new(e2: f64, e3: f64) -> Result<Self> {
        if !(e2.is_finite() && e3.is_finite()) {
            return Err(QesError::Parameter("non-finite Weierstrass root".into()));
        }
        let e1 = -(e2 + e3);
        if !(e1 > e2 && e2 > e3) {
            return Err(QesError::Parameter(format!(
                "roots must satisfy e1 > e2 > e3, got e1 = {e1}, e2 = {e2}, e3 = {e3}"
            )));
        }
        let g2 = -4.0 * (e1 * e2 + e2 * e3 + e3 * e1);
        let g3 = 4.0 * e1 * e2 * e3;
        let k2 = (e2 - e3) / (e1 - e3);
        let modulus = Modulus::new(k2.sqrt())?;
        let scale = (e1 - e3).sqrt();
        let alpha = complete_k(modulus)? / scale;
        Ok(WeierstrassRoots {
            e1,
            e2,
            e3,
            g2,
            g3,
            modulus,
            scale,
            alpha,
        })
    }

    pub fn roots(&self) -> [f64; 3] {
        [self.e1, self.e2, self.e3]
    }
}

/// `℘(x + iβ)`: bounded, real and smooth on the whole real axis, ranging over `[e3, e2]`.
pub fn wp_shifted(x: f64, r: &WeierstrassRoots) -> f64 {
    let sn = jacobi(r.scale * x, r.modulus).sn;
    r.e3 + (r.e2 - r.e3) * sn * sn
}

/// `℘(x)` on the real axis; double poles on the lattice `2αℤ`.
pub fn wp_real(x: f64, r: &WeierstrassRoots) -> Result<f64> {
    let sn = jacobi(r.scale * x, r.modulus).sn;
    let period = 2.0 * r.alpha;
    let offset = x - period * (x / period).round();
    if sn == 0.0 || offset.abs() <= 4.0 * f64::EPSILON * period {
        return Err(QesError::Pole(x));
    }
    Ok(r.e3 + (r.e1 - r.e3) / (sn * sn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn m(k: f64) -> Modulus {
        Modulus::new(k).unwrap()
    }

    #[test]
    fn k_circular_limit() {
        assert!((complete_k(m(0.0)).unwrap() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn k_regression_value() {
        // Frozen from the AGM run; agrees with an independent 30-digit evaluation.
        let k = complete_k(m(0.5)).unwrap();
        assert!((k - 1.685_750_354_812_596).abs() < 1e-14 * k);
    }

    #[test]
    fn k_grows_towards_one() {
        let near = complete_k(m(0.999_999)).unwrap();
        assert!((near - 7.947_479_773_542_437).abs() < 1e-10);
        let mut prev = 0.0;
        for i in 0..100 {
            let val = complete_k(m(i as f64 / 100.0)).unwrap();
            assert!(val > prev);
            prev = val;
        }
        assert!(near > prev);
    }

    #[test]
    fn k_domain_errors() {
        assert_eq!(complete_k(m(1.0)), Err(QesError::Divergence));
        assert!(Modulus::new(1.2).is_err());
        assert!(Modulus::new(-0.1).is_err());
    }

    #[test]
    fn jacobi_matches_reference_values() {
        let cases = [
            (0.7, 0.5, [0.634_293_276_335_112_4, 0.773_092_516_841_334_3, 0.948_376_512_730_580_6]),
            (2.3, 0.9, [0.999_964_054_622_227_4, -0.008_478_765_445_220_732, 0.435_956_684_161_872_6]),
            (-1.1, 0.3, [-0.884_002_981_059_476_2, 0.467_481_261_098_195_7, 0.964_193_178_597_015_6]),
            (10.0, 0.99, [-0.999_951_444_199_154_6, -0.009_854_402_266_241_818, 0.141_404_302_516_114_6]),
        ];
        for (x, k, want) in cases {
            let t = jacobi(x, m(k));
            for (got, want) in [t.sn, t.cn, t.dn].into_iter().zip(want) {
                assert!((got - want).abs() < 1e-12, "x={x} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn jacobi_origin_and_limits() {
        for k in [0.0, 0.3, 0.9, 1.0] {
            let t = jacobi(0.0, m(k));
            assert_eq!((t.sn, t.cn, t.dn), (0.0, 1.0, 1.0));
        }
        for x in [-2.0, 0.4, 3.0] {
            let c = jacobi(x, m(0.0));
            assert!((c.sn - f64::sin(x)).abs() < 1e-15 && (c.cn - f64::cos(x)).abs() < 1e-15);
            let h = jacobi(x, m(1.0));
            assert!((h.sn - f64::tanh(x)).abs() < 1e-15);
            assert!((h.cn - 1.0 / f64::cosh(x)).abs() < 1e-15);
            assert!((h.dn - h.cn).abs() < 1e-15);
        }
    }

    #[test]
    fn sn_has_period_four_k() {
        for k in [0.2, 0.6, 0.95] {
            let quarter = complete_k(m(k)).unwrap();
            for x in [0.1, 1.3, -2.7] {
                let a = jacobi(x, m(k));
                let b = jacobi(x + 4.0 * quarter, m(k));
                assert!((a.sn - b.sn).abs() < 1e-12 && (a.cn - b.cn).abs() < 1e-12);
                let half = jacobi(x + 2.0 * quarter, m(k));
                assert!((a.sn + half.sn).abs() < 1e-12);
            }
            let top = jacobi(quarter, m(k));
            assert!((top.sn - 1.0).abs() < 1e-14 && top.cn.abs() < 1e-7);
        }
    }

    #[test]
    fn roots_invariants() {
        let r = WeierstrassRoots::new(0.2, -1.0).unwrap();
        assert!((r.e1 - 0.8).abs() < 1e-15);
        assert!((r.e1 + r.e2 + r.e3).abs() < 1e-12);
        assert!((r.modulus.k2() - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.g2 + 4.0 * (r.e1 * r.e2 + r.e2 * r.e3 + r.e3 * r.e1)).abs() < 1e-15);
        assert!((r.g3 + 4.0 * 0.8 * 0.2).abs() < 1e-15);
        // 4t³ − g2 t − g3 vanishes at each root.
        for e in r.roots() {
            assert!((4.0 * e * e * e - r.g2 * e - r.g3).abs() < 1e-14);
        }
        assert!(WeierstrassRoots::new(-1.0, 0.2).is_err());
        assert!(WeierstrassRoots::new(1.0, 0.5).is_err());
    }

    #[test]
    fn wp_shifted_special_points() {
        let r = WeierstrassRoots::new(0.2, -1.0).unwrap();
        assert_eq!(wp_shifted(0.0, &r), r.e3);
        assert!((wp_shifted(r.alpha, &r) - r.e2).abs() < 1e-14);
        for i in 0..50 {
            let x = -3.0 + 0.13 * i as f64;
            let v = wp_shifted(x, &r);
            assert!(v >= r.e3 - 1e-15 && v <= r.e2 + 1e-15);
            assert!((wp_shifted(x + 2.0 * r.alpha, &r) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn wp_real_laurent_and_symmetry() {
        let r = WeierstrassRoots::new(0.2, -1.0).unwrap();
        let eps = 1e-4;
        let v = wp_real(eps, &r).unwrap();
        assert!((v * eps * eps - 1.0).abs() < 1e-6);
        for x in [0.3, 0.9, 1.7] {
            assert_eq!(wp_real(-x, &r).unwrap(), wp_real(x, &r).unwrap());
        }
        // sn(K) = 1 puts ℘ at e1 on the half-period.
        assert!((wp_real(r.alpha, &r).unwrap() - r.e1).abs() < 1e-13);
        assert!(matches!(wp_real(0.0, &r), Err(QesError::Pole(_))));
        assert!(matches!(wp_real(2.0 * r.alpha, &r), Err(QesError::Pole(_))));
    }

    #[test]
    fn degenerate_roots_flatten_shifted_term() {
        // e2 → e3: the shifted function collapses onto the constant e3.
        let r = WeierstrassRoots::new(-0.5 + 1e-11, -0.5).unwrap();
        for x in [0.1, 0.5, PI] {
            assert!((wp_shifted(x, &r) - r.e3).abs() < 1e-10);
        }
    }
}
