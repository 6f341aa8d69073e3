//! Second-order forward jets.
//!
//! A [`Jet2`] carries `(f, f', f'')` with respect to one seeded coordinate. The
//! arithmetic is the truncated Taylor algebra, so any expression built from
//! these operations yields exact first and second derivatives up to rounding.
//! Multi-coordinate Laplacians are assembled by seeding one coordinate at a
//! time.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::elliptic::{jacobi, Modulus, WeierstrassRoots};
use crate::error::{QesError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    #[inline]
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet2 { v, d1, d2 }
    }

    /// The identity coordinate `(x, 1, 0)`.
    #[inline]
    pub const fn seed(x: f64) -> Self {
        Jet2::new(x, 1.0, 0.0)
    }

    #[inline]
    pub const fn constant(c: f64) -> Self {
        Jet2::new(c, 0.0, 0.0)
    }

    /// Composes a scalar function with this jet, given `f(v), f'(v), f''(v)`.
    #[inline]
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Jet2::new(f, df * self.d1, d2f * self.d1 * self.d1 + df * self.d2)
    }

    pub fn recip(self) -> Result<Self> {
        if self.v == 0.0 {
            return Err(QesError::ZeroDivision);
        }
        let inv = 1.0 / self.v;
        Ok(self.chain(inv, -inv * inv, 2.0 * inv * inv * inv))
    }

    pub fn checked_div(self, rhs: Jet2) -> Result<Self> {
        Ok(self * rhs.recip()?)
    }

    pub fn sqrt(self) -> Result<Self> {
        if self.v <= 0.0 {
            return Err(QesError::NonPositiveRoot(self.v));
        }
        let r = self.v.sqrt();
        Ok(self.chain(r, 0.5 / r, -0.25 / (r * self.v)))
    }

    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Jet2::constant(1.0),
            1 => self,
            _ => {
                let nf = n as f64;
                let p2 = self.v.powi(n - 2);
                let p1 = p2 * self.v;
                self.chain(p1 * self.v, nf * p1, nf * (nf - 1.0) * p2)
            }
        }
    }

    /// Real power of a jet with positive value.
    pub fn powf(self, p: f64) -> Result<Self> {
        if p == 0.0 {
            return Ok(Jet2::constant(1.0));
        }
        if self.v <= 0.0 {
            return Err(QesError::NonPositiveRoot(self.v));
        }
        let f = self.v.powf(p);
        Ok(self.chain(f, p * f / self.v, p * (p - 1.0) * f / (self.v * self.v)))
    }

    pub fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
}

impl From<f64> for Jet2 {
    fn from(c: f64) -> Self {
        Jet2::constant(c)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(self, r: Jet2) -> Jet2 {
        Jet2::new(self.v + r.v, self.d1 + r.d1, self.d2 + r.d2)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(self, r: Jet2) -> Jet2 {
        Jet2::new(self.v - r.v, self.d1 - r.d1, self.d2 - r.d2)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, r: Jet2) -> Jet2 {
        Jet2::new(
            self.v * r.v,
            self.d1 * r.v + self.v * r.d1,
            self.d2 * r.v + 2.0 * self.d1 * r.d1 + self.v * r.d2,
        )
    }
}

/// Unchecked quotient; a zero-valued divisor yields non-finite components
/// exactly as `f64` division does. Use [`Jet2::checked_div`] to surface it.
impl Div for Jet2 {
    type Output = Jet2;
    #[inline]
    fn div(self, r: Jet2) -> Jet2 {
        let inv = 1.0 / r.v;
        let q = self.v * inv;
        let d1 = (self.d1 - q * r.d1) * inv;
        let d2 = (self.d2 - 2.0 * d1 * r.d1 - q * r.d2) * inv;
        Jet2::new(q, d1, d2)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    #[inline]
    fn neg(self) -> Jet2 {
        Jet2::new(-self.v, -self.d1, -self.d2)
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(self, c: f64) -> Jet2 {
        Jet2::new(self.v + c, self.d1, self.d2)
    }
}

impl Sub<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(self, c: f64) -> Jet2 {
        Jet2::new(self.v - c, self.d1, self.d2)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, c: f64) -> Jet2 {
        Jet2::new(self.v * c, self.d1 * c, self.d2 * c)
    }
}

impl Mul<Jet2> for f64 {
    type Output = Jet2;
    #[inline]
    fn mul(self, j: Jet2) -> Jet2 {
        j * self
    }
}

impl AddAssign for Jet2 {
    fn add_assign(&mut self, r: Jet2) {
        *self = *self + r;
    }
}

impl SubAssign for Jet2 {
    fn sub_assign(&mut self, r: Jet2) {
        *self = *self - r;
    }
}

impl MulAssign for Jet2 {
    fn mul_assign(&mut self, r: Jet2) {
        *self = *self * r;
    }
}

/// Jets of `sn, cn, dn` through `sn' = cn·dn`, `cn' = −sn·dn`, `dn' = −k²·sn·cn`.
pub fn jacobi_jet(x: Jet2, k: Modulus) -> (Jet2, Jet2, Jet2) {
    let t = jacobi(x.v, k);
    let k2 = k.k2();
    let (s, c, d) = (t.sn, t.cn, t.dn);
    let sn = x.chain(s, c * d, -s * (d * d + k2 * c * c));
    let cn = x.chain(c, -s * d, -c * (d * d - k2 * s * s));
    let dn = x.chain(d, -k2 * s * c, -k2 * d * (c * c - s * s));
    (sn, cn, dn)
}

/// Jet of `℘(x + iβ) = e3 + (e2 − e3)·sn²(s·x)`.
pub fn wp_shifted_jet(x: Jet2, r: &WeierstrassRoots) -> Jet2 {
    let (sn, _, _) = jacobi_jet(x * r.scale, r.modulus);
    sn * sn * (r.e2 - r.e3) + r.e3
}

/// Jet of `℘'(x + iβ) = 2s(e2 − e3)·sn·cn·dn(s·x)`.
pub fn wp_shifted_prime_jet(x: Jet2, r: &WeierstrassRoots) -> Jet2 {
    let (sn, cn, dn) = jacobi_jet(x * r.scale, r.modulus);
    sn * cn * dn * (2.0 * r.scale * (r.e2 - r.e3))
}

/// Jet of `℘(x) = e3 + (e1 − e3)/sn²(s·x)`.
pub fn wp_real_jet(x: Jet2, r: &WeierstrassRoots) -> Result<Jet2> {
    // Validates the pole lattice with the scalar routine.
    crate::elliptic::wp_real(x.v, r)?;
    let (sn, _, _) = jacobi_jet(x * r.scale, r.modulus);
    Ok((sn * sn).recip()? * (r.e1 - r.e3) + r.e3)
}
