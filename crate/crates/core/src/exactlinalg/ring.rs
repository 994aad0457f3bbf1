//! Coefficient rings.
//!
//! Elimination code is generic over [`EuclideanRing`], which is implemented
//! by the integers and by prime fields. Rational and `Z/p^M` coefficients are
//! obtained from integral computations (see [`RingSpec`]).

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Euclidean domain given by a context object.
///
/// The context carries whatever parameters the ring needs (the prime of a
/// prime field), so elements can be plain values.
pub trait EuclideanRing: Clone + fmt::Debug + Send + Sync {
    type Elem: Clone + PartialEq + fmt::Debug + Send + Sync;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn from_int(&self, n: &BigInt) -> Self::Elem;
    /// Canonical integer representative.
    fn to_int(&self, a: &Self::Elem) -> BigInt;

    /// `a = q b + r` with `r` strictly smaller than `b`. `b` must be nonzero.
    fn div_rem(&self, a: &Self::Elem, b: &Self::Elem) -> (Self::Elem, Self::Elem);

    /// Compares Euclidean sizes.
    fn size_cmp(&self, a: &Self::Elem, b: &Self::Elem) -> Ordering;

    /// A unit `u` such that `u * a` is the canonical associate of `a`.
    fn normalizing_unit(&self, a: &Self::Elem) -> Self::Elem;

    /// Inverse of a unit.
    fn unit_inverse(&self, u: &Self::Elem) -> Self::Elem;

    fn from_i64(&self, n: i64) -> Self::Elem {
        self.from_int(&BigInt::from(n))
    }

    fn is_one(&self, a: &Self::Elem) -> bool {
        *a == self.one()
    }

    /// `acc += a * b`
    fn add_mul_assign(&self, acc: &mut Self::Elem, a: &Self::Elem, b: &Self::Elem) {
        let t = self.mul(a, b);
        *acc = self.add(acc, &t);
    }

    /// `acc -= a * b`
    fn sub_mul_assign(&self, acc: &mut Self::Elem, a: &Self::Elem, b: &Self::Elem) {
        let t = self.mul(a, b);
        *acc = self.sub(acc, &t);
    }

    fn divides(&self, a: &Self::Elem, b: &Self::Elem) -> bool {
        if self.is_zero(b) {
            return true;
        }
        if self.is_zero(a) {
            return false;
        }
        self.is_zero(&self.div_rem(b, a).1)
    }
}

/// The ring of integers with arbitrary precision elements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Integers;

impl EuclideanRing for Integers {
    type Elem = BigInt;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn one(&self) -> BigInt {
        BigInt::one()
    }
    fn is_zero(&self, a: &BigInt) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a - b
    }
    fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a * b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
    fn from_int(&self, n: &BigInt) -> BigInt {
        n.clone()
    }
    fn to_int(&self, a: &BigInt) -> BigInt {
        a.clone()
    }

    // Remainder in (-|b|/2, |b|/2], which keeps entries small during elimination.
    fn div_rem(&self, a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
        let (mut q, mut r) = a.div_mod_floor(b);
        let twice = &r * 2;
        if b.is_positive() {
            if twice > *b {
                r -= b;
                q += 1;
            }
        } else if twice < *b {
            r -= b;
            q += 1;
        }
        (q, r)
    }

    fn size_cmp(&self, a: &BigInt, b: &BigInt) -> Ordering {
        a.magnitude().cmp(b.magnitude())
    }

    fn normalizing_unit(&self, a: &BigInt) -> BigInt {
        if a.is_negative() {
            -BigInt::one()
        } else {
            BigInt::one()
        }
    }

    fn unit_inverse(&self, u: &BigInt) -> BigInt {
        u.clone()
    }

    fn add_mul_assign(&self, acc: &mut BigInt, a: &BigInt, b: &BigInt) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *acc += a * b;
    }

    fn sub_mul_assign(&self, acc: &mut BigInt, a: &BigInt, b: &BigInt) {
        if a.is_zero() || b.is_zero() {
            return;
        }
        *acc -= a * b;
    }
}

/// The prime field `F_p`, with `p < 2^31`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrimeField {
    p: u64,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if !is_prime(p) || p >= (1 << 31) {
            return Err(Error::InvalidInput(format!("{p} is not a supported prime")));
        }
        Ok(Self { p })
    }

    pub fn characteristic(&self) -> u64 {
        self.p
    }

    pub fn pow(&self, a: u64, mut e: u64) -> u64 {
        let mut base = a % self.p;
        let mut acc = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % self.p;
            }
            base = base * base % self.p;
            e >>= 1;
        }
        acc
    }
}

impl EuclideanRing for PrimeField {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        (a + b) % self.p
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.p - b) % self.p
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        a * b % self.p
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.p - a) % self.p
    }
    fn from_int(&self, n: &BigInt) -> u64 {
        n.mod_floor(&BigInt::from(self.p)).to_u64().unwrap_or(0)
    }
    fn to_int(&self, a: &u64) -> BigInt {
        BigInt::from(*a)
    }
    fn from_i64(&self, n: i64) -> u64 {
        n.rem_euclid(self.p as i64) as u64
    }
    fn div_rem(&self, a: &u64, b: &u64) -> (u64, u64) {
        (self.mul(a, &self.unit_inverse(b)), 0)
    }
    fn size_cmp(&self, a: &u64, b: &u64) -> Ordering {
        (*a != 0).cmp(&(*b != 0))
    }
    fn normalizing_unit(&self, a: &u64) -> u64 {
        if *a == 0 {
            1
        } else {
            self.unit_inverse(a)
        }
    }
    fn unit_inverse(&self, u: &u64) -> u64 {
        self.pow(*u, self.p - 2)
    }
    fn add_mul_assign(&self, acc: &mut u64, a: &u64, b: &u64) {
        *acc = (*acc + a * b) % self.p;
    }
    fn sub_mul_assign(&self, acc: &mut u64, a: &u64, b: &u64) {
        *acc = (*acc + self.p - a * b % self.p) % self.p;
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime divisors of `n` by trial division, in increasing order.
pub fn prime_divisors(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::from(2);
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            out.push(d.clone());
            while (&n % &d).is_zero() {
                n /= &d;
            }
        }
        d += 1;
    }
    if n > BigInt::one() {
        out.push(n);
    }
    out
}

/// Exponent of `p` in `n` (`n` nonzero).
pub fn valuation(n: &BigInt, p: u64) -> u32 {
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    while !n.is_zero() && (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    v
}

/// Which coefficient ring a computation is carried out over.
///
/// `PrimePowerRing(p, M)` stands for the `p`-adic integers at precision `M`:
/// a module over it is `H ⊗ Z/p^M` for the integral module `H`. It is not
/// the same thing as homology with `Z/p^M` coefficients, which carries an
/// extra Tor term; `PrimeField(p)` on the other hand really means `F_p`
/// coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RingSpec {
    Integers,
    Rationals,
    PrimeField(u64),
    PrimePowerRing(u64, u32),
}

impl RingSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            RingSpec::Integers | RingSpec::Rationals => Ok(()),
            RingSpec::PrimeField(p) => PrimeField::new(p).map(|_| ()),
            RingSpec::PrimePowerRing(p, m) => {
                PrimeField::new(p)?;
                if m == 0 {
                    return Err(Error::InvalidInput("precision M must be >= 1".into()));
                }
                if (p as f64).powi(m as i32) >= 2f64.powi(31) {
                    return Err(Error::InvalidInput(format!("p^M = {p}^{m} is too large")));
                }
                Ok(())
            }
        }
    }

    pub fn prime(&self) -> Option<u64> {
        match *self {
            RingSpec::PrimeField(p) | RingSpec::PrimePowerRing(p, _) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingSpec::Integers => write!(f, "Z"),
            RingSpec::Rationals => write!(f, "Q"),
            RingSpec::PrimeField(p) => write!(f, "F{p}"),
            RingSpec::PrimePowerRing(p, m) => write!(f, "Zp:{p}:{m}"),
        }
    }
}

impl std::str::FromStr for RingSpec {
    type Err = Error;

    /// Accepts `Z`, `Q`, `F<p>` / `Fp:<p>` and `Zp:<p>:<M>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unrecognised ring `{s}`"));
        let ring = match s {
            "Z" | "ZZ" => RingSpec::Integers,
            "Q" | "QQ" => RingSpec::Rationals,
            _ => {
                if let Some(rest) = s.strip_prefix("Fp:") {
                    RingSpec::PrimeField(rest.parse().map_err(|_| bad())?)
                } else if let Some(rest) = s.strip_prefix("Zp:") {
                    let mut it = rest.split(':');
                    let p = it.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
                    let m = it.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
                    if it.next().is_some() {
                        return Err(bad());
                    }
                    RingSpec::PrimePowerRing(p, m)
                } else if let Some(rest) = s.strip_prefix('F') {
                    RingSpec::PrimeField(rest.parse().map_err(|_| bad())?)
                } else {
                    return Err(bad());
                }
            }
        };
        ring.validate()?;
        Ok(ring)
    }
}
