//! Exact arithmetic in the ring of integers O of a real quadratic field Q(√D).
//!
//! Elements are stored in doubled coordinates: `λ = (p + q√D)/2`. When
//! `D ≡ 1 (mod 4)` the ring is `Z[(1+√D)/2]` and any `p ≡ q (mod 2)` is
//! allowed; otherwise the ring is `Z[√D]` and both `p` and `q` are even.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::character::kronecker;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RingClass {
    /// `D ≡ 1 (mod 4)`: O = Z[(1+√D)/2], half-integer coordinates allowed.
    OneModFour,
    /// `D ≡ 2, 3 (mod 4)`: O = Z[√D].
    OtherModFour,
}

impl RingClass {
    pub fn of(d: u64) -> RingClass {
        if d % 4 == 1 {
            RingClass::OneModFour
        } else {
            RingClass::OtherModFour
        }
    }

    /// Denominator of lattice coordinates: `λ = (u + v√D)/scale`.
    pub fn scale(self) -> i64 {
        match self {
            RingClass::OneModFour => 2,
            RingClass::OtherModFour => 1,
        }
    }
}

/// A real quadratic field together with its discriminant and the table of
/// its quadratic character `χ(n) = (Δ/n)`.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldData {
    d: u64,
    delta: u64,
    ring_class: RingClass,
    /// `chi[n]` for `n` in `0..Δ`; index 0 stands for `n = Δ`.
    chi: Vec<i8>,
}

impl fmt::Debug for FieldData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldData")
            .field("d", &self.d)
            .field("delta", &self.delta)
            .field("ring_class", &self.ring_class)
            .finish_non_exhaustive()
    }
}

pub fn is_squarefree(d: u64) -> bool {
    let mut n = d;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return false;
            }
        }
        p += 1;
    }
    true
}

impl FieldData {
    pub fn new(d: i64) -> Result<FieldData> {
        if d <= 1 {
            return Err(Error::OutOfRange(d));
        }
        let du = d as u64;
        if !is_squarefree(du) {
            return Err(Error::NotSquarefree(d));
        }
        let ring_class = RingClass::of(du);
        let delta = match ring_class {
            RingClass::OneModFour => du,
            RingClass::OtherModFour => 4 * du,
        };
        let chi = (0..delta)
            .map(|n| kronecker(delta as i64, n as i64) as i8)
            .collect::<Vec<_>>();
        Ok(FieldData {
            d: du,
            delta,
            ring_class,
            chi,
        })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn ring_class(&self) -> RingClass {
        self.ring_class
    }

    /// `χ(n)` for any integer `n`, read from the periodic table.
    pub fn chi(&self, n: i64) -> i8 {
        self.chi[n.rem_euclid(self.delta as i64) as usize]
    }

    /// Character values for `n = 1..=Δ`.
    pub fn chi_values(&self) -> impl Iterator<Item = (u64, i8)> + '_ {
        (1..=self.delta).map(move |n| (n, self.chi[(n % self.delta) as usize]))
    }

    pub fn sqrt_d(&self) -> f64 {
        (self.d as f64).sqrt()
    }

    pub fn zero(&self) -> QuadInt {
        QuadInt::from_int(self.d, 0)
    }

    pub fn one(&self) -> QuadInt {
        QuadInt::from_int(self.d, 1)
    }

    /// `x + y√D` for integers `x`, `y`.
    pub fn elem(&self, x: i64, y: i64) -> QuadInt {
        QuadInt::new(self.d, x, y)
    }

    /// `(p + q√D)/2`, validated against the ring's parity rule.
    pub fn doubled(&self, p: i64, q: i64) -> Result<QuadInt> {
        QuadInt::from_doubled(self.d, BigInt::from(p), BigInt::from(q))
    }

    /// `√D`.
    pub fn sqrt_elem(&self) -> QuadInt {
        self.elem(0, 1)
    }

    /// `ω = (1+√D)/2`, only in O when `D ≡ 1 (mod 4)`.
    pub fn omega(&self) -> Option<QuadInt> {
        self.doubled(1, 1).ok()
    }

    /// `ω̄ = (1−√D)/2`.
    pub fn omega_bar(&self) -> Option<QuadInt> {
        self.doubled(1, -1).ok()
    }
}

/// An element `(p + q√D)/2` of the ring of integers of Q(√D).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QuadInt {
    d: u64,
    p: BigInt,
    q: BigInt,
}

impl fmt::Debug for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QuadInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p.is_even() && self.q.is_even() {
            write!(f, "{}{:+}√{}", &self.p / 2, &self.q / 2, self.d)
        } else {
            write!(f, "({}{:+}√{})/2", self.p, self.q, self.d)
        }
    }
}

fn parity_ok(d: u64, p: &BigInt, q: &BigInt) -> bool {
    match RingClass::of(d) {
        RingClass::OneModFour => p.is_even() == q.is_even(),
        RingClass::OtherModFour => p.is_even() && q.is_even(),
    }
}

impl QuadInt {
    pub fn new(d: u64, x: i64, y: i64) -> QuadInt {
        QuadInt {
            d,
            p: BigInt::from(x) * 2,
            q: BigInt::from(y) * 2,
        }
    }

    pub fn from_int(d: u64, x: i64) -> QuadInt {
        QuadInt::new(d, x, 0)
    }

    pub fn from_doubled(d: u64, p: BigInt, q: BigInt) -> Result<QuadInt> {
        if !parity_ok(d, &p, &q) {
            return Err(Error::ParityViolation {
                d,
                p: p.to_string(),
                q: q.to_string(),
            });
        }
        Ok(QuadInt { d, p, q })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    /// Doubled rational part; also the trace `λ + λ^σ`.
    pub fn p(&self) -> &BigInt {
        &self.p
    }

    /// Doubled coefficient of `√D`.
    pub fn q(&self) -> &BigInt {
        &self.q
    }

    /// Doubled coordinates as machine integers.
    pub fn doubled_i64(&self) -> Result<(i64, i64)> {
        let p = self
            .p
            .to_i64()
            .ok_or_else(|| Error::CoordinateOverflow(self.p.to_string()))?;
        let q = self
            .q
            .to_i64()
            .ok_or_else(|| Error::CoordinateOverflow(self.q.to_string()))?;
        Ok((p, q))
    }

    pub fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.q.is_zero() && self.p == BigInt::from(2)
    }

    /// `λ^σ = (p − q√D)/2`.
    pub fn conj(&self) -> QuadInt {
        QuadInt {
            d: self.d,
            p: self.p.clone(),
            q: -&self.q,
        }
    }

    /// `λ · λ^σ = (p² − Dq²)/4`.
    pub fn norm(&self) -> BigInt {
        (&self.p * &self.p - BigInt::from(self.d) * &self.q * &self.q) / 4
    }

    /// The two real embeddings `(λ, λ^σ)`.
    ///
    /// The embedding of larger magnitude is evaluated directly and the other as
    /// `N(λ)` divided by it, which avoids cancellation when `p ≈ ±q√D`.
    pub fn embed(&self) -> (f64, f64) {
        let p = self.p.to_f64().unwrap_or(f64::NAN);
        let q = self.q.to_f64().unwrap_or(f64::NAN);
        let s = (self.d as f64).sqrt();
        let (plus, minus) = ((p + q * s) / 2.0, (p - q * s) / 2.0);
        if self.q.is_zero() || self.p.is_zero() {
            return (plus, minus);
        }
        let norm = self.norm().to_f64().unwrap_or(f64::NAN);
        if plus.abs() >= minus.abs() {
            (plus, norm / plus)
        } else {
            (norm / minus, minus)
        }
    }

    /// Exact comparison of `λ` (first embedding) with a rational number.
    pub fn cmp_real(&self, bound: &BigRational) -> Ordering {
        // (p + q√D)/2 vs n/m  <=>  (p·m − 2n) + q·m·√D vs 0
        let m = bound.denom();
        let x = &self.p * m - bound.numer() * 2;
        let y = &self.q * m;
        surd_sign(&x, &y, self.d)
    }

    /// True iff `λ/2 ∈ O`.
    pub fn in_2o(&self) -> bool {
        let four = BigInt::from(4);
        match RingClass::of(self.d) {
            RingClass::OtherModFour => self.p.is_multiple_of(&four) && self.q.is_multiple_of(&four),
            RingClass::OneModFour => {
                self.p.is_even() && self.q.is_even() && (&self.p - &self.q).is_multiple_of(&four)
            }
        }
    }

    /// Sign in the lexicographic order on `(p, q)`.
    pub fn lex_sign(&self) -> Ordering {
        match self.p.sign() {
            num_bigint::Sign::Plus => Ordering::Greater,
            num_bigint::Sign::Minus => Ordering::Less,
            num_bigint::Sign::NoSign => self.q.cmp(&BigInt::zero()),
        }
    }

    fn check_field(&self, other: &QuadInt) -> Result<()> {
        if self.d != other.d {
            return Err(Error::FieldMismatch {
                left: self.d,
                right: other.d,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &QuadInt) -> Result<QuadInt> {
        self.check_field(other)?;
        Ok(QuadInt {
            d: self.d,
            p: &self.p + &other.p,
            q: &self.q + &other.q,
        })
    }

    pub fn checked_sub(&self, other: &QuadInt) -> Result<QuadInt> {
        self.check_field(other)?;
        Ok(QuadInt {
            d: self.d,
            p: &self.p - &other.p,
            q: &self.q - &other.q,
        })
    }

    pub fn checked_mul(&self, other: &QuadInt) -> Result<QuadInt> {
        self.check_field(other)?;
        let dd = BigInt::from(self.d);
        let p = &self.p * &other.p + dd * &self.q * &other.q;
        let q = &self.p * &other.q + &self.q * &other.p;
        // Both numerators are even for elements of O.
        Ok(QuadInt {
            d: self.d,
            p: p / 2,
            q: q / 2,
        })
    }

    /// `λ/2`, if it lies in O.
    pub fn half(&self) -> Option<QuadInt> {
        if !self.p.is_even() || !self.q.is_even() {
            return None;
        }
        QuadInt::from_doubled(self.d, &self.p / 2, &self.q / 2).ok()
    }

    pub fn scale(&self, k: i64) -> QuadInt {
        QuadInt {
            d: self.d,
            p: &self.p * k,
            q: &self.q * k,
        }
    }

    pub fn square(&self) -> QuadInt {
        self * self
    }
}

/// Sign of `x + y√d` for `d > 0` not a perfect square.
pub fn surd_sign(x: &BigInt, y: &BigInt, d: u64) -> Ordering {
    let zero = BigInt::zero();
    let sx = x.cmp(&zero);
    let sy = y.cmp(&zero);
    if sy == Ordering::Equal {
        return sx;
    }
    if sx == Ordering::Equal || sx == sy {
        return sy;
    }
    // Opposite signs: compare x² with d·y².
    let lhs = x * x;
    let rhs = BigInt::from(d) * y * y;
    if sx == Ordering::Greater {
        lhs.cmp(&rhs)
    } else {
        rhs.cmp(&lhs)
    }
}

/// `surd_sign` on machine integers; callers keep `|x|, |y|√d < 2^60`.
pub fn surd_sign_i128(x: i128, y: i128, d: i128) -> Ordering {
    let sx = x.cmp(&0);
    let sy = y.cmp(&0);
    if sy == Ordering::Equal {
        return sx;
    }
    if sx == Ordering::Equal || sx == sy {
        return sy;
    }
    let lhs = x * x;
    let rhs = d * y * y;
    if sx == Ordering::Greater {
        lhs.cmp(&rhs)
    } else {
        rhs.cmp(&lhs)
    }
}

/// Floor of `n·√d` for `n ≥ 0`.
pub fn floor_sqrt_mul(n: u64, d: u64) -> u64 {
    isqrt_u128(d as u128 * n as u128 * n as u128) as u64
}

pub fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<'a> $tr<&'a QuadInt> for &'a QuadInt {
            type Output = QuadInt;
            /// Panics when the operands come from different fields.
            fn $method(self, rhs: &'a QuadInt) -> QuadInt {
                self.$checked(rhs)
                    .expect("quadratic integers from different fields")
            }
        }
        impl $tr<QuadInt> for QuadInt {
            type Output = QuadInt;
            fn $method(self, rhs: QuadInt) -> QuadInt {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, checked_add);
forward_binop!(Sub, sub, checked_sub);
forward_binop!(Mul, mul, checked_mul);

impl Neg for &QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        QuadInt {
            d: self.d,
            p: -&self.p,
            q: -&self.q,
        }
    }
}

impl Neg for QuadInt {
    type Output = QuadInt;
    fn neg(self) -> QuadInt {
        -&self
    }
}

/// Convenience: the rational `n/m` as a `BigRational`.
pub fn ratio(n: i64, m: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(m))
}

pub fn rational_from_int(n: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::one())
}
