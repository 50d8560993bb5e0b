//! The quadratic character of a real quadratic field and the quantities built
//! from it: weighted character sums, the correlation constant `C_D`, the index
//! of Γ in the Hilbert modular group, and covolume cross-checks.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::quadfield::FieldData;

/// Exact rational with a positive, reduced denominator.
pub type ExactRational = BigRational;

/// Jacobi symbol `(a/m)` for odd `m > 0`.
pub fn jacobi(a: i64, m: i64) -> i32 {
    debug_assert!(m > 0 && m % 2 == 1);
    let mut a = a.rem_euclid(m);
    let mut m = m;
    let mut t = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = m % 8;
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            t = -t;
        }
        a %= m;
    }
    if m == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol `(a/n)`.
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut result = 1;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let tz = n.trailing_zeros();
    if tz > 0 {
        if a % 2 == 0 {
            return 0;
        }
        // (a/2) = 1 for a ≡ ±1 (mod 8), −1 for a ≡ ±3 (mod 8)
        let r = a.rem_euclid(8);
        if (r == 3 || r == 5) && tz % 2 == 1 {
            result = -result;
        }
        n >>= tz;
    }
    result * jacobi(a, n)
}

/// `(s0, s1, s2)` with `s_k = Σ_{n=1}^{Δ} n^k χ(n)`.
pub fn weighted_char_sums(field: &FieldData) -> (BigInt, BigInt, BigInt) {
    let (mut s0, mut s1, mut s2) = (0i128, 0i128, 0i128);
    for (n, c) in field.chi_values() {
        if c == 0 {
            continue;
        }
        let c = c as i128;
        let n = n as i128;
        s0 += c;
        s1 += c * n;
        s2 += c * n * n;
    }
    (BigInt::from(s0), BigInt::from(s1), BigInt::from(s2))
}

/// `2 − χ(2) + 2χ(4)`; one third of the index `[Γ_O : Γ]`.
pub fn local_factor_at_two(field: &FieldData) -> i64 {
    2 - field.chi(2) as i64 + 2 * field.chi(4) as i64
}

/// `C_D = 32Δ / ((2 − χ(2) + 2χ(4)) Σ_{n=1}^{Δ} n² χ(n))`.
pub fn c_constant(field: &FieldData) -> ExactRational {
    let (_, _, s2) = weighted_char_sums(field);
    c_constant_from_sum(field, &s2)
}

fn c_constant_from_sum(field: &FieldData, s2: &BigInt) -> ExactRational {
    let num = BigInt::from(32u64) * BigInt::from(field.delta());
    let den = BigInt::from(local_factor_at_two(field)) * s2;
    BigRational::new(num, den)
}

/// `[Γ_O : Γ] = 6 − 3χ(2) + 6χ(4)`.
pub fn index_gamma(field: &FieldData) -> i64 {
    6 - 3 * field.chi(2) as i64 + 6 * field.chi(4) as i64
}

/// Checks `192/(5Δ^{3/2}) < C_D < 240/Δ^{3/2}` exactly by squaring:
/// `(192/5)² < C_D² Δ³ < 240²`. Returns (lower holds, upper holds).
pub fn c_constant_bounds(field: &FieldData) -> (bool, bool) {
    let c = c_constant(field);
    let delta = BigInt::from(field.delta());
    let scaled = &c * &c * BigRational::from_integer(&delta * &delta * &delta);
    let lower = BigRational::new(BigInt::from(192 * 192), BigInt::from(25));
    let upper = BigRational::from_integer(BigInt::from(240 * 240));
    (lower < scaled, scaled < upper)
}

/// `Δ^{3/2} C_D` in floating point.
pub fn normalized_constant(field: &FieldData) -> f64 {
    let c = c_constant(field).to_f64().unwrap_or(f64::NAN);
    c * (field.delta() as f64).powf(1.5)
}

/// Truncated `L(2, χ) = Σ_{n ≤ terms} χ(n)/n²` with a rigorous tail bound.
///
/// Abel summation with `|Σ_{n≤x} χ(n)| ≤ Δ` bounds the tail by
/// `2Δ/(terms+1)²`; a rounding allowance for the float sum is added.
pub fn l_value_2(field: &FieldData, terms: u64) -> (f64, f64) {
    let terms = terms.max(field.delta());
    let mut sum = 0.0f64;
    // smallest terms first
    for n in (1..=terms).rev() {
        let c = field.chi(n as i64);
        if c != 0 {
            let nf = n as f64;
            sum += c as f64 / (nf * nf);
        }
    }
    let t1 = terms as f64 + 1.0;
    let tail = 2.0 * field.delta() as f64 / (t1 * t1);
    let rounding = 4.0 * f64::EPSILON * (terms as f64).sqrt();
    (sum, tail + rounding)
}

/// `L(−1, χ) = −(Δ/2) Σ_{n=1}^{Δ} χ(n) B₂(n/Δ)`, `B₂(x) = x² − x + 1/6`, exactly.
pub fn l_value_minus1(field: &FieldData) -> ExactRational {
    let (s0, s1, s2) = weighted_char_sums(field);
    let delta = BigRational::from_integer(BigInt::from(field.delta()));
    let b2_sum = BigRational::from_integer(s2) / (&delta * &delta)
        - BigRational::from_integer(s1) / &delta
        + BigRational::from_integer(s0) / BigRational::from_integer(BigInt::from(6));
    -(delta / BigRational::from_integer(BigInt::from(2))) * b2_sum
}

/// Three independent evaluations of the covolume of Γ.
#[derive(Debug, Clone, Serialize)]
pub struct VolumeReport {
    pub d: u64,
    pub index: i64,
    /// `(2−χ(2)+2χ(4)) (π²/Δ) Σ n²χ(n)`.
    pub closed_form: f64,
    /// index × `(2/π²) Δ^{3/2} ζ_D(2)` with `ζ_D(2) = ζ(2) L(2,χ)` summed numerically.
    pub siegel_form: f64,
    /// `−2π² (2−χ(2)+2χ(4)) L(−1,χ)` with `L(−1,χ)` from Bernoulli polynomials.
    pub bernoulli_form: f64,
    /// Bound on `|siegel_form − exact|` from truncating `L(2,χ)`.
    pub l2_truncation_error: f64,
}

impl VolumeReport {
    pub fn tolerance(&self) -> f64 {
        self.l2_truncation_error + 1e-9 * self.closed_form.abs()
    }

    pub fn agrees(&self) -> bool {
        let tol = self.tolerance();
        (self.closed_form - self.siegel_form).abs() <= tol
            && (self.closed_form - self.bernoulli_form).abs() <= tol
            && (self.siegel_form - self.bernoulli_form).abs() <= tol
    }
}

/// Number of Dirichlet-series terms used by [`covolume`].
pub fn default_l_terms(field: &FieldData) -> u64 {
    (100 * field.delta()).max(1_000_000)
}

pub fn covolume(field: &FieldData) -> VolumeReport {
    covolume_with_terms(field, default_l_terms(field))
}

pub fn covolume_with_terms(field: &FieldData, terms: u64) -> VolumeReport {
    let (_, _, s2) = weighted_char_sums(field);
    let delta = field.delta() as f64;
    let factor = local_factor_at_two(field) as f64;
    let index = index_gamma(field);

    let closed_form = factor * PI * PI / delta * s2.to_f64().unwrap_or(f64::NAN);

    let (l2, l2_err) = l_value_2(field, terms);
    let zeta_d2 = PI * PI / 6.0 * l2;
    let full_group = 2.0 / (PI * PI) * delta.powf(1.5);
    let siegel_form = index as f64 * full_group * zeta_d2;
    let siegel_scale = index as f64 * full_group * PI * PI / 6.0;

    let lm1 = l_value_minus1(field).to_f64().unwrap_or(f64::NAN);
    let bernoulli_form = -2.0 * PI * PI * factor * lm1;

    VolumeReport {
        d: field.d(),
        index,
        closed_form,
        siegel_form,
        bernoulli_form,
        l2_truncation_error: siegel_scale * l2_err,
    }
}

/// `π² Δ^{−5/2} Σ n²χ(n)`, the closed form of `L(2, χ)`.
pub fn l_value_2_closed(field: &FieldData) -> f64 {
    let (_, _, s2) = weighted_char_sums(field);
    PI * PI * (field.delta() as f64).powf(-2.5) * s2.to_f64().unwrap_or(f64::NAN)
}

pub fn is_exact_integer(r: &ExactRational) -> bool {
    r.denom().is_one() || r.numer().is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::ratio;
    use proptest::prelude::*;

    /// Legendre symbol by listing the squares mod p.
    fn legendre_by_squares(a: i64, p: i64) -> i32 {
        let a = a.rem_euclid(p);
        if a == 0 {
            return 0;
        }
        if (1..p).any(|x| (x * x) % p == a) {
            1
        } else {
            -1
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(8, 3), -1);
        assert_eq!(kronecker(5, 4), 1);
        assert_eq!(kronecker(8, 2), 0);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(17, 2), 1);
        assert_eq!(kronecker(12, 5), -1);
    }

    #[test]
    fn jacobi_agrees_with_squares_for_primes() {
        for p in [3i64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 97] {
            for a in -40..40 {
                assert_eq!(jacobi(a, p), legendre_by_squares(a, p), "({a}/{p})");
            }
        }
    }

    #[test]
    fn character_sums_small_fields() {
        let f2 = FieldData::new(2).unwrap();
        let f3 = FieldData::new(3).unwrap();
        let f5 = FieldData::new(5).unwrap();
        assert_eq!(weighted_char_sums(&f2).2, BigInt::from(16));
        assert_eq!(weighted_char_sums(&f5).2, BigInt::from(4));
        assert_eq!(weighted_char_sums(&f3).2, BigInt::from(48));
    }

    #[test]
    fn constant_table_entries() {
        let c = |d| c_constant(&FieldData::new(d).unwrap());
        assert_eq!(c(2), ratio(8, 1));
        assert_eq!(c(6), ratio(4, 3));
        assert_eq!(c(1001), ratio(2, 753));
    }

    #[test]
    fn index_examples() {
        let i = |d| index_gamma(&FieldData::new(d).unwrap());
        assert_eq!(i(2), 6);
        assert_eq!(i(3), 6);
        assert_eq!(i(17), 9);
        assert_eq!(i(13), 15);
        assert_eq!(i(5), 15);
    }

    #[test]
    fn l2_closed_form_matches_series() {
        let f5 = FieldData::new(5).unwrap();
        let (v, e) = l_value_2(&f5, 1_000_000);
        let exact = 4.0 * PI * PI / (25.0 * 5f64.sqrt());
        assert!((v - exact).abs() <= e + 1e-12, "{v} vs {exact}");
        assert!((v - 0.706_211_4).abs() < 1e-7);
        let f2 = FieldData::new(2).unwrap();
        let (v, e) = l_value_2(&f2, 1_000_000);
        assert!((v - PI * PI * 8f64.powf(-2.5) * 16.0).abs() <= e + 1e-12);
        assert!((v - 0.872_358_0).abs() < 1e-7);
        assert!(e <= f2.delta() as f64 / 1_000_000.0);
    }

    #[test]
    fn covolume_examples() {
        let r2 = covolume(&FieldData::new(2).unwrap());
        assert!((r2.closed_form - 4.0 * PI * PI).abs() < 1e-9);
        assert!(r2.agrees(), "{r2:?}");
        let r5 = covolume(&FieldData::new(5).unwrap());
        assert!((r5.closed_form - 4.0 * PI * PI).abs() < 1e-9);
        assert!(r5.agrees(), "{r5:?}");
    }

    #[test]
    fn chi_at_four() {
        for d in [2, 3, 5, 6, 7, 13, 17, 21, 33, 41] {
            let f = FieldData::new(d).unwrap();
            let c2 = f.chi(2);
            assert_eq!(f.chi(4), if c2 != 0 { c2 * c2 } else { 0 });
        }
    }

    #[test]
    fn one_mod_eight_lower_bound() {
        for d in [17, 41, 73, 89, 97, 113, 137] {
            let f = FieldData::new(d).unwrap();
            assert!(normalized_constant(&f) > 64.0, "D = {d}");
        }
    }

    proptest! {
        #[test]
        fn kronecker_multiplicative(m in 1i64..500, n in 1i64..500, di in 0usize..6) {
            let delta = [8i64, 12, 5, 24, 28, 13][di];
            prop_assert_eq!(kronecker(delta, m * n), kronecker(delta, m) * kronecker(delta, n));
            prop_assert_eq!(kronecker(delta, m + delta), kronecker(delta, m));
            prop_assert_eq!(kronecker(delta, m) == 0, num_integer::gcd(m, delta) > 1);
        }
    }
}
