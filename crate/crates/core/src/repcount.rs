//! Representation counts `r(λ) = #{(ξ, η) ∈ O² : λ = ξ² + η²}`.
//!
//! Elements are handled in lattice coordinates `ξ = (a + b√D)/s` with
//! `s = 1` for `Z[√D]` and `s = 2` (and `a ≡ b mod 2`) for `Z[(1+√D)/2]`.
//! Writing `η = (c + d√D)/s`, the equation `λ = ξ² + η²` becomes
//! `s²·x = a² + Db² + c² + Dd²` and `s²·y = 2ab + 2cd` for `λ = x + y√D`.

use serde::Serialize;

use crate::error::Result;
use crate::quadfield::{isqrt_u128, FieldData, QuadInt};

/// One solution `ξ = (a + b√D)/s`, `η = (c + d√D)/s` of `λ = ξ² + η²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RepSolution {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

/// Target `λ` expressed as `(s²x, s²y)`: the values `a²+Db²+c²+Dd²` and `2ab+2cd`
/// must take.
#[derive(Debug, Clone, Copy)]
struct Target {
    d: i64,
    s: i64,
    /// `a² + Db² + c² + Dd²`
    sum: i64,
    /// `2ab + 2cd`
    cross: i64,
}

impl Target {
    fn new(field: &FieldData, lam: &QuadInt) -> Result<Option<Target>> {
        let (p, q) = lam.doubled_i64()?;
        let s = field.ring_class().scale();
        // λ = (p + q√D)/2, so s²x = s²p/2 and s²y = s²q/2.
        let sum = s * s * p / 2;
        let cross = s * s * q / 2;
        if sum < 0 {
            return Ok(None);
        }
        Ok(Some(Target {
            d: field.d() as i64,
            s,
            sum,
            cross,
        }))
    }

    fn parity_ok(&self, a: i64, b: i64) -> bool {
        self.s == 1 || (a - b) % 2 == 0
    }

    /// Largest `|a|` with `a² ≤ sum`.
    fn a_max(&self) -> i64 {
        isqrt_u128(self.sum as u128) as i64
    }

    /// Largest `|b|` with `D b² ≤ sum`.
    fn b_max(&self) -> i64 {
        isqrt_u128((self.sum / self.d) as u128) as i64
    }

    /// Calls `f(d)` for every `d` with `c² + D d² = rem`, `c·d·2 = cross_rem`
    /// and the parity rule; at most two values.
    fn solve_d(&self, c: i64, rem: i64, cross_rem: i64, mut f: impl FnMut(i64)) {
        let t = rem - c * c;
        if t < 0 || t % self.d != 0 {
            return;
        }
        let t = t / self.d;
        let r = isqrt_u128(t as u128) as i64;
        if r * r != t {
            return;
        }
        let n = if r == 0 { 1 } else { 2 };
        for &d in &[r, -r][..n] {
            if 2 * c * d == cross_rem && self.parity_ok(c, d) {
                f(d);
            }
        }
    }
}

/// All solutions, by exhaustive search over `ξ` and `c` with `d` solved from
/// the norm equation.
pub fn solutions(field: &FieldData, lam: &QuadInt) -> Result<Vec<RepSolution>> {
    let Some(t) = Target::new(field, lam)? else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let am = t.a_max();
    let bm = t.b_max();
    for a in -am..=am {
        for b in -bm..=bm {
            if !t.parity_ok(a, b) {
                continue;
            }
            let rem = t.sum - a * a - t.d * b * b;
            if rem < 0 {
                continue;
            }
            let cross_rem = t.cross - 2 * a * b;
            let cm = isqrt_u128(rem as u128) as i64;
            for c in -cm..=cm {
                t.solve_d(c, rem, cross_rem, |d| out.push(RepSolution { a, b, c, d }));
            }
        }
    }
    Ok(out)
}

/// `r(λ)` by brute force.
pub fn r_brute(field: &FieldData, lam: &QuadInt) -> Result<u64> {
    Ok(solutions(field, lam)?.len() as u64)
}

/// Counts of solutions in the six condition classes of the symmetry reduction.
///
/// With `G ≅ Z₂³` generated by `(a,b,c,d) ↦ (−a,−b,c,d)`, `(a,b,−c,−d)` and
/// `(c,d,a,b)`, free orbits have one member in exactly one of `m1..m4`; the
/// fixed-point set is covered by `m1_star` (`a = b = 0`) and `m2_star`
/// (`a = c, b = d`), each standing for two sets of equal size.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SymmetryCounts {
    /// `0 < c < a`
    pub m1: u64,
    /// `0 = c < a, d > 0`
    pub m2: u64,
    /// `0 < c = a, d < b`
    pub m3: u64,
    /// `0 = c = a, 0 < d < b`
    pub m4: u64,
    /// `a = b = 0`
    pub m1_star: u64,
    /// `a = c, b = d`
    pub m2_star: u64,
}

impl SymmetryCounts {
    pub fn total(&self) -> u64 {
        8 * (self.m1 + self.m2 + self.m3 + self.m4) + 2 * (self.m1_star + self.m2_star)
    }

    /// Classify a single solution, if it is a class representative.
    pub fn classify(s: &RepSolution) -> Option<SymClass> {
        let RepSolution { a, b, c, d } = *s;
        if 0 < c && c < a {
            Some(SymClass::M1)
        } else if c == 0 && 0 < a && d > 0 {
            Some(SymClass::M2)
        } else if 0 < c && c == a && d < b {
            Some(SymClass::M3)
        } else if a == 0 && c == 0 && 0 < d && d < b {
            Some(SymClass::M4)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymClass {
    M1,
    M2,
    M3,
    M4,
}

/// Restricted enumeration of the six condition classes.
pub fn symmetry_counts(field: &FieldData, lam: &QuadInt) -> Result<SymmetryCounts> {
    let mut out = SymmetryCounts::default();
    let Some(t) = Target::new(field, lam)? else {
        return Ok(out);
    };
    let am = t.a_max();
    let bm = t.b_max();

    // a > 0: classes M1, M2, M3. Outer a descending.
    for a in (1..=am).rev() {
        for b in -bm..=bm {
            if !t.parity_ok(a, b) {
                continue;
            }
            let rem = t.sum - a * a - t.d * b * b;
            if rem < 0 {
                continue;
            }
            let cross_rem = t.cross - 2 * a * b;
            let cm = (isqrt_u128(rem as u128) as i64).min(a);
            for c in 1..=cm {
                if c < a {
                    t.solve_d(c, rem, cross_rem, |_| out.m1 += 1);
                } else {
                    t.solve_d(c, rem, cross_rem, |d| {
                        if d < b {
                            out.m3 += 1;
                        }
                    });
                }
            }
            t.solve_d(0, rem, cross_rem, |d| {
                if d > 0 {
                    out.m2 += 1;
                }
            });
        }
    }

    // a = c = 0: class M4, then the fixed-point classes.
    for b in 1..=bm {
        if !t.parity_ok(0, b) {
            continue;
        }
        let rem = t.sum - t.d * b * b;
        if rem < 0 {
            continue;
        }
        t.solve_d(0, rem, t.cross, |d| {
            if 0 < d && d < b {
                out.m4 += 1;
            }
        });
    }

    let cm = t.a_max();
    for c in -cm..=cm {
        t.solve_d(c, t.sum, t.cross, |_| out.m1_star += 1);
    }

    // ξ = η: 2ξ² = λ, i.e. a² + Db² = sum/2 and 2ab = cross/2.
    if t.sum % 2 == 0 && t.cross % 2 == 0 {
        let half = t.sum / 2;
        let half_cross = t.cross / 2;
        let am = isqrt_u128(half as u128) as i64;
        for a in -am..=am {
            t.solve_d(a, half, half_cross, |_| out.m2_star += 1);
        }
    }
    Ok(out)
}

/// `r(λ)` through the symmetry reduction. `λ = 0` returns 1 directly: the
/// zero solution lies in both fixed-point classes.
pub fn r_sym(field: &FieldData, lam: &QuadInt) -> Result<u64> {
    if lam.is_zero() {
        return Ok(1);
    }
    Ok(symmetry_counts(field, lam)?.total())
}
