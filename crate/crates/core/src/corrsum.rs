//! Representation tables over a box and the correlation sums
//! `N_D(V₁, V₂) = Σ r(λ) r(λ+1)` taken over `0 ≤ λ < V₁`, `0 ≤ λ^σ < V₂`.
//!
//! Cells are addressed by `(u, v)` with `λ = (u + v√D)/s`, where `s = 2` when
//! `D ≡ 1 (mod 4)` (doubled coordinates) and `s = 1` otherwise. Only cells with
//! the parity of an element of O that is a sum of two squares are stored: for
//! `s = 1` that forces `v` even, for `s = 2` it forces `v ≡ u (mod 2)`. In both
//! cases rows advance in steps of 2 in `v`, and `λ + 1` is the cell `(u + s, v)`.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use std::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::character::{c_constant, ExactRational};
use crate::error::{Error, Result};
use crate::hilbertgroup::{u_exact, CayleyQuadruple, MatO};
use crate::quadfield::{isqrt_u128, surd_sign, FieldData, QuadInt};

/// Default memory budget for a representation table.
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

/// Limit on the number of pairs the group oracle may enumerate.
pub const ORACLE_LIMIT: u64 = 10_000_000;

/// An upper bound of the box, either a positive rational or the square root of one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoxBound {
    Rational(BigRational),
    Sqrt(BigRational),
}

impl fmt::Display for BoxBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoxBound::Rational(r) => write!(f, "{r}"),
            BoxBound::Sqrt(r) => write!(f, "sqrt({r})"),
        }
    }
}

impl BoxBound {
    pub fn rational(r: BigRational) -> Result<BoxBound> {
        if !r.is_positive() {
            return Err(Error::InvalidBound(format!("{r} is not positive")));
        }
        Ok(BoxBound::Rational(r))
    }

    pub fn integer(n: u64) -> Result<BoxBound> {
        BoxBound::rational(BigRational::from_integer(n.into()))
    }

    /// The bound `v^{-1/2}`.
    pub fn inv_sqrt(v: &BigRational) -> Result<BoxBound> {
        if !v.is_positive() {
            return Err(Error::InvalidBound(format!("{v} is not positive")));
        }
        Ok(BoxBound::Sqrt(v.recip()))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            BoxBound::Rational(r) => r.to_f64().unwrap(),
            BoxBound::Sqrt(r) => r.to_f64().unwrap().sqrt(),
        }
    }

    /// A rational number at least as large as the bound.
    pub fn upper_rational(&self) -> BigRational {
        match self {
            BoxBound::Rational(r) => r.clone(),
            BoxBound::Sqrt(r) => {
                let scale = BigInt::from(1u64 << 32);
                let n = (r.numer() * &scale * &scale / r.denom()).sqrt() + 1;
                BigRational::new(n, scale)
            }
        }
    }

    /// `B + 1` rounded up to a rational.
    fn extended(&self) -> BoxBound {
        BoxBound::Rational(self.upper_rational() + BigRational::from_integer(1.into()))
    }

    /// Exact test of `(u + v√D)/s < B`.
    pub fn exceeds(&self, u: i64, v: i64, s: i64, d: u64) -> bool {
        match self {
            BoxBound::Rational(r) => {
                let x = BigInt::from(u) * r.denom() - BigInt::from(s) * r.numer();
                let y = BigInt::from(v) * r.denom();
                surd_sign(&x, &y, d) == std::cmp::Ordering::Less
            }
            BoxBound::Sqrt(r) => {
                let (u, v) = (BigInt::from(u), BigInt::from(v));
                if surd_sign(&u, &v, d) != std::cmp::Ordering::Greater {
                    return true;
                }
                // λ² = (u² + D v² + 2uv√D)/s²
                let x = (&u * &u + BigInt::from(d) * &v * &v) * r.denom()
                    - BigInt::from(s * s) * r.numer();
                let y = BigInt::from(2) * u * v * r.denom();
                surd_sign(&x, &y, d) == std::cmp::Ordering::Less
            }
        }
    }
}

/// Cell geometry of O in `(u, v)` coordinates.
#[derive(Debug, Clone, Copy)]
struct Lattice {
    d: u64,
    s: i64,
    sqrt_d: f64,
}

impl Lattice {
    fn new(field: &FieldData) -> Lattice {
        Lattice {
            d: field.d(),
            s: field.ring_class().scale(),
            sqrt_d: field.sqrt_d(),
        }
    }

    /// Residue of `v` modulo 2 for stored cells in row `u`.
    fn parity(&self, u: i64) -> i64 {
        if self.s == 2 {
            u.rem_euclid(2)
        } else {
            0
        }
    }

    /// `floor(u / √D)` for `u ≥ 0`: the largest `v` with `λ^σ ≥ 0`.
    fn nonneg_limit(&self, u: i64) -> i64 {
        let u = u as u128;
        isqrt_u128(u * u / self.d as u128) as i64
    }

    /// Largest `w` with `(u + w√D)/s < B`.
    fn below_limit(&self, u: i64, b: &BoxBound) -> i64 {
        let est = ((self.s as f64 * b.to_f64() - u as f64) / self.sqrt_d).floor() as i64;
        let mut w = est;
        while !b.exceeds(u, w, self.s, self.d) {
            w -= 1;
        }
        while b.exceeds(u, w + 1, self.s, self.d) {
            w += 1;
        }
        w
    }

    /// Inclusive window `[lo, hi]` of parity-aligned `v` with the cell
    /// `(u, v)` inside `0 ≤ λ < B₁, 0 ≤ λ^σ < B₂`.
    fn row_window(&self, u: i64, b1: &BoxBound, b2: &BoxBound) -> Option<(i64, i64)> {
        if u < 0 {
            return None;
        }
        let nn = self.nonneg_limit(u);
        let hi = nn.min(self.below_limit(u, b1));
        let lo = -nn.min(self.below_limit(u, b2));
        let par = self.parity(u);
        let hi = hi - (hi - par).rem_euclid(2);
        let lo = lo + (par - lo).rem_euclid(2);
        (lo <= hi).then_some((lo, hi))
    }

    /// Largest row index that can meet the box.
    fn max_row(&self, b1: &BoxBound, b2: &BoxBound) -> i64 {
        let sum = b1.upper_rational() + b2.upper_rational();
        let x =
            sum * BigRational::from_integer(self.s.into()) / BigRational::from_integer(2.into());
        x.ceil().to_integer().to_i64().expect("box too large")
    }

    fn cell(&self, a: i64, b: i64, c: i64, d: i64) -> (i64, i64) {
        let dd = self.d as i64;
        let sum = a * a + dd * b * b + c * c + dd * d * d;
        let cross = 2 * (a * b + c * d);
        (sum / self.s, cross / self.s)
    }
}

/// Elements `(a + b√D)/s` of O with `|ξ| ≤ r1` and `|ξ^σ| ≤ r2`, up to a small slack.
fn box_elements(lat: &Lattice, r1: f64, r2: f64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let s = lat.s as f64;
    let (r1, r2) = (s * r1 + 1e-7, s * r2 + 1e-7);
    let amax = ((r1 + r2) / 2.0).floor() as i64;
    for a in -amax..=amax {
        let af = a as f64;
        let lo = (-r1 - af).max(af - r2);
        let hi = (r1 - af).min(af + r2);
        if lo > hi {
            continue;
        }
        let blo = (lo / lat.sqrt_d - 1e-9).ceil() as i64;
        let bhi = (hi / lat.sqrt_d + 1e-9).floor() as i64;
        for b in blo..=bhi {
            if lat.s == 2 && (a - b).rem_euclid(2) != 0 {
                continue;
            }
            out.push((a, b));
        }
    }
    out
}

/// Options controlling table construction.
#[derive(Debug, Clone)]
pub struct TableOptions {
    /// Worker threads, 0 for the global default.
    pub threads: usize,
    pub memory_budget: u64,
    /// Store only `v ≥ 0` (valid when the box is symmetric under σ).
    /// `None` folds exactly when `V₁ = V₂`.
    pub fold: Option<bool>,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            threads: 0,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            fold: None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Row {
    lo: i64,
    hi: i64,
    offset: usize,
}

/// `r(λ)` for every λ in a box, stored in ragged rows.
#[derive(Debug, Clone)]
pub struct RepTable {
    d: u64,
    lat_s: i64,
    v1: BoxBound,
    v2: BoxBound,
    folded: bool,
    rows: Vec<Option<Row>>,
    counts: Vec<u32>,
}

impl RepTable {
    pub fn d(&self) -> u64 {
        self.d
    }

    /// `s` in `λ = (x + y√D)/s`.
    pub fn scale(&self) -> i64 {
        self.lat_s
    }

    pub fn is_folded(&self) -> bool {
        self.folded
    }

    /// The box this table was requested for.
    pub fn bounds(&self) -> (&BoxBound, &BoxBound) {
        (&self.v1, &self.v2)
    }

    fn slot(&self, u: i64, v: i64) -> Option<usize> {
        let v = if self.folded { v.abs() } else { v };
        let row = self.rows.get(usize::try_from(u).ok()?)?.as_ref()?;
        if v < row.lo || v > row.hi || (v - row.lo) % 2 != 0 {
            return None;
        }
        Some(row.offset + ((v - row.lo) / 2) as usize)
    }

    /// `r` at cell `(u, v)`, or 0 outside the stored region.
    pub fn get(&self, u: i64, v: i64) -> u32 {
        self.slot(u, v).map_or(0, |i| self.counts[i])
    }

    /// `r(λ)`, or `None` when λ lies outside the stored region.
    pub fn r(&self, lam: &QuadInt) -> Option<u32> {
        let (p, q) = lam.doubled_i64().ok()?;
        let (u, v) = if self.lat_s == 2 {
            (p, q)
        } else {
            (p / 2, q / 2)
        };
        if self.lat_s == 1 && v % 2 != 0 {
            let row = self.rows.get(usize::try_from(u).ok()?)?.as_ref()?;
            let w = if self.folded { v.abs() } else { v };
            return (row.lo <= w && w <= row.hi).then_some(0);
        }
        self.slot(u, v).map(|i| self.counts[i])
    }

    /// Number of stored cells.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// All stored cells `(u, v, r)`, with folded halves expanded.
    pub fn cells(&self) -> impl Iterator<Item = (i64, i64, u32)> + '_ {
        self.rows.iter().enumerate().flat_map(move |(u, row)| {
            let row = *row;
            let iter = row.into_iter().flat_map(move |row| {
                (0..=((row.hi - row.lo) / 2))
                    .map(move |k| (row.lo + 2 * k, row.offset + k as usize))
            });
            iter.flat_map(move |(v, idx)| {
                let r = self.counts[idx];
                let mirror = (self.folded && v > 0).then_some((u as i64, -v, r));
                std::iter::once((u as i64, v, r)).chain(mirror)
            })
        })
    }

    /// `Σ r(λ) r(λ+1)` over `0 ≤ λ < V₁, 0 ≤ λ^σ < V₂`, λ = 0 included.
    /// The box must lie inside the one the table was built for.
    pub fn correlation_sum(&self, v1: &BoxBound, v2: &BoxBound) -> u128 {
        let lat = Lattice {
            d: self.d,
            s: self.lat_s,
            sqrt_d: (self.d as f64).sqrt(),
        };
        let mut total: u128 = 0;
        let symmetric = self.folded && v1 == v2;
        for u in 0..self.rows.len() as i64 {
            let Some((lo, hi)) = lat.row_window(u, v1, v2) else {
                continue;
            };
            let mut v = if symmetric {
                lo.max(self.parity_floor(u))
            } else {
                lo
            };
            while v <= hi {
                let term = self.get(u, v) as u128 * self.get(u + self.lat_s, v) as u128;
                let mult = if symmetric && v > 0 { 2 } else { 1 };
                total += mult * term;
                v += 2;
            }
        }
        total
    }

    fn parity_floor(&self, u: i64) -> i64 {
        if self.lat_s == 2 {
            u.rem_euclid(2)
        } else {
            0
        }
    }

    /// Writes the table as CSV with columns `x,y,r`, where `λ = (x + y√D)/s`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# D={} doubled={}", self.d, u8::from(self.lat_s == 2))?;
        writeln!(w, "x,y,r")?;
        for (u, v, r) in self.cells() {
            writeln!(w, "{u},{v},{r}")?;
        }
        Ok(())
    }
}

/// Builds `r(λ)` for all λ with `0 ≤ λ < V₁ + 1` and `0 ≤ λ^σ < V₂ + 1`
/// (bounds rounded up when irrational), so every `λ + 1` needed for the box
/// `V₁ × V₂` is present.
pub fn build_rep_table(
    field: &FieldData,
    v1: &BoxBound,
    v2: &BoxBound,
    opts: &TableOptions,
) -> Result<RepTable> {
    let lat = Lattice::new(field);
    let (w1, w2) = (v1.extended(), v2.extended());
    let folded = opts.fold.unwrap_or(v1 == v2);
    if folded && w1 != w2 {
        return Err(Error::InvalidBound("a folded table needs V₁ = V₂".into()));
    }

    let max_row = lat.max_row(&w1, &w2);
    let mut rows = Vec::with_capacity(max_row as usize + 1);
    let mut total = 0usize;
    for u in 0..=max_row {
        let row = lat.row_window(u, &w1, &w2).and_then(|(lo, hi)| {
            let lo = if folded { lo.max(lat.parity(u)) } else { lo };
            (lo <= hi).then(|| {
                let row = Row {
                    lo,
                    hi,
                    offset: total,
                };
                total += ((hi - lo) / 2 + 1) as usize;
                row
            })
        });
        rows.push(row);
    }
    let requested =
        (total as u64) * 4 + (rows.len() as u64) * std::mem::size_of::<Option<Row>>() as u64;
    if requested > opts.memory_budget {
        return Err(Error::CapacityExceeded {
            requested,
            budget: opts.memory_budget,
        });
    }

    let mut table = RepTable {
        d: field.d(),
        lat_s: lat.s,
        v1: v1.clone(),
        v2: v2.clone(),
        folded,
        rows,
        counts: Vec::new(),
    };
    let atomic: Vec<AtomicU32> = (0..total).map(|_| AtomicU32::new(0)).collect();

    let (wf1, wf2) = (w1.to_f64(), w2.to_f64());
    let elems = box_elements(&lat, wf1.sqrt(), wf2.sqrt());
    let add = |u: i64, v: i64, w: u32| {
        if folded && v < 0 {
            return;
        }
        if let Some(i) = table.slot(u, v) {
            atomic[i].fetch_add(w, AtomicOrdering::Relaxed);
        }
    };

    let fill_from = |&(a, b): &(i64, i64)| {
        let x1 = (a as f64 + b as f64 * lat.sqrt_d) / lat.s as f64;
        let x2 = (a as f64 - b as f64 * lat.sqrt_d) / lat.s as f64;
        let rem1 = wf1 - x1 * x1;
        let rem2 = wf2 - x2 * x2;
        if rem1 < -1e-9 || rem2 < -1e-9 {
            return;
        }
        let s = lat.s as f64;
        let r1 = s * rem1.max(0.0).sqrt() + 1e-7;
        let r2 = s * rem2.max(0.0).sqrt() + 1e-7;
        let cmax = ((r1 + r2) / 2.0).floor() as i64;
        let d_range = |c: i64| {
            let cf = c as f64;
            let lo = (-r1 - cf).max(cf - r2);
            let hi = (r1 - cf).min(cf + r2);
            let dlo = (lo / lat.sqrt_d - 1e-9).ceil() as i64;
            let dhi = (hi / lat.sqrt_d + 1e-9).floor() as i64;
            (dlo, dhi)
        };
        let aligned = |c: i64, d: i64| lat.s == 1 || (c - d).rem_euclid(2) == 0;
        // M1: 0 < c < a
        for c in 1..a.min(cmax + 1) {
            let (dlo, dhi) = d_range(c);
            for d in dlo..=dhi {
                if aligned(c, d) {
                    let (u, v) = lat.cell(a, b, c, d);
                    add(u, v, 8);
                }
            }
        }
        // M2: c = 0 < a, d > 0
        let (dlo, dhi) = d_range(0);
        for d in dlo.max(1)..=dhi {
            if aligned(0, d) {
                let (u, v) = lat.cell(a, b, 0, d);
                add(u, v, 8);
            }
        }
        // M3: c = a, d < b
        if a <= cmax {
            let (dlo, dhi) = d_range(a);
            for d in dlo..=dhi.min(b - 1) {
                if aligned(a, d) {
                    let (u, v) = lat.cell(a, b, a, d);
                    add(u, v, 8);
                }
            }
        }
    };

    let positive: Vec<(i64, i64)> = elems.iter().copied().filter(|&(a, _)| a > 0).collect();
    run_parallel(opts.threads, &positive, &fill_from);

    // M4: a = c = 0, 0 < d < b
    let axis: Vec<i64> = elems
        .iter()
        .filter(|e| e.0 == 0 && e.1 > 0)
        .map(|e| e.1)
        .collect();
    for &b in &axis {
        for &d in axis.iter().filter(|&&d| d < b) {
            let (u, v) = lat.cell(0, b, 0, d);
            add(u, v, 8);
        }
    }
    for &(c, d) in &elems {
        // ξ = 0 with η arbitrary, and ξ = η.
        let (u, v) = lat.cell(0, 0, c, d);
        add(u, v, 2);
        let (u, v) = lat.cell(c, d, c, d);
        add(u, v, 2);
    }

    let mut counts: Vec<u32> = atomic.into_iter().map(AtomicU32::into_inner).collect();
    if let Some(i) = table.slot(0, 0) {
        // (0, 0) was counted twice with weight 2; r(0) = 1.
        counts[i] -= 3;
    }
    assert!(
        counts.iter().all(|&c| c < u32::MAX / 2),
        "representation count overflow"
    );
    table.counts = counts;
    Ok(table)
}

#[cfg(feature = "parallel")]
fn run_parallel<F>(threads: usize, items: &[(i64, i64)], f: &F)
where
    F: Fn(&(i64, i64)) + Sync,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(|| items.par_iter().with_min_len(16).for_each(f));
}

#[cfg(not(feature = "parallel"))]
fn run_parallel<F>(_threads: usize, items: &[(i64, i64)], f: &F)
where
    F: Fn(&(i64, i64)),
{
    items.iter().for_each(f);
}

/// Options for a single correlation evaluation.
#[derive(Debug, Clone)]
pub struct CorrelationOptions {
    pub table: TableOptions,
    pub include_lambda_zero: bool,
}

impl Default for CorrelationOptions {
    fn default() -> Self {
        CorrelationOptions {
            table: TableOptions::default(),
            include_lambda_zero: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrelationResult {
    pub d: u64,
    pub v1: BoxBound,
    pub v2: BoxBound,
    pub n_value: u128,
    pub c_constant: ExactRational,
    /// `C_D V₁ V₂`.
    pub main_term: f64,
    /// `N − C_D V₁ V₂`.
    pub deviation: f64,
    pub include_lambda_zero: bool,
}

/// JSON export shape of a [`CorrelationResult`].
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationExport {
    pub d: u64,
    pub v1: String,
    pub v2: String,
    pub n_value: String,
    pub c_constant_num: String,
    pub c_constant_den: String,
    pub deviation: f64,
}

impl CorrelationResult {
    pub fn export(&self) -> CorrelationExport {
        CorrelationExport {
            d: self.d,
            v1: self.v1.to_string(),
            v2: self.v2.to_string(),
            n_value: self.n_value.to_string(),
            c_constant_num: self.c_constant.numer().to_string(),
            c_constant_den: self.c_constant.denom().to_string(),
            deviation: self.deviation,
        }
    }
}

pub fn correlation(field: &FieldData, v1: &BoxBound, v2: &BoxBound) -> Result<CorrelationResult> {
    correlation_with(field, v1, v2, &CorrelationOptions::default())
}

pub fn correlation_with(
    field: &FieldData,
    v1: &BoxBound,
    v2: &BoxBound,
    opts: &CorrelationOptions,
) -> Result<CorrelationResult> {
    let table = build_rep_table(field, v1, v2, &opts.table)?;
    let mut n = table.correlation_sum(v1, v2);
    if !opts.include_lambda_zero {
        // r(0) r(1) = r(1)
        n -= table.get(table.scale(), 0) as u128;
    }
    let c = c_constant(field);
    let main = c.to_f64().unwrap() * v1.to_f64() * v2.to_f64();
    Ok(CorrelationResult {
        d: field.d(),
        v1: v1.clone(),
        v2: v2.clone(),
        n_value: n,
        c_constant: c,
        main_term: main,
        deviation: n as f64 - main,
        include_lambda_zero: opts.include_lambda_zero,
    })
}

/// `N(V, V)` for all integers `0 ≤ V ≤ x_max`, from one table.
#[derive(Debug, Clone)]
pub struct DeviationCurve {
    pub d: u64,
    pub c_constant: ExactRational,
    /// `n[V] = N(V, V)`.
    pub n: Vec<u128>,
}

impl DeviationCurve {
    /// `N(V, V) − C_D V²`.
    pub fn deviation(&self, v: usize) -> ExactRational {
        let vv = BigRational::from_integer(BigInt::from(v as u64));
        BigRational::from_integer(BigInt::from(self.n[v])) - &self.c_constant * &vv * &vv
    }

    /// `max |N(V,V) − C_D V²|` over integers `1 ≤ V < x` (or `≤ x` if `inclusive`),
    /// with the maximising `V`.
    pub fn sup(&self, x: usize, inclusive: bool) -> (ExactRational, usize) {
        let end = if inclusive { x } else { x - 1 };
        let mut best = (BigRational::zero(), 0);
        for v in 1..=end.min(self.n.len() - 1) {
            let dev = self.deviation(v).abs();
            if dev > best.0 {
                best = (dev, v);
            }
        }
        best
    }

    /// `sup |N(V,V) − C_D V²|` over real `0 < V < x`. On `(k, k+1]` the count
    /// `N(V,V)` equals `n[k+1]`, so the supremum over that piece is approached
    /// at one of its two ends.
    pub fn sup_real(&self, x: usize) -> (ExactRational, usize) {
        let mut best = (BigRational::zero(), 0);
        let c = &self.c_constant;
        for k in 0..x.min(self.n.len() - 1) {
            let nk = BigRational::from_integer(BigInt::from(self.n[k + 1]));
            let kk = BigRational::from_integer(BigInt::from(k as u64));
            let k1 = &kk + BigRational::from_integer(1.into());
            let low = (&nk - c * &kk * &kk).abs();
            let high = (&nk - c * &k1 * &k1).abs();
            for (dev, at) in [(low, k), (high, k + 1)] {
                if dev > best.0 {
                    best = (dev, at);
                }
            }
        }
        best
    }
}

pub fn deviation_curve(
    field: &FieldData,
    xmax: u64,
    opts: &TableOptions,
) -> Result<DeviationCurve> {
    let bound = BoxBound::integer(xmax)?;
    let mut opts = opts.clone();
    opts.fold = Some(true);
    let table = build_rep_table(field, &bound, &bound, &opts)?;
    let lat = Lattice::new(field);
    let xmax = xmax as usize;
    let mut bucket = vec![0u128; xmax + 1];
    for (u, row) in table.rows.iter().enumerate() {
        let Some(row) = row else { continue };
        let u = u as i64;
        let mut v = row.lo;
        while v <= row.hi {
            let ext = isqrt_u128(lat.d as u128 * (v as u128) * (v as u128)) as i64;
            let k = Integer::div_floor(&(u + ext), &lat.s);
            if (k as usize) < xmax {
                let term = table.get(u, v) as u128 * table.get(u + lat.s, v) as u128;
                bucket[k as usize] += if v > 0 { 2 * term } else { term };
            }
            v += 2;
        }
    }
    let mut n = vec![0u128; xmax + 1];
    for v in 1..=xmax {
        n[v] = n[v - 1] + bucket[v - 1];
    }
    Ok(DeviationCurve {
        d: field.d(),
        c_constant: c_constant(field),
        n,
    })
}

/// One row of the `G` table: `N(v, v^{-1/2}) / (C_D √v)`.
#[derive(Debug, Clone, Serialize)]
pub struct GRow {
    pub v: u64,
    pub n_value: String,
    pub ratio: f64,
}

pub fn g_ratio(field: &FieldData, v: u64, opts: &TableOptions) -> Result<GRow> {
    let v1 = BoxBound::integer(v)?;
    let v2 = BoxBound::inv_sqrt(&BigRational::from_integer(v.into()))?;
    let table = build_rep_table(field, &v1, &v2, opts)?;
    let n = table.correlation_sum(&v1, &v2);
    let c = c_constant(field).to_f64().unwrap();
    Ok(GRow {
        v,
        n_value: n.to_string(),
        ratio: n as f64 / (c * (v as f64).sqrt()),
    })
}

/// Counts `τ ∈ M` with `u(τ(i), i) = λ` in the box via the Cayley
/// parametrisation: pairs `(C, D)` with `λ = C² + D²` matched against pairs
/// `(A, B)` with `A² + B² = λ + 1`.
pub fn correlation_group_oracle(field: &FieldData, v1: &BoxBound, v2: &BoxBound) -> Result<u128> {
    let lat = Lattice::new(field);
    let (w1, w2) = (v1.extended(), v2.extended());
    let inner = box_elements(&lat, v1.to_f64().sqrt(), v2.to_f64().sqrt());
    let outer = box_elements(&lat, w1.to_f64().sqrt(), w2.to_f64().sqrt());
    let estimated = (inner.len() as u64).pow(2) + (outer.len() as u64).pow(2);
    if estimated > ORACLE_LIMIT {
        return Err(Error::ScaleGuard {
            estimated,
            limit: ORACLE_LIMIT,
        });
    }
    let d = field.d();
    let elem = |(a, b): (i64, i64)| {
        if lat.s == 2 {
            field.doubled(a, b).unwrap()
        } else {
            field.elem(a, b)
        }
    };
    let mut sums: HashMap<(i64, i64), Vec<(usize, usize)>> = HashMap::new();
    for (i, &x) in outer.iter().enumerate() {
        for (j, &y) in outer.iter().enumerate() {
            sums.entry(lat.cell(x.0, x.1, y.0, y.1))
                .or_default()
                .push((i, j));
        }
    }
    let mut count = 0u128;
    for &x in &inner {
        for &y in &inner {
            let (u, v) = lat.cell(x.0, x.1, y.0, y.1);
            if !(v1.exceeds(u, v, lat.s, d) && v2.exceeds(u, -v, lat.s, d)) {
                continue;
            }
            let Some(pairs) = sums.get(&(u + lat.s, v)) else {
                continue;
            };
            let lam = elem(x).square() + elem(y).square();
            for &(i, j) in pairs {
                let q = CayleyQuadruple {
                    qa: elem(outer[i]),
                    qb: elem(outer[j]),
                    qc: elem(x),
                    qd: elem(y),
                };
                let tau = MatO::from_cayley(&q)?;
                if u_exact(&tau)? == lam {
                    count += 1;
                }
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadfield::ratio;
    use crate::repcount::r_sym;
    use proptest::prelude::*;

    fn f(d: i64) -> FieldData {
        FieldData::new(d).unwrap()
    }

    fn int(n: u64) -> BoxBound {
        BoxBound::integer(n).unwrap()
    }

    #[test]
    fn exceeds_examples() {
        let b = int(3);
        assert!(b.exceeds(2, 0, 1, 2));
        assert!(!b.exceeds(3, 0, 1, 2));
        assert!(b.exceeds(1, 1, 1, 2)); // 1 + √2 < 3
        assert!(!b.exceeds(2, 1, 1, 2)); // 2 + √2 > 3
        let r = BoxBound::inv_sqrt(&ratio(4, 1)).unwrap(); // 1/2
        assert!(r.exceeds(0, 0, 1, 2));
        assert!(!r.exceeds(1, 0, 2, 5)); // 1/2 is not < 1/2
        assert!(r.exceeds(-3, 1, 1, 2)); // negative
        assert!(r.exceeds(-1, 1, 1, 2)); // √2 − 1 < 1/2
        assert!(!BoxBound::inv_sqrt(&ratio(1, 1))
            .unwrap()
            .exceeds(1, 0, 1, 2));
        assert!(BoxBound::integer(0).is_err());
    }

    #[test]
    fn small_table_d2() {
        let field = f(2);
        let t = build_rep_table(&field, &int(3), &int(3), &TableOptions::default()).unwrap();
        let r = |x: i64| t.r(&field.elem(x, 0)).unwrap();
        assert_eq!([r(0), r(1), r(2), r(3)], [1, 4, 8, 8]);
        assert_eq!(r_sym(&field, &field.elem(4, 0)).unwrap(), 8);
        assert_eq!(t.r(&field.elem(4, 0)), None);
        assert_eq!(t.correlation_sum(&int(3), &int(3)), 100);
        assert_eq!(t.correlation_sum(&int(1), &int(1)), 4);
        assert_eq!(correlation(&field, &int(1), &int(1)).unwrap().n_value, 4);
    }

    #[test]
    fn lambda_zero_flag() {
        let field = f(2);
        let opts = CorrelationOptions {
            include_lambda_zero: false,
            ..Default::default()
        };
        let with = correlation(&field, &int(3), &int(3)).unwrap().n_value;
        let without = correlation_with(&field, &int(3), &int(3), &opts)
            .unwrap()
            .n_value;
        assert_eq!(with - without, 4);
    }

    #[test]
    fn table_matches_symmetry_count() {
        for d in [2, 3, 5, 13, 17] {
            let field = f(d);
            for fold in [false, true] {
                let opts = TableOptions {
                    fold: Some(fold),
                    ..Default::default()
                };
                let t = build_rep_table(&field, &int(12), &int(12), &opts).unwrap();
                for (u, v, r) in t.cells() {
                    let lam = if t.scale() == 2 {
                        field.doubled(u, v).unwrap()
                    } else {
                        field.elem(u, v)
                    };
                    assert_eq!(r as u64, r_sym(&field, &lam).unwrap(), "D = {d}, λ = {lam}");
                }
            }
        }
    }

    #[test]
    fn table_covers_extended_box() {
        let field = f(5);
        let t = build_rep_table(&field, &int(4), &int(2), &TableOptions::default()).unwrap();
        assert!(!t.is_folded());
        let sq5 = 5f64.sqrt();
        let mut expected = 0;
        for u in 0..40i64 {
            for v in -40..=40i64 {
                if (u - v) % 2 != 0 {
                    continue;
                }
                let (l1, l2) = (
                    (u as f64 + v as f64 * sq5) / 2.0,
                    (u as f64 - v as f64 * sq5) / 2.0,
                );
                if l1 >= 0.0 && l2 >= 0.0 && l1 < 5.0 && l2 < 3.0 {
                    expected += 1;
                }
            }
        }
        assert_eq!(t.len(), expected);
    }

    #[test]
    fn folding_does_not_change_sums() {
        for d in [2, 5, 7, 13] {
            let field = f(d);
            let b = int(15);
            let folded = build_rep_table(
                &field,
                &b,
                &b,
                &TableOptions {
                    fold: Some(true),
                    ..Default::default()
                },
            )
            .unwrap();
            let plain = build_rep_table(
                &field,
                &b,
                &b,
                &TableOptions {
                    fold: Some(false),
                    ..Default::default()
                },
            )
            .unwrap();
            assert_eq!(
                folded.correlation_sum(&b, &b),
                plain.correlation_sum(&b, &b)
            );
            let mut a: Vec<_> = folded.cells().collect();
            let mut p: Vec<_> = plain.cells().collect();
            a.sort();
            p.sort();
            assert_eq!(a, p);
        }
    }

    #[test]
    fn group_oracle_small() {
        for d in [2, 5] {
            let field = f(d);
            for (a, b) in [(1, 1), (2, 2), (3, 5), (6, 2)] {
                let (v1, v2) = (int(a), int(b));
                assert_eq!(
                    correlation_group_oracle(&field, &v1, &v2).unwrap(),
                    correlation(&field, &v1, &v2).unwrap().n_value,
                    "D = {d}, box {a}×{b}"
                );
            }
        }
    }

    #[test]
    fn oracle_scale_guard() {
        let err = correlation_group_oracle(&f(2), &int(3000), &int(3000)).unwrap_err();
        assert!(matches!(err, Error::ScaleGuard { .. }));
    }

    #[test]
    fn capacity_guard() {
        let opts = TableOptions {
            memory_budget: 1000,
            ..Default::default()
        };
        let err = build_rep_table(&f(2), &int(100), &int(100), &opts).unwrap_err();
        assert!(matches!(err, Error::CapacityExceeded { .. }));
    }

    #[test]
    fn curve_matches_direct_sums() {
        for d in [2, 5] {
            let field = f(d);
            let curve = deviation_curve(&field, 30, &TableOptions::default()).unwrap();
            for v in [1u64, 2, 7, 19, 30] {
                assert_eq!(
                    curve.n[v as usize],
                    correlation(&field, &int(v), &int(v)).unwrap().n_value
                );
            }
        }
    }

    #[test]
    fn csv_export() {
        let field = f(5);
        let t = build_rep_table(&field, &int(1), &int(1), &TableOptions::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# D=5 doubled=1"));
        assert_eq!(lines.next(), Some("x,y,r"));
        assert!(lines.any(|l| l == "0,0,1"));
    }

    #[test]
    fn json_export_fields() {
        let res = correlation(&f(6), &int(3), &int(2)).unwrap();
        let e = res.export();
        assert_eq!(
            (e.c_constant_num.as_str(), e.c_constant_den.as_str()),
            ("4", "3")
        );
        assert_eq!(e.v1, "3");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn correlation_monotone_in_box(d in prop::sample::select(vec![2i64, 3, 5, 13]), a in 1u64..10, b in 1u64..10) {
            let field = f(d);
            let n = correlation(&field, &int(a), &int(b)).unwrap().n_value;
            let n1 = correlation(&field, &int(a + 1), &int(b)).unwrap().n_value;
            let n2 = correlation(&field, &int(a), &int(b + 1)).unwrap().n_value;
            prop_assert!(n <= n1 && n <= n2);
        }

        #[test]
        fn correlation_symmetric_under_swap(d in prop::sample::select(vec![2i64, 3, 5, 13]), a in 1u64..12, b in 1u64..12) {
            let field = f(d);
            let n = correlation(&field, &int(a), &int(b)).unwrap().n_value;
            let m = correlation(&field, &int(b), &int(a)).unwrap().n_value;
            prop_assert_eq!(n, m);
        }
    }
}
