//! 2×2 matrices over O modulo ±Id, the subgroup
//! `Γ = {γ : a+d, b+c ∈ 2O}` of the Hilbert modular group `Γ_O = PSL₂(O)`,
//! its coset structure, and the Cayley parametrisation of its preimage `M`.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Mul;

use rand::Rng;
use serde::Serialize;

use crate::character::index_gamma;
use crate::error::{Error, Result};
use crate::quadfield::{FieldData, QuadInt, RingClass};

/// A matrix `[[a, b], [c, d]]` in `SL₂(O)`, stored with its sign normalised so
/// that `m` and `−m` compare equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MatO {
    a: QuadInt,
    b: QuadInt,
    c: QuadInt,
    d: QuadInt,
}

impl fmt::Debug for MatO {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl MatO {
    pub fn new(a: QuadInt, b: QuadInt, c: QuadInt, d: QuadInt) -> Result<MatO> {
        for e in [&b, &c, &d] {
            if e.d() != a.d() {
                return Err(Error::FieldMismatch {
                    left: a.d(),
                    right: e.d(),
                });
            }
        }
        let det = &a * &d - &b * &c;
        assert!(det.is_one(), "matrix determinant is {det}, expected 1");
        Ok(MatO { a, b, c, d }.normalized())
    }

    fn normalized(self) -> MatO {
        let first = [&self.a, &self.b, &self.c, &self.d]
            .into_iter()
            .find(|e| !e.is_zero())
            .map(|e| e.lex_sign());
        if first == Some(std::cmp::Ordering::Less) {
            MatO {
                a: -self.a,
                b: -self.b,
                c: -self.c,
                d: -self.d,
            }
        } else {
            self
        }
    }

    pub fn identity(field: &FieldData) -> MatO {
        MatO::new(field.one(), field.zero(), field.zero(), field.one()).unwrap()
    }

    /// `S = [[0, 1], [−1, 0]]`.
    pub fn s(field: &FieldData) -> MatO {
        MatO::new(field.zero(), field.one(), -field.one(), field.zero()).unwrap()
    }

    /// `T_u = [[1, u], [0, 1]]`.
    pub fn t(u: &QuadInt) -> MatO {
        let d = u.d();
        MatO::new(
            QuadInt::from_int(d, 1),
            u.clone(),
            QuadInt::from_int(d, 0),
            QuadInt::from_int(d, 1),
        )
        .unwrap()
    }

    /// `[[1, 0], [u, 1]]`.
    pub fn lower(u: &QuadInt) -> MatO {
        let d = u.d();
        MatO::new(
            QuadInt::from_int(d, 1),
            QuadInt::from_int(d, 0),
            u.clone(),
            QuadInt::from_int(d, 1),
        )
        .unwrap()
    }

    pub fn entries(&self) -> [&QuadInt; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn field_d(&self) -> u64 {
        self.a.d()
    }

    pub fn checked_mul(&self, o: &MatO) -> Result<MatO> {
        if self.field_d() != o.field_d() {
            return Err(Error::FieldMismatch {
                left: self.field_d(),
                right: o.field_d(),
            });
        }
        Ok(MatO {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
        .normalized())
    }

    pub fn inverse(&self) -> MatO {
        MatO {
            a: self.d.clone(),
            b: -&self.b,
            c: -&self.c,
            d: self.a.clone(),
        }
        .normalized()
    }

    /// Entrywise Galois conjugate `m^σ`.
    pub fn conj(&self) -> MatO {
        MatO {
            a: self.a.conj(),
            b: self.b.conj(),
            c: self.c.conj(),
            d: self.d.conj(),
        }
        .normalized()
    }

    pub fn trace(&self) -> QuadInt {
        &self.a + &self.d
    }

    pub fn antitrace(&self) -> QuadInt {
        &self.b + &self.c
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.d.is_one() && self.b.is_zero() && self.c.is_zero()
    }

    /// Entries as `[[p, q]; 4]` doubled coordinates, row-major.
    pub fn doubled_entries(&self) -> Vec<[String; 2]> {
        self.entries()
            .iter()
            .map(|e| [e.p().to_string(), e.q().to_string()])
            .collect()
    }
}

impl Mul for &MatO {
    type Output = MatO;
    fn mul(self, rhs: &MatO) -> MatO {
        self.checked_mul(rhs)
            .expect("matrices over different fields")
    }
}

impl Mul for MatO {
    type Output = MatO;
    fn mul(self, rhs: MatO) -> MatO {
        &self * &rhs
    }
}

/// Product of a word of matrices, left to right.
pub fn word(field: &FieldData, factors: &[&MatO]) -> MatO {
    factors
        .iter()
        .fold(MatO::identity(field), |acc, m| &acc * *m)
}

/// `a + d ∈ 2O` and `b + c ∈ 2O`.
pub fn in_gamma(m: &MatO) -> bool {
    m.trace().in_2o() && m.antitrace().in_2o()
}

/// Lower-left entry in `2O`.
pub fn in_gamma0_2(m: &MatO) -> bool {
    m.c.in_2o()
}

/// `g₂⁻¹ g₁ ∈ Γ`: both lie in the same left coset `gΓ`.
pub fn equivalent(g1: &MatO, g2: &MatO) -> Result<bool> {
    Ok(in_gamma(&g2.inverse().checked_mul(g1)?))
}

fn omega_set(field: &FieldData) -> Option<[QuadInt; 3]> {
    Some([field.one(), field.omega()?, field.omega_bar()?])
}

/// `η = 1 + √D` if `D ≡ 3 (mod 4)`, `η = √D` if `D ≡ 2 (mod 4)`.
pub fn eta(field: &FieldData) -> Option<QuadInt> {
    match field.d() % 4 {
        3 => Some(field.elem(1, 1)),
        2 => Some(field.elem(0, 1)),
        _ => None,
    }
}

/// The explicit coset representatives of `Γ_O / Γ`.
pub fn representatives(field: &FieldData) -> Vec<MatO> {
    let id = MatO::identity(field);
    let s = MatO::s(field);
    let t = |u: &QuadInt| MatO::t(u);
    let one = field.one();
    match field.ring_class() {
        RingClass::OtherModFour => {
            let eta = eta(field).expect("D ≢ 1 mod 4");
            let eta1 = &eta + &one;
            vec![
                id,
                t(&one),
                t(&eta),
                t(&eta1),
                &s * &t(&one),
                &s * &t(&eta1),
            ]
        }
        RingClass::OneModFour => {
            let omega = omega_set(field).expect("D ≡ 1 mod 4");
            let stars = [omega[1].clone(), omega[2].clone()];
            let mut reps = vec![id];
            reps.extend(omega.iter().map(&t));
            reps.extend(omega.iter().map(|u| &s * &t(u)));
            if field.d() % 8 == 1 {
                for v in &stars {
                    reps.push(word(field, &[&t(&one), &s, &t(v)]));
                }
            } else {
                for u in &omega {
                    for v in &stars {
                        reps.push(word(field, &[&t(u), &s, &t(v)]));
                    }
                }
                for v in &stars {
                    reps.push(word(field, &[&s, &t(v), &s, &t(v)]));
                }
            }
            reps
        }
    }
}

/// Default generators `{S, T₁, T_μ}` with `μ = ω` when `D ≡ 1 (mod 4)` and
/// `μ = √D` otherwise.
pub fn default_generators(field: &FieldData) -> Vec<MatO> {
    let mu = field.omega().unwrap_or_else(|| field.sqrt_elem());
    vec![MatO::s(field), MatO::t(&field.one()), MatO::t(&mu)]
}

/// Schreier graph of the action of `Γ_O` on the left cosets `Γ_O/Γ`.
#[derive(Debug, Clone, Serialize)]
pub struct CosetGraph {
    #[serde(skip)]
    pub representatives: Vec<MatO>,
    /// `edges[i][k]` is the coset of `generators[k] · representatives[i]`.
    pub edges: Vec<Vec<usize>>,
    pub closed: bool,
    /// BFS depth at which each coset was first reached.
    pub depth: Vec<usize>,
    /// True when the generator set is not known to generate `Γ_O`
    /// (`D ≢ 1 mod 4`), so the count is an index check only under that assumption.
    pub conditional_on_generation: bool,
}

impl CosetGraph {
    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }
}

/// Breadth-first enumeration of cosets, identifying cosets through
/// [`equivalent`] by linear scan.
pub fn coset_bfs(field: &FieldData, generators: &[MatO], depth_limit: usize) -> Result<CosetGraph> {
    let mut reps = vec![MatO::identity(field)];
    let mut depth = vec![0usize];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in generators {
            let h = g.checked_mul(&reps[i])?;
            let mut found = None;
            for (j, r) in reps.iter().enumerate() {
                if equivalent(&h, r)? {
                    found = Some(j);
                    break;
                }
            }
            let j = match found {
                Some(j) => j,
                None => {
                    if depth[i] + 1 > depth_limit {
                        return Err(Error::DepthExceeded(depth_limit));
                    }
                    reps.push(h);
                    depth.push(depth[i] + 1);
                    edges.push(Vec::new());
                    queue.push_back(reps.len() - 1);
                    reps.len() - 1
                }
            };
            edges[i].push(j);
        }
    }
    Ok(CosetGraph {
        representatives: reps,
        edges,
        closed: true,
        depth,
        conditional_on_generation: field.ring_class() == RingClass::OtherModFour,
    })
}

/// `(A, B, C, D)` with `A² + B² = C² + D² + 1`, parametrising
/// `τ = [[A+C, B+D], [D−B, A−C]] ∈ M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CayleyQuadruple {
    pub qa: QuadInt,
    pub qb: QuadInt,
    pub qc: QuadInt,
    pub qd: QuadInt,
}

impl CayleyQuadruple {
    pub fn is_valid(&self) -> bool {
        let lhs = &self.qa * &self.qa + &self.qb * &self.qb;
        let rhs = &self.qc * &self.qc + &self.qd * &self.qd;
        (lhs - rhs).is_one()
    }

    /// `u(τ(i), i) = C² + D²`.
    pub fn u_value(&self) -> QuadInt {
        &self.qc * &self.qc + &self.qd * &self.qd
    }
}

impl MatO {
    /// Forward Cayley map. Fails when `A² + B² ≠ C² + D² + 1`.
    pub fn from_cayley(q: &CayleyQuadruple) -> Result<MatO> {
        if !q.is_valid() {
            return Err(Error::NotInM);
        }
        MatO::new(&q.qa + &q.qc, &q.qb + &q.qd, &q.qd - &q.qb, &q.qa - &q.qc)
    }
}

/// Inverse Cayley map: `A = (a+d)/2`, `C = (a−d)/2`, `D = (b+c)/2`, `B = (b−c)/2`.
pub fn cayley(m: &MatO) -> Result<CayleyQuadruple> {
    let half = |x: QuadInt| x.half().ok_or(Error::NotInM);
    Ok(CayleyQuadruple {
        qa: half(&m.a + &m.d)?,
        qc: half(&m.a - &m.d)?,
        qd: half(&m.b + &m.c)?,
        qb: half(&m.b - &m.c)?,
    })
}

/// `u(τ(i), i)` as an element of O.
pub fn u_exact(m: &MatO) -> Result<QuadInt> {
    Ok(cayley(m)?.u_value())
}

fn u_at_i(a: f64, b: f64, c: f64, d: f64) -> f64 {
    // z = (a i + b)/(c i + d). Since ad − bc = 1, Im z = 1/|ci + d|²; forming
    // ad − bc in floating point would cancel catastrophically for large entries.
    let den = c * c + d * d;
    let re = (b * d + a * c) / den;
    let im = 1.0 / den;
    let dx = re;
    let dy = im - 1.0;
    (dx * dx + dy * dy) / (4.0 * im)
}

/// `(u(m(i), i), u(m^σ(i), i))` by the linear fractional action in floating point.
pub fn u_numeric(m: &MatO) -> (f64, f64) {
    let e = m.entries().map(|x| x.embed());
    let first = u_at_i(e[0].0, e[1].0, e[2].0, e[3].0);
    let second = u_at_i(e[0].1, e[1].1, e[2].1, e[3].1);
    (first, second)
}

/// A random element of O with doubled coordinates in `[-2k, 2k]`.
pub fn random_elem<R: Rng + ?Sized>(field: &FieldData, rng: &mut R, k: i64) -> QuadInt {
    match field.ring_class() {
        RingClass::OtherModFour => field.elem(rng.gen_range(-k..=k), rng.gen_range(-k..=k)),
        RingClass::OneModFour => {
            let p = rng.gen_range(-2 * k..=2 * k);
            let mut q = rng.gen_range(-2 * k..=2 * k);
            if (p - q) % 2 != 0 {
                q += 1;
            }
            field.doubled(p, q).unwrap()
        }
    }
}

/// A random element of Γ as a word in `S`, `T_{2u}` and `T₋₁ S T_u S T₁`.
pub fn random_gamma_element<R: Rng + ?Sized>(field: &FieldData, rng: &mut R, len: usize) -> MatO {
    let s = MatO::s(field);
    let one = field.one();
    let mut g = MatO::identity(field);
    for _ in 0..len {
        let f = match rng.gen_range(0..3) {
            0 => s.clone(),
            1 => MatO::t(&random_elem(field, rng, 2).scale(2)),
            _ => {
                let u = random_elem(field, rng, 2);
                word(
                    field,
                    &[&MatO::t(&-&one), &s, &MatO::t(&u), &s, &MatO::t(&one)],
                )
            }
        };
        g = &g * &f;
    }
    g
}

/// A random element of `Γ₀(2O)` as a word in `T_u` and `[[1,0],[2w,1]]`.
pub fn random_gamma0_element<R: Rng + ?Sized>(field: &FieldData, rng: &mut R, len: usize) -> MatO {
    let mut g = MatO::identity(field);
    for _ in 0..len {
        let f = if rng.gen_bool(0.5) {
            MatO::t(&random_elem(field, rng, 3))
        } else {
            MatO::lower(&random_elem(field, rng, 3).scale(2))
        };
        g = &g * &f;
    }
    g
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ConjugationReport {
    pub samples: usize,
    /// `C⁻¹ g C ∈ Γ` for sampled `g ∈ Γ₀(2O)`.
    pub gamma0_into_gamma: usize,
    /// `C γ C⁻¹ ∈ Γ₀(2O)` for sampled `γ ∈ Γ`.
    pub gamma_into_gamma0: usize,
}

impl ConjugationReport {
    pub fn all_pass(&self) -> bool {
        self.gamma0_into_gamma == self.samples && self.gamma_into_gamma0 == self.samples
    }
}

/// Samples both inclusions of `Γ = C⁻¹ Γ₀(2O) C` with `C = S T₁`.
pub fn verify_conjugation<R: Rng + ?Sized>(
    field: &FieldData,
    samples: usize,
    rng: &mut R,
) -> Result<ConjugationReport> {
    if field.d() % 8 == 5 {
        return Err(Error::WrongCongruenceClass(field.d()));
    }
    let c = &MatO::s(field) * &MatO::t(&field.one());
    let c_inv = c.inverse();
    let mut report = ConjugationReport {
        samples,
        ..Default::default()
    };
    for _ in 0..samples {
        let len = rng.gen_range(1..=6);
        let g = random_gamma0_element(field, rng, len);
        debug_assert!(in_gamma0_2(&g));
        if in_gamma(&word(field, &[&c_inv, &g, &c])) {
            report.gamma0_into_gamma += 1;
        }
        let gamma = random_gamma_element(field, rng, len);
        debug_assert!(in_gamma(&gamma));
        if in_gamma0_2(&word(field, &[&c, &gamma, &c_inv])) {
            report.gamma_into_gamma0 += 1;
        }
    }
    Ok(report)
}

/// Summary of a coset computation, as printed by the command-line tool.
#[derive(Debug, Clone, Serialize)]
pub struct CosetSummary {
    pub d: u64,
    pub index_formula: i64,
    pub bfs_count: usize,
    pub closed: bool,
    pub conditional_on_generation: bool,
    pub representatives_inequivalent: bool,
    pub bfs_matches_representatives: bool,
    pub representatives: Vec<Vec<[String; 2]>>,
}

pub fn coset_summary(field: &FieldData, depth_limit: usize) -> Result<CosetSummary> {
    let graph = coset_bfs(field, &default_generators(field), depth_limit)?;
    let reps = representatives(field);
    let mut inequivalent = true;
    for i in 0..reps.len() {
        for j in 0..i {
            if equivalent(&reps[i], &reps[j])? {
                inequivalent = false;
            }
        }
    }
    let mut matches = graph.len() == reps.len();
    for g in &graph.representatives {
        let mut hits = 0;
        for r in &reps {
            if equivalent(g, r)? {
                hits += 1;
            }
        }
        matches &= hits == 1;
    }
    Ok(CosetSummary {
        d: field.d(),
        index_formula: index_gamma(field),
        bfs_count: graph.len(),
        closed: graph.closed,
        conditional_on_generation: graph.conditional_on_generation,
        representatives_inequivalent: inequivalent,
        bfs_matches_representatives: matches,
        representatives: reps.iter().map(|m| m.doubled_entries()).collect(),
    })
}
