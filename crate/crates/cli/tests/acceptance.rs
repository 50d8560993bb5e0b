//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line; the
//! target runs without the libtest harness so the lines are never captured.

use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use quadcorr::character::{c_constant_bounds, covolume};
use quadcorr::corrsum::{
    correlation, correlation_group_oracle, correlation_with, deviation_curve, g_ratio, BoxBound,
    CorrelationOptions, TableOptions,
};
use quadcorr::hilbertgroup::{coset_bfs, default_generators, random_gamma_element};
use quadcorr::quadfield::is_squarefree;
use quadcorr::repcount::{r_brute, r_sym};
use quadcorr::{FieldData, RingClass};
use quadcorr_cli::{run, u_identity_holds};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn field(d: i64) -> FieldData {
    FieldData::new(d).unwrap()
}

fn int(n: u64) -> BoxBound {
    BoxBound::integer(n).unwrap()
}

fn table_c() -> Outcome {
    let expected = [
        (2, "8"),
        (3, "4"),
        (5, "8"),
        (6, "4/3"),
        (7, "1"),
        (101, "8/95"),
        (1001, "2/753"),
        (10001, "1/11616"),
        (100001, "4/1462371"),
        (1000001, "1/11832936"),
    ];
    let mut out = Vec::new();
    let code = run(["quadcorr", "table-c"], &mut out, &mut Vec::new());
    let text = String::from_utf8(out).unwrap();
    let got: Vec<(u64, String)> = text
        .lines()
        .map(|l| {
            let (d, c) = l.split_once(' ').unwrap();
            (d.parse().unwrap(), c.to_string())
        })
        .collect();
    let want: Vec<(u64, String)> = expected.iter().map(|&(d, c)| (d, c.to_string())).collect();
    outcome(code == 0 && got == want, format!("{} values", got.len()))
}

fn cosets() -> Outcome {
    let mut worst = Duration::ZERO;
    let mut counts = Vec::new();
    let mut pass = true;
    for (d, want) in [(2, 6), (3, 6), (17, 9), (5, 15), (13, 15)] {
        let f = field(d);
        let t = Instant::now();
        let g = coset_bfs(&f, &default_generators(&f), 8).unwrap();
        worst = worst.max(t.elapsed());
        pass &= g.len() == want && g.closed;
        if f.ring_class() == RingClass::OtherModFour {
            pass &= g.conditional_on_generation;
        }
        counts.push(g.len());
    }
    pass &= worst < Duration::from_secs(1);
    outcome(pass, format!("counts {counts:?}, slowest {worst:.2?}"))
}

fn volumes() -> Outcome {
    let mut pass = true;
    let mut worst = 0.0f64;
    for d in [2, 3, 5, 6, 7, 13, 17] {
        let r = covolume(&field(d));
        pass &= r.agrees();
        worst = worst
            .max((r.closed_form - r.siegel_form).abs())
            .max((r.closed_form - r.bernoulli_form).abs());
    }
    outcome(pass, format!("max spread {worst:.2e}"))
}

fn symmetry_vs_brute() -> Outcome {
    let mut checked = 0;
    let mut mismatches = 0;
    for d in [2i64, 3, 5, 13, 17] {
        let f = field(d);
        let sqrt_d = (d as f64).sqrt();
        let doubled = f.ring_class() == RingClass::OneModFour;
        for p in 0..=200i64 {
            let qmax = (p as f64 / sqrt_d) as i64 + 1;
            for q in -qmax..=qmax {
                let in_o = if doubled {
                    (p - q) % 2 == 0
                } else {
                    p % 2 == 0 && q % 2 == 0
                };
                if !in_o {
                    continue;
                }
                let lam = f.doubled(p, q).unwrap();
                let (a, b) = lam.embed();
                if !(a >= 0.0 && b >= 0.0 && a < 50.0 && b < 50.0) {
                    continue;
                }
                checked += 1;
                if r_sym(&f, &lam).unwrap() != r_brute(&f, &lam).unwrap() {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("{checked} values of λ, {mismatches} mismatches"),
    )
}

fn group_oracle() -> Outcome {
    let mut mismatches = 0;
    for d in [2, 5] {
        let f = field(d);
        for v1 in 1..=20 {
            for v2 in 1..=20 {
                let (b1, b2) = (int(v1), int(v2));
                let n = correlation(&f, &b1, &b2).unwrap().n_value;
                if correlation_group_oracle(&f, &b1, &b2).unwrap() != n {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(
        mismatches == 0,
        format!("800 boxes, {mismatches} mismatches"),
    )
}

fn f_table() -> Outcome {
    let curve = deviation_curve(&field(2), 10000, &TableOptions::default()).unwrap();
    let (f5, at5) = curve.sup(5000, false);
    let (f10, at10) = curve.sup(10000, false);
    let (i5, _) = curve.sup(5000, true);
    let (i10, _) = curve.sup(10000, true);
    let (r5, _) = curve.sup_real(5000);
    let (r10, _) = curve.sup_real(10000);
    let pass = f5.to_string() == "124508" && f10.to_string() == "383780";
    outcome(
        pass,
        format!("F(5000)={f5} at V={at5}, F(10000)={f10} at V={at10}; V≤x: {i5}, {i10}; real V: {r5}, {r10}"),
    )
}

fn g_table() -> Outcome {
    let expected = [
        (10000, "836", 1.045000),
        (20000, "1220", 1.078337),
        (30000, "1476", 1.065211),
        (40000, "1540", 0.962500),
        (50000, "1924", 1.075548),
    ];
    let f = field(2);
    let mut pass = true;
    let mut got = Vec::new();
    for (v, n, g) in expected {
        let row = g_ratio(&f, v, &TableOptions::default()).unwrap();
        pass &= row.n_value == n && (row.ratio - g).abs() <= 1e-6;
        got.push(row.n_value);
    }
    outcome(pass, format!("N = {}", got.join(", ")))
}

fn c_bounds() -> Outcome {
    let mut fields = 0;
    let mut failures = Vec::new();
    for d in 2..=10_000u64 {
        if !is_squarefree(d) {
            continue;
        }
        fields += 1;
        let (lower, upper) = c_constant_bounds(&field(d as i64));
        if !(lower && upper) {
            failures.push(d);
        }
    }
    outcome(
        failures.is_empty(),
        format!("{fields} fields, failures {failures:?}"),
    )
}

fn growth_d2() -> Outcome {
    let curve = deviation_curve(&field(2), 5000, &TableOptions::default()).unwrap();
    let mut worst_err = 0.0f64;
    let (mut lo, mut hi) = (f64::MAX, f64::MIN);
    for v in 1..=5000usize {
        let dev = curve.deviation(v).to_f64().unwrap().abs();
        worst_err = worst_err.max(dev / (v as f64).powf(1.5));
        if v >= 2000 {
            let ratio = curve.n[v] as f64 / (8.0 * (v * v) as f64);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    let pass = worst_err <= 10.0 && lo >= 0.9 && hi <= 1.1;
    outcome(
        pass,
        format!("max |N−8V²|/V^1.5 = {worst_err:.3}, ratio in [{lo:.4}, {hi:.4}]"),
    )
}

fn u_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut failures = 0;
    let mut total = 0;
    for d in [2, 3, 5, 13, 17] {
        let f = field(d);
        for _ in 0..10_000 {
            let m = random_gamma_element(&f, &mut rng, 5);
            total += 1;
            if !u_identity_holds(&m).unwrap() {
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0,
        format!("{total} elements, {failures} failures"),
    )
}

fn thread_determinism() -> Outcome {
    let f = field(2);
    let b = int(2000);
    let values: Vec<u128> = [1, 4, 16]
        .iter()
        .map(|&threads| {
            let opts = CorrelationOptions {
                table: TableOptions {
                    threads,
                    ..Default::default()
                },
                ..Default::default()
            };
            correlation_with(&f, &b, &b, &opts).unwrap().n_value
        })
        .collect();
    outcome(
        values.windows(2).all(|w| w[0] == w[1]),
        format!("N = {values:?}"),
    )
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, u64, Check); 11] = [
        ("table-c reproduces C_D for ten fields", 10, table_c),
        ("coset BFS gives 6/6/9/15/15 for D = 2/3/17/5/13", 5, cosets),
        (
            "three covolume forms agree for D in {2,3,5,6,7,13,17}",
            5,
            volumes,
        ),
        (
            "r_sym = r_brute on 0 ≤ λ, λ^σ < 50 for D in {2,3,5,13,17}",
            60,
            symmetry_vs_brute,
        ),
        (
            "group oracle = correlation sum on {1..20}² for D in {2,5}",
            120,
            group_oracle,
        ),
        (
            "F(5000) = 124508 and F(10000) = 383780 for D = 2",
            300,
            f_table,
        ),
        (
            "G-table counts 836/1220/1476/1540/1924 for D = 2",
            120,
            g_table,
        ),
        (
            "(192/5)² < C_D² Δ³ < 240² for squarefree 1 < D ≤ 10⁴",
            30,
            c_bounds,
        ),
        (
            "|N(V,V) − 8V²| ≤ 10 V^1.5 for V ≤ 5000, ratio within 10% for V ≥ 2000",
            60,
            growth_d2,
        ),
        (
            "u(τ(i), i) = C² + D² for 5·10⁴ random elements of M",
            60,
            u_identity,
        ),
        (
            "N(2000, 2000) identical for 1, 4 and 16 threads",
            120,
            thread_determinism,
        ),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let pass = result.pass && in_time;
        println!(
            "{} {:>2}. {name} ({elapsed:.2?}, limit {limit}s): {}",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
