//! Argument parsing and command dispatch for the `quadcorr` binary.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 for invalid input
//! and 3 when a memory budget or scale guard refuses the computation.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use quadcorr::character::{c_constant, covolume_with_terms, default_l_terms, index_gamma};
use quadcorr::corrsum::{
    build_rep_table, correlation_group_oracle, correlation_with, deviation_curve, g_ratio,
    BoxBound, CorrelationOptions, TableOptions, DEFAULT_MEMORY_BUDGET,
};
use quadcorr::hilbertgroup::{
    coset_summary, random_gamma_element, u_exact, u_numeric, verify_conjugation,
};
use quadcorr::repcount::{r_brute, r_sym, symmetry_counts};
use quadcorr::{Error, FieldData};

/// Environment variable overriding the table memory budget, in bytes.
pub const MEM_BUDGET_VAR: &str = "QUADCORR_MEM_BUDGET";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

pub const TABLE_C_FIELDS: [u64; 10] = [2, 3, 5, 6, 7, 101, 1001, 10001, 100001, 1000001];

#[derive(Debug, Parser)]
#[command(
    name = "quadcorr",
    version,
    about = "Sums of two squares and their correlations in real quadratic fields"
)]
pub struct Cli {
    /// Print results as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads for table construction (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    Table,
    Group,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The constant C_D.
    Constant {
        #[arg(long)]
        d: i64,
    },
    /// Values of the character χ_D on one period.
    Chi {
        #[arg(long)]
        d: i64,
    },
    /// The covolume of Γ in three independent forms.
    Volume {
        #[arg(long)]
        d: i64,
        /// Terms of the Dirichlet series for L(2, χ).
        #[arg(long)]
        terms: Option<u64>,
    },
    /// The index [Γ_O : Γ].
    Index {
        #[arg(long)]
        d: i64,
    },
    /// Coset enumeration of Γ_O / Γ.
    Cosets {
        #[arg(long)]
        d: i64,
        #[arg(long, default_value_t = 8)]
        depth: usize,
    },
    /// r(λ) for λ = (p + q√D)/2.
    Rcount {
        #[arg(long)]
        d: i64,
        #[arg(long, allow_hyphen_values = true)]
        p: i64,
        #[arg(long, allow_hyphen_values = true)]
        q: i64,
    },
    /// The correlation sum N_D(V₁, V₂).
    Correlate {
        #[arg(long)]
        d: i64,
        /// Rational bound such as 10, 5/2 or 1.25, or invsqrt:V for V^{-1/2}.
        #[arg(long)]
        v1: String,
        #[arg(long)]
        v2: String,
        #[arg(long, value_enum, default_value_t = Oracle::Table)]
        oracle: Oracle,
        /// Leave out the λ = 0 term.
        #[arg(long)]
        exclude_zero: bool,
        /// Also write the representation table to this CSV file.
        #[arg(long)]
        csv: Option<String>,
    },
    /// Deviations F(x) = max |N(V,V) − C_D V²|.
    TableF {
        #[arg(long, default_value_t = 2)]
        d: i64,
        #[arg(long, value_delimiter = ',', default_values_t = [5000u64, 10000])]
        x: Vec<u64>,
    },
    /// Ratios N(v, v^{-1/2}) / (C_D √v).
    TableG {
        #[arg(long, default_value_t = 2)]
        d: i64,
        #[arg(long, value_delimiter = ',', default_values_t = [10000u64, 20000, 30000, 40000, 50000])]
        v: Vec<u64>,
    },
    /// C_D for a list of fields.
    TableC {
        #[arg(long, value_delimiter = ',', default_values_t = TABLE_C_FIELDS)]
        d: Vec<u64>,
    },
    /// Run the structural self-checks for one field.
    Verify {
        #[arg(long)]
        d: i64,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Settings shared by all commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub json: bool,
    pub threads: usize,
    pub memory_budget: u64,
}

impl RunConfig {
    /// Reads the memory budget from the environment.
    pub fn from_env(json: bool, threads: usize) -> Result<RunConfig, String> {
        let memory_budget = match std::env::var(MEM_BUDGET_VAR) {
            Ok(s) => s
                .trim()
                .parse()
                .map_err(|_| format!("{MEM_BUDGET_VAR}={s} is not a byte count"))?,
            Err(_) => DEFAULT_MEMORY_BUDGET,
        };
        Ok(RunConfig {
            json,
            threads,
            memory_budget,
        })
    }

    fn table_options(&self) -> TableOptions {
        TableOptions {
            threads: self.threads,
            memory_budget: self.memory_budget,
            fold: None,
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Capacity(String),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CapacityExceeded { .. } | Error::ScaleGuard { .. } => {
                CliError::Capacity(e.to_string())
            }
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses an integer, `NUM/DEN` or a terminating decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("cannot parse {s:?} as a number"));
        }
        let n = BigInt::from_str(&digits).unwrap();
        let r = BigRational::new(n, BigInt::from(10u32).pow(frac.len() as u32));
        return Ok(if neg { -r } else { r });
    }
    BigRational::from_str(s).map_err(|_| format!("cannot parse {s:?} as a number"))
}

/// Parses a box bound: a positive rational, or `invsqrt:V` for `V^{-1/2}`.
pub fn parse_bound(s: &str) -> Result<BoxBound, String> {
    let res = match s.trim().strip_prefix("invsqrt:") {
        Some(v) => BoxBound::inv_sqrt(&parse_rational(v)?),
        None => BoxBound::rational(parse_rational(s)?),
    };
    res.map_err(|e| e.to_string())
}

fn field(d: i64) -> CliResult<FieldData> {
    Ok(FieldData::new(d)?)
}

fn emit<T: Serialize>(
    out: &mut dyn Write,
    cfg: &RunConfig,
    value: &T,
    text: impl FnOnce() -> String,
) -> CliResult<()> {
    if cfg.json {
        serde_json::to_writer_pretty(&mut *out, value)?;
        writeln!(out)?;
    } else {
        writeln!(out, "{}", text())?;
    }
    Ok(())
}

fn rational_json(r: &BigRational) -> serde_json::Value {
    json!({ "num": r.numer().to_string(), "den": r.denom().to_string(), "value": r.to_f64() })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let cfg = match RunConfig::from_env(cli.json, cli.threads) {
        Ok(cfg) => cfg,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_INVALID;
        }
    };
    match dispatch(&cli.command, &cfg, out) {
        Ok(code) => code,
        Err(CliError::Invalid(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INVALID
        }
        Err(CliError::Capacity(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_CAPACITY
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILED
        }
    }
}

pub fn dispatch(cmd: &Command, cfg: &RunConfig, out: &mut dyn Write) -> CliResult<i32> {
    match cmd {
        Command::Constant { d } => {
            let f = field(*d)?;
            let c = c_constant(&f);
            emit(
                out,
                cfg,
                &json!({ "d": f.d(), "c_constant": rational_json(&c) }),
                || c.to_string(),
            )?;
        }
        Command::Chi { d } => {
            let f = field(*d)?;
            let values: Vec<(u64, i8)> = f.chi_values().collect();
            emit(
                out,
                cfg,
                &json!({ "d": f.d(), "delta": f.delta(), "chi": values }),
                || {
                    values
                        .iter()
                        .map(|(n, c)| format!("{n} {c}"))
                        .collect::<Vec<_>>()
                        .join("\n")
                },
            )?;
        }
        Command::Volume { d, terms } => {
            let f = field(*d)?;
            let report = covolume_with_terms(&f, terms.unwrap_or_else(|| default_l_terms(&f)));
            let agrees = report.agrees();
            emit(
                out,
                cfg,
                &json!({ "report": &report, "agrees": agrees }),
                || {
                    format!(
                    "closed    {:.12}\nsiegel    {:.12}\nbernoulli {:.12}\ntolerance {:.3e}\nagree     {}",
                    report.closed_form,
                    report.siegel_form,
                    report.bernoulli_form,
                    report.tolerance(),
                    agrees
                )
                },
            )?;
            if !agrees {
                return Ok(EXIT_FAILED);
            }
        }
        Command::Index { d } => {
            let f = field(*d)?;
            let i = index_gamma(&f);
            emit(out, cfg, &json!({ "d": f.d(), "index": i }), || {
                i.to_string()
            })?;
        }
        Command::Cosets { d, depth } => {
            let f = field(*d)?;
            let summary = coset_summary(&f, *depth)?;
            emit(out, cfg, &summary, || {
                let mut s = format!(
                    "cosets {} (index formula {})\nrepresentatives inequivalent {}\nbfs matches representatives {}",
                    summary.bfs_count,
                    summary.index_formula,
                    summary.representatives_inequivalent,
                    summary.bfs_matches_representatives
                );
                if summary.conditional_on_generation {
                    s.push_str("\nconditional on {S, T_1, T_sqrtD} generating the group");
                }
                s
            })?;
            if summary.bfs_count as i64 != summary.index_formula
                || !summary.bfs_matches_representatives
            {
                return Ok(EXIT_FAILED);
            }
        }
        Command::Rcount { d, p, q } => {
            let f = field(*d)?;
            let lam = f.doubled(*p, *q)?;
            let sym = symmetry_counts(&f, &lam)?;
            let r = if lam.is_zero() { 1 } else { sym.total() };
            emit(
                out,
                cfg,
                &json!({ "d": f.d(), "lambda": lam.to_string(), "r": r, "classes": sym }),
                || format!("r({lam}) = {r}"),
            )?;
            if r != r_brute(&f, &lam)? {
                return Ok(EXIT_FAILED);
            }
        }
        Command::Correlate {
            d,
            v1,
            v2,
            oracle,
            exclude_zero,
            csv,
        } => {
            let f = field(*d)?;
            let b1 = parse_bound(v1).map_err(CliError::Invalid)?;
            let b2 = parse_bound(v2).map_err(CliError::Invalid)?;
            let opts = CorrelationOptions {
                table: cfg.table_options(),
                include_lambda_zero: !exclude_zero,
            };
            let res = correlation_with(&f, &b1, &b2, &opts)?;
            if let Some(path) = csv {
                let table = build_rep_table(&f, &b1, &b2, &opts.table)?;
                table.write_csv(BufWriter::new(File::create(path)?))?;
            }
            let group = match oracle {
                Oracle::Group => {
                    let g = correlation_group_oracle(&f, &b1, &b2)?;
                    // r(0) r(1) = r(1)
                    let g = if *exclude_zero {
                        g - r_sym(&f, &f.one())? as u128
                    } else {
                        g
                    };
                    Some(g)
                }
                Oracle::Table => None,
            };
            let mut value = serde_json::to_value(res.export())?;
            if let Some(g) = group {
                value["group_oracle"] = json!(g.to_string());
            }
            emit(out, cfg, &value, || {
                let mut s = format!(
                    "N = {}\nC_D = {}\ndeviation = {}",
                    res.n_value, res.c_constant, res.deviation
                );
                if let Some(g) = group {
                    s.push_str(&format!("\ngroup oracle = {g}"));
                }
                s
            })?;
            if group.is_some_and(|g| g != res.n_value) {
                return Ok(EXIT_FAILED);
            }
        }
        Command::TableF { d, x } => {
            let f = field(*d)?;
            let xmax = *x
                .iter()
                .max()
                .ok_or_else(|| CliError::Invalid("no x given".into()))?;
            let curve = deviation_curve(&f, xmax, &cfg.table_options())?;
            let rows: Vec<_> = x
                .iter()
                .map(|&x| {
                    let (fi, at) = curve.sup(x as usize, false);
                    let (fr, at_r) = curve.sup_real(x as usize);
                    json!({ "x": x, "f": fi.to_string(), "attained_at": at, "f_real": fr.to_string(), "real_attained_near": at_r })
                })
                .collect();
            emit(out, cfg, &rows, || {
                let mut s = String::from("x F(x) argmax F_real(x)");
                for r in &rows {
                    s.push_str(&format!(
                        "\n{} {} {} {}",
                        r["x"],
                        r["f"].as_str().unwrap(),
                        r["attained_at"],
                        r["f_real"].as_str().unwrap()
                    ));
                }
                s
            })?;
        }
        Command::TableG { d, v } => {
            let f = field(*d)?;
            let rows = v
                .iter()
                .map(|&v| g_ratio(&f, v, &cfg.table_options()))
                .collect::<Result<Vec<_>, _>>()?;
            emit(out, cfg, &rows, || {
                let mut s = String::from("v N G(v)");
                for r in &rows {
                    s.push_str(&format!("\n{} {} {:.6}", r.v, r.n_value, r.ratio));
                }
                s
            })?;
        }
        Command::TableC { d } => {
            let mut rows = Vec::new();
            for &d in d {
                let f = field(
                    i64::try_from(d)
                        .map_err(|_| CliError::Invalid(format!("D = {d} too large")))?,
                )?;
                rows.push((d, c_constant(&f)));
            }
            let value: Vec<_> = rows
                .iter()
                .map(|(d, c)| json!({ "d": d, "c_constant": rational_json(c) }))
                .collect();
            emit(out, cfg, &value, || {
                rows.iter()
                    .map(|(d, c)| format!("{d} {c}"))
                    .collect::<Vec<_>>()
                    .join("\n")
            })?;
        }
        Command::Verify { d, samples, seed } => {
            let f = field(*d)?;
            let report = verify_field(&f, *samples, *seed)?;
            let pass = report.all_pass();
            emit(out, cfg, &report, || {
                let mut s = format!(
                    "volume forms agree {}\ncosets {} / index {}\nu identity {}/{}",
                    report.volume_agrees,
                    report.cosets,
                    report.index,
                    report.u_identity_pass,
                    report.samples
                );
                match &report.conjugation {
                    Some((a, b)) => s.push_str(&format!(
                        "\nconjugation {a}/{} and {b}/{}",
                        report.samples, report.samples
                    )),
                    None => s.push_str("\nconjugation not applicable (8 | D - 5)"),
                }
                s
            })?;
            if !pass {
                return Ok(EXIT_FAILED);
            }
        }
    }
    Ok(EXIT_OK)
}

/// Outcome of [`verify_field`].
#[derive(Debug, Clone, Serialize)]
pub struct FieldReport {
    pub d: u64,
    pub samples: usize,
    pub volume_agrees: bool,
    pub index: i64,
    pub cosets: usize,
    pub cosets_match: bool,
    pub u_identity_pass: usize,
    /// Passing counts for both inclusions, absent when `8 | D − 5`.
    pub conjugation: Option<(usize, usize)>,
}

impl FieldReport {
    pub fn all_pass(&self) -> bool {
        self.volume_agrees
            && self.cosets_match
            && self.u_identity_pass == self.samples
            && self
                .conjugation
                .is_none_or(|(a, b)| a == self.samples && b == self.samples)
    }
}

pub fn verify_field(f: &FieldData, samples: usize, seed: u64) -> CliResult<FieldReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let volume_agrees = covolume_with_terms(f, default_l_terms(f)).agrees();
    let cosets = coset_summary(f, 8)?;
    let mut u_pass = 0;
    for _ in 0..samples {
        let m = random_gamma_element(f, &mut rng, 5);
        if u_identity_holds(&m)? {
            u_pass += 1;
        }
    }
    let conjugation = match verify_conjugation(f, samples, &mut rng) {
        Ok(r) => Some((r.gamma0_into_gamma, r.gamma_into_gamma0)),
        Err(Error::WrongCongruenceClass(_)) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(FieldReport {
        d: f.d(),
        samples,
        volume_agrees,
        index: cosets.index_formula,
        cosets: cosets.bfs_count,
        cosets_match: cosets.bfs_count as i64 == cosets.index_formula
            && cosets.bfs_matches_representatives,
        u_identity_pass: u_pass,
        conjugation,
    })
}

/// Compares the exact `u(τ(i), i)` with the floating-point linear fractional action
/// in both embeddings, to relative tolerance `1e-9`.
pub fn u_identity_holds(m: &quadcorr::hilbertgroup::MatO) -> Result<bool, Error> {
    let (e1, e2) = u_exact(m)?.embed();
    let (n1, n2) = u_numeric(m);
    Ok((e1 - n1).abs() <= 1e-9 * e1.abs().max(1.0) && (e2 - n2).abs() <= 1e-9 * e2.abs().max(1.0))
}
