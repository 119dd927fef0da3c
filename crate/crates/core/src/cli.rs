//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classify::{
    classify_all, count_bad, count_bad_closed_form, count_bad_naive_bound, write_csv,
    BlockInstantiation, ClassifyError, Route, DEFAULT_ORACLE_BUDGET,
};
use crate::code::{
    build_code_with, code_dimension, redundancy_exponent, trace_code, write_bit_matrix,
    write_fq_matrix, BuildOptions, CodeDescriptor, CodeError, DEFAULT_MAX_MATRIX_BYTES,
};
use crate::field::{
    make_coset_family, make_field, plan_dyadic_parameters, CosetFamily, FieldElement, FieldError,
};
use crate::repair::{
    build_repair_plan, simulate_parallel_reads, verify_drgp, verify_drgp_binary, DrgpReport,
    RepairError, RepairPlan,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_RESOURCE: u8 = 3;

/// Trade-off exponents of other constructions, shown for comparison only.
const REFERENCE_EXPONENTS: [f64; 4] = [0.714, 0.750, 0.792, 0.500];

#[derive(Debug, Parser)]
#[command(name = "wedgelift", version, about = "Wedge-lifted codes over GF(2^l) and their repair groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every monomial as good or bad and compare with the closed form.
    Classify {
        #[command(flatten)]
        family: FamilyArgs,
        /// Use the brute-force wedge oracle instead of a combinatorial criterion.
        #[arg(long)]
        oracle: bool,
        /// Oracle evaluation budget.
        #[arg(long, default_value_t = DEFAULT_ORACLE_BUDGET)]
        budget: u64,
        /// Write classify.csv here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Build the code and write its descriptor and matrices.
    Build {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also build the binary trace code.
        #[arg(long)]
        binary: bool,
        /// Only compute the dimension; nothing is written.
        #[arg(long)]
        dimension_only: bool,
        /// Memory guard for the parity-check matrix, in bytes.
        #[arg(long, default_value_t = DEFAULT_MAX_MATRIX_BYTES)]
        max_matrix_bytes: u128,
    },
    /// Check the disjoint repair groups on random codewords.
    Verify {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Also verify the binary trace code.
        #[arg(long)]
        binary: bool,
        /// Corrupt the first repair group of coordinate 0 before verifying.
        #[arg(long)]
        inject_fault: bool,
        /// Write verify.json here instead of printing it.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Print redundancy exponents for alpha = 1/(2d).
    Table {
        #[arg(long, default_value_t = 10)]
        max_d: u32,
    },
    /// Choose (q, h, t) for a dyadic alpha.
    Plan {
        /// alpha as p/2^k with 0 < alpha < 1/2.
        #[arg(long)]
        alpha: String,
        /// Scale: the extension degree is n times the denominator of 1 - 2 alpha.
        #[arg(long, default_value_t = 1)]
        n: u32,
    },
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// Extension degree of GF(2^l).
    #[arg(long)]
    pub ell: Option<u32>,
    /// Order of the multiplicative subgroup H.
    #[arg(long)]
    pub subgroup_order: Option<usize>,
    /// Block instantiation: q = 2^(l' d), |H| = (q-1)/(2^l' - 1).
    #[arg(long)]
    pub ell_prime: Option<u32>,
    #[arg(long)]
    pub d: Option<u32>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Resource(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Resource(_) => EXIT_RESOURCE,
            CliError::Failed(_) => EXIT_VERIFY,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Resource(m) | CliError::Failed(m) => m,
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::OracleInfeasible { .. } => CliError::Resource(e.to_string()),
            ClassifyError::ExponentRange { .. } | ClassifyError::BadInstantiation(_) => {
                CliError::Usage(e.to_string())
            }
            ClassifyError::Csv(_) | ClassifyError::Io(_) => CliError::Failed(e.to_string()),
        }
    }
}

impl From<CodeError> for CliError {
    fn from(e: CodeError) -> Self {
        match e {
            CodeError::ResourceGuard { .. } | CodeError::TooLarge { .. } => {
                CliError::Resource(e.to_string())
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<RepairError> for CliError {
    fn from(e: RepairError) -> Self {
        match e {
            RepairError::TooManyReads { .. } | RepairError::BadCoordinate { .. } | RepairError::NoTrials => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(format!("io: {e}"))
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<(), CliError> {
    match cli.command {
        Command::Classify {
            family,
            oracle,
            budget,
            out_dir,
        } => cmd_classify(&family, oracle, budget, out_dir.as_deref(), out),
        Command::Build {
            family,
            out_dir,
            binary,
            dimension_only,
            max_matrix_bytes,
        } => cmd_build(&family, &out_dir, binary, dimension_only, max_matrix_bytes, out),
        Command::Verify {
            family,
            seed,
            trials,
            binary,
            inject_fault,
            out_dir,
        } => cmd_verify(&family, seed, trials, binary, inject_fault, out_dir.as_deref(), out),
        Command::Table { max_d } => cmd_table(max_d, out),
        Command::Plan { alpha, n } => cmd_plan(&alpha, n, out),
    }
}

/// The coset family named by the flags, plus its block parameters if any.
pub fn resolve_family(args: &FamilyArgs) -> Result<(CosetFamily, Option<BlockInstantiation>), CliError> {
    let explicit = args.ell.is_some() || args.subgroup_order.is_some();
    let block = args.ell_prime.is_some() || args.d.is_some();
    let (ell, h, inst) = match (explicit, block) {
        (true, false) => match (args.ell, args.subgroup_order) {
            (Some(ell), Some(h)) => (ell, h, BlockInstantiation::detect(ell, h as u64)),
            _ => return Err(CliError::Usage("--ell and --subgroup-order go together".into())),
        },
        (false, true) => match (args.ell_prime, args.d) {
            (Some(lp), Some(d)) => {
                let inst = BlockInstantiation::new(lp, d)?;
                if inst.ell() > crate::field::MAX_ELL {
                    return Err(CliError::Usage(format!("l' d = {} is too large", inst.ell())));
                }
                (inst.ell(), inst.subgroup_order() as usize, Some(inst))
            }
            _ => return Err(CliError::Usage("--ell-prime and --d go together".into())),
        },
        _ => {
            return Err(CliError::Usage(
                "give exactly one of (--ell, --subgroup-order) or (--ell-prime, --d)".into(),
            ))
        }
    };
    let field = make_field(ell)?;
    Ok((make_coset_family(&field, h)?, inst))
}

fn family_line(family: &CosetFamily) -> String {
    let q = family.field().q();
    format!(
        "q={q} ell={} h={} t={} N={}",
        family.field().ell(),
        family.subgroup_order(),
        family.count(),
        q * q
    )
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| CliError::from(e.error))?;
    Ok(())
}

fn cmd_classify<W: Write>(
    args: &FamilyArgs,
    oracle: bool,
    budget: u64,
    out_dir: Option<&Path>,
    out: &mut W,
) -> Result<(), CliError> {
    let (family, inst) = resolve_family(args)?;
    let route = match (oracle, inst) {
        (true, _) => Route::Oracle,
        (false, Some(_)) => Route::Block,
        (false, None) => Route::Coset,
    };
    let rows = classify_all(&family, route, budget)?;
    let bad = rows.iter().filter(|c| c.bad).count();
    let coset_bad = count_bad(&family);

    writeln!(out, "{} route={}", family_line(&family), route.name())?;
    let mut summary = format!("bad={bad}");
    let closed = inst.map(|i| count_bad_closed_form(i.ell_prime, i.d));
    if let Some(c) = closed {
        write!(summary, " closed_form={c}").unwrap();
    }
    write!(summary, " naive_bound={}", count_bad_naive_bound(&family)).unwrap();
    writeln!(out, "{summary}")?;

    if let Some(dir) = out_dir {
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows)?;
        write_atomic(dir, "classify.csv", &buf)?;
    }
    if bad != coset_bad {
        return Err(CliError::Failed(format!(
            "route {} counts {bad} bad monomials, the coset criterion {coset_bad}",
            route.name()
        )));
    }
    if let Some(c) = closed.filter(|&c| c != bad as u64) {
        return Err(CliError::Failed(format!("exact count {bad} differs from closed form {c}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct BuildSummary {
    #[serde(flatten)]
    descriptor: CodeDescriptor,
    q: usize,
    length: usize,
    t: usize,
    dimension: usize,
    redundancy: usize,
    bad_monomials: usize,
    good_monomials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    binary_dimension: Option<usize>,
}

fn cmd_build<W: Write>(
    args: &FamilyArgs,
    out_dir: &Path,
    binary: bool,
    dimension_only: bool,
    max_matrix_bytes: u128,
    out: &mut W,
) -> Result<(), CliError> {
    let (family, _) = resolve_family(args)?;
    let q = family.field().q();
    let n = q * q;
    if dimension_only {
        let dim = code_dimension(&family)?;
        writeln!(
            out,
            "N={n} q={q} t={} dimension={dim} redundancy={}",
            family.count(),
            n - dim
        )?;
        return Ok(());
    }
    let code = build_code_with(&family, BuildOptions { max_matrix_bytes })?;
    writeln!(
        out,
        "N={n} q={q} t={} dimension={} redundancy={} bad_monomials={}",
        code.t(),
        code.exact_dimension(),
        code.redundancy(),
        code.bad_count()
    )?;

    let mut buf = Vec::new();
    write_bit_matrix(&mut buf, q, code.parity_checks())?;
    write_atomic(out_dir, "parity.txt", &buf)?;
    buf.clear();
    write_fq_matrix(&mut buf, q, &code.generator_matrix()?)?;
    write_atomic(out_dir, "generator.txt", &buf)?;

    let mut binary_dimension = None;
    if binary {
        let tc = trace_code(&code)?;
        writeln!(
            out,
            "binary_dimension={} binary_redundancy={}",
            tc.binary_dimension(),
            tc.redundancy()
        )?;
        buf.clear();
        write_bit_matrix(&mut buf, 2, tc.generators())?;
        write_atomic(out_dir, "trace_generators.txt", &buf)?;
        binary_dimension = Some(tc.binary_dimension());
    }

    let summary = BuildSummary {
        descriptor: code.descriptor(),
        q,
        length: n,
        t: code.t(),
        dimension: code.exact_dimension(),
        redundancy: code.redundancy(),
        bad_monomials: code.bad_count(),
        good_monomials: code.good_monomials().len(),
        binary_dimension,
    };
    let mut json = serde_json::to_vec_pretty(&summary).expect("plain struct");
    json.push(b'\n');
    write_atomic(out_dir, "code.json", &json)?;
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput {
    fault_injected: bool,
    parallel_reads_ok: bool,
    reports: Vec<DrgpReport>,
}

fn report_line(r: &DrgpReport) -> String {
    format!(
        "{}: trials={} checks={} failures={} {}",
        r.alphabet,
        r.trials,
        r.checks,
        r.failure_count,
        if r.passed() { "PASS" } else { "FAIL" }
    )
}

/// Reads a few coordinates of a random codeword from all `t` groups at once.
fn parallel_reads_smoke(
    code: &crate::code::WedgeLiftedCode,
    plan: &RepairPlan,
    seed: u64,
) -> Result<bool, CliError> {
    let q = code.field().q() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let msg: Vec<FieldElement> = (0..code.exact_dimension())
        .map(|_| FieldElement(rng.gen_range(0..q)))
        .collect();
    let word = code.encode(&msg)?;
    let n = plan.len();
    for p in [0, n / 2, n - 1] {
        match simulate_parallel_reads(plan, &word, p, plan.t()) {
            Ok(r) if r.recovered.iter().all(|&v| v == r.direct) => {}
            Ok(_) | Err(RepairError::Inconsistent { .. }) => return Ok(false),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(true)
}

fn cmd_verify<W: Write>(
    args: &FamilyArgs,
    seed: u64,
    trials: usize,
    binary: bool,
    inject_fault: bool,
    out_dir: Option<&Path>,
    out: &mut W,
) -> Result<(), CliError> {
    let (family, _) = resolve_family(args)?;
    let code = build_code_with(&family, BuildOptions::default())?;
    let mut plan = build_repair_plan(&code)?;
    if inject_fault {
        plan.inject_fault(0, 0);
    }
    writeln!(
        out,
        "{} group_size={} seed={seed}{}",
        family_line(&family),
        plan.group_size(),
        if inject_fault { " fault=injected" } else { "" }
    )?;

    let mut reports = vec![verify_drgp(&code, &plan, trials, seed)?];
    if binary {
        let tc = trace_code(&code)?;
        reports.push(verify_drgp_binary(&tc, &plan, trials, seed)?);
    }
    for r in &reports {
        writeln!(out, "{}", report_line(r))?;
    }
    let parallel_reads_ok = parallel_reads_smoke(&code, &plan, seed)?;
    writeln!(
        out,
        "parallel_reads: k={} {}",
        plan.t(),
        if parallel_reads_ok { "PASS" } else { "FAIL" }
    )?;

    let passed = parallel_reads_ok && reports.iter().all(DrgpReport::passed);
    let output = VerifyOutput {
        fault_injected: inject_fault,
        parallel_reads_ok,
        reports,
    };
    let mut json = serde_json::to_vec_pretty(&output).expect("plain struct");
    json.push(b'\n');
    match out_dir {
        Some(dir) => write_atomic(dir, "verify.json", &json)?,
        None => out.write_all(&json)?,
    }
    if !passed {
        return Err(CliError::Failed("repair verification failed".into()));
    }
    Ok(())
}

fn cmd_table<W: Write>(max_d: u32, out: &mut W) -> Result<(), CliError> {
    if max_d == 0 || max_d > 60 {
        return Err(CliError::Usage("--max-d must be in 1..=60".into()));
    }
    writeln!(out, "{:>3}  {:>7}  {:>8}  {:>8}  marked", "d", "alpha", "exponent", "baseline")?;
    for d in 1..=max_d {
        let alpha = 1.0 / (2.0 * d as f64);
        let mark = match d {
            2 => ".702",
            3 => ".651",
            4 => ".619",
            _ => "",
        };
        writeln!(
            out,
            "{d:>3}  {alpha:>7.4}  {:>8.4}  {:>8.4}  {mark}",
            redundancy_exponent(d),
            0.5 + alpha
        )?;
    }
    let refs: Vec<String> = REFERENCE_EXPONENTS.iter().map(|v| format!("{v:.3}")).collect();
    writeln!(out, "reference exponents of other constructions: {}", refs.join(" "))?;
    writeln!(out, "as d grows the exponent tends to 0.5000")?;
    Ok(())
}

/// Parses `p/2^k` (or `p/m` with `m` a power of two) into `(p, k)`.
fn parse_dyadic(s: &str) -> Result<(u64, u32), CliError> {
    let bad = || CliError::Usage(format!("alpha must look like p/2^k, got {s:?}"));
    let (num, den) = s.split_once('/').ok_or_else(bad)?;
    let num: u64 = num.trim().parse().map_err(|_| bad())?;
    let den = den.trim();
    let k = match den.strip_prefix("2^") {
        Some(e) => e.parse::<u32>().map_err(|_| bad())?,
        None => {
            let m: u64 = den.parse().map_err(|_| bad())?;
            if !m.is_power_of_two() {
                return Err(bad());
            }
            m.trailing_zeros()
        }
    };
    if k >= 63 {
        return Err(bad());
    }
    Ok((num, k))
}

fn cmd_plan<W: Write>(alpha: &str, n: u32, out: &mut W) -> Result<(), CliError> {
    let (p, k) = parse_dyadic(alpha)?;
    let den = 1u64 << k;
    if p == 0 || 2 * p >= den {
        return Err(CliError::Usage(format!("need 0 < alpha < 1/2, got {alpha}")));
    }
    // 1 - 2 alpha = (den - 2p) / den, reduced
    let mut a_num = den - 2 * p;
    let mut b_exp = k;
    while a_num % 2 == 0 {
        a_num /= 2;
        b_exp -= 1;
    }
    let plan = plan_dyadic_parameters(a_num, b_exp, n)?;
    let q = plan.q();
    writeln!(
        out,
        "alpha={alpha} n={n} one_minus_2alpha={a_num}/2^{b_exp} ell={} q={q} h={} t={} N={} t_sqrt_N={}",
        plan.ell,
        plan.subgroup_order,
        plan.t,
        q * q,
        plan.t * q
    )?;
    writeln!(out, "feasible=yes h divides q-1")?;
    Ok(())
}
