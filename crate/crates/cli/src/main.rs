//! `symclone`: clone, reduce, verify, MUB and pipeline reports.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
//! 3 domain or scale error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use symclone::cloner::{bem_shrink, fidelity_single, CloneMap, ShrinkReport};
use symclone::mub::{clone_mub_state, qkd_attack_report_for, MubCloneRecord, MubFamily, OverlapStats, QkdReport};
use symclone::oracle::{oracle_clone, oracle_partial_keep, oracle_reduce};
use symclone::pipeline::{cascade, partial_keep, render_table, run_strategy_comparison, CascadeInput, FidelityValue, ScenarioReport, StagePlan};
use symclone::random::DEFAULT_SEED;
use symclone::report::{format_f64, format_rational, to_json_string, MatrixRecord, StateFile};
use symclone::states::validate_density_with;
use symclone::verify::{run_verification, VerifyConfig, VerifyReport};
use symclone::{
    extract_shrink, fidelity_pure, parse_state_file, pure_power_density, reduce_single, Diagnostics, Error,
    PureState64, QuditDensity64, SymDensity64, Tolerances, DEFAULT_ORACLE_BUDGET,
};

const BUDGET_ENV: &str = "SYMCLONE_ORACLE_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "symclone", version, about = "Universal cloning of symmetric multi-qudit states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Clone a symmetric M-system state to N systems.
    Clone(CloneArgs),
    /// Reduce a symmetric state to one system (or to --keep systems).
    Reduce(ReduceArgs),
    /// Run the property grid against the brute-force oracle.
    Verify(VerifyArgs),
    /// Mutually unbiased bases for prime d and the 1 -> 2 cloning attack.
    Mub(MubArgs),
    /// Cascaded cloning plans and the four-strategy comparison.
    Pipeline(PipelineArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Args, Debug)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Seed for random instances.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Numerical tolerance override.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StateArgs {
    /// Levels per system.
    #[arg(long)]
    d: Option<usize>,
    /// Input systems.
    #[arg(long = "M")]
    m: Option<usize>,
    /// JSON state file.
    #[arg(long, conflicts_with = "pure")]
    state: Option<PathBuf>,
    /// Inline pure state as comma-separated complex amplitudes, e.g. `1,0` or
    /// `0.6,0.8i`; normalized on input and taken M times.
    #[arg(long)]
    pure: Option<String>,
    /// Reference pure state for fidelities, same syntax as --pure.
    #[arg(long)]
    reference: Option<String>,
}

#[derive(Args, Debug)]
struct CloneArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Output systems.
    #[arg(long = "N")]
    n: usize,
    /// Also run the isometry oracle and report its deviation.
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Keep this many systems instead of one.
    #[arg(long)]
    keep: Option<usize>,
    #[arg(long)]
    oracle: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Perturb one cloning amplitude by 1e-3 to exercise the suite.
    #[arg(long, hide = true)]
    inject_fault: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MubArgs {
    #[arg(long)]
    d: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Task {
    PaperExample,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Built-in scenario.
    #[arg(long, value_enum, conflicts_with = "stages")]
    task: Option<Task>,
    /// Stage plan such as `3:keep2,3`.
    #[arg(long)]
    stages: Option<String>,
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(Error),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::NotPrime(_) | Error::MissingReference | Error::NotNormalized(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Domain(other),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn parse_amplitudes(text: &str) -> CliResult<PureState64> {
    let amps = text
        .split(',')
        .map(|s| Complex64::from_str(s.trim()).map_err(|_| usage(format!("bad complex amplitude {s:?}"))))
        .collect::<CliResult<Vec<_>>>()?;
    PureState64::normalized(amps).map_err(|e| usage(e.to_string()))
}

fn budget() -> CliResult<u64> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{BUDGET_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(DEFAULT_ORACLE_BUDGET),
    }
}

fn tolerances(common: &Common) -> Tolerances {
    let mut t = Tolerances::F64;
    if let Some(v) = common.tolerance {
        t = Tolerances {
            hermitian: v,
            trace: v,
            psd: v,
            norm: v,
            clip: v,
        };
    }
    t
}

/// Input state plus the pure state it came from, if any.
struct LoadedState {
    rho: SymDensity64,
    source: Option<PureState64>,
    reference: Option<PureState64>,
}

fn load_state(args: &StateArgs) -> CliResult<LoadedState> {
    let reference = args.reference.as_deref().map(parse_amplitudes).transpose()?;
    let (rho, source) = match (&args.state, &args.pure) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            let file = parse_state_file(&text)?;
            if args.d.is_some_and(|d| d != file.d) || args.m.is_some_and(|m| m != file.total) {
                return Err(usage(format!(
                    "--d/--M do not match the state file (d = {}, M = {})",
                    file.d, file.total
                )));
            }
            (file.to_density()?, None)
        }
        (None, Some(text)) => {
            let x = parse_amplitudes(text)?;
            if args.d.is_some_and(|d| d != x.d()) {
                return Err(usage(format!("--d = {} but --pure has {} amplitudes", args.d.unwrap(), x.d())));
            }
            (pure_power_density(&x, args.m.unwrap_or(1))?, Some(x))
        }
        _ => return Err(usage("give exactly one of --state or --pure")),
    };
    if let Some(r) = &reference {
        if r.d() != rho.d() {
            return Err(usage(format!("--reference has {} amplitudes, state has d = {}", r.d(), rho.d())));
        }
    }
    Ok(LoadedState { rho, source, reference })
}

fn emit(common: &Common, text: String) -> CliResult<()> {
    match &common.out {
        Some(path) => fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| usage(format!("stdout: {e}")))
        }
    }
}

fn json<S: Serialize>(value: &S) -> CliResult<String> {
    let mut s = to_json_string(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| usage(format!("csv: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn state_csv(file: &StateFile) -> CliResult<String> {
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
    csv_text(
        &["m", "mp", "re", "im"],
        file.entries
            .iter()
            .map(|e| vec![join(&e.m), join(&e.mp), format_f64(e.re), format_f64(e.im)]),
    )
}

fn matrix_table(title: &str, sigma: &QuditDensity64) -> String {
    let m = sigma.matrix();
    let mut s = format!("{title}\n");
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols())
            .map(|j| format!("{:>12.9} {:+.9}i", m[(i, j)].re, m[(i, j)].im))
            .collect();
        s.push_str(&format!("  {}\n", row.join("   ")));
    }
    s
}

fn diagnostics_line(d: &Diagnostics) -> String {
    format!(
        "valid: {} (hermitian {:.3e}, trace {:.3e}, min eigenvalue {:.3e})\n",
        d.pass, d.hermitian_deviation, d.trace_deviation, d.min_eigenvalue
    )
}

#[derive(Serialize)]
struct OracleComparison {
    max_state_deviation: f64,
    max_reduced_deviation: f64,
}

#[derive(Serialize)]
struct CloneReport {
    d: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    output: StateFile,
    trace: f64,
    diagnostics: Diagnostics,
    reduced_input: MatrixRecord,
    reduced_output: MatrixRecord,
    shrink: ShrinkReport<f64>,
    optimal_shrink: String,
    fidelity: Option<f64>,
    /// Optimal single-copy fidelity for identical pure inputs.
    optimal_fidelity: String,
    oracle: Option<OracleComparison>,
}

fn cmd_clone(args: &CloneArgs) -> CliResult<()> {
    let loaded = load_state(&args.state)?;
    let rho = &loaded.rho;
    let (d, m, n) = (rho.d(), rho.total(), args.n);
    let map = CloneMap::<f64>::new(d, m, n)?;
    let out = map.apply(rho)?;
    let sigma_in = reduce_single(rho)?;
    let sigma_out = map.reduced_output(rho)?;
    let reference = loaded.reference.or(loaded.source);
    let fidelity = reference.as_ref().map(|x| fidelity_pure(&sigma_out, x)).transpose()?;
    let oracle = if args.oracle {
        let slow = oracle_clone(rho, n)?;
        let slow_red = oracle_reduce(&slow, budget()?)?;
        Some(OracleComparison {
            max_state_deviation: out.matrix().max_abs_diff(slow.matrix()),
            max_reduced_deviation: sigma_out.matrix().max_abs_diff(slow_red.matrix()),
        })
    } else {
        None
    };
    let report = CloneReport {
        d,
        m,
        n,
        output: StateFile::from_density(&out),
        trace: out.trace().re,
        diagnostics: validate_density_with(&out, &tolerances(&args.common)),
        reduced_input: MatrixRecord::from_qudit(&sigma_in),
        reduced_output: MatrixRecord::from_qudit(&sigma_out),
        shrink: extract_shrink(&sigma_in, &sigma_out)?,
        optimal_shrink: format_rational(&bem_shrink(m, n, d)?),
        fidelity,
        optimal_fidelity: format_rational(&fidelity_single(m, n, d)?),
        oracle,
    };
    let text = match args.common.format {
        Format::Json => json(&report)?,
        Format::Csv => state_csv(&report.output)?,
        Format::Table => {
            let mut s = format!("clone d = {d}, M = {m} -> N = {n}\ntrace: {:.15}\n", report.trace);
            s.push_str(&diagnostics_line(&report.diagnostics));
            s.push_str(&matrix_table("single-copy output:", &sigma_out));
            match report.shrink.shrink {
                Some(f) => s.push_str(&format!(
                    "shrink: {f:.15} (optimal {}, residual {:.3e})\n",
                    report.optimal_shrink, report.shrink.residual
                )),
                None => s.push_str("shrink: undetermined (maximally mixed input)\n"),
            }
            if let Some(f) = fidelity {
                s.push_str(&format!("fidelity: {f:.15}\n"));
            }
            if let Some(o) = &report.oracle {
                s.push_str(&format!(
                    "oracle deviation: state {:.3e}, reduced {:.3e}\n",
                    o.max_state_deviation, o.max_reduced_deviation
                ));
            }
            s
        }
    };
    emit(&args.common, text)
}

#[derive(Serialize)]
struct ReduceReport {
    d: usize,
    #[serde(rename = "M")]
    m: usize,
    keep: usize,
    /// Set when `keep` is greater than one.
    state: Option<StateFile>,
    /// Set when `keep` is one.
    reduced: Option<MatrixRecord>,
    diagnostics: Diagnostics,
    fidelity: Option<f64>,
    oracle_deviation: Option<f64>,
}

fn cmd_reduce(args: &ReduceArgs) -> CliResult<()> {
    let loaded = load_state(&args.state)?;
    let rho = &loaded.rho;
    let keep = args.keep.unwrap_or(1);
    let tol = tolerances(&args.common);
    let reference = loaded.reference.or(loaded.source);
    let report = if keep == 1 {
        let sigma = reduce_single(rho)?;
        let oracle_deviation = if args.oracle {
            Some(sigma.matrix().max_abs_diff(oracle_reduce(rho, budget()?)?.matrix()))
        } else {
            None
        };
        ReduceReport {
            d: rho.d(),
            m: rho.total(),
            keep,
            state: None,
            diagnostics: validate_density_with(&sigma, &tol),
            fidelity: reference.as_ref().map(|x| fidelity_pure(&sigma, x)).transpose()?,
            reduced: Some(MatrixRecord::from_qudit(&sigma)),
            oracle_deviation,
        }
    } else {
        let kept = partial_keep(rho, keep)?;
        let oracle_deviation = if args.oracle {
            let (slow, leak) = oracle_partial_keep(rho, keep, budget()?)?;
            Some(kept.matrix().max_abs_diff(slow.matrix()).max(leak))
        } else {
            None
        };
        let fidelity = reference
            .as_ref()
            .map(|x| fidelity_pure(&reduce_single(&kept)?, x))
            .transpose()?;
        ReduceReport {
            d: rho.d(),
            m: rho.total(),
            keep,
            state: Some(StateFile::from_density(&kept)),
            reduced: None,
            diagnostics: validate_density_with(&kept, &tol),
            fidelity,
            oracle_deviation,
        }
    };
    let text = match args.common.format {
        Format::Json => json(&report)?,
        Format::Csv => match &report.state {
            Some(f) => state_csv(f)?,
            None => {
                let sigma = reduce_single(rho)?;
                let m = sigma.matrix();
                csv_text(
                    &["i", "j", "re", "im"],
                    (0..m.rows()).flat_map(|i| {
                        (0..m.cols()).map(move |j| {
                            vec![i.to_string(), j.to_string(), format_f64(m[(i, j)].re), format_f64(m[(i, j)].im)]
                        })
                    }),
                )?
            }
        },
        Format::Table => {
            let mut s = format!("reduce d = {}, M = {} -> {keep}\n", report.d, report.m);
            s.push_str(&diagnostics_line(&report.diagnostics));
            if keep == 1 {
                s.push_str(&matrix_table("reduced:", &reduce_single(rho)?));
            }
            if let Some(f) = report.fidelity {
                s.push_str(&format!("fidelity: {f:.15}\n"));
            }
            if let Some(o) = report.oracle_deviation {
                s.push_str(&format!("oracle deviation: {o:.3e}\n"));
            }
            s
        }
    };
    emit(&args.common, text)
}

fn verify_text(report: &VerifyReport, format: Format) -> CliResult<String> {
    match format {
        Format::Json => json(report),
        Format::Csv => csv_text(
            &["name", "instances", "max_deviation", "tolerance", "passed"],
            report.checks.iter().map(|c| {
                vec![
                    c.name.clone(),
                    c.instances.to_string(),
                    format_f64(c.max_deviation),
                    format_f64(c.tolerance),
                    c.passed.to_string(),
                ]
            }),
        ),
        Format::Table => {
            let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            let mut s = String::new();
            for c in &report.checks {
                s.push_str(&format!(
                    "{:<width$}  {}  {:>10.3e}  (tolerance {:.0e}, {} instances)\n",
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.max_deviation,
                    c.tolerance,
                    c.instances
                ));
            }
            s.push_str(&format!(
                "{} of {} checks passed (seed {})\n",
                report.checks.iter().filter(|c| c.passed).count(),
                report.checks.len(),
                report.seed
            ));
            Ok(s)
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let report = run_verification(&VerifyConfig {
        seed: args.common.seed,
        tolerance: args.common.tolerance,
        inject_fault: args.inject_fault,
        budget: budget()?,
    });
    emit(&args.common, verify_text(&report, args.common.format)?)?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

#[derive(Serialize)]
struct MubReport {
    d: usize,
    bases: usize,
    overlaps: OverlapStats,
    clones: Vec<MubCloneRecord>,
    qkd: QkdReport,
}

fn cmd_mub(args: &MubArgs) -> CliResult<()> {
    let family = MubFamily::<f64>::new(args.d)?;
    let clones = family
        .states()
        .map(|(_, _, psi)| clone_mub_state(&family, psi))
        .collect::<symclone::Result<Vec<_>>>()?;
    let report = MubReport {
        d: args.d,
        bases: family.bases().len(),
        overlaps: family.overlap_stats(),
        clones,
        qkd: qkd_attack_report_for(&family)?,
    };
    let text = match args.common.format {
        Format::Json => json(&report)?,
        Format::Csv => csv_text(
            &["basis", "index", "doubled_weight", "total_weight", "reconstruction_residual"],
            report.clones.iter().map(|c| {
                vec![
                    c.basis.to_string(),
                    c.index.to_string(),
                    format_f64(c.doubled_weight),
                    format_f64(c.total_weight),
                    format_f64(c.reconstruction_residual),
                ]
            }),
        )?,
        Format::Table => {
            let worst = report.clones.iter().map(|c| c.weight_deviation(args.d)).fold(0.0, f64::max);
            format!(
                "d = {}: {} bases\nmax unbiasedness deviation: {:.3e}\nmax orthonormality deviation: {:.3e}\n\
                 clone branch weights 2/(d+1), 1/(d+1): max deviation {:.3e}\n\
                 receiver fidelity: {} (observed {:.15} .. {:.15})\nerror rate: {}\n",
                report.d,
                report.bases,
                report.overlaps.unbiasedness_deviation,
                report.overlaps.orthonormality_deviation,
                worst,
                format_rational(&report.qkd.analytic_fidelity),
                report.qkd.min_fidelity,
                report.qkd.max_fidelity,
                format_rational(&report.qkd.error_rate),
            )
        }
    };
    emit(&args.common, text)
}

fn pipeline_csv(reports: &[ScenarioReport]) -> CliResult<String> {
    let exact = |f: &FidelityValue| f.exact.as_ref().map(format_rational).unwrap_or_default();
    let source = |f: &FidelityValue| {
        serde_json::to_value(f.provenance)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    };
    let mut rows = Vec::new();
    for r in reports {
        for s in &r.stages {
            rows.push(vec![
                r.strategy.clone(),
                s.label.clone(),
                format_f64(s.fidelity.value),
                exact(&s.fidelity),
                source(&s.fidelity),
                String::new(),
                String::new(),
            ]);
        }
        for a in &r.allocations {
            rows.push(vec![
                r.strategy.clone(),
                format!("{} x{}", a.task, a.copies),
                format_f64(a.fidelity.value),
                exact(&a.fidelity),
                source(&a.fidelity),
                format_rational(&a.demand),
                a.passed.to_string(),
            ]);
        }
    }
    csv_text(&["strategy", "item", "fidelity", "exact", "provenance", "demand", "passed"], rows)
}

fn cmd_pipeline(args: &PipelineArgs) -> CliResult<()> {
    let reports = match (&args.task, &args.stages) {
        (Some(Task::PaperExample), None) => run_strategy_comparison()?,
        (None, Some(plan)) => {
            let plan: StagePlan = plan.parse()?;
            let loaded = if args.state.state.is_none() && args.state.pure.is_none() {
                return Err(usage("--stages needs --pure or --state"));
            } else {
                load_state(&args.state)?
            };
            let input = match (loaded.source, loaded.reference) {
                (Some(x), None) => CascadeInput::Pure {
                    state: x,
                    copies: loaded.rho.total(),
                },
                (_, reference) => CascadeInput::Mixed {
                    state: loaded.rho,
                    reference,
                },
            };
            vec![cascade(input, &plan.0)?]
        }
        _ => return Err(usage("give exactly one of --task or --stages")),
    };
    let text = match args.common.format {
        Format::Json => json(&reports)?,
        Format::Csv => pipeline_csv(&reports)?,
        Format::Table => {
            let mut s = render_table(&reports);
            for r in &reports {
                for n in &r.notes {
                    s.push_str(&format!("note ({}): {n}\n", r.strategy));
                }
            }
            s
        }
    };
    emit(&args.common, text)
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Clone(a) => cmd_clone(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Mub(a) => cmd_mub(a),
        Command::Pipeline(a) => cmd_pipeline(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitudes_parse_and_normalize() {
        let x = parse_amplitudes("1, 1i").unwrap();
        assert!((x.amplitudes()[1] - Complex64::new(0.0, 1.0 / 2f64.sqrt())).norm() < 1e-15);
        assert!(matches!(parse_amplitudes("1,zz"), Err(Failure::Usage(_))));
        assert!(matches!(parse_amplitudes("0,0"), Err(Failure::Usage(_))));
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert!(matches!(Failure::from(Error::NotPrime(4)), Failure::Usage(_)));
        assert!(matches!(Failure::from(Error::ScaleExceeded("x".into())), Failure::Domain(_)));
        assert!(matches!(Failure::from(Error::InfeasiblePlan("x".into())), Failure::Domain(_)));
    }
}
