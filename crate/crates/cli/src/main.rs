use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use orbitwalk::corpus::analyze;
use orbitwalk::exactalg::rational::fmt_rational;
use orbitwalk::exactalg::{Field, FieldElem, RatFunc};
use orbitwalk::expansion::{self, AsymptoticExpansion, ExpansionOptions};
use orbitwalk::model::Model;
use orbitwalk::polyharmonic::{self, PolyBasis, PolyharmonicFn};
use orbitwalk::{io, oracle, Error};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "orbitwalk",
    version,
    about = "Exact asymptotics of orbit-summable lattice walks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Drift, periodicity, correlation angle, group, certificate and saddle data.
    Analyze(AnalyzeArgs),
    /// Coefficients v_1..v_M of the asymptotic expansion.
    Expand(ExpandArgs),
    /// Compare a truncated expansion with exact path counts.
    Verify(VerifyArgs),
    /// Check polyharmonicity of v_p(k,l,u,v) and decompose it over a basis.
    Decompose(DecomposeArgs),
    /// Exact weighted number of walks.
    Count(CountArgs),
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Human,
    Structured,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Model file (`dim`, `step`, `name` lines).
    model: PathBuf,
    /// Numerator file with `num:`/`den:` sections.
    #[arg(long)]
    numerator: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    /// Certificate depth (lengths and endpoint sums checked).
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    depth: u64,
}

#[derive(Args)]
struct ExpandArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    order: u64,
    /// Starting point `u,v` (orbit-sum numerator from that point).
    #[arg(long, value_parser = parse_point)]
    start: Option<Point>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    order: u64,
    #[arg(long, value_parser = parse_point)]
    start: Option<Point>,
    /// Endpoint to compare at; repeatable.
    #[arg(long = "end", value_parser = parse_point)]
    ends: Vec<Point>,
    /// Smallest length used.
    #[arg(long, default_value_t = 40)]
    nmin: usize,
    /// Largest length used.
    #[arg(long, default_value_t = 240, value_parser = clap::value_parser!(u64).range(1..))]
    nmax: u64,
    /// Working precision in bits.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(64..))]
    precision: u32,
    /// Use a saved structured expansion instead of computing one.
    #[arg(long)]
    expansion: Option<PathBuf>,
    /// Largest admissible relative error at the largest length.
    #[arg(long, default_value_t = 1e-2)]
    tolerance: f64,
}

#[derive(Args)]
struct DecomposeArgs {
    #[command(flatten)]
    common: Common,
    /// Index p of v_p.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    order: u64,
    /// Side of the verification window `[0, w]^2` (and `[0, w/2]^4`).
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    window: u64,
    /// Basis file (`n m expression` lines, shifted coordinates); built when absent.
    #[arg(long)]
    basis: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_parser = parse_point)]
    start: Option<Point>,
    #[arg(long, value_parser = parse_point)]
    end: Option<Point>,
    /// Walk length.
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..))]
    nmax: u64,
}

/// Comma-separated lattice point. A newtype so clap treats it as one value.
#[derive(Clone, Debug)]
struct Point(Vec<i64>);

fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| format!("`{}` is not an integer", t))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|p| {
            if p.iter().any(|&x| x < 0) {
                Err("coordinates must be nonnegative".into())
            } else {
                Ok(Point(p))
            }
        })
}

/// Failure with its process exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } => 3,
            Error::InvalidModel(_) | Error::DegenerateModel | Error::NotSmallSteps | Error::NonzeroDrift => 4,
            Error::GroupInfinite(_) | Error::NotOrbitSummable(_) => 5,
            Error::PrecisionInsufficient(_) | Error::Inexact(_) => 6,
            Error::DecompositionInfeasible(_) | Error::NoSolutionWithinDegreeBound(_) => 8,
            _ => 9,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 1,
        msg: format!("{}: {}", path.display(), e),
    }
}

const VERIFY_FAILED: u8 = 7;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| io_failure(path, e))
}

fn load(common: &Common) -> Result<(Model, Option<RatFunc<BigRational>>), Failure> {
    let model = Model::parse(&read(&common.model)?)?;
    let num = match &common.numerator {
        Some(p) => Some(io::parse_numerator(&read(p)?, model.vars())?),
        None => None,
    };
    Ok((model, num))
}

/// Writes through a sibling temporary file and a rename.
fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        None => {
            print!("{}", text);
            Ok(())
        }
        Some(path) => {
            let tmp = path.with_extension("partial");
            std::fs::write(&tmp, text).map_err(|e| io_failure(&tmp, e))?;
            std::fs::rename(&tmp, path).map_err(|e| io_failure(path, e))
        }
    }
}

fn structured(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json") + "\n"
}

fn check_start(model: &Model, start: &[i64]) -> Result<(), Failure> {
    if start.len() != model.dim() {
        return Err(Failure {
            code: 2,
            msg: format!("point needs {} coordinates", model.dim()),
        });
    }
    Ok(())
}

fn build_expansion(
    model: &Model,
    num: Option<&RatFunc<BigRational>>,
    start: Option<&Vec<i64>>,
    order: usize,
) -> Result<AsymptoticExpansion, Failure> {
    if let Some(s) = start {
        check_start(model, s)?;
    }
    Ok(match (num, start) {
        (Some(n), s) => expansion::assemble_expansion(model, n, s.cloned(), &ExpansionOptions::order(order))?,
        (None, Some(s)) => expansion::expand_from_start(model, s, order)?,
        (None, None) => expansion::expand_from_start(model, &vec![0; model.dim()], order)?,
    })
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<(), Failure> {
    let (model, num) = load(&a.common)?;
    let report = analyze(&model, num.as_ref(), a.depth as usize);
    let text = match a.common.format {
        Format::Structured => structured(&report.to_json()),
        _ => report.to_text(),
    };
    emit(&a.common, &text)
}

fn cmd_expand(a: &ExpandArgs) -> Result<(), Failure> {
    let (model, num) = load(&a.common)?;
    let e = build_expansion(&model, num.as_ref(), a.start.as_ref().map(|p| &p.0), a.order as usize)?;
    let text = match a.common.format {
        Format::Structured => structured(&io::expansion_to_json(&e)),
        _ => io::expansion_to_text(&e),
    };
    emit(&a.common, &text)
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let (model, num) = load(&a.common)?;
    let order = a.order as usize;
    let e = match &a.expansion {
        Some(p) => {
            let v: Value = serde_json::from_str(&read(p)?).map_err(|err| Failure {
                code: 3,
                msg: format!("{}: {}", p.display(), err),
            })?;
            io::expansion_from_json(&v)?
        }
        None => build_expansion(&model, num.as_ref(), a.start.as_ref().map(|p| &p.0), order)?,
    };
    let start = a
        .start
        .clone()
        .map(|p| p.0)
        .or_else(|| e.start.clone())
        .unwrap_or_else(|| vec![0; model.dim()]);
    check_start(&model, &start)?;
    let ends = if a.ends.is_empty() {
        vec![vec![0; model.dim()]]
    } else {
        a.ends.iter().map(|p| p.0.clone()).collect()
    };
    for b in &ends {
        check_start(&model, b)?;
    }
    let nmax = a.nmax as usize;
    let series = oracle::endpoint_series(&model, &start, &ends, nmax)?;
    let mut passed = true;
    let mut human = String::new();
    let mut csv = String::new();
    let mut reports = Vec::new();
    for (b, s) in ends.iter().zip(&series) {
        let ns = oracle::period_compatible(&e, b, a.nmin, nmax)?;
        let ns: Vec<usize> = ns
            .into_iter()
            .filter(|&n| !orbitwalk::exactalg::Field::is_zero(&s[n]))
            .collect();
        if ns.len() < 2 {
            return Err(Failure {
                code: 2,
                msg: format!("fewer than two usable lengths for endpoint {:?}", b),
            });
        }
        let r = oracle::convergence_diagnostics(&e, s, b, order, &ns, a.precision)?;
        let ok = r.final_rel_error() < a.tolerance && r.monotone_top_half();
        passed &= ok;
        human.push_str(&format!(
            "end {:?}: final relative error {:.3e}, monotone {}, remainder slope {:.3} (total {:.3}) -> {}\n",
            b,
            r.final_rel_error(),
            r.monotone_top_half(),
            r.slope,
            r.decay_slope(),
            if ok { "pass" } else { "FAIL" }
        ));
        for line in r.to_csv().lines().skip(if csv.is_empty() { 0 } else { 1 }) {
            if line.starts_with('n') {
                csv.push_str("end,");
                csv.push_str(line);
            } else {
                csv.push_str(&format!("\"{:?}\",{}", b, line));
            }
            csv.push('\n');
        }
        reports.push(json!({
            "end": b,
            "final_rel_error": r.final_rel_error(),
            "monotone_top_half": r.monotone_top_half(),
            "slope": r.slope,
            "decay_slope": r.decay_slope(),
            "passed": ok,
        }));
    }
    let text = match a.common.format {
        Format::Human => human,
        Format::Csv => csv,
        Format::Structured => structured(&json!({ "order": order, "endpoints": reports, "passed": passed })),
    };
    emit(&a.common, &text)?;
    if passed {
        Ok(())
    } else {
        Err(Failure {
            code: VERIFY_FAILED,
            msg: "tolerance violated".into(),
        })
    }
}

fn label(ix: (usize, usize)) -> String {
    format!("h_{}^{}", ix.0, ix.1)
}

fn cmd_decompose(a: &DecomposeArgs) -> Result<(), Failure> {
    let (model, _) = load(&a.common)?;
    let p = a.order as usize;
    let vs = expansion::interpolate_vp(&model, p)?;
    let v = &vs[p - 1];
    let gamma = orbitwalk::saddle::find_dominant(&model)?.gamma;
    let w = a.window as i64;
    let half = (w / 2).max(1);
    let grid: Vec<Vec<i64>> = polyharmonic::window_points(&[(0, half), (0, half), (0, half), (0, half)]);
    let multi = polyharmonic::verify_multivariate(&model, v, &gamma, p, &grid)?;
    let at_start = PolyharmonicFn::polynomial(expansion::specialize_start(v, 1, 1)?, gamma.clone(), p);
    let single = polyharmonic::verify_polyharmonic(&model, &at_start, p, &[(0, w), (0, w)])?;
    let (basis, adjoint) = match &a.basis {
        Some(path) => {
            let entries = io::parse_basis(&read(path)?)?;
            let t = gamma.to_rational_or_err()?;
            let b = PolyBasis {
                entries,
                gamma: t,
                ladder: false,
            };
            (b.clone(), b)
        }
        None => (
            polyharmonic::build_basis(&model, &gamma, p, p)?,
            polyharmonic::build_basis(&model.reverse(), &gamma, p, p)?,
        ),
    };
    // divide out the leading coefficient first so irrational constants drop out
    let shifted = polyharmonic::to_shifted(v)?;
    let lead = shifted.leading_grlex().map_or_else(FieldElem::one, |(_, c)| c.clone());
    let unit = shifted.scale(&lead.inv().ok_or(Error::DivisionByZero)?);
    let (lambda, prim) = polyharmonic::primitive_part(&polyharmonic::to_rational_poly(&unit)?);
    let scale = io::format_coef(&lead.scale(&lambda));
    let d = polyharmonic::decompose(&prim, &basis, &adjoint, p)?;
    let text = match a.common.format {
        Format::Structured => structured(&json!({
            "p": p,
            "normalization": scale,
            "polyharmonic_window": single.passed,
            "multivariate": multi.passed,
            "candidates": d.candidates,
            "bound": polyharmonic::summand_bound(p),
            "terms": d.terms.iter().map(|t| json!({
                "end": label(t.end),
                "start": label(t.start),
                "coefficient": fmt_rational(&t.coefficient),
            })).collect::<Vec<_>>(),
        })),
        _ => {
            let mut s = format!(
                "v_{} = {} * primitive part (shifted coordinates)\npolyharmonic on window: {}\nmultivariate check on {} points: {}\n",
                p,
                scale,
                single.passed,
                grid.len(),
                multi.passed
            );
            s.push_str(&format!(
                "{} summands (bound {})\n",
                d.terms.len(),
                polyharmonic::summand_bound(p)
            ));
            for t in &d.terms {
                s.push_str(&format!(
                    "{:>10}  {} * ~{}\n",
                    fmt_rational(&t.coefficient),
                    label(t.end),
                    label(t.start)
                ));
            }
            s
        }
    };
    emit(&a.common, &text)?;
    if multi.passed && single.passed {
        Ok(())
    } else {
        Err(Failure {
            code: VERIFY_FAILED,
            msg: "coefficient is not polyharmonic of the claimed order".into(),
        })
    }
}

trait RationalOrErr {
    fn to_rational_or_err(&self) -> Result<BigRational, Failure>;
}

impl RationalOrErr for orbitwalk::exactalg::FieldElem {
    fn to_rational_or_err(&self) -> Result<BigRational, Failure> {
        orbitwalk::exactalg::Field::to_rational(self)
            .ok_or_else(|| Error::Inexact("growth rate is irrational".into()).into())
    }
}

fn cmd_count(a: &CountArgs) -> Result<(), Failure> {
    let (model, _) = load(&a.common)?;
    let start = a.start.clone().map(|p| p.0).unwrap_or_else(|| vec![0; model.dim()]);
    let end = a.end.clone().map(|p| p.0).unwrap_or_else(|| vec![0; model.dim()]);
    check_start(&model, &start)?;
    check_start(&model, &end)?;
    let n = a.nmax as usize;
    let s = oracle::endpoint_series(&model, &start, std::slice::from_ref(&end), n)?;
    let value = fmt_rational(&s[0][n]);
    let text = match a.common.format {
        Format::Structured => structured(&json!({ "start": start, "end": end, "n": n, "count": value })),
        Format::Csv => format!("n,count\n{},{}\n", n, value),
        Format::Human => format!("{}\n", value),
    };
    emit(&a.common, &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Expand(a) => cmd_expand(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Count(a) => cmd_count(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
