//! `escdim`: dimension reports for escape bands from the command line.
//!
//! Exit codes: 0 success, 2 malformed input, 3 assumptions or hypotheses not
//! witnessed (the report is still written), 4 budget or precision refusal.

mod emit;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use escape_dim::cover::{
    fit_word, parse_word, plan_depth, pullback_point, CountMode, CoverError, Family, Grid, GridParams, Letter, LogPolar,
    DEFAULT_BUDGET,
};
use escape_dim::dimension::{self, Analysis, DimError, DimensionReport};
use escape_dim::presets::{preset, PresetArgs, Subject, NAMES};
use escape_dim::series::RatioSeries;
use escape_dim::Band;
use serde_json::{json, Value};

use emit::{to_value, Output, Report, Row};
use input::{Input, Kind, Source};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    pub fn new(code: u8, msg: impl Into<String>) -> Self {
        Failure { code, msg: msg.into() }
    }

    pub fn spec(msg: impl Into<String>) -> Self {
        Failure::new(2, msg)
    }
}

fn dim_code(e: &DimError) -> u8 {
    match e {
        DimError::Seq(_) => 2,
        DimError::Unresolved(_) => 4,
        _ => 3,
    }
}

fn cover_code(e: &CoverError) -> u8 {
    match e {
        CoverError::Seq(_)
        | CoverError::Param(_)
        | CoverError::IllegalExtension(_)
        | CoverError::EmptyRange(_)
        | CoverError::Domain(_) => 2,
        CoverError::PreAsymptotic { .. } => 3,
        _ => 4,
    }
}

impl From<DimError> for Failure {
    fn from(e: DimError) -> Self {
        Failure::new(dim_code(&e), e.to_string())
    }
}

impl From<CoverError> for Failure {
    fn from(e: CoverError) -> Self {
        Failure::new(cover_code(&e), e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "escdim", version, about = "Hausdorff and packing dimension bounds for escape bands of exponential maps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sum,
    Count,
    Profile,
    Pullback,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Dimension report for a band.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: Output,
    },
    /// Dimension report for an annulus itinerary.
    Annular {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        out: Output,
    },
    /// Grid covers, branch counts, local-dimension profiles and pullbacks.
    Cover(CoverArgs),
    /// Runs every preset against its expected fragment.
    #[command(hide = true)]
    Selftest,
}

#[derive(clap::Args, Debug)]
struct CoverArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    out: Output,
    #[arg(long, value_enum, default_value = "sum")]
    mode: Mode,
    #[arg(long, default_value_t = 12)]
    depth: usize,
    /// Cover exponent `D` for `--mode sum`.
    #[arg(long, default_value_t = 1.2)]
    exponent: f64,
    /// Word file, one `n j k` line per letter.
    #[arg(long)]
    word: Option<PathBuf>,
    /// Working precision for `--mode pullback`.
    #[arg(long, default_value_t = 256)]
    bits: usize,
    /// Cell column for `--mode count`; without it the whole j-range is sampled.
    #[arg(long, allow_negative_numbers = true)]
    j: Option<i64>,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    k: i64,
    /// Cell budget for exact counts.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Argument of the pullback target point.
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    arg: f64,
    /// Ledger override `name=value`, repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout().lock();
    let res = match cli.cmd {
        Cmd::Analyze { source, out } => cmd_analyze(&source, out, stdout),
        Cmd::Annular { source, out } => cmd_annular(&source, out, stdout),
        Cmd::Cover(args) => cmd_cover(&args, stdout),
        Cmd::Selftest => selftest(stdout),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("escdim: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn series_rows(series: &[RatioSeries]) -> Vec<Row> {
    let mut rows = Vec::new();
    for s in series {
        let last = s.values.len().saturating_sub(1);
        for (i, &(n, v)) in s.values.iter().enumerate() {
            let flag = match &s.stop {
                Some(stop) if i == last => format!("stop:{}", stop_reason(stop)),
                _ => String::new(),
            };
            rows.push(Row::new(s.expr.as_str(), n, v, flag));
        }
    }
    rows
}

fn stop_reason(s: &escape_dim::series::Stop) -> &'static str {
    use escape_dim::series::Stop;
    match s {
        Stop::Unresolved { .. } => "unresolved",
        Stop::Overflow { .. } => "overflow",
        Stop::NonPositiveDenominator { .. } => "nonpositive-denominator",
        Stop::Generation { .. } => "generation",
    }
}

fn report_rows(r: &DimensionReport) -> Vec<Row> {
    let h = r.horizon;
    let mut rows = vec![
        Row::new("dim-h-lower", h, r.hausdorff.lo.value, r.hausdorff.lo.source.clone()),
        Row::new("dim-h-upper", h, r.hausdorff.hi.value, r.hausdorff.hi.source.clone()),
        Row::new("dim-p-lower", h, r.packing.lo.value, r.packing.lo.source.clone()),
        Row::new("dim-p-upper", h, r.packing.hi.value, r.packing.hi.source.clone()),
    ];
    if let Some(e) = &r.packing_estimate {
        rows.push(Row::new("packing-estimate", h, e.value, e.source.clone()));
    }
    rows.extend(series_rows(&r.series));
    rows
}

/// Grid parameters and constants for the band, or why there are none.
fn ledger_snapshot(band: &Band, input: &Input) -> Value {
    let grid = GridParams::for_band(band, input.params())
        .and_then(|gp| Grid::new(Band::new(input.band_spec())?, gp));
    match grid {
        Ok(g) => json!({ "grid": g.params, "constants": g.ledger }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn cmd_analyze(source: &Source, out: Output, w: impl Write) -> Result<u8, Failure> {
    let input = source.load(Kind::Band)?;
    let params = input.params().clone();
    let band = Band::new(input.band_spec()).map_err(|e| Failure::spec(e.to_string()))?;
    let an = Analysis::new(&band, &params)?;
    let gate = an.require_assumptions().err();
    let report = dimension::analyze(&band, &params)?;
    let code = if gate.is_some() { 3 } else { 0 };
    let body = json!({
        "assumptions": to_value(&an.assumptions)?,
        "report": to_value(&report)?,
        "ledger": ledger_snapshot(&band, &input),
    });
    Report {
        command: "analyze",
        echo: &input.echo,
        horizon: params.horizon,
        exit_code: code,
        error: gate.as_ref().map(|e| e.to_string()),
        body,
        rows: report_rows(&report),
    }
    .write(out, w)?;
    if let Some(e) = gate {
        eprintln!("escdim: {e}");
    }
    Ok(code)
}

fn cmd_annular(source: &Source, out: Output, w: impl Write) -> Result<u8, Failure> {
    let input = source.load(Kind::Itinerary)?;
    if !matches!(input.subject(), Subject::Itinerary { .. }) {
        return Err(Failure::spec(format!("{} is a band preset; use `analyze`", source.preset.as_deref().unwrap_or("?"))));
    }
    let horizon = input.params().horizon;
    let (code, error, body, rows) = match input.subject().run() {
        Ok(r) => (0, None, json!({ "report": to_value(&r)? }), report_rows(&r)),
        Err(e) => {
            let code = dim_code(&e);
            if code != 3 {
                return Err(Failure::new(code, e.to_string()));
            }
            let series = match &e {
                DimError::Hypothesis { series, .. } => vec![(**series).clone()],
                _ => Vec::new(),
            };
            (3, Some(e.to_string()), json!({ "report": Value::Null, "series": to_value(&series)? }), series_rows(&series))
        }
    };
    Report { command: "annular", echo: &input.echo, horizon, exit_code: code, error: error.clone(), body, rows }
        .write(out, w)?;
    if let Some(e) = error {
        eprintln!("escdim: {e}");
    }
    Ok(code)
}

fn build_grid(input: &Input, args: &CoverArgs) -> Result<Grid, Failure> {
    let band = Band::new(input.band_spec()).map_err(|e| Failure::spec(e.to_string()))?;
    let gp = GridParams::for_band(&band, input.params())?;
    let mut grid = Grid::new(band, gp)?;
    for s in &args.set {
        let (name, value) = s.split_once('=').ok_or_else(|| Failure::spec(format!("--set {s}: expected NAME=VALUE")))?;
        let value: f64 = value.trim().parse().map_err(|_| Failure::spec(format!("--set {s}: value is not a number")))?;
        grid.ledger.set(name.trim(), value)?;
    }
    grid.budget = args.budget;
    Ok(grid)
}

fn read_word(path: &PathBuf) -> Result<Vec<Letter>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::spec(format!("{}: {e}", path.display())))?;
    parse_word(&text).map_err(|e| Failure::spec(format!("{}: {e}", path.display())))
}

fn cmd_cover(args: &CoverArgs, w: impl Write) -> Result<u8, Failure> {
    let input = args.source.load(Kind::Band)?;
    let grid = build_grid(&input, args)?;
    let (mut code, mut error) = (0, None);
    let (body, rows) = match args.mode {
        Mode::Sum => {
            let sw = grid.cover_sweep(args.exponent, args.depth)?;
            let rows = sw
                .rows
                .iter()
                .map(|r| Row::new("cover-sum-log", r.n, r.log_bound.to_f64(), if r.below_halving { "below-halving" } else { "" }))
                .collect();
            (to_value(&sw)?, rows)
        }
        Mode::Count => count(&grid, args)?,
        Mode::Profile => {
            let word = match &args.word {
                Some(p) => read_word(p)?,
                None => grid.canonical_word(grid.float_depth(args.depth))?,
            };
            let mut cyl = grid.cylinder(word[0].j, word[0].k, Family::Upper)?;
            for l in &word[1..] {
                cyl = grid.cylinder_extend(&cyl, l.j, l.k)?;
            }
            let p = grid.local_dimension_profile(&mut cyl, args.depth)?;
            let mut rows: Vec<Row> = p.rows.iter().map(|r| Row::new("profile-inf", r.n, r.inf_sampled, "")).collect();
            rows.extend(series_rows(&[p.phi.clone(), p.psi.clone(), p.gap.clone()]));
            let packing = p.psi.limsup().map(|s| 1.0 + s);
            (json!({ "word": to_value(&word)?, "profile": to_value(&p)?, "packing_from_profile": packing }), rows)
        }
        Mode::Pullback => {
            let depth = args.word.as_ref().map_or(Ok(args.depth), |p| read_word(p).map(|w| w.len()))?;
            if depth == 0 {
                return Err(Failure::spec("pullback depth must be at least 1"));
            }
            let plan = plan_depth(&grid, args.bits, depth + 1);
            if plan < depth {
                return Err(Failure::new(4, format!("depth {depth} exceeds the precision plan: {plan} at {} bits", args.bits)));
            }
            let i = grid.params.n_start + depth - 1;
            let mid = 0.5 * (grid.band.ln_a(i).map_err(CoverError::from)?.to_f64() + grid.band.ln_b(i).map_err(CoverError::from)?.to_f64());
            let target = LogPolar { ln_mod: mid, arg: args.arg };
            let word = match &args.word {
                Some(p) => read_word(p)?,
                None => fit_word(&grid, target, depth)?,
            };
            let pb = pullback_point(&grid, &word, target, args.bits)?;
            if !pb.all_positive {
                code = 3;
                error = Some(format!("orbit verified through step {} of {}", pb.verified_through, depth));
            }
            let mut rows = Vec::new();
            for m in &pb.margins {
                let flag = if m.positive() { "positive" } else { "negative" };
                rows.push(Row::new("margin-ln-lower", m.m, m.ln_lower, flag));
                rows.push(Row::new("margin-ln-upper", m.m, m.ln_upper, flag));
            }
            (json!({ "word": to_value(&word)?, "target": { "ln_mod": mid, "arg": args.arg }, "pullback": to_value(&pb)? }), rows)
        }
    };
    let body = json!({
        "mode": format!("{:?}", args.mode).to_lowercase(),
        "result": body,
        "ledger": { "grid": grid.params, "constants": grid.ledger, "budget": grid.budget },
    });
    Report { command: "cover", echo: &input.echo, horizon: input.params().horizon, exit_code: code, error: error.clone(), body, rows }
        .write(args.out, w)?;
    if let Some(e) = error {
        eprintln!("escdim: {e}");
    }
    Ok(code)
}

/// Samples kept from a long j-range.
const COUNT_SAMPLES: u64 = 64;

fn count(grid: &Grid, args: &CoverArgs) -> Result<(Value, Vec<Row>), Failure> {
    let n = args.depth;
    let range = grid.j_range(n)?;
    let js: Vec<i64> = match args.j {
        Some(j) => vec![j],
        None => {
            let step = range.len().div_ceil(COUNT_SAMPLES).max(1) as i64;
            (range.lo..=range.hi).step_by(step as usize).collect()
        }
    };
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &j in &js {
        let bound = grid.count_bounds(n, j)?;
        let exact = match grid.count_branches(n, j, args.k, CountMode::Exact) {
            Ok(c) => Some(c),
            Err(e @ CoverError::Budget { .. }) if args.j.is_none() => {
                rows.push(Row::new("count-exact-upper", n, f64::NAN, format!("j={j};over-budget")));
                cells.push(json!({ "j": j, "bound": to_value(&bound)?, "exact": Value::Null, "note": e.to_string() }));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let c = exact.expect("exact count");
        let (lo, hi) = (c.lower.to_f64(), c.upper.to_f64());
        let inside = bound.lower.to_f64() <= lo && hi <= bound.upper.to_f64();
        let flag = format!("j={j};{}", if inside { "in-bracket" } else { "outside-bracket" });
        rows.push(Row::new("count-bound-lower", n, bound.lower.to_f64(), format!("j={j}")));
        rows.push(Row::new("count-exact-lower", n, lo, flag.clone()));
        rows.push(Row::new("count-exact-upper", n, hi, flag));
        rows.push(Row::new("count-bound-upper", n, bound.upper.to_f64(), format!("j={j}")));
        cells.push(json!({ "j": j, "bound": to_value(&bound)?, "exact": to_value(&c)?, "in_bracket": inside }));
    }
    let body = json!({
        "n": n,
        "k": args.k,
        "j_range": [range.lo, range.hi],
        "count_regime": grid.count_regime(),
        "cells": cells,
    });
    Ok((body, rows))
}

fn selftest(mut w: impl Write) -> Result<u8, Failure> {
    let mut failed = 0;
    for name in NAMES {
        let p = preset(name, PresetArgs::default()).map_err(Failure::spec)?;
        let verdict = match p.subject.run() {
            Ok(r) => p.expected.check(&r),
            Err(e) => Err(vec![e.to_string()]),
        };
        let line = match verdict {
            Ok(()) => format!("ok   {name}"),
            Err(bad) => {
                failed += 1;
                format!("FAIL {name}: {}", bad.join("; "))
            }
        };
        writeln!(w, "{line}").map_err(|e| Failure::new(1, e.to_string()))?;
    }
    Ok(if failed == 0 { 0 } else { 1 })
}
