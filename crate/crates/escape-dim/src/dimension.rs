//! Hausdorff and packing dimension bounds for the escaping set of a band,
//! evaluated as finite-horizon ratio series.
//!
//! Every sum runs from the analysis start `s` (the trimmed prefix is
//! dropped), so `Σ ln a` below means `ln a_s + ⋯ + ln a_n`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::levelnum::LevelReal;
use crate::sequences::{
    check_assumptions, AssumptionParams, AssumptionReport, Band, EscapeBandSpec, LambdaSpec, SeqError, Sequence, SequenceSpec, Trim,
    Verdict,
};
use crate::series::{ratio_step, value_step, ExprId, Flagged, RatioSeries, Step, Stop, WITNESS_TOL};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DimError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("assumption clause(s) {clauses} not witnessed: {detail}")]
    Assumptions { clauses: String, detail: String },
    #[error("pre-asymptotic index {n}: the denominator is not positive; evaluate at a larger n or trim the prefix")]
    PreAsymptotic { n: usize },
    #[error("x_{0} lies outside [a_{0}, b_{0}]")]
    OutOfBand(usize),
    #[error("value at n = {0} cannot be resolved in level arithmetic")]
    Unresolved(usize),
    #[error("refused: {0}")]
    Refused(String),
    #[error("hypothesis not witnessed: {what}")]
    Hypothesis { what: String, series: Box<RatioSeries> },
}

/// Case tags of the extremal classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "(a)")]
    A,
    #[serde(rename = "(b)")]
    B,
    #[serde(rename = "(c)")]
    C,
    #[serde(rename = "(d)")]
    D,
}

impl Tag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Tag::A => "(a)",
            Tag::B => "(b)",
            Tag::C => "(c)",
            Tag::D => "(d)",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub value: f64,
    pub source: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub heuristic: bool,
}

/// A dimension interval inside `[1, 2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Endpoint,
    pub hi: Endpoint,
    /// Smallest finite-horizon residual among the witnesses that pinned
    /// an endpoint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

fn endpoint(value: f64, source: &str) -> Endpoint {
    Endpoint { value, source: source.into(), heuristic: false }
}

/// `1 + x` clamped into `[1, 2]`.
pub fn dim_from(x: f64) -> f64 {
    if x.is_nan() {
        return 2.0;
    }
    1.0 + x.clamp(0.0, 1.0)
}

impl Interval {
    pub fn trivial() -> Self {
        Interval { lo: endpoint(1.0, "trivial"), hi: endpoint(2.0, "trivial"), residual: None }
    }

    pub fn width(&self) -> f64 {
        self.hi.value - self.lo.value
    }

    pub fn is_point(&self) -> bool {
        self.width() <= 1e-12
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo.value - 1e-12 <= x && x <= self.hi.value + 1e-12
    }

    pub fn note(&mut self, residual: Option<f64>) {
        if let Some(e) = residual.filter(|e| e.is_finite()) {
            let e = e.max(0.0);
            self.residual = Some(self.residual.map_or(e, |r| r.min(e)));
        }
    }

    /// Raises the lower endpoint; values above `hi` are recorded as a
    /// conflict and capped.
    pub fn raise(&mut self, v: f64, source: &str, diags: &mut Vec<String>) {
        let v = v.clamp(1.0, 2.0);
        if v > self.hi.value + 1e-3 {
            diags.push(format!("{source}: lower bound {v:.6} exceeds upper {:.6} ({})", self.hi.value, self.hi.source));
        }
        let v = v.min(self.hi.value);
        if v > self.lo.value || (v == self.lo.value && self.lo.source == "trivial") {
            self.lo = endpoint(v, source);
        }
    }

    pub fn lower(&mut self, v: f64, source: &str, diags: &mut Vec<String>) {
        let v = v.clamp(1.0, 2.0);
        if v < self.lo.value - 1e-3 {
            diags.push(format!("{source}: upper bound {v:.6} below lower {:.6} ({})", self.lo.value, self.lo.source));
        }
        let v = v.max(self.lo.value);
        if v < self.hi.value || (v == self.hi.value && self.hi.source == "trivial") {
            self.hi = endpoint(v, source);
        }
    }

    pub fn pin(&mut self, v: f64, source: &str, residual: Option<f64>, diags: &mut Vec<String>) {
        self.raise(v, source, diags);
        self.lower(v, source, diags);
        self.note(residual);
    }
}

/// A result whose hypotheses were witnessed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Applied {
    pub result: String,
    pub conclusion: String,
    pub witness: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    pub source: String,
}

/// Endpoints from the candidate-sequence search; not sound bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremalBounds {
    pub hausdorff: [f64; 2],
    pub packing: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    pub schema: u32,
    pub hausdorff: Interval,
    pub packing: Interval,
    /// Strongest witnessed case tag, by priority (a), (d), (c), (b).
    pub tag: Option<Tag>,
    pub tags: Vec<Tag>,
    pub applied: Vec<Applied>,
    pub start: usize,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packing_estimate: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured_d: Option<Estimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extremal: Option<ExtremalBounds>,
    pub series: Vec<RatioSeries>,
    pub diagnostics: Vec<String>,
}

impl DimensionReport {
    pub fn new(start: usize, horizon: usize) -> Self {
        DimensionReport {
            schema: SCHEMA_VERSION,
            hausdorff: Interval::trivial(),
            packing: Interval::trivial(),
            tag: None,
            tags: Vec::new(),
            applied: Vec::new(),
            start,
            horizon,
            packing_estimate: None,
            measured_d: None,
            extremal: None,
            series: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn series(&self, expr: ExprId) -> Option<&RatioSeries> {
        self.series.iter().find(|s| s.expr == expr)
    }

    pub fn push_series(&mut self, s: RatioSeries) {
        if let Some(slot) = self.series.iter_mut().find(|t| t.expr == s.expr) {
            *slot = s;
        } else {
            self.series.push(s);
        }
    }

    pub fn apply(&mut self, result: &str, conclusion: &str, witness: String) {
        self.applied.push(Applied { result: result.into(), conclusion: conclusion.into(), witness });
    }

    pub fn pin_hausdorff(&mut self, v: f64, source: &str, residual: Option<f64>) {
        self.hausdorff.pin(v, source, residual, &mut self.diagnostics);
    }

    pub fn pin_packing(&mut self, v: f64, source: &str, residual: Option<f64>) {
        self.packing.pin(v, source, residual, &mut self.diagnostics);
    }

    /// Flat `(expression-id, n, value)` rows.
    pub fn rows(&self) -> Vec<(&'static str, usize, f64)> {
        self.series
            .iter()
            .flat_map(|s| s.values.iter().map(move |&(n, v)| (s.expr.as_str(), n, v)))
            .collect()
    }
}

/// Logs of the band from the analysis start, with prefix sums.
struct Table {
    start: usize,
    la: Vec<Flagged>,
    lb: Vec<Flagged>,
    ld: Vec<Flagged>,
    sa: Vec<Option<Flagged>>,
    sb: Vec<Option<Flagged>>,
    sd: Vec<Option<Flagged>>,
    stop: String,
}

fn prefix(xs: &[Flagged]) -> Vec<Option<Flagged>> {
    let mut acc = Some(Flagged::exact(LevelReal::ZERO));
    xs.iter()
        .map(|x| {
            acc = acc.and_then(|s| s.add(*x));
            acc
        })
        .collect()
}

impl Table {
    fn build(band: &Band, start: usize, last: usize) -> Self {
        let (mut la, mut lb, mut ld) = (Vec::new(), Vec::new(), Vec::new());
        let mut stop = format!("terms generated through n = {last}");
        for n in start..=last {
            let row = (|| -> Result<_, SeqError> {
                let (d, flag) = band.ln_delta(n)?;
                Ok((band.ln_a(n)?, band.ln_b(n)?, Flagged { v: d, flag }))
            })();
            match row {
                Ok((a, b, d)) => {
                    la.push(Flagged::exact(a));
                    lb.push(Flagged::exact(b));
                    ld.push(d);
                }
                Err(e) => {
                    stop = e.to_string();
                    break;
                }
            }
        }
        let (sa, sb, sd) = (prefix(&la), prefix(&lb), prefix(&ld));
        Table { start, la, lb, ld, sa, sb, sd, stop }
    }

    fn get<T: Copy>(&self, v: &[T], n: usize) -> Result<T, String> {
        n.checked_sub(self.start)
            .and_then(|i| v.get(i).copied())
            .ok_or_else(|| self.stop.clone())
    }

    fn la(&self, n: usize) -> Result<Flagged, String> {
        self.get(&self.la, n)
    }

    fn lb(&self, n: usize) -> Result<Flagged, String> {
        self.get(&self.lb, n)
    }

    fn ld(&self, n: usize) -> Result<Flagged, String> {
        self.get(&self.ld, n)
    }

    fn sum(&self, v: &[Option<Flagged>], n: usize) -> Result<Flagged, String> {
        if n + 1 == self.start {
            return Ok(Flagged::exact(LevelReal::ZERO));
        }
        self.get(v, n)?.ok_or_else(|| format!("level cap in prefix sum at n = {n}"))
    }

    fn sa(&self, n: usize) -> Result<Flagged, String> {
        self.sum(&self.sa, n)
    }

    fn sb(&self, n: usize) -> Result<Flagged, String> {
        self.sum(&self.sb, n)
    }

    fn sd(&self, n: usize) -> Result<Flagged, String> {
        self.sum(&self.sd, n)
    }
}

fn add(x: Flagged, y: Flagged) -> Result<Flagged, String> {
    x.add(y).ok_or_else(|| "level cap in sum".to_string())
}

fn sub(x: Flagged, y: Flagged) -> Result<Flagged, String> {
    x.sub(y).ok_or_else(|| "level cap in difference".to_string())
}

fn positive_part(x: Flagged) -> Flagged {
    if x.v.is_positive() {
        x
    } else {
        Flagged { v: LevelReal::ZERO, flag: x.flag }
    }
}

/// Candidate extremizers `x_k` for the search over sequences in the band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Candidate {
    A,
    B,
    /// `Δ_{k+1}` clamped into `[a_k, b_k]`.
    ClampedDelta,
}

impl Candidate {
    pub const ALL: [Candidate; 3] = [Candidate::A, Candidate::B, Candidate::ClampedDelta];

    fn exprs(self) -> (ExprId, ExprId) {
        match self {
            Candidate::A => (ExprId::PhiA, ExprId::PsiA),
            Candidate::B => (ExprId::PhiB, ExprId::PsiB),
            Candidate::ClampedDelta => (ExprId::PhiDelta, ExprId::PsiDelta),
        }
    }
}

/// A band, its assumption verdicts and the log table the series read.
pub struct Analysis<'a> {
    band: &'a Band,
    pub assumptions: AssumptionReport,
    pub horizon: usize,
    table: Table,
}

impl<'a> Analysis<'a> {
    pub fn new(band: &'a Band, params: &AssumptionParams) -> Result<Self, DimError> {
        let assumptions = check_assumptions(band, params)?;
        let table = Table::build(band, assumptions.start, params.horizon + 1);
        Ok(Analysis { band, assumptions, horizon: params.horizon, table })
    }

    pub fn band(&self) -> &Band {
        self.band
    }

    pub fn start(&self) -> usize {
        self.assumptions.start
    }

    pub fn report(&self) -> DimensionReport {
        let mut r = DimensionReport::new(self.start(), self.horizon);
        if self.assumptions.start > 1 {
            r.diagnostics.push(format!("prefix n < {} trimmed", self.assumptions.start));
        }
        r
    }

    pub fn require_assumptions(&self) -> Result<(), DimError> {
        if self.assumptions.all_pass() {
            return Ok(());
        }
        let failing = self.assumptions.failing();
        let detail = failing
            .iter()
            .map(|k| {
                let c = match *k {
                    "a" => &self.assumptions.a,
                    "b" => &self.assumptions.b,
                    "c" => &self.assumptions.c,
                    _ => &self.assumptions.d,
                };
                format!("({k}) {:?}: {}", c.verdict, c.detail)
            })
            .collect::<Vec<_>>()
            .join("; ");
        Err(DimError::Assumptions { clauses: failing.join(","), detail })
    }

    fn run(&self, expr: ExprId, first: usize, f: impl FnMut(usize, bool) -> Result<Step, String>) -> RatioSeries {
        RatioSeries::build(expr, first.max(self.start())..=self.horizon, f)
    }

    fn count(&self, n: usize) -> f64 {
        (n + 1 - self.start()) as f64
    }

    /// `t_n = exp((ln Δ_{n+1} − Σ ln a) / (n − s + 1))`
    pub fn small_modulus_root(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::SmallModulusRoot, 1, |n, _| {
            let x = sub(t.ld(n + 1)?, t.sa(n)?)?;
            if x.flag {
                return Ok(Step::Stop(Stop::Unresolved { index: n }));
            }
            let x = x.v.scale(1.0 / self.count(n)).map_err(|e| e.to_string())?;
            Ok(match x.exp() {
                Ok(v) => value_step(n, Flagged::exact(v)),
                Err(_) => Step::Stop(Stop::Overflow { index: n, sign: 1 }),
            })
        })
    }

    /// `u_n = ln Δ_{n+1} / Σ ln a`
    pub fn delta_over_product(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::DeltaOverProduct, 1, |n, started| Ok(ratio_step(n, t.ld(n + 1)?, t.sa(n)?, started)))
    }

    /// `Σ ln a / (n − s + 1)`
    pub fn geometric_mean_log(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::GeometricMeanLog, 1, |n, _| {
            let s = t.sa(n)?;
            let v = s.v.scale(1.0 / self.count(n)).map_err(|e| e.to_string())?;
            Ok(value_step(n, Flagged { v, flag: s.flag }))
        })
    }

    /// `Σ_{k<=n} ln Δ_k / (Σ_{k<n} ln a_k + max(0, ln a_n − ln Δ_{n+1}))`
    pub fn hausdorff_upper(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::HausdorffUpper, self.start() + 1, |n, started| {
            let gap = positive_part(sub(t.la(n)?, t.ld(n + 1)?)?);
            let den = add(t.sa(n - 1)?, gap)?;
            Ok(ratio_step(n, t.sd(n)?, den, started))
        })
    }

    /// `Σ_{k<=n+1} ln Δ_k / Σ_{k<=n} ln a_k`
    pub fn packing_upper(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::PackingUpper, 1, |n, started| Ok(ratio_step(n, t.sd(n + 1)?, t.sa(n)?, started)))
    }

    /// `Σ_{k<=n+1} ln Δ_k / Σ_{k<=n} ln b_k`
    pub fn packing_lower(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::PackingLower, 1, |n, started| Ok(ratio_step(n, t.sd(n + 1)?, t.sb(n)?, started)))
    }

    /// `ln Δ_{n+1} − ln a_n`
    pub fn delta_over_a(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::DeltaOverA, 1, |n, _| Ok(value_step(n, sub(t.ld(n + 1)?, t.la(n)?)?)))
    }

    /// `ln Δ_{n+1} − ln b_n`
    pub fn delta_over_b(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::DeltaOverB, 1, |n, _| Ok(value_step(n, sub(t.ld(n + 1)?, t.lb(n)?)?)))
    }

    pub fn log_b_over_log_a(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::LogBOverLogA, 1, |n, started| Ok(ratio_step(n, t.lb(n)?, t.la(n)?, started)))
    }

    /// `ln Δ_{n+1} / ln a_n`
    pub fn ratio_a(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::RatioA, 1, |n, started| Ok(ratio_step(n, t.ld(n + 1)?, t.la(n)?, started)))
    }

    /// `ln Δ_{n+1} / ln b_n`
    pub fn ratio_b(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::RatioB, 1, |n, started| Ok(ratio_step(n, t.ld(n + 1)?, t.lb(n)?, started)))
    }

    /// `Σ ln b / Σ ln a`
    pub fn stolz_cesaro(&self) -> RatioSeries {
        let t = &self.table;
        self.run(ExprId::StolzCesaro, 1, |n, started| Ok(ratio_step(n, t.sb(n)?, t.sa(n)?, started)))
    }

    fn ln_x(&self, c: Candidate, k: usize) -> Result<Flagged, String> {
        let t = &self.table;
        Ok(match c {
            Candidate::A => t.la(k)?,
            Candidate::B => t.lb(k)?,
            Candidate::ClampedDelta => {
                let d = t.ld(k + 1)?;
                Flagged { v: d.v.max(t.la(k)?.v).min(t.lb(k)?.v), flag: d.flag }
            }
        })
    }

    /// `φ_n` and `ψ_n` along one candidate sequence.
    pub fn extremal_series(&self, c: Candidate) -> (RatioSeries, RatioSeries) {
        let t = &self.table;
        let s = self.start();
        // running Σ ln x_k and Σ ln min(Δ_{k+1}, x_k), index n - s
        let mut px: Vec<Result<Flagged, String>> = Vec::new();
        let mut pm: Vec<Result<Flagged, String>> = Vec::new();
        let zero = Flagged::exact(LevelReal::ZERO);
        for k in s..=self.horizon {
            let step = || -> Result<(Flagged, Flagged), String> {
                let x = self.ln_x(c, k)?;
                let d = t.ld(k + 1)?;
                let m = Flagged { v: d.v.min(x.v), flag: d.flag || x.flag };
                let (sx, sm) = match (px.last(), pm.last()) {
                    (Some(a), Some(b)) => (a.clone()?, b.clone()?),
                    _ => (zero, zero),
                };
                Ok((add(sx, x)?, add(sm, m)?))
            };
            match step() {
                Ok((x, m)) => {
                    px.push(Ok(x));
                    pm.push(Ok(m));
                }
                Err(e) => {
                    px.push(Err(e.clone()));
                    pm.push(Err(e));
                    break;
                }
            }
        }
        let at = |v: &Vec<Result<Flagged, String>>, n: usize| -> Result<Flagged, String> {
            if n + 1 == s {
                return Ok(zero);
            }
            v.get(n - s).cloned().unwrap_or_else(|| Err(t.stop.clone()))
        };
        let (phi_id, psi_id) = c.exprs();
        let phi = self.run(phi_id, s + 1, |n, started| {
            let gap = positive_part(sub(self.ln_x(c, n)?, t.ld(n + 1)?)?);
            let den = add(at(&px, n - 1)?, gap)?;
            Ok(ratio_step(n, at(&pm, n - 1)?, den, started))
        });
        let psi = self.run(psi_id, s, |n, started| Ok(ratio_step(n, at(&pm, n)?, at(&px, n)?, started)));
        (phi, psi)
    }

    /// `v_n = (log⁺ b_n)^{1/n}`, from `n = 1` regardless of trimming.
    pub fn log_b_root(&self) -> RatioSeries {
        RatioSeries::build(ExprId::LogBRoot, 1..=self.horizon, |n, _| {
            let lb = self.band.ln_b(n).map_err(|e| e.to_string())?;
            if !lb.is_positive() {
                return Ok(Step::Value(0.0));
            }
            let e = lb.ln().and_then(|l| l.scale(1.0 / n as f64)).map_err(|e| e.to_string())?;
            Ok(match e.exp() {
                Ok(v) => value_step(n, Flagged::exact(v)),
                Err(_) => Step::Stop(Stop::Overflow { index: n, sign: 1 }),
            })
        })
    }
}

fn fmt_last(s: &RatioSeries) -> String {
    match (s.last_index(), s.last()) {
        (Some(n), Some(v)) => format!("{} at n = {n}: {v:.6e}, trend {:?}", s.expr.as_str(), s.trend),
        _ => format!("{}: no values, trend {:?}", s.expr.as_str(), s.trend),
    }
}

impl Analysis<'_> {
    /// Small-modulus test: `t_n → 0` gives `dim_H <= 1`.
    pub fn apply_small_modulus(&self, r: &mut DimensionReport) -> bool {
        let t = self.small_modulus_root();
        let ok = t.tends_to_zero();
        if ok {
            let eps = t.last().map(|v| v.max(0.0));
            r.hausdorff.lower(1.0, "small-modulus", &mut r.diagnostics);
            r.hausdorff.note(eps);
            r.apply("small-modulus", "dim_H <= 1", fmt_last(&t));
        }
        r.push_series(t);
        ok
    }

    /// Log-ratio sufficient condition for the small-modulus test.
    pub fn apply_log_ratio(&self, r: &mut DimensionReport) -> bool {
        let u = self.delta_over_product();
        let g = self.geometric_mean_log();
        let diverges = g.diverges_up() || self.assumptions.b.verdict == Verdict::Pass;
        let below = u.liminf().is_some_and(|l| l < 1.0 - WITNESS_TOL);
        let ok = diverges && below;
        if ok {
            r.hausdorff.lower(1.0, "log-ratio", &mut r.diagnostics);
            r.apply("log-ratio", "dim_H <= 1", format!("{}; geometric mean diverges", fmt_last(&u)));
        }
        r.push_series(u);
        r.push_series(g);
        ok
    }

    /// The sound bounds available under the standing assumptions.
    pub fn apply_basic_bounds(&self, r: &mut DimensionReport) -> Result<(), DimError> {
        self.require_assumptions()?;
        let d = &mut r.diagnostics;
        r.hausdorff.raise(1.0, "basic-bounds", d);
        r.packing.raise(1.0, "basic-bounds", d);
        let h = self.hausdorff_upper();
        let p = self.packing_upper();
        if let Some(l) = h.liminf() {
            r.hausdorff.lower(dim_from(l), "basic-bounds", d);
            if l <= 0.0 {
                r.hausdorff.note(h.last());
            }
        }
        if let Some(l) = p.limsup() {
            r.packing.lower(dim_from(l), "basic-bounds", d);
            if l <= 0.0 {
                r.packing.note(p.last());
            }
        }
        let w = self.delta_over_a();
        let lr = self.log_b_over_log_a();
        let source = if w.bounded_above() {
            Some(("bounded-ratio", fmt_last(&w)))
        } else if self.band.spec().lambda.sup_modulus().is_some_and(f64::is_finite) && lr.bounded_above() {
            Some(("bounded-log-ratio", format!("sup |λ| finite; {}", fmt_last(&lr))))
        } else {
            None
        };
        if let Some((src, witness)) = source {
            r.hausdorff.lower(1.0, src, &mut r.diagnostics);
            let pl = self.packing_lower();
            if let Some(l) = pl.limsup() {
                r.packing.raise(dim_from(l), src, &mut r.diagnostics);
            }
            r.apply(src, "dim_H = 1; dim_P >= 1 + limsup packing-lower", witness);
            r.push_series(pl);
        }
        r.push_series(h);
        r.push_series(p);
        r.push_series(w);
        r.push_series(lr);
        Ok(())
    }

    /// Evaluates the four case hypotheses and applies every witnessed one.
    pub fn apply_classification(&self, r: &mut DimensionReport) -> Result<(), DimError> {
        self.require_assumptions()?;
        let ra = self.ratio_a();
        let rb = self.ratio_b();
        let u = self.delta_over_product();
        let db = self.delta_over_b();
        let tol = WITNESS_TOL;
        let mut tags = Vec::new();
        if ra.limsup().is_some_and(|v| v <= tol) {
            tags.push(Tag::A);
        }
        if ra.liminf().is_some_and(|v| v < 1.0 - tol) || u.liminf().is_some_and(|v| v < 1.0 - tol) {
            tags.push(Tag::B);
        }
        if rb.liminf().is_some_and(|v| v >= 1.0 - tol) {
            tags.push(Tag::C);
        }
        if rb.liminf().is_some_and(|v| v > 1.0 + tol) || db.bounded_below() {
            tags.push(Tag::D);
        }
        let (phi_a, psi_a) = self.extremal_series(Candidate::A);
        let near_one = |s: &RatioSeries| s.last().map(|v| (1.0 - v).abs());
        for tag in &tags {
            match tag {
                Tag::A => {
                    let eps = ra.last().map(|v| v.max(0.0));
                    r.pin_hausdorff(1.0, "case-(a)", eps);
                    r.pin_packing(1.0, "case-(a)", eps);
                    r.apply("case-(a)", "dim_H = dim_P = 1", fmt_last(&ra));
                }
                Tag::B => {
                    r.hausdorff.lower(1.0, "case-(b)", &mut r.diagnostics);
                    r.apply("case-(b)", "dim_H = 1", fmt_last(&ra));
                }
                Tag::C => {
                    r.pin_packing(2.0, "case-(c)", near_one(&psi_a));
                    r.apply("case-(c)", "dim_P = 2", fmt_last(&rb));
                }
                Tag::D => {
                    r.pin_hausdorff(2.0, "case-(d)", near_one(&phi_a));
                    r.pin_packing(2.0, "case-(d)", near_one(&psi_a));
                    r.apply("case-(d)", "dim_H = dim_P = 2", format!("{}; {}", fmt_last(&rb), fmt_last(&db)));
                }
            }
        }
        r.tag = [Tag::A, Tag::D, Tag::C, Tag::B].into_iter().find(|t| tags.contains(t));
        r.tags = tags;
        for s in [ra, rb, u, db] {
            r.push_series(s);
        }
        Ok(())
    }

    /// Candidate search for the infimum/supremum over sequences in the band.
    /// With `pin`, the heuristic endpoints become the report's intervals.
    pub fn apply_extremal(&self, r: &mut DimensionReport, pin: bool) -> Result<(), DimError> {
        self.require_assumptions()?;
        let mut phis = Vec::new();
        let mut psis = Vec::new();
        for c in Candidate::ALL {
            let (phi, psi) = self.extremal_series(c);
            if let Some(v) = phi.liminf() {
                phis.push(dim_from(v));
            }
            if let Some(v) = psi.limsup() {
                psis.push(dim_from(v));
            }
            r.push_series(phi);
            r.push_series(psi);
        }
        let span = |v: &[f64]| -> Option<[f64; 2]> {
            (!v.is_empty()).then(|| [v.iter().copied().fold(2.0, f64::min), v.iter().copied().fold(1.0, f64::max)])
        };
        let (Some(h), Some(p)) = (span(&phis), span(&psis)) else {
            r.diagnostics.push("candidate search produced no values".into());
            return Ok(());
        };
        r.extremal = Some(ExtremalBounds { hausdorff: h, packing: p });
        if pin {
            let heur = |v: f64| Endpoint { value: v, source: "extremal-search".into(), heuristic: true };
            r.hausdorff = Interval { lo: heur(h[0]), hi: heur(h[1]), residual: Some(h[1] - h[0]) };
            r.packing = Interval { lo: heur(p[0]), hi: heur(p[1]), residual: Some(p[1] - p[0]) };
            r.apply("extremal-search", "heuristic endpoints", "candidates a, b, clamped Δ".into());
        }
        Ok(())
    }

    /// Moderately slow escape: bounded `(log⁺ b_n)^{1/n}` gives `dim_H = 1`.
    pub fn moderately_slow(&self) -> ModerateEscape {
        let series = self.log_b_root();
        let min = series.values.iter().copied().reduce(|a, b| if b.1 < a.1 { b } else { a });
        let overflow = matches!(series.stop, Some(Stop::Overflow { .. }));
        let bounded = !overflow && min.is_some() && series.bounded_above();
        ModerateEscape { series, bounded, min }
    }

    pub fn apply_moderate(&self, r: &mut DimensionReport) -> bool {
        let m = self.moderately_slow();
        let ok = m.bounded && self.assumptions.all_pass();
        if ok {
            r.hausdorff.lower(1.0, "moderate-escape", &mut r.diagnostics);
            r.apply("moderate-escape", "dim_H = 1", fmt_last(&m.series));
        }
        r.push_series(m.series);
        ok
    }

    /// Thin-band hypotheses: bounded λ and `ln b_n / ln a_n → 1`.
    pub fn thin_hypotheses(&self) -> Result<RatioSeries, DimError> {
        self.require_assumptions()?;
        let lr = self.log_b_over_log_a();
        if !self.band.spec().lambda.sup_modulus().is_some_and(f64::is_finite) {
            return Err(DimError::Hypothesis { what: "sup |λ_n| < ∞".into(), series: Box::new(lr) });
        }
        if lr.approaches(1.0).is_none() {
            return Err(DimError::Hypothesis { what: "ln b_n / ln a_n → 1".into(), series: Box::new(lr) });
        }
        Ok(lr)
    }

    /// Thin bands: `dim_H = 1`, `dim_P = 1 + limsup packing-upper`.
    pub fn apply_thin(&self, r: &mut DimensionReport) -> Result<(), DimError> {
        let lr = self.thin_hypotheses()?;
        let p = self.packing_upper();
        let Some(l) = p.limsup() else {
            return Err(DimError::Hypothesis { what: "packing series has no values".into(), series: Box::new(p) });
        };
        let est = dim_from(l);
        let residual = p.residual();
        r.pin_hausdorff(1.0, "thin-band", lr.approaches(1.0));
        r.pin_packing(est, "thin-band", residual);
        r.packing_estimate = Some(Estimate { value: est, residual, source: "thin-band".into() });
        r.apply("thin-band", "dim_H = 1; dim_P = 1 + limsup packing-upper", fmt_last(&lr));
        let sc = self.stolz_cesaro();
        r.push_series(lr);
        r.push_series(p);
        r.push_series(sc);
        Ok(())
    }

    /// Thin bands with `ln Δ_{n+1} / ln a_n → d`: `dim_P = 1 + d`.
    pub fn apply_thin_limit(&self, r: &mut DimensionReport, pin: bool) -> Result<(), DimError> {
        let lr = self.thin_hypotheses()?;
        let ra = self.ratio_a();
        match ra.trend {
            crate::series::Trend::ConvergingTo { limit, residual } => {
                let d = limit.clamp(0.0, 1.0);
                r.measured_d = Some(Estimate { value: d, residual: Some(residual), source: "thin-limit".into() });
                let est = Estimate { value: 1.0 + d, residual: Some(residual), source: "thin-limit".into() };
                let sharper = match r.packing_estimate.as_ref().and_then(|e| e.residual) {
                    Some(prev) => residual < prev,
                    None => r.packing_estimate.is_none(),
                };
                if pin {
                    r.pin_hausdorff(1.0, "thin-limit", lr.approaches(1.0));
                    r.pin_packing(1.0 + d, "thin-limit", Some(residual));
                    r.packing_estimate = Some(est);
                } else if sharper {
                    // both are point estimates of the same limit; keep the tighter one
                    if r.packing.lo.source == "thin-band" {
                        r.packing.lo = endpoint(est.value, "thin-limit");
                        r.packing.hi = endpoint(est.value, "thin-limit");
                        r.packing.residual = Some(residual);
                    }
                    r.packing_estimate = Some(est);
                }
                r.apply("thin-limit", "dim_H = 1; dim_P = 1 + d", fmt_last(&ra));
            }
            t => r.diagnostics.push(format!("thin-limit: d-series inconclusive ({t:?})")),
        }
        r.push_series(lr);
        r.push_series(ra);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModerateEscape {
    pub series: RatioSeries,
    /// Finite minimum and no blow-up through the horizon.
    pub bounded: bool,
    pub min: Option<(usize, f64)>,
}

/// `t_n` series of the small-modulus test.
pub fn small_modulus_test(band: &Band, params: &AssumptionParams) -> Result<DimensionReport, DimError> {
    let an = Analysis::new(band, params)?;
    let mut r = an.report();
    an.apply_small_modulus(&mut r);
    Ok(r)
}

/// `u_n` with the geometric-mean divergence check.
pub fn log_ratio_tests(band: &Band, params: &AssumptionParams) -> Result<DimensionReport, DimError> {
    let an = Analysis::new(band, params)?;
    let mut r = an.report();
    an.apply_log_ratio(&mut r);
    Ok(r)
}

/// Exact `φ_n(x)` for `x_1, …, x_{n+…}` given as values (`x[k-1] = x_k`).
pub fn phi(band: &Band, x: &[LevelReal], n: usize) -> Result<f64, DimError> {
    let (sx, sm, ln_xn, ld) = extremal_sums(band, x, n - 1, n)?;
    let gap = positive_part(sub(ln_xn, ld).map_err(|_| DimError::Unresolved(n))?);
    let den = add(sx, gap).map_err(|_| DimError::Unresolved(n))?;
    finish(n, sm, den)
}

/// Exact `ψ_n(x)`.
pub fn psi(band: &Band, x: &[LevelReal], n: usize) -> Result<f64, DimError> {
    let (sx, sm, _, _) = extremal_sums(band, x, n, n)?;
    finish(n, sm, sx)
}

fn finish(n: usize, num: Flagged, den: Flagged) -> Result<f64, DimError> {
    match ratio_step(n, num, den, true) {
        Step::Value(v) => Ok(v),
        Step::Stop(Stop::NonPositiveDenominator { .. }) | Step::Skip => Err(DimError::PreAsymptotic { n }),
        Step::Stop(_) => Err(DimError::Unresolved(n)),
    }
}

/// `(Σ_{k<=m} ln x_k, Σ_{k<=m} ln min(Δ_{k+1}, x_k), ln x_n, ln Δ_{n+1})`
fn extremal_sums(band: &Band, x: &[LevelReal], m: usize, n: usize) -> Result<(Flagged, Flagged, Flagged, Flagged), DimError> {
    if n == 0 || x.len() < n {
        return Err(SeqError::Param(format!("need x_1 … x_{n}")).into());
    }
    let zero = Flagged::exact(LevelReal::ZERO);
    let (mut sx, mut sm) = (zero, zero);
    let mut last = (zero, zero);
    for k in 1..=n {
        let xk = x[k - 1];
        if !xk.is_positive() {
            return Err(DimError::OutOfBand(k));
        }
        let lx = xk.ln().map_err(|source| SeqError::Level { index: k, source })?;
        if lx < band.ln_a(k)? || lx > band.ln_b(k)? {
            return Err(DimError::OutOfBand(k));
        }
        let (ld, flag) = band.ln_delta(k + 1)?;
        let lx = Flagged::exact(lx);
        let ld = Flagged { v: ld, flag };
        if k <= m {
            let unres = |_| DimError::Unresolved(k);
            sx = add(sx, lx).map_err(unres)?;
            sm = add(sm, Flagged { v: ld.v.min(lx.v), flag }).map_err(unres)?;
        }
        last = (lx, ld);
    }
    Ok((sx, sm, last.0, last.1))
}

/// Candidate search over `x_k ∈ {a_k, b_k, clamp(Δ_{k+1})}`; endpoints are
/// marked heuristic.
pub fn extremal_bounds(band: &Band, params: &AssumptionParams) -> Result<DimensionReport, DimError> {
    let an = Analysis::new(band, params)?;
    let mut r = an.report();
    an.apply_extremal(&mut r, true)?;
    Ok(r)
}

/// Sound upper bounds and the bounded-ratio refinements.
pub fn basic_bounds(band: &Band, params: &AssumptionParams) -> Result<DimensionReport, DimError> {
    let an = Analysis::new(band, params)?;
    let mut r = an.report();
    an.apply_basic_bounds(&mut r)?;
    Ok(r)
}

pub fn classify_cases(band: &Band, params: &AssumptionParams) -> Result<DimensionReport, DimError> {
    let an = Analysis::new(band, params)?;
    let mut r = an.report();
    an.apply_basic_bounds(&mut r)?;
    an.apply_classification(&mut r)?;
    Ok(r)
}

pub fn moderately_slow_test(band: &Band, params: &AssumptionParams) -> Result<ModerateEscape, DimError> {
    Ok(Analysis::new(band, params)?.moderately_slow())
}

pub fn thin_formula(band: &Band, params: &AssumptionParams) -> Result<DimensionReport, DimError> {
    let an = Analysis::new(band, params)?;
    let mut r = an.report();
    an.apply_thin(&mut r)?;
    Ok(r)
}

pub fn thin_limit(band: &Band, params: &AssumptionParams) -> Result<DimensionReport, DimError> {
    let an = Analysis::new(band, params)?;
    let mut r = an.report();
    an.apply_thin_limit(&mut r, true)?;
    Ok(r)
}

/// Band `[a_n / c, c a_n]` around a growth rate. Refuses when
/// `a_{n+1} <= |λ_{n+1}| e^{q a_n}` fails at the horizon or the
/// geometric means of `ln a_n` visibly stop growing.
pub fn growth_rate_dims(
    a: SequenceSpec,
    c: f64,
    lambda: LambdaSpec,
    params: &AssumptionParams,
) -> Result<DimensionReport, DimError> {
    if !(c > 1.0) {
        return Err(SeqError::Param("growth-rate band needs c > 1".into()).into());
    }
    let seq = Sequence::new(a.clone())?;
    let mut first_bad = None;
    let mut last_ok = None;
    for n in 1..params.horizon {
        let (Ok(next), Ok(cur), Ok(ll)) = (seq.ln_term(n + 1), seq.term(n), lambda.ln_abs(n + 1)) else { break };
        let rhs = cur.scale(params.q).and_then(|x| x.add(LevelReal::from_f64(ll)?));
        let ok = matches!(rhs, Ok(r) if next <= r);
        if !ok {
            first_bad.get_or_insert(n);
        }
        last_ok = Some(ok);
    }
    if last_ok != Some(true) {
        let at = first_bad.map_or("no checked index".into(), |n| format!("n = {n}"));
        return Err(DimError::Refused(format!("a_{{n+1}} <= |λ_{{n+1}}| e^{{q a_n}} not witnessed ({at})")));
    }
    let base = Some(Box::new(a));
    let band = Band::new(EscapeBandSpec {
        a: SequenceSpec::ScalarBand { base: base.clone(), c: 1.0 / c },
        b: SequenceSpec::ScalarBand { base, c },
        lambda,
    })?;
    let an = Analysis::new(&band, params)?;
    // geometric-mean divergence is judged from the admissible start, whatever the trim
    let b = if an.assumptions.b.verdict == Verdict::Pass {
        an.assumptions.b.clone()
    } else {
        check_assumptions(&band, &AssumptionParams { trim: Trim::Admissible, ..params.clone() })?.b
    };
    if b.verdict != Verdict::Pass {
        return Err(DimError::Assumptions { clauses: "b".into(), detail: b.detail });
    }
    let mut r = run_all(&an)?;
    r.hausdorff.lower(1.0, "growth-rate", &mut r.diagnostics);
    r.apply("growth-rate", "dim_H = 1", format!("band [a/{c}, {c}a]"));
    Ok(r)
}

/// Runs every applicable test and intersects the sound conclusions.
pub fn analyze(band: &Band, params: &AssumptionParams) -> Result<DimensionReport, DimError> {
    run_all(&Analysis::new(band, params)?)
}

fn run_all(an: &Analysis) -> Result<DimensionReport, DimError> {
    let mut r = an.report();
    an.apply_small_modulus(&mut r);
    an.apply_log_ratio(&mut r);
    if let Err(e) = an.require_assumptions() {
        r.diagnostics.push(e.to_string());
        return Ok(r);
    }
    an.apply_basic_bounds(&mut r)?;
    an.apply_classification(&mut r)?;
    an.apply_moderate(&mut r);
    an.apply_extremal(&mut r, false)?;
    match an.apply_thin(&mut r) {
        Ok(()) => an.apply_thin_limit(&mut r, false)?,
        Err(e) => r.diagnostics.push(format!("thin-band: {e}")),
    }
    Ok(r)
}
