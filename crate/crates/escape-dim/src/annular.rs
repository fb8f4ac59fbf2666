//! Annular itineraries: a symbol sequence `s_n` plus a radii scheme
//! `R_s = R^s` or `R_s = R^{s^κ}`, compiled to the band
//! `a_n = R_{s_n}`, `b_n = R_{s_n + 1}`.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::dimension::{analyze, DimError, DimensionReport, Endpoint, Estimate, Interval};
use crate::levelnum::{LevelError, LevelReal};
use crate::sequences::{AssumptionParams, Band, EscapeBandSpec, LambdaSpec, SeqError, SequenceSpec};
use crate::series::{ratio_step, value_step, ExprId, Flagged, RatioSeries, Trend};

/// `e^4`, the stand-in for "R sufficiently large".
pub const DEFAULT_R: f64 = 54.598_150_033_144_236;

/// Seed `s_1` of the d-recurrence.
pub const EXAMPLE_S1: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `R_{s_n}`
    Lower,
    /// `R_{s_n + 1}`
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scheme {
    Power { r: f64 },
    Stretched { r: f64, kappa: f64 },
}

impl Scheme {
    pub fn r(&self) -> f64 {
        match *self {
            Scheme::Power { r } | Scheme::Stretched { r, .. } => r,
        }
    }

    pub fn kappa(&self) -> Option<f64> {
        match *self {
            Scheme::Power { .. } => None,
            Scheme::Stretched { kappa, .. } => Some(kappa),
        }
    }
}

/// Generators for `s_1, s_2, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum SRule {
    Explicit { values: Vec<f64> },
    /// `s_{n+1} = R^{(d/(κ−1)) s_n^κ}`, evaluated in reals.
    Example { d: f64, s1: f64 },
    /// `s_{n+1} = ⌊R^{q s_n}⌋`
    PowerRecurrence { q: f64, s1: f64 },
    /// `s_n = slope · n + offset`
    Linear { slope: f64, offset: f64 },
    /// `s_n = ⌊log₂(n + shift)⌋`
    Log2 { shift: f64 },
    Constant { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItinerarySpec {
    pub s: SRule,
    pub scheme: Scheme,
}

/// One itinerary entry: the real recurrence value and the annulus index
/// `max(1, ⌊raw⌋)` used by the band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SValue {
    pub raw: LevelReal,
    pub s: LevelReal,
}

fn floor_index(raw: LevelReal) -> LevelReal {
    let s = if raw.level() == 0 {
        LevelReal::from_f64(raw.to_f64().floor()).unwrap_or(LevelReal::ZERO)
    } else {
        raw
    };
    s.max(LevelReal::ONE)
}

pub struct Itinerary {
    spec: ItinerarySpec,
    memo: Mutex<Vec<SValue>>,
}

impl Itinerary {
    pub fn new(spec: ItinerarySpec) -> Result<Self, SeqError> {
        let bad = |m: &str| Err(SeqError::Param(m.into()));
        match spec.scheme {
            Scheme::Power { r } if !(r > 1.0) => return bad("itinerary needs R > 1"),
            Scheme::Stretched { r, kappa } if !(r > 1.0 && kappa > 1.0) => {
                return bad("stretched itinerary needs R > 1 and κ > 1")
            }
            _ => {}
        }
        match &spec.s {
            SRule::Example { d, s1 } => {
                if spec.scheme.kappa().is_none() {
                    return bad("the d-recurrence needs the stretched scheme");
                }
                if !(*d >= 0.0 && *s1 >= 1.0) {
                    return bad("d-recurrence needs d >= 0 and s_1 >= 1");
                }
            }
            SRule::PowerRecurrence { q, s1 } if !(*q > 0.0 && *s1 >= 1.0) => {
                return bad("power recurrence needs q > 0 and s_1 >= 1")
            }
            SRule::Explicit { values } if values.iter().any(|v| !(*v >= 1.0)) => {
                return bad("itinerary entries must be >= 1")
            }
            _ => {}
        }
        Ok(Itinerary { spec, memo: Mutex::new(Vec::new()) })
    }

    pub fn spec(&self) -> &ItinerarySpec {
        &self.spec
    }

    pub fn s(&self, n: usize) -> Result<SValue, SeqError> {
        if n == 0 {
            return Err(SeqError::ZeroIndex);
        }
        let mut memo = self.memo.lock().expect("itinerary memo poisoned");
        while memo.len() < n {
            let k = memo.len() + 1;
            let raw = self.raw(k, memo.last().copied()).map_err(|e| match e {
                Gen::Level(source) => SeqError::Level { index: k, source },
                Gen::Seq(e) => e,
            })?;
            memo.push(SValue { raw, s: floor_index(raw) });
        }
        Ok(memo[n - 1])
    }

    fn raw(&self, n: usize, prev: Option<SValue>) -> Result<LevelReal, Gen> {
        let ln_r = self.spec.scheme.r().ln();
        let f = |x: f64| LevelReal::from_f64(x).map_err(Gen::Level);
        let nf = n as f64;
        Ok(match (&self.spec.s, prev) {
            (SRule::Explicit { values }, _) => f(*values
                .get(n - 1)
                .ok_or(Gen::Seq(SeqError::Exhausted { len: values.len(), index: n }))?)?,
            (SRule::Example { s1, .. }, None) | (SRule::PowerRecurrence { s1, .. }, None) => f(*s1)?,
            (SRule::Example { d, .. }, Some(p)) => {
                let kappa = self.spec.scheme.kappa().expect("validated");
                p.raw.powf(kappa)?.scale(d / (kappa - 1.0) * ln_r)?.exp()?
            }
            (SRule::PowerRecurrence { q, .. }, Some(p)) => p.s.scale(q * ln_r)?.exp()?,
            (SRule::Linear { slope, offset }, _) => f(slope * nf + offset)?,
            (SRule::Log2 { shift }, _) => f((nf + shift).log2())?,
            (SRule::Constant { value }, _) => f(*value)?,
        })
    }

    /// `ln R_{s}` for an annulus index `s`.
    fn ln_radius_of(&self, s: LevelReal) -> Result<LevelReal, LevelError> {
        let ln_r = self.spec.scheme.r().ln();
        match self.spec.scheme {
            Scheme::Power { .. } => s.scale(ln_r),
            Scheme::Stretched { kappa, .. } => s.powf(kappa)?.scale(ln_r),
        }
    }

    /// `ln a_n` (lower) or `ln b_n` (upper).
    pub fn ln_radius(&self, n: usize, side: Side) -> Result<LevelReal, SeqError> {
        let s = self.s(n)?.s;
        let s = match side {
            Side::Lower => s,
            Side::Upper => s.add(LevelReal::ONE).map_err(|source| SeqError::Level { index: n, source })?,
        };
        self.ln_radius_of(s).map_err(|source| SeqError::Level { index: n, source })
    }

    /// `Δ_n = ((s_n+1)^κ − s_n^κ) ln R`, or `ln R` for the power scheme.
    pub fn delta(&self, n: usize) -> Result<LevelReal, SeqError> {
        let at = |source| SeqError::Level { index: n, source };
        let ln_r = self.spec.scheme.r().ln();
        let Scheme::Stretched { kappa, .. } = self.spec.scheme else {
            return LevelReal::from_f64(ln_r).map_err(at);
        };
        let s = self.s(n)?.s;
        if s.level() == 0 {
            let sf = s.to_f64();
            let growth = (kappa * (1.0 / sf).ln_1p()).exp_m1();
            s.powf(kappa).and_then(|p| p.scale(growth * ln_r)).map_err(at)
        } else {
            s.powf(kappa - 1.0).and_then(|p| p.scale(kappa * ln_r)).map_err(at)
        }
    }
}

/// `c₁` with `|ln Δ_n − (κ−1) ln s_n| <= c₁` for the stretched scheme,
/// from `κ s^{κ−1} ln R <= Δ <= κ (s+1)^{κ−1} ln R` and `s + 1 <= 2s`.
pub fn mean_value_constant(kappa: f64, r: f64) -> f64 {
    (kappa * r.ln()).ln().abs() + (kappa - 1.0) * std::f64::consts::LN_2
}

/// `a_n = R_{s_n}`, `b_n = R_{s_n + 1}`.
pub fn itinerary_band(it: &ItinerarySpec, lambda: &LambdaSpec) -> EscapeBandSpec {
    let side = |side| SequenceSpec::Itinerary { itinerary: it.clone(), side };
    EscapeBandSpec { a: side(Side::Lower), b: side(Side::Upper), lambda: lambda.clone() }
}

/// Per-index outcome of one admissibility inequality, `n` comparing
/// `s_{n+1}` with `s_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexCheck {
    /// Smallest `N` such that the inequality holds for `N <= n <= checked_through`.
    pub admissible_from: Option<usize>,
    pub first_violation: Option<usize>,
}

impl IndexCheck {
    fn from_holds(holds: &[bool]) -> Self {
        let first_violation = holds.iter().position(|h| !h).map(|i| i + 1);
        let admissible_from = match holds.last() {
            Some(true) => Some(holds.iter().rposition(|h| !h).map_or(1, |i| i + 2)),
            _ => None,
        };
        IndexCheck { admissible_from, first_violation }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItineraryAdmissibility {
    pub q: f64,
    pub checked_through: usize,
    /// Power: `s_{n+1} <= R^{q s_n}`. Stretched: `s_{n+1} <= (q / ln R)^{1/κ} R^{s_n^κ/κ}`.
    pub rule: IndexCheck,
    /// Power only: `s_{n+1} <= (q R^{s_n} + ln|λ_{n+1}|) / ln R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<IndexCheck>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<String>,
}

impl ItineraryAdmissibility {
    pub fn witnessed(&self) -> bool {
        self.rule.admissible_from.is_some()
    }
}

fn le(x: Result<LevelReal, LevelError>, y: Result<LevelReal, LevelError>) -> bool {
    matches!((x, y), (Ok(x), Ok(y)) if x <= y)
}

pub fn check_itinerary_admissible(
    it: &ItinerarySpec,
    lambda: &LambdaSpec,
    q: f64,
    horizon: usize,
) -> Result<ItineraryAdmissibility, SeqError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SeqError::Param("q must lie in (0, 1)".into()));
    }
    let itin = Itinerary::new(it.clone())?;
    let ln_r = it.scheme.r().ln();
    let mut rule = Vec::new();
    let mut exact = Vec::new();
    let mut truncated = None;
    for n in 1..horizon {
        let pair = itin.s(n).and_then(|a| Ok((a.s, itin.s(n + 1)?.s)));
        let (s, t) = match pair {
            Ok(p) => p,
            Err(e) => {
                truncated = Some(e.to_string());
                break;
            }
        };
        match it.scheme {
            Scheme::Power { .. } => {
                let ln_lambda = match lambda.ln_abs(n + 1) {
                    Ok(l) => l,
                    Err(e) => {
                        truncated = Some(e.to_string());
                        break;
                    }
                };
                rule.push(le(t.ln(), s.scale(q * ln_r)));
                let lhs = t.scale(ln_r).and_then(|x| x.sub(LevelReal::from_f64(ln_lambda)?));
                let rhs = s.scale(ln_r).and_then(LevelReal::exp).and_then(|x| x.scale(q));
                exact.push(le(lhs, rhs));
            }
            Scheme::Stretched { kappa, .. } => {
                let c = (q.ln() - ln_r.ln()) / kappa;
                let rhs = s.powf(kappa).and_then(|p| p.scale(ln_r / kappa)).and_then(|p| p.add(LevelReal::from_f64(c)?));
                rule.push(le(t.ln(), rhs));
            }
        }
    }
    Ok(ItineraryAdmissibility {
        q,
        checked_through: rule.len(),
        rule: IndexCheck::from_holds(&rule),
        exact: matches!(it.scheme, Scheme::Power { .. }).then(|| IndexCheck::from_holds(&exact)),
        truncated,
    })
}

/// How much of a divergence hypothesis a series witnesses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divergence {
    None,
    /// Running maxima keep growing per doubling of `n`: evidence for `limsup = ∞` only.
    Limsup,
    /// The trend classifier sees monotone divergence: `lim = ∞`.
    Limit,
}

/// Running-max growth over `(N/4, N/2]` and `(N/2, N]`; a convergent
/// tail shrinks the second increment, unbounded growth does not.
pub fn divergence(s: &RatioSeries) -> Divergence {
    if s.diverges_up() {
        return Divergence::Limit;
    }
    let Some(last) = s.last_index() else { return Divergence::None };
    if s.values.len() < 8 {
        return Divergence::None;
    }
    let max_to = |k: usize| s.values.iter().take_while(|v| v.0 <= k).map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let (a, b, c) = (max_to(last / 4), max_to(last / 2), max_to(last));
    let step = c - b;
    if step > 1e-9 * c.abs().max(1.0) && step >= 0.75 * (b - a) {
        Divergence::Limsup
    } else {
        Divergence::None
    }
}

fn gen<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn index_series(itin: &Itinerary, horizon: usize) -> RatioSeries {
    RatioSeries::build(ExprId::ItineraryIndex, 1..=horizon, |n, _| {
        Ok(value_step(n, Flagged::exact(itin.s(n).map_err(gen)?.s)))
    })
}

/// `(Σ s_k) / n`, or `(Σ s_k^κ) / n` with `kappa`.
fn mean_series(itin: &Itinerary, horizon: usize, kappa: Option<f64>) -> RatioSeries {
    let expr = if kappa.is_some() { ExprId::ItineraryPowerMean } else { ExprId::ItineraryMean };
    let mut sum = LevelReal::ZERO;
    RatioSeries::build(expr, 1..=horizon, |n, _| {
        let s = itin.s(n).map_err(gen)?.s;
        let term = match kappa {
            Some(k) => s.powf(k).map_err(gen)?,
            None => s,
        };
        sum = sum.add(term).map_err(gen)?;
        Ok(value_step(n, Flagged::exact(sum.scale(1.0 / n as f64).map_err(gen)?)))
    })
}

/// `((κ−1)/ln R) ln s_{n+1}` over `Σ_{k<=n} s_k^κ` (`cumulative`) or over `s_n^κ`.
fn log_ratio_series(itin: &Itinerary, horizon: usize, kappa: f64, ln_r: f64, cumulative: bool) -> RatioSeries {
    let expr = if cumulative { ExprId::ItineraryPacking } else { ExprId::ItineraryGrowth };
    let c = (kappa - 1.0) / ln_r;
    let mut sum = LevelReal::ZERO;
    RatioSeries::build(expr, 1..horizon, |n, started| {
        let term = itin.s(n).map_err(gen)?.s.powf(kappa).map_err(gen)?;
        sum = sum.add(term).map_err(gen)?;
        let num = itin.s(n + 1).map_err(gen)?.s.ln().and_then(|l| l.scale(c)).map_err(gen)?;
        let den = if cumulative { sum } else { term };
        Ok(ratio_step(n, Flagged::exact(num), Flagged::exact(den), started))
    })
}

fn last_of(s: &RatioSeries) -> String {
    match s.values.last() {
        Some((n, v)) => format!("{} at n = {n}: {v:.6e}", s.expr.as_str()),
        None => format!("{}: no values", s.expr.as_str()),
    }
}

fn point(v: f64, source: &str, residual: Option<f64>) -> Interval {
    let e = || Endpoint { value: v, source: source.into(), heuristic: false };
    Interval { lo: e(), hi: e(), residual }
}

/// The band analysis, or an empty report when the band cannot be analysed.
fn band_report(band: &Band, params: &AssumptionParams) -> DimensionReport {
    analyze(band, params).unwrap_or_else(|e| {
        let mut r = DimensionReport::new(1, params.horizon);
        r.diagnostics.push(format!("band analysis: {e}"));
        r
    })
}

fn admissibility_note(adm: &ItineraryAdmissibility) -> String {
    match (adm.rule.admissible_from, adm.rule.first_violation) {
        (Some(n0), _) => format!("itinerary admissible for {n0} <= n <= {}", adm.checked_through),
        (None, Some(v)) => format!("itinerary inequality fails at n = {v}"),
        (None, None) => "itinerary admissibility not checked".into(),
    }
}

/// Power scheme `R_s = R^s`.
pub fn power_annular_dims(
    it: &ItinerarySpec,
    lambda: &LambdaSpec,
    params: &AssumptionParams,
) -> Result<DimensionReport, DimError> {
    let Scheme::Power { r } = it.scheme else {
        return Err(DimError::Refused("the power-scheme test needs R_s = R^s".into()));
    };
    let itin = Itinerary::new(it.clone())?;
    let band = Band::new(itinerary_band(it, lambda))?;
    let adm = check_itinerary_admissible(it, lambda, params.q, params.horizon)?;
    let mut rep = band_report(&band, params);
    rep.diagnostics.push(format!("R = {r} is taken to be large enough; not checked"));
    rep.diagnostics.push(admissibility_note(&adm));
    let mean = mean_series(&itin, params.horizon, None);
    let verdict = divergence(&mean);
    if verdict == Divergence::None {
        rep.diagnostics.push(format!("annular-power: Cesàro means not witnessed divergent ({})", last_of(&mean)));
    } else {
        rep.hausdorff.lower(1.0, "annular-power", &mut rep.diagnostics);
        rep.apply("annular-power", "dim_H <= 1", format!("{verdict:?} witness; {}", last_of(&mean)));
    }
    match (verdict, adm.witnessed()) {
        (Divergence::Limit, true) => {
            rep.pin_hausdorff(1.0, "annular-power", None);
            rep.pin_packing(1.0, "annular-power", None);
            rep.apply("annular-power", "dim_H = dim_P = 1", format!("lim witness; {}", admissibility_note(&adm)));
        }
        (Divergence::Limit, false) => rep.diagnostics.push("annular-power: admissibility not witnessed".into()),
        (Divergence::Limsup, _) => {
            rep.diagnostics.push("annular-power: only limsup divergence witnessed; equality needs the limit".into())
        }
        _ => {}
    }
    rep.push_series(index_series(&itin, params.horizon));
    rep.push_series(mean);
    Ok(rep)
}

/// Stretched scheme `R_s = R^{s^κ}`.
pub fn stretched_annular_dims(
    it: &ItinerarySpec,
    lambda: &LambdaSpec,
    params: &AssumptionParams,
) -> Result<DimensionReport, DimError> {
    let Scheme::Stretched { r, kappa } = it.scheme else {
        return Err(DimError::Refused("the stretched-scheme test needs R_s = R^{s^κ}".into()));
    };
    if !lambda.sup_modulus().is_some_and(f64::is_finite) {
        return Err(DimError::Refused("sup |λ_n| < ∞ is not known".into()));
    }
    let adm = check_itinerary_admissible(it, lambda, params.q, params.horizon)?;
    if !adm.witnessed() {
        return Err(DimError::Refused(admissibility_note(&adm)));
    }
    let itin = Itinerary::new(it.clone())?;
    let band = Band::new(itinerary_band(it, lambda))?;
    let mut rep = band_report(&band, params);
    rep.diagnostics.push(format!("R = {r} is taken to be large enough; not checked"));
    rep.diagnostics.push(admissibility_note(&adm));

    let pm = mean_series(&itin, params.horizon, Some(kappa));
    let verdict = divergence(&pm);
    if verdict != Divergence::None {
        rep.hausdorff.lower(1.0, "annular-stretched", &mut rep.diagnostics);
        rep.apply("annular-stretched", "dim_H <= 1", format!("{verdict:?} witness; {}", last_of(&pm)));
    }
    let idx = index_series(&itin, params.horizon);
    if divergence(&idx) == Divergence::Limit {
        let p = log_ratio_series(&itin, params.horizon, kappa, r.ln(), true);
        match p.limsup() {
            Some(l) if l.is_finite() => {
                let v = 1.0 + l.max(0.0);
                let residual = p.residual();
                let bound = 2.0 - 1.0 / kappa;
                if v < bound {
                    rep.apply("annular-stretched", "dim_P < 2 - 1/κ", format!("{v:.9} < {bound:.9}"));
                } else {
                    rep.diagnostics.push(format!("annular-stretched: dim_P = {v} violates dim_P < {bound}"));
                }
                if let Some(e) = &rep.packing_estimate {
                    rep.diagnostics.push(format!("band estimate of dim_P: {:.12} ({})", e.value, e.source));
                }
                rep.pin_hausdorff(1.0, "annular-stretched", None);
                // both are limits of the same quantity; the itinerary form is the one reported
                rep.packing = point(v, "annular-stretched", residual);
                rep.packing_estimate = Some(Estimate { value: v, residual, source: "annular-stretched".into() });
                rep.apply("annular-stretched", "dim_H = 1; dim_P = 1 + limsup itinerary-packing", last_of(&p));
            }
            _ => rep.diagnostics.push(format!("annular-stretched: packing series inconclusive ({})", last_of(&p))),
        }
        rep.push_series(p);
    } else {
        rep.diagnostics.push("annular-stretched: s_n → ∞ not witnessed".into());
    }
    rep.push_series(idx);
    rep.push_series(pm);
    Ok(rep)
}

/// The d-recurrence itinerary `s_{n+1} = R^{(d/(κ−1)) s_n^κ}`.
pub fn example_itinerary(d: f64, kappa: f64, r: f64) -> ItinerarySpec {
    ItinerarySpec { s: SRule::Example { d, s1: EXAMPLE_S1 }, scheme: Scheme::Stretched { r, kappa } }
}

/// Expected: admissible, `dim_H = 1`, `dim_P = 1 + d`, for `0 <= d < 1 − 1/κ`.
pub fn annular_example(
    d: f64,
    kappa: f64,
    r: f64,
    lambda: &LambdaSpec,
    params: &AssumptionParams,
) -> Result<DimensionReport, DimError> {
    if !(kappa > 1.0) {
        return Err(DimError::Refused(format!("needs κ > 1, got {kappa}")));
    }
    let top = 1.0 - 1.0 / kappa;
    if !(0.0..top).contains(&d) {
        return Err(DimError::Refused(format!("needs 0 <= d < 1 - 1/κ = {top}, got d = {d}")));
    }
    let spec = example_itinerary(d, kappa, r);
    let mut rep = stretched_annular_dims(&spec, lambda, params)?;
    let itin = Itinerary::new(spec)?;
    let g = log_ratio_series(&itin, params.horizon, kappa, r.ln(), false);
    match g.trend {
        Trend::ConvergingTo { limit, residual } => {
            let dm = limit.max(0.0);
            rep.measured_d = Some(Estimate { value: dm, residual: Some(residual), source: "annular-example".into() });
            rep.diagnostics.push(format!("measured d = {dm:.9}, predicted d = {d}"));
            rep.pin_hausdorff(1.0, "annular-example", None);
            if rep.packing_estimate.is_none() {
                rep.packing = point(1.0 + dm, "annular-example", Some(residual));
                rep.packing_estimate =
                    Some(Estimate { value: 1.0 + dm, residual: Some(residual), source: "annular-example".into() });
            }
            rep.apply("annular-example", "dim_H = 1; dim_P = 1 + d", last_of(&g));
            let (v, bound) = (rep.packing.hi.value, 2.0 - 1.0 / kappa);
            if v < bound && !rep.applied.iter().any(|a| a.conclusion == "dim_P < 2 - 1/κ") {
                rep.apply("annular-example", "dim_P < 2 - 1/κ", format!("{v:.9} < {bound:.9}"));
            }
        }
        t => rep.diagnostics.push(format!("annular-example: growth series inconclusive ({t:?})")),
    }
    rep.push_series(g);
    Ok(rep)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Power,
    Stretched,
}

/// `[itinerary]` section: a scheme plus exactly one of `d`, `s` or `rule`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItinerarySection {
    pub scheme: SchemeKind,
    #[serde(alias = "R")]
    pub r: f64,
    #[serde(default, alias = "κ", skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<SRule>,
}

/// Itinerary file: sections `[itinerary]`, `[lambda]`, `[params]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItineraryFile {
    pub itinerary: ItinerarySection,
    #[serde(default)]
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub params: AssumptionParams,
}

impl ItineraryFile {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn spec(&self) -> Result<ItinerarySpec, SeqError> {
        let sec = &self.itinerary;
        let scheme = match (sec.scheme, sec.kappa) {
            (SchemeKind::Power, None) => Scheme::Power { r: sec.r },
            (SchemeKind::Power, Some(_)) => return Err(SeqError::Param("κ applies to the stretched scheme only".into())),
            (SchemeKind::Stretched, Some(kappa)) => Scheme::Stretched { r: sec.r, kappa },
            (SchemeKind::Stretched, None) => return Err(SeqError::Param("stretched scheme needs κ".into())),
        };
        let s = match (sec.d, &sec.s, &sec.rule) {
            (Some(d), None, None) => SRule::Example { d, s1: sec.s1.unwrap_or(EXAMPLE_S1) },
            (None, Some(values), None) => SRule::Explicit { values: values.clone() },
            (None, None, Some(rule)) => rule.clone(),
            _ => return Err(SeqError::Param("give exactly one of d, s or rule".into())),
        };
        if sec.s1.is_some() && sec.d.is_none() {
            return Err(SeqError::Param("s1 seeds the d-recurrence only".into()));
        }
        let spec = ItinerarySpec { s, scheme };
        Itinerary::new(spec.clone())?;
        Ok(spec)
    }
}

enum Gen {
    Level(LevelError),
    Seq(SeqError),
}

impl From<LevelError> for Gen {
    fn from(e: LevelError) -> Self {
        Gen::Level(e)
    }
}
