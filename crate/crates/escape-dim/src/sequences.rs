//! Radius bands `(a_n, b_n)`, parameter sequences `λ_n`, admissibility and
//! the standing assumptions (a)–(d).
//!
//! Every sequence is stored through its logarithm: `ln a_n` is the primary
//! quantity and `a_n = exp(ln a_n)` is materialized only on demand.

use std::sync::Mutex;

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annular::{Itinerary, ItinerarySpec, Side};
use crate::levelnum::{LevelError, LevelReal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeqError {
    #[error("term {index}: {source}")]
    Level { index: usize, source: LevelError },
    #[error("sequence indices start at 1")]
    ZeroIndex,
    #[error("explicit list has {len} terms, index {index} requested")]
    Exhausted { len: usize, index: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("b_n <= a_n at n = {0}")]
    Order(usize),
}

impl SeqError {
    fn at(index: usize) -> impl Fn(LevelError) -> SeqError {
        move |source| SeqError::Level { index, source }
    }
}

/// Fixed registry of sequence kinds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SequenceSpec {
    Explicit { terms: Vec<LevelReal> },
    /// `c R^n`
    Geometric { c: f64, r: f64 },
    /// `n^{(log⁺)^p(n)}`
    LogPoly { p: u32 },
    /// `e^{n (log⁺)^p(n)}`
    ExpLogPoly { p: u32 },
    /// `slope · n + offset`
    Affine { slope: f64, offset: f64 },
    /// `a_{n+1} = e^{n a_n^d}`
    Tower { d: f64, a1: LevelReal },
    /// `a_{n+1} = e^{n a_n^{(n-1)/n}}`
    TowerVar { a1: LevelReal },
    /// `b_n = base_n^{1+1/n}`; a missing base refers to the band's a-sequence.
    PowerBand {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Box<SequenceSpec>>,
    },
    /// `b_n = c · base_n`
    ScalarBand {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base: Option<Box<SequenceSpec>>,
        c: f64,
    },
    /// `e^{e^{pn}}`
    DoubleExp { p: f64 },
    /// `log b_1 = l1`, `log b_{n+1} = b_n^2`
    LogSquareTower { l1: f64 },
    Itinerary { itinerary: ItinerarySpec, side: Side },
}

/// `(log⁺)^p(x)`
fn iterated_log(p: u32, x: f64) -> f64 {
    (0..p).fold(x, |v, _| v.ln().max(0.0))
}

impl SequenceSpec {
    fn resolve(&self, a: &SequenceSpec) -> SequenceSpec {
        match self {
            SequenceSpec::PowerBand { base: None } => {
                SequenceSpec::PowerBand { base: Some(Box::new(a.clone())) }
            }
            SequenceSpec::ScalarBand { base: None, c } => {
                SequenceSpec::ScalarBand { base: Some(Box::new(a.clone())), c: *c }
            }
            other => other.clone(),
        }
    }

    fn validate(&self) -> Result<(), SeqError> {
        let bad = |m: &str| Err(SeqError::Param(m.into()));
        match self {
            SequenceSpec::Geometric { c, r } if !(*c > 0.0 && *r > 1.0) => {
                bad("geometric needs c > 0 and R > 1")
            }
            SequenceSpec::LogPoly { p } | SequenceSpec::ExpLogPoly { p } if *p == 0 => {
                bad("log-poly order p must be positive")
            }
            SequenceSpec::Affine { slope, offset } if !(*slope >= 0.0 && slope + offset > 0.0) => {
                bad("affine sequence must be positive and nondecreasing")
            }
            SequenceSpec::Tower { d, a1 } if !((0.0..=1.0).contains(d) && a1.is_positive()) => {
                bad("tower needs d in [0, 1] and a_1 > 0")
            }
            SequenceSpec::TowerVar { a1 } if !a1.is_positive() => bad("tower-var needs a_1 > 0"),
            SequenceSpec::ScalarBand { c, .. } if !(*c > 0.0) => bad("scalar-band needs c > 0"),
            SequenceSpec::DoubleExp { p } if !(*p > 0.0) => bad("double-exp needs p > 0"),
            SequenceSpec::PowerBand { base: None } | SequenceSpec::ScalarBand { base: None, .. } => {
                bad("band kinds need a base sequence")
            }
            SequenceSpec::Explicit { terms } if terms.iter().any(|t| !t.is_positive()) => {
                bad("explicit terms must be positive")
            }
            _ => Ok(()),
        }
    }
}

enum Source {
    Plain,
    Base(Box<Sequence>),
    Itinerary(Box<Itinerary>, Side),
}

/// A sequence with memoized log-terms. Safe to share across threads.
pub struct Sequence {
    spec: SequenceSpec,
    source: Source,
    memo: Mutex<Vec<LevelReal>>,
}

impl std::fmt::Debug for Sequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Sequence").field("spec", &self.spec).finish()
    }
}

impl Sequence {
    pub fn new(spec: SequenceSpec) -> Result<Self, SeqError> {
        spec.validate()?;
        let source = match &spec {
            SequenceSpec::PowerBand { base: Some(b) } | SequenceSpec::ScalarBand { base: Some(b), .. } => {
                Source::Base(Box::new(Sequence::new((**b).clone())?))
            }
            SequenceSpec::Itinerary { itinerary, side } => {
                Source::Itinerary(Box::new(Itinerary::new(itinerary.clone())?), *side)
            }
            _ => Source::Plain,
        };
        Ok(Sequence { spec, source, memo: Mutex::new(Vec::new()) })
    }

    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    /// `ln a_n`.
    pub fn ln_term(&self, n: usize) -> Result<LevelReal, SeqError> {
        if n == 0 {
            return Err(SeqError::ZeroIndex);
        }
        let mut memo = self.memo.lock().expect("sequence memo poisoned");
        while memo.len() < n {
            let k = memo.len() + 1;
            let prev = memo.last().copied();
            let v = self.compute(k, prev)?;
            memo.push(v);
        }
        Ok(memo[n - 1])
    }

    /// `a_n`.
    pub fn term(&self, n: usize) -> Result<LevelReal, SeqError> {
        self.ln_term(n)?.exp().map_err(SeqError::at(n))
    }

    fn compute(&self, n: usize, prev: Option<LevelReal>) -> Result<LevelReal, SeqError> {
        let at = SeqError::at(n);
        let f = |x: f64| LevelReal::from_f64(x).map_err(SeqError::at(n));
        let nf = n as f64;
        match (&self.spec, &self.source) {
            (SequenceSpec::Explicit { terms }, _) => terms
                .get(n - 1)
                .ok_or(SeqError::Exhausted { len: terms.len(), index: n })?
                .ln()
                .map_err(at),
            (SequenceSpec::Geometric { c, r }, _) => f(c.ln() + nf * r.ln()),
            (SequenceSpec::LogPoly { p }, _) => f(nf.ln() * iterated_log(*p, nf)),
            (SequenceSpec::ExpLogPoly { p }, _) => f(nf * iterated_log(*p, nf)),
            (SequenceSpec::Affine { slope, offset }, _) => f((slope * nf + offset).ln()),
            (SequenceSpec::Tower { d, a1 }, _) => match prev {
                None => a1.ln().map_err(at),
                Some(l) => {
                    let step = l.scale(*d).and_then(LevelReal::exp).map_err(SeqError::at(n))?;
                    step.scale(nf - 1.0).map_err(at)
                }
            },
            (SequenceSpec::TowerVar { a1 }, _) => match prev {
                None => a1.ln().map_err(at),
                Some(l) => {
                    let m = nf - 1.0;
                    let step = l.scale((m - 1.0) / m).and_then(LevelReal::exp).map_err(SeqError::at(n))?;
                    step.scale(m).map_err(at)
                }
            },
            (SequenceSpec::PowerBand { .. }, Source::Base(base)) => {
                base.ln_term(n)?.scale(1.0 + 1.0 / nf).map_err(at)
            }
            (SequenceSpec::ScalarBand { c, .. }, Source::Base(base)) => {
                base.ln_term(n)?.add(f(c.ln())?).map_err(at)
            }
            (SequenceSpec::DoubleExp { p }, _) => f(p * nf)?.exp().map_err(at),
            (SequenceSpec::LogSquareTower { l1 }, _) => match prev {
                None => f(*l1),
                Some(l) => l.scale(2.0).and_then(LevelReal::exp).map_err(at),
            },
            (SequenceSpec::Itinerary { .. }, Source::Itinerary(it, side)) => it.ln_radius(n, *side),
            _ => unreachable!("source matches spec by construction"),
        }
    }
}

/// The parameters `λ_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaSpec {
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// `[re, im]` pairs for `λ_1, λ_2, …`
    Explicit { values: Vec<[f64; 2]> },
    /// Moduli uniform in `[r_lo, r_hi]`, arguments uniform in `[0, 2π)`.
    ///
    /// Contract `splitmix64-v1`: a SplitMix64 stream seeded with `seed`;
    /// each draw maps to `(x >> 11) · 2^-53`; `λ_n` consumes draws
    /// `2(n-1)` (modulus) and `2(n-1)+1` (argument).
    SeededRandom { r_lo: f64, r_hi: f64, seed: u64 },
}

impl Default for LambdaSpec {
    fn default() -> Self {
        LambdaSpec::Constant { re: 1.0, im: 0.0 }
    }
}

pub const PRNG_CONTRACT: &str = "splitmix64-v1";

fn unit_draw(rng: &mut SplitMix64) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl LambdaSpec {
    pub fn validate(&self) -> Result<(), SeqError> {
        let ok = match self {
            LambdaSpec::Constant { re, im } => re.hypot(*im) > 0.0,
            LambdaSpec::Explicit { values } => values.iter().all(|[r, i]| r.hypot(*i) > 0.0),
            LambdaSpec::SeededRandom { r_lo, r_hi, .. } => *r_lo > 0.0 && r_hi >= r_lo && r_hi.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(SeqError::Param("λ_n must be nonzero with a finite modulus range".into()))
        }
    }

    pub fn value(&self, n: usize) -> Result<Complex64, SeqError> {
        if n == 0 {
            return Err(SeqError::ZeroIndex);
        }
        match self {
            LambdaSpec::Constant { re, im } => Ok(Complex64::new(*re, *im)),
            LambdaSpec::Explicit { values } => values
                .get(n - 1)
                .map(|[r, i]| Complex64::new(*r, *i))
                .ok_or(SeqError::Exhausted { len: values.len(), index: n }),
            LambdaSpec::SeededRandom { r_lo, r_hi, seed } => {
                let mut rng = SplitMix64::from_seed(seed.to_le_bytes());
                for _ in 0..2 * (n - 1) {
                    rng.next_u64();
                }
                let u = unit_draw(&mut rng);
                let v = unit_draw(&mut rng);
                Ok(Complex64::from_polar(r_lo + u * (r_hi - r_lo), std::f64::consts::TAU * v))
            }
        }
    }

    pub fn ln_abs(&self, n: usize) -> Result<f64, SeqError> {
        Ok(self.value(n)?.norm().ln())
    }

    /// `sup |λ_n|` when known from the kind.
    pub fn sup_modulus(&self) -> Option<f64> {
        match self {
            LambdaSpec::Constant { re, im } => Some(re.hypot(*im)),
            LambdaSpec::Explicit { values } => {
                values.iter().map(|[r, i]| r.hypot(*i)).reduce(f64::max)
            }
            LambdaSpec::SeededRandom { r_hi, .. } => Some(*r_hi),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeBandSpec {
    pub a: SequenceSpec,
    pub b: SequenceSpec,
    #[serde(default)]
    pub lambda: LambdaSpec,
}

/// `Δ_n = ln b_n − ln a_n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Delta {
    pub value: LevelReal,
    /// Generic subtraction cancelled below the mantissa resolution.
    pub flagged: bool,
}

pub struct Band {
    spec: EscapeBandSpec,
    a: Sequence,
    b: Sequence,
}

impl std::fmt::Debug for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Band").field("spec", &self.spec).finish()
    }
}

impl Band {
    pub fn new(spec: EscapeBandSpec) -> Result<Self, SeqError> {
        let b_spec = spec.b.resolve(&spec.a);
        spec.lambda.validate()?;
        let spec = EscapeBandSpec { b: b_spec, ..spec };
        Ok(Band { a: Sequence::new(spec.a.clone())?, b: Sequence::new(spec.b.clone())?, spec })
    }

    pub fn spec(&self) -> &EscapeBandSpec {
        &self.spec
    }

    pub fn ln_a(&self, n: usize) -> Result<LevelReal, SeqError> {
        self.a.ln_term(n)
    }

    pub fn ln_b(&self, n: usize) -> Result<LevelReal, SeqError> {
        self.b.ln_term(n)
    }

    pub fn a(&self, n: usize) -> Result<LevelReal, SeqError> {
        self.a.term(n)
    }

    pub fn b(&self, n: usize) -> Result<LevelReal, SeqError> {
        self.b.term(n)
    }

    pub fn lambda(&self, n: usize) -> Result<Complex64, SeqError> {
        self.spec.lambda.value(n)
    }

    pub fn ln_abs_lambda(&self, n: usize) -> Result<f64, SeqError> {
        self.spec.lambda.ln_abs(n)
    }

    /// `Δ_n`, taken from the structure of the band when one applies and
    /// from `ln b_n − ln a_n` otherwise; the terms themselves are never
    /// divided.
    pub fn delta(&self, n: usize) -> Result<Delta, SeqError> {
        let exact = |v: Result<LevelReal, LevelError>| {
            v.map(|value| Delta { value, flagged: false }).map_err(SeqError::at(n))
        };
        let base_is_a = |base: &Option<Box<SequenceSpec>>| base.as_deref() == Some(&self.spec.a);
        match (&self.spec.a, &self.spec.b) {
            (_, SequenceSpec::PowerBand { base }) if base_is_a(base) => {
                exact(self.ln_a(n)?.scale(1.0 / n as f64))
            }
            (_, SequenceSpec::ScalarBand { base, c }) if base_is_a(base) => {
                exact(LevelReal::from_f64(c.ln()))
            }
            (_, SequenceSpec::ScalarBand { base: Some(inner), c }) if self.over_a(inner) => {
                let d = self.delta_over_a(inner, n)?;
                exact(LevelReal::from_f64(c.ln()).and_then(|l| d.add(l)))
            }
            (
                SequenceSpec::ScalarBand { base: ba, c: ca },
                SequenceSpec::ScalarBand { base: bb, c: cb },
            ) if ba == bb => exact(LevelReal::from_f64(cb.ln() - ca.ln())),
            (SequenceSpec::Geometric { c: ca, r: ra }, SequenceSpec::Geometric { c: cb, r: rb })
                if ra == rb =>
            {
                exact(LevelReal::from_f64(cb.ln() - ca.ln()))
            }
            (
                SequenceSpec::Itinerary { itinerary: ia, side: Side::Lower },
                SequenceSpec::Itinerary { itinerary: ib, side: Side::Upper },
            ) if ia == ib => match &self.a.source {
                Source::Itinerary(it, _) => {
                    it.delta(n).map(|value| Delta { value, flagged: false })
                }
                _ => unreachable!("itinerary source"),
            },
            _ => {
                let s = self.ln_b(n)?.sub_flagged(self.ln_a(n)?).map_err(SeqError::at(n))?;
                Ok(Delta { value: s.value, flagged: s.indistinguishable })
            }
        }
    }

    /// `b` is a band spec built on `a` through power and scalar layers.
    fn over_a(&self, b: &SequenceSpec) -> bool {
        match b {
            SequenceSpec::PowerBand { base } => base.as_deref() == Some(&self.spec.a),
            SequenceSpec::ScalarBand { base: Some(inner), .. } => {
                **inner == self.spec.a || self.over_a(inner)
            }
            _ => false,
        }
    }

    fn delta_over_a(&self, b: &SequenceSpec, n: usize) -> Result<LevelReal, SeqError> {
        match b {
            SequenceSpec::PowerBand { .. } => self.ln_a(n)?.scale(1.0 / n as f64).map_err(SeqError::at(n)),
            SequenceSpec::ScalarBand { base: Some(inner), c } => {
                let l = LevelReal::from_f64(c.ln()).map_err(SeqError::at(n))?;
                if **inner == self.spec.a {
                    Ok(l)
                } else {
                    self.delta_over_a(inner, n)?.add(l).map_err(SeqError::at(n))
                }
            }
            _ => unreachable!("checked by over_a"),
        }
    }

    /// `ln Δ_n`; requires `Δ_n > 0`.
    pub fn ln_delta(&self, n: usize) -> Result<(LevelReal, bool), SeqError> {
        let d = self.delta(n)?;
        if !d.value.is_positive() {
            return Err(SeqError::Order(n));
        }
        Ok((d.value.ln().map_err(SeqError::at(n))?, d.flagged))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdmissibilitySide {
    /// `a_{n+1} <= |λ_{n+1}| e^{q a_n}`
    Upper,
    /// `b_{n+1} >= |λ_{n+1}| e^{-q a_n}`
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub index: usize,
    pub side: AdmissibilitySide,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub q: f64,
    /// Smallest `N₀` such that both inequalities hold for `N₀ <= n < checked_through`.
    pub admissible_from: Option<usize>,
    pub first_violation: Option<Violation>,
    /// Last index `n` whose pair `(n, n+1)` was checked.
    pub checked_through: usize,
    /// Generation stopped before the requested horizon.
    pub truncated: Option<String>,
}

impl AdmissibilityReport {
    pub fn witnessed(&self) -> bool {
        self.admissible_from.is_some()
    }
}

/// Per-index admissibility in log space.
pub fn check_admissible(band: &Band, q: f64, n_max: usize) -> Result<AdmissibilityReport, SeqError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SeqError::Param("q must lie in (0, 1)".into()));
    }
    if n_max < 2 {
        return Err(SeqError::Param("admissibility needs n_max >= 2".into()));
    }
    let mut holds = Vec::new();
    let mut first_violation = None;
    let mut truncated = None;
    for n in 1..n_max {
        let step = || -> Result<Option<AdmissibilitySide>, SeqError> {
            let qa = band.a(n)?.scale(q).map_err(SeqError::at(n))?;
            let ll = LevelReal::from_f64(band.ln_abs_lambda(n + 1)?).map_err(SeqError::at(n))?;
            let upper = ll.add(qa).map_err(SeqError::at(n))?;
            let lower = ll.sub(qa).map_err(SeqError::at(n))?;
            if band.ln_a(n + 1)? > upper {
                Ok(Some(AdmissibilitySide::Upper))
            } else if band.ln_b(n + 1)? < lower {
                Ok(Some(AdmissibilitySide::Lower))
            } else {
                Ok(None)
            }
        };
        match step() {
            Ok(v) => {
                if let (Some(side), None) = (v, first_violation) {
                    first_violation = Some(Violation { index: n, side });
                }
                holds.push(v.is_none());
            }
            Err(e @ (SeqError::Level { .. } | SeqError::Exhausted { .. })) => {
                truncated = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let checked = holds.len();
    let admissible_from = match holds.iter().rposition(|h| !h) {
        _ if checked == 0 => None,
        None => Some(1),
        Some(i) if i + 1 < checked => Some(i + 2),
        Some(_) => None,
    };
    Ok(AdmissibilityReport { q, admissible_from, first_violation, checked_through: checked, truncated })
}

/// How the analysis start index is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trim {
    None,
    /// Start at the admissibility index `N₀`.
    #[default]
    Admissible,
    /// Smallest start from which admissibility, (c) and (d) hold through the horizon.
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssumptionParams {
    pub q: f64,
    pub delta_min: f64,
    /// The unquantified "sufficiently large" `a` of clause (d).
    pub a_threshold: f64,
    pub horizon: usize,
    /// Level the geometric-mean logs must exceed for clause (b).
    pub witness_level: f64,
    pub trim: Trim,
}

impl Default for AssumptionParams {
    fn default() -> Self {
        AssumptionParams {
            q: 0.5,
            delta_min: 0.25,
            a_threshold: 50.0,
            horizon: 40,
            witness_level: 1.0,
            trim: Trim::Admissible,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub verdict: Verdict,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_index: Option<usize>,
}

impl Clause {
    fn new(verdict: Verdict, detail: impl Into<String>, witness_index: Option<usize>) -> Self {
        Clause { verdict, detail: detail.into(), witness_index }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// First index used by the analysis.
    pub start: usize,
    /// Last index with generable terms, at most the requested horizon.
    pub horizon: usize,
    pub requested_horizon: usize,
    pub admissibility: AdmissibilityReport,
    pub a: Clause,
    pub b: Clause,
    pub c: Clause,
    pub d: Clause,
    /// `g_n = (Σ_{start<=k<=n} ln a_k) / (n − start + 1)`
    pub geometric_mean_logs: Vec<(usize, LevelReal)>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d].iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn failing(&self) -> Vec<&'static str> {
        [("a", &self.a), ("b", &self.b), ("c", &self.c), ("d", &self.d)]
            .into_iter()
            .filter(|(_, c)| c.verdict != Verdict::Pass)
            .map(|(k, _)| k)
            .collect()
    }
}

/// `y > x` beyond binary64 summation noise.
fn rises(x: LevelReal, y: LevelReal) -> bool {
    match (x.to_f64(), y.to_f64()) {
        (a, b) if a.is_finite() && b.is_finite() => b - a > 1e-12 * b.abs().max(1.0),
        _ => y > x,
    }
}

/// Last index `<= horizon` at which `ln a`, `ln b` and `Δ` all generate.
pub fn generable_horizon(band: &Band, horizon: usize) -> usize {
    (1..=horizon)
        .find(|&n| band.ln_a(n).is_err() || band.ln_b(n).is_err() || band.delta(n).is_err())
        .map_or(horizon, |n| n - 1)
}

pub fn check_assumptions(band: &Band, params: &AssumptionParams) -> Result<AssumptionReport, SeqError> {
    if params.horizon < 4 {
        return Err(SeqError::Param("assumption checks need horizon >= 4".into()));
    }
    if !(params.delta_min > 0.0 && params.a_threshold > 0.0) {
        return Err(SeqError::Param("Δ_min and a_threshold must be positive".into()));
    }
    let horizon = generable_horizon(band, params.horizon);
    let adm = check_admissible(band, params.q, horizon.max(2))?;
    let ln_thr = LevelReal::from_f64(params.a_threshold.ln()).map_err(SeqError::at(0))?;
    let dmin = LevelReal::from_f64(params.delta_min).map_err(SeqError::at(0))?;

    let c_holds = |n: usize| band.delta(n).map(|d| !d.flagged && d.value > dmin).unwrap_or(false);
    let d_holds = |n: usize| band.ln_a(n).map(|l| l > ln_thr).unwrap_or(false);
    let n0 = adm.admissible_from.unwrap_or(1);
    let start = match params.trim {
        Trim::None => 1,
        Trim::Admissible => n0,
        Trim::Fixed(s) => s.max(1),
        Trim::Auto => {
            let bad = (n0..=horizon).rev().find(|&n| !(c_holds(n) && d_holds(n)));
            bad.map_or(n0, |n| n + 1)
        }
    };
    if start + 3 > horizon {
        let clause = Clause::new(Verdict::Inconclusive, "fewer than four indices after trimming", None);
        return Ok(AssumptionReport {
            start,
            horizon,
            requested_horizon: params.horizon,
            admissibility: adm,
            a: clause.clone(),
            b: clause.clone(),
            c: clause.clone(),
            d: clause,
            geometric_mean_logs: Vec::new(),
        });
    }

    let a = match adm.admissible_from {
        Some(n) => Clause::new(Verdict::Pass, format!("admissible for {n} <= n <= {horizon}"), Some(n)),
        None => {
            let v = adm.first_violation.expect("violation recorded when not admissible");
            Clause::new(Verdict::Fail, format!("inequality fails at n = {} ({:?})", v.index, v.side), Some(v.index))
        }
    };

    let mut g = Vec::new();
    let mut sum = LevelReal::ZERO;
    for n in start..=horizon {
        sum = sum.add(band.ln_a(n)?).map_err(SeqError::at(n))?;
        let mean = sum.scale(1.0 / (n - start + 1) as f64).map_err(SeqError::at(n))?;
        g.push((n, mean));
    }
    let tail = &g[g.len() / 2..];
    let increasing = tail.windows(2).all(|w| rises(w[0].1, w[1].1));
    let last = g.last().expect("nonempty").1;
    let level = LevelReal::from_f64(params.witness_level).map_err(SeqError::at(0))?;
    let b = if increasing && last > level {
        Clause::new(Verdict::Pass, format!("g_n increasing on the tail, g_{horizon} = {last}"), Some(horizon))
    } else if tail.windows(2).all(|w| !rises(w[0].1, w[1].1)) {
        Clause::new(Verdict::Fail, format!("g_n nonincreasing on the tail, g_{horizon} = {last}"), None)
    } else {
        Clause::new(Verdict::Inconclusive, format!("no monotone divergence, g_{horizon} = {last}"), None)
    };

    let c = match (start..=horizon).find(|&n| !c_holds(n)) {
        None => Clause::new(Verdict::Pass, format!("Δ_n > {} for {start} <= n <= {horizon}", params.delta_min), None),
        Some(n) if band.delta(n).map(|d| d.flagged).unwrap_or(false) => {
            Clause::new(Verdict::Inconclusive, format!("Δ_{n} unresolved (cancellation)"), Some(n))
        }
        Some(n) => Clause::new(Verdict::Fail, format!("Δ_{n} <= {}", params.delta_min), Some(n)),
    };

    let d = match (start..=horizon).find(|&n| !d_holds(n)) {
        None => Clause::new(
            Verdict::Pass,
            format!(
                "a_n > {} for {start} <= n <= {horizon}; only a finite-horizon lower bound, not a liminf",
                params.a_threshold
            ),
            None,
        ),
        Some(n) => Clause::new(Verdict::Fail, format!("a_{n} <= {}", params.a_threshold), Some(n)),
    };

    Ok(AssumptionReport {
        start,
        horizon,
        requested_horizon: params.horizon,
        admissibility: adm,
        a,
        b,
        c,
        d,
        geometric_mean_logs: g,
    })
}

/// Band file: sections `[a]`, `[b]`, `[lambda]`, `[params]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandFile {
    pub a: SequenceSpec,
    pub b: SequenceSpec,
    #[serde(default)]
    pub lambda: LambdaSpec,
    #[serde(default)]
    pub params: AssumptionParams,
}

impl BandFile {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn band_spec(&self) -> EscapeBandSpec {
        EscapeBandSpec { a: self.a.clone(), b: self.b.clone(), lambda: self.lambda.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lr(x: f64) -> LevelReal {
        LevelReal::from_f64(x).unwrap()
    }

    fn tower(d: f64) -> SequenceSpec {
        SequenceSpec::Tower { d, a1: lr(20.0) }
    }

    fn band(a: SequenceSpec, b: SequenceSpec) -> Band {
        Band::new(EscapeBandSpec { a, b, lambda: LambdaSpec::default() }).unwrap()
    }

    #[test]
    fn term_examples() {
        // oracle: binary64 recurrence
        let a2 = 20f64.sqrt().exp();
        let s = Sequence::new(tower(0.5)).unwrap();
        assert!((s.term(2).unwrap().to_f64() - a2).abs() < 1e-12 * a2);
        let g = Sequence::new(SequenceSpec::Geometric { c: 1.0, r: 2.0 }).unwrap();
        assert!((g.term(10).unwrap().to_f64() - 1024.0).abs() < 1e-9);
        let pb = Sequence::new(SequenceSpec::PowerBand { base: Some(Box::new(tower(0.5))) }).unwrap();
        assert!((pb.term(2).unwrap().to_f64() - a2.powf(1.5)).abs() < 1e-9 * a2.powf(1.5));
        // quoted values are rounded
        assert!((a2 / 87.58 - 1.0).abs() < 1e-3 && (a2.powf(1.5) / 819.5 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn memo_is_transparent() {
        let s = Sequence::new(tower(0.5)).unwrap();
        let first = s.ln_term(3).unwrap();
        s.ln_term(6).unwrap();
        let fresh = Sequence::new(tower(0.5)).unwrap();
        assert_eq!(fresh.ln_term(3).unwrap(), first);
        assert_eq!(s.ln_term(3).unwrap().to_literal(), first.to_literal());
    }

    #[test]
    fn level_cap_names_index() {
        let s = Sequence::new(SequenceSpec::LogSquareTower { l1: 3.0 }).unwrap();
        let err = s.ln_term(30).unwrap_err();
        assert!(matches!(err, SeqError::Level { index, .. } if index < 30));
    }

    #[test]
    fn delta_examples() {
        let geo = SequenceSpec::Geometric { c: 1.0, r: 2.0 };
        let b = band(geo.clone(), SequenceSpec::ScalarBand { base: None, c: 2.0 });
        for n in [1, 7, 30] {
            assert_eq!(b.delta(n).unwrap().value, lr(2f64.ln()));
        }
        let t = band(tower(0.5), SequenceSpec::PowerBand { base: None });
        for n in 1..=6 {
            let expect = t.ln_a(n).unwrap().scale(1.0 / n as f64).unwrap();
            assert_eq!(t.delta(n).unwrap().value, expect);
        }
        let s = band(geo, SequenceSpec::Geometric { c: 3.0, r: 2.0 });
        assert!((s.delta(5).unwrap().value.to_f64() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn delta_is_structural_at_level_three() {
        let t = band(tower(0.5), SequenceSpec::PowerBand { base: None });
        let n = (1..12).find(|&n| t.ln_a(n).unwrap().level() >= 2).unwrap();
        // a_n itself sits at level >= 3; Δ_n still resolves exactly
        assert!(t.a(n).unwrap().level() >= 3);
        let d = t.delta(n).unwrap();
        assert!(!d.flagged);
        assert_eq!(d.value, t.ln_a(n).unwrap().scale(1.0 / n as f64).unwrap());
    }

    #[test]
    fn admissible_examples() {
        let t = band(tower(0.5), SequenceSpec::PowerBand { base: None });
        let r = check_admissible(&t, 0.5, 5).unwrap();
        assert_eq!(r.admissible_from, Some(1));
        assert!(20f64.sqrt() <= 0.5 * 20.0);
        let g = band(
            SequenceSpec::Geometric { c: 1.0, r: 2.0 },
            SequenceSpec::ScalarBand { base: None, c: 2.0 },
        );
        let r = check_admissible(&g, 0.9, 40).unwrap();
        assert_eq!(r.admissible_from, Some(1));
        let bad = band(
            SequenceSpec::Explicit { terms: vec![lr(2.0), lr(10f64.exp())] },
            SequenceSpec::Explicit { terms: vec![lr(3.0), lr(11f64.exp())] },
        );
        let r = check_admissible(&bad, 0.1, 2).unwrap();
        assert_eq!(r.admissible_from, None);
        assert_eq!(r.first_violation, Some(Violation { index: 1, side: AdmissibilitySide::Upper }));
    }

    #[test]
    fn assumption_examples() {
        let g = band(
            SequenceSpec::Geometric { c: 1.0, r: 2.0 },
            SequenceSpec::Geometric { c: 3.0, r: 2.0 },
        );
        let p = AssumptionParams { q: 0.9, delta_min: 0.5, a_threshold: 1.5, horizon: 40, ..Default::default() };
        let r = check_assumptions(&g, &p).unwrap();
        assert!(r.all_pass(), "{r:?}");
        for &(n, gn) in &r.geometric_mean_logs {
            let oracle = (n as f64 + 1.0) * 2f64.ln() / 2.0;
            assert!((gn.to_f64() - oracle).abs() < 1e-12 * oracle);
        }
        let c = band(
            SequenceSpec::Affine { slope: 0.0, offset: 5.0 },
            SequenceSpec::Affine { slope: 0.0, offset: 15.0 },
        );
        let r = check_assumptions(&c, &AssumptionParams { a_threshold: 1.0, ..p.clone() }).unwrap();
        assert_eq!(r.b.verdict, Verdict::Fail);
        let t = band(tower(0.5), SequenceSpec::PowerBand { base: None });
        let p = AssumptionParams { horizon: 30, trim: Trim::Auto, ..Default::default() };
        let r = check_assumptions(&t, &p).unwrap();
        assert!(r.all_pass(), "{r:?}");
        assert!(r.horizon < 30);
    }

    #[test]
    fn seeded_lambda_is_reproducible() {
        let l = LambdaSpec::SeededRandom { r_lo: 0.5, r_hi: 2.0, seed: 7 };
        let v: Vec<_> = (1..5).map(|n| l.value(n).unwrap()).collect();
        let w: Vec<_> = (1..5).map(|n| l.value(n).unwrap()).collect();
        assert_eq!(v, w);
        assert!(v.iter().all(|z| (0.5..=2.0).contains(&z.norm())));
        // splitmix64 reference: first output for seed 0 is 0xe220a8397b1dcdaf
        let mut rng = SplitMix64::from_seed(0u64.to_le_bytes());
        assert_eq!(rng.next_u64(), 0xe220a8397b1dcdaf);
    }

    #[test]
    fn band_file_parses() {
        let text = r#"
[a]
kind = "tower"
d = 0.5
a1 = 20

[b]
kind = "power-band"

[lambda]
kind = "constant"
re = 1.0

[params]
q = 0.5
horizon = 25
trim = "auto"
"#;
        let f = BandFile::parse(text).unwrap();
        assert_eq!(f.params.trim, Trim::Auto);
        let b = Band::new(f.band_spec()).unwrap();
        assert!((b.a(2).unwrap().to_f64() - 20f64.sqrt().exp()).abs() < 1e-9);
        let err = BandFile::parse("[a]\nkind = \"tower\"\nd = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("a1") || err.to_string().contains("b"));
    }
}
