//! Finite-depth cover machinery on the δ-grid: strips, cells, inverse
//! branches, cover sums, cylinders and local-dimension profiles.
//!
//! Planes are indexed by depth. The depth-`n` plane holds the iterate whose
//! modulus lies in `[a_{N+n}, b_{N+n}]`; the strip `S_{n+1}` and the cells
//! `K^{(n+1)}_{j,k}` (boxes `[jδ, (j+1)δ) × [kπ − Arg λ, (k+1)π − Arg λ)`)
//! live in that same plane, and `E_{λ_{N+n+1}}` carries them one level on.

mod branch;
mod count;
mod cylinder;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::levelnum::{LevelError, LevelReal};
use crate::sequences::{check_assumptions, AssumptionParams, Band, SeqError};

pub use branch::{inverse_branch, pullback_point, plan_depth, fit_word, LogPolar, Pullback, StepMargin};
pub use count::{CountMode, Counts, Family, Relation};
pub use cylinder::{Cylinder, Profile, ProfileRow, H_SAMPLES};

/// Exact-mode cell budget.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Annulus thickness `a_N e^{−δ} δ`, in cell heights, below which the
/// count brackets fail.
pub const COUNT_REGIME: f64 = 8.0;

/// Depths `for_band` keeps generable past `N` when raising it.
pub const MIN_DEPTH: usize = 8;

/// Largest `|j|` handled in binary64.
const J_MAX: f64 = 9.0e15;

#[derive(Debug, Error)]
pub enum CoverError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("depth {n}: {source}")]
    Level { n: usize, source: LevelError },
    #[error("invalid grid parameter: {0}")]
    Param(String),
    #[error("depth {n}: {what} exceeds binary64 range")]
    DepthLimit { n: usize, what: String },
    #[error("depth {n}: {what} cancels below level-number resolution")]
    Resolution { n: usize, what: String },
    #[error("depth {0}: empty j-range (Δ too small against δ)")]
    EmptyRange(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("exact count needs about {cells} cells, budget is {budget}")]
    Budget { cells: f64, budget: u64 },
    #[error("illegal extension: {0}")]
    IllegalExtension(String),
    #[error("pre-asymptotic depth {n}: nonpositive denominator")]
    PreAsymptotic { n: usize },
    #[error("precision: {0}")]
    Precision(String),
}

fn lv(n: usize) -> impl Fn(LevelError) -> CoverError {
    move |source| CoverError::Level { n, source }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    #[serde(rename = "N")]
    pub n_start: usize,
    pub delta: f64,
    pub q: f64,
    pub eps_reg: f64,
    pub a_threshold: f64,
    pub delta_min: f64,
}

impl GridParams {
    pub fn d0(&self) -> f64 {
        self.delta.hypot(PI)
    }

    pub fn validate(&self) -> Result<(), CoverError> {
        if self.n_start == 0 {
            return Err(CoverError::Param("N starts at 1".into()));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(CoverError::Param("q must lie in (0, 1)".into()));
        }
        if !(self.delta > 0.0 && self.delta < (self.delta_min / 4.0).min(1.0)) {
            return Err(CoverError::Param(format!("δ = {} must be below min(Δ_min/4, 1)", self.delta)));
        }
        if self.q.sqrt() * self.delta.exp() >= 1.0 {
            return Err(CoverError::Param("√q e^δ must be below 1".into()));
        }
        if !(self.eps_reg > 0.0 && self.a_threshold > 0.0) {
            return Err(CoverError::Param("ε_reg and a_threshold must be positive".into()));
        }
        Ok(())
    }

    /// Grid for an analysed band: δ at 90% of its ceiling, `N` the first
    /// index past the trimmed start with `a_N >= max(a_threshold, 4 d₀ e^δ)`,
    /// pushed up to `a_N >= COUNT_REGIME · π e^δ / δ` when that still leaves
    /// `MIN_DEPTH` generable depths.
    pub fn for_band(band: &Band, params: &AssumptionParams) -> Result<Self, CoverError> {
        let delta = 0.9 * (params.delta_min / 4.0).min(1.0).min(-params.q.ln() / 2.0);
        let report = check_assumptions(band, params)?;
        let mut g = GridParams {
            n_start: report.start.max(1),
            delta,
            q: params.q,
            eps_reg: 0.1,
            a_threshold: params.a_threshold,
            delta_min: params.delta_min,
        };
        let first_above = |from: usize, to: usize, x: f64| -> Result<Option<usize>, CoverError> {
            let x = LevelReal::from_f64(x).map_err(lv(0))?;
            for i in from..to {
                if band.a(i)? >= x {
                    return Ok(Some(i));
                }
            }
            Ok(None)
        };
        let base = params.a_threshold.max(4.0 * g.d0() * delta.exp());
        let regime = base.max(COUNT_REGIME * PI * delta.exp() / delta);
        let last = report.horizon.saturating_sub(MIN_DEPTH);
        g.n_start = match first_above(g.n_start, last, regime)? {
            Some(i) => i,
            None => first_above(g.n_start, report.horizon, base)?.unwrap_or(report.horizon.max(g.n_start)),
        };
        g.validate()?;
        Ok(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Formula,
    ImplementationChosen,
    UserSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
    pub provenance: Provenance,
}

fn chosen(value: f64) -> Constant {
    Constant { value, provenance: Provenance::ImplementationChosen }
}

/// Proof constants. Only `c` has a closed form; the rest are existential
/// and carry working defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    /// Branch distortion.
    pub c: Constant,
    /// Upper count constant.
    pub c1: Constant,
    /// Lower count constant `c̃₁`.
    pub c1_lower: Constant,
    /// Strip-width sandwich.
    pub c2: Constant,
    /// Per-word cover bound.
    pub c3: Constant,
    /// Cover-sum base.
    pub c4: Constant,
    /// Per-depth correction in `h_n`.
    pub c7: Constant,
    pub big_c: Constant,
    pub big_c_lower: Constant,
    /// Contraction ratio.
    pub q: Constant,
    /// The `a` the defaults were computed from.
    pub a: f64,
}

impl ConstantsLedger {
    pub fn defaults(grid: &GridParams, a: f64) -> Result<Self, CoverError> {
        let (d0, e) = (grid.d0(), grid.delta.exp());
        let shrink = 1.0 - 2.0 * d0 * e / a;
        if !(shrink > 0.0) {
            return Err(CoverError::Param(format!("a = {a} is below 2 d₀ e^δ = {}", 2.0 * d0 * e)));
        }
        let c = (e * (1.0 + 2.0 * d0 / a)).max(1.0 / shrink);
        let c1 = 4.0 / PI * (1.0 + grid.delta);
        Ok(ConstantsLedger {
            c: Constant { value: c, provenance: Provenance::Formula },
            c1: chosen(c1),
            c1_lower: chosen(1.0 / (8.0 * PI)),
            c2: chosen(2.0 * e),
            c3: chosen(c1),
            c4: chosen(c1),
            c7: chosen(c.ln()),
            big_c: chosen(1e6),
            big_c_lower: chosen(1e6),
            q: chosen((a / (e * c)).max(2.0)),
            a,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CoverError> {
        let slot = match name {
            "c" => &mut self.c,
            "c1" => &mut self.c1,
            "c1~" | "c1_lower" => &mut self.c1_lower,
            "c2" => &mut self.c2,
            "c3" => &mut self.c3,
            "c4" => &mut self.c4,
            "c7" => &mut self.c7,
            "C" => &mut self.big_c,
            "C~" => &mut self.big_c_lower,
            "Q" => &mut self.q,
            _ => return Err(CoverError::Param(format!("unknown constant {name}"))),
        };
        *slot = Constant { value, provenance: Provenance::UserSet };
        self.validate()
    }

    pub fn validate(&self) -> Result<(), CoverError> {
        let all = [self.c, self.c1, self.c1_lower, self.c2, self.c3, self.c4, self.c7, self.big_c, self.big_c_lower];
        if all.iter().any(|k| !(k.value > 0.0 && k.value.is_finite())) {
            return Err(CoverError::Param("ledger constants must be positive".into()));
        }
        if !(self.q.value >= 2.0) {
            return Err(CoverError::Param("Q must be at least 2".into()));
        }
        Ok(())
    }
}

/// `S_n = {A_n <= Re z <= B_n}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripData {
    pub n: usize,
    /// `A_n = ln(a_{N+n}/|λ_{N+n}|)`
    pub a: LevelReal,
    pub b: LevelReal,
    /// `Δ_{N+n} = B_n − A_n`
    pub width: LevelReal,
}

impl StripData {
    pub fn contains(&self, re: f64) -> bool {
        self.a.to_f64() <= re && re <= self.b.to_f64()
    }

    fn bounds(&self) -> Result<(f64, f64), CoverError> {
        let (a, b) = (self.a.to_f64(), self.b.to_f64());
        if !(a.is_finite() && b.is_finite()) {
            return Err(CoverError::DepthLimit { n: self.n, what: "strip edge".into() });
        }
        Ok((a, b))
    }
}

/// Integers `lo..=hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JRange {
    pub lo: i64,
    pub hi: i64,
}

impl JRange {
    pub fn len(&self) -> u64 {
        (self.hi - self.lo + 1).max(0) as u64
    }

    pub fn is_empty(&self) -> bool {
        self.hi < self.lo
    }

    pub fn contains(&self, j: i64) -> bool {
        self.lo <= j && j <= self.hi
    }
}

/// Integers strictly inside `(x, y)`.
pub fn open_integers(x: f64, y: f64) -> JRange {
    JRange { lo: x.floor() as i64 + 1, hi: y.ceil() as i64 - 1 }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripWidth {
    pub d: LevelReal,
    /// `(1/c₂) min(Δ, e^{jδ}) <= D <= c₂ min(Δ, e^{jδ})`
    pub sandwich: bool,
}

/// `min(B, r) − max(A, −r)`.
pub fn strip_width(a: LevelReal, b: LevelReal, r: LevelReal) -> Result<LevelReal, LevelError> {
    b.min(r).sub(a.max(r.neg()))
}

/// Piecewise regularization of a strip at grid spacing δ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regularized {
    pub a: f64,
    pub b: f64,
    pub alpha: Option<i64>,
    pub beta: Option<i64>,
}

/// `A < 0` becomes `−e^{(α+3/2)δ}` with `e^{αδ} < −A <= e^{(α+1)δ}`;
/// `B > 0` becomes `e^{(β+3/2)δ}` likewise. The integer is nudged by one
/// when binary64 rounding would break the sandwich.
pub fn regularize(a: f64, b: f64, delta: f64) -> Regularized {
    let lift = |x: f64| -> (f64, i64) {
        let guess = (x.ln() / delta).ceil() as i64 - 1;
        let ok = |i: i64| {
            let y = ((i as f64 + 1.5) * delta).exp();
            (x <= y && y <= (1.5 * delta).exp() * x).then_some(y)
        };
        [guess, guess - 1, guess + 1]
            .into_iter()
            .find_map(|i| ok(i).map(|y| (y, i)))
            .unwrap_or((((guess as f64 + 1.5) * delta).exp(), guess))
    };
    let (a2, alpha) = if a < 0.0 {
        let (y, i) = lift(-a);
        (-y, Some(i))
    } else {
        (a, None)
    };
    let (b2, beta) = if b > 0.0 {
        let (y, i) = lift(b);
        (y, Some(i))
    } else {
        (b, None)
    };
    Regularized { a: a2, b: b2, alpha, beta }
}

impl Regularized {
    /// `e^{3δ/2}A <= A' <= A` and `B <= B' <= e^{3δ/2}B`.
    pub fn sandwich_holds(&self, a: f64, b: f64, delta: f64) -> bool {
        let g = (1.5 * delta).exp();
        let lower = if a < 0.0 { g * a <= self.a && self.a <= a } else { self.a == a };
        let upper = if b > 0.0 { b <= self.b && self.b <= g * b } else { self.b == b };
        lower && upper
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSum {
    pub n: usize,
    /// `n ln c₄ + (D − 1)(ln Δ_{N+n+1} − Σ_{m<=n} ln a_{N+m})`
    pub log_bound: LevelReal,
    /// `log_bound < −n ln 2`
    pub below_halving: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSweep {
    pub exponent: f64,
    pub rows: Vec<CoverSum>,
    /// First depth from which every row is below `−n ln 2`.
    pub n_star: Option<usize>,
    pub non_decreasing: bool,
    pub strictly_decreasing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopped: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Letter {
    pub j: i64,
    pub k: i64,
}

/// Word file: one `n j k` line per letter, `n = 0, 1, …`; `#` starts a comment.
pub fn parse_word(text: &str) -> Result<Vec<Letter>, CoverError> {
    let mut word = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| CoverError::Param(format!("word line {}: {what}", i + 1));
        let f: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad("expected integers `n j k`"))?;
        let [n, j, k] = f[..] else { return Err(bad("expected three fields `n j k`")) };
        if n != word.len() as i64 {
            return Err(bad(&format!("depth {n} out of order, expected {}", word.len())));
        }
        word.push(Letter { j, k });
    }
    if word.is_empty() {
        return Err(CoverError::Param("empty word".into()));
    }
    Ok(word)
}

/// A band with its grid and constants.
#[derive(Debug)]
pub struct Grid {
    pub band: Band,
    pub params: GridParams,
    pub ledger: ConstantsLedger,
    pub budget: u64,
}

impl Grid {
    /// Ledger defaults use `a = a_N`.
    pub fn new(band: Band, params: GridParams) -> Result<Self, CoverError> {
        params.validate()?;
        let a = band.a(params.n_start)?.to_f64().min(f64::MAX);
        let ledger = ConstantsLedger::defaults(&params, a)?;
        Ok(Grid { band, params, ledger, budget: DEFAULT_BUDGET })
    }

    /// Whether the depth-0 annulus is `COUNT_REGIME` cell heights thick.
    pub fn count_regime(&self) -> bool {
        self.ledger.a * (-self.params.delta).exp() * self.params.delta >= COUNT_REGIME * PI
    }

    pub fn with_ledger(mut self, ledger: ConstantsLedger) -> Result<Self, CoverError> {
        ledger.validate()?;
        self.ledger = ledger;
        Ok(self)
    }

    fn index(&self, n: usize) -> usize {
        self.params.n_start + n
    }

    pub fn lambda(&self, n: usize) -> Result<num_complex::Complex64, CoverError> {
        Ok(self.band.lambda(self.index(n))?)
    }

    pub fn strip(&self, n: usize) -> Result<StripData, CoverError> {
        let i = self.index(n);
        let ll = LevelReal::from_f64(self.band.ln_abs_lambda(i)?).map_err(lv(n))?;
        let a = self.band.ln_a(i)?.sub(ll).map_err(lv(n))?;
        let b = self.band.ln_b(i)?.sub(ll).map_err(lv(n))?;
        if b <= a {
            return Err(SeqError::Order(i).into());
        }
        let width = self.band.delta(i)?.value;
        Ok(StripData { n, a, b, width })
    }

    /// `A_n/δ − 1 < j < B_n/δ` (with `|λ| = 1` this is `e^{−δ}a < e^{jδ} < b`).
    pub fn j_range(&self, n: usize) -> Result<JRange, CoverError> {
        let (a, b) = self.strip(n)?.bounds()?;
        let (x, y) = (a / self.params.delta - 1.0, b / self.params.delta);
        if x.abs().max(y.abs()) > J_MAX {
            return Err(CoverError::DepthLimit { n, what: "j-range".into() });
        }
        let r = open_integers(x, y);
        if r.is_empty() {
            return Err(CoverError::EmptyRange(n));
        }
        Ok(r)
    }

    /// `e^{jδ}` as a level number.
    fn e_j(&self, n: usize, j: f64) -> Result<LevelReal, CoverError> {
        LevelReal::from_f64(j * self.params.delta).and_then(LevelReal::exp).map_err(lv(n))
    }

    /// `D^{(n)}_j = min(B_n, e^{(j+1)δ}) − max(A_n, −e^{(j+1)δ})`.
    pub fn strip_width_d(&self, n: usize, j: i64) -> Result<StripWidth, CoverError> {
        let s = self.strip(n)?;
        let d = strip_width(s.a, s.b, self.e_j(n, j as f64 + 1.0)?).map_err(lv(n))?;
        let m = s.width.min(self.e_j(n, j as f64)?);
        let c2 = self.ledger.c2.value;
        let sandwich = (|| -> Result<bool, LevelError> { Ok(m.scale(1.0 / c2)? <= d && d <= m.scale(c2)?) })()
            .map_err(lv(n))?;
        Ok(StripWidth { d, sandwich })
    }

    /// Log of the cover sum at depth `n`.
    pub fn cover_sum_bound(&self, d_exp: f64, n: usize) -> Result<CoverSum, CoverError> {
        if !(d_exp > 1.0) {
            return Err(CoverError::Param("cover exponent must exceed 1".into()));
        }
        let (ld, _) = self.band.ln_delta(self.index(n + 1))?;
        let mut sum = LevelReal::ZERO;
        for m in 0..=n {
            sum = sum.add(self.band.ln_a(self.index(m))?).map_err(lv(m))?;
        }
        let diff = ld.sub_flagged(sum).map_err(lv(n))?;
        if diff.indistinguishable {
            return Err(CoverError::Resolution { n, what: "ln Δ − Σ ln a".into() });
        }
        let base = LevelReal::from_f64(n as f64 * self.ledger.c4.value.ln()).map_err(lv(n))?;
        let log_bound = diff.value.scale(d_exp - 1.0).and_then(|x| x.add(base)).map_err(lv(n))?;
        let halving = LevelReal::from_f64(-(n as f64) * std::f64::consts::LN_2).map_err(lv(n))?;
        Ok(CoverSum { n, log_bound, below_halving: log_bound < halving })
    }

    /// `n ln c₃ + (D − 1)(ln Δ_{N+n+1} − δ Σ j_m)` for the column word `j_1 … j_n`.
    pub fn cover_sum_word_bound(&self, d_exp: f64, js: &[i64]) -> Result<LevelReal, CoverError> {
        let n = js.len();
        let (ld, _) = self.band.ln_delta(self.index(n + 1))?;
        let sj = js.iter().map(|&j| j as f64).sum::<f64>() * self.params.delta;
        let tail = LevelReal::from_f64(sj).map_err(lv(n))?;
        let base = LevelReal::from_f64(n as f64 * self.ledger.c3.value.ln()).map_err(lv(n))?;
        ld.sub(tail).and_then(|x| x.scale(d_exp - 1.0)).and_then(|x| x.add(base)).map_err(lv(n))
    }

    /// Cover sums for `n = 0..=depth`, stopping at the first depth the band
    /// cannot generate.
    pub fn cover_sweep(&self, d_exp: f64, depth: usize) -> Result<CoverSweep, CoverError> {
        let mut rows = Vec::new();
        let mut stopped = None;
        for n in 0..=depth {
            match self.cover_sum_bound(d_exp, n) {
                Ok(r) => rows.push(r),
                Err(e @ CoverError::Param(_)) => return Err(e),
                Err(e) if rows.is_empty() => return Err(e),
                Err(e) => {
                    stopped = Some(format!("n = {n}: {e}"));
                    break;
                }
            }
        }
        let n_star = rows.iter().rposition(|r| !r.below_halving).map_or(Some(0), |i| {
            (i + 1 < rows.len()).then(|| rows[i + 1].n)
        });
        let non_decreasing = rows.windows(2).all(|w| w[1].log_bound >= w[0].log_bound);
        let strictly_decreasing = rows.windows(2).all(|w| w[1].log_bound < w[0].log_bound);
        Ok(CoverSweep { exponent: d_exp, rows, n_star, non_decreasing, strictly_decreasing, stopped })
    }

    /// Regularized strips for `n = 0..=depth`.
    pub fn regularize_band(&self, depth: usize) -> Result<Vec<(StripData, Regularized)>, CoverError> {
        (0..=depth)
            .map(|n| {
                let s = self.strip(n)?;
                let (a, b) = s.bounds()?;
                Ok((s, regularize(a, b, self.params.delta)))
            })
            .collect()
    }

    /// `j_m = round(ln a_{N+m} / δ)` clamped to the `j`-range; `k_0 = 0` and
    /// each later `k_m` is the middle row meeting the parent's image.
    pub fn canonical_word(&self, depth: usize) -> Result<Vec<Letter>, CoverError> {
        let mut word: Vec<Letter> = Vec::with_capacity(depth + 1);
        for m in 0..=depth {
            let la = self.band.ln_a(self.index(m))?.to_f64() / self.params.delta;
            if !(la.abs() < J_MAX) {
                return Err(CoverError::DepthLimit { n: m, what: "ln a / δ".into() });
            }
            let r = self.j_range(m)?;
            let j = (la.round() as i64).clamp(r.lo, r.hi);
            let k = match word.last() {
                None => 0,
                Some(p) => {
                    let rows = self.meeting_rows(m - 1, p.j, p.k, j)?;
                    if rows.is_empty() {
                        return Err(CoverError::IllegalExtension(format!("column {j} misses the image at depth {m}")));
                    }
                    rows.lo + (rows.hi - rows.lo) / 2
                }
            };
            word.push(Letter { j, k });
        }
        Ok(word)
    }

    /// Deepest `n <= limit` such that every strip and `j`-range through
    /// depth `n` is binary64-representable.
    pub fn float_depth(&self, limit: usize) -> usize {
        (0..=limit).take_while(|&n| self.j_range(n).is_ok()).last().unwrap_or(0)
    }
}
