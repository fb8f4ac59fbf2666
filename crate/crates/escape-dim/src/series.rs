//! Finite-horizon ratio series and their trend verdicts.

use serde::{Deserialize, Serialize};

use crate::levelnum::{LevelReal, Ratio};

/// Tolerance for "tends to 0" and for strict inequalities against 1.
pub const WITNESS_TOL: f64 = 1e-2;

/// Which expression a series evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExprId {
    /// `((Δ_{n+1}) / (a_s⋯a_n))^{1/(n-s+1)}`
    SmallModulusRoot,
    /// `log Δ_{n+1} / log(a_s⋯a_n)`
    DeltaOverProduct,
    /// `log(a_s⋯a_n) / (n-s+1)`
    GeometricMeanLog,
    /// `log(Δ_s⋯Δ_n) / (log(a_s⋯a_{n-1}) + log⁺(a_n/Δ_{n+1}))`
    HausdorffUpper,
    /// `log(Δ_s⋯Δ_{n+1}) / log(a_s⋯a_n)`
    PackingUpper,
    /// `log(Δ_s⋯Δ_{n+1}) / log(b_s⋯b_n)`
    PackingLower,
    /// `log Δ_{n+1} − log a_n`
    DeltaOverA,
    /// `log b_n / log a_n`
    LogBOverLogA,
    /// `log Δ_{n+1} / log a_n`
    RatioA,
    /// `log Δ_{n+1} / log b_n`
    RatioB,
    /// `log Δ_{n+1} − log b_n`
    DeltaOverB,
    /// `(log⁺ b_n)^{1/n}`
    LogBRoot,
    /// `log(b_s⋯b_n) / log(a_s⋯a_n)`
    StolzCesaro,
    PhiA,
    PhiB,
    PhiDelta,
    PsiA,
    PsiB,
    PsiDelta,
    /// `s_n`
    ItineraryIndex,
    /// `(s_1 + ⋯ + s_n) / n`
    ItineraryMean,
    /// `(s_1^κ + ⋯ + s_n^κ) / n`
    ItineraryPowerMean,
    /// `((κ−1)/log R) · log s_{n+1} / (s_1^κ + ⋯ + s_n^κ)`
    ItineraryPacking,
    /// `((κ−1)/log R) · log s_{n+1} / s_n^κ`
    ItineraryGrowth,
    /// log of the cover-sum bound
    CoverSumLog,
    ProfilePhi,
    ProfilePsi,
    /// `|inf h_n − closed-form inf|`
    ProfileGap,
}

impl ExprId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExprId::SmallModulusRoot => "small-modulus-root",
            ExprId::DeltaOverProduct => "delta-over-product",
            ExprId::GeometricMeanLog => "geometric-mean-log",
            ExprId::HausdorffUpper => "hausdorff-upper",
            ExprId::PackingUpper => "packing-upper",
            ExprId::PackingLower => "packing-lower",
            ExprId::DeltaOverA => "delta-over-a",
            ExprId::LogBOverLogA => "log-b-over-log-a",
            ExprId::RatioA => "ratio-a",
            ExprId::RatioB => "ratio-b",
            ExprId::DeltaOverB => "delta-over-b",
            ExprId::LogBRoot => "log-b-root",
            ExprId::StolzCesaro => "stolz-cesaro",
            ExprId::PhiA => "phi-a",
            ExprId::PhiB => "phi-b",
            ExprId::PhiDelta => "phi-delta",
            ExprId::PsiA => "psi-a",
            ExprId::PsiB => "psi-b",
            ExprId::PsiDelta => "psi-delta",
            ExprId::ItineraryMean => "itinerary-mean",
            ExprId::ItineraryPowerMean => "itinerary-power-mean",
            ExprId::ItineraryPacking => "itinerary-packing",
            ExprId::ItineraryGrowth => "itinerary-growth",
            ExprId::ItineraryIndex => "itinerary-index",
            ExprId::CoverSumLog => "cover-sum-log",
            ExprId::ProfilePhi => "profile-phi",
            ExprId::ProfilePsi => "profile-psi",
            ExprId::ProfileGap => "profile-gap",
        }
    }
}

/// Why a series ended before its horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum Stop {
    /// Operands too deep to resolve the quotient, or a cancellation flag.
    Unresolved { index: usize },
    /// Value left the binary64 range; `sign` gives the direction.
    Overflow { index: usize, sign: i8 },
    NonPositiveDenominator { index: usize },
    /// Terms could not be generated (level cap, exhausted list).
    Generation { index: usize, message: String },
}

impl Stop {
    pub fn index(&self) -> usize {
        match self {
            Stop::Unresolved { index }
            | Stop::Overflow { index, .. }
            | Stop::NonPositiveDenominator { index }
            | Stop::Generation { index, .. } => *index,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Trend {
    ConvergingTo { limit: f64, residual: f64 },
    Diverging { up: bool },
    Oscillating { lo: f64, hi: f64 },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub expr: ExprId,
    pub values: Vec<(usize, f64)>,
    pub trend: Trend,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<Stop>,
}

/// One evaluation step of a series.
pub enum Step {
    Value(f64),
    /// Pre-asymptotic index before the first value; skipped.
    Skip,
    Stop(Stop),
}

/// A `LevelReal` carrying a cancellation flag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flagged {
    pub v: LevelReal,
    pub flag: bool,
}

impl Flagged {
    pub fn exact(v: LevelReal) -> Self {
        Flagged { v, flag: false }
    }

    pub fn add(self, other: Flagged) -> Option<Flagged> {
        let s = self.v.add_flagged(other.v).ok()?;
        Some(Flagged { v: s.value, flag: self.flag || other.flag || s.indistinguishable })
    }

    pub fn sub(self, other: Flagged) -> Option<Flagged> {
        self.add(Flagged { v: other.v.neg(), flag: other.flag })
    }
}

/// `num / den` as a series step.
pub fn ratio_step(n: usize, num: Flagged, den: Flagged, started: bool) -> Step {
    if num.flag || den.flag {
        return Step::Stop(Stop::Unresolved { index: n });
    }
    if !den.v.is_positive() {
        return if started {
            Step::Stop(Stop::NonPositiveDenominator { index: n })
        } else {
            Step::Skip
        };
    }
    match num.v.ratio(den.v) {
        Ratio::Value(v) => Step::Value(v),
        Ratio::Overflow => Step::Stop(Stop::Overflow { index: n, sign: num.v.sign() }),
        Ratio::Unresolved => Step::Stop(Stop::Unresolved { index: n }),
    }
}

/// A level real as a series step.
pub fn value_step(n: usize, x: Flagged) -> Step {
    if x.flag {
        return Step::Stop(Stop::Unresolved { index: n });
    }
    let v = x.v.to_f64();
    if v.is_finite() {
        Step::Value(v)
    } else {
        Step::Stop(Stop::Overflow { index: n, sign: x.v.sign() })
    }
}

impl RatioSeries {
    /// Evaluates `f` for each index; `None` marks missing terms.
    pub fn build(
        expr: ExprId,
        range: impl IntoIterator<Item = usize>,
        mut f: impl FnMut(usize, bool) -> Result<Step, String>,
    ) -> Self {
        let mut values = Vec::new();
        let mut stop = None;
        for n in range {
            match f(n, !values.is_empty()) {
                Ok(Step::Value(v)) => values.push((n, v)),
                Ok(Step::Skip) => {}
                Ok(Step::Stop(s)) => {
                    stop = Some(s);
                    break;
                }
                Err(message) => {
                    stop = Some(Stop::Generation { index: n, message });
                    break;
                }
            }
        }
        Self::from_values(expr, values, stop)
    }

    pub fn from_values(expr: ExprId, values: Vec<(usize, f64)>, stop: Option<Stop>) -> Self {
        let trend = classify(&values, stop.as_ref());
        RatioSeries { expr, values, trend, stop }
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().map(|v| v.1)
    }

    pub fn last_index(&self) -> Option<usize> {
        self.values.last().map(|v| v.0)
    }

    fn tail_half(&self) -> &[(usize, f64)] {
        &self.values[self.values.len() / 2..]
    }

    /// Limit estimate when converging, tail-half max otherwise.
    pub fn limsup(&self) -> Option<f64> {
        match self.trend {
            Trend::ConvergingTo { limit, .. } => Some(limit),
            Trend::Diverging { up: true } => Some(f64::INFINITY),
            Trend::Diverging { up: false } => Some(f64::NEG_INFINITY),
            _ => self.tail_half().iter().map(|v| v.1).reduce(f64::max),
        }
    }

    /// Limit estimate when converging, tail-half min otherwise.
    pub fn liminf(&self) -> Option<f64> {
        match self.trend {
            Trend::ConvergingTo { limit, .. } => Some(limit),
            Trend::Diverging { up: true } => Some(f64::INFINITY),
            Trend::Diverging { up: false } => Some(f64::NEG_INFINITY),
            _ => self.tail_half().iter().map(|v| v.1).reduce(f64::min),
        }
    }

    pub fn residual(&self) -> Option<f64> {
        match self.trend {
            Trend::ConvergingTo { residual, .. } => Some(residual),
            _ => None,
        }
    }

    /// Converging to 0 within [`WITNESS_TOL`].
    /// A limit estimate that is small but clear of zero does not count:
    /// the limit must lie within three residuals of 0, or the tail must
    /// at least halve.
    pub fn tends_to_zero(&self) -> bool {
        let Trend::ConvergingTo { limit, residual } = self.trend else { return false };
        let tail = self.tail_half();
        let halves = match (tail.first(), tail.last()) {
            (Some(f), Some(l)) => l.1 == 0.0 || l.1.abs() <= 0.5 * f.1.abs(),
            _ => false,
        };
        limit.abs() <= WITNESS_TOL && (limit.abs() <= 3.0 * residual || halves)
    }

    pub fn diverges_up(&self) -> bool {
        matches!(self.trend, Trend::Diverging { up: true })
    }

    pub fn diverges_down(&self) -> bool {
        matches!(self.trend, Trend::Diverging { up: false })
    }

    /// No sign of growth past the first half of the series.
    pub fn bounded_above(&self) -> bool {
        match self.trend {
            Trend::ConvergingTo { .. } | Trend::Oscillating { .. } | Trend::Diverging { up: false } => true,
            Trend::Diverging { up: true } => false,
            Trend::Inconclusive => self.halves_hold(|head, tail| tail <= head, f64::max),
        }
    }

    /// No sign of decay past the first half of the series.
    pub fn bounded_below(&self) -> bool {
        match self.trend {
            Trend::ConvergingTo { .. } | Trend::Oscillating { .. } | Trend::Diverging { up: true } => true,
            Trend::Diverging { up: false } => false,
            Trend::Inconclusive => self.halves_hold(|head, tail| tail >= head, f64::min),
        }
    }

    fn halves_hold(&self, ok: impl Fn(f64, f64) -> bool, pick: fn(f64, f64) -> f64) -> bool {
        if self.values.len() < 4 || matches!(self.stop, Some(Stop::Overflow { .. })) {
            return false;
        }
        let (head, tail) = self.values.split_at(self.values.len() / 2);
        let ext = |s: &[(usize, f64)]| s.iter().map(|v| v.1).reduce(pick).expect("nonempty");
        ok(ext(head), ext(tail))
    }

    /// `|v_n − target|` shrinks over the tail, decaying like a power
    /// `n^{-p}` with `p >= 1/2` or already below 1e-3. Returns the last
    /// distance.
    pub fn approaches(&self, target: f64) -> Option<f64> {
        if self.stop.as_ref().is_some_and(|s| matches!(s, Stop::Overflow { .. })) {
            return None;
        }
        let m = self.values.len();
        if m < 2 {
            return None;
        }
        let tail = &self.values[(m / 2).min(m - 2)..];
        let dev: Vec<(f64, f64)> = tail.iter().map(|&(n, v)| (n as f64, (v - target).abs())).collect();
        let last = dev.last().expect("nonempty").1;
        if last <= 1e-3 {
            return Some(last);
        }
        if !dev.windows(2).all(|w| w[1].1 < w[0].1) {
            return None;
        }
        let p = -loglog_slope(&dev)?;
        (p >= 0.5).then_some(last)
    }
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Trend of the last quarter (at least three points) of a series.
pub fn classify(values: &[(usize, f64)], stop: Option<&Stop>) -> Trend {
    if let Some(Stop::Overflow { sign, .. }) = stop {
        return Trend::Diverging { up: *sign > 0 };
    }
    let m = values.len();
    if m < 3 {
        return Trend::Inconclusive;
    }
    let tail = &values[m - (m / 4).max(3)..];
    let scale = tail.iter().map(|v| v.1.abs()).fold(1.0, f64::max);
    let diffs: Vec<(usize, f64)> = tail.windows(2).map(|w| (w[1].0, w[1].1 - w[0].1)).collect();
    let last = tail[tail.len() - 1].1;
    let flat = 1e-12 * scale;
    if diffs.iter().all(|d| d.1.abs() <= flat) {
        return Trend::ConvergingTo { limit: last, residual: 0.0 };
    }
    let pos = diffs.iter().filter(|d| d.1 > flat).count();
    let neg = diffs.iter().filter(|d| d.1 < -flat).count();
    let mags: Vec<f64> = diffs.iter().map(|d| d.1.abs()).collect();
    let rho: Vec<f64> = mags
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    let d_last = *mags.last().expect("two diffs");
    if pos > 0 && neg > 0 {
        if rho.iter().all(|r| *r <= 0.9) {
            // geometric tail with the signed ratio of the last two steps
            let (d1, d0) = (diffs[diffs.len() - 1].1, diffs[diffs.len() - 2].1);
            let r = if d0 != 0.0 { d1 / d0 } else { 0.0 };
            let tail_sum = d1 * r / (1.0 - r);
            return Trend::ConvergingTo { limit: last + tail_sum, residual: tail_sum.abs().max(d_last * r.abs()) };
        }
        let lo = tail.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let hi = tail.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        return Trend::Oscillating { lo, hi };
    }
    let sign = if pos > 0 { 1.0 } else { -1.0 };
    if rho.iter().all(|r| *r < 1.0 - 1e-9) {
        let rmax = rho.iter().copied().fold(0.0, f64::max);
        let tail_sum = if rmax <= 0.9 {
            let r = *rho.last().expect("one ratio");
            Some(d_last * r / (1.0 - r))
        } else {
            let pts: Vec<(f64, f64)> = diffs.iter().map(|d| (d.0 as f64, d.1.abs())).collect();
            let p = loglog_slope(&pts).map(|s| -s).unwrap_or(0.0);
            let n_last = diffs[diffs.len() - 1].0 as f64;
            (p > 1.5).then(|| d_last * n_last / (p - 1.0))
        };
        return match tail_sum {
            Some(t) => Trend::ConvergingTo { limit: last + sign * t, residual: t },
            None => Trend::Inconclusive,
        };
    }
    // growth toward 0 is an approach, not divergence
    if rho.iter().all(|r| *r >= 1.0 - 1e-9) && sign * last > 0.0 {
        return Trend::Diverging { up: sign > 0.0 };
    }
    Trend::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, n: usize) -> Vec<(usize, f64)> {
        (1..=n).map(|k| (k, f(k as f64))).collect()
    }

    #[test]
    fn geometric_decay_converges() {
        let v = series(|n| 3.0 + 0.5f64.powf(n), 20);
        match classify(&v, None) {
            Trend::ConvergingTo { limit, .. } => assert!((limit - 3.0).abs() < 1e-9),
            t => panic!("{t:?}"),
        }
    }

    #[test]
    fn power_decay_converges() {
        let v = series(|n| 1.0 / (n * n), 40);
        match classify(&v, None) {
            Trend::ConvergingTo { limit, .. } => assert!(limit.abs() < 2e-3),
            t => panic!("{t:?}"),
        }
    }

    #[test]
    fn linear_growth_diverges() {
        let v = series(|n| (n + 1.0) / 2.0, 30);
        assert_eq!(classify(&v, None), Trend::Diverging { up: true });
        let o = Stop::Overflow { index: 4, sign: 1 };
        assert_eq!(classify(&v[..2], Some(&o)), Trend::Diverging { up: true });
    }

    #[test]
    fn harmonic_growth_is_inconclusive() {
        let v = series(|n| n.ln(), 40);
        assert_eq!(classify(&v, None), Trend::Inconclusive);
    }

    #[test]
    fn alternating_is_oscillating() {
        let v = series(|n| if (n as usize).is_multiple_of(2) { 1.0 } else { 2.0 }, 20);
        assert!(matches!(classify(&v, None), Trend::Oscillating { lo, hi } if lo == 1.0 && hi == 2.0));
    }

    #[test]
    fn approaches_one() {
        let s = RatioSeries::from_values(ExprId::LogBOverLogA, series(|n| 1.0 + 1.0 / n, 6), None);
        assert!(s.approaches(1.0).is_some());
        let s = RatioSeries::from_values(ExprId::LogBOverLogA, series(|n| 2.0 + 1.0 / n, 6), None);
        assert!(s.approaches(1.0).is_none());
    }
}
