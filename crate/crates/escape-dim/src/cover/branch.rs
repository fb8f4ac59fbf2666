//! Inverse branches of `E_λ(z) = λe^z` and arbitrary-precision pullbacks.

use std::f64::consts::{PI, TAU};

use astro_float::{BigFloat, Consts, RoundingMode};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{lv, CoverError, Grid, Letter};
use crate::levelnum::LevelReal;

const RM: RoundingMode = RoundingMode::ToEven;

/// Guard bits beyond `log₂|z|` for the mod-2π reduction.
pub const GUARD_BITS: usize = 64;

/// `w = e^{ln_mod + i arg}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPolar {
    pub ln_mod: f64,
    pub arg: f64,
}

impl From<Complex64> for LogPolar {
    fn from(w: Complex64) -> Self {
        LogPolar { ln_mod: w.norm().ln(), arg: w.arg() }
    }
}

/// Offset of `arg − kπ` into `[0, π]` modulo 2π, or `None` off the
/// closed half-plane of `k`.
fn half_plane_offset(t: f64) -> Option<f64> {
    let tol = 1e-12 * t.abs().max(1.0);
    let r = t.rem_euclid(TAU);
    if r <= PI + tol {
        Some(r.min(PI))
    } else if r >= TAU - tol {
        Some(0.0)
    } else {
        None
    }
}

/// `g_k(w) = ln|w/λ| + iθ` with `θ ≡ Arg(w/λ)` taken in
/// `H_k = [kπ − Arg λ, (k+1)π − Arg λ]`; `w` must lie in the closed upper
/// (`k` even) or lower (`k` odd) half-plane.
pub fn inverse_branch(lambda: Complex64, k: i64, w: LogPolar) -> Result<Complex64, CoverError> {
    if w.ln_mod == f64::NEG_INFINITY || w.ln_mod.is_nan() {
        return Err(CoverError::Domain("w = 0".into()));
    }
    if lambda.norm() == 0.0 {
        return Err(CoverError::Domain("λ = 0".into()));
    }
    let off = half_plane_offset(w.arg - k as f64 * PI)
        .ok_or_else(|| CoverError::Domain(format!("Arg w = {} is off the half-plane of k = {k}", w.arg)))?;
    let theta = k as f64 * PI - lambda.arg() + off;
    Ok(Complex64::new(w.ln_mod - lambda.norm().ln(), theta))
}

impl Grid {
    /// Inverse branch of `E_{λ_{N+n}}`.
    pub fn inverse_branch(&self, n: usize, k: i64, w: LogPolar) -> Result<Complex64, CoverError> {
        inverse_branch(self.lambda(n)?, k, w)
    }
}

/// Margins of `|orbit_{m+1}|` inside `[a_{N+m}, b_{N+m}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMargin {
    pub m: usize,
    pub ln_modulus: LevelReal,
    pub arg: f64,
    /// `|orbit| − a`
    pub lower: LevelReal,
    /// `b − |orbit|`
    pub upper: LevelReal,
    pub ln_lower: f64,
    pub ln_upper: f64,
}

impl StepMargin {
    pub fn positive(&self) -> bool {
        self.lower.sign() >= 0 && self.upper.sign() >= 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pullback {
    pub bits: usize,
    pub depth: usize,
    /// Deepest depth the precision plan allows.
    pub plan: usize,
    /// `z` rounded to binary64, and in full as decimal text.
    pub z: [f64; 2],
    pub z_text: [String; 2],
    pub margins: Vec<StepMargin>,
    pub verified_through: usize,
    pub all_positive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<String>,
}

/// Deepest `n` such that every reduction `|orbit_m| mod 2π`, `1 <= m < n`,
/// fits in `bits` with `GUARD_BITS` to spare (`|orbit_m| <= b_{N+m−1}`).
pub fn plan_depth(grid: &Grid, bits: usize, limit: usize) -> usize {
    let mut n = 1;
    while n < limit {
        let Ok(lb) = grid.band.ln_b(grid.index(n - 1)) else { break };
        let need = lb.to_f64() / std::f64::consts::LN_2 + GUARD_BITS as f64;
        if !(need < bits as f64) {
            break;
        }
        n += 1;
    }
    n
}

struct Prec {
    p: usize,
    cc: Consts,
}

impl Prec {
    fn new(bits: usize) -> Result<Self, CoverError> {
        let cc = Consts::new().map_err(|e| CoverError::Precision(format!("{e:?}")))?;
        Ok(Prec { p: bits, cc })
    }

    fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, self.p)
    }

    fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.p, RM)
    }

    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.p, RM)
    }

    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.p, RM)
    }

    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.p, RM)
    }

    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.p, RM)
    }

    fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.p, RM, &mut self.cc)
    }

    fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.p, RM, &mut self.cc)
    }

    fn atan2(&mut self, y: &BigFloat, x: &BigFloat) -> BigFloat {
        let pi = self.pi();
        if x.is_zero() {
            let half = self.div(&pi, &self.f(2.0));
            return if y.is_negative() { half.neg() } else { half };
        }
        let t = self.div(y, x).atan(self.p, RM, &mut self.cc);
        if x.is_positive() {
            t
        } else if y.is_negative() {
            self.sub(&t, &pi)
        } else {
            self.add(&t, &pi)
        }
    }

    /// `x mod 2π` in `[0, 2π)`.
    fn mod_tau(&mut self, x: &BigFloat) -> BigFloat {
        let pi = self.pi();
        let tau = self.mul(&pi, &self.f(2.0));
        let q = self.div(x, &tau).floor();
        self.sub(x, &self.mul(&q, &tau))
    }
}

/// Nearest binary64 value.
fn to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    match x.as_raw_parts() {
        Some((words, _, sign, e, _)) => {
            let top = words.last().copied().unwrap_or(0) as f64;
            let next = if words.len() > 1 { words[words.len() - 2] as f64 / 2f64.powi(64) } else { 0.0 };
            let s = e - 64;
            let v = (top + next) * 2f64.powi(s / 2) * 2f64.powi(s - s / 2);
            if sign == astro_float::Sign::Neg {
                -v
            } else {
                v
            }
        }
        None => f64::NAN,
    }
}

/// `z = g^{(0)}_{k_0} ∘ ⋯ ∘ g^{(n−1)}_{k_{n−1}}(w)` at `bits` of precision,
/// then the forward orbit `orbit_{m+1} = E_{λ_{N+m}}(orbit_m)` checked
/// against `[a_{N+m}, b_{N+m}]`. The letters' `j` are not used.
pub fn pullback_point(grid: &Grid, word: &[Letter], w: LogPolar, bits: usize) -> Result<Pullback, CoverError> {
    let n = word.len();
    if n == 0 {
        return Err(CoverError::Param("empty word".into()));
    }
    if bits < 53 {
        return Err(CoverError::Param("precision below 53 bits".into()));
    }
    let mut pr = Prec::new(bits)?;
    let lambdas = (0..n).map(|m| grid.lambda(m)).collect::<Result<Vec<_>, _>>()?;
    let ln_lam: Vec<BigFloat> = lambdas
        .iter()
        .map(|l| {
            let (re, im) = (pr.f(l.re), pr.f(l.im));
            let r2 = pr.add(&pr.mul(&re, &re), &pr.mul(&im, &im));
            let half = pr.f(0.5);
            let lr = pr.ln(&r2);
            pr.mul(&lr, &half)
        })
        .collect();
    let arg_lam: Vec<BigFloat> = lambdas
        .iter()
        .map(|l| {
            let (re, im) = (pr.f(l.re), pr.f(l.im));
            pr.atan2(&im, &re)
        })
        .collect();

    // backward: u_n = w given by (ln|w|, Arg w)
    let (mut ln_mod, mut arg) = (pr.f(w.ln_mod), pr.f(w.arg));
    let (mut x, mut y) = (pr.f(0.0), pr.f(0.0));
    for m in (0..n).rev() {
        let k = word[m].k;
        let pi = pr.pi();
        let kpi = pr.mul(&pr.f(k as f64), &pi);
        let t = pr.sub(&arg, &kpi);
        let off = pr.mod_tau(&t);
        let off_f = to_f64(&off);
        let off = if off_f <= PI + 1e-12 {
            off
        } else if off_f >= TAU - 1e-12 {
            pr.f(0.0)
        } else {
            return Err(CoverError::Domain(format!("letter {m}: Arg = {} is off the half-plane of k = {k}", to_f64(&arg))));
        };
        x = pr.sub(&ln_mod, &ln_lam[m]);
        y = pr.add(&pr.sub(&kpi, &arg_lam[m]), &off);
        let r2 = pr.add(&pr.mul(&x, &x), &pr.mul(&y, &y));
        let lr = pr.ln(&r2);
        ln_mod = pr.mul(&lr, &pr.f(0.5));
        arg = pr.atan2(&y, &x);
    }
    let z = [to_f64(&x), to_f64(&y)];
    let z_text = [format!("{x}"), format!("{y}")];

    // forward
    let plan = plan_depth(grid, bits, n);
    let mut margins = Vec::with_capacity(n);
    let mut limit = None;
    let threshold = 2f64.powi((bits.saturating_sub(GUARD_BITS)) as i32);
    for m in 0..n {
        if m > 0 && !(to_f64(&pr.add(&pr.mul(&x, &x), &pr.mul(&y, &y))).sqrt() < threshold) {
            limit = Some(format!("precision exhausted at depth {m}: |orbit_{m}| needs more than {bits} bits"));
            break;
        }
        let ln_next = pr.add(&ln_lam[m], &x);
        let theta = pr.add(&arg_lam[m], &y);
        let theta = pr.mod_tau(&theta);
        let lm = LevelReal::from_f64(to_f64(&ln_next)).map_err(lv(m))?;
        let i = grid.index(m);
        let (la, lb) = (grid.band.ln_a(i)?, grid.band.ln_b(i)?);
        let modulus = lm.exp().map_err(lv(m))?;
        let a = la.exp().map_err(lv(m))?;
        let b = lb.exp().map_err(lv(m))?;
        margins.push(StepMargin {
            m,
            ln_modulus: lm,
            arg: to_f64(&theta),
            lower: modulus.sub(a).map_err(lv(m))?,
            upper: b.sub(modulus).map_err(lv(m))?,
            ln_lower: lm.sub(la).map_err(lv(m))?.to_f64(),
            ln_upper: lb.sub(lm).map_err(lv(m))?.to_f64(),
        });
        if m + 1 < n {
            let r = pr.exp(&ln_next);
            let c = theta.cos(pr.p, RM, &mut pr.cc);
            let s = theta.sin(pr.p, RM, &mut pr.cc);
            x = pr.mul(&r, &c);
            y = pr.mul(&r, &s);
        }
    }
    let verified_through = margins.len();
    let all_positive = verified_through == n && margins.iter().all(StepMargin::positive);
    Ok(Pullback { bits, depth: n, plan, z, z_text, margins, verified_through, all_positive, limit })
}

/// Letters `k_{n−1}, …, k_0` chosen backwards from `w` so that each preimage
/// modulus sits near `√(a b)` of its band; `j_m = ⌊Re u_m / δ⌋`.
pub fn fit_word(grid: &Grid, w: LogPolar, depth: usize) -> Result<Vec<Letter>, CoverError> {
    let mut word = vec![Letter { j: 0, k: 0 }; depth];
    let mut u = w;
    for m in (0..depth).rev() {
        let lam = grid.lambda(m)?;
        let x = u.ln_mod - lam.norm().ln();
        let base = u.arg - lam.arg();
        let target = if m == 0 {
            0.0
        } else {
            let i = grid.index(m - 1);
            let mid = 0.5 * (grid.band.ln_a(i)?.to_f64() + grid.band.ln_b(i)?.to_f64());
            let t = mid.exp();
            if !t.is_finite() {
                return Err(CoverError::DepthLimit { n: m, what: "band midpoint".into() });
            }
            if t > x.abs() { ((t - x) * (t + x)).sqrt() } else { 0.0 }
        };
        let s = ((target - base) / TAU).round();
        let theta = base + s * TAU;
        let k = ((theta + lam.arg()) / PI).floor() as i64;
        let z = inverse_branch(lam, k, u)?;
        word[m] = Letter { j: (z.re / grid.params.delta).floor() as i64, k };
        u = LogPolar::from(z);
    }
    Ok(word)
}
