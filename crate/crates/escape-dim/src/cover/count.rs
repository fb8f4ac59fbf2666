//! Cells of the next depth against `U_{j,k} ∩ S_{n+1}`.
//!
//! `U^{(n)}_{j,k}` is the half-annulus `|λ_{N+n}| e^{jδ} <= |w| < |λ_{N+n}| e^{(j+1)δ}`
//! in the upper (`k` even) or lower (`k` odd) half-plane. Each test is closed
//! form per column, so exact counting costs one step per column.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{lv, open_integers, CoverError, Grid, JRange};
use crate::levelnum::LevelReal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    Exact,
    Bound,
}

/// Upper family: cells meeting the region. Lower family: cells with even
/// `j, k` contained in it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    Disjoint,
    Meets,
    Contained,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub mode: CountMode,
    pub lower: LevelReal,
    pub upper: LevelReal,
    /// `D^{(n+1)}_j`
    pub d: LevelReal,
}

/// `U ∩ S` in binary64.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Region {
    x_lo: f64,
    x_hi: f64,
    r_in: f64,
    r_out: f64,
    upper_half: bool,
    /// `Arg λ_{N+n+1}`
    phi: f64,
    delta: f64,
}

/// `sqrt(r² − x²)` for `|x| <= r`, else 0.
fn chord(r: f64, x: f64) -> f64 {
    let x = x.abs();
    if x >= r {
        0.0
    } else {
        ((r - x) * (r + x)).sqrt()
    }
}

fn evens(r: JRange) -> u64 {
    if r.is_empty() {
        return 0;
    }
    (r.hi.div_euclid(2) - (r.lo + 1).div_euclid(2) + 1).max(0) as u64
}

impl Region {
    fn columns(&self) -> JRange {
        open_integers(self.x_lo / self.delta - 1.0, self.x_hi / self.delta)
    }

    /// `(min |x|, max |x|)` over `[c0, c1]`.
    fn abs_span(c0: f64, c1: f64) -> (f64, f64) {
        let lo = if c0 <= 0.0 && 0.0 <= c1 { 0.0 } else { c0.abs().min(c1.abs()) };
        (lo, c0.abs().max(c1.abs()))
    }

    /// Rows whose open box meets the region over the column `jc`.
    fn meeting_rows(&self, jc: i64) -> JRange {
        let c0 = (jc as f64 * self.delta).max(self.x_lo);
        let c1 = ((jc + 1) as f64 * self.delta).min(self.x_hi);
        let (m, big) = Self::abs_span(c0, c1);
        let (ylo, yhi) = (chord(self.r_in, big), chord(self.r_out, m));
        if yhi <= ylo {
            return JRange { lo: 0, hi: -1 };
        }
        let (y0, y1) = if self.upper_half { (ylo, yhi) } else { (-yhi, -ylo) };
        open_integers((y0 + self.phi) / PI - 1.0, (y1 + self.phi) / PI)
    }

    /// Rows whose closed box lies inside the region over the column `jc`;
    /// empty unless the column lies inside `[x_lo, x_hi]`.
    fn contained_rows(&self, jc: i64) -> JRange {
        let (c0, c1) = (jc as f64 * self.delta, (jc + 1) as f64 * self.delta);
        if c0 < self.x_lo || c1 > self.x_hi {
            return JRange { lo: 0, hi: -1 };
        }
        let (m, big) = Self::abs_span(c0, c1);
        let (ylo, yhi) = (chord(self.r_in, m), chord(self.r_out, big));
        let (y0, y1) = if self.upper_half { (ylo, yhi) } else { (-yhi, -ylo) };
        JRange { lo: ((y0 + self.phi) / PI).ceil() as i64, hi: ((y1 + self.phi) / PI - 1.0).floor() as i64 }
    }

    fn count(&self) -> (u64, u64) {
        let cols = self.columns();
        let mut upper = 0u64;
        let mut lower = 0u64;
        for jc in cols.lo..=cols.hi {
            upper += self.meeting_rows(jc).len();
            if jc.rem_euclid(2) == 0 {
                lower += evens(self.contained_rows(jc));
            }
        }
        (lower, upper)
    }

    fn relation(&self, jc: i64, kc: i64) -> Relation {
        if self.contained_rows(jc).contains(kc) {
            Relation::Contained
        } else if self.columns().contains(jc) && self.meeting_rows(jc).contains(kc) {
            Relation::Meets
        } else {
            Relation::Disjoint
        }
    }
}

impl Grid {
    /// `U^{(n)}_{j,k} ∩ S_{n+1}`; `None` when empty.
    pub(crate) fn region(&self, n: usize, j: i64, k: i64) -> Result<Option<Region>, CoverError> {
        let s = self.strip(n + 1)?;
        let (a, b) = s.bounds()?;
        let lam = self.lambda(n)?.norm();
        let delta = self.params.delta;
        let (r_in, r_out) = (lam * (j as f64 * delta).exp(), lam * ((j + 1) as f64 * delta).exp());
        if !r_out.is_finite() {
            return Err(CoverError::DepthLimit { n, what: "e^{jδ}".into() });
        }
        let (x_lo, x_hi) = (a.max(-r_out), b.min(r_out));
        if x_lo >= x_hi {
            return Ok(None);
        }
        let phi = self.lambda(n + 1)?.arg();
        Ok(Some(Region { x_lo, x_hi, r_in, r_out, upper_half: k.rem_euclid(2) == 0, phi, delta }))
    }

    /// `(c̃₁ D e^{jδ}, c₁ D e^{jδ})` clamped at 0, with `D = D^{(n+1)}_j`.
    pub fn count_bounds(&self, n: usize, j: i64) -> Result<Counts, CoverError> {
        let d = self.strip_width_d(n + 1, j)?.d;
        let scale = |c: f64| -> Result<LevelReal, CoverError> {
            if !d.is_positive() {
                return Ok(LevelReal::ZERO);
            }
            let e = LevelReal::from_f64(j as f64 * self.params.delta).and_then(LevelReal::exp).map_err(lv(n))?;
            d.mul(e).and_then(|x| x.scale(c)).map_err(lv(n))
        };
        Ok(Counts {
            mode: CountMode::Bound,
            lower: scale(self.ledger.c1_lower.value)?,
            upper: scale(self.ledger.c1.value)?,
            d,
        })
    }

    /// Branch counts of the cell `(j, k)` at depth `n`.
    pub fn count_branches(&self, n: usize, j: i64, k: i64, mode: CountMode) -> Result<Counts, CoverError> {
        let bound = self.count_bounds(n, j)?;
        if mode == CountMode::Bound {
            return Ok(bound);
        }
        let too_many = |cells: f64| CoverError::Budget { cells, budget: self.budget };
        if !(bound.upper.to_f64() <= self.budget as f64) {
            return Err(too_many(bound.upper.to_f64()));
        }
        let Some(region) = self.region(n, j, k)? else {
            return Ok(Counts { mode, lower: LevelReal::ZERO, upper: LevelReal::ZERO, d: bound.d });
        };
        let cells = region.columns().len() as f64;
        if !(cells <= self.budget as f64) {
            return Err(too_many(cells));
        }
        let (lo, hi) = region.count();
        let f = |x: u64| LevelReal::from_f64(x as f64).map_err(lv(n));
        Ok(Counts { mode, lower: f(lo)?, upper: f(hi)?, d: bound.d })
    }

    /// Rows `k'` of column `next_j` whose cells meet `U^{(n)}_{j,k} ∩ S_{n+1}`.
    pub fn meeting_rows(&self, n: usize, j: i64, k: i64, next_j: i64) -> Result<JRange, CoverError> {
        Ok(match self.region(n, j, k)? {
            Some(r) if r.columns().contains(next_j) => r.meeting_rows(next_j),
            _ => JRange { lo: 0, hi: -1 },
        })
    }

    /// Position of the cell `K^{(n+1)}_{j', k'}` against `U^{(n)}_{j,k} ∩ S_{n+1}`.
    pub fn relation(&self, n: usize, j: i64, k: i64, next_j: i64, next_k: i64) -> Result<Relation, CoverError> {
        Ok(self.region(n, j, k)?.map_or(Relation::Disjoint, |r| r.relation(next_j, next_k)))
    }
}
