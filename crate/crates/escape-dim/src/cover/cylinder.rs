//! Cylinders of the δ-grid and the local-dimension profile along a word.

use serde::{Deserialize, Serialize};

use super::{CountMode, CoverError, Family, Grid, Letter, Relation};
use crate::levelnum::LevelReal;
use crate::series::{ExprId, RatioSeries};

/// Log-uniform samples of `h_n` per depth, besides the breakpoint.
pub const H_SAMPLES: usize = 64;

/// Logs of diameters and masses; the per-step count bounds are kept as logs
/// too, so deep cylinders stay finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub word: Vec<Letter>,
    pub family: Family,
    pub ln_diam_lower: f64,
    pub ln_diam_upper: f64,
    /// `(ln lower, ln upper)` count bounds used at each extension.
    pub ln_counts: Vec<(f64, f64)>,
    pub ln_mass_lower: f64,
    pub ln_mass_upper: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub profile: Vec<f64>,
}

impl Cylinder {
    pub fn depth(&self) -> usize {
        self.word.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub n: usize,
    pub inf_sampled: f64,
    pub sup_sampled: f64,
    /// `ln(D⁽¹⁾⋯D⁽ⁿ⁾) / ((j₀+⋯+j_n)δ − ln D^{(n+1)})`
    pub inf_target: f64,
    /// Larger of the two endpoint ratios.
    pub sup_target: f64,
    pub phi: f64,
    pub psi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    /// Leading depths with a nonpositive denominator.
    pub skipped: usize,
    pub rows: Vec<ProfileRow>,
    /// `|inf_sampled − inf_target|` by depth.
    pub gap: RatioSeries,
    /// `gap` shrinks like a power of `n`.
    pub gap_vanishes: bool,
    pub phi: RatioSeries,
    pub psi: RatioSeries,
}

fn ln_level(x: LevelReal, n: usize) -> Result<f64, CoverError> {
    if !x.is_positive() {
        return Err(CoverError::PreAsymptotic { n });
    }
    let l = x.ln().map_err(super::lv(n))?.to_f64();
    if !l.is_finite() {
        return Err(CoverError::DepthLimit { n, what: "ln D".into() });
    }
    Ok(l)
}

impl Grid {
    /// Depth-0 cylinder: the cell `K^{(0)}_{j,k}`, diameter `d₀`, mass 1.
    pub fn cylinder(&self, j: i64, k: i64, family: Family) -> Result<Cylinder, CoverError> {
        if !self.j_range(0)?.contains(j) {
            return Err(CoverError::IllegalExtension(format!("j₀ = {j} outside the depth-0 j-range")));
        }
        let l = self.params.d0().ln();
        Ok(Cylinder {
            word: vec![Letter { j, k }],
            family,
            ln_diam_lower: l,
            ln_diam_upper: l,
            ln_counts: Vec::new(),
            ln_mass_lower: 0.0,
            ln_mass_upper: 0.0,
            profile: Vec::new(),
        })
    }

    /// Appends `(j, k)` at depth `n + 1`.
    pub fn cylinder_extend(&self, cyl: &Cylinder, j: i64, k: i64) -> Result<Cylinder, CoverError> {
        let n = cyl.depth();
        let last = cyl.word[n];
        let rel = self.relation(n, last.j, last.k, j, k)?;
        match (cyl.family, rel) {
            (_, Relation::Disjoint) => {
                return Err(CoverError::IllegalExtension(format!(
                    "K^({})_({j},{k}) misses U_({},{}) ∩ S_{}",
                    n + 1,
                    last.j,
                    last.k,
                    n + 1
                )))
            }
            (Family::Lower, Relation::Meets) => {
                return Err(CoverError::IllegalExtension(format!(
                    "K^({})_({j},{k}) is not contained in U_({},{}) ∩ S_{}",
                    n + 1,
                    last.j,
                    last.k,
                    n + 1
                )))
            }
            (Family::Lower, _) if j.rem_euclid(2) != 0 || k.rem_euclid(2) != 0 => {
                return Err(CoverError::IllegalExtension(format!("lower family needs even (j, k), got ({j}, {k})")))
            }
            _ => {}
        }
        let step = last.j as f64 * self.params.delta;
        let lc = self.ledger.c.value.ln();
        let upper = cyl.ln_diam_upper + lc - step;
        let limit = self.params.d0().ln() - (n + 1) as f64 * std::f64::consts::LN_2;
        if !(upper < limit) {
            return Err(CoverError::IllegalExtension(format!("diameter bound does not halve at depth {}", n + 1)));
        }
        let counts = self.count_branches(n, last.j, last.k, CountMode::Bound)?;
        let (cl, cu) = (ln_level(counts.lower, n)?, ln_level(counts.upper, n)?);
        let mut out = cyl.clone();
        out.word.push(super::Letter { j, k });
        out.ln_diam_upper = upper;
        out.ln_diam_lower = cyl.ln_diam_lower - lc - step;
        out.ln_counts.push((cl, cu));
        out.ln_mass_lower = cyl.ln_mass_lower - cu;
        out.ln_mass_upper = cyl.ln_mass_upper - cl;
        out.profile.clear();
        Ok(out)
    }

    /// `Φ_n` and `Ψ_n` at `x_m = δ j_m`:
    /// `Ψ_n = Σ_{m<=n} min(ln Δ_{N+m+1}, x_m) / Σ_{m<=n} x_m` and
    /// `Φ_n = Σ_{m<n} min(…) / (Σ_{m<n} x_m + (x_n − ln Δ_{N+n+1})⁺)`.
    pub fn phi_psi(&self, word: &[Letter], n: usize) -> Result<(f64, f64), CoverError> {
        if word.len() <= n {
            return Err(CoverError::Param(format!("word shorter than depth {n}")));
        }
        let mut mins = Vec::with_capacity(n + 1);
        let mut xs = Vec::with_capacity(n + 1);
        for (m, l) in word.iter().enumerate().take(n + 1) {
            let x = l.j as f64 * self.params.delta;
            let (ld, _) = self.band.ln_delta(self.index(m + 1))?;
            let ld = ld.to_f64();
            mins.push(if ld.is_nan() { x } else { ld.min(x) });
            xs.push((x, ld));
        }
        let sx: f64 = xs.iter().map(|v| v.0).sum();
        let sm: f64 = mins.iter().sum();
        if !(sx > 0.0) {
            return Err(CoverError::PreAsymptotic { n });
        }
        let head_x = sx - xs[n].0;
        let head_m = sm - mins[n];
        let gap = (xs[n].0 - xs[n].1).max(0.0);
        let den = head_x + gap;
        let phi = if den > 0.0 { head_m / den } else { 0.0 };
        Ok((phi, sm / sx))
    }

    /// `h_n` on `[√C, √C e^{j_n δ})`:
    /// `(Σ_{m<=n+1} ln D^{(m)} − min(ln x, ln D^{(n+1)}) + c₇ n) / (Σ_{m<=n} j_m δ − ln x − c₇ n)`,
    /// with `D^{(m)} = D^{(m)}_{j_{m−1}}`.
    pub fn local_dimension_profile(&self, cyl: &mut Cylinder, horizon: usize) -> Result<Profile, CoverError> {
        let word = cyl.word.clone();
        let delta = self.params.delta;
        let c7 = self.ledger.c7.value;
        let ln_r_minus = 0.5 * self.ledger.big_c.value.ln();
        let last = horizon.min(word.len() - 1);
        let mut rows = Vec::new();
        let mut sum_ln_d = 0.0;
        let mut sum_j = 0.0;
        cyl.profile.clear();
        let mut skipped = 0;
        for n in 0..=last {
            let ln_d_next = ln_level(self.strip_width_d(n + 1, word[n].j)?.d, n)?;
            sum_j += word[n].j as f64 * delta;
            let nf = n as f64;
            let ln_r_plus = ln_r_minus + word[n].j as f64 * delta;
            let row = (|| -> Result<ProfileRow, CoverError> {
                let ratio = |num: f64, den: f64| if den > 0.0 { Ok(num / den) } else { Err(CoverError::PreAsymptotic { n }) };
                let h = |lx: f64| ratio(sum_ln_d + ln_d_next - lx.min(ln_d_next) + c7 * nf, sum_j - lx - c7 * nf);
                let bare = |lx: f64| ratio(sum_ln_d + ln_d_next - lx.min(ln_d_next), sum_j - lx);
                let mut samples: Vec<f64> = (0..H_SAMPLES)
                    .map(|i| ln_r_minus + (ln_r_plus - ln_r_minus) * i as f64 / H_SAMPLES as f64)
                    .collect();
                if ln_r_minus <= ln_d_next && ln_d_next < ln_r_plus {
                    samples.push(ln_d_next);
                }
                let hs = samples.iter().map(|&lx| h(lx)).collect::<Result<Vec<_>, _>>()?;
                let (phi, psi) = self.phi_psi(&word, n)?;
                Ok(ProfileRow {
                    n,
                    inf_sampled: hs.iter().copied().fold(f64::INFINITY, f64::min),
                    sup_sampled: hs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    inf_target: ratio(sum_ln_d, sum_j - ln_d_next)?,
                    sup_target: bare(ln_r_minus)?.max(bare(ln_r_plus)?),
                    phi,
                    psi,
                })
            })();
            match row {
                Ok(r) => {
                    cyl.profile.push(r.inf_sampled);
                    rows.push(r);
                }
                Err(CoverError::PreAsymptotic { .. }) if rows.is_empty() => skipped += 1,
                Err(e) => return Err(e),
            }
            sum_ln_d += ln_d_next;
        }
        if rows.is_empty() {
            return Err(CoverError::PreAsymptotic { n: last });
        }
        let gap = RatioSeries::from_values(
            ExprId::ProfileGap,
            rows.iter().map(|r| (r.n, (r.inf_sampled - r.inf_target).abs())).collect(),
            None,
        );
        let phi = RatioSeries::from_values(ExprId::ProfilePhi, rows.iter().map(|r| (r.n, r.phi)).collect(), None);
        let psi = RatioSeries::from_values(ExprId::ProfilePsi, rows.iter().map(|r| (r.n, r.psi)).collect(), None);
        let gap_vanishes = gap.approaches(0.0).is_some();
        Ok(Profile { skipped, rows, gap, gap_vanishes, phi, psi })
    }
}
