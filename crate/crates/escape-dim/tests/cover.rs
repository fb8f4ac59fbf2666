use std::f64::consts::{LN_2, PI, TAU};

use escape_dim::cover::*;
use escape_dim::levelnum::LevelReal;
use escape_dim::presets::{preset, PresetArgs, Subject};
use escape_dim::sequences::{Band, EscapeBandSpec, LambdaSpec, SequenceSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn lr(x: f64) -> LevelReal {
    LevelReal::from_f64(x).unwrap()
}

fn flat(x: f64, len: usize) -> SequenceSpec {
    SequenceSpec::Explicit { terms: vec![lr(x); len] }
}

fn explicit(xs: &[f64]) -> SequenceSpec {
    SequenceSpec::Explicit { terms: xs.iter().map(|&x| lr(x)).collect() }
}

fn params(delta: f64) -> GridParams {
    GridParams { n_start: 1, delta, q: 0.3, eps_reg: 0.1, a_threshold: 1.0, delta_min: 4.0 * delta + 1.0 }
}

fn grid(a: SequenceSpec, b: SequenceSpec, lambda: LambdaSpec, delta: f64) -> Grid {
    let band = Band::new(EscapeBandSpec { a, b, lambda }).unwrap();
    Grid::new(band, params(delta)).unwrap()
}

fn one() -> LambdaSpec {
    LambdaSpec::default()
}

fn named(name: &str, d: Option<f64>) -> Grid {
    let Subject::Band { band, params } = preset(name, PresetArgs { d, kappa: None }).unwrap().subject else {
        panic!("{name} is not a band preset")
    };
    let band = Band::new(band).unwrap();
    let gp = GridParams::for_band(&band, &params).unwrap();
    Grid::new(band, gp).unwrap()
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * y.abs().max(1.0)
}

/// Integers with `e^{−δ} a < e^{jδ} < b`, by enumeration.
fn j_oracle(a: f64, b: f64, delta: f64) -> Vec<i64> {
    (-1000..1000).filter(|&j| (-delta).exp() * a < (j as f64 * delta).exp() && (j as f64 * delta).exp() < b).collect()
}

fn range_vec(r: JRange) -> Vec<i64> {
    (r.lo..=r.hi).collect()
}

#[test]
fn strip_edges() {
    let g = grid(flat(100.0, 5), flat(200.0, 5), LambdaSpec::Constant { re: 2.0, im: 0.0 }, 0.1);
    let s = g.strip(0).unwrap();
    assert!(close(s.a.to_f64(), 50f64.ln(), 1e-14));
    assert!(close(s.b.to_f64(), 100f64.ln(), 1e-14));
    assert!(close(s.width.to_f64(), 2f64.ln(), 1e-14));
    assert!(s.contains(4.0) && !s.contains(3.9) && !s.contains(4.7));

    let g = grid(flat(100.0, 5), flat(200.0, 5), one(), 0.1);
    assert_eq!(g.strip(2).unwrap().a.to_f64(), 100f64.ln());
}

#[test]
fn tower_strip_follows_the_recurrence() {
    // a_1 = 20, a_{n+1} = e^{n a_n^{1/2}}
    let mut ln_a = vec![20f64.ln()];
    for n in 1..3 {
        let prev: f64 = ln_a[n - 1];
        ln_a.push(n as f64 * (0.5 * prev).exp());
    }
    let band = Band::new(EscapeBandSpec {
        a: SequenceSpec::Tower { d: 0.5, a1: lr(20.0) },
        b: SequenceSpec::PowerBand { base: None },
        lambda: one(),
    })
    .unwrap();
    let g = Grid::new(band, GridParams { n_start: 3, ..params(0.05) }).unwrap();
    let s = g.strip(0).unwrap();
    assert!(close(s.a.to_f64(), ln_a[2], 1e-12), "{} vs {}", s.a, ln_a[2]);
    assert!(close(s.b.to_f64(), ln_a[2] * 4.0 / 3.0, 1e-12));
}

#[test]
fn j_ranges_match_enumeration() {
    let g = grid(flat(100.0, 5), flat(200.0, 5), one(), 0.1);
    let r = g.j_range(0).unwrap();
    assert_eq!(range_vec(r), (46..=52).collect::<Vec<_>>());
    assert_eq!(range_vec(r), j_oracle(100.0, 200.0, 0.1));

    let (a, b) = (5f64.exp(), 6f64.exp());
    let g = grid(flat(a, 5), flat(b, 5), one(), 0.5);
    assert_eq!(range_vec(g.j_range(0).unwrap()), vec![10, 11]);
    assert_eq!(j_oracle(a, b, 0.5), vec![10, 11]);

    // width δ: the open interval has length 2 and integer endpoints
    let b = 6f64.exp();
    let a = b * (-0.5f64).exp();
    let g = grid(flat(a, 5), flat(b, 5), one(), 0.5);
    let r = g.j_range(0).unwrap();
    assert_eq!(r.len(), 1, "{r:?}");
    assert_eq!(range_vec(r), j_oracle(a, b, 0.5));
}

#[test]
fn branch_examples() {
    let z = inverse_branch(Complex64::new(1.0, 0.0), 0, LogPolar { ln_mod: 10f64.ln(), arg: 0.0 }).unwrap();
    assert!(close(z.re, 10f64.ln(), 1e-15) && z.im == 0.0);
    assert!(close(z.exp().re, 10.0, 1e-14));

    let z = inverse_branch(Complex64::new(1.0, 0.0), 2, LogPolar { ln_mod: 10f64.ln(), arg: 0.0 }).unwrap();
    assert!(close(z.im, TAU, 1e-15));

    let lam = Complex64::new(0.0, 1.0);
    let w = lam * 3f64.exp();
    let z = inverse_branch(lam, 0, LogPolar::from(w)).unwrap();
    let direct = (w / lam).ln();
    assert!(close(z.re, direct.re, 1e-14) && z.im.abs() < 1e-15, "{z}");

    assert!(matches!(
        inverse_branch(lam, 0, LogPolar { ln_mod: f64::NEG_INFINITY, arg: 0.0 }),
        Err(CoverError::Domain(_))
    ));
    // lower half-plane point refused by an even branch
    assert!(inverse_branch(Complex64::new(1.0, 0.0), 0, LogPolar { ln_mod: 1.0, arg: -1.0 }).is_err());
}

#[test]
fn branch_roundtrip_randomized() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    for _ in 0..10_000 {
        let lam = Complex64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(-PI..PI));
        let k: i64 = rng.gen_range(-6..6);
        let off = rng.gen_range(0.0..PI);
        let arg = (k as f64 * PI + off + PI).rem_euclid(TAU) - PI;
        let w = LogPolar { ln_mod: rng.gen_range(-5.0..20.0), arg };
        let z = inverse_branch(lam, k, w).unwrap();
        let back = lam * z.exp();
        let target = Complex64::from_polar(w.ln_mod.exp(), w.arg);
        assert!((back - target).norm() <= 1e-12 * target.norm(), "λ={lam} k={k} w={w:?}");
        let lo = k as f64 * PI - lam.arg();
        assert!(lo - 1e-9 <= z.im && z.im <= lo + PI + 1e-9);

        // forward then back from inside H_k
        let z0 = Complex64::new(rng.gen_range(-5.0..20.0), lo + rng.gen_range(0.01..PI - 0.01));
        let w0 = LogPolar { ln_mod: lam.norm().ln() + z0.re, arg: (lam.arg() + z0.im + PI).rem_euclid(TAU) - PI };
        let z1 = inverse_branch(lam, k, w0).unwrap();
        assert!((z1 - z0).norm() <= 1e-12 * z0.norm().max(1.0), "{z1} vs {z0}");
    }
}

#[test]
fn grid_cells_tile_the_plane() {
    let delta = 0.1;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    for _ in 0..1000 {
        let (x, y): (f64, f64) = (rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
        let phi: f64 = rng.gen_range(-PI..PI);
        let j = (x / delta).floor() as i64;
        let k = ((y + phi) / PI).floor() as i64;
        let hits = (j - 1..=j + 1)
            .flat_map(|jj| (k - 1..=k + 1).map(move |kk| (jj, kk)))
            .filter(|&(jj, kk)| {
                let (x0, y0) = (jj as f64 * delta, kk as f64 * PI - phi);
                x0 <= x && x < x0 + delta && y0 <= y && y < y0 + PI
            })
            .count();
        assert_eq!(hits, 1);
    }
}

#[test]
fn strip_width_examples() {
    assert_eq!(strip_width(lr(-5.0), lr(3.0), lr(10.0)).unwrap().to_f64(), 8.0);
    assert_eq!(strip_width(lr(0.0), lr(100.0), lr(10.0)).unwrap().to_f64(), 10.0);

    let g = named("sixsmith-a", None);
    let r = g.j_range(1).unwrap();
    let j = (r.lo + r.hi) / 2;
    let w = g.strip_width_d(1, j).unwrap();
    assert!(close(w.d.to_f64(), 3f64.ln(), 1e-12), "{}", w.d);
    assert!(w.sandwich);
}

#[test]
fn cover_sum_matches_direct_formula() {
    let g = named("sixsmith-a", None);
    let n0 = g.params.n_start;
    let c4 = g.ledger.c4.value;
    for n in 0..6 {
        let sum: f64 = (0..=n).map(|m| g.band.a(n0 + m).unwrap().to_f64().ln()).sum();
        let delta = (g.band.b(n0 + n + 1).unwrap().to_f64() / g.band.a(n0 + n + 1).unwrap().to_f64()).ln();
        let want = n as f64 * c4.ln() + 0.2 * (delta.ln() - sum);
        let got = g.cover_sum_bound(1.2, n).unwrap();
        assert!(close(got.log_bound.to_f64(), want, 1e-10), "n={n}");
        assert_eq!(got.below_halving, want < -(n as f64) * LN_2);
    }
    assert!(g.cover_sum_bound(1.0, 1).is_err());
}

#[test]
fn cover_sum_sweeps() {
    let sw = named("sixsmith-a", None).cover_sweep(1.2, 15).unwrap();
    assert!(sw.strictly_decreasing);
    let n_star = sw.n_star.expect("n* reported");
    assert!(n_star <= 15);
    assert!(sw.rows.iter().filter(|r| r.n >= n_star).all(|r| r.below_halving));

    // exponent near 1: only the c₄ⁿ factor is left
    let g = named("sixsmith-a", None);
    let c4 = g.ledger.c4.value.ln();
    for r in g.cover_sweep(1.0 + 1e-12, 8).unwrap().rows {
        assert!((r.log_bound.to_f64() - r.n as f64 * c4).abs() < 1e-9);
    }

    let sw = named("mcmullen-band", None).cover_sweep(1.2, 15).unwrap();
    assert!(sw.rows.len() >= 2);
    assert!(sw.non_decreasing);
    assert_eq!(sw.n_star, None);
}

#[test]
fn word_bound_is_per_column_form() {
    let g = named("sixsmith-d", None);
    let js = [150, 160, 170];
    let got = g.cover_sum_word_bound(1.5, &js).unwrap().to_f64();
    let ln_delta = (g.band.ln_b(g.params.n_start + 4).unwrap().to_f64() - g.band.ln_a(g.params.n_start + 4).unwrap().to_f64()).ln();
    let want = 3.0 * g.ledger.c3.value.ln() + 0.5 * (ln_delta - 480.0 * g.params.delta);
    assert!(close(got, want, 1e-12));
}

/// `U ∩ S` membership in the rotated frame, as in the count geometry.
struct Shape {
    a: f64,
    b: f64,
    r_in: f64,
    r_out: f64,
    upper: bool,
}

impl Shape {
    fn inside(&self, x: f64, y: f64) -> bool {
        let r = x.hypot(y);
        self.a <= x && x <= self.b && self.r_in <= r && r < self.r_out && if self.upper { y >= 0.0 } else { y <= 0.0 }
    }
}

/// Cells meeting the shape and even cells inside it, by sampling each cell
/// on a `δ/32` lattice.
fn raster(shape: &Shape, delta: f64) -> (u64, u64) {
    let h = delta / 32.0;
    let (mut meet, mut inside) = (0, 0);
    let jlo = (shape.a / delta).floor() as i64 - 1;
    let jhi = (shape.b / delta).ceil() as i64 + 1;
    let klo = (-shape.r_out / PI).floor() as i64 - 1;
    let khi = (shape.r_out / PI).ceil() as i64 + 1;
    let ny = (PI / h).ceil() as usize;
    for j in jlo..=jhi {
        for k in klo..=khi {
            let (x0, y0) = (j as f64 * delta, k as f64 * PI);
            let mut any = false;
            let mut all = true;
            for ix in 0..=32 {
                for iy in 0..=ny {
                    let x = x0 + delta * ix as f64 / 32.0;
                    let y = y0 + PI * iy as f64 / ny as f64;
                    let v = shape.inside(x, y);
                    // cells are half-open, so the far edges only count for containment
                    if v && ix < 32 && iy < ny {
                        any = true;
                    }
                    all &= v;
                }
            }
            meet += any as u64;
            inside += (all && j.rem_euclid(2) == 0 && k.rem_euclid(2) == 0) as u64;
        }
    }
    (inside, meet)
}

#[test]
fn exact_count_matches_rasterization() {
    let delta = 0.1;
    let g = grid(flat(100.0, 5), flat(200.0, 5), one(), delta);
    let j = (150f64.ln() / delta).round() as i64;
    assert!(g.j_range(0).unwrap().contains(j));
    for k in [0, 1] {
        let c = g.count_branches(0, j, k, CountMode::Exact).unwrap();
        let shape = Shape {
            a: 100f64.ln(),
            b: 200f64.ln(),
            r_in: (j as f64 * delta).exp(),
            r_out: ((j + 1) as f64 * delta).exp(),
            upper: k == 0,
        };
        let (inside, meet) = raster(&shape, delta);
        assert_eq!(c.upper.to_f64() as u64, meet, "k={k}");
        assert_eq!(c.lower.to_f64() as u64, inside, "k={k}");
        assert!(meet > 0);
    }
}

#[test]
fn exact_count_matches_rasterization_wide_strip() {
    // strip wider than the annulus: both arcs cut the columns
    let delta = 0.1;
    let g = grid(flat(12.0, 5), flat(60.0, 5), one(), delta);
    let (a, b) = (12f64.ln(), 60f64.ln());
    let j = 19;
    for k in [0, 1] {
        let c = g.count_branches(0, j, k, CountMode::Exact).unwrap();
        let shape = Shape { a, b, r_in: (j as f64 * delta).exp(), r_out: ((j + 1) as f64 * delta).exp(), upper: k == 0 };
        let (inside, meet) = raster(&shape, delta);
        assert_eq!((c.lower.to_f64() as u64, c.upper.to_f64() as u64), (inside, meet), "k={k}");
    }
}

#[test]
fn disjoint_image_counts_zero() {
    let g = grid(explicit(&[100.0, 300f64.exp(), 1e300]), explicit(&[200.0, 400f64.exp(), 1e301]), one(), 0.1);
    let j = g.j_range(0).unwrap().lo;
    let c = g.count_branches(0, j, 0, CountMode::Exact).unwrap();
    assert!(c.lower.is_zero() && c.upper.is_zero());
    assert_eq!(g.relation(0, j, 0, 3000, 10).unwrap(), Relation::Disjoint);
}

#[test]
fn exact_counts_lie_in_the_brackets() {
    let mut grids: Vec<Grid> = ["sixsmith-a", "sixsmith-b", "sixsmith-c", "sixsmith-d"].iter().map(|n| named(n, None)).collect();
    grids.push({
        let band = Band::new(EscapeBandSpec {
            a: SequenceSpec::Geometric { c: 1.0, r: 2.0 },
            b: SequenceSpec::ScalarBand { base: None, c: 3.0 },
            lambda: LambdaSpec::SeededRandom { r_lo: 0.8, r_hi: 1.25, seed: 11 },
        })
        .unwrap();
        let gp = GridParams { n_start: 12, ..params(0.05) };
        Grid::new(band, gp).unwrap()
    });
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
    let mut checked = 0;
    let mut tries = 0;
    while checked < 60 {
        tries += 1;
        assert!(tries < 2000, "only {checked} cases ran within budget");
        let g = &grids[rng.gen_range(0..grids.len())];
        assert!(g.count_regime());
        let n = rng.gen_range(0..4);
        let r = g.j_range(n).unwrap();
        let j = rng.gen_range(r.lo..=r.hi);
        let k = rng.gen_range(-3..3);
        let exact = match g.count_branches(n, j, k, CountMode::Exact) {
            Ok(c) => c,
            Err(CoverError::Budget { .. }) => continue,
            Err(e) => panic!("{e}"),
        };
        let bound = g.count_bounds(n, j).unwrap();
        assert!(bound.lower <= exact.lower, "n={n} j={j} k={k}: {} < {}", exact.lower, bound.lower);
        assert!(exact.upper <= bound.upper, "n={n} j={j} k={k}: {} > {}", exact.upper, bound.upper);
        assert!(exact.lower >= LevelReal::ONE);
        checked += 1;
    }
}

#[test]
fn exact_mode_respects_the_budget() {
    let mut g = named("sixsmith-c", None);
    g.budget = 100;
    let r = g.j_range(2).unwrap();
    assert!(matches!(g.count_branches(2, r.hi, 0, CountMode::Exact), Err(CoverError::Budget { .. })));
    assert!(g.count_branches(2, r.hi, 0, CountMode::Bound).is_ok());
}

fn canonical_cylinder(g: &Grid, depth: usize) -> Cylinder {
    let w = g.canonical_word(depth).unwrap();
    let mut c = g.cylinder(w[0].j, w[0].k, Family::Upper).unwrap();
    for l in &w[1..] {
        c = g.cylinder_extend(&c, l.j, l.k).unwrap();
    }
    c
}

#[test]
fn cylinder_one_extension() {
    let g = named("sixsmith-a", None);
    let c = canonical_cylinder(&g, 1);
    let j0 = c.word[0].j;
    let want = (g.ledger.c.value * g.params.d0() * (-(j0 as f64) * g.params.delta).exp()).ln();
    assert!(close(c.ln_diam_upper, want, 1e-12));
    assert!(c.ln_diam_lower < c.ln_diam_upper);
}

#[test]
fn cylinder_masses_with_equal_j() {
    let delta = 0.1;
    let g = grid(flat(100.0, 6), flat(200.0, 6), one(), delta);
    let j = 50;
    let mut c = g.cylinder(j, 0, Family::Upper).unwrap();
    for _ in 0..2 {
        let n = c.depth();
        let rows = g.meeting_rows(n, j, c.word[n].k, j).unwrap();
        c = g.cylinder_extend(&c, j, rows.lo).unwrap();
    }
    let d = (200f64.ln()).min((5.1f64).exp()) - (100f64.ln()).max(-(5.1f64).exp());
    let want = -2.0 * (g.ledger.c1.value * d * (j as f64 * delta).exp()).ln();
    assert!(close(c.ln_mass_lower, want, 1e-12), "{} vs {want}", c.ln_mass_lower);
    let want_hi = -2.0 * (g.ledger.c1_lower.value * d * (j as f64 * delta).exp()).ln();
    assert!(close(c.ln_mass_upper, want_hi, 1e-12));
}

#[test]
fn depth_five_cylinder_contracts() {
    let g = named("sixsmith-a", None);
    let c = canonical_cylinder(&g, 5);
    let lc = g.ledger.c.value.ln();
    let product: f64 = g.params.d0().ln() + c.word[..5].iter().map(|l| lc - l.j as f64 * g.params.delta).sum::<f64>();
    assert!(close(c.ln_diam_upper, product, 1e-12));
    assert!(c.ln_diam_upper < g.params.d0().ln() - 5.0 * LN_2);
}

#[test]
fn illegal_extensions_are_named() {
    let g = named("sixsmith-a", None);
    let c = canonical_cylinder(&g, 0);
    let err = g.cylinder_extend(&c, c.word[0].j, 0).unwrap_err();
    assert!(matches!(err, CoverError::IllegalExtension(ref m) if m.contains("misses")), "{err}");

    let lower = g.cylinder(c.word[0].j, 0, Family::Lower).unwrap();
    let w = g.canonical_word(1).unwrap();
    let rows = g.meeting_rows(0, w[0].j, 0, w[1].j).unwrap();
    let odd = if rows.lo.rem_euclid(2) == 1 { rows.lo } else { rows.lo + 1 };
    assert!(g.cylinder_extend(&lower, w[1].j, odd).is_err());
    assert!(g.cylinder(-5, 0, Family::Upper).is_err());
}

#[test]
fn profile_thin_band_goes_to_zero() {
    let g = named("sixsmith-a", None);
    let mut c = canonical_cylinder(&g, 25);
    let p = g.local_dimension_profile(&mut c, 25).unwrap();
    assert!(p.rows.len() >= 20);
    assert!(p.psi.limsup().unwrap() < 0.02);
    assert!(p.phi.liminf().unwrap() < 0.02);
    let tail: Vec<f64> = p.rows[p.rows.len() - 5..].iter().map(|r| r.psi).collect();
    assert!(tail.windows(2).all(|w| w[1] < w[0]));
    assert!(p.gap_vanishes, "{:?}", p.gap.values);
    for r in &p.rows {
        assert!(r.inf_sampled <= r.sup_sampled);
        assert_eq!(c.profile[r.n - p.skipped], r.inf_sampled);
    }
}

#[test]
fn profile_full_band_goes_to_one() {
    let g = named("mcmullen-band", None);
    let word = vec![Letter { j: 100, k: 0 }; 7];
    for n in 0..7 {
        let (phi, psi) = g.phi_psi(&word, n).unwrap();
        assert_eq!(psi, 1.0);
        if n > 0 {
            assert_eq!(phi, 1.0);
        }
    }
}

#[test]
fn profile_tower_half() {
    let g = named("tower-d", Some(0.5));
    let mut c = canonical_cylinder(&g, g.float_depth(10));
    let p = g.local_dimension_profile(&mut c, 10).unwrap();
    let last = p.rows.last().unwrap();
    assert!((last.psi - 0.5).abs() < 1e-3, "{}", last.psi);
    assert!(last.phi < 1e-2);
}

/// `Φ_n`, `Ψ_n` straight from their sums.
#[test]
fn phi_psi_from_sums() {
    let g = named("sixsmith-d", None);
    let word = g.canonical_word(6).unwrap();
    let n0 = g.params.n_start;
    let x: Vec<f64> = word.iter().map(|l| l.j as f64 * g.params.delta).collect();
    let ld: Vec<f64> = (0..=6)
        .map(|m| (g.band.ln_b(n0 + m + 1).unwrap().to_f64() - g.band.ln_a(n0 + m + 1).unwrap().to_f64()).ln())
        .collect();
    let n = 6;
    let psi = (0..=n).map(|m| ld[m].min(x[m])).sum::<f64>() / x.iter().sum::<f64>();
    let phi = (0..n).map(|m| ld[m].min(x[m])).sum::<f64>() / ((0..n).map(|m| x[m]).sum::<f64>() + (x[n] - ld[n]).max(0.0));
    let (p, s) = g.phi_psi(&word, n).unwrap();
    assert!(close(p, phi, 1e-12) && close(s, psi, 1e-12));
}

/// Solves the bracket for `α` by scanning integers.
fn bracket(x: f64, delta: f64) -> i64 {
    (-10_000..10_000).find(|&i| ((i as f64) * delta).exp() < x && x <= ((i + 1) as f64 * delta).exp()).unwrap()
}

#[test]
fn regularize_examples() {
    let r = regularize(-1.0, 0.5, 0.1);
    assert_eq!(r.alpha, Some(-1));
    assert_eq!(bracket(1.0, 0.1), -1);
    assert!(close(r.a, -(0.05f64).exp(), 1e-15));

    let r = regularize(0.5, 1.0, 0.1);
    assert_eq!((r.a, r.alpha), (0.5, None));

    let b = 0.35f64.exp();
    let r = regularize(-1.0, b, 0.1);
    assert_eq!(r.beta, Some(3));
    assert_eq!(bracket(b, 0.1), 3);
    assert!(close(r.b, 0.45f64.exp(), 1e-15));
}

#[test]
fn regularize_sandwich_randomized() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(99);
    for _ in 0..1000 {
        let delta: f64 = rng.gen_range(0.01..1.0);
        let a: f64 = rng.gen_range(-1e4..1e3);
        let b = a + rng.gen_range(0.1..1e4);
        let r = regularize(a, b, delta);
        let g = (1.5 * delta).exp();
        if a < 0.0 {
            assert!(g * a <= r.a && r.a <= a, "a={a} δ={delta} → {}", r.a);
        } else {
            assert_eq!(r.a, a);
        }
        if b > 0.0 {
            assert!(b <= r.b && r.b <= g * b, "b={b} δ={delta} → {}", r.b);
        } else {
            assert_eq!(r.b, b);
        }
        assert!(r.sandwich_holds(a, b, delta));
    }
}

#[test]
fn regularized_band_strips() {
    let g = named("sixsmith-b", None);
    for (s, r) in g.regularize_band(5).unwrap() {
        assert!(r.sandwich_holds(s.a.to_f64(), s.b.to_f64(), g.params.delta));
    }
}

#[test]
fn pullback_one_step() {
    let band = Band::new(EscapeBandSpec { a: flat(40.0, 3), b: flat(60.0, 3), lambda: one() }).unwrap();
    let g = Grid::new(band, GridParams { delta_min: 0.4, ..params(0.05) }).unwrap();
    let p = pullback_point(&g, &[Letter { j: 0, k: 0 }], LogPolar { ln_mod: 50f64.ln(), arg: 0.0 }, 128).unwrap();
    assert!(close(p.z[0], 50f64.ln(), 1e-15) && p.z[1] == 0.0);
    let m = &p.margins[0];
    assert!(close(m.ln_modulus.exp().unwrap().to_f64(), 50.0, 1e-14));
    assert!(close(m.lower.to_f64(), 10.0, 1e-12) && close(m.upper.to_f64(), 10.0, 1e-12));
    assert!(close(m.ln_lower, (50f64 / 40.0).ln(), 1e-12));
    assert!(p.all_positive && p.verified_through == 1);
}

#[test]
fn pullback_real_orbit() {
    // w = e^{e^3}: z = 3, orbit = (e^3, w)
    let band = Band::new(EscapeBandSpec { a: explicit(&[15.0, 1e8, 1e9]), b: explicit(&[25.0, 1e9, 1e10]), lambda: one() })
        .unwrap();
    let g = Grid::new(band, GridParams { delta_min: 2.0, ..params(0.05) }).unwrap();
    let word = [Letter { j: 0, k: 0 }; 2];
    let p = pullback_point(&g, &word, LogPolar { ln_mod: 3f64.exp(), arg: 0.0 }, 128).unwrap();
    assert!(close(p.z[0], 3.0, 1e-15) && p.z[1] == 0.0);
    assert!(p.margins.iter().all(|m| m.arg == 0.0));
    assert!(close(p.margins[0].ln_modulus.to_f64(), 3.0, 1e-15));
    assert!(close(p.margins[1].ln_modulus.to_f64(), 3f64.exp(), 1e-15));
    assert!(p.all_positive && p.verified_through == 2);
}

#[test]
fn pullback_depth_five_matches_doubled_precision() {
    let g = named("sixsmith-a", None);
    let n0 = g.params.n_start;
    let (la, lb) = (g.band.ln_a(n0 + 4).unwrap().to_f64(), g.band.ln_b(n0 + 4).unwrap().to_f64());
    let w = LogPolar { ln_mod: 0.5 * (la + lb), arg: 0.3 };
    let word = fit_word(&g, w, 5).unwrap();
    let p = pullback_point(&g, &word, w, 256).unwrap();
    let q = pullback_point(&g, &word, w, 512).unwrap();
    assert!(p.all_positive && p.verified_through == 5, "{:?}", p.margins);
    assert!(p.plan >= 5);
    for (x, y) in p.margins.iter().zip(&q.margins) {
        assert!(close(x.lower.to_f64(), y.lower.to_f64(), 1e-9));
        assert!(close(x.upper.to_f64(), y.upper.to_f64(), 1e-9));
        assert!((x.ln_lower - y.ln_lower).abs() < 1e-9 && (x.ln_upper - y.ln_upper).abs() < 1e-9);
    }
    assert!(close(p.z[0], q.z[0], 1e-12) && close(p.z[1], q.z[1], 1e-12));
}

#[test]
fn pullback_precision_plan() {
    let g = named("tower-d", Some(0.5));
    // |orbit_2| ~ a_{N+1} = e^{34720} needs about 50000 bits
    assert!(plan_depth(&g, 256, 5) <= 2);
    assert!(plan_depth(&g, 1 << 16, 5) >= 2);
    assert!(pullback_point(&g, &[Letter { j: 0, k: 0 }], LogPolar { ln_mod: 1.0, arg: 0.0 }, 32).is_err());
}

#[test]
fn word_files() {
    let w = parse_word("# depth j k\n0 46 0\n1 47 3 # note\n\n2 48 -1\n").unwrap();
    assert_eq!(w, vec![Letter { j: 46, k: 0 }, Letter { j: 47, k: 3 }, Letter { j: 48, k: -1 }]);
    assert!(parse_word("0 1\n").is_err());
    assert!(parse_word("1 1 1\n").is_err());
    assert!(parse_word("0 x 1\n").is_err());
    assert!(parse_word("").is_err());
}

#[test]
fn ledger_defaults_and_overrides() {
    let g = named("sixsmith-a", None);
    let l = &g.ledger;
    let (d0, e, a) = (g.params.d0(), g.params.delta.exp(), l.a);
    let c = (e * (1.0 + 2.0 * d0 / a)).max(1.0 / (1.0 - 2.0 * d0 * e / a));
    assert!(close(l.c.value, c, 1e-15));
    assert_eq!(l.c.provenance, Provenance::Formula);
    assert_eq!(l.c1.provenance, Provenance::ImplementationChosen);
    assert!(l.q.value >= 2.0);
    let mut l2 = l.clone();
    l2.set("c1", 2.0).unwrap();
    assert_eq!(l2.c1.provenance, Provenance::UserSet);
    assert!(l2.set("c1", -1.0).is_err() || l2.validate().is_err());
    assert!(l2.set("nope", 1.0).is_err());
}

#[test]
fn grid_params_invariants() {
    let mut p = params(0.1);
    assert!(p.validate().is_ok());
    assert!(close(p.d0(), (PI * PI + 0.01f64).sqrt(), 1e-15));
    p.delta = 0.3;
    p.delta_min = 1.0;
    assert!(p.validate().is_err());
    let p = GridParams { q: 0.99, ..params(0.1) };
    assert!(p.validate().is_err());
}
