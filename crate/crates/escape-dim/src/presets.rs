//! Named bands and itineraries with the report fragment each must produce.

use serde::{Deserialize, Serialize};

use crate::annular::{annular_example, power_annular_dims, stretched_annular_dims, ItinerarySpec, SRule, Scheme};
use crate::dimension::{analyze, DimError, DimensionReport, Tag};
use crate::levelnum::LevelReal;
use crate::sequences::{AssumptionParams, Band, EscapeBandSpec, LambdaSpec, SequenceSpec, Trim};

/// Expected report fragment; `None` fields are not checked.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hausdorff: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packing: Option<[f64; 2]>,
    /// Both lower endpoints at least this large.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_lower: Option<f64>,
    /// Packing lower endpoint at least this large.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packing_at_least: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<Tag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packing_estimate: Option<f64>,
    pub tol: f64,
    /// Where the expected values come from.
    pub provenance: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Subject {
    Band { band: EscapeBandSpec, params: AssumptionParams },
    Itinerary { itinerary: ItinerarySpec, lambda: LambdaSpec, params: AssumptionParams },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub note: String,
    pub subject: Subject,
    pub expected: Expected,
}

/// Optional preset parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PresetArgs {
    pub d: Option<f64>,
    pub kappa: Option<f64>,
}

pub const NAMES: [&str; 9] = [
    "sixsmith-a",
    "sixsmith-b",
    "sixsmith-c",
    "sixsmith-d",
    "tower-d",
    "tower-var",
    "mcmullen-band",
    "annular-power",
    "annular-stretched-d",
];

fn lr(x: f64) -> LevelReal {
    LevelReal::from_f64(x).expect("finite preset constant")
}

fn band(a: SequenceSpec, b: SequenceSpec) -> EscapeBandSpec {
    EscapeBandSpec { a, b, lambda: LambdaSpec::default() }
}

fn point(v: f64) -> Option<[f64; 2]> {
    Some([v, v])
}

pub fn preset(name: &str, args: PresetArgs) -> Result<Preset, String> {
    let base = AssumptionParams::default();
    let e = std::f64::consts::E;
    let ones = |provenance: &str, tag: Tag, packing: bool| Expected {
        hausdorff: point(1.0),
        packing: packing.then_some([1.0, 1.0]),
        tag: Some(tag),
        tol: 1e-9,
        provenance: provenance.into(),
        ..Default::default()
    };
    let band_preset = |note: &str, band: EscapeBandSpec, params: AssumptionParams, expected: Expected| Preset {
        name: name.into(),
        note: note.into(),
        subject: Subject::Band { band, params },
        expected,
    };
    Ok(match name {
        "sixsmith-a" => band_preset(
            "a_n = 2^n, b_n = 3·2^n",
            band(SequenceSpec::Geometric { c: 1.0, r: 2.0 }, SequenceSpec::Geometric { c: 3.0, r: 2.0 }),
            AssumptionParams { q: 0.9, delta_min: 0.5, a_threshold: 1.5, ..base },
            ones("published result: geometric band, dim_H = 1", Tag::A, true),
        ),
        "sixsmith-b" => band_preset(
            "a_n = n^{log⁺ n}, b_n = 2^n",
            band(SequenceSpec::LogPoly { p: 1 }, SequenceSpec::Geometric { c: 1.0, r: 2.0 }),
            AssumptionParams { a_threshold: 10.0, trim: Trim::Auto, ..base },
            ones("published result: polynomial-log band, dim_H = 1", Tag::B, false),
        ),
        "sixsmith-c" => band_preset(
            "a_n = e^{n log⁺ n}, b_n = e^{e^n}",
            band(SequenceSpec::ExpLogPoly { p: 1 }, SequenceSpec::DoubleExp { p: 1.0 }),
            AssumptionParams { a_threshold: 10.0, trim: Trim::Auto, ..base },
            ones("published result: double-exponential band, dim_H = 1", Tag::B, false),
        ),
        "sixsmith-d" => band_preset(
            "a_n = e^n, b_n = e^4 a_n",
            band(SequenceSpec::Geometric { c: 1.0, r: e }, SequenceSpec::ScalarBand { base: None, c: 4f64.exp() }),
            AssumptionParams { a_threshold: 10.0, trim: Trim::Auto, ..base },
            ones("published result: slowly growing band b_n = R a_n, dim_H = 1", Tag::A, false),
        ),
        "tower-d" => {
            let d = args.d.unwrap_or(0.5);
            if !(0.0..=1.0).contains(&d) {
                return Err("tower-d needs d in [0, 1]".into());
            }
            band_preset(
                "a_{n+1} = e^{n a_n^d}, b_n = a_n^{1+1/n}",
                band(SequenceSpec::Tower { d, a1: lr(20.0) }, SequenceSpec::PowerBand { base: None }),
                AssumptionParams { horizon: 25, trim: Trim::Auto, ..base },
                Expected {
                    hausdorff: point(1.0),
                    packing_estimate: Some(1.0 + d),
                    tol: 1e-3,
                    provenance: "published result: thin tower band, dim_P = 1 + d".into(),
                    ..Default::default()
                },
            )
        }
        "tower-var" => band_preset(
            "a_{n+1} = e^{n a_n^{(n-1)/n}}, b_n = a_n^{1+1/n}",
            band(SequenceSpec::TowerVar { a1: lr(20.0) }, SequenceSpec::PowerBand { base: None }),
            AssumptionParams { horizon: 25, trim: Trim::Auto, ..base },
            Expected {
                hausdorff: point(1.0),
                packing_at_least: Some(1.75),
                tol: 1e-9,
                provenance: "published result: thin tower band with varying exponent, dim_P = 2 (finite-horizon value 1 + (n-1)/n)".into(),
                ..Default::default()
            },
        ),
        "mcmullen-band" => band_preset(
            "a_n = n + 20, log b_{n+1} = b_n^2, log b_1 = 3",
            band(SequenceSpec::Affine { slope: 1.0, offset: 20.0 }, SequenceSpec::LogSquareTower { l1: 3.0 }),
            AssumptionParams { horizon: 25, a_threshold: 20.0, trim: Trim::Auto, ..base },
            Expected {
                min_lower: Some(1.95),
                tag: Some(Tag::D),
                tol: 0.05,
                provenance: "derived: log Δ_{n+1} / log b_n → ∞".into(),
                ..Default::default()
            },
        ),
        "annular-power" => Preset {
            name: name.into(),
            note: "s_n = n + 1, R_s = e^{4s}".into(),
            subject: Subject::Itinerary {
                itinerary: ItinerarySpec {
                    s: SRule::Linear { slope: 1.0, offset: 1.0 },
                    scheme: Scheme::Power { r: 4f64.exp() },
                },
                lambda: LambdaSpec::default(),
                params: AssumptionParams { horizon: 40, ..base },
            },
            expected: Expected {
                hausdorff: point(1.0),
                packing: point(1.0),
                tol: 1e-9,
                provenance: "published result: power-scheme itineraries with s_n → ∞ have both dimensions 1".into(),
                ..Default::default()
            },
        },
        "annular-stretched-d" => {
            let d = args.d.unwrap_or(0.3);
            let kappa = args.kappa.unwrap_or(2.0);
            Preset {
                name: name.into(),
                note: "s_{n+1} = R^{(d/(κ-1)) s_n^κ}, R_s = e^{s^κ}".into(),
                subject: Subject::Itinerary {
                    itinerary: ItinerarySpec {
                        s: SRule::Example { d, s1: 2.0 },
                        scheme: Scheme::Stretched { r: e, kappa },
                    },
                    lambda: LambdaSpec::default(),
                    params: AssumptionParams { horizon: 8, ..base },
                },
                expected: Expected {
                    hausdorff: point(1.0),
                    packing_estimate: Some(1.0 + d),
                    tol: 1e-3,
                    provenance: "published result: stretched-annulus itinerary, dim_P = 1 + d".into(),
                    ..Default::default()
                },
            }
        }
        other => return Err(format!("unknown preset {other:?}; known: {}", NAMES.join(", "))),
    })
}

impl Subject {
    /// Runs the analysis matching the subject.
    pub fn run(&self) -> Result<DimensionReport, DimError> {
        match self {
            Subject::Band { band, params } => analyze(&Band::new(band.clone())?, params),
            Subject::Itinerary { itinerary, lambda, params } => match (&itinerary.s, itinerary.scheme) {
                (SRule::Example { d, s1 }, Scheme::Stretched { r, kappa }) if *s1 == crate::annular::EXAMPLE_S1 => {
                    annular_example(*d, kappa, r, lambda, params)
                }
                (_, Scheme::Power { .. }) => power_annular_dims(itinerary, lambda, params),
                (_, Scheme::Stretched { .. }) => stretched_annular_dims(itinerary, lambda, params),
            },
        }
    }
}

impl Expected {
    /// Compares a report against the fragment; returns every mismatch.
    pub fn check(&self, r: &DimensionReport) -> Result<(), Vec<String>> {
        let mut bad = Vec::new();
        let close = |x: f64, y: f64| (x - y).abs() <= self.tol;
        for (name, want, got) in [("hausdorff", self.hausdorff, &r.hausdorff), ("packing", self.packing, &r.packing)] {
            if let Some([lo, hi]) = want {
                if !(close(got.lo.value, lo) && close(got.hi.value, hi)) {
                    bad.push(format!("{name}: want [{lo}, {hi}], got [{}, {}]", got.lo.value, got.hi.value));
                }
            }
        }
        if let Some(m) = self.min_lower {
            if r.hausdorff.lo.value < m || r.packing.lo.value < m {
                bad.push(format!("lower endpoints below {m}: {} / {}", r.hausdorff.lo.value, r.packing.lo.value));
            }
        }
        if let Some(m) = self.packing_at_least {
            if r.packing.lo.value < m {
                bad.push(format!("packing lower endpoint {} below {m}", r.packing.lo.value));
            }
        }
        if self.tag.is_some() && r.tag != self.tag {
            bad.push(format!("tag: want {:?}, got {:?}", self.tag, r.tag));
        }
        if let Some(e) = self.packing_estimate {
            match &r.packing_estimate {
                Some(got) if close(got.value, e) => {}
                got => bad.push(format!("packing estimate: want {e}, got {:?}", got.as_ref().map(|g| g.value))),
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(bad)
        }
    }
}
