//! Band and itinerary sources: files or named presets.

use std::path::PathBuf;

use clap::Args;
use escape_dim::annular::{itinerary_band, ItineraryFile};
use escape_dim::presets::{preset, PresetArgs, Subject};
use escape_dim::sequences::{AssumptionParams, BandFile};
use escape_dim::EscapeBandSpec;
use serde::Serialize;

use crate::Failure;

pub const HORIZON_ENV: &str = "ESCDIM_HORIZON";

#[derive(Args, Debug, Clone)]
pub struct Source {
    /// TOML band file (`analyze`, `cover`) or itinerary file (`annular`).
    pub file: Option<PathBuf>,
    /// Named preset instead of a file.
    #[arg(long, conflicts_with = "file")]
    pub preset: Option<String>,
    /// Preset parameter `d`.
    #[arg(long, requires = "preset", allow_negative_numbers = true)]
    pub d: Option<f64>,
    /// Preset parameter `κ`.
    #[arg(long, requires = "preset")]
    pub kappa: Option<f64>,
    /// Last index evaluated; overrides the file or preset value.
    #[arg(long, env = HORIZON_ENV)]
    pub horizon: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Band,
    Itinerary,
}

/// What was asked for, echoed into every report.
#[derive(Clone, Debug, Serialize)]
pub struct Echo {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub subject: Subject,
}

pub struct Input {
    pub echo: Echo,
}

impl Input {
    pub fn subject(&self) -> &Subject {
        &self.echo.subject
    }

    pub fn params(&self) -> &AssumptionParams {
        match self.subject() {
            Subject::Band { params, .. } | Subject::Itinerary { params, .. } => params,
        }
    }

    /// The band itself, or the band an itinerary induces.
    pub fn band_spec(&self) -> EscapeBandSpec {
        match self.subject() {
            Subject::Band { band, .. } => band.clone(),
            Subject::Itinerary { itinerary, lambda, .. } => itinerary_band(itinerary, lambda),
        }
    }
}

fn spec_error(path: &std::path::Path, e: impl std::fmt::Display) -> Failure {
    Failure::spec(format!("{}: {e}", path.display()))
}

impl Source {
    pub fn load(&self, file_kind: Kind) -> Result<Input, Failure> {
        let mut input = match (&self.file, &self.preset) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path).map_err(|e| spec_error(path, e))?;
                let subject = match file_kind {
                    Kind::Band => {
                        let f = BandFile::parse(&text).map_err(|e| spec_error(path, e))?;
                        Subject::Band { band: f.band_spec(), params: f.params }
                    }
                    Kind::Itinerary => {
                        let f = ItineraryFile::parse(&text).map_err(|e| spec_error(path, e))?;
                        let itinerary = f.spec().map_err(|e| spec_error(path, format!("[itinerary]: {e}")))?;
                        Subject::Itinerary { itinerary, lambda: f.lambda, params: f.params }
                    }
                };
                Input { echo: Echo { preset: None, file: Some(path.display().to_string()), note: None, subject } }
            }
            (None, Some(name)) => {
                let p = preset(name, PresetArgs { d: self.d, kappa: self.kappa }).map_err(Failure::spec)?;
                Input { echo: Echo { preset: Some(p.name), file: None, note: Some(p.note), subject: p.subject } }
            }
            _ => return Err(Failure::spec("give a file or --preset")),
        };
        if let Some(h) = self.horizon {
            match &mut input.echo.subject {
                Subject::Band { params, .. } | Subject::Itinerary { params, .. } => params.horizon = h,
            }
        }
        Ok(input)
    }
}
