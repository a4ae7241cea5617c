//! Experiment settings: command-line flags, config files and run records.
//!
//! Precedence is flags, then the config file, then per-command defaults.
//! A run record stores the fully resolved settings, so feeding it back as a
//! config file repeats the run exactly.

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const RECORD_FORMAT: &str = "hpv-record/1";

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Intensity of the Poisson process.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Several intensities, comma separated (degree, pc-sweep).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Probability that a point is black.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Colour probability as a multiple of (π/3)λ; ignored when --p is set.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_factor: Option<f64>,
    /// Radius of the sampled ball.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<f64>,
    /// Master seed; every random stream is derived from it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte Carlo trials (per intensity, per probe or per term).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Exploration runs for the survival statistics.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    /// Node budget of one exploration run.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_nodes: Option<usize>,
    /// Slack of the tuned exploration recipe.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Length slack of the exploration offspring region.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    /// Pseudo-edges of length at most r - w1 are short.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w1: Option<f64>,
    /// Pseudo-edges of length at least r + w2 are long.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w2: Option<f64>,
    /// Sector half-angle (exploration) or turning angle (pseudopaths), in radians.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Radius of the ball around the parent that non-root nodes ignore.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Longest pseudopath length counted.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Bisection tolerance for p_c.
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Crossing radius for percolate (default 2r).
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_target: Option<f64>,
    /// Error terms to estimate, comma separated (I..VI).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kinds: Option<Vec<String>>,
    /// Image width in pixels.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pixels: Option<u32>,
    /// disk or halfplane.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Highlight the cell of the origin.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub highlight: Option<bool>,
    /// png, svg or both.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Settings {
    /// Fills every unset field from `lower`.
    pub fn or(mut self, lower: &Settings) -> Settings {
        overlay!(self, lower; lambda, lambdas, p, p_factor, window_radius, seed, trials, runs,
            max_nodes, eps, w, w1, w2, theta, h, k, tol, r_target, kinds, pixels, model,
            highlight, format);
        self
    }
}

/// A run record: the command and its resolved settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub format: String,
    pub tool_version: String,
    pub command: String,
    pub settings: Settings,
    /// Output file names, relative to the record.
    pub outputs: Vec<String>,
}

/// Reads settings from a TOML or JSON file, or from a run record. A record
/// made by another command is refused when `command` is given.
pub fn load(path: &Path, command: Option<&str>) -> Result<(Option<String>, Settings)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    if is_json {
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if value.get("settings").is_some() {
            let rec: Record = serde_json::from_value(value).context("malformed run record")?;
            if rec.format != RECORD_FORMAT {
                bail!("unsupported record format {:?}", rec.format);
            }
            if let Some(c) = command {
                if c != rec.command {
                    bail!("record was made by `{}`, not `{c}`", rec.command);
                }
            }
            return Ok((Some(rec.command), rec.settings));
        }
        let s =
            serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?;
        return Ok((None, s));
    }
    let s = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((None, s))
}
