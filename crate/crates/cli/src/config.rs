use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qbound::gaussian::r_from_db;
use qbound::Weights;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Balanced,
    Example1,
    General,
}

/// Run parameters shared by `bound`, `region` and `simulate`.
///
/// Every field can also come from a JSON file given with `--config`; flags take precedence.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// JSON file with default values for any of these options.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Number of probe modes (1 or 2).
    #[arg(long)]
    pub modes: Option<usize>,
    /// Squeezing of a single-mode probe, or of both two-mode inputs.
    #[arg(long)]
    pub r: Option<f64>,
    /// Same as `--r`, in dB.
    #[arg(long)]
    pub db: Option<f64>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
    #[arg(long)]
    pub db1: Option<f64>,
    #[arg(long)]
    pub db2: Option<f64>,
    /// Squeezing angle of a single-mode probe.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi2: Option<f64>,
    /// Beam-splitter transmissivity.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub wx: Option<f64>,
    #[arg(long)]
    pub wy: Option<f64>,

    /// Use the optimal two-mode configuration for the given weights.
    #[arg(long)]
    pub auto_config: bool,
    /// Emit closed-form rows only.
    #[arg(long, conflicts_with = "both")]
    pub closed_form: bool,
    /// Emit closed-form and numeric rows.
    #[arg(long)]
    pub both: bool,

    /// Transmissivity grid size of the envelope sweep.
    #[arg(long)]
    pub n_t: Option<usize>,
    /// Squeezing-angle grid size of the envelope sweep.
    #[arg(long)]
    pub n_phi: Option<usize>,
    /// Number of weight ratios per probe.
    #[arg(long)]
    pub n_ratio: Option<usize>,
    /// Weight ratios span `[1/span, span]`.
    #[arg(long)]
    pub ratio_span: Option<f64>,
    /// Number of closed-form samples.
    #[arg(long)]
    pub points: Option<usize>,

    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// True displacement as `x,y`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Option<Vec<f64>>,

    /// Output file; written atomically. Standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn config_error(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

impl Params {
    /// Fill unset options from the `--config` file, if any.
    pub fn resolve(self) -> Result<Params, Failure> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = load(&path)?;
        let mut merged = serde_json::to_value(file).map_err(config_error)?;
        let flags = serde_json::to_value(&self).map_err(config_error)?;
        if let (Value::Object(base), Value::Object(over)) = (&mut merged, flags) {
            for (k, v) in over {
                if !(v.is_null() || v == Value::Bool(false)) {
                    base.insert(k, v);
                }
            }
        }
        let mut out: Params = serde_json::from_value(merged).map_err(config_error)?;
        out.config = Some(path);
        Ok(out)
    }

    pub fn modes(&self) -> Result<usize, Failure> {
        let inferred =
            if self.r1.is_some() || self.r2.is_some() || self.db1.is_some() || self.db2.is_some() {
                2
            } else {
                1
            };
        match self.modes.unwrap_or(inferred) {
            n @ (1 | 2) => Ok(n),
            n => Err(Failure::Config(format!("--modes must be 1 or 2, got {n}"))),
        }
    }

    /// Single-mode squeezing, or the common squeezing of both two-mode inputs.
    pub fn squeezing(&self) -> Result<Option<f64>, Failure> {
        either(self.r, self.db, "r", "db")
    }

    /// `(r1, r2)`, falling back to `--r/--db` for both.
    pub fn squeezing_pair(&self) -> Result<(f64, f64), Failure> {
        let common = self.squeezing()?;
        let r1 = either(self.r1, self.db1, "r1", "db1")?.or(common);
        let r2 = either(self.r2, self.db2, "r2", "db2")?.or(common);
        match (r1, r2) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Failure::Config(
                "two-mode runs need r1 and r2 (or --r/--db for both)".into(),
            )),
        }
    }

    /// `r2` alone, falling back to `--r/--db`.
    pub fn second_squeezing(&self) -> Result<Option<f64>, Failure> {
        let common = self.squeezing()?;
        Ok(either(self.r2, self.db2, "r2", "db2")?.or(common))
    }

    pub fn weights(&self) -> Result<Weights, Failure> {
        Ok(Weights::new(
            self.wx.unwrap_or(1.0),
            self.wy.unwrap_or(1.0),
        )?)
    }

    pub fn phi1(&self) -> f64 {
        self.phi1.unwrap_or(0.0)
    }

    pub fn phi2(&self) -> f64 {
        self.phi2.unwrap_or(FRAC_PI_2)
    }

    pub fn theta(&self) -> Result<(f64, f64), Failure> {
        match self.theta.as_deref() {
            None => Ok((0.0, 0.0)),
            Some(&[x, y]) => Ok((x, y)),
            Some(v) => Err(Failure::Config(format!(
                "--theta needs two values, got {}",
                v.len()
            ))),
        }
    }
}

fn either(
    r: Option<f64>,
    db: Option<f64>,
    r_name: &str,
    db_name: &str,
) -> Result<Option<f64>, Failure> {
    match (r, db) {
        (Some(_), Some(_)) => Err(Failure::Config(format!(
            "give either --{r_name} or --{db_name}, not both"
        ))),
        (Some(r), None) => Ok(Some(r)),
        (None, Some(db)) => Ok(Some(r_from_db(db))),
        (None, None) => Ok(None),
    }
}

fn load(path: &Path) -> Result<Params, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}
