//! Flag records and `--config` merging.
//!
//! Every command flag is optional at parse time so that a config file can
//! supply it. Explicit flags win; keys in the file fill the rest.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::table::Format;
use crate::CliError;

#[derive(Parser, Debug)]
#[command(name = "hspredict", version, about = "Horseshoe predictive inference for sparse normal means")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Univariate KL risk ρ(θ) at fixed τ on a uniform θ grid.
    RiskCurve(RiskCurveArgs),
    /// Worst-case risk against the minimax rate over sparsity schemes.
    MaxRisk(MaxRiskArgs),
    /// Posterior density of τ for an observed vector.
    TauPosterior(TauPosteriorArgs),
    /// Monte Carlo predictive risk of the adaptive or calibrated predictive for a simulation design.
    SimulateRisk(SimulateRiskArgs),
    /// Draw predictive samples for an observed vector.
    Predict(PredictArgs),
    /// Pairwise verification of a corpus: score matrix, clusters, ROC.
    Verify(VerifyArgs),
    /// Per-pair rank-sum tests between two groups with BY adjustment.
    SymmetryTest(SymmetryTestArgs),
    /// Daubechies-4 coarse coefficient vectors of PGM images.
    Dwt(DwtArgs),
    /// Functional principal component scores of a curve panel.
    Fpca(FpcaArgs),
}

/// Output options shared by every command.
#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct Common {
    /// JSON file of flag values; explicit flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output file (directory for verify). Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct RiskCurveArgs {
    #[arg(long)]
    pub tau: Option<f64>,
    /// Future-to-present variance ratio.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub theta_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct MaxRiskArgs {
    /// Comma-separated dimensions.
    #[arg(long)]
    pub n: Option<String>,
    /// Fixed sparsity; replaces the scheme sweep.
    #[arg(long)]
    pub s_n: Option<usize>,
    /// Restrict the sweep to one scheme (1 to 6).
    #[arg(long)]
    pub scheme: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct TauPosteriorArgs {
    /// CSV with one observation vector (header row, single data row).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `exp`, `exp:<rate>` or `fixed:<tau>`.
    #[arg(long)]
    pub hyperprior: Option<String>,
    /// Grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Sparsity used for the τ_{n,0} and τ_{n,1/2} marker rows.
    #[arg(long)]
    pub s_n: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct SimulateRiskArgs {
    /// `setup1`, `setup2` or `strong-weak`.
    #[arg(long)]
    pub setup: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub s_strong: Option<usize>,
    /// Strong signal multiplier (strong-weak only).
    #[arg(long)]
    pub c: Option<f64>,
    /// `exp`, `exp:<rate>`, `fixed:<tau>` or `calibrated:<alpha>`.
    #[arg(long)]
    pub hyperprior: Option<String>,
    #[arg(long)]
    pub b: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct PredictArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `adaptive`, `fixed:<tau>` or `gaussian`.
    #[arg(long)]
    pub mode: Option<String>,
    /// Hyperprior for adaptive mode.
    #[arg(long)]
    pub hyperprior: Option<String>,
    /// Number of draws.
    #[arg(long = "draws")]
    pub draws: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct VerifyArgs {
    /// CSV with columns id,label,y0,y1,...; label may be empty.
    #[arg(long)]
    pub items: Option<PathBuf>,
    /// Directory of `<id>.csv` sample files; sampled internally when absent.
    #[arg(long)]
    pub pred_dir: Option<PathBuf>,
    /// Sampling mode when no pred-dir is given.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub hyperprior: Option<String>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub r: Option<f64>,
    /// `energy`, `rank` or `coverage`.
    #[arg(long)]
    pub score: Option<String>,
    /// `oracle`, `heldout:<fraction>`, `clusters:<k>`, `valley` or `value:<cutoff>`.
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct SymmetryTestArgs {
    /// Group A scores: header of pair ids, one row per subject.
    #[arg(long)]
    pub group_a: Option<PathBuf>,
    #[arg(long)]
    pub group_b: Option<PathBuf>,
    /// Only `by` is supported.
    #[arg(long)]
    pub correction: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct DwtArgs {
    /// PGM images (square, power-of-two side).
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Decomposition depth; defaults to the full depth log2(side).
    #[arg(long)]
    pub levels: Option<usize>,
    /// Finest level kept, counted from the coarsest block.
    #[arg(long)]
    pub j_max: Option<usize>,
    /// Known standardization divisor; fitted on the inputs when absent.
    #[arg(long)]
    pub divisor: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Debug, Clone, Default)]
#[serde(default)]
pub struct FpcaArgs {
    /// Headerless CSV: grid row, then one curve per row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Optional file for eigenvalues and eigenfunctions.
    #[arg(long)]
    pub basis_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn unset(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::Array(a) => a.is_empty(),
        _ => false,
    }
}

/// Fill unset fields of `args` from the JSON object at `path`.
pub fn merge_config<T: Serialize + DeserializeOwned>(args: T, path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let file: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let Value::Object(file) = file else {
        return Err(CliError::Config(format!("{}: expected a JSON object", path.display())));
    };
    let mut current = serde_json::to_value(&args).map_err(|e| CliError::Config(e.to_string()))?;
    let fields = current.as_object_mut().expect("flag records serialize to objects");
    for (key, value) in file {
        let key = key.replace('-', "_");
        match fields.get_mut(&key) {
            Some(slot) if unset(slot) => *slot = value,
            Some(_) => {}
            None => return Err(CliError::Config(format!("{}: unknown key `{key}`", path.display()))),
        }
    }
    serde_json::from_value(current).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
