use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "nibm", version, about = "Spectral curve, density, kernel and path sampling for two groups of non-intersecting Brownian motions")]
pub struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Output directory [default: nibm-out; for rerun, "rerun" next to the manifest].
    #[arg(long, global = true, env = "NIBM_OUT_DIR")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Branch points, regime and sheet values along segments.
    Curve(CurveArgs),
    /// Limiting density, support, edge constants and h.
    Density(DensityArgs),
    /// Finite-n kernel checks and scaling limits.
    Kernel(KernelArgs),
    /// Sample path bundles.
    Simulate(SimulateArgs),
    /// Regime sweep in t and the Re lambda_3 = Re lambda_4 level set.
    Phase(PhaseArgs),
    /// Re-run a manifest and compare output digests.
    Rerun(RerunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Curve(_) => "curve",
            Command::Density(_) => "density",
            Command::Kernel(_) => "kernel",
            Command::Simulate(_) => "simulate",
            Command::Phase(_) => "phase",
            Command::Rerun(_) => "rerun",
        }
    }
}

/// Segment "x0,y0,x1,y1" in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentArg(pub [f64; 4]);

impl FromStr for SegmentArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<_, _>>()?;
        match v[..] {
            [a, b, c, d] => Ok(SegmentArg([a, b, c, d])),
            _ => Err(format!("expected x0,y0,x1,y1, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CurveArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub t: f64,
    /// Samples per segment.
    #[arg(long, default_value_t = 201)]
    pub grid: usize,
    /// Segment x0,y0,x1,y1; repeatable. Default: [-2 z1, 2 z1] shifted up by 0.05i.
    #[arg(long = "segment", allow_hyphen_values = true)]
    pub segments: Vec<SegmentArg>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DensityArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub t: f64,
    /// Clenshaw-Curtis nodes per support interval.
    #[arg(long, default_value_t = 2048)]
    pub nodes: usize,
    /// Fit the square-root behavior at every real edge.
    #[arg(long)]
    pub check_edges: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    Bulk,
    Edge,
    Diag,
    Check,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeArg {
    Z1,
    Z2,
    MinusZ1,
    MinusZ2,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct KernelArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub t: f64,
    /// Path count for diag and check (default 64 and 8).
    #[arg(long)]
    pub n: Option<usize>,
    /// Working precision in bits; by default it grows until the factorization is accepted.
    #[arg(long)]
    pub precision: Option<u32>,
    #[arg(long, value_enum, default_value = "check")]
    pub mode: KernelMode,
    /// Bulk point; default (z1 + z2)/2 with two cuts, z1/2 with one.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    #[arg(long, value_enum, default_value = "z1")]
    pub edge: EdgeArg,
    #[arg(long, value_delimiter = ',', default_value = "16,32,64")]
    pub n_list: Vec<usize>,
    /// Diagonal points per support interval.
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    /// Distance kept from the support edges in diag mode.
    #[arg(long, default_value_t = 0.1)]
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    Auto,
    WholePath,
    Sequential,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    /// Time of the marginal histogram.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "auto")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = 60)]
    pub bins: usize,
    /// Skip the path CSV and keep only the histogram time.
    #[arg(long)]
    pub no_paths: bool,
    /// KS distance of the marginal from (1/n) K_n(x, x); needs --t and ab != 1/2.
    #[arg(long)]
    pub compare_kernel: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PhaseArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    /// Interior points of the uniform t sweep.
    #[arg(long, default_value_t = 199)]
    pub t_grid: usize,
    /// Time of the level-set grid.
    #[arg(long, default_value_t = 0.05)]
    pub level_t: f64,
    /// Points per axis of the level-set grid.
    #[arg(long, default_value_t = 41)]
    pub level_grid: usize,
    /// Half-width of the level-set grid; default 1.5 z1.
    #[arg(long)]
    pub level_extent: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RerunArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
}
