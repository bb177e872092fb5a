use std::path::{Path, PathBuf};

use nibm::curve::{branch_points, Side, SpectralCurve};
use nibm::density::{density_point, density_profile, edge_fit, Edge, GridSpec};
use nibm::kernel::{bulk_points, bulk_scaling_check, edge_scaling_check, BiorthogonalSystem, EdgeId, ScalingGrid, ScalingReport};
use nibm::simulate::{
    kernel_marginal_cdf, ks_critical, ks_statistic, marginal_histogram, marginal_ks_bound, polylines, sample_with, Endpoints,
    SampleOptions, Strategy,
};
use nibm::{Error, ModelParams, Regime, Tolerances, C64};
use rayon::prelude::*;
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, Result};
use crate::output::{digest_file, num, OutDir, RunManifest};

pub const DEFAULT_OUT_DIR: &str = "nibm-out";

/// Runs one command into `out` and writes its manifest.
pub fn execute(command: &Command, out: &Path) -> Result<(PathBuf, RunManifest)> {
    let mut dir = OutDir::create(out)?;
    let seed = match command {
        Command::Curve(a) => curve(a, &mut dir).map(|_| None),
        Command::Density(a) => density(a, &mut dir).map(|_| None),
        Command::Kernel(a) => kernel(a, &mut dir).map(|_| None),
        Command::Simulate(a) => simulate(a, &mut dir).map(|_| Some(a.seed)),
        Command::Phase(a) => phase(a, &mut dir).map(|_| None),
        Command::Rerun(_) => return Err(CliError::Usage("rerun cannot be nested".into())),
    }?;
    dir.finish(command, seed)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct FileCheck {
    pub file: String,
    pub expected: String,
    pub actual: Option<String>,
    pub identical: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RerunReport {
    pub manifest: String,
    pub out: String,
    pub identical: bool,
    pub files: Vec<FileCheck>,
}

/// Replays a manifest into `out` (default: `rerun` beside the manifest) and
/// compares every output digest.
pub fn rerun(manifest_path: &Path, out: Option<&Path>) -> Result<RerunReport> {
    let manifest = RunManifest::read(manifest_path)?;
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => manifest_path.parent().unwrap_or(Path::new(".")).join("rerun"),
    };
    let (_, fresh) = execute(&manifest.command, &out)?;
    let mut files = vec![];
    for f in &manifest.outputs {
        let actual = fresh.outputs.iter().find(|g| g.file == f.file).map(|_| digest_file(&out.join(&f.file))).transpose()?;
        files.push(FileCheck { file: f.file.clone(), identical: actual.as_deref() == Some(f.sha256.as_str()), expected: f.sha256.clone(), actual });
    }
    let same_set = fresh.outputs.len() == manifest.outputs.len();
    Ok(RerunReport {
        manifest: manifest_path.display().to_string(),
        out: out.display().to_string(),
        identical: same_set && files.iter().all(|f| f.identical),
        files,
    })
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::TwoCuts => "TwoCuts",
        Regime::OneCut => "OneCut",
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

// ------------------------------------------------------------------ curve

fn curve(args: &CurveArgs, out: &mut OutDir) -> Result<()> {
    let params = ModelParams::new(args.a, args.b, args.t)?;
    let c = SpectralCurve::new(params)?;
    let bp = &c.branch;
    let (real, imag) = bp.counts();
    if args.grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    let segments = if args.segments.is_empty() {
        vec![SegmentArg([-2.0 * bp.z1, 0.05, 2.0 * bp.z1, 0.05])]
    } else {
        args.segments.clone()
    };
    let mut rows = vec![];
    let mut on_cut = vec![];
    for (s, seg) in segments.iter().enumerate() {
        let [x0, y0, x1, y1] = seg.0;
        for k in 0..args.grid {
            let u = k as f64 / (args.grid - 1) as f64;
            let z = C64::new(x0 + u * (x1 - x0), y0 + u * (y1 - y0));
            // Real points are read from above.
            let side = if z.im == 0.0 { Some(Side::Above) } else { None };
            let f = match c.frame(z, side) {
                Ok(f) => f,
                Err(Error::Path(_)) => {
                    on_cut.push(pair(z));
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let mut row = vec![s.to_string(), k.to_string(), num(z.re), num(z.im)];
            for xi in f.xi {
                row.push(num(xi.re));
                row.push(num(xi.im));
            }
            rows.push(row);
        }
    }
    out.json(
        "curve.json",
        &json!({
            "params": params,
            "regime": regime_name(bp.regime),
            "branch_points": {
                "z1": bp.z1,
                "z2": bp.z2,
                "z3": bp.z3,
                "all": bp.points().map(pair),
                "real_count": real,
                "imaginary_count": imag,
            },
            "critical_times": { "t_c1": bp.t_c1, "t_c2": bp.t_c2 },
            "t_swap": params.t_swap(),
            "z_far": c.z_far,
            "skipped_on_cuts": on_cut,
        }),
    )?;
    let header = ["segment", "k", "z_re", "z_im", "xi1_re", "xi1_im", "xi2_re", "xi2_im", "xi3_re", "xi3_im", "xi4_re", "xi4_im"];
    out.csv("xi.csv", &header, rows)
}

// ---------------------------------------------------------------- density

fn density(args: &DensityArgs, out: &mut OutDir) -> Result<()> {
    let params = ModelParams::new(args.a, args.b, args.t)?;
    let c = SpectralCurve::new(params)?;
    let prof = density_profile(&c, GridSpec { nodes_per_interval: args.nodes })?;
    let rows = (0..prof.grid.len()).map(|i| vec![num(prof.grid[i]), num(prof.rho[i]), num(prof.h_grid[i])]);
    out.csv("density.csv", &["x", "rho", "h"], rows)?;

    let mut summary = json!({
        "params": params,
        "regime": regime_name(c.branch.regime),
        "support": prof.support,
        "nodes_per_interval": args.nodes,
        "mass": prof.mass,
        "mass_error": (prof.mass - 1.0).abs(),
        "max_asymmetry": prof.max_asymmetry(),
        "c1": prof.c1,
        "c2": prof.c2,
        "h_imag_max": prof.h_imag_max,
    });
    if args.check_edges {
        let mut fits = vec![edge_fit(&c, Edge::Z1)?];
        if c.branch.regime == Regime::TwoCuts {
            fits.push(edge_fit(&c, Edge::Z2)?);
        }
        summary["edges"] = json!(fits);
    }
    out.json("density.json", &summary)
}

// ----------------------------------------------------------------- kernel

fn system(params: &ModelParams, n: usize, bits: Option<u32>) -> Result<BiorthogonalSystem> {
    let p = params.with_n(n)?;
    Ok(match bits {
        Some(b) => BiorthogonalSystem::new(&p, b)?,
        None => BiorthogonalSystem::auto(&p)?,
    })
}

fn scaling_rows(r: &ScalingReport) -> Vec<Vec<String>> {
    let mut rows = vec![];
    for (i, &n) in r.n_list.iter().enumerate() {
        for (k, &(u, v)) in r.grid.iter().enumerate() {
            rows.push(vec![n.to_string(), num(u), num(v), num(r.measured[i][k]), num(r.reference[k])]);
        }
    }
    rows
}

fn kernel(args: &KernelArgs, out: &mut OutDir) -> Result<()> {
    let params = ModelParams::new(args.a, args.b, args.t)?;
    let scaling_header = ["n", "u", "v", "measured", "reference"];
    match args.mode {
        KernelMode::Diag => {
            let n = args.n.unwrap_or(64);
            let c = SpectralCurve::new(params)?;
            let sys = system(&params, n, args.precision)?;
            let xs = bulk_points(&c, args.margin, args.points);
            if xs.is_empty() {
                return Err(Error::Domain(format!("margin {} leaves no bulk points", args.margin)).into());
            }
            let diag = sys.diagonal(&xs);
            let mut rows = vec![];
            let mut sup = 0.0f64;
            for (&x, k) in xs.iter().zip(diag) {
                let rho = density_point(&c, x)?.rho;
                let k_over_n = k / n as f64;
                sup = sup.max((k_over_n - rho).abs());
                rows.push(vec![num(x), num(k_over_n), num(rho), num((k_over_n - rho).abs())]);
            }
            out.csv("kernel_diag.csv", &["x", "k_over_n", "rho", "abs_err"], rows)?;
            out.json("kernel.json", &json!({ "params": sys.params, "mode": "diag", "precision_bits": sys.precision_bits, "sup_error": sup }))
        }
        KernelMode::Bulk => {
            let c = SpectralCurve::new(params)?;
            let b = &c.branch;
            let x0 = args.x0.unwrap_or(match b.regime {
                Regime::TwoCuts => 0.5 * (b.z1 + b.z2),
                Regime::OneCut => 0.5 * b.z1,
            });
            let r = bulk_scaling_check(x0, &args.n_list, &ScalingGrid::bulk(), &params)?;
            out.csv("scaling.csv", &scaling_header, scaling_rows(&r))?;
            out.json("scaling.json", &r)
        }
        KernelMode::Edge => {
            let edge = match args.edge {
                EdgeArg::Z1 => EdgeId::Z1,
                EdgeArg::Z2 => EdgeId::Z2,
                EdgeArg::MinusZ1 => EdgeId::MinusZ1,
                EdgeArg::MinusZ2 => EdgeId::MinusZ2,
            };
            let r = edge_scaling_check(edge, &args.n_list, &ScalingGrid::edge(), &params)?;
            out.csv("scaling.csv", &scaling_header, scaling_rows(&r))?;
            out.json("scaling.json", &r)
        }
        KernelMode::Check => {
            let n = args.n.unwrap_or(8);
            let c = SpectralCurve::new(params)?;
            let sys = system(&params, n, args.precision)?;
            let xs = bulk_points(&c, 0.05, 3);
            out.json(
                "check.json",
                &json!({
                    "params": sys.params,
                    "mode": "check",
                    "precision_bits": sys.precision_bits,
                    "pivot_spread_log2": sys.pivot_spread_log2,
                    "trace": sys.trace(),
                    "trace_error": (sys.trace() - n as f64).abs(),
                    "reproducing_points": xs,
                    "reproducing_residual": sys.reproducing_residual(&xs, &xs),
                    "biorthogonality_residual": sys.biorthogonality_residual(),
                }),
            )
        }
    }
}

// --------------------------------------------------------------- simulate

fn simulate(args: &SimulateArgs, out: &mut OutDir) -> Result<()> {
    let ep = Endpoints::new(args.a, args.b, args.n)?;
    if let Some(t) = args.t {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("t must lie in (0, 1), got {t}")).into());
        }
    }
    let keep = if args.no_paths {
        let t = args.t.ok_or_else(|| CliError::Usage("--no-paths needs --t".into()))?;
        Some(vec![(t * args.steps as f64).round() as usize])
    } else {
        None
    };
    if args.compare_kernel && args.t.is_none() {
        return Err(CliError::Usage("--compare-kernel needs --t".into()));
    }
    let strategy = match args.strategy {
        StrategyArg::Auto => Strategy::Auto,
        StrategyArg::WholePath => Strategy::WholePath,
        StrategyArg::Sequential => Strategy::Sequential,
    };
    let ens = sample_with(&ep, args.steps, args.count, args.seed, &SampleOptions { strategy, keep })?;

    if !args.no_paths {
        let rows = polylines(&ens).into_iter().map(|r| vec![r.bundle_id.to_string(), r.path_id.to_string(), num(r.time), num(r.position)]);
        out.csv("paths.csv", &["bundle_id", "path_id", "time", "position"], rows)?;
    }

    let mut meta = json!({
        "endpoints": ep,
        "steps": args.steps,
        "count": args.count,
        "seed": args.seed,
        "strategy": ens.strategy,
        "acceptance": ens.stats,
        "group_separation_fraction": ens.group_separation_fraction(),
    });
    if let Some(t) = args.t {
        let hist = marginal_histogram(&ens, t, args.bins, None);
        let rows = hist.bins.iter().map(|b| vec![num(b.left), num(b.right), num(b.mass)]);
        out.csv("histogram.csv", &["bin_left", "bin_right", "mass"], rows)?;
        meta["histogram"] = json!({ "t_requested": hist.t_requested, "t_used": hist.t_used, "samples": hist.samples, "bins": args.bins });
        if args.compare_kernel {
            let params = ModelParams::new(args.a, args.b, hist.t_used)?.with_n(args.n)?;
            let reach = args.a.max(args.b) + 3.0;
            let cdf = kernel_marginal_cdf(&params, -reach, reach, 4001)?;
            let (_, xs) = ens.marginal_samples(t);
            let d = ks_statistic(&xs, |x| cdf.eval(x));
            let bound = marginal_ks_bound(args.count);
            meta["kernel_ks"] = json!({
                "d": d,
                "critical_0_01": ks_critical(0.01, args.count),
                "bound": bound,
                "pass": d <= bound,
                "cdf_mass": cdf.mass,
            });
        }
    }
    out.json("simulate.json", &meta)
}

// ------------------------------------------------------------------ phase

fn phase(args: &PhaseArgs, out: &mut OutDir) -> Result<()> {
    let tol = Tolerances::default();
    let probe = ModelParams::new(args.a, args.b, 0.5).or_else(|e| match e {
        // t = 1/2 may itself be critical; any other time gives the same checks on (a, b).
        Error::CriticalTime { .. } => ModelParams::new(args.a, args.b, 0.5 + 1e-3),
        e => Err(e),
    })?;
    let (t1, t2) = probe
        .critical_times()
        .ok_or_else(|| Error::Domain(format!("the phase sweep needs ab < 1/2 (got ab = {})", args.a * args.b)))?;

    let m = args.t_grid;
    if m < 2 {
        return Err(CliError::Usage("--t-grid must be at least 2".into()));
    }
    let mut rows = vec![];
    let mut skipped = vec![];
    let mut prev: Option<(f64, Regime)> = None;
    let mut flips = vec![];
    for k in 1..=m {
        let t = k as f64 / (m + 1) as f64;
        let p = match ModelParams::new(args.a, args.b, t) {
            Ok(p) => p,
            Err(Error::CriticalTime { .. }) => {
                skipped.push(t);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let bp = branch_points(&p, &tol)?;
        let z2 = if bp.regime == Regime::TwoCuts { bp.z2 } else { 0.0 };
        rows.push(vec![num(t), num(bp.z1), num(z2), num(bp.z3), regime_name(bp.regime).to_string()]);
        if let Some((tp, rp)) = prev {
            if rp != bp.regime {
                let nearest = if (t1 - 0.5 * (tp + t)).abs() < (t2 - 0.5 * (tp + t)).abs() { t1 } else { t2 };
                flips.push(json!({
                    "between": [tp, t],
                    "from": regime_name(rp),
                    "to": regime_name(bp.regime),
                    "nearest_critical_time": nearest,
                    "brackets_critical_time": tp < nearest && nearest < t,
                }));
            }
        }
        prev = Some((t, bp.regime));
    }
    out.csv("sweep.csv", &["t", "z1", "z2_or_0", "z3", "regime"], rows)?;

    let (cells, level) = level_set(args)?;
    out.csv("lambda_grid.csv", &["x", "y", "re_lambda3", "re_lambda4", "difference"], cells)?;
    out.csv("level_set.csv", &["x", "y"], level)?;

    out.json(
        "phase.json",
        &json!({
            "a": args.a,
            "b": args.b,
            "critical_times": [t1, t2],
            "t_swap": probe.t_swap(),
            "t_grid": m,
            "skipped": skipped,
            "flips": flips,
            "level_t": args.level_t,
            "level_grid": args.level_grid,
        }),
    )
}

type Rows = Vec<Vec<String>>;

/// Re lambda_3 - Re lambda_4 on a grid of the upper half plane, and the
/// zero crossings of that difference along each row by linear interpolation.
/// The lower half plane is the mirror image.
fn level_set(args: &PhaseArgs) -> Result<(Rows, Rows)> {
    let p = ModelParams::new(args.a, args.b, args.level_t)?;
    let c = SpectralCurve::new(p)?;
    let m = args.level_grid;
    if m < 2 {
        return Err(CliError::Usage("--level-grid must be at least 2".into()));
    }
    let e = args.level_extent.unwrap_or(1.5 * c.branch.z1);
    let rows: Vec<Result<(Rows, Rows)>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let y = e * (j as f64 + 0.5) / m as f64;
            let (mut cells, mut level) = (vec![], vec![]);
            let mut prev: Option<(f64, f64)> = None;
            for i in 0..m {
                let x = e * ((2 * i) as f64 - (m - 1) as f64) / (m - 1) as f64;
                let z = C64::new(x, y);
                if x == 0.0 && y < c.branch.z3 {
                    // On the vertical cut.
                    prev = None;
                    continue;
                }
                let l3 = c.lambda(3, z, None)?.re;
                let l4 = c.lambda(4, z, None)?.re;
                let d = l3 - l4;
                cells.push(vec![num(x), num(y), num(l3), num(l4), num(d)]);
                if let Some((xp, dp)) = prev {
                    if dp == 0.0 || dp.signum() != d.signum() {
                        let xr = if dp == d { xp } else { xp + (x - xp) * dp / (dp - d) };
                        level.push(vec![num(xr), num(y)]);
                    }
                }
                prev = Some((x, d));
            }
            Ok((cells, level))
        })
        .collect();
    let (mut cells, mut level) = (vec![], vec![]);
    for r in rows {
        let (c, l) = r?;
        cells.extend(c);
        level.extend(l);
    }
    Ok((cells, level))
}
