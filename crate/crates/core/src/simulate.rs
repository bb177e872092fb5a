//! Non-intersecting Brownian bridges on a uniform time grid.
//!
//! Half of the n paths run from `-a` to `-b`, the other half from `a` to `b`,
//! each with variance 1/n per unit time. Bundles are sampled by rejection in
//! one of two ways:
//!
//! * [`Strategy::WholePath`] draws n independent bridges and keeps the bundle
//!   when it does not intersect, including between grid times (the crossing
//!   probability of two bridges between neighbouring grid points is known in
//!   closed form). With several paths sharing an endpoint this event has
//!   probability zero, so the strategy only works for n = 2.
//! * [`Strategy::Sequential`] walks the conditioned process forward in time:
//!   the first grid time is drawn from its exact marginal, every later step
//!   from the exact transition of the conditioned process, each by rejection
//!   against a Gaussian envelope. Bundles have the law of the continuous-time
//!   process observed at the grid times.
//!
//! Every bundle has its own ChaCha stream (stream id = bundle id), so results
//! do not depend on the thread count.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::BiorthogonalSystem;
use crate::ModelParams;

/// Largest path count the sampler accepts.
pub const N_MAX_SAMPLING: usize = 8;
/// Smallest number of time steps.
pub const M_MIN: usize = 50;
/// Proposals per bundle (whole-path) or per step (sequential) before giving up.
pub const MAX_PROPOSALS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Endpoints {
    /// Any a, b > 0 are accepted, including ab = 1/2.
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
            return Err(Error::Domain(format!("endpoints must be positive, got a = {a}, b = {b}")));
        }
        if n == 0 || n % 2 != 0 || n > N_MAX_SAMPLING {
            return Err(Error::Domain(format!(
                "sampling needs an even n in 2..={N_MAX_SAMPLING}, got {n}; use the kernel module for larger n"
            )));
        }
        Ok(Endpoints { a, b, n })
    }

    pub fn from_params(params: &ModelParams) -> Result<Self> {
        Endpoints::new(params.a, params.b, params.require_n()?)
    }

    fn half(&self) -> usize {
        self.n / 2
    }

    /// Start and end point of path k, paths sorted from the bottom.
    fn start(&self, k: usize) -> f64 {
        if k < self.half() {
            -self.a
        } else {
            self.a
        }
    }

    fn end(&self, k: usize) -> f64 {
        if k < self.half() {
            -self.b
        } else {
            self.b
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// WholePath for n = 2, Sequential otherwise.
    Auto,
    WholePath,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOptions {
    pub strategy: Strategy,
    /// Grid indices to store; `None` stores all m + 1 times.
    pub keep: Option<Vec<usize>>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { strategy: Strategy::Auto, keep: None }
    }
}

/// Proposal counts. For whole-path sampling a proposal is a bundle; for
/// sequential sampling it is a single step, so the two rates are not
/// comparable with each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub proposals: u64,
    pub accepted: u64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub endpoints: Endpoints,
    pub m: usize,
    pub seed: u64,
    pub strategy: Strategy,
    /// All grid times i/m.
    pub grid: Vec<f64>,
    /// Stored grid indices, increasing.
    pub kept: Vec<usize>,
    /// bundles[j][k * kept.len() + i]: path k of bundle j at grid[kept[i]].
    pub bundles: Vec<Vec<f64>>,
    pub stats: AcceptanceStats,
}

impl PathEnsemble {
    pub fn path(&self, bundle: usize, path: usize) -> &[f64] {
        let w = self.kept.len();
        &self.bundles[bundle][path * w..(path + 1) * w]
    }

    /// Position of one path at the i-th stored time.
    pub fn at(&self, bundle: usize, path: usize, i: usize) -> f64 {
        self.bundles[bundle][path * self.kept.len() + i]
    }

    /// Index into `kept` of the stored time nearest to t.
    pub fn nearest_time(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &g) in self.kept.iter().enumerate() {
            if (self.grid[g] - t).abs() < (self.grid[self.kept[best]] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// All n positions of every bundle at the stored time nearest to t.
    pub fn marginal_samples(&self, t: f64) -> (f64, Vec<f64>) {
        let i = self.nearest_time(t);
        let xs = (0..self.bundles.len())
            .flat_map(|j| (0..self.endpoints.n).map(move |k| (j, k)))
            .map(|(j, k)| self.at(j, k, i))
            .collect();
        (self.grid[self.kept[i]], xs)
    }

    /// Fraction of bundles in which the lower group stays strictly below the
    /// upper group at every stored time.
    pub fn group_separation_fraction(&self) -> f64 {
        let h = self.endpoints.half();
        let sep = (0..self.bundles.len())
            .filter(|&j| (0..self.kept.len()).all(|i| self.at(j, h - 1, i) < self.at(j, h, i)))
            .count();
        sep as f64 / self.bundles.len().max(1) as f64
    }
}

pub fn sample_ensemble(params: &ModelParams, m: usize, count: usize, seed: u64) -> Result<PathEnsemble> {
    sample_with(&Endpoints::from_params(params)?, m, count, seed, &SampleOptions::default())
}

pub fn sample_with(ep: &Endpoints, m: usize, count: usize, seed: u64, opts: &SampleOptions) -> Result<PathEnsemble> {
    if m < M_MIN {
        return Err(Error::Domain(format!("at least {M_MIN} time steps are needed, got {m}")));
    }
    let kept = match &opts.keep {
        None => (0..=m).collect::<Vec<_>>(),
        Some(k) => {
            let mut k = k.clone();
            k.sort_unstable();
            k.dedup();
            if k.is_empty() || *k.last().unwrap() > m {
                return Err(Error::Domain(format!("stored grid indices must lie in 0..={m}")));
            }
            k
        }
    };
    let strategy = match opts.strategy {
        Strategy::Auto if ep.n == 2 => Strategy::WholePath,
        Strategy::Auto => Strategy::Sequential,
        s => s,
    };
    if strategy == Strategy::WholePath && ep.n > 2 {
        return Err(Error::Infeasible(format!(
            "whole-path rejection has acceptance 0 for n = {}: {} paths share each endpoint; use the sequential sampler or n = 2",
            ep.n,
            ep.half()
        )));
    }
    let sampler = Sampler { ep: *ep, m };
    let results: Vec<(Vec<f64>, u64, u64)> = (0..count as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            let (full, proposals, accepted) = match strategy {
                Strategy::WholePath => sampler.whole_path(&mut rng)?,
                _ => sampler.sequential(&mut rng)?,
            };
            let w = m + 1;
            let mut out = Vec::with_capacity(ep.n * kept.len());
            for k in 0..ep.n {
                out.extend(kept.iter().map(|&i| full[k * w + i]));
            }
            Ok((out, proposals, accepted))
        })
        .collect::<Result<_>>()?;
    let proposals: u64 = results.iter().map(|r| r.1).sum();
    let accepted: u64 = results.iter().map(|r| r.2).sum();
    Ok(PathEnsemble {
        endpoints: *ep,
        m,
        seed,
        strategy,
        grid: (0..=m).map(|i| i as f64 / m as f64).collect(),
        kept,
        bundles: results.into_iter().map(|r| r.0).collect(),
        stats: AcceptanceStats {
            proposals,
            accepted,
            rate: if proposals == 0 { 0.0 } else { accepted as f64 / proposals as f64 },
        },
    })
}

fn infeasible(ep: &Endpoints, what: &str) -> Error {
    Error::Infeasible(format!(
        "acceptance below {:e} for {what} at a = {}, b = {}, n = {}; reduce n or separate the endpoints further",
        1.0 / MAX_PROPOSALS as f64,
        ep.a,
        ep.b,
        ep.n
    ))
}

struct Sampler {
    ep: Endpoints,
    m: usize,
}

fn strictly_increasing(y: &[f64]) -> bool {
    y.windows(2).all(|w| w[0] < w[1])
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

impl Sampler {
    /// Full bundle as path-major rows of m + 1 values, with proposal counts.
    fn whole_path(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, u64, u64)> {
        let (n, m) = (self.ep.n, self.m);
        let dt = 1.0 / m as f64;
        let nf = n as f64;
        let w = m + 1;
        let mut x = vec![0.0; n * w];
        for proposal in 1..=MAX_PROPOSALS {
            for k in 0..n {
                let (s, e) = (self.ep.start(k), self.ep.end(k));
                x[k * w] = s;
                for i in 1..m {
                    let rem = 1.0 - (i - 1) as f64 * dt;
                    let prev = x[k * w + i - 1];
                    let mean = prev + (e - prev) * dt / rem;
                    let var = dt * (rem - dt) / (rem * nf);
                    x[k * w + i] = mean + var.sqrt() * normal(rng);
                }
                x[k * w + m] = e;
            }
            let mut survive = 1.0;
            let mut ordered = true;
            for i in 1..=m {
                let col: Vec<f64> = (0..n).map(|k| x[k * w + i]).collect();
                if i < m && !strictly_increasing(&col) {
                    ordered = false;
                    break;
                }
                let prev: Vec<f64> = (0..n).map(|k| x[k * w + i - 1]).collect();
                survive *= step_survival(&prev, &col, nf / dt);
            }
            if ordered && rng.random::<f64>() < survive {
                return Ok((x, proposal, 1));
            }
        }
        Err(infeasible(&self.ep, "whole bundles"))
    }

    fn sequential(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, u64, u64)> {
        let (n, m, h) = (self.ep.n, self.m, self.ep.half());
        let (a, b) = (self.ep.a, self.ep.b);
        let nf = n as f64;
        let dt = 1.0 / m as f64;
        let w = m + 1;
        let mut out = vec![0.0; n * w];
        for k in 0..n {
            out[k * w] = self.ep.start(k);
            out[k * w + m] = self.ep.end(k);
        }
        let (mut proposals, mut accepted) = (0u64, 0u64);

        // First grid time: within each group the positions are
        // mu + sigma * (GUE eigenvalues); the cross-group factors on both
        // sides are probabilities and serve as the acceptance ratio.
        let s1 = dt;
        let sigma = (s1 * (1.0 - s1) / nf).sqrt();
        let mut x = vec![0.0; n];
        let mut tries = 0;
        loop {
            tries += 1;
            proposals += 1;
            if tries > MAX_PROPOSALS {
                return Err(infeasible(&self.ep, "the first step"));
            }
            for (g, sign) in [(0, -1.0), (h, 1.0)] {
                let mu = sign * (a * (1.0 - s1) + b * s1);
                for (k, l) in gue_eigenvalues(h, rng).into_iter().enumerate() {
                    x[g + k] = mu + sigma * l;
                }
            }
            if !strictly_increasing(&x) {
                continue;
            }
            let alpha = interaction(&x, h, a, s1, nf) * interaction(&x, h, b, 1.0 - s1, nf);
            if rng.random::<f64>() < alpha {
                accepted += 1;
                break;
            }
        }
        for k in 0..n {
            out[k * w + 1] = x[k];
        }

        // Later steps. The target is the free step density times the bridge
        // survival, the cross-group factor and the within-group end factors
        // prod P(tau', y_k, e_k) Delta(y_lower) Delta(y_upper). The Gaussian
        // part combines with the free step into a bridge step; log Delta is
        // concave, so its tangent plane at any point bounds it. Taking the
        // tangent at the mode of the combined density makes the proposal
        // N(mode, var), and every acceptance factor is at most 1.
        let mut y = vec![0.0; n];
        for i in 1..m - 1 {
            let tau_next = 1.0 - (i + 1) as f64 * dt;
            let tau = tau_next + dt;
            let var = dt * tau_next / (nf * tau);
            let centre: Vec<f64> = (0..n).map(|k| (x[k] * tau_next + self.ep.end(k) * dt) / tau).collect();
            let mode = log_gas_mode(&centre, var, h);
            let sd = var.sqrt();
            let mut tries = 0;
            loop {
                tries += 1;
                proposals += 1;
                if tries > MAX_PROPOSALS {
                    return Err(infeasible(&self.ep, "a time step"));
                }
                for k in 0..n {
                    y[k] = mode[k] + sd * normal(rng);
                }
                if !strictly_increasing(&y) {
                    continue;
                }
                let mut gap = 0.0;
                for (lo, hi) in [(0, h), (h, n)] {
                    for k in lo..hi {
                        for j in lo..k {
                            let d = mode[k] - mode[j];
                            let r = ((y[k] - y[j]) - d) / d;
                            gap += r.ln_1p() - r;
                        }
                    }
                }
                // The factors are at most 1, so the cheap one can reject first.
                let u = rng.random::<f64>();
                let mut alpha = gap.exp();
                if u >= alpha {
                    continue;
                }
                alpha *= step_survival(&x, &y, nf / dt);
                if u >= alpha {
                    continue;
                }
                alpha *= interaction(&y, h, b, tau_next, nf);
                if u < alpha {
                    accepted += 1;
                    break;
                }
            }
            std::mem::swap(&mut x, &mut y);
            for k in 0..n {
                out[k * w + i + 1] = x[k];
            }
        }
        Ok((out, proposals, accepted))
    }
}

/// Maximizer of -|y - c|^2 / (2 var) + log Delta(y_lower) + log Delta(y_upper)
/// over configurations increasing within each group, by damped Newton on each
/// group. The objective is strictly concave there, and c is increasing within
/// groups.
fn log_gas_mode(c: &[f64], var: f64, h: usize) -> Vec<f64> {
    let mut y = c.to_vec();
    for g in [0, h] {
        group_mode(&mut y[g..g + h], &c[g..g + h], var);
    }
    y
}

fn group_mode(y: &mut [f64], c: &[f64], var: f64) {
    let p = y.len();
    if p == 1 {
        return;
    }
    let objective = |y: &[f64]| -> f64 {
        let mut v = 0.0;
        for k in 0..p {
            v -= (y[k] - c[k]).powi(2) / (2.0 * var);
            for j in 0..k {
                let d = y[k] - y[j];
                if d <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                v += d.ln();
            }
        }
        v
    };
    let mut f = objective(y);
    let mut trial = [0.0; N_MAX_SAMPLING];
    // Any tangent point gives a valid envelope; the mode only makes it tight,
    // so a loose tolerance is enough.
    for _ in 0..20 {
        let mut grad = [[0.0; N_MAX_SAMPLING]; N_MAX_SAMPLING];
        let mut hess = [[0.0; N_MAX_SAMPLING]; N_MAX_SAMPLING];
        for k in 0..p {
            grad[k][0] = -(y[k] - c[k]) / var;
            hess[k][k] = 1.0 / var;
            for j in 0..k {
                let d = y[k] - y[j];
                grad[k][0] += 1.0 / d;
                grad[j][0] -= 1.0 / d;
                let q = 1.0 / (d * d);
                hess[k][k] += q;
                hess[j][j] += q;
                hess[j][k] -= q;
                hess[k][j] -= q;
            }
        }
        if !solve_small(&mut hess, &mut grad, p, 1) {
            return;
        }
        let size = (0..p).map(|k| grad[k][0].abs()).fold(0.0, f64::max);
        let mut lambda = 1.0;
        let mut moved = false;
        while lambda > 1e-12 {
            for k in 0..p {
                trial[k] = y[k] + lambda * grad[k][0];
            }
            let ft = objective(&trial[..p]);
            if ft >= f {
                y.copy_from_slice(&trial[..p]);
                f = ft;
                moved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !moved || size < 1e-8 * var.sqrt() {
            return;
        }
    }
}

/// Eigenvalues of a p x p GUE matrix with density proportional to
/// Delta(l)^2 exp(-|l|^2 / 2), from the tridiagonal beta = 2 model.
fn gue_eigenvalues(p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if p == 1 {
        return vec![normal(rng)];
    }
    let mut t = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        t[(i, i)] = normal(rng);
    }
    for i in 0..p - 1 {
        let dof = 2.0 * (p - 1 - i) as f64;
        let c = ChiSquared::new(dof).unwrap().sample(rng).sqrt() / std::f64::consts::SQRT_2;
        t[(i, i + 1)] = c;
        t[(i + 1, i)] = c;
    }
    let mut l: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    l.sort_by(|u, v| u.total_cmp(v));
    l
}

/// Probability that independent bridges from x to y, each with variance 1/c
/// over the step, do not meet: the Karlin-McGregor determinant divided by its
/// diagonal product. Both x and y must be increasing; c = n / dt.
pub fn step_survival(x: &[f64], y: &[f64], c: f64) -> f64 {
    let n = x.len();
    if n == 2 {
        return -(-c * (x[1] - x[0]) * (y[1] - y[0])).exp_m1();
    }
    let mut e = [[0.0; N_MAX_SAMPLING]; N_MAX_SAMPLING];
    for j in 0..n {
        for k in 0..n {
            e[j][k] = if j == k { 1.0 } else { (-0.5 * c * (x[j] - x[k]) * (x[j] + x[k] - 2.0 * y[k])).exp() };
        }
    }
    probability(det_small(&mut e, n))
}

fn probability(d: f64) -> f64 {
    if d.is_finite() {
        d.clamp(0.0, 1.0)
    } else {
        0.0
    }
}

type Small = [[f64; N_MAX_SAMPLING]; N_MAX_SAMPLING];

/// Determinant of the leading n x n block by partial pivoting; destroys `a`.
fn det_small(a: &mut Small, n: usize) -> f64 {
    let mut det = 1.0;
    for i in 0..n {
        let p = (i..n).max_by(|&u, &v| a[u][i].abs().total_cmp(&a[v][i].abs())).unwrap();
        if a[p][i] == 0.0 {
            return 0.0;
        }
        if p != i {
            a.swap(p, i);
            det = -det;
        }
        det *= a[i][i];
        for r in i + 1..n {
            let f = a[r][i] / a[i][i];
            for c in i + 1..n {
                a[r][c] -= f * a[i][c];
            }
        }
    }
    det
}

/// Overwrites `b` (n x cols) with a^-1 b; destroys `a`. False if singular.
fn solve_small(a: &mut Small, b: &mut Small, n: usize, cols: usize) -> bool {
    for i in 0..n {
        let p = (i..n).max_by(|&u, &v| a[u][i].abs().total_cmp(&a[v][i].abs())).unwrap();
        if a[p][i] == 0.0 || !a[p][i].is_finite() {
            return false;
        }
        a.swap(p, i);
        b.swap(p, i);
        for r in 0..n {
            if r == i {
                continue;
            }
            let f = a[r][i] / a[i][i];
            for c in i..n {
                a[r][c] -= f * a[i][c];
            }
            for c in 0..cols {
                b[r][c] -= f * b[i][c];
            }
        }
    }
    for i in 0..n {
        for c in 0..cols {
            b[i][c] /= a[i][i];
        }
    }
    true
}

/// Cross-group factor of the confluent Karlin-McGregor determinant between an
/// increasing configuration y (first h paths lower) and the points -e (lower
/// group) and e (upper group) at time distance tau: the probability that the
/// two groups of bridges do not meet given that neither group meets itself.
pub fn interaction(y: &[f64], h: usize, e: f64, tau: f64, nf: f64) -> f64 {
    let s = (tau / nf).sqrt();
    let k = 2.0 * nf * e / tau;
    let shift = k * y[h - 1];
    if h == 1 {
        return probability(-(shift - k * y[1]).exp_m1());
    }
    // Blocks of the column-scaled determinant, rows indexed by power q:
    // I = det(1 - LL^-1 LU UU^-1 UL).
    let z = [[0.0; N_MAX_SAMPLING]; N_MAX_SAMPLING];
    let (mut ll, mut uu, mut lu, mut ul) = (z, z, z, z);
    for c in 0..h {
        let (lo, up) = (y[c], y[h + c]);
        let (wl, wu) = ((k * lo - shift).exp(), (shift - k * up).exp());
        let (mut p1, mut p2, mut p3, mut p4) = (1.0, 1.0, 1.0, 1.0);
        for q in 0..h {
            ll[q][c] = p1;
            uu[q][c] = p2;
            lu[q][c] = p3 * wu;
            ul[q][c] = p4 * wl;
            p1 *= (lo + e) / s;
            p2 *= (up - e) / s;
            p3 *= (up + e) / s;
            p4 *= (lo - e) / s;
        }
    }
    // ul <- UU^-1 UL, lu <- LL^-1 LU.
    if !solve_small(&mut uu, &mut ul, h, h) || !solve_small(&mut ll, &mut lu, h, h) {
        return 0.0;
    }
    let mut schur = z;
    for r in 0..h {
        for c in 0..h {
            let v: f64 = (0..h).map(|j| lu[r][j] * ul[j][c]).sum();
            schur[r][c] = if r == c { 1.0 - v } else { -v };
        }
    }
    probability(det_small(&mut schur, h))
}

// ---------------------------------------------------------------- output

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub t_requested: f64,
    /// Grid time actually used (nearest stored time).
    pub t_used: f64,
    pub samples: usize,
    pub bins: Vec<HistogramBin>,
}

/// Normalized histogram of all positions at the stored time nearest to t.
/// Without a range the bins span the sample range.
pub fn marginal_histogram(ens: &PathEnsemble, t: f64, bins: usize, range: Option<(f64, f64)>) -> Histogram {
    let (t_used, xs) = ens.marginal_samples(t);
    let bins = bins.max(1);
    let (lo, hi) = range.unwrap_or_else(|| {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo < hi {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    });
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &xs {
        if x < lo || x > hi {
            continue;
        }
        counts[(((x - lo) / width) as usize).min(bins - 1)] += 1;
    }
    let total = xs.len().max(1) as f64;
    Histogram {
        t_requested: t,
        t_used,
        samples: xs.len(),
        bins: counts
            .iter()
            .enumerate()
            .map(|(i, &c)| HistogramBin {
                left: lo + i as f64 * width,
                right: lo + (i + 1) as f64 * width,
                mass: c as f64 / total,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolylineRow {
    pub bundle_id: usize,
    pub path_id: usize,
    pub time: f64,
    pub position: f64,
}

/// The three endpoint configurations of the path pictures:
/// separated groups (ab > 1/2), merging groups (ab < 1/2) and ab = 1/2.
pub const FIGURE_CONFIGS: [(&str, f64, f64); 3] = [("separated", 1.0, 0.7), ("merging", 0.4, 0.3), ("critical", 1.0, 0.5)];

pub fn figure_paths(ep: &Endpoints, m: usize, count: usize, seed: u64) -> Result<Vec<PolylineRow>> {
    let ens = sample_with(ep, m, count, seed, &SampleOptions::default())?;
    Ok(polylines(&ens))
}

pub fn polylines(ens: &PathEnsemble) -> Vec<PolylineRow> {
    let mut rows = Vec::with_capacity(ens.bundles.len() * ens.endpoints.n * ens.kept.len());
    for j in 0..ens.bundles.len() {
        for k in 0..ens.endpoints.n {
            for (i, &g) in ens.kept.iter().enumerate() {
                rows.push(PolylineRow { bundle_id: j, path_id: k, time: ens.grid[g], position: ens.at(j, k, i) });
            }
        }
    }
    rows
}

// ------------------------------------------------------------ KS testing

/// P(K > lambda) for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic one-sample KS critical value at level alpha for n samples.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Accepted KS distance of a pooled marginal from the kernel CDF:
/// three times the 1% critical value at the bundle count.
pub fn marginal_ks_bound(bundles: usize) -> f64 {
    3.0 * ks_critical(0.01, bundles)
}

/// sup |F_emp - F| over the samples.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|u, v| u.total_cmp(v));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleKs {
    pub d: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TwoSampleKs {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|u, v| u.total_cmp(v));
    b.sort_by(|u, v| u.total_cmp(v));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = (na * nb / (na + nb)).sqrt();
    TwoSampleKs { d, p_value: kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d) }
}

/// CDF of (1/n) K_n(x, x) tabulated on a uniform grid over [lo, hi].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedCdf {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    /// Integral of (1/n) K_n(x, x) over [lo, hi] before normalization.
    pub mass: f64,
}

impl TabulatedCdf {
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = (self.x[0], *self.x.last().unwrap());
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let h = (hi - lo) / (self.x.len() - 1) as f64;
        let i = (((x - lo) / h) as usize).min(self.x.len() - 2);
        let w = (x - self.x[i]) / h;
        self.f[i] * (1.0 - w) + self.f[i + 1] * w
    }
}

/// One-point marginal of the finite-n ensemble at time params.t, from the
/// exact kernel. Trapezoid rule on `nodes` points.
pub fn kernel_marginal_cdf(params: &ModelParams, lo: f64, hi: f64, nodes: usize) -> Result<TabulatedCdf> {
    let n = params.require_n()? as f64;
    let sys = BiorthogonalSystem::auto(params)?;
    let x: Vec<f64> = (0..nodes).map(|i| lo + (hi - lo) * i as f64 / (nodes - 1) as f64).collect();
    let rho: Vec<f64> = sys.diagonal(&x).iter().map(|k| k / n).collect();
    let h = (hi - lo) / (nodes - 1) as f64;
    let mut f = vec![0.0; nodes];
    for i in 1..nodes {
        f[i] = f[i - 1] + 0.5 * h * (rho[i] + rho[i - 1]);
    }
    let mass = f[nodes - 1];
    f.iter_mut().for_each(|v| *v /= mass);
    Ok(TabulatedCdf { x, f, mass })
}
