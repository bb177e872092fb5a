use nibm::numerics::quad::GaussLegendre;
use nibm::simulate::*;
use nibm::{Error, ModelParams};
use proptest::prelude::{prop_assert, prop_assume, proptest, ProptestConfig};

fn seq(keep: Vec<usize>) -> SampleOptions {
    SampleOptions { strategy: Strategy::Sequential, keep: Some(keep) }
}

fn column(ens: &PathEnsemble, path: usize, i: usize, bundles: std::ops::Range<usize>) -> Vec<f64> {
    bundles.map(|j| ens.at(j, path, i)).collect()
}

/// Non-collision probability of two bridges (-a -> -b, a -> b), from the
/// Karlin-McGregor density at time t integrated over x1 < x2 by 2-D
/// Gauss-Legendre.
fn two_path_oracle(a: f64, b: f64, n: usize, t: f64) -> f64 {
    let nf = n as f64;
    let p = |s: f64, u: f64, v: f64| (nf / (2.0 * std::f64::consts::PI * s)).sqrt() * (-nf * (v - u) * (v - u) / (2.0 * s)).exp();
    let gl = GaussLegendre::compute(40);
    let (lo, hi) = (-a.max(b) - 4.0, a.max(b) + 4.0);
    let panels = 40;
    let w = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        for (x1, w1) in gl.mapped(lo + i as f64 * w, lo + (i + 1) as f64 * w) {
            // Inner integral over x2 in (x1, hi).
            let inner_panels = 40;
            let iw = (hi - x1) / inner_panels as f64;
            for k in 0..inner_panels {
                for (x2, w2) in gl.mapped(x1 + k as f64 * iw, x1 + (k + 1) as f64 * iw) {
                    let start = p(t, -a, x1) * p(t, a, x2) - p(t, -a, x2) * p(t, a, x1);
                    let end = p(1.0 - t, x1, -b) * p(1.0 - t, x2, b) - p(1.0 - t, x2, -b) * p(1.0 - t, x1, b);
                    total += w1 * w2 * start * end;
                }
            }
        }
    }
    total / (p(1.0, -a, -b) * p(1.0, a, b))
}

#[test]
fn two_path_acceptance_matches_the_determinant_oracle() {
    let (a, b, n) = (0.6, 0.6, 2);
    let oracle = two_path_oracle(a, b, n, 0.37);
    // Reflection principle for the gap between the two paths.
    assert!((oracle - (1.0 - (-4.0 * n as f64 * a * b).exp())).abs() < 1e-9, "{oracle}");
    let ep = Endpoints::new(a, b, n).unwrap();
    let opts = SampleOptions { strategy: Strategy::WholePath, keep: Some(vec![0, 50, 100]) };
    let ens = sample_with(&ep, 100, 40000, 3, &opts).unwrap();
    let p = ens.stats.rate;
    let sd = (oracle * (1.0 - oracle) / ens.stats.proposals as f64).sqrt();
    assert!((p - oracle).abs() < 4.0 * sd, "rate {p} vs {oracle} (sd {sd:e})");
}

#[test]
fn two_path_strategies_agree_in_law() {
    let ep = Endpoints::new(0.6, 0.6, 2).unwrap();
    let whole = sample_with(&ep, 100, 4000, 1, &SampleOptions { strategy: Strategy::WholePath, keep: Some(vec![40]) }).unwrap();
    let seqn = sample_with(&ep, 100, 4000, 2, &seq(vec![40])).unwrap();
    for path in 0..2 {
        let r = ks_two_sample(&column(&whole, path, 0, 0..4000), &column(&seqn, path, 0, 0..4000));
        assert!(r.p_value > 0.01, "path {path}: {r:?}");
    }
}

#[test]
fn bundles_are_ordered_and_pinned() {
    let ep = Endpoints::new(0.4, 0.3, 6).unwrap();
    let ens = sample_with(&ep, 60, 200, 9, &SampleOptions::default()).unwrap();
    assert_eq!(ens.strategy, Strategy::Sequential);
    for j in 0..200 {
        for i in 0..=60 {
            let col: Vec<f64> = (0..6).map(|k| ens.at(j, k, i)).collect();
            if i == 0 || i == 60 {
                let e = if i == 0 { 0.4 } else { 0.3 };
                assert_eq!(col, vec![-e, -e, -e, e, e, e]);
            } else {
                assert!(col.windows(2).all(|w| w[0] < w[1]), "bundle {j} time {i}: {col:?}");
            }
        }
    }
}

#[test]
fn parity_of_the_law() {
    let ep = Endpoints::new(0.6, 0.6, 2).unwrap();
    let ens = sample_with(&ep, 100, 6000, 4, &SampleOptions { strategy: Strategy::Auto, keep: Some(vec![50]) }).unwrap();
    let up = column(&ens, 1, 0, 0..6000);
    let low = column(&ens, 0, 0, 0..6000);
    assert!(up.iter().sum::<f64>() > 0.0 && low.iter().sum::<f64>() < 0.0);

    let ep = Endpoints::new(0.6, 0.6, 4).unwrap();
    let ens = sample_with(&ep, 100, 6000, 5, &seq(vec![30])).unwrap();
    for k in 0..4 {
        let a = column(&ens, k, 0, 0..3000);
        let b: Vec<f64> = column(&ens, 3 - k, 0, 3000..6000).iter().map(|v| -v).collect();
        let r = ks_two_sample(&a, &b);
        assert!(r.p_value > 0.01, "path {k}: {r:?}");
    }
}

#[test]
fn time_reversal() {
    let fwd = sample_with(&Endpoints::new(0.4, 0.3, 4).unwrap(), 100, 5000, 6, &seq(vec![30])).unwrap();
    let rev = sample_with(&Endpoints::new(0.3, 0.4, 4).unwrap(), 100, 5000, 7, &seq(vec![70])).unwrap();
    for k in 0..4 {
        let r = ks_two_sample(&column(&fwd, k, 0, 0..5000), &column(&rev, k, 0, 0..5000));
        assert!(r.p_value > 0.01, "path {k}: {r:?}");
    }
}

#[test]
fn marginal_matches_the_finite_n_kernel() {
    let (a, b, t, n) = (0.6, 0.6, 0.45, 4);
    let ens = sample_with(&Endpoints::new(a, b, n).unwrap(), 100, 4000, 8, &seq(vec![45])).unwrap();
    let cdf = kernel_marginal_cdf(&ModelParams::new(a, b, t).unwrap().with_n(n).unwrap(), -3.0, 3.0, 2001).unwrap();
    assert!((cdf.mass - 1.0).abs() < 1e-8);
    let (t_used, xs) = ens.marginal_samples(t);
    assert_eq!(t_used, 0.45);
    let d = ks_statistic(&xs, |x| cdf.eval(x));
    assert!(d <= ks_critical(0.01, 4000), "D = {d}");
}

#[test]
fn histogram_is_normalized_and_snaps_to_the_grid() {
    let (a, b, n) = (0.6, 0.6, 4);
    let ens = sample_with(&Endpoints::new(a, b, n).unwrap(), 50, 500, 10, &SampleOptions::default()).unwrap();
    let h = marginal_histogram(&ens, 0.411, 30, None);
    assert_eq!(h.t_used, 0.42);
    assert_eq!(h.samples, 500 * n);
    assert!((h.bins.iter().map(|b| b.mass).sum::<f64>() - 1.0).abs() < 1e-12);
    for i in 1..50 {
        let t = i as f64 / 50.0;
        let centre = a * (1.0 - t) + b * t;
        let band = centre + 5.0 * (t * (1.0 - t) / n as f64).sqrt();
        let (_, xs) = ens.marginal_samples(t);
        assert!(xs.iter().all(|x| x.abs() < band), "t = {t}");
    }
}

#[test]
fn seeded_runs_are_identical() {
    let ep = Endpoints::new(0.6, 0.6, 4).unwrap();
    let one = sample_with(&ep, 50, 64, 42, &SampleOptions::default()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let two = pool.install(|| sample_with(&ep, 50, 64, 42, &SampleOptions::default()).unwrap());
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&two).unwrap());
    let other = sample_with(&ep, 50, 64, 43, &SampleOptions::default()).unwrap();
    assert_ne!(one.bundles, other.bundles);
    // A bundle depends only on its own stream, not on the bundle count.
    let fewer = sample_with(&ep, 50, 10, 42, &SampleOptions::default()).unwrap();
    assert_eq!(fewer.bundles[..], one.bundles[..10]);
}

#[test]
fn acceptance_decreases_with_n() {
    let rates: Vec<f64> = [2, 4, 6]
        .iter()
        .map(|&n| sample_with(&Endpoints::new(0.6, 0.6, n).unwrap(), 200, 300, 1, &seq(vec![100])).unwrap().stats.rate)
        .collect();
    assert!(rates.windows(2).all(|w| w[1] < w[0]), "{rates:?}");
}

#[test]
fn figure_configurations() {
    let (_, a, b) = FIGURE_CONFIGS[0];
    let ens = sample_with(&Endpoints::new(a, b, 4).unwrap(), 100, 400, 11, &SampleOptions::default()).unwrap();
    assert!(ens.group_separation_fraction() >= 0.99);
    for (_, a, b) in FIGURE_CONFIGS {
        let rows = figure_paths(&Endpoints::new(a, b, 4).unwrap(), 50, 3, 12).unwrap();
        assert_eq!(rows.len(), 3 * 4 * 51);
        assert_eq!(rows[0].time, 0.0);
        assert_eq!(rows.last().unwrap().position, b);
    }
}

#[test]
fn rejected_configurations() {
    let ep = Endpoints::new(0.6, 0.6, 4).unwrap();
    let whole = SampleOptions { strategy: Strategy::WholePath, keep: None };
    assert!(matches!(sample_with(&ep, 100, 1, 0, &whole), Err(Error::Infeasible(_))));
    assert!(matches!(sample_with(&ep, 10, 1, 0, &SampleOptions::default()), Err(Error::Domain(_))));
    assert!(matches!(Endpoints::new(0.6, 0.6, 10), Err(Error::Domain(_))));
    assert!(matches!(Endpoints::new(0.6, 0.6, 3), Err(Error::Domain(_))));
    assert!(matches!(Endpoints::new(-0.6, 0.6, 2), Err(Error::Domain(_))));
    assert!(Endpoints::new(1.0, 0.5, 2).is_ok());
    assert!(sample_ensemble(&ModelParams::new(0.6, 0.6, 0.3).unwrap(), 100, 1, 0).is_err());
}

#[test]
fn ks_two_sample_detects_a_shift() {
    let a: Vec<f64> = (0..2000).map(|i| i as f64 / 2000.0).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 0.1).collect();
    assert!(ks_two_sample(&a, &b).p_value < 1e-6);
    assert!((ks_two_sample(&a, &b).d - 0.1).abs() < 1e-3);
    assert!(ks_two_sample(&a, &a).p_value > 0.99);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn survival_factors_are_probabilities(
        gaps in proptest::collection::vec(0.01f64..0.5, 6),
        moves in proptest::collection::vec(-0.05f64..0.05, 6),
        tau in 0.01f64..0.99,
    ) {
        let mut x = vec![-1.0; 6];
        for k in 1..6 { x[k] = x[k - 1] + gaps[k]; }
        let y: Vec<f64> = x.iter().zip(&moves).map(|(a, b)| a + b).collect();
        prop_assume!(y.windows(2).all(|w| w[0] < w[1]));
        let s = step_survival(&x, &y, 6.0 / 0.01);
        prop_assert!((0.0..=1.0).contains(&s));
        let i = interaction(&y, 3, 0.6, tau, 6.0);
        prop_assert!((0.0..=1.0).contains(&i));
    }
}
