use nibm::curve::*;
use nibm::numerics::poly::quartic_roots;
use nibm::{Error, ModelParams, Regime, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(a: f64, b: f64, t: f64) -> ModelParams {
    ModelParams::new(a, b, t).unwrap()
}

fn curve(a: f64, b: f64, t: f64) -> SpectralCurve {
    SpectralCurve::new(params(a, b, t)).unwrap()
}

/// Parameter sets covering both regimes, early and late.
const CASES: [(f64, f64, f64); 7] = [
    (0.6, 0.6, 0.25),
    (0.6, 0.6, 0.45),
    (0.6, 0.6, 0.6),
    (0.6, 0.6, 0.8),
    (0.4, 0.3, 0.1),
    (0.4, 0.3, 0.5),
    (0.4, 0.3, 0.95),
];

// ---------------------------------------------------------------- oracles

/// Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Real roots of p1 from sign changes on a fine scan, then bisection.
fn p1_roots_by_bisection(d: &DiscriminantData) -> Vec<f64> {
    let bound = 1.0 + [d.a2, d.a1, d.a0].iter().map(|c| (c / d.a3).abs()).fold(0.0, f64::max);
    let m = 200_000;
    let mut out = vec![];
    let mut prev = -bound;
    for k in 1..=m {
        let x = -bound + 2.0 * bound * k as f64 / m as f64;
        if d.p1(prev) == 0.0 {
            out.push(prev);
        } else if d.p1(prev).signum() != d.p1(x).signum() && d.p1(x) != 0.0 {
            out.push(bisect(|y| d.p1(y), prev, x));
        }
        prev = x;
    }
    out
}

// ------------------------------------------------------- critical times

#[test]
fn critical_times_golden() {
    let (t1, t2) = critical_times(0.6, 0.6).unwrap();
    assert!((t1 - 0.298_263_353_803_517_76).abs() < 1e-14, "{t1}");
    assert!((t2 - 0.701_736_646_196_482_3).abs() < 1e-14, "{t2}");
}

#[test]
fn critical_times_match_bisection() {
    for (a, b) in [(0.6, 0.6), (0.4, 0.3), (0.2, 2.0), (1.5, 0.1)] {
        let g = |t: f64| a * a * (1.0 - t) * (1.0 - t) + b * b * t * t - t * (1.0 - t);
        let mid = a / (a + b);
        let (t1, t2) = critical_times(a, b).unwrap();
        assert!((t1 - bisect(g, 0.0, mid)).abs() < 1e-13);
        assert!((t2 - bisect(g, mid, 1.0)).abs() < 1e-13);
    }
}

#[test]
fn a0_vanishes_at_the_critical_times() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let a: f64 = rng.random_range(0.05..1.5);
        let b: f64 = rng.random_range(0.05..(0.49 / a).min(1.5));
        let (t1, t2) = critical_times(a, b).unwrap();
        for t in [t1, t2] {
            // The constructor refuses critical t, so build the coefficients directly.
            let p = ModelParams { t, ..params(a, b, 0.5 * (t1 + t2)) };
            let d = discriminant_coefficients(&p);
            assert!(d.a0.abs() <= 1e-10 * d.scale(), "a0 = {} at t = {t}", d.a0);
        }
    }
}

#[test]
fn critical_times_rejected_for_supercritical() {
    assert!(matches!(critical_times(1.0, 0.6), Err(Error::Domain(_))));
}

// ----------------------------------------------------------- discriminant

#[test]
fn small_t_factorization() {
    for (a, b) in [(0.6, 0.6), (0.4, 0.3), (1.2, 0.3)] {
        let d = discriminant_coefficients(&params(a, b, 1e-8));
        let (a2, b2) = (a * a, b * b);
        // 4a^2 (x - a^2)^2 (4b^2 x - 4a^2 b^2 + 1), expanded.
        let want = [16.0 * a2 * b2, 4.0 * a2 - 48.0 * a2 * a2 * b2, 48.0 * a2 * a2 * a2 * b2 - 8.0 * a2 * a2, 4.0 * a2 * a2 * a2 * (1.0 - 4.0 * a2 * b2)];
        let got = [d.a3, d.a2, d.a1, d.a0];
        for k in 0..4 {
            assert!((got[k] - want[k]).abs() <= 1e-6 * want[k].abs(), "coefficient {k}: {} vs {}", got[k], want[k]);
        }
    }
}

#[test]
fn a3_and_a0_closed_forms() {
    for &(a, b, t) in &CASES {
        let d = discriminant_coefficients(&params(a, b, t));
        assert!((d.a3 - 16.0 * a * a * b * b).abs() <= 1e-15 * d.a3);
        let g = a * a * (1.0 - t) * (1.0 - t) + b * b * t * t - t * (1.0 - t);
        assert!((d.a0 - 4.0 * (1.0 - 4.0 * a * a * b * b) * g.powi(3)).abs() <= 1e-15 * d.scale());
    }
}

#[test]
fn discriminant_equals_product_of_root_gaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        for _ in 0..20 {
            let z = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let r = quartic_roots(c.coefficients(z));
            let mut prod = C64::new(1.0, 0.0);
            for i in 0..4 {
                for j in i + 1..4 {
                    prod *= (r[i] - r[j]) * (r[i] - r[j]);
                }
            }
            let want = c.disc.discriminant(z, t);
            assert!((prod - want).norm() <= 1e-8 * want.norm(), "z = {z}: {prod} vs {want}");
        }
    }
}

#[test]
fn roots_at_the_swap_time() {
    let bp = curve(0.6, 0.6, 0.5).branch;
    let (a, b): (f64, f64) = (0.6, 0.6);
    let x1 = 4.0 * a * b * (2.0 * a * b + 1.0) / ((a + b) * (a + b));
    let x2 = -(2.0 * a * b - 1.0).powi(2) / (4.0 * (a + b) * (a + b));
    assert!((x1 - 1.72).abs() < 1e-14);
    assert!((x2 + 0.013_611_111_111_111_1).abs() < 1e-15);
    assert!((bp.x_roots[2] - x1).abs() < 1e-12);
    assert!((bp.x_roots[0] - x2).abs() < 1e-12 && (bp.x_roots[1] - x2).abs() < 1e-12);
    assert_eq!(bp.regime, Regime::OneCut);
    assert!((bp.z2 - 0.116_666_666_666_666_7).abs() < 1e-10);
    assert!((bp.z3 - 0.116_666_666_666_666_7).abs() < 1e-10);
}

// ---------------------------------------------------------- branch points

#[test]
fn branch_points_match_bisection() {
    for &(a, b, t) in &CASES {
        let p = params(a, b, t);
        let bp = branch_points(&p, &Default::default()).unwrap();
        let oracle = p1_roots_by_bisection(&discriminant_coefficients(&p));
        assert_eq!(oracle.len(), 3, "{oracle:?}");
        for k in 0..3 {
            let tol = 1e-10 * oracle[k].abs().max(1e-3);
            assert!((bp.x_roots[k] - oracle[k]).abs() < tol, "{:?} vs {oracle:?}", bp.x_roots);
        }
    }
}

#[test]
fn figure_parameters_regimes() {
    let bp = curve(0.6, 0.6, 0.25).branch;
    assert_eq!(bp.regime, Regime::TwoCuts);
    assert!(bp.z1 > bp.z2 && bp.z2 > 0.0 && bp.z3 > 0.0);
    assert_eq!(bp.counts(), (4, 2));
    let bp = curve(0.6, 0.6, 0.45).branch;
    assert_eq!(bp.regime, Regime::OneCut);
    assert!(bp.z3 >= bp.z2 && bp.z2 > 0.0);
    assert_eq!(bp.counts(), (2, 4));
}

fn lemma_counts(p: &ModelParams) -> (usize, usize) {
    match p.regime() {
        Regime::TwoCuts => (4, 2),
        Regime::OneCut => (2, 4),
    }
}

#[test]
fn regime_counts_on_a_grid() {
    let mut checked = 0;
    for i in 0..20 {
        for j in 0..20 {
            let a = 0.05 + 1.45 * i as f64 / 19.0;
            let b = 0.05 + 1.45 * j as f64 / 19.0;
            if a * b >= 0.5 - 1e-3 {
                continue;
            }
            let (t1, t2) = critical_times(a, b).unwrap();
            for k in 0..20 {
                let t = 0.02 + 0.96 * k as f64 / 19.0;
                if (t - t1).abs() <= 1e-3 || (t - t2).abs() <= 1e-3 {
                    continue;
                }
                let p = params(a, b, t);
                let bp = branch_points(&p, &Default::default()).unwrap();
                assert_eq!(bp.counts(), lemma_counts(&p), "a={a} b={b} t={t}");
                let oracle = p1_roots_by_bisection(&discriminant_coefficients(&p));
                let pos = oracle.iter().filter(|&&x| x > 0.0).count();
                let neg = oracle.iter().filter(|&&x| x < 0.0).count();
                if oracle.len() == 3 {
                    assert_eq!((2 * pos, 2 * neg), lemma_counts(&p), "oracle disagrees at a={a} b={b} t={t}");
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 3000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn regime_counts_random(a in 0.05f64..2.0, r in 0.02f64..0.98, t in 0.01f64..0.99) {
        let b = r * (0.5 - 1e-3) / a;
        let (t1, t2) = critical_times(a, b).unwrap();
        prop_assume!((t - t1).abs() > 1e-3 && (t - t2).abs() > 1e-3);
        let p = params(a, b, t);
        let bp = branch_points(&p, &Default::default()).unwrap();
        prop_assert_eq!(bp.counts(), lemma_counts(&p));
    }
}

#[test]
fn critical_t_is_rejected() {
    let (t1, _) = critical_times(0.6, 0.6).unwrap();
    assert!(matches!(ModelParams::new(0.6, 0.6, t1 + 1e-7), Err(Error::CriticalTime { .. })));
    assert!(matches!(ModelParams::new(0.5, 1.0, 0.3), Err(Error::CriticalSeparation { .. })));
}

#[test]
fn branch_points_continuous_in_t() {
    let (a, b) = (0.6, 0.6);
    let (t1, t2) = critical_times(a, b).unwrap();
    let mut prev: Option<(f64, BranchPointSet)> = None;
    let m = 2000;
    for k in 1..m {
        let t = k as f64 / m as f64;
        if (t - t1).abs() <= 2e-3 || (t - t2).abs() <= 2e-3 {
            prev = None;
            continue;
        }
        let bp = branch_points(&params(a, b, t), &Default::default()).unwrap();
        if let Some((tp, q)) = prev {
            let dt = t - tp;
            for (x, y) in [(bp.z1, q.z1), (bp.z2, q.z2), (bp.z3, q.z3)] {
                assert!((x - y).abs() < 200.0 * dt, "jump at t = {t}: {y} -> {x}");
            }
            assert_eq!(bp.regime, q.regime);
        }
        prev = Some((t, bp));
    }
    // z2 closes up from the two-cut side.
    let near: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5]
        .iter()
        .map(|d| branch_points(&params(a, b, t1 - d), &Default::default()).unwrap().z2)
        .collect();
    assert!(near.windows(2).all(|w| w[1] < w[0]), "{near:?}");
    assert!(near[3] < 1e-2);
}

// ------------------------------------------------------------------ frames

#[test]
fn far_field_labels() {
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        let dev = c.far_field_deviation(c.z_far).unwrap();
        let u = t * (1.0 - t);
        let bound = 1e3 * c.scale() / (u * u * c.z_far * c.z_far);
        assert!(dev.iter().all(|d| *d <= bound), "{dev:?} > {bound:e}");
    }
    let c = curve(0.6, 0.6, 0.25);
    let z = C64::new(1e6, 0.0);
    let f = c.frame(z, None).unwrap();
    assert!((f.sheet(3).re - (0.8 + 0.5e-6)).abs() < 1e-11);
    assert!((f.sheet(4).re - (-0.8 + 0.5e-6)).abs() < 1e-11);
}

#[test]
fn im_xi1_positive_above_the_right_cut() {
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        let lo = if c.branch.regime == Regime::TwoCuts { c.branch.z2 } else { 0.0 };
        for k in 1..20 {
            let x = lo + (c.branch.z1 - lo) * k as f64 / 20.0;
            let f = c.frame(C64::new(x, 1e-8), None).unwrap();
            assert!(f.sheet(1).im > 0.0, "({a},{b},{t}) x = {x}: {:?}", f.xi);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn vieta_and_residuals(case in 0usize..7, re in -4.0f64..4.0, im in -4.0f64..4.0) {
        let (a, b, t) = CASES[case];
        let c = curve(a, b, t);
        let z = C64::new(re, im);
        prop_assume!(c.layout.distance_to_cross(z) > 1e-6);
        let f = c.frame(z, None).unwrap();
        for x in f.xi {
            prop_assert!(c.residual(z, x) <= 1e-9);
        }
        let (ds, dp) = c.vieta_defects(z, &f.xi);
        prop_assert!(ds <= 1e-9 && dp <= 1e-9, "{} {}", ds, dp);
    }
}

/// Does the sheet function jump across the point w of the cross?
fn jumps(c: &SpectralCurve, w: C64, across: C64) -> [bool; 4] {
    let p = c.frame(w + across, None).unwrap();
    let m = c.frame(w - across, None).unwrap();
    std::array::from_fn(|j| (p.xi[j] - m.xi[j]).norm() > 1e3 * across.norm())
}

#[test]
fn cut_structure_matches_the_layout() {
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        let eps = 1e-7;
        let mut probes: Vec<(C64, C64)> = vec![];
        for seg in c.layout.cross() {
            for k in 1..8 {
                let w = seg.a + (seg.b - seg.a) * (k as f64 / 8.0);
                if w.norm() < 1e-3 {
                    continue;
                }
                let across = if seg.a.im == seg.b.im { C64::new(0.0, eps) } else { C64::new(eps, 0.0) };
                probes.push((w, across));
            }
        }
        for (w, across) in probes {
            let got = jumps(&c, w, across);
            for j in 1..=4 {
                let expect = c.layout.sheet_cuts(j).iter().any(|s| s.distance(w) < 1e-12);
                assert_eq!(got[j - 1], expect, "({a},{b},{t}) sheet {j} at {w}: {got:?}");
            }
        }
    }
}

fn loop_around(center: C64, r: f64, m: usize, start: f64) -> Vec<C64> {
    (0..=m).map(|k| center + C64::from_polar(r, start + 2.0 * std::f64::consts::PI * k as f64 / m as f64)).collect()
}

#[test]
fn monodromy() {
    let c = curve(0.6, 0.6, 0.25);
    let (z1, z2) = (c.branch.z1, c.branch.z2);
    // A loop with no branch point inside gives back the same labels.
    let pts = loop_around(C64::new(0.4, 1.5), 0.5, 64, 0.0);
    let f = c.frame(pts[0], None).unwrap();
    let back = c.continue_polyline(f.xi, &pts).unwrap();
    for j in 0..4 {
        assert!((back[j] - f.xi[j]).norm() < 1e-10);
    }
    // Around z1 alone sheets 1 and 3 swap.
    let r = 0.25 * (z1 - z2);
    let pts = loop_around(C64::new(z1, 0.0), r, 64, 0.0);
    let f = c.frame(pts[0], None).unwrap();
    let back = c.continue_polyline(f.xi, &pts).unwrap();
    assert!((back[0] - f.xi[2]).norm() < 1e-10 && (back[2] - f.xi[0]).norm() < 1e-10);
    assert!((back[1] - f.xi[1]).norm() < 1e-10 && (back[3] - f.xi[3]).norm() < 1e-10);
    // Around the whole cut [z2, z1] nothing changes.
    let mid = 0.5 * (z1 + z2);
    let rx = 0.5 * (0.5 * (z1 - z2) + mid);
    let pts: Vec<C64> = Contour::ellipse(C64::new(mid, 0.0), rx, 0.3, 128).vertices.into_iter().chain([C64::new(mid + rx, 0.0)]).collect();
    let f = c.frame(pts[0], None).unwrap();
    let back = c.continue_polyline(f.xi, &pts).unwrap();
    for j in 0..4 {
        assert!((back[j] - f.xi[j]).norm() < 1e-10);
    }
}

#[test]
fn square_root_behavior_at_real_edges() {
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        let mut edges = vec![(c.branch.z1, 1.0)];
        if c.branch.regime == Regime::TwoCuts {
            edges.push((c.branch.z2, -1.0));
        }
        for (e, out) in edges {
            let star = c.branch_value(e);
            let ratios: Vec<f64> = [1e-3, 1e-4, 1e-5, 1e-6]
                .iter()
                .map(|d| (c.frame(C64::new(e + out * d, 0.0), None).unwrap().sheet(1) - star).norm() / d.sqrt())
                .collect();
            // Differences shrink like sqrt(delta): a Cauchy sequence.
            let diffs: Vec<f64> = ratios.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
            assert!(diffs.windows(2).all(|w| w[1] < 0.5 * w[0]), "{ratios:?}");
            assert!(diffs[2] < 1e-2 * ratios[3], "{ratios:?}");
        }
    }
}

#[test]
fn points_on_cuts_need_a_side() {
    let c = curve(0.6, 0.6, 0.25);
    let x = C64::new(0.5 * (c.branch.z1 + c.branch.z2), 0.0);
    assert!(matches!(c.frame(x, None), Err(Error::Path(_))));
    let up = c.frame(x, Some(Side::Above)).unwrap();
    let down = c.frame(x, Some(Side::Below)).unwrap();
    assert!((up.sheet(1) - down.sheet(1).conj()).norm() < 1e-12);
    assert!(up.sheet(1).im > 0.0);
}

// --------------------------------------------------------- parametrization

#[test]
fn parametrization_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        for _ in 0..1000 {
            let v = C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            match c.parametrize(v) {
                Ok(p) => assert!(p.residual <= 1e-10, "v = {v}: {}", p.residual),
                Err(Error::Pole { .. }) => {}
                Err(e) => panic!("v = {v}: {e}"),
            }
        }
    }
}

#[test]
fn parametrization_poles_and_infinity() {
    let c = curve(0.6, 0.6, 0.25);
    assert!(matches!(c.parametrize(C64::new(0.6, 0.0)), Err(Error::Pole { .. })));
    // v -> infinity: z stays proportional to xi and xi tends to -b/(1-t).
    let p = c.parametrize(C64::new(1e7, 0.0)).unwrap();
    assert!((p.xi.re + 0.8).abs() < 1e-6);
    let p2 = c.parametrize(C64::new(1e8, 0.0)).unwrap();
    assert!(((p.z / p.xi).norm() / (p2.z / p2.xi).norm() - 0.1).abs() < 1e-3);
    // Near each pole the image lies far out on the matching sheet.
    for (pole, sheet) in [(0.6, 1), (-0.6, 2), (0.5 / 0.6, 3)] {
        let p = c.parametrize(C64::new(pole + 1e-4, 1e-4)).unwrap();
        assert!(p.z.norm() > 1e2);
        assert_eq!(p.sheet_region, SheetRegion::Omega(sheet), "pole {pole}: z = {}", p.z);
    }
    let p = c.parametrize(C64::new(3e3, 3e3)).unwrap();
    assert_eq!(p.sheet_region, SheetRegion::Omega(4));
}

// ------------------------------------------------------------------ periods

fn half_integer_gap(v: C64) -> f64 {
    (v.re - (2.0 * v.re).round() / 2.0).abs().max(v.im.abs())
}

#[test]
fn period_around_the_right_cut() {
    let c = curve(0.6, 0.6, 0.25);
    let (z1, z2) = (c.branch.z1, c.branch.z2);
    let mid = 0.5 * (z1 + z2);
    let rx = 0.5 * (0.5 * (z1 - z2) + mid);
    let ellipse = Contour::ellipse(C64::new(mid, 0.0), rx, 0.3, 64);
    let p3 = c.period(3, &ellipse).unwrap();
    assert!((p3 - C64::new(0.5, 0.0)).norm() < 1e-8, "{p3}");
    // The circle of radius (z1 - z2)/4 crosses this very cut.
    let circle = Contour::circle(C64::new(mid, 0.0), 0.25 * (z1 - z2), 64);
    assert!(matches!(c.period(3, &circle), Err(Error::Path(_))));
}

#[test]
fn large_circle_periods() {
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        let big = Contour::circle(C64::new(0.0, 0.0), c.z_far, 64);
        let p = c.periods(&big).unwrap();
        let want = [-0.5, -0.5, 0.5, 0.5];
        for j in 0..4 {
            let v = p[j].as_ref().unwrap();
            assert!((v - C64::new(want[j], 0.0)).norm() < 1e-6, "({a},{b},{t}) sheet {}: {v}", j + 1);
        }
    }
}

#[test]
fn contour_without_cuts_has_zero_period() {
    let c = curve(0.6, 0.6, 0.45);
    let small = Contour::circle(C64::new(0.5, 1.0), 0.3, 32);
    for j in 1..=4 {
        assert!(c.period(j, &small).unwrap().norm() < 1e-10);
    }
    assert!(period_integral(1, &small, &params(0.6, 0.6, 0.45)).unwrap().abs() < 1e-10);
}

#[test]
fn periods_are_half_integers_around_every_cut() {
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        let z1 = c.branch.z1;
        let lo = if c.branch.regime == Regime::TwoCuts { c.branch.z2 } else { 0.0 };
        let z3 = c.branch.z3;
        let contours = [
            // The whole cross.
            Contour::ellipse(C64::new(0.0, 0.0), 1.5 * z1, 1.5 * z3.max(0.2), 64),
            // The right part of the real axis, in the one-cut case cutting through
            // only the vertical cut.
            Contour::ellipse(C64::new(0.5 * (z1 + lo), 0.0), 0.5 * (z1 - lo) + 0.3 * (0.5 * (z1 + lo) - 0.5 * (z1 - lo)).max(0.05 * z1), 0.3, 64),
        ];
        for con in &contours {
            for (j, p) in c.periods(con).unwrap().iter().enumerate() {
                if let Ok(v) = p {
                    assert!(half_integer_gap(*v) < 1e-6, "({a},{b},{t}) sheet {}: {v}", j + 1);
                }
            }
        }
    }
}

// ------------------------------------------------------------------ lambda

#[test]
fn lambda_base_points() {
    let c = curve(0.6, 0.6, 0.25);
    let z1 = C64::new(c.branch.z1, 0.0);
    assert!(c.lambda(1, z1, Some(Side::Above)).unwrap().norm() < 1e-14);
    // lambda_1 near z1 is small and real just right of it.
    let l = c.lambda(1, z1 + 1e-6, None).unwrap();
    assert!(l.norm() < 1e-5 && l.im.abs() < 1e-12);
    assert!(matches!(c.lambda(1, C64::new(-2.0 * c.branch.z1, 0.0), None), Err(Error::Domain(_))));
    assert!(matches!(c.lambda(1, C64::new(0.3, 0.0), None), Err(Error::Path(_))));
}

#[test]
fn real_parts_of_lambda_1_and_3_agree_on_the_cut() {
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        if c.branch.regime != Regime::TwoCuts {
            continue;
        }
        for k in 1..6 {
            let x = c.branch.z2 + (c.branch.z1 - c.branch.z2) * k as f64 / 6.0;
            let l1 = c.lambda(1, C64::new(x, 0.0), Some(Side::Above)).unwrap();
            let l3 = c.lambda(3, C64::new(x, 0.0), Some(Side::Above)).unwrap();
            assert!((l1.re - l3.re).abs() < 1e-9, "({a},{b},{t}) x = {x}: {l1} {l3}");
        }
    }
}

#[test]
fn lambda_1_asymptotics() {
    let (a, t) = (0.6, 0.25);
    let c = curve(a, 0.6, t);
    let rest = |z: f64| {
        let l = c.lambda(1, C64::new(z, 0.0), None).unwrap();
        l.re - (z * z / (2.0 * t * (1.0 - t)) - a * z / t - 0.5 * z.ln())
    };
    let v: Vec<f64> = [1e2, 1e3, 1e4, 1e5].iter().map(|&z| rest(z)).collect();
    let d: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(d[2] < 1e-4, "{v:?}");
    // The next term is O(1/z): each decade shrinks the increment tenfold.
    for w in d.windows(2) {
        assert!((w[0] / w[1] - 10.0).abs() < 1.0, "{d:?}");
    }
}

#[test]
fn matching_constant_is_imaginary() {
    for &(a, b, t) in &CASES {
        let c = curve(a, b, t);
        let k = c.lambda_constant().unwrap();
        assert!(k.re.abs() < 1e-9, "({a},{b},{t}): {k}");
        let n = (k.im / std::f64::consts::PI).round();
        assert!((k.im - n * std::f64::consts::PI).abs() < 1e-9);
    }
}
