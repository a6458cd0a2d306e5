//! Acceptance criteria, one test each. Every test writes a single
//! `PASS`/`FAIL` line to stderr (outside the test harness capture) before
//! asserting.

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vilenkin_core::atoms::{quasilocality_sample, weak_type_ratio, Region};
use vilenkin_core::experiments::{
    decomposition_errors, means_agreement, r_factor_error, random_weak_ratios, sample_points, shift_identity_error,
    transform_bench,
};
use vilenkin_core::kernels::{constant_drift, estimate_scan_depths, EstimateId, KernelLab, SRange};
use vilenkin_core::lebesgue::{
    classify_points, point_class, v_component_at, w_sequence_at, PointClass, VOperator, Verdict, VerdictRule,
};
use vilenkin_core::summability::{means, Convention, MeansMethod};
use vilenkin_core::testfns::TestFunction;
use vilenkin_core::transform::{forward, inverse, naive_forward, naive_inverse};
use vilenkin_core::{Complex64, GroupStructure, SampledFunction};

fn structure(radices: &[usize], depth: usize) -> Arc<GroupStructure> {
    Arc::new(GroupStructure::new(radices, depth).unwrap())
}

fn report(id: u32, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{status} criterion {id:>2}: {detail}");
}

fn random_2d(g: &Arc<GroupStructure>, rng: &mut ChaCha8Rng) -> SampledFunction {
    let v = (0..g.size() * g.size())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    SampledFunction::new(g.clone(), 2, v).unwrap()
}

#[test]
fn criterion_01_decomposition_exactness() {
    let start = Instant::now();
    let g = structure(&[2, 3, 2, 3], 4);
    let lab = KernelLab::new(g.clone()).unwrap();
    let errors = decomposition_errors(&lab).unwrap();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let ok = errors.len() == 4 && worst <= 1e-9 && elapsed < Duration::from_secs(30);
    report(1, ok, &format!("max |M_A K_(M_A) - rhs| = {worst:.2e} over A = 1..4 on 36x36 in {elapsed:.2?}"));
    assert!(ok);
}

#[test]
fn criterion_02_shift_identity() {
    let start = Instant::now();
    let g = structure(&[2, 3, 2], 3);
    let (cases, worst) = shift_identity_error(&g).unwrap();
    let elapsed = start.elapsed();
    let ok = worst <= 1e-10 && elapsed < Duration::from_secs(10);
    report(2, ok, &format!("{cases} cases, max error {worst:.2e} in {elapsed:.2?}"));
    assert!(ok);
}

#[test]
fn criterion_03_r_factor_closed_form() {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for radices in [vec![2], vec![3], vec![2, 3], vec![3, 2, 2], vec![2, 3, 2, 3]] {
        for depth in 1..=4 {
            let (c, w) = r_factor_error(&GroupStructure::new(&radices, depth).unwrap()).unwrap();
            cases += c;
            worst = worst.max(w);
        }
    }
    let ok = worst <= 1e-12;
    report(3, ok, &format!("{cases} cases up to depth 4, max |product - closed| = {worst:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_04_integral_representation() {
    let start = Instant::now();
    // the 6x6 grid of depth 2 and the 36x36 grid of depth 4
    let mut worst: f64 = 0.0;
    let mut orders = 0;
    for depth in [2, 4] {
        let (n, w) = means_agreement(&structure(&[2, 3], depth), 17).unwrap();
        orders += n;
        worst = worst.max(w);
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-9 && elapsed < Duration::from_secs(60);
    report(4, ok, &format!("{orders} orders, max method discrepancy {worst:.2e} in {elapsed:.2?}"));
    assert!(ok);
}

#[test]
fn criterion_05_transform_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for (radices, depth) in [(vec![2], 6), (vec![2, 3, 2, 3], 4), (vec![3], 3)] {
        let g = structure(&radices, depth);
        for arity in [1, 2] {
            let len = g.size().pow(arity as u32);
            let v = (0..len)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = SampledFunction::new(g.clone(), arity, v).unwrap();
            let s = forward(&f);
            worst = worst.max(inverse(&s).max_abs_diff(&f).unwrap());
            let energy = f.lp_norm(2.0).unwrap().powi(2);
            worst = worst.max((s.energy() - energy).abs());
            let naive = naive_forward(&f);
            let diff = s.coeffs().iter().zip(naive.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst = worst.max(diff);
            worst = worst.max(naive_inverse(&s).max_abs_diff(&inverse(&s)).unwrap());
        }
    }
    let bench = transform_bench(&structure(&[2, 3, 2, 3, 2, 3, 2, 3], 8), 3, 5).unwrap();
    let ok = worst <= 1e-12 && bench.size == 1296 && bench.speedup >= 10.0 && bench.max_error <= 1e-12;
    report(
        5,
        ok,
        &format!("max error {worst:.2e}; fast path {:.1}x naive at M = {}", bench.speedup, bench.size),
    );
    assert!(ok);
}

#[test]
fn criterion_06_w_equals_v() {
    let g = structure(&[2, 3, 2], 3);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let f = random_2d(&g, &mut rng);
        for (x, y) in sample_points(&g, 20, &mut rng) {
            let fxy = f.at2(x, y);
            let h = f.map(|v| Complex64::new((v - fxy).norm(), 0.0));
            let w = w_sequence_at(&f, x, y);
            for (n, wn) in w.iter().enumerate() {
                let total: Complex64 = (1..=4).map(|i| v_component_at(&h, x, y, n, i)).sum();
                worst = worst.max((total - wn).norm());
            }
        }
    }
    let ok = worst <= 1e-10;
    report(6, ok, &format!("20 functions x 20 points x n = 0..3, max |W - sum V| = {worst:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_07_lebesgue_points_of_indicator() {
    let start = Instant::now();
    let g = structure(&[2], 6);
    let f = TestFunction::Indicator { n: 2, cx: 0, cy: 0 }.sample(&g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let all: Vec<(usize, usize)> = (0..g.size()).flat_map(|x| (0..g.size()).map(move |y| (x, y))).collect();
    let pick = |class: PointClass, count: usize, rng: &mut ChaCha8Rng| -> Vec<(usize, usize)> {
        let pool: Vec<(usize, usize)> = all.iter().copied().filter(|&(x, y)| point_class(&f, x, y) == class).collect();
        pool.choose_multiple(rng, count).copied().collect()
    };
    let off = pick(PointClass::Off, 50, &mut rng);
    let interface = pick(PointClass::Interface, 20, &mut rng);
    let rule = VerdictRule::default();
    let off_reports = classify_points(&f, &off, &rule).unwrap();
    let on_reports = classify_points(&f, &interface, &rule).unwrap();
    let off_ok = off_reports.iter().all(|r| {
        let l = r.w.len();
        r.w[l - 1] < 0.02 && r.w[l - 3..].windows(2).all(|p| p[1] <= p[0]) && r.sigma_err[l - 1] < 0.05
    });
    let worst_off_w = off_reports.iter().map(|r| *r.w.last().unwrap()).fold(0.0, f64::max);
    let worst_sigma = off_reports.iter().map(|r| *r.sigma_err.last().unwrap()).fold(0.0, f64::max);
    let min_on = on_reports.iter().flat_map(|r| r.w.iter().cloned()).fold(f64::INFINITY, f64::min);
    let converging = off_reports.iter().filter(|r| r.verdict == Verdict::Converging).count();
    let elapsed = start.elapsed();
    let ok = off_ok && min_on > 0.2 && elapsed < Duration::from_secs(300);
    report(
        7,
        ok,
        &format!(
            "off-interface: max W_L {worst_off_w:.4}, max sigma error {worst_sigma:.4}, {converging}/50 converging; interface: min W {min_on:.4} over {} points; {elapsed:.2?}",
            interface.len()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_polynomial_exactness() {
    let g = structure(&[2, 3], 3);
    let size = g.size();
    let polys = [
        "character:1,0",
        "character:1,1",
        "polynomial:0,0,1;1,1,0.5",
        "polynomial:2,1,1;0,5,-0.25",
    ];
    let mut worst_w: f64 = 0.0;
    let mut worst_multiplier: f64 = 0.0;
    let mut depths = Vec::new();
    for spec in polys {
        let tf: TestFunction = spec.parse().unwrap();
        let d = tf.spectral_depth(&g).unwrap();
        assert!(d < g.depth());
        depths.push(d);
        let f = tf.sample(&g).unwrap();
        for x in 0..size {
            for y in 0..size {
                let w = w_sequence_at(&f, x, y);
                for n in d + 1..=g.depth() {
                    worst_w = worst_w.max(w[n]);
                }
            }
        }
        let sigma = means(&f, size, MeansMethod::Direct, Convention::ZeroBased).unwrap();
        let mut expected = forward(&f);
        expected.apply_multiplier(|a, b| (size as f64 - 1.0 - a.max(b) as f64).max(0.0) / size as f64);
        worst_multiplier = worst_multiplier.max(sigma.max_abs_diff(&inverse(&expected)).unwrap());
    }
    let ok = worst_w <= 1e-10 && worst_multiplier <= 1e-10;
    report(
        8,
        ok,
        &format!(
            "spectral depths {depths:?}: max W_n for n > d is {worst_w:.4e}; sigma_(M_L) multiplier error {worst_multiplier:.2e}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_09_atom_vanishing_patterns() {
    let g = structure(&[2, 3], 4);
    let op = VOperator::new(g.clone()).unwrap();
    let mut below: f64 = 0.0;
    // worst ratio |V^(i)| / tolerance per region and component
    let mut cc = [0.0f64; 4];
    let mut cs = [0.0f64; 4];
    let mut failures = 0;
    for n in [1, 2] {
        let rep = quasilocality_sample(&op, 1.0, n, (0, 0), 900, 100).unwrap();
        for row in &rep.atoms {
            let v = &row.vanishing;
            below = below.max(v.below_support_depth / v.tolerance);
            for i in 0..4 {
                cc[i] = cc[i].max(v.by_region.get(Region::ComplementComplement)[i] / v.tolerance);
                cs[i] = cs[i].max(v.by_region.get(Region::ComplementSupport)[i] / v.tolerance);
            }
            let ok = v.below_depth_holds()
                && v.components_vanish(Region::ComplementComplement, &[3, 4])
                && v.components_vanish(Region::ComplementSupport, &[2, 4]);
            if !ok {
                failures += 1;
            }
        }
    }
    let ok = failures == 0;
    report(
        9,
        ok,
        &format!(
            "200 atoms, {failures} violating; in units of the tolerance: n<N {below:.2e}, cc V3 {:.2e} V4 {:.2e}, cs V2 {:.2e} V4 {:.2e} (cs V3 {:.2e})",
            cc[2], cc[3], cs[1], cs[3], cs[2]
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_10_quasilocality_monitor() {
    let g = structure(&[2, 3], 4);
    let op = VOperator::new(g.clone()).unwrap();
    let mut spreads = Vec::new();
    let mut max_weak: f64 = 0.0;
    let mut scale_exact = true;
    for p in [0.6, 0.8, 1.0] {
        let mut maxima = Vec::new();
        for n in [1, 2, 3] {
            let rep = quasilocality_sample(&op, p, n, (0, 0), 1000, 100).unwrap();
            maxima.push(rep.max_by_region.max());
            for row in &rep.atoms {
                max_weak = max_weak.max(row.weak_ratio);
            }
        }
        let hi = maxima.iter().cloned().fold(0.0, f64::max);
        let lo = maxima.iter().cloned().fold(f64::INFINITY, f64::min);
        spreads.push((p, hi / lo, maxima));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..10 {
        let f = random_2d(&g, &mut rng);
        let r1 = weak_type_ratio(&op, &f).unwrap();
        let r2 = weak_type_ratio(&op, &f.scale(Complex64::new(2.0, 0.0))).unwrap();
        scale_exact &= r1 == r2;
        max_weak = max_weak.max(r1);
    }
    let by_depth: Vec<f64> = [3, 4]
        .iter()
        .map(|&l| random_weak_ratios(&structure(&[2, 3], l), 10, 11).unwrap().into_iter().fold(0.0, f64::max))
        .collect();
    let spread_ok = spreads.iter().all(|s| s.1 < 2.0);
    let ok = spread_ok && max_weak.is_finite() && scale_exact;
    let detail: Vec<String> = spreads
        .iter()
        .map(|(p, s, m)| format!("p={p}: {s:.2}x {m:.3?}"))
        .collect();
    report(
        10,
        ok,
        &format!(
            "spread across N=1..3: {}; max weak ratio {max_weak:.3}, random f by L=3,4 {by_depth:.3?}, scale-invariant {scale_exact}",
            detail.join(", ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_11_estimate_monitors() {
    let mut lines = Vec::new();
    let mut ok = true;
    for id in EstimateId::ALL {
        let reports = estimate_scan_depths(&[2, 3], &[3, 4], id, SRange::ThroughA).unwrap();
        let mismatches: usize = reports.iter().map(|r| r.zero_mismatches()).sum();
        let finite = reports.iter().all(|r| r.all_finite());
        let drift = constant_drift(&reports);
        let stable = drift.is_some_and(|d| d < 0.10);
        ok &= mismatches == 0 && finite && stable;
        lines.push(format!(
            "{} {:.3}->{:.3} (drift {:.1}%, {mismatches} zero violations)",
            id.name(),
            reports[0].observed_constant,
            reports[1].observed_constant,
            drift.map_or(f64::NAN, |d| 100.0 * d)
        ));
    }
    report(11, ok, &lines.join("; "));
    assert!(ok);
}

#[test]
fn criterion_12_means_of_constants() {
    let mut worst: f64 = 0.0;
    let c = Complex64::new(1.75, -0.5);
    for (radices, depth) in [(vec![2, 3], 2), (vec![2, 3], 3), (vec![2], 4)] {
        let g = structure(&radices, depth);
        let f = SampledFunction::constant(g.clone(), 2, c).unwrap();
        for n in 1..=g.size() {
            for method in MeansMethod::ALL {
                let zero = means(&f, n, method, Convention::ZeroBased).unwrap();
                let one = means(&f, n, method, Convention::OneBased).unwrap();
                let expected = c * (n as f64 - 1.0) / n as f64;
                for (a, b) in zero.values().iter().zip(one.values()) {
                    worst = worst.max((a - expected).norm()).max((b - c).norm());
                }
            }
        }
    }
    let ok = worst <= 1e-12;
    report(12, ok, &format!("all n <= M_L, three methods, both conventions: max error {worst:.2e}"));
    assert!(ok);
}
