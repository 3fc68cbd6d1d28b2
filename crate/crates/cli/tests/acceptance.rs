//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Every check is judged by an oracle written
//! here, independently of the engine code it checks.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use prefmobo::acquisition::expected_improvement;
use prefmobo::engine::{ground_truth_dtlz2, DmMode, Method, RunLog, SessionConfig};
use prefmobo::problem::{make_dtlz2, Bounds};
use prefmobo::sampling::{sample_simplex_uniform, SeededRng};
use prefmobo::surrogate::{fit_gp, sample_start, GpConfig, Kernel, MarginalLikelihood};
use prefmobo::tricand::{candidates, delaunay, simplex_volume, Triangulation};
use prefmobo_cli::{run_experiment, ExperimentSpec};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failures += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

// ---------------------------------------------------------------- oracles

/// Augmented Tchebycheff utility with identity normalization.
fn utility(w: &[f64], y: &[f64], rho: f64) -> f64 {
    let terms: Vec<f64> = w.iter().zip(y).map(|(a, b)| a * b).collect();
    terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + rho * terms.iter().sum::<f64>()
}

/// Optimal utility over the DTLZ2 front `(cos t, sin t)`. Away from the kink
/// `w1 cos t = w2 sin t` the utility is a positive combination of `cos` and
/// `sin`, hence concave in `t`, so the minimum is at `0`, the kink or `pi/2`.
fn closed_form_u_star(w: &[f64], rho: f64) -> f64 {
    let kink = w[0].atan2(w[1]);
    [0.0, kink, FRAC_PI_2]
        .iter()
        .map(|&t| utility(w, &[t.cos(), t.sin()], rho))
        .fold(f64::INFINITY, f64::min)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn hidden_weight(log: &RunLog) -> Vec<f64> {
    match &log.config.dm_mode {
        DmMode::Simulated { weight } => weight.as_slice().to_vec(),
        DmMode::Interactive => panic!("acceptance runs use a simulated decision maker"),
    }
}

/// Best-so-far regret after each evaluation, recomputed from the raw outputs.
fn oracle_oc_series(log: &RunLog) -> Vec<f64> {
    let w = hidden_weight(log);
    let u_star = closed_form_u_star(&w, log.config.rho);
    let mut best = f64::INFINITY;
    log.evaluations
        .iter()
        .map(|r| {
            best = best.min(utility(&w, &r.y, log.config.rho) - u_star);
            best
        })
        .collect()
}

struct OcSummary {
    after_init: Vec<f64>,
    last: Vec<f64>,
    /// Largest gap between logged and recomputed best-so-far values.
    log_gap: f64,
}

fn oc_summary(logs: &[RunLog]) -> OcSummary {
    let mut s = OcSummary {
        after_init: vec![],
        last: vec![],
        log_gap: 0.0,
    };
    for log in logs {
        let series = oracle_oc_series(log);
        let n_init = log.config.p_space + log.config.p_init;
        s.after_init.push(series[n_init.min(series.len()) - 1]);
        s.last.push(*series.last().unwrap());
        for (r, v) in log.evaluations.iter().zip(&series) {
            s.log_gap = s.log_gap.max((r.best_oc.unwrap_or(f64::NAN) - v).abs());
        }
    }
    s
}

fn dm_violations(logs: &[RunLog]) -> (usize, usize) {
    let (mut checked, mut violations) = (0, 0);
    for log in logs {
        let w = hidden_weight(log);
        for rec in &log.interactions {
            checked += 1;
            let best = rec
                .front
                .iter()
                .map(|&i| {
                    let y = &log.evaluations.iter().find(|r| r.eval_index == i).expect("front member was evaluated").y;
                    (i, utility(&w, y, log.config.rho))
                })
                .fold(None, |acc: Option<(usize, f64)>, (i, u)| match acc {
                    Some((j, v)) if v < u || (v == u && j < i) => Some((j, v)),
                    _ => Some((i, u)),
                });
            if best.map(|b| b.0) != Some(rec.chosen) {
                violations += 1;
            }
        }
    }
    (checked, violations)
}

fn circumsphere(pts: &[&[f64]]) -> (Vec<f64>, f64) {
    let d = pts[0].len();
    let a = DMatrix::from_fn(d, d, |r, c| 2.0 * (pts[r + 1][c] - pts[0][c]));
    let b = DVector::from_fn(d, |r, _| {
        pts[r + 1].iter().map(|v| v * v).sum::<f64>() - pts[0].iter().map(|v| v * v).sum::<f64>()
    });
    let c = a.lu().solve(&b).expect("non-degenerate simplex");
    let r2 = pts[0].iter().zip(c.iter()).map(|(p, q)| (p - q).powi(2)).sum();
    (c.iter().copied().collect(), r2)
}

fn barycentric(simplex: &[&[f64]], p: &[f64]) -> Vec<f64> {
    let d = p.len();
    let a = DMatrix::from_fn(d, d, |r, c| simplex[c + 1][r] - simplex[0][r]);
    let b = DVector::from_fn(d, |r, _| p[r] - simplex[0][r]);
    let l = a.lu().solve(&b).expect("non-degenerate simplex");
    let mut out = vec![1.0 - l.sum()];
    out.extend(l.iter());
    out
}

/// Determinant-based simplex volume, independent of the library's.
fn volume(simplex: &[&[f64]]) -> f64 {
    let d = simplex[0].len();
    let m = DMatrix::from_fn(d, d, |r, c| simplex[c + 1][r] - simplex[0][r]);
    m.determinant().abs() / (1..=d).product::<usize>() as f64
}

fn hull_area_2d(points: &[Vec<f64>]) -> f64 {
    let mut p: Vec<(f64, f64)> = points.iter().map(|v| (v[0], v[1])).collect();
    p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    let hull: Vec<_> = lower.into_iter().chain(upper).collect();
    let n = hull.len();
    (0..n).map(|i| hull[i].0 * hull[(i + 1) % n].1 - hull[(i + 1) % n].0 * hull[i].1).sum::<f64>().abs() / 2.0
}

/// Brute-force hull facets in 3-D as `(vertices, outward normal, offset)`.
fn hull_faces_3d(points: &[Vec<f64>]) -> Vec<([usize; 3], [f64; 3], f64)> {
    let n = points.len();
    let mut faces = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (&points[i], &points[j], &points[k]);
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let nrm = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                let off = nrm[0] * a[0] + nrm[1] * a[1] + nrm[2] * a[2];
                let (mut pos, mut neg) = (false, false);
                for (m, p) in points.iter().enumerate() {
                    if m != i && m != j && m != k {
                        let s = nrm[0] * p[0] + nrm[1] * p[1] + nrm[2] * p[2] - off;
                        pos |= s > 1e-12;
                        neg |= s < -1e-12;
                    }
                }
                if !(pos && neg) {
                    let sg = if pos { -1.0 } else { 1.0 };
                    faces.push(([i, j, k], [sg * nrm[0], sg * nrm[1], sg * nrm[2]], sg * off));
                }
            }
        }
    }
    faces
}

fn hull_volume_3d(points: &[Vec<f64>], faces: &[([usize; 3], [f64; 3], f64)]) -> f64 {
    let c: Vec<f64> = (0..3).map(|k| points.iter().map(|p| p[k]).sum::<f64>() / points.len() as f64).collect();
    faces
        .iter()
        .map(|(f, _, _)| volume(&[points[f[0]].as_slice(), &points[f[1]], &points[f[2]], &c]))
        .sum()
}

// --------------------------------------------------------------- criteria

fn spec(d_in: usize, method: Method, out: &Path) -> ExperimentSpec {
    // every protocol parameter at its default
    ExperimentSpec {
        template: SessionConfig::new("dtlz2", d_in, 2, method, 100),
        repetitions: 10,
        seed_base: 0,
        out_dir: out.to_path_buf(),
    }
}

fn phi_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn phi_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn ei_against_monte_carlo(report: &mut Report) {
    let mut rng = SeededRng::new(7_001);
    let draws = 10_000_000;
    let (mut worst_z, mut failures, mut no_hits) = (0.0f64, 0, 0);
    for _ in 0..50 {
        let mu = rng.random_range(-2.0..2.0);
        let s = rng.random_range(0.05..2.0);
        let f_min = rng.random_range(-2.0..2.0);
        let analytic = expected_improvement(mu, s, f_min).unwrap();
        let normal = Normal::new(mu, s).unwrap();
        let (mut sum, mut hits) = (0.0, 0usize);
        for _ in 0..draws {
            let v = (f_min - normal.sample(&mut rng)).max(0.0);
            sum += v;
            hits += usize::from(v > 0.0);
        }
        let mean = sum / draws as f64;
        // standard error from the exact variance of the improvement:
        // E[I^2] = (a^2 + s^2) Phi(a/s) + a s phi(a/s), a = f_min - mu
        let a = f_min - mu;
        let z = a / s;
        let second = (a * a + s * s) * phi_cdf(z) + a * s * phi_pdf(z);
        let exact_mean = a * phi_cdf(z) + s * phi_pdf(z);
        let se = ((second - exact_mean * exact_mean).max(0.0) / draws as f64).sqrt();
        let diff = (analytic - mean).abs();
        let dev = if diff == 0.0 { 0.0 } else { diff / se };
        worst_z = worst_z.max(dev);
        if dev > 3.0 {
            failures += 1;
        }
        if hits == 0 {
            no_hits += 1;
        }
    }
    report.line(
        "EI vs Monte-Carlo (50 triples, 1e7 draws)",
        failures == 0,
        format!("{failures} outside 3 SE; worst |diff| = {worst_z:.2} SE; {no_hits} triples with no improving draw"),
    );
}

fn gp_sanity(report: &mut Report) {
    let mut rng = SeededRng::new(7_002);
    let mut worst_interp = 0.0f64;
    for _ in 0..10 {
        let d = rng.random_range(1..=5usize);
        let n = rng.random_range(10..=40usize);
        let bounds = Bounds::unit(d);
        let pairs: Vec<(Vec<f64>, f64)> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                let y = (3.0 * x[0]).sin() + x.iter().map(|v| v * v).sum::<f64>();
                (x, y)
            })
            .collect();
        let gp = fit_gp(&pairs, &bounds, &GpConfig::default(), &mut rng).unwrap();
        for (x, y) in &pairs {
            worst_interp = worst_interp.max((gp.predict(x).0 - y).abs());
        }
    }

    let h = 1e-5;
    let mut worst_rel = 0.0f64;
    for setting in 0..20 {
        let d = rng.random_range(1..=4usize);
        let n = rng.random_range(5..=25usize);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let kernel = if setting % 2 == 0 { Kernel::Matern52 } else { Kernel::SquaredExponential };
        let lik = MarginalLikelihood::new(x, &y, kernel, 1e-6);
        let theta = sample_start(&Bounds::unit(d), &mut rng);
        let (_, grad) = lik.value_and_gradient(&theta).unwrap();
        for i in 0..theta.len() {
            let (mut up, mut dn) = (theta.clone(), theta.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (lik.value(&up).unwrap() - lik.value(&dn).unwrap()) / (2.0 * h);
            // relative to the larger magnitude; near-zero slopes are compared
            // on a 1e-3 scale because central differences cannot resolve less
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-3);
            worst_rel = worst_rel.max(rel);
        }
    }
    report.line(
        "GP sanity (interpolation 1e-6, gradient 1e-4 rel at 20 settings)",
        worst_interp <= 1e-6 && worst_rel <= 1e-4,
        format!("max interpolation error {worst_interp:.2e}, max gradient rel error {worst_rel:.2e}"),
    );
}

fn check_triangulation(points: &[Vec<f64>], tri: &Triangulation, hull_volume: f64, outside_hull: &dyn Fn(&[f64]) -> bool) -> Result<(), String> {
    let verts = tri.scaled_vertices();
    let simplex = |s: &[usize]| -> Vec<&[f64]> { s.iter().map(|&v| verts[v].as_slice()).collect() };
    for s in tri.simplices() {
        let (c, r2) = circumsphere(&simplex(s));
        let r = r2.sqrt();
        for p in points {
            let dist = p.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if dist < r - 1e-9 {
                return Err(format!("point inside circumsphere of {s:?}"));
            }
        }
    }
    let total: f64 = tri.simplices().iter().map(|s| volume(&simplex(s))).sum();
    let lib_total: f64 = tri.simplices().iter().map(|s| simplex_volume(&simplex(s))).sum();
    if (total - hull_volume).abs() > 1e-9 || (lib_total - hull_volume).abs() > 1e-9 {
        return Err(format!("volume {total} vs hull {hull_volume}"));
    }
    let cands = candidates(tri);
    if cands.interior.len() != tri.simplices().len() {
        return Err("one interior candidate per simplex expected".into());
    }
    for (x, &s) in cands.interior.iter().zip(&cands.interior_simplex) {
        if barycentric(&simplex(&tri.simplices()[s]), x).iter().any(|&l| l <= 0.0) {
            return Err(format!("interior candidate {x:?} outside its simplex"));
        }
    }
    for x in &cands.fringe {
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(format!("fringe candidate {x:?} out of bounds"));
        }
        if !outside_hull(x) {
            return Err(format!("fringe candidate {x:?} inside the hull"));
        }
    }
    Ok(())
}

fn delaunay_suite(report: &mut Report) {
    let mut rng = SeededRng::new(7_003);
    let mut errors = Vec::new();
    let (mut fringe, mut interior) = (0, 0);
    for set in 0..120 {
        let d = if set < 100 { 2 } else { 3 };
        let n = if d == 2 { 50 } else { 30 };
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        let tri = match delaunay(&points, &Bounds::unit(d)) {
            Ok(t) => t,
            Err(e) => {
                errors.push(format!("set {set}: {e}"));
                continue;
            }
        };
        let c = candidates(&tri);
        fringe += c.fringe.len();
        interior += c.interior.len();
        let outcome = if d == 2 {
            let hull = hull_area_2d(&points);
            let outside = |x: &[f64]| {
                let mut with = points.clone();
                with.push(x.to_vec());
                hull_area_2d(&with) > hull + 1e-12
            };
            check_triangulation(&points, &tri, hull, &outside)
        } else {
            let faces = hull_faces_3d(&points);
            let hull = hull_volume_3d(&points, &faces);
            let outside = |x: &[f64]| faces.iter().any(|(_, nrm, off)| nrm[0] * x[0] + nrm[1] * x[1] + nrm[2] * x[2] - off > 1e-12);
            check_triangulation(&points, &tri, hull, &outside)
        };
        if let Err(e) = outcome {
            errors.push(format!("set {set}: {e}"));
        }
    }
    report.line(
        "Delaunay property suite (100 planar n=50, 20 spatial n=30)",
        errors.is_empty(),
        if errors.is_empty() {
            format!("{interior} interior and {fringe} fringe candidates checked")
        } else {
            errors.join("; ")
        },
    );
}

fn ground_truth_stability(report: &mut Report) {
    let mut rng = SeededRng::new(7_004);
    let problem = make_dtlz2(3, 2).unwrap();
    let rho = 0.05;
    let (mut worst, mut worst_closed) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let w = sample_simplex_uniform(2, &mut rng);
        let coarse = ground_truth_dtlz2(2, &w, rho, 100_000).unwrap();
        let fine = ground_truth_dtlz2(2, &w, rho, 1_000_000).unwrap();
        let u = |gt: &prefmobo::engine::GroundTruth| utility(w.as_slice(), &problem.objectives(&gt.x_star(3)), rho);
        worst = worst.max((u(&coarse) - u(&fine)).abs());
        worst_closed = worst_closed.max((coarse.u_star - closed_form_u_star(w.as_slice(), rho)).abs());
    }
    report.line(
        "Ground-truth stability (1e5 vs 1e6 samples, 20 weights)",
        worst < 1e-6,
        format!("max |diff| {worst:.2e}; max gap to closed form {worst_closed:.2e}"),
    );
}

fn budget_conservation(report: &mut Report, logs: &[&RunLog]) {
    let mut problems = Vec::new();
    for (k, log) in logs.iter().enumerate() {
        let cfg = &log.config;
        let l = &log.ledger;
        if l.spent_evaluations + cfg.cost_dm * l.spent_interactions > cfg.total_budget {
            problems.push(format!("run {k} overspent"));
        }
        if l.spent_evaluations != log.evaluations.len() || l.spent_interactions != log.interactions.len() {
            problems.push(format!("run {k} ledger disagrees with its log"));
        }
        let expected = 10 * cfg.d_in + 10 * cfg.d_out;
        // evaluations made before the first interaction was charged
        let initial = log.interactions.first().map_or(log.evaluations.len(), |r| r.budget_spent - cfg.cost_dm);
        if initial != expected {
            problems.push(format!("run {k}: |D| after initialization {initial}, expected {expected}"));
        }
    }
    report.line(
        "Budget conservation and initialization size",
        problems.is_empty(),
        if problems.is_empty() {
            format!("{} runs checked", logs.len())
        } else {
            problems.join("; ")
        },
    );
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let dir = tempfile::tempdir().unwrap();

    // simulated-DM experiments first; later criteria reuse their logs
    let started = Instant::now();
    let wape3 = run_experiment(&spec(3, Method::Wape, &dir.path().join("wape_d3"))).unwrap();
    let elapsed = started.elapsed();
    let s = oc_summary(&wape3.logs);
    let (init, last) = (median(&s.after_init), median(&s.last));
    report.line(
        "WAPE convergence (d_in=3, budget 100, 10 reps)",
        last <= 0.25 * init && elapsed < Duration::from_secs(600),
        format!(
            "median OC after initialization {init:.4e}, at budget end {last:.4e} (ratio {:.3}); {:.0}s; log/oracle gap {:.1e}",
            last / init,
            elapsed.as_secs_f64(),
            s.log_gap
        ),
    );

    let wape5 = run_experiment(&spec(5, Method::Wape, &dir.path().join("wape_d5"))).unwrap();
    let tripe5 = run_experiment(&spec(5, Method::Tripe, &dir.path().join("tripe_d5"))).unwrap();
    let (w5, t5) = (oc_summary(&wape5.logs), oc_summary(&tripe5.logs));
    let paired = wape5
        .logs
        .iter()
        .zip(&tripe5.logs)
        .all(|(a, b)| a.config.seed == b.config.seed && a.config.dm_mode == b.config.dm_mode);
    let (mw, mt) = (median(&w5.last), median(&t5.last));
    report.line(
        "TRIPE vs WAPE at d_in=5 (10 paired seeds)",
        paired && mw <= mt,
        format!("median final OC WAPE {mw:.4e}, TRIPE {mt:.4e}"),
    );

    let rerun = run_experiment(&spec(3, Method::Wape, &dir.path().join("wape_d3_again"))).unwrap();

    let all: Vec<&RunLog> = [&wape3.logs, &wape5.logs, &tripe5.logs, &rerun.logs].into_iter().flatten().collect();
    let owned: Vec<RunLog> = all.iter().map(|l| (*l).clone()).collect();
    let (checked, violations) = dm_violations(&owned);
    report.line(
        "Simulated-DM oracle",
        violations == 0 && checked > 0,
        format!("{violations} violations in {checked} interactions"),
    );

    ei_against_monte_carlo(&mut report);
    gp_sanity(&mut report);
    delaunay_suite(&mut report);
    ground_truth_stability(&mut report);

    let a = std::fs::read(&wape3.aggregate_path).unwrap();
    let b = std::fs::read(&rerun.aggregate_path).unwrap();
    report.line(
        "Determinism (aggregate CSV, two executions)",
        a == b,
        format!("{} vs {} bytes, {}", a.len(), b.len(), if a == b { "identical" } else { "different" }),
    );

    budget_conservation(&mut report, &all);

    println!("{} criteria failed", report.failures);
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
