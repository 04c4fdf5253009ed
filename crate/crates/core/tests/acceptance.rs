//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::Rng;

use moebiuskit::asymptotic::{connector_experiment, AsymptoticError, gauss_sample, trace_asymptotic, ConnectorOptions, Preset};
use moebiuskit::bound::{alpha, beta, minimize_bound, t0, vee_length, vee_lower_bound, TriangleInstance};
use moebiuskit::constructions::{limit_study, measure_strip, smooth_family};
use moebiuskit::line_geometry::{dual_dot, line_invariants, to_study, Vec3};
use moebiuskit::strip_model::{cut_along, FlatMoebius, PreBend};
use moebiuskit::t_pattern::{
    find_t_pattern_with, lemma_tt_solve, meridian_certificate, CircleMap, SearchOptions,
};
use moebiuskit::verify::{
    equivariance, grid_oracle, property_rng, random_line, trapezoid_identities, trimming_rescale, ClosedScrew,
};
use moebiuskit::Exec;

const SEED: u64 = 2024;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn exec() -> Exec {
    Exec::default()
}

fn bound_constants() -> Outcome {
    let s = 2.0 * 3f64.sqrt();
    match minimize_bound(0.0, 2.0, 1e-12) {
        Ok((t, v)) => {
            let et = (t - 1.0 / 3f64.sqrt()).abs();
            let ev = (v - 3f64.sqrt()).abs();
            let ea = (alpha(t0()) - s).abs().max((beta(t0()) - s).abs());
            outcome(
                et <= 1e-9 && ev <= 1e-12 && ea <= 1e-12,
                format!("t* = {t:.12}, value = {v:.13}, |alpha(t0)-2sqrt3|,|beta(t0)-2sqrt3| <= {ea:.1e}"),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn monotonicity() -> Outcome {
    let mut rng = property_rng(SEED, "acceptance/monotone");
    let (mut va, mut vb) = (0, 0);
    for _ in 0..10_000 {
        let a: f64 = rng.gen_range(1e-6..20.0);
        let b: f64 = rng.gen_range(1e-6..20.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if lo == hi {
            continue;
        }
        if alpha(lo) >= alpha(hi) {
            va += 1;
        }
        let (l, h) = (lo * 2.0 - 20.0, hi * 2.0 - 20.0);
        if beta(l) <= beta(h) {
            vb += 1;
        }
    }
    outcome(va == 0 && vb == 0, format!("alpha violations {va}, beta violations {vb} over 10^4 pairs"))
}

fn vee_oracle() -> Outcome {
    let mut rng = property_rng(SEED, "acceptance/vee");
    let n = 100_000;
    let (mut below, mut near, mut stray) = (0, 0, 0);
    let mut min_slack = f64::INFINITY;
    for k in 0..n {
        let t: f64 = rng.gen_range(-3.0..3.0);
        let base = (1.0 + t * t).sqrt();
        let (h, apex) = if k % 997 == 0 {
            (1.0, base / 2.0)
        } else {
            (1.0 + rng.gen_range(0.0..2.0f64).powi(3), rng.gen_range(-base..2.0 * base))
        };
        let tri = TriangleInstance::new(base, h, apex).expect("valid triangle");
        let slack = vee_length(&tri) - vee_lower_bound(t, h).expect("h >= 1");
        let oracle = (5.0 + t * t).sqrt();
        let direct = vee_length(&tri) - oracle;
        min_slack = min_slack.min(direct);
        if direct < -1e-12 || slack < -1e-12 {
            below += 1;
        }
        if direct <= 1e-9 {
            near += 1;
            if (apex - base / 2.0).abs() >= 1e-6 || (h - 1.0).abs() >= 1e-6 {
                stray += 1;
            }
        }
    }
    outcome(
        below == 0 && stray == 0 && near > 0,
        format!("{n} triangles, min slack {min_slack:.2e}, {near} near-equalities, {stray} off the isosceles h=1 locus"),
    )
}

fn t_pattern_end_to_end() -> Outcome {
    let inv = 1.0 / 3f64.sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let strip = match smooth_family(eps) {
            Ok(s) => s,
            Err(e) => return outcome(false, e.to_string()),
        };
        let opts = SearchOptions {
            tol: 1e-9,
            exec: exec(),
            ..SearchOptions::default()
        };
        let start = Instant::now();
        let found = find_t_pattern_with(&strip, &opts);
        let elapsed = start.elapsed();
        let rec = measure_strip(eps, &strip, &opts);
        match (found, rec) {
            (Ok(p), Ok(r)) => {
                let ok = p.residual_g.abs() < 1e-8
                    && p.residual_h.abs() < 1e-8
                    && p.min_distance > 0.0
                    && (r.t - inv).abs() <= 0.05 * (1.0 + 10.0 * eps)
                    && elapsed < Duration::from_secs(30)
                    && strip.len() == 512;
                pass &= ok;
                parts.push(format!(
                    "eps {eps}: |g|,|h| <= {:.1e}, dist {:.4}, t {:.6}, {:.2?}",
                    p.residual_g.abs().max(p.residual_h.abs()),
                    p.min_distance,
                    r.t,
                    elapsed
                ));
            }
            (Err(e), _) => return outcome(false, format!("eps {eps}: {e}")),
            (_, Err(e)) => return outcome(false, format!("eps {eps}: {e}")),
        }
    }
    outcome(pass, parts.join("; "))
}

fn antipodal_structure() -> Outcome {
    let strip = smooth_family(0.1).expect("eps in range");
    let mut rng = property_rng(SEED, "acceptance/equivariance");
    let eq = equivariance(&mut rng, &strip, 500);
    let map = CircleMap(&strip);
    let mut rng = property_rng(SEED, "acceptance/winding");
    let (mut bad, mut count) = (0, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let theta = rng.gen_range(0.0..PI);
        let a = meridian_certificate(&map, theta, 1e-3, 256, 1e-9);
        let b = meridian_certificate(&map, theta + PI, 1e-3, 256, 1e-9);
        count += 1;
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let frac = |w: f64| (2.0 * w - (2.0 * w).round()).abs();
                let e = frac(a.w).max(frac(b.w)).max((a.w + b.w).abs());
                worst = worst.max(e);
                if e >= 1e-6 || a.w == 0.0 {
                    bad += 1;
                }
            }
            _ => bad += 1,
        }
    }
    outcome(
        eq.passed() && bad == 0,
        format!(
            "F(swap) = -F on {} pairs ({}); {count} antipodal meridian pairs, worst defect {worst:.1e}",
            eq.checks, eq.detail
        ),
    )
}

fn line_family_solver() -> Outcome {
    let mut rng = property_rng(SEED, "acceptance/line-families");
    let opts = SearchOptions {
        exec: exec(),
        ..SearchOptions::default()
    };
    // Pairs r < s on a 1415-step grid: about 10^6 oracle points per family.
    let n = 1415;
    let (mut failures, mut worst_res, mut worst_gap) = (0, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let fam = ClosedScrew::random(&mut rng);
        let sol = match lemma_tt_solve(|t| fam.line(t), &opts) {
            Ok(s) => s,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let (best, _, _) = grid_oracle(|t| fam.line(t), n, exec());
        let res = sol.g.abs().max(sol.h.abs());
        // The oracle cell containing the certified pair must itself be as
        // close to a zero as the grid resolution allows.
        let (i, j) = ((sol.r * n as f64).round() as usize, (sol.s * n as f64).round() as usize);
        let cell = if i < j && !(i == 0 && j == n) {
            let (g, h) = line_invariants(&fam.line(i as f64 / n as f64), &fam.line(j as f64 / n as f64));
            g.hypot(h)
        } else {
            0.0
        };
        worst_res = worst_res.max(res);
        worst_gap = worst_gap.max(cell);
        if !(res < 1e-9 && sol.g.hypot(sol.h) <= best.max(1e-9) && cell <= 50.0 / n as f64 && sol.r < sol.s) {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("100 families, {failures} failures, worst residual {worst_res:.1e}, worst oracle cell value {worst_gap:.1e}"),
    )
}

fn dual_numbers() -> Outcome {
    let mut rng = property_rng(SEED, "acceptance/dual");
    let (mut e_dot, mut e_study): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let (l0, l1) = (random_line(&mut rng, 5.0), random_line(&mut rng, 5.0));
        let (g, h) = line_invariants(&l0, &l1);
        let (s0, s1) = (to_study(&l0), to_study(&l1));
        let d = dual_dot(&s0, &s1);
        e_dot = e_dot.max((d.real - g).abs()).max((d.dual - h).abs());
        e_study = e_study.max(s0.study_defect()).max(s1.study_defect());
    }
    outcome(
        e_dot <= 1e-12 && e_study <= 1e-12,
        format!("1000 pairs, dot defect {e_dot:.1e}, Study defect {e_study:.1e}"),
    )
}

fn limit_quantities() -> Outcome {
    let inv = 1.0 / 3f64.sqrt();
    match limit_study(&[0.2, 0.1, 0.05], exec()) {
        Ok(recs) => {
            let last = recs.last().expect("three records");
            let eh = (last.h1 - inv).abs().max((last.h2 - inv).abs());
            let ed = (last.d1 - 2.0 * inv).abs().max((last.d2 - 2.0 * inv).abs());
            let mono = recs.windows(2).all(|w| w[1].sup_dist < w[0].sup_dist);
            let sups = recs.iter().map(|r| format!("{:.4}", r.sup_dist)).collect::<Vec<_>>().join(" > ");
            outcome(
                eh <= 0.02 && ed <= 0.02 && mono,
                format!("at eps 0.05 |H-1/sqrt3| = {eh:.4}, |D-2/sqrt3| = {ed:.4}; sup distance {sups}"),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn trapezoids() -> Outcome {
    let mut rng = property_rng(SEED, "acceptance/trapezoid");
    let ids = trapezoid_identities(&mut rng, 1000);
    // Side lengths against the deck map: D runs from the cut's foot to the
    // image of its top, H from its top to the image of its foot.
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let lambda = rng.gen_range(1.0..6.0);
        let t = rng.gen_range(-0.9..0.9) * lambda;
        let x = rng.gen_range(0.0..lambda);
        let band = FlatMoebius::new(lambda).expect("positive lambda");
        let cut = PreBend::from_foot(x, t);
        if let Ok(tr) = cut_along(&band, &cut) {
            let d = band.deck(cut.end, 1).x - cut.start.x;
            let h = band.deck(cut.start, 1).x - cut.end.x;
            worst = worst.max((tr.d_length() - d).abs()).max((tr.h_length() - h).abs());
            worst = worst.max((tr.d_length() + tr.h_length() - 2.0 * lambda).abs());
        } else {
            worst = f64::INFINITY;
        }
    }
    let strip = smooth_family(0.1).expect("eps in range");
    let mut rng = property_rng(SEED, "acceptance/trim");
    let trim = trimming_rescale(&mut rng, &strip, 100);
    outcome(
        ids.passed() && trim.passed() && worst <= 1e-12,
        format!(
            "{} ({}); side lengths worst {worst:.1e}; trimming {} ({})",
            ids.checks, ids.detail, trim.checks, trim.detail
        ),
    )
}

fn asymptotic_numerics() -> Outcome {
    let h = 1e-4;
    let mut parts = Vec::new();
    let mut pass = true;
    let presets = [
        (Preset::ParabolicCylinder { c: 1.0 }, [0.1, 0.2]),
        (Preset::Cylinder { radius: 1.0 }, [0.1, 0.2]),
        (Preset::Cone { c: 0.5, apex: 4.0 }, [0.3, 0.1]),
    ];
    let mut worst: f64 = 0.0;
    for (p, start) in presets {
        match p.patch(0.8, h).and_then(|patch| trace_asymptotic(&patch, start, 0.01, 0.5)) {
            Ok(tr) => worst = worst.max(tr.chord_deviation() / tr.length),
            Err(_) => worst = f64::INFINITY,
        }
    }
    pass &= worst <= 1e-6;
    parts.push(format!("developable relative deviation {worst:.1e}"));

    // The plane has no asymptotic direction; tracing must refuse to start.
    let plane = Preset::Plane.patch(0.8, h).and_then(|p| trace_asymptotic(&p, [0.1, 0.2], 0.01, 0.5));
    let flat = matches!(plane, Err(AsymptoticError::FlatPointReached { .. }));
    pass &= flat;
    parts.push(format!("plane {}", if flat { "reports a flat point" } else { "traced" }));

    let sphere = Preset::Sphere { radius: 1.0 }
        .patch(0.8, h)
        .and_then(|p| trace_asymptotic(&p, [0.0, 0.1], 0.01, 0.8));
    match sphere {
        Ok(tr) => {
            pass &= tr.chord_deviation() >= 1e-3;
            parts.push(format!("sphere deviation {:.1e}", tr.chord_deviation()));
        }
        Err(e) => {
            pass = false;
            parts.push(e.to_string());
        }
    }

    match (Preset::ParabolicCylinder { c: 1.0 })
        .patch(1.0, h)
        .and_then(|p| gauss_sample(&p, 0.0, 0.0))
    {
        Ok(g) => {
            let angle = g.kernel.cross(Vec3::X).norm().asin();
            pass &= angle <= 1e-6;
            parts.push(format!("kernel angle {angle:.1e}"));
        }
        Err(e) => {
            pass = false;
            parts.push(e.to_string());
        }
    }

    let mut ratios = Vec::new();
    for preset in [Preset::Cone { c: 0.05, apex: 4.0 }, Preset::ParabolicCylinder { c: 0.1 }] {
        match preset
            .patch(3.0, h)
            .and_then(|p| connector_experiment(&p, &ConnectorOptions::default(), exec()))
        {
            Ok(r) => {
                pass &= r.max_ratio < 3.0;
                ratios.push(format!("{:.4}", r.max_ratio));
            }
            Err(e) => {
                pass = false;
                ratios.push(e.to_string());
            }
        }
    }
    parts.push(format!("connector ratios {}", ratios.join(", ")));
    outcome(pass, parts.join("; "))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("bound constants", bound_constants),
        ("alpha/beta monotonicity", monotonicity),
        ("vee length oracle", vee_oracle),
        ("T-pattern end to end", t_pattern_end_to_end),
        ("antipodal structure and windings", antipodal_structure),
        ("line-family solver vs grid oracle", line_family_solver),
        ("dual-number equivalence", dual_numbers),
        ("triangular limit quantities", limit_quantities),
        ("trapezoid identities and trimming", trapezoids),
        ("asymptotic-curve numerics", asymptotic_numerics),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.2?}]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
