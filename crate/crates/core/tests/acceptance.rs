//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use confgrowth::growth::negligible_ratios;
use confgrowth::{
    appendix1_bound, appendix2_bound, bfs_ball, choose_insertions, decompose, enumerate_ball, estimate_rate,
    find_gap_omega, generate_images, hashimoto_growth, loop_counts, rho, shell, verify_coset, verify_inequalities,
    verify_injective, Alphabet, CosetGraph, CountKind, GapFunctionParams, GrowthEstimate, WindowPolicy,
};

const BUDGET: usize = 5_000_000;

fn f2() -> Alphabet {
    Alphabet::new(2).unwrap()
}

fn z_kernel() -> CosetGraph {
    CosetGraph::from_abelianization(f2(), &[vec![1], vec![0]]).unwrap()
}

fn z2_z3_kernel() -> CosetGraph {
    CosetGraph::from_free_product(f2(), &[Some(2), Some(3)]).unwrap()
}

fn parity_kernel() -> CosetGraph {
    CosetGraph::from_coset_table(f2(), &[vec![1, 1], vec![0, 0]], 0).unwrap()
}

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn free_group_baseline() -> Check {
    let start = Instant::now();
    let ball = enumerate_ball(f2(), 12, 10_000_000).map_err(|e| e.to_string())?;
    let mut spheres = vec![0u64; 13];
    for w in &ball {
        spheres[w.len()] += 1;
    }
    let elapsed = start.elapsed();
    let exact = (1..=12).all(|k| spheres[k] == 4 * 3u64.pow(k as u32 - 1)) && spheres[0] == 1;
    let est = estimate_rate(&spheres, CountKind::Spheres, WindowPolicy::TopHalf).map_err(|e| e.to_string())?;
    let err = (est.rate - 3f64.ln()).abs();
    ensure(
        exact && err <= 0.02 && elapsed < Duration::from_secs(10),
        format!(
            "|S_k| = 4*3^(k-1): {exact}, rate {:.6} (|err| {err:.2e}), {} words in {elapsed:.2?}",
            est.rate,
            ball.len()
        ),
    )
}

fn sphere_counting_bounds() -> Check {
    let b1 = appendix1_bound(4, 1).map_err(|e| e.to_string())?;
    let b2 = appendix2_bound(2, 1).map_err(|e| e.to_string())?;
    let agree = (b1 - 8f64.ln() / 2.0).abs() <= 1e-12
        && (b2.bound - 8f64.sqrt().ln()).abs() <= 1e-12
        && (b1 - b2.bound).abs() <= 1e-12;
    let gap = 3f64.ln() - b1.max(b2.bound);
    ensure(
        agree && gap >= 0.058,
        format!("bounds {b1:.12} / {:.12}, gap below log 3 = {gap:.6}", b2.bound),
    )
}

fn shell_audit() -> Check {
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, g) in [("Z-kernel", z_kernel()), ("Z/2*Z/3-kernel", z2_z3_kernel())] {
        let ball = bfs_ball(&g, 10, BUDGET).map_err(|e| e.to_string())?;
        let root = g.root();
        let mut audited = 0;
        let mut violations = 0;
        let mut largest = 0;
        for a in ball.vertices() {
            let d = ball.distance(a).unwrap();
            if *a == root || d + 2 > 10 {
                continue;
            }
            let sh = shell(&g, &ball, a, 2).map_err(|e| e.to_string())?;
            audited += 1;
            largest = largest.max(sh.len());
            if sh.len() > 8 {
                violations += 1;
            }
        }
        ok &= violations == 0 && audited > 0;
        detail.push(format!(
            "{name}: {audited} audited, max |Sh(a,2)| = {largest}, {violations} violations"
        ));
    }
    ensure(ok, detail.join("; "))
}

fn run_certify(args: &[&str]) -> Result<(i32, Value), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_confgrowth"))
        .arg("certify")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    let report: Value = serde_json::from_slice(&out.stdout).map_err(|e| format!("bad report: {e}"))?;
    Ok((out.status.code().unwrap_or(-1), report))
}

fn certified_gap() -> Check {
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, backend, p) in [
        ("Z-kernel", "abelian:1;0", "b"),
        ("Z/2*Z/3-kernel", "free-product:2,3", "aa,bbb"),
    ] {
        let (code, r) = run_certify(&["--backend", backend, "--p", p, "--radius", "12"])?;
        let c = &r["certificate"];
        let rate = c["empirical_rate"]["rate"].as_f64().unwrap_or(f64::NAN);
        let se = c["empirical_rate"]["stderr"].as_f64().unwrap_or(f64::NAN);
        let within = rate <= 1.0397 + 2.0 * se;
        ok &= code == 0 && within;
        detail.push(format!(
            "{name}: exit {code}, rate {rate:.4} (bound {}, stderr {se:.2e})",
            c["bound"]
        ));
    }
    let (code, r) = run_certify(&["--backend", "trivial", "--p", "b", "--radius", "12"])?;
    let c = &r["certificate"];
    let inconclusive = c["inconclusive"].as_bool() == Some(true);
    let rate = c["empirical_rate"]["rate"].as_f64().unwrap_or(f64::NAN);
    ok &= code != 0 && inconclusive && (rate - 3f64.ln()).abs() <= 0.02;
    detail.push(format!(
        "trivial: exit {code}, inconclusive {inconclusive}, rate {rate:.4}"
    ));
    ensure(ok, detail.join("; "))
}

fn cogrowth() -> Check {
    let log3 = 3f64.ln();
    let z2 = parity_kernel();
    let spectral = hashimoto_growth(&z2, BUDGET).map_err(|e| e.to_string())?;
    let counts = loop_counts(&z2, 18, BUDGET).map_err(|e| e.to_string())?;
    let reg = estimate_rate(&counts, CountKind::ClosedWalks, WindowPolicy::TopHalf).map_err(|e| e.to_string())?;
    let finite_ok = (spectral.rate - log3).abs() <= 1e-6 && (reg.rate - spectral.rate).abs() <= 0.05;

    let z = z_kernel();
    let counts = loop_counts(&z, 18, BUDGET).map_err(|e| e.to_string())?;
    let omega_h = estimate_rate(&counts, CountKind::ClosedWalks, WindowPolicy::TopHalf).map_err(|e| e.to_string())?;
    let ball = bfs_ball(&z, 12, BUDGET).map_err(|e| e.to_string())?;
    let quotient =
        estimate_rate(&ball.counts(), CountKind::Spheres, WindowPolicy::TopHalf).map_err(|e| e.to_string())?;
    let report = verify_inequalities(
        Some(&GrowthEstimate::free_group(2)),
        Some(&quotient),
        Some(&omega_h),
        Some(appendix2_bound(2, 1).unwrap().bound),
        "",
        0.05,
    )
    .map_err(|e| e.to_string())?;
    let balance = &report.verdicts[0];
    let amenable_ok = omega_h.rate >= 0.95 && balance.slack >= -0.05;
    ensure(
        finite_ok && amenable_ok,
        format!(
            "parity kernel: spectral {:.9} (|err| {:.1e}), regression {:.4}; Z-kernel: w_H {:.4}, balance slack {:.4}",
            spectral.rate,
            (spectral.rate - log3).abs(),
            reg.rate,
            omega_h.rate,
            balance.slack
        ),
    )
}

fn inflation_end_to_end() -> Check {
    let start = Instant::now();
    let z = z_kernel();
    let a = f2().parse("a").unwrap();
    let p = [f2().parse("b").unwrap()];
    let candidates = [f2().parse("ab").unwrap()];
    let mut failures = Vec::new();
    let mut images_checked = 0usize;
    for k in 0..=16 {
        let g = a.pow(k);
        let d = decompose(&g, 1).map_err(|e| e.to_string())?;
        let scheme = choose_insertions(&d, &z, &p, &candidates).map_err(|e| e.to_string())?;
        let images = generate_images(&scheme, 20).map_err(|e| e.to_string())?;
        images_checked += images.len();
        let target = z.walk(&z.root(), g.letters());
        let coset = verify_coset(&scheme, &images) && scheme.g_vertex == target;
        let injective = verify_injective(&scheme, &images).injective;
        let lengths = images.iter().all(|im| im.length <= k + 3 * im.epsilon.ones());
        if !(coset && injective && lengths && images.len() == 1 << k) {
            failures.push(format!(
                "k={k} (coset {coset}, injective {injective}, lengths {lengths})"
            ));
        }
    }
    let elapsed = start.elapsed();
    ensure(
        failures.is_empty() && elapsed < Duration::from_secs(60),
        format!("k = 0..=16, {images_checked} images in {elapsed:.2?}; failures: {failures:?}"),
    )
}

fn gap_numerics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_margin = f64::INFINITY;
    let mut failures = Vec::new();
    let mut grid_violations = 0usize;
    for _ in 0..100 {
        let theta = 1.0 - rng.random::<f64>();
        let r = rng.random_range(1.0..=10.0);
        let omega = rng.random_range(0.0..=2.0);
        let params = GapFunctionParams::new(theta, r).map_err(|e| e.to_string())?;
        match find_gap_omega(params, omega) {
            Ok(res) => {
                worst_margin = worst_margin.min(res.margin);
                let ok = rho(params, res.omega_prime) < omega && omega < res.omega_prime && res.margin >= 1e-10;
                if !ok {
                    failures.push(format!(
                        "(theta {theta:.4}, R {r:.3}, w {omega:.4}): margin {:.3e}",
                        res.margin
                    ));
                }
            }
            Err(e) => failures.push(format!("(theta {theta:.4}, R {r:.3}, w {omega:.4}): {e}")),
        }
        for i in 0..10_000 {
            let s = 2.0 * i as f64 / 9_999.0;
            let r = rho(params, s);
            if r.is_nan() || r >= s {
                grid_violations += 1;
            }
        }
    }
    ensure(
        failures.is_empty() && grid_violations == 0,
        format!("smallest margin {worst_margin:.3e}, grid violations {grid_violations}, failures {failures:?}"),
    )
}

fn negligible_growth() -> Check {
    let mut detail = Vec::new();
    let mut ok = true;
    for (name, g) in [("Z-kernel", z_kernel()), ("Z/2*Z/3-kernel", z2_z3_kernel())] {
        let ball = bfs_ball(&g, 12, BUDGET).map_err(|e| e.to_string())?;
        let ratios = negligible_ratios(&ball.ball_counts(), 2);
        let monotone = ratios[2..=12].windows(2).all(|w| w[1] <= w[0]);
        let last = ratios[12];
        ok &= monotone && last < 1e-3;
        detail.push(format!("{name}: monotone {monotone}, final {last:.3e}"));
    }
    ensure(ok, detail.join("; "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("free-group baseline", free_group_baseline),
        ("sphere-counting bounds", sphere_counting_bounds),
        ("shell audit", shell_audit),
        ("confinement gives a certified gap", certified_gap),
        ("cogrowth cross-check", cogrowth),
        ("inflation map end to end", inflation_end_to_end),
        ("gap function numerics", gap_numerics),
        ("negligible growth ratio", negligible_growth),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
