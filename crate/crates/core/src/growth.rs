//! Growth-rate estimation, Poincare partial sums, the sphere-counting gap
//! bounds for graphs without large tree balls, and the gap function `rho`.
//!
//! All rates are in nats.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schreier::{bfs_ball, tree_radius_within, CosetGraph, TreeRadius};

/// What a count sequence measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountKind {
    /// Sphere sizes `|S_k|`; the fit runs on the cumulative ball sizes.
    Spheres,
    /// Ball sizes `|B(k)|`.
    Balls,
    /// Closed non-backtracking walk counts `c_k`; the fit runs on
    /// `max(c_k, c_{k+1})`, which absorbs parity gaps.
    ClosedWalks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMethod {
    Regression,
    ExactFormula,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum WindowPolicy {
    /// Upper half of the available indices.
    #[default]
    TopHalf,
    /// Inclusive index range.
    Explicit { start: usize, end: usize },
}

/// A windowed estimate of an exponential growth rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthEstimate {
    pub kind: CountKind,
    pub method: RateMethod,
    pub rate: f64,
    pub stderr: f64,
    /// Inclusive index range used for the fit.
    pub window: (usize, usize),
    pub counts: Vec<u64>,
    /// `ln y_k / k` for `k >= 1`, where `y_k` is the per-index count
    /// (sphere size, or smoothed closed-walk count); `None` where `y_k = 0`.
    pub log_ratios: Vec<Option<f64>>,
    /// `max ln Y_k / k` over the window, `Y_k` the fitted sequence.
    pub max_ratio: f64,
    pub note: Option<String>,
}

impl GrowthEstimate {
    /// `ln(2n - 1)`, the growth rate of `F_n` itself.
    pub fn free_group(rank: u32) -> GrowthEstimate {
        GrowthEstimate {
            kind: CountKind::Spheres,
            method: RateMethod::ExactFormula,
            rate: ((2 * rank - 1) as f64).ln(),
            stderr: 0.0,
            window: (0, 0),
            counts: Vec::new(),
            log_ratios: Vec::new(),
            max_ratio: ((2 * rank - 1) as f64).ln(),
            note: Some("exact: spheres of F_n have 2n(2n-1)^(k-1) elements".into()),
        }
    }

    pub fn spectral(rate: f64) -> GrowthEstimate {
        GrowthEstimate {
            kind: CountKind::ClosedWalks,
            method: RateMethod::Spectral,
            rate,
            stderr: 0.0,
            window: (0, 0),
            counts: Vec::new(),
            log_ratios: Vec::new(),
            max_ratio: rate,
            note: Some("log spectral radius of the non-backtracking operator".into()),
        }
    }
}

struct Fit {
    slope: f64,
    stderr: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Fit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Fit { slope, stderr }
}

/// Least-squares slope of `ln Y_k` against `k` over a window, where `Y_k`
/// is the ball size (or smoothed closed-walk count) at index `k`.
///
/// A zero inside the window means the sequence has finite support, and the
/// rate is reported as exactly 0.
pub fn estimate_rate(counts: &[u64], kind: CountKind, policy: WindowPolicy) -> Result<GrowthEstimate> {
    let fitted: Vec<u64> = match kind {
        CountKind::Spheres => counts
            .iter()
            .scan(0u64, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect(),
        CountKind::Balls => counts.to_vec(),
        CountKind::ClosedWalks => counts.windows(2).map(|w| w[0].max(w[1])).collect(),
    };
    let per_index: Vec<u64> = match kind {
        CountKind::Spheres => counts.to_vec(),
        CountKind::Balls => counts
            .iter()
            .enumerate()
            .map(|(k, &b)| if k == 0 { b } else { b.saturating_sub(counts[k - 1]) })
            .collect(),
        CountKind::ClosedWalks => fitted.clone(),
    };
    let available = fitted.len();
    let (start, end) = match policy {
        WindowPolicy::TopHalf if available > 0 => (available / 2, available - 1),
        WindowPolicy::TopHalf => (0, 0),
        WindowPolicy::Explicit { start, end } => (start, end),
    };
    if available == 0 || end >= available || start > end || end - start + 1 < 4 {
        return Err(Error::input(format!(
            "window {start}..={end} over {available} usable counts; need at least 4 entries"
        )));
    }
    let log_ratios = per_index
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &y)| (y > 0).then(|| (y as f64).ln() / k as f64))
        .collect();
    let window = &fitted[start..=end];
    let exhausted = match kind {
        CountKind::Spheres => counts[start..=end].contains(&0),
        _ => window.contains(&0),
    };
    if exhausted {
        return Ok(GrowthEstimate {
            kind,
            method: RateMethod::ExactFormula,
            rate: 0.0,
            stderr: 0.0,
            window: (start, end),
            counts: counts.to_vec(),
            log_ratios,
            max_ratio: 0.0,
            note: Some("finite support: a count vanishes inside the window".into()),
        });
    }
    let xs: Vec<f64> = (start..=end).map(|k| k as f64).collect();
    let ys: Vec<f64> = window.iter().map(|&y| (y as f64).ln()).collect();
    let fit = least_squares(&xs, &ys);
    let max_ratio = xs
        .iter()
        .zip(&ys)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, y)| y / x)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GrowthEstimate {
        kind,
        method: RateMethod::Regression,
        rate: fit.slope,
        stderr: fit.stderr,
        window: (start, end),
        counts: counts.to_vec(),
        log_ratios,
        max_ratio,
        note: None,
    })
}

/// `sum_{k <= depth} |S_k| e^{-s k}`.
pub fn poincare_partial(counts: &[u64], s: f64, depth: usize) -> Result<f64> {
    if depth >= counts.len() {
        return Err(Error::input(format!(
            "depth {depth} exceeds the {} available sphere counts",
            counts.len()
        )));
    }
    Ok(counts[..=depth]
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 * (-s * k as f64).exp())
        .sum())
}

/// Every partial sum `depth = 0..counts.len()`.
pub fn poincare_sequence(counts: &[u64], s: f64) -> Vec<f64> {
    counts
        .iter()
        .enumerate()
        .scan(0.0, |acc, (k, &c)| {
            *acc += c as f64 * (-s * k as f64).exp();
            Some(*acc)
        })
        .collect()
}

/// `|B(k)| (2n-1)^{-k}` for each radius `k`; tends to 0 when the quotient
/// growth is negligible.
pub fn negligible_ratios(ball_counts: &[u64], rank: u32) -> Vec<f64> {
    let base = (2 * rank - 1) as f64;
    ball_counts
        .iter()
        .enumerate()
        .map(|(k, &b)| b as f64 * base.powi(-(k as i32)))
        .collect()
}

/// Growth bound for a `d`-regular graph whose tree-like subgraphs have
/// diameter at most `r`: `ln((d-1)^{2r} - 1) / (2r)`.
pub fn appendix1_bound(d: u32, r: u32) -> Result<f64> {
    if d < 3 {
        return Err(Error::input(format!("degree {d} < 3: the bound degenerates")));
    }
    if r < 1 {
        return Err(Error::input("diameter bound must be at least 1"));
    }
    Ok(sphere_gap(d - 1, r).bound)
}

/// `alpha = ((2n-1)^{2m} - 1)^{1/(2m)}` and `ln alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SphereBound {
    pub alpha: f64,
    pub bound: f64,
    /// `ln(2n-1) - ln(alpha)`, computed without cancellation so that it
    /// stays positive even when `bound` rounds to `ln(2n-1)`.
    pub deficit: f64,
}

fn sphere_gap(branching: u32, m: u32) -> SphereBound {
    let b = branching as f64;
    let two_m = 2.0 * m as f64;
    let deficit = -(-b.powf(-two_m)).ln_1p() / two_m;
    let bound = b.ln() - deficit;
    SphereBound {
        alpha: bound.exp(),
        bound,
        deficit,
    }
}

/// Growth bound for graphs of degree at most `2n` without a tree ball
/// `B_n(m)`.
pub fn appendix2_bound(n: u32, m: u32) -> Result<SphereBound> {
    if n < 2 {
        return Err(Error::input(format!("rank {n} < 2: the bound degenerates")));
    }
    if m < 1 {
        return Err(Error::input("tree-ball radius bound must be at least 1"));
    }
    Ok(sphere_gap(2 * n - 1, m))
}

/// Certificate that a coset graph grows strictly slower than `F_n`.
#[derive(Clone, Debug, Serialize)]
pub struct GapCertificate {
    pub n: u32,
    pub radius_verified: usize,
    /// Vertices within this distance of the root were audited.
    pub audit_radius: usize,
    pub audited_vertices: usize,
    pub uncertified_vertices: usize,
    pub max_tree_radius: Option<usize>,
    pub m: u32,
    pub alpha: f64,
    pub bound: f64,
    pub bound_regular: f64,
    pub deficit: f64,
    pub omega_free: f64,
    pub empirical_rate: GrowthEstimate,
    pub holds_hypothesis: bool,
    pub inconclusive: bool,
    /// `empirical_rate.rate <= bound + 2 stderr`.
    pub rate_within_bound: bool,
    pub criterion: String,
}

impl GapCertificate {
    pub fn certified(&self) -> bool {
        self.holds_hypothesis && self.rate_within_bound
    }
}

/// Audits the tree-ball radius at every vertex within half the radius (so
/// each has a horizon of at least half the radius), takes `m` one above the
/// largest radius found, and evaluates the resulting growth bound next to a
/// regression of the ball counts.
pub fn certify_gap(g: &CosetGraph, radius: usize, budget: usize) -> Result<GapCertificate> {
    let n = g.rank();
    if n < 2 {
        return Err(Error::input("gap certificates need rank at least 2"));
    }
    let ball = bfs_ball(g, radius, budget)?;
    let audit_radius = radius / 2;
    let audited: Vec<_> = ball
        .vertices()
        .iter()
        .filter(|v| ball.distance(v).is_some_and(|d| d <= audit_radius))
        .collect();
    let radii: Vec<TreeRadius> = audited
        .par_iter()
        .map(|v| tree_radius_within(g, v, radius - ball.distance(v).expect("in ball")))
        .collect();
    let max_certified = radii.iter().filter(|r| r.is_certified()).map(|r| r.value()).max();
    let uncertified = radii.iter().filter(|r| !r.is_certified()).count();
    let m = match max_certified {
        Some(v) => v + 1,
        None => radii.iter().map(|r| r.value()).max().unwrap_or(0) + 1,
    } as u32;
    let bound = appendix2_bound(n, m)?;
    let bound_regular = appendix1_bound(2 * n, m)?;
    let empirical_rate = estimate_rate(&ball.counts(), CountKind::Spheres, WindowPolicy::TopHalf)?;
    let holds_hypothesis = uncertified == 0;
    let rate_within_bound = empirical_rate.rate <= bound.bound + 2.0 * empirical_rate.stderr;
    Ok(GapCertificate {
        n,
        radius_verified: radius,
        audit_radius,
        audited_vertices: audited.len(),
        uncertified_vertices: uncertified,
        max_tree_radius: max_certified,
        m,
        alpha: bound.alpha,
        bound: bound.bound,
        bound_regular,
        deficit: bound.deficit,
        omega_free: ((2 * n - 1) as f64).ln(),
        empirical_rate,
        holds_hypothesis,
        inconclusive: !holds_hypothesis,
        rate_within_bound,
        criterion: "no embedded tree ball B_n(m) around audited vertices (acyclic-ball test; \
                    the isometric-subtree variant is not evaluated separately)"
            .into(),
    })
}

/// Parameters of `rho(s) = s - theta ln(1 + e^{-s R})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapFunctionParams {
    pub theta: f64,
    pub r: f64,
}

impl GapFunctionParams {
    pub fn new(theta: f64, r: f64) -> Result<GapFunctionParams> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::input(format!("theta = {theta} is outside (0, 1]")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::input(format!("R = {r} must be positive")));
        }
        Ok(GapFunctionParams { theta, r })
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn rho(params: GapFunctionParams, s: f64) -> f64 {
    s - params.theta * softplus(-s * params.r)
}

/// Output of [`find_gap_omega`]: `rho(omega_prime) = omega - margin < omega < omega_prime`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapOmega {
    pub omega: f64,
    pub omega_prime: f64,
    pub rho_at_prime: f64,
    pub margin: f64,
    /// Upper end of the final bisection bracket for `rho(s) = omega`.
    pub root: f64,
    pub iterations: usize,
}

pub const BISECTION_TOL: f64 = 1e-9;

/// Finds `omega' > omega` with `rho(omega') < omega`.
///
/// `rho` is continuous and increasing with `rho(omega) < omega`, so the
/// crossing `rho(s*) = omega` lies in `(omega, omega + deficit]` where
/// `deficit = omega - rho(omega)`. Bisection locates `s*`; the returned
/// point sits a quarter of the way from `omega` to `s*`.
pub fn find_gap_omega(params: GapFunctionParams, omega: f64) -> Result<GapOmega> {
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(Error::input(format!("omega = {omega} must be finite and non-negative")));
    }
    let deficit = omega - rho(params, omega);
    if deficit.is_nan() || deficit <= 0.0 {
        return Err(Error::input(format!(
            "rho(omega) = omega at omega = {omega}; theta = {} leaves no gap",
            params.theta
        )));
    }
    let mut lo = omega;
    let mut hi = omega + params.theta * softplus(-omega * params.r);
    let tol = BISECTION_TOL.min(1e-6 * (hi - lo));
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rho(params, mid) < omega {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let omega_prime = omega + 0.25 * (hi - omega);
    let rho_at_prime = rho(params, omega_prime);
    let margin = omega - rho_at_prime;
    if !(omega_prime > omega && margin > 0.0) {
        return Err(Error::input(format!(
            "gap {deficit:e} at omega = {omega} is below floating-point resolution"
        )));
    }
    Ok(GapOmega {
        omega,
        omega_prime,
        rho_at_prime,
        margin,
        root: hi,
        iterations,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub statement: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub tol: f64,
    pub omega_g: GrowthEstimate,
    pub omega_quotient: GrowthEstimate,
    pub omega_h: GrowthEstimate,
    pub gap_bound: Option<f64>,
    pub verdicts: Vec<Verdict>,
}

impl InequalityReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }
}

/// Checks `w_{G/H}/2 + w_H >= w_G`, the certified gap `w_{G/H} <= bound`
/// and `w_H >= w_G/2`, each up to `tol`.
///
/// `gap_bound` is the certificate's bound, or `None` when no certificate
/// holds, in which case the tightness verdict fails with `missing_bound_note`.
pub fn verify_inequalities(
    omega_g: Option<&GrowthEstimate>,
    omega_quotient: Option<&GrowthEstimate>,
    omega_h: Option<&GrowthEstimate>,
    gap_bound: Option<f64>,
    missing_bound_note: &str,
    tol: f64,
) -> Result<InequalityReport> {
    let (Some(g), Some(q), Some(h)) = (omega_g, omega_quotient, omega_h) else {
        return Err(Error::input("verify needs estimates of w_G, w_G/H and w_H"));
    };
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::input(format!("tolerance {tol} must be non-negative")));
    }
    let balance_lhs = q.rate / 2.0 + h.rate;
    let mut verdicts = vec![Verdict {
        name: "quotient-subgroup-balance".into(),
        statement: "w_G/H / 2 + w_H >= w_G".into(),
        lhs: balance_lhs,
        rhs: g.rate,
        slack: balance_lhs - g.rate,
        holds: balance_lhs - g.rate >= -tol,
        note: None,
    }];
    verdicts.push(match gap_bound {
        Some(b) => Verdict {
            name: "growth-tightness".into(),
            statement: "w_G/H <= w_G - gap (gap = w_G - certified bound)".into(),
            lhs: q.rate,
            rhs: b,
            slack: b - q.rate,
            holds: b - q.rate >= -tol,
            note: Some(format!("gap = {}", g.rate - b)),
        },
        None => Verdict {
            name: "growth-tightness".into(),
            statement: "w_G/H <= w_G - gap (gap = w_G - certified bound)".into(),
            lhs: q.rate,
            rhs: g.rate,
            slack: g.rate - q.rate,
            holds: false,
            note: Some(missing_bound_note.to_string()),
        },
    });
    let half = g.rate / 2.0;
    verdicts.push(Verdict {
        name: "subgroup-half-rate".into(),
        statement: "w_H >= w_G / 2".into(),
        lhs: h.rate,
        rhs: half,
        slack: h.rate - half,
        holds: h.rate - half >= -tol,
        note: None,
    });
    Ok(InequalityReport {
        tol,
        omega_g: g.clone(),
        omega_quotient: q.clone(),
        omega_h: h.clone(),
        gap_bound,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::Alphabet;

    fn t4_spheres(radius: usize) -> Vec<u64> {
        (0..=radius)
            .map(|k| if k == 0 { 1 } else { 4 * 3u64.pow(k as u32 - 1) })
            .collect()
    }

    #[test]
    fn estimate_rate_examples() {
        let est = estimate_rate(&t4_spheres(12), CountKind::Spheres, WindowPolicy::TopHalf).unwrap();
        assert!((est.rate - 3f64.ln()).abs() < 0.02, "{}", est.rate);
        assert_eq!(est.window, (6, 12));
        assert_eq!(est.method, RateMethod::Regression);

        let flat = estimate_rate(&[1; 10], CountKind::Balls, WindowPolicy::TopHalf).unwrap();
        assert_eq!(flat.rate, 0.0);

        let grid: Vec<u64> = (0..=40).map(|k| if k == 0 { 1 } else { 4 * k }).collect();
        let est = estimate_rate(&grid, CountKind::Spheres, WindowPolicy::TopHalf).unwrap();
        assert!(est.rate <= 0.15 && est.rate > 0.0, "{}", est.rate);
    }

    #[test]
    fn estimate_rate_finite_support_and_errors() {
        let est = estimate_rate(&[1, 2, 0, 0, 0, 0, 0, 0], CountKind::Spheres, WindowPolicy::TopHalf).unwrap();
        assert_eq!(est.rate, 0.0);
        assert_eq!(est.method, RateMethod::ExactFormula);
        assert!(est.note.unwrap().contains("finite support"));
        assert!(estimate_rate(&[1, 2, 3], CountKind::Spheres, WindowPolicy::TopHalf).is_err());
        let bad = WindowPolicy::Explicit { start: 3, end: 20 };
        assert!(estimate_rate(&[1; 10], CountKind::Balls, bad).is_err());
    }

    #[test]
    fn estimate_rate_exact_geometric() {
        for &(a, r) in &[(1u64, 3u64), (5, 2), (7, 4)] {
            let counts: Vec<u64> = (0..=30).map(|k| a * r.pow(k)).collect();
            let r = r as f64;
            let est = estimate_rate(&counts, CountKind::Balls, WindowPolicy::TopHalf).unwrap();
            assert!((est.rate - r.ln()).abs() < 1e-9, "{a} {r}: {}", est.rate);
        }
    }

    #[test]
    fn closed_walk_parity_smoothing() {
        // c_k for the index-2 kernel: 4 * 3^{k-1} on even k, 0 on odd k.
        let c: Vec<u64> = (0..=18)
            .map(|k| match k {
                0 => 1,
                k if k % 2 == 0 => 4 * 3u64.pow(k as u32 - 1),
                _ => 0,
            })
            .collect();
        let est = estimate_rate(&c, CountKind::ClosedWalks, WindowPolicy::TopHalf).unwrap();
        assert!((est.rate - 3f64.ln()).abs() < 0.05, "{}", est.rate);
    }

    #[test]
    fn poincare_examples() {
        assert_eq!(poincare_partial(&[1], 2.5, 0).unwrap(), 1.0);
        let counts = t4_spheres(20);
        let s = 3f64.ln() + 0.5;
        let got = poincare_partial(&counts, s, 20).unwrap();
        // 1 + (4/3) sum_{k=1}^{20} q^k with q = 3 e^{-s} = e^{-0.5}.
        let q = (-0.5f64).exp();
        let closed = 1.0 + 4.0 / 3.0 * q * (1.0 - q.powi(20)) / (1.0 - q);
        assert!((got - closed).abs() < 1e-9);
        assert!(got < 1.0 + 4.0 / 3.0 * q / (1.0 - q));

        let s = 3f64.ln() - 0.2;
        let seq = poincare_sequence(&counts, s);
        assert!(seq.windows(2).all(|w| w[1] > w[0]));
        assert!(seq[20] > 2.0 * seq[10]);
        assert!(poincare_partial(&counts, 1.0, 21).is_err());
    }

    #[test]
    fn poincare_monotone_in_s() {
        let counts = t4_spheres(12);
        let vals: Vec<f64> = (0..20)
            .map(|i| poincare_partial(&counts, i as f64 * 0.1, 12).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn sphere_bound_examples() {
        assert!((appendix1_bound(4, 1).unwrap() - 8f64.ln() / 2.0).abs() < 1e-12);
        assert!((appendix1_bound(4, 2).unwrap() - 80f64.ln() / 4.0).abs() < 1e-12);
        let d3 = appendix1_bound(3, 1).unwrap();
        assert!((d3 - 3f64.ln() / 2.0).abs() < 1e-12 && d3 < 2f64.ln());
        assert!(appendix1_bound(2, 1).is_err());

        let b = appendix2_bound(2, 1).unwrap();
        assert!((b.alpha - 8f64.sqrt()).abs() < 1e-12);
        assert!((b.bound - 1.0397).abs() < 1e-4);
        let b = appendix2_bound(2, 2).unwrap();
        assert!((b.alpha - 80f64.powf(0.25)).abs() < 1e-12);
        assert!((b.bound - 1.09551).abs() < 1e-5);
        let b = appendix2_bound(3, 1).unwrap();
        assert!((b.alpha - 24f64.sqrt()).abs() < 1e-12);
        assert!((b.bound - 1.58903).abs() < 1e-5 && b.bound < 5f64.ln());
        assert!(appendix2_bound(1, 1).is_err());
        assert!(appendix2_bound(2, 0).is_err());
    }

    #[test]
    fn sphere_bound_grid() {
        for n in 2..=6 {
            let top = ((2 * n - 1) as f64).ln();
            let mut prev = f64::INFINITY;
            for m in 1..=20 {
                let b = appendix2_bound(n, m).unwrap();
                assert!(b.deficit > 0.0 && b.bound <= top);
                assert!(b.deficit < prev, "deficit must shrink with m");
                prev = b.deficit;
            }
        }
        for d in 3..=8 {
            let vals: Vec<f64> = (1..=10).map(|r| appendix1_bound(d, r).unwrap()).collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn rho_examples() {
        let degenerate = GapFunctionParams { theta: 0.0, r: 1.0 };
        assert_eq!(rho(degenerate, 0.7), 0.7);
        let p = GapFunctionParams::new(1.0, 1.0).unwrap();
        assert!((rho(p, 1.0) - (1.0 - (1.0 + (-1f64).exp()).ln())).abs() < 1e-15);
        assert!((rho(p, 1.0) - 0.6867).abs() < 1e-4);
        for i in -50..50 {
            let s = i as f64 * 0.37;
            assert!(rho(p, s) < s);
        }
        assert!(rho(p, -800.0).is_finite());
        assert!(GapFunctionParams::new(0.0, 1.0).is_err());
        assert!(GapFunctionParams::new(0.5, 0.0).is_err());
    }

    #[test]
    fn rho_increasing_with_bounded_slope() {
        for &(theta, r) in &[(1.0, 1.0), (0.3, 4.0), (0.9, 10.0), (0.01, 2.0)] {
            let p = GapFunctionParams::new(theta, r).unwrap();
            for i in 0..400 {
                let s1 = -2.0 + i as f64 * 0.01;
                let s2 = s1 + 0.01;
                let d = rho(p, s2) - rho(p, s1);
                assert!(d > 0.0);
                assert!(d <= (s2 - s1) * (1.0 + theta * r) + 1e-15);
                if s1 >= 0.0 {
                    assert!(d <= (s2 - s1) * (1.0 + theta * r / 2.0) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn find_gap_omega_examples() {
        let p = GapFunctionParams::new(1.0, 1.0).unwrap();
        let out = find_gap_omega(p, 1.0).unwrap();
        assert!(out.omega_prime > 1.0 && out.omega_prime < 2.0);
        assert!(rho(p, out.omega_prime) < 1.0);
        assert_eq!(out.rho_at_prime, rho(p, out.omega_prime));

        let tiny = GapFunctionParams::new(1e-6, 1.0).unwrap();
        let out = find_gap_omega(tiny, 1.0).unwrap();
        assert!(out.omega_prime - 1.0 < 1e-6);
        assert!(out.margin > 0.0);

        let out = find_gap_omega(p, 0.0).unwrap();
        assert!(out.omega_prime > 0.0 && out.rho_at_prime <= -out.margin && out.margin > 0.0);

        assert!(find_gap_omega(p, -1.0).is_err());
        assert!(find_gap_omega(GapFunctionParams { theta: 0.0, r: 1.0 }, 1.0).is_err());
    }

    #[test]
    fn verify_inequalities_examples() {
        let g = GrowthEstimate::free_group(2);
        let mut zero = g.clone();
        zero.rate = 0.0;
        let finite = verify_inequalities(Some(&g), Some(&zero), Some(&g), Some(1.0397), "", 1e-9).unwrap();
        assert!(finite.verdicts[0].holds);
        assert!(finite.verdicts[0].slack.abs() < 1e-12);
        assert!(finite.all_hold());

        let none = verify_inequalities(
            Some(&g),
            Some(&g),
            Some(&zero),
            None,
            "hypothesis not met: not confined",
            0.05,
        )
        .unwrap();
        assert!(!none.verdicts[1].holds);
        assert_eq!(
            none.verdicts[1].note.as_deref(),
            Some("hypothesis not met: not confined")
        );
        assert!(verify_inequalities(Some(&g), None, Some(&g), None, "", 0.1).is_err());
    }

    #[test]
    fn certify_gap_small() {
        let f2 = Alphabet::new(2).unwrap();
        let z = CosetGraph::from_abelianization(f2, &[vec![1], vec![0]]).unwrap();
        let cert = certify_gap(&z, 8, 1_000_000).unwrap();
        assert_eq!(cert.m, 1);
        assert!(cert.holds_hypothesis && cert.certified());
        assert!((cert.bound - 1.0397).abs() < 1e-4);
        assert!(cert.empirical_rate.rate < 0.2);

        let t4 = CosetGraph::trivial_subgroup(f2);
        let cert = certify_gap(&t4, 8, 1_000_000).unwrap();
        assert!(cert.inconclusive && !cert.holds_hypothesis);
        assert_eq!(cert.max_tree_radius, None);

        let z1 = Alphabet::new(1).unwrap();
        let c = CosetGraph::from_abelianization(z1, &[vec![1]]).unwrap();
        assert!(certify_gap(&c, 4, 1000).is_err());
    }

    #[test]
    fn negligible_ratio_sequence() {
        let r = negligible_ratios(&[1, 3, 5, 7], 2);
        assert_eq!(r, vec![1.0, 1.0, 5.0 / 9.0, 7.0 / 27.0]);
    }
}
