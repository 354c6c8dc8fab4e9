//! Run configuration, backend spec strings and the JSON reports emitted by
//! the command-line tool.
//!
//! Every report is a JSON object with a fixed key order; reals are rounded
//! to 12 significant digits before printing, so identical configurations
//! give byte-identical output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::growth::{
    certify_gap, estimate_rate, negligible_ratios, poincare_partial, verify_inequalities, CountKind, GapCertificate,
    GrowthEstimate, WindowPolicy,
};
use crate::insertion::{
    choose_insertions, decompose, exponential_count_report, generate_images, verify_coset, verify_injective,
    verify_injective_sampled, InsertionScheme, DEFAULT_MAX_BITS, DEFAULT_SAMPLED_PAIRS, POWER_CAP,
};
use crate::schreier::{bfs_ball, confinement_check, hashimoto_growth, loop_counts, ConfinementReport, CosetGraph};
use crate::words::{Alphabet, ReducedWord};
use crate::DEFAULT_VERTEX_BUDGET;

pub const DEFAULT_RANK: u32 = 2;
pub const DEFAULT_RADIUS: usize = 12;
pub const DEFAULT_MAX_LEN: usize = 18;
pub const DEFAULT_TOL: f64 = 0.05;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_S: f64 = 1.0;
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Settings for one command, read from a JSON file and/or flags.
///
/// Every field is optional so that two configurations can be layered with
/// [`RunConfig::overridden_by`].
#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct RunConfig {
    pub backend: Option<String>,
    pub rank: Option<u32>,
    pub radius: Option<usize>,
    pub p: Option<Vec<String>>,
    pub g: Option<String>,
    #[serde(alias = "piece-len")]
    pub piece_len: Option<usize>,
    #[serde(alias = "f-candidates")]
    pub f_candidates: Option<Vec<String>>,
    pub s: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub budget: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub log2: Option<bool>,
    #[serde(alias = "max-len")]
    pub max_len: Option<usize>,
    #[serde(alias = "max-bits")]
    pub max_bits: Option<usize>,
    pub sampled: Option<bool>,
    pub pairs: Option<usize>,
}

macro_rules! layer {
    ($base:expr, $top:expr, $($field:ident),*) => {
        RunConfig { $($field: $top.$field.or($base.$field),)* }
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("config: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::input(format!("{}: {e}", path.display())))
    }

    /// Fields set in `top` replace those of `self`.
    pub fn overridden_by(self, top: RunConfig) -> RunConfig {
        layer!(
            self,
            top,
            backend,
            rank,
            radius,
            p,
            g,
            piece_len,
            f_candidates,
            s,
            tol,
            budget,
            seed,
            out,
            log2,
            max_len,
            max_bits,
            sampled,
            pairs
        )
    }

    /// Builds the graph and fills in defaults.
    pub fn resolve(&self) -> Result<Resolved> {
        let spec = self.backend.clone().unwrap_or_else(|| "trivial".into());
        let graph = parse_backend(&spec, self.rank)?;
        let alphabet = graph.alphabet();
        let radius = self.radius.unwrap_or(DEFAULT_RADIUS);
        if radius < 1 {
            return Err(Error::input("radius must be at least 1"));
        }
        let parse_all = |field: &str, words: &[String]| -> Result<Vec<ReducedWord>> {
            words
                .iter()
                .map(|w| alphabet.parse(w).map_err(|e| in_field(field, e)))
                .collect()
        };
        let p = parse_all("p", self.p.as_deref().unwrap_or_default())?;
        let f_candidates = match &self.f_candidates {
            Some(list) => parse_all("f_candidates", list)?,
            None => default_f_candidates(alphabet),
        };
        let g = self
            .g
            .as_deref()
            .map(|w| alphabet.parse(w).map_err(|e| in_field("g", e)))
            .transpose()?;
        let piece_len = self.piece_len.unwrap_or(1);
        if piece_len < 1 {
            return Err(Error::input("piece_len must be at least 1"));
        }
        let tol = self.tol.unwrap_or(DEFAULT_TOL);
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::input(format!("tol = {tol} must be finite and non-negative")));
        }
        let s = self.s.clone().unwrap_or_else(|| vec![DEFAULT_S]);
        if let Some(bad) = s.iter().find(|x| !x.is_finite()) {
            return Err(Error::input(format!("s value {bad} is not finite")));
        }
        Ok(Resolved {
            spec,
            graph,
            radius,
            p,
            g,
            piece_len,
            f_candidates,
            s,
            tol,
            budget: self.budget.unwrap_or(DEFAULT_VERTEX_BUDGET),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            log2: self.log2.unwrap_or(false),
            max_len: self.max_len.unwrap_or(DEFAULT_MAX_LEN),
            max_bits: self.max_bits.unwrap_or(DEFAULT_MAX_BITS),
            sampled: self.sampled.unwrap_or(false),
            pairs: self.pairs.unwrap_or(DEFAULT_SAMPLED_PAIRS),
        })
    }
}

/// A configuration with its graph built and defaults applied.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub spec: String,
    pub graph: CosetGraph,
    pub radius: usize,
    pub p: Vec<ReducedWord>,
    pub g: Option<ReducedWord>,
    pub piece_len: usize,
    pub f_candidates: Vec<ReducedWord>,
    pub s: Vec<f64>,
    pub tol: f64,
    pub budget: usize,
    pub seed: u64,
    pub log2: bool,
    pub max_len: usize,
    pub max_bits: usize,
    pub sampled: bool,
    pub pairs: usize,
}

/// `ab, aB, aab` for rank 2; `x_i x_j` (`i < j`) otherwise.
pub fn default_f_candidates(alphabet: Alphabet) -> Vec<ReducedWord> {
    let n = alphabet.rank();
    if n == 2 {
        return ["ab", "aB", "aab"]
            .iter()
            .map(|w| alphabet.parse(w).expect("rank 2 literal"))
            .collect();
    }
    let gens = alphabet.letters();
    let mut out = Vec::new();
    for i in 0..n as usize {
        for j in i + 1..n as usize {
            out.push(crate::words::reduce(alphabet, &[gens[i], gens[j]]).expect("generators"));
        }
    }
    out
}

fn in_field(field: &str, err: Error) -> Error {
    match err {
        Error::Input(msg) => Error::Input(format!("{field}: {msg}")),
        other => other,
    }
}

fn parse_int<T: std::str::FromStr>(what: &str, text: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::input(format!("{what}: cannot parse {text:?} as an integer")))
}

fn check_rank(spec: &str, given: Option<u32>, implied: usize) -> Result<Alphabet> {
    let implied = u32::try_from(implied).map_err(|_| Error::input("rank too large"))?;
    if let Some(r) = given {
        if r != implied {
            return Err(Error::input(format!(
                "backend {spec:?} has rank {implied}, but rank {r} was requested"
            )));
        }
    }
    Alphabet::new(implied)
}

/// Builds a graph from a backend spec string:
///
/// - `trivial`: the Cayley tree of `F_n`
/// - `abelian:1;0` or `abelian:1,0;0,1`: kernel of `F_n -> Z^k`, one
///   weight vector per generator
/// - `free-product:2,3` (`inf` for infinite order): kernel of `F_n` onto a
///   free product of cyclic groups
/// - `cyclic:N:w1,w2`: the finite coset graph of the kernel of
///   `F_n -> Z/N`, `x_i -> w_i`
/// - `file:path.json`: an explicit edge list
pub fn parse_backend(spec: &str, rank: Option<u32>) -> Result<CosetGraph> {
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "trivial" => Ok(CosetGraph::trivial_subgroup(Alphabet::new(
            rank.unwrap_or(DEFAULT_RANK),
        )?)),
        "abelian" => {
            let weights: Vec<Vec<i64>> = args
                .split(';')
                .map(|row| row.split(',').map(|x| parse_int("abelian weight", x)).collect())
                .collect::<Result<_>>()?;
            let alphabet = check_rank(spec, rank, weights.len())?;
            CosetGraph::from_abelianization(alphabet, &weights)
        }
        "free-product" => {
            let orders: Vec<Option<u32>> = args
                .split(',')
                .map(|x| match x.trim() {
                    "inf" => Ok(None),
                    x => parse_int("factor order", x).map(Some),
                })
                .collect::<Result<_>>()?;
            let alphabet = check_rank(spec, rank, orders.len())?;
            CosetGraph::from_free_product(alphabet, &orders)
        }
        "cyclic" => {
            let (n, ws) = args
                .split_once(':')
                .ok_or_else(|| Error::input(format!("backend {spec:?}: expected cyclic:N:w1,w2,...")))?;
            let n: usize = parse_int("cyclic order", n)?;
            if n < 1 {
                return Err(Error::input("cyclic order must be at least 1"));
            }
            let ws: Vec<i64> = ws
                .split(',')
                .map(|x| parse_int("cyclic weight", x))
                .collect::<Result<_>>()?;
            let alphabet = check_rank(spec, rank, ws.len())?;
            let table: Vec<Vec<usize>> = (0..n)
                .map(|v| {
                    ws.iter()
                        .map(|&w| (v as i64 + w).rem_euclid(n as i64) as usize)
                        .collect()
                })
                .collect();
            CosetGraph::from_coset_table(alphabet, &table, 0)
        }
        "file" => {
            let g = CosetGraph::from_edge_list_file(args)?;
            check_rank(spec, rank, g.rank() as usize)?;
            Ok(g)
        }
        _ => Err(Error::UnsupportedBackend(format!(
            "{kind:?} (expected trivial, abelian, free-product, cyclic or file)"
        ))),
    }
}

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

fn canonicalize(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"));
            *v = serde_json::Number::from_f64(x)
                .map(Value::Number)
                .unwrap_or(Value::Null);
        }
        Value::Array(items) => items.iter_mut().for_each(canonicalize),
        Value::Object(map) => map.values_mut().for_each(canonicalize),
        _ => {}
    }
}

/// Pretty-printed JSON with rounded reals and a trailing newline.
pub fn to_canonical_json<T: Serialize>(report: &T) -> Result<String> {
    let mut value = serde_json::to_value(report)?;
    canonicalize(&mut value);
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    Ok(text)
}

/// A finished report and the process status it implies.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Value,
    /// 0 on success, 2 when a hypothesis or verification fails.
    pub status: i32,
}

fn words(ws: &[ReducedWord]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

fn header(command: &str, r: &Resolved) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("backend".into(), json!(r.spec));
    m.insert("backend_kind".into(), json!(r.graph.kind().to_string()));
    m.insert("rank".into(), json!(r.graph.rank()));
    m.insert("radius".into(), json!(r.radius));
    m.insert("budget".into(), json!(r.budget));
    m
}

fn confinement_json(c: &ConfinementReport) -> Value {
    json!({
        "p": words(&c.p),
        "radius": c.radius,
        "holds": c.holds,
        "vertices_checked": c.vertices_checked,
        "failing_vertex": c.failing_vertex.as_ref().map(|v| v.to_string()),
    })
}

fn log2_view(rates: &[(&str, f64)]) -> Value {
    let mut m = Map::new();
    for (name, rate) in rates {
        m.insert((*name).into(), json!(rate / std::f64::consts::LN_2));
    }
    Value::Object(m)
}

/// `w_H` for the graph: closed-walk regression, plus the exact spectral value
/// when the graph is finite.
fn subgroup_rate(r: &Resolved) -> Result<(GrowthEstimate, Option<GrowthEstimate>, Value)> {
    let counts = loop_counts(&r.graph, r.max_len, r.budget)?;
    let regression = estimate_rate(&counts, CountKind::ClosedWalks, WindowPolicy::TopHalf)?;
    if r.graph.is_finite() {
        let spec = hashimoto_growth(&r.graph, r.budget)?;
        let detail = serde_json::to_value(&spec)?;
        Ok((regression, Some(GrowthEstimate::spectral(spec.rate)), detail))
    } else {
        Ok((regression, None, Value::Null))
    }
}

/// Ball counts, quotient and subgroup growth, Poincare partial sums and the
/// negligible-growth ratios.
pub fn cmd_analyze(r: &Resolved) -> Result<Outcome> {
    let ball = bfs_ball(&r.graph, r.radius, r.budget)?;
    let spheres = ball.counts();
    let balls = ball.ball_counts();
    let omega_g = GrowthEstimate::free_group(r.graph.rank());
    let quotient = estimate_rate(&spheres, CountKind::Spheres, WindowPolicy::TopHalf)?;
    let (h_regression, h_spectral, spectral_detail) = subgroup_rate(r)?;
    let poincare: Vec<Value> =
        r.s.iter()
            .map(|&s| -> Result<Value> {
                Ok(json!({"s": s, "depth": r.radius, "partial_sum": poincare_partial(&spheres, s, r.radius)?}))
            })
            .collect::<Result<_>>()?;
    let mut m = header("analyze", r);
    m.insert("sphere_counts".into(), json!(spheres));
    m.insert("ball_counts".into(), json!(balls));
    m.insert("omega_g".into(), serde_json::to_value(&omega_g)?);
    m.insert("omega_quotient".into(), serde_json::to_value(&quotient)?);
    m.insert("max_len".into(), json!(r.max_len));
    m.insert("omega_h".into(), serde_json::to_value(&h_regression)?);
    m.insert("omega_h_spectral".into(), serde_json::to_value(&h_spectral)?);
    m.insert("hashimoto".into(), spectral_detail);
    m.insert("poincare".into(), Value::Array(poincare));
    m.insert(
        "negligible_ratios".into(),
        json!(negligible_ratios(&balls, r.graph.rank())),
    );
    if r.log2 {
        m.insert(
            "rates_log2".into(),
            log2_view(&[
                ("omega_g", omega_g.rate),
                ("omega_quotient", quotient.rate),
                ("omega_h", h_regression.rate),
            ]),
        );
    }
    Ok(Outcome {
        report: Value::Object(m),
        status: 0,
    })
}

fn require_p(r: &Resolved, command: &str) -> Result<()> {
    if r.p.is_empty() {
        return Err(Error::input(format!("{command} needs a confining set (--p)")));
    }
    Ok(())
}

/// Confinement check followed by the gap certificate. Succeeds only when
/// `P` confines the ball and the certificate holds.
pub fn cmd_certify(r: &Resolved) -> Result<Outcome> {
    require_p(r, "certify")?;
    let confinement = confinement_check(&r.graph, &r.p, r.radius, r.budget)?;
    let cert = certify_gap(&r.graph, r.radius, r.budget)?;
    let status = if confinement.holds && cert.certified() { 0 } else { 2 };
    let mut m = header("certify", r);
    m.insert("confinement".into(), confinement_json(&confinement));
    m.insert("certificate".into(), serde_json::to_value(&cert)?);
    m.insert("certified".into(), json!(status == 0));
    m.insert("verdict".into(), json!(certify_verdict(&confinement, &cert)));
    if r.log2 {
        m.insert(
            "rates_log2".into(),
            log2_view(&[
                ("bound", cert.bound),
                ("omega_free", cert.omega_free),
                ("empirical_rate", cert.empirical_rate.rate),
            ]),
        );
    }
    Ok(Outcome {
        report: Value::Object(m),
        status,
    })
}

fn certify_verdict(c: &ConfinementReport, cert: &GapCertificate) -> String {
    if !c.holds {
        let v = c.failing_vertex.as_ref().map(|v| v.to_string()).unwrap_or_default();
        return format!("hypothesis not met: no P-loop at vertex {v}");
    }
    if cert.inconclusive {
        return format!(
            "inconclusive: {} audited vertices have no cycle within their horizon",
            cert.uncertified_vertices
        );
    }
    if !cert.rate_within_bound {
        return "empirical rate exceeds the certified bound".into();
    }
    "certified".into()
}

fn scheme_json(s: &InsertionScheme) -> Value {
    let d = &s.decomposition;
    let blocks: Vec<Value> = s
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            json!({
                "position": i + 1,
                "f": b.f.to_string(),
                "p": b.p.to_string(),
                "block": b.word.to_string(),
                "survivors": b.survivors,
            })
        })
        .collect();
    json!({
        "g": d.g.to_string(),
        "g_length": d.g.len(),
        "piece_length": d.piece_length,
        "m": d.m(),
        "theta": d.theta(),
        "pieces": words(&d.pieces),
        "checkpoints": words(&d.checkpoints),
        "blocks": blocks,
        "r": s.r,
        "r_unreduced": s.r_unreduced,
        "survival_margin": s.survival_margin,
        "g_vertex": s.g_vertex.to_string(),
    })
}

/// Builds the insertion scheme for `g`, verifies coset membership and
/// injectivity of the inflation map, and reports the exponential count.
pub fn cmd_insert(r: &Resolved) -> Result<Outcome> {
    require_p(r, "insert")?;
    let g =
        r.g.clone()
            .ok_or_else(|| Error::input("insert needs a coset representative (--g)"))?;
    let d = decompose(&g, r.piece_len)?;
    let f_max = r.f_candidates.iter().map(|f| f.len()).max().unwrap_or(0);
    let needed = g.len() + POWER_CAP * f_max;
    let confinement = confinement_check(&r.graph, &r.p, needed.max(1), r.budget)?;
    let scheme = choose_insertions(&d, &r.graph, &r.p, &r.f_candidates)?;
    let (coset_ok, injectivity, images, length_ok) = if r.sampled {
        let (inj, coset_ok) = verify_injective_sampled(&scheme, r.pairs, r.seed)?;
        (coset_ok, inj, None, None)
    } else {
        let images = generate_images(&scheme, r.max_bits)?;
        let coset_ok = verify_coset(&scheme, &images);
        let inj = verify_injective(&scheme, &images);
        let length_ok = images.iter().all(|im| im.within_bound);
        (coset_ok, inj, Some(images), Some(length_ok))
    };
    let verified = coset_ok && injectivity.injective && length_ok.unwrap_or(true);
    let counts: Vec<Value> = if verified {
        r.s.iter()
            .map(|&s| exponential_count_report(&scheme, Some(coset_ok), Some(&injectivity), images.as_deref(), s))
            .map(|rep| rep.and_then(|x| Ok(serde_json::to_value(x)?)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let mut m = header("insert", r);
    m.insert("confinement".into(), confinement_json(&confinement));
    m.insert("f_candidates".into(), json!(words(&r.f_candidates)));
    m.insert("scheme".into(), scheme_json(&scheme));
    m.insert(
        "verification".into(),
        json!({
            "images": images.as_ref().map(|ims| ims.len()),
            "coset": coset_ok,
            "injectivity": serde_json::to_value(&injectivity)?,
            "length_bound": length_ok,
        }),
    );
    m.insert("exponential_count".into(), Value::Array(counts));
    m.insert("verified".into(), json!(verified));
    Ok(Outcome {
        report: Value::Object(m),
        status: if verified { 0 } else { 2 },
    })
}

/// Computes the three growth rates and checks the inequalities between
/// them, using the gap certificate when `P` confines the graph.
pub fn cmd_verify(r: &Resolved) -> Result<Outcome> {
    let ball = bfs_ball(&r.graph, r.radius, r.budget)?;
    let omega_g = GrowthEstimate::free_group(r.graph.rank());
    let quotient = estimate_rate(&ball.counts(), CountKind::Spheres, WindowPolicy::TopHalf)?;
    let (h_regression, h_spectral, _) = subgroup_rate(r)?;
    let omega_h = h_spectral.clone().unwrap_or_else(|| h_regression.clone());
    let (confinement, cert) = if r.p.is_empty() {
        (None, None)
    } else {
        let c = confinement_check(&r.graph, &r.p, r.radius, r.budget)?;
        let cert = if r.graph.rank() >= 2 {
            Some(certify_gap(&r.graph, r.radius, r.budget)?)
        } else {
            None
        };
        (Some(c), cert)
    };
    let confined = confinement.as_ref().is_some_and(|c| c.holds);
    let gap_bound = match &cert {
        Some(c) if confined && c.holds_hypothesis => Some(c.bound),
        _ => None,
    };
    let note = if r.p.is_empty() {
        "hypothesis not met: no confining set given"
    } else if !confined {
        "hypothesis not met: not confined"
    } else {
        "hypothesis not met: no certified tree-ball bound"
    };
    let inequalities = verify_inequalities(Some(&omega_g), Some(&quotient), Some(&omega_h), gap_bound, note, r.tol)?;
    let all_hold = inequalities.all_hold();
    let verdict = match inequalities.verdicts.iter().find(|v| !v.holds) {
        None => "all inequalities hold".to_string(),
        Some(v) => match &v.note {
            Some(note) if note.starts_with("hypothesis not met") => format!("{}: {note}", v.name),
            _ => format!("{} fails with slack {:.6}", v.name, v.slack),
        },
    };
    let mut m = header("verify", r);
    m.insert("max_len".into(), json!(r.max_len));
    m.insert("tol".into(), json!(r.tol));
    m.insert(
        "confinement".into(),
        confinement.as_ref().map(confinement_json).unwrap_or(Value::Null),
    );
    m.insert("certificate".into(), serde_json::to_value(&cert)?);
    m.insert("omega_h_regression".into(), serde_json::to_value(&h_regression)?);
    m.insert("inequalities".into(), serde_json::to_value(&inequalities)?);
    m.insert("all_hold".into(), json!(all_hold));
    m.insert("verdict".into(), json!(verdict));
    if r.log2 {
        m.insert(
            "rates_log2".into(),
            log2_view(&[
                ("omega_g", omega_g.rate),
                ("omega_quotient", quotient.rate),
                ("omega_h", omega_h.rate),
            ]),
        );
    }
    Ok(Outcome {
        report: Value::Object(m),
        status: if all_hold { 0 } else { 2 },
    })
}
