//! Coset inflation in free groups.
//!
//! A coset representative `g` is cut into pieces `s_1 ... s_m`. At each
//! cut point a block `f_i p_i f_i^-1` is chosen so that `p_i` labels a loop
//! at the vertex reached by `g_{i-1} f_i`; inserting any subset of blocks
//! then stays in the coset `Hg`. For a bit string `e` the map
//!
//! ```text
//! phi(e) = (b_1)^{e_1} s_1 (b_2)^{e_2} s_2 ... (b_m)^{e_m} s_m
//! ```
//!
//! sends `{0,1}^m` into `Hg`. Coset membership, injectivity and the length
//! bound `|phi(e)| <= |g| + R |e|` are all checked exactly.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::schreier::{CosetGraph, VertexId};
use crate::words::{conjugate, Letter, ReducedWord};

/// Largest power of a candidate conjugator tried before giving up.
pub const POWER_CAP: usize = 3;

/// Default exhaustive-verification limit on `m`.
pub const DEFAULT_MAX_BITS: usize = 20;

/// Default number of pairs drawn in sampled injectivity mode.
pub const DEFAULT_SAMPLED_PAIRS: usize = 100_000;

/// `g = s_1 ... s_m` with no cancellation between pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub g: ReducedWord,
    pub pieces: Vec<ReducedWord>,
    /// Prefix products `g_0 = 1, g_1, ..., g_m = g`.
    pub checkpoints: Vec<ReducedWord>,
    pub piece_length: usize,
}

impl Decomposition {
    pub fn m(&self) -> usize {
        self.pieces.len()
    }

    /// Density of cut points: `m >= theta |g|` with `theta = 1/(2L)`.
    pub fn theta(&self) -> f64 {
        1.0 / (2.0 * self.piece_length as f64)
    }
}

/// Splits `g` into consecutive blocks of length `piece_length`, folding a
/// short remainder into the last block.
pub fn decompose(g: &ReducedWord, piece_length: usize) -> Result<Decomposition> {
    if piece_length == 0 {
        return Err(Error::input("piece length must be at least 1"));
    }
    let len = g.len();
    let m = if len == 0 { 0 } else { (len / piece_length).max(1) };
    let mut pieces = Vec::with_capacity(m);
    let mut checkpoints = vec![g.alphabet().identity()];
    for i in 0..m {
        let start = i * piece_length;
        let end = if i + 1 == m { len } else { start + piece_length };
        pieces.push(g.slice(start, end));
        checkpoints.push(g.prefix(end));
    }
    Ok(Decomposition {
        g: g.clone(),
        pieces,
        checkpoints,
        piece_length,
    })
}

/// One inserted element `f p f^-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub f: ReducedWord,
    pub p: ReducedWord,
    /// `reduce(f p f^-1)`.
    pub word: ReducedWord,
    /// Letters of `word` left after reducing `s_{i-1} word s_i`.
    pub survivors: usize,
}

#[derive(Clone, Debug)]
pub struct InsertionScheme {
    pub decomposition: Decomposition,
    pub blocks: Vec<Block>,
    /// Longest reduced block; every insertion adds at most this many letters.
    pub r: usize,
    /// `max (2|f_i| + |p_i|)`, the unreduced block length.
    pub r_unreduced: usize,
    /// Smallest number of surviving block letters over all positions.
    pub survival_margin: usize,
    pub g_vertex: VertexId,
    graph: CosetGraph,
}

impl InsertionScheme {
    /// Assembles a scheme from explicit `(f_i, p_i)` choices without checking
    /// the loop or survival conditions.
    pub fn from_parts(
        decomposition: Decomposition,
        graph: &CosetGraph,
        choices: Vec<(ReducedWord, ReducedWord)>,
    ) -> Result<InsertionScheme> {
        if choices.len() != decomposition.m() {
            return Err(Error::input(format!(
                "{} blocks for {} pieces",
                choices.len(),
                decomposition.m()
            )));
        }
        let mut blocks = Vec::with_capacity(choices.len());
        for (i, (f, p)) in choices.into_iter().enumerate() {
            let word = conjugate(&f, &p)?;
            let survivors = surviving_letters(&decomposition, i, &word);
            blocks.push(Block { f, p, word, survivors });
        }
        Ok(InsertionScheme::assemble(decomposition, graph, blocks))
    }

    fn assemble(decomposition: Decomposition, graph: &CosetGraph, blocks: Vec<Block>) -> InsertionScheme {
        let r = blocks.iter().map(|b| b.word.len()).max().unwrap_or(0);
        let r_unreduced = blocks.iter().map(|b| 2 * b.f.len() + b.p.len()).max().unwrap_or(0);
        let survival_margin = blocks.iter().map(|b| b.survivors).min().unwrap_or(0);
        let g_vertex = graph.vertex_of(&decomposition.g);
        InsertionScheme {
            decomposition,
            blocks,
            r,
            r_unreduced,
            survival_margin,
            g_vertex,
            graph: graph.clone(),
        }
    }

    pub fn m(&self) -> usize {
        self.decomposition.m()
    }

    pub fn graph(&self) -> &CosetGraph {
        &self.graph
    }
}

/// Reduces `s_{i-1} . block . s_i` with each letter tagged by origin and
/// counts the block letters that survive.
fn surviving_letters(d: &Decomposition, i: usize, block: &ReducedWord) -> usize {
    let mut stack: Vec<(Letter, bool)> = Vec::new();
    let before = if i > 0 { d.pieces[i - 1].letters() } else { &[] };
    let tagged = before
        .iter()
        .map(|&l| (l, false))
        .chain(block.letters().iter().map(|&l| (l, true)))
        .chain(d.pieces[i].letters().iter().map(|&l| (l, false)));
    for (l, from_block) in tagged {
        match stack.last() {
            Some(&(top, _)) if top.cancels(l) => {
                stack.pop();
            }
            _ => stack.push((l, from_block)),
        }
    }
    stack.iter().filter(|(_, b)| *b).count()
}

/// Picks, for each cut point, the first `(f^k, p)` (over `k = 1..=3`, then
/// candidates in order, then `P` in order) such that `p` loops at the
/// vertex of `g_{i-1} f^k` and at least a third of the block survives
/// reduction against its neighbouring pieces.
pub fn choose_insertions(
    d: &Decomposition,
    graph: &CosetGraph,
    p: &[ReducedWord],
    f_candidates: &[ReducedWord],
) -> Result<InsertionScheme> {
    if f_candidates.is_empty() {
        return Err(Error::input("F_candidates is empty"));
    }
    if let Some(f) = f_candidates.iter().find(|f| f.len() < 2) {
        return Err(Error::input(format!("candidate {f:?} has length below 2")));
    }
    if p.is_empty() || p.iter().any(|w| w.is_empty()) {
        return Err(Error::input("P must be non-empty and exclude the identity"));
    }
    let alphabet = graph.alphabet();
    if let Some(w) = p
        .iter()
        .chain(f_candidates)
        .chain([&d.g])
        .find(|w| w.alphabet() != alphabet)
    {
        return Err(Error::input(format!(
            "word {w} is over a different alphabet than the graph"
        )));
    }
    let mut blocks = Vec::with_capacity(d.m());
    for i in 0..d.m() {
        let at = graph.vertex_of(&d.checkpoints[i]);
        let mut chosen = None;
        'search: for power in 1..=POWER_CAP {
            for cand in f_candidates {
                let f = cand.pow(power);
                let v = graph.walk(&at, f.letters());
                for q in p {
                    if graph.walk(&v, q.letters()) != v {
                        continue;
                    }
                    let word = conjugate(&f, q)?;
                    let survivors = surviving_letters(d, i, &word);
                    if !word.is_empty() && survivors >= word.len().div_ceil(3) {
                        chosen = Some(Block {
                            f: f.clone(),
                            p: q.clone(),
                            word,
                            survivors,
                        });
                        break 'search;
                    }
                }
            }
        }
        match chosen {
            Some(b) => blocks.push(b),
            None => {
                return Err(Error::SelectionFailure {
                    position: i + 1,
                    reason: format!(
                        "no p in P loops at g_{{i-1}} f^k with a surviving block, for f among {} candidates and k <= {POWER_CAP}",
                        f_candidates.len()
                    ),
                })
            }
        }
    }
    Ok(InsertionScheme::assemble(d.clone(), graph, blocks))
}

/// A bit string `e in {0,1}^m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    /// Position `i` (0-based) carries bit `i` of `index`.
    pub fn from_index(index: u64, m: usize) -> BitString {
        BitString((0..m).map(|i| (index >> i) & 1 == 1).collect())
    }

    pub fn ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// First position (1-based) where two strings differ.
    pub fn first_difference(&self, other: &BitString) -> Option<usize> {
        self.0.iter().zip(&other.0).position(|(a, b)| a != b).map(|i| i + 1)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug)]
pub struct PhiImage {
    pub epsilon: BitString,
    pub word: ReducedWord,
    pub vertex: VertexId,
    pub length: usize,
    /// `length <= |g| + R |e|`.
    pub within_bound: bool,
}

/// Evaluates the inflation map at one bit string.
pub fn phi(scheme: &InsertionScheme, epsilon: &BitString) -> Result<PhiImage> {
    if epsilon.0.len() != scheme.m() {
        return Err(Error::input(format!(
            "bit string has length {}, scheme has m = {}",
            epsilon.0.len(),
            scheme.m()
        )));
    }
    let mut raw: Vec<Letter> = Vec::new();
    for ((&bit, block), piece) in epsilon.0.iter().zip(&scheme.blocks).zip(&scheme.decomposition.pieces) {
        if bit {
            raw.extend_from_slice(block.word.letters());
        }
        raw.extend_from_slice(piece.letters());
    }
    let graph = &scheme.graph;
    let vertex = graph.walk(&graph.root(), &raw);
    let word = crate::words::reduce(graph.alphabet(), &raw)?;
    assert_eq!(
        graph.vertex_of(&word),
        vertex,
        "free reduction changed the endpoint of a walk"
    );
    let length = word.len();
    let bound = scheme.decomposition.g.len() + scheme.r * epsilon.ones();
    Ok(PhiImage {
        epsilon: epsilon.clone(),
        word,
        vertex,
        length,
        within_bound: length <= bound,
    })
}

/// All `2^m` images; image `j` is evaluated at `BitString::from_index(j, m)`.
pub fn generate_images(scheme: &InsertionScheme, max_bits: usize) -> Result<Vec<PhiImage>> {
    let m = scheme.m();
    if m > max_bits || m >= 63 {
        return Err(Error::resource(format!(
            "m = {m} needs 2^{m} images, over the exhaustive limit of 2^{max_bits}; use sampled mode"
        )));
    }
    (0..1u64 << m)
        .into_par_iter()
        .map(|idx| phi(scheme, &BitString::from_index(idx, m)))
        .collect()
}

/// Every image ends at the vertex of `g`, i.e. lies in `Hg`.
pub fn verify_coset(scheme: &InsertionScheme, images: &[PhiImage]) -> bool {
    images.iter().all(|im| im.vertex == scheme.g_vertex)
}

#[derive(Clone, Debug, Serialize)]
pub struct Collision {
    pub first: BitString,
    pub second: BitString,
    pub word: String,
    /// Smallest index in the symmetric difference of the two index sets.
    pub first_difference: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub injective: bool,
    pub mode: String,
    pub comparisons: u64,
    pub seed: Option<u64>,
    pub collision: Option<Collision>,
}

/// Exhaustive check that the images are pairwise distinct words.
pub fn verify_injective(scheme: &InsertionScheme, images: &[PhiImage]) -> InjectivityReport {
    let _ = scheme;
    let mut seen: HashMap<&ReducedWord, &BitString> = HashMap::with_capacity(images.len());
    let mut collision = None;
    for im in images {
        if let Some(prev) = seen.insert(&im.word, &im.epsilon) {
            collision = Some(Collision {
                first: prev.clone(),
                second: im.epsilon.clone(),
                word: im.word.to_string(),
                first_difference: prev.first_difference(&im.epsilon).unwrap_or(0),
            });
            break;
        }
    }
    InjectivityReport {
        injective: collision.is_none(),
        mode: "exhaustive".into(),
        comparisons: images.len() as u64,
        seed: None,
        collision,
    }
}

fn random_bits(rng: &mut ChaCha8Rng, m: usize) -> BitString {
    BitString((0..m).map(|_| rng.random::<bool>()).collect())
}

/// Draws `pairs` random pairs of distinct bit strings and compares images;
/// also checks that each sampled image stays in the coset.
pub fn verify_injective_sampled(
    scheme: &InsertionScheme,
    pairs: usize,
    seed: u64,
) -> Result<(InjectivityReport, bool)> {
    let m = scheme.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(pairs);
    if m > 0 {
        while draws.len() < pairs {
            let a = random_bits(&mut rng, m);
            let b = random_bits(&mut rng, m);
            if a != b {
                draws.push((a, b));
            }
        }
    }
    let outcomes: Vec<(bool, Option<Collision>)> = draws
        .par_iter()
        .map(|(a, b)| -> Result<(bool, Option<Collision>)> {
            let (ia, ib) = (phi(scheme, a)?, phi(scheme, b)?);
            let in_coset = ia.vertex == scheme.g_vertex && ib.vertex == scheme.g_vertex;
            let collision = (ia.word == ib.word).then(|| Collision {
                first: a.clone(),
                second: b.clone(),
                word: ia.word.to_string(),
                first_difference: a.first_difference(b).unwrap_or(0),
            });
            Ok((in_coset, collision))
        })
        .collect::<Result<_>>()?;
    let coset_ok = outcomes.iter().all(|(c, _)| *c);
    let collision = outcomes.into_iter().find_map(|(_, c)| c);
    Ok((
        InjectivityReport {
            injective: collision.is_none(),
            mode: "sampled".into(),
            comparisons: draws.len() as u64,
            seed: Some(seed),
            collision,
        },
        coset_ok,
    ))
}

/// The images of two schemes never share an element.
pub fn images_disjoint(a: &[PhiImage], b: &[PhiImage]) -> bool {
    let words: std::collections::HashSet<&ReducedWord> = a.iter().map(|im| &im.word).collect();
    b.iter().all(|im| !words.contains(&im.word))
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentialCountReport {
    pub m: usize,
    /// `2^m` distinct elements of `Hg`.
    pub elements: f64,
    pub g_length: usize,
    pub r: usize,
    /// `|g| + R m`.
    pub max_length: usize,
    pub observed_max_length: Option<usize>,
    pub theta: f64,
    pub s: f64,
    /// `(1 + e^{-sR})^{theta |g|}`.
    pub factor_theta: f64,
    /// `(1 + e^{-sR})^m`.
    pub factor_m: f64,
    /// `e^{-s|g|} (1 + e^{-sR})^m`, a lower bound for `observed_sum`.
    pub lower_bound_sum: f64,
    /// `sum_e e^{-s |phi(e)|}` over the generated images.
    pub observed_sum: Option<f64>,
}

/// Summarizes the exponential family produced by a verified scheme.
pub fn exponential_count_report(
    scheme: &InsertionScheme,
    coset_verified: Option<bool>,
    injectivity: Option<&InjectivityReport>,
    images: Option<&[PhiImage]>,
    s: f64,
) -> Result<ExponentialCountReport> {
    let (Some(coset_ok), Some(inj)) = (coset_verified, injectivity) else {
        return Err(Error::State("coset and injectivity verification must run first".into()));
    };
    if !coset_ok || !inj.injective {
        return Err(Error::State(format!(
            "verification failed (coset: {coset_ok}, injective: {})",
            inj.injective
        )));
    }
    let m = scheme.m();
    let g_length = scheme.decomposition.g.len();
    let theta = scheme.decomposition.theta();
    let base = 1.0 + (-s * scheme.r as f64).exp();
    let factor_m = base.powi(m as i32);
    Ok(ExponentialCountReport {
        m,
        elements: 2f64.powi(m as i32),
        g_length,
        r: scheme.r,
        max_length: g_length + scheme.r * m,
        observed_max_length: images.and_then(|ims| ims.iter().map(|im| im.length).max()),
        theta,
        s,
        factor_theta: base.powf(theta * g_length as f64),
        factor_m,
        lower_bound_sum: (-s * g_length as f64).exp() * factor_m,
        observed_sum: images.map(|ims| ims.iter().map(|im| (-s * im.length as f64).exp()).sum()),
    })
}
