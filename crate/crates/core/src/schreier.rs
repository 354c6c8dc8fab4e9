//! Rooted, generator-labelled coset graphs `H\F_n`.
//!
//! A [`CosetGraph`] is the right action of `F_n` on the cosets of a subgroup
//! `H`, given by a backend that maps `(vertex, letter)` to a vertex. Infinite
//! graphs are never built in full; every analysis here works on an explicit
//! radius and records it.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::words::{Alphabet, Letter, ReducedWord};

/// Identity of a coset. Equal ids denote the same coset `Hg`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexId {
    /// Row of a finite coset table.
    Index(usize),
    /// Image in `Z^k` under an abelian weight map.
    Vector(Vec<i64>),
    /// Normal form in a free product of cyclic groups: `(generator, exponent)` syllables.
    Syllables(Vec<(u32, i64)>),
    /// Reduced word, for the trivial subgroup.
    Word(ReducedWord),
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Index(i) => write!(f, "{i}"),
            VertexId::Vector(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            VertexId::Syllables(s) if s.is_empty() => write!(f, "1"),
            VertexId::Syllables(s) => {
                for &(g, e) in s {
                    let l = Letter::generator(g);
                    let l = if e < 0 { l.inverse() } else { l };
                    for _ in 0..e.unsigned_abs() {
                        write!(f, "{l}")?;
                    }
                }
                Ok(())
            }
            VertexId::Word(w) if w.is_empty() => write!(f, "1"),
            VertexId::Word(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    CosetTable,
    Abelianization,
    FreeProduct,
    ExplicitFile,
    TrivialSubgroup,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BackendKind::CosetTable => "coset-table",
            BackendKind::Abelianization => "abelianization",
            BackendKind::FreeProduct => "free-product",
            BackendKind::ExplicitFile => "explicit-file",
            BackendKind::TrivialSubgroup => "trivial-subgroup",
        };
        f.write_str(s)
    }
}

/// The action of `F_n` on cosets. Implementations must be deterministic and
/// total, and satisfy `step(step(v, s), s^-1) == v`.
pub trait SchreierBackend: Send + Sync + fmt::Debug {
    fn kind(&self) -> BackendKind;
    fn root(&self) -> VertexId;
    fn step(&self, v: &VertexId, letter: Letter) -> VertexId;
    /// Number of vertices when the graph is finite.
    fn vertex_count(&self) -> Option<usize>;
    fn label(&self, v: &VertexId) -> String {
        v.to_string()
    }
}

/// A finite permutation action stored as a dense table over all `2n` letters.
#[derive(Debug, Clone)]
struct CosetTable {
    kind: BackendKind,
    rank: u32,
    root: usize,
    /// `next[v][slot]`
    next: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
}

impl SchreierBackend for CosetTable {
    fn kind(&self) -> BackendKind {
        self.kind
    }

    fn root(&self) -> VertexId {
        VertexId::Index(self.root)
    }

    fn step(&self, v: &VertexId, letter: Letter) -> VertexId {
        match v {
            VertexId::Index(i) => VertexId::Index(self.next[*i][letter.slot(self.rank)]),
            other => panic!("coset table cannot act on {other:?}"),
        }
    }

    fn vertex_count(&self) -> Option<usize> {
        Some(self.next.len())
    }

    fn label(&self, v: &VertexId) -> String {
        match (v, &self.labels) {
            (VertexId::Index(i), Some(labels)) => labels[*i].clone(),
            _ => v.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
struct Abelianization {
    weights: Vec<Vec<i64>>,
}

impl SchreierBackend for Abelianization {
    fn kind(&self) -> BackendKind {
        BackendKind::Abelianization
    }

    fn root(&self) -> VertexId {
        VertexId::Vector(vec![0; self.weights.first().map_or(0, |w| w.len())])
    }

    fn step(&self, v: &VertexId, letter: Letter) -> VertexId {
        let VertexId::Vector(x) = v else {
            panic!("abelian backend cannot act on {v:?}");
        };
        let w = &self.weights[(letter.generator_index() - 1) as usize];
        let sign = if letter.is_inverse() { -1 } else { 1 };
        VertexId::Vector(x.iter().zip(w).map(|(a, b)| a + sign * b).collect())
    }

    fn vertex_count(&self) -> Option<usize> {
        if self.weights.iter().all(|w| w.iter().all(|&x| x == 0)) {
            Some(1)
        } else {
            None
        }
    }
}

/// Free product of cyclic groups, one factor per generator.
#[derive(Debug, Clone)]
struct FreeProduct {
    /// `None` is an infinite cyclic factor.
    orders: Vec<Option<u32>>,
}

impl SchreierBackend for FreeProduct {
    fn kind(&self) -> BackendKind {
        BackendKind::FreeProduct
    }

    fn root(&self) -> VertexId {
        VertexId::Syllables(Vec::new())
    }

    fn step(&self, v: &VertexId, letter: Letter) -> VertexId {
        let VertexId::Syllables(s) = v else {
            panic!("free-product backend cannot act on {v:?}");
        };
        let g = letter.generator_index();
        let order = self.orders[(g - 1) as usize];
        let delta = if letter.is_inverse() { -1 } else { 1 };
        let normalize = |e: i64| match order {
            Some(m) => e.rem_euclid(m as i64),
            None => e,
        };
        let mut out = s.clone();
        match out.last_mut() {
            Some((last, e)) if *last == g => {
                *e = normalize(*e + delta);
                if *e == 0 {
                    out.pop();
                }
            }
            _ => out.push((g, normalize(delta))),
        }
        VertexId::Syllables(out)
    }

    fn vertex_count(&self) -> Option<usize> {
        match self.orders.as_slice() {
            [Some(m)] => Some(*m as usize),
            _ => None,
        }
    }
}

/// The Cayley tree itself: `H = {1}`.
#[derive(Debug, Clone)]
struct TrivialSubgroup {
    alphabet: Alphabet,
}

impl SchreierBackend for TrivialSubgroup {
    fn kind(&self) -> BackendKind {
        BackendKind::TrivialSubgroup
    }

    fn root(&self) -> VertexId {
        VertexId::Word(self.alphabet.identity())
    }

    fn step(&self, v: &VertexId, letter: Letter) -> VertexId {
        let VertexId::Word(w) = v else {
            panic!("trivial-subgroup backend cannot act on {v:?}");
        };
        let mut letters = w.letters().to_vec();
        crate::words::push_reduced(&mut letters, &[letter]);
        VertexId::Word(crate::words::reduce(self.alphabet, &letters).expect("letters in alphabet"))
    }

    fn vertex_count(&self) -> Option<usize> {
        None
    }
}

/// A rooted Schreier graph with a pluggable backend.
#[derive(Clone, Debug)]
pub struct CosetGraph {
    alphabet: Alphabet,
    backend: Arc<dyn SchreierBackend>,
}

impl CosetGraph {
    pub fn from_backend(alphabet: Alphabet, backend: Arc<dyn SchreierBackend>) -> CosetGraph {
        CosetGraph { alphabet, backend }
    }

    /// Finite action given by one permutation of `0..N` per generator:
    /// `table[v][i]` is `v · x_{i+1}`.
    pub fn from_coset_table(alphabet: Alphabet, table: &[Vec<usize>], root: usize) -> Result<CosetGraph> {
        let n = alphabet.rank() as usize;
        let size = table.len();
        if size == 0 {
            return Err(Error::Validation("coset table has no vertices".into()));
        }
        if root >= size {
            return Err(Error::Validation(format!("root {root} is not a vertex")));
        }
        let mut next = vec![vec![usize::MAX; 2 * n]; size];
        for g in 0..n {
            let gen = Letter::generator(g as u32 + 1);
            let mut preimage = vec![None; size];
            for (v, row) in table.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::Validation(format!(
                        "vertex {v} lists {} images, expected {n}",
                        row.len()
                    )));
                }
                let w = row[g];
                if w >= size {
                    return Err(Error::Validation(format!(
                        "generator {gen}: vertex {v} maps to unknown vertex {w}"
                    )));
                }
                if let Some(u) = preimage[w] {
                    return Err(Error::Validation(format!(
                        "generator {gen} is not a permutation: vertices {u} and {v} both map to {w}"
                    )));
                }
                preimage[w] = Some(v);
                next[v][g] = w;
                next[w][g + n] = v;
            }
        }
        let table = CosetTable {
            kind: BackendKind::CosetTable,
            rank: alphabet.rank(),
            root,
            next,
            labels: None,
        };
        check_connected(&table)?;
        Ok(CosetGraph::from_backend(alphabet, Arc::new(table)))
    }

    /// Kernel of `F_n -> Z^k` sending `x_i` to `weights[i]`.
    pub fn from_abelianization(alphabet: Alphabet, weights: &[Vec<i64>]) -> Result<CosetGraph> {
        if weights.len() != alphabet.rank() as usize {
            return Err(Error::input(format!(
                "{} weight vectors given for rank {}",
                weights.len(),
                alphabet.rank()
            )));
        }
        let dim = weights[0].len();
        if let Some(bad) = weights.iter().position(|w| w.len() != dim) {
            return Err(Error::input(format!(
                "weight vector of generator {} has dimension {}, expected {dim}",
                Letter::generator(bad as u32 + 1),
                weights[bad].len()
            )));
        }
        let backend = Abelianization {
            weights: weights.to_vec(),
        };
        Ok(CosetGraph::from_backend(alphabet, Arc::new(backend)))
    }

    /// Kernel of `F_n -> C_1 * ... * C_n`, with `x_i` sent to the generator of
    /// a cyclic factor of order `orders[i]` (`None` for infinite order).
    pub fn from_free_product(alphabet: Alphabet, orders: &[Option<u32>]) -> Result<CosetGraph> {
        if orders.len() != alphabet.rank() as usize {
            return Err(Error::input(format!(
                "{} factor orders given for rank {}",
                orders.len(),
                alphabet.rank()
            )));
        }
        if let Some(m) = orders.iter().flatten().find(|&&m| m < 2) {
            return Err(Error::input(format!("cyclic factor order {m} is below 2")));
        }
        let backend = FreeProduct {
            orders: orders.to_vec(),
        };
        Ok(CosetGraph::from_backend(alphabet, Arc::new(backend)))
    }

    /// The Cayley tree `T_{2n}`, i.e. the coset graph of the trivial subgroup.
    pub fn trivial_subgroup(alphabet: Alphabet) -> CosetGraph {
        CosetGraph::from_backend(alphabet, Arc::new(TrivialSubgroup { alphabet }))
    }

    /// Loads the JSON edge-list format.
    pub fn from_edge_list_file(path: impl AsRef<Path>) -> Result<CosetGraph> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        CosetGraph::from_edge_list_json(&text)
    }

    pub fn from_edge_list_json(text: &str) -> Result<CosetGraph> {
        let file: EdgeListFile = serde_json::from_str(text)?;
        file.build()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn rank(&self) -> u32 {
        self.alphabet.rank()
    }

    pub fn kind(&self) -> BackendKind {
        self.backend.kind()
    }

    pub fn root(&self) -> VertexId {
        self.backend.root()
    }

    pub fn step(&self, v: &VertexId, letter: Letter) -> VertexId {
        self.backend.step(v, letter)
    }

    /// Endpoint of the walk from `v` reading `letters` left to right.
    pub fn walk(&self, v: &VertexId, letters: &[Letter]) -> VertexId {
        letters.iter().fold(v.clone(), |acc, &l| self.step(&acc, l))
    }

    /// The coset `Hg`, i.e. the endpoint of `g` read from the root.
    pub fn vertex_of(&self, g: &ReducedWord) -> VertexId {
        self.walk(&self.root(), g.letters())
    }

    pub fn is_finite(&self) -> bool {
        self.backend.vertex_count().is_some()
    }

    pub fn vertex_count(&self) -> Option<usize> {
        self.backend.vertex_count()
    }

    pub fn label(&self, v: &VertexId) -> String {
        self.backend.label(v)
    }

    pub fn neighbors(&self, v: &VertexId) -> Vec<VertexId> {
        self.alphabet.letters().into_iter().map(|l| self.step(v, l)).collect()
    }
}

fn check_connected(table: &CosetTable) -> Result<()> {
    let mut seen = vec![false; table.next.len()];
    let mut stack = vec![table.root];
    seen[table.root] = true;
    while let Some(v) = stack.pop() {
        for &w in &table.next[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(v) => Err(Error::Validation(format!(
            "vertex {} is not reachable from the root",
            table.labels.as_ref().map_or(v.to_string(), |l| l[v].clone())
        ))),
        None => Ok(()),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeListFile {
    rank: u32,
    vertices: Vec<serde_json::Value>,
    root: serde_json::Value,
    edges: Vec<EdgeRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    from: serde_json::Value,
    label: String,
    to: serde_json::Value,
}

fn id_key(v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::input(format!(
            "vertex id must be a string or number, got {other}"
        ))),
    }
}

impl EdgeListFile {
    fn build(self) -> Result<CosetGraph> {
        let alphabet = Alphabet::new(self.rank)?;
        let degree = alphabet.degree();
        let mut labels = Vec::with_capacity(self.vertices.len());
        let mut index = HashMap::new();
        for v in &self.vertices {
            let key = id_key(v)?;
            if index.insert(key.clone(), labels.len()).is_some() {
                return Err(Error::Validation(format!("vertex {key} listed twice")));
            }
            labels.push(key);
        }
        let lookup = |v: &serde_json::Value| -> Result<usize> {
            let key = id_key(v)?;
            index
                .get(&key)
                .copied()
                .ok_or_else(|| Error::Validation(format!("edge mentions unknown vertex {key}")))
        };
        let root = lookup(&self.root)?;
        let mut next: Vec<Vec<Option<usize>>> = vec![vec![None; degree]; labels.len()];
        let mut explicit = HashSet::new();
        let set = |next: &mut Vec<Vec<Option<usize>>>, v: usize, slot: usize, w: usize| -> Result<()> {
            match next[v][slot] {
                Some(old) if old != w => Err(Error::Validation(format!(
                    "inverse-pair violation at vertex {} label {}: edges lead to both {} and {}",
                    labels[v],
                    Letter::from_slot(slot, alphabet.rank()),
                    labels[old],
                    labels[w]
                ))),
                _ => {
                    next[v][slot] = Some(w);
                    Ok(())
                }
            }
        };
        for e in &self.edges {
            let letters = alphabet.parse_letters(&e.label)?;
            let [letter] = letters.as_slice() else {
                return Err(Error::input(format!("edge label {:?} is not a single letter", e.label)));
            };
            let (from, to) = (lookup(&e.from)?, lookup(&e.to)?);
            let slot = letter.slot(alphabet.rank());
            if !explicit.insert((from, slot)) {
                return Err(Error::Validation(format!(
                    "duplicate edge from {} with label {}",
                    labels[from], e.label
                )));
            }
            set(&mut next, from, slot, to)?;
            set(&mut next, to, letter.inverse().slot(alphabet.rank()), from)?;
        }
        let missing: Vec<String> = next
            .iter()
            .enumerate()
            .flat_map(|(v, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, w)| w.is_none())
                    .map(move |(slot, _)| (v, slot))
            })
            .map(|(v, slot)| format!("({}, {})", labels[v], Letter::from_slot(slot, alphabet.rank())))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Completion(missing.join(", ")));
        }
        let table = CosetTable {
            kind: BackendKind::ExplicitFile,
            rank: alphabet.rank(),
            root,
            next: next
                .into_iter()
                .map(|row| row.into_iter().map(|w| w.expect("complete")).collect())
                .collect(),
            labels: Some(labels),
        };
        check_connected(&table)?;
        Ok(CosetGraph::from_backend(alphabet, Arc::new(table)))
    }
}

/// Materialized BFS ball around the root.
#[derive(Clone, Debug)]
pub struct BallTable {
    radius: usize,
    /// Vertices in BFS order, sorted within each sphere.
    vertices: Vec<VertexId>,
    dist: HashMap<VertexId, usize>,
    /// `offsets[k]..offsets[k + 1]` is the sphere `S_k` inside `vertices`.
    offsets: Vec<usize>,
}

impl BallTable {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn sphere(&self, k: usize) -> &[VertexId] {
        &self.vertices[self.offsets[k]..self.offsets[k + 1]]
    }

    pub fn distance(&self, v: &VertexId) -> Option<usize> {
        self.dist.get(v).copied()
    }

    pub fn contains(&self, v: &VertexId) -> bool {
        self.dist.contains_key(v)
    }

    /// Sphere sizes `|S_0|, ..., |S_radius|`.
    pub fn counts(&self) -> Vec<u64> {
        self.offsets.windows(2).map(|w| (w[1] - w[0]) as u64).collect()
    }

    /// Ball sizes `|B(0)|, ..., |B(radius)|`.
    pub fn ball_counts(&self) -> Vec<u64> {
        self.offsets[1..].iter().map(|&o| o as u64).collect()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Breadth-first ball of the given radius around the root.
pub fn bfs_ball(g: &CosetGraph, radius: usize, budget: usize) -> Result<BallTable> {
    let root = g.root();
    let mut dist = HashMap::new();
    dist.insert(root.clone(), 0);
    let mut vertices = vec![root];
    let mut offsets = vec![0, 1];
    let letters = g.alphabet().letters();
    for k in 1..=radius {
        let frontier = &vertices[offsets[k - 1]..offsets[k]];
        let expanded: Vec<Vec<VertexId>> = frontier
            .par_iter()
            .map(|v| letters.iter().map(|&l| g.step(v, l)).collect())
            .collect();
        let mut sphere = Vec::new();
        for w in expanded.into_iter().flatten() {
            if !dist.contains_key(&w) {
                dist.insert(w.clone(), k);
                sphere.push(w);
            }
        }
        if vertices.len() + sphere.len() > budget {
            return Err(Error::resource(format!(
                "BFS reached {} vertices at sphere {k}, over the vertex budget of {budget}",
                vertices.len() + sphere.len()
            )));
        }
        sphere.sort();
        vertices.extend(sphere);
        offsets.push(vertices.len());
    }
    Ok(BallTable {
        radius,
        vertices,
        dist,
        offsets,
    })
}

/// `Sh(a, k)`: vertices `b` with `d(a, b) = k` lying on a geodesic from the
/// root through `a`. Built by `k` distance-increasing steps from `a`.
pub fn shell(g: &CosetGraph, ball: &BallTable, a: &VertexId, k: usize) -> Result<Vec<VertexId>> {
    let da = ball
        .distance(a)
        .ok_or_else(|| Error::input(format!("vertex {} is outside the ball", g.label(a))))?;
    if da + k > ball.radius() {
        return Err(Error::input(format!(
            "shell of depth {k} at distance {da} needs a ball of radius {}, have {}",
            da + k,
            ball.radius()
        )));
    }
    let mut layer: Vec<VertexId> = vec![a.clone()];
    for j in 1..=k {
        let target = da + j;
        let mut next: Vec<VertexId> = layer
            .iter()
            .flat_map(|v| g.neighbors(v))
            .filter(|w| ball.distance(w) == Some(target))
            .collect();
        next.sort();
        next.dedup();
        layer = next;
    }
    Ok(layer)
}

/// Result of a confinement check over a finite ball.
#[derive(Clone, Debug)]
pub struct ConfinementReport {
    pub p: Vec<ReducedWord>,
    pub radius: usize,
    /// For each vertex of the ball that carries a `P`-loop, the index into `p`
    /// of the first such element, in BFS order.
    pub witness: Vec<(VertexId, usize)>,
    pub holds: bool,
    pub failing_vertex: Option<VertexId>,
    pub vertices_checked: usize,
}

/// Checks that every vertex of `B(radius)` carries a closed walk labelled by
/// some `p` in `P`, i.e. `g p g^-1` lies in `H` for every representative `g`.
pub fn confinement_check(g: &CosetGraph, p: &[ReducedWord], radius: usize, budget: usize) -> Result<ConfinementReport> {
    if p.is_empty() {
        return Err(Error::input("confining set P is empty"));
    }
    if p.iter().any(|w| w.is_empty()) {
        return Err(Error::input("confining set P contains the identity"));
    }
    if let Some(w) = p.iter().find(|w| w.alphabet() != g.alphabet()) {
        return Err(Error::input(format!(
            "element {w} of P is over rank {}, graph has rank {}",
            w.alphabet().rank(),
            g.rank()
        )));
    }
    let ball = bfs_ball(g, radius, budget)?;
    let found: Vec<Option<usize>> = ball
        .vertices()
        .par_iter()
        .map(|v| p.iter().position(|w| g.walk(v, w.letters()) == *v))
        .collect();
    let mut witness = Vec::new();
    let mut failing_vertex = None;
    for (v, hit) in ball.vertices().iter().zip(found) {
        match hit {
            Some(i) => witness.push((v.clone(), i)),
            None if failing_vertex.is_none() => failing_vertex = Some(v.clone()),
            None => {}
        }
    }
    Ok(ConfinementReport {
        p: p.to_vec(),
        radius,
        holds: failing_vertex.is_none(),
        witness,
        failing_vertex,
        vertices_checked: ball.len(),
    })
}

/// Largest `m` for which the radius-`m` neighbourhood of a vertex is a copy
/// of the tree ball `B_n(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "kebab-case")]
pub enum TreeRadius {
    /// A cycle was found; the value is exact.
    Certified(usize),
    /// No cycle within the horizon; the true value is at least this.
    Uncertified(usize),
}

impl TreeRadius {
    pub fn value(self) -> usize {
        match self {
            TreeRadius::Certified(m) | TreeRadius::Uncertified(m) => m,
        }
    }

    pub fn is_certified(self) -> bool {
        matches!(self, TreeRadius::Certified(_))
    }
}

/// Unfolds the universal cover at `v` level by level; the first level at
/// which two tree nodes land on the same vertex bounds the tree-ball radius.
/// Loops and repeated edges show up as such collisions at depth 1.
pub fn tree_ball_radius(g: &CosetGraph, ball: &BallTable, v: &VertexId) -> TreeRadius {
    let horizon = match ball.distance(v) {
        Some(d) => ball.radius() - d,
        None => return TreeRadius::Uncertified(0),
    };
    tree_radius_within(g, v, horizon)
}

pub(crate) fn tree_radius_within(g: &CosetGraph, v: &VertexId, horizon: usize) -> TreeRadius {
    let letters = g.alphabet().letters();
    let mut seen: HashSet<VertexId> = HashSet::new();
    seen.insert(v.clone());
    let mut frontier: Vec<(VertexId, Option<Letter>)> = vec![(v.clone(), None)];
    for depth in 1..=horizon {
        let mut next = Vec::with_capacity(frontier.len() * letters.len());
        for (u, incoming) in &frontier {
            for &l in &letters {
                if incoming.is_some_and(|i| i.cancels(l)) {
                    continue;
                }
                let w = g.step(u, l);
                if !seen.insert(w.clone()) {
                    return TreeRadius::Certified(depth - 1);
                }
                next.push((w, Some(l)));
            }
        }
        frontier = next;
    }
    TreeRadius::Uncertified(horizon)
}

/// `c_k` for `k = 0..=max_len`: reduced words of length `k` whose walk from
/// the root closes up, i.e. elements of `H` of norm `k`.
///
/// Counts non-backtracking walks by dynamic programming over
/// `(vertex, last letter)` states, pruning states that cannot get back to
/// the root in the remaining steps.
#[allow(clippy::needless_range_loop)]
pub fn loop_counts(g: &CosetGraph, max_len: usize, budget: usize) -> Result<Vec<u64>> {
    let ball = bfs_ball(g, max_len / 2, budget)?;
    let root = g.root();
    let letters = g.alphabet().letters();
    let rank = g.rank();
    let mut counts = vec![0u64; max_len + 1];
    counts[0] = 1;
    let mut states: HashMap<(VertexId, Letter), u64> = HashMap::new();
    for &l in &letters {
        let w = g.step(&root, l);
        *states.entry((w, l)).or_default() += 1;
    }
    for k in 1..=max_len {
        let remaining = max_len - k;
        states.retain(|(v, _), _| ball.distance(v).is_some_and(|d| d <= remaining));
        if states.len() > budget {
            return Err(Error::resource(format!(
                "{} walk states at length {k}, over the budget of {budget}",
                states.len()
            )));
        }
        counts[k] = letters
            .iter()
            .filter_map(|&l| states.get(&(root.clone(), l)))
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or_else(|| Error::resource(format!("closed-walk count overflows at length {k}")))?;
        if k == max_len {
            break;
        }
        let mut next: HashMap<(VertexId, Letter), u64> = HashMap::with_capacity(states.len() * 2);
        let mut ordered: Vec<_> = states.into_iter().collect();
        ordered.sort_by(|a, b| (&a.0 .0, a.0 .1.slot(rank)).cmp(&(&b.0 .0, b.0 .1.slot(rank))));
        for ((v, last), c) in ordered {
            for &l in &letters {
                if last.cancels(l) {
                    continue;
                }
                let entry = next.entry((g.step(&v, l), l)).or_default();
                *entry = entry
                    .checked_add(c)
                    .ok_or_else(|| Error::resource(format!("walk count overflows at length {}", k + 1)))?;
            }
        }
        states = next;
    }
    Ok(counts)
}

/// Spectral radius of the non-backtracking (Hashimoto) edge operator.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralEstimate {
    /// `ln` of the spectral radius.
    pub rate: f64,
    pub spectral_radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub directed_edges: usize,
}

const HASHIMOTO_REL_TOL: f64 = 1e-9;
const HASHIMOTO_MAX_ITER: usize = 200_000;

/// Exact growth rate of `H` for a finite coset graph, as the log of the
/// spectral radius of the non-backtracking operator on directed edges.
///
/// Power iteration runs on `B + I`, which is aperiodic, and stops once the
/// Collatz-Wielandt bracket `min (Bx)_e / x_e <= rho <= max (Bx)_e / x_e`
/// is within relative tolerance `1e-9`.
pub fn hashimoto_growth(g: &CosetGraph, budget: usize) -> Result<SpectralEstimate> {
    let n_vertices = g
        .vertex_count()
        .ok_or_else(|| Error::UnsupportedBackend(format!("{} graph is infinite; no finite edge operator", g.kind())))?;
    let ball = bfs_ball(g, n_vertices, budget)?;
    let index: HashMap<&VertexId, usize> = ball.vertices().iter().enumerate().map(|(i, v)| (v, i)).collect();
    let degree = g.alphabet().degree();
    let rank = g.rank();
    let letters = g.alphabet().letters();
    // Directed edge e = v * degree + slot runs from v along letter `slot`.
    let heads: Vec<usize> = ball
        .vertices()
        .iter()
        .flat_map(|v| letters.iter().map(|&l| index[&g.step(v, l)]))
        .collect();
    let edges = heads.len();
    let successors = |e: usize| {
        let back = Letter::from_slot(e % degree, rank).inverse().slot(rank);
        let base = heads[e] * degree;
        (0..degree).filter(move |&s| s != back).map(move |s| base + s)
    };
    let mut x: Vec<f64> = (0..edges).map(|e| 1.0 + (e % 7) as f64 / 7.0).collect();
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    while iterations < HASHIMOTO_MAX_ITER {
        iterations += 1;
        let y: Vec<f64> = (0..edges)
            .into_par_iter()
            .map(|e| x[e] + successors(e).map(|f| x[f]).sum::<f64>())
            .collect();
        let (lo, hi) = y
            .iter()
            .zip(&x)
            .map(|(a, b)| a / b)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
        lower = lo - 1.0;
        upper = hi - 1.0;
        let scale = y.iter().cloned().fold(0.0, f64::max);
        x = y.into_iter().map(|v| v / scale).collect();
        if hi - lo <= HASHIMOTO_REL_TOL * hi {
            break;
        }
    }
    let spectral_radius = 0.5 * (lower + upper);
    Ok(SpectralEstimate {
        rate: spectral_radius.ln(),
        spectral_radius,
        lower,
        upper,
        iterations,
        directed_edges: edges,
    })
}

/// Ball counts keyed by vertex label, for cross-backend comparisons.
pub fn labelled_spheres(g: &CosetGraph, ball: &BallTable) -> BTreeMap<usize, Vec<String>> {
    (0..=ball.radius())
        .map(|k| (k, ball.sphere(k).iter().map(|v| g.label(v)).collect()))
        .collect()
}
