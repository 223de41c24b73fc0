//! Marked metric spaces: locally finite graphs with a basepoint, explored
//! lazily through a neighbor oracle.
//!
//! Every family in this crate (wreath products, Houghton groups,
//! Baumslag-Solitar groups, Diestel-Leader graphs) implements
//! [`MarkedSpace`]. The word metric is always the graph metric of the
//! neighbor relation; families may additionally expose an exact norm or
//! distance oracle and a cheap norm lower bound (the *certificate*).

use std::collections::{HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::RwLock;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

/// Exact rational used for radii, `delta` and `gamma`.
pub type Rational = Ratio<i64>;

/// Default BFS vertex cap.
pub const DEFAULT_BFS_CAP: usize = 5_000_000;

/// Resource limits shared by every search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Limits {
    pub bfs_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { bfs_cap: DEFAULT_BFS_CAP }
    }
}

impl Limits {
    pub fn with_cap(bfs_cap: usize) -> Self {
        Limits { bfs_cap }
    }
}

pub trait MarkedSpace: Sync {
    type Vertex: Clone + Eq + Hash + Ord + Debug + Send + Sync;
    type Label: Clone + Eq + Debug + Send + Sync;

    fn basepoint(&self) -> Self::Vertex;

    /// Neighbors in a fixed, deterministic order.
    fn neighbors(&self, v: &Self::Vertex) -> Vec<(Self::Label, Self::Vertex)>;

    /// Follow one labelled edge; `None` if the label is not an edge at `v`.
    fn step(&self, v: &Self::Vertex, label: &Self::Label) -> Option<Self::Vertex>;

    fn degree_bound(&self) -> usize;

    /// Stable textual form, used for ordering-independent output and JSON.
    fn canonical(&self, v: &Self::Vertex) -> String;

    fn label_name(&self, label: &Self::Label) -> String;

    fn exact_norm(&self, _v: &Self::Vertex) -> Option<u64> {
        None
    }

    fn exact_distance(&self, _u: &Self::Vertex, _v: &Self::Vertex) -> Option<u64> {
        None
    }

    /// Lower bound for the norm. Must never exceed the true norm.
    fn certificate(&self, _v: &Self::Vertex) -> u64 {
        0
    }

    /// Canonical representative of the orbit of the pair `(a, b)` under
    /// automorphisms fixing the basepoint, or `None` if unknown. Must be
    /// the same for `(a, b)` and `(b, a)`.
    fn pair_representative(&self, _a: &Self::Vertex, _b: &Self::Vertex) -> Option<(Self::Vertex, Self::Vertex)> {
        None
    }

    /// Lower bound valid simultaneously for every `v * step^j`, `j >= 0`.
    fn ray_tail_bound(&self, _v: &Self::Vertex, _step: &Self::Label) -> Option<u64> {
        None
    }
}

/// A labelled edge path together with the vertices it passes through.
///
/// The vertex sequence is recorded at construction time so that a
/// verifier can detect labels that no longer match the recorded walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path<V, L> {
    pub start: V,
    pub labels: Vec<L>,
    pub vertices: Vec<V>,
}

impl<V: Clone, L: Clone> Path<V, L> {
    pub fn new(start: V) -> Self {
        Path { vertices: vec![start.clone()], start, labels: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn end(&self) -> &V {
        self.vertices.last().expect("path always holds its start")
    }

    /// Append one edge, checking it against the space.
    pub fn push<S>(&mut self, space: &S, label: L) -> Result<()>
    where
        S: MarkedSpace<Vertex = V, Label = L>,
        V: Eq + Hash + Ord + Debug + Send + Sync,
        L: Eq + Debug + Send + Sync,
    {
        let next = space
            .step(self.end(), &label)
            .ok_or_else(|| Error::InvalidInput(format!("label {} is not an edge", space.label_name(&label))))?;
        self.labels.push(label);
        self.vertices.push(next);
        Ok(())
    }

    pub fn extend<S, I>(&mut self, space: &S, labels: I) -> Result<()>
    where
        S: MarkedSpace<Vertex = V, Label = L>,
        I: IntoIterator<Item = L>,
        V: Eq + Hash + Ord + Debug + Send + Sync,
        L: Eq + Debug + Send + Sync,
    {
        for l in labels {
            self.push(space, l)?;
        }
        Ok(())
    }

    /// Replay `labels` from `start`.
    pub fn from_labels<S>(space: &S, start: V, labels: Vec<L>) -> Result<Self>
    where
        S: MarkedSpace<Vertex = V, Label = L>,
        V: Eq + Hash + Ord + Debug + Send + Sync,
        L: Eq + Debug + Send + Sync,
    {
        let mut p = Path::new(start);
        p.extend(space, labels)?;
        Ok(p)
    }
}

/// Result of a breadth-first search: every vertex within `radius` of
/// `center` with its distance and a BFS-tree parent.
#[derive(Debug, Clone)]
pub struct Ball<V, L> {
    center: V,
    radius: u64,
    nodes: Vec<BallNode<V, L>>,
    index: HashMap<V, usize>,
}

#[derive(Debug, Clone)]
struct BallNode<V, L> {
    vertex: V,
    dist: u64,
    parent: Option<(usize, L)>,
}

impl<V, L> Ball<V, L>
where
    V: Clone + Eq + Hash + Ord,
    L: Clone,
{
    pub fn center(&self) -> &V {
        &self.center
    }

    pub fn radius(&self) -> u64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: &V) -> bool {
        self.index.contains_key(v)
    }

    pub fn distance(&self, v: &V) -> Option<u64> {
        self.index.get(v).map(|&i| self.nodes[i].dist)
    }

    /// Vertices in BFS order with their distances.
    pub fn iter(&self) -> impl Iterator<Item = (&V, u64)> {
        self.nodes.iter().map(|n| (&n.vertex, n.dist))
    }

    pub fn to_map(&self) -> HashMap<V, u64> {
        self.nodes.iter().map(|n| (n.vertex.clone(), n.dist)).collect()
    }

    /// Vertices at exactly distance `r`, sorted.
    pub fn sphere(&self, r: u64) -> Vec<V> {
        let mut out: Vec<V> = self.nodes.iter().filter(|n| n.dist == r).map(|n| n.vertex.clone()).collect();
        out.sort();
        out
    }

    /// A geodesic word from the center to `v` along the BFS tree.
    pub fn word_to(&self, v: &V) -> Option<Vec<L>> {
        let mut i = *self.index.get(v)?;
        let mut word = Vec::new();
        while let Some((p, l)) = &self.nodes[i].parent {
            word.push(l.clone());
            i = *p;
        }
        word.reverse();
        Some(word)
    }
}

/// BFS ball of the given radius around an arbitrary center.
pub fn ball_around<S: MarkedSpace>(
    space: &S,
    center: &S::Vertex,
    radius: u64,
    limits: Limits,
) -> Result<Ball<S::Vertex, S::Label>> {
    let mut nodes = vec![BallNode { vertex: center.clone(), dist: 0, parent: None }];
    let mut index = HashMap::new();
    index.insert(center.clone(), 0usize);
    let mut head = 0;
    while head < nodes.len() {
        let d = nodes[head].dist;
        if d >= radius {
            break;
        }
        let v = nodes[head].vertex.clone();
        for (label, w) in space.neighbors(&v) {
            if index.contains_key(&w) {
                continue;
            }
            if nodes.len() >= limits.bfs_cap {
                return Err(Error::budget(format!("ball of radius {radius}"), limits.bfs_cap));
            }
            index.insert(w.clone(), nodes.len());
            nodes.push(BallNode { vertex: w, dist: d + 1, parent: Some((head, label)) });
        }
        head += 1;
    }
    Ok(Ball { center: center.clone(), radius, nodes, index })
}

/// BFS ball around the basepoint.
pub fn ball<S: MarkedSpace>(space: &S, radius: u64, limits: Limits) -> Result<Ball<S::Vertex, S::Label>> {
    ball_around(space, &space.basepoint(), radius, limits)
}

/// Vertices at distance exactly `n` from the basepoint, sorted.
pub fn sphere<S: MarkedSpace>(space: &S, n: u64, limits: Limits) -> Result<Vec<S::Vertex>> {
    Ok(ball(space, n, limits)?.sphere(n))
}

/// Memoized norms. Uses the family oracle when there is one and an
/// incrementally grown BFS from the basepoint otherwise.
pub struct Metric<'a, S: MarkedSpace> {
    space: &'a S,
    limits: Limits,
    state: RwLock<BfsState<S::Vertex>>,
}

struct BfsState<V> {
    dist: HashMap<V, u64>,
    frontier: Vec<V>,
    depth: u64,
}

impl<'a, S: MarkedSpace> Metric<'a, S> {
    pub fn new(space: &'a S, limits: Limits) -> Self {
        let base = space.basepoint();
        let mut dist = HashMap::new();
        dist.insert(base.clone(), 0);
        Metric { space, limits, state: RwLock::new(BfsState { dist, frontier: vec![base], depth: 0 }) }
    }

    pub fn space(&self) -> &'a S {
        self.space
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn norm(&self, v: &S::Vertex) -> Result<u64> {
        if let Some(n) = self.space.exact_norm(v) {
            return Ok(n);
        }
        if let Some(&d) = self.state.read().expect("metric lock").dist.get(v) {
            return Ok(d);
        }
        let mut st = self.state.write().expect("metric lock");
        loop {
            if let Some(&d) = st.dist.get(v) {
                return Ok(d);
            }
            if st.frontier.is_empty() {
                return Err(Error::InvalidInput("vertex unreachable from basepoint".into()));
            }
            self.expand(&mut st)?;
        }
    }

    /// Norm if it is at most `max`, `None` if it is known to be larger.
    pub fn norm_at_most(&self, v: &S::Vertex, max: u64) -> Result<Option<u64>> {
        if let Some(n) = self.space.exact_norm(v) {
            return Ok((n <= max).then_some(n));
        }
        if self.space.certificate(v) > max {
            return Ok(None);
        }
        let mut st = self.state.write().expect("metric lock");
        loop {
            if let Some(&d) = st.dist.get(v) {
                return Ok((d <= max).then_some(d));
            }
            if st.depth >= max || st.frontier.is_empty() {
                return Ok(None);
            }
            self.expand(&mut st)?;
        }
    }

    fn expand(&self, st: &mut BfsState<S::Vertex>) -> Result<()> {
        let depth = st.depth + 1;
        let frontier = std::mem::take(&mut st.frontier);
        let mut next = Vec::new();
        for v in &frontier {
            for (_, w) in self.space.neighbors(v) {
                if st.dist.contains_key(&w) {
                    continue;
                }
                if st.dist.len() >= self.limits.bfs_cap {
                    return Err(Error::budget("norm BFS", self.limits.bfs_cap));
                }
                st.dist.insert(w.clone(), depth);
                next.push(w);
            }
        }
        st.frontier = next;
        st.depth = depth;
        Ok(())
    }
}

/// Graph distance between two vertices.
pub fn distance<S: MarkedSpace>(space: &S, u: &S::Vertex, v: &S::Vertex, limits: Limits) -> Result<u64> {
    if let Some(d) = space.exact_distance(u, v) {
        return Ok(d);
    }
    let base = space.basepoint();
    if *u == base {
        if let Some(n) = space.exact_norm(v) {
            return Ok(n);
        }
    }
    if *v == base {
        if let Some(n) = space.exact_norm(u) {
            return Ok(n);
        }
    }
    let path = crate::search::bidirectional(space, u, v, &|_, _, _| Ok(true), limits)?
        .ok_or_else(|| Error::InvalidInput("vertices are not connected".into()))?;
    Ok(path.len() as u64)
}

/// Largest integer strictly below `r`, or `None` when `r <= 0`.
pub fn largest_below(r: Rational) -> Option<u64> {
    if r <= Rational::from_integer(0) {
        return None;
    }
    let c = r.ceil().to_integer();
    Some((c - 1) as u64)
}

/// `d >= r` for an integer distance and a rational radius.
pub fn at_least(d: u64, r: Rational) -> bool {
    Rational::from_integer(d as i64) >= r
}

/// The open ball `B(center, radius)` materialized as a vertex set.
/// Non-positive radii give the empty ball.
#[derive(Debug, Clone)]
pub struct Exclusion<V> {
    radius: Rational,
    members: HashSet<V>,
}

impl<V: Clone + Eq + Hash + Ord> Exclusion<V> {
    pub fn build<S>(space: &S, center: &V, radius: Rational, limits: Limits) -> Result<Self>
    where
        S: MarkedSpace<Vertex = V>,
    {
        let members = match largest_below(radius) {
            None => HashSet::new(),
            Some(r) => ball_around(space, center, r, limits)?.iter().map(|(v, _)| v.clone()).collect(),
        };
        Ok(Exclusion { radius, members })
    }

    pub fn empty() -> Self {
        Exclusion { radius: Rational::from_integer(0), members: HashSet::new() }
    }

    pub fn radius(&self) -> Rational {
        self.radius
    }

    pub fn contains(&self, v: &V) -> bool {
        self.members.contains(v)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Positive => 1,
            Direction::Negative => -1,
        }
    }
}

/// A ray `{g * prefix * step^m : m >= 0}`.
#[derive(Debug, Clone)]
pub struct RaySpec<L> {
    pub prefix: Vec<L>,
    pub step: L,
}

pub fn default_horizon(n: u64) -> u64 {
    4 * n + 8
}

/// Pick the direction of `{g * step^m}` that stays outside the open ball
/// `B(center, radius)`. Ties go to the positive direction.
#[allow(clippy::too_many_arguments)]
pub fn select_escaping_ray<S: MarkedSpace>(
    space: &S,
    g: &S::Vertex,
    step: &S::Label,
    inverse_step: &S::Label,
    center: &S::Vertex,
    radius: Rational,
    horizon: u64,
    limits: Limits,
) -> Result<Direction> {
    let rays = [RaySpec { prefix: vec![], step: step.clone() }, RaySpec { prefix: vec![], step: inverse_step.clone() }];
    select_escaping_ray_from(space, g, &rays, center, radius, horizon, limits)
}

/// General form: the two rays may start with a prefix (used for
/// Baumslag-Solitar, where the rays are `g a^{+-1} t^m`).
pub fn select_escaping_ray_from<S: MarkedSpace>(
    space: &S,
    g: &S::Vertex,
    rays: &[RaySpec<S::Label>; 2],
    center: &S::Vertex,
    radius: Rational,
    horizon: u64,
    limits: Limits,
) -> Result<Direction> {
    let exclusion = Exclusion::build(space, center, radius, limits)?;
    let center_norm = Metric::new(space, limits).norm(center)?;
    let needed = largest_below(radius).map_or(0, |r| r + 1) + center_norm;
    for (dir, ray) in [Direction::Positive, Direction::Negative].into_iter().zip(rays.iter()) {
        if ray_escapes(space, g, ray, &exclusion, needed, horizon) {
            return Ok(dir);
        }
    }
    Err(Error::NoEscapingRay { horizon })
}

/// Like [`select_escaping_ray_from`] but only looks at the first `steps`
/// points of each ray and accepts a ray when the family certificate puts
/// each of them outside `B(x0, radius)`. Never runs a BFS.
pub fn select_certified_ray<S: MarkedSpace>(
    space: &S,
    g: &S::Vertex,
    rays: &[RaySpec<S::Label>; 2],
    radius: Rational,
    steps: u64,
) -> Result<Direction> {
    'rays: for (dir, ray) in [Direction::Positive, Direction::Negative].into_iter().zip(rays.iter()) {
        let mut v = g.clone();
        for l in &ray.prefix {
            match space.step(&v, l) {
                Some(w) => v = w,
                None => continue 'rays,
            }
        }
        for m in 0..=steps {
            if !at_least(space.certificate(&v), radius) {
                continue 'rays;
            }
            if m < steps {
                match space.step(&v, &ray.step) {
                    Some(w) => v = w,
                    None => continue 'rays,
                }
            }
        }
        return Ok(dir);
    }
    Err(Error::NoEscapingRay { horizon: steps })
}

fn ray_escapes<S: MarkedSpace>(
    space: &S,
    g: &S::Vertex,
    ray: &RaySpec<S::Label>,
    exclusion: &Exclusion<S::Vertex>,
    needed_tail: u64,
    horizon: u64,
) -> bool {
    let mut v = g.clone();
    for l in &ray.prefix {
        match space.step(&v, l) {
            Some(w) => v = w,
            None => return false,
        }
    }
    for m in 0..=horizon {
        if exclusion.contains(&v) {
            return false;
        }
        if m == horizon {
            break;
        }
        match space.step(&v, &ray.step) {
            Some(w) => v = w,
            None => return false,
        }
    }
    if exclusion.is_empty() {
        return true;
    }
    matches!(space.ray_tail_bound(&v, &ray.step), Some(b) if b >= needed_tail)
}
