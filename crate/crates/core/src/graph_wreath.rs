//! Wreath products of graphs `B wr A`: vertices `(f, a)` with
//! `f: A -> B` finitely supported away from `b0`. Type (1) edges move
//! `f(a)` along an edge of `B`; type (2) edges move `a` along an edge of `A`.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::hash::Hash;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{MarkedSpace, Path, Rational};

/// A connected, locally finite graph with a basepoint.
pub trait GraphDriver: Sync + Send {
    type V: Clone + Eq + Hash + Ord + Debug + Send + Sync;

    fn name(&self) -> String;
    fn basepoint(&self) -> Self::V;
    fn neighbors(&self, v: &Self::V) -> Vec<Self::V>;
    fn degree_bound(&self) -> usize;
    fn dist(&self, u: &Self::V, v: &Self::V) -> u64;
    fn norm(&self, v: &Self::V) -> u64 {
        self.dist(&self.basepoint(), v)
    }
    /// Some vertex at distance `n` from the basepoint, chosen canonically.
    fn point_at_norm(&self, n: u64) -> Option<Self::V>;
    /// Vertices after `u` along a shortest path ending at `v`.
    fn geodesic(&self, u: &Self::V, v: &Self::V) -> Vec<Self::V>;
    fn is_infinite(&self) -> bool;
    /// Metadata only; divergence is basepoint-relative otherwise.
    fn vertex_transitive(&self) -> bool;
    fn canonical(&self, v: &Self::V) -> String;
    /// Integer coordinate when the graph is the bi-infinite line.
    fn line_coordinate(&self, _v: &Self::V) -> Option<i64> {
        None
    }
    fn line_point(&self, _i: i64) -> Option<Self::V> {
        None
    }
}

/// Vertex of one of the built-in graphs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GPoint {
    Int(i64),
    Pair(i64, i64),
    /// Reduced word in the free product of `k` copies of `Z_2`.
    Word(Vec<u8>),
}

/// Built-in graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Graph {
    /// Cayley graph of `Z` with `+-1`.
    Line,
    /// Cayley graph of `Z^2` with the standard generators.
    Grid,
    /// The `k`-regular tree, `k >= 2`.
    Tree(u8),
    /// Cayley graph of `Z_k` with `+-1`; `k = 2` is a single edge.
    Cycle(u32),
}

impl Graph {
    pub fn validate(self) -> Result<Self> {
        match self {
            Graph::Tree(k) if k < 2 => Err(Error::InvalidInput("tree degree must be >= 2".into())),
            Graph::Cycle(k) if k < 2 => Err(Error::InvalidInput("cycle length must be >= 2".into())),
            g => Ok(g),
        }
    }

    fn int(v: &GPoint) -> i64 {
        match v {
            GPoint::Int(i) => *i,
            _ => panic!("expected an integer vertex, got {v:?}"),
        }
    }

    fn pair(v: &GPoint) -> (i64, i64) {
        match v {
            GPoint::Pair(x, y) => (*x, *y),
            _ => panic!("expected a grid vertex, got {v:?}"),
        }
    }

    fn word(v: &GPoint) -> &[u8] {
        match v {
            GPoint::Word(w) => w,
            _ => panic!("expected a tree vertex, got {v:?}"),
        }
    }
}

impl GraphDriver for Graph {
    type V = GPoint;

    fn name(&self) -> String {
        match self {
            Graph::Line => "line".into(),
            Graph::Grid => "grid".into(),
            Graph::Tree(k) => format!("tree{k}"),
            Graph::Cycle(k) => format!("cycle{k}"),
        }
    }

    fn basepoint(&self) -> GPoint {
        match self {
            Graph::Line | Graph::Cycle(_) => GPoint::Int(0),
            Graph::Grid => GPoint::Pair(0, 0),
            Graph::Tree(_) => GPoint::Word(Vec::new()),
        }
    }

    fn neighbors(&self, v: &GPoint) -> Vec<GPoint> {
        match *self {
            Graph::Line => {
                let i = Self::int(v);
                vec![GPoint::Int(i + 1), GPoint::Int(i - 1)]
            }
            Graph::Cycle(k) => {
                let (i, k) = (Self::int(v), k as i64);
                let mut out = vec![GPoint::Int((i + 1).rem_euclid(k))];
                if k > 2 {
                    out.push(GPoint::Int((i - 1).rem_euclid(k)));
                }
                out
            }
            Graph::Grid => {
                let (x, y) = Self::pair(v);
                vec![GPoint::Pair(x + 1, y), GPoint::Pair(x - 1, y), GPoint::Pair(x, y + 1), GPoint::Pair(x, y - 1)]
            }
            Graph::Tree(k) => {
                let w = Self::word(v);
                (0..k)
                    .map(|c| {
                        let mut n = w.to_vec();
                        if n.last() == Some(&c) {
                            n.pop();
                        } else {
                            n.push(c);
                        }
                        GPoint::Word(n)
                    })
                    .collect()
            }
        }
    }

    fn degree_bound(&self) -> usize {
        match *self {
            Graph::Line => 2,
            Graph::Cycle(k) => (k as usize).min(3) - 1,
            Graph::Grid => 4,
            Graph::Tree(k) => k as usize,
        }
    }

    fn dist(&self, u: &GPoint, v: &GPoint) -> u64 {
        match *self {
            Graph::Line => Self::int(u).abs_diff(Self::int(v)),
            Graph::Cycle(k) => {
                let d = (Self::int(u) - Self::int(v)).rem_euclid(k as i64) as u64;
                d.min(k as u64 - d)
            }
            Graph::Grid => {
                let ((a, b), (c, d)) = (Self::pair(u), Self::pair(v));
                a.abs_diff(c) + b.abs_diff(d)
            }
            Graph::Tree(_) => {
                let (a, b) = (Self::word(u), Self::word(v));
                let common = a.iter().zip(b).take_while(|(x, y)| x == y).count();
                (a.len() + b.len() - 2 * common) as u64
            }
        }
    }

    fn point_at_norm(&self, n: u64) -> Option<GPoint> {
        let n = n as i64;
        match *self {
            Graph::Line => Some(GPoint::Int(n)),
            Graph::Cycle(k) => (2 * n <= k as i64).then_some(GPoint::Int(n)),
            Graph::Grid => Some(GPoint::Pair(n, 0)),
            Graph::Tree(_) => Some(GPoint::Word((0..n).map(|i| (i % 2) as u8).collect())),
        }
    }

    fn geodesic(&self, u: &GPoint, v: &GPoint) -> Vec<GPoint> {
        let mut out = Vec::new();
        let mut cur = u.clone();
        while cur != *v {
            let d = self.dist(&cur, v);
            cur = self
                .neighbors(&cur)
                .into_iter()
                .find(|w| self.dist(w, v) < d)
                .expect("connected graph has a closer neighbor");
            out.push(cur.clone());
        }
        out
    }

    fn is_infinite(&self) -> bool {
        !matches!(self, Graph::Cycle(_))
    }

    fn vertex_transitive(&self) -> bool {
        true
    }

    fn canonical(&self, v: &GPoint) -> String {
        match v {
            GPoint::Int(i) => i.to_string(),
            GPoint::Pair(x, y) => format!("({x},{y})"),
            GPoint::Word(w) => {
                let s: Vec<String> = w.iter().map(|c| c.to_string()).collect();
                format!("w{}", s.join("."))
            }
        }
    }

    fn line_coordinate(&self, v: &GPoint) -> Option<i64> {
        match (self, v) {
            (Graph::Line, GPoint::Int(i)) => Some(*i),
            _ => None,
        }
    }

    fn line_point(&self, i: i64) -> Option<GPoint> {
        matches!(self, Graph::Line).then_some(GPoint::Int(i))
    }
}

/// `(f, a)`; `f` omits values equal to `b0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GWVertex<AV: Ord, BV> {
    pub f: BTreeMap<AV, BV>,
    pub a: AV,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GWLabel<AV, BV> {
    /// Type (1): move `f(a)` to this `B`-vertex.
    Lamp(BV),
    /// Type (2): move the cursor to this `A`-vertex.
    Move(AV),
}

#[derive(Debug, Clone)]
pub struct GraphWreath<A: GraphDriver, B: GraphDriver> {
    pub base: A,
    pub lamps: B,
}

impl<A: GraphDriver, B: GraphDriver> GraphWreath<A, B> {
    pub fn new(base: A, lamps: B) -> Self {
        GraphWreath { base, lamps }
    }

    pub fn value(&self, v: &GWVertex<A::V, B::V>, x: &A::V) -> B::V {
        v.f.get(x).cloned().unwrap_or_else(|| self.lamps.basepoint())
    }

    fn set(&self, v: &mut GWVertex<A::V, B::V>, x: A::V, b: B::V) {
        if b == self.lamps.basepoint() {
            v.f.remove(&x);
        } else {
            v.f.insert(x, b);
        }
    }

    pub fn support_lower_bound(&self, v: &GWVertex<A::V, B::V>) -> u64 {
        v.f.keys().map(|x| self.base.norm(x)).max().unwrap_or(0)
    }

    /// Distance when `A` is the line: lamp moves plus the shortest walk
    /// from `u.a` through every differing position to `v.a`.
    pub fn line_distance(&self, u: &GWVertex<A::V, B::V>, v: &GWVertex<A::V, B::V>) -> Option<u64> {
        let (s, e) = (self.base.line_coordinate(&u.a)?, self.base.line_coordinate(&v.a)?);
        let mut lamp = 0;
        let (mut lo, mut hi) = (s.min(e), s.max(e));
        let keys = u.f.keys().chain(v.f.keys().filter(|k| !u.f.contains_key(*k)));
        for x in keys {
            let d = self.lamps.dist(&self.value(u, x), &self.value(v, x));
            if d > 0 {
                lamp += d;
                let p = self.base.line_coordinate(x)?;
                lo = lo.min(p);
                hi = hi.max(p);
            }
        }
        let walk = (hi - lo) + ((s - lo) + (hi - e)).min((hi - s) + (e - lo));
        Some(lamp + walk as u64)
    }

    pub fn apply(&self, v: &GWVertex<A::V, B::V>, label: &GWLabel<A::V, B::V>) -> Option<GWVertex<A::V, B::V>> {
        match label {
            GWLabel::Lamp(b) => {
                let cur = self.value(v, &v.a);
                if !self.lamps.neighbors(&cur).contains(b) {
                    return None;
                }
                let mut out = v.clone();
                self.set(&mut out, v.a.clone(), b.clone());
                Some(out)
            }
            GWLabel::Move(a) => {
                if !self.base.neighbors(&v.a).contains(a) {
                    return None;
                }
                Some(GWVertex { f: v.f.clone(), a: a.clone() })
            }
        }
    }
}

impl<A: GraphDriver, B: GraphDriver> MarkedSpace for GraphWreath<A, B> {
    type Vertex = GWVertex<A::V, B::V>;
    type Label = GWLabel<A::V, B::V>;

    fn basepoint(&self) -> Self::Vertex {
        GWVertex { f: BTreeMap::new(), a: self.base.basepoint() }
    }

    fn neighbors(&self, v: &Self::Vertex) -> Vec<(Self::Label, Self::Vertex)> {
        let mut out = Vec::new();
        for b in self.lamps.neighbors(&self.value(v, &v.a)) {
            let mut w = v.clone();
            self.set(&mut w, v.a.clone(), b.clone());
            out.push((GWLabel::Lamp(b), w));
        }
        for a in self.base.neighbors(&v.a) {
            out.push((GWLabel::Move(a.clone()), GWVertex { f: v.f.clone(), a }));
        }
        out
    }

    fn step(&self, v: &Self::Vertex, label: &Self::Label) -> Option<Self::Vertex> {
        self.apply(v, label)
    }

    fn degree_bound(&self) -> usize {
        self.base.degree_bound() + self.lamps.degree_bound()
    }

    /// Sorted `(a, b)` support pairs, then `@cursor`.
    fn canonical(&self, v: &Self::Vertex) -> String {
        let pairs: Vec<String> =
            v.f.iter().map(|(a, b)| format!("({},{})", self.base.canonical(a), self.lamps.canonical(b))).collect();
        format!("[{}]@{}", pairs.join(","), self.base.canonical(&v.a))
    }

    fn label_name(&self, label: &Self::Label) -> String {
        match label {
            GWLabel::Lamp(b) => format!("B->{}", self.lamps.canonical(b)),
            GWLabel::Move(a) => format!("A->{}", self.base.canonical(a)),
        }
    }

    fn exact_norm(&self, v: &Self::Vertex) -> Option<u64> {
        self.line_distance(&self.basepoint(), v)
    }

    fn exact_distance(&self, u: &Self::Vertex, v: &Self::Vertex) -> Option<u64> {
        self.line_distance(u, v)
    }

    fn certificate(&self, v: &Self::Vertex) -> u64 {
        self.support_lower_bound(v).max(self.base.norm(&v.a))
    }
}

/// The fixed endpoint `g* = (f*, a*)` with `f*(a*) = b*`.
#[derive(Debug, Clone)]
pub struct GraphTarget<AV: Ord, BV> {
    pub n: u64,
    pub a_star: AV,
    pub b_star: BV,
    pub g_star: GWVertex<AV, BV>,
}

impl<AV: Clone + Ord, BV: Clone> GraphTarget<AV, BV> {
    pub fn radius(&self) -> Rational {
        Ratio::new(self.n as i64, 6)
    }

    pub fn length_bound(&self) -> u64 {
        6 * self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphCase {
    Identity,
    /// `f(a*) != b0`.
    LampAtTarget,
    /// Some support point is far.
    FarSupport,
    /// The cursor is far.
    FarCursor,
    AllNear,
}

impl<A: GraphDriver, B: GraphDriver> GraphWreath<A, B> {
    pub fn target(&self, n: u64) -> Result<GraphTarget<A::V, B::V>> {
        if !self.base.is_infinite() {
            return Err(Error::UnsupportedParams(
                "finite base graph: the product is quasi-isometric to a direct product".into(),
            ));
        }
        if n == 0 {
            return Err(Error::InvalidInput("witness needs n >= 1".into()));
        }
        let a_star = self.base.point_at_norm(n - 1).expect("infinite base graph");
        let b_star = self
            .lamps
            .point_at_norm(1)
            .ok_or_else(|| Error::UnsupportedParams("lamp graph has a single vertex".into()))?;
        let mut g_star = GWVertex { f: BTreeMap::new(), a: a_star.clone() };
        self.set(&mut g_star, a_star.clone(), b_star.clone());
        Ok(GraphTarget { n, a_star, b_star, g_star })
    }

    fn moves(&self, from: &A::V, to: &A::V, out: &mut Vec<GWLabel<A::V, B::V>>) {
        out.extend(self.base.geodesic(from, to).into_iter().map(GWLabel::Move));
    }

    fn recolor(&self, from: &B::V, to: &B::V, out: &mut Vec<GWLabel<A::V, B::V>>) {
        out.extend(self.lamps.geodesic(from, to).into_iter().map(GWLabel::Lamp));
    }

    /// Starting at `(f, from)`, reset every support point except `keep` to
    /// `b0` and finish at `end`. On the line this is the cheaper of the two
    /// sweeps; elsewhere a nearest-first tour.
    fn tour(&self, f: &BTreeMap<A::V, B::V>, from: &A::V, end: &A::V, keep: &A::V, out: &mut Vec<GWLabel<A::V, B::V>>) {
        let b0 = self.lamps.basepoint();
        let mut pending: BTreeMap<A::V, B::V> =
            f.iter().filter(|(x, _)| *x != keep).map(|(x, b)| (x.clone(), b.clone())).collect();
        let coords: Option<Vec<i64>> = pending.keys().map(|x| self.base.line_coordinate(x)).collect();
        let ends = (self.base.line_coordinate(from), self.base.line_coordinate(end));
        let mut cur = from.clone();
        if let (Some(points), (Some(s), Some(e))) = (coords, ends) {
            let lo = points.iter().copied().fold(s.min(e), i64::min);
            let hi = points.iter().copied().fold(s.max(e), i64::max);
            let left = (s - lo) + (hi - lo) + (hi - e);
            let right = (hi - s) + (hi - lo) + (e - lo);
            let turns = if left <= right { [lo, hi, e] } else { [hi, lo, e] };
            if let Some(b) = pending.remove(&cur) {
                self.recolor(&b, &b0, out);
            }
            let mut pos = s;
            for t in turns {
                while pos != t {
                    pos += (t - pos).signum();
                    let next = self.base.line_point(pos).expect("line driver");
                    out.push(GWLabel::Move(next.clone()));
                    if let Some(b) = pending.remove(&next) {
                        self.recolor(&b, &b0, out);
                    }
                }
            }
            return;
        }
        while let Some(x) = pending.keys().min_by_key(|x| (self.base.dist(&cur, x), (*x).clone())).cloned() {
            let b = pending.remove(&x).expect("present");
            self.moves(&cur, &x, out);
            self.recolor(&b, &b0, out);
            cur = x;
        }
        self.moves(&cur, end, out);
    }

    /// Path from `g` (of norm `n`) to `g*` outside `B(g0, n/6)`.
    #[allow(clippy::type_complexity)]
    pub fn witness_path(
        &self,
        g: &GWVertex<A::V, B::V>,
        target: &GraphTarget<A::V, B::V>,
        norm: u64,
    ) -> Result<(GraphCase, Path<GWVertex<A::V, B::V>, GWLabel<A::V, B::V>>)> {
        let n = target.n;
        if norm != n {
            return Err(Error::InvalidInput(format!("vertex has norm {norm}, expected {n}")));
        }
        let b0 = self.lamps.basepoint();
        let a_star = &target.a_star;
        let far = |x: &A::V| 6 * self.base.norm(x) >= n;
        let mut out = Vec::new();
        let case = if *g == target.g_star {
            GraphCase::Identity
        } else if let Some(b) = g.f.get(a_star) {
            if g.f.len() != 1 || g.a != *a_star {
                return Err(Error::Invariant("f(a*) set but other data present".into()));
            }
            self.recolor(b, &target.b_star, &mut out);
            GraphCase::LampAtTarget
        } else if g.f.keys().any(far) {
            self.moves(&g.a, a_star, &mut out);
            self.recolor(&b0, &target.b_star, &mut out);
            self.tour(&g.f, a_star, a_star, a_star, &mut out);
            GraphCase::FarSupport
        } else if far(&g.a) {
            self.recolor(&b0, &target.b_star, &mut out);
            if g.a == *a_star {
                self.tour(&g.f, a_star, a_star, a_star, &mut out);
            } else {
                let mut f = g.f.clone();
                f.insert(g.a.clone(), target.b_star.clone());
                self.moves(&g.a, a_star, &mut out);
                self.recolor(&b0, &target.b_star, &mut out);
                self.tour(&f, a_star, a_star, a_star, &mut out);
            }
            GraphCase::FarCursor
        } else {
            self.moves(&g.a, a_star, &mut out);
            self.recolor(&b0, &target.b_star, &mut out);
            self.tour(&g.f, a_star, a_star, a_star, &mut out);
            GraphCase::AllNear
        };
        let path = Path::from_labels(self, g.clone(), out)?;
        if path.end() != &target.g_star {
            return Err(Error::Invariant(format!("{case:?} path does not end at g*")));
        }
        Ok((case, path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{verify_witness, AvoidanceMode};
    use crate::space::{ball, sphere, Limits, Metric};

    fn line2() -> GraphWreath<Graph, Graph> {
        GraphWreath::new(Graph::Line, Graph::Line)
    }

    #[test]
    fn basepoint_degree() {
        let gw = line2();
        assert_eq!(gw.neighbors(&gw.basepoint()).len(), 4);
        let gw = GraphWreath::new(Graph::Tree(3), Graph::Grid);
        assert_eq!(gw.neighbors(&gw.basepoint()).len(), 7);
    }

    #[test]
    fn drivers_match_bfs() {
        for g in [Graph::Line, Graph::Grid, Graph::Tree(3), Graph::Cycle(5), Graph::Cycle(2)] {
            let mut dist = BTreeMap::new();
            dist.insert(g.basepoint(), 0u64);
            let mut frontier = vec![g.basepoint()];
            for d in 1..=5 {
                let mut next = Vec::new();
                for v in &frontier {
                    for w in g.neighbors(v) {
                        if !dist.contains_key(&w) {
                            dist.insert(w.clone(), d);
                            next.push(w);
                        }
                    }
                }
                frontier = next;
            }
            for (v, d) in &dist {
                assert_eq!(g.norm(v), *d, "{} {:?}", g.name(), v);
                assert_eq!(g.geodesic(&g.basepoint(), v).len() as u64, *d);
                for w in g.neighbors(v) {
                    assert!(g.neighbors(&w).contains(v));
                }
            }
        }
    }

    #[test]
    fn line_formula_matches_bfs() {
        let gw = line2();
        for (v, d) in ball(&gw, 6, Limits::default()).unwrap().iter() {
            assert_eq!(gw.exact_norm(v), Some(d));
            assert!(gw.support_lower_bound(v) <= d);
        }
    }

    #[test]
    fn support_bound_example() {
        let gw = line2();
        let v = GWVertex { f: [(GPoint::Int(-4), GPoint::Int(1))].into_iter().collect(), a: GPoint::Int(0) };
        assert_eq!(gw.support_lower_bound(&v), 4);
        assert_eq!(gw.support_lower_bound(&gw.basepoint()), 0);
    }

    #[test]
    fn witnesses_on_line_spheres() {
        let gw = line2();
        for n in 2..=7 {
            let t = gw.target(n).unwrap();
            for g in sphere(&gw, n, Limits::default()).unwrap() {
                let (case, path) = gw.witness_path(&g, &t, n).unwrap();
                let rep = verify_witness(
                    &gw,
                    &path,
                    &gw.basepoint(),
                    t.radius(),
                    &t.g_star,
                    t.length_bound(),
                    AvoidanceMode::Auto,
                    Limits::default(),
                );
                assert!(rep.overall_pass, "{case:?} {} {rep:?}", gw.canonical(&g));
                if case == GraphCase::LampAtTarget {
                    assert!(path.len() <= 2);
                }
            }
        }
    }

    #[test]
    fn n_one_recolor_crosses_identity() {
        let gw = line2();
        let t = gw.target(1).unwrap();
        let g = GWVertex { f: [(GPoint::Int(0), GPoint::Int(-1))].into_iter().collect(), a: GPoint::Int(0) };
        let (case, path) = gw.witness_path(&g, &t, 1).unwrap();
        assert_eq!(case, GraphCase::LampAtTarget);
        assert!(path.vertices.contains(&gw.basepoint()));
    }

    #[test]
    fn witnesses_on_tree_base() {
        let gw = GraphWreath::new(Graph::Tree(3), Graph::Cycle(2));
        let m = Metric::new(&gw, Limits::default());
        for n in 2..=5 {
            let t = gw.target(n).unwrap();
            for g in sphere(&gw, n, Limits::default()).unwrap() {
                let (_, path) = gw.witness_path(&g, &t, m.norm(&g).unwrap()).unwrap();
                assert_eq!(path.end(), &t.g_star);
            }
        }
    }

    #[test]
    fn finite_base_refused() {
        let gw = GraphWreath::new(Graph::Cycle(4), Graph::Line);
        assert!(matches!(gw.target(3), Err(Error::UnsupportedParams(_))));
    }
}
