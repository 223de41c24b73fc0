//! Divergence: detours around balls, growth profiles, the growth
//! comparator and witness-path verification.

use std::cmp::Ordering;
use std::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::search::{self, Side};
use crate::space::{self, Exclusion, Limits, MarkedSpace, Metric, Path, Rational};

/// Default detour search bound, as a multiple of the largest endpoint norm.
pub const DEFAULT_BOUND_MULTIPLIER: u64 = 8;

/// A nonnegative integer or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extended {
    Finite(u64),
    Infinite,
}

impl Extended {
    pub fn finite(self) -> Option<u64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }
}

impl Ord for Extended {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Extended::Finite(a), Extended::Finite(b)) => a.cmp(b),
            (Extended::Finite(_), Extended::Infinite) => Ordering::Less,
            (Extended::Infinite, Extended::Finite(_)) => Ordering::Greater,
            (Extended::Infinite, Extended::Infinite) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(v) => write!(f, "{v}"),
            Extended::Infinite => f.write_str("infinity"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(v) => s.serialize_u64(*v),
            Extended::Infinite => s.serialize_str("infinity"),
        }
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(v) => Ok(Extended::Finite(v)),
            Raw::S(s) if s == "infinity" => Ok(Extended::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("expected a number or \"infinity\", got {s:?}"))),
        }
    }
}

/// `delta` in (0,1) and `gamma >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivergenceParams {
    pub delta: Rational,
    pub gamma: Rational,
}

impl DivergenceParams {
    pub fn new(delta: Rational, gamma: Rational) -> Result<Self> {
        let zero = Rational::from_integer(0);
        if delta <= zero || delta >= Rational::from_integer(1) {
            return Err(Error::InvalidInput(format!("delta must lie in (0,1), got {delta}")));
        }
        if gamma < zero {
            return Err(Error::InvalidInput(format!("gamma must be nonnegative, got {gamma}")));
        }
        Ok(DivergenceParams { delta, gamma })
    }

    /// `delta * r - gamma`.
    pub fn radius(&self, r: u64) -> Rational {
        self.delta * Rational::from_integer(r as i64) - self.gamma
    }
}

#[derive(Debug, Clone)]
pub struct DetourResult<V, L> {
    /// `None` when no admissible path exists within the search bound.
    pub path: Option<Path<V, L>>,
    pub search_bound: u64,
    pub radius: Rational,
}

impl<V, L> DetourResult<V, L> {
    pub fn length(&self) -> Extended {
        match &self.path {
            Some(p) => Extended::Finite(p.labels.len() as u64),
            None => Extended::Infinite,
        }
    }
}

/// Everything a batch of detour searches around one ball shares.
pub struct DetourContext<'a, S: MarkedSpace> {
    metric: Metric<'a, S>,
    exclusion: Exclusion<S::Vertex>,
    bound: u64,
}

impl<'a, S: MarkedSpace> DetourContext<'a, S> {
    pub fn new(space: &'a S, center: &S::Vertex, radius: Rational, search_bound: u64, limits: Limits) -> Result<Self> {
        Ok(DetourContext {
            metric: Metric::new(space, limits),
            exclusion: Exclusion::build(space, center, radius, limits)?,
            bound: search_bound,
        })
    }

    pub fn metric(&self) -> &Metric<'a, S> {
        &self.metric
    }

    pub fn excluded(&self, v: &S::Vertex) -> bool {
        self.exclusion.contains(v)
    }

    fn within_bound(&self, v: &S::Vertex, start_norm: u64, depth: u64) -> Result<bool> {
        let space = self.metric.space();
        if let Some(n) = space.exact_norm(v) {
            return Ok(n <= self.bound);
        }
        if start_norm + depth <= self.bound {
            return Ok(true);
        }
        if space.certificate(v) > self.bound {
            return Ok(false);
        }
        Ok(self.metric.norm_at_most(v, self.bound)?.is_some())
    }

    /// Shortest admissible path from `a` to `b`.
    pub fn detour(&self, a: &S::Vertex, b: &S::Vertex) -> Result<DetourResult<S::Vertex, S::Label>> {
        if self.excluded(a) || self.excluded(b) {
            return Err(Error::InvalidInput("detour endpoint lies inside the excluded ball".into()));
        }
        let (na, nb) = (self.metric.norm(a)?, self.metric.norm(b)?);
        let result = |path| DetourResult { path, search_bound: self.bound, radius: self.exclusion.radius() };
        if na > self.bound || nb > self.bound {
            return Ok(result(None));
        }
        let admit = |v: &S::Vertex, side: Side, depth: u64| -> Result<bool> {
            if self.excluded(v) {
                return Ok(false);
            }
            let start = if side == Side::Source { na } else { nb };
            self.within_bound(v, start, depth)
        };
        let path = search::astar(self.metric.space(), a, b, &admit, self.metric.limits())?;
        Ok(result(path))
    }
}

/// Shortest path from `a` to `b` through vertices outside the open ball
/// `B(center, radius)` and of norm at most `search_bound`.
pub fn min_detour<S: MarkedSpace>(
    space: &S,
    a: &S::Vertex,
    b: &S::Vertex,
    center: &S::Vertex,
    radius: Rational,
    search_bound: u64,
    limits: Limits,
) -> Result<DetourResult<S::Vertex, S::Label>> {
    DetourContext::new(space, center, radius, search_bound, limits)?.detour(a, b)
}

/// `Div_gamma(a, b, c; delta)`.
pub fn div_triple<S: MarkedSpace>(
    space: &S,
    a: &S::Vertex,
    b: &S::Vertex,
    c: &S::Vertex,
    params: DivergenceParams,
    bound_multiplier: u64,
    limits: Limits,
) -> Result<Extended> {
    if a == b {
        return Ok(Extended::Finite(0));
    }
    let r = space::distance(space, c, a, limits)?.min(space::distance(space, c, b, limits)?);
    let metric = Metric::new(space, limits);
    let scale = metric.norm(a)?.max(metric.norm(b)?).max(metric.norm(c)?).max(1);
    let res = min_detour(space, a, b, c, params.radius(r), bound_multiplier * scale, limits)?;
    Ok(res.length())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub n: u64,
    pub value: Extended,
    /// Pairs covered, directly or through a symmetric representative.
    pub pairs_examined: u64,
    pub exhaustive: bool,
    /// Detour searches actually run.
    pub searches: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Every pair, one detour search per orbit when the family provides
    /// [`MarkedSpace::pair_representative`].
    Exhaustive,
    /// Every pair, one detour search each.
    AllPairs,
    Sample {
        k: u64,
        seed: u64,
    },
}

fn pair_at(i: u64, len: u64) -> (usize, usize) {
    // Row-major enumeration of pairs (x, y) with x < y.
    let mut x = 0u64;
    let mut rem = i;
    while rem >= len - 1 - x {
        rem -= len - 1 - x;
        x += 1;
    }
    (x as usize, (x + 1 + rem) as usize)
}

/// `sup Div_gamma(a, b, x0; delta)` over pairs on the sphere of radius `n`.
/// An unreachable pair (within the search bound) yields infinity.
pub fn div_profile<S: MarkedSpace>(
    space: &S,
    n: u64,
    params: DivergenceParams,
    strategy: Strategy,
    bound_multiplier: u64,
    limits: Limits,
) -> Result<GrowthSample> {
    let sphere = space::sphere(space, n, limits)?;
    let len = sphere.len() as u64;
    let total = len * len.saturating_sub(1) / 2;
    let pairs: Vec<(usize, usize)> = match strategy {
        Strategy::Sample { k, seed } if k < total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picked: Vec<u64> =
                index::sample(&mut rng, total as usize, k as usize).into_iter().map(|i| i as u64).collect();
            picked.sort_unstable();
            picked.into_iter().map(|i| pair_at(i, len)).collect()
        }
        _ => (0..sphere.len()).flat_map(|x| (x + 1..sphere.len()).map(move |y| (x, y))).collect(),
    };
    let covered = pairs.len() as u64;
    let reps: Vec<(S::Vertex, S::Vertex)> = if strategy == Strategy::Exhaustive {
        let mut set: Vec<(S::Vertex, S::Vertex)> = pairs
            .par_iter()
            .map(|&(x, y)| {
                let (a, b) = (&sphere[x], &sphere[y]);
                space.pair_representative(a, b).unwrap_or_else(|| (a.clone(), b.clone()))
            })
            .collect();
        set.par_sort_unstable();
        set.dedup();
        set
    } else {
        pairs.iter().map(|&(x, y)| (sphere[x].clone(), sphere[y].clone())).collect()
    };
    drop(pairs);
    let base = space.basepoint();
    let ctx = DetourContext::new(space, &base, params.radius(n), bound_multiplier * n.max(1), limits)?;
    let value = reps
        .par_iter()
        .map(|(a, b)| ctx.detour(a, b).map(|r| r.length()))
        .try_reduce(|| Extended::Finite(0), |p, q| Ok(p.max(q)))?;
    Ok(GrowthSample { n, value, pairs_examined: covered, exhaustive: covered == total, searches: reps.len() as u64 })
}

/// Numerical stand-in for the unrestricted supremum over triples with
/// `d(a,b) <= n`: by vertex transitivity `a` is fixed at the basepoint,
/// `b` ranges over `ball(n)` and `c` over `ball(c_radius)`.
pub fn div_general_crosscheck<S: MarkedSpace>(
    space: &S,
    n: u64,
    params: DivergenceParams,
    c_radius: u64,
    bound_multiplier: u64,
    limits: Limits,
) -> Result<GrowthSample> {
    let a = space.basepoint();
    let bs: Vec<S::Vertex> = space::ball(space, n, limits)?.iter().map(|(v, _)| v.clone()).collect();
    let cs: Vec<S::Vertex> = space::ball(space, c_radius, limits)?.iter().map(|(v, _)| v.clone()).collect();
    let triples: Vec<(&S::Vertex, &S::Vertex)> = bs.iter().flat_map(|b| cs.iter().map(move |c| (b, c))).collect();
    let value = triples
        .par_iter()
        .map(|(b, c)| div_triple(space, &a, b, c, params, bound_multiplier, limits))
        .try_reduce(|| Extended::Finite(0), |p, q| Ok(p.max(q)))?;
    Ok(GrowthSample {
        n,
        value,
        pairs_examined: triples.len() as u64,
        exhaustive: false,
        searches: triples.len() as u64,
    })
}

/// Right-hand side function of the comparator.
pub enum Growth<'a> {
    /// Nondecreasing samples; evaluated at the largest sample point not
    /// above the query, which can only underestimate.
    Sampled(&'a [(u64, Extended)]),
    ClosedForm(&'a dyn Fn(Rational) -> Rational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrowthComparison {
    pub holds: bool,
    pub first_violation: Option<u64>,
}

/// Checks `f(x) <= A g(Ax + A) + Ax + A` at every sample of `f`.
pub fn compare_growth(f: &[(u64, Extended)], g: &Growth<'_>, a: Rational) -> Result<bool> {
    Ok(compare_growth_detailed(f, g, a)?.holds)
}

pub fn compare_growth_detailed(f: &[(u64, Extended)], g: &Growth<'_>, a: Rational) -> Result<GrowthComparison> {
    if a < Rational::from_integer(1) {
        return Err(Error::InvalidInput(format!("A must be at least 1, got {a}")));
    }
    if let Growth::Sampled(samples) = g {
        if samples.windows(2).any(|w| w[0].0 >= w[1].0 || w[0].1 > w[1].1) {
            return Err(Error::InvalidInput("g samples must be strictly increasing in x and nondecreasing".into()));
        }
    }
    for &(x, fx) in f {
        let q = a * Rational::from_integer(x as i64) + a;
        let gq = match g {
            Growth::ClosedForm(func) => Some(func(q)),
            Growth::Sampled(samples) => {
                let idx = samples.partition_point(|(sx, _)| Rational::from_integer(*sx as i64) <= q);
                if idx == 0 {
                    return Err(Error::DomainGap(q.to_string()));
                }
                samples[idx - 1].1.finite().map(|v| Rational::from_integer(v as i64))
            }
        };
        let ok = match (fx, gq) {
            (_, None) => true,
            (Extended::Infinite, Some(_)) => false,
            (Extended::Finite(v), Some(gv)) => Rational::from_integer(v as i64) <= a * gv + q,
        };
        if !ok {
            return Ok(GrowthComparison { holds: false, first_violation: Some(x) });
        }
    }
    Ok(GrowthComparison { holds: true, first_violation: None })
}

/// Per-vertex ball-avoidance evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Outside, by an exact distance.
    Exact,
    /// Outside, by a norm lower bound only.
    Certified,
    /// Inside, by an exact distance.
    Violated,
    /// Neither exact distance nor certificate available.
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub endpoints_verified: bool,
    pub edge_validity: bool,
    pub length: u64,
    pub length_bound: u64,
    pub avoidance: Vec<Verdict>,
    pub overall_pass: bool,
}

impl WitnessReport {
    pub fn count(&self, verdict: Verdict) -> usize {
        self.avoidance.iter().filter(|&&v| v == verdict).count()
    }
}

/// How `verify_witness` decides ball avoidance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AvoidanceMode {
    /// Exact distances when affordable, certificate otherwise.
    #[default]
    Auto,
    /// Family certificate only; never touches BFS.
    CertificateOnly,
}

#[allow(clippy::too_many_arguments)]
pub fn verify_witness<S: MarkedSpace>(
    space: &S,
    path: &Path<S::Vertex, S::Label>,
    center: &S::Vertex,
    radius: Rational,
    expected_end: &S::Vertex,
    length_bound: u64,
    mode: AvoidanceMode,
    limits: Limits,
) -> WitnessReport {
    let mut edge_validity = path.vertices.len() == path.labels.len() + 1 && path.vertices.first() == Some(&path.start);
    let mut walk = vec![path.start.clone()];
    for (i, l) in path.labels.iter().enumerate() {
        match space.step(walk.last().expect("nonempty"), l) {
            Some(w) => {
                if path.vertices.get(i + 1) != Some(&w) {
                    edge_validity = false;
                }
                walk.push(w);
            }
            None => {
                edge_validity = false;
                break;
            }
        }
    }
    let end = if edge_validity { walk.last() } else { path.vertices.last() };
    let endpoints_verified = end.is_some_and(|e| space.canonical(e) == space.canonical(expected_end));

    let avoidance = avoidance_verdicts(space, &path.vertices, center, radius, mode, limits);
    let length = path.labels.len() as u64;
    let overall_pass = endpoints_verified
        && edge_validity
        && length <= length_bound
        && avoidance.iter().all(|v| matches!(v, Verdict::Exact | Verdict::Certified));
    WitnessReport { endpoints_verified, edge_validity, length, length_bound, avoidance, overall_pass }
}

fn avoidance_verdicts<S: MarkedSpace>(
    space: &S,
    vertices: &[S::Vertex],
    center: &S::Vertex,
    radius: Rational,
    mode: AvoidanceMode,
    limits: Limits,
) -> Vec<Verdict> {
    if space::largest_below(radius).is_none() {
        return vec![Verdict::Exact; vertices.len()];
    }
    let at_base = *center == space.basepoint();
    let exact = |v: &S::Vertex| -> Option<u64> {
        space.exact_distance(center, v).or_else(|| if at_base { space.exact_norm(v) } else { None })
    };
    let by_certificate = |v: &S::Vertex| {
        if at_base && space::at_least(space.certificate(v), radius) {
            Verdict::Certified
        } else {
            Verdict::Unverified
        }
    };
    let exclusion = match mode {
        AvoidanceMode::Auto if vertices.iter().any(|v| exact(v).is_none()) => {
            Exclusion::build(space, center, radius, limits).ok()
        }
        _ => None,
    };
    vertices
        .iter()
        .map(|v| {
            if mode == AvoidanceMode::CertificateOnly {
                return by_certificate(v);
            }
            if let Some(d) = exact(v) {
                return if space::at_least(d, radius) { Verdict::Exact } else { Verdict::Violated };
            }
            match &exclusion {
                Some(ex) if ex.contains(v) => Verdict::Violated,
                Some(_) => Verdict::Exact,
                None => by_certificate(v),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line;

    impl MarkedSpace for Line {
        type Vertex = i64;
        type Label = i64;
        fn basepoint(&self) -> i64 {
            0
        }
        fn neighbors(&self, v: &i64) -> Vec<(i64, i64)> {
            vec![(1, v + 1), (-1, v - 1)]
        }
        fn step(&self, v: &i64, l: &i64) -> Option<i64> {
            (l.abs() == 1).then_some(v + l)
        }
        fn degree_bound(&self) -> usize {
            2
        }
        fn canonical(&self, v: &i64) -> String {
            v.to_string()
        }
        fn label_name(&self, l: &i64) -> String {
            l.to_string()
        }
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn extended_json() {
        assert_eq!(serde_json::to_string(&Extended::Finite(4)).unwrap(), "4");
        assert_eq!(serde_json::to_string(&Extended::Infinite).unwrap(), "\"infinity\"");
        let back: Extended = serde_json::from_str("\"infinity\"").unwrap();
        assert_eq!(back, Extended::Infinite);
        assert!(Extended::Finite(u64::MAX) < Extended::Infinite);
    }

    #[test]
    fn params_validate() {
        assert!(DivergenceParams::new(r(1, 2), r(0, 1)).is_ok());
        assert!(DivergenceParams::new(r(1, 1), r(0, 1)).is_err());
        assert!(DivergenceParams::new(r(1, 2), r(-1, 1)).is_err());
    }

    #[test]
    fn line_has_no_detour_past_the_origin() {
        let res = min_detour(&Line, &3, &-3, &0, r(1, 1), 24, Limits::default()).unwrap();
        assert!(res.path.is_none());
        let res = min_detour(&Line, &3, &-3, &0, r(0, 1), 24, Limits::default()).unwrap();
        assert_eq!(res.length(), Extended::Finite(6));
    }

    #[test]
    fn endpoint_in_ball_is_rejected() {
        assert!(min_detour(&Line, &0, &3, &0, r(1, 2), 24, Limits::default()).is_err());
    }

    #[test]
    fn pair_indexing_is_row_major() {
        let all: Vec<_> = (0..6).map(|i| pair_at(i, 4)).collect();
        assert_eq!(all, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn comparator_examples() {
        let sq: Vec<(u64, Extended)> = (0..=1000).map(|x| (x, Extended::Finite(x * x))).collect();
        let id = |x: Rational| x;
        let res = compare_growth_detailed(&sq, &Growth::ClosedForm(&id), r(10, 1)).unwrap();
        assert!(!res.holds);
        // 111^2 = 12321 > 10 * 1120 + 1120 = 12320.
        assert_eq!(res.first_violation, Some(111));

        let lin: Vec<(u64, Extended)> = (0..=1000).map(|x| (x, Extended::Finite(5 * x + 3))).collect();
        assert!(compare_growth(&lin, &Growth::ClosedForm(&id), r(5, 1)).unwrap());
        assert!(compare_growth(&lin, &Growth::Sampled(&lin), r(1, 1)).unwrap());
    }

    #[test]
    fn comparator_rejects_bad_samples() {
        let g = [(1, Extended::Finite(5)), (2, Extended::Finite(3))];
        let f = [(1, Extended::Finite(1))];
        assert!(compare_growth(&f, &Growth::Sampled(&g), r(1, 1)).is_err());
        let g = [(5, Extended::Finite(5))];
        assert!(matches!(compare_growth(&f, &Growth::Sampled(&g), r(1, 1)), Err(Error::DomainGap(_))));
    }

    #[test]
    fn flipped_label_breaks_edges() {
        let mut p = Path::from_labels(&Line, 2, vec![1, 1]).unwrap();
        let ok = verify_witness(&Line, &p, &0, r(1, 1), &4, 2, AvoidanceMode::Auto, Limits::default());
        assert!(ok.overall_pass);
        p.labels[1] = -1;
        let bad = verify_witness(&Line, &p, &0, r(1, 1), &4, 2, AvoidanceMode::Auto, Limits::default());
        assert!(!bad.edge_validity);
        assert!(!bad.overall_pass);
    }

    #[test]
    fn violated_only_on_exact_evidence() {
        let p = Path::from_labels(&Line, 2, vec![-1, -1]).unwrap();
        let rep = verify_witness(&Line, &p, &0, r(1, 1), &0, 5, AvoidanceMode::Auto, Limits::default());
        assert_eq!(rep.avoidance, vec![Verdict::Exact, Verdict::Exact, Verdict::Violated]);
        let rep = verify_witness(&Line, &p, &0, r(1, 1), &0, 5, AvoidanceMode::CertificateOnly, Limits::default());
        assert_eq!(rep.count(Verdict::Violated), 0);
        assert!(!rep.overall_pass);
    }
}
