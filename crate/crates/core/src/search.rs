//! Shortest-path search on implicit graphs with a vertex filter.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};
use crate::space::{Limits, MarkedSpace, Path};

/// Which endpoint a search frontier grows from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Vertex filter: `(vertex, side, depth from that side's endpoint)`.
pub type Admit<'f, V> = dyn Fn(&V, Side, u64) -> Result<bool> + 'f;

struct Visit<V> {
    depth: u64,
    parent: Option<V>,
}

/// Layered bidirectional BFS. Endpoints are assumed admissible.
/// Returns `None` when one side runs out of vertices.
pub fn bidirectional<S: MarkedSpace>(
    space: &S,
    a: &S::Vertex,
    b: &S::Vertex,
    admit: &Admit<'_, S::Vertex>,
    limits: Limits,
) -> Result<Option<Path<S::Vertex, S::Label>>> {
    if a == b {
        return Ok(Some(Path::new(a.clone())));
    }
    let mut fwd: HashMap<S::Vertex, Visit<S::Vertex>> = HashMap::new();
    let mut bwd: HashMap<S::Vertex, Visit<S::Vertex>> = HashMap::new();
    fwd.insert(a.clone(), Visit { depth: 0, parent: None });
    bwd.insert(b.clone(), Visit { depth: 0, parent: None });
    let mut ffront = vec![a.clone()];
    let mut bfront = vec![b.clone()];
    let (mut fdepth, mut bdepth) = (0u64, 0u64);

    loop {
        if ffront.is_empty() || bfront.is_empty() {
            return Ok(None);
        }
        let forward = ffront.len() <= bfront.len();
        let (front, seen, other, side, depth) = if forward {
            (&mut ffront, &mut fwd, &bwd, Side::Source, &mut fdepth)
        } else {
            (&mut bfront, &mut bwd, &fwd, Side::Target, &mut bdepth)
        };
        *depth += 1;
        let mut next = Vec::new();
        let mut best: Option<(u64, S::Vertex)> = None;
        for v in std::mem::take(front) {
            for (_, w) in space.neighbors(&v) {
                if seen.contains_key(&w) {
                    continue;
                }
                if !admit(&w, side, *depth)? {
                    continue;
                }
                if seen.len() + other.len() >= limits.bfs_cap {
                    return Err(Error::budget("detour search", limits.bfs_cap));
                }
                if let Some(o) = other.get(&w) {
                    let total = *depth + o.depth;
                    if best.as_ref().is_none_or(|(t, _)| total < *t) {
                        best = Some((total, w.clone()));
                    }
                }
                seen.insert(w.clone(), Visit { depth: *depth, parent: Some(v.clone()) });
                next.push(w);
            }
        }
        *front = next;
        if let Some((_, meet)) = best {
            return stitch(space, a, &meet, &fwd, &bwd).map(Some);
        }
    }
}

fn stitch<S: MarkedSpace>(
    space: &S,
    a: &S::Vertex,
    meet: &S::Vertex,
    fwd: &HashMap<S::Vertex, Visit<S::Vertex>>,
    bwd: &HashMap<S::Vertex, Visit<S::Vertex>>,
) -> Result<Path<S::Vertex, S::Label>> {
    let mut chain = vec![meet.clone()];
    let mut cur = meet.clone();
    while let Some(p) = fwd.get(&cur).and_then(|v| v.parent.clone()) {
        chain.push(p.clone());
        cur = p;
    }
    chain.reverse();
    let mut cur = meet.clone();
    while let Some(p) = bwd.get(&cur).and_then(|v| v.parent.clone()) {
        chain.push(p.clone());
        cur = p;
    }
    path_through(space, a, &chain)
}

/// Rebuild a labelled path through a chain of adjacent vertices.
pub fn path_through<S: MarkedSpace>(
    space: &S,
    a: &S::Vertex,
    chain: &[S::Vertex],
) -> Result<Path<S::Vertex, S::Label>> {
    let mut path = Path::new(a.clone());
    for w in chain.iter().skip(1) {
        let label = space
            .neighbors(path.end())
            .into_iter()
            .find(|(_, x)| x == w)
            .map(|(l, _)| l)
            .ok_or_else(|| Error::Invariant("search chain is not a walk".into()))?;
        path.push(space, label)?;
    }
    Ok(path)
}

/// A* guided by the family's exact distance oracle. Since the unrestricted
/// distance never exceeds the restricted one, the heuristic is admissible
/// and consistent. Falls back to [`bidirectional`] without an oracle.
pub fn astar<S: MarkedSpace>(
    space: &S,
    a: &S::Vertex,
    b: &S::Vertex,
    admit: &Admit<'_, S::Vertex>,
    limits: Limits,
) -> Result<Option<Path<S::Vertex, S::Label>>> {
    let Some(h0) = space.exact_distance(a, b) else {
        return bidirectional(space, a, b, admit, limits);
    };
    let mut best: HashMap<S::Vertex, (u64, Option<S::Vertex>)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(a.clone(), (0, None));
    let mut seq = 0u64;
    heap.push(Reverse((h0, Reverse(0u64), seq, a.clone())));
    while let Some(Reverse((_, Reverse(g), _, v))) = heap.pop() {
        if best.get(&v).is_some_and(|&(d, _)| d < g) {
            continue;
        }
        if v == *b {
            let mut chain = vec![v.clone()];
            let mut cur = v;
            while let Some(p) = best.get(&cur).and_then(|x| x.1.clone()) {
                chain.push(p.clone());
                cur = p;
            }
            chain.reverse();
            return path_through(space, a, &chain).map(Some);
        }
        for (_, w) in space.neighbors(&v) {
            let ng = g + 1;
            if best.get(&w).is_some_and(|&(d, _)| d <= ng) {
                continue;
            }
            if !admit(&w, Side::Source, ng)? {
                continue;
            }
            if best.len() >= limits.bfs_cap {
                return Err(Error::budget("detour search", limits.bfs_cap));
            }
            let h = space.exact_distance(&w, b).ok_or_else(|| Error::Invariant("distance oracle is partial".into()))?;
            best.insert(w.clone(), (ng, Some(v.clone())));
            seq += 1;
            heap.push(Reverse((ng + h, Reverse(ng), seq, w)));
        }
    }
    Ok(None)
}
