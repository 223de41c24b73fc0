use std::collections::BTreeMap;

use super::{Wreath, WreathElement, WreathLabel, XPoint};

/// Shortest cursor walk: sweep the interval `[a, b]` starting toward one
/// end, then finish at the cursor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct WalkPlan {
    pub a: i64,
    pub b: i64,
    pub left_first: bool,
    pub length: u64,
}

fn sweep_cost(a: i64, b: i64, f: i64) -> (u64, bool) {
    let left = (0 - a) + (b - f);
    let right = b + (f - a);
    ((b - a + left.min(right)) as u64, left <= right)
}

/// Cursor classes that must be visited, grouped by class key.
fn required(w: &Wreath, e: &WreathElement) -> BTreeMap<i64, Vec<XPoint>> {
    let mut out: BTreeMap<i64, Vec<XPoint>> = BTreeMap::new();
    for &x in e.lamps.keys() {
        out.entry(w.action.cursor_class(x).0).or_default().push(x);
    }
    out
}

pub(crate) fn plan_walk(w: &Wreath, e: &WreathElement) -> WalkPlan {
    let f = e.cursor;
    let (lo, hi) = (f.min(0), f.max(0));
    let req = required(w, e);
    let modulus = e.lamps.keys().next().and_then(|&x| w.action.cursor_class(x).1);
    match modulus {
        None => {
            let a = req.keys().next().map_or(lo, |&p| p.min(lo));
            let b = req.keys().next_back().map_or(hi, |&p| p.max(hi));
            let (length, left_first) = sweep_cost(a, b, f);
            WalkPlan { a, b, left_first, length }
        }
        Some(k) => {
            let mut best: Option<WalkPlan> = None;
            for a in (lo - k + 1..=lo).rev() {
                let b = req.keys().map(|&r| a + (r - a).rem_euclid(k)).max().unwrap_or(hi).max(hi);
                let (length, left_first) = sweep_cost(a, b, f);
                if best.is_none_or(|p| length < p.length) {
                    best = Some(WalkPlan { a, b, left_first, length });
                }
            }
            best.expect("nonempty range")
        }
    }
}

/// An optimal writing `e_1 h_1 e_2 h_2 ... e_m h_m e_{m+1}` of an element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraversalDecomposition {
    /// `e_1, ..., e_{m+1}` as `t`-words with entries `+-1`.
    pub walks: Vec<Vec<i64>>,
    /// `(x_i, h_i)`: lamp position and the lamp value set there.
    pub moves: Vec<(XPoint, i64)>,
    pub left_first: bool,
}

impl TraversalDecomposition {
    pub fn m(&self) -> usize {
        self.moves.len()
    }

    pub fn cost(&self, w: &Wreath) -> u64 {
        let walk: usize = self.walks.iter().map(Vec::len).sum();
        walk as u64 + self.moves.iter().map(|&(_, h)| w.lamp.norm(h)).sum::<u64>()
    }

    /// Cursor position after `e_1 ... e_i` (`i` from 1).
    pub fn cursor_after(&self, i: usize) -> i64 {
        self.walks[..i].iter().flatten().sum()
    }

    /// The whole word `e_1 h_1 ... e_{m+1}`.
    pub fn labels(&self, w: &Wreath) -> Vec<WreathLabel> {
        let mut out = walk_labels(&self.walks[0]);
        for (i, &(x, h)) in self.moves.iter().enumerate() {
            out.extend(lamp_labels(w, x.orbit, h));
            out.extend(walk_labels(&self.walks[i + 1]));
        }
        out
    }
}

pub(crate) fn walk_labels(walk: &[i64]) -> Vec<WreathLabel> {
    walk.iter().map(|&s| WreathLabel::Base(s)).collect()
}

pub(crate) fn inverse_walk_labels(walk: &[i64]) -> Vec<WreathLabel> {
    walk.iter().rev().map(|&s| WreathLabel::Base(-s)).collect()
}

/// Geodesic lamp word multiplying the lamp under the cursor by `h`.
pub(crate) fn lamp_labels(w: &Wreath, orbit: u8, h: i64) -> Vec<WreathLabel> {
    w.lamp.geodesic(h).into_iter().map(|step| WreathLabel::Lamp { orbit, step }).collect()
}

/// The sweep realizing the exact norm, with lamps recorded at their first
/// visit. Ties between the two sweep directions go to the left-first one.
pub fn optimal_traversal(w: &Wreath, e: &WreathElement) -> TraversalDecomposition {
    let plan = plan_walk(w, e);
    let mut pending = required(w, e);
    let modulus = e.lamps.keys().next().and_then(|&x| w.action.cursor_class(x).1);
    let key = |p: i64| modulus.map_or(p, |k| p.rem_euclid(k));
    let turns = if plan.left_first { [plan.a, plan.b, e.cursor] } else { [plan.b, plan.a, e.cursor] };

    let mut walks = vec![Vec::new()];
    let mut moves = Vec::new();
    let mut pos = 0i64;
    let mut visit = |pos: i64, walks: &mut Vec<Vec<i64>>, moves: &mut Vec<(XPoint, i64)>| {
        if let Some(points) = pending.remove(&key(pos)) {
            for x in points {
                moves.push((x, e.lamps[&x]));
                walks.push(Vec::new());
            }
        }
    };
    visit(pos, &mut walks, &mut moves);
    for target in turns {
        while pos != target {
            let s = (target - pos).signum();
            pos += s;
            walks.last_mut().expect("nonempty").push(s);
            visit(pos, &mut walks, &mut moves);
        }
    }
    TraversalDecomposition { walks, moves, left_first: plan.left_first }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{ball, Limits, MarkedSpace};
    use crate::wreath::{BaseAction, LampGroup};

    #[test]
    fn identity_is_empty() {
        let w = Wreath::lamplighter();
        let d = optimal_traversal(&w, &WreathElement::identity());
        assert_eq!(d.m(), 0);
        assert_eq!(d.walks, vec![Vec::<i64>::new()]);
    }

    #[test]
    fn left_first_sweep() {
        let w = Wreath::lamplighter();
        let e =
            WreathElement { lamps: [(XPoint::new(0, -1), 1), (XPoint::new(0, 2), 1)].into_iter().collect(), cursor: 0 };
        let d = optimal_traversal(&w, &e);
        assert!(d.left_first);
        assert_eq!(d.moves.iter().map(|m| m.0.pos).collect::<Vec<_>>(), vec![-1, 2]);
        assert_eq!(d.walks, vec![vec![-1], vec![1, 1, 1], vec![-1, -1]]);
        assert_eq!(d.cost(&w), 8);
    }

    #[test]
    fn g_star_decomposes() {
        let w = Wreath::lamplighter();
        let d = optimal_traversal(&w, &w.element("t t t t h0").unwrap());
        assert_eq!(d.walks, vec![vec![1; 4], vec![]]);
        assert_eq!(d.moves, vec![(XPoint::new(0, 4), 1)]);
        assert_eq!(d.cost(&w), 5);
    }

    #[test]
    fn decompositions_are_optimal_and_spell_the_element() {
        let spaces = [
            Wreath::new(LampGroup::Cyclic(2), BaseAction::Regular).unwrap(),
            Wreath::new(LampGroup::Cyclic(3), BaseAction::TwoOrbits).unwrap(),
            Wreath::new(LampGroup::Integers, BaseAction::Cyclic(3)).unwrap(),
        ];
        for w in spaces {
            for (v, d) in ball(&w, 5, Limits::default()).unwrap().iter() {
                let dec = optimal_traversal(&w, v);
                assert_eq!(dec.cost(&w), d);
                let labels = dec.labels(&w);
                assert_eq!(labels.len() as u64, d);
                assert_eq!(&w.apply_word(&w.basepoint(), &labels).unwrap(), v);
            }
        }
    }
}
