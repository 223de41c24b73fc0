//! Wreath products `H wr F` and permutational wreath products `H wr_X F`
//! with `F = Z` generated by `t`.
//!
//! An element is a finitely supported lamp configuration on `X` together
//! with a cursor in `F`. Right multiplication by `t^{+-1}` moves the cursor;
//! right multiplication by a lamp generator for orbit `i` multiplies the
//! lamp at `cursor . y_i`.

mod traversal;
mod witness;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::MarkedSpace;

pub use traversal::{optimal_traversal, TraversalDecomposition};
pub use witness::{witness_path, Case, Case4Route, WitnessOutcome, WitnessTarget};

/// Lamp group `H` with its standard generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LampGroup {
    /// `Z_k`, generated by `1` (and `-1` when `k > 2`).
    Cyclic(u32),
    /// `Z`, generated by `+-1`.
    Integers,
}

impl LampGroup {
    pub fn validate(self) -> Result<Self> {
        match self {
            LampGroup::Cyclic(k) if k < 2 => {
                Err(Error::InvalidInput(format!("cyclic lamp group needs order >= 2, got {k}")))
            }
            _ => Ok(self),
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, LampGroup::Cyclic(_))
    }

    /// Generators as group elements, in neighbor order.
    pub fn generators(self) -> Vec<i64> {
        match self {
            LampGroup::Cyclic(2) => vec![1],
            _ => vec![1, -1],
        }
    }

    pub fn reduce(self, v: i64) -> i64 {
        match self {
            LampGroup::Cyclic(k) => v.rem_euclid(k as i64),
            LampGroup::Integers => v,
        }
    }

    pub fn mul(self, a: i64, b: i64) -> i64 {
        self.reduce(a + b)
    }

    pub fn inv(self, a: i64) -> i64 {
        self.reduce(-a)
    }

    pub fn norm(self, v: i64) -> u64 {
        match self {
            LampGroup::Cyclic(k) => {
                let r = v.rem_euclid(k as i64) as u64;
                r.min(k as u64 - r)
            }
            LampGroup::Integers => v.unsigned_abs(),
        }
    }

    /// Shortest generator word for `v`.
    pub fn geodesic(self, v: i64) -> Vec<i64> {
        let v = self.reduce(v);
        let n = self.norm(v) as usize;
        let up = match self {
            LampGroup::Cyclic(k) => (v as u64) <= k as u64 - v as u64,
            LampGroup::Integers => v >= 0,
        };
        let s = if up || self == LampGroup::Cyclic(2) { 1 } else { -1 };
        vec![s; n]
    }

    pub fn name(self) -> String {
        match self {
            LampGroup::Cyclic(k) => format!("z{k}"),
            LampGroup::Integers => "z".into(),
        }
    }
}

/// Point of the `F`-set `X`: orbit index and position inside the orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct XPoint {
    pub orbit: u8,
    pub pos: i64,
}

impl XPoint {
    pub fn new(orbit: u8, pos: i64) -> Self {
        XPoint { orbit, pos }
    }
}

/// How `F = Z` acts on `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BaseAction {
    /// `X = F`, the ordinary wreath product.
    Regular,
    /// `Z` acting on a copy of `Z` by translation (transitive Schreier action).
    Translation,
    /// `Z` acting on two disjoint copies of `Z` by translation.
    TwoOrbits,
    /// `Z` acting on `Z_k` by rotation (finite `X`).
    Cyclic(u32),
}

impl BaseAction {
    pub fn validate(self) -> Result<Self> {
        match self {
            BaseAction::Cyclic(k) if k < 2 => {
                Err(Error::InvalidInput(format!("finite action needs |X| >= 2, got {k}")))
            }
            _ => Ok(self),
        }
    }

    pub fn orbits(self) -> u8 {
        match self {
            BaseAction::TwoOrbits => 2,
            _ => 1,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, BaseAction::Cyclic(_))
    }

    /// Free actions where each orbit is a copy of `F`.
    pub fn is_free(self) -> bool {
        !self.is_finite()
    }

    /// Orbit representative `y_i`.
    pub fn representative(self, orbit: u8) -> XPoint {
        XPoint::new(orbit, 0)
    }

    /// `f . x`.
    pub fn act(self, f: i64, x: XPoint) -> XPoint {
        match self {
            BaseAction::Cyclic(k) => XPoint::new(x.orbit, (x.pos + f).rem_euclid(k as i64)),
            _ => XPoint::new(x.orbit, x.pos + f),
        }
    }

    /// Distance from the orbit representative in the Schreier graph.
    pub fn x_norm(self, x: XPoint) -> u64 {
        match self {
            BaseAction::Cyclic(k) => {
                let r = x.pos.rem_euclid(k as i64) as u64;
                r.min(k as u64 - r)
            }
            _ => x.pos.unsigned_abs(),
        }
    }

    /// Cursor positions `c` (an integer) with `c . y_orbit = x`, described
    /// as a residue class: `(x.pos, None)` for free actions, `(r, Some(k))`
    /// for rotation.
    pub fn cursor_class(self, x: XPoint) -> (i64, Option<i64>) {
        match self {
            BaseAction::Cyclic(k) => (x.pos.rem_euclid(k as i64), Some(k as i64)),
            _ => (x.pos, None),
        }
    }

    pub fn name(self) -> String {
        match self {
            BaseAction::Regular => "regular".into(),
            BaseAction::Translation => "translation".into(),
            BaseAction::TwoOrbits => "two-orbit".into(),
            BaseAction::Cyclic(k) => format!("cyclic{k}"),
        }
    }
}

/// BFS on the Schreier graph of `Z = <t>` acting on one orbit: returns the
/// X-distance of every point within `radius` of `y_orbit`, together with a
/// shortest `t`-word (entries `+-1`) reaching it. Ties prefer `t` over `t^-1`.
pub fn schreier_ball(action: BaseAction, orbit: u8, radius: u64) -> BTreeMap<XPoint, (u64, Vec<i64>)> {
    let start = action.representative(orbit);
    let mut out = BTreeMap::new();
    out.insert(start, (0, Vec::new()));
    let mut frontier = vec![start];
    for d in 1..=radius {
        let mut next = Vec::new();
        for x in frontier {
            let word = out[&x].1.clone();
            for s in [1, -1] {
                let y = action.act(s, x);
                if let std::collections::btree_map::Entry::Vacant(e) = out.entry(y) {
                    let mut w = word.clone();
                    w.push(s);
                    e.insert((d, w));
                    next.push(y);
                }
            }
        }
        frontier = next;
    }
    out
}

/// `(k, f)`: lamps (identity values omitted) and cursor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WreathElement {
    pub lamps: BTreeMap<XPoint, i64>,
    pub cursor: i64,
}

impl WreathElement {
    pub fn identity() -> Self {
        WreathElement { lamps: BTreeMap::new(), cursor: 0 }
    }

    pub fn is_lit(&self, x: &XPoint) -> bool {
        self.lamps.contains_key(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum WreathLabel {
    /// `t^{+-1}`.
    Base(i64),
    /// Lamp generator `step` acting at orbit `orbit`.
    Lamp { orbit: u8, step: i64 },
}

impl fmt::Display for WreathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            WreathLabel::Base(1) => f.write_str("t"),
            WreathLabel::Base(_) => f.write_str("t^-1"),
            WreathLabel::Lamp { orbit, step } => {
                f.write_str("h0")?;
                if orbit != 0 {
                    write!(f, "@{orbit}")?;
                }
                if step < 0 {
                    f.write_str("^-1")?;
                }
                Ok(())
            }
        }
    }
}

/// The marked space `H wr_X Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Wreath {
    pub lamp: LampGroup,
    pub action: BaseAction,
}

impl Wreath {
    pub fn new(lamp: LampGroup, action: BaseAction) -> Result<Self> {
        Ok(Wreath { lamp: lamp.validate()?, action: action.validate()? })
    }

    /// `Z_2 wr Z`.
    pub fn lamplighter() -> Self {
        Wreath { lamp: LampGroup::Cyclic(2), action: BaseAction::Regular }
    }

    /// Position lit by lamp generators of `orbit` when the cursor is `f`.
    pub fn lamp_position(&self, f: i64, orbit: u8) -> XPoint {
        self.action.act(f, self.action.representative(orbit))
    }

    pub fn apply(&self, e: &WreathElement, label: WreathLabel) -> Option<WreathElement> {
        match label {
            WreathLabel::Base(s) if s.abs() == 1 => {
                let mut out = e.clone();
                out.cursor += s;
                Some(out)
            }
            WreathLabel::Lamp { orbit, step } => {
                if orbit >= self.action.orbits() || !self.lamp.generators().contains(&step) {
                    return None;
                }
                let x = self.lamp_position(e.cursor, orbit);
                let mut out = e.clone();
                self.set_lamp(&mut out, x, self.lamp.mul(e.lamps.get(&x).copied().unwrap_or(0), step));
                Some(out)
            }
            WreathLabel::Base(_) => None,
        }
    }

    fn set_lamp(&self, e: &mut WreathElement, x: XPoint, v: i64) {
        let v = self.lamp.reduce(v);
        if v == 0 {
            e.lamps.remove(&x);
        } else {
            e.lamps.insert(x, v);
        }
    }

    pub fn apply_word(&self, e: &WreathElement, word: &[WreathLabel]) -> Result<WreathElement> {
        word.iter().try_fold(e.clone(), |acc, l| {
            self.apply(&acc, *l).ok_or_else(|| Error::InvalidInput(format!("{l} is not a generator")))
        })
    }

    /// `(k1, f1)(k2, f2) = (k1 * f1.k2, f1 f2)`.
    pub fn mul(&self, a: &WreathElement, b: &WreathElement) -> WreathElement {
        let mut out = a.clone();
        for (&x, &v) in &b.lamps {
            let y = self.action.act(a.cursor, x);
            let cur = out.lamps.get(&y).copied().unwrap_or(0);
            self.set_lamp(&mut out, y, self.lamp.mul(cur, v));
        }
        out.cursor = a.cursor + b.cursor;
        out
    }

    pub fn inverse(&self, a: &WreathElement) -> WreathElement {
        let mut out = WreathElement { lamps: BTreeMap::new(), cursor: -a.cursor };
        for (&x, &v) in &a.lamps {
            self.set_lamp(&mut out, self.action.act(-a.cursor, x), self.lamp.inv(v));
        }
        out
    }

    /// Sum of lamp norms.
    pub fn lamp_cost(&self, e: &WreathElement) -> u64 {
        e.lamps.values().map(|&v| self.lamp.norm(v)).sum()
    }

    /// Word norm: lamp cost plus the shortest cursor walk from `0` that
    /// visits a cursor position for every lit lamp and ends at the cursor.
    pub fn norm(&self, e: &WreathElement) -> u64 {
        self.lamp_cost(e) + traversal::plan_walk(self, e).length
    }

    /// The closed-form norm restricted to the ordinary wreath product.
    pub fn exact_norm_zbase(&self, e: &WreathElement) -> Result<u64> {
        if self.action != BaseAction::Regular {
            return Err(Error::WrongBase);
        }
        Ok(self.norm(e))
    }

    /// Largest X-norm of a lit lamp; a lower bound for the word norm.
    pub fn lamp_lower_bound(&self, e: &WreathElement) -> u64 {
        e.lamps.keys().map(|&x| self.action.x_norm(x)).max().unwrap_or(0)
    }

    pub fn parse_label(&self, token: &str) -> Result<WreathLabel> {
        let (body, inv) = match token.strip_suffix("^-1") {
            Some(b) => (b, true),
            None => (token, false),
        };
        let sign = if inv { -1 } else { 1 };
        if body == "t" {
            return Ok(WreathLabel::Base(sign));
        }
        let orbit = match body.strip_prefix("h0") {
            Some("") => 0,
            Some(rest) => rest
                .strip_prefix('@')
                .and_then(|i| i.parse::<u8>().ok())
                .ok_or_else(|| Error::Parse(format!("bad lamp token {token:?}")))?,
            None => return Err(Error::Parse(format!("unknown token {token:?}"))),
        };
        if orbit >= self.action.orbits() {
            return Err(Error::Parse(format!("orbit {orbit} out of range in {token:?}")));
        }
        let step = self.lamp.reduce(sign);
        let step = if self.lamp.generators().contains(&step) { step } else { sign };
        Ok(WreathLabel::Lamp { orbit, step })
    }

    pub fn parse_word(&self, s: &str) -> Result<Vec<WreathLabel>> {
        s.split_whitespace().map(|t| self.parse_label(t)).collect()
    }

    pub fn element(&self, word: &str) -> Result<WreathElement> {
        self.apply_word(&WreathElement::identity(), &self.parse_word(word)?)
    }

    fn point_name(&self, x: XPoint) -> String {
        if self.action.orbits() > 1 {
            format!("{}/{}", x.orbit, x.pos)
        } else {
            x.pos.to_string()
        }
    }
}

impl MarkedSpace for Wreath {
    type Vertex = WreathElement;
    type Label = WreathLabel;

    fn basepoint(&self) -> WreathElement {
        WreathElement::identity()
    }

    fn neighbors(&self, v: &WreathElement) -> Vec<(WreathLabel, WreathElement)> {
        let mut labels = vec![WreathLabel::Base(1), WreathLabel::Base(-1)];
        for orbit in 0..self.action.orbits() {
            for step in self.lamp.generators() {
                labels.push(WreathLabel::Lamp { orbit, step });
            }
        }
        labels.into_iter().filter_map(|l| self.apply(v, l).map(|w| (l, w))).collect()
    }

    fn step(&self, v: &WreathElement, label: &WreathLabel) -> Option<WreathElement> {
        self.apply(v, *label)
    }

    fn degree_bound(&self) -> usize {
        2 + self.action.orbits() as usize * self.lamp.generators().len()
    }

    /// Sorted `position:value` lamp list followed by `@cursor`; positions
    /// are written `orbit/pos` when there are several orbits.
    fn canonical(&self, v: &WreathElement) -> String {
        let lamps: Vec<String> = v.lamps.iter().map(|(&x, &h)| format!("{}:{}", self.point_name(x), h)).collect();
        format!("[{}]@{}", lamps.join(","), v.cursor)
    }

    fn label_name(&self, label: &WreathLabel) -> String {
        label.to_string()
    }

    fn exact_norm(&self, v: &WreathElement) -> Option<u64> {
        Some(self.norm(v))
    }

    fn exact_distance(&self, u: &WreathElement, v: &WreathElement) -> Option<u64> {
        Some(self.norm(&self.mul(&self.inverse(u), v)))
    }

    fn certificate(&self, v: &WreathElement) -> u64 {
        self.lamp_lower_bound(v).max(v.cursor.unsigned_abs())
    }

    fn ray_tail_bound(&self, v: &WreathElement, step: &WreathLabel) -> Option<u64> {
        match *step {
            WreathLabel::Base(s) => {
                let cursor = if v.cursor == 0 || v.cursor.signum() == s { v.cursor.unsigned_abs() } else { 0 };
                Some(self.lamp_lower_bound(v).max(cursor))
            }
            WreathLabel::Lamp { .. } => None,
        }
    }
}
