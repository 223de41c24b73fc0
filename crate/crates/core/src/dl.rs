//! Diestel-Leader graphs `DL(p,q)`: horocyclic products of the trees of
//! degree `p+1` and `q+1`.
//!
//! A tree vertex is a height plus the digits on the edges entering each
//! level along the ray from the end `ω`. The parent of a vertex at height
//! `h` sits at `h-1`.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{MarkedSpace, Path, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "(i64, Vec<(i64, u8)>)", try_from = "(i64, Vec<(i64, u8)>)")]
pub struct TreeCoord {
    height: i64,
    /// Nonzero digits only, all at levels `<= height`.
    digits: BTreeMap<i64, u8>,
}

impl From<TreeCoord> for (i64, Vec<(i64, u8)>) {
    fn from(c: TreeCoord) -> Self {
        (c.height, c.digits.into_iter().collect())
    }
}

impl TryFrom<(i64, Vec<(i64, u8)>)> for TreeCoord {
    type Error = Error;

    fn try_from((height, pairs): (i64, Vec<(i64, u8)>)) -> Result<Self> {
        TreeCoord::new(height, pairs)
    }
}

impl TreeCoord {
    pub fn root() -> Self {
        TreeCoord { height: 0, digits: BTreeMap::new() }
    }

    pub fn new(height: i64, pairs: impl IntoIterator<Item = (i64, u8)>) -> Result<Self> {
        let mut digits = BTreeMap::new();
        for (level, d) in pairs {
            if level > height {
                return Err(Error::InvalidInput(format!("digit at level {level} above height {height}")));
            }
            if d != 0 {
                digits.insert(level, d);
            }
        }
        Ok(TreeCoord { height, digits })
    }

    /// Going up from the root `k` steps: height `-k`, all digits zero.
    pub fn ancestor_of_root(k: u64) -> Self {
        TreeCoord { height: -(k as i64), digits: BTreeMap::new() }
    }

    pub fn height(&self) -> i64 {
        self.height
    }

    pub fn digit(&self, level: i64) -> u8 {
        self.digits.get(&level).copied().unwrap_or(0)
    }

    pub fn digits(&self) -> &BTreeMap<i64, u8> {
        &self.digits
    }

    pub fn parent(&self) -> Self {
        let mut out = self.clone();
        out.digits.remove(&self.height);
        out.height -= 1;
        out
    }

    pub fn child(&self, d: u8) -> Self {
        let mut out = self.clone();
        out.height += 1;
        if d != 0 {
            out.digits.insert(out.height, d);
        }
        out
    }

    /// The ancestor at height `k <= height`.
    pub fn ancestor(&self, k: i64) -> Self {
        debug_assert!(k <= self.height);
        TreeCoord { height: k, digits: self.digits.range(..=k).map(|(&l, &d)| (l, d)).collect() }
    }

    /// Height of `x ⋏ y`.
    pub fn confluent_height(x: &Self, y: &Self) -> i64 {
        let top = x.height.min(y.height);
        let lowest_diff = x
            .digits
            .range(..=top)
            .chain(y.digits.range(..=top))
            .map(|(&l, _)| l)
            .filter(|&l| x.digit(l) != y.digit(l))
            .min();
        lowest_diff.map_or(top, |l| (l - 1).min(top))
    }

    pub fn confluent(x: &Self, y: &Self) -> Self {
        x.ancestor(Self::confluent_height(x, y))
    }

    pub fn dist(x: &Self, y: &Self) -> u64 {
        let c = Self::confluent_height(x, y);
        ((x.height - c) + (y.height - c)) as u64
    }

    /// Busemann function relative to the root, from its definition.
    pub fn busemann(&self) -> i64 {
        let c = Self::confluent_height(self, &Self::root());
        (self.height - c) - (0 - c)
    }

    pub fn norm(&self) -> u64 {
        Self::dist(self, &Self::root())
    }

    /// Representative of `(x, y)` under the automorphisms fixing the root
    /// and the end. Such an automorphism permutes the children of every
    /// vertex, except that a strict ancestor of the root keeps its child on
    /// the ray (digit 0). Children are renamed in order of first use, top
    /// level first, `x` before `y`.
    pub fn canonical_pair(x: &Self, y: &Self) -> (Self, Self) {
        let lowest = x.digits.keys().chain(y.digits.keys()).copied().min().unwrap_or(1).min(1);
        let highest = x.height.max(y.height);
        let (mut cx, mut cy) = (BTreeMap::new(), BTreeMap::new());
        let (mut same, mut zx, mut zy) = (true, true, true);
        for l in lowest..=highest {
            let dx = (l <= x.height).then(|| x.digit(l));
            let dy = (l <= y.height).then(|| y.digit(l));
            let name = |d: u8, fixed: bool, seen: &mut Vec<u8>| -> u8 {
                if fixed && d == 0 {
                    return 0;
                }
                let i = seen.iter().position(|&s| s == d).unwrap_or_else(|| {
                    seen.push(d);
                    seen.len() - 1
                });
                i as u8 + fixed as u8
            };
            let (nx, ny) = if same {
                let fixed = l <= 0 && zx;
                let mut seen = Vec::new();
                let nx = dx.map(|d| name(d, fixed, &mut seen));
                let ny = dy.map(|d| name(d, fixed, &mut seen));
                same = dx.is_some() && dx == dy;
                (nx, ny)
            } else {
                (dx.map(|d| name(d, l <= 0 && zx, &mut Vec::new())), dy.map(|d| name(d, l <= 0 && zy, &mut Vec::new())))
            };
            zx &= dx.is_none_or(|d| d == 0);
            zy &= dy.is_none_or(|d| d == 0);
            if let Some(d) = nx.filter(|&d| d != 0) {
                cx.insert(l, d);
            }
            if let Some(d) = ny.filter(|&d| d != 0) {
                cy.insert(l, d);
            }
        }
        (TreeCoord { height: x.height, digits: cx }, TreeCoord { height: y.height, digits: cy })
    }
}

impl fmt::Display for TreeCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.height)?;
        for (l, d) in &self.digits {
            write!(f, ";{l}:{d}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DLVertex {
    pub x1: TreeCoord,
    pub x2: TreeCoord,
}

impl DLVertex {
    pub fn new(x1: TreeCoord, x2: TreeCoord) -> Result<Self> {
        if x1.height + x2.height != 0 {
            return Err(Error::InvalidInput(format!("heights {} and {} do not sum to zero", x1.height, x2.height)));
        }
        Ok(DLVertex { x1, x2 })
    }

    pub fn level(&self) -> i64 {
        self.x2.height
    }
}

/// Up raises the level: `x1` to its parent, `x2` to child `d`.
/// Down lowers it: `x1` to child `d`, `x2` to its parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DLMove {
    Up(u8),
    Down(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiestelLeader {
    pub p: u8,
    pub q: u8,
}

impl DiestelLeader {
    pub fn new(p: u8, q: u8) -> Result<Self> {
        if p < 2 || q < 2 {
            return Err(Error::InvalidInput(format!("DL({p},{q}) needs p, q >= 2")));
        }
        Ok(DiestelLeader { p, q })
    }

    /// Eq (1).
    pub fn dist(&self, u: &DLVertex, v: &DLVertex) -> u64 {
        let dh = (v.x1.height - u.x1.height).unsigned_abs();
        TreeCoord::dist(&u.x1, &v.x1) + TreeCoord::dist(&u.x2, &v.x2) - dh
    }

    pub fn norm(&self, v: &DLVertex) -> u64 {
        self.dist(&self.basepoint(), v)
    }

    pub fn apply(&self, v: &DLVertex, m: DLMove) -> Option<DLVertex> {
        match m {
            DLMove::Up(d) if d < self.q => Some(DLVertex { x1: v.x1.parent(), x2: v.x2.child(d) }),
            DLMove::Down(d) if d < self.p => Some(DLVertex { x1: v.x1.child(d), x2: v.x2.parent() }),
            _ => None,
        }
    }

    pub fn parse_move(&self, s: &str) -> Result<DLMove> {
        let (kind, d) = s.split_at(s.find(|c: char| c.is_ascii_digit()).unwrap_or(s.len()));
        let d: u8 = d.parse().map_err(|_| Error::Parse(format!("bad DL move '{s}'")))?;
        let m = match kind {
            "u" | "up" => DLMove::Up(d),
            "d" | "down" => DLMove::Down(d),
            _ => return Err(Error::Parse(format!("bad DL move '{s}'"))),
        };
        self.apply(&self.basepoint(), m).ok_or_else(|| Error::Parse(format!("digit out of range in '{s}'")))?;
        Ok(m)
    }

    /// `a1 a2`: `n` up-steps from the root with digit 0 in the second tree.
    pub fn target(&self, n: u64) -> DLVertex {
        DLVertex { x1: TreeCoord::ancestor_of_root(n), x2: TreeCoord { height: n as i64, digits: BTreeMap::new() } }
    }

    pub fn witness_radius(n: u64) -> Rational {
        Ratio::new(n as i64, 2)
    }

    pub fn witness_length_bound(n: u64) -> u64 {
        6 * n
    }

    /// Path from `v` (norm `n`) to `a1 a2` avoiding `B(o, n/2)`.
    pub fn witness_path(&self, v: &DLVertex, n: u64) -> Result<Path<DLVertex, DLMove>> {
        let norm = self.norm(v);
        if norm != n {
            return Err(Error::InvalidInput(format!("vertex has norm {norm}, expected {n}")));
        }
        let a = self.target(n);
        if *v == a {
            return Ok(Path::new(a));
        }
        let ni = n as i64;
        let mut moves = Vec::new();
        let mut cur = v.clone();
        let go = |cur: &mut DLVertex, m: DLMove, moves: &mut Vec<DLMove>| {
            *cur = self.apply(cur, m).expect("valid move");
            moves.push(m);
        };

        if cur.level() < 0 {
            let base = cur.x2.norm();
            let d = (0..self.q)
                .find(|&d| cur.x2.child(d).norm() == base + 1)
                .ok_or_else(|| Error::Invariant("no norm-increasing child".into()))?;
            go(&mut cur, DLMove::Up(d), &mut moves);
        }
        while cur.level() < ni {
            go(&mut cur, DLMove::Up(0), &mut moves);
        }
        if cur.x1 != a.x1 {
            return Err(Error::Invariant("ascent did not reach a1".into()));
        }

        // From a1 z2 down to w1 o2, following the T2 path z2 -> o2.
        let w1_digit = |level: i64| u8::from(level == -ni + 1);
        let c = TreeCoord::confluent_height(&cur.x2, &TreeCoord::root());
        while cur.x2.height > c {
            let level = cur.x1.height + 1;
            go(&mut cur, DLMove::Down(w1_digit(level)), &mut moves);
        }
        while cur.x2.height < 0 {
            go(&mut cur, DLMove::Up(0), &mut moves);
        }
        // Back up to a1 a2 along the reversed descent.
        while cur.level() < ni {
            go(&mut cur, DLMove::Up(0), &mut moves);
        }
        let path = Path::from_labels(self, v.clone(), moves)?;
        if path.end() != &a {
            return Err(Error::Invariant("DL witness does not end at a1 a2".into()));
        }
        Ok(path)
    }
}

impl MarkedSpace for DiestelLeader {
    type Vertex = DLVertex;
    type Label = DLMove;

    fn basepoint(&self) -> DLVertex {
        DLVertex { x1: TreeCoord::root(), x2: TreeCoord::root() }
    }

    fn neighbors(&self, v: &DLVertex) -> Vec<(DLMove, DLVertex)> {
        let up = (0..self.q).map(DLMove::Up);
        let down = (0..self.p).map(DLMove::Down);
        up.chain(down).map(|m| (m, self.apply(v, m).expect("in range"))).collect()
    }

    fn step(&self, v: &DLVertex, label: &DLMove) -> Option<DLVertex> {
        self.apply(v, *label)
    }

    fn degree_bound(&self) -> usize {
        self.p as usize + self.q as usize
    }

    fn canonical(&self, v: &DLVertex) -> String {
        format!("({})({})", v.x1, v.x2)
    }

    fn label_name(&self, label: &DLMove) -> String {
        match label {
            DLMove::Up(d) => format!("u{d}"),
            DLMove::Down(d) => format!("d{d}"),
        }
    }

    fn exact_norm(&self, v: &DLVertex) -> Option<u64> {
        Some(self.norm(v))
    }

    fn exact_distance(&self, u: &DLVertex, v: &DLVertex) -> Option<u64> {
        Some(self.dist(u, v))
    }

    fn certificate(&self, v: &DLVertex) -> u64 {
        self.norm(v)
    }

    fn pair_representative(&self, a: &DLVertex, b: &DLVertex) -> Option<(DLVertex, DLVertex)> {
        let rep = |a: &DLVertex, b: &DLVertex| {
            let (a1, b1) = TreeCoord::canonical_pair(&a.x1, &b.x1);
            let (a2, b2) = TreeCoord::canonical_pair(&a.x2, &b.x2);
            (DLVertex { x1: a1, x2: a2 }, DLVertex { x1: b1, x2: b2 })
        };
        let (p, q) = (rep(a, b), rep(b, a));
        Some(if p <= (q.1.clone(), q.0.clone()) { p } else { (q.1, q.0) })
    }
}
