//! `H_2 = FSym(Z) ⋊ Z` as a tape with a cursor.
//!
//! The external domain `Z \ {0}` is relabeled internally by `x > 0 ↦ x-1`,
//! so `t` moves the cursor by `+1` and `a` swaps internal slots `-1, 0`.
//! The cursor at internal `c` sits between slots `c-1` and `c`.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::divergence::AvoidanceMode;
use crate::error::{Error, Result};
use crate::space::{self, Limits, MarkedSpace, Path, Rational, RaySpec};

/// Internal slot to external point.
pub fn external(i: i64) -> i64 {
    if i >= 0 {
        i + 1
    } else {
        i
    }
}

/// External point to internal slot.
pub fn internal(x: i64) -> Result<i64> {
    match x {
        0 => Err(Error::InvalidInput("0 is not a point of Z \\ {0}".into())),
        x if x > 0 => Ok(x - 1),
        x => Ok(x),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct H2Element {
    /// Slot -> token, only where they differ.
    pub tape: BTreeMap<i64, i64>,
    /// The t-level: cursor position in internal coordinates.
    pub shift: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum H2Label {
    T,
    TInv,
    A,
}

impl fmt::Display for H2Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            H2Label::T => "t",
            H2Label::TInv => "t^-1",
            H2Label::A => "a",
        })
    }
}

impl H2Element {
    pub fn identity() -> Self {
        H2Element { tape: BTreeMap::new(), shift: 0 }
    }

    pub fn token(&self, slot: i64) -> i64 {
        self.tape.get(&slot).copied().unwrap_or(slot)
    }

    fn set(&mut self, slot: i64, token: i64) {
        if slot == token {
            self.tape.remove(&slot);
        } else {
            self.tape.insert(slot, token);
        }
    }

    pub fn apply(&self, l: H2Label) -> Self {
        let mut out = self.clone();
        match l {
            H2Label::T => out.shift += 1,
            H2Label::TInv => out.shift -= 1,
            H2Label::A => {
                let (x, y) = (self.shift - 1, self.shift);
                out.set(x, self.token(y));
                out.set(y, self.token(x));
            }
        }
        out
    }

    pub fn apply_word(&self, word: &[H2Label]) -> Self {
        word.iter().fold(self.clone(), |e, &l| e.apply(l))
    }

    pub fn from_word(word: &[H2Label]) -> Self {
        Self::identity().apply_word(word)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        let s = self.shift;
        for (&i, &j) in &other.tape {
            out.set(i + s, self.token(j + s));
        }
        out.shift = s + other.shift;
        out
    }

    pub fn inverse(&self) -> Self {
        let s = self.shift;
        let mut out = H2Element { tape: BTreeMap::new(), shift: -s };
        for (&i, &j) in &self.tape {
            out.set(j - s, i - s);
        }
        out
    }

    pub fn t_level(&self) -> i64 {
        self.shift
    }

    /// External points moved by the permutation.
    pub fn moved_points(&self) -> impl Iterator<Item = i64> + '_ {
        self.tape.keys().map(|&i| external(i))
    }

    /// Largest `|q|` over moved external points `q`.
    pub fn disorder_lower_bound(&self) -> u64 {
        self.moved_points().map(i64::unsigned_abs).max().unwrap_or(0)
    }

    pub fn inversions(&self) -> u64 {
        let (Some(&lo), Some(&hi)) = (self.tape.keys().next(), self.tape.keys().next_back()) else {
            return 0;
        };
        let tokens: Vec<i64> = (lo..=hi).map(|i| self.token(i)).collect();
        let mut count = 0;
        for (i, a) in tokens.iter().enumerate() {
            count += tokens[i + 1..].iter().filter(|b| a > b).count() as u64;
        }
        count
    }

    /// Every `a` changes the inversion count by one and the cursor has to
    /// reach a swap position for the lowest and the highest moved slot.
    pub fn walk_lower_bound(&self) -> u64 {
        let e = self.shift;
        let (mut lo, mut hi) = (e.min(0), e.max(0));
        if let (Some(&a), Some(&b)) = (self.tape.keys().next(), self.tape.keys().next_back()) {
            lo = lo.min(a + 1);
            hi = hi.max(b);
        }
        ((hi - lo) + ((0 - lo) + (hi - e)).min(hi + (e - lo))) as u64
    }

    pub fn certificate(&self) -> u64 {
        self.disorder_lower_bound().max(self.inversions() + self.walk_lower_bound())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Houghton2;

impl Houghton2 {
    pub fn parse_label(s: &str) -> Result<H2Label> {
        match s {
            "t" => Ok(H2Label::T),
            "t^-1" | "T" => Ok(H2Label::TInv),
            "a" | "a^-1" => Ok(H2Label::A),
            _ => Err(Error::Parse(format!("bad H2 token '{s}'"))),
        }
    }

    pub fn parse_word(s: &str) -> Result<Vec<H2Label>> {
        s.split_whitespace().map(Self::parse_label).collect()
    }

    pub fn inverse_word(word: &[H2Label]) -> Vec<H2Label> {
        word.iter()
            .rev()
            .map(|l| match l {
                H2Label::T => H2Label::TInv,
                H2Label::TInv => H2Label::T,
                H2Label::A => H2Label::A,
            })
            .collect()
    }

    /// `t^k` as labels.
    pub fn t_power(k: i64) -> Vec<H2Label> {
        let l = if k >= 0 { H2Label::T } else { H2Label::TInv };
        vec![l; k.unsigned_abs() as usize]
    }

    pub fn target(n: u64) -> H2Element {
        let mut w = Self::t_power(n as i64 - 1);
        w.push(H2Label::A);
        H2Element::from_word(&w)
    }

    pub fn witness_radius(n: u64) -> Rational {
        Ratio::new(n as i64, 2)
    }

    pub fn witness_length_bound(n: u64) -> u64 {
        18 * n
    }

    /// Path from `g = word` (a geodesic word of length `n`) to `t^{n-1} a`:
    /// `t^k a t^{-k} w^{-1} t^{n-1} a t^{-(n-1)+k+l} a t^{-k-l} t^{n-1}`
    /// with `k = +-3n` along a ray that stays outside `B(1, n/2)`.
    pub fn witness_path(
        &self,
        word: &[H2Label],
        mode: AvoidanceMode,
        limits: Limits,
    ) -> Result<(i64, Path<H2Element, H2Label>)> {
        let n = word.len() as u64;
        if n == 0 {
            return Err(Error::InvalidInput("witness needs n >= 1".into()));
        }
        let g = H2Element::from_word(word);
        let radius = Self::witness_radius(n);
        let rays = [RaySpec { prefix: vec![], step: H2Label::T }, RaySpec { prefix: vec![], step: H2Label::TInv }];
        let dir = match mode {
            AvoidanceMode::Auto => {
                space::select_escaping_ray_from(self, &g, &rays, &self.basepoint(), radius, 3 * n, limits)?
            }
            AvoidanceMode::CertificateOnly => space::select_certified_ray(self, &g, &rays, radius, 3 * n)?,
        };
        let k = dir.sign() * 3 * n as i64;
        let l = g.t_level();
        let m = n as i64 - 1;
        let mut labels = Self::t_power(k);
        labels.push(H2Label::A);
        labels.extend(Self::t_power(-k));
        labels.extend(Self::inverse_word(word));
        labels.extend(Self::t_power(m));
        labels.push(H2Label::A);
        labels.extend(Self::t_power(-m + k + l));
        labels.push(H2Label::A);
        labels.extend(Self::t_power(-k - l));
        labels.extend(Self::t_power(m));
        let path = Path::from_labels(self, g, labels)?;
        if *path.end() != Self::target(n) {
            return Err(Error::Invariant("H2 witness does not end at t^(n-1) a".into()));
        }
        Ok((k, path))
    }
}

impl MarkedSpace for Houghton2 {
    type Vertex = H2Element;
    type Label = H2Label;

    fn basepoint(&self) -> H2Element {
        H2Element::identity()
    }

    fn neighbors(&self, v: &H2Element) -> Vec<(H2Label, H2Element)> {
        [H2Label::T, H2Label::TInv, H2Label::A].into_iter().map(|l| (l, v.apply(l))).collect()
    }

    fn step(&self, v: &H2Element, label: &H2Label) -> Option<H2Element> {
        Some(v.apply(*label))
    }

    fn degree_bound(&self) -> usize {
        3
    }

    /// External moved points `q>image` (image = token at `q`), then `@t-level`.
    fn canonical(&self, v: &H2Element) -> String {
        let parts: Vec<String> = v.tape.iter().map(|(&i, &j)| format!("{}>{}", external(i), external(j))).collect();
        format!("[{}]@{}", parts.join(","), v.shift)
    }

    fn label_name(&self, label: &H2Label) -> String {
        label.to_string()
    }

    fn certificate(&self, v: &H2Element) -> u64 {
        v.certificate()
    }

    /// The moved points never change along `t`-rays and `|t-level|` only
    /// grows once it has the sign of the step.
    fn ray_tail_bound(&self, v: &H2Element, step: &H2Label) -> Option<u64> {
        let s = match step {
            H2Label::T => 1,
            H2Label::TInv => -1,
            H2Label::A => return None,
        };
        let level = if v.shift == 0 || v.shift.signum() == s { v.shift.unsigned_abs() } else { 0 };
        Some(v.disorder_lower_bound().max(level))
    }
}
