//! Baumslag-Solitar groups `BS(p,q) = <a, t | t a^p t^-1 = a^q>`.
//!
//! Elements are kept in Britton normal form
//! `a^{r0} t^{e1} a^{r1} ... t^{el} a^{rl}` where the exponent after `t` is
//! in `[0,p)`, after `t^-1` in `[0,q)`, and `r0` is free. Multiples of `p`
//! (resp. `q`) are pushed to the left using `t a^p = a^q t` and
//! `t^-1 a^q = a^p t^-1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::divergence::AvoidanceMode;
use crate::error::{Error, Result};
use crate::space::{self, Limits, MarkedSpace, Path, Rational, RaySpec};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "Vec<i128>", try_from = "Vec<i128>")]
pub struct BSElement {
    pub head: i128,
    /// `(t exponent, following a exponent)`.
    pub syllables: Vec<(i8, i128)>,
}

impl From<BSElement> for Vec<i128> {
    fn from(e: BSElement) -> Self {
        let mut out = vec![e.head];
        for (eps, r) in e.syllables {
            out.push(eps as i128);
            out.push(r);
        }
        out
    }
}

impl TryFrom<Vec<i128>> for BSElement {
    type Error = Error;

    fn try_from(v: Vec<i128>) -> Result<Self> {
        if v.len().is_multiple_of(2) {
            return Err(Error::Parse("normal form needs an odd number of entries".into()));
        }
        let syllables = v[1..]
            .chunks(2)
            .map(|c| match c[0] {
                1 | -1 => Ok((c[0] as i8, c[1])),
                e => Err(Error::Parse(format!("t exponent {e} is not +-1"))),
            })
            .collect::<Result<_>>()?;
        Ok(BSElement { head: v[0], syllables })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BSLabel {
    A,
    AInv,
    T,
    TInv,
}

impl BSLabel {
    pub fn inverse(self) -> Self {
        match self {
            BSLabel::A => BSLabel::AInv,
            BSLabel::AInv => BSLabel::A,
            BSLabel::T => BSLabel::TInv,
            BSLabel::TInv => BSLabel::T,
        }
    }
}

impl fmt::Display for BSLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BSLabel::A => "a",
            BSLabel::AInv => "a^-1",
            BSLabel::T => "t",
            BSLabel::TInv => "t^-1",
        })
    }
}

/// Exact `num / 2^pow`, normalized so `num` is odd or `pow = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    pub num: i128,
    pub pow: u32,
}

impl Dyadic {
    fn normalized(mut num: i128, mut pow: u32) -> Self {
        if num == 0 {
            return Dyadic { num: 0, pow: 0 };
        }
        while pow > 0 && num % 2 == 0 {
            num /= 2;
            pow -= 1;
        }
        Dyadic { num, pow }
    }

    pub fn integer(n: i128) -> Self {
        Dyadic { num: n, pow: 0 }
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    /// `floor(log2 |x|)`, `None` for zero.
    pub fn floor_log2_abs(&self) -> Option<i64> {
        (self.num != 0).then(|| (127 - self.num.unsigned_abs().leading_zeros()) as i64 - self.pow as i64)
    }

    /// `|x| >= 2^e`.
    pub fn abs_at_least_pow2(&self, e: i64) -> bool {
        self.floor_log2_abs().is_some_and(|l| l >= e)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pow == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.pow)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BSLevels {
    pub t_level: i64,
    /// Only for `BS(2,4)`.
    pub a_level: Option<Dyadic>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BaumslagSolitar {
    pub p: u32,
    pub q: u32,
}

fn overflow() -> Error {
    Error::Overflow("Baumslag-Solitar exponent")
}

impl BaumslagSolitar {
    pub fn new(p: u32, q: u32) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidInput(format!("BS({p},{q}) needs p, q >= 1")));
        }
        Ok(BaumslagSolitar { p, q })
    }

    pub fn bs24() -> Self {
        BaumslagSolitar { p: 2, q: 4 }
    }

    pub fn is_bs24(&self) -> bool {
        (self.p, self.q) == (2, 4)
    }

    pub fn identity() -> BSElement {
        BSElement { head: 0, syllables: Vec::new() }
    }

    /// Normalize syllable `i` (and carry leftward).
    fn settle(&self, e: &mut BSElement, mut i: usize) -> Result<()> {
        while i > 0 {
            let (eps, r) = e.syllables[i - 1];
            let (m, to) = if eps > 0 { (self.p, self.q) } else { (self.q, self.p) };
            let (m, to) = (m as i128, to as i128);
            let carry = r.div_euclid(m);
            if carry == 0 {
                return Ok(());
            }
            e.syllables[i - 1].1 = r.rem_euclid(m);
            let add = carry.checked_mul(to).ok_or_else(overflow)?;
            if i == 1 {
                e.head = e.head.checked_add(add).ok_or_else(overflow)?;
            } else {
                let prev = &mut e.syllables[i - 2].1;
                *prev = prev.checked_add(add).ok_or_else(overflow)?;
            }
            i -= 1;
        }
        Ok(())
    }

    pub fn mul_a(&self, e: &BSElement, k: i128) -> Result<BSElement> {
        let mut out = e.clone();
        match out.syllables.last_mut() {
            None => out.head = out.head.checked_add(k).ok_or_else(overflow)?,
            Some(last) => last.1 = last.1.checked_add(k).ok_or_else(overflow)?,
        }
        let n = out.syllables.len();
        self.settle(&mut out, n)?;
        Ok(out)
    }

    pub fn mul_t(&self, e: &BSElement, eps: i8) -> BSElement {
        let mut out = e.clone();
        match out.syllables.last() {
            Some(&(prev, 0)) if prev == -eps => {
                out.syllables.pop();
            }
            _ => out.syllables.push((eps, 0)),
        }
        out
    }

    pub fn apply(&self, e: &BSElement, l: BSLabel) -> Result<BSElement> {
        match l {
            BSLabel::A => self.mul_a(e, 1),
            BSLabel::AInv => self.mul_a(e, -1),
            BSLabel::T => Ok(self.mul_t(e, 1)),
            BSLabel::TInv => Ok(self.mul_t(e, -1)),
        }
    }

    /// Britton reduction of a word.
    pub fn reduce(&self, word: &[BSLabel]) -> Result<BSElement> {
        word.iter().try_fold(Self::identity(), |e, &l| self.apply(&e, l))
    }

    /// The normal form written back as a word (with powers expanded).
    pub fn normal_form_word(e: &BSElement) -> Vec<BSLabel> {
        let mut out = Self::a_power(e.head);
        for &(eps, r) in &e.syllables {
            out.push(if eps > 0 { BSLabel::T } else { BSLabel::TInv });
            out.extend(Self::a_power(r));
        }
        out
    }

    pub fn a_power(k: i128) -> Vec<BSLabel> {
        let l = if k >= 0 { BSLabel::A } else { BSLabel::AInv };
        vec![l; k.unsigned_abs() as usize]
    }

    pub fn t_power(k: i64) -> Vec<BSLabel> {
        let l = if k >= 0 { BSLabel::T } else { BSLabel::TInv };
        vec![l; k.unsigned_abs() as usize]
    }

    pub fn mul(&self, x: &BSElement, y: &BSElement) -> Result<BSElement> {
        let mut out = self.mul_a(x, y.head)?;
        for &(eps, r) in &y.syllables {
            out = self.mul_t(&out, eps);
            out = self.mul_a(&out, r)?;
        }
        Ok(out)
    }

    pub fn inverse(&self, x: &BSElement) -> Result<BSElement> {
        let mut out = Self::identity();
        for &(eps, r) in x.syllables.iter().rev() {
            out = self.mul_a(&out, -r)?;
            out = self.mul_t(&out, -eps);
        }
        self.mul_a(&out, -x.head)
    }

    pub fn t_level(e: &BSElement) -> i64 {
        e.syllables.iter().map(|s| s.0 as i64).sum()
    }

    /// `k = r0 + r1 2^{e1} + r2 2^{e1+e2} + ...`.
    pub fn a_level(&self, e: &BSElement) -> Result<Dyadic> {
        if !self.is_bs24() {
            return Err(Error::UnsupportedParams(format!(
                "a-level is defined for BS(2,4), not BS({},{})",
                self.p, self.q
            )));
        }
        let mut terms = vec![(e.head, 0i64)];
        let mut s = 0i64;
        for &(eps, r) in &e.syllables {
            s += eps as i64;
            terms.push((r, s));
        }
        let pow = terms.iter().map(|&(_, s)| (-s).max(0)).max().unwrap_or(0) as u32;
        let mut num: i128 = 0;
        for (r, s) in terms {
            let shift = (s + pow as i64) as u32;
            let scaled = if shift >= 127 {
                if r == 0 {
                    0
                } else {
                    return Err(overflow());
                }
            } else {
                r.checked_mul(1i128 << shift).ok_or_else(overflow)?
            };
            num = num.checked_add(scaled).ok_or_else(overflow)?;
        }
        Ok(Dyadic::normalized(num, pow))
    }

    pub fn levels(&self, e: &BSElement) -> Result<BSLevels> {
        Ok(BSLevels { t_level: Self::t_level(e), a_level: if self.is_bs24() { Some(self.a_level(e)?) } else { None } })
    }

    /// `max(floor(log2|k|) + 1, |l|)`, from `|k| <= 2^{m-1}` when `||h|| <= m`.
    pub fn alevel_certificate(&self, e: &BSElement) -> u64 {
        let tl = Self::t_level(e).unsigned_abs();
        let al = match self.a_level(e) {
            Ok(k) => k.floor_log2_abs().map_or(0, |l| (l + 1).max(0) as u64),
            Err(_) => 0,
        };
        tl.max(al)
    }

    pub fn parse_word(s: &str) -> Result<Vec<BSLabel>> {
        let mut out = Vec::new();
        for tok in s.split_whitespace() {
            let (base, exp) = match tok.split_once('^') {
                Some((b, e)) => (b, e.parse::<i64>().map_err(|_| Error::Parse(format!("bad exponent in '{tok}'")))?),
                None => (tok, 1),
            };
            let (pos, neg) = match base {
                "a" => (BSLabel::A, BSLabel::AInv),
                "t" => (BSLabel::T, BSLabel::TInv),
                _ => return Err(Error::Parse(format!("bad BS token '{tok}'"))),
            };
            let l = if exp >= 0 { pos } else { neg };
            out.extend(std::iter::repeat_n(l, exp.unsigned_abs() as usize));
        }
        Ok(out)
    }

    pub fn inverse_word(word: &[BSLabel]) -> Vec<BSLabel> {
        word.iter().rev().map(|l| l.inverse()).collect()
    }

    /// `t^{2n} a^2 t^{-2n} = a^{2^{2n+1}}`.
    pub fn target(&self, n: u64) -> Result<BSElement> {
        let mut w = Self::t_power(2 * n as i64);
        w.extend([BSLabel::A, BSLabel::A]);
        w.extend(Self::t_power(-2 * n as i64));
        self.reduce(&w)
    }
}

/// Output of the `BS(2,4)` witness construction.
#[derive(Debug, Clone)]
pub struct BSWitness {
    /// `n` with `||g|| = 2n` (rounded up for odd norms).
    pub n: u64,
    /// Avoided radius: `floor(||g|| / 2)`.
    pub radius: u64,
    pub t_level: i64,
    pub negative_branch: bool,
    /// `+1` for the ray `g a t^m`, `-1` for `g a^-1 t^m`.
    pub ray_sign: i8,
    pub path: Path<BSElement, BSLabel>,
}

impl BSWitness {
    /// `6n - 2l + 4`, plus the `4n + 4` bridge on the negative branch.
    pub fn predicted_length(&self) -> i64 {
        let base = 6 * self.n as i64 - 2 * self.t_level + 4;
        if self.negative_branch {
            base + 4 * self.n as i64 + 4
        } else {
            base
        }
    }
}

impl BaumslagSolitar {
    /// From `g = word` (a shortest word) to `t^{2n} a^2 t^{-2n}` outside
    /// `B(1, n)`.
    pub fn witness_path(&self, word: &[BSLabel], mode: AvoidanceMode, limits: Limits) -> Result<BSWitness> {
        if !self.is_bs24() {
            return Err(Error::UnsupportedParams("the witness construction is for BS(2,4)".into()));
        }
        let norm = word.len() as u64;
        if norm == 0 {
            return Err(Error::InvalidInput("witness needs a nontrivial element".into()));
        }
        let n = norm.div_ceil(2);
        let radius = norm / 2;
        let g = self.reduce(word)?;
        let l = Self::t_level(&g);
        let negative = self.a_level(&g)?.is_negative();
        let r = Rational::from_integer(radius as i64);
        let rays = [
            RaySpec { prefix: vec![BSLabel::A], step: BSLabel::T },
            RaySpec { prefix: vec![BSLabel::AInv], step: BSLabel::T },
        ];
        let steps = (2 * n as i64 - l).max(0) as u64;
        let dir = match mode {
            AvoidanceMode::Auto => {
                space::select_escaping_ray_from(self, &g, &rays, &self.basepoint(), r, steps, limits)?
            }
            AvoidanceMode::CertificateOnly => space::select_certified_ray(self, &g, &rays, r, steps + 1)?,
        };
        let sign = dir.sign() as i8;
        let (up, down) = if sign > 0 { (BSLabel::A, BSLabel::AInv) } else { (BSLabel::AInv, BSLabel::A) };
        let lift = if negative { BSLabel::AInv } else { BSLabel::A };
        let j = 2 * n as i64 - l;
        let mut labels = vec![up];
        labels.extend(Self::t_power(j));
        labels.extend([lift, lift]);
        labels.extend(Self::t_power(-j));
        labels.push(down);
        let p3_start = 1 + j as usize + 2;
        labels.extend(Self::inverse_word(word));
        if negative {
            labels.extend(Self::t_power(2 * n as i64));
            labels.extend(Self::a_power(4));
            labels.extend(Self::t_power(-2 * n as i64));
        }
        let path = Path::from_labels(self, g, labels)?;
        for v in &path.vertices[p3_start..=p3_start + j as usize] {
            if !self.a_level(v)?.abs_at_least_pow2(2 * n as i64) {
                return Err(Error::Invariant("p3 vertex with |a-level| below 2^(2n)".into()));
            }
        }
        if *path.end() != self.target(n)? {
            return Err(Error::Invariant("BS witness does not end at t^(2n) a^2 t^(-2n)".into()));
        }
        Ok(BSWitness { n, radius, t_level: l, negative_branch: negative, ray_sign: sign, path })
    }
}

impl MarkedSpace for BaumslagSolitar {
    type Vertex = BSElement;
    type Label = BSLabel;

    fn basepoint(&self) -> BSElement {
        Self::identity()
    }

    fn neighbors(&self, v: &BSElement) -> Vec<(BSLabel, BSElement)> {
        [BSLabel::A, BSLabel::AInv, BSLabel::T, BSLabel::TInv]
            .into_iter()
            .map(|l| (l, self.apply(v, l).expect("exponent overflow during BFS")))
            .collect()
    }

    fn step(&self, v: &BSElement, label: &BSLabel) -> Option<BSElement> {
        self.apply(v, *label).ok()
    }

    fn degree_bound(&self) -> usize {
        4
    }

    /// `a^r0 t^e1 a^r1 ...` with zero powers of `a` omitted.
    fn canonical(&self, v: &BSElement) -> String {
        let mut parts = Vec::new();
        if v.head != 0 {
            parts.push(format!("a^{}", v.head));
        }
        for &(eps, r) in &v.syllables {
            parts.push(format!("t^{eps}"));
            if r != 0 {
                parts.push(format!("a^{r}"));
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" ")
        }
    }

    fn label_name(&self, label: &BSLabel) -> String {
        label.to_string()
    }

    fn certificate(&self, v: &BSElement) -> u64 {
        self.alevel_certificate(v)
    }

    /// The a-level is unchanged along `t`-rays and `|t-level|` only grows
    /// once it has the sign of the step.
    fn ray_tail_bound(&self, v: &BSElement, step: &BSLabel) -> Option<u64> {
        let s = match step {
            BSLabel::T => 1,
            BSLabel::TInv => -1,
            _ => return None,
        };
        let l = Self::t_level(v);
        let level = if l == 0 || l.signum() == s { l.unsigned_abs() } else { 0 };
        Some(self.alevel_certificate(v).max(level))
    }
}
