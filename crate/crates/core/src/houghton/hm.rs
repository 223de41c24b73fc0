//! `H_m` for `m >= 3`, generated by `g_1..g_{m-1}` where `g_i` translates
//! the union of rays `i` and `i+1` (toward ray `i+1`).
//!
//! Elements act on the right: `x·(gh) = (x·g)·h`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::divergence::AvoidanceMode;
use crate::error::{Error, Result};
use crate::space::{self, Limits, MarkedSpace, Path, Rational, RaySpec};

/// `(ray, depth)`, both from 1.
pub type Point = (u8, u64);

/// Constant in the exception-depth lower bound `depth - c_m`.
pub const HM_CALIBRATION: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HmElement {
    /// Eventual translation amount on each ray; sums to zero.
    pub offsets: Vec<i64>,
    /// Points whose image is not `(i, k + e_i)`.
    pub exceptions: BTreeMap<Point, Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HmLabel {
    /// `1..m-1`.
    pub gen: u8,
    pub inv: bool,
}

impl HmLabel {
    pub fn inverse(self) -> Self {
        HmLabel { gen: self.gen, inv: !self.inv }
    }
}

impl fmt::Display for HmLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}{}", self.gen, if self.inv { "^-1" } else { "" })
    }
}

impl HmElement {
    pub fn identity(m: u8) -> Self {
        HmElement { offsets: vec![0; m as usize], exceptions: BTreeMap::new() }
    }

    pub fn m(&self) -> u8 {
        self.offsets.len() as u8
    }

    fn default_image(&self, (i, k): Point) -> Option<Point> {
        let d = k as i64 + self.offsets[i as usize - 1];
        (d >= 1).then_some((i, d as u64))
    }

    pub fn eval(&self, x: Point) -> Point {
        match self.exceptions.get(&x) {
            Some(&y) => y,
            None => self.default_image(x).expect("non-exceptional points have a default image"),
        }
    }

    pub fn max_exception_depth(&self) -> u64 {
        self.exceptions.keys().map(|p| p.1).max().unwrap_or(0)
    }

    pub fn max_offset(&self) -> u64 {
        self.offsets.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0)
    }

    fn from_fn(offsets: Vec<i64>, window: u64, f: impl Fn(Point) -> Point) -> Self {
        let mut out = HmElement { offsets, exceptions: BTreeMap::new() };
        for i in 1..=out.m() {
            for k in 1..=window {
                let y = f((i, k));
                if out.default_image((i, k)) != Some(y) {
                    out.exceptions.insert((i, k), y);
                }
            }
        }
        out
    }

    pub fn generator(m: u8, i: u8) -> Self {
        let mut g = Self::identity(m);
        g.offsets[i as usize - 1] = -1;
        g.offsets[i as usize] = 1;
        g.exceptions.insert((i, 1), (i + 1, 1));
        g
    }

    pub fn mul(&self, other: &Self) -> Self {
        let offsets = self.offsets.iter().zip(&other.offsets).map(|(a, b)| a + b).collect();
        let window = self.max_exception_depth().max(other.max_exception_depth() + self.max_offset()) + 1;
        Self::from_fn(offsets, window, |x| other.eval(self.eval(x)))
    }

    pub fn inverse(&self) -> Self {
        let e = self.max_offset();
        let window = self.max_exception_depth() + e + 1;
        let mut pre = HashMap::new();
        for i in 1..=self.m() {
            for k in 1..=window + e {
                pre.insert(self.eval((i, k)), (i, k));
            }
        }
        let offsets = self.offsets.iter().map(|x| -x).collect();
        Self::from_fn(offsets, window, |y| pre[&y])
    }

    pub fn apply(&self, l: HmLabel) -> Self {
        let g = Self::generator(self.m(), l.gen);
        self.mul(&if l.inv { g.inverse() } else { g })
    }

    pub fn from_word(m: u8, word: &[HmLabel]) -> Self {
        word.iter().fold(Self::identity(m), |e, &l| e.apply(l))
    }

    /// Injective on the window and onto its shallower part.
    pub fn is_bijective_on_window(&self) -> bool {
        let e = self.max_offset();
        let w = self.max_exception_depth() + e + 1;
        let mut seen = HashMap::new();
        for i in 1..=self.m() {
            for k in 1..=w + e {
                if seen.insert(self.eval((i, k)), (i, k)).is_some() {
                    return false;
                }
            }
        }
        let sum: i64 = self.offsets.iter().sum();
        sum == 0 && (1..=self.m()).all(|i| (1..=w).all(|k| seen.contains_key(&(i, k))))
    }

    /// `max exception depth - c_m`, floored at 0.
    pub fn disorder_lower_bound(&self) -> u64 {
        self.max_exception_depth().saturating_sub(HM_CALIBRATION)
    }

    /// Each generator changes `Σ|e_i|` by at most 2, and a point deeper
    /// than the word length is only ever translated.
    pub fn certificate(&self) -> u64 {
        let total: u64 = self.offsets.iter().map(|e| e.unsigned_abs()).sum();
        self.max_exception_depth().max(total.div_ceil(2))
    }

    /// The amount `g_i` contributes to `e_i` is `-1`; the exponent sum of
    /// `g_i` in any word is recovered from the offsets of rays `1..=i`.
    pub fn exponent_sum(&self, i: u8) -> i64 {
        -self.offsets[..i as usize].iter().sum::<i64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HoughtonM {
    pub m: u8,
}

/// Output of the `H_m` witness construction.
#[derive(Debug, Clone)]
pub struct HmWitness {
    pub k: i64,
    /// Ray (1 or 2) and depth `y` of the far transposition `((r,y),(r,y+1))`.
    pub far: (u8, u64),
    pub path: Path<HmElement, HmLabel>,
}

impl HoughtonM {
    pub fn new(m: u8) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidInput(format!("H_m with generators g_i needs m >= 3, got {m}")));
        }
        Ok(HoughtonM { m })
    }

    pub fn parse_label(&self, s: &str) -> Result<HmLabel> {
        let (body, inv) = match s.strip_suffix("^-1") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let gen: u8 = body
            .strip_prefix('g')
            .and_then(|d| d.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad H_m token '{s}'")))?;
        if gen == 0 || gen >= self.m {
            return Err(Error::Parse(format!("generator index out of range in '{s}'")));
        }
        Ok(HmLabel { gen, inv })
    }

    pub fn parse_word(&self, s: &str) -> Result<Vec<HmLabel>> {
        s.split_whitespace().map(|t| self.parse_label(t)).collect()
    }

    pub fn inverse_word(word: &[HmLabel]) -> Vec<HmLabel> {
        word.iter().rev().map(|l| l.inverse()).collect()
    }

    pub fn g1_power(k: i64) -> Vec<HmLabel> {
        vec![HmLabel { gen: 1, inv: k < 0 }; k.unsigned_abs() as usize]
    }

    /// `[g_1, g_2] = g_1 g_2 g_1^-1 g_2^-1`.
    pub fn commutator() -> Vec<HmLabel> {
        let (a, b) = (HmLabel { gen: 1, inv: false }, HmLabel { gen: 2, inv: false });
        vec![a, b, a.inverse(), b.inverse()]
    }

    /// `g_1^j [g_1,g_2] g_1^-j`.
    pub fn conjugated_commutator(j: i64) -> Vec<HmLabel> {
        let mut w = Self::g1_power(j);
        w.extend(Self::commutator());
        w.extend(Self::g1_power(-j));
        w
    }

    pub fn element(&self, word: &[HmLabel]) -> HmElement {
        HmElement::from_word(self.m, word)
    }

    pub fn target(&self, n: u64) -> HmElement {
        let mut w = Self::g1_power(n as i64 - 4);
        w.extend(Self::commutator());
        self.element(&w)
    }

    pub fn witness_radius(n: u64) -> Rational {
        Ratio::new(n as i64, 2)
    }

    pub fn witness_length_bound(n: u64) -> u64 {
        18 * n
    }

    /// Path from `g = word` (geodesic, length `n >= 5`) to `g_1^{n-4}[g_1,g_2]`.
    pub fn witness_path(&self, word: &[HmLabel], mode: AvoidanceMode, limits: Limits) -> Result<HmWitness> {
        let n = word.len() as u64;
        if n < 5 {
            return Err(Error::InvalidInput(format!("H_m witness needs n >= 5, got {n}")));
        }
        let g = self.element(word);
        let radius = Self::witness_radius(n);
        let g1 = HmLabel { gen: 1, inv: false };
        let rays = [RaySpec { prefix: vec![], step: g1 }, RaySpec { prefix: vec![], step: g1.inverse() }];
        let dir = match mode {
            AvoidanceMode::Auto => {
                space::select_escaping_ray_from(self, &g, &rays, &self.basepoint(), radius, 3 * n, limits)?
            }
            AvoidanceMode::CertificateOnly => space::select_certified_ray(self, &g, &rays, radius, 3 * n)?,
        };
        let k = dir.sign() * 3 * n as i64;
        let mut labels = Self::conjugated_commutator(k);
        labels.extend(Self::inverse_word(word));
        let far_elem = g.mul(&self.element(&labels));
        let far = far_transposition(&far_elem)
            .ok_or_else(|| Error::Invariant("expected a single adjacent transposition on ray 1 or 2".into()))?;
        let j = if far.0 == 1 { far.1 as i64 } else { -(far.1 as i64) };
        let m4 = n as i64 - 4;
        labels.extend(Self::conjugated_commutator(m4));
        labels.extend(Self::conjugated_commutator(j));
        labels.extend(Self::g1_power(m4));
        let path = Path::from_labels(self, g, labels)?;
        if *path.end() != self.target(n) {
            return Err(Error::Invariant("H_m witness does not end at g1^(n-4)[g1,g2]".into()));
        }
        Ok(HmWitness { k, far, path })
    }
}

/// `((r,y),(r,y+1))` for `r` in `{1,2}` if `e` is exactly that.
pub fn far_transposition(e: &HmElement) -> Option<(u8, u64)> {
    if e.offsets.iter().any(|&x| x != 0) || e.exceptions.len() != 2 {
        return None;
    }
    let (&(r, y), &img) = e.exceptions.iter().next()?;
    (matches!(r, 1 | 2) && img == (r, y + 1) && e.exceptions.get(&(r, y + 1)) == Some(&(r, y))).then_some((r, y))
}

impl MarkedSpace for HoughtonM {
    type Vertex = HmElement;
    type Label = HmLabel;

    fn basepoint(&self) -> HmElement {
        HmElement::identity(self.m)
    }

    fn neighbors(&self, v: &HmElement) -> Vec<(HmLabel, HmElement)> {
        (1..self.m).flat_map(|gen| [false, true].map(|inv| HmLabel { gen, inv })).map(|l| (l, v.apply(l))).collect()
    }

    fn step(&self, v: &HmElement, label: &HmLabel) -> Option<HmElement> {
        (label.gen >= 1 && label.gen < self.m).then(|| v.apply(*label))
    }

    fn degree_bound(&self) -> usize {
        2 * (self.m as usize - 1)
    }

    fn canonical(&self, v: &HmElement) -> String {
        let offs: Vec<String> = v.offsets.iter().map(|e| e.to_string()).collect();
        let exc: Vec<String> = v.exceptions.iter().map(|((i, k), (j, l))| format!("({i},{k})>({j},{l})")).collect();
        format!("e=({});[{}]", offs.join(","), exc.join(","))
    }

    fn label_name(&self, label: &HmLabel) -> String {
        label.to_string()
    }

    fn certificate(&self, v: &HmElement) -> u64 {
        v.certificate()
    }

    fn ray_tail_bound(&self, v: &HmElement, step: &HmLabel) -> Option<u64> {
        if step.gen != 1 {
            return None;
        }
        let s = if step.inv { -1 } else { 1 };
        let growing = s * v.offsets[0] <= 0 && s * v.offsets[1] >= 0;
        growing.then(|| v.offsets.iter().map(|e| e.unsigned_abs()).sum::<u64>().div_ceil(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::verify_witness;
    use crate::space::{ball, Metric};
    use proptest::prelude::*;

    fn h3() -> HoughtonM {
        HoughtonM::new(3).unwrap()
    }

    #[test]
    fn commutator_is_transposition() {
        let c = h3().element(&HoughtonM::commutator());
        assert_eq!(c.offsets, vec![0, 0, 0]);
        let ex: Vec<_> = c.exceptions.iter().map(|(a, b)| (*a, *b)).collect();
        assert_eq!(ex, vec![((1, 1), (2, 1)), ((2, 1), (1, 1))]);
        for m in 4..=5 {
            let c = HoughtonM::new(m).unwrap().element(&HoughtonM::commutator());
            assert_eq!(c.exceptions.len(), 2);
        }
    }

    #[test]
    fn generator_action() {
        let g = HmElement::generator(3, 1);
        assert_eq!(g.eval((1, 3)), (1, 2));
        assert_eq!(g.eval((1, 1)), (2, 1));
        assert_eq!(g.eval((2, 1)), (2, 2));
        assert_eq!(g.eval((3, 5)), (3, 5));
        assert_eq!(g.mul(&g.inverse()), HmElement::identity(3));
    }

    #[test]
    fn conjugated_commutator_positions() {
        let h = h3();
        assert_eq!(far_transposition(&h.element(&HoughtonM::conjugated_commutator(7))), Some((1, 7)));
        assert_eq!(far_transposition(&h.element(&HoughtonM::conjugated_commutator(-7))), Some((2, 7)));
    }

    fn label(m: u8) -> impl Strategy<Value = HmLabel> {
        (1..m, any::<bool>()).prop_map(|(gen, inv)| HmLabel { gen, inv })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]
        #[test]
        fn words_give_bijections(m in 3u8..6, seed in prop::collection::vec(any::<(u8, bool)>(), 0..9)) {
            let word: Vec<HmLabel> = seed.iter().map(|&(g, inv)| HmLabel { gen: 1 + g % (m - 1), inv }).collect();
            let h = HoughtonM::new(m).unwrap();
            let e = h.element(&word);
            prop_assert!(e.is_bijective_on_window());
            prop_assert_eq!(e.mul(&e.inverse()), HmElement::identity(m));
            prop_assert_eq!(e.inverse(), h.element(&HoughtonM::inverse_word(&word)));
            let g1: i64 = word.iter().filter(|l| l.gen == 1).map(|l| if l.inv { -1 } else { 1 }).sum();
            prop_assert_eq!(e.exponent_sum(1), g1);
        }

        #[test]
        fn mul_is_concatenation(x in prop::collection::vec(label(4), 0..8), y in prop::collection::vec(label(4), 0..8)) {
            let h = HoughtonM::new(4).unwrap();
            let xy: Vec<HmLabel> = x.iter().chain(&y).copied().collect();
            prop_assert_eq!(h.element(&x).mul(&h.element(&y)), h.element(&xy));
        }
    }

    #[test]
    fn certificates_sound_on_ball() {
        let h = h3();
        for (v, d) in ball(&h, 5, Limits::default()).unwrap().iter() {
            assert!(v.disorder_lower_bound() <= d);
            assert!(v.certificate() <= d, "{} cert {} > {d}", h.canonical(v), v.certificate());
        }
    }

    #[test]
    fn target_norm() {
        let h = h3();
        let m = Metric::new(&h, Limits::default());
        for n in 5..=6 {
            assert_eq!(m.norm(&h.target(n)).unwrap(), n);
        }
    }

    #[test]
    fn witness_on_sphere_five() {
        let h = h3();
        let b = ball(&h, 5, Limits::default()).unwrap();
        let mut rays = [false; 2];
        for g in b.sphere(5) {
            let w = b.word_to(&g).unwrap();
            let out = h.witness_path(&w, AvoidanceMode::Auto, Limits::default()).unwrap();
            rays[usize::from(out.k < 0)] = true;
            let rep = verify_witness(
                &h,
                &out.path,
                &h.basepoint(),
                HoughtonM::witness_radius(5),
                &h.target(5),
                90,
                AvoidanceMode::Auto,
                Limits::default(),
            );
            assert!(rep.overall_pass, "{} {rep:?}", h.canonical(&g));
        }
        assert!(rays[0]);
    }

    /// The far transposition sits at depth `3n + l_1` on ray 1 for `k = 3n`
    /// and at `3n + l_2 - l_1` on ray 2 for `k = -3n`.
    #[test]
    fn far_depths() {
        let h = h3();
        let b = ball(&h, 5, Limits::default()).unwrap();
        for g in b.sphere(5) {
            let w = b.word_to(&g).unwrap();
            for k in [15i64, -15] {
                let mut labels = HoughtonM::conjugated_commutator(k);
                labels.extend(HoughtonM::inverse_word(&w));
                let far = far_transposition(&g.mul(&h.element(&labels))).unwrap();
                let (l1, l2) = (g.exponent_sum(1), g.exponent_sum(2));
                if k > 0 {
                    assert_eq!(far, (1, (15 + l1) as u64));
                } else {
                    assert_eq!(far, (2, (15 + l2 - l1) as u64));
                }
            }
        }
    }

    #[test]
    fn target_gives_empty_net_motion() {
        let h = h3();
        let mut w = HoughtonM::g1_power(2);
        w.extend(HoughtonM::commutator());
        let out = h.witness_path(&w, AvoidanceMode::Auto, Limits::default()).unwrap();
        assert_eq!(out.path.end(), &h.target(6));
        assert!(h.witness_path(&w[..4], AvoidanceMode::Auto, Limits::default()).is_err());
    }
}
