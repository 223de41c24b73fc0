use num_rational::Ratio;
use serde::Serialize;

use super::traversal::{inverse_walk_labels, lamp_labels, optimal_traversal, walk_labels};
use super::{schreier_ball, BaseAction, Wreath, WreathElement, WreathLabel, XPoint};
use crate::error::{Error, Result};
use crate::space::{Path, Rational};

/// The fixed endpoint every sphere element is joined to, with the words
/// used to reach it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessTarget {
    pub n: u64,
    /// `f_1 ... f_{n-1}` as `t`-steps.
    pub f_star: Vec<i64>,
    pub h0: i64,
    pub g_star: WreathElement,
    pub x_star: XPoint,
    pub x_star_star: XPoint,
    /// `a_1 ... a_p` with `a_1 ... a_p . y_0 = x**`.
    pub anchor_word: Vec<i64>,
    pub finite: Option<FiniteConstants>,
}

/// Constants of the finite-`X` branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteConstants {
    /// `c_i` as signed cursor offsets, indexed by the point of `X`.
    pub c: Vec<i64>,
    /// `M = max |c_i|`.
    pub m: u64,
    /// The lamp value `h` with `|h|_H = n`.
    pub h: i64,
}

fn schreier_word(action: BaseAction, norm: u64) -> Result<(XPoint, Vec<i64>)> {
    schreier_ball(action, 0, norm)
        .into_iter()
        .filter(|(_, (d, _))| *d == norm)
        .max_by(|a, b| a.1 .1.cmp(&b.1 .1))
        .map(|(x, (_, w))| (x, w))
        .ok_or_else(|| Error::UnsupportedParams(format!("no point of X-norm {norm}")))
}

impl WitnessTarget {
    pub fn new(w: &Wreath, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("witness needs n >= 1".into()));
        }
        let h0 = 1;
        if let BaseAction::Cyclic(k) = w.action {
            if w.lamp.is_finite() {
                return Err(Error::UnsupportedParams(
                    "finite X with a finite lamp group is virtually Z; no witness construction".into(),
                ));
            }
            let k = k as i64;
            let c: Vec<i64> = (0..k).map(|i| if i <= k - i { i } else { i - k }).collect();
            let m = c.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
            let h = n as i64;
            let g_star = WreathElement { lamps: [(XPoint::new(0, 0), h)].into_iter().collect(), cursor: 0 };
            return Ok(WitnessTarget {
                n,
                f_star: Vec::new(),
                h0,
                g_star,
                x_star: XPoint::new(0, 0),
                x_star_star: XPoint::new(0, 0),
                anchor_word: Vec::new(),
                finite: Some(FiniteConstants { c, m, h }),
            });
        }
        let (x_star, f_star) = schreier_word(w.action, n - 1)?;
        let (x_star_star, anchor_word) = schreier_word(w.action, n.div_ceil(6))?;
        let f: i64 = f_star.iter().sum();
        let g_star = w.apply_word(
            &WreathElement { lamps: Default::default(), cursor: f },
            &[WreathLabel::Lamp { orbit: 0, step: h0 }],
        )?;
        Ok(WitnessTarget { n, f_star, h0, g_star, x_star, x_star_star, anchor_word, finite: None })
    }

    /// Radius of the avoided ball: `n/6`, or `n/2 - 2M` for finite `X`.
    pub fn radius(&self) -> Rational {
        let n = self.n as i64;
        match &self.finite {
            None => Ratio::new(n, 6),
            Some(fc) => Ratio::new(n, 2) - Ratio::from_integer(2 * fc.m as i64),
        }
    }

    /// `6n`, or `7n + 2(k+2)M` for finite `X`.
    pub fn length_bound(&self) -> u64 {
        match &self.finite {
            None => 6 * self.n,
            Some(fc) => 7 * self.n + 2 * (fc.c.len() as u64 + 2) * fc.m,
        }
    }

    pub fn endpoint(&self) -> &WreathElement {
        &self.g_star
    }

    fn h0_label(&self) -> WreathLabel {
        WreathLabel::Lamp { orbit: 0, step: self.h0 }
    }
}

/// Which construction produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    /// `g = g*`.
    Identity,
    /// The lamp at `x*` is already lit.
    One,
    /// A lit lamp is far from the basepoint.
    Two,
    /// The cursor is far and sits at `x*`.
    ThreeAtTarget,
    /// The cursor is far; light it, then proceed as in case two.
    Three,
    /// Everything near the basepoint.
    Four,
    /// Finite `X`, infinite lamp group.
    FiniteX,
}

/// Route for the all-near case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case4Route {
    /// Base route for free transitive actions, anchor route otherwise.
    #[default]
    Auto,
    /// Walk back to the identity and straight to `f*`, relying on the
    /// traversal inequality.
    ViaBase,
    /// Light the anchor lamp `x**` first and keep it on.
    ViaAnchor,
}

#[derive(Debug, Clone)]
pub struct WitnessOutcome {
    pub case: Case,
    pub path: Path<WreathElement, WreathLabel>,
}

struct Builder<'a> {
    w: &'a Wreath,
    labels: Vec<WreathLabel>,
}

impl<'a> Builder<'a> {
    fn walk(&mut self, steps: &[i64]) -> &mut Self {
        self.labels.extend(walk_labels(steps));
        self
    }

    fn unwalk(&mut self, steps: &[i64]) -> &mut Self {
        self.labels.extend(inverse_walk_labels(steps));
        self
    }

    fn lamp(&mut self, orbit: u8, h: i64) -> &mut Self {
        self.labels.extend(lamp_labels(self.w, orbit, h));
        self
    }

    fn label(&mut self, l: WreathLabel) -> &mut Self {
        self.labels.push(l);
        self
    }
}

fn far(w: &Wreath, x: XPoint, n: u64) -> bool {
    6 * w.action.x_norm(x) >= n
}

/// Path from `g` (of norm `n`) to `g*` outside the ball of
/// [`WitnessTarget::radius`].
pub fn witness_path(
    w: &Wreath,
    g: &WreathElement,
    target: &WitnessTarget,
    route: Case4Route,
) -> Result<WitnessOutcome> {
    let n = target.n;
    let norm = w.norm(g);
    if norm != n {
        return Err(Error::InvalidInput(format!("element has norm {norm}, expected {n}")));
    }
    let mut b = Builder { w, labels: Vec::new() };
    let case = if *g == target.g_star {
        Case::Identity
    } else if let Some(fc) = &target.finite {
        finite_branch(w, g, target, fc, &mut b)?;
        Case::FiniteX
    } else if let Some(&h) = g.lamps.get(&target.x_star) {
        let f: i64 = target.f_star.iter().sum();
        if g.lamps.len() != 1 || g.cursor != f || w.lamp.norm(h) != 1 {
            return Err(Error::Invariant(format!("lamp x* lit but g = {g:?} is not f*h")));
        }
        b.lamp(0, w.lamp.inv(h)).label(target.h0_label());
        Case::One
    } else if g.lamps.keys().any(|&x| far(w, x, n)) {
        case_two(g, target, &mut b);
        Case::Two
    } else if far(w, w.lamp_position(g.cursor, 0), n) {
        b.label(target.h0_label());
        if w.lamp_position(g.cursor, 0) == target.x_star {
            let dec = optimal_traversal(w, g);
            if dec.m() != 1 {
                return Err(Error::Invariant(format!("cursor at x* with {} lamps lit", dec.m())));
            }
            let (x1, h1) = dec.moves[0];
            b.unwalk(&dec.walks[1]).lamp(x1.orbit, w.lamp.inv(h1)).walk(&dec.walks[1]);
            Case::ThreeAtTarget
        } else {
            let lit = w.apply_word(g, &[target.h0_label()])?;
            case_two(&lit, target, &mut b);
            Case::Three
        }
    } else {
        let route = match route {
            Case4Route::Auto if w.action.is_free() && w.action.orbits() == 1 => Case4Route::ViaBase,
            Case4Route::Auto => Case4Route::ViaAnchor,
            r => r,
        };
        case_four(g, target, route, &mut b);
        Case::Four
    };
    let path = Path::from_labels(w, g.clone(), b.labels)?;
    if path.end() != &target.g_star {
        return Err(Error::Invariant(format!("{case:?} path does not end at g*")));
    }
    Ok(WitnessOutcome { case, path })
}

/// Light `x*` first (a far lamp stays on), then turn the old lamps off.
fn case_two(g: &WreathElement, target: &WitnessTarget, b: &mut Builder<'_>) {
    let w = b.w;
    let dec = optimal_traversal(w, g);
    let all: Vec<i64> = dec.walks.iter().flatten().copied().collect();
    let m = dec.m();
    b.unwalk(&all).walk(&target.f_star).label(target.h0_label()).unwalk(&target.f_star);
    for e in &dec.walks[..m] {
        b.walk(e);
    }
    for i in (0..m).rev() {
        let (x, h) = dec.moves[i];
        b.lamp(x.orbit, w.lamp.inv(h)).unwalk(&dec.walks[i]);
    }
    b.walk(&target.f_star);
}

fn case_four(g: &WreathElement, target: &WitnessTarget, route: Case4Route, b: &mut Builder<'_>) {
    let w = b.w;
    let dec = optimal_traversal(w, g);
    let all: Vec<i64> = dec.walks.iter().flatten().copied().collect();
    let m = dec.m();
    let h0 = target.h0_label();
    match route {
        Case4Route::ViaBase | Case4Route::Auto => {
            b.unwalk(&all).walk(&target.f_star).label(h0).unwalk(&target.f_star);
            for i in 0..m {
                let (x, h) = dec.moves[i];
                b.walk(&dec.walks[i]).lamp(x.orbit, w.lamp.inv(h));
            }
            for i in (0..m).rev() {
                b.unwalk(&dec.walks[i]);
            }
            b.walk(&target.f_star);
        }
        Case4Route::ViaAnchor => {
            // t_0 ... t_{r-1}: shortest word moving y_0 to f . y_0.
            let fy = w.lamp_position(g.cursor, 0);
            let back: Vec<i64> =
                schreier_ball(w.action, 0, w.action.x_norm(fy)).remove(&fy).map(|(_, word)| word).unwrap_or_default();
            let anchor = &target.anchor_word;
            b.unwalk(&back).walk(anchor).label(h0).unwalk(anchor).walk(&back);
            b.unwalk(&dec.walks[m]);
            for i in (0..m).rev() {
                let (x, h) = dec.moves[i];
                b.lamp(x.orbit, w.lamp.inv(h)).unwalk(&dec.walks[i]);
            }
            b.walk(&target.f_star).label(h0).unwalk(&target.f_star);
            b.walk(anchor).lamp(0, w.lamp.inv(target.h0)).unwalk(anchor).walk(&target.f_star);
        }
    }
}

/// Finite `X`, infinite `H`: pump a cheap lamp up to `h`, clear the rest,
/// then move the bright lamp to `y_0`.
fn finite_branch(
    w: &Wreath,
    g: &WreathElement,
    target: &WitnessTarget,
    fc: &FiniteConstants,
    b: &mut Builder<'_>,
) -> Result<()> {
    let k = fc.c.len() as i64;
    let value = |r: i64| g.lamps.get(&XPoint::new(0, r)).copied().unwrap_or(0);
    let j = (0..k).min_by_key(|&r| (w.lamp.norm(value(r)), r)).expect("nonempty X");
    let hj = value(j);
    if 2 * w.lamp.norm(hj) > target.n {
        return Err(Error::Invariant(format!("no lamp of norm <= n/2 (best {hj})")));
    }
    let r = g.cursor.rem_euclid(k);
    let f_prime = if r <= k - r { -r } else { k - r };
    let cj = fc.c[j as usize];
    let step = |d: i64| vec![d.signum(); d.unsigned_abs() as usize];
    b.walk(&step(f_prime)).walk(&step(cj)).lamp(0, fc.h - hj);

    let here = w.apply_word(g, &b.labels)?;
    let cleared = WreathElement { lamps: [(XPoint::new(0, j), fc.h)].into_iter().collect(), cursor: 0 };
    let rest = w.mul(&w.inverse(&here), &cleared);
    b.labels.extend(optimal_traversal(w, &rest).labels(w));

    if j != 0 {
        b.lamp(0, fc.h).walk(&step(cj)).lamp(0, -fc.h).unwalk(&step(cj));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{verify_witness, AvoidanceMode};
    use crate::space::{sphere, Limits, MarkedSpace};
    use crate::wreath::LampGroup;

    fn check_sphere(w: &Wreath, n: u64, route: Case4Route) -> Vec<Case> {
        let target = WitnessTarget::new(w, n).unwrap();
        let mut cases = Vec::new();
        for g in sphere(w, n, Limits::default()).unwrap() {
            let out = witness_path(w, &g, &target, route).unwrap();
            let rep = verify_witness(
                w,
                &out.path,
                &w.basepoint(),
                target.radius(),
                target.endpoint(),
                target.length_bound(),
                AvoidanceMode::Auto,
                Limits::default(),
            );
            assert!(rep.overall_pass, "{:?} {} {:?}", out.case, w.canonical(&g), rep);
            cases.push(out.case);
        }
        cases
    }

    #[test]
    fn target_has_norm_n() {
        let w = Wreath::lamplighter();
        for n in 1..10 {
            let t = WitnessTarget::new(&w, n).unwrap();
            assert_eq!(w.norm(&t.g_star), n);
            assert_eq!(w.action.x_norm(t.x_star), n - 1);
            assert_eq!(t.anchor_word.len() as u64, n.div_ceil(6));
        }
    }

    #[test]
    fn target_itself_gives_empty_path() {
        let w = Wreath::lamplighter();
        let t = WitnessTarget::new(&w, 5).unwrap();
        let out = witness_path(&w, &t.g_star.clone(), &t, Case4Route::Auto).unwrap();
        assert_eq!(out.case, Case::Identity);
        assert!(out.path.is_empty());
    }

    #[test]
    fn case_one_is_two_steps() {
        let w = Wreath::new(LampGroup::Cyclic(3), BaseAction::Regular).unwrap();
        let t = WitnessTarget::new(&w, 5).unwrap();
        let g = w.element("t t t t h0^-1").unwrap();
        let out = witness_path(&w, &g, &t, Case4Route::Auto).unwrap();
        assert_eq!(out.case, Case::One);
        assert_eq!(out.path.len(), 2);
        assert_eq!(out.path.vertices[1], w.element("t t t t").unwrap());
    }

    #[test]
    fn near_lamps_at_sixth_of_n_are_far() {
        // Lamps at norm exactly n/6 count as far.
        let w = Wreath::lamplighter();
        let t = WitnessTarget::new(&w, 6).unwrap();
        let g = w.element("t^-1 h0 t t h0 t^-1").unwrap();
        assert_eq!(w.norm(&g), 6);
        let out = witness_path(&w, &g, &t, Case4Route::Auto).unwrap();
        assert_eq!(out.case, Case::Two);
        assert!(out.path.len() <= 36);
    }

    #[test]
    fn case_four_bright_near_lamp() {
        let w = Wreath::new(LampGroup::Integers, BaseAction::Regular).unwrap();
        let t = WitnessTarget::new(&w, 13).unwrap();
        let g = w.element(&format!("t {}t^-1", "h0 ".repeat(11))).unwrap();
        assert_eq!(w.norm(&g), 13);
        for route in [Case4Route::ViaBase, Case4Route::ViaAnchor] {
            let out = witness_path(&w, &g, &t, route).unwrap();
            assert_eq!(out.case, Case::Four);
            assert!(out.path.len() <= 78);
        }
    }

    #[test]
    fn wrong_norm_rejected() {
        let w = Wreath::lamplighter();
        let t = WitnessTarget::new(&w, 5).unwrap();
        assert!(witness_path(&w, &w.element("t").unwrap(), &t, Case4Route::Auto).is_err());
    }

    #[test]
    fn all_spheres_small() {
        let w = Wreath::lamplighter();
        for n in 1..=6 {
            check_sphere(&w, n, Case4Route::Auto);
        }
        let w = Wreath::new(LampGroup::Cyclic(2), BaseAction::TwoOrbits).unwrap();
        for n in 3..=5 {
            check_sphere(&w, n, Case4Route::Auto);
        }
        let w = Wreath::new(LampGroup::Integers, BaseAction::Cyclic(3)).unwrap();
        for n in 3..=6 {
            check_sphere(&w, n, Case4Route::Auto);
        }
    }

    #[test]
    fn anchor_route_on_translation() {
        let w = Wreath::new(LampGroup::Cyclic(2), BaseAction::Translation).unwrap();
        let cases: Vec<Case> = (5..=7).flat_map(|n| check_sphere(&w, n, Case4Route::ViaAnchor)).collect();
        assert!(cases.contains(&Case::Four));
    }
}
