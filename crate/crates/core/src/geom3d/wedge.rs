use super::covering::{mat_apply, mat_mul, wrap, CoveringElement, Mat3};
use crate::{Error, Result};
use std::f64::consts::PI;
use std::fmt;

/// Largest angle increment allowed while lifting the edge direction.
pub const MAX_ANGLE_STEP: f64 = PI / 64.0;

/// Reference direction `e0 = (0, 0, -1)`; it spans the edge of `W0`.
pub const E0: [f64; 3] = [0.0, 0.0, -1.0];

/// Tolerance for recognising `L_W^{-1} L_W' = r(k pi) Lambda_1(t)`.
const DECOMPOSITION_TOL: f64 = 1e-9;

/// One-parameter generator of the covering group.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Generator {
    Rot(f64),
    Boost1(f64),
    Boost2(f64),
}

impl Generator {
    pub fn element(&self) -> CoveringElement {
        self.at(1.0)
    }

    /// Point `s` in `[0, 1]` along the one-parameter subgroup.
    pub fn at(&self, s: f64) -> CoveringElement {
        match *self {
            Generator::Rot(w) => CoveringElement::rotation(s * w),
            Generator::Boost1(t) => CoveringElement::boost1(s * t),
            Generator::Boost2(t) => CoveringElement::boost2(s * t),
        }
    }

    /// `j~ g j~` generator by generator.
    pub fn jtilde(&self) -> Generator {
        match *self {
            Generator::Rot(w) => Generator::Rot(-w),
            Generator::Boost1(t) => Generator::Boost1(t),
            Generator::Boost2(t) => Generator::Boost2(-t),
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            Generator::Rot(x) | Generator::Boost1(x) | Generator::Boost2(x) => x,
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Rot(w) => write!(f, "rot({w})"),
            Generator::Boost1(t) => write!(f, "boost1({t})"),
            Generator::Boost2(t) => write!(f, "boost2({t})"),
        }
    }
}

/// Parse a word such as `"rot(pi) boost1(0.5)"` or `"rot(-pi/2)*boost2(1)"`.
///
/// Parameters are real literals, optionally multiplied by `pi` and divided by
/// a literal: `2pi`, `-3*pi/4`, `pi/2`, `0.25`.
pub fn parse_word(s: &str) -> Result<Vec<Generator>> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        rest = rest.trim_start_matches(|c: char| c.is_whitespace() || c == '*' || c == '.');
        if rest.is_empty() {
            break;
        }
        let open = rest.find('(').ok_or_else(|| bad(s, "missing '('"))?;
        let close = rest.find(')').ok_or_else(|| bad(s, "missing ')'"))?;
        if close < open {
            return Err(bad(s, "unbalanced parentheses"));
        }
        let name = rest[..open].trim();
        let value = parse_angle(&rest[open + 1..close]).map_err(|e| bad(s, &e))?;
        out.push(match name {
            "rot" | "r" => Generator::Rot(value),
            "boost1" | "b1" => Generator::Boost1(value),
            "boost2" | "b2" => Generator::Boost2(value),
            other => return Err(bad(s, &format!("unknown generator '{other}'"))),
        });
        rest = &rest[close + 1..];
    }
    Ok(out)
}

fn bad(word: &str, why: &str) -> Error {
    Error::Config(format!("cannot parse wedge word '{word}': {why}"))
}

fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (num, den) = match t.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().map_err(|_| format!("bad divisor '{b}'"))?),
        None => (t.clone(), 1.0),
    };
    let (coef, has_pi) = match num.strip_suffix("pi") {
        Some(c) => (c.trim_end_matches('*').to_string(), true),
        None => (num.clone(), false),
    };
    let c = match coef.as_str() {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| format!("bad number '{x}'"))?,
    };
    if !(den != 0.0) {
        return Err("division by zero".into());
    }
    let v = c * if has_pi { PI } else { 1.0 } / den;
    if !v.is_finite() {
        return Err(format!("non-finite parameter '{s}'"));
    }
    Ok(v)
}

/// Path of wedges `W~ = L~ W~0`.
///
/// Stores the word defining `L~`, the element itself and the accumulated-angle
/// interval `(lower, lower + pi)`; `lower` is the lifted spatial angle of the
/// edge direction `Lambda(L) e0`, tracked from `-pi/2`.
#[derive(Clone, Debug)]
pub struct WedgePath {
    word: Vec<Generator>,
    element: CoveringElement,
    lower: f64,
}

impl WedgePath {
    /// `W~0`: the minimal path into `W0 = {x1 > |x0|}`.
    pub fn standard() -> Self {
        WedgePath { word: Vec::new(), element: CoveringElement::IDENTITY, lower: -PI / 2.0 }
    }

    /// Path reached by the word, with the edge angle lifted along each generator.
    pub fn from_word(word: &[Generator]) -> Self {
        let mut g = CoveringElement::IDENTITY;
        let mut lower = -PI / 2.0;
        let mut prev = spatial_angle(&mat_apply(&g.lorentz(), &E0));
        for gen in word {
            let base = g;
            let mut s0 = 0.0;
            let n = ((gen.parameter().abs() / MAX_ANGLE_STEP).ceil() as usize).max(1);
            for i in 1..=n {
                let s1 = i as f64 / n as f64;
                lift_segment(&base, gen, s0, s1, &mut prev, &mut lower, 0);
                s0 = s1;
            }
            g = base * gen.element();
        }
        WedgePath { word: word.to_vec(), element: g, lower }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(Self::from_word(&parse_word(s)?))
    }

    /// Interval from the element alone (closed form, no path tracking).
    ///
    /// `L = r(omega) B(gamma)`; the pure boost turns `e0` by less than `pi/2`.
    pub fn lower_from_element(g: &CoveringElement) -> f64 {
        let b = CoveringElement::new(g.gamma(), 0.0).expect("valid element").lorentz();
        let e = mat_apply(&b, &E0);
        -PI / 2.0 + wrap(spatial_angle(&e) + PI / 2.0) + g.omega()
    }

    pub fn from_element(g: CoveringElement) -> Self {
        WedgePath { word: Vec::new(), element: g, lower: Self::lower_from_element(&g) }
    }

    pub fn word(&self) -> &[Generator] {
        &self.word
    }

    pub fn element(&self) -> &CoveringElement {
        &self.element
    }

    pub fn lorentz(&self) -> Mat3 {
        self.element.lorentz()
    }

    /// Accumulated-angle interval (open, length `pi`).
    pub fn interval(&self) -> (f64, f64) {
        (self.lower, self.lower + PI)
    }

    /// `g W~`, tracked along `g`'s word followed by this path's word.
    pub fn left_mul(&self, g: &[Generator]) -> Self {
        if self.word.is_empty() && self.element != CoveringElement::IDENTITY {
            let h = g.iter().fold(CoveringElement::IDENTITY, |a, x| a * x.element());
            return Self::from_element(h * self.element);
        }
        let mut w = g.to_vec();
        w.extend_from_slice(&self.word);
        Self::from_word(&w)
    }

    /// `L_W r(k pi) W~0`: a path over the causal complement `W'` (`k` odd).
    pub fn complement(&self, k: i64) -> Self {
        let mut w = self.word.clone();
        w.push(Generator::Rot(k as f64 * PI));
        if self.word.is_empty() && self.element != CoveringElement::IDENTITY {
            return Self::from_element(self.element * CoveringElement::rotation(k as f64 * PI));
        }
        Self::from_word(&w)
    }

    /// `j~ . W~ = j~(L) r(-pi) W~0`.
    pub fn jtilde(&self) -> Self {
        if self.word.is_empty() && self.element != CoveringElement::IDENTITY {
            return Self::from_element(self.element.jtilde() * CoveringElement::rotation(-PI));
        }
        let mut w: Vec<Generator> = self.word.iter().map(Generator::jtilde).collect();
        w.push(Generator::Rot(-PI));
        Self::from_word(&w)
    }
}

/// Lift the edge angle over `s0..s1` of `base * gen(s)`, halving steps that turn by more than the cap.
fn lift_segment(base: &CoveringElement, gen: &Generator, s0: f64, s1: f64, prev: &mut f64, lower: &mut f64, depth: u32) {
    let a = spatial_angle(&mat_apply(&(*base * gen.at(s1)).lorentz(), &E0));
    let d = wrap(a - *prev);
    if d.abs() > MAX_ANGLE_STEP && depth < 40 {
        let mid = 0.5 * (s0 + s1);
        lift_segment(base, gen, s0, mid, prev, lower, depth + 1);
        lift_segment(base, gen, mid, s1, prev, lower, depth + 1);
        return;
    }
    *lower += d;
    *prev = a;
}

fn spatial_angle(e: &[f64; 3]) -> f64 {
    e[2].atan2(e[1])
}

/// Relative winding number `N(W~1, W~2)` from the angle intervals:
/// the integer with `theta(W~2) + 2 pi N < theta(W~1) < theta(W~2) + 2 pi (N + 1)`.
///
/// Requires `W2 = W1'` as wedges (checked on the Lorentz matrices).
pub fn winding_number(w1: &WedgePath, w2: &WedgePath) -> Result<i64> {
    check_complement(w1, w2)?;
    let (a1, _) = w1.interval();
    let (a2, _) = w2.interval();
    let x = (a1 - a2 - PI) / (2.0 * PI);
    let n = x.round();
    if (x - n).abs() > 1e-6 {
        return Err(Error::NotSeparated(format!("angle intervals do not interlock (offset {x})")));
    }
    Ok(n as i64)
}

/// `k(W~, W~')` from `L_W^{-1} L_W' = r(k pi) Lambda_1(t)`, i.e. `(gamma real, k pi)`.
pub fn k_factor(w: &WedgePath, w2: &WedgePath) -> Result<i64> {
    let h = w.element().inverse() * *w2.element();
    let x = h.omega() / PI;
    let k = x.round();
    let scale = 1.0 / (1.0 - h.gamma().norm()).max(1e-300);
    if h.gamma().im.abs() > DECOMPOSITION_TOL * scale || (x - k).abs() > DECOMPOSITION_TOL * k.abs().max(1.0) {
        return Err(Error::NotSeparated(format!(
            "L^-1 L' = ({}, {}) is not a rotation by an odd multiple of pi times an x1-boost",
            h.gamma(),
            h.omega()
        )));
    }
    let k = k as i64;
    if k % 2 == 0 {
        return Err(Error::NotSeparated(format!("k = {k} is even: the wedges coincide")));
    }
    Ok(k)
}

/// `W2 = W1'` as wedges: `r(pi) Lambda(L1)^{-1} Lambda(L2)` must be an x1-boost.
fn check_complement(w1: &WedgePath, w2: &WedgePath) -> Result<()> {
    let m = mat_mul(&w1.element().inverse().lorentz(), &w2.lorentz());
    let r = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
    let s = mat_mul(&r, &m);
    let scale = s[0][0].abs().max(1.0);
    let tol = 1e-8 * scale;
    let ok = (s[0][0] - s[1][1]).abs() < tol
        && (s[0][1] - s[1][0]).abs() < tol
        && s[0][0] > 0.0
        && (s[0][0] * s[0][0] - s[0][1] * s[0][1] - 1.0).abs() < tol * scale
        && s[0][2].abs() < tol
        && s[1][2].abs() < tol
        && s[2][0].abs() < tol
        && s[2][1].abs() < tol
        && (s[2][2] - 1.0).abs() < tol;
    if ok {
        Ok(())
    } else {
        Err(Error::NotSeparated("second wedge is not the causal complement of the first".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_word(r: &mut ChaCha8Rng, len: usize) -> Vec<Generator> {
        (0..len)
            .map(|_| match r.random_range(0..3) {
                0 => Generator::Rot(r.random_range(-7.0..7.0)),
                1 => Generator::Boost1(r.random_range(-2.0..2.0)),
                _ => Generator::Boost2(r.random_range(-2.0..2.0)),
            })
            .collect()
    }

    fn close(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10
    }

    #[test]
    fn standard_intervals() {
        assert!(close(WedgePath::standard().interval(), (-PI / 2.0, PI / 2.0)));
        assert!(close(WedgePath::parse("rot(pi)").unwrap().interval(), (PI / 2.0, 1.5 * PI)));
        assert!(close(WedgePath::parse("rot(2pi)").unwrap().interval(), (1.5 * PI, 2.5 * PI)));
        assert!(close(WedgePath::standard().jtilde().interval(), (-1.5 * PI, -PI / 2.0)));
    }

    #[test]
    fn parser_accepts_forms() {
        let w = parse_word("rot(-3*pi/4) boost1(0.5)*boost2( 2pi ) r(1)").unwrap();
        assert_eq!(w, vec![Generator::Rot(-0.75 * PI), Generator::Boost1(0.5), Generator::Boost2(2.0 * PI), Generator::Rot(1.0)]);
        assert!(parse_word("spin(1)").is_err());
        assert!(parse_word("rot(pi").is_err());
        assert!(parse_word("rot(x)").is_err());
    }

    #[test]
    fn tracked_and_closed_form_agree() {
        let mut r = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let w = WedgePath::from_word(&random_word(&mut r, 5));
            let lo = WedgePath::lower_from_element(w.element());
            assert!((w.interval().0 - lo).abs() < 1e-9, "{} vs {lo}", w.interval().0);
        }
    }

    #[test]
    fn stabilizer_boosts_leave_interval() {
        let mut r = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let mut word = random_word(&mut r, 4);
            let a = WedgePath::from_word(&word);
            word.push(Generator::Boost1(r.random_range(-3.0..3.0)));
            let b = WedgePath::from_word(&word);
            assert!(close(a.interval(), b.interval()));
        }
    }

    #[test]
    fn winding_examples() {
        let w0 = WedgePath::standard();
        let wp = WedgePath::parse("rot(pi)").unwrap();
        assert_eq!(winding_number(&w0, &wp).unwrap(), -1);
        assert_eq!(k_factor(&w0, &wp).unwrap(), 1);
        let wm = WedgePath::parse("rot(-pi)").unwrap();
        assert_eq!(winding_number(&w0, &wm).unwrap(), 0);
        assert_eq!(k_factor(&w0, &wm).unwrap(), -1);
    }

    #[test]
    fn winding_lemma_randomized() {
        let mut r = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let w = WedgePath::from_word(&random_word(&mut r, 3));
            let k = 2 * r.random_range(-4..4) + 1;
            let mut word = w.word().to_vec();
            word.push(Generator::Rot(k as f64 * PI));
            word.push(Generator::Boost1(r.random_range(-2.0..2.0)));
            let w2 = WedgePath::from_word(&word);
            let n = winding_number(&w, &w2).unwrap();
            let kk = k_factor(&w, &w2).unwrap();
            assert_eq!(kk, k);
            assert_eq!(-kk, 2 * n + 1);
        }
    }

    #[test]
    fn non_separated_pairs_rejected() {
        let w0 = WedgePath::standard();
        let w = WedgePath::parse("rot(0.3)").unwrap();
        assert!(winding_number(&w0, &w).is_err());
        assert!(k_factor(&w0, &w).is_err());
        assert!(k_factor(&w0, &WedgePath::parse("rot(2pi)").unwrap()).is_err());
    }

    #[test]
    fn jtilde_of_general_path() {
        let mut r = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let w = WedgePath::from_word(&random_word(&mut r, 3));
            let j = w.jtilde();
            let (a, _) = w.interval();
            assert!(close(j.interval(), (-2.0 * PI - a, -PI - a)), "{:?} {a}", j.interval());
            let jj = j.jtilde();
            assert!(close(jj.interval(), w.interval()));
        }
    }
}
