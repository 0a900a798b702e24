//! Deformation functions on the closed strip `0 <= Im z <= pi`.
//!
//! * [`StandardR`]: `sign * e^{i a sinh z} * prod_k (sinh b_k - sinh z)/(sinh b_k + sinh z)`.
//! * [`CrossBreaker`]: `i (e^z al - i conj(al)) / (e^z conj(al) + i al)`, `al = 1 - i w`.
//! * [`ChargedPair`]: `R+ = f * R_std`, `R- (z) = R+ (i pi - z)`, `R = e^{i mu/2} R+`, `r = e^{i nu/2} R-`.

use crate::phase::cis;
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const STRIP_TOL: f64 = 1e-12;
const I: C64 = C64::new(0.0, 1.0);

/// Function analytic in the open strip and continuous on its closure.
pub trait StripFunction: Send + Sync {
    /// Value without the strip check (callers guarantee the domain).
    fn value(&self, z: C64) -> C64;

    fn eval(&self, z: C64) -> Result<C64> {
        check_strip(z)?;
        Ok(self.value(z))
    }
}

pub fn check_strip(z: C64) -> Result<()> {
    if z.im < -STRIP_TOL || z.im > PI + STRIP_TOL || !z.re.is_finite() {
        return Err(Error::OutsideStrip(format!("{z}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StandardR {
    sign: f64,
    a: f64,
    /// `sinh(b_k)` for the closed, non-trivial root set.
    sinh_roots: Vec<C64>,
    roots: Vec<C64>,
}

impl StandardR {
    /// The root set is closed under `b -> -conj(b)`; roots with real
    /// `sinh(b)` pair to the constant 1 and are dropped.
    pub fn new(sign: i8, a: f64, roots: &[C64]) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidParameter(format!("sign must be +1 or -1, got {sign}")));
        }
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::Inadmissible(format!("a = {a} must be finite and >= 0")));
        }
        let mut closed: Vec<C64> = Vec::new();
        for &b in roots {
            if !b.re.is_finite() || !b.im.is_finite() {
                return Err(Error::InvalidParameter(format!("root {b} is not finite")));
            }
            if b.sinh().im.abs() <= 1e-14 * b.sinh().norm().max(1.0) {
                continue;
            }
            for c in [b, -b.conj()] {
                if !closed.iter().any(|x| (x - c).norm() < 1e-14) {
                    closed.push(c);
                }
            }
        }
        for &b in &closed {
            if let Some(z) = pole_in_strip(b) {
                return Err(Error::Pole(format!("root {b} gives a pole at {z}")));
            }
        }
        let sinh_roots = closed.iter().map(|b| b.sinh()).collect();
        Ok(StandardR { sign: sign as f64, a, sinh_roots, roots: closed })
    }

    pub fn trivial() -> Self {
        StandardR { sign: 1.0, a: 0.0, sinh_roots: Vec::new(), roots: Vec::new() }
    }

    /// Roots actually used (after closure).
    pub fn roots(&self) -> &[C64] {
        &self.roots
    }
}

/// Zeros of `sinh b + sinh z` are `z = -b + 2 pi i k` and `z = i pi + b + 2 pi i k`.
fn pole_in_strip(b: C64) -> Option<C64> {
    let bases = [-b, C64::new(0.0, PI) + b];
    for base in bases {
        let k0 = ((-base.im) / (2.0 * PI)).floor() as i64;
        for k in k0 - 1..=k0 + 2 {
            let z = base + C64::new(0.0, 2.0 * PI * k as f64);
            if z.im >= -1e-9 && z.im <= PI + 1e-9 {
                return Some(z);
            }
        }
    }
    None
}

impl StripFunction for StandardR {
    fn value(&self, z: C64) -> C64 {
        let s = z.sinh();
        let mut v = (I * self.a * s).exp() * self.sign;
        for r in &self.sinh_roots {
            v *= (r - s) / (r + s);
        }
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossBreaker {
    w: f64,
    alpha: C64,
}

impl CrossBreaker {
    pub fn new(w: f64) -> Result<Self> {
        if !(w.abs() < 1.0) {
            return Err(Error::Inadmissible(format!("|w| = {} must be < 1", w.abs())));
        }
        Ok(CrossBreaker { w, alpha: C64::new(1.0, -w) })
    }

    pub fn w(&self) -> f64 {
        self.w
    }
}

impl StripFunction for CrossBreaker {
    fn value(&self, z: C64) -> C64 {
        let e = z.exp();
        let (a, ab) = (self.alpha, self.alpha.conj());
        I * (e * a - I * ab) / (e * ab + I * a)
    }
}

/// `R+ = f * R_std` with optional crossing breaker `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct RPlus {
    pub breaker: Option<CrossBreaker>,
    pub standard: StandardR,
}

impl StripFunction for RPlus {
    fn value(&self, z: C64) -> C64 {
        let f = self.breaker.map_or(C64::new(1.0, 0.0), |b| b.value(z));
        f * self.standard.value(z)
    }
}

/// The pair `(R, r)` entering the charged deformation.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargedPair {
    plus: RPlus,
    mu: f64,
    nu: f64,
    naive_minus: bool,
}

impl ChargedPair {
    /// Strict pair: `nu = -mu`, so that `R(theta + i pi) = conj(r(theta))`.
    pub fn new(plus: RPlus, mu: f64) -> Self {
        ChargedPair { plus, mu, nu: -mu, naive_minus: false }
    }

    /// Exploratory pair with independent `nu`.
    pub fn with_nu(plus: RPlus, mu: f64, nu: f64) -> Self {
        ChargedPair { plus, mu, nu, naive_minus: false }
    }

    /// Negative control: `R-` taken equal to `R+` instead of `R+(i pi - z)`,
    /// which breaks the charged crossing relation unless `R+` is neutral.
    pub fn mispaired(plus: RPlus, mu: f64) -> Self {
        ChargedPair { plus, mu, nu: -mu, naive_minus: true }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn plus(&self) -> &RPlus {
        &self.plus
    }

    pub fn r_plus(&self, z: C64) -> C64 {
        self.plus.value(z)
    }

    pub fn r_minus(&self, z: C64) -> C64 {
        if self.naive_minus {
            self.plus.value(z)
        } else {
            self.plus.value(C64::new(0.0, PI) - z)
        }
    }

    /// `R(z) = e^{i mu/2} R+(z)`.
    pub fn big_r(&self, z: C64) -> C64 {
        cis(self.mu / 2.0) * self.r_plus(z)
    }

    /// `r(z) = e^{i nu/2} R-(z)`.
    pub fn small_r(&self, z: C64) -> C64 {
        cis(self.nu / 2.0) * self.r_minus(z)
    }

    pub fn component(&self, c: Component) -> PairComponent<'_> {
        PairComponent { pair: self, which: c }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    RPlus,
    RMinus,
    BigR,
    SmallR,
}

pub struct PairComponent<'a> {
    pair: &'a ChargedPair,
    which: Component,
}

impl StripFunction for PairComponent<'_> {
    fn value(&self, z: C64) -> C64 {
        match self.which {
            Component::RPlus => self.pair.r_plus(z),
            Component::RMinus => self.pair.r_minus(z),
            Component::BigR => self.pair.big_r(z),
            Component::SmallR => self.pair.small_r(z),
        }
    }
}

/// Named residuals plus their maximum.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Residuals {
    pub max: f64,
    pub parts: Vec<(String, f64)>,
}

impl Residuals {
    fn from_parts(parts: Vec<(String, f64)>) -> Self {
        let max = crate::exec::fold_max(parts.iter().map(|p| p.1));
        Residuals { max, parts }
    }
}

fn sup(samples: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    crate::exec::fold_max(samples.iter().map(|&x| f(x)))
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `|F(-x) - e^{i mu} conj F(x)|` and `||F(x)| - 1|` on real samples.
pub fn check_real_conditions(f: &dyn StripFunction, mu: f64, samples: &[f64]) -> Residuals {
    let ph = cis(mu);
    Residuals::from_parts(vec![
        ("reflection".into(), sup(samples, |x| (f.value(re(-x)) - ph * f.value(re(x)).conj()).norm())),
        ("unitarity".into(), sup(samples, |x| (f.value(re(x)).norm() - 1.0).abs())),
    ])
}

/// `F(i pi - x) = conj F(i pi + x)` and `conj F(i pi + x) = 1 / F(i pi + x)`.
pub fn check_upper_boundary(f: &dyn StripFunction, samples: &[f64]) -> Residuals {
    let top = |x: f64| C64::new(x, PI);
    Residuals::from_parts(vec![
        ("conjugation".into(), sup(samples, |x| (f.value(top(-x)) - f.value(top(x)).conj()).norm())),
        (
            "inversion".into(),
            sup(samples, |x| {
                let v = f.value(top(x));
                (v.conj() - v.inv()).norm()
            }),
        ),
    ])
}

pub enum CrossingTarget<'a> {
    /// `R(theta + i pi) = conj r(theta)`.
    Charged(&'a ChargedPair),
    /// `F(i pi - x) = F(x)`.
    Neutral(&'a dyn StripFunction),
    /// `f(i pi - x) = -f(x)` (crossing breaker at `w = 0`).
    SignFlip(&'a dyn StripFunction),
}

pub fn check_crossing(target: CrossingTarget<'_>, samples: &[f64]) -> Residuals {
    let parts = match target {
        CrossingTarget::Charged(p) => {
            vec![("charged".to_string(), sup(samples, |x| (p.big_r(C64::new(x, PI)) - p.small_r(re(x)).conj()).norm()))]
        }
        CrossingTarget::Neutral(f) => vec![("neutral".to_string(), sup(samples, |x| (f.value(C64::new(-x, PI)) - f.value(re(x))).norm()))],
        CrossingTarget::SignFlip(f) => {
            vec![("sign-flip".to_string(), sup(samples, |x| (f.value(C64::new(-x, PI)) + f.value(re(x))).norm()))]
        }
    };
    Residuals::from_parts(parts)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct StripProbe {
    pub max_modulus: f64,
    pub exceeds_bound: bool,
}

pub const DEFAULT_STRIP_BOUND: f64 = 1e6;

/// Max modulus over an `nx x ny` rectangle `[-xmax, xmax] x [0, pi]`.
pub fn strip_bound_probe(f: &dyn StripFunction, nx: usize, ny: usize, xmax: f64, bound: f64) -> Result<StripProbe> {
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidParameter("probe grid needs at least 2x2 points".into()));
    }
    let mut worst: f64 = 0.0;
    for i in 0..nx {
        let x = -xmax + 2.0 * xmax * i as f64 / (nx - 1) as f64;
        for j in 0..ny {
            let y = PI * j as f64 / (ny - 1) as f64;
            let v = f.value(C64::new(x, y)).norm();
            if !v.is_finite() {
                return Err(Error::Pole(format!("non-finite value at {x}+{y}i")));
            }
            worst = worst.max(v);
        }
    }
    Ok(StripProbe { max_modulus: worst, exceeds_bound: worst > bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Standard,
    #[serde(alias = "crossbreaker")]
    CrossBreaker,
    Charged,
}

/// Function block of the configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub family: Family,
    #[serde(default = "one")]
    pub sign: i8,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub roots: Vec<[f64; 2]>,
    #[serde(default)]
    pub w: Option<f64>,
    #[serde(default)]
    pub mu: f64,
}

fn one() -> i8 {
    1
}

/// A configured deformation function.
#[derive(Clone, Debug, PartialEq)]
pub enum DeformationFunction {
    Standard(StandardR),
    CrossBreaker(CrossBreaker),
    Charged(ChargedPair),
}

impl FunctionSpec {
    pub fn standard(&self) -> Result<StandardR> {
        let roots: Vec<C64> = self.roots.iter().map(|r| C64::new(r[0], r[1])).collect();
        StandardR::new(self.sign, self.a, &roots)
    }

    pub fn r_plus(&self) -> Result<RPlus> {
        Ok(RPlus { breaker: self.w.map(CrossBreaker::new).transpose()?, standard: self.standard()? })
    }

    pub fn build(&self) -> Result<DeformationFunction> {
        Ok(match self.family {
            Family::Standard => DeformationFunction::Standard(self.standard()?),
            Family::CrossBreaker => {
                DeformationFunction::CrossBreaker(CrossBreaker::new(self.w.ok_or_else(|| Error::Config("cross-breaker needs w".into()))?)?)
            }
            Family::Charged => DeformationFunction::Charged(ChargedPair::new(self.r_plus()?, self.mu)),
        })
    }
}

impl DeformationFunction {
    /// The function whose real-line and boundary conditions are checked
    /// (`R` for a charged pair).
    pub fn primary(&self) -> &dyn StripFunction {
        match self {
            DeformationFunction::Standard(s) => s,
            DeformationFunction::CrossBreaker(c) => c,
            DeformationFunction::Charged(p) => &p.plus,
        }
    }

    pub fn mu(&self) -> f64 {
        match self {
            DeformationFunction::Charged(p) => p.mu,
            _ => 0.0,
        }
    }
}

/// `n` equally spaced real samples on `[-xmax, xmax]`.
pub fn real_samples(n: usize, xmax: f64) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n).map(|i| -xmax + 2.0 * xmax * i as f64 / (n - 1) as f64).collect()
}
