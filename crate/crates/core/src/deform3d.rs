//! Charged deformation in three dimensions.
//!
//! `T_W(p)` multiplies block `(n, m)` by
//! `A_W^{n,m}(p; p..) = u_W(p)^{q+1} prod_i u_W(p_i) R(Qp.p_i) prod_j conj(u_W(p_j)) R(Qp.p_j)`,
//! `q = n - m`. Deformed annihilators are `a_W(p) = T_W(p) a(p)` and
//! `b_W(p) = C a_W(p) C = T^c_W(p) b(p)`.

use crate::deform2d::{test_vectors, BoundaryTerms, ExchangeInputs, FieldInput};
use crate::exec::{fold_max, map_range, Mode};
use crate::fock::dense::{adjoint, OccupationBasis};
use crate::fock::{
    apply_j, apply_ladder_with, apply_phase_by_charge, decode, Dimension, Direction, FockVector, GridMeasure, NodeMultiplier,
    OneParticleFn, Sector, Species,
};
use crate::geom3d::{check_shell, k_factor, minkowski, CoveringElement, QMatrix, WedgePath};
use crate::phase::{arg, cis, turns};
use crate::waves::{Sign, TestPacket};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};
use std::f64::consts::PI;
use std::sync::Arc;

/// Deformation function of the real argument `a = Qp.p'`:
/// `R(a) = e^{i c a} prod_k (a - i b_k) / (a + i b_k)`, `c >= 0`, `b_k > 0`.
///
/// Analytic and bounded for `Im a >= 0`; `R(-a) = conj R(a) = 1/R(a)` on the real line.
#[derive(Clone, Debug, PartialEq)]
pub struct R3 {
    c: f64,
    b: Vec<f64>,
}

/// `[deform3d.r]` block of the configuration file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct R3Spec {
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub b: Vec<f64>,
}

impl R3Spec {
    pub fn build(&self) -> Result<R3> {
        R3::new(self.c, self.b.clone())
    }
}

impl R3 {
    pub fn new(c: f64, b: Vec<f64>) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Inadmissible(format!("R needs c >= 0, got {c}")));
        }
        if let Some(x) = b.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
            return Err(Error::Inadmissible(format!("R needs b_k > 0, got {x}")));
        }
        Ok(R3 { c, b })
    }

    pub fn trivial() -> Self {
        R3 { c: 0.0, b: Vec::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.c == 0.0 && self.b.is_empty()
    }

    pub fn eval(&self, a: C64) -> C64 {
        let i = C64::new(0.0, 1.0);
        let mut v = (i * self.c * a).exp();
        for &b in &self.b {
            v *= (a - i * b) / (a + i * b);
        }
        v
    }

    pub fn at(&self, a: f64) -> C64 {
        self.eval(C64::new(a, 0.0))
    }
}

#[derive(Clone, Debug)]
pub struct Deform3DParams {
    lambda: f64,
    mass: f64,
    sign: i8,
    r: R3,
    kappa: f64,
}

impl Deform3DParams {
    pub fn new(lambda: f64, mass: f64, sign: i8, r: R3, kappa: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")));
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidParameter(format!("f sign must be +1 or -1, got {sign}")));
        }
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Deform3DParams { lambda, mass, sign, r, kappa })
    }

    /// `lambda = 0`, `R = 1`.
    pub fn free(mass: f64) -> Result<Self> {
        Self::new(0.0, mass, 1, R3::trivial(), 1.0)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn r(&self) -> &R3 {
        &self.r
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Deform3DParams { lambda, ..self.clone() }
    }
}

/// Phase angle of `v(p)`: `v = e^{2 i arg(p0 + m - p1 + i p2)}`, the argument
/// taken in `(-pi/2, pi/2)` since `p0 + m - p1 > 0` on the shell.
pub fn v_angle(mass: f64, p: &[f64; 3]) -> f64 {
    2.0 * arg(C64::new(p[0] + mass - p[1], p[2]))
}

/// `v(p) = (p0 + m - p1 + i p2) / (p0 + m - p1 - i p2)`.
pub fn eval_v(mass: f64, p: &[f64; 3]) -> Result<C64> {
    check_shell(mass, p)?;
    let d = p[0] + mass - p[1];
    if !(d > 0.0) {
        return Err(Error::OffShell(*p));
    }
    Ok(C64::new(d, p[2]) / C64::new(d, -p[2]))
}

/// Lifted phase of `f(kappa) = sign (m - i kappa) / sqrt(m^2 + kappa^2)`.
fn f_angle(mass: f64, sign: i8, kappa: f64) -> f64 {
    let base = -(kappa / mass).atan();
    if sign < 0 {
        base + PI
    } else {
        base
    }
}

pub fn eval_fkappa(mass: f64, sign: i8, kappa: f64) -> C64 {
    let v = C64::new(mass, -kappa) / mass.hypot(kappa);
    if sign < 0 {
        -v
    } else {
        v
    }
}

/// `|f(-kappa)(m - i kappa) / (f(kappa)(m + i kappa)) - 1|`.
pub fn condf_residual(mass: f64, sign: i8, kappa: f64) -> f64 {
    let num = eval_fkappa(mass, sign, -kappa) * C64::new(mass, -kappa);
    let den = eval_fkappa(mass, sign, kappa) * C64::new(mass, kappa);
    (num / den - 1.0).norm()
}

/// `u_0^lambda(p) = f(p2)^lambda v(p)^lambda`, logs lifted from the rest momentum.
pub fn eval_u0(params: &Deform3DParams, p: &[f64; 3]) -> Result<C64> {
    check_shell(params.mass, p)?;
    Ok(cis(params.lambda * (f_angle(params.mass, params.sign, p[2]) + v_angle(params.mass, p))))
}

/// `u_W^lambda(p) = e^{-i lambda Omega(L_W, p)} u_0^lambda(L_W^{-1} p)`.
pub fn eval_uw(params: &Deform3DParams, w: &WedgePath, p: &[f64; 3]) -> Result<C64> {
    eval_uw_element(params, w.element(), p)
}

fn eval_uw_element(params: &Deform3DParams, l: &CoveringElement, p: &[f64; 3]) -> Result<C64> {
    let omega = l.wigner_omega(params.mass, p)?;
    let q = l.inverse().act(params.mass, p)?;
    Ok(cis(-params.lambda * omega) * eval_u0(params, &q)?)
}

/// `u_W'(p) / u_W(p)`; errors unless `W' = W` complement as paths of wedges.
pub fn u_ratio(params: &Deform3DParams, w: &WedgePath, w2: &WedgePath, p: &[f64; 3]) -> Result<C64> {
    k_factor(w, w2)?;
    Ok(eval_uw(params, w2, p)? / eval_uw(params, w, p)?)
}

/// `e^{-i lambda pi k}`, exact at quarter turns.
pub fn ratio_phase(lambda: f64, k: i64) -> C64 {
    turns(-lambda * k as f64 / 2.0)
}

/// Exchange phase `e^{-2 pi i lambda k}`, exact for integer and half-integer `lambda k`.
pub fn exchange_phase(lambda: f64, k: i64) -> C64 {
    turns(-lambda * k as f64)
}

/// `A_W^{n,m}(p; pbar)` for arbitrary on-shell momenta; `pbar` lists `n` particles then antiparticles.
pub fn eval_a(params: &Deform3DParams, w: &WedgePath, p: &[f64; 3], pbar: &[[f64; 3]], n: usize) -> Result<C64> {
    if n > pbar.len() {
        return Err(Error::InvalidParameter("more particles than momenta".into()));
    }
    let q = QMatrix::of(w, params.kappa)?;
    let charge = n as i32 - (pbar.len() - n) as i32;
    let mut v = eval_uw(params, w, p)?.powi(charge + 1);
    for (s, pi) in pbar.iter().enumerate() {
        let u = eval_uw(params, w, pi)?;
        v *= if s < n { u } else { u.conj() } * params.r.at(q.form(p, pi));
    }
    Ok(v)
}

/// `(B_W(p,p'), C_W(p,p'))` with
/// `B = u(p)^{-1} u(p')^{-1} R(Qp.p')^{-1}`, `C = u(p) conj(u(p'))^{-1} R(Qp.p')^{-1}`.
pub fn exchange_coeffs(params: &Deform3DParams, w: &WedgePath, p: &[f64; 3], p2: &[f64; 3]) -> Result<(C64, C64)> {
    let q = QMatrix::of(w, params.kappa)?;
    let (u, u2) = (eval_uw(params, w, p)?, eval_uw(params, w, p2)?);
    let r = params.r.at(q.form(p, p2));
    Ok((1.0 / (u * u2 * r), u / (u2.conj() * r)))
}

/// Worst deviation in
/// `u_W(p)^{-q+1} conj(u_W'(p)^{-q+1}) = e^{i pi lambda k (-q+1)} = e^{2 pi i lambda k} conj(u_W(p)^{q+1}) u_W'(p)^{q+1}`.
/// The middle phase follows from `u_W' / u_W = e^{-i pi lambda k}`.
pub fn u_phase_collapse(params: &Deform3DParams, w: &WedgePath, w2: &WedgePath, p: &[f64; 3], q: i32) -> Result<f64> {
    let k = k_factor(w, w2)?;
    let (u, u2) = (eval_uw(params, w, p)?, eval_uw(params, w2, p)?);
    let lhs = u.powi(1 - q) * u2.powi(1 - q).conj();
    let mid = turns(params.lambda * k as f64 * (1 - q) as f64 / 2.0);
    let rhs = exchange_phase(params.lambda, k).conj() * u.powi(q + 1).conj() * u2.powi(q + 1);
    Ok((lhs - mid).norm().max((mid - rhs).norm()))
}

/// Field kinds in three dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field3 {
    /// `Phi_W(f) = a*_W(f^+) + b_W((conj f)^+)`
    Phi,
    /// `Phi*_W(f) = b*_W(f^+) + a_W((conj f)^+)`
    PhiStar,
}

/// Deformation bound to a path of wedges and a 3D grid, with `u_W` and
/// `R(Q p_i . p_j)` tabulated on the nodes.
#[derive(Clone, Debug)]
pub struct Deform3D {
    params: Deform3DParams,
    wedge: WedgePath,
    grid: Arc<GridMeasure>,
    q: QMatrix,
    u: Vec<C64>,
    rq: Vec<C64>,
}

impl Deform3D {
    pub fn new(params: Deform3DParams, wedge: &WedgePath, grid: &Arc<GridMeasure>) -> Result<Self> {
        if grid.dimension() != Dimension::Three {
            return Err(Error::GridMismatch("3D deformation needs a (theta, p2) grid".into()));
        }
        if (grid.mass() - params.mass).abs() > 1e-12 * params.mass {
            return Err(Error::GridMismatch(format!("grid mass {} vs deformation mass {}", grid.mass(), params.mass)));
        }
        let q = QMatrix::of(wedge, params.kappa)?;
        let nodes = grid.nodes();
        let u = nodes.iter().map(|n| eval_uw(&params, wedge, &n.momentum)).collect::<Result<Vec<_>>>()?;
        let k = nodes.len();
        let mode = if k * k > 4096 { Mode::Parallel } else { Mode::Sequential };
        let rq = map_range(mode, k * k, |ij| {
            let (i, j) = (ij / k, ij % k);
            params.r.at(q.form(&nodes[i].momentum, &nodes[j].momentum))
        });
        Ok(Deform3D { params, wedge: wedge.clone(), grid: grid.clone(), q, u, rq })
    }

    pub fn params(&self) -> &Deform3DParams {
        &self.params
    }

    pub fn wedge(&self) -> &WedgePath {
        &self.wedge
    }

    pub fn grid(&self) -> &Arc<GridMeasure> {
        &self.grid
    }

    pub fn q(&self) -> &QMatrix {
        &self.q
    }

    /// `u_W` on the nodes.
    pub fn u(&self) -> &[C64] {
        &self.u
    }

    /// `A_W^{n,m}(p_node; slots)`.
    pub fn a_node(&self, node: usize, n: usize, slots: &[usize]) -> C64 {
        let k = self.grid.len();
        let charge = n as i32 - (slots.len() - n) as i32;
        let mut v = self.u[node].powi(charge + 1);
        for (s, &j) in slots.iter().enumerate() {
            v *= if s < n { self.u[j] } else { self.u[j].conj() } * self.rq[node * k + j];
        }
        v
    }

    /// `A_W^{m,n}(p_node; slots^c)`: antiparticles carry `u`, particles `conj u`.
    pub fn ac_node(&self, node: usize, n: usize, slots: &[usize]) -> C64 {
        let k = self.grid.len();
        let charge = (slots.len() - n) as i32 - n as i32;
        let mut v = self.u[node].powi(charge + 1);
        for (s, &j) in slots.iter().enumerate() {
            v *= if s < n { self.u[j].conj() } else { self.u[j] } * self.rq[node * k + j];
        }
        v
    }

    fn value(&self, node: usize, conjugate: bool, n: usize, slots: &[usize]) -> C64 {
        if conjugate {
            self.ac_node(node, n, slots)
        } else {
            self.a_node(node, n, slots)
        }
    }

    fn check_grid(&self, psi: &FockVector) -> Result<()> {
        if psi.grid().same_as(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch("vector and deformation grids differ".into()))
        }
    }

    /// `T_W(p_node) psi`.
    pub fn apply_t3(&self, node: usize, psi: &FockVector) -> Result<FockVector> {
        self.check_grid(psi)?;
        Ok(map_sectors(psi, |n, s| self.a_node(node, n, s)))
    }

    /// `T^c_W(p_node) psi`.
    pub fn apply_t3c(&self, node: usize, psi: &FockVector) -> Result<FockVector> {
        self.check_grid(psi)?;
        Ok(map_sectors(psi, |n, s| self.ac_node(node, n, s)))
    }

    /// `int dmu(p) c(p) X_self(p) X_other(p)^* psi`, `X = T` or `T^c`; `c` sampled on the nodes.
    pub fn integrate_pair(&self, other: &Deform3D, c: &[C64], conjugate: bool, psi: &FockVector) -> Result<FockVector> {
        self.check_grid(psi)?;
        other.check_grid(psi)?;
        let w = self.grid.weights();
        Ok(map_sectors(psi, |n, s| {
            (0..w.len())
                .filter(|&i| c[i] != C64::new(0.0, 0.0))
                .map(|i| w[i] * c[i] * self.value(i, conjugate, n, s) * other.value(i, conjugate, n, s).conj())
                .sum()
        }))
    }

    pub fn ladder(&self, species: Species, direction: Direction, phi: &OneParticleFn, psi: &FockVector) -> Result<FockVector> {
        self.check_grid(psi)?;
        let mult = Multiplier3 { d: self, conjugate: species == Species::Antiparticle };
        apply_ladder_with(species, direction, phi, psi, &mult)
    }

    pub fn field(&self, kind: Field3, f: &FieldInput, psi: &FockVector) -> Result<FockVector> {
        use Direction::*;
        use Species::*;
        let (create, annihilate) = match kind {
            Field3::Phi => (Particle, Antiparticle),
            Field3::PhiStar => (Antiparticle, Particle),
        };
        let up = self.ladder(create, Create, &f.plus, psi)?;
        up.add_scaled(C64::new(1.0, 0.0), &self.ladder(annihilate, Annihilate, &f.bar_plus, psi)?)
    }

    /// Diagonal matrix of `T_W(p_node)` (or `T^c`) in the occupation basis.
    pub fn oracle_t3(&self, basis: &OccupationBasis, node: usize, conjugate: bool) -> CsMat<C64> {
        basis.diagonal(|st| self.state_value(node, conjugate, &st.particles, &st.antiparticles))
    }

    fn state_value(&self, node: usize, conjugate: bool, particles: &[usize], antiparticles: &[usize]) -> C64 {
        let mut slots = particles.to_vec();
        slots.extend_from_slice(antiparticles);
        self.value(node, conjugate, particles.len(), &slots)
    }

    /// Independent matrix `sum_i sqrt(w_i) conj(phi_i) D_i c_i`, `D_i` the diagonal of `T(p_i)` (or `T^c`).
    pub fn oracle_ladder(
        &self,
        basis: &OccupationBasis,
        species: Species,
        direction: Direction,
        phi: &OneParticleFn,
    ) -> Result<CsMat<C64>> {
        let d = basis.dim();
        let mut acc: CsMat<C64> = TriMat::new((d, d)).to_csr();
        let w = self.grid.weights();
        let conjugate = species == Species::Antiparticle;
        for i in 0..self.grid.len() {
            let c = phi.values()[i].conj() * w[i].sqrt();
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let term = &self.oracle_t3(basis, i, conjugate) * &basis.mode_annihilator(species, i);
            acc = &acc + &term.map(|v| v * c);
        }
        Ok(match direction {
            Direction::Annihilate => acc,
            Direction::Create => adjoint(&acc),
        })
    }
}

fn map_sectors(psi: &FockVector, f: impl Fn(usize, &[usize]) -> C64 + Sync) -> FockVector {
    let k = psi.grid().len();
    let mut out = FockVector::zero(psi.grid(), psi.nmax());
    for (&(n, m), t) in psi.sectors() {
        let mode = if t.len() > 4096 { Mode::Parallel } else { Mode::Sequential };
        let vals = map_range(mode, t.len(), |idx| {
            let mut slots = vec![0usize; n + m];
            decode(idx, k, &mut slots);
            f(n, &slots) * t[idx]
        });
        out.insert_sector((n, m), vals);
    }
    out
}

/// `T_W(p)` (or `T^c_W(p)`) applied after the contraction.
struct Multiplier3<'a> {
    d: &'a Deform3D,
    conjugate: bool,
}

impl NodeMultiplier for Multiplier3<'_> {
    fn factor(&self, node: usize, out: Sector, slots: &[usize]) -> C64 {
        self.d.value(node, self.conjugate, out.0, slots)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation3 {
    /// `a_W a_W' = e^{-2 pi i lambda k} a_W' a_W`, with `b b` and the adjoints.
    LadderAa,
    /// `a_W b_W' = e^{2 pi i lambda k} b_W' a_W`, with `b a` and the adjoints.
    LadderAb,
    /// `a_W a*_W' = e^{2 pi i lambda k} a*_W' a_W + delta T_W T_W'^*`, with `b b*`.
    LadderAastar,
    /// `a_W b*_W' = e^{-2 pi i lambda k} b*_W' a_W`, with `b a*`.
    LadderAbstar,
    /// `Phi_W(f) Phi_W'(g) = e^{-2 pi i lambda k} Phi_W'(g) Phi_W(f)`.
    FieldPhiPhi,
    /// `Phi_W(f) Phi*_W'(g) = e^{2 pi i lambda k} Phi*_W'(g) Phi_W(f)` up to the boundary integrals.
    FieldPhiPhistar,
}

impl Relation3 {
    pub const ALL: [Relation3; 6] = [
        Relation3::LadderAa,
        Relation3::LadderAb,
        Relation3::LadderAastar,
        Relation3::LadderAbstar,
        Relation3::FieldPhiPhi,
        Relation3::FieldPhiPhistar,
    ];
}

#[derive(Clone, Debug, Serialize)]
pub struct Exchange3Report {
    pub relation: Relation3,
    pub k: i64,
    /// Expected exchange phase `e^{-2 pi i lambda k}` as `[re, im]`.
    pub phase: [f64; 2],
    /// Worst `|| (LHS - RHS) e_j ||` over test vectors.
    pub residual: f64,
    /// For `FieldPhiPhistar`: commutator minus the boundary integrals (an exact grid identity).
    pub algebraic: Option<f64>,
    pub boundary: Option<BoundaryTerms>,
    pub vectors: usize,
}

/// Exchange relation residual of `d` (wedge `W`) against `d2` (wedge `W'`) on every
/// basis vector with `n + m <= nmax - 2`. `phase_offset` is added to the expected phase.
pub fn exchange_residual3(
    d: &Deform3D,
    d2: &Deform3D,
    relation: Relation3,
    inputs: ExchangeInputs<'_>,
    nmax: usize,
    phase_offset: f64,
    mode: Mode,
) -> Result<Exchange3Report> {
    use Direction::*;
    use Species::*;
    if !d.grid.same_as(&d2.grid) {
        return Err(Error::GridMismatch("the two deformations live on different grids".into()));
    }
    let k = k_factor(&d.wedge, &d2.wedge)?;
    let theta = exchange_phase(d.params.lambda, k) * cis(phase_offset);
    let vecs = test_vectors(&d.grid, nmax)?;
    let one = C64::new(1.0, 0.0);

    type Check<'b> = Box<dyn Fn(&FockVector) -> Result<(f64, f64)> + Sync + 'b>;
    let mut boundary = None;
    // `x` on `W` applied last on the left-hand side
    let swap = |x: &dyn Fn(&FockVector) -> Result<FockVector>,
                y: &dyn Fn(&FockVector) -> Result<FockVector>,
                ph: C64,
                v: &FockVector|
     -> Result<FockVector> { x(&y(v)?)?.add_scaled(-ph, &y(&x(v)?)?) };
    let check: Check<'_> = match (relation, inputs) {
        (Relation3::LadderAa, ExchangeInputs::Ladder { phi, psi }) => Box::new(move |v| {
            let mut worst: f64 = 0.0;
            for sp in [Particle, Antiparticle] {
                let r1 = swap(&|x| d.ladder(sp, Annihilate, phi, x), &|x| d2.ladder(sp, Annihilate, psi, x), theta, v)?;
                let r2 = swap(&|x| d.ladder(sp, Create, phi, x), &|x| d2.ladder(sp, Create, psi, x), theta, v)?;
                worst = worst.max(r1.norm()).max(r2.norm());
            }
            Ok((worst, 0.0))
        }),
        (Relation3::LadderAb, ExchangeInputs::Ladder { phi, psi }) => Box::new(move |v| {
            let mut worst: f64 = 0.0;
            for (s1, s2) in [(Particle, Antiparticle), (Antiparticle, Particle)] {
                let ph = theta.conj();
                let r1 = swap(&|x| d.ladder(s1, Annihilate, phi, x), &|x| d2.ladder(s2, Annihilate, psi, x), ph, v)?;
                let r2 = swap(&|x| d.ladder(s1, Create, phi, x), &|x| d2.ladder(s2, Create, psi, x), ph, v)?;
                worst = worst.max(r1.norm()).max(r2.norm());
            }
            Ok((worst, 0.0))
        }),
        (Relation3::LadderAastar, ExchangeInputs::Ladder { phi, psi }) => Box::new(move |v| {
            let c: Vec<C64> = phi.values().iter().zip(psi.values()).map(|(a, b)| a.conj() * b).collect();
            let mut worst: f64 = 0.0;
            for sp in [Particle, Antiparticle] {
                let comm = swap(&|x| d.ladder(sp, Annihilate, phi, x), &|x| d2.ladder(sp, Create, psi, x), theta.conj(), v)?;
                let delta = d.integrate_pair(d2, &c, sp == Antiparticle, v)?;
                worst = worst.max(comm.sub(&delta)?.norm());
            }
            Ok((worst, 0.0))
        }),
        (Relation3::LadderAbstar, ExchangeInputs::Ladder { phi, psi }) => Box::new(move |v| {
            let mut worst: f64 = 0.0;
            for (s1, s2) in [(Particle, Antiparticle), (Antiparticle, Particle)] {
                let r = swap(&|x| d.ladder(s1, Annihilate, phi, x), &|x| d2.ladder(s2, Create, psi, x), theta, v)?;
                worst = worst.max(r.norm());
            }
            Ok((worst, 0.0))
        }),
        (Relation3::FieldPhiPhi, ExchangeInputs::Field { f, g }) => Box::new(move |v| {
            let r = swap(&|x| d.field(Field3::Phi, f, x), &|x| d2.field(Field3::Phi, g, x), theta, v)?;
            Ok((r.norm(), 0.0))
        }),
        (Relation3::FieldPhiPhistar, ExchangeInputs::Field { f, g }) => {
            // f^- g^+ T^c_W T^c_W'^*  and  e^{2 pi i lambda k} f^+ g^- T_W' T_W^*
            let c1: Vec<C64> = f.minus().values().iter().zip(g.plus.values()).map(|(a, b)| a * b).collect();
            let c2: Vec<C64> = f.plus.values().iter().zip(g.minus().values()).map(|(a, b)| a * b).collect();
            let terms = move |v: &FockVector| -> Result<(FockVector, FockVector)> {
                let i1 = d.integrate_pair(d2, &c1, true, v)?;
                let i2 = d2.integrate_pair(d, &c2, false, v)?.scale(theta.conj());
                Ok((i1, i2))
            };
            let mut b = BoundaryTerms { first: 0.0, second: 0.0, difference: 0.0 };
            for v in &vecs {
                let (i1, i2) = terms(v)?;
                b.first = b.first.max(i1.norm());
                b.second = b.second.max(i2.norm());
                b.difference = b.difference.max(i1.sub(&i2)?.norm());
            }
            boundary = Some(b);
            Box::new(move |v| {
                let comm = swap(&|x| d.field(Field3::Phi, f, x), &|x| d2.field(Field3::PhiStar, g, x), theta.conj(), v)?;
                let (i1, i2) = terms(v)?;
                let alg = comm.sub(&i1)?.add_scaled(one, &i2)?;
                Ok((comm.norm(), alg.norm()))
            })
        }
        (r, _) => return Err(Error::InvalidParameter(format!("inputs do not match relation {r:?}"))),
    };
    let res = map_range(mode, vecs.len(), |j| check(&vecs[j]));
    let res = res.into_iter().collect::<Result<Vec<_>>>()?;
    let residual = fold_max(res.iter().map(|r| r.0));
    let algebraic = (relation == Relation3::FieldPhiPhistar).then(|| fold_max(res.iter().map(|r| r.1)));
    let ph = exchange_phase(d.params.lambda, k);
    Ok(Exchange3Report { relation, k, phase: [ph.re, ph.im], residual, algebraic, boundary, vectors: vecs.len() })
}

/// Residuals of the `(theta, p2)` contour shift in the standard-wedge frame.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingShift3Report {
    /// `max |f^-(theta + i pi, p2) - f^+(theta, -p2)|`, relative to `max |f^+|`.
    pub boundary_f: f64,
    /// `max |g^+(theta + i pi, p2) - g^-(theta, -p2)|`, relative to `max |g^-|`.
    pub boundary_g: f64,
    /// `max |I(theta + i pi, p2) - J(theta, -p2)|` relative to `max |J|`, where
    /// `I = f^- g^+ prod R^2` and `J = f^+ g^- prod conj(R)^2`.
    pub pointwise: f64,
    /// Smallest `Im(Q0 p(theta + i sigma) . p_k)` over the samples.
    pub im_min: f64,
    /// `|int I - int J|` over the real `(theta, p2)` plane, relative to `int |J|`.
    pub total: f64,
    pub scale: f64,
}

/// Sample and quadrature sets for [`crossing_shift_check3`].
pub struct ShiftGrid<'a> {
    pub theta_samples: &'a [f64],
    pub p2_samples: &'a [f64],
    pub theta_quad: (&'a [f64], &'a [f64]),
    pub p2_quad: (&'a [f64], &'a [f64]),
}

/// Contour-shift check for `W = W0`: `f` localized in `W0`, `g` in `W0'`,
/// `config` the momenta the `T` operators act on.
pub fn crossing_shift_check3(
    f: &TestPacket,
    g: &TestPacket,
    params: &Deform3DParams,
    config: &[[f64; 3]],
    grid: &ShiftGrid<'_>,
) -> Result<CrossingShift3Report> {
    let m = params.mass;
    let q0 = QMatrix::standard(params.kappa)?;
    for p in config {
        check_shell(m, p)?;
    }
    let mom = |z: C64, p2: f64| -> [C64; 3] {
        let mt = m.hypot(p2);
        [mt * z.cosh(), mt * z.sinh(), C64::new(p2, 0.0)]
    };
    let prod_r2 = |z: C64, p2: f64, conjugate: bool| -> C64 {
        let p = mom(z, p2);
        let mut v = C64::new(1.0, 0.0);
        for pk in config {
            let r = params.r.eval(q0.form_complex(&p, pk));
            let r = if conjugate { r.conj() } else { r };
            v *= r * r;
        }
        v
    };
    let big_i = |z: C64, p2: f64| -> Result<C64> {
        Ok(f.at_rapidity(Sign::Minus, m, z, p2)? * g.at_rapidity(Sign::Plus, m, z, p2)? * prod_r2(z, p2, false))
    };
    let big_j = |x: f64, p2: f64| -> Result<C64> {
        let z = C64::new(x, 0.0);
        Ok(f.at_rapidity(Sign::Plus, m, z, p2)? * g.at_rapidity(Sign::Minus, m, z, p2)? * prod_r2(z, p2, true))
    };
    let (mut bf, mut bg, mut pw) = (0.0_f64, 0.0_f64, 0.0_f64);
    let (mut sf, mut sg, mut sj) = (0.0_f64, 0.0_f64, 0.0_f64);
    for &x in grid.theta_samples {
        for &p2 in grid.p2_samples {
            let up = C64::new(x, PI);
            let re = C64::new(x, 0.0);
            let fp = f.at_rapidity(Sign::Plus, m, re, -p2)?;
            bf = bf.max((f.at_rapidity(Sign::Minus, m, up, p2)? - fp).norm());
            sf = sf.max(fp.norm());
            let gm = g.at_rapidity(Sign::Minus, m, re, -p2)?;
            bg = bg.max((g.at_rapidity(Sign::Plus, m, up, p2)? - gm).norm());
            sg = sg.max(gm.norm());
            let j = big_j(x, -p2)?;
            pw = pw.max((big_i(up, p2)? - j).norm());
            sj = sj.max(j.norm());
        }
    }
    let sigmas: Vec<f64> = (0..=16).map(|i| PI * i as f64 / 16.0).collect();
    let im_min = crate::geom3d::im_positivity_min(&q0, m, grid.theta_samples, grid.p2_samples, &sigmas, config);
    let (tx, tw) = grid.theta_quad;
    let (qx, qw) = grid.p2_quad;
    let mut total = C64::new(0.0, 0.0);
    let mut scale = 0.0;
    for (x, wx) in tx.iter().zip(tw) {
        for (p2, wp) in qx.iter().zip(qw) {
            let w = 0.5 * wx * wp;
            let j = big_j(*x, *p2)?;
            total += w * (big_i(C64::new(*x, 0.0), *p2)? - j);
            scale += w * j.norm();
        }
    }
    let tiny = f64::MIN_POSITIVE;
    Ok(CrossingShift3Report {
        boundary_f: bf / sf.max(tiny),
        boundary_g: bg / sg.max(tiny),
        pointwise: pw / sj.max(tiny),
        im_min,
        total: total.norm() / scale.max(tiny),
        scale,
    })
}

/// Reflection at the edge of the standard wedge:
/// `(J psi)_n^m(p..) = e^{-i pi lambda q^2} conj(psi_n^m(-j p..))`.
/// A phase linear in `q` cannot work for generic `lambda`: `J T_W0(p) J` differs from
/// `T_{jW0}(p)` by `e^{-i pi lambda (2q + 1)}` on charge `q`.
pub fn apply_j3(lambda: f64, psi: &FockVector) -> Result<FockVector> {
    Ok(apply_phase_by_charge(&apply_j(0.0, psi)?, |q| turns(-lambda * (q * q) as f64 / 2.0)))
}

/// `U(a, g)`: maps a vector on `G` to one on the pushed grid `Lambda(g) G` (same weights),
/// `(U psi)(Lambda p..) = e^{i a.(Lambda p..)} e^{i lambda q Omega_n^m(g, Lambda p..)} psi(p..)`.
pub fn representation_u(a: [f64; 3], g: &CoveringElement, lambda: f64, psi: &FockVector) -> Result<FockVector> {
    let grid = psi.grid();
    let mass = grid.mass();
    let l = g.lorentz();
    let pushed = Arc::new(grid.pushed_forward(|p| crate::geom3d::mat_apply(&l, &p))?);
    let omega = pushed.nodes().iter().map(|n| g.wigner_omega(mass, &n.momentum)).collect::<Result<Vec<_>>>()?;
    let trans: Vec<f64> = pushed.nodes().iter().map(|n| minkowski(&a, &n.momentum)).collect();
    let k = grid.len();
    let mut out = FockVector::zero(&pushed, psi.nmax());
    for (&(n, m), t) in psi.sectors() {
        let q = n as f64 - m as f64;
        let mut slots = vec![0usize; n + m];
        let vals = (0..t.len())
            .map(|idx| {
                decode(idx, k, &mut slots);
                let mut ang = 0.0;
                for (s, &i) in slots.iter().enumerate() {
                    ang += trans[i] + lambda * q * if s < n { omega[i] } else { -omega[i] };
                }
                cis(ang) * t[idx]
            })
            .collect();
        out.insert_sector((n, m), vals);
    }
    Ok(out)
}

/// Re-express a vector on a grid whose nodes permute those of `target`.
pub fn reindex_onto(psi: &FockVector, target: &Arc<GridMeasure>) -> Result<FockVector> {
    let src = psi.grid();
    if target.len() != src.len() {
        return Err(Error::GridMismatch("grids differ in size".into()));
    }
    let perm = src
        .nodes()
        .iter()
        .map(|n| {
            let scale = n.momentum[0].max(1.0);
            target.nodes().iter().position(|c| (0..3).all(|k| (c.momentum[k] - n.momentum[k]).abs() <= 1e-10 * scale))
        })
        .collect::<Option<Vec<usize>>>()
        .ok_or_else(|| Error::GridMismatch("source nodes are not a permutation of the target nodes".into()))?;
    for (i, &j) in perm.iter().enumerate() {
        if (src.weights()[i] - target.weights()[j]).abs() > 1e-12 * target.weights()[j] {
            return Err(Error::GridMismatch("permuted nodes carry different weights".into()));
        }
    }
    let k = src.len();
    let mut out = FockVector::zero(target, psi.nmax());
    for (&(n, m), t) in psi.sectors() {
        let mut slots = vec![0usize; n + m];
        let mut v = vec![C64::new(0.0, 0.0); t.len()];
        for (idx, c) in t.iter().enumerate() {
            decode(idx, k, &mut slots);
            slots.iter_mut().for_each(|x| *x = perm[*x]);
            v[crate::fock::encode(&slots, k)] = *c;
        }
        out.insert_sector((n, m), v);
    }
    Ok(out)
}
