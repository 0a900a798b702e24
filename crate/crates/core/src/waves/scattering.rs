//! Two-particle scattering states and S-matrix elements in three dimensions.
//!
//! Out state `a*_W(f^+) a*_W'(g^+) Omega`, in state `a*_W'(f^+) a*_W(g^+) Omega`,
//! with `W'` a complement of `W` (winding `k`). The kernels below are the ones the
//! operator definitions produce: conj R in the out kernel, R in the in kernel.

use super::{Sign, TestPacket, DEFAULT_SUPPORT_K};
use crate::deform3d::{eval_uw, exchange_phase, Deform3D, Deform3DParams};
use crate::fock::{Direction, FockVector, GridMeasure, OneParticleFn, Species};
use crate::geom3d::{k_factor, mat_apply, QMatrix, WedgePath};
use crate::quad::Rule;
use crate::{Error, Result, C64};
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct ScatteringSetup {
    params: Deform3DParams,
    w: WedgePath,
    w2: WedgePath,
    k: i64,
    q: QMatrix,
}

impl ScatteringSetup {
    pub fn new(params: Deform3DParams, w: WedgePath, w2: WedgePath) -> Result<Self> {
        let k = k_factor(&w, &w2)?;
        let q = QMatrix::of(&w, params.kappa())?;
        Ok(ScatteringSetup { params, w, w2, k, q })
    }

    /// `W0` against `W0' = r(pi) W0` (`k = 1`).
    pub fn standard(params: Deform3DParams) -> Result<Self> {
        let w0 = WedgePath::standard();
        let w1 = w0.complement(1);
        Self::new(params, w0, w1)
    }

    pub fn params(&self) -> &Deform3DParams {
        &self.params
    }

    pub fn wedges(&self) -> (&WedgePath, &WedgePath) {
        (&self.w, &self.w2)
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    /// Same data with the roles of `W` and `W'` exchanged.
    pub fn swapped(&self) -> Result<Self> {
        Self::new(self.params.clone(), self.w2.clone(), self.w.clone())
    }

    /// `e^{2 pi i lambda k} R(Qp1.p2)^2`, `Q = Q(W)`.
    pub fn two_body_phase(&self, p1: &[f64; 3], p2: &[f64; 3]) -> C64 {
        let r = self.params.r().at(self.q.form(p1, p2));
        exchange_phase(self.params.lambda(), self.k).conj() * r * r
    }

    /// `conj(u_W(p1))^2 conj(u_W(p2)) conj(u_W'(p2)) conj(R(Qp1.p2))`.
    pub fn out_kernel(&self, p1: &[f64; 3], p2: &[f64; 3]) -> Result<C64> {
        let (u1, u2, v2) = self.us(p1, p2, false)?;
        let r = self.params.r().at(self.q.form(p1, p2));
        Ok((u1 * u1 * u2 * v2 * r).conj())
    }

    /// `conj(u_W'(p1))^2 conj(u_W'(p2)) conj(u_W(p2)) R(Qp1.p2)`.
    pub fn in_kernel(&self, p1: &[f64; 3], p2: &[f64; 3]) -> Result<C64> {
        let (u1, u2, v2) = self.us(p1, p2, true)?;
        let r = self.params.r().at(self.q.form(p1, p2));
        Ok((u1 * u1 * u2 * v2).conj() * r)
    }

    fn us(&self, p1: &[f64; 3], p2: &[f64; 3], swap: bool) -> Result<(C64, C64, C64)> {
        let (a, b) = if swap { (&self.w2, &self.w) } else { (&self.w, &self.w2) };
        Ok((eval_uw(&self.params, a, p1)?, eval_uw(&self.params, a, p2)?, eval_uw(&self.params, b, p2)?))
    }
}

/// `x in W` iff `Lambda(L_W)^{-1} x` lies in the standard right wedge.
pub fn wedge_contains(w: &WedgePath, x: [f64; 3]) -> bool {
    let y = mat_apply(&w.element().inverse().lorentz(), &x);
    y[1] > y[0].abs()
}

/// `Gamma(f) - Gamma(g) in W` on the effective supports.
pub fn velocity_ordered(f: &TestPacket, g: &TestPacket, w: &WedgePath, mass: f64) -> bool {
    f.velocity_support(mass, DEFAULT_SUPPORT_K).difference_in(&g.velocity_support(mass, DEFAULT_SUPPORT_K), |x| wedge_contains(w, x))
}

/// A two-particle state and whether its velocity precondition held.
#[derive(Clone, Debug)]
pub struct TwoParticleState {
    pub state: FockVector,
    pub velocity_ordered: bool,
}

fn deformations(setup: &ScatteringSetup, grid: &Arc<GridMeasure>) -> Result<(Deform3D, Deform3D)> {
    Ok((Deform3D::new(setup.params.clone(), &setup.w, grid)?, Deform3D::new(setup.params.clone(), &setup.w2, grid)?))
}

fn pair_state(first: &Deform3D, second: &Deform3D, species: Species, f: &OneParticleFn, g: &OneParticleFn) -> Result<FockVector> {
    let vac = FockVector::vacuum(first.grid(), 2);
    let one = second.ladder(species, Direction::Create, g, &vac)?;
    first.ladder(species, Direction::Create, f, &one)
}

/// `a*_W(f^+) a*_W'(g^+) Omega` built from the deformed operators.
pub fn out_state(setup: &ScatteringSetup, f: &TestPacket, g: &TestPacket, grid: &Arc<GridMeasure>) -> Result<TwoParticleState> {
    let (d, d2) = deformations(setup, grid)?;
    let state = pair_state(&d, &d2, Species::Particle, &f.restrict(Sign::Plus, grid)?, &g.restrict(Sign::Plus, grid)?)?;
    Ok(TwoParticleState { state, velocity_ordered: velocity_ordered(f, g, &setup.w, grid.mass()) })
}

/// `a*_W'(f^+) a*_W(g^+) Omega`.
pub fn in_state(setup: &ScatteringSetup, f: &TestPacket, g: &TestPacket, grid: &Arc<GridMeasure>) -> Result<TwoParticleState> {
    let (d, d2) = deformations(setup, grid)?;
    let state = pair_state(&d2, &d, Species::Particle, &f.restrict(Sign::Plus, grid)?, &g.restrict(Sign::Plus, grid)?)?;
    Ok(TwoParticleState { state, velocity_ordered: velocity_ordered(f, g, &setup.w, grid.mass()) })
}

/// Antiparticle analogue of [`out_state`] (`b*` in place of `a*`).
pub fn out_state_antiparticle(setup: &ScatteringSetup, f: &TestPacket, g: &TestPacket, grid: &Arc<GridMeasure>) -> Result<FockVector> {
    let (d, d2) = deformations(setup, grid)?;
    pair_state(&d, &d2, Species::Antiparticle, &f.restrict(Sign::Plus, grid)?, &g.restrict(Sign::Plus, grid)?)
}

/// Antiparticle analogue of [`in_state`].
pub fn in_state_antiparticle(setup: &ScatteringSetup, f: &TestPacket, g: &TestPacket, grid: &Arc<GridMeasure>) -> Result<FockVector> {
    let (d, d2) = deformations(setup, grid)?;
    pair_state(&d2, &d, Species::Antiparticle, &f.restrict(Sign::Plus, grid)?, &g.restrict(Sign::Plus, grid)?)
}

fn kernel_state(
    grid: &Arc<GridMeasure>,
    f: &TestPacket,
    g: &TestPacket,
    kernel: impl Fn(&[f64; 3], &[f64; 3]) -> Result<C64>,
) -> Result<FockVector> {
    let fp = f.restrict(Sign::Plus, grid)?;
    let gp = g.restrict(Sign::Plus, grid)?;
    let nodes = grid.nodes();
    let k = nodes.len();
    let mut table = vec![C64::new(0.0, 0.0); k * k];
    for i in 0..k {
        for j in 0..k {
            let (p1, p2) = (&nodes[i].momentum, &nodes[j].momentum);
            table[i * k + j] =
                FRAC_1_SQRT_2 * (kernel(p1, p2)? * fp.values()[i] * gp.values()[j] + kernel(p2, p1)? * fp.values()[j] * gp.values()[i]);
        }
    }
    FockVector::from_fn(grid, 2, (2, 0), |s| table[s[0] * k + s[1]])
}

/// Out state from the explicit kernel, `(1/sqrt 2)(K(p1,p2) f(p1) g(p2) + K(p2,p1) f(p2) g(p1))`.
pub fn out_state_kernel(setup: &ScatteringSetup, f: &TestPacket, g: &TestPacket, grid: &Arc<GridMeasure>) -> Result<FockVector> {
    kernel_state(grid, f, g, |a, b| setup.out_kernel(a, b))
}

pub fn in_state_kernel(setup: &ScatteringSetup, f: &TestPacket, g: &TestPacket, grid: &Arc<GridMeasure>) -> Result<FockVector> {
    kernel_state(grid, f, g, |a, b| setup.in_kernel(a, b))
}

/// `int dmu dmu e^{2 pi i lambda k} R(p1 Q p2)^2 conj(f^+ g^+) h^+ k^+` by quadrature on `grid x grid`.
/// Fails unless `Gamma(f) - Gamma(g)` and `Gamma(h) - Gamma(k)` lie in `W`.
pub fn smatrix_element(setup: &ScatteringSetup, [f, g, h, k]: [&TestPacket; 4], grid: &Arc<GridMeasure>) -> Result<C64> {
    let m = grid.mass();
    if !velocity_ordered(f, g, &setup.w, m) || !velocity_ordered(h, k, &setup.w, m) {
        return Err(Error::Precondition("velocity supports are not ordered along the wedge".into()));
    }
    double_quadrature(setup, [f, g, h, k], grid, grid)
}

fn double_quadrature(setup: &ScatteringSetup, [f, g, h, k]: [&TestPacket; 4], g1: &Arc<GridMeasure>, g2: &Arc<GridMeasure>) -> Result<C64> {
    let a = f.restrict(Sign::Plus, g1)?;
    let c = h.restrict(Sign::Plus, g1)?;
    let b = g.restrict(Sign::Plus, g2)?;
    let d = k.restrict(Sign::Plus, g2)?;
    let mut s = C64::new(0.0, 0.0);
    for (i, n1) in g1.nodes().iter().enumerate() {
        let left = g1.weights()[i] * a.values()[i].conj() * c.values()[i];
        for (j, n2) in g2.nodes().iter().enumerate() {
            let right = g2.weights()[j] * b.values()[j].conj() * d.values()[j];
            s += left * right * setup.two_body_phase(&n1.momentum, &n2.momentum);
        }
    }
    Ok(s)
}

/// `<out(f, g), in(h, k)>` from the operator-built states.
pub fn smatrix_from_states(setup: &ScatteringSetup, [f, g, h, k]: [&TestPacket; 4], grid: &Arc<GridMeasure>) -> Result<C64> {
    out_state(setup, f, g, grid)?.state.inner(&in_state(setup, h, k, grid)?.state)
}

/// Phase extracted from narrow packets against `e^{2 pi i lambda k} R(p1 Q p2)^2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NarrowPhase {
    pub p1: [f64; 3],
    pub p2: [f64; 3],
    pub k: i64,
    pub measured: C64,
    pub predicted: C64,
    pub relative: f64,
}

/// Narrow Gaussian packets around the spatial momenta `p1`, `p2` (width `width` in
/// length units). The element is evaluated through the out/in kernels on local product
/// grids and divided by `||f^+||^2 ||g^+||^2`.
pub fn narrow_packet_phase(setup: &ScatteringSetup, p1: [f64; 2], p2: [f64; 2], width: f64, nodes: usize) -> Result<NarrowPhase> {
    let m = setup.params.mass();
    let on_shell = |p: [f64; 2]| [(m * m + p[0] * p[0] + p[1] * p[1]).sqrt(), p[0], p[1]];
    let (q1, q2) = (on_shell(p1), on_shell(p2));
    let f = TestPacket::diagonal(3, C64::new(1.0, 0.0), &[0.0; 3], &q1, &[width; 3])?;
    let g = TestPacket::diagonal(3, C64::new(1.0, 0.0), &[0.0; 3], &q2, &[width; 3])?;
    if !velocity_ordered(&f, &g, &setup.w, m) {
        return Err(Error::Precondition("narrow packets are not velocity ordered along the wedge".into()));
    }
    let local = |q: &[f64; 3]| -> Result<Arc<GridMeasure>> {
        // |f^+|^2 has momentum spread 1/(sqrt 2 width); 10 of those on each side
        let s = 10.0 / (std::f64::consts::SQRT_2 * width);
        let th = (q[1] / m.hypot(q[2])).asinh();
        let dth = s / q[0];
        Ok(Arc::new(GridMeasure::shell3_range(m, Rule::GaussLegendre, nodes, [th - dth, th + dth], nodes, [q[2] - s, q[2] + s])?))
    };
    let (g1, g2) = (local(&q1)?, local(&q2)?);
    let (a, b) = (f.restrict(Sign::Plus, &g1)?, g.restrict(Sign::Plus, &g2)?);
    let mut s = C64::new(0.0, 0.0);
    for (i, n1) in g1.nodes().iter().enumerate() {
        for (j, n2) in g2.nodes().iter().enumerate() {
            let x = setup.out_kernel(&n1.momentum, &n2.momentum)?;
            let y = setup.in_kernel(&n1.momentum, &n2.momentum)?;
            s += g1.weights()[i] * g2.weights()[j] * (a.values()[i] * b.values()[j]).norm_sqr() * x.conj() * y;
        }
    }
    let measured = s / (a.norm().powi(2) * b.norm().powi(2));
    let predicted = setup.two_body_phase(&q1, &q2);
    Ok(NarrowPhase { p1: q1, p2: q2, k: setup.k, measured, predicted, relative: (measured - predicted).norm() / predicted.norm() })
}

/// CSV with columns `p1_1, p1_2, p2_1, p2_2, k, re_s, im_s, abs_s`.
pub fn smatrix_csv(rows: &[NarrowPhase]) -> Result<String> {
    #[derive(Serialize)]
    struct Row {
        p1_1: f64,
        p1_2: f64,
        p2_1: f64,
        p2_2: f64,
        k: i64,
        re_s: f64,
        im_s: f64,
        abs_s: f64,
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        let s = r.measured;
        w.serialize(Row { p1_1: r.p1[1], p1_2: r.p1[2], p2_1: r.p2[1], p2_2: r.p2[2], k: r.k, re_s: s.re, im_s: s.im, abs_s: s.norm() })
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}
