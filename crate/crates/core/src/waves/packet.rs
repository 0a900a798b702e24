use crate::fock::{Dimension, GridMeasure, Node, OneParticleFn};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Real `d x d` matrix (`d` = 2 or 3) embedded in a 3x3 array.
pub type Mat = [[f64; 3]; 3];

const OVERFLOW: f64 = 1e250;

/// Minkowski metric signs.
const ETA: [f64; 3] = [1.0, -1.0, -1.0];

/// Gaussian test function
/// `f(x) = A exp(-(x-x0)^T M (x-x0)/2) exp(-i pc.(x-x0))` with the Minkowski
/// product in the plane wave. Its Fourier transform has a closed form that
/// stays valid for complex momenta.
#[derive(Clone, Debug, PartialEq)]
pub struct TestPacket {
    dim: usize,
    amplitude: C64,
    center: [f64; 3],
    momentum_center: [f64; 3],
    /// Inverse squared widths (positive definite).
    m: Mat,
}

/// Packet block of the configuration file. `width` holds one length per
/// spacetime axis (or a single value for all axes).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: Vec<f64>,
    pub momentum_center: Vec<f64>,
    pub width: Vec<f64>,
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

impl PacketSpec {
    pub fn build(&self) -> Result<TestPacket> {
        let d = self.center.len();
        let widths = match self.width.len() {
            1 => vec![self.width[0]; d],
            n if n == d => self.width.clone(),
            n => return Err(Error::Config(format!("width has {n} entries, expected 1 or {d}"))),
        };
        if self.momentum_center.len() != d {
            return Err(Error::Config("center and momentum_center lengths differ".into()));
        }
        TestPacket::diagonal(d, C64::new(self.amplitude[0], self.amplitude[1]), &self.center, &self.momentum_center, &widths)
    }
}

impl TestPacket {
    /// Packet with axis-aligned widths (lengths).
    pub fn diagonal(d: usize, amplitude: C64, center: &[f64], momentum_center: &[f64], widths: &[f64]) -> Result<Self> {
        if d != 2 && d != 3 {
            return Err(Error::InvalidParameter(format!("dimension {d} not supported")));
        }
        if center.len() != d || momentum_center.len() != d || widths.len() != d {
            return Err(Error::InvalidParameter("packet vectors must have the spacetime dimension".into()));
        }
        if widths.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("widths must be positive: {widths:?}")));
        }
        let mut m = [[0.0; 3]; 3];
        for i in 0..d {
            m[i][i] = 1.0 / (widths[i] * widths[i]);
        }
        Ok(TestPacket { dim: d, amplitude, center: pad(center), momentum_center: pad(momentum_center), m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dimension(&self) -> Dimension {
        if self.dim == 2 {
            Dimension::Two
        } else {
            Dimension::Three
        }
    }

    pub fn amplitude(&self) -> C64 {
        self.amplitude
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn momentum_center(&self) -> [f64; 3] {
        self.momentum_center
    }

    pub fn width_matrix(&self) -> Mat {
        self.m
    }

    /// Largest momentum-space standard deviation, `sqrt(lambda_max(M))`.
    pub fn momentum_spread(&self) -> f64 {
        sym_eig_max(&self.m, self.dim).sqrt()
    }

    /// Largest spacetime standard deviation, `1 / sqrt(lambda_min(M))`.
    pub fn spatial_spread(&self) -> f64 {
        1.0 / sym_eig_min(&self.m, self.dim).sqrt()
    }

    /// Position-space value.
    pub fn value(&self, x: &[f64]) -> C64 {
        let d = self.dim;
        let y: Vec<f64> = (0..d).map(|i| x[i] - self.center[i]).collect();
        let quad: f64 = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).map(|(i, j)| y[i] * self.m[i][j] * y[j]).sum();
        let pd: f64 = (0..d).map(|i| ETA[i] * self.momentum_center[i] * y[i]).sum();
        self.amplitude * (-0.5 * quad).exp() * C64::new(0.0, -pd).exp()
    }

    /// `f^+(p) = N int d^dx f(x) e^{i p.x}` with `N = 1/(2 pi)` in 2D and 1 in 3D.
    /// Valid for complex `p`.
    pub fn plus(&self, p: &[C64; 3]) -> Result<C64> {
        let d = self.dim;
        let k: Vec<C64> = (0..d).map(|i| (p[i] - self.momentum_center[i]) * ETA[i]).collect();
        let minv = inverse(&self.m, d);
        let mut q = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                q += k[i] * minv[i][j] * k[j];
            }
        }
        let px: C64 = (0..d).map(|i| p[i] * ETA[i] * self.center[i]).sum();
        let norm = if d == 2 { 1.0 / (2.0 * PI) } else { 1.0 };
        let gauss = (2.0 * PI).powf(d as f64 / 2.0) / det(&self.m, d).sqrt();
        let v = self.amplitude * norm * gauss * (C64::new(0.0, 1.0) * px - 0.5 * q).exp();
        if !v.re.is_finite() || !v.im.is_finite() || v.norm() > OVERFLOW {
            return Err(Error::ContinuationOverflow(format!("f+ at {p:?}")));
        }
        Ok(v)
    }

    /// `f^-(p) = f^+(-p)`.
    pub fn minus(&self, p: &[C64; 3]) -> Result<C64> {
        self.plus(&[-p[0], -p[1], -p[2]])
    }

    fn signed(&self, sign: Sign, p: &[C64; 3]) -> Result<C64> {
        match sign {
            Sign::Plus => self.plus(p),
            Sign::Minus => self.minus(p),
        }
    }

    /// Grid sample of `f^+` or `f^-`.
    pub fn restrict(&self, sign: Sign, grid: &Arc<GridMeasure>) -> Result<OneParticleFn> {
        self.continue_restrict(sign, 0.0, grid)
    }

    /// Grid sample of `f^(+/-)` at `theta + i sigma`, `0 <= sigma <= pi`.
    pub fn continue_restrict(&self, sign: Sign, sigma: f64, grid: &Arc<GridMeasure>) -> Result<OneParticleFn> {
        if !(0.0..=PI).contains(&sigma) {
            return Err(Error::OutsideStrip(format!("sigma = {sigma}")));
        }
        self.check_grid(grid)?;
        let m = grid.mass();
        let vals = grid.nodes().iter().map(|n| self.signed(sign, &continued_momentum(m, n, sigma))).collect::<Result<Vec<_>>>()?;
        OneParticleFn::new(grid.clone(), vals)
    }

    /// Value at the continued point `p(theta + i sigma, p2)`.
    pub fn at_rapidity(&self, sign: Sign, mass: f64, theta: C64, p2: f64) -> Result<C64> {
        let mt = mass.hypot(p2);
        self.signed(sign, &[mt * theta.cosh(), mt * theta.sinh(), C64::new(p2, 0.0)])
    }

    fn check_grid(&self, grid: &GridMeasure) -> Result<()> {
        let want = if self.dim == 2 { Dimension::Two } else { Dimension::Three };
        if grid.dimension() != want {
            return Err(Error::GridMismatch(format!("{}D packet on a {:?} grid", self.dim, grid.dimension())));
        }
        Ok(())
    }

    /// `(alpha_j f)(x) = conj f(j x)` with `j = -1` (2D) or `diag(-1, -1, 1)` (3D).
    pub fn reflect(&self) -> TestPacket {
        let j = self.j_diag();
        let mut out = self.clone();
        out.amplitude = self.amplitude.conj();
        for i in 0..self.dim {
            out.center[i] = j[i] * self.center[i];
            out.momentum_center[i] = -j[i] * self.momentum_center[i];
            for k in 0..self.dim {
                out.m[i][k] = j[i] * self.m[i][k] * j[k];
            }
        }
        out
    }

    fn j_diag(&self) -> [f64; 3] {
        if self.dim == 2 {
            [-1.0, -1.0, 0.0]
        } else {
            [-1.0, -1.0, 1.0]
        }
    }

    /// Complex conjugate packet `conj f`.
    pub fn conj(&self) -> TestPacket {
        let mut out = self.clone();
        out.amplitude = self.amplitude.conj();
        for i in 0..self.dim {
            out.momentum_center[i] = -self.momentum_center[i];
        }
        out
    }

    /// `(alpha_(a, L) f)(x) = f(L^{-1}(x - a))`.
    pub fn transform(&self, a: &[f64], lambda: &Mat) -> Result<TestPacket> {
        let d = self.dim;
        if a.len() != d {
            return Err(Error::InvalidParameter("translation has wrong length".into()));
        }
        let linv = inverse(lambda, d);
        let mut out = self.clone();
        out.center = pad(&add(&mat_vec3(lambda, &self.center, d), a));
        out.momentum_center = mat_vec3(lambda, &self.momentum_center, d);
        // M' = L^{-T} M L^{-1}
        let mut mp = [[0.0; 3]; 3];
        for i in 0..d {
            for j in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        s += linv[k][i] * self.m[k][l] * linv[l][j];
                    }
                }
                mp[i][j] = s;
            }
        }
        // symmetrize against rounding
        for i in 0..d {
            for j in 0..i {
                let v = 0.5 * (mp[i][j] + mp[j][i]);
                mp[i][j] = v;
                mp[j][i] = v;
            }
        }
        out.m = mp;
        Ok(out)
    }

    /// Whether the effective momentum support `pc +- k sigma_p` stays clear of
    /// the lower mass shell (all points there have `p0 <= -m`).
    pub fn avoids_lower_shell(&self, mass: f64, k: f64) -> bool {
        self.momentum_center[0] + mass > k * self.momentum_spread()
    }

    /// Time-evolved packet: `f_t` has Fourier transform `f~(p) e^{i(p0 - w_p) t}`.
    pub fn time_evolve(&self, t: f64) -> EvolvedPacket {
        EvolvedPacket { packet: self.clone(), t }
    }

    /// Velocity support `{p_vec / w_p}` of the effective momentum support,
    /// sampled on the boundary and interior of the box `pc +- k sigma`.
    pub fn velocity_support(&self, mass: f64, k: f64) -> VelocitySet {
        let d = self.dim;
        let sig: Vec<f64> = (1..d).map(|i| k * self.m[i][i].sqrt()).collect();
        let steps = 8;
        let mut pts = Vec::new();
        let lin = |c: f64, s: f64, j: usize| c - s + 2.0 * s * j as f64 / steps as f64;
        if d == 2 {
            for j in 0..=steps {
                let p1 = lin(self.momentum_center[1], sig[0], j);
                pts.push([p1 / mass.hypot(p1), 0.0]);
            }
        } else {
            for j in 0..=steps {
                for l in 0..=steps {
                    let p1 = lin(self.momentum_center[1], sig[0], j);
                    let p2 = lin(self.momentum_center[2], sig[1], l);
                    let w = (mass * mass + p1 * p1 + p2 * p2).sqrt();
                    pts.push([p1 / w, p2 / w]);
                }
            }
        }
        VelocitySet { points: pts }
    }
}

/// Sign selecting `f^+` or `f^-`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// On-shell momentum at `theta + i sigma` for a grid node.
pub fn continued_momentum(mass: f64, node: &Node, sigma: f64) -> [C64; 3] {
    let mt = mass.hypot(node.p2);
    let z = C64::new(node.theta, sigma);
    [mt * z.cosh(), mt * z.sinh(), C64::new(node.p2, 0.0)]
}

#[derive(Clone, Debug)]
pub struct EvolvedPacket {
    packet: TestPacket,
    t: f64,
}

impl EvolvedPacket {
    /// Fourier transform of `f_t` at a (possibly off-shell) real momentum.
    pub fn transform_at(&self, p: &[f64; 3], mass: f64) -> Result<C64> {
        let d = self.packet.dim;
        let spatial: f64 = (1..d).map(|i| p[i] * p[i]).sum();
        let omega = (mass * mass + spatial).sqrt();
        let phase = C64::new(0.0, (p[0] - omega) * self.t).exp();
        Ok(self.packet.plus(&[p[0].into(), p[1].into(), p[2].into()])? * phase)
    }

    /// `(f_t)^+` on the grid.
    pub fn restrict_plus(&self, grid: &Arc<GridMeasure>) -> Result<OneParticleFn> {
        let vals = grid.nodes().iter().map(|n| self.transform_at(&n.momentum, grid.mass())).collect::<Result<Vec<_>>>()?;
        OneParticleFn::new(grid.clone(), vals)
    }
}

/// Sampled velocity support `{(1, v)}`; only the spatial parts are stored.
#[derive(Clone, Debug)]
pub struct VelocitySet {
    pub points: Vec<[f64; 2]>,
}

impl VelocitySet {
    /// Whether every difference `(0, v - u)`, `v` in `self`, `u` in `other`,
    /// lies in the wedge given by `contains`.
    pub fn difference_in(&self, other: &VelocitySet, contains: impl Fn([f64; 3]) -> bool) -> bool {
        self.points.iter().all(|v| other.points.iter().all(|u| contains([0.0, v[0] - u[0], v[1] - u[1]])))
    }
}

/// Standard right wedge `x1 > |x0|`.
pub fn in_right_wedge(x: [f64; 3]) -> bool {
    x[1] > x[0].abs()
}

fn pad(v: &[f64]) -> [f64; 3] {
    let mut o = [0.0; 3];
    o[..v.len()].copy_from_slice(v);
    o
}

fn add(a: &[f64; 3], b: &[f64]) -> Vec<f64> {
    b.iter().enumerate().map(|(i, x)| a[i] + x).collect()
}

fn mat_vec3(m: &Mat, v: &[f64; 3], d: usize) -> [f64; 3] {
    let mut o = [0.0; 3];
    for i in 0..d {
        o[i] = (0..d).map(|j| m[i][j] * v[j]).sum();
    }
    o
}

pub(crate) fn det(m: &Mat, d: usize) -> f64 {
    if d == 2 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    } else {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

pub(crate) fn inverse(m: &Mat, d: usize) -> Mat {
    let dt = det(m, d);
    let mut o = [[0.0; 3]; 3];
    if d == 2 {
        o[0][0] = m[1][1] / dt;
        o[0][1] = -m[0][1] / dt;
        o[1][0] = -m[1][0] / dt;
        o[1][1] = m[0][0] / dt;
    } else {
        for i in 0..3 {
            for j in 0..3 {
                let (a, b) = ((j + 1) % 3, (j + 2) % 3);
                let (c, e) = ((i + 1) % 3, (i + 2) % 3);
                o[i][j] = (m[a][c] * m[b][e] - m[a][e] * m[b][c]) / dt;
            }
        }
    }
    o
}

/// Extreme eigenvalues of a symmetric 2x2 / 3x3 matrix by Jacobi sweeps.
fn sym_eigs(m: &Mat, d: usize) -> Vec<f64> {
    let mut a = *m;
    for _ in 0..50 {
        let mut off = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let th = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
                let (s, c) = th.sin_cos();
                let mut r = [[0.0; 3]; 3];
                for (i, row) in r.iter_mut().enumerate().take(d) {
                    row[i] = 1.0;
                }
                r[p][p] = c;
                r[q][q] = c;
                r[p][q] = s;
                r[q][p] = -s;
                // a <- r^T a r
                let mut t = [[0.0; 3]; 3];
                for i in 0..d {
                    for j in 0..d {
                        t[i][j] = (0..d).map(|k| a[i][k] * r[k][j]).sum();
                    }
                }
                for i in 0..d {
                    for j in 0..d {
                        a[i][j] = (0..d).map(|k| r[k][i] * t[k][j]).sum();
                    }
                }
            }
        }
    }
    (0..d).map(|i| a[i][i]).collect()
}

fn sym_eig_max(m: &Mat, d: usize) -> f64 {
    sym_eigs(m, d).into_iter().fold(f64::MIN, f64::max)
}

fn sym_eig_min(m: &Mat, d: usize) -> f64 {
    sym_eigs(m, d).into_iter().fold(f64::MAX, f64::min)
}
