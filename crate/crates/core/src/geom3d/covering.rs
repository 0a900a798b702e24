use crate::phase::arg;
use crate::{Error, Result, C64};
use std::f64::consts::PI;

/// Real 3x3 matrix acting on `(x0, x1, x2)`.
pub type Mat3 = [[f64; 3]; 3];

/// Minkowski product with signature `(+, -, -)`.
pub fn minkowski(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut o = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            o[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    o
}

pub fn mat_apply(a: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    let mut o = [0.0; 3];
    for i in 0..3 {
        o[i] = (0..3).map(|k| a[i][k] * v[k]).sum();
    }
    o
}

pub fn mat_max_diff(a: &Mat3, b: &Mat3) -> f64 {
    let mut m = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

/// Element `(gamma, omega)` of the universal covering of the 2+1 Lorentz group.
///
/// `|gamma| < 1`; `omega` is unbounded and carries the winding. The product is
/// Bargmann's law and the projection acts on the mass shell through the disk
/// coordinate `z(p) = (p1 + i p2) / (p0 + m)` as
/// `z -> e^{i omega} (z + gamma) / (1 + conj(gamma) z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoveringElement {
    gamma: C64,
    omega: f64,
}

impl CoveringElement {
    pub const IDENTITY: CoveringElement = CoveringElement { gamma: C64 { re: 0.0, im: 0.0 }, omega: 0.0 };

    pub fn new(gamma: C64, omega: f64) -> Result<Self> {
        if !(gamma.norm() < 1.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("covering element needs |gamma| < 1, got {gamma}")));
        }
        Ok(CoveringElement { gamma, omega })
    }

    /// Rotation by `omega` in the `x1 x2` plane (counter-clockwise).
    pub fn rotation(omega: f64) -> Self {
        CoveringElement { gamma: C64::new(0.0, 0.0), omega }
    }

    /// Boost of rapidity `t` along `x1`.
    pub fn boost1(t: f64) -> Self {
        CoveringElement { gamma: C64::new((t / 2.0).tanh(), 0.0), omega: 0.0 }
    }

    /// Boost of rapidity `t` along `x2`.
    pub fn boost2(t: f64) -> Self {
        CoveringElement { gamma: C64::new(0.0, (t / 2.0).tanh()), omega: 0.0 }
    }

    /// Pure boost of rapidity `chi` in the spatial direction at angle `phi`.
    pub fn boost(chi: f64, phi: f64) -> Self {
        CoveringElement { gamma: C64::from_polar((chi / 2.0).tanh(), phi), omega: 0.0 }
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Bargmann product `self * other`.
    pub fn mul(&self, other: &CoveringElement) -> CoveringElement {
        let (g1, w1) = (self.gamma, self.omega);
        let (g2, w2) = (other.gamma, other.omega);
        let rot = C64::from_polar(1.0, -w2);
        let den = C64::new(1.0, 0.0) + g1 * g2.conj() * rot;
        CoveringElement { gamma: (g2 + g1 * rot) / den, omega: w1 + w2 + 2.0 * arg(den) }
    }

    pub fn inverse(&self) -> CoveringElement {
        CoveringElement { gamma: -self.gamma * C64::from_polar(1.0, self.omega), omega: -self.omega }
    }

    /// Image under the reflection `j~ (gamma, omega) j~ = (conj gamma, -omega)`.
    pub fn jtilde(&self) -> CoveringElement {
        CoveringElement { gamma: self.gamma.conj(), omega: -self.omega }
    }

    /// Distance in the chart, `|dgamma| + |domega|`.
    pub fn chart_distance(&self, other: &CoveringElement) -> f64 {
        (self.gamma - other.gamma).norm() + (self.omega - other.omega).abs()
    }

    /// Lorentz matrix: rotation by `omega` after the pure boost with disk parameter `gamma`.
    pub fn lorentz(&self) -> Mat3 {
        let chi = 2.0 * self.gamma.norm().atanh();
        let phi = arg(self.gamma);
        let (n1, n2) = (phi.cos(), phi.sin());
        let (ch, sh) = (chi.cosh(), chi.sinh());
        let b = [
            [ch, sh * n1, sh * n2],
            [sh * n1, 1.0 + (ch - 1.0) * n1 * n1, (ch - 1.0) * n1 * n2],
            [sh * n2, (ch - 1.0) * n1 * n2, 1.0 + (ch - 1.0) * n2 * n2],
        ];
        let (c, s) = (self.omega.cos(), self.omega.sin());
        let r = [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]];
        mat_mul(&r, &b)
    }

    /// Action on a forward on-shell momentum of mass `mass` (disk route).
    pub fn act(&self, mass: f64, p: &[f64; 3]) -> Result<[f64; 3]> {
        check_shell(mass, p)?;
        let z = disk(mass, p);
        let w = C64::from_polar(1.0, self.omega) * (z + self.gamma) / (C64::new(1.0, 0.0) + self.gamma.conj() * z);
        Ok(from_disk(mass, w))
    }

    /// Wigner rotation angle `Omega(g, p)`.
    pub fn wigner_omega(&self, mass: f64, p: &[f64; 3]) -> Result<f64> {
        check_shell(mass, p)?;
        let q = mat_apply(&self.inverse().lorentz(), p);
        let gp = disk(mass, p);
        let gq = disk(mass, &q);
        let one = C64::new(1.0, 0.0);
        let rot = C64::from_polar(1.0, -self.omega);
        let d = one - gp * self.gamma.conj() * rot;
        let big = (self.gamma - gp * rot) / d;
        Ok(self.omega + 2.0 * arg(d) + 2.0 * arg(one + big * gq.conj()))
    }
}

impl std::ops::Mul for CoveringElement {
    type Output = CoveringElement;
    fn mul(self, rhs: CoveringElement) -> CoveringElement {
        CoveringElement::mul(&self, &rhs)
    }
}

/// Disk coordinate `gamma(p) = (p1 + i p2) / (p0 + m)` of the rest-frame boost to `p`.
pub fn disk(mass: f64, p: &[f64; 3]) -> C64 {
    C64::new(p[1], p[2]) / (p[0] + mass)
}

fn from_disk(mass: f64, z: C64) -> [f64; 3] {
    let a = z.norm_sqr();
    let s = 2.0 * mass * z / (1.0 - a);
    [mass * (1.0 + a) / (1.0 - a), s.re, s.im]
}

/// Forward mass-shell check with a relative tolerance.
pub fn check_shell(mass: f64, p: &[f64; 3]) -> Result<()> {
    let sq = minkowski(p, p);
    if !(p[0] > 0.0) || (sq - mass * mass).abs() > 1e-9 * p[0] * p[0].max(1.0) {
        return Err(Error::OffShell(*p));
    }
    Ok(())
}

/// `r(pi)` on momenta: `(p0, -p1, -p2)`.
pub fn rotate_pi(p: &[f64; 3]) -> [f64; 3] {
    [p[0], -p[1], -p[2]]
}

/// Rotation angle of the `x1 x2` plane, folded into `(-pi, pi]`.
pub(crate) fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const M: f64 = 1.3;

    fn rand_el(r: &mut ChaCha8Rng) -> CoveringElement {
        let g = C64::from_polar(r.random_range(0.0..0.95), r.random_range(-PI..PI));
        CoveringElement::new(g, r.random_range(-10.0..10.0)).unwrap()
    }

    fn rand_p(r: &mut ChaCha8Rng) -> [f64; 3] {
        let th: f64 = r.random_range(-2.5..2.5);
        let p2: f64 = r.random_range(-3.0..3.0);
        let mt = M.hypot(p2);
        [mt * th.cosh(), mt * th.sinh(), p2]
    }

    #[test]
    fn rotations_compose_additively() {
        let g = CoveringElement::rotation(0.7) * CoveringElement::rotation(2.9);
        assert_eq!(g.gamma(), C64::new(0.0, 0.0));
        assert!((g.omega() - 3.6).abs() < 1e-15);
    }

    #[test]
    fn boost_times_rotation_substitutes() {
        let gamma = C64::new(0.3, -0.4);
        let g = CoveringElement::new(gamma, 0.0).unwrap() * CoveringElement::rotation(1.1);
        assert!((g.gamma() - gamma * C64::from_polar(1.0, -1.1)).norm() < 1e-15);
        assert!((g.omega() - 1.1).abs() < 1e-15);
    }

    #[test]
    fn group_axioms() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (a, b, c) = (rand_el(&mut r), rand_el(&mut r), rand_el(&mut r));
            assert!(((a * b) * c).chart_distance(&(a * (b * c))) < 1e-12);
            assert!((a * a.inverse()).chart_distance(&CoveringElement::IDENTITY) < 1e-12);
            assert!((a * CoveringElement::IDENTITY).chart_distance(&a) < 1e-15);
        }
    }

    #[test]
    fn matrix_matches_disk_action_and_is_homomorphic() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let (a, b) = (rand_el(&mut r), rand_el(&mut r));
            let p = rand_p(&mut r);
            let via_disk = a.act(M, &p).unwrap();
            let via_mat = mat_apply(&a.lorentz(), &p);
            let scale = p[0] * (1.0 + a.gamma().norm()) / (1.0 - a.gamma().norm());
            for k in 0..3 {
                assert!((via_disk[k] - via_mat[k]).abs() < 1e-10 * scale);
            }
            assert!(mat_max_diff(&(a * b).lorentz(), &mat_mul(&a.lorentz(), &b.lorentz())) < 1e-8);
            let q = (a * b).act(M, &p).unwrap();
            let q2 = a.act(M, &b.act(M, &p).unwrap()).unwrap();
            for k in 0..3 {
                assert!((q[k] - q2[k]).abs() < 1e-10 * q[0].max(1.0));
            }
            assert!((minkowski(&q, &q) - M * M).abs() < 1e-10 * q[0] * q[0]);
        }
    }

    #[test]
    fn rotation_by_pi_and_two_pi() {
        let p = [M.hypot(0.5).hypot(0.2), 0.2, 0.5];
        let q = CoveringElement::rotation(PI).act(M, &p).unwrap();
        assert!((q[1] + 0.2).abs() < 1e-14 && (q[2] + 0.5).abs() < 1e-14);
        let q = CoveringElement::rotation(2.0 * PI).act(M, &p).unwrap();
        assert!((q[1] - 0.2).abs() < 1e-14 && (q[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn wigner_rotation_identities() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (a, b) = (rand_el(&mut r), rand_el(&mut r));
            let p = rand_p(&mut r);
            let w = r.random_range(-20.0..20.0);
            assert!((CoveringElement::rotation(w).wigner_omega(M, &p).unwrap() - w).abs() < 1e-12);
            let q = a.inverse().act(M, &p).unwrap();
            let lhs = (a * b).wigner_omega(M, &p).unwrap();
            let rhs = a.wigner_omega(M, &p).unwrap() + b.wigner_omega(M, &q).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn off_shell_rejected() {
        assert!(CoveringElement::IDENTITY.act(M, &[1.0, 0.5, 0.0]).is_err());
        assert!(CoveringElement::IDENTITY.wigner_omega(M, &[-M, 0.0, 0.0]).is_err());
    }

    #[test]
    fn jtilde_is_involutive() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a = rand_el(&mut r);
            assert_eq!(a.jtilde().jtilde(), a);
        }
        assert_eq!(CoveringElement::rotation(0.4).jtilde(), CoveringElement::rotation(-0.4));
    }
}
