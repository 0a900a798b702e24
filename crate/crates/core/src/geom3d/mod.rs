//! Covering group of the 2+1 Lorentz group, Wigner rotations, paths of
//! wedges, winding numbers and the deformation matrices `Q(W)`.

mod covering;
mod wedge;

pub use covering::{check_shell, disk, mat_apply, mat_max_diff, mat_mul, minkowski, rotate_pi, CoveringElement, Mat3};
pub use wedge::{k_factor, parse_word, winding_number, Generator, WedgePath, E0, MAX_ANGLE_STEP};

use crate::{Error, Result, C64};

/// Default scale of `Q0`.
pub const DEFAULT_KAPPA: f64 = 1.0;

/// Deformation matrix `Q(W) = L_W Q0 L_W^{-1}`,
/// `Q0 = kappa [[0,1,0],[1,0,0],[0,0,0]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QMatrix {
    m: Mat3,
    kappa: f64,
}

impl QMatrix {
    pub fn standard(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        Ok(QMatrix { m: [[0.0, kappa, 0.0], [kappa, 0.0, 0.0], [0.0, 0.0, 0.0]], kappa })
    }

    /// Depends only on the underlying wedge.
    pub fn of(w: &WedgePath, kappa: f64) -> Result<Self> {
        let q0 = Self::standard(kappa)?;
        let l = w.lorentz();
        let li = w.element().inverse().lorentz();
        Ok(QMatrix { m: mat_mul(&l, &mat_mul(&q0.m, &li)), kappa })
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `Qp . p'` (Minkowski product).
    pub fn form(&self, p: &[f64; 3], q: &[f64; 3]) -> f64 {
        minkowski(&mat_apply(&self.m, p), q)
    }

    /// `Qp . p'` for a complex first argument (continued momenta).
    pub fn form_complex(&self, p: &[C64; 3], q: &[f64; 3]) -> C64 {
        let mut qp = [C64::new(0.0, 0.0); 3];
        for (i, v) in qp.iter_mut().enumerate() {
            *v = (0..3).map(|k| p[k] * self.m[i][k]).sum();
        }
        qp[0] * q[0] - qp[1] * q[1] - qp[2] * q[2]
    }
}

/// Smallest `Im(Q0 p(theta + i sigma, p2) . p_k)` over the samples.
pub fn im_positivity_min(q0: &QMatrix, mass: f64, thetas: &[f64], p2s: &[f64], sigmas: &[f64], targets: &[[f64; 3]]) -> f64 {
    let mut min = f64::INFINITY;
    for &th in thetas {
        for &p2 in p2s {
            let mt = mass.hypot(p2);
            for &s in sigmas {
                let z = C64::new(th, s);
                let p = [mt * z.cosh(), mt * z.sinh(), C64::new(p2, 0.0)];
                for t in targets {
                    min = min.min(q0.form_complex(&p, t).im);
                }
            }
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn rand_p(r: &mut ChaCha8Rng, m: f64) -> [f64; 3] {
        let th: f64 = r.random_range(-2.0..2.0);
        let p2: f64 = r.random_range(-2.0..2.0);
        let mt = m.hypot(p2);
        [mt * th.cosh(), mt * th.sinh(), p2]
    }

    #[test]
    fn q_of_standard_wedge_and_complement() {
        let q0 = QMatrix::of(&WedgePath::standard(), 1.5).unwrap();
        assert_eq!(q0, QMatrix::standard(1.5).unwrap());
        let qc = QMatrix::of(&WedgePath::parse("rot(pi)").unwrap(), 1.5).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((q0.matrix()[i][j] + qc.matrix()[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q_is_antisymmetric_and_covariant() {
        let mut r = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let w = WedgePath::from_word(&[Generator::Rot(r.random_range(-4.0..4.0)), Generator::Boost2(r.random_range(-1.5..1.5))]);
            let q = QMatrix::of(&w, 0.7).unwrap();
            let (p, p2) = (rand_p(&mut r, 1.0), rand_p(&mut r, 1.0));
            let s = p[0] * p2[0];
            assert!((q.form(&p, &p2) + q.form(&p2, &p)).abs() < 1e-12 * s * 10.0);
            assert!(q.form(&p, &p).abs() < 1e-12 * s * 10.0);
            let g = Generator::Boost1(r.random_range(-1.0..1.0));
            let gw = w.left_mul(&[g]);
            let lhs = QMatrix::of(&gw, 0.7).unwrap();
            let gl = g.element().lorentz();
            let gi = g.element().inverse().lorentz();
            let rhs = mat_mul(&gl, &mat_mul(q.matrix(), &gi));
            assert!(mat_max_diff(lhs.matrix(), &rhs) < 1e-10 * q.matrix()[0][0].abs().max(1.0));
        }
    }

    #[test]
    fn im_positivity_on_strip() {
        let mut r = ChaCha8Rng::seed_from_u64(22);
        let q0 = QMatrix::standard(1.0).unwrap();
        let targets: Vec<_> = (0..20).map(|_| rand_p(&mut r, 1.0)).collect();
        let th: Vec<f64> = (0..21).map(|i| -3.0 + 0.3 * i as f64).collect();
        let p2: Vec<f64> = (0..9).map(|i| -2.0 + 0.5 * i as f64).collect();
        let sg: Vec<f64> = (0..=16).map(|i| PI * i as f64 / 16.0).collect();
        assert!(im_positivity_min(&q0, 1.0, &th, &p2, &sg, &targets) >= -1e-12);
    }

    #[test]
    fn jtilde_matches_reflection_conjugation() {
        let mut r = ChaCha8Rng::seed_from_u64(23);
        let j = [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        for _ in 0..100 {
            let g = CoveringElement::new(C64::from_polar(r.random_range(0.0..0.9), r.random_range(-PI..PI)), r.random_range(-5.0..5.0))
                .unwrap();
            let lhs = mat_mul(&j, &mat_mul(&g.lorentz(), &j));
            assert!(mat_max_diff(&lhs, &g.jtilde().lorentz()) < 1e-10 * g.lorentz()[0][0]);
        }
    }
}
