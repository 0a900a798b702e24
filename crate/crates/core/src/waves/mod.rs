//! Gaussian test packets and two-particle scattering.

mod packet;
pub mod scattering;

pub use packet::{continued_momentum, in_right_wedge, EvolvedPacket, Mat, PacketSpec, Sign, TestPacket, VelocitySet};

/// Default multiple of the width used as effective support radius.
pub const DEFAULT_SUPPORT_K: f64 = 5.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::GridMeasure;
    use crate::quad::{nodes_weights, Rule};
    use crate::C64;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn g2() -> Arc<GridMeasure> {
        Arc::new(GridMeasure::rapidity(1.0, Rule::GaussLegendre, 24, 5.0).unwrap())
    }

    fn g3() -> Arc<GridMeasure> {
        Arc::new(GridMeasure::shell3(1.0, Rule::GaussLegendre, 10, 4.0, 8, 3.0).unwrap())
    }

    fn packet3() -> TestPacket {
        TestPacket::diagonal(3, C64::new(0.8, 0.3), &[0.2, 1.5, -0.4], &[1.6, 0.7, -0.3], &[1.0, 0.9, 1.2]).unwrap()
    }

    #[test]
    fn centered_real_packet_is_even() {
        let f = TestPacket::diagonal(2, C64::new(1.0, 0.0), &[0.0, 0.0], &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let g = g2();
        let p = f.restrict(Sign::Plus, &g).unwrap();
        let m = f.restrict(Sign::Minus, &g).unwrap();
        for (a, b) in p.values().iter().zip(m.values()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn fourier_transform_matches_brute_force() {
        // N int d^2x f(x) e^{i p.x} on a fine tensor Gauss grid
        let f = TestPacket::diagonal(2, C64::new(0.7, -0.2), &[0.3, -0.5], &[1.2, 0.4], &[0.8, 1.1]).unwrap();
        let p = [1.3, -0.6];
        let (x, w) = nodes_weights(Rule::GaussLegendre, 120, -12.0, 12.0);
        let mut acc = C64::new(0.0, 0.0);
        for (x0, w0) in x.iter().zip(&w) {
            for (x1, w1) in x.iter().zip(&w) {
                let pd = p[0] * x0 - p[1] * x1;
                acc += w0 * w1 * f.value(&[*x0, *x1]) * C64::new(0.0, pd).exp();
            }
        }
        acc /= 2.0 * PI;
        let closed = f.plus(&[p[0].into(), p[1].into(), 0.0.into()]).unwrap();
        assert!((acc - closed).norm() < 1e-10 * closed.norm().max(1e-3), "{acc} {closed}");
    }

    #[test]
    fn boundary_relation_at_i_pi() {
        let f = packet3();
        let g = g3();
        let cont = f.continue_restrict(Sign::Minus, PI, &g).unwrap();
        let refl = g.reflection().unwrap();
        let plus = f.restrict(Sign::Plus, &g).unwrap();
        for (i, v) in cont.values().iter().enumerate() {
            let want = plus.values()[refl[i]];
            assert!((v - want).norm() < 1e-10 * want.norm().max(1.0));
        }
        assert!(f.continue_restrict(Sign::Plus, 4.0, &g).is_err());
    }

    #[test]
    fn quadrature_norm_converges() {
        let f = TestPacket::diagonal(2, C64::new(1.0, 0.0), &[0.0, 1.0], &[1.5, 0.8], &[1.0, 1.0]).unwrap();
        let coarse_g = Arc::new(GridMeasure::rapidity(1.0, Rule::GaussLegendre, 96, 5.0).unwrap());
        let coarse = f.restrict(Sign::Plus, &coarse_g).unwrap().norm();
        let fine_g = Arc::new(GridMeasure::rapidity(1.0, Rule::GaussLegendre, 200, 8.0).unwrap());
        let fine = f.restrict(Sign::Plus, &fine_g).unwrap().norm();
        assert!(((coarse - fine) / fine).abs() < 1e-6, "{coarse} {fine}");
    }

    #[test]
    fn reflection_and_identity_transform() {
        let f = packet3();
        assert_eq!(f.reflect().reflect(), f);
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(f.transform(&[0.0; 3], &id).unwrap(), f);
        let g = g3();
        let refl = g.reflection().unwrap();
        let a = f.reflect().restrict(Sign::Plus, &g).unwrap();
        let b = f.restrict(Sign::Plus, &g).unwrap();
        for i in 0..g.len() {
            assert!((a.values()[i] - b.values()[refl[i]].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn transform_is_covariant() {
        // (alpha_(a,L) f)^+(p) = e^{i p.a} f^+(L^{-1} p)
        let f = packet3();
        let (c, s) = (0.7f64.cosh(), 0.7f64.sinh());
        let l = [[c, s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let linv = [[c, -s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]];
        let a = [0.3, -0.2, 0.5];
        let t = f.transform(&a, &l).unwrap();
        for n in g3().nodes().iter().step_by(7) {
            let p = n.momentum;
            let q: Vec<f64> = (0..3).map(|i| (0..3).map(|j| linv[i][j] * p[j]).sum()).collect();
            let pa = p[0] * a[0] - p[1] * a[1] - p[2] * a[2];
            let want = C64::new(0.0, pa).exp() * f.plus(&[q[0].into(), q[1].into(), q[2].into()]).unwrap();
            let got = t.plus(&[p[0].into(), p[1].into(), p[2].into()]).unwrap();
            assert!((want - got).norm() < 1e-12 * want.norm().max(1e-30) + 1e-300);
        }
    }

    #[test]
    fn time_evolution_is_trivial_on_shell() {
        let f = packet3();
        let g = g3();
        let base = f.restrict(Sign::Plus, &g).unwrap();
        for t in [-5.0, 0.5, 30.0] {
            let ev = f.time_evolve(t).restrict_plus(&g).unwrap();
            for (a, b) in ev.values().iter().zip(base.values()) {
                assert!((a - b).norm() < 1e-12 * b.norm().max(1e-300));
            }
        }
        // off shell the phase is not trivial
        let p = [3.0, 0.5, 0.2];
        let ev = f.time_evolve(2.0).transform_at(&p, 1.0).unwrap();
        let st = f.plus(&[p[0].into(), p[1].into(), p[2].into()]).unwrap();
        assert!((ev - st).norm() > 1e-3 * st.norm());
    }

    #[test]
    fn velocity_ordering() {
        let m = 1.0;
        let right = TestPacket::diagonal(2, C64::new(1.0, 0.0), &[0.0, 0.0], &[2.5, 2.3], &[4.0, 4.0]).unwrap();
        let left = TestPacket::diagonal(2, C64::new(1.0, 0.0), &[0.0, 0.0], &[2.5, -2.3], &[4.0, 4.0]).unwrap();
        let vr = right.velocity_support(m, DEFAULT_SUPPORT_K);
        let vl = left.velocity_support(m, DEFAULT_SUPPORT_K);
        assert!(vr.difference_in(&vl, in_right_wedge));
        assert!(!vr.difference_in(&vr, in_right_wedge));
        assert!(right.avoids_lower_shell(m, DEFAULT_SUPPORT_K));
    }
}
