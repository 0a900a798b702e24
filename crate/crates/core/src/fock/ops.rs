use super::{decode, encode, FockVector};
use crate::{Error, Result, C64};

/// `Q`: multiplies block `(n, m)` by `n - m`.
pub fn apply_charge(psi: &FockVector) -> FockVector {
    apply_phase_by_charge(psi, |q| C64::new(q as f64, 0.0))
}

/// Multiplies block `(n, m)` by `f(n - m)`.
pub fn apply_phase_by_charge(psi: &FockVector, f: impl Fn(i64) -> C64) -> FockVector {
    let mut out = FockVector::zero(psi.grid(), psi.nmax());
    for (&(n, m), t) in psi.sectors() {
        let c = f(n as i64 - m as i64);
        out.insert_sector((n, m), t.iter().map(|v| v * c).collect());
    }
    out
}

/// `C`: exchanges the particle and antiparticle factors.
pub fn apply_charge_conjugation(psi: &FockVector) -> FockVector {
    let k = psi.grid().len();
    let mut out = FockVector::zero(psi.grid(), psi.nmax());
    for (&(n, m), t) in psi.sectors() {
        let km = k.pow(m as u32);
        let kn = k.pow(n as u32);
        let mut v = vec![C64::new(0.0, 0.0); t.len()];
        for (idx, c) in t.iter().enumerate() {
            v[(idx % km) * kn + idx / km] = *c;
        }
        out.insert_sector((m, n), v);
    }
    out
}

/// Antiunitary `J`: `(J psi)(p...) = e^{i beta q} conj(psi(-j p...))`, where
/// `-j` flips `p2`. In 2D the reflection is trivial on the rapidity grid.
pub fn apply_j(beta: f64, psi: &FockVector) -> Result<FockVector> {
    let grid = psi.grid();
    let refl = grid.reflection().ok_or(Error::NotReflectionClosed)?;
    let k = grid.len();
    let mut out = FockVector::zero(grid, psi.nmax());
    for (&(n, m), t) in psi.sectors() {
        let phase = crate::phase::cis(beta * (n as f64 - m as f64));
        let s = n + m;
        let mut slots = vec![0usize; s];
        let v = (0..t.len())
            .map(|idx| {
                decode(idx, k, &mut slots);
                slots.iter_mut().for_each(|x| *x = refl[*x]);
                phase * t[encode(&slots, k)].conj()
            })
            .collect();
        out.insert_sector((n, m), v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_ladder, Direction, GridMeasure, OneParticleFn, Species};
    use crate::quad::Rule;
    use std::sync::Arc;

    fn grid3() -> Arc<GridMeasure> {
        Arc::new(GridMeasure::shell3(1.0, Rule::GaussLegendre, 2, 2.0, 2, 1.0).unwrap())
    }

    #[test]
    fn charge_eigenvalues() {
        let g = grid3();
        let v = FockVector::vacuum(&g, 3);
        assert_eq!(apply_charge(&v).norm(), 0.0);
        let phi = OneParticleFn::from_fn(&g, |n| C64::new(1.0, n.p2));
        let one = apply_ladder(Species::Particle, Direction::Create, &phi, &v).unwrap();
        assert!(apply_charge(&one).distance(&one).unwrap() < 1e-15);
    }

    #[test]
    fn c_maps_a_star_to_b_star() {
        let g = grid3();
        let v = FockVector::vacuum(&g, 3);
        let phi = OneParticleFn::from_fn(&g, |n| C64::new(n.theta, n.p2 + 0.5));
        let a = apply_ladder(Species::Particle, Direction::Create, &phi, &v).unwrap();
        let b = apply_ladder(Species::Antiparticle, Direction::Create, &phi, &v).unwrap();
        assert_eq!(apply_charge_conjugation(&a).distance(&b).unwrap(), 0.0);
        let ab = apply_ladder(Species::Antiparticle, Direction::Create, &phi.conj(), &a).unwrap();
        let ab = apply_ladder(Species::Particle, Direction::Create, &phi, &ab).unwrap();
        let cc = apply_charge_conjugation(&apply_charge_conjugation(&ab));
        assert_eq!(cc.distance(&ab).unwrap(), 0.0);
    }

    #[test]
    fn j_is_antilinear_and_fixes_vacuum() {
        let g = Arc::new(GridMeasure::rapidity(1.0, Rule::Trapezoid, 4, 2.0).unwrap());
        let v = FockVector::vacuum(&g, 2);
        assert_eq!(apply_j(0.0, &v).unwrap().distance(&v).unwrap(), 0.0);
        let phi = OneParticleFn::from_fn(&g, |n| C64::new(n.theta, 1.0));
        let one = apply_ladder(Species::Particle, Direction::Create, &phi, &v).unwrap();
        let c = C64::new(0.3, -1.2);
        let lhs = apply_j(0.0, &one.scale(c)).unwrap();
        let rhs = apply_j(0.0, &one).unwrap().scale(c.conj());
        assert!(lhs.distance(&rhs).unwrap() < 1e-15);
    }

    #[test]
    fn j_phase_on_charge_two() {
        let g = Arc::new(GridMeasure::rapidity(1.0, Rule::Trapezoid, 3, 2.0).unwrap());
        let two = FockVector::from_fn(&g, 2, (2, 0), |_| C64::new(1.0, 0.0)).unwrap();
        let lambda = 0.25;
        let j = apply_j(-2.0 * std::f64::consts::PI * lambda, &two).unwrap();
        assert!(j.distance(&two.scale(C64::new(-1.0, 0.0))).unwrap() < 1e-15);
    }

    #[test]
    fn j_requires_reflection_closure() {
        let g = Arc::new(GridMeasure::shell3_range(1.0, Rule::Trapezoid, 2, [-1.0, 1.0], 2, [0.0, 1.0]).unwrap());
        assert!(matches!(apply_j(0.0, &FockVector::vacuum(&g, 1)), Err(Error::NotReflectionClosed)));
    }
}
