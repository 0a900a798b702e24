use super::{decode, encode, FockVector, OneParticleFn, Sector};
use crate::exec::{map_range, Mode};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Species {
    Particle,
    Antiparticle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Create,
    Annihilate,
}

/// Diagonal dressing of a ladder operator: the annihilator becomes
/// `sum_i w_i conj(phi_i) M(i; out) c_i`, where `M` is evaluated on the
/// configuration left after removing node `i`. The creator is its adjoint.
pub trait NodeMultiplier: Sync {
    fn factor(&self, node: usize, out: Sector, slots: &[usize]) -> C64;
}

/// Undeformed ladder operators.
pub struct Identity;

impl NodeMultiplier for Identity {
    fn factor(&self, _: usize, _: Sector, _: &[usize]) -> C64 {
        C64::new(1.0, 0.0)
    }
}

const PARALLEL_MIN: usize = 4096;

fn mode_for(len: usize) -> Mode {
    if len >= PARALLEL_MIN {
        Mode::Parallel
    } else {
        Mode::Sequential
    }
}

pub fn apply_ladder(species: Species, direction: Direction, phi: &OneParticleFn, psi: &FockVector) -> Result<FockVector> {
    apply_ladder_with(species, direction, phi, psi, &Identity)
}

pub fn apply_ladder_with(
    species: Species,
    direction: Direction,
    phi: &OneParticleFn,
    psi: &FockVector,
    mult: &dyn NodeMultiplier,
) -> Result<FockVector> {
    if !phi.grid().same_as(psi.grid()) {
        return Err(Error::GridMismatch("test function and vector on different grids".into()));
    }
    Ok(match direction {
        Direction::Annihilate => annihilate(species, phi, psi, mult),
        Direction::Create => create(species, phi, psi, mult),
    })
}

fn annihilate(species: Species, phi: &OneParticleFn, psi: &FockVector, mult: &dyn NodeMultiplier) -> FockVector {
    let grid = psi.grid();
    let k = grid.len();
    let w = grid.weights();
    let coef: Vec<C64> = phi.values().iter().zip(w).map(|(v, w)| v.conj() * w).collect();
    let mut out = FockVector::zero(grid, psi.nmax());
    for (&(n_in, m_in), table) in psi.sectors() {
        let (n, m) = match species {
            Species::Particle if n_in > 0 => (n_in - 1, m_in),
            Species::Antiparticle if m_in > 0 => (n_in, m_in - 1),
            _ => continue,
        };
        let s = n + m;
        let len = k.pow(s as u32);
        let km = k.pow(m as u32);
        let norm = ((if species == Species::Particle { n_in } else { m_in }) as f64).sqrt();
        let vals = map_range(mode_for(len * k), len, |idx| {
            let mut slots = vec![0usize; s];
            decode(idx, k, &mut slots);
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..k {
                if coef[i] == C64::new(0.0, 0.0) {
                    continue;
                }
                let src = match species {
                    Species::Particle => i * len + idx,
                    Species::Antiparticle => ((idx / km) * k + i) * km + idx % km,
                };
                acc += coef[i] * mult.factor(i, (n, m), &slots) * table[src];
            }
            acc * norm
        });
        out.insert_sector((n, m), vals);
    }
    out
}

fn create(species: Species, phi: &OneParticleFn, psi: &FockVector, mult: &dyn NodeMultiplier) -> FockVector {
    let grid = psi.grid();
    let k = grid.len();
    let mut out = FockVector::zero(grid, psi.nmax());
    for (&(n, m), table) in psi.sectors() {
        if n + m + 1 > psi.nmax() {
            continue;
        }
        let (n_out, m_out) = match species {
            Species::Particle => (n + 1, m),
            Species::Antiparticle => (n, m + 1),
        };
        let s_out = n + m + 1;
        let len = k.pow(s_out as u32);
        let (lo, hi, cnt) = match species {
            Species::Particle => (0, n + 1, n + 1),
            Species::Antiparticle => (n, s_out, m + 1),
        };
        let norm = 1.0 / (cnt as f64).sqrt();
        let vals = map_range(mode_for(len * cnt), len, |idx| {
            let mut slots = vec![0usize; s_out];
            decode(idx, k, &mut slots);
            let mut rest = vec![0usize; s_out - 1];
            let mut acc = C64::new(0.0, 0.0);
            for pos in lo..hi {
                let node = slots[pos];
                let f = phi.values()[node];
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                rest[..pos].copy_from_slice(&slots[..pos]);
                rest[pos..].copy_from_slice(&slots[pos + 1..]);
                acc += f * mult.factor(node, (n, m), &rest).conj() * table[encode(&rest, k)];
            }
            acc * norm
        });
        out.insert_sector((n_out, m_out), vals);
    }
    out
}

/// Norm lost to the cutoff when applying the undeformed creator `a*(phi)` or
/// `b*(phi)` to `psi`: uses `|c*(phi) chi|^2 = |phi|^2 |chi|^2 + |c(phi) chi|^2`
/// on the top block `chi`.
pub fn creation_leakage(species: Species, phi: &OneParticleFn, psi: &FockVector) -> Result<f64> {
    let top = psi.nmax();
    let mut chi = FockVector::zero(psi.grid(), top);
    for (s, t) in psi.sectors() {
        if s.0 + s.1 == top {
            chi.insert_sector(*s, t.clone());
        }
    }
    let lowered = apply_ladder(species, Direction::Annihilate, phi, &chi)?;
    let pn = phi.norm();
    Ok((pn * pn * chi.norm().powi(2) + lowered.norm().powi(2)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::GridMeasure;
    use crate::quad::Rule;
    use std::sync::Arc;

    fn setup() -> (Arc<GridMeasure>, OneParticleFn, OneParticleFn) {
        let g = Arc::new(GridMeasure::rapidity(1.0, Rule::GaussLegendre, 5, 3.0).unwrap());
        let phi = OneParticleFn::from_fn(&g, |n| C64::new((-n.theta * n.theta).exp(), 0.2 * n.theta));
        let psi = OneParticleFn::from_fn(&g, |n| C64::new(n.theta.cos(), -0.5).scale(0.7));
        (g, phi, psi)
    }

    #[test]
    fn annihilating_the_vacuum_gives_zero() {
        let (g, phi, _) = setup();
        let v = FockVector::vacuum(&g, 3);
        for sp in [Species::Particle, Species::Antiparticle] {
            assert_eq!(apply_ladder(sp, Direction::Annihilate, &phi, &v).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn one_particle_norm_is_quadrature_norm() {
        let (g, phi, _) = setup();
        let v = FockVector::vacuum(&g, 3);
        let one = apply_ladder(Species::Particle, Direction::Create, &phi, &v).unwrap();
        let oracle: f64 = phi.values().iter().zip(g.weights()).map(|(f, w)| w * f.norm_sqr()).sum();
        assert!((one.inner(&one).unwrap().re - oracle).abs() < 1e-14);
    }

    #[test]
    fn b_kills_a_single_particle() {
        let (g, phi, psi) = setup();
        let v = FockVector::vacuum(&g, 3);
        let one = apply_ladder(Species::Particle, Direction::Create, &psi, &v).unwrap();
        let r = apply_ladder(Species::Antiparticle, Direction::Annihilate, &phi, &one).unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn creation_keeps_blocks_symmetric() {
        let (g, phi, psi) = setup();
        let mut v = FockVector::vacuum(&g, 4);
        for (sp, f) in [(Species::Particle, &phi), (Species::Antiparticle, &psi), (Species::Particle, &psi), (Species::Antiparticle, &phi)]
        {
            v = apply_ladder(sp, Direction::Create, f, &v).unwrap();
            assert!(v.symmetry_defect() < 1e-14);
        }
        assert!(v.sector((2, 2)).is_some());
    }

    #[test]
    fn leakage_matches_dropped_norm() {
        let (g, phi, psi) = setup();
        let v = FockVector::vacuum(&g, 2);
        let two = apply_ladder(Species::Particle, Direction::Create, &psi, &v).unwrap();
        let two = apply_ladder(Species::Antiparticle, Direction::Create, &phi, &two).unwrap();
        let big = FockVector::vacuum(&g, 3);
        let b2 = apply_ladder(Species::Particle, Direction::Create, &psi, &big).unwrap();
        let b2 = apply_ladder(Species::Antiparticle, Direction::Create, &phi, &b2).unwrap();
        let b3 = apply_ladder(Species::Particle, Direction::Create, &phi, &b2).unwrap();
        let dropped = b3.sector((2, 1)).map(|_| b3.truncate_to(3).sub(&b3.truncate_to(2)).unwrap().norm()).unwrap();
        let leak = creation_leakage(Species::Particle, &phi, &two).unwrap();
        assert!((leak - dropped).abs() < 1e-13 * dropped.max(1.0));
        let t = apply_ladder(Species::Particle, Direction::Create, &phi, &two).unwrap();
        assert!(t.sector((2, 1)).is_none());
    }
}
