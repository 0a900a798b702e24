//! Brute-force oracle in the occupation-number basis.
//!
//! Basis vectors are normalized symmetric states labelled by a multiset of
//! particle nodes and a multiset of antiparticle nodes. Point operators are
//! replaced by mode operators `c_i = sqrt(w_i) a(p_i)`, which obey the
//! textbook bosonic matrix elements; everything else is assembled from them.
//! Nothing here calls the functional code in `ladder`.

use super::{decode, weight_product, Direction, FockVector, GridMeasure, OneParticleFn, Sector, Species};
use crate::{Error, Result, C64};
use ndarray::Array2;
use sprs::{CsMat, TriMat};
use std::collections::HashMap;
use std::sync::Arc;

pub const DEFAULT_DIMENSION_BOUND: usize = 20_000;

/// Sorted particle and antiparticle node lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub particles: Vec<usize>,
    pub antiparticles: Vec<usize>,
}

impl State {
    pub fn sector(&self) -> Sector {
        (self.particles.len(), self.antiparticles.len())
    }

    pub fn charge(&self) -> i64 {
        self.particles.len() as i64 - self.antiparticles.len() as i64
    }

    fn block(&self, species: Species) -> &Vec<usize> {
        match species {
            Species::Particle => &self.particles,
            Species::Antiparticle => &self.antiparticles,
        }
    }

    fn block_mut(&mut self, species: Species) -> &mut Vec<usize> {
        match species {
            Species::Particle => &mut self.particles,
            Species::Antiparticle => &mut self.antiparticles,
        }
    }
}

pub struct OccupationBasis {
    grid: Arc<GridMeasure>,
    nmax: usize,
    states: Vec<State>,
    index: HashMap<State, usize>,
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn multisets(k: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(k, size, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, size, 0, &mut Vec::new(), &mut out);
    out
}

/// `prod_i n_i!` for a sorted multiset.
fn multiplicity_factorial(sorted: &[usize]) -> f64 {
    let mut f = 1.0;
    let mut run = 0usize;
    for (j, x) in sorted.iter().enumerate() {
        run = if j > 0 && sorted[j - 1] == *x { run + 1 } else { 1 };
        f *= run as f64;
    }
    f
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl OccupationBasis {
    pub fn dimension_for(k: usize, nmax: usize) -> usize {
        let ms = |s: usize| binom(k + s - 1, s);
        (0..=nmax)
            .flat_map(|s| (0..=s).map(move |n| (n, s - n)))
            .map(|(n, m)| ms(n).saturating_mul(ms(m)))
            .fold(0usize, |a, b| a.saturating_add(b))
    }

    pub fn new(grid: &Arc<GridMeasure>, nmax: usize, bound: usize) -> Result<Self> {
        let k = grid.len();
        let dim = Self::dimension_for(k, nmax);
        if dim > bound {
            return Err(Error::DimensionBound { dim, bound });
        }
        let mut states = Vec::with_capacity(dim);
        for s in 0..=nmax {
            for n in (0..=s).rev() {
                let ps = multisets(k, n);
                let as_ = multisets(k, s - n);
                for p in &ps {
                    for a in &as_ {
                        states.push(State { particles: p.clone(), antiparticles: a.clone() });
                    }
                }
            }
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(OccupationBasis { grid: grid.clone(), nmax, states, index })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn grid(&self) -> &Arc<GridMeasure> {
        &self.grid
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn index_of(&self, s: &State) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Mode annihilator `c_i`: `sqrt(n_i)` times the state with one fewer `i`.
    pub fn mode_annihilator(&self, species: Species, node: usize) -> CsMat<C64> {
        let mut phi = vec![C64::new(0.0, 0.0); self.grid.len()];
        phi[node] = C64::new(1.0 / self.grid.weights()[node].sqrt(), 0.0);
        self.ladder_raw(species, &phi)
    }

    /// `sum_i sqrt(w_i) conj(phi_i) c_i` or its adjoint.
    pub fn ladder(&self, species: Species, direction: Direction, phi: &OneParticleFn) -> Result<CsMat<C64>> {
        if !phi.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch("oracle and test function grids differ".into()));
        }
        let a = self.ladder_raw(species, phi.values());
        Ok(match direction {
            Direction::Annihilate => a,
            Direction::Create => adjoint(&a),
        })
    }

    fn ladder_raw(&self, species: Species, phi: &[C64]) -> CsMat<C64> {
        let w = self.grid.weights();
        let mut tri = TriMat::new((self.dim(), self.dim()));
        for (col, st) in self.states.iter().enumerate() {
            let block = st.block(species);
            let mut j = 0;
            while j < block.len() {
                let node = block[j];
                let count = block[j..].iter().take_while(|x| **x == node).count();
                let c = phi[node].conj() * w[node].sqrt() * (count as f64).sqrt();
                if c != C64::new(0.0, 0.0) {
                    let mut out = st.clone();
                    out.block_mut(species).remove(j);
                    tri.add_triplet(self.index[&out], col, c);
                }
                j += count;
            }
        }
        tri.to_csr()
    }

    pub fn diagonal(&self, f: impl Fn(&State) -> C64) -> CsMat<C64> {
        let mut tri = TriMat::new((self.dim(), self.dim()));
        for (i, s) in self.states.iter().enumerate() {
            let v = f(s);
            if v != C64::new(0.0, 0.0) {
                tri.add_triplet(i, i, v);
            }
        }
        tri.to_csr()
    }

    pub fn charge(&self) -> CsMat<C64> {
        self.diagonal(|s| C64::new(s.charge() as f64, 0.0))
    }

    pub fn charge_conjugation(&self) -> CsMat<C64> {
        self.permutation(|s| State { particles: s.antiparticles.clone(), antiparticles: s.particles.clone() })
    }

    /// Unitary part `U` of `J = U K`, `K` being complex conjugation in this
    /// (real) basis: phase `e^{i beta q}` and the node reflection.
    pub fn j_unitary(&self, beta: f64) -> Result<CsMat<C64>> {
        let refl = self.grid.reflection().ok_or(Error::NotReflectionClosed)?.to_vec();
        let map = |v: &[usize]| {
            let mut r: Vec<usize> = v.iter().map(|i| refl[*i]).collect();
            r.sort_unstable();
            r
        };
        let p = self.permutation(|s| State { particles: map(&s.particles), antiparticles: map(&s.antiparticles) });
        let ph = self.diagonal(|s| crate::phase::cis(beta * s.charge() as f64));
        Ok(&ph * &p)
    }

    fn permutation(&self, f: impl Fn(&State) -> State) -> CsMat<C64> {
        let mut tri = TriMat::new((self.dim(), self.dim()));
        for (col, s) in self.states.iter().enumerate() {
            tri.add_triplet(self.index[&f(s)], col, C64::new(1.0, 0.0));
        }
        tri.to_csr()
    }

    /// Coefficient table value of the normalized basis vector on any tuple in its orbit.
    fn tuple_value(&self, st: &State) -> f64 {
        let w = |v: &[usize]| weight_product(&self.grid, v).sqrt();
        let f = |v: &[usize]| (multiplicity_factorial(v) / factorial(v.len())).sqrt() / w(v);
        f(&st.particles) * f(&st.antiparticles)
    }

    pub fn basis_vector(&self, i: usize) -> FockVector {
        let st = &self.states[i];
        let (n, m) = st.sector();
        let val = C64::new(self.tuple_value(st), 0.0);
        FockVector::from_fn(&self.grid, self.nmax, (n, m), |slots| {
            let mut p = slots[..n].to_vec();
            let mut a = slots[n..].to_vec();
            p.sort_unstable();
            a.sort_unstable();
            if p == st.particles && a == st.antiparticles {
                val
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .expect("basis state within cutoff")
    }

    /// Orthogonal projection onto the basis: `c_M = <e_M, psi>`.
    pub fn coefficients(&self, psi: &FockVector) -> Result<Vec<C64>> {
        if !psi.grid().same_as(&self.grid) || psi.nmax() != self.nmax {
            return Err(Error::GridMismatch("vector does not match oracle basis".into()));
        }
        let k = self.grid.len();
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (&(n, m), table) in psi.sectors() {
            let mut slots = vec![0usize; n + m];
            for (idx, v) in table.iter().enumerate() {
                if *v == C64::new(0.0, 0.0) {
                    continue;
                }
                decode(idx, k, &mut slots);
                let mut p = slots[..n].to_vec();
                let mut a = slots[n..].to_vec();
                p.sort_unstable();
                a.sort_unstable();
                let st = State { particles: p, antiparticles: a };
                let i = self.index[&st];
                out[i] += v * weight_product(&self.grid, &slots) * self.tuple_value(&st);
            }
        }
        Ok(out)
    }

    pub fn to_fock(&self, c: &[C64]) -> FockVector {
        let mut out = FockVector::zero(&self.grid, self.nmax);
        for (i, ci) in c.iter().enumerate() {
            if *ci != C64::new(0.0, 0.0) {
                out = out.add_scaled(*ci, &self.basis_vector(i)).expect("same grid");
            }
        }
        out
    }

    /// Matrix of a functional operator, built column by column from its
    /// action on basis vectors.
    pub fn materialize(&self, f: impl Fn(&FockVector) -> Result<FockVector>) -> Result<Array2<C64>> {
        let d = self.dim();
        let mut out = Array2::zeros((d, d));
        for j in 0..d {
            let col = self.coefficients(&f(&self.basis_vector(j))?)?;
            for (i, v) in col.into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        Ok(out)
    }

    /// Indices of basis states with total particle number `<= level`.
    pub fn states_up_to(&self, level: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                let (n, m) = self.states[i].sector();
                n + m <= level
            })
            .collect()
    }
}

pub fn to_dense(m: &CsMat<C64>) -> Array2<C64> {
    m.to_dense()
}

pub fn adjoint(m: &CsMat<C64>) -> CsMat<C64> {
    m.transpose_view().to_owned().map(|v| v.conj()).to_csr()
}

pub fn conj(m: &CsMat<C64>) -> CsMat<C64> {
    m.map(|v| v.conj())
}

pub fn scale(m: &CsMat<C64>, c: C64) -> CsMat<C64> {
    m.map(|v| v * c)
}

/// `J X J` for `J = U K`: `U conj(X) conj(U)`.
pub fn antilinear_conjugate(u: &CsMat<C64>, x: &CsMat<C64>) -> CsMat<C64> {
    &(u * &conj(x)) * &conj(u)
}

pub fn identity(d: usize) -> CsMat<C64> {
    CsMat::eye(d)
}

/// Largest entry modulus of `a - b` over the selected columns.
pub fn column_residual(a: &Array2<C64>, b: &Array2<C64>, cols: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for &j in cols {
        for i in 0..a.nrows() {
            worst = worst.max((a[[i, j]] - b[[i, j]]).norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{apply_charge, apply_charge_conjugation, apply_j, apply_ladder};
    use crate::quad::Rule;

    fn setup() -> (Arc<GridMeasure>, OccupationBasis) {
        let g = Arc::new(GridMeasure::rapidity(1.0, Rule::GaussLegendre, 3, 2.0).unwrap());
        let b = OccupationBasis::new(&g, 3, DEFAULT_DIMENSION_BOUND).unwrap();
        (g, b)
    }

    #[test]
    fn dimension_count() {
        let (_, b) = setup();
        assert_eq!(b.dim(), OccupationBasis::dimension_for(3, 3));
        // s=0:1, s=1:6, s=2: 6+9+6, s=3: 10+18+18+10
        assert_eq!(b.dim(), 1 + 6 + 21 + 56);
        let g = b.grid().clone();
        assert!(matches!(OccupationBasis::new(&g, 12, 1000), Err(Error::DimensionBound { .. })));
    }

    #[test]
    fn basis_is_orthonormal() {
        let (_, b) = setup();
        for i in 0..b.dim() {
            let c = b.coefficients(&b.basis_vector(i)).unwrap();
            for (j, v) in c.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).norm() < 1e-13, "{i} {j} {v}");
            }
        }
    }

    #[test]
    fn functional_ladder_matches_mode_matrices() {
        let (g, b) = setup();
        let phi = OneParticleFn::from_fn(&g, |n| C64::new(n.theta.sin() + 0.3, 0.7 * n.theta));
        for sp in [Species::Particle, Species::Antiparticle] {
            for dir in [Direction::Create, Direction::Annihilate] {
                let oracle = to_dense(&b.ladder(sp, dir, &phi).unwrap());
                let func = b.materialize(|v| apply_ladder(sp, dir, &phi, v)).unwrap();
                let cols: Vec<usize> = (0..b.dim()).collect();
                assert!(column_residual(&oracle, &func, &cols) < 1e-12, "{sp:?} {dir:?}");
            }
        }
    }

    #[test]
    fn c_q_and_j_match() {
        let (_, b) = setup();
        let cols: Vec<usize> = (0..b.dim()).collect();
        let q = b.materialize(|v| Ok(apply_charge(v))).unwrap();
        assert!(column_residual(&q, &to_dense(&b.charge()), &cols) < 1e-13);
        let c = b.materialize(|v| Ok(apply_charge_conjugation(v))).unwrap();
        assert!(column_residual(&c, &to_dense(&b.charge_conjugation()), &cols) < 1e-13);
        // J on real basis vectors equals U
        let j = b.materialize(|v| apply_j(0.4, v)).unwrap();
        assert!(column_residual(&j, &to_dense(&b.j_unitary(0.4).unwrap()), &cols) < 1e-13);
        let cm = b.charge_conjugation();
        let c2 = &cm * &cm;
        assert!(column_residual(&to_dense(&c2), &to_dense(&identity(b.dim())), &cols) < 1e-15);
    }
}
