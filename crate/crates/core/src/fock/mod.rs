//! Truncated doubled symmetric Fock space over a discretized mass shell.
//!
//! A vector is stored per charge block `(n, m)` as a full coefficient table
//! over `(n + m)`-tuples of grid nodes: the first `n` slots are particles,
//! the last `m` antiparticles. The inner product is the quadrature sum
//! `sum_tuple prod(w) conj(psi) phi`.

mod ccr;
pub mod dense;
mod grid;
mod ladder;
mod ops;

pub use ccr::{ccr_residual, CcrReport};
pub use grid::{Dimension, GridMeasure, GridSpec, Node};
pub use ladder::{apply_ladder, apply_ladder_with, creation_leakage, Direction, Identity, NodeMultiplier, Species};
pub use ops::{apply_charge, apply_charge_conjugation, apply_j, apply_phase_by_charge};

use crate::{Error, Result, C64};
use std::collections::BTreeMap;
use std::sync::Arc;

/// Grid-sampled one-particle function `phi(p_i)`.
#[derive(Clone, Debug)]
pub struct OneParticleFn {
    grid: Arc<GridMeasure>,
    values: Vec<C64>,
}

impl OneParticleFn {
    pub fn new(grid: Arc<GridMeasure>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(OneParticleFn { grid, values })
    }

    pub fn from_fn(grid: &Arc<GridMeasure>, f: impl Fn(&Node) -> C64) -> Self {
        let values = grid.nodes().iter().map(f).collect();
        OneParticleFn { grid: grid.clone(), values }
    }

    /// Grid-coincident delta sequence at `node`: smearing with it yields the
    /// point operator at that node (`delta_ij / w_i`).
    pub fn node_delta(grid: &Arc<GridMeasure>, node: usize) -> Self {
        let mut values = vec![C64::new(0.0, 0.0); grid.len()];
        values[node] = C64::new(1.0 / grid.weights()[node], 0.0);
        OneParticleFn { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Arc<GridMeasure> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn conj(&self) -> Self {
        OneParticleFn { grid: self.grid.clone(), values: self.values.iter().map(|v| v.conj()).collect() }
    }

    pub fn scale(&self, c: C64) -> Self {
        OneParticleFn { grid: self.grid.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    /// Quadrature `int dmu conj(self) other`.
    pub fn inner(&self, other: &OneParticleFn) -> C64 {
        self.values.iter().zip(&other.values).zip(self.grid.weights()).map(|((a, b), w)| a.conj() * b * w).sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }
}

/// Charge block label: `n` particles, `m` antiparticles.
pub type Sector = (usize, usize);

/// Truncated Fock vector; only blocks with `n + m <= nmax` are stored.
#[derive(Clone, Debug)]
pub struct FockVector {
    grid: Arc<GridMeasure>,
    nmax: usize,
    sectors: BTreeMap<Sector, Vec<C64>>,
}

impl FockVector {
    pub fn zero(grid: &Arc<GridMeasure>, nmax: usize) -> Self {
        FockVector { grid: grid.clone(), nmax, sectors: BTreeMap::new() }
    }

    pub fn vacuum(grid: &Arc<GridMeasure>, nmax: usize) -> Self {
        let mut v = Self::zero(grid, nmax);
        v.sectors.insert((0, 0), vec![C64::new(1.0, 0.0)]);
        v
    }

    /// Vector whose `(n, m)` block is sampled from `f(particles, antiparticles)`.
    /// The caller is responsible for `f` being symmetric within each block.
    pub fn from_fn(grid: &Arc<GridMeasure>, nmax: usize, sector: Sector, f: impl Fn(&[usize]) -> C64) -> Result<Self> {
        if sector.0 + sector.1 > nmax {
            return Err(Error::InvalidParameter(format!("sector {sector:?} above cutoff {nmax}")));
        }
        let k = grid.len();
        let s = sector.0 + sector.1;
        let mut slots = vec![0usize; s];
        let table = (0..k.pow(s as u32))
            .map(|idx| {
                decode(idx, k, &mut slots);
                f(&slots)
            })
            .collect();
        let mut v = Self::zero(grid, nmax);
        v.sectors.insert(sector, table);
        Ok(v)
    }

    pub fn grid(&self) -> &Arc<GridMeasure> {
        &self.grid
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn sectors(&self) -> impl Iterator<Item = (&Sector, &Vec<C64>)> {
        self.sectors.iter()
    }

    pub fn sector(&self, s: Sector) -> Option<&[C64]> {
        self.sectors.get(&s).map(|v| v.as_slice())
    }

    pub(crate) fn sector_mut(&mut self, s: Sector) -> &mut Vec<C64> {
        let len = self.grid.len().pow((s.0 + s.1) as u32);
        self.sectors.entry(s).or_insert_with(|| vec![C64::new(0.0, 0.0); len])
    }

    pub(crate) fn insert_sector(&mut self, s: Sector, table: Vec<C64>) {
        debug_assert_eq!(table.len(), self.grid.len().pow((s.0 + s.1) as u32));
        if s.0 + s.1 <= self.nmax && table.iter().any(|c| *c != C64::new(0.0, 0.0)) {
            self.sectors.insert(s, table);
        }
    }

    /// Same content with a different cutoff; blocks above it are dropped.
    pub fn with_cutoff(&self, nmax: usize) -> FockVector {
        let mut out = self.clone();
        out.nmax = nmax;
        out.sectors.retain(|s, _| s.0 + s.1 <= nmax);
        out
    }

    pub fn check_compatible(&self, other: &FockVector) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch("vectors live on different grids".into()));
        }
        if self.nmax != other.nmax {
            return Err(Error::GridMismatch(format!("cutoffs differ: {} vs {}", self.nmax, other.nmax)));
        }
        Ok(())
    }

    /// Quadrature inner product, conjugate-linear in `self`.
    pub fn inner(&self, other: &FockVector) -> Result<C64> {
        self.check_compatible(other)?;
        let mut total = C64::new(0.0, 0.0);
        for (sec, a) in &self.sectors {
            if let Some(b) = other.sectors.get(sec) {
                total += weighted_dot(&self.grid, sec.0 + sec.1, a, b);
            }
        }
        Ok(total)
    }

    pub fn norm(&self) -> f64 {
        self.sectors.iter().map(|(s, a)| weighted_dot(&self.grid, s.0 + s.1, a, a).re).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: C64) -> FockVector {
        let mut out = self.clone();
        for t in out.sectors.values_mut() {
            t.iter_mut().for_each(|v| *v *= c);
        }
        out
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: C64, other: &FockVector) -> Result<FockVector> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (s, b) in &other.sectors {
            let a = out.sector_mut(*s);
            a.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &FockVector) -> Result<FockVector> {
        self.add_scaled(C64::new(-1.0, 0.0), other)
    }

    /// Norm of `self - other`.
    pub fn distance(&self, other: &FockVector) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    /// Largest absolute coefficient difference (unweighted, for column checks).
    pub fn max_abs_diff(&self, other: &FockVector) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.sectors.values().flatten().map(|c| c.norm()).fold(0.0, f64::max))
    }

    /// Keep only blocks with total particle number `<= level`.
    pub fn truncate_to(&self, level: usize) -> FockVector {
        let mut out = self.clone();
        out.sectors.retain(|s, _| s.0 + s.1 <= level);
        out
    }

    /// Largest violation of permutation symmetry within the particle block and
    /// within the antiparticle block (adjacent transpositions suffice).
    pub fn symmetry_defect(&self) -> f64 {
        let k = self.grid.len();
        let mut worst: f64 = 0.0;
        let mut slots = Vec::new();
        for (&(n, m), table) in &self.sectors {
            let s = n + m;
            slots.resize(s, 0);
            for (idx, v) in table.iter().enumerate() {
                decode(idx, k, &mut slots);
                for pos in 0..s.saturating_sub(1) {
                    if pos + 1 == n {
                        continue; // block boundary
                    }
                    slots.swap(pos, pos + 1);
                    let other = table[encode(&slots, k)];
                    slots.swap(pos, pos + 1);
                    worst = worst.max((v - other).norm());
                }
            }
        }
        worst
    }
}

pub(crate) fn decode(mut idx: usize, k: usize, slots: &mut [usize]) {
    for s in slots.iter_mut().rev() {
        *s = idx % k;
        idx /= k;
    }
}

pub(crate) fn encode(slots: &[usize], k: usize) -> usize {
    slots.iter().fold(0, |acc, &s| acc * k + s)
}

/// Product of the quadrature weights of the nodes in `slots`.
pub(crate) fn weight_product(grid: &GridMeasure, slots: &[usize]) -> f64 {
    slots.iter().map(|&i| grid.weights()[i]).product()
}

fn weighted_dot(grid: &GridMeasure, s: usize, a: &[C64], b: &[C64]) -> C64 {
    let k = grid.len();
    let mut slots = vec![0usize; s];
    let mut acc = C64::new(0.0, 0.0);
    for (idx, (x, y)) in a.iter().zip(b).enumerate() {
        decode(idx, k, &mut slots);
        acc += x.conj() * y * weight_product(grid, &slots);
    }
    acc
}
