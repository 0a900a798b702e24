use super::dense::{OccupationBasis, DEFAULT_DIMENSION_BOUND};
use super::{apply_ladder, Direction, FockVector, GridMeasure, OneParticleFn, Species};
use crate::exec::{fold_max, map_range, Mode};
use crate::Result;
use serde::Serialize;
use std::sync::Arc;

#[derive(Clone, Debug, Serialize)]
pub struct CcrReport {
    /// Worst residual over all relations.
    pub max_residual: f64,
    /// `(relation, residual)` pairs.
    pub relations: Vec<(String, f64)>,
    /// Number of basis vectors the relations were applied to.
    pub vectors: usize,
}

type Op = (Species, Direction);

const A: Op = (Species::Particle, Direction::Annihilate);
const AS: Op = (Species::Particle, Direction::Create);
const B: Op = (Species::Antiparticle, Direction::Annihilate);
const BS: Op = (Species::Antiparticle, Direction::Create);

/// Commutators of point operators `c(p_i)`, `c'(p_j)` on every occupation
/// basis vector with `n + m <= nmax - 2` (so no creator is truncated). The
/// expected c-number is `delta_ij / w_i` for `[a, a*]` and `[b, b*]`, zero otherwise.
pub fn ccr_residual(grid: &Arc<GridMeasure>, nmax: usize, mode: Mode) -> Result<CcrReport> {
    let basis = OccupationBasis::new(grid, nmax, DEFAULT_DIMENSION_BOUND)?;
    let vecs: Vec<FockVector> = basis.states_up_to(nmax.saturating_sub(2)).into_iter().map(|i| basis.basis_vector(i)).collect();
    let k = grid.len();
    let deltas: Vec<OneParticleFn> = (0..k).map(|i| OneParticleFn::node_delta(grid, i)).collect();
    let relations: [(&str, Op, Op, bool); 6] = [
        ("[a,a*]", A, AS, true),
        ("[b,b*]", B, BS, true),
        ("[a,b*]", A, BS, false),
        ("[a*,a*]", AS, AS, false),
        ("[a,b]", A, B, false),
        ("[a*,b*]", AS, BS, false),
    ];
    let mut out = Vec::new();
    for (name, x, y, canonical) in relations {
        let res = map_range(mode, k * k, |ij| {
            let (i, j) = (ij / k, ij % k);
            let expected = if canonical && i == j { 1.0 / grid.weights()[i] } else { 0.0 };
            let worst = vecs.iter().map(|v| {
                let xy = apply_ladder(x.0, x.1, &deltas[i], &apply_ladder(y.0, y.1, &deltas[j], v)?)?;
                let yx = apply_ladder(y.0, y.1, &deltas[j], &apply_ladder(x.0, x.1, &deltas[i], v)?)?;
                let r = xy.sub(&yx)?.add_scaled((-expected).into(), v)?;
                // relative to the size of the kernel entries
                Ok(r.norm() / (1.0 + expected))
            });
            worst.collect::<Result<Vec<f64>>>().map(fold_max)
        });
        let r = fold_max(res.into_iter().collect::<Result<Vec<_>>>()?);
        out.push((name.to_string(), r));
    }
    Ok(CcrReport { max_residual: fold_max(out.iter().map(|x| x.1)), relations: out, vectors: vecs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Rule;

    #[test]
    fn ccr_holds_on_small_grids() {
        let g = Arc::new(GridMeasure::rapidity(1.0, Rule::GaussLegendre, 4, 3.0).unwrap());
        let r = ccr_residual(&g, 3, Mode::Sequential).unwrap();
        assert!(r.max_residual < 1e-12, "{r:?}");
        assert_eq!(r.relations.len(), 6);
        let g3 = Arc::new(GridMeasure::shell3(1.0, Rule::Trapezoid, 2, 1.0, 2, 1.0).unwrap());
        assert!(ccr_residual(&g3, 3, Mode::Parallel).unwrap().max_residual < 1e-12);
    }
}
