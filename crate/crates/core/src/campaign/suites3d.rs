//! Suites in 2+1 dimensions: covering group, winding lemma, intertwiners,
//! 3D exchange relations, the 3D contour shift, scattering and 3D oracle diffs.

use super::suites2d::{fock_oracles, op_name};
use super::{CheckRecord, Ctx};
use crate::deform2d::{ExchangeInputs, FieldInput};
use crate::deform3d::{
    condf_residual, crossing_shift_check3, eval_u0, eval_uw, exchange_phase, exchange_residual3, ratio_phase, u_phase_collapse, u_ratio,
    v_angle, Deform3D, Deform3DParams, Relation3, ShiftGrid,
};
use crate::fock::dense::{column_residual, to_dense, OccupationBasis, DEFAULT_DIMENSION_BOUND};
use crate::fock::{Direction, GridMeasure, OneParticleFn, Species};
use crate::geom3d::{k_factor, winding_number, CoveringElement, Generator, WedgePath};
use crate::phase::cis;
use crate::quad::{nodes_weights, Rule};
use crate::waves::scattering::{
    in_state, in_state_kernel, narrow_packet_phase, out_state, out_state_kernel, smatrix_csv, smatrix_element, smatrix_from_states,
    ScatteringSetup,
};
use crate::waves::TestPacket;
use crate::{Error, Result, C64};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use std::f64::consts::PI;
use std::sync::Arc;

fn rand_p(r: &mut ChaCha8Rng, m: f64) -> [f64; 3] {
    let th: f64 = r.random_range(-2.0..2.0);
    let p2: f64 = r.random_range(-2.0..2.0);
    let mt = m.hypot(p2);
    [mt * th.cosh(), mt * th.sinh(), p2]
}

fn rand_el(r: &mut ChaCha8Rng) -> Result<CoveringElement> {
    let g = C64::from_polar(r.random_range(0.0..0.95), r.random_range(-PI..PI));
    CoveringElement::new(g, r.random_range(-10.0..10.0))
}

fn rand_wedge(r: &mut ChaCha8Rng) -> WedgePath {
    WedgePath::from_word(&[
        Generator::Rot(r.random_range(-6.0..6.0)),
        Generator::Boost2(r.random_range(-1.0..1.0)),
        Generator::Boost1(r.random_range(-1.0..1.0)),
    ])
}

fn random_word(r: &mut ChaCha8Rng, len: usize) -> Vec<Generator> {
    (0..len)
        .map(|_| match r.random_range(0..3) {
            0 => Generator::Rot(r.random_range(-7.0..7.0)),
            1 => Generator::Boost1(r.random_range(-2.0..2.0)),
            _ => Generator::Boost2(r.random_range(-2.0..2.0)),
        })
        .collect()
}

fn packet(m: f64, x1: f64, p1: f64, p2: f64) -> Result<TestPacket> {
    let p0 = (m * m + p1 * p1 + p2 * p2).sqrt();
    TestPacket::diagonal(3, C64::new(1.0, 0.0), &[0.0, x1, 0.3], &[p0, p1, p2], &[1.0, 1.0, 1.0])
}

fn test_fn(g: &Arc<GridMeasure>, s: f64) -> OneParticleFn {
    OneParticleFn::from_fn(g, |n| C64::new((-(n.theta - s).powi(2)).exp(), 0.3 * n.p2 + s))
}

fn params(ctx: &Ctx<'_>) -> Result<Deform3DParams> {
    ctx.config.deform3d.params(ctx.config.mass3())
}

/// Group law, Lorentz action, cocycle, `Omega(rot(w), p) = w` and the `v` factorization.
pub(super) fn cocycle(ctx: &mut Ctx<'_>) -> Result<()> {
    let m = ctx.config.mass3();
    let n = ctx.config.campaign.samples;
    let r = &mut ctx.rng;
    let (mut assoc, mut hom, mut coc, mut rot, mut vfac): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let (a, b, c) = (rand_el(r)?, rand_el(r)?, rand_el(r)?);
        assoc = assoc.max(((a * b) * c).chart_distance(&(a * (b * c))));
        let p = rand_p(r, m);
        let q = (a * b).act(m, &p)?;
        let q2 = a.act(m, &b.act(m, &p)?)?;
        hom = hom.max((0..3).map(|k| (q[k] - q2[k]).abs()).fold(0.0, f64::max) / q[0].max(1.0));
        let pa = a.inverse().act(m, &p)?;
        let lhs = (a * b).wigner_omega(m, &p)?;
        coc = coc.max((lhs - a.wigner_omega(m, &p)? - b.wigner_omega(m, &pa)?).abs());
        let w = r.random_range(-20.0..20.0);
        rot = rot.max((CoveringElement::rotation(w).wigner_omega(m, &p)? - w).abs());
        let t = r.random_range(-2.5..2.5);
        let lam = r.random_range(-1.0..1.0);
        let bt = CoveringElement::boost1(t);
        let qb = bt.inverse().act(m, &p)?;
        let l = cis(-lam * bt.wigner_omega(m, &p)?);
        let rr = cis(lam * (v_angle(m, &p) - v_angle(m, &qb)));
        vfac = vfac.max((l - rr).norm());
    }
    let p = json!({"samples": n, "mass": m});
    for (name, v) in
        [("associativity", assoc), ("lorentz-homomorphism", hom), ("cocycle", coc), ("rotation-omega", rot), ("v-factorization", vfac)]
    {
        ctx.push(CheckRecord::at_most(format!("cocycle/{name}"), p.clone(), v, 1e-10));
    }
    Ok(())
}

/// `-k = 2N + 1` over random separated pairs with `|N| <= 3`, plus every
/// ordered pair of configured wedges that are causal complements.
pub(super) fn winding(ctx: &mut Ctx<'_>) -> Result<()> {
    let n = ctx.config.campaign.samples;
    let mut bad = 0usize;
    let mut hist = [0usize; 7];
    for _ in 0..n {
        let r = &mut ctx.rng;
        let w = WedgePath::from_word(&random_word(r, 3));
        // k in -7..=5 keeps |N| <= 3
        let k = 2 * r.random_range(-4..3) + 1;
        let mut word = w.word().to_vec();
        word.push(Generator::Rot(k as f64 * PI));
        word.push(Generator::Boost1(r.random_range(-2.0..2.0)));
        let w2 = WedgePath::from_word(&word);
        match (winding_number(&w, &w2), k_factor(&w, &w2)) {
            (Ok(nn), Ok(kk)) if kk == k && -kk == 2 * nn + 1 && nn.abs() <= 3 => hist[(nn + 3) as usize] += 1,
            _ => bad += 1,
        }
    }
    let p = json!({"samples": n, "n_histogram": {"-3": hist[0], "-2": hist[1], "-1": hist[2], "0": hist[3], "1": hist[4], "2": hist[5], "3": hist[6]}});
    ctx.push(CheckRecord::at_most("winding/lemma", p, bad as f64, 0.0));
    let wedges = &ctx.config.wedges;
    let mut recs = Vec::new();
    for (a, sa) in wedges {
        for (b, sb) in wedges {
            if a == b {
                continue;
            }
            let (w1, w2) = (sa.build()?, sb.build()?);
            let (Ok(nn), Ok(kk)) = (winding_number(&w1, &w2), k_factor(&w1, &w2)) else { continue };
            let p = json!({"wedge1": sa.word, "wedge2": sb.word, "N": nn, "k": kk});
            recs.push(CheckRecord::at_most(format!("winding/pair/{a},{b}"), p, (-kk - (2 * nn + 1)).abs() as f64, 0.0));
        }
    }
    for r in recs {
        ctx.push(r);
    }
    Ok(())
}

/// Condition on `f`, boost consistency of `u0`, the intertwining relation and the constant `u` ratio.
pub(super) fn intertwiners(ctx: &mut Ctx<'_>) -> Result<()> {
    let base = params(ctx)?;
    let m = base.mass();
    let n = ctx.config.campaign.samples;
    let r = &mut ctx.rng;
    let mut condf: f64 = 0.0;
    for _ in 0..n {
        let k = r.random_range(-10.0..10.0);
        for s in [1, -1] {
            condf = condf.max(condf_residual(m, s, k));
        }
    }
    condf = condf.max(condf_residual(m, base.sign(), base.kappa()));
    let mut boost: f64 = 0.0;
    for _ in 0..n {
        let p = rand_p(r, m);
        let t = r.random_range(-2.5..2.5);
        let pr = base.with_lambda(r.random_range(-1.0..1.0));
        let b = CoveringElement::boost1(t);
        let q = b.inverse().act(m, &p)?;
        let c = cis(-pr.lambda() * b.wigner_omega(m, &p)?) * eval_u0(&pr, &q)?;
        boost = boost.max((c - eval_u0(&pr, &p)?).norm());
    }
    let mut inter: f64 = 0.0;
    for _ in 0..(n / 3).max(1) {
        let pr = base.with_lambda(r.random_range(-1.0..1.0));
        let w = rand_wedge(r);
        let p = rand_p(r, m);
        let g = [Generator::Rot(r.random_range(-4.0..4.0)), Generator::Boost2(r.random_range(-1.0..1.0))];
        let ge = g[0].element() * g[1].element();
        let lhs = cis(-pr.lambda() * ge.wigner_omega(m, &p)?) * eval_uw(&pr, &w, &ge.inverse().act(m, &p)?)?;
        inter = inter.max((lhs - eval_uw(&pr, &w.left_mul(&g), &p)?).norm());
        // x1-boosts stabilize the wedge
        let mut word = w.word().to_vec();
        word.push(Generator::Boost1(r.random_range(-2.0..2.0)));
        inter = inter.max((eval_uw(&pr, &WedgePath::from_word(&word), &p)? - eval_uw(&pr, &w, &p)?).norm());
    }
    let (mut var_max, mut mean_err): (f64, f64) = (0.0, 0.0);
    let pairs = (n / 20).max(1);
    for _ in 0..pairs {
        let pr = base.with_lambda(r.random_range(-1.0..1.0));
        let w = rand_wedge(r);
        let k = 2 * r.random_range(-3..3) + 1;
        let w2 = w.complement(k);
        let ratios = (0..100).map(|_| u_ratio(&pr, &w, &w2, &rand_p(r, m))).collect::<Result<Vec<C64>>>()?;
        let mean = ratios.iter().sum::<C64>() / 100.0;
        let var = ratios.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / 100.0;
        var_max = var_max.max(var);
        mean_err = mean_err.max((mean - ratio_phase(pr.lambda(), k)).norm());
    }
    let p = json!({"samples": n, "mass": m, "kappa": base.kappa(), "f_sign": base.sign()});
    ctx.push(CheckRecord::at_most("u-ratio/condf", p.clone(), condf, 1e-14));
    ctx.push(CheckRecord::at_most("u-ratio/boost-consistency", p.clone(), boost, 1e-10));
    ctx.push(CheckRecord::at_most("u-ratio/intertwining", p.clone(), inter, 1e-10));
    let p = json!({"wedge_pairs": pairs, "momenta_per_pair": 100});
    ctx.push(CheckRecord::at_most("u-ratio/variance", p.clone(), var_max, 1e-20));
    ctx.push(CheckRecord::at_most("u-ratio/phase", p, mean_err, 1e-10));
    Ok(())
}

fn exchange_trial(ctx: &mut Ctx<'_>, label: &str, pr: Deform3DParams, w: WedgePath, k: i64) -> Result<()> {
    let g = ctx.config.grid3d()?;
    let nmax = ctx.nmax().max(2);
    let w2 = w.complement(k);
    let d = Deform3D::new(pr.clone(), &w, &g)?;
    let d2 = Deform3D::new(pr.clone(), &w2, &g)?;
    let (phi, psi) = (test_fn(&g, ctx.rng.random_range(-1.0..1.0)), test_fn(&g, ctx.rng.random_range(-1.0..1.0)));
    let info = json!({"lambda": pr.lambda(), "k": k, "nmax": nmax, "nodes": g.len()});
    for rel in &Relation3::ALL[..4] {
        let inputs = || ExchangeInputs::Ladder { phi: &phi, psi: &psi };
        let rep = exchange_residual3(&d, &d2, *rel, inputs(), nmax, 0.0, ctx.mode)?;
        ctx.push(CheckRecord::at_most(format!("exchange-3d/{label}/{rel:?}"), info.clone(), rep.residual, 1e-11));
        let bad = exchange_residual3(&d, &d2, *rel, inputs(), nmax, 0.5, ctx.mode)?;
        ctx.push(CheckRecord::above(format!("exchange-3d/{label}/{rel:?}/control"), info.clone(), bad.residual, 1e-3));
    }
    // packets localized in W and W' (standard-frame centers mapped by L_W)
    let l = w.lorentz();
    let m = g.mass();
    let f = packet(m, 3.0, 0.4, 0.1)?.transform(&[0.0; 3], &l)?;
    let h = packet(m, -3.0, -0.2, 0.0)?.transform(&[0.0; 3], &l)?;
    let (fi, hi) = (FieldInput::from_packet(&f, &g)?, FieldInput::from_packet(&h, &g)?);
    let scale = (fi.plus.norm() * hi.plus.norm()).max(1.0);
    let p = json!({"lambda": pr.lambda(), "k": k, "nmax": nmax, "scale": scale});
    let rep = exchange_residual3(&d, &d2, Relation3::FieldPhiPhi, ExchangeInputs::Field { f: &fi, g: &hi }, nmax, 0.0, ctx.mode)?;
    ctx.push(CheckRecord::at_most(format!("exchange-3d/{label}/FieldPhiPhi"), p.clone(), rep.residual, 1e-11 * scale));
    let rep = exchange_residual3(&d, &d2, Relation3::FieldPhiPhistar, ExchangeInputs::Field { f: &fi, g: &hi }, nmax, 0.0, ctx.mode)?;
    let alg = rep.algebraic.ok_or_else(|| Error::Internal("missing algebraic residual".into()))?;
    ctx.push(CheckRecord::at_most(format!("exchange-3d/{label}/FieldPhiPhistar-algebraic"), p, alg, 1e-11 * scale));
    Ok(())
}

pub(super) fn exchange(ctx: &mut Ctx<'_>) -> Result<()> {
    let base = params(ctx)?;
    for t in 0..ctx.config.campaign.trials {
        let lam = ctx.rng.random_range(-1.0..1.0);
        let w = rand_wedge(&mut ctx.rng);
        let k = 2 * ctx.rng.random_range(-2..2) + 1;
        exchange_trial(ctx, &format!("random-{t}"), base.with_lambda(lam), w, k)?;
    }
    exchange_trial(ctx, "config", base.clone(), WedgePath::standard(), 1)?;
    let m = base.mass();
    let mut collapse: f64 = 0.0;
    let n = (ctx.config.campaign.samples / 10).max(1);
    for _ in 0..n {
        let r = &mut ctx.rng;
        let pr = base.with_lambda(r.random_range(-1.0..1.0));
        let w = rand_wedge(r);
        let w2 = w.complement(2 * r.random_range(-3..3) + 1);
        let p = rand_p(r, m);
        for q in -2..=2 {
            collapse = collapse.max(u_phase_collapse(&pr, &w, &w2, &p, q)?);
        }
    }
    ctx.push(CheckRecord::at_most("exchange-3d/u-phase-collapse", json!({"samples": n, "charges": [-2, 2]}), collapse, 1e-12));
    let one = C64::new(1.0, 0.0);
    let ks = [-3i64, -1, 1, 3, 5];
    let bose = ks.iter().flat_map(|&k| [-1.0, 0.0, 1.0, 2.0].map(|l| (exchange_phase(l, k) - one).norm())).fold(0.0, f64::max);
    let fermi = ks.iter().flat_map(|&k| [-0.5, 0.5, 1.5].map(|l| (exchange_phase(l, k) + one).norm())).fold(0.0, f64::max);
    ctx.push(CheckRecord::at_most("exchange-3d/bose", json!({"lambda": [-1, 0, 1, 2], "k": ks}), bose, 0.0));
    ctx.push(CheckRecord::at_most("exchange-3d/fermi", json!({"lambda": [-0.5, 0.5, 1.5], "k": ks}), fermi, 0.0));
    Ok(())
}

/// `Phi Phi'*` after the `(theta, p2)` contour shift, for packets separated along `x1`.
pub(super) fn crossing_shift(ctx: &mut Ctx<'_>) -> Result<()> {
    let pr = params(ctx)?;
    let m = pr.mass();
    let config = [[m.hypot(0.5).hypot(0.3), 0.5, 0.3], [m.hypot(0.7), 0.0, -0.7]];
    // e^{i p1 x1} oscillates fast in theta at large separation
    let (tx, tw) = nodes_weights(Rule::GaussLegendre, 480, -4.5, 4.5);
    let (qx, qw) = nodes_weights(Rule::GaussLegendre, 128, -5.0, 5.0);
    let ts: Vec<f64> = (0..13).map(|i| -3.0 + 0.5 * i as f64).collect();
    let ps: Vec<f64> = (0..7).map(|i| -1.5 + 0.5 * i as f64).collect();
    let sg = ShiftGrid { theta_samples: &ts, p2_samples: &ps, theta_quad: (&tx, &tw), p2_quad: (&qx, &qw) };
    let seps = [4.0, 6.0, 8.0, 10.0];
    let mut totals = Vec::new();
    let mut rows = Vec::new();
    for s in seps {
        let rep = crossing_shift_check3(&packet(m, s / 2.0, 0.3, 0.1)?, &packet(m, -s / 2.0, -0.2, 0.0)?, &pr, &config, &sg)?;
        let p = json!({"lambda": pr.lambda(), "separation": s, "quadrature": [480, 128]});
        ctx.push(CheckRecord::at_most(format!("crossing-shift/3d/boundary/sep={s}"), p.clone(), rep.boundary_f.max(rep.boundary_g), 1e-10));
        ctx.push(CheckRecord::at_most(format!("crossing-shift/3d/pointwise/sep={s}"), p.clone(), rep.pointwise, 1e-10));
        ctx.push(CheckRecord::at_most(format!("crossing-shift/3d/im-positivity/sep={s}"), p, (-rep.im_min).max(0.0), 1e-12));
        rows.push((s, rep.pointwise, rep.total));
        totals.push(rep.total);
    }
    let rises = totals.windows(2).filter(|w| !(w[1] < w[0])).count();
    let p = json!({"lambda": pr.lambda(), "separations": seps, "totals": totals});
    ctx.push(CheckRecord::at_most("crossing-shift/3d/monotone", p.clone(), rises as f64, 0.0));
    ctx.push(CheckRecord::at_most("crossing-shift/3d/total", p, *totals.last().expect("four separations"), 1e-8));
    ctx.out.tables.push(("crossing_shift_3d.csv".into(), super::shift_table(3, &rows)?));
    Ok(())
}

/// Functional quadrature grid for scattering states (no dense matrices involved).
fn scattering_grid(m: f64) -> Result<Arc<GridMeasure>> {
    Ok(Arc::new(GridMeasure::shell3(m, Rule::GaussLegendre, 18, 2.6, 10, 1.5)?))
}

/// Right mover and left mover in the standard frame, carried along with `W`.
fn default_pair(m: f64, w: &WedgePath) -> Result<(TestPacket, TestPacket)> {
    let mk = |x: [f64; 2], p: [f64; 2]| {
        let p0 = (m * m + p[0] * p[0] + p[1] * p[1]).sqrt();
        TestPacket::diagonal(3, C64::new(1.0, 0.0), &[0.0, x[0], x[1]], &[p0, p[0], p[1]], &[4.0; 3])
    };
    let l = w.lorentz();
    Ok((mk([0.5, 0.0], [2.0, 0.1])?.transform(&[0.0; 3], &l)?, mk([-0.5, 0.2], [-2.0, 0.0])?.transform(&[0.0; 3], &l)?))
}

pub(super) fn smatrix(ctx: &mut Ctx<'_>) -> Result<()> {
    let base = params(ctx)?;
    let m = base.mass();
    let g = scattering_grid(m)?;
    let std = WedgePath::standard();
    let rw = WedgePath::from_word(&[Generator::Rot(ctx.rng.random_range(-3.0..3.0))]);
    let cases = [(base.lambda(), std.clone()), (ctx.rng.random_range(-1.0..1.0), rw)];
    for (ci, (lam, w)) in cases.iter().enumerate() {
        let (f, h) = default_pair(m, w)?;
        for k in [1, -1, 3] {
            let setup = ScatteringSetup::new(base.with_lambda(*lam), w.clone(), w.complement(k))?;
            let out = out_state(&setup, &f, &h, &g)?;
            let scale = out.state.norm();
            let r1 = out.state.distance(&out_state_kernel(&setup, &f, &h, &g)?)? / scale;
            let inn = in_state(&setup, &f, &h, &g)?;
            let r2 = inn.state.distance(&in_state_kernel(&setup, &f, &h, &g)?)? / scale;
            let p = json!({"lambda": lam, "k": k, "case": ci, "relative": true});
            ctx.push(CheckRecord::at_most(format!("smatrix/kernel/case{ci}/k={k}"), p, r1.max(r2), 1e-12));
        }
        let setup = ScatteringSetup::new(base.with_lambda(*lam), w.clone(), w.complement(1))?;
        let h2 = h.transform(&[0.3, 0.0, 0.1], &CoveringElement::IDENTITY.lorentz())?;
        let s1 = smatrix_from_states(&setup, [&f, &h, &f, &h2], &g)?;
        let s2 = smatrix_element(&setup, [&f, &h, &f, &h2], &g)?;
        let p = json!({"lambda": lam, "k": 1, "case": ci, "s": [s2.re, s2.im]});
        ctx.push(CheckRecord::at_most(format!("smatrix/quadrature/case{ci}"), p, (s1 - s2).norm() / s2.norm(), 1e-10));
    }
    // configured packets, when present, replace the default out pair
    if let (Some(f), Some(h)) = (ctx.config.packet("f")?, ctx.config.packet("g")?) {
        let setup = ScatteringSetup::standard(base.clone())?;
        let s2 = smatrix_element(&setup, [&f, &h, &f, &h], &g).map_err(|e| match e {
            Error::Precondition(s) => Error::Config(format!("packets.f/packets.g: {s}")),
            other => other,
        })?;
        let s1 = smatrix_from_states(&setup, [&f, &h, &f, &h], &g)?;
        let p = json!({"lambda": base.lambda(), "k": 1, "packets": ["f", "g"], "s": [s2.re, s2.im]});
        ctx.push(CheckRecord::at_most("smatrix/quadrature/config", p, (s1 - s2).norm() / s2.norm().max(f64::MIN_POSITIVE), 1e-10));
    }
    let mut rows = Vec::new();
    let momenta = [([1.5, 0.2], [-1.2, -0.1]), ([2.0, 0.0], [-1.0, 0.3]), ([1.0, -0.4], [-1.8, 0.2])];
    for k in [1, -3] {
        let setup = ScatteringSetup::new(base.clone(), std.clone(), std.complement(k))?;
        for (p1, p2) in momenta {
            let r = narrow_packet_phase(&setup, p1, p2, 60.0, 24)?;
            let p = json!({"lambda": base.lambda(), "k": k, "p1": p1, "p2": p2, "width": 60.0, "nodes": 24});
            ctx.push(CheckRecord::at_most(format!("smatrix/narrow/k={k}/p1=({},{})", p1[0], p1[1]), p, r.relative, 1e-3));
            rows.push(r);
        }
    }
    ctx.out.tables.push(("smatrix.csv".into(), smatrix_csv(&rows)?));
    let (f, h) = default_pair(m, &std)?;
    for k in [1, -1, 3, -3] {
        let setup = ScatteringSetup::new(base.clone(), std.clone(), std.complement(k))?;
        let a = out_state(&setup, &f, &h, &g)?.state;
        let b = out_state(&setup.swapped()?, &h, &f, &g)?.state;
        let r = a.distance(&b.scale(exchange_phase(base.lambda(), k)))? / a.norm();
        ctx.push(CheckRecord::at_most(format!("smatrix/exchange-phase/k={k}"), json!({"lambda": base.lambda(), "k": k}), r, 1e-12));
    }
    Ok(())
}

pub(super) fn oracle_diff(ctx: &mut Ctx<'_>) -> Result<()> {
    let g = ctx.config.grid3d()?;
    let nmax = ctx.nmax();
    let basis = OccupationBasis::new(&g, nmax, DEFAULT_DIMENSION_BOUND)?;
    let cols: Vec<usize> = (0..basis.dim()).collect();
    let info = json!({"grid": "3d", "nodes": g.len(), "nmax": nmax, "dim": basis.dim()});
    let phi = test_fn(&g, ctx.rng.random_range(-1.0..1.0));
    fock_oracles(ctx, "3d", &basis, &phi, &info)?;
    let pr = params(ctx)?.with_lambda(ctx.rng.random_range(-1.0..1.0));
    let w = rand_wedge(&mut ctx.rng);
    let d = Deform3D::new(pr, &w, &g)?;
    for node in [0, g.len() - 1] {
        for conjugate in [false, true] {
            let func = basis.materialize(|v| if conjugate { d.apply_t3c(node, v) } else { d.apply_t3(node, v) })?;
            let r = column_residual(&to_dense(&d.oracle_t3(&basis, node, conjugate)), &func, &cols);
            let id = format!("oracle-diff/deform3d/T{}/node={node}", if conjugate { "c" } else { "" });
            ctx.push(CheckRecord::at_most(id, info.clone(), r, 1e-12));
        }
    }
    for sp in [Species::Particle, Species::Antiparticle] {
        for dir in [Direction::Annihilate, Direction::Create] {
            let oracle = to_dense(&d.oracle_ladder(&basis, sp, dir, &phi)?);
            let func = basis.materialize(|v| d.ladder(sp, dir, &phi, v))?;
            let id = format!("oracle-diff/deform3d/{}", op_name(sp, dir));
            ctx.push(CheckRecord::at_most(id, info.clone(), column_residual(&oracle, &func, &cols), 1e-12));
        }
    }
    Ok(())
}
