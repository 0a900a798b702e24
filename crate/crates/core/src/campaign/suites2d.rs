//! Suites on the rapidity line: CCR, deformation functions, 2D exchange
//! relations, the charge twist, the 2D contour shift and 2D oracle diffs.

use super::{CheckRecord, Ctx};
use crate::config::PhaseModeName;
use crate::deform2d::{
    apply_t2, crossing_shift_check2, Configuration, Deform2D, Deform2DParams, ExchangeInputs, FieldInput, FieldKind, Relation, Variant,
};
use crate::fock::dense::{adjoint, column_residual, to_dense, OccupationBasis, DEFAULT_DIMENSION_BOUND};
use crate::fock::{
    apply_charge, apply_charge_conjugation, apply_j, apply_ladder, apply_phase_by_charge, ccr_residual, Direction, FockVector, GridMeasure,
    OneParticleFn, Species,
};
use crate::funcs::{
    check_crossing, check_real_conditions, check_upper_boundary, real_samples, strip_bound_probe, ChargedPair, Component, CrossBreaker,
    CrossingTarget, DeformationFunction, Family, FunctionSpec, RPlus, StandardR, DEFAULT_STRIP_BOUND,
};
use crate::phase::cis;
use crate::quad::{nodes_weights, Rule};
use crate::waves::TestPacket;
use crate::{Result, C64};
use rand::RngExt;
use serde_json::json;
use std::f64::consts::PI;
use std::sync::Arc;

const LADDERS: [(Species, Direction); 4] = [
    (Species::Particle, Direction::Annihilate),
    (Species::Particle, Direction::Create),
    (Species::Antiparticle, Direction::Annihilate),
    (Species::Antiparticle, Direction::Create),
];

const LADDER_RELATIONS: [Relation; 4] = [Relation::LadderAa, Relation::LadderAb, Relation::LadderAastar, Relation::LadderAbstar];

pub(super) fn op_name(sp: Species, dir: Direction) -> &'static str {
    match (sp, dir) {
        (Species::Particle, Direction::Annihilate) => "a",
        (Species::Particle, Direction::Create) => "a*",
        (Species::Antiparticle, Direction::Annihilate) => "b",
        (Species::Antiparticle, Direction::Create) => "b*",
    }
}

fn test_fn(g: &Arc<GridMeasure>, s: f64) -> OneParticleFn {
    OneParticleFn::from_fn(g, |n| C64::new((-(n.theta - s).powi(2)).exp(), 0.3 * (n.theta + s).sin()))
}

fn packet(mass: f64, x1: f64, p1: f64) -> Result<TestPacket> {
    TestPacket::diagonal(2, C64::new(1.0, 0.0), &[0.0, x1], &[mass.hypot(p1), p1], &[1.0, 1.0])
}

fn sample_pair(w: f64, a: f64, root: C64, mu: f64) -> Result<ChargedPair> {
    let plus = RPlus { breaker: Some(CrossBreaker::new(w)?), standard: StandardR::new(1, a, &[root])? };
    Ok(ChargedPair::new(plus, mu))
}

/// The pair named by `[deform2d] function`, with `mu` and mode applied.
fn configured_params(ctx: &Ctx<'_>) -> Result<Option<(String, Deform2DParams)>> {
    let cfg = &ctx.config.deform2d;
    let Some(name) = &cfg.function else { return Ok(None) };
    let spec = &ctx.config.function[name];
    let plus = match spec.build()? {
        DeformationFunction::Charged(p) => p.plus().clone(),
        DeformationFunction::Standard(s) => RPlus { breaker: None, standard: s },
        DeformationFunction::CrossBreaker(_) => unreachable!("rejected by validation"),
    };
    let mu = cfg.mu.unwrap_or(spec.mu);
    let params = match cfg.mode {
        PhaseModeName::Strict => Deform2DParams::strict(ChargedPair::new(plus, mu))?,
        PhaseModeName::Exploratory => {
            Deform2DParams::exploratory(ChargedPair::with_nu(plus, mu, cfg.nu.unwrap_or(-mu)), cfg.rho.unwrap_or(-mu / 2.0))
        }
    };
    Ok(Some((name.clone(), params)))
}

pub(super) fn ccr(ctx: &mut Ctx<'_>) -> Result<()> {
    let nmax = ctx.nmax();
    let grids = [("2d", ctx.config.grid2d()?), ("3d", ctx.config.grid3d()?)];
    for (label, g) in grids {
        let rep = ccr_residual(&g, nmax, ctx.mode)?;
        for (name, r) in &rep.relations {
            let p = json!({"grid": label, "nodes": g.len(), "nmax": nmax, "vectors": rep.vectors});
            ctx.push(CheckRecord::at_most(format!("ccr/{label}/{name}"), p, *r, 1e-12));
        }
        // <chi, c phi> = <c* chi, phi> as dense matrices
        let basis = OccupationBasis::new(&g, nmax, DEFAULT_DIMENSION_BOUND)?;
        let s = ctx.rng.random_range(-1.0..1.0);
        let phi = OneParticleFn::from_fn(&g, |n| C64::new((-(n.theta - s).powi(2)).exp(), 0.2 * n.p2 + 0.1 * n.theta));
        let cols: Vec<usize> = (0..basis.dim()).collect();
        for sp in [Species::Particle, Species::Antiparticle] {
            let ann = basis.materialize(|v| apply_ladder(sp, Direction::Annihilate, &phi, v))?;
            let cre = basis.materialize(|v| apply_ladder(sp, Direction::Create, &phi, v))?;
            let ann_dag = ann.t().mapv(|z| z.conj());
            let r = column_residual(&cre, &ann_dag, &cols);
            let p = json!({"grid": label, "nodes": g.len(), "nmax": nmax, "dim": basis.dim()});
            ctx.push(CheckRecord::at_most(format!("ccr/{label}/adjoint/{}", op_name(sp, Direction::Annihilate)), p, r, 1e-12));
        }
    }
    Ok(())
}

/// The crossing-breaker case is checked against neutral crossing on purpose:
/// that relation must fail, and the record is flagged as an expected violation.
pub(super) fn function(ctx: &mut Ctx<'_>) -> Result<()> {
    let defaults = || {
        let mut m = std::collections::BTreeMap::new();
        let base = FunctionSpec { family: Family::Standard, sign: 1, a: 0.4, roots: vec![[0.8, 0.5]], w: None, mu: 0.0 };
        m.insert("standard".to_string(), base.clone());
        m.insert("crossbreaker".to_string(), FunctionSpec { family: Family::CrossBreaker, w: Some(0.3), ..base.clone() });
        m.insert("charged".to_string(), FunctionSpec { family: Family::Charged, w: Some(0.3), mu: 2.0 * PI * 0.3, ..base });
        m
    };
    let specs = if ctx.config.function.is_empty() { defaults() } else { ctx.config.function.clone() };
    let xs = real_samples(1000, 6.0);
    for (name, spec) in &specs {
        let f = spec.build()?;
        let params = serde_json::to_value(spec).expect("spec serializes");
        let id = |s: &str| format!("function/{name}/{s}");
        let real = check_real_conditions(f.primary(), 0.0, &xs);
        for (part, r) in &real.parts {
            ctx.push(CheckRecord::at_most(id(&format!("real/{part}")), params.clone(), *r, 1e-12));
        }
        for (part, r) in &check_upper_boundary(f.primary(), &xs).parts {
            ctx.push(CheckRecord::at_most(id(&format!("upper/{part}")), params.clone(), *r, 1e-10));
        }
        let probe = strip_bound_probe(f.primary(), 200, 50, 6.0, DEFAULT_STRIP_BOUND)?;
        ctx.push(CheckRecord::at_most(id("strip-bound"), params.clone(), probe.max_modulus, DEFAULT_STRIP_BOUND));
        match &f {
            DeformationFunction::Standard(s) => {
                let r = check_crossing(CrossingTarget::Neutral(s), &xs).max;
                ctx.push(CheckRecord::at_most(id("crossing/neutral"), params.clone(), r, 1e-10));
            }
            DeformationFunction::CrossBreaker(c) => {
                let r = check_crossing(CrossingTarget::Neutral(c), &xs).max;
                ctx.push(CheckRecord::expected_violation(id("crossing/neutral"), params.clone(), r, 1e-10));
                if c.w() == 0.0 {
                    let r = check_crossing(CrossingTarget::SignFlip(c), &xs).max;
                    ctx.push(CheckRecord::at_most(id("crossing/sign-flip"), params.clone(), r, 1e-12));
                }
            }
            DeformationFunction::Charged(p) => {
                let big = p.component(Component::BigR);
                let r = check_real_conditions(&big, p.mu(), &xs).parts[0].1;
                ctx.push(CheckRecord::at_most(id("real/charged-reflection"), params.clone(), r, 1e-12));
                let r = check_crossing(CrossingTarget::Charged(p), &xs).max;
                ctx.push(CheckRecord::at_most(id("crossing/charged"), params.clone(), r, 1e-10));
            }
        }
    }
    Ok(())
}

/// Mixed-charge vector used by the twist checks.
fn mixed_state(g: &Arc<GridMeasure>, nmax: usize) -> Result<FockVector> {
    let mut v = FockVector::vacuum(g, nmax);
    v = apply_ladder(Species::Particle, Direction::Create, &test_fn(g, 0.2), &v)?;
    let w = apply_ladder(Species::Antiparticle, Direction::Create, &test_fn(g, -0.5), &v)?;
    let w = apply_ladder(Species::Particle, Direction::Create, &test_fn(g, 1.0), &w)?;
    v.add_scaled(C64::new(0.4, 0.1), &w)
}

fn exchange_trial(ctx: &mut Ctx<'_>, label: &str, params: Deform2DParams, info: serde_json::Value) -> Result<()> {
    let g = ctx.config.grid2d()?;
    let nmax = ctx.nmax().max(2);
    let d = Deform2D::new(params, &g)?;
    let (s1, s2) = (ctx.rng.random_range(-1.0..1.0), ctx.rng.random_range(-1.0..1.0));
    let (phi, psi) = (test_fn(&g, s1), test_fn(&g, s2));
    for rel in LADDER_RELATIONS {
        let inputs = || ExchangeInputs::Ladder { phi: &phi, psi: &psi };
        let r = d.exchange_residual(rel, inputs(), nmax, 0.0, ctx.mode)?;
        let p = json!({"pair": info, "relation": rel, "nmax": nmax, "nodes": g.len(), "vectors": r.vectors});
        ctx.push(CheckRecord::at_most(format!("exchange-2d/{label}/{rel:?}"), p.clone(), r.residual, 1e-12));
        let bad = d.exchange_residual(rel, inputs(), nmax, 0.5, ctx.mode)?;
        let mut p = p;
        p["control_mu_shift"] = json!(0.5);
        ctx.push(CheckRecord::above(format!("exchange-2d/{label}/{rel:?}/control"), p, bad.residual, 1e-3));
    }
    // Phi Phi-hat needs no support condition: overlapping packets
    let m = g.mass();
    let f = FieldInput::from_packet(&packet(m, 0.3, ctx.rng.random_range(-0.5..0.5))?, &g)?;
    let h = FieldInput::from_packet(&packet(m, -0.1, ctx.rng.random_range(-0.5..0.5))?, &g)?;
    let r = d.exchange_residual(Relation::FieldPhiHat, ExchangeInputs::Field { f: &f, g: &h }, nmax, 0.0, ctx.mode)?;
    let p = json!({"pair": info, "relation": "FieldPhiHat", "nmax": nmax, "nodes": g.len()});
    ctx.push(CheckRecord::at_most(format!("exchange-2d/{label}/FieldPhiHat"), p, r.residual, 1e-12));
    Ok(())
}

pub(super) fn exchange(ctx: &mut Ctx<'_>) -> Result<()> {
    for t in 0..ctx.config.campaign.trials {
        let w = ctx.rng.random_range(-0.9..0.9);
        let a = ctx.rng.random_range(0.0..1.0);
        let root = C64::new(ctx.rng.random_range(-1.5..1.5), ctx.rng.random_range(0.1..1.4));
        let mu = ctx.rng.random_range(-3.0..3.0);
        let params = Deform2DParams::strict(sample_pair(w, a, root, mu)?)?;
        let info = json!({"w": w, "a": a, "root": [root.re, root.im], "mu": mu});
        exchange_trial(ctx, &format!("random-{t}"), params, info)?;
    }
    if let Some((name, params)) = configured_params(ctx)? {
        let info = json!({"function": name, "mu": params.mu(), "nu": params.nu(), "rho": params.rho()});
        exchange_trial(ctx, &format!("config-{name}"), params, info)?;
    }
    charge_twist(ctx)
}

/// `T_{R,r} = (T x T) e^{i pi lambda (Q - 1/2)}` densely, and the field form
/// `Phi_{R,r}(f) = Phi_R(f) e^{-i pi lambda (Q + 1/2)}`.
fn charge_twist(ctx: &mut Ctx<'_>) -> Result<()> {
    let lambda = ctx.config.deform2d.lambda;
    let root = C64::new(ctx.rng.random_range(-1.5..1.5), ctx.rng.random_range(0.1..1.4));
    let a = ctx.rng.random_range(0.0..1.0);
    let neutral = StandardR::new(1, a, &[root])?;
    let g = ctx.config.grid2d()?;
    let nmax = ctx.nmax();
    let tw = Deform2D::new(Deform2DParams::charge_twist(neutral.clone(), lambda)?, &g)?;
    let plain = Deform2D::new(Deform2DParams::strict(ChargedPair::new(RPlus { breaker: None, standard: neutral }, 0.0))?, &g)?;
    let basis = OccupationBasis::new(&g, nmax, DEFAULT_DIMENSION_BOUND)?;
    let cols: Vec<usize> = (0..basis.dim()).collect();
    let theta = ctx.rng.random_range(-1.0..1.0);
    let lhs = basis.materialize(|v| apply_t2(theta, &tw, v))?;
    let rhs = basis.materialize(|v| {
        let t = apply_phase_by_charge(v, |q| cis(PI * lambda * (q as f64 - 0.5)));
        apply_t2(theta, &plain, &t)
    })?;
    let p = json!({"lambda": lambda, "a": a, "root": [root.re, root.im], "theta": theta, "dim": basis.dim()});
    ctx.push(CheckRecord::at_most("exchange-2d/charge-twist/dense-t", p.clone(), column_residual(&lhs, &rhs, &cols), 1e-12));
    let f = FieldInput::from_packet(&packet(g.mass(), 0.5, 0.3)?, &g)?;
    let psi = mixed_state(&g, nmax.max(3))?;
    let l = tw.field(FieldKind::Phi, &f, &psi)?;
    let twisted = apply_phase_by_charge(&psi, |q| cis(-PI * lambda * (q as f64 + 0.5)));
    let r = plain.field(FieldKind::Phi, &f, &twisted)?;
    ctx.push(CheckRecord::at_most("exchange-2d/charge-twist/field", p, l.distance(&r)?, 1e-12));
    Ok(())
}

pub(super) fn crossing_shift(ctx: &mut Ctx<'_>) -> Result<()> {
    let m = ctx.config.mass2();
    let k = ctx.config.deform2d.separation_sigma_multiplier;
    let (label, params) = match configured_params(ctx)? {
        Some((name, p)) => (name, p),
        None => ("default".to_string(), Deform2DParams::strict(sample_pair(0.3, 0.2, C64::new(0.9, 0.4), 2.0 * PI * 0.2)?)?),
    };
    let samples: Vec<f64> = (0..81).map(|i| -4.0 + 0.1 * i as f64).collect();
    let (xs, ws) = nodes_weights(Rule::GaussLegendre, 400, -9.0, 9.0);
    let conf = Configuration::default();
    let seps = [4.0, 6.0, 8.0, 10.0];
    let mut totals = Vec::new();
    let mut rows = Vec::new();
    for sep in seps {
        let (f, g) = (packet(m, sep / 2.0, 0.0)?, packet(m, -sep / 2.0, 0.0)?);
        let r = crossing_shift_check2(&f, &g, &params, m, &conf, &samples, (&xs, &ws))?;
        let separated = sep / 2.0 > k * f.spatial_spread();
        let p = json!({"pair": label, "separation": sep, "support_separated": separated, "sigma_multiplier": k});
        ctx.push(CheckRecord::at_most(format!("crossing-shift/2d/pointwise/sep={sep}"), p, r.pointwise, 1e-10));
        rows.push((sep, r.pointwise, r.total));
        totals.push(r.total);
    }
    let rises = totals.windows(2).filter(|w| !(w[1] < w[0])).count();
    let p = json!({"pair": label, "separations": seps, "totals": totals});
    ctx.push(CheckRecord::at_most("crossing-shift/2d/monotone", p.clone(), rises as f64, 0.0));
    ctx.push(CheckRecord::at_most("crossing-shift/2d/total", p, *totals.last().expect("four separations"), 1e-8));
    // R- taken equal to R+ breaks the charged crossing relation
    let bad = Deform2DParams::strict(ChargedPair::mispaired(
        RPlus { breaker: Some(CrossBreaker::new(0.5)?), standard: StandardR::trivial() },
        0.0,
    ))?;
    let r = crossing_shift_check2(&packet(m, 3.0, 0.0)?, &packet(m, -3.0, 0.0)?, &bad, m, &conf, &samples, (&xs, &ws))?;
    ctx.push(CheckRecord::above("crossing-shift/2d/mispaired-control", json!({"w": 0.5}), r.pointwise, 1e-2));
    ctx.out.tables.push(("crossing_shift_2d.csv".into(), super::shift_table(2, &rows)?));
    Ok(())
}

pub(super) fn oracle_diff(ctx: &mut Ctx<'_>) -> Result<()> {
    let g = ctx.config.grid2d()?;
    let nmax = ctx.nmax();
    let basis = OccupationBasis::new(&g, nmax, DEFAULT_DIMENSION_BOUND)?;
    let cols: Vec<usize> = (0..basis.dim()).collect();
    let info = json!({"grid": "2d", "nodes": g.len(), "nmax": nmax, "dim": basis.dim()});
    let s = ctx.rng.random_range(-1.0..1.0);
    let phi = test_fn(&g, s);
    fock_oracles(ctx, "2d", &basis, &phi, &info)?;

    let pair = sample_pair(
        ctx.rng.random_range(-0.9..0.9),
        ctx.rng.random_range(0.0..1.0),
        C64::new(ctx.rng.random_range(-1.5..1.5), ctx.rng.random_range(0.1..1.4)),
        ctx.rng.random_range(-3.0..3.0),
    )?;
    let d = Deform2D::new(Deform2DParams::strict(pair.clone())?, &g)?;
    for (sp, dir) in LADDERS {
        for var in [Variant::Plain, Variant::Bar] {
            let oracle = to_dense(&d.oracle_ladder(&basis, sp, dir, var, &phi)?);
            let func = basis.materialize(|v| d.ladder(sp, dir, var, &phi, v))?;
            let id = format!("oracle-diff/deform2d/{}{}", op_name(sp, dir), if var == Variant::Bar { "-bar" } else { "" });
            ctx.push(CheckRecord::at_most(id, info.clone(), column_residual(&oracle, &func, &cols), 1e-12));
        }
    }
    // T(theta) is diagonal in occupation numbers: e^{i rho/2} prod R(theta - p) prod r(theta - a)
    let theta = ctx.rng.random_range(-1.0..1.0);
    let nodes = g.nodes();
    let pre = cis(d.params().rho() / 2.0);
    let oracle = to_dense(&basis.diagonal(|st| {
        let mut v = pre;
        for &i in &st.particles {
            v *= pair.big_r(C64::new(theta - nodes[i].theta, 0.0));
        }
        for &i in &st.antiparticles {
            v *= pair.small_r(C64::new(theta - nodes[i].theta, 0.0));
        }
        v
    }));
    let func = basis.materialize(|v| apply_t2(theta, &d, v))?;
    ctx.push(CheckRecord::at_most("oracle-diff/deform2d/T", info, column_residual(&oracle, &func, &cols), 1e-12));
    Ok(())
}

/// Undeformed ladders, charge, `C` and `J` against their occupation-basis matrices.
pub(super) fn fock_oracles(
    ctx: &mut Ctx<'_>,
    label: &str,
    basis: &OccupationBasis,
    phi: &OneParticleFn,
    info: &serde_json::Value,
) -> Result<()> {
    let cols: Vec<usize> = (0..basis.dim()).collect();
    for (sp, dir) in LADDERS {
        let oracle = to_dense(&basis.ladder(sp, dir, phi)?);
        let func = basis.materialize(|v| apply_ladder(sp, dir, phi, v))?;
        let id = format!("oracle-diff/fock-{label}/{}", op_name(sp, dir));
        ctx.push(CheckRecord::at_most(id, info.clone(), column_residual(&oracle, &func, &cols), 1e-12));
    }
    let q = basis.materialize(|v| Ok(apply_charge(v)))?;
    let r = column_residual(&to_dense(&basis.charge()), &q, &cols);
    ctx.push(CheckRecord::at_most(format!("oracle-diff/fock-{label}/Q"), info.clone(), r, 1e-12));
    let c = basis.materialize(|v| Ok(apply_charge_conjugation(v)))?;
    let r = column_residual(&to_dense(&basis.charge_conjugation()), &c, &cols);
    ctx.push(CheckRecord::at_most(format!("oracle-diff/fock-{label}/C"), info.clone(), r, 1e-12));
    // basis vectors are real, so the columns of J are those of its unitary part
    let beta = ctx.rng.random_range(-PI..PI);
    let j = basis.materialize(|v| apply_j(beta, v))?;
    let r = column_residual(&to_dense(&basis.j_unitary(beta)?), &j, &cols);
    ctx.push(CheckRecord::at_most(format!("oracle-diff/fock-{label}/J"), info.clone(), r, 1e-12));
    // antilinearity: J(i psi) = -i J psi
    let psi = basis.to_fock(&(0..basis.dim()).map(|i| C64::new((0.7 * i as f64).sin(), (0.3 * i as f64).cos())).collect::<Vec<_>>());
    let lhs = apply_j(beta, &psi.scale(C64::new(0.0, 1.0)))?;
    let rhs = apply_j(beta, &psi)?.scale(C64::new(0.0, -1.0));
    ctx.push(CheckRecord::at_most(format!("oracle-diff/fock-{label}/J-antilinear"), info.clone(), lhs.distance(&rhs)?, 1e-12));
    let adj = adjoint(&basis.ladder(Species::Particle, Direction::Annihilate, phi)?);
    let cre = to_dense(&basis.ladder(Species::Particle, Direction::Create, phi)?);
    ctx.push(CheckRecord::at_most(
        format!("oracle-diff/fock-{label}/dense-adjoint"),
        info.clone(),
        column_residual(&to_dense(&adj), &cre, &cols),
        1e-12,
    ));
    Ok(())
}
