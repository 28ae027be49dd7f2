//! The property suite: every module's checks on every system of a corpus,
//! as a deterministic machine-readable report.
//!
//! Items are independent and run in parallel. Each item draws from its own
//! generator seeded by the suite seed and its position, and items are
//! reported in a fixed order, so a report depends only on the inputs.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coeff::{amenability_witness_check, CoeffMap};
use crate::correspondence::{
    coefficient_from_correspondence, conjugation_action, localize, scalar_conjugation_action,
    AlgebraCorrespondence, CrossedCorrespondence,
};
use crate::crossed::{CrossedElement, RegularRep};
use crate::equivariant::EquivariantRep;
use crate::linalg::{self, cx};
use crate::module;
use crate::multiplier::{decompose, CrossedContext, MultiplierMap};
use crate::par::{self, ExecMode};
use crate::reconstruct::{intertwiner, reconstruct, Realization};
use crate::samples;
use crate::system::TwistedSystem;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub tol: f64,
    /// Random inputs per item.
    pub samples: usize,
    pub mode: ExecMode,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 7,
            tol: crate::DEFAULT_TOL,
            samples: 6,
            mode: ExecMode::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SuiteItem {
    pub key: &'static str,
    pub system: String,
    pub passed: bool,
    pub metrics: BTreeMap<&'static str, f64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
    pub items: Vec<SuiteItem>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn failures(&self) -> impl Iterator<Item = &SuiteItem> {
        self.items.iter().filter(|i| !i.passed)
    }
}

struct Ctx<'a> {
    system: &'a Arc<TwistedSystem>,
    rng: ChaCha8Rng,
    cfg: &'a SuiteConfig,
}

type Metrics = BTreeMap<&'static str, f64>;
type Check = fn(&mut Ctx) -> (bool, Metrics);

/// Keys and checks in report order.
const CHECKS: &[(&str, Check)] = &[
    ("cocycle_identities", cocycle_identities),
    ("crossed_product_dimension", crossed_product_dimension),
    ("expectation_laws", expectation_laws),
    ("equivariant_axioms", equivariant_axioms),
    ("coefficient_sum_and_product", coefficient_sum_and_product),
    ("gelfand_raikov_roundtrip", gelfand_raikov_roundtrip),
    (
        "kernel_and_choi_verdicts_agree",
        kernel_and_choi_verdicts_agree,
    ),
    ("pd_norm_identity", pd_norm_identity),
    ("conjugation", conjugation),
    (
        "left_multiplier_conditions_agree",
        left_multiplier_conditions_agree,
    ),
    ("polarization", polarization),
    ("correspondence_roundtrip", correspondence_roundtrip),
    (
        "localized_conjugation_formula",
        localized_conjugation_formula,
    ),
    ("amenability_witness", amenability_witness),
];

/// Item keys in report order.
pub fn check_keys() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|(k, _)| *k)
}

pub fn run(systems: &[Arc<TwistedSystem>], cfg: &SuiteConfig) -> SuiteReport {
    let nc = CHECKS.len();
    let items = par::map_indexed(cfg.mode, systems.len() * nc, |i| {
        let (system, (key, check)) = (&systems[i / nc], CHECKS[i % nc]);
        let seed = cfg
            .seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(i as u64);
        let mut ctx = Ctx {
            system,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cfg,
        };
        let (passed, metrics) = check(&mut ctx);
        SuiteItem {
            key,
            system: system.name().to_string(),
            passed,
            metrics,
        }
    });
    SuiteReport {
        seed: cfg.seed,
        tolerance: cfg.tol,
        samples: cfg.samples,
        passed: items.iter().all(|i| i.passed),
        items,
    }
}

fn metrics<const N: usize>(pairs: [(&'static str, f64); N]) -> Metrics {
    pairs.into_iter().collect()
}

fn cocycle_identities(c: &mut Ctx) -> (bool, Metrics) {
    let worst = c
        .system
        .validate(f64::INFINITY)
        .map(|r| r.worst())
        .unwrap_or(f64::INFINITY);
    let sweep = c.system.inverse_cocycle_sweep();
    (
        worst <= c.cfg.tol && sweep <= 1e-10,
        metrics([("worst_identity", worst), ("inverse_cocycle_sweep", sweep)]),
    )
}

fn crossed_product_dimension(c: &mut Ctx) -> (bool, Metrics) {
    let reg = RegularRep::new(c.system);
    let st = reg.structure();
    let expected = c.system.algebra().dim() * c.system.order();
    (
        st.dim == expected,
        metrics([
            ("dim", st.dim as f64),
            ("expected", expected as f64),
            ("center_dim", st.center_dim as f64),
        ]),
    )
}

fn expectation_laws(c: &mut Ctx) -> (bool, Metrics) {
    let s = c.system;
    let alg = s.algebra();
    let reg = RegularRep::new(s);
    let unital = reg.expectation(&linalg::eye(reg.size())).dist(&alg.one());
    let (mut idempotent, mut equivariant) = (0.0f64, 0.0f64);
    let mut faithful = f64::INFINITY;
    let mut positive = true;
    for _ in 0..c.cfg.samples {
        let y = reg.image(&CrossedElement::random(s, &mut c.rng));
        let ey = reg.expectation(&y);
        idempotent = idempotent.max(reg.expectation(&reg.ell(&ey)).dist(&ey));
        for g in s.group().elements() {
            let l = reg.lambda(g);
            let conj = linalg::mul(&linalg::mul(l, &y), &l.adjoint());
            equivariant = equivariant.max(reg.expectation(&conj).dist(&s.alpha(g).apply(&ey)));
        }
        let x = linalg::mul(&y.adjoint(), &y);
        let ex = reg.expectation(&x);
        positive &= alg.is_positive(&ex, c.cfg.tol).unwrap_or(false);
        faithful = faithful.min(ex.norm() / linalg::op_norm(&x));
    }
    let tol = 1e-10;
    (
        unital <= tol && idempotent <= tol && equivariant <= tol && positive && faithful > 0.0,
        metrics([
            ("unital", unital),
            ("idempotent", idempotent),
            ("equivariant", equivariant),
            ("min_norm_ratio_on_positives", faithful),
        ]),
    )
}

fn equivariant_axioms(c: &mut Ctx) -> (bool, Metrics) {
    let mut worst = EquivariantRep::trivial(c.system)
        .axioms()
        .worst()
        .max(EquivariantRep::regular(c.system).axioms().worst());
    for _ in 0..c.cfg.samples {
        worst = worst.max(
            EquivariantRep::random(c.system, &mut c.rng)
                .axioms()
                .worst(),
        );
    }
    (worst <= 1e-9, metrics([("worst_axiom", worst)]))
}

fn coefficient_sum_and_product(c: &mut Ctx) -> (bool, Metrics) {
    let (mut sum_res, mut prod_res) = (0.0f64, 0.0f64);
    for _ in 0..c.cfg.samples {
        let r1 = EquivariantRep::random(c.system, &mut c.rng);
        let r2 = EquivariantRep::random(c.system, &mut c.rng);
        let (x1, y1) = (
            r1.module().random_vector(&mut c.rng),
            r1.module().random_vector(&mut c.rng),
        );
        let (x2, y2) = (
            r2.module().random_vector(&mut c.rng),
            r2.module().random_vector(&mut c.rng),
        );
        let (t1, t2) = (r1.coefficient(&x1, &y1), r2.coefficient(&x2, &y2));
        let sum = EquivariantRep::direct_sum(&[&r1, &r2]).expect("same system");
        let (xs, ys) = (
            module::sum_vector(&[&x1, &x2]),
            module::sum_vector(&[&y1, &y2]),
        );
        sum_res = sum_res.max(
            sum.coefficient(&xs, &ys)
                .dist(&t1.add(&t2).expect("same system")),
        );
        match r1.tensor(&r2, c.cfg.tol) {
            Ok((prod, t)) => {
                let lhs = prod.coefficient(&t.tensor(&x1, &x2), &t.tensor(&y1, &y2));
                prod_res = prod_res.max(lhs.dist(&t2.mul(&t1).expect("same system")));
            }
            Err(_) => prod_res = f64::INFINITY,
        }
    }
    (
        sum_res <= 1e-9 && prod_res <= 1e-9,
        metrics([("sum", sum_res), ("product", prod_res)]),
    )
}

fn gelfand_raikov_roundtrip(c: &mut Ctx) -> (bool, Metrics) {
    let (mut margin, mut coeff_res, mut inter_res) = (f64::INFINITY, 0.0f64, 0.0f64);
    for _ in 0..c.cfg.samples {
        let smp = samples::pd_sample(c.system, &mut c.rng);
        margin = margin.min(smp.map.positive_definite(c.cfg.tol).relative_margin());
        let Ok(first) = reconstruct(&smp.map, c.cfg.tol) else {
            coeff_res = f64::INFINITY;
            continue;
        };
        coeff_res = coeff_res.max(first.coefficient().dist(&smp.map));
        let second = match smp.rep.cyclic_subrep(&smp.vector, c.cfg.tol) {
            Ok((rep, vector)) => Realization { rep, vector },
            Err(_) => {
                inter_res = f64::INFINITY;
                continue;
            }
        };
        inter_res = match intertwiner(&smp.map, &first, &second, 1e-8) {
            Ok((_, r)) => inter_res.max(r.worst()),
            Err(_) => f64::INFINITY,
        };
    }
    (
        margin >= -1e-9 && coeff_res <= 1e-8 && inter_res <= 1e-8,
        metrics([
            ("min_relative_margin", margin),
            ("coefficient", coeff_res),
            ("intertwiner", inter_res),
        ]),
    )
}

fn kernel_and_choi_verdicts_agree(c: &mut Ctx) -> (bool, Metrics) {
    let s = c.system;
    let ctx = CrossedContext::new(s);
    let tol = c.cfg.tol;
    let mut maps: Vec<CoeffMap> = Vec::new();
    for _ in 0..c.cfg.samples {
        let smp = samples::pd_sample(s, &mut c.rng);
        maps.push(samples::non_pd_perturbation(&smp.map, &mut c.rng).0);
        maps.push(smp.map);
        let phi = samples::scalar_pd_function(s.group(), &mut c.rng);
        maps.push(
            CoeffMap::embed_scalar(s.clone(), &samples::scalar_non_pd_function(s.group(), &phi))
                .expect("sized"),
        );
        maps.push(CoeffMap::embed_scalar(s.clone(), &phi).expect("sized"));
    }
    let verdicts = par::map_indexed(c.cfg.mode, maps.len(), |i| {
        let kernel = maps[i].positive_definite(tol).positive;
        let cp = MultiplierMap::with_context(&maps[i], ctx.clone())
            .cp_report(tol)
            .positive;
        (kernel, cp)
    });
    let agree = verdicts.iter().filter(|(k, p)| k == p).count();
    let pd = verdicts.iter().filter(|(k, _)| *k).count();
    (
        agree == maps.len(),
        metrics([
            ("maps", maps.len() as f64),
            ("agreeing", agree as f64),
            ("positive", pd as f64),
        ]),
    )
}

fn pd_norm_identity(c: &mut Ctx) -> (bool, Metrics) {
    let ctx = CrossedContext::new(c.system);
    let mut worst = 0.0f64;
    for _ in 0..c.cfg.samples {
        let t = samples::pd_sample(c.system, &mut c.rng).map;
        let sup = t.sup_norm();
        let unit = t.at_unit().norm();
        let cp = MultiplierMap::with_context(&t, ctx.clone())
            .cp_norm(c.cfg.tol)
            .unwrap_or(f64::INFINITY);
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        worst = worst
            .max(rel(sup, unit))
            .max(rel(sup, cp))
            .max(rel(unit, cp));
    }
    (worst <= 1e-8, metrics([("worst_relative_gap", worst)]))
}

fn conjugation(c: &mut Ctx) -> (bool, Metrics) {
    let ctx = CrossedContext::new(c.system);
    let (mut mult, mut invol, mut swap) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..c.cfg.samples {
        let rep = EquivariantRep::random(c.system, &mut c.rng);
        let (x, y) = (
            rep.module().random_vector(&mut c.rng),
            rep.module().random_vector(&mut c.rng),
        );
        let t = rep.coefficient(&x, &y);
        let tc = t.conjugate();
        let m = MultiplierMap::with_context(&t, ctx.clone());
        let mc = MultiplierMap::with_context(&tc, ctx.clone());
        mult = mult.max(linalg::max_abs(&(mc.matrix() - m.conjugate_matrix())));
        invol = invol.max(tc.conjugate().dist(&t));
        swap = swap.max(tc.dist(&rep.coefficient(&y, &x)));
    }
    (
        mult <= 1e-10 && invol <= 1e-10 && swap <= 1e-10,
        metrics([("multiplier", mult), ("involution", invol), ("swap", swap)]),
    )
}

fn left_multiplier_conditions_agree(c: &mut Ctx) -> (bool, Metrics) {
    let s = c.system;
    let mut inputs = Vec::new();
    for _ in 0..c.cfg.samples {
        inputs.push(samples::central_ad_positive(s, &mut c.rng));
        inputs.push(samples::central_ad_negative(s, &mut c.rng));
        if !s.algebra().is_commutative() {
            inputs.push(samples::noncentral(s, &mut c.rng));
        }
    }
    let tol = c.cfg.tol;
    let conds = par::map_indexed(c.cfg.mode, inputs.len(), |i| {
        inputs[i].left_map_conditions(tol)
    });
    let agree = conds.iter().filter(|r| r.agree()).count();
    let positive = conds.iter().filter(|r| r.positive_definite).count();
    (
        agree == inputs.len(),
        metrics([
            ("inputs", inputs.len() as f64),
            ("agreeing", agree as f64),
            ("positive", positive as f64),
        ]),
    )
}

fn polarization(c: &mut Ctx) -> (bool, Metrics) {
    let (mut recon, mut matrix, mut margin) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..c.cfg.samples {
        let rep = EquivariantRep::random(c.system, &mut c.rng);
        let (x, y) = (
            rep.module().random_vector(&mut c.rng),
            rep.module().random_vector(&mut c.rng),
        );
        let t = rep.coefficient(&x, &y);
        let d = decompose(&rep, &x, &y, 1e-12);
        let mut sum = CoeffMap::zero(c.system.clone());
        for term in &d.terms {
            sum = sum.add(&term.map.scale(term.weight)).expect("same system");
            margin = margin.min(term.map.positive_definite(c.cfg.tol).relative_margin());
        }
        recon = recon.max(sum.dist(&t));
        matrix = matrix.max(d.matrix_residual);
    }
    (
        recon <= 1e-10 && matrix <= 1e-10 && margin >= -1e-9,
        metrics([
            ("reconstruction", recon),
            ("matrix", matrix),
            ("min_relative_margin", margin),
        ]),
    )
}

fn correspondence_roundtrip(c: &mut Ctx) -> (bool, Metrics) {
    let s = c.system;
    let e = s.group().identity();
    let (mut round, mut example) = (0.0f64, 0.0f64);
    for _ in 0..c.cfg.samples {
        let rep = EquivariantRep::random(s, &mut c.rng);
        let (x, y) = (
            rep.module().random_vector(&mut c.rng),
            rep.module().random_vector(&mut c.rng),
        );
        let t = rep.coefficient(&x, &y);
        let corr = CrossedCorrespondence::new(rep);
        let back = coefficient_from_correspondence(&corr, &corr.point(&x, e), &corr.point(&y, e));
        round = round.max(back.dist(&t));

        let triv = CrossedCorrespondence::new(EquivariantRep::trivial(s));
        let alg = AlgebraCorrespondence::new(s.clone());
        let (f1, f2) = (
            CrossedElement::random(s, &mut c.rng),
            CrossedElement::random(s, &mut c.rng),
        );
        let as_fn = |f: &CrossedElement| {
            triv.join(
                &f.coeffs
                    .iter()
                    .map(|a| module::ModuleVector {
                        blocks: a.blocks.clone(),
                    })
                    .collect::<Vec<_>>(),
            )
        };
        let ip = crate::correspondence::Correspondence::inner(&triv, &as_fn(&f1), &as_fn(&f2));
        example = example.max(ip.dist(&f1.involute(s).convolve(&f2, s)));
        let ip2 =
            crate::correspondence::Correspondence::inner(&alg, &alg.vector(&f1), &alg.vector(&f2));
        example = example.max(ip2.dist(&ip));
    }
    (
        round <= 1e-8 && example <= 1e-10,
        metrics([("roundtrip", round), ("inner_is_convolution", example)]),
    )
}

fn localized_conjugation_formula(c: &mut Ctx) -> (bool, Metrics) {
    let s = c.system;
    let Ok(loc) = localize(&AlgebraCorrespondence::new(s.clone()), c.cfg.tol) else {
        return (false, metrics([("closed_form", f64::INFINITY)]));
    };
    let closed = conjugation_action(s)
        .iter()
        .zip(&loc.carrier_v)
        .map(|(a, b)| linalg::max_abs(&(a - b)))
        .fold(0.0, f64::max);
    let axioms = loc.rep.axioms().worst();
    let mut m = metrics([("closed_form", closed), ("axioms", axioms)]);
    let mut ok = closed <= 1e-10 && axioms <= 1e-9;
    if let Ok(vs) = scalar_conjugation_action(s, 1e-12) {
        let scalar = vs
            .iter()
            .zip(&loc.carrier_v)
            .map(|(a, b)| linalg::max_abs(&(a - b)))
            .fold(0.0, f64::max);
        ok &= scalar <= 1e-10;
        m.insert("scalar_formula", scalar);
    }
    (ok, m)
}

fn amenability_witness(c: &mut Ctx) -> (bool, Metrics) {
    let s = c.system;
    let unit = CoeffMap::unit(s.clone());
    let family: Vec<CoeffMap> = (1..=10)
        .map(|n| unit.scale(cx(1.0 - 1.0 / n as f64, 0.0)))
        .collect();
    let tol = c.cfg.tol;
    let constant = amenability_witness_check(std::slice::from_ref(&unit), tol, tol)
        .map(|r| r.passed)
        .unwrap_or(false);
    let scaled = amenability_witness_check(&family, 0.1 + 1e-12, tol)
        .map(|r| r.passed)
        .unwrap_or(false);
    let bad = samples::non_pd_perturbation(&unit, &mut c.rng).0;
    let rejected = amenability_witness_check(&[bad], f64::INFINITY, tol);
    let (rejected_ok, margin) = match rejected {
        Ok(r) => (!r.passed && r.min_margin < 0.0, r.min_margin),
        Err(_) => (false, f64::NAN),
    };
    (
        constant && scaled && rejected_ok,
        metrics([
            ("constant_family", constant as u8 as f64),
            ("scaled_family", scaled as u8 as f64),
            ("perturbed_margin", margin),
        ]),
    )
}
