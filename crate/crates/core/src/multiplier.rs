//! Multipliers `M_T : aλ(g) ↦ T_g(a)λ(g)` on the concrete crossed product,
//! complete positivity certificates, and maps built from `A`-valued
//! functions on the group.
//!
//! Complete positivity of a map `Φ` on a matrix algebra `B ⊂ M_D` is read off
//! the Gram–Choi matrix `[Φ(b_m* b_n)]` over a basis of `B`. A tuple
//! `x_i = Σ_m c_{im} b_m` gives `[Φ(x_i* x_j)] = C* [Φ(b_m* b_n)] C` with
//! `C = (c_{im} 1_D)`, so positivity on the basis implies positivity on every
//! tuple, which is complete positivity for maps into `B(ℂ^D)`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraElement, CStarAlgebra};
use crate::coeff::{polarize, CoeffMap, PolarTerm};
use crate::crossed::{CrossedElement, RegularRep};
use crate::equivariant::EquivariantRep;
use crate::error::{structure, Error, Result};
use crate::linalg::{self, cx, CMat, PsdReport, C64, RANK_TOL};
use crate::module::ModuleVector;
use crate::par::{self, ExecMode};
use crate::system::TwistedSystem;

/// The Gram–Choi matrix `[Φ(b_m* b_n)]_{m,n}` flattened to `(N·D') × (N·D')`.
pub fn gram_choi(basis: &[CMat], map: &(dyn Fn(&CMat) -> CMat + Sync), mode: ExecMode) -> CMat {
    let n = basis.len();
    let rows: Vec<Vec<CMat>> = par::map_indexed(mode, n, |m| {
        let bm = basis[m].adjoint();
        basis.iter().map(|bn| map(&linalg::mul(&bm, bn))).collect()
    });
    let dp = rows
        .first()
        .and_then(|r| r.first())
        .map_or(0, |b| b.nrows());
    let mut out = CMat::zeros(n * dp, n * dp);
    for (m, row) in rows.iter().enumerate() {
        for (k, b) in row.iter().enumerate() {
            out.view_mut((m * dp, k * dp), (dp, dp)).copy_from(b);
        }
    }
    out
}

/// Fails unless `basis` spans a *-algebra: every `b_m* b_n` must lie in
/// the span.
fn check_spans_algebra(basis: &[CMat], tol: f64) -> Result<()> {
    let Some(first) = basis.first() else {
        return structure("empty basis");
    };
    let d2 = first.nrows() * first.ncols();
    let mut span = CMat::zeros(d2, basis.len());
    for (i, b) in basis.iter().enumerate() {
        span.set_column(i, &linalg::vec_of(b));
    }
    let proj = linalg::mul(&span, &linalg::pinv(&span, RANK_TOL));
    let mut prods = CMat::zeros(d2, basis.len() * basis.len());
    for (m, bm) in basis.iter().enumerate() {
        let bm = bm.adjoint();
        for (n, bn) in basis.iter().enumerate() {
            prods.set_column(m * basis.len() + n, &linalg::vec_of(&linalg::mul(&bm, bn)));
        }
    }
    let residual = linalg::max_abs(&(linalg::mul(&proj, &prods) - &prods));
    if residual > tol * linalg::max_abs(&prods).max(1.0) {
        return structure(format!(
            "basis does not span a *-algebra (residual {residual:.3e})"
        ));
    }
    Ok(())
}

/// Complete positivity of `map` on the algebra spanned by `basis`.
pub fn cp_report(
    basis: &[CMat],
    map: &(dyn Fn(&CMat) -> CMat + Sync),
    tol: f64,
) -> Result<PsdReport> {
    cp_report_with(basis, map, tol, ExecMode::default())
}

pub fn cp_report_with(
    basis: &[CMat],
    map: &(dyn Fn(&CMat) -> CMat + Sync),
    tol: f64,
    mode: ExecMode,
) -> Result<PsdReport> {
    check_spans_algebra(basis, tol.max(1e-9))?;
    Ok(linalg::psd_check(&gram_choi(basis, map, mode), tol))
}

/// The concrete crossed product together with the coordinates of every
/// product `b_m* b_n` of basis elements, shared between multipliers.
#[derive(Debug)]
pub struct CrossedContext {
    regular: RegularRep,
    /// Row `m·N + n` holds the coordinates of `b_m* b_n`.
    structure: CMat,
}

impl CrossedContext {
    pub fn new(system: &TwistedSystem) -> Arc<Self> {
        let alg = system.algebra();
        let dim = alg.dim();
        let n = dim * system.order();
        let points: Vec<CrossedElement> = (0..n)
            .map(|i| CrossedElement::point(system, alg.basis_element(i % dim), i / dim))
            .collect();
        let stars: Vec<CrossedElement> = points.iter().map(|p| p.involute(system)).collect();
        let mut structure = CMat::zeros(n * n, n);
        for (m, bm) in stars.iter().enumerate() {
            for (k, bn) in points.iter().enumerate() {
                for (i, c) in bm.convolve(bn, system).coords(alg).into_iter().enumerate() {
                    structure[(m * n + k, i)] = c;
                }
            }
        }
        Arc::new(CrossedContext {
            regular: RegularRep::new(system),
            structure,
        })
    }

    pub fn regular(&self) -> &RegularRep {
        &self.regular
    }
}

/// `M_T` as a matrix on the coordinates `e_j λ(g)` of `C*r(Σ)`.
#[derive(Clone, Debug)]
pub struct MultiplierMap {
    coeff: CoeffMap,
    context: Arc<CrossedContext>,
    matrix: CMat,
}

impl MultiplierMap {
    pub fn new(t: &CoeffMap) -> Self {
        Self::with_context(t, CrossedContext::new(t.system()))
    }

    pub fn with_context(t: &CoeffMap, context: Arc<CrossedContext>) -> Self {
        MultiplierMap {
            coeff: t.clone(),
            context,
            matrix: linalg::block_diag(t.maps()),
        }
    }

    pub fn coeff(&self) -> &CoeffMap {
        &self.coeff
    }

    pub fn context(&self) -> &Arc<CrossedContext> {
        &self.context
    }

    pub fn regular(&self) -> &RegularRep {
        &self.context.regular
    }

    /// The coordinate matrix, block diagonal with blocks `T_g`.
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    fn system(&self) -> &TwistedSystem {
        self.coeff.system()
    }

    /// `M_T(Λ(f)) = Λ(T·f)`.
    pub fn apply_element(&self, f: &CrossedElement) -> CrossedElement {
        CrossedElement {
            coeffs: f
                .coeffs
                .iter()
                .enumerate()
                .map(|(g, a)| self.coeff.apply(g, a))
                .collect(),
        }
    }

    /// `M_T` on a concrete matrix of `C*r(Σ)`.
    pub fn apply(&self, x: &CMat) -> CMat {
        self.context
            .regular
            .image(&self.apply_element(&self.context.regular.coefficients(x)))
    }

    /// Coordinate matrix of `b ↦ M(b*)*`.
    pub fn conjugate_matrix(&self) -> CMat {
        let alg = self.system().algebra();
        let basis = self.regular().basis();
        let mut out = CMat::zeros(basis.len(), basis.len());
        for (i, b) in basis.iter().enumerate() {
            let img = self.apply(&b.adjoint()).adjoint();
            let c = self.context.regular.coefficients(&img).coords(alg);
            for (r, z) in c.into_iter().enumerate() {
                out[(r, i)] = z;
            }
        }
        out
    }

    pub fn cp_report(&self, tol: f64) -> PsdReport {
        self.cp_report_with(tol, ExecMode::default())
    }

    /// `[M(b_m* b_n)]` from the cached structure constants: block `(m, n)`
    /// is `Σ_k Q[m·N+n, k] b_k` with `Q = S Mᵀ`.
    pub fn gram_choi_with(&self, mode: ExecMode) -> CMat {
        let basis = self.regular().basis();
        let n = basis.len();
        let d = self.regular().size();
        let q = linalg::mul(&self.context.structure, &self.matrix.transpose());
        let rows: Vec<CMat> = par::map_indexed(mode, n, |m| {
            let mut row = CMat::zeros(d, n * d);
            for k in 0..n {
                let mut blk = row.view_mut((0, k * d), (d, d));
                for (i, b) in basis.iter().enumerate() {
                    let c = q[(m * n + k, i)];
                    if c != cx(0.0, 0.0) {
                        blk += b * c;
                    }
                }
            }
            row
        });
        let mut out = CMat::zeros(n * d, n * d);
        for (m, row) in rows.iter().enumerate() {
            out.view_mut((m * d, 0), (d, n * d)).copy_from(row);
        }
        out
    }

    pub fn cp_report_with(&self, tol: f64, mode: ExecMode) -> PsdReport {
        linalg::psd_check(&self.gram_choi_with(mode), tol)
    }

    pub fn is_cp(&self, tol: f64) -> bool {
        self.cp_report(tol).positive
    }

    /// `‖M(1)‖`, the cb norm of a completely positive map.
    pub fn cp_norm(&self, tol: f64) -> Result<f64> {
        let r = self.cp_report(tol);
        if !r.positive {
            return Err(Error::NotCompletelyPositive { margin: r.margin() });
        }
        Ok(linalg::op_norm(
            &self.apply(&linalg::eye(self.context.regular.size())),
        ))
    }

    /// `max ‖M(a x a') − a M(x) a'‖` over basis elements `a, a'` of `A` and
    /// basis elements `x` of `C*r(Σ)`.
    pub fn bimodule_defect(&self) -> f64 {
        let alg = self.system().algebra();
        let ells: Vec<CMat> = alg
            .basis()
            .iter()
            .map(|a| self.context.regular.ell(a))
            .collect();
        let mut worst: f64 = 0.0;
        for x in self.context.regular.basis() {
            let mx = self.apply(x);
            for a in &ells {
                let ax = linalg::mul(a, x);
                let amx = linalg::mul(a, &mx);
                for b in &ells {
                    let lhs = self.apply(&linalg::mul(&ax, b));
                    let rhs = linalg::mul(&amx, b);
                    worst = worst.max(linalg::max_abs(&(lhs - rhs)));
                }
            }
        }
        worst
    }

    pub fn is_bimodule(&self, tol: f64) -> bool {
        self.bimodule_defect() <= tol * self.coeff.max_abs().max(1.0)
    }

    /// `max ‖M(x)‖ / ‖x‖` over the unit, the canonical unitaries, the basis
    /// and a fixed set of random elements.
    pub fn norm_lower_bound(&self) -> f64 {
        let s = self.system();
        let mut probes: Vec<CMat> = vec![linalg::eye(self.context.regular.size())];
        probes.extend(
            s.group()
                .elements()
                .map(|g| self.context.regular.lambda(g).clone()),
        );
        probes.extend(self.context.regular.basis().iter().cloned());
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cb00);
        probes.extend((0..8).map(|_| {
            self.context
                .regular
                .image(&CrossedElement::random(s, &mut rng))
        }));
        probes
            .iter()
            .map(|x| linalg::op_norm(&self.apply(x)) / linalg::op_norm(x).max(1e-300))
            .fold(0.0, f64::max)
    }
}

/// `M ∘ M'` agrees with `M_{T×T'}`; returned as the composed coordinate matrix.
pub fn compose(m1: &MultiplierMap, m2: &MultiplierMap) -> CMat {
    linalg::mul(m1.matrix(), m2.matrix())
}

/// A bracket on the cb norm of `M_T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CbBounds {
    pub lower: f64,
    /// `‖x‖ ‖y‖` for a realization `T = T_{ρ,v,x,y}`, if one was supplied.
    pub upper: Option<f64>,
}

pub fn cb_bounds(
    t: &CoeffMap,
    realization: Option<(&EquivariantRep, &ModuleVector, &ModuleVector)>,
) -> CbBounds {
    let lower = MultiplierMap::new(t).norm_lower_bound();
    let upper = realization.map(|(r, x, y)| r.module().norm(x) * r.module().norm(y));
    CbBounds { lower, upper }
}

/// `T_M(g, a) = E(M(aλ(g)) λ(g)*)` for a linear map `M` on `C*r(Σ)`.
pub fn coefficient_of_map(
    system: &Arc<TwistedSystem>,
    regular: &RegularRep,
    map: impl Fn(&CMat) -> CMat,
) -> CoeffMap {
    CoeffMap::from_fn(system.clone(), |g, a| {
        let lg = regular.lambda(g);
        let x = linalg::mul(&regular.ell(a), lg);
        regular.expectation(&linalg::mul(&map(&x), &lg.adjoint()))
    })
}

/// A polarization of `T_{R,x,y}` into positive definite maps, with the
/// residual of `M_T = Σ c_k M_{T_k}`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub terms: Vec<PolarTerm>,
    pub matrix_residual: f64,
}

pub fn decompose(
    rep: &EquivariantRep,
    x: &ModuleVector,
    y: &ModuleVector,
    tol: f64,
) -> Decomposition {
    let t = rep.coefficient(x, y);
    let terms = if x.sub(y).max_abs() <= tol * rep.module().norm(x).max(1.0) {
        vec![PolarTerm {
            weight: cx(1.0, 0.0),
            vector: x.clone(),
            map: t.clone(),
        }]
    } else {
        polarize(rep, x, y)
    };
    let target = linalg::block_diag(t.maps());
    let mut sum = CMat::zeros(target.nrows(), target.ncols());
    for term in &terms {
        sum += linalg::block_diag(term.map.maps()) * term.weight;
    }
    Decomposition {
        matrix_residual: linalg::max_abs(&(sum - target)),
        terms,
    }
}

/// Coordinate matrix of a linear map on `A` given as a closure.
pub fn algebra_map_matrix(
    alg: &CStarAlgebra,
    f: impl Fn(&AlgebraElement) -> AlgebraElement,
) -> CMat {
    let n = alg.dim();
    let mut m = CMat::zeros(n, n);
    for (j, e) in alg.basis().iter().enumerate() {
        for (i, c) in alg.coords(&f(e)).into_iter().enumerate() {
            m[(i, j)] = c;
        }
    }
    m
}

fn apply_algebra_map(alg: &CStarAlgebra, theta: &CMat, a: &AlgebraElement) -> AlgebraElement {
    let c = nalgebra::DVector::from_vec(alg.coords(a));
    alg.from_coords((theta * c).as_slice())
}

/// `Θ(g, a) = θ(a)` for an `α`-equivariant completely positive `θ` that
/// fixes the cocycle values when they are not scalar.
pub fn equivariant_cp_multiplier(
    system: &Arc<TwistedSystem>,
    theta: &CMat,
    tol: f64,
) -> Result<CoeffMap> {
    let s = &**system;
    let alg = s.algebra();
    if theta.nrows() != alg.dim() || theta.ncols() != alg.dim() {
        return structure("θ must be a dim A × dim A coordinate matrix");
    }
    let th = |a: &AlgebraElement| apply_algebra_map(alg, theta, a);
    let scale = linalg::max_abs(theta).max(1.0);
    let mut defect: f64 = 0.0;
    for g in s.group().elements() {
        for e in alg.basis() {
            defect = defect.max(th(&s.alpha(g).apply(&e)).dist(&s.alpha(g).apply(&th(&e))));
        }
    }
    if defect > tol * scale {
        return Err(Error::Hypothesis(format!(
            "θ is not α-equivariant (defect {defect:.3e})"
        )));
    }
    let pi_basis: Vec<CMat> = alg.basis().iter().map(|e| alg.to_matrix(e)).collect();
    let map = |m: &CMat| alg.to_matrix(&th(&alg.from_matrix(m)));
    let r = cp_report(&pi_basis, &map, tol)?;
    if !r.positive {
        return Err(Error::Hypothesis(format!(
            "θ is not completely positive (margin {:.3e})",
            r.margin()
        )));
    }
    if !s.sigma_is_scalar(tol) {
        let mut fixed: f64 = 0.0;
        for g in s.group().elements() {
            for h in s.group().elements() {
                fixed = fixed.max(th(s.sigma(g, h)).dist(s.sigma(g, h)));
            }
        }
        if fixed > tol * scale {
            return Err(Error::Hypothesis(format!(
                "θ does not fix the cocycle (defect {fixed:.3e})"
            )));
        }
    }
    Ok(CoeffMap::from_fn(system.clone(), |_, a| th(a)))
}

/// A function `φ : G → A`.
#[derive(Clone, Debug)]
pub struct AdFunction {
    system: Arc<TwistedSystem>,
    values: Vec<AlgebraElement>,
}

impl AdFunction {
    pub fn new(system: Arc<TwistedSystem>, values: Vec<AlgebraElement>) -> Result<Self> {
        if values.len() != system.order() {
            return structure(format!("need {} values", system.order()));
        }
        for v in &values {
            system.algebra().check(v)?;
        }
        Ok(AdFunction { system, values })
    }

    pub fn constant_one(system: Arc<TwistedSystem>) -> Self {
        let one = system.algebra().one();
        let n = system.order();
        AdFunction {
            system,
            values: vec![one; n],
        }
    }

    pub fn scalar(system: Arc<TwistedSystem>, phi: &[C64]) -> Result<Self> {
        let values = phi.iter().map(|&c| system.algebra().scalar(c)).collect();
        Self::new(system, values)
    }

    pub fn system(&self) -> &Arc<TwistedSystem> {
        &self.system
    }

    pub fn values(&self) -> &[AlgebraElement] {
        &self.values
    }

    /// `L^φ(g, a) = φ(g) a`.
    pub fn left_map(&self) -> CoeffMap {
        CoeffMap::from_fn(self.system.clone(), |g, a| &self.values[g] * a)
    }

    /// `R^φ(g, a) = a φ(g)`.
    pub fn right_map(&self) -> CoeffMap {
        CoeffMap::from_fn(self.system.clone(), |g, a| a * &self.values[g])
    }

    /// `φ^c(g) = α_g(φ(g⁻¹))*`.
    pub fn conjugate(&self) -> Self {
        let s = &self.system;
        let gr = s.group();
        let values = gr
            .elements()
            .map(|g| s.alpha(g).apply(&self.values[gr.inv(g)]).adjoint())
            .collect();
        AdFunction {
            system: self.system.clone(),
            values,
        }
    }

    pub fn central_defect(&self) -> f64 {
        let alg = self.system.algebra();
        self.values
            .iter()
            .map(|v| alg.central_defect(v))
            .fold(0.0, f64::max)
    }

    pub fn is_central(&self, tol: f64) -> bool {
        let scale = self.values.iter().map(|v| v.max_abs()).fold(1.0, f64::max);
        self.central_defect() <= tol * scale
    }

    /// `[α_{g_i}(φ(g_i⁻¹ g_j))]_{i,j}`.
    pub fn ad_matrix(&self) -> Vec<Vec<AlgebraElement>> {
        let s = &self.system;
        let gr = s.group();
        gr.elements()
            .map(|gi| {
                gr.elements()
                    .map(|gj| s.alpha(gi).apply(&self.values[gr.mul(gr.inv(gi), gj)]))
                    .collect()
            })
            .collect()
    }

    /// `[σ(g_i, k)* α_{g_i}(φ(k)) σ(g_i, k)]` with `k = g_i⁻¹ g_j`.
    pub fn sigma_ad_matrix(&self) -> Vec<Vec<AlgebraElement>> {
        let s = &self.system;
        let gr = s.group();
        gr.elements()
            .map(|gi| {
                gr.elements()
                    .map(|gj| {
                        let k = gr.mul(gr.inv(gi), gj);
                        let sig = s.sigma(gi, k);
                        sig.adjoint() * s.alpha(gi).apply(&self.values[k]) * sig
                    })
                    .collect()
            })
            .collect()
    }

    pub fn ad_report(&self, tol: f64) -> PsdReport {
        self.system
            .algebra()
            .matrix_positive(&self.ad_matrix(), tol)
            .expect("square by construction")
    }

    pub fn sigma_ad_report(&self, tol: f64) -> PsdReport {
        self.system
            .algebra()
            .matrix_positive(&self.sigma_ad_matrix(), tol)
            .expect("square by construction")
    }

    /// The three equivalent conditions on `L^φ`.
    pub fn left_map_conditions(&self, tol: f64) -> LeftMapConditions {
        let l = self.left_map();
        let pd = l.positive_definite(tol);
        let ad = self.ad_report(tol);
        let cp = MultiplierMap::new(&l).cp_report(tol);
        let central = self.is_central(tol);
        LeftMapConditions {
            positive_definite: pd.positive,
            central_and_ad_positive: central && ad.positive,
            completely_positive: cp.positive,
            pd_margin: pd.margin(),
            ad_margin: ad.margin(),
            cp_margin: cp.margin(),
            central_defect: self.central_defect(),
        }
    }
}

/// Whether `L^φ` is positive definite, whether `φ` is central-valued and
/// AD-positive definite, and whether `M_{L^φ}` is completely positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeftMapConditions {
    pub positive_definite: bool,
    pub central_and_ad_positive: bool,
    pub completely_positive: bool,
    pub pd_margin: f64,
    pub ad_margin: f64,
    pub cp_margin: f64,
    pub central_defect: f64,
}

impl LeftMapConditions {
    pub fn verdicts(&self) -> (bool, bool, bool) {
        (
            self.positive_definite,
            self.central_and_ad_positive,
            self.completely_positive,
        )
    }

    pub fn agree(&self) -> bool {
        self.positive_definite == self.central_and_ad_positive
            && self.positive_definite == self.completely_positive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::mat;
    use crate::system::library;
    use rand_chacha::ChaCha8Rng;

    fn systems() -> Vec<Arc<TwistedSystem>> {
        library::corpus().into_iter().map(Arc::new).collect()
    }

    fn matrix_units(d: usize) -> Vec<CMat> {
        (0..d * d)
            .map(|k| {
                let mut m = CMat::zeros(d, d);
                m[(k / d, k % d)] = cx(1.0, 0.0);
                m
            })
            .collect()
    }

    #[test]
    fn classical_choi_cases() {
        let units = matrix_units(2);
        let id = |m: &CMat| m.clone();
        assert!(cp_report(&units, &id, 1e-9).unwrap().positive);
        let tr = |m: &CMat| m.transpose();
        let r = cp_report(&units, &tr, 1e-9).unwrap();
        assert!(!r.positive);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
        let partial = [units[0].clone(), units[1].clone()];
        assert!(matches!(
            cp_report(&partial, &id, 1e-9),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn multiplier_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for s in systems() {
            let ctx = CrossedContext::new(&s);
            let reg = ctx.regular();
            let i = MultiplierMap::with_context(&CoeffMap::unit(s.clone()), ctx.clone());
            for b in reg.basis() {
                assert!(linalg::max_abs(&(i.apply(b) - b)) < 1e-12);
            }
            assert!(i.is_cp(1e-9) && i.is_bimodule(1e-10));
            assert!((i.cp_norm(1e-9).unwrap() - 1.0).abs() < 1e-12);
            let two = MultiplierMap::with_context(
                &CoeffMap::unit(s.clone()).scale(cx(2.0, 0.0)),
                ctx.clone(),
            );
            assert!((two.cp_norm(1e-9).unwrap() - 2.0).abs() < 1e-12);

            let r1 = EquivariantRep::random(&s, &mut rng);
            let r2 = EquivariantRep::random(&s, &mut rng);
            let t1 = r1.coefficient(
                &r1.module().random_vector(&mut rng),
                &r1.module().random_vector(&mut rng),
            );
            let t2 = r2.coefficient(
                &r2.module().random_vector(&mut rng),
                &r2.module().random_vector(&mut rng),
            );
            let (m1, m2) = (
                MultiplierMap::with_context(&t1, ctx.clone()),
                MultiplierMap::with_context(&t2, ctx.clone()),
            );
            let prod = MultiplierMap::with_context(&t1.mul(&t2).unwrap(), ctx.clone());
            assert!(linalg::max_abs(&(compose(&m1, &m2) - prod.matrix())) < 1e-12);
            // The defining relation on concrete matrices.
            for (i, b) in reg.basis().iter().enumerate() {
                let (g, j) = (i / s.algebra().dim(), i % s.algebra().dim());
                let e = s.algebra().basis_element(j);
                let expect = linalg::mul(&reg.ell(&t1.apply(g, &e)), reg.lambda(g));
                assert!(linalg::max_abs(&(m1.apply(b) - expect)) < 1e-10);
            }
            // Conjugation is respected.
            let mc = MultiplierMap::with_context(&t1.conjugate(), ctx.clone());
            assert!(
                linalg::max_abs(&(mc.matrix() - m1.conjugate_matrix())) < 1e-10,
                "{}",
                s.name()
            );
        }
    }

    #[test]
    fn structured_choi_matches_direct_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for s in systems() {
            let r = EquivariantRep::random(&s, &mut rng);
            let t = r.coefficient(
                &r.module().random_vector(&mut rng),
                &r.module().random_vector(&mut rng),
            );
            let m = MultiplierMap::new(&t);
            let direct = gram_choi(
                m.regular().basis(),
                &|x: &CMat| m.apply(x),
                ExecMode::Sequential,
            );
            assert!(
                linalg::max_abs(&(direct - m.gram_choi_with(ExecMode::Sequential))) < 1e-10,
                "{}",
                s.name()
            );
        }
    }

    #[test]
    fn positive_coefficients_give_cp_multipliers() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for s in systems() {
            let r = EquivariantRep::random(&s, &mut rng);
            let x = r.module().random_vector(&mut rng);
            let t = r.coefficient(&x, &x);
            let m = MultiplierMap::new(&t);
            let norm = m.cp_norm(1e-9).unwrap();
            let x2 = r.module().norm(&x).powi(2);
            assert!(
                (norm - x2).abs() < 1e-9 * x2,
                "{}: {norm} vs {x2}",
                s.name()
            );
            let b = cb_bounds(&t, Some((&r, &x, &x)));
            assert!(
                (b.lower - norm).abs() < 1e-9 * norm && b.lower <= b.upper.unwrap() * (1.0 + 1e-9)
            );
        }
    }

    #[test]
    fn cb_bracket_on_random_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for s in systems() {
            let r = EquivariantRep::random(&s, &mut rng);
            let (x, y) = (
                r.module().random_vector(&mut rng),
                r.module().random_vector(&mut rng),
            );
            let t = r.coefficient(&x, &y);
            let b = cb_bounds(&t, Some((&r, &x, &y)));
            assert!(b.lower <= b.upper.unwrap() * (1.0 + 1e-9));
            let unit = cb_bounds(&CoeffMap::unit(s.clone()), None);
            assert!((unit.lower - 1.0).abs() < 1e-12 && unit.upper.is_none());
        }
    }

    #[test]
    fn extracted_coefficients_of_cp_maps_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for s in systems() {
            let reg = RegularRep::new(&s);
            let r = EquivariantRep::random(&s, &mut rng);
            let x = r.module().random_vector(&mut rng);
            let t = r.coefficient(&x, &x);
            let m = MultiplierMap::new(&t);
            let back = coefficient_of_map(&s, &reg, |y| m.apply(y));
            assert!(back.dist(&t) < 1e-10);
            // A vector state compressed into the algebra: y ↦ w* y w is CP.
            let w = reg.image(&CrossedElement::random(&s, &mut rng));
            let tm =
                coefficient_of_map(&s, &reg, |y| linalg::mul(&linalg::mul(&w.adjoint(), y), &w));
            assert!(tm.is_positive_definite(1e-9), "{}", s.name());
        }
    }

    #[test]
    fn bimodule_cases() {
        let s = Arc::new(library::m2_inner_z2());
        let alg = s.algebra().clone();
        let b = AlgebraElement {
            blocks: vec![mat(2, 2, &[cx(0., 0.), cx(1., 0.), cx(0., 0.), cx(0., 0.)])],
        };
        let t = CoeffMap::trivial_coefficient(s.clone(), &b, &alg.one());
        assert!(!MultiplierMap::new(&t).is_bimodule(1e-10));
        let central = AdFunction::scalar(s.clone(), &[cx(1., 0.), cx(0.5, 0.)]).unwrap();
        assert!(MultiplierMap::new(&central.left_map()).is_bimodule(1e-10));
    }

    #[test]
    fn ad_functions() {
        for s in systems() {
            let one = AdFunction::constant_one(s.clone());
            assert!(one.left_map().dist(&CoeffMap::unit(s.clone())) < 1e-15);
            assert!(one.right_map().dist(&CoeffMap::unit(s.clone())) < 1e-15);
            assert_eq!(one.left_map_conditions(1e-9).verdicts(), (true, true, true));
            assert!(one.sigma_ad_report(1e-9).positive);
            // (L^φ)^c = R^{φ^c}.
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let vals = (0..s.order())
                .map(|_| s.algebra().random_element(&mut rng))
                .collect();
            let phi = AdFunction::new(s.clone(), vals).unwrap();
            assert!(
                phi.left_map()
                    .conjugate()
                    .dist(&phi.conjugate().right_map())
                    < 1e-10,
                "{}",
                s.name()
            );
        }
        let s = Arc::new(library::m2_inner_z2());
        let n = AdFunction::new(
            s.clone(),
            vec![
                s.algebra().one(),
                AlgebraElement {
                    blocks: vec![mat(2, 2, &[cx(0., 0.), cx(1., 0.), cx(0., 0.), cx(0., 0.)])],
                },
            ],
        )
        .unwrap();
        assert!(n.left_map().dist(&n.right_map()) > 0.5);
        assert!(!n.is_central(1e-9));
    }

    #[test]
    fn scalar_ad_functions_match_classical_positivity() {
        let s = Arc::new(library::trivial_z2());
        let pd = AdFunction::scalar(s.clone(), &[cx(1., 0.), cx(0.5, 0.)]).unwrap();
        assert_eq!(pd.left_map_conditions(1e-9).verdicts(), (true, true, true));
        let not = AdFunction::scalar(s, &[cx(1., 0.), cx(2., 0.)]).unwrap();
        assert_eq!(
            not.left_map_conditions(1e-9).verdicts(),
            (false, false, false)
        );
    }

    #[test]
    fn central_sigma_and_plain_ad_matrices_coincide() {
        let s = Arc::new(library::pauli());
        let phi = AdFunction::scalar(s, &[cx(1., 0.), cx(0.2, 0.1), cx(-0.3, 0.), cx(0.1, -0.2)])
            .unwrap();
        let (a, b) = (phi.ad_matrix(), phi.sigma_ad_matrix());
        for (ra, rb) in a.iter().zip(&b) {
            for (x, y) in ra.iter().zip(rb) {
                assert!(x.dist(y) < 1e-15);
            }
        }
    }

    #[test]
    fn decomposition_of_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for s in systems() {
            let r = EquivariantRep::random(&s, &mut rng);
            let (x, y) = (
                r.module().random_vector(&mut rng),
                r.module().random_vector(&mut rng),
            );
            let d = decompose(&r, &x, &y, 1e-12);
            assert_eq!(d.terms.len(), 4);
            assert!(d.matrix_residual < 1e-10);
            assert!(d
                .terms
                .iter()
                .all(|t| t.map.positive_definite(1e-9).positive));
            let single = decompose(&r, &x, &x, 1e-12);
            assert_eq!(single.terms.len(), 1);
        }
        let s = Arc::new(library::pauli());
        let t = EquivariantRep::trivial(&s);
        let one = t
            .module()
            .unflatten(&nalgebra::DVector::from_element(1, cx(1., 0.)));
        let d = decompose(&t, &one, &one, 1e-12);
        assert_eq!(d.terms.len(), 1);
        assert_eq!(d.terms[0].weight, cx(1., 0.));
    }

    #[test]
    fn equivariant_cp_lifts() {
        let s = Arc::new(library::m2_trivial_z2());
        let alg = s.algebra().clone();
        let id = linalg::eye(alg.dim());
        let t = equivariant_cp_multiplier(&s, &id, 1e-9).unwrap();
        assert!(t.dist(&CoeffMap::unit(s.clone())) < 1e-15);

        let diag = algebra_map_matrix(&alg, |a| {
            let m = &a.blocks[0];
            AlgebraElement {
                blocks: vec![mat(2, 2, &[m[(0, 0)], cx(0., 0.), cx(0., 0.), m[(1, 1)]])],
            }
        });
        let t = equivariant_cp_multiplier(&s, &diag, 1e-9).unwrap();
        assert!(t.is_positive_definite(1e-9));
        let m = MultiplierMap::new(&t);
        let reg = m.regular();
        let a = alg.random_element(&mut ChaCha8Rng::seed_from_u64(2));
        let x = linalg::mul(&reg.ell(&a), reg.lambda(1));
        let expect = linalg::mul(&reg.ell(&apply_algebra_map(&alg, &diag, &a)), reg.lambda(1));
        assert!(linalg::max_abs(&(m.apply(&x) - expect)) < 1e-12);

        let transpose = algebra_map_matrix(&alg, |a| AlgebraElement {
            blocks: vec![a.blocks[0].transpose()],
        });
        assert!(matches!(
            equivariant_cp_multiplier(&s, &transpose, 1e-9),
            Err(Error::Hypothesis(_))
        ));

        // Ad(Z) commutes with the diagonal expectation; Ad(X) on a non-fixed
        // cocycle system is rejected.
        let sz = Arc::new(library::m2_inner_z2());
        assert!(equivariant_cp_multiplier(&sz, &diag, 1e-9)
            .unwrap()
            .is_positive_definite(1e-9));
        let sk = Arc::new(library::m2_inner_klein());
        assert!(matches!(
            equivariant_cp_multiplier(&sk, &diag, 1e-9),
            Err(Error::Hypothesis(_))
        ));
    }
}
