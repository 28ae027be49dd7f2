//! Maps `T : G × A → A`, linear in the algebra slot, with the algebra
//! structure of the Fourier–Stieltjes algebra, the positive-definiteness
//! kernel, conjugation, and the transforms acting on them.
//!
//! A map is stored as one `dim A × dim A` matrix per group element, column
//! `j` holding the coordinates of `T_g(e_j)`.
//!
//! Positive definiteness is decided on the block kernel indexed by pairs
//! `(g, e_j)`. Because the kernel is sesquilinear in the algebra slots, a
//! general tuple `(g_i, a_i)` produces `C* K C` for a block matrix `C`
//! built from the coordinates of the `a_i`, and row sums of positive
//! matrices over `A` stay positive, so the finite test is exact.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::AlgebraElement;
use crate::equivariant::EquivariantRep;
use crate::error::{structure, Error, Result};
use crate::linalg::{self, cx, CMat, PsdReport, C64};
use crate::module::ModuleVector;
use crate::par::{self, ExecMode};
use crate::system::TwistedSystem;

#[derive(Clone, Debug)]
pub struct CoeffMap {
    system: Arc<TwistedSystem>,
    maps: Vec<CMat>,
}

impl PartialEq for CoeffMap {
    fn eq(&self, other: &Self) -> bool {
        self.maps == other.maps && *self.system == *other.system
    }
}

impl CoeffMap {
    pub fn new(system: Arc<TwistedSystem>, maps: Vec<CMat>) -> Result<Self> {
        let n = system.algebra().dim();
        if maps.len() != system.order() || maps.iter().any(|m| m.nrows() != n || m.ncols() != n) {
            return structure(format!("need {} maps of size {n}×{n}", system.order()));
        }
        Ok(CoeffMap { system, maps })
    }

    /// Tabulate `(g, a) ↦ f(g, a)` on the basis.
    pub fn from_fn(
        system: Arc<TwistedSystem>,
        f: impl Fn(usize, &AlgebraElement) -> AlgebraElement,
    ) -> Self {
        let alg = system.algebra().clone();
        let basis = alg.basis();
        let maps = system
            .group()
            .elements()
            .map(|g| {
                let mut m = CMat::zeros(alg.dim(), alg.dim());
                for (j, e) in basis.iter().enumerate() {
                    let col = alg.coords(&f(g, e));
                    for (i, c) in col.into_iter().enumerate() {
                        m[(i, j)] = c;
                    }
                }
                m
            })
            .collect();
        CoeffMap { system, maps }
    }

    /// The unit `I(g, a) = a`.
    pub fn unit(system: Arc<TwistedSystem>) -> Self {
        let n = system.algebra().dim();
        let maps = vec![linalg::eye(n); system.order()];
        CoeffMap { system, maps }
    }

    pub fn zero(system: Arc<TwistedSystem>) -> Self {
        let n = system.algebra().dim();
        let maps = vec![CMat::zeros(n, n); system.order()];
        CoeffMap { system, maps }
    }

    /// `T^φ(g, a) = φ(g) a` for a scalar function on the group.
    pub fn embed_scalar(system: Arc<TwistedSystem>, phi: &[C64]) -> Result<Self> {
        if phi.len() != system.order() {
            return structure("one value per group element is required");
        }
        let n = system.algebra().dim();
        let maps = phi.iter().map(|&c| linalg::eye(n) * c).collect();
        Ok(CoeffMap { system, maps })
    }

    /// The coefficient of the trivial representation,
    /// `T_{ℓ,α,b,c}(g, a) = b* a α_g(c)`.
    pub fn trivial_coefficient(
        system: Arc<TwistedSystem>,
        b: &AlgebraElement,
        c: &AlgebraElement,
    ) -> Self {
        let s = system.clone();
        let bs = b.adjoint();
        Self::from_fn(system, move |g, a| &bs * a * s.alpha(g).apply(c))
    }

    pub fn system(&self) -> &Arc<TwistedSystem> {
        &self.system
    }

    pub fn maps(&self) -> &[CMat] {
        &self.maps
    }

    pub fn map(&self, g: usize) -> &CMat {
        &self.maps[g]
    }

    /// `T_g(a)`.
    pub fn apply(&self, g: usize, a: &AlgebraElement) -> AlgebraElement {
        let alg = self.system.algebra();
        let c = nalgebra::DVector::from_vec(alg.coords(a));
        alg.from_coords((&self.maps[g] * c).as_slice())
    }

    fn same_system(&self, o: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.system, &o.system) || *self.system == *o.system {
            Ok(())
        } else {
            structure("coefficient maps over different systems")
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Result<Self> {
        self.same_system(o)?;
        Ok(CoeffMap {
            system: self.system.clone(),
            maps: self
                .maps
                .iter()
                .zip(&o.maps)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, c: C64) -> Self {
        CoeffMap {
            system: self.system.clone(),
            maps: self.maps.iter().map(|m| m * c).collect(),
        }
    }

    /// `(T × T')(g, a) = T(g, T'(g, a))`.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.zip(o, |a, b| a * b)
    }

    /// Largest entry-wise difference.
    pub fn dist(&self, o: &Self) -> f64 {
        self.maps
            .iter()
            .zip(&o.maps)
            .map(|(a, b)| linalg::max_abs(&(a - b)))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.maps.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    /// `T_e(1)`.
    pub fn at_unit(&self) -> AlgebraElement {
        let e = self.system.group().identity();
        self.apply(e, &self.system.algebra().one())
    }

    /// The kernel `K((g, e_i), (h, e_j))` on all generator pairs, indexed
    /// `g · dim A + i`.
    pub fn pd_kernel(&self) -> Vec<Vec<AlgebraElement>> {
        self.pd_kernel_with(ExecMode::default())
    }

    pub fn pd_kernel_with(&self, mode: ExecMode) -> Vec<Vec<AlgebraElement>> {
        let s = &*self.system;
        let (alg, gr) = (s.algebra(), s.group());
        let dim = alg.dim();
        let basis = alg.basis();
        let n = gr.order() * dim;
        par::map_indexed(mode, n, |row| {
            let (g, i) = (row / dim, row % dim);
            let ei_star = basis[i].adjoint();
            (0..n)
                .map(|col| {
                    let (h, j) = (col / dim, col % dim);
                    let k = gr.mul(gr.inv(g), h);
                    let sig = s.sigma(g, k);
                    let inner = s
                        .alpha_inv(g)
                        .apply(&(&ei_star * &basis[j] * sig.adjoint()));
                    s.alpha(g).apply(&self.apply(k, &inner)) * sig
                })
                .collect()
        })
    }

    /// Positivity of the kernel, with the smallest eigenvalue as margin.
    pub fn positive_definite(&self, tol: f64) -> PsdReport {
        self.positive_definite_with(tol, ExecMode::default())
    }

    pub fn positive_definite_with(&self, tol: f64, mode: ExecMode) -> PsdReport {
        self.system
            .algebra()
            .matrix_positive(&self.pd_kernel_with(mode), tol)
            .expect("kernel is square")
    }

    pub fn is_positive_definite(&self, tol: f64) -> bool {
        self.positive_definite(tol).positive
    }

    /// `T^c(g,a) = σ(g,g⁻¹)* α_g(T_{g⁻¹}(α_g⁻¹(a* σ(g,g⁻¹)*)))*`.
    pub fn conjugate(&self) -> Self {
        let s = self.system.clone();
        let gr = s.group().clone();
        Self::from_fn(s.clone(), |g, a| {
            let gi = gr.inv(g);
            let sg = s.sigma(g, gi);
            let inner = s.alpha_inv(g).apply(&(a.adjoint() * sg.adjoint()));
            sg.adjoint() * s.alpha(g).apply(&self.apply(gi, &inner)).adjoint()
        })
    }

    /// `T̃(g,a) = α_g⁻¹(T(g, α_g(a)))`.
    pub fn tilde(&self) -> Self {
        let s = self.system.clone();
        Self::from_fn(s.clone(), |g, a| {
            s.alpha_inv(g).apply(&self.apply(g, &s.alpha(g).apply(a)))
        })
    }

    /// Inverse of [`CoeffMap::tilde`].
    pub fn untilde(&self) -> Self {
        let s = self.system.clone();
        Self::from_fn(s.clone(), |g, a| {
            s.alpha(g).apply(&self.apply(g, &s.alpha_inv(g).apply(a)))
        })
    }

    /// `max_g ‖T_g‖` with `A` carrying its C*-norm.
    ///
    /// The supremum over the unit ball is attained on unitaries, so each
    /// `‖T_g‖` is estimated by alternating ascent: for fixed unit vectors the
    /// best unitary is a polar factor, and for a fixed unitary the best
    /// vectors are top singular vectors. The result is a lower bound that is
    /// exact whenever one of the starts reaches the maximizer; `u = 1` is
    /// always among the starts.
    pub fn sup_norm(&self) -> f64 {
        self.sup_norm_with(ExecMode::default())
    }

    pub fn sup_norm_with(&self, mode: ExecMode) -> f64 {
        par::map_indexed(mode, self.system.order(), |g| self.map_norm(g))
            .into_iter()
            .fold(0.0, f64::max)
    }

    fn map_norm(&self, g: usize) -> f64 {
        const RANDOM_STARTS: usize = 4;
        const MAX_STEPS: usize = 200;
        let alg = self.system.algebra();
        let images: Vec<CMat> = alg
            .basis()
            .iter()
            .map(|e| alg.to_matrix(&self.apply(g, e)))
            .collect();
        let eval = |u: &AlgebraElement| -> CMat {
            let mut m = CMat::zeros(alg.rep_dim(), alg.rep_dim());
            for (c, img) in alg.coords(u).into_iter().zip(&images) {
                if c != cx(0.0, 0.0) {
                    m += img * c;
                }
            }
            m
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + g as u64);
        let mut starts = vec![alg.one()];
        starts.extend((0..RANDOM_STARTS).map(|_| alg.random_unitary(&mut rng)));
        let mut best: f64 = 0.0;
        for mut u in starts {
            let mut prev = -1.0;
            for _ in 0..MAX_STEPS {
                let m = eval(&u);
                let svd = m.svd(true, true);
                let (top, idx) =
                    svd.singular_values
                        .iter()
                        .enumerate()
                        .fold(
                            (0.0, 0),
                            |acc, (i, &s)| if s > acc.0 { (s, i) } else { acc },
                        );
                best = best.max(top);
                if top <= prev * (1.0 + 1e-13) || top == 0.0 {
                    break;
                }
                prev = top;
                let eta = svd.u.as_ref().unwrap().column(idx).into_owned();
                let xi = svd.v_t.as_ref().unwrap().row(idx).adjoint();
                let c: Vec<C64> = images
                    .iter()
                    .map(|img| (eta.adjoint() * img * &xi)[(0, 0)])
                    .collect();
                u = AlgebraElement {
                    blocks: alg
                        .block_sizes()
                        .iter()
                        .enumerate()
                        .map(|(k, &n)| {
                            let mt = CMat::from_fn(n, n, |p, q| c[alg.basis_index(k, q, p)]);
                            let s = mt.svd(true, true);
                            s.v_t.unwrap().adjoint() * s.u.unwrap().adjoint()
                        })
                        .collect(),
                };
            }
        }
        best
    }

    /// `(‖T‖_∞, ‖T_e(1)‖)` for a positive-definite map.
    pub fn norm_identity(&self, tol: f64) -> Result<(f64, f64)> {
        let rep = self.positive_definite(tol);
        if !rep.positive {
            return Err(Error::NotPositiveDefinite {
                margin: rep.margin(),
            });
        }
        Ok((self.sup_norm(), self.at_unit().norm()))
    }

    /// Whether `T × T' = T' × T` for every `T' = T_{ℓ,α,b,c}` with `b, c`
    /// basis elements. Necessary for membership in the center of `B(Σ)`.
    pub fn commutes_with_trivial_coefficients(&self, tol: f64) -> bool {
        let basis = self.system.algebra().basis();
        basis.iter().all(|b| {
            basis.iter().all(|c| {
                let t = Self::trivial_coefficient(self.system.clone(), b, c);
                let (l, r) = (self.mul(&t).unwrap(), t.mul(self).unwrap());
                l.dist(&r) <= tol * self.max_abs().max(1.0)
            })
        })
    }

    /// Whether `T(g, a) = φ(g) a = a φ(g)` for some central-valued `φ`;
    /// returns `φ` when it is.
    pub fn central_multiplier_shape(&self, tol: f64) -> Option<Vec<AlgebraElement>> {
        let alg = self.system.algebra();
        let phi: Vec<AlgebraElement> = (0..self.system.order())
            .map(|g| self.apply(g, &alg.one()))
            .collect();
        let scale = self.max_abs().max(1.0);
        for (g, p) in phi.iter().enumerate() {
            if alg.central_defect(p) > tol * scale {
                return None;
            }
            for e in alg.basis() {
                if self.apply(g, &e).dist(&(p * &e)) > tol * scale {
                    return None;
                }
            }
        }
        Some(phi)
    }
}

/// Outcome of [`amenability_witness_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessReport {
    pub passed: bool,
    /// Smallest positive-definiteness margin across the family.
    pub min_margin: f64,
    /// `sup_i ‖T^i_e(1)‖`.
    pub bound: f64,
    /// `max_{g, basis a} ‖T_g(a) − a‖` for the last member.
    pub final_defect: f64,
}

/// A finite stand-in for a bounded net of positive-definite maps converging
/// pointwise to the unit.
pub fn amenability_witness_check(family: &[CoeffMap], eps: f64, tol: f64) -> Result<WitnessReport> {
    let last = family
        .last()
        .ok_or_else(|| Error::Structure("empty family".into()))?;
    let mut min_margin = f64::INFINITY;
    let mut all_pd = true;
    let mut bound: f64 = 0.0;
    for t in family {
        let r = t.positive_definite(tol);
        all_pd &= r.positive;
        min_margin = min_margin.min(r.margin());
        bound = bound.max(t.at_unit().norm());
    }
    let alg = last.system.algebra();
    let mut final_defect: f64 = 0.0;
    for g in last.system.group().elements() {
        for e in alg.basis() {
            final_defect = final_defect.max((last.apply(g, &e) - &e).norm());
        }
    }
    Ok(WitnessReport {
        passed: all_pd && bound.is_finite() && final_defect <= eps,
        min_margin,
        bound,
        final_defect,
    })
}

/// One polarization term `weight · T_{R, x_k, x_k}`.
#[derive(Clone, Debug)]
pub struct PolarTerm {
    pub weight: C64,
    pub vector: ModuleVector,
    pub map: CoeffMap,
}

/// `T_{R,x,y} = ¼ Σ_k i^k T_{R, y + i^k x, y + i^k x}`; the inner product is
/// conjugate-linear in its first slot, hence the weights `i^k / 4`
/// attached to `y + i^k x`.
pub fn polarize(rep: &EquivariantRep, x: &ModuleVector, y: &ModuleVector) -> Vec<PolarTerm> {
    (0..4)
        .map(|k| {
            let ik = C64::i().powi(k);
            let vector = y.add(&x.scale(ik));
            PolarTerm {
                weight: ik * 0.25,
                map: rep.coefficient(&vector, &vector),
                vector,
            }
        })
        .collect()
}

/// `T_{R,x,y}` for central vectors, returned with `φ(g) = ⟨x, v(g) y⟩`.
pub fn bz_constructor(
    rep: &EquivariantRep,
    x: &ModuleVector,
    y: &ModuleVector,
    tol: f64,
) -> Result<(CoeffMap, Vec<AlgebraElement>)> {
    for z in [x, y] {
        let d = rep.central_defect(z);
        if d > tol * rep.module().norm(z).max(1.0) {
            return Err(Error::NotCentral { defect: d });
        }
    }
    let m = rep.module();
    let phi: Vec<AlgebraElement> = rep
        .system()
        .group()
        .elements()
        .map(|g| m.inner(x, &rep.apply_v(g, y)))
        .collect();
    Ok((rep.coefficient(x, y), phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CStarAlgebra;
    use crate::system::library;

    fn shared(s: TwistedSystem) -> Arc<TwistedSystem> {
        Arc::new(s)
    }

    #[test]
    fn unit_is_positive_definite() {
        for s in library::corpus() {
            let t = CoeffMap::unit(shared(s));
            let r = t.positive_definite(1e-9);
            assert!(r.positive, "{r:?}");
            let (sup, at_one) = t.norm_identity(1e-9).unwrap();
            assert!((sup - 1.0).abs() < 1e-12 && (at_one - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_non_pd_margin() {
        // φ(e)=1, φ(g)=2: kernel [[1,2],[2,1]] has eigenvalues 3 and −1.
        let s = shared(library::trivial_z2());
        let t = CoeffMap::embed_scalar(s, &[cx(1., 0.), cx(2., 0.)]).unwrap();
        let r = t.positive_definite(1e-9);
        assert!(!r.positive);
        assert!((r.margin() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn trivial_coefficient_products() {
        let s = shared(library::m2_inner_z2());
        let alg = s.algebra().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (b, b2) = (alg.random_element(&mut rng), alg.random_element(&mut rng));
        let one = alg.one();
        let t1 = CoeffMap::trivial_coefficient(s.clone(), &b2, &one);
        let t = CoeffMap::trivial_coefficient(s.clone(), &b, &one);
        let prod = t1.mul(&t).unwrap();
        let expect = CoeffMap::trivial_coefficient(s.clone(), &(&b * &b2), &one);
        assert!(prod.dist(&expect) < 1e-12);
        let i = CoeffMap::unit(s);
        assert!(i.mul(&t).unwrap().dist(&t) < 1e-15 && t.mul(&i).unwrap().dist(&t) < 1e-15);
    }

    #[test]
    fn scalar_embedding_is_multiplicative() {
        let s = shared(library::pauli());
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let phi: Vec<C64> = (0..4).map(|_| linalg::random_complex(&mut rng)).collect();
        let psi: Vec<C64> = (0..4).map(|_| linalg::random_complex(&mut rng)).collect();
        let prod: Vec<C64> = phi.iter().zip(&psi).map(|(a, b)| a * b).collect();
        let (tp, tq) = (
            CoeffMap::embed_scalar(s.clone(), &phi).unwrap(),
            CoeffMap::embed_scalar(s.clone(), &psi).unwrap(),
        );
        assert!(
            tp.mul(&tq)
                .unwrap()
                .dist(&CoeffMap::embed_scalar(s.clone(), &prod).unwrap())
                < 1e-12
        );
        let sup = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((tp.sup_norm() - sup).abs() < 1e-12);
    }

    #[test]
    fn conjugation_and_tilde_are_involutive() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for s in library::corpus() {
            let s = shared(s);
            let n = s.algebra().dim();
            let t = CoeffMap::new(
                s.clone(),
                (0..s.order())
                    .map(|_| linalg::random_matrix(&mut rng, n, n))
                    .collect(),
            )
            .unwrap();
            assert!(t.conjugate().conjugate().dist(&t) < 1e-10, "{}", s.name());
            assert!(t.tilde().untilde().dist(&t) < 1e-12);
            let i = CoeffMap::unit(s.clone());
            assert!(i.conjugate().dist(&i) < 1e-12);
        }
        let triv = shared(TwistedSystem::trivial(
            "t",
            CStarAlgebra::matrices(2),
            crate::FiniteGroup::cyclic(3),
        ));
        let t = CoeffMap::new(
            triv.clone(),
            (0..3)
                .map(|_| linalg::random_matrix(&mut rng, 4, 4))
                .collect(),
        )
        .unwrap();
        assert!(t.tilde().dist(&t) < 1e-15);
    }

    #[test]
    fn commutation_with_trivial_coefficients() {
        let s = shared(library::m2_trivial_z2());
        let alg = s.algebra().clone();
        let t = CoeffMap::embed_scalar(s.clone(), &[cx(1., 0.), cx(0.5, 0.)]).unwrap();
        assert!(t.commutes_with_trivial_coefficients(1e-10));
        let b = CMat::from_row_slice(2, 2, &[cx(0., 0.), cx(1., 0.), cx(0., 0.), cx(0., 0.)]);
        let tb = CoeffMap::trivial_coefficient(s, &AlgebraElement { blocks: vec![b] }, &alg.one());
        assert!(!tb.commutes_with_trivial_coefficients(1e-10));
    }

    #[test]
    fn witness_families() {
        let s = shared(library::pauli());
        let unit = CoeffMap::unit(s.clone());
        assert!(
            amenability_witness_check(std::slice::from_ref(&unit), 0.0, 1e-9)
                .unwrap()
                .passed
        );
        let fam: Vec<CoeffMap> = (1..=10)
            .map(|n| unit.scale(cx(1.0 - 1.0 / n as f64, 0.0)))
            .collect();
        let r = amenability_witness_check(&fam, 0.1 + 1e-12, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(!amenability_witness_check(&fam, 0.05, 1e-9).unwrap().passed);
        let mut bad = unit.clone();
        bad.maps[1] *= cx(2.0, 0.0);
        let r = amenability_witness_check(&[bad], 1.0, 1e-9).unwrap();
        assert!(!r.passed && r.min_margin < 0.0);
    }
}
