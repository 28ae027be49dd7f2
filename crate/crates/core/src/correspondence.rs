//! Correspondences over the crossed product, their localization to Hilbert
//! `A`-modules through the expectation, and the coefficients they carry.
//!
//! Carriers are finite-dimensional complex vector spaces; elements of the
//! base algebra are functions `G → A` acting through twisted convolution.
//! For finite `G` every element of `C_c(Σ)` is already in the crossed
//! product, so no completion is needed.

use std::sync::Arc;

use rand::Rng;

use crate::coeff::CoeffMap;
use crate::crossed::{CrossedElement, RegularRep};
use crate::equivariant::EquivariantRep;
use crate::error::{Error, Result};
use crate::linalg::{self, cx, CMat, CVec, C64, RANK_TOL};
use crate::module::{HilbertModule, ModuleOperator, ModuleVector};
use crate::system::TwistedSystem;

/// A right pre-Hilbert bimodule over `C_c(Σ)` on `ℂ^carrier_dim`.
pub trait Correspondence {
    fn system(&self) -> &Arc<TwistedSystem>;
    fn carrier_dim(&self) -> usize;
    /// `f · y`.
    fn left(&self, f: &CrossedElement, y: &CVec) -> CVec;
    /// `y · f`.
    fn right(&self, y: &CVec, f: &CrossedElement) -> CVec;
    /// The `C_c(Σ)`-valued inner product.
    fn inner(&self, y: &CVec, z: &CVec) -> CrossedElement;

    /// `E(⟨y, z⟩)`.
    fn expected_inner(&self, y: &CVec, z: &CVec) -> crate::AlgebraElement {
        let e = self.system().group().identity();
        self.inner(y, z).coeffs[e].clone()
    }
}

/// `C_c(G, X)` for an equivariant representation on `X`, with
///
/// * `(f·ξ)(h) = Σ_g ρ(f(g)) v(g) ξ(g⁻¹h) · σ(g, g⁻¹h)`,
/// * `(ξ·f)(h) = Σ_g ξ(g) · α_g(f(g⁻¹h)) σ(g, g⁻¹h)`,
/// * `⟨ξ, η⟩(h) = Σ_g α_g⁻¹(⟨ξ(g), η(gh)⟩ σ(g, h)*)`.
///
/// The carrier stacks the flattened `ξ(h)` in group order.
#[derive(Clone, Debug)]
pub struct CrossedCorrespondence {
    rep: EquivariantRep,
}

impl CrossedCorrespondence {
    pub fn new(rep: EquivariantRep) -> Self {
        CrossedCorrespondence { rep }
    }

    pub fn rep(&self) -> &EquivariantRep {
        &self.rep
    }

    pub fn split(&self, y: &CVec) -> Vec<ModuleVector> {
        let m = self.rep.module();
        let n = m.carrier_dim();
        (0..self.rep.system().order())
            .map(|h| m.unflatten(&y.rows(h * n, n).into_owned()))
            .collect()
    }

    pub fn join(&self, parts: &[ModuleVector]) -> CVec {
        let m = self.rep.module();
        let n = m.carrier_dim();
        let mut out = CVec::zeros(n * parts.len());
        for (h, p) in parts.iter().enumerate() {
            out.rows_mut(h * n, n).copy_from(&m.flatten(p));
        }
        out
    }

    /// `x ⊙ g`: the function equal to `x` at `g` and zero elsewhere.
    pub fn point(&self, x: &ModuleVector, g: usize) -> CVec {
        let m = self.rep.module();
        let mut parts = vec![m.zero(); self.rep.system().order()];
        parts[g] = x.clone();
        self.join(&parts)
    }
}

impl Correspondence for CrossedCorrespondence {
    fn system(&self) -> &Arc<TwistedSystem> {
        self.rep.system()
    }

    fn carrier_dim(&self) -> usize {
        self.rep.module().carrier_dim() * self.rep.system().order()
    }

    fn left(&self, f: &CrossedElement, y: &CVec) -> CVec {
        let s = self.system();
        let gr = s.group();
        let m = self.rep.module();
        let xi = self.split(y);
        let mut out = vec![m.zero(); gr.order()];
        for g in gr.elements() {
            if f.coeffs[g].max_abs() == 0.0 {
                continue;
            }
            let rho = self.rep.rho(&f.coeffs[g]);
            for k in gr.elements() {
                let h = gr.mul(g, k);
                let term = m.right(&rho.apply(&self.rep.apply_v(g, &xi[k])), s.sigma(g, k));
                out[h] = out[h].add(&term);
            }
        }
        self.join(&out)
    }

    fn right(&self, y: &CVec, f: &CrossedElement) -> CVec {
        let s = self.system();
        let gr = s.group();
        let m = self.rep.module();
        let xi = self.split(y);
        let mut out = vec![m.zero(); gr.order()];
        for g in gr.elements() {
            for k in gr.elements() {
                let h = gr.mul(g, k);
                let a = s.alpha(g).apply(&f.coeffs[k]) * s.sigma(g, k);
                out[h] = out[h].add(&m.right(&xi[g], &a));
            }
        }
        self.join(&out)
    }

    fn inner(&self, y: &CVec, z: &CVec) -> CrossedElement {
        let s = self.system();
        let gr = s.group();
        let m = self.rep.module();
        let (xi, eta) = (self.split(y), self.split(z));
        let mut out = CrossedElement::zero(s);
        for g in gr.elements() {
            for h in gr.elements() {
                let t = m.inner(&xi[g], &eta[gr.mul(g, h)]) * s.sigma(g, h).adjoint();
                out.coeffs[h] = &out.coeffs[h] + &s.alpha_inv(g).apply(&t);
            }
        }
        out
    }

    fn expected_inner(&self, y: &CVec, z: &CVec) -> crate::AlgebraElement {
        let s = self.system();
        let m = self.rep.module();
        let (xi, eta) = (self.split(y), self.split(z));
        let mut acc = s.algebra().zero();
        for g in s.group().elements() {
            acc = &acc + &s.alpha_inv(g).apply(&m.inner(&xi[g], &eta[g]));
        }
        acc
    }
}

/// `C_c(Σ)` over itself: `f·ξ = f∗ξ`, `ξ·f = ξ∗f`, `⟨ξ,η⟩ = ξ*∗η`, on the
/// coordinates `e_j λ(g)`.
#[derive(Clone, Debug)]
pub struct AlgebraCorrespondence {
    system: Arc<TwistedSystem>,
}

impl AlgebraCorrespondence {
    pub fn new(system: Arc<TwistedSystem>) -> Self {
        AlgebraCorrespondence { system }
    }

    pub fn element(&self, y: &CVec) -> CrossedElement {
        CrossedElement::from_coords(self.system.algebra(), y.as_slice())
    }

    pub fn vector(&self, f: &CrossedElement) -> CVec {
        CVec::from_vec(f.coords(self.system.algebra()))
    }
}

impl Correspondence for AlgebraCorrespondence {
    fn system(&self) -> &Arc<TwistedSystem> {
        &self.system
    }

    fn carrier_dim(&self) -> usize {
        self.system.algebra().dim() * self.system.order()
    }

    fn left(&self, f: &CrossedElement, y: &CVec) -> CVec {
        self.vector(&f.convolve(&self.element(y), &self.system))
    }

    fn right(&self, y: &CVec, f: &CrossedElement) -> CVec {
        self.vector(&self.element(y).convolve(f, &self.system))
    }

    fn inner(&self, y: &CVec, z: &CVec) -> CrossedElement {
        self.element(y)
            .involute(&self.system)
            .convolve(&self.element(z), &self.system)
    }
}

/// Worst residuals of the bimodule identities on sampled inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CorrespondenceReport {
    /// `1·ξ = ξ·1 = ξ` and associativity of both actions.
    pub actions: f64,
    /// `(f·ξ)·f' = f·(ξ·f')`.
    pub bimodule: f64,
    /// `⟨ξ, η·f⟩ = ⟨ξ,η⟩∗f` and `⟨ξ,η⟩* = ⟨η,ξ⟩`.
    pub inner: f64,
    /// `⟨f·ξ, η⟩ = ⟨ξ, f*·η⟩`.
    pub adjointable: f64,
    /// Smallest eigenvalue of `Λ(⟨ξ,ξ⟩)` over the samples.
    pub min_positivity: f64,
}

impl CorrespondenceReport {
    pub fn worst_identity(&self) -> f64 {
        self.actions
            .max(self.bimodule)
            .max(self.inner)
            .max(self.adjointable)
    }
}

pub fn random_carrier_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    CVec::from_iterator(dim, (0..dim).map(|_| linalg::random_complex(rng)))
}

/// Check the bimodule identities on `samples` random triples.
pub fn check_correspondence<C: Correspondence + ?Sized, R: Rng + ?Sized>(
    corr: &C,
    samples: usize,
    rng: &mut R,
) -> CorrespondenceReport {
    let s = corr.system().clone();
    let reg = RegularRep::new(&s);
    let one = CrossedElement::one(&s);
    let n = corr.carrier_dim();
    let dist = |a: &CVec, b: &CVec| (a - b).camax();
    let mut rep = CorrespondenceReport {
        min_positivity: f64::INFINITY,
        ..Default::default()
    };
    for _ in 0..samples {
        let (xi, eta) = (random_carrier_vector(n, rng), random_carrier_vector(n, rng));
        let (f1, f2) = (
            CrossedElement::random(&s, rng),
            CrossedElement::random(&s, rng),
        );
        let f12 = f1.convolve(&f2, &s);
        rep.actions = rep
            .actions
            .max(dist(&corr.left(&one, &xi), &xi))
            .max(dist(&corr.right(&xi, &one), &xi))
            .max(dist(
                &corr.left(&f12, &xi),
                &corr.left(&f1, &corr.left(&f2, &xi)),
            ))
            .max(dist(
                &corr.right(&xi, &f12),
                &corr.right(&corr.right(&xi, &f1), &f2),
            ));
        rep.bimodule = rep.bimodule.max(dist(
            &corr.right(&corr.left(&f1, &xi), &f2),
            &corr.left(&f1, &corr.right(&xi, &f2)),
        ));
        let ip = corr.inner(&xi, &eta);
        rep.inner = rep
            .inner
            .max(
                corr.inner(&xi, &corr.right(&eta, &f1))
                    .dist(&ip.convolve(&f1, &s)),
            )
            .max(ip.involute(&s).dist(&corr.inner(&eta, &xi)));
        rep.adjointable = rep.adjointable.max(
            corr.inner(&corr.left(&f1, &xi), &eta)
                .dist(&corr.inner(&xi, &corr.left(&f1.involute(&s), &eta))),
        );
        let pos = linalg::psd_check(&reg.image(&corr.inner(&xi, &xi)), 0.0);
        rep.min_positivity = rep.min_positivity.min(pos.min_eigenvalue);
    }
    rep
}

/// The Hilbert `A`-module obtained from a correspondence through `E`, with
/// the equivariant representation `ρ_Y(a) y = a·y`, `v_Y(g) y = λ(g)·y·λ(g)*`.
#[derive(Clone, Debug)]
pub struct Localization {
    pub rep: EquivariantRep,
    /// `ℂ`-linear quotient map from the carrier onto the standard carrier.
    pub quotient: CMat,
    /// `y ↦ λ(g)·y·λ(g)*` on the carrier, before the quotient.
    pub carrier_v: Vec<CMat>,
}

impl Localization {
    pub fn project(&self, y: &CVec) -> ModuleVector {
        self.rep.module().unflatten(&(&self.quotient * y))
    }

    pub fn module(&self) -> &HilbertModule {
        self.rep.module()
    }
}

fn carrier_matrix(n: usize, f: impl Fn(&CVec) -> CVec) -> CMat {
    let mut m = CMat::zeros(n, n);
    for i in 0..n {
        let mut e = CVec::zeros(n);
        e[i] = cx(1.0, 0.0);
        m.set_column(i, &f(&e));
    }
    m
}

pub fn localize<C: Correspondence + ?Sized>(corr: &C, tol: f64) -> Result<Localization> {
    let s = corr.system().clone();
    let alg = s.algebra();
    let e = s.group().identity();
    let n = corr.carrier_dim();
    let basis: Vec<CVec> = (0..n)
        .map(|i| {
            let mut v = CVec::zeros(n);
            v[i] = cx(1.0, 0.0);
            v
        })
        .collect();
    let gram: Vec<Vec<_>> = basis
        .iter()
        .map(|a| basis.iter().map(|b| corr.expected_inner(a, b)).collect())
        .collect();
    let (module, gens) = HilbertModule::kolmogorov(alg, &gram, tol)?;
    let mut quotient = CMat::zeros(module.carrier_dim(), n);
    for (i, g) in gens.iter().enumerate() {
        quotient.set_column(i, &module.flatten(g));
    }
    let q_pinv = linalg::pinv(&quotient, RANK_TOL);
    let descend = |m: &CMat, what: &'static str| -> Result<CMat> {
        let qm = linalg::mul(&quotient, m);
        let d = linalg::mul(&qm, &q_pinv);
        let residual = linalg::max_abs(&(linalg::mul(&d, &quotient) - &qm));
        if residual > tol.max(1e-8) * linalg::max_abs(&qm).max(1.0) {
            return Err(Error::NoSolution { what, residual });
        }
        Ok(d)
    };

    // The quotient must intertwine the right action of A.
    for a in &alg.basis() {
        let act = carrier_matrix(n, |y| {
            corr.right(y, &CrossedElement::point(&s, a.clone(), e))
        });
        let lhs = linalg::mul(&quotient, &act);
        let rhs = linalg::mul(&module.right_matrix(a), &quotient);
        let residual = linalg::max_abs(&(lhs - rhs));
        if residual > tol.max(1e-8) * linalg::max_abs(&quotient).max(1.0) {
            return Err(Error::Module {
                axiom: "right action compatible with localized inner product",
                residual,
            });
        }
    }

    let mut rho = Vec::with_capacity(alg.dim());
    for a in &alg.basis() {
        let l = carrier_matrix(n, |y| {
            corr.left(&CrossedElement::point(&s, a.clone(), e), y)
        });
        let full = descend(&l, "ρ_Y on the localized module")?;
        rho.push(ModuleOperator::from_full_matrix(
            &module,
            &module,
            &full,
            tol.max(1e-8),
        )?);
    }
    let mut v = Vec::with_capacity(s.order());
    let mut carrier_v = Vec::with_capacity(s.order());
    for g in s.group().elements() {
        let lam = CrossedElement::unitary(&s, g);
        let lam_star = lam.involute(&s);
        let m = carrier_matrix(n, |y| corr.right(&corr.left(&lam, y), &lam_star));
        v.push(descend(&m, "v_Y on the localized module")?);
        carrier_v.push(m);
    }
    let rep = EquivariantRep::new(s, module, rho, v, tol.max(1e-9))?;
    Ok(Localization {
        rep,
        quotient,
        carrier_v,
    })
}

/// `T(g, a) = E(⟨y, (aλ(g))·z⟩ λ(g)*)`.
pub fn coefficient_from_correspondence<C: Correspondence + ?Sized>(
    corr: &C,
    y: &CVec,
    z: &CVec,
) -> CoeffMap {
    let s = corr.system().clone();
    let e = s.group().identity();
    CoeffMap::from_fn(s.clone(), |g, a| {
        let az = corr.left(&CrossedElement::point(&s, a.clone(), g), z);
        let lam_star = CrossedElement::unitary(&s, g).involute(&s);
        corr.inner(y, &az).convolve(&lam_star, &s).coeffs[e].clone()
    })
}

/// `[v(g)ξ](h) = α_g(ξ(g⁻¹hg)) σ(g, g⁻¹hg) σ(h, g)*` on the coordinates of
/// `C_c(Σ)`: the conjugation action `ξ ↦ λ(g) ξ λ(g)*` in closed form.
pub fn conjugation_action(system: &TwistedSystem) -> Vec<CMat> {
    let alg = system.algebra();
    let gr = system.group();
    let dim = alg.dim();
    let n = dim * gr.order();
    gr.elements()
        .map(|g| {
            carrier_matrix(n, |y| {
                let xi = CrossedElement::from_coords(alg, y.as_slice());
                let out = CrossedElement {
                    coeffs: gr
                        .elements()
                        .map(|h| {
                            let k = gr.mul(gr.mul(gr.inv(g), h), g);
                            system.alpha(g).apply(&xi.coeffs[k])
                                * system.sigma(g, k)
                                * system.sigma(h, g).adjoint()
                        })
                        .collect(),
                };
                CVec::from_vec(out.coords(alg))
            })
        })
        .collect()
}

/// For `A = ℂ`: `[v_σ(g)ξ](h) = σ(g, g⁻¹hg) conj(σ(h, g)) ξ(g⁻¹hg)` on `ℓ²(G)`.
pub fn scalar_conjugation_action(system: &TwistedSystem, tol: f64) -> Result<Vec<CMat>> {
    if system.algebra().dim() != 1 {
        return Err(Error::Hypothesis("the scalar formula needs A = ℂ".into()));
    }
    let gr = system.group();
    let scalar = |g: usize, h: usize| -> Result<C64> {
        system
            .sigma(g, h)
            .as_scalar(tol)
            .ok_or_else(|| Error::Hypothesis("σ is not scalar".into()))
    };
    let n = gr.order();
    let mut out = Vec::with_capacity(n);
    for g in gr.elements() {
        let mut m = CMat::zeros(n, n);
        for h in gr.elements() {
            let k = gr.mul(gr.mul(gr.inv(g), h), g);
            m[(h, k)] = scalar(g, k)? * scalar(h, g)?.conj();
        }
        out.push(m);
    }
    Ok(out)
}
