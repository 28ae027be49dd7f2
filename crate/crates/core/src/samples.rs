//! Random inputs with known positivity status, shared by the property suite,
//! the benches and the integration tests.

use std::sync::Arc;

use rand::Rng;

use crate::algebra::AlgebraElement;
use crate::coeff::CoeffMap;
use crate::equivariant::EquivariantRep;
use crate::group::FiniteGroup;
use crate::linalg::{self, cx, CMat, C64};
use crate::module::ModuleVector;
use crate::multiplier::AdFunction;
use crate::system::TwistedSystem;

/// Kernel margin that every non-positive sample is pushed below.
pub const NON_PD_MARGIN: f64 = -1e-6;

/// A diagonal coefficient `T_{ρ,v,x,x}` with its realization.
pub struct PdSample {
    pub rep: EquivariantRep,
    pub vector: ModuleVector,
    pub map: CoeffMap,
}

pub fn pd_sample<R: Rng + ?Sized>(system: &Arc<TwistedSystem>, rng: &mut R) -> PdSample {
    let rep = EquivariantRep::random(system, rng);
    let vector = rep.module().random_vector(rng);
    let map = rep.coefficient(&vector, &vector);
    PdSample { rep, vector, map }
}

/// `T + t·P` for a random coefficient `P`, with `t` doubled until the kernel
/// margin drops below [`NON_PD_MARGIN`]. Returns the map and its margin.
pub fn non_pd_perturbation<R: Rng + ?Sized>(t: &CoeffMap, rng: &mut R) -> (CoeffMap, f64) {
    let s = t.system();
    loop {
        let rep = EquivariantRep::random(s, rng);
        let (x, y) = (
            rep.module().random_vector(rng),
            rep.module().random_vector(rng),
        );
        let p = rep.coefficient(&x, &y);
        let mut scale = 0.05 * t.max_abs().max(1e-3) / p.max_abs().max(1e-12);
        for _ in 0..40 {
            let cand = t.add(&p.scale(cx(scale, 0.0))).expect("same system");
            let margin = cand.positive_definite(0.0).margin();
            if margin <= NON_PD_MARGIN {
                return (cand, margin);
            }
            scale *= 2.0;
        }
    }
}

/// `φ(g) = ⟨ξ, λ(g) ξ⟩` on `ℓ²(G)`, a positive-definite function.
pub fn scalar_pd_function<R: Rng + ?Sized>(group: &FiniteGroup, rng: &mut R) -> Vec<C64> {
    let xi: Vec<C64> = (0..group.order())
        .map(|_| linalg::random_complex(rng))
        .collect();
    group
        .elements()
        .map(|g| {
            group
                .elements()
                .map(|h| xi[h].conj() * xi[group.mul(g, h)])
                .sum()
        })
        .collect()
}

/// `[φ(g⁻¹h)]_{g,h}`.
pub fn scalar_gram(group: &FiniteGroup, phi: &[C64]) -> CMat {
    let n = group.order();
    CMat::from_fn(n, n, |g, h| phi[group.mul(group.inv(g), h)])
}

/// `φ − (λ_min + 0.1)·δ_e`, so that its Gram matrix has smallest eigenvalue
/// `−0.1`.
pub fn scalar_non_pd_function(group: &FiniteGroup, phi: &[C64]) -> Vec<C64> {
    let lmin = linalg::hermitian_eigenvalues(&scalar_gram(group, phi))[0];
    let mut out = phi.to_vec();
    out[group.identity()] -= cx(lmin + 0.1, 0.0);
    out
}

/// `φ(g) = Σ_k ψ_k(g) c_k* α_g(c_k)` with `c_k` central and `ψ_k` positive
/// definite on `G`: central-valued and AD-positive definite.
pub fn central_ad_positive<R: Rng + ?Sized>(
    system: &Arc<TwistedSystem>,
    rng: &mut R,
) -> AdFunction {
    let alg = system.algebra();
    let gr = system.group();
    let mut values = vec![alg.zero(); gr.order()];
    for _ in 0..2 {
        let c = alg.random_central(rng);
        let psi = scalar_pd_function(gr, rng);
        for g in gr.elements() {
            let term = (c.adjoint() * system.alpha(g).apply(&c)).scale(psi[g]);
            values[g] = &values[g] + &term;
        }
    }
    AdFunction::new(system.clone(), values).expect("values lie in A")
}

/// A central-valued `φ` whose AD matrix has smallest eigenvalue `−0.1`.
pub fn central_ad_negative<R: Rng + ?Sized>(
    system: &Arc<TwistedSystem>,
    rng: &mut R,
) -> AdFunction {
    let phi = central_ad_positive(system, rng);
    let alg = system.algebra();
    let flat = alg.flatten(&phi.ad_matrix()).expect("square");
    let lmin = linalg::hermitian_eigenvalues(&flat)[0];
    let mut values = phi.values().to_vec();
    let e = system.group().identity();
    values[e] = &values[e] - &alg.scalar(cx(lmin + 0.1, 0.0));
    AdFunction::new(system.clone(), values).expect("values lie in A")
}

/// `φ(g) = x* α_g(x)` for a random `x`: noncentral when `A` is.
pub fn noncentral<R: Rng + ?Sized>(system: &Arc<TwistedSystem>, rng: &mut R) -> AdFunction {
    let x = system.algebra().random_element(rng);
    let values: Vec<AlgebraElement> = system
        .group()
        .elements()
        .map(|g| x.adjoint() * system.alpha(g).apply(&x))
        .collect();
    AdFunction::new(system.clone(), values).expect("values lie in A")
}
