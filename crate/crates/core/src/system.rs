//! Twisted actions `(α, σ)` of a finite group on a finite-dimensional
//! C*-algebra, their validation, and a small library of named systems.

use std::sync::Arc;

use rand::Rng;

use crate::algebra::{real_mat, AlgebraElement, Automorphism, CStarAlgebra};
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::linalg::{cx, C64};

/// Default tolerance for all validators.
pub const DEFAULT_TOL: f64 = 1e-9;

/// A validated twisted C*-dynamical system `(A, G, α, σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistedSystem {
    name: String,
    algebra: CStarAlgebra,
    group: FiniteGroup,
    alpha: Vec<Automorphism>,
    alpha_inv: Vec<Automorphism>,
    sigma: Vec<AlgebraElement>,
}

/// Worst residuals of the twisted-action identities.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SystemReport {
    /// `α_g α_h = Ad(σ(g,h)) α_{gh}`.
    pub action: f64,
    /// `σ(g,h)σ(gh,k) = α_g(σ(h,k)) σ(g,hk)`.
    pub cocycle: f64,
    /// `σ(g,e) = σ(e,g) = 1`.
    pub normalization: f64,
    /// `σ(g,h)` unitary.
    pub unitarity: f64,
}

impl SystemReport {
    pub fn worst(&self) -> f64 {
        self.action
            .max(self.cocycle)
            .max(self.normalization)
            .max(self.unitarity)
    }
}

impl TwistedSystem {
    /// Validate and assemble. `sigma` is indexed `g · |G| + h`.
    pub fn new(
        name: impl Into<String>,
        algebra: CStarAlgebra,
        group: FiniteGroup,
        alpha: Vec<Automorphism>,
        sigma: Vec<AlgebraElement>,
        tol: f64,
    ) -> Result<Self> {
        let n = group.order();
        if alpha.len() != n || sigma.len() != n * n {
            return Err(Error::Structure(format!(
                "need {n} automorphisms and {} cocycle values, got {} and {}",
                n * n,
                alpha.len(),
                sigma.len()
            )));
        }
        for s in &sigma {
            algebra.check(s)?;
        }
        for a in &alpha {
            if a.permutation().len() != algebra.num_blocks() || !algebra.contains(a.unitary()) {
                return Err(Error::Structure(
                    "automorphism does not act on this algebra".into(),
                ));
            }
        }
        let alpha_inv = alpha.iter().map(|a| a.inverse()).collect();
        let sys = TwistedSystem {
            name: name.into(),
            algebra,
            group,
            alpha,
            alpha_inv,
            sigma,
        };
        sys.validate(tol)?;
        Ok(sys)
    }

    /// Compute all residuals, failing on the first identity exceeding `tol`.
    pub fn validate(&self, tol: f64) -> Result<SystemReport> {
        let g_ = &self.group;
        let n = g_.order();
        let e = g_.identity();
        let one = self.algebra.one();
        let basis = self.algebra.basis();
        let mut rep = SystemReport::default();

        for g in 0..n {
            for h in 0..n {
                let s = self.sigma(g, h);
                let u = (&s.adjoint() * s)
                    .dist(&one)
                    .max((s * &s.adjoint()).dist(&one));
                rep.unitarity = rep.unitarity.max(u);
                if u > tol {
                    return Err(Error::Cocycle {
                        identity: "unitarity",
                        g,
                        h,
                        k: e,
                        residual: u,
                    });
                }
            }
        }
        for g in 0..n {
            let r = self.sigma(g, e).dist(&one).max(self.sigma(e, g).dist(&one));
            rep.normalization = rep.normalization.max(r);
            if r > tol {
                return Err(Error::Cocycle {
                    identity: "normalization",
                    g,
                    h: e,
                    k: e,
                    residual: r,
                });
            }
        }
        for g in 0..n {
            for h in 0..n {
                let gh = g_.mul(g, h);
                let s = self.sigma(g, h);
                let r = basis
                    .iter()
                    .map(|b| {
                        let lhs = self.alpha(g).apply(&self.alpha(h).apply(b));
                        let rhs = &(s * &self.alpha(gh).apply(b)) * &s.adjoint();
                        lhs.dist(&rhs)
                    })
                    .fold(0.0, f64::max);
                rep.action = rep.action.max(r);
                if r > tol {
                    return Err(Error::Cocycle {
                        identity: "action",
                        g,
                        h,
                        k: e,
                        residual: r,
                    });
                }
            }
        }
        for g in 0..n {
            for h in 0..n {
                for k in 0..n {
                    let lhs = self.sigma(g, h) * self.sigma(g_.mul(g, h), k);
                    let rhs = self.alpha(g).apply(self.sigma(h, k)) * self.sigma(g, g_.mul(h, k));
                    let r = lhs.dist(&rhs);
                    rep.cocycle = rep.cocycle.max(r);
                    if r > tol {
                        return Err(Error::Cocycle {
                            identity: "cocycle",
                            g,
                            h,
                            k,
                            residual: r,
                        });
                    }
                }
            }
        }
        Ok(rep)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    #[inline]
    pub fn alpha(&self, g: usize) -> &Automorphism {
        &self.alpha[g]
    }

    #[inline]
    pub fn alpha_inv(&self, g: usize) -> &Automorphism {
        &self.alpha_inv[g]
    }

    #[inline]
    pub fn sigma(&self, g: usize, h: usize) -> &AlgebraElement {
        &self.sigma[g * self.order() + h]
    }

    /// Whether every cocycle value is a scalar multiple of the unit.
    pub fn sigma_is_scalar(&self, tol: f64) -> bool {
        self.sigma.iter().all(|s| s.as_scalar(tol).is_some())
    }

    /// Whether every `α_g` is the identity.
    pub fn alpha_is_trivial(&self, tol: f64) -> bool {
        self.alpha
            .iter()
            .all(|a| a.distance_from_identity(&self.algebra) <= tol)
    }

    /// `‖σ(h, h⁻¹h') − α_g⁻¹(σ(g,h) σ(gh, h⁻¹h') σ(g,h')*)‖`, the cocycle
    /// identity solved for `σ(h, h⁻¹h')`.
    pub fn inverse_cocycle_residual(&self, g: usize, h: usize, h2: usize) -> f64 {
        let gr = &self.group;
        let hih2 = gr.mul(gr.inv(h), h2);
        let inner = self.sigma(g, h) * self.sigma(gr.mul(g, h), hih2) * self.sigma(g, h2).adjoint();
        self.sigma(h, hih2).dist(&self.alpha_inv(g).apply(&inner))
    }

    /// Largest inverse-cocycle residual over all triples.
    pub fn inverse_cocycle_sweep(&self) -> f64 {
        let n = self.order();
        let mut worst: f64 = 0.0;
        for g in 0..n {
            for h in 0..n {
                for h2 in 0..n {
                    worst = worst.max(self.inverse_cocycle_residual(g, h, h2));
                }
            }
        }
        worst
    }

    /// Trivial action and trivial cocycle.
    pub fn trivial(name: &str, algebra: CStarAlgebra, group: FiniteGroup) -> Self {
        let n = group.order();
        let alpha = vec![Automorphism::identity(&algebra); n];
        let sigma = vec![algebra.one(); n * n];
        Self::new(name, algebra, group, alpha, sigma, DEFAULT_TOL).expect("trivial system")
    }

    /// Trivial action with a scalar 2-cocycle `σ(g,h) = c(g,h) · 1`.
    pub fn scalar_cocycle(
        name: &str,
        algebra: CStarAlgebra,
        group: FiniteGroup,
        c: impl Fn(usize, usize) -> C64,
    ) -> Result<Self> {
        let n = group.order();
        let alpha = vec![Automorphism::identity(&algebra); n];
        let sigma = (0..n * n)
            .map(|i| algebra.scalar(c(i / n, i % n)))
            .collect();
        Self::new(name, algebra, group, alpha, sigma, DEFAULT_TOL)
    }

    /// Inner action `α_g = Ad(u_g)` with `σ(g,h) = u_g u_h u_{gh}*`; `u_e`
    /// must be the unit.
    pub fn inner_action(
        name: &str,
        algebra: CStarAlgebra,
        group: FiniteGroup,
        u: Vec<AlgebraElement>,
    ) -> Result<Self> {
        let n = group.order();
        if u.len() != n {
            return Err(Error::Structure(
                "one unitary per group element required".into(),
            ));
        }
        let alpha = u.iter().map(|x| Automorphism::inner(x.clone())).collect();
        let mut sigma = Vec::with_capacity(n * n);
        for g in 0..n {
            for h in 0..n {
                sigma.push(&u[g] * &u[h] * u[group.mul(g, h)].adjoint());
            }
        }
        Self::new(name, algebra, group, alpha, sigma, DEFAULT_TOL)
    }

    /// Action by block permutations, `σ ≡ 1`. `perm_of(g)` gives the block
    /// map of `α_g` and must be a homomorphism.
    pub fn block_permutation(
        name: &str,
        algebra: CStarAlgebra,
        group: FiniteGroup,
        perm_of: impl Fn(usize) -> Vec<usize>,
    ) -> Result<Self> {
        let n = group.order();
        let alpha = (0..n)
            .map(|g| Automorphism::new(&algebra, perm_of(g), algebra.one(), DEFAULT_TOL))
            .collect::<Result<Vec<_>>>()?;
        let sigma = vec![algebra.one(); n * n];
        Self::new(name, algebra, group, alpha, sigma, DEFAULT_TOL)
    }

    /// Replace one cocycle value; the result is not validated.
    pub fn with_sigma_entry_unchecked(
        &self,
        g: usize,
        h: usize,
        value: AlgebraElement,
    ) -> Candidate {
        let mut sigma = self.sigma.clone();
        sigma[g * self.order() + h] = value;
        Candidate {
            algebra: self.algebra.clone(),
            group: self.group.clone(),
            alpha: self.alpha.clone(),
            sigma,
        }
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

/// Unvalidated system data.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub algebra: CStarAlgebra,
    pub group: FiniteGroup,
    pub alpha: Vec<Automorphism>,
    pub sigma: Vec<AlgebraElement>,
}

impl Candidate {
    pub fn validate(self, name: &str, tol: f64) -> Result<TwistedSystem> {
        TwistedSystem::new(name, self.algebra, self.group, self.alpha, self.sigma, tol)
    }
}

/// Named systems used as regression targets and in the bundled corpus.
pub mod library {
    use super::*;

    /// `A = ℂ`, `G = Z₂`, everything trivial.
    pub fn trivial_z2() -> TwistedSystem {
        TwistedSystem::trivial(
            "trivial-z2",
            CStarAlgebra::scalars(),
            FiniteGroup::cyclic(2),
        )
    }

    /// `A = M₂`, `G = Z₂`, everything trivial.
    pub fn m2_trivial_z2() -> TwistedSystem {
        TwistedSystem::trivial(
            "m2-trivial-z2",
            CStarAlgebra::matrices(2),
            FiniteGroup::cyclic(2),
        )
    }

    /// Klein four-group on `ℂ` with `σ(x,y) = (−1)^{x₂ y₁}`.
    pub fn pauli() -> TwistedSystem {
        let g = FiniteGroup::klein();
        // Index x = 2·x₁ + x₂.
        TwistedSystem::scalar_cocycle("pauli-klein", CStarAlgebra::scalars(), g, |x, y| {
            let (x2, y1) = (x % 2, y / 2);
            cx(if x2 * y1 == 1 { -1.0 } else { 1.0 }, 0.0)
        })
        .expect("Pauli cocycle")
    }

    /// `C(Z₂) ⋊ Z₂`: the flip of the two points.
    pub fn flip() -> TwistedSystem {
        let alg = CStarAlgebra::new(vec![1, 1]).unwrap();
        TwistedSystem::block_permutation("flip-z2", alg, FiniteGroup::cyclic(2), |g| {
            if g == 0 {
                vec![0, 1]
            } else {
                vec![1, 0]
            }
        })
        .expect("flip system")
    }

    /// `M₂` with `Z₂` acting by `Ad(Z)`.
    pub fn m2_inner_z2() -> TwistedSystem {
        let alg = CStarAlgebra::matrices(2);
        let z = AlgebraElement {
            blocks: vec![real_mat(2, 2, &[1., 0., 0., -1.])],
        };
        TwistedSystem::inner_action(
            "m2-inner-z2",
            alg.clone(),
            FiniteGroup::cyclic(2),
            vec![alg.one(), z],
        )
        .expect("inner Z2 system")
    }

    /// `M₂` with the Klein group acting by `Ad(1), Ad(Z), Ad(X), Ad(H)`; the
    /// cocycle takes non-scalar values.
    pub fn m2_inner_klein() -> TwistedSystem {
        let alg = CStarAlgebra::matrices(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let el = |m: [f64; 4]| AlgebraElement {
            blocks: vec![real_mat(2, 2, &m)],
        };
        let u = vec![
            alg.one(),
            el([1., 0., 0., -1.]),
            el([0., 1., 1., 0.]),
            el([s, s, s, -s]),
        ];
        TwistedSystem::inner_action("m2-inner-klein", alg, FiniteGroup::klein(), u)
            .expect("inner Klein system")
    }

    /// `S₃` permuting the three points of `ℂ³`.
    pub fn s3_permutation() -> TwistedSystem {
        let g = FiniteGroup::symmetric(3);
        let perms: Vec<Vec<usize>> = g
            .labels()
            .iter()
            .map(|l| {
                l.chars()
                    .map(|c| c.to_digit(10).unwrap() as usize - 1)
                    .collect()
            })
            .collect();
        let alg = CStarAlgebra::new(vec![1, 1, 1]).unwrap();
        TwistedSystem::block_permutation("s3-permutation", alg, g, |i| perms[i].clone())
            .expect("S3 system")
    }

    /// A random inner action of `group` on `algebra`.
    pub fn random_inner<R: Rng + ?Sized>(
        rng: &mut R,
        algebra: CStarAlgebra,
        group: FiniteGroup,
    ) -> TwistedSystem {
        let e = group.identity();
        let u = (0..group.order())
            .map(|g| {
                if g == e {
                    algebra.one()
                } else {
                    algebra.random_unitary(rng)
                }
            })
            .collect();
        TwistedSystem::inner_action("random-inner", algebra, group, u)
            .expect("inner actions are twisted actions")
    }

    /// The bundled corpus, in a fixed order.
    pub fn corpus() -> Vec<TwistedSystem> {
        vec![
            trivial_z2(),
            pauli(),
            flip(),
            m2_inner_z2(),
            s3_permutation(),
            m2_inner_klein(),
        ]
    }

    pub fn by_name(name: &str) -> Option<TwistedSystem> {
        corpus()
            .into_iter()
            .chain([m2_trivial_z2()])
            .find(|s| s.name() == name)
    }
}

#[cfg(test)]
mod tests {
    use super::library::*;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn corpus_validates_and_inverse_cocycle_identity_holds() {
        for s in corpus() {
            let r = s.validate(DEFAULT_TOL).unwrap();
            assert!(r.worst() <= 1e-12, "{}: {:?}", s.name(), r);
            assert!(s.inverse_cocycle_sweep() <= 1e-10, "{}", s.name());
            let e = s.group().identity();
            assert_eq!(s.inverse_cocycle_residual(e, e, e), 0.0);
        }
    }

    #[test]
    fn pauli_cocycle_oracle() {
        let s = pauli();
        // Oracle: σ(x,y) = (−1)^{x₂y₁} satisfies σ(x,y)σ(x+y,z) = σ(y,z)σ(x,y+z)
        // for all 64 triples, by direct integer arithmetic.
        let sig = |x: usize, y: usize| if (x % 2) * (y / 2) == 1 { -1i32 } else { 1 };
        let add = |x: usize, y: usize| x ^ y;
        for x in 0..4 {
            for y in 0..4 {
                for z in 0..4 {
                    assert_eq!(sig(x, y) * sig(add(x, y), z), sig(y, z) * sig(x, add(y, z)));
                }
                assert_eq!(s.sigma(x, y).blocks[0][(0, 0)].re, sig(x, y) as f64);
            }
        }
        assert_eq!(s.inverse_cocycle_sweep(), 0.0);
    }

    #[test]
    fn rejects_unnormalized_sigma() {
        let s = trivial_z2();
        let c = s.with_sigma_entry_unchecked(1, 0, s.algebra().scalar(cx(-1.0, 0.0)));
        match c.validate("bad", DEFAULT_TOL) {
            Err(Error::Cocycle { .. }) => {}
            other => panic!("expected cocycle error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_perturbed_sigma() {
        let s = m2_inner_klein();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = s.sigma(1, 2) + &s.algebra().random_element(&mut rng).scale(cx(1e-7, 0.0));
        assert!(s
            .with_sigma_entry_unchecked(1, 2, p)
            .validate("bad", DEFAULT_TOL)
            .is_err());
    }

    #[test]
    fn random_inner_systems_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let s = random_inner(
                &mut rng,
                CStarAlgebra::new(vec![2, 1]).unwrap(),
                FiniteGroup::symmetric(3),
            );
            assert!(s.inverse_cocycle_sweep() <= 1e-10);
        }
        assert!(!m2_inner_klein().sigma_is_scalar(1e-9));
    }
}
