//! Rebuilding an equivariant representation with a cyclic vector from a
//! positive definite map, and the unitary linking two such realizations.

use crate::coeff::CoeffMap;
use crate::equivariant::{from_generator_gram, hstack, EquivariantRep};
use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};
use crate::module::{ModuleOperator, ModuleVector};

/// A representation together with a cyclic vector realizing a map.
#[derive(Clone, Debug)]
pub struct Realization {
    pub rep: EquivariantRep,
    pub vector: ModuleVector,
}

impl Realization {
    pub fn coefficient(&self) -> CoeffMap {
        self.rep.coefficient(&self.vector, &self.vector)
    }
}

/// Realize a positive definite `t` as `⟨x, ρ(a) v(g) x⟩` with `x` cyclic.
///
/// The module is the Kolmogorov quotient of the positivity kernel: the
/// generator `(g, e_j)` becomes `ρ(e_j) v(g) x`.
pub fn reconstruct(t: &CoeffMap, tol: f64) -> Result<Realization> {
    let report = t.positive_definite(tol);
    if !report.positive {
        return Err(Error::NotPositiveDefinite {
            margin: report.margin(),
        });
    }
    let (rep, vector, _) = from_generator_gram(t.system(), &t.pd_kernel(), tol)?;
    rep.validate(tol.max(1e-9))?;
    let residual = rep.coefficient(&vector, &vector).dist(t);
    if residual > tol.max(1e-8) * t.max_abs().max(1.0) {
        return Err(Error::NoSolution {
            what: "reconstructed coefficient",
            residual,
        });
    }
    Ok(Realization { rep, vector })
}

/// Residuals of the unitary returned by [`intertwiner`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IntertwinerReport {
    pub unitarity: f64,
    pub rho: f64,
    pub v: f64,
    pub vector: f64,
}

impl IntertwinerReport {
    pub fn worst(&self) -> f64 {
        self.unitarity.max(self.rho).max(self.v).max(self.vector)
    }
}

/// The unitary `u` with `u(ρ(a) v(g) x · b) = ρ'(a) v'(g) x' · b`, for two
/// cyclic realizations of `t`.
pub fn intertwiner(
    t: &CoeffMap,
    first: &Realization,
    second: &Realization,
    tol: f64,
) -> Result<(ModuleOperator, IntertwinerReport)> {
    let scale = t.max_abs().max(1.0);
    for r in [first, second] {
        let residual = r.coefficient().dist(t);
        if residual > tol * scale {
            return Err(Error::NoSolution {
                what: "realization does not reproduce the map",
                residual,
            });
        }
        let generated = r.rep.generated_ranks(&r.vector);
        if generated != r.rep.module().ranks() {
            return Err(Error::NotCyclic {
                generated: generated.iter().sum(),
                expected: r.rep.module().ranks().iter().sum(),
            });
        }
    }
    let (m1, m2) = (first.rep.module(), second.rep.module());
    if m1.algebra() != m2.algebra() {
        return Err(Error::Structure(
            "realizations over different algebras".into(),
        ));
    }
    let w1 = first.rep.generators(&first.vector);
    let w2 = second.rep.generators(&second.vector);
    let mut blocks = Vec::with_capacity(m1.ranks().len());
    for k in 0..m1.ranks().len() {
        let (r1, r2) = (m1.ranks()[k], m2.ranks()[k]);
        if r1 == 0 || r2 == 0 {
            if r1 != r2 {
                return Err(Error::NoSolution {
                    what: "block ranks differ",
                    residual: f64::INFINITY,
                });
            }
            blocks.push(linalg::zeros(r2, r1));
            continue;
        }
        let a = hstack(&w1.iter().map(|w| w.blocks[k].clone()).collect::<Vec<_>>());
        let b = hstack(&w2.iter().map(|w| w.blocks[k].clone()).collect::<Vec<_>>());
        let u = linalg::mul(&b, &linalg::pinv(&a, RANK_TOL));
        let residual = linalg::max_abs(&(linalg::mul(&u, &a) - &b));
        if residual > tol * linalg::max_abs(&b).max(1.0) {
            return Err(Error::NoSolution {
                what: "generator correspondence",
                residual,
            });
        }
        blocks.push(u);
    }
    let u = ModuleOperator { blocks };

    let mut report = IntertwinerReport::default();
    let id1 = ModuleOperator::identity(m1);
    let id2 = ModuleOperator::identity(m2);
    report.unitarity = u
        .adjoint()
        .compose(&u)
        .dist(&id1)
        .max(u.compose(&u.adjoint()).dist(&id2));
    for (p, q) in first.rep.rho_basis().iter().zip(second.rep.rho_basis()) {
        report.rho = report.rho.max(u.compose(p).dist(&q.compose(&u)));
    }
    let uf = u.full_matrix(m1);
    for g in t.system().group().elements() {
        let lhs = linalg::mul(&uf, first.rep.v_matrix(g));
        let rhs = linalg::mul(second.rep.v_matrix(g), &uf);
        report.v = report.v.max(linalg::max_abs(&(lhs - rhs)));
    }
    report.vector = u.apply(&first.vector).sub(&second.vector).max_abs();
    if report.worst() > tol * scale {
        return Err(Error::NoSolution {
            what: "intertwiner identities",
            residual: report.worst(),
        });
    }
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CStarAlgebra;
    use crate::equivariant::random_module_unitary;
    use crate::group::FiniteGroup;
    use crate::linalg::{cx, C64};
    use crate::system::{library, TwistedSystem};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn systems() -> Vec<Arc<TwistedSystem>> {
        library::corpus().into_iter().map(Arc::new).collect()
    }

    #[test]
    fn unit_map_gives_the_algebra() {
        for s in systems() {
            let t = CoeffMap::unit(s.clone());
            let r = reconstruct(&t, 1e-9).unwrap();
            assert_eq!(
                r.rep.module().ranks(),
                s.algebra().block_sizes(),
                "{}",
                s.name()
            );
            assert!(r.coefficient().dist(&t) < 1e-9);
        }
    }

    /// Rank of the |G|×|G| matrix [φ(g⁻¹h)], the dimension of the classical
    /// GNS space.
    fn gns_rank(g: &FiniteGroup, phi: &[C64]) -> usize {
        let n = g.order();
        let m = linalg::CMat::from_fn(n, n, |a, b| phi[g.mul(g.inv(a), b)]);
        linalg::rank(&m, 1e-9)
    }

    #[test]
    fn scalar_maps_recover_gns_dimension() {
        let g = FiniteGroup::cyclic(4);
        let s = Arc::new(TwistedSystem::trivial(
            "c4",
            CStarAlgebra::scalars(),
            g.clone(),
        ));
        // Sums of characters k ↦ i^{jk} with nonnegative weights.
        let weights: [&[f64]; 3] = [
            &[1.0, 0.0, 0.0, 0.0],
            &[1.0, 0.0, 2.0, 0.0],
            &[0.5, 1.0, 1.0, 3.0],
        ];
        for w in weights {
            let phi: Vec<C64> = (0..4)
                .map(|k| {
                    (0..4)
                        .map(|j| cx(0.0, 1.0).powu((j * k) as u32) * w[j])
                        .sum()
                })
                .collect();
            let t = CoeffMap::embed_scalar(s.clone(), &phi).unwrap();
            let r = reconstruct(&t, 1e-9).unwrap();
            assert_eq!(r.rep.module().localized_dim(), gns_rank(&g, &phi));
            assert_eq!(
                r.rep.module().localized_dim(),
                w.iter().filter(|&&x| x > 0.0).count()
            );
        }
    }

    #[test]
    fn non_positive_input_is_rejected() {
        let s = Arc::new(library::trivial_z2());
        let t = CoeffMap::embed_scalar(s, &[cx(1.0, 0.0), cx(2.0, 0.0)]).unwrap();
        match reconstruct(&t, 1e-9) {
            Err(Error::NotPositiveDefinite { margin }) => assert!((margin + 1.0).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kernel_is_the_generator_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in systems() {
            let rep = EquivariantRep::random(&s, &mut rng);
            let x = rep.module().random_vector(&mut rng);
            let t = rep.coefficient(&x, &x);
            let k = t.pd_kernel();
            let gens = rep.generators(&x);
            for (i, a) in gens.iter().enumerate() {
                for (j, b) in gens.iter().enumerate() {
                    assert!(
                        rep.module().inner(a, b).dist(&k[i][j]) < 1e-9,
                        "{}",
                        s.name()
                    );
                }
            }
        }
    }

    #[test]
    fn roundtrip_and_intertwiners() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in systems() {
            let rep = EquivariantRep::random(&s, &mut rng);
            let x = rep.module().random_vector(&mut rng);
            let t = rep.coefficient(&x, &x);
            let r1 = reconstruct(&t, 1e-9).unwrap();
            assert!(r1.coefficient().dist(&t) < 1e-8);
            assert!(r1.rep.is_cyclic(&r1.vector));

            let (u, rep0) = intertwiner(&t, &r1, &r1, 1e-8).unwrap();
            assert!(rep0.worst() < 1e-8);
            assert!(u.dist(&ModuleOperator::identity(r1.rep.module())) < 1e-8);

            let w = random_module_unitary(r1.rep.module(), &mut rng);
            let r2 = Realization {
                rep: r1.rep.conjugated(&w),
                vector: w.apply(&r1.vector),
            };
            let (u, _) = intertwiner(&t, &r1, &r2, 1e-8).unwrap();
            assert!(u.dist(&w) < 1e-8, "{}", s.name());

            let (rep3, x3) = rep.cyclic_subrep(&x, 1e-9).unwrap();
            let r3 = Realization {
                rep: rep3,
                vector: x3,
            };
            let (_, rep13) = intertwiner(&t, &r1, &r3, 1e-8).unwrap();
            assert!(rep13.worst() < 1e-8);
        }
    }

    #[test]
    fn non_cyclic_input_is_reported() {
        let s = Arc::new(library::pauli());
        let t = CoeffMap::unit(s.clone());
        let r = reconstruct(&t, 1e-9).unwrap();
        let big = EquivariantRep::direct_sum(&[&r.rep, &r.rep]).unwrap();
        let xv = crate::module::sum_vector(&[&r.vector, &r.rep.module().zero()]);
        let wide = Realization {
            rep: big,
            vector: xv,
        };
        assert!(matches!(
            intertwiner(&t, &r, &wide, 1e-8),
            Err(Error::NotCyclic { .. })
        ));
    }
}
