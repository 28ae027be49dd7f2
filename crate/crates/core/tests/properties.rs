//! Structural invariants as randomized properties over the bundled corpus.

use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twisted_fs::algebra::AlgebraElement;
use twisted_fs::coeff::CoeffMap;
use twisted_fs::correspondence::{
    coefficient_from_correspondence, Correspondence, CrossedCorrespondence,
};
use twisted_fs::crossed::{CrossedElement, RegularRep};
use twisted_fs::equivariant::{random_module_unitary, EquivariantRep};
use twisted_fs::linalg::{self, cx, CMat};
use twisted_fs::module::ModuleVector;
use twisted_fs::multiplier::{
    coefficient_of_map, gram_choi, AdFunction, CrossedContext, MultiplierMap,
};
use twisted_fs::par::ExecMode;
use twisted_fs::reconstruct::reconstruct;
use twisted_fs::system::library;
use twisted_fs::{samples, TwistedSystem};

fn system(i: usize) -> Arc<TwistedSystem> {
    let c = library::corpus();
    Arc::new(c[i % c.len()].clone())
}

fn inputs() -> impl Strategy<Value = (Arc<TwistedSystem>, ChaCha8Rng)> {
    (0usize..6, any::<u64>()).prop_map(|(i, seed)| (system(i), ChaCha8Rng::seed_from_u64(seed)))
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn involution_reverses_products_and_c_star_identity((s, mut r) in inputs()) {
        let alg = s.algebra();
        let (a, b) = (alg.random_element(&mut r), alg.random_element(&mut r));
        prop_assert!((&a * &b).adjoint().dist(&(b.adjoint() * a.adjoint())) <= 1e-12);
        let n = a.norm();
        prop_assert!(((a.adjoint() * &a).norm() - n * n).abs() <= 1e-10 * n * n);
    }

    #[test]
    fn automorphisms_preserve_norm_and_positivity((s, mut r) in inputs()) {
        let alg = s.algebra();
        let x = alg.random_element(&mut r);
        let p = x.adjoint() * &x;
        for g in s.group().elements() {
            let beta = s.alpha(g);
            prop_assert!((beta.apply(&x).norm() - x.norm()).abs() <= 1e-10 * x.norm());
            prop_assert!(alg.is_positive(&beta.apply(&p), 1e-10).unwrap());
            let not = &p - &alg.scalar(cx(2.0 * p.norm(), 0.0));
            prop_assert!(!alg.is_positive(&beta.apply(&not), 1e-10).unwrap());
        }
    }

    #[test]
    fn positive_matrices_over_a_pass_quadratic_form_sampling((s, mut r) in inputs()) {
        let alg = s.algebra();
        let n = 3;
        let c: Vec<AlgebraElement> = (0..n).map(|_| alg.random_element(&mut r)).collect();
        let m: Vec<Vec<AlgebraElement>> = (0..n).map(|i| (0..n).map(|j| c[i].adjoint() * &c[j]).collect()).collect();
        prop_assert!(alg.matrix_positive(&m, 1e-10).unwrap().positive);
        for _ in 0..5 {
            let b: Vec<AlgebraElement> = (0..n).map(|_| alg.random_element(&mut r)).collect();
            let mut q = alg.zero();
            for i in 0..n {
                for j in 0..n {
                    q = &q + &(b[i].adjoint() * &m[i][j] * &b[j]);
                }
            }
            prop_assert!(alg.is_positive(&q, 1e-9).unwrap());
        }
    }

    #[test]
    fn sigma_perturbations_are_rejected((s, mut r) in inputs(), mag in 1e-7f64..1.0) {
        prop_assume!(s.order() > 1);
        let alg = s.algebra();
        let n = s.order();
        let (g, h) = (rand::Rng::random_range(&mut r, 0..n), rand::Rng::random_range(&mut r, 0..n));
        let dir = alg.random_element(&mut r);
        let bad = s.sigma(g, h) + &dir.scale(cx(mag / dir.norm(), 0.0));
        let cand = s.with_sigma_entry_unchecked(g, h, bad);
        prop_assert!(cand.validate("perturbed", 1e-9).is_err());
    }

    #[test]
    fn regular_representation_is_a_faithful_covariant_pair((s, mut r) in inputs()) {
        let reg = RegularRep::new(&s);
        let f = CrossedElement::random(&s, &mut r);
        let x = reg.image(&f);
        let n = linalg::op_norm(&x);
        prop_assert!((linalg::op_norm(&(x.adjoint() * &x)) - n * n).abs() <= 1e-9 * n * n);
        prop_assert!(reg.coefficients(&x).dist(&f) <= 1e-12);
        prop_assert!(reg.expectation(&x).dist(&f.coeffs[s.group().identity()]) <= 1e-14);
        let a = s.algebra().random_element(&mut r);
        for g in s.group().elements() {
            let l = reg.lambda(g);
            let cov = l * reg.ell(&a) * l.adjoint() - reg.ell(&s.alpha(g).apply(&a));
            prop_assert!(linalg::max_abs(&cov) <= 1e-10);
        }
        // E(x*x) = 0 forces x = 0: the Gram of the basis under E is nonsingular.
        prop_assert!(reg.expectation(&(x.adjoint() * &x)).norm() > 0.0);
    }

    #[test]
    fn module_cauchy_schwarz_and_adjoints((s, mut r) in inputs()) {
        let rep = EquivariantRep::random(&s, &mut r);
        let m = rep.module();
        let (x, y) = (m.random_vector(&mut r), m.random_vector(&mut r));
        prop_assert!(m.inner(&x, &y).norm() <= m.norm(&x) * m.norm(&y) * (1.0 + 1e-12));
        let u = random_module_unitary(m, &mut r);
        let t = u.add(&u.scale(cx(0.3, -0.7)));
        let lhs = m.inner(&t.apply(&x), &y);
        let rhs = m.inner(&x, &t.adjoint().apply(&y));
        prop_assert!(lhs.dist(&rhs) <= 1e-10 * (1.0 + lhs.norm()));
        let st = t.compose(&u.adjoint());
        prop_assert!(st.norm() <= t.norm() * u.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn v_is_unital_and_isometric((s, mut r) in inputs()) {
        let rep = EquivariantRep::random(&s, &mut r);
        let m = rep.module();
        let e = s.group().identity();
        prop_assert!(linalg::max_abs(&(rep.v_matrix(e) - linalg::eye(m.carrier_dim()))) <= 1e-12);
        let x = m.random_vector(&mut r);
        for g in s.group().elements() {
            prop_assert!((m.norm(&rep.apply_v(g, &x)) - m.norm(&x)).abs() <= 1e-10 * m.norm(&x).max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn positive_definite_maps_form_a_cone_closed_under_products((s, mut r) in inputs()) {
        let a = samples::pd_sample(&s, &mut r).map;
        let b = samples::pd_sample(&s, &mut r).map;
        prop_assert!(a.add(&b).unwrap().positive_definite(1e-9).positive);
        prop_assert!(a.mul(&b).unwrap().positive_definite(1e-9).positive);
        let k = a.pd_kernel();
        for (i, row) in k.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                prop_assert!(v.adjoint().dist(&k[j][i]) <= 1e-12 * (1.0 + v.norm()));
            }
        }
    }

    #[test]
    fn unit_component_of_a_positive_definite_map_is_cp((s, mut r) in inputs()) {
        let t = samples::pd_sample(&s, &mut r).map;
        let alg = s.algebra();
        let basis: Vec<CMat> = alg.basis().iter().map(|b| alg.to_matrix(b)).collect();
        let e = s.group().identity();
        let te = |x: &CMat| alg.to_matrix(&t.apply(e, &alg.from_matrix(x)));
        let choi = gram_choi(&basis, &te, ExecMode::Sequential);
        prop_assert!(linalg::psd_check(&choi, 1e-9).positive);
    }

    #[test]
    fn kernel_and_choi_verdicts_agree((s, mut r) in inputs(), perturb in any::<bool>()) {
        let t = samples::pd_sample(&s, &mut r).map;
        let t = if perturb { samples::non_pd_perturbation(&t, &mut r).0 } else { t };
        let kernel = t.positive_definite(1e-9).positive;
        prop_assert_eq!(kernel, !perturb);
        prop_assert_eq!(MultiplierMap::new(&t).is_cp(1e-9), kernel);
    }

    #[test]
    fn scalar_embedding_sup_norm_is_max_modulus((s, mut r) in inputs()) {
        let phi = samples::scalar_pd_function(s.group(), &mut r);
        let t = CoeffMap::embed_scalar(s.clone(), &phi).unwrap();
        let expected = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!((t.sup_norm() - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn multiplier_assignment_is_a_unital_homomorphism((s, mut r) in inputs()) {
        let ctx = CrossedContext::new(&s);
        let rep = EquivariantRep::random(&s, &mut r);
        let m = rep.module();
        let t1 = rep.coefficient(&m.random_vector(&mut r), &m.random_vector(&mut r));
        let t2 = rep.coefficient(&m.random_vector(&mut r), &m.random_vector(&mut r));
        let (m1, m2) = (MultiplierMap::with_context(&t1, ctx.clone()), MultiplierMap::with_context(&t2, ctx.clone()));
        let prod = MultiplierMap::with_context(&t1.mul(&t2).unwrap(), ctx.clone());
        prop_assert!(linalg::max_abs(&(prod.matrix() - m1.matrix() * m2.matrix())) <= 1e-10);
        let unit = MultiplierMap::with_context(&CoeffMap::unit(s.clone()), ctx.clone());
        prop_assert!(linalg::max_abs(&(unit.matrix() - linalg::eye(unit.matrix().nrows()))) == 0.0);
        let mc = MultiplierMap::with_context(&t1.conjugate(), ctx.clone());
        prop_assert!(linalg::max_abs(&(mc.matrix() - m1.conjugate_matrix())) <= 1e-10);
    }

    #[test]
    fn coefficients_of_cp_maps_are_positive_definite((s, mut r) in inputs()) {
        let ctx = CrossedContext::new(&s);
        let reg = ctx.regular();
        let d = reg.size();
        // x ↦ V* x V for a random V in the commutant-free full matrix algebra
        // restricted back through E is CP; so is x ↦ y* x y inside C*r(Σ).
        let y = reg.image(&CrossedElement::random(&s, &mut r));
        let t = coefficient_of_map(&s, reg, |x| y.adjoint() * x * &y);
        prop_assert!(t.positive_definite(1e-9).positive);
        prop_assert_eq!(d, y.nrows());
    }

    #[test]
    fn left_and_right_maps_are_conjugate((s, mut r) in inputs()) {
        let vals = (0..s.order()).map(|_| s.algebra().random_element(&mut r)).collect();
        let phi = AdFunction::new(s.clone(), vals).unwrap();
        prop_assert!(phi.left_map().conjugate().dist(&phi.conjugate().right_map()) <= 1e-10);
        let central = samples::central_ad_positive(&s, &mut r);
        prop_assert!(MultiplierMap::new(&central.left_map()).is_bimodule(1e-9));
        if !s.algebra().is_commutative() {
            let nc = samples::noncentral(&s, &mut r);
            prop_assert_eq!(nc.is_central(1e-9), MultiplierMap::new(&nc.left_map()).is_bimodule(1e-9));
        }
    }

    #[test]
    fn reconstruction_reproduces_kernel_and_is_cyclic((s, mut r) in inputs()) {
        let t = samples::pd_sample(&s, &mut r).map;
        let real = reconstruct(&t, 1e-9).unwrap();
        let rep = &real.rep;
        let m = rep.module();
        let basis = s.algebra().basis();
        let gens: Vec<ModuleVector> = s
            .group()
            .elements()
            .flat_map(|g| basis.iter().map(move |a| (g, a.clone())))
            .map(|(g, a)| rep.rho(&a).apply(&rep.apply_v(g, &real.vector)))
            .collect();
        let k = t.pd_kernel();
        for (i, x) in gens.iter().enumerate() {
            for (j, y) in gens.iter().enumerate() {
                prop_assert!(m.inner(x, y).dist(&k[i][j]) <= 1e-8 * (1.0 + k[i][j].norm()));
            }
        }
        prop_assert!(rep.is_cyclic(&real.vector));
    }

    #[test]
    fn central_left_maps_reconstruct_with_central_vectors((s, mut r) in inputs()) {
        let phi = samples::central_ad_positive(&s, &mut r);
        let real = reconstruct(&phi.left_map(), 1e-9).unwrap();
        let scale = real.rep.module().norm(&real.vector).max(1.0);
        prop_assert!(real.rep.central_defect(&real.vector) <= 1e-8 * scale);
    }

    #[test]
    fn correspondence_coefficients_round_trip((s, mut r) in inputs()) {
        let rep = EquivariantRep::random(&s, &mut r);
        let m = rep.module();
        let (x, y) = (m.random_vector(&mut r), m.random_vector(&mut r));
        let t = rep.coefficient(&x, &y);
        let corr = CrossedCorrespondence::new(rep);
        let e = s.group().identity();
        let back = coefficient_from_correspondence(&corr, &corr.point(&x, e), &corr.point(&y, e));
        prop_assert!(back.dist(&t) <= 1e-8);
        // Conversely, a coefficient of arbitrary carrier vectors lies in B(Σ):
        // it is realized on the localized module.
        let n = corr.carrier_dim();
        let (y1, y2) = (samples_vec(n, &mut r), samples_vec(n, &mut r));
        let c = coefficient_from_correspondence(&corr, &y1, &y2);
        let loc = twisted_fs::correspondence::localize(&corr, 1e-9).unwrap();
        prop_assert!(loc.rep.coefficient(&loc.project(&y1), &loc.project(&y2)).dist(&c) <= 1e-8);
    }
}

fn samples_vec(n: usize, r: &mut ChaCha8Rng) -> linalg::CVec {
    twisted_fs::correspondence::random_carrier_vector(n, r)
}
