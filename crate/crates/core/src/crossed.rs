//! The twisted convolution algebra `C_c(Σ)`, its regular covariant
//! representation, and the concrete reduced crossed product.
//!
//! For finite `G` the regular representation is faithful and the full and
//! reduced crossed products coincide, so `C*(Σ)` is identified throughout
//! with the matrix algebra spanned by `Λ(f)` on `ℓ²(G, ℂ^d)`, `D = d·|G|`.
//!
//! The concrete space is the localization of the module `A^Σ` through the
//! faithful representation `π` of `A`: a vector `ξ ⊗ η` is sent to
//! `h ↦ π(α_h⁻¹(ξ(h))) η`. Under this identification
//!
//! * `ℓ(a)` is block diagonal with blocks `π(α_h⁻¹(a))`,
//! * `λ(g)` has block `(h, g⁻¹h)` equal to `π(α_h⁻¹(σ(g, g⁻¹h)))`,
//! * `E(x)` is the `(e, e)` block of `x`.
//!
//! Coordinates on `C_c(Σ)` use the basis `e_j λ(g)` with index `g·dim A + j`.

use rand::Rng;

use crate::algebra::{AlgebraElement, CStarAlgebra};
use crate::error::{structure, Result};
use crate::linalg::{self, cx, CMat, C64, RANK_TOL};
use crate::system::TwistedSystem;

/// A function `G → A`, viewed as an element of `C_c(Σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossedElement {
    pub coeffs: Vec<AlgebraElement>,
}

impl CrossedElement {
    pub fn zero(s: &TwistedSystem) -> Self {
        CrossedElement {
            coeffs: vec![s.algebra().zero(); s.order()],
        }
    }

    /// `a ⊙ g`.
    pub fn point(s: &TwistedSystem, a: AlgebraElement, g: usize) -> Self {
        let mut f = Self::zero(s);
        f.coeffs[g] = a;
        f
    }

    /// The unit `1 ⊙ e`.
    pub fn one(s: &TwistedSystem) -> Self {
        Self::point(s, s.algebra().one(), s.group().identity())
    }

    /// `1 ⊙ g`, the canonical unitary.
    pub fn unitary(s: &TwistedSystem, g: usize) -> Self {
        Self::point(s, s.algebra().one(), g)
    }

    pub fn random<R: Rng + ?Sized>(s: &TwistedSystem, rng: &mut R) -> Self {
        CrossedElement {
            coeffs: (0..s.order())
                .map(|_| s.algebra().random_element(rng))
                .collect(),
        }
    }

    /// Coordinate vector in the basis `e_j λ(g)`.
    pub fn coords(&self, alg: &CStarAlgebra) -> Vec<C64> {
        self.coeffs.iter().flat_map(|a| alg.coords(a)).collect()
    }

    pub fn from_coords(alg: &CStarAlgebra, c: &[C64]) -> Self {
        let n = alg.dim();
        CrossedElement {
            coeffs: c.chunks(n).map(|ch| alg.from_coords(ch)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        CrossedElement {
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        CrossedElement {
            coeffs: self
                .coeffs
                .iter()
                .zip(&o.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        CrossedElement {
            coeffs: self.coeffs.iter().map(|a| a.scale(c)).collect(),
        }
    }

    /// Largest coefficient distance.
    pub fn dist(&self, o: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&o.coeffs)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max)
    }

    /// `(f₁ ∗ f₂)(h) = Σ_g f₁(g) α_g(f₂(g⁻¹h)) σ(g, g⁻¹h)`.
    pub fn convolve(&self, o: &Self, s: &TwistedSystem) -> Self {
        let gr = s.group();
        let mut out = Self::zero(s);
        for g in gr.elements() {
            if self.coeffs[g].max_abs() == 0.0 {
                continue;
            }
            for k in gr.elements() {
                // h = g k, so g⁻¹h = k.
                let h = gr.mul(g, k);
                let term = &self.coeffs[g] * &s.alpha(g).apply(&o.coeffs[k]) * s.sigma(g, k);
                out.coeffs[h] = &out.coeffs[h] + &term;
            }
        }
        out
    }

    /// `f*(h) = σ(h, h⁻¹)* α_h(f(h⁻¹))*`.
    pub fn involute(&self, s: &TwistedSystem) -> Self {
        let gr = s.group();
        CrossedElement {
            coeffs: gr
                .elements()
                .map(|h| {
                    let hi = gr.inv(h);
                    &s.sigma(h, hi).adjoint() * &s.alpha(h).apply(&self.coeffs[hi]).adjoint()
                })
                .collect(),
        }
    }
}

/// Structure of the finite-dimensional algebra `Λ(C_c(Σ))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageStructure {
    pub dim: usize,
    pub center_dim: usize,
    /// `(n, m)`: a summand `M_n` appearing with multiplicity `m` on `ℂ^D`.
    pub blocks: Vec<(usize, usize)>,
}

/// The regular covariant representation `(ℓ, λ)` realized on `ℂ^{d·|G|}`.
#[derive(Clone, Debug)]
pub struct RegularRep {
    algebra: CStarAlgebra,
    d: usize,
    n: usize,
    identity: usize,
    alpha_inv_matrices: Vec<Vec<CMat>>,
    lambda: Vec<CMat>,
    basis: Vec<CMat>,
}

impl RegularRep {
    pub fn new(s: &TwistedSystem) -> Self {
        let alg = s.algebra().clone();
        let gr = s.group();
        let (d, n) = (alg.rep_dim(), gr.order());
        // π(α_h⁻¹(e_j)) for every h and basis element.
        let alpha_inv_matrices: Vec<Vec<CMat>> = gr
            .elements()
            .map(|h| {
                alg.basis()
                    .iter()
                    .map(|e| alg.to_matrix(&s.alpha_inv(h).apply(e)))
                    .collect()
            })
            .collect();
        let lambda = gr
            .elements()
            .map(|g| {
                let mut m = CMat::zeros(d * n, d * n);
                for h in gr.elements() {
                    let k = gr.mul(gr.inv(g), h);
                    let blk = alg.to_matrix(&s.alpha_inv(h).apply(s.sigma(g, k)));
                    m.view_mut((h * d, k * d), (d, d)).copy_from(&blk);
                }
                m
            })
            .collect::<Vec<_>>();
        let mut rep = RegularRep {
            algebra: alg,
            d,
            n,
            identity: gr.identity(),
            alpha_inv_matrices,
            lambda,
            basis: vec![],
        };
        let dim_a = rep.algebra.dim();
        rep.basis = (0..n * dim_a)
            .map(|i| {
                let (g, j) = (i / dim_a, i % dim_a);
                rep.ell_basis(j) * &rep.lambda[g]
            })
            .collect();
        rep
    }

    /// Size `D = d·|G|` of the concrete matrices.
    pub fn size(&self) -> usize {
        self.d * self.n
    }

    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    fn ell_basis(&self, j: usize) -> CMat {
        let blocks: Vec<CMat> = (0..self.n)
            .map(|h| self.alpha_inv_matrices[h][j].clone())
            .collect();
        linalg::block_diag(&blocks)
    }

    /// `ℓ(a)`.
    pub fn ell(&self, a: &AlgebraElement) -> CMat {
        let c = self.algebra.coords(a);
        let mut blocks = vec![CMat::zeros(self.d, self.d); self.n];
        for (j, cj) in c.iter().enumerate() {
            if *cj == cx(0.0, 0.0) {
                continue;
            }
            for (h, b) in blocks.iter_mut().enumerate() {
                *b += &self.alpha_inv_matrices[h][j] * *cj;
            }
        }
        linalg::block_diag(&blocks)
    }

    /// `λ(g)`.
    pub fn lambda(&self, g: usize) -> &CMat {
        &self.lambda[g]
    }

    /// `Λ(f) = Σ_g ℓ(f(g)) λ(g)`.
    pub fn image(&self, f: &CrossedElement) -> CMat {
        let dn = self.size();
        let mut m = CMat::zeros(dn, dn);
        for (g, a) in f.coeffs.iter().enumerate() {
            if a.max_abs() != 0.0 {
                m += self.ell(a) * &self.lambda[g];
            }
        }
        m
    }

    /// The basis `Λ(e_j ⊙ g)` of `C*r(Σ)`, indexed `g·dim A + j`.
    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// `E(x)`: the `(e,e)` block read back into `A`.
    pub fn expectation(&self, x: &CMat) -> AlgebraElement {
        let o = self.identity * self.d;
        self.algebra
            .from_matrix(&x.view((o, o), (self.d, self.d)).into_owned())
    }

    /// Recover `f` from `x = Λ(f)` via `f(g) = E(x λ(g)*)`.
    pub fn coefficients(&self, x: &CMat) -> CrossedElement {
        CrossedElement {
            coeffs: self
                .lambda
                .iter()
                .map(|l| self.expectation(&(x * l.adjoint())))
                .collect(),
        }
    }

    /// `ξ₀ ∈ A^Σ`: the unit at `e`.
    pub fn xi0(&self) -> Vec<AlgebraElement> {
        let mut v = vec![self.algebra.zero(); self.n];
        v[self.identity] = self.algebra.one();
        v
    }

    /// Rank of the span of the image basis.
    pub fn image_dim(&self) -> usize {
        let dn = self.size();
        let mut m = CMat::zeros(dn * dn, self.basis.len());
        for (i, b) in self.basis.iter().enumerate() {
            m.set_column(i, &linalg::vec_of(b));
        }
        linalg::rank(&m, RANK_TOL)
    }

    /// Coefficient vectors (over the image basis) spanning the center.
    pub fn center_coeffs(&self) -> CMat {
        let nb = self.basis.len();
        let dn = self.size();
        let mut eqs = CMat::zeros(nb * dn * dn, nb);
        for (i, bi) in self.basis.iter().enumerate() {
            for (m, bm) in self.basis.iter().enumerate() {
                let c = bi * bm - bm * bi;
                eqs.view_mut((m * dn * dn, i), (dn * dn, 1))
                    .copy_from(&linalg::vec_of(&c));
            }
        }
        linalg::null_space(&eqs, RANK_TOL)
    }

    /// Dimension, center and Wedderburn block sizes of `C*r(Σ)`.
    pub fn structure(&self) -> ImageStructure {
        let dim = self.image_dim();
        let cc = self.center_coeffs();
        let center_dim = cc.ncols();
        // A generic self-adjoint central element separates the minimal central
        // projections by its eigenvalues.
        let dn = self.size();
        let mut z = CMat::zeros(dn, dn);
        for t in 0..center_dim {
            let w = cx(1.0 / (t as f64 + 1.618), 0.0);
            let mut zt = CMat::zeros(dn, dn);
            for (i, b) in self.basis.iter().enumerate() {
                zt += b * cc[(i, t)];
            }
            z += linalg::hermitian_part(&zt) * w;
        }
        let (vals, vecs) = linalg::hermitian_eigen(&z);
        let spread = vals.iter().map(|v| v.abs()).fold(1e-300, f64::max);
        let mut groups: Vec<Vec<usize>> = vec![];
        for (i, v) in vals.iter().enumerate() {
            match groups.last_mut() {
                Some(gp) if (v - vals[*gp.last().unwrap()]).abs() <= 1e-7 * spread => gp.push(i),
                _ => groups.push(vec![i]),
            }
        }
        let mut blocks: Vec<(usize, usize)> = groups
            .iter()
            .map(|gp| {
                let mut v = CMat::zeros(dn, gp.len());
                for (c, &i) in gp.iter().enumerate() {
                    v.set_column(c, &vecs.column(i));
                }
                let p = &v * v.adjoint();
                let mut m = CMat::zeros(dn * dn, self.basis.len());
                for (i, b) in self.basis.iter().enumerate() {
                    m.set_column(i, &linalg::vec_of(&(&p * b)));
                }
                let sub = linalg::rank(&m, RANK_TOL);
                let n = (sub as f64).sqrt().round() as usize;
                (n, gp.len().checked_div(n).unwrap_or(0))
            })
            .collect();
        blocks.sort();
        ImageStructure {
            dim,
            center_dim,
            blocks,
        }
    }

    /// Inner product on `A^Σ`: `Σ_g α_g⁻¹(ξ(g)* η(g))`.
    pub fn module_inner(
        &self,
        s: &TwistedSystem,
        xi: &[AlgebraElement],
        eta: &[AlgebraElement],
    ) -> AlgebraElement {
        let mut acc = self.algebra.zero();
        for g in 0..self.n {
            acc = &acc + &s.alpha_inv(g).apply(&(&xi[g].adjoint() * &eta[g]));
        }
        acc
    }

    /// `[λ(g) ξ](h) = α_g(ξ(g⁻¹h)) σ(g, g⁻¹h)` on `A^Σ`.
    pub fn module_lambda(
        &self,
        s: &TwistedSystem,
        g: usize,
        xi: &[AlgebraElement],
    ) -> Vec<AlgebraElement> {
        let gr = s.group();
        gr.elements()
            .map(|h| {
                let k = gr.mul(gr.inv(g), h);
                &s.alpha(g).apply(&xi[k]) * s.sigma(g, k)
            })
            .collect()
    }

    /// Send `ξ ∈ A^Σ` to the `d × D`-shaped family of localized vectors
    /// `ξ ⊗ e_p`, as the columns of a `D × d` matrix.
    pub fn localize_module_vector(&self, s: &TwistedSystem, xi: &[AlgebraElement]) -> CMat {
        let mut m = CMat::zeros(self.size(), self.d);
        for h in 0..self.n {
            let blk = self.algebra.to_matrix(&s.alpha_inv(h).apply(&xi[h]));
            m.view_mut((h * self.d, 0), (self.d, self.d))
                .copy_from(&blk);
        }
        m
    }
}

/// A covariant representation `(π, u)` of `Σ` on `ℂ^m`.
#[derive(Clone, Debug)]
pub struct CovariantRep {
    algebra: CStarAlgebra,
    pi_basis: Vec<CMat>,
    u: Vec<CMat>,
}

impl CovariantRep {
    /// Validate `π` as a unital *-representation (on basis pairs), each
    /// `u(g)` unitary, `u(g)u(h) = π(σ(g,h))u(gh)` and
    /// `π(α_g(a)) = u(g)π(a)u(g)*`.
    pub fn new(s: &TwistedSystem, pi_basis: Vec<CMat>, u: Vec<CMat>, tol: f64) -> Result<Self> {
        let alg = s.algebra().clone();
        if pi_basis.len() != alg.dim() || u.len() != s.order() {
            return structure(
                "covariant representation needs one matrix per basis element and per group element",
            );
        }
        let m = u[0].nrows();
        if pi_basis
            .iter()
            .chain(&u)
            .any(|x| x.nrows() != m || x.ncols() != m)
        {
            return structure("covariant representation matrices must share one square size");
        }
        let rep = CovariantRep {
            algebra: alg.clone(),
            pi_basis,
            u,
        };
        let basis = alg.basis();
        let check = |r: f64, axiom: &'static str| {
            if r > tol {
                Err(crate::Error::Axiom { axiom, residual: r })
            } else {
                Ok(())
            }
        };
        check(
            linalg::max_abs(&(rep.pi(&alg.one()) - linalg::eye(m))),
            "π unital",
        )?;
        for (i, a) in basis.iter().enumerate() {
            check(
                linalg::max_abs(&(rep.pi(&a.adjoint()) - rep.pi_basis[i].adjoint())),
                "π *-preserving",
            )?;
            for (j, b) in basis.iter().enumerate() {
                let r = linalg::max_abs(&(rep.pi(&(a * b)) - &rep.pi_basis[i] * &rep.pi_basis[j]));
                check(r, "π multiplicative")?;
            }
        }
        let gr = s.group();
        for g in gr.elements() {
            check(
                linalg::max_abs(&(rep.u[g].adjoint() * &rep.u[g] - linalg::eye(m))),
                "u unitary",
            )?;
            for h in gr.elements() {
                let r = linalg::max_abs(
                    &(&rep.u[g] * &rep.u[h] - rep.pi(s.sigma(g, h)) * &rep.u[gr.mul(g, h)]),
                );
                check(r, "twisted unitary relation")?;
            }
            for a in &basis {
                let r = linalg::max_abs(
                    &(rep.pi(&s.alpha(g).apply(a)) - &rep.u[g] * rep.pi(a) * rep.u[g].adjoint()),
                );
                check(r, "covariance")?;
            }
        }
        Ok(rep)
    }

    /// The regular covariant representation.
    pub fn regular(s: &TwistedSystem, reg: &RegularRep) -> Self {
        let alg = s.algebra().clone();
        CovariantRep {
            pi_basis: alg.basis().iter().map(|e| reg.ell(e)).collect(),
            u: (0..s.order()).map(|g| reg.lambda(g).clone()).collect(),
            algebra: alg,
        }
    }

    pub fn dim(&self) -> usize {
        self.u[0].nrows()
    }

    pub fn pi(&self, a: &AlgebraElement) -> CMat {
        let m = self.dim();
        let mut out = CMat::zeros(m, m);
        for (j, c) in self.algebra.coords(a).into_iter().enumerate() {
            if c != cx(0.0, 0.0) {
                out += &self.pi_basis[j] * c;
            }
        }
        out
    }

    pub fn u(&self, g: usize) -> &CMat {
        &self.u[g]
    }

    /// `(π × u)(f) = Σ_g π(f(g)) u(g)`.
    pub fn integrate(&self, f: &CrossedElement) -> CMat {
        let m = self.dim();
        let mut out = CMat::zeros(m, m);
        for (g, a) in f.coeffs.iter().enumerate() {
            out += self.pi(a) * &self.u[g];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::library;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pauli_generators_anticommute() {
        let s = library::pauli();
        let a = CrossedElement::unitary(&s, 2);
        let b = CrossedElement::unitary(&s, 1);
        let one = s.algebra().one();
        assert!(
            a.convolve(&b, &s)
                .dist(&CrossedElement::point(&s, one.clone(), 3))
                < 1e-15
        );
        assert!(
            b.convolve(&a, &s)
                .dist(&CrossedElement::point(&s, -&one, 3))
                < 1e-15
        );
    }

    #[test]
    fn convolution_algebra_laws() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for s in library::corpus() {
            let f1 = CrossedElement::random(&s, &mut rng);
            let f2 = CrossedElement::random(&s, &mut rng);
            let f3 = CrossedElement::random(&s, &mut rng);
            let one = CrossedElement::one(&s);
            assert!(f1.convolve(&one, &s).dist(&f1) < 1e-12);
            assert!(one.convolve(&f1, &s).dist(&f1) < 1e-12);
            let l = f1.convolve(&f2, &s).convolve(&f3, &s);
            let r = f1.convolve(&f2.convolve(&f3, &s), &s);
            assert!(l.dist(&r) < 1e-10, "{}", s.name());
            assert!(f1.involute(&s).involute(&s).dist(&f1) < 1e-12);
            let lhs = f1.convolve(&f2, &s).involute(&s);
            let rhs = f2.involute(&s).convolve(&f1.involute(&s), &s);
            assert!(lhs.dist(&rhs) < 1e-10);
        }
    }

    #[test]
    fn regular_rep_relations() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for s in library::corpus() {
            let reg = RegularRep::new(&s);
            let gr = s.group();
            let a = s.algebra().random_element(&mut rng);
            for g in gr.elements() {
                let lhs = reg.ell(&s.alpha(g).apply(&a));
                let rhs = reg.lambda(g) * reg.ell(&a) * reg.lambda(g).adjoint();
                assert!(linalg::max_abs(&(lhs - rhs)) < 1e-10);
                for h in gr.elements() {
                    let lhs = reg.lambda(g) * reg.lambda(h);
                    let rhs = reg.ell(s.sigma(g, h)) * reg.lambda(gr.mul(g, h));
                    assert!(linalg::max_abs(&(lhs - rhs)) < 1e-10);
                }
            }
            let f1 = CrossedElement::random(&s, &mut rng);
            let f2 = CrossedElement::random(&s, &mut rng);
            let prod = reg.image(&f1.convolve(&f2, &s));
            assert!(linalg::max_abs(&(prod - reg.image(&f1) * reg.image(&f2))) < 1e-10);
            let adj = reg.image(&f1.involute(&s));
            assert!(linalg::max_abs(&(adj - reg.image(&f1).adjoint())) < 1e-10);
            assert!(reg.coefficients(&reg.image(&f1)).dist(&f1) < 1e-12);
        }
    }

    #[test]
    fn module_picture_matches_matrices() {
        // λ(g) is unitary on A^Σ, and localizing intertwines λ.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = library::m2_inner_klein();
        let reg = RegularRep::new(&s);
        let xi: Vec<_> = (0..4)
            .map(|_| s.algebra().random_element(&mut rng))
            .collect();
        let eta: Vec<_> = (0..4)
            .map(|_| s.algebra().random_element(&mut rng))
            .collect();
        for g in 0..4 {
            let l = reg.module_inner(
                &s,
                &reg.module_lambda(&s, g, &xi),
                &reg.module_lambda(&s, g, &eta),
            );
            let r = reg.module_inner(&s, &xi, &eta);
            assert!(l.dist(&r) < 1e-10);
            let lx = reg.localize_module_vector(&s, &reg.module_lambda(&s, g, &xi));
            let rx = reg.lambda(g) * reg.localize_module_vector(&s, &xi);
            assert!(linalg::max_abs(&(lx - rx)) < 1e-10);
        }
    }

    #[test]
    fn image_structures() {
        let st = RegularRep::new(&library::trivial_z2()).structure();
        assert_eq!((st.dim, st.center_dim), (2, 2));
        assert_eq!(st.blocks, vec![(1, 1), (1, 1)]);
        for s in [library::flip(), library::pauli()] {
            let st = RegularRep::new(&s).structure();
            assert_eq!((st.dim, st.center_dim), (4, 1), "{}", s.name());
            assert_eq!(st.blocks, vec![(2, 2)]);
        }
        for s in library::corpus() {
            let st = RegularRep::new(&s).structure();
            assert_eq!(st.dim, s.algebra().dim() * s.order());
            assert_eq!(st.blocks.iter().map(|(n, _)| n * n).sum::<usize>(), st.dim);
        }
    }

    #[test]
    fn covariant_rep_integrates() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let s = library::m2_inner_klein();
        let reg = RegularRep::new(&s);
        let c = CovariantRep::regular(&s, &reg);
        let pi_basis = s.algebra().basis().iter().map(|e| c.pi(e)).collect();
        let u = (0..4).map(|g| c.u(g).clone()).collect();
        let c = CovariantRep::new(&s, pi_basis, u, 1e-10).unwrap();
        let f = CrossedElement::random(&s, &mut rng);
        assert!(linalg::max_abs(&(c.integrate(&f) - reg.image(&f))) < 1e-12);
        assert!(linalg::max_abs(&(c.integrate(&CrossedElement::one(&s)) - linalg::eye(8))) < 1e-12);
        let bad_u = (0..4).map(|_| linalg::eye(8)).collect();
        let pi_basis = s.algebra().basis().iter().map(|e| c.pi(e)).collect();
        assert!(CovariantRep::new(&s, pi_basis, bad_u, 1e-10).is_err());
    }
}
