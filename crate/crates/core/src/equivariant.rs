//! Equivariant representations `(ρ, v)` of a twisted system on standard
//! Hilbert modules, their constructions, and coefficient maps.
//!
//! `ρ` is stored on the matrix-unit basis as adjointable operators; each
//! `v(g)` is a `ℂ`-linear carrier matrix. Inverses come from the cocycle
//! identity `v(g)⁻¹ = ad_ρ(σ(g⁻¹,g)*) v(g⁻¹)` instead of numerical inversion.

use std::sync::Arc;

use rand::Rng;

use crate::algebra::AlgebraElement;
use crate::coeff::CoeffMap;
use crate::error::{structure, Error, Result};
use crate::linalg::{self, cx, CMat, RANK_TOL};
use crate::module::{self, HilbertModule, InternalTensor, ModuleOperator, ModuleVector};
use crate::par::{self, ExecMode};
use crate::system::TwistedSystem;

#[derive(Clone, Debug)]
pub struct EquivariantRep {
    system: Arc<TwistedSystem>,
    module: HilbertModule,
    rho: Vec<ModuleOperator>,
    v: Vec<CMat>,
    v_inv: Vec<CMat>,
}

/// Worst residual of each defining identity, checked on bases.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AxiomReport {
    /// `ρ` is a unital *-homomorphism.
    pub representation: f64,
    /// `ρ(α_g(a)) v(g) = v(g) ρ(a)`.
    pub covariance: f64,
    /// `v(g) v(h) = ad_ρ(σ(g,h)) v(gh)`.
    pub cocycle: f64,
    /// `⟨v(g)x, v(g)y⟩ = α_g(⟨x,y⟩)`.
    pub inner: f64,
    /// `v(g)(x·a) = v(g)x · α_g(a)`.
    pub twisted_linearity: f64,
    /// `v(g) v(g)⁻¹ = v(g)⁻¹ v(g) = 1`.
    pub inverse: f64,
}

impl AxiomReport {
    pub fn worst(&self) -> f64 {
        [
            self.representation,
            self.covariance,
            self.cocycle,
            self.inner,
            self.twisted_linearity,
            self.inverse,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn merge(&self, o: &Self) -> Self {
        AxiomReport {
            representation: self.representation.max(o.representation),
            covariance: self.covariance.max(o.covariance),
            cocycle: self.cocycle.max(o.cocycle),
            inner: self.inner.max(o.inner),
            twisted_linearity: self.twisted_linearity.max(o.twisted_linearity),
            inverse: self.inverse.max(o.inverse),
        }
    }

    fn first_failure(&self, tol: f64) -> Option<(&'static str, f64)> {
        [
            ("ρ is a *-representation", self.representation),
            ("ρ(α_g(a)) = v(g)ρ(a)v(g)⁻¹", self.covariance),
            ("v(g)v(h) = ad_ρ(σ(g,h))v(gh)", self.cocycle),
            ("α_g⟨x,y⟩ = ⟨v(g)x, v(g)y⟩", self.inner),
            ("v(g)(x·a) = v(g)x·α_g(a)", self.twisted_linearity),
            ("v(g) invertible", self.inverse),
        ]
        .into_iter()
        .find(|(_, r)| *r > tol)
    }
}

impl EquivariantRep {
    /// Validate and assemble from `ρ` on the basis and the carrier matrices
    /// of `v`.
    pub fn new(
        system: Arc<TwistedSystem>,
        module: HilbertModule,
        rho: Vec<ModuleOperator>,
        v: Vec<CMat>,
        tol: f64,
    ) -> Result<Self> {
        if module.algebra() != system.algebra() {
            return structure("module is over a different algebra");
        }
        let n = module.carrier_dim();
        if rho.len() != system.algebra().dim() || v.len() != system.order() {
            return structure("need one ρ per basis element and one v per group element");
        }
        let shapes_ok = rho.iter().all(|r| {
            r.blocks.len() == module.ranks().len()
                && r.blocks
                    .iter()
                    .zip(module.ranks())
                    .all(|(b, &k)| b.nrows() == k && b.ncols() == k)
        }) && v.iter().all(|m| m.nrows() == n && m.ncols() == n);
        if !shapes_ok {
            return structure("operator shapes do not match the module");
        }
        let rep = Self::assemble(system, module, rho, v);
        rep.validate(tol)?;
        Ok(rep)
    }

    pub(crate) fn assemble(
        system: Arc<TwistedSystem>,
        module: HilbertModule,
        rho: Vec<ModuleOperator>,
        v: Vec<CMat>,
    ) -> Self {
        let mut rep = EquivariantRep {
            system,
            module,
            rho,
            v,
            v_inv: vec![],
        };
        let gr = rep.system.group().clone();
        rep.v_inv = gr
            .elements()
            .map(|g| {
                let gi = gr.inv(g);
                linalg::mul(
                    &rep.ad_rho_matrix(&rep.system.sigma(gi, g).adjoint()),
                    &rep.v[gi],
                )
            })
            .collect();
        rep
    }

    pub fn system(&self) -> &Arc<TwistedSystem> {
        &self.system
    }

    pub fn module(&self) -> &HilbertModule {
        &self.module
    }

    pub fn rho_basis(&self) -> &[ModuleOperator] {
        &self.rho
    }

    /// `ρ(a)`.
    pub fn rho(&self, a: &AlgebraElement) -> ModuleOperator {
        let mut acc = ModuleOperator::zero(&self.module, &self.module);
        for (j, c) in self.system.algebra().coords(a).into_iter().enumerate() {
            if c != cx(0.0, 0.0) {
                acc = acc.add(&self.rho[j].scale(c));
            }
        }
        acc
    }

    pub fn v_matrix(&self, g: usize) -> &CMat {
        &self.v[g]
    }

    pub fn v_inverse(&self, g: usize) -> &CMat {
        &self.v_inv[g]
    }

    pub fn apply_v(&self, g: usize, x: &ModuleVector) -> ModuleVector {
        self.module.apply_linear(&self.v[g], x)
    }

    /// Carrier matrix of `ad_ρ(u) : x ↦ ρ(u) x u*`.
    pub fn ad_rho_matrix(&self, u: &AlgebraElement) -> CMat {
        linalg::mul(
            &self.rho(u).full_matrix(&self.module),
            &self.module.right_matrix(&u.adjoint()),
        )
    }

    pub fn axioms(&self) -> AxiomReport {
        let s = &*self.system;
        let alg = s.algebra();
        let gr = s.group();
        let m = &self.module;
        let basis = alg.basis();
        let n = m.carrier_dim();
        let mut rep = AxiomReport::default();

        let one = self.rho(&alg.one());
        rep.representation = one.dist(&ModuleOperator::identity(m));
        for (i, a) in basis.iter().enumerate() {
            rep.representation = rep
                .representation
                .max(self.rho[i].adjoint().dist(&self.rho(&a.adjoint())));
            for (j, b) in basis.iter().enumerate() {
                let r = self.rho[i].compose(&self.rho[j]).dist(&self.rho(&(a * b)));
                rep.representation = rep.representation.max(r);
            }
        }

        // Identity (iv) is checked on the whole carrier basis. Given (iv),
        // both sides of every other identity transform the same way under
        // x ↦ x·a, so checking them on the generators E^k_{i1} suffices.
        let gens = m.generators();
        let mut gen_mat = CMat::zeros(n, gens.len());
        for (i, x) in gens.iter().enumerate() {
            gen_mat.set_column(i, &m.flatten(x));
        }
        let gen_gram: Vec<Option<AlgebraElement>> = gens
            .iter()
            .flat_map(|x| gens.iter().map(move |y| (x, y)))
            .map(|(x, y)| Some(m.inner(x, y)).filter(|e| e.max_abs() > 0.0))
            .collect();
        let rho_full: Vec<CMat> = self.rho.iter().map(|r| r.full_matrix(m)).collect();
        let v_gens: Vec<CMat> = self.v.iter().map(|vg| linalg::mul(vg, &gen_mat)).collect();
        let rho_gens: Vec<CMat> = rho_full.iter().map(|r| linalg::mul(r, &gen_mat)).collect();
        let parts = par::map_indexed(ExecMode::default(), gr.order(), |g| {
            let mut rep = AxiomReport::default();
            let alpha_basis: Vec<AlgebraElement> =
                basis.iter().map(|e| s.alpha(g).apply(e)).collect();
            let vg = &self.v[g];
            let columns: Vec<ModuleVector> = (0..n)
                .map(|i| m.unflatten(&vg.column(i).into_owned()))
                .collect();
            for (i, vb) in columns.iter().enumerate() {
                let (k, r, c) = m.carrier_position(i);
                for (j, ag) in alpha_basis.iter().enumerate() {
                    let (kj, p, q) = alg.basis_position(j);
                    let rhs = m.right(vb, ag);
                    let diff = if kj == k && c == p {
                        columns[m.carrier_index(k, r, q)].sub(&rhs)
                    } else {
                        rhs
                    };
                    rep.twisted_linearity = rep.twisted_linearity.max(diff.max_abs());
                }
            }
            let vg_gens = &v_gens[g];
            let vinv_gens = linalg::mul(&self.v_inv[g], &gen_mat);
            rep.inverse = rep
                .inverse
                .max(linalg::max_abs(&(linalg::mul(vg, &vinv_gens) - &gen_mat)))
                .max(linalg::max_abs(
                    &(linalg::mul(&self.v_inv[g], vg_gens) - &gen_mat),
                ));
            for (j, ag) in alpha_basis.iter().enumerate() {
                let lhs = linalg::mul(&self.rho(ag).full_matrix(m), vg_gens);
                let rhs = linalg::mul(vg, &rho_gens[j]);
                rep.covariance = rep.covariance.max(linalg::max_abs(&(lhs - rhs)));
            }
            for h in gr.elements() {
                let lhs = linalg::mul(vg, &v_gens[h]);
                let rhs = linalg::mul(&self.ad_rho_matrix(s.sigma(g, h)), &v_gens[gr.mul(g, h)]);
                rep.cocycle = rep.cocycle.max(linalg::max_abs(&(lhs - rhs)));
            }
            // All algebra-valued inner products of the images at once, one
            // product per block.
            let images: Vec<ModuleVector> = (0..gens.len())
                .map(|i| m.unflatten(&vg_gens.column(i).into_owned()))
                .collect();
            let expected: Vec<Option<AlgebraElement>> = gen_gram
                .iter()
                .map(|e| e.as_ref().map(|a| s.alpha(g).apply(a)))
                .collect();
            for (k, &nk) in alg.block_sizes().iter().enumerate() {
                if images.is_empty() {
                    break;
                }
                let stacked = hstack(
                    &images
                        .iter()
                        .map(|y| y.blocks[k].clone())
                        .collect::<Vec<_>>(),
                );
                let gram = linalg::mul(&stacked.adjoint(), &stacked);
                for a in 0..gens.len() {
                    for b in 0..gens.len() {
                        let got = gram.view((a * nk, b * nk), (nk, nk));
                        let r = match &expected[a * gens.len() + b] {
                            Some(e) => linalg::max_abs(&(got - &e.blocks[k])),
                            None => linalg::max_abs(&got.into_owned()),
                        };
                        rep.inner = rep.inner.max(r);
                    }
                }
            }
            rep
        });
        for p in parts {
            rep = rep.merge(&p);
        }
        rep
    }

    pub fn validate(&self, tol: f64) -> Result<AxiomReport> {
        let rep = self.axioms();
        match rep.first_failure(tol) {
            Some((axiom, residual)) => Err(Error::Axiom { axiom, residual }),
            None => Ok(rep),
        }
    }

    /// `(ℓ, α)` on `A`.
    pub fn trivial(system: &Arc<TwistedSystem>) -> Self {
        let alg = system.algebra();
        let module = HilbertModule::free(alg, 1);
        let rho = alg
            .basis()
            .into_iter()
            .map(|e| ModuleOperator { blocks: e.blocks })
            .collect();
        let v = system
            .group()
            .elements()
            .map(|g| {
                module.linear_matrix(&module, |x| {
                    let a = AlgebraElement {
                        blocks: x.blocks.clone(),
                    };
                    ModuleVector {
                        blocks: system.alpha(g).apply(&a).blocks,
                    }
                })
            })
            .collect();
        Self::assemble(system.clone(), module, rho, v)
    }

    /// `(ℓ ⊗ ι, α ⊗ λ)` on `A ⊗ ℓ²(G)`.
    pub fn regular(system: &Arc<TwistedSystem>) -> Self {
        let gr = system.group();
        let n = gr.order();
        let w: Vec<CMat> = gr
            .elements()
            .map(|g| {
                let mut m = CMat::zeros(n, n);
                for h in gr.elements() {
                    m[(gr.mul(g, h), h)] = cx(1.0, 0.0);
                }
                m
            })
            .collect();
        Self::trivial(system).tensor_with_unitary_unchecked(&w)
    }

    /// `(ρ ⊗ ι, v ⊗ w)` on `X ⊗ ℂ^k` for a unitary representation `w`.
    pub fn tensor_with_unitary(&self, w: &[CMat], tol: f64) -> Result<Self> {
        let gr = self.system.group();
        if w.len() != gr.order() {
            return structure("one unitary per group element is required");
        }
        let k = w[0].nrows();
        if w.iter().any(|m| m.nrows() != k || m.ncols() != k) {
            return structure("group representation matrices must share one square size");
        }
        let mut defect: f64 = 0.0;
        for g in gr.elements() {
            defect = defect.max(linalg::max_abs(&(w[g].adjoint() * &w[g] - linalg::eye(k))));
            for h in gr.elements() {
                defect = defect.max(linalg::max_abs(&(&w[g] * &w[h] - &w[gr.mul(g, h)])));
            }
        }
        if defect > tol {
            return Err(Error::Axiom {
                axiom: "w is a unitary representation of G",
                residual: defect,
            });
        }
        Ok(self.tensor_with_unitary_unchecked(w))
    }

    fn tensor_with_unitary_unchecked(&self, w: &[CMat]) -> Self {
        let k = w[0].nrows();
        let x = &self.module;
        let ranks: Vec<usize> = x.ranks().iter().map(|r| r * k).collect();
        let module = HilbertModule::new(x.algebra().clone(), ranks).unwrap();
        let parts = vec![x; k];
        let rho = self
            .rho
            .iter()
            .map(|r| ModuleOperator {
                blocks: r
                    .blocks
                    .iter()
                    .map(|b| linalg::kron(&linalg::eye(k), b))
                    .collect(),
            })
            .collect();
        let v = (0..w.len())
            .map(|g| {
                module.linear_matrix(&module, |y| {
                    let chunks = module::split_vector(y, &parts);
                    let moved: Vec<ModuleVector> =
                        chunks.iter().map(|c| self.apply_v(g, c)).collect();
                    let out: Vec<ModuleVector> = (0..k)
                        .map(|j| {
                            let mut acc = x.zero();
                            for (i, mv) in moved.iter().enumerate() {
                                if w[g][(j, i)] != cx(0.0, 0.0) {
                                    acc = acc.add(&mv.scale(w[g][(j, i)]));
                                }
                            }
                            acc
                        })
                        .collect();
                    module::sum_vector(&out.iter().collect::<Vec<_>>())
                })
            })
            .collect();
        Self::assemble(self.system.clone(), module, rho, v)
    }

    /// `(⊕ρ_i, ⊕v_i)` on `⊕X_i`.
    pub fn direct_sum(reps: &[&Self]) -> Result<Self> {
        let first = reps
            .first()
            .ok_or_else(|| Error::Structure("empty direct sum".into()))?;
        if reps
            .iter()
            .any(|r| !Arc::ptr_eq(&r.system, &first.system) && *r.system != *first.system)
        {
            return structure("direct sum of representations of different systems");
        }
        let mods: Vec<&HilbertModule> = reps.iter().map(|r| &r.module).collect();
        let module = module::direct_sum(&mods)?;
        let nb = module.ranks().len();
        let rho = (0..first.rho.len())
            .map(|j| ModuleOperator {
                blocks: (0..nb)
                    .map(|l| {
                        linalg::block_diag(
                            &reps
                                .iter()
                                .map(|r| r.rho[j].blocks[l].clone())
                                .collect::<Vec<_>>(),
                        )
                    })
                    .collect(),
            })
            .collect();
        let v = (0..first.v.len())
            .map(|g| {
                module.linear_matrix(&module, |y| {
                    let parts = module::split_vector(y, &mods);
                    let moved: Vec<ModuleVector> = parts
                        .iter()
                        .zip(reps)
                        .map(|(p, r)| r.apply_v(g, p))
                        .collect();
                    module::sum_vector(&moved.iter().collect::<Vec<_>>())
                })
            })
            .collect();
        Ok(Self::assemble(first.system.clone(), module, rho, v))
    }

    /// `(ρ₁ ⊗ 1, v₁ ⊗ v₂)` on `X₁ ⊗_{ρ₂} X₂`, with the map realizing simple
    /// tensors.
    pub fn tensor(&self, other: &Self, tol: f64) -> Result<(Self, InternalTensor)> {
        if !Arc::ptr_eq(&self.system, &other.system) && *self.system != *other.system {
            return structure("tensor product of representations of different systems");
        }
        let t = InternalTensor::new(&self.module, &other.module, &other.rho, tol)?;
        let rho = self.rho.iter().map(|r| t.left_operator(r)).collect();
        let pre = t.basis_preimages();
        let nt = t.module.carrier_dim();
        let v = self
            .system
            .group()
            .elements()
            .map(|g| {
                let mut vg = CMat::zeros(nt, nt);
                for (b, (x, y)) in pre.iter().enumerate() {
                    vg.set_column(
                        b,
                        &t.module
                            .flatten(&t.tensor(&self.apply_v(g, x), &other.apply_v(g, y))),
                    );
                }
                vg
            })
            .collect();
        let module = t.module.clone();
        Ok((Self::assemble(self.system.clone(), module, rho, v), t))
    }

    /// Transport along an adjointable unitary `u` of the module.
    pub fn conjugated(&self, u: &ModuleOperator) -> Self {
        let uf = u.full_matrix(&self.module);
        let ua = uf.adjoint();
        let rho = self
            .rho
            .iter()
            .map(|r| u.compose(r).compose(&u.adjoint()))
            .collect();
        let v = self
            .v
            .iter()
            .map(|m| linalg::mul(&linalg::mul(&uf, m), &ua))
            .collect();
        Self::assemble(self.system.clone(), self.module.clone(), rho, v)
    }

    /// A random unitary conjugate of a direct sum of trivial and regular
    /// representations.
    pub fn random<R: Rng + ?Sized>(system: &Arc<TwistedSystem>, rng: &mut R) -> Self {
        let mut parts = vec![Self::trivial(system)];
        if rng.random_bool(0.5) {
            parts.push(Self::trivial(system));
        }
        if rng.random_bool(0.5) {
            parts.push(Self::regular(system));
        }
        let sum = Self::direct_sum(&parts.iter().collect::<Vec<_>>()).unwrap();
        let u = random_module_unitary(&sum.module, rng);
        sum.conjugated(&u)
    }

    /// `T_{ρ,v,x,y}(g, a) = ⟨x, ρ(a) v(g) y⟩`.
    pub fn coefficient(&self, x: &ModuleVector, y: &ModuleVector) -> CoeffMap {
        let alg = self.system.algebra();
        let dim = alg.dim();
        let maps = self
            .system
            .group()
            .elements()
            .map(|g| {
                let vy = self.apply_v(g, y);
                let mut m = CMat::zeros(dim, dim);
                for (j, r) in self.rho.iter().enumerate() {
                    let c = alg.coords(&self.module.inner(x, &r.apply(&vy)));
                    for (i, z) in c.into_iter().enumerate() {
                        m[(i, j)] = z;
                    }
                }
                m
            })
            .collect();
        CoeffMap::new(self.system.clone(), maps).expect("shapes follow the system")
    }

    /// Basis of `Z_X = {z : ρ(a) z = z · a}`.
    pub fn central_part(&self) -> Vec<ModuleVector> {
        self.module.central_part(&self.rho)
    }

    /// `max_j ‖ρ(e_j) z − z · e_j‖`.
    pub fn central_defect(&self, z: &ModuleVector) -> f64 {
        self.system
            .algebra()
            .basis()
            .iter()
            .zip(&self.rho)
            .map(|(a, r)| r.apply(z).sub(&self.module.right(z, a)).max_abs())
            .fold(0.0, f64::max)
    }

    /// The vectors `ρ(e_j) v(g) x`, indexed `g · dim A + j`.
    pub fn generators(&self, x: &ModuleVector) -> Vec<ModuleVector> {
        let mut out = Vec::new();
        for g in self.system.group().elements() {
            let vx = self.apply_v(g, x);
            out.extend(self.rho.iter().map(|r| r.apply(&vx)));
        }
        out
    }

    /// Whether the generators of `x` span the module over `A`.
    pub fn generated_ranks(&self, x: &ModuleVector) -> Vec<usize> {
        let gens = self.generators(x);
        (0..self.module.ranks().len())
            .map(|k| {
                let cols: Vec<CMat> = gens.iter().map(|w| w.blocks[k].clone()).collect();
                if cols.is_empty() || self.module.ranks()[k] == 0 {
                    0
                } else {
                    linalg::rank(&hstack(&cols), RANK_TOL)
                }
            })
            .collect()
    }

    pub fn is_cyclic(&self, x: &ModuleVector) -> bool {
        self.generated_ranks(x) == self.module.ranks()
    }

    /// The subrepresentation generated by `x`, in standard form, with the
    /// image of `x`.
    pub fn cyclic_subrep(&self, x: &ModuleVector, tol: f64) -> Result<(Self, ModuleVector)> {
        let gens = self.generators(x);
        let gram: Vec<Vec<AlgebraElement>> = gens
            .iter()
            .map(|a| gens.iter().map(|b| self.module.inner(a, b)).collect())
            .collect();
        let (rep, xv, _) = from_generator_gram(&self.system, &gram, tol)?;
        Ok((rep, xv))
    }
}

/// Horizontal concatenation.
pub(crate) fn hstack(cols: &[CMat]) -> CMat {
    let r = cols[0].nrows();
    let c: usize = cols.iter().map(|m| m.ncols()).sum();
    let mut out = CMat::zeros(r, c);
    let mut o = 0;
    for m in cols {
        out.view_mut((0, o), (r, m.ncols())).copy_from(m);
        o += m.ncols();
    }
    out
}

pub fn random_module_unitary<R: Rng + ?Sized>(m: &HilbertModule, rng: &mut R) -> ModuleOperator {
    ModuleOperator {
        blocks: m
            .ranks()
            .iter()
            .map(|&r| linalg::random_unitary(rng, r))
            .collect(),
    }
}

/// The cyclic representation generated by vectors `W_{(g,j)}` whose Gram
/// matrix is `gram`, indexed `g · dim A + j`, under the rules
/// `ρ(a) W_{(g,j)} = Σ coords(a e_j) W_{(g,·)}` and
/// `v(h) (W_{(g,j)} · c) = Σ coords(α_h(e_j) σ(h,g)) W_{(hg,·)} · σ(h,g)* α_h(c)`.
///
/// Returns the representation, the cyclic vector `Σ coords(1)_j W_{(e,j)}`
/// and the generator images.
pub fn from_generator_gram(
    system: &Arc<TwistedSystem>,
    gram: &[Vec<AlgebraElement>],
    tol: f64,
) -> Result<(EquivariantRep, ModuleVector, Vec<ModuleVector>)> {
    let s = &**system;
    let (alg, gr) = (s.algebra(), s.group());
    let dim = alg.dim();
    if gram.len() != gr.order() * dim {
        return structure("generator Gram must have side |G|·dim A");
    }
    let (module, gens) = HilbertModule::kolmogorov(alg, gram, tol)?;
    let basis = alg.basis();
    let gen = |g: usize, j: usize| &gens[g * dim + j];
    let combo = |g: usize, a: &AlgebraElement| -> ModuleVector {
        let mut acc = module.zero();
        for (j, c) in alg.coords(a).into_iter().enumerate() {
            if c != cx(0.0, 0.0) {
                acc = acc.add(&gen(g, j).scale(c));
            }
        }
        acc
    };
    let desc_tol = |y: &CMat| tol.max(1e-8) * linalg::max_abs(y).max(1.0);

    // ρ is A-linear, so it descends block by block.
    let nb = module.ranks().len();
    let wk: Vec<CMat> = (0..nb)
        .map(|k| hstack(&gens.iter().map(|w| w.blocks[k].clone()).collect::<Vec<_>>()))
        .collect();
    let wk_pinv: Vec<CMat> = wk.iter().map(|w| linalg::pinv(w, RANK_TOL)).collect();
    let mut rho = Vec::with_capacity(dim);
    for em in &basis {
        let images: Vec<ModuleVector> = (0..gens.len())
            .map(|i| {
                let (g, j) = (i / dim, i % dim);
                combo(g, &(em * &basis[j]))
            })
            .collect();
        let mut blocks = Vec::with_capacity(nb);
        for k in 0..nb {
            let yk = hstack(
                &images
                    .iter()
                    .map(|w| w.blocks[k].clone())
                    .collect::<Vec<_>>(),
            );
            let rk = linalg::mul(&yk, &wk_pinv[k]);
            let residual = linalg::max_abs(&(linalg::mul(&rk, &wk[k]) - &yk));
            if residual > desc_tol(&yk) {
                return Err(Error::NoSolution {
                    what: "ρ on the generated module",
                    residual,
                });
            }
            blocks.push(rk);
        }
        rho.push(ModuleOperator { blocks });
    }

    // v is only ℂ-linear: descend over the spanning set W_{(g,j)} · e_m.
    let n = module.carrier_dim();
    let mut span = CMat::zeros(n, gens.len() * dim);
    for (i, w) in gens.iter().enumerate() {
        for (m, em) in basis.iter().enumerate() {
            span.set_column(i * dim + m, &module.flatten(&module.right(w, em)));
        }
    }
    let span_pinv = linalg::pinv(&span, RANK_TOL);
    let mut v = Vec::with_capacity(gr.order());
    for h in gr.elements() {
        let mut img = CMat::zeros(n, gens.len() * dim);
        for i in 0..gens.len() {
            let (g, j) = (i / dim, i % dim);
            let sig = s.sigma(h, g);
            let moved = module.right(
                &combo(gr.mul(h, g), &(s.alpha(h).apply(&basis[j]) * sig)),
                &sig.adjoint(),
            );
            for (m, em) in basis.iter().enumerate() {
                img.set_column(
                    i * dim + m,
                    &module.flatten(&module.right(&moved, &s.alpha(h).apply(em))),
                );
            }
        }
        let vh = linalg::mul(&img, &span_pinv);
        let residual = linalg::max_abs(&(linalg::mul(&vh, &span) - &img));
        if residual > desc_tol(&img) {
            return Err(Error::NoSolution {
                what: "v on the generated module",
                residual,
            });
        }
        v.push(vh);
    }
    let x = combo(gr.identity(), &alg.one());
    Ok((
        EquivariantRep::assemble(system.clone(), module, rho, v),
        x,
        gens,
    ))
}
