//! Finite Hilbert modules over `A = ⊕ M_{n_k}`.
//!
//! Every such module is isomorphic to a standard one,
//! `X ≅ ⊕_k M_{r_k × n_k}` with `⟨x, y⟩ = ⊕_k x_k* y_k` and `x · a = ⊕_k x_k a_k`,
//! so modules are stored by their ranks `r_k`. Raw input (a carrier with an
//! action tensor and an inner-product tensor) is validated and brought to this
//! form by factoring the localized Gram matrix block by block, which also
//! discards null vectors.
//!
//! The carrier of a standard module is `ℂ^N`, `N = Σ r_k n_k`, flattening each
//! block column-major. Adjointable operators are exactly the block-diagonal
//! left multiplications `⊕_k T_k`; general `ℂ`-linear maps (such as the
//! twisted-linear `v(g)` of an equivariant representation) are `N × N`
//! matrices on the carrier.

use rand::Rng;

use crate::algebra::{AlgebraElement, CStarAlgebra};
use crate::error::{structure, Error, Result};
use crate::linalg::{self, cx, CMat, CVec, C64, RANK_TOL};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertModule {
    algebra: CStarAlgebra,
    ranks: Vec<usize>,
    offsets: Vec<usize>,
}

/// A vector of a standard module: block `k` is an `r_k × n_k` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleVector {
    pub blocks: Vec<CMat>,
}

impl ModuleVector {
    pub fn add(&self, o: &Self) -> Self {
        ModuleVector {
            blocks: self
                .blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        ModuleVector {
            blocks: self
                .blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        ModuleVector {
            blocks: self.blocks.iter().map(|b| b * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }
}

impl HilbertModule {
    pub fn new(algebra: CStarAlgebra, ranks: Vec<usize>) -> Result<Self> {
        if ranks.len() != algebra.num_blocks() {
            return structure("one rank per block of the algebra is required");
        }
        let mut offsets = Vec::with_capacity(ranks.len());
        let mut o = 0;
        for (r, n) in ranks.iter().zip(algebra.block_sizes()) {
            offsets.push(o);
            o += r * n;
        }
        Ok(HilbertModule {
            algebra,
            ranks,
            offsets,
        })
    }

    /// `A^m` with the standard inner product `Σ a_i* b_i`.
    pub fn free(algebra: &CStarAlgebra, m: usize) -> Self {
        let ranks = algebra.block_sizes().iter().map(|n| n * m).collect();
        Self::new(algebra.clone(), ranks).unwrap()
    }

    pub fn algebra(&self) -> &CStarAlgebra {
        &self.algebra
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Complex dimension `N` of the carrier.
    pub fn carrier_dim(&self) -> usize {
        self.ranks
            .iter()
            .zip(self.algebra.block_sizes())
            .map(|(r, n)| r * n)
            .sum()
    }

    /// Dimension of the Hilbert space `X ⊗_π ℂ^d`.
    pub fn localized_dim(&self) -> usize {
        self.ranks.iter().sum()
    }

    pub fn zero(&self) -> ModuleVector {
        ModuleVector {
            blocks: self
                .ranks
                .iter()
                .zip(self.algebra.block_sizes())
                .map(|(&r, &n)| CMat::zeros(r, n))
                .collect(),
        }
    }

    pub fn contains(&self, x: &ModuleVector) -> bool {
        x.blocks.len() == self.ranks.len()
            && x.blocks
                .iter()
                .zip(self.ranks.iter().zip(self.algebra.block_sizes()))
                .all(|(b, (&r, &n))| b.nrows() == r && b.ncols() == n)
    }

    pub fn flatten(&self, x: &ModuleVector) -> CVec {
        let mut v = CVec::zeros(self.carrier_dim());
        for (k, b) in x.blocks.iter().enumerate() {
            v.rows_mut(self.offsets[k], b.len())
                .copy_from_slice(b.as_slice());
        }
        v
    }

    pub fn unflatten(&self, v: &CVec) -> ModuleVector {
        ModuleVector {
            blocks: self
                .ranks
                .iter()
                .zip(self.algebra.block_sizes())
                .zip(&self.offsets)
                .map(|((&r, &n), &o)| CMat::from_column_slice(r, n, &v.as_slice()[o..o + r * n]))
                .collect(),
        }
    }

    pub fn basis_vector(&self, i: usize) -> ModuleVector {
        let mut v = CVec::zeros(self.carrier_dim());
        v[i] = cx(1.0, 0.0);
        self.unflatten(&v)
    }

    pub fn basis(&self) -> Vec<ModuleVector> {
        (0..self.carrier_dim())
            .map(|i| self.basis_vector(i))
            .collect()
    }

    /// The vector whose only nonzero entry is a 1 at `(row, col)` of block `k`.
    pub fn unit_vector(&self, k: usize, row: usize, col: usize) -> ModuleVector {
        let mut x = self.zero();
        x.blocks[k][(row, col)] = cx(1.0, 0.0);
        x
    }

    /// Generators `E^k_{i1}` of the module over `A`.
    pub fn generators(&self) -> Vec<ModuleVector> {
        let mut out = Vec::with_capacity(self.localized_dim());
        for (k, &r) in self.ranks.iter().enumerate() {
            for i in 0..r {
                out.push(self.unit_vector(k, i, 0));
            }
        }
        out
    }

    /// Carrier index of entry `(row, col)` of block `k`.
    pub fn carrier_index(&self, k: usize, row: usize, col: usize) -> usize {
        self.offsets[k] + col * self.ranks[k] + row
    }

    /// `(k, row, col)` of a carrier index.
    pub fn carrier_position(&self, i: usize) -> (usize, usize, usize) {
        let k = (0..self.ranks.len())
            .rev()
            .find(|&k| self.offsets[k] <= i && self.ranks[k] > 0)
            .expect("index inside the carrier");
        let local = i - self.offsets[k];
        (k, local % self.ranks[k], local / self.ranks[k])
    }

    /// `⟨x, y⟩`, conjugate-linear in `x`.
    pub fn inner(&self, x: &ModuleVector, y: &ModuleVector) -> AlgebraElement {
        AlgebraElement {
            blocks: x
                .blocks
                .iter()
                .zip(&y.blocks)
                .map(|(a, b)| a.adjoint() * b)
                .collect(),
        }
    }

    /// `x · a`.
    pub fn right(&self, x: &ModuleVector, a: &AlgebraElement) -> ModuleVector {
        ModuleVector {
            blocks: x.blocks.iter().zip(&a.blocks).map(|(v, m)| v * m).collect(),
        }
    }

    /// `‖x‖ = ‖⟨x,x⟩‖^{1/2}`.
    pub fn norm(&self, x: &ModuleVector) -> f64 {
        self.inner(x, x).norm().sqrt()
    }

    /// Matrix of `x ↦ x · a` on the carrier.
    pub fn right_matrix(&self, a: &AlgebraElement) -> CMat {
        // vec(x a) = (aᵀ ⊗ I_r) vec(x) for column-major vec.
        let blocks: Vec<CMat> = self
            .ranks
            .iter()
            .zip(&a.blocks)
            .map(|(&r, m)| linalg::kron(&m.transpose(), &linalg::eye(r)))
            .collect();
        linalg::block_diag(&blocks)
    }

    /// The localized vector `x ⊗ η ∈ ℂ^{Σ r_k}` for `η ∈ ℂ^d`.
    pub fn localize_vector(&self, x: &ModuleVector, eta: &CVec) -> CVec {
        let mut out = CVec::zeros(self.localized_dim());
        let (mut ro, mut eo) = (0, 0);
        for (k, b) in x.blocks.iter().enumerate() {
            let n = self.algebra.block_sizes()[k];
            let img = b * eta.rows(eo, n);
            out.rows_mut(ro, self.ranks[k]).copy_from(&img);
            ro += self.ranks[k];
            eo += n;
        }
        out
    }

    /// Gram matrix of the carrier basis pushed through the faithful
    /// representation: an `(N·d) × (N·d)` PSD matrix.
    pub fn localized_gram(&self) -> CMat {
        let basis = self.basis();
        let rows: Vec<Vec<AlgebraElement>> = basis
            .iter()
            .map(|x| basis.iter().map(|y| self.inner(x, y)).collect())
            .collect();
        self.algebra
            .flatten(&rows)
            .expect("standard module Gram is square")
    }

    pub fn random_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> ModuleVector {
        ModuleVector {
            blocks: self
                .ranks
                .iter()
                .zip(self.algebra.block_sizes())
                .map(|(&r, &n)| linalg::random_matrix(rng, r, n))
                .collect(),
        }
    }

    /// Apply a `ℂ`-linear carrier map.
    pub fn apply_linear(&self, m: &CMat, x: &ModuleVector) -> ModuleVector {
        self.unflatten(&(m * self.flatten(x)))
    }

    /// Matrix of a `ℂ`-linear map given by its action on vectors.
    pub fn linear_matrix(
        &self,
        target: &HilbertModule,
        f: impl Fn(&ModuleVector) -> ModuleVector,
    ) -> CMat {
        let n = self.carrier_dim();
        let mut m = CMat::zeros(target.carrier_dim(), n);
        for i in 0..n {
            m.set_column(i, &target.flatten(&f(&self.basis_vector(i))));
        }
        m
    }

    /// Standard-form module generated by vectors with the given `A`-valued
    /// Gram matrix, together with the images of the generators.
    ///
    /// Block `k` of the Gram is localized to an `(m·n_k)`-square PSD matrix
    /// and factored as `F_k* F_k`; column `(i, p)` of `F_k` becomes column
    /// `p` of block `k` of the `i`-th generator. Eigenvalues below
    /// `RANK_TOL` relative to the largest are treated as null directions.
    pub fn kolmogorov(
        algebra: &CStarAlgebra,
        gram: &[Vec<AlgebraElement>],
        tol: f64,
    ) -> Result<(HilbertModule, Vec<ModuleVector>)> {
        let m = gram.len();
        if gram.iter().any(|r| r.len() != m) {
            return structure("Gram matrix must be square");
        }
        let sizes = algebra.block_sizes();
        let mut ranks = Vec::with_capacity(sizes.len());
        let mut factors = Vec::with_capacity(sizes.len());
        for (k, &n) in sizes.iter().enumerate() {
            let mut g = CMat::zeros(m * n, m * n);
            for i in 0..m {
                for j in 0..m {
                    algebra.check(&gram[i][j])?;
                    g.view_mut((i * n, j * n), (n, n))
                        .copy_from(&gram[i][j].blocks[k]);
                }
            }
            let rep = linalg::psd_check(&g, tol);
            if !rep.positive {
                return Err(Error::Module {
                    axiom: "positive Gram",
                    residual: -rep.margin(),
                });
            }
            let f = linalg::psd_factor(&g, RANK_TOL);
            ranks.push(f.nrows());
            factors.push(f);
        }
        let module = HilbertModule::new(algebra.clone(), ranks)?;
        let gens = (0..m)
            .map(|i| ModuleVector {
                blocks: factors
                    .iter()
                    .zip(sizes)
                    .map(|(f, &n)| f.columns(i * n, n).into_owned())
                    .collect(),
            })
            .collect();
        Ok((module, gens))
    }

    /// Validate a raw module on `ℂ^m` and bring it to standard form.
    ///
    /// `action[j]` is the matrix of `x ↦ x · e_j` and `inner[i][l]` is
    /// `⟨b_i, b_l⟩` for the standard basis `b_i` of `ℂ^m`.
    pub fn from_raw(
        algebra: &CStarAlgebra,
        m: usize,
        action: &[CMat],
        inner: &[Vec<AlgebraElement>],
        tol: f64,
    ) -> Result<RawModule> {
        let dim_a = algebra.dim();
        if action.len() != dim_a || action.iter().any(|r| r.nrows() != m || r.ncols() != m) {
            return structure("action tensor must hold one m×m matrix per basis element");
        }
        if inner.len() != m || inner.iter().any(|r| r.len() != m) {
            return structure("inner-product tensor must be m×m");
        }
        let basis = algebra.basis();
        let act = |a: &AlgebraElement| -> CMat {
            let mut out = CMat::zeros(m, m);
            for (j, c) in algebra.coords(a).into_iter().enumerate() {
                out += &action[j] * c;
            }
            out
        };
        let fail = |axiom: &'static str, residual: f64| Err(Error::Module { axiom, residual });

        let r = linalg::max_abs(&(act(&algebra.one()) - linalg::eye(m)));
        if r > tol {
            return fail("x·1 = x", r);
        }
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                // (x·a)·b = x·(ab)
                let r = linalg::max_abs(&(&action[j] * &action[i] - act(&(a * b))));
                if r > tol {
                    return fail("(x·a)·b = x·(ab)", r);
                }
            }
        }
        for i in 0..m {
            for l in 0..m {
                algebra.check(&inner[i][l])?;
                let r = inner[i][l].adjoint().dist(&inner[l][i]);
                if r > tol {
                    return fail("⟨x,y⟩* = ⟨y,x⟩", r);
                }
            }
        }
        for (j, a) in basis.iter().enumerate() {
            for i in 0..m {
                for l in 0..m {
                    // ⟨b_i, b_l · e_j⟩ = Σ_t action[j][t,l] ⟨b_i, b_t⟩ must equal ⟨b_i, b_l⟩ e_j.
                    let mut lhs = algebra.zero();
                    for t in 0..m {
                        let c = action[j][(t, l)];
                        if c != cx(0.0, 0.0) {
                            lhs = &lhs + &inner[i][t].scale(c);
                        }
                    }
                    let r = lhs.dist(&(&inner[i][l] * a));
                    if r > tol {
                        return fail("⟨x, y·a⟩ = ⟨x,y⟩a", r);
                    }
                }
            }
        }
        let (module, gens) = Self::kolmogorov(algebra, inner, tol)?;
        let mut coords = CMat::zeros(module.carrier_dim(), m);
        for (i, gvec) in gens.iter().enumerate() {
            coords.set_column(i, &module.flatten(gvec));
        }
        // The coordinate map must respect the right action.
        for (j, a) in basis.iter().enumerate() {
            let lhs = &coords * &action[j];
            let rhs = module.right_matrix(a) * &coords;
            let r = linalg::max_abs(&(lhs - rhs));
            if r > tol.max(1e-8) {
                return fail("right action compatible with inner product", r);
            }
        }
        Ok(RawModule { module, coords })
    }

    /// Action and inner-product tensors of this module on its carrier.
    pub fn raw_tensors(&self) -> (Vec<CMat>, Vec<Vec<AlgebraElement>>) {
        let action = self
            .algebra
            .basis()
            .iter()
            .map(|a| self.right_matrix(a))
            .collect();
        let basis = self.basis();
        let inner = basis
            .iter()
            .map(|x| basis.iter().map(|y| self.inner(x, y)).collect())
            .collect();
        (action, inner)
    }

    /// Solutions of `ρ(a) z = z · a` for every basis element `a`.
    pub fn central_part(&self, rho_basis: &[ModuleOperator]) -> Vec<ModuleVector> {
        let n = self.carrier_dim();
        let basis = self.algebra.basis();
        let mut eqs = CMat::zeros(n * basis.len(), n);
        for (j, a) in basis.iter().enumerate() {
            let m = rho_basis[j].full_matrix(self) - self.right_matrix(a);
            eqs.view_mut((j * n, 0), (n, n)).copy_from(&m);
        }
        let ns = linalg::null_space(&eqs, RANK_TOL);
        (0..ns.ncols())
            .map(|c| self.unflatten(&ns.column(c).into_owned()))
            .collect()
    }
}

/// A raw module brought to standard form.
#[derive(Clone, Debug)]
pub struct RawModule {
    pub module: HilbertModule,
    /// `ℂ`-linear map from the raw carrier to the standard carrier; null
    /// vectors are sent to zero.
    pub coords: CMat,
}

/// Direct sum of modules over one algebra: blocks stack row-wise.
pub fn direct_sum(modules: &[&HilbertModule]) -> Result<HilbertModule> {
    let first = modules
        .first()
        .ok_or_else(|| Error::Structure("empty direct sum".into()))?;
    if modules.iter().any(|m| m.algebra != first.algebra) {
        return structure("direct sum of modules over different algebras");
    }
    let ranks = (0..first.ranks.len())
        .map(|k| modules.iter().map(|m| m.ranks[k]).sum())
        .collect();
    HilbertModule::new(first.algebra.clone(), ranks)
}

/// Assemble `(x_1, …, x_n)` in the direct sum.
pub fn sum_vector(parts: &[&ModuleVector]) -> ModuleVector {
    let nb = parts[0].blocks.len();
    ModuleVector {
        blocks: (0..nb)
            .map(|k| {
                let cols = parts[0].blocks[k].ncols();
                let rows: usize = parts.iter().map(|p| p.blocks[k].nrows()).sum();
                let mut m = CMat::zeros(rows, cols);
                let mut o = 0;
                for p in parts {
                    let b = &p.blocks[k];
                    m.view_mut((o, 0), (b.nrows(), cols)).copy_from(b);
                    o += b.nrows();
                }
                m
            })
            .collect(),
    }
}

/// Components of a vector of a direct sum.
pub fn split_vector(x: &ModuleVector, parts: &[&HilbertModule]) -> Vec<ModuleVector> {
    let mut offs = vec![0; x.blocks.len()];
    parts
        .iter()
        .map(|m| ModuleVector {
            blocks: x
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let r = m.ranks[k];
                    let piece = b.rows(offs[k], r).into_owned();
                    offs[k] += r;
                    piece
                })
                .collect(),
        })
        .collect()
}

/// An adjointable operator between standard modules: `⊕_k T_k` acting by
/// left multiplication, `T_k` of shape `t_k × r_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModuleOperator {
    pub blocks: Vec<CMat>,
}

impl ModuleOperator {
    pub fn identity(x: &HilbertModule) -> Self {
        ModuleOperator {
            blocks: x.ranks.iter().map(|&r| linalg::eye(r)).collect(),
        }
    }

    pub fn zero(dom: &HilbertModule, cod: &HilbertModule) -> Self {
        ModuleOperator {
            blocks: dom
                .ranks
                .iter()
                .zip(&cod.ranks)
                .map(|(&r, &t)| CMat::zeros(t, r))
                .collect(),
        }
    }

    pub fn apply(&self, x: &ModuleVector) -> ModuleVector {
        ModuleVector {
            blocks: self
                .blocks
                .iter()
                .zip(&x.blocks)
                .map(|(t, v)| t * v)
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        ModuleOperator {
            blocks: self.blocks.iter().map(|t| t.adjoint()).collect(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        ModuleOperator {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        ModuleOperator {
            blocks: self
                .blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        ModuleOperator {
            blocks: self.blocks.iter().map(|a| a * c).collect(),
        }
    }

    /// Operator norm, equal to the norm of the localized operator.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    pub fn dist(&self, o: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&o.blocks)
            .map(|(a, b)| linalg::max_abs(&(a - b)))
            .fold(0.0, f64::max)
    }

    /// Matrix on carriers; `dom` supplies the column counts `n_k`.
    pub fn full_matrix(&self, dom: &HilbertModule) -> CMat {
        let blocks: Vec<CMat> = self
            .blocks
            .iter()
            .zip(dom.algebra.block_sizes())
            .map(|(t, &n)| linalg::kron(&linalg::eye(n), t))
            .collect();
        linalg::block_diag(&blocks)
    }

    /// Recover the block form of an `A`-linear carrier matrix, failing if the
    /// matrix does not commute with the right action.
    pub fn from_full_matrix(
        dom: &HilbertModule,
        cod: &HilbertModule,
        m: &CMat,
        tol: f64,
    ) -> Result<Self> {
        let mut blocks = Vec::with_capacity(dom.ranks.len());
        for k in 0..dom.ranks.len() {
            // Columns of x_k sit contiguously; the first column block of the
            // image of the first column block determines T_k.
            let (r, t) = (dom.ranks[k], cod.ranks[k]);
            blocks.push(
                m.view((cod.offsets[k], dom.offsets[k]), (t, r))
                    .into_owned(),
            );
        }
        let op = ModuleOperator { blocks };
        let r = linalg::max_abs(&(op.full_matrix(dom) - m));
        if r > tol {
            return Err(Error::Axiom {
                axiom: "A-linearity",
                residual: r,
            });
        }
        Ok(op)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.blocks.iter().all(|t| {
            t.nrows() == t.ncols()
                && linalg::max_abs(&(t.adjoint() * t - linalg::eye(t.ncols()))) <= tol
        })
    }
}

/// The balanced tensor product `X₁ ⊗_{ρ₂} X₂`.
///
/// Writing `P_k = ρ₂(E^k_{11})`, the product decomposes as
/// `⊕_k ℂ^{r_k} ⊗ P_k X₂`; `P_k X₂` is itself standard with ranks
/// `rank(P_k)_l`. The map `x ⊗ y ↦ Σ_p x_k[:, p] ⊗ U_{kl}* (ρ₂(E^k_{1p}) y)_l`
/// realizes the inner product `⟨y, ρ₂(⟨x,x'⟩) y'⟩` exactly and already
/// identifies `(x·a) ⊗ y` with `x ⊗ ρ₂(a) y`, so no null quotient is needed.
#[derive(Clone, Debug)]
pub struct InternalTensor {
    pub module: HilbertModule,
    left: HilbertModule,
    right: HilbertModule,
    /// `ρ₂(E^k_{1p})` for each block `k` and column `p`.
    rho_row: Vec<Vec<ModuleOperator>>,
    /// `iso[k][l]`: isometry onto the range of `(P_k)_l`.
    iso: Vec<Vec<CMat>>,
    /// Row offset of the `k`-th summand inside result block `l`.
    row_off: Vec<Vec<usize>>,
}

impl InternalTensor {
    /// `rho2_basis[j] = ρ₂(e_j)` for the matrix-unit basis of `A`.
    pub fn new(
        x1: &HilbertModule,
        x2: &HilbertModule,
        rho2_basis: &[ModuleOperator],
        tol: f64,
    ) -> Result<Self> {
        let alg = x1.algebra();
        if alg != x2.algebra() || rho2_basis.len() != alg.dim() {
            return structure("internal tensor needs a representation of the same algebra");
        }
        let sizes = alg.block_sizes();
        let nb = sizes.len();
        let mut rho_row = Vec::with_capacity(nb);
        let mut iso = Vec::with_capacity(nb);
        for (k, &n) in sizes.iter().enumerate() {
            rho_row.push(
                (0..n)
                    .map(|p| rho2_basis[alg.basis_index(k, 0, p)].clone())
                    .collect::<Vec<_>>(),
            );
            let pk = &rho2_basis[alg.basis_index(k, 0, 0)];
            let defect = pk.compose(pk).dist(pk).max(pk.adjoint().dist(pk));
            if defect > tol {
                return Err(Error::Axiom {
                    axiom: "ρ₂(E_11) is a projection",
                    residual: defect,
                });
            }
            iso.push(
                pk.blocks
                    .iter()
                    .map(|b| linalg::range_isometry(b, 1e-6))
                    .collect::<Vec<_>>(),
            );
        }
        let mut ranks = vec![0; nb];
        let mut row_off = vec![vec![0; nb]; nb];
        for l in 0..nb {
            for k in 0..nb {
                row_off[k][l] = ranks[l];
                ranks[l] += x1.ranks[k] * iso[k][l].ncols();
            }
        }
        Ok(InternalTensor {
            module: HilbertModule::new(alg.clone(), ranks)?,
            left: x1.clone(),
            right: x2.clone(),
            rho_row,
            iso,
            row_off,
        })
    }

    /// `x ⊗̇ y`.
    pub fn tensor(&self, x: &ModuleVector, y: &ModuleVector) -> ModuleVector {
        let mut out = self.module.zero();
        let sizes = self.module.algebra().block_sizes();
        for (k, &nk) in sizes.iter().enumerate() {
            let rk = self.left.ranks[k];
            if rk == 0 {
                continue;
            }
            for p in 0..nk {
                let xi = x.blocks[k].column(p).into_owned();
                if xi.iter().all(|z| z.norm() == 0.0) {
                    continue;
                }
                let w = self.rho_row[k][p].apply(y);
                for l in 0..sizes.len() {
                    let u = &self.iso[k][l];
                    if u.ncols() == 0 {
                        continue;
                    }
                    let piece = xi.kronecker(&(u.adjoint() * &w.blocks[l]));
                    let mut dst = out.blocks[l]
                        .view_mut((self.row_off[k][l], 0), (piece.nrows(), piece.ncols()));
                    dst += &piece;
                }
            }
        }
        out
    }

    /// Simple tensors `(x, y)` with `x ⊗̇ y` equal to each carrier basis
    /// vector of the product, in carrier order.
    ///
    /// Row `(k, i, t)` of block `l` is reached by `x = E^k_{i1}` and `y`
    /// holding column `t` of the isometry onto `range(P_k)_l`.
    pub fn basis_preimages(&self) -> Vec<(ModuleVector, ModuleVector)> {
        let sizes = self.module.algebra().block_sizes().to_vec();
        let nb = sizes.len();
        let mut out = Vec::with_capacity(self.module.carrier_dim());
        for l in 0..nb {
            // Row index within block l -> (k, i, t).
            let mut rows = Vec::with_capacity(self.module.ranks[l]);
            for k in 0..nb {
                for i in 0..self.left.ranks[k] {
                    for t in 0..self.iso[k][l].ncols() {
                        rows.push((k, i, t));
                    }
                }
            }
            for c in 0..sizes[l] {
                for &(k, i, t) in &rows {
                    let x = self.left.unit_vector(k, i, 0);
                    let mut y = self.right.zero();
                    y.blocks[l]
                        .column_mut(c)
                        .copy_from(&self.iso[k][l].column(t));
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// `T ⊗ 1` for an adjointable `T` on the left factor.
    pub fn left_operator(&self, t: &ModuleOperator) -> ModuleOperator {
        let nb = self.module.ranks.len();
        ModuleOperator {
            blocks: (0..nb)
                .map(|l| {
                    let parts: Vec<CMat> = (0..nb)
                        .map(|k| linalg::kron(&t.blocks[k], &linalg::eye(self.iso[k][l].ncols())))
                        .collect();
                    linalg::block_diag(&parts)
                })
                .collect(),
        }
    }
}
