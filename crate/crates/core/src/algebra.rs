//! Finite-dimensional C*-algebras `⊕ M_{n_k}`, their elements and
//! *-automorphisms.
//!
//! Elements are stored block by block. The canonical basis is the family of
//! matrix units `E^k_{ij}`, ordered by block and then row-major inside a
//! block; coordinates of an element are its entries in that order.

use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{structure, Error, Result};
use crate::linalg::{self, cx, psd_check, CMat, PsdReport, C64};

/// A direct sum of full matrix algebras, represented block-diagonally on
/// `ℂ^d` with `d = Σ n_k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "AlgebraShape", into = "AlgebraShape")]
pub struct CStarAlgebra {
    sizes: Vec<usize>,
    coord_offsets: Vec<usize>,
    rep_offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct AlgebraShape {
    blocks: Vec<usize>,
}

impl TryFrom<AlgebraShape> for CStarAlgebra {
    type Error = Error;
    fn try_from(s: AlgebraShape) -> Result<Self> {
        CStarAlgebra::new(s.blocks)
    }
}

impl From<CStarAlgebra> for AlgebraShape {
    fn from(a: CStarAlgebra) -> Self {
        AlgebraShape { blocks: a.sizes }
    }
}

impl CStarAlgebra {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() || block_sizes.contains(&0) {
            return structure("block sizes must be a nonempty list of positive integers");
        }
        let mut coord_offsets = Vec::with_capacity(block_sizes.len());
        let mut rep_offsets = Vec::with_capacity(block_sizes.len());
        let (mut c, mut r) = (0, 0);
        for &n in &block_sizes {
            coord_offsets.push(c);
            rep_offsets.push(r);
            c += n * n;
            r += n;
        }
        Ok(CStarAlgebra {
            sizes: block_sizes,
            coord_offsets,
            rep_offsets,
        })
    }

    /// `ℂ`.
    pub fn scalars() -> Self {
        Self::new(vec![1]).unwrap()
    }

    /// `M_n`.
    pub fn matrices(n: usize) -> Self {
        Self::new(vec![n]).unwrap()
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.sizes.len()
    }

    /// Dimension `d` of the faithful representation space.
    pub fn rep_dim(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Linear dimension `Σ n_k²`.
    pub fn dim(&self) -> usize {
        self.sizes.iter().map(|n| n * n).sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.sizes.iter().all(|&n| n == 1)
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.sizes.iter().map(|&n| CMat::zeros(n, n)).collect(),
        }
    }

    pub fn one(&self) -> AlgebraElement {
        self.scalar(cx(1.0, 0.0))
    }

    pub fn scalar(&self, c: C64) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .sizes
                .iter()
                .map(|&n| CMat::identity(n, n) * c)
                .collect(),
        }
    }

    /// Locate basis index `j` as `(block, row, col)`.
    pub fn basis_position(&self, j: usize) -> (usize, usize, usize) {
        let k = self.coord_offsets.partition_point(|&o| o <= j) - 1;
        let r = j - self.coord_offsets[k];
        (k, r / self.sizes[k], r % self.sizes[k])
    }

    pub fn basis_index(&self, block: usize, row: usize, col: usize) -> usize {
        self.coord_offsets[block] + row * self.sizes[block] + col
    }

    /// The matrix unit with basis index `j`.
    pub fn basis_element(&self, j: usize) -> AlgebraElement {
        let (k, r, c) = self.basis_position(j);
        let mut e = self.zero();
        e.blocks[k][(r, c)] = cx(1.0, 0.0);
        e
    }

    pub fn basis(&self) -> Vec<AlgebraElement> {
        (0..self.dim()).map(|j| self.basis_element(j)).collect()
    }

    pub fn from_coords(&self, coords: &[C64]) -> AlgebraElement {
        assert_eq!(coords.len(), self.dim(), "coordinate vector length");
        let mut e = self.zero();
        for (j, &c) in coords.iter().enumerate() {
            let (k, r, col) = self.basis_position(j);
            e.blocks[k][(r, col)] = c;
        }
        e
    }

    /// Coordinates in the matrix-unit basis.
    pub fn coords(&self, a: &AlgebraElement) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.dim());
        for (k, b) in a.blocks.iter().enumerate() {
            let n = self.sizes[k];
            for i in 0..n {
                for j in 0..n {
                    out.push(b[(i, j)]);
                }
            }
        }
        out
    }

    /// Whether `a` has the block shapes of this algebra.
    pub fn contains(&self, a: &AlgebraElement) -> bool {
        a.blocks.len() == self.sizes.len()
            && a.blocks
                .iter()
                .zip(&self.sizes)
                .all(|(b, &n)| b.nrows() == n && b.ncols() == n)
    }

    pub fn check(&self, a: &AlgebraElement) -> Result<()> {
        if self.contains(a) {
            Ok(())
        } else {
            structure(format!(
                "element shape does not match blocks {:?}",
                self.sizes
            ))
        }
    }

    /// Image of `a` under the faithful block-diagonal representation.
    pub fn to_matrix(&self, a: &AlgebraElement) -> CMat {
        linalg::block_diag(&a.blocks)
    }

    /// Read an element off the diagonal blocks of a `d × d` matrix.
    pub fn from_matrix(&self, m: &CMat) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .sizes
                .iter()
                .zip(&self.rep_offsets)
                .map(|(&n, &o)| m.view((o, o), (n, n)).into_owned())
                .collect(),
        }
    }

    /// Positivity up to `tol · max(1, ‖a‖)`.
    pub fn is_positive(&self, a: &AlgebraElement, tol: f64) -> Result<bool> {
        self.check(a)?;
        let scale = a.norm().max(1.0);
        let asym = (a - &a.adjoint()).norm();
        if asym > tol * scale {
            return Ok(false);
        }
        Ok(a.blocks
            .iter()
            .all(|b| linalg::hermitian_eigen(b).0[0] >= -tol * scale))
    }

    /// Flatten an `n × n` array over `A` to an `(n·d) × (n·d)` matrix.
    pub fn flatten(&self, m: &[Vec<AlgebraElement>]) -> Result<CMat> {
        let n = m.len();
        let d = self.rep_dim();
        let mut out = CMat::zeros(n * d, n * d);
        for (i, row) in m.iter().enumerate() {
            if row.len() != n {
                return structure("matrix over A must be square");
            }
            for (j, e) in row.iter().enumerate() {
                self.check(e)?;
                for (k, b) in e.blocks.iter().enumerate() {
                    let o = self.rep_offsets[k];
                    out.view_mut((i * d + o, j * d + o), (b.nrows(), b.ncols()))
                        .copy_from(b);
                }
            }
        }
        Ok(out)
    }

    /// Positivity of a square matrix with entries in `A`, judged on its
    /// flattening through the faithful representation.
    pub fn matrix_positive(&self, m: &[Vec<AlgebraElement>], tol: f64) -> Result<PsdReport> {
        Ok(psd_check(&self.flatten(m)?, tol))
    }

    /// Basis of the center: the block identities.
    pub fn center_basis(&self) -> Vec<AlgebraElement> {
        (0..self.num_blocks())
            .map(|k| {
                let mut e = self.zero();
                e.blocks[k] = CMat::identity(self.sizes[k], self.sizes[k]);
                e
            })
            .collect()
    }

    /// Distance of `a` from the center, measured as the largest commutator
    /// with a basis element.
    pub fn central_defect(&self, a: &AlgebraElement) -> f64 {
        // Central iff each block is a multiple of the identity.
        a.blocks
            .iter()
            .map(|b| {
                let n = b.nrows();
                let t = b.trace() / cx(n as f64, 0.0);
                linalg::max_abs(&(b - CMat::identity(n, n) * t))
            })
            .fold(0.0, f64::max)
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .sizes
                .iter()
                .map(|&n| linalg::random_matrix(rng, n, n))
                .collect(),
        }
    }

    pub fn random_unitary<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .sizes
                .iter()
                .map(|&n| linalg::random_unitary(rng, n))
                .collect(),
        }
    }

    pub fn random_central<R: Rng + ?Sized>(&self, rng: &mut R) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .sizes
                .iter()
                .map(|&n| CMat::identity(n, n) * linalg::random_complex(rng))
                .collect(),
        }
    }
}

/// An element of a [`CStarAlgebra`]; one square complex matrix per block.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    pub blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn adjoint(&self) -> Self {
        AlgebraElement {
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        AlgebraElement {
            blocks: self.blocks.iter().map(|b| b * c).collect(),
        }
    }

    /// C*-norm: the largest singular value over blocks.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    /// Largest entry modulus; used for entrywise residuals.
    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| {
            let n = b.nrows();
            linalg::max_abs(&(b.adjoint() * b - CMat::identity(n, n))) <= tol
        })
    }

    /// The scalar `c` when every block is `c · 1`.
    pub fn as_scalar(&self, tol: f64) -> Option<C64> {
        let c = self.blocks.first()?[(0, 0)];
        let ok = self.blocks.iter().all(|b| {
            let n = b.nrows();
            linalg::max_abs(&(b - CMat::identity(n, n) * c)) <= tol
        });
        ok.then_some(c)
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, o: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, o: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, o: &AlgebraElement) -> AlgebraElement {
        AlgebraElement {
            blocks: self
                .blocks
                .iter()
                .zip(&o.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|a| -a).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for AlgebraElement {
            type Output = AlgebraElement;
            fn $m(self, o: AlgebraElement) -> AlgebraElement {
                (&self).$m(&o)
            }
        }
        impl $tr<&AlgebraElement> for AlgebraElement {
            type Output = AlgebraElement;
            fn $m(self, o: &AlgebraElement) -> AlgebraElement {
                (&self).$m(o)
            }
        }
        impl $tr<AlgebraElement> for &AlgebraElement {
            type Output = AlgebraElement;
            fn $m(self, o: AlgebraElement) -> AlgebraElement {
                self.$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// A *-automorphism `a ↦ u · P(a) · u*`, where `P` moves block `k` to
/// block `perm[k]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Automorphism {
    perm: Vec<usize>,
    unitary: AlgebraElement,
}

impl Automorphism {
    pub fn identity(alg: &CStarAlgebra) -> Self {
        Automorphism {
            perm: (0..alg.num_blocks()).collect(),
            unitary: alg.one(),
        }
    }

    /// Validates that `perm` is a permutation preserving block sizes and that
    /// `unitary` is unitary.
    pub fn new(
        alg: &CStarAlgebra,
        perm: Vec<usize>,
        unitary: AlgebraElement,
        tol: f64,
    ) -> Result<Self> {
        let r = alg.num_blocks();
        if perm.len() != r {
            return structure("block permutation has wrong length");
        }
        let mut seen = vec![false; r];
        for (k, &p) in perm.iter().enumerate() {
            if p >= r || seen[p] {
                return structure("block map is not a permutation");
            }
            seen[p] = true;
            if alg.block_sizes()[k] != alg.block_sizes()[p] {
                return structure(format!(
                    "block {k} of size {} sent to block {p} of different size",
                    alg.block_sizes()[k]
                ));
            }
        }
        alg.check(&unitary)?;
        if !unitary.is_unitary(tol.max(1e-12)) {
            return structure("automorphism unitary is not unitary");
        }
        Ok(Automorphism { perm, unitary })
    }

    /// `Ad(u)`.
    pub fn inner(u: AlgebraElement) -> Self {
        Automorphism {
            perm: (0..u.blocks.len()).collect(),
            unitary: u,
        }
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn unitary(&self) -> &AlgebraElement {
        &self.unitary
    }

    fn permute(&self, a: &AlgebraElement) -> AlgebraElement {
        let mut blocks = a.blocks.clone();
        for (k, b) in a.blocks.iter().enumerate() {
            blocks[self.perm[k]] = b.clone();
        }
        AlgebraElement { blocks }
    }

    pub fn apply(&self, a: &AlgebraElement) -> AlgebraElement {
        let p = self.permute(a);
        AlgebraElement {
            blocks: p
                .blocks
                .iter()
                .zip(&self.unitary.blocks)
                .map(|(b, u)| u * b * u.adjoint())
                .collect(),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        let perm = other.perm.iter().map(|&k| self.perm[k]).collect();
        let unitary = &self.unitary * &self.permute(&other.unitary);
        Automorphism { perm, unitary }
    }

    pub fn inverse(&self) -> Automorphism {
        let mut inv = vec![0; self.perm.len()];
        for (k, &p) in self.perm.iter().enumerate() {
            inv[p] = k;
        }
        let back = Automorphism {
            perm: inv,
            unitary: AlgebraElement { blocks: vec![] },
        };
        let unitary = back.permute(&self.unitary).adjoint();
        Automorphism {
            perm: back.perm,
            unitary,
        }
    }

    /// Matrix of the automorphism on matrix-unit coordinates.
    pub fn coord_matrix(&self, alg: &CStarAlgebra) -> CMat {
        let n = alg.dim();
        let mut m = CMat::zeros(n, n);
        for j in 0..n {
            let c = alg.coords(&self.apply(&alg.basis_element(j)));
            for (i, v) in c.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Largest deviation from the identity on the matrix-unit basis.
    pub fn distance_from_identity(&self, alg: &CStarAlgebra) -> f64 {
        alg.basis()
            .iter()
            .map(|e| self.apply(e).dist(e))
            .fold(0.0, f64::max)
    }
}

/// Build a `CMat` from row-major complex entries.
pub fn mat(rows: usize, cols: usize, entries: &[C64]) -> CMat {
    CMat::from_row_slice(rows, cols, entries)
}

/// Real-valued convenience constructor, row-major.
pub fn real_mat(rows: usize, cols: usize, entries: &[f64]) -> CMat {
    CMat::from_row_slice(
        rows,
        cols,
        &entries.iter().map(|&x| cx(x, 0.0)).collect::<Vec<_>>(),
    )
}
