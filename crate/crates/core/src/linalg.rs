//! Dense complex linear algebra helpers built on nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative eigenvalue threshold used for rank and null-space decisions.
pub const RANK_TOL: f64 = 1e-9;

#[inline]
pub fn cx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Largest singular value; zero for empty matrices.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Largest absolute entry; a cheap residual measure.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let h = hermitian_part(m);
    let mut eig = h.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        // nalgebra's QR sweep can break down on very sparse input; a
        // diagonal shift avoids it and leaves the eigenvectors unchanged.
        let shift = h.norm() * std::f64::consts::FRAC_1_PI + 1.0;
        eig = (&h + eye(n).scale(shift)).symmetric_eigen();
        eig.eigenvalues.add_scalar_mut(-shift);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Ascending eigenvalues of the Hermitian part, without eigenvectors.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return vec![];
    }
    let h = hermitian_part(m);
    let mut vals = h.symmetric_eigenvalues();
    if vals.iter().any(|v| !v.is_finite()) {
        let shift = h.norm() * std::f64::consts::FRAC_1_PI + 1.0;
        vals = (&h + eye(n).scale(shift)).symmetric_eigenvalues();
        vals.add_scalar_mut(-shift);
    }
    let mut out: Vec<f64> = vals.iter().cloned().collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Outcome of a positive-semidefiniteness test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsdReport {
    pub positive: bool,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
    /// Frobenius norm of `m - m*`, an upper bound for its operator norm.
    pub asymmetry: f64,
    /// `max(1, ‖H‖ + asymmetry / 2)` with `H` the Hermitian part, an upper
    /// bound for `max(1, ‖m‖)`; tolerances are multiplied by this.
    pub scale: f64,
}

impl PsdReport {
    /// Signed distance from failure: the smallest eigenvalue, pushed negative
    /// by any asymmetry.
    pub fn margin(&self) -> f64 {
        self.min_eigenvalue.min(-self.asymmetry)
    }

    /// [`margin`](Self::margin) divided by the operand scale.
    pub fn relative_margin(&self) -> f64 {
        self.margin() / self.scale
    }
}

/// `m` is positive iff it is Hermitian and its spectrum is nonnegative, both
/// up to `tol * scale`. One Hermitian eigensolve.
pub fn psd_check(m: &CMat, tol: f64) -> PsdReport {
    if m.is_empty() {
        return PsdReport {
            positive: true,
            min_eigenvalue: 0.0,
            asymmetry: 0.0,
            scale: 1.0,
        };
    }
    let asymmetry = (m - m.adjoint()).norm();
    let vals = hermitian_eigenvalues(m);
    let min_eigenvalue = vals[0];
    let top = vals[0].abs().max(vals[vals.len() - 1].abs());
    let scale = (top + asymmetry / 2.0).max(1.0);
    let positive = asymmetry <= tol * scale && min_eigenvalue >= -tol * scale;
    PsdReport {
        positive,
        min_eigenvalue,
        asymmetry,
        scale,
    }
}

/// Factor a PSD matrix as `F* F` with `F` of full row rank; eigenvalues at or
/// below `rel_tol * λ_max` are discarded.
pub fn psd_factor(g: &CMat, rel_tol: f64) -> CMat {
    let n = g.nrows();
    let (vals, vecs) = hermitian_eigen(g);
    let top = vals.last().cloned().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&i| vals[i] > rel_tol * top && vals[i] > 0.0)
        .collect();
    let mut f = zeros(keep.len(), n);
    for (r, &i) in keep.iter().enumerate() {
        let s = vals[i].sqrt();
        for c in 0..n {
            f[(r, c)] = vecs[(c, i)].conj() * s;
        }
    }
    f
}

/// Orthonormal basis (as columns) of the range of a Hermitian PSD matrix.
pub fn range_isometry(p: &CMat, rel_tol: f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(p);
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i] > rel_tol * top.max(1e-300))
        .collect();
    let mut u = zeros(p.nrows(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        u.set_column(c, &vecs.column(i));
    }
    u
}

fn padded_svd(m: &CMat) -> nalgebra::SVD<C64, nalgebra::Dyn, nalgebra::Dyn> {
    if m.nrows() < m.ncols() {
        let mut p = zeros(m.ncols(), m.ncols());
        p.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        p.svd(false, true)
    } else {
        m.clone().svd(false, true)
    }
}

/// Numerical rank with a relative singular-value threshold.
pub fn rank(m: &CMat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Orthonormal basis (as columns) of the kernel of `m`.
pub fn null_space(m: &CMat, rel_tol: f64) -> CMat {
    let n = m.ncols();
    if m.nrows() == 0 {
        return eye(n);
    }
    let svd = padded_svd(m);
    let vt = svd.v_t.expect("requested V");
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= rel_tol * top || top == 0.0)
        .collect();
    let mut out = zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        for r in 0..n {
            out[(r, c)] = vt[(i, r)].conj();
        }
    }
    out
}

/// Moore-Penrose pseudo-inverse with a relative singular-value cut.
pub fn pinv(m: &CMat, rel_tol: f64) -> CMat {
    if m.is_empty() {
        return zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut x = svd
        .pseudo_inverse(rel_tol * top.max(1e-300))
        .expect("thin SVD with U and V");
    // The SVD loses accuracy on clustered singular values; Newton-Schulz
    // steps X ← 2X − XMX restore it and leave discarded directions at zero.
    for _ in 0..2 {
        x = x.scale(2.0) - &x * m * &x;
    }
    x
}

/// Solve `X · S = Y` in the least-squares sense and report `‖X S − Y‖_max`.
pub fn solve_right(s: &CMat, y: &CMat, rel_tol: f64) -> (CMat, f64) {
    let x = y * pinv(s, rel_tol);
    let res = max_abs(&(&x * s - y));
    (x, res)
}

/// Complex matrix product through four real products, which take the
/// optimized real kernel. Small products use the direct path.
pub fn mul(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.ncols(), b.nrows(), "dimension mismatch in product");
    if a.nrows() * a.ncols() * b.ncols() < 4096 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMat::from_fn(a.nrows(), b.ncols(), |i, j| cx(re[(i, j)], im[(i, j)]))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-major flattening.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    cx(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of independent standard complex Gaussians.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> CMat {
    CMat::from_fn(r, c, |_, _| random_complex(rng))
}

/// Haar-distributed unitary via QR with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    if n == 0 {
        return zeros(0, 0);
    }
    let qr = random_matrix(rng, n, n).qr();
    let (q, r) = qr.unpack();
    let mut u = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[CMat]) -> CMat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}
