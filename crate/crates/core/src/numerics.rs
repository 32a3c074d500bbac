//! Dense complex linear algebra, Hermitian eigendecompositions, Gauss–Hermite
//! quadrature, a matrix exponential, and small fitting helpers.
//!
//! The O(N^3) kernels (eigensolve, SVD, LU, matmul) are delegated to `faer`;
//! everything the physics modules rely on (orthonormality, ascending order,
//! deterministic eigenvector phases, quadrature normalization) is checked or
//! enforced here rather than assumed from the backend. Grids stay near
//! N = 2000 at most, so dense algebra is the whole story.

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default Gauss–Hermite node count; the e^{-u^2} weight decay makes 64 nodes
/// enough for every oscillatory integrand used here (|theta*width| <= 5).
pub const DEFAULT_QUADRATURE_NODES: usize = 64;

// ═══════════════════════════════════════════════════════════════════════════
// Complex matrices
// ═══════════════════════════════════════════════════════════════════════════

/// Dense complex matrix. Thin wrapper over `faer::Mat<c64>` so the rest of the
/// crate speaks `num_complex::Complex64` and never touches backend types.
#[derive(Clone, Debug)]
pub struct ComplexMatrix {
    data: Mat<c64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: Mat::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: Mat::from_fn(n, n, |i, j| {
                if i == j {
                    c64::new(1.0, 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            data: Mat::from_fn(rows, cols, &mut f),
        }
    }

    pub(crate) fn from_faer(data: Mat<c64>) -> Self {
        Self { data }
    }

    pub(crate) fn as_faer(&self) -> &Mat<c64> {
        &self.data
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.nrows() == self.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[(i, j)] = v;
    }

    pub fn is_finite(&self) -> bool {
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                let v = self.data[(i, j)];
                if !v.re.is_finite() || !v.im.is_finite() {
                    return false;
                }
            }
        }
        true
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.ncols(), rhs.nrows(), "matmul dimension mismatch");
        Self {
            data: &self.data * &rhs.data,
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.nrows(), self.ncols()), (rhs.nrows(), rhs.ncols()));
        Self {
            data: &self.data + &rhs.data,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.nrows(), self.ncols()), (rhs.nrows(), rhs.ncols()));
        Self {
            data: &self.data - &rhs.data,
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_fn(self.nrows(), self.ncols(), |i, j| self.get(i, j) * s)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.ncols(), self.nrows(), |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols(), self.nrows(), |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.nrows()).map(|i| self.get(i, i)).sum()
    }

    /// Max entry modulus (the ‖·‖_max norm used by entrywise tolerances).
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                m = m.max(self.data[(i, j)].norm());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..self.nrows() {
                s += self.data[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Max column sum of moduli (induced 1-norm); cheap scaling control for expm.
    pub fn one_norm(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.ncols() {
            let mut col = 0.0f64;
            for i in 0..self.nrows() {
                col += self.data[(i, j)].norm();
            }
            m = m.max(col);
        }
        m
    }

    /// Max |a_ij - conj(a_ji)|; zero for exactly Hermitian storage.
    pub fn hermiticity_defect(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut m = 0.0f64;
        for j in 0..self.ncols() {
            for i in 0..=j {
                let d = self.data[(i, j)] - self.data[(j, i)].conj();
                m = m.max(d.norm());
            }
        }
        m
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                got: v.len(),
            });
        }
        let rhs = Mat::from_fn(v.len(), 1, |i, _| v[i]);
        let out = &self.data * &rhs;
        Ok((0..self.nrows()).map(|i| out[(i, 0)]).collect())
    }

    /// n-th power by repeated squaring; `pow(0)` is the identity.
    pub fn pow(&self, n: u64) -> Self {
        assert!(self.is_square());
        let mut result = Self::identity(self.nrows());
        let mut base = self.clone();
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::NonFinite {
            context: "spectral_norm input",
        });
    }
    let sv = m
        .as_faer()
        .singular_values()
        .map_err(|e| Error::Eigen(format!("svd failed: {e:?}")))?;
    Ok(sv.first().copied().unwrap_or(0.0))
}

// ═══════════════════════════════════════════════════════════════════════════
// Hermitian eigendecomposition
// ═══════════════════════════════════════════════════════════════════════════

/// Eigensystem of a Hermitian matrix: ascending real eigenvalues, orthonormal
/// eigenvector columns with a deterministic phase (first component of modulus
/// > 1e-8 made real positive).
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    /// V diag(f(E)) V†: the matrix of f(H) in the original basis.
    pub fn apply_function(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.dim();
        let v = &self.eigenvectors;
        let scaled = ComplexMatrix::from_fn(n, n, |i, j| v.get(i, j) * f(self.eigenvalues[j]));
        ComplexMatrix::from_faer(scaled.as_faer() * v.as_faer().adjoint())
    }

    /// f(H) psi without forming the full matrix (two O(N^2) passes).
    pub fn apply_function_to_vec(
        &self,
        f: impl Fn(f64) -> Complex64,
        psi: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        let mut c = self.to_eigenbasis(psi)?;
        for (ck, &e) in c.iter_mut().zip(&self.eigenvalues) {
            *ck *= f(e);
        }
        self.from_eigenbasis(&c)
    }

    /// Coefficients c_n = <E_n|psi>.
    pub fn to_eigenbasis(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        let rhs = Mat::from_fn(psi.len(), 1, |i, _| psi[i]);
        let out = self.eigenvectors.as_faer().adjoint() * &rhs;
        Ok((0..self.dim()).map(|i| out[(i, 0)]).collect())
    }

    pub fn from_eigenbasis(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        let rhs = Mat::from_fn(coeffs.len(), 1, |i, _| coeffs[i]);
        let out = self.eigenvectors.as_faer() * &rhs;
        Ok((0..self.dim()).map(|i| out[(i, 0)]).collect())
    }

    /// Max |(V†V - I)_ij|.
    pub fn orthonormality_defect(&self) -> f64 {
        let v = self.eigenvectors.as_faer();
        let g = v.adjoint() * v;
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                m = m.max((g[(i, j)] - c64::new(expect, 0.0)).norm());
            }
        }
        m
    }

    /// Max |(V diag(E) V† - H)_ij| against the matrix this was computed from.
    pub fn reconstruction_defect(&self, h: &ComplexMatrix) -> f64 {
        let rec = self.apply_function(|e| Complex64::new(e, 0.0));
        rec.sub(h).max_abs()
    }
}

/// Relative Hermiticity tolerance, scaled by ‖h‖_max (floor 1 for near-zero input).
fn hermiticity_tol(h: &ComplexMatrix) -> f64 {
    1e-10 * h.max_abs().max(1.0)
}

/// Decompose a Hermitian matrix. Rejects non-Hermitian input (reporting the
/// measured asymmetry), sorts eigenvalues ascending, fixes eigenvector phases,
/// and verifies orthonormality (<= 1e-10) and reconstruction (<= 1e-8 ‖H‖)
/// before returning.
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<SpectralDecomposition> {
    if !h.is_square() {
        return Err(Error::InvalidParam(format!(
            "eig_hermitian needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite {
            context: "eig_hermitian input",
        });
    }
    let defect = h.hermiticity_defect();
    let tol = hermiticity_tol(h);
    if defect > tol {
        return Err(Error::NonHermitian { defect, tol });
    }

    let n = h.nrows();
    // Real symmetric input takes the f64 path: ~4x cheaper and the physics
    // Hamiltonians are all real.
    let all_real = (0..n).all(|j| (0..n).all(|i| h.get(i, j).im == 0.0));

    let (mut eigenvalues, mut vectors): (Vec<f64>, ComplexMatrix) = if all_real {
        let hr = Mat::<f64>::from_fn(n, n, |i, j| h.get(i, j).re);
        let eig = hr
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("real symmetric eigensolve failed: {e:?}")))?;
        let u = eig.U();
        let s = eig.S();
        let vals: Vec<f64> = (0..n).map(|i| s[i]).collect();
        let vecs = ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(u[(i, j)], 0.0));
        (vals, vecs)
    } else {
        let eig = h
            .as_faer()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("hermitian eigensolve failed: {e:?}")))?;
        let u = eig.U();
        let s = eig.S();
        let vals: Vec<f64> = (0..n).map(|i| s[i].re).collect();
        let vecs = ComplexMatrix::from_fn(n, n, |i, j| u[(i, j)]);
        (vals, vecs)
    };

    // Ascending order (the backend already returns nondecreasing; enforce it).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]));
    if order.windows(2).any(|w| w[0] > w[1]) {
        let vals: Vec<f64> = order.iter().map(|&k| eigenvalues[k]).collect();
        let vecs = ComplexMatrix::from_fn(n, n, |i, j| vectors.get(i, order[j]));
        eigenvalues = vals;
        vectors = vecs;
    }

    // Deterministic phases: first component of modulus > 1e-8 made real positive.
    for j in 0..n {
        let mut phase = None;
        for i in 0..n {
            let v = vectors.get(i, j);
            if v.norm() > 1e-8 {
                phase = Some(v.conj() / v.norm());
                break;
            }
        }
        if let Some(p) = phase {
            for i in 0..n {
                let v = vectors.get(i, j);
                vectors.set(i, j, v * p);
            }
        }
    }

    let decomp = SpectralDecomposition {
        eigenvalues,
        eigenvectors: vectors,
    };
    let ortho = decomp.orthonormality_defect();
    if ortho > 1e-10 {
        return Err(Error::Eigen(format!(
            "orthonormality defect {ortho:.3e} exceeds 1e-10"
        )));
    }
    let recon = decomp.reconstruction_defect(h);
    let recon_tol = 1e-8 * h.max_abs().max(1.0);
    if recon > recon_tol {
        return Err(Error::Eigen(format!(
            "reconstruction defect {recon:.3e} exceeds {recon_tol:.3e}"
        )));
    }
    Ok(decomp)
}

// ═══════════════════════════════════════════════════════════════════════════
// Gauss–Hermite quadrature
// ═══════════════════════════════════════════════════════════════════════════

/// Gauss–Hermite rule set up for normal averages: with nodes x_k and weights
/// w_k (normalized to sum exactly 1),
///   ∫ f(u) exp(-(u-c)^2 / 2w^2) / (sqrt(2 pi) w) du  ≈  Σ_k w_k f(c + sqrt(2) w x_k).
#[derive(Clone, Debug)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch on the Jacobi tridiagonal (diag 0, offdiag sqrt(k/2)).
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParam(format!(
                "Gauss-Hermite rule needs >= 2 nodes, got {n}"
            )));
        }
        let j = Mat::<f64>::from_fn(n, n, |r, c| {
            if r + 1 == c {
                ((c as f64) / 2.0).sqrt()
            } else if c + 1 == r {
                ((r as f64) / 2.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = j
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("quadrature tridiagonal eigensolve: {e:?}")))?;
        let u = eig.U();
        let s = eig.S();
        let mut pairs: Vec<(f64, f64)> = (0..n).map(|k| (s[k], u[(0, k)] * u[(0, k)])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // First-row-squared weights sum to 1 for an orthogonal eigenbasis;
        // renormalize away the last few ulps so Σw = 1 holds exactly.
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let nodes = pairs.iter().map(|p| p.0).collect();
        let weights = pairs.iter().map(|p| p.1 / total).collect();
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normal average of a complex integrand (see type-level doc).
    pub fn integrate_normal(
        &self,
        center: f64,
        width: f64,
        mut f: impl FnMut(f64) -> Complex64,
    ) -> Result<Complex64> {
        if !(width > 0.0) || !width.is_finite() || !center.is_finite() {
            return Err(Error::InvalidParam(format!(
                "normal average needs finite center and width > 0, got ({center}, {width})"
            )));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let v = f(center + std::f64::consts::SQRT_2 * width * x);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite {
                    context: "quadrature integrand",
                });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// One-shot normal average ∫ f(u) N(center, width^2) du with an n-node rule.
pub fn gauss_quadrature_complex(
    f: impl FnMut(f64) -> Complex64,
    center: f64,
    width: f64,
    nodes: usize,
) -> Result<Complex64> {
    GaussHermite::new(nodes)?.integrate_normal(center, width, f)
}

// ═══════════════════════════════════════════════════════════════════════════
// Adaptive Simpson quadrature (real integrands)
// ═══════════════════════════════════════════════════════════════════════════

/// Adaptive Simpson with Richardson acceptance |S_halves - S_whole| <= 15 eps.
/// The tolerance is relative to the first whole-interval estimate, with
/// `abs_floor` as a lower bound so near-zero integrals still terminate.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let eps = (rel_tol * whole.abs()).max(abs_floor);
    simpson_rec(f, a, fa, m, fm, b, fb, whole, eps, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, fa, lm, flm, m, fm, left, 0.5 * eps, depth - 1)
        + simpson_rec(f, m, fm, rm, frm, b, fb, right, 0.5 * eps, depth - 1)
}

// ═══════════════════════════════════════════════════════════════════════════
// Matrix exponential
// ═══════════════════════════════════════════════════════════════════════════

/// exp(A) by Padé-13 scaling and squaring. Used for the non-normal mean
/// generators that show up when mixture coefficients are complex; Hermitian
/// callers go through the spectral route instead.
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::InvalidParam(format!(
            "expm needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite {
            context: "expm input",
        });
    }
    const THETA13: f64 = 5.371920351148152;
    let norm1 = a.one_norm();
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.scale(Complex64::new(0.5f64.powi(s as i32), 0.0));
    let mut e = pade13(&scaled)?;
    for _ in 0..s {
        e = e.mul(&e);
    }
    Ok(e)
}

fn pade13(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    let id = ComplexMatrix::identity(n);
    let re = |x: f64| Complex64::new(x, 0.0);
    let a2 = a.mul(a);
    let a4 = a2.mul(&a2);
    let a6 = a2.mul(&a4);

    let u_inner = a6
        .scale(re(B[13]))
        .add(&a4.scale(re(B[11])))
        .add(&a2.scale(re(B[9])));
    let u_poly = a6
        .mul(&u_inner)
        .add(&a6.scale(re(B[7])))
        .add(&a4.scale(re(B[5])))
        .add(&a2.scale(re(B[3])))
        .add(&id.scale(re(B[1])));
    let u = a.mul(&u_poly);

    let v_inner = a6
        .scale(re(B[12]))
        .add(&a4.scale(re(B[10])))
        .add(&a2.scale(re(B[8])));
    let v = a6
        .mul(&v_inner)
        .add(&a6.scale(re(B[6])))
        .add(&a4.scale(re(B[4])))
        .add(&a2.scale(re(B[2])))
        .add(&id.scale(re(B[0])));

    let denom = v.sub(&u); // V - U
    let numer = v.add(&u); // V + U
    let lu = denom.as_faer().partial_piv_lu();
    let x = lu.solve(numer.as_faer());
    let out = ComplexMatrix::from_faer(x);
    if !out.is_finite() {
        return Err(Error::Eigen(
            "Pade solve produced non-finite entries".into(),
        ));
    }
    Ok(out)
}

// ═══════════════════════════════════════════════════════════════════════════
// Fits
// ═══════════════════════════════════════════════════════════════════════════

/// y ≈ amplitude * x^exponent by least squares in log-log space.
#[derive(Clone, Copy, Debug)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
}

pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewSamples {
            got: xs.len(),
            need: 2,
        });
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParam(
            "power-law fit needs strictly positive finite data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if var == 0.0 {
        return Err(Error::InvalidParam(
            "power-law fit needs at least two distinct x values".into(),
        ));
    }
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = cov / var;
    let amplitude = (my - exponent * mx).exp();
    Ok(PowerLawFit {
        exponent,
        amplitude,
    })
}

// ═══════════════════════════════════════════════════════════════════════════
// Seeded test matrices
// ═══════════════════════════════════════════════════════════════════════════

/// Seeded dense Hermitian matrix rescaled to spectral norm `target_norm`.
/// Entries start as (A + A†)/2 with A uniform in the complex unit square.
pub fn random_hermitian(dim: usize, seed: u64, target_norm: f64) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::InvalidParam("random_hermitian needs dim >= 1".into()));
    }
    if !(target_norm > 0.0) || !target_norm.is_finite() {
        return Err(Error::InvalidParam(format!(
            "random_hermitian needs target_norm > 0, got {target_norm}"
        )));
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut a = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let re = 2.0 * rng.random::<f64>() - 1.0;
            let im = 2.0 * rng.random::<f64>() - 1.0;
            a.set(i, j, Complex64::new(re, im));
        }
    }
    let herm = a.add(&a.adjoint()).scale(Complex64::new(0.5, 0.0));
    let norm = spectral_norm(&herm)?;
    if norm == 0.0 {
        return Err(Error::BadNorm { norm });
    }
    Ok(herm.scale(Complex64::new(target_norm / norm, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pade_matches_closed_form_nilpotent() {
        // exp([[0,1],[0,0]]) = [[1,1],[0,1]]
        let mut a = ComplexMatrix::zeros(2, 2);
        a.set(0, 1, Complex64::new(1.0, 0.0));
        let e = expm(&a).unwrap();
        assert!((e.get(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((e.get(0, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((e.get(1, 0)).norm() < 1e-14);
        assert!((e.get(1, 1) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn simpson_rec_handles_flat_zero() {
        let z = adaptive_simpson(&|_| 0.0, 0.0, 1.0, 1e-12, 1e-300);
        assert_eq!(z, 0.0);
    }
}
