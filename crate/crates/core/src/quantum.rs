//! Dense complex linear algebra on small composite Hilbert spaces.
//!
//! Composite spaces are ordered `[qubit, cavity]` throughout the crate, with
//! the qubit basis `{|g>, |e>}` at indices `{0, 1}` and the cavity in the Fock
//! basis `|0>, |1>, ..., |N-1>`. The Pauli convention is `σ_z|e> = +|e>`,
//! `σ_z|g> = -|g>`, so `ω_q σ_z / 2` puts `|e>` at `+ω_q/2`.
//!
//! Every type here is an immutable value; operations return new values.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;
pub const NORM_TOL: f64 = 1e-10;
pub const TAIL_TOL: f64 = 1e-8;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Ordered list of tensor factor dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("no factors".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidSpace(format!(
                "zero-dimensional factor in {dims:?}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn qubit() -> Self {
        Self { dims: vec![2] }
    }

    pub fn cavity(n_cav: usize) -> Result<Self> {
        Self::new(vec![n_cav])
    }

    pub fn qubit_cavity(n_cav: usize) -> Result<Self> {
        Self::new(vec![2, n_cav])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_factors(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims }
    }
}

fn check_square(space: &HilbertSpace, mat: &CMatrix) -> Result<()> {
    let d = space.dim();
    if mat.nrows() != d || mat.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: mat.nrows().max(mat.ncols()),
        });
    }
    Ok(())
}

fn hermitian_defect(mat: &CMatrix) -> f64 {
    let n = mat.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    worst
}

fn trace(mat: &CMatrix) -> C64 {
    (0..mat.nrows()).map(|i| mat[(i, i)]).sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues(mat: &CMatrix) -> Vec<f64> {
    if mat.nrows() == 2 {
        // closed form avoids the iterative solver on the hot qubit path
        let a = mat[(0, 0)].re;
        let d = mat[(1, 1)].re;
        let b = mat[(0, 1)];
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        return vec![mean - half_gap, mean + half_gap];
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(mat.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending with
/// matching eigenvector columns.
pub(crate) fn hermitian_eigen(mat: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(mat.clone());
    let mut order: Vec<usize> = (0..mat.nrows()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(mat.nrows(), mat.ncols(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// A linear operator on a [`HilbertSpace`], stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    mat: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, mat: CMatrix) -> Result<Self> {
        check_square(&space, &mat)?;
        Ok(Self { space, mat })
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            mat: CMatrix::identity(d, d),
        }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            mat: CMatrix::zeros(d, d),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            space: self.space.clone(),
            mat: &self.mat * factor,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.mat)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// Spectral norm for Hermitian operators (largest |eigenvalue|).
    pub fn hermitian_norm(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        hermitian_eigenvalues(&herm)
            .into_iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    pub fn commutes_with(&self, other: &Operator, tol: f64) -> bool {
        let c = &self.mat * &other.mat - &other.mat * &self.mat;
        c.iter().all(|z| z.norm() <= tol)
    }

    /// `exp(self)` by scaling-and-squaring Padé.
    pub fn exp(&self) -> Self {
        Self {
            space: self.space.clone(),
            mat: self.mat.clone().exp(),
        }
    }

    /// Embed a single-factor operator into `space` acting on `factor`.
    pub fn embed(&self, space: &HilbertSpace, factor: usize) -> Result<Self> {
        if factor >= space.n_factors() {
            return Err(Error::InvalidFactor {
                index: factor,
                factors: space.n_factors(),
            });
        }
        if self.space.dim() != space.dims()[factor] {
            return Err(Error::DimensionMismatch {
                expected: space.dims()[factor],
                got: self.space.dim(),
            });
        }
        let mut mat = CMatrix::identity(1, 1);
        for (k, &d) in space.dims().iter().enumerate() {
            let piece = if k == factor {
                self.mat.clone()
            } else {
                CMatrix::identity(d, d)
            };
            mat = kron(&mat, &piece);
        }
        Ok(Self {
            space: space.clone(),
            mat,
        })
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space.clone(),
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space.clone(),
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space.clone(),
            mat: &self.mat * &rhs.mat,
        }
    }
}

// Standard operators.

pub fn sigma_x() -> Operator {
    qubit_op([[ZERO, ONE], [ONE, ZERO]])
}

/// `σ_y` with `<e|σ_y|g> = -i`, the ordinary Pauli matrix when `|e>` is "up".
pub fn sigma_y() -> Operator {
    qubit_op([[ZERO, I], [-I, ZERO]])
}

pub fn sigma_z() -> Operator {
    qubit_op([[-ONE, ZERO], [ZERO, ONE]])
}

/// Lowering operator `|g><e|`.
pub fn sigma_minus() -> Operator {
    qubit_op([[ZERO, ONE], [ZERO, ZERO]])
}

pub fn sigma_plus() -> Operator {
    sigma_minus().dagger()
}

/// Projector `|e><e|`.
pub fn excited_projector() -> Operator {
    qubit_op([[ZERO, ZERO], [ZERO, ONE]])
}

fn qubit_op(rows: [[C64; 2]; 2]) -> Operator {
    Operator {
        space: HilbertSpace::qubit(),
        mat: CMatrix::from_fn(2, 2, |r, c| rows[r][c]),
    }
}

/// Truncated annihilation operator on `n_cav` Fock levels.
pub fn annihilation(n_cav: usize) -> Result<Operator> {
    let space = HilbertSpace::cavity(n_cav)?;
    let mat = CMatrix::from_fn(n_cav, n_cav, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    });
    Ok(Operator { space, mat })
}

pub fn number(n_cav: usize) -> Result<Operator> {
    let space = HilbertSpace::cavity(n_cav)?;
    let mat = CMatrix::from_diagonal(&CVector::from_fn(n_cav, |n, _| C64::new(n as f64, 0.0)));
    Ok(Operator { space, mat })
}

/// Fock projector `|n><n|`.
pub fn fock_projector(n: usize, n_cav: usize) -> Result<Operator> {
    if n >= n_cav {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("Fock level {n} outside truncation {n_cav}"),
        });
    }
    let space = HilbertSpace::cavity(n_cav)?;
    let mut mat = CMatrix::zeros(n_cav, n_cav);
    mat[(n, n)] = ONE;
    Ok(Operator { space, mat })
}

/// Displacement `exp(α a† − α* a)` on the truncated space, via matrix
/// exponential of the truncated generator (exactly unitary).
pub fn displacement(alpha: C64, n_cav: usize) -> Result<Operator> {
    let a = annihilation(n_cav)?;
    let generator = &a.dagger().scale(alpha) - &a.scale(alpha.conj());
    Ok(generator.exp())
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    space: HilbertSpace,
    amps: CVector,
}

impl PureState {
    pub fn new(space: HilbertSpace, amps: CVector) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: amps.len(),
            });
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidNorm(norm));
        }
        Ok(Self { space, amps })
    }

    /// Normalize an arbitrary nonzero vector.
    pub fn normalized(space: HilbertSpace, amps: CVector) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidNorm(norm));
        }
        Self::new(space, amps / C64::new(norm, 0.0))
    }

    pub fn basis(space: &HilbertSpace, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: index,
            });
        }
        let mut amps = CVector::zeros(space.dim());
        amps[index] = ONE;
        Ok(Self {
            space: space.clone(),
            amps,
        })
    }

    pub fn ground() -> Self {
        Self::basis(&HilbertSpace::qubit(), 0).expect("qubit basis")
    }

    pub fn excited() -> Self {
        Self::basis(&HilbertSpace::qubit(), 1).expect("qubit basis")
    }

    pub fn fock(n: usize, n_cav: usize) -> Result<Self> {
        Self::basis(&HilbertSpace::cavity(n_cav)?, n)
    }

    /// `cos(θ/2)|g> + e^{iφ} sin(θ/2)|e>`.
    pub fn qubit_superposition(theta: f64, phi: f64) -> Self {
        let amps = CVector::from_vec(vec![
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ]);
        Self {
            space: HilbertSpace::qubit(),
            amps,
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn apply(&self, op: &Operator) -> Result<CVector> {
        if op.space.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: op.space.dim(),
            });
        }
        Ok(&op.mat * &self.amps)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space.clone(),
            mat: &self.amps * self.amps.adjoint(),
        }
    }
}

/// Validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity (1e-10), unit trace (1e-10) and positivity (-1e-9).
    pub fn new(space: HilbertSpace, mat: CMatrix) -> Result<Self> {
        check_square(&space, &mat)?;
        let defect = hermitian_defect(&mat);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = trace(&mat);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = hermitian_eigenvalues(&mat).first().copied().unwrap_or(0.0);
        if min < -POSITIVITY_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { space, mat })
    }

    /// Hermitize and renormalize without validation. Integrators use this
    /// after every step; positivity is checked separately where it matters.
    pub(crate) fn from_raw_normalized(space: HilbertSpace, mat: CMatrix) -> Self {
        let mut herm = (&mat + mat.adjoint()) * C64::new(0.5, 0.0);
        let tr = trace(&herm).re;
        herm /= C64::new(tr, 0.0);
        Self { space, mat: herm }
    }

    pub(crate) fn from_raw(space: HilbertSpace, mat: CMatrix) -> Self {
        Self { space, mat }
    }

    pub fn maximally_mixed(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            mat: CMatrix::identity(d, d) / C64::new(d as f64, 0.0),
        }
    }

    /// Diagonal qubit state with excited population `p_e`.
    pub fn thermal_qubit(p_e: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_e) {
            return Err(Error::InvalidParameter {
                name: "p_e",
                reason: format!("{p_e} not in [0, 1]"),
            });
        }
        let mat = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(1.0 - p_e, 0.0),
            C64::new(p_e, 0.0),
        ]));
        Ok(Self {
            space: HilbertSpace::qubit(),
            mat,
        })
    }

    /// Qubit state from a Bloch vector with |r| <= 1.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        let mat = CMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 0) => C64::new(0.5 * (1.0 - z), 0.0),
            (1, 1) => C64::new(0.5 * (1.0 + z), 0.0),
            // <e|ρ|g> = (x - i y)/2 for σ_x = |e><g| + |g><e|, σ_y = -i|e><g| + i|g><e|
            (1, 0) => C64::new(0.5 * x, -0.5 * y),
            _ => C64::new(0.5 * x, 0.5 * y),
        });
        Self::new(HilbertSpace::qubit(), mat)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        trace(&self.mat)
    }

    pub fn purity(&self) -> f64 {
        // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.mat)
    }

    /// Diagonal entries in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.mat.nrows()).map(|i| self.mat[(i, i)].re).collect()
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, unitary: &Operator) -> Result<Self> {
        if unitary.space.dim() != self.space.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space.dim(),
                got: unitary.space.dim(),
            });
        }
        Ok(Self {
            space: self.space.clone(),
            mat: &unitary.mat * &self.mat * unitary.mat.adjoint(),
        })
    }
}

/// Kronecker product with factor order `[self, other]`.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for Operator {
    fn tensor(&self, other: &Self) -> Self {
        Operator {
            space: self.space.tensor(&other.space),
            mat: kron(&self.mat, &other.mat),
        }
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        DensityMatrix {
            space: self.space.tensor(&other.space),
            mat: kron(&self.mat, &other.mat),
        }
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Self {
        let a = CMatrix::from_column_slice(self.amps.len(), 1, self.amps.as_slice());
        let b = CMatrix::from_column_slice(other.amps.len(), 1, other.amps.as_slice());
        let k = kron(&a, &b);
        PureState {
            space: self.space.tensor(&other.space),
            amps: CVector::from_column_slice(k.as_slice()),
        }
    }
}

/// Reduced state on factor `keep`, tracing out every other factor.
pub fn partial_trace(rho: &DensityMatrix, keep: usize) -> Result<DensityMatrix> {
    let dims = rho.space.dims();
    if dims.len() < 2 {
        return Err(Error::InvalidSpace(
            "partial trace needs at least two factors".into(),
        ));
    }
    if keep >= dims.len() {
        return Err(Error::InvalidFactor {
            index: keep,
            factors: dims.len(),
        });
    }
    let left: usize = dims[..keep].iter().product();
    let d = dims[keep];
    let right: usize = dims[keep + 1..].iter().product();
    let idx = |l: usize, a: usize, r: usize| (l * d + a) * right + r;
    let mat = CMatrix::from_fn(d, d, |a, b| {
        let mut acc = ZERO;
        for l in 0..left {
            for r in 0..right {
                acc += rho.mat[(idx(l, a, r), idx(l, b, r))];
            }
        }
        acc
    });
    let space = HilbertSpace::new(vec![d])?;
    Ok(DensityMatrix { space, mat })
}

/// `-Σ λ ln λ` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&rho.eigenvalues())
}

pub(crate) fn entropy_of_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &raw in eigenvalues {
        if raw < -POSITIVITY_TOL {
            return Err(Error::NotPositive(raw));
        }
        let lambda = raw.clamp(0.0, 1.0);
        if lambda > 0.0 {
            s -= lambda * lambda.ln();
        }
    }
    Ok(s)
}

/// `Tr(ρ O)`.
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if rho.space.dim() != op.space.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.space.dim(),
            got: op.space.dim(),
        });
    }
    Ok(trace_of_product(&rho.mat, &op.mat))
}

/// `Tr(A B)` without forming the product.
pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Default Fock truncation `ceil(|α|² + 6|α| + 10)`.
pub fn default_truncation(alpha: C64) -> usize {
    let a = alpha.norm();
    (a * a + 6.0 * a + 10.0).ceil() as usize
}

/// Untruncated Fock amplitudes `e^{-|α|²/2} α^n / √n!` for `n < n_cav`.
pub(crate) fn coherent_amplitudes(alpha: C64, n_cav: usize) -> CVector {
    let mut amps = CVector::zeros(n_cav);
    if n_cav == 0 {
        return amps;
    }
    amps[0] = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..n_cav {
        amps[n] = amps[n - 1] * alpha / (n as f64).sqrt();
    }
    amps
}

/// Coherent state `|α>` truncated to `n_cav` Fock levels and renormalized.
/// Fails when the discarded tail mass is 1e-8 or more.
pub fn coherent_state(alpha: C64, n_cav: usize) -> Result<PureState> {
    let space = HilbertSpace::cavity(n_cav)?;
    let amps = coherent_amplitudes(alpha, n_cav);
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let tail = (1.0 - kept).max(0.0);
    if tail >= TAIL_TOL {
        return Err(Error::TruncationTail {
            alpha_abs: alpha.norm(),
            n_cav,
            tail,
        });
    }
    PureState::normalized(space, amps)
}

/// Husimi function `Q(α) = <α|ρ|α>/π` of a single-mode state on each grid point.
///
/// The coherent-state bra uses exact (unrenormalized) Fock amplitudes, so the
/// result is the Q function of the truncated state itself and stays within
/// `[0, 1/π]` for any grid point.
pub fn husimi_q(rho: &DensityMatrix, grid: &[C64]) -> Result<Vec<f64>> {
    if rho.space.n_factors() != 1 {
        return Err(Error::InvalidSpace(
            "Husimi Q needs a single-mode state".into(),
        ));
    }
    let n = rho.space.dim();
    Ok(grid
        .iter()
        .map(|&alpha| {
            let v = coherent_amplitudes(alpha, n);
            let q = v.dotc(&(&rho.mat * &v)).re / PI;
            q.max(0.0)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tensor_of_ground_and_vacuum_is_first_basis_vector() {
        let g0 = PureState::ground().tensor(&PureState::fock(0, 5).unwrap());
        assert_eq!(g0.space().dims(), &[2, 5]);
        assert_eq!(g0.amplitudes()[0], ONE);
        assert!(g0.amplitudes().iter().skip(1).all(|z| *z == ZERO));
    }

    #[test]
    fn sigma_z_tensor_identity_spectrum() {
        let n = 6;
        let op = sigma_z().tensor(&Operator::identity(&HilbertSpace::cavity(n).unwrap()));
        let ev = op.eigenvalues();
        assert_eq!(ev.iter().filter(|v| (**v + 1.0).abs() < 1e-12).count(), n);
        assert_eq!(ev.iter().filter(|v| (**v - 1.0).abs() < 1e-12).count(), n);
    }

    #[test]
    fn sigma_conventions() {
        let e = PureState::excited().to_density();
        let g = PureState::ground().to_density();
        assert_abs_diff_eq!(expectation(&e, &sigma_z()).unwrap().re, 1.0);
        assert_abs_diff_eq!(expectation(&g, &sigma_z()).unwrap().re, -1.0);
        // σ_- |e> = |g>
        let lowered = PureState::excited().apply(&sigma_minus()).unwrap();
        assert_eq!(lowered[0], ONE);
        // [σ_y, σ_z] = 2i σ_x
        let comm = &(&sigma_y() * &sigma_z()) - &(&sigma_z() * &sigma_y());
        let expected = sigma_x().scale(C64::new(0.0, 2.0));
        assert!((comm.matrix() - expected.matrix()).norm() < 1e-15);
    }

    #[test]
    fn expectation_examples() {
        let mixed = DensityMatrix::maximally_mixed(&HilbertSpace::qubit());
        assert_abs_diff_eq!(expectation(&mixed, &sigma_x()).unwrap().norm(), 0.0);
        let thermal = DensityMatrix::thermal_qubit(0.1).unwrap();
        assert_abs_diff_eq!(
            expectation(&thermal, &sigma_z()).unwrap().re,
            -0.8,
            epsilon = 1e-15
        );
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let rho = DensityMatrix::maximally_mixed(&HilbertSpace::qubit());
        let n = number(3).unwrap();
        assert!(matches!(
            expectation(&rho, &n),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let space = HilbertSpace::qubit();
        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(space.clone(), bad_trace),
            Err(Error::InvalidTrace(_))
        ));
        let non_herm = CMatrix::from_fn(2, 2, |r, c| {
            if r == 0 && c == 1 {
                ONE
            } else if r == c {
                C64::new(0.5, 0.0)
            } else {
                ZERO
            }
        });
        assert!(matches!(
            DensityMatrix::new(space.clone(), non_herm),
            Err(Error::NotHermitian(_))
        ));
        let negative = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::new(1.5, 0.0),
            C64::new(-0.5, 0.0),
        ]));
        assert!(matches!(
            DensityMatrix::new(space, negative),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let rq = DensityMatrix::thermal_qubit(0.3).unwrap();
        let rc = coherent_state(C64::new(0.7, 0.2), 12).unwrap().to_density();
        let joint = rq.tensor(&rc);
        let back = partial_trace(&joint, 0).unwrap();
        assert!((back.matrix() - rq.matrix()).norm() < 1e-12);
        let back_c = partial_trace(&joint, 1).unwrap();
        assert!((back_c.matrix() - rc.matrix()).norm() < 1e-12);

        let s = 1.0 / 2f64.sqrt();
        let bell = PureState::new(
            HilbertSpace::new(vec![2, 2]).unwrap(),
            CVector::from_vec(vec![C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]),
        )
        .unwrap();
        let red = partial_trace(&bell.to_density(), 0).unwrap();
        assert!((red.matrix() - CMatrix::identity(2, 2) * C64::new(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_factor() {
        let rho = DensityMatrix::maximally_mixed(&HilbertSpace::qubit_cavity(3).unwrap());
        assert!(matches!(
            partial_trace(&rho, 2),
            Err(Error::InvalidFactor { .. })
        ));
        let single = DensityMatrix::maximally_mixed(&HilbertSpace::qubit());
        assert!(partial_trace(&single, 0).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(
            von_neumann_entropy(&PureState::excited().to_density()).unwrap(),
            0.0
        );
        let mixed = DensityMatrix::maximally_mixed(&HilbertSpace::qubit());
        assert_abs_diff_eq!(
            von_neumann_entropy(&mixed).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        let thermal = DensityMatrix::thermal_qubit(0.1).unwrap();
        let expected = -0.1 * 0.1f64.ln() - 0.9 * 0.9f64.ln();
        assert_abs_diff_eq!(
            von_neumann_entropy(&thermal).unwrap(),
            expected,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(expected, 0.3251, epsilon = 1e-4);
    }

    #[test]
    fn entropy_rejects_corrupted_state() {
        assert!(matches!(
            entropy_of_spectrum(&[1.1, -0.1]),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn coherent_state_examples() {
        let vac = coherent_state(ZERO, 8).unwrap();
        assert_eq!(vac.amplitudes()[0], ONE);

        let a = coherent_state(C64::new(0.0, 0.0), 30).unwrap();
        let b = coherent_state(C64::new(2.0, 0.0), 30).unwrap();
        assert_abs_diff_eq!(a.inner(&b).norm(), (-2.0f64).exp(), epsilon = 1e-10);
        assert_abs_diff_eq!((-2.0f64).exp(), 0.1353, epsilon = 1e-4);

        let c = coherent_state(C64::new(1.5, 0.0), 30).unwrap();
        let n_mean: f64 = c
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(n, z)| n as f64 * z.norm_sqr())
            .sum();
        assert_abs_diff_eq!(n_mean, 2.25, epsilon = 1e-8);
    }

    #[test]
    fn coherent_state_truncation_check() {
        let err = coherent_state(C64::new(4.0, 0.0), 20).unwrap_err();
        assert!(matches!(err, Error::TruncationTail { .. }));
        let alpha = C64::new(4.0, 0.0);
        assert!(coherent_state(alpha, default_truncation(alpha)).is_ok());
    }

    #[test]
    fn husimi_examples() {
        let vac = PureState::fock(0, 20).unwrap().to_density();
        let q = husimi_q(&vac, &[ZERO, C64::new(2.0, 0.0), C64::new(0.0, -2.0)]).unwrap();
        assert_abs_diff_eq!(q[0], 1.0 / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], (-4.0f64).exp() / PI, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 0.00583, epsilon = 1e-5);
        assert_abs_diff_eq!(q[2], q[1], epsilon = 1e-15);
    }

    #[test]
    fn husimi_normalization() {
        let rho = coherent_state(C64::new(1.0, 0.5), 25).unwrap().to_density();
        let h = 0.05;
        let grid: Vec<C64> = (-120..=120)
            .flat_map(|i| (-120..=120).map(move |j| C64::new(i as f64 * h, j as f64 * h)))
            .collect();
        let total: f64 = husimi_q(&rho, &grid).unwrap().iter().sum::<f64>() * h * h;
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-2);
    }

    #[test]
    fn husimi_rejects_composite() {
        let rho = DensityMatrix::maximally_mixed(&HilbertSpace::qubit_cavity(3).unwrap());
        assert!(husimi_q(&rho, &[ZERO]).is_err());
    }

    #[test]
    fn bloch_round_trip() {
        let rho = DensityMatrix::from_bloch(0.3, -0.4, 0.5).unwrap();
        assert_abs_diff_eq!(
            expectation(&rho, &sigma_x()).unwrap().re,
            0.3,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            expectation(&rho, &sigma_y()).unwrap().re,
            -0.4,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            expectation(&rho, &sigma_z()).unwrap().re,
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn hilbert_space_validation() {
        assert!(HilbertSpace::new(vec![]).is_err());
        assert!(HilbertSpace::new(vec![2, 0]).is_err());
        assert_eq!(HilbertSpace::qubit_cavity(7).unwrap().dim(), 14);
    }
}
