//! Dense complex linear algebra substrate: matrices, pure states, density
//! operators, tensor products, partial traces, and the Hermitian
//! eigendecomposition used as ground truth by the estimation routines.
//!
//! Everything is stored dense and row-major. The networks act on spaces of
//! dimension up to dᵏ, so operators are capped at [`DIM_CAP`] per axis.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result, ValidationReport, Violation};

/// Hard cap on any single operator axis.
pub const DIM_CAP: usize = 4096;

/// Tolerance for density-operator validation (Hermiticity, trace, positivity).
pub const VALIDATION_TOL: f64 = 1e-10;

/// Tolerance for pure-state normalization.
pub const NORM_TOL: f64 = 1e-12;

/// Threshold below which an amplitude counts as zero for phase normalization.
const PHASE_EPS: f64 = 1e-12;

pub const C_ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const C_ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const C_I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting bad shapes, the
    /// dimension cap, and non-finite values (with the offending index).
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::ZeroDimension);
        }
        check_cap(rows)?;
        check_cap(cols)?;
        if entries.len() != rows * cols {
            return Err(Error::EntryCount {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        for (index, z) in entries.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteEntry { index });
            }
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![C_ZERO; rows * cols])
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim, dim)?;
        for i in 0..dim {
            m.set(i, i, C_ONE);
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self::new(rows, cols, entries)
    }

    /// Builds a diagonal matrix from real values.
    pub fn diag(values: &[f64]) -> Result<Self> {
        let d = values.len();
        let mut m = Self::zeros(d, d)?;
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.cols + j] = v;
    }

    /// Matrix product. Panics on shape mismatch; shapes are structural here,
    /// user-facing entry points validate dimensions before calling in.
    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = vec![C_ZERO; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a == C_ZERO {
                    continue;
                }
                let row_out = &mut out[i * other.cols..(i + 1) * other.cols];
                let row_b = &other.entries[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in row_out.iter_mut().zip(row_b) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix {
            rows: self.rows,
            cols: other.cols,
            entries: out,
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&z| f(z)).collect(),
        }
    }

    fn zip(&self, other: &ComplexMatrix, f: impl Fn(Complex64, Complex64) -> Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix {
            rows: self.cols,
            cols: self.rows,
            entries: vec![C_ZERO; self.entries.len()],
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn transpose(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix {
            rows: self.cols,
            cols: self.rows,
            entries: vec![C_ZERO; self.entries.len()],
        };
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of non-square matrix");
        (0..self.rows).map(|i| self.get(i, i)).sum()
    }

    /// Applies the matrix to a column vector.
    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        let mut out = vec![C_ZERO; self.rows];
        for i in 0..self.rows {
            let row = &self.entries[i * self.cols..(i + 1) * self.cols];
            out[i] = row.iter().zip(v).map(|(&a, &x)| a * x).sum();
        }
        out
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// max |M − M†| entrywise.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// max |(U†U − I)| entrywise.
    pub fn unitarity_deviation(&self) -> f64 {
        assert!(self.is_square());
        let gram = self.adjoint().matmul(self);
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let expected = if i == j { C_ONE } else { C_ZERO };
                dev = dev.max((gram.get(i, j) - expected).norm());
            }
        }
        dev
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frobenius_distance(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Tr(AB) without forming the product.
    pub fn trace_of_product(&self, other: &ComplexMatrix) -> Complex64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = C_ZERO;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self.get(i, j) * other.get(j, i);
            }
        }
        acc
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }
}

fn check_cap(dim: usize) -> Result<()> {
    if dim > DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: DIM_CAP });
    }
    Ok(())
}

/// Kronecker product a ⊗ b. Dimensions multiply and stay under the cap.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a
        .rows()
        .checked_mul(b.rows())
        .ok_or(Error::DimensionCap { dim: usize::MAX, cap: DIM_CAP })?;
    let cols = a
        .cols()
        .checked_mul(b.cols())
        .ok_or(Error::DimensionCap { dim: usize::MAX, cap: DIM_CAP })?;
    check_cap(rows)?;
    check_cap(cols)?;
    let mut out = ComplexMatrix::zeros(rows, cols)?;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let scale = a.get(i, j);
            if scale == C_ZERO {
                continue;
            }
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out.set(i * b.rows() + k, j * b.cols() + l, scale * b.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Normalized pure state |ψ⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Accepts a complex vector with unit Euclidean norm (within 1e-12).
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        check_cap(amplitudes.len())?;
        for (index, z) in amplitudes.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFiniteEntry { index });
            }
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                dev: (norm - 1.0).abs(),
            });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { dev: 1.0 });
        }
        for z in &mut amplitudes {
            *z /= norm;
        }
        Self::new(amplitudes)
    }

    /// Computational basis state |n⟩ in dimension d.
    pub fn basis(d: usize, n: usize) -> Result<Self> {
        if n >= d {
            return Err(Error::DimensionMismatch { expected: d, got: n });
        }
        let mut amps = vec![C_ZERO; d];
        amps[n] = C_ONE;
        Self::new(amps)
    }

    /// (|n⟩ + |k⟩)/√2, the real-part probe of the reconstruction recipe.
    pub fn plus_probe(d: usize, n: usize, k: usize) -> Result<Self> {
        let mut amps = vec![C_ZERO; d.max(1)];
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        if n >= d || k >= d || n == k {
            return Err(Error::DimensionMismatch { expected: d, got: n.max(k) });
        }
        amps[n] = s;
        amps[k] = s;
        Self::new(amps)
    }

    /// (|n⟩ + i|k⟩)/√2, the imaginary-part probe.
    pub fn imag_probe(d: usize, n: usize, k: usize) -> Result<Self> {
        if n >= d || k >= d || n == k {
            return Err(Error::DimensionMismatch { expected: d, got: n.max(k) });
        }
        let mut amps = vec![C_ZERO; d];
        amps[n] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[k] = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        Self::new(amps)
    }

    /// Haar-distributed random state (normalized complex Gaussian vector).
    pub fn random(d: usize, rng: &mut impl rand::Rng) -> Result<Self> {
        let amps: Vec<Complex64> = (0..d).map(|_| standard_complex(rng)).collect();
        Self::normalized(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(&a, &b)| a.conj() * b)
            .sum()
    }

    /// |ψ⟩⟨ψ| as a density operator.
    pub fn projector(&self) -> DensityOperator {
        let d = self.dim();
        let mut m = ComplexMatrix::zeros(d, d).expect("within cap");
        for i in 0..d {
            for j in 0..d {
                m.set(i, j, self.amplitudes[i] * self.amplitudes[j].conj());
            }
        }
        DensityOperator::from_trusted(m)
    }
}

pub(crate) fn standard_complex(rng: &mut impl rand::Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Validated quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    /// Full validation: Hermiticity, unit trace, and positivity, each within
    /// [`VALIDATION_TOL`]. All violations are gathered into one report.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        validate_density(matrix)
    }

    /// Wraps a matrix that is a density operator by construction. Cheap
    /// checks only (the PSD eigenvalue sweep is O(d³) and skipped here).
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        debug_assert!(matrix.is_square());
        debug_assert!(matrix.hermiticity_deviation() <= 1e-8);
        debug_assert!((matrix.trace().re - 1.0).abs() <= 1e-8);
        Self { matrix }
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        let m = ComplexMatrix::identity(d)?.scale(Complex64::new(1.0 / d as f64, 0.0));
        Ok(Self::from_trusted(m))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// ⟨ψ|ρ|ψ⟩, real by Hermiticity.
    pub fn expectation(&self, psi: &PureState) -> f64 {
        let v = self.matrix.mul_vec(psi.amplitudes());
        psi.amplitudes()
            .iter()
            .zip(&v)
            .map(|(&a, &b)| (a.conj() * b).re)
            .sum()
    }

    /// ϱ_a ⊗ ϱ_b.
    pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> Result<Self> {
        Ok(Self::from_trusted(tensor(&a.matrix, &b.matrix)?))
    }

    /// k-fold product ρ^⊗k.
    pub fn tensor_power(&self, k: usize) -> Result<Self> {
        assert!(k >= 1);
        let mut acc = self.matrix.clone();
        for _ in 1..k {
            acc = tensor(&acc, &self.matrix)?;
        }
        Ok(Self::from_trusted(acc))
    }
}

/// Checks the three density-operator invariants and reports every violation
/// with its magnitude.
pub fn density_violations(m: &ComplexMatrix) -> ValidationReport {
    let mut report = ValidationReport::default();
    if !m.is_square() {
        // A non-square matrix violates Hermiticity maximally.
        report.violations.push(Violation::Hermiticity(f64::INFINITY));
        return report;
    }
    let herm = m.hermiticity_deviation();
    if herm > VALIDATION_TOL {
        report.violations.push(Violation::Hermiticity(herm));
    }
    let tr = m.trace();
    let tr_dev = ((tr.re - 1.0).powi(2) + tr.im.powi(2)).sqrt();
    if tr_dev > VALIDATION_TOL {
        report.violations.push(Violation::Trace(tr_dev));
    }
    // Positivity is judged on the Hermitian part.
    let sym = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let eigenvalues = sym.to_nalgebra().symmetric_eigenvalues();
    let min = eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min < -VALIDATION_TOL {
        report.violations.push(Violation::Positivity(-min));
    }
    report
}

/// Accepts the matrix as a [`DensityOperator`] or returns the structured
/// violation report.
pub fn validate_density(m: ComplexMatrix) -> Result<DensityOperator> {
    let report = density_violations(&m);
    if report.is_valid() {
        Ok(DensityOperator { matrix: m })
    } else {
        Err(Error::InvalidDensity { report })
    }
}

/// Partial trace of a square matrix over the subsystems not in `keep`
/// (0-based indices, kept in their original order). `dims` must factor the
/// matrix dimension and `keep` must be a nonempty proper subset of subsystem
/// positions. Works on arbitrary operators, not only density matrices.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    dims: &[usize],
    keep: &[usize],
) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let d = m.rows();
    if dims.iter().any(|&x| x == 0) {
        return Err(Error::ZeroDimension);
    }
    let product: usize = dims.iter().product();
    if product != d {
        return Err(Error::BadFactorization {
            dims: dims.to_vec(),
            dim: d,
        });
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.len() >= dims.len() || keep.iter().any(|&s| s >= dims.len()) {
        return Err(Error::BadKeepSet);
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|s| !keep.contains(s)).collect();

    // Row-major subsystem strides: stride[s] = Π dims[s+1..].
    let mut strides = vec![1usize; dims.len()];
    for s in (0..dims.len().saturating_sub(1)).rev() {
        strides[s] = strides[s + 1] * dims[s + 1];
    }

    let offsets = |subsystems: &[usize]| -> Vec<usize> {
        let total: usize = subsystems.iter().map(|&s| dims[s]).product();
        let mut out = Vec::with_capacity(total);
        for mut idx in 0..total {
            let mut offset = 0;
            for &s in subsystems.iter().rev() {
                offset += (idx % dims[s]) * strides[s];
                idx /= dims[s];
            }
            out.push(offset);
        }
        out
    };

    let kept_offsets = offsets(&keep);
    let traced_offsets = offsets(&traced);
    let dk = kept_offsets.len();

    let mut out = ComplexMatrix::zeros(dk, dk)?;
    for (r, &ro) in kept_offsets.iter().enumerate() {
        for (c, &co) in kept_offsets.iter().enumerate() {
            let mut acc = C_ZERO;
            for &to in &traced_offsets {
                acc += m.get(ro + to, co + to);
            }
            out.set(r, c, acc);
        }
    }
    Ok(out)
}

/// Reduced density operator on the kept subsystems (0-based indices, in their
/// original order). `dims` must factor the operator dimension and `keep` must
/// be a nonempty proper subset of subsystem positions.
pub fn partial_trace(rho: &DensityOperator, dims: &[usize], keep: &[usize]) -> Result<DensityOperator> {
    let out = partial_trace_matrix(rho.matrix(), dims, keep)?;
    Ok(DensityOperator::from_trusted(out))
}

/// Eigendecomposition of a Hermitian matrix with deterministic ordering:
/// eigenvalues descending, eigenvectors phase-normalized so the first
/// amplitude above 1e-12 is real positive, exact ties broken by lexicographic
/// comparison of the normalized amplitudes.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<PureState>,
}

impl Spectrum {
    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    /// Σ λᵢ |ηᵢ⟩⟨ηᵢ|, for checking the reconstruction identity.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.eigenvectors[0].dim();
        let mut m = ComplexMatrix::zeros(d, d).expect("within cap");
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let amps = v.amplitudes();
            for i in 0..d {
                for j in 0..d {
                    let cur = m.get(i, j);
                    m.set(i, j, cur + amps[i] * amps[j].conj() * lambda);
                }
            }
        }
        m
    }
}

/// Full eigendecomposition of a Hermitian matrix. Rejects inputs whose
/// Hermiticity deviation exceeds [`VALIDATION_TOL`].
pub fn eigh(h: &ComplexMatrix) -> Result<Spectrum> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let dev = h.hermiticity_deviation();
    if dev > VALIDATION_TOL {
        return Err(Error::NotHermitian { max_dev: dev });
    }
    // Symmetrize to scrub the sub-tolerance asymmetry before handing off.
    let sym = h.add(&h.adjoint()).scale(Complex64::new(0.5, 0.0));
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());

    let d = h.rows();
    let mut pairs: Vec<(f64, Vec<Complex64>)> = (0..d)
        .map(|k| {
            let column: Vec<Complex64> = (0..d).map(|i| eig.eigenvectors[(i, k)]).collect();
            (eig.eigenvalues[k], phase_normalize(column))
        })
        .collect();

    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| lex_cmp(&a.1, &b.1))
    });

    let mut eigenvalues = Vec::with_capacity(d);
    let mut eigenvectors = Vec::with_capacity(d);
    for (lambda, amps) in pairs {
        eigenvalues.push(lambda);
        eigenvectors.push(PureState::normalized(amps)?);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, descending. Cheaper than [`eigh`] when vectors are not
/// needed.
pub fn eigvalsh(h: &ComplexMatrix) -> Result<Vec<f64>> {
    if !h.is_square() {
        return Err(Error::NotSquare {
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    let dev = h.hermiticity_deviation();
    if dev > VALIDATION_TOL {
        return Err(Error::NotHermitian { max_dev: dev });
    }
    let sym = h.add(&h.adjoint()).scale(Complex64::new(0.5, 0.0));
    let vals: DVector<f64> = sym.to_nalgebra().symmetric_eigenvalues();
    let mut out: Vec<f64> = vals.iter().copied().collect();
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

fn phase_normalize(mut amps: Vec<Complex64>) -> Vec<Complex64> {
    if let Some(first) = amps.iter().find(|z| z.norm() > PHASE_EPS) {
        let phase = first.conj() / first.norm();
        for z in &mut amps {
            *z *= phase;
        }
    }
    amps
}

fn lex_cmp(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != std::cmp::Ordering::Equal {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Random density operator of the given rank, sampled as G·G†/Tr(G·G†) with
/// G a d×rank matrix of independent standard complex Gaussians. Deterministic
/// in the seed.
pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityOperator> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    check_cap(d)?;
    if rank == 0 || rank > d {
        return Err(Error::InvalidRank { rank, dim: d });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let g = ComplexMatrix::from_fn(d, rank, |_, _| standard_complex(&mut rng))?;
    let gg = g.matmul(&g.adjoint());
    let tr = gg.trace().re;
    let rho = gg.scale(Complex64::new(1.0 / tr, 0.0));
    Ok(DensityOperator::from_trusted(rho))
}

/// Haar-ish random unitary: QR of a complex Gaussian matrix with the R
/// diagonal phases absorbed into Q.
pub fn random_unitary(d: usize, seed: u64) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    check_cap(d)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, d, |_, _| standard_complex(&mut rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = ComplexMatrix::zeros(d, d)?;
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > PHASE_EPS {
            rjj / rjj.norm()
        } else {
            C_ONE
        };
        for i in 0..d {
            out.set(i, j, q[(i, j)] * phase);
        }
    }
    Ok(out)
}
