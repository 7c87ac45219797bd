//! Interferometric networks: a control qubit is put through a Hadamard, a
//! phase shift φ, a controlled-U on the target register, and a second
//! Hadamard; the |0⟩ outcome probability P0 = ½(1 + Re(e^{iφ}·Tr(Uρ)))
//! carries the visibility and phase of Tr(Uρ).
//!
//! Conventions fixed here and relied on by fixtures elsewhere:
//! the control qubit is the most significant tensor factor, the phase gate
//! applies e^{iφ} to the |1⟩ control branch before the controlled-U, and the
//! controlled-U is |0⟩⟨0|⊗I + |1⟩⟨1|⊗U.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmath::{ComplexMatrix, DensityOperator, C_ONE, DIM_CAP};

/// Unitarity tolerance for network operators.
pub const UNITARY_TOL: f64 = 1e-10;

/// Tr(Uρ) split into visibility and phase.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceFactor {
    /// Tr(Uρ).
    pub value: Complex64,
    /// |Tr(Uρ)|, in [0, 1] for unitary U and valid ρ.
    pub visibility: f64,
    /// arg Tr(Uρ), in (−π, π]; 0 when the visibility vanishes.
    pub phase: f64,
}

impl InterferenceFactor {
    fn from_value(value: Complex64) -> Self {
        Self {
            value,
            visibility: value.norm(),
            phase: value.arg(),
        }
    }
}

/// A controlled-U network description: the unitary acting on the target
/// register and a human-readable label.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    target_dim: usize,
    unitary: ComplexMatrix,
    description: String,
}

impl NetworkSpec {
    /// Validates squareness, the dimension cap, and unitarity within 1e-10.
    pub fn new(target_dim: usize, unitary: ComplexMatrix, description: impl Into<String>) -> Result<Self> {
        if !unitary.is_square() {
            return Err(Error::NotSquare {
                rows: unitary.rows(),
                cols: unitary.cols(),
            });
        }
        if unitary.rows() != target_dim {
            return Err(Error::DimensionMismatch {
                expected: target_dim,
                got: unitary.rows(),
            });
        }
        if target_dim > DIM_CAP {
            return Err(Error::DimensionCap {
                dim: target_dim,
                cap: DIM_CAP,
            });
        }
        let dev = unitary.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary { max_dev: dev });
        }
        Ok(Self {
            target_dim,
            unitary,
            description: description.into(),
        })
    }

    /// Identity network on a d-dimensional target.
    pub fn identity(d: usize) -> Result<Self> {
        Self::new(d, ComplexMatrix::identity(d)?, "identity")
    }

    /// Swap network on two d-dimensional registers.
    pub fn swap(d: usize) -> Result<Self> {
        Self::new(d * d, swap_operator(d)?, format!("swap(d={d})"))
    }

    /// Cyclic-shift network on k d-dimensional registers.
    pub fn shift(d: usize, k: usize) -> Result<Self> {
        let dim = checked_power(d, k)?;
        Self::new(dim, shift_operator(d, k)?, format!("shift(d={d}, k={k})"))
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn description(&self) -> &str {
        &self.description
    }
}

fn checked_power(d: usize, k: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut dim: usize = 1;
    for _ in 0..k {
        dim = dim
            .checked_mul(d)
            .filter(|&x| x <= DIM_CAP)
            .ok_or(Error::DimensionCap {
                dim: usize::MAX,
                cap: DIM_CAP,
            })?;
    }
    Ok(dim)
}

/// The swap operator V on two d-dimensional registers: V|α⟩|β⟩ = |β⟩|α⟩.
/// A d²×d² permutation matrix with V² = I, Hermitian and unitary.
pub fn swap_operator(d: usize) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let dim = checked_power(d, 2)?;
    let mut v = ComplexMatrix::zeros(dim, dim)?;
    for k in 0..d {
        for l in 0..d {
            v.set(l * d + k, k * d + l, C_ONE);
        }
    }
    Ok(v)
}

/// The cyclic shift V⁽ᵏ⁾ on k d-dimensional registers:
/// V⁽ᵏ⁾|φ₁⟩…|φₖ⟩ = |φₖ⟩|φ₁⟩…|φ_{k−1}⟩.
///
/// Built by composing the k−1 adjacent swaps S₁₂·S₂₃·…·S_{k−1,k} (rightmost
/// applied first) as basis permutations, then cross-checked entry-exactly
/// against the directly constructed cyclic permutation.
pub fn shift_operator(d: usize, k: usize) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    if k < 2 {
        return Err(Error::ParamRange {
            name: "k",
            value: k as f64,
            range: "k >= 2",
        });
    }
    let dim = checked_power(d, k)?;

    // digits[0] is the most significant register (register 1).
    let to_digits = |mut index: usize| -> Vec<usize> {
        let mut digits = vec![0usize; k];
        for slot in (0..k).rev() {
            digits[slot] = index % d;
            index /= d;
        }
        digits
    };
    let from_digits = |digits: &[usize]| -> usize { digits.iter().fold(0, |acc, &x| acc * d + x) };

    // Cascade: apply S_{k−1,k} first, then S_{k−2,k−1}, …, then S_{1,2}.
    let mut cascade = vec![0usize; dim];
    for (input, slot) in cascade.iter_mut().enumerate() {
        let mut digits = to_digits(input);
        for j in (0..k - 1).rev() {
            digits.swap(j, j + 1);
        }
        *slot = from_digits(&digits);
    }

    // Direct construction: the last register's content moves to the front.
    let mut direct = vec![0usize; dim];
    for (input, slot) in direct.iter_mut().enumerate() {
        let mut digits = to_digits(input);
        digits.rotate_right(1);
        *slot = from_digits(&digits);
    }

    assert_eq!(cascade, direct, "swap cascade must equal the cyclic permutation");

    let mut m = ComplexMatrix::zeros(dim, dim)?;
    for (input, &output) in cascade.iter().enumerate() {
        m.set(output, input, C_ONE);
    }
    Ok(m)
}

/// Tr(Uρ) = v·e^{iα}, the factor by which the controlled-U modifies the
/// control qubit's interference pattern.
pub fn interference_factor(spec: &NetworkSpec, rho: &DensityOperator) -> Result<InterferenceFactor> {
    if spec.target_dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.target_dim(),
            got: rho.dim(),
        });
    }
    let value = spec.unitary().trace_of_product(rho.matrix());
    Ok(InterferenceFactor::from_value(value))
}

/// Full circuit simulation: builds the joint (2·dim)×(2·dim) operator
/// W = (H⊗I)·CU·(Φ⊗I)·(H⊗I), applies it to |0⟩⟨0|⊗ρ, and returns the
/// probability of measuring the control in |0⟩.
///
/// The joint operator has the closed block form
/// W = ½·[[I + e^{iφ}U, I − e^{iφ}U], [I − e^{iφ}U, I + e^{iφ}U]],
/// which is assembled directly; the conjugation W·(|0⟩⟨0|⊗ρ)·W† is carried
/// out blockwise. Satisfies P0 = ½(1 + Re(e^{iφ}·Tr(Uρ))) within 1e-10.
pub fn run_interferometer(spec: &NetworkSpec, rho: &DensityOperator, phi: f64) -> Result<f64> {
    if spec.target_dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.target_dim(),
            got: rho.dim(),
        });
    }
    let d = rho.dim();
    let eiphi = Complex64::cis(phi);
    let identity = ComplexMatrix::identity(d)?;
    let phased = spec.unitary().scale(eiphi);
    let half = Complex64::new(0.5, 0.0);
    // Top and bottom control branches of W acting on the |0⟩ control column.
    let a = identity.add(&phased).scale(half);
    let c = identity.sub(&phased).scale(half);

    // W·(|0⟩⟨0|⊗ρ)·W† has blocks [[AρA†, AρC†], [CρA†, CρC†]].
    let a_rho = a.matmul(rho.matrix());
    let c_rho = c.matmul(rho.matrix());
    let top_left = a_rho.matmul(&a.adjoint());
    let bottom_right = c_rho.matmul(&c.adjoint());

    let p0 = top_left.trace().re;
    debug_assert!((p0 + bottom_right.trace().re - 1.0).abs() < 1e-9);
    Ok(p0.clamp(0.0, 1.0))
}

/// Tr(ϱ_a ϱ_b), the overlap measured by the swap network via v = 2P0 − 1.
/// Computed analytically as the trace of the product.
pub fn overlap(rho_a: &DensityOperator, rho_b: &DensityOperator) -> Result<f64> {
    if rho_a.dim() != rho_b.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho_a.dim(),
            got: rho_b.dim(),
        });
    }
    Ok(rho_a.matrix().trace_of_product(rho_b.matrix()).re)
}

/// Tr(ϱ_a ϱ_b) obtained from the full swap-network circuit at φ = 0.
pub fn overlap_via_circuit(rho_a: &DensityOperator, rho_b: &DensityOperator) -> Result<f64> {
    if rho_a.dim() != rho_b.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho_a.dim(),
            got: rho_b.dim(),
        });
    }
    let spec = NetworkSpec::swap(rho_a.dim())?;
    let joint = DensityOperator::tensor(rho_a, rho_b)?;
    let p0 = run_interferometer(&spec, &joint, 0.0)?;
    Ok(2.0 * p0 - 1.0)
}

/// Tr ρᵏ = Σᵢ λᵢᵏ, computed by repeated matrix multiplication. This is the
/// production path; the circuit witness lives in [`power_trace_via_circuit`].
pub fn power_trace(rho: &DensityOperator, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::ParamRange {
            name: "k",
            value: k as f64,
            range: "k >= 1",
        });
    }
    if k == 1 {
        return Ok(rho.matrix().trace().re);
    }
    let mut acc = rho.matrix().clone();
    for _ in 2..k {
        acc = acc.matmul(rho.matrix());
    }
    Ok(acc.trace_of_product(rho.matrix()).re)
}

/// Tr ρᵏ as the shift-network visibility: v = Tr(V⁽ᵏ⁾·ρ^⊗k) = 2P0 − 1 from
/// the full interferometer at φ = 0. Requires k ≥ 2 and dᵏ within the cap.
pub fn power_trace_via_circuit(rho: &DensityOperator, k: usize) -> Result<f64> {
    let spec = NetworkSpec::shift(rho.dim(), k)?;
    let joint = rho.tensor_power(k)?;
    let p0 = run_interferometer(&spec, &joint, 0.0)?;
    Ok(2.0 * p0 - 1.0)
}
