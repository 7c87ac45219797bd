//! Estimation procedures layered on the network primitives: recovering a
//! spectrum from power traces, locating extremal eigenvalues by iterating on
//! the probe state, embedding observables into density operators, state
//! reconstruction from overlap probes, and the two-qubit separability test.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::networks::{self, NetworkSpec};
use crate::qmath::{self, ComplexMatrix, DensityOperator, PureState, C_ZERO};
use crate::sampling::{derive_seed, estimate_visibility, EstimateResult, ShotPlan};

/// Roots of the recovered characteristic polynomial are rejected when the
/// imaginary part exceeds this, or the real part leaves [−0.05, 1.05].
pub const ROOT_IMAG_TOL: f64 = 0.05;
pub const ROOT_RANGE_SLACK: f64 = 0.05;

/// Estimated power traces Tr ρᵏ for k = 1..d. The first entry is pinned to
/// 1 exactly; entry k is bounded by [1/d^{k−1} − tol, 1 + tol] where tol
/// reflects the caller's noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTraceVector {
    dim: usize,
    values: Vec<f64>,
}

impl PowerTraceVector {
    pub fn new(values: Vec<f64>, tol: f64) -> Result<Self> {
        let dim = values.len();
        if dim < 1 {
            return Err(Error::InvalidPowerTraces {
                reason: "no power traces supplied".into(),
            });
        }
        if values[0] != 1.0 {
            return Err(Error::InvalidPowerTraces {
                reason: format!("first power trace must be exactly 1, got {}", values[0]),
            });
        }
        let d = dim as f64;
        for (i, &p) in values.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidPowerTraces {
                    reason: format!("power trace {} is not finite", i + 1),
                });
            }
            let floor = d.powi(-(i as i32));
            if p < floor - tol || p > 1.0 + tol {
                return Err(Error::InvalidPowerTraces {
                    reason: format!(
                        "power trace {} = {p} outside [{floor:.6} - {tol}, 1 + {tol}]",
                        i + 1
                    ),
                });
            }
        }
        Ok(Self { dim, values })
    }

    /// Exact power traces of ρ, k = 1..d, by matrix powers.
    pub fn exact(rho: &DensityOperator) -> Result<Self> {
        let d = rho.dim();
        let mut values = Vec::with_capacity(d);
        values.push(1.0);
        for k in 2..=d {
            values.push(networks::power_trace(rho, k)?);
        }
        Self::new(values, 1e-9)
    }

    /// Sampled power traces: each k ≥ 2 is the shift-network visibility
    /// estimated under `plan.shots` shots, with the per-k seed derived from
    /// (plan.seed, k). The validation tolerance widens with the shot noise.
    pub fn sampled(rho: &DensityOperator, plan: &ShotPlan) -> Result<Self> {
        let d = rho.dim();
        let mut values = Vec::with_capacity(d);
        values.push(1.0);
        for k in 2..=d {
            let spec = NetworkSpec::shift(d, k)?;
            let joint = rho.tensor_power(k)?;
            let per_k = ShotPlan {
                seed: derive_seed(plan.seed, k as u64),
                ..*plan
            };
            let est = estimate_visibility(&spec, &joint, 0.0, &per_k)?;
            values.push(est.point);
        }
        let tol = 8.0 / (plan.shots as f64).sqrt();
        Self::new(values, tol.max(1e-9))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Recovers eigenvalue estimates from power traces via Newton's identities.
///
/// The power sums p_k are converted to elementary symmetric polynomials with
/// k·e_k = Σ_{i=1..k} (−1)^{i−1} e_{k−i} p_i, the characteristic polynomial
/// Π(λ − λᵢ) = Σ (−1)^k e_k λ^{d−k} is formed, and its roots are read off a
/// companion matrix, then polished by a few Newton steps. Roots with large
/// imaginary part or far outside [0, 1] signal inconsistent input and are
/// reported as recovery failures; surviving roots are clamped to [0, 1],
/// renormalized to unit sum, and returned descending.
pub fn spectrum_from_power_traces(p: &PowerTraceVector) -> Result<Vec<f64>> {
    let d = p.dim();
    if d < 2 {
        return Err(Error::InvalidPowerTraces {
            reason: "spectrum recovery needs dim >= 2".into(),
        });
    }
    let values = p.values();

    // e[k] for k = 0..d; p_i = values[i-1].
    let mut e = vec![0.0f64; d + 1];
    e[0] = 1.0;
    for k in 1..=d {
        let mut acc = 0.0;
        for i in 1..=k {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[k - i] * values[i - 1];
        }
        e[k] = acc / k as f64;
    }

    // Monic characteristic polynomial coefficients: λ^d + b[1]λ^{d−1} + …
    let b: Vec<f64> = (1..=d).map(|k| if k % 2 == 1 { -e[k] } else { e[k] }).collect();

    let mut companion = nalgebra::DMatrix::<f64>::zeros(d, d);
    for i in 0..d - 1 {
        companion[(i + 1, i)] = 1.0;
    }
    for i in 0..d {
        companion[(i, d - 1)] = -b[d - 1 - i];
    }
    let mut roots: Vec<Complex64> = companion.complex_eigenvalues().iter().copied().collect();

    for root in &mut roots {
        *root = polish_root(*root, &b);
    }

    let mut eigenvalues = Vec::with_capacity(d);
    for root in &roots {
        if root.im.abs() > ROOT_IMAG_TOL {
            return Err(Error::SpectrumRecovery {
                reason: format!(
                    "root {:.6}{:+.6}i has imaginary part beyond {ROOT_IMAG_TOL}",
                    root.re, root.im
                ),
            });
        }
        if root.re < -ROOT_RANGE_SLACK || root.re > 1.0 + ROOT_RANGE_SLACK {
            return Err(Error::SpectrumRecovery {
                reason: format!("root {:.6} lies outside [-0.05, 1.05]", root.re),
            });
        }
        eigenvalues.push(root.re.clamp(0.0, 1.0));
    }

    let sum: f64 = eigenvalues.iter().sum();
    if sum <= f64::EPSILON {
        return Err(Error::SpectrumRecovery {
            reason: "clamped eigenvalues sum to zero".into(),
        });
    }
    for lambda in &mut eigenvalues {
        *lambda /= sum;
    }
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(eigenvalues)
}

/// A few Newton iterations on the monic polynomial with coefficients
/// 1, b[0], …, b[d−1]; tightens companion-matrix roots toward machine
/// precision.
fn polish_root(mut z: Complex64, b: &[f64]) -> Complex64 {
    for _ in 0..4 {
        let mut value = Complex64::new(1.0, 0.0);
        let mut derivative = C_ZERO;
        for &coeff in b {
            derivative = derivative * z + value;
            value = value * z + Complex64::new(coeff, 0.0);
        }
        if derivative.norm() < 1e-14 {
            break;
        }
        let step = value / derivative;
        z -= step;
        if step.norm() < 1e-15 {
            break;
        }
    }
    z
}

/// Which end of the spectrum the iterative search targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Max,
    Min,
}

/// Starting point for the search: an explicit state or a seeded random one.
#[derive(Debug, Clone)]
pub enum SearchInit {
    State(PureState),
    Seed(u64),
}

/// Outcome of the extremal-eigenvalue search.
#[derive(Debug, Clone)]
pub struct EigenSearchResult {
    pub eigenvalue: f64,
    pub state: PureState,
    pub iterations: usize,
    pub converged: bool,
    /// ⟨ψ|ρ|ψ⟩ after each iteration, starting with the initial state; monotone
    /// nondecreasing for max mode, nonincreasing for min mode.
    pub trajectory: Vec<f64>,
}

/// Iteratively extremizes v_ψ = ⟨ψ|ρ|ψ⟩ over unit vectors. Each iteration
/// solves the 2×2 restricted eigenproblem on span{|ψ⟩, ρ|ψ⟩} (steepest
/// ascent/descent with exact line search), which makes the trajectory
/// monotone by construction. Converged when the residual ‖ρ|ψ⟩ − v|ψ⟩‖
/// drops below tol or the step improvement below tol².
pub fn extremal_eigenvalue_search(
    rho: &DensityOperator,
    mode: SearchMode,
    init: SearchInit,
    tol: f64,
    max_iter: usize,
) -> Result<EigenSearchResult> {
    if !(tol > 0.0) {
        return Err(Error::ParamRange {
            name: "tol",
            value: tol,
            range: "(0, inf)",
        });
    }
    let d = rho.dim();
    let mut psi = match init {
        SearchInit::State(state) => {
            if state.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: state.dim(),
                });
            }
            state
        }
        SearchInit::Seed(seed) => {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            PureState::random(d, &mut rng)?
        }
    };

    let mut trajectory = Vec::with_capacity(max_iter + 1);
    let mut converged = false;
    let mut iterations = 0;

    let mut rho_psi = rho.matrix().mul_vec(psi.amplitudes());
    let mut v: f64 = psi
        .amplitudes()
        .iter()
        .zip(&rho_psi)
        .map(|(&a, &b)| (a.conj() * b).re)
        .sum();
    trajectory.push(v);

    for _ in 0..max_iter {
        // Residual w = ρ|ψ⟩ − v|ψ⟩ doubles as the (projected) gradient.
        let w: Vec<Complex64> = rho_psi
            .iter()
            .zip(psi.amplitudes())
            .map(|(&r, &a)| r - a * v)
            .collect();
        let s: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if s < tol {
            converged = true;
            break;
        }

        let w_hat: Vec<Complex64> = w.iter().map(|&z| z / s).collect();
        let rho_w = rho.matrix().mul_vec(&w_hat);
        let b: f64 = w_hat
            .iter()
            .zip(&rho_w)
            .map(|(&a, &r)| (a.conj() * r).re)
            .sum();

        // Restricted operator on the orthonormal pair {ψ, ŵ} is
        // [[v, s], [s, b]]; its eigenvalues bracket the next iterate.
        let mid = 0.5 * (v + b);
        let radius = (0.25 * (v - b) * (v - b) + s * s).sqrt();
        let lambda = match mode {
            SearchMode::Max => mid + radius,
            SearchMode::Min => mid - radius,
        };

        // Eigenvector of the 2×2 block: (λ − v)·x_ψ = s·x_ŵ.
        let x_psi = s;
        let x_w = lambda - v;
        let norm = (x_psi * x_psi + x_w * x_w).sqrt();
        let (c_psi, c_w) = (x_psi / norm, x_w / norm);
        let amps: Vec<Complex64> = psi
            .amplitudes()
            .iter()
            .zip(&w_hat)
            .map(|(&a, &w)| a * c_psi + w * c_w)
            .collect();
        psi = PureState::normalized(amps)?;
        iterations += 1;

        rho_psi = rho.matrix().mul_vec(psi.amplitudes());
        let v_new: f64 = psi
            .amplitudes()
            .iter()
            .zip(&rho_psi)
            .map(|(&a, &b)| (a.conj() * b).re)
            .sum();
        let improvement = (v_new - v).abs();
        v = v_new;
        trajectory.push(v);

        if improvement < tol * tol {
            converged = true;
            break;
        }
    }

    Ok(EigenSearchResult {
        eigenvalue: v,
        state: psi,
        iterations,
        converged,
        trajectory,
    })
}

/// Runs the search from `inits` seeded starting points (seeds derived from
/// the master seed) and returns all runs ordered best-first for the mode.
/// The Rayleigh quotient never overshoots the true extremum, so "best" is
/// simply the largest (max mode) or smallest (min mode) eigenvalue found.
pub fn extremal_search_multistart(
    rho: &DensityOperator,
    mode: SearchMode,
    inits: usize,
    master_seed: u64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<EigenSearchResult>> {
    if inits < 1 {
        return Err(Error::ParamRange {
            name: "inits",
            value: inits as f64,
            range: "inits >= 1",
        });
    }
    let mut runs = Vec::with_capacity(inits);
    for i in 0..inits {
        let init = SearchInit::Seed(derive_seed(master_seed, i as u64));
        runs.push(extremal_eigenvalue_search(rho, mode, init, tol, max_iter)?);
    }
    runs.sort_by(|a, b| match mode {
        SearchMode::Max => b.eigenvalue.total_cmp(&a.eigenvalue),
        SearchMode::Min => a.eigenvalue.total_cmp(&b.eigenvalue),
    });
    Ok(runs)
}

/// Default offset scale for the positive embedding A′ = γI + A.
pub fn default_embedding_offset(a: &ComplexMatrix) -> f64 {
    1e-6 * a.max_abs().max(1.0)
}

/// The positive embedding behind the network estimate of ⟨A⟩: γ is the
/// negative-part shift plus a small δ so that A′ = γI + A is strictly
/// positive and Tr A′ > 0.
fn embed_observable(a: &ComplexMatrix, delta: f64) -> Result<(DensityOperator, f64, f64)> {
    let eigenvalues = qmath::eigvalsh(a)?;
    let lambda_min = *eigenvalues.last().expect("nonempty");
    let gamma = (-lambda_min).max(0.0) + delta;
    let d = a.rows();
    let trace_a = a.trace().re;
    let trace_prime = trace_a + gamma * d as f64;
    if trace_prime.abs() < 1e-12 {
        return Err(Error::DegenerateEmbedding);
    }
    let scale = Complex64::new(1.0 / trace_prime, 0.0);
    let mut prime = a.clone();
    for i in 0..d {
        let cur = prime.get(i, i);
        prime.set(i, i, cur + Complex64::new(gamma, 0.0));
    }
    let state = DensityOperator::new(prime.scale(scale))?;
    Ok((state, gamma, trace_prime))
}

/// ⟨A⟩ = Tr(ρA) obtained through the overlap network: A is embedded as the
/// state ϱ_{A′} = (γI + A)/Tr(γI + A), the overlap v = Tr(ϱ_{A′}ρ) is
/// computed, and the affine correction v·Tr(A′) − γ undoes the embedding.
pub fn expectation_via_network(a: &ComplexMatrix, rho: &DensityOperator) -> Result<f64> {
    expectation_via_network_with_offset(a, rho, default_embedding_offset(a))
}

/// Same as [`expectation_via_network`] with an explicit δ in γ; the result
/// must not depend on δ (the correction cancels it exactly).
pub fn expectation_via_network_with_offset(
    a: &ComplexMatrix,
    rho: &DensityOperator,
    delta: f64,
) -> Result<f64> {
    if a.rows() != rho.dim() || !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: a.rows(),
        });
    }
    let (state, gamma, trace_prime) = embed_observable(a, delta)?;
    let v = networks::overlap(&state, rho)?;
    Ok(v * trace_prime - gamma)
}

/// Sampled counterpart: the overlap visibility is estimated under the plan
/// and mapped through the same affine correction.
pub fn expectation_sampled(
    a: &ComplexMatrix,
    rho: &DensityOperator,
    plan: &ShotPlan,
) -> Result<EstimateResult> {
    if a.rows() != rho.dim() || !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: a.rows(),
        });
    }
    let (state, gamma, trace_prime) = embed_observable(a, default_embedding_offset(a))?;
    let spec = NetworkSpec::swap(rho.dim())?;
    let joint = DensityOperator::tensor(&state, rho)?;
    let est = estimate_visibility(&spec, &joint, 0.0, plan)?;
    Ok(est.affine(trace_prime, -gamma))
}

/// Reconstruction output: the Hermitian matrix assembled from probe
/// overlaps, the density operator after projection, and how far the raw
/// matrix fell outside the PSD cone.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub raw: ComplexMatrix,
    pub state: DensityOperator,
    /// Magnitude of the most negative raw eigenvalue (0 when already PSD).
    pub psd_defect: f64,
    /// Set when psd_defect exceeded the caller's tolerance.
    pub warned: bool,
}

/// Reconstructs a d-dimensional state from overlap probes. The oracle is
/// called exactly d² times in a fixed order: diagonal probes |n⟩ for
/// n = 0..d, then for each pair n < k the probes (|n⟩+|k⟩)/√2 and
/// (|n⟩+i|k⟩)/√2. Off-diagonal entries follow from
/// Re ϱ_nk = v₊ − (v_nn + v_kk)/2 and Im ϱ_nk = (v_nn + v_kk)/2 − v_{+i}.
/// The assembled matrix is projected to the nearest density operator by
/// clamping negative eigenvalues and renormalizing the trace; a defect
/// beyond `psd_tol` sets the warning flag.
pub fn reconstruct_state(
    mut oracle: impl FnMut(&PureState) -> Result<f64>,
    d: usize,
    psd_tol: f64,
) -> Result<Reconstruction> {
    if d < 2 {
        return Err(Error::ZeroDimension);
    }
    let mut diag = vec![0.0f64; d];
    for (n, slot) in diag.iter_mut().enumerate() {
        *slot = oracle(&PureState::basis(d, n)?)?;
    }
    let mut raw = ComplexMatrix::zeros(d, d)?;
    for n in 0..d {
        raw.set(n, n, Complex64::new(diag[n], 0.0));
    }
    for n in 0..d {
        for k in n + 1..d {
            let v_plus = oracle(&PureState::plus_probe(d, n, k)?)?;
            let v_imag = oracle(&PureState::imag_probe(d, n, k)?)?;
            let mean = 0.5 * (diag[n] + diag[k]);
            let entry = Complex64::new(v_plus - mean, mean - v_imag);
            raw.set(n, k, entry);
            raw.set(k, n, entry.conj());
        }
    }

    let spectrum = qmath::eigh(&raw)?;
    let psd_defect = (-spectrum.min()).max(0.0);
    let clamped: Vec<f64> = spectrum.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total <= f64::EPSILON {
        return Err(Error::SpectrumRecovery {
            reason: "projected reconstruction has zero trace".into(),
        });
    }
    let mut projected = ComplexMatrix::zeros(d, d)?;
    for (lambda, vector) in clamped.iter().zip(&spectrum.eigenvectors) {
        let weight = lambda / total;
        let amps = vector.amplitudes();
        for i in 0..d {
            for j in 0..d {
                let cur = projected.get(i, j);
                projected.set(i, j, cur + amps[i] * amps[j].conj() * weight);
            }
        }
    }
    let state = DensityOperator::new(projected)?;
    Ok(Reconstruction {
        raw,
        state,
        psd_defect,
        warned: psd_defect > psd_tol,
    })
}

/// How λ_max is obtained for verdict-style checks: the eigh oracle or the
/// iterative network search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMaxMethod {
    Eigh,
    Search {
        inits: usize,
        seed: u64,
        tol: f64,
        max_iter: usize,
    },
}

impl Default for LambdaMaxMethod {
    fn default() -> Self {
        LambdaMaxMethod::Eigh
    }
}

pub(crate) fn lambda_max(rho: &DensityOperator, method: LambdaMaxMethod) -> Result<f64> {
    match method {
        LambdaMaxMethod::Eigh => Ok(qmath::eigvalsh(rho.matrix())?[0]),
        LambdaMaxMethod::Search {
            inits,
            seed,
            tol,
            max_iter,
        } => {
            let runs = extremal_search_multistart(rho, SearchMode::Max, inits, seed, tol, max_iter)?;
            Ok(runs[0].eigenvalue)
        }
    }
}

/// Separability verdict for a two-qubit state with a maximally mixed
/// designated qubit: λ_max ≤ ½ means separable, beyond means entangled and
/// two-way distillable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparabilityVerdict {
    pub lambda_max: f64,
    pub entangled: bool,
}

/// Applies the eigenvalue criterion to a two-qubit state. `designated`
/// selects the qubit (0 or 1) whose reduced state must be maximally mixed
/// within 1e-6; the criterion is only valid there, so a violation is an
/// error carrying the deviation ‖Tr_partial ρ − I/2‖.
pub fn separability_check_2qubit(
    rho: &DensityOperator,
    designated: usize,
    method: LambdaMaxMethod,
) -> Result<SeparabilityVerdict> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    if designated > 1 {
        return Err(Error::ParamRange {
            name: "designated",
            value: designated as f64,
            range: "{0, 1}",
        });
    }
    let marginal = qmath::partial_trace(rho, &[2, 2], &[designated])?;
    let mixed = DensityOperator::maximally_mixed(2)?;
    let dev = marginal.matrix().frobenius_distance(mixed.matrix());
    if dev > 1e-6 {
        return Err(Error::MarginalNotMixed { dev });
    }
    let lambda_max = lambda_max(rho, method)?;
    Ok(SeparabilityVerdict {
        lambda_max,
        entangled: lambda_max > 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{eigvalsh, random_density, tensor, C_ONE};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn diag_density(values: &[f64]) -> DensityOperator {
        DensityOperator::new(ComplexMatrix::diag(values).unwrap()).unwrap()
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::new(2, 2, vec![C_ZERO, C_ONE, C_ONE, C_ZERO]).unwrap()
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::diag(&[1.0, -1.0]).unwrap()
    }

    fn bell_plus() -> DensityOperator {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![
            Complex64::new(h, 0.0),
            C_ZERO,
            C_ZERO,
            Complex64::new(h, 0.0),
        ];
        PureState::new(amps).unwrap().projector()
    }

    fn werner(w: f64) -> DensityOperator {
        let p = bell_plus();
        let mixed = DensityOperator::maximally_mixed(4).unwrap();
        let m = p
            .matrix()
            .scale(Complex64::new(w, 0.0))
            .add(&mixed.matrix().scale(Complex64::new(1.0 - w, 0.0)));
        DensityOperator::new(m).unwrap()
    }

    #[test]
    fn power_trace_vector_validation() {
        assert!(PowerTraceVector::new(vec![1.0, 0.5], 1e-9).is_ok());
        assert!(PowerTraceVector::new(vec![0.99, 0.5], 1e-9).is_err());
        // p₂ below the 1/d floor for d = 2.
        assert!(PowerTraceVector::new(vec![1.0, 0.4], 1e-9).is_err());
        assert!(PowerTraceVector::new(vec![1.0, 1.2], 1e-9).is_err());
    }

    #[test]
    fn spectrum_recovery_pure_state() {
        let p = PowerTraceVector::new(vec![1.0, 1.0], 1e-9).unwrap();
        let lambdas = spectrum_from_power_traces(&p).unwrap();
        assert_close(lambdas[0], 1.0, 1e-10);
        assert_close(lambdas[1], 0.0, 1e-10);
    }

    #[test]
    fn spectrum_recovery_maximally_mixed_qubit() {
        let p = PowerTraceVector::new(vec![1.0, 0.5], 1e-9).unwrap();
        let lambdas = spectrum_from_power_traces(&p).unwrap();
        assert_close(lambdas[0], 0.5, 1e-10);
        assert_close(lambdas[1], 0.5, 1e-10);
    }

    #[test]
    fn spectrum_recovery_qutrit_fixture() {
        // ρ = diag(0.5, 0.3, 0.2): p₂ = 0.38, p₃ = 0.16 by direct arithmetic.
        let p = PowerTraceVector::new(vec![1.0, 0.38, 0.16], 1e-9).unwrap();
        let lambdas = spectrum_from_power_traces(&p).unwrap();
        assert_close(lambdas[0], 0.5, 1e-9);
        assert_close(lambdas[1], 0.3, 1e-9);
        assert_close(lambdas[2], 0.2, 1e-9);
    }

    #[test]
    fn spectrum_recovery_matches_eigh_on_random_states() {
        for d in 2..=6usize {
            for seed in 0..10u64 {
                let rho = random_density(d, d, 9000 + seed * 10 + d as u64).unwrap();
                let p = PowerTraceVector::exact(&rho).unwrap();
                let recovered = spectrum_from_power_traces(&p).unwrap();
                let reference = eigvalsh(rho.matrix()).unwrap();
                for (r, e) in recovered.iter().zip(&reference) {
                    assert_close(*r, *e, 1e-8);
                }
            }
        }
    }

    #[test]
    fn spectrum_recovery_rejects_inconsistent_traces() {
        // p₂ = 1 with p₃ < 1 is unachievable; the recovered roots leave the
        // admissible window.
        let p = PowerTraceVector::new(vec![1.0, 1.0, 0.4], 0.5).unwrap();
        assert!(matches!(
            spectrum_from_power_traces(&p),
            Err(Error::SpectrumRecovery { .. })
        ));
    }

    #[test]
    fn search_finds_dominant_eigenpair() {
        let rho = diag_density(&[0.75, 0.25]);
        let plus = PureState::normalized(vec![C_ONE, C_ONE]).unwrap();
        let result = extremal_eigenvalue_search(
            &rho,
            SearchMode::Max,
            SearchInit::State(plus),
            1e-9,
            200,
        )
        .unwrap();
        assert!(result.converged);
        assert_close(result.eigenvalue, 0.75, 1e-9);
        // The state matches |0⟩ up to phase.
        assert_close(result.state.amplitudes()[0].norm(), 1.0, 1e-6);
    }

    #[test]
    fn search_on_isotropic_state_stops_immediately() {
        let rho = DensityOperator::maximally_mixed(3).unwrap();
        let result =
            extremal_eigenvalue_search(&rho, SearchMode::Max, SearchInit::Seed(5), 1e-9, 200)
                .unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 0);
        assert_close(result.eigenvalue, 1.0 / 3.0, 1e-12);
    }

    #[test]
    fn search_matches_eigh_for_min_mode() {
        let rho = random_density(8, 8, 314).unwrap();
        let reference = eigvalsh(rho.matrix()).unwrap();
        let runs =
            extremal_search_multistart(&rho, SearchMode::Min, 5, 271, 1e-9, 200).unwrap();
        assert_close(runs[0].eigenvalue, *reference.last().unwrap(), 1e-6);
    }

    #[test]
    fn search_trajectories_are_monotone() {
        let rho = random_density(6, 6, 5150).unwrap();
        for (mode, sign) in [(SearchMode::Max, 1.0), (SearchMode::Min, -1.0)] {
            let result =
                extremal_eigenvalue_search(&rho, mode, SearchInit::Seed(77), 1e-10, 200).unwrap();
            for step in result.trajectory.windows(2) {
                assert!(sign * (step[1] - step[0]) >= -1e-12);
            }
            // Residual certificate at convergence.
            let r = rho.matrix().mul_vec(result.state.amplitudes());
            let res: f64 = r
                .iter()
                .zip(result.state.amplitudes())
                .map(|(&x, &a)| (x - a * result.eigenvalue).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(result.converged);
            assert!(res < 1e-5, "residual {res}");
        }
    }

    #[test]
    fn expectation_identity_observable() {
        let rho = random_density(3, 3, 41).unwrap();
        let a = ComplexMatrix::identity(3).unwrap();
        assert_close(expectation_via_network(&a, &rho).unwrap(), 1.0, 1e-10);
    }

    #[test]
    fn expectation_pauli_z_fixture() {
        let rho = diag_density(&[0.75, 0.25]);
        assert_close(expectation_via_network(&pauli_z(), &rho).unwrap(), 0.5, 1e-10);
    }

    #[test]
    fn expectation_traceless_on_mixed() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        assert_close(expectation_via_network(&pauli_x(), &rho).unwrap(), 0.0, 1e-10);
    }

    #[test]
    fn expectation_offset_invariance() {
        let rho = random_density(4, 4, 88).unwrap();
        let mut a = ComplexMatrix::zeros(4, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let z = if i == j {
                    Complex64::new(i as f64 - 1.5, 0.0)
                } else {
                    Complex64::new(0.1 * (i + j) as f64, 0.05 * (i as f64 - j as f64))
                };
                a.set(i, j, z);
            }
        }
        let reference = expectation_via_network_with_offset(&a, &rho, 1e-6).unwrap();
        for delta in [0.1, 1.0] {
            let other = expectation_via_network_with_offset(&a, &rho, delta).unwrap();
            assert_close(other, reference, 1e-10);
        }
    }

    #[test]
    fn expectation_degenerate_embedding_detected() {
        // A = −I with δ = 0 gives γ = 1 and A′ = 0.
        let a = ComplexMatrix::identity(2).unwrap().scale(Complex64::new(-1.0, 0.0));
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        assert!(matches!(
            expectation_via_network_with_offset(&a, &rho, 0.0),
            Err(Error::DegenerateEmbedding)
        ));
    }

    #[test]
    fn reconstruct_maximally_mixed() {
        let rho = DensityOperator::maximally_mixed(2).unwrap();
        let rec = reconstruct_state(|psi| Ok(rho.expectation(psi)), 2, 1e-8).unwrap();
        assert!(rec
            .raw
            .frobenius_distance(rho.matrix())
            < 1e-12);
        assert!(!rec.warned);
    }

    #[test]
    fn reconstruct_random_state_exactly() {
        let rho = random_density(4, 4, 2024).unwrap();
        let rec = reconstruct_state(|psi| Ok(rho.expectation(psi)), 4, 1e-8).unwrap();
        assert!(rec.raw.frobenius_distance(rho.matrix()) < 1e-10);
        assert!(rec.state.matrix().frobenius_distance(rho.matrix()) < 1e-9);
    }

    #[test]
    fn reconstruct_bloch_fixture() {
        // Bloch vector (0.3, −0.2, 0.4): ϱ = ½(I + 0.3X − 0.2Y + 0.4Z) has
        // probe overlaps v₀₀ = 0.7, v₊ = 0.65, v₊ᵢ = 0.4, forward-computed.
        let rho = DensityOperator::new(
            ComplexMatrix::new(
                2,
                2,
                vec![
                    Complex64::new(0.7, 0.0),
                    Complex64::new(0.15, 0.1),
                    Complex64::new(0.15, -0.1),
                    Complex64::new(0.3, 0.0),
                ],
            )
            .unwrap(),
        )
        .unwrap();
        let mut seen = Vec::new();
        let rec = reconstruct_state(
            |psi| {
                let v = rho.expectation(psi);
                seen.push(v);
                Ok(v)
            },
            2,
            1e-8,
        )
        .unwrap();
        assert_close(seen[0], 0.7, 1e-12);
        assert_close(seen[1], 0.3, 1e-12);
        assert_close(seen[2], 0.65, 1e-12);
        assert_close(seen[3], 0.4, 1e-12);
        let bloch_x = 2.0 * rec.raw.get(0, 1).re;
        let bloch_y = -2.0 * rec.raw.get(0, 1).im;
        let bloch_z = rec.raw.get(0, 0).re - rec.raw.get(1, 1).re;
        assert_close(bloch_x, 0.3, 1e-10);
        assert_close(bloch_y, -0.2, 1e-10);
        assert_close(bloch_z, 0.4, 1e-10);
    }

    #[test]
    fn reconstruct_projects_noisy_input() {
        // A slightly non-PSD oracle; projection must clamp and warn.
        let rho = PureState::basis(2, 0).unwrap().projector();
        let rec = reconstruct_state(
            |psi| {
                let v = rho.expectation(psi);
                Ok(v - 0.02 * (1.0 - v))
            },
            2,
            1e-3,
        )
        .unwrap();
        assert!(rec.psd_defect > 0.0);
        assert!(rec.warned);
        let vals = eigvalsh(rec.state.matrix()).unwrap();
        assert!(vals.iter().all(|&l| l >= -1e-12));
        assert_close(rec.state.matrix().trace().re, 1.0, 1e-12);
    }

    #[test]
    fn separability_extremes() {
        let entangled = separability_check_2qubit(&bell_plus(), 0, LambdaMaxMethod::Eigh).unwrap();
        assert!(entangled.entangled);
        assert_close(entangled.lambda_max, 1.0, 1e-10);

        let mixed = DensityOperator::maximally_mixed(4).unwrap();
        let separable = separability_check_2qubit(&mixed, 1, LambdaMaxMethod::Eigh).unwrap();
        assert!(!separable.entangled);
        assert_close(separable.lambda_max, 0.25, 1e-12);
    }

    #[test]
    fn separability_werner_fixtures() {
        // λ_max = w + (1−w)/4.
        let hot = separability_check_2qubit(&werner(0.6), 0, LambdaMaxMethod::Eigh).unwrap();
        assert!(hot.entangled);
        assert_close(hot.lambda_max, 0.7, 1e-10);
        let cold = separability_check_2qubit(&werner(0.2), 0, LambdaMaxMethod::Eigh).unwrap();
        assert!(!cold.entangled);
        assert_close(cold.lambda_max, 0.4, 1e-10);
    }

    #[test]
    fn separability_search_method_agrees() {
        let verdict = separability_check_2qubit(
            &werner(0.6),
            0,
            LambdaMaxMethod::Search {
                inits: 5,
                seed: 7,
                tol: 1e-9,
                max_iter: 200,
            },
        )
        .unwrap();
        assert_close(verdict.lambda_max, 0.7, 1e-6);
        assert!(verdict.entangled);
    }

    #[test]
    fn separability_precondition_enforced() {
        // A product state with a non-mixed first qubit.
        let a = diag_density(&[0.9, 0.1]);
        let b = DensityOperator::maximally_mixed(2).unwrap();
        let product = DensityOperator::new(tensor(a.matrix(), b.matrix()).unwrap()).unwrap();
        assert!(matches!(
            separability_check_2qubit(&product, 0, LambdaMaxMethod::Eigh),
            Err(Error::MarginalNotMixed { .. })
        ));
        // The same state passes when the designated qubit is the mixed one.
        assert!(separability_check_2qubit(&product, 1, LambdaMaxMethod::Eigh).is_ok());
    }

    #[test]
    fn convexity_bound_on_probe_values() {
        let rho = random_density(5, 5, 606).unwrap();
        let vals = eigvalsh(rho.matrix()).unwrap();
        let (lo, hi) = (*vals.last().unwrap(), vals[0]);
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..50 {
            let psi = PureState::random(5, &mut rng).unwrap();
            let v = rho.expectation(&psi);
            assert!(v >= lo - 1e-10 && v <= hi + 1e-10);
        }
    }

    #[test]
    fn sampled_power_traces_feed_recovery() {
        let rho = diag_density(&[0.75, 0.25]);
        let plan = ShotPlan::new(1_000_000, 99, 0.95).unwrap();
        let p = PowerTraceVector::sampled(&rho, &plan).unwrap();
        let lambdas = spectrum_from_power_traces(&p).unwrap();
        assert_close(lambdas[0], 0.75, 0.01);
        assert_close(lambdas[1], 0.25, 0.01);
    }
}
