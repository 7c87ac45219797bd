//! Quantum channels as Kraus maps, the channel-state duality that encodes a
//! channel in a single bipartite density operator, the inverse map from that
//! state back to channel action, and the two-way capacity criterion for
//! qubit channels.

use num_complex::Complex64;

use crate::analysis::{lambda_max, LambdaMaxMethod};
use crate::error::{Error, Result};
use crate::qmath::{
    partial_trace_matrix, tensor, ComplexMatrix, DensityOperator, C_ZERO,
};

/// Completeness and marginal checks accept deviations up to this bound.
pub const CHANNEL_TOL: f64 = 1e-10;

/// A completely positive trace-preserving map given by Kraus operators
/// {K_i} with Σ K†K = I. Input and output dimensions are equal.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
    label: String,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>, label: impl Into<String>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return Err(Error::EmptyKraus);
        };
        if !first.is_square() {
            return Err(Error::NotSquare {
                rows: first.rows(),
                cols: first.cols(),
            });
        }
        let dim = first.rows();
        for k in &kraus {
            if k.rows() != dim || k.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.rows().max(k.cols()),
                });
            }
        }
        let mut sum = ComplexMatrix::zeros(dim, dim)?;
        for k in &kraus {
            sum = sum.add(&k.adjoint().matmul(k));
        }
        let identity = ComplexMatrix::identity(dim)?;
        let max_dev = sum.sub(&identity).max_abs();
        if max_dev > CHANNEL_TOL {
            return Err(Error::KrausIncomplete { max_dev });
        }
        Ok(Self {
            dim,
            kraus,
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(vec![ComplexMatrix::identity(d)?], "identity")
    }

    /// Λ(ρ) = (1−p)ρ + p·I/d: full depolarization with probability p.
    /// Kraus set {√(1−p)·I} ∪ {√(p/d)·|i⟩⟨j| : i, j}.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        check_unit_interval("p", p)?;
        let mut kraus = Vec::with_capacity(1 + d * d);
        kraus.push(ComplexMatrix::identity(d)?.scale(Complex64::new((1.0 - p).sqrt(), 0.0)));
        if p > 0.0 {
            let amp = Complex64::new((p / d as f64).sqrt(), 0.0);
            for i in 0..d {
                for j in 0..d {
                    let mut k = ComplexMatrix::zeros(d, d)?;
                    k.set(i, j, amp);
                    kraus.push(k);
                }
            }
        }
        Self::new(kraus, format!("depolarizing(p={p})"))
    }

    /// Scales every off-diagonal element by (1−p), keeping populations.
    /// Kraus set {√(1−p)·I} ∪ {√p·|j⟩⟨j| : j}.
    pub fn dephasing(d: usize, p: f64) -> Result<Self> {
        check_unit_interval("p", p)?;
        let mut kraus = Vec::with_capacity(1 + d);
        kraus.push(ComplexMatrix::identity(d)?.scale(Complex64::new((1.0 - p).sqrt(), 0.0)));
        if p > 0.0 {
            let amp = Complex64::new(p.sqrt(), 0.0);
            for j in 0..d {
                let mut k = ComplexMatrix::zeros(d, d)?;
                k.set(j, j, amp);
                kraus.push(k);
            }
        }
        Self::new(kraus, format!("dephasing(p={p})"))
    }

    /// Qubit energy relaxation toward |0⟩ with decay probability γ.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_unit_interval("gamma", gamma)?;
        let k0 = ComplexMatrix::new(
            2,
            2,
            vec![
                Complex64::new(1.0, 0.0),
                C_ZERO,
                C_ZERO,
                Complex64::new((1.0 - gamma).sqrt(), 0.0),
            ],
        )?;
        let k1 = ComplexMatrix::new(
            2,
            2,
            vec![C_ZERO, Complex64::new(gamma.sqrt(), 0.0), C_ZERO, C_ZERO],
        )?;
        Self::new(vec![k0, k1], format!("amplitude_damping(gamma={gamma})"))
    }

    /// Coherent evolution ρ → UρU†.
    pub fn unitary(u: ComplexMatrix, label: impl Into<String>) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::NotSquare {
                rows: u.rows(),
                cols: u.cols(),
            });
        }
        let max_dev = u.unitarity_deviation();
        if max_dev > CHANNEL_TOL {
            return Err(Error::NotUnitary { max_dev });
        }
        Self::new(vec![u], label)
    }

    /// Parses a catalog descriptor: "identity", "depolarizing:p",
    /// "dephasing:p", or "amplitude_damping:g" (the last requires d = 2).
    pub fn from_catalog(spec: &str, d: usize) -> Result<Self> {
        let unknown = || Error::UnknownChannel {
            spec: spec.to_string(),
        };
        let (name, param) = match spec.split_once(':') {
            Some((name, raw)) => {
                let value: f64 = raw.trim().parse().map_err(|_| unknown())?;
                (name.trim(), Some(value))
            }
            None => (spec.trim(), None),
        };
        match (name, param) {
            ("identity", None) => Self::identity(d),
            ("depolarizing", Some(p)) => Self::depolarizing(d, p),
            ("dephasing", Some(p)) => Self::dephasing(d, p),
            ("amplitude_damping", Some(g)) => {
                if d != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: d });
                }
                Self::amplitude_damping(g)
            }
            _ => Err(unknown()),
        }
    }
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || !value.is_finite() {
        return Err(Error::ParamRange {
            name,
            value,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Σ K ρ K†.
pub fn apply_channel(ch: &KrausChannel, rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.dim() != ch.dim {
        return Err(Error::DimensionMismatch {
            expected: ch.dim,
            got: rho.dim(),
        });
    }
    let mut out = ComplexMatrix::zeros(ch.dim, ch.dim)?;
    for k in &ch.kraus {
        out = out.add(&k.matmul(rho.matrix()).matmul(&k.adjoint()));
    }
    DensityOperator::new(out)
}

/// The channel's dual state on reference ⊗ output: one share of a maximally
/// entangled pair is sent through the channel, ϱ_Λ = (I⊗Λ)(P₊). Tracing out
/// the output subsystem always returns I/d (trace preservation), which is
/// the validated invariant.
#[derive(Debug, Clone)]
pub struct ChoiState {
    dim: usize,
    state: DensityOperator,
}

impl ChoiState {
    pub fn new(state: DensityOperator) -> Result<Self> {
        let n = state.dim();
        let d = (n as f64).sqrt().round() as usize;
        if d < 1 || d * d != n {
            return Err(Error::BadFactorization {
                dims: vec![d.max(1), d.max(1)],
                dim: n,
            });
        }
        let marginal = partial_trace_matrix(state.matrix(), &[d, d], &[0])?;
        let mixed = ComplexMatrix::identity(d)?.scale(Complex64::new(1.0 / d as f64, 0.0));
        let dev = marginal.sub(&mixed).max_abs();
        if dev > CHANNEL_TOL {
            return Err(Error::ChoiMarginal { dev });
        }
        Ok(Self { dim: d, state })
    }

    /// Dimension d of the channel the state encodes (the state lives on d²).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self) -> &DensityOperator {
        &self.state
    }
}

/// ϱ_Λ = Σ_K |φ_K⟩⟨φ_K| with |φ_K⟩ = (I⊗K)|Φ⁺⟩; amplitude of |φ_K⟩ at
/// basis index a·d + b is K[b,a]/√d.
pub fn choi_state(ch: &KrausChannel) -> Result<ChoiState> {
    let d = ch.dim;
    let n = d * d;
    let scale = 1.0 / (d as f64).sqrt();
    let mut out = ComplexMatrix::zeros(n, n)?;
    for k in &ch.kraus {
        let mut phi = vec![C_ZERO; n];
        for a in 0..d {
            for b in 0..d {
                phi[a * d + b] = k.get(b, a) * scale;
            }
        }
        for r in 0..n {
            if phi[r] == C_ZERO {
                continue;
            }
            for c in 0..n {
                let cur = out.get(r, c);
                out.set(r, c, cur + phi[r] * phi[c].conj());
            }
        }
    }
    ChoiState::new(DensityOperator::new(out)?)
}

/// Recovers the channel action from its dual state:
/// Λ(ρ) = d·Tr_ref[(ρᵀ ⊗ I)·ϱ_Λ].
pub fn channel_from_choi(choi: &ChoiState, rho: &DensityOperator) -> Result<DensityOperator> {
    let d = choi.dim;
    if rho.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho.dim(),
        });
    }
    let lifted = tensor(&rho.matrix().transpose(), &ComplexMatrix::identity(d)?)?;
    let product = lifted.matmul(choi.state.matrix());
    let reduced = partial_trace_matrix(&product, &[d, d], &[1])?;
    DensityOperator::new(reduced.scale(Complex64::new(d as f64, 0.0)))
}

/// Verdict of the two-way capacity criterion for qubit channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityVerdict {
    pub lambda_max: f64,
    pub positive: bool,
}

/// A qubit channel has positive two-way capacity exactly when its dual
/// state has an eigenvalue beyond 1/2. Stated for d = 2 only; other
/// dimensions are out of the criterion's scope.
pub fn two_way_capacity_positive(
    choi: &ChoiState,
    method: LambdaMaxMethod,
) -> Result<CapacityVerdict> {
    if choi.dim != 2 {
        return Err(Error::CriterionScope { dim: choi.dim });
    }
    let lambda_max = lambda_max(&choi.state, method)?;
    Ok(CapacityVerdict {
        lambda_max,
        positive: lambda_max > 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks;
    use crate::qmath::{
        density_violations, eigvalsh, random_density, random_unitary, PureState, C_ONE,
    };

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn diag_density(values: &[f64]) -> DensityOperator {
        DensityOperator::new(ComplexMatrix::diag(values).unwrap()).unwrap()
    }

    fn plus_state() -> DensityOperator {
        PureState::normalized(vec![C_ONE, C_ONE]).unwrap().projector()
    }

    fn max_entangled_projector(d: usize) -> ComplexMatrix {
        let n = d * d;
        let amp = Complex64::new(1.0 / d as f64, 0.0);
        let mut m = ComplexMatrix::zeros(n, n).unwrap();
        for k in 0..d {
            for l in 0..d {
                m.set(k * d + k, l * d + l, amp);
            }
        }
        m
    }

    #[test]
    fn identity_channel_preserves_states() {
        let ch = KrausChannel::identity(3).unwrap();
        let rho = random_density(3, 3, 11).unwrap();
        let out = apply_channel(&ch, &rho).unwrap();
        assert!(out.matrix().frobenius_distance(rho.matrix()) < 1e-14);
    }

    #[test]
    fn full_depolarizing_sends_everything_to_mixed() {
        let ch = KrausChannel::depolarizing(2, 1.0).unwrap();
        let rho = random_density(2, 1, 5).unwrap();
        let out = apply_channel(&ch, &rho).unwrap();
        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        assert!(out.matrix().frobenius_distance(mixed.matrix()) < 1e-12);
    }

    #[test]
    fn depolarizing_interpolates_linearly() {
        let ch = KrausChannel::depolarizing(3, 0.4).unwrap();
        let rho = random_density(3, 3, 21).unwrap();
        let out = apply_channel(&ch, &rho).unwrap();
        let expected = rho
            .matrix()
            .scale(Complex64::new(0.6, 0.0))
            .add(&ComplexMatrix::identity(3).unwrap().scale(Complex64::new(0.4 / 3.0, 0.0)));
        assert!(out.matrix().frobenius_distance(&expected) < 1e-12);
    }

    #[test]
    fn depolarizing_zero_acts_as_identity() {
        let ch = KrausChannel::depolarizing(2, 0.0).unwrap();
        for seed in [3u64, 4, 5] {
            let rho = random_density(2, 2, seed).unwrap();
            let out = apply_channel(&ch, &rho).unwrap();
            assert!(out.matrix().frobenius_distance(rho.matrix()) < 1e-14);
        }
    }

    #[test]
    fn amplitude_damping_fixture() {
        let ch = KrausChannel::amplitude_damping(0.3).unwrap();
        let excited = PureState::basis(2, 1).unwrap().projector();
        let out = apply_channel(&ch, &excited).unwrap();
        assert!(out.matrix().frobenius_distance(&ComplexMatrix::diag(&[0.3, 0.7]).unwrap()) < 1e-12);
        // Not unital: the maximally mixed state gains ground population.
        let mixed = DensityOperator::maximally_mixed(2).unwrap();
        let warmed = apply_channel(&ch, &mixed).unwrap();
        assert!(
            warmed
                .matrix()
                .frobenius_distance(&ComplexMatrix::diag(&[0.65, 0.35]).unwrap())
                < 1e-12
        );
    }

    #[test]
    fn full_amplitude_damping_resets_to_ground() {
        let ch = KrausChannel::amplitude_damping(1.0).unwrap();
        let rho = random_density(2, 2, 77).unwrap();
        let out = apply_channel(&ch, &rho).unwrap();
        let ground = PureState::basis(2, 0).unwrap().projector();
        assert!(out.matrix().frobenius_distance(ground.matrix()) < 1e-12);
    }

    #[test]
    fn dephasing_shrinks_off_diagonal() {
        let ch = KrausChannel::dephasing(2, 0.5).unwrap();
        let out = apply_channel(&ch, &plus_state()).unwrap();
        assert_close(out.matrix().get(0, 1).re, 0.25, 1e-12);
        assert_close(out.matrix().get(0, 0).re, 0.5, 1e-12);
    }

    #[test]
    fn kraus_completeness_enforced() {
        let half = ComplexMatrix::identity(2).unwrap().scale(Complex64::new(0.5, 0.0));
        assert!(matches!(
            KrausChannel::new(vec![half], "broken"),
            Err(Error::KrausIncomplete { .. })
        ));
        assert!(matches!(
            KrausChannel::new(vec![], "empty"),
            Err(Error::EmptyKraus)
        ));
    }

    #[test]
    fn catalog_parsing() {
        assert_eq!(KrausChannel::from_catalog("identity", 3).unwrap().dim(), 3);
        let dep = KrausChannel::from_catalog("depolarizing:0.8", 2).unwrap();
        assert_eq!(dep.label(), "depolarizing(p=0.8)");
        assert!(KrausChannel::from_catalog("amplitude_damping:0.3", 2).is_ok());
        assert!(matches!(
            KrausChannel::from_catalog("amplitude_damping:0.3", 3),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            KrausChannel::from_catalog("squeeze:0.1", 2),
            Err(Error::UnknownChannel { .. })
        ));
        assert!(matches!(
            KrausChannel::from_catalog("depolarizing:sideways", 2),
            Err(Error::UnknownChannel { .. })
        ));
        assert!(matches!(
            KrausChannel::from_catalog("depolarizing:1.5", 2),
            Err(Error::ParamRange { .. })
        ));
    }

    #[test]
    fn choi_of_identity_is_max_entangled() {
        let choi = choi_state(&KrausChannel::identity(2).unwrap()).unwrap();
        assert!(choi.state().matrix().frobenius_distance(&max_entangled_projector(2)) < 1e-12);
        assert_close(eigvalsh(choi.state().matrix()).unwrap()[0], 1.0, 1e-12);
    }

    #[test]
    fn choi_of_depolarizing_matches_formula() {
        let p = 0.3;
        let choi = choi_state(&KrausChannel::depolarizing(2, p).unwrap()).unwrap();
        let expected = max_entangled_projector(2)
            .scale(Complex64::new(1.0 - p, 0.0))
            .add(&ComplexMatrix::identity(4).unwrap().scale(Complex64::new(p / 4.0, 0.0)));
        assert!(choi.state().matrix().frobenius_distance(&expected) < 1e-12);
        assert_close(
            eigvalsh(choi.state().matrix()).unwrap()[0],
            1.0 - 3.0 * p / 4.0,
            1e-12,
        );
    }

    #[test]
    fn choi_of_full_dephasing_fixture() {
        let choi = choi_state(&KrausChannel::dephasing(2, 1.0).unwrap()).unwrap();
        let expected = ComplexMatrix::diag(&[0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(choi.state().matrix().frobenius_distance(&expected) < 1e-12);
    }

    #[test]
    fn choi_marginal_is_mixed_for_catalog_and_unitaries() {
        let mut channels = vec![
            KrausChannel::identity(2).unwrap(),
            KrausChannel::depolarizing(2, 0.37).unwrap(),
            KrausChannel::dephasing(2, 0.8).unwrap(),
            KrausChannel::amplitude_damping(0.45).unwrap(),
            KrausChannel::depolarizing(3, 0.2).unwrap(),
            KrausChannel::dephasing(4, 0.6).unwrap(),
        ];
        for seed in 0..4u64 {
            let d = 2 + (seed as usize % 2);
            let u = random_unitary(d, 300 + seed).unwrap();
            channels.push(KrausChannel::unitary(u, format!("u{seed}")).unwrap());
        }
        for ch in &channels {
            let d = ch.dim();
            let choi = choi_state(ch).unwrap();
            // Constructor enforcement is the contract; re-check explicitly.
            let marginal =
                partial_trace_matrix(choi.state().matrix(), &[d, d], &[0]).unwrap();
            let mixed =
                ComplexMatrix::identity(d).unwrap().scale(Complex64::new(1.0 / d as f64, 0.0));
            assert!(marginal.sub(&mixed).max_abs() < 1e-10, "{}", ch.label());
            assert!(density_violations(choi.state().matrix()).is_valid());
        }
    }

    #[test]
    fn amplitude_damping_output_marginal_is_not_mixed() {
        // Tracing out the reference instead gives Λ(I/2); for damping this
        // is biased toward the ground state, pinning the subsystem order.
        let choi = choi_state(&KrausChannel::amplitude_damping(0.3).unwrap()).unwrap();
        let output_side = partial_trace_matrix(choi.state().matrix(), &[2, 2], &[1]).unwrap();
        assert!(
            output_side.frobenius_distance(&ComplexMatrix::diag(&[0.65, 0.35]).unwrap()) < 1e-12
        );
    }

    #[test]
    fn choi_roundtrip_reproduces_channel_action() {
        let mut channels = vec![
            KrausChannel::identity(2).unwrap(),
            KrausChannel::depolarizing(2, 0.5).unwrap(),
            KrausChannel::dephasing(2, 0.35).unwrap(),
            KrausChannel::amplitude_damping(0.6).unwrap(),
            KrausChannel::depolarizing(3, 0.25).unwrap(),
        ];
        channels.push(
            KrausChannel::unitary(random_unitary(3, 17).unwrap(), "haar(d=3)").unwrap(),
        );
        for (i, ch) in channels.iter().enumerate() {
            let d = ch.dim();
            let choi = choi_state(ch).unwrap();
            for seed in 0..5u64 {
                let rho = random_density(d, d, 900 + 10 * i as u64 + seed).unwrap();
                let direct = apply_channel(ch, &rho).unwrap();
                let via_choi = channel_from_choi(&choi, &rho).unwrap();
                assert!(
                    direct.matrix().frobenius_distance(via_choi.matrix()) < 1e-10,
                    "{}",
                    ch.label()
                );
            }
        }
    }

    #[test]
    fn choi_inversion_fixture_depolarizing_half() {
        let choi = choi_state(&KrausChannel::depolarizing(2, 0.5).unwrap()).unwrap();
        let ground = PureState::basis(2, 0).unwrap().projector();
        let out = channel_from_choi(&choi, &ground).unwrap();
        assert!(out.matrix().frobenius_distance(&ComplexMatrix::diag(&[0.75, 0.25]).unwrap()) < 1e-12);
    }

    #[test]
    fn unitary_choi_purity_via_network() {
        let u = random_unitary(2, 404).unwrap();
        let choi = choi_state(&KrausChannel::unitary(u, "haar(d=2)").unwrap()).unwrap();
        let purity = networks::power_trace(choi.state(), 2).unwrap();
        assert_close(purity, 1.0, 1e-10);
    }

    #[test]
    fn choi_state_rejects_wrong_shapes() {
        let not_square_dim = random_density(3, 3, 1).unwrap();
        assert!(matches!(
            ChoiState::new(not_square_dim),
            Err(Error::BadFactorization { .. })
        ));
        // Product state |0⟩⟨0|⊗|0⟩⟨0| has reference marginal |0⟩⟨0| ≠ I/2.
        let product = diag_density(&[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            ChoiState::new(product),
            Err(Error::ChoiMarginal { .. })
        ));
    }

    #[test]
    fn capacity_extremes() {
        let ident = choi_state(&KrausChannel::identity(2).unwrap()).unwrap();
        let verdict = two_way_capacity_positive(&ident, LambdaMaxMethod::Eigh).unwrap();
        assert!(verdict.positive);
        assert_close(verdict.lambda_max, 1.0, 1e-12);

        let dead = choi_state(&KrausChannel::depolarizing(2, 1.0).unwrap()).unwrap();
        let verdict = two_way_capacity_positive(&dead, LambdaMaxMethod::Eigh).unwrap();
        assert!(!verdict.positive);
        assert_close(verdict.lambda_max, 0.25, 1e-12);
    }

    #[test]
    fn capacity_flips_at_two_thirds() {
        for (p, expect) in [(2.0 / 3.0 - 1e-3, true), (2.0 / 3.0 + 1e-3, false)] {
            let choi = choi_state(&KrausChannel::depolarizing(2, p).unwrap()).unwrap();
            let verdict = two_way_capacity_positive(&choi, LambdaMaxMethod::Eigh).unwrap();
            assert_eq!(verdict.positive, expect, "p = {p}");
            assert_close(verdict.lambda_max, 1.0 - 0.75 * p, 1e-12);
        }
    }

    #[test]
    fn capacity_scope_is_qubit_only() {
        let choi = choi_state(&KrausChannel::identity(3).unwrap()).unwrap();
        assert!(matches!(
            two_way_capacity_positive(&choi, LambdaMaxMethod::Eigh),
            Err(Error::CriterionScope { dim: 3 })
        ));
    }

    #[test]
    fn capacity_search_method_agrees() {
        let choi = choi_state(&KrausChannel::depolarizing(2, 0.4).unwrap()).unwrap();
        let verdict = two_way_capacity_positive(
            &choi,
            LambdaMaxMethod::Search {
                inits: 5,
                seed: 23,
                tol: 1e-9,
                max_iter: 200,
            },
        )
        .unwrap();
        assert_close(verdict.lambda_max, 0.7, 1e-6);
        assert!(verdict.positive);
    }
}
