//! Finite-shot simulation of the control-qubit measurement: seeded Bernoulli
//! or binomial sampling of P0, visibility estimators v̂ = 2p̂₀ − 1 with
//! standard errors and Wilson confidence intervals, and Hoeffding shot
//! budgeting.
//!
//! Sampling is deterministic in the seed. Batch drivers derive one seed per
//! task from (master seed, task index) via [`derive_seed`], so results do not
//! depend on scheduling order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use statrs::function::erf::erf_inv;

use crate::error::{Error, Result};
use crate::networks::{run_interferometer, NetworkSpec};
use crate::qmath::DensityOperator;

/// Default shot count when a plan does not specify one.
pub const DEFAULT_SHOTS: u64 = 10_000;

/// Default confidence level for intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Above this shot count a binomial draw replaces the Bernoulli loop. The
/// binomial sampler is exact (rejection-based), not a normal approximation.
const BERNOULLI_CUTOFF: u64 = 100_000;

/// How many measurements to simulate, with which seed, and at what
/// confidence level intervals are reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotPlan {
    pub shots: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl ShotPlan {
    pub fn new(shots: u64, seed: u64, confidence: f64) -> Result<Self> {
        if shots < 1 {
            return Err(Error::InvalidShotPlan {
                reason: "shots must be at least 1".into(),
            });
        }
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(Error::InvalidShotPlan {
                reason: format!("confidence must lie in (0, 1), got {confidence}"),
            });
        }
        Ok(Self {
            shots,
            seed,
            confidence,
        })
    }

    /// Default plan (10⁴ shots, 95% confidence) with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            shots: DEFAULT_SHOTS,
            seed,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

/// A sampled estimate with its uncertainty. For visibility estimates,
/// point = 2·p0_hat − 1 and ci bounds are the Wilson interval mapped through
/// the same transform.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub point: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub shots: u64,
    pub p0_hat: f64,
}

impl EstimateResult {
    /// Pushes the estimate through the affine map x ↦ scale·x + offset,
    /// keeping the interval ordered. Used when a visibility carries a derived
    /// quantity (observable expectations). p0_hat stays raw.
    pub fn affine(&self, scale: f64, offset: f64) -> EstimateResult {
        let a = scale * self.ci_low + offset;
        let b = scale * self.ci_high + offset;
        EstimateResult {
            point: scale * self.point + offset,
            std_error: scale.abs() * self.std_error,
            ci_low: a.min(b),
            ci_high: a.max(b),
            shots: self.shots,
            p0_hat: self.p0_hat,
        }
    }
}

/// Simulates `plan.shots` measurements of the control qubit at outcome
/// probability p0. Returns (n0, n1) with n0 + n1 = shots, deterministic in
/// (p0, shots, seed) and distributionally Binomial(shots, p0).
pub fn sample_counts(p0: f64, plan: &ShotPlan) -> Result<(u64, u64)> {
    if !(0.0..=1.0).contains(&p0) || !p0.is_finite() {
        return Err(Error::ParamRange {
            name: "p0",
            value: p0,
            range: "[0, 1]",
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(plan.seed);
    let n0 = if plan.shots <= BERNOULLI_CUTOFF {
        let mut n0 = 0u64;
        for _ in 0..plan.shots {
            if rng.random::<f64>() < p0 {
                n0 += 1;
            }
        }
        n0
    } else {
        let binomial = Binomial::new(plan.shots, p0).expect("validated probability");
        binomial.sample(&mut rng)
    };
    Ok((n0, plan.shots - n0))
}

/// Runs the interferometer exactly, samples the measurement record, and
/// packages v̂ = 2p̂₀ − 1 with std_error = 2·√(p̂₀(1−p̂₀)/shots) and a Wilson
/// interval at plan.confidence.
pub fn estimate_visibility(
    spec: &NetworkSpec,
    rho: &DensityOperator,
    phi: f64,
    plan: &ShotPlan,
) -> Result<EstimateResult> {
    let p0 = run_interferometer(spec, rho, phi)?;
    let (n0, _) = sample_counts(p0, plan)?;
    Ok(estimate_from_counts(n0, plan))
}

/// Builds the EstimateResult for an observed count n0 out of plan.shots.
pub fn estimate_from_counts(n0: u64, plan: &ShotPlan) -> EstimateResult {
    let shots = plan.shots;
    let p_hat = n0 as f64 / shots as f64;
    let point = 2.0 * p_hat - 1.0;
    let std_error = 2.0 * (p_hat * (1.0 - p_hat) / shots as f64).sqrt();
    let (lo, hi) = wilson_bounds(p_hat, shots, plan.confidence);
    EstimateResult {
        point,
        std_error,
        ci_low: 2.0 * lo - 1.0,
        ci_high: 2.0 * hi - 1.0,
        shots,
        p0_hat: p_hat,
    }
}

/// Wilson score interval for a binomial proportion. Stays inside [0, 1] and
/// behaves sensibly at p̂ ∈ {0, 1}, where the normal interval collapses.
pub fn wilson_bounds(p_hat: f64, n: u64, confidence: f64) -> (f64, f64) {
    let z = std::f64::consts::SQRT_2 * erf_inv(confidence);
    let n = n as f64;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p_hat + z2 / (2.0 * n)) / denom;
    let half = z * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Smallest shot count N such that |v̂ − v| ≤ ε at the given confidence by
/// Hoeffding's inequality: N = ⌈2·ln(2/(1−confidence))/ε²⌉.
pub fn shots_for_precision(epsilon: f64, confidence: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 2.0) {
        return Err(Error::ParamRange {
            name: "epsilon",
            value: epsilon,
            range: "(0, 2]",
        });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::ParamRange {
            name: "confidence",
            value: confidence,
            range: "(0, 1)",
        });
    }
    let n = (2.0 * (2.0 / (1.0 - confidence)).ln() / (epsilon * epsilon)).ceil();
    Ok((n as u64).max(1))
}

/// Seed-splitting rule for batch tasks: a splitmix64 scramble of the master
/// seed offset by the task index. Fixed contract so parallel schedules and
/// sequential runs produce identical streams per task.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
