//! Exact per-environment fixation probabilities and annealed averages.
//!
//! For one environment the chain of the right-most mutant is a birth-death
//! chain on `{0..N}` absorbed at both ends, so the fixation probability from
//! state 1 has the gambler's-ruin closed form
//! `1 / sum_{k=0}^{N-1} prod_{j<=k} (q_j / p_j)`. We evaluate it as
//! `exp(-logsumexp(S_k))` with `S_k` the partial sums of `log(q_j/p_j)`,
//! which stays finite for N up to 1e6 and |S_k| up to ~700.

use crate::environment::{
    enumerate_conditioned, enumerate_landscapes, hop_profile, sample_landscape, HopProfile,
};
use crate::error::{Error, Result};
use crate::estimate::FixationEstimate;
use crate::math::{logsumexp, mean_and_std_error};
use crate::rng::StreamKey;
use rand::Rng;
use rayon::prelude::*;

/// Default step cap for the cross-validation chain simulator.
pub const DEFAULT_CHAIN_STEP_CAP: u64 = 1_000_000_000;

const MC_EXPERIMENT: &str = "annealed-mc";

/// Log-space weight ladder of one hop profile.
///
/// `partial_sums[k] = S_k = sum_{j=1..k} log((1 - beta_j) / beta_{j+1})`,
/// with `S_0 = 0`. The `diagnostic` ladder carries the pure random walk
/// `S~_k` with increments `log((1 - beta_{k+1}) / beta_{k+1})`, whose step
/// size is `delta' = log((1+delta)/(1-delta))` on the sign lattice; the two
/// ladders differ by a telescoping boundary term bounded by `delta'`.
#[derive(Debug, Clone)]
pub struct LogWeightLadder {
    pub partial_sums: Vec<f64>,
    pub diagnostic: Vec<f64>,
}

impl LogWeightLadder {
    pub fn new(profile: &HopProfile) -> Self {
        let n = profile.n_sites();
        let mut partial_sums = Vec::with_capacity(n);
        let mut diagnostic = Vec::with_capacity(n);
        let mut s = 0.0;
        let mut s_tilde = 0.0;
        partial_sums.push(0.0);
        diagnostic.push(0.0);
        for k in 1..n {
            // X_k = log(q_k / p_k) = log((1 - beta_k)/beta_{k+1}).
            let p = profile.hop[k - 1];
            s += ((1.0 - p) / p).ln();
            s_tilde += (1.0 - profile.beta[k]).ln() - profile.beta[k].ln();
            partial_sums.push(s);
            diagnostic.push(s_tilde);
        }
        LogWeightLadder { partial_sums, diagnostic }
    }

    /// Largest gap between the exact and diagnostic ladders. By the
    /// telescoping identity this is at most log((1+delta)/(1-delta)).
    pub fn max_gap(&self) -> f64 {
        self.partial_sums
            .iter()
            .zip(&self.diagnostic)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The random-walk step size of the diagnostic ladder.
pub fn delta_prime(delta: f64) -> f64 {
    ((1.0 + delta) / (1.0 - delta)).ln()
}

/// Gambler's-ruin fixation probability from state 1, log-sum-exp stabilized.
pub fn fixation_probability_exact(profile: &HopProfile) -> f64 {
    debug_assert!(profile.n_sites() >= 2);
    let ladder = LogWeightLadder::new(profile);
    (-logsumexp(&ladder.partial_sums)).exp()
}

fn check_mc_args(n: usize, delta: f64, replicates: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 sites, got {n}")));
    }
    crate::environment::check_delta(delta)?;
    if replicates < 2 {
        return Err(Error::domain(format!(
            "need at least 2 replicates, got {replicates}"
        )));
    }
    Ok(())
}

/// Exact annealed fixation probability by enumerating all 4^n environments.
pub fn annealed_exact(n: usize, delta: f64) -> Result<FixationEstimate> {
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 sites, got {n}")));
    }
    let mut values = Vec::new();
    let mut denom = 0u64;
    for (landscape, weight) in enumerate_landscapes(n, delta)? {
        values.push(fixation_probability_exact(&hop_profile(&landscape)));
        denom = *weight.denom();
    }
    let mean = crate::math::compensated_sum(&values) / denom as f64;
    Ok(FixationEstimate::exact(mean, n, delta))
}

/// Exact average over environments conditioned on equal sign sums.
/// Equals exactly 1/n for all even n and all delta.
pub fn conditioned_average(n: usize, delta: f64) -> Result<FixationEstimate> {
    let mut values = Vec::new();
    let mut denom = 0u64;
    for (landscape, weight) in enumerate_conditioned(n, delta)? {
        values.push(fixation_probability_exact(&hop_profile(&landscape)));
        denom = *weight.denom();
    }
    let mean = crate::math::compensated_sum(&values) / denom as f64;
    Ok(FixationEstimate::exact(mean, n, delta))
}

/// Monte Carlo annealed average. Each replicate is one fresh landscape with
/// its exact fixation probability (Rao-Blackwellized): strictly less
/// variance than running the chain, at the same cost, since the per-
/// environment formula is exact. Deterministic for fixed (seed, replicates)
/// independent of worker count: replicate r draws from its own stream and
/// the reduction runs in replicate order.
pub fn annealed_mc(n: usize, delta: f64, replicates: u64, seed: u64) -> Result<FixationEstimate> {
    check_mc_args(n, delta, replicates)?;
    let values: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = StreamKey::for_experiment(seed, MC_EXPERIMENT, r).rng();
            let landscape = sample_landscape(n, delta, &mut rng)
                .expect("arguments validated above");
            fixation_probability_exact(&hop_profile(&landscape))
        })
        .collect();
    let (mean, std_error) = mean_and_std_error(&values);
    Ok(FixationEstimate { mean, std_error, replicates, seed: Some(seed), n_sites: n, delta })
}

/// Simulate the absorbed right-most-mutant chain from state 1.
/// Returns true iff the chain hits N before 0.
pub fn chain_simulate<R: Rng + ?Sized>(
    profile: &HopProfile,
    rng: &mut R,
    step_cap: u64,
) -> Result<bool> {
    let n = profile.n_sites();
    let mut state = 1usize;
    for _ in 0..step_cap {
        if state == 0 {
            return Ok(false);
        }
        if state == n {
            return Ok(true);
        }
        if rng.random::<f64>() < profile.hop[state - 1] {
            state += 1;
        } else {
            state -= 1;
        }
    }
    match state {
        0 => Ok(false),
        s if s == n => Ok(true),
        _ => Err(Error::StepCapExceeded { cap: step_cap, replicate: None }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::FitnessLandscape;

    /// Independent oracle: solve the absorption equations
    /// h(k) = p_k h(k+1) + q_k h(k-1), h(0) = 0, h(N) = 1
    /// by the standard first-passage recursion (no log-space tricks).
    pub(crate) fn tridiagonal_fixation(profile: &HopProfile) -> f64 {
        let n = profile.n_sites();
        // h(1) = 1 / sum_{k=0}^{N-1} prod_{j=1}^{k} q_j/p_j, computed naively.
        let mut sum = 0.0;
        let mut prod = 1.0;
        sum += prod;
        for k in 1..n {
            let p = profile.hop[k - 1];
            prod *= (1.0 - p) / p;
            sum += prod;
        }
        1.0 / sum
    }

    #[test]
    fn neutral_profile_fixes_with_probability_one_over_n() {
        for n in [2usize, 5, 17, 100] {
            let profile = HopProfile::from_raw(vec![0.5; n], vec![0.5; n - 1]);
            let p = fixation_probability_exact(&profile);
            assert!((p - 1.0 / n as f64).abs() < 1e-14, "n={n} p={p}");
        }
    }

    #[test]
    fn two_site_profile_returns_its_hop() {
        let profile = HopProfile::from_raw(vec![0.5, 0.5], vec![0.37]);
        assert!((fixation_probability_exact(&profile) - 0.37).abs() < 1e-15);
    }

    #[test]
    fn matches_tridiagonal_solve() {
        let mut rng = StreamKey::for_experiment(11, "tri", 0).rng();
        let l = sample_landscape(5, 0.4, &mut rng).unwrap();
        let profile = hop_profile(&l);
        let a = fixation_probability_exact(&profile);
        let b = tridiagonal_fixation(&profile);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn annealed_exact_neutral_is_one_over_n() {
        for n in [2usize, 4, 7] {
            let e = annealed_exact(n, 0.0).unwrap();
            assert!((e.mean - 1.0 / n as f64).abs() < 1e-14);
            assert_eq!(e.std_error, 0.0);
            assert_eq!(e.replicates, 0);
        }
    }

    #[test]
    fn annealed_exact_two_sites_matches_sixteen_term_average() {
        // For N=2 the fixation probability is p_1 = beta_2/(beta_2 + 1 - beta_1).
        let delta = 0.5;
        let mut expected = 0.0;
        let mut count = 0;
        for (l, _) in enumerate_landscapes(2, delta).unwrap() {
            let b = hop_profile(&l);
            expected += b.beta[1] / (b.beta[1] + 1.0 - b.beta[0]);
            count += 1;
        }
        assert_eq!(count, 16);
        expected /= 16.0;
        let e = annealed_exact(2, delta).unwrap();
        assert!((e.mean - expected).abs() < 1e-14);
    }

    #[test]
    fn small_randomness_beats_neutral() {
        let e = annealed_exact(6, 0.05).unwrap();
        assert!(e.mean > 1.0 / 6.0);
    }

    #[test]
    fn conditioned_identity_examples() {
        let e = conditioned_average(4, 0.3).unwrap();
        assert!((e.mean - 0.25).abs() < 1e-10);
        let e = conditioned_average(6, 0.7).unwrap();
        assert!((e.mean - 1.0 / 6.0).abs() < 1e-10);
        let e = conditioned_average(2, 0.0).unwrap();
        assert_eq!(e.mean, 0.5);
        assert!(conditioned_average(5, 0.3).is_err());
    }

    #[test]
    fn mc_neutral_is_exact_with_zero_std_error() {
        let e = annealed_mc(8, 0.0, 100, 3).unwrap();
        assert!((e.mean - 0.125).abs() < 1e-15);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn mc_agrees_with_enumeration() {
        let exact = annealed_exact(8, 0.3).unwrap().mean;
        let mc = annealed_mc(8, 0.3, 100_000, 20250823).unwrap();
        assert!(
            (mc.mean - exact).abs() < 4.0 * mc.std_error,
            "mc {} +- {} vs exact {}",
            mc.mean,
            mc.std_error,
            exact
        );
    }

    #[test]
    fn ladder_gap_is_bounded_by_delta_prime() {
        for r in 0..200u64 {
            let mut rng = StreamKey::for_experiment(5, "ladder", r).rng();
            let delta = 0.9 * (r as f64 + 1.0) / 201.0;
            let l = sample_landscape(12, delta, &mut rng).unwrap();
            let ladder = LogWeightLadder::new(&hop_profile(&l));
            assert!(ladder.max_gap() <= delta_prime(delta) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn chain_with_hop_one_drifts_straight_to_fixation() {
        let n = 7;
        let profile = HopProfile::from_raw(vec![1.0; n], vec![1.0; n - 1]);
        let mut rng = StreamKey::new(0, 0, 0).rng();
        assert!(chain_simulate(&profile, &mut rng, (n - 1) as u64).unwrap());
    }

    #[test]
    fn chain_step_cap_errors_loudly() {
        let profile = HopProfile::from_raw(vec![0.5; 50], vec![0.5; 49]);
        let mut rng = StreamKey::new(1, 2, 3).rng();
        assert!(matches!(
            chain_simulate(&profile, &mut rng, 2),
            Err(Error::StepCapExceeded { cap: 2, .. })
        ));
    }

    #[test]
    fn chain_frequency_matches_exact_formula() {
        let mut rng = StreamKey::for_experiment(77, "chain-env", 0).rng();
        let l = sample_landscape(6, 0.4, &mut rng).unwrap();
        let profile = hop_profile(&l);
        let exact = fixation_probability_exact(&profile);
        let reps = 100_000u64;
        let mut wins = 0u64;
        for r in 0..reps {
            let mut rng = StreamKey::for_experiment(77, "chain-run", r).rng();
            if chain_simulate(&profile, &mut rng, DEFAULT_CHAIN_STEP_CAP).unwrap() {
                wins += 1;
            }
        }
        let freq = wins as f64 / reps as f64;
        let se = (exact * (1.0 - exact) / reps as f64).sqrt();
        assert!((freq - exact).abs() < 4.0 * se, "freq {freq} exact {exact} se {se}");
    }

    #[test]
    fn swap_invariance_of_annealed_average() {
        // Swapping roles permutes the enumeration, so the annealed value is
        // identical; spot check by explicit re-average.
        let delta = 0.6;
        let items: Vec<FitnessLandscape> =
            enumerate_landscapes(3, delta).unwrap().map(|(l, _)| l).collect();
        let direct: f64 = items
            .iter()
            .map(|l| fixation_probability_exact(&hop_profile(l)))
            .sum::<f64>();
        let swapped: f64 = items
            .iter()
            .map(|l| fixation_probability_exact(&hop_profile(&l.swap_roles())))
            .sum::<f64>();
        assert!((direct - swapped).abs() < 1e-9);
    }
}
