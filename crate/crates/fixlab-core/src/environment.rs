//! Random fitness landscapes and the hop probabilities they induce.
//!
//! A landscape assigns each site a normal fitness `1 + delta * b` and a
//! mutant fitness `1 + delta * b'` with independent Rademacher signs
//! `b, b'`. The per-site success probability of a mutant reproduction event
//! is `beta_k = mutant_k / (mutant_k + normal_k)`, and the right-most-mutant
//! chain moves up from state `k` with probability
//! `p_k = beta_{k+1} / (beta_{k+1} + (1 - beta_k))`.
//!
//! Naming note: we take `beta_k` to be the *mutant*-favoring ratio, which is
//! what the reproduction dynamics use. Because both sign families are IID
//! and symmetric, every environment-averaged quantity is invariant under
//! swapping the two roles, so this choice cannot affect annealed results.

use crate::error::{Error, Result};
use num_rational::Ratio;
use rand::Rng;
use std::fmt;
use std::str::FromStr;

/// Default cap on exact enumeration: 4^10 is about a million environments.
pub const DEFAULT_ENUMERATION_CAP: u32 = 10;

/// One realization of the random environment.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessLandscape {
    delta: f64,
    /// Rademacher signs of the normal fitness, one per site.
    normal_signs: Vec<i8>,
    /// Rademacher signs of the mutant fitness, one per site.
    mutant_signs: Vec<i8>,
}

fn check_signs(signs: &[i8]) -> Result<()> {
    if signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::domain("signs must be +1 or -1"));
    }
    Ok(())
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::domain(format!(
            "delta must lie in [0, 1), got {delta}"
        )));
    }
    Ok(())
}

impl FitnessLandscape {
    pub fn new(delta: f64, normal_signs: Vec<i8>, mutant_signs: Vec<i8>) -> Result<Self> {
        check_delta(delta)?;
        if normal_signs.len() != mutant_signs.len() || normal_signs.is_empty() {
            return Err(Error::domain("sign arrays must be nonempty and equal length"));
        }
        check_signs(&normal_signs)?;
        check_signs(&mutant_signs)?;
        Ok(FitnessLandscape { delta, normal_signs, mutant_signs })
    }

    pub fn n_sites(&self) -> usize {
        self.normal_signs.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn normal_signs(&self) -> &[i8] {
        &self.normal_signs
    }

    pub fn mutant_signs(&self) -> &[i8] {
        &self.mutant_signs
    }

    /// Normal fitness at `site` (0-based).
    pub fn normal_fitness(&self, site: usize) -> f64 {
        1.0 + self.delta * f64::from(self.normal_signs[site])
    }

    /// Mutant fitness at `site` (0-based).
    pub fn mutant_fitness(&self, site: usize) -> f64 {
        1.0 + self.delta * f64::from(self.mutant_signs[site])
    }

    /// Landscape with the normal and mutant roles exchanged.
    pub fn swap_roles(&self) -> Self {
        FitnessLandscape {
            delta: self.delta,
            normal_signs: self.mutant_signs.clone(),
            mutant_signs: self.normal_signs.clone(),
        }
    }

    /// Probability that a reproduction event at `site` installs the mutant.
    ///
    /// Computed so that swapping roles yields exactly `1 - beta` in floating
    /// point: the smaller fitness is the one divided by the sum, the larger
    /// one goes through the complement.
    pub fn beta(&self, site: usize) -> f64 {
        let mu = self.mutant_fitness(site);
        let nu = self.normal_fitness(site);
        let s = mu + nu;
        if mu <= nu {
            mu / s
        } else {
            1.0 - nu / s
        }
    }

    /// Canonical packed encoding of the sign arrays, for dedup checks.
    /// Two bits per site: bit 0 normal, bit 1 mutant (set = +1).
    pub fn canonical_bits(&self) -> u64 {
        let mut bits = 0u64;
        for k in 0..self.n_sites() {
            if self.normal_signs[k] > 0 {
                bits |= 1 << (2 * k);
            }
            if self.mutant_signs[k] > 0 {
                bits |= 1 << (2 * k + 1);
            }
        }
        bits
    }
}

fn signs_str(signs: &[i8]) -> String {
    signs.iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()
}

fn parse_signs(s: &str) -> Result<Vec<i8>> {
    s.chars()
        .map(|c| match c {
            '+' => Ok(1),
            '-' => Ok(-1),
            other => Err(Error::Parse(format!("bad sign character {other:?}"))),
        })
        .collect()
}

/// Canonical text form: `N=<n> delta=<d> B=<+-...> B'=<+-...>`.
impl fmt::Display for FitnessLandscape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} delta={} B={} B'={}",
            self.n_sites(),
            self.delta,
            signs_str(&self.normal_signs),
            signs_str(&self.mutant_signs)
        )
    }
}

impl FromStr for FitnessLandscape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut n = None;
        let mut delta = None;
        let mut b = None;
        let mut bp = None;
        for tok in s.split_whitespace() {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {tok:?}")))?;
            match key {
                "N" => n = Some(val.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?),
                "delta" => {
                    delta = Some(val.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?)
                }
                "B" => b = Some(parse_signs(val)?),
                "B'" => bp = Some(parse_signs(val)?),
                other => return Err(Error::Parse(format!("unknown field {other:?}"))),
            }
        }
        let (n, delta, b, bp) = match (n, delta, b, bp) {
            (Some(n), Some(d), Some(b), Some(bp)) => (n, d, b, bp),
            _ => return Err(Error::Parse("missing field in landscape encoding".into())),
        };
        if b.len() != n || bp.len() != n {
            return Err(Error::Parse("sign array length disagrees with N".into()));
        }
        FitnessLandscape::new(delta, b, bp)
    }
}

/// Per-site and per-state hop probabilities derived from one landscape.
#[derive(Debug, Clone, PartialEq)]
pub struct HopProfile {
    /// `beta[k]`: probability a reproduction event at site k+1 installs the mutant.
    pub beta: Vec<f64>,
    /// `hop[k-1] = p_k` for interior states k = 1..N-1.
    pub hop: Vec<f64>,
}

impl HopProfile {
    pub fn n_sites(&self) -> usize {
        self.beta.len()
    }

    /// Build from explicit arrays without range validation. Intended for
    /// synthetic profiles in tests (e.g. hop = 1 deterministic drift).
    pub fn from_raw(beta: Vec<f64>, hop: Vec<f64>) -> Self {
        HopProfile { beta, hop }
    }
}

/// Derive `beta` and `p_k` arrays for one landscape.
pub fn hop_profile(landscape: &FitnessLandscape) -> HopProfile {
    let n = landscape.n_sites();
    let beta: Vec<f64> = (0..n).map(|k| landscape.beta(k)).collect();
    let hop: Vec<f64> = (1..n)
        .map(|k| beta[k] / (beta[k] + (1.0 - beta[k - 1])))
        .collect();
    HopProfile { beta, hop }
}

/// Draw a landscape with 2N independent fair sign flips.
pub fn sample_landscape<R: Rng + ?Sized>(
    n: usize,
    delta: f64,
    rng: &mut R,
) -> Result<FitnessLandscape> {
    check_delta(delta)?;
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 sites, got {n}")));
    }
    let mut draw = |len: usize| -> Vec<i8> {
        (0..len).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
    };
    let normal_signs = draw(n);
    let mutant_signs = draw(n);
    Ok(FitnessLandscape { delta, normal_signs, mutant_signs })
}

/// Exact enumeration weight.
pub type Weight = Ratio<u64>;

fn landscape_from_index(n: usize, delta: f64, idx: u64) -> FitnessLandscape {
    // Low 2k-th bit: normal sign at site k; bit 2k+1: mutant sign.
    let sign = |bit: bool| if bit { 1i8 } else { -1i8 };
    let normal_signs = (0..n).map(|k| sign(idx >> (2 * k) & 1 == 1)).collect();
    let mutant_signs = (0..n).map(|k| sign(idx >> (2 * k + 1) & 1 == 1)).collect();
    FitnessLandscape { delta, normal_signs, mutant_signs }
}

fn check_cap(n: usize, cap: u32) -> Result<()> {
    if n as u32 > cap {
        return Err(Error::EnumerationInfeasible(format!(
            "n = {n} exceeds the enumeration cap of {cap} (4^{n} environments)"
        )));
    }
    Ok(())
}

/// All 4^n sign assignments, each with weight 4^-n.
pub fn enumerate_landscapes_with_cap(
    n: usize,
    delta: f64,
    cap: u32,
) -> Result<impl Iterator<Item = (FitnessLandscape, Weight)>> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::domain("need at least 1 site"));
    }
    check_cap(n, cap)?;
    let total = 1u64 << (2 * n);
    let weight = Weight::new(1, total);
    Ok((0..total).map(move |idx| (landscape_from_index(n, delta, idx), weight)))
}

pub fn enumerate_landscapes(
    n: usize,
    delta: f64,
) -> Result<impl Iterator<Item = (FitnessLandscape, Weight)>> {
    enumerate_landscapes_with_cap(n, delta, DEFAULT_ENUMERATION_CAP)
}

/// Sign assignments with equal normal and mutant sign sums, uniformly
/// weighted. Requires even `n`.
pub fn enumerate_conditioned_with_cap(
    n: usize,
    delta: f64,
    cap: u32,
) -> Result<impl Iterator<Item = (FitnessLandscape, Weight)>> {
    if n % 2 != 0 {
        return Err(Error::domain(format!(
            "conditioned enumeration requires even N (theorem hypothesis: N = 2k), got {n}"
        )));
    }
    check_delta(delta)?;
    check_cap(n, cap)?;
    let total = 1u64 << (2 * n);
    let matching: Vec<u64> = (0..total)
        .filter(|&idx| {
            let l = landscape_from_index(n, 0.0, idx);
            let sb: i32 = l.normal_signs.iter().map(|&s| i32::from(s)).sum();
            let sbp: i32 = l.mutant_signs.iter().map(|&s| i32::from(s)).sum();
            sb == sbp
        })
        .collect();
    let weight = Weight::new(1, matching.len() as u64);
    Ok(matching
        .into_iter()
        .map(move |idx| (landscape_from_index(n, delta, idx), weight)))
}

pub fn enumerate_conditioned(
    n: usize,
    delta: f64,
) -> Result<impl Iterator<Item = (FitnessLandscape, Weight)>> {
    enumerate_conditioned_with_cap(n, delta, DEFAULT_ENUMERATION_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use std::collections::HashSet;

    #[test]
    fn rejects_bad_arguments() {
        assert!(sample_landscape(1, 0.2, &mut StreamKey::new(0, 0, 0).rng()).is_err());
        assert!(sample_landscape(4, 1.0, &mut StreamKey::new(0, 0, 0).rng()).is_err());
        assert!(sample_landscape(4, -0.1, &mut StreamKey::new(0, 0, 0).rng()).is_err());
    }

    #[test]
    fn delta_zero_gives_flat_profile() {
        let mut rng = StreamKey::new(1, 0, 0).rng();
        let l = sample_landscape(3, 0.0, &mut rng).unwrap();
        let p = hop_profile(&l);
        assert!(p.beta.iter().all(|&b| b == 0.5));
        assert!(p.hop.iter().all(|&h| h == 0.5));
    }

    #[test]
    fn sampling_is_deterministic_per_key() {
        let a = sample_landscape(2, 0.5, &mut StreamKey::new(9, 3, 0).rng()).unwrap();
        let b = sample_landscape(2, 0.5, &mut StreamKey::new(9, 3, 0).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sign_mean_obeys_law_of_large_numbers() {
        let n = 4;
        let reps = 100_000u64;
        let mut sums = vec![0i64; 2 * n];
        for r in 0..reps {
            let mut rng = StreamKey::for_experiment(7, "lln", r).rng();
            let l = sample_landscape(n, 0.3, &mut rng).unwrap();
            for k in 0..n {
                sums[k] += i64::from(l.normal_signs()[k]);
                sums[n + k] += i64::from(l.mutant_signs()[k]);
            }
        }
        let tol = 3.0 / (reps as f64).sqrt();
        for s in sums {
            assert!((s as f64 / reps as f64).abs() < tol);
        }
    }

    #[test]
    fn hand_evaluated_hop_profile() {
        // n = 2, delta = 0.5, mutant (+,+), normal (-,-)
        let l = FitnessLandscape::new(0.5, vec![-1, -1], vec![1, 1]).unwrap();
        let p = hop_profile(&l);
        assert_eq!(p.beta, vec![0.75, 0.75]);
        assert!((p.hop[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn role_swap_complements_beta_exactly() {
        for (l, _) in enumerate_landscapes(3, 0.37).unwrap() {
            let swapped = l.swap_roles();
            for k in 0..3 {
                assert_eq!(l.beta(k) + swapped.beta(k), 1.0);
            }
        }
    }

    #[test]
    fn enumeration_is_complete_and_normalized() {
        for n in 1..=3usize {
            let items: Vec<_> = enumerate_landscapes(n, 0.2).unwrap().collect();
            assert_eq!(items.len(), 1usize << (2 * n));
            let seen: HashSet<u64> = items.iter().map(|(l, _)| l.canonical_bits()).collect();
            assert_eq!(seen.len(), items.len());
            let total: Weight = items.iter().map(|(_, w)| *w).sum();
            assert_eq!(total, Weight::new(1, 1));
        }
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        assert!(matches!(
            enumerate_landscapes(11, 0.2).map(|_| ()),
            Err(Error::EnumerationInfeasible(_))
        ));
    }

    #[test]
    fn expected_beta_matches_four_term_sum() {
        // E[beta_1] over the environment at delta = 0.2:
        // (1/4) * sum over (a, b) in {+-1}^2 of (1 + d a)/(2 + d a + d b).
        let d = 0.2;
        let mut expected = 0.0;
        for a in [-1.0, 1.0] {
            for b in [-1.0, 1.0] {
                expected += (1.0 + d * a) / (2.0 + d * a + d * b);
            }
        }
        expected /= 4.0;
        let items: Vec<_> = enumerate_landscapes(3, d).unwrap().collect();
        let mean: f64 =
            items.iter().map(|(l, _)| l.beta(0)).sum::<f64>() / items.len() as f64;
        assert!((mean - expected).abs() < 1e-14);
    }

    #[test]
    fn conditioned_subset_matches_filter() {
        let cond: HashSet<u64> = enumerate_conditioned(2, 0.3)
            .unwrap()
            .map(|(l, _)| l.canonical_bits())
            .collect();
        assert_eq!(cond.len(), 6);
        let filtered: HashSet<u64> = enumerate_landscapes(2, 0.3)
            .unwrap()
            .filter(|(l, _)| {
                let sb: i32 = l.normal_signs().iter().map(|&s| i32::from(s)).sum();
                let sbp: i32 = l.mutant_signs().iter().map(|&s| i32::from(s)).sum();
                sb == sbp
            })
            .map(|(l, _)| l.canonical_bits())
            .collect();
        assert_eq!(cond, filtered);
        for (l, w) in enumerate_conditioned(2, 0.3).unwrap() {
            assert_eq!(w, Weight::new(1, 6));
            let sb: i32 = l.normal_signs().iter().map(|&s| i32::from(s)).sum();
            let sbp: i32 = l.mutant_signs().iter().map(|&s| i32::from(s)).sum();
            assert_eq!(sb, sbp);
        }
    }

    #[test]
    fn conditioned_rejects_odd_n() {
        assert!(enumerate_conditioned(3, 0.3).map(|_| ()).is_err());
    }

    #[test]
    fn canonical_encoding_round_trips() {
        let l = FitnessLandscape::new(0.126_491_106_406_735_17, vec![1, -1, 1], vec![-1, -1, 1])
            .unwrap();
        let text = l.to_string();
        let back: FitnessLandscape = text.parse().unwrap();
        assert_eq!(l, back);
        assert_eq!(text, back.to_string());
    }
}
