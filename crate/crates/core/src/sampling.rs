//! Shot sampling, readout noise and measurement counts.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;
use crate::state::QuantumState;

/// Independent generator for stream `stream` under a run seed. Sweep points
/// and shot batches each take their own stream, so results do not depend on
/// evaluation order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Measurement histogram over `n_qubits` bits; keys are little-endian basis
/// indices, text keys are written most-significant qubit first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Counts {
    n_qubits: usize,
    counts: BTreeMap<usize, u64>,
}

impl Counts {
    pub fn new(n_qubits: usize) -> Self {
        Counts {
            n_qubits,
            counts: BTreeMap::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn from_bitstrings<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, u64)>,
    {
        let mut n = None;
        let mut counts = BTreeMap::new();
        for (bits, c) in pairs {
            match n {
                None => n = Some(bits.len()),
                Some(k) if k != bits.len() => {
                    return Err(Error::InvalidParameter(format!(
                        "bitstring {bits:?} does not have {k} bits"
                    )))
                }
                _ => {}
            }
            let idx = usize::from_str_radix(bits, 2)
                .map_err(|_| Error::InvalidParameter(format!("invalid bitstring {bits:?}")))?;
            *counts.entry(idx).or_insert(0) += c;
        }
        let n_qubits = n.ok_or_else(|| {
            Error::InvalidParameter("cannot infer register width from empty counts".into())
        })?;
        counts.retain(|_, c| *c > 0);
        Ok(Counts { n_qubits, counts })
    }

    pub fn bitstring(&self, index: usize) -> String {
        format!("{:0width$b}", index, width = self.n_qubits)
    }

    pub fn add(&mut self, index: usize, count: u64) {
        if count > 0 {
            *self.counts.entry(index).or_insert(0) += count;
        }
    }

    pub fn get(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    pub fn get_bits(&self, bits: &str) -> u64 {
        usize::from_str_radix(bits, 2)
            .map(|i| self.get(i))
            .unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(k, v)| (*k, *v))
    }

    /// Empirical distribution as a dense vector of length `2^n`.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut p = vec![0.0; 1usize << self.n_qubits];
        let total = self.total();
        if total == 0 {
            return p;
        }
        for (k, v) in &self.counts {
            p[*k] = *v as f64 / total as f64;
        }
        p
    }

    pub fn retain<F: FnMut(usize) -> bool>(&mut self, mut keep: F) {
        self.counts.retain(|k, _| keep(*k));
    }
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (k, v)) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "\"{}\": {v}", self.bitstring(*k))?;
        }
        write!(f, "}}")
    }
}

impl Serialize for Counts {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.counts.len()))?;
        for (k, v) in &self.counts {
            map.serialize_entry(&self.bitstring(*k), v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Counts {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = BTreeMap::<String, u64>::deserialize(deserializer)?;
        Counts::from_bitstrings(raw.iter().map(|(k, v)| (k.as_str(), *v)))
            .map_err(de::Error::custom)
    }
}

/// Applies independent per-qubit readout flips to a distribution over
/// `n_qubits` bits: `p_noisy = (A_{n-1} ⊗ ... ⊗ A_0) p`.
pub fn apply_readout(probs: &[f64], n_qubits: usize, noise: &NoiseSpec) -> Vec<f64> {
    let mut p = probs.to_vec();
    for q in 0..n_qubits {
        let r = noise.readout_for(q);
        if r.p1_given_0 == 0.0 && r.p0_given_1 == 0.0 {
            continue;
        }
        let bit = 1usize << q;
        for j in 0..p.len() {
            if j & bit != 0 {
                continue;
            }
            let (p0, p1) = (p[j], p[j | bit]);
            p[j] = (1.0 - r.p1_given_0) * p0 + r.p0_given_1 * p1;
            p[j | bit] = r.p1_given_0 * p0 + (1.0 - r.p0_given_1) * p1;
        }
    }
    p
}

/// Marginal distribution of `qubits` (bit `k` of the result is `qubits[k]`).
pub fn marginal(probs: &[f64], qubits: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1usize << qubits.len()];
    for (j, p) in probs.iter().enumerate() {
        let idx = qubits
            .iter()
            .enumerate()
            .fold(0usize, |acc, (k, &q)| acc | ((j >> q & 1) << k));
        out[idx] += p;
    }
    out
}

/// Draws `shots` outcomes from `probs` by sequential binomial splitting.
pub fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass: f64 = probs.iter().map(|p| p.max(0.0)).sum();
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let p = p.max(0.0);
        if p == 0.0 {
            continue;
        }
        let frac = if mass > 0.0 { (p / mass).min(1.0) } else { 1.0 };
        let k = if frac >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, frac)
                .expect("valid binomial")
                .sample(rng)
        };
        out[i] = k;
        remaining -= k;
        mass -= p;
    }
    // Rounding can leave a few shots unassigned; give them to the last support point.
    if remaining > 0 {
        if let Some(last) = probs.iter().rposition(|p| *p > 0.0) {
            out[last] += remaining;
        }
    }
    out
}

fn check_shots(shots: u64) -> Result<()> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    Ok(())
}

/// Samples every qubit of `state`, applying readout flips when noise is given.
pub fn sample(
    state: &QuantumState,
    shots: u64,
    noise: Option<&NoiseSpec>,
    seed: u64,
) -> Result<Counts> {
    let mut rng = stream_rng(seed, 0);
    sample_with_rng(state, shots, noise, &mut rng)
}

pub fn sample_with_rng<R: Rng + ?Sized>(
    state: &QuantumState,
    shots: u64,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<Counts> {
    let qubits: Vec<usize> = (0..state.n_qubits()).collect();
    sample_qubits(state, &qubits, shots, noise, rng)
}

/// Samples a subset of qubits; bit `k` of each outcome is `qubits[k]`.
pub fn sample_qubits<R: Rng + ?Sized>(
    state: &QuantumState,
    qubits: &[usize],
    shots: u64,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<Counts> {
    check_shots(shots)?;
    let probs = exact_distribution(state, qubits, noise)?;
    let draws = multinomial(&probs, shots, rng);
    let mut counts = Counts::new(qubits.len());
    for (i, c) in draws.into_iter().enumerate() {
        counts.add(i, c);
    }
    Ok(counts)
}

/// Outcome distribution of `qubits` including readout noise.
pub fn exact_distribution(
    state: &QuantumState,
    qubits: &[usize],
    noise: Option<&NoiseSpec>,
) -> Result<Vec<f64>> {
    for &q in qubits {
        if q >= state.n_qubits() {
            return Err(Error::InvalidParameter(format!("qubit {q} out of range")));
        }
    }
    let probs = marginal(&state.probabilities(), qubits);
    Ok(match noise {
        Some(spec) => {
            spec.validate()?;
            // re-key readout errors to the marginal bit positions
            let mut local = NoiseSpec::default();
            for (k, &q) in qubits.iter().enumerate() {
                local.readout.insert(k, spec.readout_for(q));
            }
            apply_readout(&probs, qubits.len(), &local)
        }
        None => probs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::ReadoutError;

    #[test]
    fn excited_state_is_deterministic() {
        let s = QuantumState::basis(1, 1).unwrap();
        let c = sample(&s, 100, None, 7).unwrap();
        assert_eq!(c.get_bits("1"), 100);
        assert_eq!(c.total(), 100);
    }

    #[test]
    fn zero_shots_rejected() {
        assert!(sample(&QuantumState::zero(1), 0, None, 1).is_err());
    }

    #[test]
    fn reproducible_given_seed() {
        let mut circ = crate::circuit::Circuit::new(3);
        circ.h(0).h(1).h(2);
        let s = crate::state::run(&circ, &QuantumState::zero(3), None).unwrap();
        assert_eq!(
            sample(&s, 1000, None, 42).unwrap(),
            sample(&s, 1000, None, 42).unwrap()
        );
        assert_ne!(
            sample(&s, 1000, None, 42).unwrap(),
            sample(&s, 1000, None, 43).unwrap()
        );
    }

    #[test]
    fn readout_flip_frequency() {
        let noise = NoiseSpec::readout_only(1, ReadoutError::new(0.05, 0.0));
        let c = sample(&QuantumState::zero(1), 100_000, Some(&noise), 3).unwrap();
        let f = c.get_bits("1") as f64 / 1e5;
        let sigma = (0.05f64 * 0.95 / 1e5).sqrt();
        assert!((f - 0.05).abs() < 3.0 * sigma, "{f}");
    }

    #[test]
    fn multinomial_sums_to_shots() {
        let mut rng = stream_rng(1, 2);
        let p = [0.1, 0.0, 0.3, 0.6];
        let d = multinomial(&p, 12345, &mut rng);
        assert_eq!(d.iter().sum::<u64>(), 12345);
        assert_eq!(d[1], 0);
    }

    #[test]
    fn marginal_bits() {
        // |q2 q1 q0> = |110> has index 6
        let mut p = vec![0.0; 8];
        p[6] = 1.0;
        let m = marginal(&p, &[2, 0]);
        assert_eq!(m, vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn counts_json_round_trip() {
        let c = Counts::from_bitstrings([("00001", 90), ("00000", 10)]).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"00000":10,"00001":90}"#);
        let back: Counts = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn streams_differ() {
        let a: u64 = stream_rng(5, 0).random();
        let b: u64 = stream_rng(5, 1).random();
        assert_ne!(a, b);
    }
}
