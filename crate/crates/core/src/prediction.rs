//! Noisy and partial predictions of a fixed ground-truth cut.
//!
//! Both samplers threshold per-vertex uniforms: a noisy label is correct iff
//! `u_i < 1/2 + ε`, a partial label is revealed iff `u_i < ε`. In
//! [`Independence::PairwiseOnly`] mode the uniforms come from the affine hash
//! family `u_i = ((a·i + b) mod P) / P`, which makes every pair `(u_i, u_j)`
//! uniform on the `P × P` grid while higher-order tuples stay correlated.

use std::fmt::Write as _;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::CutAssignment;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Independence {
    #[default]
    Mutual,
    PairwiseOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyPrediction {
    pub y: Vec<i8>,
    pub epsilon: f64,
}

impl NoisyPrediction {
    pub fn new(y: Vec<i8>, epsilon: f64) -> Result<Self> {
        check_noisy_eps(epsilon)?;
        if y.iter().any(|&v| v != 1 && v != -1) {
            return Err(Error::Domain("noisy prediction entries must be ±1".into()));
        }
        Ok(NoisyPrediction { y, epsilon })
    }

    /// Probability that a label is correct, `1/2 + ε`.
    pub fn p(&self) -> f64 {
        0.5 + self.epsilon
    }

    pub fn as_cut(&self) -> CutAssignment {
        CutAssignment::new(self.y.clone()).expect("entries are ±1")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialPrediction {
    pub y: Vec<i8>,
    pub epsilon: f64,
}

impl PartialPrediction {
    pub fn new(y: Vec<i8>, epsilon: f64) -> Result<Self> {
        check_partial_eps(epsilon)?;
        if y.iter().any(|&v| !(-1..=1).contains(&v)) {
            return Err(Error::Domain("partial prediction entries must be in {-1, 0, 1}".into()));
        }
        Ok(PartialPrediction { y, epsilon })
    }

    /// `S = {i : Y_i ≠ 0}`.
    pub fn revealed(&self) -> Vec<usize> {
        (0..self.y.len()).filter(|&i| self.y[i] != 0).collect()
    }

    /// `(i, Y_i)` for every revealed vertex, in index order.
    pub fn pins(&self) -> Vec<(usize, i8)> {
        self.y
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i, v))
            .collect()
    }

    /// Completes blanks with `+1`, giving a cut that agrees with every
    /// revealed label.
    pub fn as_cut(&self) -> CutAssignment {
        CutAssignment::new(self.y.iter().map(|&v| if v == 0 { 1 } else { v }).collect()).expect("entries are ±1")
    }
}

fn check_noisy_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(Error::param("epsilon", format!("{eps} not in (0, 1/2)")))
    }
}

fn check_partial_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::param("epsilon", format!("{eps} not in (0, 1]")))
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime strictly greater than `n`.
pub fn smallest_prime_above(n: u64) -> u64 {
    (n + 1..).find(|&p| is_prime(p)).expect("primes are unbounded")
}

/// `u_i = ((a·i + b) mod P) / P` for `i = 0..n`.
pub fn affine_uniforms(n: usize, prime: u64, a: u64, b: u64) -> Vec<f64> {
    (0..n as u64)
        .map(|i| ((a * i + b) % prime) as f64 / prime as f64)
        .collect()
}

fn draw_uniforms(n: usize, seed: u64, independence: Independence) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    match independence {
        Independence::Mutual => (0..n).map(|_| rng.random::<f64>()).collect(),
        Independence::PairwiseOnly => {
            let prime = smallest_prime_above(n as u64);
            let a = rng.random_range(0..prime);
            let b = rng.random_range(0..prime);
            affine_uniforms(n, prime, a, b)
        }
    }
}

pub fn sample_noisy(
    x_star: &CutAssignment,
    epsilon: f64,
    seed: u64,
    independence: Independence,
) -> Result<NoisyPrediction> {
    check_noisy_eps(epsilon)?;
    let u = draw_uniforms(x_star.len(), seed, independence);
    let p = 0.5 + epsilon;
    let y = x_star
        .as_slice()
        .iter()
        .zip(&u)
        .map(|(&x, &ui)| if ui < p { x } else { -x })
        .collect();
    Ok(NoisyPrediction { y, epsilon })
}

pub fn sample_partial(
    x_star: &CutAssignment,
    epsilon: f64,
    seed: u64,
    independence: Independence,
) -> Result<PartialPrediction> {
    check_partial_eps(epsilon)?;
    let u = draw_uniforms(x_star.len(), seed, independence);
    let y = x_star
        .as_slice()
        .iter()
        .zip(&u)
        .map(|(&x, &ui)| if ui < epsilon { x } else { 0 })
        .collect();
    Ok(PartialPrediction { y, epsilon })
}

/// `Z = Y / (2ε)`, an unbiased estimate of the ground truth.
pub fn scaled_prediction(y: &NoisyPrediction) -> Vec<f64> {
    let s = 1.0 / (2.0 * y.epsilon);
    y.y.iter().map(|&v| v as f64 * s).collect()
}

/// `{k / (2·resolution) : k = 1..resolution−1}`, a grid strictly inside
/// `(0, 1/2)` for runs where the bias is unknown.
pub fn bias_grid(resolution: usize) -> Result<Vec<f64>> {
    if resolution < 2 {
        return Err(Error::param("resolution", "must be at least 2"));
    }
    Ok((1..resolution).map(|k| k as f64 / (2 * resolution) as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Noisy(NoisyPrediction),
    Partial(PartialPrediction),
}

impl Prediction {
    pub fn labels(&self) -> &[i8] {
        match self {
            Prediction::Noisy(p) => &p.y,
            Prediction::Partial(p) => &p.y,
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Prediction::Noisy(p) => p.epsilon,
            Prediction::Partial(p) => p.epsilon,
        }
    }

    pub fn model_name(&self) -> &'static str {
        match self {
            Prediction::Noisy(_) => "noisy",
            Prediction::Partial(_) => "partial",
        }
    }
}

/// Serializes to `n model epsilon` followed by one label per line.
pub fn save_prediction(p: &Prediction) -> String {
    let labels = p.labels();
    let mut out = format!("{} {} {:?}\n", labels.len(), p.model_name(), p.epsilon());
    for &v in labels {
        let _ = writeln!(
            out,
            "{}",
            match v {
                1 => "+1",
                -1 => "-1",
                _ => "0",
            }
        );
    }
    out
}

pub fn load_prediction(text: &str) -> Result<Prediction> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(Error::parse(hline, "header must be `n model epsilon`"));
    }
    let n: usize = toks[0]
        .parse()
        .map_err(|_| Error::parse(hline, format!("invalid length `{}`", toks[0])))?;
    let eps: f64 = toks[2]
        .parse()
        .map_err(|_| Error::parse(hline, format!("invalid epsilon `{}`", toks[2])))?;
    let partial = match toks[1] {
        "noisy" => false,
        "partial" => true,
        other => return Err(Error::parse(hline, format!("unknown model `{other}`"))),
    };
    let mut y = Vec::with_capacity(n);
    for (line, l) in lines {
        let v = match l {
            "+1" | "1" => 1,
            "-1" => -1,
            "0" if partial => 0,
            other => return Err(Error::parse(line, format!("invalid label `{other}`"))),
        };
        y.push(v);
    }
    if y.len() != n {
        return Err(Error::parse(hline, format!("declared {n} labels, found {}", y.len())));
    }
    let pred = if partial {
        Prediction::Partial(PartialPrediction::new(y, eps).map_err(|e| Error::parse(hline, e.to_string()))?)
    } else {
        Prediction::Noisy(NoisyPrediction::new(y, eps).map_err(|e| Error::parse(hline, e.to_string()))?)
    };
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth(n: usize, seed: u64) -> CutAssignment {
        let mut rng = rng_from_seed(seed);
        CutAssignment::new((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()).unwrap()
    }

    fn agreement(y: &[i8], x: &CutAssignment) -> f64 {
        y.iter().zip(x.as_slice()).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
    }

    #[test]
    fn epsilon_ranges() {
        let x = truth(5, 0);
        assert!(sample_noisy(&x, 0.5, 0, Independence::Mutual).is_err());
        assert!(sample_noisy(&x, 0.0, 0, Independence::Mutual).is_err());
        assert!(sample_partial(&x, 1.2, 0, Independence::Mutual).is_err());
        assert!(sample_partial(&x, 1.0, 0, Independence::Mutual).is_ok());
    }

    /// At ε = 0.499 the flip probability is 0.001; for n = 100 the per-draw
    /// agreement has mean 0.999 and a 0.99 floor sits ≥ 2.8σ below it per
    /// draw, so the average over draws clears 0.99 with huge margin.
    #[test]
    fn near_perfect_noisy() {
        let x = truth(100, 1);
        let mean: f64 = (0..1000)
            .map(|s| agreement(&sample_noisy(&x, 0.499, s, Independence::Mutual).unwrap().y, &x))
            .sum::<f64>()
            / 1000.0;
        assert!(mean >= 0.99, "{mean}");
    }

    /// n·draws = 4·10⁵ Bernoulli(0.6) trials: σ of the mean is 7.7e-4, so the
    /// mean is held to 3σ; each individual draw stays within 0.6 ± 0.08
    /// (σ per draw is 0.0155, so 0.08 is beyond 5σ).
    #[test]
    fn noisy_marginal_mutual() {
        let x = truth(1000, 2);
        let mut total = 0.0;
        for s in 0..400 {
            let a = agreement(&sample_noisy(&x, 0.1, s, Independence::Mutual).unwrap().y, &x);
            assert!((a - 0.6).abs() <= 0.08, "draw {s}: {a}");
            total += a;
        }
        assert!((total / 400.0 - 0.6).abs() < 3.0 * (0.24f64 / 4e5).sqrt());
    }

    #[test]
    fn pairwise_joint_correctness() {
        let n = 200;
        let x = truth(n, 3);
        let eps = 0.2;
        let draws = 4000;
        let pairs = [(0usize, 1usize), (3, 150), (17, 18), (50, 199)];
        let mut both = [0usize; 4];
        let mut single = vec![0usize; n];
        for s in 0..draws {
            let y = sample_noisy(&x, eps, s, Independence::PairwiseOnly).unwrap().y;
            for (k, &(i, j)) in pairs.iter().enumerate() {
                if y[i] == x[i] && y[j] == x[j] {
                    both[k] += 1;
                }
            }
            for i in 0..n {
                single[i] += (y[i] == x[i]) as usize;
            }
        }
        let p: f64 = 0.5 + eps;
        for &b in &both {
            assert!((b as f64 / draws as f64 - p * p).abs() < 0.05);
        }
        // per-vertex calibration; the grid offset ceil(pP)/P − p is < 1/P
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for &c in &single {
            assert!((c as f64 / draws as f64 - p).abs() < 3.0 * sigma + 1.0 / 211.0);
        }
    }

    /// Enumerates all (a, b) ∈ Z_P² for small n: each ordered pair (u_i, u_j)
    /// with i ≠ j occurs exactly once.
    #[test]
    fn affine_family_is_pairwise_uniform() {
        for n in 2..=10usize {
            let prime = smallest_prime_above(n as u64);
            let mut counts = std::collections::HashMap::new();
            for a in 0..prime {
                for b in 0..prime {
                    let u = affine_uniforms(n, prime, a, b);
                    for i in 0..n {
                        for j in 0..n {
                            if i != j {
                                let key = (
                                    i,
                                    j,
                                    (u[i] * prime as f64).round() as u64,
                                    (u[j] * prime as f64).round() as u64,
                                );
                                *counts.entry(key).or_insert(0usize) += 1;
                            }
                        }
                    }
                }
            }
            assert_eq!(counts.len(), n * (n - 1) * (prime * prime) as usize);
            assert!(counts.values().all(|&c| c == 1));
        }
    }

    #[test]
    fn partial_properties() {
        let x = truth(1000, 4);
        let full = sample_partial(&x, 1.0, 7, Independence::Mutual).unwrap();
        assert_eq!(full.y, x.as_slice());
        assert_eq!(full.revealed().len(), 1000);
        for mode in [Independence::Mutual, Independence::PairwiseOnly] {
            let mut frac_sum = 0.0;
            for s in 0..400 {
                let p = sample_partial(&x, 0.3, s, mode).unwrap();
                assert!(p.y.iter().zip(x.as_slice()).all(|(&y, &t)| y == 0 || y == t));
                let frac = p.revealed().len() as f64 / 1000.0;
                if mode == Independence::Mutual {
                    assert!((frac - 0.3).abs() <= 0.05);
                }
                frac_sum += frac;
            }
            assert!((frac_sum / 400.0 - 0.3).abs() <= 0.05);
        }
    }

    #[test]
    fn scaled_values() {
        let p = NoisyPrediction::new(vec![1, -1], 0.25).unwrap();
        assert_eq!(scaled_prediction(&p), vec![2.0, -2.0]);
        let q = NoisyPrediction::new(vec![-1], 0.4999999).unwrap();
        assert!((scaled_prediction(&q)[0] + 1.0).abs() < 1e-6);
    }

    /// Var(Z_i) = (1 − 4ε²)/(4ε²) = 1.778 at ε = 0.3, so the σ of a 10⁵-draw
    /// mean is 0.0042 and 0.05 is ≈ 12σ.
    #[test]
    fn scaled_prediction_is_unbiased() {
        let x = truth(8, 5);
        let draws = 100_000;
        let mut sum = [0.0f64; 8];
        for s in 0..draws {
            let z = scaled_prediction(&sample_noisy(&x, 0.3, s, Independence::Mutual).unwrap());
            for i in 0..8 {
                sum[i] += z[i];
            }
        }
        for i in 0..8 {
            assert!((sum[i] / draws as f64 - x[i] as f64).abs() < 0.05);
        }
    }

    #[test]
    fn determinism() {
        let x = truth(50, 6);
        for mode in [Independence::Mutual, Independence::PairwiseOnly] {
            assert_eq!(
                sample_noisy(&x, 0.2, 11, mode).unwrap(),
                sample_noisy(&x, 0.2, 11, mode).unwrap()
            );
        }
    }

    #[test]
    fn grid() {
        let g = bias_grid(5).unwrap();
        let expect = [0.1, 0.2, 0.3, 0.4];
        assert!(g.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-15));
        assert_eq!(bias_grid(2).unwrap(), vec![0.25]);
        assert!(bias_grid(1).is_err());
        assert!(bias_grid(40).unwrap().iter().all(|&e| e > 0.0 && e < 0.5));
    }

    #[test]
    fn file_roundtrip() {
        let x = truth(6, 8);
        for p in [
            Prediction::Noisy(sample_noisy(&x, 0.3, 1, Independence::Mutual).unwrap()),
            Prediction::Partial(sample_partial(&x, 0.5, 1, Independence::Mutual).unwrap()),
        ] {
            assert_eq!(load_prediction(&save_prediction(&p)).unwrap(), p);
        }
        assert!(load_prediction("2 noisy 0.2\n+1\n0\n").is_err());
        assert!(load_prediction("2 fuzzy 0.2\n+1\n-1\n").is_err());
    }
}
