//! Sample-size formulas, uniform element sampling, and a checker for the
//! relative (p, ε)-approximation property.
//!
//! All logarithms are base 2.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};
use crate::model::{ElementId, SetId, SetSystem};

/// Ceiling that ignores floating noise below one part in 10^9.
fn ceil_tol(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

fn check_args(rho: u32, k: u32, n: u32, m: u32, delta: f64, c: f64) -> Result<()> {
    if rho == 0 || k == 0 || n < 2 || m < 2 || !(delta > 0.0 && delta <= 1.0) || !(c > 0.0 && c.is_finite()) {
        return Err(Error::BadParams(format!(
            "sample size needs rho,k >= 1, n,m >= 2, delta in (0,1], c > 0; got rho={rho} k={k} n={n} m={m} delta={delta} c={c}"
        )));
    }
    Ok(())
}

/// `⌈c·ρ·k·n^δ·log m·log n⌉`, uncapped.
pub fn iter_sample_size(rho: u32, k: u32, n: u32, m: u32, delta: f64, c: f64) -> Result<u64> {
    check_args(rho, k, n, m, delta, c)?;
    let (nf, mf) = (n as f64, m as f64);
    Ok(ceil_tol(c * rho as f64 * k as f64 * nf.powf(delta) * mf.log2() * nf.log2()))
}

/// `⌈c·ρ·k·(n/k)^δ·log m·log n⌉`, uncapped.
pub fn geom_sample_size(rho: u32, k: u32, n: u32, m: u32, delta: f64, c: f64) -> Result<u64> {
    check_args(rho, k, n, m, delta, c)?;
    let (nf, mf, kf) = (n as f64, m as f64, k as f64);
    Ok(ceil_tol(c * rho as f64 * kf * (nf / kf).powf(delta) * mf.log2() * nf.log2()))
}

/// Sampled element ids (sorted) and the size of the set they were drawn from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub elements: Vec<ElementId>,
    pub source_size: usize,
}

impl Sample {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Uniform sample without replacement; returns all of `ground` when `size`
/// reaches its length.
pub fn draw_sample<R: Rng + ?Sized>(ground: &[ElementId], size: usize, rng: &mut R) -> Sample {
    let elements = if size >= ground.len() {
        let mut all = ground.to_vec();
        all.sort_unstable();
        all
    } else {
        let mut picked: Vec<ElementId> = index::sample(rng, ground.len(), size).iter().map(|i| ground[i]).collect();
        picked.sort_unstable();
        picked
    };
    Sample { elements, source_size: ground.len() }
}

/// Parameters of a relative (p, ε)-approximation with failure probability q.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub p: f64,
    pub eps: f64,
    pub q: f64,
    /// log2 of the number of ranges.
    pub family_log: f64,
}

impl SampleSpec {
    pub fn new(p: f64, eps: f64, q: f64, family_size: usize) -> Result<Self> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !(open(p) && open(eps) && open(q)) || family_size == 0 {
            return Err(Error::BadParams(format!("need p, eps, q in (0,1) and a non-empty family; got {p} {eps} {q}")));
        }
        Ok(SampleSpec { p, eps, q, family_log: (family_size as f64).log2() })
    }

    /// `⌈c'/(ε²p)·(log|F|·log(1/p) + log(1/q))⌉`.
    pub fn sample_size(&self, c_prime: f64) -> u64 {
        let lead = c_prime / (self.eps * self.eps * self.p);
        ceil_tol(lead * (self.family_log * (1.0 / self.p).log2() + (1.0 / self.q).log2()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeCheck {
    pub set: SetId,
    pub size: usize,
    pub hits: usize,
    pub heavy: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelApproxReport {
    pub sample_size: usize,
    pub ranges: Vec<RangeCheck>,
    pub failures: usize,
}

impl RelApproxReport {
    pub fn all_pass(&self) -> bool {
        self.failures == 0
    }
}

/// Checks every set of `sys` as a range: heavy ranges (`|R| ≥ p·n`) need a
/// `(1±ε)` relative estimate, light ones an additive `ε·p` estimate.
pub fn check_relative_approx(sys: &SetSystem, sample: &Sample, spec: &SampleSpec) -> Result<RelApproxReport> {
    check_with(sys, sample, spec.p, spec.eps)
}

/// Like [`check_relative_approx`] but accepts `eps = 0`.
pub fn check_with(sys: &SetSystem, sample: &Sample, p: f64, eps: f64) -> Result<RelApproxReport> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sys.n() as f64;
    let z = sample.len() as f64;
    let in_sample = BitSet::from_indices(sys.n() as usize, sample.elements.iter().map(|&e| e as usize));
    let ranges: Vec<RangeCheck> = sys
        .records()
        .iter()
        .map(|r| {
            let size = r.len();
            let hits = r.elements.iter().filter(|&&e| in_sample.contains(e as usize)).count();
            let heavy = size as f64 >= p * n;
            // cross-multiplied by n·|Z|
            let (est, truth) = (hits as f64 * n, size as f64 * z);
            let pass = if heavy {
                (1.0 - eps) * truth <= est && est <= (1.0 + eps) * truth
            } else {
                (est - truth).abs() <= eps * p * n * z
            };
            RangeCheck { set: r.id, size, hits, heavy, pass }
        })
        .collect();
    let failures = ranges.iter().filter(|r| !r.pass).count();
    Ok(RelApproxReport { sample_size: sample.len(), ranges, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, GeneratorKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iter_size_examples() {
        assert_eq!(iter_sample_size(1, 2, 16, 8, 0.5, 2.0).unwrap(), 192);
        assert_eq!(iter_sample_size(1, 1, 2, 2, 1.0, 1.0).unwrap(), 2);
        // 2·5·4·1024^0.3·10·10 = 4000·8 = 32000 (1024^0.3 = 2^3)
        assert_eq!(iter_sample_size(5, 4, 1024, 1024, 0.3, 2.0).unwrap(), 32000);
    }

    #[test]
    fn geom_size_examples() {
        assert_eq!(geom_sample_size(1, 4, 64, 16, 0.25, 1.0).unwrap(), 192);
        // k = n: factor (n/k)^δ = 1 → c·ρ·n·log m·log n
        assert_eq!(geom_sample_size(1, 64, 64, 16, 0.25, 1.0).unwrap(), 64 * 4 * 6);
        for (n, m, d) in [(64, 16, 0.25), (100, 7, 0.5), (2, 2, 1.0)] {
            assert_eq!(geom_sample_size(3, 1, n, m, d, 2.0).unwrap(), iter_sample_size(3, 1, n, m, d, 2.0).unwrap());
        }
    }

    #[test]
    fn size_bad_params() {
        assert!(iter_sample_size(0, 1, 4, 4, 0.5, 1.0).is_err());
        assert!(iter_sample_size(1, 1, 1, 4, 0.5, 1.0).is_err());
        assert!(iter_sample_size(1, 1, 4, 4, 0.0, 1.0).is_err());
        assert!(geom_sample_size(1, 1, 4, 1, 0.5, 1.0).is_err());
    }

    #[test]
    fn draw_sample_edges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ground: Vec<u32> = (10..20).collect();
        assert!(draw_sample(&ground, 0, &mut rng).is_empty());
        assert_eq!(draw_sample(&ground, 10, &mut rng).elements, ground);
        assert_eq!(draw_sample(&ground, 50, &mut rng).elements, ground);
        let s = draw_sample(&ground, 4, &mut rng);
        assert_eq!(s.len(), 4);
        assert_eq!(s.source_size, 10);
        assert!(s.elements.windows(2).all(|w| w[0] < w[1]));
        assert!(s.elements.iter().all(|e| ground.contains(e)));
    }

    #[test]
    fn draw_sample_reproducible() {
        let ground: Vec<u32> = (0..100).collect();
        let a = draw_sample(&ground, 10, &mut ChaCha8Rng::seed_from_u64(9));
        let b = draw_sample(&ground, 10, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn draw_sample_uniform() {
        // Binomial(10000, 0.1): sd 30, so [800, 1200] is ±6.7 sd.
        let ground: Vec<u32> = (0..10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut freq = [0usize; 10];
        for _ in 0..10_000 {
            freq[draw_sample(&ground, 1, &mut rng).elements[0] as usize] += 1;
        }
        assert!(freq.iter().all(|&f| (800..=1200).contains(&f)), "{freq:?}");
    }

    #[test]
    fn full_sample_is_exact() {
        let sys = generate_instance(GeneratorKind::UniformRandom { density: 0.3 }, 40, 12, 3).unwrap().system;
        let all: Vec<u32> = (0..40).collect();
        let s = draw_sample(&all, 40, &mut ChaCha8Rng::seed_from_u64(0));
        for p in [0.05, 0.3, 0.9] {
            assert!(check_with(&sys, &s, p, 0.0).unwrap().all_pass());
        }
    }

    #[test]
    fn empty_range_light_case_passes() {
        let sys = crate::io::parse_ssc("n=4 m=1\n0:\n", crate::io::LoadOptions { allow_empty: true }).unwrap();
        let s = Sample { elements: vec![0, 2], source_size: 4 };
        let spec = SampleSpec::new(0.5, 0.1, 0.1, 1).unwrap();
        let rep = check_relative_approx(&sys, &s, &spec).unwrap();
        assert!(!rep.ranges[0].heavy);
        assert!(rep.all_pass());
    }

    #[test]
    fn empty_sample_is_an_error() {
        let sys = crate::io::parse_ssc("n=2 m=1\n0: 0\n", Default::default()).unwrap();
        let s = Sample { elements: vec![], source_size: 2 };
        let spec = SampleSpec::new(0.5, 0.1, 0.1, 1).unwrap();
        assert!(matches!(check_relative_approx(&sys, &s, &spec), Err(Error::EmptySample)));
    }

    #[test]
    fn detects_a_biased_sample() {
        // range {0..8} of 16 is heavy at p = 0.25; a sample inside it overestimates by 2x
        let sys = crate::io::parse_ssc("n=16 m=1\n0: 0 1 2 3 4 5 6 7\n", Default::default()).unwrap();
        let s = Sample { elements: vec![0, 1, 2, 3], source_size: 16 };
        let spec = SampleSpec::new(0.25, 0.5, 0.1, 1).unwrap();
        assert_eq!(check_relative_approx(&sys, &s, &spec).unwrap().failures, 1);
    }

    #[test]
    fn relative_approx_sample_size() {
        // 4/(0.25·0.1)·(6·log2 10 + log2 100) = 160·(6·3.3219 + 6.6439)
        let spec = SampleSpec::new(0.1, 0.5, 0.01, 64).unwrap();
        let expect = (160.0f64 * (6.0 * 10f64.log2() + 100f64.log2())).ceil() as u64;
        assert_eq!(spec.sample_size(4.0), expect);
        assert_eq!(expect, 4253);
    }

    proptest::proptest! {
        #[test]
        fn iter_size_monotone(rho in 1u32..6, k in 1u32..64, n in 2u32..5000, m in 2u32..5000,
                              delta in 0.05f64..1.0, c in 0.5f64..8.0) {
            let base = iter_sample_size(rho, k, n, m, delta, c).unwrap();
            proptest::prop_assert!(iter_sample_size(rho + 1, k, n, m, delta, c).unwrap() >= base);
            proptest::prop_assert!(iter_sample_size(rho, k + 1, n, m, delta, c).unwrap() >= base);
            proptest::prop_assert!(iter_sample_size(rho, k, n + 1, m, delta, c).unwrap() >= base);
            proptest::prop_assert!(iter_sample_size(rho, k, n, m + 1, delta, c).unwrap() >= base);
            proptest::prop_assert!(iter_sample_size(rho, k, n, m, (delta + 0.01).min(1.0), c).unwrap() >= base);
            proptest::prop_assert!(iter_sample_size(rho, k, n, m, delta, c + 0.1).unwrap() >= base);
        }
    }
}
