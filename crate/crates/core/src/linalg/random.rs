//! Seeded sampling.
//!
//! Every random stream in the crate is a ChaCha8 generator seeded from a
//! 64-bit value. Independent sub-streams are obtained with [`derive_seed`],
//! which mixes a base seed with a list of tags (run index, purpose, ...).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub type Rng64 = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mixes `base` with `tags` into a new seed. Distinct tag lists give
/// statistically independent streams.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t.wrapping_add(0x632B_E59B_D9B4_E019))))
}

/// Distributions needed by the generators.
#[derive(Debug, Clone, PartialEq)]
pub enum Dist {
    Bernoulli(f64),
    Gaussian { mean: f64, sd: f64 },
    Multinomial(Vec<f64>),
}

impl Dist {
    pub fn validate(&self) -> Result<()> {
        match self {
            Dist::Bernoulli(p) if !(0.0..=1.0).contains(p) => {
                Err(Error::param(format!("bernoulli p = {p} outside [0, 1]")))
            }
            Dist::Gaussian { mean, sd } if !mean.is_finite() || !(*sd >= 0.0) || !sd.is_finite() => {
                Err(Error::param(format!("gaussian({mean}, {sd}) invalid")))
            }
            Dist::Multinomial(w) => validate_weights(w),
            _ => Ok(()),
        }
    }
}

pub(crate) fn validate_weights(w: &[f64]) -> Result<()> {
    if w.is_empty() || w.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::param("multinomial weights must be non-negative"));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("multinomial weights sum to {s}, not 1")));
    }
    Ok(())
}

/// Draws one value; multinomial draws return the category index as `f64`.
pub fn sample(dist: &Dist, rng: &mut impl Rng) -> Result<f64> {
    dist.validate()?;
    Ok(match dist {
        Dist::Bernoulli(p) => f64::from(u8::from(bernoulli(*p, rng))),
        Dist::Gaussian { mean, sd } => gaussian(*mean, *sd, rng),
        Dist::Multinomial(w) => categorical(w, rng) as f64,
    })
}

#[inline]
pub(crate) fn bernoulli(p: f64, rng: &mut impl Rng) -> bool {
    // p = 0 never fires and p = 1 always fires since random() lies in [0, 1)
    rng.random::<f64>() < p
}

pub(crate) fn gaussian(mean: f64, sd: f64, rng: &mut impl Rng) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("validated sd").sample(rng)
}

pub(crate) fn standard_normal(rng: &mut impl Rng) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

pub(crate) fn categorical(w: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &x) in w.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    // rounding: fall back to the last positive weight
    w.iter().rposition(|&x| x > 0.0).unwrap_or(0)
}
