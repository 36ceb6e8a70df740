//! Deterministic, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by the 64-bit `seed` and
//! positioned on the 64-bit ChaCha stream selected by `stream_id`. Two streams
//! built from the same pair emit identical sequences; different `stream_id`s
//! address disjoint keystreams, so per-path streams can be handed out by index
//! without any coordination between workers.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const INDEX_BITS: u32 = 48;
const MAX_INDEX: u64 = (1 << INDEX_BITS) - 1;

/// Purpose tags folded into stream ids so that independent experiments
/// sharing a seed never reuse a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Domain {
    Mlmc = 1,
    Rates = 2,
    Dn = 3,
    SingleLevel = 4,
    Sampling = 5,
}

/// Packs `(domain, level, index)` into a stream id: 8 bits of domain, 8 bits
/// of level and 48 bits of path index. The packing is injective.
pub fn substream_id(domain: Domain, level: u32, index: u64) -> u64 {
    assert!(level < 256, "level {level} does not fit the stream id layout");
    assert!(index <= MAX_INDEX, "path index {index} exceeds 2^48 - 1");
    ((domain as u64) << 56) | ((level as u64) << INDEX_BITS) | index
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    core: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut core = ChaCha8Rng::seed_from_u64(seed);
        core.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            core,
        }
    }

    pub fn for_path(seed: u64, domain: Domain, level: u32, index: u64) -> Self {
        Self::new(seed, substream_id(domain, level, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    /// Uniform on the open interval (0, 1): the top 52 bits are centred in
    /// their bucket, so the extremes are 2^-53 and 1 - 2^-53, both exact.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
        ((self.next_u64() >> 12) as f64 + 0.5) * SCALE
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.core)
    }

    /// Exp(1) by inversion.
    #[inline]
    pub fn next_exponential(&mut self) -> f64 {
        -self.next_uniform().ln()
    }

    /// Gamma(shape, scale = 1).
    pub fn next_gamma(&mut self, shape: f64) -> Result<f64> {
        Ok(GammaVariate::new(shape)?.sample(self))
    }

    /// Inverse Gaussian with the given mean and shape.
    pub fn next_inverse_gaussian(&mut self, mean: f64, shape: f64) -> Result<f64> {
        Ok(InverseGaussianVariate::new(mean, shape)?.sample(self))
    }
}

/// Gamma(shape, 1) sampler with precomputed constants.
///
/// Marsaglia–Tsang squeeze/rejection for shape >= 1. For shape < 1 a
/// Gamma(shape + 1) draw is multiplied by `U^(1/shape)`, evaluated in log
/// space; for very small shapes the product underflows to exactly 0, which is
/// the correctly rounded value of a draw that far below the smallest double.
#[derive(Debug, Clone, Copy)]
pub struct GammaVariate {
    shape: f64,
    d: f64,
    c: f64,
    inv_shape: Option<f64>,
}

impl GammaVariate {
    pub fn new(shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::param("shape", format!("must be positive and finite, got {shape}")));
        }
        let (boosted, inv_shape) = if shape < 1.0 {
            (shape + 1.0, Some(1.0 / shape))
        } else {
            (shape, None)
        };
        let d = boosted - 1.0 / 3.0;
        Ok(Self {
            shape,
            d,
            c: 1.0 / (9.0 * d).sqrt(),
            inv_shape,
        })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let g = self.marsaglia_tsang(rng);
        match self.inv_shape {
            None => g,
            Some(inv) => (g.ln() + rng.next_uniform().ln() * inv).exp(),
        }
    }

    #[inline]
    fn marsaglia_tsang(&self, rng: &mut RngStream) -> f64 {
        loop {
            let x = rng.next_normal();
            let t = 1.0 + self.c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = rng.next_uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return self.d * v;
            }
            if u.ln() < 0.5 * x2 + self.d * (1.0 - v + v.ln()) {
                return self.d * v;
            }
        }
    }
}

/// Inverse Gaussian IG(mean, shape) by the Michael–Schucany–Haas
/// transformation with multiple roots.
///
/// The smaller root is evaluated as `mean / (1 + phi + sqrt(phi^2 + 2 phi))`
/// with `phi = mean * y / (2 shape)`, which avoids the cancellation in the
/// textbook form when `mean / shape` is large (fine time steps).
#[derive(Debug, Clone, Copy)]
pub struct InverseGaussianVariate {
    mean: f64,
    half_mean_over_shape: f64,
}

impl InverseGaussianVariate {
    pub fn new(mean: f64, shape: f64) -> Result<Self> {
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::param("mean", format!("must be positive and finite, got {mean}")));
        }
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(Error::param("shape", format!("must be positive and finite, got {shape}")));
        }
        Ok(Self {
            mean,
            half_mean_over_shape: 0.5 * mean / shape,
        })
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let z = rng.next_normal();
        let phi = self.half_mean_over_shape * z * z;
        let root = self.mean / (1.0 + phi + (phi * (phi + 2.0)).sqrt());
        if rng.next_uniform() * (self.mean + root) <= self.mean {
            root
        } else {
            self.mean * self.mean / root
        }
    }
}
