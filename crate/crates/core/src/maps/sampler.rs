use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::real::Real;

use super::IntervalMap;

/// Seed and spacing of a Birkhoff orbit sampler.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub burn_in: usize,
    pub stride: usize,
    /// Independent stream index; parallel workers use distinct streams.
    pub stream: u64,
}

impl SamplerConfig {
    pub fn new(seed: u64) -> Self {
        SamplerConfig { seed, burn_in: 10_000, stride: 7, stream: 0 }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    /// Configuration of the `i`-th independent worker.
    pub fn stream(mut self, i: u64) -> Self {
        self.stream = i;
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Samples `μ`-typical points as a strided single orbit.
///
/// The start point is drawn from the registered invariant density when there
/// is one, otherwise uniformly, and is then iterated through the burn-in.
/// Every step adds a uniform perturbation below one unit in the last place.
/// Dyadic affine maps would otherwise shift zeros into the mantissa and
/// collapse onto 0; smooth maps such as logistic(4) fall into floating-point
/// cycles of length around 10⁷, or onto a fixed point, within 10⁸ steps.
#[derive(Clone, Debug)]
pub struct OrbitSampler<'a, T> {
    map: &'a IntervalMap<T>,
    rng: ChaCha8Rng,
    x: T,
    stride: usize,
    dither: T,
    steps: u64,
}

impl<'a, T: Real> OrbitSampler<'a, T> {
    pub fn new(map: &'a IntervalMap<T>, config: SamplerConfig) -> Self {
        let mut rng = config.rng();
        let dom = map.domain();
        let u: f64 = rng.random();
        let x = match map.density() {
            Some(d) => T::lit(d.quantile(u)),
            None => dom.lo + dom.width() * T::lit(u),
        };
        let dither = T::epsilon() * dom.width();
        let mut s = OrbitSampler { map, rng, x: x.max(dom.lo).min(dom.hi), stride: config.stride.max(1), dither, steps: 0 };
        for _ in 0..config.burn_in {
            s.step();
        }
        s.steps = 0;
        s
    }

    pub fn interval_map(&self) -> &'a IntervalMap<T> {
        self.map
    }

    pub fn current(&self) -> T {
        self.x
    }

    /// Number of map iterates performed since burn-in.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// One map iterate.
    #[inline]
    pub fn step(&mut self) -> T {
        self.x = self.advance(self.x);
        self.steps += 1;
        self.x
    }

    /// Iterates an arbitrary point with the same refresh rule, using this
    /// sampler's random stream.
    #[inline]
    pub fn advance(&mut self, x: T) -> T {
        let mut y = self.map.apply(x);
        if self.dither > T::zero() {
            let u: f64 = self.rng.random();
            let dom = self.map.domain();
            y = (y + self.dither * T::lit(u)).min(dom.hi);
        }
        y
    }

    /// Next retained sample (`stride` iterates later).
    pub fn next_sample(&mut self) -> T {
        for _ in 0..self.stride {
            self.step();
        }
        self.x
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl<T: Real> Iterator for OrbitSampler<'_, T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        Some(self.next_sample())
    }
}
