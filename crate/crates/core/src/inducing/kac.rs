use crate::error::{invalid, Error, Result};
use crate::interval::Interval;
use crate::maps::OrbitSampler;
use crate::real::Real;

use super::{first_return_with, ImageTracker, ScaledNeighbourhood};

#[derive(Clone, Debug, PartialEq)]
pub struct KacEstimate {
    /// Occupation estimate of `μ(Y)`.
    pub mu_y: f64,
    /// Mean first return time over conditional samples.
    pub mean_return: f64,
    /// `E_{μ_Y}[r_Y] · μ(Y)`, which Kac's lemma puts at 1.
    pub product: f64,
    /// Standard error of the product from the two independent estimates.
    pub stderr: f64,
    pub conditional_samples: usize,
    /// Conditional samples whose return exceeded the horizon.
    pub censored: usize,
}

/// Estimates `μ(Y)` by the occupation fraction of `n` retained samples and
/// `E_{μ_Y}[r_Y]` from the returns of a further `n` retained samples that
/// land in `Y`, each followed until it comes back.
pub fn kac_check<T: Real>(sampler: &mut OrbitSampler<'_, T>, y: &Interval<T>, n: usize, horizon: u64) -> Result<KacEstimate> {
    if n == 0 {
        return Err(invalid("n", "need at least one sample"));
    }
    let mut hits = 0usize;
    for _ in 0..n {
        if y.contains(sampler.next_sample()) {
            hits += 1;
        }
    }
    if hits == 0 {
        return Err(Error::NoVisits { steps: n as u64 });
    }
    let mu_y = hits as f64 / n as f64;

    let (mut count, mut censored) = (0usize, 0usize);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..n {
        let x = sampler.next_sample();
        if !y.contains(x) {
            continue;
        }
        match first_return_with(|p| sampler.advance(p), y, x, horizon) {
            Some(r) => {
                count += 1;
                sum += r as f64;
                sum_sq += (r as f64) * (r as f64);
            }
            None => censored += 1,
        }
    }
    if count == 0 {
        return Err(Error::NoVisits { steps: n as u64 });
    }
    let mean = sum / count as f64;
    let var_r = (sum_sq / count as f64 - mean * mean).max(0.0);
    let var_mu = mu_y * (1.0 - mu_y) / n as f64;
    let product = mean * mu_y;
    let stderr = (mu_y * mu_y * var_r / count as f64 + mean * mean * var_mu).sqrt();
    Ok(KacEstimate { mu_y, mean_return: mean, product, stderr, conditional_samples: count, censored })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtendibilityEstimate {
    /// Fraction of returns to `U` whose branch does not extend over `I_n`.
    pub fraction: f64,
    pub samples: usize,
    pub censored: usize,
}

/// Fraction of `μ_U`-sampled points `x ∈ U` for which `f^{r_U(x)}` does not
/// extend homeomorphically over the scaled neighbourhood `nbhd.y_prime` of
/// `J ⊇ U`.
pub fn non_extendible_fraction<T: Real>(
    sampler: &mut OrbitSampler<'_, T>,
    nbhd: &ScaledNeighbourhood<T>,
    u: &Interval<T>,
    samples: usize,
    horizon: u64,
) -> Result<ExtendibilityEstimate> {
    if !nbhd.y.contains_interval(u) {
        return Err(invalid("U", format!("{u} is not inside J = {}", nbhd.y)));
    }
    let map = sampler.interval_map();
    let (mut done, mut bad, mut censored) = (0usize, 0usize, 0usize);
    let mut tries = 0u64;
    let max_tries = (samples as u64).saturating_mul(1_000_000);
    while done + censored < samples {
        tries += 1;
        if tries > max_tries {
            break;
        }
        let x = sampler.next_sample();
        if !u.contains(x) {
            continue;
        }
        let mut t = ImageTracker::new(map, x);
        let mut returned = false;
        for _ in 0..horizon {
            let next = sampler.advance(t.point());
            t.advance_to(next);
            if u.contains(t.point()) {
                returned = true;
                break;
            }
        }
        if !returned {
            censored += 1;
            continue;
        }
        done += 1;
        if !t.image().contains_interval(&nbhd.y_prime) {
            bad += 1;
        }
    }
    if done == 0 {
        return Err(Error::NoVisits { steps: tries });
    }
    Ok(ExtendibilityEstimate { fraction: bad as f64 / done as f64, samples: done, censored })
}
