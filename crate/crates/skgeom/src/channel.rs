//! Channel-signal laws: the distribution of each channel coordinate z_i induced by
//! projecting an i.i.d. Gaussian source onto a mapping.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma as GammaCdf, Normal as NormalCdf};
use statrs::function::gamma::gamma;

use crate::quad::adaptive_simpson;

/// Random stream for sample `index` of a run seeded with `seed`; independent of
/// how samples are distributed across workers.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

/// One-dimensional symmetric (or periodic) law of a channel coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ChannelLaw {
    Gaussian {
        var: f64,
    },
    /// Two-sided exponential with density e^{−|z|/scale}/(2·scale).
    Laplace {
        scale: f64,
    },
    /// |z| Rayleigh with parameter `scale`, random sign.
    DoubleRayleigh {
        scale: f64,
    },
    /// |z| gamma(shape, scale), random sign.
    DoubleGamma {
        shape: f64,
        scale: f64,
    },
    /// Density (α/4)|cos(αz + phase)| on [−π/α, π/α].
    Sine {
        alpha: f64,
        phase: f64,
    },
}

impl ChannelLaw {
    pub fn family(&self) -> &'static str {
        match self {
            Self::Gaussian { .. } => "gaussian",
            Self::Laplace { .. } => "laplace",
            Self::DoubleRayleigh { .. } => "double-rayleigh",
            Self::DoubleGamma { .. } => "double-gamma",
            Self::Sine { .. } => "sine",
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        let a = z.abs();
        match *self {
            Self::Gaussian { var } => (-0.5 * z * z / var).exp() / (2.0 * PI * var).sqrt(),
            Self::Laplace { scale } => (-a / scale).exp() / (2.0 * scale),
            Self::DoubleRayleigh { scale } => {
                let s2 = scale * scale;
                0.5 * a / s2 * (-0.5 * a * a / s2).exp()
            }
            Self::DoubleGamma { shape, scale } => {
                if a == 0.0 {
                    return if shape < 1.0 {
                        f64::INFINITY
                    } else if shape == 1.0 {
                        0.5 / scale
                    } else {
                        0.0
                    };
                }
                0.5 * a.powf(shape - 1.0) * (-a / scale).exp() / (gamma(shape) * scale.powf(shape))
            }
            Self::Sine { alpha, phase } => {
                if a > PI / alpha {
                    0.0
                } else {
                    0.25 * alpha * (alpha * z + phase).cos().abs()
                }
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Gaussian { var } => var,
            Self::Laplace { scale } => 2.0 * scale * scale,
            Self::DoubleRayleigh { scale } => 2.0 * scale * scale,
            Self::DoubleGamma { shape, scale } => shape * (shape + 1.0) * scale * scale,
            Self::Sine { alpha, phase } => {
                if (phase - FRAC_PI_2).abs() < 1e-12 {
                    2.0 * (PI * PI / 4.0 - 1.0) / (alpha * alpha)
                } else {
                    let h = PI / alpha;
                    adaptive_simpson(|z| z * z * self.pdf(z), -h, 0.0, 1e-13)
                        + adaptive_simpson(|z| z * z * self.pdf(z), 0.0, h, 1e-13)
                }
            }
        }
    }

    /// E{1/|z|}; infinite for laws with positive density at the origin.
    pub fn mean_inverse_abs(&self) -> f64 {
        match *self {
            Self::DoubleGamma { shape, scale } if shape > 1.0 => 1.0 / ((shape - 1.0) * scale),
            Self::DoubleRayleigh { scale } => (PI / 2.0).sqrt() / scale,
            _ => f64::INFINITY,
        }
    }

    /// Smallest t with P(|Z| > t) ≤ `mass`.
    pub fn tail_bound(&self, mass: f64) -> f64 {
        match *self {
            Self::Gaussian { var } => {
                NormalCdf::new(0.0, var.sqrt()).expect("positive variance").inverse_cdf(1.0 - 0.5 * mass)
            }
            Self::Laplace { scale } => -scale * mass.ln(),
            Self::DoubleRayleigh { scale } => scale * (-2.0 * mass.ln()).sqrt(),
            Self::DoubleGamma { shape, scale } => {
                GammaCdf::new(shape, 1.0 / scale).expect("positive gamma parameters").inverse_cdf(1.0 - mass)
            }
            Self::Sine { alpha, .. } => PI / alpha,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sign = |rng: &mut R| if rng.gen::<bool>() { 1.0 } else { -1.0 };
        match *self {
            Self::Gaussian { var } => Normal::new(0.0, var.sqrt()).expect("variance").sample(rng),
            Self::Laplace { scale } => sign(rng) * Exp::new(1.0 / scale).expect("scale").sample(rng),
            Self::DoubleRayleigh { scale } => {
                let u: f64 = rng.gen();
                sign(rng) * scale * (-2.0 * (1.0 - u).ln()).sqrt()
            }
            Self::DoubleGamma { shape, scale } => {
                sign(rng) * Gamma::new(shape, scale).expect("gamma parameters").sample(rng)
            }
            Self::Sine { alpha, phase } => {
                // Latitude of a uniform point on the sphere, placed on either half-period.
                let lat = (2.0 * rng.gen::<f64>() - 1.0).asin();
                let theta = if rng.gen::<bool>() { lat } else { PI - lat };
                let t = (theta - phase + PI).rem_euclid(2.0 * PI) - PI;
                t / alpha
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laws() -> Vec<ChannelLaw> {
        vec![
            ChannelLaw::Gaussian { var: 2.0 },
            ChannelLaw::Laplace { scale: 0.7 },
            ChannelLaw::DoubleRayleigh { scale: 1.3 },
            ChannelLaw::DoubleGamma { shape: 1.5, scale: 0.4 },
            ChannelLaw::Sine { alpha: 1.7, phase: FRAC_PI_2 },
            ChannelLaw::Sine { alpha: 0.8, phase: 0.0 },
        ]
    }

    #[test]
    fn densities_are_normalised() {
        for law in laws() {
            let t = law.tail_bound(1e-12);
            // Split at the origin: the gamma density has a kink (and the sine density a zero) there.
            let mass =
                adaptive_simpson(|z| law.pdf(z), -t, 0.0, 1e-11) + adaptive_simpson(|z| law.pdf(z), 0.0, t, 1e-11);
            assert!((mass - 1.0).abs() < 1e-4, "{law:?}: {mass}");
        }
    }

    #[test]
    fn sampler_moments_match_variance() {
        for law in laws() {
            let n = 200_000u64;
            let mut rng = stream_rng(7, 0);
            let v: Vec<f64> = (0..n).map(|_| law.sample(&mut rng).powi(2)).collect();
            let var = pairwise_sum(&v) / n as f64;
            assert!((var / law.variance() - 1.0).abs() < 0.02, "{law:?}: {var} vs {}", law.variance());
        }
    }

    #[test]
    fn tail_bounds_have_requested_mass() {
        for law in laws() {
            let t = law.tail_bound(1e-3);
            let inner =
                adaptive_simpson(|z| law.pdf(z), -t, 0.0, 1e-11) + adaptive_simpson(|z| law.pdf(z), 0.0, t, 1e-11);
            if !matches!(law, ChannelLaw::Sine { .. }) {
                assert!((1.0 - inner - 1e-3).abs() < 1e-6, "{law:?}: {inner}");
            }
        }
    }

    #[test]
    fn sine_law_examples() {
        let law = ChannelLaw::Sine { alpha: 1.0, phase: FRAC_PI_2 };
        assert!((law.variance() - 2.934802).abs() < 1e-6);
        assert_eq!(law.pdf(0.0).abs() < 1e-15, true);
        assert!(law.pdf(PI).abs() < 1e-15 && law.pdf(-PI).abs() < 1e-15);
        let q = ChannelLaw::Sine { alpha: 1.0, phase: 0.0 };
        let h = PI;
        let numeric = adaptive_simpson(|z| z * z * law.pdf(z), -h, 0.0, 1e-13)
            + adaptive_simpson(|z| z * z * law.pdf(z), 0.0, h, 1e-13);
        assert!((numeric - law.variance()).abs() < 1e-9);
        assert!((q.variance() - (PI * PI / 4.0 + PI - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn gamma_inverse_mean() {
        let law = ChannelLaw::DoubleGamma { shape: 1.5, scale: 0.3 };
        let t = law.tail_bound(1e-14);
        // Substitute z = s² to remove the integrable singularity of pdf(z)/z at 0.
        let numeric = 2.0 * adaptive_simpson(|s| 2.0 * s * law.pdf(s * s) / (s * s).max(1e-300), 0.0, t.sqrt(), 1e-12);
        assert!((numeric - law.mean_inverse_abs()).abs() < 1e-6 * law.mean_inverse_abs());
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert_eq!(pairwise_sum(&v), pairwise_sum(&v));
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
