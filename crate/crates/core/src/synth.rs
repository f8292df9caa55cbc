//! Seeded synthetic floating-point datasets for tests, benchmarks and
//! profile seeding. Every generator is a pure function of its arguments.
//!
//! Two-byte words are bfloat16: the upper half of the float32 encoding.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::typed::FloatWidth;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Sum of two sinusoids around an offset.
    Smooth,
    /// A sinusoid with small Gaussian noise.
    NoisySmooth,
    /// Gaussian random walk.
    RandomWalk,
    /// Some byte positions constant, the rest random.
    ConstantPlanes,
    /// A handful of sign/exponent pairs with uniform random mantissas.
    RandomMantissa,
    /// Uniform values rounded to two decimals.
    Decimal,
    /// Noisy smooth values with the low mantissa bits cleared.
    Truncated,
    /// Alternating segments of smooth and random-mantissa data.
    Mixture,
    /// Zero-mean Gaussian values of small magnitude.
    Gaussian,
}

impl Family {
    pub const ALL: [Family; 9] = [
        Family::Smooth,
        Family::NoisySmooth,
        Family::RandomWalk,
        Family::ConstantPlanes,
        Family::RandomMantissa,
        Family::Decimal,
        Family::Truncated,
        Family::Mixture,
        Family::Gaussian,
    ];

    fn name(self) -> &'static str {
        match self {
            Family::Smooth => "smooth",
            Family::NoisySmooth => "noisy_smooth",
            Family::RandomWalk => "random_walk",
            Family::ConstantPlanes => "constant_planes",
            Family::RandomMantissa => "random_mantissa",
            Family::Decimal => "decimal",
            Family::Truncated => "truncated",
            Family::Mixture => "mixture",
            Family::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown dataset family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub family: Family,
    pub width: FloatWidth,
    pub data: Vec<u8>,
}

/// Application category each family stands in for when seeding static
/// profiles.
pub fn category_family(category: &str) -> Option<Family> {
    match category.to_ascii_uppercase().as_str() {
        "HPC" => Some(Family::NoisySmooth),
        "TS" => Some(Family::RandomWalk),
        "OBS" => Some(Family::Truncated),
        "DB" => Some(Family::Decimal),
        "ML" => Some(Family::Gaussian),
        _ => None,
    }
}

pub fn random_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0u8; len];
    rng.fill(&mut out[..]);
    out
}

fn encode(x: f64, width: FloatWidth, out: &mut Vec<u8>) {
    match width.bytes() {
        2 => out.extend_from_slice(&(((x as f32).to_bits() >> 16) as u16).to_le_bytes()),
        4 => out.extend_from_slice(&(x as f32).to_le_bytes()),
        _ => out.extend_from_slice(&x.to_le_bytes()),
    }
}

/// `values` words of `family` data at `width`, determined by `seed`.
pub fn generate(family: Family, width: FloatWidth, values: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (family as u64) << 56);
    let mut out = Vec::with_capacity(values * width.bytes());
    match family {
        Family::Smooth => {
            let a = rng.random_range(1.0..100.0);
            let b = rng.random_range(0.0..a / 2.0);
            let p1 = rng.random_range(500.0..50_000.0);
            let p2 = rng.random_range(50.0..5_000.0);
            let c = rng.random_range(-50.0..200.0);
            for i in 0..values {
                let t = i as f64 * std::f64::consts::TAU;
                encode(a * (t / p1).sin() + b * (t / p2).cos() + c, width, &mut out);
            }
        }
        Family::NoisySmooth => {
            let a = rng.random_range(1.0..1000.0);
            let p = rng.random_range(1_000.0..100_000.0);
            let c = rng.random_range(0.0..2.0) * a;
            let noise = Normal::new(0.0, a * 1e-3).unwrap();
            for i in 0..values {
                let t = i as f64 * std::f64::consts::TAU / p;
                encode(a * t.sin() + c + noise.sample(&mut rng), width, &mut out);
            }
        }
        Family::RandomWalk => {
            let mut x = rng.random_range(-1000.0..1000.0);
            let step = Normal::new(0.0, rng.random_range(0.01..1.0)).unwrap();
            for _ in 0..values {
                x += step.sample(&mut rng);
                encode(x, width, &mut out);
            }
        }
        Family::ConstantPlanes => {
            let n = width.bytes();
            // Each position is constant, low-entropy (a few symbols) or random.
            let kinds: Vec<(u8, u8)> = loop {
                let k: Vec<(u8, u8)> = (0..n).map(|_| (rng.random_range(0..3u8), rng.random())).collect();
                if k.iter().any(|&(t, _)| t == 0) && k.iter().any(|&(t, _)| t != 0) {
                    break k;
                }
            };
            for _ in 0..values {
                for &(kind, c) in &kinds {
                    out.push(match kind {
                        0 => c,
                        1 => c.wrapping_add(rng.random_range(0..4u8)),
                        _ => rng.random(),
                    });
                }
            }
        }
        Family::RandomMantissa => {
            let pairs: Vec<(u64, i32)> = (0..rng.random_range(1..=3))
                .map(|_| (rng.random_range(0..2u64), rng.random_range(-4..12)))
                .collect();
            for _ in 0..values {
                let (sign, exp) = pairs[rng.random_range(0..pairs.len())];
                match width.bytes() {
                    2 | 4 => {
                        let bits = (sign << 31) as u32 | (((127 + exp) as u32) << 23) | (rng.random::<u32>() >> 9);
                        if width.bytes() == 2 {
                            out.extend_from_slice(&((bits >> 16) as u16).to_le_bytes());
                        } else {
                            out.extend_from_slice(&bits.to_le_bytes());
                        }
                    }
                    _ => {
                        let bits = (sign << 63) | (((1023 + exp) as u64) << 52) | (rng.random::<u64>() >> 12);
                        out.extend_from_slice(&bits.to_le_bytes());
                    }
                }
            }
        }
        Family::Decimal => {
            let hi = [10.0, 100.0, 1000.0, 100_000.0][rng.random_range(0..4)];
            for _ in 0..values {
                encode((rng.random_range(0.0..hi) * 100.0f64).round() / 100.0, width, &mut out);
            }
        }
        Family::Truncated => {
            let a = rng.random_range(1.0..500.0);
            let p = rng.random_range(200.0..20_000.0);
            let noise = Normal::new(0.0, a * 0.05).unwrap();
            let f32_mask = !0u32 << rng.random_range(8..16);
            let f64_mask = !0u64 << rng.random_range(24..44);
            for i in 0..values {
                let x = a * (i as f64 * std::f64::consts::TAU / p).sin() + noise.sample(&mut rng);
                match width.bytes() {
                    8 => out.extend_from_slice(&(x.to_bits() & f64_mask).to_le_bytes()),
                    _ => encode(f32::from_bits((x as f32).to_bits() & f32_mask) as f64, width, &mut out),
                }
            }
        }
        Family::Mixture => {
            let seg = 1usize << rng.random_range(10..14);
            let smooth = generate(Family::Smooth, width, values, seed.wrapping_add(1));
            let random = generate(Family::RandomMantissa, width, values, seed.wrapping_add(2));
            let w = width.bytes();
            for i in 0..values {
                let src = if (i / seg) % 2 == 0 { &smooth } else { &random };
                out.extend_from_slice(&src[i * w..(i + 1) * w]);
            }
        }
        Family::Gaussian => {
            let sd = rng.random_range(0.005..0.2);
            let normal = Normal::new(0.0, sd).unwrap();
            for _ in 0..values {
                encode(normal.sample(&mut rng), width, &mut out);
            }
        }
    }
    out
}

/// Families making up the float32 clustering suite: smooth series, constant
/// byte planes, random mantissas and mixtures of these.
pub const FLOAT32_SUITE_FAMILIES: [Family; 8] = [
    Family::Smooth,
    Family::NoisySmooth,
    Family::RandomWalk,
    Family::ConstantPlanes,
    Family::RandomMantissa,
    Family::Decimal,
    Family::Truncated,
    Family::Mixture,
];

/// Forty float32 datasets of `values` words each: five seeds per family.
pub fn float32_suite(values: usize) -> Vec<Dataset> {
    suite(FloatWidth::SINGLE, &FLOAT32_SUITE_FAMILIES, 5, values)
}

/// The float32 suite plus twelve float64 datasets from the value-level
/// families.
pub fn structured_suite(values: usize) -> Vec<Dataset> {
    let mut out = float32_suite(values);
    let f64_families = [
        Family::Smooth,
        Family::NoisySmooth,
        Family::RandomWalk,
        Family::Decimal,
        Family::Truncated,
        Family::Mixture,
    ];
    out.extend(suite(FloatWidth::DOUBLE, &f64_families, 2, values / 2));
    out
}

fn suite(width: FloatWidth, families: &[Family], seeds: u64, values: usize) -> Vec<Dataset> {
    families
        .iter()
        .flat_map(|&family| {
            (0..seeds).map(move |s| Dataset {
                name: format!("{family}_{}x{s}", width.bytes() * 8),
                family,
                width,
                data: generate(family, width, values, 1000 + s),
            })
        })
        .collect()
}
