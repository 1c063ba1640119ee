//! Numerical verification of the underlying algebraic theorem: the 19-term
//! multilinear function Z over the ten-parameter box is never positive.
//!
//! Z is linear in each of the eight box variables, so its maximum over the
//! box is attained at a vertex; enumerating all 2^8 vertices is therefore an
//! exact global check. Seeded random sampling corroborates.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::types::DomainError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoremError {
    #[error("{0}")]
    Domain(#[from] DomainError),
}

/// The eight box variables plus their caps: x-side bounded by U, y-side by V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZInputs {
    pub x1p: f64,
    pub x1m: f64,
    pub x2p: f64,
    pub x2m: f64,
    pub y1p: f64,
    pub y1m: f64,
    pub y2p: f64,
    pub y2m: f64,
    pub u: f64,
    pub v: f64,
}

impl ZInputs {
    pub fn new(
        x: [f64; 4],
        y: [f64; 4],
        u: f64,
        v: f64,
    ) -> Result<Self, TheoremError> {
        if !(u > 0.0) || !(v > 0.0) {
            return Err(DomainError::Invalid(format!("caps must be positive (U={u}, V={v})")).into());
        }
        for (name, val, cap) in [
            ("x1p", x[0], u),
            ("x1m", x[1], u),
            ("x2p", x[2], u),
            ("x2m", x[3], u),
            ("y1p", y[0], v),
            ("y1m", y[1], v),
            ("y2p", y[2], v),
            ("y2m", y[3], v),
        ] {
            if !val.is_finite() || val < 0.0 || val > cap {
                return Err(DomainError::OutOfRange {
                    name,
                    value: val,
                    min: 0.0,
                    max: cap,
                }
                .into());
            }
        }
        Ok(ZInputs {
            x1p: x[0],
            x1m: x[1],
            x2p: x[2],
            x2m: x[3],
            y1p: y[0],
            y1m: y[1],
            y2p: y[2],
            y2m: y[3],
            u,
            v,
        })
    }
}

/// The 19-term Z expression, written out exactly.
pub fn z_value(i: &ZInputs) -> f64 {
    i.x1p * i.y1p + i.x1m * i.y1m - i.x1p * i.y1m - i.x1m * i.y1p
        + i.y2p * i.x1p
        + i.y2m * i.x1m
        - i.y2p * i.x1m
        - i.y2m * i.x1p
        - i.y1p * i.x2p
        - i.y1m * i.x2m
        + i.y1p * i.x2m
        + i.y1m * i.x2p
        + 2.0 * i.x2p * i.y2p
        + 2.0 * i.x2m * i.y2m
        - i.v * i.x2p
        - i.v * i.x2m
        - i.u * i.y2p
        - i.u * i.y2m
        - i.u * i.v
}

#[derive(Debug, Clone, Copy)]
pub struct VertexScan {
    pub max_z: f64,
    pub argmax: ZInputs,
}

/// Exact box maximum by enumerating all 2^8 vertices (each variable at 0 or
/// its cap). Multilinearity makes the vertex maximum the global maximum.
pub fn verify_vertices(u: f64, v: f64) -> Result<VertexScan, TheoremError> {
    if !(u > 0.0) || !(v > 0.0) {
        return Err(DomainError::Invalid(format!("caps must be positive (U={u}, V={v})")).into());
    }
    let mut best: Option<VertexScan> = None;
    for mask in 0u16..256 {
        let pick = |bit: u16, cap: f64| if mask & (1 << bit) != 0 { cap } else { 0.0 };
        let inputs = ZInputs {
            x1p: pick(0, u),
            x1m: pick(1, u),
            x2p: pick(2, u),
            x2m: pick(3, u),
            y1p: pick(4, v),
            y1m: pick(5, v),
            y2p: pick(6, v),
            y2m: pick(7, v),
            u,
            v,
        };
        let z = z_value(&inputs);
        if best.map_or(true, |b| z > b.max_z) {
            best = Some(VertexScan {
                max_z: z,
                argmax: inputs,
            });
        }
    }
    Ok(best.expect("vertex enumeration is non-empty"))
}

const SHARD_SIZE: u64 = 1 << 16;

/// Largest Z over `n` uniform samples of the box, with a seeded generator.
/// Shards derive independent streams from the master seed, so the result is
/// deterministic regardless of thread scheduling.
pub fn verify_random(u: f64, v: f64, n: u64, seed: u64) -> Result<f64, TheoremError> {
    if !(u > 0.0) || !(v > 0.0) {
        return Err(DomainError::Invalid(format!("caps must be positive (U={u}, V={v})")).into());
    }
    if n == 0 {
        return Err(DomainError::Invalid("sample count must be >= 1".into()).into());
    }
    let shards = n.div_ceil(SHARD_SIZE);
    let max = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = SHARD_SIZE.min(n - shard * SHARD_SIZE);
            let mut local_max = f64::NEG_INFINITY;
            for _ in 0..count {
                let inputs = ZInputs {
                    x1p: rng.gen_range(0.0..=u),
                    x1m: rng.gen_range(0.0..=u),
                    x2p: rng.gen_range(0.0..=u),
                    x2m: rng.gen_range(0.0..=u),
                    y1p: rng.gen_range(0.0..=v),
                    y1m: rng.gen_range(0.0..=v),
                    y2p: rng.gen_range(0.0..=v),
                    y2m: rng.gen_range(0.0..=v),
                    u,
                    v,
                };
                local_max = local_max.max(z_value(&inputs));
            }
            local_max
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(max)
}
