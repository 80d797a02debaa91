//! Low-discrepancy (Halton) sampling with a seeded Cranley–Patterson shift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::region::Region;

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    shift: Vec<f64>,
    next: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 || dim > PRIMES.len() {
            return Err(Error::input(format!("halton dimension {dim} unsupported")));
        }
        let shift = if seed == 0 {
            vec![0.0; dim]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..dim).map(|_| rng.gen::<f64>()).collect()
        };
        Ok(Self { dim, shift, next: 1 })
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.next;
        self.next += 1;
        (0..self.dim)
            .map(|k| {
                let x = radical_inverse(i, PRIMES[k]) + self.shift[k];
                x - x.floor()
            })
            .collect()
    }
}

/// `count` points of `region` whose axis neighbours at distance `margin`
/// also lie in it, by rejection from the bounding box.
pub fn sample_interior(region: &dyn Region, count: usize, seed: u64, margin: f64) -> Result<Vec<Vec<f64>>> {
    let (lo, hi) = region.bounds();
    let mut h = Halton::new(region.dim(), seed)?;
    let mut out = Vec::with_capacity(count);
    let max_draws = 2000 * count.max(1) + 100_000;
    let mut draws = 0;
    while out.len() < count {
        draws += 1;
        if draws > max_draws {
            return Err(Error::input(format!(
                "region too thin to sample: {} of {count} points after {max_draws} draws",
                out.len()
            )));
        }
        let u = h.next_point();
        let p: Vec<f64> = u
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(t, (a, b))| a + t * (b - a))
            .collect();
        if region.contains_with_margin(&p, margin) {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn sample(region: &dyn Region, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    sample_interior(region, count, seed, 0.0)
}
