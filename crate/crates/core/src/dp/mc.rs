use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::mass::{Aabb, Point, Shape, SuperposedPair};

/// Samples per independent RNG stream.
const CHUNK: usize = 8192;

/// Part of the support of ρ − ρ′. `weight` is the constant difference density
/// on the region when known, otherwise it is evaluated pointwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportRegion {
    pub bounds: Aabb,
    pub weight: Option<f64>,
}

/// Regions covering the support of ρ − ρ′.
///
/// Two boxes are split along all six pairs of faces into at most 27 sub-boxes
/// of constant difference density, and only the non-zero ones are kept; this
/// resolves thin difference layers exactly. Any other pair gets the bounding
/// box of both members.
pub fn support_regions(pair: &SuperposedPair) -> Vec<SupportRegion> {
    let (a, b) = (&pair.a, &pair.b);
    let (ba, bb) = (a.bounding_box(), b.bounding_box());
    if let (Shape::Box { .. }, Shape::Box { .. }) = (&a.shape, &b.shape) {
        let cuts: Vec<Vec<f64>> = (0..3)
            .map(|ax| {
                let mut v = vec![ba.min[ax], ba.max[ax], bb.min[ax], bb.max[ax]];
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        let mut out = Vec::new();
        for xs in cuts[0].windows(2) {
            for ys in cuts[1].windows(2) {
                for zs in cuts[2].windows(2) {
                    let bounds = Aabb {
                        min: [xs[0], ys[0], zs[0]],
                        max: [xs[1], ys[1], zs[1]],
                    };
                    if bounds.volume() <= 0.0 {
                        continue;
                    }
                    let mid: Point = std::array::from_fn(|i| 0.5 * (bounds.min[i] + bounds.max[i]));
                    let w = a.density_at(&mid) - b.density_at(&mid);
                    if w != 0.0 {
                        out.push(SupportRegion { bounds, weight: Some(w) });
                    }
                }
            }
        }
        out
    } else if a == b {
        Vec::new()
    } else {
        vec![SupportRegion {
            bounds: ba.union(&bb),
            weight: None,
        }]
    }
}

/// Monte Carlo estimate of Δ and its standard error.
///
/// r and r′ are drawn independently and uniformly over the support regions;
/// each sample contributes V² w(r) w(r′) / |r − r′|. Sample `i` always comes
/// from stream `i / CHUNK` of the seeded generator, so the result is the same
/// for any thread count.
pub fn delta_mc(pair: &SuperposedPair, samples: usize, seed: u64, g: f64) -> Result<(f64, f64)> {
    let regions = support_regions(pair);
    let volumes: Vec<f64> = regions.iter().map(|r| r.bounds.volume()).collect();
    let total_volume: f64 = volumes.iter().sum();
    if regions.is_empty() || total_volume <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let mut cumulative = Vec::with_capacity(volumes.len());
    let mut acc = 0.0;
    for v in &volumes {
        acc += v / total_volume;
        cumulative.push(acc);
    }

    let draw = |rng: &mut ChaCha8Rng| -> (Point, f64) {
        let u: f64 = rng.random();
        let idx = cumulative.partition_point(|&c| c <= u).min(regions.len() - 1);
        let reg = &regions[idx];
        let p: Point = std::array::from_fn(|i| {
            let t: f64 = rng.random();
            reg.bounds.min[i] + t * (reg.bounds.max[i] - reg.bounds.min[i])
        });
        let w = reg
            .weight
            .unwrap_or_else(|| pair.a.density_at(&p) - pair.b.density_at(&p));
        (p, w)
    };

    let n_chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let (p, w) = draw(&mut rng);
                let (q, wq) = draw(&mut rng);
                if w == 0.0 || wq == 0.0 {
                    continue;
                }
                let dist = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
                if dist == 0.0 {
                    continue;
                }
                let x = w * wq / dist;
                s += x;
                s2 += x * x;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = partial.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = samples as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    let scale = g * total_volume * total_volume;
    Ok((scale * mean, scale * (var / n).sqrt()))
}
