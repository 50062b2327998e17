//! Objective surfaces over parameter pairs and their shape statistics.

use std::io::Write;

use rand::seq::index::sample;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{sobol_2d, Bounds, Score};
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub x: f64,
    pub y: f64,
    pub objective: f64,
    pub penalized: bool,
}

/// Evaluate `objective` at the first `n` Sobol points mapped into the box.
pub fn surface_scan<F>(objective: F, bounds: [Bounds; 2], n: usize) -> Vec<SurfaceRow>
where
    F: Fn(f64, f64) -> Score + Sync,
{
    sobol_2d(n)
        .into_par_iter()
        .map(|[u, v]| {
            let (x, y) = (bounds[0].lerp(u), bounds[1].lerp(v));
            let s = objective(x, y);
            SurfaceRow {
                x,
                y,
                objective: s.value,
                penalized: s.penalized,
            }
        })
        .collect()
}

pub fn write_surface<W: Write>(mut out: W, rows: &[SurfaceRow]) -> std::io::Result<()> {
    writeln!(out, "x,y,objective,penalized")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.x, r.y, r.objective, r.penalized)?;
    }
    Ok(())
}

/// Linear-interpolation quantile of an already sorted slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `IQR / median` of the non-penalized objective values. Penalized points
/// are excluded so a few unstable corners do not dominate.
pub fn flatness(rows: &[SurfaceRow]) -> f64 {
    let mut v: Vec<f64> = rows.iter().filter(|r| !r.penalized).map(|r| r.objective).collect();
    if v.len() < 2 {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let median = quantile(&v, 0.5);
    (quantile(&v, 0.75) - quantile(&v, 0.25)) / median
}

/// Clustering of the lowest-objective points of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimumRegion {
    /// Number of bottom-decile points.
    pub count: usize,
    /// Mean pairwise distance among the bottom decile, in unit-box coordinates.
    pub decile_spread: f64,
    /// Mean of the same statistic over random subsets of equal size.
    pub random_spread: f64,
    /// Centroid of the bottom decile in parameter coordinates.
    pub centroid: [f64; 2],
}

impl MinimumRegion {
    pub fn ratio(&self) -> f64 {
        self.decile_spread / self.random_spread
    }

    /// The bottom decile is at least twice as tight as random draws.
    pub fn is_clustered(&self) -> bool {
        self.ratio() < 0.5
    }
}

fn mean_pairwise(points: &[[f64; 2]]) -> f64 {
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sum += ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
            pairs += 1;
        }
    }
    sum / pairs as f64
}

/// Compare the spread of the bottom decile of `rows` with that of random
/// same-size subsets of the scanned points.
pub fn minimum_region(rows: &[SurfaceRow], bounds: [Bounds; 2], draws: usize, seed: u64) -> Option<MinimumRegion> {
    let k = (rows.len() / 10).max(2);
    if rows.len() < k + 1 {
        return None;
    }
    let unit: Vec<[f64; 2]> = rows
        .iter()
        .map(|r| {
            [
                (r.x - bounds[0].lower) / bounds[0].range(),
                (r.y - bounds[1].lower) / bounds[1].range(),
            ]
        })
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].objective.total_cmp(&rows[b].objective));
    let bottom: Vec<[f64; 2]> = order[..k].iter().map(|&i| unit[i]).collect();
    let mut rng = SimRng::seed_from_u64(seed);
    let random_spread = (0..draws.max(1))
        .map(|_| {
            let pick: Vec<[f64; 2]> = sample(&mut rng, rows.len(), k).iter().map(|i| unit[i]).collect();
            mean_pairwise(&pick)
        })
        .sum::<f64>()
        / draws.max(1) as f64;
    let centroid = order[..k].iter().fold([0.0, 0.0], |acc, &i| {
        [acc[0] + rows[i].x / k as f64, acc[1] + rows[i].y / k as f64]
    });
    Some(MinimumRegion {
        count: k,
        decile_spread: mean_pairwise(&bottom),
        random_spread,
        centroid,
    })
}
