//! Hard-palate shape as a quadratic `y = a·x² + b·x + c` over a finite
//! x domain, with nearest-point and arc-length queries.

use crate::error::{Error, Result};

/// Number of x bins used to extract the upper envelope of tongue points.
pub const PALATE_BINS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct PalateModel {
    /// `[a, b, c]` for `a·x² + b·x + c`.
    pub coeffs: [f64; 3],
    pub x_min: f64,
    pub x_max: f64,
    /// RMS residual of the fit over the envelope points.
    pub residual: f64,
}

/// Closest point of the palate curve to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Foot {
    pub x: f64,
    pub distance: f64,
    /// The query's x was outside the palate domain.
    pub clamped: bool,
}

// 5-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

impl PalateModel {
    pub fn new(coeffs: [f64; 3], x_min: f64, x_max: f64) -> Result<Self> {
        if !(x_min < x_max) || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::data("invalid palate model"));
        }
        Ok(PalateModel {
            coeffs,
            x_min,
            x_max,
            residual: 0.0,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let [a, b, c] = self.coeffs;
        (a * x + b) * x + c
    }

    pub fn slope(&self, x: f64) -> f64 {
        2.0 * self.coeffs[0] * x + self.coeffs[1]
    }

    /// The same curve shifted by `(dx, dy)`.
    pub fn translated(&self, dx: f64, dy: f64) -> PalateModel {
        let [a, b, c] = self.coeffs;
        PalateModel {
            coeffs: [a, b - 2.0 * a * dx, a * dx * dx - b * dx + c + dy],
            x_min: self.x_min + dx,
            x_max: self.x_max + dx,
            residual: self.residual,
        }
    }

    /// Arc length along the curve from `x_min` to `x`.
    pub fn arc_length(&self, x: f64) -> f64 {
        const PIECES: usize = 16;
        let (lo, hi) = (self.x_min, x);
        if hi == lo {
            return 0.0;
        }
        let h = (hi - lo) / PIECES as f64;
        let mut total = 0.0;
        for p in 0..PIECES {
            let mid = lo + (p as f64 + 0.5) * h;
            for (n, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let s = self.slope(mid + 0.5 * h * n);
                total += w * (1.0 + s * s).sqrt();
            }
        }
        total * 0.5 * h
    }

    pub fn total_length(&self) -> f64 {
        self.arc_length(self.x_max)
    }

    /// x at arc length `s` from `x_min`, clamped to the domain.
    pub fn x_at_arc_length(&self, s: f64) -> f64 {
        let (mut lo, mut hi) = (self.x_min, self.x_max);
        if s <= 0.0 {
            return lo;
        }
        if s >= self.total_length() {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.arc_length(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn sq_dist(&self, x: f64, px: f64, py: f64) -> f64 {
        let dy = self.eval(x) - py;
        (x - px) * (x - px) + dy * dy
    }

    /// Derivative of half the squared distance, a cubic in `x`.
    fn stationarity(&self, x: f64, px: f64, py: f64) -> f64 {
        (x - px) + (self.eval(x) - py) * self.slope(x)
    }

    /// Closest point on the curve restricted to `[x_min, x_max]`.
    pub fn nearest(&self, px: f64, py: f64) -> Foot {
        const SAMPLES: usize = 256;
        let step = (self.x_max - self.x_min) / SAMPLES as f64;
        let mut best_x = self.x_min;
        let mut best = self.sq_dist(self.x_min, px, py);
        let consider = |x: f64, best_x: &mut f64, best: &mut f64| {
            let d = self.sq_dist(x, px, py);
            if d < *best {
                *best = d;
                *best_x = x;
            }
        };
        consider(self.x_max, &mut best_x, &mut best);

        let mut prev_x = self.x_min;
        let mut prev_g = self.stationarity(prev_x, px, py);
        for i in 1..=SAMPLES {
            let x = if i == SAMPLES {
                self.x_max
            } else {
                self.x_min + i as f64 * step
            };
            let g = self.stationarity(x, px, py);
            if g == 0.0 {
                consider(x, &mut best_x, &mut best);
            } else if prev_g < 0.0 && g > 0.0 {
                // minimum of the squared distance inside (prev_x, x)
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.stationarity(mid, px, py) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                consider(0.5 * (lo + hi), &mut best_x, &mut best);
            }
            prev_x = x;
            prev_g = g;
        }
        Foot {
            x: best_x,
            distance: best.sqrt(),
            clamped: px < self.x_min || px > self.x_max,
        }
    }
}

fn distinct_count(xs: &[f64]) -> usize {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Per-bin maxima of `points`; the point with the largest y in each bin.
fn upper_envelope(points: &[(f64, f64)], bins: usize) -> Vec<(f64, f64)> {
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let mut best: Vec<Option<(f64, f64)>> = vec![None; bins];
    for &(x, y) in points {
        let b = (((x - lo) / width) as usize).min(bins - 1);
        match best[b] {
            Some((_, by)) if by >= y => {}
            _ => best[b] = Some((x, y)),
        }
    }
    best.into_iter().flatten().collect()
}

/// Solves the 3×3 system by Gaussian elimination with partial pivoting.
fn solve3(mut m: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

/// Least-squares quadratic through the upper envelope of tongue points.
pub fn fit_palate(points: &[(f64, f64)]) -> Result<PalateModel> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::NonFinite("tongue samples".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    if distinct_count(&xs) < 3 {
        return Err(Error::data(
            "palate fit needs at least 3 distinct x values",
        ));
    }
    let mut env = upper_envelope(points, PALATE_BINS);
    if env.len() < 3 {
        // clustered samples: fall back to per-x maxima
        let mut sorted = points.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        sorted.dedup_by(|a, b| a.0 == b.0);
        env = sorted;
    }

    let n = env.len() as f64;
    let mean = env.iter().map(|p| p.0).sum::<f64>() / n;
    let scale = (env.iter().map(|p| (p.0 - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut m = [[0.0; 4]; 3];
    for &(x, y) in &env {
        let u = (x - mean) / scale;
        let basis = [u * u, u, 1.0];
        for r in 0..3 {
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
            m[r][3] += basis[r] * y;
        }
    }
    let [al, be, ga] = solve3(m).ok_or_else(|| Error::data("degenerate palate samples"))?;
    let a = al / (scale * scale);
    let b = be / scale - 2.0 * al * mean / (scale * scale);
    let c = al * mean * mean / (scale * scale) - be * mean / scale + ga;

    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut model = PalateModel::new([a, b, c], lo, hi)?;
    model.residual = (env
        .iter()
        .map(|&(x, y)| (model.eval(x) - y).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(model)
}
