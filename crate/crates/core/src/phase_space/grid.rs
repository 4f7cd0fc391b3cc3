use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform square lattice over the latent phase space `[-L, L)^2`.
///
/// Point `i` has coordinates `(-L + a h, -L + b h)` with `a = i % n`,
/// `b = i / n` and `h = 2L / n`: row-major with `zeta` varying fastest. The
/// lattice is anchored at the lower-left corner so that the origin is a
/// lattice point whenever `n` is even.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentGrid {
    half_width: f64,
    points_per_axis: usize,
}

impl LatentGrid {
    pub fn new(half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::config(format!(
                "grid half-width must be positive, got {half_width}"
            )));
        }
        if points_per_axis == 0 {
            return Err(Error::config("grid needs at least one point per axis"));
        }
        Ok(Self {
            half_width,
            points_per_axis,
        })
    }

    /// The 100 x 100 lattice over `[-4, 4]^2`.
    pub fn standard() -> Self {
        Self {
            half_width: 4.0,
            points_per_axis: 100,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Number of latent basis points `N = n^2`.
    pub fn len(&self) -> usize {
        self.points_per_axis * self.points_per_axis
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    fn axis(&self, a: usize) -> f64 {
        -self.half_width + a as f64 * self.spacing()
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        let n = self.points_per_axis;
        (self.axis(i % n), self.axis(i / n))
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Readout contexts: projection angles `theta_j = j pi / J`, `j = 1..=J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSet {
    angles: Vec<f64>,
}

impl ContextSet {
    pub fn uniform(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::config("need at least one readout context"));
        }
        let angles = (1..=count)
            .map(|j| j as f64 * std::f64::consts::PI / count as f64)
            .collect();
        Ok(Self { angles })
    }

    /// Arbitrary angles; must be strictly increasing inside `(0, pi]`.
    pub fn from_angles(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::config("need at least one readout context"));
        }
        let in_range = angles.iter().all(|&t| t > 0.0 && t <= std::f64::consts::PI);
        let increasing = angles.windows(2).all(|w| w[0] < w[1]);
        if !in_range || !increasing {
            return Err(Error::config("context angles must be strictly increasing in (0, pi]"));
        }
        Ok(Self { angles })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// `(cos theta, sin theta)` with round-off at multiples of pi/2 snapped to zero.
    pub fn direction(&self, j: usize) -> (f64, f64) {
        let snap = |x: f64| if x.abs() < 1e-12 { 0.0 } else { x };
        let t = self.angles[j];
        (snap(t.cos()), snap(t.sin()))
    }
}

/// `K` uniform outcome bins over `[-y_max, y_max]`.
///
/// Edges are `e_k = y_max (2k - K) / K`. A value lying exactly on an interior
/// edge belongs to the higher-index bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeBinning {
    bins: usize,
    y_max: f64,
}

/// Default `y_max` as a multiple of the grid's half-diagonal `sqrt(2) L`.
pub const DEFAULT_Y_MAX_FACTOR: f64 = 1.05;

impl OutcomeBinning {
    pub fn new(bins: usize, y_max: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::config("need at least one outcome bin"));
        }
        if !(y_max.is_finite() && y_max > 0.0) {
            return Err(Error::config(format!("y_max must be positive, got {y_max}")));
        }
        Ok(Self { bins, y_max })
    }

    /// `y_max = factor * sqrt(2) * L`; the factor must exceed 1 so that every
    /// lattice projection falls inside the binned range.
    pub fn for_grid(bins: usize, grid: &LatentGrid, factor: f64) -> Result<Self> {
        if !(factor > 1.0) {
            return Err(Error::config(format!(
                "y_max factor must exceed 1 to cover all grid projections, got {factor}"
            )));
        }
        Self::new(bins, factor * std::f64::consts::SQRT_2 * grid.half_width())
    }

    pub fn len(&self) -> usize {
        self.bins
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        2.0 * self.y_max / self.bins as f64
    }

    pub fn edge(&self, k: usize) -> f64 {
        self.y_max * (2.0 * k as f64 - self.bins as f64) / self.bins as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins).map(|k| self.edge(k)).collect()
    }

    /// Bin containing `y`, or `None` outside `[-y_max, y_max]`.
    pub fn bin_of(&self, y: f64) -> Option<usize> {
        if !(y.abs() <= self.y_max) {
            return None;
        }
        let k_max = self.bins - 1;
        let guess = ((y + self.y_max) * self.bins as f64 / (2.0 * self.y_max)).floor();
        let mut k = (guess.max(0.0) as usize).min(k_max);
        // settle against the exact edge values
        while k > 0 && y < self.edge(k) {
            k -= 1;
        }
        while k < k_max && y >= self.edge(k + 1) {
            k += 1;
        }
        Some(k)
    }
}
