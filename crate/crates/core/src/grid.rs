//! Uniform grids, sampled functions, quadrature, and differentiation stencils.
//!
//! Everything downstream works on a uniform one-dimensional grid with
//! Dirichlet boxes. Two accuracy tiers coexist deliberately:
//!
//! * assembly of symmetric operators uses compact second-order forms (see
//!   [`crate::linop`]), which keeps matrices banded and exactly symmetric;
//! * residual diagnostics use the fourth-order stencils implemented here, so
//!   that operator-identity checks are not polluted by assembly error.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Minimum number of samples any grid must carry.
pub const MIN_GRID_SAMPLES: usize = 5;

/// A uniform one-dimensional grid on `[x_min, x_max]` with `n` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n: usize,
    h: f64,
}

impl Grid {
    /// Builds a uniform grid; rejects reversed endpoints and undersized grids.
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min < x_max) {
            return Err(CoreError::DomainOrder { x_min, x_max });
        }
        if n < MIN_GRID_SAMPLES {
            return Err(CoreError::UndersizedGrid {
                n,
                min: MIN_GRID_SAMPLES,
            });
        }
        let h = (x_max - x_min) / (n as f64 - 1.0);
        Ok(Self { x_min, x_max, n, h })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `(x_max - x_min) / (n - 1)`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of node `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.h * i as f64
    }

    /// All node coordinates.
    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Coordinates of the `n - 1` cell midpoints.
    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n - 1)
            .map(|i| self.x(i) + 0.5 * self.h)
            .collect()
    }

    /// Index of the node closest to the box center (exact center for odd `n`).
    pub fn center_index(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Errors unless `other` is the same grid (same endpoints and count).
    pub fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(CoreError::GridMismatch {
                a_min: self.x_min,
                a_max: self.x_max,
                a_n: self.n,
                b_min: other.x_min,
                b_max: other.x_max,
                b_n: other.n,
            })
        }
    }
}

/// A complex-valued function sampled on a [`Grid`].
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    /// Wraps complex samples; length must match the grid.
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(CoreError::TabulatedLength {
                len: values.len(),
                n: grid.n(),
            });
        }
        let f = Self { grid, values };
        f.ensure_finite()?;
        Ok(f)
    }

    /// Wraps real samples.
    pub fn from_real(grid: Grid, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Samples a real closed form on the grid nodes.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Self::from_real(grid, &values)
    }

    /// Samples a complex closed form on the grid nodes.
    pub fn from_fn_complex(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values: Vec<Complex64> = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Real parts of the samples.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    /// Pointwise squared modulus as a real vector.
    pub fn abs2(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Rejects NaN or infinite samples; callers rely on finite data.
    pub fn ensure_finite(&self) -> Result<()> {
        for v in &self.values {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(CoreError::NonNormalizable {
                    what: "grid function contains non-finite samples".to_string(),
                });
            }
        }
        Ok(())
    }

    /// Pointwise linear combination `self + factor * other`.
    pub fn add_scaled(&self, factor: Complex64, other: &GridFunction) -> Result<GridFunction> {
        self.grid.ensure_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + factor * b)
            .collect();
        GridFunction::new(self.grid, values)
    }

    /// Pointwise product with a real multiplier function.
    pub fn mul_real(&self, multiplier: &[f64]) -> Result<GridFunction> {
        if multiplier.len() != self.grid.n() {
            return Err(CoreError::TabulatedLength {
                len: multiplier.len(),
                n: self.grid.n(),
            });
        }
        let values = self
            .values
            .iter()
            .zip(multiplier)
            .map(|(v, m)| v * m)
            .collect();
        GridFunction::new(self.grid, values)
    }

    /// Multiplies all samples by a complex scalar.
    pub fn scale(&self, factor: Complex64) -> GridFunction {
        let values = self.values.iter().map(|v| v * factor).collect();
        Self {
            grid: self.grid,
            values,
        }
    }

    /// Quadrature norm `sqrt(∫ |f|^2 dx)` (Simpson weights).
    pub fn norm_l2(&self) -> f64 {
        let density: Vec<f64> = self.abs2();
        simpson_real(&density, self.grid.h()).sqrt()
    }

    /// Returns the function scaled to unit quadrature norm together with the
    /// norm it had before scaling.
    pub fn normalized(&self) -> Result<(GridFunction, f64)> {
        let norm = self.norm_l2();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(CoreError::NonNormalizable {
                what: format!("cannot normalize: quadrature norm = {norm}"),
            });
        }
        Ok((self.scale(Complex64::new(1.0 / norm, 0.0)), norm))
    }

    /// Flat-weight norm `sqrt(h * Σ |f_i|^2)` used for eigenvector scaling.
    pub fn norm_flat(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        (self.grid.h() * s).sqrt()
    }
}

/// Composite Simpson integral of a sampled complex function.
///
/// For an even sample count the final interval is handled by the trapezoid
/// rule; everywhere else the rule is exact for cubics up to rounding.
pub fn integrate(f: &GridFunction) -> Complex64 {
    let h = f.grid().h();
    let v = f.values();
    let re: Vec<f64> = v.iter().map(|c| c.re).collect();
    let im: Vec<f64> = v.iter().map(|c| c.im).collect();
    Complex64::new(simpson_real(&re, h), simpson_real(&im, h))
}

/// Composite Simpson integral of real samples with spacing `h`
/// (trapezoid correction on the last interval when `n` is even).
pub fn simpson_real(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 2, "integration needs at least two samples");
    // Simpson needs an odd number of samples; split off a trailing trapezoid
    // panel when the count is even.
    let (simpson_len, tail) = if n % 2 == 1 {
        (n, 0.0)
    } else {
        (n - 1, 0.5 * h * (values[n - 2] + values[n - 1]))
    };
    if simpson_len < 3 {
        return tail + 0.5 * h * (values[0] + values[1]);
    }
    let mut acc = values[0] + values[simpson_len - 1];
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, &v) in values.iter().enumerate().take(simpson_len - 1).skip(1) {
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    acc += 4.0 * odd + 2.0 * even;
    acc * h / 3.0 + tail
}

/// Cumulative Simpson antiderivative anchored at the first node.
///
/// `out[0] = 0`; even-index nodes accumulate full Simpson panels, odd-index
/// nodes use the standard three-point half-panel rule. Locally fourth-order.
pub fn cumulative_simpson(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 3, "cumulative integration needs at least three samples");
    let mut out = vec![0.0; n];
    out[1] = h * (5.0 * values[0] + 8.0 * values[1] - values[2]) / 12.0;
    for i in 2..n {
        out[i] = out[i - 2] + h * (values[i - 2] + 4.0 * values[i - 1] + values[i]) / 3.0;
    }
    out
}

/// Conjugate-linear (in the first slot) quadrature inner product `∫ f̄ g dx`.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
    f.grid().ensure_same(g.grid())?;
    let h = f.grid().h();
    let prod: Vec<Complex64> = f
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| a.conj() * b)
        .collect();
    let re: Vec<f64> = prod.iter().map(|c| c.re).collect();
    let im: Vec<f64> = prod.iter().map(|c| c.im).collect();
    Ok(Complex64::new(simpson_real(&re, h), simpson_real(&im, h)))
}

/// Quadrature distance `‖f - g‖` between two sampled functions.
pub fn l2_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    let diff = f.add_scaled(Complex64::new(-1.0, 0.0), g)?;
    Ok(diff.norm_l2())
}

/// Fourth-order first derivative of real samples (one-sided at the edges).
pub fn d1_fourth_order(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 5, "fourth-order first derivative needs >= 5 samples");
    let mut out = vec![0.0; n];
    let c = 1.0 / (12.0 * h);
    out[0] = c * (-25.0 * values[0] + 48.0 * values[1] - 36.0 * values[2] + 16.0 * values[3]
        - 3.0 * values[4]);
    out[1] = c * (-3.0 * values[0] - 10.0 * values[1] + 18.0 * values[2] - 6.0 * values[3]
        + values[4]);
    for i in 2..n - 2 {
        out[i] =
            c * (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]);
    }
    out[n - 2] = -c
        * (-3.0 * values[n - 1] - 10.0 * values[n - 2] + 18.0 * values[n - 3]
            - 6.0 * values[n - 4]
            + values[n - 5]);
    out[n - 1] = -c
        * (-25.0 * values[n - 1] + 48.0 * values[n - 2] - 36.0 * values[n - 3]
            + 16.0 * values[n - 4]
            - 3.0 * values[n - 5]);
    out
}

/// Fourth-order second derivative of real samples (one-sided at the edges).
pub fn d2_fourth_order(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 6, "fourth-order second derivative needs >= 6 samples");
    let mut out = vec![0.0; n];
    let c = 1.0 / (12.0 * h * h);
    out[0] = c * (45.0 * values[0] - 154.0 * values[1] + 214.0 * values[2] - 156.0 * values[3]
        + 61.0 * values[4]
        - 10.0 * values[5]);
    out[1] = c * (10.0 * values[0] - 15.0 * values[1] - 4.0 * values[2] + 14.0 * values[3]
        - 6.0 * values[4]
        + values[5]);
    for i in 2..n - 2 {
        out[i] = c
            * (-values[i - 2] + 16.0 * values[i - 1] - 30.0 * values[i] + 16.0 * values[i + 1]
                - values[i + 2]);
    }
    out[n - 2] = c
        * (10.0 * values[n - 1] - 15.0 * values[n - 2] - 4.0 * values[n - 3]
            + 14.0 * values[n - 4]
            - 6.0 * values[n - 5]
            + values[n - 6]);
    out[n - 1] = c
        * (45.0 * values[n - 1] - 154.0 * values[n - 2] + 214.0 * values[n - 3]
            - 156.0 * values[n - 4]
            + 61.0 * values[n - 5]
            - 10.0 * values[n - 6]);
    out
}

/// Fourth-order derivative of a complex grid function (`order` 1 or 2).
pub fn differentiate(f: &GridFunction, order: u32) -> Result<GridFunction> {
    let h = f.grid().h();
    let stencil = match order {
        1 => d1_fourth_order,
        2 => d2_fourth_order,
        _ => return Err(CoreError::UnsupportedOrder { order }),
    };
    if order == 2 && f.grid().n() < 6 {
        // The one-sided second-derivative rows need six samples.
        return Err(CoreError::UndersizedGrid {
            n: f.grid().n(),
            min: 6,
        });
    }
    let re: Vec<f64> = f.values().iter().map(|c| c.re).collect();
    let im: Vec<f64> = f.values().iter().map(|c| c.im).collect();
    let dre = stencil(&re, h);
    let dim = stencil(&im, h);
    let values = dre
        .into_iter()
        .zip(dim)
        .map(|(r, i)| Complex64::new(r, i))
        .collect();
    GridFunction::new(*f.grid(), values)
}

/// Fourth-order interpolation of node samples to the `n - 1` cell midpoints.
pub fn midpoint_interp(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    assert!(n >= 4, "midpoint interpolation needs >= 4 samples");
    let mut out = vec![0.0; n - 1];
    out[0] = (5.0 * values[0] + 15.0 * values[1] - 5.0 * values[2] + values[3]) / 16.0;
    for i in 1..n - 2 {
        out[i] =
            (-values[i - 1] + 9.0 * values[i] + 9.0 * values[i + 1] - values[i + 2]) / 16.0;
    }
    out[n - 2] = (5.0 * values[n - 1] + 15.0 * values[n - 2] - 5.0 * values[n - 3]
        + values[n - 4])
        / 16.0;
    out
}

/// Number of probe functions in [`gaussian_test_set`].
pub const TEST_SET_SIZE: usize = 5;

/// Smooth boundary-vanishing probe functions for operator-identity checks:
/// unit-width Gaussians `exp(-(x - c)^2)` at five centers spanning the middle
/// half of the box.
pub fn gaussian_test_set(grid: &Grid) -> Vec<GridFunction> {
    let quarter = 0.25 * (grid.x_max() - grid.x_min());
    let lo = grid.x_min() + quarter;
    let hi = grid.x_max() - quarter;
    (0..TEST_SET_SIZE)
        .map(|k| {
            let c = lo + (hi - lo) * k as f64 / (TEST_SET_SIZE as f64 - 1.0);
            GridFunction::from_fn(*grid, |x| (-(x - c) * (x - c)).exp())
                .expect("gaussian probes are finite")
        })
        .collect()
}
