//! One-dimensional reference solver by monotone rearrangement.
//!
//! In one dimension `e^{−φ}/Z = A(φ′) φ″` says that `φ′` pushes the
//! probability measure `e^{−φ}/Z` onto `A dx`, so `φ′ = L⁻¹ ∘ F` where `L`
//! is the CDF of `A` and `F` the CDF of `e^{−φ}/Z`. Iterating that map on
//! a grid gives a solver that shares nothing with the log-sum-exp family.

use crate::cubature::gauss_legendre;
use crate::duality::{GridFunction, GridSpec};
use crate::error::{Error, Result};

const PANELS: usize = 512;
const ORDER: usize = 8;
pub const ORACLE_TOL: f64 = 1e-10;
pub const ORACLE_MAX_SWEEPS: usize = 10_000;

/// Positive probability density on `[−1, 1]` with tabulated CDF.
pub struct Density1d {
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    /// `∫_{−1}^{x_j} A` at panel ends `x_j = −1 + 2j/PANELS`.
    table: Vec<f64>,
    barycenter: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl std::fmt::Debug for Density1d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Density1d").field("mass", &self.mass()).finish()
    }
}

impl Density1d {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Result<Self> {
        for i in 0..=4000 {
            let x = -1.0 + i as f64 / 2000.0;
            let v = f(x);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveDensity);
            }
        }
        let (nodes, weights) = gauss_legendre(ORDER);
        let mut d = Self {
            f: Box::new(f),
            table: vec![0.0; PANELS + 1],
            barycenter: 0.0,
            nodes,
            weights,
        };
        let mut first = 0.0;
        for j in 0..PANELS {
            let a = d.panel_start(j);
            let b = a + d.panel_width();
            d.table[j + 1] = d.table[j] + d.piece(a, b);
            first += d.weighted_piece(a, b);
        }
        d.barycenter = first;
        let mass = d.mass();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(Error::NonNormalizedDensity { mass });
        }
        Ok(d)
    }

    /// `a + b x`.
    pub fn affine(a: f64, b: f64) -> Result<Self> {
        Self::new(move |x| a + b * x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn mass(&self) -> f64 {
        self.table[PANELS]
    }

    fn panel_width(&self) -> f64 {
        2.0 / PANELS as f64
    }

    fn panel_start(&self, j: usize) -> f64 {
        -1.0 + j as f64 * self.panel_width()
    }

    fn piece(&self, a: f64, b: f64) -> f64 {
        let w = b - a;
        self.nodes.iter().zip(&self.weights).map(|(&t, &q)| q * self.eval(a + w * t)).sum::<f64>() * w
    }

    fn weighted_piece(&self, a: f64, b: f64) -> f64 {
        let w = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &q)| {
                let x = a + w * t;
                q * x * self.eval(x)
            })
            .sum::<f64>()
            * w
    }

    /// `∫ x A dx`.
    pub fn barycenter(&self) -> f64 {
        self.barycenter
    }

    fn panel_of(&self, x: f64) -> usize {
        (((x + 1.0) / self.panel_width()).floor().max(0.0) as usize).min(PANELS - 1)
    }

    /// `∫_{−1}^x A`.
    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        let j = self.panel_of(x);
        self.table[j] + self.piece(self.panel_start(j), x)
    }

    /// `∫_x^1 A`, accurate near `x = 1`.
    pub fn upper(&self, x: f64) -> f64 {
        let x = x.clamp(-1.0, 1.0);
        let j = self.panel_of(x);
        (self.table[PANELS] - self.table[j + 1]) + self.piece(x, self.panel_start(j + 1))
    }

    /// Solves `cdf(x) = p` (or `upper(x) = p` when `from_right`).
    fn invert(&self, p: f64, from_right: bool) -> f64 {
        let g = |x: f64| if from_right { p - self.upper(x) } else { self.cdf(x) - p };
        // Panel by bisection on the table, then safeguarded Newton.
        let (mut lo, mut hi) = if from_right {
            let target = self.table[PANELS] - p;
            let j = self.table.partition_point(|&t| t <= target).clamp(1, PANELS);
            (self.panel_start(j - 1), self.panel_start(j))
        } else {
            let j = self.table.partition_point(|&t| t <= p).clamp(1, PANELS);
            (self.panel_start(j - 1), self.panel_start(j))
        };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..100 {
            let r = g(x);
            if r == 0.0 {
                return x;
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - r / self.eval(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-16 * (1.0 + x.abs()) || hi - lo <= 1e-16 {
                return next;
            }
            x = next;
        }
        x
    }
}

#[derive(Debug, Clone)]
pub struct Oracle1d {
    pub phi: GridFunction<f64>,
    pub dphi: Vec<f64>,
    pub sweeps: usize,
    pub last_update: f64,
    /// `sup |L(φ′) − F|`, the integrated form of the equation.
    pub residual_cdf: f64,
    /// `sup |e^{−φ}/Z − A(φ′)φ″|` with `φ″` from five-point differences.
    pub residual_pointwise: f64,
}

/// Cumulative integral with fourth-order weights; `out[0] = 0`.
fn cumulative(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    out[0] = 0.0;
    for i in 0..n - 1 {
        let step = if i == 0 {
            9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        } else if i == n - 2 {
            9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]
        } else {
            -f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]
        };
        out[i + 1] = out[i] + h / 24.0 * step;
    }
}

struct Cdfs {
    /// Unnormalized left and right CDFs including the exponential tails.
    left: Vec<f64>,
    right: Vec<f64>,
    dens: Vec<f64>,
    z: f64,
}

fn cdfs(dphi: &[f64], h: f64) -> Cdfs {
    let n = dphi.len();
    let mut phi = vec![0.0; n];
    cumulative(dphi, h, &mut phi);
    let lo = phi.iter().copied().fold(f64::INFINITY, f64::min);
    let dens: Vec<f64> = phi.iter().map(|&p| (lo - p).exp()).collect();
    let mut left = vec![0.0; n];
    cumulative(&dens, h, &mut left);
    // Beyond the box `φ` continues with its boundary slope.
    let tail_l = dens[0] / (-dphi[0]).max(1e-300);
    let tail_r = dens[n - 1] / dphi[n - 1].max(1e-300);
    let total = left[n - 1];
    let right: Vec<f64> = left.iter().map(|&c| (total - c) + tail_r).collect();
    let left: Vec<f64> = left.into_iter().map(|c| c + tail_l).collect();
    Cdfs {
        z: total + tail_l + tail_r,
        left,
        right,
        dens,
    }
}

/// Cubic Hermite value of the left CDF at `ξ = ξ_0 + s`.
fn left_at(c: &Cdfs, dphi: &[f64], x0: f64, h: f64, x: f64) -> (f64, f64) {
    let n = c.left.len();
    let t = (x - x0) / h;
    if t <= 0.0 {
        let a = -dphi[0];
        let v = c.left[0] * (a * (x - x0)).exp();
        return (v, c.z - v);
    }
    if t >= (n - 1) as f64 {
        let a = dphi[n - 1];
        let v = c.right[n - 1] * (-a * (x - x0 - (n - 1) as f64 * h)).exp();
        return (c.z - v, v);
    }
    let i = (t.floor() as usize).min(n - 2);
    let s = t - i as f64;
    let h00 = 2.0 * s * s * s - 3.0 * s * s + 1.0;
    let h10 = s * s * s - 2.0 * s * s + s;
    let h01 = -2.0 * s * s * s + 3.0 * s * s;
    let h11 = s * s * s - s * s;
    let herm = |a: f64, b: f64, da: f64, db: f64| h00 * a + h10 * h * da + h01 * b + h11 * h * db;
    let l = herm(c.left[i], c.left[i + 1], c.dens[i], c.dens[i + 1]);
    let r = herm(c.right[i], c.right[i + 1], -c.dens[i], -c.dens[i + 1]);
    (l, r)
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn median(c: &Cdfs, dphi: &[f64], x0: f64, h: f64) -> f64 {
    let n = c.left.len();
    let half = 0.5 * c.z;
    let k = c.left.partition_point(|&v| v < half).clamp(1, n - 1);
    let (mut lo, mut hi) = (x0 + h * (k - 1) as f64, x0 + h * k as f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if left_at(c, dphi, x0, h, mid).0 < half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `L⁻¹(F(ξ + shift))` at every node.
fn rearranged(density: &Density1d, c: &Cdfs, dphi: &[f64], xs: &[f64], h: f64, shift: f64) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let (l, r) = if shift == 0.0 {
                let i = ((x - xs[0]) / h).round() as usize;
                (c.left[i], c.right[i])
            } else {
                left_at(c, dphi, xs[0], h, x + shift)
            };
            if l <= r {
                density.invert(l / c.z, false)
            } else {
                density.invert(r / c.z, true)
            }
        })
        .collect()
}

/// Solves `e^{−φ}/Z = A(φ′)φ″` on `[−R, R]` with `nodes` points, normalized
/// so that the median of `e^{−φ}/Z` sits at `ξ = 0` and `φ(0) = 0`.
pub fn solve_1d_pushforward(density: &Density1d, radius: f64, nodes: usize) -> Result<Oracle1d> {
    solve_1d_with_limit(density, radius, nodes, ORACLE_MAX_SWEEPS)
}

pub fn solve_1d_with_limit(density: &Density1d, radius: f64, nodes: usize, max_sweeps: usize) -> Result<Oracle1d> {
    // `∫ φ′ e^{−φ} = 0`, so the pushforward of `e^{−φ}/Z` always has its
    // barycenter at the origin.
    if density.barycenter().abs() > 1e-10 {
        return Err(Error::NonZeroBarycenter {
            barycenter: density.barycenter(),
        });
    }
    let spec = GridSpec::<f64>::new(1, radius, nodes)?;
    if nodes < 8 {
        return Err(Error::InvalidInput("the oracle needs at least 8 nodes".into()));
    }
    let h = spec.spacing();
    let xs: Vec<f64> = (0..nodes).map(|i| -radius + i as f64 * h).collect();
    let mut dphi: Vec<f64> = xs.iter().map(|&x| (x / 2.0).tanh()).collect();
    let mut last_update = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let c = cdfs(&dphi, h);
        let next = rearranged(density, &c, &dphi, &xs, h, 0.0);
        last_update = next.iter().zip(&dphi).map(|(a, b)| (a - b).abs()).fold(0.0, nan_max);
        dphi = next;
        if last_update <= ORACLE_TOL {
            break;
        }
    }
    if !(last_update <= ORACLE_TOL) {
        return Err(Error::NoConvergence { sweeps, last_update });
    }
    // The map commutes with translations, so the fixed point is only defined
    // up to one; move the median to the origin with a final shifted sweep.
    let c = cdfs(&dphi, h);
    let med = median(&c, &dphi, xs[0], h);
    let dphi = rearranged(density, &c, &dphi, &xs, h, med);
    let c = cdfs(&dphi, h);
    let mut residual_cdf: f64 = 0.0;
    for i in 0..nodes {
        let r = if c.left[i] <= c.right[i] {
            density.cdf(dphi[i]) - c.left[i] / c.z
        } else {
            density.upper(dphi[i]) - c.right[i] / c.z
        };
        residual_cdf = nan_max(residual_cdf, r.abs());
    }
    let mut residual_pointwise: f64 = 0.0;
    for i in 2..nodes - 2 {
        let d2 = (-dphi[i + 2] + 8.0 * dphi[i + 1] - 8.0 * dphi[i - 1] + dphi[i - 2]) / (12.0 * h);
        let r = c.dens[i] / c.z - density.eval(dphi[i]) * d2;
        residual_pointwise = nan_max(residual_pointwise, r.abs());
    }
    let mut phi = vec![0.0; nodes];
    cumulative(&dphi, h, &mut phi);
    let mid = nodes / 2;
    let at_zero = if nodes % 2 == 1 { phi[mid] } else { 0.5 * (phi[mid - 1] + phi[mid]) };
    Ok(Oracle1d {
        phi: GridFunction {
            spec,
            values: phi.into_iter().map(|p| p - at_zero).collect(),
        },
        dphi,
        sweeps,
        last_update,
        residual_cdf,
        residual_pointwise,
    })
}
