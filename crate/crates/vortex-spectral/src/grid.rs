//! Radial grids with quadrature weights for `∫ f(r) r dr`, and finite
//! difference weights on nonuniform nodes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("invalid grid spec: {0}")]
    Invalid(String),
}

/// Geometric spacing from `r_min` to `r_geo`, then uniform spacing `h` up to `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_geo: f64,
    pub n_geo: usize,
    pub h: f64,
    pub r_max: f64,
}

/// Geometric node count whose last cell at `r_geo` is about `h` wide.
pub fn geo_count(r_min: f64, r_geo: f64, h: f64) -> usize {
    ((r_geo / r_min).ln() * r_geo / h).ceil().max(2.0) as usize
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { r_min: 1e-4, r_geo: 2.0, n_geo: geo_count(1e-4, 2.0, 0.02), h: 0.02, r_max: 60.0 }
    }
}

impl GridSpec {
    pub fn with_r_max(mut self, r_max: f64) -> Self {
        self.r_max = r_max;
        self
    }

    /// Uniform step `h`; the geometric section is resized so its last cell is also about `h`.
    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self.n_geo = geo_count(self.r_min, self.r_geo, h);
        self
    }

    /// Halve every spacing (geometric ratio square-rooted, uniform step halved).
    pub fn refined(self) -> Self {
        Self { n_geo: 2 * self.n_geo, h: 0.5 * self.h, ..self }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let ok = self.r_min > 0.0
            && self.r_min <= 1e-4
            && self.r_geo > self.r_min
            && self.r_max > self.r_geo
            && self.h > 0.0
            && self.n_geo >= 2;
        if ok {
            Ok(())
        } else {
            Err(GridError::Invalid(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub spec: GridSpec,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(spec: GridSpec) -> Result<Self, GridError> {
        spec.validate()?;
        let mut nodes = Vec::with_capacity(spec.n_geo + (spec.r_max / spec.h) as usize + 2);
        let q = (spec.r_geo / spec.r_min).powf(1.0 / spec.n_geo as f64);
        for j in 0..spec.n_geo {
            nodes.push(spec.r_min * q.powi(j as i32));
        }
        let n_uni = ((spec.r_max - spec.r_geo) / spec.h).round().max(1.0) as usize;
        for j in 0..=n_uni {
            nodes.push(spec.r_geo + (spec.r_max - spec.r_geo) * j as f64 / n_uni as f64);
        }
        let weights = radial_weights(&nodes);
        Ok(Self { spec, nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// ∫ f r dr over [r_min, r_max] for samples `f` at the nodes.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// Index of the node closest to `r`.
    pub fn nearest(&self, r: f64) -> usize {
        let j = self.nodes.partition_point(|&v| v < r);
        if j == 0 {
            0
        } else if j == self.nodes.len() {
            j - 1
        } else if r - self.nodes[j - 1] < self.nodes[j] - r {
            j - 1
        } else {
            j
        }
    }

    /// Weights of a five-point fourth-order stencil for derivative `m` at node `j`
    /// (centered in the interior, one-sided at the ends), as (first index, weights).
    pub fn stencil(&self, j: usize, m: usize) -> (usize, Vec<f64>) {
        let width = 5 + m.saturating_sub(2);
        let n = self.nodes.len();
        let start = j.saturating_sub(width / 2).min(n - width);
        let w = fornberg(self.nodes[j], &self.nodes[start..start + width], m);
        (start, w)
    }
}

/// Piecewise-quadratic weights for ∫₀ f(r) r dr, exact when f is quadratic on
/// each panel of two intervals. The gap [0, x₀] is taken with f(x₀); for the
/// even radial fields of the flat case it would otherwise leave an x₀²/2·f(0)
/// offset that the symbol λ amplifies at large ξ.
pub fn radial_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    w[0] = 0.5 * x[0] * x[0];
    let mut j = 0;
    while j + 2 < n {
        add_panel(x, [j, j + 1, j + 2], x[j], x[j + 2], &mut w);
        j += 2;
    }
    if j + 1 < n {
        // last single interval, using the quadratic through three trailing nodes
        let i0 = n - 3;
        add_panel(x, [i0, i0 + 1, i0 + 2], x[n - 2], x[n - 1], &mut w);
    }
    w
}

fn add_panel(x: &[f64], idx: [usize; 3], a: f64, b: f64, w: &mut [f64]) {
    // 3-point Gauss–Legendre is exact for the cubic L_i(r) r
    const G: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const GW: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let (c, hw) = (0.5 * (a + b), 0.5 * (b - a));
    for (g, gw) in G.iter().zip(GW) {
        let r = c + hw * g;
        for (k, &i) in idx.iter().enumerate() {
            let mut l = 1.0;
            for (m, &im) in idx.iter().enumerate() {
                if m != k {
                    l *= (r - x[im]) / (x[i] - x[im]);
                }
            }
            w[i] += gw * hw * l * r;
        }
    }
}

/// Fornberg's algorithm: weights for the `m`-th derivative at `z` from values at `x`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Frequency grid for ∫_0^∞ g(ξ) dξ on a smooth map from a uniform parameter τ.
/// The map is logarithmic near 0 and uniform (in ξ or in λ) at large ξ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiGridSpec {
    pub xi_min: f64,
    pub xi_max: f64,
    /// scale where the map turns from logarithmic to uniform
    pub scale: f64,
    /// step in the uniform parameter
    pub dtau: f64,
    /// uniform in λ(ξ) at large ξ rather than in ξ
    pub uniform_in_lambda: bool,
}

impl Default for XiGridSpec {
    fn default() -> Self {
        Self { xi_min: 1e-3, xi_max: 20.0, scale: 0.5, dtau: 0.04, uniform_in_lambda: false }
    }
}

impl XiGridSpec {
    pub fn refined(self) -> Self {
        Self { dtau: 0.5 * self.dtau, ..self }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.xi_min > 0.0 && self.xi_max > self.xi_min && self.scale > 0.0 && self.dtau > 0.0 {
            Ok(())
        } else {
            Err(GridError::Invalid(format!("{self:?}")))
        }
    }
}

/// Positive frequency nodes with weights for ∫_0^∞ dξ. The missing piece
/// [0, ξ_min] is credited to the first node assuming g(ξ) ∝ ξ there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub spec: XiGridSpec,
    pub xi: Vec<f64>,
    pub weights: Vec<f64>,
}

fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t + (-t).exp()
    } else {
        t.exp().ln_1p()
    }
}

fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

pub fn lambda_of_xi(xi: f64) -> f64 {
    xi * (xi * xi + 2.0).sqrt()
}

pub fn xi_of_lambda(lam: f64) -> f64 {
    // ξ² = √(1+λ²) - 1, written to avoid cancellation at small λ
    let l2 = lam * lam;
    let x2 = l2 / ((1.0 + l2).sqrt() + 1.0);
    lam.signum() * x2.sqrt()
}

pub fn dlambda_dxi(xi: f64) -> f64 {
    2.0 * (xi * xi + 1.0) / (xi * xi + 2.0).sqrt()
}

impl XiGrid {
    pub fn new(spec: XiGridSpec) -> Result<Self, GridError> {
        spec.validate()?;
        let s = spec.scale;
        // the map variable: ξ itself, or λ(ξ)
        let (to_u, from_u): (fn(f64) -> f64, fn(f64) -> f64) =
            if spec.uniform_in_lambda { (lambda_of_xi, xi_of_lambda) } else { (|x| x, |x| x) };
        let t0 = softplus_inv(to_u(spec.xi_min) / s);
        let t1 = softplus_inv(to_u(spec.xi_max) / s);
        let n = ((t1 - t0) / spec.dtau).ceil() as usize;
        let dt = (t1 - t0) / n as f64;
        let mut xi = Vec::with_capacity(n + 1);
        let mut weights = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = t0 + k as f64 * dt;
            let u = s * softplus(t);
            let x = from_u(u);
            let du = s * sigmoid(t);
            let dxi = if spec.uniform_in_lambda { du / dlambda_dxi(x) } else { du };
            let end = if k == 0 || k == n { 0.5 } else { 1.0 };
            xi.push(x);
            weights.push(end * dxi * dt);
        }
        xi[0] = spec.xi_min;
        xi[n] = spec.xi_max;
        // the log end decays geometrically; credit ∫_0^ξ_min for g ~ ξ
        weights[0] += 0.5 * spec.xi_min;
        Ok(Self { spec, xi, weights })
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn integrate(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }
}
