//! Complex two-component radial fields `(u, v)(r)` sampled on a radial grid.

use std::sync::Arc;

use num_complex::Complex64;

use crate::grid::RadialGrid;

pub type C2 = [Complex64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<C2>,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<C2>) -> Self {
        assert_eq!(grid.len(), values.len(), "field length must match grid");
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![[c(0.0); 2]; n] }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> C2) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        Self { grid, values }
    }

    pub fn from_real(grid: Arc<RadialGrid>, f: impl Fn(f64) -> [f64; 2]) -> Self {
        Self::from_fn(grid, |r| {
            let [a, b] = f(r);
            [c(a), c(b)]
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64, C2) -> C2) -> Self {
        let values = self.grid.nodes.iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|_, [a, b]| [a * s, b * s])
    }

    pub fn add(&self, o: &RadialField) -> Self {
        let values = self.values.iter().zip(&o.values).map(|(a, b)| [a[0] + b[0], a[1] + b[1]]).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn sub(&self, o: &RadialField) -> Self {
        self.add(&o.scale(c(-1.0)))
    }

    /// σ₁ f = (v, u).
    pub fn sigma1(&self) -> Self {
        self.map(|_, [a, b]| [b, a])
    }

    /// σ₃ f = (u, -v).
    pub fn sigma3(&self) -> Self {
        self.map(|_, [a, b]| [a, -b])
    }

    /// ‖⟨r⟩^s f‖_{L²(r dr)}.
    pub fn l2_norm_weighted(&self, s: i32) -> f64 {
        let g: Vec<f64> = self
            .grid
            .nodes
            .iter()
            .zip(&self.values)
            .map(|(&r, v)| (1.0 + r * r).powi(s) * (v[0].norm_sqr() + v[1].norm_sqr()))
            .collect();
        self.grid.integrate(&g).max(0.0).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_weighted(0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()).fold(0.0, f64::max)
    }

    /// Node radius where |f| is largest.
    pub fn argmax_r(&self) -> f64 {
        let mut best = (0.0, self.grid.nodes[0]);
        for (r, v) in self.grid.nodes.iter().zip(&self.values) {
            let m = v[0].norm_sqr() + v[1].norm_sqr();
            if m > best.0 {
                best = (m, *r);
            }
        }
        best.1
    }

    /// Sesquilinear L²(r dr) inner product ∫ f · conj(g) r dr.
    pub fn inner(&self, g: &RadialField) -> Complex64 {
        self.integrate_pointwise(g, |a, b| a[0] * b[0].conj() + a[1] * b[1].conj())
    }

    /// Bilinear σ₃-pairing ∫ f · σ₃ g r dr (no conjugation).
    pub fn pair_sigma3(&self, g: &RadialField) -> Complex64 {
        self.integrate_pointwise(g, |a, b| a[0] * b[0] - a[1] * b[1])
    }

    fn integrate_pointwise(&self, g: &RadialField, f: impl Fn(&C2, &C2) -> Complex64) -> Complex64 {
        let mut s = c(0.0);
        for ((a, b), w) in self.values.iter().zip(&g.values).zip(&self.grid.weights) {
            s += f(a, b) * *w;
        }
        s
    }
}
