//! Distorted Fourier transform built from an eigenfunction table.
//!
//! F̃φ(ξ) = ∫ ψ(ξ, r)·σ₃φ(r) r dr and
//! φ(r) = (1/π) ∫ ζ(ξ) ψ(ξ, r) λ′(ξ) sign ξ dξ.
//! The pairing ψ·σ₃φ is bilinear: no complex conjugation anywhere.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::eigen::EigenTable;
use crate::field::{RadialField, C2};
use crate::grid::{dlambda_dxi, lambda_of_xi, RadialGrid, XiGrid};
use crate::profile::VortexProfile;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DftError {
    #[error("field lives on a different radial grid than the table")]
    GridMismatch,
    #[error("density lives on a different ξ-grid than the table")]
    XiGridMismatch,
}

/// Values of a transform at ±ξ_k for the positive table nodes ξ_k.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    pub xi: Arc<XiGrid>,
    pub pos: Vec<Complex64>,
    pub neg: Vec<Complex64>,
    /// bound on the contribution from beyond r_max (forward transforms only)
    pub tail_error: f64,
}

impl SpectralDensity {
    pub fn zeros(xi: Arc<XiGrid>) -> Self {
        let n = xi.len();
        Self { xi, pos: vec![Complex64::new(0.0, 0.0); n], neg: vec![Complex64::new(0.0, 0.0); n], tail_error: 0.0 }
    }

    pub fn from_fn(xi: Arc<XiGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let pos = xi.xi.iter().map(|&x| f(x)).collect();
        let neg = xi.xi.iter().map(|&x| f(-x)).collect();
        Self { xi, pos, neg, tail_error: 0.0 }
    }

    /// Signed nodes in increasing order with matching values.
    pub fn signed(&self) -> Vec<(f64, Complex64)> {
        let n = self.pos.len();
        let mut out = Vec::with_capacity(2 * n);
        for k in (0..n).rev() {
            out.push((-self.xi.xi[k], self.neg[k]));
        }
        for k in 0..n {
            out.push((self.xi.xi[k], self.pos[k]));
        }
        out
    }

    /// ζ_e(ξ) = (ζ(ξ) + ζ(−ξ))/2 at the positive nodes.
    pub fn even_part(&self) -> Vec<Complex64> {
        self.pos.iter().zip(&self.neg).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// ζ_o(ξ) = (ζ(ξ) − ζ(−ξ))/2 at the positive nodes.
    pub fn odd_part(&self) -> Vec<Complex64> {
        self.pos.iter().zip(&self.neg).map(|(a, b)| 0.5 * (a - b)).collect()
    }

    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        Self {
            xi: self.xi.clone(),
            pos: self.xi.xi.iter().zip(&self.pos).map(|(&x, &v)| f(x, v)).collect(),
            neg: self.xi.xi.iter().zip(&self.neg).map(|(&x, &v)| f(-x, v)).collect(),
            tail_error: self.tail_error,
        }
    }

    /// Discrete L²(dξ) norm over both half lines.
    pub fn l2(&self) -> f64 {
        let w = &self.xi.weights;
        let s: f64 = (0..w.len()).map(|k| w[k] * (self.pos[k].norm_sqr() + self.neg[k].norm_sqr())).sum();
        s.sqrt()
    }

    /// ‖ζ_e‖_{L²(|ξ|dξ)} + ‖|ξ|⁻¹⟨ξ⟩ζ_o‖_{L²(|ξ|dξ)} over ℝ, with the node nearest
    /// ξ = 0 left out of the odd part. Returns (norm, excluded odd mass).
    pub fn l2_tilde(&self) -> (f64, f64) {
        let (e, o) = (self.even_part(), self.odd_part());
        let w = &self.xi.weights;
        let x = &self.xi.xi;
        let mut se = 0.0;
        let mut so = 0.0;
        let mut excluded = 0.0;
        for k in 0..w.len() {
            // factor 2 for the two half lines
            se += 2.0 * w[k] * x[k] * e[k].norm_sqr();
            let t = 2.0 * w[k] * x[k] * (1.0 + x[k] * x[k]) / (x[k] * x[k]) * o[k].norm_sqr();
            if k == 0 {
                excluded = t;
            } else {
                so += t;
            }
        }
        (se.sqrt() + so.sqrt(), excluded.sqrt())
    }
}

fn check_grid(field: &RadialField, table: &EigenTable) -> Result<(), DftError> {
    if Arc::ptr_eq(&field.grid, &table.grid) || field.grid.nodes == table.grid.nodes {
        Ok(())
    } else {
        Err(DftError::GridMismatch)
    }
}

fn pair(grid: &RadialGrid, psi: &[[f64; 2]], phi: &[C2]) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for ((p, f), w) in psi.iter().zip(phi).zip(&grid.weights) {
        s += (f[0] * p[0] - f[1] * p[1]) * *w;
    }
    s
}

/// Bound on ∫_{r_max}^∞ |ψ||φ| r dr assuming φ keeps decaying at the rate
/// seen over the last grid cells and |ψ| ≤ (ξr)^{-1/2}.
fn tail_bound(field: &RadialField, xi_min: f64) -> f64 {
    let n = field.values.len();
    let g = &field.grid;
    let mag = |j: usize| (field.values[j][0].norm_sqr() + field.values[j][1].norm_sqr()).sqrt();
    let (a, b) = (mag(n - 1), mag(n - 6));
    if a == 0.0 {
        return 0.0;
    }
    let r = g.nodes[n - 1];
    let dr = r - g.nodes[n - 6];
    // decay length; a non-decaying tail is charged as if it stopped after r_max
    let ell = if b > a { (dr / (b / a).ln()).min(r) } else { r };
    a * r * ell / (xi_min * r).sqrt()
}

pub fn forward(field: &RadialField, table: &EigenTable) -> Result<SpectralDensity, DftError> {
    check_grid(field, table)?;
    let grid = &table.grid;
    let pos: Vec<Complex64> =
        table.eigenfunctions.par_iter().map(|e| pair(grid, &e.samples, &field.values)).collect();
    // ψ(−ξ)·σ₃φ = −σ₁ψ(ξ)·σ₃φ
    let neg: Vec<Complex64> = table
        .eigenfunctions
        .par_iter()
        .map(|e| {
            let mut s = Complex64::new(0.0, 0.0);
            for ((p, f), w) in e.samples.iter().zip(&field.values).zip(&grid.weights) {
                s += (-f[0] * p[1] + f[1] * p[0]) * *w;
            }
            s
        })
        .collect();
    Ok(SpectralDensity { xi: Arc::new(table.xi.clone()), pos, neg, tail_error: tail_bound(field, table.xi.xi[0]) })
}

pub fn inverse(density: &SpectralDensity, table: &EigenTable) -> Result<RadialField, DftError> {
    if density.xi.xi != table.xi.xi {
        return Err(DftError::XiGridMismatch);
    }
    let n = table.grid.len();
    let xi = &table.xi;
    // (1/π) Σ_k w_k λ′(ξ_k) [ζ(ξ_k) ψ(ξ_k) + ζ(−ξ_k) σ₁ψ(ξ_k)]
    let values: Vec<C2> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut acc = [Complex64::new(0.0, 0.0); 2];
            for (k, e) in table.eigenfunctions.iter().enumerate() {
                let c = xi.weights[k] * dlambda_dxi(xi.xi[k]) / PI;
                let p = e.samples[j];
                let (zp, zn) = (density.pos[k] * c, density.neg[k] * c);
                acc[0] += zp * p[0] + zn * p[1];
                acc[1] += zp * p[1] + zn * p[0];
            }
            acc
        })
        .collect();
    Ok(RadialField::new(table.grid.clone(), values))
}

/// F̃φ(0) = √(π/4)⟨φ, σ₃Ξ₀⟩ through the stored zero-frequency limit.
pub fn value_at_zero(field: &RadialField, table: &EigenTable) -> Result<Complex64, DftError> {
    check_grid(field, table)?;
    Ok(pair(&table.grid, &table.zero_limit, &field.values))
}

/// Symmetric difference quotient (F̃φ(ξ₁) − F̃φ(−ξ₁))/(2ξ₁) at the smallest node.
pub fn derivative_at_zero(density: &SpectralDensity) -> Complex64 {
    (density.pos[0] - density.neg[0]) / (2.0 * density.xi.xi[0])
}

/// Result of applying H by finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct HApplied {
    pub field: RadialField,
    /// the field is not negligible on the one-sided rows at r_max
    pub boundary_degraded: bool,
}

/// H = [[−Δ₁ + 2ρ² − 1, ρ²], [−ρ², Δ₁ − 2ρ² + 1]], Δ₁ = ∂² + ∂/r − 1/r².
pub fn apply_h(field: &RadialField, profile: &VortexProfile) -> HApplied {
    let g = &field.grid;
    let n = g.len();
    let rho2: Vec<f64> = profile.rho.iter().map(|r| r * r).collect();
    assert_eq!(rho2.len(), n, "profile and field grids differ");
    let values: Vec<C2> = (0..n)
        .map(|j| {
            let r = g.nodes[j];
            let (s1, w1) = g.stencil(j, 1);
            let (s2, w2) = g.stencil(j, 2);
            let lap = |c: usize| {
                let d1: Complex64 = w1.iter().enumerate().map(|(i, w)| field.values[s1 + i][c] * *w).sum();
                let d2: Complex64 = w2.iter().enumerate().map(|(i, w)| field.values[s2 + i][c] * *w).sum();
                d2 + d1 / r - field.values[j][c] / (r * r)
            };
            let [u, v] = field.values[j];
            let q = rho2[j];
            [-lap(0) + (2.0 * q - 1.0) * u + q * v, lap(1) - q * u - (2.0 * q - 1.0) * v]
        })
        .collect();
    let edge = |j: usize| (field.values[j][0].norm_sqr() + field.values[j][1].norm_sqr()).sqrt();
    let sup = field.sup_norm();
    let boundary_degraded = sup > 0.0 && (edge(n - 1).max(edge(n - 2)) > 1e-8 * sup);
    HApplied { field: RadialField::new(field.grid.clone(), values), boundary_degraded }
}

/// ‖F̃(Hφ) − λF̃φ‖ / ‖F̃(Hφ)‖ on the ξ-grid; 0 for a zero field.
pub fn diag_defect(field: &RadialField, table: &EigenTable, profile: &VortexProfile) -> Result<f64, DftError> {
    let hphi = apply_h(field, profile).field;
    let a = forward(&hphi, table)?;
    let b = forward(field, table)?.map(|x, v| v * lambda_of_xi(x));
    let diff = SpectralDensity { pos: a.pos.iter().zip(&b.pos).map(|(x, y)| x - y).collect(), neg: a.neg.iter().zip(&b.neg).map(|(x, y)| x - y).collect(), ..a.clone() };
    let den = a.l2();
    Ok(if den == 0.0 { 0.0 } else { diff.l2() / den })
}

/// |π∫σ₃f1·f2 r dr − ∫ F̃f1 F̃f2 λ′ sign ξ dξ| / |π∫σ₃f1·f2 r dr|.
pub fn plancherel_defect(f1: &RadialField, f2: &RadialField, table: &EigenTable) -> Result<f64, DftError> {
    let lhs = f1.pair_sigma3(f2) * PI;
    let (a, b) = (forward(f1, table)?, forward(f2, table)?);
    let xi = &table.xi;
    let rhs: Complex64 = (0..xi.len())
        .map(|k| (a.pos[k] * b.pos[k] - a.neg[k] * b.neg[k]) * (xi.weights[k] * dlambda_dxi(xi.xi[k])))
        .sum();
    let scale = lhs.norm();
    Ok(if scale == 0.0 {
        // parity-orthogonal pairs: both sides should vanish on their own
        rhs.norm() / (f1.l2_norm() * f2.l2_norm() * PI).max(f64::MIN_POSITIVE)
    } else {
        (lhs - rhs).norm() / scale
    })
}

/// Relative L²(r dr) distance ‖a − b‖/‖b‖.
pub fn relative_defect(a: &RadialField, b: &RadialField) -> f64 {
    let n = b.l2_norm();
    if n == 0.0 {
        a.l2_norm()
    } else {
        a.sub(b).l2_norm() / n
    }
}

/// Relative discrete L²(dξ) distance of two densities on the same grid.
pub fn relative_density_defect(a: &SpectralDensity, b: &SpectralDensity) -> f64 {
    let d = SpectralDensity {
        pos: a.pos.iter().zip(&b.pos).map(|(x, y)| x - y).collect(),
        neg: a.neg.iter().zip(&b.neg).map(|(x, y)| x - y).collect(),
        ..a.clone()
    };
    let n = b.l2();
    if n == 0.0 {
        d.l2()
    } else {
        d.l2() / n
    }
}
