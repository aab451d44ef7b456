use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use vortex_spectral::grid::{GridSpec, RadialGrid};
use vortex_spectral::profile::*;

fn profile() -> &'static VortexProfile {
    static P: OnceLock<VortexProfile> = OnceLock::new();
    P.get_or_init(|| {
        let grid = Arc::new(RadialGrid::new(GridSpec::default()).unwrap());
        solve_profile(grid, 1e-9).unwrap()
    })
}

fn kernels() -> &'static KernelSolutions {
    static K: OnceLock<KernelSolutions> = OnceLock::new();
    K.get_or_init(|| kernel_solutions(profile()).unwrap())
}

// Second-order finite-difference relaxation of the profile BVP on [0, L] with
// Newton iteration; slope read off from ρ(0.04) via the odd power series.
fn relaxation_slope(h: f64) -> f64 {
    let l = 40.0;
    let n = (l / h).round() as usize;
    let right = 1.0 - 0.5 / (l * l) - 9.0 / (8.0 * l.powi(4));
    let mut u: Vec<f64> = (0..=n).map(|i| (0.6 * i as f64 * h).tanh()).collect();
    u[n] = right;
    for _ in 0..50 {
        let m = n - 1;
        let (mut a, mut b, mut c, mut f) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
        for k in 0..m {
            let i = k + 1;
            let r = i as f64 * h;
            let (lo, hi) = (1.0 - h / (2.0 * r), 1.0 + h / (2.0 * r));
            let p = u[i];
            f[k] = hi * u[i + 1] - 2.0 * p + lo * u[i - 1] + h * h * (1.0 - 1.0 / (r * r) - p * p) * p;
            a[k] = lo;
            c[k] = hi;
            b[k] = -2.0 + h * h * (1.0 - 1.0 / (r * r) - 3.0 * p * p);
        }
        // Thomas algorithm for J δ = -f
        let mut cp = vec![0.0; m];
        let mut dp = vec![0.0; m];
        for k in 0..m {
            let den = b[k] - if k > 0 { a[k] * cp[k - 1] } else { 0.0 };
            cp[k] = c[k] / den;
            dp[k] = (-f[k] - if k > 0 { a[k] * dp[k - 1] } else { 0.0 }) / den;
        }
        let mut d = vec![0.0; m];
        for k in (0..m).rev() {
            d[k] = dp[k] - if k + 1 < m { cp[k] * d[k + 1] } else { 0.0 };
        }
        let mut step = 0.0f64;
        for k in 0..m {
            u[k + 1] += d[k];
            step = step.max(d[k].abs());
        }
        if step < 1e-14 {
            break;
        }
    }
    let r = 0.04;
    let v = u[(r / h).round() as usize];
    let mut a = v / r;
    for _ in 0..50 {
        a = v / (r - r.powi(3) / 8.0 + (1.0 / 8.0 + a * a) / 24.0 * r.powi(5));
    }
    a
}

#[test]
fn slope_agrees_with_relaxation_oracle() {
    let (a1, a2, a3) = (relaxation_slope(0.01), relaxation_slope(0.005), relaxation_slope(0.0025));
    // two Richardson sweeps for the h² and h⁴ terms
    let b1 = (4.0 * a2 - a1) / 3.0;
    let b2 = (4.0 * a3 - a2) / 3.0;
    let oracle = (16.0 * b2 - b1) / 15.0;
    let a = profile().slope_a;
    println!("shooting a = {a:.12}, relaxation a = {oracle:.12}");
    assert!((a - oracle).abs() < 1e-6, "{a} vs {oracle}");
}

#[test]
fn origin_slope_matches_first_node() {
    let p = profile();
    let r = p.grid.r_min();
    assert!((p.rho[0] / r - p.slope_a).abs() < 1e-6);
    assert!(p.rho[0] <= 1e-3);
}

#[test]
fn one_minus_rho_at_ten() {
    let d = 1.0 - profile().rho_at(10.0);
    assert!((d - 0.005).abs() <= 5e-4, "{d}");
}

#[test]
fn profile_invariants() {
    let p = profile();
    assert!(p.rho.windows(2).all(|w| w[1] > w[0]));
    assert!(p.rho.iter().all(|&v| (0.0..1.0).contains(&v)));
    assert!(p.drho.iter().all(|&v| v > 0.0));
    let c = p.tail_constant();
    println!("tail constant C = {c}");
    assert!(c.is_finite() && c < 5.0);
}

#[test]
fn ode_residual_below_1e8() {
    let res = profile().ode_residual(1e-3);
    assert!(res <= 1e-8, "{res:e}");
}

#[test]
fn scaling_derivative_identity() {
    // (L0 − 2ρ²)(rρ′) = 2(ρ² − 1)ρ with L0 = Δ1 + 1 − ρ²
    let p = profile();
    let f = |x: f64| x * p.drho_at(x);
    let lo = 2.0 * p.grid.r_min();
    let hi = p.grid.r_max() / 2.0;
    let h = 1e-3;
    let mut worst = 0.0f64;
    for &r in p.grid.nodes.iter().filter(|&&r| r >= lo && r <= hi) {
        let (d1, d2) = central_derivatives(f, r, h);
        let rho = p.rho_at(r);
        let lhs = d2 + d1 / r - f(r) / (r * r) + (1.0 - 3.0 * rho * rho) * f(r);
        worst = worst.max((lhs - 2.0 * (rho * rho - 1.0) * rho).abs());
    }
    assert!(worst <= 1e-6, "{worst:e}");
}

#[test]
fn rho_squared_minus_one_derivative_bounds() {
    let p = profile();
    let g = |x: f64| p.rho2m1_at(x);
    let scaled = |r: f64| {
        let (d1, d2) = central_derivatives(g, r, 1e-2);
        [g(r).abs() * (1.0 + r).powi(2), d1.abs() * (1.0 + r).powi(3), d2.abs() * (1.0 + r).powi(4)]
    };
    let mut c = [0.0f64; 3];
    for r in (1..=200).map(|k| k as f64 * 0.25) {
        let s = scaled(r);
        for k in 0..3 {
            c[k] = c[k].max(s[k]);
        }
    }
    // the scaled quantities settle at the constants 1, 2, 6 of -1/r²
    let far = scaled(50.0);
    for k in 0..3 {
        assert!(c[k].is_finite() && c[k] < 100.0, "k={k} C={}", c[k]);
        assert!(far[k] > 0.5 * [1.0, 2.0, 6.0][k] && far[k] < 2.0 * [1.0, 2.0, 6.0][k]);
    }
}

#[test]
fn asymptotic_coefficients_known_terms() {
    let c = asymptotic_coefficients(3);
    assert_eq!(c[0], 1.0);
    assert!((c[1] + 0.5).abs() < 1e-15);
    assert!((c[2] + 9.0 / 8.0).abs() < 1e-15);
    assert!((c[3] + 161.0 / 16.0).abs() < 1e-13);
}

#[test]
fn table_and_series_agree_at_join() {
    let p = profile();
    assert!(p.table.junction_jump() < 1e-10, "{:e}", p.table.junction_jump());
}

#[test]
fn resonance_pair_definition() {
    let p = profile();
    let pair = resonance_vectors(p);
    for (j, &r) in p.grid.nodes.iter().enumerate() {
        assert_eq!(pair.xi0.values[j][0].re, p.rho[j]);
        assert_eq!(pair.xi0.values[j][1].re, -p.rho[j]);
        assert_eq!(pair.xi1.values[j][0], pair.xi1.values[j][1]);
        assert!((pair.xi1.values[j][0].re - (r * p.drho[j] + p.rho[j])).abs() < 1e-15);
    }
}

#[test]
fn q0_tilde_near_origin() {
    let p = profile();
    let v = p.grid.r_min() * kernels().q0_tilde[0];
    assert!((v - 0.5).abs() <= 0.01, "{v}");
}

#[test]
fn p0_vanishes_at_one() {
    let p = profile();
    let k = kernels();
    let j = p.grid.nodes.partition_point(|&r| r < 1.0);
    let (r0, r1) = (p.grid.nodes[j - 1], p.grid.nodes[j]);
    let t = (1.0 - r0) / (r1 - r0);
    let v = k.p0[j - 1] + t * (k.p0[j] - k.p0[j - 1]);
    assert!(v.abs() < 1e-3, "{v}");
    // sign change brackets r = 1
    assert!(k.p0[j - 1] < 0.0 && k.p0[j] > 0.0);
}

#[test]
fn q0_exponential_growth_constant() {
    let p = profile();
    let k = kernels();
    let at = |r: f64| {
        let j = p.grid.nearest(r);
        let r = p.grid.nodes[j];
        k.q0[j].ln() - std::f64::consts::SQRT_2 * r + 0.5 * r.ln()
    };
    let (a, b) = (at(15.0), at(20.0));
    assert!((a - b).abs() <= 0.05, "{a} {b}");
}

#[test]
fn kernel_positivity_and_residuals() {
    let p = profile();
    let k = kernels();
    assert!(k.q0.iter().all(|&v| v > 0.0));
    assert!(k.q0_tilde.iter().all(|&v| v > 0.0));
    let g = &p.grid;
    let n = g.len();
    let apply = |f: &[f64], j: usize, shift: f64| {
        let (s1, w1) = g.stencil(j, 1);
        let (s2, w2) = g.stencil(j, 2);
        let d1: f64 = w1.iter().enumerate().map(|(i, w)| w * f[s1 + i]).sum();
        let d2: f64 = w2.iter().enumerate().map(|(i, w)| w * f[s2 + i]).sum();
        let r = g.nodes[j];
        let rho = p.rho[j];
        d2 + d1 / r - f[j] / (r * r) + (1.0 - rho * rho - shift * rho * rho) * f[j]
    };
    // relative residuals in the uniform region, scaled by the local size of the terms
    let band = (0..n).filter(|&j| g.nodes[j] > 2.5 && g.nodes[j] < 55.0);
    let mut worst = [0.0f64; 3];
    for j in band {
        let r = g.nodes[j];
        let terms = |f: &[f64]| f[j].abs() * (1.0 + 1.0 / (r * r)) + 1e-300;
        worst[0] = worst[0].max(apply(&k.p0, j, 0.0).abs() / terms(&k.p0));
        worst[1] = worst[1].max(apply(&k.q0, j, 2.0).abs() / terms(&k.q0));
        worst[2] = worst[2].max(apply(&k.q0_tilde, j, 2.0).abs() / terms(&k.q0_tilde));
    }
    println!("kernel residuals {worst:?}");
    assert!(worst.iter().all(|&w| w < 1e-5), "{worst:?}");
}

#[test]
fn short_grid_rejected() {
    let grid = Arc::new(RadialGrid::new(GridSpec::default().with_r_max(30.0)).unwrap());
    assert!(matches!(solve_profile(grid, 1e-9), Err(ProfileError::GridTooShort(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn local_residual_and_monotonicity(r in 0.01f64..80.0) {
        let p = profile();
        let (d1, d2) = central_derivatives(|x| p.rho_at(x), r, 1e-3);
        let rho = p.rho_at(r);
        let res = d2 + d1 / r - rho / (r * r) + (1.0 - rho * rho) * rho;
        prop_assert!(res.abs() < 1e-8);
        prop_assert!(p.drho_at(r) > 0.0);
        prop_assert!(rho > 0.0 && rho < 1.0);
    }

    #[test]
    fn odd_extension(r in 0.0f64..5.0) {
        let t = &profile().table;
        let (a, b, c) = t.eval(r);
        let (a2, b2, c2) = t.eval(-r);
        prop_assert_eq!(a, -a2);
        prop_assert_eq!(b, b2);
        prop_assert_eq!(c, -c2);
    }
}
