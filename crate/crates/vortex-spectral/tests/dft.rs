use std::f64::consts::FRAC_PI_4;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use proptest::prelude::*;
use vortex_spectral::dft::*;
use vortex_spectral::eigen::{build_table, EigenConfig, EigenTable};
use vortex_spectral::field::RadialField;
use vortex_spectral::grid::{lambda_of_xi, GridSpec, RadialGrid, XiGrid, XiGridSpec};
use vortex_spectral::profile::{resonance_vectors, solve_profile, VortexProfile};

struct Setup {
    profile: VortexProfile,
    table: EigenTable,
}

fn setup(gs: GridSpec, xs: XiGridSpec) -> Setup {
    let grid = Arc::new(RadialGrid::new(gs).unwrap());
    let profile = solve_profile(grid, 1e-9).unwrap();
    let table = build_table(&profile, &XiGrid::new(xs).unwrap(), &EigenConfig::default()).unwrap();
    Setup { profile, table }
}

fn fine() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| setup(GridSpec::default(), XiGridSpec::default()))
}

fn coarse() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| setup(GridSpec::default().with_h(0.04), XiGridSpec { dtau: 0.08, ..Default::default() }))
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

// smooth first-harmonic fields r·g(r²), plus one compactly supported bump
fn battery(grid: &Arc<RadialGrid>) -> Vec<RadialField> {
    vec![
        RadialField::from_real(grid.clone(), |r| [r * (-r * r / 2.0).exp(), 0.0]),
        RadialField::from_real(grid.clone(), |r| [0.0, r * (1.0 + r * r) * (-r * r / 3.0).exp()]),
        RadialField::from_real(grid.clone(), |r| [r * (-(r * r - 4.0).powi(2) / 4.0).exp(), 0.5 * r * (-r * r).exp()]),
        RadialField::from_real(grid.clone(), |r| {
            let b = bump((r - 11.0) / 10.0);
            [b, -0.3 * b]
        }),
        RadialField::from_real(grid.clone(), |r| [r * (-r * r / 5.0).exp(), -r.powi(3) * (-r * r / 2.0).exp()]),
    ]
}

fn densities(xi: &Arc<XiGrid>) -> Vec<SpectralDensity> {
    vec![
        SpectralDensity::from_fn(xi.clone(), |x| Complex64::new(x * x * (-2.0 * (x - 1.0f64).powi(2)).exp(), 0.0)),
        SpectralDensity::from_fn(xi.clone(), |x| Complex64::new(x * x * (-x * x).exp() * (1.0 + x), 0.0)),
        SpectralDensity::from_fn(xi.clone(), |x| Complex64::new(x.powi(3) * (-x * x / 2.0).exp(), 0.0)),
    ]
}

struct Defects {
    left: Vec<f64>,
    right: Vec<f64>,
    plancherel: Vec<f64>,
    diag: Vec<f64>,
}

fn defects(s: &Setup) -> Defects {
    let fields = battery(&s.table.grid);
    let xi = Arc::new(s.table.xi.clone());
    let left = fields
        .iter()
        .map(|f| relative_defect(&inverse(&forward(f, &s.table).unwrap(), &s.table).unwrap(), f))
        .collect();
    let right = densities(&xi)
        .iter()
        .map(|d| relative_density_defect(&forward(&inverse(d, &s.table).unwrap(), &s.table).unwrap(), d))
        .collect();
    let plancherel = fields.iter().map(|f| plancherel_defect(f, f, &s.table).unwrap()).collect();
    let diag = fields.iter().map(|f| diag_defect(f, &s.table, &s.profile).unwrap()).collect();
    Defects { left, right, plancherel, diag }
}

#[test]
fn transform_identities_and_refinement() {
    let (c, f) = (defects(coarse()), defects(fine()));
    let groups = [
        ("inverse∘forward", &c.left, &f.left),
        ("forward∘inverse", &c.right, &f.right),
        ("plancherel", &c.plancherel, &f.plancherel),
        ("diagonalization", &c.diag, &f.diag),
    ];
    for (name, a, b) in groups {
        for (k, (x, y)) in a.iter().zip(b.iter()).enumerate() {
            println!("{name}[{k}]: coarse {x:.2e} fine {y:.2e} gain {:.1}", x / y);
            assert!(*y <= 1e-3);
            assert!(x / y >= 2.0);
        }
    }
}

#[test]
fn resonance_algebra() {
    let p = &fine().profile;
    let pair = resonance_vectors(p);
    let n0 = pair.xi0.l2_norm();
    let h0 = apply_h(&pair.xi0, p).field;
    let h1 = apply_h(&pair.xi1, p).field;
    let r0 = h0.l2_norm() / n0;
    let r1 = h1.sub(&pair.xi0.scale(Complex64::new(2.0, 0.0))).l2_norm() / n0;
    println!("‖HΞ0‖/‖Ξ0‖ = {r0:.2e}, ‖HΞ1 − 2Ξ0‖/‖Ξ0‖ = {r1:.2e}");
    assert!(r0 <= 1e-6 && r1 <= 1e-6);
}

#[test]
fn h_anticommutes_with_sigma1() {
    let p = &fine().profile;
    for f in battery(&p.grid) {
        let a = apply_h(&f.sigma1(), p).field.sigma1();
        let b = apply_h(&f, p).field;
        let d = a.add(&b).sup_norm();
        assert!(d <= 1e-10 * b.sup_norm(), "{d:e}");
    }
}

#[test]
fn apply_h_flags_boundary() {
    let p = &fine().profile;
    let inner = RadialField::from_real(p.grid.clone(), |r| [r * (-r * r).exp(), 0.0]);
    assert!(!apply_h(&inner, p).boundary_degraded);
    let edge = RadialField::from_real(p.grid.clone(), |r| [1.0 / (1.0 + r), 0.0]);
    assert!(apply_h(&edge, p).boundary_degraded);
}

#[test]
fn zero_frequency_value() {
    let s = fine();
    let pair = resonance_vectors(&s.profile);
    for f in battery(&s.table.grid) {
        let z = forward(&f, &s.table).unwrap();
        // the average over ±ξ₁ removes the linear term
        let at0 = 0.5 * (z.pos[0] + z.neg[0]);
        let want = f.pair_sigma3(&pair.xi0) * FRAC_PI_4.sqrt();
        assert!((at0 - want).norm() <= 1e-3 * want.norm(), "{at0} vs {want}");
        assert!((value_at_zero(&f, &s.table).unwrap() - want).norm() <= 1e-12 * want.norm());
    }
}

#[test]
fn zero_frequency_slope_constant() {
    // the difference quotient at 0 equals c·⟨φ, σ₃Ξ1⟩ with c = √(π/8)
    let s = fine();
    let pair = resonance_vectors(&s.profile);
    for f in battery(&s.table.grid) {
        let z = forward(&f, &s.table).unwrap();
        let d = derivative_at_zero(&z);
        let base = f.pair_sigma3(&pair.xi1);
        let ratio = (d / base).re;
        println!("F′(0)/⟨φ,σ₃Ξ1⟩ = {ratio:.6}; √(π/8) = {:.6}, √(π/4) = {:.6}", (FRAC_PI_4 / 2.0).sqrt(), FRAC_PI_4.sqrt());
        assert!((ratio / (FRAC_PI_4 / 2.0).sqrt() - 1.0).abs() <= 1e-3);
    }
}

#[test]
fn parity_maps() {
    let s = fine();
    let g = &s.table.grid;
    let even = RadialField::from_real(g.clone(), |r| {
        let a = r * (-r * r / 2.0).exp();
        [a, a]
    });
    let odd = RadialField::from_real(g.clone(), |r| {
        let a = r * (-r * r / 3.0).exp();
        [a, -a]
    });
    let ze = forward(&even, &s.table).unwrap();
    let zo = forward(&odd, &s.table).unwrap();
    let scale = ze.l2().max(zo.l2());
    for k in 0..ze.pos.len() {
        assert!((ze.pos[k] - ze.neg[k]).norm() <= 1e-12 * scale);
        assert!((zo.pos[k] + zo.neg[k]).norm() <= 1e-12 * scale);
    }
    // odd fields: |F̃φ(ξ)|/|ξ| stays bounded as ξ → 0
    let q: Vec<f64> = (0..20).map(|k| zo.pos[k].norm() / s.table.xi.xi[k]).collect();
    assert!(q.iter().all(|v| v.is_finite() && *v < 2.0 * q[19].max(q[0])));
    // an odd density comes back as an odd field
    let xi = Arc::new(s.table.xi.clone());
    let d = SpectralDensity::from_fn(xi, |x| Complex64::new(x * (-x * x).exp(), 0.0));
    let f = inverse(&d, &s.table).unwrap();
    let fs = f.sigma1();
    assert!(f.add(&fs).sup_norm() <= 1e-12 * f.sup_norm());
}

#[test]
fn plancherel_edge_cases() {
    let s = fine();
    let g = &s.table.grid;
    let f = battery(g).remove(0);
    let zero = RadialField::zeros(g.clone());
    assert_eq!(plancherel_defect(&f, &zero, &s.table).unwrap(), 0.0);
    // even–even pairs: both sides vanish under the σ₃ pairing
    let e1 = RadialField::from_real(g.clone(), |r| {
        let a = r * (-r * r / 2.0).exp();
        [a, a]
    });
    let e2 = RadialField::from_real(g.clone(), |r| {
        let a = r * r * r * (-r * r / 2.0).exp();
        [a, a]
    });
    assert!(e1.pair_sigma3(&e2).norm() == 0.0);
    assert!(plancherel_defect(&e1, &e2, &s.table).unwrap() <= 1e-3);
    // even–odd pairs do not cancel; the identity still holds
    let o = RadialField::from_real(g.clone(), |r| {
        let a = r * (-r * r / 3.0).exp();
        [a, -a]
    });
    assert!(e1.pair_sigma3(&o).norm() > 0.0);
    assert!(plancherel_defect(&e1, &o, &s.table).unwrap() <= 1e-3);
    assert_eq!(diag_defect(&zero, &s.table, &s.profile).unwrap(), 0.0);
}

#[test]
fn schwartz_decay_of_transform() {
    let s = fine();
    let f = battery(&s.table.grid).remove(0);
    let z = forward(&f, &s.table).unwrap();
    let xi = &s.table.xi.xi;
    let c = (0..xi.len())
        .map(|k| z.pos[k].norm().max(z.neg[k].norm()) * (1.0 + xi[k] * xi[k]).powf(1.5))
        .fold(0.0, f64::max);
    println!("fitted C = {c:.3}");
    // C is attained at moderate ξ, not at the upper end of the grid
    let tail = (1.0 + xi[xi.len() - 1].powi(2)).powf(1.5) * z.pos[xi.len() - 1].norm();
    assert!(tail <= 0.01 * c);
}

#[test]
fn boundedness_constant_is_grid_stable() {
    let ratio = |s: &Setup| {
        battery(&s.table.grid)
            .iter()
            .map(|f| forward(f, &s.table).unwrap().l2_tilde().0 / f.l2_norm())
            .fold(0.0, f64::max)
    };
    let (a, b) = (ratio(coarse()), ratio(fine()));
    println!("L̃² bound constant: coarse {a:.4} fine {b:.4}");
    assert!((a / b - 1.0).abs() <= 0.2);
}

#[test]
fn sobolev_weight_transfer() {
    // discrete H² norm of F̃φ for φ ∈ L^{2,2}: finite and stable under refinement
    let h2 = |s: &Setup| {
        let f = battery(&s.table.grid).remove(2);
        let z = forward(&f, &s.table).unwrap();
        let pts = z.signed();
        let mut acc = 0.0;
        for w in pts.windows(3) {
            let (x0, x1, x2) = (w[0].0, w[1].0, w[2].0);
            if x0 < 0.0 && x2 > 0.0 {
                continue;
            }
            let d2 = 2.0 * ((w[2].1 - w[1].1) / (x2 - x1) - (w[1].1 - w[0].1) / (x1 - x0)) / (x2 - x0);
            acc += (w[1].1.norm_sqr() + d2.norm_sqr()) * 0.5 * (x2 - x0);
        }
        acc.sqrt()
    };
    let (a, b) = (h2(coarse()), h2(fine()));
    println!("H² norm: coarse {a:.5} fine {b:.5}");
    assert!(a.is_finite() && (a / b - 1.0).abs() <= 0.05);
}

#[test]
fn tilde_norm_reports_excluded_mass() {
    let s = fine();
    let f = battery(&s.table.grid).remove(1);
    let z = forward(&f, &s.table).unwrap();
    let (n, excl) = z.l2_tilde();
    assert!(n.is_finite() && n > 0.0);
    assert!(excl >= 0.0 && excl < n);
}

#[test]
fn grid_mismatch_is_reported() {
    let s = fine();
    let other = Arc::new(RadialGrid::new(GridSpec::default().with_h(0.05)).unwrap());
    let f = RadialField::zeros(other);
    assert_eq!(forward(&f, &s.table).unwrap_err(), DftError::GridMismatch);
    let xi = Arc::new(XiGrid::new(XiGridSpec { dtau: 0.5, ..Default::default() }).unwrap());
    assert_eq!(inverse(&SpectralDensity::zeros(xi), &s.table).unwrap_err(), DftError::XiGridMismatch);
}

#[test]
fn forward_reports_tail_for_slow_fields() {
    let s = fine();
    let slow = RadialField::from_real(s.table.grid.clone(), |r| [r / (1.0 + r * r).powi(2), 0.0]);
    let fast = battery(&s.table.grid).remove(0);
    assert!(forward(&slow, &s.table).unwrap().tail_error > 0.0);
    assert!(forward(&fast, &s.table).unwrap().tail_error < 1e-30);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn even_odd_split_reconstructs(a in -2.0f64..2.0, b in 0.2f64..3.0) {
        let xi = Arc::new(fine().table.xi.clone());
        let d = SpectralDensity::from_fn(xi, |x| Complex64::new((a * x).sin() + x * x, b * x) * (-x * x / b).exp());
        let (e, o) = (d.even_part(), d.odd_part());
        for k in 0..e.len() {
            prop_assert!((e[k] + o[k] - d.pos[k]).norm() <= 1e-15 * (1.0 + d.pos[k].norm()));
            prop_assert!((e[k] - o[k] - d.neg[k]).norm() <= 1e-15 * (1.0 + d.neg[k].norm()));
        }
    }

    #[test]
    fn transform_is_linear(a in -3.0f64..3.0, w in 0.5f64..3.0) {
        let s = fine();
        let g = &s.table.grid;
        let f1 = RadialField::from_real(g.clone(), |r| [r * (-r * r / w).exp(), 0.0]);
        let f2 = RadialField::from_real(g.clone(), |r| [0.0, r * (-r * r).exp()]);
        let sum = f1.add(&f2.scale(Complex64::new(a, 0.0)));
        let (z1, z2, zs) = (forward(&f1, &s.table).unwrap(), forward(&f2, &s.table).unwrap(), forward(&sum, &s.table).unwrap());
        for k in (0..zs.pos.len()).step_by(37) {
            prop_assert!((zs.pos[k] - z1.pos[k] - a * z2.pos[k]).norm() <= 1e-12 * (1.0 + zs.pos[k].norm()));
        }
        // diagonalization is pointwise in ξ: spot-check a mid-range node
        let k = zs.pos.len() / 2;
        let lam = lambda_of_xi(s.table.xi.xi[k]);
        let zh = forward(&apply_h(&f1, &s.profile).field, &s.table).unwrap();
        prop_assert!((zh.pos[k] - lam * z1.pos[k]).norm() <= 1e-4 * (1.0 + zh.pos[k].norm()));
    }
}
