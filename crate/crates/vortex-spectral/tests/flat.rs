use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use proptest::prelude::*;
use vortex_spectral::dft::{relative_defect, relative_density_defect, SpectralDensity};
use vortex_spectral::eigen::{build_table, eigenfunction, EigenConfig};
use vortex_spectral::field::RadialField;
use vortex_spectral::flat::*;
use vortex_spectral::grid::{lambda_of_xi, GridSpec, RadialGrid, XiGrid, XiGridSpec};
use vortex_spectral::odesys::SpectralPoint;
use vortex_spectral::profile::solve_profile;

fn basis(gs: GridSpec, xs: XiGridSpec) -> FlatBasis {
    FlatBasis::new(Arc::new(RadialGrid::new(gs).unwrap()), Arc::new(XiGrid::new(xs).unwrap()))
}

fn coarse() -> &'static FlatBasis {
    static B: OnceLock<FlatBasis> = OnceLock::new();
    B.get_or_init(|| {
        let (gs, xs) = oracle_grids();
        basis(gs.with_h(0.01), XiGridSpec { dtau: 0.04, ..xs })
    })
}

fn fine() -> &'static FlatBasis {
    static B: OnceLock<FlatBasis> = OnceLock::new();
    B.get_or_init(|| {
        let (gs, xs) = oracle_grids();
        basis(gs, xs)
    })
}

// functions of r² with Gaussian spectra, so ξ ≤ 20 holds all their mass;
// a compact bump would leave 1e-7 beyond ξ = 20
fn battery(g: &Arc<RadialGrid>) -> Vec<RadialField> {
    vec![
        RadialField::from_real(g.clone(), |r| [(-r * r / 2.0).exp(), 0.0]),
        RadialField::from_real(g.clone(), |r| [0.0, (1.0 + r * r) * (-r * r / 3.0).exp()]),
        RadialField::from_real(g.clone(), |r| [(-(r * r - 4.0).powi(2) / 16.0).exp(), 0.5 * (-r * r).exp()]),
        RadialField::from_real(g.clone(), |r| {
            let b = (-(r * r - 100.0).powi(2) / 800.0).exp();
            [b, -0.3 * b]
        }),
        RadialField::from_real(g.clone(), |r| [(-r * r / 5.0).exp(), -r * r * (-r * r / 2.0).exp()]),
    ]
}

struct Defects {
    inv_fwd: f64,
    plancherel: f64,
    diag: f64,
    fwd_inv: f64,
}

impl Defects {
    fn all(&self) -> [f64; 4] {
        [self.inv_fwd, self.plancherel, self.diag, self.fwd_inv]
    }
}

fn defects(b: &FlatBasis) -> Defects {
    let fs = battery(&b.grid);
    let max = |f: &dyn Fn(&RadialField) -> f64| fs.iter().map(f).fold(0.0, f64::max);
    let d = SpectralDensity::from_fn(b.xi.clone(), |x| Complex64::new(x * x * (-x * x).exp() * (1.0 + x), 0.0));
    Defects {
        inv_fwd: max(&|f| relative_defect(&b.inverse(&b.forward(f)), f)),
        plancherel: max(&|f| b.plancherel_defect(f, f)),
        diag: max(&|f| b.diag_defect(f)),
        fwd_inv: relative_density_defect(&b.forward(&b.inverse(&d)), &d),
    }
}

fn max_entry(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> f64 {
    (0..4).map(|i| (a[i / 2][i % 2] - b[i / 2][i % 2]).abs()).fold(0.0, f64::max)
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][0] * b[0][j] + a[i][1] * b[1][j]))
}

proptest! {
    #[test]
    fn symbol_forms_agree(xi in 0.05f64..20.0) {
        let m = FlatMultiplier::at(xi);
        let scale = 1.0 + m.m_plus[0][0].abs().max(m.m_plus[0][1].abs());
        prop_assert!(max_entry(m.m_plus, m_from_e(xi, true)) <= 1e-12 * scale);
        prop_assert!(max_entry(m.m_minus, m_from_e(xi, false)) <= 1e-12 * scale);
        let half: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (m.m_plus[i][j] + m.m_minus[i][j])));
        prop_assert!(max_entry(half, [[1.0, 0.0], [0.0, 1.0]]) <= 1e-13 * scale);
        for p in [m.m_plus, m.m_minus] {
            let h: [[f64; 2]; 2] = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * p[i][j]));
            prop_assert!(max_entry(matmul(h, h), h) <= 1e-11 * scale * scale);
        }
        prop_assert!((m.h_symbol - lambda_of_xi(xi)).abs() <= 1e-14 * m.h_symbol);
        prop_assert!((m.u_symbol * (2.0 + xi * xi).sqrt() - xi).abs() <= 1e-14 * xi);
    }

    #[test]
    fn plancherel_holds_for_gaussians(w in 0.5f64..3.0, a in -1.0f64..1.0) {
        let b = coarse();
        let f = RadialField::from_real(b.grid.clone(), |r| {
            let e = (-r * r / (w * w)).exp();
            [e, a * e * r * r / (w * w)]
        });
        prop_assert!(b.plancherel_defect(&f, &f) <= 1e-6);
    }
}

#[test]
fn eigenfunction_at_origin_and_zero_frequency() {
    for xi in [0.0, 0.3, 2.0, 9.0] {
        let e = SpectralPoint::from_xi(xi).e_vec;
        assert!((e[0].hypot(e[1]) - 1.0).abs() <= 1e-14);
        let p = flat_eigenfunction(xi, 0.0);
        let c = (PI / 2.0).sqrt();
        assert!((p[0] - c * e[0]).abs() <= 1e-14 && (p[1] - c * e[1]).abs() <= 1e-14);
    }
    let p = flat_eigenfunction(0.0, 3.7);
    let c = (PI / 4.0).sqrt();
    assert!((p[0] - c).abs() <= 1e-14 && (p[1] + c).abs() <= 1e-14);
}

#[test]
fn eigenfunction_solves_the_system() {
    let g = Arc::new(RadialGrid::new(GridSpec::default().with_r_max(30.0)).unwrap());
    for xi in [0.4, 1.3, 3.0] {
        let psi = RadialField::from_real(g.clone(), |r| flat_eigenfunction(xi, r));
        let gpsi = apply_g(&psi);
        let want = psi.scale(Complex64::new(lambda_of_xi(xi), 0.0));
        let d = relative_defect(&gpsi, &want);
        assert!(d <= 1e-5, "ξ = {xi}: {d:.2e}");
    }
    let psi = RadialField::from_real(g.clone(), |r| flat_eigenfunction(0.0, r));
    // pointwise the residual is roundoff on the clustered nodes near r_min
    assert!(apply_g(&psi).l2_norm() <= 1e-6 * psi.l2_norm());
}

#[test]
fn transform_identities_on_fine_grid() {
    let (c, f) = (defects(coarse()), defects(fine()));
    println!(
        "coarse: inv∘fwd {:.2e} plancherel {:.2e} diag {:.2e} fwd∘inv {:.2e}",
        c.inv_fwd, c.plancherel, c.diag, c.fwd_inv
    );
    println!(
        "fine:   inv∘fwd {:.2e} plancherel {:.2e} diag {:.2e} fwd∘inv {:.2e}",
        f.inv_fwd, f.plancherel, f.diag, f.fwd_inv
    );
    for (a, b) in c.all().into_iter().zip(f.all()) {
        assert!(b <= 1e-6);
        assert!(a >= 2.0 * b);
    }
}

#[test]
fn zero_frequency_values() {
    // ψ̊(0) = √(π/4)(1, −1) and ∂ξψ̊(0) = √(π/8)(1, 1)
    let b = coarse();
    for f in battery(&b.grid) {
        let pair = |w: [f64; 2]| f.pair_sigma3(&RadialField::from_real(b.grid.clone(), |_| w));
        let (v, s) = zero_frequency(&f, 1e-4);
        let (v0, s0) = ((PI / 4.0).sqrt() * pair([1.0, -1.0]), (PI / 8.0).sqrt() * pair([1.0, 1.0]));
        assert!((v - v0).norm() <= 1e-12 * v0.norm().max(1.0));
        assert!((s - s0).norm() <= 1e-6 * s0.norm().max(1e-3), "{s} vs {s0}");
    }
}

#[test]
fn alpha_sector_closed_form() {
    // α = (u + v)/2 and β = (u − v)/2i obey α(t) = cos(tλ)α₀ + sin(tλ)Uβ₀
    let b = coarse();
    let f = &battery(&b.grid)[4];
    let zero = Complex64::new(0.0, 0.0);
    let alpha = |f: &RadialField| f.map(|_, [u, v]| [(u + v) * 0.5, zero]);
    let beta = |f: &RadialField| f.map(|_, [u, v]| [(u - v) / Complex64::new(0.0, 2.0), zero]);
    let (a0, b0) = (b.hankel(&alpha(f)), b.hankel(&beta(f)));
    for t in [0.2, 0.7] {
        let at: Vec<_> = (0..b.xi.len())
            .map(|k| {
                let m = FlatMultiplier::at(b.xi.xi[k]);
                let l = t * m.h_symbol;
                [a0[k][0] * l.cos() + b0[k][0] * l.sin() * m.u_symbol, zero]
            })
            .collect();
        let d = relative_defect(&alpha(&b.propagate(f, t).unwrap()), &b.inverse_hankel(&at));
        assert!(d <= 1e-12, "t = {t}: {d:.2e}");
    }
}

#[test]
fn time_zero_and_streaming_agree() {
    let b = coarse();
    let f = &battery(&b.grid)[2];
    let p0 = b.propagate(f, 0.0).unwrap();
    assert!(relative_defect(&p0, &b.inverse(&b.forward(f))) <= 1e-12);
    assert!(relative_defect(&p0, f) <= 1e-6);
    let s = flat_propagate(f, 0.7, &b.xi).unwrap();
    assert!(relative_defect(&s, &b.propagate(f, 0.7).unwrap()) <= 1e-12);
}

#[test]
fn sigma1_conjugation_reverses_time() {
    // σ₁Gσ₁ = −G
    let b = coarse();
    let f = &battery(&b.grid)[4];
    let a = b.propagate(&f.sigma1(), 0.6).unwrap().sigma1();
    let c = b.propagate(f, -0.6).unwrap();
    assert!(relative_defect(&a, &c) <= 1e-12);
}

#[test]
fn group_property() {
    let b = coarse();
    let f = &battery(&b.grid)[0];
    let two = b.propagate(&b.propagate(f, 0.3).unwrap(), 0.4).unwrap();
    let one = b.propagate(f, 0.7).unwrap();
    let d = relative_defect(&two, &one);
    assert!(d <= 1e-5, "{d:.2e}");
}

#[test]
fn unresolved_phase_is_refused() {
    let b = coarse();
    let f = &battery(&b.grid)[0];
    assert!(matches!(b.propagate(f, 50.0), Err(FlatError::PhaseUnderResolved { t, .. }) if t == 50.0));
    assert!(matches!(flat_evolve(std::slice::from_ref(f), &[0.1, 50.0], &b.xi), Err(FlatError::PhaseUnderResolved { .. })));
}

#[test]
fn vortex_eigenfunctions_approach_flat_ones() {
    let g = Arc::new(RadialGrid::new(GridSpec::default()).unwrap());
    let p = solve_profile(g.clone(), 1e-9).unwrap();
    let dev = |xi: f64| {
        let e = eigenfunction(&SpectralPoint::from_xi(xi), &p, &EigenConfig::default()).unwrap();
        far_field_deviation(xi, &g, &e.samples, CROSS_WINDOW).unwrap()
    };
    let (d5, d10, d20) = (dev(5.0), dev(10.0), dev(20.0));
    println!("far-field deviation: ξ = 5 {d5:.3e}, ξ = 10 {d10:.3e}, ξ = 20 {d20:.3e}");
    assert!(d10 <= 0.2);
    assert!((d10 / d5 - 0.5).abs() <= 0.25);
    assert!((d20 / d10 - 0.5).abs() <= 0.25);
    for xi in [5.0, 10.0, 20.0] {
        let fl: Vec<[f64; 2]> = g.nodes.iter().map(|&r| flat_eigenfunction(xi, r)).collect();
        assert!(far_field_deviation(xi, &g, &fl, CROSS_WINDOW).unwrap() <= 1e-10);
    }
}

#[test]
fn cross_check_reads_table_nodes() {
    let g = Arc::new(RadialGrid::new(GridSpec::default().with_r_max(45.0)).unwrap());
    let p = solve_profile(g.clone(), 1e-9).unwrap();
    let xs = XiGridSpec { xi_min: 6.0, xi_max: 7.0, scale: 0.5, dtau: 0.3, uniform_in_lambda: false };
    let table = build_table(&p, &XiGrid::new(xs).unwrap(), &EigenConfig::default()).unwrap();
    let node = table.xi.xi[0];
    let d = cross_check(node, &table).unwrap();
    assert!(d > 0.0 && d <= 0.2);
    assert_eq!(cross_check(1.001 * node, &table).unwrap(), d);
    assert!(matches!(cross_check(4.0, &table), Err(FlatError::LowFrequency(_))));
    assert!(matches!(cross_check(50.0, &table), Err(FlatError::NoNode(_))));
    let short = Arc::new(RadialGrid::new(GridSpec::default().with_r_max(30.0)).unwrap());
    let fl = vec![[0.0; 2]; short.len()];
    assert!(matches!(far_field_deviation(6.0, &short, &fl, CROSS_WINDOW), Err(FlatError::ShortGrid(_))));
}
