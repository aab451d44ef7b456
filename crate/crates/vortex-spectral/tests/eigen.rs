use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use vortex_spectral::eigen::*;
use vortex_spectral::grid::{GridSpec, RadialGrid, XiGrid, XiGridSpec};
use vortex_spectral::odesys::{seed_jost, wronskian_real, JostKind, Representation, SpectralPoint};
use vortex_spectral::profile::{solve_profile, VortexProfile};

fn profile() -> &'static VortexProfile {
    static P: OnceLock<VortexProfile> = OnceLock::new();
    P.get_or_init(|| {
        let grid = Arc::new(RadialGrid::new(GridSpec::default()).unwrap());
        solve_profile(grid, 1e-9).unwrap()
    })
}

fn eig_xi(xi: f64) -> Eigenfunction {
    eigenfunction(&SpectralPoint::from_xi(xi), profile(), &EigenConfig::default()).unwrap()
}

fn along_e(e: &Eigenfunction, j: usize) -> f64 {
    let v = e.samples[j];
    let ev = SpectralPoint::from_xi(e.sp.xi.abs()).e_vec;
    v[0] * ev[0] + v[1] * ev[1]
}

// least squares y ≈ A sin x + B cos x; returns (A, B, max residual)
fn sinusoid_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in x.iter().zip(y) {
        let (s, c) = x.sin_cos();
        ss += s * s;
        sc += s * c;
        cc += c * c;
        ys += y * s;
        yc += y * c;
    }
    let det = ss * cc - sc * sc;
    let a = (ys * cc - yc * sc) / det;
    let b = (yc * ss - ys * sc) / det;
    let res = x.iter().zip(y).map(|(&x, &y)| (y - a * x.sin() - b * x.cos()).abs()).fold(0.0, f64::max);
    (a, b, res)
}

#[test]
fn zero_frequency_limit_at_small_xi() {
    let p = profile();
    let e = eig_xi(1e-3);
    let j = p.grid.nearest(1.0);
    let want = (FRAC_PI_4).sqrt() * p.rho_at(p.grid.nodes[j]);
    let v = e.samples[j];
    println!("ψ(1e-3, 1) = {v:?}, limit ±{want}");
    assert!((v[0] - want).abs() <= 0.02 && (v[1] + want).abs() <= 0.02);
}

#[test]
fn far_field_matches_sinusoid() {
    for xi in [1.0, 2.0, 5.0] {
        let e = eig_xi(xi);
        let g = &e.grid;
        let (mut x, mut y) = (vec![], vec![]);
        for (j, &r) in g.nodes.iter().enumerate() {
            if (30.0..=60.0).contains(&(xi * r)) {
                x.push(xi * r);
                y.push((xi * r).sqrt() * along_e(&e, j));
            }
        }
        let (a, b, res) = sinusoid_fit(&x, &y);
        println!("ξ={xi}: fit ({a:.6}, {b:.6}) vs γ {:?}, residual {res:.2e}", e.gamma);
        assert!(res <= 0.05, "{res}");
        // the fitted phase pair agrees with the one read off the Jost coefficients
        assert!((a - e.gamma.0).abs() < 0.02 && (b - e.gamma.1).abs() < 0.02);
    }
}

#[test]
fn gamma_is_unit_and_sign_fixed_by_origin_slope() {
    for xi in [1e-3, 0.1, 0.7, 3.0, 12.0] {
        let e = eig_xi(xi);
        assert!((e.gamma.0.hypot(e.gamma.1) - 1.0).abs() <= 1e-10);
        let ev = e.sp.e_vec;
        assert!(e.slope0[0] * ev[0] + e.slope0[1] * ev[1] > 0.0);
    }
}

#[test]
fn matching_quality() {
    for xi in [1e-3, 0.05, 0.3, 1.0, 4.0, 20.0] {
        let e = eig_xi(xi);
        let c = &e.coeffs;
        let d = &e.diagnostics;
        println!("ξ={xi}: gap {:.2e} null {:.2e} {:?}", c.gap, c.null_residual, d);
        assert!(c.gap >= 1e3);
        assert!(c.null_residual <= 1e-8);
        assert!(c.alpha3.powi(2) + c.alpha4.powi(2) > 0.0);
        assert!(d.two_radius_dev <= 1e-4);
        assert!(d.match_jump <= 1e-7);
        assert!(d.wronskian_spread <= 1e-6);
    }
}

#[test]
fn oscillatory_amplitude_identity() {
    // α3² + α4² = π/(2C²)
    for lam in [0.01, 0.3, 1.0, 4.0, 50.0] {
        let sp = SpectralPoint::from_lambda(lam);
        let e = eigenfunction(&sp, profile(), &EigenConfig::default()).unwrap();
        let got = e.coeffs.alpha3.powi(2) + e.coeffs.alpha4.powi(2);
        let want = PI / (2.0 * sp.c_factor().powi(2));
        assert!((got / want - 1.0).abs() < 1e-8, "λ={lam}: {got} vs {want}");
    }
}

#[test]
fn high_frequency_limit_vector() {
    // (α2, α3, α4, β1, β2) → (0, √(π/2), 0, 0, √(π/2)) up to scale, with O(1/ξ) corrections
    let s = FRAC_PI_2.sqrt();
    let mut prev = f64::INFINITY;
    for lam in [4.0, 20.0, 100.0, 400.0] {
        let sp = SpectralPoint::from_lambda(lam);
        let e = eigenfunction(&sp, profile(), &EigenConfig::default()).unwrap();
        let c = &e.coeffs;
        let k = sp.c_factor();
        let v = [c.alpha2, c.alpha3, c.alpha4, c.beta1, c.beta2].map(|x| x * k);
        let sign = v[4].signum();
        let dev = [v[0], v[1] - sign * s, v[2], v[3], v[4] - sign * s].iter().fold(0.0f64, |a, x| a.max(x.abs()));
        println!("λ={lam} ξ={:.3}: scaled vector {v:?}, deviation {dev:.4}, ξ·dev {:.3}", sp.xi, sp.xi * dev);
        assert!(sp.xi * dev <= 3.0);
        assert!(dev < prev);
        prev = dev;
    }
}

#[test]
fn low_frequency_oscillatory_part_is_regular_type() {
    // at small λ the oscillatory part is J0-like: one of the two Jost coefficients dominates
    let lam: f64 = 0.05;
    let sp = SpectralPoint::from_lambda(lam);
    let e = eigenfunction(&sp, profile(), &EigenConfig::default()).unwrap();
    let c = &e.coeffs;
    let ratio = (c.alpha3 / c.alpha4).abs();
    println!("λ={lam}: α3/α4 = {ratio:e}");
    assert!(ratio <= lam * lam * lam.ln().powi(2));
    assert!((c.alpha4.abs() * sp.c_factor().abs() - FRAC_PI_2.sqrt()).abs() <= lam * lam * lam.ln().powi(2));
}

#[test]
fn flat_coefficients_bound() {
    for xi in [1e-3, 3e-3, 0.01, 0.03, 0.1, 0.3] {
        let e = eig_xi(xi);
        let d = scattering_coeffs(&e, profile());
        assert_eq!(d.regime, Regime::FlatLow);
        let TemplateCoeffs::Flat { b, c } = d.template_coeffs else { panic!() };
        assert!((b * b + c * c - 1.0).abs() <= 1e-8);
        let bound = 50.0 * xi * xi * xi.ln().powi(2);
        println!("ξ={xi}: b♭−1 = {:.3e}, c♭ = {c:.3e}, bound {bound:.3e}", b - 1.0);
        assert!((b - 1.0).abs() <= bound);
    }
}

// The coefficient law read as an asymptotic equality |b♭ − 1| ~ ξ² ln² ξ does not
// hold for this profile: c♭ decays like ξ⁴|ln ξ| and b♭ − 1 ≈ −c♭²/2 drops to
// rounding level below ξ ≈ 0.01. The upper bound is checked in
// flat_coefficients_bound; this test records the failing slope reading.
#[test]
#[ignore = "observed slope is about 3.7, not 1; see README"]
fn flat_coefficient_slope_law() {
    let xs: Vec<f64> = (0..12).map(|k| 1e-3 * 300f64.powf(k as f64 / 11.0)).collect();
    let mut pts = vec![];
    for &xi in &xs {
        let e = eig_xi(xi);
        let (b, _) = flat_coeffs(e.gamma);
        let d = (b - 1.0).abs();
        if d > 0.0 {
            pts.push((2.0 * xi.ln() + 2.0 * xi.ln().abs().ln(), d.ln()));
        }
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!("slope {slope}");
    assert!((slope - 1.0).abs() <= 0.3);
}

#[test]
fn sharp_coefficients_bound() {
    for xi in [5.0, 7.5, 10.0, 15.0, 20.0] {
        let e = eig_xi(xi);
        let d = scattering_coeffs(&e, profile());
        assert_eq!(d.regime, Regime::SharpHigh);
        let TemplateCoeffs::Sharp { a, b, c } = d.template_coeffs else { panic!() };
        assert!((b * b + c * c - 1.0).abs() <= 1e-8);
        let err = (b + FRAC_1_SQRT_2).abs() + (c - FRAC_1_SQRT_2).abs();
        println!("ξ={xi}: a♯={a:.4} b♯={b:.4} c♯={c:.4}, ξ·err {:.3}", xi * err);
        assert!(err <= 5.0 / xi);
        if xi == 20.0 {
            assert!((b + FRAC_1_SQRT_2).abs() <= 0.1 && (c - FRAC_1_SQRT_2).abs() <= 0.1);
        }
    }
}

#[test]
fn sharp_regular_part_envelope() {
    let xi = 20.0;
    let e = eig_xi(xi);
    let d = scattering_coeffs(&e, profile());
    // ratio of |ψ^R| to 1/(ξ⟨r⟩⟨ξr⟩^{1/2}), binned by log r
    let mut bins = std::collections::BTreeMap::<i64, f64>::new();
    for (j, &r) in e.grid.nodes.iter().enumerate() {
        if xi * r < 10.0 {
            continue;
        }
        let env = 1.0 / (xi * (1.0 + r * r).sqrt() * (1.0 + xi * xi * r * r).powf(0.25));
        let v = d.regular_part[j];
        let m = bins.entry((2.0 * r.ln()).floor() as i64).or_insert(0.0);
        *m = m.max(v[0].hypot(v[1]) / env);
    }
    // envelope constant fitted in log space with equal weight per scale
    let k = (bins.values().map(|v| v.ln()).sum::<f64>() / bins.len() as f64).exp();
    let worst = bins.values().cloned().fold(0.0, f64::max);
    println!("fitted constant {k:.3}, worst ratio {worst:.3}");
    assert!(worst <= 2.0 * k);
}

#[test]
fn wronskian_of_outgoing_pair() {
    // W(F1, G1) = iξ/2 with G1 = √ξ ψ and F1 = (√ξ/2)(ψ + iψ̃), ψ̃ the quadrature partner
    let sp = SpectralPoint::from_lambda(1.0);
    let p = profile();
    let e = eigenfunction(&sp, p, &EigenConfig::default()).unwrap();
    let j = e.grid.len() - 1;
    let r = e.grid.nodes[j];
    let seed = |k| seed_jost(&sp, &p.table, k, r).unwrap().to(&sp, Representation::UV).re();
    let (cs, sn) = (seed(JostKind::OscCos), seed(JostKind::OscSin));
    let psi = [e.samples[j][0], e.derivs[j][0], e.samples[j][1], e.derivs[j][1]];
    // ψ = a·C + b·S at r_max (decaying part is below e^{-80}); solve by least squares
    let (mut m11, mut m12, mut m22, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 0..4 {
        m11 += cs[t] * cs[t];
        m12 += cs[t] * sn[t];
        m22 += sn[t] * sn[t];
        y1 += cs[t] * psi[t];
        y2 += sn[t] * psi[t];
    }
    let det = m11 * m22 - m12 * m12;
    let a = (y1 * m22 - y2 * m12) / det;
    let b = (y2 * m11 - y1 * m12) / det;
    let fit: f64 = (0..4).map(|t| (psi[t] - a * cs[t] - b * sn[t]).powi(2)).sum::<f64>().sqrt();
    assert!(fit < 1e-6, "{fit}");
    let tilde: Vec<f64> = (0..4).map(|t| a * sn[t] - b * cs[t]).collect();
    // W(F1, G1) = (ξ/2)[W(ψ, ψ) + i W(ψ̃, ψ)]
    let w_re = 0.5 * sp.xi * wronskian_real(r, &psi, &psi);
    let w_im = 0.5 * sp.xi * wronskian_real(r, &tilde, &psi);
    println!("W(F1,G1) = {w_re:e} + {w_im:.8} i, iξ/2 = {:.8} i", sp.xi / 2.0);
    assert!(w_re.abs() <= 1e-3);
    assert!((w_im - sp.xi / 2.0).abs() <= 1e-3);
}

#[test]
fn samples_solve_the_system() {
    // finite-difference residual of the (u, v) equations on the uniform part of the grid
    let p = profile();
    for xi in [0.2, 3.0] {
        let e = eig_xi(xi);
        let g = &e.grid;
        let lam = e.sp.lam;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for j in 0..g.len() {
            let r = g.nodes[j];
            if !(2.0..50.0).contains(&r) {
                continue;
            }
            // differentiate the stored derivatives once rather than the values twice,
            // which would amplify the integration tolerance by 1/h²
            let (s1, w1) = g.stencil(j, 1);
            let d = |f: &dyn Fn(usize) -> f64| w1.iter().enumerate().map(|(i, w)| w * f(s1 + i)).sum::<f64>();
            let (u, v) = (e.samples[j][0], e.samples[j][1]);
            let (du, dv) = (e.derivs[j][0], e.derivs[j][1]);
            let m = p.rho[j] * p.rho[j] - 1.0;
            let ru = d(&|i| e.derivs[i][0]) + du / r - u / (r * r) - (1.0 - lam) * u - v - m * (2.0 * u + v);
            let rv = d(&|i| e.derivs[i][1]) + dv / r - v / (r * r) - u - (1.0 + lam) * v - m * (u + 2.0 * v);
            worst = worst.max(ru.abs().max(rv.abs()));
            scale = scale.max(u.abs().max(v.abs()) * (1.0 + xi * xi));
            // derivative samples agree with differentiated values
            assert!((d(&|i| e.samples[i][0]) - du).abs() <= 1e-6 * (1.0 + xi) * scale.max(1e-3));
        }
        println!("ξ={xi}: relative FD residual {:.2e}", worst / scale);
        assert!(worst / scale <= 1e-6);
    }
}

#[test]
fn decay_envelope_exponent() {
    let xi = 1.0;
    let e = eig_xi(xi);
    // local maxima of |ψ·e| beyond ξr = 10
    let g = &e.grid;
    let y: Vec<f64> = (0..g.len()).map(|j| along_e(&e, j).abs()).collect();
    let mut pts = vec![];
    for j in 1..g.len() - 1 {
        if xi * g.nodes[j] >= 10.0 && y[j] >= y[j - 1] && y[j] >= y[j + 1] {
            pts.push((g.nodes[j].ln(), y[j].ln()));
        }
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!("envelope exponent {slope:.4}");
    assert!((slope + 0.5).abs() <= 0.05);
}

#[test]
fn zero_frequency_rejected() {
    let r = eigenfunction(&SpectralPoint::from_xi(0.0), profile(), &EigenConfig::default());
    assert_eq!(r.unwrap_err(), EigenError::ZeroFrequency);
}

#[test]
fn intermediate_regime_picks_smaller_residual() {
    let e = eig_xi(1.0);
    let d = scattering_coeffs(&e, profile());
    let sup = |v: &[[f64; 2]]| v.iter().map(|x| x[0].hypot(x[1])).fold(0.0, f64::max);
    assert!(sup(&d.regular_part) <= sup(&e.samples));
}

#[test]
fn table_build_and_parity() {
    let spec = XiGridSpec { xi_min: 0.01, xi_max: 3.0, dtau: 0.6, ..Default::default() };
    let xi = XiGrid::new(spec).unwrap();
    let t = build_table(profile(), &xi, &EigenConfig::default()).unwrap();
    assert_eq!(t.len(), xi.len());
    for i in 0..t.len() {
        let direct = eig_xi(xi.xi[i]);
        assert_eq!(direct.samples, t.eigenfunctions[i].samples);
        let neg = t.psi(i, true);
        let pos = t.psi(i, false);
        assert!(neg.iter().zip(&pos).all(|(n, p)| n[0] == -p[1] && n[1] == -p[0]));
    }
    let c = FRAC_PI_4.sqrt();
    assert!(t.zero_limit.iter().zip(&profile().rho).all(|(z, r)| z[0] == c * r && z[1] == -c * r));
}

#[test]
fn table_build_reports_failures() {
    let spec = XiGridSpec { xi_min: 0.5, xi_max: 1.0, dtau: 0.5, ..Default::default() };
    let xi = XiGrid::new(spec).unwrap();
    let cfg = EigenConfig { match_gap: 1e30, ..Default::default() };
    match build_table(profile(), &xi, &cfg) {
        Err(EigenError::Table(f)) => assert_eq!(f.len(), xi.len()),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parity_is_exact(xi in 0.01f64..10.0) {
        let cfg = EigenConfig::default();
        let pos = eigenfunction(&SpectralPoint::from_xi(xi), profile(), &cfg).unwrap();
        let neg = eigenfunction(&SpectralPoint::from_xi(-xi), profile(), &cfg).unwrap();
        for (a, b) in pos.samples.iter().zip(&neg.samples) {
            prop_assert_eq!(b[0], -a[1]);
            prop_assert_eq!(b[1], -a[0]);
        }
        prop_assert_eq!(pos.gamma, neg.gamma);
        let dp = scattering_coeffs(&pos, profile());
        let dn = scattering_coeffs(&neg, profile());
        for (a, b) in dp.singular_part.iter().zip(&dn.singular_part) {
            prop_assert!((b[0] + a[1]).abs() < 1e-14 && (b[1] + a[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn continuous_in_xi(xi in 0.01f64..10.0) {
        let a = eig_xi(xi);
        let b = eig_xi(xi * (1.0 + 1e-5));
        // ∂_ξψ is bounded by ~r, and r ≤ 60 on the grid
        let d = a.samples.iter().zip(&b.samples).map(|(x, y)| (x[0] - y[0]).hypot(x[1] - y[1])).fold(0.0, f64::max);
        prop_assert!(d <= 1e-5 * xi * 60.0 * 2.0, "{}", d);
        prop_assert!((a.gamma.0.hypot(a.gamma.1) - 1.0).abs() <= 1e-10);
    }
}
