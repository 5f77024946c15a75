//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Every tolerance below is pinned; the criteria run on fixed seeds and
//! are deterministic up to floating-point reproducibility of the host.

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use common::{random_hermitian, scalar_bump, two_gaussian_2x2, C64};
use rand::rngs::StdRng;
use rand::SeedableRng;
use rayon::prelude::*;

use weylkit::asymptotics::{
    green_coeffs, green_diag, locality_experiment, m_coeffs, sandwich_solve, symbols,
    verify_order, MethodOptions, ZSchedule,
};
use weylkit::cayley::{explicit_phi, limit_constant, SectorPoint};
use weylkit::linalg::{herglotz_sqrt, hermitian_fn, identity, opnorm};
use weylkit::potential::PotentialModel;
use weylkit::volterra::solve_volterra;
use weylkit::weyl::{disk_membership, limit_m, mirror_m_minus, regular_m, BoundaryData, LimitOptions};
use weylkit::{CMatrix, StepControl};

fn report(criterion: u32, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// 1. Constant-potential exactness: `limit_m` matches `i (zI - Q0)^{1/2}`
///    to relative 1e-7 over 20 random Hermitian potentials and a 5×4
///    spectral grid.
#[test]
fn criterion_1_constant_potential_exactness() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(11);
    let mut potentials = Vec::new();
    for m in 1..=4usize {
        for _ in 0..5 {
            let norm = 3.0 + 7.0 * (potentials.len() as f64 % 5.0) / 4.0; // norms in [3, 10]
            potentials.push(random_hermitian(m, norm, &mut rng));
        }
    }
    let moduli = [1.0, 10.0, 1e2, 1e3, 1e4];
    let angles = [0.1, FRAC_PI_4, FRAC_PI_2, PI - 0.1];
    let opts = LimitOptions::default()
        .with_max_length(8192.0)
        .without_limit_circle_probe();

    let jobs: Vec<(usize, C64)> = (0..potentials.len())
        .flat_map(|i| {
            moduli
                .iter()
                .flat_map(|&r| angles.iter().map(move |&a| C64::from_polar(r, a)))
                .map(move |z| (i, z))
                .collect::<Vec<_>>()
        })
        .collect();

    let worst = jobs
        .par_iter()
        .map(|&(i, z)| {
            let q0 = &potentials[i];
            let pot = PotentialModel::constant(q0.clone()).expect("Hermitian");
            let res = limit_m(z, 0.0, &pot, &opts).expect("limit extraction");
            let exact = herglotz_sqrt(q0, z).expect("oracle");
            opnorm(&(&res.m - &exact)) / opnorm(&exact)
        })
        .reduce(|| 0.0, f64::max);

    let pass = worst <= 1e-7;
    report(
        1,
        pass,
        &format!(
            "worst relative error {worst:.3e} over {} runs in {:.1}s",
            jobs.len(),
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(pass, "constant-potential exactness: worst {worst:.3e} > 1e-7");
}

/// 2. Recursion identity: `m_coeffs` at N = 6 for constant Q0 equals the
///    binomial-series coefficients of `i (zI - Q0)^{1/2}` to 1e-12 per
///    coefficient. (The non-constant 2×2 cross-check runs in criterion 3.)
#[test]
fn criterion_2_recursion_matches_binomial_series() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(22);
    let mut worst: f64 = 0.0;
    for m in 1..=4usize {
        let q0 = random_hermitian(m, 2.5, &mut rng);
        let pot = PotentialModel::constant(q0.clone()).expect("Hermitian");
        let series = m_coeffs(&pot, 0.0, 6).expect("smooth enough");
        // i (zI - Q0)^{1/2} = i z^{1/2} Σ_k binom(1/2, k) (-Q0/z)^k:
        // m_{2k-1} = i (-1)^k binom(1/2, k) Q0^k, even coefficients vanish
        let mut binom = 1.0; // binom(1/2, 0)
        let mut power = identity(m);
        for k in 1..=3usize {
            binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
            power = &power * &q0;
            let expected = &power * (C64::new(0.0, 1.0) * (-1.0f64).powi(k as i32) * binom);
            let diff = opnorm(&(&series.coeffs[2 * k - 2] - &expected));
            worst = worst.max(diff / (1.0 + opnorm(&expected)));
            worst = worst.max(opnorm(&series.coeffs[2 * k - 1]));
        }
    }
    let pass = worst <= 1e-12;
    report(
        2,
        pass,
        &format!(
            "worst coefficient deviation {worst:.3e} in {:.2}s",
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(pass, "recursion vs binomial series: worst {worst:.3e} > 1e-12");
}

/// 3. Asymptotic order: scaled remainders `R_j = ‖M - partial sum‖ |z|^{N/2}`
///    strictly decrease over the last three moduli for N ∈ {1,2,3}, on a
///    truncated 2×2 Gaussian potential and a scalar bump, for five sector
///    angles.
#[test]
fn criterion_3_asymptotic_order() {
    let t0 = Instant::now();
    let schedule = ZSchedule {
        moduli: vec![1e2, 1e3, 1e4, 1e5],
        angles: vec![0.1, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4, PI - 0.1],
    };
    let opts = MethodOptions::default();
    let x0 = 0.7;

    let mut all_pass = true;
    let mut detail = String::new();
    for (name, pot) in [("2x2 gaussian", two_gaussian_2x2()), ("scalar bump", scalar_bump())] {
        for n in 1..=3usize {
            let rep = verify_order(&pot, x0, n, &schedule, &opts).expect("order run");
            all_pass &= rep.pass;
            let worst_tail: Vec<f64> = rep.rows[0].scaled_remainders.clone();
            detail.push_str(&format!(
                "[{name} N={n}: {} R(δ=0.1)={:?}] ",
                if rep.pass { "ok" } else { "NOT DECREASING" },
                worst_tail.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>()
            ));
        }
    }
    report(
        3,
        all_pass,
        &format!("{detail} in {:.1}s", t0.elapsed().as_secs_f64()),
    );
    assert!(all_pass, "asymptotic order verification failed: {detail}");
}

/// 4. Leading order with the o(1) refinement: `‖M_+(z,x) - i z^{1/2} I‖`
///    stays below `2 (‖Q‖_∞ / 2 + 1)` for |z| ≥ 1e4 across the sector and
///    a three-point x-grid.
#[test]
fn criterion_4_leading_order_boundedness() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(44);
    let moduli = [1e4, 1e5, 1e6];
    let angles = [0.1, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4, PI - 0.1];
    let opts = MethodOptions::default();

    let q0 = random_hermitian(2, 3.0, &mut rng);
    let corpus: Vec<(String, PotentialModel, f64)> = vec![
        ("2x2 gaussian".into(), two_gaussian_2x2(), 0.7),
        ("scalar bump".into(), scalar_bump(), 0.7),
        (
            "constant".into(),
            PotentialModel::constant(q0).expect("Hermitian"),
            0.0,
        ),
    ];

    let mut pass = true;
    let mut worst_ratio: f64 = 0.0;
    for (name, pot, x0) in &corpus {
        let sup = pot.sup_norm_estimate(*x0 - 1.0, *x0 + 8.0);
        let bound = 2.0 * (sup / 2.0 + 1.0);
        for &dx in &[0.0, 0.5, 1.0] {
            let x = x0 + dx;
            for &r in &moduli {
                for &a in &angles {
                    let z = C64::from_polar(r, a);
                    let m = weylkit::asymptotics::m_plus_numeric(z, x, pot, &opts)
                        .unwrap_or_else(|e| panic!("{name} at z={z}: {e}"));
                    let lead = identity(pot.dim()) * (C64::new(0.0, 1.0) * z.sqrt());
                    let dev = opnorm(&(m - lead));
                    worst_ratio = worst_ratio.max(dev / bound);
                    if dev > bound {
                        pass = false;
                    }
                }
            }
        }
    }
    report(
        4,
        pass,
        &format!(
            "worst deviation/bound ratio {worst_ratio:.3} in {:.1}s",
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(pass, "leading-order boundedness violated (ratio {worst_ratio:.3})");
}

/// 5. Disk containment and nesting: 50 random admissible boundary data
///    (both admissible sign classes), z ∈ {i, 1+i, 10i}, c ∈ {1, 2, 4}:
///    every regular M passes membership at its own horizon and at every
///    smaller horizon with defect ≤ 1e-8.
///
///    Note: the (z = 10i, c = 4) own-horizon cell sits beyond double
///    precision — the membership question's condition number is
///    e^{2 Im√z (c-x0)} ≈ 6e7, so even an exactly-rounded disk point
///    floors near 2e-7. The criterion is asserted as stated regardless.
#[test]
fn criterion_5_disk_containment_and_nesting() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(55);
    let pot = two_gaussian_2x2();
    let ctrl = StepControl {
        rtol: 1e-12,
        atol: 1e-14,
        ..Default::default()
    };
    let betas: Vec<BoundaryData> = (0..50)
        .map(|i| {
            if i % 2 == 0 {
                BoundaryData::sample_positive(2, &mut rng)
            } else {
                BoundaryData::sample_selfadjoint(2, &mut rng)
            }
        })
        .collect();
    let zs = [C64::new(0.0, 1.0), C64::new(1.0, 1.0), C64::new(0.0, 10.0)];
    let horizons = [1.0, 2.0, 4.0];

    let jobs: Vec<(usize, C64, f64)> = (0..betas.len())
        .flat_map(|i| {
            zs.iter()
                .flat_map(|&z| horizons.iter().map(move |&c| (z, c)))
                .map(move |(z, c)| (i, z, c))
                .collect::<Vec<_>>()
        })
        .collect();

    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(i, z, c)| {
            let m = match regular_m(z, c, 0.0, &pot, &betas[i], &ctrl) {
                Ok(m) => m,
                Err(e) => return Some(format!("beta#{i} z={z} c={c}: regular_m failed: {e}")),
            };
            let mut worst = None;
            for &h in horizons.iter().filter(|&&h| h <= c) {
                match disk_membership(&m, z, h, 0.0, &pot, &ctrl) {
                    Ok(defect) if defect <= 1e-8 => {}
                    Ok(defect) => {
                        worst = Some(format!(
                            "beta#{i} z={z} c={c} horizon {h}: defect {defect:.3e}"
                        ));
                    }
                    Err(e) => worst = Some(format!("beta#{i} z={z} c={c} horizon {h}: {e}")),
                }
            }
            worst
        })
        .collect();

    let pass = failures.is_empty();
    let mut cells: Vec<String> = failures
        .iter()
        .filter_map(|f| f.split_once(": ").map(|(head, _)| head.split_once(' ').map(|(_, loc)| loc.to_string()).unwrap_or_default()))
        .collect();
    cells.sort();
    cells.dedup();
    report(
        5,
        pass,
        &format!(
            "{} of {} checks failed in {:.1}s{}",
            failures.len(),
            jobs.len(),
            t0.elapsed().as_secs_f64(),
            if pass {
                String::new()
            } else {
                format!(
                    "; failing cells {cells:?}; first: {} (the own-horizon cell at z=10i, c=4 \
                     is beyond f64: condition number e^{{2 Im sqrt(z) c}} ≈ 6e7 puts the defect \
                     floor near 2e-7 for exactly-rounded disk points)",
                    failures[0]
                )
            }
        ),
    );
    assert!(
        pass,
        "disk containment/nesting failures ({} cells): {:?}, e.g. {}",
        failures.len(),
        cells,
        failures[0]
    );
}

/// 6. Exponential locality: for pairs agreeing on [0, 1] the fitted slope
///    of `log ‖ΔM‖` against `Im √z` is ≤ -1.8 (target -2) and the
///    refined normalization stays bounded.
#[test]
fn criterion_6_exponential_locality() {
    let t0 = Instant::now();
    let zs: Vec<C64> = [4.0, 16.0, 64.0, 256.0]
        .iter()
        .map(|&r| C64::from_polar(r, FRAC_PI_2))
        .collect();
    let opts = MethodOptions::default();

    // scalar pair: zero vs a bump living on [1, 2]
    let zero_scalar = PotentialModel::truncated(&PotentialModel::free(1), 1.0, 2.0).unwrap();
    let bump = {
        let base = PotentialModel::scalar(6, |x, k| {
            2.0 * common::gaussian_derivative(x, 1.3, 0.14, k)
        })
        .unwrap();
        PotentialModel::truncated(&base, 1.0, 2.0).unwrap()
    };
    let scalar_rep = locality_experiment(&zero_scalar, &bump, 0.0, 1.0, &zs, &opts).unwrap();

    // 2×2 pair
    let zero_matrix = PotentialModel::truncated(&PotentialModel::free(2), 1.0, 2.0).unwrap();
    let amp = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.4, 0.2),
            C64::new(0.4, -0.2),
            C64::new(-0.7, 0.0),
        ],
    );
    let bump2 = {
        let base = PotentialModel::smooth(2, 6, move |x, k| {
            &amp * C64::new(common::gaussian_derivative(x, 1.3, 0.14, k), 0.0)
        })
        .unwrap();
        PotentialModel::truncated(&base, 1.0, 2.0).unwrap()
    };
    let matrix_rep = locality_experiment(&zero_matrix, &bump2, 0.0, 1.0, &zs, &opts).unwrap();

    // identical pair: differences at solver-tolerance level
    let trivial =
        locality_experiment(&bump, &bump, 0.0, 1.0, &zs, &opts).expect("identical pair runs");
    let trivial_ok = trivial.differences.iter().all(|&d| d <= 2e-12);

    let pass = scalar_rep.pass_slope
        && scalar_rep.pass_bounded
        && matrix_rep.pass_slope
        && matrix_rep.pass_bounded
        && trivial_ok;
    report(
        6,
        pass,
        &format!(
            "scalar slope {:.3}, matrix slope {:.3} (threshold -1.8), identical-pair max diff {:.1e}, in {:.1}s",
            scalar_rep.slope,
            matrix_rep.slope,
            trivial.differences.iter().cloned().fold(0.0, f64::max),
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(pass, "exponential locality failed: scalar {scalar_rep:?}, matrix slope {}", matrix_rep.slope);
}

/// 7. Cross-method consistency: `limit_m`, the Riccati-translated M and
///    the Volterra M agree pairwise to 1e-6 on the truncated corpus for
///    |z| ≥ 25.
#[test]
fn criterion_7_cross_method_consistency() {
    let t0 = Instant::now();
    // all moduli >= 25; the Riccati translation amplifies its input error
    // by e^{2 Im sqrt(z) (x1-x0)}, so Im sqrt(z) (x1-x0) is kept moderate
    let zs = [
        C64::from_polar(25.0, FRAC_PI_2),
        C64::from_polar(36.0, FRAC_PI_4),
        C64::from_polar(50.0, 2.0),
        C64::from_polar(100.0, 0.3),
    ];
    let step_pot = {
        let base = PotentialModel::constant(identity(1) * C64::new(2.0, 0.0)).unwrap();
        PotentialModel::truncated(&base, 0.0, 1.0).unwrap()
    };
    let corpus = [
        ("2x2 gaussian", two_gaussian_2x2()),
        ("scalar bump", scalar_bump()),
        ("step", step_pot),
    ];
    let limit_opts = LimitOptions::default().without_limit_circle_probe();
    let x0 = 0.0;
    let x1 = 0.4;

    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for (name, pot) in &corpus {
        for &z in &zs {
            let via_limit = limit_m(z, x1, pot, &limit_opts).expect("limit").m;
            let translated = {
                let at_x0 = limit_m(z, x0, pot, &limit_opts).expect("limit at x0").m;
                weylkit::propagate::riccati_flow(z, &at_x0, pot, x0, x1, &StepControl::default())
                    .expect("riccati translation")
            };
            let via_volterra = solve_volterra(z, pot, x1, 1e-12)
                .expect("volterra")
                .m_at(x1)
                .expect("m from volterra");
            for (a, b) in [
                (&via_limit, &translated),
                (&via_limit, &via_volterra),
                (&translated, &via_volterra),
            ] {
                let d = opnorm(&(a - b));
                if d > worst {
                    worst = d;
                    worst_at = format!("{name} z={z}");
                }
            }
        }
    }
    let pass = worst <= 1e-6;
    report(
        7,
        pass,
        &format!(
            "worst pairwise difference {worst:.3e} ({worst_at}) in {:.1}s",
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(pass, "cross-method consistency: worst {worst:.3e} at {worst_at}");
}

/// 8. Green expansion: `(M_- - M_+)^{-1}` matches `(i/2)(zI - Q0)^{-1/2}`
///    for constant potentials to 1e-7; `G_0 = I`, `G_1 = Q/2` hold at
///    symbol level; `G_2 = 3 Q0²/8` matches the independent binomial
///    value.
#[test]
fn criterion_8_green_expansion() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(88);

    // symbol-level identities
    let polys = symbols::green_coeff_polys(2);
    let g0_exact = polys.coeffs[0] == symbols::NcPoly::constant(C64::new(1.0, 0.0));
    let g1_exact = polys.coeffs[1] == symbols::NcPoly::symbol(0).scale(C64::new(0.5, 0.0));

    // numerics for a constant potential
    let q0 = random_hermitian(2, 2.0, &mut rng);
    let pot = PotentialModel::constant(q0.clone()).unwrap();
    let z = C64::new(3.0, 5.0);
    let opts = LimitOptions::default().without_limit_circle_probe();
    let m_plus = limit_m(z, 0.0, &pot, &opts).unwrap().m;
    let m_minus = mirror_m_minus(z, 0.0, &pot, &opts).unwrap().m;
    let g = green_diag(&m_minus, &m_plus).unwrap();
    let oracle = hermitian_fn(&q0, 1e-10, |lambda| {
        C64::new(0.0, 0.5) / (z - lambda).sqrt()
    })
    .unwrap();
    let rel = opnorm(&(&g - &oracle)) / opnorm(&oracle);

    // G_2 against the binomial series value 3 Q0² / 8
    let series = green_coeffs(&pot, 0.0, 2).unwrap();
    let g2_expected = &q0 * &q0 * C64::new(3.0 / 8.0, 0.0);
    let g2_err = opnorm(&(&series.coeffs[2] - &g2_expected));

    let pass = g0_exact && g1_exact && rel <= 1e-7 && g2_err <= 1e-12 * (1.0 + opnorm(&g2_expected));
    report(
        8,
        pass,
        &format!(
            "G0/G1 symbol-exact: {}/{}, numeric rel {rel:.3e}, G2 deviation {g2_err:.3e}, in {:.1}s",
            g0_exact,
            g1_exact,
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(pass, "green expansion: rel {rel:.3e}, g2 {g2_err:.3e}");
}

/// 9. Explicit solution residual: the centered-difference time derivative
///    of the closed-form free solution satisfies the rescaled flow to
///    1e-6 at 100 random samples, and the stationary value is a fixed
///    point to 1e-12.
#[test]
fn criterion_9_explicit_solution_residual() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(99);
    let h = 1e-5;
    let mut worst_residual: f64 = 0.0;
    let mut worst_fixed: f64 = 0.0;

    let flow_rhs = |phi: &CMatrix, delta: f64| -> CMatrix {
        let m = phi.nrows();
        let plus = identity(m) + phi;
        let minus = identity(m) - phi;
        let phase = C64::new(0.0, delta).exp();
        (&minus * &minus - &plus * &plus * phase) * C64::new(0.0, 0.5)
    };

    for _ in 0..100 {
        let modulus = 10f64.powf(rand::Rng::random_range(&mut rng, 0.0..2.0));
        let delta = rand::Rng::random_range(&mut rng, 0.2..PI - 0.2);
        let t = rand::Rng::random_range(&mut rng, 0.0..2.0);
        let z = SectorPoint::from_polar(modulus, delta).unwrap();
        let s = random_hermitian(2, 0.8, &mut rng);
        let g = common::random_complex(2, &mut rng);
        let p = &g * g.adjoint() + identity(2).scale(0.3);
        let m0 = &s * C64::new(1.0, 0.0) + &p * C64::new(0.0, 1.0);

        let fd = (explicit_phi(&z, t + h, &m0).unwrap() - explicit_phi(&z, t - h, &m0).unwrap())
            .scale(0.5 / h);
        let rhs = flow_rhs(&explicit_phi(&z, t, &m0).unwrap(), delta);
        worst_residual = worst_residual.max(opnorm(&(fd - rhs)));

        // stationarity of C(δ) I
        let weyl_point = identity(2) * (C64::new(0.0, 1.0) * z.sqrt_z);
        let stat = explicit_phi(&z, t, &weyl_point).unwrap();
        let c = limit_constant(delta).unwrap();
        worst_fixed = worst_fixed.max(opnorm(&(&stat - &(identity(2) * c))));
        worst_fixed = worst_fixed.max(opnorm(&flow_rhs(&(identity(2) * c), delta)));
    }

    let pass = worst_residual <= 1e-6 && worst_fixed <= 1e-12;
    report(
        9,
        pass,
        &format!(
            "worst flow residual {worst_residual:.3e}, worst stationarity defect {worst_fixed:.3e}, in {:.1}s",
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(
        pass,
        "explicit solution: residual {worst_residual:.3e}, fixed point {worst_fixed:.3e}"
    );
}

/// 10. Sandwich factorization: the backward-propagated factorization of
///     `X' = AX + XA` equals direct integration to 1e-8 on 20 random
///     non-commuting coefficient paths.
#[test]
fn criterion_10_sandwich_factorization() {
    let t0 = Instant::now();
    let mut rng = StdRng::seed_from_u64(1010);
    let ctrl = StepControl::default();
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let m = 2 + trial % 2;
        let a0 = common::random_complex(m, &mut rng);
        let a1 = common::random_complex(m, &mut rng);
        let a2 = common::random_complex(m, &mut rng);
        let a = move |x: f64| &a0 + &a1 * C64::new(x.sin(), 0.2 * x) + &a2 * C64::new(0.3 * x, 0.0);
        let x_end = common::random_complex(m, &mut rng);

        let via_sandwich = sandwich_solve(&a, &x_end, 1.0, 0.0, &ctrl).unwrap();
        let direct = weylkit::ode::integrate(
            |x, y, out| {
                let ax = a(x);
                out.gemm(C64::new(1.0, 0.0), &ax, y, C64::new(0.0, 0.0));
                out.gemm(C64::new(1.0, 0.0), y, &ax, C64::new(1.0, 0.0));
            },
            1.0,
            0.0,
            &x_end,
            &ctrl,
        )
        .unwrap();
        worst = worst.max(opnorm(&(&via_sandwich - &direct)) / (1.0 + opnorm(&direct)));
    }
    let pass = worst <= 1e-8;
    report(
        10,
        pass,
        &format!(
            "worst factorization deviation {worst:.3e} in {:.1}s",
            t0.elapsed().as_secs_f64()
        ),
    );
    assert!(pass, "sandwich factorization: worst {worst:.3e} > 1e-8");
}
