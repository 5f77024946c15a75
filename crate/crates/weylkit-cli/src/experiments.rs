//! The eight experiment kinds, each mapping a validated config to result
//! rows plus an overall pass/fail status.

use nalgebra::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use weylkit::asymptotics::{
    green_coeffs, green_diag, locality_experiment, m_coeffs, verify_order, MethodOptions,
    ZSchedule,
};
use weylkit::potential::PotentialModel;
use weylkit::propagate::riccati_flow;
use weylkit::volterra::solve_volterra;
use weylkit::weyl::{disk_membership, limit_m, mirror_m_minus, regular_m, BoundaryData, LimitOptions};
use weylkit::{CMatrix, StepControl};

use crate::config::Config;
use crate::output::Row;
use crate::CliError;

type C64 = Complex<f64>;

pub struct Outcome {
    pub rows: Vec<Row>,
    /// `false` makes the process exit with code 1.
    pub pass: bool,
    /// Human-readable verdict printed to stdout.
    pub summary: String,
}

pub struct Runtime {
    pub pot: PotentialModel,
    pub step: StepControl,
    pub limit: LimitOptions,
    pub volterra_tol: f64,
    pub seed: u64,
}

impl Runtime {
    pub fn from_config(cfg: &Config, seed_override: Option<u64>) -> Result<Runtime, CliError> {
        let pot = cfg.potential.build("potential")?;
        let step = StepControl {
            rtol: cfg.tolerances.rtol,
            atol: cfg.tolerances.atol,
            max_steps: cfg.tolerances.max_steps,
            ..Default::default()
        };
        let mut limit = LimitOptions::default()
            .with_rtol(cfg.tolerances.limit_rtol)
            .with_max_length(cfg.tolerances.max_horizon);
        limit.step = step;
        Ok(Runtime {
            pot,
            step,
            limit,
            volterra_tol: cfg.tolerances.volterra_tol,
            seed: seed_override.or(cfg.experiment.seed).unwrap_or(0),
        })
    }

    fn method_options(&self) -> MethodOptions {
        MethodOptions {
            volterra_tol: self.volterra_tol,
            limit: self.limit,
        }
    }
}

fn flat(m: &CMatrix) -> Vec<C64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect()
}

fn numerical(e: weylkit::Error) -> CliError {
    CliError::numerical(e.to_string())
}

/// `mfun`: the half-line M-matrix over the z-grid and x-list, through the
/// Volterra route for compactly supported potentials and the horizon
/// limit otherwise.
pub fn run_mfun(cfg: &Config, rt: &Runtime) -> Result<Outcome, CliError> {
    let zs = cfg.zs();
    let xs = cfg.xs();
    let jobs: Vec<(f64, C64)> = xs
        .iter()
        .flat_map(|&x| zs.iter().map(move |&z| (x, z)))
        .collect();

    let rows: Vec<Row> = jobs
        .par_iter()
        .map(|&(x, z)| -> Result<Row, CliError> {
            let compact = matches!(rt.pot.support_hint(), Some((_, hi)) if x <= hi);
            if compact {
                let sol = solve_volterra(z, &rt.pot, x, rt.volterra_tol).map_err(numerical)?;
                let m = sol.m_at(x).map_err(numerical)?;
                Ok(Row {
                    experiment: "mfun".into(),
                    method: "volterra".into(),
                    x0: cfg.experiment.x0,
                    x: Some(x),
                    values: flat(&m),
                    iterations: Some(sol.iterations),
                    residual: Some(sol.residual),
                    ..Default::default()
                }
                .with_z(z))
            } else {
                let res = limit_m(z, x, &rt.pot, &rt.limit).map_err(numerical)?;
                Ok(Row {
                    experiment: "mfun".into(),
                    method: "limit".into(),
                    x0: cfg.experiment.x0,
                    x: Some(x),
                    values: flat(&res.m),
                    error_estimate: Some(res.error_estimate),
                    note: if res.limit_circle_suspected() {
                        "limit-circle suspected".into()
                    } else {
                        String::new()
                    },
                    ..Default::default()
                }
                .with_z(z))
            }
        })
        .collect::<Result<_, _>>()?;

    Ok(Outcome {
        summary: format!("mfun: {} rows", rows.len()),
        rows,
        pass: true,
    })
}

/// `asymp`: expansion coefficients at each x plus partial-sum values on
/// the z-grid.
pub fn run_asymp(cfg: &Config, rt: &Runtime) -> Result<Outcome, CliError> {
    let order = cfg.experiment.order.unwrap_or(3);
    let mut rows = Vec::new();
    for &x in &cfg.xs() {
        let series = m_coeffs(&rt.pot, x, order).map_err(numerical)?;
        for (k, coeff) in series.coeffs.iter().enumerate() {
            rows.push(Row {
                experiment: "asymp".into(),
                method: "recursion".into(),
                x0: cfg.experiment.x0,
                x: Some(x),
                k: Some(k + 1),
                values: flat(coeff),
                note: "coefficient of z^{-k/2}".into(),
                ..Default::default()
            });
        }
        for &z in &cfg.zs() {
            let v = series.eval(z).map_err(numerical)?;
            rows.push(
                Row {
                    experiment: "asymp".into(),
                    method: "series_eval".into(),
                    x0: cfg.experiment.x0,
                    x: Some(x),
                    k: Some(order),
                    values: flat(&v),
                    ..Default::default()
                }
                .with_z(z),
            );
        }
    }
    Ok(Outcome {
        summary: format!("asymp: order {order}, {} rows", rows.len()),
        rows,
        pass: true,
    })
}

/// `disk`: random admissible boundary data, their regular M-matrices and
/// membership defects over the configured horizons.
pub fn run_disk(cfg: &Config, rt: &Runtime) -> Result<Outcome, CliError> {
    let spec = cfg.disk.as_ref().expect("validated");
    let m = rt.pot.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(rt.seed);
    let betas: Vec<(String, BoundaryData)> = (0..spec.beta_samples)
        .map(|i| {
            if i % 2 == 0 {
                ("positive".to_string(), BoundaryData::sample_positive(m, &mut rng))
            } else {
                (
                    "selfadjoint".to_string(),
                    BoundaryData::sample_selfadjoint(m, &mut rng),
                )
            }
        })
        .collect();

    let mut worst_defect: f64 = 0.0;
    let mut rows = Vec::new();
    for &z in &cfg.zs() {
        for (class, beta) in &betas {
            for &c in &spec.horizons {
                let mm = regular_m(z, c, cfg.experiment.x0, &rt.pot, beta, &rt.step)
                    .map_err(numerical)?;
                for &h in spec.horizons.iter().filter(|&&h| h <= c) {
                    let defect = disk_membership(&mm, z, h, cfg.experiment.x0, &rt.pot, &rt.step)
                        .map_err(numerical)?;
                    worst_defect = worst_defect.max(defect);
                    rows.push(
                        Row {
                            experiment: "disk".into(),
                            method: format!("beta_{class}"),
                            x0: cfg.experiment.x0,
                            x: Some(h),
                            values: flat(&mm),
                            defect: Some(defect),
                            note: format!("regular M at c={c}, membership horizon {h}"),
                            ..Default::default()
                        }
                        .with_z(z),
                    );
                }
            }
        }
    }
    Ok(Outcome {
        summary: format!(
            "disk: {} samples, worst membership defect {worst_defect:.3e}",
            rows.len()
        ),
        rows,
        pass: true,
    })
}

/// `volterra`: solution diagnostics and M-values through the integral
/// equation.
pub fn run_volterra(cfg: &Config, rt: &Runtime) -> Result<Outcome, CliError> {
    if rt.pot.support_hint().is_none() {
        return Err(CliError::validation(
            "potential: the volterra experiment needs a compactly supported potential \
             (kind truncated or piecewise_constant)",
        ));
    }
    let zs = cfg.zs();
    let xs = cfg.xs();
    let jobs: Vec<(f64, C64)> = xs
        .iter()
        .flat_map(|&x| zs.iter().map(move |&z| (x, z)))
        .collect();
    let rows: Vec<Row> = jobs
        .par_iter()
        .map(|&(x, z)| -> Result<Row, CliError> {
            let sol = solve_volterra(z, &rt.pot, x, rt.volterra_tol).map_err(numerical)?;
            let m = sol.m_at(x).map_err(numerical)?;
            Ok(Row {
                experiment: "volterra".into(),
                method: "volterra".into(),
                x0: cfg.experiment.x0,
                x: Some(x),
                values: flat(&m),
                iterations: Some(sol.iterations),
                residual: Some(sol.residual),
                ..Default::default()
            }
            .with_z(z))
        })
        .collect::<Result<_, _>>()?;
    Ok(Outcome {
        summary: format!("volterra: {} rows", rows.len()),
        rows,
        pass: true,
    })
}

/// `green`: series coefficients and the numerically assembled diagonal
/// Green's matrix.
pub fn run_green(cfg: &Config, rt: &Runtime) -> Result<Outcome, CliError> {
    let order = cfg.experiment.order.unwrap_or(2);
    let mut rows = Vec::new();
    for &x in &cfg.xs() {
        let series = green_coeffs(&rt.pot, x, order).map_err(numerical)?;
        for (k, coeff) in series.coeffs.iter().enumerate() {
            rows.push(Row {
                experiment: "green".into(),
                method: "series".into(),
                x0: cfg.experiment.x0,
                x: Some(x),
                k: Some(k),
                values: flat(coeff),
                note: "coefficient of (i/2) z^{-k-1/2}".into(),
                ..Default::default()
            });
        }
        for &z in &cfg.zs() {
            let plus = limit_m(z, x, &rt.pot, &rt.limit).map_err(numerical)?.m;
            let minus = mirror_m_minus(z, x, &rt.pot, &rt.limit).map_err(numerical)?.m;
            let g = green_diag(&minus, &plus).map_err(numerical)?;
            rows.push(
                Row {
                    experiment: "green".into(),
                    method: "green_diag".into(),
                    x0: cfg.experiment.x0,
                    x: Some(x),
                    values: flat(&g),
                    ..Default::default()
                }
                .with_z(z),
            );
        }
    }
    Ok(Outcome {
        summary: format!("green: order {order}, {} rows", rows.len()),
        rows,
        pass: true,
    })
}

/// `locality`: decay of the M-difference of two potentials agreeing on a
/// window, with the fitted slope against the theoretical rate.
pub fn run_locality(cfg: &Config, rt: &Runtime) -> Result<Outcome, CliError> {
    let window = cfg.locality.as_ref().expect("validated").window;
    let pot_b = cfg
        .potential_b
        .as_ref()
        .expect("validated")
        .build("potential_b")?;
    let zs = cfg.zs();
    let report = locality_experiment(
        &rt.pot,
        &pot_b,
        window[0],
        window[1],
        &zs,
        &rt.method_options(),
    )
    .map_err(|e| match e {
        weylkit::Error::InvalidArgument(msg) => {
            CliError::validation(format!("potential_b: {msg}"))
        }
        other => numerical(other),
    })?;

    let mut rows = Vec::new();
    for (i, &z) in zs.iter().enumerate() {
        rows.push(
            Row {
                experiment: "locality".into(),
                method: "difference".into(),
                x0: window[0],
                x: Some(window[1]),
                values: vec![C64::new(report.differences[i], 0.0)],
                defect: Some(report.normalized[i]),
                note: format!("Im sqrt(z) = {:.6}", report.im_sqrt[i]),
                ..Default::default()
            }
            .with_z(z),
        );
    }
    rows.push(Row {
        experiment: "locality".into(),
        method: "slope_fit".into(),
        x0: window[0],
        x: Some(window[1]),
        values: vec![C64::new(report.slope, 0.0)],
        note: format!(
            "threshold {:.3}; bounded normalization: {}",
            -2.0 * (window[1] - window[0]) * 0.9,
            report.pass_bounded
        ),
        ..Default::default()
    });
    let pass = report.pass_slope && report.pass_bounded;
    Ok(Outcome {
        summary: format!(
            "locality: slope {:.4} (threshold {:.3}), normalized bounded: {} -> {}",
            report.slope,
            -2.0 * (window[1] - window[0]) * 0.9,
            report.pass_bounded,
            if pass { "PASS" } else { "FAIL" }
        ),
        rows,
        pass,
    })
}

/// `verify`: scaled-remainder decay of the order-N partial sum.
pub fn run_verify(cfg: &Config, rt: &Runtime) -> Result<Outcome, CliError> {
    let order = cfg.experiment.order.unwrap_or(2);
    let schedule = ZSchedule {
        moduli: cfg.z_grid.moduli.clone(),
        angles: cfg.z_grid.arg.clone(),
    };
    let report = verify_order(
        &rt.pot,
        cfg.experiment.x0,
        order,
        &schedule,
        &rt.method_options(),
    )
    .map_err(|e| match e {
        weylkit::Error::InvalidArgument(msg) => CliError::validation(format!("z_grid: {msg}")),
        other => numerical(other),
    })?;

    let mut rows = Vec::new();
    for row in &report.rows {
        for (j, (&modulus, &r)) in cfg
            .z_grid
            .moduli
            .iter()
            .zip(row.scaled_remainders.iter())
            .enumerate()
        {
            let z = C64::from_polar(modulus, row.angle);
            rows.push(
                Row {
                    experiment: "verify".into(),
                    method: "scaled_remainder".into(),
                    x0: cfg.experiment.x0,
                    k: Some(order),
                    values: vec![C64::new(r, 0.0)],
                    note: format!("point {j} along arg z = {:.6}", row.angle),
                    ..Default::default()
                }
                .with_z(z),
            );
        }
    }
    Ok(Outcome {
        summary: format!(
            "verify: N = {order}, scaled remainder decreasing over the last three moduli: {}",
            if report.pass { "PASS" } else { "FAIL" }
        ),
        rows,
        pass: report.pass,
    })
}

/// `compare`: the configured computation routes evaluated on the grid
/// with pairwise differences against the threshold.
pub fn run_compare(cfg: &Config, rt: &Runtime) -> Result<Outcome, CliError> {
    let spec = cfg.compare.as_ref().expect("validated");
    if spec.methods.iter().any(|m| m == "volterra") && rt.pot.support_hint().is_none() {
        return Err(CliError::validation(
            "compare.methods: 'volterra' requires a compactly supported potential \
             (no support hint present)",
        ));
    }
    let x0 = cfg.experiment.x0;
    let x_base = spec.x_base.unwrap_or(x0 - 0.5);
    if spec.methods.iter().any(|m| m == "riccati") && !(x_base < x0) {
        return Err(CliError::validation(format!(
            "compare.x_base: {x_base} must lie below x0 = {x0} for the Riccati translation"
        )));
    }

    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &z in &cfg.zs() {
        let mut values: Vec<(String, CMatrix)> = Vec::new();
        for method in &spec.methods {
            let m = match method.as_str() {
                "limit" => limit_m(z, x0, &rt.pot, &rt.limit).map_err(numerical)?.m,
                "volterra" => solve_volterra(z, &rt.pot, x0, rt.volterra_tol)
                    .map_err(numerical)?
                    .m_at(x0)
                    .map_err(numerical)?,
                "riccati" => {
                    let seed = limit_m(z, x_base, &rt.pot, &rt.limit).map_err(numerical)?.m;
                    riccati_flow(z, &seed, &rt.pot, x_base, x0, &rt.step).map_err(numerical)?
                }
                other => unreachable!("validated method {other}"),
            };
            values.push((method.clone(), m));
        }
        let mut pair_max: f64 = 0.0;
        for i in 0..values.len() {
            for j in i + 1..values.len() {
                pair_max =
                    pair_max.max(weylkit::linalg::opnorm(&(&values[i].1 - &values[j].1)));
            }
        }
        worst = worst.max(pair_max);
        for (method, m) in &values {
            rows.push(
                Row {
                    experiment: "compare".into(),
                    method: method.clone(),
                    x0,
                    values: flat(m),
                    defect: Some(pair_max),
                    ..Default::default()
                }
                .with_z(z),
            );
        }
    }
    let pass = worst <= spec.threshold;
    Ok(Outcome {
        summary: format!(
            "compare: worst pairwise difference {worst:.3e} vs threshold {:.1e} -> {}",
            spec.threshold,
            if pass { "PASS" } else { "FAIL" }
        ),
        rows,
        pass,
    })
}
