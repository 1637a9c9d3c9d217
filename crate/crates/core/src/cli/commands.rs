use std::fmt::Write as _;

use rand_distr::{Distribution, Normal};
use serde::Serialize;
use serde_json::{json, Value};

use super::{
    BetaCurveArgs, CliError, Context, ContrastModel, ContrastVsNArgs, FitArgs, FitModel,
    MasterEqArgs, PnArgs, Report, Scheme, SimulateArgs,
};
use crate::composition::{
    beta_total_dipole, beta_total_gaussian_limit, evaluate_curve, kappa_from_counts, kappa_prime,
    DecoherenceParameters,
};
use crate::config::Format;
use crate::fitting::{
    fit_kappa_prime, fit_nbar_sigman, fit_phase_slope, DecoherenceCurve, FitResult, KappaOptions,
    LmOptions, NbarSigmaOptions, HEADER,
};
use crate::master_equation::{
    evolve_pure_decoherence, evolve_stepped, max_deviation, DensityMatrixGrid, DiffusionConstant,
    StepScheme,
};
use crate::montecarlo::{simulate_curve, DetectorAcceptance, MIN_ATOMS};
use crate::output::{fmt9, sig9};
use crate::photon_statistics::{
    poisson_pn, simulate_pn_beam, truncated_gaussian_pn, PhotonNumberDistribution,
};
use crate::physics::{SigmaPlusDipole, K0_LAMBDA};
use crate::rng::stream_rng;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(sig9(x))
    } else {
        Value::Null
    }
}

fn header(command: &str, ctx: &Context, args: &impl Serialize) -> String {
    let args = serde_json::to_string(args).unwrap_or_default();
    format!(
        "# decolab {command}\n# config: {}\n# args: {args}\n",
        ctx.config.to_json_line()
    )
}

fn json_document(
    command: &str,
    ctx: &Context,
    args: &impl Serialize,
    key: &str,
    data: Value,
) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("command".into(), json!(command));
    doc.insert(
        "config".into(),
        serde_json::to_value(&ctx.config).unwrap_or(Value::Null),
    );
    doc.insert(
        "args".into(),
        serde_json::to_value(args).unwrap_or(Value::Null),
    );
    doc.insert(key.into(), data);
    let mut text = serde_json::to_string_pretty(&Value::Object(doc)).unwrap_or_default();
    text.push('\n');
    text
}

fn csv_row(values: &[f64]) -> String {
    let cells: Vec<String> = values.iter().map(|&v| fmt9(v)).collect();
    cells.join(",")
}

fn check_finite(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be finite, got {x}")))
    }
}

fn effective_kappa_d(flag: Option<f64>, ctx: &mut Context) -> Result<f64, CliError> {
    if let Some(k) = flag {
        if !(k > 0.0) {
            return Err(usage(format!("--kappa-d must be positive, got {k}")));
        }
        ctx.config.detector.kappa_d_in_k0 = Some(k);
    }
    Ok(ctx.config.kappa_d())
}

fn distribution(
    pn: &PnArgs,
    ctx: &Context,
    beam_samples: usize,
) -> Result<PhotonNumberDistribution, CliError> {
    if let Some(n_bar) = pn.poisson {
        return Ok(poisson_pn(n_bar)?);
    }
    if let Some(g) = &pn.gaussian {
        return Ok(truncated_gaussian_pn(g[0], g[1])?);
    }
    if pn.single_photon {
        return Ok(PhotonNumberDistribution::fixed(1));
    }
    if let Some(n) = pn.fixed {
        return Ok(PhotonNumberDistribution::fixed(n));
    }
    if pn.beam {
        if beam_samples == 0 {
            return Err(usage("--beam-samples must be positive"));
        }
        let profile = ctx.config.beam_profile()?;
        return Ok(simulate_pn_beam(
            &profile,
            beam_samples,
            ctx.config.simulation.seed,
        )?);
    }
    Err(usage("no photon-number distribution given"))
}

fn grid(dmax: f64, points: usize) -> Result<Vec<f64>, CliError> {
    check_finite("dmax", dmax)?;
    if dmax < 0.0 {
        return Err(usage(format!("--dmax must be non-negative, got {dmax}")));
    }
    match points {
        0 => Err(usage("--points must be at least 1")),
        1 => Ok(vec![0.0]),
        _ => Ok((0..points)
            .map(|i| dmax * i as f64 / (points - 1) as f64)
            .collect()),
    }
}

pub fn beta_curve(ctx: &mut Context, args: &BetaCurveArgs) -> Result<Report, CliError> {
    let ds = grid(args.dmax, args.points)?;
    let kappa_d = effective_kappa_d(args.kappa_d, ctx)?;
    if !(args.noise >= 0.0 && args.noise.is_finite()) {
        return Err(usage(format!(
            "--noise must be non-negative, got {}",
            args.noise
        )));
    }
    if !(args.contrast_err > 0.0 && args.contrast_err.is_finite()) {
        return Err(usage(format!(
            "--contrast-err must be positive, got {}",
            args.contrast_err
        )));
    }
    let pn = distribution(&args.pn, ctx, args.beam_samples)?;
    let curve = if kappa_d.is_finite() || args.gaussian_limit {
        let params = DecoherenceParameters::from_distribution(&pn, kappa_d)?;
        evaluate_curve(&ds, |d| beta_total_gaussian_limit(d, &params))
    } else {
        evaluate_curve(&ds, |d| beta_total_dipole(d, &pn))
    };

    let mut contrast: Vec<f64> = curve.iter().map(|p| p.coherence.contrast()).collect();
    let err = if args.noise > 0.0 {
        let normal = Normal::new(0.0, args.noise).map_err(|e| usage(e.to_string()))?;
        let mut rng = stream_rng(ctx.config.simulation.seed, u64::MAX);
        for c in &mut contrast {
            *c += normal.sample(&mut rng);
        }
        args.noise
    } else {
        args.contrast_err
    };

    let text = match ctx.format {
        Format::Csv => {
            let mut s = header("beta-curve", ctx, args);
            s.push_str(HEADER);
            s.push('\n');
            for (p, &c) in curve.iter().zip(&contrast) {
                let _ = writeln!(s, "{}", csv_row(&[p.d, c, err, p.unwrapped_phase, err]));
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = curve
                .iter()
                .zip(&contrast)
                .map(|(p, &c)| {
                    json!({
                        "d_over_lambda": num(p.d),
                        "contrast": num(c),
                        "contrast_err": num(err),
                        "phase": num(p.unwrapped_phase),
                        "phase_err": num(err),
                        "re": num(p.coherence.re()),
                        "im": num(p.coherence.im()),
                    })
                })
                .collect();
            json_document("beta-curve", ctx, args, "results", Value::Array(rows))
        }
    };
    Ok(Report {
        text,
        converged: true,
    })
}

pub fn contrast_vs_n(ctx: &mut Context, args: &ContrastVsNArgs) -> Result<Report, CliError> {
    if args.d.is_empty() {
        return Err(usage("--d needs at least one separation"));
    }
    for &d in &args.d {
        check_finite("d", d)?;
    }
    let kappa_d = effective_kappa_d(args.kappa_d, ctx)?;
    if args.model == ContrastModel::Exact && (kappa_d.is_finite() || args.sigma_n.is_some()) {
        return Err(usage(
            "--model exact uses Poisson statistics without a detector restriction",
        ));
    }
    if !(args.nbar_max >= 0.0 && args.nbar_max.is_finite()) {
        return Err(usage(format!(
            "--nbar-max must be non-negative, got {}",
            args.nbar_max
        )));
    }
    if let Some(s) = args.sigma_n {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(usage(format!("--sigma-n must be non-negative, got {s}")));
        }
    }
    let nbars = grid(args.nbar_max, args.points)?;

    let mut rows = Vec::with_capacity(args.d.len() * nbars.len());
    for &d in &args.d {
        for &n_bar in &nbars {
            let sigma_n = args.sigma_n.unwrap_or_else(|| n_bar.sqrt());
            let kappa = kappa_from_counts(n_bar, sigma_n);
            let kp = kappa_prime(kappa, kappa_d)?;
            let contrast = match args.model {
                ContrastModel::GaussianLimit => {
                    let x = kp * K0_LAMBDA * d;
                    (-0.5 * x * x).exp()
                }
                ContrastModel::Exact => beta_total_dipole(d, &poisson_pn(n_bar)?).contrast(),
            };
            rows.push([d, n_bar, kappa, kp, contrast]);
        }
    }

    let text = match ctx.format {
        Format::Csv => {
            let mut s = header("contrast-vs-n", ctx, args);
            s.push_str("d_over_lambda,n_bar,kappa,kappa_prime,contrast\n");
            for r in &rows {
                let _ = writeln!(s, "{}", csv_row(r));
            }
            s
        }
        Format::Json => {
            let data: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "d_over_lambda": num(r[0]),
                        "n_bar": num(r[1]),
                        "kappa": num(r[2]),
                        "kappa_prime": num(r[3]),
                        "contrast": num(r[4]),
                    })
                })
                .collect();
            json_document("contrast-vs-n", ctx, args, "results", Value::Array(data))
        }
    };
    Ok(Report {
        text,
        converged: true,
    })
}

pub fn simulate(ctx: &mut Context, args: &SimulateArgs) -> Result<Report, CliError> {
    let ds = match &args.d {
        Some(ds) if ds.is_empty() => return Err(usage("--d needs at least one separation")),
        Some(ds) => {
            for &d in ds {
                check_finite("d", d)?;
            }
            ds.clone()
        }
        None => grid(args.dmax, args.points)?,
    };
    if let Some(n) = args.atoms {
        if n < MIN_ATOMS {
            return Err(usage(format!(
                "--atoms must be at least {MIN_ATOMS}, got {n}"
            )));
        }
        ctx.config.simulation.n_atoms = n;
    }
    let kappa_d = effective_kappa_d(args.kappa_d, ctx)?;
    let pn = distribution(&args.pn, ctx, args.beam_samples)?;
    let acceptance = if kappa_d.is_finite() {
        Some(DetectorAcceptance::centered_on(&pn, kappa_d)?)
    } else {
        None
    };
    let n_atoms = ctx.config.simulation.n_atoms;
    let seed = ctx.config.simulation.seed;
    let results = simulate_curve(&ds, &pn, &SigmaPlusDipole, acceptance, n_atoms, seed)?;

    let text = match ctx.format {
        Format::Csv => {
            let mut s = header("simulate", ctx, args);
            s.push_str("d_over_lambda,re,im,abs,stderr,acceptance_fraction,n_atoms,seed\n");
            for (&d, r) in ds.iter().zip(&results) {
                let c = r.mean_coherence;
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    csv_row(&[
                        d,
                        c.re(),
                        c.im(),
                        c.contrast(),
                        r.stderr,
                        r.acceptance_fraction
                    ]),
                    r.n_atoms,
                    seed
                );
            }
            s
        }
        Format::Json => {
            let data: Vec<Value> = ds
                .iter()
                .zip(&results)
                .map(|(&d, r)| {
                    let c = r.mean_coherence;
                    json!({
                        "d_over_lambda": num(d),
                        "re": num(c.re()),
                        "im": num(c.im()),
                        "abs": num(c.contrast()),
                        "stderr": num(r.stderr),
                        "acceptance_fraction": num(r.acceptance_fraction),
                        "n_atoms": r.n_atoms,
                        "seed": seed,
                    })
                })
                .collect();
            json_document("simulate", ctx, args, "results", Value::Array(data))
        }
    };
    Ok(Report {
        text,
        converged: true,
    })
}

fn fit_report_json(fit: &FitResult) -> Value {
    let params: Vec<Value> = fit
        .names
        .iter()
        .zip(&fit.values)
        .enumerate()
        .map(|(i, (name, &v))| {
            json!({
                "name": name,
                "value": num(v),
                "stderr": num(fit.covariance[i][i].max(0.0).sqrt()),
            })
        })
        .collect();
    let cov: Vec<Vec<Value>> = fit
        .covariance
        .iter()
        .map(|row| row.iter().map(|&c| num(c)).collect())
        .collect();
    json!({
        "model": fit.model,
        "parameters": params,
        "covariance": cov,
        "chi2_per_dof": num(fit.chi2_per_dof),
        "converged": fit.converged,
        "at_boundary": fit.at_boundary,
        "iterations": fit.iterations,
        "n_points": fit.n_points,
    })
}

pub fn fit(ctx: &mut Context, args: &FitArgs) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(&args.file)
        .map_err(|e| usage(format!("{}: {e}", args.file.display())))?;
    let curve = DecoherenceCurve::parse_csv(&text)?;
    let lm = LmOptions {
        max_iterations: args.max_iter,
        ..LmOptions::default()
    };
    let result = match args.model {
        FitModel::Decoherence => {
            let initial = match (args.nbar0, args.sigma0) {
                (Some(n), Some(s)) => Some((n, s)),
                (Some(n), None) => Some((n, n.max(1e-3).sqrt())),
                (None, Some(_)) => return Err(usage("--sigma0 requires --nbar0")),
                (None, None) => None,
            };
            fit_nbar_sigman(&curve, &NbarSigmaOptions { initial, lm })?
        }
        FitModel::Gaussian => fit_kappa_prime(
            &curve,
            &KappaOptions {
                free_amplitude: args.free_amplitude,
                initial: args.kappa0,
                lm,
            },
        )?,
        FitModel::Phase => fit_phase_slope(&curve)?,
    };
    let text = match ctx.format {
        Format::Json => json_document("fit", ctx, args, "fit", fit_report_json(&result)),
        Format::Csv => {
            let mut s = header("fit", ctx, args);
            let _ = writeln!(
                s,
                "# model: {} converged: {} at_boundary: {} chi2_per_dof: {} iterations: {} n_points: {}",
                result.model,
                result.converged,
                result.at_boundary,
                fmt9(result.chi2_per_dof),
                result.iterations,
                result.n_points
            );
            s.push_str("name,value,stderr\n");
            for (i, (name, &v)) in result.names.iter().zip(&result.values).enumerate() {
                let _ = writeln!(
                    s,
                    "{name},{},{}",
                    fmt9(v),
                    fmt9(result.covariance[i][i].max(0.0).sqrt())
                );
            }
            s
        }
    };
    Ok(Report {
        text,
        converged: result.converged,
    })
}

pub fn master_eq(ctx: &mut Context, args: &MasterEqArgs) -> Result<Report, CliError> {
    if args.points < 2 {
        return Err(usage(format!(
            "--points must be at least 2, got {}",
            args.points
        )));
    }
    let points = usize::try_from(args.points).map_err(|e| usage(e.to_string()))?;
    let diffusion = DiffusionConstant::new(args.diffusion)?;
    let rho0 = DensityMatrixGrid::two_peak(points, args.extent, args.separation, args.width)?;
    let scheme = match args.scheme {
        Scheme::Exponential => StepScheme::Exponential,
        Scheme::Rk4 => StepScheme::RungeKutta4,
    };
    let stepped = evolve_stepped(&rho0, diffusion, args.time, args.steps, scheme)?;
    let analytic = evolve_pure_decoherence(&rho0, diffusion, args.time)?;
    let deviation = max_deviation(&stepped, &analytic);

    let i = rho0.nearest_index(0.5 * args.separation);
    let j = rho0.nearest_index(-0.5 * args.separation);
    let x = rho0.positions();
    let initial_peak = rho0.values()[(i, j)].norm();
    let peak_decay = if initial_peak > 0.0 {
        stepped.values()[(i, j)].norm() / initial_peak
    } else {
        f64::NAN
    };
    let grid_separation = x[i] - x[j];
    let expected = (-diffusion.rate(args.separation) * args.time).exp();
    let change = max_deviation(&stepped, &rho0);

    let abs_rows = |m: &DensityMatrixGrid| -> Vec<Vec<f64>> {
        let v = m.values();
        (0..v.nrows())
            .map(|r| (0..v.ncols()).map(|c| v[(r, c)].norm()).collect())
            .collect()
    };
    let summary = [
        deviation,
        peak_decay,
        expected,
        grid_separation,
        change,
        stepped.trace(),
    ];
    let summary_names =
        "max_deviation,peak_decay,expected_peak_decay,grid_separation,max_change,trace";

    let text = match ctx.format {
        Format::Csv => {
            let mut s = header("master-eq", ctx, args);
            let _ = writeln!(s, "# positions\n{}", csv_row(x));
            s.push_str("# initial |rho|\n");
            for row in abs_rows(&rho0) {
                let _ = writeln!(s, "{}", csv_row(&row));
            }
            s.push_str("# final |rho|\n");
            for row in abs_rows(&stepped) {
                let _ = writeln!(s, "{}", csv_row(&row));
            }
            let _ = writeln!(s, "# summary\n{summary_names}\n{}", csv_row(&summary));
            s
        }
        Format::Json => {
            let to_json = |rows: Vec<Vec<f64>>| -> Value {
                Value::Array(
                    rows.into_iter()
                        .map(|r| Value::Array(r.into_iter().map(num).collect()))
                        .collect(),
                )
            };
            let mut fields = serde_json::Map::new();
            for (name, &v) in summary_names.split(',').zip(&summary) {
                fields.insert(name.into(), num(v));
            }
            let data = json!({
                "positions": x.iter().map(|&p| num(p)).collect::<Vec<_>>(),
                "initial_abs": to_json(abs_rows(&rho0)),
                "final_abs": to_json(abs_rows(&stepped)),
                "summary": Value::Object(fields),
            });
            json_document("master-eq", ctx, args, "results", data)
        }
    };
    Ok(Report {
        text,
        converged: true,
    })
}
