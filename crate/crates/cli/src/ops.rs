use serde_json::{json, Map, Value};
use ulatv::certifier::{
    bias_bound_b, plan_fixed_budget, plan_precision, scaling_study, BoundPoint, Provenance, Route, TvCertifier,
};
use ulatv::coupling::{
    coupling_tail, tv_from_coupling, CouplingParams, DriftField, LangevinDrift, LinearDrift, TailReport,
    DISCRETIZATION_ALLOWANCE,
};
use ulatv::oracle::{
    gaussian_tv, gaussian_ula_marginal, grid_propagate_path, grid_tv, pinsker_rhs, GaussianDist, GridDensity, GridParams,
    TvTarget,
};
use ulatv::potentials::{BuiltinPotential, ClassCertificate, ClassKind, Family, Potential};
use ulatv::sampler::{run_chains, ChainEnsemble, MomentAccumulator};
use ulatv::schedule::StepSchedule;

use crate::config::{log_grid, CoupleDrift, ExperimentConfig, Operation};
use crate::error::CliError;
use crate::explain;
use crate::output::{num, InputSource, Outcome, Table};

pub fn execute(op: Operation, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match op {
        Operation::Plan => plan(cfg),
        Operation::Certify => certify(cfg),
        Operation::Sample => sample(cfg),
        Operation::Couple => couple(cfg),
        Operation::Validate => validate(cfg),
        Operation::Scaling => scaling(cfg),
        Operation::Explain => explain::explain(cfg),
    }
}

pub fn model(cfg: &ExperimentConfig) -> Result<BuiltinPotential<f64>, CliError> {
    let family = cfg.potential.clone().ok_or_else(|| CliError::config("a [potential] section is required"))?;
    Ok(BuiltinPotential::new(family)?)
}

/// The configured certificate, else the first shipped one the predicate accepts.
pub fn certificate(
    cfg: &ExperimentConfig,
    model: &BuiltinPotential<f64>,
    accepts: impl Fn(ClassKind) -> bool,
    purpose: &str,
) -> Result<ClassCertificate<f64>, CliError> {
    if let Some(c) = &cfg.certificate {
        return Ok(c.clone());
    }
    model
        .shipped_certificates()
        .into_iter()
        .find(|c| accepts(c.kind()))
        .ok_or_else(|| CliError::config(format!("{} ships no certificate usable for {purpose}; add a [certificate]", model.label())))
}

pub fn route_certificate(
    cfg: &ExperimentConfig,
    model: &BuiltinPotential<f64>,
    route: &Route<f64>,
) -> Result<ClassCertificate<f64>, CliError> {
    let kind = route.kind();
    certificate(
        cfg,
        model,
        |c| kind.accepts(c) && !(matches!(route, Route::UserSupplied { .. }) && c == ClassKind::PerturbedStronglyConvex),
        &format!("route {kind:?}"),
    )
}

pub fn start(cfg: &ExperimentConfig, model: &dyn Potential<f64>) -> Result<Vec<f64>, CliError> {
    let x = cfg.start.clone().unwrap_or_else(|| model.minimizer().to_vec());
    if x.len() != model.dim() {
        return Err(CliError::config(format!("start has dimension {} but the potential has {}", x.len(), model.dim())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(CliError::config("start must be finite"));
    }
    Ok(x)
}

/// Non-formula inputs carried by a route.
pub fn route_inputs(route: &Route<f64>) -> Vec<InputSource> {
    match route {
        Route::UserSupplied { c_half, upsilon } => vec![
            InputSource { name: "c_half".into(), value: *c_half, provenance: Provenance::User },
            InputSource { name: "upsilon".into(), value: *upsilon, provenance: Provenance::User },
        ],
        Route::Bobkov { variance, provenance } => {
            vec![InputSource { name: "variance".into(), value: *variance, provenance: *provenance }]
        }
        _ => Vec::new(),
    }
}

fn to_json<S: serde::Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("result types serialise")
}

fn curve_table(points: &[BoundPoint<f64>]) -> Table {
    let mut t = Table::new(["p", "n", "split_degenerate", "discretization", "ergodicity", "log_c", "raw_total", "total", "clamped"]);
    for b in points {
        t.push(vec![
            b.p.to_string(),
            b.n.to_string(),
            b.split_degenerate.to_string(),
            num(b.discretization),
            num(b.ergodicity),
            num(b.log_c),
            num(b.raw_total),
            num(b.total),
            b.clamped.to_string(),
        ]);
    }
    t
}

fn plan(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let u = model(cfg)?;
    let route = cfg.route.as_ref().unwrap();
    let cert = route_certificate(cfg, &u, route)?;
    let x = start(cfg, &u)?;
    let sec = cfg.plan.as_ref().unwrap();
    let mut out = Outcome { inputs: route_inputs(route), ..Default::default() };
    if let Some(eps) = sec.epsilon {
        let plan = plan_precision(route, &u, &cert, &x, eps, cfg.gamma_bar)?;
        if plan.p >= 2 {
            let s = StepSchedule::constant(plan.gamma)?;
            let tc = TvCertifier::new(&u, &cert, route, &s, &x, Some(plan.gamma_bar), plan.p)?;
            let curve = tc.curve(&log_grid(2, plan.p, sec.curve_points), ulatv::certifier::SplitChoice::Optimize)?;
            out.curves = Some(curve_table(&curve.points));
        }
        if !plan.certified_ok {
            out.failures.push(format!(
                "re-certified bound {} at (gamma = {}, p = {}) exceeds epsilon = {eps}",
                plan.certified.total, plan.gamma, plan.p
            ));
        }
        out.report.push(format!(
            "plan: gamma = {}, p = {}, horizon T = {}, kappa = {}, certified bound = {} (epsilon = {eps})",
            num(plan.gamma),
            plan.p,
            num(plan.horizon),
            num(plan.kappa),
            num(plan.certified.total)
        ));
        out.result = json!({
            "mode": "precision",
            "certificate": to_json(&cert),
            "start": x,
            "plan": to_json(&plan),
            "c_bar": plan.log_c_bar.exp(),
        });
    } else {
        let p = sec.budget.unwrap();
        let fb = plan_fixed_budget(route, &u, &cert, &x, p, sec.burn_in, cfg.gamma_bar)?;
        out.report.push(format!(
            "fixed budget: p = {p}, n = {}, gamma = {}, closed-form bound = {}, master bound = {}",
            sec.burn_in,
            num(fb.gamma),
            num(fb.bound),
            num(fb.master.total)
        ));
        out.result = json!({
            "mode": "fixed_budget",
            "certificate": to_json(&cert),
            "start": x,
            "budget": p,
            "burn_in": sec.burn_in,
            "plan": to_json(&fb),
            "c_bar": fb.log_c_bar.exp(),
        });
    }
    Ok(out)
}

fn certify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let u = model(cfg)?;
    let route = cfg.route.as_ref().unwrap();
    let cert = route_certificate(cfg, &u, route)?;
    let x = start(cfg, &u)?;
    let schedule = cfg.schedule.clone().unwrap();
    let sec = cfg.certify.as_ref().unwrap();
    let ps = sec.grid().resolve("[certify]")?;
    let tc = TvCertifier::new(&u, &cert, route, &schedule, &x, cfg.gamma_bar, *ps.last().unwrap())?;
    let curve = tc.curve(&ps, sec.split)?;
    let mut out = Outcome { inputs: route_inputs(route), ..Default::default() };
    let mut result = json!({
        "certificate": to_json(&cert),
        "start": x,
        "a_bound": tc.a_bound(),
        "drift": to_json(&tc.drift()),
        "rate": to_json(tc.rate()),
        "curve": to_json(&curve),
    });
    if let Some(cq) = sec.c_quarter {
        let drift = tc.drift().ok_or_else(|| CliError::config("the bias bound needs a route with a discrete drift condition"))?;
        let gamma = schedule.as_constant().ok_or_else(|| CliError::config("the bias bound needs a constant schedule"))?;
        let b = bias_bound_b(&u, &cert, drift, tc.rate(), cq, gamma, 1.0)?;
        out.inputs.push(InputSource { name: "c_quarter".into(), value: cq, provenance: Provenance::User });
        out.report.push(format!("bias bound B(gamma, 1) = {}", num(b.b)));
        result["bias"] = to_json(&b);
    }
    let last = curve.points.last().unwrap();
    out.report.push(format!(
        "certify: {} points, bound at p = {} is {}{}",
        curve.points.len(),
        last.p,
        num(last.total),
        if last.clamped { " (clamped)" } else { "" }
    ));
    out.curves = Some(curve_table(&curve.points));
    out.result = result;
    Ok(out)
}

fn sample(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let u = model(cfg)?;
    let x = start(cfg, &u)?;
    let sec = cfg.sample.as_ref().unwrap();
    let mut record = sec.record_at.clone().unwrap_or_else(|| vec![sec.steps]);
    record.sort_unstable();
    record.dedup();
    let ens = ChainEnsemble::new(&u, cfg.schedule.clone().unwrap(), sec.n_chains, x.clone(), cfg.seed)?;
    let run = run_chains(&ens, sec.steps, &record, sec.lyapunov.as_ref())?;
    let mut table = Table::new(MomentAccumulator::CSV_HEADER);
    let mut moments = Vec::new();
    for acc in &run.moments {
        let row = acc.csv_row();
        let mut obj = Map::new();
        for (k, v) in MomentAccumulator::CSV_HEADER.iter().zip(row) {
            obj.insert(k.to_string(), json!(v));
        }
        moments.push(Value::Object(obj));
        table.push(row.iter().map(|&v| num(v)).collect());
    }
    let n = run.states.len() as f64;
    let mean: Vec<f64> = (0..u.dim()).map(|i| run.states.iter().map(|s| s[i]).sum::<f64>() / n).collect();
    let last = run.moments.last().unwrap().sq_dist();
    let out = Outcome {
        result: json!({
            "n_chains": sec.n_chains,
            "steps": sec.steps,
            "seed": cfg.seed,
            "start": x,
            "schedule": to_json(cfg.schedule.as_ref().unwrap()),
            "final_mean": mean,
            "moments": moments,
        }),
        curves: Some(table),
        report: vec![format!(
            "sample: {} chains, {} steps, E|X - x*|^2 = {} +/- {}",
            sec.n_chains,
            sec.steps,
            num(last.mean),
            num(last.se)
        )],
        ..Default::default()
    };
    Ok(out)
}

fn tail_table(rep: &TailReport) -> Table {
    let mut t = Table::new(["t", "empirical_tail", "se", "analytic_bound"]);
    for r in &rep.rows {
        t.push(vec![num(r.t), num(r.empirical_tail), num(r.se), num(r.analytic_bound)]);
    }
    t
}

fn tail_checks(rep: &TailReport, out: &mut Outcome) {
    for r in &rep.rows {
        if r.empirical_tail > r.analytic_bound + 3.0 * r.se + DISCRETIZATION_ALLOWANCE {
            out.failures.push(format!(
                "P(tau_c > {}) = {} exceeds the bound {} + 3 SE + {DISCRETIZATION_ALLOWANCE}",
                r.t, r.empirical_tail, r.analytic_bound
            ));
        }
    }
    if rep.dt_sensitive {
        out.failures.push(format!(
            "halving dt shifts the tail by {} standard errors (limit 2)",
            rep.max_shift_se.unwrap_or(f64::NAN)
        ));
    }
}

fn couple(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sec = cfg.couple.as_ref().unwrap();
    let x = cfg.start.clone().unwrap();
    let params = CouplingParams {
        dt: sec.dt,
        n_runs: sec.n_runs,
        merge_radius: sec.merge_radius,
        seed: cfg.seed,
        halving_guard: sec.halving_guard,
    };
    let mut out = Outcome::default();
    let tail_only = |b: &dyn DriftField<f64>, out: &mut Outcome| -> Result<(), CliError> {
        let rep = coupling_tail(b, &x, &sec.y, &sec.t, &params)?;
        tail_checks(&rep, out);
        out.curves = Some(tail_table(&rep));
        out.result = json!({ "mode": "tail", "report": to_json(&rep) });
        Ok(())
    };
    match sec.drift {
        CoupleDrift::Linear { rate } => {
            if !(rate >= 0.0) {
                return Err(CliError::config("[couple.drift] the tail bound needs a nonnegative linear rate"));
            }
            tail_only(&LinearDrift { dim: x.len(), rate }, &mut out)?;
        }
        CoupleDrift::Langevin => {
            let u = model(cfg)?;
            if u.dim() != x.len() {
                return Err(CliError::config("[couple] start and y must match the potential's dimension"));
            }
            if sec.theorem {
                let cert = certificate(
                    cfg,
                    &u,
                    |c| matches!(c, ClassKind::StronglyConvexOutsideBall | ClassKind::LogConcave),
                    "the diffusion coupling curve",
                )?;
                let rep = tv_from_coupling(&u, &cert, &x, &sec.y, &sec.t, &params)?;
                let mut t = Table::new([
                    "t",
                    "t_langevin",
                    "empirical_tail",
                    "se",
                    "analytic_bound",
                    "theorem_curve",
                    "theorem_curve_clamped",
                    "pass",
                ]);
                for r in &rep.rows {
                    t.push(vec![
                        num(r.t),
                        num(r.t_langevin),
                        num(r.empirical_tail),
                        num(r.se),
                        num(r.analytic_bound),
                        num(r.theorem_curve),
                        num(r.theorem_curve_clamped),
                        r.pass.to_string(),
                    ]);
                    if !r.pass {
                        out.failures.push(format!(
                            "2 P(tau_c > {}) = {} exceeds the theorem curve {} + 2(3 SE + {DISCRETIZATION_ALLOWANCE})",
                            r.t,
                            2.0 * r.empirical_tail,
                            r.theorem_curve
                        ));
                    }
                }
                tail_checks(&rep.tail, &mut out);
                out.curves = Some(t);
                out.result = json!({ "mode": "theorem", "certificate": to_json(&cert), "report": to_json(&rep) });
            } else {
                tail_only(&LangevinDrift { model: &u }, &mut out)?;
            }
        }
    }
    out.report.push(format!(
        "couple: {} runs at dt = {}, {} time points, {} failures",
        sec.n_runs,
        num(sec.dt),
        sec.t.len(),
        out.failures.len()
    ));
    Ok(out)
}

enum Target {
    Gaussian(GaussianDist<f64>),
    Grid(GridDensity),
}

fn validate(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let u = model(cfg)?;
    if u.dim() != 1 {
        return Err(CliError::config(format!("'validate' runs the 1-D grid oracle; the potential has dimension {}", u.dim())));
    }
    let route = cfg.route.as_ref().unwrap();
    let cert = route_certificate(cfg, &u, route)?;
    let x = start(cfg, &u)?;
    let schedule = cfg.schedule.clone().unwrap();
    let sec = cfg.validate.as_ref().unwrap();
    let ps = sec.grid().resolve("[validate]")?;
    let tc = TvCertifier::new(&u, &cert, route, &schedule, &x, cfg.gamma_bar, *ps.last().unwrap())?;
    let params = GridParams {
        n_points: sec.grid_points,
        bounds: sec.bounds.map(|b| (b[0], b[1])),
        mass_budget: sec.mass_budget,
    };
    let dens = grid_propagate_path(&u, &schedule, x[0], &ps, &params)?;
    let (lo, hi, n_pts) = (dens[0].lo, dens[0].hi, dens[0].len());
    let gaussian = matches!(cfg.potential, Some(Family::IsotropicQuadratic { .. }));
    let target = if gaussian {
        Target::Gaussian(GaussianDist::standard(1)?)
    } else {
        let mut g = GridDensity::from_fn(lo, hi, n_pts, |t| (-u.value(&[t])).exp())?;
        let m = g.mass();
        g.values.iter_mut().for_each(|v| *v /= m);
        Target::Grid(g)
    };
    let constant = schedule.as_constant();
    let mut table =
        Table::new(["p", "n", "bound", "oracle_tv", "oracle_error", "closed_form_tv", "pinsker_rhs", "pass"]);
    let mut out = Outcome::default();
    let mut min_margin = f64::INFINITY;
    let mut rows = Vec::new();
    for (&p, g) in ps.iter().zip(&dens) {
        let b = tc.bound(p, sec.split)?;
        let tv = match &target {
            Target::Gaussian(pi) => grid_tv(g, TvTarget::Gaussian(pi))?,
            Target::Grid(pi) => grid_tv::<f64>(g, TvTarget::Grid(pi))?,
        };
        // the certified bound uses the diameter-2 convention
        let (oracle, err) = (2.0 * tv.tv, 2.0 * tv.error_estimate);
        let (closed, pinsker) = match (gaussian, constant) {
            (true, Some(gamma)) => {
                let m = gaussian_ula_marginal(&x, gamma, p)?;
                let exact = 2.0 * gaussian_tv(&m, &GaussianDist::standard(1)?)?.tv;
                (Some(exact), Some(pinsker_rhs(x[0].abs(), gamma, p, 1)?.rhs))
            }
            _ => (None, None),
        };
        let pass = b.total >= oracle && oracle <= 2.0 && b.total <= 2.0;
        min_margin = min_margin.min(b.total - oracle);
        if !pass {
            out.failures.push(format!("p = {p}: certified bound {} is below the oracle TV {oracle}", b.total));
        }
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        table.push(vec![p.to_string(), b.n.to_string(), num(b.total), num(oracle), num(err), opt(closed), opt(pinsker), pass.to_string()]);
        rows.push(json!({
            "p": p, "n": b.n, "bound": b.total, "raw_bound": b.raw_total, "oracle_tv": oracle,
            "oracle_error": err, "closed_form_tv": closed, "pinsker_rhs": pinsker, "pass": pass,
        }));
    }
    let mut dt = Table::new(
        std::iter::once("x".to_string()).chain(std::iter::once("target".to_string())).chain(ps.iter().map(|p| format!("p_{p}"))),
    );
    for i in 0..n_pts {
        let xi = dens[0].point(i);
        let tgt = match &target {
            Target::Gaussian(pi) => pi.pdf_1d(xi),
            Target::Grid(pi) => pi.values[i],
        };
        let mut row = vec![num(xi), num(tgt)];
        row.extend(dens.iter().map(|g| num(g.values[i])));
        dt.push(row);
    }
    out.report.push(format!(
        "validate: {} points, {} violations, min(bound - oracle) = {}",
        ps.len(),
        out.failures.len(),
        num(min_margin)
    ));
    out.result = json!({
        "certificate": to_json(&cert),
        "start": x,
        "schedule": to_json(&schedule),
        "grid": { "lo": lo, "hi": hi, "n_points": n_pts, "mass_budget": sec.mass_budget,
                  "leaked": dens.iter().map(|g| g.leaked).collect::<Vec<_>>() },
        "target": if gaussian { "exact standard gaussian" } else { "normalised exp(-U) on the grid" },
        "rows": rows,
    });
    out.curves = Some(table);
    out.densities = Some(dt);
    Ok(out)
}

fn scaling(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let route = cfg.route.as_ref().unwrap();
    let sec = cfg.scaling.as_ref().unwrap();
    let rep = scaling_study(route, &sec.family, &sec.d_list, sec.epsilon)?;
    let mut out = Outcome { inputs: route_inputs(route), ..Default::default() };
    let mut t = Table::new(["d", "gamma", "p", "horizon", "certified_bound"]);
    for r in &rep.rows {
        t.push(vec![r.d.to_string(), num(r.gamma), r.p.to_string(), num(r.horizon), num(r.certified_bound)]);
    }
    for (name, band, v) in [("slope_p", sec.slope_p, rep.slope_p), ("slope_gamma", sec.slope_gamma, rep.slope_gamma)] {
        if let Some([lo, hi]) = band {
            if !(v >= lo && v <= hi) {
                out.failures.push(format!("{name} = {v} outside [{lo}, {hi}]"));
            }
        }
    }
    out.report.push(format!("scaling: slope(p) = {:.4}, slope(gamma) = {:.4}", rep.slope_p, rep.slope_gamma));
    out.result = to_json(&rep);
    out.curves = Some(t);
    Ok(out)
}
