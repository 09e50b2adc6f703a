use serde::Serialize;
use serde_json::json;
use ulatv::certifier::{euler_drift, ergodicity_rate, plan_precision, OmegaExponent, RateAux, Route, TvCertifier};
use ulatv::potentials::{ClassCertificate, Potential};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::ops::{model, route_certificate, route_inputs, start};
use crate::output::{num, Outcome};

#[derive(Clone, Debug, Serialize)]
struct Item {
    stage: &'static str,
    name: String,
    value: f64,
    formula: String,
}

struct Chain(Vec<Item>);

impl Chain {
    fn add(&mut self, stage: &'static str, name: &str, value: f64, formula: &str) {
        self.0.push(Item { stage, name: name.into(), value, formula: formula.into() });
    }
}

/// Formulas for `ln λ`, `ln c`, the radius and `V`.
fn drift_formulas(cert: &ClassCertificate<f64>) -> [&'static str; 4] {
    match cert {
        ClassCertificate::Superexponential { .. } => [
            "ln λ = −dL / (2(1 − Lγ̄)), requires γ̄ < 1/L",
            "ln c = ln(−2 ln λ) − γ̄ ln λ + LK²/4",
            "K = max(M_ρ, (−8 ln λ / ρ²)^{1/(2(α−1))})",
            "V = exp(U/2)",
        ],
        ClassCertificate::LogConcave { .. } => [
            "ln λ = −η²(√2 − 1)/16, requires γ̄ ≤ 1/L",
            "ln c = ln((η/4)(d + ηγ̄/4) − ln λ) + η√(R_c² + 1)/4 + (ηγ̄/4)(d + ηγ̄/4)",
            "R_c = max(1, 2d/η, M_η)",
            "V = exp((η/4)√(‖x − x⋆‖² + 1))",
        ],
        ClassCertificate::StronglyConvexOutsideBall { .. } => [
            "ln λ = −2m + γ̄L², requires γ̄ < 2m/L²",
            "ln c = ln(2(d + m M_s²))",
            "radius = max(1, M_s, √(d/m))",
            "V = ‖x − x⋆‖²",
        ],
        ClassCertificate::PerturbedStronglyConvex { .. } => ["", "", "", ""],
    }
}

/// Adds the route intermediates and returns the formula for `ln κ`.
fn rate_items(chain: &mut Chain, aux: &RateAux<f64>) -> &'static str {
    let s = "rate";
    match aux {
        RateAux::UserSupplied { c_half, upsilon } => {
            chain.add(s, "C_1/2", *c_half, "user supplied");
            chain.add(s, "upsilon", *upsilon, "user supplied");
            "ln κ = −υ"
        }
        RateAux::Poincare { theta, log_beta, k, osc } => {
            chain.add(s, "theta", *theta, "θ = dL/2");
            chain.add(s, "K", *k, "K = max(M_ρ, (4dL/ρ)^{1/(2(α−1))})");
            chain.add(s, "ln beta", *log_beta, "ln β = ln(dL/2) + LK²/4");
            chain.add(s, "osc", *osc, "oscillation of U on the ball of radius K, bounded by LK²/2");
            "ln κ = −θ / (1 + 4βK² e^{osc} / π²)"
        }
        RateAux::Bobkov { variance, .. } => {
            chain.add(s, "variance", *variance, "∫‖x − E_π x‖² dπ, supplied with its provenance");
            "ln κ = −1 / (432 · variance)"
        }
        RateAux::ReflectionConvex { theta, log_beta, k, log_varpi, delta, r, omega, omega_term, omega_exponent } => {
            chain.add(s, "theta", *theta, "θ = η²/8");
            chain.add(s, "K", *k, "K = max(1, M_η, 4d/η)");
            chain.add(s, "ln beta", *log_beta, "ln β = ln((η/4)((η/4)K + d)) + max(0, η√(K²+1)/4 − ln √(K²+1))");
            chain.add(s, "delta", *delta, "δ = 2β/θ");
            chain.add(s, "R", *r, "R = (8/η)(ln 4 + ln β − ln θ)");
            chain.add(s, "omega", *omega, "ω = R² / (2Φ⁻¹(3/4))²");
            let term = match omega_exponent {
                OmegaExponent::Statement => "θω/4",
                OmegaExponent::Proof => "4ω/θ",
            };
            chain.add(s, "omega term", *omega_term, term);
            chain.add(s, "ln varpi", *log_varpi, &format!("ln ϖ = −ln 2 · (θ/4) / (ln(β/θ) + ln(3 + 4e^{{{term}}}) + ln 2)"));
            "ln κ = max(−θ/4, ln ϖ)"
        }
        RateAux::StrongConvex { m, m_s, m_tilde, omega } => {
            chain.add(s, "m", *m, "strong convexity modulus outside the ball");
            chain.add(s, "M_s", *m_s, "radius of the ball");
            chain.add(s, "M~", *m_tilde, "M̃ = max(1, M_s)");
            chain.add(s, "omega", *omega, "ω = M̃² / (2Φ⁻¹(3/4))²");
            "ln κ = −(m/2) ln 2 / (ln(1 + e^{mω/4}) + ln(1 + M̃) + ln 2)"
        }
        RateAux::LogSobolev { m, l1, varpi, osc_u2, c_ls } => {
            chain.add(s, "m", *m, "strong convexity of U₁");
            chain.add(s, "L1", *l1, "gradient Lipschitz constant of U₁");
            chain.add(s, "varpi", *varpi, "ϖ = 2mL₁/(m + L₁)");
            chain.add(s, "osc U2", *osc_u2, "oscillation of the bounded perturbation");
            chain.add(s, "C_LS", *c_ls, "C_LS = e^{osc U₂}/m");
            "ln κ = −m e^{−osc U₂}"
        }
        RateAux::GenericSde { theta_tilde, log_k, epsilon, delta, r, omega } => {
            chain.add(s, "epsilon", *epsilon, "coupling level ε");
            chain.add(s, "delta", *delta, "drift excess δ");
            chain.add(s, "R", *r, "radius of the small set");
            chain.add(s, "omega", *omega, "ω = R² / (2Φ⁻¹(1 − ε/2))²");
            chain.add(s, "theta~", *theta_tilde, "θ̃ = θ²δ / (2β + θδ)");
            chain.add(s, "ln K", *log_k, "K = (β/θ̃)(1 + e^{θ̃ω}) + δ/2");
            "ln κ = (θ̃/2) ln(1 − ε) / (ln K − ln(1 − ε))"
        }
        RateAux::GenericSdeStrong { m_tilde, big_m, log_d, epsilon, omega } => {
            chain.add(s, "epsilon", *epsilon, "coupling level ε");
            chain.add(s, "m~", *m_tilde, "contraction modulus of the drift");
            chain.add(s, "M", *big_m, "M = max(1, M_s)");
            chain.add(s, "omega", *omega, "ω = M² / (2Φ⁻¹(1 − ε/2))²");
            chain.add(s, "ln D", *log_d, "D = (1 + e^{m̃ω/2})(1 + M)");
            "ln κ = (m̃/2) ln(1 − ε) / (ln D − ln(1 − ε))"
        }
    }
}

fn a_formula(cert: &ClassCertificate<f64>) -> &'static str {
    match cert {
        ClassCertificate::Superexponential { .. } => {
            "A = L² ((α+1)/ρ · (a_α + 4(2−α)(α+1)/(αρ) + 2 ln G(λ,c,γ₁,V(x))))^{2/α}, a_α = ρM_ρ^α/(α+1) + M_ρ²L/2"
        }
        ClassCertificate::LogConcave { .. } => "A = L² (4/η · (1 + ln G(λ,c,γ₁,V(x))))²",
        ClassCertificate::StronglyConvexOutsideBall { .. } => "A = L² G(λ,c,γ₁,V(x)), G = w + c/(−λ^γ ln λ)",
        ClassCertificate::PerturbedStronglyConvex { .. } => {
            "A = 2L₁²(‖x₁⋆ − x⋆‖² + (2/ϖ)(2d + (γ₁ + 2/ϖ) sup‖∇U₂‖²)) + 2 sup‖∇U₂‖²"
        }
    }
}

pub fn explain(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let u = model(cfg)?;
    let route = cfg.route.as_ref().unwrap();
    let cert = route_certificate(cfg, &u, route)?;
    let x = start(cfg, &u)?;
    let mut chain = Chain(Vec::new());
    let d = u.dim() as f64;
    chain.add("model", "d", d, "dimension");
    chain.add("model", "L", u.lipschitz(), "gradient Lipschitz constant of U");
    chain.add("model", "U(x)", u.value(&x), "potential at the start, normalised so that U(x⋆) = 0");
    let plan = match cfg.plan.as_ref().and_then(|p| p.epsilon) {
        Some(eps) => Some(plan_precision(route, &u, &cert, &x, eps, cfg.gamma_bar)?),
        None => None,
    };
    let gamma_bar = cfg
        .gamma_bar
        .or_else(|| cfg.schedule.as_ref().map(|s| s.gamma1()))
        .or_else(|| plan.as_ref().map(|p| p.gamma_bar));
    let needs_drift = !matches!(cert, ClassCertificate::PerturbedStronglyConvex { .. }) && !matches!(route, Route::GenericSde { .. });
    if needs_drift {
        let gb = gamma_bar.ok_or_else(|| CliError::config("'explain' needs gamma_bar or a [schedule] to evaluate the drift constants"))?;
        let dc = euler_drift(&u, &cert, gb)?;
        let [f_lambda, f_c, f_radius, f_v] = drift_formulas(&cert);
        chain.add("drift", "gamma_bar", gb, "largest step the drift condition R_γV ≤ λ^γ V + γc covers");
        chain.add("drift", "ln lambda", dc.log_lambda, f_lambda);
        chain.add("drift", "ln c", dc.log_c, f_c);
        chain.add("drift", "radius", dc.radius, f_radius);
        chain.add("drift", "ln V(x)", dc.lyapunov.log_value(&u, &x)?, f_v);
    }
    let rate = ergodicity_rate(route, &u, &cert)?;
    let f_kappa = rate_items(&mut chain, &rate.aux);
    chain.add("rate", "ln kappa", rate.log_kappa, f_kappa);
    if let Some(schedule) = &cfg.schedule {
        let tc = TvCertifier::new(&u, &cert, route, schedule, &x, cfg.gamma_bar, 1)?;
        chain.add("bound", "A", tc.a_bound(), a_formula(&cert));
        chain.add(
            "bound",
            "",
            f64::NAN,
            "bound(p, n) = (L/√2)·√(A/3 · Σ_{k=n+1}^p γ_k³ + d · Σ_{k=n+1}^p γ_k²) + C(δ_x Q^n) κ^{Γ_{n+1,p}}, clamped at 2",
        );
    }
    if let Some(plan) = &plan {
        chain.add("plan", "A bar", plan.a_bar, "A evaluated at γ̄, valid for every γ ≤ γ̄");
        chain.add("plan", "ln C bar", plan.log_c_bar, "n-uniform bound on ln C(δ_x Q^n) at γ̄");
        let t_formula = if matches!(route, Route::ReflectionConvex { .. }) {
            "T = max((4/θ)(ln(8/ε) + ln Λ̃), ln(16/ε)/(−ln ϖ))"
        } else {
            "T = ln(2C̄/ε)/(−ln κ), the Γ-time for the ergodicity term to reach ε/2"
        };
        chain.add("plan", "T", plan.horizon, t_formula);
        chain.add("plan", "gamma", plan.gamma, "min(γ̄, positive root of (Ā/3)γ² + dγ = ε²/(2L²T))");
        chain.add("plan", "p", plan.p as f64, "⌊T/γ⌋ + 1");
        chain.add("plan", "certified bound", plan.certified.total, "the master bound re-evaluated at (γ, p)");
    }
    let mut report = Vec::new();
    let mut stage = "";
    for it in &chain.0 {
        if it.stage != stage {
            stage = it.stage;
            report.push(format!("[{stage}]"));
        }
        let value = if it.name.is_empty() { String::new() } else { format!("{} = {}", it.name, num(it.value)) };
        report.push(match (value.is_empty(), it.formula.is_empty()) {
            (true, _) => format!("  {}", it.formula),
            (false, true) => format!("  {value}"),
            (false, false) => format!("  {value:<32} {}", it.formula),
        });
    }
    Ok(Outcome {
        result: json!({ "certificate": cert, "route": route, "start": x, "chain": chain.0 }),
        inputs: route_inputs(route),
        report,
        ..Default::default()
    })
}
