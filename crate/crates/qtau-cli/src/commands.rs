//! The subcommands, generic over the float scalar.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use num_rational::BigRational;
use qtau::blocks::{braiding_identity_suite, braiding_property_report, degenerate_block_report, reduction_suite, BraidParams};
use qtau::nekrasov::lemma_suite;
use qtau::qpvi::{bilinear_reports, orbit_comparison, qpvi_reports};
use qtau::riemann::riemann_reports;
use qtau::tau::{tau_family, tau_ratio_family, Tau, ThetaParams};
use qtau::{Analytic, QContext, Report, Sign};
use serde_json::{json, Value};

use crate::config::Resolved;
use crate::{CliError, Outcome};

fn parse<S: Analytic>(s: &str) -> Result<S, CliError> {
    Ok(S::parse(s)?)
}

fn context<S: Analytic>(r: &Resolved) -> Result<QContext<S>, CliError> {
    Ok(QContext::with_orders(parse(&r.q)?, r.cutoff, r.weight_cap, r.window)?)
}

fn thetas<S: Analytic>(r: &Resolved) -> Result<ThetaParams<S>, CliError> {
    let t = &r.thetas;
    Ok(ThetaParams::parse([&t[0], &t[1], &t[2], &t[3], &t[4], &t[5]])?)
}

fn dec<S: Analytic>(x: &S) -> Value {
    let (re, im) = x.to_decimal();
    json!({ "re": re, "im": im })
}

fn settings(r: &Resolved) -> Value {
    json!({
        "bits": r.bits,
        "q": r.q,
        "t": r.t,
        "theta0": r.thetas[0],
        "theta_t": r.thetas[1],
        "theta1": r.thetas[2],
        "theta_inf": r.thetas[3],
        "sigma": r.thetas[4],
        "s": r.thetas[5],
        "K": r.weight_cap,
        "N": r.window,
        "P": r.cutoff,
    })
}

fn report_doc(command: &str, reps: &[Report], extra: Value) -> Result<Outcome, CliError> {
    let pass = !reps.is_empty() && reps.iter().all(|r| r.pass);
    let mut doc = json!({ "command": command, "pass": pass, "reports": reps });
    if let (Value::Object(d), Value::Object(e)) = (&mut doc, extra) {
        d.extend(e);
    }
    Ok(Outcome { body: to_json(&doc)?, pass })
}

fn to_json(v: &Value) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Args, Debug)]
pub struct LemmaArgs {
    /// Largest partition size |λ|, |μ|
    #[arg(long, default_value_t = 5)]
    pub weight_cap: usize,
    /// Largest n in the reduction identities
    #[arg(long, default_value_t = 6)]
    pub max_n: usize,
    /// Rational sample point `q:u:w`, repeatable
    #[arg(long = "point", default_values_t = ["2/7:3/5:5/3".to_string(), "3/11:-4/9:7/2".to_string()])]
    pub points: Vec<String>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn rational_point(s: &str) -> Result<[BigRational; 3], CliError> {
    let v: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Usage(format!("point {s:?} is not q:u:w with rational entries"));
    if v.len() != 3 {
        return Err(bad());
    }
    let p = |x: &str| BigRational::from_str(x.trim()).map_err(|_| bad());
    Ok([p(v[0])?, p(v[1])?, p(v[2])?])
}

pub fn check_lemmas(a: &LemmaArgs) -> Result<Outcome, CliError> {
    let mut reps = Vec::new();
    for s in &a.points {
        let [q, u, w] = rational_point(s)?;
        if q == BigRational::from_integer(0.into()) || q == BigRational::from_integer(1.into()) {
            return Err(CliError::Usage(format!("point {s:?}: q must differ from 0 and 1")));
        }
        reps.extend(lemma_suite(a.weight_cap, a.max_n, &q, &u, &w).into_iter().map(|r| r.param("point", s)));
    }
    report_doc("check-lemmas", &reps, json!({}))
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EpsPrime {
    Plus,
    Minus,
    Both,
}

#[derive(Args, Debug)]
pub struct BraidArgs {
    /// Largest total weight of the partition quadruples; 0 checks the vacuum connection formula only
    #[arg(long, default_value_t = 3)]
    pub max_weight: usize,
    #[arg(long, value_enum, default_value_t = EpsPrime::Both)]
    pub eps_prime: EpsPrime,
    /// Braiding relation point `q:theta_inf:theta1:sigma`, repeatable; x1 = 1, x2 = q^{(1-2θ1)/2}
    #[arg(long = "point", default_values_t = ["0.01:0.291:0.223:0.317".to_string(), "0.005:0.241:0.261:0.389".to_string()])]
    pub points: Vec<String>,
    /// Random points for the braiding matrix properties
    #[arg(long, default_value_t = 50)]
    pub property_points: usize,
    #[arg(long, default_value_t = 11)]
    pub seed: u64,
}

fn braid_point<S: Analytic>(s: &str, r: &Resolved) -> Result<(QContext<S>, BraidParams<S>), CliError> {
    let v: Vec<&str> = s.split(':').collect();
    if v.len() != 4 {
        return Err(CliError::Usage(format!("point {s:?} is not q:theta_inf:theta1:sigma")));
    }
    let ctx = QContext::with_orders(parse(v[0])?, r.cutoff, r.weight_cap, r.window)?;
    let theta1: S = parse(v[2])?;
    let x2 = ctx.qpow(&((S::one() - S::from_i64(2) * &theta1) * S::half()));
    let p = BraidParams { theta_inf: parse(v[1])?, theta1, sigma: parse(v[3])?, x1: S::one(), x2 };
    Ok((ctx, p))
}

pub fn check_braiding<S: Analytic>(r: &Resolved, a: &BraidArgs) -> Result<Outcome, CliError> {
    let ctx = context::<S>(r)?;
    let th = thetas::<S>(r)?;
    let mut reps = vec![braiding_property_report(a.property_points, a.seed, &ctx)?];
    let x = |s: &str| parse::<S>(s);
    reps.push(degenerate_block_report(
        &th.theta_inf,
        &th.theta1,
        &th.theta0,
        (&x("2.0")?, &x("0.4")?),
        (&x("0.25")?, &x("1.25")?),
        &ctx,
    )?);
    let pts = a.points.iter().map(|s| braid_point::<S>(s, r)).collect::<Result<Vec<_>, _>>()?;
    let signs: &[Sign] = match a.eps_prime {
        EpsPrime::Plus => &[Sign::Plus],
        EpsPrime::Minus => &[Sign::Minus],
        EpsPrime::Both => &Sign::BOTH,
    };
    let k_eta = r.k_eta.unwrap_or(12);
    reps.push(braiding_identity_suite(signs, a.max_weight, &pts, k_eta, r.tol));
    if a.max_weight > 0 {
        reps.push(reduction_suite(a.max_weight, a.max_weight.min(2), &pts, k_eta, r.tol));
    }
    report_doc("check-braiding", &reps, json!({}))
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
pub enum Family {
    /// The eight shifted tau functions τ1..τ8
    Eight,
    /// The four tau functions of the y, z, w formulas (unshifted θ∞)
    Four,
}

#[derive(Args, Debug)]
pub struct TauArgs {
    #[arg(long, value_enum, default_value_t = Family::Eight)]
    pub family: Family,
    /// Geometric grid `t0,ratio,count`; emits CSV instead of JSON
    #[arg(long)]
    pub grid: Option<String>,
    /// Relative tail above which a value carries a warning
    #[arg(long, default_value_t = 1e-8)]
    pub warn_tail: f64,
}

fn family_taus<S: Analytic>(r: &Resolved, a: &TauArgs, ctx: &QContext<S>) -> Result<Vec<Tau<S>>, CliError> {
    let base = thetas::<S>(r)?;
    Ok(match a.family {
        Family::Eight => tau_family(&base, ctx)?.taus,
        Family::Four => tau_ratio_family(&base, ctx)?.taus,
    })
}

pub fn eval_tau<S: Analytic>(r: &Resolved, a: &TauArgs) -> Result<Outcome, CliError> {
    let ctx = context::<S>(r)?;
    let taus = family_taus(r, a, &ctx)?;
    if let Some(g) = &a.grid {
        return tau_grid(g, &taus);
    }
    let t: S = parse(&r.t)?;
    let pts = [("t", t.clone()), ("qt", t.clone() * &ctx.q), ("t/q", t / &ctx.q)];
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for (label, tv) in &pts {
        let mut vals = Vec::new();
        for (i, tau) in taus.iter().enumerate() {
            let v = tau.eval(tv)?;
            if !v.converged(a.warn_tail) {
                warnings.push(format!(
                    "tau{} at {label}: boundary {:.3e}, truncation {:.3e} above {:.1e}",
                    i + 1,
                    v.boundary,
                    v.truncation,
                    a.warn_tail
                ));
            }
            vals.push(json!({
                "index": i + 1,
                "value": dec(&v.value),
                "boundary": format!("{:.3e}", v.boundary),
                "truncation": format!("{:.3e}", v.truncation),
            }));
        }
        points.push(json!({ "at": label, "t": dec(tv), "values": vals }));
    }
    let fam = match a.family {
        Family::Eight => "eight",
        Family::Four => "four",
    };
    let doc = json!({
        "command": "eval-tau",
        "family": fam,
        "settings": settings(r),
        "points": points,
        "warnings": warnings,
    });
    Ok(Outcome { body: to_json(&doc)?, pass: true })
}

fn tau_grid<S: Analytic>(spec: &str, taus: &[Tau<S>]) -> Result<Outcome, CliError> {
    let v: Vec<&str> = spec.split(',').collect();
    let bad = || CliError::Usage(format!("grid {spec:?} is not t0,ratio,count"));
    if v.len() != 3 {
        return Err(bad());
    }
    let t0: S = parse(v[0])?;
    let ratio: S = parse(v[1])?;
    let count: usize = v[2].trim().parse().map_err(|_| bad())?;
    let mut out = String::from("t");
    for i in 1..=taus.len() {
        out += &format!(",tau{i}_re,tau{i}_im,tau{i}_tail");
    }
    out.push('\n');
    let mut t = t0;
    for _ in 0..count {
        out += &t.to_decimal().0;
        for tau in taus {
            let v = tau.eval(&t)?;
            let (re, im) = v.value.to_decimal();
            out += &format!(",{re},{im},{:.3e}", v.boundary.max(v.truncation));
        }
        out.push('\n');
        t *= &ratio;
    }
    Ok(Outcome { body: out, pass: true })
}

pub fn check_bilinear<S: Analytic>(r: &Resolved) -> Result<Outcome, CliError> {
    let ctx = context::<S>(r)?;
    let fam = tau_family(&thetas::<S>(r)?, &ctx)?;
    let reps = bilinear_reports(&fam, &parse(&r.t)?, &ctx, r.tol)?;
    report_doc("check-bilinear", &reps, json!({}))
}

#[derive(Args, Debug)]
pub struct QpviArgs {
    /// Consecutive t-steps checked
    #[arg(long, default_value_t = 3)]
    pub steps: usize,
    /// Emit the direct-map vs tau orbit over this many steps as CSV
    #[arg(long)]
    pub trace: Option<usize>,
    /// Report both t-pairing conventions side by side
    #[arg(long)]
    pub convention_probe: bool,
    /// Also run the Riemann-problem checks at the same point (unshifted θ∞)
    #[arg(long)]
    pub with_riemann: bool,
    /// Tolerance of the direct-map orbit against the tau orbit
    #[arg(long, default_value_t = 1e-6)]
    pub orbit_tol: f64,
}

pub fn check_qpvi<S: Analytic>(r: &Resolved, a: &QpviArgs) -> Result<Outcome, CliError> {
    let ctx = context::<S>(r)?;
    let base = thetas::<S>(r)?;
    let t: S = parse(&r.t)?;
    if let Some(n) = a.trace {
        let fam = tau_family(&base, &ctx)?;
        let rows = orbit_comparison(&fam, &t, n, &ctx)?;
        let mut out = String::from("step,t,y_tau_re,y_tau_im,z_tau_re,z_tau_im,y_map_re,y_map_im,z_map_re,z_map_im,dy,dz,r1,r2\n");
        for w in &rows {
            out += &format!(
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                w.step, w.t, w.y_tau.0, w.y_tau.1, w.z_tau.0, w.z_tau.1, w.y_map.0, w.y_map.1, w.z_map.0, w.z_map.1, w.dy, w.dz,
                w.residual.r1, w.residual.r2
            );
        }
        let pass = rows.iter().all(|w| w.dy.max(w.dz) <= a.orbit_tol);
        return Ok(Outcome { body: out, pass });
    }
    let mut reps = qpvi_reports(&base, &t, a.steps, &ctx, r.tol, a.orbit_tol)?;
    let mut extra = json!({});
    if a.convention_probe {
        let fam = tau_family(&base, &ctx)?;
        let rows = orbit_comparison(&fam, &t, a.steps, &ctx)?;
        let probe: Vec<Value> = rows[..a.steps]
            .iter()
            .map(|w| {
                json!({
                    "step": w.step,
                    "t": format!("{:e}", w.t),
                    "literal": { "r1": format!("{:.3e}", w.residual.r1), "r2": format!("{:.3e}", w.residual.r2) },
                    "alternative": { "r1": format!("{:.3e}", w.residual.r1_alt), "r2": format!("{:.3e}", w.residual.r2_alt) },
                })
            })
            .collect();
        let ok = |f: &dyn Fn(&qtau::qpvi::QpviResidual) -> f64| rows[..a.steps].iter().all(|w| f(&w.residual) <= r.tol);
        let satisfied = match (ok(&|x| x.r1.max(x.r2)), ok(&|x| x.r1_alt.max(x.r2_alt))) {
            (true, true) => "both",
            (true, false) => "literal",
            (false, true) => "alternative",
            (false, false) => "neither",
        };
        extra = json!({ "convention_probe": { "steps": probe, "satisfied": satisfied } });
    }
    if a.with_riemann {
        reps.extend(riemann_reports(&base.to_unshifted_inf(), &t, &ctx, r.tol.max(1e-6))?);
    }
    report_doc("check-qpvi", &reps, extra)
}

pub fn check_riemann<S: Analytic>(r: &Resolved) -> Result<Outcome, CliError> {
    let ctx = context::<S>(r)?;
    let reps = riemann_reports(&thetas::<S>(r)?, &parse(&r.t)?, &ctx, r.tol)?;
    report_doc("check-riemann", &reps, json!({}))
}
