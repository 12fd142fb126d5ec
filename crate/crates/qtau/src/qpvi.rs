//! The q-PVI map for `(y, z)`, the tau-ratio formulas for `y`, `z`, `w`, and
//! the bilinear relations among the eight tau functions.

use rayon::prelude::*;
use serde::Serialize;

use crate::qspecial::gamma_q;
use crate::tau::{Tau, TauFamily, TauValue, RatioFamily, ThetaParams};
use crate::{Analytic, Error, QContext, Report, Result};

/// `a1, …, a4, b1, …, b4` of the q-PVI system.
#[derive(Clone, Debug, PartialEq)]
pub struct QPviParams<S> {
    pub a: [S; 4],
    pub b: [S; 4],
}

/// Builds the coefficients from unshifted-convention `θ∞`.
pub fn params_from_thetas<S: Analytic>(theta0: &S, theta_t: &S, theta1: &S, theta_inf: &S, ctx: &QContext<S>) -> QPviParams<S> {
    let one = S::one();
    let two = S::from_i64(2);
    let q = |e: S| ctx.qpow(&e);
    let a1 = q(-(two.clone() * theta1) - &one);
    QPviParams {
        a: [a1.clone(), q(-(two.clone() * theta_t) - two * theta1 - &one), ctx.qpowi(-1), a1],
        b: [
            q(-theta0.clone() - theta_t - theta1),
            q(theta0.clone() - theta_t - theta1),
            q(theta_inf.clone() - &one),
            q(-theta_inf.clone()),
        ],
    }
}

/// A point `(y, z)` of the orbit at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct State<S> {
    pub y: S,
    pub z: S,
    pub t: S,
}

fn nonzero<S: Analytic>(x: S, what: &str) -> Result<S> {
    if x.is_zero() {
        Err(Error::Singular(format!("{what} vanishes")))
    } else {
        Ok(x)
    }
}

/// `(y - t c1)(y - t c2) / ((y - d1)(y - d2))`.
fn mobius_pair<S: Analytic>(y: &S, t: &S, c: [&S; 2], d: [&S; 2], names: [&str; 2]) -> Result<S> {
    let d1 = nonzero(y.clone() - d[0], names[0])?;
    let d2 = nonzero(y.clone() - d[1], names[1])?;
    Ok((y.clone() - t.clone() * c[0]) * (y.clone() - t.clone() * c[1]) / (d1 * d2))
}

/// One step `(y, z, t) ↦ (ȳ, z̄, qt)`; the `z`-equation advances first.
pub fn qpvi_step<S: Analytic>(st: &State<S>, p: &QPviParams<S>, q: &S) -> Result<State<S>> {
    let [a1, a2, a3, a4] = &p.a;
    let [b1, b2, b3, b4] = &p.b;
    let z = nonzero(st.z.clone(), "z")?;
    let y = nonzero(st.y.clone(), "y")?;
    let zb = b3.clone() * b4 / z * mobius_pair(&st.y, &st.t, [a1, a2], [a3, a4], ["y - a3", "y - a4"])?;
    let zb = nonzero(zb, "z-bar")?;
    let yb = a3.clone() * a4 / y * mobius_pair(&zb, &st.t, [b1, b2], [b3, b4], ["z-bar - b3", "z-bar - b4"])?;
    Ok(State { y: yb, z: zb, t: st.t.clone() * q })
}

/// Inverse of [`qpvi_step`]: `(ȳ, z̄, qt) ↦ (y, z, t)`.
pub fn qpvi_step_inverse<S: Analytic>(st: &State<S>, p: &QPviParams<S>, q: &S) -> Result<State<S>> {
    let [a1, a2, a3, a4] = &p.a;
    let [b1, b2, b3, b4] = &p.b;
    let t = st.t.clone() / q;
    let yb = nonzero(st.y.clone(), "y-bar")?;
    let zb = nonzero(st.z.clone(), "z-bar")?;
    let y = a3.clone() * a4 / yb * mobius_pair(&st.z, &t, [b1, b2], [b3, b4], ["z-bar - b3", "z-bar - b4"])?;
    let y = nonzero(y, "y")?;
    let z = b3.clone() * b4 / zb * mobius_pair(&y, &t, [a1, a2], [a3, a4], ["y - a3", "y - a4"])?;
    Ok(State { y, z, t })
}

/// Relative residuals of the two q-PVI equations for `(y, z)` at `t` and `(ȳ, z̄)` at `qt`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct QpviResidual {
    /// `yȳ/(a3a4)` against the `z̄` side with `t b1, t b2`.
    pub r1: f64,
    /// `zz̄/(b3b4)` against the `y` side with `t a1, t a2`.
    pub r2: f64,
    /// `r1` with `qt` in place of `t`.
    pub r1_alt: f64,
    /// `r2` with `qt` in place of `t`.
    pub r2_alt: f64,
}

impl QpviResidual {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2)
    }
}

pub fn qpvi_residual<S: Analytic>(cur: &State<S>, next: &State<S>, p: &QPviParams<S>, q: &S) -> Result<QpviResidual> {
    let [a1, a2, a3, a4] = &p.a;
    let [b1, b2, b3, b4] = &p.b;
    let first = |t: &S| -> Result<f64> {
        let lhs = cur.y.clone() * &next.y / (a3.clone() * a4);
        let rhs = mobius_pair(&next.z, t, [b1, b2], [b3, b4], ["z-bar - b3", "z-bar - b4"])?;
        Ok(lhs.rel_diff(&rhs))
    };
    let second = |t: &S| -> Result<f64> {
        let lhs = cur.z.clone() * &next.z / (b3.clone() * b4);
        let rhs = mobius_pair(&cur.y, t, [a1, a2], [a3, a4], ["y - a3", "y - a4"])?;
        Ok(lhs.rel_diff(&rhs))
    };
    let qt = cur.t.clone() * q;
    Ok(QpviResidual { r1: first(&cur.t)?, r2: second(&cur.t)?, r1_alt: first(&qt)?, r2_alt: second(&qt)? })
}

/// A family of tau functions sharing one base point.
pub trait TauSet<S> {
    /// `τ_i`, 1-based.
    fn tau(&self, i: usize) -> &Tau<S>;
    fn base(&self) -> &ThetaParams<S>;
}

impl<S: Analytic> TauSet<S> for TauFamily<S> {
    fn tau(&self, i: usize) -> &Tau<S> {
        self.get(i)
    }
    fn base(&self) -> &ThetaParams<S> {
        &self.base
    }
}

impl<S: Analytic> TauSet<S> for RatioFamily<S> {
    fn tau(&self, i: usize) -> &Tau<S> {
        self.get(i)
    }
    fn base(&self) -> &ThetaParams<S> {
        &self.base
    }
}

fn val<S: Analytic>(f: &impl TauSet<S>, i: usize, t: &S) -> Result<S> {
    f.tau(i).value(t)
}

/// `y = q^{-2θ1-1} t τ3τ4 / (τ1τ2)`; valid for either family.
pub fn y_from_tau<S: Analytic>(fam: &impl TauSet<S>, t: &S, ctx: &QContext<S>) -> Result<S> {
    let den = nonzero(val(fam, 1, t)? * val(fam, 2, t)?, "tau1 tau2")?;
    let e = -(fam.base().theta1.clone() * S::from_i64(2)) - S::one();
    Ok(ctx.qpow(&e) * t * val(fam, 3, t)? * val(fam, 4, t)? / den)
}

/// `z = (τ̲1τ2 - τ1τ̲2) / (q^{θ∞}τ̲1τ2 - q^{1-θ∞}τ1τ̲2)` from pre-evaluated values.
pub fn z_thm_from_values<S: Analytic>(under: [&S; 2], plain: [&S; 2], theta_inf: &S, ctx: &QContext<S>) -> Result<S> {
    let a = under[0].clone() * plain[1];
    let b = plain[0].clone() * under[1];
    let den = ctx.qpow(theta_inf) * &a - ctx.qpow(&(S::one() - theta_inf)) * &b;
    Ok((a - b) / nonzero(den, "z denominator")?)
}

/// `z` from the tau-ratio theorem, with the family's unshifted `θ∞`.
pub fn z_from_tau_thm<S: Analytic>(fam: &RatioFamily<S>, t: &S, ctx: &QContext<S>) -> Result<S> {
    let tu = t.clone() / &ctx.q;
    let (u1, u2) = (val(fam, 1, &tu)?, val(fam, 2, &tu)?);
    let (v1, v2) = (val(fam, 1, t)?, val(fam, 2, t)?);
    z_thm_from_values([&u1, &u2], [&v1, &v2], &fam.base.theta_inf, ctx)
}

/// `z = -q^{θt-θ1-1} t τ̲7τ8 / (τ̲5τ6)`.
pub fn z_from_tau_conj<S: Analytic>(fam: &TauFamily<S>, t: &S, ctx: &QContext<S>) -> Result<S> {
    let tu = t.clone() / &ctx.q;
    let den = nonzero(val(fam, 5, &tu)? * val(fam, 6, t)?, "tau5 tau6")?;
    let b = &fam.base;
    let e = b.theta_t.clone() - &b.theta1 - S::one();
    Ok(-(ctx.qpow(&e) * t * val(fam, 7, &tu)? * val(fam, 8, t)? / den))
}

/// `w = q^{-1}(1-q^{1-2θ∞}) Γ_q(2θ∞)/Γ_q(2-2θ∞) · τ2/τ1`, unshifted `θ∞`.
pub fn w_from_tau<S: Analytic>(fam: &RatioFamily<S>, t: &S, ctx: &QContext<S>) -> Result<S> {
    let ti = &fam.base.theta_inf;
    let two = S::from_i64(2);
    let pre = S::one() - ctx.qpow(&(S::one() - two.clone() * ti));
    if pre.is_zero() {
        return Ok(pre);
    }
    let g = gamma_q(&(two.clone() * ti), ctx)? / gamma_q(&(two.clone() - two * ti), ctx)?;
    let v1 = nonzero(val(fam, 1, t)?, "tau1")?;
    Ok(pre * g * val(fam, 2, t)? / v1 / &ctx.q)
}

/// Residual of one bilinear relation.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BilinearResidual {
    pub name: String,
    /// `|Σ terms| / max |term|`.
    pub residual: f64,
    /// Largest relative tail of the tau values entering the relation.
    pub tail: f64,
}

/// The eight tau values at `q^{-1}t`, `t` and `qt`.
#[derive(Clone, Debug)]
pub struct ShiftedValues<S> {
    pub under: Vec<TauValue<S>>,
    pub plain: Vec<TauValue<S>>,
    pub over: Vec<TauValue<S>>,
}

pub fn shifted_values<S: Analytic>(fam: &TauFamily<S>, t: &S, ctx: &QContext<S>) -> Result<ShiftedValues<S>> {
    let ts = [t.clone() / &ctx.q, t.clone(), t.clone() * &ctx.q];
    let jobs: Vec<(usize, usize)> = (0..3).flat_map(|a| (1..=8).map(move |i| (a, i))).collect();
    let vals = jobs.par_iter().map(|&(a, i)| fam.get(i).eval(&ts[a])).collect::<Result<Vec<_>>>()?;
    let mut it = vals.chunks(8).map(|c| c.to_vec());
    Ok(ShiftedValues { under: it.next().unwrap(), plain: it.next().unwrap(), over: it.next().unwrap() })
}

pub const BILINEAR_NAMES: [&str; 9] = ["bilinear-1", "bilinear-2", "bilinear-3", "bilinear-4", "bilinear-5", "bilinear-6", "bilinear-7", "bilinear-8", "z-consistency"];

/// The eight conjectured bilinear relations plus the relation from the two `z` formulas.
pub fn bilinear_residuals<S: Analytic>(fam: &TauFamily<S>, t: &S, ctx: &QContext<S>) -> Result<Vec<BilinearResidual>> {
    let sv = shifted_values(fam, t, ctx)?;
    let v = |i: usize| sv.plain[i - 1].value.clone();
    let u = |i: usize| sv.under[i - 1].value.clone();
    let o = |i: usize| sv.over[i - 1].value.clone();
    let tl = |xs: &[&TauValue<S>]| xs.iter().map(|x| x.boundary.max(x.truncation)).fold(0.0, f64::max);
    let (pv, pu, po) = (&sv.plain, &sv.under, &sv.over);
    let b = &fam.base;
    let (t0, tt, t1, ti) = (&b.theta0, &b.theta_t, &b.theta1, &b.theta_inf);
    let q = |e: S| ctx.qpow(&e);
    let one = S::one();
    let two = S::from_i64(2);
    let half = S::half();
    let m1 = one.clone() - q(-(two.clone() * t1)) * t;
    let mt = one.clone() - q(-(two.clone() * tt)) * t;
    let q2t = q(two.clone() * tt);

    let rels: Vec<(Vec<S>, f64)> = vec![
        (vec![v(1) * v(2), -(q(-(two.clone() * t1)) * t * v(3) * v(4)), -(m1.clone() * v(5) * v(6))], tl(&[&pv[0], &pv[1], &pv[2], &pv[3], &pv[4], &pv[5]])),
        (vec![v(1) * v(2), -(t.clone() * v(3) * v(4)), -(mt.clone() * u(5) * o(6))], tl(&[&pv[0], &pv[1], &pv[2], &pv[3], &pu[4], &po[5]])),
        (vec![v(1) * v(2), -(v(3) * v(4)), m1 * &q2t * u(7) * o(8)], tl(&[&pv[0], &pv[1], &pv[2], &pv[3], &pu[6], &po[7]])),
        (vec![v(1) * v(2), -(q2t.clone() * v(3) * v(4)), mt * &q2t * v(7) * v(8)], tl(&[&pv[0], &pv[1], &pv[2], &pv[3], &pv[6], &pv[7]])),
        (
            vec![u(5) * v(6), q(-t1.clone() - ti + tt - &half) * t * u(7) * v(8), -(u(1) * v(2))],
            tl(&[&pu[4], &pv[5], &pu[6], &pv[7], &pu[0], &pv[1]]),
        ),
        (
            vec![u(5) * v(6), q(-t1.clone() + ti + tt - &half) * t * u(7) * v(8), -(v(1) * u(2))],
            tl(&[&pu[4], &pv[5], &pu[6], &pv[7], &pv[0], &pu[1]]),
        ),
        (
            vec![u(5) * v(6), q(t0.clone() + two.clone() * tt) * u(7) * v(8), -(q(tt.clone()) * u(3) * v(4))],
            tl(&[&pu[4], &pv[5], &pu[6], &pv[7], &pu[2], &pv[3]]),
        ),
        (
            vec![u(5) * v(6), q(-t0.clone() + two.clone() * tt) * u(7) * v(8), -(q(tt.clone()) * v(3) * u(4))],
            tl(&[&pu[4], &pv[5], &pu[6], &pv[7], &pv[2], &pu[3]]),
        ),
        {
            let k = (q(half.clone() + ti) - q(half.clone() - ti)) / (q(-t0.clone()) - q(t0.clone())) * q(-t1.clone() - &one) * t;
            (
                vec![u(1) * v(2), -(v(1) * u(2)), -(k.clone() * u(3) * v(4)), k * v(3) * u(4)],
                tl(&[&pu[0], &pv[1], &pv[0], &pu[1], &pu[2], &pv[3], &pv[2], &pu[3]]),
            )
        },
    ];
    Ok(rels
        .into_par_iter()
        .zip(BILINEAR_NAMES.par_iter())
        .map(|((terms, tail), name)| BilinearResidual { name: name.to_string(), residual: cancellation(&terms), tail })
        .collect())
}

/// `|Σ x| / max |x|`.
pub fn cancellation<S: Analytic>(terms: &[S]) -> f64 {
    let m = terms.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s = terms.iter().fold(S::zero(), |a, x| a + x);
    s.abs() / m
}

/// Tau-derived `(y, z)` at `t`, using the eight-member family.
pub fn tau_state<S: Analytic>(fam: &TauFamily<S>, t: &S, ctx: &QContext<S>) -> Result<State<S>> {
    Ok(State { y: y_from_tau(fam, t, ctx)?, z: z_from_tau_conj(fam, t, ctx)?, t: t.clone() })
}

/// One row of the orbit comparison between the direct map and the tau formulas.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitRow {
    pub step: usize,
    pub t: f64,
    pub y_tau: (f64, f64),
    pub z_tau: (f64, f64),
    pub y_map: (f64, f64),
    pub z_map: (f64, f64),
    pub dy: f64,
    pub dz: f64,
    pub residual: QpviResidual,
}

fn c64<S: Analytic>(x: &S) -> (f64, f64) {
    (x.re(), x.im())
}

/// Iterates the map from the tau-derived seed at `t` for `steps` steps and compares.
pub fn orbit_comparison<S: Analytic>(fam: &TauFamily<S>, t: &S, steps: usize, ctx: &QContext<S>) -> Result<Vec<OrbitRow>> {
    let b = fam.base.to_unshifted_inf();
    let p = params_from_thetas(&b.theta0, &b.theta_t, &b.theta1, &b.theta_inf, ctx);
    let ts: Vec<S> = (0..=steps).map(|k| t.clone() * ctx.qpowi(k as i64)).collect();
    let states = ts.par_iter().map(|tk| tau_state(fam, tk, ctx)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut cur = states[0].clone();
    for (k, st) in states.iter().enumerate() {
        if k > 0 {
            cur = qpvi_step(&cur, &p, &ctx.q)?;
        }
        let residual = if k < steps {
            qpvi_residual(st, &states[k + 1], &p, &ctx.q)?
        } else {
            QpviResidual { r1: 0.0, r2: 0.0, r1_alt: 0.0, r2_alt: 0.0 }
        };
        rows.push(OrbitRow {
            step: k,
            t: ts[k].re(),
            y_tau: c64(&st.y),
            z_tau: c64(&st.z),
            y_map: c64(&cur.y),
            z_map: c64(&cur.z),
            dy: cur.y.rel_diff(&st.y),
            dz: cur.z.rel_diff(&st.z),
            residual,
        });
    }
    Ok(rows)
}

fn fmt_params<S: Analytic>(r: Report, b: &ThetaParams<S>, t: &S, ctx: &QContext<S>) -> Report {
    let s = |x: &S| {
        let (re, im) = x.to_decimal();
        if x.im() == 0.0 {
            re
        } else {
            format!("{re},{im}")
        }
    };
    r.param("q", s(&ctx.q))
        .param("t", s(t))
        .param("theta0", s(&b.theta0))
        .param("theta_t", s(&b.theta_t))
        .param("theta1", s(&b.theta1))
        .param("theta_inf", s(&b.theta_inf))
        .param("sigma", s(&b.sigma))
        .param("s", s(&b.s))
        .param("bits", S::mantissa_bits())
        .trunc("K", ctx.weight_cap as u64)
        .trunc("N", ctx.window as u64)
}

/// Bilinear relations as reports, one per relation.
pub fn bilinear_reports<S: Analytic>(fam: &TauFamily<S>, t: &S, ctx: &QContext<S>, tol: f64) -> Result<Vec<Report>> {
    Ok(bilinear_residuals(fam, t, ctx)?
        .into_iter()
        .map(|r| {
            let rep = Report::numeric(r.name.clone(), 1, r.residual, tol).param("tail", format!("{:.3e}", r.tail));
            fmt_params(rep, &fam.base, t, ctx)
        })
        .collect())
}

/// q-PVI checks along `steps` consecutive `t`-steps: both equations, the two `z` formulas, and the direct orbit.
pub fn qpvi_reports<S: Analytic>(base: &ThetaParams<S>, t: &S, steps: usize, ctx: &QContext<S>, tol: f64, orbit_tol: f64) -> Result<Vec<Report>> {
    let fam = crate::tau::tau_family(base, ctx)?;
    let fam4 = crate::tau::tau_ratio_family(&base.to_unshifted_inf(), ctx)?;
    let rows = orbit_comparison(&fam, t, steps, ctx)?;
    let eq = &rows[..steps];
    let r1 = eq.iter().map(|r| r.residual.r1).fold(0.0, f64::max);
    let r2 = eq.iter().map(|r| r.residual.r2).fold(0.0, f64::max);
    let r1a = eq.iter().map(|r| r.residual.r1_alt).fold(0.0, f64::max);
    let r2a = eq.iter().map(|r| r.residual.r2_alt).fold(0.0, f64::max);
    let orbit = rows.iter().map(|r| r.dy.max(r.dz)).fold(0.0, f64::max);
    let ts: Vec<S> = (0..=steps).map(|k| t.clone() * ctx.qpowi(k as i64)).collect();
    let zdiff = ts
        .par_iter()
        .map(|tk| Ok(z_from_tau_thm(&fam4, tk, ctx)?.rel_diff(&z_from_tau_conj(&fam, tk, ctx)?)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let ydiff = ts
        .par_iter()
        .map(|tk| Ok(y_from_tau(&fam4, tk, ctx)?.rel_diff(&y_from_tau(&fam, tk, ctx)?)))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let steps_u = steps as u64;
    let reps = vec![
        Report::numeric("qpvi-eq1", steps, r1, tol).param("alt_convention_residual", format!("{r1a:.3e}")),
        Report::numeric("qpvi-eq2", steps, r2, tol).param("alt_convention_residual", format!("{r2a:.3e}")),
        Report::numeric("z-thm-vs-conj", steps + 1, zdiff, tol),
        Report::numeric("y-families", steps + 1, ydiff, tol),
        Report::numeric("orbit-vs-tau", steps + 1, orbit, orbit_tol),
    ];
    Ok(reps.into_iter().map(|r| fmt_params(r, base, t, ctx).trunc("steps", steps_u)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tau::{tau_family, tau_ratio_family};
    use crate::C128;

    fn c(x: f64) -> C128 {
        C128::from_f64(x)
    }

    fn ctx(k: usize, n: usize) -> QContext<C128> {
        QContext::with_orders(C128::parse("0.3").unwrap(), 256, k, n).unwrap()
    }

    fn base() -> ThetaParams<C128> {
        ThetaParams::parse(["0.137", "0.211", "0.173", "0.291", "0.317", "0.83"]).unwrap()
    }

    #[test]
    fn params_examples() {
        let x = ctx(2, 1);
        let z = c(0.0);
        let p = params_from_thetas(&c(0.137), &c(0.211), &z, &c(0.291), &x);
        assert!(p.a[0].rel_diff(&x.qpowi(-1)) < 1e-36 && p.a[3].rel_diff(&p.a[2]) < 1e-36);
        let p = params_from_thetas(&c(0.137), &c(0.211), &c(0.173), &c(0.5), &x);
        let h = x.qpow(&c(-0.5));
        assert!(p.b[2].rel_diff(&h) < 1e-36 && p.b[3].rel_diff(&h) < 1e-36);
        let q = 0.3f64;
        assert!((p.a[1].re() - q.powf(-2.0 * 0.211 - 2.0 * 0.173 - 1.0)).abs() < 1e-12 * p.a[1].abs());
        assert!((p.b[0].re() - q.powf(-0.137 - 0.211 - 0.173)).abs() < 1e-12);
        assert!((p.b[2].clone() * &p.b[3]).rel_diff(&x.qpowi(-1)) < 1e-36);
    }

    #[test]
    fn step_then_inverse() {
        let x = ctx(2, 1);
        let p = params_from_thetas(&c(0.137), &c(0.211), &c(0.173), &c(0.791), &x);
        let s0 = State { y: C128::new(0.7, 0.2), z: C128::new(-1.3, 0.4), t: c(0.02) };
        let s2 = qpvi_step(&qpvi_step(&s0, &p, &x.q).unwrap(), &p, &x.q).unwrap();
        let back = qpvi_step_inverse(&qpvi_step_inverse(&s2, &p, &x.q).unwrap(), &p, &x.q).unwrap();
        assert!(back.y.rel_diff(&s0.y) < 1e-30 && back.z.rel_diff(&s0.z) < 1e-30 && back.t.rel_diff(&s0.t) < 1e-36);
    }

    #[test]
    fn singular_step_is_flagged() {
        let x = ctx(2, 1);
        let p = params_from_thetas(&c(0.137), &c(0.211), &c(0.173), &c(0.791), &x);
        let s0 = State { y: p.a[2].clone(), z: c(1.0), t: c(0.02) };
        assert!(matches!(qpvi_step(&s0, &p, &x.q), Err(Error::Singular(m)) if m.contains("a3")));
        let s1 = State { y: p.a[0].clone() * c(0.02), z: c(1.0), t: c(0.02) };
        assert!(matches!(qpvi_step(&s1, &p, &x.q), Err(Error::Singular(m)) if m.contains("z-bar")));
    }

    #[test]
    fn z_thm_collapses_for_constant_taus() {
        let x = ctx(2, 1);
        let (a, b) = (C128::new(1.3, 0.1), C128::new(-0.4, 2.0));
        let z = z_thm_from_values([&a, &b], [&a, &b], &c(0.791), &x).unwrap();
        assert_eq!(z, c(0.0));
    }

    #[test]
    fn w_vanishes_at_half() {
        let x = ctx(2, 1);
        let mut p = base();
        p.theta_inf = c(0.5);
        let f = tau_ratio_family(&p, &x).unwrap();
        assert_eq!(w_from_tau(&f, &c(0.02), &x).unwrap(), c(0.0));
    }

    #[test]
    fn leading_coefficients_of_first_bilinear() {
        let x = ctx(0, 0);
        let f = tau_family(&base(), &x).unwrap();
        let t = c(1e-30);
        let v = f.values(&t).unwrap();
        let r = (v[0].clone() * &v[1]).rel_diff(&(v[4].clone() * &v[5]));
        assert!(r < 1e-25, "{r}");
    }

    #[test]
    fn tau_data_solves_qpvi() {
        let x = ctx(6, 4);
        let fam = tau_family(&base(), &x).unwrap();
        let t = c(0.02);
        let rows = orbit_comparison(&fam, &t, 2, &x).unwrap();
        for r in &rows[..2] {
            assert!(r.residual.max() < 1e-8, "{:?}", r.residual);
            assert!(r.residual.r1_alt > 1e-3);
        }
        assert!(rows[1].dy < 1e-7 && rows[1].dz < 1e-7, "{:?}", rows[1]);
        let f4 = tau_ratio_family(&base().to_unshifted_inf(), &x).unwrap();
        let d = z_from_tau_thm(&f4, &t, &x).unwrap().rel_diff(&z_from_tau_conj(&fam, &t, &x).unwrap());
        assert!(d < 1e-8, "{d}");
        let w6 = w_from_tau(&f4, &t, &x).unwrap();
        let w8 = w_from_tau(&tau_ratio_family(&base().to_unshifted_inf(), &x.with_weight_cap(8)).unwrap(), &t, &x).unwrap();
        assert!(w6.rel_diff(&w8) < 1e-9);
    }

    #[test]
    fn bilinears_small_at_desk_scale() {
        let x = ctx(6, 4);
        let fam = tau_family(&base(), &x).unwrap();
        let r = bilinear_residuals(&fam, &c(0.02), &x).unwrap();
        assert_eq!(r.len(), 9);
        for b in &r {
            assert!(b.residual < 1e-8, "{b:?}");
        }
    }
}
