//! The Riemann problem: `Y^∞`, `Y^{0t}`, `Y^0` as Fourier sums of 5-point
//! blocks, their connection matrices, and the `A`, `B` matrices they generate.

use rayon::prelude::*;
use serde::Serialize;

use crate::blocks::{braiding_matrix, normalization_n_degenerate, BlockSeries, BlockSpec};
use crate::qpvi::{w_from_tau, y_from_tau, z_thm_from_values};
use crate::qspecial::q_pochhammer_inf;
use crate::tau::{tau_ratio_family, ThetaParams};
use crate::{Analytic, Error, Matrix2, QContext, Report, Result, Sign};

/// Annulus `R1 < |x| < R2` where all three solutions are defined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiemannDomain {
    pub r1: f64,
    pub r2: f64,
}

impl RiemannDomain {
    /// The annulus at `t`; fails when it is empty.
    pub fn new<S: Analytic>(p: &ThetaParams<S>, t: &S, ctx: &QContext<S>) -> Result<Self> {
        let d = Self::bounds(p, t, ctx);
        if !(d.r1 < d.r2) {
            return Err(Error::Domain(format!("empty annulus: R1 = {:e}, R2 = {:e}", d.r1, d.r2)));
        }
        Ok(d)
    }

    /// `R1`, `R2` at `t` without requiring `R1 < R2`.
    pub fn bounds<S: Analytic>(p: &ThetaParams<S>, t: &S, ctx: &QContext<S>) -> Self {
        let two = S::from_i64(2);
        let m1 = -(two.clone() * &p.theta1);
        let mt = m1.clone() - two * &p.theta_t;
        let q = |e: &S| ctx.qpow(e);
        let one = S::one();
        let r1 = [1.0, q(&m1).abs(), (t.clone() * q(&m1)).abs(), (t.clone() * q(&mt)).abs()].into_iter().fold(0.0, f64::max);
        let r2 = [
            ctx.qpowi(-1).abs(),
            q(&(m1.clone() - &one)).abs(),
            (t.clone() * q(&(m1 - &one))).abs(),
            (t.clone() * q(&(mt - one))).abs(),
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        RiemannDomain { r1, r2 }
    }

    /// `(R1 R2)^{1/2}`.
    pub fn mid(&self) -> f64 {
        (self.r1 * self.r2).sqrt()
    }

    pub fn contains(&self, which: Which, r: f64) -> bool {
        match which {
            Which::Inf => r > self.r1,
            Which::ZeroT => r > self.r1 && r < self.r2,
            Which::Zero => r < self.r2,
        }
    }
}

/// Which of the three local solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Which {
    Inf,
    ZeroT,
    Zero,
}

type Entries<S> = [[Vec<BlockSeries<S>>; 2]; 2];

/// Block data for `Y^∞`, `Y^{0t}`, `Y^0` and the normalizing 4-point sum `τ̂`.
#[derive(Clone, Debug)]
pub struct Riemann<S> {
    /// Parameters in the unshifted `θ∞` convention.
    pub params: ThetaParams<S>,
    pub ctx: QContext<S>,
    tau_hat: Vec<BlockSeries<S>>,
    yinf: Entries<S>,
    y0t: Entries<S>,
    y0: Entries<S>,
    ninf: [S; 2],
}

enum Job<S> {
    Hat(BlockSpec<S>),
    Entry(Which, Sign, Sign, BlockSpec<S>),
}

impl<S: Analytic> Riemann<S> {
    pub fn new(params: ThetaParams<S>, ctx: &QContext<S>) -> Result<Self> {
        params.check_generic(ctx)?;
        let n = ctx.window as i64;
        let p = &params;
        let half = S::half();
        let mut jobs = Vec::new();
        for k in -n..=n {
            let sig = p.sigma.clone() + S::from_i64(k);
            jobs.push(Job::Hat(BlockSpec::new(
                vec![p.theta0.clone(), p.theta_t.clone(), p.theta1.clone(), p.theta_inf.clone()],
                vec![sig.clone()],
            )?));
            for e in Sign::BOTH {
                let top = p.theta_inf.clone() - e.apply(&half);
                for ep in Sign::BOTH {
                    let mid = p.theta_inf.clone() - S::from_ratio(e.int() - ep.int(), 2);
                    let s_inf = BlockSpec::new(
                        vec![p.theta0.clone(), p.theta_t.clone(), p.theta1.clone(), half.clone(), top.clone()],
                        vec![sig.clone(), mid],
                    )?
                    .with_degenerate(3)?;
                    let s_0t = BlockSpec::new(
                        vec![p.theta0.clone(), p.theta_t.clone(), half.clone(), p.theta1.clone(), top.clone()],
                        vec![sig.clone(), sig.clone() + ep.apply(&half)],
                    )?
                    .with_degenerate(2)?;
                    let s_0 = BlockSpec::new(
                        vec![p.theta0.clone(), half.clone(), p.theta_t.clone(), p.theta1.clone(), top.clone()],
                        vec![p.theta0.clone() + ep.apply(&half), sig.clone() + &half],
                    )?
                    .with_degenerate(1)?;
                    jobs.push(Job::Entry(Which::Inf, e, ep, s_inf));
                    jobs.push(Job::Entry(Which::ZeroT, e, ep, s_0t));
                    jobs.push(Job::Entry(Which::Zero, e, ep, s_0));
                }
            }
        }
        let built = jobs
            .into_par_iter()
            .map(|j| match j {
                Job::Hat(s) => Ok((None, BlockSeries::new(s, ctx)?)),
                Job::Entry(w, e, ep, s) => Ok((Some((w, e, ep)), BlockSeries::new(s, ctx)?)),
            })
            .collect::<Result<Vec<_>>>()?;
        let empty = || [[Vec::new(), Vec::new()], [Vec::new(), Vec::new()]];
        let (mut tau_hat, mut yinf, mut y0t, mut y0) = (Vec::new(), empty(), empty(), empty());
        for (key, b) in built {
            match key {
                None => tau_hat.push(b),
                Some((w, e, ep)) => {
                    let dst = match w {
                        Which::Inf => &mut yinf,
                        Which::ZeroT => &mut y0t,
                        Which::Zero => &mut y0,
                    };
                    dst[e.idx()][ep.idx()].push(b);
                }
            }
        }
        let ninf = Sign::BOTH.map(|e| {
            let top = p.theta_inf.clone() - e.apply(&half);
            normalization_n_degenerate(&top, &half, &p.theta_inf, ctx)
        });
        let [a, b] = ninf;
        Ok(Riemann { params, ctx: ctx.clone(), tau_hat, yinf, y0t, y0, ninf: [a?, b?] })
    }

    pub fn domain(&self, t: &S) -> Result<RiemannDomain> {
        RiemannDomain::new(&self.params, t, &self.ctx)
    }

    fn bounds(&self, t: &S) -> RiemannDomain {
        RiemannDomain::bounds(&self.params, t, &self.ctx)
    }

    fn s_pow(&self, i: usize) -> S {
        self.params.s.powi(i as i64 - self.ctx.window as i64)
    }

    /// `τ̂(t) = Σ_n s^n 𝓕[θ0, θt, θ1, θ∞ | σ+n](t, q^{2θt})`.
    pub fn tau_hat(&self, t: &S) -> Result<S> {
        let xs = [t.clone(), self.ctx.qpow(&(self.params.theta_t.clone() * S::from_i64(2)))];
        let mut out = S::zero();
        for (i, b) in self.tau_hat.iter().enumerate() {
            out += self.s_pow(i) * b.eval(&xs)?;
        }
        Ok(out)
    }

    /// `(k∞(ε), k0t(ε), k0(ε))` at `t`.
    pub fn k_factors(&self, e: Sign, t: &S) -> Result<(S, S, S)> {
        let p = &self.params;
        let ctx = &self.ctx;
        let tau = self.tau_hat(t)?;
        if tau.is_zero() {
            return Err(Error::Singular("tau-hat vanishes".into()));
        }
        let top = p.theta_inf.clone() - e.apply(&S::half());
        let two = S::from_i64(2);
        let expo = top.clone() * &top - e.apply(&(two.clone() * &p.theta_inf * (p.theta_t.clone() + &p.theta1)));
        let kinf = ctx.qpow(&expo) * &self.ninf[e.idx()] * tau;
        let k0t = kinf.clone() * ctx.qpow(&(p.theta1.clone() * &p.theta1 + p.theta1.clone() * S::half()));
        let e0 = p.theta_t.clone() * &p.theta_t + p.theta_t.clone() * S::half() + two * &p.theta1 * &p.theta_t;
        let k0 = k0t.clone() * ctx.qpow(&e0) * t.pow(&(-p.theta_t.clone()));
        Ok((kinf, k0t, k0))
    }

    /// `Y^{which}(x, t)`; fails outside the region of `which`.
    pub fn y_matrix(&self, which: Which, x: &S, t: &S) -> Result<Matrix2<S>> {
        let dom = self.bounds(t);
        if !dom.contains(which, x.abs()) {
            return Err(Error::Domain(format!("|x| = {:e} outside the region of {which:?} ({:e}, {:e})", x.abs(), dom.r1, dom.r2)));
        }
        let p = &self.params;
        let ctx = &self.ctx;
        let two = S::from_i64(2);
        let q2t = ctx.qpow(&(two.clone() * &p.theta_t));
        let big_x = ctx.qpow(&(two * (p.theta_t.clone() + &p.theta1))) * x;
        let (entries, xs, xpow) = match which {
            Which::Inf => (&self.yinf, [t.clone(), q2t, big_x], S::one()),
            Which::ZeroT => (&self.y0t, [t.clone(), big_x, q2t], x.pow(&(-p.theta1.clone()))),
            Which::Zero => (&self.y0, [big_x, t.clone(), q2t], x.pow(&(-p.theta_t.clone() - &p.theta1))),
        };
        let mut m = Matrix2::identity();
        for e in Sign::BOTH {
            let (kinf, k0t, k0) = self.k_factors(e, t)?;
            let k = match which {
                Which::Inf => kinf,
                Which::ZeroT => k0t,
                Which::Zero => k0,
            };
            for ep in Sign::BOTH {
                let mut acc = S::zero();
                for (i, b) in entries[e.idx()][ep.idx()].iter().enumerate() {
                    acc += self.s_pow(i) * b.eval(&xs)?;
                }
                m[(e, ep)] = xpow.clone() * acc / &k;
            }
        }
        Ok(m)
    }

    /// `ℬ1(x) = ℬ[θ1; θ∞+½, σ | q^{-2θ1}/x]`.
    pub fn b1(&self, x: &S) -> Result<Matrix2<S>> {
        let p = &self.params;
        let arg = self.ctx.qpow(&(-(p.theta1.clone() * S::from_i64(2)))) / x;
        braiding_matrix(&p.theta1, &(p.theta_inf.clone() + S::half()), &p.sigma, &arg, &self.ctx)
    }

    /// `ℬ2(x) = ℬ[θt; σ+½, θ0 | tq^{-2θt-2θ1}/x] · [[0, s], [1, 0]]`.
    pub fn b2(&self, x: &S, t: &S) -> Result<Matrix2<S>> {
        let p = &self.params;
        let two = S::from_i64(2);
        let arg = self.ctx.qpow(&(-(two * (p.theta_t.clone() + &p.theta1)))) * t / x;
        let b = braiding_matrix(&p.theta_t, &(p.sigma.clone() + S::half()), &p.theta0, &arg, &self.ctx)?;
        let swap = Matrix2::new(S::zero(), p.s.clone(), S::one(), S::zero());
        Ok(&b * &swap)
    }

    /// `Y^∞` continued to all `x`: `Y^∞` for `|x| > R1`, `Y^0 ℬ2 ℬ1` below.
    pub fn y_continued(&self, x: &S, t: &S) -> Result<Matrix2<S>> {
        if x.abs() > self.bounds(t).r1 {
            self.y_matrix(Which::Inf, x, t)
        } else {
            let y0 = self.y_matrix(Which::Zero, x, t)?;
            Ok(&(&y0 * &self.b2(x, t)?) * &self.b1(x)?)
        }
    }

    /// `‖Y^∞ - Y^{0t}ℬ1‖ / ‖Y^∞‖` or `‖Y^{0t} - Y^0ℬ2‖ / ‖Y^{0t}‖`.
    pub fn connection_residual(&self, pair: Connection, x: &S, t: &S) -> Result<f64> {
        let y0t = self.y_matrix(Which::ZeroT, x, t)?;
        Ok(match pair {
            Connection::InfZeroT => self.y_matrix(Which::Inf, x, t)?.rel_diff(&(&y0t * &self.b1(x)?)),
            Connection::ZeroTZero => y0t.rel_diff(&(&self.y_matrix(Which::Zero, x, t)? * &self.b2(x, t)?)),
        })
    }

    /// `det Y^∞` against `(q^{-2θ1}/x, tq^{-2θt-2θ1}/x; q)_∞ / (1/x, tq^{-2θ1}/x; q)_∞`.
    pub fn det_yinf_residual(&self, x: &S, t: &S) -> Result<f64> {
        let d = self.y_matrix(Which::Inf, x, t)?.det();
        Ok(d.rel_diff(&self.det_yinf_expected(x, t)))
    }

    pub fn det_yinf_expected(&self, x: &S, t: &S) -> S {
        let p = &self.params;
        let ctx = &self.ctx;
        let two = S::from_i64(2);
        let m1 = ctx.qpow(&(-(two.clone() * &p.theta1)));
        let mt = ctx.qpow(&(-(two * (p.theta1.clone() + &p.theta_t))));
        let poch = |a: S| q_pochhammer_inf(&a, ctx).value;
        poch(m1.clone() / x) * poch(t.clone() * mt / x) / (poch(S::one() / x.clone()) * poch(t.clone() * m1 / x))
    }

    /// `A(x, t) = Y(qx, t) Y(x, t)^{-1}`.
    pub fn a_matrix(&self, x: &S, t: &S) -> Result<Matrix2<S>> {
        let qx = x.clone() * &self.ctx.q;
        Ok(&self.y_continued(&qx, t)? * &self.y_continued(x, t)?.inverse()?)
    }

    /// `(x-q^{-2θ1-1})(x-tq^{-2θt-2θ1-1}) / ((x-q^{-1})(x-tq^{-2θ1-1}))`.
    pub fn det_a_expected(&self, x: &S, t: &S) -> S {
        let [a1, a2, a3, a4] = self.poles(t);
        (x.clone() - a1) * (x.clone() - a2) / ((x.clone() - a3) * (x.clone() - a4))
    }

    /// `[q^{-2θ1-1}, tq^{-2θt-2θ1-1}, q^{-1}, tq^{-2θ1-1}]`.
    fn poles(&self, t: &S) -> [S; 4] {
        let p = &self.params;
        let ctx = &self.ctx;
        let two = S::from_i64(2);
        let one = S::one();
        let m1 = ctx.qpow(&(-(two.clone() * &p.theta1) - &one));
        let mt = ctx.qpow(&(-(two * (p.theta1.clone() + &p.theta_t)) - &one));
        [m1.clone(), t.clone() * mt, ctx.qpowi(-1), t.clone() * m1]
    }

    /// `A(x)(x-q^{-1})(x-tq^{-2θ1-1})`, a quadratic polynomial in `x`.
    pub fn a_numerator(&self, x: &S, t: &S) -> Result<Matrix2<S>> {
        let [_, _, a3, a4] = self.poles(t);
        Ok(self.a_matrix(x, t)?.scale(&((x.clone() - a3) * (x.clone() - a4))))
    }

    /// `B(x, t) = Y(x, qt) Y(x, t)^{-1}`.
    pub fn b_matrix(&self, x: &S, t: &S) -> Result<Matrix2<S>> {
        let qt = t.clone() * &self.ctx.q;
        Ok(&self.y_continued(x, &qt)? * &self.y_continued(x, t)?.inverse()?)
    }

    /// `B(x, t)(x - tq^{-2θt-2θ1})`, linear in `x` with unit leading coefficient.
    pub fn b_numerator(&self, x: &S, t: &S) -> Result<Matrix2<S>> {
        let p = &self.params;
        let two = S::from_i64(2);
        let c = t.clone() * self.ctx.qpow(&(-(two * (p.theta1.clone() + &p.theta_t))));
        Ok(self.b_matrix(x, t)?.scale(&(x.clone() - c)))
    }

    /// `A(x, qt)B(x, t) - B(qx, t)A(x, t)` relative to `‖A(x, qt)B(x, t)‖`.
    pub fn compatibility_residual(&self, x: &S, t: &S) -> Result<f64> {
        let q = &self.ctx.q;
        let qt = t.clone() * q;
        let qx = x.clone() * q;
        let lhs = &self.a_matrix(x, &qt)? * &self.b_matrix(x, t)?;
        let rhs = &self.b_matrix(&qx, t)? * &self.a_matrix(x, t)?;
        Ok(lhs.rel_diff(&rhs))
    }
}

/// Pair of solutions glued by a connection matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Connection {
    /// `Y^∞ = Y^{0t} ℬ1`.
    InfZeroT,
    /// `Y^{0t} = Y^0 ℬ2`.
    ZeroTZero,
}

/// Straight line through two matrix samples, checked at a third: `(‖pred - M3‖/‖M3‖, slope, intercept)`.
fn linear_fit<S: Analytic>(xs: [&S; 3], ms: [&Matrix2<S>; 3]) -> (f64, Matrix2<S>, Matrix2<S>) {
    let slope = (ms[0] - ms[1]).scale(&(S::one() / (xs[0].clone() - xs[1])));
    let icpt = ms[0] - &slope.scale(xs[0]);
    let pred = slope.scale(xs[2]).add(&icpt);
    (pred.rel_diff(ms[2]), slope, icpt)
}

/// Quadratic through three matrix samples, evaluated at `z`.
fn lagrange3<S: Analytic>(xs: [&S; 3], ms: [&Matrix2<S>; 3], z: &S) -> Matrix2<S> {
    let mut out = Matrix2::diag(S::zero(), S::zero());
    for i in 0..3 {
        let mut l = S::one();
        for j in 0..3 {
            if i != j {
                l *= (z.clone() - xs[j]) / (xs[i].clone() - xs[j]);
            }
        }
        out = out.add(&ms[i].scale(&l));
    }
    out
}

/// `(y, z, w)` read off from `A`, with the linearity residual of `A_{+-}` numerator.
#[derive(Clone, Debug)]
pub struct FromA<S> {
    pub y: S,
    pub z: S,
    pub w: S,
    /// Relative miss of the straight-line fit of `A_{+-}(x)(x-q^{-1})(x-tq^{-2θ1-1})` at a third point.
    pub linearity: f64,
}

impl<S: Analytic> Riemann<S> {
    /// Extracts `y`, `w` from the line `q^{θ∞}w(x - y)` through `A_{+-}` numerator samples on `|x| = radius`,
    /// and `z` from `A(y)_{++}` by quadratic interpolation of the `A` numerator.
    pub fn y_from_a(&self, t: &S, radius: f64) -> Result<FromA<S>> {
        let ctx = &self.ctx;
        let ph = |k: f64| S::from_c64(0.0, std::f64::consts::PI * k).exp() * S::from_f64(radius);
        let xs = [ph(1.0 / 8.0), ph(5.0 / 8.0), ph(9.0 / 8.0)];
        let nums = xs.par_iter().map(|x| self.a_numerator(x, t)).collect::<Result<Vec<_>>>()?;
        let pm = |m: &Matrix2<S>| Matrix2::diag(m[(Sign::Plus, Sign::Minus)].clone(), S::zero());
        let g: Vec<Matrix2<S>> = nums.iter().map(pm).collect();
        let (linearity, slope, icpt) = linear_fit([&xs[0], &xs[1], &xs[2]], [&g[0], &g[1], &g[2]]);
        let k = slope.m[0][0].clone();
        if k.is_zero() {
            return Err(Error::Singular("A_{+-} numerator has no linear part".into()));
        }
        let y = -(icpt.m[0][0].clone() / &k);
        let w = k / ctx.qpow(&self.params.theta_inf);
        let [_, _, a3, a4] = self.poles(t);
        let at_y = lagrange3([&xs[0], &xs[1], &xs[2]], [&nums[0], &nums[1], &nums[2]], &y);
        let app = at_y[(Sign::Plus, Sign::Plus)].clone() / ((y.clone() - &a3) * (y.clone() - a4));
        let [_, a2, _, _] = self.poles(t);
        let z = (y.clone() - a2) / (ctx.q.clone() * app * (y.clone() - a3));
        Ok(FromA { y, z, w, linearity })
    }
}

/// All residuals at one sample point.
#[derive(Clone, Debug, Serialize)]
pub struct PointResiduals {
    pub x: (f64, f64),
    pub connection_inf_0t: f64,
    pub connection_0t_0: f64,
    pub det_yinf: f64,
    pub det_a: f64,
    pub a_quadratic: f64,
    pub b_linear: f64,
    pub b_identity_slope: f64,
    pub compatibility: f64,
    pub b_z: f64,
}

impl PointResiduals {
    pub fn labelled(&self) -> [(&'static str, f64); 9] {
        [
            ("connection-inf-0t", self.connection_inf_0t),
            ("connection-0t-0", self.connection_0t_0),
            ("det-yinf", self.det_yinf),
            ("det-a", self.det_a),
            ("a-quadratic", self.a_quadratic),
            ("b-linear", self.b_linear),
            ("b-identity-slope", self.b_identity_slope),
            ("compatibility", self.compatibility),
            ("b-z", self.b_z),
        ]
    }
}

/// `q^{1+θ∞} z w / (1 - q^{1-θ∞} z)` with `z`, `w` from the tau functions at `qt`.
pub fn b_z_expected<S: Analytic>(p: &ThetaParams<S>, t: &S, ctx: &QContext<S>) -> Result<S> {
    let fam = tau_ratio_family(p, ctx)?;
    let qt = t.clone() * &ctx.q;
    let (u1, u2) = (fam.get(1).value(t)?, fam.get(2).value(t)?);
    let (v1, v2) = (fam.get(1).value(&qt)?, fam.get(2).value(&qt)?);
    let z = z_thm_from_values([&u1, &u2], [&v1, &v2], &p.theta_inf, ctx)?;
    let w = w_from_tau(&fam, &qt, ctx)?;
    let one = S::one();
    Ok(ctx.qpow(&(one.clone() + &p.theta_inf)) * &z * w / (one.clone() - ctx.qpow(&(one - &p.theta_inf)) * z))
}

/// Sample points `ρ e^{iπ(2k+1)/8}`, `k = 0..8`.
pub fn circle_points<S: Analytic>(radius: f64) -> Vec<S> {
    (0..8)
        .map(|k| S::from_c64(0.0, std::f64::consts::PI * (2 * k + 1) as f64 / 8.0).exp() * S::from_f64(radius))
        .collect()
}

impl<S: Analytic> Riemann<S> {
    /// Every structural residual at `x`; the `B` fits use `x`, `ix`, `-x`.
    pub fn point_residuals(&self, x: &S, t: &S, bz: &S) -> Result<PointResiduals> {
        let i = S::imag_unit();
        let xs = [x.clone(), x.clone() * &i, -x.clone()];
        let a = self.a_matrix(x, t)?;
        let det_a = a.det().rel_diff(&self.det_a_expected(x, t));
        let x4 = -(x.clone() * &i);
        let an = [&xs[0], &xs[1], &xs[2], &x4].map(|z| self.a_numerator(z, t));
        let an = [an[0].clone()?, an[1].clone()?, an[2].clone()?, an[3].clone()?];
        let a_quadratic = lagrange3([&xs[0], &xs[1], &xs[2]], [&an[0], &an[1], &an[2]], &x4).rel_diff(&an[3]);
        let bn = [&xs[0], &xs[1], &xs[2]].map(|z| self.b_numerator(z, t));
        let bn = [bn[0].clone()?, bn[1].clone()?, bn[2].clone()?];
        let (b_linear, slope, b0) = linear_fit([&xs[0], &xs[1], &xs[2]], [&bn[0], &bn[1], &bn[2]]);
        Ok(PointResiduals {
            x: (x.re(), x.im()),
            connection_inf_0t: self.connection_residual(Connection::InfZeroT, x, t)?,
            connection_0t_0: self.connection_residual(Connection::ZeroTZero, x, t)?,
            det_yinf: self.det_yinf_residual(x, t)?,
            det_a,
            a_quadratic,
            b_linear,
            b_identity_slope: slope.rel_diff(&Matrix2::identity()),
            compatibility: self.compatibility_residual(x, t)?,
            b_z: b0[(Sign::Plus, Sign::Minus)].rel_diff(bz),
        })
    }

    /// `‖A(x) - diag(q^{-θ∞}, q^{θ∞})‖` at `|x| = radius`, eight arguments.
    pub fn a2_residual(&self, t: &S, radius: f64) -> Result<f64> {
        let ti = &self.params.theta_inf;
        let a2 = Matrix2::diag(self.ctx.qpow(&(-ti.clone())), self.ctx.qpow(ti));
        let r = circle_points::<S>(radius)
            .par_iter()
            .map(|x| Ok(self.a_matrix(x, t)?.rel_diff(&a2)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(r.into_iter().fold(0.0, f64::max))
    }
}

/// Radius used to read `y`, `w` off `A`: `|x| > R1` and `|qx| < R1`.
pub fn extraction_radius(dom: &RiemannDomain, q: f64) -> f64 {
    0.75 * dom.r1 / q
}

/// Structural checks on the mid-annulus circle plus the end-to-end `y`, `w` comparison.
pub fn riemann_reports<S: Analytic>(p: &ThetaParams<S>, t: &S, ctx: &QContext<S>, tol: f64) -> Result<Vec<Report>> {
    let r = Riemann::new(p.clone(), ctx)?;
    let dom = r.domain(t)?;
    let bz = b_z_expected(p, t, ctx)?;
    let pts = circle_points::<S>(dom.mid());
    let res = pts.par_iter().map(|x| r.point_residuals(x, t, &bz)).collect::<Result<Vec<_>>>()?;
    let a2 = r.a2_residual(t, 1e12)?;

    let fam = tau_ratio_family(p, ctx)?;
    let from_a = r.y_from_a(t, extraction_radius(&dom, ctx.q.abs()))?;
    let y_tau = y_from_tau(&fam, t, ctx)?;
    let w_tau = w_from_tau(&fam, t, ctx)?;
    let tu = t.clone() / &ctx.q;
    let z_tau = z_thm_from_values(
        [&fam.get(1).value(&tu)?, &fam.get(2).value(&tu)?],
        [&fam.get(1).value(t)?, &fam.get(2).value(t)?],
        &p.theta_inf,
        ctx,
    )?;

    let meta = |rep: Report| {
        let f = |x: &S| x.to_decimal().0;
        rep.param("q", f(&ctx.q))
            .param("t", f(t))
            .param("theta0", f(&p.theta0))
            .param("theta_t", f(&p.theta_t))
            .param("theta1", f(&p.theta1))
            .param("theta_inf", f(&p.theta_inf))
            .param("sigma", f(&p.sigma))
            .param("s", f(&p.s))
            .param("bits", S::mantissa_bits())
            .param("r1", format!("{:.6e}", dom.r1))
            .param("r2", format!("{:.6e}", dom.r2))
            .trunc("K", ctx.weight_cap as u64)
            .trunc("N", ctx.window as u64)
    };
    let names = res[0].labelled().map(|(k, _)| k);
    let mut out = Vec::new();
    for (j, name) in names.iter().enumerate() {
        let mut worst = (0usize, 0.0f64);
        for (i, pr) in res.iter().enumerate() {
            let v = pr.labelled()[j].1;
            if v.is_nan() || v > worst.1 {
                worst = (i, v);
            }
        }
        let x = res[worst.0].x;
        out.push(meta(Report::numeric(*name, res.len(), worst.1, tol).witness(format!("x = {:.6e}{:+.6e}i", x.0, x.1))));
    }
    out.push(meta(Report::numeric("a2-limit", 8, a2, tol).param("radius", "1e12")));
    let radius = format!("{:.6e}", extraction_radius(&dom, ctx.q.abs()));
    out.push(meta(
        Report::numeric("y-from-a-vs-tau", 1, from_a.y.rel_diff(&y_tau), tol)
            .param("radius", &radius)
            .param("a_pm_linearity", format!("{:.3e}", from_a.linearity)),
    ));
    out.push(meta(
        Report::numeric("w-from-a-vs-tau", 1, from_a.w.rel_diff(&w_tau), tol)
            .param("radius", &radius)
            .param("z_from_a_vs_tau", format!("{:.3e}", from_a.z.rel_diff(&z_tau))),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Scalar, C128};

    fn setup(k: usize, n: usize) -> (Riemann<C128>, C128) {
        let ctx = QContext::with_orders(C128::parse("0.008").unwrap(), 256, k, n).unwrap();
        let p = ThetaParams::parse(["0.137", "0.1", "0.05", "0.291", "0.317", "0.83"]).unwrap();
        (Riemann::new(p, &ctx).unwrap(), C128::parse("0.2").unwrap())
    }

    #[test]
    fn domain_radii() {
        let (r, t) = setup(0, 0);
        let d = r.domain(&t).unwrap();
        let q = 0.008f64;
        assert!((d.r1 - q.powf(-0.1)).abs() < 1e-12);
        assert!((d.r2 - 0.2 * q.powf(-1.1)).abs() < 1e-9);
        assert!(d.contains(Which::ZeroT, d.mid()) && !d.contains(Which::ZeroT, 2.0 * d.r2));
        assert!(matches!(r.y_matrix(Which::ZeroT, &C128::from_f64(2.0 * d.r2), &t), Err(Error::Domain(_))));
    }

    #[test]
    fn k_factor_ratios() {
        let (r, t) = setup(2, 1);
        let p = &r.params;
        let (ki, k0t, k0) = r.k_factors(Sign::Minus, &t).unwrap();
        let e1 = p.theta1.clone() * &p.theta1 + p.theta1.clone() * C128::half();
        assert!((k0t.clone() / &ki).rel_diff(&r.ctx.qpow(&e1)) < 1e-30);
        let two = C128::from_i64(2);
        let e2 = p.theta_t.clone() * &p.theta_t + p.theta_t.clone() * C128::half() + two * &p.theta1 * &p.theta_t;
        let expect = r.ctx.qpow(&e2) * t.pow(&(-p.theta_t.clone()));
        assert!((k0 / k0t).rel_diff(&expect) < 1e-30);
    }

    #[test]
    fn yinf_leading_behaviour() {
        let (r, t) = setup(4, 2);
        let x1 = C128::from_f64(1e8);
        let x2 = C128::from_f64(2e8);
        let y1 = r.y_matrix(Which::Inf, &x1, &t).unwrap();
        let y2 = r.y_matrix(Which::Inf, &x2, &t).unwrap();
        let slope = |a: &C128, b: &C128| (b.clone() / a).ln().re() / 2f64.ln();
        let ti = 0.291;
        assert!((slope(&y1.m[0][0], &y2.m[0][0]) + ti).abs() < 1e-6);
        assert!((slope(&y1.m[1][1], &y2.m[1][1]) - ti).abs() < 1e-6);
        assert!((slope(&y1.m[0][1], &y2.m[0][1]) - ti + 1.0).abs() < 1e-6);
        assert!((slope(&y1.m[1][0], &y2.m[1][0]) + ti + 1.0).abs() < 1e-6);
        let norm = y1.m[0][0].clone() * C128::from_f64(1e8f64.powf(0.291));
        assert!(norm.rel_diff(&C128::from_f64(1.0)) < 1e-6);
        let det = r.det_yinf_residual(&C128::from_f64(1e8), &t).unwrap();
        assert!(det < 1e-6, "{det}");
    }

    #[test]
    fn mid_annulus_structure_at_low_order() {
        let (r, t) = setup(6, 3);
        let d = r.domain(&t).unwrap();
        let x = circle_points::<C128>(d.mid()).swap_remove(0);
        let bz = b_z_expected(&r.params, &t, &r.ctx).unwrap();
        let res = r.point_residuals(&x, &t, &bz).map_err(|e| e.to_string()).unwrap();
        for (k, v) in res.labelled() {
            assert!(v < 1e-3, "{k}: {v}");
        }
    }
}
