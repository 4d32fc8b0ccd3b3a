//! Parametric bivariate copula families: density, CDF, h-function (the
//! conditional CDF obtained as a partial derivative of the copula CDF), its
//! inverse, Kendall-tau links, and per-pair fitting.
//!
//! Implemented families: independence, Gaussian, Clayton, Gumbel, Frank.
//! All are exchangeable, so densities are symmetric in (u, v). Evaluation
//! works in log space where the raw closed forms overflow near the corners.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::normal::{norm_cdf, norm_quantile};
use crate::numeric::quad::gauss_legendre;
use crate::numeric::{clamp_unit, CLAMP_EPS};

/// A point of the open unit square. Construction clamps both coordinates
/// into `[1e-10, 1 - 1e-10]`, which keeps quantile transforms finite while
/// perturbing densities negligibly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPair {
    pub u: f64,
    pub v: f64,
}

impl UnitPair {
    pub fn new(u: f64, v: f64) -> Self {
        UnitPair {
            u: clamp_unit(u),
            v: clamp_unit(v),
        }
    }
}

/// Copula family tag. Serialized in lowercase in model files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Independence,
    Gaussian,
    Clayton,
    Gumbel,
    Frank,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Independence,
        Family::Gaussian,
        Family::Clayton,
        Family::Gumbel,
        Family::Frank,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Gaussian => "gaussian",
            Family::Clayton => "clayton",
            Family::Gumbel => "gumbel",
            Family::Frank => "frank",
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            Family::Independence => 0,
            _ => 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independence" | "indep" => Ok(Family::Independence),
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "clayton" => Ok(Family::Clayton),
            "gumbel" => Ok(Family::Gumbel),
            "frank" => Ok(Family::Frank),
            other => Err(Error::InvalidInput(format!("unknown family '{other}'"))),
        }
    }
}

/// A bivariate copula instance: a family plus its parameter.
///
/// Parameter domains: Gaussian rho in (-1, 1), Clayton theta in (0, inf),
/// Gumbel theta in [1, inf), Frank theta != 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BivariateCopula {
    Independence,
    Gaussian { rho: f64 },
    Clayton { theta: f64 },
    Gumbel { theta: f64 },
    Frank { theta: f64 },
}

impl BivariateCopula {
    pub fn new(family: Family, parameter: Option<f64>) -> Result<Self> {
        match family {
            Family::Independence => Ok(BivariateCopula::Independence),
            Family::Gaussian => {
                let rho = parameter.ok_or(Error::ParameterDomain {
                    family: "gaussian",
                    value: f64::NAN,
                })?;
                if !rho.is_finite() || rho.abs() >= 1.0 {
                    return Err(Error::ParameterDomain {
                        family: "gaussian",
                        value: rho,
                    });
                }
                Ok(BivariateCopula::Gaussian { rho })
            }
            Family::Clayton => {
                let theta = parameter.ok_or(Error::ParameterDomain {
                    family: "clayton",
                    value: f64::NAN,
                })?;
                if !theta.is_finite() || theta <= 0.0 {
                    return Err(Error::ParameterDomain {
                        family: "clayton",
                        value: theta,
                    });
                }
                Ok(BivariateCopula::Clayton { theta })
            }
            Family::Gumbel => {
                let theta = parameter.ok_or(Error::ParameterDomain {
                    family: "gumbel",
                    value: f64::NAN,
                })?;
                if !theta.is_finite() || theta < 1.0 {
                    return Err(Error::ParameterDomain {
                        family: "gumbel",
                        value: theta,
                    });
                }
                Ok(BivariateCopula::Gumbel { theta })
            }
            Family::Frank => {
                let theta = parameter.ok_or(Error::ParameterDomain {
                    family: "frank",
                    value: f64::NAN,
                })?;
                if !theta.is_finite() || theta == 0.0 {
                    return Err(Error::ParameterDomain {
                        family: "frank",
                        value: theta,
                    });
                }
                Ok(BivariateCopula::Frank { theta })
            }
        }
    }

    pub fn family(&self) -> Family {
        match self {
            BivariateCopula::Independence => Family::Independence,
            BivariateCopula::Gaussian { .. } => Family::Gaussian,
            BivariateCopula::Clayton { .. } => Family::Clayton,
            BivariateCopula::Gumbel { .. } => Family::Gumbel,
            BivariateCopula::Frank { .. } => Family::Frank,
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match *self {
            BivariateCopula::Independence => None,
            BivariateCopula::Gaussian { rho } => Some(rho),
            BivariateCopula::Clayton { theta }
            | BivariateCopula::Gumbel { theta }
            | BivariateCopula::Frank { theta } => Some(theta),
        }
    }

    pub fn is_independence(&self) -> bool {
        matches!(self, BivariateCopula::Independence)
    }

    /// Copula density c(u, v).
    pub fn density(&self, p: UnitPair) -> f64 {
        self.log_density(p).exp()
    }

    /// Log copula density.
    pub fn log_density(&self, p: UnitPair) -> f64 {
        let (u, v) = (p.u, p.v);
        match *self {
            BivariateCopula::Independence => 0.0,
            BivariateCopula::Gaussian { rho } => {
                let x = norm_quantile(u);
                let y = norm_quantile(v);
                let s2 = 1.0 - rho * rho;
                -0.5 * s2.ln() - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * s2)
            }
            BivariateCopula::Clayton { theta } => {
                let (lu, lv) = (u.ln(), v.ln());
                let ln_t = clayton_ln_t(theta, lu, lv);
                (1.0 + theta).ln() - (1.0 + theta) * (lu + lv) - (2.0 + 1.0 / theta) * ln_t
            }
            BivariateCopula::Gumbel { theta } => {
                let (lx, ly) = ((-u.ln()).ln(), (-v.ln()).ln());
                let ln_s = log_sum_exp(theta * lx, theta * ly) / theta;
                let s = ln_s.exp();
                -s + (2.0 - 2.0 * theta) * ln_s
                    + (1.0 + (theta - 1.0) / s).ln()
                    + (theta - 1.0) * (lx + ly)
                    - u.ln()
                    - v.ln()
            }
            BivariateCopula::Frank { theta } => {
                let a = (-theta * u).exp_m1();
                let b = (-theta * v).exp_m1();
                let d = (-theta).exp_m1();
                (theta.abs() * d.abs()).ln() - theta * (u + v) - 2.0 * (d + a * b).abs().ln()
            }
        }
    }

    /// Copula CDF C(u, v).
    pub fn cdf(&self, p: UnitPair) -> f64 {
        let (u, v) = (p.u, p.v);
        match *self {
            BivariateCopula::Independence => u * v,
            BivariateCopula::Gaussian { rho } => {
                crate::numeric::normal::bvn_cdf(norm_quantile(u), norm_quantile(v), rho)
            }
            BivariateCopula::Clayton { theta } => {
                let ln_t = clayton_ln_t(theta, u.ln(), v.ln());
                (-ln_t / theta).exp()
            }
            BivariateCopula::Gumbel { theta } => {
                let (lx, ly) = ((-u.ln()).ln(), (-v.ln()).ln());
                let s = (log_sum_exp(theta * lx, theta * ly) / theta).exp();
                (-s).exp()
            }
            BivariateCopula::Frank { theta } => {
                let a = (-theta * u).exp_m1();
                let b = (-theta * v).exp_m1();
                let d = (-theta).exp_m1();
                -(a * b / d).ln_1p() / theta
            }
        }
    }

    /// h-function: the conditional CDF `h(u | v) = dC(u, v)/dv`, the
    /// probability that the first coordinate is below `u` given the second
    /// equals `v`. Monotone nondecreasing in `u`.
    pub fn h_function(&self, target_u: f64, given_v: f64) -> f64 {
        let u = clamp_unit(target_u);
        let v = clamp_unit(given_v);
        let h = match *self {
            BivariateCopula::Independence => u,
            BivariateCopula::Gaussian { rho } => {
                let x = norm_quantile(u);
                let y = norm_quantile(v);
                norm_cdf((x - rho * y) / (1.0 - rho * rho).sqrt())
            }
            BivariateCopula::Clayton { theta } => {
                let ln_t = clayton_ln_t(theta, u.ln(), v.ln());
                (-(theta + 1.0) * v.ln() - (theta + 1.0) / theta * ln_t).exp()
            }
            BivariateCopula::Gumbel { theta } => {
                let (lx, ly) = ((-u.ln()).ln(), (-v.ln()).ln());
                let ln_s = log_sum_exp(theta * lx, theta * ly) / theta;
                let s = ln_s.exp();
                (-s - v.ln() + (theta - 1.0) * ly + (1.0 - theta) * ln_s).exp()
            }
            BivariateCopula::Frank { theta } => {
                let a = (-theta * u).exp_m1();
                let b = (-theta * v).exp_m1();
                let d = (-theta).exp_m1();
                a.abs() * (-theta * v).exp() / (d + a * b).abs()
            }
        };
        clamp_unit(h)
    }

    /// Inverse of the h-function in its first argument:
    /// `h_function(h_inverse(w | v), v) = w`. Closed forms are used for the
    /// independence, Gaussian, Clayton and Frank families; Gumbel falls back
    /// to a bracketed Newton/bisection search.
    pub fn h_inverse(&self, target_w: f64, given_v: f64) -> Result<f64> {
        let w = clamp_unit(target_w);
        let v = clamp_unit(given_v);
        let u = match *self {
            BivariateCopula::Independence => w,
            BivariateCopula::Gaussian { rho } => {
                let zw = norm_quantile(w);
                let y = norm_quantile(v);
                norm_cdf((1.0 - rho * rho).sqrt() * zw + rho * y)
            }
            BivariateCopula::Clayton { theta } => {
                // t = (w v^(theta+1))^(-theta/(theta+1)); u = (t - v^-theta + 1)^(-1/theta)
                let ln_t = -theta / (theta + 1.0) * w.ln() - theta * v.ln();
                let ln_v_pow = -theta * v.ln();
                // inner = t - v^-theta + 1, with t >= v^-theta guaranteed.
                let ln_inner = ln_t + (-(ln_v_pow - ln_t).exp() + (-ln_t).exp()).ln_1p();
                (-ln_inner / theta).exp()
            }
            BivariateCopula::Gumbel { .. } => self.bracketed_h_inverse(w, v)?,
            BivariateCopula::Frank { theta } => {
                let d = (-theta).exp_m1();
                let denom = (-theta * v).exp() * (1.0 - w) + w;
                -(w * d / denom).ln_1p() / theta
            }
        };
        if !u.is_finite() {
            return Err(Error::NonFinite {
                context: format!("h_inverse for {}", self.family()),
            });
        }
        Ok(clamp_unit(u))
    }

    /// Monotone root search for `h(u | v) = w` on the open unit interval:
    /// bisection with Newton acceleration (the derivative of h in its first
    /// argument is the copula density).
    fn bracketed_h_inverse(&self, w: f64, v: f64) -> Result<f64> {
        let mut lo = CLAMP_EPS;
        let mut hi = 1.0 - CLAMP_EPS;
        let mut u = w; // warm start
        for _ in 0..200 {
            let h = self.h_function(u, v);
            let err = h - w;
            if err.abs() < 1e-12 {
                return Ok(u);
            }
            if err > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let slope = self.density(UnitPair::new(u, v));
            let newton = u - err / slope.max(1e-12);
            u = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                return Ok(u);
            }
        }
        // Bisection has narrowed the bracket far enough for the round-trip
        // tolerance even without early exit.
        if hi - lo < 1e-9 {
            Ok(0.5 * (lo + hi))
        } else {
            Err(Error::NonConvergence("h_inverse root search"))
        }
    }

    /// Kendall's tau implied by the parameter.
    ///
    /// Gaussian: `tau = (2/pi) asin(rho)`; Clayton: `theta/(theta+2)`;
    /// Gumbel: `1 - 1/theta`; Frank: `1 + 4 (D1(theta) - 1)/theta` with the
    /// first Debye function evaluated by quadrature.
    pub fn param_to_tau(&self) -> f64 {
        match *self {
            BivariateCopula::Independence => 0.0,
            BivariateCopula::Gaussian { rho } => 2.0 / std::f64::consts::PI * rho.asin(),
            BivariateCopula::Clayton { theta } => theta / (theta + 2.0),
            BivariateCopula::Gumbel { theta } => 1.0 - 1.0 / theta,
            BivariateCopula::Frank { theta } => frank_tau(theta),
        }
    }
}

/// log(u^-theta + v^-theta - 1) evaluated stably from log u, log v.
fn clayton_ln_t(theta: f64, lu: f64, lv: f64) -> f64 {
    let a = -theta * lu;
    let b = -theta * lv;
    if a.max(b) > 33.0 {
        // The -1 term is below resolution; plain log-sum-exp.
        log_sum_exp(a, b)
    } else {
        (a.exp_m1() + b.exp_m1()).ln_1p()
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// First Debye function D1 at theta, extended oddly for negative arguments;
/// `tau = 1 + 4 (D1(theta) - 1) / theta`.
fn frank_tau(theta: f64) -> f64 {
    if theta < 0.0 {
        return -frank_tau(-theta);
    }
    let upper = theta.min(60.0);
    let rule = gauss_legendre(128);
    let integral = rule.integrate(0.0, upper, |t| {
        if t < 1e-12 {
            1.0
        } else {
            t / t.exp_m1()
        }
    });
    // Tail of t/(e^t - 1) beyond 60 is below 1e-23.
    let d1 = integral / theta;
    1.0 + 4.0 * (d1 - 1.0) / theta
}

/// Invert `param_to_tau` for a family. Errors when the tau is outside the
/// family's attainable range (Clayton needs tau in (0,1), Gumbel in [0,1),
/// Frank excludes 0, independence only admits 0).
pub fn tau_to_param(family: Family, tau: f64) -> Result<BivariateCopula> {
    if !tau.is_finite() || tau.abs() >= 1.0 {
        return Err(Error::UnattainableTau {
            family: family.name(),
            tau,
        });
    }
    match family {
        Family::Independence => {
            if tau == 0.0 {
                Ok(BivariateCopula::Independence)
            } else {
                Err(Error::UnattainableTau {
                    family: "independence",
                    tau,
                })
            }
        }
        Family::Gaussian => BivariateCopula::new(
            Family::Gaussian,
            Some((std::f64::consts::PI * tau / 2.0).sin()),
        ),
        Family::Clayton => {
            if tau <= 0.0 {
                return Err(Error::UnattainableTau {
                    family: "clayton",
                    tau,
                });
            }
            BivariateCopula::new(Family::Clayton, Some(2.0 * tau / (1.0 - tau)))
        }
        Family::Gumbel => {
            if tau < 0.0 {
                return Err(Error::UnattainableTau {
                    family: "gumbel",
                    tau,
                });
            }
            BivariateCopula::new(Family::Gumbel, Some(1.0 / (1.0 - tau)))
        }
        Family::Frank => {
            if tau == 0.0 {
                return Err(Error::UnattainableTau {
                    family: "frank",
                    tau,
                });
            }
            let target = tau.abs();
            // tau is strictly increasing in theta; bisection on (0, 100].
            if target >= frank_tau(100.0) {
                return Err(Error::UnattainableTau {
                    family: "frank",
                    tau,
                });
            }
            let (mut lo, mut hi) = (1e-9, 100.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if frank_tau(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-12 {
                    break;
                }
            }
            let theta = 0.5 * (lo + hi) * tau.signum();
            BivariateCopula::new(Family::Frank, Some(theta))
        }
    }
}

/// Fitting method for [`fit_bicop`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitMethod {
    /// Invert the empirical Kendall tau (default).
    #[default]
    TauInversion,
    /// Tau inversion followed by a golden-section maximum-likelihood
    /// refinement of the single parameter.
    TauInversionMle,
}

/// Fit a copula of the given family to pairs on the copula scale.
///
/// The default method inverts the empirical Kendall tau; the MLE option
/// refines that estimate by golden-section search on the log-likelihood.
/// Requires at least 10 pairs and non-constant coordinates.
pub fn fit_bicop(pairs: &[(f64, f64)], family: Family, method: FitMethod) -> Result<BivariateCopula> {
    if pairs.len() < 10 {
        return Err(Error::TooFewObservations {
            required: 10,
            got: pairs.len(),
        });
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::ConstantColumn(0));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::ConstantColumn(1));
    }
    if family == Family::Independence {
        return Ok(BivariateCopula::Independence);
    }
    let tau = crate::learn::kendall_tau(&xs, &ys)?;
    // Clamp the empirical tau away from the +-1 boundary so inversion stays
    // in the parameter domain.
    let tau = tau.clamp(-0.999, 0.999);
    let start = tau_to_param(family, tau)?;
    match method {
        FitMethod::TauInversion => Ok(start),
        FitMethod::TauInversionMle => Ok(mle_refine(pairs, start)),
    }
}

/// Golden-section search on the log-likelihood around the tau-inverted
/// start; falls back to the start when refinement does not improve it.
fn mle_refine(pairs: &[(f64, f64)], start: BivariateCopula) -> BivariateCopula {
    let family = start.family();
    let p0 = match start.parameter() {
        Some(p) => p,
        None => return start,
    };
    let (lo, hi) = match family {
        Family::Gaussian => ((p0 - 0.25).max(-0.9999), (p0 + 0.25).min(0.9999)),
        Family::Clayton => ((p0 / 3.0).max(1e-6), (p0 * 3.0).min(200.0)),
        Family::Gumbel => ((p0 / 2.0).max(1.0), (p0 * 2.0).min(100.0)),
        Family::Frank => {
            if p0 > 0.0 {
                ((p0 / 3.0).max(1e-6), (p0 * 3.0).min(100.0))
            } else {
                ((p0 * 3.0).max(-100.0), (p0 / 3.0).min(-1e-6))
            }
        }
        Family::Independence => return start,
    };
    let loglik = |param: f64| -> f64 {
        match BivariateCopula::new(family, Some(param)) {
            Ok(c) => pairs
                .iter()
                .map(|&(u, v)| c.log_density(UnitPair::new(u, v)))
                .sum(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (loglik(c), loglik(d));
    for _ in 0..120 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = loglik(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = loglik(d);
        }
        if (b - a).abs() < 1e-10 {
            break;
        }
    }
    let best = 0.5 * (a + b);
    match BivariateCopula::new(family, Some(best)) {
        Ok(refined) if loglik(best) >= loglik(p0) => refined,
        _ => start,
    }
}
