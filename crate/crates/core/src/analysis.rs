//! Post-processing: the damped driven-oscillator model of the impurity
//! trajectory and its least-squares fit, basis-convergence deviations,
//! Thomas-Fermi radii and time averages.

use nalgebra::{Matrix3, Vector3};

use crate::error::{invalid, Error, Result};

/// Denominator of the steady-state response term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DrivenResponse {
    /// `(ω_eff² − ω_D²)² + ω_D² λ²`, without a square root.
    #[default]
    Printed,
    /// `√((ω_eff² − ω_D²)² + ω_D² λ²)`, the amplitude of a driven damped
    /// oscillator.
    Textbook,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampedParams {
    pub lambda: f64,
    pub omega_eff: f64,
    pub delta: f64,
}

impl DampedParams {
    fn to_vec(self) -> Vector3<f64> {
        Vector3::new(self.lambda, self.omega_eff, self.delta)
    }

    fn from_vec(v: &Vector3<f64>) -> Self {
        Self {
            lambda: v[0],
            omega_eff: v[1],
            delta: v[2],
        }
    }

    fn admissible(&self) -> bool {
        self.omega_eff > 0.5 * self.lambda && self.lambda.is_finite() && self.delta.is_finite()
    }
}

/// Known inputs of the model: drive amplitude and frequency and the initial
/// position. The initial velocity is `u₀ = A ω_D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveContext {
    pub amplitude: f64,
    pub omega_d: f64,
    pub x0: f64,
    pub response: DrivenResponse,
}

/// `X(t) = e^{−λt/2}[x₀ cos ω₀t + (u₀ + λx₀/2)/ω₀ sin ω₀t] + F₀ sin(ω_D t + δ)/D`
/// with `ω₀ = √(ω_eff² − λ²/4)` and `F₀ = A ω_eff²`.
pub fn damped_trajectory(p: &DampedParams, ctx: &DriveContext, t: f64) -> Result<f64> {
    if !p.admissible() {
        return Err(Error::Domain(format!(
            "need ω_eff > λ/2, got ω_eff = {}, λ = {}",
            p.omega_eff, p.lambda
        )));
    }
    Ok(eval(p, ctx, t))
}

fn eval(p: &DampedParams, ctx: &DriveContext, t: f64) -> f64 {
    let w0 = (p.omega_eff * p.omega_eff - 0.25 * p.lambda * p.lambda).sqrt();
    let u0 = ctx.amplitude * ctx.omega_d;
    let x0 = ctx.x0;
    let transient = (-0.5 * p.lambda * t).exp()
        * (x0 * (w0 * t).cos() + (u0 + 0.5 * p.lambda * x0) / w0 * (w0 * t).sin());
    let f0 = ctx.amplitude * p.omega_eff * p.omega_eff;
    let wd = ctx.omega_d;
    let det = (p.omega_eff * p.omega_eff - wd * wd).powi(2) + wd * wd * p.lambda * p.lambda;
    let denom = match ctx.response {
        DrivenResponse::Printed => det,
        DrivenResponse::Textbook => det.sqrt(),
    };
    transient + f0 * (wd * t + p.delta).sin() / denom
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Samples with `t < skip_before` are ignored; `None` means one driving
    /// period.
    pub skip_before: Option<f64>,
    /// Stop when the relative decrease of the squared residual falls below this.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            skip_before: None,
            tolerance: 1e-14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub params: DampedParams,
    /// `‖X_data − X_model‖₂` over the fitted samples.
    pub residual_norm: f64,
    pub rms: f64,
    pub samples: usize,
    pub iterations: usize,
    /// Parameter covariance `s² (JᵀJ)⁻¹`, absent when `JᵀJ` is singular.
    pub covariance: Option<[[f64; 3]; 3]>,
    /// Condition number of `JᵀJ` at the solution.
    pub condition: f64,
    /// Set when the normal matrix is numerically singular, typically for
    /// `ω_D ≈ ω_eff`.
    pub rank_deficient: bool,
}

/// Damped Gauss-Newton fit of `(λ, ω_eff, δ)` to a sampled trajectory.
pub fn fit_damped(
    times: &[f64],
    values: &[f64],
    ctx: &DriveContext,
    guess: DampedParams,
    opts: &FitOptions,
) -> Result<FitResult> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if !guess.admissible() {
        return Err(invalid("fit.guess", "initial guess needs ω_eff > λ/2"));
    }
    if !(ctx.omega_d > 0.0) {
        return Err(invalid("driving.omega_d", "fit needs a positive driving frequency"));
    }
    let skip = opts
        .skip_before
        .unwrap_or(2.0 * std::f64::consts::PI / ctx.omega_d);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= skip)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 4 {
        return Err(invalid("fit.series", "fewer than four samples after the transient cut"));
    }
    let sse = |p: &DampedParams| -> f64 { pts.iter().map(|(t, v)| (v - eval(p, ctx, *t)).powi(2)).sum() };
    let jacobian = |p: &DampedParams| -> (Matrix3<f64>, Vector3<f64>) {
        let base = p.to_vec();
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        let steps: Vec<f64> = (0..3).map(|k| 1e-6 * base[k].abs().max(1e-2)).collect();
        for (t, v) in &pts {
            let r = v - eval(p, ctx, *t);
            let mut g = Vector3::zeros();
            for k in 0..3 {
                let mut hi = base;
                let mut lo = base;
                hi[k] += steps[k];
                lo[k] -= steps[k];
                g[k] = (eval(&DampedParams::from_vec(&hi), ctx, *t) - eval(&DampedParams::from_vec(&lo), ctx, *t))
                    / (2.0 * steps[k]);
            }
            jtj += g * g.transpose();
            jtr += g * r;
        }
        (jtj, jtr)
    };

    let mut p = guess;
    let mut s = sse(&p);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let (jtj, jtr) = jacobian(&p);
        let step = match jtj.cholesky() {
            Some(ch) => ch.solve(&jtr),
            None => {
                // tiny ridge keeps the iteration alive on a singular normal matrix
                let ridge = 1e-12 * jtj.diagonal().amax().max(1e-300);
                match (jtj + Matrix3::identity() * ridge).cholesky() {
                    Some(ch) => ch.solve(&jtr),
                    None => break,
                }
            }
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = DampedParams::from_vec(&(p.to_vec() + step * alpha));
            if trial.admissible() {
                let st = sse(&trial);
                if st <= s {
                    let rel = (s - st) / s.max(1e-300);
                    p = trial;
                    s = st;
                    accepted = true;
                    if rel < opts.tolerance || s < 1e-28 {
                        converged = true;
                    }
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted || converged {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged {
            what: "damped-oscillator fit",
            iterations,
            residual: s.sqrt(),
        });
    }
    let (jtj, _) = jacobian(&p);
    let ev = jtj.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let rank_deficient = !(condition < 1e12);
    let m = pts.len();
    let covariance = if rank_deficient || m <= 3 {
        None
    } else {
        jtj.try_inverse().map(|inv| {
            let s2 = s / (m - 3) as f64;
            let c = inv * s2;
            [
                [c[(0, 0)], c[(0, 1)], c[(0, 2)]],
                [c[(1, 0)], c[(1, 1)], c[(1, 2)]],
                [c[(2, 0)], c[(2, 1)], c[(2, 2)]],
            ]
        })
    };
    Ok(FitResult {
        params: p,
        residual_norm: s.sqrt(),
        rms: (s / m as f64).sqrt(),
        samples: m,
        iterations,
        covariance,
        condition,
        rank_deficient,
    })
}

/// Entropy values below this are not used as a reference.
pub const ENTROPY_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceDelta {
    /// `|S_C − S_C'| / S_C`, `None` where `S_C` is below the floor.
    pub values: Vec<Option<f64>>,
    pub max: f64,
}

/// Pointwise relative deviation of `other` from the reference series.
pub fn convergence_delta(reference: &[f64], other: &[f64]) -> Result<ConvergenceDelta> {
    if reference.len() != other.len() {
        return Err(Error::DimensionMismatch(format!(
            "series of length {} and {}",
            reference.len(),
            other.len()
        )));
    }
    let values: Vec<Option<f64>> = reference
        .iter()
        .zip(other)
        .map(|(a, b)| (*a >= ENTROPY_FLOOR).then(|| (a - b).abs() / a))
        .collect();
    let max = values.iter().flatten().copied().fold(0.0, f64::max);
    Ok(ConvergenceDelta { values, max })
}

/// Half-width of the region where `density > threshold · max`, from the
/// outermost crossings with linear interpolation.
pub fn tf_radius(nodes: &[f64], density: &[f64], threshold: f64) -> Result<f64> {
    if nodes.len() != density.len() || nodes.len() < 2 {
        return Err(Error::DimensionMismatch("profile and nodes differ in length".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid("threshold", format!("must lie in (0, 1), got {threshold}")));
    }
    let peak = density.iter().copied().fold(f64::MIN, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Domain("density profile has no positive values".into()));
    }
    let level = threshold * peak;
    let n = density.len();
    let first = density.iter().position(|&v| v > level).expect("peak exceeds level");
    let last = density.iter().rposition(|&v| v > level).expect("peak exceeds level");
    let cross = |a: usize, b: usize| -> f64 {
        // a is outside (≤ level), b inside
        let (da, db) = (density[a], density[b]);
        nodes[a] + (level - da) / (db - da) * (nodes[b] - nodes[a])
    };
    let left = if first == 0 { nodes[0] } else { cross(first - 1, first) };
    let right = if last == n - 1 { nodes[n - 1] } else { cross(last + 1, last) };
    Ok(0.5 * (right - left))
}

/// Trapezoidal mean of `values` over `[from, to]`, using the samples inside.
pub fn time_average(times: &[f64], values: &[f64], from: f64, to: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= from && **t <= to)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 2 {
        return Err(invalid("window", "need at least two samples in the averaging window"));
    }
    let mut area = 0.0;
    for w in pts.windows(2) {
        area += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    Ok(area / (pts[pts.len() - 1].0 - pts[0].0))
}

/// Closed-form `x(t)` of `ẍ = −ω²(x − A sin ω_D t)` from rest at the origin;
/// the resonant case uses the secular limit.
pub fn driven_oscillator(amplitude: f64, omega: f64, omega_d: f64, t: f64) -> f64 {
    if (omega - omega_d).abs() < 1e-9 * omega {
        0.5 * amplitude * ((omega * t).sin() - omega * t * (omega * t).cos())
    } else {
        amplitude * omega * omega / (omega * omega - omega_d * omega_d)
            * ((omega_d * t).sin() - omega_d / omega * (omega * t).sin())
    }
}
