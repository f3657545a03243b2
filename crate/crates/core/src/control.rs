//! Adiabaticity diagnostics and synthesis of window-shaped coupling paths.
//!
//! The optimized path flattens dx/dt where the gap closes and the coupling
//! peaks: substituting the accumulated gap phase as the integration variable
//! turns the first-order excitation amplitude into a Fourier transform of
//! u(tau) = (dx/dtau) c(x(tau)), which is then shaped as a Blackman window
//! to suppress its side lobes.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::profile::SpectralProfile;
use crate::rk::dp45;
use crate::schedule::{CouplingSchedule, ScheduleTable};

/// Blackman window u0(tau) = 0.42 - 0.5 cos(2 pi tau) + 0.08 cos(4 pi tau)
/// on tau in [0, 1]; zero at both ends, single maximum 1 at tau = 1/2.
pub fn blackman_window(tau: f64) -> f64 {
    0.42 - 0.5 * (2.0 * PI * tau).cos() + 0.08 * (4.0 * PI * tau).cos()
}

/// Minimal duration scale for adiabatic transfer: max_x c(x) / min_x Delta(x).
/// The protocol needs T well above this value.
pub fn adiabatic_threshold(profile: &SpectralProfile) -> Result<f64> {
    if profile.x_samples.is_empty() {
        return Err(Error::domain("empty profile"));
    }
    let min_gap = profile.min_gap();
    if !(min_gap > 0.0) {
        return Err(Error::domain(format!("profile gap must be positive, min = {min_gap}")));
    }
    Ok(profile.max_coupling() / min_gap)
}

/// First-order estimate of the excited-band population after one sweep.
#[derive(Debug, Clone, Copy)]
pub struct ExcitationEstimate {
    pub probability: f64,
    /// False when the estimate exceeds 1 and first-order theory has broken
    /// down; the value is reported unclamped.
    pub first_order_valid: bool,
    /// Quadrature nodes used by the converged evaluation.
    pub nodes: usize,
}

struct ProfileFns {
    gap: MonotoneCubic,
    coupling: MonotoneCubic,
}

fn profile_fns(profile: &SpectralProfile) -> Result<ProfileFns> {
    let (gap, coupling) = profile.interpolants()?;
    Ok(ProfileFns { gap, coupling })
}

/// |int_0^T dt exp(i int_0^t Delta) c(x) dx/dt|^2 on a fixed RK4 grid.
pub fn excitation_probability_with_nodes(
    profile: &SpectralProfile,
    schedule: &CouplingSchedule,
    nodes: usize,
) -> Result<f64> {
    let fns = profile_fns(profile)?;
    Ok(excitation_once(&fns, schedule, nodes))
}

fn excitation_once(fns: &ProfileFns, schedule: &CouplingSchedule, nodes: usize) -> f64 {
    let duration = schedule.duration();
    // state: (phase, Re I, Im I)
    let deriv = |t: f64, phase: f64| -> (f64, f64, f64) {
        let x = schedule.x_at(t);
        let dphase = fns.gap.eval(x);
        let amp = fns.coupling.eval(x) * schedule.slope_at(t);
        (dphase, amp * phase.cos(), amp * phase.sin())
    };
    let mut phase = 0.0;
    let mut re = 0.0;
    let mut im = 0.0;
    // steps never straddle a slope discontinuity of the schedule
    let breaks = schedule.breakpoints();
    for seg in breaks.windows(2) {
        let len = seg[1] - seg[0];
        if len <= 0.0 {
            continue;
        }
        let m = ((nodes as f64 * len / duration).round() as usize).max(1);
        let h = len / m as f64;
        for k in 0..m {
            let t = seg[0] + k as f64 * h;
            // sample slopes strictly inside the segment
            let eps = 1e-9 * h;
            let (p1, r1, i1) = deriv(t + eps, phase);
            let (p2, r2, i2) = deriv(t + h / 2.0, phase + h / 2.0 * p1);
            let (p3, r3, i3) = deriv(t + h / 2.0, phase + h / 2.0 * p2);
            let (p4, r4, i4) = deriv(t + h - eps, phase + h * p3);
            phase += h / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
            re += h / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
            im += h / 6.0 * (i1 + 2.0 * i2 + 2.0 * i3 + i4);
        }
    }
    re * re + im * im
}

/// Converged first-order excitation estimate: the node count doubles until
/// the probability moves by less than 1e-8 relative.
pub fn perturbative_excitation(
    profile: &SpectralProfile,
    schedule: &CouplingSchedule,
) -> Result<ExcitationEstimate> {
    let fns = profile_fns(profile)?;
    let duration = schedule.duration();
    // resolve the fastest phase: a handful of nodes per radian of gap phase
    let max_gap = profile.gap.iter().cloned().fold(0.0, f64::max);
    let mut nodes = ((duration * max_gap * 4.0) as usize).next_power_of_two().max(1024);
    let cap = 1usize << 24;
    let mut prev = excitation_once(&fns, schedule, nodes);
    loop {
        let next_nodes = nodes * 2;
        let cur = excitation_once(&fns, schedule, next_nodes);
        // relative convergence with an absolute floor for probabilities that
        // have decayed to rounding level
        let denom = cur.abs().max(1e-18);
        if ((cur - prev) / denom).abs() < 1e-8 {
            return Ok(ExcitationEstimate {
                probability: cur,
                first_order_valid: cur <= 1.0,
                nodes: next_nodes,
            });
        }
        if next_nodes >= cap {
            return Err(Error::Convergence {
                what: "excitation-probability quadrature".to_string(),
                residual: ((cur - prev) / denom).abs(),
                iterations: next_nodes,
            });
        }
        nodes = next_nodes;
        prev = cur;
    }
}

/// Independent route for the linear ramp, integrating over x instead of t:
/// p = |int_{-1}^{1} dx c(x) exp(i (T/2) int_x^1 Delta)|^2.
pub fn linear_excitation_x_route(
    profile: &SpectralProfile,
    duration: f64,
    nodes: usize,
) -> Result<f64> {
    let fns = profile_fns(profile)?;
    let h = 2.0 / nodes as f64; // x runs 1 -> -1
    let deriv = |x: f64, phase: f64| -> (f64, f64, f64) {
        // d(phase)/dx with phase(x) = (T/2) int_x^1 Delta
        let dphase = -duration / 2.0 * fns.gap.eval(x);
        let c = fns.coupling.eval(x);
        (dphase, c * phase.cos(), c * phase.sin())
    };
    let mut phase = 0.0;
    let mut re = 0.0;
    let mut im = 0.0;
    for k in 0..nodes {
        let x = 1.0 - k as f64 * h;
        let step = -h;
        let (p1, r1, i1) = deriv(x, phase);
        let (p2, r2, i2) = deriv(x + step / 2.0, phase + step / 2.0 * p1);
        let (p3, r3, i3) = deriv(x + step / 2.0, phase + step / 2.0 * p2);
        let (p4, r4, i4) = deriv(x + step, phase + step * p3);
        phase += step / 6.0 * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
        re += step / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4);
        im += step / 6.0 * (i1 + 2.0 * i2 + 2.0 * i3 + i4);
    }
    Ok(re * re + im * im)
}

/// A synthesized coupling path with dense knots.
#[derive(Debug, Clone)]
pub struct OptimizedPath {
    pub duration: f64,
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    /// Provenance of the profile the path was derived from.
    pub n_sites: usize,
    pub theta: f64,
    pub alpha: f64,
}

impl OptimizedPath {
    pub fn to_schedule(&self) -> Result<CouplingSchedule> {
        Ok(CouplingSchedule::Table(ScheduleTable::new(
            self.duration,
            self.times.clone(),
            self.xs.clone(),
        )?))
    }

    /// CSV export `t,x`, one row per knot.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x")?;
        for (t, x) in self.times.iter().zip(&self.xs) {
            writeln!(w, "{:.16e},{:.16e}", t, x)?;
        }
        Ok(())
    }
}

/// Boundary tolerance on x(1) = -1 met by the shooting stage.
pub const SHOOTING_TARGET: f64 = 1e-9;
const PATH_KNOTS: usize = 4096;

/// Integrate dx/dtau = -amplitude * u0(tau) / c(x) together with
/// ds/dtau = 1 / Delta(x) from tau = 0 to 1; optionally record dense knots.
fn integrate_path(
    fns: &ProfileFns,
    amplitude: f64,
    record: Option<&mut (Vec<f64>, Vec<f64>)>,
) -> Result<(f64, f64)> {
    let rhs = |tau: f64, y: &[f64], dy: &mut [f64]| {
        let c = fns.coupling.eval(y[0]).max(1e-12);
        dy[0] = -amplitude * blackman_window(tau) / c;
        dy[1] = 1.0 / fns.gap.eval(y[0]).max(1e-300);
    };
    // integration noise must sit well below the shooting target
    let (rtol, atol) = (1e-12, 1e-14);
    let mut y = vec![1.0, 0.0];
    match record {
        None => {
            dp45(rhs, 0.0, 1.0, &mut y, rtol, atol)?;
        }
        Some((xs, ss)) => {
            xs.push(y[0]);
            ss.push(y[1]);
            for k in 0..PATH_KNOTS {
                let t0 = k as f64 / PATH_KNOTS as f64;
                let t1 = (k + 1) as f64 / PATH_KNOTS as f64;
                dp45(rhs, t0, t1, &mut y, rtol, atol)?;
                xs.push(y[0]);
                ss.push(y[1]);
            }
        }
    }
    Ok((y[0], y[1]))
}

/// Builds the optimized path x(t) for a given total duration:
/// 1. shape dx/dtau * c(x) as a Blackman window, fixing the window amplitude
///    by shooting until x(1) = -1;
/// 2. recover physical time from the accumulated inverse gap,
///    t(tau) = T * s(tau) / s(1) with s(tau) = int_0^tau dtau' / Delta.
pub fn synthesize_optimized_path(
    profile: &SpectralProfile,
    duration: f64,
) -> Result<OptimizedPath> {
    if !(duration > 0.0) {
        return Err(Error::domain(format!("path duration must be positive, got {duration}")));
    }
    let lo_x = profile.x_samples.first().copied().unwrap_or(0.0);
    let hi_x = profile.x_samples.last().copied().unwrap_or(0.0);
    if lo_x > -1.0 + 1e-9 || hi_x < 1.0 - 1e-9 || profile.x_samples.len() < 16 {
        return Err(Error::config(
            "path synthesis needs a dense profile covering x in [-1, 1]".to_string(),
        ));
    }
    let fns = profile_fns(profile)?;

    // bracket the window amplitude
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut expansions = 0;
    while integrate_path(&fns, hi, None)?.0 > -1.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(Error::Convergence {
                what: "path shooting bracket expansion".to_string(),
                residual: f64::INFINITY,
                iterations: expansions,
            });
        }
    }
    // bisection on the final x; monotone in the amplitude
    let mut amplitude = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..100 {
        amplitude = 0.5 * (lo + hi);
        let (x_end, _) = integrate_path(&fns, amplitude, None)?;
        let defect = x_end + 1.0;
        if defect.abs() <= SHOOTING_TARGET {
            converged = true;
            break;
        }
        if defect > 0.0 {
            lo = amplitude;
        } else {
            hi = amplitude;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            what: "path shooting bisection".to_string(),
            residual: (integrate_path(&fns, amplitude, None)?.0 + 1.0).abs(),
            iterations: 100,
        });
    }

    let mut knots = (Vec::with_capacity(PATH_KNOTS + 1), Vec::with_capacity(PATH_KNOTS + 1));
    integrate_path(&fns, amplitude, Some(&mut knots))?;
    let (xs, ss) = knots;
    let s_total = *ss.last().unwrap();
    let times: Vec<f64> = ss.iter().map(|s| duration * s / s_total).collect();

    for w in xs.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::domain(
                "synthesized path is not strictly monotone in x".to_string(),
            ));
        }
    }
    // The shooting defect is below 1e-9; absorb it by an affine rescale so
    // the knots span exactly [-1, 1] while staying strictly monotone.
    let mut xs = xs;
    let last = xs.len() - 1;
    let span = xs[0] - xs[last];
    if (span - 2.0).abs() > 1e-8 {
        return Err(Error::Convergence {
            what: "path boundary defect after shooting".to_string(),
            residual: (span - 2.0).abs(),
            iterations: 100,
        });
    }
    let x0 = xs[0];
    for x in xs.iter_mut() {
        *x = 1.0 - (x0 - *x) * 2.0 / span;
    }
    xs[last] = -1.0;
    Ok(OptimizedPath {
        duration,
        times,
        xs,
        n_sites: profile.n_sites,
        theta: profile.theta,
        alpha: profile.alpha,
    })
}
