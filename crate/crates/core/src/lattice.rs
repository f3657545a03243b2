//! Mapping from optical-lattice Bose-Hubbard parameters onto the spin chain
//! and superlattice potential profiles.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Bose-Hubbard parameters of one particle per site in a deep lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HubbardParams {
    /// Tunneling amplitude t (energy).
    pub tunneling: f64,
    /// Density interaction c0 = (g0 + 2 g2) / 3 (energy).
    pub c0: f64,
    /// Spin interaction c2 = (g2 - g0) / 3 (energy).
    pub c2: f64,
}

impl HubbardParams {
    /// Validates the perturbative regime |t/c0| <= 0.3. Ratios above 0.1 are
    /// accepted but flagged by [`HubbardParams::is_strongly_perturbative`].
    pub fn new(tunneling: f64, c0: f64, c2: f64) -> Result<Self> {
        if c0 == 0.0 {
            return Err(Error::domain("c0 must be nonzero"));
        }
        let ratio = (tunneling / c0).abs();
        if ratio > 0.3 {
            return Err(Error::domain(format!(
                "|t/c0| = {ratio:.3} is outside the perturbative regime (<= 0.3)"
            )));
        }
        Ok(HubbardParams { tunneling, c0, c2 })
    }

    /// True below the |t/c0| <= 0.1 comfort band of second-order theory.
    pub fn is_strongly_perturbative(&self) -> bool {
        (self.tunneling / self.c0).abs() <= 0.1
    }

    pub fn ctilde2(&self) -> f64 {
        self.c2 / self.c0
    }
}

/// Effective spin-coupling magnitude and mixing angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BBMapping {
    pub alpha: f64,
    pub theta: f64,
    pub ctilde2: f64,
}

impl BBMapping {
    /// Plain key-value text export.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "alpha {:.16e}", self.alpha)?;
        writeln!(w, "theta {:.16e}", self.theta)?;
        writeln!(w, "ctilde2 {:.16e}", self.ctilde2)?;
        Ok(())
    }
}

const POLE_TOL: f64 = 1e-6;

/// Second-order effective couplings of the one-particle-per-site chain:
/// bilinear A = (-2t^2/c0) / (1 + c2~) and biquadratic
/// B = (-2t^2/c0) * (1/3) * (1/(1 + c2~) + 2/(1 - 2 c2~)),
/// returned as alpha = sqrt(A^2 + B^2) >= 0 and theta = atan2(B, A).
pub fn hubbard_to_bb(hp: &HubbardParams) -> Result<BBMapping> {
    let ct = hp.ctilde2();
    if (1.0 + ct).abs() < POLE_TOL || (1.0 - 2.0 * ct).abs() < POLE_TOL {
        return Err(Error::domain(format!(
            "c2/c0 = {ct:.6} sits on a perturbation-theory pole"
        )));
    }
    let scale = -2.0 * hp.tunneling * hp.tunneling / hp.c0;
    let a = scale / (1.0 + ct);
    let b = scale / 3.0 * (1.0 / (1.0 + ct) + 2.0 / (1.0 - 2.0 * ct));
    Ok(BBMapping {
        alpha: a.hypot(b),
        theta: b.atan2(a),
        ctilde2: ct,
    })
}

/// c2/c0 from the scattering lengths of the S = 0 and S = 2 channels,
/// using g_S proportional to a_S: (a2 - a0) / (a0 + 2 a2).
pub fn scattering_to_ctilde(a0: f64, a2: f64) -> Result<f64> {
    let denom = a0 + 2.0 * a2;
    if denom == 0.0 {
        return Err(Error::domain("a0 + 2 a2 must be nonzero"));
    }
    Ok((a2 - a0) / denom)
}

/// Superlattice built from standing waves at wavelength lambda and lambda/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuperlatticeConfig {
    pub intensity_half: f64,
    pub intensity_full: f64,
    /// Phase shift of the full-wavelength lattice, radians.
    pub phase_full: f64,
    pub wavelength: f64,
}

impl SuperlatticeConfig {
    pub fn new(
        intensity_half: f64,
        intensity_full: f64,
        phase_full: f64,
        wavelength: f64,
    ) -> Result<Self> {
        if intensity_half < 0.0 || intensity_full < 0.0 {
            return Err(Error::domain("lattice intensities must be non-negative"));
        }
        if !(wavelength > 0.0) {
            return Err(Error::domain("wavelength must be positive"));
        }
        Ok(SuperlatticeConfig {
            intensity_half,
            intensity_full,
            phase_full,
            wavelength,
        })
    }
}

/// The three intensity/phase stages that toggle between the two bond
/// sublattices during one transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeStage {
    /// Both lattices on, phase pi/2: every second bond suppressed.
    A,
    /// Only the half-wavelength lattice: all bonds equal.
    B,
    /// Both lattices on, phase 0: the other bond subset suppressed.
    C,
}

impl LatticeStage {
    pub fn config(self, intensity_half: f64, intensity_full: f64) -> Result<SuperlatticeConfig> {
        match self {
            LatticeStage::A => {
                SuperlatticeConfig::new(intensity_half, intensity_full, std::f64::consts::FRAC_PI_2, 1.0)
            }
            LatticeStage::B => SuperlatticeConfig::new(intensity_half, 0.0, std::f64::consts::FRAC_PI_2, 1.0),
            LatticeStage::C => SuperlatticeConfig::new(intensity_half, intensity_full, 0.0, 1.0),
        }
    }
}

/// V(x) = I_half cos^2(2 pi x/(lambda/2)) + I_full cos^2(2 pi x/lambda + phi),
/// sampled at positions given in units of lambda.
pub fn superlattice_potential(cfg: &SuperlatticeConfig, positions: &[f64]) -> Vec<f64> {
    positions
        .iter()
        .map(|&pos| {
            let half = (4.0 * std::f64::consts::PI * pos).cos().powi(2);
            let full = (2.0 * std::f64::consts::PI * pos + cfg.phase_full).cos().powi(2);
            cfg.intensity_half * half + cfg.intensity_full * full
        })
        .collect()
}

/// CSV export `x_over_lambda,V`.
pub fn write_potential_csv<W: Write>(
    mut w: W,
    positions: &[f64],
    values: &[f64],
) -> Result<()> {
    writeln!(w, "x_over_lambda,V")?;
    for (p, v) in positions.iter().zip(values) {
        writeln!(w, "{:.16e},{:.16e}", p, v)?;
    }
    Ok(())
}

/// One row of the simulated duration table shipped with the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DurationEntry {
    pub n_sites: usize,
    /// "linear" or "optimized".
    pub schedule: ScheduleKind,
    /// Dimensionless duration T * alpha.
    pub t_alpha: f64,
    /// Transfer error 1 - F reached at that duration.
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScheduleKind {
    Linear,
    Optimized,
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ScheduleKind::Linear),
            "optimized" => Ok(ScheduleKind::Optimized),
            other => Err(Error::config(format!("unknown schedule kind '{other}'"))),
        }
    }
}

/// Simulated (N, schedule, T*alpha, error) table; regenerate with the CLI
/// sweep command when the propagation code changes.
pub fn duration_table() -> Vec<DurationEntry> {
    let raw = include_str!("../data/transfer_durations.csv");
    let mut out = Vec::new();
    for line in raw.lines().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let n_sites: usize = fields[0].parse().expect("n column");
        let schedule: ScheduleKind = fields[1].parse().expect("schedule column");
        let t_alpha: f64 = fields[2].parse().expect("t_alpha column");
        let error: f64 = fields[3].parse().expect("error column");
        out.push(DurationEntry {
            n_sites,
            schedule,
            t_alpha,
            error,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimescaleEstimate {
    pub seconds: f64,
    pub t_alpha: f64,
    pub error: f64,
    pub n_sites: usize,
}

/// Physical duration of the shortest tabulated run with transfer error below
/// `target_error`: seconds = (T * alpha) / J.
pub fn timescale_estimate(
    j_per_second: f64,
    n_sites: usize,
    target_error: f64,
    schedule: ScheduleKind,
) -> Result<TimescaleEstimate> {
    if !(j_per_second > 0.0) {
        return Err(Error::domain("coupling rate J must be positive"));
    }
    let table = duration_table();
    let best = table
        .iter()
        .filter(|e| e.n_sites == n_sites && e.schedule == schedule && e.error < target_error)
        .min_by(|a, b| a.t_alpha.total_cmp(&b.t_alpha));
    match best {
        Some(e) => Ok(TimescaleEstimate {
            seconds: e.t_alpha / j_per_second,
            t_alpha: e.t_alpha,
            error: e.error,
            n_sites,
        }),
        None => {
            let mut available: Vec<String> = table
                .iter()
                .filter(|e| e.schedule == schedule)
                .map(|e| format!("(N={}, T*alpha={}, error={:.2e})", e.n_sites, e.t_alpha, e.error))
                .collect();
            available.dedup();
            Err(Error::domain(format!(
                "no tabulated run with N = {n_sites} and error < {target_error:.2e}; \
                 available: {}",
                available.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sodium_scattering_lengths_give_ctilde_exactly() {
        let ct = scattering_to_ctilde(46.0, 52.0).unwrap();
        assert_eq!(ct, 6.0 / 150.0);
        assert_eq!(ct, 0.04);
        assert_eq!(scattering_to_ctilde(50.0, 50.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            scattering_to_ctilde(52.0, 46.0).unwrap(),
            -6.0 / 144.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn sodium_point_maps_near_the_dimerized_angle() {
        let hp = HubbardParams::new(0.05, 1.0, 0.04).unwrap();
        let map = hubbard_to_bb(&hp).unwrap();
        assert_abs_diff_eq!(map.ctilde2, 0.04, epsilon = 1e-15);
        let target = -0.74 * std::f64::consts::PI;
        assert!(
            (map.theta - target).abs() < 0.01 * std::f64::consts::PI,
            "theta = {} pi",
            map.theta / std::f64::consts::PI
        );
    }

    #[test]
    fn symmetric_channels_give_quarter_turn() {
        // c2~ = 0 makes A = B < 0, hence theta = -3 pi / 4.
        let hp = HubbardParams::new(0.02, 1.0, 0.0).unwrap();
        let map = hubbard_to_bb(&hp).unwrap();
        assert_abs_diff_eq!(map.theta, -3.0 * std::f64::consts::FRAC_PI_4, epsilon = 1e-14);
    }

    #[test]
    fn alpha_theta_reconstruct_the_couplings() {
        for &(t, c0, c2) in &[(0.05, 1.0, 0.04), (0.03, -0.8, 0.1), (0.08, 1.3, -0.2)] {
            let hp = HubbardParams::new(t, c0, c2).unwrap();
            let map = hubbard_to_bb(&hp).unwrap();
            assert!(map.alpha >= 0.0);
            let ct = c2 / c0;
            let scale = -2.0 * t * t / c0;
            let a = scale / (1.0 + ct);
            let b = scale / 3.0 * (1.0 / (1.0 + ct) + 2.0 / (1.0 - 2.0 * ct));
            assert_abs_diff_eq!(map.alpha * map.theta.cos(), a, epsilon = 1e-12);
            assert_abs_diff_eq!(map.alpha * map.theta.sin(), b, epsilon = 1e-12);
        }
    }

    #[test]
    fn doubling_tunneling_quadruples_alpha() {
        let a = hubbard_to_bb(&HubbardParams::new(0.02, 1.0, 0.04).unwrap()).unwrap();
        let b = hubbard_to_bb(&HubbardParams::new(0.04, 1.0, 0.04).unwrap()).unwrap();
        assert_abs_diff_eq!(b.alpha, 4.0 * a.alpha, epsilon = 1e-12);
        assert_abs_diff_eq!(b.theta, a.theta, epsilon = 1e-14);
    }

    #[test]
    fn rejects_poles_and_deep_tunneling() {
        assert!(HubbardParams::new(0.5, 1.0, 0.0).is_err());
        let near_pole = HubbardParams::new(0.01, 1.0, -0.9999999).unwrap();
        assert!(hubbard_to_bb(&near_pole).is_err());
        let near_pole2 = HubbardParams::new(0.01, 1.0, 0.49999999).unwrap();
        assert!(hubbard_to_bb(&near_pole2).is_err());
    }

    #[test]
    fn potential_stages_have_expected_periodicity() {
        let positions: Vec<f64> = (0..400).map(|k| k as f64 / 100.0).collect();
        // stage b: only the half lattice -> period lambda/4 in units of lambda
        let b = LatticeStage::B.config(1.0, 4.0).unwrap();
        let vb = superlattice_potential(&b, &positions);
        for (k, &p) in positions.iter().enumerate() {
            let shifted = superlattice_potential(&b, &[p + 0.25]);
            assert_abs_diff_eq!(vb[k], shifted[0], epsilon = 1e-12);
        }
        // stages a and c: period lambda/2
        for stage in [LatticeStage::A, LatticeStage::C] {
            let cfg = stage.config(1.0, 4.0).unwrap();
            let v = superlattice_potential(&cfg, &positions);
            for (k, &p) in positions.iter().enumerate() {
                let shifted = superlattice_potential(&cfg, &[p + 0.5]);
                assert_abs_diff_eq!(v[k], shifted[0], epsilon = 1e-12);
            }
            // non-negative for non-negative intensities
            for &val in &v {
                assert!(val >= 0.0);
            }
        }
        // the half-lattice barriers sit at x = 0, 1/4, 1/2, ... (its sites at
        // 1/8 + k/4); with the full lattice on at phase pi/2 every second
        // barrier is raised
        let a = LatticeStage::A.config(1.0, 4.0).unwrap();
        let barriers = superlattice_potential(&a, &[0.0, 0.25, 0.5, 0.75]);
        assert!((barriers[0] - barriers[1]).abs() > 1.0);
        assert_abs_diff_eq!(barriers[0], barriers[2], epsilon = 1e-12);
        assert_abs_diff_eq!(barriers[1], barriers[3], epsilon = 1e-12);
        // stage c raises the other subset
        let c_cfg = LatticeStage::C.config(1.0, 4.0).unwrap();
        let c_barriers = superlattice_potential(&c_cfg, &[0.0, 0.25]);
        assert!((c_barriers[0] - barriers[0]).abs() > 1.0);
        assert_abs_diff_eq!(c_barriers[0], barriers[1], epsilon = 1e-12);
        assert_abs_diff_eq!(c_barriers[1], barriers[0], epsilon = 1e-12);
        // while the half-only stage has equal barriers
        let eq = superlattice_potential(&b, &[0.0, 0.25]);
        assert_abs_diff_eq!(eq[0], eq[1], epsilon = 1e-12);
    }

    #[test]
    fn duration_table_parses_and_scales() {
        let table = duration_table();
        assert!(!table.is_empty());
        assert!(table.iter().any(|e| e.n_sites == 9 && e.schedule == ScheduleKind::Optimized));
        let est = timescale_estimate(100.0, 9, 1e-2, ScheduleKind::Optimized).unwrap();
        let est2 = timescale_estimate(200.0, 9, 1e-2, ScheduleKind::Optimized).unwrap();
        assert_abs_diff_eq!(est.seconds, 2.0 * est2.seconds, epsilon = 1e-12);
        assert!(est.error < 1e-2);
        let missing = timescale_estimate(100.0, 13, 1e-2, ScheduleKind::Optimized);
        assert!(missing.is_err());
        assert!(missing.unwrap_err().to_string().contains("available"));
    }
}
