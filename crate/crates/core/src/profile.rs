//! Gap and non-adiabatic-coupling profiles over the coupling parameter x.
//!
//! All quantities are quoted in the transfer-protocol units (singlet
//! projector bonds): the gap scales with alpha, the coupling is
//! dimensionless and independent of alpha.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::basis::SectorBasis;
use crate::eigen::{lowest_of_matrix, EigenPair};
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::params::BBParams;
use crate::sparse::{
    build_coupling_derivative, build_transfer_hamiltonian, BondConvention, SparseSymmetric,
};

/// Sampled gap Delta(x) and coupling c(x) of the ground to first-excited
/// pair within one magnetization sector.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    pub x_samples: Vec<f64>,
    pub gap: Vec<f64>,
    pub coupling: Vec<f64>,
    pub n_sites: usize,
    pub theta: f64,
    pub alpha: f64,
}

impl SpectralProfile {
    /// CSV export with header `x,gap,coupling`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,gap,coupling")?;
        for i in 0..self.x_samples.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e}",
                self.x_samples[i], self.gap[i], self.coupling[i]
            )?;
        }
        Ok(())
    }

    /// Monotone-cubic interpolants of (gap, coupling) over x.
    pub fn interpolants(&self) -> Result<(MonotoneCubic, MonotoneCubic)> {
        let gap = MonotoneCubic::new(self.x_samples.clone(), self.gap.clone())?;
        let coupling = MonotoneCubic::new(self.x_samples.clone(), self.coupling.clone())?;
        Ok((gap, coupling))
    }

    pub fn min_gap(&self) -> f64 {
        self.gap.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_coupling(&self) -> f64 {
        self.coupling.iter().cloned().fold(0.0, f64::max)
    }
}

/// Default sampling grid: 201 uniform points on [-1, 1] plus 50 extra points
/// on [-0.1, 0.1] where both profiles peak.
pub fn default_x_grid() -> Vec<f64> {
    let mut xs: Vec<f64> = (0..201).map(|k| -1.0 + k as f64 / 100.0).collect();
    xs.extend((0..50).map(|k| -0.1 + 0.2 * k as f64 / 49.0));
    dedupe_sorted(xs)
}

fn dedupe_sorted(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    xs
}

fn check_profile_inputs(params: &BBParams, x_samples: &[f64], m: i32) -> Result<()> {
    params.require_protocol()?;
    if x_samples.is_empty() {
        return Err(Error::domain("profile needs at least one x sample"));
    }
    for &x in x_samples {
        if !(-1.0..=1.0).contains(&x) {
            return Err(Error::domain(format!("x sample {x} outside [-1, 1]")));
        }
    }
    if m.unsigned_abs() as usize > params.n_sites {
        return Err(Error::domain(format!("|M| = {} exceeds N = {}", m, params.n_sites)));
    }
    Ok(())
}

/// Eigenstates entering one coupling sample: ground state plus the cluster of
/// (near-)degenerate first-excited states.
struct SamplePoint {
    gap: f64,
    coupling: f64,
}

/// Levels closer than this (in units of alpha) to the first excited state
/// count as one degenerate cluster.
const CLUSTER_TOL_ALPHA: f64 = 1e-8;
/// Gap below this (in units of alpha) is treated as a level crossing.
const GAP_COLLAPSE_ALPHA: f64 = 1e-10;

fn sample_point(
    matrix: &SparseSymmetric,
    deriv: &SparseSymmetric,
    alpha: f64,
    want_coupling: bool,
) -> Result<SamplePoint> {
    let dim = matrix.dim();
    if dim < 2 {
        return Err(Error::domain(
            "sector is too small to define a gap".to_string(),
        ));
    }
    let cluster_tol = CLUSTER_TOL_ALPHA * alpha;
    let mut k = 3.min(dim);
    let pairs: Vec<EigenPair> = loop {
        let pairs = lowest_of_matrix(matrix, k)?;
        if !want_coupling {
            break pairs;
        }
        // The cluster is closed once the last computed level clearly exceeds
        // the first excited one (or we hold the whole spectrum).
        if k == dim || pairs[k - 1].energy - pairs[1].energy > cluster_tol {
            break pairs;
        }
        let next = match k {
            0..=3 => 8,
            4..=8 => 16,
            _ => 24,
        };
        if next <= k {
            break pairs;
        }
        if 4 * next >= dim {
            // close the cluster exactly on small sectors
            k = dim.min(1500);
            if k <= 4 || 4 * k < dim {
                break pairs;
            }
            break lowest_of_matrix(matrix, k)?;
        }
        k = next;
    };

    let e0 = pairs[0].energy;
    let e1 = pairs[1].energy;
    let gap = e1 - e0;
    if gap < GAP_COLLAPSE_ALPHA * alpha {
        return Err(Error::domain(format!(
            "gap collapsed to {gap:.3e}; levels are effectively degenerate"
        )));
    }
    if !want_coupling {
        return Ok(SamplePoint { gap, coupling: 0.0 });
    }

    // |<excited| dH/dx |ground>| summed in quadrature over the degenerate
    // cluster; basis-independent under rotations within the cluster.
    let mut dv = vec![0.0; dim];
    deriv.matvec(&pairs[0].vector, &mut dv);
    let mut sq = 0.0;
    for p in pairs.iter().skip(1) {
        if p.energy - e1 > cluster_tol {
            break;
        }
        let me: f64 = p.vector.iter().zip(&dv).map(|(a, b)| a * b).sum();
        sq += me * me;
    }
    Ok(SamplePoint {
        gap,
        coupling: sq.sqrt() / gap,
    })
}

fn profile_engine(
    params: &BBParams,
    x_samples: &[f64],
    m: i32,
    want_coupling: bool,
) -> Result<SpectralProfile> {
    check_profile_inputs(params, x_samples, m)?;
    let basis = Arc::new(SectorBasis::new(params.n_sites, m)?);
    let deriv = build_coupling_derivative(params, &basis, BondConvention::DimerProjector)?;
    let points: Result<Vec<SamplePoint>> = x_samples
        .par_iter()
        .map(|&x| {
            let h = build_transfer_hamiltonian(params, x, &basis)?;
            sample_point(&h.matrix, &deriv, params.alpha, want_coupling)
        })
        .collect();
    let points = points?;
    Ok(SpectralProfile {
        x_samples: x_samples.to_vec(),
        gap: points.iter().map(|p| p.gap).collect(),
        coupling: points.iter().map(|p| p.coupling).collect(),
        n_sites: params.n_sites,
        theta: params.theta,
        alpha: params.alpha,
    })
}

/// Gap and coupling profiles over `x_samples` in the sector with total Jz
/// equal to `m` (use m = +1 when transporting |+1>).
pub fn spectral_profile(params: &BBParams, x_samples: &[f64], m: i32) -> Result<SpectralProfile> {
    profile_engine(params, x_samples, m, true)
}

/// Gap profile Delta(x) = E1(x) - E0(x); the returned profile also carries
/// the coupling samples (shared eigensolves make them nearly free).
pub fn gap_profile(params: &BBParams, x_samples: &[f64], m: i32) -> Result<SpectralProfile> {
    profile_engine(params, x_samples, m, true)
}

/// Coupling profile c(x) = |<psi1| dH/dx |psi0>| / Delta(x), per unit x.
pub fn coupling_profile(params: &BBParams, x_samples: &[f64], m: i32) -> Result<SpectralProfile> {
    profile_engine(params, x_samples, m, true)
}

/// Grid used when minimizing the gap over x: coarse across [-1, 1], refined
/// on |x| <= 0.2 where the minimum sits.
pub fn min_gap_grid() -> Vec<f64> {
    let mut xs: Vec<f64> = (0..11).map(|k| -1.0 + k as f64 / 5.0).collect();
    xs.extend((0..17).map(|k| -0.2 + 0.4 * k as f64 / 16.0));
    dedupe_sorted(xs)
}

/// Minimal sector gap for each chain length in `n_list` (values sorted by N).
pub fn min_gap_scaling(n_list: &[usize], theta: f64) -> Result<Vec<(usize, f64)>> {
    let grid = min_gap_grid();
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    let mut out = Vec::with_capacity(ns.len());
    for n in ns {
        if n % 2 == 0 || n < 3 {
            return Err(Error::domain(format!("gap scaling needs odd N >= 3, got {n}")));
        }
        if n > 11 {
            return Err(Error::domain(format!("gap scaling is limited to N <= 11, got {n}")));
        }
        let params = BBParams::new(n, theta, 1.0, 0.0)?;
        let profile = profile_engine(&params, &grid, 1, false)?;
        out.push((n, profile.min_gap()));
    }
    Ok(out)
}

/// Least-squares line y = a*x + b with its coefficient of determination.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (a * x + b);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    (a, b, 1.0 - ss_res / ss_tot)
}
