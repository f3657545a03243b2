//! State vectors over sector bases, dimer product states, and per-site
//! reduced density matrices.

use std::sync::Arc;

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::params::{BBParams, SiteState};

/// Which end of the chain carries the unpaired spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeSide {
    /// |phi>_1 |s>_23 ... |s>_{N-1,N}
    LeftFree,
    /// |s>_12 ... |s>_{N-2,N-1} |phi>_N
    RightFree,
}

/// The state carried by the unpaired spin.
#[derive(Debug, Clone, PartialEq)]
pub enum FreeSpin {
    /// A Jz eigenstate; the dimer state then lives in the sector M = m.
    Pure(SiteState),
    /// General qutrit amplitudes (requires a full-basis StateVector).
    Amplitudes([Complex64; 3]),
}

impl FreeSpin {
    fn amplitudes(&self) -> [Complex64; 3] {
        match self {
            FreeSpin::Pure(s) => {
                let mut a = [Complex64::new(0.0, 0.0); 3];
                a[s.digit()] = Complex64::new(1.0, 0.0);
                a
            }
            FreeSpin::Amplitudes(a) => *a,
        }
    }
}

/// Unit-norm complex amplitudes over a basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub basis: Arc<SectorBasis>,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes after checking normalization (within 1e-8); the
    /// library never renormalizes silently.
    pub fn new(basis: Arc<SectorBasis>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::config(format!(
                "amplitude vector has length {}, basis dimension is {}",
                amps.len(),
                basis.dim()
            )));
        }
        let psi = StateVector { basis, amps };
        let n = psi.norm();
        if (n - 1.0).abs() > 1e-8 {
            return Err(Error::domain(format!("state vector is not normalized: ||psi|| = {n}")));
        }
        Ok(psi)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Singlet pair amplitudes over two-site digit pairs: (+1,-1) and (-1,+1)
/// carry 1/sqrt(3), (0,0) carries -1/sqrt(3).
const SINGLET_TERMS: [(usize, usize, f64); 3] = [(0, 2, 1.0), (2, 0, 1.0), (1, 1, -1.0)];

/// Product state with the free spin at one end and singlets on every
/// remaining adjacent pair.
///
/// For a sector basis the free spin must be a pure Jz eigenstate whose m
/// equals the sector magnetization; general amplitudes mix sectors and need
/// a full basis.
pub fn dimer_state(
    basis: &Arc<SectorBasis>,
    side: FreeSide,
    free: &FreeSpin,
) -> Result<StateVector> {
    let n = basis.n_sites();
    if n % 2 == 0 {
        return Err(Error::domain(format!("dimer states need an odd chain, got N = {n}")));
    }
    if let Some(m) = basis.magnetization() {
        match free {
            FreeSpin::Pure(s) if s.m() == m => {}
            FreeSpin::Pure(s) => {
                return Err(Error::config(format!(
                    "free spin m = {} does not match the sector M = {}; \
                     build the basis for M = {} or use a full basis",
                    s.m(),
                    m,
                    s.m()
                )));
            }
            FreeSpin::Amplitudes(_) => {
                return Err(Error::config(
                    "general free-spin amplitudes mix magnetization sectors; \
                     use SectorBasis::full for this state"
                        .to_string(),
                ));
            }
        }
    }

    let free_site = match side {
        FreeSide::LeftFree => 0usize,
        FreeSide::RightFree => n - 1,
    };
    let pair_starts: Vec<usize> = match side {
        FreeSide::LeftFree => (1..n).step_by(2).collect(),
        FreeSide::RightFree => (0..n - 1).step_by(2).collect(),
    };
    let n_pairs = pair_starts.len();
    let weight = 1.0 / 3.0_f64.powf(n_pairs as f64 / 2.0);
    let free_amp = free.amplitudes();

    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dim()];
    let mut digits = vec![0usize; n];
    // iterate over the 3^n_pairs singlet term choices
    for term in 0..3usize.pow(n_pairs as u32) {
        let mut sign = 1.0;
        let mut rest = term;
        for &p in &pair_starts {
            let (da, db, s) = SINGLET_TERMS[rest % 3];
            rest /= 3;
            digits[p] = da;
            digits[p + 1] = db;
            sign *= s;
        }
        for free_digit in 0..3usize {
            let a = free_amp[free_digit];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            digits[free_site] = free_digit;
            let code = basis.pack(&digits);
            if let Some(ord) = basis.ordinal(code) {
                amps[ord] += a * sign * weight;
            }
        }
    }
    StateVector::new(Arc::clone(basis), amps)
}

/// Overlap target and initial state of the transfer protocol for a pure
/// transported state; handy wrapper fixing the sector.
pub fn protocol_endpoints(
    params: &BBParams,
    phi: SiteState,
) -> Result<(Arc<SectorBasis>, StateVector, StateVector)> {
    params.require_protocol()?;
    let basis = Arc::new(SectorBasis::new(params.n_sites, phi.m())?);
    let start = dimer_state(&basis, FreeSide::LeftFree, &FreeSpin::Pure(phi))?;
    let target = dimer_state(&basis, FreeSide::RightFree, &FreeSpin::Pure(phi))?;
    Ok((basis, start, target))
}

/// Reduced density matrix of one site (1-based index), obtained by tracing
/// out every other site. Hermitian with unit trace.
pub fn reduced_density(psi: &StateVector, site: usize) -> Result<Matrix3<Complex64>> {
    let n = psi.basis.n_sites();
    if site == 0 || site > n {
        return Err(Error::domain(format!("site index {site} outside 1..={n}")));
    }
    let site0 = site - 1;
    let pow = psi.basis.power_of_three(site0) as u64;
    // group amplitudes by the configuration of all other sites
    let mut groups: std::collections::HashMap<u64, [Complex64; 3]> =
        std::collections::HashMap::with_capacity(psi.dim() / 2 + 1);
    for (ord, &amp) in psi.amps.iter().enumerate() {
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        let code = psi.basis.code(ord) as u64;
        let digit = ((code / pow) % 3) as usize;
        let rest = code - digit as u64 * pow;
        groups.entry(rest).or_insert([Complex64::new(0.0, 0.0); 3])[digit] += amp;
    }
    let mut rho = Matrix3::<Complex64>::zeros();
    for (_, c) in groups {
        for a in 0..3 {
            for b in 0..3 {
                rho[(a, b)] += c[a] * c[b].conj();
            }
        }
    }
    Ok(rho)
}

/// Population <m|rho_site|m> of a Jz eigenstate on one site (1-based).
pub fn site_population(psi: &StateVector, site: usize, m: SiteState) -> Result<f64> {
    let n = psi.basis.n_sites();
    if site == 0 || site > n {
        return Err(Error::domain(format!("site index {site} outside 1..={n}")));
    }
    let site0 = site - 1;
    let digit = m.digit();
    let mut p = 0.0;
    for (ord, amp) in psi.amps.iter().enumerate() {
        if psi.basis.digit_of(psi.basis.code(ord), site0) == digit {
            p += amp.norm_sqr();
        }
    }
    Ok(p)
}

/// Expectation of the total Jz in a state.
pub fn total_magnetization(psi: &StateVector) -> f64 {
    psi.amps
        .iter()
        .enumerate()
        .map(|(ord, amp)| psi.basis.total_m(psi.basis.code(ord)) as f64 * amp.norm_sqr())
        .sum()
}
