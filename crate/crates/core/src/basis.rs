use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest chain length for which the packed-code lookup table stays small.
pub const MAX_BASIS_SITES: usize = 14;

/// Product basis of an N-site spin-1 chain, either restricted to a fixed
/// total magnetization sector or covering the full 3^N space.
///
/// Conventions:
/// - site 1 is the leftmost site; internally sites are indexed 0..N-1;
/// - a configuration is a string of digits over {0, 1, 2} with
///   digit 0 <-> m = +1, digit 1 <-> m = 0, digit 2 <-> m = -1;
/// - the packed code of a configuration is base-3 little-endian over site
///   indices: code = sum_i digit(site_i) * 3^i;
/// - states are listed in lexicographic order of the digit string read from
///   site 1 to site N, so ordinals are reproducible across runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorBasis {
    n_sites: usize,
    magnetization: Option<i32>,
    /// Packed codes in canonical order.
    states: Vec<u32>,
    /// code -> ordinal, u32::MAX marking codes outside the sector.
    #[serde(skip)]
    index: Vec<u32>,
    #[serde(skip)]
    pow3: Vec<u32>,
}

impl SectorBasis {
    /// All configurations with digit sum (total Jz) equal to `magnetization`.
    pub fn new(n_sites: usize, magnetization: i32) -> Result<Self> {
        check_sites(n_sites)?;
        if magnetization.unsigned_abs() as usize > n_sites {
            return Err(Error::domain(format!(
                "|M| = {} exceeds the chain length N = {}",
                magnetization.abs(),
                n_sites
            )));
        }
        Ok(Self::build(n_sites, Some(magnetization)))
    }

    /// The full 3^N product basis (all sectors).
    pub fn full(n_sites: usize) -> Result<Self> {
        check_sites(n_sites)?;
        Ok(Self::build(n_sites, None))
    }

    fn build(n_sites: usize, magnetization: Option<i32>) -> Self {
        let pow3: Vec<u32> = (0..n_sites).map(|i| 3u32.pow(i as u32)).collect();
        let total = 3usize.pow(n_sites as u32);
        let mut states = Vec::new();
        // Depth-first over digits d_1..d_N generates lexicographic order and
        // prunes branches that cannot reach the target sum.
        let mut digits = vec![0usize; n_sites];
        enumerate(&mut states, &mut digits, 0, 0, n_sites, magnetization, &pow3);
        let mut index = vec![u32::MAX; total];
        for (ord, &code) in states.iter().enumerate() {
            index[code as usize] = ord as u32;
        }
        SectorBasis {
            n_sites,
            magnetization,
            states,
            index,
            pow3,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// `Some(M)` for a sector basis, `None` for the full basis.
    pub fn magnetization(&self) -> Option<i32> {
        self.magnetization
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Packed code of the configuration with ordinal `ord`.
    pub fn code(&self, ord: usize) -> u32 {
        self.states[ord]
    }

    pub fn codes(&self) -> &[u32] {
        &self.states
    }

    /// Ordinal of a packed code, if the configuration belongs to the basis.
    pub fn ordinal(&self, code: u32) -> Option<usize> {
        let v = self.index[code as usize];
        if v == u32::MAX {
            None
        } else {
            Some(v as usize)
        }
    }

    /// Digit of site `site` (0-based) inside a packed code.
    pub fn digit_of(&self, code: u32, site: usize) -> usize {
        ((code / self.pow3[site]) % 3) as usize
    }

    /// Jz eigenvalue of site `site` (0-based) inside a packed code.
    pub fn m_of(&self, code: u32, site: usize) -> i32 {
        1 - self.digit_of(code, site) as i32
    }

    /// Total magnetization of a packed code.
    pub fn total_m(&self, code: u32) -> i32 {
        (0..self.n_sites).map(|i| self.m_of(code, i)).sum()
    }

    /// Pack a digit string (site 1 first) into a code.
    pub fn pack(&self, digits: &[usize]) -> u32 {
        debug_assert_eq!(digits.len(), self.n_sites);
        digits
            .iter()
            .zip(&self.pow3)
            .map(|(&d, &p)| d as u32 * p)
            .sum()
    }

    /// Replace the digits of two sites inside a code.
    pub fn with_pair(&self, code: u32, site_a: usize, da: usize, site_b: usize, db: usize) -> u32 {
        let old_a = self.digit_of(code, site_a) as i64;
        let old_b = self.digit_of(code, site_b) as i64;
        let shifted = code as i64
            + (da as i64 - old_a) * self.pow3[site_a] as i64
            + (db as i64 - old_b) * self.pow3[site_b] as i64;
        shifted as u32
    }

    pub fn power_of_three(&self, site: usize) -> u32 {
        self.pow3[site]
    }
}

fn check_sites(n_sites: usize) -> Result<()> {
    if n_sites < 2 {
        return Err(Error::domain(format!(
            "basis needs at least 2 sites, got {n_sites}"
        )));
    }
    if n_sites > MAX_BASIS_SITES {
        return Err(Error::domain(format!(
            "basis limited to N <= {MAX_BASIS_SITES}, got {n_sites}"
        )));
    }
    Ok(())
}

fn enumerate(
    states: &mut Vec<u32>,
    digits: &mut [usize],
    depth: usize,
    partial_sum: i32,
    n_sites: usize,
    target: Option<i32>,
    pow3: &[u32],
) {
    if depth == n_sites {
        let code: u32 = digits
            .iter()
            .zip(pow3)
            .map(|(&d, &p)| d as u32 * p)
            .sum();
        states.push(code);
        return;
    }
    let remaining = (n_sites - depth) as i32;
    for d in 0..3usize {
        let m = 1 - d as i32;
        if let Some(t) = target {
            let need = t - partial_sum - m;
            if need.abs() > remaining - 1 {
                continue;
            }
        }
        digits[depth] = d;
        enumerate(states, digits, depth + 1, partial_sum + m, n_sites, target, pow3);
    }
}
