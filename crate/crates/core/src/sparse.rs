//! Sparse assembly of chain Hamiltonians over a magnetization-sector basis.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::ops::{singlet_projector, two_site_hbb, TwoSiteMatrix};
use crate::params::BBParams;

/// Entries with absolute value below this are dropped during assembly.
pub const ASSEMBLY_DROP_TOL: f64 = 1e-14;

/// Real symmetric sparse matrix in CSR layout with deterministic assembly
/// order (rows in basis order, columns ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSymmetric {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    /// y = A x (real).
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                acc += v * x[*c as usize];
            }
            y[r] = acc;
        }
    }

    /// y += w * A x (complex vector, real matrix).
    pub fn matvec_complex_acc(&self, w: f64, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            let mut acc = Complex64::new(0.0, 0.0);
            for (c, v) in cols.iter().zip(vals) {
                acc += x[*c as usize] * *v;
            }
            y[r] += acc * w;
        }
    }

    /// Largest asymmetry |A - A^T|; zero for exactly symmetric assembly.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                let c = *c as usize;
                let (tc, tv) = self.row(c);
                let mirrored = match tc.binary_search(&(r as u32)) {
                    Ok(k) => tv[k],
                    Err(_) => 0.0,
                };
                worst = worst.max((v - mirrored).abs());
            }
        }
        worst
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                m[(r, *c as usize)] = *v;
            }
        }
        m
    }

    /// Textual triplet dump (row, col, value) with 17 significant digits.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (c, v) in cols.iter().zip(vals) {
                writeln!(w, "{} {} {:.16e}", r, c, v)?;
            }
        }
        Ok(())
    }
}

/// Accumulates one row at a time; merges duplicate columns and drops entries
/// below the assembly tolerance.
struct RowBuilder {
    entries: Vec<(u32, f64)>,
}

impl RowBuilder {
    fn new() -> Self {
        RowBuilder {
            entries: Vec::with_capacity(64),
        }
    }

    fn push(&mut self, col: u32, val: f64) {
        self.entries.push((col, val));
    }

    fn flush(&mut self, cols: &mut Vec<u32>, vals: &mut Vec<f64>) {
        self.entries.sort_unstable_by_key(|e| e.0);
        let mut iter = self.entries.drain(..).peekable();
        while let Some((col, mut val)) = iter.next() {
            while let Some(&(c2, v2)) = iter.peek() {
                if c2 == col {
                    val += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if val.abs() > ASSEMBLY_DROP_TOL {
                cols.push(col);
                vals.push(val);
            }
        }
    }
}

/// Per-column nonzero structure of a 9x9 pair operator, precomputed so the
/// row assembly only touches reachable configurations.
struct PairAction {
    by_col: [Vec<(usize, f64)>; 9],
}

impl PairAction {
    fn new(m: &TwoSiteMatrix) -> Self {
        let mut by_col: [Vec<(usize, f64)>; 9] = Default::default();
        for c in 0..9 {
            for r in 0..9 {
                let v = m[(r, c)];
                if v.abs() > ASSEMBLY_DROP_TOL {
                    by_col[c].push((r, v));
                }
            }
        }
        PairAction { by_col }
    }
}

/// Assemble sum_b weight[b] * Op2^(b, b+1) + diag over the given basis, where
/// `weight` is indexed by the 1-based bond label b = 1..N-1 (entry b-1) and
/// `diag(code)` supplies the per-configuration diagonal term.
fn assemble(
    basis: &SectorBasis,
    pair_op: &TwoSiteMatrix,
    weights: &[f64],
    diag: impl Fn(u32) -> f64,
) -> SparseSymmetric {
    let n = basis.n_sites();
    assert_eq!(weights.len(), n - 1);
    let action = PairAction::new(pair_op);
    let dim = basis.dim();
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut builder = RowBuilder::new();
    row_ptr.push(0);
    for row in 0..dim {
        let code = basis.code(row);
        let d0 = diag(code);
        if d0 != 0.0 {
            builder.push(row as u32, d0);
        }
        for (bond, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let site_a = bond; // 0-based left site of bond (bond+1) in 1-based labels
            let site_b = bond + 1;
            let da = basis.digit_of(code, site_a);
            let db = basis.digit_of(code, site_b);
            let t = da + 3 * db;
            for &(r, v) in &action.by_col[t] {
                let na = r % 3;
                let nb = r / 3;
                let new_code = basis.with_pair(code, site_a, na, site_b, nb);
                let col = basis
                    .ordinal(new_code)
                    .expect("pair operator left the basis; operator must conserve Jz");
                builder.push(col as u32, w * v);
            }
        }
        builder.flush(&mut cols, &mut vals);
        row_ptr.push(cols.len());
    }
    SparseSymmetric {
        dim,
        row_ptr,
        cols,
        vals,
    }
}

/// Bond weight (1 + (-1)^b x) / 2 for the 1-based bond label b, so x = +1
/// turns off the odd bonds (1,2), (3,4), ... and keeps the even ones.
pub fn bond_weight(bond_1based: usize, x: f64) -> f64 {
    let sign = if bond_1based % 2 == 0 { 1.0 } else { -1.0 };
    (1.0 + sign * x) / 2.0
}

/// Which two-site operator sits on every bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondConvention {
    /// The full bilinear-biquadratic pair Hamiltonian at `params.theta`.
    Raw,
    /// The transfer-protocol normalization -P0: a fully-on bond holds its
    /// singlet at energy -alpha and all orthogonal pair states at 0. At
    /// theta = -pi/2 this equals (raw + alpha I)/3 per bond; all protocol
    /// quantities (gaps, couplings, durations) are quoted in these units.
    DimerProjector,
}

/// Sparse chain Hamiltonian restricted to one magnetization sector (or the
/// full product space), at a fixed value of the coupling parameter x.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    pub basis: Arc<SectorBasis>,
    pub params: BBParams,
    pub x: f64,
    pub convention: BondConvention,
    pub matrix: SparseSymmetric,
}

impl SparseHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

fn check_build(params: &BBParams, x: f64, basis: &SectorBasis) -> Result<()> {
    if basis.n_sites() != params.n_sites {
        return Err(Error::config(format!(
            "basis is for N = {} but params have N = {}",
            basis.n_sites(),
            params.n_sites
        )));
    }
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("coupling parameter x must lie in [-1, 1], got {x}")));
    }
    Ok(())
}

fn build_with(
    params: &BBParams,
    x: f64,
    basis: &Arc<SectorBasis>,
    convention: BondConvention,
) -> Result<SparseHamiltonian> {
    check_build(params, x, basis)?;
    let pair_op = match convention {
        BondConvention::Raw => two_site_hbb(params.theta).matrix,
        BondConvention::DimerProjector => -singlet_projector().matrix,
    };
    let n = params.n_sites;
    let weights: Vec<f64> = (1..n).map(|b| params.alpha * bond_weight(b, x)).collect();
    let field = params.alpha * params.field_h;
    let matrix = assemble(basis, &pair_op, &weights, |code| {
        if field == 0.0 {
            0.0
        } else {
            field * basis.total_m(code) as f64
        }
    });
    Ok(SparseHamiltonian {
        basis: Arc::clone(basis),
        params: *params,
        x,
        convention,
        matrix,
    })
}

/// Chain Hamiltonian
/// alpha * sum_{b=1}^{N-1} (1 + (-1)^b x)/2 * Hbb^(b,b+1) + alpha h sum_i Jz_i
/// with the raw bilinear-biquadratic pair Hamiltonian at `params.theta`.
pub fn build_hamiltonian(
    params: &BBParams,
    x: f64,
    basis: &Arc<SectorBasis>,
) -> Result<SparseHamiltonian> {
    build_with(params, x, basis, BondConvention::Raw)
}

/// Chain Hamiltonian of the transfer protocol:
/// -alpha * sum_b (1 + (-1)^b x)/2 * P0^(b,b+1) + alpha h sum_i Jz_i.
///
/// Requires the dimerized point theta = -pi/2 (the protocol's operating
/// point); the singlet-projector bond is that Hamiltonian up to the constant
/// alpha (N-1)/2 shift and the 1/3 energy rescale absorbed into alpha.
pub fn build_transfer_hamiltonian(
    params: &BBParams,
    x: f64,
    basis: &Arc<SectorBasis>,
) -> Result<SparseHamiltonian> {
    if !params.is_dimerized(1e-9) {
        return Err(Error::domain(format!(
            "transfer Hamiltonian is defined at theta = -pi/2, got theta = {}",
            params.theta
        )));
    }
    build_with(params, x, basis, BondConvention::DimerProjector)
}

/// d/dx of the chain Hamiltonian: alpha * sum_b ((-1)^b / 2) * Op2^(b,b+1).
/// Independent of x; build once per sweep.
pub fn build_coupling_derivative(
    params: &BBParams,
    basis: &Arc<SectorBasis>,
    convention: BondConvention,
) -> Result<SparseSymmetric> {
    check_build(params, 0.0, basis)?;
    let pair_op = match convention {
        BondConvention::Raw => two_site_hbb(params.theta).matrix,
        BondConvention::DimerProjector => -singlet_projector().matrix,
    };
    let n = params.n_sites;
    let weights: Vec<f64> = (1..n)
        .map(|b| {
            let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
            params.alpha * sign / 2.0
        })
        .collect();
    Ok(assemble(basis, &pair_op, &weights, |_| 0.0))
}

/// Split protocol generator for time propagation: H(x) is recombined per
/// step as (1-x)/2 * odd + (1+x)/2 * even + field without reassembly.
#[derive(Debug, Clone)]
pub struct TransferGenerator {
    pub basis: Arc<SectorBasis>,
    pub params: BBParams,
    odd: SparseSymmetric,
    even: SparseSymmetric,
    field_diag: Vec<f64>,
}

impl TransferGenerator {
    pub fn new(params: &BBParams, basis: &Arc<SectorBasis>) -> Result<Self> {
        if !params.is_dimerized(1e-9) {
            return Err(Error::domain(format!(
                "transfer generator is defined at theta = -pi/2, got theta = {}",
                params.theta
            )));
        }
        check_build(params, 0.0, basis)?;
        let pair_op = -singlet_projector().matrix;
        let n = params.n_sites;
        let odd_w: Vec<f64> = (1..n)
            .map(|b| if b % 2 == 1 { params.alpha } else { 0.0 })
            .collect();
        let even_w: Vec<f64> = (1..n)
            .map(|b| if b % 2 == 0 { params.alpha } else { 0.0 })
            .collect();
        let odd = assemble(basis, &pair_op, &odd_w, |_| 0.0);
        let even = assemble(basis, &pair_op, &even_w, |_| 0.0);
        let field = params.alpha * params.field_h;
        let field_diag: Vec<f64> = basis
            .codes()
            .iter()
            .map(|&c| field * basis.total_m(c) as f64)
            .collect();
        Ok(TransferGenerator {
            basis: Arc::clone(basis),
            params: *params,
            odd,
            even,
            field_diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// y = H(x) v for a complex state vector.
    pub fn apply(&self, x: f64, v: &[Complex64], y: &mut [Complex64]) {
        y.fill(Complex64::new(0.0, 0.0));
        self.odd.matvec_complex_acc((1.0 - x) / 2.0, v, y);
        self.even.matvec_complex_acc((1.0 + x) / 2.0, v, y);
        for (yi, (vi, d)) in y.iter_mut().zip(v.iter().zip(&self.field_diag)) {
            *yi += vi * *d;
        }
    }

    /// Upper bound on ||H(x)|| uniform over x in [-1, 1].
    pub fn norm_bound(&self) -> f64 {
        self.odd.norm_inf()
            + self.even.norm_inf()
            + self.field_diag.iter().fold(0.0f64, |a, d| a.max(d.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dimer3() -> (BBParams, Arc<SectorBasis>) {
        let params = BBParams::dimerized(3, 1.0).unwrap();
        let basis = Arc::new(SectorBasis::new(3, 1).unwrap());
        (params, basis)
    }

    #[test]
    fn rejects_mismatched_basis() {
        let params = BBParams::dimerized(5, 1.0).unwrap();
        let basis = Arc::new(SectorBasis::new(3, 1).unwrap());
        assert!(build_hamiltonian(&params, 0.0, &basis).is_err());
    }

    #[test]
    fn rejects_x_outside_range() {
        let (params, basis) = dimer3();
        assert!(build_hamiltonian(&params, 1.5, &basis).is_err());
    }

    #[test]
    fn symmetric_for_various_theta_and_x() {
        for &theta in &[-std::f64::consts::FRAC_PI_2, 0.0, 0.77, -2.1] {
            for &x in &[-1.0, -0.3, 0.0, 0.6, 1.0] {
                let params = BBParams::new(4, theta, 1.3, 0.2).unwrap();
                let basis = Arc::new(SectorBasis::new(4, 0).unwrap());
                let h = build_hamiltonian(&params, x, &basis).unwrap();
                assert!(h.matrix.symmetry_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn raw_ground_at_x_one_is_decoupled_spin_plus_singlet() {
        // Dense diagonalization oracle on the 6-dim sector; analytic
        // cross-check: lambda_0 * alpha = -4 alpha.
        let (params, basis) = dimer3();
        let h = build_hamiltonian(&params, 1.0, &basis).unwrap();
        let dense = h.matrix.to_dense();
        let eig = dense.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min, -4.0, epsilon = 1e-10);
    }

    #[test]
    fn two_site_chain_ground_is_singlet_energy_minus_four_alpha() {
        // N = 2 at theta = -pi/2, the only bond fully on (x = -1).
        let params = BBParams::dimerized(2, 1.0).unwrap();
        let basis = Arc::new(SectorBasis::full(2).unwrap());
        let h = build_hamiltonian(&params, -1.0, &basis).unwrap();
        let eig = h.matrix.to_dense().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min, -4.0, epsilon = 1e-10);
    }

    #[test]
    fn bond_weights_kill_the_right_bonds() {
        assert_eq!(bond_weight(1, 1.0), 0.0);
        assert_eq!(bond_weight(2, 1.0), 1.0);
        assert_eq!(bond_weight(1, -1.0), 1.0);
        assert_eq!(bond_weight(2, -1.0), 0.0);
    }

    #[test]
    fn extreme_x_matches_single_parity_assembly() {
        // At x = +1 the matrix equals the even-bond sum exactly (sparse
        // structure included); at x = -1 the odd-bond sum.
        let params = BBParams::new(5, -0.9, 1.0, 0.0).unwrap();
        let basis = Arc::new(SectorBasis::new(5, 1).unwrap());
        let pair_op = two_site_hbb(params.theta).matrix;
        let even_w: Vec<f64> = (1..5).map(|b| if b % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let odd_w: Vec<f64> = (1..5).map(|b| if b % 2 == 1 { 1.0 } else { 0.0 }).collect();
        let even = assemble(&basis, &pair_op, &even_w, |_| 0.0);
        let odd = assemble(&basis, &pair_op, &odd_w, |_| 0.0);
        let hp = build_hamiltonian(&params, 1.0, &basis).unwrap();
        let hm = build_hamiltonian(&params, -1.0, &basis).unwrap();
        assert_eq!(hp.matrix, even);
        assert_eq!(hm.matrix, odd);
    }

    #[test]
    fn never_connects_different_sectors() {
        // Build in the full 3^N basis and check block structure in M.
        let params = BBParams::new(3, 0.4, 1.0, 0.3).unwrap();
        let basis = Arc::new(SectorBasis::full(3).unwrap());
        let h = build_hamiltonian(&params, 0.37, &basis).unwrap();
        for r in 0..h.dim() {
            let mr = basis.total_m(basis.code(r));
            let (cols, _) = h.matrix.row(r);
            for &c in cols {
                let mc = basis.total_m(basis.code(c as usize));
                assert_eq!(mr, mc);
            }
        }
    }

    #[test]
    fn transfer_convention_bridges_to_raw() {
        // Per bond: -P0 = (Hbb(-pi/2) + I) / 3, so over the chain
        // H_dimer(alpha) = [H_raw(alpha) + alpha (N-1)/2 I] / 3
        // (the bond weights sum to (N-1)/2 for every x when N is odd).
        let (params, basis) = dimer3();
        for &x in &[-1.0, -0.4, 0.0, 0.8, 1.0] {
            let raw = build_hamiltonian(&params, x, &basis).unwrap().matrix.to_dense();
            let dimer = build_transfer_hamiltonian(&params, x, &basis)
                .unwrap()
                .matrix
                .to_dense();
            let n = params.n_sites as f64;
            let shift = params.alpha * (n - 1.0) / 2.0;
            let bridged =
                (raw + nalgebra::DMatrix::identity(6, 6) * shift) / 3.0;
            let defect = (&dimer - &bridged).abs().max();
            assert!(defect < 1e-12, "x={x}, defect={defect}");
        }
    }

    #[test]
    fn transfer_generator_matches_assembled_matrix() {
        let params = BBParams::new(5, crate::params::DIMERIZED_THETA, 0.9, 0.13).unwrap();
        let basis = Arc::new(SectorBasis::new(5, 1).unwrap());
        let gen = TransferGenerator::new(&params, &basis).unwrap();
        for &x in &[-1.0, -0.25, 0.5, 1.0] {
            let h = build_transfer_hamiltonian(&params, x, &basis).unwrap();
            let dim = basis.dim();
            let v: Vec<Complex64> = (0..dim)
                .map(|k| Complex64::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
                .collect();
            let mut got = vec![Complex64::new(0.0, 0.0); dim];
            gen.apply(x, &v, &mut got);
            let vr: Vec<f64> = v.iter().map(|z| z.re).collect();
            let vi: Vec<f64> = v.iter().map(|z| z.im).collect();
            let mut yr = vec![0.0; dim];
            let mut yi = vec![0.0; dim];
            h.matrix.matvec(&vr, &mut yr);
            h.matrix.matvec(&vi, &mut yi);
            for k in 0..dim {
                assert_abs_diff_eq!(got[k].re, yr[k], epsilon = 1e-12);
                assert_abs_diff_eq!(got[k].im, yi[k], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let (params, basis) = dimer3();
        for convention in [BondConvention::Raw, BondConvention::DimerProjector] {
            let d = build_coupling_derivative(&params, &basis, convention)
                .unwrap()
                .to_dense();
            let build = |x: f64| match convention {
                BondConvention::Raw => build_hamiltonian(&params, x, &basis).unwrap(),
                BondConvention::DimerProjector => {
                    build_transfer_hamiltonian(&params, x, &basis).unwrap()
                }
            };
            let eps = 1e-6;
            let hp = build(0.3 + eps).matrix.to_dense();
            let hm = build(0.3 - eps).matrix.to_dense();
            let fd = (hp - hm) / (2.0 * eps);
            let defect = (&d - &fd).abs().max();
            assert!(defect < 1e-8, "convention {convention:?}: defect {defect}");
        }
    }

    #[test]
    fn triplet_dump_round_trips() {
        let (params, basis) = dimer3();
        let h = build_hamiltonian(&params, 0.5, &basis).unwrap();
        let mut buf = Vec::new();
        h.matrix.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut dense = nalgebra::DMatrix::zeros(h.dim(), h.dim());
        for line in text.lines() {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let r: usize = parts[0].parse().unwrap();
            let c: usize = parts[1].parse().unwrap();
            let v: f64 = parts[2].parse().unwrap();
            dense[(r, c)] = v;
        }
        let defect = (&dense - h.matrix.to_dense()).abs().max();
        assert_eq!(defect, 0.0);
    }

    #[test]
    fn field_term_is_alpha_h_times_total_m() {
        let params = BBParams::new(3, 0.4, 2.0, 0.25).unwrap();
        let no_field = BBParams::new(3, 0.4, 2.0, 0.0).unwrap();
        let basis = Arc::new(SectorBasis::full(3).unwrap());
        let hf = build_hamiltonian(&params, 0.2, &basis).unwrap().matrix.to_dense();
        let h0 = build_hamiltonian(&no_field, 0.2, &basis).unwrap().matrix.to_dense();
        let diff = hf - h0;
        for r in 0..basis.dim() {
            let m = basis.total_m(basis.code(r)) as f64;
            for c in 0..basis.dim() {
                let want = if r == c { 2.0 * 0.25 * m } else { 0.0 };
                assert_abs_diff_eq!(diff[(r, c)], want, epsilon = 1e-12);
            }
        }
    }
}
