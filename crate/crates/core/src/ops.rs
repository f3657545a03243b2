//! Single-site spin-1 operators and two-site bond operators.
//!
//! Two-site 9x9 matrices act on the ordered product basis of a pair of
//! neighboring sites (a, b) with index t = digit(a) + 3 * digit(b), i.e. the
//! left site of the pair is the low trit.

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type TwoSiteMatrix = SMatrix<f64, 9, 9>;

/// A real symmetric operator on the 9-dimensional two-site space that
/// commutes with the pair magnetization.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteOperator {
    pub matrix: TwoSiteMatrix,
}

impl TwoSiteOperator {
    pub fn new(matrix: TwoSiteMatrix) -> Result<Self> {
        let op = TwoSiteOperator { matrix };
        if op.symmetry_defect() > 1e-12 {
            return Err(Error::domain("two-site operator must be symmetric".to_string()));
        }
        if op.magnetization_mixing() > 1e-12 {
            return Err(Error::domain(
                "two-site operator must commute with the pair Jz".to_string(),
            ));
        }
        Ok(op)
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..9 {
            for c in 0..9 {
                worst = worst.max((self.matrix[(r, c)] - self.matrix[(c, r)]).abs());
            }
        }
        worst
    }

    /// Largest entry connecting configurations with different pair
    /// magnetization; zero for operators block-diagonal in the pair Jz.
    pub fn magnetization_mixing(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..9 {
            for c in 0..9 {
                if pair_m(r) != pair_m(c) {
                    worst = worst.max(self.matrix[(r, c)].abs());
                }
            }
        }
        worst
    }
}

/// Pair magnetization of a two-site index t = d_a + 3 d_b.
pub fn pair_m(t: usize) -> i32 {
    let da = t % 3;
    let db = t / 3;
    (1 - da as i32) + (1 - db as i32)
}

/// Spin-1 angular momentum matrices (Jx, Jy, Jz) in the (+1, 0, -1) basis.
pub fn spin1_matrices() -> (Matrix3<Complex64>, Matrix3<Complex64>, Matrix3<Complex64>) {
    let z = Complex64::new(0.0, 0.0);
    let s = Complex64::new(1.0 / 2.0_f64.sqrt(), 0.0);
    let i_s = Complex64::new(0.0, 1.0 / 2.0_f64.sqrt());
    let jx = Matrix3::new(z, s, z, s, z, s, z, s, z);
    let jy = Matrix3::new(z, -i_s, z, i_s, z, -i_s, z, i_s, z);
    let jz = Matrix3::new(
        Complex64::new(1.0, 0.0),
        z,
        z,
        z,
        z,
        z,
        z,
        z,
        Complex64::new(-1.0, 0.0),
    );
    (jx, jy, jz)
}

/// Real representations used to assemble two-site products: Jx, Ky, Jz with
/// Jy = i * Ky (Ky real antisymmetric), so Jy (x) Jy = -Ky (x) Ky is real.
fn real_spin_parts() -> (Matrix3<f64>, Matrix3<f64>, Matrix3<f64>) {
    let s = 1.0 / 2.0_f64.sqrt();
    let jx = Matrix3::new(0.0, s, 0.0, s, 0.0, s, 0.0, s, 0.0);
    let ky = Matrix3::new(0.0, -s, 0.0, s, 0.0, -s, 0.0, s, 0.0);
    let jz = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0);
    (jx, ky, jz)
}

/// Product operator A_a (x) B_b on the pair space with the left site as the
/// low trit: out[r_a + 3 r_b, c_a + 3 c_b] = A[r_a, c_a] * B[r_b, c_b].
pub fn pair_product(left: &Matrix3<f64>, right: &Matrix3<f64>) -> TwoSiteMatrix {
    let mut out = TwoSiteMatrix::zeros();
    for ra in 0..3 {
        for ca in 0..3 {
            let a = left[(ra, ca)];
            if a == 0.0 {
                continue;
            }
            for rb in 0..3 {
                for cb in 0..3 {
                    out[(ra + 3 * rb, ca + 3 * cb)] = a * right[(rb, cb)];
                }
            }
        }
    }
    out
}

/// The scalar product J_a . J_b on the pair space (real symmetric).
pub fn two_site_dot() -> TwoSiteMatrix {
    let (jx, ky, jz) = real_spin_parts();
    pair_product(&jx, &jx) - pair_product(&ky, &ky) + pair_product(&jz, &jz)
}

/// Projectors (P0, P1, P2) onto total pair spin S = 0, 1, 2.
///
/// Built as polynomials in t = J_a . J_b, whose eigenvalue on the spin-S
/// manifold is S(S+1)/2 - 2, i.e. -2, -1, +1.
pub fn two_site_projectors() -> (TwoSiteOperator, TwoSiteOperator, TwoSiteOperator) {
    let t = two_site_dot();
    let t2 = t * t;
    let id = TwoSiteMatrix::identity();
    // P_S = prod_{S' != S} (t - e_{S'}) / (e_S - e_{S'}) with e = (-2, -1, 1)
    let p0 = (t2 - id) / 3.0;
    let p1 = (t2 + t - 2.0 * id) / -2.0;
    let p2 = (t2 + 3.0 * t + 2.0 * id) / 6.0;
    (
        TwoSiteOperator::new(p0).expect("P0 construction"),
        TwoSiteOperator::new(p1).expect("P1 construction"),
        TwoSiteOperator::new(p2).expect("P2 construction"),
    )
}

/// Spectral weights (lambda_0, lambda_1, lambda_2) of the two-site
/// bilinear-biquadratic Hamiltonian at mixing angle theta.
pub fn lambda_coefficients(theta: f64) -> (f64, f64, f64) {
    let (c, s) = (theta.cos(), theta.sin());
    (-2.0 * c + 4.0 * s, -c + s, c + s)
}

/// Two-site bilinear-biquadratic Hamiltonian
/// cos(theta) (J_a . J_b) + sin(theta) (J_a . J_b)^2,
/// expressed through the spin projectors.
pub fn two_site_hbb(theta: f64) -> TwoSiteOperator {
    let (l0, l1, l2) = lambda_coefficients(theta);
    let (p0, p1, p2) = two_site_projectors();
    let m = l0 * p0.matrix + l1 * p1.matrix + l2 * p2.matrix;
    TwoSiteOperator::new(m).expect("hbb construction")
}

/// The two-site singlet (|1,-1> + |-1,1> - |0,0>) / sqrt(3) as a pair-space
/// vector (left site is the low trit).
pub fn two_site_singlet() -> SVector<f64, 9> {
    let mut v = SVector::<f64, 9>::zeros();
    let w = 1.0 / 3.0_f64.sqrt();
    v[6] = w; // |+1>_a |-1>_b: digits (0, 2)
    v[2] = w; // |-1>_a |+1>_b: digits (2, 0)
    v[4] = -w; // |0>_a |0>_b: digits (1, 1)
    v
}

/// Singlet projector P0 = |s><s| on the pair space, the bond operator of the
/// transfer protocol (a fully-on bond holds its singlet at energy -1 and
/// every orthogonal pair state at 0).
pub fn singlet_projector() -> TwoSiteOperator {
    two_site_projectors().0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn frob(m: &TwoSiteMatrix) -> f64 {
        m.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn jz_is_diagonal_with_expected_eigenvalues() {
        let (_, _, jz) = spin1_matrices();
        for r in 0..3 {
            for c in 0..3 {
                if r != c {
                    assert_eq!(jz[(r, c)], Complex64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(jz[(0, 0)].re, 1.0);
        assert_eq!(jz[(1, 1)].re, 0.0);
        assert_eq!(jz[(2, 2)].re, -1.0);
    }

    #[test]
    fn angular_momentum_algebra() {
        let (jx, jy, jz) = spin1_matrices();
        let comm = jx * jy - jy * jx;
        let expect = jz * Complex64::new(0.0, 1.0);
        for r in 0..3 {
            for c in 0..3 {
                assert_abs_diff_eq!(comm[(r, c)].re, expect[(r, c)].re, epsilon = 1e-14);
                assert_abs_diff_eq!(comm[(r, c)].im, expect[(r, c)].im, epsilon = 1e-14);
            }
        }
        // Casimir: Jx^2 + Jy^2 + Jz^2 = S(S+1) I = 2 I
        let casimir = jx * jx + jy * jy + jz * jz;
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 2.0 } else { 0.0 };
                assert_abs_diff_eq!(casimir[(r, c)].re, want, epsilon = 1e-14);
                assert_abs_diff_eq!(casimir[(r, c)].im, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dot_product_matches_complex_route() {
        // Dual route: the real assembly against sum_k kron(J_k, J_k) over the
        // complex matrices.
        let (jx, jy, jz) = spin1_matrices();
        let real = two_site_dot();
        for (ra, ca, rb, cb) in itertools() {
            let v = jx[(ra, ca)] * jx[(rb, cb)]
                + jy[(ra, ca)] * jy[(rb, cb)]
                + jz[(ra, ca)] * jz[(rb, cb)];
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(real[(ra + 3 * rb, ca + 3 * cb)], v.re, epsilon = 1e-14);
        }
    }

    fn itertools() -> Vec<(usize, usize, usize, usize)> {
        let mut v = Vec::new();
        for ra in 0..3 {
            for ca in 0..3 {
                for rb in 0..3 {
                    for cb in 0..3 {
                        v.push((ra, ca, rb, cb));
                    }
                }
            }
        }
        v
    }

    #[test]
    fn projector_algebra() {
        let (p0, p1, p2) = two_site_projectors();
        let ps = [&p0.matrix, &p1.matrix, &p2.matrix];
        for (i, a) in ps.iter().enumerate() {
            for (j, b) in ps.iter().enumerate() {
                let prod = *a * *b;
                let want = if i == j { **a } else { TwoSiteMatrix::zeros() };
                assert!(frob(&(prod - want)) < 1e-12, "P{i} P{j}");
            }
        }
        let sum = p0.matrix + p1.matrix + p2.matrix;
        assert!(frob(&(sum - TwoSiteMatrix::identity())) < 1e-12);
        // ranks via traces of the projectors
        assert_abs_diff_eq!(p0.matrix.trace(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p1.matrix.trace(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p2.matrix.trace(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn singlet_is_the_rank_one_range_of_p0() {
        let (p0, _, _) = two_site_projectors();
        let s = two_site_singlet();
        assert_abs_diff_eq!(s.dot(&s), 1.0, epsilon = 1e-14);
        let ps = p0.matrix * s;
        for k in 0..9 {
            assert_abs_diff_eq!(ps[k], s[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn dot_powers_decompose_over_projectors() {
        let (p0, p1, p2) = two_site_projectors();
        let t = two_site_dot();
        let d1 = -2.0 * p0.matrix - p1.matrix + p2.matrix;
        assert!(frob(&(t - d1)) < 1e-12);
        let d2 = 4.0 * p0.matrix + p1.matrix + p2.matrix;
        assert!(frob(&(t * t - d2)) < 1e-12);
    }

    #[test]
    fn hbb_lambda_values() {
        let (l0, l1, l2) = lambda_coefficients(-std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(l0, -4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l1, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l2, -1.0, epsilon = 1e-14);
        let (l0, l1, l2) = lambda_coefficients(0.0);
        assert_abs_diff_eq!(l0, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l1, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l2, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn hbb_equals_trig_combination_for_any_theta() {
        let t = two_site_dot();
        for &theta in &[-std::f64::consts::FRAC_PI_2, 0.0, 0.37, -2.324, 1.9] {
            let h = two_site_hbb(theta);
            let direct = theta.cos() * t + theta.sin() * (t * t);
            assert!(frob(&(h.matrix - direct)) < 1e-12, "theta={theta}");
        }
    }

    #[test]
    fn dimerized_hbb_shifts_to_minus_p0() {
        // At theta = -pi/2: (H + I) / 3 = -P0.
        let h = two_site_hbb(-std::f64::consts::FRAC_PI_2);
        let (p0, _, _) = two_site_projectors();
        let scaled = (h.matrix + TwoSiteMatrix::identity()) / 3.0;
        assert!(frob(&(scaled + p0.matrix)) < 1e-12);
    }

    #[test]
    fn dimerized_ground_pair_is_the_singlet() {
        // Dense 9x9 diagonalization cross-checked against lambda_0 = -4.
        let h = two_site_hbb(-std::f64::consts::FRAC_PI_2);
        let dense = nalgebra::DMatrix::from_fn(9, 9, |r, c| h.matrix[(r, c)]);
        let eig = crate::symeig::symmetric_eigen(&dense).unwrap();
        assert_abs_diff_eq!(eig.values[0], -4.0, epsilon = 1e-12);
        let s = two_site_singlet();
        let overlap: f64 = (0..9).map(|k| eig.vectors[0][k] * s[k]).sum();
        assert_abs_diff_eq!(overlap.abs(), 1.0, epsilon = 1e-12);
    }
}
