//! Dense symmetric eigendecomposition (Householder tridiagonalization plus
//! implicit QL with shifts), the classic tred2/tql2 pair.
//!
//! Used instead of nalgebra's SymmetricEigen, whose eigenvectors degrade on
//! the exactly degenerate clusters these sector Hamiltonians produce.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigenvalues ascending; `vectors[k]` is the unit eigenvector of
/// `values[k]`.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Full eigendecomposition of a dense symmetric matrix.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    if n == 0 {
        return Ok(SymEigen {
            values: vec![],
            vectors: vec![],
        });
    }
    // z holds the accumulated transformations, row-major z[i][j]
    let mut z: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut z, &mut d, &mut e);
    // tred2 leaves the sub-diagonal in e[1..]; tql2 wants e[i] coupling i,i+1
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    tql2(&mut d, &mut e, &mut z)?;
    Ok(sorted_eigen(d, z))
}

/// Full eigendecomposition of a symmetric tridiagonal matrix, given its
/// diagonal and sub-diagonal.
pub fn tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<SymEigen> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1), "need n-1 off-diagonal entries");
    if n == 0 {
        return Ok(SymEigen {
            values: vec![],
            vectors: vec![],
        });
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    tql2(&mut d, &mut e, &mut z)?;
    Ok(sorted_eigen(d, z))
}

fn sorted_eigen(d: Vec<f64>, z: Vec<Vec<f64>>) -> SymEigen {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    // eigenvector k lives in column k of z
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| (0..n).map(|i| z[i][k]).collect())
        .collect();
    SymEigen { values, vectors }
}

/// Householder reduction to tridiagonal form, accumulating the orthogonal
/// transformation in `z`; on return `d` holds the diagonal and `e[1..]` the
/// sub-diagonal.
fn tred2(z: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = z.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| z[i][k].abs()).sum();
            if scale == 0.0 {
                e[i] = z[i][l];
            } else {
                for k in 0..=l {
                    z[i][k] /= scale;
                    h += z[i][k] * z[i][k];
                }
                let f = z[i][l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                z[i][l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    z[j][i] = z[i][j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += z[j][k] * z[i][k];
                    }
                    for k in j + 1..=l {
                        g += z[k][j] * z[i][k];
                    }
                    e[j] = g / h;
                    f_acc += e[j] * z[i][j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = z[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        z[j][k] -= f * e[k] + g * z[i][k];
                    }
                }
            }
        } else {
            e[i] = z[i][l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += z[i][k] * z[k][j];
                }
                for k in 0..i {
                    z[k][j] -= g * z[k][i];
                }
            }
        }
        d[i] = z[i][i];
        z[i][i] = 1.0;
        for j in 0..i {
            z[j][i] = 0.0;
            z[i][j] = 0.0;
        }
    }
}

/// Implicit QL with Wilkinson shifts on a tridiagonal matrix; `e[i]` couples
/// i and i+1, eigenvectors accumulate in the columns of `z`.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            // find the first negligible coupling at or after l
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::Convergence {
                    what: "tridiagonal QL iteration".to_string(),
                    residual: e[l].abs(),
                    iterations: iter,
                });
            }
            // Wilkinson shift
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for zk in z.iter_mut() {
                    f = zk[i + 1];
                    zk[i + 1] = s * zk[i] + c * f;
                    zk[i] = c * zk[i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
