//! Principal components of mean-centered history vectors.

use alloc::vec::Vec;

/// Top principal directions of a dense dataset, with per-vector coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaProjection {
    /// One orthonormal direction per row, descending variance order.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalue per kept component.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalue over total variance per kept component; all zero for
    /// degenerate input.
    pub explained_variance_ratio: Vec<f64>,
    /// Projection of each input row onto the kept components.
    pub coordinates: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues and matching eigenvectors (rows), unsorted.
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, &x| m.max(libm::fabs(x)))
        .max(1.0);
    let tol = 1e-14 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p][q] * a[p][q];
            }
        }
        if libm::sqrt(off) <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if libm::fabs(a[p][q]) <= tol {
                    continue;
                }
                let tau = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let eigenvalues: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    // Column i of v is the eigenvector for eigenvalue i; hand back rows.
    let eigenvectors: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|k| v[k][i]).collect()).collect();
    (eigenvalues, eigenvectors)
}

/// Principal component analysis of dense rows. Keeps `min(d, dims)`
/// components. Constant datasets come back with zero variance and the
/// canonical axes, not an error.
pub fn pca(rows: &[Vec<f64>], d: usize) -> PcaProjection {
    assert!(d >= 1, "need at least one component");
    let n = rows.len();
    let dims = rows.first().map(Vec::len).unwrap_or(0);
    let keep = d.min(dims);

    let mut mean = alloc::vec![0.0; dims];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    if n > 0 {
        for m in &mut mean {
            *m /= n as f64;
        }
    }

    let mut cov = alloc::vec![alloc::vec![0.0; dims]; dims];
    if n > 1 {
        for row in rows {
            let centered: Vec<f64> = row.iter().zip(&mean).map(|(x, m)| x - m).collect();
            for i in 0..dims {
                for j in i..dims {
                    cov[i][j] += centered[i] * centered[j];
                }
            }
        }
        let denom = (n - 1) as f64;
        for i in 0..dims {
            for j in i..dims {
                cov[i][j] /= denom;
                cov[j][i] = cov[i][j];
            }
        }
    }
    let total_variance: f64 = (0..dims).map(|i| cov[i][i]).sum();

    let (eigenvalues, eigenvectors) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..dims).collect();
    order.sort_by(|&i, &j| {
        eigenvalues[j]
            .partial_cmp(&eigenvalues[i])
            .expect("covariance eigenvalues are finite")
            .then(i.cmp(&j))
    });

    let mut components: Vec<Vec<f64>> = Vec::with_capacity(keep);
    let mut kept_values: Vec<f64> = Vec::with_capacity(keep);
    for &idx in order.iter().take(keep) {
        let mut comp = eigenvectors[idx].clone();
        // Deterministic sign: the largest-magnitude entry points positive.
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|(i, x), (j, y)| {
                libm::fabs(**x)
                    .partial_cmp(&libm::fabs(**y))
                    .expect("eigenvector entries are finite")
                    .then(j.cmp(i))
            })
            .map(|(i, _)| i);
        if let Some(i) = lead {
            if comp[i] < 0.0 {
                for x in &mut comp {
                    *x = -*x;
                }
            }
        }
        components.push(comp);
        kept_values.push(eigenvalues[idx].max(0.0));
    }

    let explained_variance_ratio: Vec<f64> = if total_variance > 1e-15 {
        kept_values.iter().map(|ev| ev / total_variance).collect()
    } else {
        alloc::vec![0.0; keep]
    };

    let coordinates: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            components
                .iter()
                .map(|comp| {
                    row.iter()
                        .zip(&mean)
                        .zip(comp)
                        .map(|((x, m), c)| (x - m) * c)
                        .sum()
                })
                .collect()
        })
        .collect();

    PcaProjection {
        components,
        eigenvalues: kept_values,
        explained_variance_ratio,
        coordinates,
        mean,
        total_variance,
    }
}
