// SPDX-License-Identifier: Apache-2.0

//! Biorthogonal eigen-systems of small real nonsymmetric matrices and their
//! continuation along a time grid.
//!
//! Eigenvalues come from a Householder reduction to upper Hessenberg form
//! followed by Francis double-shift QR. Right and left eigenvectors are then
//! obtained by inverse iteration on the matrix and on its transpose with the
//! same shift, which pairs them by construction; the left vectors are finally
//! rescaled so that `psi_i . phi_i = 1`. Two-by-two matrices, the case worked
//! out in closed form for the toy model, take an analytic path.
//!
//! Only complete, real, simple spectra are supported. Coalescing or complex
//! eigenvalues (exceptional points) are reported as errors.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::model::ModelError;

/// Relative eigenvalue gap below which a spectrum counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-9;

const MAX_QR_ITERATIONS: usize = 60;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("exceptional point: {0}")]
    ExceptionalPoint(String),
    #[error("QR iteration did not converge")]
    NoConvergence,
    #[error("eigenvector of branch {branch} has a vanishing first component; first-component gauge is singular")]
    GaugeSingular { branch: usize },
    #[error("two-body parametrization singular for branch {branch}: b + lambda = {denominator}")]
    ParametrizationSingular { branch: usize, denominator: f64 },
    #[error("y = G12/G21 is undefined because G21 = 0")]
    UndefinedRatio,
    #[error("branch matching ambiguous between t = {previous} and t = {time}; refine the time grid")]
    GridTooCoarse { previous: f64, time: f64 },
    #[error("time grid must be non-empty and strictly increasing")]
    BadGrid,
    #[error("at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<SpectralError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl SpectralError {
    fn at(self, time: f64) -> Self {
        match self {
            e @ (SpectralError::AtTime { .. } | SpectralError::GridTooCoarse { .. }) => e,
            e => SpectralError::AtTime {
                time,
                source: Box::new(e),
            },
        }
    }

    /// Strips any time annotation.
    pub fn root(&self) -> &SpectralError {
        match self {
            SpectralError::AtTime { source, .. } => source.root(),
            e => e,
        }
    }

    /// Time at which the failure occurred, when known.
    pub fn time(&self) -> Option<f64> {
        match self {
            SpectralError::AtTime { time, .. } | SpectralError::GridTooCoarse { time, .. } => Some(*time),
            _ => None,
        }
    }
}

/// Normalization convention for right eigenvectors. Left eigenvectors always
/// follow from `psi_i . phi_i = 1`.
///
/// Pointwise geometric phases depend on this choice; their values over
/// closed loops do not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Gauge {
    /// `|phi_i| = 1`, sign kept continuous along a trajectory (first
    /// non-negligible component positive for an isolated decomposition).
    #[default]
    UnitNorm,
    /// First component of `phi_i` equal to 1, the `(1, x_i)` form of the
    /// two-body model.
    FirstComponent,
}

impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gauge::UnitNorm => "unit-norm",
            Gauge::FirstComponent => "first-component",
        })
    }
}

impl std::str::FromStr for Gauge {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unit-norm" => Ok(Gauge::UnitNorm),
            "first-component" => Ok(Gauge::FirstComponent),
            other => Err(format!(
                "unknown gauge `{other}` (expected `unit-norm` or `first-component`)"
            )),
        }
    }
}

/// Eigenvalues sorted in decreasing order with paired right (`phi`) and left
/// (`psi`) eigenvectors, `psi_i . phi_j = delta_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalBasis {
    eigenvalues: Vec<f64>,
    right: Vec<DVector<f64>>,
    left: Vec<DVector<f64>>,
}

impl BiorthogonalBasis {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvalue(&self, branch: usize) -> f64 {
        self.eigenvalues[branch]
    }

    pub fn right(&self, branch: usize) -> &DVector<f64> {
        &self.right[branch]
    }

    pub fn left(&self, branch: usize) -> &DVector<f64> {
        &self.left[branch]
    }

    /// `sum_i lambda_i phi_i psi_i^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m += self.eigenvalues[i] * &self.right[i] * self.left[i].transpose();
        }
        m
    }

    /// Largest of `|M phi_i - lambda_i phi_i| / |phi_i|` and the same for
    /// `M^T psi_i`.
    pub fn eigen_residual(&self, m: &DMatrix<f64>) -> f64 {
        let mt = m.transpose();
        (0..self.dim())
            .map(|i| {
                let l = self.eigenvalues[i];
                let r = (m * &self.right[i] - l * &self.right[i]).norm() / self.right[i].norm();
                let s = (&mt * &self.left[i] - l * &self.left[i]).norm() / self.left[i].norm();
                r.max(s)
            })
            .fold(0.0, f64::max)
    }

    /// `max_ij |psi_i . phi_j - delta_ij|`.
    pub fn biorthogonality_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.left[i].dot(&self.right[j]) - target).abs());
            }
        }
        worst
    }

    /// Rescales every `phi_i` to the requested gauge (sign chosen by the
    /// first non-negligible component) and compensates `psi_i`.
    pub fn regauge(&self, gauge: Gauge) -> Result<Self, SpectralError> {
        let mut out = self.clone();
        for i in 0..self.dim() {
            let factor = gauge_factor(&self.right[i], gauge, None).ok_or(SpectralError::GaugeSingular { branch: i })?;
            out.apply_gauge(i, factor, gauge);
        }
        Ok(out)
    }

    pub(crate) fn scale_branch(&mut self, branch: usize, factor: f64) {
        self.right[branch] *= factor;
        self.left[branch] /= factor;
    }

    fn apply_gauge(&mut self, branch: usize, factor: f64, gauge: Gauge) {
        self.scale_branch(branch, factor);
        if gauge == Gauge::FirstComponent {
            // v[0] * (1 / v[0]) can miss 1 by an ulp
            self.right[branch][0] = 1.0;
        }
    }

    fn permuted(self, order: &[usize]) -> Self {
        Self {
            eigenvalues: order.iter().map(|&k| self.eigenvalues[k]).collect(),
            right: order.iter().map(|&k| self.right[k].clone()).collect(),
            left: order.iter().map(|&k| self.left[k].clone()).collect(),
        }
    }

    /// Assembles a basis from raw eigen-pairs, fixing unit-norm gauge and
    /// biorthonormalizing.
    fn from_pairs(
        eigenvalues: Vec<f64>,
        right: Vec<DVector<f64>>,
        left: Vec<DVector<f64>>,
    ) -> Result<Self, SpectralError> {
        let mut basis = Self {
            eigenvalues,
            right,
            left,
        };
        for i in 0..basis.dim() {
            let factor = gauge_factor(&basis.right[i], Gauge::UnitNorm, None)
                .ok_or_else(|| SpectralError::ExceptionalPoint("vanishing eigenvector".into()))?;
            basis.right[i] *= factor;
            let pairing = basis.left[i].dot(&basis.right[i]);
            let scale = basis.left[i].norm();
            if !(pairing.abs() > 1e-12 * scale) {
                return Err(SpectralError::ExceptionalPoint(format!(
                    "left and right eigenvectors of branch {i} are orthogonal (defective matrix)"
                )));
            }
            basis.left[i] /= pairing;
        }
        Ok(basis)
    }
}

/// Scale factor taking `v` into `gauge`. With `previous` given (unit-norm
/// gauge only), the sign follows the overlap with the previous vector
/// instead of the first component.
fn gauge_factor(v: &DVector<f64>, gauge: Gauge, previous: Option<&DVector<f64>>) -> Option<f64> {
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return None;
    }
    match gauge {
        Gauge::UnitNorm => {
            let sign = match previous {
                Some(p) if v.dot(p) < 0.0 => -1.0,
                Some(_) => 1.0,
                None => v
                    .iter()
                    .find(|c| c.abs() > 1e-6 * norm)
                    .map_or(1.0, |c| c.signum()),
            };
            Some(sign / norm)
        }
        Gauge::FirstComponent => {
            let first = v[0];
            if first.abs() <= 1e-8 * norm {
                None
            } else {
                Some(1.0 / first)
            }
        }
    }
}

fn check_matrix(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(SpectralError::Shape {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NonFinite);
    }
    Ok(m.norm().max(1.0))
}

fn degeneracy_tolerance(scale: f64) -> f64 {
    DEGENERACY_TOL * scale
}

/// Biorthogonal eigen-system of `m`; the closed form for 2x2 inputs, the
/// general QR route otherwise.
pub fn eigendecompose(m: &DMatrix<f64>) -> Result<BiorthogonalBasis, SpectralError> {
    if m.nrows() == 2 && m.ncols() == 2 {
        two_body_eigensystem(m)
    } else {
        numeric_eigensystem(m)
    }
}

/// Closed-form eigen-system of a 2x2 matrix,
/// `lambda = tr/2 +- sqrt(tr^2/4 - det)`.
pub fn two_body_eigensystem(m: &DMatrix<f64>) -> Result<BiorthogonalBasis, SpectralError> {
    let scale = check_matrix(m)?;
    if m.nrows() != 2 {
        return Err(SpectralError::Shape {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let (p, q, r, s) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_trace = 0.5 * (p + s);
    // tr^2/4 - det written without cancellation
    let half_diff = 0.5 * (p - s);
    let discriminant = half_diff * half_diff + q * r;
    let tol = degeneracy_tolerance(scale);
    if discriminant < 0.0 {
        let gap = 2.0 * (-discriminant).sqrt();
        return Err(SpectralError::ExceptionalPoint(if gap < tol {
            "eigenvalues coalesce".into()
        } else {
            format!("complex eigenvalue pair (imaginary gap {gap:e})")
        }));
    }
    let root = discriminant.sqrt();
    if 2.0 * root < tol {
        return Err(SpectralError::ExceptionalPoint(format!(
            "eigenvalues coalesce (gap {:e})",
            2.0 * root
        )));
    }
    let det = p * s - q * r;
    let (upper, lower) = if half_trace > 0.0 {
        let upper = half_trace + root;
        (upper, det / upper)
    } else {
        let lower = half_trace - root;
        let upper = if lower != 0.0 { det / lower } else { half_trace + root };
        (upper, lower)
    };
    let eigenvalues = vec![upper, lower];

    let pick = |a: [f64; 2], b: [f64; 2]| {
        let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        DVector::from_column_slice(&v)
    };
    let right = eigenvalues
        .iter()
        .map(|&l| pick([q, l - p], [l - s, r]))
        .collect();
    let left = eigenvalues
        .iter()
        .map(|&l| pick([r, l - p], [l - s, q]))
        .collect();
    BiorthogonalBasis::from_pairs(eigenvalues, right, left)
}

/// General eigen-system via Hessenberg reduction, Francis QR and inverse
/// iteration.
pub fn numeric_eigensystem(m: &DMatrix<f64>) -> Result<BiorthogonalBasis, SpectralError> {
    let scale = check_matrix(m)?;
    let n = m.nrows();
    if n == 1 {
        let one = DVector::from_element(1, 1.0);
        return BiorthogonalBasis::from_pairs(vec![m[(0, 0)]], vec![one.clone()], vec![one]);
    }
    let tol = degeneracy_tolerance(scale);

    let mut h = m.clone();
    reduce_to_hessenberg(&mut h);
    let (re, im) = hessenberg_qr_eigenvalues(&h)?;
    for (r, i) in re.iter().zip(&im) {
        if *i != 0.0 {
            let gap = 2.0 * i.abs();
            return Err(SpectralError::ExceptionalPoint(if gap < tol {
                format!("eigenvalues coalesce near {r}")
            } else {
                format!("complex eigenvalue pair {r} +- {}i", i.abs())
            }));
        }
    }
    let mut eigenvalues = re;
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    if let Some(w) = eigenvalues.windows(2).find(|w| w[0] - w[1] < tol) {
        return Err(SpectralError::ExceptionalPoint(format!(
            "eigenvalues {} and {} coalesce",
            w[0], w[1]
        )));
    }

    let mt = m.transpose();
    let mut right = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    for (k, &l) in eigenvalues.iter().enumerate() {
        let gap = eigenvalues
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, o)| (o - l).abs())
            .fold(f64::INFINITY, f64::min);
        right.push(inverse_iteration(m, l, gap, scale));
        left.push(inverse_iteration(&mt, l, gap, scale));
    }
    BiorthogonalBasis::from_pairs(eigenvalues, right, left)
}

/// Null vector of `m - lambda I` by shifted inverse iteration.
fn inverse_iteration(m: &DMatrix<f64>, lambda: f64, gap: f64, scale: f64) -> DVector<f64> {
    let n = m.nrows();
    let mut shift = (1e-6 * gap).max(4.0 * f64::EPSILON * scale);
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i + 1) as f64).sin());
    v /= v.norm();
    let identity = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    while iterations < 12 {
        let lu = (m - (lambda + shift) * &identity).lu();
        match lu.solve(&v) {
            Some(w) if w.iter().all(|c| c.is_finite()) && w.norm() > 0.0 => {
                v = &w / w.norm();
                iterations += 1;
                let residual = (m * &v - lambda * &v).norm();
                if iterations >= 3 && residual <= 1e-13 * scale {
                    break;
                }
            }
            _ => shift *= 10.0,
        }
    }
    v
}

/// In-place Householder reduction to upper Hessenberg form.
fn reduce_to_hessenberg(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let mut v: Vec<f64> = (0..len).map(|i| a[(k + 1 + i, k)]).collect();
        let alpha = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        v[0] += if v[0] >= 0.0 { alpha } else { -alpha };
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for j in 0..n {
            let s: f64 = (0..len).map(|i| v[i] * a[(k + 1 + i, j)]).sum();
            let f = 2.0 * s / vv;
            for i in 0..len {
                a[(k + 1 + i, j)] -= f * v[i];
            }
        }
        for i in 0..n {
            let s: f64 = (0..len).map(|j| a[(i, k + 1 + j)] * v[j]).sum();
            let f = 2.0 * s / vv;
            for j in 0..len {
                a[(i, k + 1 + j)] -= f * v[j];
            }
        }
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix. Returns real and
/// imaginary parts of all eigenvalues.
fn hessenberg_qr_eigenvalues(h: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>), SpectralError> {
    let n = h.nrows();
    // 1-based working copy keeps the classic deflation bookkeeping readable
    let mut a = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.max(2) - 1)..=n {
            anorm += a[i][j].abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            // look for a single small subdiagonal element
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                // one root
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[nn - 1][nn - 1];
            let mut w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                // two roots
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }
            if its == MAX_QR_ITERATIONS {
                return Err(SpectralError::NoConvergence);
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = nn - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[m][m];
                let r0 = x - z;
                let s0 = y - z;
                p = (r0 * s0 - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r0 - s0;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }

            // double QR step on rows l..nn and columns m..nn
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let mut pp = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            pp += r * a[k + 2][j];
                            a[k + 2][j] -= pp * z;
                        }
                        a[k + 1][j] -= pp * y;
                        a[k][j] -= pp * x;
                    }
                    let mmin = nn.min(k + 3);
                    for i in l..=mmin {
                        let mut pp = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            pp += z * a[i][k + 2];
                            a[i][k + 2] -= pp * r;
                        }
                        a[i][k + 1] -= pp * q;
                        a[i][k] -= pp;
                    }
                }
                k += 1;
            }
            if l >= nn - 1 {
                break;
            }
        }
    }
    Ok((wr[1..].to_vec(), wi[1..].to_vec()))
}

/// Two-body chart of one eigen-branch: `x = G21 / (b + lambda)`,
/// `y = G12 / G21`, `beta = 1 + x^2 y`, with `phi = (1, x)` and
/// `psi = (1, x y) / beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBodyBranch {
    pub x: f64,
    pub y: f64,
    pub beta: f64,
}

impl TwoBodyBranch {
    pub fn right(&self) -> DVector<f64> {
        DVector::from_column_slice(&[1.0, self.x])
    }

    pub fn left(&self) -> DVector<f64> {
        DVector::from_column_slice(&[1.0 / self.beta, self.x * self.y / self.beta])
    }
}

/// Parametrizes both branches of a two-body eigen-system. `b` is the total
/// outflow rate of body 2, `G21 + G2b`.
pub fn two_body_parametrization(
    basis: &BiorthogonalBasis,
    b: f64,
    g12: f64,
    g21: f64,
) -> Result<Vec<TwoBodyBranch>, SpectralError> {
    if g21 == 0.0 {
        return Err(SpectralError::UndefinedRatio);
    }
    let y = g12 / g21;
    let tol = 1e-12 * b.abs().max(1.0);
    basis
        .eigenvalues()
        .iter()
        .enumerate()
        .map(|(branch, &l)| {
            let denominator = b + l;
            if denominator.abs() < tol {
                return Err(SpectralError::ParametrizationSingular { branch, denominator });
            }
            let x = g21 / denominator;
            Ok(TwoBodyBranch {
                x,
                y,
                beta: 1.0 + x * x * y,
            })
        })
        .collect()
}

/// Gauge-fixed eigen-systems on a time grid with stable branch labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTrajectory {
    times: Vec<f64>,
    bases: Vec<BiorthogonalBasis>,
    gauge: Gauge,
}

impl EigenTrajectory {
    pub(crate) fn from_parts(times: Vec<f64>, bases: Vec<BiorthogonalBasis>, gauge: Gauge) -> Self {
        debug_assert_eq!(times.len(), bases.len());
        Self { times, bases, gauge }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bases[0].dim()
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn basis(&self, k: usize) -> &BiorthogonalBasis {
        &self.bases[k]
    }

    pub fn bases(&self) -> &[BiorthogonalBasis] {
        &self.bases
    }

    pub fn eigenvalue(&self, branch: usize, k: usize) -> f64 {
        self.bases[k].eigenvalue(branch)
    }

    pub fn right(&self, branch: usize, k: usize) -> &DVector<f64> {
        self.bases[k].right(branch)
    }

    pub fn left(&self, branch: usize, k: usize) -> &DVector<f64> {
        self.bases[k].left(branch)
    }

    /// Eigenvalue history of one branch.
    pub fn eigenvalue_series(&self, branch: usize) -> Vec<f64> {
        self.bases.iter().map(|b| b.eigenvalue(branch)).collect()
    }

    pub fn max_biorthogonality_residual(&self) -> f64 {
        self.bases
            .iter()
            .map(BiorthogonalBasis::biorthogonality_residual)
            .fold(0.0, f64::max)
    }
}

/// Follows every eigen-branch of `matrix_at(t)` across `times`.
///
/// Branches at consecutive grid points are matched to the nearest eigenvalue;
/// a match is accepted only when the runner-up is more than twice as far
/// away. Right eigenvectors are put into `gauge` (unit-norm vectors keep the
/// sign of their overlap with the previous step) and left eigenvectors are
/// rescaled to keep `psi_i . phi_i = 1`.
pub fn track_branches<F>(times: &[f64], gauge: Gauge, mut matrix_at: F) -> Result<EigenTrajectory, SpectralError>
where
    F: FnMut(f64) -> Result<DMatrix<f64>, ModelError>,
{
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SpectralError::BadGrid);
    }
    let mut bases: Vec<BiorthogonalBasis> = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let m = matrix_at(t).map_err(|e| SpectralError::from(e).at(t))?;
        let mut basis = eigendecompose(&m).map_err(|e| e.at(t))?;
        if let Some(prev) = bases.last() {
            let order = match_branches(prev, &basis).ok_or(
                SpectralError::GridTooCoarse {
                    previous: times[k - 1],
                    time: t,
                },
            )?;
            basis = basis.permuted(&order);
            for i in 0..basis.dim() {
                let factor = gauge_factor(&basis.right[i], gauge, Some(&prev.right[i]))
                    .ok_or(SpectralError::GaugeSingular { branch: i })
                    .map_err(|e| e.at(t))?;
                basis.apply_gauge(i, factor, gauge);
                if basis.right[i].dot(&prev.right[i]) <= 0.0 {
                    return Err(SpectralError::GaugeSingular { branch: i }.at(t));
                }
            }
        } else {
            basis = basis.regauge(gauge).map_err(|e| e.at(t))?;
        }
        bases.push(basis);
    }
    Ok(EigenTrajectory::from_parts(times.to_vec(), bases, gauge))
}

/// `order[i]` is the index in `next` continuing branch `i` of `prev`.
/// Besides the eigenvalue margin, the matched right eigenvectors must stay
/// within 60 degrees of each other.
fn match_branches(prev: &BiorthogonalBasis, next: &BiorthogonalBasis) -> Option<Vec<usize>> {
    let n = prev.dim();
    let mut order = Vec::with_capacity(n);
    let mut taken = vec![false; n];
    for (i, &p) in prev.eigenvalues().iter().enumerate() {
        let mut best = (usize::MAX, f64::INFINITY);
        let mut runner_up = f64::INFINITY;
        for (j, &q) in next.eigenvalues().iter().enumerate() {
            let d = (q - p).abs();
            if d < best.1 {
                runner_up = best.1;
                best = (j, d);
            } else if d < runner_up {
                runner_up = d;
            }
        }
        if best.0 == usize::MAX || taken[best.0] || !(runner_up > 2.0 * best.1) {
            return None;
        }
        let (a, b) = (prev.right(i), next.right(best.0));
        if a.dot(b).abs() <= 0.5 * a.norm() * b.norm() {
            return None;
        }
        taken[best.0] = true;
        order.push(best.0);
    }
    Some(order)
}
