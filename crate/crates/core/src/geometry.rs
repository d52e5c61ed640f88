// SPDX-License-Identifier: Apache-2.0

//! Parameter-space geometry of the two-body model in the `(x, y)` chart.
//!
//! With `beta = 1 + x^2 y` the connection is `A = (x y / beta, 0)`, its gauge
//! partner is `A' = (0, -x^2 / (2 beta))`, and both share the curvature
//! `B_z = -x / beta^2`. They differ by the gradient of `ln(beta) / 2`.
//!
//! Sign convention: [`circulation`] is the plain line integral of `A` and
//! [`flux`] the plain surface integral of `B_z` with counter-clockwise
//! winding counted positive, so a clockwise loop in the first quadrant has
//! positive circulation and flux. The geometric phase accumulated around a
//! loop is `-circulation`, which is what [`loop_integral`] and
//! [`surface_integral`] return.

use crate::model::{ModelError, ThermalNetwork};
use crate::spectral::{self, SpectralError};

/// Largest distance between first and last point of a closed path.
pub const CLOSURE_TOL: f64 = 1e-9;

const SINGULAR_BETA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("connection singular at (x, y) = ({x}, {y}): beta = {beta}")]
    SingularGauge { x: f64, y: f64, beta: f64 },
    #[error("path is not closed: end points {gap} apart")]
    NotClosed { gap: f64 },
    #[error("path needs at least two points")]
    TooShort,
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which representative of the connection to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    /// `A = (x y / beta) grad x`.
    Primary,
    /// `A' = -(x^2 / (2 beta)) grad y`.
    Partner,
}

fn beta(x: f64, y: f64) -> Result<f64, GeometryError> {
    let b = 1.0 + x * x * y;
    if !(b.abs() >= SINGULAR_BETA) {
        return Err(GeometryError::SingularGauge { x, y, beta: b });
    }
    Ok(b)
}

/// `(A, A')` at `(x, y)`.
pub fn vector_potential(x: f64, y: f64) -> Result<([f64; 2], [f64; 2]), GeometryError> {
    let b = beta(x, y)?;
    Ok(([x * y / b, 0.0], [0.0, -x * x / (2.0 * b)]))
}

pub fn potential(x: f64, y: f64, which: Potential) -> Result<[f64; 2], GeometryError> {
    let (a, a_partner) = vector_potential(x, y)?;
    Ok(match which {
        Potential::Primary => a,
        Potential::Partner => a_partner,
    })
}

/// `B_z = -x / (1 + x^2 y)^2`.
pub fn curvature(x: f64, y: f64) -> Result<f64, GeometryError> {
    let b = beta(x, y)?;
    Ok(-x / (b * b))
}

/// Sampled curve `R(t_k) = (x_k, y_k)` in parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPath {
    times: Vec<f64>,
    points: Vec<[f64; 2]>,
}

impl ParamPath {
    pub fn new(times: Vec<f64>, points: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        if points.len() < 2 || times.len() != points.len() {
            return Err(GeometryError::TooShort);
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::BadGrid("path has non-finite points".into()));
        }
        Ok(Self { times, points })
    }

    /// Path parametrized by sample index.
    pub fn from_points(points: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        let times = (0..points.len()).map(|k| k as f64).collect();
        Self::new(times, points)
    }

    /// Two-body chart of `branch` along `times`: `x = G21 / (b + lambda)`
    /// and `y = G12 / G21` from the instantaneous conductances.
    pub fn two_body(network: &ThermalNetwork, times: &[f64], branch: usize) -> Result<Self, GeometryError> {
        if network.n_bodies() != 2 || network.capacities() != [1.0, 1.0] {
            return Err(GeometryError::BadGrid(
                "the (x, y) chart needs a two-body network with unit capacities".into(),
            ));
        }
        let points = times
            .iter()
            .map(|&t| {
                let m = network.conductance_matrix(t)?;
                let at = |e: SpectralError| SpectralError::AtTime {
                    time: t,
                    source: Box::new(e),
                };
                let basis = spectral::eigendecompose(&m).map_err(at)?;
                let g12 = network.pair_conductance(0, 1, t)?;
                let g21 = network.pair_conductance(1, 0, t)?;
                let b = -m[(1, 1)];
                let chart = spectral::two_body_parametrization(&basis, b, g12, g21).map_err(at)?;
                let br = chart.get(branch).ok_or(GeometryError::BadGrid(format!("no branch {}", branch + 1)))?;
                Ok([br.x, br.y])
            })
            .collect::<Result<Vec<_>, GeometryError>>()?;
        Self::new(times.to_vec(), points)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn closing_gap(&self) -> f64 {
        let (a, b) = (self.points[0], self.points[self.points.len() - 1]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    pub fn is_closed(&self) -> bool {
        self.closing_gap() < CLOSURE_TOL
    }

    /// Same curve traversed backwards.
    pub fn reversed(&self) -> Self {
        let end = self.times[self.times.len() - 1];
        Self {
            times: self.times.iter().rev().map(|t| end - t).collect(),
            points: self.points.iter().rev().copied().collect(),
        }
    }

    fn ensure_closed(&self) -> Result<(), GeometryError> {
        if self.is_closed() {
            Ok(())
        } else {
            Err(GeometryError::NotClosed {
                gap: self.closing_gap(),
            })
        }
    }

    /// Segments of the polyline, closing segment included.
    fn segments(&self) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.points.len();
        (0..n).map(move |k| (self.points[k], self.points[(k + 1) % n]))
    }

    fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        (lo, hi)
    }
}

/// Line integral of the chosen potential along the polyline (Simpson's rule
/// on every straight segment). Closed paths include the closing segment.
pub fn circulation(path: &ParamPath, which: Potential) -> Result<f64, GeometryError> {
    let mut total = 0.0;
    let n = path.points.len();
    let segments = if path.is_closed() { n } else { n - 1 };
    for (a, b) in path.segments().take(segments) {
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let (pa, pm, pb) = (potential(a[0], a[1], which)?, potential(mid[0], mid[1], which)?, potential(b[0], b[1], which)?);
        for d in 0..2 {
            total += (b[d] - a[d]) * (pa[d] + 4.0 * pm[d] + pb[d]) / 6.0;
        }
    }
    Ok(total)
}

/// Geometric phase carried by a closed loop, `-circulation`.
pub fn loop_integral(path: &ParamPath, which: Potential) -> Result<f64, GeometryError> {
    path.ensure_closed()?;
    Ok(-circulation(path, which)?)
}

/// Winding number of a closed path around `point`, counter-clockwise
/// positive.
pub fn winding_number(path: &ParamPath, point: [f64; 2]) -> i32 {
    let mut w = 0;
    for (a, b) in path.segments() {
        if let Some((y, dir)) = vertical_crossing(a, b, point[0]) {
            if y > point[1] {
                w -= dir;
            }
        }
    }
    w
}

/// Where segment `a -> b` crosses the vertical line `x = xc`, with `+1`
/// when it moves towards larger `x`. Half-open in `x` so shared vertices
/// count once.
fn vertical_crossing(a: [f64; 2], b: [f64; 2], xc: f64) -> Option<(f64, i32)> {
    let dir = if a[0] <= xc && xc < b[0] {
        1
    } else if b[0] <= xc && xc < a[0] {
        -1
    } else {
        return None;
    };
    let s = (xc - a[0]) / (b[0] - a[0]);
    Some((a[1] + s * (b[1] - a[1]), dir))
}

/// Resolution of the winding-number surface integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceOptions {
    /// Evenly spaced slab cuts across the bounding box, and sub-intervals
    /// per box height for the quadrature along each node line.
    pub resolution: usize,
    /// Fractional padding added on every side of the bounding box.
    pub padding: f64,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        Self {
            resolution: 512,
            padding: 0.05,
        }
    }
}

const GAUSS_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// `int field * winding dx dy` over the plane.
///
/// The padded bounding box is split into vertical slabs at every vertex
/// abscissa of the path and at `resolution` evenly spaced cuts. Inside a
/// slab no vertex is met, so the crossing heights are linear in `x` and the
/// winding number is piecewise constant between them along any vertical
/// line. Each slab is integrated with Gauss-Legendre nodes in `x`; along
/// each node line every constant-winding stretch gets composite
/// Gauss-Legendre quadrature in `y`. Self-crossing contours contribute each
/// lobe with its own orientation.
pub fn flux_of<F>(path: &ParamPath, options: SurfaceOptions, mut field: F) -> Result<f64, GeometryError>
where
    F: FnMut(f64, f64) -> Result<f64, GeometryError>,
{
    path.ensure_closed()?;
    if options.resolution == 0 || !(options.padding >= 0.0) {
        return Err(GeometryError::BadGrid("resolution must be positive".into()));
    }
    let (mut lo, mut hi) = path.bounding_box();
    if hi[0] - lo[0] <= 0.0 || hi[1] - lo[1] <= 0.0 {
        return Ok(0.0);
    }
    for d in 0..2 {
        let pad = options.padding * (hi[d] - lo[d]);
        lo[d] -= pad;
        hi[d] += pad;
    }
    let hx = (hi[0] - lo[0]) / options.resolution as f64;
    let hy = (hi[1] - lo[1]) / options.resolution as f64;

    let mut cuts: Vec<f64> = (0..=options.resolution).map(|c| lo[0] + c as f64 * hx).collect();
    cuts.extend(path.points.iter().map(|p| p[0]));
    cuts.sort_by(f64::total_cmp);
    let min_width = 1e-14 * (hi[0] - lo[0]);
    cuts.dedup_by(|b, a| *b - *a <= min_width);

    // sweep in x keeping the segments that span the current slab
    let mut segments: Vec<([f64; 2], [f64; 2])> = path.segments().filter(|(a, b)| a[0] != b[0]).collect();
    segments.sort_by(|p, q| p.0[0].min(p.1[0]).total_cmp(&q.0[0].min(q.1[0])));
    let mut next_segment = 0;
    let mut active: Vec<([f64; 2], [f64; 2])> = Vec::new();
    let mut total = 0.0;
    let mut crossings: Vec<(f64, i32)> = Vec::new();
    for slab in cuts.windows(2) {
        let (xa, xb) = (slab[0], slab[1]);
        let (mid, half) = (0.5 * (xa + xb), 0.5 * (xb - xa));
        while next_segment < segments.len() {
            let (a, b) = segments[next_segment];
            if a[0].min(b[0]) > mid {
                break;
            }
            active.push((a, b));
            next_segment += 1;
        }
        active.retain(|(a, b)| a[0].max(b[0]) > mid);
        let mut slab_sum = 0.0;
        for (node, weight) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
            let xc = mid + half * node;
            crossings.clear();
            crossings.extend(active.iter().filter_map(|&(a, b)| vertical_crossing(a, b, xc)));
            if crossings.is_empty() {
                continue;
            }
            crossings.sort_by(|p, q| p.0.total_cmp(&q.0));
            // winding above the topmost crossing is zero; walk downwards
            let mut column = 0.0;
            let mut winding = 0;
            for k in (1..crossings.len()).rev() {
                winding -= crossings[k].1;
                if winding == 0 {
                    continue;
                }
                let (y0, y1) = (crossings[k - 1].0, crossings[k].0);
                column += winding as f64 * gauss_legendre(y0, y1, hy, |y| field(xc, y))?;
            }
            slab_sum += weight * column;
        }
        total += half * slab_sum;
    }
    Ok(total)
}

fn gauss_legendre<F>(a: f64, b: f64, max_width: f64, mut f: F) -> Result<f64, GeometryError>
where
    F: FnMut(f64) -> Result<f64, GeometryError>,
{
    if b <= a {
        return Ok(0.0);
    }
    let pieces = ((b - a) / max_width).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    let mut sum = 0.0;
    for p in 0..pieces {
        let mid = a + (p as f64 + 0.5) * h;
        for (node, weight) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS) {
            sum += weight * f(mid + 0.5 * h * node)?;
        }
    }
    Ok(0.5 * h * sum)
}

/// Winding-weighted integral of `B_z` over the region bounded by the loop.
pub fn flux(path: &ParamPath, options: SurfaceOptions) -> Result<f64, GeometryError> {
    flux_of(path, options, curvature)
}

/// Geometric phase of a closed loop from the enclosed curvature, `-flux`.
pub fn surface_integral(path: &ParamPath, options: SurfaceOptions) -> Result<f64, GeometryError> {
    Ok(-flux(path, options)?)
}

/// Rectangular sampling grid over the `(x, y)` chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl GridSpec {
    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![min];
        }
        (0..n)
            .map(|k| min + (max - min) * (k as f64 / (n - 1) as f64))
            .collect()
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.nx == 0 || self.ny == 0 {
            return Err(GeometryError::BadGrid(format!("{self:?}")));
        }
        if (self.nx > 1 && !(self.x_max > self.x_min)) || (self.ny > 1 && !(self.y_max > self.y_min)) {
            return Err(GeometryError::BadGrid("axis bounds must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// Curvature and both potentials sampled on a grid. Nodes where `beta`
/// vanishes hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Row-major over `ys`, then `xs`.
    pub curvature: Vec<f64>,
    pub potential: Vec<[f64; 2]>,
    pub partner: Vec<[f64; 2]>,
}

impl FieldMap {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.curvature[iy * self.xs.len() + ix]
    }

    /// `(x, y, B_z)` in storage order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.ys.iter().enumerate().flat_map(move |(iy, &y)| {
            self.xs
                .iter()
                .enumerate()
                .map(move |(ix, &x)| (x, y, self.at(ix, iy)))
        })
    }
}

pub fn field_map(spec: &GridSpec) -> Result<FieldMap, GeometryError> {
    spec.validate()?;
    let xs = GridSpec::axis(spec.x_min, spec.x_max, spec.nx);
    let ys = GridSpec::axis(spec.y_min, spec.y_max, spec.ny);
    let mut map = FieldMap {
        curvature: Vec::with_capacity(xs.len() * ys.len()),
        potential: Vec::with_capacity(xs.len() * ys.len()),
        partner: Vec::with_capacity(xs.len() * ys.len()),
        xs,
        ys,
    };
    let nan = [f64::NAN; 2];
    for &y in &map.ys {
        for &x in &map.xs {
            map.curvature.push(curvature(x, y).unwrap_or(f64::NAN));
            let (a, ap) = vector_potential(x, y).unwrap_or((nan, nan));
            map.potential.push(a);
            map.partner.push(ap);
        }
    }
    Ok(map)
}
