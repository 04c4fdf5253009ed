//! Gauss map sampling and asymptotic curves on height-field patches.
//!
//! A patch is the graph of `z = F(x, y)` over a disk. Normals come from
//! central differences of `F`, the differential of the Gauss map from
//! central differences of the normal field. The asymptotic direction at a
//! point is the kernel of that differential; on a developable patch its
//! integral curves are straight segments along which the normal is
//! constant.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use thiserror::Error;

use crate::exec::Exec;
use crate::format::sig17;
use crate::line_geometry::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticError {
    #[error("point ({x}, {y}) is too close to the patch boundary for central differences")]
    BoundaryPoint { x: f64, y: f64 },
    #[error("mean curvature vanishes at ({x}, {y})")]
    FlatPointReached { x: f64, y: f64 },
    #[error("patch is not normalised: {0}")]
    NormalizationFailed(String),
    #[error("invalid patch: {0}")]
    BadPatch(String),
    #[error("grid parse error: {0}")]
    Parse(String),
}

pub type HeightFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Heights on a regular square grid, interpolated by bicubic Catmull-Rom
/// splines.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightGrid {
    pub x0: f64,
    pub y0: f64,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: `z[j * nx + i]` is the height at `(x0 + i·s, y0 + j·s)`.
    pub z: Vec<f64>,
}

fn catmull_rom(p: [f64; 4], t: f64) -> f64 {
    let [p0, p1, p2, p3] = p;
    0.5 * (2.0 * p1
        + (-p0 + p2) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t * t * t)
}

impl HeightGrid {
    pub fn sample(f: impl Fn(f64, f64) -> f64, x0: f64, y0: f64, spacing: f64, nx: usize, ny: usize) -> HeightGrid {
        let mut z = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                z.push(f(x0 + i as f64 * spacing, y0 + j as f64 * spacing));
            }
        }
        HeightGrid { x0, y0, spacing, nx, ny, z }
    }

    fn at(&self, i: isize, j: isize) -> f64 {
        let i = i.clamp(0, self.nx as isize - 1) as usize;
        let j = j.clamp(0, self.ny as isize - 1) as usize;
        self.z[j * self.nx + i]
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let fx = (x - self.x0) / self.spacing;
        let fy = (y - self.y0) / self.spacing;
        let i = (fx.floor() as isize).clamp(0, self.nx as isize - 2);
        let j = (fy.floor() as isize).clamp(0, self.ny as isize - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let mut rows = [0.0; 4];
        for (k, row) in rows.iter_mut().enumerate() {
            let jj = j - 1 + k as isize;
            *row = catmull_rom(
                [self.at(i - 1, jj), self.at(i, jj), self.at(i + 1, jj), self.at(i + 2, jj)],
                tx,
            );
        }
        catmull_rom(rows, ty)
    }

    /// Parses `x,y,z` rows (an optional non-numeric header line is
    /// skipped). The points must fill a regular square grid.
    pub fn from_csv(text: &str) -> Result<HeightGrid, AsymptoticError> {
        let mut pts = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(AsymptoticError::Parse(format!("line {}: expected 3 fields", n + 1)));
            }
            let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.iter().all(|x| x.is_finite()) => pts.push([v[0], v[1], v[2]]),
                Ok(_) => return Err(AsymptoticError::Parse(format!("line {}: non-finite value", n + 1))),
                Err(_) if pts.is_empty() && n == 0 => continue,
                Err(e) => return Err(AsymptoticError::Parse(format!("line {}: {e}", n + 1))),
            }
        }
        let axis = |k: usize| {
            let mut v: Vec<f64> = pts.iter().map(|p| p[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (xs, ys) = (axis(0), axis(1));
        if xs.len() < 4 || ys.len() < 4 {
            return Err(AsymptoticError::Parse("grid needs at least 4 distinct x and y values".into()));
        }
        let spacing = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        let regular = |v: &[f64]| {
            v.windows(2)
                .all(|w| ((w[1] - w[0]) - spacing).abs() <= 1e-9 * spacing.abs().max(1.0))
        };
        if !(spacing > 0.0) || !regular(&xs) || !regular(&ys) {
            return Err(AsymptoticError::Parse("grid is not regular and square".into()));
        }
        let (nx, ny) = (xs.len(), ys.len());
        if pts.len() != nx * ny {
            return Err(AsymptoticError::Parse(format!("expected {} points, found {}", nx * ny, pts.len())));
        }
        let mut z = vec![f64::NAN; nx * ny];
        for p in &pts {
            let i = ((p[0] - xs[0]) / spacing).round() as usize;
            let j = ((p[1] - ys[0]) / spacing).round() as usize;
            z[j * nx + i] = p[2];
        }
        if z.iter().any(|v| v.is_nan()) {
            return Err(AsymptoticError::Parse("duplicate grid points".into()));
        }
        Ok(HeightGrid {
            x0: xs[0],
            y0: ys[0],
            spacing,
            nx,
            ny,
            z,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z\n");
        for j in 0..self.ny {
            for i in 0..self.nx {
                let x = self.x0 + i as f64 * self.spacing;
                let y = self.y0 + j as f64 * self.spacing;
                out.push_str(&format!("{},{},{}\n", sig17(x), sig17(y), sig17(self.z[j * self.nx + i])));
            }
        }
        out
    }
}

#[derive(Clone)]
pub enum HeightSource {
    Analytic(HeightFn),
    Grid(HeightGrid),
}

impl fmt::Debug for HeightSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeightSource::Analytic(_) => f.write_str("Analytic(..)"),
            HeightSource::Grid(g) => write!(f, "Grid({}x{}, spacing {})", g.nx, g.ny, g.spacing),
        }
    }
}

/// The graph of a height function over the disk of radius `radius` about
/// `center`.
#[derive(Debug, Clone)]
pub struct SurfacePatch {
    pub source: HeightSource,
    pub center: [f64; 2],
    pub radius: f64,
    /// Finite-difference step.
    pub step: f64,
    /// Singular values of `dn` above this count as curvature.
    pub flat_threshold: f64,
}

/// Default curvature threshold for a finite-difference step `h`.
pub fn default_flat_threshold(h: f64) -> f64 {
    10.0 * f64::EPSILON / (h * h)
}

impl SurfacePatch {
    pub fn analytic(f: HeightFn, center: [f64; 2], radius: f64, step: f64) -> Result<SurfacePatch, AsymptoticError> {
        if !(radius > 0.0 && step > 0.0 && radius.is_finite()) || 4.0 * step >= radius {
            return Err(AsymptoticError::BadPatch(format!("radius {radius}, step {step}")));
        }
        Ok(SurfacePatch {
            source: HeightSource::Analytic(f),
            center,
            radius,
            step,
            flat_threshold: default_flat_threshold(step),
        })
    }

    /// Patch over the largest disk well inside the grid.
    pub fn from_grid(grid: HeightGrid) -> Result<SurfacePatch, AsymptoticError> {
        if grid.nx < 4 || grid.ny < 4 || grid.z.len() != grid.nx * grid.ny {
            return Err(AsymptoticError::BadPatch("grid too small".into()));
        }
        if grid.z.iter().any(|v| !v.is_finite()) {
            return Err(AsymptoticError::BadPatch("grid heights must be finite".into()));
        }
        let s = grid.spacing;
        let w = (grid.nx - 1) as f64 * s;
        let h = (grid.ny - 1) as f64 * s;
        let center = [grid.x0 + w / 2.0, grid.y0 + h / 2.0];
        let radius = w.min(h) / 2.0 - s;
        let step = s / 4.0;
        if radius <= 4.0 * step {
            return Err(AsymptoticError::BadPatch("grid too small".into()));
        }
        Ok(SurfacePatch {
            source: HeightSource::Grid(grid),
            center,
            radius,
            step,
            flat_threshold: default_flat_threshold(step),
        })
    }

    pub fn height(&self, x: f64, y: f64) -> f64 {
        match &self.source {
            HeightSource::Analytic(f) => f(x, y),
            HeightSource::Grid(g) => g.eval(x, y),
        }
    }

    pub fn point(&self, x: f64, y: f64) -> Vec3 {
        Vec3::new(x, y, self.height(x, y))
    }

    /// Whether `(x, y)` lies at least `margin` inside the disk.
    pub fn contains(&self, x: f64, y: f64, margin: f64) -> bool {
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        (dx * dx + dy * dy).sqrt() <= self.radius - margin
    }

    /// Margin needed for the nested central differences of `gauss_sample`.
    pub fn margin(&self) -> f64 {
        2.0 * self.step
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let h = self.step;
        [
            (self.height(x + h, y) - self.height(x - h, y)) / (2.0 * h),
            (self.height(x, y + h) - self.height(x, y - h)) / (2.0 * h),
        ]
    }

    /// Upward unit normal.
    pub fn normal(&self, x: f64, y: f64) -> Vec3 {
        let [fx, fy] = self.gradient(x, y);
        Vec3::new(-fx, -fy, 1.0) / (1.0 + fx * fx + fy * fy).sqrt()
    }
}

/// Named analytic test surfaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Plane,
    /// `F = c·y²`.
    ParabolicCylinder { c: f64 },
    /// Upper half of the circular cylinder of the given radius around the
    /// `x` axis.
    Cylinder { radius: f64 },
    /// `F = c·y²/(x + apex)`: a cone with vertex `(−apex, 0, 0)`.
    Cone { c: f64, apex: f64 },
    /// Upper hemisphere of the given radius.
    Sphere { radius: f64 },
}

impl Preset {
    pub const NAMES: [&'static str; 5] = ["plane", "parabolic-cylinder", "cylinder", "cone", "sphere"];

    /// The preset with default parameters.
    pub fn from_name(name: &str) -> Option<Preset> {
        Some(match name {
            "plane" => Preset::Plane,
            "parabolic-cylinder" => Preset::ParabolicCylinder { c: 0.5 },
            "cylinder" => Preset::Cylinder { radius: 1.0 },
            "cone" => Preset::Cone { c: 0.5, apex: 4.0 },
            "sphere" => Preset::Sphere { radius: 1.0 },
            _ => return None,
        })
    }

    pub fn height_fn(&self) -> HeightFn {
        match *self {
            Preset::Plane => Arc::new(|_, _| 0.0),
            Preset::ParabolicCylinder { c } => Arc::new(move |_, y| c * y * y),
            Preset::Cylinder { radius } => Arc::new(move |_, y| (radius * radius - y * y).max(0.0).sqrt()),
            Preset::Cone { c, apex } => Arc::new(move |x, y| c * y * y / (x + apex)),
            Preset::Sphere { radius } => Arc::new(move |x, y| (radius * radius - x * x - y * y).max(0.0).sqrt()),
        }
    }

    /// Largest disk about the origin on which the preset is a smooth graph,
    /// with some room to spare.
    pub fn max_radius(&self) -> f64 {
        match *self {
            Preset::Plane | Preset::ParabolicCylinder { .. } => f64::INFINITY,
            Preset::Cylinder { radius } | Preset::Sphere { radius } => 0.9 * radius,
            Preset::Cone { apex, .. } => 0.9 * apex,
        }
    }

    pub fn patch(&self, radius: f64, step: f64) -> Result<SurfacePatch, AsymptoticError> {
        if radius > self.max_radius() {
            return Err(AsymptoticError::BadPatch(format!(
                "radius {radius} exceeds {} for this preset",
                self.max_radius()
            )));
        }
        SurfacePatch::analytic(self.height_fn(), [0.0, 0.0], radius, step)
    }
}

/// Gauss map data at one point of a patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSample {
    pub point: Vec3,
    pub normal: Vec3,
    /// Orthonormal tangent frame in which `dn` is expressed.
    pub frame: [Vec3; 2],
    /// `dn` in the tangent frame: `dn[i][j]` is the `i`th component of the
    /// image of the `j`th frame vector.
    pub dn: [[f64; 2]; 2],
    /// Singular values of `dn`, smaller first.
    pub singular_values: [f64; 2],
    /// Unit kernel direction.
    pub kernel: Vec3,
    /// `kernel × normal`.
    pub w: Vec3,
    /// Whether `dn` has nontrivial image.
    pub curved: bool,
}

fn gauss_sample_oriented(patch: &SurfacePatch, x: f64, y: f64, prev: Option<Vec3>) -> Result<GaussSample, AsymptoticError> {
    if !patch.contains(x, y, patch.margin()) {
        return Err(AsymptoticError::BoundaryPoint { x, y });
    }
    let h = patch.step;
    let [fx, fy] = patch.gradient(x, y);
    let normal = patch.normal(x, y);
    let e1 = Vec3::new(1.0, 0.0, fx);
    let e2 = Vec3::new(0.0, 1.0, fy);
    let nx = (patch.normal(x + h, y) - patch.normal(x - h, y)) / (2.0 * h);
    let ny = (patch.normal(x, y + h) - patch.normal(x, y - h)) / (2.0 * h);

    let t1 = e1.normalized().expect("tangent vector has unit x component");
    let t2 = (e2 - t1 * e2.dot(t1)).normalized().expect("tangent vectors are independent");
    // dn in the frame: Tᵀ·N·(Tᵀ·J)⁻¹ with J = [e1 e2] and N = [n_x n_y].
    let tj = Matrix2::new(t1.dot(e1), t1.dot(e2), t2.dot(e1), t2.dot(e2));
    let tn = Matrix2::new(t1.dot(nx), t1.dot(ny), t2.dot(nx), t2.dot(ny));
    let m = tn * tj.try_inverse().expect("graph tangent frame is invertible");
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let (s0, s1) = (svd.singular_values[0], svd.singular_values[1]);
    let (small, large, row) = if s0 <= s1 { (s0, s1, 0) } else { (s1, s0, 1) };
    let curved = large > patch.flat_threshold;

    let from_frame = |a: f64, b: f64| t1 * a + t2 * b;
    let mut kernel = from_frame(vt[(row, 0)], vt[(row, 1)]);
    let isotropic = large - small <= patch.flat_threshold;
    match prev {
        Some(p) if isotropic => {
            // No preferred direction: carry the previous one along.
            let proj = p - normal * p.dot(normal);
            if let Some(k) = proj.normalized() {
                kernel = k;
            }
        }
        Some(p) => {
            if kernel.dot(p) < 0.0 {
                kernel = -kernel;
            }
        }
        None => {
            if isotropic {
                kernel = t1;
            }
            let flip = if kernel.x.abs() > 1e-12 { kernel.x < 0.0 } else { kernel.y < 0.0 };
            if flip {
                kernel = -kernel;
            }
        }
    }
    let kernel = kernel.normalized().unwrap_or(t1);
    Ok(GaussSample {
        point: patch.point(x, y),
        normal,
        frame: [t1, t2],
        dn: [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]],
        singular_values: [small, large],
        kernel,
        w: kernel.cross(normal),
        curved,
    })
}

/// Normal, shape differential and kernel direction at `(x, y)`. The kernel
/// sign is fixed by a positive `x` component, else positive `y`.
pub fn gauss_sample(patch: &SurfacePatch, x: f64, y: f64) -> Result<GaussSample, AsymptoticError> {
    gauss_sample_oriented(patch, x, y, None)
}

/// Why a trace ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxLength,
    Boundary,
    /// The next point has vanishing mean curvature.
    FlatPoint,
    /// A caller-supplied stopping condition fired.
    Condition,
}

/// A polyline traced along the kernel field.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub points: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub length: f64,
    pub stop: StopReason,
}

/// Largest distance from a polyline's vertices to its chord, divided by the
/// chord length.
pub fn chord_deviation(points: &[Vec3]) -> f64 {
    let (a, b) = match (points.first(), points.last()) {
        (Some(a), Some(b)) if points.len() > 2 => (*a, *b),
        _ => return 0.0,
    };
    let chord = b - a;
    let len = chord.norm();
    if len == 0.0 {
        return f64::INFINITY;
    }
    let u = chord / len;
    points
        .iter()
        .map(|p| {
            let d = *p - a;
            (d - u * d.dot(u)).norm()
        })
        .fold(0.0, f64::max)
        / len
}

impl Trace {
    pub fn chord_deviation(&self) -> f64 {
        chord_deviation(&self.points)
    }

    /// Largest angle between the first normal and any later one.
    pub fn normal_spread(&self) -> f64 {
        let n0 = self.normals[0];
        self.normals
            .iter()
            .map(|n| n0.cross(*n).norm().atan2(n0.dot(*n)))
            .fold(0.0, f64::max)
    }
}

/// Integrates the kernel field from `p0` with fixed-step midpoint steps of
/// 3D length `step`, keeping the direction continuous.
pub fn trace_asymptotic(patch: &SurfacePatch, p0: [f64; 2], step: f64, max_len: f64) -> Result<Trace, AsymptoticError> {
    trace_with(patch, p0, None, step, max_len, |_| false)
}

/// As [`trace_asymptotic`], starting in the kernel direction closest to
/// `hint` and stopping early once `stop` holds at a new point.
pub fn trace_with(
    patch: &SurfacePatch,
    p0: [f64; 2],
    hint: Option<Vec3>,
    step: f64,
    max_len: f64,
    stop: impl Fn(Vec3) -> bool,
) -> Result<Trace, AsymptoticError> {
    if !(step > 0.0 && max_len > 0.0) {
        return Err(AsymptoticError::BadPatch(format!("step {step}, max length {max_len}")));
    }
    let first = gauss_sample_oriented(patch, p0[0], p0[1], hint)?;
    if !first.curved {
        return Err(AsymptoticError::FlatPointReached { x: p0[0], y: p0[1] });
    }
    let mut points = vec![first.point];
    let mut normals = vec![first.normal];
    let mut length = 0.0;
    let mut dir = first.kernel;
    let mut p = p0;
    let margin = patch.margin();
    let reason = loop {
        if length >= max_len - 1e-12 * max_len {
            break StopReason::MaxLength;
        }
        let h = step.min(max_len - length);
        let s1 = gauss_sample_oriented(patch, p[0], p[1], Some(dir))?;
        let mid = [p[0] + 0.5 * h * s1.kernel.x, p[1] + 0.5 * h * s1.kernel.y];
        if !patch.contains(mid[0], mid[1], margin) {
            break StopReason::Boundary;
        }
        let s2 = gauss_sample_oriented(patch, mid[0], mid[1], Some(s1.kernel))?;
        let next = [p[0] + h * s2.kernel.x, p[1] + h * s2.kernel.y];
        if !patch.contains(next[0], next[1], margin) {
            break StopReason::Boundary;
        }
        let s3 = gauss_sample_oriented(patch, next[0], next[1], Some(s2.kernel))?;
        if !s3.curved || !s2.curved {
            break StopReason::FlatPoint;
        }
        length += s3.point.distance(*points.last().unwrap());
        points.push(s3.point);
        normals.push(s3.normal);
        dir = s3.kernel;
        p = next;
        if stop(s3.point) {
            break StopReason::Condition;
        }
    };
    Ok(Trace {
        points,
        normals,
        length,
        stop: reason,
    })
}

/// Settings of the connector experiment. Connectors start on the slice
/// `x = start_x` within `neighborhood` of the `x` axis, run back to the
/// slice `x = delta` and forward to `x = forward_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectorOptions {
    pub delta: f64,
    pub start_x: f64,
    pub forward_x: f64,
    pub neighborhood: f64,
    pub connectors: usize,
    pub step: f64,
    /// Connectors leaving this polygon are discarded.
    pub mask: Option<Vec<[f64; 2]>>,
}

impl Default for ConnectorOptions {
    fn default() -> Self {
        ConnectorOptions {
            delta: 0.05,
            start_x: 1.0,
            forward_x: 2.0,
            neighborhood: 0.2,
            connectors: 9,
            step: 0.01,
            mask: None,
        }
    }
}

/// Expansion statistics of the slice-to-slice map along connectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectorReport {
    pub connectors: usize,
    pub discarded: usize,
    pub pairs: usize,
    pub max_ratio: f64,
    pub min_ratio: f64,
    pub mean_ratio: f64,
    /// Largest sampled gradient norm over the radius-3 disk.
    pub max_gradient: f64,
}

/// Largest gradient norm for which projection to the plane shrinks
/// distances by at most a factor `2/3`.
pub const PROJECTION_GRADIENT_LIMIT: f64 = 1.118_033_988_749_895;

fn in_polygon(poly: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + n - 1) % n]);
        if (a[1] > y) != (b[1] > y) && x < (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
    }
    inside
}

/// Point where the segment `a→b` crosses `x = level`.
fn cross_at(a: Vec3, b: Vec3, level: f64) -> Vec3 {
    let f = (level - a.x) / (b.x - a.x);
    a.lerp(b, f)
}

/// Traces connectors through points near `(start_x, 0)` and reports how much
/// the map from the slice `x = start_x` to the slice `x = delta` along them
/// expands distances.
pub fn connector_experiment(
    patch: &SurfacePatch,
    opts: &ConnectorOptions,
    exec: Exec,
) -> Result<ConnectorReport, AsymptoticError> {
    let fail = |m: String| Err(AsymptoticError::NormalizationFailed(m));
    if patch.center[0].abs() > 1e-12 || patch.center[1].abs() > 1e-12 || patch.radius < 3.0 {
        return fail(format!(
            "patch must be a graph over the radius-3 disk about the origin (center {:?}, radius {})",
            patch.center, patch.radius
        ));
    }
    if !(opts.delta > 0.0 && opts.delta < opts.start_x && opts.start_x < opts.forward_x && opts.connectors >= 2) {
        return Err(AsymptoticError::BadPatch(format!("bad connector options {opts:?}")));
    }
    let n = 121;
    let r = 3.0 - patch.margin();
    let grads = exec.map_range(n * n, |k| {
        let x = -r + 2.0 * r * (k % n) as f64 / (n - 1) as f64;
        let y = -r + 2.0 * r * (k / n) as f64 / (n - 1) as f64;
        if patch.contains(x, y, patch.margin()) {
            let [gx, gy] = patch.gradient(x, y);
            (gx * gx + gy * gy).sqrt()
        } else {
            0.0
        }
    });
    let max_gradient = grads.into_iter().fold(0.0, f64::max);
    if !(max_gradient < PROJECTION_GRADIENT_LIMIT) {
        return fail(format!(
            "gradient norm {max_gradient} breaks the 2/3 projection bound (limit {PROJECTION_GRADIENT_LIMIT})"
        ));
    }

    let in_mask = |p: &Vec3| opts.mask.as_ref().is_none_or(|m| in_polygon(m, p.x, p.y));
    let max_len = 4.0 * (opts.forward_x - opts.delta) + 1.0;
    let ends = exec.map_range(opts.connectors, |k| -> Result<Option<(Vec3, Vec3)>, AsymptoticError> {
        let y = -opts.neighborhood + 2.0 * opts.neighborhood * k as f64 / (opts.connectors - 1) as f64;
        let start = [opts.start_x, y];
        let back = trace_with(patch, start, Some(-Vec3::X), opts.step, max_len, |p| p.x <= opts.delta);
        let fwd = trace_with(patch, start, Some(Vec3::X), opts.step, max_len, |p| p.x >= opts.forward_x);
        let (back, fwd) = match (back, fwd) {
            (Ok(b), Ok(f)) => (b, f),
            (Err(AsymptoticError::FlatPointReached { .. }), _) | (_, Err(AsymptoticError::FlatPointReached { .. })) => {
                return Ok(None)
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        if back.stop != StopReason::Condition || fwd.stop != StopReason::Condition {
            return Ok(None);
        }
        if !back.points.iter().chain(&fwd.points).all(in_mask) {
            return Ok(None);
        }
        let m = back.points.len();
        let b = cross_at(back.points[m - 2], back.points[m - 1], opts.delta);
        Ok(Some((back.points[0], b)))
    });
    let mut kept = Vec::new();
    for e in ends {
        if let Some(pair) = e? {
            kept.push(pair);
        }
    }
    let discarded = opts.connectors - kept.len();
    if kept.len() < 2 {
        return fail(format!("only {} connectors reach both slices", kept.len()));
    }
    let mut ratios = Vec::new();
    for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            let (a1, b1) = kept[i];
            let (a2, b2) = kept[j];
            ratios.push(b1.distance(b2) / a1.distance(a2));
        }
    }
    Ok(ConnectorReport {
        connectors: kept.len(),
        discarded,
        pairs: ratios.len(),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
        min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
        mean_ratio: ratios.iter().sum::<f64>() / ratios.len() as f64,
        max_gradient,
    })
}

/// A random developable test surface: a generalized cylinder or a
/// generalized cone, rotated about the `z` axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomDevelopable {
    /// `F = a·s² + b·sin(c·s)` with `s = −x·sin θ + y·cos θ`.
    Cylinder { a: f64, b: f64, c: f64, theta: f64 },
    /// `F = r·g(s/r)` with `r = x' + apex`, `s = y'` in the rotated frame and
    /// `g(q) = a·q² + b·q⁴`.
    Cone { a: f64, b: f64, apex: f64, theta: f64 },
}

impl RandomDevelopable {
    pub fn random(rng: &mut impl rand::Rng) -> RandomDevelopable {
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        if rng.gen_bool(0.5) {
            RandomDevelopable::Cylinder {
                a: rng.gen_range(0.2..0.6),
                b: rng.gen_range(-0.1..0.1),
                c: rng.gen_range(0.5..2.0),
                theta,
            }
        } else {
            RandomDevelopable::Cone {
                a: rng.gen_range(0.2..0.6),
                b: rng.gen_range(0.0..0.2),
                apex: rng.gen_range(3.0..6.0),
                theta,
            }
        }
    }

    pub fn height_fn(&self) -> HeightFn {
        match *self {
            RandomDevelopable::Cylinder { a, b, c, theta } => {
                let (sn, cs) = theta.sin_cos();
                Arc::new(move |x, y| {
                    let s = -x * sn + y * cs;
                    a * s * s + b * (c * s).sin()
                })
            }
            RandomDevelopable::Cone { a, b, apex, theta } => {
                let (sn, cs) = theta.sin_cos();
                Arc::new(move |x, y| {
                    let xr = x * cs + y * sn;
                    let yr = -x * sn + y * cs;
                    let r = xr + apex;
                    let q = yr / r;
                    r * (a * q * q + b * q.powi(4))
                })
            }
        }
    }

    /// Patch on the unit disk about the origin.
    pub fn patch(&self, step: f64) -> SurfacePatch {
        SurfacePatch::analytic(self.height_fn(), [0.0, 0.0], 1.0, step).expect("valid patch parameters")
    }
}
