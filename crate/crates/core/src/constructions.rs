//! The triangular band, its smoothed approximants and limit metrics.
//!
//! The triangular band has aspect ratio `√3`. Its trapezoid (cut along the
//! left slant, `t = 1/√3`) splits into three equilateral triangles of side
//! `2/√3`:
//!
//! ```text
//!        x _______ x̃            x  = (−1/√3, 1)   x̃ = (1/√3, 1)
//!         /\     /\             w  = (−2/√3, 0)   w̃ = (2/√3, 0)
//!        /  \   /  \            u  = (0, 0)       v  = (0, 1)
//!       /____\ /____\
//!      w      u      w̃
//! ```
//!
//! The middle triangle stays put, the outer two are folded over `xu` and
//! `ux̃` onto it. The smoothed family replaces each crease by a thin
//! developable roll and widens the flat pieces slightly, so that every
//! member is an embedded ruled strip whose only T-pattern is the seam bend
//! `xx̃` together with the stem `uv`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::bound::{check_length_identities, lower_bound, EmbeddedLengths, IdentityReport};
use crate::exec::Exec;
use crate::format::sig17;
use crate::line_geometry::{Segment3, Vec3};
use crate::strip_model::{cut_along, FlatMoebius, FlatPoint, PreBend, RuledStrip, StripError, StripSample, Trapezoid};
use crate::t_pattern::{find_t_pattern_with, SearchError, SearchOptions, TPattern};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("smoothing parameter must satisfy 0 < eps <= 0.25, got {0}")]
    BadEpsilon(f64),
    #[error("sample count must be even, at least 64 and leave room for the rolls, got {0}")]
    BadSampleCount(usize),
    #[error("point sets must have equal size >= 3 and not be collinear")]
    DegenerateConfiguration,
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Strip(#[from] StripError),
    #[error("cannot measure strip: {0}")]
    Measurement(String),
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A rigid motion `p ↦ R p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion {
    pub rotation: [[f64; 3]; 3],
    pub translation: Vec3,
}

impl RigidMotion {
    pub const IDENTITY: RigidMotion = RigidMotion {
        rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        translation: Vec3::ZERO,
    };

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let r = &self.rotation;
        Vec3::new(
            r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z,
            r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z,
            r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z,
        ) + self.translation
    }

    /// Rotation by `π` about the line through `point` with unit `axis`.
    pub fn half_turn(point: Vec3, axis: Vec3) -> RigidMotion {
        let a = axis;
        let mut rotation = [[0.0; 3]; 3];
        let comps = [a.x, a.y, a.z];
        for (i, row) in rotation.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = 2.0 * comps[i] * comps[j] - if i == j { 1.0 } else { 0.0 };
            }
        }
        let m = RigidMotion {
            rotation,
            translation: Vec3::ZERO,
        };
        RigidMotion {
            rotation,
            translation: point - m.apply(point),
        }
    }

    pub fn determinant(&self) -> f64 {
        let r = &self.rotation;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }
}

/// Optimal rigid motion carrying `a` onto `b` and its residuals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub motion: RigidMotion,
    pub rms_residual: f64,
    pub max_residual: f64,
}

fn to_na(p: Vec3) -> Vector3<f64> {
    Vector3::new(p.x, p.y, p.z)
}

fn centroid(pts: &[Vec3]) -> Vec3 {
    pts.iter().fold(Vec3::ZERO, |acc, p| acc + *p) / pts.len() as f64
}

/// Least-squares rotation and translation taking `a` to `b` (orthogonal
/// Procrustes with the reflection case excluded).
pub fn align_rigid(a: &[Vec3], b: &[Vec3]) -> Result<Alignment, ConstructionError> {
    if a.len() != b.len() || a.len() < 3 {
        return Err(ConstructionError::DegenerateConfiguration);
    }
    let ca = centroid(a);
    let cb = centroid(b);
    let mut spread = Matrix3::zeros();
    let mut cov = Matrix3::zeros();
    for (p, q) in a.iter().zip(b) {
        let pa = to_na(*p - ca);
        spread += pa * pa.transpose();
        cov += pa * to_na(*q - cb).transpose();
    }
    let ev = spread.symmetric_eigenvalues();
    let mut ev: Vec<f64> = ev.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    if !(ev[0] > 0.0) || ev[1] <= 1e-20 * ev[0] {
        return Err(ConstructionError::DegenerateConfiguration);
    }
    let svd = cov.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(ConstructionError::DegenerateConfiguration),
    };
    let v = vt.transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = v * d * u.transpose();
    let mut rotation = [[0.0; 3]; 3];
    for (i, row) in rotation.iter_mut().enumerate() {
        for (j, val) in row.iter_mut().enumerate() {
            *val = r[(i, j)];
        }
    }
    let partial = RigidMotion {
        rotation,
        translation: Vec3::ZERO,
    };
    let motion = RigidMotion {
        rotation,
        translation: cb - partial.apply(ca),
    };
    let (mut sum2, mut max) = (0.0, 0.0f64);
    for (p, q) in a.iter().zip(b) {
        let d = motion.apply(*p).distance(*q);
        sum2 += d * d;
        max = max.max(d);
    }
    Ok(Alignment {
        motion,
        rms_residual: (sum2 / a.len() as f64).sqrt(),
        max_residual: max,
    })
}

/// A flat polygon and the rigid motion placing it in space.
#[derive(Debug, Clone, PartialEq)]
pub struct PlPiece {
    pub polygon: Vec<FlatPoint>,
    pub motion: RigidMotion,
}

impl PlPiece {
    pub fn image(&self, p: FlatPoint) -> Vec3 {
        self.motion.apply(Vec3::new(p.x, p.y, 0.0))
    }

    pub fn contains(&self, p: FlatPoint, slack: f64) -> bool {
        let n = self.polygon.len();
        let mut sign = 0.0;
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            let len = a.distance(b);
            let cross = ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) / len;
            if cross.abs() <= slack {
                continue;
            }
            if sign == 0.0 {
                sign = cross.signum();
            } else if cross.signum() != sign {
                return false;
            }
        }
        true
    }
}

/// Piecewise-linear isometry of a flat trapezoid into space.
#[derive(Debug, Clone, PartialEq)]
pub struct PlIsometry {
    pub lambda: f64,
    pub t: f64,
    pub pieces: Vec<PlPiece>,
}

impl PlIsometry {
    /// Image of a point in trapezoid coordinates; the first piece containing
    /// it (within `1e-9`) wins.
    pub fn map(&self, p: FlatPoint) -> Option<Vec3> {
        self.pieces
            .iter()
            .find(|piece| piece.contains(p, 1e-9))
            .map(|piece| piece.image(p))
    }

    /// Largest disagreement between the images of shared polygon vertices.
    pub fn continuity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.pieces.iter().enumerate() {
            for b in &self.pieces[i + 1..] {
                for p in &a.polygon {
                    if b.polygon.iter().any(|q| q.distance(*p) < 1e-12) {
                        worst = worst.max(a.image(*p).distance(b.image(*p)));
                    }
                }
            }
        }
        worst
    }

    pub fn trapezoid(&self) -> Trapezoid {
        Trapezoid {
            lambda: self.lambda,
            t: self.t,
            b: 0.0,
            cut_x: -(self.lambda + self.t) / 2.0,
        }
    }
}

/// Vertex labels of the triangular band, in trapezoid coordinates.
pub mod labels {
    use super::FlatPoint;
    const R3: f64 = 0.577_350_269_189_625_8;

    pub const W: FlatPoint = FlatPoint::new(-2.0 * R3, 0.0);
    pub const X: FlatPoint = FlatPoint::new(-R3, 1.0);
    pub const U: FlatPoint = FlatPoint::new(0.0, 0.0);
    pub const V: FlatPoint = FlatPoint::new(0.0, 1.0);
    pub const X_TILDE: FlatPoint = FlatPoint::new(R3, 1.0);
    pub const W_TILDE: FlatPoint = FlatPoint::new(2.0 * R3, 0.0);
}

/// The triangular band as three rigidly placed triangles.
pub fn triangular_band() -> PlIsometry {
    use labels::*;
    let flat = |p: FlatPoint| Vec3::new(p.x, p.y, 0.0);
    let axis = |a: FlatPoint, b: FlatPoint| (flat(b) - flat(a)).normalized().unwrap();
    PlIsometry {
        lambda: SQRT3,
        t: 1.0 / SQRT3,
        pieces: vec![
            PlPiece {
                polygon: vec![W, U, X],
                motion: RigidMotion::half_turn(flat(U), axis(U, X)),
            },
            PlPiece {
                polygon: vec![U, X_TILDE, X],
                motion: RigidMotion::IDENTITY,
            },
            PlPiece {
                polygon: vec![U, W_TILDE, X_TILDE],
                motion: RigidMotion::half_turn(flat(U), axis(U, X_TILDE)),
            },
        ],
    }
}

/// The T-pattern of the triangular band: the images of the cut `wx` and of
/// the stem `uv`.
pub fn triangular_t_pattern(pl: &PlIsometry) -> (Segment3, Segment3) {
    use labels::*;
    let left = &pl.pieces[0];
    let t = Segment3::new(left.image(W), left.image(X));
    let b = Segment3::new(pl.pieces[1].image(U), pl.pieces[1].image(V));
    (t, b)
}

/// The triangular band as a ruled strip: three fans of bends through `x`,
/// `u` and `x̃`. Neighbouring bends share endpoints, so this strip is a limit
/// object and does not pass foliation validation.
pub fn triangular_strip(per_fan: usize) -> RuledStrip {
    use labels::*;
    let pl = triangular_band();
    let n = per_fan.max(2);
    let trap = pl.trapezoid();
    let mut segs: Vec<PreBend> = Vec::new();
    for k in 0..n {
        let f = k as f64 / n as f64;
        segs.push(PreBend::new(W.lerp(U, f), X));
    }
    for k in 0..n {
        let f = k as f64 / n as f64;
        segs.push(PreBend::new(U, X.lerp(X_TILDE, f)));
    }
    for k in 0..n {
        let f = k as f64 / n as f64;
        segs.push(PreBend::new(U.lerp(W_TILDE, f), X_TILDE));
    }
    let piece_of = |i: usize| i / n;
    let samples = segs
        .iter()
        .enumerate()
        .map(|(i, pb)| {
            let piece = &pl.pieces[piece_of(i)];
            let c = pb.midpoint().x - W.x - 1.0 / (2.0 * SQRT3);
            StripSample {
                s: TAU * c / pl.lambda,
                pre_bend: PreBend::new(trap.to_cover(pb.start), trap.to_cover(pb.end)),
                bend: Segment3::new(piece.image(pb.start), piece.image(pb.end)),
            }
        })
        .collect();
    RuledStrip {
        lambda: pl.lambda,
        samples,
    }
}

/// Tuning of the smoothed family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingOptions {
    /// Total number of bends; even, at least 64.
    pub samples: usize,
    /// Roll radius as a multiple of `eps`.
    pub radius_factor: f64,
    /// Width of the truncated fan tips as a multiple of `eps`.
    pub tip_factor: f64,
    /// Minimum number of bends in a seam roll; crease rolls get four times
    /// as many.
    pub min_roll_samples: usize,
}

impl Default for SmoothingOptions {
    fn default() -> Self {
        SmoothingOptions {
            samples: 512,
            radius_factor: 1.0 / 50.0,
            tip_factor: 1.0 / 100.0,
            min_roll_samples: 16,
        }
    }
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub2(a: FlatPoint, b: [f64; 2]) -> [f64; 2] {
    [a.x - b[0], a.y - b[1]]
}

/// Geometry of one smoothed band, in a flat frame whose `x` axis is centred
/// on the stem.
///
/// Left half, from the seam inwards: a half roll closing the seam, a flat
/// piece folded over the crease `xu` (top edge of width `tip`), the crease
/// roll, and the unfolded middle piece (bottom edge of width `tip`). The right
/// half is the mirror image under `(a, b, z) ↦ (−a, b, −z)`.
///
/// A crease roll runs straight for `πr/2`, turns through a half turn of arc
/// length `πr` and runs straight back for `πr/2`. A half seam roll turns
/// through a quarter turn of arc length `πr`, descending from the folded
/// piece to height 0. Both turns are polygons whose vertices are the sampled
/// rulings (`2m` edges for the crease, `m` for the seam), so that consecutive
/// bends span exactly the flat quadrilaterals between their pre-bends.
#[derive(Debug, Clone)]
struct SmoothBand {
    tip: f64,
    crease_len: f64,
    crease_width: f64,
    seam_len: f64,
    /// Bottom-left corner of the folded piece.
    seam_foot: f64,
    /// Bottom end of the left domain edge.
    left_end: f64,
    lambda: f64,
    /// Seam edges; the crease profile has `4m` edges of which `2m` turn.
    m: usize,
    crease_vertices: Vec<(f64, f64)>,
    seam_vertices: Vec<(f64, f64)>,
}

const E1: [f64; 2] = [-0.5, 0.866_025_403_784_438_6];
const N1: [f64; 2] = [-0.866_025_403_784_438_6, -0.5];
const ES: [f64; 2] = [0.5, 0.866_025_403_784_438_6];
const NS: [f64; 2] = [-0.866_025_403_784_438_6, 0.5];

/// Vertices of a polyline with `edges` edges of length `h`, the `j`th edge
/// having direction `dir(j)`.
fn polyline(edges: usize, h: f64, dir: impl Fn(usize) -> (f64, f64)) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(edges + 1);
    let mut p = (0.0, 0.0);
    out.push(p);
    for j in 0..edges {
        let (c, s) = dir(j);
        p = (p.0 + h * c, p.1 + h * s);
        out.push(p);
    }
    out
}

/// Linear interpolation of a polyline with uniformly spaced vertices.
fn profile_at(vertices: &[(f64, f64)], len: f64, sigma: f64) -> (f64, f64) {
    let edges = vertices.len() - 1;
    let f = (sigma / len).clamp(0.0, 1.0) * edges as f64;
    let j = (f.floor() as usize).min(edges - 1);
    let w = f - j as f64;
    let (a, b) = (vertices[j], vertices[j + 1]);
    (a.0 + w * (b.0 - a.0), a.1 + w * (b.1 - a.1))
}

impl SmoothBand {
    fn new(r: f64, tip: f64, m: usize) -> Self {
        let crease_len = 2.0 * PI * r;
        let seam_len = PI * r;
        let sin60 = SQRT3 / 2.0;
        let crease_width = crease_len / sin60;
        let seam_width = seam_len / sin60;
        let seam_foot = -1.5 * tip - crease_width - 2.0 / SQRT3;
        let left_end = seam_foot - seam_width;
        let turn = |j: usize, edges: usize, total: f64| (j as f64 + 0.5) * total / edges as f64;
        let crease_vertices = polyline(4 * m, crease_len / (4 * m) as f64, |j| {
            if j < m {
                (1.0, 0.0)
            } else if j < 3 * m {
                let psi = turn(j - m, 2 * m, PI);
                (psi.cos(), psi.sin())
            } else {
                (-1.0, 0.0)
            }
        });
        let seam_vertices = polyline(m, seam_len / m as f64, |j| {
            let a = turn(j, m, PI / 2.0);
            (a.cos(), -a.sin())
        });
        SmoothBand {
            tip,
            crease_len,
            crease_width,
            seam_len,
            seam_foot,
            left_end,
            lambda: SQRT3 + 3.0 * tip + 2.0 * crease_width + 2.0 * seam_width,
            m,
            crease_vertices,
            seam_vertices,
        }
    }

    fn p1(&self) -> [f64; 2] {
        [-self.tip / 2.0, 0.0]
    }

    /// Height of the folded piece.
    fn lift(&self) -> f64 {
        self.crease_vertices[4 * self.m].1
    }

    /// Cross-section of the crease roll: offset along the outward normal and
    /// height, as functions of arc length.
    fn crease_profile(&self, sigma: f64) -> (f64, f64) {
        profile_at(&self.crease_vertices, self.crease_len, sigma)
    }

    fn seam_profile(&self, sigma: f64) -> (f64, f64) {
        profile_at(&self.seam_vertices, self.seam_len, sigma)
    }

    fn folded_image(&self, p: FlatPoint) -> Vec3 {
        let p1 = self.p1();
        let d = sub2(p, p1);
        let sigma = dot2(d, N1);
        let tau = dot2(d, E1);
        let s = sigma - self.crease_len;
        Vec3::new(
            p1[0] + tau * E1[0] - s * N1[0],
            p1[1] + tau * E1[1] - s * N1[1],
            self.lift(),
        )
    }

    fn crease_image(&self, p: FlatPoint) -> Vec3 {
        let p1 = self.p1();
        let d = sub2(p, p1);
        let sigma = dot2(d, N1).clamp(0.0, self.crease_len);
        let tau = dot2(d, E1);
        let (cn, cz) = self.crease_profile(sigma);
        Vec3::new(p1[0] + tau * E1[0] + cn * N1[0], p1[1] + tau * E1[1] + cn * N1[1], cz)
    }

    fn seam_image(&self, p: FlatPoint) -> Vec3 {
        let q = [self.seam_foot, 0.0];
        let d = sub2(p, q);
        let sigma = dot2(d, NS).clamp(0.0, self.seam_len);
        let tau = dot2(d, ES);
        let base = self.folded_image(FlatPoint::new(q[0] + tau * ES[0], q[1] + tau * ES[1]));
        let (cn, cz) = self.seam_profile(sigma);
        // The folded piece carries the seam normal to +y.
        base + Vec3::new(0.0, cn, cz)
    }

    fn middle_image(&self, p: FlatPoint) -> Vec3 {
        Vec3::new(p.x, p.y, 0.0)
    }

    /// Bends of the left half from the seam apex up to (excluding) the stem.
    fn left_rulings(&self, count: usize) -> Vec<(PreBend, Segment3)> {
        let inv = 1.0 / SQRT3;
        let seam_outer = PreBend::from_foot(self.left_end, inv);
        let seam_inner = PreBend::from_foot(self.seam_foot, inv);
        let crease_outer = PreBend::from_foot(-self.tip / 2.0 - self.crease_width, -inv);
        let crease_inner = PreBend::from_foot(-self.tip / 2.0, -inv);
        let stem = PreBend::from_foot(0.0, 0.0);

        let mid_x = |pb: &PreBend| pb.midpoint().x;
        let folded_w = mid_x(&crease_outer) - mid_x(&seam_inner);
        let middle_w = mid_x(&stem) - mid_x(&crease_inner);
        let n_seam = self.m;
        let n_crease = 4 * self.m;
        let rest = count - n_seam - n_crease;
        let n_folded = ((rest as f64 * folded_w / (folded_w + middle_w)).round() as usize).clamp(1, rest - 1);
        let n_middle = rest - n_folded;

        let mut out = Vec::with_capacity(count);
        let seg = |pb: PreBend, f: &dyn Fn(FlatPoint) -> Vec3| (pb, Segment3::new(f(pb.start), f(pb.end)));
        for k in 0..n_seam {
            let pb = seam_outer.lerp(&seam_inner, k as f64 / n_seam as f64);
            out.push(seg(pb, &|p| self.seam_image(p)));
        }
        for k in 0..n_folded {
            let pb = seam_inner.lerp(&crease_outer, k as f64 / n_folded as f64);
            out.push(seg(pb, &|p| self.folded_image(p)));
        }
        for k in 0..n_crease {
            let pb = crease_outer.lerp(&crease_inner, k as f64 / n_crease as f64);
            out.push(seg(pb, &|p| self.crease_image(p)));
        }
        let middle_right = PreBend::from_foot(self.tip / 2.0, inv);
        for k in 0..n_middle {
            let pb = crease_inner.lerp(&middle_right, 0.5 * k as f64 / n_middle as f64);
            out.push(seg(pb, &|p| self.middle_image(p)));
        }
        out
    }
}

fn mirror_bend(pb: &PreBend, seg: &Segment3) -> (PreBend, Segment3) {
    let mf = |p: FlatPoint| FlatPoint::new(-p.x, p.y);
    let m3 = |p: Vec3| Vec3::new(-p.x, p.y, -p.z);
    (
        PreBend::new(mf(pb.start), mf(pb.end)),
        Segment3::new(m3(seg.start), m3(seg.end)),
    )
}

/// Aspect ratio of the smoothed band for `eps` with the given options.
pub fn smooth_lambda(eps: f64, opts: &SmoothingOptions) -> f64 {
    SmoothBand::new(eps * opts.radius_factor, eps * opts.tip_factor, 1).lambda
}

pub fn smooth_family(eps: f64) -> Result<RuledStrip, ConstructionError> {
    smooth_family_with(eps, &SmoothingOptions::default())
}

/// Smoothed triangular band. Sample 0 is the seam bend (the apex of the
/// image triangle), sample `N/2` the stem through the middle of the band.
pub fn smooth_family_with(eps: f64, opts: &SmoothingOptions) -> Result<RuledStrip, ConstructionError> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(ConstructionError::BadEpsilon(eps));
    }
    if opts.samples < 64 || opts.samples % 2 == 1 || 10 * opts.min_roll_samples.max(1) + 4 > opts.samples {
        return Err(ConstructionError::BadSampleCount(opts.samples));
    }
    let (r, tip) = (eps * opts.radius_factor, eps * opts.tip_factor);
    let half = opts.samples / 2;
    let seam_share = PI * r / (SQRT3 / 2.0) / (smooth_lambda(eps, opts) / 2.0);
    let m = ((half as f64 * seam_share).round() as usize).max(opts.min_roll_samples.max(1));
    if 5 * m + 2 > half {
        return Err(ConstructionError::BadSampleCount(opts.samples));
    }
    let band = SmoothBand::new(r, tip, m);
    let left = band.left_rulings(half);
    let stem_pb = PreBend::from_foot(0.0, 0.0);
    let stem = (stem_pb, Segment3::new(band.middle_image(stem_pb.start), band.middle_image(stem_pb.end)));

    let mut all = left.clone();
    all.push(stem);
    all.extend(left[1..].iter().rev().map(|(pb, seg)| mirror_bend(pb, seg)));

    let c0 = all[0].0.midpoint().x;
    let samples = all
        .into_iter()
        .map(|(pre_bend, bend)| StripSample {
            s: TAU * (pre_bend.midpoint().x - c0) / band.lambda,
            pre_bend,
            bend,
        })
        .collect();
    Ok(RuledStrip::new(band.lambda, samples)?)
}

/// Limit quantities measured on one strip.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub eps: f64,
    pub lambda: f64,
    /// Displacement of the crossbar bend of the found T-pattern.
    pub t: f64,
    pub h1: f64,
    pub h2: f64,
    pub d1: f64,
    pub d2: f64,
    /// Largest distance between the strip and the triangular band after
    /// rigid alignment.
    pub sup_dist: f64,
    /// Hausdorff distance from the crease diagonals `xu`, `ux̃` to the nearest
    /// pre-bend.
    pub diagonal_gap: f64,
    pub residual_g: f64,
    pub residual_h: f64,
    pub min_distance: f64,
    /// `max(α, β)/2` at the measured `t`.
    pub bound: f64,
    pub identities: IdentityReport,
}

pub const CSV_HEADER: &str = "eps,lambda,t,H1,H2,D1,D2,sup_dist";

impl ConvergenceRecord {
    pub fn csv_row(&self) -> String {
        [self.eps, self.lambda, self.t, self.h1, self.h2, self.d1, self.d2, self.sup_dist]
            .iter()
            .map(|v| sig17(*v))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Picks the crossbar `T` of a T-pattern: the bend whose segment contains
/// the common point of the two carrier lines deepest inside.
fn crossbar_index(p: &TPattern) -> usize {
    let depth = |seg: &Segment3, other: &Segment3| {
        let d = seg.end - seg.start;
        let e = other.end - other.start;
        // Closest points of the two carrier lines.
        let w = seg.start - other.start;
        let (a, b, c) = (d.dot(d), d.dot(e), e.dot(e));
        let (dd, ee) = (d.dot(w), e.dot(w));
        let den = a * c - b * b;
        if den.abs() < 1e-300 {
            return f64::NEG_INFINITY;
        }
        let s = (b * ee - c * dd) / den;
        s.min(1.0 - s)
    };
    let d0 = depth(&p.bends[0], &p.bends[1]);
    let d1 = depth(&p.bends[1], &p.bends[0]);
    if d1 > d0 {
        1
    } else {
        0
    }
}

/// Deck translate of `pb` whose midpoint lies inside the trapezoid.
fn local_pre_bend(trap: &Trapezoid, pb: &PreBend) -> Option<PreBend> {
    let band = FlatMoebius { lambda: trap.lambda };
    let k0 = ((pb.midpoint().x - trap.cut_x) / trap.lambda).floor() as i64;
    for k in [-k0, -k0 - 1, -k0 + 1, -k0 - 2, -k0 + 2] {
        let q = pb.deck(&band, k);
        let m = q.midpoint();
        let local = |p: FlatPoint| FlatPoint::new(p.x - trap.cut_x - trap.d_length() / 2.0, p.y);
        let lm = local(m);
        let half = trap.d_length() / 2.0 - trap.t * lm.y;
        if lm.x >= -half - 1e-9 && lm.x <= half + 1e-9 {
            return Some(PreBend::new(local(q.start), local(q.end)));
        }
    }
    None
}

/// Arc lengths of a boundary polyline on either side of `x = 0`.
fn split_lengths(mut pts: Vec<(f64, Vec3)>) -> (f64, f64) {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut left, mut right) = (0.0, 0.0);
    for w in pts.windows(2) {
        let ((xa, a), (xb, b)) = (w[0], w[1]);
        let len = a.distance(b);
        if xb <= 0.0 {
            left += len;
        } else if xa >= 0.0 {
            right += len;
        } else {
            let f = -xa / (xb - xa);
            let m = a.lerp(b, f);
            left += a.distance(m);
            right += m.distance(b);
        }
    }
    (left, right)
}

fn row_half_width(trap_lambda: f64, t: f64, y: f64) -> f64 {
    let d = trap_lambda + t;
    let h = trap_lambda - t;
    0.5 * (d * (1.0 - y) + h * y)
}

fn point_segment_2d(p: FlatPoint, a: FlatPoint, b: FlatPoint) -> f64 {
    Segment3::new(Vec3::new(a.x, a.y, 0.0), Vec3::new(b.x, b.y, 0.0)).distance_to_point(Vec3::new(p.x, p.y, 0.0))
}

fn hausdorff_2d(a: &PreBend, b: &PreBend) -> f64 {
    [
        point_segment_2d(a.start, b.start, b.end),
        point_segment_2d(a.end, b.start, b.end),
        point_segment_2d(b.start, a.start, a.end),
        point_segment_2d(b.end, a.start, a.end),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Measures one strip against the triangular band.
pub fn measure_strip(eps: f64, strip: &RuledStrip, search: &SearchOptions) -> Result<ConvergenceRecord, ConstructionError> {
    let pattern = find_t_pattern_with(strip, search)?;
    let which = crossbar_index(&pattern);
    let x_t = if which == 0 {
        pattern.theta - pattern.phi
    } else {
        pattern.theta + pattern.phi
    };
    let t_pb = strip.pre_bend_at(x_t).bottom_first();
    if t_pb.displacement() < 0.0 {
        // Normalise to t > 0 by reflecting the flat band.
        let mut rec = measure_strip(eps, &strip.mirrored(), search)?;
        rec.eps = eps;
        return Ok(rec);
    }
    let t_bend = {
        let seg = strip.bend_at(x_t);
        if strip.pre_bend_at(x_t).start.y > 0.5 {
            seg.reversed()
        } else {
            seg
        }
    };
    let band = strip.band();
    let trap = cut_along(&band, &t_pb)?;
    let t = trap.t;

    // Boundary points in trapezoid coordinates with their images; the cut
    // itself appears on both slanted sides.
    let mut bottom: Vec<(f64, Vec3)> = Vec::new();
    let mut top: Vec<(f64, Vec3)> = Vec::new();
    let mut pairs: Vec<(FlatPoint, Vec3)> = Vec::new();
    let mut locals: Vec<PreBend> = Vec::new();
    let mut push = |pb: PreBend, seg: Segment3, bottom: &mut Vec<(f64, Vec3)>, top: &mut Vec<(f64, Vec3)>| {
        for (p, q) in [(pb.start, seg.start), (pb.end, seg.end)] {
            if p.y < 0.5 {
                bottom.push((p.x, q));
            } else {
                top.push((p.x, q));
            }
        }
        pairs.push((pb.start, seg.start));
        pairs.push((pb.end, seg.end));
        pairs.push((pb.midpoint(), seg.midpoint()));
        locals.push(pb);
    };
    let half_d = trap.d_length() / 2.0;
    let half_h = trap.h_length() / 2.0;
    push(
        PreBend::new(FlatPoint::new(-half_d, 0.0), FlatPoint::new(-half_h, 1.0)),
        t_bend,
        &mut bottom,
        &mut top,
    );
    push(
        PreBend::new(FlatPoint::new(half_h, 1.0), FlatPoint::new(half_d, 0.0)),
        t_bend,
        &mut bottom,
        &mut top,
    );
    for smp in &strip.samples {
        if let Some(local) = local_pre_bend(&trap, &smp.pre_bend) {
            push(local, smp.bend, &mut bottom, &mut top);
        }
    }
    let (d1, d2) = split_lengths(bottom);
    let (h1, h2) = split_lengths(top);

    // Compare with the triangular band after stretching each row of the
    // trapezoid onto the corresponding row of the limit trapezoid.
    let pl = triangular_band();
    let to_pl = |p: FlatPoint| {
        let y = p.y.clamp(0.0, 1.0);
        let s = row_half_width(pl.lambda, pl.t, y) / row_half_width(trap.lambda, t, y);
        FlatPoint::new(p.x * s, y)
    };
    let mut strip_pts = Vec::with_capacity(pairs.len());
    let mut pl_pts = Vec::with_capacity(pairs.len());
    for (flat, q) in &pairs {
        let target = to_pl(*flat);
        let img = pl
            .map(target)
            .ok_or_else(|| ConstructionError::Measurement(format!("point {target:?} outside the limit trapezoid")))?;
        strip_pts.push(*q);
        pl_pts.push(img);
    }
    let sup_dist = align_rigid(&strip_pts, &pl_pts)?.max_residual;

    let from_pl = |p: FlatPoint| {
        let s = row_half_width(trap.lambda, t, p.y) / row_half_width(pl.lambda, pl.t, p.y);
        FlatPoint::new(p.x * s, p.y)
    };
    let diagonals = [
        PreBend::new(from_pl(labels::U), from_pl(labels::X)),
        PreBend::new(from_pl(labels::U), from_pl(labels::X_TILDE)),
    ];
    let diagonal_gap = diagonals
        .iter()
        .map(|d| locals.iter().map(|pb| hausdorff_2d(d, pb)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);

    let other = pattern.bends[1 - which];
    let lengths = EmbeddedLengths {
        h_prime: h1 + h2,
        d_prime: d1 + d2,
        t_prime: t_bend.length(),
        b_prime: other.length(),
        height: None,
    };
    let identities = check_length_identities(&trap, &lengths, 1e-6)
        .map_err(|e| ConstructionError::Measurement(e.to_string()))?;

    Ok(ConvergenceRecord {
        eps,
        lambda: strip.lambda,
        t,
        h1,
        h2,
        d1,
        d2,
        sup_dist,
        diagonal_gap,
        residual_g: pattern.residual_g,
        residual_h: pattern.residual_h,
        min_distance: pattern.min_distance,
        bound: lower_bound(t).lower_bound,
        identities,
    })
}

/// Metrics for a family of strips, one record per `(eps, strip)`.
pub fn convergence_metrics(
    family: &[(f64, RuledStrip)],
    search: &SearchOptions,
    exec: Exec,
) -> Result<Vec<ConvergenceRecord>, ConstructionError> {
    exec.map(family, |(eps, strip)| measure_strip(*eps, strip, search))
        .into_iter()
        .collect()
}

/// Builds the smoothed band for each `eps` and measures it.
pub fn limit_study(eps_list: &[f64], exec: Exec) -> Result<Vec<ConvergenceRecord>, ConstructionError> {
    let family = eps_list
        .iter()
        .map(|&e| smooth_family(e).map(|s| (e, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let search = SearchOptions {
        exec,
        ..SearchOptions::default()
    };
    convergence_metrics(&family, &search, exec)
}

/// OBJ vertex line with the model's `z` axis pointing up (`y` in OBJ).
fn obj_vertex(out: &mut String, p: Vec3) {
    out.push_str(&format!("v {} {} {}\n", sig17(p.x), sig17(p.z), sig17(-p.y)));
}

/// Triangle mesh of a strip: two triangles per pair of consecutive bends,
/// including the closing pair.
pub fn strip_to_obj(strip: &RuledStrip) -> String {
    let n = strip.samples.len();
    let mut out = String::from("# ruled strip\n");
    for smp in &strip.samples {
        obj_vertex(&mut out, smp.bend.start);
        obj_vertex(&mut out, smp.bend.end);
    }
    for i in 0..n {
        let (a0, a1) = (2 * i + 1, 2 * i + 2);
        // The closing pair joins the last bend to the first one reversed.
        let (b0, b1) = if i + 1 < n { (2 * i + 3, 2 * i + 4) } else { (2, 1) };
        out.push_str(&format!("f {a0} {b0} {b1}\nf {a0} {b1} {a1}\n"));
    }
    out
}

/// Triangle mesh of the image of a piecewise-linear isometry.
pub fn pl_to_obj(pl: &PlIsometry) -> String {
    let mut out = String::from("# piecewise-linear band\n");
    let mut next = 1;
    for piece in &pl.pieces {
        for p in &piece.polygon {
            obj_vertex(&mut out, piece.image(*p));
        }
        for k in 1..piece.polygon.len() - 1 {
            out.push_str(&format!("f {} {} {}\n", next, next + k, next + k + 1));
        }
        next += piece.polygon.len();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line_geometry::{is_perpendicular_intersecting, line_invariants};
    use crate::strip_model::{develop, validate_foliation, FoliationTolerances, validate_foliation_with};

    #[test]
    fn triangular_band_geometry() {
        let pl = triangular_band();
        assert_eq!(pl.pieces.len(), 3);
        assert!(pl.continuity_defect() < 1e-12);
        let mut verts = Vec::new();
        for piece in &pl.pieces {
            for p in &piece.polygon {
                let q = piece.image(*p);
                assert!(q.z.abs() < 1e-12);
                verts.push(q);
            }
            for a in &piece.polygon {
                for b in &piece.polygon {
                    let d = (piece.image(*a).distance(piece.image(*b)) - a.distance(*b)).abs();
                    assert!(d < 1e-15);
                }
            }
            assert!((piece.motion.determinant() - 1.0).abs() < 1e-12);
        }
        // Every image vertex is a corner of the equilateral triangle x x̃ u.
        let corners = [
            Vec3::new(-1.0 / SQRT3, 1.0, 0.0),
            Vec3::new(1.0 / SQRT3, 1.0, 0.0),
            Vec3::ZERO,
        ];
        for v in &verts {
            assert!(corners.iter().any(|c| c.distance(*v) < 1e-12), "{v:?}");
        }
        for i in 0..3 {
            let d = corners[i].distance(corners[(i + 1) % 3]);
            assert!((d - 2.0 / SQRT3).abs() < 1e-12);
        }
    }

    #[test]
    fn triangular_edge_images() {
        use labels::*;
        let pl = triangular_band();
        let img = |p: FlatPoint| pl.map(p).unwrap();
        let h1 = img(X).distance(img(V));
        let h2 = img(V).distance(img(X_TILDE));
        let d1 = img(W).distance(img(U));
        let d2 = img(U).distance(img(W_TILDE));
        for h in [h1, h2] {
            assert!((h - 1.0 / SQRT3).abs() < 1e-12);
        }
        for d in [d1, d2] {
            assert!((d - 2.0 / SQRT3).abs() < 1e-12);
        }
        let (t, b) = triangular_t_pattern(&pl);
        let (g, h) = line_invariants(&t.line().unwrap(), &b.line().unwrap());
        assert!(g.abs() < 1e-12 && h.abs() < 1e-12);
    }

    #[test]
    fn triangular_strip_touches_itself() {
        let strip = triangular_strip(8);
        let rep = validate_foliation(&strip, 1e-9, 1e-9).unwrap();
        assert!(rep.max_length_error < 1e-12);
        assert!(!rep.is_valid());
    }

    #[test]
    fn align_examples() {
        let a = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.3, 0.1, 1.0),
        ];
        let rot = |p: Vec3| Vec3::new(-p.y, p.x, p.z) + Vec3::new(1.0, 2.0, 3.0);
        let b: Vec<Vec3> = a.iter().map(|p| rot(*p)).collect();
        let al = align_rigid(&a, &b).unwrap();
        assert!(al.max_residual < 1e-12);
        assert!((al.motion.rotation[0][1] + 1.0).abs() < 1e-12 && (al.motion.rotation[1][0] - 1.0).abs() < 1e-12);
        let line: Vec<Vec3> = (0..4).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        assert_eq!(align_rigid(&line, &line), Err(ConstructionError::DegenerateConfiguration));
        assert_eq!(align_rigid(&a[..2], &b[..2]), Err(ConstructionError::DegenerateConfiguration));
    }

    #[test]
    fn smoothed_band_closes_up() {
        let sb = SmoothBand::new(0.002, 0.001, 16);
        let inv = 1.0 / SQRT3;
        // The right end is the mirror of the left end; deck gluing sends the
        // left end's bottom to the right end's top.
        let left = PreBend::from_foot(sb.left_end, inv);
        for k in 0..=10 {
            let y = k as f64 / 10.0;
            let p = left.point_at(y);
            let img_left = sb.seam_image(p);
            let q = left.point_at(1.0 - y);
            let m = sb.seam_image(q);
            let img_right = Vec3::new(-m.x, m.y, -m.z);
            assert!(img_left.distance(img_right) < 1e-14, "{img_left:?} {img_right:?}");
            assert!(img_left.z.abs() < 1e-15);
        }
        // Pieces agree along their shared rulings.
        let seam_inner = PreBend::from_foot(sb.seam_foot, inv);
        let crease_outer = PreBend::from_foot(-sb.tip / 2.0 - sb.crease_width, -inv);
        let crease_inner = PreBend::from_foot(-sb.tip / 2.0, -inv);
        for y in [0.0, 0.4, 1.0] {
            let p = seam_inner.point_at(y);
            assert!(sb.seam_image(p).distance(sb.folded_image(p)) < 1e-14);
            let p = crease_outer.point_at(y);
            assert!(sb.crease_image(p).distance(sb.folded_image(p)) < 1e-14);
            let p = crease_inner.point_at(y);
            assert!(sb.crease_image(p).distance(sb.middle_image(p)) < 1e-14);
        }
        let expected = SQRT3 + 3.0 * 0.001 + 4.0 * SQRT3 * PI * 0.002;
        assert!((sb.lambda - expected).abs() < 1e-14);
    }

    #[test]
    fn smoothed_strip_is_valid_and_developable() {
        for eps in [0.2, 0.1, 0.05] {
            let strip = smooth_family(eps).unwrap();
            assert_eq!(strip.samples.len(), 512);
            assert!(strip.lambda - SQRT3 > 0.0 && strip.lambda - SQRT3 <= 4.0 * eps);
            let tol = FoliationTolerances::default();
            let rep = validate_foliation_with(&strip, &tol, Exec::Parallel).unwrap();
            assert!(rep.is_valid(), "eps {eps}: {:?}", &rep.violations[..rep.violations.len().min(4)]);
            assert!(rep.min_bend_distance > 0.0);
            let layout = develop(&strip, 1e-9).unwrap();
            assert!(layout.round_trip_error < 1e-8, "{}", layout.round_trip_error);
            assert_eq!(strip.samples[256].pre_bend, PreBend::from_foot(0.0, 0.0));
            assert!((strip.samples[256].s - PI).abs() < 1e-12);
        }
        assert_eq!(smooth_family(0.3), Err(ConstructionError::BadEpsilon(0.3)));
        assert_eq!(smooth_family(0.0), Err(ConstructionError::BadEpsilon(0.0)));
    }

    #[test]
    fn smoothed_t_pattern_is_seam_and_stem() {
        let strip = smooth_family(0.1).unwrap();
        let p = crate::t_pattern::find_t_pattern(&strip, 1e-9).unwrap();
        let (a, b) = p.carrier_lines().unwrap();
        assert!(is_perpendicular_intersecting(&a, &b, 1e-8));
        assert!(p.min_distance > 0.0);
        let xs = [p.source.x0, p.source.x1];
        let near = |x: f64, target: f64| {
            let d = (x - target).rem_euclid(TAU);
            d.min(TAU - d) < 1e-6
        };
        assert!(xs.iter().any(|&x| near(x, 0.0)) && xs.iter().any(|&x| near(x, PI)), "{xs:?}");
    }

    #[test]
    fn limit_metrics_trend() {
        let recs = limit_study(&[0.2, 0.1, 0.05], Exec::Parallel).unwrap();
        for r in &recs {
            assert!((r.t - 1.0 / SQRT3).abs() < 1e-9, "{r:?}");
            assert!(r.identities.holds(), "{:?}", r.identities);
        }
        let last = &recs[2];
        for h in [last.h1, last.h2] {
            assert!((h - 1.0 / SQRT3).abs() < 0.02, "{last:?}");
        }
        for d in [last.d1, last.d2] {
            assert!((d - 2.0 / SQRT3).abs() < 0.02, "{last:?}");
        }
        for w in recs.windows(2) {
            assert!(w[1].sup_dist < w[0].sup_dist, "{recs:?}");
            assert!(w[1].diagonal_gap < w[0].diagonal_gap);
            assert!(w[1].bound <= w[0].bound + 1e-12);
        }
    }

    #[test]
    fn obj_output_shape() {
        let strip = smooth_family(0.2).unwrap();
        let obj = strip_to_obj(&strip);
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 1024);
        assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 1024);
        let pl = pl_to_obj(&triangular_band());
        assert_eq!(pl.lines().filter(|l| l.starts_with("f ")).count(), 3);
    }
}
