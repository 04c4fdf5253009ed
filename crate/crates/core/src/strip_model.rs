//! The flat Moebius band `M_λ`, pre-bends and sampled ruled strips.
//!
//! `M_λ` is the quotient of `[0, λ] × [0, 1]` by `(0, y) ~ (λ, 1 − y)`. We
//! mostly work in its universal cover `R × [0, 1]`, where the deck
//! transformation is `(x, y) ↦ (x + λ, 1 − y)`. Pre-bends are stored with lifted
//! (cover) coordinates, running from the bottom boundary `y = 0` to the top
//! boundary `y = 1`.
//!
//! A [`RuledStrip`] samples a bend foliation: for parameters `s` in
//! `[0, 2π)` it records the flat pre-bend and the embedded 3D bend. Sample
//! `i + 1` lies to the right (larger `x`) of sample `i`, and the strip closes
//! up through the deck transformation: following sample `N − 1` comes sample
//! `0` with its endpoints swapped.

use serde::Deserialize;
use thiserror::Error;

use crate::exec::Exec;
use crate::format::sig17;
use crate::line_geometry::{Segment3, Vec3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StripError {
    #[error("aspect ratio must be positive and finite, got {0}")]
    BadLambda(f64),
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("pre-bend endpoints must lie on opposite boundary components")]
    NotOnBoundary,
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("pre-bends intersect")]
    OverlapError,
    #[error("cannot cut along a pre-bend with |t| = {t} >= lambda = {lambda}")]
    InvalidCut { t: f64, lambda: f64 },
    #[error("trim width must satisfy 0 <= eps < 1/2, got {0}")]
    BadEpsilon(f64),
    #[error("strip is not developable at quad {index}: defect {defect:e}")]
    NonDevelopable { index: usize, defect: f64 },
    #[error("malformed strip file: {0}")]
    Parse(String),
}

/// The flat band of aspect ratio `lambda` (width 1, length `lambda`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatMoebius {
    pub lambda: f64,
}

impl FlatMoebius {
    pub fn new(lambda: f64) -> Result<Self, StripError> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(FlatMoebius { lambda })
        } else {
            Err(StripError::BadLambda(lambda))
        }
    }

    /// Applies the deck transformation `k` times.
    pub fn deck(&self, p: FlatPoint, k: i64) -> FlatPoint {
        let y = if k.rem_euclid(2) == 1 { 1.0 - p.y } else { p.y };
        FlatPoint::new(p.x + k as f64 * self.lambda, y)
    }

    pub fn canonicalize(&self, p: FlatPoint) -> FlatPoint {
        canonicalize(p, self)
    }
}

/// A point of the cover `R × [0, 1]`, or of `M_λ` once canonicalised.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlatPoint {
    pub x: f64,
    pub y: f64,
}

impl FlatPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        FlatPoint { x, y }
    }

    pub fn distance(self, o: FlatPoint) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn lerp(self, o: FlatPoint, t: f64) -> FlatPoint {
        FlatPoint::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }
}

/// Representative with `x ∈ [0, λ)`.
pub fn canonicalize(p: FlatPoint, band: &FlatMoebius) -> FlatPoint {
    let k = (p.x / band.lambda).floor();
    let mut x = p.x - k * band.lambda;
    if x >= band.lambda {
        x = 0.0;
    }
    let y = if (k as i64).rem_euclid(2) == 1 { 1.0 - p.y } else { p.y };
    FlatPoint::new(x, y)
}

/// A straight segment of the cover joining the two boundary lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreBend {
    pub start: FlatPoint,
    pub end: FlatPoint,
}

impl PreBend {
    pub const fn new(start: FlatPoint, end: FlatPoint) -> Self {
        PreBend { start, end }
    }

    /// Pre-bend from `(x, 0)` to `(x + t, 1)`.
    pub fn from_foot(x: f64, t: f64) -> Self {
        PreBend::new(FlatPoint::new(x, 0.0), FlatPoint::new(x + t, 1.0))
    }

    /// Signed horizontal run over unit rise.
    pub fn displacement(&self) -> f64 {
        (self.end.x - self.start.x) / (self.end.y - self.start.y)
    }

    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn point_at(&self, u: f64) -> FlatPoint {
        self.start.lerp(self.end, u)
    }

    pub fn midpoint(&self) -> FlatPoint {
        self.point_at(0.5)
    }

    pub fn reversed(&self) -> PreBend {
        PreBend::new(self.end, self.start)
    }

    pub fn lerp(&self, o: &PreBend, t: f64) -> PreBend {
        PreBend::new(self.start.lerp(o.start, t), self.end.lerp(o.end, t))
    }

    /// Image under `k` deck transformations.
    pub fn deck(&self, band: &FlatMoebius, k: i64) -> PreBend {
        PreBend::new(band.deck(self.start, k), band.deck(self.end, k))
    }

    /// Same segment with the endpoint on `y = 0` first.
    pub fn bottom_first(&self) -> PreBend {
        if self.start.y > self.end.y {
            self.reversed()
        } else {
            *self
        }
    }

    /// A straight bottom-to-top segment embeds in `M_λ` exactly when its
    /// horizontal run is shorter than `λ`.
    pub fn is_embedded(&self, band: &FlatMoebius) -> bool {
        self.displacement().abs() < band.lambda
    }

    pub fn segment_distance(&self, o: &PreBend) -> f64 {
        let a = Segment3::new(flat3(self.start), flat3(self.end));
        let b = Segment3::new(flat3(o.start), flat3(o.end));
        a.distance(&b)
    }
}

fn flat3(p: FlatPoint) -> Vec3 {
    Vec3::new(p.x, p.y, 0.0)
}

fn orient(a: FlatPoint, b: FlatPoint, c: FlatPoint) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: &PreBend, b: &PreBend) -> bool {
    let d1 = orient(b.start, b.end, a.start);
    let d2 = orient(b.start, b.end, a.end);
    let d3 = orient(a.start, a.end, b.start);
    let d4 = orient(a.start, a.end, b.end);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: FlatPoint, q: FlatPoint, r: FlatPoint, d: f64| {
        d == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(b.start, b.end, a.start, d1)
        || on(b.start, b.end, a.end, d2)
        || on(a.start, a.end, b.start, d3)
        || on(a.start, a.end, b.end, d4)
}

/// Number of times the lifted segment crosses the centerline `y = 1/2`.
///
/// A segment joining the two boundary lines of the cover crosses it exactly
/// once; the deck transformation preserves the centerline, so the count is
/// the same in the quotient.
pub fn centerline_crossings(pb: &PreBend, _band: &FlatMoebius) -> Result<usize, StripError> {
    if pb.start.distance(pb.end) == 0.0 {
        return Err(StripError::DegenerateSegment);
    }
    let (a, b) = (pb.start.y - 0.5, pb.end.y - 0.5);
    let crossings = if a == 0.0 && b == 0.0 {
        0
    } else if (a <= 0.0 && b >= 0.0) || (a >= 0.0 && b <= 0.0) {
        1
    } else {
        0
    };
    Ok(crossings)
}

/// One sample of a ruled strip: flat pre-bend and its embedded image.
///
/// `bend.start` is the image of `pre_bend.start`, which lies on `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripSample {
    pub s: f64,
    pub pre_bend: PreBend,
    pub bend: Segment3,
}

/// A sampled bend foliation of an embedded band of aspect ratio `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuledStrip {
    pub lambda: f64,
    pub samples: Vec<StripSample>,
}

impl RuledStrip {
    pub fn new(lambda: f64, samples: Vec<StripSample>) -> Result<Self, StripError> {
        FlatMoebius::new(lambda)?;
        if samples.len() < 2 {
            return Err(StripError::TooFewSamples {
                needed: 2,
                got: samples.len(),
            });
        }
        Ok(RuledStrip { lambda, samples })
    }

    pub fn band(&self) -> FlatMoebius {
        FlatMoebius {
            lambda: self.lambda,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The sample that follows the last one: sample 0 seen through the deck
    /// transformation, so its endpoints are swapped.
    fn wrapped_first(&self) -> StripSample {
        let first = self.samples[0];
        let band = self.band();
        StripSample {
            s: first.s + std::f64::consts::TAU,
            pre_bend: first.pre_bend.reversed().deck(&band, 1),
            bend: first.bend.reversed(),
        }
    }

    /// Locates `x` (already reduced to `[s_0, s_0 + 2π)`) between two
    /// consecutive samples, returning the pair and the blend factor.
    fn bracket(&self, x: f64) -> (StripSample, StripSample, f64) {
        let n = self.samples.len();
        let last = self.samples[n - 1];
        if x >= last.s {
            let next = self.wrapped_first();
            let u = (x - last.s) / (next.s - last.s);
            return (last, next, u.clamp(0.0, 1.0));
        }
        let i = self.samples.partition_point(|smp| smp.s <= x).max(1) - 1;
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        (a, b, ((x - a.s) / (b.s - a.s)).clamp(0.0, 1.0))
    }

    fn reduce(&self, x: f64) -> (f64, i64) {
        let s0 = self.samples[0].s;
        let k = ((x - s0) / std::f64::consts::TAU).floor();
        let mut r = x - k * std::f64::consts::TAU;
        let mut k = k as i64;
        if r >= s0 + std::f64::consts::TAU {
            r -= std::f64::consts::TAU;
            k += 1;
        }
        (r.max(s0), k)
    }

    /// The bend at parameter `x ∈ R`, linearly interpolated between samples
    /// and oriented continuously in `x`. Going once around reverses it.
    pub fn bend_at(&self, x: f64) -> Segment3 {
        let (r, k) = self.reduce(x);
        let (a, b, u) = self.bracket(r);
        let seg = a.bend.lerp(&b.bend, u);
        if k.rem_euclid(2) == 1 {
            seg.reversed()
        } else {
            seg
        }
    }

    /// The pre-bend at parameter `x ∈ R`, in lifted coordinates and oriented
    /// like [`RuledStrip::bend_at`].
    pub fn pre_bend_at(&self, x: f64) -> PreBend {
        let (r, k) = self.reduce(x);
        let (a, b, u) = self.bracket(r);
        let pb = a.pre_bend.lerp(&b.pre_bend, u).deck(&self.band(), k);
        if k.rem_euclid(2) == 1 {
            pb.reversed()
        } else {
            pb
        }
    }

    /// Embedded boundary as one closed polyline: bottom endpoints of all
    /// samples, then top endpoints. The last point connects to the first.
    pub fn boundary_loop(&self) -> Vec<Vec3> {
        let mut pts: Vec<Vec3> = self.samples.iter().map(|s| s.bend.start).collect();
        pts.extend(self.samples.iter().map(|s| s.bend.end));
        pts
    }

    pub fn boundary_length(&self) -> f64 {
        closed_polyline_length(&self.boundary_loop())
    }

    /// Mirror image `(x, y) ↦ (−x, y)` in the flat domain and `z ↦ −z` in
    /// space, with samples re-ordered so `x` still increases.
    pub fn mirrored(&self) -> RuledStrip {
        let n = self.samples.len();
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let src = self.samples[n - 1 - i];
            let m = |p: FlatPoint| FlatPoint::new(-p.x, p.y);
            let mz = |p: Vec3| Vec3::new(p.x, p.y, -p.z);
            samples.push(StripSample {
                s: std::f64::consts::TAU - src.s,
                pre_bend: PreBend::new(m(src.pre_bend.start), m(src.pre_bend.end)),
                bend: Segment3::new(mz(src.bend.start), mz(src.bend.end)),
            });
        }
        // Keep parameters inside [0, 2π).
        let shift = if samples[0].s >= std::f64::consts::TAU {
            std::f64::consts::TAU
        } else {
            0.0
        };
        for s in &mut samples {
            s.s -= shift;
        }
        RuledStrip {
            lambda: self.lambda,
            samples,
        }
    }
}

pub fn closed_polyline_length(pts: &[Vec3]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let open: f64 = pts.windows(2).map(|w| w[0].distance(w[1])).sum();
    open + pts[pts.len() - 1].distance(pts[0])
}

/// Tolerances for [`validate_foliation_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoliationTolerances {
    /// Allowed difference between bend and pre-bend lengths.
    pub iso_tol: f64,
    /// Bends closer than this count as intersecting.
    pub disjoint_tol: f64,
    /// Allowed relative shortfall of the embedded boundary against `2λ`.
    pub boundary_rel_tol: f64,
}

impl Default for FoliationTolerances {
    fn default() -> Self {
        FoliationTolerances {
            iso_tol: 1e-9,
            disjoint_tol: 1e-12,
            boundary_rel_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    LengthMismatch {
        index: usize,
        bend_length: f64,
        pre_bend_length: f64,
    },
    BendsIntersect {
        i: usize,
        j: usize,
        distance: f64,
    },
    PreBendOverlap {
        i: usize,
        j: usize,
    },
    BoundaryLength {
        measured: f64,
        expected: f64,
    },
    ParameterOrder {
        index: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    pub violations: Vec<Violation>,
    pub max_length_error: f64,
    /// Minimum distance over bend pairs that are not cyclic neighbours.
    pub min_bend_distance: f64,
    pub boundary_length: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_foliation(
    strip: &RuledStrip,
    iso_tol: f64,
    disjoint_tol: f64,
) -> Result<ValidationReport, StripError> {
    let tol = FoliationTolerances {
        iso_tol,
        disjoint_tol,
        ..FoliationTolerances::default()
    };
    validate_foliation_with(strip, &tol, Exec::default())
}

pub fn validate_foliation_with(
    strip: &RuledStrip,
    tol: &FoliationTolerances,
    exec: Exec,
) -> Result<ValidationReport, StripError> {
    const MIN_SAMPLES: usize = 8;
    let n = strip.samples.len();
    if n < MIN_SAMPLES {
        return Err(StripError::TooFewSamples {
            needed: MIN_SAMPLES,
            got: n,
        });
    }
    let band = strip.band();
    let mut violations = Vec::new();

    for (i, smp) in strip.samples.iter().enumerate() {
        let ordered = i == 0 || smp.s > strip.samples[i - 1].s;
        if !ordered || !(0.0..std::f64::consts::TAU).contains(&smp.s) {
            violations.push(Violation::ParameterOrder { index: i });
        }
    }

    let mut max_length_error: f64 = 0.0;
    for (index, smp) in strip.samples.iter().enumerate() {
        let bend_length = smp.bend.length();
        let pre_bend_length = smp.pre_bend.length();
        let err = (bend_length - pre_bend_length).abs();
        max_length_error = max_length_error.max(err);
        if err > tol.iso_tol {
            violations.push(Violation::LengthMismatch {
                index,
                bend_length,
                pre_bend_length,
            });
        }
    }

    // Pairwise scans, one row per sample.
    let rows = exec.map_range(n, |i| {
        let mut min_d = f64::INFINITY;
        let mut hits = Vec::new();
        let mut overlaps = Vec::new();
        let a = &strip.samples[i];
        for j in i + 1..n {
            let b = &strip.samples[j];
            let gap = (j - i).min(n - (j - i));
            if gap >= 2 {
                let d = a.bend.distance(&b.bend);
                min_d = min_d.min(d);
                if d <= tol.disjoint_tol {
                    hits.push((j, d));
                }
            }
            if (-2..=2).any(|k| segments_intersect(&a.pre_bend, &b.pre_bend.deck(&band, k))) {
                overlaps.push(j);
            }
        }
        (min_d, hits, overlaps)
    });
    let mut min_bend_distance = f64::INFINITY;
    for (i, (min_d, hits, overlaps)) in rows.into_iter().enumerate() {
        min_bend_distance = min_bend_distance.min(min_d);
        for (j, distance) in hits {
            violations.push(Violation::BendsIntersect { i, j, distance });
        }
        for j in overlaps {
            violations.push(Violation::PreBendOverlap { i, j });
        }
    }

    let boundary_length = strip.boundary_length();
    let expected = 2.0 * strip.lambda;
    if (boundary_length - expected).abs() > tol.boundary_rel_tol * expected {
        violations.push(Violation::BoundaryLength {
            measured: boundary_length,
            expected,
        });
    }

    Ok(ValidationReport {
        samples: n,
        violations,
        max_length_error,
        min_bend_distance,
        boundary_length,
    })
}

/// `n` pre-bends strictly between `pb0` and `pb1`, at fractions `k/(n+1)`.
pub fn interpolate_flat_region(
    pb0: &PreBend,
    pb1: &PreBend,
    n: usize,
) -> Result<Vec<PreBend>, StripError> {
    if segments_intersect(pb0, pb1) {
        return Err(StripError::OverlapError);
    }
    Ok((1..=n)
        .map(|k| pb0.lerp(pb1, k as f64 / (n + 1) as f64))
        .collect())
}

/// The region obtained by cutting `M_λ` along a pre-bend `T`.
///
/// Coordinates: the long side `D` runs from `(−(λ+t)/2, 0)` to `((λ+t)/2, 0)`,
/// the short side `H` from `(−(λ−t)/2, 1)` to `((λ−t)/2, 1)`. `u` and `v`
/// are the midpoints of `D` and `H`; they split each side into a left and a
/// right half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    pub lambda: f64,
    pub t: f64,
    /// Displacement of the pre-bend `B` through `u`, when known.
    pub b: f64,
    /// Lifted `x` of the bottom endpoint of the cut.
    pub cut_x: f64,
}

impl Trapezoid {
    pub fn d_length(&self) -> f64 {
        self.lambda + self.t
    }

    pub fn h_length(&self) -> f64 {
        self.lambda - self.t
    }

    pub fn slant_length(&self) -> f64 {
        (1.0 + self.t * self.t).sqrt()
    }

    pub fn d_left(&self) -> FlatPoint {
        FlatPoint::new(-self.d_length() / 2.0, 0.0)
    }

    pub fn d_right(&self) -> FlatPoint {
        FlatPoint::new(self.d_length() / 2.0, 0.0)
    }

    pub fn h_left(&self) -> FlatPoint {
        FlatPoint::new(-self.h_length() / 2.0, 1.0)
    }

    pub fn h_right(&self) -> FlatPoint {
        FlatPoint::new(self.h_length() / 2.0, 1.0)
    }

    pub fn u(&self) -> FlatPoint {
        FlatPoint::new(0.0, 0.0)
    }

    pub fn v(&self) -> FlatPoint {
        FlatPoint::new(0.0, 1.0)
    }

    /// Trapezoid coordinates of a cover point, choosing the deck translate
    /// that falls inside the trapezoid (up to `slack` horizontally).
    pub fn local(&self, p: FlatPoint, slack: f64) -> Option<FlatPoint> {
        let band = FlatMoebius {
            lambda: self.lambda,
        };
        let k0 = ((p.x - self.cut_x) / self.lambda).floor() as i64;
        for k in [-k0, -k0 - 1, -k0 + 1, -k0 - 2, -k0 + 2] {
            let q = band.deck(p, k);
            let local = FlatPoint::new(q.x - self.cut_x - self.d_length() / 2.0, q.y);
            let half = self.d_length() / 2.0 - self.t * local.y;
            if local.x >= -half - slack && local.x <= half + slack {
                return Some(local);
            }
        }
        None
    }

    /// Maps trapezoid coordinates back to the cover.
    pub fn to_cover(&self, p: FlatPoint) -> FlatPoint {
        FlatPoint::new(p.x + self.cut_x + self.d_length() / 2.0, p.y)
    }
}

pub fn cut_along(band: &FlatMoebius, cut: &PreBend) -> Result<Trapezoid, StripError> {
    let cut = cut.bottom_first();
    if cut.start.distance(cut.end) == 0.0 {
        return Err(StripError::DegenerateSegment);
    }
    let t = cut.displacement();
    if !(t.abs() < band.lambda) {
        return Err(StripError::InvalidCut {
            t,
            lambda: band.lambda,
        });
    }
    Ok(Trapezoid {
        lambda: band.lambda,
        t,
        b: 0.0,
        cut_x: cut.start.x,
    })
}

/// Restricts every bend to flat heights `[eps, 1 − eps]` and rescales by
/// `1/(1 − 2 eps)`, giving a band of aspect ratio `λ/(1 − 2 eps)`.
pub fn trim(strip: &RuledStrip, eps: f64) -> Result<RuledStrip, StripError> {
    if !(0.0..0.5).contains(&eps) {
        return Err(StripError::BadEpsilon(eps));
    }
    if eps == 0.0 {
        return Ok(strip.clone());
    }
    let w = 1.0 - 2.0 * eps;
    let scale = 1.0 / w;
    let samples = strip
        .samples
        .iter()
        .map(|smp| {
            let pb = smp.pre_bend;
            let cut = |y: f64| {
                let u = (y - pb.start.y) / (pb.end.y - pb.start.y);
                let p = pb.point_at(u);
                let q = smp.bend.start.lerp(smp.bend.end, u);
                (FlatPoint::new(p.x * scale, (p.y - eps) * scale), q * scale)
            };
            let (p0, q0) = cut(eps);
            let (p1, q1) = cut(1.0 - eps);
            StripSample {
                s: smp.s,
                pre_bend: PreBend::new(p0, p1),
                bend: Segment3::new(q0, q1),
            }
        })
        .collect();
    Ok(RuledStrip {
        lambda: strip.lambda * scale,
        samples,
    })
}

/// Planar unfolding of a strip: one flat pre-bend per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatLayout {
    pub pre_bends: Vec<PreBend>,
    /// Largest distance between the unfolded endpoints and the stored
    /// pre-bends.
    pub round_trip_error: f64,
}

impl FlatLayout {
    /// Largest endpoint distance to `target` after the best planar rigid
    /// motion (rotations and reflections).
    pub fn deviation_from(&self, target: &[PreBend]) -> f64 {
        let a: Vec<FlatPoint> = self
            .pre_bends
            .iter()
            .flat_map(|p| [p.start, p.end])
            .collect();
        let b: Vec<FlatPoint> = target.iter().flat_map(|p| [p.start, p.end]).collect();
        if a.len() != b.len() || a.is_empty() {
            return f64::INFINITY;
        }
        let best = |reflect: bool| {
            let a: Vec<FlatPoint> = a
                .iter()
                .map(|p| if reflect { FlatPoint::new(p.x, -p.y) } else { *p })
                .collect();
            let ca = centroid2(&a);
            let cb = centroid2(&b);
            let (mut sc, mut ss) = (0.0, 0.0);
            for (p, q) in a.iter().zip(&b) {
                let (px, py) = (p.x - ca.x, p.y - ca.y);
                let (qx, qy) = (q.x - cb.x, q.y - cb.y);
                sc += px * qx + py * qy;
                ss += px * qy - py * qx;
            }
            let ang = ss.atan2(sc);
            let (s, c) = ang.sin_cos();
            a.iter()
                .zip(&b)
                .map(|(p, q)| {
                    let (px, py) = (p.x - ca.x, p.y - ca.y);
                    let r = FlatPoint::new(c * px - s * py + cb.x, s * px + c * py + cb.y);
                    r.distance(*q)
                })
                .fold(0.0, f64::max)
        };
        best(false).min(best(true))
    }
}

fn centroid2(pts: &[FlatPoint]) -> FlatPoint {
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    FlatPoint::new(sx / n, sy / n)
}

/// Point at distances `r0` from `a` and `r1` from `b`, on the right of the
/// directed line `a → b`. Returns the point and the amount by which the
/// distance constraints had to be clamped to be realisable.
fn trilaterate_right(a: FlatPoint, b: FlatPoint, r0: f64, r1: f64) -> (FlatPoint, f64) {
    let d = a.distance(b);
    let ex = FlatPoint::new((b.x - a.x) / d, (b.y - a.y) / d);
    let x = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d);
    let y2 = r0 * r0 - x * x;
    let clamp = if y2 < 0.0 { (-y2).sqrt() } else { 0.0 };
    let y = y2.max(0.0).sqrt();
    // Right-hand normal of ex.
    let nx = ex.y;
    let ny = -ex.x;
    (
        FlatPoint::new(a.x + ex.x * x + nx * y, a.y + ex.y * x + ny * y),
        clamp,
    )
}

/// Unfolds the strip quad by quad into the plane, starting from the stored
/// pre-bend of sample 0.
pub fn develop(strip: &RuledStrip, iso_tol: f64) -> Result<FlatLayout, StripError> {
    let n = strip.samples.len();
    if n < 2 {
        return Err(StripError::TooFewSamples { needed: 2, got: n });
    }
    for (index, smp) in strip.samples.iter().enumerate() {
        let defect = (smp.bend.length() - smp.pre_bend.length()).abs();
        if defect > iso_tol {
            return Err(StripError::NonDevelopable { index, defect });
        }
    }
    let mut out = Vec::with_capacity(n);
    out.push(strip.samples[0].pre_bend);
    for i in 0..n - 1 {
        let (a, b) = (&strip.samples[i].bend, &strip.samples[i + 1].bend);
        let prev = out[i];
        let (p, c0) = trilaterate_right(
            prev.start,
            prev.end,
            a.start.distance(b.start),
            a.end.distance(b.start),
        );
        let (q, c1) = trilaterate_right(p, prev.end, b.length(), a.end.distance(b.end));
        // The second diagonal is not used in the placement and certifies
        // that the quad is planar.
        let diag = (prev.start.distance(q) - a.start.distance(b.end)).abs();
        let defect = diag.max(c0).max(c1);
        if defect > iso_tol {
            return Err(StripError::NonDevelopable { index: i, defect });
        }
        out.push(PreBend::new(p, q));
    }
    let round_trip_error = out
        .iter()
        .zip(&strip.samples)
        .map(|(p, s)| {
            p.start
                .distance(s.pre_bend.start)
                .max(p.end.distance(s.pre_bend.end))
        })
        .fold(0.0, f64::max);
    Ok(FlatLayout {
        pre_bends: out,
        round_trip_error,
    })
}

#[derive(Deserialize)]
struct RawSample {
    s: f64,
    pre_bend: [[f64; 2]; 2],
    bend: [[f64; 3]; 2],
}

#[derive(Deserialize)]
struct RawStrip {
    lambda: f64,
    samples: Vec<RawSample>,
}

/// Serialises a strip as the canonical JSON document.
pub fn strip_to_json(strip: &RuledStrip) -> String {
    let mut out = String::new();
    out.push_str("{\n  \"lambda\": ");
    out.push_str(&sig17(strip.lambda));
    out.push_str(",\n  \"samples\": [");
    for (i, smp) in strip.samples.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let p = |q: FlatPoint| format!("[{}, {}]", sig17(q.x), sig17(q.y));
        let v = |q: Vec3| format!("[{}, {}, {}]", sig17(q.x), sig17(q.y), sig17(q.z));
        out.push_str(&format!(
            "\n    {{\"s\": {}, \"pre_bend\": [{}, {}], \"bend\": [{}, {}]}}",
            sig17(smp.s),
            p(smp.pre_bend.start),
            p(smp.pre_bend.end),
            v(smp.bend.start),
            v(smp.bend.end)
        ));
    }
    out.push_str("\n  ]\n}\n");
    out
}

/// Parses a strip document. Pre-bends are re-oriented bottom to top (with
/// their bends) and must join the two boundary lines.
pub fn strip_from_json(text: &str) -> Result<RuledStrip, StripError> {
    let raw: RawStrip = serde_json::from_str(text).map_err(|e| StripError::Parse(e.to_string()))?;
    FlatMoebius::new(raw.lambda)?;
    let mut samples = Vec::with_capacity(raw.samples.len());
    for r in raw.samples {
        let finite = r.s.is_finite()
            && r.pre_bend.iter().flatten().all(|v| v.is_finite())
            && r.bend.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(StripError::Parse("non-finite number".into()));
        }
        let mut pre_bend = PreBend::new(
            FlatPoint::new(r.pre_bend[0][0], r.pre_bend[0][1]),
            FlatPoint::new(r.pre_bend[1][0], r.pre_bend[1][1]),
        );
        let mut bend = Segment3::new(Vec3::from_array(r.bend[0]), Vec3::from_array(r.bend[1]));
        if pre_bend.start.y > pre_bend.end.y {
            pre_bend = pre_bend.reversed();
            bend = bend.reversed();
        }
        const BOUNDARY_TOL: f64 = 1e-9;
        if pre_bend.start.y.abs() > BOUNDARY_TOL || (pre_bend.end.y - 1.0).abs() > BOUNDARY_TOL {
            return Err(StripError::NotOnBoundary);
        }
        samples.push(StripSample {
            s: r.s,
            pre_bend,
            bend,
        });
    }
    RuledStrip::new(raw.lambda, samples)
}
