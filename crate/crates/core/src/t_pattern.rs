//! T-pattern search on the sphere of bend pairs.
//!
//! Ordered pairs of distinct bends `(x0, x1)` form an open
//! cylinder; adding the two limits "x1 just ahead of x0" (`∂₊`) and "x1 just
//! behind x0" (`∂₋`) gives a 2-sphere with chart
//!
//! ```text
//! (θ, φ) ↦ (x0, x1) = (θ − φ, θ + φ),   θ ∈ R/2π, φ ∈ (0, π)
//! ```
//!
//! under which swapping the pair becomes the antipodal map
//! `(θ, φ) ↦ (θ + π, π − φ)`. Orienting `bend(x0)` arbitrarily and
//! transporting the orientation forward to `x1` gives unit directions
//! `u0, u1`; with midpoints `m0, m1` the map `F = (g, h)` of
//! [`line_invariants`] is odd, equals `(±1, 0)` at `∂±`, and its zeros are
//! T-patterns. The search isolates zeros by the winding of `F` around the
//! origin along cell boundaries.

use std::f64::consts::{PI, TAU};

use thiserror::Error;

use crate::exec::Exec;
use crate::line_geometry::{line_invariants, OrientedLine, Segment3, Vec3};
use crate::strip_model::RuledStrip;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("poles of the pair sphere have no bend pair")]
    PoleError,
    #[error("direction is not parallel to the bend (misalignment {0:e})")]
    NotParallel(f64),
    #[error("F vanishes on the path at point {index}")]
    ZeroOnPath { index: usize },
    #[error("path must start at the positive pole and end at the negative pole")]
    BadPath,
    #[error("no zero certified at the current resolution")]
    NotFound,
    #[error("line family jumps near t = {t}")]
    ContinuityError { t: f64 },
    #[error("line family does not end on its own reversal")]
    EndpointError,
}

/// A point of the pair sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpherePoint {
    /// `∂₊`: the second bend just ahead of the first.
    North,
    /// `∂₋`: the second bend just behind the first.
    South,
    Chart { theta: f64, phi: f64 },
}

impl SpherePoint {
    pub fn antipode(self) -> SpherePoint {
        match self {
            SpherePoint::North => SpherePoint::South,
            SpherePoint::South => SpherePoint::North,
            SpherePoint::Chart { theta, phi } => SpherePoint::Chart {
                theta: (theta + PI).rem_euclid(TAU),
                phi: PI - phi,
            },
        }
    }
}

/// Two bend parameters in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendPair {
    pub x0: f64,
    pub x1: f64,
}

impl BendPair {
    pub fn swapped(self) -> BendPair {
        BendPair {
            x0: self.x1,
            x1: self.x0,
        }
    }
}

pub fn sphere_to_pair(p: SpherePoint) -> Result<BendPair, SearchError> {
    match p {
        SpherePoint::Chart { theta, phi } => Ok(BendPair {
            x0: (theta - phi).rem_euclid(TAU),
            x1: (theta + phi).rem_euclid(TAU),
        }),
        _ => Err(SearchError::PoleError),
    }
}

/// Inverse chart; `None` when `x0 = x1`.
pub fn pair_to_sphere(pair: BendPair) -> Option<SpherePoint> {
    let gap = (pair.x1 - pair.x0).rem_euclid(TAU);
    if gap == 0.0 {
        return None;
    }
    let phi = gap / 2.0;
    Some(SpherePoint::Chart {
        theta: (pair.x0 + phi).rem_euclid(TAU),
        phi,
    })
}

/// A closed loop of bends, parameterised over `R` with the given period.
///
/// `segment_at` must be continuous in `x` and satisfy
/// `segment_at(x + period) = segment_at(x)` reversed, the holonomy of a
/// Moebius band.
pub trait LineCircle: Sync {
    fn period(&self) -> f64;
    fn segment_at(&self, x: f64) -> Segment3;
}

impl LineCircle for RuledStrip {
    fn period(&self) -> f64 {
        TAU
    }

    fn segment_at(&self, x: f64) -> Segment3 {
        self.bend_at(x)
    }
}

/// Continuous map from the chart of the pair sphere to the plane.
pub trait SphereMap: Sync {
    fn eval(&self, theta: f64, phi: f64) -> [f64; 2];
}

/// The map `F` of a line circle in sphere coordinates.
pub struct CircleMap<'a, C: LineCircle + ?Sized>(pub &'a C);

impl<C: LineCircle + ?Sized> SphereMap for CircleMap<'_, C> {
    fn eval(&self, theta: f64, phi: f64) -> [f64; 2] {
        let scale = self.0.period() / TAU;
        let x0 = (theta - phi) * scale;
        pair_value_lifted(self.0, x0, x0 + 2.0 * phi * scale)
    }
}

fn direction(seg: &Segment3) -> Vec3 {
    (seg.end - seg.start).normalized().unwrap_or(Vec3::ZERO)
}

/// `(g, h)` for bends at `x0` and `x1`, where `x1` is the lift of the second
/// parameter reached by moving forward from `x0`.
pub fn pair_value_lifted<C: LineCircle + ?Sized>(c: &C, x0: f64, x1: f64) -> [f64; 2] {
    let s0 = c.segment_at(x0);
    let s1 = c.segment_at(x1);
    let u0 = direction(&s0);
    let u1 = direction(&s1);
    let g = u0.dot(u1);
    let h = (s0.midpoint() - s1.midpoint()).dot(u0.cross(u1));
    [g, h]
}

fn forward_lift(x0: f64, x1: f64, period: f64) -> f64 {
    let gap = (x1 - x0).rem_euclid(period);
    x0 + if gap == 0.0 { period } else { gap }
}

/// `F` at a bend pair of a strip.
pub fn f_eval(strip: &RuledStrip, pair: BendPair) -> (f64, f64) {
    let [g, h] = pair_value_lifted(strip, pair.x0, forward_lift(pair.x0, pair.x1, TAU));
    (g, h)
}

/// Transports an orientation of `bend(x0)` forward along the strip to
/// `bend(x1)`. A full loop (`x1 = x0`) reverses it.
pub fn propagate_orientation(
    strip: &RuledStrip,
    x0: f64,
    x1: f64,
    dir0: Vec3,
    tol: f64,
) -> Result<Vec3, SearchError> {
    let d0 = direction(&strip.bend_at(x0));
    let misalignment = dir0.cross(d0).norm();
    if misalignment > tol || dir0.norm() == 0.0 {
        return Err(SearchError::NotParallel(misalignment));
    }
    let sign = dir0.dot(d0).signum();
    let d1 = direction(&strip.bend_at(forward_lift(x0, x1, TAU)));
    Ok(d1 * sign)
}

/// Record of the turning of `F` along a pole-to-pole path.
#[derive(Debug, Clone, PartialEq)]
pub struct WindingCertificate {
    pub path: Vec<SpherePoint>,
    pub values: Vec<[f64; 2]>,
    /// Total turning angle divided by `2π`; a half-integer.
    pub w: f64,
}

fn angle_between(a: [f64; 2], b: [f64; 2]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.atan2(dot)
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

const MAX_TURN: f64 = PI / 4.0;

/// Turning of `F` along the chart segment `a → b`, bisecting until every
/// step turns by at most `π/4`. A sample with `|F| < tol` aborts with that
/// point.
fn edge_turn<M: SphereMap + ?Sized>(
    map: &M,
    a: (f64, f64),
    b: (f64, f64),
    fa: [f64; 2],
    fb: [f64; 2],
    tol: f64,
    depth: u32,
) -> Result<f64, ((f64, f64), [f64; 2])> {
    if norm2(fa) < tol {
        return Err((a, fa));
    }
    if norm2(fb) < tol {
        return Err((b, fb));
    }
    let turn = angle_between(fa, fb);
    if turn.abs() <= MAX_TURN || depth == 0 {
        return Ok(turn);
    }
    let m = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
    let fm = map.eval(m.0, m.1);
    Ok(edge_turn(map, a, m, fa, fm, tol, depth - 1)? + edge_turn(map, m, b, fm, fb, tol, depth - 1)?)
}

const EDGE_DEPTH: u32 = 50;

/// Chart coordinates of a path point, with poles placed on the neighbouring
/// meridian.
fn chart_of(p: SpherePoint, theta_hint: f64) -> (f64, f64) {
    match p {
        SpherePoint::North => (theta_hint, 0.0),
        SpherePoint::South => (theta_hint, PI),
        SpherePoint::Chart { theta, phi } => (theta, phi),
    }
}

fn value_at<M: SphereMap + ?Sized>(map: &M, p: SpherePoint) -> [f64; 2] {
    match p {
        SpherePoint::North => [1.0, 0.0],
        SpherePoint::South => [-1.0, 0.0],
        SpherePoint::Chart { theta, phi } => map.eval(theta, phi),
    }
}

/// Winding of `F` along a path from `∂₊` to `∂₋`, for any sphere map.
pub fn winding_number_on<M: SphereMap + ?Sized>(
    map: &M,
    meridian: &[SpherePoint],
    tol: f64,
) -> Result<WindingCertificate, SearchError> {
    if meridian.len() < 3
        || meridian[0] != SpherePoint::North
        || meridian[meridian.len() - 1] != SpherePoint::South
        || meridian[1..meridian.len() - 1]
            .iter()
            .any(|p| !matches!(p, SpherePoint::Chart { .. }))
    {
        return Err(SearchError::BadPath);
    }
    let values: Vec<[f64; 2]> = meridian.iter().map(|&p| value_at(map, p)).collect();
    if let Some(index) = values.iter().position(|v| norm2(*v) < tol) {
        return Err(SearchError::ZeroOnPath { index });
    }
    let mut total = 0.0;
    for i in 0..meridian.len() - 1 {
        let (p, q) = (meridian[i], meridian[i + 1]);
        let hint = match (p, q) {
            (SpherePoint::Chart { theta, .. }, _) | (_, SpherePoint::Chart { theta, .. }) => theta,
            _ => 0.0,
        };
        let a = chart_of(p, hint);
        let b = chart_of(q, hint);
        total += edge_turn(map, a, b, values[i], values[i + 1], tol, EDGE_DEPTH)
            .map_err(|_| SearchError::ZeroOnPath { index: i })?;
    }
    Ok(WindingCertificate {
        path: meridian.to_vec(),
        values,
        w: total / TAU,
    })
}

/// Winding of `F` for a strip along the given pole-to-pole path.
pub fn winding_number(
    strip: &RuledStrip,
    meridian: &[SpherePoint],
    tol: f64,
) -> Result<WindingCertificate, SearchError> {
    winding_number_on(&CircleMap(strip), meridian, tol)
}

/// The meridian `θ = const` with `n` interior points, poles included.
pub fn meridian(theta: f64, n: usize) -> Vec<SpherePoint> {
    let mut path = vec![SpherePoint::North];
    path.extend((1..=n).map(|k| SpherePoint::Chart {
        theta,
        phi: PI * k as f64 / (n + 1) as f64,
    }));
    path.push(SpherePoint::South);
    path
}

/// Meridian certificate near `theta`; on a zero along the way the meridian
/// is shifted by `shift` and retried, at most three times.
pub fn meridian_certificate<M: SphereMap + ?Sized>(
    map: &M,
    theta: f64,
    shift: f64,
    n: usize,
    tol: f64,
) -> Result<WindingCertificate, SearchError> {
    let mut last = SearchError::NotFound;
    for attempt in 0..4 {
        match winding_number_on(map, &meridian(theta + shift * attempt as f64, n), tol) {
            Ok(c) => return Ok(c),
            Err(e @ SearchError::ZeroOnPath { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Parameters of the degree-guided zero search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Required `|F|` at a returned zero.
    pub tol: f64,
    pub theta_cells: usize,
    pub phi_cells: usize,
    /// Maximum number of quad-splits below the initial grid.
    pub max_depth: u32,
    /// Maximum bisection depth when resolving the turning along one edge.
    pub edge_depth: u32,
    /// Distance of the grid from the poles in `φ`.
    pub pole_margin: f64,
    pub exec: Exec,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            tol: 1e-9,
            theta_cells: 96,
            phi_cells: 48,
            max_depth: 40,
            edge_depth: EDGE_DEPTH,
            pole_margin: 1e-6,
            exec: Exec::default(),
        }
    }
}

/// A certified zero of a sphere map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereZero {
    pub theta: f64,
    pub phi: f64,
    pub value: [f64; 2],
    /// Winding of `F` around the smallest cell that isolated the zero; `0`
    /// when the zero was hit directly by a boundary sample.
    pub cell_winding: i32,
    /// Width of that cell in `θ` and `φ`.
    pub cell_size: (f64, f64),
}

// Irrational offset keeps grid lines off symmetric configurations.
const THETA_OFFSET: f64 = 0.012_345_678_901_234_57 * std::f64::consts::SQRT_2;

#[derive(Clone, Copy)]
struct Cell {
    t0: f64,
    t1: f64,
    p0: f64,
    p1: f64,
}

enum CellScan {
    Winding(i32),
    Hit(SphereZero),
}

fn scan_cell<M: SphereMap + ?Sized>(map: &M, c: &Cell, tol: f64, edge_depth: u32) -> CellScan {
    let corners = [(c.t0, c.p0), (c.t1, c.p0), (c.t1, c.p1), (c.t0, c.p1)];
    let vals: Vec<[f64; 2]> = corners.iter().map(|&(t, p)| map.eval(t, p)).collect();
    let mut total = 0.0;
    for i in 0..4 {
        let j = (i + 1) % 4;
        match edge_turn(map, corners[i], corners[j], vals[i], vals[j], tol, edge_depth) {
            Ok(turn) => total += turn,
            Err(((theta, phi), value)) => {
                return CellScan::Hit(SphereZero {
                    theta,
                    phi,
                    value,
                    cell_winding: 0,
                    cell_size: (c.t1 - c.t0, c.p1 - c.p0),
                })
            }
        }
    }
    CellScan::Winding((total / TAU).round() as i32)
}

fn refine<M: SphereMap + ?Sized>(map: &M, cell: Cell, winding: i32, depth: u32, opts: &SearchOptions) -> Option<SphereZero> {
    let tc = (cell.t0 + cell.t1) / 2.0;
    let pc = (cell.p0 + cell.p1) / 2.0;
    let value = map.eval(tc, pc);
    if norm2(value) <= opts.tol {
        return Some(SphereZero {
            theta: tc,
            phi: pc,
            value,
            cell_winding: winding,
            cell_size: (cell.t1 - cell.t0, cell.p1 - cell.p0),
        });
    }
    if depth >= opts.max_depth {
        return None;
    }
    // Children in tie-break order: smaller θ first, then smaller φ.
    let children = [
        Cell { t0: cell.t0, t1: tc, p0: cell.p0, p1: pc },
        Cell { t0: cell.t0, t1: tc, p0: pc, p1: cell.p1 },
        Cell { t0: tc, t1: cell.t1, p0: cell.p0, p1: pc },
        Cell { t0: tc, t1: cell.t1, p0: pc, p1: cell.p1 },
    ];
    for child in children {
        match scan_cell(map, &child, opts.tol, opts.edge_depth) {
            CellScan::Hit(z) => return Some(z),
            CellScan::Winding(0) => {}
            CellScan::Winding(w) => {
                if let Some(z) = refine(map, child, w, depth + 1, opts) {
                    return Some(z);
                }
            }
        }
    }
    None
}

fn normalized_theta(theta: f64) -> f64 {
    theta.rem_euclid(TAU)
}

/// All zeros isolated by the grid, ordered by `θ ∈ [0, 2π)` then `φ`.
pub fn find_zeros<M: SphereMap + ?Sized>(map: &M, opts: &SearchOptions) -> Vec<SphereZero> {
    let nt = opts.theta_cells.max(1);
    let np = opts.phi_cells.max(1);
    let dt = TAU / nt as f64;
    let p_lo = opts.pole_margin;
    let dp = (PI - 2.0 * p_lo) / np as f64;
    let cells: Vec<Cell> = (0..nt * np)
        .map(|k| {
            let (i, j) = (k / np, k % np);
            Cell {
                t0: THETA_OFFSET + dt * i as f64,
                t1: THETA_OFFSET + dt * (i + 1) as f64,
                p0: p_lo + dp * j as f64,
                p1: p_lo + dp * (j + 1) as f64,
            }
        })
        .collect();
    let found = opts.exec.map(&cells, |cell| match scan_cell(map, cell, opts.tol, opts.edge_depth) {
        CellScan::Hit(z) => Some(z),
        CellScan::Winding(0) => None,
        CellScan::Winding(w) => refine(map, *cell, w, 0, opts),
    });
    let mut zeros: Vec<SphereZero> = found.into_iter().flatten().collect();
    zeros.sort_by(|a, b| {
        normalized_theta(a.theta)
            .total_cmp(&normalized_theta(b.theta))
            .then(a.phi.total_cmp(&b.phi))
    });
    // A zero on a shared edge can be reported by both neighbours.
    zeros.dedup_by(|a, b| {
        (normalized_theta(a.theta) - normalized_theta(b.theta)).abs() <= dt
            && (a.phi - b.phi).abs() <= dp
            && (a.value[0] - b.value[0]).abs() <= opts.tol * 2.0
    });
    zeros
}

/// First zero in tie-break order.
pub fn find_zero<M: SphereMap + ?Sized>(map: &M, opts: &SearchOptions) -> Result<SphereZero, SearchError> {
    find_zeros(map, opts).into_iter().next().ok_or(SearchError::NotFound)
}

/// Two bends of one strip on perpendicular intersecting lines.
#[derive(Debug, Clone, PartialEq)]
pub struct TPattern {
    pub bends: [Segment3; 2],
    pub residual_g: f64,
    pub residual_h: f64,
    pub min_distance: f64,
    pub source: BendPair,
    pub theta: f64,
    pub phi: f64,
    pub cell_winding: i32,
    /// Meridian winding next to the zero; its `w` is a nonzero half-integer.
    pub certificate: WindingCertificate,
}

impl TPattern {
    pub fn carrier_lines(&self) -> Option<(OrientedLine, OrientedLine)> {
        Some((self.bends[0].line()?, self.bends[1].line()?))
    }
}

fn pattern_from_zero(strip: &RuledStrip, z: &SphereZero, opts: &SearchOptions) -> TPattern {
    let x0 = z.theta - z.phi;
    let x1 = z.theta + z.phi;
    let bends = [strip.bend_at(x0), strip.bend_at(x1)];
    let (g, h) = match (bends[0].line(), bends[1].line()) {
        (Some(a), Some(b)) => line_invariants(&a, &b),
        _ => (z.value[0], z.value[1]),
    };
    let map = CircleMap(strip);
    let shift = TAU / opts.theta_cells.max(1) as f64 / 2.0;
    let certificate = meridian_certificate(&map, z.theta - shift, shift, 4 * opts.phi_cells.max(8), opts.tol)
        .unwrap_or(WindingCertificate {
            path: Vec::new(),
            values: Vec::new(),
            w: f64::NAN,
        });
    TPattern {
        bends,
        residual_g: g,
        residual_h: h,
        min_distance: bends[0].distance(&bends[1]),
        source: BendPair {
            x0: x0.rem_euclid(TAU),
            x1: x1.rem_euclid(TAU),
        },
        theta: normalized_theta(z.theta),
        phi: z.phi,
        cell_winding: z.cell_winding,
        certificate,
    }
}

pub fn find_t_pattern(strip: &RuledStrip, tol: f64) -> Result<TPattern, SearchError> {
    find_t_pattern_with(
        strip,
        &SearchOptions {
            tol,
            ..SearchOptions::default()
        },
    )
}

pub fn find_t_pattern_with(strip: &RuledStrip, opts: &SearchOptions) -> Result<TPattern, SearchError> {
    let z = find_zero(&CircleMap(strip), opts)?;
    Ok(pattern_from_zero(strip, &z, opts))
}

/// Every T-pattern the grid isolates. Each unordered pair shows up twice,
/// once per ordering.
pub fn enumerate_t_patterns(strip: &RuledStrip, opts: &SearchOptions) -> Vec<TPattern> {
    find_zeros(&CircleMap(strip), opts)
        .iter()
        .map(|z| pattern_from_zero(strip, z, opts))
        .collect()
}

/// A line family over `[0, 1]` closing up with reversed orientation.
pub struct LineFamily<F> {
    pub f: F,
}

impl<F: Fn(f64) -> OrientedLine + Sync> LineCircle for LineFamily<F> {
    fn period(&self) -> f64 {
        1.0
    }

    fn segment_at(&self, x: f64) -> Segment3 {
        let k = x.floor();
        let l = (self.f)(x - k);
        let seg = Segment3::new(l.anchor, l.anchor + l.direction);
        if (k as i64).rem_euclid(2) == 1 {
            seg.reversed()
        } else {
            seg
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaTtSolution {
    pub r: f64,
    pub s: f64,
    pub g: f64,
    pub h: f64,
}

/// Samples used to check continuity and endpoints of a family.
const FAMILY_CHECK_SAMPLES: usize = 1000;

/// Finds `r < s` in `[0, 1]` such that `L_r` and `L_s` are perpendicular
/// and intersect, for a continuous family with `L_1 = L_0` reversed.
pub fn lemma_tt_solve<F>(path: F, opts: &SearchOptions) -> Result<LemmaTtSolution, SearchError>
where
    F: Fn(f64) -> OrientedLine + Sync,
{
    let mut prev = path(0.0).direction;
    for i in 1..=FAMILY_CHECK_SAMPLES {
        let t = i as f64 / FAMILY_CHECK_SAMPLES as f64;
        let d = path(t).direction;
        if prev.dot(d).clamp(-1.0, 1.0).acos() >= 0.1 {
            return Err(SearchError::ContinuityError { t });
        }
        prev = d;
    }
    let (l0, l1) = (path(0.0), path(1.0));
    const ENDPOINT_TOL: f64 = 1e-9;
    if (l1.direction + l0.direction).norm() > ENDPOINT_TOL
        || l0.distance_to_point(l1.anchor) > ENDPOINT_TOL
    {
        return Err(SearchError::EndpointError);
    }
    let family = LineFamily { f: &path };
    let z = find_zero(&CircleMap(&family), opts)?;
    let x0 = ((z.theta - z.phi) / TAU).rem_euclid(1.0);
    let x1 = x0 + z.phi / PI;
    let (r, s) = if x1 <= 1.0 { (x0, x1) } else { (x1 - 1.0, x0) };
    let (g, h) = line_invariants(&path(r), &path(s));
    Ok(LemmaTtSolution { r, s, g, h })
}
