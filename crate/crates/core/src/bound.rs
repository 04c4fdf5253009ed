//! The triangle estimate and the `√3` lower bound on the aspect ratio.
//!
//! Cutting an embedded band along the first bend `T` of a T-pattern gives a
//! trapezoid with sides `H` (short) and `D` (long). With `t` the displacement
//! of `T`, measured lengths of the embedded pieces give `2λ > α(t)` and
//! `2λ > β(t)` where
//!
//! ```text
//! α(t) = √(1+t²) + √(5+t²)        β(t) = 2√(5+t²) − 2t
//! ```
//!
//! `α` increases on `(0, ∞)`, `β` decreases on `R`, and they cross at
//! `t₀ = 1/√3` with common value `2√3`, so `λ > √3`.

use thiserror::Error;

use crate::strip_model::Trapezoid;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("triangle height must be at least 1, got {0}")]
    HeightTooSmall(f64),
    #[error("invalid triangle: base {base}, height {height}")]
    BadTriangle { base: f64, height: f64 },
    #[error("bracket [{0}, {1}] is empty or not finite")]
    BadBracket(f64, f64),
    #[error("inconsistent trapezoid or lengths: {0}")]
    InconsistentInput(String),
}

/// The crossing point of `α` and `β`.
pub fn t0() -> f64 {
    1.0 / 3f64.sqrt()
}

/// A triangle with base `p1 = (0, 0)`, `p2 = (base, 0)` and apex
/// `q = (apex_offset, height)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleInstance {
    pub base: f64,
    pub height: f64,
    pub apex_offset: f64,
}

impl TriangleInstance {
    pub fn new(base: f64, height: f64, apex_offset: f64) -> Result<Self, BoundError> {
        if !(base > 0.0 && base.is_finite() && apex_offset.is_finite()) || !height.is_finite() {
            return Err(BoundError::BadTriangle { base, height });
        }
        if height < 1.0 {
            return Err(BoundError::HeightTooSmall(height));
        }
        Ok(TriangleInstance {
            base,
            height,
            apex_offset,
        })
    }

    /// Triangle over a pre-bend of displacement `t`.
    pub fn over_pre_bend(t: f64, height: f64, apex_offset: f64) -> Result<Self, BoundError> {
        TriangleInstance::new((1.0 + t * t).sqrt(), height, apex_offset)
    }
}

/// Length of the two non-base sides `p1 q` and `q p2`.
pub fn vee_length(tri: &TriangleInstance) -> f64 {
    let left = tri.apex_offset.hypot(tri.height);
    let right = (tri.base - tri.apex_offset).hypot(tri.height);
    left + right
}

/// `√(5+t²)`, a lower bound for [`vee_length`] over triangles with base
/// `√(1+t²)` and height at least 1.
pub fn vee_lower_bound(t: f64, h: f64) -> Result<f64, BoundError> {
    if !(h >= 1.0) {
        return Err(BoundError::HeightTooSmall(h));
    }
    Ok((5.0 + t * t).sqrt())
}

pub fn alpha(t: f64) -> f64 {
    (1.0 + t * t).sqrt() + (5.0 + t * t).sqrt()
}

pub fn beta(t: f64) -> f64 {
    2.0 * (5.0 + t * t).sqrt() - 2.0 * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Alpha,
    Beta,
    Both,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Alpha => "alpha",
            Branch::Beta => "beta",
            Branch::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub lower_bound: f64,
    pub active_branch: Branch,
}

/// Branches closer than this (relative) are reported as [`Branch::Both`].
const BRANCH_TIE: f64 = 1e-12;

pub fn lower_bound(t: f64) -> BoundReport {
    let a = alpha(t);
    let b = beta(t);
    let active_branch = if (a - b).abs() <= BRANCH_TIE * a.abs().max(b.abs()) {
        Branch::Both
    } else if a > b {
        Branch::Alpha
    } else {
        Branch::Beta
    };
    BoundReport {
        t,
        alpha: a,
        beta: b,
        lower_bound: a.max(b) / 2.0,
        active_branch,
    }
}

/// Golden-section minimisation of `max(α, β)/2` over `[t_min, t_max]`.
///
/// The objective is unimodal on every bracket, so the search also handles
/// brackets that miss `t₀` (the minimum is then an endpoint). It keeps
/// shrinking well below `tol`: the kink at `t₀` has slopes of order one, so
/// the value is only as accurate as the location.
pub fn minimize_bound(t_min: f64, t_max: f64, tol: f64) -> Result<(f64, f64), BoundError> {
    if !(t_min.is_finite() && t_max.is_finite() && t_min < t_max) {
        return Err(BoundError::BadBracket(t_min, t_max));
    }
    let f = |t: f64| lower_bound(t).lower_bound;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (t_min, t_max);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let target = (0.1 * tol).min(1e-15 * a.abs().max(b.abs()).max(1.0));
    for _ in 0..400 {
        if b - a <= target {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = (c, fc);
    for t in [a, b, d, (a + b) / 2.0, t_min, t_max] {
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    Ok(best)
}

/// Measured lengths of the embedded images of the trapezoid pieces.
///
/// `h_prime` and `d_prime` are the embedded (chord) lengths spanned by the
/// images of `H` and `D`, `t_prime` and `b_prime` the lengths of the bends
/// `T` and `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbeddedLengths {
    pub h_prime: f64,
    pub d_prime: f64,
    pub t_prime: f64,
    pub b_prime: f64,
    /// Height of the apex over the line of `T′`, when measured.
    pub height: Option<f64>,
}

/// Slack in each length relation. Equalities report a signed defect;
/// inequalities report `larger − smaller`, which must be non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthSlacks {
    /// `ℓ(T′) − √(1+t²)`, zero for an isometric embedding.
    pub t_prime: f64,
    /// `ℓ(H′) − ℓ(T′)`.
    pub h_over_t: f64,
    /// `ℓ(D′) − √(5+t²)`.
    pub d_over_vee: f64,
    /// `ℓ(H) − ℓ(H′)`.
    pub h_chord: f64,
    /// `ℓ(D) − ℓ(D′)`.
    pub d_chord: f64,
    /// `height − ℓ(B′)`, when a height was supplied.
    pub height_over_b: Option<f64>,
    /// `2λ − α(t)`.
    pub alpha: f64,
    /// `2λ − β(t)`.
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub slacks: LengthSlacks,
    /// Names of the relations that fail by more than the tolerance.
    pub violations: Vec<&'static str>,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_length_identities(
    trap: &Trapezoid,
    lengths: &EmbeddedLengths,
    tol: f64,
) -> Result<IdentityReport, BoundError> {
    let (lambda, t) = (trap.lambda, trap.t);
    if !(lambda > 0.0 && lambda.is_finite() && t.is_finite() && t.abs() < lambda) {
        return Err(BoundError::InconsistentInput(format!(
            "trapezoid with lambda {lambda} and t {t}"
        )));
    }
    let flat_sum = trap.h_length() + trap.d_length() - 2.0 * lambda;
    let flat_diff = trap.d_length() - 2.0 * t - trap.h_length();
    let scale = 1e-12 * lambda.max(1.0);
    if flat_sum.abs() > scale || flat_diff.abs() > scale {
        return Err(BoundError::InconsistentInput("flat side lengths".into()));
    }
    let all = [lengths.h_prime, lengths.d_prime, lengths.t_prime, lengths.b_prime];
    if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(BoundError::InconsistentInput("lengths must be positive".into()));
    }

    let slacks = LengthSlacks {
        t_prime: lengths.t_prime - (1.0 + t * t).sqrt(),
        h_over_t: lengths.h_prime - lengths.t_prime,
        d_over_vee: lengths.d_prime - (5.0 + t * t).sqrt(),
        h_chord: trap.h_length() - lengths.h_prime,
        d_chord: trap.d_length() - lengths.d_prime,
        height_over_b: lengths.height.map(|h| h - lengths.b_prime),
        alpha: 2.0 * lambda - alpha(t),
        beta: 2.0 * lambda - beta(t),
    };
    let mut violations = Vec::new();
    if slacks.t_prime.abs() > tol {
        violations.push("t_prime");
    }
    let checks = [
        ("h_over_t", slacks.h_over_t),
        ("d_over_vee", slacks.d_over_vee),
        ("h_chord", slacks.h_chord),
        ("d_chord", slacks.d_chord),
        ("height_over_b", slacks.height_over_b.unwrap_or(0.0)),
        ("alpha", slacks.alpha),
        ("beta", slacks.beta),
    ];
    for (name, v) in checks {
        if v < -tol {
            violations.push(name);
        }
    }
    Ok(IdentityReport { slacks, violations })
}
