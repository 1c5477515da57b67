//! Robustness of a point `x` against noise `y` relative to a convex set `L₀`:
//! `w(x|y) = sup{t ∈ [0,1] : t·x + (1−t)·y ∈ L₀}`, its supremum over a noise
//! family, and the conversion `R = 1/w − 1`.
//!
//! Membership is delegated to an oracle. Undecided answers count as outside,
//! so every reported value is a certified lower end of its bracket.

use serde::{Deserialize, Serialize};

use crate::compat::{
    channel_compat_feasible, jm_feasible, obs_channel_feasible, SolverConfig, Verdict,
};
use crate::covariance::{covariant_pair_jm_oracle, CovariantObsPair};
use crate::devices::{DevicePair, Mix};
use crate::error::{Error, Result};
use crate::par;

pub const GRID_POINTS: usize = 33;
pub const DEVICE_BISECT_TOL: f64 = 1e-3;
pub const POLYGON_BISECT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Membership {
    Inside,
    Outside,
    Undecided,
}

impl From<Verdict> for Membership {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Feasible => Membership::Inside,
            Verdict::Infeasible => Membership::Outside,
            Verdict::Undecided => Membership::Undecided,
        }
    }
}

pub trait MembershipOracle: Sync {
    type Point: Mix + Sync + Send + Clone;
    fn membership(&self, p: &Self::Point) -> Result<Membership>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    Relative,
    KAbsoluteSampled,
    ClosedForm,
}

#[derive(Clone, Debug, Serialize)]
pub struct RobustnessEstimate<P> {
    pub value: f64,
    /// `(lo, hi)` around the boundary; `None` when no grid point was inside.
    pub bracket: Option<(f64, f64)>,
    pub witness_y: P,
    pub mode: EstimateMode,
    /// Index into the candidate list for sampled estimates.
    pub candidate: Option<usize>,
    pub oracle_calls: usize,
}

impl<P> RobustnessEstimate<P> {
    pub fn closed_form(value: f64, y: P) -> Self {
        Self {
            value,
            bracket: Some((value, value)),
            witness_y: y,
            mode: EstimateMode::ClosedForm,
            candidate: None,
            oracle_calls: 0,
        }
    }
}

fn inside<O: MembershipOracle>(oracle: &O, x: &O::Point, y: &O::Point, t: f64) -> Result<bool> {
    Ok(oracle.membership(&x.mix(y, t)?)? == Membership::Inside)
}

/// Grid scan over `t ∈ {0, 1/32, …, 1}`, then bisection on the upper end of
/// the inside interval.
pub fn relative_robustness<O: MembershipOracle>(
    x: &O::Point,
    y: &O::Point,
    oracle: &O,
    bisect_tol: f64,
) -> Result<RobustnessEstimate<O::Point>> {
    if !(bisect_tol > 0.0) {
        return Err(Error::ConstraintViolation(format!(
            "bisect_tol must be positive, got {bisect_tol}"
        )));
    }
    let n = GRID_POINTS - 1;
    let grid: Vec<bool> =
        par::map_range(GRID_POINTS, |i| inside(oracle, x, y, i as f64 / n as f64))
            .into_iter()
            .collect::<Result<_>>()?;
    let mut calls = GRID_POINTS;
    let estimate = |value, bracket, calls| RobustnessEstimate {
        value,
        bracket,
        witness_y: y.clone(),
        mode: EstimateMode::Relative,
        candidate: None,
        oracle_calls: calls,
    };
    let Some(top) = grid.iter().rposition(|&b| b) else {
        return Ok(estimate(0.0, None, calls));
    };
    if top == n {
        return Ok(estimate(1.0, Some((1.0, 1.0)), calls));
    }
    let (mut lo, mut hi) = (top as f64 / n as f64, (top + 1) as f64 / n as f64);
    while hi - lo > bisect_tol {
        let mid = 0.5 * (lo + hi);
        calls += 1;
        if inside(oracle, x, y, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(estimate(lo, Some((lo, hi)), calls))
}

/// Best relative robustness over the candidates: a lower bound on the
/// supremum over the whole noise family.
pub fn k_robustness_sampled<O: MembershipOracle>(
    x: &O::Point,
    candidates: &[O::Point],
    oracle: &O,
    bisect_tol: f64,
) -> Result<RobustnessEstimate<O::Point>> {
    if candidates.is_empty() {
        return Err(Error::ConstraintViolation("no noise candidates".into()));
    }
    let all: Vec<_> = par::map(candidates, |y| {
        relative_robustness(x, y, oracle, bisect_tol)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let calls = all.iter().map(|e| e.oracle_calls).sum();
    // first maximum wins, so ties resolve to the earliest candidate
    let (idx, best) = all
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.value > a.1.value { b } else { a })
        .expect("non-empty");
    Ok(RobustnessEstimate {
        mode: EstimateMode::KAbsoluteSampled,
        candidate: Some(idx),
        oracle_calls: calls,
        ..best
    })
}

/// `R = 1/w − 1`; infinite for `w ≤ 0`.
pub fn to_r(w: f64) -> f64 {
    if w <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / w - 1.0
    }
}

/// Any pair mixed half-and-half with suitable trivial devices is compatible.
pub fn global_lower_bound() -> f64 {
    0.5
}

/// `(2+d)/(2(1+d))`, the dimension-dependent improvement of the ½ floor.
pub fn heinosaari_lower_bound(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::Dimension(format!("need d ≥ 2, got {d}")));
    }
    let d = d as f64;
    Ok((2.0 + d) / (2.0 * (1.0 + d)))
}

// ---------------------------------------------------------------------------

/// Compatibility of a device pair, decided by the matching solver.
#[derive(Clone, Debug, Default)]
pub struct CompatOracle {
    pub cfg: SolverConfig,
}

impl CompatOracle {
    pub fn new(cfg: SolverConfig) -> Self {
        Self { cfg }
    }
}

impl MembershipOracle for CompatOracle {
    type Point = DevicePair;

    fn membership(&self, p: &DevicePair) -> Result<Membership> {
        let verdict = match p {
            DevicePair::Jm { first, second } => jm_feasible(first, second, &self.cfg)?.verdict,
            DevicePair::Chan { first, second } => {
                channel_compat_feasible(first, second, &self.cfg)?.verdict
            }
            DevicePair::Obschan { first, second } => {
                obs_channel_feasible(first, second, &self.cfg)?.verdict
            }
        };
        Ok(verdict.into())
    }
}

/// Joint measurability of Weyl-covariant pairs via the state reduction.
#[derive(Clone, Debug, Default)]
pub struct WeylPairOracle {
    pub cfg: SolverConfig,
}

impl MembershipOracle for WeylPairOracle {
    type Point = CovariantObsPair;

    fn membership(&self, p: &CovariantObsPair) -> Result<Membership> {
        Ok(covariant_pair_jm_oracle(p, &self.cfg)?.verdict.into())
    }
}

// ---------------------------------------------------------------------------
// Planar fixtures

pub type Point2 = [f64; 2];

impl Mix for Point2 {
    fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        Ok([
            t * self[0] + (1.0 - t) * other[0],
            t * self[1] + (1.0 - t) * other[1],
        ])
    }
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Closed convex polygon as the hull of its vertices.
#[derive(Clone, Debug)]
pub struct PolygonOracle {
    /// Counter-clockwise hull vertices.
    pub hull: Vec<Point2>,
    slack: f64,
}

pub fn polygon_oracle(vertices: &[Point2]) -> Result<PolygonOracle> {
    PolygonOracle::new(vertices)
}

impl PolygonOracle {
    pub fn new(vertices: &[Point2]) -> Result<Self> {
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::DegeneratePolygon("non-finite coordinate".into()));
        }
        let mut pts = vertices.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        pts.dedup();
        if pts.len() < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "{} distinct vertices",
                pts.len()
            )));
        }
        // Andrew's monotone chain
        let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
        for pass in 0..2 {
            let start = hull.len();
            let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
                Box::new(pts.iter())
            } else {
                Box::new(pts.iter().rev())
            };
            for &p in iter {
                while hull.len() >= start + 2
                    && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
                {
                    hull.pop();
                }
                hull.push(p);
            }
            hull.pop();
        }
        if hull.len() < 3 {
            return Err(Error::DegeneratePolygon("vertices are collinear".into()));
        }
        let area: f64 = (0..hull.len())
            .map(|i| cross([0.0, 0.0], hull[i], hull[(i + 1) % hull.len()]))
            .sum();
        if area.abs() < 1e-12 {
            return Err(Error::DegeneratePolygon("zero area".into()));
        }
        Ok(Self { hull, slack: 1e-12 })
    }

    /// Outward normals `n` and offsets `c` with `n·p ≤ c` inside.
    fn half_planes(&self) -> impl Iterator<Item = (Point2, f64)> + '_ {
        let k = self.hull.len();
        (0..k).map(move |i| {
            let (a, b) = (self.hull[i], self.hull[(i + 1) % k]);
            let n = [b[1] - a[1], a[0] - b[0]];
            (n, n[0] * a[0] + n[1] * a[1])
        })
    }

    pub fn contains(&self, p: &Point2) -> bool {
        self.half_planes().all(|(n, c)| {
            let scale = (n[0].hypot(n[1])).max(1.0);
            n[0] * p[0] + n[1] * p[1] - c <= self.slack * scale
        })
    }

    /// Exact `w(x|y)` for `y` in the polygon, from the exit point of the ray
    /// `y + t(x − y)`.
    pub fn exact_relative(&self, x: &Point2, y: &Point2) -> Result<f64> {
        if !self.contains(y) {
            return Err(Error::ConstraintViolation(
                "noise point is outside the polygon".into(),
            ));
        }
        let dir = [x[0] - y[0], x[1] - y[1]];
        let mut t: f64 = 1.0;
        for (n, c) in self.half_planes() {
            let rate = n[0] * dir[0] + n[1] * dir[1];
            if rate > 0.0 {
                t = t.min(((c - n[0] * y[0] - n[1] * y[1]) / rate).max(0.0));
            }
        }
        Ok(t)
    }

    /// `sup_{y ∈ L₀} w(x|y)` with its maximiser. Pushing `y` away from `x`
    /// never lowers `w`, so the supremum sits on the boundary, and along an
    /// edge `1/(1−w)` is concave, so golden-section search per edge suffices.
    pub fn absolute_robustness(&self, x: &Point2) -> (f64, Point2) {
        if self.contains(x) {
            return (1.0, *x);
        }
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let k = self.hull.len();
        let mut best = (f64::NEG_INFINITY, self.hull[0]);
        for i in 0..k {
            let (a, b) = (self.hull[i], self.hull[(i + 1) % k]);
            let at = |s: f64| -> (f64, Point2) {
                let y = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                (self.exact_relative(x, &y).unwrap_or(0.0), y)
            };
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..80 {
                let m1 = hi - phi * (hi - lo);
                let m2 = lo + phi * (hi - lo);
                if at(m1).0 < at(m2).0 {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            for cand in [at(0.0), at(1.0), at(0.5 * (lo + hi))] {
                if cand.0 > best.0 {
                    best = cand;
                }
            }
        }
        best
    }
}

impl MembershipOracle for PolygonOracle {
    type Point = Point2;

    fn membership(&self, p: &Point2) -> Result<Membership> {
        Ok(if self.contains(p) {
            Membership::Inside
        } else {
            Membership::Outside
        })
    }
}

/// `L₀ = [lo, hi]` on the real line, embedded as the first coordinate.
#[derive(Clone, Copy, Debug)]
pub struct IntervalOracle {
    pub lo: f64,
    pub hi: f64,
}

impl MembershipOracle for IntervalOracle {
    type Point = Point2;

    fn membership(&self, p: &Point2) -> Result<Membership> {
        Ok(if p[0] >= self.lo && p[0] <= self.hi {
            Membership::Inside
        } else {
            Membership::Outside
        })
    }
}
