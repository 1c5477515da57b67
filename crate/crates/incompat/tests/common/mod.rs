//! Shared fixtures for the integration suites.
#![allow(dead_code)]

use incompat::compat::{
    remark_half_channel_witness, remark_half_joint_observable, remark_half_witness,
};
use incompat::devices::{constant_channel, trivial_observable, ChannelChoi, DevicePair, Mix, Povm};
use incompat::linalg::CMatrix;
use incompat::random::{haar_unitary, random_channel, random_distribution, random_povm, DetRng};
use incompat::robustness::{polygon_oracle, Point2, PolygonOracle};
use rand::Rng;

/// Hull of 4–9 uniform points in the unit square `[−1, 1]²`, redrawn until
/// non-degenerate.
pub fn random_polygon(r: &mut impl Rng) -> PolygonOracle {
    loop {
        let n = r.gen_range(4..10);
        let pts: Vec<Point2> = (0..n)
            .map(|_| [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)])
            .collect();
        if let Ok(p) = polygon_oracle(&pts) {
            return p;
        }
    }
}

/// Strictly interior point: a random convex combination of all hull vertices.
pub fn interior_point(r: &mut impl Rng, poly: &PolygonOracle) -> Point2 {
    let w = random_distribution(r, poly.hull.len());
    poly.hull.iter().zip(&w).fold([0.0, 0.0], |acc, (v, c)| {
        [acc[0] + c * v[0], acc[1] + c * v[1]]
    })
}

pub fn random_point(r: &mut impl Rng, radius: f64) -> Point2 {
    [r.gen_range(-radius..radius), r.gen_range(-radius..radius)]
}

pub fn outside_point(r: &mut impl Rng, poly: &PolygonOracle) -> Point2 {
    loop {
        let x = random_point(r, 3.0);
        if !poly.contains(&x) {
            return x;
        }
    }
}

fn lerp(a: Point2, b: Point2, t: f64) -> Point2 {
    [t * a[0] + (1.0 - t) * b[0], t * a[1] + (1.0 - t) * b[1]]
}

/// Smallest slack of each geometric law over a few random draws on `poly`:
/// convexity of `1/w(·|y)`, concavity of `1/(1−w(x|·))`, convexity of the
/// reciprocal supremum, and monotonicity for noise pushed behind `y`.
/// Non-negative (up to rounding) means the law holds.
#[derive(Clone, Copy, Debug)]
pub struct PolygonSlacks {
    pub convex_in_x: f64,
    pub concave_in_y: f64,
    pub convex_absolute: f64,
    pub behind_y: f64,
}

pub fn polygon_slacks(r: &mut impl Rng, poly: &PolygonOracle, draws: usize) -> PolygonSlacks {
    let mut s = PolygonSlacks {
        convex_in_x: f64::INFINITY,
        concave_in_y: f64::INFINITY,
        convex_absolute: f64::INFINITY,
        behind_y: f64::INFINITY,
    };
    let w = |x: &Point2, y: &Point2| poly.exact_relative(x, y).expect("noise inside");
    for _ in 0..draws {
        let t: f64 = r.gen_range(0.0..1.0);

        let (x1, x2, y) = (
            random_point(r, 3.0),
            random_point(r, 3.0),
            interior_point(r, poly),
        );
        let lhs = 1.0 / w(&lerp(x1, x2, t), &y);
        let rhs = t / w(&x1, &y) + (1.0 - t) / w(&x2, &y);
        s.convex_in_x = s.convex_in_x.min(rhs - lhs);

        let x = outside_point(r, poly);
        let (y1, y2) = (interior_point(r, poly), interior_point(r, poly));
        let lhs = 1.0 / (1.0 - w(&x, &lerp(y1, y2, t)));
        let rhs = t / (1.0 - w(&x, &y1)) + (1.0 - t) / (1.0 - w(&x, &y2));
        s.concave_in_y = s.concave_in_y.min(lhs - rhs);

        let (x1, x2) = (outside_point(r, poly), outside_point(r, poly));
        let big_w = |x: &Point2| poly.absolute_robustness(x).0;
        let lhs = 1.0 / big_w(&lerp(x1, x2, t));
        let rhs = t / big_w(&x1) + (1.0 - t) / big_w(&x2);
        s.convex_absolute = s.convex_absolute.min(rhs - lhs);

        let (x, y) = (outside_point(r, poly), interior_point(r, poly));
        // largest p keeping y' = (1+p)y − px inside, then a random fraction of it
        let p_max = poly
            .exact_relative(&[2.0 * y[0] - x[0], 2.0 * y[1] - x[1]], &y)
            .expect("inside");
        let p = r.gen_range(0.0..1.0) * p_max;
        let y_behind = [(1.0 + p) * y[0] - p * x[0], (1.0 + p) * y[1] - p * x[1]];
        if p > 0.0 && poly.contains(&y_behind) {
            s.behind_y = s.behind_y.min(w(&x, &y_behind) - w(&x, &y));
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Device pairs

pub fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// A random pair of the given kind at `d = 2` and its trivial noise partner.
pub fn random_pair(r: &mut DetRng, kind: usize) -> (DevicePair, DevicePair) {
    let d = 2;
    let mixed = CMatrix::identity(d).scale(0.5);
    let t = |n| trivial_observable(&uniform(n), d).unwrap();
    let c = || constant_channel(&mixed, d).unwrap();
    let chan = |r: &mut DetRng| -> ChannelChoi {
        if rand::Rng::gen_bool(r, 0.5) {
            ChannelChoi::unitary(&haar_unitary(r, d)).unwrap()
        } else {
            random_channel(r, d, 2)
        }
    };
    match kind {
        0 => {
            // a projective first observable keeps most pairs incompatible
            let u = haar_unitary(r, d);
            let a = Povm::from_basis(&(0..d).map(|j| u.column(j)).collect::<Vec<_>>()).unwrap();
            let b = random_povm(r, d, 3);
            let y = DevicePair::Jm {
                first: t(a.outcomes()),
                second: t(b.outcomes()),
            };
            (
                DevicePair::Jm {
                    first: a,
                    second: b,
                },
                y,
            )
        }
        1 => (
            DevicePair::Chan {
                first: chan(r),
                second: chan(r),
            },
            DevicePair::Chan {
                first: c(),
                second: c(),
            },
        ),
        _ => {
            let m = random_povm(r, d, 2);
            let y = DevicePair::Obschan {
                first: t(m.outcomes()),
                second: c(),
            };
            (
                DevicePair::Obschan {
                    first: m,
                    second: chan(r),
                },
                y,
            )
        }
    }
}

fn povm_close(a: &Povm, b: &Povm) -> f64 {
    a.effects()
        .iter()
        .zip(b.effects())
        .map(|(x, y)| x.max_abs_diff(y))
        .fold(0.0, f64::max)
}

/// Checks the constructive half-and-half witness; returns its worst error.
pub fn half_witness_error(x: &DevicePair, y: &DevicePair) -> f64 {
    let mid = x.mix(y, 0.5).unwrap();
    match (x, y, &mid) {
        (
            DevicePair::Jm {
                first: a,
                second: b,
            },
            DevicePair::Jm {
                first: ta,
                second: tb,
            },
            DevicePair::Jm {
                first: ma,
                second: mb,
            },
        ) => {
            let p: Vec<f64> = ta.effects().iter().map(|e| e[(0, 0)].re).collect();
            let q: Vec<f64> = tb.effects().iter().map(|e| e[(0, 0)].re).collect();
            let g = remark_half_joint_observable(a, b, &p, &q, 0.5).unwrap();
            g.validate(1e-10).unwrap();
            let (ga, gb) = g.marginals();
            povm_close(&ga, ma).max(povm_close(&gb, mb))
        }
        (
            DevicePair::Chan {
                first: e,
                second: f,
            },
            DevicePair::Chan {
                first: te,
                second: tf,
            },
            DevicePair::Chan {
                first: me,
                second: mf,
            },
        ) => {
            let (sigma, tau) = (
                te.apply(&CMatrix::identity(2).scale(0.5)),
                tf.apply(&CMatrix::identity(2).scale(0.5)),
            );
            let g = remark_half_channel_witness(e, f, &sigma, &tau, 0.5).unwrap();
            g.channel.validate(1e-10).unwrap();
            let (ge, gf) = g.marginals();
            ge.choi()
                .max_abs_diff(me.choi())
                .max(gf.choi().max_abs_diff(mf.choi()))
        }
        (
            DevicePair::Obschan {
                first: m,
                second: e,
            },
            DevicePair::Obschan {
                first: tm,
                second: te,
            },
            DevicePair::Obschan {
                first: mm,
                second: me,
            },
        ) => {
            let p: Vec<f64> = tm.effects().iter().map(|e| e[(0, 0)].re).collect();
            let sigma = te.apply(&CMatrix::identity(2).scale(0.5));
            let g = remark_half_witness(m, e, &p, &sigma, 0.5).unwrap();
            g.validate(1e-10).unwrap();
            let (gm, ge) = g.marginals().unwrap();
            povm_close(&gm, mm).max(ge.choi().max_abs_diff(me.choi()))
        }
        _ => unreachable!("kinds match"),
    }
}
