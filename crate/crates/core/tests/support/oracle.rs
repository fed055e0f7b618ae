//! Independent reference implementations used as test oracles. Plain arrays
//! and textbook formulas only; nothing here calls into the crate's math.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = [f64; 4]; // w, x, y, z
pub type V = [f64; 3];

pub fn qmul(a: Q, b: Q) -> Q {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn qconj(q: Q) -> Q {
    [q[0], -q[1], -q[2], -q[3]]
}

pub fn qdot(a: Q, b: Q) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn qscale(q: Q, s: f64) -> Q {
    q.map(|v| v * s)
}

pub fn vadd(a: V, b: V) -> V {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn vsub(a: V, b: V) -> V {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn vscale(a: V, s: f64) -> V {
    a.map(|v| v * s)
}

pub fn vdot(a: V, b: V) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn vcross(a: V, b: V) -> V {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn vlen(a: V) -> f64 {
    vdot(a, a).sqrt()
}

/// Rotation matrix of a unit quaternion applied to `v`.
pub fn rotate(q: Q, v: V) -> V {
    let [w, x, y, z] = q;
    let m = [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ];
    [vdot(m[0], v), vdot(m[1], v), vdot(m[2], v)]
}

pub fn axis_angle(axis: V, angle: f64) -> Q {
    let u = vscale(axis, 1.0 / vlen(axis));
    let (s, c) = (angle / 2.0).sin_cos();
    [c, u[0] * s, u[1] * s, u[2] * s]
}

/// Angle in radians between two rotations, sign-insensitive. Uses atan2 of
/// the relative rotation so that nearly equal inputs keep full precision.
pub fn rot_distance(a: Q, b: Q) -> f64 {
    let r = qmul(qconj(a), b);
    2.0 * vlen([r[1], r[2], r[3]]).atan2(r[0].abs())
}

/// Rigid transform: rotate, then translate.
#[derive(Debug, Clone, Copy)]
pub struct Rigid {
    pub q: Q,
    pub p: V,
}

impl Rigid {
    pub fn compose(&self, child: &Rigid) -> Rigid {
        Rigid {
            q: qmul(self.q, child.q),
            p: vadd(self.p, rotate(self.q, child.p)),
        }
    }

    pub fn inverse(&self) -> Rigid {
        let qi = qconj(self.q);
        Rigid {
            q: qi,
            p: vscale(rotate(qi, self.p), -1.0),
        }
    }
}

/// Quaternion slerp along the shorter arc.
pub fn slerp(a: Q, b: Q, t: f64) -> Q {
    let mut b = b;
    let mut cos = qdot(a, b);
    if cos < 0.0 {
        b = qscale(b, -1.0);
        cos = -cos;
    }
    if cos > 1.0 - 1e-12 {
        let q: Q = std::array::from_fn(|i| a[i] + t * (b[i] - a[i]));
        let n = qdot(q, q).sqrt();
        return qscale(q, 1.0 / n);
    }
    let omega = cos.acos();
    let s = omega.sin();
    let (ka, kb) = (((1.0 - t) * omega).sin() / s, (t * omega).sin() / s);
    std::array::from_fn(|i| ka * a[i] + kb * b[i])
}

/// Chasles screw interpolation from `a` toward `b`: the relative motion is
/// a rotation by θ about a fixed line plus a slide d along it; at `t` both
/// are scaled by `t`.
pub fn screw_interp(a: &Rigid, b: &Rigid, t: f64) -> Rigid {
    let mut rel = a.inverse().compose(b);
    if rel.q[0] < 0.0 {
        rel.q = qscale(rel.q, -1.0);
    }
    let sin_half = vlen([rel.q[1], rel.q[2], rel.q[3]]);
    let theta = 2.0 * sin_half.atan2(rel.q[0]);
    let step = if theta.abs() < 1e-9 {
        Rigid {
            q: slerp([1.0, 0.0, 0.0, 0.0], rel.q, t),
            p: vscale(rel.p, t),
        }
    } else {
        let u = vscale([rel.q[1], rel.q[2], rel.q[3]], 1.0 / sin_half);
        let d = vdot(u, rel.p);
        let perp = vsub(rel.p, vscale(u, d));
        // Point on the screw axis closest to the origin.
        let c = vscale(vadd(perp, vscale(vcross(u, perp), 1.0 / (theta / 2.0).tan())), 0.5);
        let qt = axis_angle(u, theta * t);
        let p = vadd(vsub(c, rotate(qt, c)), vscale(u, d * t));
        Rigid { q: qt, p }
    };
    a.compose(&step)
}

/// Law-of-cosines elbow flexion (degrees, 0 = straight) for a two-link chain
/// reaching distance `d`.
pub fn elbow_flexion_deg(l1: f64, l2: f64, d: f64) -> f64 {
    let interior = ((l1 * l1 + l2 * l2 - d * d) / (2.0 * l1 * l2)).acos();
    180.0 - interior.to_degrees()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random unit quaternion (rejection sampling in the 4-ball).
pub fn random_rotation(rng: &mut impl Rng) -> Q {
    loop {
        let q: Q = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n2 = qdot(q, q);
        if n2 > 1e-6 && n2 <= 1.0 {
            return qscale(q, 1.0 / n2.sqrt());
        }
    }
}

pub fn random_rigid(rng: &mut impl Rng, extent: f64) -> Rigid {
    Rigid {
        q: random_rotation(rng),
        p: std::array::from_fn(|_| rng.gen_range(-extent..extent)),
    }
}
