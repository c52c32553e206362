//! Quasi-static force balance for the grasped object.
//!
//! Each sub-step first moves the centroid height to where the two belts'
//! normal loads cancel, then solves the in-plane velocity `(v_x, omega)` at
//! which regularized Coulomb friction from every penetrating column balances
//! the elastic normal loads and a small viscous damping. Pressure
//! `k_n * depth * dx` acts along the belt normal; friction acts along the
//! outline tangent at the penetrating point. The friction law
//! `f = -mu p tanh(s / v_reg)` along the outline tangent is the gradient of a
//! convex dissipation potential, so the velocity is that potential's unique
//! minimizer and Newton's method with backtracking finds it reliably.

use crate::geometry::{cross, Vec2};

use super::contact::{Envelope, Side};

/// Loaded contact column, in world axes relative to the centroid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LoadedSample {
    pub r: Vec2,
    pub tangent: Vec2,
    /// Belt-normal pressure force on the object, N.
    pub normal_force: Vec2,
    /// Friction capacity `mu * |normal force|`, N.
    pub capacity: f64,
    /// Belt surface velocity along world x, mm/s.
    pub belt_velocity: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct FrictionParams {
    pub stiffness: f64,
    pub mu: f64,
    pub smoothing: f64,
    pub stick_speed: f64,
    pub c_trans: f64,
    pub c_rot: f64,
}

/// Net upward normal load and total load magnitude, both scaled by
/// `1 / (k_n dx)`, with the centroid at `y`. The net load is non-increasing
/// in `y`.
fn vertical_load(env: &Envelope, y: f64, gap: f64) -> (f64, f64) {
    let (mut net, mut total) = (0.0, 0.0);
    for j in 0..env.width() {
        let left = env.depth(Side::Left, j, y, gap);
        let right = env.depth(Side::Right, j, y, gap);
        // Per-column pairing keeps mirror-symmetric grasps exactly balanced.
        net += left - right;
        total += left + right;
    }
    (net, total)
}

/// Centroid height at which the normal loads of both belts balance, searched
/// from `y0`. Returns `y0` unchanged when it already balances (including the
/// free-floating case with no contact at all).
pub(crate) fn equilibrium_height(env: &Envelope, gap: f64, y0: f64) -> f64 {
    let (f0, total) = vertical_load(env, y0, gap);
    if f0.abs() <= 1e-10 * total || f0 == 0.0 {
        return y0;
    }
    let dir = f0.signum();
    let (mut a, mut fa) = (y0, f0);
    let mut step = 1e-3;
    let (mut b, mut fb);
    loop {
        b = y0 + dir * step;
        fb = vertical_load(env, b, gap).0;
        if fb * dir <= 0.0 {
            break;
        }
        a = b;
        fa = fb;
        step *= 2.0;
        if step > 1e3 {
            return b;
        }
    }
    if fb == 0.0 && fa.abs() < 1e-300 {
        return b;
    }
    // Illinois regula falsi on the bracket [a, b].
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= 1e-12 * (1.0 + a.abs()) {
            break;
        }
        let m = (a * fb - b * fa) / (fb - fa);
        let m = if m.is_finite() && (m - a) * (m - b) < 0.0 { m } else { 0.5 * (a + b) };
        let fm = vertical_load(env, m, gap).0;
        if fm == 0.0 {
            return m;
        }
        if fm * dir > 0.0 {
            a = m;
            fa = fm;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = m;
            fb = fm;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    0.5 * (a + b)
}

/// Samples at centroid height `y`. `belt` gives each side's world-x surface
/// velocity.
pub(crate) fn loaded_samples(
    env: &Envelope,
    y: f64,
    gap: f64,
    column_x: impl Fn(usize) -> f64,
    dx: f64,
    params: &FrictionParams,
    belt: impl Fn(Side) -> f64,
) -> Vec<LoadedSample> {
    let mut out = Vec::new();
    for side in [Side::Left, Side::Right] {
        for j in 0..env.width() {
            let d = env.depth(side, j, y, gap);
            if d <= 0.0 {
                continue;
            }
            let s = env.sample(side, j).expect("positive depth implies a sample");
            let magnitude = params.stiffness * d * dx;
            let push = match side {
                Side::Left => Vec2::new(0.0, 1.0),
                Side::Right => Vec2::new(0.0, -1.0),
            };
            out.push(LoadedSample {
                r: Vec2::new(column_x(j) - env.center_x, s.offset),
                tangent: Vec2::new(-s.normal.y, s.normal.x),
                normal_force: push * magnitude,
                capacity: params.mu * magnitude,
                belt_velocity: belt(side),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PlanarVelocity {
    pub vx: f64,
    pub omega: f64,
}

/// Slip of one sample as `a . z + c` for `z = (v_x, omega)`.
#[inline]
fn slip_terms(s: &LoadedSample, vy: f64) -> ([f64; 2], f64) {
    let t = s.tangent;
    let a = [t.x, s.r.x * t.y - s.r.y * t.x];
    let c = vy * t.y - s.belt_velocity * t.x;
    (a, c)
}

#[inline]
fn log_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

struct Problem<'a> {
    samples: &'a [LoadedSample],
    terms: Vec<([f64; 2], f64)>,
    load: [f64; 2],
    params: FrictionParams,
}

impl<'a> Problem<'a> {
    fn new(samples: &'a [LoadedSample], vy: f64, params: FrictionParams) -> Self {
        let terms = samples.iter().map(|s| slip_terms(s, vy)).collect();
        let mut load = [0.0; 2];
        for s in samples {
            load[0] += s.normal_force.x;
            load[1] += cross(&s.r, &s.normal_force);
        }
        Problem { samples, terms, load, params }
    }

    fn potential(&self, z: [f64; 2]) -> f64 {
        let vr = self.params.smoothing;
        let mut phi = 0.5 * (self.params.c_trans * z[0] * z[0] + self.params.c_rot * z[1] * z[1])
            - self.load[0] * z[0]
            - self.load[1] * z[1];
        for (s, (a, c)) in self.samples.iter().zip(&self.terms) {
            let slip = a[0] * z[0] + a[1] * z[1] + c;
            phi += s.capacity * vr * log_cosh(slip / vr);
        }
        phi
    }

    fn gradient_hessian(&self, z: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let vr = self.params.smoothing;
        let mut g = [
            self.params.c_trans * z[0] - self.load[0],
            self.params.c_rot * z[1] - self.load[1],
        ];
        let mut h = [[self.params.c_trans, 0.0], [0.0, self.params.c_rot]];
        for (s, (a, c)) in self.samples.iter().zip(&self.terms) {
            let u = (a[0] * z[0] + a[1] * z[1] + c) / vr;
            let th = u.tanh();
            let f = s.capacity * th;
            let k = s.capacity / vr * (1.0 - th * th);
            g[0] += f * a[0];
            g[1] += f * a[1];
            h[0][0] += k * a[0] * a[0];
            h[0][1] += k * a[0] * a[1];
            h[1][1] += k * a[1] * a[1];
        }
        h[1][0] = h[0][1];
        (g, h)
    }

    fn max_slip(&self, z: [f64; 2]) -> f64 {
        self.terms
            .iter()
            .map(|(a, c)| (a[0] * z[0] + a[1] * z[1] + c).abs())
            .fold(0.0, f64::max)
    }

    /// Velocity with zero slip in the capacity-weighted least-squares sense.
    fn sticking_velocity(&self) -> Option<[f64; 2]> {
        let mut m = [[0.0; 2]; 2];
        let mut rhs = [0.0; 2];
        for (s, (a, c)) in self.samples.iter().zip(&self.terms) {
            let w = s.capacity;
            m[0][0] += w * a[0] * a[0];
            m[0][1] += w * a[0] * a[1];
            m[1][1] += w * a[1] * a[1];
            rhs[0] -= w * c * a[0];
            rhs[1] -= w * c * a[1];
        }
        m[1][0] = m[0][1];
        solve2(m, rhs, 1e-12)
    }
}

fn solve2(m: [[f64; 2]; 2], rhs: [f64; 2], rel_tol: f64) -> Option<[f64; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let scale = (m[0][0] * m[1][1]).abs().max(m[0][1] * m[1][0]).max(f64::MIN_POSITIVE);
    if !(det.abs() > rel_tol * scale) {
        return None;
    }
    Some([
        (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ])
}

/// Solves the in-plane velocity. `warm` seeds Newton's method.
pub(crate) fn solve_velocity(
    samples: &[LoadedSample],
    vy: f64,
    params: FrictionParams,
    warm: PlanarVelocity,
) -> PlanarVelocity {
    let problem = Problem::new(samples, vy, params);
    if samples.is_empty() {
        // Only damping acts.
        return PlanarVelocity { vx: 0.0, omega: 0.0 };
    }
    let stick = problem.sticking_velocity();
    let mut z = [warm.vx, warm.omega];
    let mut phi = problem.potential(z);
    if let Some(s) = stick {
        let phi_s = problem.potential(s);
        if phi_s < phi {
            z = s;
            phi = phi_s;
        }
    }
    for _ in 0..100 {
        let (g, h) = problem.gradient_hessian(z);
        let Some(step) = solve2(h, [-g[0], -g[1]], 1e-300) else { break };
        let slope = g[0] * step[0] + g[1] * step[1];
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial = [z[0] + t * step[0], z[1] + t * step[1]];
            let phi_t = problem.potential(trial);
            if phi_t <= phi + 1e-4 * t * slope {
                z = trial;
                phi = phi_t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        let moved = t * (step[0].abs() + step[1].abs());
        if !accepted || moved <= 1e-13 * (1.0 + z[0].abs() + z[1].abs()) {
            break;
        }
    }
    if problem.max_slip(z) < params.stick_speed {
        if let Some(s) = stick {
            z = s;
        }
    }
    PlanarVelocity { vx: z[0], omega: z[1] }
}
