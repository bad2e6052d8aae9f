//! Spacetime event bookkeeping along the Alice–Bob axis: Lorentz boosts,
//! lower bounds on the speed of a hypothetical superluminal influence,
//! and feasibility of before-before configurations with analyzers in
//! relative motion.
//!
//! Geometry is reduced to one spatial dimension; off-axis velocities
//! enter through their projection (cos_theta, cos_phi) onto the axis.

use std::f64::consts::PI;

use crate::error::{check_range, Error, Result};
use crate::SPEED_OF_LIGHT;

const C: f64 = SPEED_OF_LIGHT;

/// A labelled (t, x) event on the Alice–Bob axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeEvent {
    pub t: f64,
    pub x: f64,
    pub label: String,
}

impl SpacetimeEvent {
    pub fn new(t: f64, x: f64, label: impl Into<String>) -> Result<Self> {
        for (name, v) in [("t", t), ("x", x)] {
            if !v.is_finite() {
                return Err(Error::NotFinite { name, value: v });
            }
        }
        Ok(Self {
            t,
            x,
            label: label.into(),
        })
    }

    /// Invariant interval c²Δt² − Δx² to another event.
    pub fn interval_to(&self, other: &Self) -> f64 {
        let dt = other.t - self.t;
        let dx = other.x - self.x;
        C * C * dt * dt - dx * dx
    }
}

/// An inertial frame moving at beta = v/c along the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct InertialFrame {
    pub beta: f64,
    pub name: String,
}

impl InertialFrame {
    pub fn new(beta: f64, name: impl Into<String>) -> Result<Self> {
        if !beta.is_finite() || beta.abs() >= 1.0 {
            return Err(Error::OutOfRange {
                name: "beta",
                value: beta,
                min: -1.0,
                max: 1.0,
            });
        }
        Ok(Self {
            beta,
            name: name.into(),
        })
    }

    pub fn gamma(&self) -> f64 {
        1.0 / (1.0 - self.beta * self.beta).sqrt()
    }
}

/// Standard boost: t′ = γ(t − βx/c), x′ = γ(x − βct).
pub fn lorentz_transform(event: &SpacetimeEvent, frame: &InertialFrame) -> SpacetimeEvent {
    let gamma = frame.gamma();
    let beta = frame.beta;
    SpacetimeEvent {
        t: gamma * (event.t - beta * event.x / C),
        x: gamma * (event.x - beta * C * event.t),
        label: event.label.clone(),
    }
}

/// Candidate preferred frame: speed and the projection of its velocity
/// onto the Alice–Bob axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSpec {
    pub speed: f64,
    pub cos_theta: f64,
}

impl FrameSpec {
    pub fn new(speed: f64, cos_theta: f64) -> Result<Self> {
        check_range("speed", speed, 0.0, C)?;
        if speed >= C {
            return Err(Error::OutOfRange {
                name: "speed",
                value: speed,
                min: 0.0,
                max: C,
            });
        }
        check_range("cos_theta", cos_theta, -1.0, 1.0)?;
        Ok(Self { speed, cos_theta })
    }
}

/// Timing alignment budget of a two-party experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentBudget {
    /// Timing alignment uncertainty, seconds.
    pub delta_t: f64,
    /// Straight-line Alice–Bob distance, meters.
    pub separation: f64,
    /// Total fiber length, meters.
    pub fiber_length: f64,
}

impl AlignmentBudget {
    pub fn new(delta_t: f64, separation: f64, fiber_length: f64) -> Result<Self> {
        check_range("delta_t", delta_t, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("separation", separation, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("fiber_length", fiber_length, 0.0, f64::INFINITY)?;
        Ok(Self {
            delta_t,
            separation,
            fiber_length,
        })
    }
}

/// Effective simultaneity uncertainty seen from a moving frame:
/// δt′ = γ·(δt + v·cosθ·L/c²). The relativity-of-simultaneity term
/// v·cosθ·L/c² dominates for fast frames nearly aligned with the axis.
pub fn frame_delta_t(budget: &AlignmentBudget, frame: &FrameSpec) -> f64 {
    let beta = frame.speed / C;
    let gamma = 1.0 / (1.0 - beta * beta).sqrt();
    gamma * (budget.delta_t + frame.speed * frame.cos_theta * budget.separation / (C * C))
}

/// Lower bound on the speed of the hypothetical nonlocal influence, in
/// multiples of c: events separated by L and simultaneous within δt′
/// require any causal link to travel at v ≥ L/δt′.
pub fn spooky_speed_bound(separation: f64, delta_t_in_frame: f64) -> Result<f64> {
    check_range("separation", separation, f64::MIN_POSITIVE, f64::INFINITY)?;
    if !delta_t_in_frame.is_finite() || delta_t_in_frame <= 0.0 {
        return Err(Error::OutOfRange {
            name: "delta_t_in_frame",
            value: delta_t_in_frame,
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        });
    }
    Ok(separation / (delta_t_in_frame * C))
}

/// Relative timing precision of the alignment: δt over the fiber transit
/// time n·L_fiber/c.
pub fn alignment_precision(budget: &AlignmentBudget, group_index: f64) -> f64 {
    budget.delta_t / (group_index * budget.fiber_length / C)
}

/// Finds the axis projection cos_theta at which a frame of the given
/// speed degrades the bound to `target_bound_c` (in multiples of c).
/// Brute-force scan refined by bisection; returns None if no projection
/// in [0, 1] reaches the target.
pub fn invert_cos_theta_for_bound(
    budget: &AlignmentBudget,
    frame_speed: f64,
    target_bound_c: f64,
) -> Option<f64> {
    let bound_at = |cos_theta: f64| {
        let dt = frame_delta_t(
            budget,
            &FrameSpec {
                speed: frame_speed,
                cos_theta,
            },
        );
        budget.separation / (dt * C)
    };
    // bound_at is monotone decreasing in cos_theta on [0, 1].
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if bound_at(lo) < target_bound_c || bound_at(hi) > target_bound_c {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound_at(mid) > target_bound_c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Minimum relative analyzer speed for a before-before configuration:
/// v > c²·δt/ℓ.
pub fn before_before_threshold(delta_t: f64, separation: f64) -> f64 {
    C * C * delta_t / separation
}

/// Whether analyzers in relative motion at v_rel (projected onto the
/// axis by cos_phi) realize a before-before configuration: each
/// measurement precedes the other in its own analyzer's rest frame.
pub fn before_before_satisfied(
    v_rel: f64,
    cos_phi: f64,
    delta_t: f64,
    separation: f64,
) -> Result<bool> {
    check_range("v_rel", v_rel, 0.0, C)?;
    if v_rel >= C {
        return Err(Error::OutOfRange {
            name: "v_rel",
            value: v_rel,
            min: 0.0,
            max: C,
        });
    }
    check_range("cos_phi", cos_phi, -1.0, 1.0)?;
    let satisfied = v_rel * cos_phi.abs() > before_before_threshold(delta_t, separation);
    if satisfied && delta_t > 0.0 {
        debug_assert!(ordering_is_before_before(v_rel, cos_phi, delta_t, separation));
    }
    Ok(satisfied)
}

/// Explicit two-frame construction behind [`before_before_satisfied`]:
/// Alice measures at (0, 0) with her analyzer at rest in the lab; Bob
/// measures at (δt, L) with his analyzer moving at v·cosφ along the
/// axis. True iff Alice is first in the lab frame and Bob is first in
/// his analyzer's frame.
pub fn ordering_is_before_before(
    v_rel: f64,
    cos_phi: f64,
    delta_t: f64,
    separation: f64,
) -> bool {
    let alice = SpacetimeEvent {
        t: 0.0,
        x: 0.0,
        label: "alice".into(),
    };
    let bob = SpacetimeEvent {
        t: delta_t,
        x: separation,
        label: "bob".into(),
    };
    let beta = v_rel * cos_phi.abs() / C;
    if beta >= 1.0 {
        return false;
    }
    let bob_frame = InertialFrame {
        beta,
        name: "bob-analyzer".into(),
    };
    let alice_first_in_lab = alice.t < bob.t;
    let bob_prime = lorentz_transform(&bob, &bob_frame);
    let alice_prime = lorentz_transform(&alice, &bob_frame);
    let bob_first_in_bob_frame = bob_prime.t < alice_prime.t;
    alice_first_in_lab && bob_first_in_bob_frame
}

/// Angular interval of one wheel revolution, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleInterval {
    pub start: f64,
    pub end: f64,
}

/// Before-before windows of an absorber on a rotating wheel whose
/// tangential velocity has constant magnitude but varying orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorberWindows {
    pub intervals: Vec<AngleInterval>,
    /// Fraction of the revolution during which the condition holds:
    /// 2·arccos(v_threshold/v)/π.
    pub duty_fraction: f64,
}

/// Sweeps the wheel phase φ ∈ [0, 2π) at the given resolution and
/// collects the intervals where |cos φ|·v exceeds the before-before
/// threshold. The duty fraction is computed in closed form.
pub fn rotating_absorber_windows(
    tangential_speed: f64,
    delta_t: f64,
    separation: f64,
    angular_resolution: f64,
) -> Result<AbsorberWindows> {
    check_range("tangential_speed", tangential_speed, 0.0, f64::INFINITY)?;
    check_range(
        "angular_resolution",
        angular_resolution,
        f64::MIN_POSITIVE,
        PI,
    )?;
    let threshold = before_before_threshold(delta_t, separation);
    if tangential_speed <= threshold {
        return Ok(AbsorberWindows {
            intervals: Vec::new(),
            duty_fraction: 0.0,
        });
    }
    let ratio = threshold / tangential_speed;
    let duty_fraction = 2.0 * ratio.acos() / PI;

    let steps = (2.0 * PI / angular_resolution).ceil() as usize;
    let mut intervals = Vec::new();
    let mut open: Option<f64> = None;
    for i in 0..=steps {
        let phi = (i as f64 * 2.0 * PI / steps as f64).min(2.0 * PI);
        let inside = phi < 2.0 * PI && tangential_speed * phi.cos().abs() > threshold;
        match (inside, open) {
            (true, None) => open = Some(phi),
            (false, Some(start)) => {
                intervals.push(AngleInterval { start, end: phi });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        intervals.push(AngleInterval {
            start,
            end: 2.0 * PI,
        });
    }
    // A window straddling φ = 0 shows up split at both ends of the
    // sweep; merge it (the merged start goes negative).
    if intervals.len() >= 2 {
        let first = intervals[0];
        let last = *intervals.last().unwrap();
        if first.start == 0.0 && last.end == 2.0 * PI {
            intervals.pop();
            intervals[0] = AngleInterval {
                start: last.start - 2.0 * PI,
                end: first.end,
            };
        }
    }
    Ok(AbsorberWindows {
        intervals,
        duty_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn event(t: f64, x: f64) -> SpacetimeEvent {
        SpacetimeEvent::new(t, x, "e").unwrap()
    }

    #[test]
    fn boost_identity_and_inverse() {
        let e = event(1.0e-6, 4.0e3);
        let rest = InertialFrame::new(0.0, "lab").unwrap();
        let same = lorentz_transform(&e, &rest);
        assert_abs_diff_eq!(same.t, e.t, epsilon = 1e-18);
        assert_abs_diff_eq!(same.x, e.x, epsilon = 1e-12);

        let f = InertialFrame::new(0.5, "f").unwrap();
        let back = InertialFrame::new(-0.5, "f-inv").unwrap();
        let round = lorentz_transform(&lorentz_transform(&e, &f), &back);
        assert_abs_diff_eq!(round.t, e.t, epsilon = 1e-12 * e.t.abs());
        assert_abs_diff_eq!(round.x, e.x, epsilon = 1e-12 * e.x.abs());
    }

    #[test]
    fn boost_of_spacelike_event() {
        let e = event(0.0, 1.0e4);
        let f = InertialFrame::new(0.5, "f").unwrap();
        let out = lorentz_transform(&e, &f);
        let gamma = 1.0 / (1.0 - 0.25f64).sqrt();
        assert_abs_diff_eq!(out.t, -gamma * 0.5 * 1.0e4 / C, epsilon = 1e-12);
        // -1.9245e-5 comes from rounding c to 3e8; exact c gives -1.92583e-5.
        assert_abs_diff_eq!(out.t, -1.9245e-5, epsilon = 2e-8);
    }

    #[test]
    fn interval_preserved_under_random_boosts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let e1 = event(rng.random_range(-1e-3..1e-3), rng.random_range(-1e5..1e5));
            let e2 = event(rng.random_range(-1e-3..1e-3), rng.random_range(-1e5..1e5));
            let beta = rng.random_range(-0.99..0.99);
            let f = InertialFrame::new(beta, "f").unwrap();
            let i0 = e1.interval_to(&e2);
            let i1 = lorentz_transform(&e1, &f).interval_to(&lorentz_transform(&e2, &f));
            let scale = i0.abs().max(1.0);
            assert!((i0 - i1).abs() / scale < 1e-12, "interval drift {}", (i0 - i1).abs());
        }
    }

    #[test]
    fn timelike_order_invariant_spacelike_order_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let e1 = event(rng.random_range(-1e-4..1e-4), rng.random_range(-1e4..1e4));
            let e2 = event(rng.random_range(-1e-4..1e-4), rng.random_range(-1e4..1e4));
            let dt = e2.t - e1.t;
            let dx = e2.x - e1.x;
            let timelike = C * dt.abs() > dx.abs();
            let mut flipped = false;
            for i in -99..=99 {
                let f = InertialFrame::new(i as f64 / 100.0, "f").unwrap();
                let o1 = lorentz_transform(&e1, &f);
                let o2 = lorentz_transform(&e2, &f);
                if (o2.t - o1.t).signum() != dt.signum() {
                    flipped = true;
                }
            }
            if timelike {
                assert!(!flipped, "timelike ordering flipped");
            } else if 0.99 * dx.abs() > C * dt.abs() && dt != 0.0 {
                // a flip needs |beta| > c|dt|/|dx|, which the +-0.99 scan covers
                assert!(flipped, "spacelike ordering never flipped (dt={dt}, dx={dx})");
            }
        }
    }

    #[test]
    fn frame_delta_t_limits() {
        let budget = AlignmentBudget::new(5e-12, 1e4, 1.9e4).unwrap();
        let lab = FrameSpec::new(0.0, 0.0).unwrap();
        assert_abs_diff_eq!(frame_delta_t(&budget, &lab), 5e-12, epsilon = 1e-24);

        let aligned = FrameSpec::new(3.69e5, 1.0).unwrap();
        let dt = frame_delta_t(&budget, &aligned);
        assert_abs_diff_eq!(dt, 4.10e-8, epsilon = 2e-10);

        let transverse = FrameSpec::new(3.69e5, 0.0).unwrap();
        let dt = frame_delta_t(&budget, &transverse);
        assert!((dt - 5e-12).abs() / 5e-12 < 1e-6);
    }

    #[test]
    fn lab_frame_spooky_bound() {
        let bound = spooky_speed_bound(1e4, 5e-12).unwrap();
        assert_abs_diff_eq!(bound, 6.67e6, epsilon = 5e4);
        let doubled = spooky_speed_bound(2e4, 5e-12).unwrap();
        assert_abs_diff_eq!(doubled, 2.0 * bound, epsilon = 1e-6);
        assert!(spooky_speed_bound(1e4, 0.0).is_err());
    }

    #[test]
    fn cmb_frame_bound_via_inversion() {
        let budget = AlignmentBudget::new(5e-12, 1e4, 1.9e4).unwrap();
        let cos_theta = invert_cos_theta_for_bound(&budget, 3.69e5, 1.5e4).unwrap();
        assert_abs_diff_eq!(cos_theta, 0.054, epsilon = 0.002);
        let dt = frame_delta_t(&budget, &FrameSpec::new(3.69e5, cos_theta).unwrap());
        let bound = spooky_speed_bound(1e4, dt).unwrap();
        assert!((bound - 1.5e4).abs() / 1.5e4 < 1e-6);

        // Brute-force scan agrees with the bisection result.
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=100_000 {
            let ct = i as f64 / 100_000.0;
            let dt = frame_delta_t(&budget, &FrameSpec::new(3.69e5, ct).unwrap());
            let b = spooky_speed_bound(1e4, dt).unwrap();
            let err = (b - 1.5e4).abs();
            if err < best.0 {
                best = (err, ct);
            }
        }
        assert_abs_diff_eq!(best.1, cos_theta, epsilon = 1e-4);
    }

    #[test]
    fn alignment_precision_order_of_magnitude() {
        let budget = AlignmentBudget::new(5e-12, 1e4, 2e4).unwrap();
        let p = alignment_precision(&budget, 1.47);
        assert_abs_diff_eq!(p, 5.1e-8, epsilon = 1e-9);
        let half = AlignmentBudget::new(5e-12, 1e4, 1e4).unwrap();
        assert_abs_diff_eq!(alignment_precision(&half, 1.47), 2.0 * p, epsilon = 1e-15);
    }

    #[test]
    fn before_before_threshold_values() {
        let t = before_before_threshold(5e-12, 1e4);
        assert_abs_diff_eq!(t, 44.94, epsilon = 0.01);
        assert_abs_diff_eq!(before_before_threshold(0.0, 1e4), 0.0, epsilon = 1e-18);
        assert_abs_diff_eq!(before_before_threshold(5e-12, 2e4), 22.47, epsilon = 0.005);
        // Round trip back to delta_t.
        assert_abs_diff_eq!(t * 1e4 / (C * C), 5e-12, epsilon = 1e-26);
    }

    #[test]
    fn before_before_cases() {
        assert!(before_before_satisfied(100.0, 1.0, 5e-12, 1e4).unwrap());
        assert!(!before_before_satisfied(100.0, 0.0, 5e-12, 1e4).unwrap());
        assert!(!before_before_satisfied(44.0, 1.0, 5e-12, 1e4).unwrap());
    }

    #[test]
    fn flag_agrees_with_frame_construction() {
        for i in 1..=100 {
            for j in 1..=100 {
                let v = i as f64;
                let dt = j as f64 * 1e-13;
                let flag = before_before_satisfied(v, 1.0, dt, 1e4).unwrap();
                assert_eq!(
                    flag,
                    ordering_is_before_before(v, 1.0, dt, 1e4),
                    "disagreement at v={v}, dt={dt}"
                );
            }
        }
    }

    #[test]
    fn absorber_windows_duty_fraction() {
        let w = rotating_absorber_windows(100.0, 5e-12, 1e4, 1e-4).unwrap();
        let threshold = before_before_threshold(5e-12, 1e4);
        let expected = 2.0 * (threshold / 100.0).acos() / PI;
        assert_abs_diff_eq!(w.duty_fraction, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(w.duty_fraction, 0.703, epsilon = 0.002);

        // Numeric sweep agrees with the closed form.
        let swept: f64 = w
            .intervals
            .iter()
            .map(|iv| iv.end - iv.start)
            .sum::<f64>()
            / (2.0 * PI);
        assert_abs_diff_eq!(swept, expected, epsilon = 1e-3);

        let slow = rotating_absorber_windows(10.0, 5e-12, 1e4, 1e-3).unwrap();
        assert!(slow.intervals.is_empty());
        assert_abs_diff_eq!(slow.duty_fraction, 0.0, epsilon = 1e-15);

        let fast = rotating_absorber_windows(1e9, 5e-12, 1e4, 1e-3).unwrap();
        assert!(fast.duty_fraction > 0.9999);
    }
}
