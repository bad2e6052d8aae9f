//! Stochastic models of photon sources, fiber channels, and gated
//! single-photon counters. These feed the Monte-Carlo QKD engine.
//!
//! Time is discretized into source-synchronous gates. All sampling goes
//! through a caller-provided RNG so event streams are reproducible.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_range, Result};
use crate::SPEED_OF_LIGHT;

/// Attenuated laser source with Poissonian photon number, mean mu per pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakCoherentSource {
    pub mu: f64,
}

impl WeakCoherentSource {
    pub fn new(mu: f64) -> Result<Self> {
        check_range("mu", mu, 0.0, f64::INFINITY)?;
        Ok(Self { mu })
    }

    /// Poisson pmf e^(−μ)·μⁿ/n!.
    pub fn photon_number_pmf(&self, n: u32) -> f64 {
        if self.mu == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        // ln pmf avoids overflow in n! for large n.
        let nf = f64::from(n);
        let ln_pmf = -self.mu + nf * self.mu.ln() - ln_factorial(n);
        ln_pmf.exp()
    }

    /// P(n ≥ 2) = 1 − e^(−μ)(1 + μ): the fraction of pulses that expose
    /// more than one photon to an eavesdropper.
    pub fn multiphoton_probability(&self) -> f64 {
        -(-self.mu).exp_m1() - self.mu * (-self.mu).exp()
    }

    /// Samples a photon number for one pulse (inverse-cdf walk; μ is small).
    pub fn sample_photon_number(&self, rng: &mut impl Rng) -> u32 {
        let mut u: f64 = rng.random();
        let mut n = 0u32;
        let mut p = (-self.mu).exp();
        loop {
            if u < p || n > 200 {
                return n;
            }
            u -= p;
            n += 1;
            p *= self.mu / f64::from(n);
        }
    }
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| f64::from(k).ln()).sum()
}

/// Photon-pair source where detecting one photon announces its twin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeraldedPairSource {
    pub pair_prob_per_gate: f64,
    pub herald_efficiency: f64,
}

impl HeraldedPairSource {
    pub fn new(pair_prob_per_gate: f64, herald_efficiency: f64) -> Result<Self> {
        check_range("pair_prob_per_gate", pair_prob_per_gate, 0.0, 1.0)?;
        check_range("herald_efficiency", herald_efficiency, 0.0, 1.0)?;
        Ok(Self {
            pair_prob_per_gate,
            herald_efficiency,
        })
    }

    /// One gate: (herald fired, signal photon present).
    /// Conditioned on the herald, the signal photon is present with
    /// probability herald_efficiency.
    pub fn emit(&self, rng: &mut impl Rng) -> (bool, bool) {
        let herald = rng.random_bool(self.pair_prob_per_gate);
        let signal = herald && rng.random_bool(self.herald_efficiency);
        (herald, signal)
    }
}

/// Pair source placed between the two parties; both photons travel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CentralPairSource {
    pub pair_prob_per_gate: f64,
    pub visibility: f64,
}

impl CentralPairSource {
    pub fn new(pair_prob_per_gate: f64, visibility: f64) -> Result<Self> {
        check_range("pair_prob_per_gate", pair_prob_per_gate, 0.0, 1.0)?;
        check_range("visibility", visibility, 0.0, 1.0)?;
        Ok(Self {
            pair_prob_per_gate,
            visibility,
        })
    }
}

/// Telecom fiber span: dB attenuation law plus group delay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberChannel {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    pub group_index: f64,
}

impl FiberChannel {
    pub fn new(length_km: f64, attenuation_db_per_km: f64, group_index: f64) -> Result<Self> {
        check_range("length_km", length_km, 0.0, f64::INFINITY)?;
        check_range("attenuation_db_per_km", attenuation_db_per_km, 0.0, f64::INFINITY)?;
        check_range("group_index", group_index, 1.0, f64::INFINITY)?;
        Ok(Self {
            length_km,
            attenuation_db_per_km,
            group_index,
        })
    }

    /// Lossless zero-length placeholder channel.
    pub fn ideal() -> Self {
        Self {
            length_km: 0.0,
            attenuation_db_per_km: 0.0,
            group_index: 1.47,
        }
    }

    /// Survival probability T = 10^(−α·L/10).
    pub fn transmission(&self) -> f64 {
        10f64.powf(-self.attenuation_db_per_km * self.length_km / 10.0)
    }

    /// Group delay n·L/c in seconds.
    pub fn propagation_delay(&self) -> f64 {
        self.group_index * self.length_km * 1000.0 / SPEED_OF_LIGHT
    }
}

impl Default for FiberChannel {
    /// Standard single-mode fiber at 1550 nm.
    fn default() -> Self {
        Self {
            length_km: 10.0,
            attenuation_db_per_km: 0.25,
            group_index: 1.47,
        }
    }
}

/// Gated avalanche photon counter with dark counts, dead time,
/// afterpulsing, and Gaussian timing jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    pub efficiency: f64,
    pub dark_count_prob_per_gate: f64,
    pub dead_time_ns: f64,
    pub afterpulse_prob: f64,
    pub jitter_sigma_ps: f64,
    /// Gate spacing, needed to express the dead time in gates.
    pub gate_period_ns: f64,
    /// Per-gate geometric decay of the afterpulse probability.
    pub afterpulse_decay: f64,
}

impl DetectorModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        efficiency: f64,
        dark_count_prob_per_gate: f64,
        dead_time_ns: f64,
        afterpulse_prob: f64,
        jitter_sigma_ps: f64,
        gate_period_ns: f64,
        afterpulse_decay: f64,
    ) -> Result<Self> {
        check_range("efficiency", efficiency, 0.0, 1.0)?;
        check_range("dark_count_prob_per_gate", dark_count_prob_per_gate, 0.0, 1.0)?;
        check_range("dead_time_ns", dead_time_ns, 0.0, f64::INFINITY)?;
        check_range("afterpulse_prob", afterpulse_prob, 0.0, 1.0)?;
        check_range("jitter_sigma_ps", jitter_sigma_ps, 0.0, f64::INFINITY)?;
        check_range("gate_period_ns", gate_period_ns, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("afterpulse_decay", afterpulse_decay, 0.0, 1.0)?;
        Ok(Self {
            efficiency,
            dark_count_prob_per_gate,
            dead_time_ns,
            afterpulse_prob,
            jitter_sigma_ps,
            gate_period_ns,
            afterpulse_decay,
        })
    }

    /// Noiseless unit-efficiency detector.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_prob_per_gate: 0.0,
            dead_time_ns: 0.0,
            afterpulse_prob: 0.0,
            jitter_sigma_ps: 0.0,
            gate_period_ns: 100.0,
            afterpulse_decay: 0.5,
        }
    }
}

impl Default for DetectorModel {
    /// Representative gated InGaAs APD figures (the 1999 experiments
    /// published none).
    fn default() -> Self {
        Self {
            efficiency: 0.1,
            dark_count_prob_per_gate: 1e-5,
            dead_time_ns: 1000.0,
            afterpulse_prob: 0.01,
            jitter_sigma_ps: 100.0,
            gate_period_ns: 100.0,
            afterpulse_decay: 0.5,
        }
    }
}

/// Mutable per-detector bookkeeping across a simulation session.
#[derive(Debug, Clone, Copy, Default)]
pub struct DetectorState {
    last_click_gate: Option<u64>,
    afterpulse_level: f64,
}

impl DetectorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last_click_gate(&self) -> Option<u64> {
        self.last_click_gate
    }
}

/// Outcome of one detector gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickOutcome {
    pub clicked: bool,
    /// Gaussian jitter relative to the gate center, ps. Zero if no click.
    pub time_offset_ps: f64,
}

impl DetectorModel {
    /// Advances the detector by one gate. Photon, dark, and afterpulse
    /// click causes are OR-combined independently; no click is possible
    /// within the dead time.
    pub fn detect(
        &self,
        photon_present: bool,
        gate_index: u64,
        state: &mut DetectorState,
        rng: &mut impl Rng,
    ) -> ClickOutcome {
        // Decay the afterpulse level once per elapsed gate since the click.
        if let Some(last) = state.last_click_gate {
            debug_assert!(gate_index > last, "gates must advance monotonically");
            let elapsed_ns = (gate_index - last) as f64 * self.gate_period_ns;
            if elapsed_ns < self.dead_time_ns {
                return ClickOutcome {
                    clicked: false,
                    time_offset_ps: 0.0,
                };
            }
        }

        let photon_click = photon_present && rng.random_bool(self.efficiency);
        let dark_click = rng.random_bool(self.dark_count_prob_per_gate);
        let afterpulse_click = state.afterpulse_level > 0.0
            && rng.random_bool(state.afterpulse_level.clamp(0.0, 1.0));

        let clicked = photon_click || dark_click || afterpulse_click;
        state.afterpulse_level *= self.afterpulse_decay;
        if clicked {
            state.last_click_gate = Some(gate_index);
            state.afterpulse_level = self.afterpulse_prob;
        }

        let time_offset_ps = if clicked && self.jitter_sigma_ps > 0.0 {
            Normal::new(0.0, self.jitter_sigma_ps).unwrap().sample(rng)
        } else {
            0.0
        };

        ClickOutcome {
            clicked,
            time_offset_ps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn poisson_pmf_basics() {
        let dark = WeakCoherentSource::new(0.0).unwrap();
        assert_abs_diff_eq!(dark.photon_number_pmf(0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dark.photon_number_pmf(3), 0.0, epsilon = 1e-15);

        let s = WeakCoherentSource::new(0.1).unwrap();
        assert_abs_diff_eq!(s.photon_number_pmf(1), 0.1 * (-0.1f64).exp(), epsilon = 1e-12);
        let total: f64 = (0..=50).map(|n| s.photon_number_pmf(n)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn multiphoton_closed_form_matches_series() {
        assert_abs_diff_eq!(
            WeakCoherentSource::new(0.0).unwrap().multiphoton_probability(),
            0.0,
            epsilon = 1e-15
        );
        let s = WeakCoherentSource::new(0.1).unwrap();
        let series: f64 = (2..=80).map(|n| s.photon_number_pmf(n)).sum();
        assert_abs_diff_eq!(s.multiphoton_probability(), series, epsilon = 1e-12);
        assert_abs_diff_eq!(s.multiphoton_probability(), 4.6788e-3, epsilon = 1e-6);

        let mut prev = 0.0;
        for i in 1..=100 {
            let mu = i as f64 * 0.01;
            let p = WeakCoherentSource::new(mu).unwrap().multiphoton_probability();
            assert!(p > prev, "not monotone at mu={mu}");
            prev = p;
        }
    }

    #[test]
    fn sampled_photon_number_matches_pmf() {
        let s = WeakCoherentSource::new(0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n_trials = 200_000;
        let ones = (0..n_trials)
            .filter(|_| s.sample_photon_number(&mut rng) == 1)
            .count();
        let p = s.photon_number_pmf(1);
        let sigma = (p * (1.0 - p) / n_trials as f64).sqrt();
        assert!((ones as f64 / n_trials as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn transmission_db_law() {
        let zero = FiberChannel::new(0.0, 0.25, 1.47).unwrap();
        assert_abs_diff_eq!(zero.transmission(), 1.0, epsilon = 1e-15);
        let twenty = FiberChannel::new(20.0, 0.25, 1.47).unwrap();
        assert_abs_diff_eq!(twenty.transmission(), 10f64.powf(-0.5), epsilon = 1e-12);
        let ten = FiberChannel::new(10.0, 0.25, 1.47).unwrap();
        assert_abs_diff_eq!(
            ten.transmission() * ten.transmission(),
            twenty.transmission(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn propagation_delay_linear() {
        let zero = FiberChannel::new(0.0, 0.25, 1.47).unwrap();
        assert_abs_diff_eq!(zero.propagation_delay(), 0.0, epsilon = 1e-18);
        let twenty = FiberChannel::new(20.0, 0.25, 1.47).unwrap();
        assert_abs_diff_eq!(twenty.propagation_delay(), 9.80e-5, epsilon = 2e-7);
        let ten = FiberChannel::new(10.0, 0.25, 1.47).unwrap();
        assert_abs_diff_eq!(
            2.0 * ten.propagation_delay(),
            twenty.propagation_delay(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn deterministic_detector_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut state = DetectorState::new();
        let perfect = DetectorModel::ideal();
        assert!(perfect.detect(true, 0, &mut state, &mut rng).clicked);

        let blind = DetectorModel {
            efficiency: 0.0,
            ..DetectorModel::ideal()
        };
        let mut state = DetectorState::new();
        assert!(!blind.detect(true, 0, &mut state, &mut rng).clicked);
    }

    #[test]
    fn dark_click_rate_matches_binomial() {
        let d = DetectorModel {
            efficiency: 0.1,
            dark_count_prob_per_gate: 1e-5,
            dead_time_ns: 0.0,
            afterpulse_prob: 0.0,
            jitter_sigma_ps: 0.0,
            gate_period_ns: 100.0,
            afterpulse_decay: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut state = DetectorState::new();
        let n = 1_000_000u64;
        let mut clicks = 0u64;
        for g in 0..n {
            if d.detect(false, g, &mut state, &mut rng).clicked {
                clicks += 1;
            }
        }
        let p = 1e-5;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((clicks as f64 / n as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn dead_time_blocks_consecutive_clicks() {
        let d = DetectorModel {
            efficiency: 1.0,
            dark_count_prob_per_gate: 0.0,
            dead_time_ns: 350.0,
            afterpulse_prob: 0.0,
            jitter_sigma_ps: 0.0,
            gate_period_ns: 100.0,
            afterpulse_decay: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut state = DetectorState::new();
        let mut click_gates = Vec::new();
        for g in 0..50u64 {
            if d.detect(true, g, &mut state, &mut rng).clicked {
                click_gates.push(g);
            }
        }
        for w in click_gates.windows(2) {
            let separation_ns = (w[1] - w[0]) as f64 * d.gate_period_ns;
            assert!(separation_ns >= d.dead_time_ns);
        }
        // 350 ns dead time on a 100 ns gate blocks 3 gates after each click.
        assert_eq!(click_gates, vec![0, 4, 8, 12, 16, 20, 24, 28, 32, 36, 40, 44, 48]);
    }

    #[test]
    fn heralded_conditional_probability() {
        let s = HeraldedPairSource::new(0.2, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut heralds = 0u64;
        let mut signals = 0u64;
        for _ in 0..200_000 {
            let (h, sig) = s.emit(&mut rng);
            if h {
                heralds += 1;
                if sig {
                    signals += 1;
                }
            }
            assert!(h || !sig);
        }
        let p = signals as f64 / heralds as f64;
        let sigma = (0.7 * 0.3 / heralds as f64).sqrt();
        assert!((p - 0.7).abs() < 3.0 * sigma);
    }

    #[test]
    fn identical_seeds_identical_streams() {
        let d = DetectorModel::default();
        let run = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut state = DetectorState::new();
            (0..10_000u64)
                .map(|g| d.detect(g % 3 == 0, g, &mut state, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(77), run(77));
    }
}
