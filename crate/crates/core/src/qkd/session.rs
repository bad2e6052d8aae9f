//! Monte-Carlo QKD sessions over the photonics layer, plus sifting,
//! QBER estimation, the full reconcile-and-amplify pipeline, and the
//! source-scheme equivalence report.
//!
//! One ChaCha stream drives a whole session; the per-gate draw order is
//! fixed, so a seed pins the entire event stream.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_range, Error, Result};
use crate::photonics::{
    CentralPairSource, DetectorModel, DetectorState, FiberChannel, HeraldedPairSource,
    WeakCoherentSource,
};
use crate::qkd::{
    cascade_correct, derive_seed, privacy_amplify, toeplitz_hash, SecurityVerdict,
};
use crate::quantum::{CorrelationModel, MeasurementSetting};

/// Two-basis protocol: KEY rounds make key material, CHECK rounds probe
/// the correlations. KEY maps to analyzer angle 0, CHECK to π/4.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisChoice {
    Key,
    Check,
}

impl BasisChoice {
    pub fn angle(self) -> MeasurementSetting {
        let radians = match self {
            Self::Key => 0.0,
            Self::Check => std::f64::consts::FRAC_PI_4,
        };
        MeasurementSetting::from_radians(radians).unwrap()
    }

    pub fn symbol(self) -> char {
        match self {
            Self::Key => 'K',
            Self::Check => 'C',
        }
    }
}

/// One gate of a session. Bits are present only when the corresponding
/// side registered (detector click, or preparation record for
/// prepare-and-measure schemes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawRecord {
    pub gate_index: u64,
    pub alice_basis: BasisChoice,
    pub bob_basis: BasisChoice,
    pub alice_bit: Option<bool>,
    pub bob_bit: Option<bool>,
    /// Pulse carried more than one photon (eavesdropping exposure).
    pub multiphoton: bool,
}

/// The source ladder: faint laser pulses, a triggered pair source, a
/// pair source measured locally to prepare at a distance, and the fully
/// symmetric source between the parties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceScheme {
    WeakPulse {
        source: WeakCoherentSource,
        visibility: f64,
    },
    Heralded {
        source: HeraldedPairSource,
        visibility: f64,
    },
    PrepareAtDistance {
        pair_prob_per_gate: f64,
        visibility: f64,
    },
    Central(CentralPairSource),
}

impl SourceScheme {
    pub fn visibility(&self) -> f64 {
        match self {
            Self::WeakPulse { visibility, .. }
            | Self::Heralded { visibility, .. }
            | Self::PrepareAtDistance { visibility, .. } => *visibility,
            Self::Central(s) => s.visibility,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::WeakPulse { .. } => "weak_pulse",
            Self::Heralded { .. } => "heralded",
            Self::PrepareAtDistance { .. } => "prepare_at_distance",
            Self::Central(_) => "symmetric_central",
        }
    }
}

/// Full physical description of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionParams {
    pub source: SourceScheme,
    pub channel_alice: FiberChannel,
    pub channel_bob: FiberChannel,
    pub detector_alice: DetectorModel,
    pub detector_bob: DetectorModel,
    pub n_gates: u64,
}

/// Samples a joint outcome (alice, bob) from the correlation model;
/// bit false encodes outcome +1.
fn sample_pair_outcome(
    model: &CorrelationModel,
    a: MeasurementSetting,
    b: MeasurementSetting,
    rng: &mut impl Rng,
) -> (bool, bool) {
    let p = model.joint_probabilities(a, b);
    let u: f64 = rng.random();
    if u < p.pp {
        (false, false)
    } else if u < p.pp + p.pm {
        (false, true)
    } else if u < p.pp + p.pm + p.mp {
        (true, false)
    } else {
        (true, true)
    }
}

/// Runs one session and returns the per-gate event stream.
pub fn run_session(params: &SessionParams, seed: u64) -> Result<Vec<RawRecord>> {
    if params.n_gates == 0 {
        return Err(Error::OutOfRange {
            name: "n_gates",
            value: 0.0,
            min: 1.0,
            max: f64::INFINITY,
        });
    }
    let model = CorrelationModel::new(params.source.visibility())?;
    let t_alice = params.channel_alice.transmission();
    let t_bob = params.channel_bob.transmission();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state_alice = DetectorState::new();
    let mut state_bob = DetectorState::new();
    let mut records = Vec::with_capacity(params.n_gates as usize);

    for gate_index in 0..params.n_gates {
        let alice_basis = if rng.random_bool(0.5) {
            BasisChoice::Key
        } else {
            BasisChoice::Check
        };
        let bob_basis = if rng.random_bool(0.5) {
            BasisChoice::Key
        } else {
            BasisChoice::Check
        };
        let a_angle = alice_basis.angle();
        let b_angle = bob_basis.angle();

        let mut multiphoton = false;
        let (alice_bit, bob_photon, bob_outcome) = match &params.source {
            SourceScheme::WeakPulse { source, .. } => {
                let n = source.sample_photon_number(&mut rng);
                multiphoton = n >= 2;
                let (x, y) = sample_pair_outcome(&model, a_angle, b_angle, &mut rng);
                // Each photon of the pulse transits the fiber independently.
                let arrived = (0..n).any(|_| rng.random_bool(t_bob));
                (Some(x), arrived, y)
            }
            SourceScheme::Heralded { source, .. } => {
                let (herald, signal) = source.emit(&mut rng);
                if herald {
                    let (x, y) = sample_pair_outcome(&model, a_angle, b_angle, &mut rng);
                    let arrived = signal && rng.random_bool(t_bob);
                    (Some(x), arrived, y)
                } else {
                    (None, false, false)
                }
            }
            SourceScheme::PrepareAtDistance {
                pair_prob_per_gate, ..
            }
            | SourceScheme::Central(CentralPairSource {
                pair_prob_per_gate, ..
            }) => {
                let pair = rng.random_bool(*pair_prob_per_gate);
                if pair {
                    let (x, y) = sample_pair_outcome(&model, a_angle, b_angle, &mut rng);
                    let photon_a = rng.random_bool(t_alice);
                    let photon_b = rng.random_bool(t_bob);
                    let click = params.detector_alice.detect(
                        photon_a,
                        gate_index,
                        &mut state_alice,
                        &mut rng,
                    );
                    let alice_bit = if click.clicked {
                        Some(if photon_a { x } else { rng.random_bool(0.5) })
                    } else {
                        None
                    };
                    (alice_bit, photon_b, y)
                } else {
                    let click = params.detector_alice.detect(
                        false,
                        gate_index,
                        &mut state_alice,
                        &mut rng,
                    );
                    let alice_bit = if click.clicked {
                        Some(rng.random_bool(0.5))
                    } else {
                        None
                    };
                    (alice_bit, false, false)
                }
            }
        };

        let bob_click =
            params
                .detector_bob
                .detect(bob_photon, gate_index, &mut state_bob, &mut rng);
        let bob_bit = if bob_click.clicked {
            Some(if bob_photon {
                bob_outcome
            } else {
                rng.random_bool(0.5)
            })
        } else {
            None
        };

        records.push(RawRecord {
            gate_index,
            alice_basis,
            bob_basis,
            alice_bit,
            bob_bit,
            multiphoton,
        });
    }
    Ok(records)
}

/// Key material after sifting, in gate order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SiftedKeys {
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
}

/// Keeps only gates where both sides registered a bit and the bases
/// match; order preserved.
pub fn sift(records: &[RawRecord]) -> SiftedKeys {
    let mut out = SiftedKeys::default();
    for r in records {
        if r.alice_basis == r.bob_basis {
            if let (Some(a), Some(b)) = (r.alice_bit, r.bob_bit) {
                out.alice.push(a);
                out.bob.push(b);
            }
        }
    }
    out
}

/// QBER estimate from a disclosed random subset.
#[derive(Debug, Clone, PartialEq)]
pub struct QberEstimate {
    pub estimate: f64,
    /// 1.96·√(p(1−p)/m), normal-approximation 95% half-width.
    pub half_width: f64,
    /// Positions sacrificed for the estimate; excluded from key material.
    pub disclosed_positions: Vec<usize>,
}

/// Compares a seeded random sample of the sifted keys. Returns None
/// when there is nothing to sample (inconclusive).
pub fn estimate_qber(
    alice: &[bool],
    bob: &[bool],
    sample_fraction: f64,
    seed: u64,
) -> Result<Option<QberEstimate>> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch {
            a: alice.len(),
            b: bob.len(),
        });
    }
    check_range("sample_fraction", sample_fraction, f64::MIN_POSITIVE, 1.0)?;
    let n = alice.len();
    let m = ((n as f64 * sample_fraction).ceil() as usize).min(n);
    if m == 0 {
        return Ok(None);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        positions.swap(i, j);
    }
    positions.truncate(m);
    positions.sort_unstable();

    let mismatches = positions.iter().filter(|&&i| alice[i] != bob[i]).count();
    let p = mismatches as f64 / m as f64;
    let half_width = 1.96 * (p * (1.0 - p) / m as f64).sqrt();
    Ok(Some(QberEstimate {
        estimate: p,
        half_width,
        disclosed_positions: positions,
    }))
}

/// Classical post-processing knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub sample_fraction: f64,
    pub epsilon_margin: usize,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            sample_fraction: 0.1,
            epsilon_margin: 10,
        }
    }
}

/// Outcome of a complete session: simulate, sift, estimate, reconcile,
/// amplify, judge.
#[derive(Debug, Clone, PartialEq)]
pub struct QkdSessionResult {
    pub sifted_length: usize,
    pub qber_estimate: f64,
    pub qber_half_width: f64,
    pub reconciled_key_a: Vec<bool>,
    pub reconciled_key_b: Vec<bool>,
    /// Parity bits disclosed during reconciliation (message-counter audit).
    pub leaked_bits: usize,
    /// Alice's final key.
    pub final_key: Vec<bool>,
    /// Bob's final key; equals Alice's when reconciliation succeeded.
    pub final_key_bob: Vec<bool>,
    pub verdict: SecurityVerdict,
}

/// Runs the whole pipeline. Sub-stages draw from seeds derived from the
/// session seed, so one seed pins every artifact.
pub fn run_full_session(
    params: &SessionParams,
    protocol: &ProtocolParams,
    seed: u64,
) -> Result<QkdSessionResult> {
    let records = run_session(params, seed)?;
    let sifted = sift(&records);
    let sifted_length = sifted.alice.len();

    let Some(est) = estimate_qber(
        &sifted.alice,
        &sifted.bob,
        protocol.sample_fraction,
        derive_seed(seed, 1),
    )?
    else {
        return Ok(QkdSessionResult {
            sifted_length,
            qber_estimate: f64::NAN,
            qber_half_width: f64::NAN,
            reconciled_key_a: Vec::new(),
            reconciled_key_b: Vec::new(),
            leaked_bits: 0,
            final_key: Vec::new(),
            final_key_bob: Vec::new(),
            verdict: SecurityVerdict::Inconclusive,
        });
    };

    // Disclosed sample positions never enter key material.
    let mut disclosed = est.disclosed_positions.iter().copied().peekable();
    let mut key_a = Vec::with_capacity(sifted_length);
    let mut key_b = Vec::with_capacity(sifted_length);
    for i in 0..sifted_length {
        if disclosed.peek() == Some(&i) {
            disclosed.next();
        } else {
            key_a.push(sifted.alice[i]);
            key_b.push(sifted.bob[i]);
        }
    }

    let qber = est.estimate.min(0.5);
    let reconciliation = cascade_correct(&key_a, &key_b, qber, derive_seed(seed, 2))?;
    let amp_seed = derive_seed(seed, 3);
    let amplified = privacy_amplify(
        &key_a,
        reconciliation.leaked_bits,
        qber,
        protocol.epsilon_margin,
        amp_seed,
    )?;
    let final_key_bob = if amplified.bits.is_empty() {
        Vec::new()
    } else {
        toeplitz_hash(&reconciliation.corrected, amplified.bits.len(), amp_seed)
    };

    Ok(QkdSessionResult {
        sifted_length,
        qber_estimate: est.estimate,
        qber_half_width: est.half_width,
        reconciled_key_a: key_a,
        reconciled_key_b: reconciliation.corrected,
        leaked_bits: reconciliation.leaked_bits,
        final_key: amplified.bits,
        final_key_bob,
        verdict: amplified.verdict,
    })
}

/// Shared physical parameter set for the scheme-equivalence comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeComparisonConfig {
    pub mu: f64,
    pub pair_prob_per_gate: f64,
    pub herald_efficiency: f64,
    pub visibility: f64,
    /// The full Alice–Bob span; the symmetric scheme splits it in half.
    pub channel: FiberChannel,
    pub detector: DetectorModel,
    pub n_gates: u64,
}

/// One row of the equivalence table.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeReportRow {
    pub scheme: &'static str,
    pub sifted_length: usize,
    pub sifted_rate: f64,
    pub qber: f64,
    /// Closed-form P(n ≥ 2) for the faint-pulse scheme, 0 otherwise.
    pub multiphoton_exposure: f64,
}

/// Runs the source ladder under one parameter set and reports the QBER
/// and sifted rate per scheme. At the correlation level all four agree.
pub fn scheme_equivalence_report(
    cfg: &SchemeComparisonConfig,
    seed: u64,
) -> Result<Vec<SchemeReportRow>> {
    let weak = WeakCoherentSource::new(cfg.mu)?;
    let heralded = HeraldedPairSource::new(cfg.pair_prob_per_gate, cfg.herald_efficiency)?;
    let central = CentralPairSource::new(cfg.pair_prob_per_gate, cfg.visibility)?;
    let half_channel = FiberChannel::new(
        cfg.channel.length_km / 2.0,
        cfg.channel.attenuation_db_per_km,
        cfg.channel.group_index,
    )?;
    let local = FiberChannel::new(0.0, 0.0, cfg.channel.group_index)?;

    let schemes = [
        (
            SourceScheme::WeakPulse {
                source: weak,
                visibility: cfg.visibility,
            },
            local,
            cfg.channel,
        ),
        (
            SourceScheme::Heralded {
                source: heralded,
                visibility: cfg.visibility,
            },
            local,
            cfg.channel,
        ),
        (
            SourceScheme::PrepareAtDistance {
                pair_prob_per_gate: cfg.pair_prob_per_gate,
                visibility: cfg.visibility,
            },
            local,
            cfg.channel,
        ),
        (SourceScheme::Central(central), half_channel, half_channel),
    ];

    let mut rows = Vec::with_capacity(schemes.len());
    for (i, (source, channel_alice, channel_bob)) in schemes.into_iter().enumerate() {
        let params = SessionParams {
            source,
            channel_alice,
            channel_bob,
            detector_alice: cfg.detector,
            detector_bob: cfg.detector,
            n_gates: cfg.n_gates,
        };
        let records = run_session(&params, derive_seed(seed, i as u64))?;
        let sifted = sift(&records);
        let mismatches = sifted
            .alice
            .iter()
            .zip(&sifted.bob)
            .filter(|(a, b)| a != b)
            .count();
        let qber = if sifted.alice.is_empty() {
            f64::NAN
        } else {
            mismatches as f64 / sifted.alice.len() as f64
        };
        let multiphoton_exposure = match params.source {
            SourceScheme::WeakPulse { source, .. } => source.multiphoton_probability(),
            _ => 0.0,
        };
        rows.push(SchemeReportRow {
            scheme: params.source.label(),
            sifted_length: sifted.alice.len(),
            sifted_rate: sifted.alice.len() as f64 / cfg.n_gates as f64,
            qber,
            multiphoton_exposure,
        });
    }
    Ok(rows)
}

/// Writes the session transcript, one gate per line, tab-separated:
/// gate_index, alice_basis, bob_basis, alice_bit, bob_bit, clicks.
/// Missing bits print as `-`; clicks is a two-character 0/1 pair
/// (Alice then Bob).
pub fn write_transcript<W: Write>(records: &[RawRecord], out: &mut W) -> io::Result<()> {
    for r in records {
        let bit = |b: Option<bool>| match b {
            Some(true) => '1',
            Some(false) => '0',
            None => '-',
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}{}",
            r.gate_index,
            r.alice_basis.symbol(),
            r.bob_basis.symbol(),
            bit(r.alice_bit),
            bit(r.bob_bit),
            u8::from(r.alice_bit.is_some()),
            u8::from(r.bob_bit.is_some()),
        )?;
    }
    Ok(())
}
