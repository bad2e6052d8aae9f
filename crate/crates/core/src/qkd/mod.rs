//! End-to-end entanglement-based key distribution: session simulation,
//! sifting, QBER estimation, cascade reconciliation, privacy
//! amplification, and the security judgment against the 15% threshold.

mod cascade;
mod info;
mod session;
mod toeplitz;

pub use cascade::{cascade_correct, CascadeOutcome};
pub use info::{
    binary_entropy, eve_info_optimal, mutual_info_ab, secret_fraction, security_threshold,
};
pub use session::{
    estimate_qber, run_full_session, run_session, scheme_equivalence_report, sift,
    write_transcript, BasisChoice, ProtocolParams, QberEstimate, QkdSessionResult, RawRecord,
    SchemeComparisonConfig, SchemeReportRow, SessionParams, SiftedKeys, SourceScheme,
};
pub use toeplitz::{privacy_amplify, toeplitz_hash, AmplifiedKey, SecurityVerdict};

/// Derives a stage-specific seed from a session seed (splitmix64 step).
pub(crate) fn derive_seed(seed: u64, stage: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stage.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
