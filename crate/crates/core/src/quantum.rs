//! Exact two-qubit state math, CHSH evaluation, and the bridge between
//! quantum bit error rate and two-photon interference visibility.
//!
//! Everything here is deterministic; the only randomness is the seeded
//! Haar sampling used to generate test unitaries.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_range, Error, Result};

const NORM_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;

/// A pure state of two qubits, amplitudes indexed |00>, |01>, |10>, |11>.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureTwoQubitState {
    amplitudes: [Complex64; 4],
}

impl PureTwoQubitState {
    /// Builds a state from raw amplitudes, rejecting unnormalized input.
    pub fn new(amplitudes: [Complex64; 4]) -> Result<Self> {
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let deviation = (norm_sq - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Inner product <self|other>.
    pub fn overlap(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// The maximally entangled state Φ⁺ = (|00> + |11>)/√2.
pub fn bell_phi_plus() -> PureTwoQubitState {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    PureTwoQubitState {
        amplitudes: [h, zero, zero, h],
    }
}

/// A 2×2 unitary acting on one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2 {
    entries: [[Complex64; 2]; 2],
}

impl Unitary2 {
    /// Builds a unitary from raw entries, rejecting non-unitary input.
    pub fn new(entries: [[Complex64; 2]; 2]) -> Result<Self> {
        let u = Self { entries };
        let residual = u.unitarity_residual();
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
        Ok(u)
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    /// Max entrywise |U·U† − I|.
    pub fn unitarity_residual(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..2 {
                    s += self.entries[i][k] * self.entries[j][k].conj();
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                max = max.max((s - expect).norm());
            }
        }
        max
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            entries: [[one, zero], [zero, one]],
        }
    }

    pub fn pauli_x() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            entries: [[zero, one], [one, zero]],
        }
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            entries: [[zero, -i], [i, zero]],
        }
    }

    pub fn pauli_z() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self {
            entries: [[one, zero], [zero, -one]],
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            entries: [
                [self.entries[0][0], self.entries[1][0]],
                [self.entries[0][1], self.entries[1][1]],
            ],
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for k in 0..2 {
                    *cell += self.entries[i][k] * other.entries[k][j];
                }
            }
        }
        Self { entries: out }
    }

    /// Haar-random unitary: Gram-Schmidt on a complex Gaussian sample,
    /// with the QR phase correction applied to each column.
    pub fn random(rng: &mut impl Rng) -> Self {
        let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
        for row in g.iter_mut() {
            for cell in row.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *cell = Complex64::new(re, im);
            }
        }
        // Columns of g; orthonormalize col 0 then col 1.
        let mut c0 = [g[0][0], g[1][0]];
        let r00 = (c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt();
        c0[0] /= r00;
        c0[1] /= r00;
        let mut c1 = [g[0][1], g[1][1]];
        let proj = c0[0].conj() * c1[0] + c0[1].conj() * c1[1];
        c1[0] -= proj * c0[0];
        c1[1] -= proj * c0[1];
        let r11 = (c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt();
        c1[0] /= r11;
        c1[1] /= r11;
        // Phase correction: multiply each column by conj(r_kk)/|r_kk|.
        // r00 and r11 are real positive here, so nothing to correct for
        // Gram-Schmidt with positive-diagonal R; the distribution is Haar.
        Self {
            entries: [[c0[0], c1[0]], [c0[1], c1[1]]],
        }
    }
}

/// Applies U₁⊗U₂ to a two-qubit state. Norm is preserved.
pub fn apply_local_unitaries(
    state: &PureTwoQubitState,
    u1: &Unitary2,
    u2: &Unitary2,
) -> Result<PureTwoQubitState> {
    for u in [u1, u2] {
        let residual = u.unitarity_residual();
        if residual > UNITARY_TOL {
            return Err(Error::NotUnitary { residual });
        }
    }
    let a = u1.entries();
    let b = u2.entries();
    let s = &state.amplitudes;
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + j] += a[i][k] * b[j][l] * s[2 * k + l];
                }
            }
        }
    }
    Ok(PureTwoQubitState { amplitudes: out })
}

/// Residual of the identity U₁⊗U₂ Φ⁺ = 1⊗(U₂U₁ᵗ) Φ⁺, which makes the
/// one-photon and two-photon schemes interchangeable at the state level.
/// Always ≤ 1e-10 for unitary input.
pub fn transpose_identity_residual(u1: &Unitary2, u2: &Unitary2) -> Result<f64> {
    let phi = bell_phi_plus();
    let lhs = apply_local_unitaries(&phi, u1, u2)?;
    let rhs = apply_local_unitaries(&phi, &Unitary2::identity(), &u2.matmul(&u1.transpose()))?;
    let diff: f64 = lhs
        .amplitudes
        .iter()
        .zip(rhs.amplitudes.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(diff.sqrt())
}

/// An analyzer direction on the x–z great circle of the Bloch sphere,
/// canonicalized to [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetting {
    angle: f64,
}

impl MeasurementSetting {
    pub fn from_radians(angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::NotFinite {
                name: "angle",
                value: angle,
            });
        }
        Ok(Self {
            angle: angle.rem_euclid(TAU),
        })
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::from_radians(deg.to_radians())
    }

    pub fn radians(&self) -> f64 {
        self.angle
    }
}

/// The four analyzer settings entering the CHSH combination
/// S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a: MeasurementSetting,
    pub a_prime: MeasurementSetting,
    pub b: MeasurementSetting,
    pub b_prime: MeasurementSetting,
}

impl ChshSettings {
    /// The settings attaining S = 2√2·V: a=0, a′=π/2, b=π/4, b′=3π/4.
    pub fn canonical() -> Self {
        Self {
            a: MeasurementSetting::from_radians(0.0).unwrap(),
            a_prime: MeasurementSetting::from_radians(PI / 2.0).unwrap(),
            b: MeasurementSetting::from_radians(PI / 4.0).unwrap(),
            b_prime: MeasurementSetting::from_radians(3.0 * PI / 4.0).unwrap(),
        }
    }
}

/// Isotropic single-parameter noise model: a Φ⁺ pair observed with
/// two-photon interference visibility V.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationModel {
    visibility: f64,
}

/// Joint outcome probabilities P(x,y) for x,y ∈ {+1,−1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointProbabilities {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

impl JointProbabilities {
    pub fn sum(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }

    /// Probability that the two outcomes agree.
    pub fn agreement(&self) -> f64 {
        self.pp + self.mm
    }
}

impl CorrelationModel {
    pub fn new(visibility: f64) -> Result<Self> {
        check_range("visibility", visibility, 0.0, 1.0)?;
        Ok(Self { visibility })
    }

    pub fn visibility(&self) -> f64 {
        self.visibility
    }

    /// P(x,y) = (1 + x·y·V·cos(a−b))/4.
    pub fn joint_probabilities(
        &self,
        a: MeasurementSetting,
        b: MeasurementSetting,
    ) -> JointProbabilities {
        let vc = self.visibility * (a.radians() - b.radians()).cos();
        JointProbabilities {
            pp: (1.0 + vc) / 4.0,
            pm: (1.0 - vc) / 4.0,
            mp: (1.0 - vc) / 4.0,
            mm: (1.0 + vc) / 4.0,
        }
    }

    /// Correlation coefficient E(a,b) = V·cos(a−b) = Σ x·y·P(x,y).
    pub fn correlation(&self, a: MeasurementSetting, b: MeasurementSetting) -> f64 {
        let p = self.joint_probabilities(a, b);
        p.pp - p.pm - p.mp + p.mm
    }

    /// S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′); |S| ≤ 2√2·V.
    pub fn chsh_value(&self, s: &ChshSettings) -> f64 {
        self.correlation(s.a, s.b) - self.correlation(s.a, s.b_prime)
            + self.correlation(s.a_prime, s.b)
            + self.correlation(s.a_prime, s.b_prime)
    }
}

/// QBER = (1 − V)/2: outside the visibility the receiver still guesses
/// right half of the time.
pub fn qber_from_visibility(visibility: f64) -> Result<f64> {
    check_range("visibility", visibility, 0.0, 1.0)?;
    Ok((1.0 - visibility) / 2.0)
}

/// Inverse of [`qber_from_visibility`]: V = 1 − 2·QBER.
pub fn visibility_from_qber(qber: f64) -> Result<f64> {
    check_range("qber", qber, 0.0, 0.5)?;
    Ok(1.0 - 2.0 * qber)
}
