//! The four-stage round: share distribution, nonce announcement, joint
//! recovery and reconciliation.
//!
//! Every round owns one ChaCha8 generator seeded with the run seed and
//! switched to stream `round_index`, so rounds are independent and can run
//! in any order. Draws happen in this order:
//!
//! 1. mode: `SECRET` iff a uniform `f64` is below `mode_prior`;
//! 2. secret: in `SECRET` mode one fair bit, only when no secret bit is
//!    configured; in `DETECT` mode one fair bit choosing `11` over `00`;
//! 3. nonce index, uniform on `0..k`;
//! 4. whatever the adversary draws while intercepting;
//! 5. whatever the adversary draws when the nonce is announced;
//! 6. one uniform `f64` selecting the joint measurement outcome.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    bloch_from_density, partial_trace_e, BlochVector, DensityMatrix, StateVector, UnitaryMatrix,
    C64,
};
use crate::nonces::{reflection, share_state, NonceSet, Secret};

/// Dealer's per-round mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    Secret,
    Detect,
}

/// Reconciliation outcome of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// The parties keep `b_E` as the secret bit.
    Retired(u8),
    RoundDropped,
    EavesdropperDetected,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Retired(bit) => write!(f, "RETIRED({bit})"),
            Verdict::RoundDropped => f.write_str("ROUND_DROPPED"),
            Verdict::EavesdropperDetected => f.write_str("EAVESDROPPER_DETECTED"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "ROUND_DROPPED" => Ok(Verdict::RoundDropped),
            "EAVESDROPPER_DETECTED" => Ok(Verdict::EavesdropperDetected),
            "RETIRED(0)" => Ok(Verdict::Retired(0)),
            "RETIRED(1)" => Ok(Verdict::Retired(1)),
            other => Err(serde::de::Error::custom(format!(
                "unknown verdict `{other}`"
            ))),
        }
    }
}

/// Stage-IV rule for a measured `b`.
///
/// In `SECRET` mode the parties retire with `b_E` when `b` is `01` or `10`
/// and otherwise announce `b`, which exposes the eavesdropper. In `DETECT`
/// mode the round is dropped only when the announced `b` equals `s`; a
/// wrong announcement, or no announcement at all (`b` in `{01, 10}`), means
/// an eavesdropper.
pub fn verdict(mode: Mode, s: Secret, b: Secret) -> Verdict {
    match mode {
        Mode::Secret if b.is_mixed_parity() => Verdict::Retired(b.eve_bit()),
        Mode::Secret => Verdict::EavesdropperDetected,
        Mode::Detect if b == s => Verdict::RoundDropped,
        Mode::Detect => Verdict::EavesdropperDetected,
    }
}

/// The secret string the dealer encodes for a `SECRET`-mode bit.
pub fn secret_for_bit(bit: u8) -> Secret {
    if bit == 0 {
        Secret::S01
    } else {
        Secret::S10
    }
}

/// Per-round adversary state; one instance lives for exactly one round.
pub trait RoundAdversary {
    /// Stage I. Receives the dealer's pair `|psi_{i,s}>` in flight and
    /// returns the joint state of the qubit Eve will present at recovery
    /// (first factor) and the qubit actually delivered to Bob.
    fn intercept(&mut self, shares: &StateVector, rng: &mut dyn RngCore) -> Result<DensityMatrix>;

    /// Stage II. Returns an optional unitary applied to Eve's recovery qubit.
    fn nonce_announced(
        &mut self,
        nonces: &NonceSet,
        nonce_index: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Option<UnitaryMatrix>>;

    /// The secret Eve believes the dealer used, if any.
    fn learned_secret(&self) -> Option<Secret>;
}

/// One branch of an adversary's action for a fixed nonce and share state.
#[derive(Debug, Clone)]
pub struct Branch {
    pub probability: f64,
    /// Joint Eve+Bob state entering Stage III, after any Stage-II unitary.
    pub joint: DensityMatrix,
    pub learned: Option<Secret>,
}

/// A strategy the protocol can run against.
///
/// `begin_round` drives Monte Carlo rounds through the hooks; `branches`
/// states the same behaviour as an explicit probabilistic channel for exact
/// enumeration.
pub trait AdversaryStrategy: Send + Sync {
    fn label(&self) -> String;

    fn begin_round(&self) -> Box<dyn RoundAdversary + '_>;

    fn branches(
        &self,
        nonces: &NonceSet,
        nonce_index: usize,
        shares: &StateVector,
    ) -> Result<Vec<Branch>>;
}

/// Inputs shared by every round of a run.
#[derive(Debug, Clone)]
pub struct RoundConfig {
    pub nonce_set: NonceSet,
    /// Secret bit used in `SECRET` mode; drawn per round when absent.
    pub secret_bit: Option<u8>,
    pub rng_seed: u64,
    /// Probability of `SECRET` mode.
    pub mode_prior: f64,
}

impl RoundConfig {
    pub fn new(nonce_set: NonceSet, rng_seed: u64) -> Self {
        Self {
            nonce_set,
            secret_bit: None,
            rng_seed,
            mode_prior: 0.5,
        }
    }

    pub fn with_secret_bit(mut self, bit: u8) -> Self {
        self.secret_bit = Some(bit);
        self
    }

    pub fn with_mode_prior(mut self, prior: f64) -> Self {
        self.mode_prior = prior;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mode_prior) {
            return Err(Error::Precondition(format!(
                "mode prior {} outside [0, 1]",
                self.mode_prior
            )));
        }
        if matches!(self.secret_bit, Some(b) if b > 1) {
            return Err(Error::Precondition("secret bit must be 0 or 1".into()));
        }
        if self.nonce_set.is_empty() {
            return Err(Error::EmptyNonceSet);
        }
        Ok(())
    }

    /// The generator for one round; see the module docs for the draw order.
    pub fn round_rng(&self, round_index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(round_index);
        rng
    }
}

/// Full record of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundTranscript {
    pub round: u64,
    pub mode: Mode,
    /// Dealer's secret bit; present in `SECRET` mode only.
    pub secret_bit: Option<u8>,
    pub s: Secret,
    /// 1-based index of the nonce the dealer drew.
    pub nonce_index: usize,
    /// Bloch vector of the qubit Bob actually received.
    pub forwarded_to_bob: BlochVector,
    /// 1-based index announced in Stage II.
    pub announced_nonce: usize,
    pub stage_two_unitary: bool,
    pub measured_b: Secret,
    pub verdict: Verdict,
    pub learned_secret: Option<Secret>,
}

fn check_joint(joint: &DensityMatrix) -> Result<()> {
    if joint.dim() != 4 {
        return Err(Error::Protocol(format!(
            "adversary delivered a {}-dimensional state, expected a qubit pair",
            joint.dim()
        )));
    }
    let tr = joint.matrix().trace();
    if (tr - C64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::Protocol(format!(
            "adversary delivered a state with trace {tr}"
        )));
    }
    Ok(())
}

fn apply_stage_two(joint: &DensityMatrix, v: &UnitaryMatrix) -> Result<DensityMatrix> {
    if v.dim() != 2 {
        return Err(Error::Protocol(format!(
            "stage-II operation must act on one qubit, got dimension {}",
            v.dim()
        )));
    }
    if v.matrix().unitarity_defect() > 1e-9 {
        return Err(Error::Protocol("stage-II operation is not unitary".into()));
    }
    joint.conjugate_by(&v.on_first_qubit()?)
}

/// Outcome probabilities of the Stage-III joint measurement, indexed by `b`.
pub fn recovery_distribution(joint: &DensityMatrix, nonce: &StateVector) -> Result<[f64; 4]> {
    let after = joint.conjugate_by(&reflection(nonce))?;
    let p = after.basis_probabilities();
    Ok([p[0], p[1], p[2], p[3]])
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` past the last bucket: take the last non-zero outcome.
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Runs one complete round against `strategy`.
pub fn run_round(
    cfg: &RoundConfig,
    round_index: u64,
    strategy: &dyn AdversaryStrategy,
) -> Result<RoundTranscript> {
    cfg.validate()?;
    let mut rng = cfg.round_rng(round_index);

    // Stage I.
    let mode = if rng.random::<f64>() < cfg.mode_prior {
        Mode::Secret
    } else {
        Mode::Detect
    };
    let (secret_bit, s) = match mode {
        Mode::Secret => {
            let bit = match cfg.secret_bit {
                Some(b) => b,
                None => u8::from(rng.random_bool(0.5)),
            };
            (Some(bit), secret_for_bit(bit))
        }
        Mode::Detect => {
            let s = if rng.random_bool(0.5) {
                Secret::S11
            } else {
                Secret::S00
            };
            (None, s)
        }
    };
    let k = cfg.nonce_set.len();
    let nonce_index = rng.random_range(0..k);
    let nonce = &cfg.nonce_set.states()[nonce_index];
    let shares = share_state(nonce, s)?;

    let mut adversary = strategy.begin_round();
    let delivered = adversary.intercept(&shares, &mut rng)?;
    check_joint(&delivered)?;
    let forwarded_to_bob = bloch_from_density(&partial_trace_e(&delivered)?)?;

    // Stage II.
    let stage_two = adversary.nonce_announced(&cfg.nonce_set, nonce_index, &mut rng)?;
    let joint = match &stage_two {
        Some(v) => apply_stage_two(&delivered, v)?,
        None => delivered,
    };

    // Stage III.
    let probs = recovery_distribution(&joint, nonce)?;
    let b = Secret::from_index(sample_index(&probs, rng.random::<f64>()))?;

    Ok(RoundTranscript {
        round: round_index,
        mode,
        secret_bit,
        s,
        nonce_index: nonce_index + 1,
        forwarded_to_bob,
        announced_nonce: nonce_index + 1,
        stage_two_unitary: stage_two.is_some(),
        measured_b: b,
        verdict: verdict(mode, s, b),
        learned_secret: adversary.learned_secret(),
    })
}

/// Runs `rounds` rounds in parallel; transcripts come back in round order.
pub fn simulate(
    cfg: &RoundConfig,
    strategy: &dyn AdversaryStrategy,
    rounds: u64,
) -> Result<Vec<RoundTranscript>> {
    cfg.validate()?;
    (0..rounds)
        .into_par_iter()
        .map(|r| run_round(cfg, r, strategy))
        .collect()
}

/// Monte Carlo summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEstimate {
    pub rounds: u64,
    pub p_detect: f64,
    /// Binomial standard error of `p_detect`.
    pub stderr: f64,
    pub retired: u64,
    pub dropped: u64,
    pub detected: u64,
    /// Rounds where the adversary's learned secret equals the dealer's.
    pub eve_knows_secret: u64,
    /// Rounds where the measured `b` equals `s`.
    pub recovered: u64,
}

impl DetectionEstimate {
    pub fn from_transcripts(transcripts: &[RoundTranscript]) -> Self {
        let rounds = transcripts.len() as u64;
        let count = |f: &dyn Fn(&RoundTranscript) -> bool| {
            transcripts.iter().filter(|t| f(t)).count() as u64
        };
        let detected = count(&|t| t.verdict == Verdict::EavesdropperDetected);
        let dropped = count(&|t| t.verdict == Verdict::RoundDropped);
        let retired = count(&|t| matches!(t.verdict, Verdict::Retired(_)));
        let eve_knows_secret = count(&|t| t.learned_secret == Some(t.s));
        let recovered = count(&|t| t.measured_b == t.s);
        let n = rounds.max(1) as f64;
        let p = detected as f64 / n;
        Self {
            rounds,
            p_detect: p,
            stderr: (p * (1.0 - p) / n).sqrt(),
            retired,
            dropped,
            detected,
            eve_knows_secret,
            recovered,
        }
    }
}

/// Fraction of detected rounds and its standard error over `rounds`
/// seeded rounds.
pub fn estimate_detection(
    cfg: &RoundConfig,
    strategy: &dyn AdversaryStrategy,
    rounds: u64,
) -> Result<DetectionEstimate> {
    if rounds == 0 {
        return Err(Error::Precondition("at least one round is required".into()));
    }
    Ok(DetectionEstimate::from_transcripts(&simulate(
        cfg, strategy, rounds,
    )?))
}

/// Key of the exact outcome table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OutcomeKey {
    pub mode: Mode,
    pub s: Secret,
    /// 1-based.
    pub nonce_index: usize,
    pub b: Secret,
}

/// Exact joint distribution of `(mode, s, nonce, b)` for a strategy.
#[derive(Debug, Clone, Default)]
pub struct ExactOutcome {
    pub table: BTreeMap<OutcomeKey, f64>,
    /// Probability that the adversary's learned secret equals `s`.
    pub p_eve_knows_secret: f64,
}

impl ExactOutcome {
    pub fn total(&self) -> f64 {
        self.table.values().sum()
    }

    fn sum_where(&self, f: impl Fn(&OutcomeKey) -> bool) -> f64 {
        self.table
            .iter()
            .filter(|(k, _)| f(k))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn p_verdict(&self, pred: impl Fn(Verdict) -> bool) -> f64 {
        self.sum_where(|k| pred(verdict(k.mode, k.s, k.b)))
    }

    pub fn p_detect(&self) -> f64 {
        self.p_verdict(|v| v == Verdict::EavesdropperDetected)
    }

    pub fn p_dropped(&self) -> f64 {
        self.p_verdict(|v| v == Verdict::RoundDropped)
    }

    pub fn p_retired(&self) -> f64 {
        self.p_verdict(|v| matches!(v, Verdict::Retired(_)))
    }

    /// Probability that the parties measure exactly `s`.
    pub fn p_recovered(&self) -> f64 {
        self.sum_where(|k| k.b == k.s)
    }

    pub fn p_mode(&self, mode: Mode) -> f64 {
        self.sum_where(|k| k.mode == mode)
    }

    /// `P(detected | mode)`; zero if the mode never occurs.
    pub fn p_detect_given(&self, mode: Mode) -> f64 {
        let pm = self.p_mode(mode);
        if pm == 0.0 {
            return 0.0;
        }
        self.sum_where(|k| {
            k.mode == mode && verdict(k.mode, k.s, k.b) == Verdict::EavesdropperDetected
        }) / pm
    }

    /// `P(b = target | mode)`.
    pub fn p_b_given(&self, mode: Mode, target: Secret) -> f64 {
        let pm = self.p_mode(mode);
        if pm == 0.0 {
            return 0.0;
        }
        self.sum_where(|k| k.mode == mode && k.b == target) / pm
    }
}

/// Enumerates every random choice of a round exactly.
pub fn outcome_distribution(
    nonces: &NonceSet,
    mode_prior: f64,
    secret_bit: Option<u8>,
    strategy: &dyn AdversaryStrategy,
) -> Result<ExactOutcome> {
    RoundConfig {
        nonce_set: nonces.clone(),
        secret_bit,
        rng_seed: 0,
        mode_prior,
    }
    .validate()?;

    let secret_mode: Vec<(Secret, f64)> = match secret_bit {
        Some(bit) => vec![(secret_for_bit(bit), 1.0)],
        None => vec![(Secret::S01, 0.5), (Secret::S10, 0.5)],
    };
    let detect_mode = vec![(Secret::S00, 0.5), (Secret::S11, 0.5)];
    let k = nonces.len();

    let mut out = ExactOutcome::default();
    for (mode, p_mode, secrets) in [
        (Mode::Secret, mode_prior, &secret_mode),
        (Mode::Detect, 1.0 - mode_prior, &detect_mode),
    ] {
        if p_mode == 0.0 {
            continue;
        }
        for &(s, p_s) in secrets {
            for (i, nonce) in nonces.states().iter().enumerate() {
                let weight = p_mode * p_s / k as f64;
                let shares = share_state(nonce, s)?;
                let branches = strategy.branches(nonces, i, &shares)?;
                let branch_total: f64 = branches.iter().map(|b| b.probability).sum();
                if (branch_total - 1.0).abs() > 1e-9 {
                    return Err(Error::Protocol(format!(
                        "strategy branches sum to {branch_total}"
                    )));
                }
                for branch in branches {
                    check_joint(&branch.joint)?;
                    let w = weight * branch.probability;
                    if branch.learned == Some(s) {
                        out.p_eve_knows_secret += w;
                    }
                    let probs = recovery_distribution(&branch.joint, nonce)?;
                    for (bi, p_b) in probs.iter().enumerate() {
                        let key = OutcomeKey {
                            mode,
                            s,
                            nonce_index: i + 1,
                            b: Secret::from_index(bi)?,
                        };
                        *out.table.entry(key).or_insert(0.0) += w * p_b;
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_table_is_exhaustive() {
        for mode in [Mode::Secret, Mode::Detect] {
            for s in Secret::ALL {
                for b in Secret::ALL {
                    let got = verdict(mode, s, b);
                    let want = match (mode, b.to_string().as_str()) {
                        (Mode::Secret, "01") => Verdict::Retired(0),
                        (Mode::Secret, "10") => Verdict::Retired(1),
                        (Mode::Secret, _) => Verdict::EavesdropperDetected,
                        (Mode::Detect, _) if b == s => Verdict::RoundDropped,
                        (Mode::Detect, _) => Verdict::EavesdropperDetected,
                    };
                    assert_eq!(got, want, "mode {mode:?}, s {s}, b {b}");
                }
            }
        }
    }

    #[test]
    fn retired_bit_matches_encoding() {
        for bit in [0u8, 1] {
            let s = secret_for_bit(bit);
            assert_eq!(verdict(Mode::Secret, s, s), Verdict::Retired(bit));
        }
    }

    #[test]
    fn verdict_serializes_as_label() {
        let json = serde_json::to_string(&Verdict::Retired(1)).unwrap();
        assert_eq!(json, "\"RETIRED(1)\"");
        let back: Verdict = serde_json::from_str("\"EAVESDROPPER_DETECTED\"").unwrap();
        assert_eq!(back, Verdict::EavesdropperDetected);
        assert!(serde_json::from_str::<Verdict>("\"RETIRED(2)\"").is_err());
    }

    #[test]
    fn sample_index_boundaries() {
        let p = [0.25, 0.0, 0.75, 0.0];
        assert_eq!(sample_index(&p, 0.0), 0);
        assert_eq!(sample_index(&p, 0.25), 2);
        assert_eq!(sample_index(&p, 0.999_999_999_9), 2);
        assert_eq!(
            sample_index(&[0.5, 0.5 - 1e-17, 0.0, 0.0], 0.999_999_999_999_999_9),
            1
        );
    }

    #[test]
    fn mode_prior_is_validated() {
        let cfg = RoundConfig::new(
            crate::nonces::builtin_nonce_set(crate::nonces::BuiltinNonceSet::ProposedJ),
            1,
        )
        .with_mode_prior(1.5);
        assert!(matches!(cfg.validate(), Err(Error::Precondition(_))));
    }
}
