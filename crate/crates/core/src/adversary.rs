//! Adversary strategies: honest pass-through, guess-based
//! intercept-measure-resend, and intercept-fake-resend driven by an attack
//! plan.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::analysis::{basis_secrets, check_recoverability, optimize_fidelity};
use crate::error::{Error, Result};
use crate::linalg::{
    canonical_purification, max_overlap_unitary, partial_trace_e, DensityMatrix, Matrix,
    StateVector, UnitaryMatrix, C64, FRAC_1_SQRT_2, TOL,
};
use crate::nonces::{reflection, share_state, NonceSet, Secret, LOAD_NORM_TOL};
use crate::protocol::{AdversaryStrategy, Branch, RoundAdversary};

/// Branches below this probability are treated as impossible.
const NEGLIGIBLE: f64 = 1e-12;

fn measure(probs: &[f64], rng: &mut dyn RngCore) -> Result<Secret> {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Secret::from_index(i);
        }
    }
    let last = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1);
    Secret::from_index(last)
}

/// Outcome distribution of measuring `U_nonce |shares>` in the standard basis.
fn reflect_and_measure_probs(nonce: &StateVector, shares: &StateVector) -> Result<[f64; 4]> {
    let after = reflection(nonce).apply(shares)?;
    let a = after.amps();
    Ok([
        a[0].norm_sqr(),
        a[1].norm_sqr(),
        a[2].norm_sqr(),
        a[3].norm_sqr(),
    ])
}

/// Forwards everything untouched.
#[derive(Debug, Clone, Copy, Default)]
pub struct Honest;

struct HonestRound;

impl RoundAdversary for HonestRound {
    fn intercept(&mut self, shares: &StateVector, _: &mut dyn RngCore) -> Result<DensityMatrix> {
        Ok(shares.density())
    }

    fn nonce_announced(
        &mut self,
        _: &NonceSet,
        _: usize,
        _: &mut dyn RngCore,
    ) -> Result<Option<UnitaryMatrix>> {
        Ok(None)
    }

    fn learned_secret(&self) -> Option<Secret> {
        None
    }
}

impl AdversaryStrategy for Honest {
    fn label(&self) -> String {
        "honest".into()
    }

    fn begin_round(&self) -> Box<dyn RoundAdversary + '_> {
        Box::new(HonestRound)
    }

    fn branches(&self, _: &NonceSet, _: usize, shares: &StateVector) -> Result<Vec<Branch>> {
        Ok(vec![Branch {
            probability: 1.0,
            joint: shares.density(),
            learned: None,
        }])
    }
}

/// Which nonce an intercept-measure-resend adversary bets on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonceGuess {
    /// 0-based index.
    Fixed(usize),
    /// A fresh uniform guess every round.
    Uniform,
}

/// Reflects the intercepted pair about a guessed nonce `psi_j`, measures
/// `s'`, and resends `U_{s'} |psi_j>`.
#[derive(Debug, Clone)]
pub struct ImrGuess {
    nonces: NonceSet,
    guess: NonceGuess,
}

impl ImrGuess {
    pub fn new(nonces: NonceSet, guess: NonceGuess) -> Result<Self> {
        if let NonceGuess::Fixed(j) = guess {
            if j >= nonces.len() {
                return Err(Error::Precondition(format!(
                    "guess {} outside nonce set of size {}",
                    j + 1,
                    nonces.len()
                )));
            }
        }
        Ok(Self { nonces, guess })
    }

    fn guesses(&self) -> Vec<(usize, f64)> {
        match self.guess {
            NonceGuess::Fixed(j) => vec![(j, 1.0)],
            NonceGuess::Uniform => {
                let k = self.nonces.len();
                (0..k).map(|j| (j, 1.0 / k as f64)).collect()
            }
        }
    }
}

struct ImrRound<'a> {
    strategy: &'a ImrGuess,
    learned: Option<Secret>,
}

impl RoundAdversary for ImrRound<'_> {
    fn intercept(&mut self, shares: &StateVector, rng: &mut dyn RngCore) -> Result<DensityMatrix> {
        let nonces = &self.strategy.nonces;
        let j = match self.strategy.guess {
            NonceGuess::Fixed(j) => j,
            NonceGuess::Uniform => rng.random_range(0..nonces.len()),
        };
        let psi_j = &nonces.states()[j];
        let s = measure(&reflect_and_measure_probs(psi_j, shares)?, rng)?;
        self.learned = Some(s);
        Ok(share_state(psi_j, s)?.density())
    }

    fn nonce_announced(
        &mut self,
        _: &NonceSet,
        _: usize,
        _: &mut dyn RngCore,
    ) -> Result<Option<UnitaryMatrix>> {
        Ok(None)
    }

    fn learned_secret(&self) -> Option<Secret> {
        self.learned
    }
}

impl AdversaryStrategy for ImrGuess {
    fn label(&self) -> String {
        match self.guess {
            NonceGuess::Fixed(j) => format!("imr-guess:{}", j + 1),
            NonceGuess::Uniform => "imr-guess".into(),
        }
    }

    fn begin_round(&self) -> Box<dyn RoundAdversary + '_> {
        Box::new(ImrRound {
            strategy: self,
            learned: None,
        })
    }

    fn branches(&self, _: &NonceSet, _: usize, shares: &StateVector) -> Result<Vec<Branch>> {
        let mut out = Vec::new();
        for (j, pj) in self.guesses() {
            let psi_j = &self.nonces.states()[j];
            let probs = reflect_and_measure_probs(psi_j, shares)?;
            for (si, p) in probs.iter().enumerate() {
                if *p <= 0.0 {
                    continue;
                }
                let s = Secret::from_index(si)?;
                out.push(Branch {
                    probability: pj * p,
                    joint: share_state(psi_j, s)?.density(),
                    learned: Some(s),
                });
            }
        }
        normalize_branches(&mut out);
        Ok(out)
    }
}

fn normalize_branches(branches: &mut [Branch]) {
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    if total > 0.0 {
        for b in branches {
            b.probability /= total;
        }
    }
}

/// How a plan picks the string it steers the recovery towards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    /// Reproduce whatever secret was learned.
    TargetSecret,
    /// Always steer towards `01`.
    Target01,
    /// Explicit target per `(0-based nonce, learned secret)`.
    Custom(BTreeMap<(usize, Secret), Secret>),
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::TargetSecret => "target-secret",
            Policy::Target01 => "target-01",
            Policy::Custom(_) => "custom",
        }
    }

    pub fn target(&self, nonce_index: usize, learned: Secret) -> Option<Secret> {
        match self {
            Policy::TargetSecret => Some(learned),
            Policy::Target01 => Some(Secret::S01),
            Policy::Custom(map) => map.get(&(nonce_index, learned)).copied(),
        }
    }
}

/// Fake state `alpha` plus the Stage-II unitary for each `(nonce, learned
/// secret)`; nonce indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackPlan {
    pub alpha: StateVector,
    pub policy: Policy,
    pub v_table: BTreeMap<(usize, Secret), UnitaryMatrix>,
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    alpha: Vec<[f64; 2]>,
    policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    targets: Option<BTreeMap<String, Secret>>,
    v_table: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

fn entry_key(i: usize, s: Secret) -> String {
    format!("{},{}", i + 1, s)
}

fn parse_entry_key(key: &str) -> Result<(usize, Secret)> {
    let bad = || {
        Error::Parse(format!(
            "bad plan key `{key}`, expected `i,s` with 1-based i"
        ))
    };
    let (i, s) = key.split_once(',').ok_or_else(bad)?;
    let i: usize = i.trim().parse().map_err(|_| bad())?;
    if i == 0 {
        return Err(bad());
    }
    Ok((i - 1, s.trim().parse()?))
}

impl AttackPlan {
    pub fn v(&self, nonce_index: usize, learned: Secret) -> Option<&UnitaryMatrix> {
        self.v_table.get(&(nonce_index, learned))
    }

    /// `|<psi_{i,t}| (V (x) I) |alpha>|^2` for the entry `(i, s)` and its
    /// policy target `t`.
    pub fn entry_overlap(
        &self,
        nonces: &NonceSet,
        nonce_index: usize,
        learned: Secret,
    ) -> Result<f64> {
        let v = self.v(nonce_index, learned).ok_or(Error::PlanIncomplete {
            nonce: nonce_index + 1,
            secret: learned,
        })?;
        let target = self
            .policy
            .target(nonce_index, learned)
            .ok_or(Error::PlanIncomplete {
                nonce: nonce_index + 1,
                secret: learned,
            })?;
        let psi = nonces.get(nonce_index).ok_or_else(|| {
            Error::PlanMismatch(format!("plan refers to nonce {}", nonce_index + 1))
        })?;
        let moved = v.on_first_qubit()?.apply(&self.alpha)?;
        share_state(psi, target)?.overlap_sq(&moved)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("plain data serializes")
    }

    /// The plan as a JSON value, for embedding extra fields.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("plain data serializes")
    }

    fn to_file(&self) -> PlanFile {
        let pairs = |a: &[C64]| a.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
        PlanFile {
            alpha: pairs(self.alpha.amps()),
            policy: self.policy.name().into(),
            targets: match &self.policy {
                Policy::Custom(map) => Some(
                    map.iter()
                        .map(|(&(i, s), &t)| (entry_key(i, s), t))
                        .collect(),
                ),
                _ => None,
            },
            v_table: self
                .v_table
                .iter()
                .map(|(&(i, s), v)| {
                    let rows = v.matrix().rows().iter().map(|r| pairs(r)).collect();
                    (entry_key(i, s), rows)
                })
                .collect(),
        }
    }

    /// Parses the plan format. `alpha` is renormalized when within the
    /// nonce-file tolerance; every table entry must be unitary.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: PlanFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("malformed plan file: {e}")))?;
        if file.alpha.len() != 4 {
            return Err(Error::Parse(format!(
                "plan alpha needs 4 amplitudes, found {}",
                file.alpha.len()
            )));
        }
        let amps: Vec<C64> = file
            .alpha
            .iter()
            .map(|[re, im]| C64::new(*re, *im))
            .collect();
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > LOAD_NORM_TOL {
            return Err(Error::NotNormalized(norm_sq));
        }
        let alpha = StateVector::normalize(amps)?;

        let policy = match file.policy.as_str() {
            "target-secret" => Policy::TargetSecret,
            "target-01" => Policy::Target01,
            "custom" => {
                let targets = file
                    .targets
                    .ok_or_else(|| Error::Parse("custom plan needs a `targets` map".into()))?;
                let mut map = BTreeMap::new();
                for (k, t) in targets {
                    map.insert(parse_entry_key(&k)?, t);
                }
                Policy::Custom(map)
            }
            other => return Err(Error::Parse(format!("unknown plan policy `{other}`"))),
        };

        let mut v_table = BTreeMap::new();
        for (k, rows) in file.v_table {
            let key = parse_entry_key(&k)?;
            if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
                return Err(Error::Parse(format!("entry `{k}` is not a 2x2 matrix")));
            }
            let m = Matrix::from_rows(
                rows.iter()
                    .map(|r| r.iter().map(|[re, im]| C64::new(*re, *im)).collect())
                    .collect(),
            )?;
            let v = UnitaryMatrix::new(m).map_err(|e| Error::Parse(format!("entry `{k}`: {e}")))?;
            v_table.insert(key, v);
        }
        Ok(Self {
            alpha,
            policy,
            v_table,
        })
    }

    /// Checks the plan addresses exactly the nonces of `nonces`.
    pub fn check_against(&self, nonces: &NonceSet) -> Result<()> {
        let k = nonces.len();
        let used: BTreeSet<usize> = self.v_table.keys().map(|&(i, _)| i).collect();
        if let Some(&i) = used.iter().find(|&&i| i >= k) {
            return Err(Error::PlanMismatch(format!(
                "plan has entries for nonce {} but the set has {k} nonces",
                i + 1
            )));
        }
        if !matches!(self.policy, Policy::Custom(_)) && used.len() != k {
            return Err(Error::PlanMismatch(format!(
                "plan covers {} nonces but the set has {k}",
                used.len()
            )));
        }
        Ok(())
    }
}

/// `(|01> + |10>) / sqrt(2)`.
pub fn symmetric_bell_state() -> StateVector {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let z = C64::new(0.0, 0.0);
    StateVector::from_raw(vec![z, h, h, z])
}

/// Builds a plan for `policy`.
///
/// `alpha` purifies the qubit state maximizing the average fidelity to
/// Bob's reduced share of `U_t |psi_i>` over every `(i, s)` and its target
/// `t`; each table entry is the Uhlmann-optimal unitary for that pair.
pub fn synthesize_plan(nonces: &NonceSet, policy: Policy) -> Result<AttackPlan> {
    require_recoverable(nonces)?;
    let mut targets = Vec::new();
    for (i, psi) in nonces.states().iter().enumerate() {
        for s in Secret::ALL {
            if let Some(t) = policy.target(i, s) {
                targets.push(partial_trace_e(&share_state(psi, t)?.density())?);
            }
        }
    }
    if targets.is_empty() {
        return Err(Error::Precondition(
            "policy targets no (nonce, secret) pair".into(),
        ));
    }
    let optimum = optimize_fidelity(&targets)?;
    let alpha = canonical_purification(&optimum.optimizer)?;
    synthesize_plan_with_alpha(nonces, policy, alpha)
}

/// Builds the table for a caller-chosen `alpha`.
pub fn synthesize_plan_with_alpha(
    nonces: &NonceSet,
    policy: Policy,
    alpha: StateVector,
) -> Result<AttackPlan> {
    require_recoverable(nonces)?;
    if alpha.dim() != 4 {
        return Err(Error::Dimension {
            expected: 4,
            found: alpha.dim(),
        });
    }
    let mut v_table = BTreeMap::new();
    for (i, psi) in nonces.states().iter().enumerate() {
        for s in Secret::ALL {
            if let Some(t) = policy.target(i, s) {
                let best = max_overlap_unitary(&alpha, &share_state(psi, t)?)?;
                v_table.insert((i, s), best.v);
            }
        }
    }
    Ok(AttackPlan {
        alpha,
        policy,
        v_table,
    })
}

fn require_recoverable(nonces: &NonceSet) -> Result<()> {
    if !check_recoverability(nonces, &basis_secrets(), TOL)?.passed {
        return Err(Error::Uncertified {
            name: nonces.name().to_string(),
            condition: "recoverability".into(),
        });
    }
    Ok(())
}

/// Keeps the dealer's pair, sends Bob half of `alpha`, learns `s` once the
/// nonce is public and steers Eve's half of `alpha` with the plan's unitary.
#[derive(Debug, Clone)]
pub struct IfrStrategy {
    plan: AttackPlan,
}

impl IfrStrategy {
    pub fn new(nonces: &NonceSet, plan: AttackPlan) -> Result<Self> {
        plan.check_against(nonces)?;
        Ok(Self { plan })
    }

    pub fn plan(&self) -> &AttackPlan {
        &self.plan
    }

    fn lookup(&self, nonce_index: usize, learned: Secret) -> Result<&UnitaryMatrix> {
        self.plan
            .v(nonce_index, learned)
            .ok_or(Error::PlanIncomplete {
                nonce: nonce_index + 1,
                secret: learned,
            })
    }
}

struct IfrRound<'a> {
    strategy: &'a IfrStrategy,
    retained: Option<StateVector>,
    learned: Option<Secret>,
}

impl RoundAdversary for IfrRound<'_> {
    fn intercept(&mut self, shares: &StateVector, _: &mut dyn RngCore) -> Result<DensityMatrix> {
        self.retained = Some(shares.clone());
        Ok(self.strategy.plan.alpha.density())
    }

    fn nonce_announced(
        &mut self,
        nonces: &NonceSet,
        nonce_index: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Option<UnitaryMatrix>> {
        let retained = self
            .retained
            .as_ref()
            .ok_or_else(|| Error::Protocol("nonce announced before interception".into()))?;
        let psi = nonces
            .get(nonce_index)
            .ok_or_else(|| Error::PlanMismatch(format!("no nonce {}", nonce_index + 1)))?;
        let s = measure(&reflect_and_measure_probs(psi, retained)?, rng)?;
        self.learned = Some(s);
        Ok(Some(self.strategy.lookup(nonce_index, s)?.clone()))
    }

    fn learned_secret(&self) -> Option<Secret> {
        self.learned
    }
}

impl AdversaryStrategy for IfrStrategy {
    fn label(&self) -> String {
        format!("ifr:{}", self.plan.policy.name())
    }

    fn begin_round(&self) -> Box<dyn RoundAdversary + '_> {
        Box::new(IfrRound {
            strategy: self,
            retained: None,
            learned: None,
        })
    }

    fn branches(
        &self,
        nonces: &NonceSet,
        nonce_index: usize,
        shares: &StateVector,
    ) -> Result<Vec<Branch>> {
        let psi = nonces
            .get(nonce_index)
            .ok_or_else(|| Error::PlanMismatch(format!("no nonce {}", nonce_index + 1)))?;
        let probs = reflect_and_measure_probs(psi, shares)?;
        let alpha = self.plan.alpha.density();
        let mut out = Vec::new();
        for (si, p) in probs.iter().enumerate() {
            if *p <= NEGLIGIBLE {
                continue;
            }
            let s = Secret::from_index(si)?;
            let v = self.lookup(nonce_index, s)?;
            out.push(Branch {
                probability: *p,
                joint: alpha.conjugate_by(&v.on_first_qubit()?)?,
                learned: Some(s),
            });
        }
        normalize_branches(&mut out);
        Ok(out)
    }
}
