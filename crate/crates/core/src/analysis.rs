//! Certification of nonce sets and the fake-share fidelity ceiling.
//!
//! Deviations between operators are max-norm (largest absolute entrywise
//! difference). A check passes iff its deviation is below the tolerance.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::adversary::{synthesize_plan, IfrStrategy, Policy};
use crate::error::{Error, Result};
use crate::linalg::{
    bloch_from_density, density_from_bloch, fidelity, partial_trace_e, tensor, BlochVector,
    DensityMatrix, StateVector, TOL,
};
use crate::nonces::{axis_states, reflection, share_state, NonceSet, Secret};
use crate::protocol::outcome_distribution;

/// One `(nonce, secret)` pair of a recoverability check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCheck {
    /// 1-based.
    pub nonce_index: usize,
    /// 0-based position in the secret list.
    pub secret_index: usize,
    /// `|<s|psi>|`.
    pub overlap: f64,
    /// `||<s|psi>| - 1/2|`.
    pub deviation: f64,
    /// `|<s|U_psi U_s|psi>|^2`.
    pub recovery_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverabilityReport {
    pub passed: bool,
    pub worst_deviation: f64,
    pub checks: Vec<OverlapCheck>,
}

/// `I - 2 |s><s|` applied to `v`, for an arbitrary two-qubit `s`.
fn recover(nonce: &StateVector, secret: &StateVector) -> Result<f64> {
    let shared = reflection(secret).apply(nonce)?;
    let back = reflection(nonce).apply(&shared)?;
    secret.overlap_sq(&back)
}

/// Checks `|<s|psi>| = 1/2` for every nonce and secret, and that the
/// recovery probability is 1. `psi = |s>` always fails.
pub fn check_recoverability(
    nonces: &NonceSet,
    secrets: &[StateVector],
    tol: f64,
) -> Result<RecoverabilityReport> {
    let mut checks = Vec::with_capacity(nonces.len() * secrets.len());
    for (i, psi) in nonces.states().iter().enumerate() {
        for (j, s) in secrets.iter().enumerate() {
            let overlap = s.inner(psi)?.norm();
            checks.push(OverlapCheck {
                nonce_index: i + 1,
                secret_index: j,
                overlap,
                deviation: (overlap - 0.5).abs(),
                recovery_probability: recover(psi, s)?,
            });
        }
    }
    let worst_deviation = checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let passed = checks.iter().all(|c| {
        c.deviation < tol && c.recovery_probability > 1.0 - tol && (c.overlap - 1.0).abs() > tol
    });
    Ok(RecoverabilityReport {
        passed,
        worst_deviation,
        checks,
    })
}

/// Standard-basis secrets `|00>, |01>, |10>, |11>`.
pub fn basis_secrets() -> Vec<StateVector> {
    Secret::ALL.iter().map(|s| s.state()).collect()
}

/// Recovery probability `a(3 - 4a)^2` of a nonce whose squared overlap with
/// the secret is `a`.
pub fn recovery_amplitude(overlap_sq: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&overlap_sq) {
        return Err(Error::Precondition(format!(
            "squared overlap {overlap_sq} outside [0, 1]"
        )));
    }
    let t = 3.0 - 4.0 * overlap_sq;
    Ok(overlap_sq * t * t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecrecyReport {
    pub passed: bool,
    /// Per nonce, deviation of the secret-averaged share from `I/4`.
    pub deviations: Vec<f64>,
}

fn share_average<'a>(shares: impl IntoIterator<Item = &'a StateVector>) -> Result<DensityMatrix> {
    let ds: Vec<DensityMatrix> = shares.into_iter().map(|v| v.density()).collect();
    DensityMatrix::mixture(&ds)
}

/// Whether the dealer's pair, averaged over the four secrets, is `I/4` for
/// every nonce.
pub fn check_secrecy(nonces: &NonceSet, tol: f64) -> Result<SecrecyReport> {
    let mixed = DensityMatrix::maximally_mixed(4);
    let mut deviations = Vec::with_capacity(nonces.len());
    for psi in nonces.states() {
        let shares = Secret::ALL
            .iter()
            .map(|&s| share_state(psi, s))
            .collect::<Result<Vec<_>>>()?;
        deviations.push(share_average(&shares)?.max_norm_distance(&mixed));
    }
    Ok(SecrecyReport {
        passed: deviations.iter().all(|&d| d < tol),
        deviations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImrReport {
    pub passed: bool,
    /// Deviation of the average over all nonces and secrets from `I/4`.
    pub deviation: f64,
}

/// Whether the dealer's pair averaged over every nonce and secret is `I/4`.
pub fn check_imr(nonces: &NonceSet, tol: f64) -> Result<ImrReport> {
    let mut shares = Vec::with_capacity(4 * nonces.len());
    for psi in nonces.states() {
        for s in Secret::ALL {
            shares.push(share_state(psi, s)?);
        }
    }
    let deviation = share_average(&shares)?.max_norm_distance(&DensityMatrix::maximally_mixed(4));
    Ok(ImrReport {
        passed: deviation < tol,
        deviation,
    })
}

/// Bob's reduced shares `Tr_E |psi_{i,s}><psi_{i,s}|` in nonce order.
pub fn bob_reduced_shares(nonces: &NonceSet, s: Secret) -> Result<Vec<DensityMatrix>> {
    nonces
        .states()
        .iter()
        .map(|psi| partial_trace_e(&share_state(psi, s)?.density()))
        .collect()
}

/// A maximizer of the average fidelity to a list of qubit states.
#[derive(Debug, Clone)]
pub struct FidelityOptimum {
    pub value: f64,
    pub bloch: BlochVector,
    pub optimizer: DensityMatrix,
}

impl FidelityOptimum {
    fn at(value: f64, bloch: BlochVector) -> Result<Self> {
        Ok(Self {
            value,
            bloch,
            optimizer: density_from_bloch(&bloch)?,
        })
    }
}

fn check_qubits(states: &[DensityMatrix]) -> Result<()> {
    if states.is_empty() {
        return Err(Error::Precondition("no states to average over".into()));
    }
    if let Some(bad) = states.iter().find(|s| s.dim() != 2) {
        return Err(Error::Dimension {
            expected: 2,
            found: bad.dim(),
        });
    }
    Ok(())
}

/// Closed form for pure inputs: the average fidelity to `g` is
/// `(1 + m.g) / 2` for the mean Bloch vector `m`, maximized on the sphere
/// at `m / |m|`, or by the maximally mixed state when `m = 0`.
pub fn optimize_fidelity_pure(states: &[DensityMatrix]) -> Result<FidelityOptimum> {
    check_qubits(states)?;
    if let Some(i) = states.iter().position(|s| !s.is_pure(TOL)) {
        return Err(Error::Precondition(format!("state {} is not pure", i + 1)));
    }
    let blochs = states
        .iter()
        .map(bloch_from_density)
        .collect::<Result<Vec<_>>>()?;
    let m = BlochVector::mean(&blochs);
    let norm = m.norm();
    if norm < TOL {
        return FidelityOptimum::at(0.5, BlochVector::ORIGIN);
    }
    FidelityOptimum::at(0.5 * (1.0 + norm), m.scaled(1.0 / norm))
}

/// Single-qubit fidelity between Bloch vectors `b` and `g`.
fn bloch_fidelity(b: &BlochVector, g: &BlochVector) -> f64 {
    let rb = (1.0 - b.dot(b)).max(0.0);
    let rg = (1.0 - g.dot(g)).max(0.0);
    0.5 * (1.0 + b.dot(g) + (rb * rg).sqrt())
}

fn project_to_ball(v: [f64; 3]) -> BlochVector {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let f = if n > 1.0 { 1.0 / n } else { 1.0 };
    BlochVector {
        x: v[0] * f,
        y: v[1] * f,
        z: v[2] * f,
    }
}

/// Strictly better than the incumbent, with ties going to the maximally
/// mixed state and then to the lexicographically smaller vector.
fn improves(value: f64, g: &BlochVector, best_value: f64, best: &BlochVector) -> bool {
    const TIE: f64 = 1e-14;
    if value > best_value + TIE {
        return true;
    }
    if value < best_value - TIE || best.norm() == 0.0 {
        return false;
    }
    g.norm() == 0.0 || g.as_array() < best.as_array()
}

/// Numerical maximizer valid for mixed inputs: a 0.1 grid over the ball, a
/// 0.01 grid around the best cell, then compass search with projection back
/// into the ball until the step falls below 1e-9. The objective is concave
/// on the ball, so the local optimum is global.
pub fn optimize_fidelity_search(states: &[DensityMatrix]) -> Result<FidelityOptimum> {
    check_qubits(states)?;
    let blochs = states
        .iter()
        .map(bloch_from_density)
        .collect::<Result<Vec<_>>>()?;
    let k = blochs.len() as f64;
    let objective = |g: &BlochVector| blochs.iter().map(|b| bloch_fidelity(b, g)).sum::<f64>() / k;

    let mut best = BlochVector::ORIGIN;
    let mut best_value = objective(&best);
    let consider = |g: BlochVector, best: &mut BlochVector, best_value: &mut f64| {
        if g.norm() > 1.0 + 1e-12 {
            return;
        }
        let v = objective(&g);
        if improves(v, &g, *best_value, best) {
            *best = g;
            *best_value = v;
        }
    };

    for (step, half_width) in [(0.1_f64, 1.0_f64), (0.01, 0.1)] {
        let center = best;
        let n = (half_width / step).round() as i32;
        for ix in -n..=n {
            for iy in -n..=n {
                for iz in -n..=n {
                    let g = BlochVector {
                        x: center.x + ix as f64 * step,
                        y: center.y + iy as f64 * step,
                        z: center.z + iz as f64 * step,
                    };
                    consider(g, &mut best, &mut best_value);
                }
            }
        }
    }

    let mut step = 0.01;
    while step > 1e-9 {
        let mut moved = false;
        for axis in 0..3 {
            for sign in [1.0, -1.0] {
                let mut p = best.as_array();
                p[axis] += sign * step;
                let g = project_to_ball(p);
                let v = objective(&g);
                if v > best_value + 1e-15 {
                    best = g;
                    best_value = v;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    FidelityOptimum::at(best_value.min(1.0), best)
}

/// Uses the closed form when every state is pure, otherwise the search.
pub fn optimize_fidelity(states: &[DensityMatrix]) -> Result<FidelityOptimum> {
    check_qubits(states)?;
    if states.iter().all(|s| s.is_pure(TOL)) {
        optimize_fidelity_pure(states)
    } else {
        optimize_fidelity_search(states)
    }
}

/// Largest average fidelity between Bob's reduced shares for secret `s` and
/// any single fake qubit state, with an attaining state.
pub fn r_of_s(nonces: &NonceSet, s: Secret) -> Result<FidelityOptimum> {
    optimize_fidelity(&bob_reduced_shares(nonces, s)?)
}

/// Average fidelity of pure qubit states to the state whose Bloch vector is
/// their mean. Equals `(1 + |m|^2) / 2`.
pub fn bloch_mean_bound(states: &[DensityMatrix]) -> Result<f64> {
    check_qubits(states)?;
    if let Some(i) = states.iter().position(|s| !s.is_pure(TOL)) {
        return Err(Error::Precondition(format!("state {} is not pure", i + 1)));
    }
    let blochs = states
        .iter()
        .map(bloch_from_density)
        .collect::<Result<Vec<_>>>()?;
    let gamma = density_from_bloch(&BlochVector::mean(&blochs))?;
    let mut total = 0.0;
    for s in states {
        total += fidelity(s, &gamma)?;
    }
    Ok(total / states.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionBounds {
    /// Smallest exact detection probability over the shipped plan policies.
    pub floor: f64,
    /// Exact detection probability of the target-01 plan.
    pub ceiling: f64,
}

/// Exact detection probability of a synthesized plan at mode prior 1/2.
pub fn plan_detection(nonces: &NonceSet, policy: Policy) -> Result<f64> {
    let plan = synthesize_plan(nonces, policy)?;
    let strategy = IfrStrategy::new(nonces, plan)?;
    Ok(outcome_distribution(nonces, 0.5, None, &strategy)?.p_detect())
}

pub fn detection_bounds(nonces: &NonceSet) -> Result<DetectionBounds> {
    let ceiling = plan_detection(nonces, Policy::Target01)?;
    let target_secret = plan_detection(nonces, Policy::TargetSecret)?;
    Ok(DetectionBounds {
        floor: ceiling.min(target_secret),
        ceiling,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub nonce_set_name: String,
    pub tolerance: f64,
    pub recoverable: bool,
    pub recoverability_deviation: f64,
    pub secret: bool,
    pub secrecy_deviations: Vec<f64>,
    pub imr_protected: bool,
    pub imr_deviation: f64,
    pub r_of_s: BTreeMap<Secret, f64>,
    /// Absent when the set is not recoverable, since no plan is synthesized.
    pub detection_bounds: Option<DetectionBounds>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.recoverable && self.secret && self.imr_protected
    }

    /// Which conditions fail, in check order.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.recoverable {
            out.push("recoverability");
        }
        if !self.secret {
            out.push("secrecy");
        }
        if !self.imr_protected {
            out.push("intercept-measure-resend protection");
        }
        out
    }
}

/// Runs every check on `nonces`.
pub fn certify(nonces: &NonceSet, tol: f64) -> Result<CertificationReport> {
    let recoverability = check_recoverability(nonces, &basis_secrets(), tol)?;
    let secrecy = check_secrecy(nonces, tol)?;
    let imr = check_imr(nonces, tol)?;
    let mut r = BTreeMap::new();
    for s in Secret::ALL {
        r.insert(s, r_of_s(nonces, s)?.value);
    }
    let detection_bounds = if recoverability.passed {
        Some(detection_bounds(nonces)?)
    } else {
        None
    };
    Ok(CertificationReport {
        nonce_set_name: nonces.name().to_string(),
        tolerance: tol,
        recoverable: recoverability.passed,
        recoverability_deviation: recoverability.worst_deviation,
        secret: secrecy.passed,
        secrecy_deviations: secrecy.deviations,
        imr_protected: imr.passed,
        imr_deviation: imr.deviation,
        r_of_s: r,
        detection_bounds,
    })
}

const AXIS_LABELS: [&str; 4] = ["+", "-", "+i", "-i"];

/// `|x>` or `-|x>|y>`-style label when `v` is a signed product of axis
/// states, up to a global phase otherwise marked with `~`.
pub fn product_label(v: &StateVector) -> Option<String> {
    let axes = axis_states();
    for (a, la) in axes.iter().zip(AXIS_LABELS) {
        for (b, lb) in axes.iter().zip(AXIS_LABELS) {
            let p = tensor(a, b).ok()?;
            if !v.same_ray(&p, 1e-9) {
                continue;
            }
            let phase = p.inner(v).ok()?;
            let sign = if (phase.re - 1.0).abs() < 1e-9 {
                ""
            } else if (phase.re + 1.0).abs() < 1e-9 {
                "-"
            } else {
                "~"
            };
            return Some(format!("{sign}|{la}>|{lb}>"));
        }
    }
    None
}

/// `|x><x|` label for an axis-state density matrix, `I/2` for the centre.
pub fn qubit_label(rho: &DensityMatrix) -> String {
    if rho.max_norm_distance(&DensityMatrix::maximally_mixed(2)) < 1e-9 {
        return "I/2".into();
    }
    for (a, l) in axis_states().iter().zip(AXIS_LABELS) {
        if rho.max_norm_distance(&a.density()) < 1e-9 {
            return format!("|{l}><{l}|");
        }
    }
    match bloch_from_density(rho) {
        Ok(b) => format!("({:.3}, {:.3}, {:.3})", b.x, b.y, b.z),
        Err(_) => "?".into(),
    }
}

fn table(
    out: &mut String,
    title: &str,
    nonces: &NonceSet,
    cell: impl Fn(&StateVector, Secret) -> Result<String>,
) -> Result<()> {
    let header: Vec<String> = (1..=nonces.len()).map(|i| format!("psi_{i}")).collect();
    let mut rows = Vec::new();
    for s in Secret::ALL {
        let mut row = vec![format!("s={s}")];
        for psi in nonces.states() {
            row.push(cell(psi, s)?);
        }
        rows.push(row);
    }
    let mut widths = vec![5usize];
    widths.extend(header.iter().map(|h| h.len()));
    for row in &rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let _ = writeln!(out, "{title}");
    let mut line = format!("{:<w$}", "", w = widths[0]);
    for (h, w) in header.iter().zip(&widths[1..]) {
        let _ = write!(line, " | {h:>w$}");
    }
    let _ = writeln!(out, "{line}");
    for row in rows {
        let mut line = format!("{:<w$}", row[0], w = widths[0]);
        for (c, w) in row[1..].iter().zip(&widths[1..]) {
            let _ = write!(line, " | {c:>w$}");
        }
        let _ = writeln!(out, "{line}");
    }
    Ok(())
}

/// Share states and Bob's reduced shares laid out nonce by secret.
pub fn share_tables(nonces: &NonceSet) -> Result<String> {
    let mut out = String::new();
    table(&mut out, "share states U_s|psi_i>", nonces, |psi, s| {
        let v = share_state(psi, s)?;
        Ok(product_label(&v).unwrap_or_else(|| "entangled".into()))
    })?;
    out.push('\n');
    table(&mut out, "Bob's reduced shares", nonces, |psi, s| {
        Ok(qubit_label(&partial_trace_e(
            &share_state(psi, s)?.density(),
        )?))
    })?;
    Ok(out)
}

impl fmt::Display for CertificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |ok: bool| if ok { "pass" } else { "FAIL" };
        let secrecy = self.secrecy_deviations.iter().copied().fold(0.0, f64::max);
        writeln!(f, "nonce set: {}", self.nonce_set_name)?;
        writeln!(
            f,
            "recoverable      {}  worst deviation {:.3e}",
            mark(self.recoverable),
            self.recoverability_deviation
        )?;
        writeln!(
            f,
            "secret           {}  worst deviation {:.3e}",
            mark(self.secret),
            secrecy
        )?;
        writeln!(
            f,
            "imr-protected    {}  deviation {:.3e}",
            mark(self.imr_protected),
            self.imr_deviation
        )?;
        for (s, r) in &self.r_of_s {
            writeln!(f, "R({s})            {r:.9}")?;
        }
        if let Some(b) = &self.detection_bounds {
            writeln!(f, "detection floor  {:.9}", b.floor)?;
            writeln!(f, "detection ceil.  {:.9}", b.ceiling)?;
        }
        Ok(())
    }
}
