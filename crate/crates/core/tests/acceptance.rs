//! Acceptance suite. Each test prints one `[PASS]` / `[FAIL]` line and then
//! asserts it. Run with `cargo test -p qsslab-core --test acceptance -- --nocapture`.

use qsslab::adversary::{
    symmetric_bell_state, synthesize_plan, synthesize_plan_with_alpha, Honest, IfrStrategy,
    ImrGuess, NonceGuess, Policy,
};
use qsslab::analysis::{
    basis_secrets, bloch_mean_bound, bob_reduced_shares, check_imr, check_recoverability,
    check_secrecy, optimize_fidelity_pure, optimize_fidelity_search, r_of_s, recovery_amplitude,
};
use qsslab::linalg::{fidelity, max_overlap_unitary, partial_trace_e, tensor, StateVector, C64};
use qsslab::nonces::{
    builtin_nonce_set, reflection, share_state, BuiltinNonceSet, NonceSet, Secret,
};
use qsslab::protocol::{
    estimate_detection, outcome_distribution, simulate, Mode, RoundConfig, Verdict,
};
use qsslab::sampling::{haar_state, haar_unitary_2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

const EXACT_TOL: f64 = 1e-9;
const PATH_AGREEMENT_TOL: f64 = 1e-6;
const SAMPLED_UNITARY_TOL: f64 = 1e-4;
const SIGMAS: f64 = 4.0;
const MC_SEED: u64 = 42;

fn verdict_line(criterion: u32, ok: bool, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {criterion}: {detail}");
    assert!(ok, "criterion {criterion}: {detail}");
}

fn hsu() -> NonceSet {
    builtin_nonce_set(BuiltinNonceSet::HsuI)
}

fn j() -> NonceSet {
    builtin_nonce_set(BuiltinNonceSet::ProposedJ)
}

/// Within `SIGMAS` binomial standard errors of `p` over `n` trials; a
/// degenerate `p` demands an exact match.
fn within_sigmas(observed: f64, p: f64, n: u64) -> bool {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    if sigma < 1e-12 {
        return (observed - p).abs() < EXACT_TOL;
    }
    (observed - p).abs() <= SIGMAS * sigma
}

#[test]
fn criterion_01_grover_identity() {
    let pp = tensor(&StateVector::plus(), &StateVector::plus()).unwrap();
    let mut worst: f64 = 0.0;
    for s in Secret::ALL {
        let shared = share_state(&pp, s).unwrap();
        let back = reflection(&pp).apply(&shared).unwrap().scale(c(-1.0, 0.0));
        let amp = s.state().inner(&back).unwrap();
        worst = worst.max((amp.norm_sqr() - 1.0).abs());
        worst = worst.max((amp - c(1.0, 0.0)).norm());
    }
    verdict_line(
        1,
        worst < EXACT_TOL,
        format!("-U_c U_s |++> = |s> for all s, worst error {worst:.2e}"),
    );
}

/// The share-state table of J: `(sign, Eve factor, Bob factor)` per row `s`
/// and column `i`.
const SHARE_TABLE: [[(f64, &str, &str); 4]; 4] = [
    [
        (-1.0, "+", "-"),
        (-1.0, "-", "+"),
        (-1.0, "+i", "-i"),
        (-1.0, "-i", "+i"),
    ],
    [
        (1.0, "-", "-"),
        (1.0, "+", "+"),
        (1.0, "-i", "-i"),
        (1.0, "+i", "+i"),
    ],
    [
        (1.0, "+", "+"),
        (1.0, "-", "-"),
        (1.0, "+i", "+i"),
        (1.0, "-i", "-i"),
    ],
    [
        (1.0, "-", "+"),
        (1.0, "+", "-"),
        (1.0, "-i", "+i"),
        (1.0, "+i", "-i"),
    ],
];

/// Bob's reduced share of J per row `s` and column `i`.
const BOB_TABLE: [[&str; 4]; 4] = [
    ["-", "+", "-i", "+i"],
    ["-", "+", "-i", "+i"],
    ["+", "-", "+i", "-i"],
    ["+", "-", "+i", "-i"],
];

fn axis(label: &str) -> StateVector {
    match label {
        "+" => StateVector::plus(),
        "-" => StateVector::minus(),
        "+i" => StateVector::plus_i(),
        "-i" => StateVector::minus_i(),
        other => panic!("unknown axis label {other}"),
    }
}

#[test]
fn criterion_02_share_and_reduced_tables() {
    let set = j();
    let mut worst: f64 = 0.0;
    for (si, s) in Secret::ALL.iter().enumerate() {
        for (i, psi) in set.states().iter().enumerate() {
            let (sign, e, b) = SHARE_TABLE[si][i];
            let want = tensor(&axis(e), &axis(b)).unwrap().scale(c(sign, 0.0));
            let got = share_state(psi, *s).unwrap();
            worst = worst.max(1.0 - want.overlap_sq(&got).unwrap());
            let bob = partial_trace_e(&got.density()).unwrap();
            worst = worst.max(bob.max_norm_distance(&axis(BOB_TABLE[si][i]).density()));
        }
    }
    verdict_line(
        2,
        worst < EXACT_TOL,
        format!("16 share states and 16 reduced states of proposed-J match, worst deviation {worst:.2e}"),
    );
}

#[test]
fn criterion_03_builtin_certification() {
    let mut ok = true;
    let mut parts = Vec::new();
    for (set, expected) in [(hsu(), 64), (j(), 16)] {
        let rec = check_recoverability(&set, &basis_secrets(), EXACT_TOL).unwrap();
        let sec = check_secrecy(&set, EXACT_TOL).unwrap();
        let imr = check_imr(&set, EXACT_TOL).unwrap();
        let halves = rec
            .checks
            .iter()
            .all(|c| (c.overlap - 0.5).abs() < EXACT_TOL);
        let good = rec.passed && halves && rec.checks.len() == expected && sec.passed && imr.passed;
        ok &= good;
        parts.push(format!(
            "{} {} overlaps dev {:.1e}, secrecy dev {:.1e}, imr dev {:.1e}",
            set.name(),
            rec.checks.len(),
            rec.worst_deviation,
            sec.deviations.iter().copied().fold(0.0, f64::max),
            imr.deviation
        ));
    }
    verdict_line(3, ok, parts.join("; "));
}

#[test]
fn criterion_04_fidelity_ceilings() {
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for s in Secret::ALL {
        let h = r_of_s(&hsu(), s).unwrap().value;
        let h_search = optimize_fidelity_search(&bob_reduced_shares(&hsu(), s).unwrap())
            .unwrap()
            .value;
        ok &= (h - 1.0).abs() < EXACT_TOL && (h_search - 1.0).abs() < EXACT_TOL;
        worst = worst.max((h - 1.0).abs()).max((h_search - 1.0).abs());

        let shares = bob_reduced_shares(&j(), s).unwrap();
        let fast = optimize_fidelity_pure(&shares).unwrap().value;
        let search = optimize_fidelity_search(&shares).unwrap().value;
        ok &= (fast - 0.5).abs() < EXACT_TOL && (search - 0.5).abs() < EXACT_TOL;
        ok &= (fast - search).abs() < PATH_AGREEMENT_TOL;
        worst = worst.max((fast - 0.5).abs()).max((search - 0.5).abs());
    }
    verdict_line(
        4,
        ok,
        format!("R(s) = 1 on hsu-I and 1/2 on proposed-J for every s, worst error {worst:.2e}"),
    );
}

#[test]
fn criterion_05_hao_attack() {
    let set = hsu();
    let plan =
        synthesize_plan_with_alpha(&set, Policy::TargetSecret, symmetric_bell_state()).unwrap();
    let mut worst: f64 = 0.0;
    for (i, psi) in set.states().iter().enumerate() {
        for s in Secret::ALL {
            let moved = plan
                .v(i, s)
                .unwrap()
                .on_first_qubit()
                .unwrap()
                .apply(&plan.alpha)
                .unwrap();
            worst = worst.max(1.0 - share_state(psi, s).unwrap().overlap_sq(&moved).unwrap());
        }
    }
    let strategy = IfrStrategy::new(&set, plan).unwrap();
    let exact = outcome_distribution(&set, 0.5, None, &strategy)
        .unwrap()
        .p_detect();
    let cfg = RoundConfig::new(set, MC_SEED);
    let rounds = simulate(&cfg, &strategy, 10_000).unwrap();
    let knows = rounds
        .iter()
        .filter(|t| t.learned_secret == Some(t.s))
        .count();
    let ok = worst < EXACT_TOL && exact.abs() < EXACT_TOL && knows == 10_000;
    verdict_line(
        5,
        ok,
        format!(
            "64 overlaps within {worst:.1e} of 1, exact detection {exact:.2e}, Eve learned s in {knows}/10000 rounds"
        ),
    );
}

#[test]
fn criterion_06_detection_floor_and_ceiling() {
    const ROUNDS: u64 = 100_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for set in [hsu(), j()] {
        for policy in [Policy::TargetSecret, Policy::Target01] {
            let name = policy.name();
            let is_target_01 = policy == Policy::Target01;
            let plan = synthesize_plan(&set, policy).unwrap();
            let strategy = IfrStrategy::new(&set, plan).unwrap();
            let exact = outcome_distribution(&set, 0.5, None, &strategy)
                .unwrap()
                .p_detect();
            if set.name() == "proposed-J" {
                ok &= exact >= 0.25 - EXACT_TOL;
            }
            if is_target_01 {
                ok &= exact <= 0.625 + EXACT_TOL;
            }
            let est =
                estimate_detection(&RoundConfig::new(set.clone(), MC_SEED), &strategy, ROUNDS)
                    .unwrap();
            let agree = within_sigmas(est.p_detect, exact, ROUNDS);
            ok &= agree;
            parts.push(format!(
                "{}/{name} exact {exact:.6} mc {:.5}±{:.5}",
                set.name(),
                est.p_detect,
                est.stderr
            ));
        }
    }
    verdict_line(6, ok, parts.join("; "));
}

#[test]
fn criterion_07_recovery_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut iff_ok = true;
    for _ in 0..1000 {
        let psi = haar_state(&mut rng, 4);
        let s = Secret::from_index(rng.random_range(0..4)).unwrap();
        let a = s.state().overlap_sq(&psi).unwrap();
        let direct = direct_recovery(&psi, s);
        worst = worst.max((direct - recovery_amplitude(a).unwrap()).abs());
        // Near a = 1/4 the deficit is 12 (a - 1/4)^2, so keep clear of both roots.
        if (a - 0.25).abs() > 1e-3 && (a - 1.0).abs() > 1e-3 {
            iff_ok &= direct < 1.0 - 1e-6;
        }

        // Same phases, amplitude on |s> forced to exactly 1/2.
        let forced = force_overlap(&psi, s, 0.5);
        let direct = direct_recovery(&forced, s);
        worst = worst.max((direct - recovery_amplitude(0.25).unwrap()).abs());
        iff_ok &= (direct - 1.0).abs() < EXACT_TOL;
    }
    verdict_line(
        7,
        worst < EXACT_TOL && iff_ok,
        format!("2000 pairs match a(3-4a)^2 within {worst:.2e}; recovery is 1 exactly at a = 1/4"),
    );
}

fn direct_recovery(psi: &StateVector, s: Secret) -> f64 {
    // Written out from the definitions rather than through share_state.
    let a: Vec<C64> = psi.amps().to_vec();
    let mut shared = a.clone();
    shared[s.index()] = -shared[s.index()];
    let proj: C64 = a.iter().zip(&shared).map(|(x, y)| x.conj() * y).sum();
    let back: Vec<C64> = shared
        .iter()
        .zip(&a)
        .map(|(y, x)| y - x * proj * 2.0)
        .collect();
    back[s.index()].norm_sqr()
}

fn force_overlap(psi: &StateVector, s: Secret, magnitude: f64) -> StateVector {
    let mut amps = psi.amps().to_vec();
    let on_s = amps[s.index()];
    let phase = if on_s.norm() > 0.0 {
        on_s / on_s.norm()
    } else {
        c(1.0, 0.0)
    };
    let rest: f64 = amps
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != s.index())
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let scale = ((1.0 - magnitude * magnitude) / rest).sqrt();
    for (k, a) in amps.iter_mut().enumerate() {
        *a = if k == s.index() {
            phase * magnitude
        } else {
            *a * scale
        };
    }
    StateVector::new(amps).unwrap()
}

#[test]
fn criterion_08_imr_overlap_law() {
    const ROUNDS: u64 = 100_000;
    let set = j();
    let results: Vec<(usize, usize, f64, f64, bool)> = (0..16usize)
        .into_par_iter()
        .map(|pair| {
            let (i, guess) = (pair / 4, pair % 4);
            let want = set.states()[guess].overlap_sq(&set.states()[i]).unwrap();
            let only_i = NonceSet::new("single", vec![set.states()[i].clone()]).unwrap();
            let strategy = ImrGuess::new(set.clone(), NonceGuess::Fixed(guess)).unwrap();
            let cfg = RoundConfig::new(only_i, MC_SEED + pair as u64);
            let est = estimate_detection(&cfg, &strategy, ROUNDS).unwrap();
            let got = est.eve_knows_secret as f64 / ROUNDS as f64;
            (i, guess, want, got, within_sigmas(got, want, ROUNDS))
        })
        .collect();
    let ok = results.iter().all(|r| r.4);
    let detail: Vec<String> = results
        .iter()
        .map(|(i, g, want, got, _)| format!("({},{}) {want:.3}/{got:.4}", i + 1, g + 1))
        .collect();
    verdict_line(
        8,
        ok,
        format!(
            "P(s'=s) vs |<psi_j|psi_i>|^2 over 16 pairs: {}",
            detail.join(" ")
        ),
    );
}

#[test]
fn criterion_09_pure_state_fidelity_floor() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut below_max, mut below_mean) = (0usize, 0usize);
    let (mut min_max, mut min_mean) = (f64::INFINITY, f64::INFINITY);
    let sets: Vec<Vec<_>> = (0..1000)
        .map(|_| {
            let k = rng.random_range(1..=16);
            (0..k).map(|_| haar_state(&mut rng, 2).density()).collect()
        })
        .collect();
    let values: Vec<(f64, f64)> = sets
        .par_iter()
        .map(|set| {
            let best = optimize_fidelity_search(set).unwrap().value;
            (best, bloch_mean_bound(set).unwrap())
        })
        .collect();
    for (best, at_mean) in values {
        if best < 0.75 - EXACT_TOL {
            below_max += 1;
        }
        if at_mean < 0.75 - EXACT_TOL {
            below_mean += 1;
        }
        min_max = min_max.min(best);
        min_mean = min_mean.min(at_mean);
    }
    verdict_line(
        9,
        below_max == 0 && below_mean == 0,
        format!(
            "average fidelity >= 3/4: ball maximum below in {below_max}/1000 sets (min {min_max:.4}), \
             Bloch-mean state below in {below_mean}/1000 (min {min_mean:.4})"
        ),
    );
}

#[test]
fn criterion_10_uhlmann_tightness() {
    const SAMPLES: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pairs: Vec<(StateVector, StateVector, u64)> = (0..500)
        .map(|_| {
            (
                haar_state(&mut rng, 4),
                haar_state(&mut rng, 4),
                rng.random(),
            )
        })
        .collect();
    let results: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(alpha, target, seed)| {
            let best = max_overlap_unitary(alpha, target).unwrap().achieved;
            let f = fidelity(
                &partial_trace_e(&alpha.density()).unwrap(),
                &partial_trace_e(&target.density()).unwrap(),
            )
            .unwrap();
            let mut r = ChaCha8Rng::seed_from_u64(*seed);
            let a = alpha.amps();
            let t = target.amps();
            let mut sampled: f64 = 0.0;
            for _ in 0..SAMPLES {
                let v = haar_unitary_2(&mut r);
                let m = v.matrix();
                // <target| (V (x) I) |alpha>, Eve index e, Bob index b.
                let mut amp = c(0.0, 0.0);
                for e in 0..2 {
                    for b in 0..2 {
                        let moved = m[(e, 0)] * a[b] + m[(e, 1)] * a[2 + b];
                        amp += t[2 * e + b].conj() * moved;
                    }
                }
                sampled = sampled.max(amp.norm_sqr());
            }
            ((best - f).abs(), sampled - best)
        })
        .collect();
    let worst_fid = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_excess = results
        .iter()
        .map(|r| r.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let widest_gap = results.iter().map(|r| -r.1).fold(0.0, f64::max);
    verdict_line(
        10,
        worst_fid < EXACT_TOL && worst_excess <= SAMPLED_UNITARY_TOL,
        format!(
            "500 pairs: |achieved - F| <= {worst_fid:.2e}; best of 1e5 random unitaries exceeds the optimum by at most \
             {worst_excess:.2e} and falls short by at most {widest_gap:.2e}"
        ),
    );
}

#[test]
fn criterion_11_honest_completeness() {
    let mut ok = true;
    let mut parts = Vec::new();
    for set in [hsu(), j()] {
        let cfg = RoundConfig::new(set.clone(), MC_SEED);
        let rounds = simulate(&cfg, &Honest, 10_000).unwrap();
        let mut retired = 0;
        for t in &rounds {
            ok &= t.measured_b == t.s;
            match (t.mode, t.verdict) {
                (Mode::Secret, Verdict::Retired(bit)) => {
                    ok &= t.secret_bit == Some(bit);
                    retired += 1;
                }
                (Mode::Detect, Verdict::RoundDropped) => {}
                _ => ok = false,
            }
        }
        parts.push(format!(
            "{}: {retired} retired, {} dropped",
            set.name(),
            rounds.len() - retired
        ));
    }
    verdict_line(
        11,
        ok,
        format!("b = s in every honest round; {}", parts.join("; ")),
    );
}
