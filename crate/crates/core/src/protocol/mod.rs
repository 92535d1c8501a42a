//! The purification protocol: noisy-pair preparation through amplitude
//! damping, entanglement swapping via the middle node's Bell measurement,
//! optional weak-measurement preprocessing, multi-round iteration, and the
//! enhancement predicates for both state families.
//!
//! Register layout for a swap is (A, B, B', C) = qubits (0, 1, 2, 3); the
//! middle node measures (1, 2) and the reduced Alice-Charlie state lives on
//! the outer qubits.

pub mod closed_form;

use rayon::prelude::*;

use crate::channels::amplitude_damping;
use crate::entanglement::{concurrence, concurrence_phi_initial};
use crate::error::{Error, Result};
use crate::measure::{bell_measure, weak_branch, MeasurementOutcome, WeakMeasurement, WeakSign};
use crate::qmat::{kron, Numerics, C64};
use crate::states::{chi_pair, phi_pair, phi_pair_flipped, to_density, BellLabel, DensityMatrix};

/// Which initial-state family the protocol runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// sqrt(a)|01> + sqrt(1-a)|10| with the flipped partner pair.
    Phi,
    /// First pair with weight a, second (flipped) pair with weight a'.
    PhiAsymmetric,
    /// sqrt(A)|00> + sqrt(1-A)|11> on both pairs.
    Chi,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Phi => "phi",
            Family::PhiAsymmetric => "phi-asym",
            Family::Chi => "chi",
        }
    }
}

/// Weak-measurement sign policy for rounds after the first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakPolicy {
    BothPlus,
    BothMinus,
    Mixed,
    None,
}

impl WeakPolicy {
    fn signs(&self) -> Option<(WeakSign, WeakSign)> {
        match self {
            WeakPolicy::BothPlus => Some((WeakSign::Plus, WeakSign::Plus)),
            WeakPolicy::BothMinus => Some((WeakSign::Minus, WeakSign::Minus)),
            WeakPolicy::Mixed => Some((WeakSign::Plus, WeakSign::Minus)),
            WeakPolicy::None => None,
        }
    }
}

/// Full protocol configuration. Parameters irrelevant to the chosen family
/// may be left `None`.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub family: Family,
    pub a: Option<f64>,
    pub a_prime: Option<f64>,
    pub big_a: Option<f64>,
    pub p: f64,
    pub b: Option<f64>,
    pub rounds: u32,
    pub weak_policy: WeakPolicy,
    pub accepted_bell: Vec<BellLabel>,
}

impl ProtocolConfig {
    pub fn phi(a: f64, p: f64) -> Self {
        Self {
            family: Family::Phi,
            a: Some(a),
            a_prime: None,
            big_a: None,
            p,
            b: None,
            rounds: 1,
            weak_policy: WeakPolicy::None,
            accepted_bell: vec![BellLabel::PsiPlus, BellLabel::PsiMinus],
        }
    }

    pub fn phi_asymmetric(a: f64, a_prime: f64, p: f64) -> Self {
        let mut cfg = Self::phi(a, p);
        cfg.family = Family::PhiAsymmetric;
        cfg.a_prime = Some(a_prime);
        cfg
    }

    pub fn chi(big_a: f64, p: f64) -> Self {
        Self {
            family: Family::Chi,
            a: None,
            a_prime: None,
            big_a: Some(big_a),
            p,
            b: None,
            rounds: 1,
            weak_policy: WeakPolicy::None,
            accepted_bell: vec![BellLabel::PsiPlus, BellLabel::PsiMinus],
        }
    }

    pub fn with_rounds(mut self, rounds: u32, policy: WeakPolicy, b: f64) -> Self {
        self.rounds = rounds;
        self.weak_policy = policy;
        self.b = Some(b);
        self
    }

    pub fn with_accepted(mut self, accepted: Vec<BellLabel>) -> Self {
        self.accepted_bell = accepted;
        self
    }

    fn param(&self, name: &'static str, v: Option<f64>) -> Result<f64> {
        v.ok_or(Error::InvalidConfig(format!(
            "{name} is required for family {}",
            self.family.as_str()
        )))
    }

    pub fn validate(&self) -> Result<()> {
        if self.accepted_bell.is_empty() {
            return Err(Error::InvalidConfig(
                "accepted_bell must be nonempty".into(),
            ));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidParameter {
                name: "rounds",
                value: 0.0,
                expected: "rounds >= 1",
            });
        }
        if !self.p.is_finite() || !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter {
                name: "p",
                value: self.p,
                expected: "a real in [0, 1]",
            });
        }
        if self.p == 1.0 {
            return Err(Error::NoEntanglement(
                "p = 1 destroys every excitation".into(),
            ));
        }
        match self.family {
            Family::Phi | Family::PhiAsymmetric => {
                let a = self.param("a", self.a)?;
                check_weight("a", a)?;
                if self.family == Family::PhiAsymmetric {
                    let ap = self.param("a_prime", self.a_prime)?;
                    check_weight("a_prime", ap)?;
                }
            }
            Family::Chi => {
                let big_a = self.param("A", self.big_a)?;
                check_weight("A", big_a)?;
            }
        }
        if self.rounds >= 2 {
            match self.weak_policy {
                WeakPolicy::BothPlus | WeakPolicy::BothMinus => {}
                _ => {
                    return Err(Error::InvalidConfig(
                        "iterated rounds require the both-M+ or both-M- weak policy".into(),
                    ))
                }
            }
            let b = self.param("b", self.b)?;
            if !b.is_finite() || b <= 0.0 || b >= 1.0 {
                return Err(Error::InvalidParameter {
                    name: "b",
                    value: b,
                    expected: "a real strictly inside (0, 1)",
                });
            }
        }
        Ok(())
    }
}

fn check_weight(name: &'static str, v: f64) -> Result<()> {
    if !v.is_finite() || !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParameter {
            name,
            value: v,
            expected: "a real in [0, 1]",
        });
    }
    if v == 0.0 || v == 1.0 {
        return Err(Error::NoEntanglement(format!(
            "{name} = {v} gives a product input state"
        )));
    }
    Ok(())
}

/// Per-round record of the followed protocol branch.
#[derive(Debug, Clone)]
pub struct RoundResult {
    pub round_index: u32,
    pub branch_label: String,
    /// Two-qubit Alice-Charlie state after this round.
    pub state: DensityMatrix,
    pub concurrence: f64,
    /// Probability of this round's branch: weak-measurement branches of
    /// both copies times the accepted Bell outcome.
    pub branch_probability: f64,
    /// Product of branch probabilities up to this round.
    pub cumulative_probability: f64,
    /// Raw noisy input pairs consumed per attempt along the success path
    /// (each round doubles the requirement).
    pub raw_pairs_consumed: u64,
}

/// Both noisy pairs after transmission through the local damping channels.
pub fn prepare_noisy_pairs(
    cfg: &ProtocolConfig,
    tol: &Numerics,
) -> Result<(DensityMatrix, DensityMatrix)> {
    cfg.validate()?;
    match cfg.family {
        Family::Phi => {
            let a = cfg.param("a", cfg.a)?;
            prepare_phi_pairs_raw(a, a, cfg.p, true, tol)
        }
        Family::PhiAsymmetric => {
            let a = cfg.param("a", cfg.a)?;
            let ap = cfg.param("a_prime", cfg.a_prime)?;
            prepare_phi_pairs_raw(a, ap, cfg.p, true, tol)
        }
        Family::Chi => {
            let big_a = cfg.param("A", cfg.big_a)?;
            let ch = amplitude_damping(cfg.p, tol)?;
            let pair = ch.apply_local_pair(&to_density(&chi_pair(big_a, tol)?, tol)?, tol)?;
            Ok((pair.clone(), pair))
        }
    }
}

/// Building block shared with the negative-result checks: damped phi pairs
/// with the second pair optionally left unflipped.
pub fn prepare_phi_pairs_raw(
    a: f64,
    a_second: f64,
    p: f64,
    flip_second: bool,
    tol: &Numerics,
) -> Result<(DensityMatrix, DensityMatrix)> {
    let ch = amplitude_damping(p, tol)?;
    let first = ch.apply_local_pair(&to_density(&phi_pair(a, tol)?, tol)?, tol)?;
    let second_pure = if flip_second {
        phi_pair_flipped(a_second, tol)?
    } else {
        phi_pair(a_second, tol)?
    };
    let second = ch.apply_local_pair(&to_density(&second_pure, tol)?, tol)?;
    Ok((first, second))
}

/// One entanglement swap: build the four-qubit register (A, B, B', C),
/// Bell-measure (1, 2), and return a round record per accepted outcome
/// (ordered Psi+, Psi-, Phi+, Phi-).
pub fn swap_round(
    pair_ab: &DensityMatrix,
    pair_bc: &DensityMatrix,
    accepted: &[BellLabel],
    tol: &Numerics,
) -> Result<Vec<RoundResult>> {
    if pair_ab.n_qubits() != 2 || pair_bc.n_qubits() != 2 {
        return Err(Error::Dimension(
            "swap_round expects two 2-qubit pairs".into(),
        ));
    }
    if accepted.is_empty() {
        return Err(Error::InvalidConfig(
            "accepted_bell must be nonempty".into(),
        ));
    }
    let joint = DensityMatrix::new(4, kron(pair_ab.matrix(), pair_bc.matrix()), tol)?;
    let outcomes = bell_measure(&joint, (1, 2), tol)?;
    let mut results = Vec::new();
    for (idx, &label) in BellLabel::ALL.iter().enumerate() {
        if !accepted.contains(&label) {
            continue;
        }
        let outcome = &outcomes[idx];
        let state = outcome.post_state.clone().ok_or_else(|| {
            Error::ZeroProbabilityBranch(format!(
                "accepted outcome {} has probability {:.3e}",
                label, outcome.probability
            ))
        })?;
        let c = concurrence(&state, tol)?.value;
        results.push(RoundResult {
            round_index: 1,
            branch_label: label.as_str().to_string(),
            state,
            concurrence: c,
            branch_probability: outcome.probability,
            cumulative_probability: outcome.probability,
            raw_pairs_consumed: 2,
        });
    }
    Ok(results)
}

/// Qubits to weakly measure, with the sign branch kept for each.
pub type WeakTargets = Vec<(usize, WeakSign)>;

/// Sequential weak measurements on the listed qubits, keeping the given
/// sign branch of each; returns the combined branch probability and state.
pub fn weak_preprocess(
    state: &DensityMatrix,
    targets_and_signs: &[(usize, WeakSign)],
    b: f64,
    tol: &Numerics,
) -> Result<MeasurementOutcome> {
    let wm = WeakMeasurement::new(b)?;
    let mut probability = 1.0;
    let mut label = String::new();
    let mut current = state.clone();
    for &(target, sign) in targets_and_signs {
        let outcome = weak_branch(&current, target, &wm, sign, tol)?;
        probability *= outcome.probability;
        label.push_str(sign.as_str());
        current = outcome.post_state.ok_or_else(|| {
            Error::ZeroProbabilityBranch(format!(
                "weak branch {} on qubit {} has probability {:.3e}",
                sign, target, outcome.probability
            ))
        })?;
    }
    Ok(MeasurementOutcome {
        label,
        probability,
        post_state: Some(current),
    })
}

/// Run the full protocol, following the preferred accepted Bell branch each
/// round (Psi+ before Psi- before Phi+-). Rounds after the first consume two
/// fresh copies of the previous round's output: the phi families weakly
/// measure Alice's qubit of copy 1 and Charlie's qubit of copy 2, the chi
/// family weakly measures both qubits of each copy, and the middle node then
/// swaps. Returns one record per round.
pub fn run_protocol(cfg: &ProtocolConfig, tol: &Numerics) -> Result<Vec<RoundResult>> {
    cfg.validate()?;
    let (pair_ab, pair_bc) = prepare_noisy_pairs(cfg, tol)?;
    let first = swap_round(&pair_ab, &pair_bc, &cfg.accepted_bell, tol)?
        .into_iter()
        .next()
        .expect("accepted_bell validated nonempty");

    let mut results = vec![first];
    for k in 2..=cfg.rounds {
        let (s1, s2) = cfg
            .weak_policy
            .signs()
            .ok_or_else(|| Error::InvalidConfig("iterated rounds require a weak policy".into()))?;
        let b = cfg.param("b", cfg.b)?;
        let prev = results.last().expect("round 1 present");
        let current = &prev.state;

        let (targets_first, targets_second): (WeakTargets, WeakTargets) = match cfg.family {
            // Copy 1 is measured on Alice's qubit, copy 2 on Charlie's.
            Family::Phi | Family::PhiAsymmetric => (vec![(0, s1)], vec![(1, s2)]),
            // The chi preprocessing acts on both qubits of each copy.
            Family::Chi => (vec![(0, s1), (1, s1)], vec![(0, s2), (1, s2)]),
        };
        let copy1 = weak_preprocess(current, &targets_first, b, tol)?;
        let copy2 = weak_preprocess(current, &targets_second, b, tol)?;
        let state1 = copy1.post_state.expect("weak_preprocess returns a state");
        let state2 = copy2.post_state.expect("weak_preprocess returns a state");

        let chosen = swap_round(&state1, &state2, &cfg.accepted_bell, tol)?
            .into_iter()
            .next()
            .expect("accepted_bell validated nonempty");

        let branch_probability = copy1.probability * copy2.probability * chosen.branch_probability;
        if branch_probability <= tol.atol {
            return Err(Error::ZeroProbabilityBranch(format!(
                "round {k} branch probability {branch_probability:.3e}"
            )));
        }
        let cumulative = results.last().unwrap().cumulative_probability * branch_probability;
        if cumulative <= 0.0 {
            return Err(Error::ZeroProbabilityBranch(format!(
                "cumulative probability underflowed at round {k}"
            )));
        }
        results.push(RoundResult {
            round_index: k,
            branch_label: format!("{}{}/{}", copy1.label, copy2.label, chosen.branch_label),
            state: chosen.state,
            concurrence: chosen.concurrence,
            branch_probability,
            cumulative_probability: cumulative,
            raw_pairs_consumed: 1u64.checked_shl(k).unwrap_or(u64::MAX),
        });
    }
    Ok(results)
}

/// Round-2 concurrence for an arbitrary pair of weak-measurement signs,
/// obtained by direct simulation (the mixed-sign combinations have no
/// printed closed form).
pub fn second_round_concurrence(
    a: f64,
    p: f64,
    b: f64,
    signs: (WeakSign, WeakSign),
    tol: &Numerics,
) -> Result<f64> {
    let cfg = ProtocolConfig::phi(a, p);
    let (pair_ab, pair_bc) = prepare_noisy_pairs(&cfg, tol)?;
    let accepted = [BellLabel::PsiPlus];
    let first = swap_round(&pair_ab, &pair_bc, &accepted, tol)?.remove(0);
    let copy1 = weak_preprocess(&first.state, &[(0, signs.0)], b, tol)?;
    let copy2 = weak_preprocess(&first.state, &[(1, signs.1)], b, tol)?;
    let second = swap_round(
        &copy1.post_state.expect("state"),
        &copy2.post_state.expect("state"),
        &accepted,
        tol,
    )?
    .remove(0);
    Ok(second.concurrence)
}

/// Enhancement verdict for one weak-policy sign combination.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdCase {
    pub signs: (WeakSign, WeakSign),
    pub c2: f64,
    pub enhanced: bool,
}

/// Round-2 vs round-1 comparison for all four sign combinations.
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub a: f64,
    pub p: f64,
    pub b: f64,
    pub c1: f64,
    pub cases: [ThresholdCase; 4],
}

pub fn threshold_checks(a: f64, p: f64, b: f64, tol: &Numerics) -> Result<ThresholdReport> {
    let c1 = concurrence_phi_round1(a, p, tol)?;
    let combos = [
        (WeakSign::Plus, WeakSign::Plus),
        (WeakSign::Plus, WeakSign::Minus),
        (WeakSign::Minus, WeakSign::Plus),
        (WeakSign::Minus, WeakSign::Minus),
    ];
    let mut cases = Vec::with_capacity(4);
    for signs in combos {
        let c2 = second_round_concurrence(a, p, b, signs, tol)?;
        cases.push(ThresholdCase {
            signs,
            c2,
            enhanced: c2 > c1 + tol.compare,
        });
    }
    Ok(ThresholdReport {
        a,
        p,
        b,
        c1,
        cases: [cases[0], cases[1], cases[2], cases[3]],
    })
}

fn concurrence_phi_round1(a: f64, p: f64, tol: &Numerics) -> Result<f64> {
    let cfg = ProtocolConfig::phi(a, p);
    let (pair_ab, pair_bc) = prepare_noisy_pairs(&cfg, tol)?;
    Ok(swap_round(&pair_ab, &pair_bc, &[BellLabel::PsiPlus], tol)?[0].concurrence)
}

/// Support subspace of the general purifiability condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportSubspace {
    /// span{|00>, |01>, |10>}
    LowerTriple,
    /// span{|01>, |10>, |11>}
    UpperTriple,
}

/// Evaluation of the purifiability predicate: the state must live in one of
/// the two three-basis subspaces and satisfy rho22 rho33 = rho23 rho32
/// (1-based indices; the entries over |01> and |10>).
#[derive(Debug, Clone)]
pub struct PurifiabilityCheck {
    pub holds: bool,
    pub lhs: C64,
    pub rhs: C64,
    pub subspace: Option<SupportSubspace>,
}

pub fn purifiability_condition(rho: &DensityMatrix, tol: &Numerics) -> PurifiabilityCheck {
    debug_assert_eq!(rho.n_qubits(), 2);
    let m = rho.matrix();
    let support_excludes = |idx: usize| -> bool {
        (0..4).all(|k| m.get(idx, k).norm() <= tol.atol && m.get(k, idx).norm() <= tol.atol)
    };
    let subspace = if support_excludes(3) {
        Some(SupportSubspace::LowerTriple)
    } else if support_excludes(0) {
        Some(SupportSubspace::UpperTriple)
    } else {
        None
    };
    let lhs = m.get(1, 1) * m.get(2, 2);
    let rhs = m.get(1, 2) * m.get(2, 1);
    let holds = subspace.is_some() && (lhs - rhs).norm() <= tol.atol;
    PurifiabilityCheck {
        holds,
        lhs,
        rhs,
        subspace,
    }
}

/// Per-point grid evaluation used by region masks and the scan surface.
#[derive(Debug, Clone, Copy)]
pub struct GridEval {
    pub c_initial: f64,
    pub c_final: f64,
    pub enhanced: bool,
    /// Cumulative branch probability through all requested rounds.
    pub branch_probability: f64,
}

/// Scalar recurrence for the phi chain under the both-M+ / both-M- policy:
/// tracks the normalized (|00> weight, Psi weight) pair round by round.
/// Cross-validated against both the closed forms and the full simulator.
pub fn phi_chain(
    a: f64,
    p: f64,
    b: Option<f64>,
    policy: WeakPolicy,
    rounds: u32,
) -> Result<Vec<(f64, f64, f64)>> {
    // returns (concurrence, branch probability, cumulative) per round
    if rounds == 0 {
        return Err(Error::InvalidParameter {
            name: "rounds",
            value: 0.0,
            expected: "rounds >= 1",
        });
    }
    check_weight("a", a)?;
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
            expected: "a real in [0, 1)",
        });
    }
    let q = 1.0 - p;
    let half_n = p * q * a + q * q * a * (1.0 - a);
    if half_n <= 0.0 {
        return Err(Error::NoEntanglement("empty swap branch".into()));
    }
    let n = 2.0 * half_n;
    let mut alpha = 2.0 * p * q * a / n; // |00> weight
    let mut beta = q * q * a * (1.0 - a) / n; // half the Psi weight
    let mut out = vec![(2.0 * beta, half_n, half_n)];
    if rounds == 1 {
        return Ok(out);
    }
    let b = b.ok_or(Error::InvalidConfig("iterated rounds require b".into()))?;
    let c = match policy {
        WeakPolicy::BothPlus => b,
        WeakPolicy::BothMinus => 1.0 - b,
        _ => {
            return Err(Error::InvalidConfig(
                "phi_chain supports the both-M+ and both-M- policies".into(),
            ))
        }
    };
    if !c.is_finite() || c <= 0.0 || c >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            expected: "a real in (0, 1)",
        });
    }
    let mut cumulative = half_n;
    for _ in 2..=rounds {
        let w0 = alpha * c;
        let w1 = beta;
        let total = w0 * w1 * c + w1 * w1 * c * (1.0 - c);
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityBranch("chain collapsed".into()));
        }
        alpha = w0 * w1 * c / total;
        beta = w1 * w1 * c * (1.0 - c) / (2.0 * total);
        cumulative *= total;
        out.push((2.0 * beta, total, cumulative));
    }
    Ok(out)
}

/// Evaluate one (a, p) grid point of the symmetric phi family for the given
/// accepted Bell outcome. Psi branches use the closed-form chain (enhanced
/// means the full strict chain C(n) > .. > C(1) > C(initial)); Phi branches
/// are simulated and support a single round.
pub fn evaluate_phi_point(
    a: f64,
    p: f64,
    b: Option<f64>,
    rounds: u32,
    label: BellLabel,
    tol: &Numerics,
) -> Result<GridEval> {
    evaluate_phi_point_with_policy(a, p, b, WeakPolicy::BothPlus, rounds, label, tol)
}

/// As `evaluate_phi_point`, with the weak-measurement sign policy for the
/// iterated rounds made explicit.
pub fn evaluate_phi_point_with_policy(
    a: f64,
    p: f64,
    b: Option<f64>,
    policy: WeakPolicy,
    rounds: u32,
    label: BellLabel,
    tol: &Numerics,
) -> Result<GridEval> {
    let c_initial = concurrence_phi_initial(a, p)?;
    match label {
        BellLabel::PsiPlus | BellLabel::PsiMinus => {
            let chain = phi_chain(a, p, b, policy, rounds)?;
            let mut enhanced = chain[0].0 > c_initial + tol.compare;
            for w in chain.windows(2) {
                enhanced &= w[1].0 > w[0].0 + tol.compare;
            }
            let (c_final, _, cumulative) = *chain.last().expect("rounds >= 1");
            Ok(GridEval {
                c_initial,
                c_final,
                enhanced,
                branch_probability: cumulative,
            })
        }
        BellLabel::PhiPlus | BellLabel::PhiMinus => {
            if rounds != 1 {
                return Err(Error::InvalidConfig(
                    "Phi-branch evaluation supports a single round".into(),
                ));
            }
            let (pair_ab, pair_bc) = prepare_phi_pairs_raw(a, a, p, true, tol)?;
            let result = swap_round(&pair_ab, &pair_bc, &[label], tol)?.remove(0);
            Ok(GridEval {
                c_initial,
                c_final: result.concurrence,
                enhanced: result.concurrence > c_initial + tol.compare,
                branch_probability: result.branch_probability,
            })
        }
    }
}

/// Evaluate one (a', a) grid point of the asymmetric family at fixed p
/// (single round, simulated). Enhancement is measured against the stronger
/// of the two input pairs.
pub fn evaluate_phi_asym_point(
    a: f64,
    a_prime: f64,
    p: f64,
    label: BellLabel,
    tol: &Numerics,
) -> Result<GridEval> {
    let c_first = concurrence_phi_initial(a, p)?;
    let c_second = concurrence_phi_initial(a_prime, p)?;
    let c_initial = c_first.max(c_second);
    let (pair_ab, pair_bc) = prepare_phi_pairs_raw(a, a_prime, p, true, tol)?;
    let result = swap_round(&pair_ab, &pair_bc, &[label], tol)?.remove(0);
    Ok(GridEval {
        c_initial,
        c_final: result.concurrence,
        enhanced: result.concurrence > c_initial + tol.compare,
        branch_probability: result.branch_probability,
    })
}

/// Evaluate one (A, p) grid point of the chi family (single swap round,
/// simulated), optionally followed by the both-M+ weak step of strength b.
pub fn evaluate_chi_point(
    big_a: f64,
    p: f64,
    weak_b: Option<f64>,
    label: BellLabel,
    tol: &Numerics,
) -> Result<GridEval> {
    evaluate_chi_point_with_sign(big_a, p, weak_b, WeakSign::Plus, label, tol)
}

/// As `evaluate_chi_point`, with the weak step's sign made explicit.
pub fn evaluate_chi_point_with_sign(
    big_a: f64,
    p: f64,
    weak_b: Option<f64>,
    weak_sign: WeakSign,
    label: BellLabel,
    tol: &Numerics,
) -> Result<GridEval> {
    let cfg = ProtocolConfig::chi(big_a, p);
    let (pair_ab, pair_bc) = prepare_noisy_pairs(&cfg, tol)?;
    let c_initial = concurrence(&pair_ab, tol)?.value;
    let result = swap_round(&pair_ab, &pair_bc, &[label], tol)?.remove(0);
    let (c_final, branch_probability) = match weak_b {
        None => (result.concurrence, result.branch_probability),
        Some(b) => {
            let weak = weak_preprocess(&result.state, &[(0, weak_sign), (1, weak_sign)], b, tol)?;
            let state = weak.post_state.expect("weak_preprocess returns a state");
            (
                concurrence(&state, tol)?.value,
                result.branch_probability * weak.probability,
            )
        }
    };
    Ok(GridEval {
        c_initial,
        c_final,
        enhanced: c_final > c_initial + tol.compare,
        branch_probability,
    })
}

/// Region request: axis1 is the damping probability p for the phi and chi
/// families and the second-pair weight a' for the asymmetric family (whose
/// p is then fixed); axis2 is the state weight (a or A).
#[derive(Debug, Clone)]
pub struct RegionRequest {
    pub family: Family,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub fixed_p: Option<f64>,
    pub b: Option<f64>,
    /// Sign policy for iterated phi rounds and the chi weak step.
    pub weak_policy: WeakPolicy,
    pub rounds: u32,
    pub label: BellLabel,
    /// Chi family only: apply the post-swap weak step of strength b.
    pub chi_weak_step: bool,
}

/// Boolean enhancement mask over the requested grid, axis1-major. Grid
/// points are evaluated in parallel; the output layout is deterministic.
pub fn enhancement_region(req: &RegionRequest, tol: &Numerics) -> Result<Vec<Vec<bool>>> {
    let evals = region_grid(req, tol)?;
    Ok(evals
        .into_iter()
        .map(|row| row.into_iter().map(|e| e.enhanced).collect())
        .collect())
}

/// Full grid evaluation, axis1-major, parallel over rows.
pub fn region_grid(req: &RegionRequest, tol: &Numerics) -> Result<Vec<Vec<GridEval>>> {
    if req.axis1.len() < 2 || req.axis2.len() < 2 {
        return Err(Error::InvalidConfig(
            "region grids need at least 2 points per axis".into(),
        ));
    }
    let chi_sign = match req.weak_policy {
        WeakPolicy::BothMinus => WeakSign::Minus,
        _ => WeakSign::Plus,
    };
    req.axis1
        .par_iter()
        .map(|&x1| {
            req.axis2
                .iter()
                .map(|&x2| match req.family {
                    Family::Phi => evaluate_phi_point_with_policy(
                        x2,
                        x1,
                        req.b,
                        req.weak_policy,
                        req.rounds,
                        req.label,
                        tol,
                    ),
                    Family::PhiAsymmetric => {
                        let p = req.fixed_p.ok_or(Error::InvalidConfig(
                            "asymmetric regions need a fixed p".into(),
                        ))?;
                        evaluate_phi_asym_point(x2, x1, p, req.label, tol)
                    }
                    Family::Chi => evaluate_chi_point_with_sign(
                        x2,
                        x1,
                        if req.chi_weak_step { req.b } else { None },
                        chi_sign,
                        req.label,
                        tol,
                    ),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::concurrence_phi_roundn;
    use crate::measure::weak_measure;
    use crate::qmat::{embed_on_qubit, ComplexMatrix};

    const TOL: Numerics = Numerics::DEFAULT;

    #[test]
    fn prepare_matches_closed_forms() {
        let cfg = ProtocolConfig::phi(0.3, 0.1);
        let (ab, bc) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        let expected_ab = closed_form::phi_input_pair(0.3, 0.1, false).unwrap();
        let expected_bc = closed_form::phi_input_pair(0.3, 0.1, true).unwrap();
        assert!(ab.matrix().max_abs_diff(&expected_ab) < 1e-14);
        assert!(bc.matrix().max_abs_diff(&expected_bc) < 1e-14);

        let cfg = ProtocolConfig::chi(0.9, 0.1);
        let (ab, _) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        let expected = closed_form::chi_input_pair(0.9, 0.1).unwrap();
        assert!(ab.matrix().max_abs_diff(&expected) < 1e-14);

        // p = 0 keeps the pure projectors.
        let cfg = ProtocolConfig::phi(0.3, 0.0);
        let (ab, _) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        assert!((ab.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn swap_round_matches_closed_form_state_and_probability() {
        let (a, p) = (0.3, 0.1);
        let cfg = ProtocolConfig::phi(a, p);
        let (ab, bc) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        let results =
            swap_round(&ab, &bc, &[BellLabel::PsiPlus, BellLabel::PsiMinus], &TOL).unwrap();
        assert_eq!(results.len(), 2);
        for r in &results {
            let label = if r.branch_label == "Psi+" {
                BellLabel::PsiPlus
            } else {
                BellLabel::PsiMinus
            };
            let (prob, state) = closed_form::phi_swap_state(a, p, label).unwrap();
            assert!((r.branch_probability - prob).abs() < 1e-12);
            assert!((r.branch_probability - 0.1971).abs() < 1e-12);
            assert!(r.state.matrix().max_abs_diff(&state) < 1e-12);
        }
    }

    #[test]
    fn asymmetric_swap_matches_closed_form_both_signs() {
        let (a, ap, p) = (0.3, 0.4, 0.1);
        let cfg = ProtocolConfig::phi_asymmetric(a, ap, p);
        let (ab, bc) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        for label in [BellLabel::PsiPlus, BellLabel::PsiMinus] {
            let r = swap_round(&ab, &bc, &[label], &TOL).unwrap().remove(0);
            let (prob, state) = closed_form::phi_asymmetric_swap_state(a, ap, p, label).unwrap();
            assert!((r.branch_probability - prob).abs() < 1e-12);
            assert!(r.state.matrix().max_abs_diff(&state) < 1e-12);
        }
    }

    #[test]
    fn chi_swap_matches_closed_form_and_true_probability() {
        let (big_a, p) = (0.9, 0.1);
        let cfg = ProtocolConfig::chi(big_a, p);
        let (ab, bc) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        let r = swap_round(&ab, &bc, &[BellLabel::PsiPlus], &TOL)
            .unwrap()
            .remove(0);
        let (prob, state) = closed_form::chi_swap_state(big_a, p, BellLabel::PsiPlus).unwrap();
        assert!((prob - 0.0819).abs() < 1e-12);
        assert!((r.branch_probability - prob).abs() < 1e-12);
        assert!(r.state.matrix().max_abs_diff(&state) < 1e-12);
    }

    #[test]
    fn weak_preprocess_matches_closed_forms() {
        let (a, p, b) = (0.3, 0.1, 0.22);
        let cfg = ProtocolConfig::phi(a, p);
        let (ab, bc) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        let first = swap_round(&ab, &bc, &[BellLabel::PsiPlus], &TOL)
            .unwrap()
            .remove(0);

        // M+ on Alice's qubit of copy 1.
        let got = weak_preprocess(&first.state, &[(0, WeakSign::Plus)], b, &TOL).unwrap();
        let (p_prime, expected) =
            closed_form::phi_weak_state(a, p, b, BellLabel::PsiPlus, WeakSign::Plus, 0).unwrap();
        assert!((got.probability - p_prime).abs() < 1e-12);
        assert!((p_prime - 0.4616438356164384).abs() < 1e-15);
        assert!(got.post_state.unwrap().matrix().max_abs_diff(&expected) < 1e-12);

        // M+ on Charlie's qubit of copy 2 gives the flipped form with the
        // same probability.
        let got = weak_preprocess(&first.state, &[(1, WeakSign::Plus)], b, &TOL).unwrap();
        let (p2, expected) =
            closed_form::phi_weak_state(a, p, b, BellLabel::PsiPlus, WeakSign::Plus, 1).unwrap();
        assert!((got.probability - p2).abs() < 1e-12);
        assert!((p2 - p_prime).abs() < 1e-15);
        assert!(got.post_state.unwrap().matrix().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn chi_weak_step_matches_closed_form() {
        let (big_a, p, b) = (0.9, 0.1, 0.25);
        let cfg = ProtocolConfig::chi(big_a, p);
        let (ab, bc) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        let r = swap_round(&ab, &bc, &[BellLabel::PsiPlus], &TOL)
            .unwrap()
            .remove(0);
        let weak = weak_preprocess(
            &r.state,
            &[(0, WeakSign::Plus), (1, WeakSign::Plus)],
            b,
            &TOL,
        )
        .unwrap();
        let (prob, expected) =
            closed_form::chi_weak_state(big_a, p, b, BellLabel::PsiPlus, WeakSign::Plus).unwrap();
        assert!((weak.probability - prob).abs() < 1e-12);
        assert!(weak.post_state.unwrap().matrix().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn balanced_weak_step_is_identity_with_quarter_probability() {
        let cfg = ProtocolConfig::phi(0.3, 0.1);
        let (ab, bc) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        let r = swap_round(&ab, &bc, &[BellLabel::PsiPlus], &TOL)
            .unwrap()
            .remove(0);
        let weak = weak_preprocess(
            &r.state,
            &[(0, WeakSign::Plus), (1, WeakSign::Plus)],
            0.5,
            &TOL,
        )
        .unwrap();
        assert!((weak.probability - 0.25).abs() < 1e-12);
        assert!(
            weak.post_state
                .unwrap()
                .matrix()
                .max_abs_diff(r.state.matrix())
                < 1e-12
        );
    }

    #[test]
    fn run_protocol_round_sequence_and_probabilities() {
        let cfg = ProtocolConfig::phi(0.3, 0.1).with_rounds(3, WeakPolicy::BothPlus, 0.22);
        let rounds = run_protocol(&cfg, &TOL).unwrap();
        assert_eq!(rounds.len(), 3);
        assert!((rounds[0].concurrence - 0.863013698630137).abs() < 1e-10);
        assert!((rounds[1].concurrence - 0.9178184534927157).abs() < 1e-10);
        assert!((rounds[2].concurrence - 0.9519187784985547).abs() < 1e-10);
        assert!((rounds[0].branch_probability - 0.1971).abs() < 1e-12);
        // Cumulative probability multiplies both weak branches and the Bell
        // branch each round, and is monotone nonincreasing.
        assert!((rounds[1].branch_probability - 0.03481255395008443).abs() < 1e-12);
        let mut last = 1.0;
        for (k, r) in rounds.iter().enumerate() {
            assert_eq!(r.round_index as usize, k + 1);
            assert!(r.cumulative_probability > 0.0 && r.cumulative_probability <= last);
            last = r.cumulative_probability;
            assert_eq!(r.raw_pairs_consumed, 1u64 << (k + 1));
        }
        assert!(
            (rounds[1].cumulative_probability
                - rounds[0].branch_probability * rounds[1].branch_probability)
                .abs()
                < 1e-15
        );
        assert_eq!(rounds[1].branch_label, "M+M+/Psi+");
    }

    #[test]
    fn simulated_chain_matches_scalar_recurrence_and_closed_forms() {
        let (a, p, b) = (0.3, 0.1, 0.22);
        let cfg = ProtocolConfig::phi(a, p).with_rounds(6, WeakPolicy::BothPlus, b);
        let rounds = run_protocol(&cfg, &TOL).unwrap();
        let chain = phi_chain(a, p, Some(b), WeakPolicy::BothPlus, 6).unwrap();
        for (r, (c, branch, cumulative)) in rounds.iter().zip(&chain) {
            assert!((r.concurrence - c).abs() < 1e-9, "round {}", r.round_index);
            assert!((r.branch_probability - branch).abs() < 1e-12);
            assert!((r.cumulative_probability - cumulative).abs() < 1e-12);
            let closed = concurrence_phi_roundn(a, p, b, r.round_index).unwrap();
            assert!((r.concurrence - closed).abs() < 1e-9);
        }
        // and the simulated states match the closed-form chain states
        for r in &rounds {
            let expected =
                closed_form::phi_roundn_state(a, p, b, r.round_index, BellLabel::PsiPlus).unwrap();
            assert!(r.state.matrix().max_abs_diff(&expected) < 1e-9);
        }
    }

    #[test]
    fn chi_iteration_runs_beyond_the_weak_step() {
        // Exposed but not pinned to printed values: each extra round weakly
        // measures both qubits of each copy, then swaps.
        let cfg = ProtocolConfig::chi(0.9, 0.1).with_rounds(2, WeakPolicy::BothPlus, 0.25);
        let rounds = run_protocol(&cfg, &TOL).unwrap();
        assert_eq!(rounds.len(), 2);
        assert_eq!(rounds[1].branch_label, "M+M+M+M+/Psi+");
        assert!(rounds[1].cumulative_probability > 0.0);
        assert!(rounds[1].concurrence > 0.0 && rounds[1].concurrence <= 1.0);
    }

    #[test]
    fn degenerate_inputs_are_typed_errors() {
        assert!(matches!(
            run_protocol(&ProtocolConfig::phi(0.0, 0.1), &TOL),
            Err(Error::NoEntanglement(_))
        ));
        assert!(matches!(
            run_protocol(&ProtocolConfig::phi(1.0, 0.1), &TOL),
            Err(Error::NoEntanglement(_))
        ));
        assert!(matches!(
            run_protocol(&ProtocolConfig::phi(0.3, 1.0), &TOL),
            Err(Error::NoEntanglement(_))
        ));
        assert!(matches!(
            run_protocol(&ProtocolConfig::chi(0.0, 0.1), &TOL),
            Err(Error::NoEntanglement(_))
        ));
    }

    #[test]
    fn config_validation_rejects_bad_policies() {
        let cfg = ProtocolConfig::phi(0.3, 0.1).with_rounds(2, WeakPolicy::Mixed, 0.22);
        assert!(matches!(
            run_protocol(&cfg, &TOL),
            Err(Error::InvalidConfig(_))
        ));
        let cfg = ProtocolConfig::phi(0.3, 0.1).with_rounds(2, WeakPolicy::BothPlus, 0.0);
        assert!(run_protocol(&cfg, &TOL).is_err());
        let mut cfg = ProtocolConfig::phi(0.3, 0.1);
        cfg.accepted_bell.clear();
        assert!(matches!(
            run_protocol(&cfg, &TOL),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn threshold_report_matches_printed_inequalities() {
        let (a, p) = (0.3, 0.1);
        // b < 1/3: only both-M+ enhances.
        let report = threshold_checks(a, p, 0.22, &TOL).unwrap();
        assert!(report.cases[0].enhanced);
        assert!(!report.cases[1].enhanced);
        assert!(!report.cases[2].enhanced);
        assert!(!report.cases[3].enhanced);
        // b > 2/3: only both-M- enhances.
        let report = threshold_checks(a, p, 0.8, &TOL).unwrap();
        assert!(!report.cases[0].enhanced);
        assert!(!report.cases[1].enhanced);
        assert!(!report.cases[2].enhanced);
        assert!(report.cases[3].enhanced);
        // Equality at b = 1/3 within 1e-10.
        let report = threshold_checks(a, p, 1.0 / 3.0, &TOL).unwrap();
        assert!((report.cases[0].c2 - report.c1).abs() < 1e-10);
        assert!(!report.cases[0].enhanced);
    }

    #[test]
    fn purifiability_examples() {
        // The swapped state holds: its central block is a rank-1 projector.
        let cfg = ProtocolConfig::phi(0.3, 0.1);
        let (ab, bc) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        let r = swap_round(&ab, &bc, &[BellLabel::PsiPlus], &TOL)
            .unwrap()
            .remove(0);
        let check = purifiability_condition(&r.state, &TOL);
        assert!(check.holds);
        assert_eq!(check.subspace, Some(SupportSubspace::LowerTriple));

        // Maximally mixed: full support, fails the subspace test.
        let mixed = DensityMatrix::new(2, ComplexMatrix::identity(4).scale_re(0.25), &TOL).unwrap();
        let check = purifiability_condition(&mixed, &TOL);
        assert!(!check.holds);
        assert!(check.subspace.is_none());

        // In-subspace but zero coherences: condition fails.
        let m = ComplexMatrix::diag(&[
            C64::new(0.5, 0.0),
            C64::new(0.25, 0.0),
            C64::new(0.25, 0.0),
            C64::new(0.0, 0.0),
        ]);
        let diag = DensityMatrix::new(2, m, &TOL).unwrap();
        let check = purifiability_condition(&diag, &TOL);
        assert!(!check.holds);
        assert_eq!(check.subspace, Some(SupportSubspace::LowerTriple));
        assert!((check.lhs.re - 1.0 / 16.0).abs() < 1e-15);
        assert!(check.rhs.norm() < 1e-15);
    }

    #[test]
    fn enhancement_region_examples() {
        // Every sampled point with a <= 0.2 is enhanced for any p.
        let a_vals: Vec<f64> = (1..=8).map(|i| 0.025 * i as f64).collect();
        let p_vals: Vec<f64> = (1..=9).map(|i| 0.1 * i as f64).collect();
        let req = RegionRequest {
            family: Family::Phi,
            axis1: p_vals.clone(),
            axis2: a_vals.clone(),
            fixed_p: None,
            b: None,
            weak_policy: WeakPolicy::BothPlus,
            rounds: 1,
            label: BellLabel::PsiPlus,
            chi_weak_step: false,
        };
        let mask = enhancement_region(&req, &TOL).unwrap();
        assert!(mask.iter().all(|row| row.iter().all(|&m| m)));

        // (a = 0.3, p = 0.1) is inside: 0.863 > 0.825.
        let eval = evaluate_phi_point(0.3, 0.1, None, 1, BellLabel::PsiPlus, &TOL).unwrap();
        assert!(eval.enhanced);
        assert!((eval.c_initial - 0.8248636250920512).abs() < 1e-12);
        assert!((eval.c_final - 0.863013698630137).abs() < 1e-12);

        // The Phi branches never enhance.
        let req = RegionRequest {
            label: BellLabel::PhiPlus,
            ..req
        };
        let mask = enhancement_region(&req, &TOL).unwrap();
        assert!(mask.iter().all(|row| row.iter().all(|&m| !m)));
    }

    #[test]
    fn weak_preprocessing_is_a_local_tensor_factor() {
        // Applying the weak operator inside each 2-qubit copy and assembling
        // the register equals applying the embedded operator on the
        // assembled register: the preprocessing is local to Alice (qubit 0)
        // and Charlie (qubit 3).
        let cfg = ProtocolConfig::phi(0.3, 0.1);
        let (ab, bc) = prepare_noisy_pairs(&cfg, &TOL).unwrap();
        let r = swap_round(&ab, &bc, &[BellLabel::PsiPlus], &TOL)
            .unwrap()
            .remove(0);
        let state = r.state;

        let b = 0.22;
        let copy1 = weak_measure(&state, 0, b, &TOL).unwrap()[0]
            .post_state
            .clone()
            .unwrap();
        let copy2 = weak_measure(&state, 1, b, &TOL).unwrap()[0]
            .post_state
            .clone()
            .unwrap();
        let assembled = kron(copy1.matrix(), copy2.matrix());

        let wm = WeakMeasurement::new(b).unwrap();
        let joint = kron(state.matrix(), state.matrix());
        let alice = embed_on_qubit(&wm.m_plus, 4, 0).unwrap();
        let charlie = embed_on_qubit(&wm.m_plus, 4, 3).unwrap();
        let op = alice.matmul(&charlie);
        let raw = op.matmul(&joint).matmul(&op.dagger());
        let normalized = raw.scale_re(1.0 / raw.trace().re);
        assert!(assembled.max_abs_diff(&normalized) < 1e-12);
    }
}
