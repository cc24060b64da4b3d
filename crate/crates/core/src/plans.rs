//! Adaptive measurement plans and exhaustive branch enumeration.
//!
//! A plan decides, from the outcomes Alice has seen so far, which basis she
//! uses on her next qubit. Two plans are built in:
//!
//! * [`CpmPlan`] measures every qubit in `{|+⟩, |−⟩}`.
//! * [`SpmPlan`] starts in `{|ν⟩, |ν⊥⟩}` with `ν = x|0⟩ + y|1⟩`, then keeps
//!   using the λ-bases (exponents doubling each stage) for as long as every
//!   outcome is the second vector. The first "first-vector" outcome switches
//!   the rest of the cascade to `{|+⟩, |−⟩}`.
//!
//! [`TablePlan`] holds an arbitrary decision table, one basis per history.
//!
//! Outcome bit 0 is the first basis vector, bit 1 the second; the all-ones
//! history of the SPM cascade is the unique η leaf.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::amplitude::{pow_rational, ratio, ExactAmplitude, Rational, Sign};
use crate::engine::{ghz_state, Basis, ChainState};
use crate::error::{Error, Result};

/// Largest GHZ size accepted; enumeration is `2^(n-1)` leaves.
pub const MAX_QUBITS: usize = 16;

/// Cascade parameters: total qubits `n` (Alice holds `n - 1`) and `x²`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanParams {
    n: usize,
    x_sq: Rational,
}

impl PlanParams {
    pub fn new(n: usize, x_sq: Rational) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain(format!("need at least 3 qubits, got {n}")));
        }
        if n > MAX_QUBITS {
            return Err(Error::domain(format!("at most {MAX_QUBITS} qubits supported, got {n}")));
        }
        if x_sq <= Rational::zero() || x_sq >= Rational::one() {
            return Err(Error::domain(format!("x² must lie strictly between 0 and 1, got {x_sq}")));
        }
        Ok(PlanParams { n, x_sq })
    }

    /// `x² = 2/3` with the given qubit count.
    pub fn with_qubits(n: usize) -> Result<Self> {
        Self::new(n, ratio(2, 3))
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    /// Number of qubits Alice measures.
    pub fn alice_qubits(&self) -> usize {
        self.n - 1
    }

    pub fn x_sq(&self) -> &Rational {
        &self.x_sq
    }

    pub fn y_sq(&self) -> Rational {
        Rational::one() - &self.x_sq
    }

    pub fn x(&self) -> ExactAmplitude {
        ExactAmplitude::sqrt_of(self.x_sq.clone()).expect("x² is positive")
    }

    pub fn y(&self) -> ExactAmplitude {
        ExactAmplitude::sqrt_of(self.y_sq()).expect("y² is positive")
    }

    /// `r = x²/y²`.
    pub fn r(&self) -> Rational {
        &self.x_sq / self.y_sq()
    }

    fn with_x_sq(&self, x_sq: Rational) -> Self {
        PlanParams { n: self.n, x_sq }
    }
}

impl Default for PlanParams {
    fn default() -> Self {
        PlanParams { n: 8, x_sq: ratio(2, 3) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    First,
    Second,
}

impl Outcome {
    pub fn bit(self) -> u8 {
        match self {
            Outcome::First => 0,
            Outcome::Second => 1,
        }
    }
}

pub fn format_outcomes(outcomes: &[Outcome]) -> String {
    outcomes.iter().map(|o| if *o == Outcome::First { '0' } else { '1' }).collect()
}

pub fn parse_outcomes(s: &str) -> Result<Vec<Outcome>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(Outcome::First),
            '1' => Ok(Outcome::Second),
            other => Err(Error::parse(format!("outcome strings use 0/1, found {other:?}"))),
        })
        .collect()
}

/// Adaptive single-qubit measurement strategy for Alice.
pub trait MeasurementPlan: Send + Sync {
    fn params(&self) -> &PlanParams;

    /// Basis for Alice's next qubit after `history`.
    ///
    /// # Panics
    /// If `history.len() >= params().alice_qubits()`.
    fn basis(&self, history: &[Outcome]) -> &Basis;

    /// `x²` of the `μ±` states leaves are classified against.
    fn reference_x_sq(&self) -> Rational {
        self.params().x_sq().clone()
    }

    /// Cascade depth at which the path switched to `{|+⟩, |−⟩}` for good:
    /// the 1-based position of the last non-`±` basis on the path (at least 1).
    fn level(&self, outcomes: &[Outcome]) -> usize {
        (0..outcomes.len())
            .rev()
            .find(|&i| !self.basis(&outcomes[..i]).is_plus_minus())
            .map_or(1, |i| i + 1)
    }
}

/// `F_1 … F_m` and their running products `T_k = F_1 ⋯ F_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constants {
    f: Vec<ExactAmplitude>,
    t: Vec<ExactAmplitude>,
}

impl Constants {
    pub fn new(params: &PlanParams) -> Self {
        let m = params.alice_qubits();
        let r = params.r();
        let r_inv = r.recip();
        let mut f = Vec::with_capacity(m);
        let mut t = Vec::with_capacity(m);
        let mut running = ExactAmplitude::one();
        for k in 1..=m {
            let fk = if k == 1 {
                ExactAmplitude::one()
            } else {
                let e = 1u64 << (k - 2);
                ExactAmplitude::sqrt_of(pow_rational(&r, e) + pow_rational(&r_inv, e))
                    .expect("positive")
            };
            running = &running * &fk;
            f.push(fk);
            t.push(running.clone());
        }
        Constants { f, t }
    }

    /// `F_k`, 1-based.
    pub fn f(&self, k: usize) -> &ExactAmplitude {
        &self.f[k - 1]
    }

    /// `T_k`, 1-based.
    pub fn t(&self, k: usize) -> &ExactAmplitude {
        &self.t[k - 1]
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Closed form `T_k² = (r^(2^(k-1)) − r^(-2^(k-1))) / (r − 1/r)`; `None` when `r = 1`.
pub fn telescoped_t_sq(params: &PlanParams, k: usize) -> Option<Rational> {
    let r = params.r();
    if r.is_one() || k == 0 {
        return None;
    }
    let e = 1u64 << (k - 1);
    let num = pow_rational(&r, e) - pow_rational(&r.recip(), e);
    Some(num / (&r - r.recip()))
}

/// The λ_k basis used on qubit `A_(k+1)` after `k` consecutive second-vector
/// outcomes, `1 <= k <= m - 1`.
pub fn spm_basis(k: usize, params: &PlanParams) -> Result<Basis> {
    let m = params.alice_qubits();
    if k == 0 || k >= m {
        return Err(Error::domain(format!("λ-basis index {k} outside 1..={}", m - 1)));
    }
    let e = 1u64 << (k - 1);
    let r = params.r();
    let f_sq = pow_rational(&r, e) + pow_rational(&r.recip(), e);
    let c0 = ExactAmplitude::from_sq(Sign::Positive, pow_rational(&r, e) / &f_sq)?;
    let c1 = ExactAmplitude::from_sq(Sign::Positive, pow_rational(&r.recip(), e) / &f_sq)?;
    Basis::new(c0, c1)
}

/// Every qubit in `{|+⟩, |−⟩}`.
#[derive(Debug, Clone)]
pub struct CpmPlan {
    params: PlanParams,
    basis: Basis,
}

impl CpmPlan {
    pub fn new(params: PlanParams) -> Self {
        CpmPlan { params, basis: Basis::plus_minus() }
    }
}

impl MeasurementPlan for CpmPlan {
    fn params(&self) -> &PlanParams {
        &self.params
    }

    fn basis(&self, history: &[Outcome]) -> &Basis {
        assert!(history.len() < self.params.alice_qubits(), "history too long");
        &self.basis
    }

    // |±⟩ leaves are μ± with x = y.
    fn reference_x_sq(&self) -> Rational {
        ratio(1, 2)
    }
}

/// The selective cascade: ν, then λ_1 … λ_(m−1) while outcomes stay "perp".
#[derive(Debug, Clone)]
pub struct SpmPlan {
    params: PlanParams,
    nu: Basis,
    lambdas: Vec<Basis>,
    plus_minus: Basis,
}

impl SpmPlan {
    pub fn new(params: PlanParams) -> Self {
        let nu = Basis::new(params.x(), params.y()).expect("x² + y² = 1");
        let lambdas = (1..params.alice_qubits())
            .map(|k| spm_basis(k, &params).expect("k in range"))
            .collect();
        SpmPlan { params, nu, lambdas, plus_minus: Basis::plus_minus() }
    }
}

impl MeasurementPlan for SpmPlan {
    fn params(&self) -> &PlanParams {
        &self.params
    }

    fn basis(&self, history: &[Outcome]) -> &Basis {
        assert!(history.len() < self.params.alice_qubits(), "history too long");
        if history.is_empty() {
            &self.nu
        } else if history.contains(&Outcome::First) {
            &self.plus_minus
        } else {
            &self.lambdas[history.len() - 1]
        }
    }

    fn level(&self, outcomes: &[Outcome]) -> usize {
        match outcomes.iter().position(|o| *o == Outcome::First) {
            Some(i) => i + 1,
            None => self.params.alice_qubits() + 1,
        }
    }
}

/// An explicit decision table: one basis per history, stored in heap order
/// (`""`, `"0"`, `"1"`, `"00"`, `"01"`, …).
#[derive(Debug, Clone)]
pub struct TablePlan {
    params: PlanParams,
    bases: Vec<Basis>,
}

fn heap_index(history: &[Outcome]) -> usize {
    let bits = history.iter().fold(0usize, |acc, o| (acc << 1) | o.bit() as usize);
    (1usize << history.len()) - 1 + bits
}

fn history_at(index: usize) -> Vec<Outcome> {
    let depth = (usize::BITS - (index + 1).leading_zeros() - 1) as usize;
    let bits = index + 1 - (1 << depth);
    (0..depth)
        .rev()
        .map(|i| if (bits >> i) & 1 == 0 { Outcome::First } else { Outcome::Second })
        .collect()
}

impl TablePlan {
    pub fn new(params: PlanParams, bases: Vec<Basis>) -> Result<Self> {
        let expected = (1usize << params.alice_qubits()) - 1;
        if bases.len() != expected {
            return Err(Error::domain(format!(
                "a plan for {} Alice qubits needs {expected} bases, got {}",
                params.alice_qubits(),
                bases.len()
            )));
        }
        Ok(TablePlan { params, bases })
    }

    /// Tabulates any plan.
    pub fn from_plan(plan: &dyn MeasurementPlan) -> Self {
        let params = plan.params().clone();
        let count = (1usize << params.alice_qubits()) - 1;
        let bases = (0..count).map(|i| plan.basis(&history_at(i)).clone()).collect();
        TablePlan { params, bases }
    }

    /// A plan with an independent random basis at every history. Each basis
    /// has `c0² = a/b` with `0 < a < b <= 64` and random signs.
    pub fn random<R: Rng + ?Sized>(params: PlanParams, rng: &mut R) -> Self {
        let count = (1usize << params.alice_qubits()) - 1;
        let bases = (0..count).map(|_| random_basis(rng)).collect();
        TablePlan { params, bases }
    }

    /// Histories paired with their bases, in heap order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<Outcome>, &Basis)> {
        self.bases.iter().enumerate().map(|(i, b)| (history_at(i), b))
    }
}

pub fn random_basis<R: Rng + ?Sized>(rng: &mut R) -> Basis {
    let den: i64 = rng.random_range(2..=64);
    let num: i64 = rng.random_range(1..den);
    let p = ratio(num, den);
    let sign = |rng: &mut R| if rng.random_bool(0.5) { Sign::Positive } else { Sign::Negative };
    let c0 = ExactAmplitude::from_sq(sign(rng), p.clone()).expect("positive");
    let c1 = ExactAmplitude::from_sq(sign(rng), Rational::one() - p).expect("positive");
    Basis::new(c0, c1).expect("normalized")
}

impl MeasurementPlan for TablePlan {
    fn params(&self) -> &PlanParams {
        &self.params
    }

    fn basis(&self, history: &[Outcome]) -> &Basis {
        assert!(history.len() < self.params.alice_qubits(), "history too long");
        &self.bases[heap_index(history)]
    }
}

/// On-disk form of a decision table: `{"qubits": n, "x_sq": "2/3", "bases": {"": …, "0": …}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub qubits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_sq: Option<String>,
    pub bases: BTreeMap<String, Basis>,
}

impl PlanFile {
    pub fn from_plan(plan: &dyn MeasurementPlan) -> Self {
        let table = TablePlan::from_plan(plan);
        let x = plan.params().x_sq();
        PlanFile {
            qubits: plan.params().qubits(),
            x_sq: Some(format!("{}/{}", x.numer(), x.denom())),
            bases: table.entries().map(|(h, b)| (format_outcomes(&h), b.clone())).collect(),
        }
    }

    pub fn into_plan(self) -> Result<TablePlan> {
        let x_sq = match &self.x_sq {
            Some(s) => crate::amplitude::parse_rational(s)?,
            None => ratio(2, 3),
        };
        let params = PlanParams::new(self.qubits, x_sq)?;
        let count = (1usize << params.alice_qubits()) - 1;
        if self.bases.len() != count {
            return Err(Error::parse(format!(
                "plan lists {} histories, expected {count}",
                self.bases.len()
            )));
        }
        let mut slots: Vec<Option<Basis>> = vec![None; count];
        for (key, basis) in self.bases {
            let history = parse_outcomes(&key)?;
            if history.len() >= params.alice_qubits() {
                return Err(Error::parse(format!("history {key:?} is too long")));
            }
            slots[heap_index(&history)] = Some(basis);
        }
        let bases = slots
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                b.ok_or_else(|| {
                    Error::parse(format!("missing basis for history {:?}", format_outcomes(&history_at(i))))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TablePlan::new(params, bases)
    }
}

pub fn parse_plan_json(text: &str) -> Result<TablePlan> {
    let file: PlanFile =
        serde_json::from_str(text).map_err(|e| Error::parse(format!("plan JSON: {e}")))?;
    file.into_plan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LeafClass {
    MuPlus,
    MuMinus,
    Eta,
    Other,
}

impl fmt::Display for LeafClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeafClass::MuPlus => "MU_PLUS",
            LeafClass::MuMinus => "MU_MINUS",
            LeafClass::Eta => "ETA",
            LeafClass::Other => "OTHER",
        })
    }
}

/// One complete outcome sequence of Alice's cascade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchRecord {
    pub outcomes: Vec<Outcome>,
    pub probability: Rational,
    pub bob_state: ChainState,
    pub class: LeafClass,
    pub level: usize,
}

/// The all-perp SPM leaf `P|η⟩` and its normalized direction `|η⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EtaState {
    pub leaf: ChainState,
    pub normalized: ChainState,
    /// `P²`, the squared norm of the leaf (its probability).
    pub prefactor_sq: Rational,
}

/// States after each of Alice's measurements along `outcomes`.
pub fn cascade_path(plan: &dyn MeasurementPlan, outcomes: &[Outcome]) -> Result<Vec<ChainState>> {
    if outcomes.len() > plan.params().alice_qubits() {
        return Err(Error::domain("outcome string longer than Alice's register"));
    }
    let mut state = ghz_state(plan.params().qubits())?;
    let mut states = Vec::with_capacity(outcomes.len());
    for i in 0..outcomes.len() {
        let (first, second) = state.project(plan.basis(&outcomes[..i]));
        state = if outcomes[i] == Outcome::First { first } else { second };
        states.push(state.clone());
    }
    Ok(states)
}

pub fn eta_state(params: &PlanParams) -> EtaState {
    let plan = SpmPlan::new(params.clone());
    let all_perp = vec![Outcome::Second; params.alice_qubits()];
    let leaf = cascade_path(&plan, &all_perp)
        .expect("valid path")
        .pop()
        .expect("at least one measurement");
    let norm = leaf.norm_sq();
    let normalize = |a: &ExactAmplitude| {
        ExactAmplitude::from_sq(a.sign(), a.sq() / &norm).expect("nonnegative")
    };
    let normalized = ChainState::new(1, normalize(leaf.amp0()), normalize(leaf.amp1()))
        .expect("unit norm");
    EtaState { leaf, normalized, prefactor_sq: norm }
}

/// Exact proportionality of single-qubit states (real scalar, any sign).
fn proportional(a0: &ExactAmplitude, a1: &ExactAmplitude, b0: &ExactAmplitude, b1: &ExactAmplitude) -> bool {
    if (a0.is_zero() && a1.is_zero()) || (b0.is_zero() && b1.is_zero()) {
        return false;
    }
    a0.sq() * b1.sq() == a1.sq() * b0.sq() && a0.sign() * a1.sign() == b0.sign() * b1.sign()
}

/// Classifies Bob's leaf states against `μ± ∝ x|0⟩ ± y|1⟩` and `η`.
#[derive(Debug, Clone)]
pub struct Classifier {
    x: ExactAmplitude,
    y: ExactAmplitude,
    eta: ChainState,
}

impl Classifier {
    pub fn new(params: &PlanParams) -> Self {
        Classifier { x: params.x(), y: params.y(), eta: eta_state(params).normalized }
    }

    pub fn for_plan(plan: &dyn MeasurementPlan) -> Self {
        Self::new(&plan.params().with_x_sq(plan.reference_x_sq()))
    }

    pub fn classify(&self, state: &ChainState) -> LeafClass {
        let (a0, a1) = (state.amp0(), state.amp1());
        if proportional(a0, a1, &self.x, &self.y) {
            LeafClass::MuPlus
        } else if proportional(a0, a1, &self.x, &-&self.y) {
            LeafClass::MuMinus
        } else if proportional(a0, a1, self.eta.amp0(), self.eta.amp1()) {
            LeafClass::Eta
        } else {
            LeafClass::Other
        }
    }
}

/// All `2^m` leaves of `plan`, in lexicographic outcome order.
pub fn enumerate_branches(plan: &dyn MeasurementPlan) -> Vec<BranchRecord> {
    let params = plan.params();
    let classifier = Classifier::for_plan(plan);
    let mut leaves = Vec::with_capacity(1 << params.alice_qubits());
    let mut history = Vec::with_capacity(params.alice_qubits());
    let root = ghz_state(params.qubits()).expect("n >= 3");
    descend(plan, &classifier, &root, &mut history, &mut leaves);
    leaves
}

fn descend(
    plan: &dyn MeasurementPlan,
    classifier: &Classifier,
    state: &ChainState,
    history: &mut Vec<Outcome>,
    leaves: &mut Vec<BranchRecord>,
) {
    if state.remaining() == 1 {
        leaves.push(BranchRecord {
            outcomes: history.clone(),
            probability: state.norm_sq(),
            bob_state: state.clone(),
            class: classifier.classify(state),
            level: plan.level(history),
        });
        return;
    }
    let (first, second) = state.project(plan.basis(history));
    for (outcome, child) in [(Outcome::First, first), (Outcome::Second, second)] {
        history.push(outcome);
        descend(plan, classifier, &child, history, leaves);
        history.pop();
    }
}

/// Leaf counts keyed by `(level, class)`.
pub fn census(records: &[BranchRecord]) -> BTreeMap<(usize, LeafClass), usize> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry((r.level, r.class)).or_insert(0) += 1;
    }
    out
}

/// Leaf counts per level.
pub fn level_counts(records: &[BranchRecord]) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry(r.level).or_insert(0) += 1;
    }
    out
}
