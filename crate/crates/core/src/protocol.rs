//! Seeded Monte-Carlo runs of the discrimination experiment.
//!
//! Alice applies a cascade to each shared GHZ state, Bob measures his qubit
//! in `{|0⟩, |1⟩}` and tallies zeros and ones per group of states. Every
//! random decision is an exact Bernoulli draw against a rational
//! probability, so outcomes as rare as `1/(2^127 + 1)` are sampled with
//! their true frequency.
//!
//! Each state draws from its own ChaCha stream keyed by `(seed, domain)` and
//! indexed by the state's global position, so results do not depend on how
//! work is scheduled across threads.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{rational_to_f64, ExactAmplitude, Rational};
use crate::engine::{bob_distribution, ghz_state, measure_next, ChainState};
use crate::error::{Error, Result};
use crate::plans::{
    Classifier, Constants, CpmPlan, LeafClass, MeasurementPlan, Outcome, PlanParams, SpmPlan,
};

const DOMAIN_STATE: u64 = 1;
const DOMAIN_TRUTH: u64 = 2;
const DOMAIN_CENSUS: u64 = 3;

/// Independent deterministic stream for `(seed, domain, index)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// A Bernoulli(p) sampler for exact rational `p`.
///
/// The uniform variate is compared against the binary expansion of `p` one
/// 64-bit word at a time; more words are drawn only while the two agree, so
/// the comparison is exact and usually costs a single word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactBernoulli {
    kind: BernoulliKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum BernoulliKind {
    Never,
    Always,
    Digits { first: u64, rem: BigUint, den: BigUint },
}

impl ExactBernoulli {
    pub fn new(p: &Rational) -> Result<Self> {
        if p < &Rational::zero() || p > &Rational::one() {
            return Err(Error::domain(format!("probability {p} outside [0, 1]")));
        }
        if p.is_zero() {
            return Ok(ExactBernoulli { kind: BernoulliKind::Never });
        }
        if p.is_one() {
            return Ok(ExactBernoulli { kind: BernoulliKind::Always });
        }
        let num = p.numer().to_biguint().expect("nonnegative");
        let den = p.denom().to_biguint().expect("positive");
        let (first, rem) = next_digit(num, &den);
        Ok(ExactBernoulli { kind: BernoulliKind::Digits { first, rem, den } })
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> bool {
        match &self.kind {
            BernoulliKind::Never => false,
            BernoulliKind::Always => true,
            BernoulliKind::Digits { first, rem, den } => {
                let u = rng.next_u64();
                if u != *first {
                    return u < *first;
                }
                let mut rem = rem.clone();
                loop {
                    if rem.is_zero() {
                        return false;
                    }
                    let (digit, next) = next_digit(rem, den);
                    let u = rng.next_u64();
                    if u != digit {
                        return u < digit;
                    }
                    rem = next;
                }
            }
        }
    }
}

// Next base-2^64 digit of rem/den (rem < den) and the new remainder.
fn next_digit(rem: BigUint, den: &BigUint) -> (u64, BigUint) {
    let (q, r) = (rem << 64u32).div_rem(den);
    (q.to_u64().expect("digit below 2^64"), r)
}

/// One sampled run of Alice's cascade plus Bob's measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSample {
    pub outcomes: Vec<Outcome>,
    pub bob_bit: u8,
}

/// Samples one state by walking the engine directly.
///
/// [`CompiledPlan::sample`] consumes the stream identically and is the fast
/// path for bulk runs.
pub fn sample_state<R: RngCore + ?Sized>(plan: &dyn MeasurementPlan, rng: &mut R) -> Result<StateSample> {
    let mut state = ghz_state(plan.params().qubits())?;
    let mut outcomes = Vec::with_capacity(plan.params().alice_qubits());
    while state.remaining() > 1 {
        let pair = measure_next(&state, plan.basis(&outcomes))?;
        if ExactBernoulli::new(&pair.first.probability)?.sample(rng) {
            outcomes.push(Outcome::First);
            state = pair.first.state;
        } else {
            outcomes.push(Outcome::Second);
            state = pair.second.state;
        }
    }
    let (_, p1) = bob_distribution(&state)?;
    let bob_bit = ExactBernoulli::new(&p1)?.sample(rng) as u8;
    Ok(StateSample { outcomes, bob_bit })
}

#[derive(Debug, Clone)]
struct CompiledLeaf {
    bob_one: ExactBernoulli,
    class: LeafClass,
    level: usize,
}

/// A plan's outcome tree with every conditional probability precomputed.
#[derive(Debug, Clone)]
pub struct CompiledPlan {
    depth: usize,
    // heap-ordered internal nodes: probability of the first outcome
    nodes: Vec<ExactBernoulli>,
    leaves: Vec<CompiledLeaf>,
}

/// Leaf reached by [`CompiledPlan::sample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeafDraw {
    /// Outcome bits read as a binary number, first outcome most significant.
    pub leaf: usize,
    pub class: LeafClass,
    pub level: usize,
    pub bob_bit: u8,
}

impl CompiledPlan {
    pub fn new(plan: &dyn MeasurementPlan) -> Self {
        let params = plan.params();
        let depth = params.alice_qubits();
        let classifier = Classifier::for_plan(plan);
        let mut nodes = vec![ExactBernoulli { kind: BernoulliKind::Never }; (1 << depth) - 1];
        let mut leaves = Vec::with_capacity(1 << depth);
        let mut history = Vec::with_capacity(depth);
        let root = ghz_state(params.qubits()).expect("n >= 3");
        compile(plan, &classifier, &root, &mut history, &mut nodes, &mut leaves);
        CompiledPlan { depth, nodes, leaves }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> LeafDraw {
        let mut index = 0usize;
        let mut bits = 0usize;
        for _ in 0..self.depth {
            let second = !self.nodes[index].sample(rng);
            bits = (bits << 1) | second as usize;
            index = 2 * index + 1 + second as usize;
        }
        let leaf = &self.leaves[bits];
        LeafDraw {
            leaf: bits,
            class: leaf.class,
            level: leaf.level,
            bob_bit: leaf.bob_one.sample(rng) as u8,
        }
    }
}

fn compile(
    plan: &dyn MeasurementPlan,
    classifier: &Classifier,
    state: &ChainState,
    history: &mut Vec<Outcome>,
    nodes: &mut Vec<ExactBernoulli>,
    leaves: &mut Vec<CompiledLeaf>,
) {
    let norm = state.norm_sq();
    if state.remaining() == 1 {
        let bob_one = if norm.is_zero() {
            ExactBernoulli { kind: BernoulliKind::Never }
        } else {
            ExactBernoulli::new(&(state.amp1().sq() / &norm)).expect("probability")
        };
        leaves.push(CompiledLeaf { bob_one, class: classifier.classify(state), level: plan.level(history) });
        return;
    }
    let (first, second) = state.project(plan.basis(history));
    if !norm.is_zero() {
        let index = (1usize << history.len()) - 1
            + history.iter().fold(0usize, |acc, o| (acc << 1) | o.bit() as usize);
        nodes[index] = ExactBernoulli::new(&(first.norm_sq() / &norm)).expect("probability");
    }
    for (outcome, child) in [(Outcome::First, first), (Outcome::Second, second)] {
        history.push(outcome);
        compile(plan, classifier, &child, history, nodes, leaves);
        history.pop();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Strategy {
    Cpm,
    Spm,
    RandomPerState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Cpm,
    Spm,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Cpm => "CPM",
            Decision::Spm => "SPM",
        })
    }
}

pub const DEFAULT_THRESHOLD: f64 = 1.33;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub n: usize,
    pub x_sq: String,
    pub per_group: usize,
    pub groups: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub trials: usize,
    pub threshold: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            n: 8,
            x_sq: "2/3".into(),
            per_group: 30,
            groups: 20,
            strategy: Strategy::Spm,
            seed: 0,
            trials: 1,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl ProtocolConfig {
    pub fn params(&self) -> Result<PlanParams> {
        PlanParams::new(self.n, crate::amplitude::parse_rational(&self.x_sq)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_group == 0 || self.groups == 0 || self.trials == 0 {
            return Err(Error::domain("per_group, groups and trials must all be at least 1"));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::domain(format!("threshold must be positive, got {}", self.threshold)));
        }
        self.params().map(|_| ())
    }

    fn states_per_trial(&self) -> u64 {
        (self.groups * self.per_group) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupResult {
    pub zeros: usize,
    pub ones: usize,
    /// `ones / zeros`; `None` when no zeros were seen.
    pub ratio: Option<f64>,
    pub eta_hits: usize,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub per_group: Vec<GroupResult>,
    pub eta_hits: usize,
    pub overall_decision: Decision,
}

/// Ratio rule for one group: SPM when `ones/zeros >= threshold`.
pub fn group_decision(zeros: usize, ones: usize, threshold: f64) -> Decision {
    if zeros == 0 {
        return if ones > 0 { Decision::Spm } else { Decision::Cpm };
    }
    if ones as f64 >= threshold * zeros as f64 {
        Decision::Spm
    } else {
        Decision::Cpm
    }
}

/// Strict majority of group decisions; ties go to CPM.
pub fn majority(decisions: impl IntoIterator<Item = Decision>) -> Decision {
    let (mut spm, mut total) = (0usize, 0usize);
    for d in decisions {
        total += 1;
        spm += (d == Decision::Spm) as usize;
    }
    if 2 * spm > total {
        Decision::Spm
    } else {
        Decision::Cpm
    }
}

struct Samplers {
    cpm: CompiledPlan,
    spm: CompiledPlan,
}

impl Samplers {
    fn new(params: &PlanParams) -> Self {
        Samplers {
            cpm: CompiledPlan::new(&CpmPlan::new(params.clone())),
            spm: CompiledPlan::new(&SpmPlan::new(params.clone())),
        }
    }
}

fn run_group(config: &ProtocolConfig, samplers: &Samplers, strategy: Strategy, trial: usize, group: usize) -> GroupResult {
    let base = trial as u64 * config.states_per_trial() + (group * config.per_group) as u64;
    let (mut zeros, mut ones, mut eta_hits) = (0, 0, 0);
    for k in 0..config.per_group as u64 {
        let mut rng = substream(config.seed, DOMAIN_STATE, base + k);
        let sampler = match strategy {
            Strategy::Cpm => &samplers.cpm,
            Strategy::Spm => &samplers.spm,
            Strategy::RandomPerState => {
                if rng.next_u64() >> 63 == 0 {
                    &samplers.cpm
                } else {
                    &samplers.spm
                }
            }
        };
        let draw = sampler.sample(&mut rng);
        eta_hits += (draw.class == LeafClass::Eta) as usize;
        if draw.bob_bit == 1 {
            ones += 1;
        } else {
            zeros += 1;
        }
    }
    GroupResult {
        zeros,
        ones,
        ratio: (zeros > 0).then(|| ones as f64 / zeros as f64),
        eta_hits,
        decision: group_decision(zeros, ones, config.threshold),
    }
}

fn run_trials(config: &ProtocolConfig, strategies: &[Strategy]) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let samplers = Samplers::new(&config.params()?);
    let groups: Vec<GroupResult> = (0..strategies.len() * config.groups)
        .into_par_iter()
        .map(|i| {
            let (trial, group) = (i / config.groups, i % config.groups);
            run_group(config, &samplers, strategies[trial], trial, group)
        })
        .collect();
    Ok(groups
        .chunks(config.groups)
        .map(|chunk| TrialResult {
            eta_hits: chunk.iter().map(|g| g.eta_hits).sum(),
            overall_decision: majority(chunk.iter().map(|g| g.decision)),
            per_group: chunk.to_vec(),
        })
        .collect())
}

/// Runs `config.trials` independent trials of the experiment.
pub fn run_protocol(config: &ProtocolConfig) -> Result<Vec<TrialResult>> {
    run_trials(config, &vec![config.strategy; config.trials])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub cpm_as_cpm: usize,
    pub cpm_as_spm: usize,
    pub spm_as_cpm: usize,
    pub spm_as_spm: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.cpm_as_cpm + self.cpm_as_spm + self.spm_as_cpm + self.spm_as_spm
    }

    pub fn accuracy(&self) -> f64 {
        (self.cpm_as_cpm + self.spm_as_spm) as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminationTrial {
    pub truth: Decision,
    pub decision: Decision,
    pub ones: usize,
    pub zeros: usize,
    pub eta_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscriminationReport {
    pub trials: Vec<DiscriminationTrial>,
    pub confusion: Confusion,
    pub accuracy: f64,
}

/// Per trial Alice flips a fair coin for CPM or SPM and uses it on every
/// state; Bob applies the ratio rule. Reports how often Bob is right.
pub fn discriminate(config: &ProtocolConfig) -> Result<DiscriminationReport> {
    let truths: Vec<Decision> = (0..config.trials as u64)
        .map(|t| {
            if substream(config.seed, DOMAIN_TRUTH, t).next_u64() >> 63 == 0 {
                Decision::Cpm
            } else {
                Decision::Spm
            }
        })
        .collect();
    let strategies: Vec<Strategy> = truths
        .iter()
        .map(|d| if *d == Decision::Cpm { Strategy::Cpm } else { Strategy::Spm })
        .collect();
    let results = run_trials(config, &strategies)?;
    let mut confusion = Confusion::default();
    let trials = truths
        .iter()
        .zip(&results)
        .map(|(&truth, r)| {
            let decision = r.overall_decision;
            match (truth, decision) {
                (Decision::Cpm, Decision::Cpm) => confusion.cpm_as_cpm += 1,
                (Decision::Cpm, Decision::Spm) => confusion.cpm_as_spm += 1,
                (Decision::Spm, Decision::Cpm) => confusion.spm_as_cpm += 1,
                (Decision::Spm, Decision::Spm) => confusion.spm_as_spm += 1,
            }
            DiscriminationTrial {
                truth,
                decision,
                ones: r.per_group.iter().map(|g| g.ones).sum(),
                zeros: r.per_group.iter().map(|g| g.zeros).sum(),
                eta_hits: r.eta_hits,
            }
        })
        .collect();
    Ok(DiscriminationReport { trials, accuracy: confusion.accuracy(), confusion })
}

/// Draws `samples` leaves from `plan` and tallies them by `(level, class)`.
pub fn sample_leaf_census(
    plan: &dyn MeasurementPlan,
    seed: u64,
    samples: u64,
) -> std::collections::BTreeMap<(usize, LeafClass), u64> {
    let compiled = CompiledPlan::new(plan);
    let draws: Vec<(usize, LeafClass)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let d = compiled.sample(&mut substream(seed, DOMAIN_CENSUS, i));
            (d.level, d.class)
        })
        .collect();
    let mut out = std::collections::BTreeMap::new();
    for key in draws {
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

/// Value of the W ratio; infinite when every state in the group hit η.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WValue {
    Finite(Rational),
    Infinite,
}

impl WValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            WValue::Finite(r) => rational_to_f64(r),
            WValue::Infinite => f64::INFINITY,
        }
    }
}

/// Ratio of Bob's `|1⟩` weight from `l` η leaves to his `|0⟩` weight from
/// `per_group − l` level-1 μ leaves:
///
/// ```text
/// w = l · (x^(2^m−1) / (√2 T_m x^(2^(m−1)−1) y^(2^(m−1)−1)))²
///     / ((per_group − l) · (x / (g_1 T_1 √2))²),   g_1 = 2^((m−1)/2)
/// ```
pub fn w_statistic(l: usize, params: &PlanParams, per_group: usize) -> Result<WValue> {
    if l > per_group {
        return Err(Error::domain(format!("η count {l} exceeds group size {per_group}")));
    }
    if l == per_group {
        return Ok(WValue::Infinite);
    }
    let m = params.alice_qubits() as u32;
    let constants = Constants::new(params);
    let (x, y) = (params.x(), params.y());
    let sqrt2 = ExactAmplitude::sqrt_of(Rational::from_integer(2.into()))?;
    let half_exp = (1u32 << (m - 1)) - 1;

    let eta_den = &(&(&sqrt2 * constants.t(m as usize)) * &x.pow(half_exp)) * &y.pow(half_exp);
    let eta_one = x.pow((1u32 << m) - 1).checked_div(&eta_den)?;

    let g1 = ExactAmplitude::sqrt_of(Rational::from_integer(BigInt::one() << (m - 1)))?;
    let mu_den = &(&g1 * constants.t(1)) * &sqrt2;
    let mu_zero = x.checked_div(&mu_den)?;

    let numerator = Rational::from_integer(l.into()) * eta_one.sq();
    let denominator = Rational::from_integer((per_group - l).into()) * mu_zero.sq();
    Ok(WValue::Finite(numerator / denominator))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::ratio;
    use crate::plans::{enumerate_branches, TablePlan};

    #[test]
    fn bernoulli_edge_cases() {
        let mut rng = substream(1, 0, 0);
        assert!(!ExactBernoulli::new(&ratio(0, 1)).unwrap().sample(&mut rng));
        assert!(ExactBernoulli::new(&ratio(1, 1)).unwrap().sample(&mut rng));
        assert!(ExactBernoulli::new(&ratio(3, 2)).is_err());
        assert!(ExactBernoulli::new(&ratio(-1, 2)).is_err());
    }

    // A scripted stream makes the word-by-word comparison observable.
    struct Script(Vec<u64>);

    impl RngCore for Script {
        fn next_u32(&mut self) -> u32 {
            self.next_u64() as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0.remove(0)
        }
        fn fill_bytes(&mut self, _: &mut [u8]) {
            unimplemented!()
        }
    }

    #[test]
    fn bernoulli_compares_digit_by_digit() {
        // 1/3 = 0.5555…₁₆ in every 64-bit word
        let third = ExactBernoulli::new(&ratio(1, 3)).unwrap();
        let d = u64::MAX / 3;
        assert!(third.sample(&mut Script(vec![d - 1])));
        assert!(!third.sample(&mut Script(vec![d + 1])));
        assert!(third.sample(&mut Script(vec![d, d, d - 1])));
        assert!(!third.sample(&mut Script(vec![d, d, d + 1])));
        // 1/2 terminates after one word: a tie means U >= p
        let half = ExactBernoulli::new(&ratio(1, 2)).unwrap();
        assert!(!half.sample(&mut Script(vec![1 << 63])));
        assert!(half.sample(&mut Script(vec![(1 << 63) - 1])));
    }

    #[test]
    fn bernoulli_resolves_probabilities_below_word_resolution() {
        let p = Rational::new(BigInt::one(), (BigInt::one() << 127) + 1);
        let b = ExactBernoulli::new(&p).unwrap();
        // first word of p is 0, second word is 1 → zero then zero hits it
        assert!(b.sample(&mut Script(vec![0, 0])));
        assert!(!b.sample(&mut Script(vec![0, 2])));
        assert!(!b.sample(&mut Script(vec![1])));
    }

    #[test]
    fn compiled_plan_matches_engine_walk() {
        let params = PlanParams::default();
        let plans: Vec<Box<dyn MeasurementPlan>> = vec![
            Box::new(SpmPlan::new(params.clone())),
            Box::new(CpmPlan::new(params.clone())),
            Box::new(TablePlan::random(PlanParams::with_qubits(5).unwrap(), &mut substream(9, 9, 9))),
        ];
        for plan in &plans {
            let compiled = CompiledPlan::new(plan.as_ref());
            let leaves = enumerate_branches(plan.as_ref());
            for i in 0..300 {
                let slow = sample_state(plan.as_ref(), &mut substream(5, 0, i)).unwrap();
                let fast = compiled.sample(&mut substream(5, 0, i));
                let bits = slow.outcomes.iter().fold(0, |acc, o| (acc << 1) | o.bit() as usize);
                assert_eq!(bits, fast.leaf);
                assert_eq!(slow.bob_bit, fast.bob_bit);
                assert_eq!(leaves[fast.leaf].class, fast.class);
                assert_eq!(leaves[fast.leaf].level, fast.level);
            }
        }
    }

    #[test]
    fn decision_rules() {
        assert_eq!(group_decision(15, 15, 1.33), Decision::Cpm);
        assert_eq!(group_decision(10, 20, 1.33), Decision::Spm);
        assert_eq!(group_decision(0, 30, 1.33), Decision::Spm);
        assert_eq!(majority([Decision::Spm, Decision::Cpm]), Decision::Cpm);
        assert_eq!(majority([Decision::Spm, Decision::Spm, Decision::Cpm]), Decision::Spm);
    }

    #[test]
    fn config_validation() {
        let mut c = ProtocolConfig::default();
        assert!(c.validate().is_ok());
        c.groups = 0;
        assert!(run_protocol(&c).is_err());
        let c = ProtocolConfig { threshold: f64::NAN, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ProtocolConfig { x_sq: "3/2".into(), ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn run_is_deterministic_and_counts_add_up() {
        let config = ProtocolConfig { seed: 7, trials: 2, ..Default::default() };
        let a = run_protocol(&config).unwrap();
        let b = run_protocol(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        for trial in &a {
            assert_eq!(trial.per_group.len(), 20);
            for g in &trial.per_group {
                assert_eq!(g.zeros + g.ones, 30);
            }
        }
        let other = run_protocol(&ProtocolConfig { seed: 8, ..config }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn random_per_state_runs() {
        let config = ProtocolConfig { strategy: Strategy::RandomPerState, seed: 3, ..Default::default() };
        let r = run_protocol(&config).unwrap();
        assert_eq!(r[0].per_group.iter().map(|g| g.zeros + g.ones).sum::<usize>(), 600);
    }

    #[test]
    fn w_examples() {
        let p8 = PlanParams::default();
        let w1 = w_statistic(1, &p8, 30).unwrap().to_f64();
        assert!((w1 - 1.655).abs() < 1e-3, "{w1}");
        let w2 = w_statistic(2, &p8, 30).unwrap().to_f64();
        assert!((w2 - 3.43).abs() < 1e-2, "{w2}");
        assert_eq!(w_statistic(0, &p8, 30).unwrap(), WValue::Finite(ratio(0, 1)));
        assert_eq!(w_statistic(30, &p8, 30).unwrap(), WValue::Infinite);
        assert!(w_statistic(31, &p8, 30).is_err());
    }

    #[test]
    fn w_exact_value_at_eight_qubits() {
        // numerator x^128/(2 T_7² y^126), denominator 29 x²/128; closed form
        // with T_7² = (2/3)(2^64 − 2^-64)
        let t7_sq = ratio(2, 3) * (Rational::from_integer(BigInt::one() << 64)
            - Rational::new(BigInt::one(), BigInt::one() << 64));
        let num = Rational::from_integer(BigInt::one() << 64) / Rational::from_integer(3.into())
            / (Rational::from_integer(2.into()) * t7_sq);
        let den = ratio(29, 1) * ratio(2, 3) / ratio(128, 1);
        assert_eq!(w_statistic(1, &PlanParams::default(), 30).unwrap(), WValue::Finite(num / den));
    }

    #[test]
    fn w_matches_leaf_amplitudes() {
        for n in 4..=8 {
            let params = PlanParams::with_qubits(n).unwrap();
            let leaves = enumerate_branches(&SpmPlan::new(params.clone()));
            let eta = leaves.last().unwrap();
            assert_eq!(eta.class, LeafClass::Eta);
            let level1 = &leaves[0];
            let expected = eta.bob_state.amp1().sq() * ratio(3, 1) / (level1.bob_state.amp0().sq() * ratio(27, 1));
            assert_eq!(w_statistic(3, &params, 30).unwrap(), WValue::Finite(expected));
        }
    }

    #[test]
    fn w_is_monotone_in_l() {
        let p = PlanParams::default();
        let values: Vec<f64> = (0..30).map(|l| w_statistic(l, &p, 30).unwrap().to_f64()).collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]));
    }
}
