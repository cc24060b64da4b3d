//! GHZ-span states and single-qubit projective measurement on them.
//!
//! A GHZ state `(|0…0⟩ + |1…1⟩)/√2` stays inside span{|0…0⟩, |1…1⟩} under
//! any real single-qubit projective measurement, so a state is just two
//! exact amplitudes and a qubit count. Branches are kept unnormalized: the
//! squared norm of a branch is the probability of the outcome history that
//! produced it.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::amplitude::{ExactAmplitude, Rational};
use crate::error::{Error, Result};

/// Unnormalized state `amp0|0…0⟩ + amp1|1…1⟩` on `remaining` qubits.
///
/// Squared norm lies in `[0, 1]`. A zero norm only arises as the dead child
/// of a measurement whose outcome has probability zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ChainStateWire")]
pub struct ChainState {
    remaining: usize,
    amp0: ExactAmplitude,
    amp1: ExactAmplitude,
}

#[derive(Deserialize)]
struct ChainStateWire {
    remaining: usize,
    amp0: ExactAmplitude,
    amp1: ExactAmplitude,
}

impl TryFrom<ChainStateWire> for ChainState {
    type Error = Error;

    fn try_from(w: ChainStateWire) -> Result<ChainState> {
        ChainState::new(w.remaining, w.amp0, w.amp1)
    }
}

impl ChainState {
    pub fn new(remaining: usize, amp0: ExactAmplitude, amp1: ExactAmplitude) -> Result<Self> {
        if remaining == 0 {
            return Err(Error::domain("a chain state needs at least one qubit"));
        }
        let norm = amp0.sq() + amp1.sq();
        if norm > Rational::one() {
            return Err(Error::domain(format!("squared norm {norm} exceeds 1")));
        }
        Ok(ChainState { remaining, amp0, amp1 })
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn amp0(&self) -> &ExactAmplitude {
        &self.amp0
    }

    pub fn amp1(&self) -> &ExactAmplitude {
        &self.amp1
    }

    /// Squared norm, equal to the probability of the history leading here.
    pub fn norm_sq(&self) -> Rational {
        self.amp0.sq() + self.amp1.sq()
    }

    /// Unnormalized projections onto the two basis vectors of `basis`,
    /// without probabilities. Callers must check `remaining >= 2`.
    pub(crate) fn project(&self, basis: &Basis) -> (ChainState, ChainState) {
        let remaining = self.remaining - 1;
        let first = ChainState {
            remaining,
            amp0: &self.amp0 * basis.c0(),
            amp1: &self.amp1 * basis.c1(),
        };
        let second = ChainState {
            remaining,
            amp0: &self.amp0 * basis.c1(),
            amp1: -(&self.amp1 * basis.c0()),
        };
        (first, second)
    }
}

/// Real orthonormal single-qubit basis `{c0|0⟩ + c1|1⟩, c1|0⟩ − c0|1⟩}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BasisWire")]
pub struct Basis {
    c0: ExactAmplitude,
    c1: ExactAmplitude,
}

#[derive(Deserialize)]
struct BasisWire {
    c0: ExactAmplitude,
    c1: ExactAmplitude,
}

impl TryFrom<BasisWire> for Basis {
    type Error = Error;

    fn try_from(w: BasisWire) -> Result<Basis> {
        Basis::new(w.c0, w.c1)
    }
}

impl Basis {
    pub fn new(c0: ExactAmplitude, c1: ExactAmplitude) -> Result<Self> {
        let total = c0.sq() + c1.sq();
        if !total.is_one() {
            return Err(Error::domain(format!("basis is not normalized: |c0|²+|c1|² = {total}")));
        }
        Ok(Basis { c0, c1 })
    }

    /// `{|+⟩, |−⟩}`.
    pub fn plus_minus() -> Self {
        Basis { c0: ExactAmplitude::inv_sqrt2(), c1: ExactAmplitude::inv_sqrt2() }
    }

    /// `{|0⟩, |1⟩}` (second vector is `−|1⟩`, which only flips a sign).
    pub fn computational() -> Self {
        Basis { c0: ExactAmplitude::one(), c1: ExactAmplitude::zero() }
    }

    pub fn c0(&self) -> &ExactAmplitude {
        &self.c0
    }

    pub fn c1(&self) -> &ExactAmplitude {
        &self.c1
    }

    pub fn is_plus_minus(&self) -> bool {
        *self == Basis::plus_minus()
    }
}

/// One child of a measurement together with its conditional probability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub state: ChainState,
    pub probability: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchPair {
    pub first: Branch,
    pub second: Branch,
}

/// The shared `n`-qubit GHZ state.
pub fn ghz_state(n: usize) -> Result<ChainState> {
    if n < 2 {
        return Err(Error::domain(format!("a GHZ state needs at least 2 qubits, got {n}")));
    }
    Ok(ChainState {
        remaining: n,
        amp0: ExactAmplitude::inv_sqrt2(),
        amp1: ExactAmplitude::inv_sqrt2(),
    })
}

/// Measures the first remaining qubit in `basis`.
///
/// The last qubit is Bob's and cannot be measured here.
pub fn measure_next(state: &ChainState, basis: &Basis) -> Result<BranchPair> {
    if state.remaining < 2 {
        return Err(Error::domain("only Bob's qubit remains; Alice has nothing left to measure"));
    }
    let parent = state.norm_sq();
    if parent.is_zero() {
        return Err(Error::domain("cannot measure a zero-probability branch"));
    }
    let (first, second) = state.project(basis);
    let p_first = first.norm_sq() / &parent;
    let p_second = second.norm_sq() / &parent;
    Ok(BranchPair {
        first: Branch { state: first, probability: p_first },
        second: Branch { state: second, probability: p_second },
    })
}

/// Bob's computational-basis outcome distribution `(p0, p1)` on the final qubit.
pub fn bob_distribution(state: &ChainState) -> Result<(Rational, Rational)> {
    if state.remaining != 1 {
        return Err(Error::domain(format!(
            "Bob's distribution needs exactly one remaining qubit, got {}",
            state.remaining
        )));
    }
    let norm = state.norm_sq();
    if norm.is_zero() {
        return Err(Error::domain("zero-probability branch has no outcome distribution"));
    }
    Ok((state.amp0.sq() / &norm, state.amp1.sq() / &norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::{ratio, Sign};

    fn amp(sign: Sign, num: i64, den: i64) -> ExactAmplitude {
        ExactAmplitude::from_sq(sign, ratio(num, den)).unwrap()
    }

    fn nu_basis() -> Basis {
        Basis::new(amp(Sign::Positive, 2, 3), amp(Sign::Positive, 1, 3)).unwrap()
    }

    #[test]
    fn ghz_examples() {
        let s = ghz_state(8).unwrap();
        assert_eq!(s.remaining(), 8);
        assert_eq!(s.amp0(), &ExactAmplitude::inv_sqrt2());
        assert_eq!(s.amp1(), &ExactAmplitude::inv_sqrt2());
        assert_eq!(ghz_state(2).unwrap().norm_sq(), ratio(1, 1));
        assert_eq!(ghz_state(7).unwrap().remaining(), 7);
        assert!(ghz_state(1).is_err());
        assert!(ghz_state(0).is_err());
    }

    #[test]
    fn first_measurement_in_nu_basis() {
        let pair = measure_next(&ghz_state(8).unwrap(), &nu_basis()).unwrap();
        // (1/√2)(x|0…0⟩ + y|1…1⟩) on 7 qubits
        assert_eq!(pair.first.state.remaining(), 7);
        assert_eq!(pair.first.state.amp0(), &amp(Sign::Positive, 1, 3));
        assert_eq!(pair.first.state.amp1(), &amp(Sign::Positive, 1, 6));
        assert_eq!(pair.first.probability, ratio(1, 2));
        // (1/√2)(y|0…0⟩ − x|1…1⟩)
        assert_eq!(pair.second.state.amp0(), &amp(Sign::Positive, 1, 6));
        assert_eq!(pair.second.state.amp1(), &amp(Sign::Negative, 1, 3));
        assert_eq!(pair.second.probability, ratio(1, 2));
    }

    #[test]
    fn lambda_one_measurement_after_perp() {
        let pair = measure_next(&ghz_state(8).unwrap(), &nu_basis()).unwrap();
        // λ_1: c0² = 4/5, c1² = 1/5
        let lambda1 = Basis::new(amp(Sign::Positive, 4, 5), amp(Sign::Positive, 1, 5)).unwrap();
        let next = measure_next(&pair.second.state, &lambda1).unwrap();
        // (1/(√2 F_2))(x|0…0⟩ − y|1…1⟩) with F_2² = 5/2
        assert_eq!(next.first.state.amp0(), &amp(Sign::Positive, 2, 15));
        assert_eq!(next.first.state.amp1(), &amp(Sign::Negative, 1, 15));
        assert_eq!(next.first.probability, ratio(2, 5));
        assert_eq!(next.second.probability, ratio(3, 5));
    }

    #[test]
    fn measuring_bob_is_rejected() {
        let s = ChainState::new(1, ExactAmplitude::inv_sqrt2(), ExactAmplitude::inv_sqrt2()).unwrap();
        assert!(matches!(measure_next(&s, &Basis::plus_minus()), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_branch_handling() {
        let pair = measure_next(&ghz_state(3).unwrap(), &Basis::computational()).unwrap();
        assert_eq!(pair.first.probability, ratio(1, 2));
        let dead = measure_next(&pair.first.state, &Basis::computational()).unwrap().second;
        assert_eq!(dead.probability, ratio(0, 1));
        assert!(measure_next(&ChainState::new(3, ExactAmplitude::zero(), ExactAmplitude::zero()).unwrap(), &Basis::plus_minus()).is_err());
        assert!(bob_distribution(&dead.state).is_err());
    }

    #[test]
    fn bob_distribution_examples() {
        let sixteenth = amp(Sign::Positive, 1, 256);
        let s = ChainState::new(1, sixteenth.clone(), sixteenth).unwrap();
        assert_eq!(bob_distribution(&s).unwrap(), (ratio(1, 2), ratio(1, 2)));

        let s = ChainState::new(1, amp(Sign::Positive, 1, 4), ExactAmplitude::zero()).unwrap();
        assert_eq!(bob_distribution(&s).unwrap(), (ratio(1, 1), ratio(0, 1)));

        assert!(bob_distribution(&ghz_state(2).unwrap()).is_err());
    }

    #[test]
    fn basis_validation() {
        assert!(Basis::new(amp(Sign::Positive, 1, 2), amp(Sign::Positive, 1, 3)).is_err());
        assert!(Basis::plus_minus().is_plus_minus());
        assert!(!nu_basis().is_plus_minus());
        let json = serde_json::to_string(&nu_basis()).unwrap();
        assert_eq!(serde_json::from_str::<Basis>(&json).unwrap(), nu_basis());
        let bad = json.replace("\"num\":\"1\",\"den\":\"3\"", "\"num\":\"1\",\"den\":\"4\"");
        assert!(serde_json::from_str::<Basis>(&bad).is_err());
    }

    #[test]
    fn chain_state_validation() {
        assert!(ChainState::new(0, ExactAmplitude::one(), ExactAmplitude::zero()).is_err());
        assert!(ChainState::new(2, ExactAmplitude::one(), ExactAmplitude::one()).is_err());
    }
}
