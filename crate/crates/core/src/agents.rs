//! Adaptation policies: tabular Q-learning, the correction-factor rules
//! baseline, and a uniform random walk used as a comparison floor.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::{reward, AnxietyLevel, RewardSpec};
use crate::rng::SimRng;
use crate::state_space::{
    apply_action, encode, valid_actions, Attribute, AttributeAction, Direction, SpiderAttributes,
    NUM_ACTION_SLOTS, NUM_ATTRIBUTES, NUM_STATES,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QInit {
    Zero,
    /// Entries drawn i.i.d. uniform in `[0, 1)` from the given seed.
    Random(u64),
}

/// Dense state × action-slot value table.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    values: Vec<f64>,
    init: QInit,
}

impl QTable {
    pub fn new(init: QInit) -> Self {
        let n = NUM_STATES * NUM_ACTION_SLOTS;
        let values = match init {
            QInit::Zero => vec![0.0; n],
            QInit::Random(seed) => {
                let mut rng = crate::rng::rng_from(seed, &[crate::rng::stream::QTABLE_INIT]);
                (0..n).map(|_| rng.random::<f64>()).collect()
            }
        };
        Self { values, init }
    }

    pub fn init_mode(&self) -> QInit {
        self.init
    }

    fn offset(state: &SpiderAttributes, action: AttributeAction) -> usize {
        encode(state) * NUM_ACTION_SLOTS + action.slot()
    }

    /// Value of a state-action pair. Returns `None` for masked (invalid) pairs.
    pub fn get(&self, state: &SpiderAttributes, action: AttributeAction) -> Option<f64> {
        action
            .is_valid_for(state)
            .then(|| self.values[Self::offset(state, action)])
    }

    pub fn set(
        &mut self,
        state: &SpiderAttributes,
        action: AttributeAction,
        value: f64,
    ) -> Result<()> {
        if !action.is_valid_for(state) {
            return Err(Error::InvalidAction(format!(
                "{action} not applicable to {state}"
            )));
        }
        self.values[Self::offset(state, action)] = value;
        Ok(())
    }

    /// Best valid action and its value; ties go to the lowest canonical slot.
    pub fn greedy(&self, state: &SpiderAttributes) -> Option<(AttributeAction, f64)> {
        let mut best: Option<(AttributeAction, f64)> = None;
        for a in valid_actions(state) {
            let q = self.values[Self::offset(state, a)];
            if best.is_none_or(|(_, b)| q > b) {
                best = Some((a, q));
            }
        }
        best
    }

    pub fn max_value(&self, state: &SpiderAttributes) -> f64 {
        self.greedy(state).map(|(_, q)| q).unwrap_or(0.0)
    }

    /// Rows `(state_index, action_slot, value)` for all 486 × 12 slots;
    /// masked slots carry `None`.
    pub fn snapshot(&self) -> Vec<(usize, usize, Option<f64>)> {
        SpiderAttributes::all()
            .flat_map(|s| {
                (0..NUM_ACTION_SLOTS).map(move |slot| {
                    let a = AttributeAction::from_slot(slot).expect("slot in range");
                    (encode(&s), slot, self.get(&s, a))
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub epsilon: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            alpha: 0.5,
            gamma: 0.8,
            seed: 0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha {} outside (0, 1]",
                self.alpha
            )));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma {} outside [0, 1)",
                self.gamma
            )));
        }
        Ok(())
    }
}

/// Epsilon-greedy selection over the valid actions of `state`.
///
/// Exactly one uniform draw decides explore/exploit; exploring consumes a
/// second draw for the action index.
pub fn ql_select_action(
    q: &QTable,
    state: &SpiderAttributes,
    cfg: &AgentConfig,
    rng: &mut SimRng,
) -> AttributeAction {
    let explore = rng.random::<f64>() < cfg.epsilon;
    if explore {
        let actions = valid_actions(state);
        actions[rng.random_range(0..actions.len())]
    } else {
        q.greedy(state).expect("every spider has a valid action").0
    }
}

/// One-step Q-learning backup with max bootstrap over valid next actions.
pub fn ql_update(
    q: &mut QTable,
    state: &SpiderAttributes,
    action: AttributeAction,
    reward: f64,
    next: &SpiderAttributes,
    cfg: &AgentConfig,
) -> Result<()> {
    let current = q
        .get(state, action)
        .ok_or_else(|| Error::InvalidAction(format!("{action} not applicable to {state}")))?;
    let target = reward + cfg.gamma * q.max_value(next);
    q.set(state, action, current + cfg.alpha * (target - current))
}

/// `(current - desired) / 10` on the 0..10 anxiety scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionFactor(f64);

impl CorrectionFactor {
    pub fn new(value: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::Range(format!(
                "correction factor {value} outside [-1, 1]"
            )));
        }
        Ok(Self(value))
    }

    pub fn from_anxiety(current: AnxietyLevel, desired: u8) -> Result<Self> {
        let desired = AnxietyLevel::new(desired)?;
        Self::new((current.value() as f64 - desired.value() as f64) / 10.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Three-way split: `[-1, lo) -> 2`, `[lo, hi] -> 1`, `(hi, 1] -> 0`.
fn three_way(cf: f64, lo: f64, hi: f64) -> u8 {
    if cf < lo {
        2
    } else if cf <= hi {
        1
    } else {
        0
    }
}

/// Attribute values the rules baseline steers toward for a correction factor.
pub fn rb_targets(cf: CorrectionFactor) -> SpiderAttributes {
    let c = cf.value();
    let size = three_way(c, -0.8, -0.2);
    SpiderAttributes::new([
        three_way(c, -0.7, 0.3),
        three_way(c, -0.5, 0.4),
        three_way(c, -0.7, -0.1),
        size,
        if c <= 0.0 { 1 } else { 0 },
        size,
    ])
    .expect("table values are in bounds")
}

/// What the rules baseline does when the spider already matches its targets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmptyCandidatePolicy {
    #[default]
    Hold,
    /// Step a uniformly chosen attribute against the sign of the correction factor.
    Nudge,
}

/// Attributes whose current value differs from the rule targets.
pub fn rb_candidates(current: &SpiderAttributes, cf: CorrectionFactor) -> Vec<Attribute> {
    let targets = rb_targets(cf);
    Attribute::ALL
        .into_iter()
        .filter(|&a| current.get(a) != targets.get(a))
        .collect()
}

/// Picks one mismatching attribute uniformly and moves it one step toward
/// its target. `None` means hold the current spider.
pub fn rb_select_action(
    current: &SpiderAttributes,
    cf: CorrectionFactor,
    policy: EmptyCandidatePolicy,
    rng: &mut SimRng,
) -> Option<AttributeAction> {
    let targets = rb_targets(cf);
    let candidates = rb_candidates(current, cf);
    if let Some(&attribute) = pick(&candidates, rng) {
        let direction = if targets.get(attribute) > current.get(attribute) {
            Direction::Increase
        } else {
            Direction::Decrease
        };
        return Some(AttributeAction::new(attribute, direction));
    }
    match policy {
        EmptyCandidatePolicy::Hold => None,
        EmptyCandidatePolicy::Nudge => {
            let direction = if cf.value() < 0.0 {
                Direction::Increase
            } else if cf.value() > 0.0 {
                Direction::Decrease
            } else {
                return None;
            };
            let options: Vec<AttributeAction> = Attribute::ALL
                .into_iter()
                .map(|a| AttributeAction::new(a, direction))
                .filter(|a| a.is_valid_for(current))
                .collect();
            pick(&options, rng).copied()
        }
    }
}

fn pick<'a, T>(items: &'a [T], rng: &mut SimRng) -> Option<&'a T> {
    if items.is_empty() {
        None
    } else {
        Some(&items[rng.random_range(0..items.len())])
    }
}

/// The adaptation policies available to experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentKind {
    RlZero,
    RlRandom,
    RulesBased,
    RandomWalk,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [
        AgentKind::RlZero,
        AgentKind::RlRandom,
        AgentKind::RulesBased,
        AgentKind::RandomWalk,
    ];

    pub fn label(self) -> &'static str {
        match self {
            AgentKind::RlZero => "rl_zero",
            AgentKind::RlRandom => "rl_random",
            AgentKind::RulesBased => "rules",
            AgentKind::RandomWalk => "random_walk",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == label)
    }
}

/// A stateful adaptation policy driven by observed anxiety.
#[derive(Clone, Debug)]
pub enum Agent {
    QLearning {
        table: QTable,
        cfg: AgentConfig,
        rng: SimRng,
    },
    Rules {
        policy: EmptyCandidatePolicy,
        rng: SimRng,
    },
    RandomWalk {
        rng: SimRng,
    },
}

impl Agent {
    /// Builds a fresh agent; `seed` feeds both table init and action draws.
    pub fn new(kind: AgentKind, cfg: AgentConfig, policy: EmptyCandidatePolicy, seed: u64) -> Self {
        let rng = crate::rng::rng_from(seed, &[crate::rng::stream::AGENT]);
        match kind {
            AgentKind::RlZero => Agent::QLearning {
                table: QTable::new(QInit::Zero),
                cfg,
                rng,
            },
            AgentKind::RlRandom => Agent::QLearning {
                table: QTable::new(QInit::Random(seed)),
                cfg,
                rng,
            },
            AgentKind::RulesBased => Agent::Rules { policy, rng },
            AgentKind::RandomWalk => Agent::RandomWalk { rng },
        }
    }

    /// Chooses the next edit given the current spider, the anxiety it
    /// induced, and the desired anxiety.
    pub fn decide(
        &mut self,
        state: &SpiderAttributes,
        observed: AnxietyLevel,
        target: RewardSpec,
    ) -> Option<AttributeAction> {
        match self {
            Agent::QLearning { table, cfg, rng } => Some(ql_select_action(table, state, cfg, rng)),
            Agent::Rules { policy, rng } => {
                let cf = CorrectionFactor::from_anxiety(observed, target.target())
                    .expect("both levels on the 0..10 scale");
                rb_select_action(state, cf, *policy, rng)
            }
            Agent::RandomWalk { rng } => {
                let actions = valid_actions(state);
                pick(&actions, rng).copied()
            }
        }
    }

    /// Feeds back the outcome of `action`; returns the reward credited.
    pub fn observe(
        &mut self,
        state: &SpiderAttributes,
        action: Option<AttributeAction>,
        next: &SpiderAttributes,
        next_anxiety: AnxietyLevel,
        target: RewardSpec,
    ) -> f64 {
        let r = reward(next_anxiety, target);
        if let (Agent::QLearning { table, cfg, .. }, Some(a)) = (self, action) {
            ql_update(table, state, a, r, next, cfg).expect("decided action is valid");
        }
        r
    }
}

/// Applies an optional action; `None` keeps the spider unchanged.
pub fn step(state: &SpiderAttributes, action: Option<AttributeAction>) -> Result<SpiderAttributes> {
    match action {
        Some(a) => apply_action(state, a),
        None => Ok(*state),
    }
}

/// Number of attributes that differ between two spiders.
pub fn attribute_distance(a: &SpiderAttributes, b: &SpiderAttributes) -> usize {
    (0..NUM_ATTRIBUTES)
        .filter(|&i| a.values()[i] != b.values()[i])
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use proptest::prelude::*;
    use rand::Rng;

    fn s(v: [u8; 6]) -> SpiderAttributes {
        SpiderAttributes::new(v).unwrap()
    }

    fn greedy_cfg() -> AgentConfig {
        AgentConfig {
            epsilon: 0.0,
            ..AgentConfig::default()
        }
    }

    #[test]
    fn zero_table_greedy_takes_first_canonical() {
        let q = QTable::new(QInit::Zero);
        let mut rng = rng_from(1, &[]);
        let a = ql_select_action(&q, &SpiderAttributes::MIN, &greedy_cfg(), &mut rng);
        assert_eq!(a, AttributeAction::increase(Attribute::Locomotion));
    }

    #[test]
    fn greedy_follows_unique_max() {
        let mut q = QTable::new(QInit::Zero);
        let state = SpiderAttributes::MIN;
        let target = AttributeAction::increase(Attribute::AmountOfMovement);
        q.set(&state, target, 0.3).unwrap();
        let mut rng = rng_from(1, &[]);
        assert_eq!(
            ql_select_action(&q, &state, &greedy_cfg(), &mut rng),
            target
        );
    }

    #[test]
    fn full_exploration_replays_under_seed() {
        let q = QTable::new(QInit::Zero);
        let cfg = AgentConfig {
            epsilon: 1.0,
            ..AgentConfig::default()
        };
        let run = |seed| {
            let mut rng = rng_from(seed, &[]);
            (0..50)
                .map(|_| ql_select_action(&q, &SpiderAttributes::MID, &cfg, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        let picks = run(9);
        // 11 valid actions; uniform draws should not collapse onto one
        let distinct: std::collections::HashSet<_> = picks.iter().collect();
        assert!(distinct.len() > 5);
        // replay the rng by hand: one coin, then one index per step
        let mut rng = rng_from(9, &[]);
        let actions = valid_actions(&SpiderAttributes::MID);
        let first = {
            let _coin: f64 = rng.random();
            actions[rng.random_range(0..actions.len())]
        };
        assert_eq!(picks[0], first);
    }

    #[test]
    fn update_examples() {
        let state = SpiderAttributes::MIN;
        let a = AttributeAction::increase(Attribute::Locomotion);
        let next = apply_action(&state, a).unwrap();

        let mut q = QTable::new(QInit::Zero);
        let cfg = AgentConfig {
            alpha: 0.5,
            gamma: 0.9,
            ..AgentConfig::default()
        };
        ql_update(&mut q, &state, a, 1.0, &next, &cfg).unwrap();
        assert_eq!(q.get(&state, a), Some(0.5));

        let mut q = QTable::new(QInit::Random(3));
        let cfg = AgentConfig {
            alpha: 1.0,
            gamma: 0.0,
            ..AgentConfig::default()
        };
        ql_update(&mut q, &state, a, -0.25, &next, &cfg).unwrap();
        assert_eq!(q.get(&state, a), Some(-0.25));

        let mut q = QTable::new(QInit::Zero);
        let cfg = AgentConfig {
            alpha: 0.5,
            gamma: 0.0,
            ..AgentConfig::default()
        };
        ql_update(&mut q, &state, a, 1.0, &next, &cfg).unwrap();
        ql_update(&mut q, &state, a, 1.0, &next, &cfg).unwrap();
        assert_eq!(q.get(&state, a), Some(0.75));
    }

    #[test]
    fn update_bootstraps_from_best_valid_next_action() {
        let state = SpiderAttributes::MIN;
        let a = AttributeAction::increase(Attribute::Color);
        let next = apply_action(&state, a).unwrap();
        let mut q = QTable::new(QInit::Zero);
        q.set(&next, AttributeAction::increase(Attribute::Largeness), 2.0)
            .unwrap();
        let cfg = AgentConfig {
            alpha: 1.0,
            gamma: 0.5,
            ..AgentConfig::default()
        };
        ql_update(&mut q, &state, a, 0.0, &next, &cfg).unwrap();
        assert_eq!(q.get(&state, a), Some(1.0));
    }

    #[test]
    fn update_touches_one_entry() {
        let mut q = QTable::new(QInit::Random(11));
        let before = q.clone();
        let state = SpiderAttributes::MID;
        let a = AttributeAction::decrease(Attribute::Closeness);
        let next = apply_action(&state, a).unwrap();
        ql_update(&mut q, &state, a, 0.3, &next, &AgentConfig::default()).unwrap();
        let changed = before
            .values
            .iter()
            .zip(q.values.iter())
            .filter(|(x, y)| x != y)
            .count();
        assert_eq!(changed, 1);
    }

    #[test]
    fn random_init_is_seeded_unit_interval() {
        let a = QTable::new(QInit::Random(5));
        let b = QTable::new(QInit::Random(5));
        let c = QTable::new(QInit::Random(6));
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert!(a.values.iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn snapshot_masks_invalid_slots() {
        let q = QTable::new(QInit::Zero);
        let rows = q.snapshot();
        assert_eq!(rows.len(), 486 * 12);
        // state 0: every decrement slot is masked
        assert!(rows[..12]
            .iter()
            .filter(|r| r.1 % 2 == 1)
            .all(|r| r.2.is_none()));
        assert!(rows[..12]
            .iter()
            .filter(|r| r.1 % 2 == 0)
            .all(|r| r.2 == Some(0.0)));
    }

    #[test]
    fn table_targets() {
        let cf = |v| CorrectionFactor::new(v).unwrap();
        assert_eq!(rb_targets(cf(-0.3)), SpiderAttributes::MID);
        assert_eq!(rb_targets(cf(-1.0)), SpiderAttributes::MAX);
        assert_eq!(rb_targets(cf(1.0)), SpiderAttributes::MIN);
        assert!(CorrectionFactor::new(1.2).is_err());
    }

    #[test]
    fn table_bracket_endpoints() {
        let t = |v| rb_targets(CorrectionFactor::new(v).unwrap()).values();
        // locomotion: [-1,-0.7) -> 2, [-0.7,0.3] -> 1, (0.3,1] -> 0
        assert_eq!(t(-0.7)[0], 1);
        assert_eq!(t(-0.7000001)[0], 2);
        assert_eq!(t(0.3)[0], 1);
        assert_eq!(t(0.3000001)[0], 0);
        // amount of movement: -0.5 and 0.4 belong to the middle bracket
        assert_eq!(t(-0.5)[1], 1);
        assert_eq!(t(-0.5000001)[1], 2);
        assert_eq!(t(0.4)[1], 1);
        assert_eq!(t(0.4000001)[1], 0);
        // closeness: [-0.7,-0.1] -> 1
        assert_eq!(t(-0.1)[2], 1);
        assert_eq!(t(-0.0999999)[2], 0);
        // size-driven attributes: [-0.8,-0.2] -> 1
        assert_eq!(t(-0.8)[3], 1);
        assert_eq!(t(-0.8000001)[5], 2);
        assert_eq!(t(-0.2)[5], 1);
        assert_eq!(t(-0.1999999)[3], 0);
        // hairiness: [-1,0] -> 1, (0,1] -> 0
        assert_eq!(t(0.0)[4], 1);
        assert_eq!(t(0.0000001)[4], 0);
    }

    #[test]
    fn rules_worked_example() {
        let current = s([1, 0, 1, 1, 1, 1]);
        let cf = CorrectionFactor::from_anxiety(AnxietyLevel::new(4).unwrap(), 7).unwrap();
        assert!((cf.value() + 0.3).abs() < 1e-12);
        assert_eq!(
            rb_candidates(&current, cf),
            vec![Attribute::AmountOfMovement]
        );
        for seed in 0..20 {
            let mut rng = rng_from(seed, &[]);
            let a = rb_select_action(&current, cf, EmptyCandidatePolicy::Hold, &mut rng).unwrap();
            assert_eq!(apply_action(&current, a).unwrap(), SpiderAttributes::MID);
        }
    }

    #[test]
    fn rules_hold_when_matching() {
        let cf = CorrectionFactor::new(-0.3).unwrap();
        let mut rng = rng_from(0, &[]);
        assert_eq!(
            rb_select_action(
                &SpiderAttributes::MID,
                cf,
                EmptyCandidatePolicy::Hold,
                &mut rng
            ),
            None
        );
        let nudged = rb_select_action(
            &SpiderAttributes::MID,
            cf,
            EmptyCandidatePolicy::Nudge,
            &mut rng,
        )
        .unwrap();
        assert_eq!(nudged.direction, Direction::Increase);
    }

    #[test]
    fn rules_from_minimum_under_full_correction() {
        let cf = CorrectionFactor::new(-1.0).unwrap();
        let run = |seed| {
            let mut rng = rng_from(seed, &[]);
            rb_select_action(
                &SpiderAttributes::MIN,
                cf,
                EmptyCandidatePolicy::Hold,
                &mut rng,
            )
            .unwrap()
        };
        let a = run(4);
        assert_eq!(a.direction, Direction::Increase);
        assert_eq!(a, run(4));
        let attrs: std::collections::HashSet<_> = (0..200).map(|k| run(k).attribute).collect();
        assert_eq!(attrs.len(), 6);
    }

    proptest! {
        #[test]
        fn selection_always_valid(idx in 0usize..486, seed in any::<u64>(), eps in 0.0f64..=1.0) {
            let state = crate::state_space::decode(idx).unwrap();
            let q = QTable::new(QInit::Random(seed));
            let cfg = AgentConfig { epsilon: eps, ..AgentConfig::default() };
            let mut rng = rng_from(seed, &[1]);
            let a = ql_select_action(&q, &state, &cfg, &mut rng);
            prop_assert!(a.is_valid_for(&state));
        }

        #[test]
        fn q_values_stay_bounded(seed in any::<u64>(), gamma in 0.0f64..0.95) {
            let cfg = AgentConfig { epsilon: 0.2, alpha: 0.7, gamma, seed };
            let mut q = QTable::new(QInit::Zero);
            let mut rng = rng_from(seed, &[2]);
            let mut state = SpiderAttributes::MIN;
            let bound = 1.0 / (1.0 - gamma);
            for _ in 0..300 {
                let a = ql_select_action(&q, &state, &cfg, &mut rng);
                let next = apply_action(&state, a).unwrap();
                let r: f64 = rng.random_range(-1.0..=1.0);
                ql_update(&mut q, &state, a, r, &next, &cfg).unwrap();
                prop_assert!(q.get(&state, a).unwrap().abs() <= bound + 1e-9);
                state = next;
            }
        }

        #[test]
        fn rules_step_moves_toward_targets(idx in 0usize..486, cf in -1.0f64..=1.0, seed in any::<u64>()) {
            let state = crate::state_space::decode(idx).unwrap();
            let cf = CorrectionFactor::new(cf).unwrap();
            let mut rng = rng_from(seed, &[]);
            let targets = rb_targets(cf);
            match rb_select_action(&state, cf, EmptyCandidatePolicy::Hold, &mut rng) {
                Some(a) => {
                    let next = apply_action(&state, a).unwrap();
                    prop_assert_eq!(attribute_distance(&state, &next), 1);
                    let before = (state.get(a.attribute) as i8 - targets.get(a.attribute) as i8).abs();
                    let after = (next.get(a.attribute) as i8 - targets.get(a.attribute) as i8).abs();
                    prop_assert_eq!(after, before - 1);
                }
                None => prop_assert_eq!(state, targets),
            }
        }
    }
}
