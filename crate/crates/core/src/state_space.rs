//! The spider content space: six ordinal attributes, their mixed-radix
//! indexing, legal single-step edits and the numeric appearance lookups.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of ordinal attributes describing a spider.
pub const NUM_ATTRIBUTES: usize = 6;

/// Number of values each attribute can take, in column order
/// `[locomotion, amount_of_movement, closeness, largeness, hairiness, color]`.
pub const RADICES: [u8; NUM_ATTRIBUTES] = [3, 3, 3, 3, 2, 3];

/// Total number of distinct spiders.
pub const NUM_STATES: usize = 486;

/// Number of canonical action slots (`attribute * 2 + direction`).
pub const NUM_ACTION_SLOTS: usize = NUM_ATTRIBUTES * 2;

/// Short column names used in CSV files, in attribute order.
pub const ATTRIBUTE_COLUMNS: [&str; NUM_ATTRIBUTES] =
    ["loc", "aom", "close", "large", "hair", "color"];

/// Human-readable attribute names, in attribute order.
pub const ATTRIBUTE_NAMES: [&str; NUM_ATTRIBUTES] = [
    "locomotion",
    "amount_of_movement",
    "closeness",
    "largeness",
    "hairiness",
    "color",
];

/// Attribute positions, usable as indices into a [`SpiderAttributes`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Attribute {
    Locomotion = 0,
    AmountOfMovement = 1,
    Closeness = 2,
    Largeness = 3,
    Hairiness = 4,
    Color = 5,
}

impl Attribute {
    pub const ALL: [Attribute; NUM_ATTRIBUTES] = [
        Attribute::Locomotion,
        Attribute::AmountOfMovement,
        Attribute::Closeness,
        Attribute::Largeness,
        Attribute::Hairiness,
        Attribute::Color,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Largest ordinal value this attribute accepts.
    pub fn max_value(self) -> u8 {
        RADICES[self.index()] - 1
    }

    pub fn name(self) -> &'static str {
        ATTRIBUTE_NAMES[self.index()]
    }
}

/// A point in the 486-element spider space.
///
/// Fields are private so that every value in circulation is within bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u8; NUM_ATTRIBUTES]", into = "[u8; NUM_ATTRIBUTES]")]
pub struct SpiderAttributes([u8; NUM_ATTRIBUTES]);

impl SpiderAttributes {
    /// All attributes at their minimum.
    pub const MIN: SpiderAttributes = SpiderAttributes([0; NUM_ATTRIBUTES]);
    /// All attributes at their maximum.
    pub const MAX: SpiderAttributes = SpiderAttributes([2, 2, 2, 2, 1, 2]);
    /// Every attribute at value 1.
    pub const MID: SpiderAttributes = SpiderAttributes([1; NUM_ATTRIBUTES]);

    pub fn new(values: [u8; NUM_ATTRIBUTES]) -> Result<Self> {
        for (i, (&v, &r)) in values.iter().zip(RADICES.iter()).enumerate() {
            if v >= r {
                return Err(Error::Range(format!(
                    "attribute {} = {} exceeds maximum {}",
                    ATTRIBUTE_NAMES[i],
                    v,
                    r - 1
                )));
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> [u8; NUM_ATTRIBUTES] {
        self.0
    }

    pub fn get(&self, attribute: Attribute) -> u8 {
        self.0[attribute.index()]
    }

    /// Iterator over every spider in index order.
    pub fn all() -> impl Iterator<Item = SpiderAttributes> {
        (0..NUM_STATES).map(|i| decode(i).expect("index in range"))
    }
}

impl TryFrom<[u8; NUM_ATTRIBUTES]> for SpiderAttributes {
    type Error = Error;

    fn try_from(values: [u8; NUM_ATTRIBUTES]) -> Result<Self> {
        Self::new(values)
    }
}

impl From<SpiderAttributes> for [u8; NUM_ATTRIBUTES] {
    fn from(s: SpiderAttributes) -> Self {
        s.0
    }
}

impl fmt::Display for SpiderAttributes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.0;
        write!(f, "[{},{},{},{},{},{}]", v[0], v[1], v[2], v[3], v[4], v[5])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Increase,
    Decrease,
}

impl Direction {
    pub fn delta(self) -> i8 {
        match self {
            Direction::Increase => 1,
            Direction::Decrease => -1,
        }
    }
}

/// Increase or decrease one attribute by one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeAction {
    pub attribute: Attribute,
    pub direction: Direction,
}

impl AttributeAction {
    pub fn new(attribute: Attribute, direction: Direction) -> Self {
        Self {
            attribute,
            direction,
        }
    }

    pub fn increase(attribute: Attribute) -> Self {
        Self::new(attribute, Direction::Increase)
    }

    pub fn decrease(attribute: Attribute) -> Self {
        Self::new(attribute, Direction::Decrease)
    }

    /// Canonical slot in `0..12`: attribute-major, increase before decrease.
    pub fn slot(self) -> usize {
        self.attribute.index() * 2
            + match self.direction {
                Direction::Increase => 0,
                Direction::Decrease => 1,
            }
    }

    pub fn from_slot(slot: usize) -> Option<Self> {
        let attribute = Attribute::from_index(slot / 2)?;
        let direction = if slot.is_multiple_of(2) {
            Direction::Increase
        } else {
            Direction::Decrease
        };
        Some(Self::new(attribute, direction))
    }

    /// Whether this action keeps `spider` inside the content space.
    pub fn is_valid_for(self, spider: &SpiderAttributes) -> bool {
        let v = spider.get(self.attribute);
        match self.direction {
            Direction::Increase => v < self.attribute.max_value(),
            Direction::Decrease => v > 0,
        }
    }
}

impl fmt::Display for AttributeAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.direction {
            Direction::Increase => '+',
            Direction::Decrease => '-',
        };
        write!(f, "{}{}", self.attribute.name(), sign)
    }
}

/// Mixed-radix index of `spider`; locomotion is the most significant digit.
pub fn encode(spider: &SpiderAttributes) -> usize {
    spider
        .0
        .iter()
        .zip(RADICES.iter())
        .fold(0usize, |acc, (&v, &r)| acc * r as usize + v as usize)
}

/// Inverse of [`encode`].
pub fn decode(state_index: usize) -> Result<SpiderAttributes> {
    if state_index >= NUM_STATES {
        return Err(Error::Range(format!(
            "state index {state_index} outside 0..{NUM_STATES}"
        )));
    }
    let mut rest = state_index;
    let mut values = [0u8; NUM_ATTRIBUTES];
    for i in (0..NUM_ATTRIBUTES).rev() {
        let r = RADICES[i] as usize;
        values[i] = (rest % r) as u8;
        rest /= r;
    }
    Ok(SpiderAttributes(values))
}

/// Every in-bounds single-step edit of `spider`, in canonical slot order.
pub fn valid_actions(spider: &SpiderAttributes) -> Vec<AttributeAction> {
    (0..NUM_ACTION_SLOTS)
        .filter_map(AttributeAction::from_slot)
        .filter(|a| a.is_valid_for(spider))
        .collect()
}

pub fn apply_action(
    spider: &SpiderAttributes,
    action: AttributeAction,
) -> Result<SpiderAttributes> {
    if !action.is_valid_for(spider) {
        return Err(Error::InvalidAction(format!(
            "{action} not applicable to {spider}"
        )));
    }
    let mut values = spider.0;
    let i = action.attribute.index();
    values[i] = (values[i] as i8 + action.direction.delta()) as u8;
    Ok(SpiderAttributes(values))
}

/// Numeric rendering parameters for a spider.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisualParameters {
    pub speed: f64,
    pub waiting_time_s: f64,
    pub walking_duration_s: f64,
    /// Inner radius of the roaming annulus around the user, meters.
    pub inner_radius_r1: f64,
    /// Outer radius of the roaming annulus around the user, meters.
    pub outer_radius_r2: f64,
    pub scale: f64,
    pub fur_length: f64,
    pub color_rgb: [u8; 3],
}

const MOVEMENT: [(f64, f64, f64); 3] = [(1.0, 5.0, 8.0), (1.5, 3.0, 10.0), (3.0, 1.0, 12.0)];
const RADII: [(f64, f64); 3] = [(7.0, 9.0), (5.0, 7.0), (3.0, 5.0)];
const SCALE: [f64; 3] = [0.25, 0.5, 1.0];
const FUR: [f64; 2] = [0.0, 0.08];
const COLOR: [[u8; 3]; 3] = [[123, 113, 113], [77, 40, 42], [0, 0, 0]];

pub fn visual_parameters(spider: &SpiderAttributes) -> VisualParameters {
    let (speed, waiting_time_s, walking_duration_s) =
        MOVEMENT[spider.get(Attribute::AmountOfMovement) as usize];
    let (inner_radius_r1, outer_radius_r2) = RADII[spider.get(Attribute::Closeness) as usize];
    VisualParameters {
        speed,
        waiting_time_s,
        walking_duration_s,
        inner_radius_r1,
        outer_radius_r2,
        scale: SCALE[spider.get(Attribute::Largeness) as usize],
        fur_length: FUR[spider.get(Attribute::Hairiness) as usize],
        color_rgb: COLOR[spider.get(Attribute::Color) as usize],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: [u8; 6]) -> SpiderAttributes {
        SpiderAttributes::new(v).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(&s([0, 0, 0, 0, 0, 0])), 0);
        assert_eq!(encode(&s([2, 2, 2, 2, 1, 2])), 485);
        assert_eq!(encode(&s([0, 0, 0, 0, 0, 1])), 1);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode(0).unwrap(), s([0; 6]));
        assert_eq!(decode(485).unwrap(), s([2, 2, 2, 2, 1, 2]));
        assert_eq!(decode(3).unwrap(), s([0, 0, 0, 0, 1, 0]));
        assert!(matches!(decode(486), Err(Error::Range(_))));
    }

    #[test]
    fn bijection_over_all_indices() {
        for i in 0..NUM_STATES {
            assert_eq!(encode(&decode(i).unwrap()), i);
        }
        let mut seen = std::collections::HashSet::new();
        for spider in SpiderAttributes::all() {
            assert!(seen.insert(spider));
        }
        assert_eq!(seen.len(), 486);
    }

    #[test]
    fn out_of_bounds_attribute_rejected() {
        assert!(SpiderAttributes::new([0, 0, 0, 0, 2, 0]).is_err());
        assert!(SpiderAttributes::new([3, 0, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn valid_action_counts() {
        let zero = valid_actions(&SpiderAttributes::MIN);
        assert_eq!(zero.len(), 6);
        assert!(zero.iter().all(|a| a.direction == Direction::Increase));
        let max = valid_actions(&SpiderAttributes::MAX);
        assert_eq!(max.len(), 6);
        assert!(max.iter().all(|a| a.direction == Direction::Decrease));
        assert_eq!(valid_actions(&SpiderAttributes::MID).len(), 11);
    }

    #[test]
    fn valid_actions_are_canonically_ordered() {
        let acts = valid_actions(&SpiderAttributes::MID);
        assert_eq!(acts[0], AttributeAction::increase(Attribute::Locomotion));
        assert_eq!(acts[1], AttributeAction::decrease(Attribute::Locomotion));
        // hairiness is at its max, so only its decrement appears
        assert_eq!(acts[8], AttributeAction::decrease(Attribute::Hairiness));
        let slots: Vec<_> = acts.iter().map(|a| a.slot()).collect();
        assert!(slots.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn every_applicable_edit_is_listed() {
        for spider in SpiderAttributes::all() {
            let listed = valid_actions(&spider);
            for slot in 0..NUM_ACTION_SLOTS {
                let a = AttributeAction::from_slot(slot).unwrap();
                let ok = apply_action(&spider, a).is_ok();
                assert_eq!(ok, listed.contains(&a), "{spider} {a}");
                if let Ok(next) = apply_action(&spider, a) {
                    let changed = spider
                        .values()
                        .iter()
                        .zip(next.values().iter())
                        .filter(|(x, y)| x != y)
                        .count();
                    assert_eq!(changed, 1);
                }
            }
        }
    }

    #[test]
    fn apply_action_examples() {
        let next = apply_action(
            &s([1, 0, 1, 1, 1, 1]),
            AttributeAction::increase(Attribute::AmountOfMovement),
        )
        .unwrap();
        assert_eq!(next, s([1, 1, 1, 1, 1, 1]));

        let err = apply_action(
            &SpiderAttributes::MIN,
            AttributeAction::decrease(Attribute::Hairiness),
        );
        assert!(matches!(err, Err(Error::InvalidAction(_))));

        let next = apply_action(
            &s([2, 2, 1, 0, 0, 1]),
            AttributeAction::decrease(Attribute::Locomotion),
        )
        .unwrap();
        assert_eq!(next, s([1, 2, 1, 0, 0, 1]));
    }

    #[test]
    fn visual_lookup() {
        let p = visual_parameters(&s([0, 2, 0, 0, 0, 0]));
        assert_eq!(
            (p.speed, p.waiting_time_s, p.walking_duration_s),
            (3.0, 1.0, 12.0)
        );
        assert_eq!((p.inner_radius_r1, p.outer_radius_r2), (7.0, 9.0));
        assert_eq!(p.scale, 0.25);
        assert_eq!(p.fur_length, 0.0);
        assert_eq!(p.color_rgb, [123, 113, 113]);

        let p = visual_parameters(&SpiderAttributes::MAX);
        assert_eq!((p.inner_radius_r1, p.outer_radius_r2), (3.0, 5.0));
        assert_eq!(p.scale, 1.0);
        assert_eq!(p.fur_length, 0.08);
        assert_eq!(p.color_rgb, [0, 0, 0]);
    }

    #[test]
    fn inner_radius_below_outer_everywhere() {
        for spider in SpiderAttributes::all() {
            let p = visual_parameters(&spider);
            assert!(p.inner_radius_r1 < p.outer_radius_r2);
        }
    }
}
