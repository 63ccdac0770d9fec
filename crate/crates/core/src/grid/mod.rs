//! Grid-world taxi environment.
//!
//! The world is a square matrix of order `n` whose cells are addressed by
//! `(row, column)`. Cells may hold a static obstacle with a damage class, and
//! the environment hands out rides from a fixed queue. Everything here is a
//! pure function over immutable values; branching (damage classification and
//! collision outcomes) is returned to the caller rather than sampled.

mod scenario;

pub use scenario::{load_scenario, ScenarioError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::psl::{GroundAtom, Term};

/// A cell of the grid: `x` is the row index, `y` the column index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coordinate {
    pub x: usize,
    pub y: usize,
}

impl Coordinate {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn in_bounds(self, n: usize) -> bool {
        self.x < n && self.y < n
    }

    /// The cell one move away in `dir`, or `None` when that crosses a wall.
    pub fn step(self, dir: Direction, n: usize) -> Option<Coordinate> {
        let (x, y) = match dir {
            Direction::North => (self.x.checked_add(1)?, self.y),
            Direction::South => (self.x.checked_sub(1)?, self.y),
            Direction::East => (self.x, self.y.checked_add(1)?),
            Direction::West => (self.x, self.y.checked_sub(1)?),
        };
        let c = Coordinate::new(x, y);
        c.in_bounds(n).then_some(c)
    }

    pub fn manhattan(self, other: Coordinate) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    /// Direction of a single move from `self` to an adjacent `other`.
    pub fn direction_to(self, other: Coordinate) -> Option<Direction> {
        Direction::ALL
            .into_iter()
            .find(|d| self.step(*d, usize::MAX).is_some_and(|c| c == other))
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    North,
    South,
    East,
    West,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// North/south moves: they change the row index.
    Row,
    /// East/west moves: they change the column index.
    Column,
}

impl Direction {
    /// Neighbor enumeration order.
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    /// Tie-break order used by every agent decision.
    pub const PRIORITY: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
        }
    }

    pub fn axis(self) -> Axis {
        match self {
            Direction::North | Direction::South => Axis::Row,
            Direction::East | Direction::West => Axis::Column,
        }
    }

    /// The two directions at right angles, in priority order.
    pub fn perpendicular(self) -> [Direction; 2] {
        match self.axis() {
            Axis::Row => [Direction::East, Direction::West],
            Axis::Column => [Direction::North, Direction::South],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "north" => Ok(Direction::North),
            "south" => Ok(Direction::South),
            "east" => Ok(Direction::East),
            "west" => Ok(Direction::West),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

/// Damage class of an obstacle, ordered from least to most harmful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DamageLevel {
    Low,
    Moderate,
    High,
}

impl DamageLevel {
    pub const ALL: [DamageLevel; 3] = [DamageLevel::Low, DamageLevel::Moderate, DamageLevel::High];

    /// Order in which unresolved classifications are enumerated as branches.
    /// The two extremes come first so that ranking mistakes between them
    /// surface in the earliest explored branches.
    pub const BRANCH_ORDER: [DamageLevel; 3] =
        [DamageLevel::Low, DamageLevel::High, DamageLevel::Moderate];

    pub fn name(self) -> &'static str {
        match self {
            DamageLevel::Low => "low",
            DamageLevel::Moderate => "moderate",
            DamageLevel::High => "high",
        }
    }
}

impl fmt::Display for DamageLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DamageLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(DamageLevel::Low),
            "moderate" => Ok(DamageLevel::Moderate),
            "high" => Ok(DamageLevel::High),
            other => Err(format!("unknown damage level `{other}`")),
        }
    }
}

/// Damage label as written in a scenario file. `Any` is resolved by the
/// environment the first time the obstacle is perceived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DamageLabel {
    Known(DamageLevel),
    Any,
}

impl fmt::Display for DamageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DamageLabel::Known(level) => level.fmt(f),
            DamageLabel::Any => f.write_str("any"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obstacle {
    pub position: Coordinate,
    pub damage: DamageLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ride {
    pub start: Coordinate,
    pub destination: Coordinate,
}

impl fmt::Display for Ride {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.destination)
    }
}

/// Probabilities used when a run is simulated rather than verified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionModel {
    /// Probability that a collision manoeuvre actually hits the obstacle.
    pub collide: f64,
    pub low: f64,
    pub moderate: f64,
    pub high: f64,
}

impl CollisionModel {
    pub fn escape(&self) -> f64 {
        1.0 - self.collide
    }

    pub fn level_probability(&self, level: DamageLevel) -> f64 {
        match level {
            DamageLevel::Low => self.low,
            DamageLevel::Moderate => self.moderate,
            DamageLevel::High => self.high,
        }
    }
}

impl Default for CollisionModel {
    fn default() -> Self {
        Self {
            collide: 0.5,
            low: 1.0 / 3.0,
            moderate: 1.0 / 3.0,
            high: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n: usize,
    pub start: Coordinate,
    pub rides: Vec<Ride>,
    #[serde(with = "cell_map")]
    pub obstacles: BTreeMap<Coordinate, DamageLabel>,
    pub collision_model: CollisionModel,
}

impl Scenario {
    /// Builds a scenario and checks every structural invariant.
    pub fn new(
        n: usize,
        start: Coordinate,
        rides: Vec<Ride>,
        obstacles: Vec<Obstacle>,
        collision_model: CollisionModel,
    ) -> Result<Self, ScenarioError> {
        if n == 0 {
            return Err(ScenarioError::invalid("grid order must be at least 1"));
        }
        if !start.in_bounds(n) {
            return Err(ScenarioError::invalid(format!(
                "start {start} is outside the grid"
            )));
        }
        for ride in &rides {
            for c in [ride.start, ride.destination] {
                if !c.in_bounds(n) {
                    return Err(ScenarioError::invalid(format!(
                        "ride {ride} has endpoint {c} outside the grid"
                    )));
                }
            }
            if ride.start == ride.destination {
                return Err(ScenarioError::invalid(format!(
                    "ride {ride} starts at its destination"
                )));
            }
        }
        let mut map = BTreeMap::new();
        for ob in obstacles {
            if !ob.position.in_bounds(n) {
                return Err(ScenarioError::invalid(format!(
                    "obstacle {} is outside the grid",
                    ob.position
                )));
            }
            if map.insert(ob.position, ob.damage).is_some() {
                return Err(ScenarioError::invalid(format!(
                    "duplicate obstacle at {}",
                    ob.position
                )));
            }
        }
        if map.contains_key(&start) {
            return Err(ScenarioError::invalid(format!(
                "start {start} is occupied by an obstacle"
            )));
        }
        let m = &collision_model;
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if !unit(m.collide) {
            return Err(ScenarioError::invalid(
                "collision probability must lie in [0,1]",
            ));
        }
        if !(unit(m.low) && unit(m.moderate) && unit(m.high))
            || (m.low + m.moderate + m.high - 1.0).abs() > 1e-9
        {
            return Err(ScenarioError::invalid(
                "damage probabilities must lie in [0,1] and sum to 1",
            ));
        }
        Ok(Self {
            n,
            start,
            rides,
            obstacles: map,
            collision_model,
        })
    }

    pub fn obstacles(&self) -> impl Iterator<Item = Obstacle> + '_ {
        self.obstacles
            .iter()
            .map(|(&position, &damage)| Obstacle { position, damage })
    }

    pub fn initial_state(&self) -> EnvState {
        let damage = self
            .obstacles
            .iter()
            .filter_map(|(c, label)| match label {
                DamageLabel::Known(level) => Some((*c, *level)),
                DamageLabel::Any => None,
            })
            .collect();
        EnvState {
            position: self.start,
            previous: None,
            next_ride: 0,
            damage,
            damage_events: Vec::new(),
            cleared: BTreeSet::new(),
            ride_reply: None,
        }
    }
}

/// What the last `get_ride` request returned; perceived once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RideReply {
    Offered(Ride),
    NoneLeft,
}

/// Dynamic part of the environment. The scenario itself is passed alongside.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EnvState {
    pub position: Coordinate,
    pub previous: Option<Coordinate>,
    /// Index of the head of the remaining ride queue.
    pub next_ride: usize,
    /// Resolved damage class per obstacle cell.
    #[serde(with = "cell_map")]
    pub damage: BTreeMap<Coordinate, DamageLevel>,
    pub damage_events: Vec<(Coordinate, DamageLevel)>,
    pub cleared: BTreeSet<Coordinate>,
    pub ride_reply: Option<RideReply>,
}

impl EnvState {
    pub fn has_live_obstacle(&self, scenario: &Scenario, c: Coordinate) -> bool {
        scenario.obstacles.contains_key(&c) && !self.cleared.contains(&c)
    }

    pub fn remaining_rides<'a>(&self, scenario: &'a Scenario) -> &'a [Ride] {
        &scenario.rides[self.next_ride.min(scenario.rides.len())..]
    }

    /// Live neighboring obstacles whose damage class has not been decided yet.
    pub fn unresolved_neighbors(&self, scenario: &Scenario) -> Vec<Coordinate> {
        let mut cells: Vec<Coordinate> = neighbors(self.position, scenario.n)
            .into_iter()
            .map(|(_, c)| c)
            .filter(|c| self.has_live_obstacle(scenario, *c) && !self.damage.contains_key(c))
            .collect();
        cells.sort();
        cells
    }

    pub fn resolve(&self, assignment: &[(Coordinate, DamageLevel)]) -> EnvState {
        let mut next = self.clone();
        next.damage.extend(assignment.iter().copied());
        next
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Percept {
    At {
        at: Coordinate,
    },
    ObstacleAhead {
        direction: Direction,
        at: Coordinate,
    },
    ObstacleDamage {
        at: Coordinate,
        direction: Direction,
        level: DamageLevel,
    },
    UnavoidableCollision {
        at: Coordinate,
    },
    NoRidesLeft,
    Ride {
        ride: Ride,
    },
}

impl Percept {
    pub fn to_atom(&self) -> GroundAtom {
        let xy = |c: &Coordinate| vec![Term::from(c.x), Term::from(c.y)];
        match self {
            Percept::At { at } => GroundAtom::new("at", xy(at)),
            Percept::ObstacleAhead { direction, at } => {
                let mut args = vec![Term::from(direction.name())];
                args.extend(xy(at));
                GroundAtom::new("obstacle_ahead", args)
            }
            Percept::ObstacleDamage {
                at,
                direction,
                level,
            } => {
                let mut args = xy(at);
                args.push(direction.name().into());
                args.push(level.name().into());
                GroundAtom::new("obstacle_damage", args)
            }
            Percept::UnavoidableCollision { at } => {
                GroundAtom::new("unavoidable_collision", xy(at))
            }
            Percept::NoRidesLeft => GroundAtom::new("no_rides_left", vec![]),
            Percept::Ride { ride } => {
                let mut args = xy(&ride.start);
                args.extend(xy(&ride.destination));
                GroundAtom::new("ride", args)
            }
        }
    }
}

impl fmt::Display for Percept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Percept::At { at } => write!(f, "at({},{})", at.x, at.y),
            Percept::ObstacleAhead { direction, at } => {
                write!(f, "obstacle_ahead({direction},{},{})", at.x, at.y)
            }
            Percept::ObstacleDamage {
                at,
                direction,
                level,
            } => {
                write!(f, "obstacle_damage({},{},{direction},{level})", at.x, at.y)
            }
            Percept::UnavoidableCollision { at } => {
                write!(f, "unavoidable_collision({},{})", at.x, at.y)
            }
            Percept::NoRidesLeft => f.write_str("no_rides_left"),
            Percept::Ride { ride } => write!(
                f,
                "ride({},{},{},{})",
                ride.start.x, ride.start.y, ride.destination.x, ride.destination.y
            ),
        }
    }
}

/// In-bounds cells one move away, in north, south, east, west order.
pub fn neighbors(c: Coordinate, n: usize) -> Vec<(Direction, Coordinate)> {
    Direction::ALL
        .into_iter()
        .filter_map(|d| c.step(d, n).map(|t| (d, t)))
        .collect()
}

/// Directions that strictly shorten the Manhattan distance from `from` to
/// `to`, in priority order. Empty iff the two coincide.
pub fn compass(from: Coordinate, to: Coordinate) -> Vec<Direction> {
    Direction::PRIORITY
        .into_iter()
        .filter(|d| match d {
            Direction::North => to.x > from.x,
            Direction::South => to.x < from.x,
            Direction::East => to.y > from.y,
            Direction::West => to.y < from.y,
        })
        .collect()
}

/// At least three live obstacles around the vehicle, and every other
/// in-bounds neighbor is the cell it just came from. Before the first move
/// there is no such cell and three obstacles suffice.
pub fn is_unavoidable(scenario: &Scenario, s: &EnvState) -> bool {
    let cells = neighbors(s.position, scenario.n);
    let blocked = cells
        .iter()
        .filter(|(_, c)| s.has_live_obstacle(scenario, *c))
        .count();
    if blocked < 3 {
        return false;
    }
    match s.previous {
        None => true,
        Some(prev) => cells
            .iter()
            .all(|(_, c)| s.has_live_obstacle(scenario, *c) || *c == prev),
    }
}

/// Everything the vehicle senses from its current cell.
pub fn perceive(scenario: &Scenario, s: &EnvState) -> Vec<Percept> {
    let mut out = vec![Percept::At { at: s.position }];
    for (direction, c) in neighbors(s.position, scenario.n) {
        if !s.has_live_obstacle(scenario, c) {
            continue;
        }
        out.push(Percept::ObstacleAhead { direction, at: c });
        if let Some(level) = s.damage.get(&c) {
            out.push(Percept::ObstacleDamage {
                at: c,
                direction,
                level: *level,
            });
        }
    }
    if is_unavoidable(scenario, s) {
        out.push(Percept::UnavoidableCollision { at: s.position });
    }
    match s.ride_reply {
        Some(RideReply::Offered(ride)) => out.push(Percept::Ride { ride }),
        Some(RideReply::NoneLeft) => out.push(Percept::NoRidesLeft),
        None => {}
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionOutcome {
    Collided,
    Escaped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Moved(EnvState),
    /// A collision manoeuvre: both possible results.
    Branch {
        collided: EnvState,
        escaped: EnvState,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("drive {direction} from {from} leaves the grid")]
    OutOfBounds {
        from: Coordinate,
        direction: Direction,
    },
    #[error(
        "drive {direction} from {from} hits the obstacle at {target} without a collision intent"
    )]
    UnintendedCollision {
        from: Coordinate,
        direction: Direction,
        target: Coordinate,
    },
}

/// Moves the vehicle one cell.
///
/// Driving into a live obstacle is only legal with a collision intent, and
/// then yields both outcomes: the vehicle either hits the obstacle (it ends
/// up on the obstacle's cell, the obstacle is cleared and one damage event is
/// logged) or manoeuvres through the free neighbor instead. When no neighbor
/// is free the escaping vehicle stays where it is.
pub fn step_vehicle(
    scenario: &Scenario,
    s: &EnvState,
    direction: Direction,
    collide_intent: Option<DamageLevel>,
) -> Result<StepOutcome, StepError> {
    let from = s.position;
    let target = from
        .step(direction, scenario.n)
        .ok_or(StepError::OutOfBounds { from, direction })?;
    let moved_to = |c: Coordinate| {
        let mut next = s.clone();
        next.previous = Some(from);
        next.position = c;
        next
    };
    if !s.has_live_obstacle(scenario, target) {
        return Ok(StepOutcome::Moved(moved_to(target)));
    }
    if collide_intent.is_none() {
        return Err(StepError::UnintendedCollision {
            from,
            direction,
            target,
        });
    }
    let mut collided = moved_to(target);
    let level = s.damage.get(&target).copied().unwrap_or(DamageLevel::High);
    collided.damage_events.push((target, level));
    collided.cleared.insert(target);

    let free = Direction::PRIORITY.into_iter().find_map(|d| {
        from.step(d, scenario.n)
            .filter(|c| !s.has_live_obstacle(scenario, *c))
    });
    let escaped = match free {
        Some(c) => moved_to(c),
        None => s.clone(),
    };
    Ok(StepOutcome::Branch { collided, escaped })
}

/// Pops the head of the ride queue; `None` means no passengers are left.
pub fn next_ride(scenario: &Scenario, s: &EnvState) -> (EnvState, Option<Ride>) {
    let mut next = s.clone();
    let ride = scenario.rides.get(s.next_ride).copied();
    if ride.is_some() {
        next.next_ride += 1;
    }
    next.ride_reply = Some(match ride {
        Some(r) => RideReply::Offered(r),
        None => RideReply::NoneLeft,
    });
    (next, ride)
}

/// Coordinate-keyed maps as lists of pairs, since JSON keys must be strings.
mod cell_map {
    use super::Coordinate;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<V: Serialize, S: Serializer>(
        map: &BTreeMap<Coordinate, V>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter())
    }

    pub fn deserialize<'de, V: Deserialize<'de>, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Coordinate, V>, D::Error> {
        Ok(Vec::<(Coordinate, V)>::deserialize(d)?
            .into_iter()
            .collect())
    }
}
