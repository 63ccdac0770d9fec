//! BDI vehicle agent.
//!
//! One deliberation cycle absorbs the current percepts, selects the first
//! applicable plan (collision > avoidance > navigation > ride) and performs a
//! single action. [`AgentState`] is a plain value: deliberation never
//! mutates its input, so states can be hashed and shared by the checker.

pub mod episode;
mod plans;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::{compass, Axis, Coordinate, DamageLevel, Direction, Percept, Ride};
use crate::psl::{GroundAtom, Term};

pub use plans::{
    choose_collision_direction, choose_navigation_direction, select_plan, NavChoice, NavRule,
    PlanInstance, PlanSet, RuleId, PLAN_LIBRARY,
};

pub const AGENT_NAME: &str = "vehicle";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollisionPreference {
    /// Hit the least harmful obstacle.
    #[default]
    LeastDamage,
    /// Deliberately wrong: hit the most harmful obstacle.
    InvertDamage,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentConfig {
    pub name: String,
    pub preference: CollisionPreference,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            name: AGENT_NAME.to_owned(),
            preference: CollisionPreference::LeastDamage,
        }
    }
}

impl AgentConfig {
    pub fn mutant() -> Self {
        Self {
            preference: CollisionPreference::InvertDamage,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Belief {
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
    Obstacle {
        at: Coordinate,
        level: DamageLevel,
    },
    NoRidesLeft,
    Ride {
        ride: Ride,
    },
    Collided {
        at: Coordinate,
        level: DamageLevel,
    },
}

impl Belief {
    /// Beliefs that describe the current surroundings and are replaced on
    /// every cycle.
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            Belief::At { .. }
                | Belief::ObstacleAhead { .. }
                | Belief::ObstacleDamage { .. }
                | Belief::UnavoidableCollision { .. }
        )
    }

    pub fn to_atom(&self) -> GroundAtom {
        match self {
            Belief::At { at } => Percept::At { at: *at }.to_atom(),
            Belief::ObstacleAhead { direction, at } => Percept::ObstacleAhead {
                direction: *direction,
                at: *at,
            }
            .to_atom(),
            Belief::ObstacleDamage {
                at,
                direction,
                level,
            } => Percept::ObstacleDamage {
                at: *at,
                direction: *direction,
                level: *level,
            }
            .to_atom(),
            Belief::UnavoidableCollision { at } => {
                Percept::UnavoidableCollision { at: *at }.to_atom()
            }
            Belief::Obstacle { at, level } => {
                atom("obstacle", &[at.x.into(), at.y.into(), level.name().into()])
            }
            Belief::NoRidesLeft => atom("no_rides_left", &[]),
            Belief::Ride { ride } => Percept::Ride { ride: *ride }.to_atom(),
            Belief::Collided { at, level } => {
                atom("collided", &[at.x.into(), at.y.into(), level.name().into()])
            }
        }
    }
}

fn atom(name: &str, args: &[Term]) -> GroundAtom {
    GroundAtom::new(name, args.to_vec())
}

fn ride_args(r: &Ride) -> [Term; 4] {
    [
        r.start.x.into(),
        r.start.y.into(),
        r.destination.x.into(),
        r.destination.y.into(),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Goal {
    CompleteRide {
        ride: Ride,
    },
    Reach {
        target: Coordinate,
    },
    ColideObstacle {
        direction: Direction,
        level: DamageLevel,
    },
}

impl Goal {
    pub fn to_atom(&self) -> GroundAtom {
        match self {
            Goal::CompleteRide { ride } => atom("complete_ride", &ride_args(ride)),
            Goal::Reach { target } => atom("reach", &[target.x.into(), target.y.into()]),
            Goal::ColideObstacle { direction, level } => atom(
                "colide_obstacle",
                &[direction.name().into(), level.name().into()],
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Action {
    Localize {
        at: Coordinate,
    },
    GetRide,
    Park {
        at: Coordinate,
    },
    RefuseRide {
        ride: Ride,
    },
    Compass {
        target: Coordinate,
    },
    Drive {
        direction: Direction,
    },
    NoFurtherFrom {
        at: Coordinate,
    },
    ColideObstacle {
        direction: Direction,
        level: DamageLevel,
    },
    Recover {
        at: Coordinate,
    },
}

impl Action {
    pub const NAMES: [&'static str; 9] = [
        "localize",
        "get_ride",
        "park",
        "refuse_ride",
        "compass",
        "drive",
        "no_further_from",
        "colide_obstacle",
        "recover",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Action::Localize { .. } => "localize",
            Action::GetRide => "get_ride",
            Action::Park { .. } => "park",
            Action::RefuseRide { .. } => "refuse_ride",
            Action::Compass { .. } => "compass",
            Action::Drive { .. } => "drive",
            Action::NoFurtherFrom { .. } => "no_further_from",
            Action::ColideObstacle { .. } => "colide_obstacle",
            Action::Recover { .. } => "recover",
        }
    }

    pub fn to_atom(&self) -> GroundAtom {
        let xy = |c: &Coordinate| vec![Term::from(c.x), Term::from(c.y)];
        let args = match self {
            Action::Localize { at }
            | Action::Park { at }
            | Action::NoFurtherFrom { at }
            | Action::Recover { at } => xy(at),
            Action::Compass { target } => xy(target),
            Action::GetRide => vec![],
            Action::RefuseRide { ride } => ride_args(ride).to_vec(),
            Action::Drive { direction } => vec![direction.name().into()],
            Action::ColideObstacle { direction, level } => {
                vec![direction.name().into(), level.name().into()]
            }
        };
        GroundAtom::new(self.name(), args)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.to_atom();
        write!(f, "{}(", a.name)?;
        for (i, t) in a.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// A (cell, direction, destination) triple of the route memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RouteRecord {
    pub cell: Coordinate,
    pub direction: Direction,
    pub destination: Coordinate,
}

/// Answer of the last `compass` action; valid only while the vehicle stays
/// at `at` and keeps heading for `target`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CompassReading {
    pub at: Coordinate,
    pub target: Coordinate,
    pub directions: Vec<Direction>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Intention {
    pub rule: RuleId,
    pub goal: Option<Goal>,
    /// Actions still to perform, head first.
    pub remaining: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentState {
    /// Side length of the grid, known to the vehicle from the start.
    pub grid_order: usize,
    pub beliefs: BTreeSet<Belief>,
    /// Bottom is the outermost goal.
    pub goals: Vec<Goal>,
    pub intention: Option<Intention>,
    pub localized: bool,
    pub compass: Option<CompassReading>,
    /// Cells left during the current leg, with the direction taken.
    pub departures: BTreeSet<RouteRecord>,
    /// Moves never to repeat while heading for the same destination.
    pub route_memory: BTreeSet<RouteRecord>,
    /// (cell, destination) pairs marked by `no_further_from`.
    pub dead_ends: BTreeSet<(Coordinate, Coordinate)>,
    /// Axis of the last navigation move in the current leg.
    pub heading: Option<Axis>,
    pub last_action: Option<Action>,
    pub halted: bool,
}

impl AgentState {
    pub fn new(grid_order: usize) -> Self {
        Self {
            grid_order,
            beliefs: BTreeSet::new(),
            goals: Vec::new(),
            intention: None,
            localized: false,
            compass: None,
            departures: BTreeSet::new(),
            route_memory: BTreeSet::new(),
            dead_ends: BTreeSet::new(),
            heading: None,
            last_action: None,
            halted: false,
        }
    }

    pub fn position(&self) -> Option<Coordinate> {
        self.beliefs.iter().find_map(|b| match b {
            Belief::At { at } => Some(*at),
            _ => None,
        })
    }

    pub fn believes(&self, b: &Belief) -> bool {
        self.beliefs.contains(b)
    }

    pub fn believes_obstacle(&self, c: Coordinate) -> bool {
        self.beliefs.iter().any(|b| match b {
            Belief::Obstacle { at, .. } | Belief::ObstacleAhead { at, .. } => *at == c,
            _ => false,
        })
    }

    pub fn believes_unavoidable(&self) -> bool {
        self.beliefs
            .iter()
            .any(|b| matches!(b, Belief::UnavoidableCollision { .. }))
    }

    pub fn ride_offer(&self) -> Option<Ride> {
        self.beliefs.iter().find_map(|b| match b {
            Belief::Ride { ride } => Some(*ride),
            _ => None,
        })
    }

    /// The ride being served, if any.
    pub fn current_ride(&self) -> Option<Ride> {
        self.goals.iter().find_map(|g| match g {
            Goal::CompleteRide { ride } => Some(*ride),
            _ => None,
        })
    }

    /// Target of the active movement goal.
    pub fn reach_target(&self) -> Option<Coordinate> {
        self.goals.iter().rev().find_map(|g| match g {
            Goal::Reach { target } => Some(*target),
            _ => None,
        })
    }

    pub fn collision_goal(&self) -> Option<(Direction, DamageLevel)> {
        self.goals.iter().find_map(|g| match g {
            Goal::ColideObstacle { direction, level } => Some((*direction, *level)),
            _ => None,
        })
    }

    /// Damage level to announce to the environment when driving `direction`.
    pub fn collision_intent(&self, direction: Direction) -> Option<DamageLevel> {
        self.collision_goal()
            .filter(|(d, _)| *d == direction)
            .map(|(_, l)| l)
    }

    /// Compass answer for the current position and target, if still valid.
    pub fn compass_reading(&self) -> Option<&[Direction]> {
        let (at, target) = (self.position()?, self.reach_target()?);
        self.compass
            .as_ref()
            .filter(|r| r.at == at && r.target == target)
            .map(|r| r.directions.as_slice())
    }

    pub fn committed_action(&self) -> Option<&Action> {
        self.intention.as_ref().and_then(|i| i.remaining.first())
    }

    /// Whether moving `direction` from `at` toward `target` is ruled out by
    /// the grid edge, a believed obstacle or the route memory.
    pub fn is_blocked(&self, at: Coordinate, direction: Direction, target: Coordinate) -> bool {
        let Some(next) = at.step(direction, self.grid_order) else {
            return true;
        };
        self.believes_obstacle(next)
            || self.route_memory.contains(&RouteRecord {
                cell: at,
                direction,
                destination: target,
            })
            || self.dead_ends.contains(&(next, target))
    }

    /// Replaces the transient beliefs by the new percepts and folds the
    /// persistent ones in. Re-entering a cell against the direction it was
    /// left in, toward the same target, records a route exclusion.
    pub fn update_beliefs(&self, percepts: &[Percept]) -> AgentState {
        let mut next = self.clone();
        let old_at = self.position();
        next.beliefs.retain(|b| !b.is_transient());
        for p in percepts {
            match *p {
                Percept::At { at } => {
                    next.beliefs.insert(Belief::At { at });
                }
                Percept::ObstacleAhead { direction, at } => {
                    next.beliefs.insert(Belief::ObstacleAhead { direction, at });
                }
                Percept::ObstacleDamage {
                    at,
                    direction,
                    level,
                } => {
                    next.beliefs.insert(Belief::ObstacleDamage {
                        at,
                        direction,
                        level,
                    });
                    next.beliefs.insert(Belief::Obstacle { at, level });
                }
                Percept::UnavoidableCollision { at } => {
                    next.beliefs.insert(Belief::UnavoidableCollision { at });
                }
                Percept::NoRidesLeft => {
                    next.beliefs.insert(Belief::NoRidesLeft);
                }
                Percept::Ride { ride } => {
                    next.beliefs.insert(Belief::Ride { ride });
                }
            }
        }

        let Some(new_at) = next.position() else {
            return next;
        };
        let hit: Vec<DamageLevel> = next
            .beliefs
            .iter()
            .filter_map(|b| match b {
                Belief::Obstacle { at, level } if *at == new_at => Some(*level),
                _ => None,
            })
            .collect();
        for level in hit {
            next.beliefs.remove(&Belief::Obstacle { at: new_at, level });
            next.beliefs.insert(Belief::Collided { at: new_at, level });
        }

        if let (Some(old), Some(target)) = (old_at, next.reach_target()) {
            if let Some(moved) = old.direction_to(new_at) {
                let record = RouteRecord {
                    cell: new_at,
                    direction: moved.opposite(),
                    destination: target,
                };
                if next.departures.contains(&record) {
                    next = next.record_exclusion(new_at, moved.opposite(), target);
                }
            }
        }
        next
    }

    pub fn record_exclusion(&self, c: Coordinate, d1: Direction, dest: Coordinate) -> AgentState {
        let mut next = self.clone();
        next.route_memory.insert(RouteRecord {
            cell: c,
            direction: d1,
            destination: dest,
        });
        next
    }

    fn clear_route(&mut self) {
        self.departures.clear();
        self.route_memory.clear();
        self.dead_ends.clear();
        self.heading = None;
        self.compass = None;
    }

    /// Agent-side effects of performing `action`.
    fn apply(&mut self, action: Action) {
        match action {
            Action::Localize { .. } => self.localized = true,
            Action::GetRide | Action::ColideObstacle { .. } => {}
            Action::Compass { target } => {
                if let Some(at) = self.position() {
                    self.compass = Some(CompassReading {
                        at,
                        target,
                        directions: compass(at, target),
                    });
                }
            }
            Action::Drive { direction } => {
                if self.collision_goal().is_none() {
                    if let (Some(at), Some(target)) = (self.position(), self.reach_target()) {
                        self.departures.insert(RouteRecord {
                            cell: at,
                            direction,
                            destination: target,
                        });
                        self.heading = Some(direction.axis());
                    }
                }
            }
            Action::NoFurtherFrom { at } => {
                if let Some(target) = self.reach_target() {
                    self.dead_ends.insert((at, target));
                }
            }
            Action::Park { at } => {
                if let Some(pos) = self
                    .goals
                    .iter()
                    .rposition(|g| *g == Goal::Reach { target: at })
                {
                    self.goals.remove(pos);
                }
                if let Some(ride) = self.current_ride() {
                    if at == ride.start {
                        self.goals.push(Goal::Reach {
                            target: ride.destination,
                        });
                    } else if at == ride.destination {
                        self.goals.retain(|g| *g != Goal::CompleteRide { ride });
                    }
                }
                self.clear_route();
            }
            Action::RefuseRide { ride } => {
                self.beliefs.remove(&Belief::Ride { ride });
                if self.current_ride() == Some(ride) {
                    self.goals
                        .retain(|g| !matches!(g, Goal::CompleteRide { .. } | Goal::Reach { .. }));
                }
                self.clear_route();
            }
            Action::Recover { .. } => {
                self.goals
                    .retain(|g| !matches!(g, Goal::ColideObstacle { .. }));
                self.localized = false;
                self.compass = None;
            }
        }
    }

    /// One deliberation cycle. `None` means the agent halted; a halted agent
    /// stays halted.
    pub fn deliberate(
        &self,
        percepts: &[Percept],
        config: &AgentConfig,
    ) -> (AgentState, Option<Action>) {
        if self.halted {
            return (self.clone(), None);
        }
        let next = self.update_beliefs(percepts);
        let plan = select_plan(&next, config);
        next.adopt(plan)
    }

    fn adopt(mut self, plan: PlanInstance) -> (AgentState, Option<Action>) {
        for g in &plan.drop {
            if let Some(pos) = self.goals.iter().position(|x| x == g) {
                self.goals.remove(pos);
            }
        }
        for b in &plan.retract {
            self.beliefs.remove(b);
        }
        self.goals.extend(plan.adopt.iter().copied());
        let mut body = plan.body.into_iter();
        let Some(action) = body.next() else {
            self.halted = true;
            self.goals.clear();
            self.intention = None;
            return (self, None);
        };
        self.intention = Some(Intention {
            rule: plan.rule,
            goal: plan.goal,
            remaining: body.collect(),
        });
        self.apply(action);
        self.last_action = Some(action);
        (self, Some(action))
    }

    /// Atoms visible to `B`: the belief base plus derived route facts.
    pub fn belief_atoms(&self) -> Vec<GroundAtom> {
        let mut out: Vec<GroundAtom> = self.beliefs.iter().map(Belief::to_atom).collect();
        for r in &self.route_memory {
            out.push(atom(
                "route_excluded",
                &[
                    r.cell.x.into(),
                    r.cell.y.into(),
                    r.direction.name().into(),
                    r.destination.x.into(),
                    r.destination.y.into(),
                ],
            ));
        }
        for (c, _) in &self.dead_ends {
            out.push(atom("no_further_from", &[c.x.into(), c.y.into()]));
        }
        if let Some(dirs) = self.compass_reading() {
            for d in dirs {
                out.push(atom("compass", &[d.name().into()]));
            }
        }
        out
    }

    pub fn goal_atoms(&self) -> Vec<GroundAtom> {
        self.goals.iter().map(Goal::to_atom).collect()
    }

    pub fn intention_atoms(&self) -> Vec<GroundAtom> {
        self.intention
            .iter()
            .filter_map(|i| i.goal.as_ref().map(Goal::to_atom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: usize, y: usize) -> Coordinate {
        Coordinate::new(x, y)
    }

    #[test]
    fn obstacle_beliefs_persist() {
        let a = AgentState::new(5);
        let a = a.update_beliefs(&[
            Percept::At { at: c(2, 1) },
            Percept::ObstacleAhead {
                direction: Direction::South,
                at: c(1, 1),
            },
            Percept::ObstacleDamage {
                at: c(1, 1),
                direction: Direction::South,
                level: DamageLevel::Low,
            },
        ]);
        let kept = Belief::Obstacle {
            at: c(1, 1),
            level: DamageLevel::Low,
        };
        assert!(a.believes(&kept));
        let b = a.update_beliefs(&[Percept::At { at: c(3, 1) }]);
        assert!(b.believes(&kept));
        assert_eq!(b.position(), Some(c(3, 1)));
        assert_eq!(b.beliefs.len(), 2);
    }

    #[test]
    fn empty_percepts_drop_only_transient_beliefs() {
        let a = AgentState::new(5).update_beliefs(&[
            Percept::At { at: c(2, 1) },
            Percept::UnavoidableCollision { at: c(2, 1) },
            Percept::NoRidesLeft,
        ]);
        let b = a.update_beliefs(&[]);
        assert_eq!(b.beliefs, BTreeSet::from([Belief::NoRidesLeft]));
    }

    #[test]
    fn reperceiving_is_idempotent() {
        let p = [
            Percept::At { at: c(0, 0) },
            Percept::ObstacleAhead {
                direction: Direction::North,
                at: c(1, 0),
            },
        ];
        let a = AgentState::new(5).update_beliefs(&p);
        assert_eq!(a.update_beliefs(&p), a);
    }

    #[test]
    fn opposing_revisit_records_exclusion() {
        let mut a = AgentState::new(5);
        a.goals.push(Goal::Reach { target: c(4, 0) });
        a = a.update_beliefs(&[Percept::At { at: c(2, 2) }]);
        a.apply(Action::Drive {
            direction: Direction::North,
        });
        a = a.update_beliefs(&[Percept::At { at: c(3, 2) }]);
        assert!(a.route_memory.is_empty());
        a = a.update_beliefs(&[Percept::At { at: c(2, 2) }]);
        let rec = RouteRecord {
            cell: c(2, 2),
            direction: Direction::North,
            destination: c(4, 0),
        };
        assert_eq!(a.route_memory, BTreeSet::from([rec]));
        assert!(a.is_blocked(c(2, 2), Direction::North, c(4, 0)));
        assert!(!a.is_blocked(c(2, 2), Direction::North, c(4, 4)));
    }

    #[test]
    fn action_vocabulary_has_nine_names() {
        let names: BTreeSet<_> = Action::NAMES.iter().collect();
        assert_eq!(names.len(), 9);
        assert_eq!(
            Action::Drive {
                direction: Direction::North
            }
            .to_string(),
            "drive(north)"
        );
        assert_eq!(Action::GetRide.to_string(), "get_ride()");
    }
}
