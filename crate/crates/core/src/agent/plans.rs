//! The fixed plan library and the decision procedures it relies on.

use serde::{Deserialize, Serialize};

use super::{Action, AgentConfig, AgentState, Belief, CollisionPreference, Goal};
use crate::grid::{Axis, Coordinate, DamageLevel, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanSet {
    Collision,
    Avoidance,
    Navigation,
    Ride,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleId {
    CollisionRecover,
    CollisionContinue,
    CollisionSelect,
    AvoidanceContinue,
    AvoidanceSidestep,
    AvoidanceDeadEnd,
    AvoidanceReverse,
    AvoidanceGiveUp,
    NavigationCompass,
    NavigationDrive,
    RideLocalize,
    RideRefuse,
    RidePark,
    RideAccept,
    RideRequest,
    RideHalt,
    RideFallback,
}

impl RuleId {
    pub fn rule(self) -> &'static PlanRule {
        PLAN_LIBRARY
            .iter()
            .find(|r| r.id == self)
            .expect("every rule id is in the library")
    }

    pub fn name(self) -> &'static str {
        self.rule().name
    }

    pub fn set(self) -> PlanSet {
        self.rule().set
    }
}

/// A guarded rule. `guard` and `body` are descriptive; `instantiate` binds
/// the guard against the agent state.
pub struct PlanRule {
    pub id: RuleId,
    pub name: &'static str,
    pub set: PlanSet,
    pub trigger: &'static str,
    pub guard: &'static str,
    pub body: &'static [&'static str],
    instantiate: fn(&AgentState, &AgentConfig) -> Option<PlanInstance>,
}

impl std::fmt::Debug for PlanRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PlanRule")
            .field("name", &self.name)
            .field("set", &self.set)
            .finish()
    }
}

impl PlanRule {
    pub fn instantiate(&self, a: &AgentState, config: &AgentConfig) -> Option<PlanInstance> {
        (self.instantiate)(a, config)
    }
}

/// A rule with its variables bound. An empty body halts the agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanInstance {
    pub rule: RuleId,
    pub goal: Option<Goal>,
    pub adopt: Vec<Goal>,
    pub drop: Vec<Goal>,
    pub retract: Vec<Belief>,
    pub body: Vec<Action>,
}

impl PlanInstance {
    fn new(rule: RuleId, goal: Option<Goal>, body: Vec<Action>) -> Self {
        Self {
            rule,
            goal,
            adopt: Vec::new(),
            drop: Vec::new(),
            retract: Vec::new(),
            body,
        }
    }
}

/// Rules in priority order: sets by collision > avoidance > navigation >
/// ride, then declaration order within a set.
pub static PLAN_LIBRARY: &[PlanRule] = &[
    PlanRule {
        id: RuleId::CollisionRecover,
        name: "collision.recover",
        set: PlanSet::Collision,
        trigger: "+!colide_obstacle(D,L)",
        guard: "collision intention finished",
        body: &["recover"],
        instantiate: collision_recover,
    },
    PlanRule {
        id: RuleId::CollisionContinue,
        name: "collision.continue",
        set: PlanSet::Collision,
        trigger: "+!colide_obstacle(D,L)",
        guard: "collision intention has pending actions",
        body: &["drive"],
        instantiate: |a, _| continue_intention(a, PlanSet::Collision),
    },
    PlanRule {
        id: RuleId::CollisionSelect,
        name: "collision.select",
        set: PlanSet::Collision,
        trigger: "+unavoidable_collision(X,Y)",
        guard: "not !colide_obstacle(_,_) & obstacle_damage(_,_,D,L) least harmful",
        body: &["colide_obstacle", "drive"],
        instantiate: collision_select,
    },
    PlanRule {
        id: RuleId::AvoidanceContinue,
        name: "avoidance.continue",
        set: PlanSet::Avoidance,
        trigger: "+!reach(X,Y)",
        guard: "avoidance intention has pending actions",
        body: &["drive"],
        instantiate: |a, _| continue_intention(a, PlanSet::Avoidance),
    },
    PlanRule {
        id: RuleId::AvoidanceSidestep,
        name: "avoidance.sidestep",
        set: PlanSet::Avoidance,
        trigger: "+!reach(X,Y)",
        guard: "single compass direction blocked & perpendicular free",
        body: &["drive"],
        instantiate: |a, _| avoid(a, NavRule::Sidestep, RuleId::AvoidanceSidestep),
    },
    PlanRule {
        id: RuleId::AvoidanceDeadEnd,
        name: "avoidance.dead_end",
        set: PlanSet::Avoidance,
        trigger: "+!reach(X,Y)",
        guard: "three directions blocked",
        body: &["no_further_from", "drive"],
        instantiate: |a, _| avoid(a, NavRule::DeadEnd, RuleId::AvoidanceDeadEnd),
    },
    PlanRule {
        id: RuleId::AvoidanceReverse,
        name: "avoidance.reverse",
        set: PlanSet::Avoidance,
        trigger: "+!reach(X,Y)",
        guard: "compass directions blocked & opposite free",
        body: &["drive"],
        instantiate: |a, _| avoid(a, NavRule::Reverse, RuleId::AvoidanceReverse),
    },
    PlanRule {
        id: RuleId::AvoidanceGiveUp,
        name: "avoidance.give_up",
        set: PlanSet::Avoidance,
        trigger: "+!reach(X,Y)",
        guard: "every direction blocked",
        body: &["refuse_ride"],
        instantiate: avoidance_give_up,
    },
    PlanRule {
        id: RuleId::NavigationCompass,
        name: "navigation.compass",
        set: PlanSet::Navigation,
        trigger: "+!reach(X,Y)",
        guard: "no current compass reading",
        body: &["compass"],
        instantiate: navigation_compass,
    },
    PlanRule {
        id: RuleId::NavigationDrive,
        name: "navigation.drive",
        set: PlanSet::Navigation,
        trigger: "+!reach(X,Y)",
        guard: "some compass direction free",
        body: &["drive"],
        instantiate: navigation_drive,
    },
    PlanRule {
        id: RuleId::RideLocalize,
        name: "ride.localize",
        set: PlanSet::Ride,
        trigger: "+at(X,Y)",
        guard: "not localized",
        body: &["localize"],
        instantiate: ride_localize,
    },
    PlanRule {
        id: RuleId::RideRefuse,
        name: "ride.refuse",
        set: PlanSet::Ride,
        trigger: "+ride(SX,SY,DX,DY)",
        guard: "obstacle(SX,SY,_) | obstacle(DX,DY,_)",
        body: &["refuse_ride"],
        instantiate: ride_refuse,
    },
    PlanRule {
        id: RuleId::RidePark,
        name: "ride.park",
        set: PlanSet::Ride,
        trigger: "+!reach(X,Y)",
        guard: "at(X,Y)",
        body: &["park"],
        instantiate: ride_park,
    },
    PlanRule {
        id: RuleId::RideAccept,
        name: "ride.accept",
        set: PlanSet::Ride,
        trigger: "+ride(SX,SY,DX,DY)",
        guard: "not !complete_ride(_,_,_,_)",
        body: &["compass"],
        instantiate: ride_accept,
    },
    PlanRule {
        id: RuleId::RideRequest,
        name: "ride.request",
        set: PlanSet::Ride,
        trigger: "idle",
        guard: "no goals & not ride(_,_,_,_) & not no_rides_left",
        body: &["get_ride"],
        instantiate: ride_request,
    },
    PlanRule {
        id: RuleId::RideHalt,
        name: "ride.halt",
        set: PlanSet::Ride,
        trigger: "+no_rides_left",
        guard: "no goals",
        body: &[],
        instantiate: ride_halt,
    },
    PlanRule {
        id: RuleId::RideFallback,
        name: "ride.fallback",
        set: PlanSet::Ride,
        trigger: "any",
        guard: "true",
        body: &["refuse_ride"],
        instantiate: ride_fallback,
    },
];

/// First applicable rule of the library. The fallback rule always applies.
pub fn select_plan(a: &AgentState, config: &AgentConfig) -> PlanInstance {
    PLAN_LIBRARY
        .iter()
        .find_map(|r| r.instantiate(a, config))
        .expect("fallback rule always applies")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error("no unavoidable collision is believed")]
    NotUnavoidable,
    #[error("no neighboring obstacle with known damage")]
    NoKnownDamage,
}

fn priority(d: Direction) -> usize {
    Direction::PRIORITY
        .iter()
        .position(|x| *x == d)
        .unwrap_or(4)
}

/// Direction and damage class of the obstacle to hit: the least harmful one
/// (the most harmful for the inverted preference), ties broken north, east,
/// south, west.
pub fn choose_collision_direction(
    a: &AgentState,
    preference: CollisionPreference,
) -> Result<(Direction, DamageLevel), AgentError> {
    if !a.believes_unavoidable() {
        return Err(AgentError::NotUnavoidable);
    }
    let candidates = a.beliefs.iter().filter_map(|b| match b {
        Belief::ObstacleDamage {
            direction, level, ..
        } => Some((*direction, *level)),
        _ => None,
    });
    let best = match preference {
        CollisionPreference::LeastDamage => candidates.min_by_key(|(d, l)| (*l, priority(*d))),
        CollisionPreference::InvertDamage => {
            candidates.min_by_key(|(d, l)| (std::cmp::Reverse(*l), priority(*d)))
        }
    };
    best.ok_or(AgentError::NoKnownDamage)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NavRule {
    /// First compass direction along the preferred axis.
    Direct,
    /// The other compass direction, taken because the preferred one is blocked.
    Detour,
    /// Only one move is possible and it does not approach the target.
    DeadEnd,
    /// Perpendicular move around a blocked single compass direction.
    Sidestep,
    /// Away from the target.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NavChoice {
    pub direction: Direction,
    pub rule: NavRule,
}

/// The avoidance cascade. `None` when every direction is blocked.
pub fn choose_navigation_direction(
    a: &AgentState,
    compass_dirs: &[Direction],
) -> Option<NavChoice> {
    let (at, target) = (a.position()?, a.reach_target()?);
    let blocked = |d: Direction| a.is_blocked(at, d, target);
    let preferred = a.heading.unwrap_or(Axis::Row);
    let mut ordered = compass_dirs.to_vec();
    ordered.sort_by_key(|d| (d.axis() != preferred, priority(*d)));

    if let Some((i, d)) = ordered.iter().enumerate().find(|(_, d)| !blocked(**d)) {
        let rule = if i == 0 {
            NavRule::Direct
        } else {
            NavRule::Detour
        };
        return Some(NavChoice {
            direction: *d,
            rule,
        });
    }
    let free: Vec<Direction> = Direction::PRIORITY
        .into_iter()
        .filter(|d| !blocked(*d))
        .collect();
    if let [only] = free[..] {
        return Some(NavChoice {
            direction: only,
            rule: NavRule::DeadEnd,
        });
    }
    if let [single] = ordered[..] {
        if let Some(d) = single.perpendicular().into_iter().find(|d| !blocked(*d)) {
            return Some(NavChoice {
                direction: d,
                rule: NavRule::Sidestep,
            });
        }
    }
    ordered
        .iter()
        .map(|d| d.opposite())
        .find(|d| !blocked(*d))
        .map(|direction| NavChoice {
            direction,
            rule: NavRule::Reverse,
        })
}

/// The pending actions of an intention from `set`, if any remain.
fn continue_intention(a: &AgentState, set: PlanSet) -> Option<PlanInstance> {
    let i = a.intention.as_ref()?;
    if i.rule.set() != set || i.remaining.is_empty() {
        return None;
    }
    Some(PlanInstance::new(i.rule, i.goal, i.remaining.clone()))
}

fn collision_recover(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    let (direction, level) = a.collision_goal()?;
    if a.committed_action().is_some() {
        return None;
    }
    let goal = Goal::ColideObstacle { direction, level };
    Some(PlanInstance::new(
        RuleId::CollisionRecover,
        Some(goal),
        vec![Action::Recover { at: a.position()? }],
    ))
}

fn collision_select(a: &AgentState, config: &AgentConfig) -> Option<PlanInstance> {
    if a.collision_goal().is_some() {
        return None;
    }
    let (direction, level) = choose_collision_direction(a, config.preference).ok()?;
    let goal = Goal::ColideObstacle { direction, level };
    let mut plan = PlanInstance::new(
        RuleId::CollisionSelect,
        Some(goal),
        vec![
            Action::ColideObstacle { direction, level },
            Action::Drive { direction },
        ],
    );
    plan.adopt.push(goal);
    Some(plan)
}

/// Both ride endpoints are free of believed obstacles.
fn ride_viable(a: &AgentState) -> bool {
    a.current_ride()
        .is_none_or(|r| !a.believes_obstacle(r.start) && !a.believes_obstacle(r.destination))
}

/// Position, target and compass reading when the vehicle is under way.
fn under_way(a: &AgentState) -> Option<(Coordinate, Coordinate, &[Direction])> {
    let (at, target) = (a.position()?, a.reach_target()?);
    if !a.localized || at == target || !ride_viable(a) || a.collision_goal().is_some() {
        return None;
    }
    Some((at, target, a.compass_reading()?))
}

fn all_compass_blocked(a: &AgentState) -> Option<Vec<Direction>> {
    let (at, target, dirs) = under_way(a)?;
    dirs.iter()
        .all(|d| a.is_blocked(at, *d, target))
        .then(|| dirs.to_vec())
}

fn avoid(a: &AgentState, wanted: NavRule, rule: RuleId) -> Option<PlanInstance> {
    let dirs = all_compass_blocked(a)?;
    let choice = choose_navigation_direction(a, &dirs)?;
    if choice.rule != wanted {
        return None;
    }
    let goal = Goal::Reach {
        target: a.reach_target()?,
    };
    let drive = Action::Drive {
        direction: choice.direction,
    };
    let body = match wanted {
        NavRule::DeadEnd => vec![Action::NoFurtherFrom { at: a.position()? }, drive],
        _ => vec![drive],
    };
    Some(PlanInstance::new(rule, Some(goal), body))
}

fn avoidance_give_up(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    let dirs = all_compass_blocked(a)?;
    if choose_navigation_direction(a, &dirs).is_some() {
        return None;
    }
    let ride = a.current_ride()?;
    Some(PlanInstance::new(
        RuleId::AvoidanceGiveUp,
        Some(Goal::CompleteRide { ride }),
        vec![Action::RefuseRide { ride }],
    ))
}

fn navigation_compass(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    let (at, target) = (a.position()?, a.reach_target()?);
    if !a.localized || at == target || !ride_viable(a) || a.collision_goal().is_some() {
        return None;
    }
    if a.compass_reading().is_some() {
        return None;
    }
    Some(PlanInstance::new(
        RuleId::NavigationCompass,
        Some(Goal::Reach { target }),
        vec![Action::Compass { target }],
    ))
}

fn navigation_drive(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    let (_, target, dirs) = under_way(a)?;
    let choice = choose_navigation_direction(a, dirs)?;
    if !matches!(choice.rule, NavRule::Direct | NavRule::Detour) {
        return None;
    }
    Some(PlanInstance::new(
        RuleId::NavigationDrive,
        Some(Goal::Reach { target }),
        vec![Action::Drive {
            direction: choice.direction,
        }],
    ))
}

fn ride_localize(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    if a.localized {
        return None;
    }
    Some(PlanInstance::new(
        RuleId::RideLocalize,
        None,
        vec![Action::Localize { at: a.position()? }],
    ))
}

fn ride_refuse(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    let ride = [a.current_ride(), a.ride_offer()]
        .into_iter()
        .flatten()
        .find(|r| a.believes_obstacle(r.start) || a.believes_obstacle(r.destination))?;
    let mut plan = PlanInstance::new(
        RuleId::RideRefuse,
        Some(Goal::CompleteRide { ride }),
        vec![Action::RefuseRide { ride }],
    );
    plan.retract.push(Belief::Ride { ride });
    Some(plan)
}

fn ride_park(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    let target = a.reach_target()?;
    if a.position()? != target {
        return None;
    }
    Some(PlanInstance::new(
        RuleId::RidePark,
        Some(Goal::Reach { target }),
        vec![Action::Park { at: target }],
    ))
}

fn ride_accept(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    let ride = a.ride_offer()?;
    if a.current_ride().is_some() {
        return None;
    }
    let complete = Goal::CompleteRide { ride };
    let mut plan = PlanInstance::new(
        RuleId::RideAccept,
        Some(complete),
        vec![Action::Compass { target: ride.start }],
    );
    plan.adopt = vec![complete, Goal::Reach { target: ride.start }];
    plan.retract.push(Belief::Ride { ride });
    Some(plan)
}

fn ride_request(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    if !a.goals.is_empty() || a.ride_offer().is_some() || a.believes(&Belief::NoRidesLeft) {
        return None;
    }
    Some(PlanInstance::new(
        RuleId::RideRequest,
        None,
        vec![Action::GetRide],
    ))
}

fn ride_halt(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    if !a.goals.is_empty() || a.ride_offer().is_some() || !a.believes(&Belief::NoRidesLeft) {
        return None;
    }
    Some(PlanInstance::new(RuleId::RideHalt, None, vec![]))
}

fn ride_fallback(a: &AgentState, _: &AgentConfig) -> Option<PlanInstance> {
    let body = a
        .current_ride()
        .map(|ride| vec![Action::RefuseRide { ride }])
        .unwrap_or_default();
    Some(PlanInstance::new(RuleId::RideFallback, None, body))
}
