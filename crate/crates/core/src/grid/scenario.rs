//! Line-oriented scenario file reader.
//!
//! ```text
//! # comment
//! grid 5
//! start 2 1
//! ride 4 1 4 0
//! obstacle 1 1 any
//! collision_prob 0.5
//! damage_prob 0.2 0.3 0.5
//! ```

use super::{CollisionModel, Coordinate, DamageLabel, Obstacle, Ride, Scenario};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl ScenarioError {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        ScenarioError::Invalid(message.into())
    }
}

pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut grid = None;
    let mut start = None;
    let mut rides = Vec::new();
    let mut obstacles = Vec::new();
    let mut model = CollisionModel::default();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ScenarioError::Parse { line, message };
        let mut words = content.split_whitespace();
        let directive = words.next().unwrap_or_default();
        let args: Vec<&str> = words.collect();
        let expect = |count: usize| {
            if args.len() == count {
                Ok(())
            } else {
                Err(err(format!(
                    "`{directive}` takes {count} argument(s), found {}",
                    args.len()
                )))
            }
        };
        let index = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("expected a non-negative integer, found `{s}`")))
        };
        let prob = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|p| p.is_finite())
                .ok_or_else(|| err(format!("expected a probability, found `{s}`")))
        };

        match directive {
            "grid" => {
                expect(1)?;
                if grid.replace(index(args[0])?).is_some() {
                    return Err(err("`grid` given twice".into()));
                }
            }
            "start" => {
                expect(2)?;
                let c = Coordinate::new(index(args[0])?, index(args[1])?);
                if start.replace(c).is_some() {
                    return Err(err("`start` given twice".into()));
                }
            }
            "ride" => {
                expect(4)?;
                rides.push(Ride {
                    start: Coordinate::new(index(args[0])?, index(args[1])?),
                    destination: Coordinate::new(index(args[2])?, index(args[3])?),
                });
            }
            "obstacle" => {
                expect(3)?;
                let damage = match args[2] {
                    "any" => DamageLabel::Any,
                    other => DamageLabel::Known(other.parse().map_err(err)?),
                };
                obstacles.push(Obstacle {
                    position: Coordinate::new(index(args[0])?, index(args[1])?),
                    damage,
                });
            }
            "collision_prob" => {
                expect(1)?;
                model.collide = prob(args[0])?;
            }
            "damage_prob" => {
                expect(3)?;
                model.low = prob(args[0])?;
                model.moderate = prob(args[1])?;
                model.high = prob(args[2])?;
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let n = grid.ok_or_else(|| ScenarioError::invalid("missing `grid` directive"))?;
    let start = start.ok_or_else(|| ScenarioError::invalid("missing `start` directive"))?;
    Scenario::new(n, start, rides, obstacles, model)
}
