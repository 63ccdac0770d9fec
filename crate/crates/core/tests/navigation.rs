mod common;

use std::collections::HashSet;

use avmc::agent::episode::{simulate, SeededResolver};
use avmc::agent::{choose_navigation_direction, AgentConfig, NavRule};
use avmc::grid::{compass, load_scenario, Axis, Coordinate, Direction};
use common::*;

fn rule_name(rule: NavRule) -> &'static str {
    match rule {
        NavRule::Direct => "direct",
        NavRule::Detour => "detour",
        NavRule::DeadEnd => "dead_end",
        NavRule::Sidestep => "sidestep",
        NavRule::Reverse => "reverse",
    }
}

#[test]
fn cascade_matches_oracle_on_every_local_view() {
    let mut checked = 0usize;
    let mut seen_rules = HashSet::new();
    for ax in 0..5 {
        for ay in 0..5 {
            for tx in 0..5 {
                for ty in 0..5 {
                    let (at, target) = (Coordinate::new(ax, ay), Coordinate::new(tx, ty));
                    if at == target {
                        continue;
                    }
                    let dirs = compass(at, target);
                    for code in 0..256usize {
                        let cells = std::array::from_fn(|i| CELL_KINDS[code >> (2 * i) & 3]);
                        for heading in [None, Some(Axis::Row), Some(Axis::Column)] {
                            let agent = agent_with_view(at, target, heading, cells);
                            let got = choose_navigation_direction(&agent, &dirs)
                                .map(|c| (c.direction, rule_name(c.rule)));
                            let want = navigation_oracle(at, &dirs, heading, cells);
                            assert_eq!(
                                got, want,
                                "at {at} target {target} heading {heading:?} cells {cells:?}"
                            );
                            if let Some((_, r)) = want {
                                seen_rules.insert(r);
                            }
                            checked += 1;
                        }
                    }
                }
            }
        }
    }
    assert_eq!(checked, 25 * 24 * 256 * 3);
    assert_eq!(seen_rules.len(), 5, "every rule exercised: {seen_rules:?}");
}

#[test]
fn row_axis_first_then_column() {
    let agent = agent_with_view(
        Coordinate::new(0, 0),
        Coordinate::new(2, 2),
        None,
        [Cell::Free; 4],
    );
    let c = choose_navigation_direction(
        &agent,
        &compass(Coordinate::new(0, 0), Coordinate::new(2, 2)),
    )
    .unwrap();
    assert_eq!((c.direction, c.rule), (Direction::North, NavRule::Direct));

    let blocked_north = [Cell::Obstacle, Cell::Free, Cell::Free, Cell::Free];
    let agent = agent_with_view(
        Coordinate::new(0, 0),
        Coordinate::new(2, 2),
        None,
        blocked_north,
    );
    let c = choose_navigation_direction(
        &agent,
        &compass(Coordinate::new(0, 0), Coordinate::new(2, 2)),
    )
    .unwrap();
    assert_eq!((c.direction, c.rule), (Direction::East, NavRule::Detour));
}

#[test]
fn single_open_move_is_a_dead_end() {
    // Walls south and west, obstacles north and east: nothing is free.
    let boxed = [Cell::Obstacle, Cell::Obstacle, Cell::Free, Cell::Free];
    let agent = agent_with_view(Coordinate::new(0, 0), Coordinate::new(2, 2), None, boxed);
    assert_eq!(
        choose_navigation_direction(&agent, &[Direction::North, Direction::East]),
        None
    );

    // In the middle of the grid with three sides blocked.
    let pocket = [Cell::Obstacle, Cell::Excluded, Cell::Free, Cell::DeadEnd];
    let agent = agent_with_view(Coordinate::new(2, 2), Coordinate::new(4, 2), None, pocket);
    let c = choose_navigation_direction(&agent, &[Direction::North]).unwrap();
    assert_eq!((c.direction, c.rule), (Direction::South, NavRule::DeadEnd));
}

#[test]
fn blocked_single_direction_sidesteps() {
    let cells = [Cell::Obstacle, Cell::Free, Cell::Free, Cell::Free];
    let agent = agent_with_view(Coordinate::new(1, 2), Coordinate::new(3, 2), None, cells);
    let c = choose_navigation_direction(&agent, &[Direction::North]).unwrap();
    assert_eq!((c.direction, c.rule), (Direction::East, NavRule::Sidestep));
}

fn drives_for(text: &str) -> (usize, Coordinate) {
    let sc = load_scenario(text).unwrap();
    let run = simulate(
        &sc,
        &AgentConfig::default(),
        &mut SeededResolver::new(0),
        1000,
    );
    (run.count("drive"), run.final_state().env.position)
}

#[test]
fn open_grid_legs_are_manhattan() {
    let empty = HashSet::new();
    for (s, d) in [
        ((0, 0), (4, 4)),
        ((4, 0), (0, 4)),
        ((2, 2), (2, 0)),
        ((3, 1), (0, 1)),
    ] {
        let (s, d) = (Coordinate::new(s.0, s.1), Coordinate::new(d.0, d.1));
        let text = format!("grid 5\nstart 0 0\nride {} {} {} {}\n", s.x, s.y, d.x, d.y);
        let (drives, end) = drives_for(&text);
        let expected = bfs_distance(5, Coordinate::new(0, 0), s, &empty).unwrap()
            + bfs_distance(5, s, d, &empty).unwrap();
        assert_eq!((drives, end), (expected, d), "{s} -> {d}");
    }
}

#[test]
fn detours_around_a_known_obstacle() {
    let (drives, end) = drives_for("grid 5\nstart 0 2\nride 0 2 4 2\nobstacle 2 2 low\n");
    assert_eq!(end, Coordinate::new(4, 2));
    let mut blocked = HashSet::new();
    blocked.insert(Coordinate::new(2, 2));
    let shortest = bfs_distance(5, Coordinate::new(0, 2), Coordinate::new(4, 2), &blocked).unwrap();
    assert!(drives >= shortest);
    // The local rules back out of two pockets before going round: sidestep,
    // compass points back, excluded, dead end, reverse. Frozen path length.
    assert_eq!(drives, 14);
}
