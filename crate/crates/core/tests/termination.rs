//! Every reachable state of a random scenario can still reach a halt, and the
//! environment never rejects an action.

mod common;

use avmc::agent::episode::{simulate, EpisodeEnd, SeededResolver};
use avmc::agent::AgentConfig;
use avmc::checker::system::explore;
use avmc::grid::{load_scenario, Scenario};
use proptest::prelude::*;

const STATE_LIMIT: usize = 200_000;

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (2usize..=5).prop_flat_map(|n| {
        let cell = (0..n, 0..n);
        let level = prop::sample::select(vec!["low", "moderate", "high", "any"]);
        (
            Just(n),
            cell.clone(),
            prop::collection::vec((cell.clone(), cell.clone()), 0..=2),
            prop::collection::vec((cell, level), 0..=6),
        )
            .prop_filter_map("valid scenario", |(n, start, rides, obstacles)| {
                let mut text = format!("grid {n}\nstart {} {}\n", start.0, start.1);
                for (s, d) in rides {
                    text += &format!("ride {} {} {} {}\n", s.0, s.1, d.0, d.1);
                }
                let mut placed = Vec::new();
                for (c, level) in obstacles {
                    if c != start && !placed.contains(&c) {
                        placed.push(c);
                        text += &format!("obstacle {} {} {level}\n", c.0, c.1);
                    }
                }
                load_scenario(&text).ok()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn every_state_can_halt(sc in arb_scenario()) {
        for config in [AgentConfig::default(), AgentConfig::mutant()] {
            let graph = explore(&sc, &config, STATE_LIMIT);
            prop_assume!(!graph.truncated);
            for s in &graph.states {
                prop_assert!(s.fault.is_none(), "fault {:?} in {:?}", s.fault, sc);
            }
            let can_halt = graph.can_reach(|s| s.agent.halted);
            let stuck = can_halt.iter().filter(|ok| !**ok).count();
            prop_assert_eq!(stuck, 0, "{} states cannot halt in {:?}", stuck, sc);
        }
    }

    #[test]
    fn seeded_runs_halt(sc in arb_scenario(), seed in 0u64..1000) {
        let run = simulate(&sc, &AgentConfig::default(), &mut SeededResolver::new(seed), 5_000);
        prop_assert_eq!(&run.end, &EpisodeEnd::Halted, "{}", run);
    }
}
