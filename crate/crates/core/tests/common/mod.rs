//! Shared helpers for the integration suites.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tiocheck_core::*;

#[allow(dead_code)]
pub fn graph(t: &Tioa, k: u64) -> Iolzg {
    build_iolzg(t, k).unwrap()
}

// Random closed-constraint model population.

#[allow(dead_code)]
pub fn random_model(rng: &mut ChaCha8Rng, name: &str) -> Tioa {
    loop {
        let n_locs = rng.gen_range(1..=3usize);
        let n_clocks = rng.gen_range(1..=2usize);
        let clocks: Vec<String> = (0..n_clocks).map(|i| format!("c{i}")).collect();
        let rel = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
            0 => Relation::Le,
            1 => Relation::Ge,
            _ => Relation::Eq,
        };
        let constraint = |rng: &mut ChaCha8Rng, max_atoms: usize| {
            let count = rng.gen_range(0..=max_atoms);
            ClockConstraint {
                conjuncts: (0..count)
                    .map(|_| AtomicConstraint {
                        clock: rng.gen_range(0..n_clocks),
                        relation: rel(rng),
                        bound: rng.gen_range(0..=4),
                    })
                    .collect(),
            }
        };
        let locations: Vec<Location> = (0..n_locs)
            .map(|i| Location {
                name: format!("l{i}"),
                invariant: if rng.gen_bool(0.4) {
                    ClockConstraint {
                        conjuncts: vec![AtomicConstraint {
                            clock: rng.gen_range(0..n_clocks),
                            relation: Relation::Le,
                            bound: rng.gen_range(0..=4),
                        }],
                    }
                } else {
                    ClockConstraint::truth()
                },
            })
            .collect();
        let n_switches = rng.gen_range(0..=4usize);
        let mut switches = Vec::new();
        for _ in 0..n_switches {
            let source = rng.gen_range(0..n_locs);
            let action = match rng.gen_range(0..3) {
                0 => Action::input("i"),
                1 => Action::output("o"),
                _ => Action::tau(),
            };
            // Silent switches only go to strictly later locations, keeping
            // the model strongly convergent by construction.
            let target = if action.is_tau() {
                if source + 1 >= n_locs {
                    continue;
                }
                rng.gen_range(source + 1..n_locs)
            } else {
                rng.gen_range(0..n_locs)
            };
            let resets: BTreeSet<usize> =
                (0..n_clocks).filter(|_| rng.gen_bool(0.5)).collect();
            switches.push(Switch {
                source,
                guard: constraint(rng, 2),
                action,
                resets,
                target,
            });
        }
        let t = Tioa {
            name: name.to_string(),
            clocks,
            inputs: ["i".to_string()].into_iter().collect(),
            outputs: ["o".to_string()].into_iter().collect(),
            locations,
            initial: 0,
            switches,
        };
        if !t.validate().has_errors() {
            return t;
        }
    }
}

#[allow(dead_code)]
pub fn random_pairs(count: usize) -> Vec<(Tioa, Tioa)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut pairs = Vec::new();
    for i in 0..count {
        let sp = random_model(&mut rng, &format!("sp{i}"));
        let im = match i % 4 {
            0 => sp.clone(),
            1 => {
                // Drop one switch: a restricted candidate implementation.
                let mut im = sp.clone();
                if !im.switches.is_empty() {
                    let drop = rng.gen_range(0..im.switches.len());
                    im.switches.remove(drop);
                }
                im.name = format!("im{i}");
                im
            }
            _ => random_model(&mut rng, &format!("im{i}")),
        };
        pairs.push((im, sp));
    }
    pairs
}

#[allow(dead_code)]
pub fn oracle_pair(im: &Tioa, sp: &Tioa) -> (Tiolts, Tiolts) {
    // Delay horizon generous enough to pass every firing-window breakpoint
    // reachable through silent chains in these small models.
    let cap = im.max_constant().max(sp.max_constant()) + 1;
    let cfg = OracleConfig {
        closed_only: false,
        max_delay: Some(3 * cap),
        ..OracleConfig::default()
    };
    build_pair(im, sp, &cfg).unwrap()
}

