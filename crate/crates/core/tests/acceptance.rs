//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p tiocheck-core --test acceptance -- --nocapture`.

use std::collections::BTreeSet;
#[allow(unused_imports)]
use std::panic::{catch_unwind, AssertUnwindSafe};

use tiocheck_core::dbm::Bound;
use tiocheck_core::*;

mod common;
use common::{oracle_pair, random_pairs};

fn machine_graph() -> Iolzg {
    build_iolzg(&fixtures::machine(), 20).unwrap()
}

fn graph(t: &Tioa, k: u64) -> Iolzg {
    build_iolzg(t, k).unwrap()
}

fn lax_oracle() -> OracleConfig {
    OracleConfig {
        closed_only: false,
        ..OracleConfig::default()
    }
}

// --- criteria ---------------------------------------------------------------

fn crit01_dbm_exactness() {
    let clocks: std::sync::Arc<Vec<String>> =
        std::sync::Arc::new(vec!["x".to_string(), "y".to_string()]);
    let c = ClockConstraint {
        conjuncts: vec![
            AtomicConstraint {
                clock: 0,
                relation: Relation::Ge,
                bound: 1,
            },
            AtomicConstraint {
                clock: 0,
                relation: Relation::Le,
                bound: 2,
            },
            AtomicConstraint {
                clock: 1,
                relation: Relation::Le,
                bound: 2,
            },
        ],
    };
    let dbm = Zone::constraint_matrix(&clocks, &c).unwrap();
    // Reference matrix entries, pre-closure.
    let expect = [
        [Bound::le(0), Bound::le(-1), Bound::le(0)],
        [Bound::le(2), Bound::le(0), Bound::Infinity],
        [Bound::le(2), Bound::Infinity, Bound::le(0)],
    ];
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(dbm.get(i, j), expect[i][j], "entry ({i},{j})");
        }
    }
    let table = dbm.render_table(&clocks);
    let expected_table = "     0_C      x         y\n\
0_C  (0, <=)  (-1, <=)  (0, <=)\n\
x    (2, <=)  (0, <=)   inf\n\
y    (2, <=)  inf       (0, <=)\n";
    assert_eq!(table, expected_table, "serialized table:\n{table}");
}

fn crit02_zone_graph_fixture() {
    let g = machine_graph();
    let tioa = g.tioa().clone();
    let names = std::sync::Arc::new(tioa.clocks.clone());
    // <idle, x<=20 && x==y>
    let idle_zone = Zone::origin(names.clone())
        .up()
        .unwrap()
        .and_constraint(&ClockConstraint {
            conjuncts: vec![AtomicConstraint {
                clock: 0,
                relation: Relation::Le,
                bound: 20,
            }],
        })
        .unwrap()
        .k_normalize(20);
    let idle = tioa.location_index("idle").unwrap();
    assert!(
        g.states
            .iter()
            .any(|s| s.location == idle && s.zone == idle_zone),
        "missing idle state"
    );
    // <as, x<=10 && y<=20 && y-x>=10>
    let as_zone = Zone::from_constraint(
        names,
        &ClockConstraint {
            conjuncts: vec![
                AtomicConstraint {
                    clock: 0,
                    relation: Relation::Le,
                    bound: 10,
                },
                AtomicConstraint {
                    clock: 1,
                    relation: Relation::Le,
                    bound: 20,
                },
            ],
        },
    )
    .unwrap()
    .tightened(1, 2, Bound::le(-10))
    .k_normalize(20);
    let add_sugar = tioa.location_index("as").unwrap();
    assert!(
        g.states
            .iter()
            .any(|s| s.location == add_sugar && s.zone == as_zone),
        "missing add-sugar state"
    );
}

fn crit03_quiescence_table() {
    let expect = [
        (fixtures::f5_a1(), true, true),
        (fixtures::f5_a2(), true, false),
        (fixtures::f5_a3(), true, false),
        (fixtures::f5_a4(), false, false),
        (fixtures::f5_a5(), false, false),
    ];
    for (t, safe, enforced) in expect {
        let g = graph(&t, 5);
        let q = classify_quiescence(g.initial_state(), &g).unwrap();
        assert_eq!((q.safe, q.enforced), (safe, enforced), "{}", t.name);
    }
}

fn crit04_discrimination_gain() {
    for spec in [fixtures::f5_a4(), fixtures::f5_a5()] {
        // Symbolic checker.
        let im = graph(&fixtures::f5_a3(), 5);
        let sp = graph(&spec, 5);
        assert!(
            !check(&im, &sp, &CheckConfig::default()).unwrap().pass,
            "ltioco must fail against {}",
            spec.name
        );
        let classical = CheckConfig {
            relation: RelationMode::TiocoDelta,
            ..CheckConfig::default()
        };
        assert!(
            check(&im, &sp, &classical).unwrap().pass,
            "tioco_delta must pass against {}",
            spec.name
        );
        // Discrete oracle.
        let (a, b) = build_pair(&fixtures::f5_a3(), &spec, &lax_oracle()).unwrap();
        assert!(!check_ltioco_s(&a, &b, 4).unwrap().pass);
        assert!(check_tioco_delta(&a, &b, 4).unwrap().pass);
    }
}

fn crit05_example3_facts() {
    let ts = build_tiolts(&fixtures::f3_a0(), &OracleConfig::default()).unwrap();
    let out = out_s(&ts, &ts.initial_set());
    let expect: BTreeSet<(u64, String)> = [(1u64, "o".to_string()), (2, "o".to_string())]
        .into_iter()
        .collect();
    assert_eq!(out.pairs, expect);
    assert!(!out.delta_e, "A0 is not classically quiescent");

    let (a0, a1) =
        build_pair(&fixtures::f3_a0(), &fixtures::f3_a1(), &OracleConfig::default()).unwrap();
    assert!(check_tioco_delta(&a0, &a1, 4).unwrap().pass);

    let (a2, a3) =
        build_pair(&fixtures::f3_a2(), &fixtures::f3_a3(), &OracleConfig::default()).unwrap();
    let v = check_tioco_delta(&a2, &a3, 4).unwrap();
    assert!(!v.pass);
    assert!(v.witness.unwrap().1.contains("delta"));
}

fn crit06_example4_example8() {
    // Symbolic: check(A1 as implementation, A'1 as specification).
    let im = machine_graph();
    let sp = graph(&fixtures::machine_variant(), 20);
    let v = check(&im, &sp, &CheckConfig::default()).unwrap();
    assert!(!v.pass);
    let w = v.witness.expect("witness");
    let steps = &w.trace.steps;
    assert_eq!(steps.len(), 2, "witness trace: {}", w.trace);
    // ((20, inf), ?press) — strictly after 20.
    assert_eq!(steps[0].label, StepLabel::Act(Action::input("press")));
    assert_eq!(
        steps[0].span,
        Span {
            lo: 20,
            lo_strict: true,
            up: None,
            up_strict: false
        }
    );
    // ((0, 20), ?press).
    assert_eq!(steps[1].label, StepLabel::Act(Action::input("press")));
    assert_eq!(steps[1].span, Span::closed(0, 20));
    // Offending ((0, inf), delta_S).
    assert_eq!(w.offending.label, OutLabel::DeltaS);
    assert_eq!(w.offending.span, Span::from(0));

    // Oracle facts on the detour-free variant pair.
    let (imc, spc) = build_pair(
        &fixtures::machine_core_variant(),
        &fixtures::machine_core(),
        &lax_oracle(),
    )
    .unwrap();
    assert!(check_tioco_delta(&imc, &spc, 3).unwrap().pass);
    assert!(!check_tioco_big_delta(&imc, &spc, 3).unwrap().pass);
}

fn crit07_span_trace_fixture() {
    let g = machine_graph();
    let traces = enumerate_span_traces(&g, 3, false).unwrap();
    let press = |span| SpanStep {
        span,
        label: StepLabel::Act(Action::input("press")),
    };
    let sugar = |span| SpanStep {
        span,
        label: StepLabel::Act(Action::input("sugar")),
    };
    // Implemented reading: the sugar span is clipped by the add-sugar
    // invariant to [10,20].
    let clipped = SpanTrace {
        steps: vec![
            press(Span::from(20)),
            press(Span::closed(0, 20)),
            sugar(Span::closed(10, 20)),
        ],
    };
    // The alternative unclipped reading: (10, inf).
    let unclipped = SpanTrace {
        steps: vec![
            press(Span::from(20)),
            press(Span::closed(0, 20)),
            sugar(Span::from(10)),
        ],
    };
    assert!(traces.contains(&clipped), "clipped trace missing");
    assert!(!traces.contains(&unclipped), "unclipped trace must not appear");
}

fn crit08_theorem4_agreement() {
    for (i, (im, sp)) in random_pairs(200).iter().enumerate() {
        let gi = graph(im, im.max_constant());
        let gs = graph(sp, sp.max_constant());
        let symbolic = check(
            &gi,
            &gs,
            &CheckConfig {
                depth: 4,
                ..CheckConfig::default()
            },
        )
        .unwrap();
        let (ti, ts) = oracle_pair(im, sp);
        let discrete = check_ltioco_s(&ti, &ts, 4).unwrap();
        assert_eq!(
            symbolic.pass,
            discrete.pass,
            "disagreement on pair {i}:\nimpl:\n{}\nspec:\n{}\nsymbolic witness: {:?}\noracle witness: {:?}",
            render(im),
            render(sp),
            symbolic.witness.map(|w| w.trace.to_string()),
            discrete.witness
        );
    }
}

fn crit09_theorem1_monotonicity() {
    let mut pairs = random_pairs(200);
    for (a, b) in [
        (fixtures::machine(), fixtures::machine_variant()),
        (fixtures::machine_core_variant(), fixtures::machine_core()),
        (fixtures::f3_a0(), fixtures::f3_a1()),
        (fixtures::f3_a2(), fixtures::f3_a3()),
        (fixtures::f5_a3(), fixtures::f5_a4()),
        (fixtures::f5_a3(), fixtures::f5_a5()),
        (fixtures::f5_a1(), fixtures::f5_a2()),
        (fixtures::comp_im1(), fixtures::comp_sp1()),
        (fixtures::comp_im2(), fixtures::comp_sp2()),
    ] {
        pairs.push((a, b));
    }
    for (i, (im, sp)) in pairs.iter().enumerate() {
        let (ti, ts) = oracle_pair(im, sp);
        if check_ltioco_s(&ti, &ts, 3).unwrap().pass {
            assert!(
                check_tioco_delta(&ti, &ts, 3).unwrap().pass,
                "pair {i}: ltioco passed but tioco_delta failed"
            );
            // The delay-observing implication additionally assumes an
            // input-enabled implementation enabling independent progress.
            let gi = graph(im, im.max_constant());
            if check_input_enabled(&gi, true).unwrap().enabled
                && check_independent_progress(&gi).unwrap().enabled
            {
                assert!(
                    check_tioco_big_delta(&ti, &ts, 3).unwrap().pass,
                    "pair {i}: ltioco passed but tioco_Delta failed"
                );
            }
        }
        // Symbolic side of the implication.
        if im.max_constant() <= 4 && sp.max_constant() <= 4 {
            let gi = graph(im, im.max_constant());
            let gs = graph(sp, sp.max_constant());
            let cfg = CheckConfig {
                depth: 3,
                ..CheckConfig::default()
            };
            if check(&gi, &gs, &cfg).unwrap().pass {
                let classical = CheckConfig {
                    relation: RelationMode::TiocoDelta,
                    ..cfg
                };
                assert!(
                    check(&gi, &gs, &classical).unwrap().pass,
                    "pair {i}: symbolic ltioco passed but tioco_delta mode failed"
                );
            }
        }
    }
}

fn crit10_lemma1() {
    let mut models: Vec<Tioa> = random_pairs(100)
        .into_iter()
        .flat_map(|(a, b)| [a, b])
        .collect();
    models.extend([
        fixtures::machine(),
        fixtures::machine_core(),
        fixtures::f5_a1(),
        fixtures::f5_a2(),
        fixtures::f5_a3(),
        fixtures::f5_a4(),
        fixtures::f5_a5(),
        fixtures::comp_sp1(),
        fixtures::comp_sp2(),
    ]);
    for t in models {
        let g = graph(&t, t.max_constant());
        if !check_independent_progress(&g).unwrap().enabled {
            continue;
        }
        for s in &g.states {
            let q = classify_quiescence(s, &g).unwrap();
            assert!(
                !(q.enforced && !q.safe),
                "{}: enforced but unsafe state {:?}",
                t.name,
                s
            );
        }
    }
}

fn crit11_lemma3_composition_traces() {
    let m = fixtures::machine();
    let c = fixtures::customer();
    let mc = compose(&m, &c).unwrap();
    let cap = mc.max_constant() + 1;
    let cfg = OracleConfig {
        closed_only: false,
        max_delay: Some(cap),
        ..OracleConfig::default()
    };
    let composed = build_tiolts_with_cap(&mc, &cfg, cap).unwrap();
    let tm = build_tiolts_with_cap(&m, &cfg, cap).unwrap();
    let tc = build_tiolts_with_cap(&c, &cfg, cap).unwrap();
    let product = def9_product(&tm, &tc);
    assert!(
        traces_equal(&composed.step_system(), &product, 5, cap),
        "composed-TIOA traces differ from the state-level product"
    );
}

fn crit12_theorem2_compositionality() {
    let im1 = fixtures::comp_im1();
    let sp1 = fixtures::comp_sp1();
    let im2 = fixtures::comp_im2();
    let sp2 = fixtures::comp_sp2();
    let cfg = CheckConfig {
        depth: 4,
        ..CheckConfig::default()
    };
    for (im, sp) in [(&im1, &sp1), (&im2, &sp2)] {
        let gi = graph(im, im.max_constant());
        let gs = graph(sp, sp.max_constant());
        assert!(check_input_enabled(&gi, true).unwrap().enabled);
        assert!(check_independent_progress(&gi).unwrap().enabled);
        let v = check(&gi, &gs, &cfg).unwrap();
        assert!(v.pass, "component pair must conform: {:?}", v.witness);
    }
    let imc = compose(&im1, &im2).unwrap();
    let spc = compose(&sp1, &sp2).unwrap();
    let gi = graph(&imc, imc.max_constant());
    let gs = graph(&spc, spc.max_constant());
    let v = check(&gi, &gs, &cfg).unwrap();
    assert!(v.pass, "composed pair must conform: {:?}", v.witness);
}

fn crit13_prop1() {
    for t in fixtures::ALL {
        let t = parse_model(t).unwrap();
        let ts = build_tiolts(&t, &lax_oracle()).unwrap();
        let report = check_prop1(&ts);
        assert!(
            report.time_add && report.time_reflex && report.time_determ,
            "{}: {:?}",
            t.name,
            report
        );
    }
    // The weak semantics obstructs time determinism on the counterexample.
    let ts = build_tiolts(&fixtures::weak_determ(), &OracleConfig::default()).unwrap();
    assert!(!weak_time_determ_holds(&ts));
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn())> = vec![
        ("criterion 01: DBM pre-closure matrix is bit-exact", crit01_dbm_exactness),
        ("criterion 02: zone graph contains the reference states", crit02_zone_graph_fixture),
        ("criterion 03: quiescence table matches", crit03_quiescence_table),
        ("criterion 04: ltioco discriminates where tioco_delta cannot", crit04_discrimination_gain),
        ("criterion 05: out-sets and verdicts of the small examples", crit05_example3_facts),
        ("criterion 06: witness trace and oracle verdicts of the machine pair", crit06_example4_example8),
        ("criterion 07: span trace fixture (invariant-clipped reading)", crit07_span_trace_fixture),
        ("criterion 08: symbolic and discrete ltioco agree on 200 random pairs", crit08_theorem4_agreement),
        ("criterion 09: ltioco pass implies tioco_delta and tioco_Delta pass", crit09_theorem1_monotonicity),
        ("criterion 10: no enforced-but-unsafe state under independent progress", crit10_lemma1),
        ("criterion 11: composed-TIOA traces equal the state-level product", crit11_lemma3_composition_traces),
        ("criterion 12: conforming pairs compose to a conforming pair", crit12_theorem2_compositionality),
        ("criterion 13: time additivity/reflexivity/determinism on all fixtures", crit13_prop1),
    ];
    let mut failures = Vec::new();
    for (name, run) in criteria {
        match catch_unwind(AssertUnwindSafe(run)) {
            Ok(()) => println!("{name}: PASS"),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".to_string());
                println!("{name}: FAIL ({msg})");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
