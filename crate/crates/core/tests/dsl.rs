use bipkit::bundled;
use bipkit::dsl::{parse_model, parse_model_bytes, serialize_model};
use bipkit::model::validate::{validate_model, IssueCode};
use bipkit::model::{
    ArchitectureDiagram, CardExpr, ComponentType, ConnectorMotif, GuardExpr, MotifEnd, Transition, TransitionKind,
};
use bipkit::{PortTypeRef, Typing};
use proptest::prelude::*;

#[test]
fn bundled_models_round_trip() {
    for (name, src) in bundled::ALL {
        let d = parse_model(src).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        let text = serialize_model(&d);
        let back = parse_model(&text).unwrap_or_else(|e| panic!("{name} reprint: {e:?}\n{text}"));
        assert_eq!(back.without_spans(), d.without_spans(), "{name}");
        assert_eq!(serialize_model(&back), text, "{name}: printing is a fixed point");
    }
}

#[test]
fn bundled_models_validate_except_broken() {
    for (name, src) in bundled::ALL {
        let issues = validate_model(&parse_model(src).unwrap());
        let errors: Vec<_> = issues.iter().filter(|i| i.is_error()).collect();
        if *name == "broken.bip" {
            assert_eq!(errors.len(), 1, "{issues:?}");
            assert_eq!(errors[0].code, IssueCode::MultipleInitialStates);
            assert_eq!(errors[0].span.start_line, 5);
        } else {
            assert!(errors.is_empty(), "{name}: {errors:?}");
        }
    }
}

#[test]
fn trigger_pair_warns_only_with_literal_multiplicity() {
    let d = parse_model(bundled::TRIGGER_PAIR).unwrap();
    assert!(validate_model(&d).iter().all(|i| i.code != IssueCode::TriggerMultiplicity));
    let lit = bundled::TRIGGER_PAIR.replace("m_q:d_q trigger", "2:d_q trigger");
    let issues = validate_model(&parse_model(&lit).unwrap());
    assert!(issues.iter().any(|i| i.code == IssueCode::TriggerMultiplicity && !i.is_error()), "{issues:?}");
}

#[test]
fn routes_structure() {
    let d = parse_model(bundled::SWITCHABLE_ROUTES).unwrap();
    let route = d.component_type("Route").unwrap();
    assert_eq!(route.cardinality, CardExpr::param("n"));
    assert_eq!(route.initial_state(), Some("off"));
    let kinds: Vec<_> = route.transitions.iter().map(|t| t.kind).collect();
    use TransitionKind::*;
    assert_eq!(kinds, [Enforceable, Enforceable, Spontaneous, Internal, Enforceable]);
    assert_eq!(route.transitions[3].guard, Some(GuardExpr::atom("finished")));
    assert_eq!(route.transitions[2].guard, Some(GuardExpr::not(GuardExpr::atom("finished"))));
    let names: Vec<_> = d.motifs.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(names, ["start", "stop", "release"]);
    assert_eq!(d.motifs[0].ends[1].degree, CardExpr::param("n"));
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let src = "// lead\n\ndiagram D { // trailing\n  component T[1] {\n    ports { p } // x\n    states { a* }\n    transitions { }\n  }\n}\n";
    let d = parse_model(src).unwrap();
    assert_eq!(d.component_types[0].ports.len(), 1);
}

fn ident(prefix: &'static str, n: usize) -> impl Strategy<Value = String> {
    (0..n).prop_map(move |i| format!("{prefix}{i}"))
}

fn card() -> impl Strategy<Value = CardExpr> {
    prop_oneof![(1u64..5).prop_map(CardExpr::Literal), ident("k", 3).prop_map(CardExpr::Param)]
}

fn guard(guards: Vec<String>) -> impl Strategy<Value = GuardExpr> {
    let leaf = proptest::sample::select(guards).prop_map(GuardExpr::Atom);
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(GuardExpr::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| GuardExpr::and(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| GuardExpr::or(a, b)),
        ]
    })
}

fn component(name: String) -> impl Strategy<Value = ComponentType> {
    let ports = proptest::sample::subsequence(vec!["p", "q", "r"], 1..=3);
    let events = proptest::sample::subsequence(vec!["e", "f"], 0..=2);
    let guards = proptest::sample::subsequence(vec!["g", "h"], 0..=2);
    (card(), ports, events, guards, 1usize..4).prop_flat_map(move |(cardinality, ports, events, guards, nstates)| {
        let states: Vec<String> = (0..nstates).map(|i| format!("s{i}")).collect();
        let mut labels: Vec<(TransitionKind, String)> =
            ports.iter().map(|p| (TransitionKind::Enforceable, p.to_string())).collect();
        labels.extend(events.iter().map(|e| (TransitionKind::Spontaneous, e.to_string())));
        labels.push((TransitionKind::Internal, String::new()));
        let g: Vec<String> = guards.iter().map(|s| s.to_string()).collect();
        let guard_opt = if g.is_empty() { Just(None).boxed() } else { proptest::option::of(guard(g)).boxed() };
        let transition = (
            proptest::sample::select(labels),
            proptest::sample::select(states.clone()),
            proptest::sample::select(states.clone()),
            guard_opt,
        )
            .prop_map(|((kind, label), src, dst, g)| {
                let t = Transition::new(kind, label, src, dst);
                match g {
                    Some(g) => t.with_guard(g),
                    None => t,
                }
            });
        let name = name.clone();
        let cardinality = cardinality.clone();
        let (ports, events, guards) = (ports.clone(), events.clone(), guards.clone());
        (proptest::collection::vec(transition, 0..5), 0..nstates).prop_map(move |(transitions, init)| {
            let mut ct = ComponentType::new(name.clone(), cardinality.clone())
                .with_ports(ports.iter().copied())
                .with_events(events.iter().copied())
                .with_guards(guards.iter().copied());
            for i in 0..nstates {
                ct = ct.with_state(format!("s{i}"), i == init);
            }
            for t in transitions {
                ct = ct.with_transition(t);
            }
            ct
        })
    })
}

fn diagram() -> impl Strategy<Value = ArchitectureDiagram> {
    (1usize..4).prop_flat_map(|n| {
        let cts: Vec<_> = (0..n).map(|i| component(format!("T{i}"))).collect();
        cts.prop_flat_map(|cts| {
            let refs: Vec<PortTypeRef> =
                cts.iter().flat_map(|c| c.ports.iter().map(|p| PortTypeRef::new(c.name.clone(), p.clone()))).collect();
            let end = (proptest::sample::select(refs), card(), card(), any::<bool>()).prop_map(|(port, m, d, trig)| {
                MotifEnd::new(port, m, d, if trig { Typing::Trigger } else { Typing::Synchron })
            });
            let motif = proptest::collection::vec(end, 1..4);
            proptest::collection::vec(motif, 0..3).prop_map(move |motifs| {
                let mut d = ArchitectureDiagram::new("Gen");
                d.component_types = cts.clone();
                d.motifs =
                    motifs.into_iter().enumerate().map(|(i, ends)| ConnectorMotif::new(format!("m{i}"), ends)).collect();
                d
            })
        })
    })
}

proptest! {
    #[test]
    fn parser_is_total_on_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = parse_model_bytes(&bytes);
    }

    #[test]
    fn parser_is_total_on_token_soup(
        toks in proptest::collection::vec(
            proptest::sample::select(vec![
                "diagram", "component", "motif", "ports", "states", "events", "guards", "transitions",
                "{", "}", "[", "]", "(", ")", ":", ";", ",", ".", "*", "!", "&", "|", "->",
                "T", "p", "n", "1", "0", "99999999999999999999999", "trigger", "synchron", "\n", "//c\n",
            ]),
            0..60,
        )
    ) {
        let _ = parse_model(&toks.join(" "));
    }

    #[test]
    fn serialize_then_parse_is_identity(d in diagram()) {
        let text = serialize_model(&d);
        let back = parse_model(&text).map_err(|e| TestCaseError::fail(format!("{e:?}\n{text}")))?;
        prop_assert_eq!(back.without_spans(), d.without_spans());
    }
}
