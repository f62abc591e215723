use super::*;

pub(crate) const FOUND_CITY: &str = r#"
ki found-city {
    description = "build a city where the settler stands"
}
on {
    match Settlers as $u { id == $id, x == $x, y == $y }
}
when {
    issue.Destination == [$x, $y]
}
do {
    handler microciv "unit ${id}; press b"
}
"#;

#[test]
fn settlers_rule_has_one_clause_condition_and_action() {
    let ki = parse_ki(FOUND_CITY).unwrap();
    assert_eq!(ki.name, "found-city");
    assert_eq!(ki.on.len(), 1);
    assert_eq!(ki.on[0].entity, "Settlers");
    assert_eq!(ki.on[0].constraints.len(), 3);
    assert_eq!(
        ki.when,
        Expr::Cmp(
            Operand::Issue("Destination".into()),
            CmpOp::Eq,
            Operand::List(vec![Operand::Var("x".into()), Operand::Var("y".into())])
        )
    );
    assert_eq!(ki.actions.len(), 1);
    assert_eq!(ki.id(), "/found-city");
    assert_eq!(
        ki.meta["description"],
        Value::str("build a city where the settler stands")
    );
}

#[test]
fn empty_when_is_true() {
    let ki = parse_ki("ki r {} on { match Tile as $t {} } when {} do { issue.set Seen = true }")
        .unwrap();
    assert_eq!(ki.when, Expr::Const(true));
}

#[test]
fn unbound_variable_in_do() {
    let src = r#"ki r {} on { match Tile as $t { x == $x } } when {} do { handler h "go ${z}" }"#;
    assert_eq!(
        parse_ki(src).unwrap_err(),
        KiError::UnboundVariable {
            rule: "r".into(),
            var: "z".into()
        }
    );
    let src = "ki r {} on { match Tile as $t { x < $x } } when {} do { issue.set A = 1 }";
    assert!(matches!(
        parse_ki(src),
        Err(KiError::UnboundVariable { .. })
    ));
    let src =
        "ki r {} on { match Tile as $t { x == $x } } when { $x.y == 1 } do { issue.set A = 1 }";
    assert!(matches!(parse_ki(src), Err(KiError::Invalid { .. })));
    let src =
        "ki r {} on { match Tile as $t {} related via near to $q } when {} do { issue.set A = 1 }";
    assert!(matches!(
        parse_ki(src),
        Err(KiError::UnboundVariable { .. })
    ));
}

#[test]
fn empty_do_is_rejected() {
    let src = "ki r {} on { match Tile as $t {} } when {} do {}";
    assert_eq!(
        parse_ki(src).unwrap_err(),
        KiError::EmptyDo { rule: "r".into() }
    );
}

#[test]
fn syntax_errors_name_the_block_and_line() {
    let src =
        "ki r {}\non {\n  match Tile as $t {}\n}\nwhen {\n  issue.A ==\n}\ndo { issue.unset A }";
    match parse_ki(src).unwrap_err() {
        KiError::Syntax { block, line, .. } => {
            assert_eq!(block, "when");
            assert_eq!(line, 7);
        }
        other => panic!("unexpected {other:?}"),
    }
    match parse_ki("ki r {} on { match Tile $t {} } when {} do { issue.unset A }").unwrap_err() {
        KiError::Syntax { block: "on", .. } => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn pack_tags_and_duplicates() {
    let rule = |n: &str| {
        format!("ki {n} {{}} on {{ match Tile as $t {{}} }} when {{}} do {{ issue.set A = 1 }}\n")
    };
    let text = format!("{}{}{}", rule("a"), rule("b"), rule("c"));
    let pack = parse_pack(&[("x.ki", text.as_str())], "suomi").unwrap();
    assert_eq!(pack.len(), 3);
    assert!(pack.iter().all(|k| k.expert_tag == "suomi"));

    let dup = format!("{}{}", rule("found-city"), rule("found-city"));
    assert!(matches!(
        parse_pack(&[("x.ki", dup.as_str())], "suomi"),
        Err(KiError::DuplicateName { .. })
    ));

    let common = parse_pack(&[("c.ki", rule("found-city").as_str())], "").unwrap();
    let expert = parse_pack(&[("e.ki", rule("found-city").as_str())], "suomi").unwrap();
    assert_ne!(common[0].id(), expert[0].id());
}

#[test]
fn pack_error_names_the_file() {
    let err = parse_pack(&[("bad.ki", "ki r {")], "t").unwrap_err();
    assert!(err.to_string().starts_with("bad.ki: "));
}

#[test]
fn print_then_parse_is_identity() {
    let src = r#"
ki attack-city {
    weight = 2.5
    tags = ["war", "late"]
}
on {
    match Unit as $w { kind == "warrior", owner == "me", hp > 3, x == $x }
    match City as $c { owner != "me", pop in [1, 2, 3] } related via threatens from $w
}
when {
    (issue.Mode == "war" or not exists issue.Mode) and $w.hp >= $c.pop and not (issue.A == 1 and issue.B == 2.0)
}
do {
    handler microciv "unit ${w.id}; attack ${c.x},${c.y} ${issue.Mode} \$"
    issue.set Last = [$x, 1, "a"]
    graph.set $w.hp = 3
    issue.unset Mode
}
"#;
    let ki = parse_ki(src).unwrap();
    let printed = ki.to_source();
    let again = parse_ki(&printed).unwrap();
    assert_eq!(ki, again);
    assert_eq!(printed, again.to_source());
    assert!(ki.when.reads_node_attributes());
}

#[test]
fn mutated_sources_never_panic() {
    use rand::{Rng, SeedableRng};
    let tokens: Vec<&str> = vec![
        "ki", "on", "when", "do", "{", "}", "match", "as", "$u", "==", "in", "[", "]", "\"", "${",
        "issue", ".", "set", "and", "not", "(", ")", "related", "via", "to", "-", "1e", ",",
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let base: Vec<char> = FOUND_CITY.chars().collect();
    for _ in 0..2000 {
        let mut s: String = base.iter().collect();
        for _ in 0..rng.gen_range(1..4) {
            let pos = rng.gen_range(0..s.len());
            if !s.is_char_boundary(pos) {
                continue;
            }
            match rng.gen_range(0..3) {
                0 => s.insert_str(pos, tokens[rng.gen_range(0..tokens.len())]),
                1 => {
                    let end = (pos + rng.gen_range(1..6)).min(s.len());
                    if s.is_char_boundary(end) {
                        s.replace_range(pos..end, "");
                    }
                }
                _ => s.insert(pos, rng.gen_range(b' '..b'~') as char),
            }
        }
        let _ = parse_rules(&s);
    }
}
