//! Property tests for the parser and printer: canonical printing is a
//! parse fixpoint, and meaning-preserving notation changes (dash variants,
//! keyword casing, comments, bullets, indentation, CRLF) parse to the same
//! document.

use bam::ast::{BinOp, Expr, ModelDocument};
use bam::parser::{parse_expression, parse_model};
use bam::synth::{synth_model, FormulaShape, SynthConfig};
use proptest::prelude::*;

fn config_strategy() -> impl Strategy<Value = SynthConfig> {
    (
        prop_oneof![Just(FormulaShape::Mixed), Just(FormulaShape::SumsOnly)],
        1u32..6,
        0usize..3,
        1usize..10,
        1usize..10,
        1usize..4,
    )
        .prop_map(|(shape, periods, hierarchy_count, inputs, calcs, reports)| SynthConfig {
            shape,
            periods,
            hierarchy_count,
            inputs,
            calcs,
            reports,
        })
}

fn arb_document() -> impl Strategy<Value = ModelDocument> {
    (any::<u64>(), config_strategy()).prop_map(|(seed, config)| synth_model(seed, &config))
}

/// Notation changes that must not change the parsed document.
fn en_dash_minus(text: &str) -> String {
    text.replace(" - ", " \u{2013} ")
}

fn unicode_mul_div(text: &str) -> String {
    text.replace(" * ", " \u{00d7} ").replace(" / ", " \u{00f7} ")
}

fn shouted_keywords(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("Report: ") {
            out.push_str(&format!("REPORT : {rest}\n"));
        } else if let Some(rest) = line.strip_prefix("Breakdown by ") {
            out.push_str(&format!("BREAKDOWN BY {rest}.\n"));
        } else if line == "Categories:" {
            out.push_str("CATEGORIES\n");
        } else if let Some(rest) = line.strip_prefix("Each period is one ") {
            out.push_str(&format!("EACH PERIOD IS ONE {}\n", rest.to_uppercase()));
        } else if let Some(rest) = line.strip_prefix("The number of periods is ") {
            out.push_str(&format!("THE NUMBER OF PERIODS IS {rest}\n"));
        } else if let Some(rest) = line.strip_prefix("The first period starts in ") {
            out.push_str(&format!("THE FIRST PERIOD STARTS ON {rest}\n"));
        } else {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn commented_and_padded(text: &str) -> String {
    let mut out = String::from("# leading comment\n\n");
    for line in text.lines() {
        out.push_str("  # interleaved comment\n");
        out.push_str("   \n");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("\n# trailing comment\n");
    out
}

/// In canonical text, only category outline entries start with a digit.
fn bulleted_outlines(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        let body = line.trim_start();
        if body.chars().next().is_some_and(|c| c.is_ascii_digit()) && body.contains(' ') {
            let indent = &line[..line.len() - body.len()];
            out.push_str(&format!("{indent}\u{2022} {body}\n"));
        } else {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

fn indented_crlf(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        out.push_str("  ");
        out.push_str(line);
        out.push_str("\r\n");
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_print_is_a_parse_fixpoint(document in arb_document()) {
        let printed = document.to_text();
        let reparsed = parse_model(&printed).expect("canonical text parses");
        prop_assert_eq!(&reparsed, &document);
        // Printing the reparse reproduces the text exactly.
        prop_assert_eq!(reparsed.to_text(), printed);
    }

    #[test]
    fn notation_variants_parse_to_the_same_document(document in arb_document()) {
        let printed = document.to_text();
        let variants = [
            en_dash_minus(&printed),
            unicode_mul_div(&printed),
            shouted_keywords(&printed),
            commented_and_padded(&printed),
            bulleted_outlines(&printed),
            indented_crlf(&printed),
        ];
        for variant in &variants {
            let reparsed = parse_model(variant).expect("variant parses");
            prop_assert_eq!(&reparsed, &document);
        }
        // All transforms stacked at once.
        let stacked = indented_crlf(&bulleted_outlines(&commented_and_padded(&shouted_keywords(
            &unicode_mul_div(&en_dash_minus(&printed)),
        ))));
        prop_assert_eq!(&parse_model(&stacked).expect("stacked variant parses"), &document);
    }
}

fn name_strategy() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[A-Za-z][A-Za-z0-9]{0,6}( [A-Za-z][A-Za-z0-9]{0,6}){0,2}")
        .expect("valid regex")
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        name_strategy().prop_map(Expr::Variable),
        // Halves are exact in binary, so display/reparse preserves them.
        (0u32..20_000).prop_map(|n| Expr::Number(f64::from(n) / 2.0)),
    ];
    leaf.prop_recursive(4, 48, 3, |inner| {
        prop_oneof![
            (
                prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div)
                ],
                inner.clone(),
                inner.clone(),
            )
                .prop_map(|(op, lhs, rhs)| Expr::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs)
                }),
            inner.prop_map(|e| Expr::Paren(Box::new(e))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn expression_display_reparses_to_an_equal_tree(expr in arb_expr()) {
        let printed = expr.to_string();
        let reparsed = parse_expression(&printed).expect("printed expression parses");
        prop_assert_eq!(&reparsed, &expr);
        // And the printed form is already canonical.
        prop_assert_eq!(reparsed.to_string(), printed);
    }
}
