mod common;

use common::pattern;
use proptest::prelude::*;
use sheetgram_core::factbase::PredicateRegistry;
use sheetgram_core::fixtures;
use sheetgram_core::grammar::{parse_grammar, validate_grammar, Grammar};

#[test]
fn fixture_grammars_validate() {
    let reg = PredicateRegistry::new();
    for text in [
        fixtures::COLUMN_GRAMMAR,
        fixtures::COLUMN3_GRAMMAR,
        fixtures::BLOCK_GRAMMAR,
        fixtures::ATTRIBUTE_GRAMMAR,
    ] {
        let g = parse_grammar(text).unwrap();
        assert_eq!(validate_grammar(&g, &reg), vec![], "{text}");
        assert_eq!(parse_grammar(&g.to_string()).unwrap(), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn printing_is_a_parse_fixed_point(p in pattern(), q in pattern()) {
        let g = Grammar::from_rules(vec![("top".into(), p), ("other".into(), q)]);
        let Ok(once) = parse_grammar(&g.to_string()) else { return Ok(()) };
        let twice = parse_grammar(&once.to_string()).unwrap();
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(twice.rule_names().collect::<Vec<_>>(), vec!["top", "other"]);
    }
}
