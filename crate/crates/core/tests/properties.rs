mod common;

use std::sync::Arc;

use cfxcs::features::{CfPopulation, FeatureContext, FeatureParams, TaskFeatures};
use cfxcs::fragment::{BinaryOp, CodeFragment};
use cfxcs::problems::ProblemSpec;
use cfxcs::xcs::CfSource;
use proptest::prelude::*;

const LEAVES: usize = 6;

fn op() -> impl Strategy<Value = BinaryOp> {
    prop_oneof![
        Just(BinaryOp::And),
        Just(BinaryOp::Or),
        Just(BinaryOp::Nand),
        Just(BinaryOp::Xor)
    ]
}

fn fragment() -> impl Strategy<Value = CodeFragment> {
    let leaf = (0..LEAVES).prop_map(CodeFragment::leaf);
    leaf.prop_recursive(5, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|c| CodeFragment::not(&c)),
            (op(), inner.clone(), inner).prop_map(|(o, a, b)| CodeFragment::binary(o, &a, &b)),
        ]
    })
}

fn all_inputs() -> impl Iterator<Item = Vec<bool>> {
    (0..1u64 << LEAVES).map(|x| common::bits(x, LEAVES))
}

/// Rewrites `text` with the operands of every binary operator swapped.
fn mirror(text: &str) -> String {
    fn go(cf: &CodeFragment) -> String {
        let s = cf.render();
        match s.split_once('(') {
            None => s,
            Some(("NOT", _)) => {
                let inner = &s[4..s.len() - 1];
                format!("NOT({})", go(&CodeFragment::parse(inner).unwrap()))
            }
            Some((name, rest)) => {
                let body = &rest[..rest.len() - 1];
                let mut depth = 0;
                let split = body
                    .char_indices()
                    .find(|&(_, c)| {
                        match c {
                            '(' => depth += 1,
                            ')' => depth -= 1,
                            ',' if depth == 0 => return true,
                            _ => {}
                        }
                        false
                    })
                    .unwrap()
                    .0;
                let a = CodeFragment::parse(&body[..split]).unwrap();
                let b = CodeFragment::parse(&body[split + 1..]).unwrap();
                format!("{name}({},{})", go(&b), go(&a))
            }
        }
    }
    go(&CodeFragment::parse(text).unwrap())
}

proptest! {
    #[test]
    fn render_parse_round_trip(cf in fragment()) {
        let text = cf.render();
        let back = CodeFragment::parse(&text).unwrap();
        prop_assert_eq!(back.render(), text);
        prop_assert_eq!(back.key(), cf.key());
    }

    #[test]
    fn equal_keys_evaluate_equally(cf in fragment()) {
        let mirrored = CodeFragment::parse(&mirror(&cf.render())).unwrap();
        prop_assert_eq!(mirrored.key(), cf.key());
        for input in all_inputs() {
            prop_assert_eq!(mirrored.eval(&input), cf.eval(&input));
        }
    }

    #[test]
    fn canonical_form_preserves_meaning_and_size(cf in fragment()) {
        let canon = cf.canonicalized();
        prop_assert_eq!(canon.complexity(), cf.complexity());
        prop_assert_eq!(canon.key(), cf.key());
        prop_assert_eq!(canon.canonicalized().render(), canon.render());
        for input in all_inputs() {
            prop_assert_eq!(canon.eval(&input), cf.eval(&input));
        }
    }

    #[test]
    fn negation_inverts(cf in fragment()) {
        let neg = cf.negated();
        for input in all_inputs() {
            prop_assert_eq!(neg.eval(&input), !cf.eval(&input));
        }
    }

    #[test]
    fn constant_check_agrees_with_enumeration(cf in fragment()) {
        let first = cf.eval(&common::bits(0, LEAVES));
        let constant = all_inputs().all(|input| cf.eval(&input) == first);
        prop_assert_eq!(cf.is_constant(), constant, "{}", cf.render());
    }

    #[test]
    fn oracles_match_references(x in any::<u64>()) {
        let cases: [(&str, fn(&[bool]) -> bool); 8] = [
            ("mux:6", common::multiplexer),
            ("mux:11", common::multiplexer),
            ("mux:20", common::multiplexer),
            ("parity:7", common::even_parity),
            ("carry:10", common::carry_one),
            ("carry:16", common::carry_one),
            ("maj:9", common::majority_on),
            ("maj:12", common::majority_on),
        ];
        for (name, reference) in cases {
            let spec: ProblemSpec = name.parse().unwrap();
            let input = common::bits(x, spec.arity());
            prop_assert_eq!(spec.label(&input).unwrap(), reference(&input), "{}", name);
        }
        let hier: [(&str, fn(&[bool]) -> bool); 3] = [
            ("hmux:18", common::multiplexer),
            ("hmaj:15", common::majority_on),
            ("hcarry:12", common::carry_one),
        ];
        for (name, top) in hier {
            let spec: ProblemSpec = name.parse().unwrap();
            let input = common::bits(x, spec.arity());
            prop_assert_eq!(spec.label(&input).unwrap(), common::hierarchical(top, &input), "{}", name);
        }
    }

    /// Flipping two bits of one 3-bit block keeps its parity, so the label
    /// of a hierarchical problem cannot change.
    #[test]
    fn paired_flips_inside_a_block_keep_the_label(
        x in any::<u64>(),
        block in 0usize..3,
        pair in prop_oneof![Just((0usize, 1usize)), Just((0, 2)), Just((1, 2))],
    ) {
        for name in ["hmux:9", "hmaj:9"] {
            let spec: ProblemSpec = name.parse().unwrap();
            let mut input = common::bits(x, 9);
            let before = spec.label(&input).unwrap();
            input[3 * block + pair.0] ^= true;
            input[3 * block + pair.1] ^= true;
            prop_assert_eq!(spec.label(&input).unwrap(), before);
        }
    }

    /// Without decay a fragment's fitness is the running maximum of the
    /// rates it has been observed with.
    #[test]
    fn fitness_is_running_max_without_decay(rates in prop::collection::vec(0.0f64..2.0, 1..40)) {
        let params = FeatureParams { decay: 0.0, ..FeatureParams::default() };
        let mut pop = CfPopulation::new();
        let mut features = TaskFeatures::new(&mut pop, 3, 6, params);
        let d1 = Arc::new(CodeFragment::leaf(1));
        let start = pop.fitness(0, d1.key()).unwrap();
        let (registry, columns) = pop.split_mut();
        let mut ctx = FeatureContext {
            features: &mut features,
            column: &mut columns[0],
            registry,
            external: None,
            iteration: 0,
        };
        let mut expected = start;
        for r in rates {
            ctx.observe(std::slice::from_ref(&d1), r);
            expected = expected.max(r);
            prop_assert_eq!(ctx.column[d1.key()], expected);
        }
    }
}
