use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Pow;
use proptest::prelude::*;
use scalar_probe::canonical::{
    canonicalize_str, canonicalize_stream, from_scientific, scan_numbers, to_scientific, EXP_TOKEN,
};

fn decimal_value(int: &str, frac: &str, negative: bool) -> BigRational {
    let digits: BigInt = format!("{int}{frac}").parse().unwrap();
    let v = BigRational::new(digits, BigInt::from(10).pow(frac.len() as u32));
    if negative {
        -v
    } else {
        v
    }
}

fn literal() -> impl Strategy<Value = (String, BigRational)> {
    (
        "[1-9][0-9]{0,8}|0",
        proptest::option::of("[0-9]{1,6}"),
        any::<bool>(),
    )
        .prop_map(|(int, frac, neg)| {
            let frac = frac.unwrap_or_default();
            let text = match (neg, frac.is_empty()) {
                (false, true) => int.clone(),
                (false, false) => format!("{int}.{frac}"),
                (true, true) => format!("-{int}"),
                (true, false) => format!("-{int}.{frac}"),
            };
            (text, decimal_value(&int, &frac, neg))
        })
}

fn noisy_text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            "[0-9]{1,5}",
            "[a-z]{1,4}",
            Just(" ".to_string()),
            Just(".".to_string()),
            Just(",".to_string()),
            Just("-".to_string()),
            Just("+".to_string()),
            Just(EXP_TOKEN.to_string()),
            Just("\n".to_string()),
            Just("é".to_string()),
        ],
        0..40,
    )
    .prop_map(|parts| parts.concat())
}

proptest! {
    #[test]
    fn value_roundtrip((text, value) in literal()) {
        let lits = scan_numbers(&text);
        prop_assert_eq!(lits.len(), 1);
        prop_assert_eq!(&lits[0].value(), &value);
        let sci = to_scientific(&lits[0]);
        prop_assert_eq!(from_scientific(&sci).unwrap(), value);
    }

    #[test]
    fn literal_in_sentence_roundtrip((text, value) in literal()) {
        let (out, stats) = canonicalize_str(&format!("it costs {text} dollars."));
        prop_assert_eq!(stats.literals_rewritten, 1);
        let token = out.strip_prefix("it costs ").unwrap().strip_suffix(" dollars.").unwrap();
        prop_assert_eq!(from_scientific(token).unwrap(), value);
    }

    #[test]
    fn idempotent(text in noisy_text()) {
        let (once, _) = canonicalize_str(&text);
        let (twice, stats) = canonicalize_str(&once);
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(stats.literals_rewritten, 0);
    }

    #[test]
    fn stream_agrees_with_str(text in noisy_text()) {
        let (expected, _) = canonicalize_str(&text);
        let mut out = Vec::new();
        canonicalize_stream(text.as_bytes(), &mut out).unwrap();
        prop_assert_eq!(String::from_utf8(out).unwrap(), expected);
    }

    #[test]
    fn text_without_digits_untouched(text in "[a-zA-Z .,;!?-]{0,60}") {
        prop_assert_eq!(canonicalize_str(&text).0, text);
    }
}
