use fqpolar::code::{check_condition_a, closure, decreasing_sets};
use fqpolar::construct::{construct_info_set, ConstructionMethod};
use fqpolar::oracle::{exact_average_ser, exact_ser};
use fqpolar::prob::{ratio, rational_to_f64};
use fqpolar::sim::{run_trials, TrialPlan};
use fqpolar::{Channel, CodeSpec, ExperimentConfig, Field, FieldElement, Rational};
use proptest::prelude::*;

fn exact(code: &CodeSpec, ch: &Channel) -> Vec<Rational> {
    exact_average_ser(code, ch).unwrap().exact().unwrap().to_vec()
}

#[test]
fn two_symbol_code_with_closed_set() {
    // A = {1} on BSC(p): u_1 is decided from (y_0, y_1); agreement gives the
    // right answer unless both flipped, disagreement is a fair coin.
    let p = ratio(1, 10);
    let one = ratio(1, 1);
    let both = &p * &p;
    let split = ratio(2, 1) * &p * (&one - &p);
    let expected = both + split * ratio(1, 2);
    let code = CodeSpec::new(Field::binary(), 1, &[1], None).unwrap();
    let ser = exact(&code, &Channel::qsc(Field::binary(), p).unwrap());
    assert_eq!(ser, vec![expected.clone(), expected]);
}

#[test]
fn frozen_values_do_not_matter() {
    let f = Field::default_for(3).unwrap();
    let ch = Channel::qec(f.clone(), ratio(1, 4)).unwrap();
    let base = CodeSpec::new(f.clone(), 2, &[2, 3], None).unwrap();
    let reference = exact(&base, &ch);
    for frozen in [[1u8, 2], [2, 2], [0, 1]] {
        let fv: Vec<FieldElement> = frozen.iter().map(|&v| FieldElement(v)).collect();
        let code = base.with_frozen(&fv).unwrap();
        let msg = code.message(&[FieldElement(1), FieldElement(2)]).unwrap();
        assert_eq!(exact_ser(&code, &ch, &msg).unwrap().exact().unwrap(), &reference[..]);
    }
}

#[test]
fn constructed_codes_are_closed_and_equal_ser() {
    for q in [2u32, 3] {
        let f = Field::default_for(q).unwrap();
        let ch = Channel::qec(f.clone(), ratio(2, 5)).unwrap();
        for k in 0..=8 {
            let c = construct_info_set(&f, 3, k, &ch, &ConstructionMethod::ErasureExact).unwrap();
            assert_eq!(c.info_set.len(), k);
            assert!(check_condition_a(&c.info_set, 3).is_ok());
            if q == 2 {
                let code = CodeSpec::new(f.clone(), 3, &c.info_set, None).unwrap();
                let ser = exact(&code, &ch);
                assert!(ser.iter().all(|s| *s == ser[0]), "k={k}");
            }
        }
    }
}

#[test]
fn monte_carlo_tracks_oracle_over_gf4() {
    let f = Field::default_for(4).unwrap();
    let ch = Channel::qsc(f.clone(), ratio(1, 8)).unwrap();
    let code = CodeSpec::new(f, 2, &[1, 2, 3], None).unwrap();
    let oracle = exact(&code, &ch);
    let trials = 40_000;
    let plan = TrialPlan { trials, seed: 31, random_message: true, ..TrialPlan::default() };
    let t = run_trials(&code, &ch, &plan);
    for (j, p) in oracle.iter().map(rational_to_f64).enumerate() {
        let est = t.codeword_errors[j] as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((est - p).abs() < 5.0 * se, "j={j} est {est} oracle {p}");
    }
}

#[test]
fn experiment_config_from_json() {
    let json = r#"{
        "code": {"field": {"p": 2, "s": 2, "modulus": [1, 1], "alpha": [0, 1]}, "m": 2, "k": 2, "info_set": [1, 3],
                 "frozen_values": [[1, 0], [0, 1]]},
        "channel": {"kind": "qsc", "epsilon": "1/20"},
        "trials": 2000, "seed": 4, "shards": 2, "random_message": true, "tie": "lex"
    }"#;
    let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
    let report = fqpolar::run_experiment(&cfg).unwrap();
    report.check_invariants().unwrap();
    assert_eq!(report.n, 4);
    assert_eq!(report.info_set, vec![1, 3]);
}

fn decreasing_code() -> impl Strategy<Value = (u32, u32, Vec<usize>)> {
    (prop::sample::select(vec![2u32, 3, 4]), 1u32..=2).prop_flat_map(|(q, m)| {
        let sets = decreasing_sets(m);
        (Just(q), Just(m), prop::sample::select(sets))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_sets_give_equal_ser((q, m, a) in decreasing_code(), num in 1i64..9, erasure in any::<bool>()) {
        let f = Field::default_for(q).unwrap();
        let eps = ratio(num, 20);
        let ch = if erasure { Channel::qec(f.clone(), eps).unwrap() } else { Channel::qsc(f.clone(), eps).unwrap() };
        let code = CodeSpec::new(f, m, &a, None).unwrap();
        let ser = exact(&code, &ch);
        prop_assert!(ser.iter().all(|s| *s == ser[0]));
    }

    #[test]
    fn closure_is_smallest_closed_superset(mask in 0u32..256) {
        let a: Vec<usize> = (0..8).filter(|i| mask >> i & 1 == 1).collect();
        let c = closure(&a, 3);
        prop_assert!(check_condition_a(&c, 3).is_ok());
        prop_assert!(a.iter().all(|i| c.contains(i)));
        for d in decreasing_sets(3) {
            if a.iter().all(|i| d.contains(i)) {
                prop_assert!(c.iter().all(|i| d.contains(i)));
            }
        }
    }
}

#[test]
fn field_representation_does_not_matter() {
    use fqpolar::FieldSpec;
    let spec = |p, s, modulus: Vec<u32>, alpha: Vec<u32>| Field::new(FieldSpec { p, s, modulus, alpha }).unwrap();
    // alpha = x and alpha = x + 1 = x^2 are Frobenius images in F_4
    let f4a = spec(2, 2, vec![1, 1], vec![0, 1]);
    let f4b = spec(2, 2, vec![1, 1], vec![1, 1]);
    let ser4: Vec<Vec<Rational>> = [f4a, f4b]
        .into_iter()
        .map(|f| exact(&CodeSpec::new(f.clone(), 2, &[1, 3], None).unwrap(), &Channel::qsc(f, ratio(1, 5)).unwrap()))
        .collect();
    assert_eq!(ser4[0], ser4[1]);
    for f in [spec(3, 2, vec![1, 0], vec![1, 1]), spec(3, 2, vec![2, 1], vec![0, 1])] {
        let code = CodeSpec::new(f.clone(), 2, &[2, 3], None).unwrap();
        let ser = exact(&code, &Channel::qsc(f, ratio(1, 5)).unwrap());
        assert!(ser.iter().all(|s| *s == ser[0]), "{:?}", code.field().spec());
    }
}
