use proptest::prelude::*;
use stratq::formats::{input_json, load_input_strategy, load_strategy, load_strategy_file, strategy_json, Loaded};
use stratq_core::random::{random_strategy, RandomShape};
use stratq_core::InputStrategy;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strategy_files_round_trip(seed in any::<u64>()) {
        let s = random_strategy(seed, RandomShape::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        std::fs::write(&path, strategy_json(&s)).unwrap();
        prop_assert_eq!(&load_strategy(&path).unwrap(), &s);
        prop_assert_eq!(load_strategy_file(&path).unwrap(), Loaded::Strategy(s));
    }

    #[test]
    fn input_files_round_trip(p in 0.0f64..1.0) {
        let input = InputStrategy::iid(vec!["0".into(), "1".into()], vec!["a".into(), "b".into()], &[p, 1.0 - p]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.json");
        std::fs::write(&path, input_json(&input)).unwrap();
        prop_assert_eq!(&load_input_strategy(&path).unwrap(), &input);
        prop_assert!(std::fs::read_to_string(&path).unwrap().contains("\"*\""));
    }
}
