mod common;

use capforge::metrics::*;
use capforge::Error;
use proptest::prelude::*;

fn pair(c: &str, refs: &[&str]) -> EvalPair {
    EvalPair::from_text(c, refs).unwrap()
}

// B-1..B-4, ROUGE-L, CIDEr, METEOR; frozen from the oracles in `common`.
const FROZEN: [f64; 7] = [
    0.7884615385,
    0.6278779891,
    0.4418072718,
    0.2975613179,
    0.7026246687,
    2.2362399272,
    0.7709317124,
];

#[test]
fn fixture_matches_oracles_and_frozen_values() {
    let p = common::fixture_pairs();
    let s = evaluate(&p).unwrap();
    let got = [s.bleu_1, s.bleu_2, s.bleu_3, s.bleu_4, s.rouge_l, s.cider, s.meteor];
    let oracle = [
        common::bleu(&p, 1),
        common::bleu(&p, 2),
        common::bleu(&p, 3),
        common::bleu(&p, 4),
        common::rouge_l(&p),
        common::cider(&p),
        common::meteor(&p),
    ];
    for i in 0..7 {
        assert!((got[i] - oracle[i]).abs() < 1e-6, "metric {i}: {} vs oracle {}", got[i], oracle[i]);
        assert!((got[i] - FROZEN[i]).abs() < 1e-9, "metric {i}: {} vs frozen {}", got[i], FROZEN[i]);
    }
}

#[test]
fn analytic_cases() {
    let bp = bleu_n(&[pair("the cat", &["the cat sat"])], 1).unwrap();
    assert!((bp - (-0.5f64).exp()).abs() < 1e-12);
    assert!((bp - 0.606531).abs() < 1e-6);
    let clipped = bleu_n(&[pair("the the the", &["the cat"])], 1).unwrap();
    // precision 1/3, c=3 > r=2 so no penalty
    assert!((clipped - 1.0 / 3.0).abs() < 1e-12);

    assert!((rouge_l(&[pair("a b c", &["a c d"])]).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(rouge_l(&[pair("x y", &["p q"])]).unwrap(), 0.0);

    let disjoint = [pair("dogs bark very loudly", &["dogs bark very loudly"]), pair("rain hits the glass", &["rain hits the glass"])];
    assert!((cider(&disjoint).unwrap() - 10.0).abs() < 1e-12);
    assert_eq!(cider(&[pair("x y", &["p q"]), pair("p q", &["r s"])]).unwrap(), 0.0);
    // "a" appears in every document: idf 0, so matching only "a" scores nothing
    assert_eq!(cider(&[pair("a z", &["a b"]), pair("a y", &["a c"])]).unwrap(), 0.0);

    for l in 1..=6 {
        let text: Vec<String> = (0..l).map(|i| format!("t{i}")).collect();
        let s = meteor(&[pair(&text.join(" "), &[&text.join(" ")])]).unwrap();
        assert!((s - (1.0 - 0.5 / (l as f64).powi(3))).abs() < 1e-12);
    }
    assert_eq!(stem("cats"), stem("cat"));
    assert!(meteor(&[pair("cats", &["cat"])]).unwrap() > 0.0);
    assert_eq!(meteor(&[pair("x", &["y"])]).unwrap(), 0.0);
}

#[test]
fn errors() {
    assert!(matches!(bleu_n(&[], 1), Err(Error::EmptyCorpus)));
    assert!(matches!(rouge_l(&[]), Err(Error::EmptyCorpus)));
    assert!(matches!(meteor(&[]), Err(Error::EmptyCorpus)));
    assert!(matches!(cider(&[pair("a", &["a"])]), Err(Error::CorpusTooSmall(1))));
    assert!(EvalPair::new(vec![], vec![vec!["a".into()]]).is_err());
    assert!(EvalPair::new(vec!["a".into()], vec![vec![]]).is_err());
}

#[test]
fn report_files_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cands = dir.path().join("c.tsv");
    let refs = dir.path().join("r.tsv");
    let mut c = String::new();
    let mut r = String::new();
    for (i, (cand, rs)) in common::FIXTURE.iter().enumerate().rev() {
        c.push_str(&format!("clip{i}\t{cand}\n"));
        r.push_str(&format!("clip{i}\t{}\t{}\n", rs[0], rs[1]));
    }
    std::fs::write(&cands, c).unwrap();
    std::fs::write(&refs, r).unwrap();
    let s = evaluate_files(&cands, &refs).unwrap();
    assert!((s.bleu_1 - FROZEN[0]).abs() < 1e-9);
    assert!((s.cider - FROZEN[5]).abs() < 1e-9);

    let table = s.table();
    let header: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(header, ["B-1", "B-2", "B-3", "B-4", "CIDEr", "METEOR", "ROUGE_L"]);
    let json: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
    for key in ["bleu_1", "bleu_2", "bleu_3", "bleu_4", "rouge_l", "cider", "meteor"] {
        assert!(json[key].is_f64(), "{key}");
    }

    std::fs::write(&cands, "unknown\tsome caption\n").unwrap();
    assert!(matches!(evaluate_files(&cands, &refs), Err(Error::UnmatchedId(_))));
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "dog", "barks", "rain", "the", "falls", "on", "roof", "car", "bird"])
        .prop_map(str::to_string)
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(word(), 1..9)
}

fn corpus() -> impl Strategy<Value = Vec<EvalPair>> {
    prop::collection::vec(
        (sentence(), prop::collection::vec(sentence(), 1..=5)).prop_map(|(c, r)| EvalPair::new(c, r).unwrap()),
        2..8,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_evaluation_is_perfect(refs in prop::collection::vec(prop::collection::vec(sentence(), 1..=5), 1..8)) {
        let pairs: Vec<EvalPair> = refs
            .iter()
            .map(|r| EvalPair::new(r[0].clone(), r.clone()).unwrap())
            .collect();
        for n in 1..=4 {
            let b = bleu_n(&pairs, n).unwrap();
            // BLEU-n of a candidate shorter than n has no n-grams at all
            if pairs.iter().any(|p| p.candidate.len() >= n) {
                prop_assert!((b - 1.0).abs() < 1e-12);
            }
        }
        prop_assert!((rouge_l(&pairs).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounded_deterministic_and_order_free(pairs in corpus(), seed in any::<u64>()) {
        let a = evaluate(&pairs).unwrap();
        prop_assert_eq!(&a, &evaluate(&pairs).unwrap());
        for v in [a.bleu_1, a.bleu_2, a.bleu_3, a.bleu_4, a.rouge_l, a.meteor] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }
        prop_assert!((0.0..=10.0 + 1e-9).contains(&a.cider));

        let mut shuffled = pairs.clone();
        let k = (seed as usize) % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let b = evaluate(&shuffled).unwrap();
        for (x, y) in [(a.bleu_1, b.bleu_1), (a.bleu_4, b.bleu_4), (a.rouge_l, b.rouge_l), (a.cider, b.cider), (a.meteor, b.meteor)] {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_oracles(pairs in corpus()) {
        let s = evaluate(&pairs).unwrap();
        prop_assert!((s.bleu_1 - common::bleu(&pairs, 1)).abs() < 1e-9);
        prop_assert!((s.bleu_2 - common::bleu(&pairs, 2)).abs() < 1e-9);
        prop_assert!((s.bleu_4 - common::bleu(&pairs, 4)).abs() < 1e-9);
        prop_assert!((s.rouge_l - common::rouge_l(&pairs)).abs() < 1e-9);
        prop_assert!((s.cider - common::cider(&pairs)).abs() < 1e-9);
        prop_assert!((s.meteor - common::meteor(&pairs)).abs() < 1e-9);
    }

    #[test]
    fn growing_a_short_candidate_toward_its_reference_never_lowers_bleu(reference in prop::collection::vec(word(), 2..12), cut in 1usize..11) {
        let cut = cut.min(reference.len() - 1);
        let shorter = EvalPair::new(reference[..cut].to_vec(), vec![reference.clone()]).unwrap();
        let longer = EvalPair::new(reference[..cut + 1].to_vec(), vec![reference.clone()]).unwrap();
        for n in 1..=4 {
            prop_assert!(bleu_n(std::slice::from_ref(&longer), n).unwrap() + 1e-12 >= bleu_n(std::slice::from_ref(&shorter), n).unwrap());
        }
    }
}
