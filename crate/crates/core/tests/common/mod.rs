//! Brute-force metric formulas and the frozen evaluation fixture.
#![allow(dead_code)]

use capforge::metrics::EvalPair;
use rust_stemmers::{Algorithm, Stemmer};

pub const FIXTURE: [(&str, [&str; 2]); 10] = [
    ("a dog is barking loudly", ["a dog barks loudly in the yard", "the dog is barking"]),
    ("rain falls on the roof", ["rain is falling on a metal roof", "heavy rain on the roof"]),
    ("a car passes by", ["a car drives past quickly", "cars pass by on a wet road"]),
    ("birds are singing in the trees", ["birds sing in the trees", "many birds are chirping"]),
    ("someone is walking on gravel", ["a person walks on gravel", "footsteps on a gravel path"]),
    ("water runs from a tap loudly", ["water runs from a tap", "a faucet is running"]),
    ("people talk in a crowded room", ["people are talking in a room", "a crowd talks loudly"]),
    ("a door creaks open slowly", ["a door slowly creaks open", "an old door opens"]),
    ("the wind blows through the leaves", ["wind blows through leaves", "the wind is blowing hard"]),
    ("a bell rings twice", ["a church bell rings", "bells are ringing in the distance"]),
];

pub fn fixture_pairs() -> Vec<EvalPair> {
    FIXTURE
        .iter()
        .map(|(c, r)| EvalPair::from_text(c, r).unwrap())
        .collect()
}

fn grams(tokens: &[String], n: usize) -> Vec<Vec<String>> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| tokens[i..i + n].to_vec()).collect()
}

fn count(list: &[Vec<String>], g: &[String]) -> usize {
    list.iter().filter(|x| x.as_slice() == g).count()
}

fn unique(list: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    for g in list {
        if !out.contains(g) {
            out.push(g.clone());
        }
    }
    out
}

pub fn bleu(pairs: &[EvalPair], n: usize) -> f64 {
    let mut precisions = Vec::new();
    for k in 1..=n {
        let (mut num, mut den) = (0.0, 0.0);
        for p in pairs {
            let c = grams(&p.candidate, k);
            den += c.len() as f64;
            for g in unique(&c) {
                let best = p.references.iter().map(|r| count(&grams(r, k), &g)).max().unwrap();
                num += count(&c, &g).min(best) as f64;
            }
        }
        precisions.push(if den == 0.0 { 0.0 } else { num / den });
    }
    if precisions.contains(&0.0) {
        return 0.0;
    }
    let c: f64 = pairs.iter().map(|p| p.candidate.len() as f64).sum();
    let mut r = 0.0;
    for p in pairs {
        let cl = p.candidate.len() as f64;
        let mut best = f64::INFINITY;
        for x in &p.references {
            let l = x.len() as f64;
            if (l - cl).abs() < (best - cl).abs() || ((l - cl).abs() == (best - cl).abs() && l < best) {
                best = l;
            }
        }
        r += best;
    }
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * precisions.iter().product::<f64>().powf(1.0 / n as f64)
}

fn lcs(a: &[String], b: &[String]) -> usize {
    fn go(a: &[String], b: &[String], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    go(a, b, 0, 0, &mut vec![vec![None; b.len()]; a.len()])
}

pub fn rouge_l(pairs: &[EvalPair]) -> f64 {
    let beta2 = 1.2f64 * 1.2;
    let mut sum = 0.0;
    for p in pairs {
        let mut best: f64 = 0.0;
        for r in &p.references {
            let l = lcs(&p.candidate, r) as f64;
            if l > 0.0 {
                let prec = l / p.candidate.len() as f64;
                let rec = l / r.len() as f64;
                best = best.max((1.0 + beta2) * prec * rec / (rec + beta2 * prec));
            }
        }
        sum += best;
    }
    sum / pairs.len() as f64
}

pub fn cider(pairs: &[EvalPair]) -> f64 {
    let n_docs = pairs.len() as f64;
    let mut total = 0.0;
    for n in 1..=4 {
        let docs: Vec<Vec<Vec<String>>> = pairs
            .iter()
            .map(|p| unique(&p.references.iter().flat_map(|r| grams(r, n)).collect::<Vec<_>>()))
            .collect();
        let idf = |g: &[String]| {
            let df = docs.iter().filter(|d| d.iter().any(|x| x.as_slice() == g)).count();
            (n_docs / df.max(1) as f64).ln()
        };
        let vector = |t: &[String]| -> Vec<(Vec<String>, f64)> {
            let list = grams(t, n);
            unique(&list).into_iter().map(|g| {
                let w = count(&list, &g) as f64 * idf(&g);
                (g, w)
            }).collect()
        };
        let mut order = 0.0;
        for p in pairs {
            let c = vector(&p.candidate);
            let mut s = 0.0;
            for r in &p.references {
                let rv = vector(r);
                let dot: f64 = c
                    .iter()
                    .map(|(g, x)| rv.iter().filter(|(h, _)| h == g).map(|(_, y)| x * y).sum::<f64>())
                    .sum();
                let na = c.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
                let nb = rv.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
                if na > 0.0 && nb > 0.0 {
                    s += dot / (na * nb);
                }
            }
            order += s / p.references.len() as f64;
        }
        total += order / n_docs;
    }
    10.0 * total / 4.0
}

fn meteor_one(cand: &[String], reference: &[String], stemmer: &Stemmer) -> f64 {
    let mut free_ref: Vec<usize> = (0..reference.len()).collect();
    let mut aligned: Vec<Option<usize>> = vec![None; cand.len()];
    let key = |s: &String, stage: usize| if stage == 0 { s.clone() } else { stemmer.stem(s).into_owned() };
    for stage in 0..2 {
        for (i, c) in cand.iter().enumerate() {
            if aligned[i].is_some() {
                continue;
            }
            if let Some(pos) = free_ref.iter().position(|&j| key(c, stage) == key(&reference[j], stage)) {
                aligned[i] = Some(free_ref.remove(pos));
            }
        }
    }
    let pairs: Vec<(usize, usize)> = aligned.iter().enumerate().filter_map(|(i, j)| j.map(|j| (i, j))).collect();
    let m = pairs.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let mut chunks = 1.0;
    for w in pairs.windows(2) {
        if w[1].0 != w[0].0 + 1 || w[1].1 != w[0].1 + 1 {
            chunks += 1.0;
        }
    }
    let p = m / cand.len() as f64;
    let r = m / reference.len() as f64;
    let f = 10.0 * p * r / (r + 9.0 * p);
    f * (1.0 - 0.5 * (chunks / m).powi(3))
}

pub fn meteor(pairs: &[EvalPair]) -> f64 {
    let stemmer = Stemmer::create(Algorithm::English);
    pairs
        .iter()
        .map(|p| p.references.iter().map(|r| meteor_one(&p.candidate, r, &stemmer)).fold(0.0, f64::max))
        .sum::<f64>()
        / pairs.len() as f64
}
