use causemap::desknet::data::{Blob, BLOB, PAIR_OFFSET, SIDE};
use causemap::desknet::{generate_dataset, stratified_split, SplitSizes, SyntheticSample};

fn split() -> (Vec<SyntheticSample>, Vec<SyntheticSample>) {
    let sizes = SplitSizes { train: 2000, val: 500, test: 500 };
    let s = stratified_split(generate_dataset(sizes.total(), 0), sizes, 0);
    (s.train, s.test)
}

/// Full-batch logistic regression on the raw pixels.
fn linear_accuracy(train: &[SyntheticSample], test: &[SyntheticSample]) -> (f64, f64) {
    let d = SIDE * SIDE;
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let lr = 0.5;
    let score = |w: &[f64], b: f64, x: &[f64]| b + w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
    for _ in 0..2000 {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for s in train {
            let p = 1.0 / (1.0 + (-score(&w, b, &s.image)).exp());
            let e = p - s.label as f64;
            gb += e;
            for (g, x) in gw.iter_mut().zip(&s.image) {
                *g += e * x;
            }
        }
        let n = train.len() as f64;
        b -= lr * gb / n;
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * g / n;
        }
    }
    let acc = |data: &[SyntheticSample]| {
        data.iter().filter(|s| usize::from(score(&w, b, &s.image) > 0.0) == s.label).count() as f64 / data.len() as f64
    };
    (acc(train), acc(test))
}

/// Top-left corner of the best match of a zero-mean template.
fn locate(image: &[f64], blob: Blob) -> (usize, usize) {
    let pattern = blob.pattern();
    let mean = pattern.iter().map(|&v| v as f64).sum::<f64>() / 9.0;
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for r in 0..=SIDE - BLOB {
        for c in 0..=SIDE - BLOB {
            let mut acc = 0.0;
            for (cell, &on) in pattern.iter().enumerate() {
                acc += (on as f64 - mean) * image[(r + cell / BLOB) * SIDE + c + cell % BLOB];
            }
            if acc > best.0 {
                best = (acc, (r, c));
            }
        }
    }
    best.1
}

fn pair_oracle(s: &SyntheticSample) -> usize {
    let plus = locate(&s.image, Blob::Plus);
    let ring = locate(&s.image, Blob::Ring);
    usize::from((ring.0 as isize - plus.0 as isize, ring.1 as isize - plus.1 as isize) == (PAIR_OFFSET.0 as isize, PAIR_OFFSET.1 as isize))
}

#[test]
fn label_is_relational_not_positional() {
    let (train, test) = split();
    let (train_acc, test_acc) = linear_accuracy(&train, &test);
    println!("linear on pixels: train {train_acc:.3} test {test_acc:.3}");
    assert!(test_acc < 0.95, "linear classifier reached {test_acc}");

    let oracle = test.iter().filter(|s| pair_oracle(s) == s.label).count() as f64 / test.len() as f64;
    println!("blob-pair oracle: test {oracle:.3}");
    assert!(oracle > 0.99, "blob-pair oracle reached only {oracle}");
}

#[test]
fn pixels_stay_in_unit_range() {
    let data = generate_dataset(200, 9);
    assert!(data.iter().all(|s| s.image.iter().all(|v| (0.0..=1.0).contains(v))));
}
