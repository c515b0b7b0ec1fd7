//! Synthetic two-class co-occurrence images.
//!
//! Every image holds one "plus" blob (A) and one "ring" blob (B) plus up to two
//! "cross" distractors. In class 1 the ring always sits at a fixed offset from
//! the plus; in class 0 both blobs are placed independently (the fixed offset
//! is excluded). The ring position has the same marginal distribution in both
//! classes, so the label is carried by the relation between the blobs rather
//! than by where any single blob appears.

use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng;

pub const SIDE: usize = 16;
pub const BLOB: usize = 3;
/// Offset (rows, cols) of the ring's top-left corner relative to the plus in class 1.
pub const PAIR_OFFSET: (usize, usize) = (3, 4);
pub const NOISE_SIGMA: f64 = 0.05;

const PLUS: [u8; 9] = [0, 1, 0, 1, 1, 1, 0, 1, 0];
const RING: [u8; 9] = [1, 1, 1, 1, 0, 1, 1, 1, 1];
const CROSS: [u8; 9] = [1, 0, 1, 0, 1, 0, 1, 0, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Blob {
    Plus,
    Ring,
    Cross,
}

impl Blob {
    pub fn pattern(self) -> &'static [u8; 9] {
        match self {
            Blob::Plus => &PLUS,
            Blob::Ring => &RING,
            Blob::Cross => &CROSS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    /// Position in the generated dataset; also keys per-sample random streams.
    pub id: u64,
    /// `SIDE × SIDE` single-channel pixels in `[0, 1]`, row-major.
    pub image: Vec<f64>,
    pub label: usize,
}

const LAST: usize = SIDE - BLOB;
const SAMPLE_STREAM: u64 = 0xda7a;
const SPLIT_STREAM: u64 = 0x5b1;

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0.abs_diff(b.0) < BLOB && a.1.abs_diff(b.1) < BLOB
}

fn stamp(img: &mut [f64], blob: Blob, at: (usize, usize), intensity: f64) {
    for (cell, &on) in blob.pattern().iter().enumerate() {
        if on == 1 {
            let (r, c) = (at.0 + cell / BLOB, at.1 + cell % BLOB);
            img[r * SIDE + c] = img[r * SIDE + c].max(intensity);
        }
    }
}

fn sample(id: u64, seed: u64) -> SyntheticSample {
    let mut rng = rng::stream(seed, rng::mix(&[SAMPLE_STREAM, id]));
    let label = (id % 2) as usize;
    let (dr, dc) = PAIR_OFFSET;
    let plus = (rng.random_range(0..=LAST - dr), rng.random_range(0..=LAST - dc));
    let ring = if label == 1 {
        (plus.0 + dr, plus.1 + dc)
    } else {
        loop {
            let cand = (rng.random_range(dr..=LAST), rng.random_range(dc..=LAST));
            if cand != (plus.0 + dr, plus.1 + dc) && !overlaps(cand, plus) {
                break cand;
            }
        }
    };
    let mut img = vec![0.0; SIDE * SIDE];
    stamp(&mut img, Blob::Plus, plus, rng.random_range(0.7..1.0));
    stamp(&mut img, Blob::Ring, ring, rng.random_range(0.7..1.0));
    let mut taken = vec![plus, ring];
    for _ in 0..rng.random_range(0..=2) {
        for _ in 0..50 {
            let cand = (rng.random_range(0..=LAST), rng.random_range(0..=LAST));
            if taken.iter().all(|&t| !overlaps(t, cand)) {
                stamp(&mut img, Blob::Cross, cand, rng.random_range(0.7..1.0));
                taken.push(cand);
                break;
            }
        }
    }
    let noise = Normal::new(0.0, NOISE_SIGMA).expect("valid sigma");
    for v in &mut img {
        *v = (*v + noise.sample(&mut rng)).clamp(0.0, 1.0);
    }
    SyntheticSample { id, image: img, label }
}

/// `n_samples` images alternating between class 0 and class 1.
pub fn generate_dataset(n_samples: usize, seed: u64) -> Vec<SyntheticSample> {
    (0..n_samples as u64).map(|id| sample(id, seed)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitSizes {
    /// 70/15/15 of `total`, rounding toward the training set.
    pub fn from_total(total: usize) -> Self {
        let val = total * 15 / 100;
        let test = total * 15 / 100;
        Self {
            train: total - val - test,
            val,
            test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

pub struct Split {
    pub train: Vec<SyntheticSample>,
    pub val: Vec<SyntheticSample>,
    pub test: Vec<SyntheticSample>,
}

/// Stratified, seeded split: each class is shuffled on its own and dealt out
/// in proportion to the requested sizes.
pub fn stratified_split(data: Vec<SyntheticSample>, sizes: SplitSizes, seed: u64) -> Split {
    use rand::seq::SliceRandom;

    let total = data.len().max(1);
    let mut split = Split {
        train: Vec::with_capacity(sizes.train),
        val: Vec::with_capacity(sizes.val),
        test: Vec::with_capacity(sizes.test),
    };
    let mut classes: Vec<usize> = data.iter().map(|s| s.label).collect();
    classes.sort_unstable();
    classes.dedup();
    let n_classes = classes.len();
    let mut taken_val = 0;
    let mut taken_test = 0;
    let mut by_class: Vec<Vec<SyntheticSample>> = vec![Vec::new(); n_classes];
    for s in data {
        let slot = classes.binary_search(&s.label).expect("label collected above");
        by_class[slot].push(s);
    }
    for (ci, mut members) in by_class.into_iter().enumerate() {
        members.shuffle(&mut rng::stream(seed, rng::mix(&[SPLIT_STREAM, ci as u64])));
        let last = ci + 1 == n_classes;
        let share = |want: usize, taken: usize| {
            if last {
                want - taken
            } else {
                (want * members.len() + total / 2) / total
            }
        };
        let n_val = share(sizes.val, taken_val).min(members.len());
        let n_test = share(sizes.test, taken_test).min(members.len() - n_val);
        taken_val += n_val;
        taken_test += n_test;
        let mut it = members.into_iter();
        split.val.extend(it.by_ref().take(n_val));
        split.test.extend(it.by_ref().take(n_test));
        split.train.extend(it);
    }
    for part in [&mut split.train, &mut split.val, &mut split.test] {
        part.sort_by_key(|s| s.id);
    }
    split
}

/// One row per sample: `id,label,p0,…,p255`.
pub fn write_dataset_csv<W: Write>(out: &mut W, data: &[SyntheticSample]) -> std::io::Result<()> {
    write!(out, "id,label")?;
    for i in 0..SIDE * SIDE {
        write!(out, ",p{i}")?;
    }
    writeln!(out)?;
    for s in data {
        write!(out, "{},{}", s.id, s.label)?;
        for v in &s.image {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_deterministic() {
        let a = generate_dataset(100, 3);
        assert_eq!(a.iter().filter(|s| s.label == 1).count(), 50);
        assert_eq!(a, generate_dataset(100, 3));
        assert_ne!(a, generate_dataset(100, 4));
        assert!(a.iter().all(|s| s.image.len() == SIDE * SIDE));
        assert!(a.iter().flat_map(|s| &s.image).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn split_is_stratified_and_complete() {
        let data = generate_dataset(200, 1);
        let sizes = SplitSizes::from_total(200);
        assert_eq!(sizes, SplitSizes { train: 140, val: 30, test: 30 });
        let s = stratified_split(data, sizes, 9);
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (140, 30, 30));
        for part in [&s.train, &s.val, &s.test] {
            let ones = part.iter().filter(|x| x.label == 1).count();
            assert_eq!(ones * 2, part.len());
        }
        let mut ids: Vec<u64> = s.train.iter().chain(&s.val).chain(&s.test).map(|x| x.id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..200).collect::<Vec<_>>());
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let data = generate_dataset(3, 0);
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1].split(',').count(), 2 + SIDE * SIDE);
    }
}
