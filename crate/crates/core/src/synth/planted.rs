//! Feature matrices with planted group differences, bypassing signal
//! generation. Useful for checking feature selection in isolation.

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::Group;

#[derive(Clone, Debug, PartialEq)]
pub struct PlantedMatrix {
    /// One row per subject.
    pub rows: Vec<Vec<f64>>,
    pub groups: Vec<Group>,
    /// Planted column indices, sorted.
    pub planted: Vec<usize>,
    /// Effect of each planted column in its own standard deviations;
    /// positive means controls score higher.
    pub effects: Vec<f64>,
}

/// `patients + controls` rows of `columns` independent Gaussian features.
/// `planted` columns, chosen at random, have their patient mean shifted by
/// an effect spaced evenly over `effect_range` with a random sign. Each
/// column gets its own random location and scale. With `planted == 0` this
/// is a null matrix.
pub fn planted_matrix(
    patients: usize,
    controls: usize,
    columns: usize,
    planted: usize,
    effect_range: (f64, f64),
    seed: u64,
) -> Result<PlantedMatrix> {
    if planted > columns || patients < 2 || controls < 2 {
        return Err(Error::Config(format!(
            "cannot plant {planted} of {columns} columns with {patients} patients and {controls} controls"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");

    let mut order: Vec<usize> = (0..columns).collect();
    order.shuffle(&mut rng);
    let mut shift = vec![0.0; columns];
    let mut chosen: Vec<(usize, f64)> = order[..planted]
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let t = if planted > 1 {
                k as f64 / (planted - 1) as f64
            } else {
                0.5
            };
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (c, sign * (effect_range.0 + t * (effect_range.1 - effect_range.0)))
        })
        .collect();
    chosen.sort_by_key(|&(c, _)| c);
    for &(c, e) in &chosen {
        shift[c] = e;
    }

    let loc: Vec<f64> = (0..columns).map(|_| rng.random_range(-10.0..10.0)).collect();
    let scale: Vec<f64> = (0..columns).map(|_| 10f64.powf(rng.random_range(-2.0..2.0))).collect();

    let mut rows = Vec::with_capacity(patients + controls);
    let mut groups = Vec::with_capacity(patients + controls);
    for (group, n) in [(Group::Patient, patients), (Group::Control, controls)] {
        for _ in 0..n {
            let row = (0..columns)
                .map(|c| {
                    let z = std.sample(&mut rng);
                    let offset = if group == Group::Patient { -shift[c] } else { 0.0 };
                    loc[c] + scale[c] * (z + offset)
                })
                .collect();
            rows.push(row);
            groups.push(group);
        }
    }
    Ok(PlantedMatrix {
        rows,
        groups,
        planted: chosen.iter().map(|&(c, _)| c).collect(),
        effects: chosen.iter().map(|&(_, e)| e).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_effects() {
        let m = planted_matrix(15, 15, 243, 30, (2.5, 5.0), 9).unwrap();
        assert_eq!(m.rows.len(), 30);
        assert!(m.rows.iter().all(|r| r.len() == 243));
        assert_eq!(m.planted.len(), 30);
        assert!(m.planted.windows(2).all(|w| w[0] < w[1]));
        for e in &m.effects {
            assert!((2.5..=5.0).contains(&e.abs()));
        }
        assert_eq!(m, planted_matrix(15, 15, 243, 30, (2.5, 5.0), 9).unwrap());
    }

    #[test]
    fn null_has_no_plants() {
        let m = planted_matrix(8, 8, 50, 0, (2.5, 5.0), 1).unwrap();
        assert!(m.planted.is_empty());
        assert!(planted_matrix(1, 8, 50, 0, (1.0, 2.0), 1).is_err());
    }
}
