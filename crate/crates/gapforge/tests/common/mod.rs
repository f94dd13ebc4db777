//! Seeded random tables shared by the integration suites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gapforge::tabular::{Column, Table};

/// Labels that stress CSV quoting but avoid the missing tokens and never
/// parse as numbers.
const LABEL_POOL: &[&str] = &[
    "red",
    "green",
    "blue",
    "two words",
    "quo\"ted",
    "com,ma",
    " padded ",
    "UPPER",
];

fn random_finite(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        match rng.random_range(0..4) {
            0 => return rng.random_range(-1000..1000) as f64,
            1 => return rng.random_range(-50.0..50.0),
            2 => return rng.random_range(-1.0e-6..1.0e-6),
            _ => {
                let v = f64::from_bits(rng.random::<u64>());
                if v.is_finite() {
                    return v;
                }
            }
        }
    }
}

/// A random mixed-kind table. Every column keeps at least `min_observed`
/// observed cells so fit preconditions hold and reload keeps kinds.
pub fn random_table(seed: u64, min_rows: usize, min_observed: usize) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_rows = rng.random_range(min_rows..min_rows + 25);
    let n_columns = rng.random_range(1..6);
    let missing_rate = rng.random_range(0.0..0.5);

    let mut columns = Vec::new();
    for c in 0..n_columns {
        let name = format!("col{c}");
        let numeric: bool = rng.random();
        let mut observed_rows: Vec<usize> = (0..n_rows).collect();
        // Pin a few rows observed to satisfy the per-column floor.
        for i in 0..min_observed.min(n_rows) {
            let j = rng.random_range(i..n_rows);
            observed_rows.swap(i, j);
        }
        let pinned: Vec<usize> = observed_rows[..min_observed.min(n_rows)].to_vec();
        let is_missing = |row: usize, rng: &mut ChaCha8Rng| {
            !pinned.contains(&row) && rng.random::<f64>() < missing_rate
        };
        if numeric {
            let cells: Vec<Option<f64>> = (0..n_rows)
                .map(|row| {
                    if is_missing(row, &mut rng) {
                        None
                    } else {
                        Some(random_finite(&mut rng))
                    }
                })
                .collect();
            columns.push(Column::numeric(name, cells).unwrap());
        } else {
            let cells: Vec<Option<&str>> = (0..n_rows)
                .map(|row| {
                    if is_missing(row, &mut rng) {
                        None
                    } else {
                        Some(LABEL_POOL[rng.random_range(0..LABEL_POOL.len())])
                    }
                })
                .collect();
            columns.push(Column::categorical(name, cells));
        }
    }
    Table::new(columns).unwrap()
}
