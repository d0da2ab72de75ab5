//! Seeded synthetic datasets with a known ground truth, for validating the
//! selection pipeline without the real corpus.

use crate::data::{ClassLabel, Dataset, FEATURE_NAMES};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write;

/// Dataset whose binary label is `Σ x[informative] > |informative| / 2`; all
/// other columns are independent uniform noise. Attack rows are labelled DoS.
pub fn informative_dataset(rows: usize, dims: usize, informative: &[usize], seed: u64) -> Dataset {
    assert!(
        informative.iter().all(|&c| c < dims),
        "informative column out of range"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix = Array2::from_shape_simple_fn((rows, dims), || rng.gen::<f64>());
    let half = informative.len() as f64 / 2.0;
    let labels = matrix
        .rows()
        .into_iter()
        .map(|r| {
            let s: f64 = informative.iter().map(|&c| r[c]).sum();
            if s > half {
                ClassLabel::DoS
            } else {
                ClassLabel::Normal
            }
        })
        .collect();
    let names = (0..dims).map(|c| format!("f{c}")).collect();
    Dataset::new(matrix, labels, names)
}

const ATTACKS: [(&str, ClassLabel); 8] = [
    ("normal", ClassLabel::Normal),
    ("neptune", ClassLabel::DoS),
    ("smurf", ClassLabel::DoS),
    ("satan", ClassLabel::Probe),
    ("ipsweep", ClassLabel::Probe),
    ("guess_passwd", ClassLabel::R2L),
    ("warezmaster", ClassLabel::R2L),
    ("buffer_overflow", ClassLabel::U2R),
];

/// Text in the raw 43-field NSL-KDD layout. `src_bytes` and `serror_rate`
/// shift with the class so the records are learnable.
pub fn nslkdd_text(rows: usize, seed: u64) -> String {
    let protocols = ["tcp", "udp", "icmp"];
    let services = ["http", "private", "ftp_data", "smtp", "domain_u"];
    let flags = ["SF", "S0", "REJ"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..rows {
        // every class appears at least twice, the rest skew towards normal/DoS
        let a = if i < 2 * ATTACKS.len() {
            i % ATTACKS.len()
        } else {
            [0, 0, 0, 1, 1, 2, 3, 5, 7][rng.gen_range(0..9)]
        };
        let (name, class) = ATTACKS[a];
        let c = class.index() as f64;
        let mut fields: Vec<String> = Vec::with_capacity(43);
        for (j, _) in FEATURE_NAMES.iter().enumerate() {
            let v = match j {
                1 => protocols[(a + rng.gen_range(0..2)) % 3].to_string(),
                2 => services[(a + rng.gen_range(0..2)) % services.len()].to_string(),
                3 => flags[(a + rng.gen_range(0..2)) % 3].to_string(),
                4 => format!("{}", (c * 1000.0 + rng.gen_range(0.0..300.0)).round()),
                24 => format!("{:.2}", (c / 4.0 * 0.8 + rng.gen_range(0.0..0.2)).min(1.0)),
                6 | 11 | 13 | 14 | 19 | 20 | 21 => rng.gen_range(0..2).to_string(),
                22..=40 => format!("{:.2}", rng.gen::<f64>()),
                _ => rng.gen_range(0..50).to_string(),
            };
            fields.push(v);
        }
        fields.push(name.to_string());
        fields.push(rng.gen_range(0..22).to_string());
        writeln!(out, "{}", fields.join(",")).expect("write to string");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_reader, FEATURE_COUNT};

    #[test]
    fn informative_labels_follow_rule() {
        let ds = informative_dataset(200, 8, &[1, 4], 3);
        for (r, &l) in ds.matrix.rows().into_iter().zip(&ds.labels2) {
            assert_eq!(l, usize::from(r[1] + r[4] > 1.0));
        }
        assert!(ds.labels2.contains(&0) && ds.labels2.contains(&1));
    }

    #[test]
    fn nslkdd_text_parses_cleanly() {
        let text = nslkdd_text(120, 9);
        let out = parse_reader(text.as_bytes(), "synthetic").unwrap();
        assert_eq!(out.records.len(), 120);
        assert!(out.rejects.is_empty());
        assert!(out.records.iter().all(|r| r.fields.len() == FEATURE_COUNT));
        assert_eq!(text, nslkdd_text(120, 9));
    }
}
