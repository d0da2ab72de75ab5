//! CSV snapshot of a preprocessed dataset: `row_id,<features...>,label5,label2`.
//! Floats are written in shortest round-trip form, so a snapshot reloads to the
//! exact same matrix and rewriting it is byte-identical.

use super::{ClassLabel, DataError, Dataset};
use ndarray::Array2;
use std::io::{Read, Write};

pub fn write_snapshot<W: Write>(ds: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["row_id".to_string()];
    header.extend(ds.feature_names.iter().cloned());
    header.push("label5".into());
    header.push("label2".into());
    w.write_record(&header)?;

    let mut record = Vec::with_capacity(header.len());
    for (i, row) in ds.matrix.rows().into_iter().enumerate() {
        record.clear();
        record.push(ds.row_ids[i].to_string());
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(ds.labels5[i].name().to_string());
        record.push(ds.labels2[i].to_string());
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_snapshot<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let width = header.len();
    if width < 4 || &header[0] != "row_id" || &header[width - 2] != "label5" {
        return Err(DataError::Snapshot("unexpected header".into()));
    }
    let feature_names: Vec<String> = header
        .iter()
        .skip(1)
        .take(width - 3)
        .map(String::from)
        .collect();
    let n_features = feature_names.len();

    let mut values = Vec::new();
    let mut labels5 = Vec::new();
    let mut row_ids = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| DataError::Snapshot(format!("data row {}: bad {what}", i + 1));
        row_ids.push(rec[0].parse::<usize>().map_err(|_| bad("row_id"))?);
        for j in 0..n_features {
            values.push(
                rec[j + 1]
                    .parse::<f64>()
                    .map_err(|_| bad(&feature_names[j]))?,
            );
        }
        labels5.push(
            rec[width - 2]
                .parse::<ClassLabel>()
                .map_err(|_| bad("label5"))?,
        );
    }
    let matrix = Array2::from_shape_vec((labels5.len(), n_features), values)
        .map_err(|e| DataError::Snapshot(e.to_string()))?;
    let mut ds = Dataset::new(matrix, labels5, feature_names);
    ds.row_ids = row_ids;
    Ok(ds)
}
