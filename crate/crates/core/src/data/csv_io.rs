use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::{LabeledDataset, Sample, Split};
use crate::error::{Error, Result};
use crate::model::ClassId;
use crate::numerics::{RealVector, Scalar};

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            line,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Writes `y,x_1,...,x_D` with a header row.
pub fn write_csv_dataset<T: Scalar, W: Write>(out: &mut W, data: &LabeledDataset<T>) -> Result<()> {
    let dim = data.dim().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["y".to_string()];
    header.extend((1..=dim).map(|i| format!("x_{i}")));
    w.write_record(&header).map_err(csv_error)?;
    for s in &data.samples {
        let mut row = vec![s.y.to_string()];
        row.extend(s.x.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses `y,x_1..x_D`; `D` comes from the header. Line numbers in errors are
/// 1-based and count the header.
pub fn parse_csv_dataset<T: Scalar, R: Read>(input: R, split: Split) -> Result<LabeledDataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().map_err(csv_error)?.clone();
    if header.len() < 2 || &header[0] != "y" {
        return Err(Error::Parse {
            line: 1,
            message: "header must be `y,x_1,...,x_D`".into(),
        });
    }
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| Error::Parse { line, message };
        let y: u32 = record[0]
            .parse()
            .map_err(|_| bad(format!("bad label `{}`", &record[0])))?;
        let x: Vec<T> = record
            .iter()
            .skip(1)
            .map(|f| f.parse::<T>().map_err(|_| bad(format!("bad value `{f}`"))))
            .collect::<Result<_>>()?;
        let x = RealVector::new(x).map_err(|_| bad("non-finite feature".into()))?;
        samples.push(Sample { x, y: ClassId(y) });
    }
    Ok(LabeledDataset::new(samples, 0, split))
}

pub fn load_csv_dataset<T: Scalar>(path: &Path, split: Split) -> Result<LabeledDataset<T>> {
    parse_csv_dataset(fs::File::open(path)?, split)
}
