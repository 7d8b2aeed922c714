use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::pricing::OptionContract;

pub const PRICED_HEADER: [&str; 6] = ["K", "T", "r", "q", "sigma", "price"];

/// Contracts paired with oracle prices in USD.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub inputs: Vec<OptionContract>,
    pub targets: Vec<f64>,
}

impl LabeledSet {
    pub fn new(inputs: Vec<OptionContract>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::InsufficientData("labeled set is empty".into()));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::io("<csv>", e.into());
        w.write_record(PRICED_HEADER).map_err(io)?;
        for (c, p) in self.inputs.iter().zip(&self.targets) {
            let a = c.to_array();
            w.write_record(a.iter().chain(std::iter::once(p)).map(|v| v.to_string()))
                .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file).map_err(|e| match e {
            Error::Parse { detail, .. } => Error::parse(path, detail),
            other => other,
        })
    }

    /// Reads `K,T,r,q,sigma,price`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::parse("<csv>", e))?.clone();
        if headers.iter().ne(PRICED_HEADER) {
            return Err(Error::parse(
                "<csv>",
                format!(
                    "expected header `{}`, found `{}`",
                    PRICED_HEADER.join(","),
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let line = row + 2;
            let rec = rec.map_err(|e| Error::parse("<csv>", e))?;
            let mut vals = [0.0; 6];
            for (i, v) in vals.iter_mut().enumerate() {
                let field = rec.get(i).unwrap_or("");
                *v = field.parse().map_err(|_| {
                    Error::parse(
                        "<csv>",
                        format!("row {line}, column {}: `{field}` is not a number", PRICED_HEADER[i]),
                    )
                })?;
            }
            let c = OptionContract::from_array([vals[0], vals[1], vals[2], vals[3], vals[4]]);
            c.validate()
                .map_err(|e| Error::parse("<csv>", format!("row {line}: {e}")))?;
            inputs.push(c);
            targets.push(vals[5]);
        }
        Self::new(inputs, targets)
    }
}
