use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augment::AugmentError;
use crate::scalar::Real;

/// Per-coordinate tolerance under which two inputs count as the same point.
pub const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// `(1/m) Σ ℓ_i`
    #[default]
    Mean,
    /// `Σ ℓ_i`
    Sum,
}

impl Reduction {
    pub fn factor<F: Real>(self, m: usize) -> F {
        match self {
            Reduction::Mean => F::one() / F::lit(m as f64),
            Reduction::Sum => F::one(),
        }
    }
}

/// Training samples plus the partition of indices by identical input.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    inputs: Vec<Vec<F>>,
    targets: Vec<Vec<F>>,
    groups: Vec<Vec<usize>>,
}

impl<F: Real> Dataset<F> {
    pub fn new(inputs: Vec<Vec<F>>, targets: Vec<Vec<F>>) -> Result<Self, AugmentError> {
        if inputs.is_empty() {
            return Err(AugmentError::InvalidData("dataset needs at least one sample".into()));
        }
        if inputs.len() != targets.len() {
            return Err(AugmentError::InvalidData(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let (dx, dy) = (inputs[0].len(), targets[0].len());
        if dy == 0 {
            return Err(AugmentError::InvalidData("targets must be non-empty".into()));
        }
        for (i, (x, y)) in inputs.iter().zip(&targets).enumerate() {
            if x.len() != dx || y.len() != dy {
                return Err(AugmentError::InvalidData(format!(
                    "sample {i} has inconsistent dimensions"
                )));
            }
            if x.iter().chain(y).any(|v| !v.is_finite()) {
                return Err(AugmentError::InvalidData(format!("sample {i} has a non-finite entry")));
            }
        }
        let groups = partition(&inputs);
        Ok(Self {
            inputs,
            targets,
            groups,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }

    pub fn inputs(&self) -> &[Vec<F>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Vec<F>] {
        &self.targets
    }

    /// Index groups sharing one input, ordered by first occurrence.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// One input per group; pairwise distinct.
    pub fn representatives(&self) -> Vec<&[F]> {
        self.groups.iter().map(|g| self.inputs[g[0]].as_slice()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self, AugmentError> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(AugmentError::InvalidData(format!("sample index {bad} out of range")));
        }
        Self::new(
            indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            indices.iter().map(|&i| self.targets[i].clone()).collect(),
        )
    }

    /// Read CSV with header `x1..xdx,y1..ydy`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, AugmentError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| AugmentError::Io(e.to_string()))?.clone();
        let (dx, dy) = parse_header(&headers)?;
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| AugmentError::Io(e.to_string()))?;
            if rec.len() != dx + dy {
                return Err(AugmentError::InvalidData(format!(
                    "row {} has {} fields, expected {}",
                    line + 1,
                    rec.len(),
                    dx + dy
                )));
            }
            let vals = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map(F::lit)
                        .map_err(|_| AugmentError::InvalidData(format!("row {}: bad number `{s}`", line + 1)))
                })
                .collect::<Result<Vec<F>, _>>()?;
            inputs.push(vals[..dx].to_vec());
            targets.push(vals[dx..].to_vec());
        }
        Self::new(inputs, targets)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, AugmentError> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| AugmentError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), AugmentError> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=self.input_dim())
            .map(|j| format!("x{j}"))
            .chain((1..=self.output_dim()).map(|k| format!("y{k}")))
            .collect();
        w.write_record(&header).map_err(|e| AugmentError::Io(e.to_string()))?;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            let row: Vec<String> = x.iter().chain(y).map(|v| v.to_f64_lossy().to_string()).collect();
            w.write_record(&row).map_err(|e| AugmentError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| AugmentError::Io(e.to_string()))
    }
}

fn parse_header(headers: &csv::StringRecord) -> Result<(usize, usize), AugmentError> {
    let dx = headers.iter().take_while(|h| h.starts_with('x')).count();
    let dy = headers.len() - dx;
    let expected = (1..=dx)
        .map(|j| format!("x{j}"))
        .chain((1..=dy).map(|k| format!("y{k}")));
    if dx == 0 || dy == 0 || !headers.iter().zip(expected).all(|(h, e)| h == e) {
        return Err(AugmentError::InvalidData(format!(
            "header must be x1..xN,y1..yK, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok((dx, dy))
}

fn same_point<F: Real>(a: &[F], b: &[F]) -> bool {
    a.iter()
        .zip(b)
        .all(|(&u, &v)| (u - v).abs().to_f64_lossy() <= DUPLICATE_TOL)
}

fn partition<F: Real>(inputs: &[Vec<F>]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, x) in inputs.iter().enumerate() {
        match groups.iter_mut().find(|g| same_point(&inputs[g[0]], x)) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}
