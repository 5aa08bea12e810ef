use serde::{Deserialize, Serialize};

use crate::diff::DiffError;
use crate::scalar::Real;

/// A named, contiguous slice of a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Named segments that tile `0..dim` exactly, in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    segments: Vec<Segment>,
}

impl Layout {
    /// One segment called `p` covering everything.
    pub fn flat(dim: usize) -> Self {
        Self::builder().segment("p", dim).build()
    }

    pub fn builder() -> LayoutBuilder {
        LayoutBuilder::default()
    }

    /// Validate arbitrary segments: they must be disjoint and cover `0..dim`.
    pub fn from_segments(mut segments: Vec<Segment>, dim: usize) -> Result<Self, DiffError> {
        segments.sort_by_key(|s| s.offset);
        let mut cursor = 0;
        for s in &segments {
            if s.offset != cursor {
                return Err(DiffError::Layout(format!(
                    "segment `{}` starts at {} but previous coverage ends at {}",
                    s.name, s.offset, cursor
                )));
            }
            cursor += s.len;
        }
        if cursor != dim {
            return Err(DiffError::Layout(format!(
                "segments cover {cursor} entries, vector has {dim}"
            )));
        }
        for (i, s) in segments.iter().enumerate() {
            if segments[..i].iter().any(|t| t.name == s.name) {
                return Err(DiffError::Layout(format!("duplicate segment `{}`", s.name)));
            }
        }
        Ok(Self { segments })
    }

    pub fn dim(&self) -> usize {
        self.segments.last().map_or(0, |s| s.offset + s.len)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn get(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    pub fn range(&self, name: &str) -> Option<std::ops::Range<usize>> {
        self.get(name).map(|s| s.offset..s.offset + s.len)
    }
}

#[derive(Debug, Default)]
pub struct LayoutBuilder {
    segments: Vec<Segment>,
    cursor: usize,
}

impl LayoutBuilder {
    pub fn segment(mut self, name: impl Into<String>, len: usize) -> Self {
        self.segments.push(Segment {
            name: name.into(),
            offset: self.cursor,
            len,
        });
        self.cursor += len;
        self
    }

    pub fn build(self) -> Layout {
        Layout {
            segments: self.segments,
        }
    }
}

/// Flat parameter values plus the layout naming their segments.
///
/// Construction rejects non-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector<F> {
    values: Vec<F>,
    layout: Layout,
}

impl<F: Real> ParamVector<F> {
    pub fn new(values: Vec<F>) -> Result<Self, DiffError> {
        let layout = Layout::flat(values.len());
        Self::with_layout(values, layout)
    }

    pub fn with_layout(values: Vec<F>, layout: Layout) -> Result<Self, DiffError> {
        if layout.dim() != values.len() {
            return Err(DiffError::Dimension {
                expected: layout.dim(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DiffError::NonFinite { index });
        }
        Ok(Self { values, layout })
    }

    pub fn zeros(layout: Layout) -> Self {
        Self {
            values: vec![F::zero(); layout.dim()],
            layout,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn into_values(self) -> Vec<F> {
        self.values
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn segment(&self, name: &str) -> Option<&[F]> {
        self.layout.range(name).map(|r| &self.values[r])
    }

    /// Replace a segment's values in place; the replacement must be finite.
    pub fn set_segment(&mut self, name: &str, values: &[F]) -> Result<(), DiffError> {
        let range = self
            .layout
            .range(name)
            .ok_or_else(|| DiffError::Layout(format!("no segment `{name}`")))?;
        if range.len() != values.len() {
            return Err(DiffError::Dimension {
                expected: range.len(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DiffError::NonFinite { index: range.start + i });
        }
        self.values[range].copy_from_slice(values);
        Ok(())
    }

    pub fn norm(&self) -> F {
        self.values.iter().fold(F::zero(), |acc, &v| acc + v * v).sqrt()
    }
}
