use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ratings::{IdMap, RatingMatrix};
use crate::similarity::compressor::Compressor;
use crate::similarity::encoding::{encode_entity, Axis};
use crate::similarity::measures::{cs_from_lengths, ks_from_lengths, Measure};

/// Dense symmetric similarity matrix over users or items, values in
/// `[0, 1]` with a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    axis: Axis,
    order: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Wraps row-major `values`, checking symmetry, the unit diagonal and
    /// the `[0, 1]` range.
    pub fn from_values(axis: Axis, order: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != order * order {
            return Err(Error::Validation(format!(
                "{} values for a {order}x{order} similarity matrix",
                values.len()
            )));
        }
        let sim = SimilarityMatrix { axis, order, values };
        for a in 0..order {
            if sim.get(a, a) != 1.0 {
                return Err(Error::Validation(format!("diagonal entry {a} is not 1")));
            }
            for b in 0..a {
                let v = sim.get(a, b);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Validation(format!("entry ({a}, {b}) = {v} outside [0, 1]")));
                }
                if v != sim.get(b, a) {
                    return Err(Error::Validation(format!("entry ({a}, {b}) is not symmetric")));
                }
            }
        }
        Ok(sim)
    }

    /// The identity similarity (every distinct pair scores 0).
    pub fn identity(axis: Axis, order: usize) -> Self {
        let mut values = vec![0.0; order * order];
        for a in 0..order {
            values[a * order + a] = 1.0;
        }
        SimilarityMatrix { axis, order, values }
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.order + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.values[a * self.order..(a + 1) * self.order]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Dense CSV with the entity ids as header and first column.
    pub fn write_csv<W: Write>(&self, ids: &IdMap, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        write!(out, "{}", self.axis)?;
        for a in 0..self.order {
            write!(out, ",{}", ids.id_of(a))?;
        }
        writeln!(out)?;
        for a in 0..self.order {
            write!(out, "{}", ids.id_of(a))?;
            for v in self.row(a) {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Builds the user (or item) similarity matrix of `matrix`.
///
/// Each entity's description is compressed once. KS needs nothing more; CS
/// also compresses both concatenation orders of every unordered pair and
/// uses the mean of the two lengths, which keeps the result exactly
/// symmetric. The diagonal is 1 for both measures. Entries are computed
/// independently, so the output does not depend on the number of workers.
pub fn build_similarity(
    matrix: &RatingMatrix,
    axis: Axis,
    measure: Measure,
    compressor: &Compressor,
) -> Result<SimilarityMatrix> {
    let order = axis.order(matrix);
    let descriptions: Vec<Vec<u8>> = (0..order)
        .into_par_iter()
        .map(|i| encode_entity(matrix, axis, i))
        .collect();
    let lengths: Vec<usize> = descriptions
        .par_iter()
        .map(|d| compressor.compressed_length(d))
        .collect::<Result<_>>()?;

    let mut values = vec![0.0; order * order];
    match measure {
        Measure::Ks => {
            values
                .par_chunks_mut(order.max(1))
                .enumerate()
                .for_each(|(a, row)| {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = if a == b { 1.0 } else { ks_from_lengths(lengths[a], lengths[b]) };
                    }
                });
        }
        Measure::Cs => {
            let upper: Vec<Vec<f64>> = (0..order)
                .into_par_iter()
                .map(|a| {
                    let mut joined = Vec::new();
                    ((a + 1)..order)
                        .map(|b| {
                            let (x, y) = (&descriptions[a], &descriptions[b]);
                            joined.clear();
                            joined.extend_from_slice(x);
                            joined.extend_from_slice(y);
                            let xy = compressor.compressed_length(&joined)?;
                            joined.clear();
                            joined.extend_from_slice(y);
                            joined.extend_from_slice(x);
                            let yx = compressor.compressed_length(&joined)?;
                            if x.is_empty() && y.is_empty() {
                                return Ok(1.0);
                            }
                            let mean = (xy + yx) as f64 / 2.0;
                            Ok(cs_from_lengths(lengths[a], lengths[b], mean))
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<_>>()?;
            for (a, row) in upper.iter().enumerate() {
                values[a * order + a] = 1.0;
                for (offset, &v) in row.iter().enumerate() {
                    let b = a + 1 + offset;
                    values[a * order + b] = v;
                    values[b * order + a] = v;
                }
            }
        }
    }
    Ok(SimilarityMatrix { axis, order, values })
}
