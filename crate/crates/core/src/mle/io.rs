//! CSV import and export of tomography datasets.
//!
//! Counts file columns: `basis_id,element_id,count,block`.
//! Bases file columns: `basis_id,element_id,component,re,im`, where
//! `element_id` selects the basis vector and `component` its entry.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{LikelihoodModel, TomographyDataset};
use crate::error::{Result, TomoError};
use crate::quantum::{CMatrix, ProjectiveBasis, C64};

#[derive(Debug, Serialize, Deserialize)]
struct CountRow {
    basis_id: usize,
    element_id: usize,
    count: f64,
    block: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct AmplitudeRow {
    basis_id: usize,
    element_id: usize,
    component: usize,
    re: f64,
    im: f64,
}

fn csv_err(e: csv::Error) -> TomoError {
    TomoError::Parse(e.to_string())
}

pub fn write_dataset<W: Write, V: Write>(data: &TomographyDataset, counts: W, bases: V) -> Result<()> {
    let mut cw = csv::Writer::from_writer(counts);
    let mut bw = csv::Writer::from_writer(bases);
    for (id, record) in data.records().iter().enumerate() {
        for (element_id, &count) in record.counts.iter().enumerate() {
            cw.serialize(CountRow { basis_id: id, element_id, count, block: record.block }).map_err(csv_err)?;
        }
        let u = record.basis.unitary();
        for element_id in 0..u.ncols() {
            for component in 0..u.nrows() {
                let z = u[(component, element_id)];
                bw.serialize(AmplitudeRow { basis_id: id, element_id, component, re: z.re, im: z.im })
                    .map_err(csv_err)?;
            }
        }
    }
    cw.flush().map_err(|e| TomoError::Parse(e.to_string()))?;
    bw.flush().map_err(|e| TomoError::Parse(e.to_string()))?;
    Ok(())
}

/// Reads a dataset back; records are ordered by basis id.
pub fn read_dataset<R: Read, S: Read>(counts: R, bases: S, model: LikelihoodModel) -> Result<TomographyDataset> {
    let mut amplitudes: BTreeMap<usize, Vec<AmplitudeRow>> = BTreeMap::new();
    for row in csv::Reader::from_reader(bases).deserialize() {
        let row: AmplitudeRow = row.map_err(csv_err)?;
        amplitudes.entry(row.basis_id).or_default().push(row);
    }
    let mut tallies: BTreeMap<usize, (Vec<(usize, f64)>, f64)> = BTreeMap::new();
    for row in csv::Reader::from_reader(counts).deserialize() {
        let row: CountRow = row.map_err(csv_err)?;
        let entry = tallies.entry(row.basis_id).or_insert_with(|| (Vec::new(), row.block));
        if entry.1 != row.block {
            return Err(TomoError::Parse(format!("inconsistent block size for basis {}", row.basis_id)));
        }
        entry.0.push((row.element_id, row.count));
    }
    let dim = match amplitudes.values().next() {
        Some(rows) => (rows.len() as f64).sqrt().round() as usize,
        None => return Err(TomoError::InsufficientData("no bases in file".into())),
    };
    let mut data = TomographyDataset::new(dim, model);
    for (id, (entries, block)) in tallies {
        let rows =
            amplitudes.get(&id).ok_or_else(|| TomoError::Parse(format!("basis {id} missing from bases file")))?;
        if rows.len() != dim * dim {
            return Err(TomoError::DimensionMismatch { expected: dim * dim, found: rows.len() });
        }
        let mut u = CMatrix::zeros(dim, dim);
        for r in rows {
            if r.component >= dim || r.element_id >= dim {
                return Err(TomoError::Parse(format!("index out of range in basis {id}")));
            }
            u[(r.component, r.element_id)] = C64::new(r.re, r.im);
        }
        let mut counts = vec![0.0; dim];
        for (element, count) in entries {
            if element >= dim {
                return Err(TomoError::Parse(format!("element {element} out of range in basis {id}")));
            }
            counts[element] = count;
        }
        data.push(ProjectiveBasis::from_unitary(u)?, counts, block)?;
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_basis, RngStream};

    #[test]
    fn round_trip() {
        let mut rng = RngStream::new(5, 0);
        let mut data = TomographyDataset::new(3, LikelihoodModel::Poisson);
        for k in 0..4u64 {
            data.push_counts(haar_basis(3, &mut rng), &[k, 2 * k + 1, 7]).unwrap();
        }
        let (mut c, mut b) = (Vec::new(), Vec::new());
        write_dataset(&data, &mut c, &mut b).unwrap();
        let back = read_dataset(c.as_slice(), b.as_slice(), LikelihoodModel::Poisson).unwrap();
        assert_eq!(back.len(), 4);
        for (x, y) in data.records().iter().zip(back.records()) {
            assert_eq!(x.counts, y.counts);
            assert_eq!(x.block, y.block);
            assert_eq!(x.basis.unitary(), y.basis.unitary());
        }
    }

    #[test]
    fn missing_basis_is_an_error() {
        let counts = "basis_id,element_id,count,block\n0,0,1,1\n";
        let bases = "basis_id,element_id,component,re,im\n1,0,0,1,0\n";
        assert!(read_dataset(counts.as_bytes(), bases.as_bytes(), LikelihoodModel::Multinomial).is_err());
    }
}
