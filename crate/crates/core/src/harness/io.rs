//! CSV formats.
//!
//! Mixtures: header `constituent_1,...,constituent_N,label`, one mixture per
//! row. Labels are `0`/`1` for binary data or decimal numbers for continuous
//! data.
//!
//! Descriptors: header `id,f_0,...,f_{L-1}`, one constituent per row.
//!
//! Split memberships: header `key,fold,role,stratum`, where `key` joins the
//! constituent ids with `|`.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::descriptors::{DescriptorKind, DescriptorTable};
use crate::error::{Error, MixtureError, Result};
use crate::folds::FoldSplit;
use crate::mixture::{CollectionSpec, Dataset, Label};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse_err(path, line, e.to_string())
}

/// Reads a mixture CSV. Collections are inferred from the rows: one
/// collection of every id seen (unordered) or one collection per column
/// (ordered), members sorted.
pub fn load_mixture_csv(path: &Path, ordered: bool) -> Result<Dataset> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() < 3 || &header[header.len() - 1] != "label" {
        return Err(parse_err(
            path,
            1,
            "header must be `constituent_1,...,constituent_N,label` with N >= 2",
        ));
    }
    let arity = header.len() - 1;

    let mut rows: Vec<(usize, Vec<String>, String)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != arity + 1 {
            return Err(Error::Ingest {
                path: path.to_owned(),
                line,
                source: MixtureError::ArityMismatch {
                    expected: arity,
                    found: rec.len().saturating_sub(1),
                },
            });
        }
        let ids = rec.iter().take(arity).map(str::to_owned).collect();
        rows.push((line, ids, rec[arity].to_owned()));
    }

    let binary = rows.iter().all(|(_, _, l)| l == "0" || l == "1");
    let mut labeled = Vec::with_capacity(rows.len());
    for (line, ids, raw) in rows {
        let label = if binary {
            Label::Binary(raw == "1")
        } else {
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Label::Continuous(v),
                _ => return Err(parse_err(path, line, format!("malformed label `{raw}`"))),
            }
        };
        labeled.push((line, ids, label));
    }

    let mut members: Vec<BTreeSet<&str>> = vec![BTreeSet::new(); if ordered { arity } else { 1 }];
    for (_, ids, _) in &labeled {
        for (slot, id) in ids.iter().enumerate() {
            members[if ordered { slot } else { 0 }].insert(id.as_str());
        }
    }
    let collections = members
        .iter()
        .enumerate()
        .map(|(c, m)| {
            let name = if ordered { header[c].to_owned() } else { "constituents".into() };
            CollectionSpec::new(name, m.iter().copied())
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|source| {
            let line = labeled
                .iter()
                .find(|(_, ids, _)| ids.iter().any(String::is_empty))
                .map_or(0, |r| r.0);
            Error::Ingest {
                path: path.to_owned(),
                line,
                source,
            }
        })?;

    let mut ds = Dataset::new(collections, arity, ordered).map_err(|source| Error::Ingest {
        path: path.to_owned(),
        line: 1,
        source,
    })?;
    for (line, ids, label) in labeled {
        ds.insert(&ids, label).map_err(|source| Error::Ingest {
            path: path.to_owned(),
            line,
            source,
        })?;
    }
    Ok(ds)
}

/// Reads a descriptor CSV as a `real` table.
pub fn load_descriptor_csv(path: &Path) -> Result<DescriptorTable> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() < 2 {
        return Err(parse_err(path, 1, "descriptor file has no feature columns"));
    }
    if &header[0] != "id" {
        return Err(parse_err(path, 1, "first column must be `id`"));
    }
    let width = header.len();
    let mut table = DescriptorTable::new(width - 1, DescriptorKind::Real)?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(Error::RaggedRows {
                path: path.to_owned(),
                line,
                expected: width,
                found: rec.len(),
            });
        }
        let id = &rec[0];
        if id.is_empty() {
            return Err(parse_err(path, line, "empty id"));
        }
        if table.get(id).is_ok() {
            return Err(parse_err(path, line, format!("duplicate id `{id}`")));
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|cell| {
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(path, line, format!("non-numeric cell `{cell}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        table.insert(id, values)?;
    }
    Ok(table)
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn io_from_csv(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

pub fn label_cell(label: Label) -> String {
    match label {
        Label::Binary(b) => if b { "1" } else { "0" }.to_owned(),
        Label::Continuous(v) => v.to_string(),
    }
}

pub fn write_mixture_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header: Vec<String> = (1..=dataset.arity()).map(|i| format!("constituent_{i}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(|e| io_from_csv(path, e))?;
    for (key, label) in dataset.records() {
        let mut row: Vec<String> = key.local_ids().map(str::to_owned).collect();
        row.push(label_cell(*label));
        w.write_record(&row).map_err(|e| io_from_csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_descriptor_csv(table: &DescriptorTable, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["id".to_owned()];
    header.extend((0..table.length()).map(|i| format!("f_{i}")));
    w.write_record(&header).map_err(|e| io_from_csv(path, e))?;
    for (id, v) in table.iter() {
        let mut row = vec![id.to_owned()];
        row.extend(v.iter().map(f64::to_string));
        w.write_record(&row).map_err(|e| io_from_csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rows of `key,fold,role,stratum`; training rows have an empty stratum.
pub fn write_split_csv<W: Write>(folds: &[FoldSplit], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["key", "fold", "role", "stratum"])?;
    for split in folds {
        let fold = split.fold_index.to_string();
        for key in &split.training {
            w.write_record([key.to_string().as_str(), &fold, "training", ""])?;
        }
        for (stratum, keys) in &split.strata {
            let s = stratum.to_string();
            for key in keys {
                w.write_record([key.to_string().as_str(), &fold, "validation", &s])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
