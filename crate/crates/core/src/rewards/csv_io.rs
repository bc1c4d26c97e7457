//! `variant,fitness` CSV ingestion and emission.
//!
//! One row per variant; `#` lines are comments; a header row is optional and
//! skipped when its fitness field is not numeric.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::TableLandscape;
use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// Where the variant residues live in the full sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LandscapeSchema {
    pub site_positions: Vec<usize>,
    pub wild_type: Sequence,
}

#[derive(Clone, Debug)]
pub struct LoadedLandscape {
    pub landscape: TableLandscape,
    pub rows: usize,
}

pub fn load_landscape_csv(
    path: impl AsRef<Path>,
    schema: &LandscapeSchema,
    alphabet: &Alphabet,
) -> Result<LoadedLandscape> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_landscape_csv(file, schema, alphabet)
}

pub fn parse_landscape_csv<R: Read>(
    mut reader: R,
    schema: &LandscapeSchema,
    alphabet: &Alphabet,
) -> Result<LoadedLandscape> {
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<landscape csv>", e))?;
    // 1-based line of a record; blank lines confuse the reader's own count
    let newlines: Vec<usize> = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .map(|(i, _)| i)
        .collect();
    let line_of = |pos: Option<&csv::Position>| {
        pos.map_or(0, |p| {
            let mut end = (p.byte() as usize).min(bytes.len());
            while end < bytes.len() && matches!(bytes[end], b'\n' | b'\r') {
                end += 1;
            }
            1 + newlines.partition_point(|&i| i < end)
        })
    };
    let mut landscape = TableLandscape::new(
        schema.site_positions.clone(),
        schema.wild_type.clone(),
        alphabet.size(),
    )?;
    let arity = schema.site_positions.len();
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());

    let mut rows = 0;
    let mut first = true;
    for record in csv.records() {
        let record = record.map_err(|e| Error::Parse {
            line: line_of(e.position()),
            message: e.to_string(),
        })?;
        let line = line_of(record.position());
        let is_first = std::mem::replace(&mut first, false);
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields `variant,fitness`, found {}", record.len()),
            });
        }
        let (variant, fitness) = (&record[0], &record[1]);
        let fitness: f64 = match fitness.parse() {
            Ok(v) => v,
            Err(_) if is_first => continue,
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    message: format!("fitness `{fitness}` is not a number"),
                })
            }
        };
        if !fitness.is_finite() {
            return Err(Error::Parse {
                line,
                message: "fitness must be finite".into(),
            });
        }
        let residues = alphabet.encode(variant).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if residues.len() != arity {
            return Err(Error::Parse {
                line,
                message: format!("variant `{variant}` has {} residues, expected {arity}", residues.len()),
            });
        }
        if !landscape.insert(&residues, fitness)? {
            return Err(Error::DuplicateVariant {
                variant: variant.to_string(),
                line,
            });
        }
        rows += 1;
    }
    Ok(LoadedLandscape { landscape, rows })
}

/// Writes a `variant,fitness` header and one row per table entry in key order.
pub fn write_landscape_csv<W: Write>(
    landscape: &TableLandscape,
    alphabet: &Alphabet,
    writer: W,
) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let wrap = |e: csv::Error| Error::input(format!("csv write failed: {e}"));
    csv.write_record(["variant", "fitness"]).map_err(wrap)?;
    for (residues, fitness) in landscape.entries() {
        csv.write_record([alphabet.decode(&residues), format!("{fitness}")])
            .map_err(wrap)?;
    }
    csv.flush()
        .map_err(|e| Error::input(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema(alphabet: &Alphabet) -> LandscapeSchema {
        LandscapeSchema {
            site_positions: vec![0, 1, 2, 3],
            wild_type: Sequence::parse("AVST", alphabet).unwrap(),
        }
    }

    #[test]
    fn single_row() {
        let a = Alphabet::amino_acids();
        let loaded = parse_landscape_csv("AVST,3.2\n".as_bytes(), &schema(&a), &a).unwrap();
        assert_eq!(loaded.rows, 1);
        let key: Vec<usize> = "AVST".chars().map(|c| a.index(c).unwrap()).collect();
        assert_eq!(loaded.landscape.get(&key), Some(3.2));
    }

    #[test]
    fn header_and_comments_are_skipped() {
        let a = Alphabet::amino_acids();
        let text = "# generated\nvariant,fitness\nAVST,1\n# mid comment\nCVST,-0.5\n";
        let loaded = parse_landscape_csv(text.as_bytes(), &schema(&a), &a).unwrap();
        assert_eq!(loaded.rows, 2);
    }

    #[test]
    fn duplicate_rows_are_rejected() {
        let a = Alphabet::amino_acids();
        let err = parse_landscape_csv("AVST,1\nAVST,2\n".as_bytes(), &schema(&a), &a).unwrap_err();
        assert!(matches!(err, Error::DuplicateVariant { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let a = Alphabet::amino_acids();
        let s = schema(&a);
        let cases = [
            ("AVST,1\nAVS,2\n", 2),
            ("AVST,1\nCVST,abc\n", 2),
            ("AVST,1\nCVST\n", 2),
            ("AVST,1\n\nCVST,1,2\n", 3),
            ("AVST,1\nBVST,1\n", 2),
        ];
        for (text, line) in cases {
            match parse_landscape_csv(text.as_bytes(), &s, &a) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn write_then_read_preserves_entries() {
        let a = Alphabet::amino_acids();
        let s = schema(&a);
        let text = "AVST,1.25\nWWWW,-3\nAAAA,0\n";
        let land = parse_landscape_csv(text.as_bytes(), &s, &a).unwrap().landscape;
        let mut buf = Vec::new();
        write_landscape_csv(&land, &a, &mut buf).unwrap();
        let back = parse_landscape_csv(buf.as_slice(), &s, &a).unwrap();
        assert_eq!(back.rows, 3);
        assert_eq!(back.landscape.entries(), land.entries());
    }
}
