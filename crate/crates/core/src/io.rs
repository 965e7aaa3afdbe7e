//! Readers and writers for context files.
//!
//! * Burmeister `.cxt`: `B`, blank, object count, attribute count, blank,
//!   object names, attribute names, then one `X`/`.` row per object.
//! * CSV: header row of attribute names (first cell ignored), first column
//!   object names, cells `1`/`0`.
//! * FIMI: one transaction per line of space-separated item numbers. Items
//!   become attributes named by their number in ascending numeric order;
//!   objects are named `g0..g{n-1}`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::context::FormalContext;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Cxt,
    Csv,
    Fimi,
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "cxt" => Some(Format::Cxt),
            "csv" => Some(Format::Csv),
            "dat" | "fimi" | "txt" => Some(Format::Fimi),
            _ => None,
        }
    }

    /// Guesses the format from file contents.
    pub fn sniff(text: &str) -> Format {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("B") => Format::Cxt,
            Some(first) if first.contains(',') => Format::Csv,
            _ => Format::Fimi,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cxt" => Ok(Format::Cxt),
            "csv" => Ok(Format::Csv),
            "fimi" => Ok(Format::Fimi),
            other => Err(format!("unknown context format `{other}`")),
        }
    }
}

pub fn parse(text: &str, format: Format) -> Result<FormalContext> {
    match format {
        Format::Cxt => parse_cxt(text),
        Format::Csv => parse_csv(text),
        Format::Fimi => parse_fimi(text),
    }
}

pub fn read_path(path: &std::path::Path) -> Result<FormalContext> {
    let text = std::fs::read_to_string(path)?;
    let format = Format::from_path(path).unwrap_or_else(|| Format::sniff(&text));
    parse(&text, format)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok((i + 1, line.strip_suffix('\r').unwrap_or(line)))
            }
            None => Err(Error::parse(self.last + 1, 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn count(&mut self, what: &str) -> Result<usize> {
        let (line, text) = self.next(what)?;
        text.trim()
            .parse()
            .map_err(|_| Error::parse(line, 1, format!("expected {what}, found `{text}`")))
    }

    fn blank(&mut self) -> Result<()> {
        let (line, text) = self.next("a blank line")?;
        if text.trim().is_empty() {
            Ok(())
        } else {
            Err(Error::parse(line, 1, format!("expected a blank line, found `{text}`")))
        }
    }
}

pub fn parse_cxt(text: &str) -> Result<FormalContext> {
    let mut lines = Lines::new(text);
    let (line, header) = lines.next("`B`")?;
    if header.trim() != "B" {
        return Err(Error::parse(line, 1, format!("expected `B`, found `{header}`")));
    }
    lines.blank()?;
    let num_objects = lines.count("the object count")?;
    let num_attributes = lines.count("the attribute count")?;
    lines.blank()?;
    let mut object_names = Vec::with_capacity(num_objects);
    for _ in 0..num_objects {
        object_names.push(lines.next("an object name")?.1.to_owned());
    }
    let mut attribute_names = Vec::with_capacity(num_attributes);
    for _ in 0..num_attributes {
        attribute_names.push(lines.next("an attribute name")?.1.to_owned());
    }
    let mut rows = Vec::with_capacity(num_objects);
    for _ in 0..num_objects {
        let (line, text) = lines.next("an incidence row")?;
        let mut row = BitSet::empty(num_attributes);
        let mut seen = 0;
        for (col, c) in text.chars().enumerate() {
            if col >= num_attributes {
                return Err(Error::parse(
                    line,
                    col + 1,
                    format!("row is longer than {num_attributes} attributes"),
                ));
            }
            match c {
                'X' | 'x' => {
                    row.insert(col);
                }
                '.' => {}
                other => {
                    return Err(Error::parse(line, col + 1, format!("unexpected character `{other}`")))
                }
            }
            seen += 1;
        }
        if seen != num_attributes {
            return Err(Error::parse(
                line,
                seen + 1,
                format!("row has {seen} cells, expected {num_attributes}"),
            ));
        }
        rows.push(row);
    }
    FormalContext::new(object_names, attribute_names, rows)
}

/// Writes the canonical Burmeister form with LF line endings.
pub fn write_cxt(ctx: &FormalContext) -> String {
    let mut out = String::new();
    let _ = write!(out, "B\n\n{}\n{}\n\n", ctx.num_objects(), ctx.num_attributes());
    for name in ctx.object_names().iter().chain(ctx.attribute_names()) {
        out.push_str(name);
        out.push('\n');
    }
    for row in ctx.rows() {
        out.push_str(&row.to_cross_row());
        out.push('\n');
    }
    out
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    Error::parse(line, 1, err.to_string())
}

pub fn parse_csv(text: &str) -> Result<FormalContext> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_error)?.clone();
    if headers.is_empty() {
        return Err(Error::parse(1, 1, "missing header row"));
    }
    let attribute_names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    let width = attribute_names.len();
    let mut object_names = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut fields = record.iter();
        let name = fields.next().unwrap_or_default();
        let mut row = BitSet::empty(width);
        for (col, cell) in fields.enumerate() {
            match cell {
                "1" => {
                    row.insert(col);
                }
                "0" => {}
                other => {
                    return Err(Error::parse(line, col + 2, format!("expected `1` or `0`, found `{other}`")))
                }
            }
        }
        object_names.push(name.to_owned());
        rows.push(row);
    }
    FormalContext::new(object_names, attribute_names, rows)
}

pub fn write_csv(ctx: &FormalContext) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("").chain(ctx.attribute_names().iter().map(String::as_str));
    writer.write_record(header).map_err(csv_error)?;
    for (name, row) in ctx.object_names().iter().zip(ctx.rows()) {
        let cells = (0..ctx.num_attributes()).map(|i| if row.contains(i) { "1" } else { "0" });
        writer
            .write_record(std::iter::once(name.as_str()).chain(cells))
            .map_err(csv_error)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_fimi(text: &str) -> Result<FormalContext> {
    let mut transactions = Vec::new();
    let mut items = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let mut transaction = Vec::new();
        let mut column = 1;
        for token in line.split(' ') {
            if !token.trim().is_empty() {
                let item: u64 = token.trim().parse().map_err(|_| {
                    Error::parse(i + 1, column, format!("expected an item number, found `{token}`"))
                })?;
                items.insert(item);
                transaction.push(item);
            }
            column += token.len() + 1;
        }
        transactions.push(transaction);
    }
    let items: Vec<u64> = items.into_iter().collect();
    let width = items.len();
    let rows = transactions
        .iter()
        .map(|t| {
            BitSet::from_indices(
                width,
                t.iter().map(|item| items.binary_search(item).expect("item was collected")),
            )
        })
        .collect();
    FormalContext::new(
        (0..transactions.len()).map(|i| format!("g{i}")).collect(),
        items.iter().map(u64::to_string).collect(),
        rows,
    )
}
