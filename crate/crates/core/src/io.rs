//! Line-oriented text formats for data and query files.
//!
//! A trailing newline does not start a new record. `\r\n` endings are
//! accepted for vectors and sets; string records keep every byte but `\n`.

use crate::error::{Error, Result};
use crate::hamming::BinaryVector;

fn lines(text: &[u8]) -> impl Iterator<Item = (usize, &[u8])> {
    let body = text.strip_suffix(b"\n").unwrap_or(text);
    let mut it = body.split(|&b| b == b'\n').enumerate();
    let empty = text.is_empty();
    std::iter::from_fn(move || if empty { None } else { it.next() }).map(|(i, l)| (i + 1, l))
}

fn utf8(line: usize, raw: &[u8]) -> Result<&str> {
    std::str::from_utf8(raw).map_err(|_| Error::Parse {
        line,
        message: "not valid UTF-8".into(),
    })
}

/// One vector per line, `0`/`1` characters or `0x` hex, all of one length.
pub fn parse_vectors(text: &[u8]) -> Result<Vec<BinaryVector>> {
    let mut out: Vec<BinaryVector> = Vec::new();
    for (line, raw) in lines(text) {
        let s = utf8(line, raw)?.trim();
        let v = BinaryVector::parse(s).map_err(|message| Error::Parse { line, message })?;
        if let Some(first) = out.first() {
            if first.d() != v.d() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} dimensions, got {}", first.d(), v.d()),
                });
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// Checks that every query has `d` dimensions.
pub fn check_dimensions(queries: &[BinaryVector], d: usize) -> Result<()> {
    match queries.iter().position(|q| q.d() != d) {
        Some(i) => Err(Error::Parse {
            line: i + 1,
            message: format!("expected {d} dimensions, got {}", queries[i].d()),
        }),
        None => Ok(()),
    }
}

/// One record per line, tokens separated by ASCII whitespace.
pub fn parse_sets(text: &[u8]) -> Vec<Vec<Vec<u8>>> {
    lines(text)
        .map(|(_, raw)| {
            raw.split(|b| b.is_ascii_whitespace())
                .filter(|t| !t.is_empty())
                .map(<[u8]>::to_vec)
                .collect()
        })
        .collect()
}

/// One string per line.
pub fn parse_strings(text: &[u8]) -> Vec<Vec<u8>> {
    lines(text).map(|(_, raw)| raw.to_vec()).collect()
}
