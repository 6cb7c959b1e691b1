//! JSON form files: a metadata header plus cochain values, either inline or as
//! base64 little-endian `f64`, in the grid's site-major cell order.

use std::path::Path;
use std::sync::Arc;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::form::DiscreteForm;
use super::torus::TorusGrid;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
/// Forms with at most this many values are written inline.
pub const INLINE_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Inline,
    Base64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Payload {
    Inline(Vec<f64>),
    Base64(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormFile {
    version: u32,
    n: usize,
    degree: usize,
    dims: Vec<usize>,
    lengths: Vec<f64>,
    encoding: Encoding,
    values: Payload,
}

pub fn default_encoding(len: usize) -> Encoding {
    if len <= INLINE_LIMIT {
        Encoding::Inline
    } else {
        Encoding::Base64
    }
}

pub fn to_json(form: &DiscreteForm, encoding: Encoding) -> String {
    let values = match encoding {
        Encoding::Inline => Payload::Inline(form.values().to_vec()),
        Encoding::Base64 => {
            let bytes: Vec<u8> = form.values().iter().flat_map(|v| v.to_le_bytes()).collect();
            Payload::Base64(STANDARD.encode(bytes))
        }
    };
    let file = FormFile {
        version: FORMAT_VERSION,
        n: form.grid().n(),
        degree: form.degree(),
        dims: form.grid().dims().to_vec(),
        lengths: form.grid().lengths().to_vec(),
        encoding,
        values,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("form file serializes");
    s.push('\n');
    s
}

/// Parses a form file; the returned grid is freshly constructed.
pub fn from_json(text: &str) -> Result<DiscreteForm> {
    let file: FormFile = serde_json::from_str(text)?;
    if file.version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {}", file.version)));
    }
    if file.n != file.dims.len() {
        return Err(Error::Format(format!(
            "header n = {} but {} cell counts",
            file.n,
            file.dims.len()
        )));
    }
    let values = match (file.encoding, file.values) {
        (Encoding::Inline, Payload::Inline(v)) => v,
        (Encoding::Base64, Payload::Base64(s)) => {
            let bytes = STANDARD
                .decode(s.as_bytes())
                .map_err(|e| Error::Format(format!("base64 payload: {e}")))?;
            if bytes.len() % 8 != 0 {
                return Err(Error::Format(format!(
                    "payload of {} bytes is not a multiple of 8",
                    bytes.len()
                )));
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect()
        }
        (enc, _) => return Err(Error::Format(format!("payload does not match encoding {enc:?}"))),
    };
    let grid = Arc::new(TorusGrid::new(file.dims, file.lengths)?);
    DiscreteForm::from_values(grid, file.degree, values)
}

pub fn write_form(path: &Path, form: &DiscreteForm) -> Result<()> {
    let enc = default_encoding(form.values().len());
    std::fs::write(path, to_json(form, enc))?;
    Ok(())
}

pub fn read_form(path: &Path) -> Result<DiscreteForm> {
    from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inline_and_base64() {
        let g = Arc::new(TorusGrid::new(vec![4], vec![1.0]).unwrap());
        let f = DiscreteForm::from_values(g, 0, vec![0.0, 0.1, -2.5, 1e-300]).unwrap();
        let text = to_json(&f, Encoding::Inline);
        assert!(text.contains("\"encoding\": \"inline\""));
        assert_eq!(from_json(&text).unwrap(), f);
        let b = to_json(&f, Encoding::Base64);
        assert!(b.contains("\"encoding\": \"base64\""));
        assert_eq!(from_json(&b).unwrap(), f);
    }

    #[test]
    fn rejects_mismatched_headers() {
        let bad = r#"{"version":1,"n":2,"degree":0,"dims":[4],"lengths":[1.0],"encoding":"inline","values":[0,0,0,0]}"#;
        assert!(from_json(bad).is_err());
        let short = r#"{"version":1,"n":1,"degree":0,"dims":[4],"lengths":[1.0],"encoding":"inline","values":[0,0,0]}"#;
        assert!(from_json(short).is_err());
        let wrong =
            r#"{"version":1,"n":1,"degree":0,"dims":[4],"lengths":[1.0],"encoding":"base64","values":[0,0,0,0]}"#;
        assert!(from_json(wrong).is_err());
    }

    proptest! {
        #[test]
        fn rewrite_is_byte_identical(seed in any::<u64>(), n0 in 2usize..6, n1 in 2usize..6, degree in 0usize..=2, base64 in any::<bool>()) {
            let g = Arc::new(TorusGrid::new(vec![n0, n1], vec![1.0, 0.3]).unwrap());
            let f = DiscreteForm::random(g, degree, seed);
            let enc = if base64 { Encoding::Base64 } else { Encoding::Inline };
            let first = to_json(&f, enc);
            let back = from_json(&first).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(to_json(&back, enc), first);
        }
    }
}
