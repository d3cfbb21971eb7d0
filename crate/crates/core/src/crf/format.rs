//! `CRF1` model files.
//!
//! Little-endian layout:
//!
//! ```text
//! magic        4 bytes  "CRF1"
//! flags        u8       bit 0: forbid invalid BIO transitions
//! num_tags     u32      always 11
//! gazetteer    u32 count, then count strings
//! features     u32 count, then count strings (id order)
//! emission     f64 x (features * 11), row-major by feature
//! transition   f64 x 121, row-major by previous tag
//! start        f64 x 11
//! end          f64 x 11
//! ```
//!
//! A string is a `u32` byte length followed by UTF-8 bytes. Weights are
//! always written as `f64`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::corpus::NUM_TAGS;
use crate::num::Float;

use super::features::{FeatureExtractor, FeatureVocab, Gazetteer};
use super::{CrfError, CrfModel};

pub const MODEL_MAGIC: &[u8; 4] = b"CRF1";

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_str<R: Read>(r: &mut R) -> Result<String, CrfError> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CrfError::Format(e.to_string()))
}

impl<F: Float> CrfModel<F> {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), CrfError> {
        w.write_all(MODEL_MAGIC)?;
        w.write_u8(u8::from(self.forbid_invalid_bio))?;
        w.write_u32::<LittleEndian>(NUM_TAGS as u32)?;
        let gaz = &self.extractor.gazetteer.entries;
        w.write_u32::<LittleEndian>(gaz.len() as u32)?;
        for g in gaz {
            write_str(&mut w, g)?;
        }
        w.write_u32::<LittleEndian>(self.vocab.len() as u32)?;
        for name in self.vocab.names() {
            write_str(&mut w, name)?;
        }
        for v in self.params() {
            w.write_f64::<LittleEndian>(v.to_f64_lossy())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, CrfError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MODEL_MAGIC {
            return Err(CrfError::Format(format!("bad magic {magic:?}")));
        }
        let flags = r.read_u8()?;
        if flags > 1 {
            return Err(CrfError::Format(format!("unknown flags {flags:#x}")));
        }
        let num_tags = r.read_u32::<LittleEndian>()? as usize;
        if num_tags != NUM_TAGS {
            return Err(CrfError::Format(format!("expected {NUM_TAGS} tags, found {num_tags}")));
        }
        let n_gaz = r.read_u32::<LittleEndian>()? as usize;
        let entries = (0..n_gaz).map(|_| read_str(&mut r)).collect::<Result<Vec<_>, _>>()?;
        let n_feat = r.read_u32::<LittleEndian>()? as usize;
        let names = (0..n_feat).map(|_| read_str(&mut r)).collect::<Result<Vec<_>, _>>()?;
        let vocab = FeatureVocab::from_names(names, true)?;

        let mut model = CrfModel::zeros(FeatureExtractor::new(Gazetteer { entries }), vocab, flags == 1);
        for i in 0..model.num_params() {
            let v = r.read_f64::<LittleEndian>()?;
            if !v.is_finite() {
                return Err(CrfError::Format(format!("parameter {i} is not finite")));
            }
            model.set_param(i, F::from_f64_lossy(v));
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(CrfError::Format("trailing bytes after weights".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CrfError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CrfError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}
