//! Model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      4 bytes  "FSNM"
//! version    u32      1
//! header_len u64      length of the JSON header
//! header     JSON     {"spec": NetworkSpec, "init_seed": u64}
//! count      u64      number of parameters
//! params     count x f64 (IEEE-754 bits, little-endian)
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NetworkModel, NetworkSpec, NnError};

const MAGIC: &[u8; 4] = b"FSNM";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    spec: NetworkSpec,
    init_seed: u64,
}

pub fn write_checkpoint<W: Write>(model: &NetworkModel, mut out: W) -> Result<(), NnError> {
    let header = serde_json::to_vec(&Header {
        spec: model.spec.clone(),
        init_seed: model.init_seed,
    })
    .map_err(|e| NnError::Checkpoint(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(header.len() as u64).to_le_bytes())?;
    out.write_all(&header)?;
    out.write_all(&(model.params.len() as u64).to_le_bytes())?;
    for p in &model.params {
        out.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NnError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<NetworkModel, NnError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint("not a model checkpoint".into()));
    }
    let mut version = [0u8; 4];
    input.read_exact(&mut version)?;
    let version = u32::from_le_bytes(version);
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let header_len = read_u64(&mut input)?;
    let mut header = Vec::new();
    input.by_ref().take(header_len).read_to_end(&mut header)?;
    if header.len() as u64 != header_len {
        return Err(NnError::Checkpoint(format!(
            "header truncated: {} of {header_len} bytes",
            header.len()
        )));
    }
    let header: Header =
        serde_json::from_slice(&header).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    let count = read_u64(&mut input)? as usize;
    let expected = header.spec.param_count();
    if count != expected {
        return Err(NnError::ParamCount { expected, got: count });
    }
    let mut params = Vec::with_capacity(count.min(1 << 20));
    let mut b = [0u8; 8];
    for _ in 0..count {
        input.read_exact(&mut b)?;
        params.push(f64::from_le_bytes(b));
    }
    let model = NetworkModel {
        spec: header.spec,
        params,
        init_seed: header.init_seed,
    };
    model.check()?;
    Ok(model)
}

pub fn save_checkpoint(model: &NetworkModel, path: &Path) -> Result<(), NnError> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkModel, NnError> {
    read_checkpoint(fs::File::open(path)?)
}
