//! Binary checkpoint layout (all integers little-endian):
//!
//! ```text
//! magic    8 bytes  "GSGINET\0"
//! version  u32      1
//! spec_len u32      length of the JSON spec descriptor
//! spec     spec_len bytes of UTF-8 JSON (NetworkSpec)
//! count    u64      number of parameters
//! params   count x f32
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::network::QNetwork;
use super::spec::NetworkSpec;
use crate::error::{GsgiError, Result};

const MAGIC: &[u8; 8] = b"GSGINET\0";
const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(net: &QNetwork, mut w: W) -> Result<()> {
    let spec = serde_json::to_vec(net.spec())?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(spec.len() as u32).to_le_bytes())?;
    w.write_all(&spec)?;
    w.write_all(&(net.num_params() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(net.num_params() * 4);
    for p in net.params() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<QNetwork> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(GsgiError::Checkpoint("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(GsgiError::Checkpoint(format!("unsupported version {version}")));
    }
    r.read_exact(&mut u32buf)?;
    let mut spec = vec![0u8; u32::from_le_bytes(u32buf) as usize];
    r.read_exact(&mut spec)?;
    let spec: NetworkSpec = serde_json::from_slice(&spec).map_err(|e| GsgiError::Checkpoint(e.to_string()))?;
    let mut net = QNetwork::zeros(spec).map_err(|e| GsgiError::Checkpoint(e.to_string()))?;
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)?;
    let count = u64::from_le_bytes(u64buf) as usize;
    if count != net.num_params() {
        return Err(GsgiError::Checkpoint(format!(
            "spec implies {} parameters, file has {count}",
            net.num_params()
        )));
    }
    let mut raw = vec![0u8; count * 4];
    r.read_exact(&mut raw)?;
    for (p, b) in net.params_mut().iter_mut().zip(raw.chunks_exact(4)) {
        *p = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
    }
    Ok(net)
}

pub fn save_checkpoint(net: &QNetwork, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_checkpoint(net, std::io::BufWriter::new(f))
}

pub fn load_checkpoint(path: &Path) -> Result<QNetwork> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}
