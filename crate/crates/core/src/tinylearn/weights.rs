//! Flat binary weight files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic      4 bytes  "TLMP"
//! version    u32      1
//! n_widths   u32
//! widths     n_widths × u32      [input, hidden.., classes]
//! activation u8       0 = relu, 1 = tanh
//! then for each layer in order:
//!   weights  out × in × f64 (row-major)
//!   bias     out × f64
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::mlp::{Activation, Dense, Mlp};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TLMP";
pub const VERSION: u32 = 1;

pub fn write_weights<W: Write>(model: &Mlp, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let widths = model.layer_widths();
    w.write_all(&(widths.len() as u32).to_le_bytes())?;
    for width in widths {
        w.write_all(&(width as u32).to_le_bytes())?;
    }
    w.write_all(&[model.activation().code()])?;
    for layer in model.layers() {
        for v in layer.weights.iter().chain(&layer.bias) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn read_weights<R: Read>(mut r: R) -> Result<Mlp> {
    let truncated = |e: std::io::Error| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::InvalidModelFile("truncated file".into())
        } else {
            Error::Io(e)
        }
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::InvalidModelFile("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::InvalidModelFile(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    if !(3..=64).contains(&n) {
        return Err(Error::InvalidModelFile(format!("implausible layer count {n}")));
    }
    let widths = (0..n)
        .map(|_| read_u32(&mut r).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    if widths.iter().any(|&w| w == 0 || w > 1 << 20) {
        return Err(Error::InvalidModelFile("implausible layer width".into()));
    }
    let mut code = [0u8; 1];
    r.read_exact(&mut code)?;
    let activation = Activation::from_code(code[0])
        .ok_or_else(|| Error::InvalidModelFile(format!("unknown activation code {}", code[0])))?;
    let mut layers = Vec::with_capacity(n - 1);
    for pair in widths.windows(2) {
        let (in_dim, out_dim) = (pair[0], pair[1]);
        let weights = read_f64s(&mut r, in_dim * out_dim).map_err(|e| match e {
            Error::Io(io) => truncated(io),
            other => other,
        })?;
        let bias = read_f64s(&mut r, out_dim).map_err(|e| match e {
            Error::Io(io) => truncated(io),
            other => other,
        })?;
        layers.push(Dense {
            in_dim,
            out_dim,
            weights,
            bias,
        });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::InvalidModelFile("trailing bytes".into()));
    }
    Mlp::from_layers(activation, layers)
}

pub fn save(model: &Mlp, path: &Path) -> Result<()> {
    write_weights(model, BufWriter::new(File::create(path)?))
}

pub fn load(path: &Path) -> Result<Mlp> {
    read_weights(BufReader::new(File::open(path)?))
}
