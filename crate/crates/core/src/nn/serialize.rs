//! Versioned binary model files.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic   8 bytes  "COOLNET\0"
//! version u32
//! hlen    u32      length of the JSON header
//! header  hlen     JSON-encoded NetSpec (widths, activations, head)
//! params  f64*     per layer: weights row-major [fan_in, fan_out], then bias
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, DenseLayer, NetSpec, Network};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"COOLNET\0";

pub fn write_network<W: Write>(net: &Network, mut w: W) -> std::io::Result<()> {
    let header = serde_json::to_vec(&net.spec()).expect("spec serializes");
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    for layer in &net.layers {
        for v in layer.weights.iter().chain(layer.bias.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn bytes(&mut self, n: usize, what: &str) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner.read_exact(&mut buf).map_err(|_| Error::Format {
            offset: self.offset,
            message: format!("truncated while reading {what}"),
        })?;
        self.offset += n as u64;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4, what)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let raw = self.bytes(n * 8, what)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

pub fn read_network<R: Read>(r: R) -> Result<Network> {
    let mut cur = Cursor { inner: r, offset: 0 };
    if cur.bytes(8, "magic")? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "not a model file (bad magic)".into(),
        });
    }
    let version = cur.u32("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format {
            offset: 8,
            message: format!("unsupported model format version {version}"),
        });
    }
    let hlen = cur.u32("header length")? as usize;
    let header_at = cur.offset;
    let spec: NetSpec = serde_json::from_slice(&cur.bytes(hlen, "header")?).map_err(|e| Error::Format {
        offset: header_at,
        message: format!("bad header: {e}"),
    })?;
    spec.validate()?;
    let widths = spec.widths();
    let n = widths.len() - 1;
    let mut layers = Vec::with_capacity(n);
    for (i, w) in widths.windows(2).enumerate() {
        let weights = cur.f64s(w[0] * w[1], "weights")?;
        let bias = cur.f64s(w[1], "bias")?;
        let activation = if i + 1 == n { Activation::Identity } else { spec.hidden_activation };
        layers.push(DenseLayer {
            weights: Array2::from_shape_vec((w[0], w[1]), weights).expect("sized"),
            bias: Array1::from(bias),
            activation,
        });
    }
    let mut trailing = [0u8; 1];
    if cur.inner.read(&mut trailing).map_err(|e| Error::io("<model>", e))? != 0 {
        return Err(Error::Format {
            offset: cur.offset,
            message: "trailing bytes after parameters".into(),
        });
    }
    let mut net = Network::from_layers(layers, spec.head, spec.num_classes)?;
    net.hidden_activation = spec.hidden_activation;
    Ok(net)
}

pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_network(net, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_network(BufReader::new(file))
}
