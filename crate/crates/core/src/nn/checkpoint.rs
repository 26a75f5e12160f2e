//! Binary checkpoint container.
//!
//! Layout (little-endian): magic `VXCK`, `u16` version, `u32`-prefixed UTF-8
//! descriptor (architecture text followed by `meta key=value` lines), `u32`
//! tensor count, then per tensor a `u16`-prefixed name, `u8` rank, `u32`
//! dims and the `f32` values.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use super::{ArchSpec, Network, NnError, Scalar, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"VXCK";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheckpoint {
    pub arch: ArchSpec,
    pub metadata: BTreeMap<String, String>,
    pub tensors: Vec<(String, Tensor<f32>)>,
}

impl ModelCheckpoint {
    pub fn from_network<T: Scalar>(net: &Network<T>, metadata: BTreeMap<String, String>) -> Self {
        let tensors = net
            .named_tensors()
            .into_iter()
            .map(|(n, t)| {
                let vals = t.data().iter().map(|v| v.as_f32()).collect();
                (n, Tensor::from_vec(t.shape(), vals).expect("same shape"))
            })
            .collect();
        Self {
            arch: net.spec().clone(),
            metadata,
            tensors,
        }
    }

    pub fn to_network(&self) -> Result<Network<f32>, NnError> {
        let mut net = Network::<f32>::uninitialized(self.arch.clone())?;
        let mut by_name: BTreeMap<&str, &Tensor<f32>> =
            self.tensors.iter().map(|(n, t)| (n.as_str(), t)).collect();
        for (name, dst) in net.named_tensors_mut() {
            let src = by_name
                .remove(name.as_str())
                .ok_or_else(|| NnError::Checkpoint(format!("missing tensor {name}")))?;
            if src.shape() != dst.shape() {
                return Err(NnError::Checkpoint(format!(
                    "tensor {name} has shape {:?}, expected {:?}",
                    src.shape(),
                    dst.shape()
                )));
            }
            dst.data_mut().copy_from_slice(src.data());
        }
        if let Some(extra) = by_name.keys().next() {
            return Err(NnError::Checkpoint(format!("unexpected tensor {extra}")));
        }
        Ok(net)
    }

    pub fn descriptor_text(&self) -> String {
        let mut s = self.arch.to_text();
        for (k, v) in &self.metadata {
            s.push_str(&format!("meta {k}={v}\n"));
        }
        s
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), NnError> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        let desc = self.descriptor_text();
        w.write_all(&(desc.len() as u32).to_le_bytes())?;
        w.write_all(desc.as_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in &self.tensors {
            w.write_all(&(name.len() as u16).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&[t.shape().len() as u8])?;
            for &d in t.shape() {
                w.write_all(&(d as u32).to_le_bytes())?;
            }
            let mut buf = Vec::with_capacity(t.len() * 4);
            for v in t.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, NnError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(NnError::Checkpoint("bad magic".into()));
        }
        let version = u16::from_le_bytes(read_array(&mut r)?);
        if version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!("unsupported version {version}")));
        }
        let desc_len = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut desc = vec![0u8; desc_len];
        r.read_exact(&mut desc)?;
        let desc = String::from_utf8(desc).map_err(|_| NnError::Checkpoint("descriptor not UTF-8".into()))?;
        let arch = ArchSpec::parse(&desc)?;
        let mut metadata = BTreeMap::new();
        for line in desc.lines() {
            if let Some(kv) = line.strip_prefix("meta ") {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| NnError::Checkpoint(format!("bad meta line {line:?}")))?;
                metadata.insert(k.to_string(), v.to_string());
            }
        }
        let count = u32::from_le_bytes(read_array(&mut r)?) as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = u16::from_le_bytes(read_array(&mut r)?) as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name).map_err(|_| NnError::Checkpoint("tensor name not UTF-8".into()))?;
            let [rank] = read_array::<1, _>(&mut r)?;
            let mut shape = Vec::with_capacity(rank as usize);
            for _ in 0..rank {
                shape.push(u32::from_le_bytes(read_array(&mut r)?) as usize);
            }
            let n: usize = shape.iter().product();
            let mut raw = vec![0u8; n * 4];
            r.read_exact(&mut raw)?;
            let vals = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            tensors.push((name, Tensor::from_vec(&shape, vals)?));
        }
        Ok(Self {
            arch,
            metadata,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], NnError> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerSpec, Mode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net() -> Network<f32> {
        let mut a = ArchSpec::new("tiny", &[1, 5, 5, 5]);
        a.push("c", LayerSpec::Conv { rank: 3, c_in: 1, c_out: 2, kernel: 3 })
            .push("bn", LayerSpec::BatchNorm { channels: 2 })
            .push("r", LayerSpec::Relu)
            .push("f", LayerSpec::Flatten)
            .push("fc", LayerSpec::Linear { d_in: 54, d_out: 4 });
        a.trunk_end = Some(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut n = Network::new(a, &mut rng).unwrap();
        // non-trivial running stats
        let x = Tensor::from_vec(&[2, 1, 5, 5, 5], (0..250).map(|i| (i as f32 * 0.37).sin()).collect()).unwrap();
        n.forward(&x, Mode::Train).unwrap();
        n
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut n = net();
        let mut meta = BTreeMap::new();
        meta.insert("seed".to_string(), "2".to_string());
        meta.insert("epochs".to_string(), "0".to_string());
        let ck = ModelCheckpoint::from_network(&n, meta);
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"VXCK");
        let back = ModelCheckpoint::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, ck);
        let mut m = back.to_network().unwrap();
        let x = Tensor::from_vec(&[1, 1, 5, 5, 5], (0..125).map(|i| (i as f32 * 0.11).cos()).collect()).unwrap();
        let a = n.forward(&x, Mode::Eval).unwrap();
        let b = m.forward(&x, Mode::Eval).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let err = ModelCheckpoint::read_from(&b"NOPE\x01\x00"[..]).unwrap_err();
        assert!(matches!(err, NnError::Checkpoint(_)));
    }

    #[test]
    fn truncated_file_is_an_io_error() {
        let ck = ModelCheckpoint::from_network(&net(), BTreeMap::new());
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(ModelCheckpoint::read_from(bytes.as_slice()), Err(NnError::Io(_))));
    }
}
