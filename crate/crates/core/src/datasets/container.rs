//! Directory layout: `manifest.txt` plus one `<split>.rec` file per split.
//! Each record is a volume block followed by a little-endian `u16` label.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{DatasetError, SampleSource};
use crate::sdf_field::{SignConvention, VolumeBlock};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const SPLITS: [&str; 3] = ["train", "val", "test"];
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub name: String,
    pub classes: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    pub dims: [usize; 3],
    pub channels: u8,
    pub sign: SignConvention,
    pub variant: String,
    /// `sha256:<hex>` over the per-split digests in `SPLITS` order.
    pub checksum: String,
}

impl DatasetManifest {
    pub fn count(&self, split: &str) -> usize {
        self.counts.get(split).copied().unwrap_or(0)
    }

    pub fn record_len(&self) -> usize {
        VolumeBlock {
            dims: self.dims,
            channels: self.channels,
            sign: self.sign,
            values: Vec::new(),
        }
        .byte_len()
            + 4 * self.dims.iter().product::<usize>() * self.channels as usize
            + 2
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("format={FORMAT_VERSION}\n"));
        s.push_str(&format!("name={}\n", self.name));
        s.push_str(&format!("variant={}\n", self.variant));
        s.push_str(&format!("classes={}\n", self.classes.join(",")));
        s.push_str(&format!("dims={}x{}x{}\n", self.dims[0], self.dims[1], self.dims[2]));
        s.push_str(&format!("channels={}\n", self.channels));
        s.push_str(&format!("sign={}\n", self.sign as u8));
        for split in SPLITS {
            s.push_str(&format!("count.{split}={}\n", self.count(split)));
        }
        s.push_str(&format!("checksum={}\n", self.checksum));
        s
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let mut kv = BTreeMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| DatasetError::Manifest(format!("line {line:?} is not key=value")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            kv.get(k)
                .cloned()
                .ok_or_else(|| DatasetError::Manifest(format!("missing key {k}")))
        };
        let num = |k: &str| -> Result<usize, DatasetError> {
            get(k)?
                .parse()
                .map_err(|_| DatasetError::Manifest(format!("{k} is not a number")))
        };
        if num("format")? != FORMAT_VERSION as usize {
            return Err(DatasetError::Manifest("unsupported format version".into()));
        }
        let dims_s = get("dims")?;
        let dims: Vec<usize> = dims_s
            .split('x')
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| DatasetError::Manifest(format!("bad dims {dims_s:?}")))?;
        if dims.len() != 3 {
            return Err(DatasetError::Manifest(format!("bad dims {dims_s:?}")));
        }
        let classes_s = get("classes")?;
        let classes = if classes_s.is_empty() {
            Vec::new()
        } else {
            classes_s.split(',').map(str::to_string).collect()
        };
        let mut counts = BTreeMap::new();
        for split in SPLITS {
            let c = num(&format!("count.{split}"))?;
            if c > 0 {
                counts.insert(split.to_string(), c);
            }
        }
        Ok(Self {
            name: get("name")?,
            classes,
            counts,
            dims: [dims[0], dims[1], dims[2]],
            channels: num("channels")? as u8,
            sign: SignConvention::try_from(num("sign")? as u8)?,
            variant: get("variant")?,
            checksum: get("checksum")?,
        })
    }
}

fn split_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}.rec"))
}

fn check_split(split: &str) -> Result<(), DatasetError> {
    if SPLITS.contains(&split) {
        Ok(())
    } else {
        Err(DatasetError::UnknownSplit(split.to_string()))
    }
}

fn combine_digests(per_split: &BTreeMap<String, [u8; 32]>) -> String {
    let mut h = Sha256::new();
    for split in SPLITS {
        if let Some(d) = per_split.get(split) {
            h.update(split.as_bytes());
            h.update(d);
        }
    }
    format!("sha256:{}", hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

struct SplitSink {
    out: BufWriter<File>,
    hash: Sha256,
    count: usize,
}

/// Streams records into a dataset directory in call order.
pub struct DatasetWriter {
    dir: PathBuf,
    name: String,
    classes: Vec<String>,
    variant: String,
    dims: [usize; 3],
    channels: u8,
    sign: SignConvention,
    sinks: BTreeMap<String, SplitSink>,
}

impl DatasetWriter {
    pub fn create(
        dir: &Path,
        name: &str,
        classes: Vec<String>,
        variant: &str,
        dims: [usize; 3],
        channels: u8,
        sign: SignConvention,
    ) -> Result<Self, DatasetError> {
        std::fs::create_dir_all(dir)?;
        for split in SPLITS {
            let p = split_path(dir, split);
            if p.exists() {
                std::fs::remove_file(p)?;
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            name: name.to_string(),
            classes,
            variant: variant.to_string(),
            dims,
            channels,
            sign,
            sinks: BTreeMap::new(),
        })
    }

    pub fn append(&mut self, split: &str, block: &VolumeBlock, label: u16) -> Result<(), DatasetError> {
        check_split(split)?;
        if block.dims != self.dims || block.channels != self.channels || block.sign != self.sign {
            return Err(DatasetError::Shape(format!(
                "record {:?}x{} ({:?}) does not match dataset {:?}x{} ({:?})",
                block.dims, block.channels, block.sign, self.dims, self.channels, self.sign
            )));
        }
        if label as usize >= self.classes.len() {
            return Err(DatasetError::LabelOutOfRange {
                label,
                classes: self.classes.len(),
            });
        }
        if !self.sinks.contains_key(split) {
            let f = File::create(split_path(&self.dir, split))?;
            self.sinks.insert(
                split.to_string(),
                SplitSink {
                    out: BufWriter::new(f),
                    hash: Sha256::new(),
                    count: 0,
                },
            );
        }
        let sink = self.sinks.get_mut(split).expect("inserted above");
        let mut bytes = block.to_bytes()?;
        bytes.extend_from_slice(&label.to_le_bytes());
        sink.out.write_all(&bytes)?;
        sink.hash.update(&bytes);
        sink.count += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<DatasetManifest, DatasetError> {
        let mut digests = BTreeMap::new();
        let mut counts = BTreeMap::new();
        for (split, mut sink) in self.sinks {
            sink.out.flush()?;
            digests.insert(split.clone(), sink.hash.finalize().into());
            counts.insert(split, sink.count);
        }
        let manifest = DatasetManifest {
            name: self.name,
            classes: self.classes,
            counts,
            dims: self.dims,
            channels: self.channels,
            sign: self.sign,
            variant: self.variant,
            checksum: combine_digests(&digests),
        };
        std::fs::write(self.dir.join(MANIFEST_FILE), manifest.to_text())?;
        Ok(manifest)
    }
}

pub struct DatasetReader {
    dir: PathBuf,
    manifest: DatasetManifest,
}

impl DatasetReader {
    pub fn open(dir: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let manifest = DatasetManifest::parse(&text)?;
        for (split, &n) in &manifest.counts {
            let len = std::fs::metadata(split_path(dir, split))?.len() as usize;
            if len != n * manifest.record_len() {
                return Err(DatasetError::CountMismatch(format!(
                    "{split}.rec holds {len} bytes, expected {n} records of {}",
                    manifest.record_len()
                )));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    /// Recomputes the content checksum from the record files.
    pub fn verify(&self) -> Result<(), DatasetError> {
        let mut digests = BTreeMap::new();
        for split in self.manifest.counts.keys() {
            let mut f = BufReader::new(File::open(split_path(&self.dir, split))?);
            let mut h = Sha256::new();
            loop {
                let buf = f.fill_buf()?;
                if buf.is_empty() {
                    break;
                }
                h.update(buf);
                let n = buf.len();
                f.consume(n);
            }
            digests.insert(split.clone(), h.finalize().into());
        }
        let found = combine_digests(&digests);
        if found != self.manifest.checksum {
            return Err(DatasetError::Checksum {
                expected: self.manifest.checksum.clone(),
                found,
            });
        }
        Ok(())
    }

    pub fn split(&self, split: &str) -> Result<SplitReader, DatasetError> {
        check_split(split)?;
        let len = self.manifest.count(split);
        let file = if len > 0 {
            Some(Mutex::new(File::open(split_path(&self.dir, split))?))
        } else {
            None
        };
        Ok(SplitReader {
            manifest: self.manifest.clone(),
            len,
            file,
        })
    }

    /// Reads a whole split into memory.
    pub fn read_all(&self, split: &str) -> Result<Vec<(VolumeBlock, u16)>, DatasetError> {
        let r = self.split(split)?;
        (0..r.len()).map(|i| r.record(i)).collect()
    }
}

/// Random access to the fixed-size records of one split.
pub struct SplitReader {
    manifest: DatasetManifest,
    len: usize,
    file: Option<Mutex<File>>,
}

impl SplitReader {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn record(&self, i: usize) -> Result<(VolumeBlock, u16), DatasetError> {
        if i >= self.len {
            return Err(DatasetError::CountMismatch(format!("record {i} of {}", self.len)));
        }
        let stride = self.manifest.record_len();
        let mut buf = vec![0u8; stride];
        {
            let mut f = self.file.as_ref().expect("non-empty split").lock().expect("reader poisoned");
            f.seek(SeekFrom::Start((i * stride) as u64))?;
            f.read_exact(&mut buf)?;
        }
        let mut cur = &buf[..stride - 2];
        let block = VolumeBlock::read_from(&mut cur)?;
        let label = u16::from_le_bytes([buf[stride - 2], buf[stride - 1]]);
        Ok((block, label))
    }
}

impl SampleSource for SplitReader {
    fn len(&self) -> usize {
        self.len
    }

    fn dims(&self) -> [usize; 3] {
        self.manifest.dims
    }

    fn channels(&self) -> usize {
        self.manifest.channels as usize
    }

    fn num_classes(&self) -> usize {
        self.manifest.classes.len()
    }

    fn fetch(&self, i: usize, out: &mut [f32]) -> Result<u16, DatasetError> {
        let (block, label) = self.record(i)?;
        out.copy_from_slice(&block.values);
        Ok(label)
    }
}
