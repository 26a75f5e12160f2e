use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::nn::{Mode, ModelCheckpoint, Network, Tensor};

use super::{InputTransform, ModelError};

pub const BUNDLE_FILE: &str = "bundle.txt";
const STAGE_FILES: [&str; 3] = ["stage1.vxck", "stage2.vxck", "stage3.vxck"];

/// The three trained stages. Stage 3 starts with the same trunk layers as
/// stage 2 and holds bit-identical copies of their tensors, so the trunk
/// output computed for stage 2 can be handed straight to stage 3.
#[derive(Clone, Debug)]
pub struct CascadeBundle {
    pub stage1: Network,
    pub stage2: Network,
    pub stage3: Network,
    /// Maps a stored sample to the stage-1 input.
    pub stage1_input: InputTransform,
    pub class_count: usize,
    pub variant: String,
    trunk_end: usize,
}

fn class_count(net: &Network) -> Result<usize, ModelError> {
    let out = net.spec().output_shape()?;
    match out.as_slice() {
        [c] => Ok(*c),
        _ => Err(ModelError::Bundle(format!("{} does not end in class logits", net.spec().name))),
    }
}

/// Copies stage 2's trunk tensors (parameters and batch-norm statistics)
/// into the identically named layers of stage 3.
pub fn copy_trunk(stage2: &Network, stage3: &mut Network) -> Result<(), ModelError> {
    let names = trunk_names(stage2)?;
    let src: BTreeMap<String, Vec<f32>> = stage2
        .named_tensors()
        .into_iter()
        .filter(|(n, _)| names.contains(n))
        .map(|(n, t)| (n, t.data().to_vec()))
        .collect();
    let mut copied = 0;
    for (n, t) in stage3.named_tensors_mut() {
        if let Some(v) = src.get(&n) {
            if t.len() != v.len() {
                return Err(ModelError::TrunkShapeMismatch(format!("{n} has a different size")));
            }
            t.data_mut().copy_from_slice(v);
            copied += 1;
        }
    }
    if copied != src.len() {
        return Err(ModelError::TrunkShapeMismatch("stage 3 lacks some trunk layers".into()));
    }
    Ok(())
}

/// SHA-256 over the names and little-endian bytes of every trunk tensor.
pub fn trunk_digest(net: &Network) -> String {
    let names = net.trunk_tensor_names();
    let mut h = Sha256::new();
    for (n, t) in net.named_tensors() {
        if names.contains(&n) {
            h.update(n.as_bytes());
            for v in t.data() {
                h.update(v.to_le_bytes());
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn trunk_names(net: &Network) -> Result<Vec<String>, ModelError> {
    if net.spec().trunk_end.is_none() {
        return Err(ModelError::TrunkShapeMismatch(format!("{} declares no trunk", net.spec().name)));
    }
    Ok(net.trunk_tensor_names())
}

impl CascadeBundle {
    pub fn new(
        stage1: Network,
        stage2: Network,
        stage3: Network,
        stage1_input: InputTransform,
        variant: &str,
    ) -> Result<Self, ModelError> {
        let k2 = stage2.spec().trunk_end;
        let k3 = stage3.spec().trunk_end;
        let trunk_end = match (k2, k3) {
            (Some(a), Some(b)) if a == b && stage2.spec().layers[..a] == stage3.spec().layers[..b] => a,
            _ => {
                return Err(ModelError::TrunkShapeMismatch(
                    "stage 2 and stage 3 do not share a trunk".into(),
                ))
            }
        };
        let classes = class_count(&stage1)?;
        if class_count(&stage2)? != classes || class_count(&stage3)? != classes {
            return Err(ModelError::Bundle("stages disagree on the class count".into()));
        }
        let bundle = Self {
            stage1,
            stage2,
            stage3,
            stage1_input,
            class_count: classes,
            variant: variant.to_string(),
            trunk_end,
        };
        if !bundle.trunk_is_shared() {
            return Err(ModelError::Bundle("stage 3 trunk tensors differ from stage 2".into()));
        }
        Ok(bundle)
    }

    pub fn trunk_end(&self) -> usize {
        self.trunk_end
    }

    /// True when every stage-3 trunk tensor is bit-identical to stage 2's.
    pub fn trunk_is_shared(&self) -> bool {
        let names = self.stage2.trunk_tensor_names();
        let get = |net: &Network| -> BTreeMap<String, Vec<u32>> {
            net.named_tensors()
                .into_iter()
                .filter(|(n, _)| names.contains(n))
                .map(|(n, t)| (n, t.data().iter().map(|v| v.to_bits()).collect()))
                .collect()
        };
        get(&self.stage2) == get(&self.stage3)
    }

    pub fn stage1_logits(&mut self, input: &Tensor) -> Result<Tensor, ModelError> {
        Ok(self.stage1.forward(input, Mode::Eval)?)
    }

    /// Shared conv trunk on a full-resolution batch.
    pub fn trunk(&mut self, input: &Tensor) -> Result<Tensor, ModelError> {
        Ok(self.stage2.forward_range(input, 0..self.trunk_end, Mode::Eval)?)
    }

    pub fn stage2_tail(&mut self, trunk: &Tensor) -> Result<Tensor, ModelError> {
        let n = self.stage2.num_layers();
        Ok(self.stage2.forward_range(trunk, self.trunk_end..n, Mode::Eval)?)
    }

    pub fn stage3_tail(&mut self, trunk: &Tensor) -> Result<Tensor, ModelError> {
        let n = self.stage3.num_layers();
        Ok(self.stage3.forward_range(trunk, self.trunk_end..n, Mode::Eval)?)
    }

    pub fn save(&self, dir: &Path) -> Result<(), ModelError> {
        std::fs::create_dir_all(dir).map_err(|e| ModelError::Bundle(e.to_string()))?;
        for (net, file) in [&self.stage1, &self.stage2, &self.stage3].into_iter().zip(STAGE_FILES) {
            let mut meta = BTreeMap::new();
            meta.insert("variant".to_string(), self.variant.clone());
            ModelCheckpoint::from_network(net, meta).save(&dir.join(file))?;
        }
        let text = format!(
            "variant={}\nclasses={}\nstage1_input={}\nstage1={}\nstage2={}\nstage3={}\n",
            self.variant,
            self.class_count,
            self.stage1_input.to_text(),
            STAGE_FILES[0],
            STAGE_FILES[1],
            STAGE_FILES[2]
        );
        std::fs::write(dir.join(BUNDLE_FILE), text).map_err(|e| ModelError::Bundle(e.to_string()))
    }

    pub fn load(dir: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(dir.join(BUNDLE_FILE))
            .map_err(|e| ModelError::Bundle(format!("{}: {e}", dir.join(BUNDLE_FILE).display())))?;
        let kv: BTreeMap<&str, &str> = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.trim(), v.trim()))
            .collect();
        let get = |k: &str| {
            kv.get(k)
                .copied()
                .ok_or_else(|| ModelError::Bundle(format!("{BUNDLE_FILE} lacks {k}")))
        };
        let load = |k: &str| -> Result<Network, ModelError> {
            Ok(ModelCheckpoint::load(&dir.join(get(k)?))?.to_network()?)
        };
        Self::new(
            load("stage1")?,
            load("stage2")?,
            load("stage3")?,
            InputTransform::parse(get("stage1_input")?)?,
            get("variant")?,
        )
    }
}
