use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use voxcade::datasets::{DatasetReader, SampleSource, SplitReader};
use voxcade::models::{
    build_fcnet_with_input, build_stage2, build_stage3, copy_trunk, evaluate_accuracy, train_stage, trunk_digest,
    InputTransform, MnistNet, TrainConfig, STAGE1_RESOLUTION,
};
use voxcade::nn::{ModelCheckpoint, Network};

use crate::config::write_resolved;
use crate::error::CliError;

pub const MODEL_FILE: &str = "model.vxck";

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    /// 1, 2, 3, mnist-fc1, mnist-fc2 or mnist-cnn.
    #[arg(long)]
    pub stage: String,
    /// Dataset directory.
    #[arg(long)]
    pub data: PathBuf,
    /// Trained stage-2 checkpoint; required for stage 3, whose copy of it stays frozen.
    #[arg(long)]
    pub trunk: Option<PathBuf>,
    /// Output directory for the checkpoint, history and resolved config.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub weight_decay: f64,
    /// Epochs between learning-rate drops; 0 keeps it constant.
    #[arg(long, default_value_t = 5)]
    pub lr_step: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr_gamma: f64,
    /// Split used for model selection when it is non-empty.
    #[arg(long, default_value = "val")]
    pub val_split: String,
    /// Split whose accuracy is reported after training, if any.
    #[arg(long)]
    pub test_split: Option<String>,
}

#[derive(Serialize)]
struct TrainSummary {
    stage: String,
    network: String,
    params: u64,
    input_transform: String,
    best_epoch: Option<usize>,
    final_train_acc: Option<f64>,
    best_val_acc: Option<f64>,
    test_acc: Option<f64>,
    trunk_digest_before: Option<String>,
    trunk_digest_after: Option<String>,
}

/// What a stage trains on: the network, its input transform and the
/// parameters to freeze.
struct Plan {
    net: Network,
    transform: InputTransform,
    frozen: Vec<String>,
}

/// Stage-1 input: 8^3 equal-interval samples of a cubic volume, or the
/// raw values when the data is already that small or not cubic.
pub fn stage1_transform(dims: [usize; 3]) -> InputTransform {
    let r = dims[0];
    let cubic = dims.iter().all(|&d| d == r);
    if cubic && r > STAGE1_RESOLUTION && r.is_multiple_of(STAGE1_RESOLUTION) {
        InputTransform::Downsample {
            target: STAGE1_RESOLUTION,
        }
    } else {
        InputTransform::Identity
    }
}

fn load_network(path: &Path) -> Result<(Network, BTreeMap<String, String>), CliError> {
    if !path.is_file() {
        return Err(CliError::Io(format!("{} does not exist", path.display())));
    }
    let ck = ModelCheckpoint::load(path)?;
    Ok((ck.to_network()?, ck.metadata))
}

fn plan(a: &TrainArgs, src: &SplitReader, classes: usize, rng: &mut ChaCha8Rng) -> Result<Plan, CliError> {
    let (dims, channels) = (src.dims(), src.channels());
    let stage = a.stage.as_str();
    if stage != "3" && a.trunk.is_some() {
        return Err(CliError::input("--trunk only applies to stage 3"));
    }
    match stage {
        "1" => {
            let transform = stage1_transform(dims);
            let inputs = transform.output_len(dims, channels)?;
            Ok(Plan {
                net: Network::new(build_fcnet_with_input(inputs, classes), rng)?,
                transform,
                frozen: Vec::new(),
            })
        }
        "2" => {
            if dims[0] != dims[1] || dims[1] != dims[2] {
                return Err(CliError::input(format!("stage 2 needs cubic volumes, data is {dims:?}")));
            }
            Ok(Plan {
                net: Network::new(build_stage2(classes, dims[0], channels)?, rng)?,
                transform: InputTransform::Identity,
                frozen: Vec::new(),
            })
        }
        "3" => {
            let path = a
                .trunk
                .as_ref()
                .ok_or_else(|| CliError::input("stage 3 needs --trunk with a trained stage-2 checkpoint"))?;
            let (stage2, _) = load_network(path)?;
            let mut net = Network::new(build_stage3(classes, stage2.spec())?, rng)?;
            copy_trunk(&stage2, &mut net)?;
            let frozen = net.trunk_param_names();
            Ok(Plan {
                net,
                transform: InputTransform::Identity,
                frozen,
            })
        }
        other => {
            let which: MnistNet = other
                .parse()
                .map_err(|_| CliError::input(format!("unknown stage {other:?}")))?;
            Ok(Plan {
                net: Network::new(which.spec(classes), rng)?,
                transform: InputTransform::Identity,
                frozen: Vec::new(),
            })
        }
    }
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    let reader = DatasetReader::open(&a.data)?;
    let manifest = reader.manifest().clone();
    let classes = manifest.classes.len();
    let train_src = reader.split("train")?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let Plan {
        mut net,
        transform,
        frozen,
    } = plan(a, &train_src, classes, &mut rng)?;
    let val_src = reader.split(&a.val_split)?;
    let val = (!val_src.is_empty()).then_some(&val_src);
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        lr: a.lr,
        momentum: a.momentum,
        weight_decay: a.weight_decay,
        lr_step: a.lr_step,
        lr_gamma: a.lr_gamma,
        seed: a.seed,
    };
    let is_stage3 = a.stage == "3";
    let before = is_stage3.then(|| trunk_digest(&net));
    let outcome = train_stage(&mut net, &train_src, val, transform, &cfg, &frozen)?;
    let after = is_stage3.then(|| trunk_digest(&net));
    if before != after {
        return Err(CliError::Internal("frozen trunk changed during training".into()));
    }
    let test_acc = match &a.test_split {
        Some(s) => Some(evaluate_accuracy(&mut net, &reader.split(s)?, transform, 128)?),
        None => None,
    };

    std::fs::create_dir_all(&a.out)?;
    let mut meta = BTreeMap::new();
    meta.insert("stage".to_string(), a.stage.clone());
    meta.insert("variant".to_string(), manifest.variant.clone());
    meta.insert("input_transform".to_string(), transform.to_text());
    meta.insert("dataset_checksum".to_string(), manifest.checksum.clone());
    meta.insert("seed".to_string(), a.seed.to_string());
    ModelCheckpoint::from_network(&net, meta).save(&a.out.join(MODEL_FILE))?;
    std::fs::write(a.out.join("history.csv"), outcome.history_csv())?;
    let summary = TrainSummary {
        stage: a.stage.clone(),
        network: net.spec().name.clone(),
        params: net.spec().cost()?.params,
        input_transform: transform.to_text(),
        best_epoch: outcome.best_epoch,
        final_train_acc: outcome.history.last().map(|h| h.train_acc),
        best_val_acc: outcome
            .best_epoch
            .and_then(|e| outcome.history.get(e))
            .and_then(|h| h.val_acc),
        test_acc,
        trunk_digest_before: before,
        trunk_digest_after: after,
    };
    std::fs::write(a.out.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    write_resolved(a, "train", &a.out.join("config.txt"))?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}
