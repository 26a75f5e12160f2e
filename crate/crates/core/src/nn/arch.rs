//! Architecture descriptors: a layer list with names, a per-sample input
//! shape, and an optional trunk boundary. The text form is what checkpoints
//! embed; it round-trips exactly.

use std::fmt::Write as _;

use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    Linear { d_in: usize, d_out: usize },
    Conv { rank: usize, c_in: usize, c_out: usize, kernel: usize },
    BatchNorm { channels: usize },
    Relu,
    MaxPool { rank: usize, size: usize, stride: usize },
    Flatten,
}

impl LayerSpec {
    fn to_tokens(self) -> String {
        match self {
            LayerSpec::Linear { d_in, d_out } => format!("linear {d_in} {d_out}"),
            LayerSpec::Conv {
                rank,
                c_in,
                c_out,
                kernel,
            } => format!("conv{rank}d {c_in} {c_out} {kernel}"),
            LayerSpec::BatchNorm { channels } => format!("batchnorm {channels}"),
            LayerSpec::Relu => "relu".into(),
            LayerSpec::MaxPool { rank, size, stride } => format!("maxpool{rank}d {size} {stride}"),
            LayerSpec::Flatten => "flatten".into(),
        }
    }

    fn parse(tokens: &[&str]) -> Result<Self, NnError> {
        let num = |i: usize| -> Result<usize, NnError> {
            tokens
                .get(i)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| NnError::Descriptor(format!("bad layer line {tokens:?}")))
        };
        let expect = |n: usize| -> Result<(), NnError> {
            if tokens.len() == n {
                Ok(())
            } else {
                Err(NnError::Descriptor(format!("bad layer line {tokens:?}")))
            }
        };
        let kind = tokens.first().copied().unwrap_or("");
        let spec = match kind {
            "linear" => {
                expect(3)?;
                LayerSpec::Linear {
                    d_in: num(1)?,
                    d_out: num(2)?,
                }
            }
            "conv2d" | "conv3d" => {
                expect(4)?;
                LayerSpec::Conv {
                    rank: if kind == "conv2d" { 2 } else { 3 },
                    c_in: num(1)?,
                    c_out: num(2)?,
                    kernel: num(3)?,
                }
            }
            "batchnorm" => {
                expect(2)?;
                LayerSpec::BatchNorm { channels: num(1)? }
            }
            "relu" => {
                expect(1)?;
                LayerSpec::Relu
            }
            "maxpool2d" | "maxpool3d" => {
                expect(3)?;
                LayerSpec::MaxPool {
                    rank: if kind == "maxpool2d" { 2 } else { 3 },
                    size: num(1)?,
                    stride: num(2)?,
                }
            }
            "flatten" => {
                expect(1)?;
                LayerSpec::Flatten
            }
            other => return Err(NnError::Descriptor(format!("unknown layer kind {other:?}"))),
        };
        Ok(spec)
    }

    /// Output shape (per sample) for a given per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        let mismatch = || {
            NnError::ShapeMismatch(format!("{} cannot take input {input:?}", self.to_tokens()))
        };
        match *self {
            LayerSpec::Linear { d_in, d_out } => {
                if input != [d_in] {
                    return Err(mismatch());
                }
                Ok(vec![d_out])
            }
            LayerSpec::Conv {
                rank,
                c_in,
                c_out,
                kernel,
            } => {
                if input.len() != rank + 1 || input[0] != c_in || input[1..].iter().any(|&d| d < kernel)
                {
                    return Err(mismatch());
                }
                let mut out = vec![c_out];
                out.extend(input[1..].iter().map(|&d| d - kernel + 1));
                Ok(out)
            }
            LayerSpec::BatchNorm { channels } => {
                if input.first() != Some(&channels) {
                    return Err(mismatch());
                }
                Ok(input.to_vec())
            }
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::MaxPool { rank, size, stride } => {
                if input.len() != rank + 1 || input[1..].iter().any(|&d| d < size) {
                    return Err(mismatch());
                }
                let mut out = vec![input[0]];
                out.extend(input[1..].iter().map(|&d| (d - size) / stride + 1));
                Ok(out)
            }
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    pub fn param_count(&self) -> u64 {
        match *self {
            LayerSpec::Linear { d_in, d_out } => (d_in * d_out + d_out) as u64,
            LayerSpec::Conv {
                rank,
                c_in,
                c_out,
                kernel,
            } => (c_out * c_in * kernel.pow(rank as u32) + c_out) as u64,
            LayerSpec::BatchNorm { channels } => 2 * channels as u64,
            _ => 0,
        }
    }

    /// Operation count for one sample given this layer's output shape.
    /// Convolution and linear layers count a multiply-add as two operations;
    /// pooling and batch norm count one operation per output element.
    pub fn flops(&self, output: &[usize]) -> u64 {
        let out_elems: u64 = output.iter().product::<usize>() as u64;
        match *self {
            LayerSpec::Linear { d_in, d_out } => 2 * (d_in * d_out) as u64,
            LayerSpec::Conv {
                rank,
                c_in,
                c_out,
                kernel,
            } => {
                let out_vox: u64 = output[1..].iter().product::<usize>() as u64;
                out_vox * (c_out * c_in * kernel.pow(rank as u32)) as u64 * 2
            }
            LayerSpec::BatchNorm { .. } | LayerSpec::MaxPool { .. } => out_elems,
            LayerSpec::Relu | LayerSpec::Flatten => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArchSpec {
    pub name: String,
    /// Per-sample input shape, e.g. `[512]` or `[1, 64, 64, 64]`.
    pub input_shape: Vec<usize>,
    pub layers: Vec<(String, LayerSpec)>,
    /// Layers `[0, trunk_end)` form a trunk shared with a later stage.
    pub trunk_end: Option<usize>,
}

/// Parameter and operation totals for one forward pass of one sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CostSummary {
    pub params: u64,
    pub flops: u64,
}

impl CostSummary {
    /// Multiply-accumulate count: `flops` with each multiply-add counted once.
    pub fn macs(&self) -> u64 {
        self.flops / 2
    }
}

impl std::ops::Add for CostSummary {
    type Output = CostSummary;
    fn add(self, o: CostSummary) -> CostSummary {
        CostSummary {
            params: self.params + o.params,
            flops: self.flops + o.flops,
        }
    }
}

impl ArchSpec {
    pub fn new(name: &str, input_shape: &[usize]) -> Self {
        Self {
            name: name.to_string(),
            input_shape: input_shape.to_vec(),
            layers: Vec::new(),
            trunk_end: None,
        }
    }

    pub fn push(&mut self, name: &str, layer: LayerSpec) -> &mut Self {
        self.layers.push((name.to_string(), layer));
        self
    }

    /// Per-sample output shape after every layer (index `i` is after layer `i`).
    pub fn trace(&self) -> Result<Vec<Vec<usize>>, NnError> {
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut cur = self.input_shape.clone();
        for (_, l) in &self.layers {
            cur = l.output_shape(&cur)?;
            shapes.push(cur.clone());
        }
        Ok(shapes)
    }

    pub fn output_shape(&self) -> Result<Vec<usize>, NnError> {
        Ok(self.trace()?.pop().unwrap_or_else(|| self.input_shape.clone()))
    }

    pub fn trunk_output_shape(&self) -> Result<Option<Vec<usize>>, NnError> {
        match self.trunk_end {
            None => Ok(None),
            Some(0) => Ok(Some(self.input_shape.clone())),
            Some(k) => Ok(self.trace()?.get(k - 1).cloned()),
        }
    }

    /// Cost of layers in `range` (indices into `layers`).
    pub fn cost_of(&self, range: std::ops::Range<usize>) -> Result<CostSummary, NnError> {
        let shapes = self.trace()?;
        let mut c = CostSummary::default();
        for i in range {
            let l = &self.layers[i].1;
            c.params += l.param_count();
            c.flops += l.flops(&shapes[i]);
        }
        Ok(c)
    }

    /// Parameter count and per-sample operation count of the whole network.
    pub fn cost(&self) -> Result<CostSummary, NnError> {
        self.cost_of(0..self.layers.len())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "arch {}", self.name);
        let dims: Vec<String> = self.input_shape.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "input {}", dims.join(" "));
        if let Some(k) = self.trunk_end {
            let _ = writeln!(s, "trunk_end {k}");
        }
        for (name, l) in &self.layers {
            let _ = writeln!(s, "layer {name} {}", l.to_tokens());
        }
        s
    }

    /// Parses the text form. Lines starting with `meta` are skipped here.
    pub fn parse(text: &str) -> Result<Self, NnError> {
        let mut name = None;
        let mut input = None;
        let mut trunk_end = None;
        let mut layers = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens[0] {
                "arch" if tokens.len() == 2 => name = Some(tokens[1].to_string()),
                "input" => {
                    let dims: Result<Vec<usize>, _> = tokens[1..].iter().map(|t| t.parse()).collect();
                    input = Some(dims.map_err(|_| NnError::Descriptor(format!("bad input line {line:?}")))?);
                }
                "trunk_end" if tokens.len() == 2 => {
                    trunk_end = Some(
                        tokens[1]
                            .parse()
                            .map_err(|_| NnError::Descriptor(format!("bad trunk line {line:?}")))?,
                    )
                }
                "layer" if tokens.len() >= 3 => {
                    layers.push((tokens[1].to_string(), LayerSpec::parse(&tokens[2..])?));
                }
                "meta" => {}
                _ => return Err(NnError::Descriptor(format!("unrecognized line {line:?}"))),
            }
        }
        let spec = ArchSpec {
            name: name.ok_or_else(|| NnError::Descriptor("missing arch line".into()))?,
            input_shape: input.ok_or_else(|| NnError::Descriptor("missing input line".into()))?,
            layers,
            trunk_end,
        };
        if spec.trunk_end.is_some_and(|k| k > spec.layers.len()) {
            return Err(NnError::Descriptor("trunk_end past last layer".into()));
        }
        spec.trace()?;
        Ok(spec)
    }
}
