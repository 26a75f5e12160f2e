use rayon::prelude::*;

use super::{make_3d_mnist, DatasetError, ImageSample, ImageVariant, Mnist3dVariant, VOLUME};

/// Indexed access to labelled samples of a fixed shape, stored or generated.
pub trait SampleSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spatial extent `[nx, ny, nz]`; images use `nz = 1`.
    fn dims(&self) -> [usize; 3];

    fn channels(&self) -> usize;

    fn num_classes(&self) -> usize;

    fn sample_len(&self) -> usize {
        self.dims().iter().product::<usize>() * self.channels()
    }

    /// Writes sample `i` into `out` (length [`sample_len`](Self::sample_len))
    /// and returns its label.
    fn fetch(&self, i: usize, out: &mut [f32]) -> Result<u16, DatasetError>;

    fn label(&self, i: usize) -> Result<u16, DatasetError> {
        let mut scratch = vec![0.0; self.sample_len()];
        self.fetch(i, &mut scratch)
    }
}

/// Samples held contiguously in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct InMemorySource {
    dims: [usize; 3],
    channels: usize,
    num_classes: usize,
    values: Vec<f32>,
    labels: Vec<u16>,
}

impl InMemorySource {
    pub fn new(dims: [usize; 3], channels: usize, num_classes: usize) -> Self {
        Self {
            dims,
            channels,
            num_classes,
            values: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, values: &[f32], label: u16) -> Result<(), DatasetError> {
        if values.len() != self.sample_len() {
            return Err(DatasetError::Shape(format!(
                "sample has {} values, expected {}",
                values.len(),
                self.sample_len()
            )));
        }
        if label as usize >= self.num_classes {
            return Err(DatasetError::LabelOutOfRange {
                label,
                classes: self.num_classes,
            });
        }
        self.values.extend_from_slice(values);
        self.labels.push(label);
        Ok(())
    }

    /// Converts gray MNIST images to one of the 2-D input signals.
    pub fn from_images(images: &[ImageSample], variant: ImageVariant, num_classes: usize) -> Result<Self, DatasetError> {
        let first = images.first().ok_or_else(|| DatasetError::Shape("no images".into()))?;
        let mut out = Self::new([first.width, first.height, 1], first.channels, num_classes);
        let converted: Vec<ImageSample> = images.par_iter().map(|im| variant.apply(im)).collect::<Result<_, _>>()?;
        for im in &converted {
            out.push(&im.values, im.label)?;
        }
        Ok(out)
    }

    /// Copies the samples at `indices` out of any source, in parallel.
    pub fn materialize<S: SampleSource + ?Sized>(src: &S, indices: &[usize]) -> Result<Self, DatasetError> {
        let n = src.sample_len();
        let mut values = vec![0.0f32; n * indices.len()];
        let labels: Vec<u16> = values
            .par_chunks_mut(n.max(1))
            .zip(indices.par_iter())
            .map(|(out, &i)| src.fetch(i, out))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            dims: src.dims(),
            channels: src.channels(),
            num_classes: src.num_classes(),
            values,
            labels,
        })
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        let n = self.sample_len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Splits off the last `count` samples.
    pub fn split_tail(mut self, count: usize) -> (Self, Self) {
        let count = count.min(self.labels.len());
        let keep = self.labels.len() - count;
        let n = self.sample_len();
        let tail = Self {
            dims: self.dims,
            channels: self.channels,
            num_classes: self.num_classes,
            values: self.values.split_off(keep * n),
            labels: self.labels.split_off(keep),
        };
        (self, tail)
    }
}

impl SampleSource for InMemorySource {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn channels(&self) -> usize {
        self.channels
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn fetch(&self, i: usize, out: &mut [f32]) -> Result<u16, DatasetError> {
        if i >= self.len() {
            return Err(DatasetError::CountMismatch(format!("sample {i} of {}", self.len())));
        }
        out.copy_from_slice(self.sample(i));
        Ok(self.labels[i])
    }

    fn label(&self, i: usize) -> Result<u16, DatasetError> {
        self.labels
            .get(i)
            .copied()
            .ok_or_else(|| DatasetError::CountMismatch(format!("sample {i} of {}", self.len())))
    }
}

/// 3-D MNIST volumes generated from 2-D images on every access.
#[derive(Clone, Debug)]
pub struct Mnist3dSource {
    images: Vec<ImageSample>,
    thickness: usize,
    variant: Mnist3dVariant,
}

impl Mnist3dSource {
    pub fn new(images: Vec<ImageSample>, thickness: usize, variant: Mnist3dVariant) -> Result<Self, DatasetError> {
        if !super::THICKNESSES.contains(&thickness) {
            return Err(DatasetError::BadThickness(thickness));
        }
        Ok(Self {
            images,
            thickness,
            variant,
        })
    }

    pub fn variant(&self) -> Mnist3dVariant {
        self.variant
    }

    pub fn thickness(&self) -> usize {
        self.thickness
    }
}

impl SampleSource for Mnist3dSource {
    fn len(&self) -> usize {
        self.images.len()
    }

    fn dims(&self) -> [usize; 3] {
        [VOLUME; 3]
    }

    fn channels(&self) -> usize {
        1
    }

    fn num_classes(&self) -> usize {
        10
    }

    fn fetch(&self, i: usize, out: &mut [f32]) -> Result<u16, DatasetError> {
        let im = self
            .images
            .get(i)
            .ok_or_else(|| DatasetError::CountMismatch(format!("sample {i} of {}", self.images.len())))?;
        let v = make_3d_mnist(im, self.thickness, self.variant)?;
        out.copy_from_slice(&v.block.values);
        Ok(v.label)
    }

    fn label(&self, i: usize) -> Result<u16, DatasetError> {
        self.images
            .get(i)
            .map(|im| im.label)
            .ok_or_else(|| DatasetError::CountMismatch(format!("sample {i} of {}", self.images.len())))
    }
}
