use serde::{Deserialize, Serialize};

use super::Error;

/// Shape of one affine layer: `rows x cols` weights plus an optional bias of
/// length `rows`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub rows: u32,
    pub cols: u32,
    pub has_bias: bool,
}

impl LayerShape {
    pub fn new(rows: u32, cols: u32, has_bias: bool) -> Self {
        Self { rows, cols, has_bias }
    }

    pub fn len(&self) -> usize {
        let rc = self.rows as usize * self.cols as usize;
        if self.has_bias {
            rc + self.rows as usize
        } else {
            rc
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Flat real-valued model parameters with per-layer shape metadata; the unit
/// of federation. Layer `i` stores its weights row-major followed by the bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    data: Vec<f64>,
    shapes: Vec<LayerShape>,
}

impl ParamVector {
    /// Builds a vector from flat data, checking the length against the shape
    /// metadata and rejecting non-finite entries.
    pub fn new(data: Vec<f64>, shapes: Vec<LayerShape>) -> Result<Self, Error> {
        let want: usize = shapes.iter().map(|s| s.len()).sum();
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "data length {} != shape total {}",
                data.len(),
                want
            )));
        }
        let pv = Self { data, shapes };
        pv.validate()?;
        Ok(pv)
    }

    pub fn zeros(shapes: Vec<LayerShape>) -> Self {
        let n = shapes.iter().map(|s| s.len()).sum();
        Self { data: vec![0.0; n], shapes }
    }

    /// Seeded uniform init: weights in `[-s, s]` with
    /// `s = sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init_uniform<R: rand::Rng>(shapes: Vec<LayerShape>, rng: &mut R) -> Self {
        let mut pv = Self::zeros(shapes);
        let mut off = 0;
        for shape in pv.shapes.clone() {
            let (rows, cols) = (shape.rows as usize, shape.cols as usize);
            let s = (6.0 / (rows + cols) as f64).sqrt();
            for w in &mut pv.data[off..off + rows * cols] {
                *w = rng.gen_range(-s..=s);
            }
            off += shape.len();
        }
        pv
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NotFinite(i)),
            None => Ok(()),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shapes == other.shapes
    }

    fn layer_offset(&self, layer: usize) -> usize {
        self.shapes[..layer].iter().map(|s| s.len()).sum()
    }

    /// Weight block (row-major) and optional bias of layer `layer`.
    pub fn layer(&self, layer: usize) -> (&[f64], Option<&[f64]>) {
        let shape = self.shapes[layer];
        let off = self.layer_offset(layer);
        let rc = shape.rows as usize * shape.cols as usize;
        let w = &self.data[off..off + rc];
        let b = shape.has_bias.then(|| &self.data[off + rc..off + rc + shape.rows as usize]);
        (w, b)
    }

    /// In-place `self += k * other`; shapes must match.
    pub fn axpy(&mut self, k: f64, other: &Self) -> Result<(), Error> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("axpy operands differ in shape".into()));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += k * b;
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> Result<f64, Error> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("dot operands differ in shape".into()));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn scale(&mut self, k: f64) {
        for v in &mut self.data {
            *v *= k;
        }
    }

    /// Wire encoding: `u32` layer count; per layer `u32` rows, `u32` cols,
    /// `u8` has_bias; then the flat data as little-endian `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.shapes.len() * 9 + self.data.len() * 8);
        out.extend_from_slice(&(self.shapes.len() as u32).to_le_bytes());
        for s in &self.shapes {
            out.extend_from_slice(&s.rows.to_le_bytes());
            out.extend_from_slice(&s.cols.to_le_bytes());
            out.push(s.has_bias as u8);
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, Error> {
        let malformed = |what: &str| Error::ShapeMismatch(format!("malformed encoding: {what}"));
        if bytes.len() < 4 {
            return Err(malformed("missing layer count"));
        }
        let n_layers = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let mut off = 4;
        let mut shapes = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            if bytes.len() < off + 9 {
                return Err(malformed("truncated shape descriptor"));
            }
            let rows = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
            let cols = u32::from_le_bytes(bytes[off + 4..off + 8].try_into().unwrap());
            let has_bias = match bytes[off + 8] {
                0 => false,
                1 => true,
                other => return Err(malformed(&format!("has_bias byte {other}"))),
            };
            shapes.push(LayerShape::new(rows, cols, has_bias));
            off += 9;
        }
        let want: usize = shapes.iter().map(|s| s.len()).sum();
        if bytes.len() != off + want * 8 {
            return Err(malformed(&format!(
                "payload {} bytes, expected {}",
                bytes.len() - off,
                want * 8
            )));
        }
        let mut data = Vec::with_capacity(want);
        for i in 0..want {
            let b = &bytes[off + i * 8..off + (i + 1) * 8];
            data.push(f64::from_le_bytes(b.try_into().unwrap()));
        }
        Self::new(data, shapes)
    }
}
