use super::field::{FieldElement, MODULUS};
use super::Error;

/// Fixed-point codec into the field: `encode(x) = round(x * 2^f) mod q` with
/// signed values in the upper half. `k_max` bounds the party count so that a
/// full sum stays inside `(-q/2, q/2)` and decodes unambiguously.
#[derive(Clone, Copy, Debug)]
pub struct FixedPointCodec {
    pub frac_bits: u32,
    pub k_max: u32,
}

impl Default for FixedPointCodec {
    fn default() -> Self {
        Self { frac_bits: 24, k_max: 32 }
    }
}

impl FixedPointCodec {
    pub fn new(frac_bits: u32, k_max: u32) -> Self {
        assert!(frac_bits > 0 && frac_bits < 60);
        assert!(k_max >= 1);
        Self { frac_bits, k_max }
    }

    /// Largest encodable magnitude: `2^(60 - f) / k_max`.
    pub fn bound(&self) -> f64 {
        (1u64 << (60 - self.frac_bits)) as f64 / self.k_max as f64
    }

    /// Worst-case absolute decode error after summing `k` encodings.
    pub fn sum_tolerance(&self, k: u32) -> f64 {
        k as f64 * 0.5f64.powi(self.frac_bits as i32)
    }

    pub fn encode_one(&self, x: f64, index: usize) -> Result<FieldElement, Error> {
        if !x.is_finite() || x.abs() >= self.bound() {
            return Err(Error::FixedPointOverflow { index, value: x });
        }
        let scaled = (x * (1u64 << self.frac_bits) as f64).round() as i64;
        Ok(if scaled >= 0 {
            FieldElement::from_canonical(scaled as u64)
        } else {
            FieldElement::from_canonical(MODULUS - scaled.unsigned_abs())
        })
    }

    pub fn decode_one(&self, e: FieldElement) -> f64 {
        let v = e.value();
        let signed = if v > MODULUS / 2 { v as i64 - MODULUS as i64 } else { v as i64 };
        signed as f64 / (1u64 << self.frac_bits) as f64
    }

    pub fn encode(&self, xs: &[f64]) -> Result<Vec<FieldElement>, Error> {
        xs.iter().enumerate().map(|(i, &x)| self.encode_one(x, i)).collect()
    }

    pub fn decode(&self, es: &[FieldElement]) -> Vec<f64> {
        es.iter().map(|&e| self.decode_one(e)).collect()
    }
}
