use crate::error::{invalid, Result};

/// Uniform quantizer: `2^bits` levels over `[lo, hi]`, clamped, offset-binary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    pub bits: u32,
    pub lo: f64,
    pub hi: f64,
}

impl Quantizer {
    pub fn new(bits: u32, lo: f64, hi: f64) -> Result<Self> {
        if !(1..=16).contains(&bits) {
            return invalid(format!("quantizer bits must be in [1, 16], got {bits}"));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return invalid(format!("quantizer range must satisfy lo < hi, got [{lo}, {hi}]"));
        }
        Ok(Self { bits, lo, hi })
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / f64::from(self.levels())
    }

    pub fn code(&self, v: f64) -> Result<u32> {
        if v.is_nan() {
            return invalid("NaN in signal");
        }
        let scaled = ((v - self.lo) / (self.hi - self.lo) * f64::from(self.levels())).floor();
        Ok(scaled.clamp(0.0, f64::from(self.levels() - 1)) as u32)
    }

    /// Midpoint of the cell a code stands for.
    pub fn reconstruct(&self, code: u32) -> f64 {
        self.lo + (f64::from(code) + 0.5) * self.step()
    }

    pub fn push_code_bits(&self, code: u32, out: &mut Vec<u8>) {
        for i in (0..self.bits).rev() {
            out.push(((code >> i) & 1) as u8);
        }
    }
}

pub fn quantize_codes(signal: &[f64], q: &Quantizer) -> Result<Vec<u32>> {
    signal.iter().map(|&v| q.code(v)).collect()
}

/// Quantizes and flattens to `bits` symbols per sample, most significant first.
pub fn quantize(signal: &[f64], bits: u32, lo: f64, hi: f64) -> Result<Vec<u8>> {
    let q = Quantizer::new(bits, lo, hi)?;
    let mut out = Vec::with_capacity(signal.len() * bits as usize);
    for &v in signal {
        q.push_code_bits(q.code(v)?, &mut out);
    }
    Ok(out)
}

/// Differential entropy rate of white Gaussian noise, `0.5 log2(2πe σ²)` bits/sample.
pub fn gaussian_entropy_rate(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(crate::error::AgarError::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    Ok(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma * sigma).log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_midpoint_signal() {
        let q = Quantizer::new(4, -1.0, 1.0).unwrap();
        let codes = quantize_codes(&[0.0; 10], &q).unwrap();
        assert!(codes.iter().all(|&c| c == codes[0]));
    }

    #[test]
    fn ramp_hits_every_code_once() {
        for b in 1..=8u32 {
            let n = 1usize << b;
            let ramp: Vec<f64> = (0..n).map(|i| -3.0 + 5.0 * i as f64 / (n - 1) as f64).collect();
            let codes = quantize_codes(&ramp, &Quantizer::new(b, -3.0, 2.0).unwrap()).unwrap();
            assert_eq!(codes, (0..n as u32).collect::<Vec<_>>());
        }
    }

    #[test]
    fn clamping_and_bits() {
        let bits = quantize(&[10.0, -10.0], 3, 0.0, 1.0).unwrap();
        assert_eq!(bits, vec![1, 1, 1, 0, 0, 0]);
    }

    #[test]
    fn rejects_nan_and_bad_params() {
        assert!(quantize(&[f64::NAN], 2, 0.0, 1.0).is_err());
        assert!(quantize(&[0.0], 0, 0.0, 1.0).is_err());
        assert!(quantize(&[0.0], 17, 0.0, 1.0).is_err());
        assert!(quantize(&[0.0], 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn entropy_rate_values() {
        assert!((gaussian_entropy_rate(1.0).unwrap() - 2.0471).abs() < 1e-4);
        let h1 = gaussian_entropy_rate(0.3).unwrap();
        let h2 = gaussian_entropy_rate(0.6).unwrap();
        assert!((h2 - h1 - 1.0).abs() < 1e-12);
        let unit = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
        assert!(gaussian_entropy_rate(unit).unwrap().abs() < 1e-12);
        assert!(gaussian_entropy_rate(0.0).is_err());
        assert!(gaussian_entropy_rate(-1.0).is_err());
    }
}
