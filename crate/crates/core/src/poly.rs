//! Dense real polynomials in descending-power order.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

/// Drops leading zeros. An all-zero input becomes empty.
pub fn trim(p: &[f64]) -> Vec<f64> {
    let first = p.iter().position(|&c| c != 0.0).unwrap_or(p.len());
    p[first..].to_vec()
}

pub fn pad_front(p: &[f64], len: usize) -> Vec<f64> {
    if p.len() >= len {
        return p.to_vec();
    }
    let mut out = vec![0.0; len - p.len()];
    out.extend_from_slice(p);
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let a = pad_front(a, n);
    let b = pad_front(b, n);
    a.iter().zip(&b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let a = pad_front(a, n);
    let b = pad_front(b, n);
    a.iter().zip(&b).map(|(x, y)| x - y).collect()
}

pub fn scale(p: &[f64], k: f64) -> Vec<f64> {
    p.iter().map(|c| c * k).collect()
}

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn pow(p: &[f64], k: usize) -> Vec<f64> {
    (0..k).fold(vec![1.0], |acc, _| mul(&acc, p))
}

pub fn eval_complex(p: &[f64], x: Complex64) -> Complex64 {
    p.iter().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}
