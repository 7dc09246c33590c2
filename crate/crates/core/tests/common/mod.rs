#![allow(dead_code)]

use std::path::PathBuf;

use flutterlab_core::{load_config, RunConfig};

pub const LAMBDA: f64 = 1.875_104_068_711_961;

pub fn reference_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("config/reference.json")
}

pub fn reference_config() -> RunConfig {
    load_config(reference_path()).expect("reference config loads")
}

/// Tip-normalised cantilever bending mode and its derivatives, from scratch.
pub struct Bending {
    l: f64,
    sigma: f64,
    tip: f64,
}

impl Bending {
    pub fn new(l: f64) -> Self {
        let sigma = (LAMBDA.cosh() + LAMBDA.cos()) / (LAMBDA.sinh() + LAMBDA.sin());
        let tip = LAMBDA.cosh() - LAMBDA.cos() - sigma * (LAMBDA.sinh() - LAMBDA.sin());
        Self { l, sigma, tip }
    }

    pub fn f(&self, z: f64) -> f64 {
        let t = LAMBDA * z / self.l;
        (t.cosh() - t.cos() - self.sigma * (t.sinh() - t.sin())) / self.tip
    }

    pub fn f2(&self, z: f64) -> f64 {
        let t = LAMBDA * z / self.l;
        (LAMBDA / self.l).powi(2) * (t.cosh() + t.cos() - self.sigma * (t.sinh() + t.sin())) / self.tip
    }
}

pub fn phi(z: f64, l: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * z / l).sin()
}

pub fn phi1(z: f64, l: f64) -> f64 {
    let k = std::f64::consts::FRAC_PI_2 / l;
    k * (k * z).cos()
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + inner + f(b)) * h / 3.0
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
