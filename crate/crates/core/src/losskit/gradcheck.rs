//! Finite-difference checks of the analytic gradients on random instances.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    asl_loss, bce_loss, itc_loss, itm_loss, lm_loss, EmbeddingBatch, FocusParams, LabelMatrix, ProbMatrix,
    TokenBatch, DEFAULT_TEMPERATURE,
};
use crate::rng::{self, ChaCha8Rng};

/// Central-difference step.
pub const STEP: f64 = 1e-5;
/// Pass threshold on the maximum relative error.
pub const TOLERANCE: f64 = 1e-4;
/// Denominator floor so entries that are analytically ~0 are compared on an
/// absolute scale.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kernel {
    Bce,
    Asl,
    Lm,
    Itc,
    Itm,
}

impl Kernel {
    pub const ALL: [Kernel; 5] = [Kernel::Bce, Kernel::Asl, Kernel::Lm, Kernel::Itc, Kernel::Itm];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Bce => "bce",
            Kernel::Asl => "asl",
            Kernel::Lm => "lm",
            Kernel::Itc => "itc",
            Kernel::Itm => "itm",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kernel::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown loss {s:?}; expected one of bce, asl, lm, itc, itm"))
    }
}

/// `|a - n| / max(|a|, |n|, REL_FLOOR)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Central difference of `f` at `x` for every coordinate.
pub fn numeric_gradient(x: &Array2<f64>, f: impl Fn(&Array2<f64>) -> f64) -> Array2<f64> {
    let mut g = Array2::zeros(x.dim());
    let mut xp = x.clone();
    for idx in ndarray::indices(x.dim()) {
        let orig = xp[idx];
        xp[idx] = orig + STEP;
        let up = f(&xp);
        xp[idx] = orig - STEP;
        let down = f(&xp);
        xp[idx] = orig;
        g[idx] = (up - down) / (2.0 * STEP);
    }
    g
}

fn max_relative_error(a: &Array2<f64>, n: &Array2<f64>) -> f64 {
    a.iter()
        .zip(n.iter())
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub kernel: Kernel,
    pub instances: usize,
    pub max_rel_error: f64,
}

impl GradReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

impl fmt::Display for GradReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{:.3e}\t{}",
            self.kernel,
            self.instances,
            self.max_rel_error,
            if self.passed() { "pass" } else { "fail" }
        )
    }
}

pub const REPORT_HEADER: &str = "kernel\tinstances\tmax_rel_error\tstatus";

fn probs(r: &mut ChaCha8Rng, b: usize, c: usize) -> Array2<f64> {
    Array2::from_shape_fn((b, c), |_| r.random_range(0.05..0.95))
}

fn labels(r: &mut ChaCha8Rng, b: usize, c: usize) -> LabelMatrix {
    let mut codes = Array2::from_shape_fn((b, c), |_| match r.random_range(0..10) {
        0 => -1,
        k => (k % 2) as i8,
    });
    codes[[0, 0]] = 1;
    LabelMatrix::from_codes(&codes).expect("codes are valid")
}

fn normal(r: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_fn(shape, |_| StandardNormal.sample(r))
}

/// Maximum relative error of one random instance of `kernel`.
pub fn check_instance(kernel: Kernel, r: &mut ChaCha8Rng) -> f64 {
    match kernel {
        Kernel::Bce => {
            let (b, c) = (r.random_range(1..5), r.random_range(1..7));
            let p = probs(r, b, c);
            let y = labels(r, b, c);
            let pm = ProbMatrix::new(p.clone()).expect("finite");
            let a = bce_loss(&y, &pm).expect("valid").grad;
            let n = numeric_gradient(&p, |x| bce_loss(&y, &ProbMatrix::new(x.clone()).unwrap()).unwrap().loss);
            max_relative_error(&a, &n)
        }
        Kernel::Asl => {
            let (b, c) = (r.random_range(1..5), r.random_range(1..7));
            let p = probs(r, b, c);
            let y = labels(r, b, c);
            let focus = FocusParams::new(r.random_range(0.0..4.0), r.random_range(0.0..4.0)).expect("valid");
            let pm = ProbMatrix::new(p.clone()).expect("finite");
            let a = asl_loss(&y, &pm, focus).expect("valid").grad;
            let n = numeric_gradient(&p, |x| {
                asl_loss(&y, &ProbMatrix::new(x.clone()).unwrap(), focus).unwrap().loss
            });
            max_relative_error(&a, &n)
        }
        Kernel::Lm => {
            let (rows, v) = (r.random_range(1..6), r.random_range(2..8));
            let logits = normal(r, (rows, v)) * 2.0;
            let pad = v;
            let mut targets: Vec<usize> = (0..rows)
                .map(|_| if r.random_range(0..5) == 0 { pad } else { r.random_range(0..v) })
                .collect();
            targets[0] = r.random_range(0..v);
            let batch = TokenBatch::new(logits.clone(), targets.clone(), pad).expect("valid");
            let a = lm_loss(&batch).expect("valid").grad;
            let n = numeric_gradient(&logits, |x| {
                lm_loss(&TokenBatch::new(x.clone(), targets.clone(), pad).unwrap()).unwrap().loss
            });
            max_relative_error(&a, &n)
        }
        Kernel::Itc => {
            let (b, d) = (r.random_range(1..6), r.random_range(1..9));
            let img = normal(r, (b, d));
            let txt = normal(r, (b, d));
            let tau = if r.random_bool(0.5) {
                DEFAULT_TEMPERATURE
            } else {
                r.random_range(0.05..1.0)
            };
            let g = itc_loss(&EmbeddingBatch::new(img.clone(), txt.clone(), tau).expect("valid"))
                .expect("non-zero rows")
                .grad;
            let ni = numeric_gradient(&img, |x| {
                itc_loss(&EmbeddingBatch::new(x.clone(), txt.clone(), tau).unwrap()).unwrap().loss
            });
            let nt = numeric_gradient(&txt, |x| {
                itc_loss(&EmbeddingBatch::new(img.clone(), x.clone(), tau).unwrap()).unwrap().loss
            });
            max_relative_error(&g.image, &ni).max(max_relative_error(&g.text, &nt))
        }
        Kernel::Itm => {
            let m = r.random_range(1..16);
            let p: Vec<f64> = (0..m).map(|_| r.random_range(0.05..0.95)).collect();
            let y: Vec<u8> = (0..m).map(|_| r.random_range(0..2)).collect();
            let a = Array2::from_shape_vec((1, m), itm_loss(&p, &y).expect("valid").grad).expect("shape");
            let x = Array2::from_shape_vec((1, m), p).expect("shape");
            let n = numeric_gradient(&x, |x| itm_loss(x.as_slice().unwrap(), &y).unwrap().loss);
            max_relative_error(&a, &n)
        }
    }
}

/// Check `instances` random instances of `kernel` drawn from `seed`.
pub fn check_kernel(kernel: Kernel, instances: usize, seed: u64) -> GradReport {
    let mut r = rng::seeded(rng::derive_seed(seed, kernel as u64));
    let max_rel_error = (0..instances)
        .map(|_| check_instance(kernel, &mut r))
        .fold(0.0, f64::max);
    GradReport {
        kernel,
        instances,
        max_rel_error,
    }
}
