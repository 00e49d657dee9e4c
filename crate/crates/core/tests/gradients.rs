//! Analytic gradients against central differences of independently written
//! reference losses.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tagmine::losskit::gradcheck::{check_kernel, Kernel};
use tagmine::losskit::{
    asl_loss, bce_loss, itc_loss, itm_loss, lm_loss, EmbeddingBatch, FocusParams, LabelMatrix, ProbMatrix,
    TokenBatch,
};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const INSTANCES: usize = 150;

type Mat = Vec<Vec<f64>>;

fn rel(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn fd(x: &Mat, f: &dyn Fn(&Mat) -> f64) -> Mat {
    let mut out = x.clone();
    let mut y = x.clone();
    for i in 0..x.len() {
        for j in 0..x[i].len() {
            y[i][j] = x[i][j] + H;
            let up = f(&y);
            y[i][j] = x[i][j] - H;
            let down = f(&y);
            y[i][j] = x[i][j];
            out[i][j] = (up - down) / (2.0 * H);
        }
    }
    out
}

fn worst(analytic: &Array2<f64>, numeric: &Mat) -> f64 {
    let mut w: f64 = 0.0;
    for (i, row) in numeric.iter().enumerate() {
        for (j, &n) in row.iter().enumerate() {
            w = w.max(rel(analytic[[i, j]], n));
        }
    }
    w
}

fn arr(x: &Mat) -> Array2<f64> {
    Array2::from_shape_fn((x.len(), x[0].len()), |(i, j)| x[i][j])
}

fn lse(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Labels 1, 0 or -1 (ignored).
fn ref_asl(y: &[Vec<i8>], p: &Mat, gp: f64, gn: f64) -> f64 {
    let mut s = 0.0;
    for (yr, pr) in y.iter().zip(p) {
        for (&yc, &pc) in yr.iter().zip(pr) {
            s += match yc {
                1 => -(1.0 - pc).powf(gp) * pc.ln(),
                0 => -pc.powf(gn) * (1.0 - pc).ln(),
                _ => 0.0,
            };
        }
    }
    s / y.len() as f64
}

fn ref_lm(logits: &Mat, targets: &[usize], pad: usize) -> f64 {
    let scored: Vec<usize> = (0..targets.len()).filter(|&i| targets[i] != pad).collect();
    scored
        .iter()
        .map(|&i| lse(&logits[i]) - logits[i][targets[i]])
        .sum::<f64>()
        / scored.len() as f64
}

fn ref_itc(img: &Mat, txt: &Mat, tau: f64) -> f64 {
    let unit = |v: &Vec<f64>| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect::<Vec<_>>()
    };
    let (iu, tu): (Mat, Mat) = (img.iter().map(unit).collect(), txt.iter().map(unit).collect());
    let b = img.len();
    let s: Mat = (0..b)
        .map(|i| {
            (0..b)
                .map(|j| iu[i].iter().zip(&tu[j]).map(|(a, c)| a * c).sum::<f64>() / tau)
                .collect()
        })
        .collect();
    let mut i2t = 0.0;
    let mut t2i = 0.0;
    for i in 0..b {
        i2t += lse(&s[i]) - s[i][i];
        let col: Vec<f64> = (0..b).map(|j| s[j][i]).collect();
        t2i += lse(&col) - s[i][i];
    }
    (i2t / b as f64 + t2i / b as f64) / 2.0
}

fn ref_itm(p: &[f64], y: &[u8]) -> f64 {
    p.iter()
        .zip(y)
        .map(|(&p, &y)| if y == 1 { -p.ln() } else { -(1.0 - p).ln() })
        .sum::<f64>()
        / p.len() as f64
}

fn probs(r: &mut ChaCha8Rng, b: usize, c: usize) -> Mat {
    (0..b).map(|_| (0..c).map(|_| r.random_range(0.02..0.98)).collect()).collect()
}

fn codes(r: &mut ChaCha8Rng, b: usize, c: usize) -> Vec<Vec<i8>> {
    let mut y: Vec<Vec<i8>> = (0..b)
        .map(|_| (0..c).map(|_| [-1, 0, 0, 1, 1][r.random_range(0..5)]).collect())
        .collect();
    y[b - 1][c - 1] = 1;
    y
}

fn label_matrix(y: &[Vec<i8>]) -> LabelMatrix {
    let rows: Vec<&[i8]> = y.iter().map(Vec::as_slice).collect();
    LabelMatrix::from_rows(&rows).unwrap()
}

fn gaussian(r: &mut ChaCha8Rng, b: usize, d: usize, scale: f64) -> Mat {
    (0..b)
        .map(|_| (0..d).map(|_| {
            let z: f64 = StandardNormal.sample(r);
            scale * z
        }).collect::<Vec<f64>>())
        .collect()
}

#[test]
fn bce_matches_reference() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let mut w: f64 = 0.0;
    for _ in 0..INSTANCES {
        let (b, c) = (r.random_range(1..6), r.random_range(1..8));
        let (p, y) = (probs(&mut r, b, c), codes(&mut r, b, c));
        let got = bce_loss(&label_matrix(&y), &ProbMatrix::new(arr(&p)).unwrap()).unwrap();
        assert!(rel(got.loss, ref_asl(&y, &p, 0.0, 0.0)) < 1e-12);
        w = w.max(worst(&got.grad, &fd(&p, &|x| ref_asl(&y, x, 0.0, 0.0))));
    }
    assert!(w < TOL, "bce max rel error {w:e}");
}

#[test]
fn asl_matches_reference() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut w: f64 = 0.0;
    for _ in 0..INSTANCES {
        let (b, c) = (r.random_range(1..6), r.random_range(1..8));
        let (p, y) = (probs(&mut r, b, c), codes(&mut r, b, c));
        let (gp, gn) = (r.random_range(0.0..3.0), r.random_range(0.0..6.0));
        let got = asl_loss(&label_matrix(&y), &ProbMatrix::new(arr(&p)).unwrap(), FocusParams::new(gp, gn).unwrap())
            .unwrap();
        assert!(rel(got.loss, ref_asl(&y, &p, gp, gn)) < 1e-12);
        w = w.max(worst(&got.grad, &fd(&p, &|x| ref_asl(&y, x, gp, gn))));
    }
    assert!(w < TOL, "asl max rel error {w:e}");
}

#[test]
fn asl_without_focusing_is_bce() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..INSTANCES {
        let (b, c) = (r.random_range(1..6), r.random_range(1..8));
        let (p, y) = (probs(&mut r, b, c), codes(&mut r, b, c));
        let (lm, pm) = (label_matrix(&y), ProbMatrix::new(arr(&p)).unwrap());
        let a = asl_loss(&lm, &pm, FocusParams::new(0.0, 0.0).unwrap()).unwrap();
        let e = bce_loss(&lm, &pm).unwrap();
        assert!((a.loss - e.loss).abs() <= 1e-12);
        assert!(a.grad.iter().zip(e.grad.iter()).all(|(x, y)| (x - y).abs() <= 1e-12));
    }
}

#[test]
fn lm_matches_reference() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let mut w: f64 = 0.0;
    for _ in 0..INSTANCES {
        let (n, v) = (r.random_range(1..7), r.random_range(2..9));
        let logits = gaussian(&mut r, n, v, 2.0);
        // PAD is either an ordinary vocabulary id or one past the end.
        let pad = r.random_range(0..=v);
        let mut targets: Vec<usize> = (0..n)
            .map(|_| if r.random_bool(0.25) { pad } else { r.random_range(0..v) })
            .collect();
        targets[0] = if pad == 0 { 1 } else { 0 };
        let got = lm_loss(&TokenBatch::new(arr(&logits), targets.clone(), pad).unwrap()).unwrap();
        assert!(rel(got.loss, ref_lm(&logits, &targets, pad)) < 1e-12);
        w = w.max(worst(&got.grad, &fd(&logits, &|x| ref_lm(x, &targets, pad))));
    }
    assert!(w < TOL, "lm max rel error {w:e}");
}

#[test]
fn itc_matches_reference() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let mut w: f64 = 0.0;
    for _ in 0..INSTANCES {
        let (b, d) = (r.random_range(1..6), r.random_range(2..10));
        let tau = [0.07, 0.1, 0.5, 1.0][r.random_range(0..4)];
        let (img, txt) = (gaussian(&mut r, b, d, 1.0), gaussian(&mut r, b, d, 1.0));
        let got = itc_loss(&EmbeddingBatch::new(arr(&img), arr(&txt), tau).unwrap()).unwrap();
        assert!(rel(got.loss, ref_itc(&img, &txt, tau)) < 1e-10);
        w = w.max(worst(&got.grad.image, &fd(&img, &|x| ref_itc(x, &txt, tau))));
        w = w.max(worst(&got.grad.text, &fd(&txt, &|x| ref_itc(&img, x, tau))));
    }
    assert!(w < TOL, "itc max rel error {w:e}");
}

#[test]
fn itm_matches_reference() {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let mut w: f64 = 0.0;
    for _ in 0..INSTANCES {
        let m = r.random_range(1..20);
        let p = probs(&mut r, 1, m);
        let y: Vec<u8> = (0..m).map(|_| r.random_range(0..2)).collect();
        let got = itm_loss(&p[0], &y).unwrap();
        assert!(rel(got.loss, ref_itm(&p[0], &y)) < 1e-12);
        let g = Array2::from_shape_vec((1, m), got.grad).unwrap();
        w = w.max(worst(&g, &fd(&p, &|x| ref_itm(&x[0], &y))));
    }
    assert!(w < TOL, "itm max rel error {w:e}");
}

#[test]
fn builtin_checker_passes_every_kernel() {
    for k in Kernel::ALL {
        let report = check_kernel(k, 100, 7);
        assert!(report.passed(), "{report}");
        assert_eq!(report.instances, 100);
    }
}
