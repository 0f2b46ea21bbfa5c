//! Brute-force references for the metrics and the loss gradients.

use cslid_core::LossMode;

/// Metrics computed directly from 0/1 indicator matrices `y[n][l]` and
/// `p[n][l]`.
pub struct MetricsOracle {
    pub exact: f64,
    pub hamming: f64,
    pub fpr: Option<f64>,
    pub fpr_included: usize,
    pub fpr_excluded: usize,
    pub precision: Vec<Option<f64>>,
    pub recall: Vec<Option<f64>>,
    pub macro_precision: Option<f64>,
    pub macro_recall: Option<f64>,
    pub undefined_precision: usize,
    pub undefined_recall: usize,
    pub empty_rate: f64,
    pub cs_empty_rate: f64,
    pub unique: usize,
    pub mean_preds: f64,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn metrics(y: &[Vec<u8>], p: &[Vec<u8>], l: usize) -> MetricsOracle {
    let n = y.len();
    let exact = (0..n).filter(|&i| y[i] == p[i]).count() as f64 / n as f64;
    let mut wrong = 0usize;
    for i in 0..n {
        for k in 0..l {
            wrong += usize::from(y[i][k] != p[i][k]);
        }
    }
    let mut fprs = vec![];
    let (mut precision, mut recall) = (vec![], vec![]);
    for k in 0..l {
        let count = |gy: u8, gp: u8| (0..n).filter(|&i| y[i][k] == gy && p[i][k] == gp).count();
        let (tp, fp, fn_, tn) = (count(1, 1), count(0, 1), count(1, 0), count(0, 0));
        if fp + tn > 0 {
            fprs.push(fp as f64 / (fp + tn) as f64);
        }
        precision.push((tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64));
        recall.push((tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64));
    }
    let defined = |v: &[Option<f64>]| v.iter().flatten().copied().collect::<Vec<f64>>();
    let size = |r: &Vec<u8>| r.iter().map(|&b| b as usize).sum::<usize>();
    let empty = (0..n).filter(|&i| size(&p[i]) == 0).count();
    let cs: Vec<usize> = (0..n).filter(|&i| size(&y[i]) >= 2).collect();
    let cs_empty = cs.iter().filter(|&&i| size(&p[i]) == 0).count();
    MetricsOracle {
        exact,
        hamming: wrong as f64 / (n * l) as f64,
        fpr: mean(&fprs),
        fpr_included: fprs.len(),
        fpr_excluded: l - fprs.len(),
        macro_precision: mean(&defined(&precision)),
        macro_recall: mean(&defined(&recall)),
        undefined_precision: precision.iter().filter(|v| v.is_none()).count(),
        undefined_recall: recall.iter().filter(|v| v.is_none()).count(),
        precision,
        recall,
        empty_rate: empty as f64 / n as f64,
        cs_empty_rate: if cs.is_empty() {
            0.0
        } else {
            cs_empty as f64 / cs.len() as f64
        },
        unique: (0..l).filter(|&k| (0..n).any(|i| p[i][k] == 1)).count(),
        mean_preds: (0..n).map(|i| size(&p[i])).sum::<usize>() as f64 / n as f64,
    }
}

/// A single example through a tiny model, all in `f64`.
pub struct GradCase {
    pub dim: usize,
    pub emb: Vec<f64>,
    pub out: Vec<f64>,
    pub bag: Vec<u32>,
    pub gold: Vec<usize>,
    pub mode: LossMode,
}

/// Log-sum-exp cross-entropy or softplus binary cross-entropy, written
/// without the library's loss code.
pub fn loss(c: &GradCase, emb: &[f64], out: &[f64]) -> f64 {
    let mut h = vec![0.0; c.dim];
    for &i in &c.bag {
        for j in 0..c.dim {
            h[j] += emb[i as usize * c.dim + j];
        }
    }
    for x in &mut h {
        *x /= c.bag.len() as f64;
    }
    let z: Vec<f64> = out
        .chunks(c.dim)
        .map(|row| (0..c.dim).map(|j| row[j] * h[j]).sum())
        .collect();
    match c.mode {
        LossMode::SoftmaxCe => {
            let m = z.iter().cloned().fold(f64::MIN, f64::max);
            m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - z[c.gold[0]]
        }
        LossMode::SigmoidBce => z
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let y = if c.gold.contains(&k) { 1.0 } else { 0.0 };
                v.max(0.0) + (-v.abs()).exp().ln_1p() - y * v
            })
            .sum(),
    }
}

/// Population mean and standard deviation by the two-pass formula.
pub fn mean_sigma(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mu = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    (mu, var.sqrt())
}
