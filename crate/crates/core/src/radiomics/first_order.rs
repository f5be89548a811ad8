use crate::radiomics::{log2e, DiscreteStack, Family, FamilyValues};
use crate::volume::GrayVolume;

pub const NAMES: &[&str] = &[
    "Energy",
    "Entropy",
    "InterquartileRange",
    "Kurtosis",
    "Maximum",
    "Mean",
    "MeanAbsoluteDeviation",
    "Median",
    "Minimum",
    "Percentile10",
    "Percentile90",
    "Range",
    "RobustMeanAbsoluteDeviation",
    "RootMeanSquared",
    "Skewness",
    "TotalEnergy",
    "Uniformity",
    "Variance",
];

/// Linear-interpolated percentile of sorted data, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Intensity statistics over the raw gray values. Entropy and Uniformity use
/// the discretized histogram. Variance is the population variance; Skewness
/// and Kurtosis (not excess) are 0 when the variance is 0.
pub fn first_order(image: &GrayVolume, discrete: &DiscreteStack) -> FamilyValues {
    let mut raw = image.voxels().to_vec();
    raw.sort_unstable();
    let x: Vec<f64> = raw.iter().map(|&v| v as f64).collect();
    let n = x.len() as f64;

    let energy: f64 = x.iter().map(|v| v * v).sum();
    let mean = x.iter().sum::<f64>() / n;
    let central = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let m2 = central(2);
    let (skewness, kurtosis) = if m2 > 0.0 {
        (central(3) / m2.powf(1.5), central(4) / (m2 * m2))
    } else {
        (0.0, 0.0)
    };
    let mad = x.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;

    let p10 = percentile(&x, 0.10);
    let p90 = percentile(&x, 0.90);
    let robust: Vec<f64> = x.iter().copied().filter(|&v| v >= p10 && v <= p90).collect();
    let robust_mean = robust.iter().sum::<f64>() / robust.len() as f64;
    let rmad = robust.iter().map(|v| (v - robust_mean).abs()).sum::<f64>() / robust.len() as f64;

    let mut hist = vec![0usize; discrete.ng as usize + 1];
    for &l in &discrete.levels {
        hist[l as usize] += 1;
    }
    let probs = hist.iter().filter(|&&c| c > 0).map(|&c| c as f64 / n);
    let (entropy, uniformity) = probs.fold((0.0, 0.0), |(e, u), p| (e - p * log2e(p), u + p * p));

    let (min, max) = (x[0], x[x.len() - 1]);
    FamilyValues::from_pairs(
        Family::FirstOrder,
        &[
            ("Energy", energy),
            ("Entropy", entropy),
            ("InterquartileRange", percentile(&x, 0.75) - percentile(&x, 0.25)),
            ("Kurtosis", kurtosis),
            ("Maximum", max),
            ("Mean", mean),
            ("MeanAbsoluteDeviation", mad),
            ("Median", percentile(&x, 0.5)),
            ("Minimum", min),
            ("Percentile10", p10),
            ("Percentile90", p90),
            ("Range", max - min),
            ("RobustMeanAbsoluteDeviation", rmad),
            ("RootMeanSquared", (energy / n).sqrt()),
            ("Skewness", skewness),
            ("TotalEnergy", energy * image.spacing().voxel_volume()),
            ("Uniformity", uniformity),
            ("Variance", m2),
        ],
    )
}
