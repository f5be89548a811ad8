//! Brute-force reference implementations for the texture families. Every
//! matrix is built by enumerating voxel pairs (or whole lines) directly, and
//! every feature is written from its textbook definition over dense
//! matrices. Nothing here calls into the library's texture code.

#![allow(dead_code)]

use std::collections::BTreeMap;

use nalgebra::DMatrix;

pub const EPS: f64 = 1e-12;

fn lg(p: f64) -> f64 {
    (p + EPS).log2()
}

/// Discretized stack: dims (nz, ny, nx) and levels starting at 1.
#[derive(Clone, Debug)]
pub struct Grid {
    pub dims: [usize; 3],
    pub levels: Vec<u32>,
}

impl Grid {
    pub fn coords(&self) -> Vec<[i64; 3]> {
        let [nz, ny, nx] = self.dims;
        let mut out = Vec::new();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    out.push([z as i64, y as i64, x as i64]);
                }
            }
        }
        out
    }

    pub fn ng(&self) -> usize {
        *self.levels.iter().max().unwrap() as usize
    }

    fn at(&self, c: [i64; 3]) -> Option<u32> {
        let [nz, ny, nx] = self.dims;
        if c.iter().any(|&v| v < 0) {
            return None;
        }
        let (z, y, x) = (c[0] as usize, c[1] as usize, c[2] as usize);
        if z >= nz || y >= ny || x >= nx {
            return None;
        }
        Some(self.levels[(z * ny + y) * nx + x])
    }
}

/// Independent binning: walk the bin edges from the minimum.
pub fn discretize_width(values: &[u8], width: f64) -> Vec<u32> {
    let min = *values.iter().min().unwrap() as f64;
    values
        .iter()
        .map(|&v| {
            let mut level = 1u32;
            let mut upper = min + width;
            while v as f64 >= upper {
                level += 1;
                upper += width;
            }
            level
        })
        .collect()
}

pub const DIRECTIONS: [[i64; 3]; 13] = [
    [0, 0, 1],
    [0, 1, 0],
    [0, 1, 1],
    [0, 1, -1],
    [1, 0, 0],
    [1, 0, 1],
    [1, 0, -1],
    [1, 1, 0],
    [1, -1, 0],
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
];

// ---------------------------------------------------------------- GLCM

/// Dense `ng x ng` symmetric co-occurrence counts by O(N^2) pair scan.
pub fn glcm_counts(g: &Grid, offset: [i64; 3]) -> Vec<Vec<u64>> {
    let ng = g.ng();
    let mut m = vec![vec![0u64; ng]; ng];
    let cs = g.coords();
    for a in &cs {
        for b in &cs {
            let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            if d == offset {
                let (la, lb) = (g.at(*a).unwrap() as usize - 1, g.at(*b).unwrap() as usize - 1);
                m[la][lb] += 1;
                m[lb][la] += 1;
            }
        }
    }
    m
}

pub fn glcm_feature_map(counts: &[Vec<u64>]) -> BTreeMap<&'static str, f64> {
    let ng = counts.len();
    let total: u64 = counts.iter().flatten().sum();
    let p: Vec<Vec<f64>> = counts
        .iter()
        .map(|r| r.iter().map(|&c| c as f64 / total as f64).collect())
        .collect();
    let i_of = |k: usize| (k + 1) as f64;
    let px: Vec<f64> = (0..ng).map(|i| (0..ng).map(|j| p[i][j]).sum()).collect();
    let py: Vec<f64> = (0..ng).map(|j| (0..ng).map(|i| p[i][j]).sum()).collect();
    let mux: f64 = (0..ng).map(|i| i_of(i) * px[i]).sum();
    let muy: f64 = (0..ng).map(|j| i_of(j) * py[j]).sum();
    let sigx = (0..ng).map(|i| px[i] * (i_of(i) - mux).powi(2)).sum::<f64>().sqrt();
    let sigy = (0..ng).map(|j| py[j] * (i_of(j) - muy).powi(2)).sum::<f64>().sqrt();

    let sum_over = |f: &dyn Fn(f64, f64, f64) -> f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..ng {
            for j in 0..ng {
                acc += f(i_of(i), i_of(j), p[i][j]);
            }
        }
        acc
    };

    // p_{x+y}(k) for k = 2..=2ng, p_{x-y}(k) for k = 0..ng-1
    let pxy_sum: Vec<(f64, f64)> = (2..=2 * ng)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..ng {
                for j in 0..ng {
                    if i + j + 2 == k {
                        s += p[i][j];
                    }
                }
            }
            (k as f64, s)
        })
        .collect();
    let pxy_diff: Vec<(f64, f64)> = (0..ng)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..ng {
                for j in 0..ng {
                    if i.abs_diff(j) == k {
                        s += p[i][j];
                    }
                }
            }
            (k as f64, s)
        })
        .collect();

    let ent = |v: &[f64]| -> f64 { -v.iter().map(|&q| q * lg(q)).sum::<f64>() };
    let hx = ent(&px);
    let hy = ent(&py);
    let hxy = -sum_over(&|_, _, q| q * lg(q));
    let mut hxy1 = 0.0;
    let mut hxy2 = 0.0;
    for i in 0..ng {
        for j in 0..ng {
            hxy1 -= p[i][j] * lg(px[i] * py[j]);
            hxy2 -= px[i] * py[j] * lg(px[i] * py[j]);
        }
    }

    let da: f64 = pxy_diff.iter().map(|(k, q)| k * q).sum();
    let ngf = ng as f64;
    let mut m = BTreeMap::new();
    m.insert("Autocorrelation", sum_over(&|i, j, q| i * j * q));
    m.insert("JointAverage", mux);
    m.insert("ClusterProminence", sum_over(&|i, j, q| (i + j - mux - muy).powi(4) * q));
    m.insert("ClusterShade", sum_over(&|i, j, q| (i + j - mux - muy).powi(3) * q));
    m.insert("ClusterTendency", sum_over(&|i, j, q| (i + j - mux - muy).powi(2) * q));
    m.insert("Contrast", sum_over(&|i, j, q| (i - j).powi(2) * q));
    let corr = if sigx * sigy == 0.0 {
        1.0
    } else {
        (sum_over(&|i, j, q| i * j * q) - mux * muy) / (sigx * sigy)
    };
    m.insert("Correlation", corr);
    m.insert("DifferenceAverage", da);
    m.insert("DifferenceEntropy", -pxy_diff.iter().map(|(_, q)| q * lg(*q)).sum::<f64>());
    m.insert("DifferenceVariance", pxy_diff.iter().map(|(k, q)| (k - da).powi(2) * q).sum());
    m.insert("JointEnergy", sum_over(&|_, _, q| q * q));
    m.insert("JointEntropy", hxy);
    let div = hx.max(hy);
    m.insert("Imc1", if div.abs() > 1e-10 { (hxy - hxy1) / div } else { 0.0 });
    m.insert(
        "Imc2",
        if hxy2 > hxy {
            (1.0 - (-2.0 * (hxy2 - hxy)).exp()).sqrt()
        } else {
            0.0
        },
    );
    m.insert("Idm", sum_over(&|i, j, q| q / (1.0 + (i - j).powi(2))));
    m.insert("Idmn", sum_over(&|i, j, q| q / (1.0 + (i - j).powi(2) / (ngf * ngf))));
    m.insert("Id", sum_over(&|i, j, q| q / (1.0 + (i - j).abs())));
    m.insert("Idn", sum_over(&|i, j, q| q / (1.0 + (i - j).abs() / ngf)));
    m.insert(
        "InverseVariance",
        pxy_diff.iter().filter(|(k, _)| *k > 0.0).map(|(k, q)| q / (k * k)).sum(),
    );
    m.insert("MaximumProbability", p.iter().flatten().copied().fold(0.0, f64::max));
    m.insert("SumAverage", pxy_sum.iter().map(|(k, q)| k * q).sum());
    m.insert("SumEntropy", -pxy_sum.iter().map(|(_, q)| q * lg(*q)).sum::<f64>());
    m.insert("SumSquares", sum_over(&|i, _, q| (i - mux).powi(2) * q));
    m.insert("MCC", mcc_general(&p, &px, &py));
    m
}

/// Second-largest eigenvalue of Q built explicitly, via a general
/// (non-symmetric) eigen-solver.
fn mcc_general(p: &[Vec<f64>], px: &[f64], py: &[f64]) -> f64 {
    let ng = p.len();
    let keep: Vec<usize> = (0..ng).filter(|&i| px[i] > 0.0).collect();
    if keep.len() < 2 {
        return 1.0;
    }
    let k = keep.len();
    let q = DMatrix::from_fn(k, k, |r, c| {
        let (i, j) = (keep[r], keep[c]);
        keep.iter().map(|&m| p[i][m] * p[j][m] / (px[i] * py[m])).sum::<f64>()
    });
    let mut ev: Vec<f64> = q.complex_eigenvalues().iter().map(|c| c.re).collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev[1].max(0.0).sqrt()
}

// ---------------------------------------------------------- size matrices

/// Dense (level, size) matrix; `m[i-1][j-1]` counts level i, size j.
pub type Dense = Vec<Vec<u64>>;

pub fn to_sparse(m: &Dense) -> BTreeMap<(u32, u32), u64> {
    let mut out = BTreeMap::new();
    for (i, row) in m.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                out.insert(((i + 1) as u32, (j + 1) as u32), c);
            }
        }
    }
    out
}

/// Runs along `dir`, found by walking each full line from its entry point.
pub fn glrlm_counts(g: &Grid, dir: [i64; 3]) -> Dense {
    let n: usize = g.levels.len();
    let mut m = vec![vec![0u64; n]; g.ng()];
    for c in g.coords() {
        // only start at line entry points
        let prev = [c[0] - dir[0], c[1] - dir[1], c[2] - dir[2]];
        if g.at(prev).is_some() {
            continue;
        }
        let mut line = Vec::new();
        let mut cur = c;
        while let Some(l) = g.at(cur) {
            line.push(l);
            cur = [cur[0] + dir[0], cur[1] + dir[1], cur[2] + dir[2]];
        }
        let mut k = 0;
        while k < line.len() {
            let mut e = k;
            while e + 1 < line.len() && line[e + 1] == line[k] {
                e += 1;
            }
            m[line[k] as usize - 1][e - k] += 1;
            k = e + 1;
        }
    }
    m
}

/// Zones by union-find over every voxel pair within Chebyshev distance 1.
pub fn glszm_counts(g: &Grid) -> Dense {
    let cs = g.coords();
    let n = cs.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let cheb = (0..3).map(|k| (cs[a][k] - cs[b][k]).abs()).max().unwrap();
            if cheb <= 1 && g.levels[a] == g.levels[b] {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut sizes: BTreeMap<usize, (u32, usize)> = BTreeMap::new();
    for a in 0..n {
        let r = find(&mut parent, a);
        let e = sizes.entry(r).or_insert((g.levels[a], 0));
        e.1 += 1;
    }
    let mut m = vec![vec![0u64; n]; g.ng()];
    for (_, (level, size)) in sizes {
        m[level as usize - 1][size - 1] += 1;
    }
    m
}

pub fn gldm_counts(g: &Grid, distance: i64) -> Dense {
    let cs = g.coords();
    let n = cs.len();
    let max_dep = (2 * distance + 1).pow(3) as usize;
    let mut m = vec![vec![0u64; max_dep]; g.ng()];
    for a in 0..n {
        let mut dep = 1;
        for b in 0..n {
            if a == b {
                continue;
            }
            let cheb = (0..3).map(|k| (cs[a][k] - cs[b][k]).abs()).max().unwrap();
            if cheb <= distance && g.levels[a] == g.levels[b] {
                dep += 1;
            }
        }
        m[g.levels[a] as usize - 1][dep - 1] += 1;
    }
    m
}

/// Features shared by the run/zone/dependence families, from a dense matrix.
pub fn size_feature_map(m: &Dense, np: usize) -> BTreeMap<&'static str, f64> {
    let nr: f64 = m.iter().flatten().map(|&c| c as f64).sum();
    let mut out = BTreeMap::new();
    let cells = || {
        m.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, &c)| ((i + 1) as f64, (j + 1) as f64, c as f64))
        })
    };
    let s = |f: &dyn Fn(f64, f64) -> f64| cells().map(|(i, j, c)| c * f(i, j)).sum::<f64>() / nr;
    out.insert("short", s(&|_, j| 1.0 / (j * j)));
    out.insert("long", s(&|_, j| j * j));
    out.insert("low", s(&|i, _| 1.0 / (i * i)));
    out.insert("high", s(&|i, _| i * i));
    out.insert("short_low", s(&|i, j| 1.0 / (i * i * j * j)));
    out.insert("short_high", s(&|i, j| i * i / (j * j)));
    out.insert("long_low", s(&|i, j| j * j / (i * i)));
    out.insert("long_high", s(&|i, j| i * i * j * j));
    let row_sums: Vec<f64> = m.iter().map(|r| r.iter().map(|&c| c as f64).sum()).collect();
    let ncols = m[0].len();
    let col_sums: Vec<f64> = (0..ncols).map(|j| m.iter().map(|r| r[j] as f64).sum()).collect();
    let gln = row_sums.iter().map(|v| v * v).sum::<f64>() / nr;
    let sn = col_sums.iter().map(|v| v * v).sum::<f64>() / nr;
    out.insert("gln", gln);
    out.insert("glnn", gln / nr);
    out.insert("sn", sn);
    out.insert("snn", sn / nr);
    out.insert("percentage", nr / np as f64);
    let mu_i = s(&|i, _| i);
    let mu_j = s(&|_, j| j);
    out.insert("gl_var", s(&|i, _| (i - mu_i).powi(2)));
    out.insert("size_var", s(&|_, j| (j - mu_j).powi(2)));
    out.insert("entropy", -cells().map(|(_, _, c)| c / nr * lg(c / nr)).sum::<f64>());
    out
}

// ---------------------------------------------------------------- NGTDM

pub fn ngtdm_table(g: &Grid, distance: i64) -> (Vec<u64>, Vec<f64>) {
    let ng = g.ng();
    let cs = g.coords();
    let (mut n, mut s) = (vec![0u64; ng], vec![0.0; ng]);
    for (a, ca) in cs.iter().enumerate() {
        let mut neigh = Vec::new();
        for (b, cb) in cs.iter().enumerate() {
            if a == b {
                continue;
            }
            let cheb = (0..3).map(|k| (ca[k] - cb[k]).abs()).max().unwrap();
            if cheb <= distance {
                neigh.push(g.levels[b] as f64);
            }
        }
        if neigh.is_empty() {
            continue;
        }
        let avg = neigh.iter().sum::<f64>() / neigh.len() as f64;
        let l = g.levels[a] as usize;
        n[l - 1] += 1;
        s[l - 1] += (l as f64 - avg).abs();
    }
    (n, s)
}

pub fn ngtdm_feature_map(n: &[u64], s: &[f64]) -> BTreeMap<&'static str, f64> {
    let nvp: f64 = n.iter().map(|&v| v as f64).sum();
    let mut out = BTreeMap::new();
    let idx: Vec<usize> = (0..n.len()).filter(|&i| n[i] > 0).collect();
    if idx.is_empty() {
        out.insert("Busyness", 0.0);
        out.insert("Coarseness", 1e6);
        out.insert("Complexity", 0.0);
        out.insert("Contrast", 0.0);
        out.insert("Strength", 0.0);
        return out;
    }
    let p = |i: usize| n[i] as f64 / nvp;
    let lv = |i: usize| (i + 1) as f64;
    let ps: f64 = idx.iter().map(|&i| p(i) * s[i]).sum();
    let ssum: f64 = idx.iter().map(|&i| s[i]).sum();
    let ngp = idx.len() as f64;
    out.insert("Coarseness", if ps == 0.0 { 1e6 } else { 1.0 / ps });
    let mut c = 0.0;
    let mut bd = 0.0;
    let mut cx = 0.0;
    let mut st = 0.0;
    for &i in &idx {
        for &j in &idx {
            c += p(i) * p(j) * (lv(i) - lv(j)).powi(2);
            bd += (lv(i) * p(i) - lv(j) * p(j)).abs();
            cx += (lv(i) - lv(j)).abs() * (p(i) * s[i] + p(j) * s[j]) / (p(i) + p(j));
            st += (p(i) + p(j)) * (lv(i) - lv(j)).powi(2);
        }
    }
    out.insert(
        "Contrast",
        if ngp > 1.0 {
            c / (ngp * (ngp - 1.0)) * ssum / nvp
        } else {
            0.0
        },
    );
    out.insert("Busyness", if bd == 0.0 { 0.0 } else { ps / bd });
    out.insert("Complexity", cx / nvp);
    out.insert("Strength", if ssum == 0.0 { 0.0 } else { st / ssum });
    out
}

// ------------------------------------------------- full 75-feature oracle

fn mean_maps(maps: &[BTreeMap<&'static str, f64>]) -> BTreeMap<&'static str, f64> {
    let mut out = BTreeMap::new();
    for k in maps[0].keys() {
        out.insert(*k, maps.iter().map(|m| m[k]).sum::<f64>() / maps.len() as f64);
    }
    out
}

/// Directions that connect at least one pair of voxels at `step`.
pub fn active_dirs(g: &Grid, step: i64) -> Vec<[i64; 3]> {
    DIRECTIONS
        .iter()
        .map(|d| [d[0] * step, d[1] * step, d[2] * step])
        .filter(|d| {
            let cs = g.coords();
            cs.iter().any(|c| g.at([c[0] + d[0], c[1] + d[1], c[2] + d[2]]).is_some())
        })
        .collect()
}

/// All 75 gray-level features keyed by qualified name.
pub fn gray_features(g: &Grid, distance: i64) -> BTreeMap<String, f64> {
    let np = g.levels.len();
    let mut out = BTreeMap::new();

    let glcm_dirs = active_dirs(g, distance);
    let glcm_maps: Vec<_> = glcm_dirs.iter().map(|&d| glcm_feature_map(&glcm_counts(g, d))).collect();
    for (k, v) in mean_maps(&glcm_maps) {
        out.insert(format!("glcm_{k}"), v);
    }

    let mut run_dirs = active_dirs(g, 1);
    if run_dirs.is_empty() {
        run_dirs.push([0, 0, 1]);
    }
    let run_maps: Vec<_> = run_dirs.iter().map(|&d| size_feature_map(&glrlm_counts(g, d), np)).collect();
    let r = mean_maps(&run_maps);
    for (name, key) in [
        ("GrayLevelNonUniformity", "gln"),
        ("GrayLevelNonUniformityNormalized", "glnn"),
        ("GrayLevelVariance", "gl_var"),
        ("HighGrayLevelRunEmphasis", "high"),
        ("LongRunEmphasis", "long"),
        ("LongRunHighGrayLevelEmphasis", "long_high"),
        ("LongRunLowGrayLevelEmphasis", "long_low"),
        ("LowGrayLevelRunEmphasis", "low"),
        ("RunEntropy", "entropy"),
        ("RunLengthNonUniformity", "sn"),
        ("RunLengthNonUniformityNormalized", "snn"),
        ("RunPercentage", "percentage"),
        ("RunVariance", "size_var"),
        ("ShortRunEmphasis", "short"),
        ("ShortRunHighGrayLevelEmphasis", "short_high"),
        ("ShortRunLowGrayLevelEmphasis", "short_low"),
    ] {
        out.insert(format!("glrlm_{name}"), r[key]);
    }

    let z = size_feature_map(&glszm_counts(g), np);
    for (name, key) in [
        ("GrayLevelNonUniformity", "gln"),
        ("GrayLevelNonUniformityNormalized", "glnn"),
        ("GrayLevelVariance", "gl_var"),
        ("HighGrayLevelZoneEmphasis", "high"),
        ("LargeAreaEmphasis", "long"),
        ("LargeAreaHighGrayLevelEmphasis", "long_high"),
        ("LargeAreaLowGrayLevelEmphasis", "long_low"),
        ("LowGrayLevelZoneEmphasis", "low"),
        ("SizeZoneNonUniformity", "sn"),
        ("SizeZoneNonUniformityNormalized", "snn"),
        ("SmallAreaEmphasis", "short"),
        ("SmallAreaHighGrayLevelEmphasis", "short_high"),
        ("SmallAreaLowGrayLevelEmphasis", "short_low"),
        ("ZoneEntropy", "entropy"),
        ("ZonePercentage", "percentage"),
        ("ZoneVariance", "size_var"),
    ] {
        out.insert(format!("glszm_{name}"), z[key]);
    }

    let d = size_feature_map(&gldm_counts(g, distance), np);
    for (name, key) in [
        ("DependenceEntropy", "entropy"),
        ("DependenceNonUniformity", "sn"),
        ("DependenceNonUniformityNormalized", "snn"),
        ("DependenceVariance", "size_var"),
        ("GrayLevelNonUniformity", "gln"),
        ("GrayLevelVariance", "gl_var"),
        ("HighGrayLevelEmphasis", "high"),
        ("LargeDependenceEmphasis", "long"),
        ("LargeDependenceHighGrayLevelEmphasis", "long_high"),
        ("LargeDependenceLowGrayLevelEmphasis", "long_low"),
        ("LowGrayLevelEmphasis", "low"),
        ("SmallDependenceEmphasis", "short"),
        ("SmallDependenceHighGrayLevelEmphasis", "short_high"),
        ("SmallDependenceLowGrayLevelEmphasis", "short_low"),
    ] {
        out.insert(format!("gldm_{name}"), d[key]);
    }

    let (n, s) = ngtdm_table(g, distance);
    for (k, v) in ngtdm_feature_map(&n, &s) {
        out.insert(format!("ngtdm_{k}"), v);
    }
    out
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    let diff = (a - b).abs();
    diff <= rel * a.abs().max(b.abs()) || diff <= 1e-12
}
