//! Direct loop implementations of the cluster validity indices, written
//! against plain nested vectors.
#![allow(dead_code)]

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn distinct(labels: &[usize]) -> Vec<usize> {
    let mut out = labels.to_vec();
    out.sort_unstable();
    out.dedup();
    out
}

fn centroid(points: &[Vec<f64>], labels: &[usize], label: usize) -> Vec<f64> {
    let d = points[0].len();
    let mut c = vec![0.0; d];
    let mut count = 0.0;
    for (p, &l) in points.iter().zip(labels) {
        if l == label {
            for t in 0..d {
                c[t] += p[t];
            }
            count += 1.0;
        }
    }
    c.iter().map(|v| v / count).collect()
}

pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let clusters = distinct(labels);
    let mut total = 0.0;
    for i in 0..n {
        let own_size = labels.iter().filter(|&&l| l == labels[i]).count();
        if own_size == 1 {
            continue;
        }
        let mut a = 0.0;
        for j in 0..n {
            if j != i && labels[j] == labels[i] {
                a += dist(&points[i], &points[j]);
            }
        }
        a /= (own_size - 1) as f64;
        let mut b = f64::INFINITY;
        for &c in &clusters {
            if c == labels[i] {
                continue;
            }
            let mut sum = 0.0;
            let mut count = 0;
            for j in 0..n {
                if labels[j] == c {
                    sum += dist(&points[i], &points[j]);
                    count += 1;
                }
            }
            b = b.min(sum / count as f64);
        }
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

pub fn calinski_harabasz(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let clusters = distinct(labels);
    let k = clusters.len();
    let mut mean = vec![0.0; d];
    for p in points {
        for t in 0..d {
            mean[t] += p[t] / n as f64;
        }
    }
    let mut between = 0.0;
    let mut within = 0.0;
    for &c in &clusters {
        let mu = centroid(points, labels, c);
        let size = labels.iter().filter(|&&l| l == c).count() as f64;
        between += size * dist(&mu, &mean).powi(2);
        for (p, &l) in points.iter().zip(labels) {
            if l == c {
                within += dist(p, &mu).powi(2);
            }
        }
    }
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

pub fn davies_bouldin(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let clusters = distinct(labels);
    let k = clusters.len();
    let centroids: Vec<Vec<f64>> = clusters.iter().map(|&c| centroid(points, labels, c)).collect();
    let scatter: Vec<f64> = clusters
        .iter()
        .zip(&centroids)
        .map(|(&c, mu)| {
            let members: Vec<&Vec<f64>> = points.iter().zip(labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            members.iter().map(|p| dist(p, mu)).sum::<f64>() / members.len() as f64
        })
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i != j {
                worst = worst.max((scatter[i] + scatter[j]) / dist(&centroids[i], &centroids[j]));
            }
        }
        total += worst;
    }
    total / k as f64
}

/// Minimum inertia over every assignment of the points to `k` non-empty
/// clusters.
pub fn exhaustive_min_inertia(points: &[Vec<f64>], k: usize) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    loop {
        if distinct(&labels).len() == k {
            let j: f64 = (0..k)
                .map(|c| {
                    let mu = centroid(points, &labels, c);
                    points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| dist(p, &mu).powi(2)).sum::<f64>()
                })
                .sum();
            best = best.min(j);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            labels[pos] += 1;
            if labels[pos] < k {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}
