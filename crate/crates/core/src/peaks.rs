//! Local maxima with quadratic sub-grid refinement.

/// Peaks below this fraction of the global maximum are ignored.
pub const DEFAULT_REL_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    /// Refined position on the x axis.
    pub position: f64,
    /// Refined height.
    pub height: f64,
}

/// Local maxima of `y` sampled at `x0 + k * dx` whose height is at least
/// `rel_threshold * max(y)`.
pub fn find_peaks(y: &[f64], x0: f64, dx: f64, rel_threshold: f64) -> Vec<Peak> {
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let ymax = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(ymax > 0.0) {
        return Vec::new();
    }
    let floor = rel_threshold * ymax;
    let mut out = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            // walk across a plateau
            let mut j = i;
            while j + 1 < n - 1 && y[j + 1] == y[i] {
                j += 1;
            }
            if y[j + 1] < y[i] && y[i] >= floor {
                let k = (i + j) / 2;
                let (offset, height) = if i == j {
                    refine(y[i - 1], y[i], y[i + 1])
                } else {
                    (0.0, y[i])
                };
                out.push(Peak {
                    index: k,
                    position: x0 + (k as f64 + offset) * dx,
                    height,
                });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn refine(left: f64, mid: f64, right: f64) -> (f64, f64) {
    let denom = left - 2.0 * mid + right;
    if denom >= 0.0 {
        return (0.0, mid);
    }
    let offset = (0.5 * (left - right) / denom).clamp(-0.5, 0.5);
    (offset, mid - 0.25 * (left - right) * offset)
}

/// The two highest peaks, ordered by position. Equal heights are resolved
/// toward `midpoint`.
pub fn dominant_pair(peaks: &[Peak], midpoint: f64) -> Option<(Peak, Peak)> {
    if peaks.len() < 2 {
        return None;
    }
    let mut sorted = peaks.to_vec();
    sorted.sort_by(|a, b| {
        b.height
            .partial_cmp(&a.height)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                (a.position - midpoint)
                    .abs()
                    .partial_cmp(&(b.position - midpoint).abs())
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
    let (p, q) = (sorted[0], sorted[1]);
    if p.position <= q.position {
        Some((p, q))
    } else {
        Some((q, p))
    }
}
