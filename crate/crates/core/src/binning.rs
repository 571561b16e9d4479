//! Equal-probability binning shared by the curve estimators.

/// Bin assignment of a sample along one axis.
#[derive(Debug, Clone)]
pub(crate) struct Bins {
    /// Strictly increasing edges; bin k is [edges[k], edges[k+1]), the last bin closed.
    pub edges: Vec<f64>,
    pub members: Vec<Vec<usize>>,
    /// Fewer bins than requested because some came out empty.
    pub reduced: bool,
}

impl Bins {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    /// Split `x` at the given candidate edges, merging empty bins into their
    /// neighbours.
    pub fn with_edges(x: &[f64], mut edges: Vec<f64>, requested: usize) -> Bins {
        edges.dedup_by(|a, b| a <= b);
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        edges[0] = edges[0].min(lo);
        let last = edges.len() - 1;
        edges[last] = edges[last].max(hi);
        loop {
            let nb = edges.len() - 1;
            let mut members = vec![Vec::new(); nb];
            for (i, &v) in x.iter().enumerate() {
                let k = edges[1..nb].partition_point(|&e| e <= v);
                members[k].push(i);
            }
            match members.iter().position(Vec::is_empty) {
                Some(k) if nb > 1 => {
                    // Drop the edge shared with a neighbour.
                    let e = if k + 1 < nb { k + 1 } else { k };
                    edges.remove(e);
                }
                _ => {
                    return Bins { reduced: nb < requested, edges, members };
                }
            }
        }
    }

    /// Bins at empirical quantiles of `x`.
    pub fn empirical(x: &[f64], bins: usize) -> Bins {
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        let edges = (0..=bins).map(|k| crate::stats::quantile_sorted(&sorted, k as f64 / bins as f64)).collect();
        Bins::with_edges(x, edges, bins)
    }
}
