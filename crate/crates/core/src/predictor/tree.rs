//! CART-style regression tree grown by greedy variance reduction.

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// `None` for leaves.
    pub feature: Option<usize>,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub value: f64,
}

impl Node {
    fn leaf(value: f64) -> Self {
        Node {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub(crate) nodes: Vec<Node>,
}

/// Row-major training matrix.
pub(crate) struct Samples<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub dim: usize,
}

impl Samples<'_> {
    #[inline]
    fn at(&self, row: usize, f: usize) -> f64 {
        self.x[row * self.dim + f]
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    pub(crate) fn grow(
        data: &Samples<'_>,
        rows: Vec<usize>,
        max_depth: usize,
        min_samples_leaf: usize,
    ) -> Self {
        let mut tree = RegressionTree { nodes: Vec::new() };
        tree.grow_node(data, rows, 0, max_depth, min_samples_leaf.max(1));
        tree
    }

    fn grow_node(
        &mut self,
        data: &Samples<'_>,
        rows: Vec<usize>,
        depth: usize,
        max_depth: usize,
        min_leaf: usize,
    ) -> usize {
        let mean = rows.iter().map(|&r| data.y[r]).sum::<f64>() / rows.len() as f64;
        let id = self.nodes.len();
        self.nodes.push(Node::leaf(mean));
        if depth >= max_depth || rows.len() < 2 * min_leaf {
            return id;
        }
        let Some(split) = best_split(data, &rows, min_leaf) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| data.at(r, split.feature) <= split.threshold);
        let l = self.grow_node(data, left, depth + 1, max_depth, min_leaf);
        let r = self.grow_node(data, right, depth + 1, max_depth, min_leaf);
        let node = &mut self.nodes[id];
        node.feature = Some(split.feature);
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        id
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            let n = &self.nodes[i];
            match n.feature {
                None => return n.value,
                Some(f) => i = if x[f] <= n.threshold { n.left } else { n.right },
            }
        }
    }
}

/// Highest variance reduction; ties go to the lower feature index, then the
/// lower threshold, because candidates are scanned in that order and only a
/// strictly better gain replaces the incumbent.
fn best_split(data: &Samples<'_>, rows: &[usize], min_leaf: usize) -> Option<Split> {
    let n = rows.len();
    let total: f64 = rows.iter().map(|&r| data.y[r]).sum();
    let total_sq: f64 = rows.iter().map(|&r| data.y[r] * data.y[r]).sum();
    let parent_sse = total_sq - total * total / n as f64;
    if parent_sse <= 1e-12 {
        return None;
    }
    let mut best: Option<Split> = None;
    let mut order = rows.to_vec();
    for f in 0..data.dim {
        order.sort_by(|&a, &b| data.at(a, f).total_cmp(&data.at(b, f)));
        let mut sum_l = 0.0;
        let mut sq_l = 0.0;
        for i in 0..n - 1 {
            let y = data.y[order[i]];
            sum_l += y;
            sq_l += y * y;
            let n_l = i + 1;
            let n_r = n - n_l;
            if n_l < min_leaf || n_r < min_leaf {
                continue;
            }
            let lo = data.at(order[i], f);
            let hi = data.at(order[i + 1], f);
            if lo >= hi {
                continue;
            }
            let sum_r = total - sum_l;
            let sq_r = total_sq - sq_l;
            let sse = (sq_l - sum_l * sum_l / n_l as f64) + (sq_r - sum_r * sum_r / n_r as f64);
            let gain = parent_sse - sse;
            if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}
