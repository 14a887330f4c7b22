//! Static kd-tree over points of a runtime dimension, squared Euclidean
//! distance, ties resolved to the lowest point index.

const LEAF: usize = 8;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdTree {
    k: usize,
    coords: Vec<f64>,
    perm: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
pub fn sq_euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl KdTree {
    /// `coords` holds `n` points of length `k`, row after row.
    pub fn build(k: usize, coords: Vec<f64>) -> Self {
        assert!(k > 0 && coords.len() % k == 0);
        let n = coords.len() / k;
        let mut tree = KdTree { k, coords, perm: (0..n).collect(), nodes: Vec::new() };
        if n > 0 {
            tree.build_node(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.k..(i + 1) * self.k]
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let k = self.k;
        let mut axis = 0;
        let mut spread = -1.0;
        for a in 0..k {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &p in &self.perm[start..end] {
                let v = self.coords[p * k + a];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > spread {
                spread = hi - lo;
                axis = a;
            }
        }
        if spread <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = start + (end - start) / 2;
        let coords = &self.coords;
        self.perm[start..end].select_nth_unstable_by(mid - start, |&p, &q| {
            coords[p * k + axis].total_cmp(&coords[q * k + axis]).then(p.cmp(&q))
        });
        let value = self.coords[self.perm[mid] * k + axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    /// `(index, squared distance)` of the nearest point.
    pub fn nearest(&self, q: &[f64]) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, q: &[f64], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &p in &self.perm[start..end] {
                    let d = sq_euclid(self.point(p), q);
                    if d < best.1 || (d == best.1 && p < best.0) {
                        *best = (p, d);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }

    /// Linear scan with the same distance and tie rule.
    pub fn nearest_brute_force(&self, q: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for p in 0..self.len() {
            let d = sq_euclid(self.point(p), q);
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((p, d));
            }
        }
        best
    }
}
