//! Static 3D kd-tree over a point slice, leaf-bucketed, for exact nearest
//! neighbour distance queries.

use crate::geometry::Vertex;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
struct Node {
    lo: [f64; 3],
    hi: [f64; 3],
    kind: Kind,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vertex>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn build(points: &[Vertex]) -> Self {
        let mut tree = KdTree { points: points.to_vec(), nodes: Vec::new() };
        if !tree.points.is_empty() {
            tree.nodes.reserve(2 * points.len() / LEAF_SIZE + 1);
            tree.build_node(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let (lo, hi) = bounds(&self.points[start..end]);
        let id = self.nodes.len();
        self.nodes.push(Node { lo, hi, kind: Kind::Leaf { start, end } });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let axis = (0..3).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap_or(0);
        if hi[axis] == lo[axis] {
            // All points coincide; keep them in one leaf.
            return id;
        }
        let mid = start + (end - start) / 2;
        self.points[start..end]
            .select_nth_unstable_by(mid - start, |a, b| a.axis(axis).total_cmp(&b.axis(axis)));
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id].kind = Kind::Inner { left, right };
        id
    }

    /// Squared distance from `q` to its nearest point, or `None` for an
    /// empty tree.
    pub fn nearest_sq(&self, q: &Vertex) -> Option<f64> {
        (!self.is_empty()).then(|| self.nearest_sq_bounded(q, f64::NEG_INFINITY))
    }

    /// Like [`nearest_sq`](Self::nearest_sq) but may stop as soon as any
    /// candidate at squared distance `<= floor` is found. The result is exact
    /// whenever the true minimum exceeds `floor`, and `<= floor` otherwise.
    /// An empty tree yields `+inf`.
    pub fn nearest_sq_bounded(&self, q: &Vertex, floor: f64) -> f64 {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack: Vec<(usize, f64)> = Vec::with_capacity(64);
        stack.push((0, 0.0));
        while let Some((id, dist)) = stack.pop() {
            if dist >= best {
                continue;
            }
            match self.nodes[id].kind {
                Kind::Leaf { start, end } => {
                    for p in &self.points[start..end] {
                        let d = q.distance_sq(p);
                        if d < best {
                            best = d;
                            if best <= floor {
                                return best;
                            }
                        }
                    }
                }
                Kind::Inner { left, right } => {
                    let dl = box_dist_sq(q, &self.nodes[left]);
                    let dr = box_dist_sq(q, &self.nodes[right]);
                    // Push the farther child first so the nearer is explored first.
                    if dl <= dr {
                        stack.push((right, dr));
                        stack.push((left, dl));
                    } else {
                        stack.push((left, dl));
                        stack.push((right, dr));
                    }
                }
            }
        }
        best
    }

    /// `max_{x in xs} min_{y in tree} |x - y|^2`; `0` for empty `xs`, `+inf`
    /// for an empty tree and non-empty `xs`.
    pub fn sup_min_sq(&self, xs: &[Vertex]) -> f64 {
        let mut sup = 0.0f64;
        for x in xs {
            let d = self.nearest_sq_bounded(x, sup);
            if d > sup {
                sup = d;
            }
        }
        sup
    }
}

fn bounds(points: &[Vertex]) -> ([f64; 3], [f64; 3]) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p.axis(a));
            hi[a] = hi[a].max(p.axis(a));
        }
    }
    (lo, hi)
}

fn box_dist_sq(q: &Vertex, node: &Node) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        let v = q.axis(a);
        let d = if v < node.lo[a] {
            node.lo[a] - v
        } else if v > node.hi[a] {
            v - node.hi[a]
        } else {
            0.0
        };
        s += d * d;
    }
    s
}
