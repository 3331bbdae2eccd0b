//! Binned SAH bounding volume hierarchy over boundary elements.
//!
//! Traversal is generic over a per-leaf callback so that all-hits, parity
//! and closest-point queries share one tree layout.

use crate::math::{Aabb, Dim, Vec3};

const BINS: usize = 12;
const MAX_LEAF: usize = 4;

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive slot. Interior: index of the right child
    /// (the left child always follows its parent).
    offset: u32,
    /// Zero for interior nodes.
    count: u32,
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    /// Element indices in leaf order.
    prims: Vec<u32>,
}

struct BuildItem {
    bounds: Aabb,
    centroid: Vec3,
    index: u32,
}

impl Bvh {
    pub fn build(dim: Dim, prim_bounds: &[Aabb]) -> Bvh {
        let mut items: Vec<BuildItem> = prim_bounds
            .iter()
            .enumerate()
            .map(|(i, b)| BuildItem {
                bounds: *b,
                centroid: b.center(),
                index: i as u32,
            })
            .collect();
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * items.len().max(1)),
            prims: Vec::with_capacity(items.len()),
        };
        if items.is_empty() {
            bvh.nodes.push(Node {
                bounds: Aabb::empty(),
                offset: 0,
                count: 0,
            });
            return bvh;
        }
        bvh.build_recursive(dim, &mut items[..]);
        bvh
    }

    fn build_recursive(&mut self, dim: Dim, items: &mut [BuildItem]) -> usize {
        let bounds = items
            .iter()
            .fold(Aabb::empty(), |acc, it| acc.union(&it.bounds));
        let node_index = self.nodes.len();
        self.nodes.push(Node {
            bounds,
            offset: 0,
            count: 0,
        });

        if items.len() <= MAX_LEAF {
            self.make_leaf(node_index, items);
            return node_index;
        }

        let cbounds = Aabb::from_points(items.iter().map(|it| &it.centroid));
        let ext = cbounds.extent();
        let axis = (0..dim.n())
            .max_by(|&a, &b| ext[a].total_cmp(&ext[b]))
            .unwrap_or(0);

        let split = if ext[axis] <= 0.0 {
            None
        } else {
            self.sah_split(dim, items, &cbounds, axis, &bounds)
        };

        let mid = match split {
            Some(mid) => mid,
            None if items.len() <= 2 * MAX_LEAF && ext[axis] <= 0.0 => {
                self.make_leaf(node_index, items);
                return node_index;
            }
            None => {
                // Degenerate or unprofitable SAH split: fall back to a median split.
                let m = items.len() / 2;
                items.select_nth_unstable_by(m, |a, b| {
                    a.centroid[axis].total_cmp(&b.centroid[axis])
                });
                m
            }
        };

        let (left, right) = items.split_at_mut(mid);
        self.build_recursive(dim, left);
        let right_index = self.build_recursive(dim, right);
        self.nodes[node_index].offset = right_index as u32;
        node_index
    }

    fn make_leaf(&mut self, node_index: usize, items: &[BuildItem]) {
        let node = &mut self.nodes[node_index];
        node.offset = self.prims.len() as u32;
        node.count = items.len() as u32;
        self.prims.extend(items.iter().map(|it| it.index));
    }

    fn sah_split(
        &self,
        dim: Dim,
        items: &mut [BuildItem],
        cbounds: &Aabb,
        axis: usize,
        bounds: &Aabb,
    ) -> Option<usize> {
        let lo = cbounds.min[axis];
        let scale = BINS as f64 / (cbounds.max[axis] - lo);
        let bin_of = |c: f64| (((c - lo) * scale) as usize).min(BINS - 1);

        let mut bin_bounds = [Aabb::empty(); BINS];
        let mut bin_counts = [0usize; BINS];
        for it in items.iter() {
            let b = bin_of(it.centroid[axis]);
            bin_counts[b] += 1;
            bin_bounds[b] = bin_bounds[b].union(&it.bounds);
        }

        let mut best = (f64::INFINITY, 0usize);
        for split in 1..BINS {
            let (mut lb, mut lc) = (Aabb::empty(), 0);
            for i in 0..split {
                lb = lb.union(&bin_bounds[i]);
                lc += bin_counts[i];
            }
            let (mut rb, mut rc) = (Aabb::empty(), 0);
            for i in split..BINS {
                rb = rb.union(&bin_bounds[i]);
                rc += bin_counts[i];
            }
            if lc == 0 || rc == 0 {
                continue;
            }
            let cost = lc as f64 * lb.half_area(dim) + rc as f64 * rb.half_area(dim);
            if cost < best.0 {
                best = (cost, split);
            }
        }
        if !best.0.is_finite() {
            return None;
        }
        let leaf_cost = items.len() as f64 * bounds.half_area(dim);
        if items.len() <= MAX_LEAF * 4 && best.0 >= leaf_cost {
            return None;
        }

        let split = best.1;
        let mut i = 0;
        for j in 0..items.len() {
            if bin_of(items[j].centroid[axis]) < split {
                items.swap(i, j);
                i += 1;
            }
        }
        Some(i)
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Visits every leaf primitive whose node box is pierced by the ray
    /// `o + t d`, `t ∈ [0, t_max]`. No early termination.
    #[inline]
    pub fn for_each_ray_candidate(
        &self,
        dim: Dim,
        o: &Vec3,
        d: &Vec3,
        t_max: f64,
        mut visit: impl FnMut(usize),
    ) {
        if self.prims.is_empty() {
            return;
        }
        let inv = d.map(|c| 1.0 / c);
        let mut stack = [0u32; 128];
        let mut sp = 0usize;
        let mut node = 0usize;
        loop {
            let n = &self.nodes[node];
            if n.bounds.ray_entry(o, &inv, dim, t_max).is_some() {
                if n.count > 0 {
                    let start = n.offset as usize;
                    for &p in &self.prims[start..start + n.count as usize] {
                        visit(p as usize);
                    }
                } else {
                    stack[sp] = n.offset;
                    sp += 1;
                    node += 1;
                    continue;
                }
            }
            if sp == 0 {
                break;
            }
            sp -= 1;
            node = stack[sp] as usize;
        }
    }

    /// Nearest-first traversal with pruning. `visit` returns the squared
    /// distance to the primitive; the smallest value is returned with its index.
    pub fn nearest(
        &self,
        p: &Vec3,
        mut visit: impl FnMut(usize) -> f64,
    ) -> Option<(usize, f64)> {
        if self.prims.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut best_d2 = f64::INFINITY;
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds.distance2(p)));
        while let Some((ni, d2)) = stack.pop() {
            if d2 > best_d2 {
                continue;
            }
            let n = &self.nodes[ni as usize];
            if n.count > 0 {
                let start = n.offset as usize;
                for &pi in &self.prims[start..start + n.count as usize] {
                    let dd = visit(pi as usize);
                    if dd < best_d2 {
                        best_d2 = dd;
                        best = Some((pi as usize, dd));
                    }
                }
            } else {
                let l = ni + 1;
                let r = n.offset;
                let dl = self.nodes[l as usize].bounds.distance2(p);
                let dr = self.nodes[r as usize].bounds.distance2(p);
                // Push the farther child first so the nearer one pops next.
                if dl < dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        best
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn rec(b: &Bvh, i: usize) -> usize {
            let n = &b.nodes[i];
            if n.count > 0 || b.prims.is_empty() {
                1
            } else {
                1 + rec(b, i + 1).max(rec(b, n.offset as usize))
            }
        }
        rec(self, 0)
    }
}
