use std::collections::VecDeque;
use std::sync::OnceLock;

use crate::fit::StaggeredGrid;
use crate::registry::Registry;

/// Spanning tree of the grid's node graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    /// Tree membership per edge.
    pub in_tree: Vec<bool>,
    pub root: usize,
    /// Parent node of each node (`usize::MAX` at the root).
    pub parent: Vec<usize>,
    /// Edge joining each node to its parent (`usize::MAX` at the root).
    pub parent_edge: Vec<usize>,
}

impl SpanningTree {
    pub fn edge_count(&self) -> usize {
        self.in_tree.iter().filter(|&&t| t).count()
    }

    /// Checks with union-find that tree edges connect all nodes without a
    /// cycle.
    pub fn is_spanning(&self, grid: &StaggeredGrid) -> bool {
        let n = grid.num_nodes();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut joins = 0;
        for (e, &t) in self.in_tree.iter().enumerate() {
            if !t {
                continue;
            }
            let (u, v) = grid.edge_nodes(e);
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru == rv {
                return false;
            }
            parent[ru] = rv;
            joins += 1;
        }
        joins + 1 == n
    }
}

pub trait TreeBuilder: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, grid: &StaggeredGrid) -> SpanningTree;
}

/// Comb tree rooted at node (0,0,0): the x-line `(·,0,0)`, the y-edges of
/// the plane `(·,·,0)` and every z-edge.
#[derive(Debug, Clone, Copy, Default)]
pub struct CombTree;

impl TreeBuilder for CombTree {
    fn name(&self) -> &'static str {
        "comb"
    }

    fn build(&self, grid: &StaggeredGrid) -> SpanningTree {
        let n = grid.num_nodes();
        let mut in_tree = vec![false; grid.num_edges()];
        let mut parent = vec![usize::MAX; n];
        let mut parent_edge = vec![usize::MAX; n];
        let [px, py, pz] = grid.node_dims();
        for k in 0..pz {
            for j in 0..py {
                for i in 0..px {
                    let (e, p) = if k > 0 {
                        (grid.edge(2, i, j, k - 1), grid.node(i, j, k - 1))
                    } else if j > 0 {
                        (grid.edge(1, i, j - 1, 0), grid.node(i, j - 1, 0))
                    } else if i > 0 {
                        (grid.edge(0, i - 1, 0, 0), grid.node(i - 1, 0, 0))
                    } else {
                        continue;
                    };
                    let node = grid.node(i, j, k);
                    in_tree[e] = true;
                    parent[node] = p;
                    parent_edge[node] = e;
                }
            }
        }
        SpanningTree {
            in_tree,
            root: 0,
            parent,
            parent_edge,
        }
    }
}

/// Breadth-first tree from node 0, neighbors visited in the order
/// −x, +x, −y, +y, −z, +z.
#[derive(Debug, Clone, Copy, Default)]
pub struct BfsTree;

impl TreeBuilder for BfsTree {
    fn name(&self) -> &'static str {
        "bfs"
    }

    fn build(&self, grid: &StaggeredGrid) -> SpanningTree {
        let n = grid.num_nodes();
        let [px, py, pz] = grid.node_dims();
        let mut in_tree = vec![false; grid.num_edges()];
        let mut parent = vec![usize::MAX; n];
        let mut parent_edge = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            let [i, j, k] = grid.node_coords(u);
            let mut nbrs = Vec::with_capacity(6);
            if i > 0 {
                nbrs.push((grid.node(i - 1, j, k), grid.edge(0, i - 1, j, k)));
            }
            if i + 1 < px {
                nbrs.push((grid.node(i + 1, j, k), grid.edge(0, i, j, k)));
            }
            if j > 0 {
                nbrs.push((grid.node(i, j - 1, k), grid.edge(1, i, j - 1, k)));
            }
            if j + 1 < py {
                nbrs.push((grid.node(i, j + 1, k), grid.edge(1, i, j, k)));
            }
            if k > 0 {
                nbrs.push((grid.node(i, j, k - 1), grid.edge(2, i, j, k - 1)));
            }
            if k + 1 < pz {
                nbrs.push((grid.node(i, j, k + 1), grid.edge(2, i, j, k)));
            }
            for (v, e) in nbrs {
                if !seen[v] {
                    seen[v] = true;
                    in_tree[e] = true;
                    parent[v] = u;
                    parent_edge[v] = e;
                    queue.push_back(v);
                }
            }
        }
        SpanningTree {
            in_tree,
            root: 0,
            parent,
            parent_edge,
        }
    }
}

pub type TreeFactory = fn() -> Box<dyn TreeBuilder>;

pub fn tree_registry() -> &'static Registry<TreeFactory> {
    static REGISTRY: OnceLock<Registry<TreeFactory>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        Registry::<TreeFactory>::new("spanning tree")
            .with("comb", "x-line, y-plane and all z-columns", || {
                Box::new(CombTree)
            })
            .with("bfs", "breadth-first from node 0", || Box::new(BfsTree))
    })
}
