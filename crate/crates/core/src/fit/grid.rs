use crate::voxel_model::VoxelModel;

/// Index spaces of the primal FIT grid over an `nx × ny × nz` voxel box.
///
/// Nodes sit at voxel corners, edges join neighboring nodes, faces are voxel
/// facets and cells are the voxels. Every space is x-fastest; edges and
/// faces are blocked by orientation in the order x, y, z.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredGrid {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    edge_dims: [[usize; 3]; 3],
    face_dims: [[usize; 3]; 3],
    edge_offsets: [usize; 4],
    face_offsets: [usize; 4],
}

const UNIT: [[usize; 3]; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

impl StaggeredGrid {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Self {
        let nd = dims.map(|n| n + 1);
        let edge_dims = [0, 1, 2].map(|d| {
            let mut e = nd;
            e[d] -= 1;
            e
        });
        let face_dims = [0, 1, 2].map(|d| {
            let mut f = dims;
            f[d] += 1;
            f
        });
        let mut edge_offsets = [0; 4];
        let mut face_offsets = [0; 4];
        for d in 0..3 {
            edge_offsets[d + 1] = edge_offsets[d] + edge_dims[d].iter().product::<usize>();
            face_offsets[d + 1] = face_offsets[d] + face_dims[d].iter().product::<usize>();
        }
        Self {
            dims,
            spacing,
            origin,
            edge_dims,
            face_dims,
            edge_offsets,
            face_offsets,
        }
    }

    pub fn for_model(model: &VoxelModel) -> Self {
        Self::new(model.dims(), model.spacing(), model.origin())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn node_dims(&self) -> [usize; 3] {
        self.dims.map(|n| n + 1)
    }

    pub fn num_nodes(&self) -> usize {
        self.node_dims().iter().product()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_offsets[3]
    }

    pub fn num_faces(&self) -> usize {
        self.face_offsets[3]
    }

    pub fn num_cells(&self) -> usize {
        self.dims.iter().product()
    }

    /// Number of edges along axis `d`.
    pub fn edge_count(&self, d: usize) -> usize {
        self.edge_offsets[d + 1] - self.edge_offsets[d]
    }

    /// Number of faces with normal along axis `d`.
    pub fn face_count(&self, d: usize) -> usize {
        self.face_offsets[d + 1] - self.face_offsets[d]
    }

    pub fn edge_range(&self, d: usize) -> std::ops::Range<usize> {
        self.edge_offsets[d]..self.edge_offsets[d + 1]
    }

    pub fn face_range(&self, d: usize) -> std::ops::Range<usize> {
        self.face_offsets[d]..self.face_offsets[d + 1]
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> usize {
        let [px, py, _] = self.node_dims();
        i + px * (j + py * k)
    }

    #[inline]
    pub fn node_coords(&self, n: usize) -> [usize; 3] {
        let [px, py, _] = self.node_dims();
        [n % px, (n / px) % py, n / (px * py)]
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn cell_coords(&self, c: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [c % nx, (c / nx) % ny, c / (nx * ny)]
    }

    /// Edge along axis `d` whose tail node is `(i, j, k)`.
    #[inline]
    pub fn edge(&self, d: usize, i: usize, j: usize, k: usize) -> usize {
        let [ex, ey, _] = self.edge_dims[d];
        self.edge_offsets[d] + i + ex * (j + ey * k)
    }

    /// Orientation and tail-node coordinates of edge `e`.
    #[inline]
    pub fn edge_coords(&self, e: usize) -> (usize, [usize; 3]) {
        let d = if e < self.edge_offsets[1] {
            0
        } else if e < self.edge_offsets[2] {
            1
        } else {
            2
        };
        let local = e - self.edge_offsets[d];
        let [ex, ey, _] = self.edge_dims[d];
        (d, [local % ex, (local / ex) % ey, local / (ex * ey)])
    }

    /// `(tail, head)` nodes of edge `e`; the edge points along +axis.
    #[inline]
    pub fn edge_nodes(&self, e: usize) -> (usize, usize) {
        let (d, [i, j, k]) = self.edge_coords(e);
        let u = UNIT[d];
        (self.node(i, j, k), self.node(i + u[0], j + u[1], k + u[2]))
    }

    /// Face with normal along `d` at lowest corner `(i, j, k)`.
    #[inline]
    pub fn face(&self, d: usize, i: usize, j: usize, k: usize) -> usize {
        let [fx, fy, _] = self.face_dims[d];
        self.face_offsets[d] + i + fx * (j + fy * k)
    }

    #[inline]
    pub fn face_coords(&self, f: usize) -> (usize, [usize; 3]) {
        let d = if f < self.face_offsets[1] {
            0
        } else if f < self.face_offsets[2] {
            1
        } else {
            2
        };
        let local = f - self.face_offsets[d];
        let [fx, fy, _] = self.face_dims[d];
        (d, [local % fx, (local / fx) % fy, local / (fx * fy)])
    }

    /// Boundary edges of face `f` with their orientation relative to the
    /// face normal (right-hand rule).
    #[inline]
    pub fn face_edges(&self, f: usize) -> [(usize, f64); 4] {
        let (d, p) = self.face_coords(f);
        let a = (d + 1) % 3;
        let b = (d + 2) % 3;
        let shift = |q: [usize; 3], axis: usize| {
            let mut r = q;
            r[axis] += 1;
            r
        };
        let pa = shift(p, a);
        let pb = shift(p, b);
        [
            (self.edge(a, p[0], p[1], p[2]), 1.0),
            (self.edge(b, pa[0], pa[1], pa[2]), 1.0),
            (self.edge(a, pb[0], pb[1], pb[2]), -1.0),
            (self.edge(b, p[0], p[1], p[2]), -1.0),
        ]
    }

    /// Faces of cell `c` with outward orientation signs.
    #[inline]
    pub fn cell_faces(&self, c: usize) -> [(usize, f64); 6] {
        let [i, j, k] = self.cell_coords(c);
        [
            (self.face(0, i + 1, j, k), 1.0),
            (self.face(0, i, j, k), -1.0),
            (self.face(1, i, j + 1, k), 1.0),
            (self.face(1, i, j, k), -1.0),
            (self.face(2, i, j, k + 1), 1.0),
            (self.face(2, i, j, k), -1.0),
        ]
    }

    pub fn node_position(&self, n: usize) -> [f64; 3] {
        let c = self.node_coords(n);
        [0, 1, 2].map(|d| self.origin[d] + c[d] as f64 * self.spacing[d])
    }

    pub fn face_center(&self, f: usize) -> [f64; 3] {
        let (d, c) = self.face_coords(f);
        [0, 1, 2].map(|a| {
            let offset = if a == d { 0.0 } else { 0.5 };
            self.origin[a] + (c[a] as f64 + offset) * self.spacing[a]
        })
    }

    pub fn cell_center(&self, c: usize) -> [f64; 3] {
        let q = self.cell_coords(c);
        [0, 1, 2].map(|a| self.origin[a] + (q[a] as f64 + 0.5) * self.spacing[a])
    }

    pub fn edge_length(&self, d: usize) -> f64 {
        self.spacing[d]
    }

    pub fn face_area(&self, d: usize) -> f64 {
        self.spacing[(d + 1) % 3] * self.spacing[(d + 2) % 3]
    }

    /// Area of the dual facet pierced by an edge along `d`.
    pub fn dual_area(&self, d: usize) -> f64 {
        self.face_area(d)
    }

    /// Voxels sharing edge `e` (up to four), as cell indices.
    pub fn edge_cells(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        let (d, p) = self.edge_coords(e);
        let a = (d + 1) % 3;
        let b = (d + 2) % 3;
        (0..4).filter_map(move |c| {
            let mut q = p.map(|v| v as isize);
            q[a] -= (c & 1) as isize;
            q[b] -= ((c >> 1) & 1) as isize;
            if q.iter()
                .enumerate()
                .any(|(ax, &v)| v < 0 || v >= self.dims[ax] as isize)
            {
                None
            } else {
                Some(self.cell(q[0] as usize, q[1] as usize, q[2] as usize))
            }
        })
    }

    /// Corner nodes of cell `c`.
    pub fn cell_nodes(&self, c: usize) -> [usize; 8] {
        let [i, j, k] = self.cell_coords(c);
        let mut out = [0; 8];
        for (m, slot) in out.iter_mut().enumerate() {
            *slot = self.node(i + (m & 1), j + ((m >> 1) & 1), k + ((m >> 2) & 1));
        }
        out
    }
}
