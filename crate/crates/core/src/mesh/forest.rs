use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use smallvec::SmallVec;

use super::geometry::{barycentric, orient, triangle_area, Point};
use super::MeshError;

pub type VertexId = usize;
pub type ElementId = usize;

/// Unordered vertex pair used as an edge key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey(pub VertexId, pub VertexId);

impl EdgeKey {
    pub fn new(a: VertexId, b: VertexId) -> Self {
        if a < b {
            EdgeKey(a, b)
        } else {
            EdgeKey(b, a)
        }
    }
}

/// One node of the refinement tree.
#[derive(Debug, Clone)]
pub struct GeoElement {
    /// Counterclockwise vertex ids.
    pub vertices: [VertexId; 3],
    pub parent: Option<ElementId>,
    /// Position among the parent's children (0 for roots).
    pub child_index: u8,
    /// Midpoint quadrisection children: corner at v0, middle, corner at v1, corner at v2.
    pub children: Option<[ElementId; 4]>,
    pub level: u32,
    /// True exactly when the element belongs to the leaf front.
    pub active: bool,
}

/// Diagonal pattern used when splitting the initial grid squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootLayout {
    /// Every square split from its lower-left to its upper-right corner.
    Diagonal,
    /// Diagonals mirrored across the center lines, so the root mesh is symmetric
    /// under `x -> -x` and `y -> -y` about the domain center.
    UnionJack,
}

/// Uniform bucket grid over the roots, used to start point location.
#[derive(Debug, Clone)]
struct RootGrid {
    origin: Point,
    cell: Point,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<ElementId>>,
}

impl RootGrid {
    fn build(vertices: &[Point], roots: &[[VertexId; 3]]) -> Self {
        let (mut lo, mut hi) = (
            Point::new(f64::INFINITY, f64::INFINITY),
            Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in vertices {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n = ((roots.len() as f64).sqrt().ceil() as usize).max(1);
        let (nx, ny) = (n, n);
        let cell = Point::new(
            ((hi.x - lo.x) / nx as f64).max(f64::MIN_POSITIVE),
            ((hi.y - lo.y) / ny as f64).max(f64::MIN_POSITIVE),
        );
        let mut buckets = vec![Vec::new(); nx * ny];
        for (id, tri) in roots.iter().enumerate() {
            let xs = tri.map(|v| vertices[v].x);
            let ys = tri.map(|v| vertices[v].y);
            let bx0 = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let bx1 = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let by0 = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let by1 = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (i0, i1) = Self::range(bx0, bx1, lo.x, cell.x, nx);
            let (j0, j1) = Self::range(by0, by1, lo.y, cell.y, ny);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(id);
                }
            }
        }
        Self { origin: lo, cell, nx, ny, buckets }
    }

    fn range(a: f64, b: f64, origin: f64, h: f64, n: usize) -> (usize, usize) {
        let lo = (((a - origin) / h).floor() - 1.0).max(0.0) as usize;
        let hi = (((b - origin) / h).floor() + 1.0).max(0.0) as usize;
        (lo.min(n - 1), hi.min(n - 1))
    }

    fn candidates(&self, p: Point) -> &[ElementId] {
        let fx = (p.x - self.origin.x) / self.cell.x;
        let fy = (p.y - self.origin.y) / self.cell.y;
        if !(fx.is_finite() && fy.is_finite()) {
            return &[];
        }
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        &self.buckets[j * self.nx + i]
    }
}

/// Hierarchical quadtree-of-triangles mesh with an active leaf front.
///
/// Vertices are append-only and identified by index. Elements are never removed;
/// coarsening deactivates children and re-activates the parent, and a later
/// refinement of the same parent reuses the existing children.
#[derive(Debug, Clone)]
pub struct GeoForest {
    vertices: Vec<Point>,
    elements: Vec<GeoElement>,
    roots: Vec<ElementId>,
    midpoints: HashMap<EdgeKey, VertexId>,
    edge_table: HashMap<EdgeKey, SmallVec<[ElementId; 2]>>,
    n_active: usize,
    signature: u64,
    domain_area: f64,
    root_grid: RootGrid,
}

/// Result of a coarsening request.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoarsenOutcome {
    /// Parents that were re-activated.
    pub coarsened: Vec<ElementId>,
    /// Requested leaves left untouched (incomplete sibling set or irregularity).
    pub unchanged: Vec<ElementId>,
}

impl GeoForest {
    /// Builds a forest from a root triangulation. Triangles are reoriented
    /// counterclockwise if needed.
    pub fn from_triangles(vertices: Vec<Point>, triangles: &[[VertexId; 3]]) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(MeshError::NonFiniteVertex);
        }
        let mut roots_v = Vec::with_capacity(triangles.len());
        for t in triangles {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(MeshError::InvalidVertex(*t.iter().max().unwrap()));
            }
            let o = orient(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if o == 0.0 {
                return Err(MeshError::DegenerateTriangle(*t));
            }
            roots_v.push(if o > 0.0 { *t } else { [t[0], t[2], t[1]] });
        }

        let mut hasher = DefaultHasher::new();
        for p in &vertices {
            p.x.to_bits().hash(&mut hasher);
            p.y.to_bits().hash(&mut hasher);
        }
        roots_v.hash(&mut hasher);
        let signature = hasher.finish();

        let root_grid = RootGrid::build(&vertices, &roots_v);
        let mut forest = GeoForest {
            vertices,
            elements: Vec::with_capacity(roots_v.len()),
            roots: Vec::with_capacity(roots_v.len()),
            midpoints: HashMap::new(),
            edge_table: HashMap::new(),
            n_active: 0,
            signature,
            domain_area: 0.0,
            root_grid,
        };
        for t in roots_v {
            let id = forest.elements.len();
            forest.elements.push(GeoElement {
                vertices: t,
                parent: None,
                child_index: 0,
                children: None,
                level: 0,
                active: false,
            });
            forest.roots.push(id);
            forest.activate(id);
        }
        forest.domain_area = forest.roots.iter().map(|&r| forest.area(r)).sum();
        Ok(forest)
    }

    /// Uniform `n x n` grid of squares over a rectangle, each square split in two.
    pub fn rectangle(xmin: f64, xmax: f64, ymin: f64, ymax: f64, n: usize, layout: RootLayout) -> Result<Self, MeshError> {
        if n == 0 || !(xmax > xmin) || !(ymax > ymin) {
            return Err(MeshError::InvalidDomain);
        }
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        // measure from the nearer end so symmetric boxes give mirrored coordinates
        let coord = |lo: f64, hi: f64, k: usize| {
            if 2 * k <= n {
                lo + (hi - lo) * k as f64 / n as f64
            } else {
                hi - (hi - lo) * (n - k) as f64 / n as f64
            }
        };
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point::new(coord(xmin, xmax, i), coord(ymin, ymax, j)));
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut tris = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (ll, lr, ur, ul) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                let rising = match layout {
                    RootLayout::Diagonal => true,
                    RootLayout::UnionJack => (2 * i < n) == (2 * j < n),
                };
                if rising {
                    tris.push([ll, lr, ur]);
                    tris.push([ll, ur, ul]);
                } else {
                    tris.push([ll, lr, ul]);
                    tris.push([lr, ur, ul]);
                }
            }
        }
        Self::from_triangles(vertices, &tris)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: VertexId) -> Point {
        self.vertices[v]
    }

    pub fn elements(&self) -> &[GeoElement] {
        &self.elements
    }

    pub fn element(&self, id: ElementId) -> &GeoElement {
        &self.elements[id]
    }

    pub fn roots(&self) -> &[ElementId] {
        &self.roots
    }

    pub fn signature(&self) -> u64 {
        self.signature
    }

    pub fn domain_area(&self) -> f64 {
        self.domain_area
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn is_leaf(&self, id: ElementId) -> bool {
        self.elements.get(id).is_some_and(|e| e.active)
    }

    /// Active leaves in increasing id order.
    pub fn leaves(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.elements.iter().enumerate().filter(|(_, e)| e.active).map(|(i, _)| i)
    }

    pub fn triangle(&self, id: ElementId) -> [Point; 3] {
        self.elements[id].vertices.map(|v| self.vertices[v])
    }

    pub fn area(&self, id: ElementId) -> f64 {
        triangle_area(&self.triangle(id))
    }

    pub fn midpoint_of(&self, a: VertexId, b: VertexId) -> Option<VertexId> {
        self.midpoints.get(&EdgeKey::new(a, b)).copied()
    }

    /// Active leaves having `(a, b)` as one of their edges.
    pub fn leaves_on_edge(&self, a: VertexId, b: VertexId) -> &[ElementId] {
        self.edge_table.get(&EdgeKey::new(a, b)).map(|v| v.as_slice()).unwrap_or(&[])
    }

    fn covered(&self, a: VertexId, b: VertexId) -> bool {
        !self.leaves_on_edge(a, b).is_empty()
    }

    /// Whether some active leaf lies along a sub-segment of `(a, b)`.
    fn reaches(&self, a: VertexId, b: VertexId) -> bool {
        if self.covered(a, b) {
            return true;
        }
        match self.midpoint_of(a, b) {
            Some(m) => self.reaches(a, m) || self.reaches(m, b),
            None => false,
        }
    }

    /// Number of front vertices strictly inside the segment `(a, b)`.
    fn interior_vertices(&self, a: VertexId, b: VertexId) -> usize {
        match self.midpoint_of(a, b) {
            Some(m) if self.reaches(a, m) || self.reaches(m, b) => {
                let inner = |s: VertexId, t: VertexId| {
                    if self.covered(s, t) {
                        0
                    } else {
                        self.interior_vertices(s, t)
                    }
                };
                1 + inner(a, m) + inner(m, b)
            }
            _ => 0,
        }
    }

    /// Hanging vertices on each edge of an active leaf. Edge `k` is the edge
    /// opposite local vertex `k`.
    pub fn hanging_counts(&self, id: ElementId) -> [usize; 3] {
        let v = self.elements[id].vertices;
        std::array::from_fn(|k| {
            let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
            if self.leaves_on_edge(a, b).iter().any(|&o| o != id) {
                0
            } else {
                self.interior_vertices(a, b)
            }
        })
    }

    /// The hanging vertex of an active leaf, with the local index of the opposite vertex.
    pub fn hanging_vertex(&self, id: ElementId) -> Option<(usize, VertexId)> {
        let counts = self.hanging_counts(id);
        let v = self.elements[id].vertices;
        (0..3).find(|&k| counts[k] > 0).map(|k| {
            let (a, b) = (v[(k + 1) % 3], v[(k + 2) % 3]);
            (k, self.midpoint_of(a, b).expect("hanging edge has a midpoint"))
        })
    }

    fn activate(&mut self, id: ElementId) {
        let e = &mut self.elements[id];
        debug_assert!(!e.active);
        e.active = true;
        let v = e.vertices;
        self.n_active += 1;
        for k in 0..3 {
            self.edge_table.entry(EdgeKey::new(v[k], v[(k + 1) % 3])).or_default().push(id);
        }
    }

    fn deactivate(&mut self, id: ElementId) {
        let e = &mut self.elements[id];
        debug_assert!(e.active);
        e.active = false;
        let v = e.vertices;
        self.n_active -= 1;
        for k in 0..3 {
            let key = EdgeKey::new(v[k], v[(k + 1) % 3]);
            if let Some(list) = self.edge_table.get_mut(&key) {
                list.retain(|x| *x != id);
                if list.is_empty() {
                    self.edge_table.remove(&key);
                }
            }
        }
    }

    fn midpoint_vertex(&mut self, a: VertexId, b: VertexId) -> VertexId {
        let key = EdgeKey::new(a, b);
        if let Some(&m) = self.midpoints.get(&key) {
            return m;
        }
        let m = self.vertices.len();
        self.vertices.push(Point::midpoint(self.vertices[key.0], self.vertices[key.1]));
        self.midpoints.insert(key, m);
        m
    }

    /// Quadrisects an active leaf without any closure bookkeeping.
    fn split(&mut self, id: ElementId) {
        let children = match self.elements[id].children {
            Some(c) => c,
            None => {
                let [a, b, c] = self.elements[id].vertices;
                let mab = self.midpoint_vertex(a, b);
                let mbc = self.midpoint_vertex(b, c);
                let mca = self.midpoint_vertex(c, a);
                let level = self.elements[id].level + 1;
                let tris = [[a, mab, mca], [mca, mab, mbc], [mab, b, mbc], [mca, mbc, c]];
                let first = self.elements.len();
                for (k, t) in tris.into_iter().enumerate() {
                    self.elements.push(GeoElement {
                        vertices: t,
                        parent: Some(id),
                        child_index: k as u8,
                        children: None,
                        level,
                        active: false,
                    });
                }
                let ids = [first, first + 1, first + 2, first + 3];
                self.elements[id].children = Some(ids);
                ids
            }
        };
        self.deactivate(id);
        for c in children {
            self.activate(c);
        }
    }

    /// An active leaf one level coarser across one of the edges of `id`.
    fn coarser_neighbor(&self, id: ElementId) -> Option<ElementId> {
        let e = &self.elements[id];
        let parent = e.parent?;
        let pv = self.elements[parent].vertices;
        let v = e.vertices;
        for k in 0..3 {
            let (a, b) = (v[k], v[(k + 1) % 3]);
            for j in 0..3 {
                let (c, d) = (pv[j], pv[(j + 1) % 3]);
                let Some(m) = self.midpoint_of(c, d) else { continue };
                let on_parent_edge = EdgeKey::new(a, b) == EdgeKey::new(c, m) || EdgeKey::new(a, b) == EdgeKey::new(m, d);
                if on_parent_edge {
                    if let Some(&q) = self.leaves_on_edge(c, d).first() {
                        return Some(q);
                    }
                }
            }
        }
        None
    }

    /// Refines the given active leaves by midpoint quadrisection. Neighbors are
    /// refined as needed so that every edge carries at most one hanging vertex
    /// and every leaf has at most one hanging vertex in total. Returns all
    /// refined elements in the order they were split.
    pub fn refine(&mut self, ids: &[ElementId]) -> Result<Vec<ElementId>, MeshError> {
        for &id in ids {
            if !self.is_leaf(id) {
                return Err(MeshError::NotALeaf(id));
            }
        }
        let mut changed = Vec::new();
        let mut stack: Vec<ElementId> = ids.iter().rev().copied().collect();
        while let Some(&id) = stack.last() {
            if !self.elements[id].active {
                stack.pop();
                continue;
            }
            if let Some(q) = self.coarser_neighbor(id) {
                stack.push(q);
                continue;
            }
            stack.pop();
            self.split(id);
            changed.push(id);
            let v = self.elements[id].vertices;
            for k in 0..3 {
                let neighbors: SmallVec<[ElementId; 2]> = self.leaves_on_edge(v[k], v[(k + 1) % 3]).into();
                for n in neighbors {
                    if self.hanging_counts(n).iter().sum::<usize>() >= 2 {
                        stack.push(n);
                    }
                }
            }
        }
        Ok(changed)
    }

    /// Coarsens complete sibling quadruples whose members are all listed.
    /// Quadruples whose parent would violate the irregularity rules are skipped.
    pub fn coarsen(&mut self, ids: &[ElementId]) -> CoarsenOutcome {
        let mut requested: Vec<ElementId> = ids.iter().copied().filter(|&i| i < self.elements.len()).collect();
        requested.sort_unstable();
        requested.dedup();
        let mut parents: Vec<ElementId> = requested.iter().filter_map(|&i| self.elements[i].parent).collect();
        parents.sort_unstable();
        parents.dedup();

        // Coarsen every complete quadruple at once, then undo the ones that break
        // the irregularity rules until none do. Neighboring quadruples must be
        // removed together, so a one-at-a-time pass would reject most of them.
        let mut coarsened: Vec<ElementId> = parents
            .into_iter()
            .filter(|&p| {
                let children = self.elements[p].children.expect("parent has children");
                children
                    .iter()
                    .all(|c| self.elements[*c].active && requested.binary_search(c).is_ok())
            })
            .collect();
        for &p in &coarsened {
            for c in self.elements[p].children.unwrap() {
                self.deactivate(c);
            }
            self.activate(p);
        }
        loop {
            let (bad, good): (Vec<_>, Vec<_>) = coarsened.iter().partition(|&&p| {
                let counts = self.hanging_counts(p);
                counts.iter().any(|&c| c > 1) || counts.iter().sum::<usize>() > 1
            });
            if bad.is_empty() {
                break;
            }
            for p in bad {
                self.deactivate(p);
                for c in self.elements[p].children.unwrap() {
                    self.activate(c);
                }
            }
            coarsened = good;
        }

        let mut outcome = CoarsenOutcome::default();
        let mut done: Vec<ElementId> = coarsened.iter().flat_map(|&p| self.elements[p].children.unwrap()).collect();
        outcome.coarsened = coarsened;
        done.sort_unstable();
        outcome.unchanged = requested.into_iter().filter(|i| done.binary_search(i).is_err()).collect();
        outcome
    }

    /// Root index followed by the child indices leading to `id`.
    pub fn path(&self, id: ElementId) -> (usize, Vec<u8>) {
        let mut steps = Vec::new();
        let mut cur = id;
        while let Some(p) = self.elements[cur].parent {
            steps.push(self.elements[cur].child_index);
            cur = p;
        }
        steps.reverse();
        (cur, steps)
    }

    /// Active leaves contained in the subtree of `id` (including `id` itself), in child order.
    pub fn leaves_below(&self, id: ElementId) -> Vec<ElementId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(e) = stack.pop() {
            let el = &self.elements[e];
            if el.active {
                out.push(e);
            } else if let Some(ch) = el.children {
                stack.extend(ch.iter().rev());
            }
        }
        out
    }

    fn contains(&self, id: ElementId, p: Point) -> Option<[f64; 3]> {
        let t = self.triangle(id);
        let l = barycentric(&t, p);
        let tol = 1e-12;
        if l.iter().all(|&x| x >= -tol) {
            Some(l)
        } else {
            None
        }
    }

    /// Locates the active leaf containing `p`. On shared boundaries the leaf
    /// with the lowest id wins. Barycentric coordinates are clamped to `[0, 1]`.
    pub fn locate(&self, p: Point) -> Result<(ElementId, [f64; 3]), MeshError> {
        let mut best: Option<(ElementId, [f64; 3])> = None;
        let mut stack: Vec<ElementId> = Vec::new();
        for &r in self.root_grid.candidates(p) {
            if self.contains(r, p).is_some() {
                stack.push(r);
            }
        }
        while let Some(e) = stack.pop() {
            let el = &self.elements[e];
            if el.active {
                if best.is_none_or(|(b, _)| e < b) {
                    best = Some((e, self.contains(e, p).expect("checked before push")));
                }
            } else if let Some(ch) = el.children {
                for c in ch {
                    if self.contains(c, p).is_some() {
                        stack.push(c);
                    }
                }
            }
        }
        let (id, l) = best.ok_or(MeshError::OutsideDomain(p.x, p.y))?;
        let mut l = l.map(|x| x.clamp(0.0, 1.0));
        let s: f64 = l.iter().sum();
        for x in &mut l {
            *x /= s;
        }
        Ok((id, l))
    }
}
