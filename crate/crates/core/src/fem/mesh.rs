//! Simplicial meshes (segments in 1D, triangles in 2D) with boundary facets
//! carrying integer markers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFacet {
    pub nodes: Vec<usize>,
    pub marker: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
    elements: Vec<Vec<usize>>,
    volumes: Vec<f64>,
    facets: Vec<BoundaryFacet>,
}

pub mod markers {
    pub const LEFT: u32 = 1;
    pub const RIGHT: u32 = 2;
    pub const BOTTOM: u32 = 3;
    pub const TOP: u32 = 4;
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl Mesh {
    /// Validates indices, volumes, facet arity and connectivity.
    pub fn new(dim: usize, coords: Vec<f64>, elements: Vec<Vec<usize>>, facets: Vec<BoundaryFacet>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidMesh(format!("mesh dimension must be 1 or 2, got {dim}")));
        }
        if coords.len() % dim != 0 || coords.is_empty() {
            return Err(Error::InvalidMesh("coordinate array length does not match dimension".into()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMesh("non-finite node coordinate".into()));
        }
        let n_nodes = coords.len() / dim;
        if elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        let mut mesh = Mesh { dim, coords, elements, volumes: Vec::new(), facets };
        let mut volumes = Vec::with_capacity(mesh.elements.len());
        for (e, el) in mesh.elements.iter().enumerate() {
            if el.len() != dim + 1 {
                return Err(Error::InvalidMesh(format!("element {e} has {} nodes, expected {}", el.len(), dim + 1)));
            }
            if let Some(&n) = el.iter().find(|&&n| n >= n_nodes) {
                return Err(Error::InvalidMesh(format!("element {e} references node {n} of {n_nodes}")));
            }
            let vol = match dim {
                1 => (mesh.x(el[1])[0] - mesh.x(el[0])[0]).abs(),
                _ => {
                    let p = |i: usize| [mesh.x(el[i])[0], mesh.x(el[i])[1]];
                    signed_area(p(0), p(1), p(2)).abs()
                }
            };
            let scale = mesh.bbox_diameter();
            if !(vol > 1e-14 * scale.powi(dim as i32)) {
                return Err(Error::InvalidMesh(format!("element {e} is degenerate (volume {vol:e})")));
            }
            volumes.push(vol);
        }
        mesh.volumes = volumes;
        for (k, f) in mesh.facets.iter().enumerate() {
            if f.nodes.len() != dim {
                return Err(Error::InvalidMesh(format!("boundary facet {k} has {} nodes, expected {dim}", f.nodes.len())));
            }
            if f.nodes.iter().any(|&n| n >= n_nodes) {
                return Err(Error::InvalidMesh(format!("boundary facet {k} references a missing node")));
            }
        }
        mesh.check_connected()?;
        Ok(mesh)
    }

    fn bbox_diameter(&self) -> f64 {
        let mut d2 = 0.0;
        for a in 0..self.dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for n in 0..self.n_nodes() {
                lo = lo.min(self.x(n)[a]);
                hi = hi.max(self.x(n)[a]);
            }
            d2 += (hi - lo) * (hi - lo);
        }
        d2.sqrt().max(f64::MIN_POSITIVE)
    }

    fn check_connected(&self) -> Result<()> {
        let n = self.n_nodes();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut used = vec![false; n];
        for el in &self.elements {
            for &v in el {
                used[v] = true;
            }
            for w in el.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("node {i} belongs to no element")));
        }
        let root = find(&mut parent, 0);
        if (0..n).any(|i| find(&mut parent, i) != root) {
            return Err(Error::InvalidMesh("mesh is not connected".into()));
        }
        Ok(())
    }

    /// Uniform bar `[0, length]` with `n` elements; markers 1 (x = 0) and 2
    /// (x = length).
    pub fn bar1d(n: usize, length: f64) -> Result<Self> {
        if n == 0 || !(length > 0.0) {
            return Err(Error::InvalidMesh("bar needs n ≥ 1 and positive length".into()));
        }
        let coords = (0..=n).map(|i| length * i as f64 / n as f64).collect();
        let elements = (0..n).map(|i| vec![i, i + 1]).collect();
        let facets = vec![
            BoundaryFacet { nodes: vec![0], marker: markers::LEFT },
            BoundaryFacet { nodes: vec![n], marker: markers::RIGHT },
        ];
        Mesh::new(1, coords, elements, facets)
    }

    /// Rectangle `[0, lx] × [0, ly]` split into `nx × ny` cells, each cut into
    /// four triangles by its diagonals. Markers: 1 left, 2 right, 3 bottom,
    /// 4 top.
    pub fn rect2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx == 0 || ny == 0 || !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::InvalidMesh("rectangle needs positive cell counts and side lengths".into()));
        }
        // Row j of corner nodes is followed by row j of cell centres.
        let row = 2 * nx + 1;
        let corner = |i: usize, j: usize| j * row + i;
        let centre = |i: usize, j: usize| j * row + nx + 1 + i;
        let (hx, hy) = (lx / nx as f64, ly / ny as f64);
        let n_nodes = (ny + 1) * (nx + 1) + ny * nx;
        let mut coords = vec![0.0; 2 * n_nodes];
        for j in 0..=ny {
            for i in 0..=nx {
                let k = corner(i, j);
                coords[2 * k] = i as f64 * hx;
                coords[2 * k + 1] = j as f64 * hy;
            }
            if j < ny {
                for i in 0..nx {
                    let k = centre(i, j);
                    coords[2 * k] = (i as f64 + 0.5) * hx;
                    coords[2 * k + 1] = (j as f64 + 0.5) * hy;
                }
            }
        }
        let mut elements = Vec::with_capacity(4 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1));
                let m = centre(i, j);
                elements.push(vec![a, b, m]);
                elements.push(vec![b, c, m]);
                elements.push(vec![c, d, m]);
                elements.push(vec![d, a, m]);
            }
        }
        let mut facets = Vec::new();
        for j in 0..ny {
            facets.push(BoundaryFacet { nodes: vec![corner(0, j), corner(0, j + 1)], marker: markers::LEFT });
            facets.push(BoundaryFacet { nodes: vec![corner(nx, j), corner(nx, j + 1)], marker: markers::RIGHT });
        }
        for i in 0..nx {
            facets.push(BoundaryFacet { nodes: vec![corner(i, 0), corner(i + 1, 0)], marker: markers::BOTTOM });
            facets.push(BoundaryFacet { nodes: vec![corner(i, ny), corner(i + 1, ny)], marker: markers::TOP });
        }
        Mesh::new(2, coords, elements, facets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn x(&self, node: usize) -> &[f64] {
        &self.coords[node * self.dim..(node + 1) * self.dim]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e]
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    pub fn centroid(&self, e: usize) -> Vec<f64> {
        let el = &self.elements[e];
        (0..self.dim).map(|a| el.iter().map(|&n| self.x(n)[a]).sum::<f64>() / el.len() as f64).collect()
    }

    /// Facet measure (1 for a point facet in 1D).
    /// Pairs `(a, b)`, `a < b`, of elements sharing a facet.
    pub fn element_neighbours(&self) -> Vec<(usize, usize)> {
        let mut faces: Vec<(Vec<usize>, usize)> = Vec::new();
        for (e, nodes) in self.elements.iter().enumerate() {
            for skip in 0..nodes.len() {
                let mut f: Vec<usize> = nodes.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, n)| *n).collect();
                f.sort_unstable();
                faces.push((f, e));
            }
        }
        faces.sort();
        let mut out: Vec<(usize, usize)> =
            faces.windows(2).filter(|w| w[0].0 == w[1].0).map(|w| (w[0].1.min(w[1].1), w[0].1.max(w[1].1))).collect();
        out.sort_unstable();
        out
    }

    pub fn facet_measure(&self, f: &BoundaryFacet) -> f64 {
        match self.dim {
            1 => 1.0,
            _ => {
                let (p, q) = (self.x(f.nodes[0]), self.x(f.nodes[1]));
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            }
        }
    }

    /// Distinct nodes on facets with the given marker, ascending.
    pub fn marker_nodes(&self, marker: u32) -> Vec<usize> {
        let mut v: Vec<usize> = self.facets.iter().filter(|f| f.marker == marker).flat_map(|f| f.nodes.clone()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Plain text: `dim n_nodes n_elems`, coordinates, 0-based connectivity,
    /// `n_facets`, then `marker node…` per facet.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.dim, self.n_nodes(), self.n_elements());
        for n in 0..self.n_nodes() {
            let row: Vec<String> = self.x(n).iter().map(|v| crate::io::fmt_f64(*v)).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        for el in &self.elements {
            let row: Vec<String> = el.iter().map(|v| v.to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s.push_str(&format!("{}\n", self.facets.len()));
        for f in &self.facets {
            let mut row = vec![f.marker.to_string()];
            row.extend(f.nodes.iter().map(|v| v.to_string()));
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l.split_whitespace().collect()))
                .ok_or_else(|| Error::Parse(format!("mesh file ended while reading {what}")))
        };
        fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
            tok.parse().map_err(|_| Error::Parse(format!("line {line}: cannot parse '{tok}'")))
        }
        let (ln, head) = next("header")?;
        if head.len() != 3 {
            return Err(Error::Parse(format!("line {ln}: header must be 'dim n_nodes n_elems'")));
        }
        let dim: usize = num(head[0], ln)?;
        let n_nodes: usize = num(head[1], ln)?;
        let n_elems: usize = num(head[2], ln)?;
        if dim != 1 && dim != 2 {
            return Err(Error::Parse(format!("line {ln}: dimension must be 1 or 2")));
        }
        let mut coords = Vec::with_capacity(n_nodes * dim);
        for _ in 0..n_nodes {
            let (ln, t) = next("node coordinates")?;
            if t.len() != dim {
                return Err(Error::Parse(format!("line {ln}: expected {dim} coordinates")));
            }
            for tok in t {
                coords.push(num::<f64>(tok, ln)?);
            }
        }
        let mut elements = Vec::with_capacity(n_elems);
        for _ in 0..n_elems {
            let (ln, t) = next("element connectivity")?;
            if t.len() != dim + 1 {
                return Err(Error::Parse(format!("line {ln}: expected {} node indices", dim + 1)));
            }
            elements.push(t.iter().map(|tok| num::<usize>(tok, ln)).collect::<Result<Vec<_>>>()?);
        }
        let mut facets = Vec::new();
        if let Ok((ln, t)) = next("boundary facet count") {
            if t.len() != 1 {
                return Err(Error::Parse(format!("line {ln}: expected the number of boundary facets")));
            }
            let nf: usize = num(t[0], ln)?;
            for _ in 0..nf {
                let (ln, t) = next("boundary facet")?;
                if t.len() != dim + 1 {
                    return Err(Error::Parse(format!("line {ln}: expected 'marker' and {dim} node indices")));
                }
                let marker: u32 = num(t[0], ln)?;
                let nodes = t[1..].iter().map(|tok| num::<usize>(tok, ln)).collect::<Result<Vec<_>>>()?;
                facets.push(BoundaryFacet { nodes, marker });
            }
        }
        if let Ok((ln, _)) = next("end") {
            return Err(Error::Parse(format!("line {ln}: unexpected trailing content")));
        }
        Mesh::new(dim, coords, elements, facets)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bar_geometry() {
        let m = Mesh::bar1d(4, 2.0).unwrap();
        assert_eq!(m.n_nodes(), 5);
        assert!(m.volumes().iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert_eq!(m.marker_nodes(markers::RIGHT), vec![4]);
    }

    #[test]
    fn rect_geometry() {
        let m = Mesh::rect2d(3, 2, 1.5, 1.0).unwrap();
        assert_eq!(m.n_elements(), 24);
        assert_eq!(m.n_nodes(), 4 * 3 + 2 * 3);
        assert!((m.volumes().iter().sum::<f64>() - 1.5).abs() < 1e-14);
        assert_eq!(m.marker_nodes(markers::LEFT).len(), 3);
        assert_eq!(m.marker_nodes(markers::TOP).len(), 4);
        let len: f64 = m.facets().iter().filter(|f| f.marker == markers::BOTTOM).map(|f| m.facet_measure(f)).sum();
        assert!((len - 1.5).abs() < 1e-14);
    }

    #[test]
    fn text_round_trip() {
        for m in [Mesh::bar1d(3, 1.0).unwrap(), Mesh::rect2d(2, 2, 1.0, 1.0).unwrap()] {
            assert_eq!(Mesh::parse(&m.to_text()).unwrap(), m);
        }
    }

    #[test]
    fn rejects_bad_meshes() {
        assert!(Mesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0], vec![vec![0, 1, 2]], vec![]).is_err());
        assert!(Mesh::new(1, vec![0.0, 1.0, 2.0, 3.0], vec![vec![0, 1], vec![2, 3]], vec![]).is_err());
        assert!(Mesh::new(1, vec![0.0, 1.0], vec![vec![0, 5]], vec![]).is_err());
        assert!(Mesh::parse("1 2 1\n0\n1\n0 1\n1\n7 0\nextra\n").is_err());
        assert!(Mesh::parse("3 1 1\n").is_err());
    }

    #[test]
    fn parses_comments() {
        let m = Mesh::parse("# bar\n1 3 2\n0\n0.5\n1\n0 1\n1 2\n2\n1 0\n2 2\n").unwrap();
        assert_eq!(m.marker_nodes(2), vec![2]);
    }
}
