use crate::error::{Error, Result};

/// Uniform mesh of the unit interval (d = 1) or unit square (d = 2) with
/// mesh width h = 2^{-m}.
///
/// In 2D every grid cell is split along its (0,0)–(1,1) diagonal into two
/// right triangles, so all element angles are ≤ π/2 and the P1 stiffness
/// matrix is an M-matrix for any elementwise-constant positive coefficient.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    level: u32,
    cells: usize,
    nodes: Vec<[f64; 2]>,
    /// Flat connectivity, `dim + 1` node indices per element.
    elements: Vec<usize>,
    boundary: Vec<bool>,
    dof_of_node: Vec<Option<usize>>,
    node_of_dof: Vec<usize>,
    measure: Vec<f64>,
    centroids: Vec<[f64; 2]>,
    /// Gradients of the local hat functions, `dim + 1` per element.
    hat_gradients: Vec<[f64; 2]>,
}

impl Mesh {
    /// Uniform mesh with 2^level cells per side.
    pub fn uniform(dim: usize, level: u32) -> Result<Self> {
        if level == 0 || level > 14 {
            return Err(Error::InvalidParameter(format!(
                "mesh level m = {level} must lie in 1..=14"
            )));
        }
        match dim {
            1 => Ok(Self::interval(level)),
            2 => Ok(Self::square(level)),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    fn interval(level: u32) -> Self {
        let n = 1usize << level;
        let h = 1.0 / n as f64;
        let nodes: Vec<[f64; 2]> = (0..=n).map(|i| [i as f64 * h, 0.0]).collect();
        let mut elements = Vec::with_capacity(2 * n);
        let mut measure = Vec::with_capacity(n);
        let mut centroids = Vec::with_capacity(n);
        let mut hat_gradients = Vec::with_capacity(2 * n);
        for i in 0..n {
            elements.extend_from_slice(&[i, i + 1]);
            measure.push(h);
            centroids.push([(i as f64 + 0.5) * h, 0.0]);
            hat_gradients.push([-1.0 / h, 0.0]);
            hat_gradients.push([1.0 / h, 0.0]);
        }
        let boundary: Vec<bool> = (0..=n).map(|i| i == 0 || i == n).collect();
        Self::finish(
            1,
            level,
            n,
            nodes,
            elements,
            boundary,
            measure,
            centroids,
            hat_gradients,
        )
    }

    fn square(level: u32) -> Self {
        let n = 1usize << level;
        let h = 1.0 / n as f64;
        let stride = n + 1;
        let mut nodes = Vec::with_capacity(stride * stride);
        let mut boundary = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                nodes.push([i as f64 * h, j as f64 * h]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let ne = 2 * n * n;
        let mut elements = Vec::with_capacity(3 * ne);
        let mut measure = Vec::with_capacity(ne);
        let mut centroids = Vec::with_capacity(ne);
        let mut hat_gradients = Vec::with_capacity(3 * ne);
        let area = 0.5 * h * h;
        let g = 1.0 / h;
        for j in 0..n {
            for i in 0..n {
                let p00 = j * stride + i;
                let p10 = p00 + 1;
                let p01 = p00 + stride;
                let p11 = p01 + 1;
                let (x0, y0) = (i as f64 * h, j as f64 * h);
                // lower-right triangle (p00, p10, p11): λ00 = 1−ξ, λ10 = ξ−η, λ11 = η
                elements.extend_from_slice(&[p00, p10, p11]);
                measure.push(area);
                centroids.push([x0 + 2.0 * h / 3.0, y0 + h / 3.0]);
                hat_gradients.extend_from_slice(&[[-g, 0.0], [g, -g], [0.0, g]]);
                // upper-left triangle (p00, p11, p01): λ00 = 1−η, λ11 = ξ, λ01 = η−ξ
                elements.extend_from_slice(&[p00, p11, p01]);
                measure.push(area);
                centroids.push([x0 + h / 3.0, y0 + 2.0 * h / 3.0]);
                hat_gradients.extend_from_slice(&[[0.0, -g], [g, 0.0], [-g, g]]);
            }
        }
        Self::finish(
            2,
            level,
            n,
            nodes,
            elements,
            boundary,
            measure,
            centroids,
            hat_gradients,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        dim: usize,
        level: u32,
        cells: usize,
        nodes: Vec<[f64; 2]>,
        elements: Vec<usize>,
        boundary: Vec<bool>,
        measure: Vec<f64>,
        centroids: Vec<[f64; 2]>,
        hat_gradients: Vec<[f64; 2]>,
    ) -> Self {
        let mut dof_of_node = vec![None; nodes.len()];
        let mut node_of_dof = Vec::new();
        for (node, &on_boundary) in boundary.iter().enumerate() {
            if !on_boundary {
                dof_of_node[node] = Some(node_of_dof.len());
                node_of_dof.push(node);
            }
        }
        Self {
            dim,
            level,
            cells,
            nodes,
            elements,
            boundary,
            dof_of_node,
            node_of_dof,
            measure,
            centroids,
            hat_gradients,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Cells per side, 2^m.
    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    pub fn h(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.measure.len()
    }

    pub fn num_dofs(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.nodes_per_element();
        &self.elements[e * k..(e + 1) * k]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn node_of_dof(&self, dof: usize) -> usize {
        self.node_of_dof[dof]
    }

    pub fn measure(&self, e: usize) -> f64 {
        self.measure[e]
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        self.centroids[e]
    }

    pub fn hat_gradients(&self, e: usize) -> &[[f64; 2]] {
        let k = self.nodes_per_element();
        &self.hat_gradients[e * k..(e + 1) * k]
    }

    /// Bandwidth of the interior stiffness matrix in natural ordering.
    pub fn bandwidth(&self) -> usize {
        match self.dim {
            1 => 1,
            _ => self.cells - 1,
        }
    }

    /// Containing element and barycentric coordinates of `x`, aligned with
    /// [`Mesh::element`].
    pub fn locate(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        let inside = |v: f64| (0.0..=1.0).contains(&v);
        if x.len() < self.dim || !x[..self.dim].iter().all(|&v| inside(v)) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        let n = self.cells;
        let cell = |v: f64| ((v * n as f64).floor() as usize).min(n - 1);
        match self.dim {
            1 => {
                let i = cell(x[0]);
                let xi = x[0] * n as f64 - i as f64;
                Ok((i, vec![1.0 - xi, xi]))
            }
            _ => {
                let (i, j) = (cell(x[0]), cell(x[1]));
                let xi = x[0] * n as f64 - i as f64;
                let eta = x[1] * n as f64 - j as f64;
                let base = 2 * (j * n + i);
                if eta <= xi {
                    Ok((base, vec![1.0 - xi, xi - eta, eta]))
                } else {
                    Ok((base + 1, vec![1.0 - eta, xi, eta - xi]))
                }
            }
        }
    }

    /// Evaluates the P1 interpolant with the given nodal values at `x`.
    pub fn interpolate(&self, nodal: &[f64], x: &[f64]) -> Result<f64> {
        let (e, bary) = self.locate(x)?;
        Ok(self
            .element(e)
            .iter()
            .zip(&bary)
            .map(|(&node, &w)| w * nodal[node])
            .sum())
    }

    /// Gradient of a P1 function on element `e`.
    pub fn element_gradient(&self, nodal: &[f64], e: usize) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (&node, grad) in self.element(e).iter().zip(self.hat_gradients(e)) {
            g[0] += nodal[node] * grad[0];
            g[1] += nodal[node] * grad[1];
        }
        g
    }

    /// Scatters a DOF vector to a full nodal vector with zero boundary values.
    pub fn expand_dofs(&self, dofs: &[f64]) -> Vec<f64> {
        let mut nodal = vec![0.0; self.num_nodes()];
        for (dof, &v) in dofs.iter().enumerate() {
            nodal[self.node_of_dof[dof]] = v;
        }
        nodal
    }
}
