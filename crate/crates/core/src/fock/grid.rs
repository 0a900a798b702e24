use crate::quad::{nodes_weights, Rule};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Spacetime dimension of the mass shell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dimension {
    Two,
    Three,
}

/// On-shell grid node. `momentum = (p0, p1, p2)`; `p2 = 0` in two dimensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub theta: f64,
    pub p2: f64,
    pub momentum: [f64; 3],
}

impl Node {
    pub fn on_shell(mass: f64, theta: f64, p2: f64) -> Node {
        let mt = mass.hypot(p2);
        Node { theta, p2, momentum: [mt * theta.cosh(), mt * theta.sinh(), p2] }
    }

    /// Rebuild `(theta, p2)` coordinates from a momentum; rejects off-shell input.
    pub fn from_momentum(mass: f64, p: [f64; 3]) -> Result<Node> {
        let sq = p[0] * p[0] - p[1] * p[1] - p[2] * p[2];
        if p[0] <= 0.0 || (sq - mass * mass).abs() > 1e-9 * p[0] * p[0].max(1.0) {
            return Err(Error::OffShell(p));
        }
        let theta = (p[1] / p[0]).atanh();
        Ok(Node { theta, p2: p[2], momentum: p })
    }
}

/// Grid block of the configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dimension: u8,
    pub mass: f64,
    pub theta_range: [f64; 2],
    pub theta_count: usize,
    #[serde(default)]
    pub p2_range: Option<[f64; 2]>,
    #[serde(default)]
    pub p2_count: Option<usize>,
    #[serde(default = "default_rule")]
    pub rule: Rule,
}

fn default_rule() -> Rule {
    Rule::GaussLegendre
}

impl GridSpec {
    pub fn build(&self) -> Result<GridMeasure> {
        match self.dimension {
            2 => GridMeasure::rapidity_range(self.mass, self.rule, self.theta_count, self.theta_range),
            3 => {
                let (r, c) = match (self.p2_range, self.p2_count) {
                    (Some(r), Some(c)) => (r, c),
                    _ => return Err(Error::Config("3D grid needs p2_range and p2_count".into())),
                };
                GridMeasure::shell3_range(self.mass, self.rule, self.theta_count, self.theta_range, c, r)
            }
            d => Err(Error::Config(format!("unsupported dimension {d}"))),
        }
    }
}

/// Discretized mass shell: on-shell nodes with positive weights approximating
/// `dmu`. In 3D the weights carry the `1/2 dtheta dp2` density.
#[derive(Clone, Debug)]
pub struct GridMeasure {
    dimension: Dimension,
    mass: f64,
    nodes: Vec<Node>,
    weights: Vec<f64>,
    reflection: Option<Vec<usize>>,
}

const MATCH_TOL: f64 = 1e-10;

impl GridMeasure {
    /// Symmetric rapidity grid on `[-theta_max, theta_max]`.
    pub fn rapidity(mass: f64, rule: Rule, n: usize, theta_max: f64) -> Result<Self> {
        Self::rapidity_range(mass, rule, n, [-theta_max, theta_max])
    }

    pub fn rapidity_range(mass: f64, rule: Rule, n: usize, range: [f64; 2]) -> Result<Self> {
        check_basic(mass, n, range)?;
        let (t, w) = nodes_weights(rule, n, range[0], range[1]);
        let nodes = t.iter().map(|&th| Node::on_shell(mass, th, 0.0)).collect();
        Self::from_nodes(Dimension::Two, mass, nodes, w)
    }

    /// Symmetric `(theta, p2)` tensor grid.
    pub fn shell3(mass: f64, rule: Rule, n_theta: usize, theta_max: f64, n_p2: usize, p2_max: f64) -> Result<Self> {
        Self::shell3_range(mass, rule, n_theta, [-theta_max, theta_max], n_p2, [-p2_max, p2_max])
    }

    pub fn shell3_range(mass: f64, rule: Rule, n_theta: usize, theta_range: [f64; 2], n_p2: usize, p2_range: [f64; 2]) -> Result<Self> {
        check_basic(mass, n_theta, theta_range)?;
        check_basic(mass, n_p2, p2_range)?;
        let (t, wt) = nodes_weights(rule, n_theta, theta_range[0], theta_range[1]);
        let (q, wq) = nodes_weights(rule, n_p2, p2_range[0], p2_range[1]);
        let mut nodes = Vec::with_capacity(n_theta * n_p2);
        let mut weights = Vec::with_capacity(n_theta * n_p2);
        for (th, a) in t.iter().zip(&wt) {
            for (p2, b) in q.iter().zip(&wq) {
                nodes.push(Node::on_shell(mass, *th, *p2));
                weights.push(0.5 * a * b);
            }
        }
        Self::from_nodes(Dimension::Three, mass, nodes, weights)
    }

    /// Arbitrary on-shell node list. Weights must be positive.
    pub fn from_nodes(dimension: Dimension, mass: f64, nodes: Vec<Node>, weights: Vec<f64>) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if nodes.len() != weights.len() || nodes.is_empty() {
            return Err(Error::InvalidParameter("node and weight counts differ or are zero".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidParameter(format!("non-positive weight {w}")));
        }
        for n in &nodes {
            let p = n.momentum;
            let sq = p[0] * p[0] - p[1] * p[1] - p[2] * p[2];
            if p[0] <= 0.0 || (sq - mass * mass).abs() > 1e-12 * p[0] * p[0].max(1.0) {
                return Err(Error::OffShell(p));
            }
            if dimension == Dimension::Two && p[2] != 0.0 {
                return Err(Error::OffShell(p));
            }
        }
        let mut g = GridMeasure { dimension, mass, nodes, weights, reflection: None };
        g.reflection = g.node_map(|p| [p[0], p[1], -p[2]]);
        Ok(g)
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node permutation realizing `p -> (p0, p1, -p2)`, when the grid is closed under it.
    pub fn reflection(&self) -> Option<&[usize]> {
        self.reflection.as_deref()
    }

    /// Index map `i -> j` with `nodes[j] = f(nodes[i])`, if every image is a node.
    pub fn node_map(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Option<Vec<usize>> {
        self.nodes
            .iter()
            .map(|n| {
                let q = f(n.momentum);
                let scale = q[0].abs().max(1.0);
                self.nodes.iter().position(|c| (0..3).all(|k| (c.momentum[k] - q[k]).abs() <= MATCH_TOL * scale))
            })
            .collect()
    }

    /// Same weights, nodes moved by a measure-preserving map (a Lorentz transformation).
    pub fn pushed_forward(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<Self> {
        let nodes = self.nodes.iter().map(|n| Node::from_momentum(self.mass, f(n.momentum))).collect::<Result<Vec<_>>>()?;
        Self::from_nodes(self.dimension, self.mass, nodes, self.weights.clone())
    }

    /// Content equality (bitwise on nodes and weights).
    pub fn same_as(&self, other: &GridMeasure) -> bool {
        std::ptr::eq(self, other)
            || (self.dimension == other.dimension
                && self.mass == other.mass
                && self.weights == other.weights
                && self.nodes.iter().zip(&other.nodes).all(|(a, b)| a.momentum == b.momentum))
    }

    /// Quadrature of `f` over the shell.
    pub fn integrate(&self, f: impl Fn(&Node) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(n, w)| w * f(n)).sum()
    }
}

fn check_basic(mass: f64, n: usize, range: [f64; 2]) -> Result<()> {
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("grid needs at least one node".into()));
    }
    if !(range[1] > range[0]) || !range[0].is_finite() || !range[1].is_finite() {
        return Err(Error::InvalidParameter(format!("bad range {range:?}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_on_shell() {
        let g = GridMeasure::shell3(1.3, Rule::GaussLegendre, 7, 3.0, 5, 2.0).unwrap();
        for n in g.nodes() {
            let p = n.momentum;
            assert!((p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - 1.69).abs() < 1e-12 * p[0] * p[0]);
            assert!(p[0] > 0.0);
        }
        assert!(g.weights().iter().all(|w| *w > 0.0));
    }

    #[test]
    fn symmetric_grids_are_reflection_closed() {
        let g = GridMeasure::shell3(1.0, Rule::Trapezoid, 4, 2.0, 6, 1.5).unwrap();
        let r = g.reflection().unwrap();
        for (i, &j) in r.iter().enumerate() {
            assert_eq!(r[j], i);
            assert_eq!(g.nodes()[j].p2, -g.nodes()[i].p2);
        }
        let skew = GridMeasure::shell3_range(1.0, Rule::Trapezoid, 4, [-2.0, 2.0], 3, [-1.0, 2.0]).unwrap();
        assert!(skew.reflection().is_none());
    }

    #[test]
    fn gaussian_quadrature_converges() {
        // int dtheta e^{-theta^2} = sqrt(pi)
        let exact = std::f64::consts::PI.sqrt();
        let mut last = f64::INFINITY;
        for n in [8, 16, 32] {
            let g = GridMeasure::rapidity(1.0, Rule::GaussLegendre, n, 6.0).unwrap();
            let err = (g.integrate(|n| (-n.theta * n.theta).exp()) - exact).abs();
            assert!(err <= last);
            last = err;
        }
        assert!(last < 1e-10);
        // 3D: (1/2) int dtheta dp2 e^{-theta^2 - p2^2} = pi / 2
        let g = GridMeasure::shell3(1.0, Rule::GaussLegendre, 40, 6.0, 40, 6.0).unwrap();
        let v = g.integrate(|n| (-n.theta * n.theta - n.p2 * n.p2).exp());
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
    }

    #[test]
    fn off_shell_nodes_are_rejected() {
        let bad = Node { theta: 0.0, p2: 0.0, momentum: [2.0, 0.0, 0.0] };
        assert!(matches!(GridMeasure::from_nodes(Dimension::Two, 1.0, vec![bad], vec![1.0]), Err(Error::OffShell(_))));
        assert!(GridMeasure::rapidity(0.0, Rule::Trapezoid, 4, 1.0).is_err());
    }

    #[test]
    fn spec_builds_both_dimensions() {
        let s: GridSpec = toml::from_str(
            "dimension = 3\nmass = 1.0\ntheta_range = [-2.0, 2.0]\ntheta_count = 3\np2_range = [-1.0, 1.0]\np2_count = 2\nrule = \"trapezoid\"",
        )
        .unwrap();
        assert_eq!(s.build().unwrap().len(), 6);
        let s2 = GridSpec { dimension: 2, p2_range: None, p2_count: None, ..s };
        assert_eq!(s2.build().unwrap().dimension(), Dimension::Two);
    }
}
