//! Fixed quadrature rules on the reference interval (0, 1).

use std::str::FromStr;

use crate::error::Error;
use crate::geometry::Segment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    /// Midpoint rule.
    Gauss1,
    Gauss2,
    Gauss3,
    /// Three-point Lobatto (Simpson).
    Lobatto3,
}

impl RuleKind {
    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        match self {
            RuleKind::Gauss1 => 1,
            RuleKind::Gauss2 => 3,
            RuleKind::Gauss3 => 5,
            RuleKind::Lobatto3 => 3,
        }
    }
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gauss1" | "midpoint" => Ok(RuleKind::Gauss1),
            "gauss2" => Ok(RuleKind::Gauss2),
            "gauss3" => Ok(RuleKind::Gauss3),
            "lobatto3" => Ok(RuleKind::Lobatto3),
            other => Err(Error::invalid("rule", format!("unknown quadrature rule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn make_rule(kind: RuleKind) -> QuadRule {
    let (nodes, weights) = match kind {
        RuleKind::Gauss1 => (vec![0.5], vec![1.0]),
        RuleKind::Gauss2 => {
            let d = 0.5 / 3f64.sqrt();
            (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5])
        }
        RuleKind::Gauss3 => {
            let d = 0.5 * (3.0f64 / 5.0).sqrt();
            (vec![0.5 - d, 0.5, 0.5 + d], vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
        }
        RuleKind::Lobatto3 => (vec![0.0, 0.5, 1.0], vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]),
    };
    QuadRule {
        kind,
        nodes,
        weights,
    }
}

impl QuadRule {
    pub fn new(kind: RuleKind) -> Self {
        make_rule(kind)
    }

    /// Physical points and weights of the rule mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let len = b - a;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (a + len * x, len * w))
    }

    pub fn apply(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Composite integral over a list of segments; an empty list gives 0.
pub fn integrate<'a>(
    f: impl Fn(f64) -> f64,
    segments: impl IntoIterator<Item = &'a Segment>,
    rule: &QuadRule,
) -> f64 {
    segments.into_iter().map(|s| rule.apply(&f, s.a, s.b)).sum()
}

/// Split `[a, b]` into `n` equal segments.
pub fn subdivide(a: f64, b: f64, n: usize) -> Vec<Segment> {
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let x1 = if i + 1 == n { b } else { a + (i + 1) as f64 * h };
            Segment::new(a + i as f64 * h, x1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const ALL: [RuleKind; 4] = [
        RuleKind::Gauss1,
        RuleKind::Gauss2,
        RuleKind::Gauss3,
        RuleKind::Lobatto3,
    ];

    #[test]
    fn reference_values() {
        let g3 = make_rule(RuleKind::Gauss3);
        let d = (0.6f64).sqrt() / 2.0;
        assert_abs_diff_eq!(g3.nodes[0], 0.5 - d, epsilon = 1e-16);
        assert_abs_diff_eq!(g3.nodes[2], 0.5 + d, epsilon = 1e-16);
        assert_eq!(g3.nodes[1], 0.5);
        assert_eq!(g3.weights, vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]);

        let g1 = make_rule(RuleKind::Gauss1);
        assert_eq!((g1.nodes.clone(), g1.weights.clone()), (vec![0.5], vec![1.0]));

        let l3 = make_rule(RuleKind::Lobatto3);
        assert_eq!(l3.nodes, vec![0.0, 0.5, 1.0]);
        assert_eq!(l3.weights, vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]);

        assert!("gauss7".parse::<RuleKind>().is_err());
        assert_eq!("lobatto3".parse::<RuleKind>().unwrap(), RuleKind::Lobatto3);
    }

    #[test]
    fn weights_sum_to_one_and_monomials_exact() {
        for kind in ALL {
            let r = make_rule(kind);
            assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
            for p in 0..=kind.exact_degree() {
                let got = r.apply(|x| x.powi(p as i32), 0.0, 1.0);
                assert_abs_diff_eq!(got, 1.0 / (p + 1) as f64, epsilon = 1e-15);
            }
            let p = kind.exact_degree() + 1;
            let got = r.apply(|x| x.powi(p as i32), 0.0, 1.0);
            assert!((got - 1.0 / (p + 1) as f64).abs() > 1e-6, "{kind:?} too exact");
        }
    }

    #[test]
    fn integrate_examples() {
        let one = [Segment::new(0.0, 1.0)];
        let g3 = make_rule(RuleKind::Gauss3);
        assert_abs_diff_eq!(integrate(|x| x.powi(5), &one, &g3), 1.0 / 6.0, epsilon = 1e-15);
        let g1 = make_rule(RuleKind::Gauss1);
        assert_abs_diff_eq!(integrate(|x| x, &one, &g1), 0.5, epsilon = 1e-15);
        let segs = subdivide(0.0, 1.0, 64);
        let v = integrate(|x| (std::f64::consts::PI * x).sin().powi(2), &segs, &g3);
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-10);
        assert_eq!(integrate(|x| x, &[], &g3), 0.0);
    }

    proptest! {
        #[test]
        fn splitting_preserves_polynomial_integrals(
            a in 0.0f64..0.5, len in 0.01f64..0.5, t in 0.05f64..0.95,
            c in proptest::collection::vec(-1.0f64..1.0, 6)
        ) {
            let b = a + len;
            let m = a + t * len;
            let poly = |x: f64| c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci);
            let g3 = make_rule(RuleKind::Gauss3);
            let whole = integrate(poly, &[Segment::new(a, b)], &g3);
            let split = integrate(poly, &[Segment::new(a, m), Segment::new(m, b)], &g3);
            let scale: f64 = c.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
            prop_assert!((whole - split).abs() <= 1e-14 * scale);
        }
    }
}
