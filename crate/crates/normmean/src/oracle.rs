use nalgebra::DVector;

/// Answer from a dual-ball separation oracle.
#[derive(Debug, Clone)]
pub enum Separation {
    Inside,
    /// Halfspace <normal, x> <= offset containing the dual ball and
    /// violated by the query point.
    Violated { normal: DVector<f64>, offset: f64 },
}

/// Separation oracle for the unit ball of the dual norm.
pub trait SeparationOracle {
    fn name(&self) -> &str;
    fn separate(&self, w: &DVector<f64>) -> Separation;
    /// Upper bound on sup_{||x||_* <= 1} ||x||_2.
    fn radius_bound(&self) -> f64;
}

/// Built-in norms. The oracle separates over the dual ball: l2 against the
/// l2 ball, l1 against the l-infinity box, l-infinity against the l1
/// cross-polytope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinNorm {
    L2 { d: usize },
    L1 { d: usize },
    Linf { d: usize },
}

impl BuiltinNorm {
    /// The primal norm, used by closeness checks in tests.
    pub fn primal_norm(&self, v: &DVector<f64>) -> f64 {
        match self {
            BuiltinNorm::L2 { .. } => v.norm(),
            BuiltinNorm::L1 { .. } => v.iter().map(|x| x.abs()).sum(),
            BuiltinNorm::Linf { .. } => v.amax(),
        }
    }
}

impl SeparationOracle for BuiltinNorm {
    fn name(&self) -> &str {
        match self {
            BuiltinNorm::L2 { .. } => "l2",
            BuiltinNorm::L1 { .. } => "l1",
            BuiltinNorm::Linf { .. } => "linf",
        }
    }

    fn separate(&self, w: &DVector<f64>) -> Separation {
        match self {
            BuiltinNorm::L2 { .. } => {
                let n = w.norm();
                if n <= 1.0 {
                    Separation::Inside
                } else {
                    Separation::Violated {
                        normal: w / n,
                        offset: 1.0,
                    }
                }
            }
            // Dual of l1 is the box {|x_i| <= 1}.
            BuiltinNorm::L1 { d } => {
                for i in 0..*d {
                    if w[i].abs() > 1.0 {
                        let mut normal = DVector::zeros(*d);
                        normal[i] = w[i].signum();
                        return Separation::Violated {
                            normal,
                            offset: 1.0,
                        };
                    }
                }
                Separation::Inside
            }
            // Dual of l-infinity is the cross-polytope {sum |x_i| <= 1}.
            BuiltinNorm::Linf { .. } => {
                let l1: f64 = w.iter().map(|x| x.abs()).sum();
                if l1 <= 1.0 {
                    Separation::Inside
                } else {
                    Separation::Violated {
                        normal: w.map(|x| x.signum()),
                        offset: 1.0,
                    }
                }
            }
        }
    }

    fn radius_bound(&self) -> f64 {
        match self {
            BuiltinNorm::L2 { .. } => 1.0,
            BuiltinNorm::L1 { d } => (*d as f64).sqrt(),
            BuiltinNorm::Linf { .. } => 1.0,
        }
    }
}
