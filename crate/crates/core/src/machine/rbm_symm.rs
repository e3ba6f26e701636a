use crate::error::{Error, Result};
use crate::lattice::SymmetryGroup;
use crate::scalar::{creal, czero, tanh, Real, C};

use super::{check_n_par, LookupTable, Machine, RbmSpin};

/// RBM with weights tied over a permutation group `G`.
///
/// For each feature `f < alpha` and group element `g` there is one hidden
/// unit with input `θ_{f,g} = b_f + Σ_i W_{f,i} σ_{g(i)}`; all visible biases
/// share the value `a`. Parameter layout: `[a, b (alpha), W (alpha x N,
/// row-major)]`.
///
/// Evaluation goes through the equivalent expanded [`RbmSpin`], kept in sync
/// on every parameter change.
#[derive(Clone, Debug)]
pub struct RbmSpinSymm<T> {
    group: SymmetryGroup,
    alpha: usize,
    a: C<T>,
    b: Vec<C<T>>,
    w: Vec<C<T>>,
    expanded: RbmSpin<T>,
}

impl<T: Real> RbmSpinSymm<T> {
    pub fn new(group: SymmetryGroup, alpha: usize) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::invalid("alpha must be positive"));
        }
        let n = group.n_sites();
        let mut m = RbmSpinSymm {
            expanded: RbmSpin::new(n, alpha * group.order()),
            group,
            alpha,
            a: czero(),
            b: vec![czero(); alpha],
            w: vec![czero(); alpha * n],
        };
        m.expand();
        Ok(m)
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn group(&self) -> &SymmetryGroup {
        &self.group
    }

    /// The plain RBM with explicitly tied weights.
    pub fn expanded(&self) -> &RbmSpin<T> {
        &self.expanded
    }

    fn expand(&mut self) {
        let n = self.group.n_sites();
        let order = self.group.order();
        let m = self.alpha * order;
        let mut p = Vec::with_capacity(n + m + n * m);
        p.extend(std::iter::repeat_n(self.a, n));
        for f in 0..self.alpha {
            p.extend(std::iter::repeat_n(self.b[f], order));
        }
        for f in 0..self.alpha {
            for perm in self.group.permutations() {
                let mut row = vec![czero(); n];
                for (i, &gi) in perm.iter().enumerate() {
                    row[gi] = self.w[f * n + i];
                }
                p.extend(row);
            }
        }
        self.expanded.set_parameters(&p).expect("expanded layout");
    }
}

impl<T: Real> Machine<T> for RbmSpinSymm<T> {
    fn kind(&self) -> &'static str {
        "RbmSpinSymm"
    }

    fn shape(&self) -> Vec<usize> {
        vec![self.group.n_sites(), self.alpha, self.group.order()]
    }

    fn n_visible(&self) -> usize {
        self.group.n_sites()
    }

    fn n_par(&self) -> usize {
        1 + self.alpha + self.alpha * self.group.n_sites()
    }

    fn parameters(&self) -> Vec<C<T>> {
        let mut p = Vec::with_capacity(self.n_par());
        p.push(self.a);
        p.extend_from_slice(&self.b);
        p.extend_from_slice(&self.w);
        p
    }

    fn set_parameters(&mut self, p: &[C<T>]) -> Result<()> {
        check_n_par(self.n_par(), p)?;
        self.a = p[0];
        self.b.copy_from_slice(&p[1..1 + self.alpha]);
        self.w.copy_from_slice(&p[1 + self.alpha..]);
        self.expand();
        Ok(())
    }

    fn log_val(&self, v: &[T]) -> C<T> {
        self.expanded.log_val(v)
    }

    fn der_log(&self, v: &[T]) -> Vec<C<T>> {
        let n = self.group.n_sites();
        let order = self.group.order();
        let t: Vec<C<T>> = self.expanded.theta(v).into_iter().map(tanh).collect();
        let mut out = vec![czero(); self.n_par()];
        out[0] = creal(v.iter().copied().sum());
        for f in 0..self.alpha {
            for (g, perm) in self.group.permutations().iter().enumerate() {
                let tj = t[f * order + g];
                out[1 + f] += tj;
                let base = 1 + self.alpha + f * n;
                for (i, &gi) in perm.iter().enumerate() {
                    out[base + i] += tj * v[gi];
                }
            }
        }
        out
    }

    fn lookup(&self, v: &[T]) -> LookupTable<T> {
        self.expanded.lookup(v)
    }

    fn log_val_diff(&self, v: &[T], changes: &[(usize, T)], lt: &LookupTable<T>) -> C<T> {
        self.expanded.log_val_diff(v, changes, lt)
    }

    fn update_lookup(&self, v: &[T], changes: &[(usize, T)], lt: &mut LookupTable<T>) {
        self.expanded.update_lookup(v, changes, lt)
    }
}
