//! Built-in Hamiltonians, in the Pauli convention (`σ`, not `S = σ/2`).
//!
//! Local matrices use the ascending local basis, so for spin-1/2 the first
//! basis state is `σ = -1`:
//!
//! ```text
//! σx = [[0, 1], [1, 0]]   σy = [[0, i], [-i, 0]]   σz = diag(-1, +1)
//! ```

use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, LocalKind};
use crate::lattice::Graph;
use crate::linalg::DenseMatrix;
use crate::scalar::{cplx, creal, Real};

use super::Operator;

pub fn pauli_x<T: Real>() -> DenseMatrix<T> {
    DenseMatrix::from_real_rows(&[vec![T::zero(), T::one()], vec![T::one(), T::zero()]]).expect("2x2")
}

pub fn pauli_y<T: Real>() -> DenseMatrix<T> {
    let (o, i) = (cplx(T::zero(), T::zero()), cplx(T::zero(), T::one()));
    DenseMatrix::from_rows(&[vec![o, i], vec![-i, o]]).expect("2x2")
}

pub fn pauli_z<T: Real>() -> DenseMatrix<T> {
    DenseMatrix::from_real_rows(&[vec![-T::one(), T::zero()], vec![T::zero(), T::one()]]).expect("2x2")
}

/// One term per site per `site_ops` entry, one term per bond of the matching
/// color per `bond_ops` entry. Colors without bonds contribute nothing.
pub fn graph_operator<T: Real>(
    hilbert: &HilbertSpace<T>,
    graph: &Graph,
    site_ops: &[DenseMatrix<T>],
    bond_ops: &[(usize, DenseMatrix<T>)],
) -> Result<Operator<T>> {
    if graph.n_sites() != hilbert.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: hilbert.n_sites(),
            found: graph.n_sites(),
        });
    }
    let mut op = Operator::zero(hilbert);
    for m in site_ops {
        for site in 0..graph.n_sites() {
            op.push_term(vec![site], m.clone())?;
        }
    }
    for (color, m) in bond_ops {
        for &(i, j, c) in graph.edges() {
            if c == *color {
                op.push_term(vec![i, j], m.clone())?;
            }
        }
    }
    Ok(op)
}

fn require_spin_half<T: Real>(hilbert: &HilbertSpace<T>, name: &str) -> Result<()> {
    if !hilbert.is_spin_half() {
        return Err(Error::invalid(format!("{name} requires a spin-1/2 Hilbert space")));
    }
    Ok(())
}

/// Transverse-field Ising model `H = -h Σ σx_i - Σ_<ij> σz_i σz_j` on every
/// bond of the graph.
pub fn ising<T: Real>(hilbert: &HilbertSpace<T>, graph: &Graph, h: T) -> Result<Operator<T>> {
    require_spin_half(hilbert, "ising")?;
    let field = pauli_x().scaled(creal(-h));
    let zz = pauli_z::<T>().kron(&pauli_z()).scaled(creal(-T::one()));
    let mut op = graph_operator(hilbert, graph, &[field], &[])?;
    for &(i, j, _) in graph.edges() {
        op.push_term(vec![i, j], zz.clone())?;
    }
    Ok(op)
}

/// Two-site Heisenberg bond `σz σz + s (σx σx + σy σy)` with exchange sign `s`.
pub fn heisenberg_bond<T: Real>(exchange_sign: T) -> DenseMatrix<T> {
    let zz = pauli_z::<T>().kron(&pauli_z());
    let xy = pauli_x::<T>()
        .kron(&pauli_x())
        .add(&pauli_y::<T>().kron(&pauli_y()))
        .expect("same shape");
    zz.add(&xy.scaled(creal(exchange_sign))).expect("same shape")
}

/// Heisenberg model `H = Σ_<ij> σ_i · σ_j` on every bond.
///
/// On bipartite graphs the Marshall sign gauge is applied, which flips the
/// sign of the spin-exchange element to `-2` and leaves the spectrum
/// unchanged; the gauged ground state has non-negative amplitudes.
pub fn heisenberg<T: Real>(hilbert: &HilbertSpace<T>, graph: &Graph) -> Result<Operator<T>> {
    heisenberg_with_sign_rule(hilbert, graph, graph.is_bipartite())
}

/// As [`heisenberg`], with explicit control over the sign gauge.
pub fn heisenberg_with_sign_rule<T: Real>(
    hilbert: &HilbertSpace<T>,
    graph: &Graph,
    sign_rule: bool,
) -> Result<Operator<T>> {
    require_spin_half(hilbert, "heisenberg")?;
    if sign_rule && !graph.is_bipartite() {
        return Err(Error::invalid("the Marshall sign rule needs a bipartite graph"));
    }
    let sign = if sign_rule { -T::one() } else { T::one() };
    let bond = heisenberg_bond(sign);
    let mut op = Operator::zero(hilbert);
    for &(i, j, _) in graph.edges() {
        op.push_term(vec![i, j], bond.clone())?;
    }
    Ok(op)
}

/// Bose-Hubbard model
/// `H = -Σ_<ij> (b†_i b_j + b†_j b_i) + U/2 Σ n_i (n_i - 1) - μ Σ n_i`
/// with the ladder operators truncated at `n_max`.
pub fn bose_hubbard<T: Real>(hilbert: &HilbertSpace<T>, graph: &Graph, u: T, mu: T) -> Result<Operator<T>> {
    let n_max = match hilbert.kind() {
        LocalKind::Boson { n_max } => n_max,
        _ => return Err(Error::invalid("bose_hubbard requires a bosonic Hilbert space")),
    };
    let d = n_max + 1;
    // b†|n> = sqrt(n+1)|n+1>
    let mut create = DenseMatrix::zeros(d, d);
    for n in 0..n_max {
        create[(n + 1, n)] = creal(T::of_usize(n + 1).sqrt());
    }
    let destroy = create.adjoint();
    let hop = create
        .kron(&destroy)
        .add(&destroy.kron(&create))?
        .scaled(creal(-T::one()));
    let half = T::of(0.5);
    let mut onsite = DenseMatrix::zeros(d, d);
    for n in 0..d {
        let nf = T::of_usize(n);
        onsite[(n, n)] = creal(half * u * nf * (nf - T::one()) - mu * nf);
    }
    let mut op = graph_operator(hilbert, graph, &[onsite], &[])?;
    for &(i, j, _) in graph.edges() {
        op.push_term(vec![i, j], hop.clone())?;
    }
    Ok(op)
}
