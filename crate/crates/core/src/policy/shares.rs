use rand::{CryptoRng, RngCore};

use super::{AccessTree, GateKind, Node, PolicyError};
use crate::group::{PairingBackend, ScalarField};

/// Per-node secret shares `q_x(0)`, indexed by preorder node id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareAssignment<S> {
    shares: Vec<S>,
    /// Coefficients of `q_x`, constant term first. Additive gates and leaves
    /// carry only their constant term.
    polynomials: Vec<Vec<S>>,
}

impl<S: ScalarField> ShareAssignment<S> {
    pub fn root_secret(&self) -> S {
        self.shares[0]
    }

    pub fn shares(&self) -> &[S] {
        &self.shares
    }

    pub fn share(&self, node: usize) -> S {
        self.shares[node]
    }

    pub fn polynomial(&self, node: usize) -> &[S] {
        &self.polynomials[node]
    }

    /// Shares of the leaves, in preorder leaf order.
    pub fn leaf_shares(&self, tree: &AccessTree) -> Vec<S> {
        tree.preorder()
            .iter()
            .enumerate()
            .filter(|(_, (n, _))| matches!(n, Node::Leaf(_)))
            .map(|(id, _)| self.shares[id])
            .collect()
    }
}

pub(crate) fn eval_poly<S: ScalarField>(coeffs: &[S], x: u64) -> S {
    let x = S::from_u64(x);
    coeffs.iter().rev().fold(S::zero(), |acc, &c| acc * x + c)
}

/// Top-down share assignment: the root gets `secret`; each gate picks a
/// random polynomial of degree `k - 1` through its own share and hands
/// `q(index)` to the child at 1-based `index`.
pub fn assign_shares<B, R>(tree: &AccessTree, secret: B::Scalar, rng: &mut R) -> ShareAssignment<B::Scalar>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    fn walk<B: PairingBackend, R: RngCore + CryptoRng + ?Sized>(
        node: &Node,
        share: B::Scalar,
        rng: &mut R,
        out: &mut ShareAssignment<B::Scalar>,
    ) {
        let id = out.shares.len();
        out.shares.push(share);
        out.polynomials.push(vec![share]);
        let Node::Gate(g) = node else { return };
        let child_shares: Vec<B::Scalar> = match g.kind() {
            GateKind::Threshold => {
                let coeffs: Vec<B::Scalar> = std::iter::once(share)
                    .chain((1..g.threshold()).map(|_| B::random_scalar(rng)))
                    .collect();
                let shares = (1..=g.children().len() as u64).map(|i| eval_poly(&coeffs, i)).collect();
                out.polynomials[id] = coeffs;
                shares
            }
            GateKind::Additive => {
                let n = g.children().len();
                let mut shares: Vec<B::Scalar> = (1..n).map(|_| B::random_scalar(rng)).collect();
                let rest = shares.iter().fold(share, |acc, &s| acc - s);
                shares.push(rest);
                shares
            }
        };
        for (child, s) in g.children().iter().zip(child_shares) {
            walk::<B, R>(child, s, rng, out);
        }
    }

    let mut out = ShareAssignment {
        shares: Vec::with_capacity(tree.node_count()),
        polynomials: Vec::with_capacity(tree.node_count()),
    };
    walk::<B, R>(tree.root(), secret, rng, &mut out);
    out
}

/// `Δ_{i,S}(0) = ∏_{j ∈ S, j ≠ i} (0 - j) / (i - j)`.
pub fn lagrange_coeff<S: ScalarField>(i: u64, set: &[u64]) -> Result<S, PolicyError> {
    if !set.contains(&i) {
        return Err(PolicyError::IndexNotInSet { index: i });
    }
    let xi = S::from_u64(i);
    let (num, den) = set.iter().filter(|&&j| j != i).fold((S::one(), S::one()), |(num, den), &j| {
        let xj = S::from_u64(j);
        (num * -xj, den * (xi - xj))
    });
    let inv = den.inverse().expect("indices are distinct");
    Ok(num * inv)
}
