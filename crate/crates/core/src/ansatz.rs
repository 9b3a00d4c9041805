//! Parameterized templates for the hopping and bond subcircuits.

use serde::{Deserialize, Serialize};

use crate::gateset::{Circuit, Gate};

/// Qubit pair of a three-qubit hopping block (`a = 0`, `b = 1`, `c = 2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pair {
    AB,
    BC,
    AC,
}

impl Pair {
    pub fn qubits(self) -> (usize, usize) {
        match self {
            Pair::AB => (0, 1),
            Pair::BC => (1, 2),
            Pair::AC => (0, 2),
        }
    }
}

struct Builder {
    circ: Circuit,
    next: usize,
}

impl Builder {
    fn new(n: usize) -> Self {
        Builder { circ: Circuit::new(n), next: 0 }
    }

    fn add(&mut self, gate: Gate) {
        self.circ.push_param(gate, self.next);
        self.next += 1;
    }

    fn rx_ry_all(&mut self) {
        for q in 0..self.circ.n_qubits {
            self.add(Gate::rx(q, 0.0));
            self.add(Gate::ry(q, 0.0));
        }
    }

    fn xx(&mut self, p: Pair) {
        let (a, b) = p.qubits();
        self.add(Gate::xx(a, b, 0.0));
    }
}

/// Hardware-efficient template: per layer `RX`, `RY` on every qubit then the
/// listed entanglers; a closing `RX`, `RY` layer.
pub fn layered(layers: &[Vec<Pair>]) -> Circuit {
    let mut b = Builder::new(3);
    for layer in layers {
        b.rx_ry_all();
        for &p in layer {
            b.xx(p);
        }
    }
    b.rx_ry_all();
    b.circ
}

/// Three layers with `XX` on `(a, b)` and `(a, c)`: 30 parameters.
pub fn hopping_ansatz() -> Circuit {
    layered(&vec![vec![Pair::AB, Pair::AC]; 3])
}

/// One `XX` per layer, cycling `(a, b)`, `(b, c)`, `(a, c)`.
pub fn single_xx_family(l: usize) -> Circuit {
    let cycle = [Pair::AB, Pair::BC, Pair::AC];
    let layers: Vec<Vec<Pair>> = (0..l).map(|i| vec![cycle[i % 3]]).collect();
    layered(&layers)
}

/// `XX` on all three pairs in every layer.
pub fn full_family(l: usize) -> Circuit {
    layered(&vec![vec![Pair::AB, Pair::BC, Pair::AC]; l])
}

/// Two-qubit template for the bond block: `l` layers of `RX`, `RY` on both
/// qubits then `XX`, and a closing rotation layer.
pub fn bond_family(l: usize) -> Circuit {
    let mut b = Builder::new(2);
    for _ in 0..l {
        b.rx_ry_all();
        b.add(Gate::xx(0, 1, 0.0));
    }
    b.rx_ry_all();
    b.circ
}

/// Rewrites angles of `full_family(l)` for `single_xx_family(3 l)`: the extra
/// rotation layers between entanglers start at zero, so the unitary is the
/// same.
pub fn spread_full_family(l: usize, x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 12 * l);
    for i in 0..l {
        let b = i * 9;
        out.extend_from_slice(&x[b..b + 6]);
        out.push(x[b + 6]);
        for k in 7..9 {
            out.extend_from_slice(&[0.0; 6]);
            out.push(x[b + k]);
        }
    }
    out.extend_from_slice(&x[l * 9..]);
    out
}
