use ndarray::Array2;

use crate::error::{Error, Result};

pub const SUPPORTED_ORDERS: [usize; 10] = [2, 4, 6, 8, 10, 12, 14, 16, 18, 20];

/// Finite field GF(q) for q prime or q = 9, elements encoded as 0..q.
struct Field {
    q: usize,
}

impl Field {
    fn add(&self, a: usize, b: usize) -> usize {
        if self.q == 9 {
            (a % 3 + b % 3) % 3 + 3 * ((a / 3 + b / 3) % 3)
        } else {
            (a + b) % self.q
        }
    }

    fn neg(&self, a: usize) -> usize {
        if self.q == 9 {
            (3 - a % 3) % 3 + 3 * ((3 - a / 3) % 3)
        } else {
            (self.q - a) % self.q
        }
    }

    /// GF(9) = GF(3)[t] / (t^2 + 1); element a0 + a1 t is encoded a0 + 3 a1.
    fn mul(&self, a: usize, b: usize) -> usize {
        if self.q == 9 {
            let (a0, a1, b0, b1) = (a % 3, a / 3, b % 3, b / 3);
            let c0 = (a0 * b0 + 2 * a1 * b1) % 3;
            let c1 = (a0 * b1 + a1 * b0) % 3;
            c0 + 3 * c1
        } else {
            a * b % self.q
        }
    }

    /// Quadratic character: 0, +1 on nonzero squares, -1 otherwise.
    fn chi_table(&self) -> Vec<i64> {
        let mut chi = vec![-1; self.q];
        chi[0] = 0;
        for a in 1..self.q {
            chi[self.mul(a, a)] = 1;
        }
        chi
    }
}

/// Paley conference matrix of order q + 1; symmetric when q = 1 mod 4, skew when q = 3 mod 4.
fn paley(q: usize) -> Array2<i64> {
    let f = Field { q };
    let chi = f.chi_table();
    let sign = if q % 4 == 1 { 1 } else { -1 };
    let mut c = Array2::zeros((q + 1, q + 1));
    for j in 1..=q {
        c[(0, j)] = 1;
        c[(j, 0)] = sign;
    }
    for a in 0..q {
        for b in 0..q {
            c[(a + 1, b + 1)] = chi[f.add(a, f.neg(b))];
        }
    }
    c
}

/// Order 2n from a skew conference matrix of order n: `[[C, C + I], [C - I, -C]]`.
fn skew_double(c: &Array2<i64>) -> Array2<i64> {
    let n = c.nrows();
    let mut d = Array2::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            let id = i64::from(i == j);
            d[(i, j)] = c[(i, j)];
            d[(i, j + n)] = c[(i, j)] + id;
            d[(i + n, j)] = c[(i, j)] - id;
            d[(i + n, j + n)] = -c[(i, j)];
        }
    }
    d
}

/// Conference matrix: zero diagonal, +-1 elsewhere, `C^T C = (order - 1) I`.
pub fn conference_matrix(order: usize) -> Result<Array2<i64>> {
    match order {
        2 => Ok(ndarray::array![[0, 1], [1, 0]]),
        16 => Ok(skew_double(&paley(7))),
        4 | 6 | 8 | 10 | 12 | 14 | 18 | 20 => Ok(paley(order - 1)),
        _ => Err(Error::Construction(format!(
            "no conference matrix of order {order}; supported orders are {SUPPORTED_ORDERS:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_supported_order_is_a_conference_matrix() {
        for order in SUPPORTED_ORDERS {
            let c = conference_matrix(order).unwrap();
            let ctc = c.t().dot(&c);
            for i in 0..order {
                assert_eq!(c[(i, i)], 0, "order {order}");
                for j in 0..order {
                    if i != j {
                        assert_eq!(c[(i, j)].abs(), 1, "order {order}");
                    }
                    assert_eq!(ctc[(i, j)], if i == j { order as i64 - 1 } else { 0 }, "order {order}");
                }
            }
        }
    }

    #[test]
    fn unsupported_order() {
        for order in [3, 22, 0] {
            assert!(matches!(conference_matrix(order), Err(Error::Construction(_))));
        }
    }
}
