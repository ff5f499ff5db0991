use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Monomial, PolySystem, PrimeModulus};

/// Outcome of the degree-2 independence test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Independence {
    pub independent: bool,
    /// Nonzero `a` with `deg(Σ a_j G_j) <= 1`, first nonzero entry equal to 1.
    pub witness: Option<Vec<u64>>,
}

/// Rank test over `F_p`: the system is degree-2 independent iff the
/// degree-≥2 coefficient rows of `G_1..G_n` have full rank `n`.
pub fn degree2_independent(system: &PolySystem, p: PrimeModulus) -> Independence {
    let n = system.n();
    let reduced: Vec<_> = system.polys().iter().map(|g| g.reduce_mod(p)).collect();
    let columns: Vec<Monomial> = reduced
        .iter()
        .flat_map(|g| g.terms().filter(|(m, _)| m.degree() >= 2).map(|(m, _)| m.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    // Transposed matrix: one row per monomial, one column per polynomial, so
    // the null space is exactly the set of vanishing combinations.
    let mut rows: Vec<Vec<u64>> = columns
        .iter()
        .map(|mono| {
            reduced
                .iter()
                .map(|g| p.reduce_i64(g.coefficient(mono.exponents())))
                .collect()
        })
        .collect();

    let pivots = row_reduce(&mut rows, n, p);
    if pivots.len() == n {
        return Independence {
            independent: true,
            witness: None,
        };
    }

    let free = (0..n).find(|c| !pivots.contains(c)).unwrap();
    let mut a = vec![0u64; n];
    a[free] = 1;
    for (r, &pc) in pivots.iter().enumerate() {
        // pivot row: x_pc + rows[r][free] * x_free = 0
        a[pc] = (p.get() - rows[r][free]) % p.get();
    }
    let lead = *a.iter().find(|&&v| v != 0).unwrap();
    let scale = p.inv(lead);
    for v in &mut a {
        *v = p.mul(*v, scale);
    }
    Independence {
        independent: false,
        witness: Some(a),
    }
}

/// In-place reduced row echelon form; returns the pivot column of each
/// leading row.
fn row_reduce(rows: &mut [Vec<u64>], ncols: usize, p: PrimeModulus) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(pr) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = p.inv(rows[r][c]);
        for v in rows[r].iter_mut() {
            *v = p.mul(*v, inv);
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let f = rows[i][c];
                for k in 0..ncols {
                    let sub = p.mul(f, rows[r][k]);
                    rows[i][k] = (rows[i][k] + p.get() - sub) % p.get();
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    pivots
}
