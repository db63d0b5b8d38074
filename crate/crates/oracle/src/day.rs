//! Certified search over convex-combination weights.
//!
//! For up to three points, find the minimum over the weight simplex of
//! the max-norm fixed-point residual, guaranteed within `tol` of the true
//! minimum. The residual is a maximum of finitely many affine functions
//! of the weights, so every sub-simplex admits an exact lower bound
//! (each affine piece is minimized at a vertex); branch-and-bound with
//! longest-edge bisection then converges without any convexity or
//! Lipschitz guesswork.

use dayflow::{AffineAction, Element};

use crate::OracleError;

/// One affine piece of the residual: λ ↦ Σᵢ λᵢ·coeffs[i].
struct Piece {
    coeffs: Vec<f64>,
}

struct Cell {
    /// Vertices in weight space; the cell is their convex hull.
    vertices: Vec<Vec<f64>>,
}

/// Minimize `max_s ‖y(λ) − s▷y(λ)‖∞` over the weight simplex, `m ≤ 3`
/// points, to within `tol` of the true minimum (from above).
pub fn day_simplex_search(
    points: &[Vec<f64>],
    action: &AffineAction,
    tol: f64,
) -> Result<f64, OracleError> {
    let m = points.len();
    if m == 0 || m > 3 {
        return Err(OracleError::Invalid(format!(
            "simplex search handles 1..=3 points, got {m}"
        )));
    }
    let dim = action.dimension();
    if points.iter().any(|p| p.len() != dim) {
        return Err(OracleError::Invalid(
            "point dimension does not match the action".into(),
        ));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(OracleError::Invalid("tolerance must be positive".into()));
    }

    // moves[i][s][j] = (xᵢ − s▷xᵢ)[j], with s▷x recomputed here from the
    // raw matrix and offset rather than through the action's own apply.
    let generators: Vec<Element> = action.spec().generators().to_vec();
    let mut pieces: Vec<Piece> = Vec::new();
    for (si, s) in generators.iter().enumerate() {
        let map = action
            .generator_map(s)
            .map_err(|e| OracleError::Invalid(e.to_string()))?;
        for j in 0..dim {
            for sign in [1.0, -1.0] {
                let mut coeffs = Vec::with_capacity(m);
                for p in points {
                    let image_j: f64 = map.matrix()[j]
                        .iter()
                        .zip(p)
                        .map(|(a, x)| a * x)
                        .sum::<f64>()
                        + map.offset()[j];
                    coeffs.push(sign * (p[j] - image_j));
                }
                pieces.push(Piece { coeffs });
            }
        }
        let _ = si;
    }
    let value = |lambda: &[f64]| -> f64 {
        pieces
            .iter()
            .map(|p| p.coeffs.iter().zip(lambda).map(|(c, l)| c * l).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    };

    // Start from the whole simplex: the identity weights as vertices.
    let mut corners = Vec::with_capacity(m);
    for i in 0..m {
        let mut v = vec![0.0; m];
        v[i] = 1.0;
        corners.push(v);
    }
    let mut best = corners.iter().map(|v| value(v)).fold(f64::INFINITY, f64::min);
    if m == 1 {
        return Ok(best);
    }
    let mut stack = vec![Cell { vertices: corners }];
    let mut processed = 0usize;
    while let Some(cell) = stack.pop() {
        processed += 1;
        if processed > 2_000_000 {
            return Err(OracleError::Invalid(
                "simplex search exceeded its cell budget".into(),
            ));
        }
        // Exact lower bound: each affine piece attains its minimum over
        // the cell at a vertex.
        let lower = pieces
            .iter()
            .map(|p| {
                cell.vertices
                    .iter()
                    .map(|v| p.coeffs.iter().zip(v).map(|(c, l)| c * l).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        if lower >= best - tol {
            continue;
        }
        // Tighten the incumbent at the centroid, then bisect the longest
        // edge.
        let centroid: Vec<f64> = (0..m)
            .map(|j| cell.vertices.iter().map(|v| v[j]).sum::<f64>() / cell.vertices.len() as f64)
            .collect();
        best = best.min(value(&centroid));
        let (mut ea, mut eb, mut longest) = (0, 1, -1.0);
        for a in 0..cell.vertices.len() {
            for b in a + 1..cell.vertices.len() {
                let len: f64 = cell.vertices[a]
                    .iter()
                    .zip(&cell.vertices[b])
                    .map(|(x, y)| (x - y).abs())
                    .sum();
                if len > longest {
                    (ea, eb, longest) = (a, b, len);
                }
            }
        }
        let mid: Vec<f64> = cell.vertices[ea]
            .iter()
            .zip(&cell.vertices[eb])
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        best = best.min(value(&mid));
        for replace in [ea, eb] {
            let mut vertices = cell.vertices.clone();
            vertices[replace] = mid.clone();
            stack.push(Cell { vertices });
        }
    }
    Ok(best)
}
