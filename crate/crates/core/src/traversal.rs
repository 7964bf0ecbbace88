//! Cell traversal along a segment in lattice-coefficient coordinates.
//!
//! The walk marches the unit cells met by a segment and emits, for each
//! cell, the integer points in a margin box around it. Coverage guarantee:
//! any integer point z within (coefficient-space) distance < `margin` of
//! the segment is emitted. Proof sketch: let p be the nearest segment point
//! to z and c a visited cell whose closure contains p; then
//! z_i in (p_i - m, p_i + m) and p_i in [c_i, c_i + 1] force
//! z_i in {c_i - m + 1, ..., c_i + m}, which is exactly the emitted box.
//! The walk's cell path is connected (one axis step at a time), so the
//! incremental emission of one box face per step reproduces the union of
//! boxes without duplicates.

/// Walks the segment `a -> b` and calls `visit(point, t_entry)` for every
/// candidate integer point, where `t_entry` in [0,1] is the segment
/// parameter at which the emitting cell was entered (useful for early
/// termination). `visit` returns false to stop the walk.
///
/// `margin` must be >= 1; candidates per cell are (2 margin)^d for the
/// first cell and (2 margin)^{d-1} per subsequent step.
pub fn traverse_segment(
    a: &[f64],
    b: &[f64],
    margin: i64,
    mut visit: impl FnMut(&[i64], f64) -> bool,
) -> bool {
    let d = a.len();
    debug_assert!(margin >= 1);
    let m = margin;

    let mut cell: Vec<i64> = a.iter().map(|&x| x.floor() as i64).collect();
    let u: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mut step = vec![0i64; d];
    let mut t_max = vec![f64::INFINITY; d];
    let mut t_delta = vec![f64::INFINITY; d];
    for k in 0..d {
        if u[k] > 0.0 {
            step[k] = 1;
            t_delta[k] = 1.0 / u[k];
            t_max[k] = ((cell[k] + 1) as f64 - a[k]) / u[k];
        } else if u[k] < 0.0 {
            step[k] = -1;
            t_delta[k] = -1.0 / u[k];
            t_max[k] = (cell[k] as f64 - a[k]) / u[k];
        }
    }

    // initial full box
    let mut p = vec![0i64; d];
    if !emit_box(&cell, m, 0, &mut p, &mut |q| visit(q, 0.0)) {
        return false;
    }

    loop {
        // next axis crossing
        let mut axis = 0;
        for k in 1..d {
            if t_max[k] < t_max[axis] {
                axis = k;
            }
        }
        let t = t_max[axis];
        if t > 1.0 {
            return true;
        }
        cell[axis] += step[axis];
        t_max[axis] += t_delta[axis];
        // new face of the margin box, orthogonal to `axis`
        let face = if step[axis] == 1 {
            cell[axis] + m
        } else {
            cell[axis] - m + 1
        };
        p[axis] = face;
        if !emit_face(&cell, m, axis, 0, &mut p, &mut |q| visit(q, t)) {
            return false;
        }
    }
}

fn emit_box(
    cell: &[i64],
    m: i64,
    k: usize,
    p: &mut Vec<i64>,
    visit: &mut impl FnMut(&[i64]) -> bool,
) -> bool {
    if k == cell.len() {
        return visit(p);
    }
    for v in cell[k] - m + 1..=cell[k] + m {
        p[k] = v;
        if !emit_box(cell, m, k + 1, p, visit) {
            return false;
        }
    }
    true
}

fn emit_face(
    cell: &[i64],
    m: i64,
    fixed: usize,
    k: usize,
    p: &mut Vec<i64>,
    visit: &mut impl FnMut(&[i64]) -> bool,
) -> bool {
    if k == cell.len() {
        return visit(p);
    }
    if k == fixed {
        return emit_face(cell, m, fixed, k + 1, p, visit);
    }
    for v in cell[k] - m + 1..=cell[k] + m {
        p[k] = v;
        if !emit_face(cell, m, fixed, k + 1, p, visit) {
            return false;
        }
    }
    true
}

/// Collects all candidates of `traverse_segment` (test and debugging aid).
pub fn candidate_points(a: &[f64], b: &[f64], margin: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    traverse_segment(a, b, margin, |p, _| {
        out.push(p.to_vec());
        true
    });
    out
}
