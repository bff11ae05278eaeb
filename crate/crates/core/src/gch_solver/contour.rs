use std::collections::HashMap;
use std::f64::consts::PI;

use super::grid::PeriodicGrid;
use crate::error::{Error, Result};
use crate::willmore_ref::{signed_area, ClosedCurve};

/// Zero level set of `u` as closed polylines, each oriented with u < 0 on its left.
///
/// Marching squares with linear edge interpolation; ambiguous cells are resolved
/// by the sign of the cell average. Cells wrap periodically, so loops crossing
/// the box boundary come out unwrapped across the seam.
pub fn interface_loops(u: &[f64], grid: &PeriodicGrid) -> Result<Vec<Vec<[f64; 2]>>> {
    if grid.dims() != 2 {
        return Err(Error::InvalidArgument("interface extraction needs a 2D grid".into()));
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let (hx, hy) = (grid.h(0), grid.h(1));
    let val = |i: usize, j: usize| u[grid.index(i % nx, j % ny)];
    let node = |i: usize, j: usize| [grid.x(0) + i as f64 * hx, grid.y(0) + j as f64 * hy];
    // Edge ids: horizontal (i,j)-(i+1,j) is 2k, vertical (i,j)-(i,j+1) is 2k+1.
    let hid = |i: usize, j: usize| 2 * grid.index(i % nx, j % ny);
    let vid = |i: usize, j: usize| 2 * grid.index(i % nx, j % ny) + 1;

    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut point: HashMap<usize, [f64; 2]> = HashMap::new();
    for j in 0..ny {
        for i in 0..nx {
            // counterclockwise corners and the edges that follow them
            let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let e = [hid(i, j), vid(i + 1, j), hid(i, j + 1), vid(i, j)];
            let f: [f64; 4] = c.map(|(a, b)| val(a, b));
            let neg = f.map(|v| v < 0.0);
            if neg.iter().all(|&n| n) || neg.iter().all(|&n| !n) {
                continue;
            }
            let mut starts = Vec::new();
            let mut ends = Vec::new();
            for k in 0..4 {
                let k1 = (k + 1) % 4;
                if neg[k] == neg[k1] {
                    continue;
                }
                let t = f[k] / (f[k] - f[k1]);
                let (p0, p1) = (node(c[k].0, c[k].1), node(c[k1].0, c[k1].1));
                point
                    .entry(e[k])
                    .or_insert([p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1])]);
                if neg[k] {
                    starts.push(k);
                } else {
                    ends.push(k);
                }
            }
            if starts.len() == 1 {
                next.insert(e[starts[0]], e[ends[0]]);
            } else {
                let centre_neg = f.iter().sum::<f64>() < 0.0;
                for &s in &starts {
                    // the next exit counterclockwise keeps negative corners joined
                    let step = if centre_neg { 1 } else { 3 };
                    let mut k = (s + step) % 4;
                    while !ends.contains(&k) {
                        k = (k + step) % 4;
                    }
                    next.insert(e[s], e[k]);
                }
            }
        }
    }

    let mut loops = Vec::new();
    let mut keys: Vec<usize> = next.keys().copied().collect();
    keys.sort_unstable();
    let mut seen = std::collections::HashSet::new();
    for start in keys {
        if seen.contains(&start) {
            continue;
        }
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let mut cur = start;
        loop {
            seen.insert(cur);
            let p = point[&cur];
            let dup = pts
                .last()
                .is_some_and(|q: &[f64; 2]| (q[0] - p[0]).abs() + (q[1] - p[1]).abs() <= 1e-12 * hx);
            if !dup {
                pts.push(p);
            }
            cur = match next.get(&cur) {
                Some(&n) => n,
                None => break,
            };
            if cur == start {
                break;
            }
        }
        if pts.len() > 1 {
            let (a, b) = (pts[0], pts[pts.len() - 1]);
            if (a[0] - b[0]).abs() + (a[1] - b[1]).abs() <= 1e-12 * hx {
                pts.pop();
            }
        }
        if pts.len() >= 3 {
            loops.push(pts);
        }
    }
    Ok(loops)
}

/// The longest zero-level loop, counterclockwise.
pub fn extract_interface(u: &[f64], grid: &PeriodicGrid) -> Result<ClosedCurve> {
    let loops = interface_loops(u, grid)?;
    let mut best = loops
        .into_iter()
        .max_by(|a, b| perimeter(a).total_cmp(&perimeter(b)))
        .ok_or(Error::EmptyInterface)?;
    if signed_area(&best) < 0.0 {
        best.reverse();
    }
    ClosedCurve::new(best)
}

/// Area of {u < 0} bounded by the interpolated zero level set.
pub fn negative_area(u: &[f64], grid: &PeriodicGrid) -> Result<f64> {
    let loops = interface_loops(u, grid)?;
    if loops.is_empty() {
        return Err(Error::EmptyInterface);
    }
    Ok(loops.iter().map(|l| signed_area(l)).sum())
}

/// R_est = √(area(u < 0)/π).
pub fn radius_estimate(u: &[f64], grid: &PeriodicGrid) -> Result<f64> {
    Ok((negative_area(u, grid)?.max(0.0) / PI).sqrt())
}

fn perimeter(p: &[[f64; 2]]) -> f64 {
    let m = p.len();
    (0..m)
        .map(|i| {
            let (a, b) = (p[i], p[(i + 1) % m]);
            (b[0] - a[0]).hypot(b[1] - a[1])
        })
        .sum()
}
