//! Constructions of new mm-spaces from old ones.

use crate::budget::{Budget, TOL};
use crate::error::{invalid_param, limit, Result};
use crate::space::{ExtendedFiniteMmSpace, FiniteMmSpace, Metric, PointedSpace, WeightVector, WeightedMetric};

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return invalid_param(format!("exponent p must lie in [1, inf], got {p}"));
    }
    Ok(())
}

/// `(a^p + b^p)^(1/p)` with the usual conventions at `p = 1, 2, inf`.
pub fn lp_combine(a: f64, b: f64, p: f64) -> f64 {
    if p == f64::INFINITY {
        a.max(b)
    } else if p == 1.0 {
        a + b
    } else if p == 2.0 {
        a.hypot(b)
    } else {
        (a.powf(p) + b.powf(p)).powf(1.0 / p)
    }
}

/// `tX`: every distance multiplied by `t > 0`.
pub fn scale(x: &FiniteMmSpace, t: f64) -> Result<FiniteMmSpace> {
    if !(t > 0.0 && t.is_finite()) {
        return invalid_param(format!("scale factor must be positive and finite, got {t}"));
    }
    Ok(FiniteMmSpace::from_shape(
        x.labels().to_vec(),
        x.shape_flat().to_vec(),
        x.unit() * t,
        x.weights().to_vec(),
    ))
}

/// The subset with the induced metric and the normalized restricted measure.
pub fn restrict_normalize(x: &FiniteMmSpace, subset: &[usize]) -> Result<FiniteMmSpace> {
    let n = x.len();
    let mut idx: Vec<usize> = subset.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if idx.iter().any(|&i| i >= n) {
        return invalid_param("subset index out of range");
    }
    let mass: f64 = idx.iter().map(|&i| x.weight(i)).sum();
    if !(mass > 0.0) {
        return invalid_param("subset has zero mass");
    }
    let m = idx.len();
    let shape = x.shape_flat();
    let mut s = vec![0.0; m * m];
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            s[a * m + b] = shape[i * n + j];
        }
    }
    Ok(FiniteMmSpace::from_shape(
        idx.iter().map(|&i| x.labels()[i].clone()).collect(),
        s,
        x.unit(),
        idx.iter().map(|&i| x.weight(i) / mass).collect(),
    ))
}

type Raw = (Vec<String>, Vec<f64>, Vec<f64>);

fn product_raw<X, Y>(x: &X, xl: &[String], y: &Y, yl: &[String], p: f64, budget: &Budget) -> Result<Raw>
where
    X: WeightedMetric + ?Sized,
    Y: WeightedMetric + ?Sized,
{
    check_exponent(p)?;
    let (n, m) = (x.len(), y.len());
    let size = n.checked_mul(m).unwrap_or(usize::MAX);
    if size > budget.max_points {
        return limit(format!("product has {size} points, budget is {}", budget.max_points));
    }
    let mut d = vec![0.0; size * size];
    for i in 0..n {
        for j in 0..m {
            for k in 0..n {
                for l in 0..m {
                    d[(i * m + j) * size + k * m + l] = lp_combine(x.dist(i, k), y.dist(j, l), p);
                }
            }
        }
    }
    let mut labels = Vec::with_capacity(size);
    let mut w = Vec::with_capacity(size);
    for i in 0..n {
        for j in 0..m {
            labels.push(format!("({},{})", xl[i], yl[j]));
            w.push(x.weight(i) * y.weight(j));
        }
    }
    Ok((labels, d, w))
}

/// `X ×_p Y` with the product measure; point `(i, j)` has index `i·|Y| + j`.
pub fn lp_product(x: &FiniteMmSpace, y: &FiniteMmSpace, p: f64, budget: &Budget) -> Result<FiniteMmSpace> {
    let (labels, d, w) = product_raw(x, x.labels(), y, y.labels(), p, budget)?;
    Ok(FiniteMmSpace::from_raw(labels, d, w))
}

/// `X ×_p Y` for extended spaces; a pair is at infinite distance when
/// either coordinate is.
pub fn lp_product_extended(
    x: &ExtendedFiniteMmSpace,
    y: &ExtendedFiniteMmSpace,
    p: f64,
    budget: &Budget,
) -> Result<ExtendedFiniteMmSpace> {
    let (labels, d, w) = product_raw(x, x.labels(), y, y.labels(), p, budget)?;
    Ok(ExtendedFiniteMmSpace::from_raw(labels, d, w))
}

/// `X_p^n`, built as `((X ×_p X) ×_p X) ...`.
pub fn lp_power(x: &FiniteMmSpace, p: f64, n: usize, budget: &Budget) -> Result<FiniteMmSpace> {
    check_exponent(p)?;
    if n == 0 {
        return invalid_param("power must be at least 1");
    }
    let size = (x.len() as f64).powi(n as i32);
    if size > budget.max_points as f64 {
        return limit(format!("power has {size} points, budget is {}", budget.max_points));
    }
    let mut acc = x.clone();
    for _ in 1..n {
        acc = lp_product(&acc, x, p, budget)?;
    }
    Ok(acc)
}

fn check_sum_weights(a: &WeightVector, parts: usize) -> Result<()> {
    if a.len() != parts {
        return invalid_param(format!("{} weights for {parts} parts", a.len()));
    }
    if (a.l1() - 1.0).abs() > TOL {
        return invalid_param("sum weights must add up to 1");
    }
    Ok(())
}

/// `Σ X_n^{a_n}`: parts at infinite mutual distance. Parts with zero weight are dropped.
pub fn direct_sum(parts: &[FiniteMmSpace], a: &WeightVector) -> Result<ExtendedFiniteMmSpace> {
    let ext: Vec<ExtendedFiniteMmSpace> = parts.iter().map(|p| p.to_extended()).collect();
    direct_sum_extended(&ext, a)
}

/// Direct sum of extended spaces.
pub fn direct_sum_extended(parts: &[ExtendedFiniteMmSpace], a: &WeightVector) -> Result<ExtendedFiniteMmSpace> {
    check_sum_weights(a, parts.len())?;
    let live: Vec<usize> = (0..parts.len()).filter(|&k| a.get(k) > 0.0).collect();
    let size: usize = live.iter().map(|&k| parts[k].len()).sum();
    let mut d = vec![f64::INFINITY; size * size];
    let mut labels = Vec::with_capacity(size);
    let mut w = Vec::with_capacity(size);
    let mut off = 0;
    for &k in &live {
        let part = &parts[k];
        let m = part.len();
        for i in 0..m {
            for j in 0..m {
                d[(off + i) * size + off + j] = part.dist(i, j);
            }
            labels.push(format!("{k}:{}", part.labels()[i]));
            w.push(a.get(k) * part.weight(i));
        }
        off += m;
    }
    Ok(ExtendedFiniteMmSpace::from_raw(labels, d, w))
}

/// Offsets of each part in a concatenated layout.
fn offsets(sizes: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut out = Vec::new();
    let mut acc = 0;
    for s in sizes {
        out.push(acc);
        acc += s;
    }
    out.push(acc);
    out
}

/// The gapped sum: cross-part distance `d(x, x̄_n) + d(y, x̄_m) + r`.
pub fn gapped_sum(parts: &[PointedSpace], a: &WeightVector, r: f64) -> Result<FiniteMmSpace> {
    check_sum_weights(a, parts.len())?;
    if !(r > 0.0 && r.is_finite()) {
        return invalid_param(format!("gap must be positive and finite, got {r}"));
    }
    let live: Vec<&PointedSpace> = (0..parts.len()).filter(|&k| a.get(k) > 0.0).map(|k| &parts[k]).collect();
    let live_w: Vec<f64> = (0..parts.len()).map(|k| a.get(k)).filter(|&w| w > 0.0).collect();
    let off = offsets(live.iter().map(|p| p.space.len()));
    let size = off[live.len()];
    let mut d = vec![0.0; size * size];
    let mut labels = Vec::with_capacity(size);
    let mut w = Vec::with_capacity(size);
    for (k, pk) in live.iter().enumerate() {
        let xk = &pk.space;
        for i in 0..xk.len() {
            labels.push(format!("{k}:{}", xk.labels()[i]));
            w.push(live_w[k] * xk.weight(i));
            for (l, pl) in live.iter().enumerate() {
                let xl = &pl.space;
                for j in 0..xl.len() {
                    let v = if k == l {
                        xk.dist(i, j)
                    } else {
                        xk.dist(i, pk.base) + xl.dist(j, pl.base) + r
                    };
                    d[(off[k] + i) * size + off[l] + j] = v;
                }
            }
        }
    }
    Ok(FiniteMmSpace::from_raw(labels, d, w))
}

/// Wedge sum gluing the base points; measure `π_*(α μ_X + (1-α) μ_Y)`.
/// Points of `X` keep their indices, then `Y` without its base follows.
pub fn wedge_sum(x: &PointedSpace, y: &PointedSpace, alpha: f64) -> Result<PointedSpace> {
    if !(0.0..=1.0).contains(&alpha) {
        return invalid_param(format!("alpha must lie in [0,1], got {alpha}"));
    }
    let (xs, ys) = (&x.space, &y.space);
    let (x0, y0) = (x.base, y.base);
    let yrest: Vec<usize> = (0..ys.len()).filter(|&j| j != y0).collect();
    let n = xs.len();
    let size = n + yrest.len();
    let mut d = vec![0.0; size * size];
    for i in 0..n {
        for k in 0..n {
            d[i * size + k] = xs.dist(i, k);
        }
        for (b, &j) in yrest.iter().enumerate() {
            let v = xs.dist(i, x0) + ys.dist(j, y0);
            d[i * size + n + b] = v;
            d[(n + b) * size + i] = v;
        }
    }
    for (a, &j) in yrest.iter().enumerate() {
        for (b, &l) in yrest.iter().enumerate() {
            d[(n + a) * size + n + b] = ys.dist(j, l);
        }
    }
    let mut labels: Vec<String> = xs.labels().iter().map(|s| format!("x:{s}")).collect();
    labels.extend(yrest.iter().map(|&j| format!("y:{}", ys.labels()[j])));
    let mut w: Vec<f64> = xs.weights().iter().map(|&v| alpha * v).collect();
    w[x0] += (1.0 - alpha) * ys.weight(y0);
    w.extend(yrest.iter().map(|&j| (1.0 - alpha) * ys.weight(j)));
    let base_label = labels[x0].clone();
    let space = FiniteMmSpace::from_raw(labels, d, w);
    let base = space
        .labels()
        .iter()
        .position(|l| *l == base_label)
        .expect("glued base point has positive weight");
    Ok(PointedSpace { space, base })
}

/// The `m`-cycle with geodesic distance, scaled to the given circumference,
/// and uniform weights.
pub fn cycle_space(m: usize, circumference: f64) -> Result<FiniteMmSpace> {
    if m == 0 {
        return invalid_param("a cycle needs at least one point");
    }
    if !(circumference > 0.0 && circumference.is_finite()) {
        return invalid_param(format!("circumference must be positive, got {circumference}"));
    }
    let step = circumference / m as f64;
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let k = i.abs_diff(j);
            d[i * m + j] = k.min(m - k) as f64 * step;
        }
    }
    Ok(FiniteMmSpace::from_raw(
        (0..m).map(|i| format!("c{i}")).collect(),
        d,
        vec![1.0 / m as f64; m],
    ))
}

/// `𝔻_n`: `n` points at mutual distance `n`, uniform measure.
pub fn dissipation_space(n: usize) -> Result<FiniteMmSpace> {
    if n == 0 {
        return invalid_param("dissipation space needs n >= 1");
    }
    let v = n as f64;
    let mut d = vec![v; n * n];
    for i in 0..n {
        d[i * n + i] = 0.0;
    }
    Ok(FiniteMmSpace::from_raw(
        (0..n).map(|i| format!("d{i}")).collect(),
        d,
        vec![1.0 / v; n],
    ))
}

/// The `n`-th generator of the atom pyramid `𝒫_A`: one-point parts with the
/// weights of `A`, plus `𝔻_n` carrying the missing mass, glued with gap `n`.
pub fn atoms_generator(a: &WeightVector, n: usize) -> Result<FiniteMmSpace> {
    if n == 0 {
        return invalid_param("generator index must be at least 1");
    }
    let mut parts = Vec::new();
    let mut w = Vec::new();
    for &x in a.entries().iter().filter(|&&x| x > 0.0) {
        parts.push(PointedSpace::new(FiniteMmSpace::one_point(), 0)?);
        w.push(x);
    }
    let rest = 1.0 - a.l1();
    if rest > TOL || parts.is_empty() {
        parts.push(PointedSpace::new(dissipation_space(n)?, 0)?);
        w.push(rest.max(0.0));
    }
    let total: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|x| x / total).collect();
    gapped_sum(&parts, &WeightVector::a1(w)?, n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> FiniteMmSpace {
        FiniteMmSpace::from_matrix(
            vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]],
            vec![0.25, 0.5, 0.25],
        )
        .unwrap()
    }

    #[test]
    fn scale_round_trip_is_bitwise() {
        let x = path3();
        let y = scale(&scale(&x, 2.0).unwrap(), 0.5).unwrap();
        assert_eq!(y.dist_flat(), x.dist_flat());
        assert!(scale(&x, 0.0).is_err());
    }

    #[test]
    fn restriction_normalizes() {
        let x = path3();
        let r = restrict_normalize(&x, &[0, 2]).unwrap();
        assert_eq!(r.weights(), &[0.5, 0.5]);
        assert_eq!(r.dist(0, 1), 2.0);
        let t = restrict_normalize(&scale(&x, 3.0).unwrap(), &[1, 2]).unwrap();
        assert_eq!(t.dist(0, 1), 3.0);
    }

    #[test]
    fn products_of_two_points() {
        let b = Budget::default();
        let x = FiniteMmSpace::two_point(1.0, 0.5).unwrap();
        let sq = lp_power(&x, 2.0, 2, &b).unwrap();
        assert_eq!(sq.len(), 4);
        assert_eq!(sq.dist(0, 3), 2f64.sqrt());
        assert_eq!(sq.weights(), &[0.25; 4]);
        let cube = lp_power(&x, 1.0, 3, &b).unwrap();
        assert_eq!(cube.dist(0, 7), 3.0);
        let inf = lp_power(&x, f64::INFINITY, 3, &b).unwrap();
        assert_eq!(inf.dist(0, 7), 1.0);
        sq.validate().unwrap();
        let tight = Budget { max_points: 4, ..Budget::default() };
        assert!(matches!(lp_power(&x, 2.0, 3, &tight), Err(crate::MmError::ResourceLimit(_))));
    }

    #[test]
    fn direct_sum_weights_and_infinity() {
        let x = path3();
        let a = WeightVector::a1(vec![0.5, 0.5]).unwrap();
        let z = direct_sum(&[x.clone(), FiniteMmSpace::one_point()], &a).unwrap();
        assert_eq!(z.len(), 4);
        assert_eq!(z.dist(0, 3), f64::INFINITY);
        assert_eq!(z.weights(), &[0.125, 0.25, 0.125, 0.5]);
        z.validate().unwrap();
    }

    #[test]
    fn gapped_sum_distances() {
        let x = PointedSpace::new(path3(), 2).unwrap();
        let p = PointedSpace::new(FiniteMmSpace::one_point(), 0).unwrap();
        let a = WeightVector::a1(vec![0.5, 0.5]).unwrap();
        let z = gapped_sum(&[x, p], &a, 3.0).unwrap();
        // d((0:0), (1:*)) = d(0, base 2) + 0 + 3
        assert_eq!(z.dist(0, 3), 5.0);
        assert_eq!(z.dist(2, 3), 3.0);
        z.validate().unwrap();
    }

    #[test]
    fn wedge_of_two_paths() {
        let x = PointedSpace::new(path3(), 0).unwrap();
        let w = wedge_sum(&x, &x, 0.5).unwrap();
        assert_eq!(w.space.len(), 5);
        assert_eq!(w.base, 0);
        // far ends of the two copies
        assert_eq!(w.space.dist(2, 4), 4.0);
        assert!((w.space.weight(0) - 0.25).abs() < 1e-15);
        w.space.validate().unwrap();
    }

    #[test]
    fn dissipation_and_atoms() {
        let d = dissipation_space(4).unwrap();
        assert_eq!(d.dist(1, 3), 4.0);
        assert_eq!(d.weights(), &[0.25; 4]);
        let a = WeightVector::atoms(vec![0.5, 0.25]).unwrap();
        let g = atoms_generator(&a, 4).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.dist(0, 1), 4.0);
        // dissipation points sit 4 apart internally and 4 + 4 from its base
        assert_eq!(g.dist(0, 3), 8.0);
        g.validate().unwrap();
        let full = atoms_generator(&WeightVector::atoms(vec![0.5, 0.5]).unwrap(), 3).unwrap();
        assert_eq!(full.len(), 2);
        let empty = atoms_generator(&WeightVector::atoms(vec![]).unwrap(), 3).unwrap();
        assert_eq!(empty.len(), 3);
    }
}
