use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::OperatorSpec;
use crate::error::{Error, Result};
use crate::grid::{Extension, GridFunction, Side};
use crate::kernel::global_cache;

/// Series application computed as one FFT convolution, `O(N log N)`.
///
/// Needs a zero tail on the side the operator looks at, because the window is
/// treated as the whole support.
pub fn fft_apply(u: &GridFunction, spec: &OperatorSpec) -> Result<GridFunction> {
    spec.check_mesh(u)?;
    match spec.side {
        Side::Right => fft_right(u, spec.order),
        Side::Left => Ok(fft_right(&u.reflect(), spec.order)?.reflect()),
    }
}

fn fft_right(u: &GridFunction, order: f64) -> Result<GridFunction> {
    let zero_tail = match u.right_extension() {
        Extension::ZeroOutside => true,
        Extension::Constant => u.tail_constant(Side::Right) == Some(0.0),
        _ => false,
    };
    if !zero_tail {
        return Err(Error::ExtensionRequired("the FFT route needs a zero tail".into()));
    }
    if order == 0.0 {
        return Ok(u.clone());
    }
    let kappa = -order;
    let len = u.len();
    let table = global_cache().get(kappa, len - 1);
    let w = &table.values()[..len];

    // v[i] = Σ_k w[k] s[i+k] = (w * reversed s)[len-1-i]
    let size = (2 * len - 1).next_power_of_two();
    let mut a: Vec<Complex<f64>> = w.iter().map(|&x| Complex::new(x, 0.0)).collect();
    a.resize(size, Complex::new(0.0, 0.0));
    let mut b: Vec<Complex<f64>> = u.samples().iter().rev().map(|&x| Complex::new(x, 0.0)).collect();
    b.resize(size, Complex::new(0.0, 0.0));

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);
    forward.process(&mut a);
    forward.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    inverse.process(&mut a);

    let h = u.h();
    let factor = h.powf(kappa) / size as f64;
    let values: Vec<f64> = (0..len).map(|i| a[len - 1 - i].re * factor).collect();
    let valid = u.valid().to_vec();
    // an invalid input sample spoils every output that reads it
    let mut out_valid = vec![true; len];
    let mut seen_bad = false;
    for i in (0..len).rev() {
        seen_bad |= !valid[i];
        out_valid[i] = !seen_bad;
    }
    Ok(GridFunction::from_parts(
        *u.grid(),
        values,
        Extension::Undefined,
        Extension::ZeroOutside,
        out_valid,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::{frac_apply_series, max_deviation};
    use crate::grid::Grid;
    use crate::kernel::kernel_recurrence;

    #[test]
    fn impulse_reproduces_kernel() {
        let g = Grid::new(1.0, -63, 0).unwrap();
        let u = GridFunction::impulse(g, 0).unwrap();
        let spec = OperatorSpec::on(&u, Side::Right, -0.5).unwrap();
        let v = fft_apply(&u, &spec).unwrap();
        let k = kernel_recurrence(0.5, 63);
        for m in 0..64i64 {
            assert!((v.at(-m).unwrap() - k.values()[m as usize]).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_series_both_sides() {
        let g = Grid::new(0.5, -100, 100).unwrap();
        let u = GridFunction::from_fn(g, Extension::ZeroOutside, |x| {
            if x.abs() < 20.0 {
                (x * 0.3).sin() + 0.5
            } else {
                0.0
            }
        })
        .unwrap();
        for &side in &[Side::Right, Side::Left] {
            for &order in &[-0.7, -0.25, 0.25, 0.5, 1.5] {
                let spec = OperatorSpec::on(&u, side, order).unwrap();
                let a = fft_apply(&u, &spec).unwrap();
                let b = frac_apply_series(&u, &spec, 1e-10).unwrap();
                assert!(max_deviation(&a, &b).unwrap() <= 1e-12 * b.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn needs_zero_tail() {
        let g = Grid::new(1.0, 0, 7).unwrap();
        let u = GridFunction::new(g, vec![1.0; 8], Extension::Constant).unwrap();
        let spec = OperatorSpec::on(&u, Side::Right, 0.5).unwrap();
        assert!(matches!(fft_apply(&u, &spec), Err(Error::ExtensionRequired(_))));
    }
}
