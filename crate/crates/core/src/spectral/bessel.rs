//! Integer-order Bessel functions `J_n(z)` by Miller's backward recurrence,
//! normalised with `J_0 + 2 * sum_k J_2k = 1`. Used as the clean-lattice
//! reference profile; independent of the eigen-decomposition path.

/// Rescale threshold for the downward recurrence.
const BIG: f64 = 1e250;

/// `J_0(z) ..= J_nmax(z)` for `z >= 0`.
pub fn bessel_j_ladder(z: f64, nmax: usize) -> Vec<f64> {
    assert!(z >= 0.0 && z.is_finite(), "argument must be finite and >= 0");
    let mut out = vec![0.0; nmax + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let reach = nmax.max(z.ceil() as usize);
    let mut start = reach + (60.0 * reach as f64).sqrt().ceil() as usize + 20;
    start += start % 2;

    let mut ladder = vec![0.0; start + 2];
    let (mut above, mut here) = (0.0, 1e-30);
    ladder[start] = here;
    let mut k = start;
    while k > 0 {
        let below = 2.0 * k as f64 / z * here - above;
        above = here;
        here = below;
        k -= 1;
        ladder[k] = here;
        if here.abs() > BIG {
            for v in &mut ladder[k..] {
                *v /= BIG;
            }
            above /= BIG;
            here /= BIG;
        }
    }
    let norm = ladder[0] + 2.0 * ladder[2..=start].iter().step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&ladder) {
        *o = v / norm;
    }
    out
}

/// `J_n(z)` for any integer order, using `J_{-n} = (-1)^n J_n`.
pub fn bessel_j(n: i64, z: f64) -> f64 {
    let m = n.unsigned_abs() as usize;
    let v = bessel_j_ladder(z, m)[m];
    if n < 0 && m % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Clean-lattice occupation `(J_x(2t))^2` of a walker released at 0.
pub fn bessel_density(x: i64, t: f64) -> f64 {
    let j = bessel_j(x, 2.0 * t.abs());
    j * j
}

/// `(J_x(2t))^2` for `x = -xmax ..= xmax`, index `x + xmax`.
pub fn bessel_density_profile(t: f64, xmax: usize) -> Vec<f64> {
    let j = bessel_j_ladder(2.0 * t.abs(), xmax);
    let mut out = Vec::with_capacity(2 * xmax + 1);
    out.extend(j.iter().rev().map(|v| v * v));
    out.extend(j[1..].iter().map(|v| v * v));
    out
}
