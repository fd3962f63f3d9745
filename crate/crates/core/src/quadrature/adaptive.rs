//! Globally adaptive Gauss–Kronrod (7/15) integration of vector-valued
//! integrands, with a change of variables for integrable power-type
//! singularities at the upper endpoint.

/// Behaviour of an integrand at the upper limit `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingularityHint {
    Smooth,
    /// Integrand behaves like `(b - s)^{-alpha}` as `s -> b`, `0 <= alpha < 1`.
    EndpointPower { alpha: f64 },
}

impl SingularityHint {
    pub fn endpoint_power(alpha: f64) -> Self {
        assert!(
            (0.0..1.0).contains(&alpha),
            "endpoint exponent must lie in [0, 1), got {alpha}"
        );
        if alpha == 0.0 {
            Self::Smooth
        } else {
            Self::EndpointPower { alpha }
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            Self::Smooth => 0.0,
            Self::EndpointPower { alpha } => alpha,
        }
    }
}

/// Evaluation point handed to integrands. `gap = b - s` is computed without
/// cancellation on the singular path, so kernels of the form `(b - s)^{-α}`
/// should use it instead of forming `b - s` themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abscissa {
    pub s: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    pub max_depth: u32,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            max_depth: 60,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveResult {
    pub value: Vec<f64>,
    /// Summed per-interval error estimate (max over components).
    pub error: f64,
    pub converged: bool,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment {
    lo: f64,
    hi: f64,
    depth: u32,
    value: Vec<f64>,
    error: f64,
    resabs: f64,
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` in every
/// component. `f` writes `dim` values for the given abscissa.
///
/// The result is always returned; `converged == false` flags that the
/// subdivision limits were hit before the tolerance was met.
pub fn adaptive_integrate<F>(
    dim: usize,
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    hint: SingularityHint,
) -> AdaptiveResult
where
    F: FnMut(Abscissa, &mut [f64]),
{
    adaptive_integrate_with(dim, f, a, b, tol, hint, AdaptiveOptions::default())
}

pub fn adaptive_integrate_with<F>(
    dim: usize,
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    hint: SingularityHint,
    opts: AdaptiveOptions,
) -> AdaptiveResult
where
    F: FnMut(Abscissa, &mut [f64]),
{
    assert!(a <= b, "adaptive_integrate needs a <= b (got {a} > {b})");
    if a == b {
        return AdaptiveResult {
            value: vec![0.0; dim],
            error: 0.0,
            converged: true,
            evaluations: 0,
        };
    }
    match hint {
        SingularityHint::Smooth => integrate_core(
            dim,
            |u, out: &mut [f64]| f(Abscissa { s: u, gap: b - u }, out),
            a,
            b,
            tol,
            opts,
        ),
        SingularityHint::EndpointPower { alpha } => {
            // s = b - w^p with p = 1/(1-α): (b-s)^{-α} ds = p dw up to sign.
            let p = 1.0 / (1.0 - alpha);
            let w_max = (b - a).powf(1.0 - alpha);
            integrate_core(
                dim,
                |w, out: &mut [f64]| {
                    let gap = w.powf(p);
                    f(Abscissa { s: b - gap, gap }, out);
                    let jac = p * w.powf(p - 1.0);
                    for v in out.iter_mut() {
                        *v *= jac;
                    }
                },
                0.0,
                w_max,
                tol,
                opts,
            )
        }
    }
}

fn integrate_core<F>(dim: usize, mut f: F, a: f64, b: f64, tol: f64, opts: AdaptiveOptions) -> AdaptiveResult
where
    F: FnMut(f64, &mut [f64]),
{
    let mut scratch = Scratch::new(dim);
    let mut segs = vec![gk15(&mut f, a, b, 0, &mut scratch)];
    let mut evaluations = 15;
    let mut converged;
    loop {
        let total: f64 = segs.iter().map(|s| s.error).sum();
        let resabs: f64 = segs.iter().map(|s| s.resabs).sum();
        let target = tol.max(50.0 * f64::EPSILON * resabs);
        converged = total <= target;
        if converged || segs.len() >= opts.max_intervals {
            break;
        }
        let worst = segs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.depth < opts.max_depth)
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i);
        let Some(i) = worst else { break };
        let seg = segs.swap_remove(i);
        let mid = 0.5 * (seg.lo + seg.hi);
        if !(mid > seg.lo && mid < seg.hi) {
            // interval can no longer be split in floating point
            segs.push(Segment {
                depth: opts.max_depth,
                ..seg
            });
            continue;
        }
        segs.push(gk15(&mut f, seg.lo, mid, seg.depth + 1, &mut scratch));
        segs.push(gk15(&mut f, mid, seg.hi, seg.depth + 1, &mut scratch));
        evaluations += 30;
    }
    segs.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    let mut value = vec![0.0; dim];
    for s in &segs {
        for (v, sv) in value.iter_mut().zip(&s.value) {
            *v += sv;
        }
    }
    AdaptiveResult {
        value,
        error: segs.iter().map(|s| s.error).sum(),
        converged,
        evaluations,
    }
}

struct Scratch {
    fvals: Vec<Vec<f64>>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self {
            fvals: vec![vec![0.0; dim]; 15],
        }
    }
}

fn gk15<F>(f: &mut F, lo: f64, hi: f64, depth: u32, scratch: &mut Scratch) -> Segment
where
    F: FnMut(f64, &mut [f64]),
{
    let half = 0.5 * (hi - lo);
    let center = 0.5 * (lo + hi);
    // fvals[0] = center, fvals[2j+1] / fvals[2j+2] = left/right of XGK[j]
    f(center, &mut scratch.fvals[0]);
    for j in 0..7 {
        let dx = half * XGK[j];
        f(center - dx, &mut scratch.fvals[2 * j + 1]);
        f(center + dx, &mut scratch.fvals[2 * j + 2]);
    }
    let dim = scratch.fvals[0].len();
    let mut value = vec![0.0; dim];
    let mut err_max = 0.0f64;
    let mut resabs_max = 0.0f64;
    for c in 0..dim {
        let fc = scratch.fvals[0][c];
        let mut resk = WGK[7] * fc;
        let mut resg = WG[3] * fc;
        let mut resabs = WGK[7] * fc.abs();
        for j in 0..7 {
            let (l, r) = (scratch.fvals[2 * j + 1][c], scratch.fvals[2 * j + 2][c]);
            resk += WGK[j] * (l + r);
            resabs += WGK[j] * (l.abs() + r.abs());
            if j % 2 == 1 {
                resg += WG[j / 2] * (l + r);
            }
        }
        let mean = 0.5 * resk;
        let mut resasc = WGK[7] * (fc - mean).abs();
        for j in 0..7 {
            resasc += WGK[j]
                * ((scratch.fvals[2 * j + 1][c] - mean).abs() + (scratch.fvals[2 * j + 2][c] - mean).abs());
        }
        let (resk, resabs, resasc) = (resk * half, resabs * half.abs(), resasc * half.abs());
        value[c] = resk;
        let mut err = ((resk - resg * half).abs()).max(0.0);
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (1.0f64).min((200.0 * err / resasc).powf(1.5));
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        if !err.is_finite() || !resk.is_finite() {
            err = f64::INFINITY;
        }
        err_max = err_max.max(err);
        resabs_max = resabs_max.max(resabs);
    }
    Segment {
        lo,
        hi,
        depth,
        value,
        error: err_max,
        resabs: resabs_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn constant() {
        let r = adaptive_integrate(1, |_, o: &mut [f64]| o[0] = 1.0, 0.0, 2.0, 1e-12, SingularityHint::Smooth);
        assert!(r.converged);
        assert_abs_diff_eq!(r.value[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_square_root_endpoint() {
        let r = adaptive_integrate(
            1,
            |x, o: &mut [f64]| o[0] = x.gap.powf(-0.5),
            0.0,
            1.0,
            1e-12,
            SingularityHint::endpoint_power(0.5),
        );
        assert!(r.converged);
        assert_abs_diff_eq!(r.value[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn three_quarter_power_endpoint() {
        let r = adaptive_integrate(
            1,
            |x, o: &mut [f64]| o[0] = x.gap.powf(-0.75),
            0.0,
            1.0,
            1e-12,
            SingularityHint::endpoint_power(0.75),
        );
        assert!(r.converged);
        assert_abs_diff_eq!(r.value[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn vector_valued_components_are_independent() {
        let r = adaptive_integrate(
            3,
            |x, o: &mut [f64]| {
                o[0] = x.s.sin();
                o[1] = (5.0 * x.s).exp();
                o[2] = 0.0;
            },
            0.0,
            1.0,
            1e-13,
            SingularityHint::Smooth,
        );
        assert_abs_diff_eq!(r.value[0], 1.0 - 1f64.cos(), epsilon = 1e-13);
        assert_abs_diff_eq!(r.value[1], (5f64.exp() - 1.0) / 5.0, epsilon = 1e-12);
        assert_eq!(r.value[2], 0.0);
    }

    #[test]
    fn unresolvable_integrand_is_flagged() {
        let r = adaptive_integrate_with(
            1,
            |x, o: &mut [f64]| o[0] = (1.0 / (x.s + 1e-9)).sin(),
            0.0,
            1.0,
            1e-14,
            SingularityHint::Smooth,
            AdaptiveOptions { max_depth: 60, max_intervals: 20 },
        );
        assert!(!r.converged);
        assert!(r.value[0].is_finite());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn singular_powers_meet_tolerance(
            alpha_idx in 0usize..2, c in 0.1f64..3.0, a in -1.0f64..0.5, len in 0.01f64..3.0,
            tol_exp in 6i32..=12,
        ) {
            let alpha = [0.5, 0.75][alpha_idx];
            let tol = 10f64.powi(-tol_exp);
            let b = a + len;
            // ∫_a^b c (b-s)^{-α} (1 + (b-s)) ds
            let exact = c * (len.powf(1.0 - alpha) / (1.0 - alpha) + len.powf(2.0 - alpha) / (2.0 - alpha));
            let r = adaptive_integrate(
                1,
                |x, o: &mut [f64]| o[0] = c * x.gap.powf(-alpha) * (1.0 + x.gap),
                a, b, tol, SingularityHint::endpoint_power(alpha),
            );
            prop_assert!(r.converged);
            prop_assert!((r.value[0] - exact).abs() <= tol, "{} vs {}", r.value[0], exact);
        }
    }
}
