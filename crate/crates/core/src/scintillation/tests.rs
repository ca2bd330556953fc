use super::*;
use proptest::prelude::*;

const TAU: f64 = std::f64::consts::TAU;

fn turb(cn2: f64) -> TurbulenceParams<f64> {
    TurbulenceParams::tatarskii(cn2, TAU * 1e-3).unwrap()
}

fn model(cn2: f64, beam: BeamParams<f64>) -> Scintillation<f64> {
    let cfg = IntegrationConfig {
        rel_tol: 1e-2,
        ..Default::default()
    };
    Scintillation::new(beam, turb(cn2), cfg).unwrap()
}

fn coherent() -> BeamParams<f64> {
    BeamParams::coherent(0.01, 1e7).unwrap()
}

fn q(z: f64) -> PropagationQuery<f64> {
    PropagationQuery::on_axis(z, KernelMode::Correlated)
}

#[test]
fn diffraction_only_radius() {
    let m = model(0.0, coherent());
    for z in [0.0, 100.0, 1e3, 1e4] {
        let want = 1e-4 / 2.0 * (1.0 + 4.0 * z * z / (1e14 * 1e-8));
        assert!((m.beam_radius_sq(z).unwrap() / want - 1.0).abs() < 1e-12);
    }
}

#[test]
fn radius_matches_literature_form() {
    let m = model(1e-13, BeamParams::with_radius_ratio(0.01, 1e7, 0.5).unwrap());
    let z: f64 = 1e3;
    let t = 0.558 * (TAU * 1e-3f64).powf(-1.0 / 3.0) * 1e-13;
    let r1s = 0.5e-4;
    let want = 1e-4 / 2.0 * (1.0 + 4.0 * z * z / (1e14 * 1e-4 * r1s) + 8.0 * z.powi(3) * t / 1e-4);
    assert!((m.beam_radius_sq(z).unwrap() / want - 1.0).abs() < 1e-3);
    assert_eq!(m.beam_radius_sq(0.0).unwrap(), 1e-4 / 2.0);
}

#[test]
fn momentum_diffusion_reference_value() {
    let m = model(1e-13, coherent());
    let want = 0.066 * std::f64::consts::PI.powi(2) * libm::tgamma(1.0 / 6.0) * 1e14 * 10.0 * 1e-13 * 1e3;
    let got = m.momentum_diffusion(1e3).unwrap();
    assert!((got / want - 1.0).abs() < 1e-12, "{got} vs {want}");
    assert!((got - 3.63e5).abs() / 3.63e5 < 5e-3);
    assert_eq!(m.momentum_diffusion(0.0).unwrap(), 0.0);
    assert!((m.momentum_diffusion(2e3).unwrap() / got - 2.0).abs() < 1e-14);
}

#[test]
fn applicability_reference_and_scaling() {
    let m = model(1e-13, coherent());
    let r = m.applicability_ratio(1e3).unwrap();
    assert!((r / 21.0 - 1.0).abs() < 0.05, "{r}");
    let r10 = m.applicability_ratio(1e2).unwrap();
    assert!((r10 / r - 1e-2).abs() < 1e-12);
    let diff = model(1e-13, BeamParams::with_radius_ratio(0.01, 1e7, 0.5).unwrap());
    assert!(diff.applicability_ratio(1e3).unwrap() >= r);
}

#[test]
fn photon_number_conserved() {
    // int d^2r <I> = (2 pi / r1^2)(pi / alpha)(4 pi alpha) at every z.
    let m = model(1e-13, coherent());
    for z in [10.0, 1e3, 1e4] {
        let peak = m.mean_intensity(&q(z)).unwrap();
        let alpha = m.beam_radius_sq(z).unwrap() / 4.0;
        let total = peak * 4.0 * std::f64::consts::PI * alpha;
        assert!((total / (8.0 * std::f64::consts::PI.powi(3) / 1e-4) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn turbulence_lowers_on_axis_intensity() {
    let a = model(1e-13, coherent()).mean_intensity(&q(1e3)).unwrap();
    let b = model(0.0, coherent()).mean_intensity(&q(1e3)).unwrap();
    assert!(a < b);
}

#[test]
fn mean_intensity_is_radially_symmetric() {
    let m = model(1e-13, coherent());
    let mut a = q(1e3);
    a.r_perp = [0.02, 0.0];
    let mut b = q(1e3);
    b.r_perp = [0.0, -0.02];
    assert_eq!(m.mean_intensity(&a).unwrap(), m.mean_intensity(&b).unwrap());
}

#[test]
fn baseline_a_term_is_mean_squared() {
    for beam in [coherent(), BeamParams::with_radius_ratio(0.01, 1e7, 0.5).unwrap()] {
        let m = model(1e-13, beam);
        for z in [50.0, 1e3, 2e4] {
            for r in [[0.0, 0.0], [0.03, -0.01]] {
                let red = Reduction::new(&m.kernel, z);
                let mut qq = q(z);
                qq.r_perp = r;
                let i = m.mean_intensity(&qq).unwrap();
                let a0 = red.baseline_integral(Source::A, r).unwrap();
                assert!((a0 / (i * i) - 1.0).abs() < 1e-9, "z={z}: {}", a0 / (i * i));
            }
        }
    }
}

#[test]
fn baseline_b_term_closed_form() {
    let beam = BeamParams::with_radius_ratio(0.01, 1e7, 0.5).unwrap();
    let m = model(1e-13, beam);
    let (r0s, r1s, q0) = (1e-4, 0.5e-4, 1e7);
    let d = m.kernel.diffusion_coefficient();
    for z in [50.0f64, 1e3, 2e4] {
        let alpha = z * z / (2.0 * q0 * q0 * r1s) + r0s / 8.0 + d * z.powi(3) / 6.0;
        let beta = z * z / (4.0 * q0 * q0 * r0s) + r1s / 16.0 + d * z.powi(3) / 12.0;
        let want = r1s * alpha / (2.0 * r0s * beta);
        let i = m.mean_intensity(&q(z)).unwrap();
        let b0 = Reduction::new(&m.kernel, z).baseline_integral(Source::B, [0.0, 0.0]).unwrap() / (i * i);
        assert!((b0 / want - 1.0).abs() < 1e-9, "z={z}: {b0} vs {want}");
    }
}

#[test]
fn baseline_matrix_equals_self_terms() {
    // With deficit = reference the precision must equal the Hessian of
    // phi_PP/2 + phi_P'P'/2 plus the source term.
    let m = model(1e-13, coherent());
    let z: f64 = 1500.0;
    let red = Reduction::new(&m.kernel, z);
    let d = m.kernel.diffusion_coefficient();
    let q0 = 1e7;
    let mut want = red.base[0];
    // Remove the correlated part and add the two self terms.
    add_rank_one(&mut want, -d * z.powi(3) / 6.0, [0.0, 1.0, 1.0]);
    add_rank_one(&mut want, 0.5 * d * z, [q0, -z / 2.0, 0.0]);
    add_rank_one(&mut want, 0.5 * d * z.powi(3) / 12.0, [0.0, 1.0, 0.0]);
    add_rank_one(&mut want, 0.5 * d * z, [q0, 0.0, z / 2.0]);
    add_rank_one(&mut want, 0.5 * d * z.powi(3) / 12.0, [0.0, 0.0, 1.0]);
    let got = red.matrix(Source::A, red.refs);
    for i in 0..3 {
        for j in 0..3 {
            let scale = (want[i][i] * want[j][j]).sqrt();
            assert!((got[i][j] - want[i][j]).abs() < 1e-10 * scale, "{i}{j}: {} vs {}", got[i][j], want[i][j]);
        }
    }
}

#[test]
fn unity_without_pair_correlation() {
    let m = model(1e-13, coherent());
    for z in [200.0, 1e3, 5e3, 2e4] {
        let mut qq = q(z);
        qq.drop_pair_correlation = true;
        let s = m.sigma2(&qq).unwrap();
        assert!((s.value - 1.0).abs() < 1e-9, "z={z}: {}", s.value);
        let i = m.mean_intensity(&qq).unwrap();
        let i2 = m.second_moment(&qq).unwrap();
        assert!((i2.value / (i * i) - 2.0).abs() < 1e-9);
    }
}

#[test]
fn zero_turbulence_modes_agree() {
    let m = model(0.0, coherent());
    let a = m.sigma2(&q(1e3)).unwrap().value;
    let b = m.sigma2(&PropagationQuery::on_axis(1e3, KernelMode::Multiplicative)).unwrap().value;
    assert_eq!(a, b);
}

#[test]
fn normalization_cancels() {
    let mut m = model(1e-13, coherent());
    let a = m.sigma2(&q(1e3)).unwrap();
    m.normalization = 1234.5;
    let b = m.sigma2(&q(1e3)).unwrap();
    assert!((a.value / b.value - 1.0).abs() < 1e-12);
    let i = m.mean_intensity(&q(1e3)).unwrap();
    let i2 = m.second_moment(&q(1e3)).unwrap();
    assert!((i2.value / (i * i) - 1.0 - a.value).abs() < 1e-12);
}

#[test]
fn sweep_edge_cases() {
    let m = model(1e-13, coherent());
    assert!(m.sweep(&[], &SweepOptions::default()).unwrap().is_empty());
    assert!(m.sweep(&[2.0, 1.0], &SweepOptions::default()).is_err());
    let opts = SweepOptions {
        multiplicative: false,
        ..Default::default()
    };
    let pts = m.sweep(&[1e3], &opts).unwrap();
    assert!(pts[0].sigma2_multiplicative.is_nan());
    let single = m.sigma2(&q(1e3)).unwrap();
    assert_eq!(pts[0].sigma2_correlated.to_bits(), single.value.to_bits());
    let low = m.sweep(&[50.0], &opts).unwrap();
    assert!(low[0].below_applicability);
}

#[test]
fn correlated_exceeds_multiplicative_at_two_km() {
    let m = model(1e-13, coherent());
    let c = m.sigma2(&q(2e3)).unwrap();
    let mm = m.sigma2(&PropagationQuery::on_axis(2e3, KernelMode::Multiplicative)).unwrap();
    assert!(c.value > mm.value, "{c:?} {mm:?}");
    assert!(c.value >= 0.0 && mm.value >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn radius_monotone(z in 0.0f64..2e4, dz in 1.0f64..1e3) {
        let m = model(1e-13, coherent());
        prop_assert!(m.beam_radius_sq(z + dz).unwrap() > m.beam_radius_sq(z).unwrap());
        prop_assert!(m.beam_radius_sq(z).unwrap() >= 0.5e-4);
    }

    #[test]
    fn dq2_linear_in_cn2(c in 1e-16f64..1e-12) {
        let a = model(c, coherent()).momentum_diffusion(700.0).unwrap();
        let b = model(2.0 * c, coherent()).momentum_diffusion(700.0).unwrap();
        prop_assert!((b / a - 2.0).abs() < 1e-12);
    }
}
