//! States over time: joint states `E ⋆ ρ` on `A ⊗ B` whose marginals are the
//! prior `ρ` and its image `E(ρ)`.

mod classical_limit;
mod evaluate;
mod family;

pub use classical_limit::{
    classical_limit_pairs, commutation_defect, has_simple_spectrum, ClassicalPair, ClassicalPairKind,
    ClassicalPairParams,
};
pub(crate) use evaluate::formula;
pub use evaluate::{
    evaluate, evaluate_tp, extend_linear, extend_principal, marginal_residuals, reverse_orientation, StateOverTime,
};
pub use family::{Branch, SotFamily, StateRenderingMap, UnitaryChooser};

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;
    use crate::algebra::{AlgebraElement, AlgebraShape, DensityMatrix, C64};
    use crate::maps::{channel_state, LinearMap};
    use crate::random::{random_channel, random_shape, random_state, rng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn qubit_prior() -> DensityMatrix {
        DensityMatrix::new(AlgebraElement::from_matrix(DMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.3, 0.0)],
        )))
        .unwrap()
    }

    fn amplitude_damping(g: f64) -> (Vec<DMatrix<C64>>, LinearMap) {
        let k0 = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - g).sqrt(), 0.0)]);
        let k1 = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(g.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let ops = vec![k0, k1];
        let e = LinearMap::kraus(&ops).unwrap();
        (ops, e)
    }

    #[test]
    fn leifer_spekkens_against_dense_oracle() {
        let rho = qubit_prior();
        let (ops, e) = amplitude_damping(0.35);
        let r = rho.block(0);
        let det = (r[(0, 0)] * r[(1, 1)] - r[(0, 1)] * r[(1, 0)]).re;
        let s = det.sqrt();
        let sqrt = (r + DMatrix::identity(2, 2) * c(s, 0.0)) / c((r.trace().re + 2.0 * s).sqrt(), 0.0);
        let swap = DMatrix::from_fn(4, 4, |p, q| {
            if p / 2 == q % 2 && p % 2 == q / 2 {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let id = DMatrix::<C64>::identity(2, 2);
        let mut d = DMatrix::<C64>::zeros(4, 4);
        for k in &ops {
            d += id.kronecker(k) * &swap * id.kronecker(&k.adjoint());
        }
        let expected = sqrt.kronecker(&id) * d * sqrt.kronecker(&id);
        let got = evaluate(&SotFamily::LeiferSpekkens, &e, &rho).unwrap().value;
        assert!((got.block(0) - expected).norm() < 1e-13);
    }

    #[test]
    fn identity_channel_uniform_prior() {
        let s = AlgebraShape::matrix(2);
        let rho = DensityMatrix::maximally_mixed(&s);
        let e = LinearMap::identity(&s);
        let ls = evaluate(&SotFamily::LeiferSpekkens, &e, &rho).unwrap().value;
        assert!(ls.distance(&channel_state(&e).scale_real(0.5)) < 1e-14);
        let unc = evaluate(&SotFamily::Uncorrelated, &e, &rho).unwrap().value;
        assert!(unc.distance(&AlgebraElement::identity(unc.shape()).scale_real(0.25)) < 1e-14);
    }

    #[test]
    fn classical_right_bloom_is_joint_distribution() {
        let p = [0.2, 0.5, 0.3];
        let f = DMatrix::from_row_slice(2, 3, &[0.9, 0.4, 0.1, 0.1, 0.6, 0.9]);
        let e = LinearMap::classical_channel(&f).unwrap();
        let rho = DensityMatrix::from_probabilities(&p).unwrap();
        let v = evaluate(&SotFamily::RightBloom, &e, &rho).unwrap().value;
        for x in 0..3 {
            for y in 0..2 {
                assert!((v.block(x * 2 + y)[(0, 0)] - c(f[(y, x)] * p[x], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn marginals_hold_for_every_family() {
        let mut r = rng(21);
        let mut families = SotFamily::classical_limit_families();
        families.push(SotFamily::Uncorrelated);
        families.push(SotFamily::ThetaDerived { theta: StateRenderingMap::Rs { r: 0.2, s: 0.6 } });
        for _ in 0..10 {
            let a = random_shape(&mut r, 3, false);
            let b = random_shape(&mut r, 3, false);
            let e = random_channel(&mut r, &a, &b);
            let rho = random_state(&mut r, &a);
            for f in &families {
                let (m1, m2) = evaluate(f, &e, &rho).unwrap().marginal_residuals();
                assert!(m1 < 1e-12 && m2 < 1e-12, "{f}: {m1:e} {m2:e}");
            }
        }
        let a = AlgebraShape::matrix(3);
        let e = random_channel(&mut r, &a, &AlgebraShape::matrix(2));
        let rho = random_state(&mut r, &a);
        let (m1, m2) = evaluate(&SotFamily::Ohya, &e, &rho).unwrap().marginal_residuals();
        assert!(m1 < 1e-12 && m2 < 1e-12);
    }

    #[test]
    fn rs_special_cases() {
        let mut r = rng(4);
        let a = AlgebraShape::from_dims(&[2, 1]).unwrap();
        let e = random_channel(&mut r, &a, &AlgebraShape::matrix(2));
        let rho = random_state(&mut r, &a);
        let val = |f: SotFamily| evaluate(&f, &e, &rho).unwrap().value;
        let ls = val(SotFamily::LeiferSpekkens);
        let sym = val(SotFamily::SymmetricBloom);
        let right = val(SotFamily::RightBloom);
        let left = val(SotFamily::LeftBloom);
        let rs = |r: f64, s: f64| val(SotFamily::Rs { r, s });
        assert!(rs(0.5, 0.2).distance(&ls) < 1e-12);
        assert!(rs(0.0, 0.5).distance(&sym) < 1e-13);
        assert!(rs(1.0, 0.5).distance(&sym) < 1e-13);
        assert!(rs(1.0, 1.0).distance(&right) < 1e-13);
        assert!(rs(0.0, 0.0).distance(&right) < 1e-13);
        assert!(rs(1.0, 0.0).distance(&left) < 1e-13);
        assert!(rs(0.0, 1.0).distance(&left) < 1e-13);
        let th = |m: StateRenderingMap| val(SotFamily::ThetaDerived { theta: m });
        assert!(th(StateRenderingMap::Jordan).distance(&sym) < 1e-13);
        assert!(th(StateRenderingMap::Right).distance(&right) < 1e-13);
        assert!(th(StateRenderingMap::Left).distance(&left) < 1e-13);
        assert!(th(StateRenderingMap::LeiferSpekkens).distance(&ls) < 1e-12);
    }

    #[test]
    fn sth_with_modular_flow_is_t_rotated() {
        let mut r = rng(8);
        let a = AlgebraShape::matrix(3);
        let e = random_channel(&mut r, &a, &AlgebraShape::matrix(2));
        let rho = random_state(&mut r, &a);
        let sth = evaluate(&SotFamily::Sth { chooser: UnitaryChooser::ModularFlow { t: 0.7 } }, &e, &rho).unwrap();
        let rot = evaluate(&SotFamily::TRotated { t: 0.7 }, &e, &rho).unwrap();
        assert!(sth.value.distance(&rot.value) < 1e-12);
    }

    #[test]
    fn reverse_orientation_of_left_is_right() {
        let mut r = rng(9);
        let a = AlgebraShape::matrix(2);
        let e = random_channel(&mut r, &a, &AlgebraShape::from_dims(&[1, 2]).unwrap());
        let rho = random_state(&mut r, &a);
        let rev = reverse_orientation(&SotFamily::LeftBloom, &e, &rho).unwrap();
        let right = evaluate(&SotFamily::RightBloom, &e, &rho).unwrap().value;
        assert!(rev.distance(&right) < 1e-13);
    }

    #[test]
    fn classical_limit_on_commuting_pairs() {
        let mut r = rng(12);
        for pair in classical_limit_pairs(&mut r, 24, false) {
            let reference = &channel_state(&pair.channel)
                * &pair.prior.tensor(&AlgebraElement::identity(pair.channel.target()));
            for f in SotFamily::classical_limit_families() {
                let v = evaluate(&f, &pair.channel, &pair.prior).unwrap().value;
                assert!(v.distance(&reference) < 1e-12, "{f} on {:?}", pair.kind);
            }
        }
        for pair in classical_limit_pairs(&mut r, 8, true) {
            assert!(has_simple_spectrum(&pair.prior));
            let reference = &channel_state(&pair.channel)
                * &pair.prior.tensor(&AlgebraElement::identity(pair.channel.target()));
            let v = evaluate(&SotFamily::Ohya, &pair.channel, &pair.prior).unwrap().value;
            assert!(v.distance(&reference) < 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        let a = AlgebraShape::from_dims(&[1, 1]).unwrap();
        let e = LinearMap::identity(&a);
        let rho = DensityMatrix::maximally_mixed(&a);
        assert!(matches!(
            evaluate(&SotFamily::Ohya, &e, &rho),
            Err(crate::Error::Unsupported(_))
        ));
        let t = LinearMap::transpose(&AlgebraShape::matrix(2));
        let rho2 = DensityMatrix::maximally_mixed(&AlgebraShape::matrix(2));
        assert!(matches!(evaluate(&SotFamily::LeiferSpekkens, &t, &rho2), Err(crate::Error::NotCptp)));
        assert!(evaluate(&SotFamily::RightBloom, &t, &rho2).is_ok());
        let x = AlgebraElement::identity(&AlgebraShape::matrix(2));
        assert!(extend_linear(&SotFamily::LeiferSpekkens, &LinearMap::identity(x.shape()), &x).is_err());
    }
}
