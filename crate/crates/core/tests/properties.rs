use latentedit_core::compositor::blend;
use latentedit_core::metrics::{mse, psnr_from_mse, ssim};
use latentedit_core::objectives::{bernoulli_kl, size_loss};
use latentedit_core::{Mask, Tensor3};
use proptest::prelude::*;

fn image(h: usize, w: usize) -> impl Strategy<Value = Tensor3> {
    proptest::collection::vec(0.0f64..=1.0, 3 * h * w).prop_map(move |v| Tensor3::from_vec(3, h, w, v).unwrap())
}

fn mask(h: usize, w: usize) -> impl Strategy<Value = Mask> {
    proptest::collection::vec(0.0f64..=1.0, h * w).prop_map(move |v| Mask::from_vec(h, w, v).unwrap())
}

proptest! {
    #[test]
    fn blend_stays_between_endpoints(g in image(6, 6), i in image(6, 6), b in mask(6, 6)) {
        let out = blend(&g, &i, &b).unwrap();
        for k in 0..out.len() {
            let (lo, hi) = {
                let (a, c) = (g.as_slice()[k], i.as_slice()[k]);
                (a.min(c), a.max(c))
            };
            prop_assert!(out.as_slice()[k] >= lo - 1e-15 && out.as_slice()[k] <= hi + 1e-15);
        }
    }

    #[test]
    fn ssim_is_symmetric_and_bounded(a in image(12, 12), b in image(12, 12)) {
        let ab = ssim(&a, &b).unwrap();
        let ba = ssim(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn psnr_decreases_with_mse(m1 in 1e-8f64..1.0, m2 in 1e-8f64..1.0) {
        prop_assume!(m1 < m2);
        prop_assert!(psnr_from_mse(m1) >= psnr_from_mse(m2));
    }

    #[test]
    fn mse_symmetric(a in image(4, 4), b in image(4, 4)) {
        prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
    }

    #[test]
    fn kl_is_non_negative(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        prop_assert!(bernoulli_kl(p, q) >= -1e-15);
    }

    #[test]
    fn size_loss_zero_at_goal(s in 0.01f64..0.6, alpha in 0.5f64..1.5) {
        prop_assert!(size_loss(alpha * s, s, alpha).abs() < 1e-12);
    }
}
