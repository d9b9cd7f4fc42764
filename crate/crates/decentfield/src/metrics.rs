//! Image-quality metrics (PSNR, masked PSNR, SSIM) and the server/user FLOPs
//! cost model used to compare centralized and federated training.

use thiserror::Error;

use crate::radiance::{Image, Mask};

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("image dimensions differ: {0}x{1} vs {2}x{3}")]
    DimMismatch(usize, usize, usize, usize),
    #[error("mask selects no pixels")]
    EmptyMask,
    #[error("image {0}x{1} is smaller than the {2}-pixel window")]
    TooSmall(usize, usize, usize),
}

/// PSNR is clamped here for identical images (zero MSE).
pub const PSNR_CLAMP_DB: f64 = 100.0;

fn check_dims(img: &Image, reference: &Image) -> Result<(), Error> {
    if img.width != reference.width || img.height != reference.height {
        return Err(Error::DimMismatch(img.width, img.height, reference.width, reference.height));
    }
    Ok(())
}

/// Pools squared error across several image pairs so one PSNR can be reported
/// for a whole round of renders.
#[derive(Clone, Copy, Debug, Default)]
pub struct PsnrAccumulator {
    sum_sq: f64,
    count: u64,
}

impl PsnrAccumulator {
    pub fn add(
        &mut self,
        img: &Image,
        reference: &Image,
        mask: Option<&Mask>,
    ) -> Result<(), Error> {
        check_dims(img, reference)?;
        match mask {
            None => {
                for (a, b) in img.data.iter().zip(&reference.data) {
                    let d = a - b;
                    self.sum_sq += d * d;
                }
                self.count += img.data.len() as u64;
            }
            Some(m) => {
                if m.width != img.width || m.height != img.height {
                    return Err(Error::DimMismatch(img.width, img.height, m.width, m.height));
                }
                for (p, &keep) in m.data.iter().enumerate() {
                    if keep {
                        for c in 0..3 {
                            let d = img.data[p * 3 + c] - reference.data[p * 3 + c];
                            self.sum_sq += d * d;
                        }
                        self.count += 3;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn mse(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum_sq / self.count as f64)
    }

    pub fn psnr_db(&self) -> Option<f64> {
        self.mse().map(psnr_from_mse)
    }
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CLAMP_DB
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CLAMP_DB)
    }
}

/// PSNR in dB over `[0,1]`-scaled pixels, optionally restricted to the pixels
/// a mask selects.
pub fn psnr(img: &Image, reference: &Image, mask: Option<&Mask>) -> Result<f64, Error> {
    let mut acc = PsnrAccumulator::default();
    acc.add(img, reference, mask)?;
    acc.psnr_db().ok_or(Error::EmptyMask)
}

pub const SSIM_WINDOW: usize = 7;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn gaussian_kernel_1d() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as isize;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = (i as isize - half) as f64;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Mean SSIM with a 7x7 Gaussian window (sigma 1.5), standard constants, over
/// all fully-contained windows, averaged across the three channels.
pub fn ssim(img: &Image, reference: &Image) -> Result<f64, Error> {
    check_dims(img, reference)?;
    if img.width < SSIM_WINDOW || img.height < SSIM_WINDOW {
        return Err(Error::TooSmall(img.width, img.height, SSIM_WINDOW));
    }
    let k1 = gaussian_kernel_1d();
    let (w, h) = (img.width, img.height);
    let mut total = 0.0;
    let mut windows = 0u64;
    for c in 0..3 {
        let at = |buf: &Image, x: usize, y: usize| buf.data[(y * w + x) * 3 + c];
        for wy in 0..=h - SSIM_WINDOW {
            for wx in 0..=w - SSIM_WINDOW {
                let mut mx = 0.0;
                let mut my = 0.0;
                for dy in 0..SSIM_WINDOW {
                    for dx in 0..SSIM_WINDOW {
                        let wgt = k1[dy] * k1[dx];
                        mx += wgt * at(img, wx + dx, wy + dy);
                        my += wgt * at(reference, wx + dx, wy + dy);
                    }
                }
                let mut vx = 0.0;
                let mut vy = 0.0;
                let mut cov = 0.0;
                for dy in 0..SSIM_WINDOW {
                    for dx in 0..SSIM_WINDOW {
                        let wgt = k1[dy] * k1[dx];
                        let a = at(img, wx + dx, wy + dy) - mx;
                        let b = at(reference, wx + dx, wy + dy) - my;
                        vx += wgt * a * a;
                        vy += wgt * b * b;
                        cov += wgt * a * b;
                    }
                }
                total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
                    / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
                windows += 1;
            }
        }
    }
    Ok(total / windows as f64)
}

/// Aggregation strategies priced by the cost model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostStrategy {
    Central,
    FedNeRF,
    DecentNeRF,
    /// Secure aggregation of weights only; no learned-weight machinery.
    DecentNeRFNoL,
}

/// Server/user compute model. Reference training cost is pinned to rendering
/// one 4096-ray batch in roughly `350e6` FLOPs at 128 samples per ray, and
/// one addition counts as one FLOP.
#[derive(Clone, Copy, Debug)]
pub struct FlopsModel {
    pub flops_per_batch: u128,
    pub batch_rays: u128,
    pub additions_per_flop: u128,
    pub reference_samples: u128,
}

impl Default for FlopsModel {
    fn default() -> Self {
        Self {
            flops_per_batch: 350_000_000,
            batch_rays: 4096,
            additions_per_flop: 1,
            reference_samples: 128,
        }
    }
}

/// Per-term server cost of one run; `total` is the sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct ServerFlops {
    pub training: u128,
    pub aggregation: u128,
    pub dot_products: u128,
    pub secagg_reconstruction: u128,
}

impl ServerFlops {
    pub fn total(&self) -> u128 {
        self.training + self.aggregation + self.dot_products + self.secagg_reconstruction
    }
}

impl FlopsModel {
    /// Server-side cost for `rounds` federation rounds (or, for the central
    /// strategy, training over `pixel_budget` pixels for `rounds` epochs) with
    /// `users` users holding `params` model parameters.
    pub fn flops_server(
        &self,
        strategy: CostStrategy,
        users: u128,
        params: u128,
        rounds: u128,
        pixel_budget: u128,
    ) -> ServerFlops {
        let mut out = ServerFlops::default();
        match strategy {
            CostStrategy::Central => {
                let batches = pixel_budget.div_ceil(self.batch_rays);
                out.training = batches * self.flops_per_batch * rounds;
            }
            CostStrategy::FedNeRF => {
                out.aggregation =
                    users.saturating_sub(1) * params * rounds * self.additions_per_flop;
            }
            CostStrategy::DecentNeRF => {
                // Weights and gradients are both aggregated; the learned
                // update needs a multiply+add dot product per parameter per
                // user; reconstruction is O(d K log2 K) for each of the four
                // securely aggregated quantities.
                out.aggregation =
                    2 * users.saturating_sub(1) * params * rounds * self.additions_per_flop;
                out.dot_products = 2 * params * users * rounds;
                out.secagg_reconstruction = secagg_term(params, users) * rounds * 4;
            }
            CostStrategy::DecentNeRFNoL => {
                out.aggregation =
                    users.saturating_sub(1) * params * rounds * self.additions_per_flop;
                out.secagg_reconstruction = secagg_term(params, users) * rounds;
            }
        }
        out
    }

    /// Per-user training cost: `rays / batch_rays` reference batches per
    /// epoch, scaled linearly in samples per ray.
    pub fn flops_user(&self, local_epochs: u128, rays: u128, samples: u128) -> u128 {
        self.flops_per_batch * local_epochs * rays * samples
            / (self.batch_rays * self.reference_samples)
    }
}

/// `ceil(d * n * log2 n)` additions.
fn secagg_term(params: u128, users: u128) -> u128 {
    if users <= 1 {
        return 0;
    }
    ((params * users) as f64 * (users as f64).log2()).ceil() as u128
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn solid(w: usize, h: usize, v: f64) -> Image {
        Image { width: w, height: h, data: vec![v; w * h * 3] }
    }

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = StdRng::seed_from_u64(seed);
        Image { width: w, height: h, data: (0..w * h * 3).map(|_| rng.gen()).collect() }
    }

    #[test]
    fn identical_images_hit_the_psnr_clamp() {
        let img = random_image(8, 8, 1);
        assert_eq!(psnr(&img, &img, None).unwrap(), 100.0);
    }

    #[test]
    fn half_gray_versus_black_is_six_db() {
        // MSE 0.25 -> 10 log10(4) dB.
        let a = solid(8, 8, 0.0);
        let b = solid(8, 8, 0.5);
        let got = psnr(&a, &b, None).unwrap();
        assert!((got - 10.0 * 4.0f64.log10()).abs() < 1e-12);
        assert!((got - 6.0206).abs() < 1e-3);
    }

    #[test]
    fn psnr_matches_scalar_loop_oracle() {
        let a = random_image(16, 16, 2);
        let b = random_image(16, 16, 3);
        // Independent oracle: explicit per-pixel per-channel loop.
        let mut sum = 0.0;
        for y in 0..16 {
            for x in 0..16 {
                for c in 0..3 {
                    let i = (y * 16 + x) * 3 + c;
                    let d = a.data[i] - b.data[i];
                    sum += d * d;
                }
            }
        }
        let expect = 10.0 * (1.0 / (sum / (16.0 * 16.0 * 3.0))).log10();
        assert!((psnr(&a, &b, None).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn psnr_is_symmetric() {
        let a = random_image(8, 8, 4);
        let b = random_image(8, 8, 5);
        assert_eq!(psnr(&a, &b, None).unwrap(), psnr(&b, &a, None).unwrap());
    }

    #[test]
    fn masked_psnr_ignores_unmasked_pixels() {
        let a = solid(4, 4, 0.0);
        let mut b = solid(4, 4, 0.0);
        // Corrupt one unmasked pixel; PSNR over the masked pixel stays clamped.
        b.data[0] = 1.0;
        let mut mask = Mask { width: 4, height: 4, data: vec![false; 16] };
        mask.data[5] = true;
        assert_eq!(psnr(&a, &b, Some(&mask)).unwrap(), 100.0);
    }

    #[test]
    fn empty_mask_is_an_error() {
        let a = solid(4, 4, 0.0);
        let mask = Mask { width: 4, height: 4, data: vec![false; 16] };
        assert_eq!(psnr(&a, &a, Some(&mask)).unwrap_err(), Error::EmptyMask);
    }

    #[test]
    fn dim_mismatch_is_an_error() {
        let a = solid(4, 4, 0.0);
        let b = solid(5, 4, 0.0);
        assert!(matches!(psnr(&a, &b, None).unwrap_err(), Error::DimMismatch(..)));
    }

    #[test]
    fn ssim_of_identical_images_is_one() {
        let img = random_image(12, 12, 6);
        assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_of_constants_matches_closed_form() {
        let (a, b) = (0.25, 0.75);
        let got = ssim(&solid(8, 8, a), &solid(8, 8, b)).unwrap();
        let want = (2.0 * a * b + SSIM_C1) / (a * a + b * b + SSIM_C1);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn ssim_matches_direct_reference_implementation() {
        let a = random_image(14, 10, 7);
        let b = random_image(14, 10, 8);
        // Independent oracle: 2D Gaussian weights computed directly, naive
        // window loops, no separable kernel.
        let mut w2 = [[0.0; SSIM_WINDOW]; SSIM_WINDOW];
        let mut norm = 0.0;
        for (dy, row) in w2.iter_mut().enumerate() {
            for (dx, v) in row.iter_mut().enumerate() {
                let ry = dy as f64 - 3.0;
                let rx = dx as f64 - 3.0;
                *v = (-(rx * rx + ry * ry) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
                norm += *v;
            }
        }
        for row in &mut w2 {
            for v in row {
                *v /= norm;
            }
        }
        let mut total = 0.0;
        let mut count = 0u64;
        for c in 0..3 {
            for wy in 0..=10 - SSIM_WINDOW {
                for wx in 0..=14 - SSIM_WINDOW {
                    let (mut mx, mut my) = (0.0, 0.0);
                    for dy in 0..SSIM_WINDOW {
                        for dx in 0..SSIM_WINDOW {
                            mx += w2[dy][dx] * a.data[((wy + dy) * 14 + wx + dx) * 3 + c];
                            my += w2[dy][dx] * b.data[((wy + dy) * 14 + wx + dx) * 3 + c];
                        }
                    }
                    let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
                    for dy in 0..SSIM_WINDOW {
                        for dx in 0..SSIM_WINDOW {
                            let pa = a.data[((wy + dy) * 14 + wx + dx) * 3 + c] - mx;
                            let pb = b.data[((wy + dy) * 14 + wx + dx) * 3 + c] - my;
                            vx += w2[dy][dx] * pa * pa;
                            vy += w2[dy][dx] * pb * pb;
                            cov += w2[dy][dx] * pa * pb;
                        }
                    }
                    total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cov + SSIM_C2))
                        / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
                    count += 1;
                }
            }
        }
        let want = total / count as f64;
        assert!((ssim(&a, &b).unwrap() - want).abs() < 1e-7);
    }

    #[test]
    fn ssim_is_symmetric() {
        let a = random_image(10, 10, 9);
        let b = random_image(10, 10, 10);
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ssim_rejects_tiny_images() {
        let a = solid(4, 4, 0.5);
        assert!(matches!(ssim(&a, &a).unwrap_err(), Error::TooSmall(..)));
    }

    #[test]
    fn fednerf_cost_reproduces_the_reference_figure() {
        let m = FlopsModel::default();
        let f = m.flops_server(CostStrategy::FedNeRF, 20, 1_000_000, 30, 0).total();
        assert_eq!(f, 19 * 1_000_000 * 30);
        assert!((500_000_000..=700_000_000).contains(&f));
    }

    #[test]
    fn decentnerf_dot_product_term_is_exact() {
        let m = FlopsModel::default();
        let f = m.flops_server(CostStrategy::DecentNeRF, 20, 1_000_000, 30, 0);
        assert_eq!(f.dot_products, 1_200_000_000);
    }

    #[test]
    fn single_user_federation_needs_no_aggregation_additions() {
        let m = FlopsModel::default();
        for s in [CostStrategy::FedNeRF, CostStrategy::DecentNeRF, CostStrategy::DecentNeRFNoL] {
            assert_eq!(m.flops_server(s, 1, 1_000_000, 30, 0).aggregation, 0);
        }
    }

    #[test]
    fn central_over_decentnerf_ratio_is_about_ten_thousand() {
        let m = FlopsModel::default();
        let pixels = 100u128 * 800 * 800;
        let central = m.flops_server(CostStrategy::Central, 20, 1_000_000, 30, pixels).total();
        let decent = m.flops_server(CostStrategy::DecentNeRF, 20, 1_000_000, 30, pixels).total();
        let ratio = central as f64 / decent as f64;
        assert!((1e4..1e5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn server_flops_are_monotone_in_every_argument() {
        let m = FlopsModel::default();
        let strategies = [
            CostStrategy::Central,
            CostStrategy::FedNeRF,
            CostStrategy::DecentNeRF,
            CostStrategy::DecentNeRFNoL,
        ];
        let base = (8u128, 5000u128, 30u128);
        for s in strategies {
            let f0 = m.flops_server(s, base.0, base.1, base.2, 1 << 20).total();
            assert!(m.flops_server(s, base.0 + 4, base.1, base.2, 1 << 20).total() >= f0);
            assert!(m.flops_server(s, base.0, base.1 * 2, base.2, 1 << 20).total() >= f0);
            assert!(m.flops_server(s, base.0, base.1, base.2 + 10, 1 << 20).total() >= f0);
        }
    }

    #[test]
    fn user_cost_examples() {
        let m = FlopsModel::default();
        assert_eq!(m.flops_user(0, 4096, 128), 0);
        assert_eq!(m.flops_user(1, 4096, 128), 350_000_000);
        assert_eq!(m.flops_user(1, 4096, 256), 700_000_000);
    }
}
