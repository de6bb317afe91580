//! Block pulse amplitude modulation: the linear 3:2 baseline. Channel i carries
//! α_i·x_i, x₃ is discarded; the receiver is the linear MMSE estimator.

use super::{symmetric_rect, ClosedForms, Mapping, MappingKind, MappingParams, TAIL_MASS};
use crate::channel::ChannelLaw;
use crate::error::Result;
use crate::surface::{ParametricSurface, Partials, Rect, Vec2, Vec3};

#[derive(Clone, Debug)]
pub struct Bpam {
    params: MappingParams,
    sigma_x: f64,
    domain: Rect,
}

impl Bpam {
    pub(super) fn new(params: MappingParams, sigma_x: f64) -> Self {
        let mut m = Self { params, sigma_x, domain: Rect::new([0.0; 2], [0.0; 2]) };
        let [l1, l2] = m.laws();
        m.domain = symmetric_rect(l1.tail_bound(TAIL_MASS), l2.tail_bound(TAIL_MASS));
        m
    }

    fn gains(&self) -> [f64; 2] {
        [self.params.alpha1, self.params.alpha2]
    }

    fn laws(&self) -> [ChannelLaw; 2] {
        self.gains().map(|g| ChannelLaw::Gaussian { var: (g * self.sigma_x).powi(2) })
    }
}

impl ParametricSurface for Bpam {
    fn point(&self, z: Vec2) -> Vec3 {
        Vec3::new(z[0] / self.params.alpha1, z[1] / self.params.alpha2, 0.0)
    }

    fn domain(&self) -> Rect {
        self.domain
    }

    fn partials(&self, z: Vec2) -> Partials {
        Partials {
            s: self.point(z),
            s1: Vec3::new(1.0 / self.params.alpha1, 0.0, 0.0),
            s2: Vec3::new(0.0, 1.0 / self.params.alpha2, 0.0),
            s11: Vec3::zeros(),
            s12: Vec3::zeros(),
            s22: Vec3::zeros(),
        }
    }
}

impl Mapping for Bpam {
    fn kind(&self) -> MappingKind {
        MappingKind::Bpam
    }

    fn params(&self) -> &MappingParams {
        &self.params
    }

    fn sigma_x(&self) -> f64 {
        self.sigma_x
    }

    fn channel_laws(&self) -> Result<[ChannelLaw; 2]> {
        Ok(self.laws())
    }

    fn channel_variances(&self) -> Result<[f64; 2]> {
        Ok(self.gains().map(|g| (g * self.sigma_x).powi(2)))
    }

    fn approximation_distortion(&self) -> Result<f64> {
        Ok(self.sigma_x.powi(2) / 3.0)
    }

    /// Per-component MMSE error of the two transmitted components.
    fn weak_channel_closed_form(&self, sigma_n2: f64) -> Result<f64> {
        let s2 = self.sigma_x.powi(2);
        Ok(self.gains().iter().map(|g| s2 * sigma_n2 / (g * g * s2 + sigma_n2)).sum::<f64>() / 3.0)
    }

    fn fold_seeds(&self, x: &Vec3) -> Vec<Vec2> {
        vec![Vec2::new(self.params.alpha1 * x[0], self.params.alpha2 * x[1])]
    }

    fn closed_forms(&self, _z: Vec2) -> Option<ClosedForms> {
        Some(ClosedForms {
            metric: [self.params.alpha1.powi(-2), 0.0, self.params.alpha2.powi(-2)],
            sff: Some([0.0; 3]),
        })
    }

    fn decode(&self, z: Vec2, noise_var: f64) -> (Vec3, bool) {
        let s2 = self.sigma_x.powi(2);
        let g = self.gains();
        let w = |i: usize| g[i] * s2 / (g[i] * g[i] * s2 + noise_var);
        (Vec3::new(w(0) * z[0], w(1) * z[1], 0.0), false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mappings::bpam_linear;
    use crate::surface::{classify_surface, Grid};

    #[test]
    fn noiseless_decoding_inverts_encoding() {
        let m = bpam_linear(MappingParams::new(1.0, 2.0, 0.5), 1.0, 3, 2).unwrap();
        let x = Vec3::new(0.3, -1.1, 2.0);
        let z = m.fold_seeds(&x)[0];
        let (xh, _) = m.decode(z, 0.0);
        assert!((xh - Vec3::new(0.3, -1.1, 0.0)).norm() < 1e-14);
        assert!((m.approximation_distortion().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn flat_plane() {
        let m = bpam_linear(MappingParams::new(1.0, 1.0, 1.0), 1.0, 3, 2).unwrap();
        let r = classify_surface(&m, Grid::default()).unwrap();
        assert!(r.developable && r.minimal && r.max_abs_kappa1 == 0.0);
    }

    #[test]
    fn power_follows_gain() {
        let m = bpam_linear(MappingParams::new(1.0, 1.0, 1.0), 2.0, 3, 2).unwrap();
        assert!((m.power().unwrap() - 4.0).abs() < 1e-14);
    }
}
