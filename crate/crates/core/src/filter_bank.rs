//! Gaussian and difference-of-Gaussians receptive-field kernels.
//!
//! A kernel is sampled from a radial mother function on the integer lattice
//! `[-L, L]²` around its centre, after dilating the mother function by the
//! receptive-field scale `σ`, and is then L1-normalised over the same
//! template. A [`FilterBank`] is an ordered set of such kernels, one per scale;
//! the kernel for any other centre is the canonical one translated.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sum::pairwise_sum_by;

/// Standard deviation of the positive lobe of the DoG mother wavelet.
pub const DOG_INNER_SIGMA: f64 = 1.0;
/// Standard deviation of the negative lobe of the DoG mother wavelet.
pub const DOG_OUTER_SIGMA: f64 = 1.5874;
/// Scale that maps to a 3×3 template; half widths grow in steps of this size.
pub const TEMPLATE_UNIT: f64 = 0.24;

/// Scale recorded for the 1×1 unit kernel of the fovea-like model.
pub const UNIT_SCALE: f64 = 1.0;

const STANDARD_SCALES: [f64; 4] = [0.24, 0.348, 0.5046, 0.7317];

fn gaussian(dx: f64, dy: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    (-(dx * dx + dy * dy) / (2.0 * s2)).exp() / (2.0 * PI * s2)
}

/// Isotropic 2D Gaussian with mean `(x0, y0)` and standard deviation `sigma`,
/// evaluated at lattice point `(i, j)`.
pub fn gaussian_kernel_value(i: i64, j: i64, x0: i64, y0: i64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "gaussian scale must be positive, got {sigma}"
        )));
    }
    Ok(gaussian((i - x0) as f64, (j - y0) as f64, sigma))
}

/// DoG mother wavelet: `G_1(i, j) - G_1.5874(i, j)`, both centred at the origin.
pub fn dog_mother_value(i: f64, j: f64) -> f64 {
    gaussian(i, j, DOG_INNER_SIGMA) - gaussian(i, j, DOG_OUTER_SIGMA)
}

/// Template half width `L` for a receptive-field scale: `max(1, ceil(σ / 0.24))`.
pub fn template_half_width(sigma: f64) -> usize {
    template_half_width_with_unit(sigma, TEMPLATE_UNIT)
}

/// As [`template_half_width`] with a caller-chosen template unit.
pub fn template_half_width_with_unit(sigma: f64, unit: f64) -> usize {
    let steps = (sigma / unit).ceil();
    if steps.is_finite() && steps > 1.0 {
        steps as usize
    } else {
        1
    }
}

/// Mother function a kernel is dilated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotherKind {
    Gaussian,
    DoG,
}

impl MotherKind {
    fn eval(self, u: f64, v: f64) -> f64 {
        match self {
            MotherKind::Gaussian => gaussian(u, v, 1.0),
            MotherKind::DoG => dog_mother_value(u, v),
        }
    }
}

/// Kind of a whole bank. `Unit` is the degenerate 1×1 bank of the fovea-like
/// model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BankKind {
    Unit,
    Gaussian,
    DoG,
}

impl From<MotherKind> for BankKind {
    fn from(kind: MotherKind) -> Self {
        match kind {
            MotherKind::Gaussian => BankKind::Gaussian,
            MotherKind::DoG => BankKind::DoG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub scale: f64,
    /// `(row, column)` of the kernel centre.
    pub center: (i64, i64),
    pub kind: MotherKind,
    pub half_width: usize,
}

impl KernelSpec {
    /// Kernel centred at the origin with the default template rule.
    pub fn centered(kind: MotherKind, scale: f64) -> Self {
        Self {
            scale,
            center: (0, 0),
            kind,
            half_width: template_half_width(scale),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Domain(format!(
                "kernel scale must be positive, got {}",
                self.scale
            )));
        }
        if self.half_width < 1 {
            return Err(Error::Domain(
                "template half width must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A discrete, L1-normalised weight template.
///
/// Weights are stored row-major over offsets `(-L..=L) × (-L..=L)` relative to
/// the centre.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    kind: BankKind,
    scale: f64,
    center: (i64, i64),
    half_width: usize,
    weights: Vec<f64>,
}

/// Samples the dilated mother function over the template and divides by its
/// L1 norm over the same template.
pub fn build_kernel(spec: &KernelSpec) -> Result<Kernel> {
    spec.validate()?;
    let l = spec.half_width as i64;
    let mut raw = Vec::with_capacity((2 * spec.half_width + 1).pow(2));
    for di in -l..=l {
        for dj in -l..=l {
            raw.push(
                spec.kind
                    .eval(di as f64 / spec.scale, dj as f64 / spec.scale),
            );
        }
    }
    let norm = pairwise_sum_by(&raw, |w| w.abs());
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::DegenerateKernel {
            scale: spec.scale,
            half_width: spec.half_width,
        });
    }
    let weights = raw.into_iter().map(|w| w / norm).collect();
    Ok(Kernel {
        kind: spec.kind.into(),
        scale: spec.scale,
        center: spec.center,
        half_width: spec.half_width,
        weights,
    })
}

impl Kernel {
    /// The 1×1 unit-weight kernel.
    pub fn unit() -> Self {
        Self {
            kind: BankKind::Unit,
            scale: UNIT_SCALE,
            center: (0, 0),
            half_width: 0,
            weights: vec![1.0],
        }
    }

    pub fn kind(&self) -> BankKind {
        self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn center(&self) -> (i64, i64) {
        self.center
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Side length `2L + 1` of the template.
    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(di, dj)` from the centre; zero outside the template.
    pub fn weight(&self, di: i64, dj: i64) -> f64 {
        let l = self.half_width as i64;
        if di.abs() > l || dj.abs() > l {
            return 0.0;
        }
        self.weights[((di + l) as usize) * self.side() + (dj + l) as usize]
    }

    /// Weight at absolute lattice point `(i, j)`.
    pub fn weight_at(&self, i: i64, j: i64) -> f64 {
        self.weight(i - self.center.0, j - self.center.1)
    }

    pub fn l1_norm(&self) -> f64 {
        pairwise_sum_by(&self.weights, |w| w.abs())
    }

    pub fn sum(&self) -> f64 {
        pairwise_sum_by(&self.weights, |w| *w)
    }

    /// The same kernel moved to a new centre.
    pub fn translated(&self, center: (i64, i64)) -> Self {
        Self {
            center,
            ..self.clone()
        }
    }

    /// Weights of this kernel placed at `(row, col)` on an `height × width`
    /// grid, with offsets that fall outside the grid removed and the remainder
    /// re-normalised to unit L1 norm. Out-of-grid offsets read as zero.
    /// Returns `None` when the whole template lies inside the grid.
    pub fn clipped(&self, row: usize, col: usize, height: usize, width: usize) -> Option<Vec<f64>> {
        let l = self.half_width;
        if row >= l && col >= l && row + l < height && col + l < width {
            return None;
        }
        let side = self.side();
        let inside = |k: usize| {
            let (r, c) = (
                (row + k / side) as isize - l as isize,
                (col + k % side) as isize - l as isize,
            );
            r >= 0 && c >= 0 && (r as usize) < height && (c as usize) < width
        };
        let valid: Vec<f64> = (0..side * side)
            .filter(|&k| inside(k))
            .map(|k| self.weights[k])
            .collect();
        let norm = pairwise_sum_by(&valid, |w| w.abs());
        Some(
            (0..side * side)
                .map(|k| {
                    if inside(k) {
                        self.weights[k] / norm
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }
}

/// One kernel placed at every position of an `height × width` grid.
///
/// Interior positions share the canonical weights; positions whose template
/// overhangs the grid get their own clipped, re-normalised copy.
#[derive(Debug, Clone)]
pub struct KernelPlacement {
    kernel: Kernel,
    height: usize,
    width: usize,
    border_index: Vec<u32>,
    border_weights: Vec<Vec<f64>>,
}

const INTERIOR: u32 = u32::MAX;

impl KernelPlacement {
    pub fn new(kernel: &Kernel, height: usize, width: usize) -> Self {
        let mut border_index = vec![INTERIOR; height * width];
        let mut border_weights = Vec::new();
        for row in 0..height {
            for col in 0..width {
                if let Some(w) = kernel.clipped(row, col, height, width) {
                    border_index[row * width + col] = border_weights.len() as u32;
                    border_weights.push(w);
                }
            }
        }
        Self {
            kernel: kernel.clone(),
            height,
            width,
            border_index,
            border_weights,
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn half_width(&self) -> usize {
        self.kernel.half_width
    }

    pub fn side(&self) -> usize {
        self.kernel.side()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Row-major `side × side` weights of the accumulator centred at `(row, col)`.
    pub fn weights_at(&self, row: usize, col: usize) -> &[f64] {
        match self.border_index[row * self.width + col] {
            INTERIOR => &self.kernel.weights,
            idx => &self.border_weights[idx as usize],
        }
    }

    pub fn is_interior(&self, row: usize, col: usize) -> bool {
        self.border_index[row * self.width + col] == INTERIOR
    }
}

/// An ordered set of kernels, one per receptive-field scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    kind: BankKind,
    scales: Vec<f64>,
    kernels: Vec<Kernel>,
}

impl FilterBank {
    /// The fovea-like model's bank: a single 1×1 unit kernel.
    pub fn unit() -> Self {
        Self {
            kind: BankKind::Unit,
            scales: vec![UNIT_SCALE],
            kernels: vec![Kernel::unit()],
        }
    }

    pub fn new(kind: MotherKind, scales: &[f64]) -> Result<Self> {
        Self::with_template_unit(kind, scales, TEMPLATE_UNIT)
    }

    /// Bank whose template half widths follow `max(1, ceil(σ / unit))`.
    pub fn with_template_unit(kind: MotherKind, scales: &[f64], unit: f64) -> Result<Self> {
        if !(unit > 0.0) || !unit.is_finite() {
            return Err(Error::InvalidBank(format!(
                "template unit must be positive, got {unit}"
            )));
        }
        if scales.is_empty() {
            return Err(Error::InvalidBank("a bank needs at least one scale".into()));
        }
        if scales.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidBank(format!(
                "scales must be strictly increasing, got {scales:?}"
            )));
        }
        let kernels = scales
            .iter()
            .map(|&scale| {
                build_kernel(&KernelSpec {
                    scale,
                    center: (0, 0),
                    kind,
                    half_width: template_half_width_with_unit(scale, unit),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: kind.into(),
            scales: scales.to_vec(),
            kernels,
        })
    }

    pub fn standard(name: BankName) -> Self {
        let n = name.scale_count();
        match name.mother() {
            None => Self::unit(),
            Some(kind) => {
                Self::new(kind, &STANDARD_SCALES[..n]).expect("standard scale sets are valid")
            }
        }
    }

    pub fn kind(&self) -> BankKind {
        self.kind
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scales.is_empty()
    }

    /// Places every kernel of the bank on an `height × width` grid.
    pub fn place(&self, height: usize, width: usize) -> Vec<KernelPlacement> {
        self.kernels
            .iter()
            .map(|k| KernelPlacement::new(k, height, width))
            .collect()
    }
}

/// Looks up one of the nine standard banks by name.
pub fn standard_bank(name: &str) -> Result<FilterBank> {
    Ok(FilterBank::standard(name.parse()?))
}

/// Names of the standard banks: the fovea-like unit bank and one to four
/// scales of DoG or Gaussian kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BankName {
    Fsm,
    OneDog,
    TwoDog,
    ThreeDog,
    FourDog,
    OneGauss,
    TwoGauss,
    ThreeGauss,
    FourGauss,
}

impl BankName {
    pub const ALL: [BankName; 9] = [
        BankName::Fsm,
        BankName::OneDog,
        BankName::TwoDog,
        BankName::ThreeDog,
        BankName::FourDog,
        BankName::OneGauss,
        BankName::TwoGauss,
        BankName::ThreeGauss,
        BankName::FourGauss,
    ];

    pub fn scale_count(self) -> usize {
        use BankName::*;
        match self {
            Fsm | OneDog | OneGauss => 1,
            TwoDog | TwoGauss => 2,
            ThreeDog | ThreeGauss => 3,
            FourDog | FourGauss => 4,
        }
    }

    pub fn mother(self) -> Option<MotherKind> {
        use BankName::*;
        match self {
            Fsm => None,
            OneDog | TwoDog | ThreeDog | FourDog => Some(MotherKind::DoG),
            OneGauss | TwoGauss | ThreeGauss | FourGauss => Some(MotherKind::Gaussian),
        }
    }

    pub fn as_str(self) -> &'static str {
        use BankName::*;
        match self {
            Fsm => "FSM",
            OneDog => "OneDoG",
            TwoDog => "TwoDoG",
            ThreeDog => "ThreeDoG",
            FourDog => "FourDoG",
            OneGauss => "OneGauss",
            TwoGauss => "TwoGauss",
            ThreeGauss => "ThreeGauss",
            FourGauss => "FourGauss",
        }
    }
}

impl fmt::Display for BankName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BankName {
    type Err = Error;

    /// Case-insensitive; spaces, dashes and underscores are ignored, so
    /// `FourDoG`, `four-dog` and `Four DoG` all parse.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '-' | '_'))
            .flat_map(char::to_lowercase)
            .collect();
        BankName::ALL
            .into_iter()
            .find(|n| n.as_str().to_lowercase() == key)
            .ok_or_else(|| Error::UnknownBank(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_values() {
        assert_relative_eq!(
            gaussian_kernel_value(0, 0, 0, 0, 1.0).unwrap(),
            1.0 / (2.0 * PI),
            max_relative = 1e-15
        );
        // exp(-1/2) / (2π)
        assert_relative_eq!(
            gaussian_kernel_value(1, 0, 0, 0, 1.0).unwrap(),
            0.096_532_352_630_053_9,
            max_relative = 1e-14
        );
        for sigma in [0.1, 0.7317, 3.0] {
            assert_relative_eq!(
                gaussian_kernel_value(5, 5, 5, 5, sigma).unwrap(),
                1.0 / (2.0 * PI * sigma * sigma),
                max_relative = 1e-15
            );
        }
        assert!(gaussian_kernel_value(0, 0, 0, 0, 0.0).is_err());
        assert!(gaussian_kernel_value(0, 0, 0, 0, -1.0).is_err());
        assert!(gaussian_kernel_value(0, 0, 0, 0, f64::NAN).is_err());
    }

    #[test]
    fn dog_mother() {
        let g1 = gaussian_kernel_value(0, 0, 0, 0, 1.0).unwrap();
        let expected = g1 - 1.0 / (2.0 * PI * 1.5874 * 1.5874);
        assert_relative_eq!(dog_mother_value(0.0, 0.0), expected, max_relative = 1e-15);
        assert_relative_eq!(dog_mother_value(0.0, 0.0), 0.095_995, epsilon = 1e-6);
        assert_eq!(dog_mother_value(0.3, 1.7), dog_mother_value(1.7, 0.3));
        assert!(dog_mother_value(100.0, 100.0).abs() < 1e-300);
    }

    #[test]
    fn half_widths() {
        assert_eq!(template_half_width(0.24), 1);
        assert_eq!(template_half_width(0.348), 2);
        assert_eq!(template_half_width(0.5046), 3);
        assert_eq!(template_half_width(0.7317), 4);
        assert_eq!(template_half_width(0.01), 1);
        assert_eq!(template_half_width_with_unit(0.7317, 0.5), 2);
    }

    #[test]
    fn small_dog_kernel_signs() {
        let k = build_kernel(&KernelSpec {
            scale: 0.24,
            center: (0, 0),
            kind: MotherKind::DoG,
            half_width: 1,
        })
        .unwrap();
        assert_eq!(k.side(), 3);
        assert!(k.weight(0, 0) > 0.0);
        for (di, dj) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
            assert!(k.weight(di, dj) < 0.0);
        }
        assert!((k.l1_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_kernels_sum_to_one() {
        for scale in [0.1, 0.24, 0.5, 2.0] {
            let k = build_kernel(&KernelSpec::centered(MotherKind::Gaussian, scale)).unwrap();
            assert!(k.weights().iter().all(|&w| w > 0.0));
            assert!((k.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = KernelSpec::centered(MotherKind::DoG, 0.24);
        spec.half_width = 0;
        assert!(build_kernel(&spec).is_err());
        spec.half_width = 1;
        spec.scale = -0.5;
        assert!(build_kernel(&spec).is_err());
    }

    #[test]
    fn tiny_scale_collapses_to_centre() {
        let k = build_kernel(&KernelSpec {
            scale: 1e-6,
            center: (0, 0),
            kind: MotherKind::Gaussian,
            half_width: 2,
        })
        .unwrap();
        assert_eq!(k.weight(0, 0), 1.0);
        assert_eq!(k.weight(1, 0), 0.0);
    }

    #[test]
    fn translation() {
        let base = build_kernel(&KernelSpec::centered(MotherKind::DoG, 0.5046)).unwrap();
        let moved = build_kernel(&KernelSpec {
            center: (7, -3),
            ..KernelSpec::centered(MotherKind::DoG, 0.5046)
        })
        .unwrap();
        assert_eq!(moved, base.translated((7, -3)));
        for i in 0..15 {
            for j in -10..5 {
                assert_eq!(moved.weight_at(i, j), base.weight_at(i - 7, j + 3));
            }
        }
    }

    #[test]
    fn standard_banks() {
        let four = standard_bank("FourDoG").unwrap();
        assert_eq!(four.scales(), &[0.24, 0.348, 0.5046, 0.7317]);
        assert_eq!(four.kind(), BankKind::DoG);

        let fsm = standard_bank("fsm").unwrap();
        assert_eq!(fsm.len(), 1);
        assert_eq!(fsm.kernels()[0].weights(), &[1.0]);

        let two = standard_bank("two-gauss").unwrap();
        assert_eq!(two.len(), 2);
        assert!(two
            .kernels()
            .iter()
            .all(|k| k.weights().iter().all(|&w| w > 0.0)));

        assert!(matches!(
            standard_bank("FiveDoG"),
            Err(Error::UnknownBank(_))
        ));
    }

    #[test]
    fn bank_rejects_bad_scales() {
        assert!(FilterBank::new(MotherKind::DoG, &[]).is_err());
        assert!(FilterBank::new(MotherKind::DoG, &[0.5, 0.24]).is_err());
        assert!(FilterBank::new(MotherKind::DoG, &[0.24, 0.24]).is_err());
        assert!(FilterBank::with_template_unit(MotherKind::DoG, &[0.24], 0.0).is_err());
    }

    #[test]
    fn clipped_kernel_renormalises() {
        let k = build_kernel(&KernelSpec::centered(MotherKind::DoG, 0.7317)).unwrap();
        assert!(k.clipped(4, 4, 9, 9).is_none());
        let corner = k.clipped(0, 0, 9, 9).unwrap();
        let l1: f64 = corner.iter().map(|w| w.abs()).sum();
        assert!((l1 - 1.0).abs() < 1e-12);
        // offsets above/left of the grid are dropped
        assert_eq!(corner[0], 0.0);
        assert!(corner[4 * 9 + 4] > k.weight(0, 0));

        let placed = KernelPlacement::new(&k, 12, 10);
        assert!(placed.is_interior(4, 4));
        assert!(!placed.is_interior(3, 4));
        assert_eq!(placed.weights_at(5, 5), k.weights());
    }

    #[test]
    fn name_roundtrip() {
        for name in BankName::ALL {
            assert_eq!(name.as_str().parse::<BankName>().unwrap(), name);
            assert_eq!(FilterBank::standard(name).len(), name.scale_count());
        }
        assert_eq!("Three DoG".parse::<BankName>().unwrap(), BankName::ThreeDog);
    }
}
