//! Object-placement constraint on video-like grid states: in every
//! frame, a dark object must sit at that frame's prescribed target
//! position on a light background.
//!
//! Projection is a two-step repaint: every detected object pixel
//! (intensity below the detection threshold) is erased to the background
//! intensity, and the constraint's object mask is then stamped, at the
//! object intensity, centred on the frame's target. Frames that already
//! satisfy the constraint are returned bit-for-bit unchanged.

use alloc::vec::Vec;

use crate::error::ProjectionError;
use crate::projections::{check_dim, ConstraintSet};
use crate::state::StateVector;

/// Pixel offsets of a filled disc: all `(drow, dcol)` with
/// `drow² + dcol² ≤ radius²`, in row-major order.
pub fn disc_mask(radius: f64) -> Vec<(i64, i64)> {
    assert!(radius.is_finite() && radius >= 0.0, "radius must be >= 0");
    let r = radius as i64;
    let r2 = radius * radius;
    let mut mask = Vec::new();
    for dr in -r..=r {
        for dc in -r..=r {
            if (dr * dr + dc * dc) as f64 <= r2 {
                mask.push((dr, dc));
            }
        }
    }
    mask
}

/// Grid states whose dark object occupies exactly the mask footprint at
/// each frame's target centre.
///
/// Data layout follows [`crate::state::ShapeTag::Grid`]: index
/// `frame·(height·width) + row·width + col`. Intensities live on a
/// light-background scale: background pixels at `background`, object
/// pixels at `object_intensity`, and anything below
/// `detection_threshold` counts as part of an object.
#[derive(Debug, Clone)]
pub struct ObjectPlacementConstraint {
    height: usize,
    width: usize,
    frames: usize,
    targets: Vec<(usize, usize)>,
    mask: Vec<(i64, i64)>,
    background: f64,
    object_intensity: f64,
    detection_threshold: f64,
}

impl ObjectPlacementConstraint {
    pub const DEFAULT_BACKGROUND: f64 = 1.0;
    pub const DEFAULT_OBJECT_INTENSITY: f64 = -1.0;
    pub const DEFAULT_DETECTION_THRESHOLD: f64 = 0.0;

    /// Builds the constraint with the default white background (+1),
    /// black object (−1), and zero detection threshold.
    pub fn new(
        height: usize,
        width: usize,
        frames: usize,
        targets: Vec<(usize, usize)>,
        mask: Vec<(i64, i64)>,
    ) -> Result<Self, ProjectionError> {
        Self::with_intensities(
            height,
            width,
            frames,
            targets,
            mask,
            Self::DEFAULT_BACKGROUND,
            Self::DEFAULT_OBJECT_INTENSITY,
            Self::DEFAULT_DETECTION_THRESHOLD,
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_intensities(
        height: usize,
        width: usize,
        frames: usize,
        targets: Vec<(usize, usize)>,
        mask: Vec<(i64, i64)>,
        background: f64,
        object_intensity: f64,
        detection_threshold: f64,
    ) -> Result<Self, ProjectionError> {
        assert!(height >= 1 && width >= 1 && frames >= 1, "empty grid");
        assert_eq!(targets.len(), frames, "one target centre per frame");
        assert!(!mask.is_empty(), "object mask must be non-empty");
        assert!(
            background.is_finite() && object_intensity.is_finite() && detection_threshold.is_finite(),
            "intensities must be finite"
        );
        // These orderings make projection idempotent: erased pixels must
        // not re-trigger detection, stamped pixels always must.
        assert!(
            background >= detection_threshold,
            "background must not be detected as object"
        );
        assert!(
            object_intensity < detection_threshold,
            "object intensity must fall below the detection threshold"
        );
        for (frame, &(row, col)) in targets.iter().enumerate() {
            if row >= height || col >= width {
                return Err(ProjectionError::TargetOutOfBounds {
                    frame,
                    row: row as i64,
                    col: col as i64,
                });
            }
        }
        Ok(Self {
            height,
            width,
            frames,
            targets,
            mask,
            background,
            object_intensity,
            detection_threshold,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn targets(&self) -> &[(usize, usize)] {
        &self.targets
    }

    pub fn mask(&self) -> &[(i64, i64)] {
        &self.mask
    }

    pub fn background(&self) -> f64 {
        self.background
    }

    pub fn object_intensity(&self) -> f64 {
        self.object_intensity
    }

    pub fn detection_threshold(&self) -> f64 {
        self.detection_threshold
    }

    /// Flat indices covered by the mask centred on `frame`'s target.
    /// Mask pixels falling outside the frame are clipped away.
    fn stamp_indices(&self, frame: usize) -> impl Iterator<Item = usize> + '_ {
        let (trow, tcol) = self.targets[frame];
        let base = frame * self.height * self.width;
        self.mask.iter().filter_map(move |&(dr, dc)| {
            let r = trow as i64 + dr;
            let c = tcol as i64 + dc;
            if r >= 0 && c >= 0 && (r as usize) < self.height && (c as usize) < self.width {
                Some(base + r as usize * self.width + c as usize)
            } else {
                None
            }
        })
    }
}

/// Repaints each frame so its object sits at the target: detected object
/// pixels are erased to the background intensity, then the mask is
/// stamped at the frame's target centre with the object intensity.
/// Already-satisfying frames come back bit-for-bit unchanged.
pub fn project_object_position(
    c: &ObjectPlacementConstraint,
    x: &StateVector,
) -> Result<StateVector, ProjectionError> {
    check_dim(c.height * c.width * c.frames, x)?;
    let mut out = x.data().to_vec();
    let frame_len = c.height * c.width;
    for frame in 0..c.frames {
        let span = frame * frame_len..(frame + 1) * frame_len;
        for v in &mut out[span] {
            if *v < c.detection_threshold {
                *v = c.background;
            }
        }
        for idx in c.stamp_indices(frame) {
            out[idx] = c.object_intensity;
        }
    }
    Ok(x.with_data(out).expect("repainted intensities are finite"))
}

impl ConstraintSet for ObjectPlacementConstraint {
    fn dim(&self) -> usize {
        self.height * self.width * self.frames
    }

    fn project(&self, x: &StateVector) -> Result<StateVector, ProjectionError> {
        project_object_position(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ShapeTag;

    /// Single white frame with the given pixels painted black.
    fn frame_with(h: usize, w: usize, dark: &[(usize, usize)]) -> Vec<f64> {
        let mut f = alloc::vec![1.0; h * w];
        for &(r, c) in dark {
            f[r * w + c] = -1.0;
        }
        f
    }

    fn grid(h: usize, w: usize, frames: usize, data: Vec<f64>) -> StateVector {
        StateVector::new(
            data,
            ShapeTag::Grid {
                height: h,
                width: w,
                frames,
            },
        )
        .unwrap()
    }

    #[test]
    fn moves_single_pixel_object_to_target_column() {
        let c = ObjectPlacementConstraint::new(5, 16, 1, alloc::vec![(2, 9)], alloc::vec![(0, 0)])
            .unwrap();
        let x = grid(5, 16, 1, frame_with(5, 16, &[(2, 5)]));
        let p = project_object_position(&c, &x).unwrap();
        assert_eq!(p.data(), &frame_with(5, 16, &[(2, 9)])[..]);
        // The vacated pixel is pure background.
        assert_eq!(p.data()[2 * 16 + 5], 1.0);
    }

    #[test]
    fn cross_mask_translated_matches_hand_built_frame() {
        let cross = alloc::vec![(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)];
        let c = ObjectPlacementConstraint::new(8, 8, 1, alloc::vec![(4, 5)], cross.clone()).unwrap();
        // Cross currently centred at (3, 3); target is 1 down, 2 right.
        let x = grid(
            8,
            8,
            1,
            frame_with(8, 8, &[(2, 3), (3, 2), (3, 3), (3, 4), (4, 3)]),
        );
        let p = project_object_position(&c, &x).unwrap();
        let want = frame_with(8, 8, &[(3, 5), (4, 4), (4, 5), (4, 6), (5, 5)]);
        assert_eq!(p.data(), &want[..]);
    }

    #[test]
    fn satisfying_frames_pass_through_bitwise() {
        let cross = alloc::vec![(-1, 0), (0, -1), (0, 0), (0, 1), (1, 0)];
        let c = ObjectPlacementConstraint::new(8, 8, 1, alloc::vec![(4, 5)], cross).unwrap();
        let x = grid(
            8,
            8,
            1,
            frame_with(8, 8, &[(3, 5), (4, 4), (4, 5), (4, 6), (5, 5)]),
        );
        let p = project_object_position(&c, &x).unwrap();
        assert_eq!(p, x);
        assert!(c.is_feasible(&x, 0.0));
        assert_eq!(c.distance_sq(&x).unwrap(), 0.0);
    }

    #[test]
    fn noisy_frames_become_feasible_and_projection_is_idempotent() {
        use crate::rng::RngStream;
        let mut rng = RngStream::new(9, 0);
        let c = ObjectPlacementConstraint::new(
            16,
            16,
            2,
            alloc::vec![(4, 4), (9, 11)],
            disc_mask(1.0),
        )
        .unwrap();
        let data: Vec<f64> = (0..c.dim()).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let x = grid(16, 16, 2, data);
        assert!(!c.is_feasible(&x, 0.0));
        let p = project_object_position(&c, &x).unwrap();
        assert!(c.is_feasible(&p, 0.0));
        let pp = project_object_position(&c, &p).unwrap();
        assert_eq!(p, pp);
        // Exactly the stamped pixels are dark in each frame.
        for frame in 0..2 {
            let dark: Vec<usize> = (0..256)
                .filter(|i| p.data()[frame * 256 + i] < 0.0)
                .map(|i| frame * 256 + i)
                .collect();
            let mut want: Vec<usize> = c.stamp_indices(frame).collect();
            want.sort_unstable();
            assert_eq!(dark, want);
        }
    }

    #[test]
    fn mask_pixels_off_the_edge_are_clipped() {
        let c =
            ObjectPlacementConstraint::new(6, 6, 1, alloc::vec![(0, 0)], disc_mask(1.0)).unwrap();
        let x = grid(6, 6, 1, frame_with(6, 6, &[(3, 3)]));
        let p = project_object_position(&c, &x).unwrap();
        // Only the in-bounds part of the disc is stamped.
        let want = frame_with(6, 6, &[(0, 0), (0, 1), (1, 0)]);
        assert_eq!(p.data(), &want[..]);
        let pp = project_object_position(&c, &p).unwrap();
        assert_eq!(p, pp);
    }

    #[test]
    fn target_centre_outside_frame_is_rejected() {
        match ObjectPlacementConstraint::new(8, 8, 2, alloc::vec![(4, 4), (3, 8)], disc_mask(0.0))
        {
            Err(ProjectionError::TargetOutOfBounds { frame, row, col }) => {
                assert_eq!((frame, row, col), (1, 3, 8));
            }
            other => panic!("expected bounds error, got {other:?}"),
        }
    }

    #[test]
    fn disc_mask_pixel_counts() {
        assert_eq!(disc_mask(0.0), alloc::vec![(0, 0)]);
        assert_eq!(disc_mask(1.0).len(), 5);
        assert_eq!(disc_mask(1.5).len(), 9);
        assert_eq!(disc_mask(3.0).len(), 29);
        // Symmetric about both axes.
        let m = disc_mask(3.0);
        for &(dr, dc) in &m {
            assert!(m.contains(&(-dr, -dc)) && m.contains(&(dr, -dc)));
        }
    }
}
