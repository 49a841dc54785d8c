"""Poses, pinhole camera model, and the two on-screen observations:
the subject bounding box (+ body orientation) and the background grid
motion field.

World frame: x/y horizontal, z up. A pose's orientation is (roll, yaw,
pitch) with rotation R = Rz(yaw) Ry(pitch) Rx(roll) mapping body axes
to world; body x is the camera's optical axis, positive pitch looks
down. Image axes: u right, v down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRID = 8  # motion-field cells per image axis
BODY_WIDTH_RATIO = 0.35  # subject box width as a fraction of body height


class VisibilityError(ValueError):
    """Subject is behind the camera."""


class OffscreenError(ValueError):
    """Subject box falls fully outside the frame."""


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, float), 2.0 * np.pi)


@dataclass
class Pose6D:
    position: np.ndarray  # (3,) meters
    roll: float = 0.0
    yaw: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.roll = float(wrap_angle(self.roll))
        self.yaw = float(wrap_angle(self.yaw))
        self.pitch = float(wrap_angle(self.pitch))

    @property
    def angles(self) -> np.ndarray:
        return np.array([self.roll, self.yaw, self.pitch])

    def rotation(self) -> np.ndarray:
        """Body-to-world rotation matrix."""
        cr, sr = np.cos(self.roll), np.sin(self.roll)
        cy, sy = np.cos(self.yaw), np.sin(self.yaw)
        cp, sp = np.cos(self.pitch), np.sin(self.pitch)
        Rz = np.array([[cy, -sy, 0], [sy, cy, 0], [0, 0, 1]])
        Ry = np.array([[cp, 0, sp], [0, 1, 0], [-sp, 0, cp]])
        Rx = np.array([[1, 0, 0], [0, cr, -sr], [0, sr, cr]])
        return Rz @ Ry @ Rx

    def camera_axes(self):
        """(right, down, forward) unit vectors in world coordinates."""
        R = self.rotation()
        forward = R[:, 0]
        right = -R[:, 1]
        down = -R[:, 2]
        return right, down, forward


@dataclass
class Intrinsics:
    focal: float = 600.0  # pixels
    width: int = 640
    height: int = 480
    cx: float = 320.0
    cy: float = 240.0

    def __post_init__(self):
        if self.focal <= 0:
            raise ValueError("focal length must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point outside image")


def look_at(position: np.ndarray, target: np.ndarray) -> Pose6D:
    """Pose at `position` with the optical axis through `target`, roll 0."""
    d = np.asarray(target, float) - np.asarray(position, float)
    yaw = np.arctan2(d[1], d[0])
    pitch = -np.arcsin(np.clip(d[2] / np.linalg.norm(d), -1.0, 1.0))
    return Pose6D(np.asarray(position, float), 0.0, yaw, pitch)


def project_points(cam: Pose6D, K: Intrinsics, points: np.ndarray):
    """Project world points (N,3). Returns (pixels (N,2), depths (N,))."""
    right, down, forward = cam.camera_axes()
    d = np.atleast_2d(points) - cam.position
    x = d @ right
    y = d @ down
    z = d @ forward
    with np.errstate(divide="ignore", invalid="ignore"):
        u = K.focal * x / z + K.cx
        v = K.focal * y / z + K.cy
    return np.stack([u, v], axis=-1), z


def pixel_to_world(cam: Pose6D, K: Intrinsics, u: float, v: float,
                   depth: float) -> np.ndarray:
    """Inverse of project_points for one pixel at a known depth."""
    right, down, forward = cam.camera_axes()
    x = (u - K.cx) / K.focal * depth
    y = (v - K.cy) / K.focal * depth
    return cam.position + x * right + y * down + depth * forward


@dataclass
class FgFeature:
    cx: float  # box center, normalized by image width
    cy: float  # box center, normalized by image height
    w: float   # box width / image width
    h: float   # box height / image height
    orientation: float  # subject yaw relative to camera yaw, radians

    def vector(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h, self.orientation])


def project_foreground(cam: Pose6D, K: Intrinsics, subject: Pose6D,
                       subject_height: float) -> FgFeature:
    """On-screen subject box from a thin vertical body model.

    Box height comes from the exact pinhole relation focal*h/depth, so
    localization from the box inverts this projection exactly.
    """
    px, z = project_points(cam, K, subject.position[None, :])
    depth = float(z[0])
    if depth <= 0:
        raise VisibilityError(f"subject at depth {depth:.3f} m behind camera")
    u, v = float(px[0, 0]), float(px[0, 1])
    h_px = K.focal * subject_height / depth
    w_px = K.focal * subject_height * BODY_WIDTH_RATIO / depth
    if (u + w_px / 2 < 0 or u - w_px / 2 > K.width
            or v + h_px / 2 < 0 or v - h_px / 2 > K.height):
        raise OffscreenError(
            f"subject box at ({u:.1f},{v:.1f}) px outside the frame")
    return FgFeature(
        cx=u / K.width,
        cy=v / K.height,
        w=w_px / K.width,
        h=h_px / K.height,
        orientation=float(wrap_angle(subject.yaw - cam.yaw)),
    )


@dataclass
class BgFeature:
    velocity: np.ndarray = field(
        default_factory=lambda: np.zeros((GRID, GRID, 2)))
    valid: np.ndarray = field(
        default_factory=lambda: np.zeros((GRID, GRID), dtype=bool))

    def vector(self) -> np.ndarray:
        return self.velocity.ravel()

    def mask_vector(self) -> np.ndarray:
        return self.valid.ravel().astype(float)


def render_motion_field(cam_t: Pose6D, cam_t1: Pose6D, K: Intrinsics,
                        background: np.ndarray) -> BgFeature:
    """Mean per-cell pixel displacement of static points between the two
    poses; displacement normalized by image size. Cells without points
    are zero with valid=False."""
    px0, z0 = project_points(cam_t, K, background)
    px1, z1 = project_points(cam_t1, K, background)
    ok = ((z0 > 1e-6) & (z1 > 1e-6)
          & (px0[:, 0] >= 0) & (px0[:, 0] < K.width)
          & (px0[:, 1] >= 0) & (px0[:, 1] < K.height))
    feature = BgFeature()
    if not np.any(ok):
        return feature
    p0, p1 = px0[ok], px1[ok]
    if not (np.all(np.isfinite(p0)) and np.all(np.isfinite(p1))):
        raise ArithmeticError("render_motion_field: non-finite projection")
    disp = (p1 - p0) / np.array([K.width, K.height])
    gx = np.minimum((p0[:, 0] / K.width * GRID).astype(int), GRID - 1)
    gy = np.minimum((p0[:, 1] / K.height * GRID).astype(int), GRID - 1)
    cell = gy * GRID + gx
    counts = np.bincount(cell, minlength=GRID * GRID).astype(float)
    sums = np.zeros((GRID * GRID, 2))
    np.add.at(sums, cell, disp)
    nonzero = counts > 0
    sums[nonzero] /= counts[nonzero, None]
    feature.velocity = sums.reshape(GRID, GRID, 2)
    feature.valid = nonzero.reshape(GRID, GRID)
    return feature


def flip_fg(vec: np.ndarray) -> np.ndarray:
    """Horizontal mirror of an FG feature vector (cx,cy,w,h,orient)."""
    out = np.array(vec, dtype=float, copy=True)
    out[..., 0] = 1.0 - out[..., 0]
    out[..., 4] = wrap_angle(-out[..., 4])
    return out


def flip_bg(vec: np.ndarray, mask: np.ndarray):
    """Horizontal mirror of a flattened BG field (+ validity mask)."""
    v = np.array(vec, dtype=float, copy=True).reshape(
        vec.shape[:-1] + (GRID, GRID, 2))
    v = v[..., :, ::-1, :]
    v = v.copy()
    v[..., 0] = -v[..., 0]
    m = np.array(mask, copy=True).reshape(mask.shape[:-1] + (GRID, GRID))
    m = m[..., :, ::-1].copy()
    return v.reshape(vec.shape), m.reshape(mask.shape)
