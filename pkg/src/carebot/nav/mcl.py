"""Adaptive Monte Carlo localization against a known occupancy map.

Likelihood-field sensor model over a subsampled scan; particle count adapts
between n_min and n_max from the effective sample size of the weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..geometry import Pose2D
from .mapping import OccupancyGrid


class LocalizationLost(Exception):
    """Scan likelihood collapsed for k consecutive updates (kidnapped robot)."""

    def __init__(self, message: str, particles: "ParticleSet | None" = None):
        super().__init__(message)
        self.particles = particles


@dataclass
class MclConfig:
    n_min: int = 200
    n_max: int = 2000
    beams: int = 36                 # subsample of the 360-ray scan
    sigma_hit: float = 0.1          # likelihood-field Gaussian, meters
    z_rand: float = 0.05            # floor probability per beam
    r_max: float = 10.0
    trans_noise_per_m: float = 0.10
    rot_noise_per_rad: float = 0.10
    rot_noise_per_m: float = 0.05
    health_threshold: float = 0.2
    k_lost: int = 5


@dataclass
class ParticleSet:
    poses: np.ndarray               # (N, 3) x, y, theta
    weights: np.ndarray             # (N,), normalized
    n_min: int = 200
    n_max: int = 2000
    lost_streak: int = 0
    health: float = 1.0

    @classmethod
    def gaussian(cls, center: Pose2D, sigma_xy: float, sigma_theta: float, n: int,
                 rng: np.random.Generator, n_min: int = 200, n_max: int = 2000) -> "ParticleSet":
        poses = np.empty((n, 3))
        poses[:, 0] = rng.normal(center.x, sigma_xy, n)
        poses[:, 1] = rng.normal(center.y, sigma_xy, n)
        poses[:, 2] = rng.normal(center.theta, sigma_theta, n)
        return cls(poses=poses, weights=np.full(n, 1.0 / n), n_min=n_min, n_max=n_max)

    @property
    def n(self) -> int:
        return len(self.poses)


class LikelihoodField:
    """Distance-to-nearest-obstacle lookup for the beam likelihood model."""

    def __init__(self, grid: OccupancyGrid, cfg: MclConfig | None = None):
        cfg = cfg or MclConfig()
        self.grid = grid
        occ = grid.occupied_mask()
        self.dist = ndimage.distance_transform_edt(~occ) * grid.resolution
        self.cfg = cfg
        self._far = 10.0 * cfg.sigma_hit

    def distances_at(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        res = self.grid.resolution
        ix = np.floor((xs - self.grid.origin.x) / res).astype(np.int64)
        iy = np.floor((ys - self.grid.origin.y) / res).astype(np.int64)
        inside = (ix >= 0) & (ix < self.grid.nx) & (iy >= 0) & (iy < self.grid.ny)
        out = np.full(xs.shape, self._far)
        out[inside] = self.dist[iy[inside], ix[inside]]
        return out


def estimate(ps: ParticleSet) -> Pose2D:
    """Weighted mean position with circular mean heading."""
    w = ps.weights
    x = float(np.dot(w, ps.poses[:, 0]))
    y = float(np.dot(w, ps.poses[:, 1]))
    th = math.atan2(float(np.dot(w, np.sin(ps.poses[:, 2]))),
                    float(np.dot(w, np.cos(ps.poses[:, 2]))))
    return Pose2D(x, y, th)


def _systematic_resample(poses: np.ndarray, weights: np.ndarray, n_out: int,
                         rng: np.random.Generator) -> np.ndarray:
    positions = (rng.random() + np.arange(n_out)) / n_out
    cumsum = np.cumsum(weights)
    cumsum[-1] = 1.0
    idx = np.searchsorted(cumsum, positions)
    return poses[idx].copy()


def mcl_step(ps: ParticleSet, odom_delta: Pose2D, scan: np.ndarray,
             lfield: LikelihoodField, rng: np.random.Generator,
             cfg: MclConfig | None = None) -> ParticleSet:
    """One propagate / weight / resample cycle.

    A numerically-zero odometry delta skips the measurement update (prevents
    particle depletion while stationary). Raises LocalizationLost when the
    best particle's scan fit stays under the health threshold for k
    consecutive updates.
    """
    cfg = cfg or MclConfig()
    d_trans = math.hypot(odom_delta.x, odom_delta.y)
    d_rot = abs(odom_delta.theta)
    if d_trans < 1e-9 and d_rot < 1e-9:
        return ps

    n = ps.n
    poses = ps.poses
    c = np.cos(poses[:, 2])
    s = np.sin(poses[:, 2])
    sig_t = cfg.trans_noise_per_m * d_trans
    sig_r = cfg.rot_noise_per_rad * d_rot + cfg.rot_noise_per_m * d_trans
    dx = odom_delta.x + (rng.normal(0.0, sig_t, n) if sig_t > 0 else 0.0)
    dy = odom_delta.y + (rng.normal(0.0, sig_t, n) if sig_t > 0 else 0.0)
    dth = odom_delta.theta + (rng.normal(0.0, sig_r, n) if sig_r > 0 else 0.0)
    new = np.empty_like(poses)
    new[:, 0] = poses[:, 0] + c * dx - s * dy
    new[:, 1] = poses[:, 1] + s * dx + c * dy
    new[:, 2] = poses[:, 2] + dth

    # likelihood-field weights over a beam subsample
    n_rays = len(scan)
    beam_idx = np.linspace(0, n_rays, cfg.beams, endpoint=False).astype(int)
    ranges = np.asarray(scan, dtype=float)[beam_idx]
    valid = ranges < cfg.r_max - 1e-6
    ranges = ranges[valid]
    angles = beam_idx[valid] * (2.0 * math.pi / n_rays)
    if len(ranges) == 0:
        weights = np.full(n, 1.0 / n)
        health = 1.0
    else:
        bearing = new[:, 2:3] + angles[None, :]
        ex = new[:, 0:1] + ranges[None, :] * np.cos(bearing)
        ey = new[:, 1:2] + ranges[None, :] * np.sin(bearing)
        d = lfield.distances_at(ex.ravel(), ey.ravel()).reshape(n, len(ranges))
        p = (1.0 - cfg.z_rand) * np.exp(-0.5 * (d / cfg.sigma_hit) ** 2) + cfg.z_rand
        log_p = np.log(p)
        per_particle = log_p.sum(axis=1)
        health = float(np.exp(per_particle.max() / len(ranges)))
        per_particle -= per_particle.max()
        weights = np.exp(per_particle)
        weights /= weights.sum()

    streak = ps.lost_streak + 1 if health < cfg.health_threshold else 0

    ess = 1.0 / float(np.sum(weights ** 2))
    ratio = ess / n
    target = int(round(cfg.n_min + (1.0 - ratio) * (cfg.n_max - cfg.n_min)))
    target = max(cfg.n_min, min(cfg.n_max, target))
    resampled = _systematic_resample(new, weights, target, rng)
    out = ParticleSet(poses=resampled, weights=np.full(target, 1.0 / target),
                      n_min=cfg.n_min, n_max=cfg.n_max, lost_streak=streak,
                      health=health)
    if streak >= cfg.k_lost:
        raise LocalizationLost(
            f"scan fit {health:.3f} below {cfg.health_threshold} for {streak} updates",
            particles=out)
    return out
