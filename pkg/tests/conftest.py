"""Shared builders for synthetic scenes and safe parameter draws."""

import numpy as np
import pytest

from moma import Box, CameraModel, Plane, SceneSpec, ThetaParams, render_scene


def tabletop_scene(width: int = 320, height: int = 240) -> SceneSpec:
    """A tilted table plane with two boxes on it, all depths near 1 m."""
    cam = CameraModel(
        width=width,
        height=height,
        fx=0.94 * width,
        fy=0.94 * width,
        cx=width / 2.0,
        cy=height / 2.0,
    )
    return SceneSpec(
        camera=cam,
        plane=Plane(normal=(0.05, -0.08, 1.0), offset=1.05),
        boxes=(
            Box(center=(-0.15, 0.10, 0.90), half_extents=(0.06, 0.05, 0.07)),
            Box(center=(0.12, -0.02, 0.95), half_extents=(0.05, 0.08, 0.05)),
        ),
    )


def draw_theta(
    rng: np.random.Generator,
    width: int,
    height: int,
    rot_lo: float = 0.0,
    rot_hi: float = 0.3,
) -> ThetaParams:
    """Random generating parameters kept away from gain-field zeros.

    Pseudo-intrinsics stay near the raster center with a generous focal
    length so |g| is bounded below for every |theta|, |phi| <= 0.3.
    """
    def rot() -> float:
        return float(rng.choice([-1.0, 1.0]) * rng.uniform(rot_lo, rot_hi))

    side = float(max(width, height))
    return ThetaParams(
        s=float(rng.uniform(0.3, 3.0)),
        theta=rot(),
        phi=rot(),
        t3=float(rng.uniform(-1.0, 1.0)),
        cxp=float(rng.uniform(0.4, 0.6) * width),
        cyp=float(rng.uniform(0.4, 0.6) * height),
        fp=float(rng.uniform(0.9, 1.4) * side),
    )


@pytest.fixture(scope="session")
def scene_320x240() -> SceneSpec:
    return tabletop_scene()


@pytest.fixture(scope="session")
def gt_320x240(scene_320x240):
    return render_scene(scene_320x240)
