"""Digital phantom: loop-coil field simulation, rasterized test object,
synthetic multicoil acquisition, and pre-scan generation.

Coil sensitivities come from the Biot-Savart law for circular wire loops
discretized into straight segments.  All coil centers and grid points lie
in the z = 0 plane; the receive sensitivity is the transverse complex
field combination ``B_x - i B_y`` (the main field points along grid z),
peak-normalized per coil over the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .coils import ssos_combine
from .operators import fft_centered, ifft_centered
from .prescan import PrescanPair
from .recon import uniform_undersampling_mask
from .volumes import (
    ComplexVolume,
    CorrectionMap,
    GridMismatchError,
    SamplingMask,
    SensitivitySet,
)

#: Default geometry for the simulation study, in fractions of the FOV.
#: Standoffs are the distance of coil centers from the image center; the
#: values are chosen so that the peak-normalized surface envelope shades
#: the object noticeably while the body-coil pair stays uniform near 1.
SURFACE_RADIUS_FRACTION = 0.2
SURFACE_STANDOFF_FRACTION = 1.2
BODY_RADIUS_FRACTION = 1.0
BODY_STANDOFF_FRACTION = 4.0
DEFAULT_SEGMENTS = 256
DEFAULT_PRESCAN_MATRIX = (32, 32)

_POINT_CHUNK = 4096


@dataclass(frozen=True)
class CoilGeometry:
    """Circular wire loop: center, unit axis, radius, segment count."""

    center_mm: tuple[float, float, float]
    axis: tuple[float, float, float]
    radius_mm: float
    segments: int = DEFAULT_SEGMENTS

    def __post_init__(self):
        center = tuple(float(v) for v in self.center_mm)
        axis = np.asarray(self.axis, dtype=np.float64)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise ValueError("coil axis must be nonzero")
        object.__setattr__(self, "center_mm", center)
        object.__setattr__(self, "axis", tuple(axis / norm))
        if self.radius_mm <= 0:
            raise ValueError("coil radius must be > 0")
        if self.segments < 8:
            raise ValueError("need at least 8 loop segments")


def _loop_segments(coil: CoilGeometry) -> tuple[NDArray, NDArray]:
    """Midpoints and direction vectors of the discretized loop."""
    axis = np.asarray(coil.axis)
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    phi = np.linspace(0.0, 2.0 * np.pi, coil.segments + 1)
    ring = (np.asarray(coil.center_mm)
            + coil.radius_mm * (np.outer(np.cos(phi), u) + np.outer(np.sin(phi), v)))
    return 0.5 * (ring[:-1] + ring[1:]), np.diff(ring, axis=0)


def loop_field(coil: CoilGeometry, points_mm: NDArray) -> NDArray[np.float64]:
    """Magnetic field of the loop at arbitrary points, unit current factor.

    Sums ``dl x r / (|r|^2 + eps^2)^(3/2)`` over straight segments, with
    ``eps = 1e-3 * radius`` keeping the field finite arbitrarily close to
    the wire.  Input and output have shape ``(npoints, 3)``.
    """
    pts = np.atleast_2d(np.asarray(points_mm, dtype=np.float64))
    mid, dl = _loop_segments(coil)
    eps2 = (1e-3 * coil.radius_mm) ** 2
    out = np.empty_like(pts)
    for start in range(0, pts.shape[0], _POINT_CHUNK):
        chunk = pts[start:start + _POINT_CHUNK]
        r = chunk[:, None, :] - mid[None, :, :]
        r2 = np.einsum("psk,psk->ps", r, r) + eps2
        contrib = np.cross(dl[None], r) / (r2 ** 1.5)[..., None]
        out[start:start + _POINT_CHUNK] = contrib.sum(axis=1)
    return out


def _grid_points(spatial_shape, voxel_size_mm, origin_mm) -> NDArray:
    nz, ny, nx = spatial_shape
    coords = []
    for world_axis, n in ((0, nx), (1, ny), (2, nz)):
        step = voxel_size_mm[world_axis]
        coords.append(origin_mm[world_axis] + (np.arange(n) - (n - 1) / 2.0) * step)
    zz, yy, xx = np.meshgrid(coords[2], coords[1], coords[0], indexing="ij")
    return np.stack([xx.ravel(), yy.ravel(), zz.ravel()], axis=1)


def biot_savart_map(coil: CoilGeometry, spatial_shape, voxel_size_mm=(1.0, 1.0, 1.0),
                    origin_mm=(0.0, 0.0, 0.0)) -> ComplexVolume:
    """Receive-sensitivity map of one loop on a voxel grid.

    The map is ``B_x - i B_y`` sampled at voxel centers and scaled so the
    peak magnitude over the grid is 1.
    """
    pts = _grid_points(spatial_shape, voxel_size_mm, origin_mm)
    B = loop_field(coil, pts)
    sens = (B[:, 0] - 1j * B[:, 1]).reshape(tuple(spatial_shape))
    peak = np.abs(sens).max()
    if peak == 0:
        raise ValueError("coil produces no transverse field on this grid")
    return ComplexVolume(data=sens / peak, domain="image",
                         voxel_size_mm=voxel_size_mm, origin_mm=origin_mm)


@dataclass(frozen=True)
class ShapeSpec:
    """Axis-aligned raster primitive; ``semi_axes_mm`` are half extents."""

    kind: str
    center_mm: tuple[float, float]
    semi_axes_mm: tuple[float, float]
    intensity: float

    def __post_init__(self):
        if self.kind not in ("ellipse", "rectangle"):
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if not (0.0 <= self.intensity <= 1.0):
            raise ValueError("shape intensity must lie in [0, 1]")
        if any(a <= 0 for a in self.semi_axes_mm):
            raise ValueError("shape semi-axes must be positive")
        object.__setattr__(self, "center_mm", tuple(float(v) for v in self.center_mm))
        object.__setattr__(self, "semi_axes_mm", tuple(float(v) for v in self.semi_axes_mm))


@dataclass(frozen=True)
class PhantomSpec:
    """2D test object: grid matrix ``(nx, ny)``, FOV, and a paint list of
    primitives (later shapes overwrite earlier ones)."""

    matrix: tuple[int, int]
    fov_mm: tuple[float, float]
    shapes: tuple[ShapeSpec, ...]

    def __post_init__(self):
        matrix = tuple(int(n) for n in self.matrix)
        if len(matrix) != 2 or any(n < 16 for n in matrix):
            raise ValueError("phantom matrix must be 2D with at least 16 per axis")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "fov_mm", tuple(float(v) for v in self.fov_mm))
        object.__setattr__(self, "shapes", tuple(self.shapes))


def make_phantom(spec: PhantomSpec) -> ComplexVolume:
    """Rasterize the phantom primitives onto the grid; values in [0, 1]."""
    nx, ny = spec.matrix
    voxel = (spec.fov_mm[0] / nx, spec.fov_mm[1] / ny, 1.0)
    xs = (np.arange(nx) - (nx - 1) / 2.0) * voxel[0]
    ys = (np.arange(ny) - (ny - 1) / 2.0) * voxel[1]
    X, Y = np.meshgrid(xs, ys)  # shape (ny, nx)
    img = np.zeros((ny, nx))
    for shape in spec.shapes:
        cx, cy = shape.center_mm
        ax, ay = shape.semi_axes_mm
        if shape.kind == "ellipse":
            inside = ((X - cx) / ax) ** 2 + ((Y - cy) / ay) ** 2 <= 1.0
        else:
            inside = (np.abs(X - cx) <= ax) & (np.abs(Y - cy) <= ay)
        img[inside] = shape.intensity
    return ComplexVolume(data=img.astype(np.complex128), domain="image",
                         voxel_size_mm=voxel)


def default_phantom_spec(matrix: int = 256, fov_mm: float = 256.0) -> PhantomSpec:
    """Structured default object: a large background ellipse spanning 70%
    of the FOV plus six interior features at intensities 0.2 to 1.0."""
    s = fov_mm / 256.0
    shapes = (
        ShapeSpec("ellipse", (0, 0), (0.35 * fov_mm, 0.35 * fov_mm), 0.8),
        ShapeSpec("ellipse", (-35 * s, 10 * s), (28 * s, 38 * s), 0.55),
        ShapeSpec("ellipse", (35 * s, 10 * s), (28 * s, 38 * s), 0.45),
        ShapeSpec("ellipse", (0, -25 * s), (22 * s, 18 * s), 1.0),
        ShapeSpec("rectangle", (0, 48 * s), (40 * s, 12 * s), 0.3),
        ShapeSpec("ellipse", (0, -25 * s), (7 * s, 6 * s), 0.2),
        ShapeSpec("rectangle", (-55 * s, -45 * s), (10 * s, 8 * s), 0.9),
    )
    return PhantomSpec(matrix=(matrix, matrix), fov_mm=(fov_mm, fov_mm), shapes=shapes)


def default_surface_coils(fov_mm: float = 256.0,
                          segments: int = DEFAULT_SEGMENTS) -> tuple[CoilGeometry, ...]:
    """Four loops at 0/90/180/270 degrees, axes pointing at the center."""
    d = SURFACE_STANDOFF_FRACTION * fov_mm
    r = SURFACE_RADIUS_FRACTION * fov_mm
    coils = []
    for cx, cy in ((d, 0.0), (0.0, d), (-d, 0.0), (0.0, -d)):
        coils.append(CoilGeometry(center_mm=(cx, cy, 0.0), axis=(-cx, -cy, 0.0),
                                  radius_mm=r, segments=segments))
    return tuple(coils)


def default_body_coils(fov_mm: float = 256.0,
                       segments: int = DEFAULT_SEGMENTS) -> tuple[CoilGeometry, ...]:
    """An opposed pair of large loops above and below the image."""
    d = BODY_STANDOFF_FRACTION * fov_mm
    r = BODY_RADIUS_FRACTION * fov_mm
    return (
        CoilGeometry(center_mm=(0.0, d, 0.0), axis=(0.0, -1.0, 0.0), radius_mm=r,
                     segments=segments),
        CoilGeometry(center_mm=(0.0, -d, 0.0), axis=(0.0, 1.0, 0.0), radius_mm=r,
                     segments=segments),
    )


@dataclass(frozen=True)
class TruthBundle:
    """Ground truth carried out of the simulator for validation."""

    phantom: ComplexVolume
    surface_maps: SensitivitySet
    body_maps: SensitivitySet
    modulation: CorrectionMap  # SSoS envelope of the true surface maps


@dataclass(frozen=True)
class SimulationResult:
    y: ComplexVolume
    mask: SamplingMask
    prescan: PrescanPair
    truth: TruthBundle


def _sensitivity_stack(coils, template: ComplexVolume) -> SensitivitySet:
    maps = [biot_savart_map(c, template.spatial_shape, template.voxel_size_mm,
                            template.origin_mm).data[0] for c in coils]
    vol = template.with_data(np.stack(maps))
    support = np.ones(template.spatial_shape, dtype=bool)
    return SensitivitySet(maps=vol, support=support, kind="true_map")


def _central_block_lowres(image: NDArray, template: ComplexVolume,
                          matrix: tuple[int, int]) -> NDArray:
    """Low-resolution image from the central k-space block of one coil image."""
    spec = fft_centered(template.with_data(image[None]))
    nz, ny, nx = spec.spatial_shape
    my, mx = matrix
    if my > ny or mx > nx:
        raise GridMismatchError(f"pre-scan matrix {matrix} exceeds grid ({ny}, {nx})")
    ys, xs = ny // 2 - my // 2, nx // 2 - mx // 2
    block = spec.data[:, :, ys:ys + my, xs:xs + mx]
    low = ComplexVolume(
        data=block, domain="kspace",
        voxel_size_mm=(template.voxel_size_mm[0] * nx / mx,
                       template.voxel_size_mm[1] * ny / my,
                       template.voxel_size_mm[2]),
        origin_mm=template.origin_mm)
    return ifft_centered(low).data[0]


def simulate_acquisition(phantom: ComplexVolume, surface_coils, body_coils,
                         mask: SamplingMask | None = None, sigma: float = 0.0,
                         seed: int = 0,
                         prescan_matrix: tuple[int, int] = DEFAULT_PRESCAN_MATRIX
                         ) -> SimulationResult:
    """Generate stacked k-space data and a matching low-resolution pre-scan.

    Surface-coil images are the true maps times the phantom; ``y`` is
    their masked centered FFT plus circularly symmetric Gaussian noise
    (standard deviation ``sigma`` per real/imaginary component, drawn from
    a generator seeded with ``seed``).  The pre-scan is the central
    ``prescan_matrix`` k-space block of every surface and body coil image,
    returned as low-resolution image stacks.
    """
    if phantom.ncoils != 1:
        raise ValueError("phantom must be single-coil")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if mask is None:
        mask = SamplingMask.full(phantom.spatial_shape)
    if mask.keep.shape != phantom.spatial_shape:
        raise GridMismatchError(
            f"mask grid {mask.keep.shape} != phantom grid {phantom.spatial_shape}")

    surface = _sensitivity_stack(surface_coils, phantom)
    body = _sensitivity_stack(body_coils, phantom)

    coil_images = surface.maps.data * phantom.data[0][None]
    spec = fft_centered(phantom.with_data(coil_images))
    y_data = spec.data * mask.keep[None]
    if sigma > 0:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(y_data.shape) + 1j * rng.standard_normal(y_data.shape)
        y_data = y_data + sigma * noise * mask.keep[None]
    y = spec.with_data(y_data)

    pre_surface = np.stack([_central_block_lowres(img, phantom, prescan_matrix)
                            for img in coil_images])
    pre_body = np.stack([_central_block_lowres(bm * phantom.data[0], phantom,
                                               prescan_matrix)
                         for bm in body.maps.data])
    low_voxel = (phantom.voxel_size_mm[0] * phantom.spatial_shape[2] / prescan_matrix[1],
                 phantom.voxel_size_mm[1] * phantom.spatial_shape[1] / prescan_matrix[0],
                 phantom.voxel_size_mm[2])
    prescan = PrescanPair(
        body=ComplexVolume(data=pre_body, domain="image", voxel_size_mm=low_voxel,
                           origin_mm=phantom.origin_mm),
        surface=ComplexVolume(data=pre_surface, domain="image", voxel_size_mm=low_voxel,
                              origin_mm=phantom.origin_mm),
    )

    envelope = ssos_combine(surface.maps).data[0].real
    modulation = CorrectionMap(values=envelope, kind="g",
                               voxel_size_mm=phantom.voxel_size_mm,
                               origin_mm=phantom.origin_mm)
    truth = TruthBundle(phantom=phantom, surface_maps=surface, body_maps=body,
                        modulation=modulation)
    return SimulationResult(y=y, mask=mask, prescan=prescan, truth=truth)


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulation run (JSON-serializable)."""

    phantom: PhantomSpec
    surface_coils: tuple[CoilGeometry, ...]
    body_coils: tuple[CoilGeometry, ...]
    mask: dict = field(default_factory=lambda: {"type": "full"})
    sigma: float = 0.0
    seed: int = 0
    prescan_matrix: tuple[int, int] = DEFAULT_PRESCAN_MATRIX


def default_scenario(matrix: int = 256, fov_mm: float = 256.0, sigma: float = 0.0,
                     seed: int = 0) -> Scenario:
    return Scenario(
        phantom=default_phantom_spec(matrix, fov_mm),
        surface_coils=default_surface_coils(fov_mm),
        body_coils=default_body_coils(fov_mm),
        sigma=sigma,
        seed=seed,
    )


def build_mask(mask_spec: dict, spatial_shape) -> SamplingMask:
    """Instantiate a sampling mask from its scenario description."""
    kind = mask_spec.get("type", "full")
    if kind == "full":
        return SamplingMask.full(spatial_shape)
    if kind == "uniform":
        rate = int(mask_spec.get("rate", 2))
        axis = {"y": -2, "x": -1, "z": -3}[mask_spec.get("axis", "y")]
        return uniform_undersampling_mask(spatial_shape, rate, axis)
    raise ValueError(f"unknown mask type {kind!r}")


def run_scenario(scenario: Scenario) -> SimulationResult:
    """Rasterize the phantom, build the mask, and simulate the acquisition."""
    phantom = make_phantom(scenario.phantom)
    mask = build_mask(scenario.mask, phantom.spatial_shape)
    return simulate_acquisition(phantom, scenario.surface_coils, scenario.body_coils,
                                mask=mask, sigma=scenario.sigma, seed=scenario.seed,
                                prescan_matrix=tuple(scenario.prescan_matrix))
