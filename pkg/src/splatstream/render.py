"""CPU reference rasterizer for splat scenes.

Projects each Gaussian to a 2D footprint (perspective Jacobian pushed
through the 3D covariance, plus a small isotropic dilation), orders
front-to-back, and alpha-composites with transmittance early exit. Slow
but exact: this is the ground truth the rest of the pipeline is checked
against, and the render stage the benchmark times.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .depthsort import quantize_depths, sort_by_depth
from .errors import BehindCamera
from .pois import CLASS_COLORS, OTHER_COLOR, LayerState, filter_pois
from .splats import ActivatedSplat, SplatScene, activate_scene
from .wim import WimTransform, quat_multiply, quat_rotate

# Rasterizer constants, shared by every code path.
ALPHA_CLAMP = 0.99
TRANSMITTANCE_EPS = 1e-4
COVARIANCE_DILATION = 0.3     # px^2, isotropic
FOOTPRINT_SIGMA = 3.0         # evaluation window half-extent in sigmas
POI_MARKER_HALF = 3           # px

SH_C1 = 0.4886025119029199
SH_C2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
         -1.0925484305920792, 0.5462742152960396)
SH_C3 = (-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
         0.3731763325901154, -0.4570457994644658, 1.445305721320277,
         -0.5900435899266435)


@dataclass
class CameraModel:
    view: np.ndarray           # 4x4 world -> camera, camera-forward +z
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    near: float = 0.1
    far: float = 1000.0

    def __post_init__(self):
        self.view = np.asarray(self.view, np.float64)
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")
        if not (self.far > self.near > 0):
            raise ValueError("need far > near > 0")

    def position(self) -> np.ndarray:
        """Camera center in world coordinates."""
        r = self.view[:3, :3]
        return -np.linalg.solve(r, self.view[:3, 3])


def default_camera(width: int = 200, height: int = 200, fx: float = 200.0,
                   fy: float | None = None, view: np.ndarray | None = None,
                   near: float = 0.1, far: float = 1000.0) -> CameraModel:
    return CameraModel(
        view=np.eye(4) if view is None else view,
        fx=fx, fy=fx if fy is None else fy,
        cx=width / 2.0, cy=height / 2.0,
        width=width, height=height, near=near, far=far,
    )


@dataclass
class RenderImage:
    width: int
    height: int
    pixels: np.ndarray         # (H, W, 3) float64 in [0, 1]
    alpha: np.ndarray          # (H, W) float64 in [0, 1]

    def to_ppm(self) -> bytes:
        """Binary P6 pixmap, maxval 255."""
        rgb = np.clip(self.pixels * 255.0 + 0.5, 0, 255).astype(np.uint8)
        header = f"P6\n{self.width} {self.height}\n255\n".encode()
        return header + rgb.tobytes()


def quat_to_rotmats(quats: np.ndarray) -> np.ndarray:
    """(N,4) unit quaternions (w,x,y,z) -> (N,3,3) rotation matrices."""
    w, x, y, z = quats[:, 0], quats[:, 1], quats[:, 2], quats[:, 3]
    m = np.empty((len(quats), 3, 3))
    m[:, 0, 0] = 1 - 2 * (y * y + z * z)
    m[:, 0, 1] = 2 * (x * y - w * z)
    m[:, 0, 2] = 2 * (x * z + w * y)
    m[:, 1, 0] = 2 * (x * y + w * z)
    m[:, 1, 1] = 1 - 2 * (x * x + z * z)
    m[:, 1, 2] = 2 * (y * z - w * x)
    m[:, 2, 0] = 2 * (x * z - w * y)
    m[:, 2, 1] = 2 * (y * z + w * x)
    m[:, 2, 2] = 1 - 2 * (x * x + y * y)
    return m


def eval_sh_colors(sh: np.ndarray, dirs: np.ndarray, degree: int) -> np.ndarray:
    """View-dependent color from SH coefficients.

    sh is (N, 3, M) channel-major, dirs (N, 3) unit vectors. Returns
    (N, 3) colors clamped to [0, 1] after the 0.5 offset.
    """
    from .splats import SH_C0

    c = SH_C0 * sh[:, :, 0]
    if degree >= 1:
        x, y, z = dirs[:, 0:1], dirs[:, 1:2], dirs[:, 2:3]
        c = c - SH_C1 * y * sh[:, :, 1] + SH_C1 * z * sh[:, :, 2] \
            - SH_C1 * x * sh[:, :, 3]
        if degree >= 2:
            xx, yy, zz = x * x, y * y, z * z
            xy, yz, xz = x * y, y * z, x * z
            c = (c + SH_C2[0] * xy * sh[:, :, 4]
                 + SH_C2[1] * yz * sh[:, :, 5]
                 + SH_C2[2] * (2 * zz - xx - yy) * sh[:, :, 6]
                 + SH_C2[3] * xz * sh[:, :, 7]
                 + SH_C2[4] * (xx - yy) * sh[:, :, 8])
            if degree >= 3:
                c = (c + SH_C3[0] * y * (3 * xx - yy) * sh[:, :, 9]
                     + SH_C3[1] * xy * z * sh[:, :, 10]
                     + SH_C3[2] * y * (4 * zz - xx - yy) * sh[:, :, 11]
                     + SH_C3[3] * z * (2 * zz - 3 * xx - 3 * yy) * sh[:, :, 12]
                     + SH_C3[4] * x * (4 * zz - xx - yy) * sh[:, :, 13]
                     + SH_C3[5] * z * (xx - yy) * sh[:, :, 14]
                     + SH_C3[6] * x * (xx - yy - 3 * zz) * sh[:, :, 15])
    return np.clip(c + 0.5, 0.0, 1.0)


def project_splat(splat: ActivatedSplat, cam: CameraModel):
    """Project one activated splat; returns (mean_px, cov2d, depth).

    cov2d = J W S3 Wt Jt + dilation, where S3 = R diag(s)^2 Rt and J is
    the perspective Jacobian at the splat's view-space position.
    """
    p_view = cam.view[:3, :3] @ splat.position + cam.view[:3, 3]
    z = p_view[2]
    if z <= cam.near:
        raise BehindCamera(f"splat at view depth {z} (near {cam.near})")
    mean = np.array([cam.fx * p_view[0] / z + cam.cx,
                     cam.fy * p_view[1] / z + cam.cy])
    rot = quat_to_rotmats(splat.rotation[None])[0]
    cov3 = rot @ np.diag(splat.scale ** 2) @ rot.T
    j = np.array([
        [cam.fx / z, 0.0, -cam.fx * p_view[0] / (z * z)],
        [0.0, cam.fy / z, -cam.fy * p_view[1] / (z * z)],
    ])
    w = cam.view[:3, :3]
    cov2 = j @ w @ cov3 @ w.T @ j.T + COVARIANCE_DILATION * np.eye(2)
    return mean, cov2, float(z)


def _project_all(positions, quats, scales, cam: CameraModel):
    """Vectorized projection; returns (means, cov2d, depths, cull)."""
    pv = positions @ cam.view[:3, :3].T + cam.view[:3, 3]
    z = pv[:, 2]
    cull = z <= cam.near
    zs = np.where(cull, 1.0, z)              # avoid div-by-zero on culled
    means = np.stack([cam.fx * pv[:, 0] / zs + cam.cx,
                      cam.fy * pv[:, 1] / zs + cam.cy], axis=1)
    rot = quat_to_rotmats(quats)
    m = rot * scales[:, None, :]
    cov3 = m @ np.transpose(m, (0, 2, 1))
    n = len(positions)
    j = np.zeros((n, 2, 3))
    j[:, 0, 0] = cam.fx / zs
    j[:, 0, 2] = -cam.fx * pv[:, 0] / (zs * zs)
    j[:, 1, 1] = cam.fy / zs
    j[:, 1, 2] = -cam.fy * pv[:, 1] / (zs * zs)
    jw = j @ cam.view[:3, :3]
    cov2 = jw @ cov3 @ np.transpose(jw, (0, 2, 1))
    cov2[:, 0, 0] += COVARIANCE_DILATION
    cov2[:, 1, 1] += COVARIANCE_DILATION
    return means, cov2, z, cull


def _composite_rows(y0, y1, order, means, inv_cov, radii, alphas_base, colors,
                    width, pixels, trans):
    """Composite sorted splats into image rows [y0, y1).

    pixels/trans are views onto the full-image buffers for those rows.
    Per-pixel arithmetic is identical regardless of row partitioning, so
    parallel output is bit-identical to single-threaded.
    """
    for i in order:
        mx, my = means[i]
        r = radii[i]
        x0 = max(int(np.floor(mx - r)), 0)
        x1 = min(int(np.ceil(mx + r)) + 1, width)
        ry0 = max(int(np.floor(my - r)), y0)
        ry1 = min(int(np.ceil(my + r)) + 1, y1)
        if x0 >= x1 or ry0 >= ry1:
            continue
        xs = np.arange(x0, x1) + 0.5 - mx
        ys = np.arange(ry0, ry1) + 0.5 - my
        a, b, c = inv_cov[i, 0, 0], inv_cov[i, 0, 1], inv_cov[i, 1, 1]
        power = -0.5 * (a * xs[None, :] ** 2
                        + 2.0 * b * ys[:, None] * xs[None, :]
                        + c * ys[:, None] ** 2)
        alpha = np.minimum(ALPHA_CLAMP, alphas_base[i] * np.exp(power))
        t_box = trans[ry0 - y0:ry1 - y0, x0:x1]
        active = t_box >= TRANSMITTANCE_EPS
        contrib = np.where(active, t_box * alpha, 0.0)
        pixels[ry0 - y0:ry1 - y0, x0:x1] += contrib[:, :, None] * colors[i]
        t_box *= np.where(active, 1.0 - alpha, 1.0)


def _canonicalize_ties(order: np.ndarray, keys: np.ndarray,
                       positions: np.ndarray) -> np.ndarray:
    """Reorder equal-depth-key runs by position so the draw order is
    invariant under input permutation (stable sort alone would keep the
    shuffled order within ties)."""
    ks = keys[order]
    if not np.any(ks[1:] == ks[:-1]):
        return order
    order = order.copy()
    n = len(ks)
    i = 0
    while i < n:
        j = i + 1
        while j < n and ks[j] == ks[i]:
            j += 1
        if j - i > 1:
            seg = order[i:j]
            p = positions[seg]
            order[i:j] = seg[np.lexsort((p[:, 2], p[:, 1], p[:, 0]))]
        i = j
    return order


def _poi_screen_color(hazard_class: str):
    return np.array(CLASS_COLORS.get(hazard_class, OTHER_COLOR))


def render(scene: SplatScene, cam: CameraModel, wim: WimTransform | None = None,
           pois=None, layers: LayerState | None = None,
           parallel: bool = False, threads: int = 4) -> RenderImage:
    """Render a scene: WIM display transform, front-to-back sort, alpha
    compositing, optional POI marker overlay."""
    h, w = cam.height, cam.width
    pixels = np.zeros((h, w, 3))
    trans = np.ones((h, w))

    if len(scene) > 0:
        positions, quats, scales, opac, _ = activate_scene(scene)
        if wim is not None:
            positions = quat_rotate(wim.rotation, positions * wim.scale) \
                + wim.translation
            scales = scales * wim.scale
            quats = np.array([quat_multiply(wim.rotation, q) for q in quats]) \
                if len(quats) else quats

        cam_pos = cam.position()
        dirs = positions - cam_pos
        norms = np.linalg.norm(dirs, axis=1, keepdims=True)
        dirs = dirs / np.where(norms == 0, 1.0, norms)
        colors = eval_sh_colors(scene.sh_coeffs.astype(np.float64), dirs,
                                scene.sh_degree)

        means, cov2, depths, cull = _project_all(positions, quats, scales, cam)

        # inverse 2x2 covariance and 3-sigma footprint radius
        det = cov2[:, 0, 0] * cov2[:, 1, 1] - cov2[:, 0, 1] ** 2
        det = np.where(det <= 0, 1e-12, det)
        inv_cov = np.empty_like(cov2)
        inv_cov[:, 0, 0] = cov2[:, 1, 1] / det
        inv_cov[:, 1, 1] = cov2[:, 0, 0] / det
        inv_cov[:, 0, 1] = inv_cov[:, 1, 0] = -cov2[:, 0, 1] / det
        mid = 0.5 * (cov2[:, 0, 0] + cov2[:, 1, 1])
        lam = mid + np.sqrt(np.maximum(mid * mid - det, 0.0))
        radii = FOOTPRINT_SIGMA * np.sqrt(lam)

        # cull footprints that cannot touch the image
        offscreen = ((means[:, 0] + radii < 0) | (means[:, 0] - radii > w)
                     | (means[:, 1] + radii < 0) | (means[:, 1] - radii > h))
        cull = cull | offscreen

        perm = sort_by_depth(depths, cull, cam.near, cam.far, key_bits=32)
        keys = quantize_depths(depths, cam.near, cam.far, 32)
        order = _canonicalize_ties(perm.order, keys, positions)

        if parallel and h > 1:
            bands = np.array_split(np.arange(h), min(threads, h))
            def run(band):
                y0, y1 = int(band[0]), int(band[-1]) + 1
                _composite_rows(y0, y1, order, means, inv_cov, radii, opac,
                                colors, w, pixels[y0:y1], trans[y0:y1])
            with ThreadPoolExecutor(max_workers=len(bands)) as pool:
                list(pool.map(run, bands))
        else:
            _composite_rows(0, h, order, means, inv_cov, radii, opac,
                            colors, w, pixels, trans)

    img = RenderImage(width=w, height=h, pixels=pixels, alpha=1.0 - trans)

    if pois:
        visible = filter_pois(pois, layers if layers is not None else LayerState())
        for poi in visible:
            p = np.asarray(poi.position, np.float64)
            if wim is not None:
                p = wim.apply_point(p)
            pv = cam.view[:3, :3] @ p + cam.view[:3, 3]
            if pv[2] <= cam.near:
                continue
            px = int(round(cam.fx * pv[0] / pv[2] + cam.cx))
            py = int(round(cam.fy * pv[1] / pv[2] + cam.cy))
            x0, x1 = max(px - POI_MARKER_HALF, 0), min(px + POI_MARKER_HALF + 1, w)
            y0, y1 = max(py - POI_MARKER_HALF, 0), min(py + POI_MARKER_HALF + 1, h)
            if x0 < x1 and y0 < y1:
                img.pixels[y0:y1, x0:x1] = _poi_screen_color(poi.hazard_class)
                img.alpha[y0:y1, x0:x1] = 1.0

    return img
