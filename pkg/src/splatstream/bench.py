"""Frame-budget benchmark harness.

Generates synthetic splat workloads, times the pipeline stages (parse,
depth transform, sort, project, composite), and reports frame-time
statistics with FPS equivalence plus budget verdicts. Per-device
absolute numbers are machine facts; the harness reproduces the
methodology and the report shape, not any particular hardware's values.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import depthsort, render
from .errors import EmptySamples
from .plyio import parse_ply, serialize_ply
from .render import CameraModel, _project_all, default_camera
from .splats import SplatScene, activate_scene

# Headline workload size used by the evaluation scene.
REFERENCE_SPLAT_COUNT = 1_144_277

DEFAULT_FPS_TARGETS = (72, 30)

STAGES = ("parse", "depth_transform", "sort", "project", "composite")


def generate_scene(count: int, seed: int = 0, distribution: str = "uniform",
                   sh_degree: int = 0, extent: float = 50.0,
                   clusters: int = 64) -> SplatScene:
    """Deterministic synthetic scene.

    "uniform" scatters positions in a box; "debris" draws them from
    Gaussian clusters, mimicking rubble piles and scattered hazards.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.default_rng(seed)
    if distribution == "uniform":
        positions = rng.uniform(-extent, extent, (count, 3))
    elif distribution == "debris":
        centers = rng.uniform(-extent, extent, (clusters, 3))
        sigma = rng.uniform(0.5, extent / 8.0, clusters)
        which = rng.integers(0, clusters, count)
        positions = centers[which] + rng.normal(size=(count, 3)) * sigma[which, None]
    else:
        raise ValueError(f"unknown distribution '{distribution}'")

    m = (sh_degree + 1) ** 2
    quats = rng.normal(size=(count, 4))
    quats[np.linalg.norm(quats, axis=1) < 1e-6] = (1.0, 0.0, 0.0, 0.0)
    scene = SplatScene(
        positions=positions.astype(np.float32),
        raw_rotations=quats.astype(np.float32),
        raw_log_scales=rng.uniform(-3.0, 0.0, (count, 3)).astype(np.float32),
        raw_opacities=rng.uniform(-2.0, 4.0, count).astype(np.float32),
        sh_coeffs=rng.normal(0.0, 0.5, (count, 3, m)).astype(np.float32),
        sh_degree=sh_degree,
        version=0,
    )
    return scene


@dataclass
class FrameTimingStats:
    samples: list
    mean: float
    p50: float
    p95: float
    p99: float
    fps_equiv: float

    def to_dict(self) -> dict:
        return {"mean_ms": self.mean, "p50_ms": self.p50, "p95_ms": self.p95,
                "p99_ms": self.p99, "fps_equiv": self.fps_equiv,
                "samples": len(self.samples)}


def _nearest_rank(sorted_samples: np.ndarray, pct: float) -> float:
    n = len(sorted_samples)
    rank = max(1, int(np.ceil(pct / 100.0 * n)))
    return float(sorted_samples[rank - 1])


def compute_stats(samples) -> FrameTimingStats:
    """Arithmetic mean, nearest-rank percentiles, FPS = 1000/mean."""
    samples = list(float(s) for s in samples)
    if not samples:
        raise EmptySamples("need at least one sample")
    arr = np.sort(np.asarray(samples))
    mean = float(np.mean(arr))
    return FrameTimingStats(
        samples=samples,
        mean=mean,
        p50=_nearest_rank(arr, 50),
        p95=_nearest_rank(arr, 95),
        p99=_nearest_rank(arr, 99),
        fps_equiv=1000.0 / mean,
    )


@dataclass
class BenchReport:
    splat_count: int
    runs: int
    warmup_runs: int
    stage_stats: dict                     # stage name -> FrameTimingStats
    total_stats: FrameTimingStats
    memory_bytes: int
    resident_bytes: int | None
    verdicts: dict = field(default_factory=dict)   # fps target -> bool

    def to_dict(self) -> dict:
        return {
            "splat_count": self.splat_count,
            "runs": self.runs,
            "warmup_runs": self.warmup_runs,
            "stages": {k: v.to_dict() for k, v in self.stage_stats.items()},
            "total": self.total_stats.to_dict(),
            "memory_bytes": self.memory_bytes,
            "resident_bytes": self.resident_bytes,
            "verdicts": {str(t): ("PASS" if ok else "FAIL")
                         for t, ok in self.verdicts.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        rows = [("Stage", "Mean (ms)", "P50", "P95", "P99")]
        for name in STAGES:
            s = self.stage_stats[name]
            rows.append((name, f"{s.mean:.3f}", f"{s.p50:.3f}",
                         f"{s.p95:.3f}", f"{s.p99:.3f}"))
        t = self.total_stats
        rows.append(("total", f"{t.mean:.3f}", f"{t.p50:.3f}",
                     f"{t.p95:.3f}", f"{t.p99:.3f}"))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
        lines.insert(1, "-" * len(lines[0]))
        lines.append("")
        lines.append(f"splats: {self.splat_count}   runs: {self.runs} "
                     f"(+{self.warmup_runs} warm-up)")
        lines.append(f"frame-equivalent: {t.mean:.3f} ms "
                     f"({t.fps_equiv:.2f} FPS)")
        lines.append(f"memory estimate: {self.memory_bytes / 1e6:.1f} MB"
                     + (f" (resident {self.resident_bytes / 1e6:.1f} MB)"
                        if self.resident_bytes else ""))
        for target, ok in self.verdicts.items():
            budget = 1000.0 / target
            lines.append(f"target {target} FPS (budget {budget:.2f} ms): "
                         + ("PASS" if ok else "FAIL"))
        return "\n".join(lines)


def estimate_memory_bytes(scene: SplatScene, cam: CameraModel) -> int:
    """Analytic estimate: live splat arrays plus render working buffers."""
    splat_bytes = (scene.positions.nbytes + scene.raw_rotations.nbytes
                   + scene.raw_log_scales.nbytes + scene.raw_opacities.nbytes
                   + scene.sh_coeffs.nbytes)
    n = len(scene)
    working = n * 8 * (3 + 4 + 3 + 1 + 3)        # activated float64 arrays
    working += n * 8 * (2 + 4 + 1)               # means, cov2d, depths
    working += n * 8                             # sort keys + order
    working += cam.width * cam.height * 8 * 4    # rgb + transmittance
    return splat_bytes + working


def _resident_bytes():
    try:
        import psutil
        return int(psutil.Process().memory_info().rss)
    except Exception:
        return None


def run_pipeline_bench(scene: SplatScene, cam: CameraModel | None = None,
                       runs: int = 3, warmup_runs: int = 1,
                       fps_targets=DEFAULT_FPS_TARGETS,
                       parallel_render: bool = False,
                       probe_resident: bool = True) -> BenchReport:
    """Time each pipeline stage in isolation plus the full composite.

    One warm-up run (JIT, caches) is excluded from the statistics.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    cam = cam or default_camera(width=256, height=256)
    depthsort.warm_up()

    ply_bytes = serialize_ply(scene)
    stage_samples: dict = {name: [] for name in STAGES}
    totals = []

    for run in range(warmup_runs + runs):
        t_run = {}

        t0 = time.perf_counter()
        parse_ply(ply_bytes)
        t_run["parse"] = time.perf_counter() - t0

        positions, quats, scales, opac, _ = activate_scene(scene)

        t0 = time.perf_counter()
        depths, cull = depthsort.view_depths(scene, cam.view, cam.near)
        t_run["depth_transform"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        perm = depthsort.sort_by_depth(depths, cull, cam.near, cam.far, 16)
        t_run["sort"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        means, cov2, _, _ = _project_all(positions, quats, scales, cam)
        t_run["project"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        render.render(scene, cam, parallel=parallel_render)
        t_run["composite"] = time.perf_counter() - t0

        if run >= warmup_runs:
            for name in STAGES:
                stage_samples[name].append(t_run[name] * 1000.0)
            totals.append(sum(t_run.values()) * 1000.0)

    stage_stats = {name: compute_stats(stage_samples[name]) for name in STAGES}
    total_stats = compute_stats(totals)
    verdicts = {t: total_stats.mean <= 1000.0 / t for t in fps_targets}
    return BenchReport(
        splat_count=len(scene),
        runs=runs,
        warmup_runs=warmup_runs,
        stage_stats=stage_stats,
        total_stats=total_stats,
        memory_bytes=estimate_memory_bytes(scene, cam),
        resident_bytes=_resident_bytes() if probe_resident else None,
        verdicts=verdicts,
    )


def sort_scaling_slope(sizes=(10_000, 100_000, 1_000_000, 2_000_000),
                       seed: int = 7, repeats: int = 3, key_bits: int = 16):
    """Fitted log-log slope of sort time vs N over a size ladder.

    Counting sort is O(N + K); the slope should stay near 1.
    """
    depthsort.warm_up()
    rng = np.random.default_rng(seed)
    times = []
    for n in sizes:
        depths = rng.uniform(0.0, 1.0, n)
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            depthsort.sort_by_depth(depths, None, 0.0, 1.0, key_bits)
            best = min(best, time.perf_counter() - t0)
        times.append(best)
    slope = float(np.polyfit(np.log(np.asarray(sizes, float)),
                             np.log(np.asarray(times)), 1)[0])
    return slope, dict(zip(sizes, times))
