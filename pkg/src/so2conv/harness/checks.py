"""Verification and benchmark routines behind the CLI subcommands."""

from __future__ import annotations

import time

import numpy as np

from so2conv.cg import HTensor, coupling_matrix, h_to_htilde, htilde_to_h
from so2conv.conv import ConvSpec, aligned_conv, count_cost, loglog_slope, naive_conv, so2_conv
from so2conv.escn import ModelConfig, ModelWeights, build_graph, predict
from so2conv.escn.blocks import (
    aggregate,
    edge_embedding,
    message,
    message_preactivation,
    rotated_nonlinearity_error,
)
from so2conv.escn.model import initial_embeddings
from so2conv.harness.report import Report
from so2conv.irreps import num_coeffs
from so2conv.rotations import random_rotation
from so2conv.sphere import make_grid

NAIVE_SLOPE_MIN = 5.0
SO2_SLOPE_MAX = 3.5
SPEEDUP_MIN = 5.0
BAND = (0.003, 0.03)
TREND_SLACK = 1.2


def random_directions(rng: np.random.Generator, n: int) -> np.ndarray:
    d = rng.standard_normal((n, 3))
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def equivalence_errors(lmax: int, channels: int, trials: int, seed: int) -> dict:
    """Max absolute gaps between the three convolution paths and of the h round trip."""
    rng = np.random.default_rng(seed)
    spec = ConvSpec(lmax, lmax, channels)
    gaps = {"naive_vs_aligned": 0.0, "naive_vs_so2": 0.0, "h_round_trip": 0.0}
    for _ in range(trials):
        x = rng.standard_normal((num_coeffs(lmax), channels))
        d = random_directions(rng, 1)[0]
        h = HTensor.random(lmax, channels, rng)
        ht = h_to_htilde(h)
        ref = naive_conv(x, d, h, spec)
        gaps["naive_vs_aligned"] = max(gaps["naive_vs_aligned"], float(np.abs(aligned_conv(x, d, h, spec) - ref).max()))
        gaps["naive_vs_so2"] = max(gaps["naive_vs_so2"], float(np.abs(so2_conv(x, d, ht, spec) - ref).max()))
        back = htilde_to_h(ht)
        gaps["h_round_trip"] = max(
            gaps["h_round_trip"], max(float(np.abs(back.values[t] - v).max()) for t, v in h.values.items())
        )
    return gaps


def run_equivalence(lmax: int, channels: int, trials: int, seed: int) -> Report:
    if not 0 <= lmax <= 8:
        raise ValueError("lmax must be in [0, 8]")
    tol = 1e-10 if lmax <= 6 else 1e-9
    report = Report("check-equivalence", {"lmax": lmax, "channels": channels, "trials": trials}, seed)
    t0 = time.perf_counter()
    gaps = equivalence_errors(lmax, channels, trials, seed)
    report.timings["total_s"] = time.perf_counter() - t0
    for name, value in gaps.items():
        report.check(name, value, tol)
    dims = all(
        coupling_matrix(li, lo).shape == (2 * min(li, lo) + 1,) * 2
        for li in range(lmax + 1) for lo in range(lmax + 1)
    )
    report.check("bijection_dimensions_match", int(not dims), 1)
    return report


def sample_structure(seed: int, n: int = 12, box: float = 5.0):
    """Seeded random cluster of light elements used by the model-based checks."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-box / 2, box / 2, (n, 3)), rng.integers(1, 9, n)


def model_message(config: ModelConfig, seed: int, layer: int | None = None) -> np.ndarray:
    """Pre-activation aligned message of the first edge at ``layer`` (default: last) of a seeded model."""
    pos, z = sample_structure(seed)
    weights = ModelWeights.init(config, seed)
    g = build_graph(pos, z, config.cutoff, config.max_neighbors)
    s, t, d = g.sources, g.targets, g.directions()
    layer = config.layers - 1 if layer is None else layer
    x = initial_embeddings(z, weights)
    for k in range(layer + 1):
        emb = edge_embedding(g.lengths, z[s], z[t], weights, k)
        if k == layer:
            y, _ = message_preactivation(x[s[:1]], x[t[:1]], d[:1], emb[:1], weights, k)
            return y[0]
        x = aggregate(x, message(x[s], x[t], d, emb, weights, k), t, weights, k)
    raise ValueError("layer out of range")


def message_sample(source: str, lmax: int, seed: int) -> np.ndarray:
    """The single message used by the quasi-equivariance check.

    ``model``: the seeded default-config model's own pre-activation message.
    ``gaussian``: one channel of i.i.d. unit-normal coefficients.
    """
    if source == "model":
        return model_message(ModelConfig(lmax=lmax, mmax=min(2, lmax)), seed)
    if source == "gaussian":
        return np.random.default_rng(seed).standard_normal((num_coeffs(lmax), 1))
    raise ValueError(f"unknown message source {source!r}")


def run_equivariance(grids, activation: str, trials: int, lmax: int, seed: int,
                     source: str = "model", scale: float = 1.0) -> Report:
    grids = [int(g) for g in grids]
    if min(grids) < 3:
        raise ValueError("grid sizes must be >= 3")
    report = Report(
        "check-equivariance",
        {"grids": grids, "activation": activation, "trials": trials, "lmax": lmax,
         "source": source, "scale": scale},
        seed,
    )
    t0 = time.perf_counter()
    a = scale * message_sample(source, lmax, seed)
    rotations = random_rotation(np.random.default_rng(seed + 1), trials)
    errors = {}
    for g in grids:
        err = rotated_nonlinearity_error(a, make_grid("equiangular", g), activation, rotations)
        errors[g] = err
        report.rows.append({"grid": g, "activation": activation, "relative_error": err})
    report.timings["total_s"] = time.perf_counter() - t0
    if activation == "identity":
        for g, err in errors.items():
            if g >= 2 * lmax + 1:
                report.check(f"identity_exact_grid{g}", err, 1e-9)
    else:
        if 14 in errors and activation == "silu" and lmax == 6:
            report.check("silu_grid14_band", errors[14], list(BAND), "in")
        ordered = sorted(errors)
        for g0, g1 in zip(ordered, ordered[1:]):
            report.check(f"non_increasing_grid{g0}_to_{g1}", errors[g1] / errors[g0], TREND_SLACK, "<=")
    return report


def run_bench(lmax_list, channels: int, edges: int, modes, seed: int,
              fit_range=(2, 8)) -> Report:
    if edges < 1:
        raise ValueError("edges must be >= 1")
    lmax_list = sorted(int(l) for l in lmax_list)
    report = Report(
        "bench", {"lmax_list": lmax_list, "channels": channels, "edges": edges, "modes": list(modes)}, seed
    )
    costs = {}
    for mode in modes:
        for L in lmax_list:
            c = count_cost(mode, L, L, channels, edges=edges, seed=seed)
            costs[mode, L] = c
            report.rows.append({
                "mode": mode, "lmax": L, "multiplies": c.multiplies, "adds": c.adds,
                "setup_multiplies": c.setup_multiplies, "peak_live": c.peak_live,
            })
            report.timings[f"{mode}_L{L}_s"] = c.wall_time
    fit = [L for L in lmax_list if fit_range[0] <= L <= fit_range[1]]
    if len(fit) >= 2:
        for mode in modes:
            counts = [costs[mode, L].multiplies for L in fit]
            slope = loglog_slope(fit, counts)
            report.results[f"{mode}_slope"] = slope
            report.results[f"{mode}_slope_vs_lmax_plus_1"] = loglog_slope([L + 1 for L in fit], counts)
            if mode == "naive":
                report.check("naive_multiply_slope", slope, NAIVE_SLOPE_MIN, ">=")
            else:
                report.check("so2_multiply_slope", slope, SO2_SLOPE_MAX, "<=")
    if "naive" in modes and "so2" in modes and 6 in lmax_list:
        ratio = costs["naive", 6].wall_time / costs["so2", 6].wall_time
        report.results["wall_time_ratio_L6"] = ratio
        if channels == 64 and edges >= 1000:
            report.check("wall_time_ratio_L6", ratio, SPEEDUP_MIN, ">=")
    return report


def run_predict(positions, atomic_numbers, weights: ModelWeights, seed: int | None) -> Report:
    report = Report("predict", weights.config.to_dict(), seed)
    t0 = time.perf_counter()
    out = predict(positions, atomic_numbers, weights)
    report.timings["forward_s"] = time.perf_counter() - t0
    report.results["energy"] = out.energy
    report.results["forces"] = out.forces.tolist()
    report.results["edges"] = out.graph.num_edges
    return report
