"""Independent reference oracles used to cross-check the library.

Everything here is written as plain, slow, obviously-correct enumeration:
pair loops instead of sort tricks, per-layer tables instead of closed
formulas. Tests compare the fast library paths against these.
"""

import math


# ---------------------------------------------------------------------------
# Kendall tau-b by explicit O(n^2) pair enumeration
# ---------------------------------------------------------------------------

def kendall_tau_quadratic(xs, ys):
    """Tie-corrected Kendall tau-b from a full pair scan."""
    n = len(xs)
    if n != len(ys):
        raise ValueError("length mismatch")
    if n < 2:
        raise ValueError("need at least 2 observations")
    concordant = 0
    discordant = 0
    tied_x_only = 0
    tied_y_only = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx == 0 and dy == 0:
                continue
            elif dx == 0:
                tied_x_only += 1
            elif dy == 0:
                tied_y_only += 1
            elif (dx > 0) == (dy > 0):
                concordant += 1
            else:
                discordant += 1
    denom_x = concordant + discordant + tied_x_only
    denom_y = concordant + discordant + tied_y_only
    if denom_x == 0 or denom_y == 0:
        raise ValueError("degenerate input: one axis is entirely tied")
    return (concordant - discordant) / math.sqrt(denom_x * denom_y)


# ---------------------------------------------------------------------------
# Pareto front by explicit O(n^2) dominance testing
# ---------------------------------------------------------------------------

def pareto_front_quadratic(points, maximize_perf):
    """Non-dominated subset, weak dominance, duplicates collapsed.

    Accuracy (first coordinate) is always maximized; the second coordinate
    is maximized or minimized per ``maximize_perf``. Output sorted by
    accuracy ascending, matching the library contract.
    """
    unique = sorted(set((float(a), float(p)) for a, p in points))

    def dominates(u, v):
        if maximize_perf:
            better_eq = u[0] >= v[0] and u[1] >= v[1]
        else:
            better_eq = u[0] >= v[0] and u[1] <= v[1]
        return better_eq and u != v

    front = []
    for v in unique:
        if not any(dominates(u, v) for u in unique):
            front.append(v)
    front.sort(key=lambda t: (t[0], t[1]))
    return front


# ---------------------------------------------------------------------------
# Layer-by-layer MAC / parameter enumeration for the MBConv network skeleton
# ---------------------------------------------------------------------------
#
# Costing convention (shared contract with the library, enumerated here
# layer by layer rather than computed in aggregate):
#   * counts are multiply-accumulates (MACs), not 2x FLOPs
#   * convolutions use 'same' padding: out = ceil(in / stride)
#   * conv layers carry no bias (folded batch norm), SE and classifier
#     fully-connected layers carry biases
#   * the expansion conv is counted even when the expansion factor is 1
#   * squeeze-excitation reduces the expanded channels by ratio 1/4
#     (floor, at least 1) and costs two FC layers applied once per image
#   * the first layer of a block carries the block stride

def _ceil_div(a, b):
    return -(-a // b)


def enumerate_network_layers(blocks, stage_table, input_res,
                             stem_channels=32, head_channels=1280,
                             num_classes=1000):
    """Return a per-layer cost table for one architecture.

    ``blocks`` is a sequence of (expansion, kernel, layers, se) tuples and
    ``stage_table`` a same-length sequence of (in_ch, out_ch, stride).
    Each row of the result is a dict with the layer name, geometry, MACs
    and parameter count, so the table can be audited by hand.
    """
    rows = []
    res = _ceil_div(input_res, 2)
    macs = res * res * 3 * 3 * 3 * stem_channels
    params = 3 * 3 * 3 * stem_channels
    rows.append({"layer": "stem_conv3x3_s2", "res": res,
                 "in_ch": 3, "out_ch": stem_channels,
                 "macs": macs, "params": params})

    channels = stem_channels
    for b, ((e, k, layers, se), (in_ch, out_ch, stride)) in enumerate(
            zip(blocks, stage_table)):
        if in_ch != channels:
            raise ValueError(f"stage table mismatch at block {b}")
        for layer in range(layers):
            c_in = in_ch if layer == 0 else out_ch
            s = stride if layer == 0 else 1
            expanded = c_in * e

            macs = res * res * c_in * expanded
            rows.append({"layer": f"block{b}.{layer}.expand1x1",
                         "res": res, "in_ch": c_in, "out_ch": expanded,
                         "macs": macs, "params": c_in * expanded})

            out_res = _ceil_div(res, s)
            macs = out_res * out_res * k * k * expanded
            rows.append({"layer": f"block{b}.{layer}.dwconv{k}x{k}_s{s}",
                         "res": out_res, "in_ch": expanded,
                         "out_ch": expanded,
                         "macs": macs, "params": k * k * expanded})

            if se:
                mid = max(1, expanded // 4)
                macs = expanded * mid + mid * expanded
                params = (expanded * mid + mid) + (mid * expanded + expanded)
                rows.append({"layer": f"block{b}.{layer}.se",
                             "res": out_res, "in_ch": expanded,
                             "out_ch": expanded,
                             "macs": macs, "params": params})

            macs = out_res * out_res * expanded * out_ch
            rows.append({"layer": f"block{b}.{layer}.project1x1",
                         "res": out_res, "in_ch": expanded, "out_ch": out_ch,
                         "macs": macs, "params": expanded * out_ch})

            res = out_res
        channels = out_ch

    macs = res * res * channels * head_channels
    rows.append({"layer": "head_conv1x1", "res": res,
                 "in_ch": channels, "out_ch": head_channels,
                 "macs": macs, "params": channels * head_channels})
    rows.append({"layer": "classifier_fc", "res": 1,
                 "in_ch": head_channels, "out_ch": num_classes,
                 "macs": head_channels * num_classes,
                 "params": head_channels * num_classes + num_classes})
    return rows


def total_flops_params(blocks, stage_table, input_res, **kwargs):
    rows = enumerate_network_layers(blocks, stage_table, input_res, **kwargs)
    return (sum(r["macs"] for r in rows), sum(r["params"] for r in rows))


# EfficientNet-B0 style stage geometry used by the default search space.
DEFAULT_STAGE_TABLE = [
    (32, 16, 1),
    (16, 24, 2),
    (24, 40, 2),
    (40, 80, 2),
    (80, 112, 1),
    (112, 192, 2),
    (192, 320, 1),
]
