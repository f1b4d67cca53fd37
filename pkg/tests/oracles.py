"""Independent reference evaluators used by the tests.

Everything here is written with explicit scalar loops and ``cmath`` so it
shares no vectorized code path with the package.
"""

import cmath
import math


def rho(x, y, elevation, azimuth):
    return x * math.cos(elevation) * math.sin(azimuth) + y * math.sin(elevation)


def field_response(pos, elevations, azimuths, wavelength):
    return [cmath.exp(-2j * math.pi / wavelength * rho(pos[0], pos[1], e, a))
            for e, a in zip(elevations, azimuths)]


def bs_user_channel(rx_pos, rx_angles, tx_angles, prm, antenna_positions, wavelength):
    """``h[n] = sum_i sum_j f_i(r) * prm[i][j] * g_j(t_n)`` by triple loop."""
    f = field_response(rx_pos, *rx_angles, wavelength)
    h = []
    for t in antenna_positions:
        g = field_response(t, *tx_angles, wavelength)
        acc = 0j
        for i in range(len(f)):
            for j in range(len(g)):
                acc += f[i] * prm[i][j] * g[j]
        h.append(acc)
    return h


def d2d_channel(tx_pos, rx_pos, tx_angles, rx_angles, prm, wavelength):
    f = field_response(rx_pos, *rx_angles, wavelength)
    g = field_response(tx_pos, *tx_angles, wavelength)
    acc = 0j
    for i in range(len(f)):
        for j in range(len(g)):
            acc += f[i] * prm[i][j] * g[j]
    return acc


def inner_gain(h, w):
    """``|h^H w|^2`` with an explicit sum."""
    acc = 0j
    for hi, wi in zip(h, w):
        acc += hi.conjugate() * wi
    return abs(acc) ** 2


def link_rates(h_n, h_f, h_d, h_si, w_f, w_n, p_n, sigma2):
    """Rates ``(r_nf, r_nn, r_mrc, r_ff, sum_rate)`` from the SINR definitions."""
    si = p_n * abs(h_si) ** 2
    s_nf = inner_gain(h_n, w_f) / (inner_gain(h_n, w_n) + si + sigma2)
    s_nn = inner_gain(h_n, w_n) / (si + sigma2)
    s_mrc = inner_gain(h_f, w_f) / (inner_gain(h_f, w_n) + sigma2) + p_n * abs(h_d) ** 2 / sigma2
    r_nf, r_nn, r_mrc = (math.log2(1 + s) for s in (s_nf, s_nn, s_mrc))
    r_ff = min(r_mrc, r_nf)
    return r_nf, r_nn, r_mrc, r_ff, r_nn + r_ff


def soft_update(target, source, tau):
    return [tau * s + (1 - tau) * t for s, t in zip(source, target)]


def mlp_forward(params_by_layer, x, output_activation):
    """Dense ReLU network with plain lists; ``params_by_layer`` holds ``(W, b)`` as nested lists."""
    h = list(x)
    for k, (w, b) in enumerate(params_by_layer):
        z = [b[o] + sum(h[i] * w[i][o] for i in range(len(h))) for o in range(len(b))]
        if k < len(params_by_layer) - 1:
            h = [max(v, 0.0) for v in z]
        elif output_activation == "tanh":
            h = [math.tanh(v) for v in z]
        else:
            h = z
    return h


def noma_split_grid(g_n, g_f, p_t, sigma2, r_th, points=200_001):
    """Best feasible single-antenna NOMA sum rate over a grid of power splits.

    ``a`` is the share of ``p_t`` given to user F. Returns -1 when no split
    meets the rate thresholds.
    """
    best = -1.0
    for k in range(points):
        a = k / (points - 1)
        r_nn = math.log2(1 + g_n * (1 - a) * p_t / sigma2)
        r_nf = math.log2(1 + g_n * a * p_t / (g_n * (1 - a) * p_t + sigma2))
        r_f = math.log2(1 + g_f * a * p_t / (g_f * (1 - a) * p_t + sigma2))
        r_ff = min(r_f, r_nf)
        if min(r_nn, r_nf, r_ff) >= r_th:
            best = max(best, r_nn + r_ff)
    return best
