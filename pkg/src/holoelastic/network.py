"""Holomorphic MLPs, variance-matched initialization, and the shallow
Taylor-matching approximator.

A network maps one complex input through complex fully-connected layers with
an entire activation between them; the final layer is affine.  Evaluating it
on a seeded jet yields the value and its first two z-derivatives in a single
pass.  In standard mode a branch pair returns (phi, phi', phi'', psi, psi');
in stress-only mode the branch outputs are read as phi' and psi' directly.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from math import isqrt
from typing import Optional, Sequence

import numpy as np

from .elasticity import KMState
from .jets import ActivationKind, NonFiniteError, act_derivs, activate_jets, affine_jets, seed_jets
from .rng import Rng

# Admissible ends of the init-variance scale: 1 stabilizes first-derivative
# backprop variance, (sqrt(5)-1)/2 second, sqrt(2)-1 third.  Standard mode
# (loss touches third derivatives of the pre-activations via phi'') admits
# [BETA3, BETA1]; stress-only mode admits [BETA2, BETA1].
BETA1 = 1.0
BETA2 = (math.sqrt(5.0) - 1.0) / 2.0
BETA3 = math.sqrt(2.0) - 1.0


class Mode(Enum):
    STANDARD = "standard"
    STRESS_ONLY = "stress_only"


@dataclass
class LayerParams:
    weights: np.ndarray  # complex128, (n_out, n_in)
    bias: np.ndarray  # complex128, (n_out,)


@dataclass
class HoloMLP:
    layers: list[LayerParams]
    activation: ActivationKind = ActivationKind.EXP
    mode: Mode = Mode.STANDARD

    def __post_init__(self):
        shapes = [l.weights.shape for l in self.layers]
        if not shapes or shapes[0][1] != 1 or shapes[-1][0] != 1:
            raise ValueError(f"network must map 1 -> 1, got layer shapes {shapes}")
        for a, b in zip(shapes, shapes[1:]):
            if b[1] != a[0]:
                raise ValueError(f"layer shapes do not chain: {shapes}")

    @property
    def widths(self) -> list[int]:
        return [1] + [l.weights.shape[0] for l in self.layers]

    def n_params(self) -> int:
        return sum(l.weights.size + l.bias.size for l in self.layers)


@dataclass
class BranchPair:
    """Two independent branches, one per potential."""

    phi: HoloMLP
    psi: HoloMLP

    def __post_init__(self):
        if self.phi.mode is not self.psi.mode:
            raise ValueError("both branches must share the mode")

    @property
    def mode(self) -> Mode:
        return self.phi.mode


def build_mlp(
    hidden: Sequence[int],
    activation: ActivationKind = ActivationKind.EXP,
    mode: Mode = Mode.STANDARD,
) -> HoloMLP:
    """Zero-initialized network with the given hidden widths."""
    widths = [1] + list(hidden) + [1]
    layers = [
        LayerParams(
            np.zeros((no, ni), dtype=np.complex128),
            np.zeros(no, dtype=np.complex128),
        )
        for ni, no in zip(widths, widths[1:])
    ]
    return HoloMLP(layers, activation, mode)


def forward_jets(net: HoloMLP, z: np.ndarray) -> np.ndarray:
    """Evaluate the network on seeded jets; returns (3, B) value/d1/d2."""
    jets = seed_jets(z)
    last = len(net.layers) - 1
    for i, layer in enumerate(net.layers):
        jets = affine_jets(jets, layer.weights, layer.bias)
        if i != last:
            jets, _ = activate_jets(net.activation, jets, context=f"layer {i + 1}")
    return jets[:, :, 0]


def mlp_forward(net_phi: HoloMLP, net_psi: HoloMLP, z) -> KMState:
    """Run both branches at z and bundle the potentials.

    Standard mode reads (phi, phi', phi'') and (psi, psi') off the jets.
    Stress-only mode treats the branch outputs as phi' and psi'; phi'' is the
    first jet derivative of the phi'-branch and phi/psi are absent.
    """
    if net_phi.mode is not net_psi.mode:
        raise ValueError("branches disagree on mode")
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    jp = forward_jets(net_phi, z.ravel())
    jq = forward_jets(net_psi, z.ravel())
    if net_phi.mode is Mode.STANDARD:
        state = KMState(phi=jp[0], dphi=jp[1], ddphi=jp[2], psi=jq[0], dpsi=jq[1])
    else:
        state = KMState(dphi=jp[0], ddphi=jp[1], dpsi=jq[0])
    if scalar:
        for name in ("phi", "dphi", "ddphi", "psi", "dpsi"):
            v = getattr(state, name)
            if v is not None:
                setattr(state, name, complex(v[0]))
    return state


# --- parameter flattening -----------------------------------------------------
#
# Optimizers and finite differences see every complex parameter as a pair of
# reals.  Ordering is pair-major, phi branch before psi, layers in order,
# weights before bias, re/im interleaved (the complex128 memory layout).


def flatten_spec(pairs: Sequence[BranchPair]) -> list[tuple[tuple, tuple]]:
    """[(key, shape)] for every parameter tensor, in flattening order."""
    out = []
    for pi, pair in enumerate(pairs):
        for branch, net in (("phi", pair.phi), ("psi", pair.psi)):
            for li, layer in enumerate(net.layers):
                out.append(((pi, branch, li, "W"), layer.weights.shape))
                out.append(((pi, branch, li, "b"), layer.bias.shape))
    return out


def _param_arrays(pairs: Sequence[BranchPair]):
    for pair in pairs:
        for net in (pair.phi, pair.psi):
            for layer in net.layers:
                yield layer.weights
                yield layer.bias


def flatten_params(pairs: Sequence[BranchPair]) -> np.ndarray:
    parts = [a.view(np.float64).ravel() for a in _param_arrays(pairs)]
    return np.concatenate(parts) if parts else np.zeros(0)


def write_params(pairs: Sequence[BranchPair], vec: np.ndarray) -> None:
    """Scatter a flat real vector back into the network arrays, in place."""
    pos = 0
    for a in _param_arrays(pairs):
        n = 2 * a.size
        a.view(np.float64).ravel()[:] = vec[pos : pos + n]
        pos += n
    if pos != vec.size:
        raise ValueError(f"parameter vector has {vec.size} entries, networks need {pos}")


# --- initialization ---------------------------------------------------------


@dataclass
class InitConfig:
    """Probe-calibrated Gaussian initialization.

    Layers below m_e scale the weight variance by the sample mean of
    |x_{l-1}|^2 over a propagated probe of boundary points; from m_e on, the
    activations are assumed Gaussian, which gives the closed-form scale
    e^beta for the exponential activation.  Biases start at zero.
    """

    probe: np.ndarray  # complex boundary coordinates
    beta: float = 0.5
    m_e: int = 3
    seed: int = 0

    def __post_init__(self):
        self.probe = np.asarray(self.probe, dtype=np.complex128).ravel()
        if self.probe.size == 0:
            raise ValueError("init probe must be nonempty")
        if self.m_e < 2:
            raise ValueError(f"m_e must be >= 2, got {self.m_e}")


def admissible_beta(mode: Mode) -> tuple[float, float]:
    return (BETA2, BETA1) if mode is Mode.STRESS_ONLY else (BETA3, BETA1)


def init_weights(net: HoloMLP, cfg: InitConfig, rng: Optional[Rng] = None) -> HoloMLP:
    """Initialize `net` in place; returns it for convenience."""
    if cfg.beta <= 0.0:
        raise ValueError(f"beta must be positive, got {cfg.beta}")
    lo, hi = admissible_beta(net.mode)
    if not (lo <= cfg.beta <= hi):
        warnings.warn(
            f"beta={cfg.beta:.4g} outside the admissible range [{lo:.4g}, {hi:.4g}] "
            f"for {net.mode.value} mode; expect unstable gradients",
            stacklevel=2,
        )
    if rng is None:
        rng = Rng(cfg.seed)
    x = cfg.probe.reshape(-1, 1)
    L = len(net.layers)
    for l, layer in enumerate(net.layers, start=1):
        no, ni = layer.weights.shape
        if l < cfg.m_e:
            m_l = float(np.mean(np.abs(x) ** 2))
            if not math.isfinite(m_l) or m_l <= 0.0:
                raise NonFiniteError(f"probe propagation degenerate at layer {l}: m_l={m_l}")
            var = cfg.beta / (2.0 * ni * m_l)
        else:
            var = cfg.beta / (2.0 * ni * math.exp(cfg.beta))
        layer.weights[:] = rng.complex_normal(no * ni, std=math.sqrt(var)).reshape(no, ni)
        layer.bias[:] = 0.0
        if l < cfg.m_e and l < L:
            y = x @ layer.weights.T
            x = act_derivs(net.activation, y, order=0)[0]
            if not np.isfinite(x).all():
                raise NonFiniteError(f"probe propagation overflowed after layer {l}")
    return net


# --- checkpoints ------------------------------------------------------------


def _complex_to_pairs(a: np.ndarray) -> list:
    return [[float(v.real), float(v.imag)] for v in a.ravel()]


def _pairs_to_complex(pairs, shape) -> np.ndarray:
    flat = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    return flat.reshape(shape)


def checkpoint_save(path: str, pairs: Sequence[BranchPair]) -> None:
    """JSON checkpoint with exact [re, im] weight round-trip."""
    doc = {"pairs": []}
    for pair in pairs:
        entry = {}
        for name, net in (("phi", pair.phi), ("psi", pair.psi)):
            entry[name] = {
                "activation": net.activation.value,
                "mode": net.mode.value,
                "layers": [
                    {
                        "shape": list(l.weights.shape),
                        "weights": _complex_to_pairs(l.weights),
                        "bias": _complex_to_pairs(l.bias),
                    }
                    for l in net.layers
                ],
            }
        doc["pairs"].append(entry)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)


def checkpoint_load(path: str) -> list[BranchPair]:
    with open(path) as fh:
        doc = json.load(fh)
    pairs = []
    for entry in doc["pairs"]:
        nets = {}
        for name in ("phi", "psi"):
            spec = entry[name]
            layers = [
                LayerParams(
                    _pairs_to_complex(l["weights"], tuple(l["shape"])),
                    _pairs_to_complex(l["bias"], (l["shape"][0],)),
                )
                for l in spec["layers"]
            ]
            nets[name] = HoloMLP(layers, ActivationKind(spec["activation"]), Mode(spec["mode"]))
        pairs.append(BranchPair(nets["phi"], nets["psi"]))
    return pairs


# --- shallow Taylor-matching approximator ------------------------------------


def _round_sqrt(f: Fraction) -> float:
    if f <= 0:
        return 0.0
    return isqrt((f.numerator << 220) // f.denominator) / float(1 << 110)


def _ulp_walk(x: float, k: int) -> float:
    for _ in range(abs(k)):
        x = np.nextafter(x, math.copysign(math.inf, x) if k > 0 else -math.copysign(math.inf, x))
    return x


def unit_roots(n: int) -> np.ndarray:
    """The n-th roots of unity with |b_j| == 1 exact under np.abs.

    np.exp puts roots within one ulp of the unit circle but np.abs does not
    always round their modulus to 1.0; the smaller component is therefore
    rebuilt from the larger one with exact rational arithmetic and nudged by
    ulps until the modulus is exactly 1.
    """
    out = np.empty(n, dtype=np.complex128)
    for j in range(n):
        theta = 2.0 * math.pi * j / n
        c, s = float(np.cos(theta)), float(np.sin(theta))
        v = complex(c, s)
        if np.abs(np.complex128(v)) == 1.0:
            out[j] = v
            continue
        swap = abs(s) > abs(c)
        big0, small0 = (s, c) if swap else (c, s)
        sgn = math.copysign(1.0, small0)
        found = None
        for kb in (0, -1, 1, -2, 2):
            big = _ulp_walk(big0, kb)
            y0 = _round_sqrt(Fraction(1) - Fraction(big) * Fraction(big))
            for ks in (0, -1, 1, -2, 2, -3, 3, -4, 4):
                y = sgn * _ulp_walk(y0, ks)
                cand = complex(y, big) if swap else complex(big, y)
                if np.abs(np.complex128(cand)) == 1.0:
                    found = cand
                    break
            if found is not None:
                break
        if found is None:
            raise ArithmeticError(f"no exact unit root near angle {theta}")
        out[j] = found
    return out


@dataclass
class ShallowApprox:
    """Single-hidden-layer net  g~(z) = sum_j a_j * act(b_j z + c_j).

    Nets built by constructive_shallow also carry the matched Taylor data
    (taylor, z0); see shallow_eval for why.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    activation: ActivationKind = ActivationKind.EXP
    taylor: Optional[np.ndarray] = None
    z0: complex = 0.0


def constructive_shallow(
    taylor: Sequence[complex], z0: complex = 0.0, xi: complex = 0.0, n: Optional[int] = None
) -> ShallowApprox:
    """Shallow exponential net matching the first n Taylor coefficients at z0.

    Frequencies b_j are the n-th roots of unity and shifts c_j = xi - b_j z0,
    so matching the coefficients reduces to a Vandermonde system at the roots
    of unity, i.e. an inverse DFT of s_k = taylor_k * k! * e^-xi.  Any xi
    works for the exponential activation (its derivatives never vanish);
    xi = 0 is the default.
    """
    if n is None:
        n = len(taylor)
    if n < 1:
        raise ValueError(f"need at least one unit, got n={n}")
    if n > len(taylor):
        raise ValueError(f"n={n} exceeds the {len(taylor)} supplied coefficients")
    g = np.asarray(taylor[:n], dtype=np.complex128)
    k = np.arange(n)
    s = g * np.array([math.factorial(int(j)) for j in k], dtype=float) * np.exp(-complex(xi))
    # V[k, j] = w^{jk} is the forward DFT matrix, so V^(-1) s is fft(s)/n
    a = np.fft.fft(s) / n
    b = unit_roots(n)
    c = complex(xi) - b * complex(z0)
    return ShallowApprox(a, b, c, ActivationKind.EXP, g.copy(), complex(z0))


def vandermonde_solve(taylor: Sequence[complex], b: np.ndarray, xi: complex = 0.0) -> np.ndarray:
    """Dense-solve cross-check of the inverse-DFT coefficient path."""
    n = len(b)
    g = np.asarray(taylor[:n], dtype=np.complex128)
    k = np.arange(n)
    s = g * np.array([math.factorial(int(j)) for j in k], dtype=float) * np.exp(-complex(xi))
    V = np.vander(b, n, increasing=True).T
    return np.linalg.solve(V, s)


def shallow_eval_direct(s: ShallowApprox, z) -> np.ndarray:
    """Raw coefficient sum sum_j a_j act(b_j z + c_j)."""
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    arg = s.b[:, None] * z.ravel()[None, :] + s.c[:, None]
    vals = act_derivs(s.activation, arg, order=0)[0]
    out = (s.a[:, None] * vals).sum(axis=0)
    return complex(out[0]) if scalar else out.reshape(z.shape)


def shallow_eval(s: ShallowApprox, z) -> np.ndarray:
    """Value of the shallow net at z.

    For Taylor-matched exponential nets the raw sum cancels catastrophically
    once ~20 units are used (|a_j| grows like k!/r^k while the value stays
    O(1)), so those nets are evaluated through the exact identity

        sum_j a_j e^(b_j z + c_j) = sum_k g_k k! sum_l w^(k+ln) / (k+ln)!

    with w = z - z0, whose terms never cancel on bounded w.  Hand-built nets
    fall back to the raw sum.
    """
    if s.taylor is None or s.activation is not ActivationKind.EXP:
        return shallow_eval_direct(s, z)
    z = np.asarray(z, dtype=np.complex128)
    scalar = z.ndim == 0
    w = z.ravel() - s.z0
    n = s.b.size
    out = np.zeros_like(w)
    for k in range(n - 1, -1, -1):
        coef = s.taylor[k] * math.factorial(k)
        m = k
        fact = float(math.factorial(k))
        wp = w**k
        wn = w**n
        while True:
            term = coef * wp / fact
            out += term
            if np.max(np.abs(term)) < 1e-300 or m > k + 8 * n + 64:
                break
            m += n
            fact *= math.prod(range(m - n + 1, m + 1))
            wp = wp * wn
    return complex(out[0]) if scalar else out.reshape(z.shape)
