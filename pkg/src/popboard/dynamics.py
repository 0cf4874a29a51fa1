"""Population-rate network engine.

Every node is a pair of excitatory/inhibitory sub-populations evolving under
first-order rate dynamics with a saturating response function, integrated
synchronously with a fixed explicit-Euler step. Excitatory links transmit the
source's excitatory rate; inhibitory links transmit the source's inhibitory
rate; either kind of afferent input is delivered to both sub-populations of
the target. A slow adaptation variable (optional per population) subtracts
from the excitatory input, giving long-lived memory loops a gentle,
configurable decline.

The engine is deterministic: no randomness anywhere, fixed evaluation order,
pure numpy arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.special import expit

from .config import PopulationParams

__all__ = ["Network", "StateRecorder", "step_response_reference"]


@dataclass
class _LinkBatch:
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    inhibitory: bool


class Network:
    """A fixed-step rate network of excitatory/inhibitory population pairs.

    Parameters
    ----------
    params:
        Shared rate-model constants (time constants, response function,
        within-pair couplings, step size).

    Notes
    -----
    Build phase: :meth:`add_populations` and :meth:`connect` accumulate the
    graph. :meth:`freeze` compiles the link lists into sparse matrices; after
    freezing, topology is immutable but state can be stepped and reset.
    """

    def __init__(self, params: PopulationParams | None = None):
        self.params = params or PopulationParams()
        if not self.params.tau_i < self.params.tau_e:
            raise ValueError("inhibitory time constant must be the faster one")
        self.n = 0
        self._adapt_chunks: list[np.ndarray] = []
        self._links: list[_LinkBatch] = []
        self._frozen = False
        self._adapt_overrides = 0
        # state arrays exist after freeze()
        self.e = np.empty(0)
        self.i = np.empty(0)
        self.a = np.empty(0)

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------
    def add_populations(self, count: int, adapt: float = 0.0) -> int:
        """Append ``count`` populations; return the index of the first.

        ``adapt`` sets the adaptation strength for the whole batch. Non-zero
        values are counted as logged overrides (see :attr:`adapt_overrides`).
        """
        if self._frozen:
            raise RuntimeError("network is frozen")
        if count <= 0:
            raise ValueError("count must be positive")
        first = self.n
        self.n += count
        self._adapt_chunks.append(np.full(count, float(adapt)))
        if adapt != 0.0:
            self._adapt_overrides += count
        return first

    def connect(self, src, dst, weight, inhibitory: bool = False) -> None:
        """Add links src -> dst (arrays broadcast together)."""
        if self._frozen:
            raise RuntimeError("network is frozen")
        src = np.atleast_1d(np.asarray(src, dtype=np.int64))
        dst = np.atleast_1d(np.asarray(dst, dtype=np.int64))
        weight = np.asarray(weight, dtype=np.float64)
        src, dst, weight = np.broadcast_arrays(src, dst, weight)
        if src.size == 0:
            return
        if src.min() < 0 or src.max() >= self.n or dst.min() < 0 or dst.max() >= self.n:
            raise IndexError("link endpoint out of range")
        if np.any(src == dst):
            raise ValueError("self-links are not allowed")
        self._links.append(
            _LinkBatch(src.ravel().copy(), dst.ravel().copy(),
                       weight.ravel().astype(np.float64).copy(), bool(inhibitory))
        )

    def freeze(self) -> None:
        """Compile links into sparse matrices and allocate state."""
        if self._frozen:
            return
        self.adapt_strength = (
            np.concatenate(self._adapt_chunks) if self._adapt_chunks else np.empty(0)
        )
        self._adapt_chunks = []
        self._w_exc = self._compile(False)
        self._w_inh = self._compile(True)
        self._links = []
        self._has_adapt = bool(np.any(self.adapt_strength != 0.0))
        self._frozen = True
        self.reset_state()

    def _compile(self, inhibitory: bool) -> sparse.csr_matrix:
        batches = [b for b in self._links if b.inhibitory == inhibitory]
        if batches:
            src = np.concatenate([b.src for b in batches])
            dst = np.concatenate([b.dst for b in batches])
            w = np.concatenate([b.weight for b in batches])
        else:
            src = dst = np.empty(0, dtype=np.int64)
            w = np.empty(0)
        mat = sparse.csr_matrix((w, (dst, src)), shape=(self.n, self.n))
        mat.sum_duplicates()
        return mat

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def link_count(self) -> int:
        if self._frozen:
            return int(self._w_exc.nnz + self._w_inh.nnz)
        return int(sum(b.src.size for b in self._links))

    @property
    def adapt_overrides(self) -> int:
        """Number of populations whose adaptation was explicitly overridden."""
        return self._adapt_overrides

    # ------------------------------------------------------------------
    # simulation
    # ------------------------------------------------------------------
    def reset_state(self) -> None:
        """Return every population to the undriven resting equilibrium."""
        if not self._frozen:
            raise RuntimeError("freeze() before simulating")
        p = self.params
        rest = p.max_rate * expit(-p.gain * p.thresh)
        self.e = np.full(self.n, rest)
        self.i = np.full(self.n, rest)
        self.a = self.adapt_strength * rest  # adaptation equilibrium c_a*E
        self._ke = p.dt_ms / p.tau_e
        self._ki = p.dt_ms / p.tau_i
        self._ka = p.dt_ms / p.tau_adapt
        self.t_ms = 0.0

    def step(self, ext: np.ndarray) -> None:
        """Advance one integration step with external input ``ext``."""
        p = self.params
        e, i = self.e, self.i
        net = self._w_exc @ e
        net -= self._w_inh @ i
        net += ext
        in_e = net
        in_i = net if (p.w_ei == 0.0 and p.w_ii == 0.0) else net.copy()
        if p.w_ee:
            in_e = in_e + p.w_ee * e
        if p.w_ie:
            in_e = in_e - p.w_ie * i
        if self._has_adapt:
            in_e = in_e - self.a
        if p.w_ei:
            in_i = in_i + p.w_ei * e
        if p.w_ii:
            in_i = in_i - p.w_ii * i
        fe = p.max_rate * expit(p.gain * (in_e - p.thresh))
        fi = p.max_rate * expit(p.gain * (in_i - p.thresh))
        e_new = e + self._ke * (fe - e)
        i_new = i + self._ki * (fi - i)
        np.clip(e_new, 0.0, p.max_rate, out=e_new)
        np.clip(i_new, 0.0, p.max_rate, out=i_new)
        if self._has_adapt:
            self.a += self._ka * (self.adapt_strength * e - self.a)
        self.e = e_new
        self.i = i_new
        self.t_ms += p.dt_ms

    def run(self, duration_ms: float, ext: np.ndarray,
            recorder: "StateRecorder | None" = None) -> None:
        """Step for ``duration_ms`` with constant external input."""
        steps = int(round(duration_ms / self.params.dt_ms))
        for _ in range(steps):
            self.step(ext)
            if recorder is not None:
                recorder.snap(self)


class StateRecorder:
    """Records excitatory rates of selected populations at every step."""

    def __init__(self, indices):
        self.indices = np.asarray(indices, dtype=np.int64)
        self.times: list[float] = []
        self.rows: list[np.ndarray] = []

    def snap(self, net: Network) -> None:
        self.times.append(net.t_ms)
        self.rows.append(net.e[self.indices].copy())

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.times), np.asarray(self.rows)


def step_response_reference(build, drive, duration_ms: float,
                            fine_dt: float = 0.1):
    """Integrate the same model at a fine step, as a numerical reference.

    Parameters
    ----------
    build:
        Callable ``build(params) -> (Network, record_indices)`` constructing
        the test network (unfrozen networks are frozen here).
    drive:
        Callable ``drive(t_ms) -> ext array`` giving external input.
    duration_ms:
        Total simulated time.
    fine_dt:
        Reference integration step (ms).

    Returns
    -------
    (times, coarse, fine): sample times at the coarse step and the recorded
    excitatory rates of ``record_indices`` under both integrations, sampled
    at the coarse step boundaries.
    """
    coarse_net, idx = build(PopulationParams())
    coarse_net.freeze()
    fine_params = PopulationParams(dt_ms=fine_dt)
    fine_net, idx2 = build(fine_params)
    fine_net.freeze()
    if list(np.atleast_1d(idx)) != list(np.atleast_1d(idx2)):
        raise ValueError("build() must be deterministic")

    ratio = int(round(coarse_net.params.dt_ms / fine_dt))
    times, coarse_rows, fine_rows = [], [], []
    steps = int(round(duration_ms / coarse_net.params.dt_ms))
    for k in range(steps):
        ext = drive(k * coarse_net.params.dt_ms)
        coarse_net.step(ext)
        for _ in range(ratio):
            fine_net.step(ext)
        times.append(coarse_net.t_ms)
        coarse_rows.append(coarse_net.e[idx].copy())
        fine_rows.append(fine_net.e[idx].copy())
    return np.asarray(times), np.asarray(coarse_rows), np.asarray(fine_rows)
