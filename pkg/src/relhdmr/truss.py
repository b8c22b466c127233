"""Planar truss solver (direct stiffness method) for the implicit benchmark.

Geometry lives in a JSON file so corrected coordinates can be dropped in
without touching code. Element areas, moduli and nodal loads resolve
either to constants or to columns of the physical input vector, which
makes the monitored displacement a deterministic function of one sample.

Solves are vectorized: a batch of samples shares the constant per-element
geometry blocks, so assembling and factorizing a batch of stiffness
matrices is a couple of einsum/solve calls.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EvaluationError, StructureError

DISPLACEMENT_LIMIT = 0.11  # meters


@dataclass(frozen=True)
class SourceSpec:
    """Where a physical quantity comes from: a constant or input column."""

    var: int | None = None  # 0-based column of the input vector
    const: float | None = None
    scale: float = 1.0

    def resolve(self, x: np.ndarray) -> np.ndarray:
        if self.var is not None:
            return self.scale * x[:, self.var]
        return np.full(x.shape[0], self.scale * self.const)


def _parse_source(raw, key: str) -> SourceSpec:
    if isinstance(raw, (int, float)):
        return SourceSpec(const=float(raw))
    if not isinstance(raw, dict):
        raise ConfigError("expected a number or {var|const, scale} object", key=key)
    scale = float(raw.get("scale", 1.0))
    if "var" in raw:
        var = int(raw["var"])
        if var < 1:
            raise ConfigError(f"variable indices are 1-based, got {var}", key=key)
        return SourceSpec(var=var - 1, scale=scale)
    if "const" in raw:
        return SourceSpec(const=float(raw["const"]), scale=scale)
    raise ConfigError("source needs either 'var' or 'const'", key=key)


class TrussModel:
    """Immutable 2-D pin-jointed truss with variable member properties."""

    def __init__(
        self,
        nodes: list[tuple[int, float, float]],
        elements: list[tuple[int, int, int, SourceSpec, SourceSpec]],
        supports: list[tuple[int, bool, bool]],
        loads: list[tuple[int, SourceSpec | None, SourceSpec | None]],
        monitor_node: int,
    ):
        self.node_ids = [int(n[0]) for n in nodes]
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ConfigError("duplicate node ids")
        self.coords = np.array([[float(n[1]), float(n[2])] for n in nodes])
        self._index = {nid: k for k, nid in enumerate(self.node_ids)}
        self.elements = list(elements)
        self.supports = list(supports)
        self.loads = list(loads)
        self.monitor_node = int(monitor_node)
        if self.monitor_node not in self._index:
            raise ConfigError(f"monitor node {monitor_node} not defined")
        self._precompute()

    def _precompute(self) -> None:
        n_nodes = len(self.node_ids)
        ndof = 2 * n_nodes
        self.ndof = ndof

        geom = np.zeros((len(self.elements), ndof, ndof))
        self._lengths = np.empty(len(self.elements))
        self._cos_sin = np.empty((len(self.elements), 2))
        self._el_dofs = []
        for e, (eid, na, nb, _, _) in enumerate(self.elements):
            if na not in self._index or nb not in self._index:
                raise ConfigError(f"element {eid} references unknown node")
            ia, ib = self._index[na], self._index[nb]
            dx, dy = self.coords[ib] - self.coords[ia]
            length = float(np.hypot(dx, dy))
            if length <= 0.0:
                raise ConfigError(f"element {eid} has zero length")
            c, s = dx / length, dy / length
            self._lengths[e] = length
            self._cos_sin[e] = (c, s)
            block = np.array(
                [
                    [c * c, c * s, -c * c, -c * s],
                    [c * s, s * s, -c * s, -s * s],
                    [-c * c, -c * s, c * c, c * s],
                    [-c * s, -s * s, c * s, s * s],
                ]
            ) / length
            dofs = [2 * ia, 2 * ia + 1, 2 * ib, 2 * ib + 1]
            self._el_dofs.append(dofs)
            for p in range(4):
                for q in range(4):
                    geom[e, dofs[p], dofs[q]] += block[p, q]
        self._geom = geom

        fixed = set()
        for node, fix_x, fix_y in self.supports:
            if node not in self._index:
                raise ConfigError(f"support references unknown node {node}")
            base = 2 * self._index[node]
            if fix_x:
                fixed.add(base)
            if fix_y:
                fixed.add(base + 1)
        self.free = np.array(sorted(set(range(ndof)) - fixed), dtype=int)
        if self.free.size == 0:
            raise ConfigError("all degrees of freedom are fixed")

        self._monitor_dof = 2 * self._index[self.monitor_node] + 1  # vertical
        if self._monitor_dof not in set(self.free):
            raise ConfigError("monitor node's vertical displacement is fixed")

    def max_var_index(self) -> int:
        """Largest 0-based input column referenced, or -1 if none."""
        idx = -1
        for _, _, _, area, modulus in self.elements:
            for src in (area, modulus):
                if src.var is not None:
                    idx = max(idx, src.var)
        for _, fx, fy in self.loads:
            for src in (fx, fy):
                if src is not None and src.var is not None:
                    idx = max(idx, src.var)
        return idx

    def displacements(self, x: np.ndarray) -> np.ndarray:
        """Monitor-node vertical displacement (signed, meters) per sample."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = x.shape[0]

        coef = np.empty((n, len(self.elements)))
        for e, (eid, _, _, area, modulus) in enumerate(self.elements):
            a = area.resolve(x)
            mod = modulus.resolve(x)
            if np.any(a <= 0.0) or np.any(mod <= 0.0):
                raise EvaluationError(
                    f"element {eid} resolved to a non-positive area or modulus"
                )
            coef[:, e] = a * mod

        k_full = np.einsum("ne,eij->nij", coef, self._geom)
        forces = np.zeros((n, self.ndof))
        for node, fx, fy in self.loads:
            base = 2 * self._index[node]
            if fx is not None:
                forces[:, base] += fx.resolve(x)
            if fy is not None:
                forces[:, base + 1] += fy.resolve(x)
        if not np.all(np.isfinite(forces)):
            raise EvaluationError("a load resolved to a non-finite value")

        k_ff = k_full[np.ix_(np.arange(n), self.free, self.free)]
        f_f = forces[:, self.free]
        try:
            u_f = np.linalg.solve(k_ff, f_f[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError as exc:
            raise StructureError(f"reduced stiffness matrix is singular: {exc}") from exc

        monitor_pos = int(np.searchsorted(self.free, self._monitor_dof))
        return u_f[:, monitor_pos]

    def solve_detailed(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Full displacement vector and element axial forces for one sample.

        Axial force sign convention: positive in tension.
        """
        x = np.asarray(x, dtype=float).ravel()[None, :]
        coef = np.empty((1, len(self.elements)))
        for e, (_, _, _, area, modulus) in enumerate(self.elements):
            coef[:, e] = area.resolve(x) * modulus.resolve(x)
        k_full = np.einsum("ne,eij->nij", coef, self._geom)[0]
        forces = np.zeros(self.ndof)
        for node, fx, fy in self.loads:
            base = 2 * self._index[node]
            if fx is not None:
                forces[base] += fx.resolve(x)[0]
            if fy is not None:
                forces[base + 1] += fy.resolve(x)[0]
        u = np.zeros(self.ndof)
        try:
            u[self.free] = np.linalg.solve(
                k_full[np.ix_(self.free, self.free)], forces[self.free]
            )
        except np.linalg.LinAlgError as exc:
            raise StructureError(f"reduced stiffness matrix is singular: {exc}") from exc

        axial = np.empty(len(self.elements))
        for e, dofs in enumerate(self._el_dofs):
            c, s = self._cos_sin[e]
            du = (u[dofs[2]] - u[dofs[0]]) * c + (u[dofs[3]] - u[dofs[1]]) * s
            axial[e] = coef[0, e] / self._lengths[e] * du
        return u, axial

    def nodal_loads(self, x: np.ndarray) -> np.ndarray:
        """Assembled global load vector for one sample."""
        x = np.asarray(x, dtype=float).ravel()[None, :]
        forces = np.zeros(self.ndof)
        for node, fx, fy in self.loads:
            base = 2 * self._index[node]
            if fx is not None:
                forces[base] += fx.resolve(x)[0]
            if fy is not None:
                forces[base + 1] += fy.resolve(x)[0]
        return forces


def truss_solve(model: TrussModel, x: np.ndarray) -> float:
    """Vertical displacement at the monitor node for one physical sample."""
    return float(model.displacements(np.asarray(x, dtype=float).ravel()[None, :])[0])


def lsf_truss(model: TrussModel):
    """Limit state ``0.11 - |displacement|`` as a batch evaluator."""

    def evaluator(x: np.ndarray) -> np.ndarray:
        return DISPLACEMENT_LIMIT - np.abs(model.displacements(x))

    return evaluator


def truss_from_dict(raw: dict) -> TrussModel:
    """Build a model from the JSON schema.

    ``{"nodes": [{"id", "x", "y"}], "elements": [{"id", "a", "b",
    "area": {...}, "modulus": {...}}], "supports": [{"node", "fix_x",
    "fix_y"}], "loads": [{"node", "fx"?, "fy"?}], "monitor_node": id}``
    where every area/modulus/load source is ``{"var": k}`` (1-based input
    column, optional ``"scale"``) or ``{"const": v}``.
    """
    try:
        nodes = [(n["id"], n["x"], n["y"]) for n in raw["nodes"]]
        elements = [
            (
                el["id"],
                el["a"],
                el["b"],
                _parse_source(el["area"], f"elements[{k}].area"),
                _parse_source(el["modulus"], f"elements[{k}].modulus"),
            )
            for k, el in enumerate(raw["elements"])
        ]
        supports = [
            (s["node"], bool(s.get("fix_x", False)), bool(s.get("fix_y", False)))
            for s in raw["supports"]
        ]
        loads = [
            (
                ld["node"],
                _parse_source(ld["fx"], f"loads[{k}].fx") if "fx" in ld else None,
                _parse_source(ld["fy"], f"loads[{k}].fy") if "fy" in ld else None,
            )
            for k, ld in enumerate(raw["loads"])
        ]
        monitor = raw["monitor_node"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed truss definition: missing {exc}") from exc
    return TrussModel(nodes, elements, supports, loads, monitor)


def load_truss(path) -> TrussModel:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return truss_from_dict(raw)
