"""Circuit interchange objects: gates, timesteps, blocks, JSON round trip."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

GATE_ARITY = {
    "prep_0": 1,
    "prep_plus": 1,
    "meas_X": 1,
    "meas_Z": 1,
    "I": 1,
    "X": 1,
    "Z": 1,
    "H": 1,
    "CNOT": 2,
    "CZ": 2,
    "CCZ": 3,
}


@dataclass(frozen=True)
class GateSpec:
    """One located circuit component.

    ``kind`` is one of prep_0, prep_plus, meas_X, meas_Z, I, X, Z, H, CNOT,
    CZ, CCZ or CkZ; ``qubits`` are ordered global indices; ``tag`` is an
    optional classical label for feed-forward.
    """

    kind: str
    qubits: tuple
    tag: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"duplicate qubits in {self.kind} gate: {self.qubits}")
        if self.kind == "CkZ":
            if len(self.qubits) < 2:
                raise ValueError("CkZ needs at least 2 qubits")
        elif self.kind not in GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        elif len(self.qubits) != GATE_ARITY[self.kind]:
            raise ValueError(
                f"{self.kind} expects {GATE_ARITY[self.kind]} qubits, got {self.qubits}"
            )

    @property
    def is_unitary(self) -> bool:
        return self.kind not in ("prep_0", "prep_plus", "meas_X", "meas_Z")

    @property
    def is_multiqubit(self) -> bool:
        return len(self.qubits) > 1


@dataclass
class Circuit:
    """Timestep-ordered list of gate sets over named codeblocks.

    ``block_map`` assigns each named block a half-open qubit range
    ``(start, stop)``.  ``markers`` label segment boundaries (e.g. LEC/Ga/TEC)
    as ``name -> timestep index`` meaning the segment ends before that step.
    ``piece_boundaries`` are timestep indices where intermediate
    error-correction is inserted between circuit pieces.
    """

    n_qubits: int
    timesteps: list = field(default_factory=list)  # list[list[GateSpec]]
    block_map: dict = field(default_factory=dict)  # name -> (start, stop)
    markers: dict = field(default_factory=dict)
    piece_boundaries: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add_step(self, gates) -> int:
        gates = list(gates)
        seen = set()
        for g in gates:
            for q in g.qubits:
                if not (0 <= q < self.n_qubits):
                    raise ValueError(f"qubit {q} outside circuit of {self.n_qubits}")
                if q in seen:
                    raise ValueError(f"overlapping supports in one timestep at qubit {q}")
                seen.add(q)
        self.timesteps.append(gates)
        return len(self.timesteps) - 1

    def gates(self):
        for t, step in enumerate(self.timesteps):
            for i, g in enumerate(step):
                yield (t, i, g)

    @property
    def depth(self) -> int:
        return len(self.timesteps)

    def gate_count(self, kinds=None) -> int:
        return sum(
            1
            for _, _, g in self.gates()
            if kinds is None or g.kind in kinds
        )

    def block_of(self, qubit: int) -> str:
        for name, (a, b) in self.block_map.items():
            if a <= qubit < b:
                return name
        raise KeyError(f"qubit {qubit} lies in no block")

    def concat(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits or other.block_map != self.block_map:
            raise ValueError("can only concatenate circuits over the same layout")
        out = Circuit(self.n_qubits, [list(s) for s in self.timesteps], dict(self.block_map))
        out.markers = dict(self.markers)
        out.meta = {**self.meta, **other.meta}
        out.piece_boundaries = list(self.piece_boundaries)
        off = len(out.timesteps)
        for s in other.timesteps:
            out.timesteps.append(list(s))
        for name, t in other.markers.items():
            out.markers[name] = t + off
        out.piece_boundaries += [t + off for t in other.piece_boundaries]
        return out

    # -- JSON interchange ---------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "n_qubits": self.n_qubits,
            "blocks": {k: list(v) for k, v in self.block_map.items()},
            "timesteps": [
                [
                    {"kind": g.kind, "qubits": list(g.qubits), "tag": g.tag}
                    for g in step
                ]
                for step in self.timesteps
            ],
            "markers": self.markers,
            "piece_boundaries": self.piece_boundaries,
            "meta": self.meta,
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        doc = json.loads(text)
        c = cls(doc["n_qubits"])
        c.block_map = {k: tuple(v) for k, v in doc.get("blocks", {}).items()}
        for step in doc["timesteps"]:
            c.add_step(
                GateSpec(g["kind"], tuple(g["qubits"]), g.get("tag")) for g in step
            )
        c.markers = {k: int(v) for k, v in doc.get("markers", {}).items()}
        c.piece_boundaries = [int(t) for t in doc.get("piece_boundaries", [])]
        c.meta = doc.get("meta", {})
        return c
