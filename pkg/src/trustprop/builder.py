"""Builds adjacency blocks from an entity store.

Intra-layer similarity is attribute overlap: hospitals share departments,
departments share doctors, doctors share hospitals. Inter-layer belongs-to
weights: a department weighs into a hospital by the number of doctors it has
there, and a doctor weighs into a department by qualification score. Explicit
per-pair weights on the department record override the computed defaults.
"""
from __future__ import annotations

from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import NegativePriorityError, UnknownLayerError, UnsupportedLayerPairError
from .ingest import EntityStore
from .model import (
    INTER_LAYER_PAIRS,
    LAYERS,
    AdjacencyBlock,
    LayerGraph,
    LayerId,
    MultiLayerNetwork,
    coerce_layer,
)


class SimilarityMode(Enum):
    """How two attribute sets score against each other."""

    INTERSECTION_COUNT = "intersection_count"
    JACCARD = "jaccard"


def intra_weight(attrs_a: Iterable[str], attrs_b: Iterable[str],
                 mode: SimilarityMode = SimilarityMode.INTERSECTION_COUNT) -> float:
    """Similarity between two entities' attribute sets."""
    a, b = set(attrs_a), set(attrs_b)
    shared = len(a & b)
    if mode is SimilarityMode.INTERSECTION_COUNT:
        return float(shared)
    if mode is SimilarityMode.JACCARD:
        union = len(a | b)
        return shared / union if union else 0.0
    raise UnknownLayerError(f"unknown similarity mode {mode!r}")


def layer_attributes(store: EntityStore, layer: LayerId) -> tuple[tuple[str, ...], list[frozenset[str]]]:
    """Node order (lexicographic) and per-node attribute sets for one layer."""
    layer = coerce_layer(layer)
    if layer is LayerId.HOSPITAL:
        ids = tuple(sorted(store.hospitals))
        return ids, [store.hospitals[h].department_ids for h in ids]
    if layer is LayerId.DEPARTMENT:
        ids = tuple(sorted(store.departments))
        return ids, [store.departments[d].doctor_ids for d in ids]
    if layer is LayerId.DOCTOR:
        ids = tuple(sorted(store.doctors))
        return ids, [store.doctors[p].hospital_ids for p in ids]
    raise UnknownLayerError(f"unknown layer {layer!r}")


def build_intra_layer(store: EntityStore, layer: LayerId,
                      mode: SimilarityMode = SimilarityMode.INTERSECTION_COUNT) -> AdjacencyBlock:
    """Square similarity block for one layer; symmetric with a zero diagonal."""
    ids, attrs = layer_attributes(store, layer)
    n = len(ids)
    weights = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            w = intra_weight(attrs[i], attrs[j], mode)
            weights[i, j] = weights[j, i] = w
    return AdjacencyBlock(rows=coerce_layer(layer), cols=coerce_layer(layer),
                          row_ids=ids, col_ids=ids, weights=weights)


def equipment_adjusted_weight(doctor_count: float, equipment_priorities: Sequence[float]) -> float:
    """Belongs-to weight for a hospital/department cell with equipment taken
    into account: the doctor count plus the sum of the priority scores."""
    if doctor_count < 0:
        raise NegativePriorityError(f"doctor count must be non-negative, got {doctor_count}")
    total = 0.0
    for p in equipment_priorities:
        if p < 0:
            raise NegativePriorityError(f"equipment priority must be non-negative, got {p}")
        total += p
    return float(doctor_count) + total


def _co_affiliation_counts(store: EntityStore, hospital_ids, department_ids) -> np.ndarray:
    """counts[h, d] = number of doctors affiliated with both h and d."""
    h_index = {h: i for i, h in enumerate(hospital_ids)}
    d_index = {d: j for j, d in enumerate(department_ids)}
    counts = np.zeros((len(hospital_ids), len(department_ids)))
    for doc in store.doctors.values():
        hs = [h_index[h] for h in doc.hospital_ids if h in h_index]
        ds = [d_index[d] for d in doc.department_ids if d in d_index]
        for i in hs:
            for j in ds:
                counts[i, j] += 1
    return counts


def build_inter_layer(
    store: EntityStore,
    rows: LayerId,
    cols: LayerId,
    equipment_priorities: Mapping[tuple[str, str], Sequence[float]] | None = None,
) -> AdjacencyBlock:
    """Belongs-to block for (hospital, department) or (department, doctor).

    A hospital x department cell is nonzero only where membership is declared
    (on either record). Declared cells default to the count of doctors
    affiliated with both sides, or 1 when no such doctor exists, and the
    department's explicit per-hospital weight takes precedence. Department x
    doctor cells are the member's qualification score, again with the
    department's explicit per-doctor weight winning. Any other layer pair has
    no belongs-to relation.
    """
    rows, cols = coerce_layer(rows), coerce_layer(cols)
    if (rows, cols) not in INTER_LAYER_PAIRS:
        raise UnsupportedLayerPairError(
            f"no belongs-to relation for ({rows.value}, {cols.value}); "
            f"supported: hospital x department, department x doctor"
        )

    if (rows, cols) == (LayerId.HOSPITAL, LayerId.DEPARTMENT):
        h_ids = tuple(sorted(store.hospitals))
        d_ids = tuple(sorted(store.departments))
        counts = _co_affiliation_counts(store, h_ids, d_ids)
        weights = np.zeros_like(counts)
        for i, h in enumerate(h_ids):
            for j, d in enumerate(d_ids):
                dept = store.departments[d]
                member = d in store.hospitals[h].department_ids or h in dept.hospital_ids
                if not member:
                    continue
                if h in dept.hospital_weights:
                    weights[i, j] = dept.hospital_weights[h]
                else:
                    weights[i, j] = counts[i, j] if counts[i, j] > 0 else 1.0
        if equipment_priorities:
            for (h, d), priorities in equipment_priorities.items():
                if h in h_ids and d in d_ids:
                    i, j = h_ids.index(h), d_ids.index(d)
                    weights[i, j] = equipment_adjusted_weight(weights[i, j], priorities)
        return AdjacencyBlock(rows=rows, cols=cols, row_ids=h_ids, col_ids=d_ids, weights=weights)

    d_ids = tuple(sorted(store.departments))
    p_ids = tuple(sorted(store.doctors))
    p_index = {p: j for j, p in enumerate(p_ids)}
    weights = np.zeros((len(d_ids), len(p_ids)))
    for i, d in enumerate(d_ids):
        dept = store.departments[d]
        for p in dept.doctor_ids:
            j = p_index.get(p)
            if j is None:
                continue
            if p in dept.doctor_weights:
                weights[i, j] = dept.doctor_weights[p]
            else:
                score = store.doctors[p].qualification_score
                weights[i, j] = score if score is not None else 0.0
    return AdjacencyBlock(rows=rows, cols=cols, row_ids=d_ids, col_ids=p_ids, weights=weights)


def build_network(
    store: EntityStore,
    mode: SimilarityMode = SimilarityMode.INTERSECTION_COUNT,
    equipment_priorities: Mapping[tuple[str, str], Sequence[float]] | None = None,
) -> MultiLayerNetwork:
    """Assemble the full three-layer network from a (cleaned) store."""
    graphs = {}
    intra = {}
    for layer in LAYERS:
        ids, attrs = layer_attributes(store, layer)
        graphs[layer] = LayerGraph(layer=layer, node_ids=ids, attributes=tuple(attrs))
        intra[layer] = build_intra_layer(store, layer, mode)
    inter = {
        (LayerId.HOSPITAL, LayerId.DEPARTMENT): build_inter_layer(
            store, LayerId.HOSPITAL, LayerId.DEPARTMENT, equipment_priorities),
        (LayerId.DEPARTMENT, LayerId.DOCTOR): build_inter_layer(
            store, LayerId.DEPARTMENT, LayerId.DOCTOR),
    }
    provenance = dict(store.provenance)
    provenance["built"] = store.counts()
    provenance["similarity_mode"] = mode.value
    return MultiLayerNetwork(graphs=graphs, intra=intra, inter=inter, provenance=provenance)
