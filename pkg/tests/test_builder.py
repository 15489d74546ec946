from __future__ import annotations

import numpy as np
import pytest

from trustprop import LayerId, build_inter_layer, build_intra_layer, build_network
from trustprop.builder import SimilarityMode, equipment_adjusted_weight, intra_weight
from trustprop.errors import NegativePriorityError, UnsupportedLayerPairError
from trustprop.ingest import DepartmentRecord, DoctorRecord, EntityStore, HospitalRecord


def make_doctor(ident, hospitals, departments, score=5.0):
    return DoctorRecord(id=ident, name=ident, hospital_ids=frozenset(hospitals),
                        department_ids=frozenset(departments), qualification_score=score,
                        overall_experience_years=10.0, specialist_experience_years=5.0,
                        like_pct=80.0, vote_count=10, review_count=5,
                        verified=True, claimed=True)


def make_hospital(ident, departments):
    return HospitalRecord(id=ident, name=ident, rating=4.0, stories_count=3,
                          accreditation=None, location_category=None,
                          department_ids=frozenset(departments))


def make_department(ident, doctors, hospitals, doctor_weights=None, hospital_weights=None):
    return DepartmentRecord(id=ident, name=ident, doctor_ids=frozenset(doctors),
                            hospital_ids=frozenset(hospitals),
                            doctor_weights=doctor_weights or {},
                            hospital_weights=hospital_weights or {})


def random_store(rng, n_hospitals=4, n_departments=4, n_doctors=6):
    """A random but internally consistent store with no explicit weights."""
    h_ids = [f"H{i}" for i in range(n_hospitals)]
    d_ids = [f"D{i}" for i in range(n_departments)]
    p_ids = [f"P{i}" for i in range(n_doctors)]
    doctors = {}
    dept_members: dict[str, set[str]] = {d: set() for d in d_ids}
    dept_hosts: dict[str, set[str]] = {d: set() for d in d_ids}
    hosp_depts: dict[str, set[str]] = {h: set() for h in h_ids}
    for p in p_ids:
        hs = list(rng.choice(h_ids, size=rng.integers(1, n_hospitals + 1), replace=False))
        ds = list(rng.choice(d_ids, size=rng.integers(1, n_departments + 1), replace=False))
        doctors[p] = make_doctor(p, hs, ds, score=float(rng.integers(1, 11)))
        for d in ds:
            dept_members[d].add(p)
            for h in hs:
                dept_hosts[d].add(h)
                hosp_depts[h].add(d)
    hospitals = {h: make_hospital(h, hosp_depts[h]) for h in h_ids}
    departments = {d: make_department(d, dept_members[d], dept_hosts[d]) for d in d_ids}
    return EntityStore(doctors=doctors, hospitals=hospitals, departments=departments)


def test_intra_weight_counts_shared_attributes():
    assert intra_weight({"a", "b", "c"}, {"b", "c", "d"}) == 2.0
    assert intra_weight(set(), {"a"}) == 0.0


def test_intra_weight_jaccard_bounded():
    rng = np.random.default_rng(5)
    universe = [f"x{i}" for i in range(10)]
    for _ in range(200):
        a = set(rng.choice(universe, size=rng.integers(0, 10)))
        b = set(rng.choice(universe, size=rng.integers(0, 10)))
        j = intra_weight(a, b, SimilarityMode.JACCARD)
        assert 0.0 <= j <= 1.0
        if a == b and a:
            assert j == 1.0
    assert intra_weight(set(), set(), SimilarityMode.JACCARD) == 0.0


def test_demo_intra_blocks_exact(demo_store):
    expected = {
        LayerId.HOSPITAL: [[0, 2, 1, 1], [2, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]],
        LayerId.DEPARTMENT: [[0, 1, 1, 0], [1, 0, 0, 0], [1, 0, 0, 1], [0, 0, 1, 0]],
        LayerId.DOCTOR: [[0, 1, 2, 2, 1], [1, 0, 1, 1, 0], [2, 1, 0, 2, 1],
                         [2, 1, 2, 0, 1], [1, 0, 1, 1, 0]],
    }
    for layer, want in expected.items():
        block = build_intra_layer(demo_store, layer)
        assert block.weights.tolist() == [[float(x) for x in row] for row in want]


def test_intra_block_symmetric_zero_diagonal(demo_store):
    for layer in LayerId:
        block = build_intra_layer(demo_store, layer)
        assert (block.weights == block.weights.T).all()
        assert (np.diagonal(block.weights) == 0).all()


def test_node_order_is_lexicographic(demo_store):
    network = build_network(demo_store)
    for layer in LayerId:
        ids = network.node_ids(layer)
        assert list(ids) == sorted(ids)


def test_co_affiliation_matches_brute_force():
    rng = np.random.default_rng(42)
    for _ in range(25):
        store = random_store(rng)
        block = build_inter_layer(store, LayerId.HOSPITAL, LayerId.DEPARTMENT)
        for i, h in enumerate(block.row_ids):
            for j, d in enumerate(block.col_ids):
                dept = store.departments[d]
                member = d in store.hospitals[h].department_ids or h in dept.hospital_ids
                count = sum(1 for doc in store.doctors.values()
                            if h in doc.hospital_ids and d in doc.department_ids)
                want = 0.0 if not member else (float(count) if count else 1.0)
                assert block.weights[i, j] == want, (h, d)


def test_membership_gates_hospital_department_cells():
    # P1 works at H2 but D1 is not present at H2: no (H2, D1) edge
    store = EntityStore(
        doctors={"P1": make_doctor("P1", ["H1", "H2"], ["D1"])},
        hospitals={"H1": make_hospital("H1", ["D1"]), "H2": make_hospital("H2", [])},
        departments={"D1": make_department("D1", ["P1"], ["H1"])},
    )
    block = build_inter_layer(store, LayerId.HOSPITAL, LayerId.DEPARTMENT)
    assert block.weights.tolist() == [[1.0], [0.0]]


def test_declared_membership_without_doctors_keeps_edge():
    store = EntityStore(
        doctors={"P1": make_doctor("P1", ["H1"], ["D1"])},
        hospitals={"H1": make_hospital("H1", ["D1", "D2"])},
        departments={"D1": make_department("D1", ["P1"], ["H1"]),
                     "D2": make_department("D2", [], ["H1"])},
    )
    block = build_inter_layer(store, LayerId.HOSPITAL, LayerId.DEPARTMENT)
    assert block.weights.tolist() == [[1.0, 1.0]]


def test_explicit_hospital_weights_override(demo_store):
    block = build_inter_layer(demo_store, LayerId.HOSPITAL, LayerId.DEPARTMENT)
    assert block.weights.tolist() == [
        [2, 1, 1, 0], [1, 2, 0, 0], [2, 0, 0, 1], [1, 0, 0, 0]]


def test_department_doctor_block_uses_weights_then_scores(demo_store):
    block = build_inter_layer(demo_store, LayerId.DEPARTMENT, LayerId.DOCTOR)
    assert block.weights.tolist() == [
        [10, 6, 8, 0, 0], [0, 0, 4, 6, 0], [0, 8, 0, 0, 4], [0, 0, 0, 0, 6]]


def test_qualification_score_fallback():
    store = EntityStore(
        doctors={"P1": make_doctor("P1", ["H1"], ["D1"], score=7.0)},
        hospitals={"H1": make_hospital("H1", ["D1"])},
        departments={"D1": make_department("D1", ["P1"], ["H1"])},
    )
    block = build_inter_layer(store, LayerId.DEPARTMENT, LayerId.DOCTOR)
    assert block.weights.tolist() == [[7.0]]


def test_equipment_adjusted_weight():
    assert equipment_adjusted_weight(3, [2.0, 0.5]) == 5.5
    assert equipment_adjusted_weight(0, []) == 0.0
    with pytest.raises(NegativePriorityError):
        equipment_adjusted_weight(3, [-1.0])
    with pytest.raises(NegativePriorityError):
        equipment_adjusted_weight(-1, [])


def test_equipment_priorities_extend_cell(demo_store):
    block = build_inter_layer(demo_store, LayerId.HOSPITAL, LayerId.DEPARTMENT,
                              equipment_priorities={("H1", "D1"): [3.0, 1.0]})
    assert block.weights[0, 0] == 6.0  # 2 doctors + 4 priority
    assert block.weights[1, 0] == 1.0  # other cells untouched


def test_unsupported_pair_raises(demo_store):
    with pytest.raises(UnsupportedLayerPairError):
        build_inter_layer(demo_store, LayerId.HOSPITAL, LayerId.DOCTOR)
    with pytest.raises(UnsupportedLayerPairError):
        build_inter_layer(demo_store, LayerId.DEPARTMENT, LayerId.HOSPITAL)


def test_build_network_provenance(demo_store):
    network = build_network(demo_store, SimilarityMode.JACCARD)
    assert network.provenance["similarity_mode"] == "jaccard"
    assert network.provenance["built"] == demo_store.counts()


def test_permutation_invariance():
    rng = np.random.default_rng(7)
    store = random_store(rng)
    shuffled = EntityStore(
        doctors=dict(reversed(store.doctors.items())),
        hospitals=dict(reversed(store.hospitals.items())),
        departments=dict(reversed(store.departments.items())),
    )
    a = build_network(store)
    b = build_network(shuffled)
    for layer in LayerId:
        assert a.node_ids(layer) == b.node_ids(layer)
        assert (a.intra[layer].weights == b.intra[layer].weights).all()
    for pair in a.inter:
        assert (a.inter[pair].weights == b.inter[pair].weights).all()
