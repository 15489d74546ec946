"""Flat-file ingestion: entity records, CSV parsing, cleaning, rating derivation.

Input is three CSV files (doctors, hospitals, departments) with documented
headers. Membership cells are ``;``-separated id lists; an element may carry an
optional ``:weight`` suffix (``P1:10;P2:6``) giving the belongs-to weight for
that specific pair. Departments use this to pin per-doctor qualification
weights and per-hospital doctor counts; elements without a suffix fall back to
the scalar defaults (the doctor's own qualification score, or the count of
co-affiliated doctors computed from the doctor table).
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InputError, MalformedRowError, MissingColumnError

RATING_SCALE = 5.0

DOCTOR_COLUMNS = (
    "id", "name", "hospital_ids", "department_ids", "qualification_score",
    "overall_experience_years", "specialist_experience_years", "like_pct",
    "vote_count", "review_count", "verified", "claimed",
)
HOSPITAL_COLUMNS = (
    "id", "name", "rating", "stories_count", "accreditation",
    "location_category", "department_ids",
)
DEPARTMENT_COLUMNS = ("id", "name", "doctor_ids", "hospital_ids")

_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


@dataclass(frozen=True)
class DoctorRecord:
    id: str
    name: str
    hospital_ids: frozenset[str]
    department_ids: frozenset[str]
    qualification_score: float | None
    overall_experience_years: float | None
    specialist_experience_years: float | None
    like_pct: float | None
    vote_count: int
    review_count: int
    verified: bool
    claimed: bool


@dataclass(frozen=True)
class HospitalRecord:
    id: str
    name: str
    rating: float | None
    stories_count: int
    accreditation: str | None
    location_category: str | None
    department_ids: frozenset[str]


@dataclass(frozen=True)
class DepartmentRecord:
    id: str
    name: str
    doctor_ids: frozenset[str]
    hospital_ids: frozenset[str]
    #: explicit per-doctor belongs-to weights (subset of doctor_ids)
    doctor_weights: dict[str, float] = field(default_factory=dict)
    #: explicit per-hospital doctor counts (subset of hospital_ids)
    hospital_weights: dict[str, float] = field(default_factory=dict)


@dataclass
class EntityStore:
    """All parsed records, keyed by id."""

    doctors: dict[str, DoctorRecord] = field(default_factory=dict)
    hospitals: dict[str, HospitalRecord] = field(default_factory=dict)
    departments: dict[str, DepartmentRecord] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def counts(self) -> dict[str, int]:
        return {
            "doctors": len(self.doctors),
            "hospitals": len(self.hospitals),
            "departments": len(self.departments),
        }


# --- cell parsers ---

def _parse_members(cell: str, path: str, line: int, what: str) -> tuple[frozenset[str], dict[str, float]]:
    ids: set[str] = set()
    weights: dict[str, float] = {}
    for part in cell.split(";"):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            ident, _, raw = part.partition(":")
            ident = ident.strip()
            try:
                weight = float(raw)
            except ValueError:
                raise MalformedRowError(path, line, f"{what}: bad weight {raw!r} for {ident!r}")
            if weight < 0:
                raise MalformedRowError(path, line, f"{what}: negative weight for {ident!r}")
            weights[ident] = weight
        else:
            ident = part
        if not ident:
            raise MalformedRowError(path, line, f"{what}: empty id in list")
        if ident in ids:
            raise MalformedRowError(path, line, f"{what}: duplicate id {ident!r}")
        ids.add(ident)
    return frozenset(ids), weights


def _parse_float(cell: str, path: str, line: int, what: str,
                 lo: float | None = None, hi: float | None = None) -> float | None:
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError:
        raise MalformedRowError(path, line, f"{what}: not a number: {cell!r}")
    if value != value:
        raise MalformedRowError(path, line, f"{what}: NaN is not a value")
    if lo is not None and value < lo or hi is not None and value > hi:
        raise MalformedRowError(path, line, f"{what}: {value} outside [{lo}, {hi}]")
    return value


def _parse_count(cell: str, path: str, line: int, what: str) -> int:
    cell = cell.strip()
    if not cell:
        return 0
    try:
        value = int(cell)
    except ValueError:
        raise MalformedRowError(path, line, f"{what}: not an integer: {cell!r}")
    if value < 0:
        raise MalformedRowError(path, line, f"{what}: negative count")
    return value


def _parse_bool(cell: str, path: str, line: int, what: str) -> bool:
    word = cell.strip().lower()
    if word not in _BOOL_WORDS:
        raise MalformedRowError(path, line, f"{what}: expected true/false, got {cell!r}")
    return _BOOL_WORDS[word]


def _read_rows(path: Path, columns: tuple[str, ...]):
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumnError(f"{path}: file is empty, expected header {','.join(columns)}")
        header = [h.strip() for h in header]
        missing = [c for c in columns if c not in header]
        if missing:
            raise MissingColumnError(f"{path}: missing column(s) {', '.join(missing)}")
        index = {c: header.index(c) for c in columns}
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise MalformedRowError(str(path), line, f"expected {len(header)} fields, got {len(row)}")
            yield line, {c: row[index[c]] for c in columns}


def parse_store(doctors_path, hospitals_path, departments_path) -> EntityStore:
    """Parse the three entity CSVs into an uncleaned store.

    Range checks happen here (a like percentage of 130 is a malformed row, not
    a cleanable record); relational checks are clean()'s job.
    """
    store = EntityStore()
    dpath = Path(doctors_path)
    for line, cells in _read_rows(dpath, DOCTOR_COLUMNS):
        ident = cells["id"].strip()
        if not ident:
            raise MalformedRowError(str(dpath), line, "id: must be non-empty")
        if ident in store.doctors:
            raise MalformedRowError(str(dpath), line, f"id: duplicate doctor id {ident!r}")
        hospital_ids, _ = _parse_members(cells["hospital_ids"], str(dpath), line, "hospital_ids")
        department_ids, _ = _parse_members(cells["department_ids"], str(dpath), line, "department_ids")
        overall = _parse_float(cells["overall_experience_years"], str(dpath), line,
                               "overall_experience_years", lo=0.0)
        specialist = _parse_float(cells["specialist_experience_years"], str(dpath), line,
                                  "specialist_experience_years", lo=0.0)
        if overall is not None and specialist is not None and specialist > overall:
            raise MalformedRowError(str(dpath), line,
                                    "specialist_experience_years exceeds overall_experience_years")
        store.doctors[ident] = DoctorRecord(
            id=ident,
            name=cells["name"].strip(),
            hospital_ids=hospital_ids,
            department_ids=department_ids,
            qualification_score=_parse_float(cells["qualification_score"], str(dpath), line,
                                             "qualification_score", lo=0.0),
            overall_experience_years=overall,
            specialist_experience_years=specialist,
            like_pct=_parse_float(cells["like_pct"], str(dpath), line, "like_pct", lo=0.0, hi=100.0),
            vote_count=_parse_count(cells["vote_count"], str(dpath), line, "vote_count"),
            review_count=_parse_count(cells["review_count"], str(dpath), line, "review_count"),
            verified=_parse_bool(cells["verified"], str(dpath), line, "verified"),
            claimed=_parse_bool(cells["claimed"], str(dpath), line, "claimed"),
        )

    hpath = Path(hospitals_path)
    for line, cells in _read_rows(hpath, HOSPITAL_COLUMNS):
        ident = cells["id"].strip()
        if not ident:
            raise MalformedRowError(str(hpath), line, "id: must be non-empty")
        if ident in store.hospitals:
            raise MalformedRowError(str(hpath), line, f"id: duplicate hospital id {ident!r}")
        department_ids, _ = _parse_members(cells["department_ids"], str(hpath), line, "department_ids")
        store.hospitals[ident] = HospitalRecord(
            id=ident,
            name=cells["name"].strip(),
            rating=_parse_float(cells["rating"], str(hpath), line, "rating", lo=0.0, hi=RATING_SCALE),
            stories_count=_parse_count(cells["stories_count"], str(hpath), line, "stories_count"),
            accreditation=cells["accreditation"].strip() or None,
            location_category=cells["location_category"].strip().lower() or None,
            department_ids=department_ids,
        )

    ppath = Path(departments_path)
    for line, cells in _read_rows(ppath, DEPARTMENT_COLUMNS):
        ident = cells["id"].strip()
        if not ident:
            raise MalformedRowError(str(ppath), line, "id: must be non-empty")
        if ident in store.departments:
            raise MalformedRowError(str(ppath), line, f"id: duplicate department id {ident!r}")
        doctor_ids, doctor_weights = _parse_members(cells["doctor_ids"], str(ppath), line, "doctor_ids")
        hospital_ids, hospital_weights = _parse_members(cells["hospital_ids"], str(ppath), line, "hospital_ids")
        store.departments[ident] = DepartmentRecord(
            id=ident,
            name=cells["name"].strip(),
            doctor_ids=doctor_ids,
            hospital_ids=hospital_ids,
            doctor_weights=doctor_weights,
            hospital_weights=hospital_weights,
        )

    store.provenance = {"raw": store.counts()}
    return store


# --- cleaning ---

def _doctor_required_fields_ok(doc: DoctorRecord) -> bool:
    return bool(doc.hospital_ids) and bool(doc.department_ids) \
        and doc.qualification_score is not None and doc.overall_experience_years is not None


def clean(store: EntityStore) -> EntityStore:
    """Return a new store with untrustworthy records removed and references repaired.

    Removes doctors that are unclaimed, unverified, or missing required fields
    (hospital and department memberships, qualification score, overall
    experience); hospitals without a rating; departments left with no doctors.
    Doctor<->department membership is symmetrized (union of both declarations)
    and dangling ids are pruned. Runs to a fixed point, so the result is
    idempotent under re-cleaning even when drops cascade.
    """
    doctors = dict(store.doctors)
    hospitals = dict(store.hospitals)
    departments = dict(store.departments)

    # one-time symmetrization of the membership relation
    member_of: dict[str, set[str]] = {p: set(doc.department_ids) for p, doc in doctors.items()}
    for d, dept in departments.items():
        for p in dept.doctor_ids:
            if p in member_of:
                member_of[p].add(d)
    doctors = {
        p: dataclasses.replace(doc, department_ids=frozenset(member_of[p]))
        for p, doc in doctors.items()
    }
    departments = {
        d: dataclasses.replace(
            dept,
            doctor_ids=dept.doctor_ids | {p for p, dm in member_of.items() if d in dm},
        )
        for d, dept in departments.items()
    }

    while True:
        doctors = {p: doc for p, doc in doctors.items()
                   if doc.verified and doc.claimed and _doctor_required_fields_ok(doc)}
        hospitals = {h: rec for h, rec in hospitals.items() if rec.rating is not None}
        departments = {d: dept for d, dept in departments.items()
                       if dept.doctor_ids & set(doctors)}

        changed = False
        repaired_doctors = {}
        for p, doc in doctors.items():
            hs = doc.hospital_ids & set(hospitals)
            ds = doc.department_ids & set(departments)
            if hs != doc.hospital_ids or ds != doc.department_ids:
                doc = dataclasses.replace(doc, hospital_ids=hs, department_ids=ds)
                changed = True
            repaired_doctors[p] = doc
        repaired_hospitals = {}
        for h, rec in hospitals.items():
            ds = rec.department_ids & set(departments)
            if ds != rec.department_ids:
                rec = dataclasses.replace(rec, department_ids=ds)
                changed = True
            repaired_hospitals[h] = rec
        repaired_departments = {}
        for d, dept in departments.items():
            ps = dept.doctor_ids & set(doctors)
            hs = dept.hospital_ids & set(hospitals)
            if ps != dept.doctor_ids or hs != dept.hospital_ids:
                dept = dataclasses.replace(
                    dept,
                    doctor_ids=ps,
                    hospital_ids=hs,
                    doctor_weights={p: w for p, w in dept.doctor_weights.items() if p in ps},
                    hospital_weights={h: w for h, w in dept.hospital_weights.items() if h in hs},
                )
                changed = True
            repaired_departments[d] = dept

        doctors, hospitals, departments = repaired_doctors, repaired_hospitals, repaired_departments
        if not changed and all(_doctor_required_fields_ok(doc) for doc in doctors.values()) \
                and all(dept.doctor_ids for dept in departments.values()):
            break

    out = EntityStore(
        doctors={p: doctors[p] for p in sorted(doctors)},
        hospitals={h: hospitals[h] for h in sorted(hospitals)},
        departments={d: departments[d] for d in sorted(departments)},
        provenance=dict(store.provenance),
    )
    out.provenance["filtered"] = out.counts()
    return out


# --- ratings ---

def like_pct_to_rating(like_pct: float) -> float:
    """Map a like percentage (0..100) onto the 0..5 rating scale."""
    if not 0.0 <= like_pct <= 100.0:
        raise ValueError(f"like_pct must be within [0, 100], got {like_pct}")
    return like_pct / 20.0


def doctor_rating(doc: DoctorRecord) -> float | None:
    return None if doc.like_pct is None else like_pct_to_rating(doc.like_pct)


def derive_department_rating(dept: DepartmentRecord, store: EntityStore) -> float:
    """Review-count-weighted mean rating of the department's rated members.

    Members without a like percentage carry no rating and are skipped; if no
    member is rated the department rates 0. When every rated member has zero
    reviews the weights collapse, so the plain mean is used instead.
    """
    rated = [(like_pct_to_rating(doc.like_pct), doc.review_count)
             for p in sorted(dept.doctor_ids)
             if (doc := store.doctors.get(p)) is not None and doc.like_pct is not None]
    if not rated:
        return 0.0
    total_weight = sum(w for _, w in rated)
    if total_weight == 0:
        return sum(r for r, _ in rated) / len(rated)
    return sum(r * w for r, w in rated) / total_weight


def ground_truth_ratings(store: EntityStore) -> dict[str, dict[str, float]]:
    """Per-layer rating vectors used as evaluation ground truth.

    Hospitals use their own rating; departments use the derived member rating;
    doctors use the like-percentage mapping. Entities without a rating are
    omitted (they cannot anchor a comparison).
    """
    return {
        "hospital": {h: rec.rating for h, rec in store.hospitals.items() if rec.rating is not None},
        "department": {d: derive_department_rating(dept, store)
                       for d, dept in store.departments.items()},
        "doctor": {p: like_pct_to_rating(doc.like_pct)
                   for p, doc in store.doctors.items() if doc.like_pct is not None},
    }


def baseline_columns(store: EntityStore) -> dict[str, dict[str, dict[str, float]]]:
    """Raw per-entity columns used as ranking baselines, per layer."""
    doctors_at: dict[str, int] = {h: 0 for h in store.hospitals}
    for doc in store.doctors.values():
        for h in doc.hospital_ids:
            if h in doctors_at:
                doctors_at[h] += 1
    return {
        "hospital": {
            "doctor_count": {h: float(doctors_at[h]) for h in store.hospitals},
            "department_count": {h: float(len(rec.department_ids))
                                 for h, rec in store.hospitals.items()},
            "stories_count": {h: float(rec.stories_count) for h, rec in store.hospitals.items()},
        },
        "department": {
            "doctor_count": {d: float(len(dept.doctor_ids))
                             for d, dept in store.departments.items()},
            "review_count": {d: float(sum(store.doctors[p].review_count
                                          for p in dept.doctor_ids if p in store.doctors))
                             for d, dept in store.departments.items()},
        },
        "doctor": {
            "vote_count": {p: float(doc.vote_count) for p, doc in store.doctors.items()},
            "review_count": {p: float(doc.review_count) for p, doc in store.doctors.items()},
            "overall_experience_years": {p: float(doc.overall_experience_years or 0.0)
                                         for p, doc in store.doctors.items()},
            "specialist_experience_years": {p: float(doc.specialist_experience_years or 0.0)
                                            for p, doc in store.doctors.items()},
        },
    }


# --- serialization (canonical form; parse -> serialize -> parse is identity) ---

def _format_number(value: float | None) -> str:
    if value is None:
        return ""
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _format_members(ids: frozenset[str], weights: dict[str, float] | None = None) -> str:
    parts = []
    for ident in sorted(ids):
        if weights and ident in weights:
            parts.append(f"{ident}:{_format_number(weights[ident])}")
        else:
            parts.append(ident)
    return ";".join(parts)


def serialize_store(store: EntityStore, doctors_path, hospitals_path, departments_path) -> None:
    """Write the store back out in the input CSV format, canonically ordered."""
    with open(doctors_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(DOCTOR_COLUMNS)
        for p in sorted(store.doctors):
            doc = store.doctors[p]
            writer.writerow([
                doc.id, doc.name,
                _format_members(doc.hospital_ids), _format_members(doc.department_ids),
                _format_number(doc.qualification_score),
                _format_number(doc.overall_experience_years),
                _format_number(doc.specialist_experience_years),
                _format_number(doc.like_pct),
                str(doc.vote_count), str(doc.review_count),
                "true" if doc.verified else "false",
                "true" if doc.claimed else "false",
            ])
    with open(hospitals_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(HOSPITAL_COLUMNS)
        for h in sorted(store.hospitals):
            rec = store.hospitals[h]
            writer.writerow([
                rec.id, rec.name, _format_number(rec.rating), str(rec.stories_count),
                rec.accreditation or "", rec.location_category or "",
                _format_members(rec.department_ids),
            ])
    with open(departments_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(DEPARTMENT_COLUMNS)
        for d in sorted(store.departments):
            dept = store.departments[d]
            writer.writerow([
                dept.id, dept.name,
                _format_members(dept.doctor_ids, dept.doctor_weights),
                _format_members(dept.hospital_ids, dept.hospital_weights),
            ])
